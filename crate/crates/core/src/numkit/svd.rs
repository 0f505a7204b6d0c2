//! One-sided Jacobi SVD and the quantities derived from it.

use super::Matrix;
use crate::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition `M = U Σ Vᵀ` with `k = min(m, n)`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `m × k`, orthonormal columns.
    pub u: Matrix,
    /// Descending, non-negative, length `k`.
    pub singular_values: Vec<f64>,
    /// `n × k`, orthonormal columns.
    pub v: Matrix,
}

impl SvdResult {
    /// `U Σ Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let k = self.singular_values.len();
        Matrix::from_fn(self.u.rows(), self.v.rows(), |i, j| {
            (0..k)
                .map(|l| self.u[(i, l)] * self.singular_values[l] * self.v[(j, l)])
                .sum()
        })
    }

    pub fn max_singular_value(&self) -> f64 {
        self.singular_values[0]
    }

    pub fn min_singular_value(&self) -> f64 {
        *self.singular_values.last().expect("k >= 1")
    }

    /// Number of singular values strictly above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.singular_values.iter().filter(|s| **s > tol).count()
    }
}

/// Singular value decomposition by Hestenes' one-sided Jacobi rotations.
///
/// Wide inputs are handled through the transpose.
pub fn svd(m: &Matrix) -> Result<SvdResult> {
    if !m.is_finite() {
        return Err(Error::InvalidInput(
            "svd input has non-finite entries".into(),
        ));
    }
    if m.rows() < m.cols() {
        let t = svd_tall(&m.transpose());
        return Ok(SvdResult {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        });
    }
    Ok(svd_tall(m))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn svd_tall(m: &Matrix) -> SvdResult {
    let (rows, n) = m.shape();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let alpha = dot(&cols[i], &cols[i]);
                let beta = dot(&cols[j], &cols[j]);
                let gamma = dot(&cols[i], &cols[j]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(j);
                rotate(&mut left[i], &mut right[0], c, s);
                let (left, right) = v.split_at_mut(j);
                rotate(&mut left[i], &mut right[0], c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(f64, usize)> = cols
        .iter()
        .enumerate()
        .map(|(j, c)| (dot(c, c).sqrt(), j))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let s_max = order[0].0;
    let negligible = rows.max(n) as f64 * f64::EPSILON * s_max;
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut singular_values = Vec::with_capacity(n);
    let mut v_out = Matrix::zeros(n, n);
    for (k, &(sigma, j)) in order.iter().enumerate() {
        singular_values.push(sigma);
        for i in 0..n {
            v_out[(i, k)] = v[j][i];
        }
        let candidate = if sigma > negligible && sigma > 0.0 {
            cols[j].iter().map(|x| x / sigma).collect()
        } else {
            complete_basis(&u_cols, rows)
        };
        u_cols.push(candidate);
    }
    let u = Matrix::from_fn(rows, n, |i, k| u_cols[k][i]);
    SvdResult {
        u,
        singular_values,
        v: v_out,
    }
}

fn rotate(a: &mut [f64], b: &mut [f64], c: f64, s: f64) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xa, yb) = (*x, *y);
        *x = c * xa - s * yb;
        *y = s * xa + c * yb;
    }
}

/// A unit vector orthogonal to every column in `basis`.
fn complete_basis(basis: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for e in 0..dim {
        let mut w = vec![0.0; dim];
        w[e] = 1.0;
        // two passes of Gram-Schmidt
        for _ in 0..2 {
            for b in basis {
                let p = dot(&w, b);
                w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= p * bi);
            }
        }
        let norm = dot(&w, &w).sqrt();
        if best.as_ref().is_none_or(|(n, _)| norm > *n) {
            best = Some((norm, w));
        }
        if norm > 0.5 {
            break;
        }
    }
    let (norm, w) = best.expect("dim >= 1");
    w.into_iter().map(|x| x / norm).collect()
}

/// Default numerical-rank tolerance `max(m, n) · ε · s_max`.
pub fn default_rank_tol(m: &Matrix, s_max: f64) -> f64 {
    m.rows().max(m.cols()) as f64 * f64::EPSILON * s_max
}

/// Moore–Penrose pseudo-inverse with the default rank tolerance.
pub fn pinv(m: &Matrix) -> Result<Matrix> {
    pinv_impl(m, None)
}

/// Moore–Penrose pseudo-inverse; singular values `≤ rank_tol` are treated as zero.
pub fn pinv_with_tol(m: &Matrix, rank_tol: f64) -> Result<Matrix> {
    if !(rank_tol >= 0.0) {
        return Err(Error::param(
            "rank_tol",
            format!("must be >= 0, got {rank_tol}"),
        ));
    }
    pinv_impl(m, Some(rank_tol))
}

fn pinv_impl(m: &Matrix, rank_tol: Option<f64>) -> Result<Matrix> {
    let s = svd(m)?;
    let tol = rank_tol.unwrap_or_else(|| default_rank_tol(m, s.max_singular_value()));
    let inv: Vec<f64> = s
        .singular_values
        .iter()
        .map(|&x| if x > tol { 1.0 / x } else { 0.0 })
        .collect();
    let k = inv.len();
    Ok(Matrix::from_fn(m.cols(), m.rows(), |i, j| {
        (0..k).map(|l| s.v[(i, l)] * inv[l] * s.u[(j, l)]).sum()
    }))
}

/// Largest singular value, by power iteration with repeated squaring on the
/// smaller Gram matrix followed by a Rayleigh quotient.
///
/// Repeated squaring of the normalized Gram matrix `G` is power iteration with
/// exponents `2, 4, 8, …`; iteration stops once consecutive normalized powers
/// differ by less than `1e-12` in Frobenius norm or after 64 squarings.
pub fn operator_norm(m: &Matrix) -> f64 {
    const TOL: f64 = 1e-12;
    const MAX_SQUARINGS: usize = 64;

    if m.max_abs() == 0.0 {
        return 0.0;
    }
    let gram = if m.rows() >= m.cols() {
        m.transpose().matmul(m)
    } else {
        m.matmul(&m.transpose())
    }
    .expect("gram shapes agree");

    let normalize = |g: &Matrix| {
        let f = g.frobenius_norm();
        g.scale(1.0 / f)
    };
    let mut power = normalize(&gram);
    for _ in 0..MAX_SQUARINGS {
        let next = normalize(&power.matmul(&power).expect("square"));
        let change = next.sub(&power).expect("same shape").frobenius_norm();
        power = next;
        if change < TOL {
            break;
        }
    }
    // Columns of a high power of G lie in the leading eigenspace; take the largest.
    let n = power.cols();
    let best_col = (0..n)
        .max_by(|&a, &b| {
            let na: f64 = power.column(a).iter().map(|x| x * x).sum();
            let nb: f64 = power.column(b).iter().map(|x| x * x).sum();
            na.total_cmp(&nb)
        })
        .expect("n >= 1");
    let mut x = power.column(best_col);
    // a few plain power steps polish the direction
    for _ in 0..3 {
        let y = gram.matvec(&x).expect("square");
        let ny = dot(&y, &y).sqrt();
        if ny == 0.0 {
            break;
        }
        x = y.into_iter().map(|v| v / ny).collect();
    }
    let gx = gram.matvec(&x).expect("square");
    let rayleigh = dot(&x, &gx) / dot(&x, &x);
    rayleigh.max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        let s = svd(&Matrix::identity(3)).unwrap();
        assert_eq!(s.singular_values, vec![1.0, 1.0, 1.0]);
        let s = svd(&Matrix::diag(&[3.0, 0.0]).unwrap()).unwrap();
        assert_eq!(s.singular_values, vec![3.0, 0.0]);
        let utu = s.u.transpose().matmul(&s.u).unwrap();
        assert!(utu.sub(&Matrix::identity(2)).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn sorts_descending() {
        let s = svd(&Matrix::diag(&[1.0, 5.0, 3.0]).unwrap()).unwrap();
        assert_eq!(s.singular_values, vec![5.0, 3.0, 1.0]);
    }

    #[test]
    fn pinv_rank_deficient_diagonal() {
        let p = pinv(&Matrix::diag(&[2.0, 0.0]).unwrap()).unwrap();
        assert_eq!(p.as_slice(), &[0.5, 0.0, 0.0, 0.0]);
        assert!(pinv_with_tol(&Matrix::identity(2), -1.0).is_err());
    }

    #[test]
    fn operator_norm_trivial() {
        assert_eq!(operator_norm(&Matrix::zeros(3, 2)), 0.0);
        assert!((operator_norm(&Matrix::diag(&[3.0, 1.0]).unwrap()) - 3.0).abs() < 1e-14);
        // repeated top singular value
        assert!((operator_norm(&Matrix::identity(4)) - 1.0).abs() < 1e-14);
    }
}
