use crate::netcore::{forward_lora, LoraAdapter, PretrainedNet};
use crate::{Error, Result};

/// Functions tabulated on a common grid: `values[f][g]` is `f(x_g)`.
pub type FunctionTable = Vec<Vec<Vec<f64>>>;

/// `max_g ‖f(x_g) − h(x_g)‖₂`.
pub fn grid_sup_distance(f: &[Vec<f64>], h: &[Vec<f64>]) -> f64 {
    f.iter()
        .zip(h)
        .map(|(a, b)| super::risk::distance(a, b))
        .fold(0.0, f64::max)
}

/// Evaluates each adapter (applied to `net`) on every grid point.
pub fn tabulate_lora(
    net: &PretrainedNet,
    adapters: &[LoraAdapter],
    grid: &[Vec<f64>],
) -> Result<FunctionTable> {
    adapters
        .iter()
        .map(|a| grid.iter().map(|x| forward_lora(net, a, x)).collect())
        .collect()
}

/// Size of a greedy farthest-point `ε_cov`-cover of the tabulated functions
/// in the grid sup-norm.
///
/// The first function is the first center; the function farthest from all
/// centers is added until every function is within `eps_cov`. The centers are
/// pairwise more than `eps_cov` apart.
pub fn empirical_cover(functions: &[Vec<Vec<f64>>], eps_cov: f64) -> Result<usize> {
    if functions.is_empty() {
        return Err(Error::InvalidInput("no function samples".into()));
    }
    let grid_len = functions[0].len();
    if grid_len == 0 {
        return Err(Error::InvalidInput("empty grid".into()));
    }
    if functions.iter().any(|f| f.len() != grid_len) {
        return Err(Error::InvalidInput(
            "functions tabulated on different grids".into(),
        ));
    }
    if !(eps_cov > 0.0 && eps_cov.is_finite()) {
        return Err(Error::param(
            "eps_cov",
            format!("must be positive, got {eps_cov}"),
        ));
    }
    let mut dist: Vec<f64> = functions
        .iter()
        .map(|f| grid_sup_distance(f, &functions[0]))
        .collect();
    let mut count = 1;
    loop {
        let (far, &d) = dist
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty");
        if d <= eps_cov {
            return Ok(count);
        }
        count += 1;
        let center = &functions[far];
        for (slot, f) in dist.iter_mut().zip(functions) {
            *slot = slot.min(grid_sup_distance(f, center));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(v: f64) -> Vec<Vec<f64>> {
        vec![vec![v]; 3]
    }

    #[test]
    fn trivial_counts() {
        assert_eq!(empirical_cover(&[constant(0.0)], 0.1).unwrap(), 1);
        assert_eq!(
            empirical_cover(&[constant(0.0), constant(0.3)], 0.1).unwrap(),
            2
        );
        assert_eq!(
            empirical_cover(&[constant(0.0), constant(0.3)], 0.3).unwrap(),
            1
        );
    }

    #[test]
    fn errors() {
        assert!(empirical_cover(&[], 0.1).is_err());
        assert!(empirical_cover(&[vec![]], 0.1).is_err());
        assert!(empirical_cover(&[constant(0.0)], 0.0).is_err());
    }
}
