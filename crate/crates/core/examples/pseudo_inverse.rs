//! SVD, pseudo-inverse and operator norm on a thin Gaussian matrix.

use lorabounds::numkit::{operator_norm, pinv, sample_gaussian, svd, Matrix, RngState};

pub fn run_example() -> lorabounds::Result<()> {
    let b = sample_gaussian(&mut RngState::new(1), 12, 3, 1.0)?;
    let s = svd(&b)?;
    println!("singular values {:?}", s.singular_values);
    println!("operator norm   {:.12}", operator_norm(&b));

    let p = pinv(&b)?;
    let left = p.matmul(&b)?;
    let err = left.sub(&Matrix::identity(3))?.max_abs();
    println!("max |B+ B - I| = {err:.2e}");
    let proj = b.matmul(&p)?;
    let idempotent = proj.matmul(&proj)?.sub(&proj)?.max_abs();
    println!("B B+ is a projector: max |P^2 - P| = {idempotent:.2e}");
    assert!(err < 1e-12 && idempotent < 1e-12);
    Ok(())
}

#[allow(dead_code)]
fn main() -> lorabounds::Result<()> {
    run_example()
}
