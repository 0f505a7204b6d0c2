//! Independent oracles shared by the integration and acceptance tests.

#![allow(dead_code)]

use astro_float::{BigFloat, Consts, RoundingMode};
use lorabounds::boundcalc::BoundConfig;

const P: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

fn big(x: f64) -> BigFloat {
    BigFloat::from_f64(x, P)
}

fn to_f64(x: &BigFloat) -> f64 {
    format!("{x}").parse().expect("decimal BigFloat")
}

/// `G*` evaluated from the raw configuration in 256-bit arithmetic.
///
/// Every intermediate (ε, R, A, q) is recomputed here from first principles;
/// nothing is taken from the library besides the input struct.
pub fn g_star_big(cfg: &BoundConfig) -> f64 {
    let mut cc = Consts::new().expect("constants cache");
    let a = cfg.arch;
    let (d, dd, t, w, r) = (
        a.input_dim() as f64,
        a.output_dim() as f64,
        a.depth() as f64,
        a.width() as f64,
        a.rank() as f64,
    );
    let one = big(1.0);
    let two = big(2.0);
    let eps = one.sub(&one.sub(&big(cfg.delta), P, RM).sqrt(P, RM), P, RM);
    let log_w = two.mul(&big(w), P, RM).div(&eps, P, RM).ln(P, RM, &mut cc);
    let radius = big(cfg.box_bound).mul(&big(cfg.nu), P, RM).mul(
        &two.mul(&big(r), P, RM).mul(&log_w, P, RM).sqrt(P, RM),
        P,
        RM,
    );
    let ct = big(cfg.c2).mul(&big(t), P, RM);
    let a_term = ct.add(&one, P, RM).mul(
        &two.mul(&radius.add(&big(cfg.r0), P, RM), P, RM)
            .ln(P, RM, &mut cc),
        P,
        RM,
    );
    let q = big(r * (w * (t - 1.0) + d + dd));
    let n = big(cfg.n_samples as f64);
    let inner = big(6.0)
        .mul(&q.mul(&a_term, P, RM).sqrt(P, RM), P, RM)
        .div(&n.sqrt(P, RM), P, RM);
    let first = big(4.0).mul(&inner.min(&one), P, RM);
    let tail = big(8.0)
        .mul(&two.div(&eps, P, RM).ln(P, RM, &mut cc), P, RM)
        .div(&n, P, RM)
        .sqrt(P, RM);
    to_f64(&first.add(&tail, P, RM))
}

/// `P(|Σ_{i≤n} ξᵢ − v| ≤ t)` for Rademacher `ξ`, summing exact big-integer
/// binomial coefficients over `2ⁿ` in 256-bit arithmetic.
pub fn rademacher_window_big(n: usize, v: f64, t: f64) -> f64 {
    let mut total = big(0.0);
    let mut c = big(1.0);
    for k in 0..=n {
        if k > 0 {
            c = c
                .mul(&big((n - k + 1) as f64), P, RM)
                .div(&big(k as f64), P, RM);
        }
        let s = 2.0 * k as f64 - n as f64;
        if (s - v).abs() <= t {
            total = total.add(&c, P, RM);
        }
    }
    let mut denom = big(1.0);
    for _ in 0..n {
        denom = denom.mul(&big(2.0), P, RM);
    }
    to_f64(&total.div(&denom, P, RM))
}

/// Relative error with an absolute floor for values near zero.
pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}
