//! Singular-value tails of Gaussian matrices, small-ball probabilities of
//! sign sums, and the diameter event of the frozen factor.

use lorabounds::advbound::{gordon_verify, small_ball, small_ball_exact, DEFAULT_GORDON_C};
use lorabounds::empiric::diameter_event_frequency;
use lorabounds::numkit::RngState;

pub fn run_example() -> lorabounds::Result<()> {
    let rng = RngState::new(3);
    for eta in [0.5, 1.0, 2.0] {
        let g = gordon_verify(
            64,
            4,
            eta,
            2000,
            DEFAULT_GORDON_C,
            &rng.split(eta.to_bits()),
        )?;
        println!(
            "eta={eta}: P(s_min < 8 - 2 - eta) ~ {:.4} vs bound {:.4} (mean s_min {:.3})",
            g.failure_rate, g.bound, g.mean_s_min
        );
    }
    println!(
        "P(|sum of 100 signs| <= 2) = {:.6}",
        small_ball_exact(100, 2.0)?
    );
    for n in [16, 64, 256, 1024] {
        let est = small_ball(n, 2.0, 20_000, &mut rng.split(n as u64))?;
        println!(
            "N={n:>5}  p_2 = {:.4} +- {:.4}",
            est.p_hat, est.standard_error
        );
    }
    let d = diameter_event_frequency(32, 4, 1.0, 1.0, 0.05, 500, &mut rng.split(99))?;
    println!(
        "diameter event: {:.3} (signed rows), {:.3} (worst case), floor {:.3}, R={:.3}",
        d.frequency, d.frequency_worst_case, d.floor, d.radius
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> lorabounds::Result<()> {
    run_example()
}
