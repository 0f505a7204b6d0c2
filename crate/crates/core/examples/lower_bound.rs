//! Builds the identity-emulating adapter on a random ReLU net and runs the
//! lower-bound experiment with square and with thin frozen factors.

use lorabounds::advbound::{construct_adversarial, lower_bound_experiment, LowerBoundConfig};
use lorabounds::netcore::{Activation, Architecture, PretrainedNet};
use lorabounds::numkit::{sample_gaussian, RngState};

pub fn run_example() -> lorabounds::Result<()> {
    let mut rng = RngState::new(2);
    let arch = Architecture::new(1, 1, 2, 16, 2, Activation::Relu)?;
    let net = PretrainedNet::random(arch, &mut rng, 1.0, 0.0)?;
    let frozen = arch
        .layer_dims()
        .windows(2)
        .map(|p| sample_gaussian(&mut rng, p[1], arch.rank(), 1.0))
        .collect::<lorabounds::Result<Vec<_>>>()?;
    let inst = construct_adversarial(&net, &frozen, 1.0)?;
    println!(
        "eta*={:.3} M(eta)={:?} C_pre={:.3} residual={:.3e} admissible={}",
        inst.eta_star, inst.m_eta, inst.c_pre, inst.residual, inst.admissible
    );

    let square = LowerBoundConfig {
        depth: 1,
        width: 8,
        rank: 8,
        eta: 3.0,
        delta: 0.1,
        n_samples: 100,
        trials: 2000,
        gordon_c: 0.5,
        c_anti: 3.0 * (2.0 / std::f64::consts::PI).sqrt(),
        weight_scale: 1.0,
    };
    let report = lower_bound_experiment(&square, &RngState::new(7))?;
    println!("square factors: {}", serde_json::to_string(&report)?);
    assert!(report.residual_max <= 1e-8);

    let thin = LowerBoundConfig {
        width: 32,
        rank: 2,
        ..square
    };
    let report = lower_bound_experiment(&thin, &RngState::new(7))?;
    println!("thin factors:   {}", serde_json::to_string(&report)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> lorabounds::Result<()> {
    run_example()
}
