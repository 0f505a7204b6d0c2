//! Linear versus bilinear factor maps: the slope of the local Lipschitz
//! estimate against the base norm is about 0 with one trained factor and
//! about 1 with both.

use lorabounds::empiric::lipschitz_probe_asymmetric_vs_full;
use lorabounds::netcore::{Activation, Architecture, PretrainedNet};
use lorabounds::numkit::RngState;

pub fn run_example() -> lorabounds::Result<()> {
    let arch = Architecture::new(6, 1, 1, 12, 3, Activation::Relu)?;
    let mut rng = RngState::new(8);
    let net = PretrainedNet::random(arch, &mut rng, 1.0, 0.0)?;
    let rho: Vec<f64> = (0..6).map(|k| 2f64.powi(k)).collect();
    let probe = lipschitz_probe_asymmetric_vs_full(&net, &mut rng, 100, &rho)?;
    for ((r, a), b) in probe
        .rho
        .iter()
        .zip(&probe.one_factor)
        .zip(&probe.two_factor)
    {
        println!("rho={r:>5.1}  one factor {a:.4}  two factors {b:.4}");
    }
    println!(
        "slopes: one factor {:.3}, two factors {:.3}",
        probe.slope_one_factor, probe.slope_two_factor
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> lorabounds::Result<()> {
    run_example()
}
