//! Evaluates the upper bound for a small network and prints every
//! intermediate quantity, then shows how the bound moves with `N` and `r`.

use lorabounds::boundcalc::{dudley_integral_bound, theorem1_bound, BoundConfig};
use lorabounds::netcore::{Activation, Architecture};

pub fn run_example() -> lorabounds::Result<()> {
    let arch = Architecture::new(4, 1, 2, 32, 4, Activation::Relu)?;
    let cfg = BoundConfig {
        arch,
        box_bound: 1.0,
        nu: 1.0,
        r0: 1.0,
        n_samples: 1_000_000,
        delta: 0.05,
        c2: 1.0,
        loss_lipschitz: 1.0,
    };
    let report = theorem1_bound(&cfg)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    println!(
        "log covering number at radius 0.1: {:.3}",
        report.covering_log(0.1)
    );
    println!(
        "numerical Dudley objective at its minimiser: {:.4}",
        dudley_integral_bound(report.q_formula, report.a_term, cfg.n_samples)?
    );

    println!("\n{:>10} {:>10}", "N", "G*");
    for n in [1e4, 1e5, 1e6, 1e7, 1e8] {
        let g = theorem1_bound(&BoundConfig {
            n_samples: n as u64,
            ..cfg
        })?
        .g_star;
        println!("{:>10.0e} {:>10.4}", n, g);
    }
    println!("\n{:>4} {:>10}", "r", "G*");
    for r in [1, 2, 4, 8, 16] {
        let g = theorem1_bound(&BoundConfig {
            arch: arch.with_rank(r)?,
            ..cfg
        })?
        .g_star;
        println!("{:>4} {:>10.4}", r, g);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> lorabounds::Result<()> {
    run_example()
}
