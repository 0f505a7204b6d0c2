//! Monte Carlo Rademacher complexity of a sampled LoRA class next to the
//! multi-scale chaining bound and the closed-form Dudley value.

use lorabounds::boundcalc::{dudley_value, BoundConfig};
use lorabounds::empiric::{
    chaining_bound, lora_loss_matrix, rademacher_mc, SyntheticTask, TaskSpec,
};
use lorabounds::netcore::{init_adapter, Activation, Architecture};
use lorabounds::numkit::RngState;

pub fn run_example() -> lorabounds::Result<()> {
    let arch = Architecture::new(2, 1, 1, 8, 2, Activation::Relu)?;
    let rng = RngState::new(4);
    let task = SyntheticTask::teacher_student(&TaskSpec::new(arch), &mut rng.split(0))?;
    let samples = task.sample(&mut rng.split(1), 64)?;
    let template = init_adapter(&mut rng.split(2), &arch, 1.0, 1.0)?;
    let mut draws = rng.split(3);
    let class: Vec<_> = (0..300)
        .map(|_| template.with_uniform_trainable(&mut draws))
        .collect();
    let losses = lora_loss_matrix(&task.net, &class, &samples)?;

    let mc = rademacher_mc(&losses, 2000, &mut rng.split(4))?;
    let chain = chaining_bound(&losses, 12)?;
    let cfg = BoundConfig {
        arch,
        box_bound: 1.0,
        nu: 1.0,
        r0: task.net.r0(),
        n_samples: samples.len() as u64,
        delta: 0.05,
        c2: 1.0,
        loss_lipschitz: 1.0,
    };
    let dudley = dudley_value(&cfg, 0.05)?;
    println!(
        "Monte Carlo estimate {:.4} +- {:.4}",
        mc.estimate, mc.std_error
    );
    println!("chaining bound       {chain:.4}");
    println!("closed-form value    {:.4}", dudley.rademacher_bound);
    assert!(mc.estimate <= chain + 3.0 * mc.std_error);
    Ok(())
}

#[allow(dead_code)]
fn main() -> lorabounds::Result<()> {
    run_example()
}
