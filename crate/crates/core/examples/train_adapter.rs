//! Fine-tunes an adapter with projected SGD on a teacher-student task and
//! checks that the frozen factor is untouched and the box is respected.

use lorabounds::empiric::{
    empirical_risk, train_projected_sgd, LoraModel, SyntheticTask, TaskSpec, TrainConfig,
};
use lorabounds::netcore::{init_adapter, Activation, Architecture};
use lorabounds::numkit::RngState;

pub fn run_example() -> lorabounds::Result<()> {
    let arch = Architecture::new(4, 1, 2, 16, 2, Activation::Relu)?;
    let mut spec = TaskSpec::new(arch);
    spec.target_box = 0.3;
    spec.target_nu = 0.5;
    spec.noise_std = 0.05;

    let rng = RngState::new(11);
    let task = SyntheticTask::teacher_student(&spec, &mut rng.split(0))?;
    let train = task.sample(&mut rng.split(1), 500)?;
    let test = task.sample(&mut rng.split(2), 5000)?;
    let adapter = init_adapter(&mut rng.split(3), &arch, 0.5, 1.0)?;

    let cfg = TrainConfig {
        steps: 3000,
        learning_rate: 0.05,
        batch_size: 16,
        box_bound: 1.0,
        seed: 5,
        eval_every: 500,
    };
    let out = train_projected_sgd(&task.net, &adapter, &train, &cfg)?;
    for (step, risk) in &out.loss_trace {
        println!("step {step:>5}  train risk {risk:.4}");
    }
    let test_risk = empirical_risk(&LoraModel::new(&task.net, &out.adapter), &test)?;
    let max_entry = out
        .adapter
        .trainable()
        .iter()
        .map(|m| m.max_abs())
        .fold(0.0, f64::max);
    println!("test risk {test_risk:.4}");
    println!(
        "largest trainable entry {max_entry:.4} (box {})",
        cfg.box_bound
    );
    assert_eq!(out.adapter.frozen_checksum(), adapter.frozen_checksum());
    assert!(max_entry <= cfg.box_bound);
    assert!(out.final_risk() < out.initial_risk());
    Ok(())
}

#[allow(dead_code)]
fn main() -> lorabounds::Result<()> {
    run_example()
}
