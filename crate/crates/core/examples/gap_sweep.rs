//! A small gap-versus-rank sweep, written as CSV to standard output.

use lorabounds::empiric::{gap_sweep, mean_gaps, write_csv, SweepConfig, TaskSpec, TrainConfig};
use lorabounds::netcore::{Activation, Architecture};

pub fn sweep_config() -> lorabounds::Result<SweepConfig> {
    let mut task = TaskSpec::new(Architecture::new(8, 1, 2, 32, 4, Activation::Relu)?);
    task.noise_std = 0.3;
    task.target_box = 0.3;
    task.target_nu = 0.5;
    Ok(SweepConfig {
        task,
        r_values: vec![1, 4],
        n_values: vec![200],
        seeds: vec![0, 1],
        base_seed: 0,
        train: TrainConfig {
            steps: 1000,
            learning_rate: 0.1,
            batch_size: 16,
            box_bound: 1.0,
            seed: 0,
            eval_every: 250,
        },
        nu: 0.5,
        delta: 0.05,
        c2: 1.0,
        holdout_size: 5000,
        n_model_draws: 2,
        record_wallclock: false,
    })
}

pub fn run_example() -> lorabounds::Result<()> {
    let records = gap_sweep(&sweep_config()?, 2)?;
    write_csv(&records, std::io::stdout())?;
    for (r, n, gap) in mean_gaps(&records) {
        println!("# r={r} N={n} mean gap {gap:.4}");
    }
    for rec in &records {
        assert!(rec.gap <= rec.g_star && rec.gap <= rec.sup_gap_witness);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> lorabounds::Result<()> {
    run_example()
}
