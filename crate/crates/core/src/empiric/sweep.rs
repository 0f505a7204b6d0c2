use std::io::Write;
use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    empirical_risk, train_projected_sgd, LabeledSample, LoraModel, SyntheticTask, TaskSpec,
    TrainConfig,
};
use crate::boundcalc::{theorem1_bound, BoundConfig};
use crate::netcore::{init_adapter, LoraAdapter, PretrainedNet};
use crate::numkit::RngState;
use crate::{Error, Result};

/// Fixed CSV header of sweep output.
pub const CSV_HEADER: [&str; 17] = [
    "seed",
    "r",
    "N",
    "q_formula",
    "q_exact",
    "M",
    "nu",
    "delta",
    "train_risk",
    "holdout_risk",
    "gap",
    "G_star",
    "R",
    "A_term",
    "L_lora",
    "wallclock_ms",
    "status",
];

/// Train/holdout risks of one model and the bound it is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub train_risk: f64,
    pub holdout_risk: f64,
    pub gap: f64,
    pub holdout_size: usize,
    pub bound_gstar: f64,
}

pub fn measure_gap(
    net: &PretrainedNet,
    adapter: &LoraAdapter,
    train: &[LabeledSample],
    holdout: &[LabeledSample],
    bound_gstar: f64,
) -> Result<GapEstimate> {
    let model = LoraModel::new(net, adapter);
    let train_risk = empirical_risk(&model, train)?;
    let holdout_risk = empirical_risk(&model, holdout)?;
    Ok(GapEstimate {
        train_risk,
        holdout_risk,
        gap: (holdout_risk - train_risk).abs(),
        holdout_size: holdout.len(),
        bound_gstar,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Diverged,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Diverged => "diverged",
        }
    }
}

/// One `(seed, r, N)` cell of a sweep. Risk fields are NaN for diverged cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub seed: u64,
    pub r: usize,
    pub n: usize,
    pub q_formula: u64,
    pub q_exact: u64,
    pub box_bound: f64,
    pub nu: f64,
    pub delta: f64,
    pub train_risk: f64,
    pub holdout_risk: f64,
    pub gap: f64,
    pub g_star: f64,
    pub radius: f64,
    pub a_term: f64,
    pub l_lora: f64,
    pub wallclock_ms: u64,
    pub status: CellStatus,
    /// Largest gap over the trained adapter and the extra random adapters of
    /// the cell; a lower witness of the uniform gap.
    pub sup_gap_witness: f64,
}

fn default_holdout() -> usize {
    10_000
}

fn default_c2() -> f64 {
    1.0
}

fn default_delta() -> f64 {
    0.05
}

/// Grid and settings of a gap sweep.
///
/// The task's architecture fixes the pre-trained network and the teacher's
/// rank; students reuse it with rank `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub task: TaskSpec,
    pub r_values: Vec<usize>,
    pub n_values: Vec<usize>,
    /// Replication keys; each cell draws from `RngState::new(base_seed).split(seed)`.
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub base_seed: u64,
    /// Training settings; `seed` is replaced by a per-cell value.
    pub train: TrainConfig,
    pub nu: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_c2")]
    pub c2: f64,
    #[serde(default = "default_holdout")]
    pub holdout_size: usize,
    /// Random box adapters scored alongside the trained one for `sup_gap_witness`.
    #[serde(default)]
    pub n_model_draws: usize,
    /// Measure cell wall time; off by default so outputs are reproducible.
    #[serde(default)]
    pub record_wallclock: bool,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r_values.is_empty() || self.n_values.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidInput("sweep grids must be non-empty".into()));
        }
        if self.n_values.contains(&0) {
            return Err(Error::param("n_values", "sample sizes must be >= 1"));
        }
        if self.holdout_size == 0 {
            return Err(Error::param("holdout_size", "must be >= 1"));
        }
        for &r in &self.r_values {
            self.task.arch.with_rank(r)?;
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::param(
                "nu",
                format!("must be positive, got {}", self.nu),
            ));
        }
        self.train.validate()
    }

    pub fn cells(&self) -> Vec<(usize, usize, u64)> {
        let mut cells = Vec::new();
        for &r in &self.r_values {
            for &n in &self.n_values {
                for &seed in &self.seeds {
                    cells.push((r, n, seed));
                }
            }
        }
        cells
    }
}

const TASK_STREAM: u64 = 1;
const ADAPTER_STREAM: u64 = 2;
const DATA_STREAM: u64 = 3;
const HOLDOUT_STREAM: u64 = 4;
const SGD_STREAM: u64 = 5;
const WITNESS_STREAM: u64 = 6;

/// Runs one cell. Streams are derived from `(base_seed, seed)` so that cells sharing a seed
/// share the teacher and holdout set, cells sharing `(seed, r)` share the
/// frozen factor, and cells sharing `(seed, N)` share the training data.
pub fn run_cell(cfg: &SweepConfig, r: usize, n: usize, seed: u64) -> Result<ExperimentRecord> {
    let start = Instant::now();
    let master = RngState::new(cfg.base_seed).split(seed);
    let task = SyntheticTask::teacher_student(&cfg.task, &mut master.split(TASK_STREAM))?;
    let arch = cfg.task.arch.with_rank(r)?;
    let m = cfg.train.box_bound;
    let adapter = init_adapter(
        &mut master.split(ADAPTER_STREAM).split(r as u64),
        &arch,
        cfg.nu,
        m,
    )?;
    let train = task.sample(&mut master.split(DATA_STREAM).split(n as u64), n)?;
    let holdout = task.sample(&mut master.split(HOLDOUT_STREAM), cfg.holdout_size)?;

    let report = theorem1_bound(&BoundConfig {
        arch,
        box_bound: m,
        nu: cfg.nu,
        r0: task.net.r0(),
        n_samples: n as u64,
        delta: cfg.delta,
        c2: cfg.c2,
        loss_lipschitz: 1.0,
    })?;

    let mut sgd = master.split(SGD_STREAM).split(r as u64).split(n as u64);
    let train_cfg = TrainConfig {
        seed: sgd.next_u64(),
        ..cfg.train
    };
    let mut record = ExperimentRecord {
        seed,
        r,
        n,
        q_formula: report.q_formula,
        q_exact: report.q_exact,
        box_bound: m,
        nu: cfg.nu,
        delta: cfg.delta,
        train_risk: f64::NAN,
        holdout_risk: f64::NAN,
        gap: f64::NAN,
        g_star: report.g_star,
        radius: report.r,
        a_term: report.a_term,
        l_lora: report.l_lora,
        wallclock_ms: 0,
        status: CellStatus::Diverged,
        sup_gap_witness: f64::NAN,
    };
    match train_projected_sgd(&task.net, &adapter, &train, &train_cfg) {
        Ok(outcome) => {
            let est = measure_gap(&task.net, &outcome.adapter, &train, &holdout, report.g_star)?;
            let mut witness = est.gap;
            let mut wrng = master.split(WITNESS_STREAM).split(r as u64).split(n as u64);
            for _ in 0..cfg.n_model_draws {
                let other = adapter.with_uniform_trainable(&mut wrng);
                witness = witness
                    .max(measure_gap(&task.net, &other, &train, &holdout, report.g_star)?.gap);
            }
            record.train_risk = est.train_risk;
            record.holdout_risk = est.holdout_risk;
            record.gap = est.gap;
            record.sup_gap_witness = witness;
            record.status = CellStatus::Ok;
        }
        Err(Error::Diverged { .. }) => {}
        Err(e) => return Err(e),
    }
    if cfg.record_wallclock {
        record.wallclock_ms = start.elapsed().as_millis() as u64;
    }
    Ok(record)
}

/// Runs every `(r, N, seed)` cell on a pool of `threads` workers and returns
/// the records sorted by `(r, N, seed)`.
///
/// A cell whose training diverges yields a `diverged` record; any other error
/// aborts the sweep.
pub fn gap_sweep(cfg: &SweepConfig, threads: usize) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    if threads == 0 {
        return Err(Error::param("threads", "must be >= 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let mut records = pool.install(|| {
        cfg.cells()
            .into_par_iter()
            .map(|(r, n, seed)| run_cell(cfg, r, n, seed))
            .collect::<Result<Vec<_>>>()
    })?;
    records.sort_by_key(|rec| (rec.r, rec.n, rec.seed));
    Ok(records)
}

/// Writes records as CSV with the fixed [`CSV_HEADER`].
pub fn write_csv<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for rec in records {
        w.write_record([
            rec.seed.to_string(),
            rec.r.to_string(),
            rec.n.to_string(),
            rec.q_formula.to_string(),
            rec.q_exact.to_string(),
            rec.box_bound.to_string(),
            rec.nu.to_string(),
            rec.delta.to_string(),
            rec.train_risk.to_string(),
            rec.holdout_risk.to_string(),
            rec.gap.to_string(),
            rec.g_star.to_string(),
            rec.radius.to_string(),
            rec.a_term.to_string(),
            rec.l_lora.to_string(),
            rec.wallclock_ms.to_string(),
            rec.status.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean gap over completed seeds for each `(r, N)`, sorted by `(r, N)`.
pub fn mean_gaps(records: &[ExperimentRecord]) -> Vec<(usize, usize, f64)> {
    let mut keys: Vec<(usize, usize)> = records.iter().map(|r| (r.r, r.n)).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.into_iter()
        .filter_map(|(r, n)| {
            let gaps: Vec<f64> = records
                .iter()
                .filter(|rec| rec.r == r && rec.n == n && rec.status == CellStatus::Ok)
                .map(|rec| rec.gap)
                .collect();
            (!gaps.is_empty()).then(|| (r, n, gaps.iter().sum::<f64>() / gaps.len() as f64))
        })
        .collect()
}
