//! Command-line front end: strict JSON configs, subcommand dispatch, seeded
//! execution and run manifests.
//!
//! Exit codes are `0` on success, `2` for invalid arguments or configuration
//! and `3` for failures at run time. Every invocation writes a
//! [`RunManifest`], to `<out>.manifest.json` when `--out` is given and to
//! standard error otherwise.

mod config;
mod manifest;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub use config::{TrainCommandConfig, VerifyConfig};
pub use manifest::{CellSummary, RunManifest};

use crate::advbound::{
    gordon_verify, lower_bound_experiment, small_ball, union_gordon, GordonCheck, LowerBoundConfig,
    SmallBallEstimate,
};
use crate::boundcalc::{theorem1_bound, BoundConfig, BoundReport};
use crate::empiric::stats::loglog_slope;
use crate::empiric::{
    diameter_event_frequency, gap_sweep, measure_gap, train_projected_sgd, write_csv, CellStatus,
    DiameterEvent, SweepConfig, SyntheticTask,
};
use crate::netcore::{init_adapter, LoraAdapter};
use crate::numkit::RngState;
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "lorabounds",
    version,
    about = "Generalization bounds and experiments for asymmetric LoRA"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON configuration of the subcommand; unknown keys are rejected.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the seed of the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Evaluate the upper bound and its intermediates (JSON).
    Bound,
    /// Train over an (r, N, seed) grid and record gaps (CSV).
    Sweep,
    /// Run the adversarial lower-bound experiment (JSON).
    Lowerbound,
    /// Monte Carlo checks of the concentration ingredients (JSON).
    Verify,
    /// Fine-tune one adapter on a synthetic task (JSON).
    Train,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Bound => "bound",
            Command::Sweep => "sweep",
            Command::Lowerbound => "lowerbound",
            Command::Verify => "verify",
            Command::Train => "train",
        }
    }
}

/// Failure of a CLI run, classified by exit code.
#[derive(Debug)]
enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

/// Output of a successful subcommand.
struct Produced {
    body: String,
    cells: Option<CellSummary>,
}

fn read_config<T: DeserializeOwned + Default>(
    path: Option<&Path>,
) -> std::result::Result<T, Failure> {
    match path {
        None => Ok(T::default()),
        Some(p) => parse_config(p),
    }
}

fn require_config<T: DeserializeOwned>(
    path: Option<&Path>,
    cmd: Command,
) -> std::result::Result<T, Failure> {
    match path {
        Some(p) => parse_config(p),
        None => Err(Failure::Validation(format!(
            "`{}` requires --config <path>",
            cmd.name()
        ))),
    }
}

fn parse_config<T: DeserializeOwned>(path: &Path) -> std::result::Result<T, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Validation(format!("config {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> std::result::Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn echo<T: Serialize>(manifest: &mut RunManifest, value: &T) {
    manifest.config = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
}

/// Report of the `verify` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub gordon: Vec<GordonCase>,
    pub union_gordon: GordonCheck,
    pub small_ball: SmallBallSweep,
    pub diameter: DiameterEvent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GordonCase {
    pub d_out: usize,
    pub r: usize,
    pub eta: f64,
    #[serde(flatten)]
    pub check: GordonCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallBallSweep {
    pub estimates: Vec<SmallBallEstimate>,
    /// Fitted exponent of `p_t` in `N`.
    pub slope: f64,
}

/// Runs every check of [`VerifyConfig`]. Each check draws from its own split
/// of the seed.
pub fn run_verify(cfg: &VerifyConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let master = RngState::new(cfg.seed);
    let mut gordon = Vec::new();
    for (k, &(d_out, r)) in cfg.gordon_shapes.iter().enumerate() {
        for (j, &eta) in cfg.gordon_etas.iter().enumerate() {
            let rng = master.split(1).split(k as u64).split(j as u64);
            let check = gordon_verify(d_out, r, eta, cfg.gordon_trials, cfg.gordon_c, &rng)?;
            gordon.push(GordonCase {
                d_out,
                r,
                eta,
                check,
            });
        }
    }
    let union = union_gordon(
        &cfg.union_dims,
        cfg.union_rank,
        cfg.union_eta,
        cfg.gordon_trials,
        cfg.gordon_c,
        &master.split(2),
    )?;
    let estimates = cfg
        .small_ball_n
        .iter()
        .map(|&n| {
            small_ball(
                n,
                cfg.small_ball_t,
                cfg.small_ball_trials,
                &mut master.split(3).split(n as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let ns: Vec<f64> = estimates.iter().map(|e| e.n as f64).collect();
    let ps: Vec<f64> = estimates.iter().map(|e| e.p_hat).collect();
    let diameter = diameter_event_frequency(
        cfg.diameter_width,
        cfg.diameter_rank,
        cfg.diameter_nu,
        cfg.diameter_box,
        cfg.diameter_eps,
        cfg.diameter_draws,
        &mut master.split(4),
    )?;
    Ok(VerifyReport {
        gordon,
        union_gordon: union,
        small_ball: SmallBallSweep {
            slope: loglog_slope(&ns, &ps)?,
            estimates,
        },
        diameter,
    })
}

/// Report of the `train` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainReport {
    pub initial_risk: f64,
    pub train_risk: f64,
    pub holdout_risk: f64,
    pub gap: f64,
    #[serde(rename = "G_star")]
    pub g_star: f64,
    pub loss_trace: Vec<(usize, f64)>,
    pub frozen_checksum: u64,
    pub adapter: LoraAdapter,
}

/// Builds the task from `cfg.seed`, fine-tunes a fresh rank-`r` adapter and
/// measures its gap.
pub fn run_train(cfg: &TrainCommandConfig) -> Result<TrainReport> {
    cfg.validate()?;
    let master = RngState::new(cfg.seed);
    let task = SyntheticTask::teacher_student(&cfg.task, &mut master.split(1))?;
    let arch = cfg.task.arch.with_rank(cfg.rank)?;
    let adapter = init_adapter(&mut master.split(2), &arch, cfg.nu, cfg.train.box_bound)?;
    let train = task.sample(&mut master.split(3), cfg.n_train)?;
    let holdout = task.sample(&mut master.split(4), cfg.holdout_size)?;
    let bound = theorem1_bound(&BoundConfig {
        arch,
        box_bound: cfg.train.box_bound,
        nu: cfg.nu,
        r0: task.net.r0(),
        n_samples: cfg.n_train as u64,
        delta: 0.05,
        c2: 1.0,
        loss_lipschitz: 1.0,
    })?;
    let outcome = train_projected_sgd(&task.net, &adapter, &train, &cfg.train)?;
    let gap = measure_gap(&task.net, &outcome.adapter, &train, &holdout, bound.g_star)?;
    Ok(TrainReport {
        initial_risk: outcome.initial_risk(),
        train_risk: gap.train_risk,
        holdout_risk: gap.holdout_risk,
        gap: gap.gap,
        g_star: bound.g_star,
        loss_trace: outcome.loss_trace,
        frozen_checksum: outcome.adapter.frozen_checksum(),
        adapter: outcome.adapter,
    })
}

fn dispatch(
    cli: &Cli,
    threads: usize,
    manifest: &mut RunManifest,
) -> std::result::Result<Produced, Failure> {
    let path = cli.config.as_deref();
    let plain = |body| Produced { body, cells: None };
    match cli.command {
        Command::Bound => {
            let cfg: BoundConfig = require_config(path, cli.command)?;
            echo(manifest, &cfg);
            let report: BoundReport = theorem1_bound(&cfg)?;
            Ok(plain(to_json(&report)?))
        }
        Command::Sweep => {
            let mut cfg: SweepConfig = require_config(path, cli.command)?;
            if let Some(s) = cli.seed {
                cfg.base_seed = s;
            }
            manifest.seed = Some(cfg.base_seed);
            echo(manifest, &cfg);
            let records = gap_sweep(&cfg, threads)?;
            let mut buf = Vec::new();
            write_csv(&records, &mut buf)?;
            let ok = records
                .iter()
                .filter(|r| r.status == CellStatus::Ok)
                .count();
            Ok(Produced {
                body: String::from_utf8(buf).map_err(|e| Failure::Runtime(e.to_string()))?,
                cells: Some(CellSummary {
                    total: records.len(),
                    ok,
                    diverged: records.len() - ok,
                }),
            })
        }
        Command::Lowerbound => {
            let mut cfg: LowerBoundConfigFile = require_config(path, cli.command)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            manifest.seed = Some(cfg.seed);
            echo(manifest, &cfg);
            let report = lower_bound_experiment(&cfg.experiment, &RngState::new(cfg.seed))?;
            Ok(plain(to_json(&report)?))
        }
        Command::Verify => {
            let mut cfg: VerifyConfig = read_config(path)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            manifest.seed = Some(cfg.seed);
            echo(manifest, &cfg);
            Ok(plain(to_json(&run_verify(&cfg)?)?))
        }
        Command::Train => {
            let mut cfg: TrainCommandConfig = require_config(path, cli.command)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            manifest.seed = Some(cfg.seed);
            echo(manifest, &cfg);
            Ok(plain(to_json(&run_train(&cfg)?)?))
        }
    }
}

/// `lowerbound` configuration: the experiment plus its seed.
#[derive(Debug, Clone, Copy, PartialEq, serde::Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LowerBoundConfigFile {
    pub experiment: LowerBoundConfig,
    #[serde(default)]
    pub seed: u64,
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Parses `args` (including the program name), runs the subcommand and returns
/// the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
        }
    };
    let threads = cli
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from));
    let mut manifest = RunManifest::new(cli.command.name(), threads);
    let start = Instant::now();

    let result = if threads == 0 {
        Err(Failure::Validation("--threads must be >= 1".into()))
    } else {
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(|| dispatch(&cli, threads, &mut manifest)),
            Err(e) => Err(Failure::Runtime(format!("thread pool: {e}"))),
        }
    };

    let result = result.and_then(|produced| {
        match &cli.out {
            Some(out) => {
                fs::write(out, &produced.body).map_err(|e| {
                    Failure::Runtime(format!("cannot write {}: {e}", out.display()))
                })?;
                manifest.outputs.push(out.display().to_string());
            }
            None => stdout
                .write_all(produced.body.as_bytes())
                .map_err(|e| Failure::Runtime(e.to_string()))?,
        }
        Ok(produced.cells)
    });

    let code = match result {
        Ok(cells) => {
            manifest.cells = cells;
            EXIT_OK
        }
        Err(f) => {
            let (code, status, msg) = match f {
                Failure::Validation(m) => (EXIT_VALIDATION, "validation_error", m),
                Failure::Runtime(m) => (EXIT_RUNTIME, "runtime_error", m),
            };
            let _ = writeln!(stderr, "error: {msg}");
            manifest.status = status.to_string();
            manifest.error = Some(msg);
            code
        }
    };
    manifest.exit_code = code;
    manifest.wallclock_ms = start.elapsed().as_millis() as u64;

    let text = serde_json::to_string_pretty(&manifest).unwrap_or_default() + "\n";
    match &cli.out {
        Some(out) => {
            let path = manifest_path(out);
            if let Err(e) = fs::write(&path, &text) {
                let _ = writeln!(
                    stderr,
                    "error: cannot write manifest {}: {e}",
                    path.display()
                );
                let _ = stderr.write_all(text.as_bytes());
                return if code == EXIT_OK { EXIT_RUNTIME } else { code };
            }
        }
        None => {
            let _ = stderr.write_all(text.as_bytes());
        }
    }
    code
}
