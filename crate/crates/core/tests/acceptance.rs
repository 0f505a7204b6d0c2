//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

mod common;

use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use lorabounds::advbound::{
    construct_adversarial, eta_star, gordon_verify, lower_bound_experiment, small_ball,
    small_ball_exact, LowerBoundConfig, DEFAULT_GORDON_C,
};
use lorabounds::boundcalc::{covering_bound_lora, theorem1_bound, BoundConfig};
use lorabounds::cli;
use lorabounds::empiric::stats::{loglog_slope, spearman};
use lorabounds::empiric::{
    diameter_event_frequency, empirical_cover, gap_sweep, mean_gaps, tabulate_lora, write_csv,
    CellStatus, ExperimentRecord, SweepConfig,
};
use lorabounds::netcore::{
    backprop, forward_lora, init_adapter, init_adapter_with_role, Activation, Architecture,
    LoraAdapter, PretrainedNet, TrainedFactor,
};
use lorabounds::numkit::{sample_gaussian, RngState};

type Outcome = Result<String, String>;

const SWEEP_CONFIG: &str = include_str!("../../../configs/sweep_acceptance.json");

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sweep_config() -> SweepConfig {
    serde_json::from_str(SWEEP_CONFIG).expect("acceptance sweep config")
}

fn bound_cfg(arch: Architecture, n: u64) -> BoundConfig {
    BoundConfig {
        arch,
        box_bound: 1.0,
        nu: 1.0,
        r0: 1.0,
        n_samples: n,
        delta: 0.05,
        c2: 1.0,
        loss_lipschitz: 1.0,
    }
}

fn formula_fidelity() -> Outcome {
    let archs = [
        (1, 1, 1, 2, 1),
        (8, 1, 2, 32, 4),
        (3, 2, 3, 64, 8),
        (16, 4, 4, 128, 16),
        (2, 1, 6, 32, 16),
    ];
    let mut worst = 0.0_f64;
    let mut count = 0;
    for (k, &(d, dd, t, w, r)) in archs.iter().enumerate() {
        for (j, &(n, delta, m, nu)) in [
            (100u64, 0.05, 1.0, 1.0),
            (10_000, 1e-6, 0.5, 2.0),
            (1_000_000, 0.5, 3.0, 0.1),
            (1 << 40, 0.99, 1.0, 1.0),
        ]
        .iter()
        .enumerate()
        {
            let cfg = BoundConfig {
                arch: Architecture::new(d, dd, t, w, r, Activation::Relu).unwrap(),
                box_bound: m,
                nu,
                r0: 0.25 * (k + j) as f64,
                n_samples: n,
                delta,
                c2: [1.0, 0.5, 2.0, 1.0, 3.0][k],
                loss_lipschitz: 1.0,
            };
            let got = theorem1_bound(&cfg).map_err(|e| e.to_string())?.g_star;
            worst = worst.max(common::rel_err(got, common::g_star_big(&cfg)));
            count += 1;
        }
    }
    check(
        count == 20 && worst <= 1e-12,
        format!("{count} configs, max rel err {worst:.2e}"),
    )
}

fn rate_check() -> Outcome {
    let ns = [1e3, 1e4, 1e5, 1e6, 1e7];
    let tiny = Architecture::new(1, 1, 1, 2, 1, Activation::Relu).unwrap();
    let gs: Vec<f64> = ns
        .iter()
        .map(|&n| theorem1_bound(&bound_cfg(tiny, n as u64)).unwrap().g_star)
        .collect();
    let slope = loglog_slope(&ns, &gs).map_err(|e| e.to_string())?;
    let unsaturated = gs[0] < 4.0;
    let by_rank: Vec<f64> = [1, 2, 4, 8, 16]
        .iter()
        .map(|&r| {
            let arch = Architecture::new(8, 1, 2, 64, r, Activation::Relu).unwrap();
            theorem1_bound(&bound_cfg(arch, 1_000_000)).unwrap().g_star
        })
        .collect();
    let monotone = by_rank.windows(2).all(|w| w[1] >= w[0]);
    check(
        unsaturated && (slope + 0.5).abs() <= 0.01 && monotone,
        format!("slope {slope:.5}, G* over r {by_rank:.4?}"),
    )
}

fn bound_dominance(records: &[ExperimentRecord]) -> Outcome {
    let done: Vec<&ExperimentRecord> = records
        .iter()
        .filter(|r| r.status == CellStatus::Ok)
        .collect();
    let held = done.iter().filter(|r| r.gap <= r.g_star).count();
    let max_ratio = done.iter().map(|r| r.gap / r.g_star).fold(0.0, f64::max);
    check(
        records.len() >= 60 && !done.is_empty() && held == done.len(),
        format!(
            "{} cells, {} completed, gap <= G* in {held}, max gap/G* {max_ratio:.4}",
            records.len(),
            done.len()
        ),
    )
}

fn rank_trend(records: &[ExperimentRecord]) -> Outcome {
    let means = mean_gaps(records);
    let mut ns: Vec<usize> = means.iter().map(|m| m.1).collect();
    ns.sort_unstable();
    ns.dedup();
    let mut parts = Vec::new();
    let mut ok = !ns.is_empty();
    for n in ns {
        let (rs, gaps): (Vec<f64>, Vec<f64>) = means
            .iter()
            .filter(|m| m.1 == n)
            .map(|m| (m.0 as f64, m.2))
            .unzip();
        let rho = spearman(&rs, &gaps).map_err(|e| e.to_string())?;
        ok &= rho > 0.0;
        parts.push(format!("N={n}: rho {rho:+.2} gaps {gaps:.4?}"));
    }
    check(ok, parts.join("; "))
}

fn diameter_event() -> Outcome {
    let ev = diameter_event_frequency(32, 4, 1.0, 1.0, 0.05, 500, &mut RngState::new(2024))
        .map_err(|e| e.to_string())?;
    check(
        ev.frequency >= 0.92 && ev.frequency_worst_case >= 0.92,
        format!(
            "R {:.4}, frequency {:.3}, worst-case box {:.3}",
            ev.radius, ev.frequency, ev.frequency_worst_case
        ),
    )
}

fn gordon_grid() -> Outcome {
    let trials = 10_000;
    let master = RngState::new(6);
    let mut ok = true;
    let mut worst_margin = f64::INFINITY;
    for (k, &(d_out, r)) in [(64, 4), (128, 8), (256, 4)].iter().enumerate() {
        for (j, &eta) in [1.0f64, 2.0, 4.0].iter().enumerate() {
            let res = gordon_verify(
                d_out,
                r,
                eta,
                trials,
                DEFAULT_GORDON_C,
                &master.split(k as u64).split(j as u64),
            )
            .map_err(|e| e.to_string())?;
            let bound = 2.0 * (-eta * eta / 2.0).exp();
            let p = bound.min(1.0);
            let se = (p * (1.0 - p) / trials as f64).sqrt();
            let margin = bound + 3.0 * se - res.failure_rate;
            ok &= margin >= 0.0;
            worst_margin = worst_margin.min(margin);
        }
    }
    check(
        ok,
        format!("9 cases x {trials} trials, smallest slack {worst_margin:.4}"),
    )
}

fn small_ball_rate() -> Outcome {
    let exact = small_ball_exact(100, 2.0).map_err(|e| e.to_string())?;
    let oracle = common::rademacher_window_big(100, 0.0, 2.0);
    let ns = [16.0, 64.0, 256.0, 1024.0];
    let mut rng = RngState::new(7);
    let ps = ns
        .iter()
        .map(|&n| small_ball(n as usize, 2.0, 100_000, &mut rng).map(|e| e.p_hat))
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|e| e.to_string())?;
    let slope = loglog_slope(&ns, &ps).map_err(|e| e.to_string())?;
    check(
        (exact - oracle).abs() <= 1e-6
            && (exact - 0.2356).abs() < 1e-4
            && (slope + 0.5).abs() <= 0.1,
        format!("p(100) {exact:.10} vs oracle {oracle:.10}, slope {slope:.4}"),
    )
}

fn adversarial_construction() -> Outcome {
    let mut rng = RngState::new(8);
    let shapes = [(1, 16, 2), (2, 32, 4), (3, 64, 4), (2, 16, 16), (1, 8, 8)];
    let (mut admissible, mut total, mut square_residual) = (0, 0, 0.0_f64);
    for i in 0..1000 {
        let (depth, width, rank) = shapes[i % shapes.len()];
        let arch =
            Architecture::with_full_rank_adapters(1, 1, depth, width, rank, Activation::Relu)
                .unwrap();
        let net = PretrainedNet::random(arch, &mut rng, 1.0, 0.0).unwrap();
        let frozen: Vec<_> = arch
            .layer_dims()
            .windows(2)
            .map(|p| sample_gaussian(&mut rng, p[1], rank, 1.0).unwrap())
            .collect();
        let eta = if rank == width {
            1.0
        } else {
            0.5 * eta_star(width, rank)
        };
        let inst = construct_adversarial(&net, &frozen, eta).map_err(|e| e.to_string())?;
        let holds = inst
            .a_op_norms
            .iter()
            .zip(&inst.b_min_singular)
            .all(|(a, s)| *a <= inst.c_pre / s + 1e-8);
        admissible += usize::from(holds && inst.admissible);
        total += 1;
        if rank == width {
            square_residual = square_residual.max(inst.residual);
        }
    }
    let cfg = LowerBoundConfig {
        depth: 1,
        width: 16,
        rank: 16,
        eta: 3.0,
        delta: 0.1,
        n_samples: 100,
        trials: 10_000,
        gordon_c: DEFAULT_GORDON_C,
        c_anti: 2.4,
        weight_scale: 1.0,
    };
    let rep = lower_bound_experiment(&cfg, &RngState::new(9)).map_err(|e| e.to_string())?;
    let exact = 1.0 - common::rademacher_window_big(100, 0.0, 2.0);
    let within = (rep.event_frequency - exact).abs() <= 3.0 * rep.event_standard_error;
    check(
        admissible == total && square_residual <= 1e-8 && rep.residual_max <= 1e-8 && within,
        format!(
            "{admissible}/{total} admissible, square residual {:.1e}, frequency {:.4} vs exact {exact:.4} (SE {:.4})",
            square_residual.max(rep.residual_max),
            rep.event_frequency,
            rep.event_standard_error
        ),
    )
}

fn gradient_error(net: &PretrainedNet, ad: &LoraAdapter, x: &[f64], up: &[f64]) -> f64 {
    let objective = |a: &LoraAdapter| -> f64 {
        forward_lora(net, a, x)
            .unwrap()
            .iter()
            .zip(up)
            .map(|(p, q)| p * q)
            .sum()
    };
    let grads = backprop(net, ad, x, up).unwrap();
    let mut worst = 0.0_f64;
    for (t, g) in grads.iter().enumerate() {
        let base = ad.trainable()[t].clone();
        for i in 0..base.rows() {
            for j in 0..base.cols() {
                let h = 1e-6 * base[(i, j)].abs().max(1.0);
                let mut probe = ad.clone();
                let mut m = base.clone();
                m[(i, j)] = base[(i, j)] + h;
                probe.set_trainable(t, m.clone()).unwrap();
                let fp = objective(&probe);
                m[(i, j)] = base[(i, j)] - h;
                probe.set_trainable(t, m).unwrap();
                let fd = (fp - objective(&probe)) / (2.0 * h);
                worst = worst.max((fd - g[(i, j)]).abs() / g[(i, j)].abs().max(1e-3));
            }
        }
    }
    worst
}

fn gradient_probes() -> Outcome {
    let mut rng = RngState::new(10);
    let mut worst = 0.0_f64;
    for probe in 0..100usize {
        let act = if probe % 2 == 0 {
            Activation::Tanh
        } else {
            Activation::Relu
        };
        let role = if probe % 5 == 0 {
            TrainedFactor::B
        } else {
            TrainedFactor::A
        };
        let (d, dd) = (1 + probe % 4, 1 + probe % 3);
        let arch =
            Architecture::new(d, dd, 1 + probe % 3, 4 + probe % 5, 1 + probe % 3, act).unwrap();
        let net = PretrainedNet::random(arch, &mut rng, 1.0, 0.2).unwrap();
        let ad = init_adapter_with_role(&mut rng, &arch, 1.0, 0.5, role)
            .unwrap()
            .with_uniform_trainable(&mut rng);
        let x: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
        let up: Vec<f64> = (0..dd).map(|_| rng.standard_normal()).collect();
        worst = worst.max(gradient_error(&net, &ad, &x, &up));
    }
    check(
        worst <= 1e-5,
        format!("100 probes, max relative error {worst:.2e}"),
    )
}

fn cover_dominance() -> Outcome {
    let arch = Architecture::new(1, 1, 1, 3, 1, Activation::Relu).unwrap();
    let grid: Vec<Vec<f64>> = (0..=20).map(|i| vec![i as f64 / 20.0]).collect();
    let mut worst_slack = f64::INFINITY;
    for seed in 0..20 {
        let mut rng = RngState::new(1000 + seed);
        let net = PretrainedNet::random(arch, &mut rng, 1.0, 0.0).unwrap();
        let template = init_adapter(&mut rng, &arch, 1.0, 1.0).unwrap();
        let adapters: Vec<_> = (0..200)
            .map(|_| template.with_uniform_trainable(&mut rng))
            .collect();
        let table = tabulate_lora(&net, &adapters, &grid).map_err(|e| e.to_string())?;
        let cfg = BoundConfig {
            r0: net.r0(),
            n_samples: 1,
            ..bound_cfg(arch, 1)
        };
        for eps_cov in [0.1, 0.3, 1.0] {
            let count = empirical_cover(&table, eps_cov).map_err(|e| e.to_string())?;
            let bound = covering_bound_lora(&cfg, 0.05, eps_cov).map_err(|e| e.to_string())?;
            worst_slack = worst_slack.min(bound - (count as f64).ln());
        }
    }
    check(
        worst_slack >= 0.0,
        format!("20 seeds x 3 radii, smallest slack {worst_slack:.3} nats"),
    )
}

fn cli_stdout(args: &[&str]) -> Result<Vec<u8>, String> {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["lorabounds"];
    full.extend_from_slice(args);
    match cli::run(full, &mut out, &mut err) {
        0 => Ok(out),
        code => Err(format!("exit {code}: {}", String::from_utf8_lossy(&err))),
    }
}

fn determinism(full: &[ExperimentRecord]) -> Outcome {
    let dir = std::env::temp_dir().join(format!("lorabounds-acceptance-{}", std::process::id()));
    fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut slice = sweep_config();
    slice.r_values.truncate(1);
    slice.n_values.truncate(1);
    let sweep_path = dir.join("slice.json");
    fs::write(&sweep_path, serde_json::to_string(&slice).unwrap()).map_err(|e| e.to_string())?;
    let lb_path = dir.join("lb.json");
    let lb = serde_json::json!({
        "experiment": {"depth": 2, "width": 32, "rank": 4, "eta": 3.0, "delta": 1.0, "N": 64,
                       "trials": 500, "gordon_c": 0.5, "c_anti": 2.4, "weight_scale": 1.0},
        "seed": 11
    });
    fs::write(&lb_path, lb.to_string()).map_err(|e| e.to_string())?;
    let (sweep, lbp) = (sweep_path.to_str().unwrap(), lb_path.to_str().unwrap());

    let mut same = true;
    for (cmd, path) in [
        ("sweep", sweep),
        ("lowerbound", lbp),
        (
            "bound",
            concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/bound.json"),
        ),
    ] {
        let a = cli_stdout(&[cmd, "--config", path, "--threads", "1"])?;
        let b = cli_stdout(&[cmd, "--config", path, "--threads", "4"])?;
        let c = cli_stdout(&[cmd, "--config", path, "--threads", "1"])?;
        same &= !a.is_empty() && a == b && a == c;
    }
    let verify = ["verify", "--seed", "3"];
    let v1 = cli_stdout(&[&verify[..], &["--threads", "1"]].concat())?;
    let v4 = cli_stdout(&[&verify[..], &["--threads", "4"]].concat())?;
    same &= v1 == v4;

    // the slice cells must coincide with the same cells of the full sweep
    let sub: Vec<ExperimentRecord> = full
        .iter()
        .filter(|r| r.r == slice.r_values[0] && r.n == slice.n_values[0])
        .cloned()
        .collect();
    let (mut lhs, mut rhs) = (Vec::new(), Vec::new());
    write_csv(&sub, &mut lhs).map_err(|e| e.to_string())?;
    write_csv(&gap_sweep(&slice, 1).map_err(|e| e.to_string())?, &mut rhs)
        .map_err(|e| e.to_string())?;
    let keyed = lhs == rhs;
    let _ = fs::remove_dir_all(&dir);
    check(
        same && keyed,
        format!(
            "sweep/lowerbound/bound/verify identical across threads {{1, 4}} and reruns: {same}; slice matches full sweep: {keyed}"
        ),
    )
}

fn report(results: &mut Vec<bool>, id: usize, name: &str, f: impl FnOnce() -> Outcome) {
    let start = Instant::now();
    let outcome = f();
    let secs = Duration::as_secs_f64(&start.elapsed());
    let (tag, detail) = match &outcome {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("{tag} [{id:>2}] {name}: {detail} ({secs:.1}s)");
    results.push(outcome.is_ok());
}

fn main() -> ExitCode {
    // libtest flags such as --nocapture or a name filter are accepted and ignored
    let mut results = Vec::new();
    report(&mut results, 1, "formula fidelity", formula_fidelity);
    report(
        &mut results,
        2,
        "upper-bound rate and rank monotonicity",
        rate_check,
    );

    let start = Instant::now();
    let sweep = gap_sweep(&sweep_config(), rayon::current_num_threads());
    println!(
        "     sweep of {} cells finished in {:.1}s",
        sweep.as_ref().map_or(0, Vec::len),
        start.elapsed().as_secs_f64()
    );
    let records = sweep.map_err(|e| e.to_string());
    report(&mut results, 3, "bound dominance", || {
        bound_dominance(records.as_ref().map_err(Clone::clone)?)
    });
    report(&mut results, 4, "rank trend of the gap", || {
        rank_trend(records.as_ref().map_err(Clone::clone)?)
    });

    report(&mut results, 5, "diameter event", diameter_event);
    report(&mut results, 6, "smallest singular value tail", gordon_grid);
    report(
        &mut results,
        7,
        "small-ball exactness and rate",
        small_ball_rate,
    );
    report(
        &mut results,
        8,
        "adversarial construction",
        adversarial_construction,
    );
    report(&mut results, 9, "gradient correctness", gradient_probes);
    report(
        &mut results,
        10,
        "empirical cover dominance",
        cover_dominance,
    );
    report(&mut results, 11, "determinism", || {
        determinism(records.as_ref().map_err(Clone::clone)?)
    });

    let failed = results.iter().filter(|ok| !**ok).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
