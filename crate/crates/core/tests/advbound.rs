mod common;

use lorabounds::advbound::{
    build_identity_interpolator, construct_adversarial, eta_star, gordon_verify,
    lower_bound_experiment, padded_identity, sample_assumption_dist, small_ball, small_ball_at,
    small_ball_exact, union_gordon, BernoulliSource, LowerBoundConfig, DEFAULT_GORDON_C,
};
use lorabounds::empiric::stats::loglog_slope;
use lorabounds::netcore::{Activation, Architecture, PretrainedNet};
use lorabounds::numkit::{sample_gaussian, Matrix, RngState};

fn frozen_factors(rng: &mut RngState, arch: &Architecture) -> Vec<Matrix> {
    arch.layer_dims()
        .windows(2)
        .map(|p| sample_gaussian(rng, p[1], arch.rank(), 1.0).unwrap())
        .collect()
}

fn lb_config(width: usize, rank: usize, n: usize, trials: usize) -> LowerBoundConfig {
    LowerBoundConfig {
        depth: 1,
        width,
        rank,
        eta: 3.0,
        delta: 0.1,
        n_samples: n,
        trials,
        gordon_c: DEFAULT_GORDON_C,
        c_anti: 3.0 * (2.0 / std::f64::consts::PI).sqrt(),
        weight_scale: 1.0,
    }
}

/// `P(|N − 2k| > 2)` for `k ~ Bin(N, 1/2)`.
fn exact_event(n: usize) -> f64 {
    1.0 - common::rademacher_window_big(n, 0.0, 2.0)
}

#[test]
fn bernoulli_source_moments() {
    let mut src = BernoulliSource::new(RngState::new(3));
    assert_eq!(src.p(), 0.5);
    let xs: Vec<f64> = src
        .sample_n(1_000_000)
        .into_iter()
        .map(|s| s.x[0])
        .collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    assert!((mean - 0.5).abs() < 0.002, "{mean}");
    assert!((var - 0.25).abs() < 0.002, "{var}");
    assert!(xs.iter().all(|&x| x == 0.0 || x == 1.0));
}

#[test]
fn assumption_distribution_has_zero_labels() {
    let s = sample_assumption_dist(&mut RngState::new(1), 1000);
    assert_eq!(s.len(), 1000);
    assert!(s.iter().all(|p| p.y == vec![0.0]));
}

#[test]
fn interpolator_examples() {
    let m = build_identity_interpolator(&[3, 3]).unwrap();
    assert_eq!(m[0], Matrix::identity(3));
    let m = build_identity_interpolator(&[1, 3]).unwrap();
    assert_eq!(m[0].as_slice(), &[1.0, 0.0, 0.0]);
    assert!(build_identity_interpolator(&[4, 2]).is_err());
    assert!(build_identity_interpolator(&[4]).is_err());

    let pad = padded_identity(5, 3);
    let mut rng = RngState::new(0);
    for _ in 0..10 {
        let x: Vec<f64> = (0..3).map(|_| rng.standard_normal()).collect();
        let y = pad.matvec(&x).unwrap();
        assert_eq!(&y[..3], &x[..]);
        assert_eq!(&y[3..], &[0.0, 0.0]);
    }
}

#[test]
fn constructions_are_admissible() {
    let mut rng = RngState::new(17);
    for i in 0..200 {
        let (depth, width, rank) = [(1, 16, 2), (2, 32, 4), (3, 16, 16)][i % 3];
        let arch =
            Architecture::with_full_rank_adapters(1, 1, depth, width, rank, Activation::Relu)
                .unwrap();
        let net = PretrainedNet::random(arch, &mut rng, 1.0, 0.0).unwrap();
        let eta = if rank == width {
            1.0
        } else {
            0.5 * eta_star(width, rank)
        };
        let inst = construct_adversarial(&net, &frozen_factors(&mut rng, &arch), eta).unwrap();
        assert!(inst.admissible);
        for (norm, s) in inst.a_op_norms.iter().zip(&inst.b_min_singular) {
            assert!(*norm <= inst.c_pre / s + 1e-8);
        }
        if rank == width {
            assert!(inst.residual <= 1e-8, "{}", inst.residual);
            assert!(inst.m_eta.is_none());
        } else {
            let expect = 1.0 / (eta_star(width, rank) - eta);
            assert!((inst.m_eta.unwrap() - expect).abs() < 1e-12);
        }
    }
}

#[test]
fn identity_weights_need_no_correction() {
    let arch = Architecture::new(1, 1, 2, 6, 2, Activation::Relu).unwrap();
    let dims = arch.layer_dims();
    let weights = vec![
        padded_identity(6, 1),
        padded_identity(6, 6),
        padded_identity(1, 6),
    ];
    let biases = dims[1..].iter().map(|&d| vec![0.0; d]).collect();
    let net = PretrainedNet::new(arch, weights, biases).unwrap();
    let inst =
        construct_adversarial(&net, &frozen_factors(&mut RngState::new(2), &arch), 0.5).unwrap();
    assert!(inst.adapter.trainable().iter().all(|a| a.max_abs() == 0.0));
    assert_eq!(inst.residual, 0.0);
}

#[test]
fn construction_preconditions() {
    let arch = Architecture::new(1, 1, 1, 16, 4, Activation::Relu).unwrap();
    let mut rng = RngState::new(4);
    let net = PretrainedNet::random(arch, &mut rng, 1.0, 0.0).unwrap();
    let b = frozen_factors(&mut rng, &arch);
    assert!(construct_adversarial(&net, &b, eta_star(16, 4)).is_err());
    assert!(construct_adversarial(&net, &b, 0.0).is_err());
    assert!(construct_adversarial(&net, &b[..1], 1.0).is_err());
    let biased = PretrainedNet::random(arch, &mut rng, 1.0, 0.5).unwrap();
    assert!(construct_adversarial(&biased, &b, 1.0).is_err());
    let tanh = Architecture::new(1, 1, 1, 16, 4, Activation::Tanh).unwrap();
    let net = PretrainedNet::random(tanh, &mut rng, 1.0, 0.0).unwrap();
    assert!(construct_adversarial(&net, &b, 1.0).is_err());
}

#[test]
fn gordon_examples() {
    let rng = RngState::new(8);
    let wide = gordon_verify(100, 4, 8.0, 10_000, DEFAULT_GORDON_C, &rng).unwrap();
    assert_eq!(wide.failure_rate, 0.0);
    assert!(
        (7.5..=12.5).contains(&wide.mean_s_min),
        "{}",
        wide.mean_s_min
    );
    let vacuous = gordon_verify(100, 4, 1.0, 1000, DEFAULT_GORDON_C, &rng).unwrap();
    assert!(vacuous.bound > 1.0 && vacuous.passed);
    assert!(gordon_verify(100, 4, 1.0, 999, DEFAULT_GORDON_C, &rng).is_err());
    assert!(gordon_verify(100, 4, 0.0, 1000, DEFAULT_GORDON_C, &rng).is_err());
    assert!(gordon_verify(3, 4, 1.0, 1000, DEFAULT_GORDON_C, &rng).is_err());
}

#[test]
fn gordon_is_thread_count_independent() {
    let rng = RngState::new(9);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| gordon_verify(32, 4, 1.0, 2000, DEFAULT_GORDON_C, &rng).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn union_bound_examples() {
    let rng = RngState::new(10);
    let one = union_gordon(&[1, 64], 4, 2.0, 2000, DEFAULT_GORDON_C, &rng).unwrap();
    let single = gordon_verify(64, 4, 2.0, 2000, DEFAULT_GORDON_C, &rng).unwrap();
    assert_eq!(one.bound, single.bound);
    let wide = union_gordon(&[1, 256, 256, 256], 4, 3.0, 1000, DEFAULT_GORDON_C, &rng).unwrap();
    assert_eq!(wide.failure_rate, 0.0);
    assert!((wide.bound - 6.0 * (-4.5f64).exp()).abs() < 1e-15);
    let tiny = union_gordon(&[1, 64, 64], 4, 1e-6, 1000, DEFAULT_GORDON_C, &rng).unwrap();
    assert!(tiny.bound > 3.99 && tiny.passed);
}

#[test]
fn small_ball_examples() {
    assert_eq!(small_ball_exact(1, 0.0).unwrap(), 0.5);
    let p = small_ball_at(100, 2.0, 0.0).unwrap();
    assert!((p - common::rademacher_window_big(100, 0.0, 2.0)).abs() < 1e-12);
    assert!((p - 0.2356465656).abs() < 1e-9);
    assert!((small_ball_exact(100, 2.0).unwrap() - p).abs() < 1e-15);

    let ns = [16.0, 64.0, 256.0, 1024.0];
    let exact: Vec<f64> = ns
        .iter()
        .map(|&n| small_ball_exact(n as usize, 2.0).unwrap())
        .collect();
    let slope = loglog_slope(&ns, &exact).unwrap();
    assert!((slope + 0.5).abs() <= 0.1, "{slope}");

    let mut rng = RngState::new(1);
    let est: Vec<f64> = ns
        .iter()
        .map(|&n| {
            small_ball(n as usize, 2.0, 100_000, &mut rng)
                .unwrap()
                .p_hat
        })
        .collect();
    let slope = loglog_slope(&ns, &est).unwrap();
    assert!((slope + 0.5).abs() <= 0.1, "{slope}");
}

#[test]
fn small_ball_monte_carlo_agrees_with_exact() {
    let mut rng = RngState::new(5);
    for n in [65usize, 100, 400] {
        let mc = small_ball(n, 2.0, 50_000, &mut rng).unwrap();
        assert!(!mc.exact_available);
        let exact = small_ball_exact(n, 2.0).unwrap();
        assert!(
            (mc.p_hat - exact).abs() <= 4.0 * mc.standard_error + 1e-3,
            "N={n}"
        );
    }
    assert!(small_ball(100, 2.0, 999, &mut rng).is_err());
    assert!(small_ball(0, 2.0, 1000, &mut rng).is_err());
    assert!(small_ball(10, -1.0, 1000, &mut rng).is_err());
}

#[test]
fn square_mode_event_matches_exact_binomial() {
    let rep = lower_bound_experiment(&lb_config(8, 8, 100, 20_000), &RngState::new(3)).unwrap();
    let exact = exact_event(100);
    assert!((exact - 0.76435).abs() < 1e-4);
    assert!(rep.residual_max <= 1e-8);
    assert!(
        (rep.event_frequency - exact).abs() <= 3.0 * rep.event_standard_error,
        "{rep:?}"
    );
    assert!((rep.smallball_p - (1.0 - exact)).abs() < 1e-12);
    assert_eq!(rep.admissible_fraction, 1.0);
    assert!(rep.m_eta.is_none());
}

#[test]
fn single_sample_never_triggers_the_event() {
    let rep = lower_bound_experiment(&lb_config(4, 4, 1, 500), &RngState::new(1)).unwrap();
    assert_eq!(rep.event_frequency, 0.0);
}

#[test]
fn event_frequency_grows_with_n() {
    let freqs: Vec<f64> = [4usize, 16, 64, 256]
        .iter()
        .map(|&n| {
            lower_bound_experiment(&lb_config(4, 4, n, 4000), &RngState::new(n as u64))
                .unwrap()
                .event_frequency
        })
        .collect();
    assert!(freqs.windows(2).all(|w| w[1] >= w[0]), "{freqs:?}");
    let exact: Vec<f64> = [4usize, 16, 64, 256]
        .iter()
        .map(|&n| exact_event(n))
        .collect();
    assert!(exact.windows(2).all(|w| w[1] >= w[0]));
    assert!((exact[0] - 0.125).abs() < 1e-15);
}

#[test]
fn thin_factors_are_reported_not_exact() {
    let mut cfg = lb_config(32, 2, 100, 300);
    cfg.depth = 2;
    cfg.eta = 2.0;
    cfg.delta = 1.0;
    let rep = lower_bound_experiment(&cfg, &RngState::new(6)).unwrap();
    assert!(rep.residual_max > 1e-3);
    assert_eq!(rep.admissible_fraction, 1.0);
    assert!((0.0..=1.0).contains(&rep.event_frequency));
    let expect = 1.0 / (eta_star(32, 2) - 2.0);
    assert!((rep.m_eta.unwrap() - expect).abs() < 1e-12);
}

#[test]
fn delta_window_is_enforced() {
    let base = lb_config(32, 2, 100, 10);
    let lo = base.gordon_bound();
    for delta in [lo * 0.99, lo, 4.0, 5.0, 0.0] {
        assert!(
            lower_bound_experiment(&LowerBoundConfig { delta, ..base }, &RngState::new(0)).is_err()
        );
    }
    assert!(
        lower_bound_experiment(&LowerBoundConfig { delta: 1.0, ..base }, &RngState::new(0)).is_ok()
    );
    let star = eta_star(32, 2);
    assert!(
        lower_bound_experiment(&LowerBoundConfig { eta: star, ..base }, &RngState::new(0)).is_err()
    );
    assert!(lower_bound_experiment(
        &LowerBoundConfig {
            n_samples: 0,
            ..base
        },
        &RngState::new(0)
    )
    .is_err());
}
