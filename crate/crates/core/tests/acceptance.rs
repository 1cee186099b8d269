//! Acceptance suite. Runs every criterion in order and prints one PASS/FAIL
//! line each; exits nonzero if any criterion fails.
//!
//! Pass criterion numbers as arguments to run a subset:
//! `cargo test --test acceptance -- 2 9`.

mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::batch_log_m;
use uinfer::harness::{
    expectation_bound, radius_experiment, seq_crossing_experiment, sieve_experiment, simulate_coverage,
    simulate_power_curve, simulate_type1, CoverageFamily, LrtVariant, NullScenario, PowerConfig, SeqConfig, SimConfig,
};
use uinfer::sequential::MartingaleState;
use uinfer::{em_fit_mixture, mixture_sieve, Constraint, EmConfig, Family, MixtureParams, Mle, Params, SplitScheme};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

struct Criterion {
    id: usize,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Verdict,
}

fn main() {
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria = [
        Criterion { id: 1, name: "uniform intervals", limit: Some(Duration::from_secs(1)), run: uniform_intervals },
        Criterion { id: 2, name: "gaussian radius law", limit: Some(Duration::from_secs(30)), run: radius_law },
        Criterion {
            id: 3,
            name: "radius ratio to classical",
            limit: Some(Duration::from_secs(120)),
            run: radius_ratio,
        },
        Criterion { id: 4, name: "type I error", limit: Some(Duration::from_secs(300)), run: type_one },
        Criterion { id: 5, name: "coverage", limit: Some(Duration::from_secs(60)), run: coverage },
        Criterion { id: 6, name: "unit expectation", limit: None, run: unit_expectation },
        Criterion { id: 7, name: "mixture power curve", limit: Some(Duration::from_secs(900)), run: power_curve },
        Criterion { id: 8, name: "sequential validity", limit: Some(Duration::from_secs(180)), run: sequential },
        Criterion { id: 9, name: "incremental vs batch", limit: None, run: incremental_vs_batch },
        Criterion { id: 10, name: "sieve guarantee", limit: Some(Duration::from_secs(600)), run: sieve },
        Criterion { id: 11, name: "EM ascent", limit: None, run: em_ascent },
        Criterion { id: 12, name: "CLI determinism", limit: None, run: determinism },
    ];
    let mut failures = 0;
    for c in criteria.iter().filter(|c| only.is_empty() || only.contains(&c.id)) {
        let start = Instant::now();
        let v = (c.run)();
        let elapsed = start.elapsed();
        let in_time = c.limit.is_none_or(|l| elapsed <= l);
        let pass = v.pass && in_time;
        failures += !pass as usize;
        let budget = match c.limit {
            Some(l) => format!("{:.1}s of {}s", elapsed.as_secs_f64(), l.as_secs()),
            None => format!("{:.1}s", elapsed.as_secs_f64()),
        };
        println!("{} [{:>2}] {}: {} ({budget})", if pass { "PASS" } else { "FAIL" }, c.id, c.name, v.detail);
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn sim(n: usize, reps: usize, seed: u64) -> SimConfig {
    SimConfig { n, alpha: 0.1, reps, seed, threads: 1 }
}

fn uinfer(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_uinfer")).args(args).env_remove("UINFER_THREADS").output().unwrap()
}

/// CLI intervals against direct evaluation of the closed forms.
fn uniform_intervals() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for case in 0..12 {
        let m = [1, 2, 5, 10, 37, 100][case % 6];
        let alpha: f64 = [0.1, 0.05, 0.5, 0.01][case % 4];
        let theta = rng.random_range(0.5..5.0);
        let ys: Vec<f64> = (0..2 * m).map(|_| theta * (1.0 - rng.random::<f64>())).collect();
        let path = dir.path().join(format!("u{case}.csv"));
        let body: String = ys.iter().map(|y| format!("{y}\n")).collect();
        std::fs::write(&path, format!("y1\n{body}")).unwrap();
        let out = uinfer(&[
            "interval-uniform",
            "--input",
            path.to_str().unwrap(),
            "--split",
            "first-half",
            &format!("--alpha={alpha}"),
        ]);
        if out.status.code() != Some(0) {
            return verdict(false, format!("CLI exited with {:?}", out.status.code()));
        }
        let text = String::from_utf8(out.stdout).unwrap();
        let field = |row: usize, col: usize| -> f64 {
            text.lines().nth(row).unwrap().split(',').nth(col).unwrap().parse().unwrap()
        };
        let a = ys[..m].iter().copied().fold(f64::MIN, f64::max);
        let b = ys[m..].iter().copied().fold(f64::MIN, f64::max);
        let (small, large) = (a.min(b), a.max(b));
        let n = m as f64;
        let expected = [
            (1, 1, small),
            (1, 2, large * (2.0 / alpha).powf(1.0 / n)),
            (2, 1, large),
            (2, 2, large * (2.0 / alpha).powf(1.0 / n)),
            (3, 1, large),
            (3, 2, large * (1.0 / alpha).powf(1.0 / (2.0 * n))),
        ];
        for (row, col, value) in expected {
            worst = worst.max((field(row, col) - value).abs());
        }
    }
    verdict(worst <= 1e-12, format!("12 datasets, max |Δ| = {worst:.1e} (tol 1e-12)"))
}

fn radius_law() -> Verdict {
    let r = radius_experiment(10, 50, 0.1, 10_000, 2, 1).unwrap();
    let rel = (r.emp_mean_r2 - r.theory_r2).abs() / r.theory_r2;
    verdict(
        rel <= 0.02 && (r.theory_r2 - 0.49210340371976186).abs() < 1e-12,
        format!(
            "mean R² = {:.5} vs theory {:.5}, relative error {:.2}% (tol 2%)",
            r.emp_mean_r2,
            r.theory_r2,
            100.0 * rel
        ),
    )
}

fn radius_ratio() -> Verdict {
    let r = radius_experiment(100, 200, 0.1, 2000, 3, 1).unwrap();
    verdict(
        (3.5..=4.5).contains(&r.ratio_to_classical),
        format!(
            "d = 100, n = 400: ratio {:.4} (± {:.4}) vs required [3.5, 4.5]; exact (4 ln 10 + 400)/χ²(0.9, 100) = {:.4}",
            r.ratio_to_classical,
            r.se / r.classical_r2,
            r.theory_r2 / r.classical_r2
        ),
    )
}

fn type_one() -> Verdict {
    let cfg = sim(200, 2000, 4);
    let mut worst = String::new();
    let mut worst_excess = f64::NEG_INFINITY;
    let mut mixture_max: f64 = 0.0;
    let mut pass = true;
    for scenario in NullScenario::ALL {
        for r in simulate_type1(scenario, &LrtVariant::standard(), &cfg, &EmConfig::default()).unwrap() {
            let bound = cfg.alpha + 3.0 * r.rejection.se;
            pass &= r.rejection.rate <= bound;
            let excess = r.rejection.rate - bound;
            if excess > worst_excess {
                worst_excess = excess;
                worst = format!("{}/{} = {:.4}", scenario.name(), r.variant, r.rejection.rate);
            }
            if scenario == NullScenario::Mixture {
                mixture_max = mixture_max.max(r.rejection.rate);
            }
        }
    }
    verdict(
        pass,
        format!("20 cells, R = 2000, closest to bound: {worst}; mixture max rate {mixture_max:.4} (bound α + 3·SE)"),
    )
}

fn coverage() -> Verdict {
    let cfg = sim(50, 10_000, 5);
    let mut lines = Vec::new();
    let mut pass = true;
    for family in [CoverageFamily::Gaussian, CoverageFamily::Uniform] {
        for scheme in [SplitScheme::SingleSplit, SplitScheme::Crossfit] {
            let r = simulate_coverage(family, &scheme, &cfg).unwrap();
            pass &= r.rate >= 1.0 - cfg.alpha - 3.0 * r.se;
            lines.push(format!("{family:?}/{scheme:?} {:.4}", r.rate));
        }
    }
    verdict(pass, format!("R = 10⁴: {} (bound 1 − α − 3·SE)", lines.join(", ")))
}

fn unit_expectation() -> Verdict {
    let m = expectation_bound(&sim(20, 100_000, 6)).unwrap();
    verdict(m.mean <= 1.0 + 3.0 * m.se, format!("mean T(θ*) = {:.4} ± {:.4} over 10⁵ (bound 1 + 3·SE)", m.mean, m.se))
}

fn power_curve() -> Verdict {
    let power = PowerConfig { mus: vec![0.0, 1.0, 1.5, 2.0, 3.0], ..PowerConfig::default() };
    let points = simulate_power_curve(&power, &sim(200, 500, 7)).unwrap();
    let mut pass = true;
    let mut row = Vec::new();
    for p in &points {
        let b = p.bootstrap.unwrap();
        let se = (p.universal.se.powi(2) + b.se.powi(2)).sqrt();
        pass &= b.rate >= p.universal.rate - 2.0 * se;
        if p.mu == 0.0 {
            pass &= p.universal.rate < 0.05;
        }
        if p.mu == 2.0 {
            pass &= p.universal.rate > 0.8;
        }
        row.push(format!("μ={}: {:.3}/{:.3}", p.mu, p.universal.rate, b.rate));
    }
    verdict(pass, format!("universal/bootstrap power, R = 500, B = 200: {}", row.join(", ")))
}

fn sequential() -> Verdict {
    let r = seq_crossing_experiment(&SeqConfig { seed: 8, ..SeqConfig::default() }).unwrap();
    let pass = r.crossing.rate <= 0.1 + 3.0 * r.crossing.se && r.coverage.rate >= 0.9 - 3.0 * r.coverage.se;
    verdict(
        pass,
        format!(
            "T = 1000, R = 2000: crossing {:.4} (≤ 0.1 + 3·SE), simultaneous coverage {:.4} (≥ 0.9 − 3·SE)",
            r.crossing.rate, r.coverage.rate
        ),
    )
}

fn incremental_vs_batch() -> Verdict {
    let gaussian = |mean| Params::Gaussian { mean, sigma: 1.0 };
    let mut worst: f64 = 0.0;
    for stream_id in 0..50u64 {
        let (alt, null, init, truth) = match stream_id % 4 {
            0 => (
                Family::Gaussian { sigma: 1.0 },
                Mle::constrained(Family::Gaussian { sigma: 1.0 }, Constraint::MeanAtMost(0.0)),
                gaussian(0.0),
                gaussian(0.2),
            ),
            1 => (
                Family::GaussianUnknownVar,
                Mle::constrained(Family::GaussianUnknownVar, Constraint::MeanAtMost(0.0)),
                gaussian(0.0),
                Params::Gaussian { mean: 0.1, sigma: 2.0 },
            ),
            2 => (
                Family::MvnIdentity { d: 3 },
                Mle::constrained(Family::MvnIdentity { d: 3 }, Constraint::MeanAtMost(0.0)),
                Params::MvnIdentity { mean: vec![0.0; 3] },
                Params::MvnIdentity { mean: vec![0.1, -0.2, 0.05] },
            ),
            _ => (
                Family::UniformScale,
                Mle::constrained(Family::UniformScale, Constraint::MeanAtMost(1.0)),
                Params::UniformScale { theta: 2.0 },
                Params::UniformScale { theta: 2.0 },
            ),
        };
        let stream = truth.sample(200, &mut ChaCha8Rng::seed_from_u64(100 + stream_id)).unwrap();
        let mut state = MartingaleState::new(alt.clone(), null.clone(), init.clone(), 1).unwrap();
        for t in 1..=200 {
            state.update(stream.row(t - 1)).unwrap();
            let batch = batch_log_m(&alt, &null, &init, 1, &stream, t);
            let live = state.log_m();
            if live != batch {
                worst = worst.max((live - batch).abs());
            }
        }
    }
    verdict(worst <= 1e-9, format!("50 streams × 200 steps, max |Δ log M| = {worst:.1e} (tol 1e-9)"))
}

fn sieve() -> Verdict {
    let em = EmConfig::default();
    let single = sieve_experiment(
        &Params::Gaussian { mean: 0.0, sigma: 1.0 },
        1,
        &mixture_sieve(11, Some(1.0)),
        10,
        &sim(200, 1000, 9),
        &em,
    )
    .unwrap();
    let separated = sieve_experiment(
        &Params::Mixture(MixtureParams::equal_weights(vec![-2.0, 2.0], 1.0).unwrap()),
        2,
        &mixture_sieve(11, Some(1.0)),
        10,
        &sim(2000, 200, 10),
        &em,
    )
    .unwrap();
    let pass = single.overshoot.rate <= 0.1 + 3.0 * single.overshoot.se && separated.exact.rate >= 0.8;
    verdict(
        pass,
        format!(
            "single Gaussian ĵ > 1 in {:.4} (≤ 0.1 + 3·SE, R = 1000); μ = ±2, n = 2000: ĵ = 2 in {:.3} (≥ 0.8, R = 200)",
            single.overshoot.rate, separated.exact.rate
        ),
    )
}

fn em_ascent() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_drop: f64 = 0.0;
    for _ in 0..100 {
        let k_true = rng.random_range(1..=3);
        let means: Vec<f64> = (0..k_true).map(|_| rng.random_range(-4.0..4.0)).collect();
        let sigmas: Vec<f64> = (0..k_true).map(|_| rng.random_range(0.3..2.0)).collect();
        let truth = Params::Mixture(MixtureParams::new(vec![1.0 / k_true as f64; k_true], means, sigmas).unwrap());
        let n = rng.random_range(30..400);
        let data = truth.sample(n, &mut rng).unwrap();
        let k = rng.random_range(2..=4);
        let sigma = if rng.random::<bool>() { None } else { Some(1.0) };
        let cfg = EmConfig { restarts: 3, seed: rng.random(), ..EmConfig::default() };
        let run = em_fit_mixture(data.values(), k, sigma, &cfg).unwrap();
        for w in run.trace.windows(2) {
            worst_drop = worst_drop.max(w[0] - w[1]);
        }
    }
    verdict(worst_drop <= 1e-8, format!("100 datasets, largest per-iteration decrease {worst_drop:.1e} (tol 1e-8)"))
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let experiments: [&[&str]; 4] = [
        &["sim-type1", "--scenario", "all", "--reps", "40", "--n", "60"],
        &["sim-power", "--mus", "0,1.5", "--reps", "8", "--bootstrap-draws", "100"],
        &["sim-radius", "--d", "5", "--m", "20", "--reps", "2000"],
        &["sim-seq", "--reps", "300", "--horizon", "300"],
    ];
    let mut mismatches = Vec::new();
    for (i, args) in experiments.iter().enumerate() {
        let mut outputs = Vec::new();
        for (run, threads) in ["1", "1", "4"].iter().enumerate() {
            let path = dir.path().join(format!("e{i}_{run}.csv"));
            let mut argv = args.to_vec();
            let path_str = path.to_str().unwrap().to_string();
            argv.extend(["--seed", "42", "--threads", threads, "--output", &path_str]);
            let out = uinfer(&argv);
            if out.status.code() != Some(0) {
                return verdict(false, format!("{} exited with {:?}", args[0], out.status.code()));
            }
            outputs.push(std::fs::read(&path).unwrap());
        }
        if outputs[0] != outputs[1] || outputs[0] != outputs[2] || outputs[0].is_empty() {
            mismatches.push(args[0]);
        }
    }
    verdict(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "4 experiments byte-identical across repeated and 4-thread runs".to_string()
        } else {
            format!("outputs differ for {}", mismatches.join(", "))
        },
    )
}
