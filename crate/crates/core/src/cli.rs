//! Command-line front end.
//!
//! Data are headered CSV files with columns `y1..yd`. Experiments write CSV
//! with a one-line header; single tests write JSON. Every random choice flows
//! from `--seed` or `--split-seed`.
//!
//! Simulation subcommands accept `--config FILE`, a JSON object whose keys
//! are flag names (`reps`, `bootstrap_draws`, ...). Flags given on the
//! command line take precedence over the file.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{CsvRows, DataSplit, Dataset};
use crate::em::EmConfig;
use crate::error::{check_alpha, Error, Result};
use crate::family::{floored_sd, Constraint, Family, Params, ProfileTarget};
use crate::harness::{
    bootstrap_em, radius_experiment, seq_crossing_experiment, simulate_power_curve, simulate_type1, LrtVariant,
    NullScenario, PowerConfig, SeqConfig, SimConfig,
};
use crate::sequential::MartingaleState;
use crate::sieve::{mixture_sieve, select_model, DEFAULT_J_MAX};
use crate::split::{
    relaxed_split_lrt, uniform_classical_interval, uniform_crossfit_interval, universal_interval_1d, universal_lrt,
    Mle, SetSearch, SplitScheme,
};

#[derive(Debug, Parser)]
#[command(name = "uinfer", version, about = "Universal likelihood-ratio inference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split likelihood-ratio test (optionally K-fold, subsampled, powered or relaxed).
    TestSplit(TestSplitArgs),
    /// Crossfit likelihood-ratio test.
    TestCrossfit(TestCrossfitArgs),
    /// Universal confidence interval for a one-dimensional parameter.
    Confset(ConfsetArgs),
    /// Closed-form crossfit and classical intervals for Uniform(0, θ].
    IntervalUniform(IntervalUniformArgs),
    /// Running-MLE sequential test over a data stream.
    SeqMonitor(SeqMonitorArgs),
    /// Sieve selection of the number of mixture components.
    Sieve(SieveArgs),
    /// Monte Carlo type-I error of the universal tests.
    SimType1(SimType1Args),
    /// Monte Carlo power curve of the universal and bootstrap mixture tests.
    SimPower(SimPowerArgs),
    /// Monte Carlo squared radius of the Gaussian split region.
    SimRadius(SimRadiusArgs),
    /// Monte Carlo crossing rate of the sequential test.
    SimSeq(SimSeqArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SplitMode {
    /// Uniformly random halves drawn from --split-seed.
    Random,
    /// First ⌊n/2⌋ rows evaluate, the rest estimate.
    FirstHalf,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Headered CSV with columns y1..yd.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitMode::Random)]
    split: SplitMode,
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
    /// Test level or miscoverage, in (0, 1).
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Output file; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    /// N(μ, σ²) with σ fixed by --sigma.
    Gaussian,
    /// N(μ, σ²) with σ free; the null constrains μ only.
    GaussianUnknownVar,
    /// Uniform(0, θ].
    Uniform,
    /// N_d(μ, I), d taken from the data.
    Mvn,
    /// Gaussian mixture, --k0 against --k1 components.
    Mixture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NullArg {
    /// Location (or θ) equal to --theta0.
    Point,
    /// Location (or mean) at most --theta0.
    MeanAtMost,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, value_enum, default_value_t = FamilyArg::Gaussian)]
    family: FamilyArg,
    /// Known scale for gaussian, fixed component scale for mixture.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, value_enum, default_value_t = NullArg::Point)]
    null: NullArg,
    #[arg(long, default_value_t = 0.0)]
    theta0: f64,
    #[arg(long, default_value_t = 1)]
    k0: usize,
    #[arg(long, default_value_t = 2)]
    k1: usize,
    /// Let mixture component scales vary instead of fixing them at --sigma.
    #[arg(long)]
    free_scale: bool,
}

#[derive(Debug, Args)]
struct TestSplitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// split, kfold:K or subsample:K:B.
    #[arg(long, default_value = "split")]
    scheme: String,
    /// Power η in (0, 1] applied to the likelihood ratio.
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Replace the null maximum log-likelihood on the first half by this upper bound.
    #[arg(long, allow_negative_numbers = true)]
    relaxed_log_bound: Option<f64>,
}

#[derive(Debug, Args)]
struct TestCrossfitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args)]
struct ConfsetArgs {
    #[command(flatten)]
    data: DataArgs,
    /// gaussian, gaussian-unknown-var (profile set for μ) or uniform.
    #[arg(long, value_enum, default_value_t = FamilyArg::Gaussian)]
    family: FamilyArg,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// split, crossfit, kfold:K or subsample:K:B.
    #[arg(long, default_value = "split")]
    scheme: String,
    /// Lower end of the search range.
    #[arg(long, allow_negative_numbers = true, default_value_t = -10.0)]
    lo: f64,
    /// Upper end of the search range.
    #[arg(long, allow_negative_numbers = true, default_value_t = 10.0)]
    hi: f64,
    #[arg(long, default_value_t = 10_000)]
    grid: usize,
}

#[derive(Debug, Args)]
struct IntervalUniformArgs {
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Debug, Args)]
struct SeqMonitorArgs {
    /// Headered CSV stream with columns y1..yd, read one row at a time.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Output file; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    /// Observations used only to warm up the estimator.
    #[arg(long, default_value_t = 1)]
    burn_in: usize,
    /// Stop reading at the first time M_t exceeds 1/α.
    #[arg(long)]
    stop: bool,
}

#[derive(Debug, Args)]
struct SieveArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = DEFAULT_J_MAX)]
    j_max: usize,
    /// Fixed component scale.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long)]
    free_scale: bool,
}

#[derive(Debug, Args)]
struct SimArgs {
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "UINFER_THREADS", default_value_t = 1)]
    threads: usize,
    /// JSON object of flag values; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct SimType1Args {
    #[command(flatten)]
    sim: SimArgs,
    /// gaussian-simple, gaussian-composite, mixture, uniform or all.
    #[arg(long, default_value = "gaussian-simple")]
    scenario: String,
    /// Comma-separated: split, crossfit, kfold:K, subsample:K:B, powered:ETA, relaxed.
    #[arg(long, value_delimiter = ',', default_value = "split,crossfit,kfold:5,powered:0.5,relaxed")]
    variants: Vec<String>,
    /// Total sample size.
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct SimPowerArgs {
    #[command(flatten)]
    sim: SimArgs,
    /// Comma-separated mixture separations μ.
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1,1.25,1.5,1.75,2,2.25,2.5,2.75,3")]
    mus: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    /// Bootstrap draws per replication (at least 100); 0 skips the bootstrap test.
    #[arg(long, default_value_t = 200)]
    bootstrap_draws: usize,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct SimRadiusArgs {
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long, default_value_t = 10)]
    d: usize,
    /// Observations per half.
    #[arg(long, default_value_t = 50)]
    m: usize,
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct SimSeqArgs {
    #[command(flatten)]
    sim: SimArgs,
    /// Mean of the N(μ, 1) stream; the null is μ = 0.
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    mu: f64,
    #[arg(long, default_value_t = 1000)]
    horizon: usize,
    #[arg(long, default_value_t = 1)]
    burn_in: usize,
    #[arg(long, default_value_t = 2000)]
    reps: usize,
}

/// Runs the CLI on `argv` (program name first) and returns the exit code:
/// 0 on success, 2 on invalid input, 1 on any other failure.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<String> = argv.into_iter().map(|a| a.into().to_string_lossy().into_owned()).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => return report(&e),
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => report(&e),
    }
}

fn report(e: &Error) -> i32 {
    eprintln!("error: {e}");
    if e.is_input_error() {
        2
    } else {
        1
    }
}

/// Splices the flags of a `--config` JSON file in front of the command-line
/// flags, so that later (command-line) occurrences win.
fn expand_config(argv: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = argv.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(argv);
    };
    if pos < 2 {
        return Ok(argv);
    }
    let (path, used) = match argv[pos].strip_prefix("--config=") {
        Some(p) => (p.to_string(), 1),
        None => match argv.get(pos + 1) {
            Some(p) => (p.clone(), 2),
            None => return Ok(argv),
        },
    };
    let text =
        std::fs::read_to_string(&path).map_err(|e| Error::invalid(format!("cannot read config `{path}`: {e}")))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::invalid(format!("config `{path}` is not valid JSON: {e}")))?;
    let obj = value.as_object().ok_or_else(|| Error::invalid("config must be a JSON object"))?;
    let scalar = |key: &str, v: &serde_json::Value| -> Result<String> {
        match v {
            serde_json::Value::Number(n) => Ok(n.to_string()),
            serde_json::Value::String(s) => Ok(s.clone()),
            _ => Err(Error::invalid(format!("config value for `{key}` must be a number or string"))),
        }
    };
    let mut flags = Vec::new();
    for (key, v) in obj {
        if key == "config" {
            return Err(Error::invalid("config files cannot nest"));
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            serde_json::Value::Bool(true) => flags.push(flag),
            serde_json::Value::Bool(false) => {}
            serde_json::Value::Array(items) => {
                let parts = items.iter().map(|x| scalar(key, x)).collect::<Result<Vec<_>>>()?;
                flags.push(format!("{flag}={}", parts.join(",")));
            }
            other => flags.push(format!("{flag}={}", scalar(key, other)?)),
        }
    }
    let mut out = argv[..2].to_vec();
    out.extend(flags);
    out.extend(argv[2..pos].iter().cloned());
    out.extend(argv[pos + used..].iter().cloned());
    Ok(out)
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::TestSplit(a) => test_split(a),
        Command::TestCrossfit(a) => test_crossfit(a),
        Command::Confset(a) => confset(a),
        Command::IntervalUniform(a) => interval_uniform(a),
        Command::SeqMonitor(a) => seq_monitor(a),
        Command::Sieve(a) => sieve(a),
        Command::SimType1(a) => sim_type1(a),
        Command::SimPower(a) => sim_power(a),
        Command::SimRadius(a) => sim_radius(a),
        Command::SimSeq(a) => sim_seq(a),
    }
}

fn open_input(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::invalid(format!("cannot open `{}`: {e}", path.display())))
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load(args: &DataArgs) -> Result<(Dataset, DataSplit)> {
    check_alpha(args.alpha)?;
    let data = Dataset::read_csv(BufReader::new(open_input(&args.input)?))?;
    if data.len() < 2 {
        return Err(Error::invalid("need at least two observations to split"));
    }
    let split = match args.split {
        SplitMode::FirstHalf => DataSplit::first_half(data.len())?,
        SplitMode::Random => DataSplit::random_halves(data.len(), &mut ChaCha8Rng::seed_from_u64(args.split_seed))?,
    };
    Ok((data, split))
}

fn parse_scheme(s: &str, allow_crossfit: bool) -> Result<SplitScheme> {
    let variant: LrtVariant = s.parse()?;
    match variant {
        LrtVariant::Split => Ok(SplitScheme::SingleSplit),
        LrtVariant::Crossfit if allow_crossfit => Ok(SplitScheme::Crossfit),
        LrtVariant::KFold(k) => Ok(SplitScheme::KFold(k)),
        LrtVariant::Subsample { k, b } => Ok(SplitScheme::Subsample { k, b, seed: 0 }),
        _ => Err(Error::invalid(format!("`{s}` is not a splitting scheme here"))),
    }
}

/// Null and alternative estimators for a data dimension.
fn build_models(m: &ModelArgs, dim: usize) -> Result<(Mle, Mle)> {
    let theta0 = m.theta0;
    let point = |family: &Family| -> Result<Constraint> {
        Ok(match family {
            Family::Gaussian { sigma } => Constraint::FixedPoint(Params::Gaussian { mean: theta0, sigma: *sigma }),
            Family::GaussianUnknownVar => Constraint::FixedValue { target: ProfileTarget::Mean, value: theta0 },
            Family::UniformScale => Constraint::FixedPoint(Params::UniformScale { theta: theta0 }),
            Family::MvnIdentity { d } => Constraint::FixedPoint(Params::MvnIdentity { mean: vec![theta0; *d] }),
            Family::Mixture { .. } => unreachable!("mixture nulls are component counts"),
        })
    };
    let family = match m.family {
        FamilyArg::Gaussian => Family::Gaussian { sigma: m.sigma },
        FamilyArg::GaussianUnknownVar => Family::GaussianUnknownVar,
        FamilyArg::Uniform => Family::UniformScale,
        FamilyArg::Mvn => Family::MvnIdentity { d: dim },
        FamilyArg::Mixture => {
            if m.k0 == 0 || m.k0 >= m.k1 {
                return Err(Error::invalid("mixture test needs 1 <= k0 < k1"));
            }
            let sigma = (!m.free_scale).then_some(m.sigma);
            return Ok((Mle::full(Family::Mixture { k: m.k0, sigma }), Mle::full(Family::Mixture { k: m.k1, sigma })));
        }
    };
    if family.dim() != dim {
        return Err(Error::invalid(format!("data have dimension {dim}; use --family mvn for vectors")));
    }
    if let Family::Gaussian { sigma } = family {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid("--sigma must be positive"));
        }
    }
    let constraint = match m.null {
        NullArg::Point => point(&family)?,
        NullArg::MeanAtMost => Constraint::MeanAtMost(theta0),
    };
    Ok((Mle::constrained(family.clone(), constraint), Mle::full(family)))
}

fn write_json<T: serde::Serialize>(path: &Option<PathBuf>, value: &T) -> Result<()> {
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::Io(io::Error::other(e)))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn test_split(a: TestSplitArgs) -> Result<()> {
    let (data, split) = load(&a.data)?;
    let (null, alt) = build_models(&a.model, data.dim())?;
    let outcome = match a.relaxed_log_bound {
        Some(bound) => {
            if a.scheme != "split" || a.eta != 1.0 {
                return Err(Error::invalid("--relaxed-log-bound combines only with the plain split scheme"));
            }
            relaxed_split_lrt(&data, &split, bound, &alt, a.data.alpha)?
        }
        None => {
            let scheme = match parse_scheme(&a.scheme, false)? {
                SplitScheme::Subsample { k, b, .. } => SplitScheme::Subsample { k, b, seed: a.data.split_seed },
                s => s,
            };
            universal_lrt(&data, &split, &scheme, &null, &alt, a.eta, a.data.alpha)?
        }
    };
    write_json(&a.data.output, &outcome)
}

fn test_crossfit(a: TestCrossfitArgs) -> Result<()> {
    let (data, split) = load(&a.data)?;
    let (null, alt) = build_models(&a.model, data.dim())?;
    let outcome = universal_lrt(&data, &split, &SplitScheme::Crossfit, &null, &alt, 1.0, a.data.alpha)?;
    write_json(&a.data.output, &outcome)
}

fn confset(a: ConfsetArgs) -> Result<()> {
    let (data, split) = load(&a.data)?;
    if data.dim() != 1 {
        return Err(Error::invalid("confset needs one-dimensional data"));
    }
    let scheme = match parse_scheme(&a.scheme, true)? {
        SplitScheme::Subsample { k, b, .. } => SplitScheme::Subsample { k, b, seed: a.data.split_seed },
        s => s,
    };
    let search = SetSearch { grid: a.grid, ..SetSearch::new(a.lo, a.hi) };
    let sigma = a.sigma;
    let interval = match a.family {
        FamilyArg::Gaussian => {
            if !(sigma.is_finite() && sigma > 0.0) {
                return Err(Error::invalid("--sigma must be positive"));
            }
            let est = Mle::full(Family::Gaussian { sigma });
            let param_of = move |x: f64| Params::Gaussian { mean: x, sigma };
            universal_interval_1d(&param_of, &data, &split, &est, a.data.alpha, &scheme, &search)?
        }
        FamilyArg::Uniform => {
            if a.lo <= 0.0 {
                return Err(Error::invalid("uniform search range must be positive; set --lo"));
            }
            let est = Mle::full(Family::UniformScale);
            let param_of = |x: f64| Params::UniformScale { theta: x };
            universal_interval_1d(&param_of, &data, &split, &est, a.data.alpha, &scheme, &search)?
        }
        FamilyArg::GaussianUnknownVar => {
            if scheme != SplitScheme::SingleSplit {
                return Err(Error::invalid("the profile set supports only the split scheme"));
            }
            // Profile over σ on the evaluation half: σ̂²(μ) = mean (y − μ)².
            let ys = data.scalars_at(&split.d0)?;
            let param_of = move |x: f64| Params::Gaussian { mean: x, sigma: floored_sd(&ys, x) };
            let est = Mle::full(Family::GaussianUnknownVar);
            universal_interval_1d(&param_of, &data, &split, &est, a.data.alpha, &scheme, &search)?
        }
        FamilyArg::Mvn | FamilyArg::Mixture => {
            return Err(Error::invalid("confset supports gaussian, gaussian-unknown-var and uniform"))
        }
    };
    let mut out = csv::Writer::from_writer(sink(&a.data.output)?);
    out.write_record(["lo", "hi"]).map_err(csv_err)?;
    if let Some(iv) = interval {
        out.write_record([iv.lo.to_string(), iv.hi.to_string()]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(io::Error::other(e))
}

fn interval_uniform(a: IntervalUniformArgs) -> Result<()> {
    let (data, split) = load(&a.data)?;
    let crossfit = uniform_crossfit_interval(&data, &split, a.data.alpha)?;
    let classical = uniform_classical_interval(&data, a.data.alpha)?;
    let mut out = csv::Writer::from_writer(sink(&a.data.output)?);
    out.write_record(["kind", "lo", "hi"]).map_err(csv_err)?;
    for (kind, iv) in
        [("crossfit", crossfit.literal), ("crossfit-support", crossfit.support_constrained), ("classical", classical)]
    {
        out.write_record([kind.to_string(), iv.lo.to_string(), iv.hi.to_string()]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn seq_monitor(a: SeqMonitorArgs) -> Result<()> {
    check_alpha(a.alpha)?;
    let rows = CsvRows::new(BufReader::new(open_input(&a.input)?))?;
    let (null, alt) = build_models(&a.model, rows.dim())?;
    let theta0 = a.model.theta0;
    let init = match &alt.family {
        Family::Gaussian { sigma } => Params::Gaussian { mean: theta0, sigma: *sigma },
        Family::GaussianUnknownVar => Params::Gaussian { mean: theta0, sigma: 1.0 },
        Family::UniformScale => Params::UniformScale { theta: theta0 },
        Family::MvnIdentity { d } => Params::MvnIdentity { mean: vec![theta0; *d] },
        Family::Mixture { .. } => return Err(Error::invalid("seq-monitor does not support mixtures")),
    };
    let mut state = MartingaleState::new(alt.family, null, init, a.burn_in)?;
    let threshold = (1.0 / a.alpha).ln();
    let mut out = csv::Writer::from_writer(sink(&a.output)?);
    out.write_record(["t", "log_m", "p_t", "p_bar"]).map_err(csv_err)?;
    for row in rows {
        let (_, y) = row?;
        state.update(&y)?;
        let (p, p_bar) = state.anytime_p();
        out.write_record([state.t().to_string(), state.log_m().to_string(), p.to_string(), p_bar.to_string()])
            .map_err(csv_err)?;
        if a.stop && state.log_m() > threshold {
            break;
        }
    }
    out.flush()?;
    Ok(())
}

fn sieve(a: SieveArgs) -> Result<()> {
    let (data, split) = load(&a.data)?;
    if a.j_max == 0 {
        return Err(Error::invalid("--j-max must be at least 1"));
    }
    let sigma = (!a.free_scale).then_some(a.sigma);
    let result = select_model(&data, &split, &mixture_sieve(a.j_max + 1, sigma), a.data.alpha, a.j_max)?;
    write_json(&a.data.output, &result)
}

fn sim_config(sim: &SimArgs, n: usize, reps: usize) -> Result<SimConfig> {
    check_alpha(sim.alpha)?;
    let cfg = SimConfig { n, alpha: sim.alpha, reps, seed: sim.seed, threads: sim.threads };
    cfg.validate()?;
    Ok(cfg)
}

fn sim_type1(a: SimType1Args) -> Result<()> {
    let cfg = sim_config(&a.sim, a.n, a.reps)?;
    let scenarios = if a.scenario == "all" { NullScenario::ALL.to_vec() } else { vec![a.scenario.parse()?] };
    let variants = a.variants.iter().map(|v| v.parse()).collect::<Result<Vec<LrtVariant>>>()?;
    let labelled = scenarios.len() > 1;
    let mut out = csv::Writer::from_writer(sink(&a.sim.output)?);
    out.write_record(["variant", "rate", "se"]).map_err(csv_err)?;
    for scenario in scenarios {
        for r in simulate_type1(scenario, &variants, &cfg, &EmConfig::default())? {
            let label = if labelled { format!("{}/{}", scenario.name(), r.variant) } else { r.variant.to_string() };
            out.write_record([label, r.rejection.rate.to_string(), r.rejection.se.to_string()]).map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn sim_power(a: SimPowerArgs) -> Result<()> {
    let cfg = sim_config(&a.sim, a.n, a.reps)?;
    let power = PowerConfig {
        mus: a.mus,
        bootstrap_draws: (a.bootstrap_draws > 0).then_some(a.bootstrap_draws),
        em: EmConfig::default(),
        bootstrap_em: bootstrap_em(),
    };
    if let Some(b) = power.bootstrap_draws {
        if b < 100 {
            return Err(Error::invalid("--bootstrap-draws must be 0 or at least 100"));
        }
    }
    let points = simulate_power_curve(&power, &cfg)?;
    let mut out = csv::Writer::from_writer(sink(&a.sim.output)?);
    out.write_record(["mu", "power_universal", "se_u", "power_bootstrap", "se_b"]).map_err(csv_err)?;
    for p in points {
        let (pb, seb) = match p.bootstrap {
            Some(b) => (b.rate.to_string(), b.se.to_string()),
            None => (String::new(), String::new()),
        };
        out.write_record([p.mu.to_string(), p.universal.rate.to_string(), p.universal.se.to_string(), pb, seb])
            .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn sim_radius(a: SimRadiusArgs) -> Result<()> {
    check_alpha(a.sim.alpha)?;
    if a.sim.threads == 0 {
        return Err(Error::invalid("thread count must be at least 1"));
    }
    let r = radius_experiment(a.d, a.m, a.sim.alpha, a.reps, a.sim.seed, a.sim.threads)?;
    let mut out = csv::Writer::from_writer(sink(&a.sim.output)?);
    out.write_record(["d", "n", "alpha", "emp_mean_r2", "theory_r2", "ratio_to_classical"]).map_err(csv_err)?;
    out.write_record([
        r.d.to_string(),
        r.n.to_string(),
        r.alpha.to_string(),
        r.emp_mean_r2.to_string(),
        r.theory_r2.to_string(),
        r.ratio_to_classical.to_string(),
    ])
    .map_err(csv_err)?;
    out.flush()?;
    Ok(())
}

fn sim_seq(a: SimSeqArgs) -> Result<()> {
    let cfg = SeqConfig {
        mu: a.mu,
        horizon: a.horizon,
        alpha: a.sim.alpha,
        burn_in: a.burn_in,
        reps: a.reps,
        seed: a.sim.seed,
        threads: a.sim.threads,
    };
    let r = seq_crossing_experiment(&cfg)?;
    let mut out = csv::Writer::from_writer(sink(&a.sim.output)?);
    out.write_record(["T", "alpha", "crossing_rate", "se"]).map_err(csv_err)?;
    out.write_record([
        r.horizon.to_string(),
        r.alpha.to_string(),
        r.crossing.rate.to_string(),
        r.crossing.se.to_string(),
    ])
    .map_err(csv_err)?;
    out.flush()?;
    Ok(())
}
