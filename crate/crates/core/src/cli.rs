//! The `regime` command line.
//!
//! Exit codes: 0 for a conclusive verdict or a successful run, 2 for an
//! inconclusive classification, 1 for any error including usage errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use crate::analysis::{analyze, AnalysisOptions, CriterionChoice};
use crate::error::Error;
use crate::markov::ClassBound;
use crate::mmatrix::MMatrixTest;
use crate::model::load_model;
use crate::report::Report;
use crate::reproduce::{reproduce, threshold_rows, threshold_table, Example, ReproduceOptions};
use crate::simulator::{run_ensemble, EnsembleConfig};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "REGIME_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "regime", version, about = "Recurrence and transience of regime-switching diffusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify a model file as recurrent, transient or exponentially ergodic.
    Classify(ClassifyArgs),
    /// Monte Carlo return/escape statistics for a model file.
    Simulate(SimulateArgs),
    /// Rebuild the worked examples: thresholds, verdicts and simulations.
    Reproduce(ReproduceArgs),
    /// κ thresholds of the birth–death switching example for given rates.
    Thresholds(ThresholdArgs),
}

fn kebab_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unrecognised value {s:?}"))
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    model: PathBuf,
    /// `auto`, a criterion id such as `finite-partition`, or an alias such as `thm24`.
    #[arg(long, default_value = "auto")]
    criterion: CriterionChoice,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the aligned text rendering here.
    #[arg(long)]
    text: Option<PathBuf>,
    /// strict | semipositive | leading-minors
    #[arg(long, value_parser = kebab_enum::<MMatrixTest>)]
    mmatrix_test: Option<MMatrixTest>,
    /// supremum | tail-limit
    #[arg(long, value_parser = kebab_enum::<ClassBound>)]
    class_bound: Option<ClassBound>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct SimulateArgs {
    model: PathBuf,
    /// Initial position, comma separated for several dimensions.
    #[arg(long, value_delimiter = ',', default_value = "5")]
    x0: Vec<f64>,
    /// Initial regime, counted from 1.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    i0: u64,
    /// A path returns when |x| <= r0.
    #[arg(long, default_value_t = 1.0)]
    r0: f64,
    /// Horizon.
    #[arg(long = "T", default_value_t = 500.0)]
    horizon: f64,
    /// Euler-Maruyama step.
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    /// Path k uses stream k of this seed, for any thread count.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// A path escapes when |x| >= this radius.
    #[arg(long)]
    escape_radius: Option<f64>,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the aligned text rendering here.
    #[arg(long)]
    text: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    /// ex21 | ex22 | ou | cor31 | all
    example: String,
    /// Directory for JSON and text outputs.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the model files used, under `<out>/models`.
    #[arg(long)]
    emit_models: bool,
    /// Skip Monte Carlo corroboration.
    #[arg(long)]
    no_mc: bool,
    /// Paths per Monte Carlo row.
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    /// Base seed; each row adds a fixed offset.
    #[arg(long, default_value_t = 2024)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    /// Down rate.
    #[arg(long, default_value_t = 2.0)]
    a: f64,
    /// Up rate.
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(2..))]
    /// Partition size: singletons {1}, ..., {m-1} and the tail {m, m+1, ...}.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(2..))]
    classes: u64,
    /// Inner radius of the 1/x test function.
    #[arg(long, default_value_t = 1e6)]
    r0: f64,
    /// Write the rows as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn env_threads() -> Result<Option<usize>, Error> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

fn write(path: &Path, contents: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn model_name(path: &Path) -> String {
    path.display().to_string()
}

fn classify(args: ClassifyArgs) -> Result<i32, Error> {
    let model = load_model(&args.model)?;
    let opts = AnalysisOptions { mmatrix_test: args.mmatrix_test, class_bound: args.class_bound };
    let analysis = analyze(&model, args.criterion, opts)?;
    let report = Report::classification(&model_name(&args.model), &analysis);
    print!("{}", report.to_text());
    if let Some(p) = &args.out {
        write(p, &report.to_json())?;
    }
    if let Some(p) = &args.text {
        write(p, &report.to_text())?;
    }
    Ok(if analysis.result.verdict.is_conclusive() { EXIT_OK } else { EXIT_INCONCLUSIVE })
}

fn simulate(args: SimulateArgs) -> Result<i32, Error> {
    let model = load_model(&args.model)?;
    let sde = model.sde_model()?;
    let cfg = EnsembleConfig {
        x0: args.x0,
        i0: (args.i0 - 1) as usize,
        r0: args.r0,
        horizon: args.horizon,
        dt: args.dt,
        trials: args.trials as usize,
        seed: args.seed,
        escape_radius: args.escape_radius,
        threads: env_threads()?,
    };
    let sim = run_ensemble(&sde, &cfg)?;
    let report = Report::simulation(&model_name(&args.model), &sim);
    print!("{}", report.to_text());
    if let Some(p) = &args.out {
        write(p, &report.to_json())?;
    }
    if let Some(p) = &args.text {
        write(p, &report.to_text())?;
    }
    Ok(EXIT_OK)
}

fn reproduce_cmd(args: ReproduceArgs) -> Result<i32, Error> {
    let examples: Vec<Example> = if args.example == "all" {
        Example::ALL.to_vec()
    } else {
        vec![args.example.parse().map_err(Error::Usage)?]
    };
    if args.emit_models && args.out.is_none() {
        return Err(Error::Usage("--emit-models needs --out".into()));
    }
    let opts = ReproduceOptions {
        monte_carlo: !args.no_mc,
        trials: args.trials as usize,
        seed: args.seed,
        threads: env_threads()?,
        ..ReproduceOptions::default()
    };
    let mut all_agree = true;
    for e in examples {
        let r = reproduce(e, &opts)?;
        print!("{}", r.to_table());
        println!();
        all_agree &= r.all_agree();
        if let Some(dir) = &args.out {
            write(&dir.join(format!("{e}.json")), &r.to_json())?;
            write(&dir.join(format!("{e}.txt")), &r.to_table())?;
            if args.emit_models {
                for (name, m) in &r.models {
                    write(&dir.join("models").join(format!("{name}.json")), &m.to_json())?;
                }
            }
        }
    }
    if !all_agree {
        eprintln!("regime: some rows disagree with their expected values (marked NO)");
        return Ok(EXIT_ERROR);
    }
    Ok(EXIT_OK)
}

fn thresholds(args: ThresholdArgs) -> Result<i32, Error> {
    let rows = threshold_rows(args.a, args.b, args.classes as usize, args.r0)?;
    print!("{}", threshold_table(&rows));
    if let Some(p) = &args.out {
        let mut s = serde_json::to_string_pretty(&rows).expect("rows serialise");
        s.push('\n');
        write(p, &s)?;
    }
    Ok(EXIT_OK)
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Classify(a) => classify(a),
        Command::Simulate(a) => simulate(a),
        Command::Reproduce(a) => reproduce_cmd(a),
        Command::Thresholds(a) => thresholds(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("regime: {e}");
            EXIT_ERROR
        }
    }
}
