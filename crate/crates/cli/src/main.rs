//! Command-line front end: runs experiments, builds single states and runs
//! the acceptance battery.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use digitstate::angle::Angle;
use digitstate::battery::{run_battery, run_criterion, BatteryConfig, CriterionResult};
use digitstate::experiments::{
    epr_experiment, interference_experiment, polarization_experiment, seed_invariance_suite, trace_rule_experiment,
    weak_reduction_experiment, ExperimentReport, SampleGrid, SeedKind, SeedSuiteConfig,
};
use digitstate::phase::PAdicRational;
use digitstate::reduction::{FlowParams, WalkParams};
use digitstate::states::{
    qubit_state, qutrit_state, BlochPoint, QutritAngles, QutritConfig, StateConfig, DEFAULT_N_MAX,
    DEFAULT_SEED_LENGTH,
};
use digitstate::{Error, Result};

const DEFAULT_SEED: u64 = 7;

#[derive(Parser, Debug)]
#[command(name = "digitstate", version, about = "Digit-string qubit and qutrit experiments")]
#[command(after_help = "Angles are exact multiples of pi such as 0, pi, 1/3pi, pi/4 or 2pi/3. Polar angles also \
accept cos2=N/D, the angle whose cos^2(theta/2) is N/D. Longitudes must lie on the phase grid: 2pi*m/2^k for \
qubits and 2pi*m/3^k for the first qutrit phase, with k no larger than the grid depth.")]
struct Cli {
    /// Seed for sampled grids and random walks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Phase grid depth K; exhaustive grids hold 2^K points.
    #[arg(long, global = true)]
    depth: Option<u32>,
    /// Length of the seed digit string.
    #[arg(long, global = true)]
    length: Option<usize>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory receiving <experiment>.json and <experiment>.csv.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Format written to standard output.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fraction of states with value below 1/2 against cos^2(theta/2).
    Polarization {
        #[arg(long, default_value = "1/3pi")]
        theta: String,
        /// Draw this many longitudes at random instead of the whole grid.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Three-level attractor frequencies against the trace rule.
    TraceRule {
        #[arg(long, default_value = "cos2=1/3")]
        theta1: String,
        #[arg(long, default_value = "1/2pi")]
        theta2: String,
        /// Number of sampled (lambda1, lambda2) pairs.
        #[arg(long, default_value_t = 4096)]
        samples: usize,
    },
    /// Correlation of an EPR ensemble against -cos(dtheta).
    Epr {
        #[arg(long, default_value = "1/3pi")]
        dtheta: String,
        #[arg(long, default_value_t = 16384)]
        pairs: u64,
    },
    /// Beamsplitter and Mach-Zehnder detection statistics.
    Interference,
    /// North-pole absorption of weak-reduction walks against cos^2(theta/2).
    WeakReduction {
        #[arg(long, default_value = "1/2pi")]
        theta: String,
        #[arg(long, default_value_t = 2000)]
        walks: usize,
        /// Longitude perturbations are multiples of 2pi/2^jitter_depth.
        #[arg(long, default_value_t = 12)]
        jitter_depth: u32,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.25)]
        dt: f64,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
    },
    /// Polarization and trace-rule statistics under different seed strings.
    SeedInvariance {
        /// Compare against a constant seed, which should fail.
        #[arg(long)]
        negative_control: bool,
        /// Sampled pairs for the trace-rule part.
        #[arg(long, default_value_t = 1024)]
        samples: usize,
    },
    /// Prints the digits of a single state.
    State {
        #[command(subcommand)]
        kind: StateKind,
    },
    /// Runs the acceptance battery and prints a pass/fail table.
    Suite {
        /// Directory receiving suite.json.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Replace every normal seed by a constant string.
        #[arg(long)]
        negative_control: bool,
        /// Run only these criteria, by number.
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

#[derive(Subcommand, Debug)]
enum StateKind {
    /// r(theta, lambda) from the binary seed.
    Qubit {
        #[arg(long, default_value = "0")]
        theta: String,
        #[arg(long, default_value = "0")]
        lambda: String,
        /// Digits to print.
        #[arg(long, default_value_t = 64)]
        digits: usize,
    },
    /// The three-level state from the base-3 seed.
    Qutrit {
        #[arg(long, default_value = "cos2=1/3")]
        theta1: String,
        #[arg(long, default_value = "1/2pi")]
        theta2: String,
        #[arg(long, default_value = "0")]
        lambda1: String,
        #[arg(long, default_value = "0")]
        lambda2: String,
        #[arg(long, default_value_t = 64)]
        digits: usize,
    },
}

fn parse_angle(s: &str) -> Result<Angle> {
    let a: Angle = s.parse()?;
    if matches!(a, Angle::Radians(_)) {
        return Err(Error::Parse(format!("angle {s:?} must be an exact multiple of pi, not radians")));
    }
    Ok(a)
}

/// A longitude given as a multiple of pi, as a fraction of a full turn.
fn parse_longitude(s: &str, base: u32, max_depth: u32) -> Result<PAdicRational> {
    match parse_angle(s)? {
        Angle::PiFraction { numer, denom } => PAdicRational::from_ratio(base, numer, 2 * denom, max_depth),
        _ => Err(Error::Parse(format!("longitude {s:?} must be a multiple of pi"))),
    }
}

fn qubit_config(cli: &Cli) -> Result<StateConfig> {
    let n_max = cli.depth.unwrap_or(DEFAULT_N_MAX).max(DEFAULT_N_MAX);
    let length = cli.length.unwrap_or(DEFAULT_SEED_LENGTH);
    StateConfig::champernowne(n_max, length, length / 4)
}

fn qutrit_config(cli: &Cli) -> Result<QutritConfig> {
    let base = QutritConfig::default();
    match cli.length {
        None => Ok(base),
        Some(len) => {
            let seed = digitstate::digits::champernowne(3, len)?;
            QutritConfig::new(seed, base.n_max2, base.n_max3, (len / 4).min(base.target_length))
        }
    }
}

fn render(report: &ExperimentReport, format: Format) -> String {
    match format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => report.to_csv(),
    }
}

fn write_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    let io = |e: std::io::Error| Error::Precondition(format!("cannot write to {}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    fs::write(dir.join(format!("{}.json", report.name)), report.to_json() + "\n").map_err(io)?;
    fs::write(dir.join(format!("{}.csv", report.name)), report.to_csv()).map_err(io)?;
    Ok(())
}

fn emit(report: ExperimentReport, cli: &Cli) -> Result<ExitCode> {
    match &cli.out {
        Some(dir) => {
            write_report(&report, dir)?;
            println!(
                "{} {}: wrote {}",
                report.name,
                if report.pass { "PASS" } else { "FAIL" },
                dir.join(format!("{}.{{json,csv}}", report.name)).display()
            );
        }
        None => print!("{}", render(&report, cli.format)),
    }
    Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn print_digits(s: &digitstate::digits::DigitString, count: usize, format: Format) {
    let shown: String = s
        .iter()
        .take(count)
        .map(|d| char::from_digit(d, 36).expect("digit below 36"))
        .collect();
    match format {
        Format::Json => println!(
            "{}",
            serde_json::json!({ "base": s.base(), "length": s.len(), "leading_digits": shown })
        ),
        Format::Csv => println!("base,length,leading_digits\n{},{},{shown}", s.base(), s.len()),
    }
}

fn run_suite(cli: &Cli, json: &Option<PathBuf>, negative_control: bool, only: &[usize]) -> Result<ExitCode> {
    let cfg = BatteryConfig { negative_control };
    let results: Vec<CriterionResult> = if only.is_empty() {
        run_battery(&cfg, |r| println!("{}", r.line()))
    } else {
        only.iter()
            .map(|&id| {
                let r = run_criterion(id, &cfg)?;
                println!("{}", r.line());
                Ok(r)
            })
            .collect::<Result<_>>()?
    };
    let passed = results.iter().filter(|r| r.pass).count();
    println!("{passed} of {} criteria pass", results.len());
    if let Some(dir) = json.as_ref().or(cli.out.as_ref()) {
        let io = |e: std::io::Error| Error::Precondition(format!("cannot write to {}: {e}", dir.display()));
        fs::create_dir_all(dir).map_err(io)?;
        let summary = serde_json::json!({
            "schema_version": digitstate::experiments::SCHEMA_VERSION,
            "negative_control": negative_control,
            "passed": passed,
            "total": results.len(),
            "criteria": results,
        });
        let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
        fs::write(dir.join("suite.json"), text + "\n").map_err(io)?;
    }
    Ok(if passed == results.len() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    match &cli.command {
        Command::Polarization { theta, samples } => {
            let cfg = qubit_config(cli)?;
            let depth = cli.depth.unwrap_or(DEFAULT_N_MAX);
            let grid = match samples {
                Some(n) => SampleGrid::sampled(2, depth, *n, seed),
                None => SampleGrid::exhaustive(2, depth),
            };
            emit(polarization_experiment(&parse_angle(theta)?, &grid, &cfg)?, cli)
        }
        Command::TraceRule { theta1, theta2, samples } => {
            let cfg = qutrit_config(cli)?;
            let g1 = SampleGrid::sampled(3, cli.depth.unwrap_or(cfg.n_max3).min(cfg.n_max3), *samples, seed);
            let g2 = SampleGrid::sampled(2, cfg.n_max2, *samples, seed);
            emit(trace_rule_experiment(&parse_angle(theta1)?, &parse_angle(theta2)?, &g1, &g2, &cfg)?, cli)
        }
        Command::Epr { dtheta, pairs } => {
            let cfg = qubit_config(cli)?;
            emit(epr_experiment(&parse_angle(dtheta)?, *pairs, &cfg, cli.seed)?, cli)
        }
        Command::Interference => {
            let cfg = qubit_config(cli)?;
            let grid = SampleGrid::exhaustive(2, cli.depth.unwrap_or(DEFAULT_N_MAX));
            emit(interference_experiment(&grid, &cfg)?, cli)
        }
        Command::WeakReduction { theta, walks, jitter_depth, alpha, dt, max_steps } => {
            let cfg = qubit_config(cli)?;
            let flow = FlowParams { alpha: *alpha, dt: *dt, max_steps: *max_steps, ..FlowParams::default() };
            let params = WalkParams { flow, jitter_depth: *jitter_depth, ..WalkParams::default() };
            emit(weak_reduction_experiment(&parse_angle(theta)?, *walks, &params, &cfg, seed)?, cli)
        }
        Command::SeedInvariance { negative_control, samples } => {
            let mut suite = SeedSuiteConfig { trace_samples: *samples, trace_seed: seed, ..SeedSuiteConfig::default() };
            if let Some(d) = cli.depth {
                suite.polarization_depth = d;
                suite.n_max = d.max(DEFAULT_N_MAX);
            }
            if let Some(len) = cli.length {
                suite.seed_length = len;
                suite.target_length = len / 4;
            }
            if *negative_control {
                suite.seeds = vec![SeedKind::Champernowne, SeedKind::Constant];
            }
            emit(seed_invariance_suite(&suite)?, cli)
        }
        Command::State { kind: StateKind::Qubit { theta, lambda, digits } } => {
            let cfg = qubit_config(cli)?;
            let lambda = parse_longitude(lambda, 2, cfg.n_max())?;
            let s = qubit_state(&cfg, &BlochPoint::new(parse_angle(theta)?, lambda)?)?;
            print_digits(&s, *digits, cli.format);
            Ok(ExitCode::SUCCESS)
        }
        Command::State { kind: StateKind::Qutrit { theta1, theta2, lambda1, lambda2, digits } } => {
            let cfg = qutrit_config(cli)?;
            let l1 = parse_longitude(lambda1, 3, cfg.n_max3)?;
            let l2 = parse_longitude(lambda2, 2, cfg.n_max2)?;
            let angles = QutritAngles::new(parse_angle(theta1)?, parse_angle(theta2)?, l1, l2)?;
            print_digits(&qutrit_state(&cfg, &angles)?, *digits, cli.format);
            Ok(ExitCode::SUCCESS)
        }
        Command::Suite { json, negative_control, only } => run_suite(cli, json, *negative_control, only),
    }
}

fn explain(e: &Error) -> String {
    match e {
        Error::OffGrid { base, max_depth, .. } => format!(
            "error: {e}\nStates exist only at longitudes 2pi*m/{base}^k with k <= {max_depth}. Off that grid the \
state is undefined rather than approximated, so no value can be reported."
        ),
        _ => format!("error: {e}"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", explain(&e));
            ExitCode::from(2)
        }
    }
}
