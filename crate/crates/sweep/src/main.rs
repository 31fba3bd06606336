use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gpi_core::condition::{theorem_gap, ConstraintVariant};
use gpi_core::exact::{format_float, format_rational, to_f64, Sign};
use gpi_core::gaussian::gaussian_gpi_gap;
use gpi_core::multinomial::{scaled_gap_finite, MultinomialSpec, ProbVector};
use gpi_core::{Budget, Error, ExactRational};
use gpi_sweep::convergence::run_convergence;
use gpi_sweep::output::{render_convergence, render_matrix, write_csv, write_json};
use gpi_sweep::sampler::{ramp_mean, SamplerKind, DEFAULT_GRID};
use gpi_sweep::sweep::{run_sweep, SweepConfig, DEFAULT_SAMPLES};
use gpi_sweep::verify::{verify_with, VerifyContext};

const EXIT_INVARIANT: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_BUDGET: u8 = 3;

/// Exact evaluation of the multinomial GPI condition and its Gaussian limit.
#[derive(Parser)]
#[command(name = "gpi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the constrained double sum at one point.
    Gap(GapArgs),
    /// Gaussian gap E[prod X_i^2m] - prod E[X_i^2m] for Sigma = diag(p) - p p^T.
    Oracle(PointArgs),
    /// Scaled finite-N multinomial gap.
    FiniteN(FiniteArgs),
    /// Evaluate the gaps over an (m, d) grid of sampled points.
    Sweep(SweepArgs),
    /// Finite-N error against the Gaussian gap over a list of N.
    Converge(ConvergeArgs),
    /// Run the invariant battery.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct PointArgs {
    /// Half the exponent, so each coordinate is raised to 2m.
    #[arg(long)]
    m: u32,
    /// Probability vector, e.g. "1/2,1/4".
    #[arg(long)]
    p: String,
}

#[derive(Args)]
struct GapArgs {
    #[arg(long)]
    m: u32,
    /// Dimension. Defaults to the length of --p; without --p the ramp mean point is used.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long, value_enum, default_value_t = VariantArg::Both)]
    variant: VariantArg,
}

#[derive(Args)]
struct FiniteArgs {
    #[command(flatten)]
    point: PointArgs,
    /// Number of trials.
    #[arg(long = "N", visible_alias = "n")]
    trials: u64,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    point: PointArgs,
    /// Ascending trial counts, e.g. "32,64,128,256".
    #[arg(long = "N-list", visible_alias = "n-list", value_delimiter = ',', required = true)]
    trials: Vec<u64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Samples per (m, d) cell in the sign survey.
    #[arg(long, default_value_t = 4)]
    survey_samples: usize,
    #[arg(long, default_value_t = 2022)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Equality,
    Slack,
    Both,
}

impl VariantArg {
    fn variants(self) -> Vec<ConstraintVariant> {
        match self {
            VariantArg::Equality => vec![ConstraintVariant::Equality],
            VariantArg::Slack => vec![ConstraintVariant::Slack],
            VariantArg::Both => ConstraintVariant::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 4)]
    m_max: u32,
    #[arg(long, default_value_t = 4)]
    d_max: usize,
    /// Samples per (m, d) cell.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value = "dirichlet-ramp")]
    sampler: SamplerKind,
    /// Grid denominator for sampled points.
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file. Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, value_enum, default_value_t = VariantArg::Both)]
    variants: VariantArg,
    /// Also compute scaled finite-N gaps, e.g. "16,64".
    #[arg(long, value_delimiter = ',')]
    finite_n: Vec<u64>,
    /// Points for the fixed sampler, separated by ';', e.g. "1/2,1/4;1/3".
    #[arg(long)]
    fixed: Option<String>,
    /// Record per-point wall time (breaks byte-identical output).
    #[arg(long)]
    timings: bool,
    /// Skip the Gaussian gap.
    #[arg(long)]
    no_oracle: bool,
    /// Do not print the summary matrix to stderr.
    #[arg(long)]
    quiet: bool,
}

enum Failure {
    Core(Error),
    Io(String),
    Invariant,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_budget() { EXIT_BUDGET } else { EXIT_INPUT })
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Invariant) => ExitCode::from(EXIT_INVARIANT),
    }
}

fn print_value(label: &str, v: &ExactRational) {
    println!(
        "{label}: {} ({}, {})",
        format_rational(v),
        format_float(to_f64(v)),
        Sign::of(v)
    );
}

fn run(command: Command) -> Result<(), Failure> {
    let budget = Budget::from_env();
    match command {
        Command::Gap(args) => {
            let p = match (&args.p, args.d) {
                (Some(text), d) => {
                    let p = ProbVector::parse(text)?;
                    if let Some(d) = d.filter(|&d| d != p.dim()) {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            found: p.dim(),
                        }
                        .into());
                    }
                    p
                }
                (None, Some(d)) if d > 0 => ramp_mean(d),
                _ => {
                    return Err(Error::InvalidArgument("give --p or a positive --d".into()).into())
                }
            };
            println!("p = ({p}), m = {}", args.m);
            for v in args.variant.variants() {
                print_value(&format!("theorem_gap[{v}]"), &theorem_gap(&p, args.m, v, &budget)?);
            }
        }
        Command::Oracle(args) => {
            let p = ProbVector::parse(&args.p)?;
            println!("p = ({p}), m = {}", args.m);
            print_value("gaussian_gap", &gaussian_gpi_gap(&p, args.m, &budget)?);
        }
        Command::FiniteN(args) => {
            let p = ProbVector::parse(&args.point.p)?;
            let spec = MultinomialSpec::new(args.trials, p.clone())?;
            println!("p = ({p}), m = {}, N = {}", args.point.m, args.trials);
            print_value("scaled_gap", &scaled_gap_finite(&spec, args.point.m, &budget)?);
        }
        Command::Converge(args) => {
            let p = ProbVector::parse(&args.point.p)?;
            let table = run_convergence(&p, args.point.m, &args.trials, &budget)?;
            print!("{}", render_convergence(&table));
        }
        Command::Sweep(args) => sweep(args, budget)?,
        Command::Verify(args) => {
            let ctx = VerifyContext {
                survey_samples: args.survey_samples,
                seed: args.seed,
                budget,
                ..VerifyContext::default()
            };
            let report = verify_with(&ctx);
            print!("{}", report.render());
            if !report.passed() {
                return Err(Failure::Invariant);
            }
        }
    }
    Ok(())
}

fn sweep(args: SweepArgs, budget: Budget) -> Result<(), Failure> {
    let fixed_points = match &args.fixed {
        Some(text) => text
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(ProbVector::parse)
            .collect::<Result<Vec<_>, _>>()?,
        None => Vec::new(),
    };
    let sampler = if args.fixed.is_some() {
        SamplerKind::FixedList
    } else {
        args.sampler
    };
    let config = SweepConfig {
        m_max: args.m_max,
        d_max: args.d_max,
        samples_per_cell: args.samples,
        sampler,
        grid: args.grid,
        seed: args.seed,
        variants: args.variants.variants(),
        oracle: !args.no_oracle,
        finite_n: args.finite_n,
        fixed_points,
        timings: args.timings,
        workers: args.workers,
        budget,
    };
    let report = run_sweep(&config)?;

    let sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut sink = BufWriter::new(sink);
    match args.format {
        Format::Csv => write_csv(&report, &mut sink)?,
        Format::Json => write_json(&report, &mut sink)?,
    }
    sink.flush()?;

    if !args.quiet {
        for kind in report.summary.kinds() {
            eprint!("{}", render_matrix(&report.summary, &kind));
        }
        eprintln!(
            "{} records, {} findings, {} conjecture-watch entries",
            report.records.len(),
            report.findings.len(),
            report.conjecture_watch.len()
        );
    }
    Ok(())
}
