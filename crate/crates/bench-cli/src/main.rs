use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use optbound::bench::{emit_bound_curve, run_bench, BenchConfig, CurveGrid, ProblemSpec};
use optbound::bound::io::read_records;
use optbound::methods::{MethodId, WeightRule};
use optbound::problems::{LrspConfig, QuadStart};
use optbound::Error;

#[derive(Parser)]
#[command(name = "optbound", version, about = "Gradient methods with memory: benchmarks and bound curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a grid of methods on a test problem and print the results table.
    Bench(BenchArgs),
    /// Evaluate the lower bound of one-dimensional records on a grid.
    BoundCurve(CurveArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemKind {
    Quad,
    Lrsp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Md,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    #[value(alias = "listing")]
    Fast,
    #[value(alias = "eq89")]
    Optimized,
}

#[derive(Clone, Copy, ValueEnum)]
enum Start {
    InvSqrtSigma,
    InvSigma,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Audit {
    Esp,
    Potential,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum, default_value = "quad")]
    problem: ProblemKind,
    /// Dimension (QUAD size or LRSP column count).
    #[arg(long)]
    n: Option<usize>,
    /// LRSP row count.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    density: Option<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    method: Vec<MethodId>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    bundle: Vec<usize>,
    #[arg(long = "L-scale", default_value_t = 1.0)]
    l_scale: f64,
    #[arg(long, default_value_t = 1e-4)]
    eps_rel: f64,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seed: Vec<u64>,
    #[arg(long, default_value_t = 2)]
    newton_iters: usize,
    #[arg(long)]
    inner_cap: Option<usize>,
    /// Subsolver tolerance as a multiple of the absolute accuracy.
    #[arg(long)]
    delta_factor: Option<f64>,
    #[arg(long, value_enum, default_value = "optimized")]
    weight_rule: Rule,
    #[arg(long, value_enum, default_value = "inv-sqrt-sigma")]
    quad_start: Start,
    #[arg(long, value_delimiter = ',')]
    audit: Vec<Audit>,
    #[arg(long, default_value_t = 10_000_000)]
    max_outer: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long)]
    records: PathBuf,
    #[arg(long = "L")]
    lipschitz: f64,
    /// `start:end:step`.
    #[arg(long, allow_hyphen_values = true)]
    grid: CurveGrid,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn bench_config(args: &BenchArgs) -> BenchConfig {
    let problem = match args.problem {
        ProblemKind::Quad => ProblemSpec::Quad {
            n: args.n.unwrap_or(1000),
            start: match args.quad_start {
                Start::InvSqrtSigma => QuadStart::InvSqrtSigma,
                Start::InvSigma => QuadStart::InvSigma,
            },
        },
        ProblemKind::Lrsp => {
            let d = LrspConfig::default();
            ProblemSpec::Lrsp(LrspConfig {
                m: args.m.unwrap_or(d.m),
                n: args.n.unwrap_or(d.n),
                density: args.density.unwrap_or(d.density),
                ..d
            })
        }
    };
    let mut cfg = BenchConfig::new(problem, args.method.clone());
    cfg.bundles = args.bundle.clone();
    cfg.l_scale = args.l_scale;
    cfg.eps_rel = args.eps_rel;
    cfg.seeds = args.seed.clone();
    cfg.newton_iters = args.newton_iters;
    cfg.inner_cap = args.inner_cap;
    cfg.delta_factor = args.delta_factor;
    cfg.weight_rule = match args.weight_rule {
        Rule::Fast => WeightRule::Fast,
        Rule::Optimized => WeightRule::Optimized,
    };
    cfg.audit_esp = args.audit.contains(&Audit::Esp);
    cfg.audit_potential = args.audit.contains(&Audit::Potential);
    cfg.max_outer = args.max_outer;
    cfg
}

fn bench(args: &BenchArgs) -> Result<(), Error> {
    let cfg = bench_config(args);
    cfg.validate()?;
    if cfg.has_uncapped_subsolver() {
        eprintln!("warning: GMM runs with an unlimited inner iteration budget; use --inner-cap to bound it");
    }
    let report = run_bench(&cfg)?;
    let mut out = output(&args.out)?;
    match args.format {
        Format::Csv => report.write_csv(&mut out)?,
        Format::Md => out.write_all(report.to_markdown().as_bytes())?,
    }
    out.flush()?;
    Ok(())
}

fn bound_curve(args: &CurveArgs) -> Result<(), Error> {
    let records = read_records(File::open(&args.records)?)?;
    let mut out = output(&args.out)?;
    emit_bound_curve(&records, args.lipschitz, &args.grid, &mut out)?;
    out.flush()?;
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::NonFinite { .. } | Error::EmptyModel => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Bench(args) => bench(args),
        Command::BoundCurve(args) => bound_curve(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
