//! Command-line front end.
//!
//! Every subcommand loads an operator from a Matrix Market file (`--input`) or
//! a synthetic spectrum (`--synth`), runs SLQ and writes CSV or JSON. CSV
//! output starts with `#` comment lines recording the version, the full
//! configuration and the seed, so a rerun with the same flags reproduces the
//! file byte for byte.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 usage or I/O error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::distribution::StepDistribution;
use crate::error::{Error, Result};
use crate::operator::{
    full_spectrum, load_matrix_market, write_matrix_market, CsrOperator, SymmetricOperator,
};
use crate::problems::{generate, verify_lower_bound, SpectrumSpec};
use crate::quadrature::{
    apost_wasserstein_bound, gaussian_quadrature, stagnation_level, QuadratureRule,
};
use crate::slq::{bracket_cesm, plan, run, run_with_added_node, SlqOptions, SlqPlan, SlqReport};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Largest dimension for which `converge` computes a reference spectrum densely.
pub const DENSE_REFERENCE_LIMIT: usize = 4096;

const DEFAULT_ETA: f64 = 0.05;

#[derive(Debug, Parser)]
#[command(
    name = "cesm",
    version,
    about = "Spectral density estimation by stochastic Lanczos quadrature"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the cumulative spectral measure.
    Estimate(EstimateArgs),
    /// Tabulate true and bounded Wasserstein errors against the number of Lanczos steps.
    Converge(ConvergeArgs),
    /// Probabilistic bounds on the spectral CDF and eigenvalue counts at given points.
    Bracket(BracketArgs),
    /// Demonstrate the matvec lower bound on the hard uniform instance.
    Lowerbound(LowerboundArgs),
    /// Write a synthetic spectrum as a diagonal Matrix Market file.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// Matrix Market file with a symmetric matrix.
    #[arg(long, conflicts_with = "synth", required_unless_present = "synth")]
    pub input: Option<PathBuf>,
    /// Synthetic spectrum, e.g. `uniform:5000:-1:1` or a JSON object.
    #[arg(long)]
    pub synth: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RunArgs {
    /// Number of random probe vectors.
    #[arg(long)]
    pub nv: Option<usize>,
    /// Lanczos steps per probe vector.
    #[arg(long)]
    pub k: Option<usize>,
    /// Target relative Wasserstein accuracy; plans `nv` and `k`.
    #[arg(long, conflicts_with_all = ["nv", "k"])]
    pub t: Option<f64>,
    /// Failure probability.
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Full reorthogonalization (the default).
    #[arg(long, overrides_with = "no_reorth")]
    #[serde(skip)]
    pub reorth: bool,
    #[arg(long, overrides_with = "reorth")]
    #[serde(skip)]
    pub no_reorth: bool,
    /// Lower spectral endpoint; must not exceed the smallest eigenvalue.
    #[arg(long, requires = "b", allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Upper spectral endpoint; must not be below the largest eigenvalue.
    #[arg(long, requires = "a", allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// Worker threads (default: all cores). Does not affect results.
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl RunArgs {
    pub fn reorthogonalize(&self) -> bool {
        !self.no_reorth
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Output file (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Also write the full JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Step counts: `LO:HI`, `LO:HI:STEP` or a comma list.
    #[arg(long)]
    pub ks: String,
    /// Spectral gap `c:d` for the stagnation column.
    #[arg(long, allow_hyphen_values = true)]
    pub gap: Option<String>,
    /// Divide distances by the spectral width.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Args)]
pub struct BracketArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Evaluation points: a comma list or `LO:HI:COUNT` (default: 101 points across the spectrum).
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    /// Hold for all x simultaneously instead of each x separately.
    #[arg(long)]
    pub uniform: bool,
    /// Plant an extra eigenvalue `y` probed with weight `z`: `y:z`.
    #[arg(long, allow_hyphen_values = true)]
    pub add_node: Option<String>,
}

#[derive(Debug, Args)]
pub struct LowerboundArgs {
    #[arg(long)]
    pub t: f64,
    #[arg(long)]
    pub nv: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of consecutive seeds to try.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub synth: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        // downstream closed the pipe (e.g. `| head`)
        Err(Error::Io { source, .. }) if source.kind() == io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

pub fn main() -> i32 {
    run_cli(std::env::args_os())
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Estimate(args) => cmd_estimate(&args),
        Command::Converge(args) => cmd_converge(&args),
        Command::Bracket(args) => cmd_bracket(&args),
        Command::Lowerbound(args) => cmd_lowerbound(&args),
        Command::Synth(args) => cmd_synth(&args),
    }
}

/// A loaded operator with a description for the output metadata.
enum LoadedOperator {
    Sparse(CsrOperator),
    Diagonal(crate::operator::DiagonalOperator),
}

impl LoadedOperator {
    fn as_dyn(&self) -> &dyn SymmetricOperator {
        match self {
            Self::Sparse(op) => op,
            Self::Diagonal(op) => op,
        }
    }
}

fn load(input: &InputArgs, seed: u64) -> Result<LoadedOperator> {
    match (&input.input, &input.synth) {
        (Some(path), None) => Ok(LoadedOperator::Sparse(load_matrix_market(path)?)),
        (None, Some(spec)) => Ok(LoadedOperator::Diagonal(generate(&spec.parse()?, seed)?)),
        _ => Err(Error::InvalidParameter(
            "give exactly one of --input and --synth".into(),
        )),
    }
}

fn resolve_plan(n: usize, run: &RunArgs) -> Result<SlqPlan> {
    match (run.nv, run.k, run.t) {
        (Some(nv), Some(k), None) => SlqPlan::explicit(nv, k, run.seed),
        (None, None, Some(t)) => {
            Ok(plan(n, t, run.eta.unwrap_or(DEFAULT_ETA))?.with_seed(run.seed))
        }
        _ => Err(Error::InvalidParameter(
            "give either both --nv and --k, or --t (with optional --eta)".into(),
        )),
    }
}

fn slq_options(run: &RunArgs) -> SlqOptions {
    let mut opts = SlqOptions::new().reorthogonalize(run.reorthogonalize());
    if let (Some(a), Some(b)) = (run.a, run.b) {
        opts = opts.interval(a, b);
    }
    if let Some(threads) = run.threads {
        opts = opts.threads(threads);
    }
    opts
}

fn parse_pair(s: &str, what: &str) -> Result<(f64, f64)> {
    let parse = |x: &str| {
        x.trim()
            .parse::<f64>()
            .map_err(|_| Error::InvalidParameter(format!("cannot parse {what} from {s:?}")))
    };
    match s.split_once(':') {
        Some((l, r)) => Ok((parse(l)?, parse(r)?)),
        None => Err(Error::InvalidParameter(format!(
            "{what} must look like a:b, got {s:?}"
        ))),
    }
}

/// `LO:HI`, `LO:HI:STEP` or `k1,k2,...`.
pub fn parse_steps(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidParameter(format!("cannot parse step list {s:?}"));
    let num = |x: &str| x.trim().parse::<usize>().map_err(|_| bad());
    let ks: Vec<usize> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let (lo, hi, step) = match parts.as_slice() {
            [lo, hi] => (num(lo)?, num(hi)?, 1),
            [lo, hi, step] => (num(lo)?, num(hi)?, num(step)?),
            _ => return Err(bad()),
        };
        if step == 0 || lo > hi {
            return Err(bad());
        }
        (lo..=hi).step_by(step).collect()
    } else {
        s.split(',').map(num).collect::<Result<_>>()?
    };
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::InvalidParameter(format!(
            "step counts must be positive, got {s:?}"
        )));
    }
    Ok(ks)
}

/// A comma list, or `LO:HI:COUNT` evenly spaced points.
pub fn parse_points(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidParameter(format!("cannot parse points {s:?}"));
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, count] = parts.as_slice() else {
            return Err(bad());
        };
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        let count: usize = count.trim().parse().map_err(|_| bad())?;
        Ok(linspace(lo, hi, count))
    } else {
        s.split(',')
            .map(|x| x.trim().parse().map_err(|_| bad()))
            .collect()
    }
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count)
            .map(|i| {
                if i + 1 == count {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (count - 1) as f64
                }
            })
            .collect(),
    }
}

/// Everything that determines the output, recorded in it.
#[derive(Serialize)]
struct Metadata<'a, E: Serialize> {
    command: &'static str,
    input: &'a InputArgs,
    #[serde(skip_serializing_if = "Option::is_none")]
    run: Option<&'a RunArgs>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reorthogonalize: Option<bool>,
    extra: E,
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|source| Error::Io {
                path: p.to_path_buf(),
                source,
            })?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

fn io_error(path: Option<&Path>) -> impl Fn(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf),
        source,
    }
}

fn write_header(out: &mut dyn Write, config: &impl Serialize, seed: u64) -> io::Result<()> {
    writeln!(out, "# cesm {VERSION}")?;
    writeln!(
        out,
        "# config {}",
        serde_json::to_string(config).map_err(io::Error::other)?
    )?;
    writeln!(out, "# seed {seed}")
}

#[derive(Serialize)]
struct JsonDocument<'a, C: Serialize, R: Serialize> {
    version: &'static str,
    config: &'a C,
    #[serde(flatten)]
    body: R,
}

fn write_json(
    out: &mut dyn Write,
    config: &impl Serialize,
    body: impl Serialize,
) -> io::Result<()> {
    let doc = JsonDocument {
        version: VERSION,
        config,
        body,
    };
    serde_json::to_writer_pretty(&mut *out, &doc).map_err(io::Error::other)?;
    writeln!(out)
}

fn cmd_estimate(args: &EstimateArgs) -> Result<i32> {
    let op = load(&args.input, args.run.seed)?;
    let op = op.as_dyn();
    let plan = resolve_plan(op.dim(), &args.run)?;
    let report = run(op, &plan, &slq_options(&args.run))?;
    let config = Metadata {
        command: "estimate",
        input: &args.input,
        run: Some(&args.run),
        reorthogonalize: Some(args.run.reorthogonalize()),
        extra: &args.output,
    };

    #[derive(Serialize)]
    struct Body<'a> {
        report: &'a SlqReport,
    }

    let path = args.output.output.as_deref();
    let mut out = open_output(path)?;
    match args.output.format {
        Format::Csv => {
            write_header(&mut *out, &config, plan.seed).map_err(io_error(path))?;
            report
                .estimate
                .write_csv(&mut *out)
                .map_err(io_error(path))?;
        }
        Format::Json => {
            write_json(&mut *out, &config, Body { report: &report }).map_err(io_error(path))?
        }
    }
    out.flush().map_err(io_error(path))?;

    if let Some(report_path) = args.report.as_deref() {
        let mut file = open_output(Some(report_path))?;
        write_json(&mut *file, &config, Body { report: &report })
            .map_err(io_error(Some(report_path)))?;
        file.flush().map_err(io_error(Some(report_path)))?;
    }
    Ok(0)
}

#[derive(Debug, Clone, Serialize)]
struct ConvergeRow {
    k: usize,
    true_dw: Option<f64>,
    apost_dw: f64,
    apriori_dw: f64,
    floor: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    stagnation: Option<f64>,
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn cmd_converge(args: &ConvergeArgs) -> Result<i32> {
    let ks = parse_steps(&args.ks)?;
    let gap = args
        .gap
        .as_deref()
        .map(|g| parse_pair(g, "gap"))
        .transpose()?;
    if args.run.t.is_some() {
        return Err(Error::InvalidParameter(
            "converge takes --nv and --ks, not --t".into(),
        ));
    }
    let nv = args
        .run
        .nv
        .ok_or_else(|| Error::InvalidParameter("converge needs --nv".into()))?;
    let op = load(&args.input, args.run.seed)?;
    let op = op.as_dyn();
    let n = op.dim();
    let k_max = *ks.iter().max().expect("non-empty step list");
    if k_max > n {
        return Err(Error::TooManySteps {
            requested: k_max,
            dimension: n,
        });
    }

    // One run at the largest k; smaller k reuse the leading blocks.
    let plan = SlqPlan::explicit(nv, k_max, args.run.seed)?;
    let report = run(op, &plan, &slq_options(&args.run))?;
    let (a, b) = (report.interval.lower, report.interval.upper);
    let width = report.spectral_width;

    let reference = match op.known_spectrum() {
        Some(eigs) => Some(eigs),
        None if n <= DENSE_REFERENCE_LIMIT => Some(full_spectrum(op)),
        None => {
            eprintln!("warning: no reference spectrum for n = {n} > {DENSE_REFERENCE_LIMIT}; true_dw left empty");
            None
        }
    };
    let reference = reference
        .map(|eigs| StepDistribution::exact_cesm(&eigs))
        .transpose()?;
    let scale = if args.normalize && width > 0.0 {
        1.0 / width
    } else {
        1.0
    };

    let mut rows = Vec::with_capacity(ks.len());
    for &k in &ks {
        let rules = report
            .samples
            .iter()
            .map(|s| gaussian_quadrature(&s.tridiagonal.leading(k.min(s.tridiagonal.steps()))))
            .collect::<Result<Vec<QuadratureRule>>>()?;
        let estimate = StepDistribution::average(
            &rules
                .iter()
                .map(QuadratureRule::to_distribution)
                .collect::<Vec<_>>(),
        )?;
        let true_dw = reference
            .as_ref()
            .map(|r| r.wasserstein(&estimate))
            .transpose()?;
        let stagnation = gap
            .map(|(c, d)| stagnation_level(reference.as_ref().unwrap_or(&estimate), c, d))
            .transpose()?;
        rows.push(ConvergeRow {
            k,
            true_dw: true_dw.map(|x| x * scale),
            apost_dw: apost_wasserstein_bound(&rules, a, b)? * scale,
            apriori_dw: 12.0 * width / (2 * k - 1) as f64 * scale,
            floor: width / n as f64 * scale,
            stagnation: stagnation.map(|x| x * scale),
        });
    }

    #[derive(Serialize)]
    struct Extra<'a> {
        ks: &'a [usize],
        gap: Option<(f64, f64)>,
        normalize: bool,
        output: &'a OutputArgs,
    }
    let config = Metadata {
        command: "converge",
        input: &args.input,
        run: Some(&args.run),
        reorthogonalize: Some(args.run.reorthogonalize()),
        extra: Extra {
            ks: &ks,
            gap,
            normalize: args.normalize,
            output: &args.output,
        },
    };
    let path = args.output.output.as_deref();
    let mut out = open_output(path)?;
    let write = |out: &mut dyn Write| -> io::Result<()> {
        match args.output.format {
            Format::Csv => {
                write_header(out, &config, args.run.seed)?;
                let stagnation_col = if gap.is_some() { ",stagnation" } else { "" };
                writeln!(out, "k,true_dw,apost_dw,apriori_dw,floor{stagnation_col}")?;
                for r in &rows {
                    write!(
                        out,
                        "{},{},{},{},{}",
                        r.k,
                        fmt_opt(r.true_dw),
                        r.apost_dw,
                        r.apriori_dw,
                        r.floor
                    )?;
                    if gap.is_some() {
                        write!(out, ",{}", fmt_opt(r.stagnation))?;
                    }
                    writeln!(out)?;
                }
                Ok(())
            }
            Format::Json => {
                #[derive(Serialize)]
                struct Body<'a> {
                    interval: (f64, f64),
                    rows: &'a [ConvergeRow],
                }
                write_json(
                    out,
                    &config,
                    Body {
                        interval: (a, b),
                        rows: &rows,
                    },
                )
            }
        }
    };
    write(&mut *out).map_err(io_error(path))?;
    out.flush().map_err(io_error(path))?;
    Ok(0)
}

#[derive(Debug, Clone, Serialize)]
struct BracketRow {
    x: f64,
    lower: f64,
    upper: f64,
    count_lo: usize,
    count_hi: usize,
}

fn cmd_bracket(args: &BracketArgs) -> Result<i32> {
    let eta = args.run.eta.unwrap_or(DEFAULT_ETA);
    let added = args
        .add_node
        .as_deref()
        .map(|s| parse_pair(s, "added node"))
        .transpose()?;
    let op = load(&args.input, args.run.seed)?;
    let op = op.as_dyn();
    let n = op.dim();
    let plan = resolve_plan(n, &args.run)?;
    let opts = slq_options(&args.run);
    let report = match added {
        Some((y, z)) => run_with_added_node(op, &plan, &opts, y, z)?,
        None => run(op, &plan, &opts)?,
    };
    let bracket = bracket_cesm(&report, eta, args.uniform)?;
    let xs = match &args.x {
        Some(s) => parse_points(s)?,
        None => linspace(report.interval.lower, report.interval.upper, 101),
    };
    let nf = n as f64;
    let rows: Vec<BracketRow> = xs
        .iter()
        .map(|&x| {
            let (lower, upper) = bracket.at(x);
            BracketRow {
                x,
                lower,
                upper,
                count_lo: (nf * lower - 1e-9).ceil().max(0.0) as usize,
                count_hi: ((nf * upper + 1e-9).floor() as usize).min(n),
            }
        })
        .collect();

    #[derive(Serialize)]
    struct Extra<'a> {
        eta: f64,
        uniform: bool,
        points: &'a [f64],
        add_node: Option<(f64, f64)>,
        output: &'a OutputArgs,
    }
    let config = Metadata {
        command: "bracket",
        input: &args.input,
        run: Some(&args.run),
        reorthogonalize: Some(args.run.reorthogonalize()),
        extra: Extra {
            eta,
            uniform: args.uniform,
            points: &xs,
            add_node: added,
            output: &args.output,
        },
    };
    let path = args.output.output.as_deref();
    let mut out = open_output(path)?;
    let write = |out: &mut dyn Write| -> io::Result<()> {
        match args.output.format {
            Format::Csv => {
                write_header(out, &config, plan.seed)?;
                writeln!(out, "x,lower,upper,count_lo,count_hi")?;
                for r in &rows {
                    writeln!(
                        out,
                        "{},{},{},{},{}",
                        r.x, r.lower, r.upper, r.count_lo, r.count_hi
                    )?;
                }
                Ok(())
            }
            Format::Json => {
                #[derive(Serialize)]
                struct Body<'a> {
                    plan: SlqPlan,
                    radius: f64,
                    rows: &'a [BracketRow],
                }
                write_json(
                    out,
                    &config,
                    Body {
                        plan,
                        radius: bracket.radius,
                        rows: &rows,
                    },
                )
            }
        }
    };
    write(&mut *out).map_err(io_error(path))?;
    out.flush().map_err(io_error(path))?;
    Ok(0)
}

fn cmd_lowerbound(args: &LowerboundArgs) -> Result<i32> {
    let checks = (args.seed..args.seed.saturating_add(args.seeds))
        .map(|seed| verify_lower_bound(args.t, args.nv, args.k, seed).map(|c| (seed, c)))
        .collect::<Result<Vec<_>>>()?;

    #[derive(Serialize)]
    struct Config<'a> {
        command: &'static str,
        t: f64,
        nv: usize,
        k: usize,
        seed: u64,
        seeds: u64,
        output: &'a OutputArgs,
    }
    let config = Config {
        command: "lowerbound",
        t: args.t,
        nv: args.nv,
        k: args.k,
        seed: args.seed,
        seeds: args.seeds,
        output: &args.output,
    };
    let path = args.output.output.as_deref();
    let mut out = open_output(path)?;
    let write = |out: &mut dyn Write| -> io::Result<()> {
        match args.output.format {
            Format::Csv => {
                write_header(out, &config, args.seed)?;
                writeln!(
                    out,
                    "seed,n,matvecs,measured_dw,threshold,apost_dw,violated"
                )?;
                for (seed, c) in &checks {
                    writeln!(
                        out,
                        "{seed},{},{},{},{},{},{}",
                        c.dimension,
                        c.matvecs,
                        c.measured,
                        c.threshold,
                        c.apost_wasserstein,
                        c.violated
                    )?;
                }
                Ok(())
            }
            Format::Json => {
                #[derive(Serialize)]
                struct Row<'a> {
                    seed: u64,
                    #[serde(flatten)]
                    check: &'a crate::problems::LowerBoundCheck,
                }
                #[derive(Serialize)]
                struct Body<'a> {
                    rows: Vec<Row<'a>>,
                }
                let rows = checks
                    .iter()
                    .map(|(seed, check)| Row { seed: *seed, check })
                    .collect();
                write_json(out, &config, Body { rows })
            }
        }
    };
    write(&mut *out).map_err(io_error(path))?;
    out.flush().map_err(io_error(path))?;

    let violations = checks.iter().filter(|(_, c)| c.violated).count();
    if violations > 0 {
        eprintln!(
            "error: {violations} run(s) came within the threshold t = {}",
            args.t
        );
        return Ok(1);
    }
    Ok(0)
}

fn cmd_synth(args: &SynthArgs) -> Result<i32> {
    let spec: SpectrumSpec = args.synth.parse()?;
    let op = generate(&spec, args.seed)?;
    let path = args.output.as_deref();
    let mut out = open_output(path)?;
    write_matrix_market(&CsrOperator::from(&op), &mut *out).map_err(io_error(path))?;
    out.flush().map_err(io_error(path))?;
    Ok(0)
}
