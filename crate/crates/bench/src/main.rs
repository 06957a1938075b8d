use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use newton_mr_bench::config::{BenchArgs, BenchSettings, FileConfig};
use newton_mr_bench::grid::run_grid_detailed;
use newton_mr_bench::profile::{performance_profile, write_profile, Metric};
use newton_mr_bench::record::{read_records, write_records, RunRecord};
use newton_mr_bench::registry::problem_by_name;
use newton_mr_core::minres::{run_minres, MinresConfig};
use newton_mr_core::problems::{planted_with_rotation, Rotation};
use newton_mr_core::spectrum::{g_relevant_spectrum, krylov_rank, SpectrumConfig, SpectrumReport};
use newton_mr_core::Problem;

#[derive(Debug, Parser)]
#[command(name = "newton-mr", version, about = "Newton-MR benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a solver-by-problem-by-seed grid and write runs.csv plus profiles
    Bench(BenchArgs),
    /// Performance profile of an existing runs CSV
    Profile(ProfileArgs),
    /// Dump the g-relevant spectrum of a planted instance as JSON
    Spectrum(InstanceArgs),
    /// Run MINRES once on a planted instance and write its trace as CSV
    MinresTrace(MinresTraceArgs),
}

#[derive(Debug, Args)]
struct ProfileArgs {
    #[arg(long, default_value = "oracle_total")]
    metric: String,
    #[arg(long = "in")]
    input: PathBuf,
    /// Defaults to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InstanceArgs {
    /// Planted eigenvalues, comma-separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    eigenvalues: Vec<f64>,
    /// Squared projections of g on each planted eigenvector
    #[arg(long, value_delimiter = ',', required = true)]
    weights: Vec<f64>,
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip the random rotation
    #[arg(long)]
    axis_aligned: bool,
    /// Scale applied to g
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
}

#[derive(Debug, Args)]
struct MinresTraceArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    #[arg(long)]
    disable_sol: bool,
    #[arg(long)]
    disable_npc: bool,
    /// Defaults to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn bench(args: BenchArgs) -> Result<()> {
    let file = match &args.config {
        Some(p) => FileConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => FileConfig::default(),
    };
    let settings = BenchSettings::resolve(&args, &file)?;
    let problems: Vec<Arc<dyn Problem>> = settings
        .problems
        .iter()
        .map(|n| problem_by_name(n))
        .collect::<Result<_, _>>()?;
    fs::create_dir_all(&settings.out)?;
    let trace_dir = settings.traces.then_some(settings.out.as_path());
    let cells = run_grid_detailed(&settings.solvers, &problems, &settings.seeds, &settings.protocol, trace_dir);
    let records: Vec<RunRecord> = cells.into_iter().map(|c| c.record).collect();
    write_records(File::create(settings.out.join("runs.csv"))?, &records)?;
    if !records.is_empty() {
        for metric in Metric::ALL {
            let curves = performance_profile(&records, metric)?;
            write_profile(File::create(settings.out.join(format!("profile_{metric}.csv")))?, &curves)?;
        }
    }
    let converged = records.iter().filter(|r| r.status == newton_mr_bench::RunStatus::Converged).count();
    eprintln!("{} runs, {converged} converged, written to {}", records.len(), settings.out.display());
    Ok(())
}

fn profile(args: ProfileArgs) -> Result<()> {
    let metric: Metric = args.metric.parse()?;
    let records = read_records(File::open(&args.input).with_context(|| format!("opening {}", args.input.display()))?)?;
    if records.is_empty() {
        bail!("{} holds no runs", args.input.display());
    }
    write_profile(output(args.out.as_ref())?, &performance_profile(&records, metric)?)?;
    Ok(())
}

fn instance(args: &InstanceArgs) -> Result<newton_mr_core::problems::PlantedInstance> {
    let rotation = if args.axis_aligned { Rotation::Identity } else { Rotation::Random };
    let mut inst = planted_with_rotation(&args.eigenvalues, &args.weights, args.dim, args.seed, rotation)?;
    inst.g *= args.scale;
    Ok(inst)
}

#[derive(Serialize)]
struct SpectrumDump<'a> {
    dim: usize,
    seed: u64,
    krylov_rank: usize,
    report: &'a SpectrumReport,
}

fn spectrum(args: InstanceArgs) -> Result<()> {
    let inst = instance(&args)?;
    let report = g_relevant_spectrum(&inst.matrix, &inst.g, &SpectrumConfig::default())?;
    let dump = SpectrumDump {
        dim: args.dim,
        seed: args.seed,
        krylov_rank: krylov_rank(&inst.matrix, &inst.g, 1e-10),
        report: &report,
    };
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &dump)?;
    writeln!(out)?;
    Ok(())
}

fn minres_trace(args: MinresTraceArgs) -> Result<()> {
    let inst = instance(&args.instance)?;
    let cfg = MinresConfig {
        eta: args.eta,
        max_iters: args.max_iters,
        disable_sol_test: args.disable_sol,
        disable_npc_test: args.disable_npc,
        ..MinresConfig::default()
    };
    let res = run_minres(&inst.matrix.to_operator(), &inst.g, &cfg)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(output(args.out.as_ref())?);
    w.write_record(["t", "phi", "curvature", "hs_norm", "hr_norm", "flag"])?;
    let last = res.trace.len().saturating_sub(1);
    for (i, e) in res.trace.iter().enumerate() {
        let flag = if i == last { format!("{:?}", res.termination) } else { String::new() };
        w.write_record([
            e.t.to_string(),
            format!("{:.16e}", e.residual_norm),
            format!("{:.16e}", e.curvature),
            format!("{:.16e}", e.hs_norm),
            format!("{:.16e}", e.hr_norm),
            flag,
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Bench(a) => bench(a),
        Command::Profile(a) => profile(a),
        Command::Spectrum(a) => spectrum(a),
        Command::MinresTrace(a) => minres_trace(a),
    }
}
