use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{error, info};
use rayon::prelude::*;

use mqite::decomposition::{check_strings, check_suite};
use mqite::experiment::{exit_code, preset, presets, run_experiment, ExperimentConfig, Manifest};
use mqite::mqite::RunRecord;
use mqite::problems::{maxcut, ProblemSpec};
use mqite::qse::{build_subspace, solve_gev, DEFAULT_SVD_CUT};
use mqite::Error;

/// Default output root when neither `--out` nor the config names a directory.
const OUTPUT_ROOT_VAR: &str = "MQITE_OUTPUT_ROOT";

#[derive(Parser)]
#[command(name = "mqite", version, about = "Modified quantum imaginary-time evolution experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run experiments from config files and/or presets.
    Run(RunArgs),
    /// List built-in presets.
    Presets {
        /// Print the full config of one preset as JSON.
        #[arg(long)]
        show: Option<String>,
    },
    /// Problem generators.
    Problems {
        #[command(subcommand)]
        command: ProblemsCommand,
    },
    /// Check gate decompositions against dense exponentials and print a CSV report.
    DecomposeCheck(DecomposeArgs),
    /// Subspace expansion over a finished run.
    RunQse(QseArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config files (JSON).
    configs: Vec<PathBuf>,
    /// Built-in preset names; may repeat.
    #[arg(long = "preset")]
    presets: Vec<String>,
    /// Override the MQITE seed; several seeds fan out into separate runs.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    /// Output directory (single run) or parent directory (several runs).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum ProblemsCommand {
    /// Write a Hamiltonian file (and the edge list for Max-Cut).
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Maxcut,
    Tfim,
    RandomKlocal,
    #[value(name = "validation-6q")]
    Validation6q,
    NuclearPshell,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long = "J", default_value_t = 1.0)]
    j: f64,
    #[arg(long = "hx", default_value_t = 1.0)]
    hx: f64,
    #[arg(long, default_value_t = 6)]
    n_terms: usize,
    #[arg(long, default_value = "XY")]
    ops: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Max-Cut edge list; defaults to `<out>.edges.csv`.
    #[arg(long)]
    edges_out: Option<PathBuf>,
}

#[derive(Args)]
struct DecomposeArgs {
    /// Exhaustive over every string up to this many qubits.
    #[arg(long, default_value_t = 5)]
    max_n: usize,
    /// Additional random strings on 6 to 8 qubits.
    #[arg(long, default_value_t = 200)]
    random: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QseArgs {
    /// `run.json` written by `run`.
    #[arg(long)]
    record: PathBuf,
    /// Config with the problem; defaults to the manifest next to the record.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    stride: usize,
    #[arg(long, default_value_t = DEFAULT_SVD_CUT)]
    svd_cut: f64,
    /// JSON destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Prints a line, ignoring a closed stdout (e.g. piped into `head`).
fn emit(line: &str) {
    let _ = writeln!(std::io::stdout(), "{line}");
}

fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_VAR).map_or_else(|| PathBuf::from("runs"), PathBuf::from)
}

struct Job {
    label: String,
    config: ExperimentConfig,
    out: PathBuf,
}

fn plan(args: &RunArgs) -> Result<Vec<Job>, Error> {
    let mut named = Vec::new();
    for p in &args.configs {
        let cfg = ExperimentConfig::load(p).map_err(|e| Error::InvalidArgument(format!("{}: {e}", p.display())))?;
        let label = p.file_stem().map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
        named.push((label, cfg));
    }
    for name in &args.presets {
        named.push((name.clone(), preset(name)?));
    }
    if named.is_empty() {
        return Err(Error::InvalidArgument("nothing to run: pass config files or --preset".into()));
    }
    let mut jobs = Vec::new();
    for (label, cfg) in named {
        if args.seeds.is_empty() {
            jobs.push((label, cfg));
        } else {
            for &s in &args.seeds {
                let mut c = cfg.clone();
                c.mqite.seed = s;
                jobs.push((format!("{label}-seed{s}"), c));
            }
        }
    }
    let single = jobs.len() == 1;
    Ok(jobs
        .into_iter()
        .map(|(label, config)| {
            let out = match (&args.out, &config.outputs) {
                (Some(o), _) if single => o.clone(),
                (Some(o), _) => o.join(&label),
                (None, Some(o)) => o.clone(),
                (None, None) => output_root().join(&label),
            };
            Job { label, config, out }
        })
        .collect())
}

fn cmd_run(args: RunArgs) -> i32 {
    let jobs = match plan(&args) {
        Ok(j) => j,
        Err(e) => {
            error!("{e}");
            return exit_code(&e);
        }
    };
    let run = |job: &Job| -> i32 {
        match run_experiment(&job.config, &job.out) {
            Ok(o) => {
                let f = o.record.final_sweep();
                emit(&format!(
                    "{}: E = {:.6} (exact {}), eta_max = {}, wrote {}",
                    job.label,
                    f.energy,
                    o.record.exact_energy.map_or("n/a".into(), |e| format!("{e:.6}")),
                    o.record.eta_max(),
                    job.out.display()
                ));
                if let Some(q) = o.qse {
                    emit(&format!("{}: QSE energy {:.6} (rank {})", job.label, q.energy, q.rank));
                }
                0
            }
            Err(e) => {
                error!("{}: {e}", job.label);
                exit_code(&e)
            }
        }
    };
    let codes: Vec<i32> = if args.jobs > 1 {
        match rayon::ThreadPoolBuilder::new().num_threads(args.jobs).build() {
            Ok(pool) => pool.install(|| jobs.par_iter().map(run).collect()),
            Err(e) => {
                error!("thread pool: {e}");
                return 1;
            }
        }
    } else {
        jobs.iter().map(run).collect()
    };
    codes.into_iter().max().unwrap_or(0)
}

fn cmd_presets(show: Option<String>) -> Result<(), Error> {
    match show {
        Some(name) => emit(&preset(&name)?.to_json()?),
        None => {
            for (name, cfg) in presets() {
                let m = &cfg.mqite;
                emit(&format!("{name}\t{}\tdelta={} T={} eps={} eta_cap={} chi={}", cfg.problem.name(), m.delta, m.total_time, m.epsilon, m.eta_cap, m.chi));
            }
        }
    }
    Ok(())
}

fn cmd_gen(a: GenArgs) -> Result<(), Error> {
    let spec = match a.kind {
        Kind::Maxcut => ProblemSpec::Maxcut { n: a.n, k: a.k, j: a.j, seed: a.seed },
        Kind::Tfim => ProblemSpec::Tfim { n: a.n, j: a.j, h_x: a.hx },
        Kind::RandomKlocal => ProblemSpec::RandomKlocal { n: a.n, k: a.k, n_terms: a.n_terms, ops: a.ops.clone(), seed: a.seed },
        Kind::Validation6q => ProblemSpec::Validation6q,
        Kind::NuclearPshell => ProblemSpec::NuclearPshell { occupied: None },
    };
    let problem = spec.build()?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    problem.hamiltonian.save(&a.out)?;
    info!("wrote {} terms to {}", problem.hamiltonian.len(), a.out.display());
    if matches!(a.kind, Kind::Maxcut) {
        let (g, _) = maxcut(a.n, a.k, a.j, a.seed)?;
        let path = a.edges_out.unwrap_or_else(|| a.out.with_extension("edges.csv"));
        fs::write(&path, g.edges_csv())?;
        info!("wrote {} edges to {}", g.edges.len(), path.display());
    }
    Ok(())
}

fn cmd_decompose(a: DecomposeArgs) -> Result<(), Error> {
    let strings = check_suite(a.max_n, a.random, 6..=8, a.seed)?;
    let rows = check_strings(&strings)?;
    let sink: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    for r in &rows {
        w.serialize(r).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    let worst = rows.iter().map(|r| r.max_deviation).fold(0.0, f64::max);
    info!("{} strings, worst deviation {worst:e}", strings.len());
    Ok(())
}

fn problem_for_record(record: &Path, config: Option<&Path>) -> Result<ProblemSpec, Error> {
    match config {
        Some(c) => Ok(ExperimentConfig::load(c)?.problem),
        None => {
            let m = record.with_file_name("manifest.json");
            let manifest: Manifest = serde_json::from_str(&fs::read_to_string(&m).map_err(|e| {
                Error::InvalidArgument(format!("{}: {e}; pass --config to name the problem", m.display()))
            })?)?;
            Ok(manifest.config.problem)
        }
    }
}

fn cmd_qse(a: QseArgs) -> Result<(), Error> {
    let record = RunRecord::from_json(&fs::read_to_string(&a.record)?)?;
    let problem = problem_for_record(&a.record, a.config.as_deref())?.build()?;
    let result = solve_gev(&build_subspace(&record, &problem.hamiltonian, a.stride)?, a.svd_cut)?;
    let text = serde_json::to_string_pretty(&result)?;
    match &a.out {
        Some(p) => fs::write(p, text)?,
        None => emit(&text),
    }
    info!("QSE energy {:.6} from {} snapshots (rank {})", result.energy, result.dimension, result.rank);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let done = |r: Result<(), Error>| match r {
        Ok(()) => 0,
        Err(e) => {
            error!("{e}");
            exit_code(&e)
        }
    };
    let code = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Presets { show } => done(cmd_presets(show)),
        Command::Problems { command: ProblemsCommand::Gen(a) } => done(cmd_gen(a)),
        Command::DecomposeCheck(a) => done(cmd_decompose(a)),
        Command::RunQse(a) => done(cmd_qse(a)),
    };
    ExitCode::from(code as u8)
}
