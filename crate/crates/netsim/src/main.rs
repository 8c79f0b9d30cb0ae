//! `netsim` command-line tool.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or configuration
//! error, 3 I/O error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use netsim::config::{ConfigFile, SEED_ENV};
use netsim::experiments::{
    prevalence_histogram, replay_first, run_replicated, step_size_sweep, ExperimentConfig, ExperimentOutput, Mode,
};
use netsim::formats::{
    error_trace_rows, opt_cell, prevalence_csv, sig9, trajectory_csv, write_edge_list, ERROR_TRACE_HEADER,
};
use netsim::verify::{run_suite, Suite};
use netsim_core::bounds::{bound_for, BoundInputs};
use netsim_core::graph::{make_small_world, make_torus, make_tree};
use netsim_core::process::ProcessKind;

#[derive(Parser)]
#[command(name = "netsim", version, about = "SI/SIS contact-process simulation on graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a graph and write it as an edge list.
    GenerateGraph(GraphArgs),
    /// Run replicated simulations and write CSV records.
    Run(RunArgs),
    /// Mean prevalence gap against step size with a log-log fit.
    Sweep(RunArgs),
    /// Run the property and oracle suites.
    Verify(VerifyArgs),
    /// Tabulate the global-error bounds.
    Bounds(BoundsArgs),
}

#[derive(Args)]
struct GraphArgs {
    /// torus, small-world or tree
    #[arg(long, default_value = "torus")]
    kind: String,
    #[arg(long, default_value_t = 30)]
    width: usize,
    #[arg(long, default_value_t = 30)]
    height: usize,
    /// Target degree of a small world.
    #[arg(long, default_value_t = 5)]
    degree: usize,
    /// Small-world seed; falls back to NETSIM_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Children of the tree root.
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Tree degree: inner nodes have k - 1 children.
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 6)]
    depth: usize,
    /// Edge-list destination; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// graph.kind
    #[arg(long)]
    graph: Option<String>,
    /// graph.width
    #[arg(long)]
    width: Option<String>,
    /// graph.height
    #[arg(long)]
    height: Option<String>,
    /// graph.target_degree
    #[arg(long)]
    degree: Option<String>,
    /// graph.seed
    #[arg(long)]
    graph_seed: Option<String>,
    /// process.kind (SI or SIS)
    #[arg(long)]
    process: Option<String>,
    /// process.beta
    #[arg(long)]
    beta: Option<String>,
    /// process.mu
    #[arg(long)]
    mu: Option<String>,
    /// init.prevalence
    #[arg(long)]
    prevalence: Option<String>,
    /// run.t_end
    #[arg(long)]
    t_end: Option<String>,
    /// run.h, comma-separated
    #[arg(long)]
    h: Option<String>,
    /// run.replications
    #[arg(long)]
    replications: Option<String>,
    /// run.mode (des, dts, coupled)
    #[arg(long)]
    mode: Option<String>,
    /// run.step_policy (truncate, partial-final)
    #[arg(long)]
    step_policy: Option<String>,
    /// run.workers
    #[arg(long)]
    workers: Option<String>,
    /// output.dir
    #[arg(long)]
    output_dir: Option<String>,
    /// seed
    #[arg(long)]
    seed: Option<String>,
    /// Draw a new small-world graph for every replication.
    #[arg(long)]
    regenerate_graph: bool,
    /// Also dump the event log and per-step prevalence of replication 0.
    #[arg(long)]
    dump: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: String,
    /// Falls back to NETSIM_SEED, then 1.
    #[arg(long)]
    seed: Option<u64>,
    /// 0 lets the pool choose.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct BoundsArgs {
    /// si, sis or both
    #[arg(long, default_value = "both")]
    process: String,
    #[arg(long, default_value_t = 900)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 0.2)]
    mu: f64,
    /// Horizon T.
    #[arg(long = "T", alias = "horizon", default_value_t = 1.0)]
    horizon: f64,
    /// Step sizes, comma-separated.
    #[arg(long, default_value = "0.01")]
    h: String,
}

enum Failure {
    Verify,
    Usage(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Verify => 1,
            Self::Usage(_) => 2,
            Self::Io(_) => 3,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn env_seed() -> Option<String> {
    std::env::var(SEED_ENV).ok()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::GenerateGraph(a) => generate_graph(a),
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Verify(a) => verify(a),
        Command::Bounds(a) => bounds(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Verify => eprintln!("verification failed"),
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Io(m) => eprintln!("I/O error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn generate_graph(a: GraphArgs) -> Result<(), Failure> {
    let g = match a.kind.as_str() {
        "torus" => make_torus(a.width, a.height),
        "small-world" => {
            let seed = match (a.seed, env_seed()) {
                (Some(s), _) => s,
                (None, Some(v)) => v
                    .trim()
                    .parse()
                    .map_err(|_| usage(format!("{SEED_ENV}: not an integer")))?,
                (None, None) => netsim::config::DEFAULT_SEED,
            };
            make_small_world(a.width, a.height, a.degree, seed)
        }
        "tree" => make_tree(a.m, a.k, a.depth),
        other => return Err(usage(format!("unknown graph kind {other:?}"))),
    }
    .map_err(usage)?;
    let text = write_edge_list(&g);
    let info = format!("n={} edges={} k={}", g.node_count(), g.edge_count(), g.max_degree());
    match a.output {
        Some(path) => {
            write_file(&path, &text)?;
            println!("{info}");
        }
        None => {
            print!("{text}");
            eprintln!("{info}");
        }
    }
    Ok(())
}

fn load_config(a: &RunArgs) -> Result<(ConfigFile, ExperimentConfig), Failure> {
    let mut file = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            ConfigFile::parse(&text).map_err(usage)?
        }
        None => ConfigFile::default(),
    };
    let overrides = [
        ("graph.kind", &a.graph),
        ("graph.width", &a.width),
        ("graph.height", &a.height),
        ("graph.target_degree", &a.degree),
        ("graph.seed", &a.graph_seed),
        ("process.kind", &a.process),
        ("process.beta", &a.beta),
        ("process.mu", &a.mu),
        ("init.prevalence", &a.prevalence),
        ("run.t_end", &a.t_end),
        ("run.h", &a.h),
        ("run.replications", &a.replications),
        ("run.mode", &a.mode),
        ("run.step_policy", &a.step_policy),
        ("run.workers", &a.workers),
        ("output.dir", &a.output_dir),
        ("seed", &a.seed),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            file.set(key, v.as_str()).map_err(usage)?;
        }
    }
    let mut exp = file.experiment(env_seed().as_deref()).map_err(usage)?;
    exp.regenerate_graph = a.regenerate_graph;
    Ok((file, exp))
}

fn output_dir(file: &ConfigFile) -> Result<PathBuf, Failure> {
    let dir = file.output_dir();
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    Ok(dir)
}

fn records_csv(out: &ExperimentOutput) -> String {
    let mut s = String::from("rep,algorithm,h,prevalence,events,steps,wall_seconds\n");
    for r in &out.records {
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.rep,
            r.algorithm.as_str(),
            opt_cell(r.h),
            r.prevalence,
            r.events,
            r.steps,
            sig9(r.wall_seconds)
        )
        .unwrap();
    }
    s
}

fn summary_csv(out: &ExperimentOutput) -> String {
    let mut s = String::from("graph,process,algorithm,events,time_steps,cpu_time_s,prev_diff\n");
    for r in &out.summary {
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.graph,
            r.process,
            r.algorithm,
            r.events,
            r.time_steps,
            sig9(r.cpu_time_s),
            opt_cell(r.prev_diff)
        )
        .unwrap();
    }
    s
}

fn histogram_csv(out: &ExperimentOutput) -> String {
    let n = out.node_count;
    let mut s = String::from("algorithm,h,prevalence,density\n");
    for (alg, h, counts) in prevalence_histogram(out) {
        let total: u64 = counts.iter().sum();
        for (j, &c) in counts.iter().enumerate().filter(|(_, c)| **c > 0) {
            // density per unit prevalence with bin width 1/n
            let density = c as f64 / total as f64 * n as f64;
            writeln!(
                s,
                "{},{},{},{}",
                alg.as_str(),
                opt_cell(h),
                j as f64 / n as f64,
                density
            )
            .unwrap();
        }
    }
    s
}

fn run(a: RunArgs) -> Result<(), Failure> {
    let (file, exp) = load_config(&a)?;
    let dir = output_dir(&file)?;
    let out = run_replicated(&exp).map_err(usage)?;
    write_file(&dir.join("records.csv"), &records_csv(&out))?;
    let summary = summary_csv(&out);
    write_file(&dir.join("summary.csv"), &summary)?;
    write_file(&dir.join("histogram.csv"), &histogram_csv(&out))?;
    if exp.mode == Mode::Coupled {
        for h in &exp.h_values {
            let mut body = format!("{ERROR_TRACE_HEADER}\n");
            for t in out.traces.iter().filter(|t| t.h == *h) {
                error_trace_rows(&mut body, t.rep, &t.records);
            }
            write_file(&dir.join(format!("error_trace_h{h}.csv")), &body)?;
        }
    }
    if a.dump {
        let (tr, dts) = replay_first(&exp).map_err(usage)?;
        write_file(&dir.join("trajectory.csv"), &trajectory_csv(&tr))?;
        if let Some(d) = dts {
            write_file(&dir.join("prevalence.csv"), &prevalence_csv(&d))?;
        }
    }
    print!("{summary}");
    Ok(())
}

fn sweep(a: RunArgs) -> Result<(), Failure> {
    let (file, mut exp) = load_config(&a)?;
    if a.mode.is_none() && file.get("run.mode").is_none() {
        exp.mode = Mode::Coupled;
    }
    let dir = output_dir(&file)?;
    let res = step_size_sweep(&exp).map_err(usage)?;
    let mut s = String::from("h,mean_gap,stderr\n");
    for p in &res.points {
        writeln!(s, "{},{},{}", p.h, p.mean_gap, p.stderr).unwrap();
    }
    match res.fit {
        Some(f) => writeln!(s, "{},{}", f.slope, f.intercept).unwrap(),
        None => s.push_str("NA,NA\n"),
    }
    write_file(&dir.join("sweep.csv"), &s)?;
    print!("{s}");
    Ok(())
}

fn verify(a: VerifyArgs) -> Result<(), Failure> {
    let suite: Suite = a.suite.parse().map_err(usage)?;
    let seed = match (a.seed, env_seed()) {
        (Some(s), _) => s,
        (None, Some(v)) => v
            .trim()
            .parse()
            .map_err(|_| usage(format!("{SEED_ENV}: not an integer")))?,
        (None, None) => netsim::config::DEFAULT_SEED,
    };
    let checks = run_suite(suite, seed, a.workers);
    for c in &checks {
        println!("{c}");
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    println!("{passed}/{} checks passed", checks.len());
    if passed == checks.len() {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

fn bounds(a: BoundsArgs) -> Result<(), Failure> {
    let kinds = match a.process.to_ascii_lowercase().as_str() {
        "both" => vec![ProcessKind::Si, ProcessKind::Sis],
        other => vec![other.parse::<ProcessKind>().map_err(usage)?],
    };
    let hs =
        a.h.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| usage(format!("bad step size {s:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
    let mut s = String::from("process,n,k,mu,T,h,C,K,bound,vacuous\n");
    for kind in kinds {
        let mu = if kind == ProcessKind::Si { 0.0 } else { a.mu };
        for &h in &hs {
            let inp = BoundInputs {
                n: a.n,
                k: a.k,
                mu,
                horizon: a.horizon,
                h,
            };
            let lead = format!(
                "{},{},{},{},{},{}",
                kind.to_string().to_lowercase(),
                a.n,
                a.k,
                mu,
                a.horizon,
                h
            );
            match bound_for(kind, &inp) {
                Ok(b) => writeln!(s, "{lead},{},{},{},{}", b.constant, b.growth, b.bound, b.vacuous).unwrap(),
                Err(netsim_core::bounds::BoundsError::StepTooLarge(_)) => writeln!(s, "{lead},NA,NA,NA,error").unwrap(),
                Err(e) => return Err(usage(e)),
            }
        }
    }
    print!("{s}");
    Ok(())
}
