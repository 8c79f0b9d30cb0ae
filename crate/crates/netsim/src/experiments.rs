//! Replication harness and the distributional oracle experiments.
//!
//! Every replication draws from substreams derived from `(master_seed, rep)`,
//! so results are identical for any worker count.

use std::time::Instant;

use netsim_core::bounds::{dominance_against, DominanceReport, NegBinomial};
use netsim_core::coupling::{increment_map_f, run_coupled, RandomBlock, StepRecord};
use netsim_core::des::{run_des, DesOptions, Trajectory};
use netsim_core::dts::{run_dts, DtsConfig, DtsTrajectory, StepPolicy};
use netsim_core::graph::{make_tree, tree_size, Graph, GraphError, GraphKind, GraphSpec, TREE_NODE_CAP};
use netsim_core::process::{random_initial_state, InfectionState, InitSpec, ProcessKind, ProcessParams};
use netsim_core::rng::{derive, tag};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::stats::{ks_discrete, log_log_fit, mean_se, FitError, LineFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Des,
    Dts,
    Coupled,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "des" => Ok(Self::Des),
            "dts" => Ok(Self::Dts),
            "coupled" => Ok(Self::Coupled),
            _ => Err(format!("mode must be des, dts or coupled (got {s:?})")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid experiment: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("truncated tree of depth {depth} was reached in {fraction} of runs; increase the depth")]
    Boundary { depth: usize, fraction: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    pub params: ProcessParams,
    pub prevalence: f64,
    pub t_end: f64,
    pub replications: u64,
    pub h_values: Vec<f64>,
    pub mode: Mode,
    pub step_policy: StepPolicy,
    /// Thread count; 0 lets the pool pick.
    pub workers: usize,
    pub master_seed: u64,
    /// Build a fresh random graph per replication instead of sharing one.
    pub regenerate_graph: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Config(m.into()));
        if self.replications == 0 {
            return bad("replications must be >= 1");
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad("t_end must be finite and > 0");
        }
        if !(0.0..=1.0).contains(&self.prevalence) {
            return bad("prevalence must lie in [0, 1]");
        }
        if self.graph.kind() == GraphKind::Tree {
            return bad("replicated runs use torus or small-world graphs");
        }
        if self.mode != Mode::Des {
            if self.h_values.is_empty() {
                return bad("dts and coupled modes need at least one step size");
            }
            for &h in &self.h_values {
                DtsConfig::new(h, self.t_end, self.step_policy).map_err(|e| ExperimentError::Config(e.to_string()))?;
            }
        }
        Ok(())
    }

    fn dts_config(&self, h: f64) -> DtsConfig {
        DtsConfig::new(h, self.t_end, self.step_policy).expect("validated")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Des,
    Dts,
    CoupledDes,
    CoupledDts,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Des => "DES",
            Self::Dts => "DTS",
            Self::CoupledDes => "DES-coupled",
            Self::CoupledDts => "DTS-coupled",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub rep: u64,
    pub algorithm: Algorithm,
    pub h: Option<f64>,
    /// Prevalence at the end of the run.
    pub prevalence: f64,
    pub events: u64,
    pub steps: u64,
    pub wall_seconds: f64,
    /// DTS rows: prevalence of the same replication's DES run at the time
    /// the DTS run stopped, which is `t_end` unless truncation cut it short.
    pub reference_prevalence: Option<f64>,
}

/// Error bookkeeping of one coupled run.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledTrace {
    pub rep: u64,
    pub h: f64,
    pub records: Vec<StepRecord>,
}

impl CoupledTrace {
    /// `|eps_M|`.
    pub fn final_error(&self) -> usize {
        self.records.last().map_or(0, |r| r.eps_l1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub graph: String,
    pub process: String,
    pub algorithm: String,
    pub h: Option<f64>,
    pub events: f64,
    pub time_steps: f64,
    /// Summed wall time of all replications in the row.
    pub cpu_time_s: f64,
    pub mean_prevalence: f64,
    /// `|mean DES prevalence - mean prevalence of this row|`, both observed
    /// when this row's runs stopped; `None` for DES rows.
    pub prev_diff: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub node_count: usize,
    pub records: Vec<ReplicationRecord>,
    pub traces: Vec<CoupledTrace>,
    pub summary: Vec<SummaryRow>,
}

struct ReplicationOutcome {
    records: Vec<ReplicationRecord>,
    traces: Vec<CoupledTrace>,
}

pub fn graph_label(spec: &GraphSpec) -> &'static str {
    match spec.kind() {
        GraphKind::Torus => "torus",
        GraphKind::SmallWorld => "small-world",
        GraphKind::Tree => "tree",
    }
}

/// Runs `f` inside a pool of `workers` threads (0 = pool default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool")
        .install(f)
}

fn run_replication(cfg: &ExperimentConfig, shared: &Graph, rep: u64) -> ReplicationOutcome {
    let owned;
    let g = if cfg.regenerate_graph && cfg.graph.kind() == GraphKind::SmallWorld {
        let seed = derive(&[tag::GRAPH, cfg.master_seed, rep]);
        owned = cfg.graph.with_seed(seed).build().expect("spec built once already");
        &owned
    } else {
        shared
    };
    let n = g.node_count() as f64;
    let init = InitSpec::new(cfg.prevalence, derive(&[tag::INIT, cfg.master_seed, rep])).expect("validated");
    let x0 = random_initial_state(g, &init);
    let mut records = Vec::new();
    let mut traces = Vec::new();

    let mut des = None;
    if cfg.mode != Mode::Coupled {
        let mut rng = ChaCha8Rng::seed_from_u64(derive(&[tag::DES, cfg.master_seed, rep]));
        let options = DesOptions {
            retain_events: cfg.mode == Mode::Dts,
        };
        let start = Instant::now();
        let tr = run_des(g, &cfg.params, &x0, cfg.t_end, &mut rng, options).expect("validated horizon");
        records.push(ReplicationRecord {
            rep,
            algorithm: Algorithm::Des,
            h: None,
            prevalence: tr.final_state.infected_count() as f64 / n,
            events: tr.counters.events_total,
            steps: tr.counters.steps,
            wall_seconds: start.elapsed().as_secs_f64(),
            reference_prevalence: None,
        });
        des = Some(tr);
    }
    if cfg.mode == Mode::Des {
        return ReplicationOutcome { records, traces };
    }
    for (hi, &h) in cfg.h_values.iter().enumerate() {
        let dcfg = cfg.dts_config(h);
        match cfg.mode {
            Mode::Dts => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive(&[tag::DTS, cfg.master_seed, rep, hi as u64]));
                let start = Instant::now();
                let tr = run_dts(g, &cfg.params, &x0, &dcfg, &mut rng);
                let wall_seconds = start.elapsed().as_secs_f64();
                let stop = tr.times.last().expect("time zero").min(cfg.t_end);
                let reference = des
                    .as_ref()
                    .expect("DES runs in dts mode")
                    .state_at(stop)
                    .expect("retained log");
                records.push(ReplicationRecord {
                    rep,
                    algorithm: Algorithm::Dts,
                    h: Some(h),
                    prevalence: tr.final_state().infected_count() as f64 / n,
                    events: tr.counters.events_total,
                    steps: tr.counters.steps,
                    wall_seconds,
                    reference_prevalence: Some(reference.infected_count() as f64 / n),
                });
            }
            Mode::Coupled => {
                let seed = derive(&[tag::EDGE, cfg.master_seed, hi as u64]);
                let start = Instant::now();
                let path = run_coupled(g, &cfg.params, &x0, &dcfg, seed, rep);
                let wall = start.elapsed().as_secs_f64();
                let steps = path.records.len() as u64;
                let last_true = path.sampled_true.last().expect("X~_0");
                let last_approx = path.approx.last().expect("X_0");
                records.push(ReplicationRecord {
                    rep,
                    algorithm: Algorithm::CoupledDes,
                    h: Some(h),
                    prevalence: last_true.infected_count() as f64 / n,
                    events: path.des_events,
                    steps: path.des_events,
                    wall_seconds: wall,
                    reference_prevalence: None,
                });
                records.push(ReplicationRecord {
                    rep,
                    algorithm: Algorithm::CoupledDts,
                    h: Some(h),
                    prevalence: last_approx.infected_count() as f64 / n,
                    events: path.dts_events,
                    steps,
                    wall_seconds: wall,
                    reference_prevalence: None,
                });
                traces.push(CoupledTrace {
                    rep,
                    h,
                    records: path.records,
                });
            }
            Mode::Des => unreachable!(),
        }
    }
    ReplicationOutcome { records, traces }
}

/// Runs every replication of `cfg` and summarizes by algorithm and step size.
pub fn run_replicated(cfg: &ExperimentConfig) -> Result<ExperimentOutput, ExperimentError> {
    cfg.validate()?;
    let graph = cfg.graph.build()?;
    let outcomes: Vec<ReplicationOutcome> = with_workers(cfg.workers, || {
        (0..cfg.replications)
            .into_par_iter()
            .map(|rep| run_replication(cfg, &graph, rep))
            .collect()
    });
    let mut records = Vec::new();
    let mut traces = Vec::new();
    for o in outcomes {
        records.extend(o.records);
        traces.extend(o.traces);
    }
    let summary = summarize(cfg, &records);
    Ok(ExperimentOutput {
        node_count: graph.node_count(),
        records,
        traces,
        summary,
    })
}

fn group_key(r: &ReplicationRecord) -> (Algorithm, Option<u64>) {
    (r.algorithm, r.h.map(f64::to_bits))
}

fn summarize(cfg: &ExperimentConfig, records: &[ReplicationRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(Algorithm, Option<u64>)> = Vec::new();
    for r in records {
        let k = group_key(r);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mean_prev = |alg: Algorithm, h: Option<u64>| {
        mean_se(
            records
                .iter()
                .filter(|r| group_key(r) == (alg, h))
                .map(|r| r.prevalence),
        )
        .mean
    };
    keys.iter()
        .map(|&(alg, hbits)| {
            let rows: Vec<&ReplicationRecord> = records.iter().filter(|r| group_key(r) == (alg, hbits)).collect();
            let h = hbits.map(f64::from_bits);
            let mean_prevalence = mean_prev(alg, hbits);
            let prev_diff = match alg {
                Algorithm::Des | Algorithm::CoupledDes => None,
                Algorithm::Dts => {
                    let reference = mean_se(rows.iter().filter_map(|r| r.reference_prevalence)).mean;
                    Some((reference - mean_prevalence).abs())
                }
                Algorithm::CoupledDts => Some((mean_prev(Algorithm::CoupledDes, hbits) - mean_prevalence).abs()),
            };
            let label = match h {
                Some(h) => format!("{} h={h}", alg.as_str()),
                None => alg.as_str().to_string(),
            };
            SummaryRow {
                graph: graph_label(&cfg.graph).into(),
                process: cfg.params.kind().to_string(),
                algorithm: label,
                h,
                events: mean_se(rows.iter().map(|r| r.events as f64)).mean,
                time_steps: mean_se(rows.iter().map(|r| r.steps as f64)).mean,
                cpu_time_s: rows.iter().map(|r| r.wall_seconds).sum(),
                mean_prevalence,
                prev_diff,
            }
        })
        .collect()
}

/// Replays replication 0 with its event log kept, plus the standalone DTS
/// run at the first step size when the mode includes one.
pub fn replay_first(cfg: &ExperimentConfig) -> Result<(Trajectory, Option<DtsTrajectory>), ExperimentError> {
    cfg.validate()?;
    let g = cfg.graph.build()?;
    let init = InitSpec::new(cfg.prevalence, derive(&[tag::INIT, cfg.master_seed, 0])).expect("validated");
    let x0 = random_initial_state(&g, &init);
    let mut rng = ChaCha8Rng::seed_from_u64(derive(&[tag::DES, cfg.master_seed, 0]));
    let tr = run_des(&g, &cfg.params, &x0, cfg.t_end, &mut rng, DesOptions::default()).expect("validated horizon");
    let dts = match (cfg.mode, cfg.h_values.first()) {
        (Mode::Des, _) | (_, None) => None,
        (_, Some(&h)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive(&[tag::DTS, cfg.master_seed, 0, 0]));
            Some(run_dts(&g, &cfg.params, &x0, &cfg.dts_config(h), &mut rng))
        }
    };
    Ok((tr, dts))
}

/// Counts of final prevalence `j / n`, per algorithm and step size, for
/// histograms with bin width `1 / n`.
pub fn prevalence_histogram(out: &ExperimentOutput) -> Vec<(Algorithm, Option<f64>, Vec<u64>)> {
    let n = out.node_count;
    let mut groups: Vec<(Algorithm, Option<f64>, Vec<u64>)> = Vec::new();
    for r in &out.records {
        let idx = match groups.iter().position(|g| g.0 == r.algorithm && g.1 == r.h) {
            Some(i) => i,
            None => {
                groups.push((r.algorithm, r.h, vec![0; n + 1]));
                groups.len() - 1
            }
        };
        let j = (r.prevalence * n as f64).round() as usize;
        groups[idx].2[j.min(n)] += 1;
    }
    groups
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub h: f64,
    pub mean_gap: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// `None` when some gap is zero and the log-log fit is undefined.
    pub fit: Option<LineFit>,
}

/// Mean prevalence gap against step size with a log-log line fit.
///
/// In coupled mode the gap is the per-replication `|eps_M| / n`; in dts
/// mode it is `|mean DES prevalence - mean DTS prevalence|`, with each
/// replication's DES run shared by all step sizes.
pub fn step_size_sweep(cfg: &ExperimentConfig) -> Result<SweepResult, ExperimentError> {
    let mut distinct = cfg.h_values.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(FitError::DegenerateAbscissae.into());
    }
    if cfg.h_values.len() < 3 {
        return Err(FitError::TooFewPoints {
            needed: 3,
            got: cfg.h_values.len(),
        }
        .into());
    }
    if distinct[distinct.len() - 1] < 10.0 * distinct[0] * (1.0 - 1e-12) {
        return Err(ExperimentError::Config(
            "step sizes must span at least one decade".into(),
        ));
    }
    let out = run_replicated(cfg)?;
    let n = out.node_count as f64;
    let points: Vec<SweepPoint> = match cfg.mode {
        Mode::Des => return Err(ExperimentError::Config("a sweep needs dts or coupled mode".into())),
        Mode::Coupled => cfg
            .h_values
            .iter()
            .map(|&h| {
                let m = mean_se(
                    out.traces
                        .iter()
                        .filter(|t| t.h == h)
                        .map(|t| t.final_error() as f64 / n),
                );
                SweepPoint {
                    h,
                    mean_gap: m.mean,
                    stderr: m.stderr,
                }
            })
            .collect(),
        Mode::Dts => cfg
            .h_values
            .iter()
            .map(|&h| {
                let diff = mean_se(
                    out.records
                        .iter()
                        .filter(|r| r.algorithm == Algorithm::Dts && r.h == Some(h))
                        .map(|r| r.reference_prevalence.expect("dts rows carry a reference") - r.prevalence),
                );
                SweepPoint {
                    h,
                    mean_gap: diff.mean.abs(),
                    stderr: diff.stderr,
                }
            })
            .collect(),
    };
    let hs: Vec<f64> = points.iter().map(|p| p.h).collect();
    let gaps: Vec<f64> = points.iter().map(|p| p.mean_gap).collect();
    let fit = match log_log_fit(&hs, &gaps) {
        Ok(f) => Some(f),
        Err(FitError::NonPositive(_)) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(SweepResult { points, fit })
}

/// `P[Poisson(t) >= d]`, summed from the tail so small values stay accurate.
pub fn poisson_upper_tail(t: f64, d: u64) -> f64 {
    if d == 0 {
        return 1.0;
    }
    if t <= 0.0 {
        return 0.0;
    }
    let mut term = (-t).exp();
    for j in 1..=d {
        term *= t / j as f64;
    }
    let mut total = term;
    let mut j = d;
    while term > 1e-300 && term > total * 1e-17 {
        j += 1;
        term *= t / j as f64;
        total += term;
    }
    total.min(1.0)
}

/// Smallest depth at which a union bound puts the chance of any leaf being
/// infected by time `t` below `1e-4`: `m (k-1)^(d-1) P[Poisson(t) >= d]`.
pub fn yule_depth(m: usize, k: usize, t: f64) -> Result<usize, ExperimentError> {
    for depth in 1..64usize {
        let leaves = m as f64 * ((k - 1) as f64).powi(depth as i32 - 1);
        if leaves * poisson_upper_tail(t, depth as u64) < 1e-4 {
            return tree_size(m, k, depth, TREE_NODE_CAP)
                .map(|_| depth)
                .ok_or(GraphError::TooLarge { cap: TREE_NODE_CAP }.into());
        }
        if tree_size(m, k, depth, TREE_NODE_CAP).is_none() {
            return Err(GraphError::TooLarge { cap: TREE_NODE_CAP }.into());
        }
    }
    Err(GraphError::TooLarge { cap: TREE_NODE_CAP }.into())
}

#[derive(Debug, Clone, PartialEq)]
pub struct YuleReport {
    pub m: usize,
    pub k: usize,
    pub t: f64,
    pub depth: usize,
    pub distribution: NegBinomial,
    pub ks: f64,
    pub critical: f64,
    pub passed: bool,
    pub boundary_fraction: f64,
    pub sample_mean: f64,
    pub sample_stderr: f64,
    pub replications: u64,
}

/// Offspring count of an SI epidemic from the root of a tree whose root has
/// `m` children and whose other nodes have `k - 1`, against
/// `NB(m / (k - 2), 1 - exp(-(k - 2) t))` by Kolmogorov distance. The tree
/// is deep enough that leaves are practically never reached; more than
/// `1e-3` of runs touching a leaf is an error.
pub fn yule_oracle_test(
    m: usize,
    k: usize,
    t: f64,
    replications: u64,
    seed: u64,
    workers: usize,
) -> Result<YuleReport, ExperimentError> {
    if m < 1 || k < 3 || !(t.is_finite() && t >= 0.0) || replications == 0 {
        return Err(ExperimentError::Config(
            "need m >= 1, k >= 3, t >= 0, replications >= 1".into(),
        ));
    }
    let depth = yule_depth(m, k, t)?;
    let g = make_tree(m, k, depth)?;
    let first_leaf = tree_size(m, k, depth - 1, TREE_NODE_CAP).expect("smaller than full tree");
    let params = ProcessParams::new(ProcessKind::Si, 1.0, 0.0).expect("unit SI");
    let x0 = InfectionState::from_infected(g.node_count(), [0]);
    let runs: Vec<(u64, bool)> = if t == 0.0 {
        vec![(0, false); replications as usize]
    } else {
        with_workers(workers, || {
            (0..replications)
                .into_par_iter()
                .map(|rep| {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive(&[tag::SAMPLE, seed, rep]));
                    let tr = run_des(&g, &params, &x0, t, &mut rng, DesOptions { retain_events: false })
                        .expect("positive horizon");
                    let hit = tr.final_state.infected().any(|v| v >= first_leaf);
                    (tr.final_state.infected_count() as u64 - 1, hit)
                })
                .collect()
        })
    };
    let hits = runs.iter().filter(|r| r.1).count();
    let boundary_fraction = hits as f64 / replications as f64;
    if boundary_fraction >= 1e-3 {
        return Err(ExperimentError::Boundary {
            depth,
            fraction: boundary_fraction,
        });
    }
    let samples: Vec<u64> = runs.iter().map(|r| r.0).collect();
    let distribution =
        NegBinomial::new(m as f64 / (k as f64 - 2.0), -(-(k as f64 - 2.0) * t).exp_m1()).expect("valid NB parameters");
    let ks = ks_discrete(&samples, |y| distribution.cdf(y));
    let critical = 1.63 / (replications as f64).sqrt() * 1.5;
    let m_se = mean_se(samples.iter().map(|&s| s as f64));
    Ok(YuleReport {
        m,
        k,
        t,
        depth,
        distribution,
        ks,
        critical,
        passed: ks < critical,
        boundary_fraction,
        sample_mean: m_se.mean,
        sample_stderr: m_se.stderr,
        replications,
    })
}

/// Infections by time `t` of an SI epidemic (beta = 1) from `x0`, which must
/// not exceed `NB(|x0| k / (k - 2), 1 - exp(-(k - 2) t))` in distribution,
/// up to `allowance` at every integer.
pub fn dominance_oracle_test(
    g: &Graph,
    x0: &InfectionState,
    t: f64,
    replications: u64,
    seed: u64,
    allowance: f64,
    workers: usize,
) -> DominanceReport {
    let k = g.max_degree() as f64;
    assert!(k > 2.0, "the offspring bound needs max degree > 2");
    let params = ProcessParams::new(ProcessKind::Si, 1.0, 0.0).expect("unit SI");
    let base = x0.infected_count();
    let samples: Vec<u64> = with_workers(workers, || {
        (0..replications)
            .into_par_iter()
            .map(|rep| {
                if t == 0.0 {
                    return 0;
                }
                let mut rng = ChaCha8Rng::seed_from_u64(derive(&[tag::SAMPLE, seed, rep]));
                let tr = run_des(g, &params, x0, t, &mut rng, DesOptions { retain_events: false })
                    .expect("positive horizon");
                (tr.final_state.infected_count() - base) as u64
            })
            .collect()
    });
    if base == 0 {
        return dominance_against(&samples, |_| 1.0, allowance);
    }
    let nb = NegBinomial::new(base as f64 * k / (k - 2.0), -(-(k - 2.0) * t).exp_m1()).expect("valid NB");
    dominance_against(&samples, |y| nb.cdf(y), allowance)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzReport {
    pub mean: f64,
    pub stderr: f64,
    /// `L |x - z|`.
    pub bound: f64,
    pub passed: bool,
}

/// Mean of `|f(x, A) - f(z, A)|` over `blocks` random blocks against
/// `L |x - z|`, where `L = k` (SI) or `k + mu` (SIS), with a 3-standard-error
/// allowance.
pub fn lipschitz_check(
    g: &Graph,
    params: &ProcessParams,
    x: &InfectionState,
    z: &InfectionState,
    h: f64,
    blocks: u64,
    seed: u64,
) -> LipschitzReport {
    let lip = netsim_core::bounds::lipschitz_constant(params.kind(), g.max_degree(), params.mu());
    let bound = lip * x.l1_distance(z).expect("same length") as f64;
    let m = mean_se((0..blocks).map(|b| {
        let block = RandomBlock::new(seed, b, 1);
        increment_map_f(g, params, x, &block, h).l1_distance(&increment_map_f(g, params, z, &block, h))
    }));
    LipschitzReport {
        mean: m.mean,
        stderr: m.stderr,
        bound,
        passed: m.mean <= bound + 3.0 * m.stderr,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(mode: Mode) -> ExperimentConfig {
        ExperimentConfig {
            graph: GraphSpec::Torus { width: 6, height: 6 },
            params: ProcessParams::sis(0.2).unwrap(),
            prevalence: 0.1,
            t_end: 1.0,
            replications: 12,
            h_values: vec![0.05, 0.1],
            mode,
            step_policy: StepPolicy::Truncate,
            workers: 2,
            master_seed: 8,
            regenerate_graph: false,
        }
    }

    #[test]
    fn records_are_independent_of_worker_count() {
        for mode in [Mode::Des, Mode::Dts, Mode::Coupled] {
            let mut a = small(mode);
            let mut b = small(mode);
            a.workers = 1;
            b.workers = 3;
            let strip = |o: ExperimentOutput| {
                o.records
                    .into_iter()
                    .map(|r| (r.rep, r.algorithm, r.h, r.prevalence, r.events, r.steps))
                    .collect::<Vec<_>>()
            };
            assert_eq!(strip(run_replicated(&a).unwrap()), strip(run_replicated(&b).unwrap()));
        }
    }

    #[test]
    fn summary_shape() {
        let out = run_replicated(&small(Mode::Dts)).unwrap();
        assert_eq!(out.records.len(), 36);
        assert_eq!(out.summary.len(), 3);
        let des = &out.summary[0];
        assert_eq!(des.algorithm, "DES");
        assert_eq!(des.prev_diff, None);
        assert_eq!(des.events, des.time_steps);
        assert_eq!(out.summary[1].algorithm, "DTS h=0.05");
        assert_eq!(out.summary[1].time_steps, 20.0);
        assert!(out.summary[1].prev_diff.unwrap() >= 0.0);
        let hist = prevalence_histogram(&out);
        assert_eq!(hist.len(), 3);
        assert!(hist.iter().all(|(_, _, c)| c.iter().sum::<u64>() == 12));
    }

    #[test]
    fn coupled_mode_produces_traces() {
        let out = run_replicated(&small(Mode::Coupled)).unwrap();
        assert_eq!(out.traces.len(), 24);
        assert!(out
            .traces
            .iter()
            .all(|t| t.records.len() == if t.h == 0.05 { 20 } else { 10 }));
    }

    #[test]
    fn config_rejections() {
        let mut c = small(Mode::Dts);
        c.h_values.clear();
        assert!(c.validate().is_err());
        let mut c = small(Mode::Des);
        c.replications = 0;
        assert!(c.validate().is_err());
        let mut c = small(Mode::Dts);
        c.h_values = vec![0.1, 0.1, 0.1];
        assert!(matches!(
            step_size_sweep(&c),
            Err(ExperimentError::Fit(FitError::DegenerateAbscissae))
        ));
        c.h_values = vec![0.1, 0.05, 0.02];
        assert!(matches!(step_size_sweep(&c), Err(ExperimentError::Config(_))));
    }

    #[test]
    fn poisson_tail_values() {
        assert_eq!(poisson_upper_tail(0.5, 0), 1.0);
        assert!((poisson_upper_tail(0.5, 1) - (1.0 - (-0.5f64).exp())).abs() < 1e-15);
        // P[Pois(1) >= 2] = 1 - 2/e
        assert!((poisson_upper_tail(1.0, 2) - (1.0 - 2.0 / std::f64::consts::E)).abs() < 1e-15);
        assert_eq!(poisson_upper_tail(0.0, 3), 0.0);
    }

    #[test]
    fn yule_at_time_zero_is_degenerate() {
        let r = yule_oracle_test(2, 4, 0.0, 100, 1, 1).unwrap();
        assert_eq!(r.ks, 0.0);
        assert_eq!(r.sample_mean, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn empty_start_dominance_is_degenerate() {
        let g = netsim_core::graph::make_torus(5, 5).unwrap();
        let r = dominance_oracle_test(&g, &InfectionState::susceptible(25), 0.3, 50, 1, 0.0, 1);
        assert!(r.passed);
        assert_eq!(r.points, vec![(0, 1.0, 1.0)]);
    }
}
