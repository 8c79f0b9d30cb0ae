//! Driving the exact and the fixed-step chain from the same random numbers.
//!
//! Step `i` of a scenario `(seed, replication)` owns a [`RandomBlock`]: for
//! every edge an infinite stream of unit exponentials, and for every node a
//! stream of recovery exponentials. Each time an edge becomes
//! susceptible-infected within the step it consumes the next draw of its
//! stream and fires `draw / beta` later; recovery timers work the same way
//! with `mu`. Streams restart at ordinal 0 in every step.
//!
//! The fixed-step map only looks at ordinal 0 of edges that are S-I at the
//! start of the step, and at ordinal 0 of each infected node's recovery
//! stream. The exact span uses those same draws for the same timers, so
//! every infection the fixed step performs also happens in the exact span
//! (for SI), and memorylessness makes the span an exact CTMC transition over
//! time `h`.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use libm::expm1;

use crate::bounds::{dominance_against, DominanceReport, NegBinomial};
use crate::dts::DtsConfig;
use crate::graph::Graph;
use crate::process::{InfectionState, ProcessKind, ProcessParams};
use crate::rng::{derive, tag, unit_exponential};

/// Random numbers for one step of one scenario. Draws are computed on
/// demand from the key, so a block is a few words and never stores variates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomBlock {
    pub master_seed: u64,
    pub replication: u64,
    pub step: u64,
    prefix: u64,
}

impl RandomBlock {
    pub fn new(master_seed: u64, replication: u64, step: u64) -> Self {
        Self {
            master_seed,
            replication,
            step,
            prefix: derive(&[master_seed, replication, step]),
        }
    }

    /// Draw `ordinal` of the stream for edge `edge`; `ordinal = 0` is the
    /// component used by the fixed-step map.
    #[inline]
    pub fn edge_draw(&self, edge: usize, ordinal: u32) -> f64 {
        unit_exponential(derive(&[self.prefix, tag::EDGE, edge as u64, ordinal as u64]))
    }

    #[inline]
    pub fn recovery_draw(&self, node: usize, ordinal: u32) -> f64 {
        unit_exponential(derive(&[self.prefix, tag::RECOVERY, node as u64, ordinal as u64]))
    }
}

#[inline]
fn edge_fire_time(block: &RandomBlock, edge: usize, ordinal: u32, beta: f64) -> f64 {
    block.edge_draw(edge, ordinal) / beta
}

#[inline]
fn recovery_fire_time(block: &RandomBlock, node: usize, ordinal: u32, mu: f64) -> f64 {
    block.recovery_draw(node, ordinal) / mu
}

/// The fixed-step map `g(x, A_i)`.
///
/// Susceptible `j` is infected iff some S-I edge at `j` has its first draw
/// fire within `h`; infected `i` recovers iff its first recovery draw fires
/// within `h`.
pub fn coupled_dts_step(
    g: &Graph,
    params: &ProcessParams,
    x: &InfectionState,
    block: &RandomBlock,
    h: f64,
) -> InfectionState {
    let beta = params.beta();
    let mu = params.recovery_rate();
    let mut next = x.clone();
    if h <= 0.0 {
        return next;
    }
    for i in x.infected() {
        for nb in g.neighbors(i) {
            let j = nb.node as usize;
            if x.is_infected(j) || next.is_infected(j) {
                continue;
            }
            if edge_fire_time(block, nb.edge as usize, 0, beta) <= h {
                next.infect(j);
            }
        }
        if mu > 0.0 && recovery_fire_time(block, i, 0, mu) <= h {
            next.recover(i);
        }
    }
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TimerKind {
    Edge,
    Recovery,
}

#[derive(Debug, Clone, Copy)]
struct Timer {
    time: f64,
    kind: TimerKind,
    id: u32,
    version: u32,
}

impl PartialEq for Timer {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Timer {}

impl PartialOrd for Timer {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Timer {
    // Reversed so the max-heap pops the earliest timer first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| (other.kind as u8).cmp(&(self.kind as u8)))
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// What happened inside one exact span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanOutcome {
    pub state: InfectionState,
    pub events: u64,
    pub timers_created: u64,
}

struct Span<'a> {
    g: &'a Graph,
    block: &'a RandomBlock,
    beta: f64,
    mu: f64,
    state: InfectionState,
    heap: BinaryHeap<Timer>,
    edge_ordinal: Vec<u32>,
    edge_version: Vec<u32>,
    node_ordinal: Vec<u32>,
    node_version: Vec<u32>,
    timers_created: u64,
}

impl Span<'_> {
    fn activate_edge(&mut self, e: usize, now: f64) {
        let ordinal = self.edge_ordinal[e];
        self.edge_ordinal[e] += 1;
        self.edge_version[e] += 1;
        self.timers_created += 1;
        self.heap.push(Timer {
            time: now + edge_fire_time(self.block, e, ordinal, self.beta),
            kind: TimerKind::Edge,
            id: e as u32,
            version: self.edge_version[e],
        });
    }

    fn schedule_recovery(&mut self, v: usize, now: f64) {
        if self.mu <= 0.0 {
            return;
        }
        let ordinal = self.node_ordinal[v];
        self.node_ordinal[v] += 1;
        self.node_version[v] += 1;
        self.heap.push(Timer {
            time: now + recovery_fire_time(self.block, v, ordinal, self.mu),
            kind: TimerKind::Recovery,
            id: v as u32,
            version: self.node_version[v],
        });
    }

    fn infect(&mut self, j: usize, now: f64) {
        self.state.infect(j);
        for nb in self.g.neighbors(j) {
            let e = nb.edge as usize;
            if self.state.is_infected(nb.node as usize) {
                self.edge_version[e] += 1;
            } else {
                self.activate_edge(e, now);
            }
        }
        self.schedule_recovery(j, now);
    }

    fn recover(&mut self, i: usize, now: f64) {
        self.state.recover(i);
        self.node_version[i] += 1;
        for nb in self.g.neighbors(i) {
            let e = nb.edge as usize;
            if self.state.is_infected(nb.node as usize) {
                self.activate_edge(e, now);
            } else {
                self.edge_version[e] += 1;
            }
        }
    }
}

/// The exact map `g~(x, A_i)`: runs the continuous-time chain for time `h`
/// from `x`, taking every timer duration from `block`.
pub fn coupled_des_span(
    g: &Graph,
    params: &ProcessParams,
    x: &InfectionState,
    block: &RandomBlock,
    h: f64,
) -> SpanOutcome {
    let mut span = Span {
        g,
        block,
        beta: params.beta(),
        mu: params.recovery_rate(),
        state: x.clone(),
        heap: BinaryHeap::new(),
        edge_ordinal: vec![0; g.edge_count()],
        edge_version: vec![0; g.edge_count()],
        node_ordinal: vec![0; g.node_count()],
        node_version: vec![0; g.node_count()],
        timers_created: 0,
    };
    for i in x.infected() {
        for nb in g.neighbors(i) {
            if !x.is_infected(nb.node as usize) {
                span.activate_edge(nb.edge as usize, 0.0);
            }
        }
        span.schedule_recovery(i, 0.0);
    }

    let mut events = 0;
    while let Some(timer) = span.heap.pop() {
        if timer.time > h {
            break;
        }
        let id = timer.id as usize;
        match timer.kind {
            TimerKind::Edge => {
                if span.edge_version[id] != timer.version {
                    continue;
                }
                let (u, v) = g.edge(id);
                let target = if span.state.is_infected(u) { v } else { u };
                debug_assert!(span.state.is_infected(u) != span.state.is_infected(v));
                span.infect(target, timer.time);
            }
            TimerKind::Recovery => {
                if span.node_version[id] != timer.version || !span.state.is_infected(id) {
                    continue;
                }
                span.recover(id, timer.time);
            }
        }
        events += 1;
    }
    SpanOutcome {
        state: span.state,
        events,
        timers_created: span.timers_created,
    }
}

/// `f(x, A) = (g(x, A) - x) / h`, stored as the integer flips and `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Increment {
    pub h: f64,
    pub delta: Vec<i8>,
}

impl Increment {
    pub fn component(&self, j: usize) -> f64 {
        self.delta[j] as f64 / self.h
    }

    /// `|f(x, A)|` in the 1-norm.
    pub fn l1_norm(&self) -> f64 {
        self.delta.iter().map(|d| d.unsigned_abs() as f64).sum::<f64>() / self.h
    }

    /// `|f(x, A) - f(z, A)|` in the 1-norm; both must share `h`.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.h, other.h);
        let s: u32 = self
            .delta
            .iter()
            .zip(&other.delta)
            .map(|(a, b)| (*a as i32 - *b as i32).unsigned_abs())
            .sum();
        s as f64 / self.h
    }
}

pub fn increment_map_f(
    g: &Graph,
    params: &ProcessParams,
    x: &InfectionState,
    block: &RandomBlock,
    h: f64,
) -> Increment {
    let next = coupled_dts_step(g, params, x, block, h);
    Increment {
        h,
        delta: next.signed_difference(x).expect("same length"),
    }
}

/// Per-step error bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    /// Time at the end of the step.
    pub time: f64,
    pub h: f64,
    /// `|eps_i| = |X_i - X~_i|`.
    pub eps_l1: usize,
    /// `h * |d_i| = |X~_i - g(X~_{i-1}, A_i)|`.
    pub local_flips: usize,
    /// `X~_i >= X_i`.
    pub dominance_ok: bool,
}

impl StepRecord {
    /// `|d_i|`.
    pub fn local_error(&self) -> f64 {
        self.local_flips as f64 / self.h
    }
}

#[derive(Debug, Clone)]
pub struct CoupledPath {
    pub h: f64,
    /// `X~_0 .. X~_M`, the exact chain sampled at step boundaries.
    pub sampled_true: Vec<InfectionState>,
    /// `X_0 .. X_M`.
    pub approx: Vec<InfectionState>,
    pub records: Vec<StepRecord>,
    pub des_events: u64,
    pub dts_events: u64,
}

impl CoupledPath {
    /// Signed `eps_i = X_i - X~_i`.
    pub fn global_error(&self, i: usize) -> Vec<i8> {
        self.approx[i]
            .signed_difference(&self.sampled_true[i])
            .expect("same length")
    }

    /// `|eps_M|` at the last step.
    pub fn final_error(&self) -> usize {
        self.records.last().map_or(0, |r| r.eps_l1)
    }

    pub fn dominance_held(&self) -> bool {
        self.records.iter().all(|r| r.dominance_ok)
    }
}

/// Advances both chains over the steps of `cfg`, using block
/// `(master_seed, replication, i)` for step `i`.
pub fn run_coupled(
    g: &Graph,
    params: &ProcessParams,
    x0: &InfectionState,
    cfg: &DtsConfig,
    master_seed: u64,
    replication: u64,
) -> CoupledPath {
    let lengths = cfg.step_lengths();
    let mut sampled_true = Vec::with_capacity(lengths.len() + 1);
    let mut approx = Vec::with_capacity(lengths.len() + 1);
    let mut records = Vec::with_capacity(lengths.len());
    sampled_true.push(x0.clone());
    approx.push(x0.clone());
    let (mut des_events, mut dts_events) = (0, 0);
    let mut t = 0.0;
    for (idx, &dt) in lengths.iter().enumerate() {
        let step = idx + 1;
        let block = RandomBlock::new(master_seed, replication, step as u64);
        let prev_true = &sampled_true[idx];
        let prev_approx = &approx[idx];
        let span = coupled_des_span(g, params, prev_true, &block, dt);
        let next_approx = coupled_dts_step(g, params, prev_approx, &block, dt);
        let restart = coupled_dts_step(g, params, prev_true, &block, dt);
        dts_events += next_approx.l1_distance(prev_approx).unwrap() as u64;
        des_events += span.events;
        t += dt;
        records.push(StepRecord {
            step,
            time: t,
            h: dt,
            eps_l1: next_approx.l1_distance(&span.state).unwrap(),
            local_flips: span.state.l1_distance(&restart).unwrap(),
            dominance_ok: span.state.dominates(&next_approx).unwrap(),
        });
        sampled_true.push(span.state);
        approx.push(next_approx);
    }
    CoupledPath {
        h: cfg.h(),
        sampled_true,
        approx,
        records,
        des_events,
        dts_events,
    }
}

/// One-step secondary-infection check for SI: the excess `|X~_1| - |X_1|`
/// over `replications` blocks, compared against the negative-binomial
/// mixture `NB((|X_1| - |x0|) k / (k - 2), 1 - exp(-h (k - 2)))` averaged over
/// the observed `X_1`. The empirical CDF must not fall more than
/// `tolerance` below the mixture CDF anywhere.
///
/// Requires `k > 2`.
pub fn secondary_infection_dominance(
    g: &Graph,
    x0: &InfectionState,
    h: f64,
    replications: u64,
    seed: u64,
    tolerance: f64,
) -> DominanceReport {
    let k = g.max_degree() as f64;
    assert!(k > 2.0, "secondary-infection bound needs max degree > 2");
    let params = ProcessParams::new(ProcessKind::Si, 1.0, 0.0).expect("unit SI");
    let p = -expm1(-h * (k - 2.0));
    let base = x0.infected_count();
    let mut excess = Vec::with_capacity(replications as usize);
    let mut direct = Vec::with_capacity(replications as usize);
    for rep in 0..replications {
        let block = RandomBlock::new(seed, rep, 1);
        let approx = coupled_dts_step(g, &params, x0, &block, h);
        let exact = coupled_des_span(g, &params, x0, &block, h).state;
        let n1 = approx.infected_count();
        excess.push((exact.infected_count() - n1) as u64);
        direct.push((n1 - base) as u64);
    }
    // NB(r, p) CDFs depend on X_1 only through the direct-infection count.
    let mut sorted = direct;
    sorted.sort_unstable();
    let mut classes: Vec<(NegBinomial, f64)> = Vec::new();
    let mut point_mass = 0.0;
    let total = sorted.len() as f64;
    for chunk in sorted.chunk_by(|a, b| a == b) {
        let w = chunk.len() as f64 / total;
        match chunk[0] {
            0 => point_mass += w,
            c => classes.push((NegBinomial::new(c as f64 * k / (k - 2.0), p).expect("valid NB"), w)),
        }
    }
    let mixture = |y: u64| point_mass + classes.iter().map(|(nb, w)| w * nb.cdf(y)).sum::<f64>();
    dominance_against(&excess, mixture, tolerance)
}
