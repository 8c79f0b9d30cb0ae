//! Exact sampling of the SI/SIS continuous-time Markov chain.
//!
//! Gillespie's direct method. From state `x` the total rate is
//! `beta * sum_{j in S(x)} n(j, x) + mu * |x|`; an infection of susceptible
//! `j` is chosen with weight `beta * n(j, x)` and a recovery of each infected
//! node with weight `mu`.
//!
//! Susceptible nodes are bucketed by their infected-neighbor count, so picking
//! the next infection target and updating after an event both cost `O(k)`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::graph::Graph;
use crate::indexed_set::IndexedSet;
use crate::process::{InfectionState, ProcessParams};
use crate::rng::sample_unit_exponential;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DesError {
    #[error("horizon must be finite and > 0 (got {0})")]
    BadHorizon(f64),
    #[error("time {t} outside [0, {t_end}]")]
    TimeOutOfRange { t: f64, t_end: f64 },
    #[error("event log was not retained for this trajectory")]
    EventsNotRetained,
    #[error("initial state has {state} nodes but the graph has {graph}")]
    SizeMismatch { state: usize, graph: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Infection,
    Recovery,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Infection => "infection",
            Self::Recovery => "recovery",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub node: u32,
    pub kind: EventKind,
}

/// Work counters shared by both engines.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    /// Node state changes.
    pub events_total: u64,
    /// Susceptible-infected edge activations, including those present at
    /// time zero.
    pub timers_created: u64,
    /// Loop iterations; equals `events_total` for the DES.
    pub steps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DesOptions {
    pub retain_events: bool,
}

impl Default for DesOptions {
    fn default() -> Self {
        Self { retain_events: true }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub initial: InfectionState,
    pub final_state: InfectionState,
    /// Empty unless the run retained its event log.
    pub events: Vec<Event>,
    pub t_end: f64,
    pub counters: Counters,
    retained: bool,
}

impl Trajectory {
    pub fn has_event_log(&self) -> bool {
        self.retained
    }

    /// State after every event with time `<= t` (right-continuous).
    pub fn state_at(&self, t: f64) -> Result<InfectionState, DesError> {
        if !(0.0..=self.t_end).contains(&t) {
            return Err(DesError::TimeOutOfRange { t, t_end: self.t_end });
        }
        if !self.retained {
            if t == self.t_end {
                return Ok(self.final_state.clone());
            }
            return Err(DesError::EventsNotRetained);
        }
        let mut x = self.initial.clone();
        for e in self.events.iter().take_while(|e| e.time <= t) {
            match e.kind {
                EventKind::Infection => x.infect(e.node as usize),
                EventKind::Recovery => x.recover(e.node as usize),
            }
        }
        Ok(x)
    }

    /// Replays the log and checks that every event is legal in the state it
    /// is applied to and that times never decrease.
    pub fn replay_is_consistent(&self) -> bool {
        let mut x = self.initial.clone();
        let mut last = 0.0;
        for e in &self.events {
            if e.time < last || e.time > self.t_end {
                return false;
            }
            last = e.time;
            let j = e.node as usize;
            match e.kind {
                EventKind::Infection if !x.is_infected(j) => x.infect(j),
                EventKind::Recovery if x.is_infected(j) => x.recover(j),
                _ => return false,
            }
        }
        !self.retained || x == self.final_state
    }
}

/// Incremental view of a state supporting O(k) event selection and update.
struct Frontier<'g> {
    g: &'g Graph,
    state: InfectionState,
    infected: IndexedSet,
    /// `buckets[c]` holds susceptible nodes with exactly `c` infected
    /// neighbors, for `c >= 1`.
    buckets: Vec<IndexedSet>,
    count: Vec<u32>,
    /// `sum_j n(j, x)`, the number of S-I edges.
    pressure: u64,
}

impl<'g> Frontier<'g> {
    fn new(g: &'g Graph, x0: &InfectionState) -> Self {
        let n = g.node_count();
        let k = g.max_degree();
        let mut f = Self {
            g,
            state: x0.clone(),
            infected: IndexedSet::with_universe(n),
            buckets: (0..=k).map(|_| IndexedSet::with_universe(n)).collect(),
            count: vec![0; n],
            pressure: 0,
        };
        for j in 0..n {
            if x0.is_infected(j) {
                f.infected.insert(j);
            } else {
                let c = g
                    .neighbors(j)
                    .iter()
                    .filter(|nb| x0.is_infected(nb.node as usize))
                    .count();
                f.count[j] = c as u32;
                if c > 0 {
                    f.buckets[c].insert(j);
                }
                f.pressure += c as u64;
            }
        }
        f
    }

    fn shift(&mut self, j: usize, to: u32) {
        let from = self.count[j];
        if from > 0 {
            self.buckets[from as usize].remove(j);
        }
        if to > 0 {
            self.buckets[to as usize].insert(j);
        }
        self.count[j] = to;
    }

    /// Picks a susceptible node with probability `n(j, x) / pressure` given
    /// an integer `r` uniform on `0..pressure`.
    fn pick_target(&self, mut r: u64) -> usize {
        for c in (1..self.buckets.len()).rev() {
            let weight = c as u64 * self.buckets[c].len() as u64;
            if r < weight {
                return self.buckets[c].get((r / c as u64) as usize);
            }
            r -= weight;
        }
        unreachable!("target draw exceeded total pressure")
    }

    /// Returns how many S-I edges the infection activates.
    fn infect(&mut self, j: usize) -> u64 {
        self.pressure -= self.count[j] as u64;
        self.shift(j, 0);
        self.state.infect(j);
        self.infected.insert(j);
        let mut activated = 0;
        for nb in self.g.neighbors(j) {
            let u = nb.node as usize;
            if !self.state.is_infected(u) {
                self.shift(u, self.count[u] + 1);
                self.pressure += 1;
                activated += 1;
            }
        }
        activated
    }

    /// Returns how many S-I edges the recovery activates.
    fn recover(&mut self, i: usize) -> u64 {
        self.state.recover(i);
        self.infected.remove(i);
        let mut c = 0u32;
        for nb in self.g.neighbors(i) {
            let u = nb.node as usize;
            if self.state.is_infected(u) {
                c += 1;
            } else {
                self.shift(u, self.count[u] - 1);
                self.pressure -= 1;
            }
        }
        self.shift(i, c);
        self.pressure += c as u64;
        c as u64
    }
}

/// Runs the continuous-time chain from `x0` until `t_end` or absorption.
pub fn run_des<R: Rng + ?Sized>(
    g: &Graph,
    params: &ProcessParams,
    x0: &InfectionState,
    t_end: f64,
    rng: &mut R,
    options: DesOptions,
) -> Result<Trajectory, DesError> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(DesError::BadHorizon(t_end));
    }
    if x0.len() != g.node_count() {
        return Err(DesError::SizeMismatch {
            state: x0.len(),
            graph: g.node_count(),
        });
    }
    let beta = params.beta();
    let mu = params.recovery_rate();
    let mut frontier = Frontier::new(g, x0);
    let mut counters = Counters {
        timers_created: frontier.pressure,
        ..Counters::default()
    };
    let mut events = Vec::new();
    let mut t = 0.0;

    loop {
        let infection_rate = beta * frontier.pressure as f64;
        let recovery_rate = mu * frontier.infected.len() as f64;
        let total = infection_rate + recovery_rate;
        if total <= 0.0 {
            break;
        }
        t += sample_unit_exponential(rng) / total;
        if t > t_end {
            break;
        }
        let (node, kind) = if rng.random::<f64>() * total < infection_rate {
            let j = frontier.pick_target(rng.random_range(0..frontier.pressure));
            counters.timers_created += frontier.infect(j);
            (j, EventKind::Infection)
        } else {
            let i = frontier.infected.get(rng.random_range(0..frontier.infected.len()));
            counters.timers_created += frontier.recover(i);
            (i, EventKind::Recovery)
        };
        counters.events_total += 1;
        counters.steps += 1;
        if options.retain_events {
            events.push(Event {
                time: t,
                node: node as u32,
                kind,
            });
        }
    }

    Ok(Trajectory {
        initial: x0.clone(),
        final_state: frontier.state,
        events,
        t_end,
        counters,
        retained: options.retain_events,
    })
}
