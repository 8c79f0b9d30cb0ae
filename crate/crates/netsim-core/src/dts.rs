//! Fixed-step discrete-time approximation.
//!
//! Every node is updated once per step of length `h`, against the state at
//! the start of the step: a susceptible node `j` becomes infected with
//! probability `1 - exp(-h * beta * n(j, x))`, an infected node recovers with
//! probability `1 - exp(-h * mu)`. Secondary infections within a step are
//! never produced.

use alloc::vec::Vec;

use libm::{expm1, floor, round};
use rand::Rng;

use crate::des::Counters;
use crate::graph::Graph;
use crate::process::{infected_neighbor_counts, InfectionState, ProcessParams};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DtsError {
    #[error("step length must be finite and > 0 (got {0})")]
    BadStep(f64),
    #[error("horizon must be finite and >= 0 (got {0})")]
    BadHorizon(f64),
    #[error("unknown step policy {0:?} (expected truncate or partial-final)")]
    BadPolicy(alloc::string::String),
}

/// How a horizon that is not a multiple of `h` is covered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepPolicy {
    /// `floor(t_end / h)` full steps; the run may stop short of `t_end`.
    #[default]
    Truncate,
    /// Full steps followed by one shorter step ending exactly at `t_end`.
    PartialFinal,
}

impl core::str::FromStr for StepPolicy {
    type Err = DtsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "truncate" => Ok(Self::Truncate),
            "partial-final" => Ok(Self::PartialFinal),
            other => Err(DtsError::BadPolicy(other.into())),
        }
    }
}

impl StepPolicy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Truncate => "truncate",
            Self::PartialFinal => "partial-final",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtsConfig {
    h: f64,
    t_end: f64,
    policy: StepPolicy,
}

impl DtsConfig {
    pub fn new(h: f64, t_end: f64, policy: StepPolicy) -> Result<Self, DtsError> {
        if !(h.is_finite() && h > 0.0) {
            return Err(DtsError::BadStep(h));
        }
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(DtsError::BadHorizon(t_end));
        }
        Ok(Self { h, t_end, policy })
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    #[inline]
    pub fn policy(&self) -> StepPolicy {
        self.policy
    }

    /// `floor(t_end / h)`, robust to quotients like `1 / 0.01` that land a
    /// hair below an integer.
    pub fn full_steps(&self) -> usize {
        let q = self.t_end / self.h;
        let r = round(q);
        if (q - r).abs() <= 1e-9 * r.max(1.0) {
            r as usize
        } else {
            floor(q) as usize
        }
    }

    /// Lengths of the steps the policy takes, in order.
    pub fn step_lengths(&self) -> Vec<f64> {
        let m = self.full_steps();
        let mut lengths = alloc::vec![self.h; m];
        if self.policy == StepPolicy::PartialFinal {
            let rest = self.t_end - m as f64 * self.h;
            if rest > 1e-12 * self.t_end.max(1.0) {
                lengths.push(rest);
            }
        }
        lengths
    }
}

#[derive(Debug, Clone)]
pub struct DtsTrajectory {
    /// `X_0 .. X_M`.
    pub states: Vec<InfectionState>,
    /// Time at the end of each stored state, `times[0] = 0`.
    pub times: Vec<f64>,
    pub h: f64,
    /// `events_total` counts node flips; `timers_created` counts the S-I
    /// edges examined at the start of each step.
    pub counters: Counters,
}

impl DtsTrajectory {
    pub fn final_state(&self) -> &InfectionState {
        self.states.last().expect("trajectory holds X_0")
    }
}

/// Probability that a susceptible node with `c` infected neighbors is
/// infected within a step of length `h`.
#[inline]
pub fn infection_probability(beta: f64, c: u32, h: f64) -> f64 {
    -expm1(-h * beta * c as f64)
}

#[inline]
pub fn recovery_probability(mu: f64, h: f64) -> f64 {
    -expm1(-h * mu)
}

/// One synchronous update of length `h`.
///
/// Uniforms are consumed in node order: one per susceptible node with at
/// least one infected neighbor, and one per infected node when the process
/// recovers. With `mu = 0` the SIS draw sequence is therefore identical to SI.
pub fn dts_step<R: Rng + ?Sized>(
    g: &Graph,
    params: &ProcessParams,
    x: &InfectionState,
    h: f64,
    rng: &mut R,
) -> InfectionState {
    step_counting(g, params, x, h, rng).0
}

fn step_counting<R: Rng + ?Sized>(
    g: &Graph,
    params: &ProcessParams,
    x: &InfectionState,
    h: f64,
    rng: &mut R,
) -> (InfectionState, u64, u64) {
    if h <= 0.0 {
        return (x.clone(), 0, 0);
    }
    let beta = params.beta();
    let p_recover = recovery_probability(params.recovery_rate(), h);
    let recovers = params.recovers();
    let counts = infected_neighbor_counts(g, x);
    let mut next = x.clone();
    let mut flips = 0;
    let mut pressure = 0;
    for (j, &c) in counts.iter().enumerate() {
        if x.is_infected(j) {
            if recovers && rng.random::<f64>() < p_recover {
                next.recover(j);
                flips += 1;
            }
        } else if c > 0 {
            pressure += c as u64;
            if rng.random::<f64>() < infection_probability(beta, c, h) {
                next.infect(j);
                flips += 1;
            }
        }
    }
    (next, flips, pressure)
}

/// Iterates [`dts_step`] over the steps chosen by `cfg`.
pub fn run_dts<R: Rng + ?Sized>(
    g: &Graph,
    params: &ProcessParams,
    x0: &InfectionState,
    cfg: &DtsConfig,
    rng: &mut R,
) -> DtsTrajectory {
    let lengths = cfg.step_lengths();
    let mut states = Vec::with_capacity(lengths.len() + 1);
    let mut times = Vec::with_capacity(lengths.len() + 1);
    let mut counters = Counters::default();
    states.push(x0.clone());
    times.push(0.0);
    let mut t = 0.0;
    for &dt in &lengths {
        let (next, flips, timers) = step_counting(g, params, states.last().unwrap(), dt, rng);
        counters.events_total += flips;
        counters.timers_created += timers;
        counters.steps += 1;
        t += dt;
        states.push(next);
        times.push(t);
    }
    DtsTrajectory {
        states,
        times,
        h: cfg.h,
        counters,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::make_torus;
    use crate::process::ProcessKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn step_counts_for_reported_step_sizes() {
        let c = DtsConfig::new(0.01, 1.0, StepPolicy::Truncate).unwrap();
        assert_eq!(c.full_steps(), 100);
        let c = DtsConfig::new(0.0215, 1.0, StepPolicy::Truncate).unwrap();
        assert_eq!(c.full_steps(), 46);
        assert_eq!(c.step_lengths().len(), 46);
        let c = DtsConfig::new(0.0215, 1.0, StepPolicy::PartialFinal).unwrap();
        let l = c.step_lengths();
        assert_eq!(l.len(), 47);
        assert!((l.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((l[46] - 0.011).abs() < 1e-12);
        // exact multiple: no sliver step
        let c = DtsConfig::new(0.1, 1.0, StepPolicy::PartialFinal).unwrap();
        assert_eq!(c.step_lengths().len(), 10);
    }

    #[test]
    fn config_validation() {
        assert!(DtsConfig::new(0.0, 1.0, StepPolicy::Truncate).is_err());
        assert!(DtsConfig::new(0.1, -1.0, StepPolicy::Truncate).is_err());
        assert!("bogus".parse::<StepPolicy>().is_err());
        assert_eq!("partial-final".parse::<StepPolicy>().unwrap(), StepPolicy::PartialFinal);
    }

    #[test]
    fn no_pressure_means_no_change() {
        let g = make_torus(4, 4).unwrap();
        let x = InfectionState::susceptible(16);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(dts_step(&g, &ProcessParams::si(), &x, 0.5, &mut rng), x);
        let x = InfectionState::from_infected(16, [3, 9]);
        assert_eq!(dts_step(&g, &ProcessParams::sis(1.0).unwrap(), &x, 0.0, &mut rng), x);
    }

    #[test]
    fn absorbing_full_state() {
        let g = make_torus(5, 5).unwrap();
        let x0 = InfectionState::all_infected(25);
        let cfg = DtsConfig::new(0.1, 1.0, StepPolicy::Truncate).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tr = run_dts(&g, &ProcessParams::si(), &x0, &cfg, &mut rng);
        assert_eq!(tr.counters.events_total, 0);
        assert_eq!(tr.counters.steps, 10);
        assert!(tr.states.iter().all(|s| *s == x0));
    }

    #[test]
    fn si_paths_are_monotone() {
        let g = make_torus(10, 10).unwrap();
        let x0 = InfectionState::from_infected(100, [0, 50]);
        let cfg = DtsConfig::new(0.05, 2.0, StepPolicy::Truncate).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let tr = run_dts(&g, &ProcessParams::si(), &x0, &cfg, &mut rng);
        assert_eq!(tr.states.len(), 41);
        for w in tr.states.windows(2) {
            assert!(w[1].dominates(&w[0]).unwrap());
        }
        let flips = tr.final_state().infected_count() - 2;
        assert_eq!(tr.counters.events_total, flips as u64);
    }

    #[test]
    fn sis_with_zero_mu_replays_si() {
        let g = make_torus(6, 6).unwrap();
        let x0 = InfectionState::from_infected(36, [1, 20]);
        let cfg = DtsConfig::new(0.1, 1.0, StepPolicy::Truncate).unwrap();
        let si = run_dts(&g, &ProcessParams::si(), &x0, &cfg, &mut ChaCha8Rng::seed_from_u64(5));
        let sis = ProcessParams::new(ProcessKind::Sis, 1.0, 0.0).unwrap();
        let sis = run_dts(&g, &sis, &x0, &cfg, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(si.states, sis.states);
    }

    #[test]
    fn per_node_probability_formula() {
        assert!((infection_probability(1.0, 2, 0.5) - (1.0 - libm::exp(-1.0))).abs() < 1e-15);
        assert_eq!(infection_probability(1.0, 0, 0.5), 0.0);
        assert!((recovery_probability(0.2, 1.0) - (1.0 - libm::exp(-0.2))).abs() < 1e-15);
    }
}
