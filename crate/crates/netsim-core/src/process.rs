//! Infection states, process parameters and the neighbor-count kernel.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::Graph;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProcessError {
    #[error("states have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("infection rate beta must be finite and > 0 (got {0})")]
    BadBeta(f64),
    #[error("recovery rate mu must be finite and >= 0 (got {0})")]
    BadMu(f64),
    #[error("prevalence must lie in [0, 1] (got {0})")]
    BadPrevalence(f64),
    #[error("malformed state string: {0}")]
    BadHex(&'static str),
}

/// Binary infection vector over `n` nodes, bit `j` set when node `j` is
/// infected.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct InfectionState {
    words: Vec<u64>,
    n: usize,
}

impl fmt::Debug for InfectionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "InfectionState({}/{} infected)", self.infected_count(), self.n)
    }
}

impl InfectionState {
    pub fn susceptible(n: usize) -> Self {
        Self {
            words: vec![0; n.div_ceil(64)],
            n,
        }
    }

    pub fn all_infected(n: usize) -> Self {
        let mut s = Self {
            words: vec![u64::MAX; n.div_ceil(64)],
            n,
        };
        s.clear_tail();
        s
    }

    pub fn from_infected<I: IntoIterator<Item = usize>>(n: usize, infected: I) -> Self {
        let mut s = Self::susceptible(n);
        for j in infected {
            s.infect(j);
        }
        s
    }

    fn clear_tail(&mut self) {
        let rem = self.n % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn is_infected(&self, j: usize) -> bool {
        debug_assert!(j < self.n);
        self.words[j / 64] >> (j % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, j: usize, infected: bool) {
        debug_assert!(j < self.n);
        let mask = 1u64 << (j % 64);
        if infected {
            self.words[j / 64] |= mask;
        } else {
            self.words[j / 64] &= !mask;
        }
    }

    #[inline]
    pub fn infect(&mut self, j: usize) {
        self.set(j, true);
    }

    #[inline]
    pub fn recover(&mut self, j: usize) {
        self.set(j, false);
    }

    /// `|x|`.
    pub fn infected_count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn prevalence(&self) -> f64 {
        self.infected_count() as f64 / self.n as f64
    }

    /// `I(x)` in increasing order.
    pub fn infected(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.is_infected(j))
    }

    /// `S(x)` in increasing order.
    pub fn susceptible_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| !self.is_infected(j))
    }

    fn check_len(&self, other: &Self) -> Result<(), ProcessError> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(ProcessError::LengthMismatch(self.n, other.n))
        }
    }

    /// `|x - z|` in the 1-norm.
    pub fn l1_distance(&self, other: &Self) -> Result<usize, ProcessError> {
        self.check_len(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    /// Component-wise `self >= other`: every node infected in `other` is
    /// infected in `self`.
    pub fn dominates(&self, other: &Self) -> Result<bool, ProcessError> {
        self.check_len(other)?;
        Ok(self.words.iter().zip(&other.words).all(|(a, b)| b & !a == 0))
    }

    /// Signed `self - other`, one entry in {-1, 0, 1} per node.
    pub fn signed_difference(&self, other: &Self) -> Result<Vec<i8>, ProcessError> {
        self.check_len(other)?;
        Ok((0..self.n)
            .map(|j| self.is_infected(j) as i8 - other.is_infected(j) as i8)
            .collect())
    }

    /// Hex encoding `"<n>:<digits>"`. Digit `i` carries nodes `4i..4i+4`, with
    /// node `4i` in the most significant bit, so the digits read as the bit
    /// vector from node 0 onward; unused trailing bits are zero.
    pub fn to_hex(&self) -> String {
        use core::fmt::Write;
        let mut out = String::with_capacity(self.n / 4 + 8);
        write!(out, "{}:", self.n).unwrap();
        for chunk in 0..self.n.div_ceil(4) {
            let mut digit = 0u32;
            for b in 0..4 {
                let j = 4 * chunk + b;
                if j < self.n && self.is_infected(j) {
                    digit |= 8 >> b;
                }
            }
            out.push(char::from_digit(digit, 16).unwrap());
        }
        out
    }

    pub fn from_hex(s: &str) -> Result<Self, ProcessError> {
        let (n, digits) = s.split_once(':').ok_or(ProcessError::BadHex("missing ':'"))?;
        let n: usize = n.trim().parse().map_err(|_| ProcessError::BadHex("bad node count"))?;
        let digits = digits.trim();
        if digits.len() != n.div_ceil(4) {
            return Err(ProcessError::BadHex("digit count does not match node count"));
        }
        let mut state = Self::susceptible(n);
        for (chunk, c) in digits.chars().enumerate() {
            if c.is_ascii_uppercase() {
                return Err(ProcessError::BadHex("digits must be lowercase"));
            }
            let d = c.to_digit(16).ok_or(ProcessError::BadHex("non-hex digit"))?;
            for b in 0..4 {
                if d & (8 >> b) != 0 {
                    let j = 4 * chunk + b;
                    if j >= n {
                        return Err(ProcessError::BadHex("padding bits must be zero"));
                    }
                    state.infect(j);
                }
            }
        }
        Ok(state)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcessKind {
    Si,
    Sis,
}

impl core::str::FromStr for ProcessKind {
    type Err = &'static str;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "si" => Ok(Self::Si),
            "sis" => Ok(Self::Sis),
            _ => Err("process kind must be SI or SIS"),
        }
    }
}

impl fmt::Display for ProcessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Si => "SI",
            Self::Sis => "SIS",
        })
    }
}

/// Per-edge infection rate `beta` and per-node recovery rate `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessParams {
    kind: ProcessKind,
    beta: f64,
    mu: f64,
}

impl ProcessParams {
    pub fn new(kind: ProcessKind, beta: f64, mu: f64) -> Result<Self, ProcessError> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(ProcessError::BadBeta(beta));
        }
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(ProcessError::BadMu(mu));
        }
        Ok(Self { kind, beta, mu })
    }

    /// SI with unit infection rate.
    pub fn si() -> Self {
        Self {
            kind: ProcessKind::Si,
            beta: 1.0,
            mu: 0.0,
        }
    }

    /// SIS with unit infection rate and recovery rate `mu`.
    pub fn sis(mu: f64) -> Result<Self, ProcessError> {
        Self::new(ProcessKind::Sis, 1.0, mu)
    }

    #[inline]
    pub fn kind(&self) -> ProcessKind {
        self.kind
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// The rate as configured, even for SI where it is ignored.
    #[inline]
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Effective recovery rate: `mu` for SIS, zero for SI.
    #[inline]
    pub fn recovery_rate(&self) -> f64 {
        match self.kind {
            ProcessKind::Si => 0.0,
            ProcessKind::Sis => self.mu,
        }
    }

    #[inline]
    pub fn recovers(&self) -> bool {
        self.recovery_rate() > 0.0
    }
}

/// `n(j, x)`: infected neighbors of `j` if `j` is susceptible, else 0.
pub fn infected_neighbor_count(g: &Graph, x: &InfectionState, j: usize) -> usize {
    if x.is_infected(j) {
        return 0;
    }
    g.neighbors(j)
        .iter()
        .filter(|nb| x.is_infected(nb.node as usize))
        .count()
}

/// `n(j, x)` for every node at once.
pub fn infected_neighbor_counts(g: &Graph, x: &InfectionState) -> Vec<u32> {
    let mut counts = vec![0u32; g.node_count()];
    for &(u, v) in g.edges() {
        let (u, v) = (u as usize, v as usize);
        match (x.is_infected(u), x.is_infected(v)) {
            (true, false) => counts[v] += 1,
            (false, true) => counts[u] += 1,
            _ => {}
        }
    }
    counts
}

/// `sum_j |n(j, x) - n(j, z)|`.
pub fn neighbor_count_l1_diff(g: &Graph, x: &InfectionState, z: &InfectionState) -> usize {
    let a = infected_neighbor_counts(g, x);
    let b = infected_neighbor_counts(g, z);
    a.iter().zip(&b).map(|(&p, &q)| p.abs_diff(q) as usize).sum()
}

/// Number of susceptible-infected edges in `x`.
pub fn si_edge_count(g: &Graph, x: &InfectionState) -> usize {
    g.edges()
        .iter()
        .filter(|&&(u, v)| x.is_infected(u as usize) != x.is_infected(v as usize))
        .count()
}

/// Random initial infections: `round(prevalence * n)` distinct nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitSpec {
    pub prevalence: f64,
    pub seed: u64,
}

impl InitSpec {
    pub fn new(prevalence: f64, seed: u64) -> Result<Self, ProcessError> {
        if !(0.0..=1.0).contains(&prevalence) {
            return Err(ProcessError::BadPrevalence(prevalence));
        }
        Ok(Self { prevalence, seed })
    }

    /// Half-up rounding of `prevalence * n`.
    pub fn infected_count(&self, n: usize) -> usize {
        let c = libm::floor(self.prevalence * n as f64 + 0.5) as usize;
        c.min(n)
    }
}

/// Infects `init.infected_count(n)` nodes chosen uniformly without
/// replacement from a generator seeded by `init.seed`.
pub fn random_initial_state(g: &Graph, init: &InitSpec) -> InfectionState {
    let n = g.node_count();
    let count = init.infected_count(n);
    let mut rng = ChaCha8Rng::seed_from_u64(init.seed);
    let picked = rand::seq::index::sample(&mut rng, n, count);
    InfectionState::from_infected(n, picked.iter())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_torus, Graph};

    #[test]
    fn counts_and_membership() {
        let mut x = InfectionState::susceptible(130);
        assert_eq!(x.infected_count(), 0);
        x.infect(0);
        x.infect(64);
        x.infect(129);
        assert_eq!(x.infected_count(), 3);
        assert_eq!(x.infected().collect::<Vec<_>>(), [0, 64, 129]);
        assert_eq!(x.susceptible_nodes().count(), 127);
        x.recover(64);
        assert!(!x.is_infected(64));
        assert_eq!(InfectionState::all_infected(130).infected_count(), 130);
    }

    #[test]
    fn neighbor_count_cases() {
        let g = make_torus(3, 3).unwrap();
        let none = InfectionState::susceptible(9);
        assert!((0..9).all(|j| infected_neighbor_count(&g, &none, j) == 0));

        let all = InfectionState::all_infected(9);
        assert_eq!(infected_neighbor_count(&g, &all, 4), 0);

        let x = InfectionState::from_infected(9, [0]);
        // node 1 is the right neighbor of node 0 in row-major order
        assert_eq!(infected_neighbor_count(&g, &x, 1), 1);
        assert_eq!(infected_neighbor_count(&g, &x, 0), 0);
        assert_eq!(infected_neighbor_count(&g, &x, 4), 0);
    }

    #[test]
    fn l1_diff_on_single_edge() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let x = InfectionState::from_infected(2, [0]);
        let z = InfectionState::susceptible(2);
        assert_eq!(neighbor_count_l1_diff(&g, &x, &z), 1);
        assert_eq!(neighbor_count_l1_diff(&g, &x, &x), 0);
    }

    #[test]
    fn dominance_cases() {
        let x = InfectionState::from_infected(8, [1, 2]);
        assert!(x.dominates(&x).unwrap());
        assert!(InfectionState::all_infected(8).dominates(&x).unwrap());
        let without3 = InfectionState::from_infected(8, [0, 1]);
        let with3 = InfectionState::from_infected(8, [3]);
        assert!(!without3.dominates(&with3).unwrap());
        assert_eq!(
            x.dominates(&InfectionState::susceptible(9)),
            Err(ProcessError::LengthMismatch(8, 9))
        );
    }

    #[test]
    fn initial_state_sizes() {
        let g = make_torus(30, 30).unwrap();
        assert_eq!(
            random_initial_state(&g, &InitSpec::new(0.0, 1).unwrap()).infected_count(),
            0
        );
        assert_eq!(
            random_initial_state(&g, &InitSpec::new(1.0, 1).unwrap()).infected_count(),
            900
        );
        let a = random_initial_state(&g, &InitSpec::new(0.1, 5).unwrap());
        assert_eq!(a.infected_count(), 90);
        assert_eq!(a, random_initial_state(&g, &InitSpec::new(0.1, 5).unwrap()));
        assert!(InitSpec::new(1.5, 0).is_err());
        assert_eq!(InitSpec::new(0.5, 0).unwrap().infected_count(3), 2);
    }

    #[test]
    fn hex_encoding_layout() {
        let x = InfectionState::from_infected(6, [0, 3, 5]);
        // nodes 0..4 -> 1001, nodes 4..6 -> 01 padded -> 0100
        assert_eq!(x.to_hex(), "6:94");
        assert_eq!(InfectionState::from_hex("6:94").unwrap(), x);
        assert!(InfectionState::from_hex("6:95").is_err());
        assert!(InfectionState::from_hex("6:9").is_err());
        assert!(InfectionState::from_hex("6:9A").is_err());
        assert_eq!(InfectionState::susceptible(0).to_hex(), "0:");
    }

    #[test]
    fn params_validation() {
        assert!(ProcessParams::new(ProcessKind::Si, 0.0, 0.0).is_err());
        assert!(ProcessParams::new(ProcessKind::Sis, 1.0, -0.1).is_err());
        let si = ProcessParams::new(ProcessKind::Si, 2.0, 5.0).unwrap();
        assert_eq!(si.recovery_rate(), 0.0);
        assert_eq!(ProcessParams::sis(0.2).unwrap().recovery_rate(), 0.2);
        assert_eq!("sis".parse::<ProcessKind>(), Ok(ProcessKind::Sis));
    }
}
