//! Property suites behind `netsim verify`.

use netsim_core::bounds::{
    bound_for, exp_difference_bound_holds, expm1_bound_holds, local_error_constant, BoundInputs,
};
use netsim_core::coupling::{run_coupled, secondary_infection_dominance};
use netsim_core::dts::{DtsConfig, StepPolicy};
use netsim_core::graph::{make_small_world, make_torus, Graph};
use netsim_core::process::{
    neighbor_count_l1_diff, random_initial_state, InfectionState, InitSpec, ProcessKind, ProcessParams,
};
use netsim_core::rng::{derive, tag};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::experiments::{dominance_oracle_test, lipschitz_check, with_workers, yule_oracle_test};
use crate::sampling::divisibility_ks;
use crate::stats::mean_se;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Lemmas,
    Coupling,
    Oracles,
    All,
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lemmas" => Ok(Self::Lemmas),
            "coupling" => Ok(Self::Coupling),
            "oracles" => Ok(Self::Oracles),
            "all" => Ok(Self::All),
            _ => Err(format!(
                "unknown suite {s:?} (expected lemmas, coupling, oracles or all)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub statistic: String,
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {} ({})", self.name, self.statistic)
    }
}

fn check(name: impl Into<String>, passed: bool, statistic: String) -> Check {
    Check {
        name: name.into(),
        passed,
        statistic,
    }
}

pub fn run_suite(suite: Suite, seed: u64, workers: usize) -> Vec<Check> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Lemmas | Suite::All) {
        out.extend(inequality_checks(seed));
    }
    if matches!(suite, Suite::Coupling | Suite::All) {
        out.extend(coupling_checks(seed, workers));
    }
    if matches!(suite, Suite::Oracles | Suite::All) {
        out.extend(oracle_checks(seed, workers));
    }
    out
}

/// `e^(ch) - 1 <= h c e^c` on a 100 x 100 grid of `[0, 20] x [0, 1]`.
pub fn expm1_grid() -> (usize, usize) {
    let mut ok = 0;
    for i in 0..100 {
        for j in 0..100 {
            ok += expm1_bound_holds(20.0 * i as f64 / 99.0, j as f64 / 99.0) as usize;
        }
    }
    (ok, 10_000)
}

/// Exponential-difference inequality at `samples` random `0 <= a <= b <= 10`,
/// `|t| <= 10`.
pub fn exp_difference_random(samples: usize, seed: u64) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(derive(&[tag::SAMPLE, seed, 3]));
    let mut ok = 0;
    for _ in 0..samples {
        let a: f64 = rng.random_range(0.0..=10.0);
        let b: f64 = rng.random_range(a..=10.0);
        let t: f64 = rng.random_range(-10.0..=10.0);
        ok += exp_difference_bound_holds(a, b, t).unwrap_or(false) as usize;
    }
    (ok, samples)
}

/// `sum_j |n(j,x) - n(j,z)| <= k |x - z|` for random `x >= z` on random
/// tori and small worlds. Returns `(passed, total, max ratio)`.
pub fn neighbor_count_random(samples: usize, seed: u64) -> (usize, usize, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(derive(&[tag::SAMPLE, seed, 8]));
    let graphs: Vec<Graph> = (0..8u64)
        .map(|i| {
            let w = 3 + (i as usize % 4) * 3;
            if i % 2 == 0 {
                make_torus(w, w + 1).unwrap()
            } else {
                make_small_world(w, w + 1, 6, derive(&[seed, i])).unwrap()
            }
        })
        .collect();
    let mut ok = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let g = &graphs[rng.random_range(0..graphs.len())];
        let n = g.node_count();
        let pz: f64 = rng.random();
        let z = InfectionState::from_infected(n, (0..n).filter(|_| rng.random::<f64>() < pz).collect::<Vec<_>>());
        let mut x = z.clone();
        let extra = rng.random_range(1..=n);
        for _ in 0..extra {
            x.infect(rng.random_range(0..n));
        }
        let lhs = neighbor_count_l1_diff(g, &x, &z) as f64;
        let dist = x.l1_distance(&z).unwrap() as f64;
        let rhs = g.max_degree() as f64 * dist;
        ok += (lhs <= rhs) as usize;
        if dist > 0.0 {
            worst = worst.max(lhs / rhs);
        }
    }
    (ok, samples, worst)
}

fn inequality_checks(seed: u64) -> Vec<Check> {
    let (ok2, n2) = expm1_grid();
    let (ok3, n3) = exp_difference_random(10_000, seed);
    let (ok8, n8, worst) = neighbor_count_random(10_000, seed);
    vec![
        check("exp(ch)-1 <= hc*exp(c) grid", ok2 == n2, format!("{ok2}/{n2}")),
        check("(b-a)t >= exp(-at)-exp(-bt) random", ok3 == n3, format!("{ok3}/{n3}")),
        check(
            "neighbor-count difference <= k|x-z|",
            ok8 == n8,
            format!("{ok8}/{n8}, max ratio {worst:.4}"),
        ),
    ]
}

struct CoupledSummary {
    steps: usize,
    dominated: usize,
    final_error: f64,
    local_error: f64,
}

fn coupled_batch(g: &Graph, params: &ProcessParams, h: f64, reps: u64, seed: u64, workers: usize) -> CoupledSummary {
    let cfg = DtsConfig::new(h, 1.0, StepPolicy::Truncate).unwrap();
    let paths: Vec<_> = with_workers(workers, || {
        (0..reps)
            .into_par_iter()
            .map(|rep| {
                let init = InitSpec::new(0.1, derive(&[tag::INIT, seed, rep])).unwrap();
                let x0 = random_initial_state(g, &init);
                run_coupled(g, params, &x0, &cfg, seed, rep)
            })
            .collect()
    });
    let steps = paths.iter().map(|p| p.records.len()).sum();
    let dominated = paths
        .iter()
        .map(|p| p.records.iter().filter(|r| r.dominance_ok).count())
        .sum();
    let final_error = mean_se(paths.iter().map(|p| p.final_error() as f64)).mean;
    let local_error = mean_se(paths.iter().flat_map(|p| p.records.iter().map(|r| r.local_error()))).mean;
    CoupledSummary {
        steps,
        dominated,
        final_error,
        local_error,
    }
}

fn coupling_checks(seed: u64, workers: usize) -> Vec<Check> {
    let mut out = Vec::new();
    let torus = make_torus(30, 30).unwrap();
    let sw = make_small_world(30, 30, 5, seed).unwrap();
    let si = ProcessParams::si();
    let sis = ProcessParams::sis(0.2).unwrap();

    let (mut steps, mut dominated) = (0, 0);
    for (gi, g) in [&torus, &sw].into_iter().enumerate() {
        for (hi, h) in [0.01, 0.1, 0.5].into_iter().enumerate() {
            let s = coupled_batch(g, &si, h, 100, derive(&[seed, gi as u64, hi as u64]), workers);
            steps += s.steps;
            dominated += s.dominated;
        }
    }
    out.push(check(
        "SI coupled dominance",
        steps == dominated,
        format!("{dominated}/{steps} steps"),
    ));

    for (name, params) in [("SI", si), ("SIS", sis)] {
        for h in [0.01, 0.05, 0.2] {
            let s = coupled_batch(&torus, &params, h, 100, derive(&[seed, 11, h.to_bits()]), workers);
            let inp = BoundInputs {
                n: 900,
                k: 4,
                mu: params.mu(),
                horizon: 1.0,
                h,
            };
            let b = bound_for(params.kind(), &inp).unwrap();
            let c = local_error_constant(params.kind(), 900, 4, params.mu());
            out.push(check(
                format!("{name} global error bound h={h}"),
                s.final_error <= b.bound,
                format!("mean |eps_M| {:.3} <= {:.1}", s.final_error, b.bound),
            ));
            out.push(check(
                format!("{name} local error bound h={h}"),
                s.local_error <= c * h,
                format!("mean |d_i| {:.3} <= {:.1}", s.local_error, c * h),
            ));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derive(&[tag::SAMPLE, seed, 4]));
    for (name, params) in [("SI", si), ("SIS", sis)] {
        let mut passed = 0;
        let mut worst: f64 = f64::NEG_INFINITY;
        let pairs = 20;
        for pair in 0..pairs {
            let (x, z) = lipschitz_pair(&torus, &mut rng);
            let r = lipschitz_check(&torus, &params, &x, &z, 0.1, 2_000, derive(&[seed, pair]));
            passed += r.passed as usize;
            worst = worst.max(r.mean - r.bound);
        }
        out.push(check(
            format!("{name} Lipschitz increment map"),
            passed == pairs as usize,
            format!("{passed}/{pairs} pairs, max mean-bound {worst:.3}"),
        ));
    }

    let x0 = random_initial_state(&torus, &InitSpec::new(0.1, derive(&[seed, 6])).unwrap());
    let r = secondary_infection_dominance(&torus, &x0, 0.1, 20_000, seed, 0.02);
    out.push(check(
        "secondary infections dominated by NB mixture",
        r.passed,
        format!("max shortfall {:.4}", r.max_shortfall),
    ));
    out
}

/// Random `x >= z` differing in 1 to 5 nodes.
pub fn lipschitz_pair<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> (InfectionState, InfectionState) {
    let n = g.node_count();
    let z = InfectionState::from_infected(n, (0..n).filter(|_| rng.random::<f64>() < 0.1).collect::<Vec<_>>());
    let mut x = z.clone();
    let want = rng.random_range(1..=5);
    while x.l1_distance(&z).unwrap() < want {
        x.infect(rng.random_range(0..n));
    }
    (x, z)
}

fn oracle_checks(seed: u64, workers: usize) -> Vec<Check> {
    let mut out = Vec::new();
    for (m, k, t) in [(2, 4, std::f64::consts::LN_2), (3, 3, 0.5)] {
        match yule_oracle_test(m, k, t, 20_000, seed, workers) {
            Ok(r) => out.push(check(
                format!("offspring law on tree m={m} k={k} t={t:.4}"),
                r.passed,
                format!(
                    "KS {:.4} < {:.4}, mean {:.3} vs {:.3}",
                    r.ks,
                    r.critical,
                    r.sample_mean,
                    r.distribution.mean()
                ),
            )),
            Err(e) => out.push(check(
                format!("offspring law on tree m={m} k={k}"),
                false,
                e.to_string(),
            )),
        }
    }
    let torus = make_torus(30, 30).unwrap();
    let x0 = random_initial_state(&torus, &InitSpec::new(0.1, derive(&[seed, 5])).unwrap());
    let r = dominance_oracle_test(&torus, &x0, 0.1, 20_000, seed, 0.02, workers);
    out.push(check(
        "offspring bounded by NB on torus",
        r.passed,
        format!("max shortfall {:.4}", r.max_shortfall),
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(derive(&[tag::SAMPLE, seed, 9]));
    let ks = divisibility_ks(0.7, 1.3, 0.35, 100_000, &mut rng);
    out.push(check("NB divisibility", ks < 0.01, format!("KS {ks:.4} < 0.01")));
    out.push(path_exactness(seed, workers));
    out
}

/// DES on the 3-node path from one end, SI, at t = 0.5 against the closed
/// form `P[N=1] = e^-t`, `P[N=2] = t e^-t`.
fn path_exactness(seed: u64, workers: usize) -> Check {
    use netsim_core::des::{run_des, DesOptions};
    let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
    let x0 = InfectionState::from_infected(3, [0]);
    let p = ProcessParams::new(ProcessKind::Si, 1.0, 0.0).unwrap();
    let reps = 100_000u64;
    let counts: Vec<usize> = with_workers(workers, || {
        (0..reps)
            .into_par_iter()
            .map(|rep| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive(&[tag::DES, seed, rep]));
                run_des(&g, &p, &x0, 0.5, &mut rng, DesOptions { retain_events: false })
                    .unwrap()
                    .final_state
                    .infected_count()
            })
            .collect()
    });
    let t: f64 = 0.5;
    let probs = [(-t).exp(), t * (-t).exp(), 1.0 - (-t).exp() - t * (-t).exp()];
    let mut worst: f64 = 0.0;
    for (i, p) in probs.iter().enumerate() {
        let f = counts.iter().filter(|&&c| c == i + 1).count() as f64 / reps as f64;
        worst = worst.max((f - p).abs() / (p * (1.0 - p) / reps as f64).sqrt());
    }
    check(
        "3-node path transient law",
        worst <= 3.0,
        format!("max |z| {worst:.2} <= 3"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names() {
        assert_eq!("all".parse::<Suite>().unwrap(), Suite::All);
        assert!("everything".parse::<Suite>().is_err());
    }

    #[test]
    fn lemma_suite_passes() {
        let checks = run_suite(Suite::Lemmas, 1, 1);
        assert_eq!(checks.len(), 3);
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
        assert!(checks[0].to_string().starts_with("PASS "));
    }
}
