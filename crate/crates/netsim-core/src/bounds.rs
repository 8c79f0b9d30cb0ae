//! Closed-form error bounds, the negative binomial with real shape, and the
//! scalar inequalities the bounds rest on.
//!
//! For step `h <= 1`, horizon `T = i h`, `n` nodes and max degree `k`:
//!
//! | process | `C`                       | `L`     | `K`                     |
//! |---------|---------------------------|---------|-------------------------|
//! | SI      | `n k^2 e^(k-2)`           | `k`     | `(e^(kT) - 1) / k`      |
//! | SIS     | `n k (k e^(k-2) + mu)`    | `k + mu`| `(e^(LT) - 1) / L`      |
//!
//! `E|d_i| <= C h` bounds the local error, `E|f(x,A) - f(z,A)| <= L |x - z|`
//! is the Lipschitz property of the increment map, and the global error
//! satisfies `E|eps_i| <= C K h`.

use alloc::vec::Vec;

use libm::{exp, expm1, fabs, log, log1p};

use crate::process::ProcessKind;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoundsError {
    #[error("bound only established for h <= 1 (got h = {0})")]
    StepTooLarge(f64),
    #[error("invalid bound input: {0}")]
    BadInput(&'static str),
    #[error("negative binomial needs finite r > 0 (got {0})")]
    BadShape(f64),
    #[error("negative binomial needs 0 <= p < 1 (got {0})")]
    BadProbability(f64),
    #[error("inequality domain requires 0 <= a <= b (got a = {a}, b = {b})")]
    BadOrder { a: f64, b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub n: usize,
    pub k: usize,
    pub mu: f64,
    /// Horizon `T = i h`.
    pub horizon: f64,
    pub h: f64,
}

impl BoundInputs {
    fn check(&self) -> Result<(), BoundsError> {
        if self.n == 0 || self.k == 0 {
            return Err(BoundsError::BadInput("n and k must be positive"));
        }
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(BoundsError::BadInput("mu must be finite and >= 0"));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(BoundsError::BadInput("horizon must be finite and > 0"));
        }
        if !(self.h.is_finite() && self.h >= 0.0) {
            return Err(BoundsError::BadInput("h must be finite and >= 0"));
        }
        if self.h > 1.0 {
            return Err(BoundsError::StepTooLarge(self.h));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBound {
    /// Local-error constant `C`.
    pub constant: f64,
    /// Stability factor `K`.
    pub growth: f64,
    /// `C K h`.
    pub bound: f64,
    /// The bound exceeds `n`, the largest possible 1-norm error.
    pub vacuous: bool,
}

/// Lipschitz constant of the increment map: `k` for SI, `k + mu` for SIS.
pub fn lipschitz_constant(kind: ProcessKind, k: usize, mu: f64) -> f64 {
    match kind {
        ProcessKind::Si => k as f64,
        ProcessKind::Sis => k as f64 + mu,
    }
}

/// Local-error constant `C`.
pub fn local_error_constant(kind: ProcessKind, n: usize, k: usize, mu: f64) -> f64 {
    let (n, k) = (n as f64, k as f64);
    match kind {
        ProcessKind::Si => n * k * k * exp(k - 2.0),
        ProcessKind::Sis => n * k * (k * exp(k - 2.0) + mu),
    }
}

/// Zero-stability factor `K = (e^(L T) - 1) / L`.
pub fn stability_factor(lipschitz: f64, horizon: f64) -> f64 {
    if lipschitz == 0.0 {
        return horizon;
    }
    expm1(lipschitz * horizon) / lipschitz
}

fn assemble(n: usize, constant: f64, growth: f64, h: f64) -> ErrorBound {
    let bound = constant * growth * h;
    ErrorBound {
        constant,
        growth,
        bound,
        vacuous: bound > n as f64,
    }
}

/// Global-error bound for SI.
pub fn si_bound(inp: &BoundInputs) -> Result<ErrorBound, BoundsError> {
    inp.check()?;
    let c = local_error_constant(ProcessKind::Si, inp.n, inp.k, 0.0);
    let k = stability_factor(lipschitz_constant(ProcessKind::Si, inp.k, 0.0), inp.horizon);
    Ok(assemble(inp.n, c, k, inp.h))
}

/// Global-error bound for SIS.
pub fn sis_bound(inp: &BoundInputs) -> Result<ErrorBound, BoundsError> {
    inp.check()?;
    let c = local_error_constant(ProcessKind::Sis, inp.n, inp.k, inp.mu);
    let k = stability_factor(lipschitz_constant(ProcessKind::Sis, inp.k, inp.mu), inp.horizon);
    Ok(assemble(inp.n, c, k, inp.h))
}

pub fn bound_for(kind: ProcessKind, inp: &BoundInputs) -> Result<ErrorBound, BoundsError> {
    match kind {
        ProcessKind::Si => si_bound(inp),
        ProcessKind::Sis => sis_bound(inp),
    }
}

// Lanczos coefficients for g = 607/128, 15 terms (Godfrey).
const LANCZOS_G: f64 = 607.0 / 128.0;
const LANCZOS: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_746,
    -0.491_913_816_097_620_2,
    3.399_464_998_481_189e-5,
    4.652_362_892_704_858e-5,
    -9.837_447_530_487_956e-5,
    1.580_887_032_249_125e-4,
    -2.102_644_417_241_049e-4,
    2.174_396_181_152_126_5e-4,
    -1.643_181_065_367_639e-4,
    8.441_822_398_385_275e-5,
    -2.619_083_840_158_141e-5,
    3.689_918_265_953_162_5e-6,
];
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln Gamma(x)` for `x > 0`.
///
/// Lanczos approximation with reflection below 0.5; relative error stays
/// near 1e-15 across `[0.5, 1e7]`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Gamma(x) Gamma(1 - x) = pi / sin(pi x)
        let s = libm::sin(core::f64::consts::PI * x);
        return log(core::f64::consts::PI / fabs(s)) - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut series = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        series += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    HALF_LN_2PI + (z + 0.5) * log(t) - t + log(series)
}

/// Successes before the `r`-th failure when each trial succeeds with
/// probability `p`. `r` may be any positive real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegBinomial {
    r: f64,
    p: f64,
}

impl NegBinomial {
    pub fn new(r: f64, p: f64) -> Result<Self, BoundsError> {
        if !(r.is_finite() && r > 0.0) {
            return Err(BoundsError::BadShape(r));
        }
        if !(0.0..1.0).contains(&p) {
            return Err(BoundsError::BadProbability(p));
        }
        Ok(Self { r, p })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `r p / (1 - p)`.
    pub fn mean(&self) -> f64 {
        self.r * self.p / (1.0 - self.p)
    }

    pub fn variance(&self) -> f64 {
        self.r * self.p / ((1.0 - self.p) * (1.0 - self.p))
    }

    /// `ln[Gamma(y + r) / (y! Gamma(r)) p^y (1 - p)^r]`.
    pub fn ln_pmf(&self, y: u64) -> f64 {
        let yf = y as f64;
        let ln_fail = self.r * log1p(-self.p);
        if y == 0 {
            return ln_fail;
        }
        if self.p == 0.0 {
            return f64::NEG_INFINITY;
        }
        ln_gamma(yf + self.r) - ln_gamma(yf + 1.0) - ln_gamma(self.r) + yf * log(self.p) + ln_fail
    }

    pub fn pmf(&self, y: u64) -> f64 {
        exp(self.ln_pmf(y))
    }

    /// `P[Y <= y]`. Summation stops once past the mean and remaining terms
    /// are below ~1e-17 each and shrinking geometrically.
    pub fn cdf(&self, y: u64) -> f64 {
        let mean = self.mean();
        let mut total = 0.0;
        let mut j = 0u64;
        while j <= y {
            let term = self.pmf(j);
            total += term;
            if j as f64 > mean && term < 1e-17 * (1.0 - self.p) {
                break;
            }
            j += 1;
        }
        total.min(1.0)
    }
}

/// `e^(c h) - 1 <= h c e^c` evaluated at one point.
pub fn expm1_bound_holds(c: f64, h: f64) -> bool {
    expm1(c * h) <= h * c * exp(c)
}

/// `(b - a) t - (e^(-a t) - e^(-b t)) >= 0` for `0 <= a <= b`, with a
/// relative slack of 1e-12 of the magnitude of the terms.
pub fn exp_difference_bound_holds(a: f64, b: f64, t: f64) -> Result<bool, BoundsError> {
    if !(a >= 0.0 && a <= b) {
        return Err(BoundsError::BadOrder { a, b });
    }
    let linear = (b - a) * t;
    let ea = exp(-a * t);
    let eb = exp(-b * t);
    let lhs = linear - (ea - eb);
    let scale = fabs(linear).max(ea).max(eb).max(1.0);
    Ok(lhs >= -1e-12 * scale)
}

/// Pointwise comparison of an empirical CDF against a reference CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    /// `(y, empirical P[Y <= y], reference P[Z <= y])` for
    /// `y = 0 ..= max(sample)`.
    pub points: Vec<(u64, f64, f64)>,
    /// Largest `reference - empirical` over all points (0 if never below).
    pub max_shortfall: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub samples: usize,
    pub sample_mean: f64,
}

/// Checks `Y <= Z` in distribution, `P[Y <= y] >= P[Z <= y] - tolerance`,
/// for samples of `Y` against the reference CDF of `Z`. Beyond the largest
/// sample the empirical CDF is 1, so only `0..=max` needs checking.
pub fn dominance_against<F: Fn(u64) -> f64>(samples: &[u64], reference_cdf: F, tolerance: f64) -> DominanceReport {
    let max = samples.iter().copied().max().unwrap_or(0);
    let mut histogram = alloc::vec![0usize; max as usize + 1];
    for &s in samples {
        histogram[s as usize] += 1;
    }
    let total = samples.len().max(1) as f64;
    let mut cumulative = 0usize;
    let mut points = Vec::with_capacity(histogram.len());
    let mut max_shortfall: f64 = 0.0;
    for (y, &count) in histogram.iter().enumerate() {
        cumulative += count;
        let empirical = cumulative as f64 / total;
        let reference = reference_cdf(y as u64);
        max_shortfall = max_shortfall.max(reference - empirical);
        points.push((y as u64, empirical, reference));
    }
    let sample_mean = samples.iter().map(|&s| s as f64).sum::<f64>() / total;
    DominanceReport {
        points,
        max_shortfall,
        tolerance,
        passed: max_shortfall <= tolerance,
        samples: samples.len(),
        sample_mean,
    }
}
