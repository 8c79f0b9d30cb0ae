//! Small descriptive statistics used by the harness and the checks.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    /// Standard error of the mean; 0 for fewer than two samples.
    pub stderr: f64,
    pub count: usize,
}

pub fn mean_se<I: IntoIterator<Item = f64>>(values: I) -> MeanSe {
    // Welford
    let (mut count, mut mean, mut m2) = (0usize, 0.0, 0.0);
    for v in values {
        count += 1;
        let d = v - mean;
        mean += d / count as f64;
        m2 += d * (v - mean);
    }
    let stderr = if count > 1 {
        (m2 / (count - 1) as f64 / count as f64).sqrt()
    } else {
        0.0
    };
    MeanSe { mean, stderr, count }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("a line fit needs at least {needed} points (got {got})")]
    TooFewPoints { needed: usize, got: usize },
    #[error("a line fit needs distinct abscissae")]
    DegenerateAbscissae,
    #[error("log-log fit needs positive values (got {0})")]
    NonPositive(f64),
}

/// Unweighted least squares `y = intercept + slope x`.
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<LineFit, FitError> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return Err(FitError::TooFewPoints { needed: 2, got: n });
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= f64::EPSILON * mx.abs().max(1.0) {
        return Err(FitError::DegenerateAbscissae);
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if n > 2 {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = y - intercept - slope * x;
                r * r
            })
            .sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
    })
}

/// Least squares on `(log10 x, log10 y)`.
pub fn log_log_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit, FitError> {
    if let Some(&bad) = xs.iter().chain(ys).find(|v| v.partial_cmp(&&0.0) != Some(std::cmp::Ordering::Greater)) {
        return Err(FitError::NonPositive(bad));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.log10()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.log10()).collect();
    ols(&lx, &ly)
}

/// Kolmogorov distance between the empirical CDF of integer samples and a
/// reference CDF, taken over `0..=max(samples)`.
pub fn ks_discrete<F: Fn(u64) -> f64>(samples: &[u64], cdf: F) -> f64 {
    let max = samples.iter().copied().max().unwrap_or(0) as usize;
    let mut hist = vec![0usize; max + 1];
    for &s in samples {
        hist[s as usize] += 1;
    }
    let total = samples.len().max(1) as f64;
    let mut acc = 0;
    let mut d: f64 = 0.0;
    for (y, c) in hist.iter().enumerate() {
        acc += c;
        d = d.max((acc as f64 / total - cdf(y as u64)).abs());
    }
    d
}

/// Two-sample Kolmogorov-Smirnov distance for integer samples.
pub fn ks_two_sample(a: &[u64], b: &[u64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] == v {
            i += 1;
        }
        while j < b.len() && b[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}
