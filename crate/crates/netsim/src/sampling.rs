//! Real-shape negative binomial sampling as a gamma-mixed Poisson.

use netsim_core::bounds::NegBinomial;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use crate::stats::ks_two_sample;

/// One draw of `NB(r, p)`: `Poisson(L)` with `L ~ Gamma(shape r, scale p / (1 - p))`.
pub fn sample_neg_binomial<R: Rng + ?Sized>(d: &NegBinomial, rng: &mut R) -> u64 {
    if d.p() == 0.0 {
        return 0;
    }
    let scale = d.p() / (1.0 - d.p());
    let lambda = Gamma::new(d.r(), scale).expect("positive shape and scale").sample(rng);
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("positive rate").sample(rng) as u64
}

/// Two-sample KS distance between `NB(r1, p) + NB(r2, p)` and `NB(r1 + r2, p)`.
pub fn divisibility_ks<R: Rng + ?Sized>(r1: f64, r2: f64, p: f64, samples: usize, rng: &mut R) -> f64 {
    let a = NegBinomial::new(r1, p).expect("valid NB");
    let b = NegBinomial::new(r2, p).expect("valid NB");
    let sum = NegBinomial::new(r1 + r2, p).expect("valid NB");
    let lhs: Vec<u64> = (0..samples)
        .map(|_| sample_neg_binomial(&a, rng) + sample_neg_binomial(&b, rng))
        .collect();
    let rhs: Vec<u64> = (0..samples).map(|_| sample_neg_binomial(&sum, rng)).collect();
    ks_two_sample(&lhs, &rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_discrete, mean_se};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sampler_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = 1.0 - (-1.0f64).exp();
        let d = NegBinomial::new(0.5, p).unwrap();
        let xs: Vec<u64> = (0..100_000).map(|_| sample_neg_binomial(&d, &mut rng)).collect();
        let m = mean_se(xs.iter().map(|&x| x as f64));
        assert!((m.mean - 0.859_140_914).abs() < 3.0 * m.stderr, "{m:?}");
        assert!(ks_discrete(&xs, |y| d.cdf(y)) < 0.01);
    }

    #[test]
    fn divisibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert!(divisibility_ks(0.7, 1.9, 0.4, 100_000, &mut rng) < 0.01);
    }
}
