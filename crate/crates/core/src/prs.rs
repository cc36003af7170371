//! Predictive random sets on the unit interval.
//!
//! A predictive random set is a random subset of [0,1] used to predict the
//! unobserved auxiliary variable; its contention function `f(u)` is the
//! probability the set contains `u`. Both built-in families are nested and
//! valid: the contention of a Unif(0,1) draw is itself exactly Unif(0,1).
//! The point-plausibility transforms below are the closed-form combination
//! step for a single parameter point, given the CDF value `F = F_theta(T)`.

use crate::error::{Error, Result};
use crate::seeding;
use rand::Rng;

/// The two built-in predictive random set families.
///
/// `DefaultSymmetric` is the interval around 1/2 with random half-width;
/// `OneSidedLower` is the random interval `[0, U]`, appropriate when large
/// values of the statistic indicate poor fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum RandomSetFamily {
    DefaultSymmetric,
    OneSidedLower,
}

impl RandomSetFamily {
    /// Contention function: probability the random set contains `u`.
    pub fn contention(self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::domain(format!("contention argument u={u} outside [0,1]")));
        }
        Ok(match self {
            RandomSetFamily::DefaultSymmetric => 1.0 - (2.0 * u - 1.0).abs(),
            RandomSetFamily::OneSidedLower => 1.0 - u,
        })
    }

    /// Point plausibility when the statistic has a continuous distribution,
    /// from the CDF value `f = F_theta(T_{y,theta})`.
    pub fn point_plaus_continuous(self, f: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::domain(format!("CDF value F={f} outside [0,1]")));
        }
        Ok(match self {
            RandomSetFamily::DefaultSymmetric => 1.0 - (2.0 * f - 1.0).abs(),
            RandomSetFamily::OneSidedLower => 1.0 - f,
        })
    }

    /// Point plausibility when the statistic is discrete: `f_left` is the
    /// left limit `F_theta(t-)` and `f` is `F_theta(t)`.
    pub fn point_plaus_discrete(self, f_left: f64, f: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&f_left) || !(0.0..=1.0).contains(&f) {
            return Err(Error::domain(format!(
                "CDF values (F_left={f_left}, F={f}) outside [0,1]"
            )));
        }
        if f_left > f {
            return Err(Error::contract(format!(
                "left CDF limit F_left={f_left} exceeds F={f}"
            )));
        }
        Ok(match self {
            RandomSetFamily::DefaultSymmetric => {
                1.0 - (2.0 * f_left - 1.0).max(0.0) - (1.0 - 2.0 * f).max(0.0)
            }
            RandomSetFamily::OneSidedLower => 1.0 - f_left,
        })
    }
}

/// Empirical validity check: draws `n_draws` uniforms, and for each `alpha`
/// reports the fraction of draws whose contention is at most `alpha`.
/// Validity means each rate stays below `alpha + 3*sqrt(alpha(1-alpha)/M)`.
pub fn validity_check(
    kind: RandomSetFamily,
    n_draws: usize,
    alphas: &[f64],
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if n_draws < 1000 {
        return Err(Error::domain(format!("validity check needs >= 1000 draws, got {n_draws}")));
    }
    for &a in alphas {
        if !(0.0 < a && a < 1.0) {
            return Err(Error::domain(format!("alpha={a} outside (0,1)")));
        }
    }
    let mut rng = seeding::rng(seed, &[0x7072_73]);
    let contentions: Vec<f64> = (0..n_draws)
        .map(|_| kind.contention(rng.gen::<f64>()))
        .collect::<Result<_>>()?;
    Ok(alphas
        .iter()
        .map(|&a| {
            let hits = contentions.iter().filter(|&&c| c <= a).count();
            (a, hits as f64 / n_draws as f64)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ks_one_sample;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn contention_values() {
        let d = RandomSetFamily::DefaultSymmetric;
        let o = RandomSetFamily::OneSidedLower;
        assert_abs_diff_eq!(d.contention(0.5).unwrap(), 1.0);
        assert_abs_diff_eq!(o.contention(0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(d.contention(0.975).unwrap(), 0.05, epsilon = 1e-12);
        assert!(d.contention(1.2).is_err());
        assert!(o.contention(-0.1).is_err());
    }

    #[test]
    fn point_plaus_continuous_values() {
        let d = RandomSetFamily::DefaultSymmetric;
        let o = RandomSetFamily::OneSidedLower;
        assert_abs_diff_eq!(o.point_plaus_continuous(0.95).unwrap(), 0.05, epsilon = 1e-12);
        assert_abs_diff_eq!(d.point_plaus_continuous(0.5).unwrap(), 1.0);
        assert_abs_diff_eq!(d.point_plaus_continuous(0.1).unwrap(), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn point_plaus_discrete_values() {
        let d = RandomSetFamily::DefaultSymmetric;
        // Interval [0.3, 0.6] straddles 1/2: both positive parts vanish.
        assert_abs_diff_eq!(d.point_plaus_discrete(0.3, 0.6).unwrap(), 1.0);
        assert_abs_diff_eq!(d.point_plaus_discrete(0.8, 0.9).unwrap(), 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(d.point_plaus_discrete(0.0, 0.2).unwrap(), 0.4, epsilon = 1e-12);
        assert!(d.point_plaus_discrete(0.7, 0.6).is_err());
        let o = RandomSetFamily::OneSidedLower;
        assert_abs_diff_eq!(o.point_plaus_discrete(0.8, 0.9).unwrap(), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn contention_of_uniform_is_uniform() {
        // Exact law: for both families, contention(U) ~ Unif(0,1).
        for kind in [RandomSetFamily::DefaultSymmetric, RandomSetFamily::OneSidedLower] {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let sample: Vec<f64> = (0..100_000)
                .map(|_| kind.contention(rng.gen::<f64>()).unwrap())
                .collect();
            let ks = ks_one_sample(&sample, |x| x.clamp(0.0, 1.0));
            assert!(ks < 0.01, "KS distance {ks} too large for {kind:?}");
        }
    }

    #[test]
    fn validity_rates_within_binomial_band() {
        let m = 100_000;
        for (kind, seed) in [
            (RandomSetFamily::DefaultSymmetric, 1u64),
            (RandomSetFamily::OneSidedLower, 1),
        ] {
            let rates = validity_check(kind, m, &[0.05, 0.1, 0.25, 0.5], seed).unwrap();
            for (a, rate) in rates {
                let band = 3.0 * (a * (1.0 - a) / m as f64).sqrt();
                assert!(rate <= a + band, "{kind:?}: rate {rate} above {a} + {band}");
                // Both families are exactly uniform, so the rate is also
                // close from below.
                assert!(rate >= a - band, "{kind:?}: rate {rate} below {a} - {band}");
            }
        }
    }

    #[test]
    fn validity_check_rejects_bad_inputs() {
        assert!(validity_check(RandomSetFamily::OneSidedLower, 10, &[0.1], 0).is_err());
        assert!(validity_check(RandomSetFamily::OneSidedLower, 5000, &[1.0], 0).is_err());
    }

    proptest! {
        #[test]
        fn contention_stays_in_unit_interval(u in 0.0f64..=1.0) {
            for kind in [RandomSetFamily::DefaultSymmetric, RandomSetFamily::OneSidedLower] {
                let c = kind.contention(u).unwrap();
                prop_assert!((0.0..=1.0).contains(&c));
            }
        }

        #[test]
        fn continuous_is_degenerate_discrete(f in 0.0f64..=1.0) {
            for kind in [RandomSetFamily::DefaultSymmetric, RandomSetFamily::OneSidedLower] {
                let a = kind.point_plaus_continuous(f).unwrap();
                let b = kind.point_plaus_discrete(f, f).unwrap();
                prop_assert!((a - b).abs() < 1e-15);
            }
        }

        #[test]
        fn one_sided_plaus_decreasing(f1 in 0.0f64..=1.0, f2 in 0.0f64..=1.0) {
            let (lo, hi) = if f1 < f2 { (f1, f2) } else { (f2, f1) };
            let o = RandomSetFamily::OneSidedLower;
            prop_assert!(
                o.point_plaus_continuous(lo).unwrap() >= o.point_plaus_continuous(hi).unwrap()
            );
        }
    }
}
