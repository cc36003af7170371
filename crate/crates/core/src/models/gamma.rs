//! Two-parameter gamma model: iid samples from Gamma(shape, scale), with
//! analytic MLE (Newton on the digamma equation), analytic profile
//! maximizers in both coordinates, and analytic score/Fisher information.

use crate::assoc::Model;
use crate::error::{Error, Result};
use crate::special::{inv_digamma, trigamma};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use statrs::function::gamma::{digamma, ln_gamma};

/// Shape guard: a fitted shape beyond this means the sample is numerically
/// degenerate (zero log-scale spread).
const MAX_SHAPE: f64 = 1e6;

/// iid Gamma(shape, scale) with `n` observations; parameter vector is
/// `[shape, scale]`, both positive.
#[derive(Debug, Clone, Copy)]
pub struct GammaModel {
    pub n: usize,
}

/// Sufficient statistics: `(sum of ln y, sum of y)`.
fn suff(y: &[f64]) -> Result<(f64, f64)> {
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for &v in y {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::domain(format!("gamma data must be positive, got {v}")));
        }
        s1 += v.ln();
        s2 += v;
    }
    Ok((s1, s2))
}

fn check_theta(theta: &[f64]) -> Result<(f64, f64)> {
    if theta.len() != 2 {
        return Err(Error::domain(format!("gamma parameter needs 2 coordinates, got {}", theta.len())));
    }
    let (a, b) = (theta[0], theta[1]);
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::domain(format!("gamma parameters must be positive, got ({a}, {b})")));
    }
    Ok((a, b))
}

/// Maximum-likelihood estimate `(shape, scale)` for positive data, n >= 2:
/// Newton iteration on `ln a - psi(a) = ln(mean y) - mean(ln y)` from the
/// standard closed-form start, then `scale = mean / shape`.
pub fn gamma_mle(y: &[f64]) -> Result<(f64, f64)> {
    if y.len() < 2 {
        return Err(Error::domain("gamma MLE needs at least two observations"));
    }
    let n = y.len() as f64;
    let (s1, s2) = suff(y)?;
    let mean = s2 / n;
    let s = mean.ln() - s1 / n;
    // s >= 0 with equality iff all observations are equal.
    if s < 1e-10 {
        return Err(Error::domain(
            "sample has (numerically) zero log spread; gamma shape MLE diverges",
        ));
    }
    let mut a = (3.0 - s + ((s - 3.0).powi(2) + 24.0 * s).sqrt()) / (12.0 * s);
    for _ in 0..100 {
        let h = a.ln() - digamma(a) - s;
        let dh = 1.0 / a - trigamma(a);
        let step = h / dh;
        a -= step;
        if a > MAX_SHAPE {
            return Err(Error::domain("gamma shape MLE exceeded 1e6; degenerate sample"));
        }
        if a <= 0.0 {
            a = 1e-8;
        }
        if step.abs() <= 1e-13 * a {
            break;
        }
    }
    Ok((a, mean / a))
}

impl Model for GammaModel {
    type Data = Vec<f64>;

    fn name(&self) -> &'static str {
        "gamma"
    }

    fn dim(&self) -> usize {
        2
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        vec![(1e-3, 1e3), (1e-3, 1e3)]
    }

    fn log_likelihood(&self, y: &Vec<f64>, theta: &[f64]) -> Result<f64> {
        let (a, b) = check_theta(theta)?;
        let (s1, s2) = suff(y)?;
        let n = y.len() as f64;
        Ok((a - 1.0) * s1 - s2 / b - n * (a * b.ln() + ln_gamma(a)))
    }

    fn simulate(&self, theta: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let (a, b) = check_theta(theta)?;
        let dist = rand_distr::Gamma::new(a, b)
            .map_err(|e| Error::domain(format!("gamma sampler: {e}")))?;
        Ok((0..self.n).map(|_| dist.sample(rng)).collect())
    }

    fn mle(&self, y: &Vec<f64>) -> Result<Vec<f64>> {
        let (a, b) = gamma_mle(y)?;
        Ok(vec![a, b])
    }

    /// Both profiles are closed-form: for fixed shape the scale maximizer is
    /// `mean/shape`; for fixed scale the shape solves
    /// `psi(a) = mean(ln y) - ln(scale)`.
    fn profile_mle(&self, y: &Vec<f64>, interest: usize, psi: f64) -> Result<Vec<f64>> {
        let n = y.len() as f64;
        let (s1, s2) = suff(y)?;
        match interest {
            0 => {
                if psi <= 0.0 {
                    return Err(Error::domain(format!("shape must be positive, got {psi}")));
                }
                Ok(vec![psi, s2 / n / psi])
            }
            1 => {
                if psi <= 0.0 {
                    return Err(Error::domain(format!("scale must be positive, got {psi}")));
                }
                let a = inv_digamma(s1 / n - psi.ln());
                Ok(vec![a, psi])
            }
            _ => Err(Error::domain(format!("gamma has coordinates 0 and 1, got {interest}"))),
        }
    }

    fn score(&self, y: &Vec<f64>, theta: &[f64]) -> Result<Vec<f64>> {
        let (a, b) = check_theta(theta)?;
        let (s1, s2) = suff(y)?;
        let n = y.len() as f64;
        Ok(vec![s1 - n * (b.ln() + digamma(a)), s2 / (b * b) - n * a / b])
    }

    /// Expected information `n * [[psi'(a), 1/b], [1/b, a/b^2]]`.
    fn fisher_information(&self, _y: &Vec<f64>, theta: &[f64]) -> Result<Vec<f64>> {
        let (a, b) = check_theta(theta)?;
        let n = self.n as f64;
        Ok(vec![n * trigamma(a), n / b, n / b, n * a / (b * b)])
    }
}
