//! Asymmetric triangular model on [0,1]: density `2y/theta` on `[0, theta]`
//! and `2(1-y)/(1-theta)` above, with mode parameter `theta` in [0,1].
//!
//! The log-likelihood is piecewise in `theta` and convex between adjacent
//! order statistics, so its maximum over [0,1] is attained at a data point;
//! the MLE scans the observations.

use crate::assoc::Model;
use crate::error::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// iid asymmetric triangular with `n` observations; scalar parameter
/// `theta` in [0,1] (the mode).
#[derive(Debug, Clone, Copy)]
pub struct TriangularModel {
    pub n: usize,
}

fn check_data(y: &[f64]) -> Result<()> {
    for &v in y {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::domain(format!("triangular data must lie in [0,1], got {v}")));
        }
    }
    Ok(())
}

fn check_theta(theta: &[f64]) -> Result<f64> {
    if theta.len() != 1 {
        return Err(Error::domain(format!(
            "triangular parameter is scalar, got {} coordinates",
            theta.len()
        )));
    }
    let t = theta[0];
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("triangular mode must lie in [0,1], got {t}")));
    }
    Ok(t)
}

/// Density at `y` for mode `theta`; zero off [0,1].
fn density(y: f64, theta: f64) -> f64 {
    if !(0.0..=1.0).contains(&y) {
        return 0.0;
    }
    if theta == 0.0 {
        2.0 * (1.0 - y)
    } else if theta == 1.0 {
        2.0 * y
    } else if y <= theta {
        2.0 * y / theta
    } else {
        2.0 * (1.0 - y) / (1.0 - theta)
    }
}

/// MLE for the mode: the log-likelihood restricted to the span between
/// adjacent order statistics is convex, so the maximizer is one of the data
/// points; ties go to the smallest.
pub fn tri_mle(y: &[f64]) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::domain("triangular MLE needs at least one observation"));
    }
    check_data(y)?;
    let model = TriangularModel { n: y.len() };
    let data = y.to_vec();
    let mut candidates = y.to_vec();
    candidates.sort_by(|a, b| a.total_cmp(b));
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for &c in &candidates {
        if c == best.0 {
            continue;
        }
        let ll = model.log_likelihood(&data, &[c])?;
        // Strictly-greater keeps the smallest argmax on exact ties.
        if ll > best.1 {
            best = (c, ll);
        }
    }
    Ok(best.0)
}

impl Model for TriangularModel {
    type Data = Vec<f64>;

    fn name(&self) -> &'static str {
        "triangular"
    }

    fn dim(&self) -> usize {
        1
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        vec![(0.0, 1.0)]
    }

    fn log_likelihood(&self, y: &Vec<f64>, theta: &[f64]) -> Result<f64> {
        let t = check_theta(theta)?;
        check_data(y)?;
        let mut ll = 0.0;
        for &v in y {
            let p = density(v, t);
            if p <= 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            ll += p.ln();
        }
        Ok(ll)
    }

    /// Inverse-CDF draw: `u <= theta` maps to `sqrt(u theta)`, otherwise to
    /// `1 - sqrt((1-u)(1-theta))`.
    fn simulate(&self, theta: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let t = check_theta(theta)?;
        Ok((0..self.n)
            .map(|_| {
                let u: f64 = rng.gen();
                if u <= t {
                    (u * t).sqrt()
                } else {
                    1.0 - ((1.0 - u) * (1.0 - t)).sqrt()
                }
            })
            .collect())
    }

    fn mle(&self, y: &Vec<f64>) -> Result<Vec<f64>> {
        Ok(vec![tri_mle(y)?])
    }
}
