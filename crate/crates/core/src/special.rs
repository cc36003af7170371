//! Small special-function helpers on top of `statrs`.

use crate::error::{Error, Result};
use statrs::function::gamma::{digamma, gamma_lr, ln_gamma};

/// Chi-square CDF with `dof` degrees of freedom, via the regularized lower
/// incomplete gamma function.
pub fn chi_sq_cdf(t: f64, dof: usize) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::domain(format!("chi-square CDF at negative t={t}")));
    }
    if dof == 0 {
        return Err(Error::domain("chi-square needs dof >= 1"));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(gamma_lr(dof as f64 / 2.0, t / 2.0))
}

/// Chi-square quantile by monotone bisection on [`chi_sq_cdf`].
pub fn chi_sq_quantile(p: f64, dof: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::domain(format!("quantile level p={p} outside [0,1)")));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, dof as f64 + 1.0);
    while chi_sq_cdf(hi, dof)? < p {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::numeric("chi-square quantile bracket overflow"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi_sq_cdf(mid, dof)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * (1.0 + hi) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Natural log of the binomial coefficient C(n, k).
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Trigamma function psi'(x) for x > 0: recurrence to shift the argument
/// above 10, then the standard asymptotic series (truncation error below
/// 1e-12 there).
pub fn trigamma(x: f64) -> f64 {
    assert!(x > 0.0, "trigamma defined for x > 0 here");
    let mut value = 0.0;
    let mut z = x;
    while z < 10.0 {
        value += 1.0 / (z * z);
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    // psi'(z) ~ 1/z + 1/(2z^2) + sum B_{2k} / z^{2k+1}
    value
        + inv * (1.0
            + inv * (0.5
                + inv * (1.0 / 6.0
                    + inv2 * (-1.0 / 30.0 + inv2 * (1.0 / 42.0 + inv2 * (-1.0 / 30.0))))))
}

/// Inverse of the digamma function: solves psi(a) = x for a > 0.
pub fn inv_digamma(x: f64) -> f64 {
    // Standard starting guess, then Newton with trigamma.
    let mut a = if x >= -2.22 {
        x.exp() + 0.5
    } else {
        -1.0 / (x + 0.577_215_664_901_532_9)
    };
    for _ in 0..40 {
        let step = (digamma(a) - x) / trigamma(a);
        a -= step;
        if a <= 0.0 {
            a = 1e-12;
        }
        if step.abs() < 1e-13 * (1.0 + a.abs()) {
            break;
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use statrs::function::gamma::digamma;

    #[test]
    fn chi_sq_two_dof_is_exponential() {
        // F(x) = 1 - exp(-x/2) for dof = 2.
        for &x in &[0.1, 1.0, 2.0, 5.991, 20.0] {
            let exact = 1.0 - (-x / 2.0f64).exp();
            assert_abs_diff_eq!(chi_sq_cdf(x, 2).unwrap(), exact, epsilon = 1e-12);
        }
    }

    #[test]
    fn chi_sq_quantile_round_trips() {
        for dof in [1usize, 2, 5, 18] {
            for &p in &[0.05, 0.5, 0.9, 0.99] {
                let q = chi_sq_quantile(p, dof).unwrap();
                assert_abs_diff_eq!(chi_sq_cdf(q, dof).unwrap(), p, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn trigamma_matches_central_difference_of_digamma() {
        for &x in &[0.2f64, 0.7, 1.0, 3.5, 12.0, 100.0] {
            let h = 1e-5 * x.max(1.0);
            let fd = (digamma(x + h) - digamma(x - h)) / (2.0 * h);
            assert_abs_diff_eq!(trigamma(x), fd, epsilon = 1e-6 * trigamma(x).abs());
        }
    }

    #[test]
    fn trigamma_known_value() {
        // psi'(1) = pi^2 / 6
        assert_abs_diff_eq!(
            trigamma(1.0),
            std::f64::consts::PI.powi(2) / 6.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn inv_digamma_round_trips() {
        for &a in &[0.1, 0.9, 2.0, 7.0, 55.0] {
            let x = digamma(a);
            assert_abs_diff_eq!(inv_digamma(x), a, epsilon = 1e-8 * a);
        }
    }

    #[test]
    fn ln_choose_small_cases() {
        assert_abs_diff_eq!(ln_choose(5, 2).exp(), 10.0, epsilon = 1e-10);
        assert_abs_diff_eq!(ln_choose(43, 0).exp(), 1.0, epsilon = 1e-12);
        assert!(ln_choose(3, 5).is_infinite());
    }
}
