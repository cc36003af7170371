//! CDF of a positive linear combination of independent chi-squares.
//!
//! Imhof's characteristic-function inversion gives
//!
//! ```text
//! F(x) = 1/2 - (1/pi) * ∫_0^∞ sin(theta(u)) / (u * rho(u)) du
//! theta(u) = 1/2 * Σ r_l * atan(w_l u) - x u / 2
//! rho(u)   = Π (1 + w_l^2 u^2)^{r_l / 4}
//! ```
//!
//! The integrand decays like `u^{-(k+1)}` with `k = Σ r_l / 2`, which for
//! small total degrees of freedom is far too slow for plain truncation at a
//! bound-derived cutoff. Instead the integral is split at the point where
//! the phase becomes strictly decreasing; from there the integrand is summed
//! over half-periods (an alternating series) and accelerated by iterated
//! averaging of the partial sums, with the envelope bound used to stop early
//! whenever the remaining tail is already negligible.
//!
//! For `x` very close to zero the inversion is ill-conditioned, so the CDF
//! falls back to plain Monte Carlo and flags the result.

use crate::error::{Error, Result};
use crate::seeding;
use crate::stats::ecdf_sorted;
use rand_distr::{ChiSquared, Distribution};
use std::f64::consts::PI;

/// Default absolute tolerance for [`imhof_cdf`].
pub const DEFAULT_TOL: f64 = 1e-8;

/// Relative threshold below which [`imhof_cdf`] switches to Monte Carlo:
/// applies for `x < NEAR_ZERO_RELATIVE * mean`.
pub const NEAR_ZERO_RELATIVE: f64 = 1e-8;

/// A linear combination `Σ w_l V_l` of independent `V_l ~ ChiSq(r_l)` with
/// positive weights.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChiSqMix {
    weights: Vec<f64>,
    dofs: Vec<usize>,
}

impl ChiSqMix {
    /// Builds a mixture, validating positivity of weights and degrees of
    /// freedom.
    pub fn new(weights: Vec<f64>, dofs: Vec<usize>) -> Result<Self> {
        if weights.is_empty() || weights.len() != dofs.len() {
            return Err(Error::domain(format!(
                "mixture needs matching non-empty weights/dofs, got {} and {}",
                weights.len(),
                dofs.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w <= 0.0) {
            return Err(Error::domain(format!("non-positive mixture weight {w}")));
        }
        if dofs.contains(&0) {
            return Err(Error::domain("mixture degrees of freedom must be >= 1"));
        }
        Ok(Self { weights, dofs })
    }

    /// Single-term mixture `w * ChiSq(r)`.
    pub fn single(weight: f64, dof: usize) -> Result<Self> {
        Self::new(vec![weight], vec![dof])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dofs(&self) -> &[usize] {
        &self.dofs
    }

    /// `E[Σ w_l V_l] = Σ w_l r_l`.
    pub fn mean(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.dofs)
            .map(|(w, &r)| w * r as f64)
            .sum()
    }

    /// `Var[Σ w_l V_l] = Σ 2 w_l^2 r_l`.
    pub fn variance(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.dofs)
            .map(|(w, &r)| 2.0 * w * w * r as f64)
            .sum()
    }
}

/// Result of [`imhof_cdf`]: the CDF value plus a flag telling whether the
/// near-zero Monte Carlo fallback was used instead of quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixCdf {
    pub value: f64,
    pub mc_fallback: bool,
}

struct Integrand<'a> {
    w: &'a [f64],
    r: &'a [usize],
    x: f64,
}

impl Integrand<'_> {
    fn theta(&self, u: f64) -> f64 {
        let s: f64 = self
            .w
            .iter()
            .zip(self.r)
            .map(|(w, &r)| r as f64 * (w * u).atan())
            .sum();
        0.5 * s - 0.5 * self.x * u
    }

    fn dtheta(&self, u: f64) -> f64 {
        let s: f64 = self
            .w
            .iter()
            .zip(self.r)
            .map(|(w, &r)| r as f64 * w / (1.0 + w * w * u * u))
            .sum();
        0.5 * (s - self.x)
    }

    fn ln_rho(&self, u: f64) -> f64 {
        self.w
            .iter()
            .zip(self.r)
            .map(|(w, &r)| r as f64 / 4.0 * (w * w * u * u).ln_1p())
            .sum()
    }

    fn g(&self, u: f64) -> f64 {
        if u == 0.0 {
            // Limit (Σ w r - x) / 2 of sin(theta)/(u rho) as u -> 0.
            let swr: f64 = self
                .w
                .iter()
                .zip(self.r)
                .map(|(w, &r)| w * r as f64)
                .sum();
            return 0.5 * (swr - self.x);
        }
        self.theta(u).sin() * (-self.ln_rho(u)).exp() / u
    }

    /// Natural log of the envelope tail bound `∫_U^∞ 1/(c u^{k+1}) du =
    /// 1/(c k U^k)` with `k = Σ r/2`, `c = Π w^{r/2}`; ln-space to dodge
    /// overflow for large degrees of freedom.
    fn ln_tail_bound(&self, u: f64) -> f64 {
        let k: f64 = self.r.iter().map(|&r| r as f64).sum::<f64>() / 2.0;
        let ln_c: f64 = self
            .w
            .iter()
            .zip(self.r)
            .map(|(w, &r)| r as f64 / 2.0 * w.ln())
            .sum();
        -ln_c - k.ln() - k * u.ln()
    }
}

// 15-point Kronrod extension of 7-point Gauss, standard abscissae/weights.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One Gauss-Kronrod 15(7) panel: returns `(K15 value, |K15 - G7|)`.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k15 = WGK[7] * fc;
    let mut g7 = WG[3] * fc;
    for i in 0..7 {
        let pair = f(c - h * XGK[i]) + f(c + h * XGK[i]);
        k15 += WGK[i] * pair;
        if i % 2 == 1 {
            g7 += WG[i / 2] * pair;
        }
    }
    (h * k15, (h * (k15 - g7)).abs())
}

/// Adaptive bisection of GK15 panels over `[a, b]` until each accepted
/// panel's error estimate is below its width-proportional share of
/// `tol_abs`. Returns `(value, accumulated error estimate)`.
fn adaptive_gk<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol_abs: f64, max_depth: u32) -> (f64, f64) {
    if b <= a {
        return (0.0, 0.0);
    }
    let total_width = b - a;
    let mut stack = vec![(a, b, 0u32)];
    let mut value = 0.0;
    let mut err = 0.0;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, e) = gk15(f, lo, hi);
        let width = hi - lo;
        if e <= tol_abs * width / total_width
            || depth >= max_depth
            || width <= 1e-15 * (lo.abs() + hi.abs() + 1.0)
        {
            value += v;
            err += e;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    (value, err)
}

/// Locates the solution of `theta(u) = target` to the right of `lo`, where
/// the phase is strictly decreasing with `-x/2 < theta' < -x/4`.
fn phase_zero(f: &Integrand<'_>, target: f64, lo: f64) -> Result<f64> {
    let th_lo = f.theta(lo);
    debug_assert!(th_lo >= target);
    // |theta'| > x/4 bounds the distance to the crossing.
    let reach = (th_lo - target) * 4.0 / f.x;
    let mut hi = lo + 1.25 * reach + 1e-12 * (1.0 + lo);
    let mut guard = 0;
    while f.theta(hi) > target {
        hi += 1.25 * reach.max(PI * 4.0 / f.x);
        guard += 1;
        if guard > 200 {
            return Err(Error::numeric("phase crossing bracket failed to close"));
        }
    }
    let (mut a, mut b) = (lo, hi);
    let mut u = 0.5 * (a + b);
    for _ in 0..100 {
        let th = f.theta(u);
        if (th - target).abs() < 1e-11 {
            return Ok(u);
        }
        if th > target {
            a = u;
        } else {
            b = u;
        }
        // Newton step, falling back to bisection when it leaves the bracket.
        let newton = u - (th - target) / f.dtheta(u);
        u = if newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        if b - a < 1e-13 * (1.0 + b) {
            break;
        }
    }
    Ok(u)
}

/// Integrates the oscillatory tail from `u_start` (inside the monotone-phase
/// region) to infinity: half-period lobes form an alternating series whose
/// partial sums are accelerated by iterated averaging.
fn oscillatory_tail(f: &Integrand<'_>, u_start: f64, tol: f64) -> Result<f64> {
    // Envelope shortcut: nothing left beyond u_start.
    if f.ln_tail_bound(u_start) < (0.25 * tol).ln() {
        return Ok(0.0);
    }

    let th_start = f.theta(u_start);
    let mut m = (th_start / PI).floor();
    let mut z = if th_start == m * PI {
        u_start
    } else {
        phase_zero(f, m * PI, u_start)?
    };
    // Partial lobe between u_start and the first phase zero.
    let (head_piece, _) = adaptive_gk(&|u| f.g(u), u_start, z, tol / 16.0, 44);

    const MAX_COLS: usize = 14;
    const MAX_LOBES: usize = 4000;
    let mut partial = head_piece;
    let mut prev_row: Vec<f64> = Vec::new();
    let mut prev_estimate = f64::NAN;
    let mut estimate = head_piece;
    let mut stable = 0;
    for j in 1..=MAX_LOBES {
        m -= 1.0;
        let z_next = phase_zero(f, m * PI, z)?;
        let lobe_tol = tol / (32.0 * (j * j) as f64);
        let (a_j, _) = adaptive_gk(&|u| f.g(u), z, z_next, lobe_tol, 40);
        z = z_next;
        partial += a_j;

        let mut row = Vec::with_capacity(prev_row.len().min(MAX_COLS - 1) + 1);
        row.push(partial);
        for k in 0..prev_row.len().min(MAX_COLS - 1) {
            let v = 0.5 * (prev_row[k] + row[k]);
            row.push(v);
        }
        prev_estimate = estimate;
        estimate = *row.last().unwrap();
        prev_row = row;

        // Alternating-series remainder is below the next lobe's magnitude;
        // the averaged column stabilizing is the accelerated criterion.
        if a_j.abs() < tol / 16.0 {
            return Ok(estimate);
        }
        if j >= 6 && (estimate - prev_estimate).abs() < tol / 8.0 {
            stable += 1;
            if stable >= 2 {
                return Ok(estimate);
            }
        } else {
            stable = 0;
        }
        if f.ln_tail_bound(z).exp() < 0.25 * tol {
            return Ok(estimate);
        }
    }
    Err(Error::numeric(format!(
        "chi-square mixture quadrature: tail not converged to {tol:.1e} after {MAX_LOBES} \
         half-periods (last change {:.1e})",
        (estimate - prev_estimate).abs()
    )))
}

/// CDF of the mixture at `x` by Imhof's inversion integral, to absolute
/// tolerance `tol` (clamped to [0,1]). For `x` below `1e-8` times the mean
/// the quadrature is ill-conditioned and the value is instead estimated by
/// Monte Carlo with a deterministic mix-derived seed, with the flag set.
pub fn imhof_cdf(mix: &ChiSqMix, x: f64, tol: f64) -> Result<MixCdf> {
    if x < 0.0 {
        return Err(Error::domain(format!("mixture CDF at negative x={x}")));
    }
    if !(1e-10..=1e-4).contains(&tol) {
        return Err(Error::domain(format!("tolerance {tol} outside [1e-10, 1e-4]")));
    }
    if x == 0.0 {
        return Ok(MixCdf { value: 0.0, mc_fallback: false });
    }
    if x < NEAR_ZERO_RELATIVE * mix.mean() {
        let seed = seeding::derive(
            0x7166_6f72_6d00,
            &[seeding::theta_tag(mix.weights()), mix.dofs().iter().sum::<usize>() as u64],
        );
        let value = mc_cdf(mix, x, 100_000, seed)?;
        return Ok(MixCdf { value, mc_fallback: true });
    }

    let f = Integrand { w: mix.weights(), r: mix.dofs(), x };
    // Beyond u_mono the phase derivative is below -x/4: strictly monotone,
    // so the tail oscillates with bounded half-periods.
    let srw: f64 = mix
        .weights()
        .iter()
        .zip(mix.dofs())
        .map(|(w, &r)| r as f64 / w)
        .sum();
    let u_mono = (2.0 * srw / x).sqrt();
    let (head, _) = adaptive_gk(&|u| f.g(u), 0.0, u_mono, tol / 4.0, 48);
    let tail = oscillatory_tail(&f, u_mono, tol)?;
    let value = 0.5 - (head + tail) / PI;
    Ok(MixCdf { value: value.clamp(0.0, 1.0), mc_fallback: false })
}

/// `M` Monte Carlo draws of the mixture, sorted ascending (deterministic in
/// the seed); the building block for [`mc_cdf`] and for callers that query
/// one sample at many thresholds.
pub fn mc_sample(mix: &ChiSqMix, m: usize, seed: u64) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::domain("Monte Carlo sample size must be positive"));
    }
    let mut rng = seeding::rng(seed, &[0x7166_6f72_6d01]);
    let dists: Vec<ChiSquared<f64>> = mix
        .dofs()
        .iter()
        .map(|&r| {
            ChiSquared::new(r as f64)
                .map_err(|e| Error::domain(format!("chi-square dof {r}: {e}")))
        })
        .collect::<Result<_>>()?;
    let mut draws: Vec<f64> = (0..m)
        .map(|_| {
            mix.weights()
                .iter()
                .zip(&dists)
                .map(|(w, d)| w * d.sample(&mut rng))
                .sum()
        })
        .collect();
    draws.sort_by(|a, b| a.total_cmp(b));
    Ok(draws)
}

/// Empirical CDF of the mixture at `x` from `m >= 10^4` fresh draws.
pub fn mc_cdf(mix: &ChiSqMix, x: f64, m: usize, seed: u64) -> Result<f64> {
    if m < 10_000 {
        return Err(Error::domain(format!("Monte Carlo CDF needs m >= 10^4, got {m}")));
    }
    let draws = mc_sample(mix, m, seed)?;
    Ok(ecdf_sorted(&draws, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::chi_sq_cdf;
    use approx::assert_abs_diff_eq;

    fn imhof(mix: &ChiSqMix, x: f64) -> f64 {
        imhof_cdf(mix, x, DEFAULT_TOL).unwrap().value
    }

    #[test]
    fn gk15_panel_is_exact_on_smooth_integrand() {
        let (v, e) = gk15(&|x: f64| x.exp(), 0.0, 1.0);
        assert_abs_diff_eq!(v, std::f64::consts::E - 1.0, epsilon = 1e-12);
        assert!(e < 1e-10);
    }

    #[test]
    fn mix_constructor_validates() {
        assert!(ChiSqMix::new(vec![], vec![]).is_err());
        assert!(ChiSqMix::new(vec![1.0, -2.0], vec![1, 1]).is_err());
        assert!(ChiSqMix::new(vec![1.0], vec![0]).is_err());
        assert!(ChiSqMix::new(vec![1.0], vec![1, 2]).is_err());
        let mix = ChiSqMix::new(vec![2.0, 1.0, 0.5], vec![1, 2, 3]).unwrap();
        assert_abs_diff_eq!(mix.mean(), 5.5);
        assert_abs_diff_eq!(mix.variance(), 2.0 * (4.0 + 2.0 + 0.75));
    }

    #[test]
    fn single_term_matches_incomplete_gamma() {
        for &dof in &[1usize, 2, 5] {
            let mix = ChiSqMix::single(1.0, dof).unwrap();
            for &x in &[1e-6, 1e-3, 0.1, 0.4549, 1.0, 2.0 * std::f64::consts::LN_2, 5.0, 10.0, 30.0]
            {
                let exact = chi_sq_cdf(x, dof).unwrap();
                let got = imhof(&mix, x);
                assert!(
                    (got - exact).abs() <= 1e-7,
                    "dof={dof} x={x}: imhof {got} vs gamma {exact}"
                );
            }
        }
    }

    #[test]
    fn chi_square_two_median() {
        let mix = ChiSqMix::single(1.0, 2).unwrap();
        assert_abs_diff_eq!(imhof(&mix, 2.0 * std::f64::consts::LN_2), 0.5, epsilon = 1e-7);
    }

    #[test]
    fn zero_and_negative_arguments() {
        let mix = ChiSqMix::single(1.0, 3).unwrap();
        assert_eq!(imhof(&mix, 0.0), 0.0);
        assert!(imhof_cdf(&mix, -1.0, DEFAULT_TOL).is_err());
        assert!(imhof_cdf(&mix, 1.0, 1e-2).is_err());
    }

    #[test]
    fn near_zero_switches_to_monte_carlo() {
        let mix = ChiSqMix::single(1.0, 2).unwrap();
        let out = imhof_cdf(&mix, 0.5e-8 * mix.mean(), DEFAULT_TOL).unwrap();
        assert!(out.mc_fallback);
        assert!(out.value < 1e-3);
        // Deterministic: same call gives the same fallback value.
        let again = imhof_cdf(&mix, 0.5e-8 * mix.mean(), DEFAULT_TOL).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn three_term_mix_matches_monte_carlo_at_mean() {
        let mix = ChiSqMix::new(vec![2.0, 1.0, 0.5], vec![1, 2, 3]).unwrap();
        let x = mix.mean();
        let sample = mc_sample(&mix, 200_000, 99).unwrap();
        let mc = ecdf_sorted(&sample, x);
        let se = (mc * (1.0 - mc) / 200_000.0).sqrt();
        let got = imhof(&mix, x);
        assert!(
            (got - mc).abs() <= 3.0 * se + 1e-6,
            "imhof {got} vs mc {mc} (3se = {:.2e})",
            3.0 * se
        );
    }

    #[test]
    fn monotone_in_x() {
        let mix = ChiSqMix::new(vec![2.0, 1.0, 0.5], vec![1, 2, 3]).unwrap();
        let hi = mix.mean() + 6.0 * mix.variance().sqrt();
        let mut prev = 0.0;
        for i in 0..100 {
            let x = hi * (i + 1) as f64 / 100.0;
            let v = imhof(&mix, x);
            // Allow wiggle at the quadrature tolerance.
            assert!(v >= prev - 5.0 * DEFAULT_TOL, "decrease at x={x}: {v} < {prev}");
            prev = v;
        }
    }

    #[test]
    fn scale_equivariance() {
        let mix = ChiSqMix::new(vec![2.0, 1.0, 0.5], vec![1, 2, 3]).unwrap();
        for &c in &[0.1, 10.0] {
            let scaled = ChiSqMix::new(
                mix.weights().iter().map(|w| c * w).collect(),
                mix.dofs().to_vec(),
            )
            .unwrap();
            for &x in &[1.0, 5.5, 12.0] {
                assert_abs_diff_eq!(
                    imhof(&scaled, c * x),
                    imhof(&mix, x),
                    epsilon = 2.0 * DEFAULT_TOL
                );
            }
        }
    }

    #[test]
    fn far_tail_reaches_one() {
        let mix = ChiSqMix::new(vec![2.0, 1.0, 0.5], vec![1, 2, 3]).unwrap();
        let x = mix.mean() + 10.0 * mix.variance().sqrt();
        assert!(imhof(&mix, x) >= 0.999);
    }

    #[test]
    fn high_dof_single_term() {
        // The mixed-model application uses large degrees of freedom.
        let mix = ChiSqMix::single(1.0, 18).unwrap();
        for &x in &[6.0, 17.338, 28.869, 40.0] {
            let exact = chi_sq_cdf(x, 18).unwrap();
            assert_abs_diff_eq!(imhof(&mix, x), exact, epsilon = 1e-7);
        }
    }

    #[test]
    fn mc_cdf_basics() {
        let mix = ChiSqMix::single(1.0, 2).unwrap();
        assert_eq!(mc_cdf(&mix, 0.0, 10_000, 5).unwrap(), 0.0);
        assert!(mc_cdf(&mix, 1.0, 500, 5).is_err());
        let m = 1_000_000;
        let v = mc_cdf(&mix, 2.0 * std::f64::consts::LN_2, m, 5).unwrap();
        let se = (0.25f64 / m as f64).sqrt();
        assert!((v - 0.5).abs() <= 3.0 * se, "median estimate {v}");
        // Determinism across calls with the same seed.
        assert_eq!(v, mc_cdf(&mix, 2.0 * std::f64::consts::LN_2, m, 5).unwrap());
    }
}
