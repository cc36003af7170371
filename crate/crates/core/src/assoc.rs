//! Generalized associations: the statistic `T_{y,theta}` linking data and a
//! candidate parameter, plus the machinery to sample its distribution under
//! the model at any parameter.
//!
//! A [`Model`] supplies the sampling model (log-likelihood, simulator, MLE);
//! an [`Association`] wraps it with a statistic kind — deviance, profile
//! deviance for an interest coordinate, the score quadratic form, or a
//! custom closure — and records how the statistic is oriented (whether
//! large values indicate poor fit) and whether its distribution is discrete.

use crate::error::{Error, Result};
use crate::optim;
use crate::seeding;
use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::sync::Arc;

/// Whether large statistic values indicate poor model fit (the case for all
/// built-in kinds) or small ones do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Orientation {
    LargePoorFit,
    SmallPoorFit,
}

/// Whether the statistic's sampling distribution has atoms; decides which
/// point-plausibility transform applies downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Support {
    Continuous,
    Discrete,
}

/// A parametric sampling model with a box-shaped natural domain.
///
/// `domain` returns per-coordinate open-interval bounds treated as a search
/// box; `log_likelihood` must be finite on the interior for any simulated
/// dataset. `score` and `fisher_information` have central finite-difference
/// defaults (relative step 1e-5) for models without analytic derivatives;
/// the information fallback is the negative Hessian of the log-likelihood
/// at the given data.
pub trait Model: Send + Sync {
    type Data: Clone + Send + Sync;

    fn name(&self) -> &'static str;
    fn dim(&self) -> usize;
    fn domain(&self) -> Vec<(f64, f64)>;
    fn log_likelihood(&self, y: &Self::Data, theta: &[f64]) -> Result<f64>;
    fn simulate(&self, theta: &[f64], rng: &mut ChaCha8Rng) -> Result<Self::Data>;
    fn mle(&self, y: &Self::Data) -> Result<Vec<f64>>;

    /// Statistic support; continuous unless overridden.
    fn support(&self) -> Support {
        Support::Continuous
    }

    /// Maximizer of the log-likelihood over the non-interest coordinates
    /// with coordinate `interest` pinned at `psi`. The default runs cyclic
    /// coordinate descent inside the domain box from the global MLE.
    fn profile_mle(&self, y: &Self::Data, interest: usize, psi: f64) -> Result<Vec<f64>> {
        let d = self.dim();
        if interest >= d {
            return Err(Error::domain(format!(
                "interest coordinate {interest} out of range for {d}-dimensional model"
            )));
        }
        let domain = self.domain();
        let mut start = self.mle(y)?;
        start[interest] = psi;
        if d == 1 {
            return Ok(start);
        }
        let mut lo: Vec<f64> = domain.iter().map(|b| b.0).collect();
        let mut hi: Vec<f64> = domain.iter().map(|b| b.1).collect();
        lo[interest] = psi;
        hi[interest] = psi;
        let mut objective = |theta: &[f64]| -> f64 {
            self.log_likelihood(y, theta).map(|v| -v).unwrap_or(f64::INFINITY)
        };
        let (argmin, _) = optim::coordinate_descent(&mut objective, &start, &lo, &hi, 1e-8, 60);
        Ok(argmin)
    }

    /// Score vector (gradient of the log-likelihood in theta).
    fn score(&self, y: &Self::Data, theta: &[f64]) -> Result<Vec<f64>> {
        fd_gradient(|t| self.log_likelihood(y, t), theta)
    }

    /// Fisher information at `theta` (row-major d x d). The default is the
    /// observed information: negative finite-difference Hessian of the
    /// log-likelihood at `y`.
    fn fisher_information(&self, y: &Self::Data, theta: &[f64]) -> Result<Vec<f64>> {
        let h = fd_hessian(|t| self.log_likelihood(y, t), theta)?;
        Ok(h.into_iter().map(|v| -v).collect())
    }
}

fn fd_step(t: f64) -> f64 {
    1e-5 * t.abs().max(1.0)
}

/// Central-difference gradient with relative step 1e-5.
pub fn fd_gradient<F: Fn(&[f64]) -> Result<f64>>(f: F, theta: &[f64]) -> Result<Vec<f64>> {
    let mut g = Vec::with_capacity(theta.len());
    let mut t = theta.to_vec();
    for i in 0..theta.len() {
        let h = fd_step(theta[i]);
        t[i] = theta[i] + h;
        let up = f(&t)?;
        t[i] = theta[i] - h;
        let down = f(&t)?;
        t[i] = theta[i];
        g.push((up - down) / (2.0 * h));
    }
    Ok(g)
}

/// Central-difference Hessian (row-major) with relative step 1e-5.
pub fn fd_hessian<F: Fn(&[f64]) -> Result<f64>>(f: F, theta: &[f64]) -> Result<Vec<f64>> {
    let d = theta.len();
    let f0 = f(theta)?;
    let mut hess = vec![0.0; d * d];
    let mut t = theta.to_vec();
    for i in 0..d {
        let hi = fd_step(theta[i]);
        for j in i..d {
            let hj = fd_step(theta[j]);
            let v = if i == j {
                t[i] = theta[i] + hi;
                let up = f(&t)?;
                t[i] = theta[i] - hi;
                let down = f(&t)?;
                t[i] = theta[i];
                (up - 2.0 * f0 + down) / (hi * hi)
            } else {
                let mut eval = |si: f64, sj: f64| -> Result<f64> {
                    t[i] = theta[i] + si * hi;
                    t[j] = theta[j] + sj * hj;
                    let v = f(&t);
                    t[i] = theta[i];
                    t[j] = theta[j];
                    v
                };
                (eval(1.0, 1.0)? - eval(1.0, -1.0)? - eval(-1.0, 1.0)? + eval(-1.0, -1.0)?)
                    / (4.0 * hi * hj)
            };
            hess[i * d + j] = v;
            hess[j * d + i] = v;
        }
    }
    Ok(hess)
}

/// Deviance `-2 [logL(y, theta) - logL(y, mle(y))]`, clamped at zero against
/// optimizer roundoff.
pub fn deviance<M: Model>(model: &M, y: &M::Data, theta: &[f64]) -> Result<f64> {
    let theta_hat = model.mle(y)?;
    let max_logl = model.log_likelihood(y, &theta_hat)?;
    deviance_with(model, y, max_logl, theta)
}

/// Deviance with a precomputed `logL(y, mle(y))`, for callers evaluating
/// many parameter points against one dataset.
pub fn deviance_with<M: Model>(model: &M, y: &M::Data, max_logl: f64, theta: &[f64]) -> Result<f64> {
    let t = -2.0 * (model.log_likelihood(y, theta)? - max_logl);
    if t < -1e-6 {
        return Err(Error::numeric(format!(
            "log-likelihood at theta exceeds the reported maximum by {:.2e}; MLE unconverged",
            -t / 2.0
        )));
    }
    Ok(t.max(0.0))
}

/// Profile deviance for interest coordinate value `psi`:
/// `-2 [sup_lambda logL(y, (psi, lambda)) - logL(y, mle(y))]`.
pub fn profile_deviance<M: Model>(model: &M, y: &M::Data, interest: usize, psi: f64) -> Result<f64> {
    let theta_hat = model.mle(y)?;
    let max_logl = model.log_likelihood(y, &theta_hat)?;
    profile_deviance_with(model, y, max_logl, interest, psi)
}

/// Profile deviance with a precomputed global maximum.
pub fn profile_deviance_with<M: Model>(
    model: &M,
    y: &M::Data,
    max_logl: f64,
    interest: usize,
    psi: f64,
) -> Result<f64> {
    let constrained = model.profile_mle(y, interest, psi)?;
    let t = -2.0 * (model.log_likelihood(y, &constrained)? - max_logl);
    if t < -1e-6 {
        return Err(Error::numeric(format!(
            "profile log-likelihood at psi={psi} exceeds the global maximum by {:.2e}",
            -t / 2.0
        )));
    }
    Ok(t.max(0.0))
}

/// Score statistic `S(theta0)' I(theta0)^{-1} S(theta0)`; non-negative for
/// positive semi-definite information (tiny negative roundoff clamped).
pub fn score_stat<M: Model>(model: &M, y: &M::Data, theta0: &[f64]) -> Result<f64> {
    let d = theta0.len();
    let s = DVector::from_vec(model.score(y, theta0)?);
    let info = DMatrix::from_row_slice(d, d, &model.fisher_information(y, theta0)?);
    let solved = info
        .clone()
        .cholesky()
        .map(|ch| ch.solve(&s))
        .or_else(|| info.lu().solve(&s))
        .ok_or_else(|| {
            Error::Singular(format!("Fisher information singular at theta = {theta0:?}"))
        })?;
    Ok(s.dot(&solved).max(0.0))
}

/// The statistic kind an [`Association`] computes.
pub enum AssocKind<M: Model> {
    Deviance,
    ProfileDeviance { interest: usize },
    Score,
    Custom(Arc<dyn Fn(&M::Data, &[f64]) -> Result<f64> + Send + Sync>),
}

impl<M: Model> Clone for AssocKind<M> {
    fn clone(&self) -> Self {
        match self {
            AssocKind::Deviance => AssocKind::Deviance,
            AssocKind::ProfileDeviance { interest } => {
                AssocKind::ProfileDeviance { interest: *interest }
            }
            AssocKind::Score => AssocKind::Score,
            AssocKind::Custom(f) => AssocKind::Custom(Arc::clone(f)),
        }
    }
}

impl<M: Model> std::fmt::Debug for AssocKind<M> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AssocKind::Deviance => write!(f, "Deviance"),
            AssocKind::ProfileDeviance { interest } => {
                write!(f, "ProfileDeviance {{ interest: {interest} }}")
            }
            AssocKind::Score => write!(f, "Score"),
            AssocKind::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl<M: Model> AssocKind<M> {
    /// Stable label for output metadata.
    pub fn label(&self) -> &'static str {
        match self {
            AssocKind::Deviance => "deviance",
            AssocKind::ProfileDeviance { .. } => "profile_deviance",
            AssocKind::Score => "score",
            AssocKind::Custom(_) => "custom",
        }
    }
}

/// A dataset bundled with its fitted maximum, so repeated statistic
/// evaluations against the same data skip refitting.
#[derive(Debug, Clone)]
pub struct Prepared<M: Model> {
    pub y: M::Data,
    /// `(mle, logL at mle)`; present for likelihood-ratio-based kinds.
    pub fit: Option<(Vec<f64>, f64)>,
}

/// A generalized association: model + statistic kind + orientation.
pub struct Association<M: Model> {
    model: Arc<M>,
    kind: AssocKind<M>,
    orientation: Orientation,
}

impl<M: Model> Clone for Association<M> {
    fn clone(&self) -> Self {
        Self {
            model: Arc::clone(&self.model),
            kind: self.kind.clone(),
            orientation: self.orientation,
        }
    }
}

impl<M: Model> std::fmt::Debug for Association<M> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Association")
            .field("model", &self.model.name())
            .field("kind", &self.kind)
            .field("orientation", &self.orientation)
            .finish()
    }
}

impl<M: Model> Association<M> {
    pub fn deviance(model: Arc<M>) -> Self {
        Self { model, kind: AssocKind::Deviance, orientation: Orientation::LargePoorFit }
    }

    pub fn profile_deviance(model: Arc<M>, interest: usize) -> Self {
        Self {
            model,
            kind: AssocKind::ProfileDeviance { interest },
            orientation: Orientation::LargePoorFit,
        }
    }

    pub fn score(model: Arc<M>) -> Self {
        Self { model, kind: AssocKind::Score, orientation: Orientation::LargePoorFit }
    }

    pub fn custom(
        model: Arc<M>,
        statistic: Arc<dyn Fn(&M::Data, &[f64]) -> Result<f64> + Send + Sync>,
        orientation: Orientation,
    ) -> Self {
        Self { model, kind: AssocKind::Custom(statistic), orientation }
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn kind(&self) -> &AssocKind<M> {
        &self.kind
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn support(&self) -> Support {
        self.model.support()
    }

    /// Fits the dataset once so later [`Self::statistic_prepared`] calls
    /// skip the per-call MLE.
    pub fn prepare(&self, y: M::Data) -> Result<Prepared<M>> {
        let fit = match self.kind {
            AssocKind::Deviance | AssocKind::ProfileDeviance { .. } => {
                let mle = self.model.mle(&y)?;
                let max_logl = self.model.log_likelihood(&y, &mle)?;
                Some((mle, max_logl))
            }
            _ => None,
        };
        Ok(Prepared { y, fit })
    }

    /// The statistic `T_{y,theta}`. For `ProfileDeviance`, `theta` may be
    /// the full parameter (the interest coordinate is extracted) or the
    /// bare one-element interest value.
    pub fn statistic(&self, y: &M::Data, theta: &[f64]) -> Result<f64> {
        let prep = self.prepare(y.clone())?;
        self.statistic_prepared(&prep, theta)
    }

    /// The statistic against a prepared dataset.
    pub fn statistic_prepared(&self, prep: &Prepared<M>, theta: &[f64]) -> Result<f64> {
        match &self.kind {
            AssocKind::Deviance => {
                let (_, max_logl) = prep.fit.as_ref().expect("prepared for deviance");
                deviance_with(&*self.model, &prep.y, *max_logl, theta)
            }
            AssocKind::ProfileDeviance { interest } => {
                let (_, max_logl) = prep.fit.as_ref().expect("prepared for profile deviance");
                let psi = if theta.len() == 1 { theta[0] } else { theta[*interest] };
                profile_deviance_with(&*self.model, &prep.y, *max_logl, *interest, psi)
            }
            AssocKind::Score => score_stat(&*self.model, &prep.y, theta),
            AssocKind::Custom(f) => f(&prep.y, theta),
        }
    }

    /// `m` independent draws of `T_{Y,theta}` with `Y` simulated at `theta`
    /// (the full parameter). Per-draw RNG streams are derived from
    /// `(seed, draw index)`, so the output is identical regardless of how
    /// the draws are scheduled across workers.
    pub fn sample_t(&self, theta: &[f64], m: usize, seed: u64) -> Result<Vec<f64>> {
        if m == 0 {
            return Err(Error::domain("sample size must be positive"));
        }
        (0..m)
            .into_par_iter()
            .map(|draw| {
                let mut rng = seeding::rng(seed, &[draw as u64]);
                let y = self.model.simulate(theta, &mut rng)?;
                self.statistic(&y, theta)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Unit-variance normal location model: every quantity is closed-form,
    /// which pins the association algebra exactly.
    struct NormalMean {
        n: usize,
    }

    impl Model for NormalMean {
        type Data = Vec<f64>;

        fn name(&self) -> &'static str {
            "normal-mean"
        }

        fn dim(&self) -> usize {
            1
        }

        fn domain(&self) -> Vec<(f64, f64)> {
            vec![(-100.0, 100.0)]
        }

        fn log_likelihood(&self, y: &Vec<f64>, theta: &[f64]) -> Result<f64> {
            Ok(-0.5 * y.iter().map(|v| (v - theta[0]).powi(2)).sum::<f64>())
        }

        fn simulate(&self, theta: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
            use rand_distr::{Distribution, StandardNormal};
            Ok((0..self.n)
                .map(|_| theta[0] + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
                .collect())
        }

        fn mle(&self, y: &Vec<f64>) -> Result<Vec<f64>> {
            Ok(vec![y.iter().sum::<f64>() / y.len() as f64])
        }
    }

    fn dataset() -> Vec<f64> {
        vec![0.4, -0.2, 1.1, 0.6, -0.5]
    }

    #[test]
    fn deviance_matches_closed_form() {
        let m = NormalMean { n: 5 };
        let y = dataset();
        let ybar = y.iter().sum::<f64>() / 5.0;
        // -2 log LR = n (ybar - theta)^2 for the unit normal.
        for &theta in &[0.0, 0.3, -1.0] {
            let d = deviance(&m, &y, &[theta]).unwrap();
            assert_abs_diff_eq!(d, 5.0 * (ybar - theta).powi(2), epsilon = 1e-10);
        }
        assert_abs_diff_eq!(deviance(&m, &y, &[ybar]).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn score_stat_matches_deviance_for_normal() {
        // For the unit normal both statistics reduce to n (ybar - theta)^2.
        let m = NormalMean { n: 5 };
        let y = dataset();
        for &theta in &[0.0, 0.7] {
            let s = score_stat(&m, &y, &[theta]).unwrap();
            let d = deviance(&m, &y, &[theta]).unwrap();
            assert_abs_diff_eq!(s, d, epsilon = 1e-4);
        }
    }

    #[test]
    fn fd_gradient_matches_analytic_normal_score() {
        let m = NormalMean { n: 5 };
        let y = dataset();
        let theta = [0.25];
        let g = fd_gradient(|t| m.log_likelihood(&y, t), &theta).unwrap();
        let analytic: f64 = y.iter().map(|v| v - theta[0]).sum();
        assert_abs_diff_eq!(g[0], analytic, epsilon = 1e-6);
    }

    #[test]
    fn fd_hessian_matches_analytic_normal_information() {
        let m = NormalMean { n: 5 };
        let y = dataset();
        let info = m.fisher_information(&y, &[0.25]).unwrap();
        assert_abs_diff_eq!(info[0], 5.0, epsilon = 1e-4);
    }

    #[test]
    fn sample_t_is_deterministic_and_nonnegative() {
        let assoc = Association::deviance(Arc::new(NormalMean { n: 5 }));
        let a = assoc.sample_t(&[0.3], 200, 9).unwrap();
        let b = assoc.sample_t(&[0.3], 200, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|t| *t >= 0.0));
        let c = assoc.sample_t(&[0.3], 200, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn deviance_draws_match_chi_square_one() {
        // n (ybar - theta)^2 under the truth is exactly ChiSq(1).
        use crate::special::chi_sq_cdf;
        use crate::stats::ks_one_sample;
        let assoc = Association::deviance(Arc::new(NormalMean { n: 5 }));
        let draws = assoc.sample_t(&[0.3], 4000, 123).unwrap();
        let ks = ks_one_sample(&draws, |t| chi_sq_cdf(t.max(0.0), 1).unwrap());
        assert!(ks < 0.03, "KS distance {ks}");
    }

    #[test]
    fn prepared_statistic_matches_unprepared() {
        let assoc = Association::deviance(Arc::new(NormalMean { n: 5 }));
        let y = dataset();
        let prep = assoc.prepare(y.clone()).unwrap();
        for &theta in &[0.1, 0.9] {
            assert_eq!(
                assoc.statistic(&y, &[theta]).unwrap(),
                assoc.statistic_prepared(&prep, &[theta]).unwrap()
            );
        }
    }

    #[test]
    fn profile_deviance_collapses_to_deviance_in_one_dim() {
        let m = NormalMean { n: 5 };
        let y = dataset();
        let pd = profile_deviance(&m, &y, 0, 0.4).unwrap();
        let d = deviance(&m, &y, &[0.4]).unwrap();
        assert_abs_diff_eq!(pd, d, epsilon = 1e-10);
    }
}
