//! States, factors and proposals.
//!
//! A Metropolis-Hastings ratio `r(x, y) = pi(y) q(y, x) / pi(x) q(x, y)` is split
//! into an ordered list of [`Factor`]s whose log values sum to `log r`. Every
//! factor must be balanced: `log rho(x, y) = -log rho(y, x)`. All arithmetic is in
//! log scale.

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// A point of the parameter space.
#[derive(Clone, PartialEq)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for StateVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for StateVector {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

impl fmt::Debug for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FactorKind {
    LikelihoodBlock,
    PriorRatio,
    ProposalCorrection,
    Surrogate,
    Residual,
}

impl FactorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FactorKind::LikelihoodBlock => "likelihood-block",
            FactorKind::PriorRatio => "prior-ratio",
            FactorKind::ProposalCorrection => "proposal-correction",
            FactorKind::Surrogate => "surrogate",
            FactorKind::Residual => "residual",
        }
    }
}

pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type PairFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// How a factor's log ratio is computed.
#[derive(Clone)]
pub enum Evaluator {
    /// `log rho(x, y) = g(y) - g(x)`. The kernel caches `g` at the current state.
    Point(PointFn),
    /// An arbitrary balanced function of the pair.
    Pair(PairFn),
    /// `log q(y, x) - log q(x, y)` for the active proposal, using the model gradient.
    /// Identically zero for symmetric proposals.
    ProposalCorrection(GradFn),
}

/// One multiplicative term of the acceptance ratio.
#[derive(Clone)]
pub struct Factor {
    pub id: usize,
    pub kind: FactorKind,
    /// Abstract cost of one evaluation at a new point.
    pub cost_weight: f64,
    pub evaluator: Evaluator,
}

impl fmt::Debug for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Factor")
            .field("id", &self.id)
            .field("kind", &self.kind)
            .field("cost_weight", &self.cost_weight)
            .finish_non_exhaustive()
    }
}

impl Factor {
    pub fn point(
        id: usize,
        kind: FactorKind,
        cost_weight: f64,
        g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            id,
            kind,
            cost_weight,
            evaluator: Evaluator::Point(Arc::new(g)),
        }
    }

    pub fn pairwise(
        id: usize,
        kind: FactorKind,
        cost_weight: f64,
        f: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            id,
            kind,
            cost_weight,
            evaluator: Evaluator::Pair(Arc::new(f)),
        }
    }

    pub fn proposal_correction(id: usize, cost_weight: f64, gradient: GradFn) -> Self {
        Self {
            id,
            kind: FactorKind::ProposalCorrection,
            cost_weight,
            evaluator: Evaluator::ProposalCorrection(gradient),
        }
    }

    /// `log rho_k(x, y)` without any caching.
    ///
    /// `-inf` is returned as is (the proposal has zero density and is rejected);
    /// NaN and `+inf` are reported as [`Error::Evaluation`].
    pub fn log_eval(&self, x: &[f64], y: &[f64], proposal: &ProposalSpec) -> Result<f64> {
        let value = match &self.evaluator {
            Evaluator::Point(g) => g(y) - g(x),
            Evaluator::Pair(f) => f(x, y),
            Evaluator::ProposalCorrection(grad) => match proposal.family {
                ProposalFamily::Mala => {
                    let gx = checked_gradient(grad(x))?;
                    let gy = checked_gradient(grad(y))?;
                    mala_log_ratio(x, y, &gx, &gy, proposal.step_size())
                }
                _ => 0.0,
            },
        };
        check_log_ratio(self.id, value)
    }
}

pub(crate) fn check_log_ratio(factor: usize, value: f64) -> Result<f64> {
    if value.is_nan() || value == f64::INFINITY {
        Err(Error::Evaluation { factor, value })
    } else {
        Ok(value)
    }
}

pub(crate) fn checked_gradient(g: Vec<f64>) -> Result<Vec<f64>> {
    match g.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::Gradient { index }),
        None => Ok(g),
    }
}

/// Free-function form of [`Factor::log_eval`].
pub fn factor_log_eval(factor: &Factor, x: &[f64], y: &[f64], proposal: &ProposalSpec) -> Result<f64> {
    factor.log_eval(x, y, proposal)
}

/// An ordered factorisation of the acceptance ratio.
#[derive(Clone, Debug, Default)]
pub struct FactorizedRatio {
    pub factors: Vec<Factor>,
}

impl FactorizedRatio {
    pub fn new(factors: Vec<Factor>) -> Self {
        Self { factors }
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn log_factors(&self, x: &[f64], y: &[f64], proposal: &ProposalSpec) -> Result<Vec<f64>> {
        self.factors.iter().map(|f| f.log_eval(x, y, proposal)).collect()
    }

    /// `log r(x, y)` as the sum of the factor logs.
    pub fn log_ratio(&self, x: &[f64], y: &[f64], proposal: &ProposalSpec) -> Result<f64> {
        Ok(self.log_factors(x, y, proposal)?.iter().sum())
    }

    pub fn cost_weights(&self) -> Vec<f64> {
        self.factors.iter().map(|f| f.cost_weight).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProposalFamily {
    /// `y = x + (l / sqrt(d)) Z`.
    RandomWalk,
    /// `y = x + eps^2 grad log pi(x) / 2 + eps Z` with `eps^2 = l^2 / d^(1/3)`.
    Mala,
    /// Uniform over the other states of a finite chain; states are encoded as `x[0]`.
    UniformDiscrete { states: usize },
}

impl ProposalFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ProposalFamily::RandomWalk => "random-walk",
            ProposalFamily::Mala => "mala",
            ProposalFamily::UniformDiscrete { .. } => "uniform-discrete",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProposalSpec {
    pub family: ProposalFamily,
    pub scale: f64,
    pub dim: usize,
}

impl ProposalSpec {
    pub fn new(family: ProposalFamily, scale: f64, dim: usize) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Config(format!("proposal scale must be positive, got {scale}")));
        }
        if dim == 0 {
            return Err(Error::Config("proposal dimension must be at least 1".into()));
        }
        Ok(Self { family, scale, dim })
    }

    pub fn random_walk(scale: f64, dim: usize) -> Result<Self> {
        Self::new(ProposalFamily::RandomWalk, scale, dim)
    }

    pub fn mala(scale: f64, dim: usize) -> Result<Self> {
        Self::new(ProposalFamily::Mala, scale, dim)
    }

    pub fn uniform_discrete(states: usize) -> Self {
        Self {
            family: ProposalFamily::UniformDiscrete { states },
            scale: 1.0,
            dim: 1,
        }
    }

    /// Per-coordinate standard deviation of the Gaussian increment.
    pub fn step_size(&self) -> f64 {
        let d = self.dim as f64;
        match self.family {
            ProposalFamily::Mala => self.scale / d.powf(1.0 / 6.0),
            _ => self.scale / d.sqrt(),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        !matches!(self.family, ProposalFamily::Mala)
    }
}

pub(crate) fn standard_normals<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Random-walk move for given standard-normal draws.
pub fn rw_move(x: &[f64], spec: &ProposalSpec, z: &[f64]) -> StateVector {
    let sd = spec.step_size();
    x.iter().zip(z).map(|(xi, zi)| xi + sd * zi).collect::<Vec<_>>().into()
}

pub fn rw_propose<R: Rng + ?Sized>(x: &[f64], spec: &ProposalSpec, rng: &mut R) -> StateVector {
    let z = standard_normals(rng, x.len());
    rw_move(x, spec, &z)
}

/// Mean of the Langevin proposal started at `x`.
pub fn mala_mean(x: &[f64], grad_x: &[f64], eps: f64) -> Vec<f64> {
    let half = 0.5 * eps * eps;
    x.iter().zip(grad_x).map(|(xi, gi)| xi + half * gi).collect()
}

/// `log q(from, to)` up to the normalising constant, which cancels in ratios.
pub fn mala_log_kernel(from: &[f64], to: &[f64], grad_from: &[f64], eps: f64) -> f64 {
    let mean = mala_mean(from, grad_from, eps);
    let sq: f64 = to.iter().zip(&mean).map(|(t, m)| (t - m) * (t - m)).sum();
    -sq / (2.0 * eps * eps)
}

/// `log q(y, x) - log q(x, y)`.
pub fn mala_log_ratio(x: &[f64], y: &[f64], grad_x: &[f64], grad_y: &[f64], eps: f64) -> f64 {
    mala_log_kernel(y, x, grad_y, eps) - mala_log_kernel(x, y, grad_x, eps)
}

/// Langevin move for given standard-normal draws.
pub fn mala_move(x: &[f64], grad_x: &[f64], spec: &ProposalSpec, z: &[f64]) -> StateVector {
    let eps = spec.step_size();
    mala_mean(x, grad_x, eps)
        .into_iter()
        .zip(z)
        .map(|(m, zi)| m + eps * zi)
        .collect::<Vec<_>>()
        .into()
}

/// Draws a Langevin proposal and returns it with `log q(y, x) - log q(x, y)`.
pub fn mala_propose<R: Rng + ?Sized>(
    x: &[f64],
    spec: &ProposalSpec,
    grad_log_target: &dyn Fn(&[f64]) -> Vec<f64>,
    rng: &mut R,
) -> Result<(StateVector, f64)> {
    let gx = checked_gradient(grad_log_target(x))?;
    let z = standard_normals(rng, x.len());
    let y = mala_move(x, &gx, spec, &z);
    let gy = checked_gradient(grad_log_target(&y))?;
    let ratio = mala_log_ratio(x, &y, &gx, &gy, spec.step_size());
    Ok((y, ratio))
}

pub(crate) fn discrete_propose<R: Rng + ?Sized>(x: &[f64], states: usize, rng: &mut R) -> StateVector {
    let current = x[0] as usize;
    let mut next = rng.random_range(0..states - 1);
    if next >= current {
        next += 1;
    }
    StateVector::new(vec![next as f64])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rw(scale: f64, dim: usize) -> ProposalSpec {
        ProposalSpec {
            family: ProposalFamily::RandomWalk,
            scale,
            dim,
        }
    }

    #[test]
    fn identical_points_give_zero_log_ratio() {
        let f = Factor::point(0, FactorKind::LikelihoodBlock, 1.0, |x| -x[0] * x[0] + x[0].sin());
        let p = rw(1.0, 1);
        assert_eq!(f.log_eval(&[0.3], &[0.3], &p).unwrap(), 0.0);
    }

    #[test]
    fn bernoulli_success_factor() {
        let f = Factor::point(0, FactorKind::LikelihoodBlock, 1.0, |p| p[0].ln());
        let v = f.log_eval(&[0.5], &[0.25], &rw(1.0, 1)).unwrap();
        assert!((v - (-std::f64::consts::LN_2)).abs() < 1e-12);
    }

    #[test]
    fn counterexample_surrogate_factor() {
        let sigma2 = 0.5;
        let f = Factor::pairwise(0, FactorKind::Surrogate, 1.0, move |x, y| {
            (x[0] - y[0]) * (x[0] + y[0]) / (2.0 * sigma2)
        });
        assert_eq!(f.log_eval(&[0.0], &[1.0], &rw(1.0, 1)).unwrap(), -1.0);
    }

    #[test]
    fn zero_density_proposal_is_rejection_not_error() {
        let f = Factor::point(3, FactorKind::PriorRatio, 1.0, |p| {
            if p[0] > 0.0 {
                p[0].ln()
            } else {
                f64::NEG_INFINITY
            }
        });
        let p = rw(1.0, 1);
        assert_eq!(f.log_eval(&[0.5], &[-0.1], &p).unwrap(), f64::NEG_INFINITY);
        match f.log_eval(&[-0.1], &[0.5], &p) {
            Err(Error::Evaluation { factor: 3, .. }) => {}
            other => panic!("expected evaluation error, got {other:?}"),
        }
    }

    #[test]
    fn nan_is_an_evaluation_error() {
        let f = Factor::point(7, FactorKind::LikelihoodBlock, 1.0, |p| p[0].ln());
        assert!(matches!(
            f.log_eval(&[0.5], &[-0.5], &rw(1.0, 1)),
            Err(Error::Evaluation { factor: 7, .. })
        ));
    }

    #[test]
    fn random_walk_arithmetic() {
        let spec = rw(0.0, 3);
        let x = [1.0, -2.0, 0.5];
        assert_eq!(rw_move(&x, &spec, &[0.3, -1.0, 2.0]).as_slice(), &x);
        let spec = rw(2.0, 1);
        assert_eq!(rw_move(&[3.0], &spec, &[0.5]).as_slice(), &[4.0]);
    }

    #[test]
    fn random_walk_increment_variance() {
        let spec = rw(2.0, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = [0.0; 4];
        let n = 100_000;
        let mut sums = [0.0; 4];
        for _ in 0..n {
            let y = rw_propose(&x, &spec, &mut rng);
            for (s, v) in sums.iter_mut().zip(y.iter()) {
                *s += v * v;
            }
        }
        for s in sums {
            let var = s / n as f64;
            assert!((var - 1.0).abs() < 0.02, "variance {var}");
        }
    }

    #[test]
    fn mala_drift_on_standard_normal() {
        let spec = ProposalSpec {
            family: ProposalFamily::Mala,
            scale: 0.1,
            dim: 1,
        };
        let y = mala_move(&[1.0], &[-1.0], &spec, &[0.0]);
        assert!((y[0] - 0.995).abs() < 1e-15);
    }

    #[test]
    fn mala_zero_gradient_is_symmetric() {
        let x = [0.2, -0.4];
        let y = [1.0, 0.7];
        let g = [0.0, 0.0];
        assert_eq!(mala_log_ratio(&x, &y, &g, &g, 0.8), 0.0);
    }

    #[test]
    fn mala_log_ratio_against_gaussian_densities() {
        // Independent route: full Gaussian log densities, normalising constants included.
        fn log_normal_pdf(v: f64, mean: f64, sd: f64) -> f64 {
            let z = (v - mean) / sd;
            -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
        }
        let eps = 1.0;
        let (x, y) = (0.0, 1.0);
        let expected = log_normal_pdf(x, y - 0.5 * eps * eps * y, eps)
            - log_normal_pdf(y, x - 0.5 * eps * eps * x, eps);
        assert!((expected - 0.375).abs() < 1e-15);
        let got = mala_log_ratio(&[x], &[y], &[-x], &[-y], eps);
        assert!((got - 0.375).abs() < 1e-15);
    }

    #[test]
    fn mala_step_size_scaling() {
        let spec = ProposalSpec::mala(2.0, 64).unwrap();
        assert!((spec.step_size().powi(2) - 4.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn proposal_spec_rejects_bad_scale() {
        assert!(ProposalSpec::random_walk(0.0, 2).is_err());
        assert!(ProposalSpec::random_walk(1.0, 0).is_err());
    }
}
