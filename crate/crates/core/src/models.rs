//! Bundled factorised targets.
//!
//! Every model exposes its factors, a full log target (for factorisation checks), an
//! optional analytic gradient, and an exact posterior summary when one is known.
//! Generated data are a pure function of the data seed.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::core::{Factor, FactorKind, FactorizedRatio, GradFn, PointFn, ProposalSpec, StateVector};
use crate::error::{config_err, Result};
use crate::scaling::norm_quantile;

/// Closed-form posterior moments (marginal means and variances).
#[derive(Debug, Clone, PartialEq)]
pub struct ExactPosterior {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

#[derive(Clone)]
pub struct Model {
    pub name: String,
    pub dim: usize,
    pub ratio: FactorizedRatio,
    pub initial: StateVector,
    pub gradient: Option<GradFn>,
    /// Unnormalised log target.
    pub log_target: PointFn,
    pub exact: Option<ExactPosterior>,
    /// FNV-1a checksum of the generated data (0 when there is none).
    pub data_checksum: u64,
}

impl fmt::Debug for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Model")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("factors", &self.ratio.len())
            .field("exact", &self.exact)
            .field("data_checksum", &format_args!("{:016x}", self.data_checksum))
            .finish_non_exhaustive()
    }
}

impl Model {
    pub fn n_factors(&self) -> usize {
        self.ratio.len()
    }

    /// `log r(x, y)` from the full target, including the Langevin correction when
    /// `proposal` is a MALA proposal.
    pub fn full_log_ratio(&self, x: &[f64], y: &[f64], proposal: &ProposalSpec) -> f64 {
        let mut v = (self.log_target)(y) - (self.log_target)(x);
        if let (crate::core::ProposalFamily::Mala, Some(g)) = (proposal.family, &self.gradient) {
            v += crate::core::mala_log_ratio(x, y, &g(x), &g(y), proposal.step_size());
        }
        v
    }

    pub fn cost_weights(&self) -> Vec<f64> {
        self.ratio.cost_weights()
    }
}

pub(crate) fn fnv1a(values: impl IntoIterator<Item = f64>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for b in v.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

fn point_fn(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> PointFn {
    Arc::new(f)
}

/// `N(0, I_d)` as a single factor, with gradient `-x`.
pub fn standard_normal_model(dim: usize) -> Model {
    let g = |x: &[f64]| -0.5 * x.iter().map(|v| v * v).sum::<f64>();
    Model {
        name: "standard_normal".into(),
        dim,
        ratio: FactorizedRatio::new(vec![Factor::point(0, FactorKind::LikelihoodBlock, 1.0, g)]),
        initial: StateVector::zeros(dim),
        gradient: Some(Arc::new(|x: &[f64]| x.iter().map(|v| -v).collect())),
        log_target: point_fn(g),
        exact: Some(ExactPosterior {
            mean: vec![0.0; dim],
            variance: vec![1.0; dim],
        }),
        data_checksum: 0,
    }
}

/// `N(0, 1)` target split into the ratio of a `N(0, sigma2)` surrogate and the residual.
pub fn counterexample_model(sigma2: f64) -> Model {
    let surrogate = move |x: &[f64]| -x[0] * x[0] / (2.0 * sigma2);
    let residual = move |x: &[f64]| -x[0] * x[0] / 2.0 + x[0] * x[0] / (2.0 * sigma2);
    Model {
        name: "counterexample".into(),
        dim: 1,
        ratio: FactorizedRatio::new(vec![
            Factor::point(0, FactorKind::Surrogate, 1.0, surrogate),
            Factor::point(1, FactorKind::Residual, 1.0, residual),
        ]),
        initial: StateVector::zeros(1),
        gradient: Some(Arc::new(|x: &[f64]| vec![-x[0]])),
        log_target: point_fn(|x| -0.5 * x[0] * x[0]),
        exact: Some(ExactPosterior {
            mean: vec![0.0],
            variance: vec![1.0],
        }),
        data_checksum: 0,
    }
}

/// One observation `x = 3` from `N(mu, 1)` with prior `mu ~ N(0, 10^2)`.
/// Likelihood ratio first, prior ratio second. `flat_prior` makes the prior factor constant.
pub fn normal_normal_model(flat_prior: bool) -> Model {
    const X: f64 = 3.0;
    const SIGMA_MU2: f64 = 100.0;
    let lik = |m: &[f64]| -0.5 * (X - m[0]).powi(2);
    let prior = move |m: &[f64]| if flat_prior { 0.0 } else { -m[0] * m[0] / (2.0 * SIGMA_MU2) };
    let precision = 1.0 + if flat_prior { 0.0 } else { 1.0 / SIGMA_MU2 };
    Model {
        name: if flat_prior { "normal_normal_flat" } else { "normal_normal" }.into(),
        dim: 1,
        ratio: FactorizedRatio::new(vec![
            Factor::point(0, FactorKind::LikelihoodBlock, 1.0, lik),
            Factor::point(1, FactorKind::PriorRatio, 1.0, prior),
        ]),
        initial: StateVector::zeros(1),
        gradient: Some(Arc::new(move |m: &[f64]| vec![(X - m[0]) - (precision - 1.0) * m[0]])),
        log_target: point_fn(move |m| lik(m) + prior(m)),
        exact: Some(ExactPosterior {
            mean: vec![X / precision],
            variance: vec![1.0 / precision],
        }),
        data_checksum: 0,
    }
}

pub const BETA_BINOMIAL_N: usize = 100;
pub const BETA_BINOMIAL_SUCCESSES: usize = 32;
pub const BETA_PRIOR_A: f64 = 7.5;
pub const BETA_PRIOR_B: f64 = 0.5;

/// The 100 Bernoulli outcomes: 32 successes spread evenly over the sequence.
pub fn beta_binomial_data() -> Vec<bool> {
    let mut z = vec![false; BETA_BINOMIAL_N];
    for i in 0..BETA_BINOMIAL_SUCCESSES {
        z[i * BETA_BINOMIAL_N / BETA_BINOMIAL_SUCCESSES] = true;
    }
    z
}

fn bernoulli_log_lik(p: f64, successes: f64, failures: f64) -> f64 {
    if !(p > 0.0 && p < 1.0) {
        return f64::NEG_INFINITY;
    }
    successes * p.ln() + failures * (1.0 - p).ln()
}

/// Binomial likelihood (`N = 100`, `x = 32`) split into `n_parts` Bernoulli blocks,
/// followed by one `Be(7.5, 0.5)` prior factor.
pub fn beta_binomial_model(n_parts: usize) -> Result<Model> {
    if n_parts == 0 || BETA_BINOMIAL_N % n_parts != 0 {
        return Err(config_err(format!("n_parts must divide {BETA_BINOMIAL_N}, got {n_parts}")));
    }
    let data = beta_binomial_data();
    let size = BETA_BINOMIAL_N / n_parts;
    let mut factors = Vec::with_capacity(n_parts + 1);
    for (b, chunk) in data.chunks(size).enumerate() {
        let s = chunk.iter().filter(|&&z| z).count() as f64;
        let f = chunk.len() as f64 - s;
        factors.push(Factor::point(b, FactorKind::LikelihoodBlock, 1.0, move |p| {
            bernoulli_log_lik(p[0], s, f)
        }));
    }
    let prior = |p: &[f64]| bernoulli_log_lik(p[0], BETA_PRIOR_A - 1.0, BETA_PRIOR_B - 1.0);
    factors.push(Factor::point(n_parts, FactorKind::PriorRatio, 1.0, prior));
    let a = BETA_PRIOR_A + BETA_BINOMIAL_SUCCESSES as f64;
    let b = BETA_PRIOR_B + (BETA_BINOMIAL_N - BETA_BINOMIAL_SUCCESSES) as f64;
    let x = BETA_BINOMIAL_SUCCESSES as f64;
    let n = BETA_BINOMIAL_N as f64;
    Ok(Model {
        name: format!("beta_binomial_{n_parts}"),
        dim: 1,
        ratio: FactorizedRatio::new(factors),
        initial: StateVector::new(vec![a / (a + b)]),
        gradient: None,
        log_target: point_fn(move |p| bernoulli_log_lik(p[0], x + BETA_PRIOR_A - 1.0, n - x + BETA_PRIOR_B - 1.0)),
        exact: Some(ExactPosterior {
            mean: vec![a / (a + b)],
            variance: vec![a * b / ((a + b).powi(2) * (a + b + 1.0))],
        }),
        data_checksum: fnv1a(data.iter().map(|&z| z as u8 as f64)),
    })
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Log-likelihood of one Bernoulli-logit observation with linear predictor `eta`.
pub fn logistic_log_lik(eta: f64, label: bool) -> f64 {
    if label {
        -softplus(-eta)
    } else {
        -softplus(eta)
    }
}

/// Generated Bernoulli-logit data.
#[derive(Debug, Clone)]
pub struct LogisticData {
    pub n: usize,
    pub d: usize,
    /// Row-major `n × d` design.
    pub design: Vec<f64>,
    pub labels: Vec<bool>,
    pub beta_true: Vec<f64>,
}

impl LogisticData {
    pub fn generate(n: usize, d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let beta_true: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let design: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
        let labels = design
            .chunks(d)
            .map(|row| {
                let eta: f64 = row.iter().zip(&beta_true).map(|(a, b)| a * b).sum();
                rng.random::<f64>() < sigmoid(eta)
            })
            .collect();
        Self {
            n,
            d,
            design,
            labels,
            beta_true,
        }
    }

    fn log_lik_range(&self, beta: &[f64], rows: std::ops::Range<usize>) -> f64 {
        rows.map(|i| {
            let row = &self.design[i * self.d..(i + 1) * self.d];
            let eta: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
            logistic_log_lik(eta, self.labels[i])
        })
        .sum()
    }

    fn checksum(&self) -> u64 {
        fnv1a(
            self.design
                .iter()
                .copied()
                .chain(self.labels.iter().map(|&l| l as u8 as f64)),
        )
    }
}

pub const LOGISTIC_PRIOR_VARIANCE: f64 = 100.0;

/// Blocked Bernoulli-logit regression with a `N(0, 100 I)` prior. One factor per
/// block of `block` observations (the last may be smaller), then the prior factor
/// with zero cost weight. Starts at the posterior mode.
pub fn logistic_model(n: usize, d: usize, block: usize, data_seed: u64) -> Result<Model> {
    if n == 0 || d == 0 || block == 0 {
        return Err(config_err("logistic model needs positive n, d and block"));
    }
    let data = Arc::new(LogisticData::generate(n, d, data_seed));
    let mut factors = Vec::new();
    let mut start = 0;
    while start < n {
        let end = (start + block).min(n);
        let data = Arc::clone(&data);
        factors.push(Factor::point(factors.len(), FactorKind::LikelihoodBlock, 1.0, move |b| {
            data.log_lik_range(b, start..end)
        }));
        start = end;
    }
    let log_prior = |b: &[f64]| -b.iter().map(|v| v * v).sum::<f64>() / (2.0 * LOGISTIC_PRIOR_VARIANCE);
    factors.push(Factor::point(factors.len(), FactorKind::PriorRatio, 0.0, log_prior));

    let grad_data = Arc::clone(&data);
    let gradient: GradFn = Arc::new(move |b: &[f64]| logistic_gradient(&grad_data, b));
    let target_data = Arc::clone(&data);
    let initial = logistic_map(&data);
    Ok(Model {
        name: "logistic".into(),
        dim: d,
        ratio: FactorizedRatio::new(factors),
        initial: StateVector::new(initial),
        gradient: Some(gradient),
        log_target: point_fn(move |b| target_data.log_lik_range(b, 0..target_data.n) + log_prior(b)),
        exact: None,
        data_checksum: data.checksum(),
    })
}

fn logistic_gradient(data: &LogisticData, beta: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = beta.iter().map(|b| -b / LOGISTIC_PRIOR_VARIANCE).collect();
    for (row, &label) in data.design.chunks(data.d).zip(&data.labels) {
        let eta: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
        let resid = label as u8 as f64 - sigmoid(eta);
        for (gj, xj) in g.iter_mut().zip(row) {
            *gj += resid * xj;
        }
    }
    g
}

/// Posterior mode by Newton's method.
pub fn logistic_map(data: &LogisticData) -> Vec<f64> {
    let d = data.d;
    let x = DMatrix::from_row_slice(data.n, d, &data.design);
    let mut beta = DVector::zeros(d);
    for _ in 0..50 {
        let grad = DVector::from_vec(logistic_gradient(data, beta.as_slice()));
        let eta = &x * &beta;
        let w = eta.map(|t| {
            let s = sigmoid(t);
            s * (1.0 - s)
        });
        let mut h = DMatrix::<f64>::identity(d, d) / LOGISTIC_PRIOR_VARIANCE;
        for i in 0..data.n {
            let row = x.row(i);
            h += w[i] * row.transpose() * row;
        }
        let Some(chol) = h.cholesky() else { break };
        let delta = chol.solve(&grad);
        beta += &delta;
        if delta.amax() < 1e-12 {
            break;
        }
    }
    beta.as_slice().to_vec()
}

pub const MALA_PRIOR_VARIANCE: f64 = 100.0;

/// `n_obs` draws from `N_d(theta, I)` with prior `N_d(0, 100 I)`. Factor 0 is the
/// posterior ratio, factor 1 the Langevin proposal correction (nine times as costly).
/// Chains start at the posterior mean.
pub fn gaussian_mala_model(n_obs: usize, dim: usize, data_seed: u64) -> Result<Model> {
    if n_obs == 0 || dim == 0 {
        return Err(config_err("gaussian model needs positive n_obs and d"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(data_seed);
    let theta: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let obs: Vec<f64> = (0..n_obs * dim)
        .map(|i| theta[i % dim] + rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut xbar = vec![0.0; dim];
    for row in obs.chunks(dim) {
        for (m, v) in xbar.iter_mut().zip(row) {
            *m += v / n_obs as f64;
        }
    }
    let precision = n_obs as f64 + 1.0 / MALA_PRIOR_VARIANCE;
    let mean: Vec<f64> = xbar.iter().map(|m| n_obs as f64 * m / precision).collect();
    let m1 = mean.clone();
    let log_post = move |t: &[f64]| -0.5 * precision * t.iter().zip(&m1).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    let m2 = mean.clone();
    let gradient: GradFn = Arc::new(move |t: &[f64]| t.iter().zip(&m2).map(|(a, b)| -precision * (a - b)).collect());
    Ok(Model {
        name: "gaussian_mala".into(),
        dim,
        ratio: FactorizedRatio::new(vec![
            Factor::point(0, FactorKind::LikelihoodBlock, 1.0, log_post.clone()),
            Factor::proposal_correction(1, 9.0, Arc::clone(&gradient)),
        ]),
        initial: StateVector::new(mean.clone()),
        gradient: Some(gradient),
        log_target: point_fn(log_post),
        exact: Some(ExactPosterior {
            mean,
            variance: vec![1.0 / precision; dim],
        }),
        data_checksum: fnv1a(obs),
    })
}

pub const MIXTURE_WEIGHTS: [f64; 3] = [0.10, 0.65, 0.25];
pub const MIXTURE_MEANS: [f64; 3] = [-10.0, 0.0, 15.0];
pub const MIXTURE_VARIANCES: [f64; 3] = [2.0, 5.0, 7.0];

/// Mixture parameters in natural form.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl MixtureParams {
    /// Maps the unconstrained state `(a_2..a_k, mu_1..mu_k, log sd_1..log sd_k)` with
    /// softmax weights (`a_1 = 0`).
    pub fn from_unconstrained(x: &[f64]) -> Self {
        let k = (x.len() + 1) / 3;
        let mut logits = Vec::with_capacity(k);
        logits.push(0.0);
        logits.extend_from_slice(&x[..k - 1]);
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|a| (a - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        Self {
            weights: exps.iter().map(|e| e / total).collect(),
            means: x[k - 1..2 * k - 1].to_vec(),
            sds: x[2 * k - 1..3 * k - 1].iter().map(|s| s.exp()).collect(),
        }
    }

    pub fn to_unconstrained(&self) -> Vec<f64> {
        let mut x: Vec<f64> = self.weights[1..].iter().map(|w| (w / self.weights[0]).ln()).collect();
        x.extend_from_slice(&self.means);
        x.extend(self.sds.iter().map(|s| s.ln()));
        x
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    fn component_log_densities(&self, y: f64, out: &mut [f64]) {
        for j in 0..self.k() {
            let z = (y - self.means[j]) / self.sds[j];
            out[j] = self.weights[j].ln() - 0.5 * z * z - self.sds[j].ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        }
    }

    pub fn log_density(&self, y: f64) -> f64 {
        let mut buf = vec![0.0; self.k()];
        self.component_log_densities(y, &mut buf);
        log_sum_exp(&buf)
    }

    /// Score of `log f(y)` with respect to `(a_2..a_k, mu_1..mu_k, sd_1..sd_k)`.
    pub fn score(&self, y: f64, out: &mut [f64]) {
        let k = self.k();
        let mut resp = vec![0.0; k];
        self.component_log_densities(y, &mut resp);
        let lse = log_sum_exp(&resp);
        for r in resp.iter_mut() {
            *r = (*r - lse).exp();
        }
        for j in 1..k {
            out[j - 1] = resp[j] - self.weights[j];
        }
        for j in 0..k {
            let (m, s) = (self.means[j], self.sds[j]);
            out[k - 1 + j] = resp[j] * (y - m) / (s * s);
            out[2 * k - 1 + j] = resp[j] * (-1.0 / s + (y - m).powi(2) / (s * s * s));
        }
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Common random numbers for the Monte-Carlo Fisher information: a uniform for the
/// component label and a standard normal per draw. Both are stratified (one draw
/// per equal-probability stratum) and paired by an independent random permutation.
#[derive(Debug, Clone)]
pub struct FisherDraws {
    pub uniforms: Vec<f64>,
    pub normals: Vec<f64>,
}

impl FisherDraws {
    pub fn generate(samples: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stratified = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let mut v: Vec<f64> = (0..samples)
                .map(|i| (i as f64 + rng.random::<f64>()) / samples as f64)
                .collect();
            v.shuffle(rng);
            v
        };
        let uniforms = stratified(&mut rng);
        let normals = stratified(&mut rng)
            .into_iter()
            .map(|u| norm_quantile(u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON)))
            .collect();
        Self { uniforms, normals }
    }
}

/// Monte-Carlo Fisher information in the `(a, mu, sd)` coordinates of
/// [`MixtureParams::score`], using draws from the model itself.
pub fn fisher_information_mc(params: &MixtureParams, draws: &FisherDraws) -> DMatrix<f64> {
    let k = params.k();
    let p = 3 * k - 1;
    let mut info = DMatrix::zeros(p, p);
    let mut s = vec![0.0; p];
    let m = draws.uniforms.len();
    for (u, z) in draws.uniforms.iter().zip(&draws.normals) {
        let mut acc = 0.0;
        let mut j = k - 1;
        for (c, w) in params.weights.iter().enumerate() {
            acc += w;
            if *u < acc {
                j = c;
                break;
            }
        }
        let y = params.means[j] + params.sds[j] * z;
        params.score(y, &mut s);
        let sv = DVector::from_column_slice(&s);
        info += &sv * sv.transpose();
    }
    info / m as f64
}

/// `log` of the Monte-Carlo Jeffreys prior density in the unconstrained coordinates,
/// or `-inf` when the estimated information is not positive definite.
pub fn jeffreys_log_prior(x: &[f64], draws: &FisherDraws) -> f64 {
    let params = MixtureParams::from_unconstrained(x);
    let info = fisher_information_mc(&params, draws);
    match info.cholesky() {
        Some(chol) => {
            let half_log_det: f64 = chol.l().diagonal().iter().map(|v| v.ln()).sum();
            // Jacobian of sd = exp(log sd).
            half_log_det + params.sds.iter().map(|s| s.ln()).sum::<f64>()
        }
        None => f64::NEG_INFINITY,
    }
}

/// Three-component Gaussian mixture with unknown weights, means and variances.
/// Factor 0 is the likelihood of observations `floor(p n)+1..n`; factor 1 is the
/// likelihood of the first `floor(p n)` observations times the Jeffreys prior ratio.
pub fn mixture_jeffreys_model(n: usize, mc_prior_samples: usize, p_holdout: f64, data_seed: u64) -> Result<Model> {
    if n == 0 || mc_prior_samples == 0 || !(0.0..1.0).contains(&p_holdout) {
        return Err(config_err("mixture model needs n > 0, mc_prior_samples > 0 and p_holdout in [0, 1)"));
    }
    let truth = MixtureParams {
        weights: MIXTURE_WEIGHTS.to_vec(),
        means: MIXTURE_MEANS.to_vec(),
        sds: MIXTURE_VARIANCES.iter().map(|v| v.sqrt()).collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(data_seed);
    let data: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let j = if u < truth.weights[0] {
                0
            } else if u < truth.weights[0] + truth.weights[1] {
                1
            } else {
                2
            };
            truth.means[j] + truth.sds[j] * rng.sample::<f64, _>(StandardNormal)
        })
        .collect();
    let data = Arc::new(data);
    let holdout = (p_holdout * n as f64).floor() as usize;
    let draws = Arc::new(FisherDraws::generate(mc_prior_samples, data_seed ^ 0x9e37_79b9_7f4a_7c15));

    let lik = |data: Arc<Vec<f64>>, range: std::ops::Range<usize>| {
        move |x: &[f64]| {
            let p = MixtureParams::from_unconstrained(x);
            data[range.clone()].iter().map(|&y| p.log_density(y)).sum::<f64>()
        }
    };
    let l1 = lik(Arc::clone(&data), holdout..n);
    let l2 = lik(Arc::clone(&data), 0..holdout);
    let d1 = Arc::clone(&draws);
    let second = move |x: &[f64]| l2(x) + jeffreys_log_prior(x, &d1);
    let l_all = lik(Arc::clone(&data), 0..n);
    let d2 = Arc::clone(&draws);
    Ok(Model {
        name: "mixture_jeffreys".into(),
        dim: 8,
        ratio: FactorizedRatio::new(vec![
            Factor::point(0, FactorKind::LikelihoodBlock, (n - holdout) as f64, l1),
            Factor::point(1, FactorKind::PriorRatio, (holdout + 3 * mc_prior_samples) as f64, second),
        ]),
        initial: StateVector::new(truth.to_unconstrained()),
        gradient: None,
        log_target: point_fn(move |x| l_all(x) + jeffreys_log_prior(x, &d2)),
        exact: None,
        data_checksum: fnv1a(data.iter().copied()),
    })
}

/// A finite target on `{0, .., m-1}` (state stored as `x[0]`) split into point factors.
/// `splits[k][i]` is `g_k(i)`; the log target is the sum over `k`.
pub fn discrete_model(splits: Vec<Vec<f64>>) -> Model {
    let states = splits[0].len();
    let log_pi: Vec<f64> = (0..states).map(|i| splits.iter().map(|g| g[i]).sum()).collect();
    let factors = splits
        .into_iter()
        .enumerate()
        .map(|(k, g)| Factor::point(k, FactorKind::LikelihoodBlock, 1.0, move |x| g[x[0] as usize]))
        .collect();
    let lse = log_sum_exp(&log_pi);
    let probs: Vec<f64> = log_pi.iter().map(|v| (v - lse).exp()).collect();
    let mean = probs.iter().enumerate().map(|(i, p)| i as f64 * p).sum::<f64>();
    let var = probs.iter().enumerate().map(|(i, p)| (i as f64 - mean).powi(2) * p).sum::<f64>();
    Model {
        name: format!("discrete_{states}"),
        dim: 1,
        ratio: FactorizedRatio::new(factors),
        initial: StateVector::zeros(1),
        gradient: None,
        log_target: point_fn(move |x| log_pi[x[0] as usize]),
        exact: Some(ExactPosterior {
            mean: vec![mean],
            variance: vec![var],
        }),
        data_checksum: 0,
    }
}

/// The enumerable test targets: `(0.2, 0.3, 0.5)` on three states and
/// `(0.1, 0.15, 0.2, 0.25, 0.3)` on five.
pub fn discrete_target(states: usize) -> Vec<f64> {
    match states {
        3 => vec![0.2, 0.3, 0.5],
        5 => vec![0.1, 0.15, 0.2, 0.25, 0.3],
        m => {
            let total = (m * (m + 1) / 2) as f64;
            (1..=m).map(|i| i as f64 / total).collect()
        }
    }
}

/// Discrete fixture with `n_factors` point factors of mixed sign; the last absorbs
/// the remainder of `log pi`.
pub fn discrete_fixture(states: usize, n_factors: usize) -> Model {
    let pi = discrete_target(states);
    let mut splits: Vec<Vec<f64>> = (0..n_factors.saturating_sub(1))
        .map(|k| {
            (0..states)
                .map(|i| 1.3 * (1.7 * ((k + 1) * (i + 1)) as f64 + k as f64).sin())
                .collect()
        })
        .collect();
    let last: Vec<f64> = (0..states)
        .map(|i| pi[i].ln() - splits.iter().map(|g| g[i]).sum::<f64>())
        .collect();
    splits.push(last);
    discrete_model(splits)
}

/// Uniform target on `states` states with two constant factors.
pub fn uniform_model(states: usize) -> Model {
    discrete_model(vec![vec![0.0; states], vec![0.0; states]])
}
