//! Metropolis-Hastings and delayed-acceptance transition kernels.
//!
//! Factor ids are 0-based. A kernel visits factors through `ordering`, grouped into
//! consecutive *stages* by `stage_sizes`; the log values of the factors in a stage are
//! summed and tested as one term. With unit stages (the default) every factor is its
//! own stage. `rejection_stage` in a [`StepOutcome`] is the 0-based position of the
//! failing stage.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::core::{
    check_log_ratio, checked_gradient, discrete_propose, mala_log_ratio, mala_move, rw_propose,
    standard_normals, Evaluator, ProposalFamily, ProposalSpec, StateVector,
};
use crate::error::{config_err, Error, Result};
use crate::models::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Mh,
    Da,
    DaClipped,
    DaMinPartial,
    DaGrouped,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Mh,
        Variant::Da,
        Variant::DaClipped,
        Variant::DaMinPartial,
        Variant::DaGrouped,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Mh => "mh",
            Variant::Da => "da",
            Variant::DaClipped => "da-clipped",
            Variant::DaMinPartial => "da-min-partial",
            Variant::DaGrouped => "da-grouped",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| config_err(format!("unknown kernel variant `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelConfig {
    pub variant: Variant,
    /// Permutation of the factor ids.
    pub ordering: Vec<usize>,
    /// Consecutive chunks of `ordering` tested as one term each.
    pub stage_sizes: Vec<usize>,
    /// Clipping constant `c` in `(0, 1]`, used by `DaClipped`.
    pub clip_c: f64,
    /// Consecutive chunks of stages, used by `DaGrouped`.
    pub group_sizes: Vec<usize>,
    pub proposal: ProposalSpec,
}

impl KernelConfig {
    /// Identity ordering, unit stages, `c = 1` and a single group.
    pub fn new(variant: Variant, n_factors: usize, proposal: ProposalSpec) -> Self {
        Self {
            variant,
            ordering: (0..n_factors).collect(),
            stage_sizes: vec![1; n_factors],
            clip_c: 1.0,
            group_sizes: vec![n_factors],
            proposal,
        }
    }

    pub fn with_ordering(mut self, ordering: Vec<usize>) -> Self {
        self.ordering = ordering;
        self
    }

    pub fn with_stage_sizes(mut self, sizes: Vec<usize>) -> Self {
        self.group_sizes = vec![sizes.len()];
        self.stage_sizes = sizes;
        self
    }

    pub fn with_clip(mut self, c: f64) -> Self {
        self.clip_c = c;
        self
    }

    pub fn with_groups(mut self, sizes: Vec<usize>) -> Self {
        self.group_sizes = sizes;
        self
    }

    pub fn n_factors(&self) -> usize {
        self.ordering.len()
    }

    pub fn n_stages(&self) -> usize {
        self.stage_sizes.len()
    }

    /// The factor ids of each stage, in visiting order.
    pub fn stages(&self) -> Vec<&[usize]> {
        let mut out = Vec::with_capacity(self.stage_sizes.len());
        let mut start = 0;
        for &size in &self.stage_sizes {
            out.push(&self.ordering[start..start + size]);
            start += size;
        }
        out
    }

    pub fn validate(&self, n_factors: usize) -> Result<()> {
        if self.ordering.len() != n_factors {
            return Err(config_err(format!(
                "ordering has {} entries but the model has {n_factors} factors",
                self.ordering.len()
            )));
        }
        let mut seen = vec![false; n_factors];
        for &k in &self.ordering {
            if k >= n_factors || std::mem::replace(&mut seen[k], true) {
                return Err(config_err(format!("ordering is not a permutation (entry {k})")));
            }
        }
        if self.stage_sizes.iter().any(|&s| s == 0) || self.stage_sizes.iter().sum::<usize>() != n_factors {
            return Err(config_err("stage sizes must be positive and sum to the number of factors"));
        }
        match self.variant {
            Variant::DaClipped => {
                if !(self.clip_c > 0.0 && self.clip_c <= 1.0) {
                    return Err(config_err(format!("clip_c must lie in (0, 1], got {}", self.clip_c)));
                }
                if self.n_stages() < 2 {
                    return Err(config_err("clipping needs at least two stages"));
                }
            }
            Variant::DaGrouped => {
                if self.group_sizes.iter().any(|&s| s == 0)
                    || self.group_sizes.iter().sum::<usize>() != self.n_stages()
                {
                    return Err(config_err("group sizes must be positive and sum to the number of stages"));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// The mutable state of one chain.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub x: StateVector,
    /// `g_k(x)` for every point factor; NaN for the other evaluator kinds.
    pub cached_terms: Vec<f64>,
    /// Gradient of the log target at `x`, kept when the model supplies one.
    pub grad: Option<Vec<f64>>,
    pub iteration: u64,
    /// Cumulative evaluations per factor id.
    pub factor_evals: Vec<u64>,
    pub cost_units: f64,
    rng: ChaCha8Rng,
}

impl ChainState {
    /// Starts a chain at `x` with the generator `seed`, stream `stream`.
    pub fn new(model: &Model, x: StateVector, seed: u64, stream: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self::with_rng(model, x, rng)
    }

    pub fn with_rng(model: &Model, x: StateVector, rng: ChaCha8Rng) -> Result<Self> {
        if x.dim() != model.dim {
            return Err(config_err(format!(
                "initial state has dimension {} but the model has {}",
                x.dim(),
                model.dim
            )));
        }
        let mut cached_terms = Vec::with_capacity(model.ratio.len());
        for f in &model.ratio.factors {
            let v = match &f.evaluator {
                Evaluator::Point(g) => {
                    let v = g(&x);
                    if !v.is_finite() {
                        return Err(Error::Evaluation { factor: f.id, value: v });
                    }
                    v
                }
                _ => f64::NAN,
            };
            cached_terms.push(v);
        }
        let grad = match &model.gradient {
            Some(g) => Some(checked_gradient(g(&x))?),
            None => None,
        };
        Ok(Self {
            x,
            cached_terms,
            grad,
            iteration: 0,
            factor_evals: vec![0; model.ratio.len()],
            cost_units: 0.0,
            rng,
        })
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Refreshes the cached point terms and gradient at the current `x`.
    pub fn reset_to(&mut self, model: &Model, x: StateVector) -> Result<()> {
        let rng = self.rng.clone();
        let counts = std::mem::take(&mut self.factor_evals);
        let (iteration, cost) = (self.iteration, self.cost_units);
        *self = Self::with_rng(model, x, rng)?;
        self.factor_evals = counts;
        self.iteration = iteration;
        self.cost_units = cost;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub accepted: bool,
    pub rejection_stage: Option<usize>,
    pub factor_evals: usize,
    pub cost_units: f64,
    pub proposal: StateVector,
}

/// Factor values at a proposed point, filled in as stages are visited.
struct Pending {
    y: StateVector,
    new_terms: Vec<f64>,
    new_grad: Option<Vec<f64>>,
    evaluated: Vec<usize>,
    cost: f64,
}

impl Pending {
    fn new(y: StateVector, n_factors: usize) -> Self {
        Self {
            y,
            new_terms: vec![f64::NAN; n_factors],
            new_grad: None,
            evaluated: Vec::with_capacity(n_factors),
            cost: 0.0,
        }
    }

    fn eval(&mut self, state: &ChainState, model: &Model, spec: &ProposalSpec, k: usize) -> Result<f64> {
        let f = &model.ratio.factors[k];
        self.evaluated.push(k);
        self.cost += f.cost_weight;
        let value = match &f.evaluator {
            Evaluator::Point(g) => {
                let gy = g(&self.y);
                self.new_terms[k] = gy;
                gy - state.cached_terms[k]
            }
            Evaluator::Pair(p) => p(&state.x, &self.y),
            Evaluator::ProposalCorrection(grad) => match spec.family {
                ProposalFamily::Mala => {
                    let gy = checked_gradient(grad(&self.y))?;
                    let gx = state
                        .grad
                        .as_deref()
                        .ok_or_else(|| config_err("langevin proposals need a model gradient"))?;
                    let v = mala_log_ratio(&state.x, &self.y, gx, &gy, spec.step_size());
                    self.new_grad = Some(gy);
                    v
                }
                _ => 0.0,
            },
        };
        check_log_ratio(f.id, value)
    }

    /// Sum of the factor logs of one stage. Stops at the first `-inf` factor.
    fn stage(&mut self, state: &ChainState, model: &Model, spec: &ProposalSpec, ids: &[usize]) -> Result<f64> {
        let mut total = 0.0;
        for &k in ids {
            total += self.eval(state, model, spec, k)?;
            if total == f64::NEG_INFINITY {
                break;
            }
        }
        Ok(total)
    }

    fn finish(self, state: &mut ChainState, model: &Model, accepted: bool, rejection_stage: Option<usize>) -> StepOutcome {
        for &k in &self.evaluated {
            state.factor_evals[k] += 1;
        }
        state.cost_units += self.cost;
        state.iteration += 1;
        let outcome = StepOutcome {
            accepted,
            rejection_stage,
            factor_evals: self.evaluated.len(),
            cost_units: self.cost,
            proposal: self.y.clone(),
        };
        if accepted {
            for (k, f) in model.ratio.factors.iter().enumerate() {
                if matches!(f.evaluator, Evaluator::Point(_)) {
                    state.cached_terms[k] = self.new_terms[k];
                }
            }
            if let Some(g) = self.new_grad {
                state.grad = Some(g);
            } else if let Some(grad) = &model.gradient {
                // No correction factor consumed the gradient; refresh it directly.
                state.grad = checked_gradient(grad(&self.y)).ok();
            }
            state.x = self.y;
        }
        outcome
    }
}

fn draw_proposal(state: &mut ChainState, spec: &ProposalSpec) -> Result<StateVector> {
    Ok(match spec.family {
        ProposalFamily::RandomWalk => rw_propose(&state.x, spec, &mut state.rng),
        ProposalFamily::Mala => {
            let z = standard_normals(&mut state.rng, state.x.dim());
            let g = state
                .grad
                .as_deref()
                .ok_or_else(|| config_err("langevin proposals need a model gradient"))?;
            mala_move(&state.x, g, spec, &z)
        }
        ProposalFamily::UniformDiscrete { states } => discrete_propose(&state.x, states, &mut state.rng),
    })
}

/// A uniform on `(0, 1]` in log scale; the test `log u <= log rho` passes with probability `1 ∧ rho`.
fn log_uniform(rng: &mut ChaCha8Rng) -> f64 {
    (1.0 - rng.random::<f64>()).ln()
}

/// Runs one transition of the configured variant.
pub fn step(state: &mut ChainState, model: &Model, config: &KernelConfig) -> Result<StepOutcome> {
    match config.variant {
        Variant::Mh => mh_step(state, model, config),
        Variant::Da | Variant::DaClipped => da_step(state, model, config),
        Variant::DaMinPartial => da_min_partial_step(state, model, config),
        Variant::DaGrouped => da_grouped_step(state, model, config),
    }
}

/// Plain Metropolis-Hastings: every factor is evaluated and `1 ∧ r` is tested once.
pub fn mh_step(state: &mut ChainState, model: &Model, config: &KernelConfig) -> Result<StepOutcome> {
    let (outcome, _) = full_step(state, model, config)?;
    Ok(outcome)
}

/// Evaluates every factor, accepts with probability `1 ∧ r`, and returns the factor
/// logs indexed by factor id. Used by plain MH and by the ranking phase.
pub fn full_step(state: &mut ChainState, model: &Model, config: &KernelConfig) -> Result<(StepOutcome, Vec<f64>)> {
    let spec = config.proposal;
    let y = draw_proposal(state, &spec)?;
    let n = model.ratio.len();
    let mut pending = Pending::new(y, n);
    let mut logs = vec![0.0; n];
    for &k in &config.ordering {
        logs[k] = pending.eval(state, model, &spec, k)?;
    }
    let log_r: f64 = logs.iter().sum();
    let log_u = log_uniform(&mut state.rng);
    let accepted = log_u <= log_r;
    let stage = if accepted { None } else { Some(0) };
    Ok((pending.finish(state, model, accepted, stage), logs))
}

/// Delayed acceptance with a fresh uniform per stage and early exit. With
/// `Variant::DaClipped` the first stages are clamped into `[log b, -log b]`,
/// `b = c^(1/(D-1))`, and the last stage carries the residual.
pub fn da_step(state: &mut ChainState, model: &Model, config: &KernelConfig) -> Result<StepOutcome> {
    let spec = config.proposal;
    let y = draw_proposal(state, &spec)?;
    let mut pending = Pending::new(y, model.ratio.len());
    let stages = config.stages();
    let n_stages = stages.len();
    let clip = match config.variant {
        Variant::DaClipped => Some(config.clip_c.ln() / (n_stages - 1) as f64),
        _ => None,
    };
    let (mut raw_sum, mut clipped_sum) = (0.0, 0.0);
    for (s, ids) in stages.iter().enumerate() {
        let raw = pending.stage(state, model, &spec, ids)?;
        let value = match clip {
            Some(log_b) if s + 1 < n_stages => {
                if raw == f64::NEG_INFINITY {
                    // The residual would be -inf as well.
                    return Ok(pending.finish(state, model, false, Some(s)));
                }
                raw_sum += raw;
                let c = raw.clamp(log_b, -log_b);
                clipped_sum += c;
                c
            }
            Some(_) => raw_sum + raw - clipped_sum,
            None => raw,
        };
        if log_uniform(&mut state.rng) > value {
            return Ok(pending.finish(state, model, false, Some(s)));
        }
    }
    Ok(pending.finish(state, model, true, None))
}

/// Tests running partial sums of the stages, visited in a fresh uniformly random
/// order, against a single uniform: acceptance `min_k (1 ∧ prod_{i<=k} rho_i)`.
fn min_partial_test(
    pending: &mut Pending,
    state: &mut ChainState,
    model: &Model,
    spec: &ProposalSpec,
    stages: &[&[usize]],
    stage_offset: usize,
) -> Result<Option<usize>> {
    let mut order: Vec<usize> = (0..stages.len()).collect();
    order.shuffle(&mut state.rng);
    let log_u = log_uniform(&mut state.rng);
    let mut partial = 0.0;
    for (pos, &s) in order.iter().enumerate() {
        partial += pending.stage(state, model, spec, stages[s])?;
        if partial < log_u {
            return Ok(Some(stage_offset + pos));
        }
    }
    Ok(None)
}

pub fn da_min_partial_step(state: &mut ChainState, model: &Model, config: &KernelConfig) -> Result<StepOutcome> {
    let spec = config.proposal;
    let y = draw_proposal(state, &spec)?;
    let mut pending = Pending::new(y, model.ratio.len());
    let stages = config.stages();
    let rejected = min_partial_test(&mut pending, state, model, &spec, &stages, 0)?;
    Ok(pending.finish(state, model, rejected.is_none(), rejected))
}

/// Groups are visited in order; each runs a min-partial test with its own uniform
/// and its own random within-group order.
pub fn da_grouped_step(state: &mut ChainState, model: &Model, config: &KernelConfig) -> Result<StepOutcome> {
    let spec = config.proposal;
    let y = draw_proposal(state, &spec)?;
    let mut pending = Pending::new(y, model.ratio.len());
    let stages = config.stages();
    let mut start = 0;
    for &size in &config.group_sizes {
        let group = &stages[start..start + size];
        if let Some(s) = min_partial_test(&mut pending, state, model, &spec, group, start)? {
            return Ok(pending.finish(state, model, false, Some(s)));
        }
        start += size;
    }
    Ok(pending.finish(state, model, true, None))
}

/// Log values of the clipped factorisation: the first `d-1` entries clamped into
/// `[log b, -log b]` with `b = c^(1/(d-1))`, the last the residual.
pub fn clip_log_factors(logs: &[f64], c: f64) -> Result<Vec<f64>> {
    let d = logs.len();
    if d < 2 {
        return Err(config_err("clipping needs at least two factors"));
    }
    if !(c > 0.0 && c <= 1.0) {
        return Err(config_err(format!("clip_c must lie in (0, 1], got {c}")));
    }
    let log_b = c.ln() / (d - 1) as f64;
    let mut out: Vec<f64> = logs[..d - 1].iter().map(|v| v.clamp(log_b, -log_b)).collect();
    let total: f64 = logs.iter().sum();
    let head: f64 = out.iter().sum();
    out.push(total - head);
    Ok(out)
}

/// Clipped versions of `factors`; their log values sum to the unclipped `log r`.
pub fn clip_factors(
    factors: &[crate::core::Factor],
    c: f64,
    proposal: ProposalSpec,
) -> Result<Vec<crate::core::Factor>> {
    use crate::core::{Factor, FactorKind};
    use std::sync::Arc;

    clip_log_factors(&vec![0.0; factors.len()], c)?;
    let d = factors.len();
    let log_b = c.ln() / (d - 1) as f64;
    let shared: Arc<Vec<Factor>> = Arc::new(factors.to_vec());
    let mut out = Vec::with_capacity(d);
    for (i, f) in factors[..d - 1].iter().enumerate() {
        let all = Arc::clone(&shared);
        out.push(Factor {
            id: f.id,
            kind: f.kind,
            cost_weight: f.cost_weight,
            evaluator: Evaluator::Pair(Arc::new(move |x, y| {
                all[i].log_eval(x, y, &proposal).unwrap_or(f64::NAN).clamp(log_b, -log_b)
            })),
        });
    }
    let last = &factors[d - 1];
    let all = Arc::clone(&shared);
    out.push(Factor {
        id: last.id,
        kind: FactorKind::Residual,
        cost_weight: factors.iter().map(|f| f.cost_weight).sum(),
        evaluator: Evaluator::Pair(Arc::new(move |x, y| {
            let mut total = 0.0;
            let mut head = 0.0;
            for (i, f) in all.iter().enumerate() {
                let v = f.log_eval(x, y, &proposal).unwrap_or(f64::NAN);
                total += v;
                if i + 1 < all.len() {
                    head += v.clamp(log_b, -log_b);
                }
            }
            total - head
        })),
    });
    Ok(out)
}

/// Summed log value per stage, given the factor logs indexed by id.
pub fn stage_logs(config: &KernelConfig, factor_logs: &[f64]) -> Vec<f64> {
    config
        .stages()
        .iter()
        .map(|ids| ids.iter().map(|&k| factor_logs[k]).sum())
        .collect()
}

fn accept_prob(log_rho: f64) -> f64 {
    if log_rho >= 0.0 {
        1.0
    } else {
        log_rho.exp()
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// `min_k (1 ∧ exp(sum_{i<=k} logs[i]))` for one fixed order.
pub fn min_partial_acceptance(logs: &[f64]) -> f64 {
    let mut partial = 0.0;
    let mut best = 1.0_f64;
    for v in logs {
        partial += v;
        best = best.min(accept_prob(partial));
    }
    best
}

/// Min-partial acceptance averaged over every order of `logs`.
pub fn averaged_min_partial_acceptance(logs: &[f64]) -> f64 {
    let perms = permutations(logs.len());
    let total: f64 = perms
        .iter()
        .map(|p| min_partial_acceptance(&p.iter().map(|&i| logs[i]).collect::<Vec<_>>()))
        .sum();
    total / perms.len() as f64
}

/// Exact probability that the configured kernel accepts a proposal with the given
/// factor logs (indexed by id). Random orders are averaged out.
pub fn exact_acceptance(config: &KernelConfig, factor_logs: &[f64]) -> Result<f64> {
    let stages = stage_logs(config, factor_logs);
    Ok(match config.variant {
        Variant::Mh => accept_prob(stages.iter().sum()),
        Variant::Da => stages.iter().map(|&v| accept_prob(v)).product(),
        Variant::DaClipped => clip_log_factors(&stages, config.clip_c)?
            .into_iter()
            .map(accept_prob)
            .product(),
        Variant::DaMinPartial => averaged_min_partial_acceptance(&stages),
        Variant::DaGrouped => {
            let mut start = 0;
            let mut prob = 1.0;
            for &size in &config.group_sizes {
                prob *= averaged_min_partial_acceptance(&stages[start..start + size]);
                start += size;
            }
            prob
        }
    })
}
