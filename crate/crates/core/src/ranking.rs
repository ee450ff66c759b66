//! Per-factor statistics, factor ranking and surrogate selection for the finite
//! adaptation phase.

use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::error::{config_err, Result};
use crate::kernel::KernelConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    SuccessRateAsc,
    VarianceDesc,
    CorrelationDesc,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::SuccessRateAsc => "success-rate-asc",
            Criterion::VarianceDesc => "variance-desc",
            Criterion::CorrelationDesc => "correlation-desc",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        [Criterion::SuccessRateAsc, Criterion::VarianceDesc, Criterion::CorrelationDesc]
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| config_err(format!("unknown ranking criterion `{s}`")))
    }
}

/// Streaming moments of every `log rho_k` and of their covariance with `log r`,
/// plus a bounded window of the raw per-iteration logs.
#[derive(Debug, Clone)]
pub struct FactorStats {
    pub cost_weights: Vec<f64>,
    pub tests: Vec<u64>,
    /// Expected number of stage passes, `sum min(1, rho_k)`.
    pub passes: Vec<f64>,
    pub count: u64,
    pub excluded: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
    comoment: Vec<f64>,
    mean_r: f64,
    m2_r: f64,
    window: Vec<Vec<f64>>,
    window_totals: Vec<f64>,
    window_cap: usize,
}

impl FactorStats {
    pub fn new(cost_weights: Vec<f64>, window_cap: usize) -> Self {
        let d = cost_weights.len();
        Self {
            cost_weights,
            tests: vec![0; d],
            passes: vec![0.0; d],
            count: 0,
            excluded: 0,
            mean: vec![0.0; d],
            m2: vec![0.0; d],
            comoment: vec![0.0; d],
            mean_r: 0.0,
            m2_r: 0.0,
            window: Vec::new(),
            window_totals: Vec::new(),
            window_cap,
        }
    }

    pub fn n_factors(&self) -> usize {
        self.cost_weights.len()
    }

    /// Adds one proposal's factor logs (indexed by id). Iterations with a
    /// non-finite value are skipped and counted in `excluded`.
    pub fn record(&mut self, logs: &[f64], total_log_r: f64) {
        if !total_log_r.is_finite() || logs.iter().any(|v| !v.is_finite()) {
            self.excluded += 1;
            return;
        }
        self.count += 1;
        let n = self.count as f64;
        let dr = total_log_r - self.mean_r;
        self.mean_r += dr / n;
        let dr_after = total_log_r - self.mean_r;
        self.m2_r += dr * dr_after;
        for (k, &v) in logs.iter().enumerate() {
            self.tests[k] += 1;
            self.passes[k] += if v >= 0.0 { 1.0 } else { v.exp() };
            let dk = v - self.mean[k];
            self.mean[k] += dk / n;
            self.m2[k] += dk * (v - self.mean[k]);
            self.comoment[k] += dk * dr_after;
        }
        if self.window.len() < self.window_cap {
            self.window.push(logs.to_vec());
            self.window_totals.push(total_log_r);
        }
    }

    pub fn success_rate(&self, k: usize) -> f64 {
        if self.tests[k] == 0 {
            return f64::NAN;
        }
        self.passes[k] / self.tests[k] as f64
    }

    pub fn mean(&self, k: usize) -> f64 {
        self.mean[k]
    }

    /// Unbiased sample variance of `log rho_k`.
    pub fn variance(&self, k: usize) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        (self.m2[k] / (self.count - 1) as f64).max(0.0)
    }

    pub fn covariance(&self, k: usize) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        self.comoment[k] / (self.count - 1) as f64
    }

    /// Correlation of `log rho_k` with `log r`; 0 when either has no spread.
    pub fn correlation(&self, k: usize) -> f64 {
        let denom = (self.m2[k] * self.m2_r).sqrt();
        if denom > 0.0 {
            (self.comoment[k] / denom).clamp(-1.0, 1.0)
        } else {
            0.0
        }
    }

    /// Stored per-iteration factor logs.
    pub fn window(&self) -> &[Vec<f64>] {
        &self.window
    }

    /// `log r` of each stored iteration.
    pub fn window_totals(&self) -> &[f64] {
        &self.window_totals
    }

    /// One CSV row per factor.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("factor,tests,passes,success_rate,mean,variance,correlation,cost_weight\n");
        for k in 0..self.n_factors() {
            let _ = writeln!(
                out,
                "{k},{},{},{},{},{},{},{}",
                self.tests[k],
                self.passes[k],
                self.success_rate(k),
                self.mean(k),
                self.variance(k),
                self.correlation(k),
                self.cost_weights[k]
            );
        }
        out
    }
}

/// Free-function form of [`FactorStats::record`].
pub fn record_iteration(mut stats: FactorStats, logs: &[f64], total_log_r: f64) -> FactorStats {
    stats.record(logs, total_log_r);
    stats
}

fn tie_break(stats: &FactorStats, a: usize, b: usize) -> Ordering {
    stats.cost_weights[a]
        .total_cmp(&stats.cost_weights[b])
        .then(a.cmp(&b))
}

/// Factor ids sorted by `criterion`; ties go to the cheaper factor, then the lower id.
pub fn rank_factors(stats: &FactorStats, criterion: Criterion) -> Result<Vec<usize>> {
    if stats.count < 2 {
        return Err(config_err("ranking needs at least two observations per factor"));
    }
    let key = |k: usize| match criterion {
        Criterion::SuccessRateAsc => stats.success_rate(k),
        Criterion::VarianceDesc => -stats.variance(k),
        Criterion::CorrelationDesc => -stats.correlation(k),
    };
    let mut ids: Vec<usize> = (0..stats.n_factors()).collect();
    ids.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then_with(|| tie_break(stats, a, b)));
    Ok(ids)
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    let denom = (saa * sbb).sqrt();
    if denom > 0.0 {
        (sab / denom).clamp(-1.0, 1.0)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateSelection {
    /// Selected ids in the order they were added.
    pub ids: Vec<usize>,
    pub achieved_corr: f64,
    /// Correlation after each addition.
    pub path: Vec<f64>,
}

pub const DEFAULT_TARGET_CORR: f64 = 0.85;
pub const DEFAULT_MAX_FRACTION: f64 = 0.10;
pub const DEFAULT_EPSILON: f64 = 0.01;

/// Greedy forward selection of a surrogate block maximising the correlation of its
/// summed log with `log r` over the stored window. Stops once the target is reached,
/// once the best addition improves by less than `epsilon` (that factor is not added),
/// or at `max(1, floor(max_fraction d))` factors.
pub fn forward_select_surrogate(
    stats: &FactorStats,
    target_corr: f64,
    max_fraction: f64,
    epsilon: f64,
) -> Result<SurrogateSelection> {
    let window = stats.window();
    if window.is_empty() {
        return Err(config_err("surrogate selection needs a non-empty adaptation window"));
    }
    if !(target_corr > 0.0 && target_corr <= 1.0) || !(max_fraction > 0.0 && max_fraction <= 1.0) {
        return Err(config_err("target_corr and max_fraction must lie in (0, 1]"));
    }
    let d = stats.n_factors();
    let cap = ((max_fraction * d as f64).floor() as usize).max(1);
    let totals = stats.window_totals();
    let mut pooled = vec![0.0; window.len()];
    let mut chosen = vec![false; d];
    let mut selection = SurrogateSelection {
        ids: Vec::new(),
        achieved_corr: 0.0,
        path: Vec::new(),
    };
    let mut trial = vec![0.0; window.len()];
    while selection.ids.len() < cap.min(d) {
        let mut best: Option<(usize, f64)> = None;
        for k in (0..d).filter(|&k| !chosen[k]) {
            for (t, (p, row)) in trial.iter_mut().zip(pooled.iter().zip(window)) {
                *t = p + row[k];
            }
            let c = pearson(&trial, totals);
            let better = match best {
                None => true,
                Some((b, bc)) => c > bc || (c == bc && tie_break(stats, k, b) == Ordering::Less),
            };
            if better {
                best = Some((k, c));
            }
        }
        let Some((k, c)) = best else { break };
        if !selection.ids.is_empty() && c - selection.achieved_corr < epsilon {
            break;
        }
        chosen[k] = true;
        for (p, row) in pooled.iter_mut().zip(window) {
            *p += row[k];
        }
        selection.ids.push(k);
        selection.achieved_corr = c;
        selection.path.push(c);
        if c >= target_corr {
            break;
        }
    }
    Ok(selection)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdaptationSchedule {
    pub adapt_iters: u64,
    pub frozen: bool,
}

impl AdaptationSchedule {
    pub fn new(adapt_iters: u64) -> Self {
        Self {
            adapt_iters,
            frozen: adapt_iters == 0,
        }
    }
}

/// Surrogate ids first, then the remaining ids, each in `ranking` order.
pub fn frozen_ordering(ranking: &[usize], surrogate: &[usize]) -> Vec<usize> {
    let in_surrogate = |k: &usize| surrogate.contains(k);
    ranking
        .iter()
        .copied()
        .filter(in_surrogate)
        .chain(ranking.iter().copied().filter(|k| !in_surrogate(k)))
        .collect()
}

/// How the frozen kernel is laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreezeMode {
    /// The surrogate block is stage one, the other factors stage two.
    Surrogate,
    /// Factors reordered by the criterion, one stage each.
    Order,
}

impl FreezeMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "surrogate" => Ok(FreezeMode::Surrogate),
            "order" => Ok(FreezeMode::Order),
            _ => Err(config_err(format!("unknown ranking mode `{s}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FreezeMode::Surrogate => "surrogate",
            FreezeMode::Order => "order",
        }
    }
}

/// Result of freezing: the new kernel layout and the selected surrogate.
#[derive(Debug, Clone, PartialEq)]
pub struct FreezeOutcome {
    pub config: KernelConfig,
    pub ranking: Vec<usize>,
    pub surrogate: Option<SurrogateSelection>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionSettings {
    pub criterion: Criterion,
    pub mode: FreezeMode,
    pub target_corr: f64,
    pub max_fraction: f64,
    pub epsilon: f64,
}

impl Default for SelectionSettings {
    fn default() -> Self {
        Self {
            criterion: Criterion::CorrelationDesc,
            mode: FreezeMode::Surrogate,
            target_corr: DEFAULT_TARGET_CORR,
            max_fraction: DEFAULT_MAX_FRACTION,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// Ends the adaptation phase and fixes the kernel layout. With no observations
/// the configured layout is kept.
pub fn freeze(
    schedule: &mut AdaptationSchedule,
    stats: &FactorStats,
    config: &KernelConfig,
    settings: &SelectionSettings,
) -> Result<FreezeOutcome> {
    schedule.frozen = true;
    if stats.count < 2 {
        return Ok(FreezeOutcome {
            config: config.clone(),
            ranking: config.ordering.clone(),
            surrogate: None,
        });
    }
    let ranking = rank_factors(stats, settings.criterion)?;
    let d = ranking.len();
    let mut out = config.clone();
    let surrogate = match settings.mode {
        FreezeMode::Order => {
            out = out.with_ordering(ranking.clone()).with_stage_sizes(vec![1; d]);
            None
        }
        FreezeMode::Surrogate => {
            let sel = forward_select_surrogate(stats, settings.target_corr, settings.max_fraction, settings.epsilon)?;
            let s = sel.ids.len();
            let sizes = if s < d { vec![s, d - s] } else { vec![d] };
            out = out.with_ordering(frozen_ordering(&ranking, &sel.ids)).with_stage_sizes(sizes);
            Some(sel)
        }
    };
    Ok(FreezeOutcome {
        config: out,
        ranking,
        surrogate,
    })
}
