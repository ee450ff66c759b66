//! Cost-aware efficiency functions, optimal acceptance rates and scale adaptation.

use crate::error::{config_err, Error, Result};

/// Standard normal CDF.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile: rational approximation refined by Halley steps.
/// Returns NaN outside `(0, 1)`.
pub fn norm_quantile(p: f64) -> f64 {
    if !(p > 0.0 && p < 1.0) {
        return f64::NAN;
    }
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383577518672690e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996,
        3.754408661907416,
    ];
    const LOW: f64 = 0.02425;
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let mut x = if p < LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    };
    for _ in 0..2 {
        let e = norm_cdf(x) - p;
        let u = e / norm_pdf(x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

/// How the cost of one iteration depends on the acceptance rate `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostModel {
    /// `delta + a`.
    Additive,
    /// `delta + a (1 - delta)`.
    Reuse,
}

impl CostModel {
    pub fn cost(self, delta: f64, a: f64) -> f64 {
        match self {
            CostModel::Additive => delta + a,
            CostModel::Reuse => delta + a * (1.0 - delta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    RwmAdditive,
    RwmReuse,
    MalaReuse,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::RwmAdditive, Family::RwmReuse, Family::MalaReuse];

    pub fn name(self) -> &'static str {
        match self {
            Family::RwmAdditive => "rwm-additive",
            Family::RwmReuse => "rwm-reuse",
            Family::MalaReuse => "mala-reuse",
        }
    }

    /// Accepts the full names plus `rwm` and `mala` for the default cost models.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rwm" => Ok(Family::RwmAdditive),
            "mala" => Ok(Family::MalaReuse),
            _ => Self::ALL
                .into_iter()
                .find(|f| f.name() == s)
                .ok_or_else(|| config_err(format!("unknown scaling family `{s}`"))),
        }
    }

    pub fn cost_model(self) -> CostModel {
        match self {
            Family::RwmAdditive => CostModel::Additive,
            Family::RwmReuse | Family::MalaReuse => CostModel::Reuse,
        }
    }

    /// Largest relative cost the family is defined for.
    pub fn max_delta(self) -> f64 {
        match self.cost_model() {
            CostModel::Additive => f64::INFINITY,
            CostModel::Reuse => 1.0,
        }
    }
}

fn check_domain(family: Family, delta: f64, a: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= family.max_delta()) {
        return Err(Error::Domain(format!("delta = {delta} is outside the range of {}", family.name())));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Domain(format!("acceptance rate {a} is outside (0, 1)")));
    }
    Ok(())
}

/// Efficiency of `family` at relative cost `delta` and acceptance rate `a`, up to a
/// positive factor that does not depend on `a`.
pub fn efficiency(family: Family, delta: f64, a: f64) -> Result<f64> {
    check_domain(family, delta, a)?;
    let z = norm_quantile(a / 2.0);
    let speed = match family {
        Family::RwmAdditive | Family::RwmReuse => z * z * a,
        Family::MalaReuse => a * z.abs().powf(2.0 / 3.0),
    };
    Ok(speed / family.cost_model().cost(delta, a))
}

/// Random-walk efficiency with additive cost: `Phi^-1(a/2)^2 a / (delta + a)`.
pub fn eff_rwm(delta: f64, a: f64) -> Result<f64> {
    efficiency(Family::RwmAdditive, delta, a)
}

/// Langevin efficiency with reuse cost: `a |Phi^-1(a/2)|^(2/3) / (delta + a (1 - delta))`.
pub fn eff_mala(delta: f64, a: f64) -> Result<f64> {
    efficiency(Family::MalaReuse, delta, a)
}

/// Scale shape at acceptance rate `a` for unit roughness: `-2 Phi^-1(a/2)` for the
/// random walk, its cube root for Langevin proposals.
pub fn scale_shape(family: Family, a: f64) -> f64 {
    let s = -2.0 * norm_quantile(a / 2.0);
    match family {
        Family::MalaReuse => s.cbrt(),
        _ => s,
    }
}

pub const A_MIN: f64 = 1e-4;
pub const A_MAX: f64 = 1.0 - 1e-4;

/// `(a*, l*_shape)` maximising the family's efficiency, by a coarse grid bracket
/// followed by golden-section search to `|Δa| < 1e-6`.
pub fn optimal_acceptance(delta: f64, family: Family) -> Result<(f64, f64)> {
    if !(delta > 0.0 && delta <= 1e4) {
        return Err(Error::Domain(format!("delta = {delta} is outside (0, 1e4]")));
    }
    let f = |a: f64| efficiency(family, delta, a);
    const GRID: usize = 400;
    let point = |i: usize| A_MIN + (A_MAX - A_MIN) * i as f64 / GRID as f64;
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..=GRID {
        let v = f(point(i))?;
        if v > best.1 {
            best = (i, v);
        }
    }
    if best.0 == 0 || best.0 == GRID {
        return Err(Error::Domain(format!(
            "no interior maximum for {} at delta = {delta}",
            family.name()
        )));
    }
    let (mut lo, mut hi) = (point(best.0 - 1), point(best.0 + 1));
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while hi - lo > 1e-8 {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d)?;
        }
    }
    let a = 0.5 * (lo + hi);
    Ok((a, scale_shape(family, a)))
}

/// Relative cost of the first stage: `sum_{k in stage1} w_k / sum_k w_k`.
pub fn estimate_delta(cost_weights: &[f64], stage1_ids: &[usize]) -> Result<f64> {
    let total: f64 = cost_weights.iter().sum();
    if total <= 0.0 {
        return Err(config_err("total cost weight is zero"));
    }
    let first: f64 = stage1_ids.iter().map(|&k| cost_weights[k]).sum();
    Ok(first / total)
}

/// Robbins-Monro adaptation of the proposal scale towards a target acceptance rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingState {
    pub scale: f64,
    pub a_target: f64,
    pub delta_hat: f64,
    pub step_count: u64,
    pub frozen: bool,
}

pub const ADAPT_EXPONENT: f64 = 0.6;

impl ScalingState {
    pub fn new(scale: f64, a_target: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(config_err(format!("scale must be positive, got {scale}")));
        }
        if !(a_target > 0.0 && a_target < 1.0) {
            return Err(config_err(format!("target acceptance must lie in (0, 1), got {a_target}")));
        }
        Ok(Self {
            scale,
            a_target,
            delta_hat: 1.0,
            step_count: 0,
            frozen: false,
        })
    }

    pub fn gain(t: u64) -> f64 {
        (t as f64).powf(-ADAPT_EXPONENT)
    }

    /// `log l <- log l + t^-0.6 (1[accepted] - a_target)`; no-op once frozen.
    pub fn adapt(&mut self, accepted: bool) {
        if self.frozen {
            return;
        }
        self.step_count += 1;
        let signal = if accepted { 1.0 } else { 0.0 } - self.a_target;
        self.scale *= (Self::gain(self.step_count) * signal).exp();
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }
}

/// Free-function form of [`ScalingState::adapt`].
pub fn adapt_scale(mut state: ScalingState, accepted: bool) -> ScalingState {
    state.adapt(accepted);
    state
}
