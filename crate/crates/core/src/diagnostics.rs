//! Traces, autocorrelation, effective sample size, jumping distance and cost reports.

use std::fmt::Write as _;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::core::StateVector;
use crate::error::{Error, Result};

/// Recorded chain output after burn-in.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub dim: usize,
    pub iterations: Vec<u64>,
    pub samples: Vec<StateVector>,
    pub accepted: Vec<bool>,
    pub rejection_stages: Vec<Option<usize>>,
    /// Factor evaluations of each recorded step.
    pub step_evals: Vec<u32>,
    /// Chain cost (in cost units) after each recorded step.
    pub cumulative_cost: Vec<f64>,
    /// Cost of each recorded step.
    pub step_costs: Vec<f64>,
    pub thin: usize,
    /// Evaluations per factor id over the recorded steps.
    pub factor_evals: Vec<u64>,
    pub cost_weights: Vec<f64>,
    pub n_factors: usize,
    pub n_stages: usize,
    pub delta_hat: Option<f64>,
    pub a_target: Option<f64>,
    pub final_scale: Option<f64>,
    /// Informational only.
    pub wall_time: f64,
}

impl Trace {
    pub fn new(dim: usize, n_factors: usize, n_stages: usize, cost_weights: Vec<f64>) -> Self {
        Self {
            dim,
            thin: 1,
            factor_evals: vec![0; n_factors],
            cost_weights,
            n_factors,
            n_stages,
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        iteration: u64,
        x: StateVector,
        accepted: bool,
        rejection_stage: Option<usize>,
        evals: usize,
        step_cost: f64,
        cumulative_cost: f64,
    ) {
        self.iterations.push(iteration);
        self.samples.push(x);
        self.accepted.push(accepted);
        self.rejection_stages.push(rejection_stage);
        self.step_evals.push(evals as u32);
        self.step_costs.push(step_cost);
        self.cumulative_cost.push(cumulative_cost);
    }

    pub fn coordinate(&self, j: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[j]).collect()
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.accepted.iter().filter(|&&a| a).count() as f64 / self.len().max(1) as f64
    }

    pub fn total_cost(&self) -> f64 {
        self.step_costs.iter().sum()
    }

    /// CSV with columns `iteration,x0..,accepted,rejection_stage,cumulative_cost`;
    /// `rejection_stage` is -1 for accepted proposals.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * (24 * self.dim + 32));
        out.push_str(&csv_header(self.dim));
        out.push('\n');
        for i in 0..self.len() {
            let _ = write!(out, "{}", self.iterations[i]);
            for v in self.samples[i].iter() {
                let _ = write!(out, ",{v}");
            }
            let stage = self.rejection_stages[i].map_or(-1, |s| s as i64);
            let _ = writeln!(
                out,
                ",{},{stage},{}",
                self.accepted[i] as u8,
                self.cumulative_cost[i]
            );
        }
        out
    }
}

pub fn csv_header(dim: usize) -> String {
    let mut h = String::from("iteration");
    for j in 0..dim {
        let _ = write!(h, ",x{j}");
    }
    h.push_str(",accepted,rejection_stage,cumulative_cost");
    h
}

fn centred(series: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let c: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let ss: f64 = c.iter().map(|v| v * v).sum();
    if !(ss > 0.0) || !ss.is_finite() {
        return Err(Error::DegenerateSeries);
    }
    Ok((c, ss))
}

/// Sample autocorrelations at lags `0..=max_lag` via FFT.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if max_lag == 0 || series.len() <= max_lag {
        return Err(Error::Domain(format!(
            "need 1 <= max_lag < length, got max_lag = {max_lag}, length = {}",
            series.len()
        )));
    }
    let (c, ss) = centred(series)?;
    let n = c.len();
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = c.iter().map(|&v| Complex::new(v, 0.0)).collect();
    buf.resize(size, Complex::new(0.0, 0.0));
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for v in buf.iter_mut() {
        *v = Complex::new(v.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let scale = size as f64 * ss;
    let mut out: Vec<f64> = buf[..=max_lag].iter().map(|v| v.re / scale).collect();
    out[0] = 1.0;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EssEstimate {
    pub ess: f64,
    /// Integrated autocorrelation time.
    pub tau: f64,
    pub truncation_lag: usize,
    /// Set when the lag-one autocorrelation is negative (antithetic behaviour).
    pub super_efficient: bool,
}

pub const ESS_MIN_LENGTH: usize = 100;

/// Effective sample size with initial-positive truncation. Lag one is always
/// included, so antithetic chains report more than `n`; the estimate is capped at
/// `n log10 n`.
pub fn ess_estimate(series: &[f64]) -> Result<EssEstimate> {
    let n = series.len();
    if n < ESS_MIN_LENGTH {
        return Err(Error::Domain(format!("ESS needs at least {ESS_MIN_LENGTH} values, got {n}")));
    }
    let rho = acf(series, n - 1)?;
    let mut sum = rho[1];
    let mut lag = 1;
    while lag + 1 < n && rho[lag + 1] > 0.0 {
        lag += 1;
        sum += rho[lag];
    }
    let nf = n as f64;
    let tau = (1.0 + 2.0 * sum).max(1.0 / nf.log10());
    Ok(EssEstimate {
        ess: nf / tau,
        tau,
        truncation_lag: lag,
        super_efficient: rho[1] < 0.0,
    })
}

pub fn ess(series: &[f64]) -> Result<f64> {
    Ok(ess_estimate(series)?.ess)
}

/// Monte-Carlo standard error of the mean, `sd / sqrt(ESS)`.
pub fn mc_standard_error(series: &[f64]) -> Result<f64> {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((var / ess(series)?).sqrt())
}

/// Mean of `sum_i (x'_i - x_i)^2 / beta_i^2` over consecutive samples, repeats included.
pub fn esjd(samples: &[StateVector], beta: Option<&[f64]>) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let total: f64 = samples
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(w[1].iter())
                .enumerate()
                .map(|(i, (a, b))| {
                    let s = beta.map_or(1.0, |bs| bs[i]);
                    (b - a).powi(2) / (s * s)
                })
                .sum::<f64>()
        })
        .sum();
    total / (samples.len() - 1) as f64
}

/// Difference between the means of the first 10% and the last 50% of a series in
/// standard-error units. Large values flag transient behaviour.
pub fn drift_z(series: &[f64]) -> Result<f64> {
    let n = series.len();
    let a = &series[..n / 10];
    let b = &series[n / 2..];
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let se_a = mc_standard_error(a)?;
    let se_b = mc_standard_error(b)?;
    Ok((mean(a) - mean(b)) / (se_a * se_a + se_b * se_b).sqrt())
}

/// Summary of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyReport {
    pub iterations: usize,
    pub acceptance_rate: f64,
    /// Rejections per stage position.
    pub stage_histogram: Vec<u64>,
    pub ess: Vec<f64>,
    pub ess_min: f64,
    pub super_efficient: bool,
    pub esjd: f64,
    pub total_cost: f64,
    pub cost_per_iteration: f64,
    pub mean_factor_evals: f64,
    pub ess_per_cost: f64,
    pub esjd_per_cost: f64,
    pub ess_per_second: f64,
    pub esjd_per_second: f64,
    pub delta_hat: Option<f64>,
    pub a_target: Option<f64>,
    pub final_scale: Option<f64>,
    pub means: Vec<f64>,
    pub wall_time: f64,
}

pub fn efficiency_report(trace: &Trace) -> Result<EfficiencyReport> {
    if trace.is_empty() {
        return Err(Error::Domain("empty trace".into()));
    }
    let n = trace.len();
    let stages = trace
        .rejection_stages
        .iter()
        .flatten()
        .map(|s| s + 1)
        .max()
        .unwrap_or(0)
        .max(trace.n_stages.min(1));
    let mut hist = vec![0u64; stages];
    for s in trace.rejection_stages.iter().flatten() {
        hist[*s] += 1;
    }
    let mut ess_values = Vec::with_capacity(trace.dim);
    let mut super_efficient = false;
    let mut means = Vec::with_capacity(trace.dim);
    for j in 0..trace.dim {
        let col = trace.coordinate(j);
        means.push(col.iter().sum::<f64>() / n as f64);
        match ess_estimate(&col) {
            Ok(e) => {
                super_efficient |= e.super_efficient;
                ess_values.push(e.ess);
            }
            Err(Error::DegenerateSeries) => ess_values.push(0.0),
            Err(e) => return Err(e),
        }
    }
    let ess_min = ess_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let esjd_value = esjd(&trace.samples, None);
    let total_cost = trace.total_cost();
    let cost_per_iteration = total_cost / n as f64;
    let per = |num: f64, den: f64| if den > 0.0 { num / den } else { f64::INFINITY };
    Ok(EfficiencyReport {
        iterations: n,
        acceptance_rate: trace.acceptance_rate(),
        stage_histogram: hist,
        ess: ess_values,
        ess_min,
        super_efficient,
        esjd: esjd_value,
        total_cost,
        cost_per_iteration,
        mean_factor_evals: trace.step_evals.iter().map(|&e| e as f64).sum::<f64>() / n as f64,
        ess_per_cost: per(ess_min, total_cost),
        esjd_per_cost: per(esjd_value, cost_per_iteration),
        ess_per_second: per(ess_min, trace.wall_time),
        esjd_per_second: per(esjd_value * n as f64, trace.wall_time),
        delta_hat: trace.delta_hat,
        a_target: trace.a_target,
        final_scale: trace.final_scale,
        means,
        wall_time: trace.wall_time,
    })
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

impl EfficiencyReport {
    /// Flat `key = value` text. Wall-clock fields come last and start with `wall_`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "iterations = {}", self.iterations);
        let _ = writeln!(s, "acceptance_rate = {}", self.acceptance_rate);
        let hist: Vec<String> = self.stage_histogram.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "rejection_stage_histogram = {}", hist.join(","));
        let _ = writeln!(s, "mean = {}", join(&self.means));
        let _ = writeln!(s, "ess = {}", join(&self.ess));
        let _ = writeln!(s, "ess_min = {}", self.ess_min);
        let _ = writeln!(s, "super_efficient = {}", self.super_efficient);
        let _ = writeln!(s, "esjd = {}", self.esjd);
        let _ = writeln!(s, "total_cost = {}", self.total_cost);
        let _ = writeln!(s, "cost_per_iteration = {}", self.cost_per_iteration);
        let _ = writeln!(s, "mean_factor_evals = {}", self.mean_factor_evals);
        let _ = writeln!(s, "ess_per_cost = {}", self.ess_per_cost);
        let _ = writeln!(s, "esjd_per_cost = {}", self.esjd_per_cost);
        if let Some(d) = self.delta_hat {
            let _ = writeln!(s, "delta_hat = {d}");
        }
        if let Some(a) = self.a_target {
            let _ = writeln!(s, "a_target = {a}");
        }
        if let Some(l) = self.final_scale {
            let _ = writeln!(s, "scale = {l}");
        }
        let _ = writeln!(s, "wall_time_seconds = {}", self.wall_time);
        let _ = writeln!(s, "wall_ess_per_second = {}", self.ess_per_second);
        let _ = writeln!(s, "wall_esjd_per_second = {}", self.esjd_per_second);
        s
    }
}
