//! Experiment configuration and the `run`, `scaling-table` and `compare` drivers.
//!
//! Configuration files are flat `key = value` lines grouped under `[section]`
//! headers; `#` starts a comment. Recognised sections and keys:
//!
//! ```text
//! seed = 1                       # optional, required by `compare`
//! [model]       name, plus model parameters (see `build_model`)
//! [kernel]      variant, ordering, stage_sizes, clip_c, groups
//! [proposal]    family (random-walk | mala), scale
//! [adaptation]  adapt_iters, criterion, mode, target_corr, max_fraction, epsilon,
//!               a_target (off | auto | number), window_cap
//! [run]         iterations, burn_in, thin, chains, repetitions
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::core::{ProposalFamily, ProposalSpec};
use crate::diagnostics::EfficiencyReport;
use crate::error::{Error, Result};
use crate::kernel::{KernelConfig, Variant};
use crate::models::{
    beta_binomial_model, counterexample_model, discrete_fixture, gaussian_mala_model, logistic_model,
    mixture_jeffreys_model, normal_normal_model, standard_normal_model, Model,
};
use crate::ranking::{Criterion, FreezeMode, SelectionSettings};
use crate::sampler::{run_chain, run_chains, AcceptanceTarget, ChainResult, ChainSettings};
use crate::scaling::{optimal_acceptance, Family};

/// Raw `section.key -> (value, line)` entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub path: String,
    entries: BTreeMap<String, (String, usize)>,
}

const KNOWN_KEYS: &[&str] = &[
    "seed",
    "kernel.variant",
    "kernel.ordering",
    "kernel.stage_sizes",
    "kernel.clip_c",
    "kernel.groups",
    "proposal.family",
    "proposal.scale",
    "adaptation.adapt_iters",
    "adaptation.criterion",
    "adaptation.mode",
    "adaptation.target_corr",
    "adaptation.max_fraction",
    "adaptation.epsilon",
    "adaptation.a_target",
    "adaptation.window_cap",
    "run.iterations",
    "run.burn_in",
    "run.thin",
    "run.chains",
    "run.repetitions",
];

impl RawConfig {
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let mut section = String::new();
        let mut entries = BTreeMap::new();
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_string(),
            line,
            message,
        };
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(line_no, "unterminated section header".into()))?
                    .trim();
                if !["model", "kernel", "proposal", "adaptation", "run"].contains(&name) {
                    return Err(err(line_no, format!("unknown section `{name}`")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(line_no, "expected `key = value`".into()))?;
            let key = key.trim();
            let full = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            if section != "model" && !KNOWN_KEYS.contains(&full.as_str()) {
                return Err(err(line_no, format!("unknown key `{full}`")));
            }
            if entries.insert(full.clone(), (value.trim().to_string(), line_no)).is_some() {
                return Err(err(line_no, format!("duplicate key `{full}`")));
            }
        }
        Ok(Self {
            path: path.to_string(),
            entries,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    fn typed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(Some).map_err(|e| Error::Parse {
                path: self.path.clone(),
                line: *line,
                message: format!("`{key}`: {e}"),
            }),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<usize>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|e| Error::Parse {
                    path: self.path.clone(),
                    line: *line,
                    message: format!("`{key}`: {e}"),
                }),
        }
    }

    fn model_params(&self) -> BTreeMap<String, String> {
        self.entries
            .iter()
            .filter_map(|(k, (v, _))| k.strip_prefix("model.").map(|k| (k.to_string(), v.clone())))
            .collect()
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model_name: String,
    pub model_params: BTreeMap<String, String>,
    pub variant: Variant,
    pub ordering: Option<Vec<usize>>,
    pub stage_sizes: Option<Vec<usize>>,
    pub clip_c: f64,
    pub groups: Option<Vec<usize>>,
    pub proposal_family: ProposalFamily,
    pub scale: f64,
    pub settings: ChainSettings,
    pub chains: usize,
    pub repetitions: usize,
    pub seed: Option<u64>,
    pub source: String,
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let mut params = raw.model_params();
        let model_name = params
            .remove("name")
            .ok_or_else(|| Error::Config(format!("{}: missing `[model] name`", raw.path)))?;
        let variant = Variant::parse(raw.get("kernel.variant").unwrap_or("da"))?;
        let proposal_family = match raw.get("proposal.family").unwrap_or("random-walk") {
            "random-walk" | "rw" => ProposalFamily::RandomWalk,
            "mala" => ProposalFamily::Mala,
            other => return Err(Error::Config(format!("unknown proposal family `{other}`"))),
        };
        let defaults = SelectionSettings::default();
        let selection = SelectionSettings {
            criterion: raw
                .get("adaptation.criterion")
                .map(Criterion::parse)
                .transpose()?
                .unwrap_or(defaults.criterion),
            mode: raw
                .get("adaptation.mode")
                .map(FreezeMode::parse)
                .transpose()?
                .unwrap_or(defaults.mode),
            target_corr: raw.typed("adaptation.target_corr")?.unwrap_or(defaults.target_corr),
            max_fraction: raw.typed("adaptation.max_fraction")?.unwrap_or(defaults.max_fraction),
            epsilon: raw.typed("adaptation.epsilon")?.unwrap_or(defaults.epsilon),
        };
        let a_target = match raw.get("adaptation.a_target").unwrap_or("off") {
            "off" => AcceptanceTarget::Off,
            "auto" => AcceptanceTarget::Auto,
            _ => AcceptanceTarget::Fixed(raw.typed("adaptation.a_target")?.unwrap_or(0.234)),
        };
        let base = ChainSettings::default();
        let settings = ChainSettings {
            iterations: raw.typed("run.iterations")?.unwrap_or(base.iterations),
            burn_in: raw.typed("run.burn_in")?.unwrap_or(base.burn_in),
            thin: raw.typed("run.thin")?.unwrap_or(base.thin),
            adapt_iters: raw.typed("adaptation.adapt_iters")?.unwrap_or(base.adapt_iters),
            selection,
            a_target,
            window_cap: raw.typed("adaptation.window_cap")?.unwrap_or(base.window_cap),
        };
        Ok(Self {
            model_name,
            model_params: params,
            variant,
            ordering: raw.list("kernel.ordering")?,
            stage_sizes: raw.list("kernel.stage_sizes")?,
            clip_c: raw.typed("kernel.clip_c")?.unwrap_or(1.0),
            groups: raw.list("kernel.groups")?,
            proposal_family,
            scale: raw.typed("proposal.scale")?.unwrap_or(1.0),
            settings,
            chains: raw.typed("run.chains")?.unwrap_or(1),
            repetitions: raw.typed("run.repetitions")?.unwrap_or(1),
            seed: raw.typed("seed")?,
            source: raw.path.clone(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_raw(&RawConfig::load(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_raw(&RawConfig::parse(text, "<inline>")?)
    }

    pub fn build_model(&self) -> Result<Model> {
        build_model(&self.model_name, &self.model_params)
    }

    pub fn kernel_config(&self, model: &Model) -> Result<KernelConfig> {
        let proposal = match self.proposal_family {
            ProposalFamily::Mala => ProposalSpec::mala(self.scale, model.dim)?,
            _ if self.model_name == "discrete" => {
                let states = model_param(&self.model_params, "states", 3usize)?;
                ProposalSpec::uniform_discrete(states)
            }
            _ => ProposalSpec::random_walk(self.scale, model.dim)?,
        };
        let n = model.n_factors();
        let mut config = KernelConfig::new(self.variant, n, proposal).with_clip(self.clip_c);
        if let Some(o) = &self.ordering {
            config = config.with_ordering(o.clone());
        }
        if let Some(s) = &self.stage_sizes {
            config = config.with_stage_sizes(s.clone());
        }
        if let Some(g) = &self.groups {
            config = config.with_groups(g.clone());
        }
        config.validate(n)?;
        Ok(config)
    }
}

fn model_param<T: std::str::FromStr>(params: &BTreeMap<String, String>, key: &str, default: T) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|e| Error::Config(format!("model parameter `{key}`: {e}"))),
    }
}

/// Builds a bundled model by name. Parameters and defaults:
///
/// * `standard_normal`: `dim = 1`
/// * `counterexample`: `sigma2 = 0.5`
/// * `normal_normal`: `flat_prior = false`
/// * `beta_binomial`: `n_parts = 100`
/// * `logistic`: `n = 10000`, `d = 10`, `block = 10`, `data_seed = 1`
/// * `gaussian_mala`: `n_obs = 100`, `d = 10`, `data_seed = 1`
/// * `mixture_jeffreys`: `n = 500`, `mc_prior_samples = 500`, `p_holdout = 0.05`, `data_seed = 1`
/// * `discrete`: `states = 3`, `factors = 2`
pub fn build_model(name: &str, params: &BTreeMap<String, String>) -> Result<Model> {
    let allowed: &[&str] = match name {
        "standard_normal" => &["dim"],
        "counterexample" => &["sigma2"],
        "normal_normal" => &["flat_prior"],
        "beta_binomial" => &["n_parts"],
        "logistic" => &["n", "d", "block", "data_seed"],
        "gaussian_mala" => &["n_obs", "d", "data_seed"],
        "mixture_jeffreys" => &["n", "mc_prior_samples", "p_holdout", "data_seed"],
        "discrete" => &["states", "factors"],
        _ => return Err(Error::Config(format!("unknown model `{name}`"))),
    };
    if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::Config(format!("model `{name}` has no parameter `{k}`")));
    }
    let p = params;
    match name {
        "standard_normal" => Ok(standard_normal_model(model_param(p, "dim", 1)?)),
        "counterexample" => Ok(counterexample_model(model_param(p, "sigma2", 0.5)?)),
        "normal_normal" => Ok(normal_normal_model(model_param(p, "flat_prior", false)?)),
        "beta_binomial" => beta_binomial_model(model_param(p, "n_parts", 100)?),
        "logistic" => logistic_model(
            model_param(p, "n", 10_000)?,
            model_param(p, "d", 10)?,
            model_param(p, "block", 10)?,
            model_param(p, "data_seed", 1)?,
        ),
        "gaussian_mala" => gaussian_mala_model(
            model_param(p, "n_obs", 100)?,
            model_param(p, "d", 10)?,
            model_param(p, "data_seed", 1)?,
        ),
        "mixture_jeffreys" => mixture_jeffreys_model(
            model_param(p, "n", 500)?,
            model_param(p, "mc_prior_samples", 500)?,
            model_param(p, "p_holdout", 0.05)?,
            model_param(p, "data_seed", 1)?,
        ),
        _ => {
            let states = model_param(p, "states", 3usize)?;
            let factors = model_param(p, "factors", 2usize)?;
            if states < 2 || factors == 0 {
                return Err(Error::Config("discrete model needs states >= 2 and factors >= 1".into()));
            }
            Ok(discrete_fixture(states, factors))
        }
    }
}

/// What a `run` produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub model: String,
    pub data_checksum: u64,
    pub chains: Vec<ChainResult>,
    pub text: String,
}

fn summary_text(config: &ExperimentConfig, model: &Model, seed: u64, results: &[ChainResult]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "model = {}", model.name);
    let _ = writeln!(s, "data_checksum = {:016x}", model.data_checksum);
    let _ = writeln!(s, "factors = {}", model.n_factors());
    let _ = writeln!(s, "variant = {}", config.variant.name());
    let _ = writeln!(s, "seed = {seed}");
    let _ = writeln!(s, "chains = {}", results.len());
    let dim = model.dim;
    let mut pooled = vec![0.0; dim];
    let mut count = 0usize;
    for (i, r) in results.iter().enumerate() {
        let _ = writeln!(s, "chain_{i}.acceptance_rate = {}", r.report.acceptance_rate);
        let _ = writeln!(s, "chain_{i}.ess_min = {}", r.report.ess_min);
        let _ = writeln!(s, "chain_{i}.mean_factor_evals = {}", r.report.mean_factor_evals);
        let _ = writeln!(s, "chain_{i}.delta_hat = {}", r.delta_hat);
        if let Some(a) = r.trace.a_target {
            let _ = writeln!(s, "chain_{i}.a_target = {a}");
        }
        if let Some(sel) = &r.selection {
            let ids: Vec<String> = sel.ids.iter().map(|k| k.to_string()).collect();
            let _ = writeln!(s, "chain_{i}.surrogate = {}", ids.join(","));
            let _ = writeln!(s, "chain_{i}.surrogate_corr = {}", sel.achieved_corr);
        }
        for (p, m) in pooled.iter_mut().zip(&r.report.means) {
            *p += m * r.trace.len() as f64;
        }
        count += r.trace.len();
    }
    let means: Vec<String> = pooled.iter().map(|p| (p / count.max(1) as f64).to_string()).collect();
    let _ = writeln!(s, "pooled_mean = {}", means.join(","));
    if let Some(e) = &model.exact {
        let m: Vec<String> = e.mean.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "exact_mean = {}", m.join(","));
    }
    s
}

/// Runs the experiment and writes `chain_<i>/trace.csv`, `chain_<i>/report.txt`,
/// `chain_<i>/factor_stats.csv` (when ranking ran) and `summary.txt` under `out`.
pub fn run(config: &ExperimentConfig, seed: u64, out: &Path) -> Result<RunSummary> {
    let model = config.build_model()?;
    let kernel = config.kernel_config(&model)?;
    if config.chains == 0 {
        return Err(Error::Config("chains must be at least 1".into()));
    }
    let results = run_chains(&model, &kernel, &config.settings, seed, config.chains)?;
    fs::create_dir_all(out)?;
    for (i, r) in results.iter().enumerate() {
        let dir = out.join(format!("chain_{i}"));
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("trace.csv"), r.trace.to_csv())?;
        fs::write(dir.join("report.txt"), r.report.to_text())?;
        if let Some(stats) = &r.factor_stats {
            fs::write(dir.join("factor_stats.csv"), stats.to_csv())?;
        }
    }
    let text = summary_text(config, &model, seed, &results);
    fs::write(out.join("summary.txt"), &text)?;
    Ok(RunSummary {
        model: model.name.clone(),
        data_checksum: model.data_checksum,
        chains: results,
        text,
    })
}

/// Parses `log:A:B:N` (log-spaced), `lin:A:B:N` or a comma list; the result must be
/// positive and strictly ascending.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |m: &str| Error::Config(format!("grid `{spec}`: {m}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(&e.to_string()));
    let grid: Vec<f64> = if let Some(rest) = spec.strip_prefix("log:").or_else(|| spec.strip_prefix("lin:")) {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected KIND:START:END:COUNT"));
        }
        let (a, b) = (num(parts[0])?, num(parts[1])?);
        let n: usize = parts[2].trim().parse().map_err(|_| bad("count must be an integer"))?;
        if n < 2 {
            return Err(bad("count must be at least 2"));
        }
        let log = spec.starts_with("log:");
        if log && (a <= 0.0 || b <= 0.0) {
            return Err(bad("log grids need positive end points"));
        }
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                if log {
                    10f64.powf(a.log10() + t * (b.log10() - a.log10()))
                } else {
                    a + t * (b - a)
                }
            })
            .collect()
    } else {
        spec.split(',').map(num).collect::<Result<_>>()?
    };
    if grid.is_empty() || grid.iter().any(|&d| !(d > 0.0)) {
        return Err(bad("values must be positive"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad("values must be strictly ascending"));
    }
    Ok(grid)
}

/// CSV rows `delta,a_star,l_star_shape` for `family` over `grid`.
pub fn scaling_table(family: Family, grid: &[f64]) -> Result<String> {
    let mut out = String::from("delta,a_star,l_star_shape\n");
    for &delta in grid {
        let (a, l) = optimal_acceptance(delta, family)?;
        let _ = writeln!(out, "{delta},{a},{l}");
    }
    Ok(out)
}

/// Per-repetition figures of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionFigures {
    pub ess: f64,
    pub esjd: f64,
    pub cost: f64,
    pub wall: f64,
}

impl RepetitionFigures {
    fn from_report(r: &EfficiencyReport) -> Self {
        Self {
            ess: r.ess_min,
            esjd: r.esjd,
            cost: r.total_cost,
            wall: r.wall_time,
        }
    }

    fn ess_per_cost(&self) -> f64 {
        self.ess / self.cost
    }

    fn esjd_per_cost(&self) -> f64 {
        self.esjd / self.cost
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioSummary {
    pub name: &'static str,
    /// Mean over repetitions of the per-repetition ratio.
    pub mean: f64,
    pub median: f64,
    /// Ratio of the repetition means.
    pub ratio_of_means: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub source: String,
    pub variant: Variant,
    pub ratios: Vec<RatioSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub baseline: String,
    pub rows: Vec<ComparisonRow>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn ratio_summary(
    name: &'static str,
    base: &[RepetitionFigures],
    other: &[RepetitionFigures],
    f: impl Fn(&RepetitionFigures) -> f64,
) -> RatioSummary {
    let ratios: Vec<f64> = base.iter().zip(other).map(|(b, o)| f(o) / f(b)).collect();
    let mean_of = |v: &[RepetitionFigures]| v.iter().map(&f).sum::<f64>() / v.len() as f64;
    RatioSummary {
        name,
        mean: ratios.iter().sum::<f64>() / ratios.len() as f64,
        median: median(ratios),
        ratio_of_means: mean_of(other) / mean_of(base),
    }
}

fn repetitions(config: &ExperimentConfig, model: &Model, seed: u64) -> Result<Vec<RepetitionFigures>> {
    let kernel = config.kernel_config(model)?;
    (0..config.repetitions.max(1))
        .map(|rep| {
            run_chain(model, &kernel, &config.settings, seed, rep as u64)
                .map(|r| RepetitionFigures::from_report(&r.report))
        })
        .collect()
}

/// Runs every configuration `repetitions` times (stream = repetition index) and
/// reports ratios against the first one. Wall-clock ratios are informational.
pub fn compare(configs: &[ExperimentConfig], seed_override: Option<u64>) -> Result<Comparison> {
    if configs.len() < 2 {
        return Err(Error::Config("compare needs at least two configurations".into()));
    }
    let first = &configs[0];
    for c in &configs[1..] {
        if c.model_name != first.model_name || c.model_params != first.model_params {
            return Err(Error::Config(format!(
                "`{}` and `{}` use different models or data",
                first.source, c.source
            )));
        }
    }
    let n_reps = configs.iter().map(|c| c.repetitions.max(1)).min().unwrap_or(1);
    let model = first.build_model()?;
    let seed_of = |c: &ExperimentConfig| {
        seed_override
            .or(c.seed)
            .ok_or_else(|| Error::Config(format!("`{}` has no seed", c.source)))
    };
    let base = repetitions(&ExperimentConfig { repetitions: n_reps, ..first.clone() }, &model, seed_of(first)?)?;
    let mut rows = Vec::new();
    for c in configs {
        let figs = repetitions(&ExperimentConfig { repetitions: n_reps, ..c.clone() }, &model, seed_of(c)?)?;
        rows.push(ComparisonRow {
            source: c.source.clone(),
            variant: c.variant,
            ratios: vec![
                ratio_summary("ess", &base, &figs, |f| f.ess),
                ratio_summary("esjd", &base, &figs, |f| f.esjd),
                ratio_summary("cost", &base, &figs, |f| f.cost),
                ratio_summary("ess_per_cost", &base, &figs, RepetitionFigures::ess_per_cost),
                ratio_summary("esjd_per_cost", &base, &figs, RepetitionFigures::esjd_per_cost),
                ratio_summary("wall_time", &base, &figs, |f| f.wall),
            ],
        });
    }
    Ok(Comparison {
        baseline: first.source.clone(),
        rows,
    })
}

impl Comparison {
    /// Flat `key = value` text; `wall_time` ratios are not reproducible.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "baseline = {}", self.baseline);
        for (i, row) in self.rows.iter().enumerate() {
            let _ = writeln!(s, "config_{i}.source = {}", row.source);
            let _ = writeln!(s, "config_{i}.variant = {}", row.variant.name());
            for r in &row.ratios {
                let note = if r.name == "wall_time" { " # non-normative" } else { "" };
                let _ = writeln!(
                    s,
                    "config_{i}.{}.mean = {}{note}\nconfig_{i}.{}.median = {}{note}\nconfig_{i}.{}.ratio_of_means = {}{note}",
                    r.name, r.mean, r.name, r.median, r.name, r.ratio_of_means
                );
            }
        }
        s
    }

    pub fn ratio(&self, row: usize, name: &str) -> Option<&RatioSummary> {
        self.rows.get(row)?.ratios.iter().find(|r| r.name == name)
    }
}

/// Default output directory, overridable through `DA_BENCH_OUT_DIR`.
pub const OUT_DIR_ENV: &str = "DA_BENCH_OUT_DIR";

pub fn resolve_out_dir(cli: Option<PathBuf>) -> Result<PathBuf> {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => Ok(PathBuf::from(v)),
        _ => cli.ok_or_else(|| Error::Config(format!("no output directory: pass --out or set {OUT_DIR_ENV}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "
        seed = 3
        [model]
        name = normal_normal
        [kernel]
        variant = da
        [proposal]
        scale = 2.0   # trailing comment
        [run]
        iterations = 2000
    ";

    #[test]
    fn parses_a_basic_config() {
        let c = ExperimentConfig::parse(BASIC).unwrap();
        assert_eq!(c.model_name, "normal_normal");
        assert_eq!(c.variant, Variant::Da);
        assert_eq!(c.scale, 2.0);
        assert_eq!(c.settings.iterations, 2000);
        assert_eq!(c.seed, Some(3));
        assert_eq!(c.settings.a_target, AcceptanceTarget::Off);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = RawConfig::parse("[run]\niterations = 10\nbogus = 1\n", "x.cfg").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = RawConfig::parse("[run]\niterations = ten\n[model]\nname = normal_normal\n", "x.cfg")
            .and_then(|r| ExperimentConfig::from_raw(&r))
            .unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        assert!(RawConfig::parse("[nope]\n", "x").is_err());
        assert!(RawConfig::parse("seed = 1\nseed = 2\n", "x").is_err());
        assert!(ExperimentConfig::parse("[kernel]\nvariant = da\n").is_err());
    }

    #[test]
    fn unknown_models_and_parameters_are_rejected() {
        assert!(build_model("poisson", &BTreeMap::new()).is_err());
        let mut p = BTreeMap::new();
        p.insert("n_parts".to_string(), "7".to_string());
        assert!(build_model("beta_binomial", &p).is_err());
        p.insert("colour".to_string(), "red".to_string());
        assert!(build_model("beta_binomial", &p).is_err());
    }

    #[test]
    fn grids() {
        let g = parse_grid("log:0.01:1000:6").unwrap();
        assert_eq!(g.len(), 6);
        assert!((g[0] - 0.01).abs() < 1e-15 && (g[5] - 1000.0).abs() < 1e-9);
        assert!((g[2] - 1.0).abs() < 1e-12);
        assert_eq!(parse_grid("lin:0.1:0.5:5").unwrap().len(), 5);
        assert_eq!(parse_grid("0.1,1,10").unwrap(), vec![0.1, 1.0, 10.0]);
        assert!(parse_grid("1,0.5").is_err());
        assert!(parse_grid("0,1").is_err());
        assert!(parse_grid("log:0:1:3").is_err());
    }

    #[test]
    fn scaling_table_rows() {
        let t = scaling_table(Family::RwmAdditive, &[0.1, 1.0, 1000.0]).unwrap();
        let rows: Vec<&str> = t.lines().collect();
        assert_eq!(rows[0], "delta,a_star,l_star_shape");
        let last: Vec<f64> = rows[3].split(',').map(|v| v.parse().unwrap()).collect();
        assert!((last[1] - 0.234).abs() < 0.001);
        assert!(scaling_table(Family::MalaReuse, &[2.0]).is_err());
    }

    #[test]
    fn compare_with_itself_gives_unit_ratios() {
        let c = ExperimentConfig::parse(BASIC).unwrap();
        let cmp = compare(&[c.clone(), c], None).unwrap();
        for name in ["ess", "esjd", "cost", "ess_per_cost", "esjd_per_cost"] {
            let r = cmp.ratio(1, name).unwrap();
            assert_eq!((r.mean, r.median, r.ratio_of_means), (1.0, 1.0, 1.0));
        }
        assert!(cmp.to_text().contains("non-normative"));
    }

    #[test]
    fn compare_rejects_mismatched_models() {
        let a = ExperimentConfig::parse(BASIC).unwrap();
        let b = ExperimentConfig::parse(&BASIC.replace("normal_normal", "standard_normal")).unwrap();
        assert!(compare(&[a.clone(), b], None).is_err());
        assert!(compare(&[a], None).is_err());
    }

    #[test]
    fn run_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let c = ExperimentConfig::parse(BASIC).unwrap();
        let s = run(&c, 1, dir.path()).unwrap();
        let trace = fs::read_to_string(dir.path().join("chain_0/trace.csv")).unwrap();
        assert_eq!(trace.lines().count(), 2001);
        assert!(dir.path().join("chain_0/report.txt").exists());
        assert!(s.text.contains("model = normal_normal"));
    }
}
