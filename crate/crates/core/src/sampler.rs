//! Chain driver: ranking phase, scale adaptation, burn-in, recording and parallel chains.

use std::time::Instant;

use crate::core::ProposalFamily;
use crate::diagnostics::{efficiency_report, EfficiencyReport, Trace};
use crate::error::{Error, Result};
use crate::kernel::{full_step, step, ChainState, KernelConfig, Variant};
use crate::models::Model;
use crate::ranking::{freeze, AdaptationSchedule, FactorStats, SelectionSettings, SurrogateSelection};
use crate::scaling::{estimate_delta, optimal_acceptance, Family, ScalingState};

/// Target acceptance rate for scale adaptation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AcceptanceTarget {
    /// Keep the configured scale.
    Off,
    Fixed(f64),
    /// The optimal rate for the estimated relative cost of the first stage.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSettings {
    /// Recorded iterations after burn-in (before thinning).
    pub iterations: u64,
    pub burn_in: u64,
    pub thin: u64,
    /// Length of the ranking phase; 0 disables ranking.
    pub adapt_iters: u64,
    pub selection: SelectionSettings,
    pub a_target: AcceptanceTarget,
    /// Maximum number of stored per-iteration factor logs.
    pub window_cap: usize,
}

impl Default for ChainSettings {
    fn default() -> Self {
        Self {
            iterations: 10_000,
            burn_in: 0,
            thin: 1,
            adapt_iters: 0,
            selection: SelectionSettings::default(),
            a_target: AcceptanceTarget::Off,
            window_cap: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChainResult {
    pub trace: Trace,
    pub report: EfficiencyReport,
    /// Kernel layout used after burn-in, with the final scale.
    pub config: KernelConfig,
    pub selection: Option<SurrogateSelection>,
    pub factor_stats: Option<FactorStats>,
    pub delta_hat: f64,
}

/// Scaling family matched to the kernel and proposal.
pub fn scaling_family(variant: Variant, family: ProposalFamily) -> Family {
    match (variant, family) {
        (_, ProposalFamily::Mala) => Family::MalaReuse,
        (Variant::Mh, _) => Family::RwmReuse,
        _ => Family::RwmAdditive,
    }
}

/// Relative cost of the first stage of `config` (1 for plain MH).
pub fn stage_one_delta(model: &Model, config: &KernelConfig) -> Result<f64> {
    if config.variant == Variant::Mh {
        return Ok(1.0);
    }
    estimate_delta(&model.cost_weights(), config.stages()[0])
}

fn resolve_target(target: AcceptanceTarget, config: &KernelConfig, delta: f64) -> Result<Option<f64>> {
    Ok(match target {
        AcceptanceTarget::Off => None,
        AcceptanceTarget::Fixed(a) => Some(a),
        AcceptanceTarget::Auto => {
            let family = scaling_family(config.variant, config.proposal.family);
            let delta = delta.min(family.max_delta());
            Some(optimal_acceptance(delta, family)?.0)
        }
    })
}

/// Runs one chain from the model's initial state with generator stream `stream`.
pub fn run_chain(model: &Model, config: &KernelConfig, settings: &ChainSettings, seed: u64, stream: u64) -> Result<ChainResult> {
    config.validate(model.n_factors())?;
    if settings.thin == 0 {
        return Err(Error::Config("thin must be at least 1".into()));
    }
    let started = Instant::now();
    let mut config = config.clone();
    let mut state = ChainState::new(model, model.initial.clone(), seed, stream)?;
    let adaptive_scale = !matches!(config.proposal.family, ProposalFamily::UniformDiscrete { .. });

    let mut schedule = AdaptationSchedule::new(settings.adapt_iters);
    let burn_in = settings.burn_in.max(settings.adapt_iters);
    let mut stats = (!schedule.frozen).then(|| FactorStats::new(model.cost_weights(), settings.window_cap));

    // The ranking phase uses full evaluation and plain MH acceptance.
    let phase_one = KernelConfig {
        variant: Variant::Mh,
        ..config.clone()
    };
    let mut delta_hat = stage_one_delta(model, if schedule.frozen { &config } else { &phase_one })?;
    let mut scaling = match resolve_target(settings.a_target, if schedule.frozen { &config } else { &phase_one }, delta_hat)? {
        Some(a) if adaptive_scale => Some(ScalingState::new(config.proposal.scale, a)?),
        _ => None,
    };
    let mut selection = None;

    let mut trace = Trace::new(model.dim, model.n_factors(), config.n_stages(), model.cost_weights());
    trace.thin = settings.thin as usize;
    let mut evals_at_burn_in = vec![0u64; model.n_factors()];
    let total = burn_in + settings.iterations;
    for t in 0..total {
        if !schedule.frozen && t == settings.adapt_iters {
            let s = stats.as_ref().expect("statistics exist while adapting");
            let out = freeze(&mut schedule, s, &config, &settings.selection)?;
            config = out.config;
            selection = out.surrogate;
            delta_hat = stage_one_delta(model, &config)?;
            if let Some(sc) = scaling.as_mut() {
                if let Some(a) = resolve_target(settings.a_target, &config, delta_hat)? {
                    *sc = ScalingState::new(sc.scale, a)?;
                }
            }
            trace.n_stages = config.n_stages();
        }
        if t == burn_in {
            if let Some(sc) = scaling.as_mut() {
                sc.freeze();
            }
            evals_at_burn_in.clone_from(&state.factor_evals);
        }
        let result = if schedule.frozen {
            step(&mut state, model, &config)
        } else {
            full_step(&mut state, model, &config).map(|(outcome, logs)| {
                let total: f64 = logs.iter().sum();
                if let Some(s) = stats.as_mut() {
                    s.record(&logs, total);
                }
                outcome
            })
        };
        let outcome = result.map_err(|e| Error::AtIteration {
            iteration: t,
            source: Box::new(e),
        })?;
        if let Some(sc) = scaling.as_mut() {
            sc.adapt(outcome.accepted);
            config.proposal.scale = sc.scale;
        }
        if t >= burn_in && (t - burn_in) % settings.thin == 0 {
            trace.push(
                t,
                state.x.clone(),
                outcome.accepted,
                outcome.rejection_stage,
                outcome.factor_evals,
                outcome.cost_units,
                state.cost_units,
            );
        }
    }
    trace.factor_evals = state
        .factor_evals
        .iter()
        .zip(&evals_at_burn_in)
        .map(|(a, b)| a - b)
        .collect();
    trace.delta_hat = Some(delta_hat);
    trace.a_target = scaling.as_ref().map(|s| s.a_target);
    trace.final_scale = adaptive_scale.then_some(config.proposal.scale);
    trace.wall_time = started.elapsed().as_secs_f64();
    let report = efficiency_report(&trace)?;
    Ok(ChainResult {
        trace,
        report,
        config,
        selection,
        factor_stats: stats,
        delta_hat,
    })
}

/// Runs `n_chains` independent chains in parallel; chain `i` uses stream `i`.
pub fn run_chains(
    model: &Model,
    config: &KernelConfig,
    settings: &ChainSettings,
    seed: u64,
    n_chains: usize,
) -> Result<Vec<ChainResult>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..n_chains)
            .map(|i| scope.spawn(move || run_chain(model, config, settings, seed, i as u64)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain worker panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::ProposalSpec;
    use crate::diagnostics::mc_standard_error;
    use crate::models::{beta_binomial_model, discrete_fixture, normal_normal_model, standard_normal_model};

    #[test]
    fn runs_are_reproducible() {
        let model = beta_binomial_model(20).unwrap();
        let config = KernelConfig::new(Variant::Da, model.n_factors(), ProposalSpec::random_walk(0.1, 1).unwrap());
        let settings = ChainSettings {
            iterations: 3000,
            burn_in: 500,
            adapt_iters: 300,
            a_target: AcceptanceTarget::Auto,
            ..ChainSettings::default()
        };
        let a = run_chain(&model, &config, &settings, 42, 0).unwrap();
        let b = run_chain(&model, &config, &settings, 42, 0).unwrap();
        assert_eq!(a.trace.to_csv(), b.trace.to_csv());
        let c = run_chain(&model, &config, &settings, 42, 1).unwrap();
        assert_ne!(a.trace.to_csv(), c.trace.to_csv());
    }

    #[test]
    fn parallel_chains_match_sequential_ones() {
        let model = normal_normal_model(false);
        let config = KernelConfig::new(Variant::Da, 2, ProposalSpec::random_walk(2.0, 1).unwrap());
        let settings = ChainSettings {
            iterations: 2000,
            ..ChainSettings::default()
        };
        let par = run_chains(&model, &config, &settings, 7, 3).unwrap();
        for (i, r) in par.iter().enumerate() {
            let seq = run_chain(&model, &config, &settings, 7, i as u64).unwrap();
            assert_eq!(seq.trace.samples, r.trace.samples);
        }
    }

    #[test]
    fn trace_shape_and_thinning() {
        let model = normal_normal_model(false);
        let config = KernelConfig::new(Variant::Mh, 2, ProposalSpec::random_walk(2.0, 1).unwrap());
        let settings = ChainSettings {
            iterations: 1000,
            burn_in: 100,
            thin: 4,
            ..ChainSettings::default()
        };
        let r = run_chain(&model, &config, &settings, 1, 0).unwrap();
        assert_eq!(r.trace.len(), 250);
        assert_eq!(r.trace.iterations[0], 100);
        assert_eq!(r.trace.iterations[1], 104);
        assert_eq!(r.report.stage_histogram.len(), 1);
        assert_eq!(r.trace.factor_evals.iter().sum::<u64>(), 2 * 1000);
    }

    #[test]
    fn scale_adaptation_hits_the_target() {
        let model = standard_normal_model(10);
        let config = KernelConfig::new(Variant::Mh, 1, ProposalSpec::random_walk(0.5, 10).unwrap());
        let settings = ChainSettings {
            iterations: 10_000,
            burn_in: 90_000,
            a_target: AcceptanceTarget::Fixed(0.234),
            ..ChainSettings::default()
        };
        let r = run_chain(&model, &config, &settings, 3, 0).unwrap();
        let rate = r.report.acceptance_rate;
        assert!((0.20..=0.27).contains(&rate), "{rate}");
    }

    #[test]
    fn tuned_mh_recovers_standard_normal_mean() {
        let model = standard_normal_model(1);
        let config = KernelConfig::new(Variant::Mh, 1, ProposalSpec::random_walk(2.4, 1).unwrap());
        let settings = ChainSettings {
            iterations: 100_000,
            burn_in: 5_000,
            a_target: AcceptanceTarget::Fixed(0.234),
            ..ChainSettings::default()
        };
        let r = run_chain(&model, &config, &settings, 11, 0).unwrap();
        let x = r.trace.coordinate(0);
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        assert!(mean.abs() < 3.0 * mc_standard_error(&x).unwrap(), "{mean}");
    }

    #[test]
    fn auto_target_uses_stage_one_cost() {
        let model = beta_binomial_model(100).unwrap();
        let config = KernelConfig::new(Variant::Da, model.n_factors(), ProposalSpec::random_walk(0.1, 1).unwrap());
        let settings = ChainSettings {
            iterations: 500,
            burn_in: 500,
            a_target: AcceptanceTarget::Auto,
            ..ChainSettings::default()
        };
        let r = run_chain(&model, &config, &settings, 1, 0).unwrap();
        assert!((r.delta_hat - 1.0 / 101.0).abs() < 1e-15);
        let expected = optimal_acceptance(1.0 / 101.0, Family::RwmAdditive).unwrap().0;
        assert_eq!(r.trace.a_target, Some(expected));
    }

    #[test]
    fn frozen_discrete_kernel_keeps_its_layout() {
        let model = discrete_fixture(3, 4);
        let config = KernelConfig::new(Variant::Da, 4, ProposalSpec::uniform_discrete(3));
        let settings = ChainSettings {
            iterations: 1000,
            adapt_iters: 500,
            selection: SelectionSettings {
                max_fraction: 0.5,
                ..SelectionSettings::default()
            },
            ..ChainSettings::default()
        };
        let r = run_chain(&model, &config, &settings, 5, 0).unwrap();
        let sel = r.selection.unwrap();
        assert!(!sel.ids.is_empty() && sel.ids.len() <= 2);
        assert_eq!(&r.config.ordering[..sel.ids.len()], {
            let mut ids = sel.ids.clone();
            ids.sort_by_key(|k| r.config.ordering.iter().position(|x| x == k));
            ids
        }
        .as_slice());
        assert_eq!(r.config.stage_sizes, vec![sel.ids.len(), 4 - sel.ids.len()]);
    }

    #[test]
    fn errors_carry_the_iteration() {
        let mut model = standard_normal_model(1);
        model.ratio.factors[0] = crate::core::Factor::point(0, crate::core::FactorKind::LikelihoodBlock, 1.0, |x| {
            if x[0] > 3.0 {
                f64::NAN
            } else {
                -0.5 * x[0] * x[0]
            }
        });
        let config = KernelConfig::new(Variant::Mh, 1, ProposalSpec::random_walk(10.0, 1).unwrap());
        let err = run_chain(&model, &config, &ChainSettings::default(), 1, 0).unwrap_err();
        assert!(matches!(err, Error::AtIteration { .. }));
        assert!(err.to_string().contains("factor 0"));
    }
}
