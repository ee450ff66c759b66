//! Monte Carlo agreement with closed-form posteriors, and cost counters.

use delayed_acceptance::core::mala_propose;
use delayed_acceptance::diagnostics::mc_standard_error;
use delayed_acceptance::scaling::{norm_cdf, norm_quantile};
use delayed_acceptance::models::{
    beta_binomial_model, gaussian_mala_model, logistic_model, mixture_jeffreys_model, normal_normal_model,
    standard_normal_model, MixtureParams, MIXTURE_MEANS,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use delayed_acceptance::{run_chain, AcceptanceTarget, ChainSettings, KernelConfig, Model, ProposalSpec, Variant};

fn variant_configs(n: usize, proposal: ProposalSpec) -> Vec<KernelConfig> {
    let mut grouped = KernelConfig::new(Variant::DaGrouped, n, proposal);
    if n >= 2 {
        grouped = grouped.with_groups(vec![n / 2, n - n / 2]);
    }
    let mut out = vec![
        KernelConfig::new(Variant::Mh, n, proposal),
        KernelConfig::new(Variant::Da, n, proposal),
        KernelConfig::new(Variant::DaMinPartial, n, proposal),
        grouped,
    ];
    if n >= 2 {
        out.push(KernelConfig::new(Variant::DaClipped, n, proposal).with_clip(0.5));
    }
    out
}

fn assert_matches_exact(model: &Model, config: &KernelConfig, settings: &ChainSettings, stream: u64) {
    let exact = model.exact.as_ref().expect("closed form");
    let r = run_chain(model, config, settings, 42, stream).unwrap();
    // Per-coordinate threshold with the family-wise error of a single 3 s.e. check.
    let k = norm_quantile(1.0 - norm_cdf(-3.0) / model.dim as f64);
    for j in 0..model.dim {
        let x = r.trace.coordinate(j);
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let sq: Vec<f64> = x.iter().map(|v| (v - exact.mean[j]).powi(2)).collect();
        let var = sq.iter().sum::<f64>() / n;
        let se_mean = mc_standard_error(&x).unwrap();
        let se_var = mc_standard_error(&sq).unwrap();
        assert!(
            (mean - exact.mean[j]).abs() <= k * se_mean,
            "{} {:?} coord {j}: mean {mean} vs {} (se {se_mean})",
            model.name,
            config.variant,
            exact.mean[j]
        );
        assert!(
            (var - exact.variance[j]).abs() <= k * se_var,
            "{} {:?} coord {j}: variance {var} vs {} (se {se_var})",
            model.name,
            config.variant,
            exact.variance[j]
        );
    }
}

fn settings(iterations: u64, target: f64) -> ChainSettings {
    ChainSettings {
        iterations,
        burn_in: 3_000,
        a_target: AcceptanceTarget::Fixed(target),
        ..ChainSettings::default()
    }
}

#[test]
fn normal_normal_variants_match_closed_form() {
    let model = normal_normal_model(false);
    let p = ProposalSpec::random_walk(2.4, 1).unwrap();
    for (i, c) in variant_configs(2, p).iter().enumerate() {
        assert_matches_exact(&model, c, &settings(100_000, 0.44), i as u64);
    }
}

#[test]
fn beta_binomial_variants_match_closed_form() {
    let model = beta_binomial_model(10).unwrap();
    let p = ProposalSpec::random_walk(0.1, 1).unwrap();
    for (i, c) in variant_configs(model.n_factors(), p).iter().enumerate() {
        assert_matches_exact(&model, c, &settings(100_000, 0.44), i as u64);
    }
}

#[test]
fn gaussian_mala_variants_match_closed_form() {
    let model = gaussian_mala_model(100, 10, 1).unwrap();
    let p = ProposalSpec::mala(0.1, 10).unwrap();
    for (i, c) in variant_configs(2, p).iter().enumerate() {
        assert_matches_exact(&model, c, &settings(100_000, 0.574), i as u64);
    }
}

#[test]
fn mala_correction_is_smaller_than_the_posterior_ratio() {
    let model = gaussian_mala_model(100, 10, 1).unwrap();
    let config = KernelConfig::new(Variant::Mh, 2, ProposalSpec::mala(0.1, 10).unwrap());
    let r = run_chain(&model, &config, &settings(10_000, 0.574), 3, 0).unwrap();
    let proposal = r.config.proposal;
    let grad = model.gradient.clone().expect("gradient");
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut l1, mut l2) = (Vec::new(), Vec::new());
    for x in &r.trace.samples {
        let (y, _) = mala_propose(x.as_slice(), &proposal, &*grad, &mut rng).unwrap();
        let logs = model.ratio.log_factors(x.as_slice(), y.as_slice(), &proposal).unwrap();
        l1.push(logs[0].abs());
        l2.push(logs[1].abs());
    }
    let median = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let (m1, m2) = (median(l1), median(l2));
    assert!(m2 < m1, "median |log rho2| {m2} vs |log rho1| {m1}");
}

#[test]
fn da_evaluates_fewer_factors_than_mh() {
    let cases: Vec<(Model, f64)> = vec![
        (beta_binomial_model(20).unwrap(), 0.1),
        (beta_binomial_model(100).unwrap(), 0.1),
        (logistic_model(1_000, 5, 10, 2).unwrap(), 0.1),
        (standard_normal_model(4), 1.0),
    ];
    for (model, scale) in cases {
        let n = model.n_factors();
        let config = KernelConfig::new(Variant::Da, n, ProposalSpec::random_walk(scale, model.dim).unwrap());
        let r = run_chain(&model, &config, &settings(5_000, 0.234), 1, 0).unwrap();
        if n > 2 && r.report.acceptance_rate < 1.0 {
            assert!(
                r.report.mean_factor_evals < n as f64,
                "{}: {} evals for {n} factors",
                model.name,
                r.report.mean_factor_evals
            );
        }
    }
}

#[test]
fn ranking_freezes_a_two_stage_layout_on_logistic() {
    let model = logistic_model(2_000, 5, 10, 3).unwrap();
    let n = model.n_factors();
    let config = KernelConfig::new(Variant::Da, n, ProposalSpec::random_walk(0.1, 5).unwrap());
    let s = ChainSettings {
        iterations: 2_000,
        burn_in: 1_000,
        adapt_iters: 1_000,
        a_target: AcceptanceTarget::Auto,
        ..ChainSettings::default()
    };
    let r = run_chain(&model, &config, &s, 8, 0).unwrap();
    let sel = r.selection.expect("surrogate selected");
    assert!(!sel.ids.is_empty() && sel.ids.len() <= n / 10);
    assert_eq!(r.config.stage_sizes, vec![sel.ids.len(), n - sel.ids.len()]);
    assert_eq!(&r.config.ordering[..sel.ids.len()], &sel.ids[..]);
    let delta = r.delta_hat;
    let weights = model.cost_weights();
    let expected: f64 = sel.ids.iter().map(|&k| weights[k]).sum::<f64>() / weights.iter().sum::<f64>();
    assert!((delta - expected).abs() < 1e-12);
    assert!(r.report.mean_factor_evals < n as f64);
}

#[test]
fn mixture_run_recovers_the_component_means() {
    let model = mixture_jeffreys_model(500, 500, 0.05, 1).unwrap();
    let config = KernelConfig::new(Variant::Da, 2, ProposalSpec::random_walk(0.3, model.dim).unwrap());
    let r = run_chain(&model, &config, &settings(20_000, 0.234), 5, 0).unwrap();
    let mut sums = [0.0; 3];
    let mut sq = [0.0; 3];
    for x in &r.trace.samples {
        let mut means = MixtureParams::from_unconstrained(x.as_slice()).means;
        means.sort_by(f64::total_cmp);
        for k in 0..3 {
            sums[k] += means[k];
            sq[k] += means[k] * means[k];
        }
    }
    let n = r.trace.len() as f64;
    for k in 0..3 {
        let mean = sums[k] / n;
        let sd = (sq[k] / n - mean * mean).max(0.0).sqrt();
        assert!(
            (mean - MIXTURE_MEANS[k]).abs() <= 3.0 * sd.max(0.05) + 1.0,
            "component {k}: posterior mean {mean} (sd {sd}) vs {}",
            MIXTURE_MEANS[k]
        );
    }
}
