//! Building a factorised target by hand: a cheap Student-t surrogate stage followed by
//! the residual to a Gaussian-mixture target.

use std::sync::Arc;

use delayed_acceptance::models::ExactPosterior;
use delayed_acceptance::{
    run_chain, AcceptanceTarget, ChainSettings, Factor, FactorKind, FactorizedRatio, KernelConfig, Model,
    ProposalSpec, StateVector, Variant,
};

fn log_target(x: f64) -> f64 {
    let a = -0.5 * (x - 1.0).powi(2);
    let b = -0.5 * (x + 1.0).powi(2);
    a.max(b) + (1.0 + (-(a - b).abs()).exp()).ln()
}

fn log_surrogate(x: f64) -> f64 {
    -2.5 * (1.0 + x * x / 4.0).ln()
}

fn main() -> delayed_acceptance::Result<()> {
    let model = Model {
        name: "t_then_mixture".into(),
        dim: 1,
        ratio: FactorizedRatio::new(vec![
            Factor::point(0, FactorKind::Surrogate, 1.0, |x| log_surrogate(x[0])),
            Factor::point(1, FactorKind::Residual, 20.0, |x| log_target(x[0]) - log_surrogate(x[0])),
        ]),
        initial: StateVector::zeros(1),
        gradient: None,
        log_target: Arc::new(|x: &[f64]| log_target(x[0])),
        exact: Some(ExactPosterior {
            mean: vec![0.0],
            variance: vec![2.0],
        }),
        data_checksum: 0,
    };
    let settings = ChainSettings {
        iterations: 100_000,
        burn_in: 2_000,
        a_target: AcceptanceTarget::Auto,
        ..ChainSettings::default()
    };
    for variant in [Variant::Mh, Variant::Da, Variant::DaClipped] {
        let config = KernelConfig::new(variant, 2, ProposalSpec::random_walk(2.0, 1)?).with_clip(0.2);
        let r = run_chain(&model, &config, &settings, 4, 0)?;
        let x = r.trace.coordinate(0);
        let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        println!(
            "{:<10} acceptance {:.3}, mean {:+.3}, E[x^2] {:.3} (exact 2), cost/iter {:.2}, ESS/cost {:.5}",
            variant.name(),
            r.report.acceptance_rate,
            r.report.means[0],
            var,
            r.report.cost_per_iteration,
            r.report.ess_per_cost
        );
    }
    Ok(())
}
