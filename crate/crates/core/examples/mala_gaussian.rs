//! MALA with the cheap posterior ratio tested before the costly proposal correction.

use delayed_acceptance::models::gaussian_mala_model;
use delayed_acceptance::{run_chain, AcceptanceTarget, ChainSettings, KernelConfig, ProposalSpec, Variant};

fn main() -> delayed_acceptance::Result<()> {
    let model = gaussian_mala_model(100, 10, 1)?;
    let exact = model.exact.clone().expect("conjugate model");
    let settings = ChainSettings {
        iterations: 50_000,
        burn_in: 3_000,
        a_target: AcceptanceTarget::Auto,
        ..ChainSettings::default()
    };
    for variant in [Variant::Mh, Variant::Da] {
        let config = KernelConfig::new(variant, 2, ProposalSpec::mala(0.1, model.dim)?);
        let r = run_chain(&model, &config, &settings, 5, 0)?;
        let err = r
            .report
            .means
            .iter()
            .zip(&exact.mean)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!(
            "{:>3}: a_target {:.3}, acceptance {:.3}, scale {:.3}, max |mean error| {err:.4}, cost/iter {:.2}, ESS/cost {:.4}",
            variant.name(),
            r.report.a_target.unwrap_or(f64::NAN),
            r.report.acceptance_rate,
            r.report.final_scale.unwrap_or(f64::NAN),
            r.report.cost_per_iteration,
            r.report.ess_per_cost
        );
    }
    Ok(())
}
