//! Delayed acceptance on the normal-normal model: likelihood ratio first, prior second.

use delayed_acceptance::models::normal_normal_model;
use delayed_acceptance::{run_chain, AcceptanceTarget, ChainSettings, KernelConfig, ProposalSpec, Variant};

fn main() -> delayed_acceptance::Result<()> {
    let model = normal_normal_model(false);
    let proposal = ProposalSpec::random_walk(2.0, model.dim)?;
    let settings = ChainSettings {
        iterations: 50_000,
        burn_in: 2_000,
        a_target: AcceptanceTarget::Fixed(0.44),
        ..ChainSettings::default()
    };
    for variant in [Variant::Mh, Variant::Da] {
        let config = KernelConfig::new(variant, model.n_factors(), proposal);
        let r = run_chain(&model, &config, &settings, 7, 0)?;
        println!(
            "{:>3}: acceptance {:.3}, mean {:.4}, ESS {:.0}, factor evals/iter {:.3}, rejections by stage {:?}",
            variant.name(),
            r.report.acceptance_rate,
            r.report.means[0],
            r.report.ess_min,
            r.report.mean_factor_evals,
            r.report.stage_histogram
        );
    }
    let exact = model.exact.as_ref().expect("conjugate model");
    println!("exact posterior mean {:.4}, variance {:.4}", exact.mean[0], exact.variance[0]);
    Ok(())
}
