//! Acceptance rate of delayed acceptance as the binomial likelihood is split into more blocks.

use delayed_acceptance::models::beta_binomial_model;
use delayed_acceptance::{run_chain, AcceptanceTarget, ChainSettings, KernelConfig, ProposalSpec, Variant};

fn main() -> delayed_acceptance::Result<()> {
    // Tune the random walk for plain MH first, then keep that scale for every split.
    let base = beta_binomial_model(1)?;
    let pilot = ChainSettings {
        iterations: 100,
        burn_in: 5_000,
        a_target: AcceptanceTarget::Fixed(0.44),
        ..ChainSettings::default()
    };
    let mh = KernelConfig::new(Variant::Mh, base.n_factors(), ProposalSpec::random_walk(0.1, 1)?);
    let scale = run_chain(&base, &mh, &pilot, 1, 0)?.trace.final_scale.unwrap_or(0.1);
    println!("MH-tuned scale {scale:.4}");

    let settings = ChainSettings {
        iterations: 100_000,
        ..ChainSettings::default()
    };
    for parts in [1, 10, 20, 50, 100] {
        let model = beta_binomial_model(parts)?;
        let config = KernelConfig::new(Variant::Da, model.n_factors(), ProposalSpec::random_walk(scale, 1)?);
        let r = run_chain(&model, &config, &settings, 2, 0)?;
        println!(
            "{parts:>3} blocks: acceptance {:.3}, posterior mean {:.5}, evals/iter {:.1} of {}",
            r.report.acceptance_rate,
            r.report.means[0],
            r.report.mean_factor_evals,
            model.n_factors()
        );
    }
    Ok(())
}
