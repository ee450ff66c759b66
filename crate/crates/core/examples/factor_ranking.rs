//! Ranking likelihood blocks of a logistic regression and freezing a surrogate stage.

use delayed_acceptance::models::logistic_model;
use delayed_acceptance::ranking::{rank_factors, Criterion};
use delayed_acceptance::{run_chain, AcceptanceTarget, ChainSettings, KernelConfig, ProposalSpec, Variant};

fn main() -> delayed_acceptance::Result<()> {
    let model = logistic_model(5_000, 10, 10, 1)?;
    let n = model.n_factors();
    let proposal = ProposalSpec::random_walk(0.05, model.dim)?;
    let settings = ChainSettings {
        iterations: 10_000,
        burn_in: 3_000,
        adapt_iters: 2_000,
        a_target: AcceptanceTarget::Auto,
        ..ChainSettings::default()
    };
    let r = run_chain(&model, &KernelConfig::new(Variant::Da, n, proposal), &settings, 3, 0)?;
    let stats = r.factor_stats.as_ref().expect("ranking ran");
    for c in [Criterion::SuccessRateAsc, Criterion::VarianceDesc, Criterion::CorrelationDesc] {
        let top: Vec<usize> = rank_factors(stats, c)?.into_iter().take(5).collect();
        println!("{:<17} top factors {top:?}", c.name());
    }
    if let Some(sel) = &r.selection {
        println!(
            "surrogate {:?} (achieved correlation {:.3}, path {:.3?})",
            sel.ids, sel.achieved_corr, sel.path
        );
    }
    println!(
        "stages {:?}, delta_hat {:.4}, a_target {:.4}, acceptance {:.3}, factor evals/iter {:.1} of {n}",
        r.config.stage_sizes,
        r.delta_hat,
        r.report.a_target.unwrap_or(f64::NAN),
        r.report.acceptance_rate,
        r.report.mean_factor_evals
    );
    Ok(())
}
