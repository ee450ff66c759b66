//! Three-component Gaussian mixture under a Monte Carlo Jeffreys prior. The expensive
//! prior is bundled with a small holdout of the likelihood in the second stage.

use delayed_acceptance::diagnostics::drift_z;
use delayed_acceptance::models::{mixture_jeffreys_model, MixtureParams};
use delayed_acceptance::{run_chain, AcceptanceTarget, ChainSettings, KernelConfig, ProposalSpec, Variant};

fn main() -> delayed_acceptance::Result<()> {
    let model = mixture_jeffreys_model(500, 500, 0.05, 1)?;
    println!("cost weights {:?}", model.cost_weights());
    let settings = ChainSettings {
        iterations: 20_000,
        burn_in: 3_000,
        a_target: AcceptanceTarget::Fixed(0.234),
        ..ChainSettings::default()
    };
    let config = KernelConfig::new(Variant::Da, 2, ProposalSpec::random_walk(0.3, model.dim)?);
    let r = run_chain(&model, &config, &settings, 1, 0)?;
    let mut sum = MixtureParams {
        weights: vec![0.0; 3],
        means: vec![0.0; 3],
        sds: vec![0.0; 3],
    };
    for x in &r.trace.samples {
        let mut p = MixtureParams::from_unconstrained(x.as_slice());
        // Label by ordered means for reporting only.
        let mut idx: Vec<usize> = (0..3).collect();
        idx.sort_by(|&a, &b| p.means[a].total_cmp(&p.means[b]));
        p = MixtureParams {
            weights: idx.iter().map(|&k| p.weights[k]).collect(),
            means: idx.iter().map(|&k| p.means[k]).collect(),
            sds: idx.iter().map(|&k| p.sds[k]).collect(),
        };
        for k in 0..3 {
            sum.weights[k] += p.weights[k];
            sum.means[k] += p.means[k];
            sum.sds[k] += p.sds[k];
        }
    }
    let n = r.trace.len() as f64;
    println!(
        "acceptance {:.3}, rejections by stage {:?}",
        r.report.acceptance_rate, r.report.stage_histogram
    );
    for k in 0..3 {
        println!(
            "component {k}: weight {:.3}, mean {:.2}, sd {:.2}",
            sum.weights[k] / n,
            sum.means[k] / n,
            sum.sds[k] / n
        );
    }
    println!("drift z of first coordinate {:.2}", drift_z(&r.trace.coordinate(0))?);
    Ok(())
}
