//! ESS, autocorrelation, ESJD and the drift test on synthetic series.

use delayed_acceptance::diagnostics::{acf, drift_z, ess_estimate, esjd, mc_standard_error};
use delayed_acceptance::StateVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> delayed_acceptance::Result<()> {
    let n = 20_000;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for phi in [0.0, 0.5, 0.9, -0.5] {
        let mut x = 0.0;
        let series: Vec<f64> = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                x = phi * x + z;
                x
            })
            .collect();
        let e = ess_estimate(&series)?;
        let theory = n as f64 * (1.0 - phi) / (1.0 + phi);
        println!(
            "AR(1) phi {phi:>4}: ESS {:>8.0} (theory {theory:>8.0}), acf[1..4] {:.3?}, se {:.4}, super-efficient {}",
            e.ess,
            &acf(&series, 3)?[1..],
            mc_standard_error(&series)?,
            e.super_efficient
        );
    }
    let walk: Vec<StateVector> = [0.0, 1.0, 1.0, 3.0].iter().map(|&v| StateVector::new(vec![v])).collect();
    println!("esjd(0, 1, 1, 3) = {}", esjd(&walk, None));
    let trending: Vec<f64> = (0..2_000).map(|i| if i < 500 { 1.0 } else { 0.0 } + (i as f64 * 0.7).sin()).collect();
    println!("drift z of a series with a shifted start {:.2}", drift_z(&trending)?);
    Ok(())
}
