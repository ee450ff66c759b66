//! Exact transition matrices on a five-state target: reversibility and the ordering
//! between kernels.

use delayed_acceptance::enumerate::{detailed_balance_defect, stationarity_defect, stationary, transition_matrix};
use delayed_acceptance::models::discrete_fixture;
use delayed_acceptance::{KernelConfig, ProposalSpec, Variant};

fn main() -> delayed_acceptance::Result<()> {
    let states = 5;
    let model = discrete_fixture(states, 3);
    let pi = stationary(&model, states);
    println!("target {pi:.3?}");
    let p = ProposalSpec::uniform_discrete(states);
    let kernels = [
        KernelConfig::new(Variant::Mh, 3, p),
        KernelConfig::new(Variant::Da, 3, p),
        KernelConfig::new(Variant::Da, 3, p).with_ordering(vec![2, 0, 1]),
        KernelConfig::new(Variant::DaClipped, 3, p).with_clip(0.25),
        KernelConfig::new(Variant::DaMinPartial, 3, p),
        KernelConfig::new(Variant::DaGrouped, 3, p).with_groups(vec![1, 2]),
    ];
    for k in &kernels {
        let t = transition_matrix(&model, k)?;
        let stay: f64 = (0..states).map(|i| pi[i] * t[i][i]).sum();
        println!(
            "{:<15} order {:?}: balance defect {:.1e}, stationarity defect {:.1e}, P(stay) {:.4}",
            k.variant.name(),
            k.ordering,
            detailed_balance_defect(&pi, &t),
            stationarity_defect(&pi, &t),
            stay
        );
    }
    Ok(())
}
