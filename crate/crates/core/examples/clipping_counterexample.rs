//! A narrow surrogate makes plain delayed acceptance sticky in the tails; clipping the
//! first factor restores movement.

use delayed_acceptance::kernel::{step, ChainState};
use delayed_acceptance::models::counterexample_model;
use delayed_acceptance::{KernelConfig, ProposalSpec, StateVector, Variant};

fn acceptance_from(x: f64, config: &KernelConfig) -> delayed_acceptance::Result<f64> {
    let model = counterexample_model(0.5);
    let mut state = ChainState::new(&model, StateVector::new(vec![x]), 11, 0)?;
    let n = 50_000;
    let mut accepted = 0;
    for _ in 0..n {
        state.reset_to(&model, StateVector::new(vec![x]))?;
        accepted += step(&mut state, &model, config)?.accepted as usize;
    }
    Ok(accepted as f64 / n as f64)
}

fn main() -> delayed_acceptance::Result<()> {
    let proposal = ProposalSpec::random_walk(2.38, 1)?;
    let plain = KernelConfig::new(Variant::Da, 2, proposal);
    let mh = KernelConfig::new(Variant::Mh, 2, proposal);
    println!("   x      mh      da   da-clipped(c=0.1)");
    for x in [0.0, 2.0, 4.0, 8.0, 16.0] {
        let clipped = KernelConfig::new(Variant::DaClipped, 2, proposal).with_clip(0.1);
        println!(
            "{x:>4}  {:.4}  {:.4}  {:.4}",
            acceptance_from(x, &mh)?,
            acceptance_from(x, &plain)?,
            acceptance_from(x, &clipped)?
        );
    }
    Ok(())
}
