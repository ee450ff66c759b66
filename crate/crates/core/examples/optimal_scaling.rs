//! Optimal acceptance rate and scale as a function of the relative cost of the first stage.

use delayed_acceptance::experiment::{parse_grid, scaling_table};
use delayed_acceptance::scaling::{estimate_delta, optimal_acceptance, Family};

fn main() -> delayed_acceptance::Result<()> {
    print!("{}", scaling_table(Family::RwmAdditive, &parse_grid("log:0.01:1000:11")?)?);
    for family in [Family::RwmReuse, Family::MalaReuse] {
        println!("{}:", family.name());
        for delta in [0.01, 0.1, 0.5, 1.0] {
            let (a, l) = optimal_acceptance(delta, family)?;
            println!("  delta {delta:<5} a* {a:.4}  l* shape {l:.4}");
        }
    }
    // A surrogate made of 10 equally costly blocks out of 100.
    let weights = vec![1.0; 100];
    let ids: Vec<usize> = (0..10).collect();
    let delta = estimate_delta(&weights, &ids)?;
    println!(
        "10 of 100 blocks: delta_hat {delta}, a* {:.4}",
        optimal_acceptance(delta, Family::RwmAdditive)?.0
    );
    Ok(())
}
