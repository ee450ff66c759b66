//! Exact transition matrices of the kernels on finite targets.
//!
//! The proposal is uniform over the other states, so `P(i, j) = alpha(i, j) / (m - 1)`
//! off the diagonal and the diagonal holds the rejection mass.

use crate::core::{ProposalFamily, ProposalSpec};
use crate::error::{config_err, Result};
use crate::kernel::{exact_acceptance, KernelConfig};
use crate::models::Model;

fn states_of(config: &KernelConfig) -> Result<usize> {
    match config.proposal.family {
        ProposalFamily::UniformDiscrete { states } if states >= 2 => Ok(states),
        _ => Err(config_err("enumeration needs a uniform discrete proposal over at least two states")),
    }
}

/// Normalised target probabilities of a discrete model.
pub fn stationary(model: &Model, states: usize) -> Vec<f64> {
    let logs: Vec<f64> = (0..states).map(|i| (model.log_target)(&[i as f64])).collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// `alpha(i, j)` for every ordered pair; the diagonal is left at 0.
pub fn acceptance_matrix(model: &Model, config: &KernelConfig) -> Result<Vec<Vec<f64>>> {
    let m = states_of(config)?;
    let spec: ProposalSpec = config.proposal;
    let mut a = vec![vec![0.0; m]; m];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            if i != j {
                let logs = model.ratio.log_factors(&[i as f64], &[j as f64], &spec)?;
                *cell = exact_acceptance(config, &logs)?;
            }
        }
    }
    Ok(a)
}

pub fn transition_matrix(model: &Model, config: &KernelConfig) -> Result<Vec<Vec<f64>>> {
    let m = states_of(config)?;
    let mut p = acceptance_matrix(model, config)?;
    for (i, row) in p.iter_mut().enumerate() {
        let mut off = 0.0;
        for (j, cell) in row.iter_mut().enumerate() {
            if i != j {
                *cell /= (m - 1) as f64;
                off += *cell;
            }
        }
        row[i] = 1.0 - off;
    }
    Ok(p)
}

/// `max_{i,j} |pi_i P_ij - pi_j P_ji|`.
pub fn detailed_balance_defect(pi: &[f64], p: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..pi.len() {
        for j in 0..pi.len() {
            worst = worst.max((pi[i] * p[i][j] - pi[j] * p[j][i]).abs());
        }
    }
    worst
}

/// `max_j |(pi P)_j - pi_j|`.
pub fn stationarity_defect(pi: &[f64], p: &[Vec<f64>]) -> f64 {
    (0..pi.len())
        .map(|j| ((0..pi.len()).map(|i| pi[i] * p[i][j]).sum::<f64>() - pi[j]).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Variant;
    use crate::models::{discrete_fixture, discrete_target};

    fn config(variant: Variant, k: usize, m: usize) -> KernelConfig {
        KernelConfig::new(variant, k, ProposalSpec::uniform_discrete(m))
    }

    #[test]
    fn mh_matrix_matches_hand_enumeration() {
        let model = discrete_fixture(3, 1);
        let p = transition_matrix(&model, &config(Variant::Mh, 1, 3)).unwrap();
        let pi = [0.2_f64, 0.3, 0.5];
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let expected = 0.5 * (pi[j] / pi[i]).min(1.0);
                    assert!((p[i][j] - expected).abs() < 1e-12);
                }
            }
            assert!((p[i].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(detailed_balance_defect(&pi, &p) < 1e-12);
    }

    #[test]
    fn da_is_reversible_under_every_ordering() {
        let model = discrete_fixture(3, 3);
        let pi = discrete_target(3);
        for ordering in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            let c = config(Variant::Da, 3, 3).with_ordering(ordering.to_vec());
            let p = transition_matrix(&model, &c).unwrap();
            assert!(detailed_balance_defect(&pi, &p) < 1e-12);
            assert!(stationarity_defect(&pi, &p) < 1e-12);
        }
    }

    #[test]
    fn da_off_diagonal_entries_are_below_mh() {
        let model = discrete_fixture(3, 2);
        let da = transition_matrix(&model, &config(Variant::Da, 2, 3)).unwrap();
        let mh = transition_matrix(&model, &config(Variant::Mh, 2, 3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(da[i][j] <= mh[i][j] + 1e-15);
                }
            }
        }
    }

    #[test]
    fn needs_a_discrete_proposal() {
        let model = discrete_fixture(3, 2);
        let c = KernelConfig::new(Variant::Da, 2, ProposalSpec::random_walk(1.0, 1).unwrap());
        assert!(transition_matrix(&model, &c).is_err());
    }
}
