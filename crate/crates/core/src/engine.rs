//! Payoff arithmetic for the layered penetration game.
//!
//! An attack succeeds only if it penetrates every layer, so the target
//! probability is the product of per-layer probabilities. The attacker nets
//! the benefit weighted by that probability minus the attack cost; the
//! defender keeps the complementary share of the asset minus the defense
//! cost. Both sides value the asset at the same shared `benefit` figure —
//! a single abstract currency with no unit conversion.

use serde::{Deserialize, Serialize};

use crate::scenario::{Budget, Scenario, ValidationIssue, validate_scenario};

/// Dense per-cell payoffs for every (attack, defense) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityMatrices {
    /// Attacker utility, indexed `[attack][defense]`.
    pub u_a: Vec<Vec<f64>>,
    /// Defender utility, same shape.
    pub u_d: Vec<Vec<f64>>,
    /// Probability the attack reaches the target, same shape.
    pub p_target: Vec<Vec<f64>>,
    /// Asset value the matrices were built from, kept for auditability.
    pub benefit: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("{what} index {index} out of range (count {count})")]
    IndexOutOfRange { what: &'static str, index: usize, count: usize },
    #[error("scenario is invalid: {0:?}")]
    InvalidScenario(Vec<ValidationIssue>),
    #[error("utility identity violated at cell ({attack},{defense}): u_a+u_d = {got}, expected {expected}")]
    IdentityViolation { attack: usize, defense: usize, got: f64, expected: f64 },
}

fn check_indices(s: &Scenario, attack: usize, defense: usize) -> Result<(), EngineError> {
    if attack >= s.attack_count() {
        return Err(EngineError::IndexOutOfRange {
            what: "attack",
            index: attack,
            count: s.attack_count(),
        });
    }
    if defense >= s.defense_count() {
        return Err(EngineError::IndexOutOfRange {
            what: "defense",
            index: defense,
            count: s.defense_count(),
        });
    }
    Ok(())
}

/// Probability that attack `i` against defense `j` penetrates every layer.
pub fn target_probability(s: &Scenario, attack: usize, defense: usize) -> Result<f64, EngineError> {
    check_indices(s, attack, defense)?;
    let mut p = 1.0;
    for layer in 0..s.layer_count() {
        p *= s.penetration.values[layer][attack][defense];
    }
    Ok(p)
}

/// Attacker payoff: benefit weighted by full-penetration probability,
/// minus the attack cost.
pub fn attacker_utility(s: &Scenario, attack: usize, defense: usize) -> Result<f64, EngineError> {
    let p = target_probability(s, attack, defense)?;
    Ok(s.benefit * p - s.attack_cost.values[attack][defense])
}

/// Defender payoff: the asset share kept, minus the defense cost.
pub fn defender_utility(s: &Scenario, attack: usize, defense: usize) -> Result<f64, EngineError> {
    let p = target_probability(s, attack, defense)?;
    Ok(s.benefit * (1.0 - p) - s.defense_cost.values[attack][defense])
}

/// Materialize the full payoff matrices.
///
/// Each cell equals the corresponding scalar call. The build cross-checks
/// the accounting identity `u_a + u_d = benefit - C_a - C_d` per cell at
/// 1e-9 relative tolerance and fails if it does not hold.
pub fn build_matrices(s: &Scenario) -> Result<UtilityMatrices, EngineError> {
    let errors: Vec<ValidationIssue> = validate_scenario(s)
        .into_iter()
        .filter(|i| i.severity == crate::scenario::Severity::Error)
        .collect();
    if !errors.is_empty() {
        return Err(EngineError::InvalidScenario(errors));
    }

    let (n_a, n_d) = (s.attack_count(), s.defense_count());
    let mut u_a = vec![vec![0.0; n_d]; n_a];
    let mut u_d = vec![vec![0.0; n_d]; n_a];
    let mut p_target = vec![vec![0.0; n_d]; n_a];
    for i in 0..n_a {
        for j in 0..n_d {
            u_a[i][j] = attacker_utility(s, i, j)?;
            u_d[i][j] = defender_utility(s, i, j)?;
            p_target[i][j] = target_probability(s, i, j)?;

            let expected = s.benefit - s.attack_cost.values[i][j] - s.defense_cost.values[i][j];
            let got = u_a[i][j] + u_d[i][j];
            let scale = expected.abs().max(1.0);
            if (got - expected).abs() > 1e-9 * scale {
                return Err(EngineError::IdentityViolation { attack: i, defense: j, got, expected });
            }
        }
    }
    Ok(UtilityMatrices { u_a, u_d, p_target, benefit: s.benefit })
}

/// Defense indices whose worst-case deployment cost fits the budget.
///
/// Worst case means `max` over attack rows: the defender commits before
/// seeing the attack. The boundary is inclusive and the result may be
/// empty; callers decide whether an empty set is an error.
pub fn affordable_defenses(s: &Scenario, budget: &Budget) -> Vec<usize> {
    (0..s.defense_count())
        .filter(|&j| {
            let worst = (0..s.attack_count())
                .map(|i| s.defense_cost.values[i][j])
                .fold(f64::NEG_INFINITY, f64::max);
            budget.allows(worst)
        })
        .collect()
}
