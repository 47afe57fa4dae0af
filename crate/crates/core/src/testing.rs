//! Deterministic random-instance generators for test suites.
//!
//! Feature-gated (`testing`) so downstream integration and acceptance
//! tests can share the same generator without it shipping in normal
//! builds. Everything is a pure function of the supplied RNG.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::scenario::{
    AttackStrategy, Budget, CostMatrix, DefenseStrategy, Layer, LayerKind, Mitigation,
    PenetrationTensor, Scenario,
};

/// Size and sampling bounds for [`random_scenario`].
#[derive(Debug, Clone, Copy)]
pub struct ScenarioLimits {
    pub max_layers: usize,
    pub max_attacks: usize,
    pub max_defenses: usize,
    /// Sample probabilities and costs from coarse grids, making exact
    /// utility ties likely; otherwise sample continuously.
    pub coarse_grid: bool,
}

impl Default for ScenarioLimits {
    fn default() -> Self {
        Self { max_layers: 4, max_attacks: 6, max_defenses: 6, coarse_grid: false }
    }
}

const GRID_PROBABILITIES: [f64; 7] = [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0];
const GRID_COSTS: [f64; 4] = [0.0, 5.0, 10.0, 20.0];
const GRID_BENEFITS: [f64; 3] = [0.0, 50.0, 100.0];

fn probability(rng: &mut ChaCha8Rng, coarse: bool) -> f64 {
    if coarse {
        GRID_PROBABILITIES[rng.gen_range(0..GRID_PROBABILITIES.len())]
    } else {
        rng.gen::<f64>()
    }
}

fn cost(rng: &mut ChaCha8Rng, coarse: bool) -> f64 {
    if coarse {
        GRID_COSTS[rng.gen_range(0..GRID_COSTS.len())]
    } else {
        rng.gen::<f64>() * 50.0
    }
}

/// Generate a valid random scenario within the limits.
///
/// Roughly half the instances carry an explicit defense cost matrix (which
/// may vary by attack row); the rest derive costs from mitigation sums.
/// Budgets are mostly unbounded, sometimes a quantile of the column costs,
/// and occasionally too small for any defense — callers that need a
/// nonempty affordable set must handle that case.
pub fn random_scenario(rng: &mut ChaCha8Rng, limits: &ScenarioLimits) -> Scenario {
    let coarse = limits.coarse_grid;
    let n_l = rng.gen_range(1..=limits.max_layers);
    let n_a = rng.gen_range(1..=limits.max_attacks);
    let n_d = rng.gen_range(1..=limits.max_defenses);

    let layers = (0..n_l)
        .map(|id| Layer { id, name: format!("layer-{id}"), kind: LayerKind::Cyber })
        .collect();
    let attacks =
        (0..n_a).map(|id| AttackStrategy { id, name: format!("attack-{id}") }).collect();
    let n_m = rng.gen_range(1..=3usize);
    let mitigations: Vec<Mitigation> = (0..n_m)
        .map(|id| Mitigation {
            id,
            name: format!("mitigation-{id}"),
            deploy_cost: Some(cost(rng, coarse)),
        })
        .collect();
    let defenses: Vec<DefenseStrategy> = (0..n_d)
        .map(|id| {
            let picks = (0..n_m).filter(|_| rng.gen :: <f64>() < 0.5).collect();
            DefenseStrategy { id, name: format!("defense-{id}"), mitigation_ids: picks }
        })
        .collect();

    let penetration = PenetrationTensor {
        values: (0..n_l)
            .map(|_| {
                (0..n_a)
                    .map(|_| (0..n_d).map(|_| probability(rng, coarse)).collect())
                    .collect()
            })
            .collect(),
    };
    let attack_cost = CostMatrix {
        values: (0..n_a).map(|_| (0..n_d).map(|_| cost(rng, coarse)).collect()).collect(),
    };

    let mut scenario = Scenario {
        name: format!("random-{}", rng.gen::<u32>()),
        layers,
        attacks,
        defenses,
        mitigations,
        penetration,
        attack_cost,
        defense_cost: CostMatrix { values: Vec::new() },
        benefit: if coarse {
            GRID_BENEFITS[rng.gen_range(0..GRID_BENEFITS.len())]
        } else {
            rng.gen::<f64>() * 200.0
        },
        defender_budget: Budget::Unbounded,
    };

    scenario.defense_cost = if rng.gen::<f64>() < 0.5 {
        CostMatrix {
            values: (0..n_a).map(|_| (0..n_d).map(|_| cost(rng, coarse)).collect()).collect(),
        }
    } else {
        crate::scenario::derive_defense_cost(&scenario).expect("deploy costs are present")
    };

    scenario.defender_budget = match rng.gen_range(0..4u32) {
        0 | 1 => Budget::Unbounded,
        2 => {
            // median worst-case column cost: affords roughly half the defenses
            let mut worst: Vec<f64> = (0..n_d)
                .map(|j| {
                    (0..n_a).map(|i| scenario.defense_cost.values[i][j]).fold(0.0, f64::max)
                })
                .collect();
            worst.sort_by(|a, b| a.partial_cmp(b).unwrap());
            Budget::Limited(worst[n_d / 2])
        }
        _ => Budget::Limited(rng.gen::<f64>() * 30.0),
    };

    debug_assert!(
        crate::scenario::validate_scenario(&scenario)
            .iter()
            .all(|i| i.severity != crate::scenario::Severity::Error),
        "generator must produce valid scenarios"
    );
    scenario
}

/// Random zero-sum payoff matrix with entries in [-scale, scale].
pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * scale).collect())
        .collect()
}
