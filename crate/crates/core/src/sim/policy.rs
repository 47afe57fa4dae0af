//! Agent decision rules with configurable bounded rationality, from fully
//! rational equilibrium play down to uniform noise.
//!
//! Decisions depend only on team-level knowledge and the policy; the game
//! loop attributes each action to whichever member is on shift.

use std::collections::BTreeSet;

use rand::Rng;
use rand::distributions::{Distribution, WeightedIndex};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::scenario::Scenario;

/// How an agent chooses its actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentPolicy {
    /// Play the precomputed leader-follower strategy throughout.
    Equilibrium,
    /// Best-respond to current knowledge, imputing a fixed prior for
    /// unknown penetration entries.
    BestResponseBeliefs,
    /// Best response with uniform exploration at rate `epsilon`.
    EpsilonGreedy { epsilon: f64 },
    /// Memory-weighted choice: decayed past payoffs fed through a softmax.
    InstanceLearning { decay: f64, temperature: f64 },
    /// Fixed action list, cycled.
    Scripted { script: Vec<ScriptedAction> },
}

/// One step of a scripted policy. Actions that do not apply to the acting
/// team or the current state degrade to idle/keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptedAction {
    Idle,
    Recon,
    Attack(usize),
    Keep,
    Switch(usize),
    Block,
    Restore,
}

/// The red team's shared picture of the penetration tensor.
///
/// Entries start hidden according to the knowledge mask; recon reveals
/// them one at a time, with optional Gaussian noise on the revealed
/// estimate. Revealed entries never disappear.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeState {
    /// Estimated penetration probabilities, `None` while hidden.
    pub estimates: Vec<Vec<Vec<Option<f64>>>>,
    pub revealed_count: usize,
    pub discovered_hosts: BTreeSet<String>,
}

impl KnowledgeState {
    /// Start-of-game knowledge: each entry independently hidden with
    /// probability `mask_fraction`, revealed entries carrying a noisy
    /// estimate of the true value.
    pub fn initial(
        s: &Scenario,
        mask_fraction: f64,
        noise_sigma: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut revealed_count = 0;
        let estimates = (0..s.layer_count())
            .map(|l| {
                (0..s.attack_count())
                    .map(|i| {
                        (0..s.defense_count())
                            .map(|j| {
                                let hidden = rng.gen::<f64>() < mask_fraction;
                                let z: f64 = StandardNormal.sample(rng);
                                if hidden {
                                    None
                                } else {
                                    revealed_count += 1;
                                    let p = s.penetration.values[l][i][j];
                                    Some((p + noise_sigma * z).clamp(0.0, 1.0))
                                }
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self { estimates, revealed_count, discovered_hosts: BTreeSet::new() }
    }

    pub fn is_complete(&self) -> bool {
        self.estimates
            .iter()
            .all(|slice| slice.iter().all(|row| row.iter().all(|e| e.is_some())))
    }

    /// Lexicographically first hidden entry, lowest layer index first.
    pub fn first_unknown(&self) -> Option<(usize, usize, usize)> {
        for (l, slice) in self.estimates.iter().enumerate() {
            for (i, row) in slice.iter().enumerate() {
                for (j, e) in row.iter().enumerate() {
                    if e.is_none() {
                        return Some((l, i, j));
                    }
                }
            }
        }
        None
    }

    /// Reveal one entry from its true value plus noise; returns the stored
    /// estimate. Re-revealing an already-known entry keeps the old value.
    pub fn reveal(
        &mut self,
        entry: (usize, usize, usize),
        true_value: f64,
        noise_sigma: f64,
        rng: &mut ChaCha8Rng,
    ) -> f64 {
        let (l, i, j) = entry;
        let z: f64 = StandardNormal.sample(rng);
        let slot = &mut self.estimates[l][i][j];
        if slot.is_none() {
            *slot = Some((true_value + noise_sigma * z).clamp(0.0, 1.0));
            self.revealed_count += 1;
        }
        slot.unwrap()
    }

    fn estimate_or(&self, l: usize, i: usize, j: usize, prior: f64) -> f64 {
        self.estimates[l][i][j].unwrap_or(prior)
    }
}

/// What the red policy decided to do this tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RedAction {
    Recon { layer: usize, attack: usize, defense: usize },
    Attack { attack: usize },
    Idle,
}

/// Read-only context the red policies decide from.
pub struct RedContext<'a> {
    /// Live scenario: the attacker knows its own costs and the prize.
    pub scenario: &'a Scenario,
    /// Precomputed equilibrium attack, when an equilibrium policy is in play.
    pub equilibrium_attack: Option<usize>,
    /// Imputed penetration probability for hidden entries.
    pub belief_prior: f64,
    /// Chance per decision that the acting member ignores the policy and
    /// picks uniformly.
    pub noncompliance_probability: f64,
    /// Shared attack log for instance-based choice.
    pub history: &'a [IblInstance],
    /// Cursor into a scripted policy.
    pub script_step: usize,
}

/// Expected attacker utility of each attack under current beliefs,
/// averaging over defenses uniformly (the deployed defense is hidden).
fn expected_attack_utilities(ctx: &RedContext, knowledge: &KnowledgeState) -> Vec<f64> {
    let s = ctx.scenario;
    let n_d = s.defense_count() as f64;
    (0..s.attack_count())
        .map(|i| {
            (0..s.defense_count())
                .map(|j| {
                    let mut p = 1.0;
                    for l in 0..s.layer_count() {
                        p *= knowledge.estimate_or(l, i, j, ctx.belief_prior);
                    }
                    s.benefit * p - s.attack_cost.values[i][j]
                })
                .sum::<f64>()
                / n_d
        })
        .collect()
}

fn best_response_attack(ctx: &RedContext, knowledge: &KnowledgeState) -> usize {
    let utilities = expected_attack_utilities(ctx, knowledge);
    let mut best = 0;
    for (i, &u) in utilities.iter().enumerate() {
        if u > utilities[best] {
            best = i;
        }
    }
    best
}

/// Decide the on-shift red member's next action.
///
/// The noncompliance draw happens first: a noncompliant decision is a
/// uniform attack pick regardless of policy. The equilibrium policy plays
/// the precomputed attack once knowledge is complete and otherwise recons
/// the first hidden entry; belief-driven policies never recon and impute
/// the configured prior instead.
pub fn red_decide(
    ctx: &RedContext,
    knowledge: &KnowledgeState,
    policy: &AgentPolicy,
    _minute: u32,
    rng: &mut ChaCha8Rng,
) -> RedAction {
    let n_a = ctx.scenario.attack_count();
    if rng.gen::<f64>() < ctx.noncompliance_probability {
        return RedAction::Attack { attack: rng.gen_range(0..n_a) };
    }
    match policy {
        AgentPolicy::Equilibrium => {
            if knowledge.is_complete() {
                let attack = ctx
                    .equilibrium_attack
                    .expect("equilibrium policy requires a precomputed strategy");
                RedAction::Attack { attack }
            } else {
                let (layer, attack, defense) =
                    knowledge.first_unknown().expect("incomplete knowledge has a hidden entry");
                RedAction::Recon { layer, attack, defense }
            }
        }
        AgentPolicy::BestResponseBeliefs => {
            RedAction::Attack { attack: best_response_attack(ctx, knowledge) }
        }
        AgentPolicy::EpsilonGreedy { epsilon } => {
            if rng.gen::<f64>() < *epsilon {
                RedAction::Attack { attack: rng.gen_range(0..n_a) }
            } else {
                RedAction::Attack { attack: best_response_attack(ctx, knowledge) }
            }
        }
        AgentPolicy::InstanceLearning { decay, temperature } => {
            let candidates: Vec<usize> = (0..n_a).collect();
            let attack =
                ibl_choose(ctx.history, &candidates, *decay, *temperature, _minute, rng);
            RedAction::Attack { attack }
        }
        AgentPolicy::Scripted { script } => {
            match script[ctx.script_step % script.len()] {
                ScriptedAction::Attack(i) if i < n_a => RedAction::Attack { attack: i },
                ScriptedAction::Recon => match knowledge.first_unknown() {
                    Some((l, i, j)) => RedAction::Recon { layer: l, attack: i, defense: j },
                    None => RedAction::Idle,
                },
                _ => RedAction::Idle,
            }
        }
    }
}

/// What the blue policy decided to do this tick.
#[derive(Debug, Clone, PartialEq)]
pub enum BlueAction {
    Keep,
    Switch { defense: usize },
    Block,
    Restore { service: String },
}

/// What blue can see when deciding.
pub struct BlueView<'a> {
    /// Live scenario: the defender knows the system it is defending.
    pub scenario: &'a Scenario,
    pub current_defense: usize,
    /// Defense indices currently within budget, ascending.
    pub affordable: &'a [usize],
    /// An intrusion alarm from an earlier tick awaits action.
    pub alarm_pending: bool,
    /// Downed critical services, oldest outage first.
    pub services_down: &'a [String],
    /// Observed attack-index counts accumulated from alarms.
    pub observed_attacks: &'a [u64],
    /// Precomputed equilibrium defense, when an equilibrium policy is in play.
    pub equilibrium_defense: Option<usize>,
    /// Cursor into a scripted policy.
    pub script_step: usize,
}

fn expected_defense_utility(view: &BlueView, defense: usize) -> f64 {
    let s = view.scenario;
    let total: u64 = view.observed_attacks.iter().sum();
    (0..s.attack_count())
        .map(|i| {
            let weight = view.observed_attacks[i] as f64 / total as f64;
            let u = crate::engine::defender_utility(s, i, defense)
                .expect("indices validated by the game loop");
            weight * u
        })
        .sum()
}

/// Decide blue's next action.
///
/// Blocking a detected intrusion takes priority, then restoring downed
/// services, then the strategy choice. The belief-driven policy switches
/// defense only when the observed attack pattern makes another affordable
/// defense strictly better in expected utility. Scripts bypass the
/// priority order and are followed literally where applicable.
pub fn blue_decide(view: &BlueView, policy: &AgentPolicy, _minute: u32, _rng: &mut ChaCha8Rng) -> BlueAction {
    if let AgentPolicy::Scripted { script } = policy {
        return match script[view.script_step % script.len()] {
            ScriptedAction::Block if view.alarm_pending => BlueAction::Block,
            ScriptedAction::Switch(j) if view.affordable.contains(&j) => {
                BlueAction::Switch { defense: j }
            }
            ScriptedAction::Restore => match view.services_down.first() {
                Some(service) => BlueAction::Restore { service: service.clone() },
                None => BlueAction::Keep,
            },
            _ => BlueAction::Keep,
        };
    }

    if view.alarm_pending {
        return BlueAction::Block;
    }
    if let Some(service) = view.services_down.first() {
        return BlueAction::Restore { service: service.clone() };
    }
    match policy {
        AgentPolicy::Equilibrium => {
            let target = view
                .equilibrium_defense
                .expect("equilibrium policy requires a precomputed strategy");
            if view.current_defense != target {
                BlueAction::Switch { defense: target }
            } else {
                BlueAction::Keep
            }
        }
        AgentPolicy::BestResponseBeliefs => {
            if view.observed_attacks.iter().sum::<u64>() == 0 {
                return BlueAction::Keep;
            }
            let mut best = view.current_defense;
            let mut best_u = expected_defense_utility(view, view.current_defense);
            for &j in view.affordable {
                let u = expected_defense_utility(view, j);
                if u > best_u {
                    best = j;
                    best_u = u;
                }
            }
            if best != view.current_defense {
                BlueAction::Switch { defense: best }
            } else {
                BlueAction::Keep
            }
        }
        // Remaining kinds are rejected by config validation for blue.
        _ => BlueAction::Keep,
    }
}

/// One remembered outcome for instance-based choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IblInstance {
    pub choice: usize,
    pub payoff: f64,
    pub minute: u32,
}

/// Memory-weighted choice: each candidate scores the sum of its past
/// payoffs weighted by `(age + 1)^-decay`; unseen candidates score zero.
/// Selection is a softmax over scores at the given temperature.
pub fn ibl_choose(
    history: &[IblInstance],
    candidates: &[usize],
    decay: f64,
    temperature: f64,
    minute: u32,
    rng: &mut ChaCha8Rng,
) -> usize {
    assert!(!candidates.is_empty(), "candidates must be nonempty");
    assert!(decay >= 0.0, "decay must be nonnegative");
    assert!(temperature > 0.0, "temperature must be positive");

    let scores: Vec<f64> = candidates
        .iter()
        .map(|&c| {
            history
                .iter()
                .filter(|inst| inst.choice == c)
                .map(|inst| {
                    let age = (minute - inst.minute) as f64;
                    inst.payoff * (age + 1.0).powf(-decay)
                })
                .sum::<f64>()
        })
        .collect();

    // Softmax with the max shifted out so tiny temperatures cannot overflow.
    let top = scores.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let weights: Vec<f64> = scores.iter().map(|&s| ((s - top) / temperature).exp()).collect();
    let dist = WeightedIndex::new(&weights).expect("softmax weights are positive");
    candidates[dist.sample(rng)]
}
