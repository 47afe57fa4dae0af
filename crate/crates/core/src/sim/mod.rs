//! Seeded, tick-based simulation of a live red/blue exercise over a
//! 24-hour clock (configurable), emitting a replayable trace.
//!
//! One red member is on shift at a time, rotating every
//! `shift_length_minutes`. Red actions resolve at the decision minute and
//! the configured durations model busy time before the member may act
//! again. The game ends at the configured duration or the moment an
//! attack penetrates every layer, whichever comes first.
//!
//! A run is a pure function of `(Scenario, GameConfig)` including the
//! seed: repeated runs serialize byte-identically.

pub mod policy;
pub mod rng;
pub mod trace;

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{EngineError, affordable_defenses, defender_utility};
use crate::equilibria::{EquilibriaError, Leader, SolveMode, TieBreak, stackelberg};
use crate::scenario::{Budget, Scenario, Severity, ValidationIssue, validate_scenario};

pub use policy::{
    AgentPolicy, BlueAction, BlueView, IblInstance, KnowledgeState, RedAction, RedContext,
    ScriptedAction, blue_decide, ibl_choose, red_decide,
};
pub use rng::derive_replication_seed;
pub use trace::{
    ActorTeam, AttemptOutcome, EventAction, EventOutcome, GameEvent, LayerDraw, Trace,
};

use rng::Streams;

/// Service label used when the automated plant process stops; the terminal
/// outage is scored as an outright win, not as a routine service outage.
pub const ICS_PROCESS_SERVICE: &str = "ICS process";

/// Penetration prior imputed for entries red has not revealed.
pub const HIDDEN_ENTRY_PRIOR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventId {
    #[default]
    Event1,
    /// Same exercise after the defenders' in-depth training brief.
    Event2,
}

/// A timed mid-game adjustment to the live scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleChange {
    pub minute: u32,
    pub patch: ScenarioPatch,
}

/// Sparse overrides applied to the live scenario when a rule change fires.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioPatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benefit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defender_budget: Option<Budget>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub penetration: Vec<PenetrationOverride>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attack_cost: Vec<CostOverride>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub defense_cost: Vec<CostOverride>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenetrationOverride {
    pub layer: usize,
    pub attack: usize,
    pub defense: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostOverride {
    pub attack: usize,
    pub defense: usize,
    pub value: f64,
}

/// Full simulation configuration. Every knob has a documented default;
/// none of the defaults claims to reproduce a real exercise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    #[serde(default)]
    pub event_id: EventId,
    #[serde(default = "default_duration")]
    pub duration_minutes: u32,
    #[serde(default = "default_tick")]
    pub tick_minutes: u32,
    #[serde(default)]
    pub seed: u64,
    pub red_policy: AgentPolicy,
    pub blue_policy: AgentPolicy,
    #[serde(default = "default_team_size")]
    pub red_team_size: usize,
    #[serde(default = "default_shift")]
    pub shift_length_minutes: u32,
    /// Chance per decision that the acting red member ignores the policy.
    #[serde(default)]
    pub noncompliance_probability: f64,
    /// Share of penetration entries hidden from red at the start.
    #[serde(default)]
    pub knowledge_mask_fraction: f64,
    /// Gaussian noise on revealed penetration estimates.
    #[serde(default)]
    pub knowledge_noise_sigma: f64,
    /// Chance each attack attempt raises an alarm.
    #[serde(default = "default_detection")]
    pub detection_probability: f64,
    #[serde(default = "default_recon_duration")]
    pub recon_duration_minutes: u32,
    #[serde(default = "default_attempt_duration")]
    pub attempt_duration_minutes: u32,
    #[serde(default = "default_repair")]
    pub service_repair_minutes: u32,
    #[serde(default = "default_services")]
    pub critical_services: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rule_change_schedule: Vec<RuleChange>,
    /// Detection gain applied by the second event's training brief.
    #[serde(default = "default_training_delta")]
    pub training_detection_delta: f64,
    /// Chance an attempt that got past at least one layer knocks out a
    /// corporate critical service. Zero disables corporate outages.
    #[serde(default)]
    pub service_disruption_probability: f64,
    /// Defense deployed at minute 0; defaults to the policy's natural pick.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_defense: Option<usize>,
}

fn default_duration() -> u32 {
    1440
}
fn default_tick() -> u32 {
    1
}
fn default_team_size() -> usize {
    3
}
fn default_shift() -> u32 {
    480
}
fn default_detection() -> f64 {
    0.3
}
fn default_recon_duration() -> u32 {
    15
}
fn default_attempt_duration() -> u32 {
    30
}
fn default_repair() -> u32 {
    60
}
fn default_services() -> Vec<String> {
    vec!["web".into(), "email".into(), "voip".into()]
}
fn default_training_delta() -> f64 {
    0.2
}

impl GameConfig {
    /// A minimal playable config around the given policies.
    pub fn new(red_policy: AgentPolicy, blue_policy: AgentPolicy) -> Self {
        serde_json::from_value(serde_json::json!({
            "red_policy": serde_json::to_value(&red_policy).unwrap(),
            "blue_policy": serde_json::to_value(&blue_policy).unwrap(),
        }))
        .expect("defaults are valid")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("scenario is invalid: {0:?}")]
    InvalidScenario(Vec<ValidationIssue>),
    #[error("config is invalid: {0:?}")]
    InvalidConfig(Vec<ValidationIssue>),
    #[error(transparent)]
    Equilibria(#[from] EquilibriaError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("trace format error at line {line}: {message}")]
    TraceFormat { line: usize, message: String },
}

fn issue(path: &str, message: impl Into<String>) -> ValidationIssue {
    ValidationIssue { severity: Severity::Error, path: path.to_string(), message: message.into() }
}

fn check_probability(issues: &mut Vec<ValidationIssue>, path: &str, p: f64) {
    if !(0.0..=1.0).contains(&p) {
        issues.push(issue(path, "probability outside [0,1]"));
    }
}

fn validate_policy(
    issues: &mut Vec<ValidationIssue>,
    path: &str,
    policy: &AgentPolicy,
    s: &Scenario,
    is_blue: bool,
) {
    match policy {
        AgentPolicy::Equilibrium | AgentPolicy::BestResponseBeliefs => {}
        AgentPolicy::EpsilonGreedy { epsilon } => {
            if is_blue {
                issues.push(issue(path, "blue supports equilibrium, best_response_beliefs, or scripted policies"));
            }
            check_probability(issues, &format!("{path}.epsilon"), *epsilon);
        }
        AgentPolicy::InstanceLearning { decay, temperature } => {
            if is_blue {
                issues.push(issue(path, "blue supports equilibrium, best_response_beliefs, or scripted policies"));
            }
            if *decay < 0.0 || decay.is_nan() {
                issues.push(issue(&format!("{path}.decay"), "decay must be nonnegative"));
            }
            if *temperature <= 0.0 || temperature.is_nan() {
                issues.push(issue(&format!("{path}.temperature"), "temperature must be positive"));
            }
        }
        AgentPolicy::Scripted { script } => {
            if script.is_empty() {
                issues.push(issue(&format!("{path}.script"), "script must be nonempty"));
            }
            for (k, step) in script.iter().enumerate() {
                match step {
                    ScriptedAction::Attack(i) if *i >= s.attack_count() => {
                        issues.push(issue(
                            &format!("{path}.script[{k}]"),
                            format!("attack index {i} out of range"),
                        ));
                    }
                    ScriptedAction::Switch(j) if *j >= s.defense_count() => {
                        issues.push(issue(
                            &format!("{path}.script[{k}]"),
                            format!("defense index {j} out of range"),
                        ));
                    }
                    _ => {}
                }
            }
        }
    }
}

/// Check every config invariant against the scenario it will run on.
pub fn validate_config(s: &Scenario, cfg: &GameConfig) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    if cfg.duration_minutes == 0 {
        issues.push(issue("config.duration_minutes", "duration must be at least 1"));
    }
    if cfg.tick_minutes == 0 {
        issues.push(issue("config.tick_minutes", "tick must be at least 1"));
    } else if !cfg.duration_minutes.is_multiple_of(cfg.tick_minutes) {
        issues.push(issue("config.duration_minutes", "duration must be divisible by tick"));
    }
    if cfg.red_team_size == 0 {
        issues.push(issue("config.red_team_size", "team size must be at least 1"));
    }
    if cfg.shift_length_minutes == 0 {
        issues.push(issue("config.shift_length_minutes", "shift length must be at least 1"));
    }
    check_probability(&mut issues, "config.noncompliance_probability", cfg.noncompliance_probability);
    check_probability(&mut issues, "config.knowledge_mask_fraction", cfg.knowledge_mask_fraction);
    check_probability(&mut issues, "config.detection_probability", cfg.detection_probability);
    check_probability(&mut issues, "config.training_detection_delta", cfg.training_detection_delta);
    check_probability(
        &mut issues,
        "config.service_disruption_probability",
        cfg.service_disruption_probability,
    );
    if !(0.0..f64::INFINITY).contains(&cfg.knowledge_noise_sigma) {
        issues.push(issue("config.knowledge_noise_sigma", "noise sigma must be finite and nonnegative"));
    }
    validate_policy(&mut issues, "config.red_policy", &cfg.red_policy, s, false);
    validate_policy(&mut issues, "config.blue_policy", &cfg.blue_policy, s, true);
    if let Some(d) = cfg.initial_defense {
        if d >= s.defense_count() {
            issues.push(issue("config.initial_defense", format!("defense index {d} out of range")));
        }
    }
    for (k, svc) in cfg.critical_services.iter().enumerate() {
        if cfg.critical_services[..k].contains(svc) {
            issues.push(issue(
                &format!("config.critical_services[{k}]"),
                format!("duplicate service name \"{svc}\""),
            ));
        }
    }
    for (k, rc) in cfg.rule_change_schedule.iter().enumerate() {
        let path = format!("config.rule_change_schedule[{k}]");
        if rc.minute >= cfg.duration_minutes {
            issues.push(issue(&format!("{path}.minute"), "rule change scheduled after the game ends"));
        }
        if let Some(b) = rc.patch.benefit {
            if b < 0.0 || b.is_nan() {
                issues.push(issue(&format!("{path}.patch.benefit"), "benefit must be nonnegative"));
            }
        }
        if let Some(Budget::Limited(b)) = rc.patch.defender_budget {
            if b < 0.0 || b.is_nan() {
                issues.push(issue(&format!("{path}.patch.defender_budget"), "budget must be nonnegative"));
            }
        }
        for (n, po) in rc.patch.penetration.iter().enumerate() {
            let ppath = format!("{path}.patch.penetration[{n}]");
            if po.layer >= s.layer_count() || po.attack >= s.attack_count() || po.defense >= s.defense_count() {
                issues.push(issue(&ppath, "override indices out of range"));
            }
            check_probability(&mut issues, &ppath, po.value);
        }
        for (n, co) in rc.patch.attack_cost.iter().chain(rc.patch.defense_cost.iter()).enumerate() {
            let cpath = format!("{path}.patch.cost[{n}]");
            if co.attack >= s.attack_count() || co.defense >= s.defense_count() {
                issues.push(issue(&cpath, "override indices out of range"));
            }
            if co.value < 0.0 || co.value.is_nan() {
                issues.push(issue(&cpath, "cost must be nonnegative"));
            }
        }
    }
    issues
}

/// Apply the training adjustment implied by the event id.
///
/// Event 1 returns the config unchanged. Event 2 raises the detection
/// probability by the training delta (capped at 1) and upgrades a
/// belief-driven blue policy to equilibrium play; other blue policies are
/// left alone. Callers apply this once before running — `run_game` itself
/// treats `event_id` as a label.
pub fn apply_training_effect(cfg: &GameConfig) -> GameConfig {
    let mut out = cfg.clone();
    if cfg.event_id == EventId::Event2 {
        out.detection_probability =
            (out.detection_probability + out.training_detection_delta).min(1.0);
        if out.blue_policy == AgentPolicy::BestResponseBeliefs {
            out.blue_policy = AgentPolicy::Equilibrium;
        }
    }
    out
}

/// Push attack `i` through the layers in order against defense `j`.
///
/// Each layer passes independently with its penetration probability;
/// drawing stops at the first failure. The target is reached only if every
/// layer passes.
pub fn attempt_attack(
    s: &Scenario,
    attack: usize,
    defense: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<AttemptOutcome, SimError> {
    if attack >= s.attack_count() {
        return Err(EngineError::IndexOutOfRange {
            what: "attack",
            index: attack,
            count: s.attack_count(),
        }
        .into());
    }
    if defense >= s.defense_count() {
        return Err(EngineError::IndexOutOfRange {
            what: "defense",
            index: defense,
            count: s.defense_count(),
        }
        .into());
    }
    let mut per_layer_draws = Vec::new();
    let mut layers_passed = 0;
    for layer in 0..s.layer_count() {
        let probability = s.penetration.values[layer][attack][defense];
        let passed = rng.gen::<f64>() < probability;
        per_layer_draws.push(LayerDraw { layer, probability, passed });
        if !passed {
            break;
        }
        layers_passed += 1;
    }
    Ok(AttemptOutcome {
        layers_passed,
        reached_target: layers_passed == s.layer_count(),
        per_layer_draws,
    })
}

struct ServiceState {
    name: String,
    down_since: Option<u32>,
    repair_due: Option<u32>,
}

fn describe_patch(patch: &ScenarioPatch) -> String {
    let mut parts = Vec::new();
    if let Some(b) = patch.benefit {
        parts.push(format!("benefit={b}"));
    }
    if let Some(b) = &patch.defender_budget {
        parts.push(format!("budget={b}"));
    }
    if !patch.penetration.is_empty() {
        parts.push(format!("{} penetration entries", patch.penetration.len()));
    }
    if !patch.attack_cost.is_empty() {
        parts.push(format!("{} attack costs", patch.attack_cost.len()));
    }
    if !patch.defense_cost.is_empty() {
        parts.push(format!("{} defense costs", patch.defense_cost.len()));
    }
    if parts.is_empty() { "no-op".to_string() } else { parts.join(", ") }
}

fn apply_patch(live: &mut Scenario, patch: &ScenarioPatch) {
    if let Some(b) = patch.benefit {
        live.benefit = b;
    }
    if let Some(b) = patch.defender_budget {
        live.defender_budget = b;
    }
    for po in &patch.penetration {
        live.penetration.values[po.layer][po.attack][po.defense] = po.value;
    }
    for co in &patch.attack_cost {
        live.attack_cost.values[co.attack][co.defense] = co.value;
    }
    for co in &patch.defense_cost {
        live.defense_cost.values[co.attack][co.defense] = co.value;
    }
}

/// Blue's opening defense when the config does not pin one: equilibrium
/// players deploy the solved strategy, belief players the best answer to a
/// uniform attack prior, scripts the cheapest-indexed affordable defense.
fn default_initial_defense(
    s: &Scenario,
    policy: &AgentPolicy,
    affordable: &[usize],
    equilibrium_defense: Option<usize>,
) -> usize {
    match policy {
        AgentPolicy::Equilibrium => equilibrium_defense.expect("solved before deployment"),
        AgentPolicy::BestResponseBeliefs => {
            let mut best = affordable[0];
            let mut best_u = f64::NEG_INFINITY;
            for &j in affordable {
                let mean: f64 = (0..s.attack_count())
                    .map(|i| defender_utility(s, i, j).expect("validated scenario"))
                    .sum::<f64>()
                    / s.attack_count() as f64;
                if mean > best_u {
                    best_u = mean;
                    best = j;
                }
            }
            best
        }
        _ => affordable[0],
    }
}

fn deploy_detail(s: &Scenario, defense: usize) -> String {
    let d = &s.defenses[defense];
    let names: Vec<&str> = d
        .mitigation_ids
        .iter()
        .filter_map(|mid| s.mitigations.iter().find(|m| m.id == *mid))
        .map(|m| m.name.as_str())
        .collect();
    if names.is_empty() {
        format!("deploy {}", d.name)
    } else {
        format!("deploy {}: {}", d.name, names.join(", "))
    }
}

/// Run one full game. Pure in `(scenario, config)`; see the module docs
/// for the tick structure.
pub fn run_game(s: &Scenario, cfg: &GameConfig) -> Result<Trace, SimError> {
    let scenario_errors: Vec<ValidationIssue> = validate_scenario(s)
        .into_iter()
        .filter(|i| i.severity == Severity::Error)
        .collect();
    if !scenario_errors.is_empty() {
        return Err(SimError::InvalidScenario(scenario_errors));
    }
    let config_errors: Vec<ValidationIssue> = validate_config(s, cfg)
        .into_iter()
        .filter(|i| i.severity == Severity::Error)
        .collect();
    if !config_errors.is_empty() {
        return Err(SimError::InvalidConfig(config_errors));
    }

    let mut live = s.clone();
    let mut streams = Streams::from_seed(cfg.seed);
    let mut knowledge = KnowledgeState::initial(
        s,
        cfg.knowledge_mask_fraction,
        cfg.knowledge_noise_sigma,
        &mut streams.knowledge,
    );

    // The rational-model strategies both equilibrium policies pin to.
    let needs_equilibrium = cfg.red_policy == AgentPolicy::Equilibrium
        || cfg.blue_policy == AgentPolicy::Equilibrium;
    let (equilibrium_attack, equilibrium_defense) = if needs_equilibrium {
        let eq = stackelberg(
            s,
            Leader::Defender,
            SolveMode::AnticipatoryStrong,
            &s.defender_budget,
            TieBreak::LowestIndex,
        )?;
        (Some(eq.follower_strategy), Some(eq.leader_strategy))
    } else {
        (None, None)
    };

    let mut affordable = affordable_defenses(&live, &live.defender_budget);
    if affordable.is_empty() {
        return Err(EquilibriaError::EmptyAffordableSet {
            budget: live.defender_budget.to_string(),
        }
        .into());
    }
    let mut current_defense = match cfg.initial_defense {
        Some(d) => {
            if !affordable.contains(&d) {
                return Err(SimError::InvalidConfig(vec![issue(
                    "config.initial_defense",
                    format!("defense {d} exceeds the defender budget"),
                )]));
            }
            d
        }
        None => default_initial_defense(&live, &cfg.blue_policy, &affordable, equilibrium_defense),
    };

    let member_ids: Vec<String> =
        (0..cfg.red_team_size).map(|m| format!("red-{}", m + 1)).collect();
    let mut busy_until = vec![0u32; cfg.red_team_size];
    let mut red_script_step = 0usize;
    let mut blue_script_step = 0usize;
    let mut ibl_history: Vec<IblInstance> = Vec::new();
    let mut alarms: VecDeque<(u32, usize)> = VecDeque::new();
    let mut observed_attacks = vec![0u64; s.attack_count()];
    let mut services: Vec<ServiceState> = cfg
        .critical_services
        .iter()
        .map(|name| ServiceState { name: name.clone(), down_since: None, repair_due: None })
        .collect();
    let mut best_depth = 0usize;
    let mut admin_claimed: Vec<bool> = vec![false; s.layer_count() + 1];

    let mut patches: Vec<&RuleChange> = cfg.rule_change_schedule.iter().collect();
    patches.sort_by_key(|rc| rc.minute);
    let mut patch_cursor = 0;

    let mut events: Vec<GameEvent> = Vec::new();
    events.push(GameEvent {
        defense_index: Some(current_defense),
        outcome: EventOutcome::Success,
        detail: deploy_detail(&live, current_defense),
        ..GameEvent::new(0, ActorTeam::Blue, "blue-1", EventAction::MitigationDeployed)
    });

    let mut final_minute = cfg.duration_minutes;
    let mut t = 0u32;
    'game: while t < cfg.duration_minutes {
        // White-team rule changes due by this tick.
        while patch_cursor < patches.len() && patches[patch_cursor].minute <= t {
            let rc = patches[patch_cursor];
            apply_patch(&mut live, &rc.patch);
            affordable = affordable_defenses(&live, &live.defender_budget);
            events.push(GameEvent {
                detail: describe_patch(&rc.patch),
                ..GameEvent::new(t, ActorTeam::White, "white", EventAction::RuleChange)
            });
            patch_cursor += 1;
        }

        // Repairs complete at the first tick past their due time.
        for svc in services.iter_mut() {
            if svc.repair_due.is_some_and(|due| due <= t) {
                svc.down_since = None;
                svc.repair_due = None;
                events.push(GameEvent {
                    target_label: Some(svc.name.clone()),
                    outcome: EventOutcome::Success,
                    ..GameEvent::new(t, ActorTeam::Blue, "blue-1", EventAction::ServiceRestored)
                });
            }
        }

        // The on-shift red member acts if free.
        let member = ((t / cfg.shift_length_minutes) as usize) % cfg.red_team_size;
        if busy_until[member] <= t {
            let ctx = RedContext {
                scenario: &live,
                equilibrium_attack,
                belief_prior: HIDDEN_ENTRY_PRIOR,
                noncompliance_probability: cfg.noncompliance_probability,
                history: &ibl_history,
                script_step: red_script_step,
            };
            let action = red_decide(&ctx, &knowledge, &cfg.red_policy, t, &mut streams.red);
            red_script_step += 1;
            let actor = member_ids[member].as_str();
            match action {
                RedAction::Idle => {}
                RedAction::Recon { layer, attack, defense } => {
                    let true_p = live.penetration.values[layer][attack][defense];
                    let estimate = knowledge.reveal(
                        (layer, attack, defense),
                        true_p,
                        cfg.knowledge_noise_sigma,
                        &mut streams.knowledge,
                    );
                    let host = format!("10.{layer}.{attack}.{defense}");
                    knowledge.discovered_hosts.insert(host.clone());
                    events.push(GameEvent {
                        attack_index: Some(attack),
                        defense_index: Some(defense),
                        layer_index: Some(layer),
                        outcome: EventOutcome::Success,
                        detail: "surveyed one penetration entry".into(),
                        ..GameEvent::new(t, ActorTeam::Red, actor, EventAction::Recon)
                    });
                    events.push(GameEvent {
                        attack_index: Some(attack),
                        defense_index: Some(defense),
                        layer_index: Some(layer),
                        target_label: Some(host),
                        outcome: EventOutcome::Success,
                        detail: format!("estimate {estimate}"),
                        ..GameEvent::new(t, ActorTeam::Red, actor, EventAction::KnowledgeRevealed)
                    });
                    busy_until[member] = t.saturating_add(cfg.recon_duration_minutes);
                }
                RedAction::Attack { attack } => {
                    let defense = current_defense;
                    let outcome = attempt_attack(&live, attack, defense, &mut streams.penetration)?;
                    events.push(GameEvent {
                        attack_index: Some(attack),
                        defense_index: Some(defense),
                        outcome: if outcome.reached_target {
                            EventOutcome::Success
                        } else {
                            EventOutcome::Failure
                        },
                        detail: format!(
                            "passed {}/{} layers",
                            outcome.layers_passed,
                            live.layer_count()
                        ),
                        ..GameEvent::new(t, ActorTeam::Red, actor, EventAction::AttackAttempt)
                    });
                    for draw in &outcome.per_layer_draws {
                        events.push(GameEvent {
                            attack_index: Some(attack),
                            defense_index: Some(defense),
                            layer_index: Some(draw.layer),
                            outcome: if draw.passed {
                                EventOutcome::Success
                            } else {
                                EventOutcome::Failure
                            },
                            detail: format!("p {}", draw.probability),
                            ..GameEvent::new(
                                t,
                                ActorTeam::Red,
                                actor,
                                if draw.passed {
                                    EventAction::LayerPenetrated
                                } else {
                                    EventAction::LayerBlocked
                                },
                            )
                        });
                    }

                    let mean_attack_cost: f64 = live.attack_cost.values[attack].iter().sum::<f64>()
                        / live.defense_count() as f64;
                    ibl_history.push(IblInstance {
                        choice: attack,
                        payoff: live.benefit * outcome.layers_passed as f64
                            / live.layer_count() as f64
                            - mean_attack_cost,
                        minute: t,
                    });

                    if streams.detection.gen::<f64>() < cfg.detection_probability {
                        events.push(GameEvent {
                            attack_index: Some(attack),
                            outcome: EventOutcome::Success,
                            detail: "sensor alarm".into(),
                            ..GameEvent::new(t, ActorTeam::Blue, "blue-1", EventAction::IntrusionDetected)
                        });
                        alarms.push_back((t, attack));
                        observed_attacks[attack] += 1;
                    }

                    if outcome.reached_target {
                        events.push(GameEvent {
                            attack_index: Some(attack),
                            defense_index: Some(defense),
                            outcome: EventOutcome::Success,
                            detail: "all layers penetrated".into(),
                            ..GameEvent::new(t, ActorTeam::Red, actor, EventAction::TargetReached)
                        });
                        events.push(GameEvent {
                            attack_index: Some(attack),
                            target_label: Some(ICS_PROCESS_SERVICE.to_string()),
                            outcome: EventOutcome::Success,
                            detail: "automated process halted".into(),
                            ..GameEvent::new(t, ActorTeam::Red, actor, EventAction::ServiceStopped)
                        });
                        final_minute = t;
                        break 'game;
                    }

                    if outcome.layers_passed > best_depth {
                        best_depth = outcome.layers_passed;
                        events.push(GameEvent {
                            attack_index: Some(attack),
                            layer_index: Some(outcome.layers_passed - 1),
                            target_label: Some(format!("10.{}.0.1", outcome.layers_passed - 1)),
                            outcome: EventOutcome::Success,
                            detail: "shell on a newly reached layer".into(),
                            ..GameEvent::new(t, ActorTeam::Red, actor, EventAction::RemoteShell)
                        });
                    } else if outcome.layers_passed >= 1
                        && outcome.layers_passed == best_depth
                        && !admin_claimed[outcome.layers_passed]
                    {
                        admin_claimed[outcome.layers_passed] = true;
                        events.push(GameEvent {
                            attack_index: Some(attack),
                            layer_index: Some(outcome.layers_passed - 1),
                            target_label: Some(format!("10.{}.0.1", outcome.layers_passed - 1)),
                            outcome: EventOutcome::Success,
                            detail: "escalated to administrative rights".into(),
                            ..GameEvent::new(t, ActorTeam::Red, actor, EventAction::AdminPrivilege)
                        });
                    }

                    if outcome.layers_passed >= 1
                        && cfg.service_disruption_probability > 0.0
                        && streams.disruption.gen::<f64>() < cfg.service_disruption_probability
                    {
                        let up: Vec<usize> = services
                            .iter()
                            .enumerate()
                            .filter(|(_, svc)| svc.down_since.is_none())
                            .map(|(idx, _)| idx)
                            .collect();
                        if !up.is_empty() {
                            let pick = up[streams.disruption.gen_range(0..up.len())];
                            services[pick].down_since = Some(t);
                            events.push(GameEvent {
                                attack_index: Some(attack),
                                target_label: Some(services[pick].name.clone()),
                                outcome: EventOutcome::Success,
                                detail: "corporate service knocked out".into(),
                                ..GameEvent::new(t, ActorTeam::Red, actor, EventAction::ServiceStopped)
                            });
                        }
                    }

                    busy_until[member] = t.saturating_add(cfg.attempt_duration_minutes);
                }
            }
        }

        // Blue acts once per tick; alarms become actionable the tick after
        // they fire.
        let alarm_pending = alarms.front().is_some_and(|&(raised, _)| raised < t);
        let services_down: Vec<String> = {
            let mut down: Vec<(u32, &str)> = services
                .iter()
                .filter(|svc| svc.down_since.is_some() && svc.repair_due.is_none())
                .map(|svc| (svc.down_since.unwrap(), svc.name.as_str()))
                .collect();
            down.sort_by_key(|&(since, _)| since);
            down.into_iter().map(|(_, name)| name.to_string()).collect()
        };
        let view = BlueView {
            scenario: &live,
            current_defense,
            affordable: &affordable,
            alarm_pending,
            services_down: &services_down,
            observed_attacks: &observed_attacks,
            equilibrium_defense,
            script_step: blue_script_step,
        };
        let action = blue_decide(&view, &cfg.blue_policy, t, &mut streams.blue);
        blue_script_step += 1;
        match action {
            BlueAction::Keep => {}
            BlueAction::Block => {
                let (raised, attack) = alarms.pop_front().expect("block requires a pending alarm");
                events.push(GameEvent {
                    attack_index: Some(attack),
                    outcome: EventOutcome::Success,
                    detail: format!("cut off intruder flagged at minute {raised}"),
                    ..GameEvent::new(t, ActorTeam::Blue, "blue-1", EventAction::IntrusionBlocked)
                });
            }
            BlueAction::Restore { service } => {
                if let Some(svc) = services.iter_mut().find(|svc| svc.name == service) {
                    if svc.down_since.is_some() && svc.repair_due.is_none() {
                        svc.repair_due = Some(t.saturating_add(cfg.service_repair_minutes));
                    }
                }
            }
            BlueAction::Switch { defense } => {
                current_defense = defense;
                events.push(GameEvent {
                    defense_index: Some(defense),
                    outcome: EventOutcome::Success,
                    detail: deploy_detail(&live, defense),
                    ..GameEvent::new(t, ActorTeam::Blue, "blue-1", EventAction::MitigationDeployed)
                });
            }
        }

        t += cfg.tick_minutes;
    }

    Ok(Trace {
        scenario_name: s.name.clone(),
        config_echo: cfg.clone(),
        events,
        final_minute,
    })
}
