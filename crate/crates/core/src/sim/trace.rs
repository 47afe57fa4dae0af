//! Structured, replayable record of one game: the unit of adjudication
//! and of model-vs-play comparison.
//!
//! On disk a trace is JSON Lines: one header object carrying the scenario
//! name, final minute, and the full config echo, then one event object per
//! line in time order.

use serde::{Deserialize, Serialize};

use super::GameConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorTeam {
    Red,
    Blue,
    White,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventAction {
    Recon,
    AttackAttempt,
    LayerPenetrated,
    LayerBlocked,
    TargetReached,
    ServiceStopped,
    ServiceRestored,
    IntrusionDetected,
    IntrusionBlocked,
    MitigationDeployed,
    KnowledgeRevealed,
    ConductViolation,
    RuleChange,
    RemoteShell,
    AdminPrivilege,
    Note,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventOutcome {
    Success,
    Failure,
    NotApplicable,
}

/// One timestamped game event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameEvent {
    pub minute: u32,
    pub actor_team: ActorTeam,
    pub actor_id: String,
    pub action: EventAction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defense_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_label: Option<String>,
    pub outcome: EventOutcome,
    #[serde(default)]
    pub detail: String,
}

impl GameEvent {
    pub(crate) fn new(minute: u32, actor_team: ActorTeam, actor_id: &str, action: EventAction) -> Self {
        Self {
            minute,
            actor_team,
            actor_id: actor_id.to_string(),
            action,
            attack_index: None,
            defense_index: None,
            layer_index: None,
            target_label: None,
            outcome: EventOutcome::NotApplicable,
            detail: String::new(),
        }
    }
}

/// A complete recorded game.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub scenario_name: String,
    /// The effective configuration the run used (training adjustments and
    /// seed overrides already applied).
    pub config_echo: GameConfig,
    pub events: Vec<GameEvent>,
    /// Minute the game ended: the configured duration, or earlier if the
    /// target was reached.
    pub final_minute: u32,
}

#[derive(Serialize, Deserialize)]
struct TraceHeader {
    scenario_name: String,
    final_minute: u32,
    config: GameConfig,
}

impl Trace {
    /// Serialize as JSON Lines. Identical traces produce identical bytes.
    pub fn to_jsonl(&self) -> String {
        let header = TraceHeader {
            scenario_name: self.scenario_name.clone(),
            final_minute: self.final_minute,
            config: self.config_echo.clone(),
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for event in &self.events {
            out.push_str(&serde_json::to_string(event).expect("event serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Trace, super::SimError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header_line) = lines.next().ok_or(super::SimError::TraceFormat {
            line: 1,
            message: "empty trace file".into(),
        })?;
        let header: TraceHeader =
            serde_json::from_str(header_line).map_err(|e| super::SimError::TraceFormat {
                line: 1,
                message: format!("bad header: {e}"),
            })?;
        let mut events = Vec::new();
        for (idx, line) in lines {
            let event: GameEvent =
                serde_json::from_str(line).map_err(|e| super::SimError::TraceFormat {
                    line: idx + 1,
                    message: format!("bad event: {e}"),
                })?;
            events.push(event);
        }
        Ok(Trace {
            scenario_name: header.scenario_name,
            config_echo: header.config,
            events,
            final_minute: header.final_minute,
        })
    }
}

/// Per-layer record of one attack attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDraw {
    pub layer: usize,
    /// Penetration probability the draw used.
    pub probability: f64,
    pub passed: bool,
}

/// Result of pushing one attack through the layers in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptOutcome {
    pub layers_passed: usize,
    pub reached_target: bool,
    /// Draws in layer order, stopping at the first failure.
    pub per_layer_draws: Vec<LayerDraw>,
}
