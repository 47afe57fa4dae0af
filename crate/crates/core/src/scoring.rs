//! Trace adjudication under the exercise rules of conduct and point
//! tables: per-team line items, totals, and the game outcome.
//!
//! Rule references follow the point tables: `Table1.*` are conduct
//! penalties, `Table2.*` blue awards, `Table3.*` red awards. The plant
//! process stopping is an outright red win, recorded as a flag (and a
//! zero-point marker item) rather than an arithmetic value, so totals stay
//! finite and decomposable.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::sim::{ActorTeam, EventAction, EventId, EventOutcome, GameEvent, ICS_PROCESS_SERVICE, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Team {
    Red,
    Blue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    Red,
    Blue,
    Draw,
}

/// Which team a conduct penalty lands on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConductScope {
    /// The roster team of the offending person.
    OffendersTeam,
    /// Always the red team.
    Red,
    /// The team of the event's actor.
    OffendingTeam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConductRule {
    pub id: String,
    pub penalty_points: i64,
    pub team_scope: ConductScope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlueAwards {
    pub service_uptime_points_per_hour: i64,
    pub intrusion_stop_points: i64,
}

impl Default for BlueAwards {
    fn default() -> Self {
        Self { service_uptime_points_per_hour: 5, intrusion_stop_points: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RedAwards {
    pub service_stop_points: i64,
    /// Minimum contiguous outage, in minutes, for the service-stop award.
    pub service_stop_min_minutes: u32,
    pub remote_shell_points: i64,
    pub admin_points: i64,
    pub host_discovery_points: i64,
}

impl Default for RedAwards {
    fn default() -> Self {
        Self {
            service_stop_points: 5,
            service_stop_min_minutes: 10,
            remote_shell_points: 10,
            admin_points: 10,
            host_discovery_points: 1,
        }
    }
}

/// The adjudication rule book. Defaults carry the exercise point tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuleSet {
    pub conduct_rules: Vec<ConductRule>,
    pub blue_awards: BlueAwards,
    pub red_awards: RedAwards,
    /// Event kind that ends the game in an outright red win.
    pub auto_win_action: EventAction,
}

impl Default for RuleSet {
    fn default() -> Self {
        Self {
            conduct_rules: vec![
                ConductRule {
                    id: "rule1".into(),
                    penalty_points: 5,
                    team_scope: ConductScope::OffendersTeam,
                },
                ConductRule { id: "rule2".into(), penalty_points: 20, team_scope: ConductScope::Red },
                ConductRule {
                    id: "rule3".into(),
                    penalty_points: 20,
                    team_scope: ConductScope::OffendingTeam,
                },
            ],
            blue_awards: BlueAwards::default(),
            red_awards: RedAwards::default(),
            auto_win_action: EventAction::TargetReached,
        }
    }
}

/// Detail tag marking a pre-game eavesdropping violation.
pub const EAVESDROPPING_TAG: &str = "pre-game-eavesdropping";
/// Detail tag marking an unapproved visit to the opponents' area.
pub const AREA_VISIT_TAG: &str = "area-visit";

/// A minute or a minute range a line item refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MinuteRef {
    At(u32),
    Span { start: u32, end: u32 },
}

impl fmt::Display for MinuteRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MinuteRef::At(m) => write!(f, "{m}"),
            MinuteRef::Span { start, end } => write!(f, "{start}-{end}"),
        }
    }
}

/// One scored award or penalty, with pointers at the trace events that
/// justify it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineItem {
    pub team: Team,
    pub rule_ref: String,
    pub minute: MinuteRef,
    pub points: i64,
    pub evidence_event_indices: Vec<usize>,
}

/// Adjudication result for one trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub line_items: Vec<LineItem>,
    pub red_total: i64,
    pub blue_total: i64,
    pub auto_win: bool,
    pub winner: Winner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RosterMember {
    pub person_id: String,
    pub team: Team,
    #[serde(default)]
    pub events: BTreeSet<EventId>,
}

/// Who played, for conduct rules that look across events.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Roster {
    pub members: Vec<RosterMember>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScoringError {
    #[error("trace events out of order at index {index}")]
    UnorderedEvents { index: usize },
    #[error("event {index} at minute {minute} is past the end of the game ({final_minute})")]
    EventPastEnd { index: usize, minute: u32, final_minute: u32 },
    #[error("event {index}: unknown service \"{name}\"")]
    UnknownService { index: usize, name: String },
    #[error("event {index}: service event carries no target label")]
    MissingServiceLabel { index: usize },
    #[error("duplicate person id \"{id}\" in roster")]
    DuplicatePerson { id: String },
}

/// Winner under the totals already in the report: outright win for red if
/// flagged, otherwise the higher total, with equal totals a draw.
pub fn decide_winner(report: &ScoreReport) -> Winner {
    if report.auto_win || report.red_total > report.blue_total {
        Winner::Red
    } else if report.blue_total > report.red_total {
        Winner::Blue
    } else {
        Winner::Draw
    }
}

/// Closed outage interval `[start, end)` with the events that bound it.
struct Outage {
    start: u32,
    end: u32,
    evidence: Vec<usize>,
}

fn service_outages(
    t: &Trace,
    services: &[String],
) -> Result<Vec<Vec<Outage>>, ScoringError> {
    let mut outages: Vec<Vec<Outage>> = services.iter().map(|_| Vec::new()).collect();
    let mut open: Vec<Option<(u32, usize)>> = services.iter().map(|_| None).collect();

    for (idx, event) in t.events.iter().enumerate() {
        let relevant = matches!(
            event.action,
            EventAction::ServiceStopped | EventAction::ServiceRestored
        );
        if !relevant {
            continue;
        }
        let label = event
            .target_label
            .as_deref()
            .ok_or(ScoringError::MissingServiceLabel { index: idx })?;
        let Some(svc) = services.iter().position(|s| s == label) else {
            if label == ICS_PROCESS_SERVICE {
                // The terminal plant stop is scored by the outright-win rule.
                continue;
            }
            return Err(ScoringError::UnknownService { index: idx, name: label.to_string() });
        };
        match event.action {
            EventAction::ServiceStopped => {
                if open[svc].is_none() {
                    open[svc] = Some((event.minute, idx));
                }
            }
            EventAction::ServiceRestored => {
                if let Some((start, stop_idx)) = open[svc].take() {
                    outages[svc].push(Outage {
                        start,
                        end: event.minute,
                        evidence: vec![stop_idx, idx],
                    });
                }
            }
            _ => unreachable!(),
        }
    }
    for (svc, still_open) in open.into_iter().enumerate() {
        if let Some((start, stop_idx)) = still_open {
            outages[svc].push(Outage { start, end: t.final_minute, evidence: vec![stop_idx] });
        }
    }
    Ok(outages)
}

/// Service availability scoring.
///
/// Blue earns the hourly award at each whole-hour boundary for every
/// service that stayed up through the entire preceding hour; partial hours
/// earn nothing. Red earns the service-stop award once per maximal
/// contiguous outage that lasted at least the configured threshold.
pub fn uptime_points(
    t: &Trace,
    services: &[String],
    rules: &RuleSet,
) -> Result<Vec<LineItem>, ScoringError> {
    let outages = service_outages(t, services)?;
    let mut items = Vec::new();

    let full_hours = t.final_minute / 60;
    for (svc_outages, _service) in outages.iter().zip(services) {
        for hour in 1..=full_hours {
            let (w0, w1) = ((hour - 1) * 60, hour * 60);
            let clean = svc_outages.iter().all(|o| o.start >= w1 || o.end <= w0);
            if clean {
                items.push(LineItem {
                    team: Team::Blue,
                    rule_ref: "Table2.1".into(),
                    minute: MinuteRef::Span { start: w0, end: w1 },
                    points: rules.blue_awards.service_uptime_points_per_hour,
                    evidence_event_indices: Vec::new(),
                });
            }
        }
        for outage in svc_outages {
            if outage.end - outage.start >= rules.red_awards.service_stop_min_minutes {
                items.push(LineItem {
                    team: Team::Red,
                    rule_ref: "Table3.1".into(),
                    minute: MinuteRef::Span { start: outage.start, end: outage.end },
                    points: rules.red_awards.service_stop_points,
                    evidence_event_indices: outage.evidence.clone(),
                });
            }
        }
    }
    Ok(items)
}

fn conduct_rule<'a>(rules: &'a RuleSet, id: &str) -> Option<&'a ConductRule> {
    rules.conduct_rules.iter().find(|r| r.id == id)
}

/// Conduct penalties from the roster and from tagged violation events.
///
/// Rule 1 fines each person who played both events, charged to their
/// team. Rule 2 fines red for each pre-game eavesdropping violation.
/// Rule 3 fines the offending team for each unapproved area visit.
pub fn conduct_penalties(t: &Trace, roster: &Roster, rules: &RuleSet) -> Vec<LineItem> {
    let mut items = Vec::new();

    if let Some(rule) = conduct_rule(rules, "rule1") {
        for member in &roster.members {
            if member.events.contains(&EventId::Event1) && member.events.contains(&EventId::Event2)
            {
                let team = match rule.team_scope {
                    ConductScope::Red => Team::Red,
                    _ => member.team,
                };
                items.push(LineItem {
                    team,
                    rule_ref: "Table1.1".into(),
                    minute: MinuteRef::At(0),
                    points: -rule.penalty_points,
                    evidence_event_indices: Vec::new(),
                });
            }
        }
    }

    for (idx, event) in t.events.iter().enumerate() {
        if event.action != EventAction::ConductViolation {
            continue;
        }
        let (rule_id, rule_ref) = match event.detail.as_str() {
            EAVESDROPPING_TAG => ("rule2", "Table1.2"),
            AREA_VISIT_TAG => ("rule3", "Table1.3"),
            _ => continue,
        };
        let Some(rule) = conduct_rule(rules, rule_id) else { continue };
        let team = match rule.team_scope {
            ConductScope::Red => Team::Red,
            ConductScope::OffendingTeam | ConductScope::OffendersTeam => match event.actor_team {
                ActorTeam::Red => Team::Red,
                ActorTeam::Blue => Team::Blue,
                ActorTeam::White => continue,
            },
        };
        items.push(LineItem {
            team,
            rule_ref: rule_ref.into(),
            minute: MinuteRef::At(event.minute),
            points: -rule.penalty_points,
            evidence_event_indices: vec![idx],
        });
    }
    items
}

fn check_well_formed(t: &Trace) -> Result<(), ScoringError> {
    let mut last = 0;
    for (idx, event) in t.events.iter().enumerate() {
        if event.minute < last {
            return Err(ScoringError::UnorderedEvents { index: idx });
        }
        if event.minute > t.final_minute {
            return Err(ScoringError::EventPastEnd {
                index: idx,
                minute: event.minute,
                final_minute: t.final_minute,
            });
        }
        last = event.minute;
    }
    Ok(())
}

fn validated(event: &GameEvent) -> bool {
    event.outcome == EventOutcome::Success
}

/// Adjudicate a trace: availability awards, red achievements, intrusion
/// stops, conduct penalties, totals, and the winner. Pure — the same trace
/// always yields the identical report.
pub fn adjudicate(t: &Trace, rules: &RuleSet, roster: &Roster) -> Result<ScoreReport, ScoringError> {
    let mut seen = BTreeSet::new();
    for member in &roster.members {
        if !seen.insert(member.person_id.as_str()) {
            return Err(ScoringError::DuplicatePerson { id: member.person_id.clone() });
        }
    }
    check_well_formed(t)?;

    let mut items = uptime_points(t, &t.config_echo.critical_services, rules)?;

    let mut discovered_hosts: BTreeSet<&str> = BTreeSet::new();
    let mut auto_win = false;
    for (idx, event) in t.events.iter().enumerate() {
        if event.action == rules.auto_win_action && validated(event) {
            auto_win = true;
            items.push(LineItem {
                team: Team::Red,
                rule_ref: "Table3.5".into(),
                minute: MinuteRef::At(event.minute),
                points: 0,
                evidence_event_indices: vec![idx],
            });
        }
        match event.action {
            EventAction::RemoteShell if validated(event) => {
                items.push(LineItem {
                    team: Team::Red,
                    rule_ref: "Table3.2".into(),
                    minute: MinuteRef::At(event.minute),
                    points: rules.red_awards.remote_shell_points,
                    evidence_event_indices: vec![idx],
                });
            }
            EventAction::AdminPrivilege if validated(event) => {
                items.push(LineItem {
                    team: Team::Red,
                    rule_ref: "Table3.3".into(),
                    minute: MinuteRef::At(event.minute),
                    points: rules.red_awards.admin_points,
                    evidence_event_indices: vec![idx],
                });
            }
            EventAction::KnowledgeRevealed if validated(event) => {
                if let Some(host) = event.target_label.as_deref() {
                    if discovered_hosts.insert(host) {
                        items.push(LineItem {
                            team: Team::Red,
                            rule_ref: "Table3.4".into(),
                            minute: MinuteRef::At(event.minute),
                            points: rules.red_awards.host_discovery_points,
                            evidence_event_indices: vec![idx],
                        });
                    }
                }
            }
            EventAction::IntrusionBlocked if validated(event) => {
                items.push(LineItem {
                    team: Team::Blue,
                    rule_ref: "Table2.2".into(),
                    minute: MinuteRef::At(event.minute),
                    points: rules.blue_awards.intrusion_stop_points,
                    evidence_event_indices: vec![idx],
                });
            }
            _ => {}
        }
    }

    items.extend(conduct_penalties(t, roster, rules));

    let red_total = items.iter().filter(|i| i.team == Team::Red).map(|i| i.points).sum();
    let blue_total = items.iter().filter(|i| i.team == Team::Blue).map(|i| i.points).sum();
    let mut report =
        ScoreReport { line_items: items, red_total, blue_total, auto_win, winner: Winner::Draw };
    report.winner = decide_winner(&report);
    Ok(report)
}

/// Human-readable rendering: one line per item plus running totals.
pub fn render_text(report: &ScoreReport) -> String {
    let mut out = String::new();
    let mut running_red = 0i64;
    let mut running_blue = 0i64;
    for item in &report.line_items {
        match item.team {
            Team::Red => running_red += item.points,
            Team::Blue => running_blue += item.points,
        }
        out.push_str(&format!(
            "{:<4} {:<9} minute {:>9}  {:>+5}   red {:>5}  blue {:>5}\n",
            match item.team {
                Team::Red => "red",
                Team::Blue => "blue",
            },
            item.rule_ref,
            item.minute.to_string(),
            item.points,
            running_red,
            running_blue,
        ));
    }
    out.push_str(&format!("totals: red {}  blue {}\n", report.red_total, report.blue_total));
    if report.auto_win {
        out.push_str("outright win: the plant process was stopped\n");
    }
    out.push_str(&format!(
        "winner: {}\n",
        match report.winner {
            Winner::Red => "red",
            Winner::Blue => "blue",
            Winner::Draw => "draw",
        }
    ));
    out
}

/// CSV rendering with columns `team,rule_ref,minute,points`.
pub fn render_csv(report: &ScoreReport) -> String {
    let mut out = String::from("team,rule_ref,minute,points\n");
    for item in &report.line_items {
        out.push_str(&format!(
            "{},{},{},{}\n",
            match item.team {
                Team::Red => "red",
                Team::Blue => "blue",
            },
            item.rule_ref,
            item.minute,
            item.points
        ));
    }
    out
}
