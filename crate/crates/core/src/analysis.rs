//! Post-game analysis: compare recorded traces against the solver's
//! prediction, and run seeded Monte Carlo studies over scenarios and
//! behavioral knobs.
//!
//! Agreement is measured per decision: the share of red attack attempts
//! that used the predicted attack. A trace with no attempts counts as
//! vacuous agreement (rate 1.0, flagged) so batch pipelines survive
//! degenerate runs. Interval estimates use the Wilson score at 95%.

use serde::{Deserialize, Serialize};

use crate::equilibria::{EquilibriumKind, EquilibriumResult};
use crate::scenario::Scenario;
use crate::scoring::{Roster, RuleSet, ScoringError, Winner, adjudicate};
use crate::sim::{EventAction, GameConfig, SimError, Trace, derive_replication_seed, run_game};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("no traces provided")]
    EmptyTraces,
    #[error("scenario mismatch: prediction is for \"{expected}\", trace is for \"{found}\"")]
    ScenarioMismatch { expected: String, found: String },
    #[error("at least one replication required")]
    ZeroReplications,
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

/// Fraction estimate with a 95% Wilson score interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub successes: usize,
    pub trials: usize,
}

impl RateEstimate {
    pub fn from_counts(successes: usize, trials: usize) -> Self {
        assert!(trials > 0, "trials must be positive");
        let z = 1.959_963_984_540_054_f64;
        let n = trials as f64;
        let p = successes as f64 / n;
        let denom = 1.0 + z * z / n;
        let center = (p + z * z / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
        Self { estimate: p, ci_low: center - half, ci_high: center + half, successes, trials }
    }
}

/// Per-decision agreement between recorded red play and a prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub rate: f64,
    pub matching: usize,
    pub total: usize,
    /// True when there were no attack attempts and the rate is the 1.0
    /// convention rather than an observation.
    pub vacuous: bool,
}

impl EquilibriumResult {
    /// The attack index this prediction says red plays.
    pub fn predicted_attack(&self) -> usize {
        match self.kind {
            EquilibriumKind::StackelbergAttackerLeader => self.leader_strategy,
            _ => self.follower_strategy,
        }
    }

    /// The defense index this prediction says blue deploys.
    pub fn predicted_defense(&self) -> usize {
        match self.kind {
            EquilibriumKind::StackelbergAttackerLeader => self.follower_strategy,
            _ => self.leader_strategy,
        }
    }
}

fn check_same_scenario(t: &Trace, predicted: &EquilibriumResult) -> Result<(), AnalysisError> {
    if t.scenario_name != predicted.scenario_name {
        return Err(AnalysisError::ScenarioMismatch {
            expected: predicted.scenario_name.clone(),
            found: t.scenario_name.clone(),
        });
    }
    Ok(())
}

/// Share of red attack attempts that used the predicted attack.
pub fn strategy_agreement(
    t: &Trace,
    predicted: &EquilibriumResult,
) -> Result<Agreement, AnalysisError> {
    check_same_scenario(t, predicted)?;
    let target = predicted.predicted_attack();
    let mut total = 0;
    let mut matching = 0;
    for event in &t.events {
        if event.action == EventAction::AttackAttempt {
            total += 1;
            if event.attack_index == Some(target) {
                matching += 1;
            }
        }
    }
    if total == 0 {
        return Ok(Agreement { rate: 1.0, matching: 0, total: 0, vacuous: true });
    }
    Ok(Agreement { rate: matching as f64 / total as f64, matching, total, vacuous: false })
}

/// Fraction of traces in which the attack reached the target, with a
/// Wilson interval. All traces must come from the same scenario.
pub fn empirical_target_rate(traces: &[Trace]) -> Result<RateEstimate, AnalysisError> {
    let first = traces.first().ok_or(AnalysisError::EmptyTraces)?;
    for t in traces {
        if t.scenario_name != first.scenario_name {
            return Err(AnalysisError::ScenarioMismatch {
                expected: first.scenario_name.clone(),
                found: t.scenario_name.clone(),
            });
        }
    }
    let successes = traces
        .iter()
        .filter(|t| t.events.iter().any(|e| e.action == EventAction::TargetReached))
        .count();
    Ok(RateEstimate::from_counts(successes, traces.len()))
}

/// One Monte Carlo replication's adjudicated outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationOutcome {
    pub replication: usize,
    pub seed: u64,
    pub red_total: i64,
    pub blue_total: i64,
    pub winner: Winner,
    pub target_reached: bool,
    pub final_minute: u32,
}

/// Aggregated result of a replication study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub replications: usize,
    pub master_seed: u64,
    pub red_win_rate: f64,
    pub mean_red_total: f64,
    pub mean_blue_total: f64,
    pub empirical_p_target: RateEstimate,
    pub per_replication_outcomes: Vec<ReplicationOutcome>,
}

/// Run `n` seeded replications of the game and adjudicate each under the
/// default rule book with an empty roster.
///
/// Replication `r` runs with the seed derived from `(cfg.seed, r)`, so the
/// study is reproducible from the master seed alone. Outcomes are
/// aggregated in replication order whatever the execution schedule; with
/// the `parallel` feature the replications run on the current rayon pool
/// and the summary is identical at any thread count.
pub fn monte_carlo(
    s: &Scenario,
    cfg: &GameConfig,
    n: usize,
) -> Result<MonteCarloSummary, AnalysisError> {
    if n == 0 {
        return Err(AnalysisError::ZeroReplications);
    }
    let master_seed = cfg.seed;
    let rules = RuleSet::default();
    let roster = Roster::default();
    let run_one = |replication: usize| -> Result<ReplicationOutcome, AnalysisError> {
        let mut rep_cfg = cfg.clone();
        rep_cfg.seed = derive_replication_seed(master_seed, replication as u64);
        let trace = run_game(s, &rep_cfg)?;
        let report = adjudicate(&trace, &rules, &roster)?;
        Ok(ReplicationOutcome {
            replication,
            seed: rep_cfg.seed,
            red_total: report.red_total,
            blue_total: report.blue_total,
            winner: report.winner,
            target_reached: trace.events.iter().any(|e| e.action == EventAction::TargetReached),
            final_minute: trace.final_minute,
        })
    };

    #[cfg(feature = "parallel")]
    let outcomes: Result<Vec<ReplicationOutcome>, AnalysisError> = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(run_one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Result<Vec<ReplicationOutcome>, AnalysisError> = (0..n).map(run_one).collect();
    let outcomes = outcomes?;

    let red_wins = outcomes.iter().filter(|o| o.winner == Winner::Red).count();
    let red_sum: i64 = outcomes.iter().map(|o| o.red_total).sum();
    let blue_sum: i64 = outcomes.iter().map(|o| o.blue_total).sum();
    let successes = outcomes.iter().filter(|o| o.target_reached).count();
    Ok(MonteCarloSummary {
        replications: n,
        master_seed,
        red_win_rate: red_wins as f64 / n as f64,
        mean_red_total: red_sum as f64 / n as f64,
        mean_blue_total: blue_sum as f64 / n as f64,
        empirical_p_target: RateEstimate::from_counts(successes, n),
        per_replication_outcomes: outcomes,
    })
}

/// Full comparison of recorded play against a prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionComparison {
    pub predicted: EquilibriumResult,
    /// Empirical distribution of red attack choices, indexed by attack.
    pub observed_attack_frequencies: Vec<f64>,
    /// Empirical distribution of blue defense deployments, indexed by defense.
    pub observed_defense_frequencies: Vec<f64>,
    pub agreement_rate: f64,
    pub vacuous_agreement: bool,
    pub predicted_p_target: f64,
    pub empirical_p_target: RateEstimate,
    /// Red attack decisions the agreement rate was measured over.
    pub n_decisions: usize,
}

/// Aggregate strategy frequencies across traces and pair the predicted
/// target probability with the empirical one.
pub fn compare_report(
    traces: &[Trace],
    predicted: &EquilibriumResult,
) -> Result<PredictionComparison, AnalysisError> {
    if traces.is_empty() {
        return Err(AnalysisError::EmptyTraces);
    }
    for t in traces {
        check_same_scenario(t, predicted)?;
    }

    let mut attack_counts: Vec<u64> = Vec::new();
    let mut defense_counts: Vec<u64> = Vec::new();
    let mut matching = 0usize;
    let mut total = 0usize;
    let target = predicted.predicted_attack();
    for t in traces {
        for event in &t.events {
            match event.action {
                EventAction::AttackAttempt => {
                    if let Some(i) = event.attack_index {
                        if i >= attack_counts.len() {
                            attack_counts.resize(i + 1, 0);
                        }
                        attack_counts[i] += 1;
                        total += 1;
                        if i == target {
                            matching += 1;
                        }
                    }
                }
                EventAction::MitigationDeployed => {
                    if let Some(j) = event.defense_index {
                        if j >= defense_counts.len() {
                            defense_counts.resize(j + 1, 0);
                        }
                        defense_counts[j] += 1;
                    }
                }
                _ => {}
            }
        }
    }

    let normalize = |counts: &[u64]| -> Vec<f64> {
        let sum: u64 = counts.iter().sum();
        if sum == 0 {
            return Vec::new();
        }
        counts.iter().map(|&c| c as f64 / sum as f64).collect()
    };

    let vacuous = total == 0;
    Ok(PredictionComparison {
        predicted: predicted.clone(),
        observed_attack_frequencies: normalize(&attack_counts),
        observed_defense_frequencies: normalize(&defense_counts),
        agreement_rate: if vacuous { 1.0 } else { matching as f64 / total as f64 },
        vacuous_agreement: vacuous,
        predicted_p_target: predicted.p_target_star,
        empirical_p_target: empirical_target_rate(traces)?,
        n_decisions: total,
    })
}

/// Human-readable rendering of a comparison.
pub fn render_comparison_text(c: &PredictionComparison) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "prediction: attack {} vs defense {} (p_target {})\n",
        c.predicted.predicted_attack(),
        c.predicted.predicted_defense(),
        c.predicted_p_target
    ));
    out.push_str(&format!(
        "agreement rate: {:.4} over {} red decisions{}\n",
        c.agreement_rate,
        c.n_decisions,
        if c.vacuous_agreement { " (vacuous: no attempts recorded)" } else { "" }
    ));
    if !c.observed_attack_frequencies.is_empty() {
        let freqs: Vec<String> =
            c.observed_attack_frequencies.iter().map(|f| format!("{f:.4}")).collect();
        out.push_str(&format!("observed attack frequencies: [{}]\n", freqs.join(", ")));
    }
    if !c.observed_defense_frequencies.is_empty() {
        let freqs: Vec<String> =
            c.observed_defense_frequencies.iter().map(|f| format!("{f:.4}")).collect();
        out.push_str(&format!("observed defense frequencies: [{}]\n", freqs.join(", ")));
    }
    out.push_str(&format!(
        "target rate: predicted {} vs empirical {:.4} (95% CI [{:.4}, {:.4}], {}/{} traces)\n",
        c.predicted_p_target,
        c.empirical_p_target.estimate,
        c.empirical_p_target.ci_low,
        c.empirical_p_target.ci_high,
        c.empirical_p_target.successes,
        c.empirical_p_target.trials
    ));
    out
}

/// Human-readable rendering of a Monte Carlo summary.
pub fn render_montecarlo_text(m: &MonteCarloSummary) -> String {
    format!(
        "replications: {}\nmaster seed: {}\nred win rate: {:.4}\nmean totals: red {:.2}, blue {:.2}\n\
         target rate: {:.4} (95% CI [{:.4}, {:.4}], {}/{})\n",
        m.replications,
        m.master_seed,
        m.red_win_rate,
        m.mean_red_total,
        m.mean_blue_total,
        m.empirical_p_target.estimate,
        m.empirical_p_target.ci_low,
        m.empirical_p_target.ci_high,
        m.empirical_p_target.successes,
        m.empirical_p_target.trials
    )
}

/// CSV of per-replication outcomes.
pub fn render_replications_csv(m: &MonteCarloSummary) -> String {
    let mut out =
        String::from("replication,seed,red_total,blue_total,winner,target_reached,final_minute\n");
    for o in &m.per_replication_outcomes {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            o.replication,
            o.seed,
            o.red_total,
            o.blue_total,
            match o.winner {
                Winner::Red => "red",
                Winner::Blue => "blue",
                Winner::Draw => "draw",
            },
            o.target_reached,
            o.final_minute
        ));
    }
    out
}


#[cfg(test)]
mod analysis_tests {
    use super::*;
    use crate::equilibria::{Leader, SolveMode, TieBreak, stackelberg};
    use crate::scenario::parse_scenario;
    use crate::scoring::{Roster, RuleSet, adjudicate};
    use crate::sim::{
        ActorTeam, AgentPolicy, EventOutcome, GameEvent, ScriptedAction, derive_replication_seed,
    };

    fn worked_2x2() -> Scenario {
        parse_scenario(
            &serde_json::json!({
                "name": "worked-2x2",
                "layers": [{"id": 0, "name": "l0"}],
                "attacks": [{"id": 0, "name": "a0"}, {"id": 1, "name": "a1"}],
                "defenses": [
                    {"id": 0, "name": "d0", "mitigation_ids": []},
                    {"id": 1, "name": "d1", "mitigation_ids": []}
                ],
                "mitigations": [],
                "penetration": [[[0.9, 0.2], [0.6, 0.4]]],
                "attack_cost": [[10.0, 10.0], [10.0, 10.0]],
                "defense_cost": [[20.0, 30.0], [20.0, 30.0]],
                "benefit": 100.0
            })
            .to_string(),
        )
        .unwrap()
    }

    fn three_attack_scenario() -> Scenario {
        parse_scenario(
            &serde_json::json!({
                "name": "three-attacks",
                "layers": [{"id": 0, "name": "l0"}],
                "attacks": [
                    {"id": 0, "name": "a0"}, {"id": 1, "name": "a1"}, {"id": 2, "name": "a2"}
                ],
                "defenses": [{"id": 0, "name": "d0", "mitigation_ids": []}],
                "mitigations": [],
                "penetration": [[[0.2], [0.2], [0.2]]],
                "attack_cost": [[0.0], [0.0], [0.0]],
                "defense_cost": [[0.0], [0.0], [0.0]],
                "benefit": 100.0
            })
            .to_string(),
        )
        .unwrap()
    }

    fn solved(s: &Scenario) -> crate::equilibria::EquilibriumResult {
        stackelberg(
            s,
            Leader::Defender,
            SolveMode::AnticipatoryStrong,
            &s.defender_budget,
            TieBreak::LowestIndex,
        )
        .unwrap()
    }

    /// One attack decision per game: the clock covers exactly one attempt.
    fn one_shot_config(red: AgentPolicy, seed: u64) -> GameConfig {
        let mut cfg = GameConfig::new(red, AgentPolicy::Equilibrium);
        cfg.seed = seed;
        cfg.duration_minutes = 30;
        cfg.tick_minutes = 1;
        cfg.attempt_duration_minutes = 30;
        cfg.detection_probability = 0.0;
        cfg.critical_services = Vec::new();
        cfg
    }

    fn attack_event(minute: u32, attack: usize) -> GameEvent {
        GameEvent {
            minute,
            actor_team: ActorTeam::Red,
            actor_id: "red-1".into(),
            action: EventAction::AttackAttempt,
            attack_index: Some(attack),
            defense_index: Some(0),
            layer_index: None,
            target_label: None,
            outcome: EventOutcome::Failure,
            detail: String::new(),
        }
    }

    fn synthetic_trace(s: &Scenario, events: Vec<GameEvent>) -> Trace {
        Trace {
            scenario_name: s.name.clone(),
            config_echo: one_shot_config(AgentPolicy::Equilibrium, 0),
            events,
            final_minute: 30,
        }
    }

    #[test]
    fn agreement_examples() {
        let s = worked_2x2();
        let predicted = solved(&s);
        assert_eq!(predicted.predicted_attack(), 1);

        let all_match =
            synthetic_trace(&s, vec![attack_event(1, 1), attack_event(5, 1), attack_event(9, 1)]);
        let a = strategy_agreement(&all_match, &predicted).unwrap();
        assert_eq!(a.rate, 1.0);
        assert!(!a.vacuous);

        let three_of_four = synthetic_trace(
            &s,
            vec![attack_event(1, 1), attack_event(5, 1), attack_event(9, 1), attack_event(12, 0)],
        );
        let a = strategy_agreement(&three_of_four, &predicted).unwrap();
        assert_eq!(a.rate, 0.75);
        assert_eq!((a.matching, a.total), (3, 4));

        let silent = synthetic_trace(&s, Vec::new());
        let a = strategy_agreement(&silent, &predicted).unwrap();
        assert_eq!(a.rate, 1.0);
        assert!(a.vacuous, "no attempts is flagged, not failed");
    }

    #[test]
    fn agreement_rejects_mismatched_scenarios() {
        let s = worked_2x2();
        let predicted = solved(&s);
        let mut foreign = synthetic_trace(&s, vec![attack_event(1, 1)]);
        foreign.scenario_name = "someone-else".into();
        assert!(matches!(
            strategy_agreement(&foreign, &predicted),
            Err(AnalysisError::ScenarioMismatch { .. })
        ));
    }

    #[test]
    fn target_rate_boundary_cases() {
        let s = worked_2x2();
        let empty: Vec<Trace> = Vec::new();
        assert!(matches!(empirical_target_rate(&empty), Err(AnalysisError::EmptyTraces)));

        let misses: Vec<Trace> =
            (0..10).map(|_| synthetic_trace(&s, vec![attack_event(1, 1)])).collect();
        let r = empirical_target_rate(&misses).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert!(r.ci_low.abs() < 1e-12);

        let mut hit = synthetic_trace(&s, vec![attack_event(1, 1)]);
        hit.events.push(GameEvent {
            action: EventAction::TargetReached,
            outcome: EventOutcome::Success,
            ..attack_event(2, 1)
        });
        let r = empirical_target_rate(&[hit]).unwrap();
        assert_eq!(r.estimate, 1.0);
    }

    #[test]
    fn single_replication_matches_direct_pipeline() {
        let s = worked_2x2();
        let cfg = one_shot_config(AgentPolicy::Equilibrium, 4242);
        let summary = monte_carlo(&s, &cfg, 1).unwrap();

        let mut direct_cfg = cfg.clone();
        direct_cfg.seed = derive_replication_seed(cfg.seed, 0);
        let trace = run_game(&s, &direct_cfg).unwrap();
        let report = adjudicate(&trace, &RuleSet::default(), &Roster::default()).unwrap();

        assert_eq!(summary.replications, 1);
        assert_eq!(summary.master_seed, 4242);
        let outcome = &summary.per_replication_outcomes[0];
        assert_eq!(outcome.seed, direct_cfg.seed);
        assert_eq!(outcome.red_total, report.red_total);
        assert_eq!(outcome.blue_total, report.blue_total);
        assert_eq!(summary.mean_red_total, report.red_total as f64);
        assert_eq!(summary.mean_blue_total, report.blue_total as f64);
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let s = worked_2x2();
        let cfg = one_shot_config(AgentPolicy::EpsilonGreedy { epsilon: 1.0 }, 77);
        let a = monte_carlo(&s, &cfg, 64).unwrap();
        let b = monte_carlo(&s, &cfg, 64).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn monte_carlo_summary_is_thread_count_invariant() {
        let s = worked_2x2();
        let cfg = one_shot_config(AgentPolicy::EpsilonGreedy { epsilon: 1.0 }, 123);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| monte_carlo(&s, &cfg, 200).unwrap());
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(|| monte_carlo(&s, &cfg, 200).unwrap());
        assert_eq!(
            serde_json::to_string(&single).unwrap(),
            serde_json::to_string(&many).unwrap()
        );
    }

    #[test]
    fn pinned_strategies_reproduce_the_product_probability() {
        // one layer at 0.54 equals the two-layer 0.9 x 0.6 product; each
        // replication holds exactly one attempt at the pinned cell
        let s = parse_scenario(
            &serde_json::json!({
                "name": "pinned-54",
                "layers": [{"id": 0, "name": "l0"}, {"id": 1, "name": "l1"}],
                "attacks": [{"id": 0, "name": "a0"}],
                "defenses": [{"id": 0, "name": "d0", "mitigation_ids": []}],
                "mitigations": [],
                "penetration": [[[0.9]], [[0.6]]],
                "attack_cost": [[0.0]],
                "defense_cost": [[0.0]],
                "benefit": 100.0
            })
            .to_string(),
        )
        .unwrap();
        let cfg = one_shot_config(
            AgentPolicy::Scripted { script: vec![ScriptedAction::Attack(0)] },
            9001,
        );
        let n = 2_000;
        let summary = monte_carlo(&s, &cfg, n).unwrap();
        let p = 0.54;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!(
            (summary.empirical_p_target.estimate - p).abs() <= 3.0 * sigma,
            "estimate {}",
            summary.empirical_p_target.estimate
        );
        assert!(summary.empirical_p_target.ci_low <= p && p <= summary.empirical_p_target.ci_high);
    }

    #[test]
    fn informed_equilibrium_agents_agree_perfectly() {
        let s = worked_2x2();
        let predicted = solved(&s);
        let traces: Vec<Trace> = (0..50)
            .map(|k| {
                let cfg = one_shot_config(AgentPolicy::Equilibrium, 1000 + k);
                run_game(&s, &cfg).unwrap()
            })
            .collect();
        let cmp = compare_report(&traces, &predicted).unwrap();
        assert_eq!(cmp.agreement_rate, 1.0);
        assert!(!cmp.vacuous_agreement);
        assert_eq!(cmp.observed_attack_frequencies, vec![0.0, 1.0]);
        // blue deploys the predicted defense at minute 0 and holds
        assert_eq!(cmp.observed_defense_frequencies, vec![0.0, 1.0]);
        assert_eq!(cmp.predicted_p_target, 0.4);
    }

    #[test]
    fn uniform_red_spreads_attacks_evenly() {
        let s = three_attack_scenario();
        let predicted = solved(&s);
        let n = 1_000;
        let traces: Vec<Trace> = (0..n)
            .map(|k| {
                let cfg =
                    one_shot_config(AgentPolicy::EpsilonGreedy { epsilon: 1.0 }, 20_000 + k);
                run_game(&s, &cfg).unwrap()
            })
            .collect();
        let cmp = compare_report(&traces, &predicted).unwrap();
        assert_eq!(cmp.n_decisions, n as usize);
        let sigma = ((1.0 / 3.0) * (2.0 / 3.0) / n as f64).sqrt();
        for &f in &cmp.observed_attack_frequencies {
            assert!((f - 1.0 / 3.0).abs() <= 3.0 * sigma, "frequency {f}");
        }
    }

    #[test]
    fn half_equilibrium_half_uniform_mixture() {
        let s = worked_2x2();
        let predicted = solved(&s);
        let n_each = 1_000u64;
        let mut traces = Vec::new();
        for k in 0..n_each {
            traces.push(
                run_game(&s, &one_shot_config(AgentPolicy::Equilibrium, 30_000 + k)).unwrap(),
            );
        }
        for k in 0..n_each {
            traces.push(
                run_game(
                    &s,
                    &one_shot_config(AgentPolicy::EpsilonGreedy { epsilon: 1.0 }, 40_000 + k),
                )
                .unwrap(),
            );
        }
        let cmp = compare_report(&traces, &predicted).unwrap();
        // equilibrium half always matches; the uniform half matches 1/N_a
        let expected = 0.5 + 0.5 / 2.0;
        let sigma = 0.5 * (0.5f64 * 0.5 / n_each as f64).sqrt();
        assert!(
            (cmp.agreement_rate - expected).abs() <= 3.0 * sigma,
            "rate {} vs {expected}",
            cmp.agreement_rate
        );
    }

    #[test]
    fn renderings_mention_the_key_numbers() {
        let s = worked_2x2();
        let predicted = solved(&s);
        let traces =
            vec![run_game(&s, &one_shot_config(AgentPolicy::Equilibrium, 555)).unwrap()];
        let cmp = compare_report(&traces, &predicted).unwrap();
        let text = render_comparison_text(&cmp);
        assert!(text.contains("agreement rate"));
        assert!(text.contains("target rate"));

        let summary = monte_carlo(&s, &one_shot_config(AgentPolicy::Equilibrium, 556), 8).unwrap();
        let text = render_montecarlo_text(&summary);
        assert!(text.contains("replications: 8"));
        let csv = render_replications_csv(&summary);
        assert_eq!(csv.lines().count(), 9);
    }
}
