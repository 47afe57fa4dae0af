//! End-to-end pipeline over the bundled fixtures: parse, validate, solve,
//! simulate, adjudicate, compare.

use wargame_lab::analysis::{compare_report, monte_carlo, strategy_agreement};
use wargame_lab::engine::build_matrices;
use wargame_lab::equilibria::{Leader, SolveMode, TieBreak, pure_nash, stackelberg};
use wargame_lab::scenario::{Severity, parse_scenario, validate_scenario};
use wargame_lab::scoring::{Roster, RuleSet, Winner, adjudicate};
use wargame_lab::sim::{GameConfig, Trace, apply_training_effect, run_game};

fn fixture(name: &str) -> String {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("read {path}: {e}"))
}

#[test]
fn alpha_fixture_has_the_documented_shape() {
    let s = parse_scenario(&fixture("alpha.json")).unwrap();
    assert_eq!(s.layer_count(), 2);
    assert_eq!(s.attack_count(), 3);
    assert_eq!(s.defense_count(), 3);
    assert_eq!(s.layers[0].name, "corporate DMZ");
    assert_eq!(s.layers[1].name, "plant network");
    assert!(validate_scenario(&s).iter().all(|i| i.severity != Severity::Error));
}

#[test]
fn minimal_fixture_is_the_smallest_legal_scenario() {
    let s = parse_scenario(&fixture("minimal.json")).unwrap();
    assert_eq!((s.layer_count(), s.attack_count(), s.defense_count()), (1, 1, 1));
}

#[test]
fn alpha_pipeline_runs_end_to_end() {
    let s = parse_scenario(&fixture("alpha.json")).unwrap();
    let matrices = build_matrices(&s).unwrap();
    assert_eq!(matrices.u_a.len(), 3);
    let _ = pure_nash(&matrices);

    let prediction = stackelberg(
        &s,
        Leader::Defender,
        SolveMode::AnticipatoryStrong,
        &s.defender_budget,
        TieBreak::LowestIndex,
    )
    .unwrap();

    let cfg: GameConfig = serde_json::from_str(&fixture("config_baseline.json")).unwrap();
    let cfg = apply_training_effect(&cfg);
    let trace = run_game(&s, &cfg).unwrap();
    assert_eq!(trace.scenario_name, "alpha-production-line");

    let report = adjudicate(&trace, &RuleSet::default(), &Roster::default()).unwrap();
    assert_eq!(
        report.red_total,
        report.line_items.iter().filter(|i| i.team == wargame_lab::scoring::Team::Red).map(|i| i.points).sum::<i64>()
    );

    let round_trip = Trace::from_jsonl(&trace.to_jsonl()).unwrap();
    assert_eq!(trace, round_trip);

    let agreement = strategy_agreement(&trace, &prediction).unwrap();
    assert!((0.0..=1.0).contains(&agreement.rate));

    let comparison = compare_report(&[trace], &prediction).unwrap();
    assert_eq!(comparison.predicted_p_target, prediction.p_target_star);

    let summary = monte_carlo(&s, &cfg, 16).unwrap();
    assert_eq!(summary.replications, 16);
}

#[test]
fn allup_scenario_always_ends_blue() {
    let s = parse_scenario(&fixture("allup.json")).unwrap();
    let cfg: GameConfig = serde_json::from_str(&fixture("config_allup.json")).unwrap();
    let trace = run_game(&s, &cfg).unwrap();
    let report = adjudicate(&trace, &RuleSet::default(), &Roster::default()).unwrap();
    // 3 default services, 24 clean hours, 5 points each
    assert_eq!(report.blue_total, 360);
    assert_eq!(report.red_total, 0);
    assert_eq!(report.winner, Winner::Blue);
}
