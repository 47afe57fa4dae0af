//! Browser demo: solve a scenario, watch one game unfold, and replicate
//! it — all in the page, backed by the same engine as the CLI.
//!
//! The exported functions speak JSON strings so the page needs no typed
//! bindings; the logic lives in plain functions that are also testable on
//! the host. Build for the web with:
//!
//! ```text
//! cargo build -p wargame-lab-demo --target wasm32-unknown-unknown --release
//! wasm-bindgen --target web --out-dir crates/wasm-demo/www/pkg \
//!     target/wasm32-unknown-unknown/release/wargame_lab_demo.wasm
//! ```

use wasm_bindgen::prelude::*;

use wargame_lab::analysis::monte_carlo;
use wargame_lab::engine::{affordable_defenses, build_matrices};
use wargame_lab::equilibria::{Leader, SolveMode, TieBreak, mixed_minimax, pure_nash, stackelberg};
use wargame_lab::scenario::{Budget, parse_scenario};
use wargame_lab::scoring::{Roster, RuleSet, adjudicate, render_text};
use wargame_lab::sim::{GameConfig, apply_training_effect, run_game};

const ALPHA_SCENARIO: &str = include_str!("../../../fixtures/alpha.json");
const BASELINE_CONFIG: &str = include_str!("../../../fixtures/config_baseline.json");

/// Bundled example scenario shown when the page loads.
#[wasm_bindgen]
pub fn default_scenario() -> String {
    ALPHA_SCENARIO.to_string()
}

/// Bundled game configuration shown when the page loads.
#[wasm_bindgen]
pub fn default_config() -> String {
    BASELINE_CONFIG.to_string()
}

fn parse_leader(s: &str) -> Result<Leader, String> {
    match s {
        "defender" => Ok(Leader::Defender),
        "attacker" => Ok(Leader::Attacker),
        other => Err(format!("unknown leader \"{other}\"")),
    }
}

fn parse_mode(s: &str) -> Result<SolveMode, String> {
    match s {
        "anticipatory-strong" => Ok(SolveMode::AnticipatoryStrong),
        "anticipatory-weak" => Ok(SolveMode::AnticipatoryWeak),
        "literal" => Ok(SolveMode::LiteralJointArgmax),
        other => Err(format!("unknown mode \"{other}\"")),
    }
}

fn parse_tie_break(s: &str) -> Result<TieBreak, String> {
    match s {
        "lowest-index" => Ok(TieBreak::LowestIndex),
        "follower-favors-leader" => Ok(TieBreak::FollowerFavorsLeader),
        "follower-harms-leader" => Ok(TieBreak::FollowerHarmsLeader),
        other => Err(format!("unknown tie-break \"{other}\"")),
    }
}

fn parse_budget(s: &str) -> Result<Option<Budget>, String> {
    let trimmed = s.trim();
    if trimmed.is_empty() {
        return Ok(None);
    }
    if trimmed == "unbounded" {
        return Ok(Some(Budget::Unbounded));
    }
    trimmed
        .parse::<f64>()
        .map(|v| Some(Budget::Limited(v)))
        .map_err(|_| format!("budget must be a number or \"unbounded\", got \"{trimmed}\""))
}

fn solve_impl(
    scenario_json: &str,
    leader: &str,
    mode: &str,
    tie_break: &str,
    budget: &str,
    zero_sum: bool,
) -> Result<String, String> {
    let scenario = parse_scenario(scenario_json).map_err(|e| e.to_string())?;
    let leader = parse_leader(leader)?;
    let mode = parse_mode(mode)?;
    let tie_break = parse_tie_break(tie_break)?;
    let budget = parse_budget(budget)?.unwrap_or(scenario.defender_budget);

    let matrices = build_matrices(&scenario).map_err(|e| e.to_string())?;
    let equilibrium =
        stackelberg(&scenario, leader, mode, &budget, tie_break).map_err(|e| e.to_string())?;
    let nash = pure_nash(&matrices);
    let zero_sum_solution = if zero_sum {
        Some(mixed_minimax(&matrices.u_a, 1e-3, 10_000_000).map_err(|e| e.to_string())?)
    } else {
        None
    };

    let out = serde_json::json!({
        "scenario_name": scenario.name,
        "attack_names": scenario.attacks.iter().map(|a| a.name.clone()).collect::<Vec<_>>(),
        "defense_names": scenario.defenses.iter().map(|d| d.name.clone()).collect::<Vec<_>>(),
        "matrices": matrices,
        "equilibrium": equilibrium,
        "pure_nash": nash,
        "affordable": affordable_defenses(&scenario, &budget),
        "zero_sum": zero_sum_solution,
    });
    Ok(out.to_string())
}

fn simulate_impl(scenario_json: &str, config_json: &str, seed: u64) -> Result<String, String> {
    let scenario = parse_scenario(scenario_json).map_err(|e| e.to_string())?;
    let mut config: GameConfig = serde_json::from_str(config_json).map_err(|e| e.to_string())?;
    config.seed = seed;
    let config = apply_training_effect(&config);
    let trace = run_game(&scenario, &config).map_err(|e| e.to_string())?;
    let report =
        adjudicate(&trace, &RuleSet::default(), &Roster::default()).map_err(|e| e.to_string())?;

    let out = serde_json::json!({
        "scenario_name": trace.scenario_name,
        "final_minute": trace.final_minute,
        "events": trace.events,
        "report": report,
        "report_text": render_text(&report),
    });
    Ok(out.to_string())
}

fn monte_carlo_impl(
    scenario_json: &str,
    config_json: &str,
    replications: usize,
    master_seed: u64,
) -> Result<String, String> {
    if replications == 0 || replications > 5_000 {
        return Err("replications must be between 1 and 5000".into());
    }
    let scenario = parse_scenario(scenario_json).map_err(|e| e.to_string())?;
    let mut config: GameConfig = serde_json::from_str(config_json).map_err(|e| e.to_string())?;
    config.seed = master_seed;
    let config = apply_training_effect(&config);
    let summary = monte_carlo(&scenario, &config, replications).map_err(|e| e.to_string())?;
    serde_json::to_string(&summary).map_err(|e| e.to_string())
}

/// Solve the leader-follower game; returns matrices, the equilibrium, any
/// pure best-reply cells, and optionally the fictitious-play mixed view.
#[wasm_bindgen]
pub fn solve(
    scenario_json: &str,
    leader: &str,
    mode: &str,
    tie_break: &str,
    budget: &str,
    zero_sum: bool,
) -> Result<String, JsError> {
    solve_impl(scenario_json, leader, mode, tie_break, budget, zero_sum)
        .map_err(|e| JsError::new(&e))
}

/// Run one seeded game; returns the full event trace and its score report.
#[wasm_bindgen]
pub fn simulate(scenario_json: &str, config_json: &str, seed: u64) -> Result<String, JsError> {
    simulate_impl(scenario_json, config_json, seed).map_err(|e| JsError::new(&e))
}

/// Run seeded replications and aggregate outcomes.
#[wasm_bindgen]
pub fn monte_carlo_study(
    scenario_json: &str,
    config_json: &str,
    replications: usize,
    master_seed: u64,
) -> Result<String, JsError> {
    monte_carlo_impl(scenario_json, config_json, replications, master_seed)
        .map_err(|e| JsError::new(&e))
}
