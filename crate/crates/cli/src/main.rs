//! Command-line pipeline for the war-game laboratory.
//!
//! Stages communicate only through files — scenario documents, solver
//! predictions, traces, score reports — so every stage is independently
//! reproducible from its input artifacts. Machine-readable JSON goes to
//! `--out`; standard output carries a human summary. Exit code 1 marks an
//! input or validation problem, 2 a runtime failure such as solver
//! non-convergence or a malformed trace.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use wargame_lab::analysis::{self, MonteCarloSummary, PredictionComparison, monte_carlo};
use wargame_lab::engine::affordable_defenses;
use wargame_lab::equilibria::{
    EquilibriaError, EquilibriumResult, Leader, MixedSolution, SolveMode, TieBreak, mixed_minimax,
    stackelberg,
};
use wargame_lab::scenario::{Budget, Scenario, Severity, parse_scenario, validate_scenario};
use wargame_lab::scoring::{self, Roster, RuleSet, ScoreReport, adjudicate};
use wargame_lab::sim::{GameConfig, SimError, Trace, apply_training_effect, run_game};

/// Environment variable capping Monte Carlo worker threads.
const THREADS_ENV: &str = "WARGAME_LAB_THREADS";

#[derive(Parser)]
#[command(
    name = "wargame-lab",
    version,
    about = "Layered attacker-defender security games: solve, simulate, score, compare"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LeaderArg {
    Defender,
    Attacker,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    AnticipatoryStrong,
    AnticipatoryWeak,
    Literal,
}

#[derive(Clone, Copy, ValueEnum)]
enum TieBreakArg {
    LowestIndex,
    FollowerFavorsLeader,
    FollowerHarmsLeader,
}

/// A number or the word `unbounded`.
#[derive(Clone, Copy)]
struct BudgetArg(Budget);

impl FromStr for BudgetArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "unbounded" {
            return Ok(BudgetArg(Budget::Unbounded));
        }
        s.parse::<f64>()
            .map(|v| BudgetArg(Budget::Limited(v)))
            .map_err(|_| format!("expected a number or \"unbounded\", got \"{s}\""))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario document and list every issue found
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Compute the leader-follower equilibrium, optionally with the
    /// zero-sum mixed-strategy view
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        leader: LeaderArg,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Defender budget; defaults to the scenario's own
        #[arg(long)]
        budget: Option<BudgetArg>,
        #[arg(long, value_enum, default_value = "lowest-index")]
        tie_break: TieBreakArg,
        /// Also solve the zero-sum view of the attacker payoff by
        /// fictitious play
        #[arg(long)]
        zero_sum: bool,
        /// Certified value-gap tolerance for --zero-sum
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
        #[arg(long, default_value_t = 10_000_000)]
        max_iterations: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one seeded game and write its trace
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Adjudicate a trace into a score report
    Score {
        #[arg(long)]
        trace: PathBuf,
        /// Rule book JSON; defaults to the built-in point tables
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Roster JSON for cross-event conduct checks
        #[arg(long)]
        roster: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the line items as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run seeded replications and aggregate the outcomes
    Montecarlo {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Master seed; overrides the config's seed
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short = 'n', long = "replications")]
        replications: usize,
        /// Output directory for summary.json and replications.csv
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write every replication's trace into the output directory
        #[arg(long)]
        save_traces: bool,
    },
    /// Compare recorded traces against a solver prediction
    Compare {
        /// Glob over trace files, e.g. "runs/trace-*.jsonl"
        #[arg(long)]
        traces: String,
        /// Prediction file written by solve
        #[arg(long)]
        prediction: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure classified by exit code: 1 input, 2 runtime.
enum CliError {
    Input(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Input(m) => m,
            CliError::Runtime(m) => m,
        }
    }
}

trait Classify<T> {
    fn input(self) -> Result<T, CliError>;
    fn runtime(self) -> Result<T, CliError>;
}

impl<T, E: std::fmt::Display> Classify<T> for Result<T, E> {
    fn input(self) -> Result<T, CliError> {
        self.map_err(|e| CliError::Input(e.to_string()))
    }
    fn runtime(self) -> Result<T, CliError> {
        self.map_err(|e| CliError::Runtime(e.to_string()))
    }
}

/// What a completed command produced.
struct CommandResult {
    exit_code: u8,
    stdout_summary: String,
    artifacts_written: Vec<PathBuf>,
}

impl CommandResult {
    fn ok(stdout_summary: String, artifacts_written: Vec<PathBuf>) -> Self {
        Self { exit_code: 0, stdout_summary, artifacts_written }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| {
                CliError::Runtime(format!("cannot create {}: {e}", parent.display()))
            })?;
        }
    }
    std::fs::write(path, contents)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    parse_scenario(&read_file(path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_config(path: &Path) -> Result<GameConfig, CliError> {
    serde_json::from_str(&read_file(path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn pretty_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text
}

fn classify_sim(e: SimError) -> CliError {
    match e {
        SimError::TraceFormat { .. } => CliError::Runtime(e.to_string()),
        SimError::Equilibria(EquilibriaError::NonConvergence { .. }) => {
            CliError::Runtime(e.to_string())
        }
        _ => CliError::Input(e.to_string()),
    }
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_validate(scenario_path: &Path) -> Result<CommandResult, CliError> {
    let text = read_file(scenario_path)?;
    let mut out = String::new();
    match parse_scenario(&text) {
        Ok(scenario) => {
            let issues = validate_scenario(&scenario);
            for issue in &issues {
                let _ = writeln!(out, "{issue}");
            }
            let errors = issues.iter().filter(|i| i.severity == Severity::Error).count();
            let warnings = issues.iter().filter(|i| i.severity == Severity::Warning).count();
            let _ = writeln!(out, "{errors} errors, {warnings} warnings");
            let _ = writeln!(
                out,
                "scenario \"{}\": {} layers, {} attacks, {} defenses",
                scenario.name,
                scenario.layer_count(),
                scenario.attack_count(),
                scenario.defense_count()
            );
            Ok(CommandResult {
                exit_code: if errors > 0 { 1 } else { 0 },
                stdout_summary: out,
                artifacts_written: vec![],
            })
        }
        Err(wargame_lab::scenario::ScenarioError::Invalid { issues }) => {
            for issue in &issues {
                let _ = writeln!(out, "{issue}");
            }
            let _ = writeln!(out, "{} errors, 0 warnings", issues.len());
            Ok(CommandResult { exit_code: 1, stdout_summary: out, artifacts_written: vec![] })
        }
        Err(e) => Err(CliError::Input(format!("{}: {e}", scenario_path.display()))),
    }
}

#[derive(Serialize, Deserialize)]
struct SolveOutput {
    #[serde(flatten)]
    equilibrium: EquilibriumResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    zero_sum: Option<MixedSolution>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    scenario_path: &Path,
    leader: LeaderArg,
    mode: ModeArg,
    budget: Option<BudgetArg>,
    tie_break: TieBreakArg,
    zero_sum: bool,
    tolerance: f64,
    max_iterations: u64,
    out: Option<&Path>,
) -> Result<CommandResult, CliError> {
    let scenario = load_scenario(scenario_path)?;
    let leader = match leader {
        LeaderArg::Defender => Leader::Defender,
        LeaderArg::Attacker => Leader::Attacker,
    };
    let mode = match mode {
        ModeArg::AnticipatoryStrong => SolveMode::AnticipatoryStrong,
        ModeArg::AnticipatoryWeak => SolveMode::AnticipatoryWeak,
        ModeArg::Literal => SolveMode::LiteralJointArgmax,
    };
    let tie_break = match tie_break {
        TieBreakArg::LowestIndex => TieBreak::LowestIndex,
        TieBreakArg::FollowerFavorsLeader => TieBreak::FollowerFavorsLeader,
        TieBreakArg::FollowerHarmsLeader => TieBreak::FollowerHarmsLeader,
    };
    let budget = budget.map(|b| b.0).unwrap_or(scenario.defender_budget);
    if tolerance <= 0.0 {
        return Err(CliError::Input("tolerance must be positive".into()));
    }

    let equilibrium =
        stackelberg(&scenario, leader, mode, &budget, tie_break).map_err(|e| match e {
            EquilibriaError::NonConvergence { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Input(e.to_string()),
        })?;

    let zero_sum_solution = if zero_sum {
        let matrices = wargame_lab::engine::build_matrices(&scenario).input()?;
        Some(mixed_minimax(&matrices.u_a, tolerance, max_iterations).runtime()?)
    } else {
        None
    };

    let mut text = String::new();
    let (attack, defense) = (equilibrium.predicted_attack(), equilibrium.predicted_defense());
    let _ = writeln!(text, "scenario: {}", scenario.name);
    let _ = writeln!(
        text,
        "leader: {}  mode: {:?}  tie-break: {}",
        match leader {
            Leader::Defender => "defender",
            Leader::Attacker => "attacker",
        },
        mode,
        equilibrium.tie_break
    );
    let _ = writeln!(
        text,
        "committed defense: {} \"{}\"  attack response: {} \"{}\"",
        defense, scenario.defenses[defense].name, attack, scenario.attacks[attack].name
    );
    let _ = writeln!(
        text,
        "utilities: attacker {}  defender {}  target probability: {}",
        equilibrium.u_a_star, equilibrium.u_d_star, equilibrium.p_target_star
    );
    let affordable = affordable_defenses(&scenario, &budget);
    let _ = writeln!(text, "affordable defenses under budget {budget}: {affordable:?}");
    let _ = writeln!(text, "note: a single shared asset value prices both sides' stakes");
    if let Some(ms) = &zero_sum_solution {
        let _ = writeln!(
            text,
            "zero-sum view over the attacker payoff: value {} (gap {:.3e}, {} iterations)",
            ms.value, ms.gap, ms.iterations
        );
        let _ = writeln!(text, "  attacker mix {:?}", ms.row_mix);
        let _ = writeln!(text, "  defender mix {:?}", ms.col_mix);
        let _ = writeln!(
            text,
            "  note: an approximation — per-cell costs make the game non-constant-sum"
        );
    }

    let output = SolveOutput { equilibrium, zero_sum: zero_sum_solution };
    let mut artifacts = Vec::new();
    if let Some(path) = out {
        write_file(path, &pretty_json(&output))?;
        let _ = writeln!(text, "wrote {}", path.display());
        artifacts.push(path.to_path_buf());
    }
    Ok(CommandResult::ok(text, artifacts))
}

fn cmd_simulate(
    scenario_path: &Path,
    config_path: &Path,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<CommandResult, CliError> {
    let scenario = load_scenario(scenario_path)?;
    let mut config = load_config(config_path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let config = apply_training_effect(&config);
    let trace = run_game(&scenario, &config).map_err(classify_sim)?;

    let mut text = String::new();
    let _ = writeln!(
        text,
        "simulated \"{}\": {} events over {} minutes (seed {})",
        trace.scenario_name,
        trace.events.len(),
        trace.final_minute,
        config.seed
    );
    let reached =
        trace.events.iter().any(|e| e.action == wargame_lab::sim::EventAction::TargetReached);
    let _ = writeln!(text, "target reached: {}", if reached { "yes" } else { "no" });

    let mut artifacts = Vec::new();
    if let Some(path) = out {
        write_file(path, &trace.to_jsonl())?;
        let _ = writeln!(text, "wrote {}", path.display());
        artifacts.push(path.to_path_buf());
    }
    Ok(CommandResult::ok(text, artifacts))
}

fn cmd_score(
    trace_path: &Path,
    rules_path: Option<&Path>,
    roster_path: Option<&Path>,
    out: Option<&Path>,
    csv: Option<&Path>,
) -> Result<CommandResult, CliError> {
    let trace = Trace::from_jsonl(&read_file(trace_path)?).runtime()?;
    let rules: RuleSet = match rules_path {
        Some(path) => serde_json::from_str(&read_file(path)?)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?,
        None => RuleSet::default(),
    };
    let roster: Roster = match roster_path {
        Some(path) => serde_json::from_str(&read_file(path)?)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?,
        None => Roster::default(),
    };
    let report: ScoreReport = adjudicate(&trace, &rules, &roster).runtime()?;

    let mut text = scoring::render_text(&report);
    let mut artifacts = Vec::new();
    if let Some(path) = out {
        write_file(path, &pretty_json(&report))?;
        let _ = writeln!(text, "wrote {}", path.display());
        artifacts.push(path.to_path_buf());
    }
    if let Some(path) = csv {
        write_file(path, &scoring::render_csv(&report))?;
        let _ = writeln!(text, "wrote {}", path.display());
        artifacts.push(path.to_path_buf());
    }
    Ok(CommandResult::ok(text, artifacts))
}

fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(raw) => {
            let n: usize = raw.parse().map_err(|_| {
                CliError::Input(format!("{THREADS_ENV} must be a positive integer"))
            })?;
            if n == 0 {
                return Err(CliError::Input(format!("{THREADS_ENV} must be a positive integer")));
            }
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

fn cmd_montecarlo(
    scenario_path: &Path,
    config_path: &Path,
    seed: Option<u64>,
    replications: usize,
    out: Option<&Path>,
    save_traces: bool,
) -> Result<CommandResult, CliError> {
    let scenario = load_scenario(scenario_path)?;
    let mut config = load_config(config_path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let config = apply_training_effect(&config);
    if replications == 0 {
        return Err(CliError::Input("at least one replication required".into()));
    }

    let run = || monte_carlo(&scenario, &config, replications);
    let summary: MonteCarloSummary = match thread_cap()? {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))?
            .install(run),
        None => run(),
    }
    .map_err(|e| match e {
        analysis::AnalysisError::Sim(inner) => classify_sim(inner),
        analysis::AnalysisError::Scoring(inner) => CliError::Runtime(inner.to_string()),
        other => CliError::Input(other.to_string()),
    })?;

    let mut text = analysis::render_montecarlo_text(&summary);
    let mut artifacts = Vec::new();
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        let summary_path = dir.join("summary.json");
        write_file(&summary_path, &pretty_json(&summary))?;
        let csv_path = dir.join("replications.csv");
        write_file(&csv_path, &analysis::render_replications_csv(&summary))?;
        let _ = writeln!(text, "wrote {}", summary_path.display());
        let _ = writeln!(text, "wrote {}", csv_path.display());
        artifacts.push(summary_path);
        artifacts.push(csv_path);
        if save_traces {
            for outcome in &summary.per_replication_outcomes {
                let mut rep_cfg = config.clone();
                rep_cfg.seed = outcome.seed;
                let trace = run_game(&scenario, &rep_cfg).map_err(classify_sim)?;
                let path = dir.join(format!("trace-{:06}.jsonl", outcome.replication));
                write_file(&path, &trace.to_jsonl())?;
                artifacts.push(path);
            }
            let _ =
                writeln!(text, "wrote {} trace files", summary.per_replication_outcomes.len());
        }
    }
    Ok(CommandResult::ok(text, artifacts))
}

fn cmd_compare(
    traces_glob: &str,
    prediction_path: &Path,
    out: Option<&Path>,
) -> Result<CommandResult, CliError> {
    let prediction: SolveOutput = serde_json::from_str(&read_file(prediction_path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", prediction_path.display())))?;

    let paths: Vec<PathBuf> = glob::glob(traces_glob)
        .map_err(|e| CliError::Input(format!("bad glob \"{traces_glob}\": {e}")))?
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Input(e.to_string()))?;
    if paths.is_empty() {
        return Err(CliError::Input(format!("no trace files match \"{traces_glob}\"")));
    }
    let mut traces = Vec::with_capacity(paths.len());
    for path in &paths {
        traces.push(Trace::from_jsonl(&read_file(path)?).runtime()?);
    }

    let comparison: PredictionComparison =
        analysis::compare_report(&traces, &prediction.equilibrium).input()?;

    let mut text =
        format!("compared {} traces against {}\n", traces.len(), prediction_path.display());
    text.push_str(&analysis::render_comparison_text(&comparison));
    let mut artifacts = Vec::new();
    if let Some(path) = out {
        write_file(path, &pretty_json(&comparison))?;
        let _ = writeln!(text, "wrote {}", path.display());
        artifacts.push(path.to_path_buf());
    }
    Ok(CommandResult::ok(text, artifacts))
}

fn run(cli: Cli) -> Result<CommandResult, CliError> {
    match cli.command {
        Command::Validate { scenario } => cmd_validate(&scenario),
        Command::Solve {
            scenario,
            leader,
            mode,
            budget,
            tie_break,
            zero_sum,
            tolerance,
            max_iterations,
            out,
        } => cmd_solve(
            &scenario,
            leader,
            mode,
            budget,
            tie_break,
            zero_sum,
            tolerance,
            max_iterations,
            out.as_deref(),
        ),
        Command::Simulate { scenario, config, seed, out } => {
            cmd_simulate(&scenario, &config, seed, out.as_deref())
        }
        Command::Score { trace, rules, roster, out, csv } => {
            cmd_score(&trace, rules.as_deref(), roster.as_deref(), out.as_deref(), csv.as_deref())
        }
        Command::Montecarlo { scenario, config, seed, replications, out, save_traces } => {
            cmd_montecarlo(&scenario, &config, seed, replications, out.as_deref(), save_traces)
        }
        Command::Compare { traces, prediction, out } => {
            cmd_compare(&traces, &prediction, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders help/version to stdout with code 0, and parse
            // failures as "error: ..." plus usage text
            return match e.print() {
                Ok(()) => ExitCode::from(if e.exit_code() == 0 { 0 } else { 1 }),
                Err(_) => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(result) => {
            print!("{}", result.stdout_summary);
            let _ = result.artifacts_written;
            ExitCode::from(result.exit_code)
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
