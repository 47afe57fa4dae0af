//! Solution concepts for the materialized game: pure Nash cells, zero-sum
//! saddle points, fictitious-play minimax, and leader-follower equilibria
//! in both move orders.
//!
//! Tie handling is explicit because it changes outcomes. In the
//! anticipatory modes the follower's preference among its best responses
//! comes from the mode (strong = break ties in the leader's favor, weak =
//! against); the `TieBreak` parameter settles whatever ties remain, and in
//! literal mode it alone defines the follower's preference. Leader-side
//! ties always resolve to the lowest index, so identical inputs yield
//! identical results.

use serde::{Deserialize, Serialize};

use crate::engine::{
    EngineError, UtilityMatrices, attacker_utility, build_matrices, defender_utility,
    target_probability,
};
use crate::scenario::{Budget, Scenario};

/// A cell that no player can improve on unilaterally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureCell {
    pub attack: usize,
    pub defense: usize,
    pub u_a: f64,
    pub u_d: f64,
}

/// Mixed-strategy solution of the zero-sum view with a certified value gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedSolution {
    pub row_mix: Vec<f64>,
    pub col_mix: Vec<f64>,
    /// Midpoint of the certified [lower, upper] value interval.
    pub value: f64,
    pub iterations: u64,
    /// Upper minus lower value bound at the stop; at most the requested
    /// tolerance on success.
    pub gap: f64,
}

/// Which player commits first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Leader {
    Defender,
    Attacker,
}

/// How the leader-follower solve reads the commitment step.
///
/// The anticipatory modes are standard leadership: the leader evaluates
/// each commitment against the follower's best response, assuming the
/// follower breaks ties for (strong) or against (weak) the leader. The
/// literal mode instead takes the joint argmax of the leader's utility
/// over both strategy sets and only then lets the follower respond.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    AnticipatoryStrong,
    AnticipatoryWeak,
    LiteralJointArgmax,
}

/// Deterministic resolution for ties the mode leaves open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    LowestIndex,
    FollowerFavorsLeader,
    FollowerHarmsLeader,
}

impl TieBreak {
    pub fn describe(&self) -> &'static str {
        match self {
            TieBreak::LowestIndex => "lowest_index",
            TieBreak::FollowerFavorsLeader => "follower_favors_leader",
            TieBreak::FollowerHarmsLeader => "follower_harms_leader",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    PureNashSet,
    SaddleSet,
    MixedMinimax,
    StackelbergDefenderLeader,
    StackelbergAttackerLeader,
}

/// Outcome of a leader-follower solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub kind: EquilibriumKind,
    /// Name of the scenario the result was computed from, so downstream
    /// comparisons can refuse mismatched artifacts.
    pub scenario_name: String,
    /// Committed strategy: a defense index when the defender leads, an
    /// attack index when the attacker leads.
    pub leader_strategy: usize,
    /// The follower's tie-broken best response.
    pub follower_strategy: usize,
    pub u_a_star: f64,
    pub u_d_star: f64,
    /// Probability the chosen attack reaches the target through the
    /// chosen defense.
    pub p_target_star: f64,
    pub mode: SolveMode,
    /// Human-readable tie-break rule that was applied.
    pub tie_break: String,
}

#[derive(Debug, thiserror::Error)]
pub enum EquilibriaError {
    #[error("no defense strategy is affordable under budget {budget}")]
    EmptyAffordableSet { budget: String },
    #[error("fictitious play did not converge: gap {gap} after {iterations} iterations")]
    NonConvergence { gap: f64, iterations: u64 },
    #[error("instance too large for the exhaustive oracle: {cells} cells > {limit}")]
    InstanceTooLarge { cells: usize, limit: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

// ---------------------------------------------------------------------------
// Pure-strategy concepts
// ---------------------------------------------------------------------------

/// All cells where the attacker cannot improve within the column and the
/// defender cannot improve within the row. Row-major order; may be empty.
pub fn pure_nash(m: &UtilityMatrices) -> Vec<PureCell> {
    let n_a = m.u_a.len();
    let n_d = if n_a > 0 { m.u_a[0].len() } else { 0 };
    let mut cells = Vec::new();
    for i in 0..n_a {
        for j in 0..n_d {
            let attacker_best = (0..n_a).all(|i2| m.u_a[i][j] >= m.u_a[i2][j]);
            let defender_best = (0..n_d).all(|j2| m.u_d[i][j] >= m.u_d[i][j2]);
            if attacker_best && defender_best {
                cells.push(PureCell { attack: i, defense: j, u_a: m.u_a[i][j], u_d: m.u_d[i][j] });
            }
        }
    }
    cells
}

/// Saddle points of a single zero-sum payoff array (row player maximizes).
///
/// A saddle cell is the maximum of its column and the minimum of its row.
/// The reported `u_d` is the negated value (zero-sum view). Panics if the
/// array is empty or ragged.
pub fn saddle_points(a: &[Vec<f64>]) -> Vec<PureCell> {
    assert!(!a.is_empty() && !a[0].is_empty(), "payoff array must be nonempty");
    let n_cols = a[0].len();
    assert!(a.iter().all(|r| r.len() == n_cols), "payoff array must be rectangular");

    let mut cells = Vec::new();
    for (i, row) in a.iter().enumerate() {
        for j in 0..n_cols {
            let col_max = a.iter().all(|r2| row[j] >= r2[j]);
            let row_min = row.iter().all(|&v| row[j] <= v);
            if col_max && row_min {
                cells.push(PureCell { attack: i, defense: j, u_a: row[j], u_d: -row[j] });
            }
        }
    }
    cells
}

// ---------------------------------------------------------------------------
// Fictitious play
// ---------------------------------------------------------------------------

/// Solve the zero-sum game over `a` (row player maximizes) by fictitious
/// play with simultaneous best responses and uniform initial beliefs.
///
/// Every iterate's averaged empirical mixes certify value bounds:
/// `min_j (x A)_j` from below for the row mix, `max_i (A y)_i` from above
/// for the column mix. The solver keeps the best certified bound on each
/// side together with the mix that achieved it, and stops when that gap
/// falls to the tolerance — so the returned mixes are themselves within
/// `gap` of optimal, and the midpoint value is within `gap / 2`.
/// Best-response ties go to the lowest index. Panics if the array is
/// empty or ragged, `tolerance` is not positive, or `max_iterations` is
/// zero.
pub fn mixed_minimax(
    a: &[Vec<f64>],
    tolerance: f64,
    max_iterations: u64,
) -> Result<MixedSolution, EquilibriaError> {
    assert!(!a.is_empty() && !a[0].is_empty(), "payoff array must be nonempty");
    let n_rows = a.len();
    let n_cols = a[0].len();
    assert!(a.iter().all(|r| r.len() == n_cols), "payoff array must be rectangular");
    assert!(tolerance > 0.0, "tolerance must be positive");
    assert!(max_iterations >= 1, "max_iterations must be at least 1");

    let mut row_counts = vec![0u64; n_rows];
    let mut col_counts = vec![0u64; n_cols];
    // Cumulative payoff of each pure strategy against the opponent's history.
    let mut row_scores = vec![0.0; n_rows];
    let mut col_scores = vec![0.0; n_cols];
    let mut best_lower = f64::NEG_INFINITY;
    let mut best_upper = f64::INFINITY;
    let mut best_row_mix = vec![1.0 / n_rows as f64; n_rows];
    let mut best_col_mix = vec![1.0 / n_cols as f64; n_cols];

    for t in 0..max_iterations {
        let (i_t, j_t) = if t == 0 {
            // Uniform initial beliefs: best-respond to the uniform mix.
            let row_vs_uniform = |i: usize| a[i].iter().sum::<f64>() / n_cols as f64;
            let col_vs_uniform = |j: usize| a.iter().map(|r| r[j]).sum::<f64>() / n_rows as f64;
            (argmax_by(n_rows, row_vs_uniform), argmin_by(n_cols, col_vs_uniform))
        } else {
            (argmax_by(n_rows, |i| row_scores[i]), argmin_by(n_cols, |j| col_scores[j]))
        };

        row_counts[i_t] += 1;
        col_counts[j_t] += 1;
        for (i, score) in row_scores.iter_mut().enumerate() {
            *score += a[i][j_t];
        }
        for (j, score) in col_scores.iter_mut().enumerate() {
            *score += a[i_t][j];
        }

        let k = (t + 1) as f64;
        let upper = (0..n_rows).map(|i| row_scores[i] / k).fold(f64::NEG_INFINITY, f64::max);
        let lower = (0..n_cols).map(|j| col_scores[j] / k).fold(f64::INFINITY, f64::min);
        if upper < best_upper {
            best_upper = upper;
            for (j, m) in best_col_mix.iter_mut().enumerate() {
                *m = col_counts[j] as f64 / k;
            }
        }
        if lower > best_lower {
            best_lower = lower;
            for (i, m) in best_row_mix.iter_mut().enumerate() {
                *m = row_counts[i] as f64 / k;
            }
        }

        if best_upper - best_lower <= tolerance {
            return Ok(MixedSolution {
                row_mix: best_row_mix,
                col_mix: best_col_mix,
                value: 0.5 * (best_upper + best_lower),
                iterations: t + 1,
                gap: best_upper - best_lower,
            });
        }
    }

    Err(EquilibriaError::NonConvergence {
        gap: best_upper - best_lower,
        iterations: max_iterations,
    })
}

fn argmax_by(n: usize, f: impl Fn(usize) -> f64) -> usize {
    let mut best = 0;
    for i in 1..n {
        if f(i) > f(best) {
            best = i;
        }
    }
    best
}

fn argmin_by(n: usize, f: impl Fn(usize) -> f64) -> usize {
    let mut best = 0;
    for i in 1..n {
        if f(i) < f(best) {
            best = i;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Leader-follower solve
// ---------------------------------------------------------------------------

fn affordable_or_err(s: &Scenario, budget: &Budget) -> Result<Vec<usize>, EquilibriaError> {
    let affordable = crate::engine::affordable_defenses(s, budget);
    if affordable.is_empty() {
        return Err(EquilibriaError::EmptyAffordableSet { budget: budget.to_string() });
    }
    Ok(affordable)
}

/// Indices achieving the exact maximum of `f` over `candidates`.
fn max_set(candidates: &[usize], f: impl Fn(usize) -> f64) -> Vec<usize> {
    let best = candidates.iter().map(|&c| f(c)).fold(f64::NEG_INFINITY, f64::max);
    candidates.iter().copied().filter(|&c| f(c) == best).collect()
}

/// Indices achieving the exact minimum of `f` over `candidates`.
fn min_set(candidates: &[usize], f: impl Fn(usize) -> f64) -> Vec<usize> {
    let best = candidates.iter().map(|&c| f(c)).fold(f64::INFINITY, f64::min);
    candidates.iter().copied().filter(|&c| f(c) == best).collect()
}

/// Pick the follower's response from its best-response set.
///
/// `leader_payoff(i)` is the leader's utility when the follower plays `i`.
/// The mode narrows the set first (anticipatory only); the tie-break rule
/// settles the rest; lowest index is the final fallback.
fn pick_follower(
    best_responses: &[usize],
    leader_payoff: impl Fn(usize) -> f64,
    mode: SolveMode,
    tie_break: TieBreak,
) -> usize {
    let narrowed = match mode {
        SolveMode::AnticipatoryStrong => max_set(best_responses, &leader_payoff),
        SolveMode::AnticipatoryWeak => min_set(best_responses, &leader_payoff),
        SolveMode::LiteralJointArgmax => best_responses.to_vec(),
    };
    let settled = match tie_break {
        TieBreak::LowestIndex => narrowed,
        TieBreak::FollowerFavorsLeader => max_set(&narrowed, &leader_payoff),
        TieBreak::FollowerHarmsLeader => min_set(&narrowed, &leader_payoff),
    };
    settled.into_iter().min().expect("best-response set is nonempty")
}

/// Leader-follower solve over pure strategies.
///
/// The defender may only commit to affordable defenses; the budget binds
/// the defender in both move orders and never the attacker.
pub fn stackelberg(
    s: &Scenario,
    leader: Leader,
    mode: SolveMode,
    budget: &Budget,
    tie_break: TieBreak,
) -> Result<EquilibriumResult, EquilibriaError> {
    let m = build_matrices(s)?;
    let affordable = affordable_or_err(s, budget)?;
    let attacks: Vec<usize> = (0..s.attack_count()).collect();

    let (attack, defense) = match leader {
        Leader::Defender => {
            let follower_of = |j: usize| -> usize {
                let best = max_set(&attacks, |i| m.u_a[i][j]);
                pick_follower(&best, |i| m.u_d[i][j], mode, tie_break)
            };
            let committed = match mode {
                SolveMode::LiteralJointArgmax => {
                    // Joint argmax of the leader's utility over both sets;
                    // only the defense component of the winning cell is kept.
                    let mut best: Option<(f64, usize)> = None;
                    for &j in &affordable {
                        for &i in &attacks {
                            let v = m.u_d[i][j];
                            if best.is_none_or(|(bv, bj)| v > bv || (v == bv && j < bj)) {
                                best = Some((v, j));
                            }
                        }
                    }
                    best.expect("nonempty strategy sets").1
                }
                _ => {
                    let mut best: Option<(f64, usize)> = None;
                    for &j in &affordable {
                        let v = m.u_d[follower_of(j)][j];
                        if best.is_none_or(|(bv, _)| v > bv) {
                            best = Some((v, j));
                        }
                    }
                    best.expect("affordable set is nonempty").1
                }
            };
            (follower_of(committed), committed)
        }
        Leader::Attacker => {
            let follower_of = |i: usize| -> usize {
                let best = max_set(&affordable, |j| m.u_d[i][j]);
                pick_follower(&best, |j| m.u_a[i][j], mode, tie_break)
            };
            let committed = match mode {
                SolveMode::LiteralJointArgmax => {
                    let mut best: Option<(f64, usize)> = None;
                    for &i in &attacks {
                        for &j in &affordable {
                            let v = m.u_a[i][j];
                            if best.is_none_or(|(bv, bi)| v > bv || (v == bv && i < bi)) {
                                best = Some((v, i));
                            }
                        }
                    }
                    best.expect("nonempty strategy sets").1
                }
                _ => {
                    let mut best: Option<(f64, usize)> = None;
                    for &i in &attacks {
                        let v = m.u_a[i][follower_of(i)];
                        if best.is_none_or(|(bv, _)| v > bv) {
                            best = Some((v, i));
                        }
                    }
                    best.expect("attack set is nonempty").1
                }
            };
            (committed, follower_of(committed))
        }
    };

    let (kind, leader_strategy, follower_strategy) = match leader {
        Leader::Defender => (EquilibriumKind::StackelbergDefenderLeader, defense, attack),
        Leader::Attacker => (EquilibriumKind::StackelbergAttackerLeader, attack, defense),
    };
    Ok(EquilibriumResult {
        kind,
        scenario_name: s.name.clone(),
        leader_strategy,
        follower_strategy,
        u_a_star: m.u_a[attack][defense],
        u_d_star: m.u_d[attack][defense],
        p_target_star: m.p_target[attack][defense],
        mode,
        tie_break: tie_break.describe().to_string(),
    })
}

/// Maximum cell count the exhaustive oracle accepts.
pub const ORACLE_CELL_LIMIT: usize = 64;

/// Brute-force reference for [`stackelberg`].
///
/// Recomputes the same contract cell by cell from the engine's scalar
/// utilities, sharing no solver code, so the two can check each other.
/// Guarded to small instances.
pub fn exhaustive_oracle(
    s: &Scenario,
    leader: Leader,
    mode: SolveMode,
    budget: &Budget,
    tie_break: TieBreak,
) -> Result<EquilibriumResult, EquilibriaError> {
    let cells = s.attack_count() * s.defense_count();
    if cells > ORACLE_CELL_LIMIT {
        return Err(EquilibriaError::InstanceTooLarge { cells, limit: ORACLE_CELL_LIMIT });
    }

    // Affordability recomputed inline: worst-case column cost within budget.
    let mut affordable = Vec::new();
    for j in 0..s.defense_count() {
        let mut worst = f64::NEG_INFINITY;
        for i in 0..s.attack_count() {
            worst = worst.max(s.defense_cost.values[i][j]);
        }
        if budget.allows(worst) {
            affordable.push(j);
        }
    }
    if affordable.is_empty() {
        return Err(EquilibriaError::EmptyAffordableSet { budget: budget.to_string() });
    }

    #[derive(Clone, Copy)]
    struct Cell {
        u_a: f64,
        u_d: f64,
    }
    let mut table = Vec::with_capacity(cells);
    for i in 0..s.attack_count() {
        for j in 0..s.defense_count() {
            table.push(Cell { u_a: attacker_utility(s, i, j)?, u_d: defender_utility(s, i, j)? });
        }
    }
    let cell = |i: usize, j: usize| -> Cell { table[i * s.defense_count() + j] };

    // Follower selection written as explicit filter passes over candidate
    // lists, deliberately not the solver's code path.
    let select = |mut pool: Vec<usize>, follower_value: &dyn Fn(usize) -> f64, leader_value: &dyn Fn(usize) -> f64| -> usize {
        let top = pool.iter().map(|&c| follower_value(c)).fold(f64::NEG_INFINITY, f64::max);
        pool.retain(|&c| follower_value(c) == top);
        let apply_pref = |pool: &mut Vec<usize>, favor: bool| {
            let extreme = pool
                .iter()
                .map(|&c| leader_value(c))
                .fold(if favor { f64::NEG_INFINITY } else { f64::INFINITY }, if favor { f64::max } else { f64::min });
            pool.retain(|&c| leader_value(c) == extreme);
        };
        match mode {
            SolveMode::AnticipatoryStrong => apply_pref(&mut pool, true),
            SolveMode::AnticipatoryWeak => apply_pref(&mut pool, false),
            SolveMode::LiteralJointArgmax => {}
        }
        match tie_break {
            TieBreak::LowestIndex => {}
            TieBreak::FollowerFavorsLeader => apply_pref(&mut pool, true),
            TieBreak::FollowerHarmsLeader => apply_pref(&mut pool, false),
        }
        pool.sort_unstable();
        pool[0]
    };

    let all_attacks: Vec<usize> = (0..s.attack_count()).collect();
    let (attack, defense) = match leader {
        Leader::Defender => {
            let respond = |j: usize| {
                select(all_attacks.clone(), &|i| cell(i, j).u_a, &|i| cell(i, j).u_d)
            };
            let committed = if mode == SolveMode::LiteralJointArgmax {
                let mut best_v = f64::NEG_INFINITY;
                for &j in &affordable {
                    for &i in &all_attacks {
                        best_v = best_v.max(cell(i, j).u_d);
                    }
                }
                *affordable
                    .iter()
                    .find(|&&j| all_attacks.iter().any(|&i| cell(i, j).u_d == best_v))
                    .expect("argmax cell exists")
            } else {
                let mut best_j = affordable[0];
                let mut best_v = f64::NEG_INFINITY;
                for &j in &affordable {
                    let v = cell(respond(j), j).u_d;
                    if v > best_v {
                        best_v = v;
                        best_j = j;
                    }
                }
                best_j
            };
            (respond(committed), committed)
        }
        Leader::Attacker => {
            let respond = |i: usize| {
                select(affordable.clone(), &|j| cell(i, j).u_d, &|j| cell(i, j).u_a)
            };
            let committed = if mode == SolveMode::LiteralJointArgmax {
                let mut best_v = f64::NEG_INFINITY;
                for &i in &all_attacks {
                    for &j in &affordable {
                        best_v = best_v.max(cell(i, j).u_a);
                    }
                }
                *all_attacks
                    .iter()
                    .find(|&&i| affordable.iter().any(|&j| cell(i, j).u_a == best_v))
                    .expect("argmax cell exists")
            } else {
                let mut best_i = 0;
                let mut best_v = f64::NEG_INFINITY;
                for &i in &all_attacks {
                    let v = cell(i, respond(i)).u_a;
                    if v > best_v {
                        best_v = v;
                        best_i = i;
                    }
                }
                best_i
            };
            (committed, respond(committed))
        }
    };

    let (kind, leader_strategy, follower_strategy) = match leader {
        Leader::Defender => (EquilibriumKind::StackelbergDefenderLeader, defense, attack),
        Leader::Attacker => (EquilibriumKind::StackelbergAttackerLeader, attack, defense),
    };
    Ok(EquilibriumResult {
        kind,
        scenario_name: s.name.clone(),
        leader_strategy,
        follower_strategy,
        u_a_star: cell(attack, defense).u_a,
        u_d_star: cell(attack, defense).u_d,
        p_target_star: target_probability(s, attack, defense)?,
        mode,
        tie_break: tie_break.describe().to_string(),
    })
}
