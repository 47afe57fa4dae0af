//! Scenario model: strategy spaces, layers, penetration probabilities,
//! costs, benefit, and budget, plus the JSON document format they are
//! authored in.
//!
//! A scenario document is a single JSON object:
//!
//! ```json
//! {
//!   "name": "example",
//!   "layers": [{ "id": 0, "name": "dmz", "kind": "cyber" }],
//!   "attacks": [{ "id": 0, "name": "phish" }],
//!   "defenses": [{ "id": 0, "name": "baseline", "mitigation_ids": [0] }],
//!   "mitigations": [{ "id": 0, "name": "firewall", "deploy_cost": 20.0 }],
//!   "penetration": [[[0.5]]],
//!   "attack_cost": [[10.0]],
//!   "defense_cost": [[20.0]],
//!   "benefit": 100.0,
//!   "defender_budget": "unbounded"
//! }
//! ```
//!
//! `penetration` is indexed `[layer][attack][defense]`, cost matrices
//! `[attack][defense]`. `defense_cost` may be omitted, in which case it is
//! derived as the per-defense sum of mitigation deploy costs (constant down
//! each column). `defender_budget` is a number or the string `"unbounded"`
//! and defaults to unbounded.

use std::collections::BTreeSet;
use std::fmt;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

/// Descriptive tag for a layer; has no effect on the game arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    #[default]
    Cyber,
    Physical,
    Management,
}

/// One of the sequential barriers an attack must penetrate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub id: usize,
    pub name: String,
    #[serde(default)]
    pub kind: LayerKind,
}

/// An enumerated attack strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackStrategy {
    pub id: usize,
    pub name: String,
}

/// A deployable mitigation with an optional deployment cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mitigation {
    pub id: usize,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deploy_cost: Option<f64>,
}

/// A defense strategy: a named subset of mitigations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefenseStrategy {
    pub id: usize,
    pub name: String,
    #[serde(default)]
    pub mitigation_ids: BTreeSet<usize>,
}

/// Per-layer penetration probabilities indexed `[layer][attack][defense]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PenetrationTensor {
    pub values: Vec<Vec<Vec<f64>>>,
}

impl PenetrationTensor {
    pub fn get(&self, layer: usize, attack: usize, defense: usize) -> Option<f64> {
        self.values.get(layer)?.get(attack)?.get(defense).copied()
    }
}

/// Cost matrix indexed `[attack][defense]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CostMatrix {
    pub values: Vec<Vec<f64>>,
}

impl CostMatrix {
    pub fn get(&self, attack: usize, defense: usize) -> Option<f64> {
        self.values.get(attack)?.get(defense).copied()
    }
}

/// Defender budget: a spend limit or no limit at all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Unbounded,
    Limited(f64),
}

impl Budget {
    pub fn allows(&self, cost: f64) -> bool {
        match self {
            Budget::Unbounded => true,
            Budget::Limited(limit) => cost <= *limit,
        }
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::Unbounded => write!(f, "unbounded"),
            Budget::Limited(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for Budget {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Budget::Unbounded => serializer.serialize_str("unbounded"),
            Budget::Limited(v) => serializer.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Budget {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Tag(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Num(v) => Ok(Budget::Limited(v)),
            Repr::Tag(s) if s == "unbounded" => Ok(Budget::Unbounded),
            Repr::Tag(s) => Err(de::Error::custom(format!(
                "defender_budget must be a number or \"unbounded\", got \"{s}\""
            ))),
        }
    }
}

/// A complete, validated game scenario.
///
/// `defense_cost` is always populated after parsing: an explicit matrix in
/// the document wins, otherwise it is derived from mitigation deploy costs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub layers: Vec<Layer>,
    pub attacks: Vec<AttackStrategy>,
    pub defenses: Vec<DefenseStrategy>,
    pub mitigations: Vec<Mitigation>,
    pub penetration: PenetrationTensor,
    pub attack_cost: CostMatrix,
    pub defense_cost: CostMatrix,
    pub benefit: f64,
    pub defender_budget: Budget,
}

impl Scenario {
    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn attack_count(&self) -> usize {
        self.attacks.len()
    }

    pub fn defense_count(&self) -> usize {
        self.defenses.len()
    }

    /// Pretty-printed scenario document. Parsing the output yields an
    /// identical scenario.
    pub fn to_document(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("scenario serializes");
        out.push('\n');
        out
    }
}

/// Severity of a validation finding. Errors block downstream use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

/// A single validation finding with a path locator into the document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub severity: Severity,
    pub path: String,
    pub message: String,
}

impl ValidationIssue {
    fn error(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { severity: Severity::Error, path: path.into(), message: message.into() }
    }

    fn warning(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { severity: Severity::Warning, path: path.into(), message: message.into() }
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}: {}", self.path, self.message)
    }
}

/// Errors raised when reading or deriving scenario data.
#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("semantic error at line {line}, column {column}: {message}")]
    Semantic { line: usize, column: usize, message: String },
    #[error("scenario is invalid: {}", format_issues(.issues))]
    Invalid { issues: Vec<ValidationIssue> },
    #[error("mitigations[{id}]: deploy_cost required to derive defense costs")]
    MissingDeployCost { id: usize },
}

fn format_issues(issues: &[ValidationIssue]) -> String {
    issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    name: String,
    layers: Vec<Layer>,
    attacks: Vec<AttackStrategy>,
    defenses: Vec<DefenseStrategy>,
    #[serde(default)]
    mitigations: Vec<Mitigation>,
    penetration: PenetrationTensor,
    attack_cost: CostMatrix,
    #[serde(default)]
    defense_cost: Option<CostMatrix>,
    benefit: f64,
    #[serde(default)]
    defender_budget: Option<Budget>,
}

/// Parse a scenario document, apply defaults, and validate.
///
/// Fails on malformed JSON, on missing or mistyped keys, and on any
/// error-severity validation issue.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDoc = serde_json::from_str(text).map_err(|e| {
        let (line, column, message) = (e.line(), e.column(), e.to_string());
        if e.classify() == serde_json::error::Category::Syntax || e.classify() == serde_json::error::Category::Eof {
            ScenarioError::Syntax { line, column, message }
        } else {
            ScenarioError::Semantic { line, column, message }
        }
    })?;

    let mut scenario = Scenario {
        name: doc.name,
        layers: doc.layers,
        attacks: doc.attacks,
        defenses: doc.defenses,
        mitigations: doc.mitigations,
        penetration: doc.penetration,
        attack_cost: doc.attack_cost,
        defense_cost: CostMatrix { values: Vec::new() },
        benefit: doc.benefit,
        defender_budget: doc.defender_budget.unwrap_or(Budget::Unbounded),
    };
    scenario.defense_cost = match doc.defense_cost {
        Some(m) => m,
        None => derive_defense_cost(&scenario)?,
    };

    let errors: Vec<ValidationIssue> = validate_scenario(&scenario)
        .into_iter()
        .filter(|i| i.severity == Severity::Error)
        .collect();
    if !errors.is_empty() {
        return Err(ScenarioError::Invalid { issues: errors });
    }
    Ok(scenario)
}

/// Check every scenario invariant, returning one issue per finding.
///
/// Never mutates the input; an empty error set means the scenario is safe
/// for the engine and solvers.
pub fn validate_scenario(s: &Scenario) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    let (n_l, n_a, n_d) = (s.layers.len(), s.attacks.len(), s.defenses.len());

    if n_l == 0 {
        issues.push(ValidationIssue::error("layers", "at least one layer required"));
    }
    if n_a == 0 {
        issues.push(ValidationIssue::error("attacks", "at least one attack strategy required"));
    }
    if n_d == 0 {
        issues.push(ValidationIssue::error("defenses", "at least one defense strategy required"));
    }

    check_contiguous_ids(&mut issues, "layers", s.layers.iter().map(|l| l.id));
    check_contiguous_ids(&mut issues, "attacks", s.attacks.iter().map(|a| a.id));
    check_contiguous_ids(&mut issues, "defenses", s.defenses.iter().map(|d| d.id));

    let mut mitigation_ids = BTreeSet::new();
    for (idx, m) in s.mitigations.iter().enumerate() {
        if !mitigation_ids.insert(m.id) {
            issues.push(ValidationIssue::error(
                format!("mitigations[{idx}].id"),
                format!("duplicate mitigation id {}", m.id),
            ));
        }
        if let Some(cost) = m.deploy_cost {
            if cost < 0.0 || cost.is_nan() {
                issues.push(ValidationIssue::error(
                    format!("mitigations[{idx}].deploy_cost"),
                    "cost must be nonnegative",
                ));
            }
        }
    }

    let mut referenced = BTreeSet::new();
    for (j, d) in s.defenses.iter().enumerate() {
        for &mid in &d.mitigation_ids {
            referenced.insert(mid);
            if !mitigation_ids.contains(&mid) {
                issues.push(ValidationIssue::error(
                    format!("defenses[{j}].mitigation_ids"),
                    format!("unknown mitigation id {mid}"),
                ));
            }
        }
    }
    for m in &s.mitigations {
        if !referenced.contains(&m.id) {
            issues.push(ValidationIssue::warning(
                format!("mitigations[{}]", m.id),
                "mitigation is not referenced by any defense strategy",
            ));
        }
    }

    if s.penetration.values.len() != n_l {
        issues.push(ValidationIssue::error(
            "penetration",
            format!("expected {} layer slices, got {}", n_l, s.penetration.values.len()),
        ));
    }
    for (l, slice) in s.penetration.values.iter().enumerate() {
        if slice.len() != n_a {
            issues.push(ValidationIssue::error(
                format!("penetration[{l}]"),
                format!("expected {} attack rows, got {}", n_a, slice.len()),
            ));
        }
        for (i, row) in slice.iter().enumerate() {
            if row.len() != n_d {
                issues.push(ValidationIssue::error(
                    format!("penetration[{l}][{i}]"),
                    format!("expected {} defense entries, got {}", n_d, row.len()),
                ));
            }
            for (j, &p) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    issues.push(ValidationIssue::error(
                        format!("penetration[{l}][{i}][{j}]"),
                        "probability outside [0,1]",
                    ));
                }
            }
        }
    }

    check_cost_matrix(&mut issues, "attack_cost", &s.attack_cost, n_a, n_d);
    check_cost_matrix(&mut issues, "defense_cost", &s.defense_cost, n_a, n_d);

    if s.benefit < 0.0 || s.benefit.is_nan() {
        issues.push(ValidationIssue::error("benefit", "benefit must be nonnegative"));
    }
    if let Budget::Limited(b) = s.defender_budget {
        if b < 0.0 || b.is_nan() {
            issues.push(ValidationIssue::error("defender_budget", "budget must be nonnegative"));
        }
    }

    issues
}

fn check_contiguous_ids(
    issues: &mut Vec<ValidationIssue>,
    path: &str,
    ids: impl Iterator<Item = usize>,
) {
    for (pos, id) in ids.enumerate() {
        if id != pos {
            issues.push(ValidationIssue::error(
                format!("{path}[{pos}].id"),
                format!("ids must be contiguous from 0; expected {pos}, got {id}"),
            ));
        }
    }
}

fn check_cost_matrix(
    issues: &mut Vec<ValidationIssue>,
    path: &str,
    m: &CostMatrix,
    n_a: usize,
    n_d: usize,
) {
    if m.values.len() != n_a {
        issues.push(ValidationIssue::error(
            path,
            format!("expected {} attack rows, got {}", n_a, m.values.len()),
        ));
    }
    for (i, row) in m.values.iter().enumerate() {
        if row.len() != n_d {
            issues.push(ValidationIssue::error(
                format!("{path}[{i}]"),
                format!("expected {} defense entries, got {}", n_d, row.len()),
            ));
        }
        for (j, &c) in row.iter().enumerate() {
            if c < 0.0 || c.is_nan() {
                issues.push(ValidationIssue::error(
                    format!("{path}[{i}][{j}]"),
                    "cost must be nonnegative",
                ));
            }
        }
    }
}

/// Derive the defense cost matrix as the per-defense sum of mitigation
/// deploy costs. The result is constant down each column: deploying a
/// defense costs the same whatever the attacker does. Mitigations shared
/// by several defenses are charged to each of them.
pub fn derive_defense_cost(s: &Scenario) -> Result<CostMatrix, ScenarioError> {
    let mut per_defense = Vec::with_capacity(s.defenses.len());
    for d in &s.defenses {
        let mut total = 0.0;
        for &mid in &d.mitigation_ids {
            let m = s
                .mitigations
                .iter()
                .find(|m| m.id == mid)
                .ok_or(ScenarioError::MissingDeployCost { id: mid })?;
            total += m.deploy_cost.ok_or(ScenarioError::MissingDeployCost { id: mid })?;
        }
        per_defense.push(total);
    }
    let values = vec![per_defense; s.attacks.len().max(1)];
    Ok(CostMatrix { values })
}


#[cfg(test)]
mod property_tests {
    use super::*;
    use crate::testing::{ScenarioLimits, random_scenario};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #[test]
        fn parse_serialize_parse_is_identity(seed in any::<u64>(), coarse in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let limits = ScenarioLimits { coarse_grid: coarse, ..Default::default() };
            let s = random_scenario(&mut rng, &limits);
            let doc = s.to_document();
            let reparsed = parse_scenario(&doc).unwrap();
            prop_assert_eq!(&s, &reparsed);
            // and a second trip, byte for byte
            prop_assert_eq!(doc, reparsed.to_document());
        }

        #[test]
        fn generated_scenarios_validate_cleanly(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_scenario(&mut rng, &ScenarioLimits::default());
            let errors: Vec<_> = validate_scenario(&s)
                .into_iter()
                .filter(|i| i.severity == Severity::Error)
                .collect();
            prop_assert!(errors.is_empty(), "{errors:?}");
        }
    }
}
