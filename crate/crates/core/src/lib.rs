//! Laboratory for layered attacker-defender security games: payoff
//! arithmetic and equilibrium solvers, a seeded red/blue war-game
//! simulator with configurable bounded rationality, trace adjudication
//! under the exercise point tables, and post-game comparison of recorded
//! play against model predictions.

pub mod analysis;
pub mod engine;
pub mod equilibria;
pub mod scenario;
pub mod scoring;
pub mod sim;

#[cfg(any(test, feature = "testing"))]
pub mod testing;
