//! Graphical coordination games under adversarial influence.
//!
//! Agents on an undirected graph repeatedly play a two-action coordination
//! game with each neighbor and revise by log-linear learning. An adversary
//! adds a bonus for playing the inferior action `y` to a set of influenced
//! agents, which is fixed, redrawn uniformly at random each step, or chosen
//! as a function of the current state. The crate simulates these dynamics,
//! solves the resulting Markov chains exactly, and determines stochastically
//! stable states through resistance trees.

pub mod adversary;
pub mod chain;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod game;
pub mod graph;
pub mod stability;

pub use adversary::{AdversaryModel, MobilePolicy};
pub use chain::{Distribution, TransitionMatrix};
pub use dynamics::Rationality;
pub use error::{Error, Result};
pub use game::{Action, JointAction, PayoffGain, Rational};
pub use graph::{AgentSet, Graph, GraphSpec};
pub use stability::{AdversaryType, StabilityReport, SusceptibilityResult, Threshold};
