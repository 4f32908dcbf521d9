//! Stationary group actions at finite resolution.
//!
//! The crate models an m-stationary action of a free group on a probability
//! space by finitely many weighted cells and per-word mass transports. On top
//! of that model it computes Furstenberg entropy, Radon–Nikodym tails,
//! partition-statistics clouds, and the weak-equivalence metric δ, and runs
//! the continuity and entropy-realization experiments exposed by the CLI.

pub mod action;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod io;
pub mod models;
pub mod words;

pub use action::{ActionKind, Cell, CellAction, TransportPiece, WordTransport};
pub use error::{Error, Result};
pub use words::{enumerate_words, GroupWord, Letter, StepDistribution};
