//! Mechanical verification of a two-qutrit noncontextuality test.
//!
//! * [`hvstates`] enumerates deterministic hidden-variable states.
//! * [`inequalities`] holds the inequalities as data and computes exact
//!   classical bounds by exhaustive search.
//! * [`quantum`] computes Born-rule predictions, quantum violations and
//!   robustness thresholds.
//! * [`montecarlo`] simulates finite-statistics runs of the experiment.
//! * [`verify`] strings all of the above into one pass/fail report.

pub mod error;
pub mod hvstates;
pub mod inequalities;
pub mod montecarlo;
pub mod numfmt;
pub mod observables;
pub mod quantum;
pub mod verify;

pub use error::{AtomError, InequalityError, MonteCarloError, QuantumError};
pub use hvstates::{enumerate_joint, enumerate_party, JointAssignment, ModelClass, PartyAssignment};
pub use inequalities::{bound, builtin, BoundReport, Inequality, InequalityDef, Rational};
pub use observables::{EventAtom, ObservableRef, Outcome, Party, Slot};
pub use quantum::{BipartiteState, Experiment};
