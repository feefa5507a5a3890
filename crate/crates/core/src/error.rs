use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AtomError {
    #[error("unknown party {0:?} (expected \"A\" or \"B\")")]
    UnknownParty(String),
    #[error("unknown observable slot {0:?} (expected D0, D1, T0 or T1)")]
    UnknownSlot(String),
    #[error("outcome {outcome:?} is not valid for slot {slot}")]
    OutcomeMismatch { slot: String, outcome: String },
}

#[derive(Debug, Error)]
pub enum InequalityError {
    #[error("malformed inequality JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{field}: {source}")]
    Atom {
        field: String,
        #[source]
        source: AtomError,
    },
    #[error("{field}: observable {observable} appears more than once in the same term")]
    DuplicateAtom { field: String, observable: String },
    #[error("{field}: party {party} has more than one observable in the same term")]
    PartyOverloaded { field: String, party: String },
    #[error("terms: an inequality needs at least one term")]
    EmptyTerms,
    #[error("{field}: a term needs at least one atom")]
    EmptyAtoms { field: String },
    #[error("{field}: {value:?} is not a rational number")]
    BadRational { field: String, value: String },
    #[error("class: unknown model class {0:?} (expected \"realistic\" or \"noncontextual\")")]
    UnknownClass(String),
    #[error("condition: {0}")]
    Condition(String),
    #[error("unknown built-in inequality {0:?}")]
    UnknownBuiltin(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("visibility {0} is outside [0, 1]")]
    InvalidVisibility(f64),
    #[error("ket has squared norm {0}, expected 1")]
    NotNormalized(f64),
    #[error("ket has dimension {got}, expected {expected}")]
    WrongDimension { expected: usize, got: usize },
    #[error("conditioning event {0} has zero probability")]
    ZeroProbabilityCondition(String),
    #[error("no quantum violation to protect (value at full visibility is {0})")]
    NoViolation(f64),
    #[error("inequality is violated even for white noise (value {0} at visibility 0)")]
    ViolatedByNoise(f64),
    #[error("term {0} has more than one atom for the same party")]
    UnsupportedTerm(String),
    #[error("conditioned state is only defined for rank-1 outcomes of a pure state: {0}")]
    NoConditionedState(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonteCarloError {
    #[error("shots per setting must be at least 1")]
    NoShots,
    #[error("term {0} does not name one observable on each party")]
    UnsupportedTerm(String),
    #[error("conditioning event {condition} never occurred in setting {setting}")]
    ZeroConditioningCounts { condition: String, setting: String },
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}
