use thiserror::Error;

/// Errors raised by the annealing library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("point {coords:?} lies outside the domain")]
    PointOutsideDomain { coords: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("criterion returned {value} at {coords:?}; values must lie in [0, 1]")]
    CriterionOutOfRange { value: f64, coords: Vec<f64> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("confidence target {sigma_target} is unreachable for epsilon = {epsilon}, alpha = {alpha}, delta = {delta}")]
    Unreachable {
        epsilon: f64,
        alpha: f64,
        delta: f64,
        sigma_target: f64,
    },

    #[error("no certificate possible for pure random-walk proposal (uniform weight must be > 0)")]
    NoIndependenceComponent,

    #[error("infeasible within budget: k = {required_steps:e} final-stage steps required, budget is {budget}")]
    InfeasibleSteps { required_steps: f64, budget: u64 },

    #[error("infeasible within budget: k = {} final-stage steps required at J = {}, delta = {}; budget is {}", .0.required_k, .0.j, .0.delta, .0.budget)]
    Infeasible(Box<crate::convergence::Infeasibility>),

    #[error("grid too large: {cells} cells (maximum {max})")]
    GridTooLarge { cells: usize, max: usize },

    #[error("rejection sampling budget exhausted: {accepted} of {requested} samples after {proposals} proposals")]
    SamplingBudgetExceeded {
        accepted: usize,
        requested: usize,
        proposals: u64,
    },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("unknown test function `{0}`")]
    UnknownFunction(String),
}

pub type Result<T> = std::result::Result<T, Error>;
