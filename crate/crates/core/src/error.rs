use thiserror::Error;

/// Failures from Q-matrix validation, invariant measures, rate bounding and coarsening.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarkovError {
    #[error("generator must be a non-empty square matrix, got {rows}x{cols}")]
    Shape { rows: usize, cols: usize },
    #[error("generator entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("negative off-diagonal rate q[{row}][{col}] = {value}")]
    NegativeOffDiagonal { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum}, generator must be conservative")]
    RowSumNonzero { row: usize, sum: f64 },
    #[error("generator is reducible: state {unreachable} is not mutually reachable with state 0")]
    Reducible { unreachable: usize },
    #[error("balance equations are numerically singular")]
    SingularSolve,
    #[error("rate q[{row}][{col}] exceeds the cap {cap} on the scan domain")]
    UnboundedRate { row: usize, col: usize, cap: f64 },
    #[error("rate bound q[{row}][{col}] did not stabilize after extending the scan to radius {radius}")]
    ScanNotStabilized { row: usize, col: usize, radius: f64 },
    #[error("scan grid is empty")]
    EmptyGrid,
    #[error("partition class {index} is empty")]
    EmptyClass { index: usize },
    #[error("partition is invalid: {0}")]
    InvalidPartition(String),
    #[error("beta sequence is not bounded above or contains non-finite values")]
    UnboundedBeta,
    #[error("invalid chain: {0}")]
    InvalidChain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("simplex exceeded {0} pivots")]
    PivotLimit(usize),
    #[error("simplex returned a point that violates the constraints by {0}")]
    Verification(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MMatrixError {
    #[error("matrix must be square and non-empty")]
    Shape,
    #[error("matrix size {0} exceeds the supported maximum of 64")]
    TooLarge(usize),
    #[error("linear feasibility solver failed: {0}")]
    SolverFailure(#[from] LpError),
    #[error(
        "equivalent M-matrix conditions disagree (minors: {minors}, semipositive: {semipositive}, \
         eigenvalue: {eigenvalue}); distance to singularity {distance:e}"
    )]
    InconsistentChecks {
        minors: bool,
        semipositive: bool,
        eigenvalue: bool,
        distance: f64,
    },
    #[error("power iteration did not converge in {0} iterations")]
    NoConvergence(usize),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error(transparent)]
    Markov(#[from] MarkovError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CriteriaError {
    #[error("Fredholm system not solvable: weighted drift {0} is not negative")]
    NotSolvable(f64),
    #[error("regime chain is not recurrent (tail down-rate {down} < up-rate {up})")]
    ChainNotRecurrent { up: f64, down: f64 },
    #[error("radial limit did not stabilize along the radius schedule")]
    NonConvergent,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("certificate rejected: {0}")]
    CertificateRejected(String),
    #[error(transparent)]
    Markov(#[from] MarkovError),
    #[error(transparent)]
    MMatrix(#[from] MMatrixError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("switching probability per step {0} exceeds 0.1; reduce dt")]
    StepTooLarge(f64),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("path {path} produced a non-finite state")]
    NonFinite { path: usize },
    #[error(transparent)]
    Markov(#[from] MarkovError),
}

/// Top-level error for model files and commands.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("criterion {0} is not applicable to this model")]
    CriterionNotApplicable(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Markov(#[from] MarkovError),
    #[error(transparent)]
    MMatrix(#[from] MMatrixError),
    #[error(transparent)]
    Criteria(#[from] CriteriaError),
    #[error(transparent)]
    Sim(#[from] SimError),
}
