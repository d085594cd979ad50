use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AngleError {
    #[error("cannot parse angle `{0}`")]
    Parse(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymbolicError {
    #[error("coding point at k = {k} cannot be separated from an arc endpoint")]
    BoundaryUndecidable { k: i64 },
    #[error("window of length {len} is shorter than the requested word length {n}")]
    WindowTooShort { len: usize, n: usize },
    #[error("window is not Sturmian: {0}")]
    NotSturmian(String),
    #[error("empty window")]
    EmptyWindow,
    #[error("malformed window/factor text at line {line}: {msg}")]
    Format { line: usize, msg: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircleError {
    #[error("rotation number {0} is (numerically) rational")]
    RationalAlpha(String),
    #[error("rotation number must lie in (0, 1), got {0}")]
    AlphaOutOfRange(f64),
    #[error("gap cutoff {0} is below the minimum of 1000")]
    CutoffTooSmall(usize),
    #[error("point {x} lies in the interior of gap {gap}")]
    NotInMinimalSet { x: f64, gap: i64 },
    #[error("malformed Denjoy map file: {0}")]
    Format(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WdsError {
    #[error("rotation number {0} is (numerically) rational")]
    RationalAlpha(String),
    #[error("rotation number must lie in (0, 1/2), got {0}")]
    AlphaOutOfRange(f64),
    #[error("window radius {0} does not saturate the factor family")]
    NotSaturated(usize),
    #[error("empty coding arc for admissible word {0}")]
    DegenerateArc(String),
    #[error("depth mismatch: {0} vs {1}")]
    DepthMismatch(usize, usize),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TwistError {
    #[error("no convergence after {iterations} iterations (best gradient norm {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("heteroclinic tail residual {residual:e} exceeds tolerance {tolerance:e}")]
    TailNotSettled { residual: f64, tolerance: f64 },
    #[error("orbit is not a saddle (trace of DF^q = {trace})")]
    NotSaddle { trace: f64 },
    #[error("invalid rotation data p = {p}, q = {q}")]
    InvalidRotation { p: i64, q: i64 },
    #[error("invalid input: {0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HorseshoeError {
    #[error("linear seed fails the tangency tolerance (angle {angle:e})")]
    SeedTooLarge { angle: f64 },
    #[error("no transverse intersection found between the manifolds")]
    NoTransverseIntersection,
    #[error("intersections cannot be ordered consistently along both manifolds")]
    OrderingInconsistent,
    #[error("rectangle {label} is degenerate: {reason}")]
    RectangleDegenerate { label: String, reason: String },
    #[error("common iterate count exceeds cap {cap}")]
    BudgetExceeded { cap: usize },
    #[error("template transition {from} -> {to} failed verification")]
    TemplateMissing { from: usize, to: usize },
    #[error("word is not admissible for the transition matrix at position {position}")]
    NotAdmissible { position: i64 },
    #[error("nested box clipping failed at depth {depth}")]
    EmptyClip { depth: usize },
    #[error("transition graph has no pair of freely concatenable loops")]
    NoDisjointLoops,
    #[error(transparent)]
    Twist(#[from] TwistError),
    #[error(transparent)]
    Wds(#[from] WdsError),
}
