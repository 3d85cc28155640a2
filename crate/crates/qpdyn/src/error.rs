use crate::fourier::ModeIndex;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("torus dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("torus period mismatch (single vs doubled) in {0}")]
    TorusFlagMismatch(&'static str),

    #[error("matrix function is not SL(2,R) on the verification grid: max |det - 1| = {0:.3e}")]
    NotSl2(f64),

    #[error("matrix function is not trace-free: max |tr| = {0:.3e}")]
    NotTraceless(f64),

    #[error("grid of {grid} points cannot resolve modes up to radius {radius} without aliasing")]
    Aliasing { grid: usize, radius: i64 },

    #[error("map is not homotopic to the identity (degree {0:?}); conjugate the degree away first")]
    NonZeroDegree(Vec<i64>),

    #[error("first-column direction vanishes while tracking winding")]
    DegenerateColumn,

    #[error("angle tracking did not stabilize below jump threshold at {0} samples")]
    WindingUnresolved(usize),

    #[error("matrix logarithm undefined: trace {0:.6} is on the negative branch")]
    LogBranch(f64),

    #[error("constant matrix is not elliptic (|trace| = {0:.6} >= 2)")]
    NotElliptic(f64),

    #[error("small divisor {value:.3e} below floor {floor:.3e} at mode {mode:?}")]
    SmallDivisor {
        mode: ModeIndex,
        value: f64,
        floor: f64,
    },

    #[error("resonant mode {0:?} encountered in a chain that forbids resonances")]
    ResonanceInChain(ModeIndex),

    #[error("rotation number fails the required arithmetic condition: {0}")]
    ArithmeticPrecondition(String),

    #[error("KAM iteration halted: {0}")]
    Halted(String),

    #[error("no convergence after {steps} steps; perturbation size {eps:.3e}")]
    NoConvergence { steps: u32, eps: f64 },

    #[error("bracket [{lo}, {hi}] does not straddle the rotation target {target}")]
    BracketMiss { lo: f64, hi: f64, target: f64 },

    #[error("gap label ambiguous: {0} candidate modes within tolerance")]
    AmbiguousLabel(usize),

    #[error("reduced constant is not a rigid rotation (residual {0:.3e})")]
    NotARotation(f64),

    #[error("rotation of reduced constant matches neither ±(phase + <m',alpha>); mismatch {0:.3e}")]
    RotationMismatch(f64),

    #[error("inconsistent reduced state: {0}")]
    InconsistentState(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}
