use std::fmt;

/// Errors surfaced by map evaluation, spectral solves, and experiment drivers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// `x` is not contained in any branch domain (partial-domain maps).
    PointOutsideDomain { x: f64 },
    /// `y` has no preimage under any branch.
    NoPreimage { y: f64 },
    InvalidParameter(String),
    UnknownMap(String),
    UnknownPotential(String),
    /// An orbit left the map domain at the given step.
    OrbitEscaped { step: usize, x: f64 },
    /// Power iteration failed to reach the residual tolerance.
    NoConvergence { iterations: usize, residual: f64 },
    /// A test interval crosses a branch boundary.
    IntervalSpansBranches,
    /// A dynamical ball collapsed below machine width.
    DegenerateBall,
    /// `n` is not a c-hyperbolic time for the requested point.
    NotHyperbolicTime { n: usize },
    /// Equilibrium density touches zero; Rokhlin integrand undefined.
    DegenerateDensity,
    /// A sweep member failed the hypothesis gate.
    HypothesisViolated { parameter: f64, condition: String },
    /// Noise level unresolvable on the grid.
    GridTooCoarse { epsilon: f64, bin_width: f64 },
    ConfigParse { line: usize, message: String },
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::PointOutsideDomain { x } => write!(f, "point {x} outside every branch domain"),
            Error::NoPreimage { y } => write!(f, "no branch range contains {y}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::UnknownMap(name) => write!(f, "unknown map `{name}`"),
            Error::UnknownPotential(name) => write!(f, "unknown potential `{name}`"),
            Error::OrbitEscaped { step, x } => {
                write!(f, "orbit escaped the domain at step {step} (x = {x})")
            }
            Error::NoConvergence { iterations, residual } => write!(
                f,
                "no convergence after {iterations} iterations (residual {residual:.3e})"
            ),
            Error::IntervalSpansBranches => write!(f, "interval spans more than one branch"),
            Error::DegenerateBall => write!(f, "dynamical ball collapsed below machine width"),
            Error::NotHyperbolicTime { n } => write!(f, "{n} is not a hyperbolic time here"),
            Error::DegenerateDensity => write!(f, "equilibrium density not bounded away from zero"),
            Error::HypothesisViolated { parameter, condition } => {
                write!(f, "hypothesis {condition} fails at parameter {parameter}")
            }
            Error::GridTooCoarse { epsilon, bin_width } => write!(
                f,
                "noise level {epsilon} below grid resolution (bin width {bin_width:.3e})"
            ),
            Error::ConfigParse { line, message } => {
                write!(f, "config parse error at line {line}: {message}")
            }
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
