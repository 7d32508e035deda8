//! Error types shared across the toolkit.

use std::fmt;

/// Reason a numeric evaluation left the real domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainErrorKind {
    /// `ln(y)` with `y <= 0`.
    Log,
    /// `sqrt(y)` with `y < 0`.
    Sqrt,
    /// `arcsin(y)` with `|y| > 1`.
    Arcsin,
    /// Division by zero, i.e. `y^e` with `y = 0`, `e < 0`.
    DivisionByZero,
    /// `y^e` with `y < 0` and non-integer `e`.
    FractionalPower,
    /// The result overflowed to a non-finite value.
    Overflow,
}

impl fmt::Display for DomainErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DomainErrorKind::Log => "ln of a non-positive value",
            DomainErrorKind::Sqrt => "sqrt of a negative value",
            DomainErrorKind::Arcsin => "arcsin outside [-1, 1]",
            DomainErrorKind::DivisionByZero => "division by zero",
            DomainErrorKind::FractionalPower => "fractional power of a negative value",
            DomainErrorKind::Overflow => "non-finite intermediate value",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Malformed input text; `offset` is a byte offset into the source.
    Syntax {
        offset: usize,
        found: String,
        expected: Vec<String>,
    },
    /// A call `f(...)` where `f` is not a known function kind.
    UnknownFunction { name: String, offset: usize },
    /// Evaluation hit a symbol with no binding.
    UnboundSymbol(String),
    /// A binding with a duplicate name or non-finite value.
    InvalidBinding { name: String, reason: &'static str },
    /// Evaluation left the real domain.
    Domain(DomainErrorKind),
    /// A sampler could not produce enough in-domain points.
    SamplingExhausted { attempts: usize },
    /// A jet coordinate of order beyond the declared maximum was required.
    OrderExceeded { needed: usize, max: usize },
    /// A list argument had the wrong length for the ambient space.
    WrongArity {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// Cofactor expansion is capped; see `linalg`.
    DeterminantTooLarge(usize),
    /// All vector-field coefficients vanish on the sampled domain.
    ZeroField,
    /// A claimed invariant failed its numeric invariance check; `witness`
    /// is a rendered sample point when one is available.
    NotInvariant {
        what: String,
        residual: f64,
        witness: String,
    },
    /// A claimed companion function failed `QJ = 1` numerically.
    NotCompanion { residual: f64 },
    /// Functional independence failed: full numeric rank at too few points.
    DependentFunctions { ok_fraction: f64 },
    /// The frame determinant vanishes on the sampled domain.
    DegenerateFrame(String),
    /// Equivalence transform with a singular Jacobian.
    SingularTransform,
    /// Field reconstruction from a singular gradient matrix.
    SingularFrame,
    /// Supplied antiderivative does not differentiate to the integrand,
    /// or the resulting J fails `QJ = 1`.
    AntiderivativeMismatch { residual: f64 },
    /// `J_numeric` endpoints lie on different invariant level sets.
    NotOnLevelSet { index: usize, deviation: f64 },
    /// The characteristic flow never reached the target within the horizon.
    FlowEscaped { horizon: f64 },
    /// The coefficient dividing a Riccati right-hand side vanishes.
    ZeroCoefficient { which: String },
    /// The Eq.-(6) matrix is singular for every sampled small constant.
    SingularForSampledCtilde,
    /// A Jacobi-matrix block of the level-set parametrization is singular.
    SingularJacobiMatrix { block: &'static str },
    /// Numeric integration failed (step underflow, non-finite state).
    Integration(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Syntax {
                offset,
                found,
                expected,
            } => write!(
                f,
                "syntax error at byte {offset}: found {found}, expected {}",
                expected.join(" | ")
            ),
            Error::UnknownFunction { name, offset } => {
                write!(f, "unknown function `{name}` at byte {offset}")
            }
            Error::UnboundSymbol(name) => write!(f, "unbound symbol `{name}`"),
            Error::InvalidBinding { name, reason } => {
                write!(f, "invalid binding for `{name}`: {reason}")
            }
            Error::Domain(kind) => write!(f, "domain error: {kind}"),
            Error::SamplingExhausted { attempts } => {
                write!(f, "sampling exhausted after {attempts} attempts")
            }
            Error::OrderExceeded { needed, max } => {
                write!(f, "jet order {needed} exceeds declared maximum {max}")
            }
            Error::WrongArity {
                what,
                expected,
                got,
            } => write!(f, "{what}: expected {expected} entries, got {got}"),
            Error::DeterminantTooLarge(p) => {
                write!(f, "cofactor determinant capped at 6x6, got {p}x{p}")
            }
            Error::ZeroField => write!(f, "all vector-field coefficients vanish numerically"),
            Error::NotInvariant {
                what,
                residual,
                witness,
            } => {
                write!(f, "{what} is not invariant (residual {residual:e}")?;
                if witness.is_empty() {
                    write!(f, ")")
                } else {
                    write!(f, " at {witness})")
                }
            }
            Error::NotCompanion { residual } => {
                write!(f, "QJ = 1 fails numerically (residual {residual:e})")
            }
            Error::DependentFunctions { ok_fraction } => write!(
                f,
                "functions are not functionally independent (full rank at {:.0}% of points)",
                100.0 * ok_fraction
            ),
            Error::DegenerateFrame(which) => write!(f, "degenerate frame: {which}"),
            Error::SingularTransform => write!(f, "equivalence transform has singular Jacobian"),
            Error::SingularFrame => write!(f, "gradient matrix is singular on the sampled domain"),
            Error::AntiderivativeMismatch { residual } => {
                write!(f, "antiderivative mismatch (residual {residual:e})")
            }
            Error::NotOnLevelSet { index, deviation } => write!(
                f,
                "points lie on different level sets (invariant {index}, deviation {deviation:e})"
            ),
            Error::FlowEscaped { horizon } => {
                write!(f, "flow did not reach the target within |t| <= {horizon}")
            }
            Error::ZeroCoefficient { which } => {
                write!(f, "coefficient {which} vanishes on the sampled domain")
            }
            Error::SingularForSampledCtilde => {
                write!(f, "solution matrix singular for every sampled constant")
            }
            Error::SingularJacobiMatrix { block } => {
                write!(f, "singular Jacobi matrix block {block}")
            }
            Error::Integration(msg) => write!(f, "integration failure: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
