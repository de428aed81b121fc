use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Signed powers are only used with non-negative exponents.
    NegativeExponent(f64),
    DimensionMismatch { expected: usize, found: usize },
    /// A dilation or gain scaling factor that is not strictly positive.
    NonPositiveScale(f64),
    /// A parameter violating its documented domain.
    InvalidParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },
    /// The output-feedback law was requested without observer gains.
    MissingObserverGains,
    /// Simulation produced a NaN or infinite state.
    NonFinite { step: usize, time: f64 },
    /// The Lyapunov derivative is set-valued on the switching surface.
    OnSwitchingSet,
    /// A trajectory of a precision study never entered the tolerance band.
    NotSettled { step: f64 },
    /// A precision study was requested on an unusable set of step sizes.
    InvalidStudy(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NegativeExponent(p) => write!(f, "negative signed-power exponent {p}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::NonPositiveScale(s) => write!(f, "scale factor must be > 0, got {s}"),
            Error::InvalidParameter {
                name,
                value,
                requirement,
            } => write!(f, "invalid {name} = {value}: must satisfy {requirement}"),
            Error::MissingObserverGains => write!(f, "observer gains l1, l2 are required"),
            Error::NonFinite { step, time } => {
                write!(f, "non-finite state at step {step} (t = {time})")
            }
            Error::OnSwitchingSet => write!(f, "point lies on the switching set"),
            Error::NotSettled { step } => write!(f, "run with step {step} did not settle"),
            Error::InvalidStudy(msg) => write!(f, "invalid study: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn check(
    ok: bool,
    name: &'static str,
    value: f64,
    requirement: &'static str,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            requirement,
        })
    }
}
