use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the analytical models, the simulator and the optimizer.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the function it was passed to.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration violates a cross-field invariant.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A closed-form evaluation left the representable range.
    #[error("numerical instability: {0}")]
    Numerical(String),

    /// A generated transition matrix row does not sum to one.
    #[error("row {state} sums to {sum} (defect {defect:.3e})")]
    RowSum {
        state: String,
        sum: f64,
        defect: f64,
    },

    /// The stationary solver did not reach the residual target.
    #[error("stationary solve did not converge (residual {residual:.3e})")]
    Convergence { residual: f64 },

    /// The quiet period leaves no time for data.
    #[error("quiet time exhausts slot ({quiet_us} us of {budget_us} us)")]
    QuietTime { quiet_us: f64, budget_us: f64 },

    /// Every point of an optimization grid violated a constraint.
    #[error("no feasible point among {evaluated} evaluated: {}", summarize(.reasons))]
    Infeasible {
        evaluated: usize,
        reasons: Vec<String>,
    },
}

fn summarize(reasons: &[String]) -> String {
    const SHOWN: usize = 5;
    let mut out = reasons[..reasons.len().min(SHOWN)].join("; ");
    if reasons.len() > SHOWN {
        out.push_str(&alloc::format!("; and {} more", reasons.len() - SHOWN));
    }
    out
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! domain {
    ($($arg:tt)*) => {
        $crate::error::Error::Domain(alloc::format!($($arg)*))
    };
}

macro_rules! config {
    ($($arg:tt)*) => {
        $crate::error::Error::Config(alloc::format!($($arg)*))
    };
}

pub(crate) use config;
pub(crate) use domain;
