use thiserror::Error;

/// Failures raised by construction, evaluation and verification routines.
///
/// Diagnostic magnitudes are carried as `f64`; logarithmic quantities are
/// natural logarithms.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    /// A sum cancelled below the working precision. `log_bound` bounds the
    /// natural log of the true result's modulus.
    #[error("cancellation: {digits_lost:.1} of {available} digits lost")]
    Cancellation {
        digits_lost: f64,
        available: u32,
        log_bound: f64,
    },

    #[error("ln|z| = {log_abs_z:.4} is outside the certified domain ln|z| < {log_limit:.4}")]
    Tail { log_abs_z: f64, log_limit: f64 },

    #[error("point lies within relative distance {rel_dist:.3e} of a zero in block {block}")]
    NearZero { block: usize, rel_dist: f64 },

    #[error("point lies within relative distance {rel_dist:.3e} of pole #{index}")]
    NearPole { index: usize, rel_dist: f64 },

    #[error(
        "quadrature not converged at {nodes} nodes (last {last:.6e}, previous {previous:.6e})"
    )]
    Quadrature {
        nodes: usize,
        last: f64,
        previous: f64,
    },

    #[error("derivative vanishes on the contour around {0}")]
    ZeroOnContour(String),

    #[error("pole sequence not summable: estimated exponent of convergence {0:.3}")]
    Divergence(f64),

    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),

    #[error("working precision {have} digits is below the {suggested} this configuration needs")]
    Precision { have: u32, suggested: u32 },

    #[error("power argument |n arg z| = {0:.3e} exceeds the precision budget")]
    ArgumentPrecision(f64),
}

impl Error {
    /// True for failures caused by insufficient working precision or
    /// numerical breakdown, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Cancellation { .. }
                | Error::Quadrature { .. }
                | Error::NonFinite(_)
                | Error::ArgumentPrecision(_)
                | Error::Precision { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
