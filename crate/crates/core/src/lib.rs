//! Construction and numerical verification of an entire function of finite
//! order, built as a lacunary canonical product, that solves a second-order
//! linear ODE with entire coefficients yet fails to have completely regular
//! growth.
//!
//! Algorithms are generic over [`scalar::Real`]; the aliases below fix the
//! multiprecision scalar used by the CLI.

pub mod complex;
pub mod config;
pub mod error;
pub mod evaluable;
pub mod growth;
pub mod interp;
pub mod logdomain;
pub mod ode;
pub mod product;
pub mod scalar;
pub mod scan;
pub mod verify;

pub use complex::PrecComplex;
pub use config::{ConfigFile, LacunaryConfig, ScheduleRule, SystemConfig};
pub use error::{Error, Result};
pub use evaluable::Evaluable;
pub use logdomain::LogComplex;
pub use scalar::{Mp, Precision, Real};

pub type Complex = PrecComplex<Mp>;
pub type Complex64 = PrecComplex<f64>;
pub type LogValue = LogComplex<Mp>;
pub type Product = product::LacunaryProduct<Mp>;
pub type Interpolant = interp::RationalInterpolant<Mp>;
pub type System = ode::CoefficientSystem<Mp>;
