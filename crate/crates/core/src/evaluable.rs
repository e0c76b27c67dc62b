//! Functions that can be sampled in the complex plane.

use crate::complex::PrecComplex;
use crate::error::Result;
use crate::logdomain::LogComplex;
use crate::scalar::Real;

/// A function returning its value in log domain.
pub trait Evaluable<T: Real>: Sync {
    fn eval_log(&self, z: &PrecComplex<T>) -> Result<LogComplex<T>>;
}

/// Adapter turning a closure into an [`Evaluable`].
pub struct FnEval<F>(pub F);

impl<T, F> Evaluable<T> for FnEval<F>
where
    T: Real,
    F: Fn(&PrecComplex<T>) -> Result<PrecComplex<T>> + Sync,
{
    fn eval_log(&self, z: &PrecComplex<T>) -> Result<LogComplex<T>> {
        Ok(LogComplex::from_value(&(self.0)(z)?))
    }
}
