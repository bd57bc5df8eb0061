use crate::error::Result;

/// A real function of one real variable.
///
/// Closures `Fn(f64) -> f64` implement this directly; parsed expressions
/// implement it with typed evaluation errors.
pub trait RealFn {
    fn call(&self, x: f64) -> Result<f64>;
}

impl<F: Fn(f64) -> f64> RealFn for F {
    #[inline]
    fn call(&self, x: f64) -> Result<f64> {
        Ok(self(x))
    }
}

/// Evaluates `f` and rejects non-finite results.
pub(crate) fn eval_finite<F: RealFn + ?Sized>(f: &F, x: f64) -> Result<f64> {
    let v = f.call(x)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(crate::Error::NonFinite { at: x, value: v })
    }
}
