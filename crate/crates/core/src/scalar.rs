//! Scalar abstraction shared by every numeric routine in the crate.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display};

/// Real scalar backing the complex amplitudes: `f32` or `f64`.
///
/// The tolerance constants are expressed in `f64` and converted on use. The
/// `f64` values are the contract values of the library; `f32` gets looser
/// values that match its precision.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Allowed drift of engine arithmetic (norms, unitarity, hermiticity, trace).
    const DRIFT_TOL: f64;
    /// Allowed deviation from unit norm for user-supplied amplitudes.
    const INPUT_TOL: f64;
    /// Most negative eigenvalue accepted in a density matrix.
    const NEG_EIGEN_TOL: f64;
    /// Branch probabilities below this are treated as impossible outcomes.
    const ZERO_PROB: f64;

    /// Converts an `f64` literal. Every value used in this crate is finite and
    /// representable, so the conversion cannot fail.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn drift_tol() -> Self {
        Self::lit(Self::DRIFT_TOL)
    }

    #[inline]
    fn input_tol() -> Self {
        Self::lit(Self::INPUT_TOL)
    }

    #[inline]
    fn zero_prob() -> Self {
        Self::lit(Self::ZERO_PROB)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    const DRIFT_TOL: f64 = 1e-10;
    const INPUT_TOL: f64 = 1e-6;
    const NEG_EIGEN_TOL: f64 = 1e-8;
    const ZERO_PROB: f64 = 1e-12;
}

impl Real for f32 {
    const DRIFT_TOL: f64 = 1e-4;
    const INPUT_TOL: f64 = 1e-5;
    const NEG_EIGEN_TOL: f64 = 1e-4;
    const ZERO_PROB: f64 = 1e-6;
}

/// `re + i·im` with both parts given as `f64` literals.
#[inline]
pub fn c<R: Real>(re: f64, im: f64) -> Complex<R> {
    Complex::new(R::lit(re), R::lit(im))
}

#[inline]
pub(crate) fn is_finite<R: Real>(z: Complex<R>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}
