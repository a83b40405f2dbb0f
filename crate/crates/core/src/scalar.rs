//! Real scalar abstraction for amplitude arithmetic.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point type that amplitudes and gate entries are built from: f32 or f64.
pub trait Scalar: Float + FloatConst + FromPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static {
    /// Norm error above which an executed plan is considered to have drifted.
    fn drift_tolerance() -> Self;

    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to every Scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    fn drift_tolerance() -> Self {
        1e-3
    }
}

impl Scalar for f64 {
    fn drift_tolerance() -> Self {
        1e-8
    }
}

/// `e^{iθ}` for a real angle.
pub(crate) fn cis<T: Scalar>(theta: f64) -> Complex<T> {
    Complex::new(T::of(theta.cos()), T::of(theta.sin()))
}

pub(crate) fn c<T: Scalar>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::of(re), T::of(im))
}
