use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};

/// Scalar type the whole pipeline is generic over.
///
/// Elementary functions come from [`RealField`]; conversions and constants
/// from `num-traits`. Implemented for `f32` and `f64`.
pub trait Real:
    RealField + FloatConst + FromPrimitive + ToPrimitive + Copy + Debug + Display + Send + Sync
{
    /// Converts a literal. Every literal used by the crate is representable.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the scalar type.
    #[inline]
    fn eps() -> Self {
        Self::default_epsilon()
    }

    /// A tolerance of `nominal` (stated for double precision), floored at
    /// `floor_ulps` machine epsilons so that it stays attainable in single
    /// precision.
    #[inline]
    fn tolerance(nominal: f64, floor_ulps: f64) -> Self {
        let t = Self::lit(nominal);
        let floor = Self::eps() * Self::lit(floor_ulps);
        if t > floor {
            t
        } else {
            floor
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}
