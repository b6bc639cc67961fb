use std::fmt::Debug;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar used by the unit and geometry layers.
pub trait Scalar: Float + FromPrimitive + Debug + Default + Send + Sync + 'static {
    /// Lift a small integer constant. Integer constants are exact in every
    /// supported float width, which is what keeps 25.4 and 304.8 exact.
    fn int(v: i64) -> Self {
        Self::from_i64(v).expect("integer constant representable")
    }

    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
