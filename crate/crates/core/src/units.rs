//! Length and area quantities with exact conversion factors.
//!
//! Every conversion goes through an integer ratio (1 in = 254/10 mm,
//! 1 ft = 3048/10 mm, 1 ft² = 9290304/100 mm²) so whole-number imperial
//! values land on the exact metric value: 80 in is 2032 mm, not 2031.9999.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LengthUnit {
    #[serde(rename = "mm")]
    Millimeter,
    #[serde(rename = "in")]
    Inch,
    #[serde(rename = "ft")]
    Foot,
}

impl LengthUnit {
    pub const ALL: [LengthUnit; 3] = [LengthUnit::Millimeter, LengthUnit::Inch, LengthUnit::Foot];

    /// Millimeters per unit as `(numerator, denominator)`.
    const fn mm_ratio(self) -> (i64, i64) {
        match self {
            LengthUnit::Millimeter => (1, 1),
            LengthUnit::Inch => (254, 10),
            LengthUnit::Foot => (3048, 10),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            LengthUnit::Millimeter => "mm",
            LengthUnit::Inch => "in",
            LengthUnit::Foot => "ft",
        }
    }
}

impl FromStr for LengthUnit {
    type Err = UnknownUnit;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mm" => Ok(LengthUnit::Millimeter),
            "in" => Ok(LengthUnit::Inch),
            "ft" => Ok(LengthUnit::Foot),
            other => Err(UnknownUnit(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AreaUnit {
    #[serde(rename = "sqft")]
    SquareFoot,
    #[serde(rename = "sqm")]
    SquareMeter,
}

impl AreaUnit {
    pub const ALL: [AreaUnit; 2] = [AreaUnit::SquareFoot, AreaUnit::SquareMeter];

    /// Square millimeters per unit as `(numerator, denominator)`.
    const fn mm2_ratio(self) -> (i64, i64) {
        match self {
            AreaUnit::SquareFoot => (9_290_304, 100),
            AreaUnit::SquareMeter => (1_000_000, 1),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            AreaUnit::SquareFoot => "sqft",
            AreaUnit::SquareMeter => "sqm",
        }
    }
}

impl FromStr for AreaUnit {
    type Err = UnknownUnit;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sqft" => Ok(AreaUnit::SquareFoot),
            "sqm" => Ok(AreaUnit::SquareMeter),
            other => Err(UnknownUnit(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown unit `{0}`")]
pub struct UnknownUnit(pub String);

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.abs()
}

/// Scale `value` by `(from_num * to_den) / (from_den * to_num)` after
/// reducing the ratio, so identical units are a no-op.
fn rescale<T: Scalar>(value: T, from: (i64, i64), to: (i64, i64)) -> T {
    let num = from.0 * to.1;
    let den = from.1 * to.0;
    let g = gcd(num, den);
    let (num, den) = (num / g, den / g);
    if den == 1 {
        value * T::int(num)
    } else {
        value * T::int(num) / T::int(den)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthQuantity<T> {
    pub value: T,
    pub unit: LengthUnit,
}

impl<T: Scalar> LengthQuantity<T> {
    pub fn new(value: T, unit: LengthUnit) -> Self {
        Self { value, unit }
    }

    pub fn mm(value: T) -> Self {
        Self::new(value, LengthUnit::Millimeter)
    }

    pub fn inches(value: T) -> Self {
        Self::new(value, LengthUnit::Inch)
    }

    pub fn feet(value: T) -> Self {
        Self::new(value, LengthUnit::Foot)
    }

    pub fn convert(self, target: LengthUnit) -> Self {
        Self::new(
            rescale(self.value, self.unit.mm_ratio(), target.mm_ratio()),
            target,
        )
    }

    /// Value in canonical millimeters.
    pub fn to_mm(self) -> T {
        self.convert(LengthUnit::Millimeter).value
    }
}

impl<T: fmt::Display> fmt::Display for LengthQuantity<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, self.unit.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaQuantity<T> {
    pub value: T,
    pub unit: AreaUnit,
}

impl<T: Scalar> AreaQuantity<T> {
    pub fn new(value: T, unit: AreaUnit) -> Self {
        Self { value, unit }
    }

    pub fn sqft(value: T) -> Self {
        Self::new(value, AreaUnit::SquareFoot)
    }

    /// Build from square millimeters, expressed in square feet.
    pub fn from_mm2(mm2: T) -> Self {
        Self::sqft(rescale(mm2, (1, 1), AreaUnit::SquareFoot.mm2_ratio()))
    }

    pub fn convert(self, target: AreaUnit) -> Self {
        Self::new(
            rescale(self.value, self.unit.mm2_ratio(), target.mm2_ratio()),
            target,
        )
    }

    pub fn to_mm2(self) -> T {
        rescale(self.value, self.unit.mm2_ratio(), (1, 1))
    }
}

impl<T: fmt::Display> fmt::Display for AreaQuantity<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, self.unit.symbol())
    }
}

/// Convert a length to another unit.
pub fn convert_length<T: Scalar>(q: LengthQuantity<T>, target: LengthUnit) -> LengthQuantity<T> {
    q.convert(target)
}
