//! Building-code compliance checking over a vendor-neutral building model.

pub mod building_model;
pub mod checkscript;
pub mod evalharness;
pub mod geometry;
pub mod orchestrator;
pub mod report;
pub mod rules;
pub mod scalar;
pub mod units;

pub use scalar::Scalar;

/// Length in the model's working precision.
pub type Length = units::LengthQuantity<f64>;
/// Area in the model's working precision.
pub type Area = units::AreaQuantity<f64>;
/// Plan point in millimeters.
pub type Point = geometry::Point2<f64>;
