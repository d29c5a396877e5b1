pub mod discretization;
pub mod error;
pub mod evolution;
pub mod geometry;
pub mod jet;
pub mod linalg;
pub mod norms;
pub mod resolvent;
pub mod scalar;
pub mod sweep;

pub use error::{Error, Result};
pub use scalar::{Real, C};

/// Double-precision instances of the generic types.
pub type Grid64 = discretization::Grid<f64>;
pub type GridFunction64 = discretization::GridFunction<f64>;
pub type Profile64 = geometry::GeometryProfile<f64>;
pub type ModeParams64 = resolvent::ModeParams<f64>;
pub type ModeState64 = evolution::ModeState<f64>;
pub type Trajectory64 = evolution::Trajectory<f64>;
