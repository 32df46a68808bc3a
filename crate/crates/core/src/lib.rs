//! Numerical Lie groupoids: embedded-manifold geometry, nerves and n-metrics,
//! normal-form linear models and exponential-map linearization.

pub mod algebroid;
pub mod error;
pub mod foliation;
pub mod groupoid;
pub mod linalg;
pub mod linearize;
pub mod manifold;
pub mod map;
pub mod nerve;
pub mod nmetric;
pub mod report;
pub mod scenario;
pub mod sampling;

pub use error::{Error, Result};
pub use report::Report;
