//! Finite-dimensional Clark theory: atomic measures on the circle, finite
//! Blaschke products, model spaces and the operators acting between them.

pub mod asymptotics;
pub mod blaschke;
pub mod error;
pub mod linalg;
pub mod measure;
pub mod model_space;
pub mod operators;
pub mod scenarios;

pub use error::{Error, Result};
