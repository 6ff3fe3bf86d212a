pub mod config;
pub mod contour;
pub mod detection;
pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod gaussian;
pub mod output;
pub mod params;
pub mod sweep;

pub use error::{Error, Result};
