pub mod control;
pub mod coupling;
pub mod engine;
pub mod error;
pub mod model;
pub mod reduced;
pub mod sim;

pub use error::{Error, Result};
