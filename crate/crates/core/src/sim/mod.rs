//! Time integration, scenarios, trajectories and their file formats.

pub mod compare;
pub mod integrate;
pub mod plot;
pub mod trajectory;
pub mod scenario;
pub mod system;
pub mod table;
