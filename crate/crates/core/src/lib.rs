pub mod config;
pub mod cli;
pub mod coupled;
pub mod eigen;
pub mod error;
pub mod linsolve;
pub mod mesh;
mod march;
pub mod report;
pub mod scalar;
pub mod stability;
pub mod sweep;
pub mod thresholds;
pub mod verify;
