pub mod cli;
pub mod decomposition;
pub mod error;
pub mod final_data;
pub mod io;
pub mod jet;
pub mod profile;
pub mod residual_lab;
pub mod scattering_solver;
pub mod spectral_core;

pub use error::{Error, Result};
