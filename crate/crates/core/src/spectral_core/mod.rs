//! Periodic grids, FFT-based multipliers and the exact linear Klein-Gordon
//! flow.

mod fft;
mod field;
mod grid;
mod hyperbolic;

pub use fft::Fft2;
pub use field::{
    apply_multiplier, dalembertian_plus_one, fields_pair, spectra_pair, dalembertian_plus_one_analytic, h_half_norm,
    kg_linear_step, l2_norm, l4_norm, laplacian, linear_energy, sobolev_norm, RealField,
    SpectralMultiplier, Spectrum,
};
pub use grid::Grid2D;
pub use hyperbolic::{check_identity, HyperbolicWave, IdentityCheck, Trig};
pub use rustfft::num_complex::Complex64;
