use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic square grid of `n × n` points on a box of side `length`.
///
/// Physical coordinates are centred: `x_j = (j - n/2)·h` for `j ∈ [0, n)`.
/// Frequencies follow the FFT layout, `k_j = 2π j / L` with `j` folded into
/// `[-n/2, n/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    n: usize,
    length: f64,
}

impl Grid2D {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n = {n} must be a power of two and at least 8"
            )));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "box length {length} must be positive and finite"
            )));
        }
        Ok(Grid2D { n, length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Quadrature weight `h²` of a single cell.
    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    /// Physical coordinate of index `j` along either axis.
    #[inline]
    pub fn coord(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.spacing()
    }

    /// Signed integer frequency index for FFT slot `j`.
    #[inline]
    pub fn mode_index(&self, j: usize) -> i64 {
        if j < self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    /// Angular frequency for FFT slot `j`.
    #[inline]
    pub fn wavenumber(&self, j: usize) -> f64 {
        2.0 * PI * self.mode_index(j) as f64 / self.length
    }

    /// All wavenumbers along one axis in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.wavenumber(j)).collect()
    }

    /// Nyquist wavenumber `π / h`.
    pub fn nyquist(&self) -> f64 {
        PI / self.spacing()
    }

    /// Grid of half the side length and half the points, same spacing.
    ///
    /// Used to shrink the box while a solution contracts toward the origin.
    pub fn halved(&self) -> Result<Grid2D> {
        Grid2D::new(self.n / 2, self.length / 2.0)
    }

    /// Smallest power-of-two grid with spacing at most `h_max`, capped at `n_cap`.
    pub fn for_box(length: f64, h_max: f64, n_cap: usize) -> Result<Grid2D> {
        if !(h_max > 0.0) {
            return Err(Error::InvalidGrid(format!("h_max = {h_max} must be positive")));
        }
        let mut n = 8usize;
        while length / (n as f64) > h_max && n < n_cap {
            n *= 2;
        }
        Grid2D::new(n.min(n_cap.max(8)), length)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grid_has_unit_spacing() {
        let g = Grid2D::new(8, 8.0).unwrap();
        assert_eq!(g.spacing(), 1.0);
        let k = g.wavenumbers();
        let expected = [0, 1, 2, 3, -4, -3, -2, -1];
        for (kj, m) in k.iter().zip(expected) {
            assert!((kj - PI * m as f64 / 4.0).abs() < 1e-15);
        }
        assert_eq!(g.coord(0), -4.0);
        assert_eq!(g.coord(4), 0.0);
    }

    #[test]
    fn spacing_is_exact() {
        let g = Grid2D::new(256, 128.0).unwrap();
        assert_eq!(g.spacing(), 0.5);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid2D::new(7, 1.0).is_err());
        assert!(Grid2D::new(4, 1.0).is_err());
        assert!(Grid2D::new(12, 1.0).is_err());
        assert!(Grid2D::new(16, 0.0).is_err());
        assert!(Grid2D::new(16, -3.0).is_err());
        assert!(Grid2D::new(16, f64::NAN).is_err());
    }

    #[test]
    fn box_policy_picks_power_of_two() {
        let g = Grid2D::for_box(1000.0, 0.5, 2048).unwrap();
        assert_eq!(g.n(), 2048);
        let g = Grid2D::for_box(125.0, 0.5, 2048).unwrap();
        assert_eq!(g.n(), 256);
        let g = Grid2D::for_box(1000.0, 0.1, 2048).unwrap();
        assert_eq!(g.n(), 2048);
    }
}
