use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use super::fft::Fft2;
use super::grid::Grid2D;
use crate::error::{Error, Result};

/// Real scalar field sampled on a [`Grid2D`], row-major with the first index
/// along `x₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Grid2D,
    data: Vec<f64>,
}

impl RealField {
    pub fn zeros(grid: Grid2D) -> Self {
        RealField { data: vec![0.0; grid.len()], grid }
    }

    /// Wraps raw samples; rejects length mismatch and non-finite entries.
    pub fn from_vec(grid: Grid2D, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.len(),
                data.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(RealField { grid, data })
    }

    /// Samples `f(x₁, x₂)` at every grid point, in parallel over rows.
    pub fn from_fn<F>(grid: Grid2D, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        let n = grid.n();
        let mut data = vec![0.0; grid.len()];
        data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let x = grid.coord(i);
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(x, grid.coord(j));
            }
        });
        RealField { grid, data }
    }

    /// Samples `K` fields at once from a point function returning all of them.
    pub fn from_fn_multi<const K: usize, F>(grid: Grid2D, f: F) -> [RealField; K]
    where
        F: Fn(f64, f64) -> [f64; K] + Sync,
    {
        let n = grid.n();
        let mut bufs: Vec<Vec<f64>> = (0..K).map(|_| vec![0.0; grid.len()]).collect();
        let rows: Vec<Vec<[f64; K]>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let x = grid.coord(i);
                (0..n).map(|j| f(x, grid.coord(j))).collect()
            })
            .collect();
        for (i, row) in rows.iter().enumerate() {
            for (j, vals) in row.iter().enumerate() {
                for (b, v) in bufs.iter_mut().zip(vals) {
                    b[i * n + j] = *v;
                }
            }
        }
        let mut it = bufs.into_iter();
        std::array::from_fn(|_| RealField { grid, data: it.next().expect("K buffers") })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.grid.n() + j]
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        }
    }

    pub fn ensure_same_grid(&self, other: &RealField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: f64, other: &RealField) -> Result<RealField> {
        self.zip_map(other, |a, b| a + c * b)
    }

    pub fn sub(&self, other: &RealField) -> Result<RealField> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &RealField) -> Result<RealField> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn scale(&self, c: f64) -> RealField {
        self.map(|v| c * v)
    }

    pub fn map<F: Fn(f64) -> f64 + Sync>(&self, f: F) -> RealField {
        RealField {
            grid: self.grid,
            data: self.data.par_iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map<F>(&self, other: &RealField, f: F) -> Result<RealField>
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        self.ensure_same_grid(other)?;
        Ok(RealField {
            grid: self.grid,
            data: self
                .data
                .par_iter()
                .zip(other.data.par_iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// `max |f|`.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `h² Σ g(f_j)` with a deterministic summation order.
    pub fn integrate_with<F: Fn(f64) -> f64 + Sync>(&self, g: F) -> f64 {
        ordered_sum(&self.data, self.grid.n(), g) * self.grid.cell_area()
    }

    /// `h² Σ f_j g_j` with a deterministic summation order.
    pub fn inner(&self, other: &RealField) -> Result<f64> {
        self.ensure_same_grid(other)?;
        let n = self.grid.n();
        let partial: Vec<f64> = self
            .data
            .par_chunks(n)
            .zip(other.data.par_chunks(n))
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .collect();
        Ok(partial.iter().sum::<f64>() * self.grid.cell_area())
    }

    /// Central square of half the side length at the same spacing.
    pub fn crop_half(&self) -> Result<RealField> {
        let small = self.grid.halved()?;
        let n = self.grid.n();
        let m = small.n();
        let off = (n - m) / 2;
        let mut data = Vec::with_capacity(m * m);
        for i in 0..m {
            let start = (i + off) * n + off;
            data.extend_from_slice(&self.data[start..start + m]);
        }
        Ok(RealField { grid: small, data })
    }

    /// Forward transform; see [`Spectrum`].
    pub fn spectrum(&self) -> Spectrum {
        let mut buf: Vec<Complex64> = self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Fft2::for_size(self.grid.n()).forward(&mut buf);
        Spectrum { grid: self.grid, data: buf }
    }
}

/// Per-row partial sums followed by an in-order sum of the rows; the result
/// does not depend on the number of worker threads.
pub(crate) fn ordered_sum<F: Fn(f64) -> f64 + Sync>(data: &[f64], row: usize, g: F) -> f64 {
    let partial: Vec<f64> = data
        .par_chunks(row)
        .map(|r| r.iter().map(|&v| g(v)).sum::<f64>())
        .collect();
    partial.iter().sum()
}

/// Unnormalized discrete Fourier coefficients of a real field, FFT order.
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: Grid2D,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(grid: Grid2D) -> Self {
        Spectrum { grid, data: vec![Complex64::default(); grid.len()] }
    }

    pub fn from_vec(grid: Grid2D, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidGrid("spectrum length mismatch".into()));
        }
        Ok(Spectrum { grid, data })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Multiplies each coefficient by `m(|k|)`.
    pub fn apply(&mut self, m: &SpectralMultiplier) {
        let grid = self.grid;
        let n = grid.n();
        let k = grid.wavenumbers();
        self.data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let kx2 = k[i] * k[i];
            for (j, c) in row.iter_mut().enumerate() {
                *c *= m.eval((kx2 + k[j] * k[j]).sqrt());
            }
        });
    }

    /// Inverse transform, keeping the real part.
    pub fn to_field(mut self) -> RealField {
        let n = self.grid.n();
        Fft2::for_size(n).inverse(&mut self.data);
        let scale = 1.0 / (n * n) as f64;
        RealField {
            grid: self.grid,
            data: self.data.iter().map(|c| c.re * scale).collect(),
        }
    }

    /// `‖(1+|k|²)^{s/2} f̂‖` by Plancherel; equals the `L²` norm of the
    /// multiplied field.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let n = self.grid.n();
        let k = self.grid.wavenumbers();
        let partial: Vec<f64> = self
            .data
            .par_chunks(n)
            .enumerate()
            .map(|(i, row)| {
                let kx2 = k[i] * k[i];
                row.iter()
                    .enumerate()
                    .map(|(j, c)| (1.0 + kx2 + k[j] * k[j]).powf(s) * c.norm_sqr())
                    .sum::<f64>()
            })
            .collect();
        let total: f64 = partial.iter().sum();
        let nn = (n * n) as f64;
        (total * self.grid.cell_area() / nn).sqrt()
    }

    /// Fraction of spectral energy in the top octave of either axis.
    pub fn top_octave_fraction(&self) -> f64 {
        let n = self.grid.n();
        let cut = (n / 4) as i64;
        let mut high = 0.0;
        let mut total = 0.0;
        for (i, row) in self.data.chunks(n).enumerate() {
            let mi = self.grid.mode_index(i).abs();
            for (j, c) in row.iter().enumerate() {
                let e = c.norm_sqr();
                total += e;
                if mi >= cut || self.grid.mode_index(j).abs() >= cut {
                    high += e;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            high / total
        }
    }
}

/// Spectra of two real fields from one complex transform of `a + ib`.
pub fn spectra_pair(a: &RealField, b: &RealField) -> Result<(Spectrum, Spectrum)> {
    a.ensure_same_grid(b)?;
    let grid = a.grid;
    let n = grid.n();
    let mut z: Vec<Complex64> =
        a.data.iter().zip(&b.data).map(|(&x, &y)| Complex64::new(x, y)).collect();
    Fft2::for_size(n).forward(&mut z);
    let mut sa = vec![Complex64::default(); grid.len()];
    let mut sb = vec![Complex64::default(); grid.len()];
    sa.par_chunks_mut(n)
        .zip(sb.par_chunks_mut(n))
        .enumerate()
        .for_each(|(i, (ra, rb))| {
            let ni = (n - i) % n;
            for j in 0..n {
                let nj = (n - j) % n;
                let zk = z[i * n + j];
                let zm = z[ni * n + nj].conj();
                ra[j] = 0.5 * (zk + zm);
                rb[j] = (zk - zm) * Complex64::new(0.0, -0.5);
            }
        });
    Ok((Spectrum { grid, data: sa }, Spectrum { grid, data: sb }))
}

/// Inverse of [`spectra_pair`]: one complex transform of `â + i b̂`.
pub fn fields_pair(a: &Spectrum, b: &Spectrum) -> Result<(RealField, RealField)> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let grid = a.grid;
    let n = grid.n();
    let mut z: Vec<Complex64> = a
        .data
        .par_iter()
        .zip(b.data.par_iter())
        .map(|(&x, &y)| x + Complex64::new(-y.im, y.re))
        .collect();
    Fft2::for_size(n).inverse(&mut z);
    let scale = 1.0 / (n * n) as f64;
    Ok((
        RealField { grid, data: z.iter().map(|c| c.re * scale).collect() },
        RealField { grid, data: z.iter().map(|c| c.im * scale).collect() },
    ))
}

/// Radial Fourier multiplier `m(|k|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralMultiplier {
    /// `(1+|k|²)^{s/2}`.
    Bessel(f64),
    /// `-|k|²`.
    Laplacian,
    /// `cos(τ⟨k⟩)`.
    Cos(f64),
    /// `sin(τ⟨k⟩)/⟨k⟩`.
    SinOverOmega(f64),
    /// `-⟨k⟩ sin(τ⟨k⟩)`.
    MinusOmegaSin(f64),
}

impl SpectralMultiplier {
    #[inline]
    pub fn eval(&self, k: f64) -> f64 {
        let w2 = 1.0 + k * k;
        match *self {
            SpectralMultiplier::Bessel(s) => w2.powf(0.5 * s),
            SpectralMultiplier::Laplacian => -k * k,
            SpectralMultiplier::Cos(tau) => (tau * w2.sqrt()).cos(),
            SpectralMultiplier::SinOverOmega(tau) => {
                let w = w2.sqrt();
                (tau * w).sin() / w
            }
            SpectralMultiplier::MinusOmegaSin(tau) => {
                let w = w2.sqrt();
                -w * (tau * w).sin()
            }
        }
    }
}

pub fn apply_multiplier(f: &RealField, m: &SpectralMultiplier) -> RealField {
    let mut s = f.spectrum();
    s.apply(m);
    s.to_field()
}

pub fn laplacian(f: &RealField) -> RealField {
    apply_multiplier(f, &SpectralMultiplier::Laplacian)
}

/// Exact flow of `u_tt - Δu + u = 0` over a time step `dt` (either sign).
///
/// Both fields are packed into one complex transform; the symbol is even, so
/// Hermitian symmetry separates them again.
pub fn kg_linear_step(u: &RealField, ut: &RealField, dt: f64) -> Result<(RealField, RealField)> {
    u.ensure_same_grid(ut)?;
    let grid = *u.grid();
    let n = grid.n();
    let plan = Fft2::for_size(n);
    let mut z: Vec<Complex64> = u
        .data
        .iter()
        .zip(&ut.data)
        .map(|(&a, &b)| Complex64::new(a, b))
        .collect();
    plan.forward(&mut z);
    let k = grid.wavenumbers();
    let src = z.clone();
    z.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let ni = (n - i) % n;
        for (j, out) in row.iter_mut().enumerate() {
            let nj = (n - j) % n;
            let zk = src[i * n + j];
            let zm = src[ni * n + nj].conj();
            let uh = 0.5 * (zk + zm);
            let vh = (zk - zm) * Complex64::new(0.0, -0.5);
            let w = (1.0 + k[i] * k[i] + k[j] * k[j]).sqrt();
            let (s, c) = (dt * w).sin_cos();
            let u_new = uh * c + vh * (s / w);
            let v_new = uh * (-w * s) + vh * c;
            *out = u_new + Complex64::new(0.0, 1.0) * v_new;
        }
    });
    plan.inverse(&mut z);
    let scale = 1.0 / (n * n) as f64;
    let u_new = z.iter().map(|c| c.re * scale).collect();
    let ut_new = z.iter().map(|c| c.im * scale).collect();
    Ok((
        RealField { grid, data: u_new },
        RealField { grid, data: ut_new },
    ))
}

/// `(□+1)f` at the middle sample of three equally spaced time slices:
/// centred second difference in time, spectral Laplacian in space.
pub fn dalembertian_plus_one(
    f_minus: &RealField,
    f_mid: &RealField,
    f_plus: &RealField,
    h_t: f64,
) -> Result<RealField> {
    f_minus.ensure_same_grid(f_mid)?;
    f_plus.ensure_same_grid(f_mid)?;
    if !(h_t > 0.0) {
        return Err(Error::InvalidParameter(format!("time step {h_t} must be positive")));
    }
    let lap = laplacian(f_mid);
    let inv = 1.0 / (h_t * h_t);
    let data = f_minus
        .data
        .par_iter()
        .zip(f_mid.data.par_iter())
        .zip(f_plus.data.par_iter().zip(lap.data.par_iter()))
        .map(|((&m, &c), (&p, &l))| (p - 2.0 * c + m) * inv - l + c)
        .collect();
    Ok(RealField { grid: *f_mid.grid(), data })
}

/// `(□+1)f` from an analytic time derivative `f_tt`.
pub fn dalembertian_plus_one_analytic(f: &RealField, f_tt: &RealField) -> Result<RealField> {
    f.ensure_same_grid(f_tt)?;
    let lap = laplacian(f);
    let data = f_tt
        .data
        .par_iter()
        .zip(f.data.par_iter().zip(lap.data.par_iter()))
        .map(|(&tt, (&c, &l))| tt - l + c)
        .collect();
    Ok(RealField { grid: *f.grid(), data })
}

pub fn l2_norm(f: &RealField) -> f64 {
    f.integrate_with(|v| v * v).sqrt()
}

pub fn l4_norm(f: &RealField) -> f64 {
    f.integrate_with(|v| (v * v) * (v * v)).powf(0.25)
}

pub fn h_half_norm(f: &RealField) -> f64 {
    f.spectrum().sobolev_norm(0.5)
}

pub fn sobolev_norm(f: &RealField, s: f64) -> f64 {
    f.spectrum().sobolev_norm(s)
}

/// `½(‖u_t‖² + ‖⟨∇⟩u‖²)`, conserved by [`kg_linear_step`].
pub fn linear_energy(u: &RealField, ut: &RealField) -> f64 {
    let a = sobolev_norm(u, 1.0);
    let b = l2_norm(ut);
    0.5 * (a * a + b * b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian(grid: Grid2D, sigma: f64, x0: [f64; 2]) -> RealField {
        RealField::from_fn(grid, |x, y| {
            let r2 = (x - x0[0]).powi(2) + (y - x0[1]).powi(2);
            (-r2 / (2.0 * sigma * sigma)).exp()
        })
    }

    #[test]
    fn gaussian_l2_norm() {
        let grid = Grid2D::new(128, 40.0).unwrap();
        let f = gaussian(grid, 1.5, [0.0, 0.0]);
        let exact = (PI * 1.5f64.powi(2)).sqrt();
        assert!((l2_norm(&f) - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn zero_step_is_identity() {
        let grid = Grid2D::new(64, 30.0).unwrap();
        let u = gaussian(grid, 2.0, [1.0, -2.0]);
        let ut = gaussian(grid, 1.0, [0.0, 3.0]).scale(0.3);
        let (u1, ut1) = kg_linear_step(&u, &ut, 0.0).unwrap();
        assert!(u1.sub(&u).unwrap().max_abs() < 1e-14);
        assert!(ut1.sub(&ut).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn linear_step_conserves_energy_and_reverses() {
        let grid = Grid2D::new(128, 64.0).unwrap();
        let u = gaussian(grid, 2.0, [1.0, -2.0]);
        let ut = gaussian(grid, 1.0, [0.0, 3.0]).scale(0.3);
        let e0 = linear_energy(&u, &ut);
        let (mut a, mut b) = (u.clone(), ut.clone());
        for _ in 0..20 {
            let s = kg_linear_step(&a, &b, 0.7).unwrap();
            a = s.0;
            b = s.1;
        }
        let e1 = linear_energy(&a, &b);
        assert!((e1 - e0).abs() < 1e-12 * e0);
        let (c, d) = kg_linear_step(&a, &b, -14.0).unwrap();
        assert!(c.sub(&u).unwrap().max_abs() < 1e-11);
        assert!(d.sub(&ut).unwrap().max_abs() < 1e-11);
    }

    #[test]
    fn plane_wave_step_matches_closed_form() {
        let grid = Grid2D::new(32, 2.0 * PI * 4.0).unwrap();
        let k: [f64; 2] = [0.25, 0.5];
        let w = (1.0 + k[0] * k[0] + k[1] * k[1]).sqrt();
        let u = RealField::from_fn(grid, |x, y| (k[0] * x + k[1] * y).cos());
        let ut = RealField::zeros(grid);
        let dt = 1.3;
        let (u1, ut1) = kg_linear_step(&u, &ut, dt).unwrap();
        let eu = RealField::from_fn(grid, |x, y| (k[0] * x + k[1] * y).cos() * (w * dt).cos());
        let eut =
            RealField::from_fn(grid, |x, y| -w * (k[0] * x + k[1] * y).cos() * (w * dt).sin());
        assert!(u1.sub(&eu).unwrap().max_abs() < 1e-13);
        assert!(ut1.sub(&eut).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn box_annihilates_free_plane_wave() {
        let grid = Grid2D::new(32, 2.0 * PI * 4.0).unwrap();
        let k: [f64; 2] = [0.5, -0.25];
        let w = (1.0 + k[0] * k[0] + k[1] * k[1]).sqrt();
        let h = 1e-3;
        let slice = |t: f64| RealField::from_fn(grid, |x, y| (k[0] * x + k[1] * y - w * t).cos());
        let r = dalembertian_plus_one(&slice(2.0 - h), &slice(2.0), &slice(2.0 + h), h).unwrap();
        assert!(r.max_abs() < 1e-6);
    }

    #[test]
    fn crop_keeps_spacing_and_centre() {
        let grid = Grid2D::new(64, 32.0).unwrap();
        let f = RealField::from_fn(grid, |x, y| x + 10.0 * y);
        let c = f.crop_half().unwrap();
        assert_eq!(c.grid().spacing(), grid.spacing());
        let g = c.grid();
        for i in [0, 5, 31] {
            for j in [0, 17] {
                assert_eq!(c.get(i, j), g.coord(i) + 10.0 * g.coord(j));
            }
        }
    }

    #[test]
    fn sobolev_norm_zero_is_l2() {
        let grid = Grid2D::new(64, 30.0).unwrap();
        let f = gaussian(grid, 1.0, [2.0, 0.0]);
        assert!((sobolev_norm(&f, 0.0) - l2_norm(&f)).abs() < 1e-12);
        let direct = l2_norm(&apply_multiplier(&f, &SpectralMultiplier::Bessel(0.5)));
        assert!((h_half_norm(&f) - direct).abs() < 1e-12);
    }

    #[test]
    fn paired_transforms_match_single_ones() {
        let grid = Grid2D::new(32, 20.0).unwrap();
        let a = gaussian(grid, 2.0, [1.0, 0.5]);
        let b = RealField::from_fn(grid, |x, y| (0.3 * x).sin() * (-(y * y) / 9.0).exp());
        let (sa, sb) = spectra_pair(&a, &b).unwrap();
        for (p, q) in sa.data().iter().zip(a.spectrum().data()) {
            assert!((p - q).norm() < 1e-12);
        }
        for (p, q) in sb.data().iter().zip(b.spectrum().data()) {
            assert!((p - q).norm() < 1e-12);
        }
        let (ra, rb) = fields_pair(&sa, &sb).unwrap();
        assert!(ra.sub(&a).unwrap().max_abs() < 1e-14);
        assert!(rb.sub(&b).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn rejects_non_finite() {
        let grid = Grid2D::new(8, 8.0).unwrap();
        let mut v = vec![0.0; 64];
        v[9] = f64::NAN;
        assert!(matches!(RealField::from_vec(grid, v), Err(Error::NonFinite { index: 9 })));
    }
}
