use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Cached forward/inverse 1D plans for one axis length.
pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plan_cache() -> &'static Mutex<HashMap<usize, Arc<Fft2>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Fft2>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl Fft2 {
    /// Shared plan for `n × n` transforms.
    pub fn for_size(n: usize) -> Arc<Fft2> {
        let mut cache = plan_cache().lock().expect("fft plan cache poisoned");
        cache
            .entry(n)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                Arc::new(Fft2 {
                    n,
                    forward: planner.plan_fft_forward(n),
                    inverse: planner.plan_fft_inverse(n),
                })
            })
            .clone()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Unnormalized forward transform, `F_k = Σ f_j e^{-2πi j·k/n}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Unnormalized inverse transform, `f_j = Σ F_k e^{+2πi j·k/n}`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        assert_eq!(data.len(), n * n, "buffer does not match plan size");
        rows(data, n, plan);
        transpose(data, n);
        rows(data, n, plan);
        transpose(data, n);
    }
}

fn rows(data: &mut [Complex64], n: usize, plan: &Arc<dyn Fft<f64>>) {
    let rows_per_task = (4096 / n).max(1);
    data.par_chunks_mut(n * rows_per_task).for_each(|chunk| {
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(chunk, &mut scratch);
    });
}

/// In-place transpose of a square row-major matrix.
fn transpose(data: &mut [Complex64], n: usize) {
    const B: usize = 32;
    for bi in (0..n).step_by(B) {
        for bj in (bi..n).step_by(B) {
            for i in bi..(bi + B).min(n) {
                let j0 = if bi == bj { i + 1 } else { bj };
                for j in j0..(bj + B).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn naive_dft(data: &[Complex64], n: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); n * n];
        for kx in 0..n {
            for ky in 0..n {
                let mut acc = Complex64::default();
                for jx in 0..n {
                    for jy in 0..n {
                        let ph = -2.0 * PI * ((jx * kx + jy * ky) as f64) / n as f64;
                        acc += data[jx * n + jy] * Complex64::from_polar(1.0, ph);
                    }
                }
                out[kx * n + ky] = acc;
            }
        }
        out
    }

    #[test]
    fn matches_naive_dft() {
        let n = 8;
        let data: Vec<Complex64> = (0..n * n)
            .map(|j| Complex64::new((j as f64 * 0.37).sin(), (j as f64 * 0.11).cos()))
            .collect();
        let mut fast = data.clone();
        Fft2::for_size(n).forward(&mut fast);
        let slow = naive_dft(&data, n);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn round_trip_scales_by_n_squared() {
        let n = 64;
        let data: Vec<Complex64> = (0..n * n)
            .map(|j| Complex64::new((j as f64).sqrt().sin(), 0.0))
            .collect();
        let mut buf = data.clone();
        let plan = Fft2::for_size(n);
        plan.forward(&mut buf);
        plan.inverse(&mut buf);
        let scale = (n * n) as f64;
        for (a, b) in buf.iter().zip(&data) {
            assert!((a / scale - b).norm() < 1e-13);
        }
    }

    #[test]
    fn transpose_is_involution() {
        let n = 70;
        let data: Vec<Complex64> = (0..n * n).map(|j| Complex64::new(j as f64, 0.0)).collect();
        let mut buf = data.clone();
        transpose(&mut buf, n);
        assert_eq!(buf[1].re, n as f64);
        transpose(&mut buf, n);
        assert_eq!(buf, data);
    }
}
