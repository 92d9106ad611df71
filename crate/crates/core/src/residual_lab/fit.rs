use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `norm ≈ C·t^{-p}·(log t)^q` fitted by least squares in log space with
/// `q` held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub p: f64,
    pub q: u32,
    pub c: f64,
    pub rms: f64,
    pub window: [f64; 2],
}

impl RateFit {
    pub fn predict(&self, t: f64) -> f64 {
        self.c * t.powf(-self.p) * t.ln().powi(self.q as i32)
    }
}

/// Slope of the least-squares line through `(x, y)`.
pub fn linear_slope(x: &[f64], y: &[f64]) -> f64 {
    linear_fit(x, y).1
}

/// `(intercept, slope)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

/// Power-law fit over `(t, norm)` samples.
pub fn rate_fit(samples: &[(f64, f64)], q: u32) -> Result<RateFit> {
    if samples.len() < 4 {
        return Err(Error::TooFewSamples { needed: 4, got: samples.len() });
    }
    if q > 2 {
        return Err(Error::InvalidParameter(format!("log power q = {q} must be 0, 1 or 2")));
    }
    if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::InvalidParameter("fit times must be strictly increasing".into()));
    }
    if samples.iter().any(|&(t, v)| !(v > 0.0) || !(t > 1.0)) {
        return Err(Error::InvalidParameter(
            "rate fit needs positive norms at times t > 1".into(),
        ));
    }
    let x: Vec<f64> = samples.iter().map(|&(t, _)| t.ln()).collect();
    let y: Vec<f64> = samples
        .iter()
        .map(|&(t, v)| v.ln() - q as f64 * t.ln().ln())
        .collect();
    let (b, slope) = linear_fit(&x, &y);
    let rms = (x
        .iter()
        .zip(&y)
        .map(|(xi, yi)| (yi - b - slope * xi).powi(2))
        .sum::<f64>()
        / x.len() as f64)
        .sqrt();
    Ok(RateFit {
        p: -slope,
        q,
        c: b.exp(),
        rms,
        window: [samples[0].0, samples[samples.len() - 1].0],
    })
}
