//! Fourier coefficients of `|cos θ|cos θ` against quadrature, the Parseval
//! sum and the decay of the corrector coefficients.

use kgscatter::profile::{corrector_coeff, fourier_coeff, fourier_coeff_quadrature, partial_series};
use kgscatter::residual_lab::linear_fit;

fn main() {
    println!("  n   c_n (closed)        c_n (quadrature)    |diff|     g_n");
    for n in 1..=11 {
        let (c, q) = (fourier_coeff(n), fourier_coeff_quadrature(n));
        let g = if n >= 3 { format!("{:.6e}", corrector_coeff(n)) } else { "-".into() };
        println!("{n:3}   {c:+.15}  {q:+.15}  {:.1e}  {g}", (c - q).abs());
    }
    let parseval: f64 = (1..=201).map(|n| fourier_coeff(n).powi(2)).sum();
    println!("sum_(n<=201) c_n^2 = {parseval:.10}  (mean of cos^4 = 0.75)");
    let theta: f64 = 0.3;
    println!(
        "series at theta = 0.3 with 201 terms: {:.10} vs {:.10}",
        partial_series(theta, 201),
        theta.cos().abs() * theta.cos()
    );
    let (x, y): (Vec<f64>, Vec<f64>) =
        (5..=101u32).step_by(2).map(|n| ((n as f64).ln(), corrector_coeff(n).abs().ln())).unzip();
    println!("|g_n| ~ n^-p over odd n in [5, 101]: p = {:.4}", -linear_fit(&x, &y).1);
}
