use std::f64::consts::PI;

/// `sin(nπ/2)` for integer `n`, exact.
#[inline]
fn sin_half_pi(n: u32) -> f64 {
    match n % 4 {
        1 => 1.0,
        3 => -1.0,
        _ => 0.0,
    }
}

/// Cosine coefficient `c_n` of `|cos θ| cos θ`.
pub fn fourier_coeff(n: u32) -> f64 {
    if n % 2 == 0 {
        return 0.0;
    }
    let nf = n as f64;
    -(8.0 / PI) * sin_half_pi(n) / (nf * (nf * nf - 4.0))
}

/// `c_n / (1 - n²)`: the corrector amplitude per unit `λ(P₁²+Q₁²)`.
pub fn corrector_coeff(n: u32) -> f64 {
    if n < 2 || n % 2 == 0 {
        return 0.0;
    }
    let nf = n as f64;
    8.0 * sin_half_pi(n) / (PI * nf * (nf * nf - 1.0) * (nf * nf - 4.0))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// `(1/π)∫₀^{2π} |cos θ| cos θ cos nθ dθ` by panelled Gauss-Legendre on the
/// two arcs where `cos θ` keeps its sign.
pub fn fourier_coeff_quadrature(n: u32) -> f64 {
    let nodes = gauss_legendre(16);
    let panels = 64 + 2 * n as usize;
    let f = |th: f64| {
        let c = th.cos();
        c.abs() * c * (n as f64 * th).cos()
    };
    let mut total = 0.0;
    for (a, b) in [(-PI / 2.0, PI / 2.0), (PI / 2.0, 1.5 * PI)] {
        let w = (b - a) / panels as f64;
        for p in 0..panels {
            let lo = a + p as f64 * w;
            let mid = lo + 0.5 * w;
            total += nodes.iter().map(|(x, wt)| wt * f(mid + 0.5 * w * x)).sum::<f64>() * 0.5 * w;
        }
    }
    total / PI
}

/// `Σ_{n ≤ N} c_n cos nθ`.
pub fn partial_series(theta: f64, n_max: u32) -> f64 {
    (1..=n_max).step_by(2).map(|n| fourier_coeff(n) * (n as f64 * theta).cos()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_coefficients() {
        assert!((fourier_coeff(1) - 8.0 / (3.0 * PI)).abs() < 1e-15);
        assert!((fourier_coeff(1) - 0.848826).abs() < 1e-6);
        assert_eq!(fourier_coeff(2), 0.0);
        assert!((fourier_coeff(3) - 0.169765).abs() < 1e-6);
        assert!((fourier_coeff(5) + 8.0 / (105.0 * PI)).abs() < 1e-16);
        assert!((fourier_coeff(5) - fourier_coeff_quadrature(5)).abs() < 1e-12);
        assert_eq!(fourier_coeff(0), 0.0);
    }

    #[test]
    fn closed_form_matches_quadrature() {
        for n in 0..=201 {
            let d = (fourier_coeff(n) - fourier_coeff_quadrature(n)).abs();
            assert!(d < 1e-10, "n = {n}: diff {d:e}");
        }
    }

    #[test]
    fn parseval_sum() {
        let s: f64 = (1..=201).map(|n| fourier_coeff(n).powi(2)).sum();
        assert!((s - 0.75).abs() < 1e-4);
    }

    #[test]
    fn corrector_solves_harmonic_balance() {
        for n in 2..60u32 {
            let nf = n as f64;
            let lhs = (1.0 - nf * nf) * corrector_coeff(n);
            assert!((lhs - fourier_coeff(n)).abs() < 1e-15);
        }
        assert!((corrector_coeff(3) + 1.0 / (15.0 * PI)).abs() < 1e-16);
    }

    #[test]
    fn series_error_halves_with_doubled_truncation() {
        let sup = |n: u32| {
            (0..4000)
                .map(|j| {
                    let th = 2.0 * PI * j as f64 / 4000.0;
                    (partial_series(th, n) - th.cos().abs() * th.cos()).abs()
                })
                .fold(0.0, f64::max)
        };
        for n in [11u32, 21, 41, 81] {
            assert!(sup(n) <= 0.5 * sup(n / 2), "N = {n}");
        }
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let q = gauss_legendre(8);
        let int: f64 = q.iter().map(|(x, w)| w * x.powi(14)).sum();
        assert!((int - 2.0 / 15.0).abs() < 1e-14);
    }
}
