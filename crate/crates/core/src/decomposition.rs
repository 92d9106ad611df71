//! The nonlinearity `λ|u|u` and its quadratic splitting.

use serde::{Deserialize, Serialize};

use crate::spectral_core::RealField;

/// `N(u) = λ|u|u` pointwise.
pub fn apply_n(u: &RealField, lambda: f64) -> RealField {
    u.map(|v| lambda * v.abs() * v)
}

#[inline]
pub fn n_scalar(v: f64, lambda: f64) -> f64 {
    lambda * v.abs() * v
}

/// `F(u) = c_even·u² + c_odd·|u|u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticNonlinearity {
    pub c_even: f64,
    pub c_odd: f64,
}

impl QuadraticNonlinearity {
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        self.c_even * u * u + self.c_odd * u.abs() * u
    }

    pub fn apply(&self, u: &RealField) -> RealField {
        u.map(|v| self.eval(v))
    }
}

/// Splits a positively 2-homogeneous `F` from its values at `±1`.
pub fn split_quadratic(f_plus: f64, f_minus: f64) -> QuadraticNonlinearity {
    QuadraticNonlinearity {
        c_even: 0.5 * (f_plus + f_minus),
        c_odd: 0.5 * (f_plus - f_minus),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_core::Grid2D;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn constant_fields() {
        let g = Grid2D::new(8, 8.0).unwrap();
        let two = RealField::from_fn(g, |_, _| 2.0);
        assert!(apply_n(&two, 1.0).data().iter().all(|&v| v == 4.0));
        assert!(apply_n(&two.scale(-1.0), 1.0).data().iter().all(|&v| v == -4.0));
        let three = RealField::from_fn(g, |_, _| 3.0);
        assert!(apply_n(&three, 0.5).data().iter().all(|&v| v == 4.5));
    }

    #[test]
    fn split_examples() {
        assert_eq!(split_quadratic(1.0, -1.0), QuadraticNonlinearity { c_even: 0.0, c_odd: 1.0 });
        assert_eq!(split_quadratic(1.0, 1.0), QuadraticNonlinearity { c_even: 1.0, c_odd: 0.0 });
        let q = split_quadratic(3.0, 1.0);
        assert_eq!((q.c_even, q.c_odd), (2.0, 1.0));
        assert_eq!(q.eval(-2.0), 4.0);
    }

    #[test]
    fn split_reconstructs_homogeneous_functions() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let (a, b) = (1.75, -0.625);
        let f = |u: f64| if u >= 0.0 { a * u * u } else { b * u * u };
        let q = split_quadratic(f(1.0), f(-1.0));
        for _ in 0..1000 {
            let u: f64 = rng.gen_range(-100.0..100.0);
            assert!((q.eval(u) - f(u)).abs() <= 4.0 * f64::EPSILON * f(u).abs());
        }
    }

    proptest! {
        #[test]
        fn positive_homogeneity(s in 0.01f64..100.0, v in -10.0f64..10.0, lambda in -2.0f64..2.0) {
            let lhs = n_scalar(s * v, lambda);
            let rhs = s * s * n_scalar(v, lambda);
            prop_assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * rhs.abs());
        }
    }
}
