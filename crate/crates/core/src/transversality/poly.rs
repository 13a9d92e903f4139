use serde::Serialize;

use crate::error::{Error, Result};

/// Dense real polynomial in `(t, s)` with `deg <= degree`, stored on a
/// `(d+1) × (d+1)` grid where entry `(a, b)` is the coefficient of `t^a s^b`
/// and entries with `a + b > d` stay zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BivariatePolynomial {
    degree: usize,
    coeffs: Vec<f64>,
    norm: f64,
}

impl BivariatePolynomial {
    pub fn zero(degree: usize) -> Self {
        Self {
            degree,
            coeffs: vec![0.0; (degree + 1) * (degree + 1)],
            norm: 0.0,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_terms(0, &[((0, 0), c)]).expect("degree zero term")
    }

    /// Builds from `((a, b), coefficient)` terms; repeated terms add up.
    pub fn from_terms(degree: usize, terms: &[((usize, usize), f64)]) -> Result<Self> {
        let mut p = Self::zero(degree);
        for &((a, b), c) in terms {
            if a + b > degree {
                return Err(Error::invalid(format!(
                    "term t^{a} s^{b} exceeds degree bound {degree}"
                )));
            }
            if !c.is_finite() {
                return Err(Error::invalid("coefficients must be finite"));
            }
            p.coeffs[a * (degree + 1) + b] += c;
        }
        p.norm = p.recomputed_norm();
        Ok(p)
    }

    /// Coefficients listed in [`monomials`] order.
    pub fn from_vector(degree: usize, values: &[f64]) -> Result<Self> {
        let mons = monomials(degree);
        if mons.len() != values.len() {
            return Err(Error::invalid(format!(
                "degree {degree} needs {} coefficients, got {}",
                mons.len(),
                values.len()
            )));
        }
        let terms: Vec<_> = mons.into_iter().zip(values.iter().copied()).collect();
        Self::from_terms(degree, &terms)
    }

    pub fn degree_bound(&self) -> usize {
        self.degree
    }

    pub fn coeff(&self, a: usize, b: usize) -> f64 {
        if a + b > self.degree {
            0.0
        } else {
            self.coeffs[a * (self.degree + 1) + b]
        }
    }

    /// Stored coefficient `l²` norm.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn recomputed_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Highest total degree carrying a nonzero coefficient.
    pub fn actual_degree(&self) -> Option<usize> {
        self.terms()
            .filter(|&(_, c)| c != 0.0)
            .map(|((a, b), _)| a + b)
            .max()
    }

    pub fn terms(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        monomials(self.degree)
            .into_iter()
            .map(|(a, b)| ((a, b), self.coeff(a, b)))
    }

    pub fn to_vector(&self) -> Vec<f64> {
        self.terms().map(|(_, c)| c).collect()
    }

    pub fn eval(&self, t: f64, s: f64) -> f64 {
        let d = self.degree;
        let mut acc = 0.0;
        for a in (0..=d).rev() {
            let mut inner = 0.0;
            for b in (0..=d - a).rev() {
                inner = inner * s + self.coeffs[a * (d + 1) + b];
            }
            acc = acc * t + inner;
        }
        acc
    }

    /// Bound on `|∇Q|` over `[0,1]²`: `‖Q‖ · sqrt(Σ (a² + b²))` over all monomials
    /// of degree `<= d`, by Cauchy–Schwarz and `|∇(t^a s^b)|² <= a² + b²`.
    pub fn lipschitz(&self) -> f64 {
        self.norm * gradient_bound(self.degree)
    }
}

/// Monomials `(a, b)` with `a + b <= degree`, by total degree, then decreasing `a`.
pub fn monomials(degree: usize) -> Vec<(usize, usize)> {
    (0..=degree)
        .flat_map(|d| (0..=d).rev().map(move |a| (a, d - a)))
        .collect()
}

pub(crate) fn gradient_bound(degree: usize) -> f64 {
    monomials(degree)
        .into_iter()
        .map(|(a, b)| (a * a + b * b) as f64)
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_and_norm() {
        let q = BivariatePolynomial::from_terms(2, &[((1, 1), 1.0), ((0, 0), -0.25)]).unwrap();
        assert_eq!(q.eval(0.5, 0.5), 0.0);
        assert!((q.norm() - (1.0f64 + 0.0625).sqrt()).abs() < 1e-15);
        assert!((q.norm() - q.recomputed_norm()).abs() < 1e-12);
        assert_eq!(q.actual_degree(), Some(2));
        assert_eq!(q.coeff(3, 0), 0.0);
    }

    #[test]
    fn rejects_out_of_bound_terms() {
        assert!(BivariatePolynomial::from_terms(1, &[((1, 1), 1.0)]).is_err());
        assert!(BivariatePolynomial::from_vector(1, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn vector_round_trip() {
        let v = vec![1.0, -2.0, 0.5, 3.0, 0.0, 7.0];
        let q = BivariatePolynomial::from_vector(2, &v).unwrap();
        assert_eq!(q.to_vector(), v);
        assert_eq!(q.coeff(1, 0), -2.0);
        assert_eq!(q.coeff(0, 1), 0.5);
    }

    #[test]
    fn lipschitz_bound_dominates_sampled_slopes() {
        let q = BivariatePolynomial::from_vector(2, &[0.3, -1.0, 0.7, 2.0, -1.5, 0.4]).unwrap();
        let l = q.lipschitz();
        let h = 1e-3;
        for i in 0..50 {
            for j in 0..50 {
                let (t, s) = (i as f64 / 50.0, j as f64 / 50.0);
                let dt = (q.eval(t + h, s) - q.eval(t, s)) / h;
                let ds = (q.eval(t, s + h) - q.eval(t, s)) / h;
                assert!((dt * dt + ds * ds).sqrt() <= l * 1.01);
            }
        }
    }
}
