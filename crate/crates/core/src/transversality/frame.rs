use std::collections::BTreeMap;

use serde::Serialize;

use super::exact::{bilinear, Rational};
use super::poly::BivariatePolynomial;
use crate::error::{Error, Result};
use crate::system::MonomialSystem;

/// `n1 = ∂_t Φ(t, s)` and `n2 = ∂_s Φ(t, s)` for the moment curve surface `Φ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangentFrame {
    pub t: f64,
    pub s: f64,
    pub n1: Vec<f64>,
    pub n2: Vec<f64>,
}

pub fn tangent_frame(sys: &MonomialSystem, t: f64, s: f64) -> TangentFrame {
    let pow = |x: f64, e: u32| if e == 0 { 1.0 } else { x.powi(e as i32) };
    let (n1, n2) = sys
        .monomials()
        .iter()
        .map(|&(i, j)| {
            let dt = if i == 0 { 0.0 } else { f64::from(i) * pow(t, i - 1) * pow(s, j) };
            let ds = if j == 0 { 0.0 } else { f64::from(j) * pow(t, i) * pow(s, j - 1) };
            (dt, ds)
        })
        .unzip();
    TangentFrame { t, s, n1, n2 }
}

/// Coefficient of `t^a s^b` in `Q_{v,w}`, as the antisymmetric integer form
/// `A` with `coefficient = vᵀ A w`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairingForm {
    pub exponent: (u32, u32),
    pub matrix: Vec<Vec<i64>>,
}

/// Nonzero pairing forms, ordered by exponent.
///
/// `Q_{v,w} = (n1·v)(n2·w) − (n1·w)(n2·v) = Σ_{c,d} v_c w_d (i_c j_d − i_d j_c) t^{i_c+i_d−1} s^{j_c+j_d−1}`.
pub fn pairing_forms(sys: &MonomialSystem) -> Vec<PairingForm> {
    let mons = sys.monomials();
    let n = mons.len();
    let mut forms: BTreeMap<(u32, u32), Vec<Vec<i64>>> = BTreeMap::new();
    for (c, &(ic, jc)) in mons.iter().enumerate() {
        for (d, &(id, jd)) in mons.iter().enumerate() {
            let w = i64::from(ic) * i64::from(jd) - i64::from(id) * i64::from(jc);
            if w == 0 {
                continue;
            }
            // w != 0 forces i_c + i_d >= 1 and j_c + j_d >= 1.
            let e = (ic + id - 1, jc + jd - 1);
            forms.entry(e).or_insert_with(|| vec![vec![0; n]; n])[c][d] += w;
        }
    }
    forms
        .into_iter()
        .filter(|(_, m)| m.iter().flatten().any(|&x| x != 0))
        .map(|(exponent, matrix)| PairingForm { exponent, matrix })
        .collect()
}

/// `vᵀ A w` for antisymmetric `A`, summed as `Σ_{i<j} a_ij (v_i w_j − v_j w_i)` so that `v = w` gives exactly zero.
pub(crate) fn form_value(a: &[Vec<i64>], v: &[f64], w: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (i, row) in a.iter().enumerate() {
        for (j, &e) in row.iter().enumerate().skip(i + 1) {
            if e != 0 {
                acc += e as f64 * (v[i] * w[j] - v[j] * w[i]);
            }
        }
    }
    acc
}

fn check_len(sys: &MonomialSystem, v: usize, w: usize) -> Result<()> {
    if v != sys.n() || w != sys.n() {
        return Err(Error::invalid(format!(
            "vectors must have length {}, got {v} and {w}",
            sys.n()
        )));
    }
    Ok(())
}

/// `Q_{v,w}` with degree bound `2k − 2`.
pub fn q_polynomial(sys: &MonomialSystem, v: &[f64], w: &[f64]) -> Result<BivariatePolynomial> {
    check_len(sys, v.len(), w.len())?;
    let terms: Vec<_> = pairing_forms(sys)
        .iter()
        .map(|f| {
            let (a, b) = f.exponent;
            ((a as usize, b as usize), form_value(&f.matrix, v, w))
        })
        .collect();
    BivariatePolynomial::from_terms(2 * sys.k() as usize - 2, &terms)
}

/// Exact nonzero coefficients of `Q_{v,w}` keyed by exponent.
pub fn q_coefficients_exact(
    sys: &MonomialSystem,
    v: &[Rational],
    w: &[Rational],
) -> Result<BTreeMap<(u32, u32), Rational>> {
    check_len(sys, v.len(), w.len())?;
    Ok(pairing_forms(sys)
        .iter()
        .map(|f| (f.exponent, bilinear(&f.matrix, v, w)))
        .filter(|(_, c)| !num_traits::Zero::is_zero(c))
        .collect())
}
