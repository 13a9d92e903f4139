//! Exact kernel checks for the symmetrized coefficient operators at `k = 2, 3`.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use super::exact::{integer_matrix, kernel, mat_vec, primitive, rank, rational, Rational};
use super::frame::pairing_forms;
use crate::error::{Error, Result};
use crate::system::MonomialSystem;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LemmaReport {
    pub k: u32,
    pub n: usize,
    pub rank: usize,
    pub kernel_dimension: usize,
    pub kernel_vector: Vec<i64>,
    pub expected_kernel: Vec<i64>,
    pub annihilates_expected: bool,
    pub rederived_matches: bool,
}

/// The operator in the fixed layout used for the kernel claim.
pub fn displayed_operator(k: u32) -> Result<Vec<Vec<i64>>> {
    let t1 = vec![
        vec![0, 1, 0, 2, 1],
        vec![-1, 0, -2, 0, -1],
        vec![0, 2, 0, 0, 0],
        vec![-2, 0, 0, 0, 0],
        vec![-1, 1, 0, 0, 0],
    ];
    match k {
        2 => Ok(t1),
        3 => {
            let mut t2: Vec<Vec<i64>> = t1
                .into_iter()
                .map(|mut r| {
                    r.resize(9, 0);
                    r
                })
                .collect();
            for (col, sign) in [(8, 1), (9, 1), (6, -1), (7, -1)] {
                let mut r = vec![0; 9];
                r[col - 1] = sign;
                t2.push(r);
            }
            Ok(t2)
        }
        _ => Err(Error::UnsupportedDegree(k)),
    }
}

pub fn expected_kernel(k: u32) -> Result<Vec<i64>> {
    match k {
        2 => Ok(vec![0, 0, 1, 1, -2]),
        3 => Ok(vec![0, 0, 1, 1, -2, 0, 0, 0, 0]),
        _ => Err(Error::UnsupportedDegree(k)),
    }
}

/// Sum of the constant, `t` and `s` coefficient forms; at `k = 3` plus
/// `(A_{t⁴} − A_{s⁴}) / 3`.
pub fn rederived_operator(sys: &MonomialSystem) -> Vec<Vec<Rational>> {
    let n = sys.n();
    let mut weights = vec![((0, 0), rational(1)), ((1, 0), rational(1)), ((0, 1), rational(1))];
    if sys.k() == 3 {
        weights.push(((4, 0), Rational::new(1.into(), 3.into())));
        weights.push(((0, 4), Rational::new((-1).into(), 3.into())));
    }
    let forms = pairing_forms(sys);
    let mut out = vec![vec![Rational::zero(); n]; n];
    for (e, w) in weights {
        if let Some(f) = forms.iter().find(|f| f.exponent == e) {
            for (i, row) in f.matrix.iter().enumerate() {
                for (j, &a) in row.iter().enumerate() {
                    out[i][j] += &w * rational(a);
                }
            }
        }
    }
    out
}

pub fn verify_lemma_kernels(k: u32) -> Result<LemmaReport> {
    let sys = MonomialSystem::new(k)?;
    let n = sys.n();
    let shown = integer_matrix(&displayed_operator(k)?);
    let expected = expected_kernel(k)?;
    let expected_q: Vec<Rational> = expected.iter().map(|&x| rational(x)).collect();

    let r = rank(&shown);
    let ker = kernel(&shown, n);
    let annihilates = mat_vec(&shown, &expected_q).iter().all(Zero::is_zero);
    let kernel_vector = match ker.as_slice() {
        [v] => {
            let p = primitive(v);
            let dot: BigInt = p.iter().zip(&expected).map(|(a, &b)| a * b).sum();
            let sign = if dot < BigInt::zero() { -1 } else { 1 };
            p.iter().map(|x| x.to_i64().unwrap_or(i64::MAX) * sign).collect()
        }
        _ => Vec::new(),
    };
    let report = LemmaReport {
        k,
        n,
        rank: r,
        kernel_dimension: ker.len(),
        kernel_vector,
        expected_kernel: expected.clone(),
        annihilates_expected: annihilates,
        rederived_matches: rederived_operator(&sys) == shown,
    };
    let ok = report.rank == n - 1
        && report.kernel_dimension == 1
        && report.kernel_vector == expected
        && report.annihilates_expected
        && report.rederived_matches;
    if ok {
        Ok(report)
    } else {
        Err(Error::Mismatch(format!("kernel check failed: {report:?}")))
    }
}
