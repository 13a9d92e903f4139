//! Randomized search for subspaces on which every pairing form vanishes.
//!
//! A subspace `V` with `Q_{v,w} ≡ 0` on `V × V` is exactly a common isotropic
//! subspace of the coefficient forms, and by bilinearity it suffices to test
//! pairs of basis vectors.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::exact::{bilinear, rank, round_rational, rref, Rational};
use super::frame::{pairing_forms, PairingForm};
use crate::error::{Error, Result};
use crate::system::MonomialSystem;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    pub k: u32,
    pub dim: usize,
    pub trials: u64,
    pub seed: u64,
    pub violation_found: bool,
    pub best_residual: f64,
    /// Exact basis as `"p/q"` strings, present only for a verified violation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Best random starts that get refined by descent.
    pub refine: usize,
    pub descent_steps: usize,
    pub max_denominator: i64,
    /// Residual below which a candidate is rounded and checked exactly.
    pub verify_below: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            refine: 8,
            descent_steps: 300,
            max_denominator: 64,
            verify_below: 1e-8,
        }
    }
}

struct Forms {
    n: usize,
    dense: Vec<Vec<f64>>,
    exact: Vec<PairingForm>,
}

impl Forms {
    fn new(sys: &MonomialSystem) -> Self {
        let exact = pairing_forms(sys);
        let n = sys.n();
        let dense = exact
            .iter()
            .map(|f| f.matrix.iter().flatten().map(|&x| x as f64).collect())
            .collect();
        Self { n, dense, exact }
    }

    fn apply(&self, a: &[f64], v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| a[i * self.n + j] * v[j]).sum())
            .collect()
    }

    /// `Σ_forms Σ_{i<j} (b_iᵀ A b_j)²` and its Euclidean gradient.
    fn residual(&self, basis: &[Vec<f64>], want_grad: bool) -> (f64, Vec<Vec<f64>>) {
        let d = basis.len();
        let mut r = 0.0;
        let mut grad = vec![vec![0.0; self.n]; if want_grad { d } else { 0 }];
        for a in &self.dense {
            let ab: Vec<Vec<f64>> = basis.iter().map(|b| self.apply(a, b)).collect();
            for i in 0..d {
                for (j, abj) in ab.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let x: f64 = dot(&basis[i], abj);
                    if i < j {
                        r += x * x;
                    }
                    if want_grad {
                        for (g, y) in grad[i].iter_mut().zip(abj) {
                            *g += 2.0 * x * y;
                        }
                    }
                }
            }
        }
        (r, grad)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Modified Gram–Schmidt; `None` when the rows are numerically dependent.
fn orthonormalize(rows: &mut [Vec<f64>]) -> Option<()> {
    for i in 0..rows.len() {
        for j in 0..i {
            let p = dot(&rows[i], &rows[j]);
            let (head, tail) = rows.split_at_mut(i);
            for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                *x -= p * y;
            }
        }
        let norm = dot(&rows[i], &rows[i]).sqrt();
        if norm < 1e-12 {
            return None;
        }
        rows[i].iter_mut().for_each(|x| *x /= norm);
    }
    Some(())
}

fn random_basis(rng: &mut ChaCha8Rng, dim: usize, n: usize) -> Vec<Vec<f64>> {
    loop {
        let mut rows: Vec<Vec<f64>> = (0..dim)
            .map(|_| (0..n).map(|_| StandardNormal.sample(rng)).collect())
            .collect();
        if orthonormalize(&mut rows).is_some() {
            return rows;
        }
    }
}

/// Projected gradient descent with backtracking, retracting by Gram–Schmidt.
fn descend(forms: &Forms, mut basis: Vec<Vec<f64>>, steps: usize) -> (f64, Vec<Vec<f64>>) {
    let (mut r, _) = forms.residual(&basis, false);
    let mut eta = 0.1;
    for _ in 0..steps {
        if r < 1e-28 {
            break;
        }
        let (_, grad) = forms.residual(&basis, true);
        let mut accepted = false;
        while eta > 1e-12 {
            let mut trial: Vec<Vec<f64>> = basis
                .iter()
                .zip(&grad)
                .map(|(b, g)| b.iter().zip(g).map(|(x, y)| x - eta * y).collect())
                .collect();
            if orthonormalize(&mut trial).is_some() {
                let (rt, _) = forms.residual(&trial, false);
                if rt < r {
                    basis = trial;
                    r = rt;
                    eta *= 1.5;
                    accepted = true;
                    break;
                }
            }
            eta *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (r, basis)
}

/// Rounds the row space to small-denominator rationals and checks every form exactly.
fn verify(forms: &Forms, basis: &[Vec<f64>], max_den: i64) -> Option<Vec<Vec<Rational>>> {
    let mut m: Vec<Vec<f64>> = basis.to_vec();
    let (rows, cols) = (m.len(), forms.n);
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let p = (r..rows).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))?;
        if m[p][c].abs() < 1e-6 {
            continue;
        }
        m.swap(r, p);
        let piv = m[r][c];
        m[r].iter_mut().for_each(|x| *x /= piv);
        for i in 0..rows {
            if i != r {
                let f = m[i][c];
                let pivot_row = m[r].clone();
                for (x, y) in m[i].iter_mut().zip(&pivot_row) {
                    *x -= f * y;
                }
            }
        }
        r += 1;
    }
    let mut q: Vec<Vec<Rational>> = m
        .iter()
        .map(|row| row.iter().map(|&x| round_rational(x, max_den)).collect())
        .collect();
    if rank(&q) != rows {
        return None;
    }
    rref(&mut q);
    let isotropic = forms.exact.iter().all(|f| {
        (0..rows).all(|i| (i + 1..rows).all(|j| num_traits::Zero::is_zero(&bilinear(&f.matrix, &q[i], &q[j]))))
    });
    isotropic.then_some(q)
}

pub fn isotropic_search(sys: &MonomialSystem, dim: usize, trials: u64, seed: u64) -> Result<SearchReport> {
    isotropic_search_with(sys, dim, trials, seed, SearchOptions::default())
}

/// Trial `i` draws from ChaCha stream `i` of `seed`, so the report does not
/// depend on the number of worker threads.
pub fn isotropic_search_with(
    sys: &MonomialSystem,
    dim: usize,
    trials: u64,
    seed: u64,
    opts: SearchOptions,
) -> Result<SearchReport> {
    let n = sys.n();
    if dim == 0 || dim > n {
        return Err(Error::invalid(format!("dim must lie in 1..={n}, got {dim}")));
    }
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let forms = Forms::new(sys);
    let report = |best: f64, basis: Option<Vec<Vec<Rational>>>| SearchReport {
        k: sys.k(),
        dim,
        trials,
        seed,
        violation_found: basis.is_some(),
        best_residual: if basis.is_some() { 0.0 } else { best },
        basis: basis.map(|b| b.iter().map(|r| r.iter().map(ToString::to_string).collect()).collect()),
    };

    let draw = |t: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t);
        random_basis(&mut rng, dim, n)
    };

    // A line is always isotropic; the first trial settles it.
    if dim == 1 {
        let b = draw(0);
        return Ok(report(0.0, verify(&forms, &b, opts.max_denominator)));
    }

    let mut scored: Vec<(f64, u64)> = (0..trials)
        .into_par_iter()
        .map(|t| (forms.residual(&draw(t), false).0, t))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let refined: Vec<(f64, Vec<Vec<f64>>)> = scored
        .par_iter()
        .take(opts.refine.max(1))
        .map(|&(_, t)| descend(&forms, draw(t), opts.descent_steps))
        .collect();
    let mut best = scored[0].0;
    for (r, basis) in &refined {
        best = best.min(*r);
        if *r < opts.verify_below {
            if let Some(q) = verify(&forms, basis, opts.max_denominator) {
                return Ok(report(0.0, Some(q)));
            }
        }
    }
    Ok(report(best, None))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_are_isotropic() {
        for k in [2, 3] {
            let sys = MonomialSystem::new(k).unwrap();
            let rep = isotropic_search(&sys, 1, 5, 3).unwrap();
            assert!(rep.violation_found);
            assert_eq!(rep.basis.as_ref().unwrap().len(), 1);
        }
    }

    #[test]
    fn no_three_dimensional_violation_at_k2() {
        let sys = MonomialSystem::new(2).unwrap();
        let rep = isotropic_search(&sys, 3, 500, 1).unwrap();
        assert!(!rep.violation_found);
        assert!(rep.best_residual > 0.0);
    }

    #[test]
    fn two_dimensional_isotropic_planes_are_found_and_exact() {
        // span{(0,0,1,1,-2), e1 - ...}: dimension two is allowed; the search should reach one.
        let sys = MonomialSystem::new(2).unwrap();
        let rep = isotropic_search(&sys, 2, 200, 5).unwrap();
        if let Some(basis) = &rep.basis {
            let forms = Forms::new(&sys);
            let q: Vec<Vec<Rational>> = basis
                .iter()
                .map(|r| r.iter().map(|s| s.parse().unwrap()).collect())
                .collect();
            for f in &forms.exact {
                assert!(num_traits::Zero::is_zero(&bilinear(&f.matrix, &q[0], &q[1])));
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let sys = MonomialSystem::new(2).unwrap();
        let forms = Forms::new(&sys);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = random_basis(&mut rng, 3, 5);
        let (r0, g) = forms.residual(&b, true);
        let h = 1e-6;
        for i in 0..3 {
            for c in 0..5 {
                let mut bp = b.clone();
                bp[i][c] += h;
                let (r1, _) = forms.residual(&bp, false);
                assert!(((r1 - r0) / h - g[i][c]).abs() < 1e-3 * (1.0 + g[i][c].abs()));
            }
        }
    }

    #[test]
    fn thread_count_does_not_change_report() {
        let sys = MonomialSystem::new(2).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| isotropic_search(&sys, 3, 300, 9).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn dimension_validation() {
        let sys = MonomialSystem::new(2).unwrap();
        assert!(isotropic_search(&sys, 0, 10, 1).is_err());
        assert!(isotropic_search(&sys, 6, 10, 1).is_err());
    }
}
