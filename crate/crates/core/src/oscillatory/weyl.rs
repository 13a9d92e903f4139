use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::sampling::{chunked, Domain, SamplePlan};
use super::sum::{ComplexSum, Moments};
use super::Estimate;
use crate::error::{Error, Result};
use crate::system::MonomialSystem;

/// `e(θ) = exp(2πiθ)`, reducing `θ` mod 1 first.
pub fn e(theta: f64) -> Complex64 {
    let f = theta - theta.floor();
    let (s, c) = (std::f64::consts::TAU * f).sin_cos();
    Complex64::new(c, s)
}

/// Coefficients `a_{i,j}`, `1 <= i, j <= N`, stored row-major by `i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientGrid {
    n: usize,
    a: Vec<Complex64>,
}

impl CoefficientGrid {
    pub fn new(n: usize, a: Vec<Complex64>) -> Result<Self> {
        if n == 0 || a.len() != n * n {
            return Err(Error::invalid(format!("expected {n}×{n} coefficients, got {}", a.len())));
        }
        if a.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::invalid("coefficients must be finite"));
        }
        Ok(Self { n, a })
    }

    pub fn ones(n: usize) -> Result<Self> {
        Self::new(n, vec![Complex64::new(1.0, 0.0); n * n])
    }

    /// `a_{i,j} = value` (1-based) and zero elsewhere.
    pub fn single(n: usize, i: usize, j: usize, value: Complex64) -> Result<Self> {
        if !(1..=n).contains(&i) || !(1..=n).contains(&j) {
            return Err(Error::invalid(format!("index ({i}, {j}) outside 1..={n}")));
        }
        let mut a = vec![Complex64::new(0.0, 0.0); n * n];
        a[(i - 1) * n + (j - 1)] = value;
        Self::new(n, a)
    }

    pub fn random_unimodular(n: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::new(n, (0..n * n).map(|_| e(rng.random::<f64>())).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.a[(i - 1) * self.n + (j - 1)]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.a
    }

    pub fn scaled(&self, lambda: Complex64) -> Self {
        Self {
            n: self.n,
            a: self.a.iter().map(|z| z * lambda).collect(),
        }
    }

    /// `‖a‖_{l^p}` for `p ∈ [1, ∞]`.
    pub fn norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::invalid(format!("p must lie in [1, ∞], got {p}")));
        }
        if p.is_infinite() {
            return Ok(self.a.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        let s: f64 = self.a.iter().map(|z| z.norm().powf(p)).sum();
        Ok(s.powf(1.0 / p))
    }
}

/// Node lists with `first[i-1], second[i-1] ∈ ((i−1)/N, i/N]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Nodes {
    first: Vec<f64>,
    second: Vec<f64>,
}

impl Nodes {
    pub fn new(first: Vec<f64>, second: Vec<f64>) -> Result<Self> {
        let n = first.len();
        if n == 0 || second.len() != n {
            return Err(Error::invalid("node lists must both have N >= 1 entries"));
        }
        for (name, list) in [("first", &first), ("second", &second)] {
            for (idx, &v) in list.iter().enumerate() {
                let lo = idx as f64 / n as f64;
                let hi = (idx + 1) as f64 / n as f64;
                if !(v > lo && v <= hi) {
                    return Err(Error::invalid(format!(
                        "{name} node {} = {v} is outside ({lo}, {hi}]",
                        idx + 1
                    )));
                }
            }
        }
        Ok(Self { first, second })
    }

    /// Right endpoints `i/N`.
    pub fn right_endpoints(n: usize) -> Self {
        let v: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
        Self {
            first: v.clone(),
            second: v,
        }
    }

    /// `(i − 1 + u)/N` with `u ∈ (0, 1]`.
    pub fn sample(n: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |i: usize| (i as f64 - rng.random::<f64>()) / n as f64;
        let first = (1..=n).map(&mut draw).collect();
        let second = (1..=n).map(&mut draw).collect();
        Self::new(first, second)
    }

    pub fn n(&self) -> usize {
        self.first.len()
    }

    pub fn first(&self) -> &[f64] {
        &self.first
    }

    pub fn second(&self) -> &[f64] {
        &self.second
    }
}

/// Monomial values `φ(t_i, s_j)` for every grid cell, row-major by `(i, j)`.
struct PhaseTable {
    dim: usize,
    phi: Vec<f64>,
}

impl PhaseTable {
    fn new(sys: &MonomialSystem, first: &[f64], second: &[f64]) -> Self {
        let phi = first
            .iter()
            .flat_map(|&t| {
                second.iter().flat_map(move |&s| {
                    sys.monomials()
                        .iter()
                        .map(move |&(a, b)| t.powi(a as i32) * s.powi(b as i32))
                })
            })
            .collect();
        Self { dim: sys.n(), phi }
    }

    fn sum(&self, a: &[Complex64], x: &[f64]) -> Complex64 {
        let mut acc = ComplexSum::new();
        for (coef, row) in a.iter().zip(self.phi.chunks_exact(self.dim)) {
            if *coef == Complex64::new(0.0, 0.0) {
                continue;
            }
            let theta: f64 = row.iter().zip(x).map(|(p, xc)| p * xc).sum();
            acc.add(coef * e(theta));
        }
        acc.value()
    }
}

/// `Σ_{i,j} a_{i,j} e(x · φ(t_i, s_j))`.
pub fn weyl_sum(sys: &MonomialSystem, grid: &CoefficientGrid, nodes: &Nodes, x: &[f64]) -> Result<Complex64> {
    check_shapes(grid, nodes)?;
    if x.len() != sys.n() || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("x must be {} finite reals", sys.n())));
    }
    Ok(PhaseTable::new(sys, &nodes.first, &nodes.second).sum(&grid.a, x))
}

fn check_shapes(grid: &CoefficientGrid, nodes: &Nodes) -> Result<()> {
    if grid.n != nodes.n() {
        return Err(Error::invalid(format!(
            "grid has N = {} but nodes have N = {}",
            grid.n,
            nodes.n()
        )));
    }
    Ok(())
}

/// `(avg_{B_R} |S|^p)^{1/p} / ‖a‖_{l^p}`, averaging over `plan`'s ball of radius `R`.
///
/// The reported standard error is propagated from the mean of `|S|^p` to first order.
pub fn restriction_ratio(
    sys: &MonomialSystem,
    grid: &CoefficientGrid,
    nodes: &Nodes,
    p: f64,
    radius: f64,
    plan: &SamplePlan,
) -> Result<Estimate> {
    check_shapes(grid, nodes)?;
    if !(p.is_finite() && p >= 2.0) {
        return Err(Error::invalid(format!("p must be finite and at least 2, got {p}")));
    }
    let n2 = (grid.n * grid.n) as f64;
    if !(radius.is_finite() && radius >= n2) {
        return Err(Error::invalid(format!("radius R = {radius} must be at least N² = {n2}")));
    }
    plan.validate(sys.n())?;
    if matches!(plan.domain, Domain::Torus) {
        return Err(Error::invalid("restriction ratio averages over a ball, not the torus"));
    }
    let norm = grid.norm(p)?;
    if norm == 0.0 {
        return Err(Error::invalid("coefficients must not all vanish"));
    }
    let table = PhaseTable::new(sys, &nodes.first, &nodes.second);
    let parts = chunked(plan.samples, plan.seed, |rng, _, count| {
        let mut m = Moments::default();
        for _ in 0..count {
            let x = plan.draw(rng, sys.n(), radius);
            m.push(table.sum(&grid.a, &x).norm().powf(p));
        }
        m
    });
    let mut total = Moments::default();
    parts.iter().for_each(|m| total.merge(m));
    let ratio = total.mean.powf(1.0 / p) / norm;
    let stderr = if total.mean > 0.0 {
        ratio / p * total.stderr() / total.mean
    } else {
        0.0
    };
    Ok(Estimate {
        estimate: ratio,
        stderr,
        samples: plan.samples,
        seed: plan.seed,
    })
}
