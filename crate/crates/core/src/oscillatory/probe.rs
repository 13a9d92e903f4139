//! Lower-bound probes for the decoupling constant.
//!
//! For `g` constant on each cell `Δ` of side `l = N^{−1/k}`, `E_Δ g(x) = g_Δ I_Δ(x)`
//! with `I_Δ(x) = ∫_Δ e(x · φ(t, s) + ξ · (t, s)) dt ds`. Each `I_Δ` is computed by
//! tensor Gauss–Legendre quadrature of order 4 on `P × P` panels per cell, where
//!
//! `P = ⌊4 (|x| G + |ξ|) l⌋ + 1`,  `G = max(√(Σ_c a_c²), √(Σ_c b_c²))`
//!
//! over the monomials `t^a s^b`. `|x| G + |ξ|` bounds the phase gradient (in cycles)
//! along either axis, so the phase moves by less than a quarter cycle per panel.
//!
//! Both sides use the same samples, so `|Σ_Δ E_Δ g| <= Σ_Δ |E_Δ g|` and Hölder give
//! `ratio <= (#cells)^{1 − 1/p}` exactly, and a single-cell `g` gives ratio 1.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::sampling::{chunked, Domain, SamplePlan};
use super::sum::{CompensatedSum, ComplexSum};
use super::weyl::e;
use crate::error::{Error, Result};
use crate::system::MonomialSystem;

const GL4_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL4_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_8,
    0.652_145_154_862_546_2,
    0.652_145_154_862_546_2,
    0.347_854_845_137_453_8,
];

pub const DEFAULT_MAX_PANELS: usize = 128;

/// One complex value per cell of the `l × l` grid, `l = 1 / per_side`, with an
/// optional modulation `e(ξ_1 t + ξ_2 s)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFunction {
    per_side: usize,
    values: Vec<Complex64>,
    modulation: [f64; 2],
}

impl CellFunction {
    /// `values[i * per_side + j]` lives on `[i l, (i+1) l] × [j l, (j+1) l]`.
    pub fn new(per_side: usize, values: Vec<Complex64>) -> Result<Self> {
        if per_side == 0 || values.len() != per_side * per_side {
            return Err(Error::invalid(format!(
                "expected {} cell values, got {}",
                per_side * per_side,
                values.len()
            )));
        }
        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::invalid("cell values must be finite"));
        }
        Ok(Self {
            per_side,
            values,
            modulation: [0.0; 2],
        })
    }

    pub fn single_cell(per_side: usize, i: usize, j: usize, value: Complex64) -> Result<Self> {
        if i >= per_side || j >= per_side {
            return Err(Error::invalid(format!("cell ({i}, {j}) outside a {per_side}×{per_side} grid")));
        }
        let mut v = vec![Complex64::new(0.0, 0.0); per_side * per_side];
        v[i * per_side + j] = value;
        Self::new(per_side, v)
    }

    pub fn random_unimodular(per_side: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::new(per_side, (0..per_side * per_side).map(|_| e(rng.random::<f64>())).collect())
    }

    pub fn with_modulation(mut self, xi: [f64; 2]) -> Result<Self> {
        if xi.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("modulation must be finite"));
        }
        self.modulation = xi;
        Ok(self)
    }

    pub fn per_side(&self) -> usize {
        self.per_side
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn modulation(&self) -> [f64; 2] {
        self.modulation
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeOptions {
    /// Refuse samples needing more panels per cell side than this.
    pub max_panels: usize,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            max_panels: DEFAULT_MAX_PANELS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResult {
    pub ratio: f64,
    /// `(mean |E g|^p)^{1/p}`.
    pub lhs: f64,
    /// `(Σ_Δ mean |E_Δ g|^p)^{1/p}`.
    pub rhs: f64,
    /// `(#cells)^{1 − 1/p}`.
    pub trivial_bound: f64,
    pub cells: usize,
    pub max_panels_used: usize,
    pub samples: u64,
    pub seed: u64,
}

/// `N^{1/k}`, requiring `N` to be a perfect `k`-th power.
pub fn cells_per_side(k: u32, n: u64) -> Result<usize> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    let r = (n as f64).powf(1.0 / f64::from(k)).round() as u64;
    for c in r.saturating_sub(1)..=r + 1 {
        if c.checked_pow(k) == Some(n) {
            return Ok(c as usize);
        }
    }
    Err(Error::invalid(format!("N = {n} is not a perfect {k}-th power")))
}

fn gradient_constant(sys: &MonomialSystem) -> f64 {
    let (sa, sb) = sys.monomials().iter().fold((0.0, 0.0), |(sa, sb), &(a, b)| {
        (sa + f64::from(a * a), sb + f64::from(b * b))
    });
    f64::max(sa, sb).sqrt()
}

/// `I_Δ(x)` for every cell, and the panel count used.
fn cell_integrals(
    sys: &MonomialSystem,
    per_side: usize,
    xi: [f64; 2],
    x: &[f64],
    max_panels: usize,
) -> Result<(Vec<Complex64>, usize)> {
    let l = 1.0 / per_side as f64;
    let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let xinorm = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
    let demand = 4.0 * (xnorm * gradient_constant(sys) + xinorm) * l;
    // NaN demand is refused too.
    if demand.is_nan() || demand >= max_panels as f64 {
        return Err(Error::Quadrature(format!(
            "|x| = {xnorm:.3} needs more than {max_panels} panels per cell side"
        )));
    }
    let panels = demand.floor() as usize + 1;
    let h = l / panels as f64;

    // Quadrature abscissae along one axis, grouped by cell.
    let line: Vec<(f64, f64)> = (0..per_side * panels)
        .flat_map(|q| {
            let mid = (q as f64 + 0.5) * h;
            GL4_NODES
                .iter()
                .zip(GL4_WEIGHTS)
                .map(move |(u, w)| (mid + 0.5 * h * u, 0.5 * h * w))
        })
        .collect();
    let per_cell = panels * GL4_NODES.len();
    let k = sys.k() as usize;
    let powers = |v: f64| -> Vec<f64> {
        let mut p = vec![1.0; 2 * k + 1];
        for i in 1..p.len() {
            p[i] = p[i - 1] * v;
        }
        p
    };
    let s_pows: Vec<Vec<f64>> = line.iter().map(|&(s, _)| powers(s)).collect();
    let mons = sys.monomials();

    let mut out = vec![ComplexSum::new(); per_side * per_side];
    let mut coeff = vec![0.0; mons.len()];
    for (ti, &(t, wt)) in line.iter().enumerate() {
        let tp = powers(t);
        for (c, &(a, _)) in mons.iter().enumerate() {
            coeff[c] = x[c] * tp[a as usize];
        }
        let cell_i = ti / per_cell;
        for (si, &(s, ws)) in line.iter().enumerate() {
            let sp = &s_pows[si];
            let mut theta = xi[0] * t + xi[1] * s;
            for (c, &(_, b)) in mons.iter().enumerate() {
                theta += coeff[c] * sp[b as usize];
            }
            out[cell_i * per_side + si / per_cell].add(e(theta) * (wt * ws));
        }
    }
    Ok((out.iter().map(ComplexSum::value).collect(), panels))
}

/// Cell integrals at every sample point of `plan` on the ball of radius `N`.
struct Samples {
    per_side: usize,
    rows: Vec<Vec<Complex64>>,
    max_panels_used: usize,
}

fn sample_integrals(
    sys: &MonomialSystem,
    per_side: usize,
    xi: [f64; 2],
    n: u64,
    plan: &SamplePlan,
    opts: ProbeOptions,
) -> Result<Samples> {
    plan.validate(sys.n())?;
    if matches!(plan.domain, Domain::Torus) {
        return Err(Error::invalid("decoupling probe averages over a ball of radius N"));
    }
    let chunks = chunked(plan.samples, plan.seed, |rng, _, count| {
        (0..count)
            .map(|_| {
                let x = plan.draw(rng, sys.n(), n as f64);
                cell_integrals(sys, per_side, xi, &x, opts.max_panels)
            })
            .collect::<Result<Vec<_>>>()
    });
    let mut rows = Vec::with_capacity(plan.samples as usize);
    let mut max_panels_used = 0;
    for chunk in chunks {
        for (row, panels) in chunk? {
            rows.push(row);
            max_panels_used = max_panels_used.max(panels);
        }
    }
    Ok(Samples {
        per_side,
        rows,
        max_panels_used,
    })
}

impl Samples {
    fn evaluate(&self, g: &[Complex64], p: f64) -> (f64, f64) {
        let m = self.rows.len() as f64;
        let mut lhs = CompensatedSum::new();
        let mut cells = vec![CompensatedSum::new(); g.len()];
        for row in &self.rows {
            let mut total = ComplexSum::new();
            for (c, (gi, ii)) in g.iter().zip(row).enumerate() {
                let v = gi * ii;
                total.add(v);
                cells[c].add(v.norm().powf(p));
            }
            lhs.add(total.value().norm().powf(p));
        }
        let rhs: CompensatedSum = cells.iter().map(|c| c.value() / m).collect();
        ((lhs.value() / m).powf(1.0 / p), rhs.value().powf(1.0 / p))
    }

    fn result(&self, g: &[Complex64], p: f64, plan: &SamplePlan) -> ProbeResult {
        let (lhs, rhs) = self.evaluate(g, p);
        let cells = self.per_side * self.per_side;
        ProbeResult {
            ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 },
            lhs,
            rhs,
            trivial_bound: (cells as f64).powf(1.0 - 1.0 / p),
            cells,
            max_panels_used: self.max_panels_used,
            samples: plan.samples,
            seed: plan.seed,
        }
    }
}

fn check_probe(sys: &MonomialSystem, n: u64, p: f64, per_side: usize) -> Result<()> {
    if !(p.is_finite() && p >= 2.0) {
        return Err(Error::invalid(format!("p must be finite and at least 2, got {p}")));
    }
    let expected = cells_per_side(sys.k(), n)?;
    if per_side != expected {
        return Err(Error::invalid(format!(
            "g has {per_side} cells per side; N = {n} needs {expected}"
        )));
    }
    Ok(())
}

pub fn decoupling_probe(
    sys: &MonomialSystem,
    g: &CellFunction,
    n: u64,
    p: f64,
    plan: &SamplePlan,
) -> Result<ProbeResult> {
    decoupling_probe_with(sys, g, n, p, plan, ProbeOptions::default())
}

pub fn decoupling_probe_with(
    sys: &MonomialSystem,
    g: &CellFunction,
    n: u64,
    p: f64,
    plan: &SamplePlan,
    opts: ProbeOptions,
) -> Result<ProbeResult> {
    check_probe(sys, n, p, g.per_side)?;
    if g.values.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Err(Error::invalid("g must not vanish identically"));
    }
    let samples = sample_integrals(sys, g.per_side, g.modulation, n, plan, opts)?;
    Ok(samples.result(&g.values, p, plan))
}

/// Random-restart phase ascent over unimodular `g`, reusing one set of cell integrals.
///
/// Restart `r` draws from ChaCha stream `r` of `seed`.
pub fn decoupling_search(
    sys: &MonomialSystem,
    n: u64,
    p: f64,
    plan: &SamplePlan,
    restarts: usize,
    steps: usize,
    seed: u64,
) -> Result<(ProbeResult, CellFunction)> {
    let per_side = cells_per_side(sys.k(), n)?;
    check_probe(sys, n, p, per_side)?;
    if restarts == 0 {
        return Err(Error::invalid("restarts must be at least 1"));
    }
    let samples = sample_integrals(sys, per_side, [0.0; 2], n, plan, ProbeOptions::default())?;
    let cells = per_side * per_side;
    let ratio = |phases: &[f64]| {
        let g: Vec<Complex64> = phases.iter().map(|&t| e(t)).collect();
        let (l, r) = samples.evaluate(&g, p);
        l / r
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for r in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let mut phases: Vec<f64> = (0..cells).map(|_| rng.random::<f64>()).collect();
        let mut value = ratio(&phases);
        let mut width = 0.25;
        for _ in 0..steps {
            let c = rng.random_range(0..cells);
            let old = phases[c];
            phases[c] = old + width * (rng.random::<f64>() - 0.5);
            let v = ratio(&phases);
            if v > value {
                value = v;
                width = (width * 1.5).min(0.5);
            } else {
                phases[c] = old;
                width = (width * 0.9).max(1e-4);
            }
        }
        if best.as_ref().is_none_or(|b| value > b.0) {
            best = Some((value, phases));
        }
    }
    let (_, phases) = best.expect("at least one restart");
    let g = CellFunction::new(per_side, phases.iter().map(|&t| e(t)).collect())?;
    Ok((samples.result(&g.values, p, plan), g))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball(samples: u64, seed: u64, n: usize) -> SamplePlan {
        SamplePlan::ball(samples, seed, vec![0.0; n])
    }

    #[test]
    fn perfect_powers() {
        assert_eq!(cells_per_side(2, 16).unwrap(), 4);
        assert_eq!(cells_per_side(3, 27).unwrap(), 3);
        assert_eq!(cells_per_side(2, 1).unwrap(), 1);
        assert!(cells_per_side(2, 15).is_err());
        assert!(cells_per_side(3, 16).is_err());
    }

    #[test]
    fn quadrature_matches_high_resolution_midpoint_rule() {
        let sys = MonomialSystem::new(2).unwrap();
        let x = [3.0, -2.0, 5.0, 1.5, -4.0];
        let (fast, _) = cell_integrals(&sys, 2, [0.7, -0.2], &x, 128).unwrap();
        let m = 800;
        let h = 0.5 / m as f64;
        for (cell, &value) in fast.iter().enumerate() {
            let (i, j) = (cell / 2, cell % 2);
            let mut acc = ComplexSum::new();
            for a in 0..m {
                for b in 0..m {
                    let t = 0.5 * i as f64 + (a as f64 + 0.5) * h;
                    let s = 0.5 * j as f64 + (b as f64 + 0.5) * h;
                    let th = x[0] * t + x[1] * s + x[2] * t * t + x[3] * s * s + x[4] * t * s + 0.7 * t - 0.2 * s;
                    acc.add(e(th) * (h * h));
                }
            }
            assert!((acc.value() - value).norm() < 1e-5, "cell {cell}");
        }
    }

    #[test]
    fn single_cell_ratio_is_exactly_one() {
        for (k, n) in [(2u32, 16u64), (3, 8)] {
            let sys = MonomialSystem::new(k).unwrap();
            let per = cells_per_side(k, n).unwrap();
            let g = CellFunction::single_cell(per, per - 1, 0, Complex64::new(0.3, -2.0)).unwrap();
            let r = decoupling_probe(&sys, &g, n, 6.0, &ball(40, 1, sys.n())).unwrap();
            assert_eq!(r.ratio, 1.0);
        }
    }

    #[test]
    fn random_unimodular_l2_ratio_near_one() {
        let sys = MonomialSystem::new(2).unwrap();
        let g = CellFunction::random_unimodular(4, 3).unwrap();
        let r = decoupling_probe(&sys, &g, 16, 2.0, &ball(400, 2, 5)).unwrap();
        assert!((0.5..=2.0).contains(&r.ratio), "{r:?}");
    }

    #[test]
    fn trivial_bound_holds() {
        let sys = MonomialSystem::new(2).unwrap();
        for seed in 0..3 {
            let g = CellFunction::random_unimodular(2, seed).unwrap();
            for p in [2.0, 4.0, 8.0] {
                let r = decoupling_probe(&sys, &g, 4, p, &ball(100, seed, 5)).unwrap();
                assert!(r.ratio <= r.trivial_bound * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn modulation_matches_translated_ball() {
        let sys = MonomialSystem::new(2).unwrap();
        let xi = [1.25, -0.75];
        let g = CellFunction::random_unimodular(2, 5).unwrap();
        let modulated = g.clone().with_modulation(xi).unwrap();
        let center = vec![0.0; 5];
        let shifted = vec![xi[0], xi[1], 0.0, 0.0, 0.0];
        let a = decoupling_probe(&sys, &modulated, 4, 4.0, &SamplePlan::ball(200, 8, center)).unwrap();
        let b = decoupling_probe(&sys, &g, 4, 4.0, &SamplePlan::ball(200, 8, shifted)).unwrap();
        assert!((a.ratio - b.ratio).abs() < 1e-3, "{} vs {}", a.ratio, b.ratio);
    }

    #[test]
    fn refuses_underresolved_quadrature() {
        let sys = MonomialSystem::new(2).unwrap();
        let g = CellFunction::random_unimodular(4, 1).unwrap();
        let opts = ProbeOptions { max_panels: 4 };
        let err = decoupling_probe_with(&sys, &g, 16, 2.0, &ball(10, 1, 5), opts).unwrap_err();
        assert!(err.is_guard());
    }

    #[test]
    fn search_improves_on_its_start_and_respects_bound() {
        let sys = MonomialSystem::new(2).unwrap();
        let plan = ball(60, 3, 5);
        let (best, g) = decoupling_search(&sys, 4, 4.0, &plan, 3, 60, 9).unwrap();
        let again = decoupling_probe(&sys, &g, 4, 4.0, &plan).unwrap();
        assert!((again.ratio - best.ratio).abs() < 1e-12);
        assert!(best.ratio <= best.trivial_bound);
        let start = decoupling_probe(&sys, &CellFunction::random_unimodular(2, 0).unwrap(), 4, 4.0, &plan)
            .unwrap();
        assert!(best.ratio >= start.ratio.min(1.0));
    }

    #[test]
    fn validation() {
        let sys = MonomialSystem::new(2).unwrap();
        let g = CellFunction::random_unimodular(3, 1).unwrap();
        assert!(decoupling_probe(&sys, &g, 16, 2.0, &ball(10, 1, 5)).is_err());
        let g = CellFunction::random_unimodular(4, 1).unwrap();
        assert!(decoupling_probe(&sys, &g, 16, 1.0, &ball(10, 1, 5)).is_err());
        assert!(decoupling_probe(&sys, &g, 16, 2.0, &SamplePlan::torus(10, 1)).is_err());
    }
}
