//! `∫_{[0,1]^n} |Σ_{X,Y=1}^N e(α · φ(X, Y))|^{2s} dα`, whose exact value is the
//! solution count `J_{s,k,2}(N)` by orthogonality.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::sampling::{Domain, SamplePlan};
use super::sum::{ComplexSum, Moments};
use super::weyl::e;
use super::Estimate;
use crate::error::{Error, Result};
use crate::system::{moment_of, MonomialSystem};

/// Strata per side over `(α_1, α_2)`.
pub const MAX_STRATA_PER_SIDE: u64 = 16;

/// Stratified estimate: `G × G` equal cells in `(α_1, α_2)` with
/// `G = min(16, ⌊√(M/2)⌋)`, so every stratum holds at least two samples.
///
/// Stratum `h` draws from ChaCha stream `h`; the estimate is
/// `G^{−2} Σ_h mean_h` with variance `G^{−4} Σ_h s_h² / n_h`.
pub fn torus_mean_mc(sys: &MonomialSystem, s: u32, n: u32, plan: &SamplePlan) -> Result<Estimate> {
    if s == 0 || n == 0 {
        return Err(Error::invalid("s and N must be at least 1"));
    }
    plan.validate(sys.n())?;
    if plan.domain != Domain::Torus {
        return Err(Error::invalid("torus mean requires a torus sample plan"));
    }
    if plan.samples < 2 {
        return Err(Error::invalid("torus mean needs at least 2 samples"));
    }
    if n == 1 {
        // One term: the integrand is identically 1.
        return Ok(Estimate {
            estimate: 1.0,
            stderr: 0.0,
            samples: plan.samples,
            seed: plan.seed,
        });
    }
    let mut phi = Vec::new();
    for x in 1..=i64::from(n) {
        for y in 1..=i64::from(n) {
            for m in moment_of(sys.monomials(), x, y)? {
                if m.unsigned_abs() > 1 << 53 {
                    return Err(Error::Overflow(format!("monomial value {m} is not exact in f64")));
                }
                phi.push(m as f64);
            }
        }
    }
    let dim = sys.n();
    let g = MAX_STRATA_PER_SIDE.min(((plan.samples / 2) as f64).sqrt().floor() as u64).max(1);
    let strata = g * g;
    let per = plan.samples / strata;
    let extra = plan.samples % strata;

    let moments: Vec<Moments> = (0..strata)
        .into_par_iter()
        .map(|h| {
            let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
            rng.set_stream(h);
            let (a1, a2) = ((h / g) as f64, (h % g) as f64);
            let count = per + u64::from(h < extra);
            let mut alpha = vec![0.0; dim];
            let mut m = Moments::default();
            for _ in 0..count {
                alpha[0] = (a1 + rng.random::<f64>()) / g as f64;
                alpha[1] = (a2 + rng.random::<f64>()) / g as f64;
                for a in alpha.iter_mut().skip(2) {
                    *a = rng.random::<f64>();
                }
                let mut acc = ComplexSum::new();
                for row in phi.chunks_exact(dim) {
                    // Reduce each term mod 1 so large monomials keep full precision.
                    let theta = row
                        .iter()
                        .zip(&alpha)
                        .map(|(p, a)| {
                            let v = p * a;
                            v - v.floor()
                        })
                        .sum::<f64>();
                    acc.add(e(theta));
                }
                m.push(acc.value().norm_sqr().powi(s as i32));
            }
            m
        })
        .collect();

    let gg = strata as f64;
    let estimate = moments.iter().map(|m| m.mean).sum::<f64>() / gg;
    let var = moments
        .iter()
        .map(|m| m.variance() / m.n as f64)
        .sum::<f64>()
        / (gg * gg);
    Ok(Estimate {
        estimate,
        stderr: var.sqrt(),
        samples: plan.samples,
        seed: plan.seed,
    })
}
