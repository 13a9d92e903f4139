use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Samples per RNG substream; chunk `c` draws from ChaCha stream `c`.
pub const CHUNK: u64 = 1024;

/// Ball-weight exponent per ambient dimension, giving `(1 + |x − c|/R)^{−100n}`.
pub const WEIGHT_EXPONENT_PER_DIM: f64 = 100.0;

/// Weighted-ball samples are truncated at `|x − c| <= 4R`.
pub const WEIGHT_TRUNCATION: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    /// Uniform on `[0,1]^n`.
    Torus,
    /// Uniform on the ball of the operation's radius.
    Ball { center: Vec<f64> },
    /// Density proportional to `(1 + |x − c|/R)^{−exponent}`.
    WeightedBall { center: Vec<f64>, exponent: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub samples: u64,
    pub seed: u64,
    pub domain: Domain,
}

impl SamplePlan {
    pub fn torus(samples: u64, seed: u64) -> Self {
        Self {
            samples,
            seed,
            domain: Domain::Torus,
        }
    }

    pub fn ball(samples: u64, seed: u64, center: Vec<f64>) -> Self {
        Self {
            samples,
            seed,
            domain: Domain::Ball { center },
        }
    }

    /// The ball weight with exponent `100n`.
    pub fn weighted_ball(samples: u64, seed: u64, center: Vec<f64>) -> Self {
        let exponent = WEIGHT_EXPONENT_PER_DIM * center.len() as f64;
        Self {
            samples,
            seed,
            domain: Domain::WeightedBall { center, exponent },
        }
    }

    pub(crate) fn validate(&self, n: usize) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::invalid("sample count must be at least 1"));
        }
        match &self.domain {
            Domain::Torus => Ok(()),
            Domain::Ball { center } => check_center(center, n),
            Domain::WeightedBall { center, exponent } => {
                check_center(center, n)?;
                if !(exponent.is_finite() && *exponent > n as f64) {
                    return Err(Error::invalid(format!(
                        "weight exponent must exceed the dimension {n}, got {exponent}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// One point of the domain; `radius` is ignored on the torus.
    pub(crate) fn draw(&self, rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Vec<f64> {
        match &self.domain {
            Domain::Torus => (0..n).map(|_| rng.random::<f64>()).collect(),
            Domain::Ball { center } => {
                let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
                offset(center, &direction(rng, n), r)
            }
            Domain::WeightedBall { center, exponent } => {
                // |x − c| / R has the beta-prime law with parameters (n, exponent − n).
                let beta = Beta::new(n as f64, exponent - n as f64).expect("validated parameters");
                let u = loop {
                    let v: f64 = beta.sample(rng);
                    let u = v / (1.0 - v);
                    if u.is_finite() && u <= WEIGHT_TRUNCATION {
                        break u;
                    }
                };
                offset(center, &direction(rng, n), radius * u)
            }
        }
    }
}

fn check_center(center: &[f64], n: usize) -> Result<()> {
    if center.len() != n || center.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid(format!("ball center must be {n} finite reals")));
    }
    Ok(())
}

fn direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-300 {
            return g.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn offset(center: &[f64], dir: &[f64], r: f64) -> Vec<f64> {
    center.iter().zip(dir).map(|(c, d)| c + r * d).collect()
}

/// Runs `f(rng, first_index, count)` per chunk, in parallel, returning results in chunk order.
pub(crate) fn chunked<T: Send>(
    samples: u64,
    seed: u64,
    f: impl Fn(&mut ChaCha8Rng, u64, u64) -> T + Sync,
) -> Vec<T> {
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let first = c * CHUNK;
            f(&mut rng, first, CHUNK.min(samples - first))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_ball_stays_inside() {
        let plan = SamplePlan::ball(1, 0, vec![1.0, -2.0, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let x = plan.draw(&mut rng, 3, 2.0);
            let d: f64 = x.iter().zip([1.0, -2.0, 0.5]).map(|(a, b)| (a - b).powi(2)).sum();
            assert!(d.sqrt() <= 2.0 + 1e-12);
        }
    }

    #[test]
    fn uniform_ball_radial_law() {
        // P(|x| <= R/2) = 2^{-n}.
        let n = 5;
        let plan = SamplePlan::ball(1, 0, vec![0.0; n]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = 200_000;
        let inside = (0..m)
            .filter(|_| plan.draw(&mut rng, n, 1.0).iter().map(|x| x * x).sum::<f64>() <= 0.25)
            .count();
        let p = inside as f64 / m as f64;
        assert!((p - 1.0 / 32.0).abs() < 4.0 * (1.0f64 / 32.0 * 31.0 / 32.0 / m as f64).sqrt() + 1e-3);
    }

    #[test]
    fn weighted_ball_radial_mean() {
        // E[u] = n / (E − n − 1) for the beta-prime law; truncation at 4 is negligible here.
        let n = 2;
        let plan = SamplePlan {
            samples: 1,
            seed: 0,
            domain: Domain::WeightedBall {
                center: vec![0.0; n],
                exponent: 12.0,
            },
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = 200_000;
        let mean = (0..m)
            .map(|_| plan.draw(&mut rng, n, 1.0).iter().map(|x| x * x).sum::<f64>().sqrt())
            .sum::<f64>()
            / m as f64;
        assert!((mean - 2.0 / 9.0).abs() < 0.005, "mean = {mean}");
    }

    #[test]
    fn validation() {
        assert!(SamplePlan::torus(0, 1).validate(2).is_err());
        assert!(SamplePlan::ball(10, 1, vec![0.0]).validate(2).is_err());
        assert!(SamplePlan::weighted_ball(10, 1, vec![0.0; 5]).validate(5).is_ok());
        let bad = SamplePlan {
            samples: 10,
            seed: 0,
            domain: Domain::WeightedBall {
                center: vec![0.0; 3],
                exponent: 2.0,
            },
        };
        assert!(bad.validate(3).is_err());
    }

    #[test]
    fn chunks_are_ordered_and_sized() {
        let out = chunked(2500, 7, |_, first, count| (first, count));
        assert_eq!(out, vec![(0, 1024), (1024, 1024), (2048, 452)]);
    }
}
