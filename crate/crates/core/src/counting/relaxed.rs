//! Relaxed counts over real sites `i - 1 < X̃_i, Ỹ_i <= i`.
//!
//! The windows are closed: `|ΔΣX|, |ΔΣY| <= 1/N` and `|ΔΣX²|, |ΔΣY²|, |ΔΣXY| <= 1`.
//! Sites are binary fractions, so every sum is computed exactly on integers
//! scaled by `2^P`, with `P` the largest number of fractional bits among the
//! sites. The window tests then compare scaled integers with no tolerance.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{CountRecord, Method};
use crate::error::{Error, Result};

/// Most fractional bits a site may carry.
pub const MAX_FRACTION_BITS: u32 = 40;

/// Largest number of `s`-tuples enumerated per side.
pub const RELAXED_TUPLE_LIMIT: u128 = 50_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedSites {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl RelaxedSites {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.is_empty() {
            return Err(Error::invalid("S_X and S_Y must both have N >= 1 entries"));
        }
        for (name, sites) in [("S_X", &xs), ("S_Y", &ys)] {
            for (idx, &v) in sites.iter().enumerate() {
                let i = (idx + 1) as f64;
                if !(v > i - 1.0 && v <= i) {
                    return Err(Error::invalid(format!(
                        "{name}[{}] = {v} is outside ({}, {}]",
                        idx + 1,
                        i - 1.0,
                        i
                    )));
                }
            }
        }
        Ok(Self { xs, ys })
    }

    /// `S[i] = i`.
    pub fn integer(n: usize) -> Self {
        let sites: Vec<f64> = (1..=n).map(|i| i as f64).collect();
        Self {
            xs: sites.clone(),
            ys: sites,
        }
    }

    /// `S[i] = i - 1 + m / 2^bits` with `m` uniform in `1..=2^bits`.
    pub fn sample(n: usize, seed: u64, bits: u32) -> Result<Self> {
        if bits > 30 {
            return Err(Error::invalid("sampler supports at most 30 fractional bits"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = f64::from(1u32 << bits);
        let mut draw = |i: usize| (i - 1) as f64 + f64::from(rng.random_range(1..=(1u32 << bits))) / scale;
        let xs = (1..=n).map(&mut draw).collect();
        let ys = (1..=n).map(&mut draw).collect();
        Self::new(xs, ys)
    }

    pub fn n(&self) -> usize {
        self.xs.len()
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn swapped(&self) -> Self {
        Self {
            xs: self.ys.clone(),
            ys: self.xs.clone(),
        }
    }
}

fn fraction_bits(v: f64) -> u32 {
    if v == 0.0 {
        return 0;
    }
    let bits = v.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let mantissa = if exp == 0 {
        (bits & ((1 << 52) - 1)) << 1
    } else {
        (bits & ((1 << 52) - 1)) | (1 << 52)
    };
    let e = exp.max(1) - 1075;
    let tz = mantissa.trailing_zeros() as i32;
    (-(e + tz)).max(0) as u32
}

fn to_fixed(v: f64, p: u32) -> i128 {
    (v * (2f64).powi(p as i32)) as i128
}

/// Relaxed count with the default bucket width (one window per bucket).
pub fn relaxed_count(s: u32, sites: &RelaxedSites) -> Result<CountRecord> {
    let n = sites.n() as u32;
    CountRecord::timed(2, s, n, Method::Relaxed, None, || relaxed_count_with(s, sites, 1))
}

/// `bucket_scale` multiplies every bucket width; the result does not depend on it.
pub fn relaxed_count_with(s: u32, sites: &RelaxedSites, bucket_scale: u32) -> Result<u128> {
    if s == 0 || bucket_scale == 0 {
        return Err(Error::invalid("s and bucket scale must be at least 1"));
    }
    let n = sites.n();
    let p = sites
        .xs
        .iter()
        .chain(&sites.ys)
        .map(|&v| fraction_bits(v))
        .max()
        .unwrap_or(0);
    if p > MAX_FRACTION_BITS {
        return Err(Error::invalid(format!(
            "sites need {p} fractional bits; at most {MAX_FRACTION_BITS} are supported"
        )));
    }
    let n_bits = 128 - (n as u128).leading_zeros();
    let s_bits = 128 - u128::from(s).leading_zeros();
    if 2 * (p + n_bits) + s_bits + 2 > 126 {
        return Err(Error::invalid("scaled sums would overflow 128 bits"));
    }
    let tuples = (n as u128 * n as u128).checked_pow(s);
    if tuples.is_none_or(|t| t > RELAXED_TUPLE_LIMIT) {
        return Err(Error::MemoryBudget {
            estimated: tuples.unwrap_or(u128::MAX),
            budget: RELAXED_TUPLE_LIMIT,
        });
    }

    let xs: Vec<i128> = sites.xs.iter().map(|&v| to_fixed(v, p)).collect();
    let ys: Vec<i128> = sites.ys.iter().map(|&v| to_fixed(v, p)).collect();
    let points: Vec<[i128; 5]> = xs
        .iter()
        .flat_map(|&x| ys.iter().map(move |&y| [x, y, x * x, y * y, x * y]))
        .collect();

    let mut sums: Vec<[i128; 5]> = vec![[0; 5]];
    for _ in 0..s {
        sums = sums
            .iter()
            .flat_map(|a| points.iter().map(move |b| std::array::from_fn(|c| a[c] + b[c])))
            .collect();
    }
    sums.sort_unstable();
    let mut entries: Vec<([i128; 5], u128)> = Vec::new();
    for z in sums {
        match entries.last_mut() {
            Some(last) if last.0 == z => last.1 += 1,
            _ => entries.push((z, 1)),
        }
    }

    let one = 1i128 << p;
    let one_sq = 1i128 << (2 * p);
    let n_i = n as i128;
    let scale = i128::from(bucket_scale);
    let bucket_of = |z: &[i128; 5]| -> [i128; 5] {
        [
            (n_i * z[0]).div_euclid(one * scale),
            (n_i * z[1]).div_euclid(one * scale),
            z[2].div_euclid(one_sq * scale),
            z[3].div_euclid(one_sq * scale),
            z[4].div_euclid(one_sq * scale),
        ]
    };
    let within = |a: &[i128; 5], b: &[i128; 5]| {
        n_i * (a[0] - b[0]).abs() <= one
            && n_i * (a[1] - b[1]).abs() <= one
            && (a[2] - b[2]).abs() <= one_sq
            && (a[3] - b[3]).abs() <= one_sq
            && (a[4] - b[4]).abs() <= one_sq
    };

    let mut buckets: HashMap<[i128; 5], Vec<usize>> = HashMap::new();
    for (idx, (z, _)) in entries.iter().enumerate() {
        buckets.entry(bucket_of(z)).or_default().push(idx);
    }

    let total = entries
        .par_iter()
        .map(|(z, mult)| {
            let home = bucket_of(z);
            let mut acc = 0u128;
            for code in 0..243usize {
                let mut key = home;
                let mut c = code;
                for slot in key.iter_mut() {
                    *slot += (c % 3) as i128 - 1;
                    c /= 3;
                }
                if let Some(list) = buckets.get(&key) {
                    for &j in list {
                        let (w, m) = &entries[j];
                        if within(z, w) {
                            acc += mult * m;
                        }
                    }
                }
            }
            acc
        })
        .sum();
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct double loop over pairs of ordered `s`-tuples in floating point.
    /// Exact for the sampler's 16-bit binary fractions.
    fn oracle(s: u32, sites: &RelaxedSites) -> u128 {
        let n = sites.n() as f64;
        let pts: Vec<(f64, f64)> = sites
            .xs()
            .iter()
            .flat_map(|&x| sites.ys().iter().map(move |&y| (x, y)))
            .collect();
        let mut tuples: Vec<[f64; 5]> = vec![[0.0; 5]];
        for _ in 0..s {
            let mut next = Vec::new();
            for t in &tuples {
                for &(x, y) in &pts {
                    next.push([t[0] + x, t[1] + y, t[2] + x * x, t[3] + y * y, t[4] + x * y]);
                }
            }
            tuples = next;
        }
        let mut count = 0u128;
        for a in &tuples {
            for b in &tuples {
                if n * (a[0] - b[0]).abs() <= 1.0
                    && n * (a[1] - b[1]).abs() <= 1.0
                    && (a[2] - b[2]).abs() <= 1.0
                    && (a[3] - b[3]).abs() <= 1.0
                    && (a[4] - b[4]).abs() <= 1.0
                {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn fraction_bit_detection() {
        assert_eq!(fraction_bits(3.0), 0);
        assert_eq!(fraction_bits(2.5), 1);
        assert_eq!(fraction_bits(0.125), 3);
        assert_eq!(fraction_bits(1.0 + 1.0 / 65536.0), 16);
        assert!(fraction_bits(0.3) > MAX_FRACTION_BITS);
    }

    #[test]
    fn site_windows_are_validated() {
        assert!(RelaxedSites::new(vec![0.5, 2.0], vec![1.0, 1.5]).is_ok());
        assert!(RelaxedSites::new(vec![0.0, 2.0], vec![1.0, 2.0]).is_err());
        assert!(RelaxedSites::new(vec![1.0, 2.5], vec![1.0, 2.0]).is_err());
        assert!(RelaxedSites::new(vec![1.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn integer_sites_with_s1_give_n_squared() {
        for n in 2..=12 {
            let sites = RelaxedSites::integer(n);
            assert_eq!(relaxed_count_with(1, &sites, 1).unwrap(), (n * n) as u128);
            assert_eq!(oracle(1, &sites), (n * n) as u128);
        }
    }

    #[test]
    fn non_dyadic_sites_are_rejected() {
        let sites = RelaxedSites::new(vec![0.3, 1.7], vec![1.0, 2.0]).unwrap();
        assert!(relaxed_count_with(1, &sites, 1).is_err());
    }

    #[test]
    fn sampled_sites_match_double_loop_oracle() {
        let sites = RelaxedSites::sample(10, 42, 16).unwrap();
        let fast = relaxed_count_with(2, &sites, 1).unwrap();
        assert_eq!(fast, oracle(2, &sites));
    }

    #[test]
    fn independent_of_bucketing_and_at_least_exact_pairs() {
        for seed in 0..4 {
            let sites = RelaxedSites::sample(6, seed, 12).unwrap();
            let base = relaxed_count_with(2, &sites, 1).unwrap();
            for scale in [2, 3, 7] {
                assert_eq!(relaxed_count_with(2, &sites, scale).unwrap(), base);
            }
            // Exactly equal tuples: permutations of the same pair of points.
            let p = 36u128;
            assert!(base >= 2 * p * p - p);
        }
    }

    #[test]
    fn swap_invariance() {
        let sites = RelaxedSites::sample(7, 9, 10).unwrap();
        assert_eq!(
            relaxed_count_with(2, &sites, 1).unwrap(),
            relaxed_count_with(2, &sites.swapped(), 1).unwrap()
        );
    }
}
