//! Solution counting for Parsell–Vinogradov systems.
//!
//! `J_{s,k,2}(N)` counts pairs of `s`-tuples of points in `[1, N]²` whose moment
//! sums agree in every monomial of degree `<= k`. The exact engine computes the
//! representation function `r_s` (how many `s`-tuples land on each moment sum)
//! by repeated convolution with the single-point table and returns `Σ r_s(z)²`.
//! [`brute_force_count`] is the independent enumeration oracle for small cases.

mod brute;
mod engine;
mod fit;
mod quartic;
mod relaxed;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use brute::{brute_force_count, brute_force_count_points, ORACLE_LIMIT};
pub use engine::{build_rep_table, count_exact, mitm_count, mitm_count_with, CountOptions, RepTable};
pub use fit::{exponent_fit, ExponentFit};
pub use quartic::{quartic_count, quartic_count_points, QUARTIC_EXPONENTS};
pub use relaxed::{relaxed_count, relaxed_count_with, RelaxedSites};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Brute,
    Mitm,
    Relaxed,
    Quartic,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Brute => "brute",
            Method::Mitm => "mitm",
            Method::Relaxed => "relaxed",
            Method::Quartic => "quartic",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brute" => Ok(Method::Brute),
            "mitm" => Ok(Method::Mitm),
            "relaxed" => Ok(Method::Relaxed),
            "quartic" => Ok(Method::Quartic),
            other => Err(Error::invalid(format!("unknown method '{other}'"))),
        }
    }
}

/// One counting result, as persisted by the command-line driver.
#[derive(Debug, Clone, PartialEq)]
pub struct CountRecord {
    pub k: u32,
    pub s: u32,
    pub n: u32,
    pub method: Method,
    pub count: u128,
    pub seconds: f64,
    pub threads: usize,
    pub seed: Option<u64>,
}

impl CountRecord {
    pub(crate) fn timed(
        k: u32,
        s: u32,
        n: u32,
        method: Method,
        seed: Option<u64>,
        f: impl FnOnce() -> Result<u128>,
    ) -> Result<Self> {
        let start = Instant::now();
        let count = f()?;
        Ok(Self {
            k,
            s,
            n,
            method,
            count,
            seconds: start.elapsed().as_secs_f64(),
            threads: rayon::current_num_threads(),
            seed,
        })
    }
}

/// Product set `xs × ys` of integer points. Coordinates within each axis are distinct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSet {
    xs: Vec<i64>,
    ys: Vec<i64>,
}

impl PointSet {
    pub fn new(xs: Vec<i64>, ys: Vec<i64>) -> Result<Self> {
        if xs.is_empty() || ys.is_empty() {
            return Err(Error::invalid("point set axes must be nonempty"));
        }
        for axis in [&xs, &ys] {
            let mut sorted = axis.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != axis.len() {
                return Err(Error::invalid("point set coordinates must be distinct"));
            }
        }
        Ok(Self { xs, ys })
    }

    /// `[1, n]²`.
    pub fn square(n: u32) -> Self {
        Self::interval(1, i64::from(n))
    }

    /// `[lo, hi]²`.
    pub fn interval(lo: i64, hi: i64) -> Self {
        let side: Vec<i64> = (lo..=hi).collect();
        Self {
            xs: side.clone(),
            ys: side,
        }
    }

    pub fn xs(&self) -> &[i64] {
        &self.xs
    }

    pub fn ys(&self) -> &[i64] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.xs
            .iter()
            .flat_map(move |&x| self.ys.iter().map(move |&y| (x, y)))
    }

    /// Applies coordinate maps axis by axis.
    pub fn map(&self, fx: impl Fn(i64) -> i64, fy: impl Fn(i64) -> i64) -> Result<Self> {
        Self::new(
            self.xs.iter().map(|&x| fx(x)).collect(),
            self.ys.iter().map(|&y| fy(y)).collect(),
        )
    }

    pub fn swapped(&self) -> Self {
        Self {
            xs: self.ys.clone(),
            ys: self.xs.clone(),
        }
    }
}

pub(crate) fn check_supported(exponents: &[(u32, u32)]) -> Result<()> {
    if exponents.len() < 2 || exponents[0] != (1, 0) || exponents[1] != (0, 1) {
        return Err(Error::invalid(
            "exponent list must start with the linear monomials (1,0), (0,1)",
        ));
    }
    Ok(())
}
