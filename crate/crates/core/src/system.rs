//! Monomial systems `(t, s, Ψ(t, s))` and their integer moment maps.

use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent pair `(i, j)` standing for the monomial `t^i s^j` (or `X^i Y^j`).
pub type Exponent = (u32, u32);

/// The ordered list of monomials `t^i s^j` with `1 <= i + j <= k`.
///
/// Within each total degree `d` the order is `(d,0), (0,d), (d-1,1), …, (1,d-1)`,
/// which for `k = 2, 3` is the argument order `t, s, t², s², ts, t³, s³, t²s, ts²`
/// used by every serialized vector in this crate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialSystem {
    k: u32,
    monomials: Vec<Exponent>,
    n: usize,
    gamma: u32,
}

impl MonomialSystem {
    /// Systems supported by the counting engine: `k ∈ {2, 3}`.
    pub fn new(k: u32) -> Result<Self> {
        if !(2..=3).contains(&k) {
            return Err(Error::UnsupportedDegree(k));
        }
        Ok(Self::with_degree(k))
    }

    /// Any `k` in `2..=6`, for the exploratory transversality paths.
    ///
    /// Degrees up to three keep the canonical order; from degree four on,
    /// monomials of equal degree are ordered by decreasing power of `t`. That
    /// tail order is a convention only.
    pub fn exploratory(k: u32) -> Result<Self> {
        if !(2..=6).contains(&k) {
            return Err(Error::UnsupportedDegree(k));
        }
        Ok(Self::with_degree(k))
    }

    fn with_degree(k: u32) -> Self {
        let mut monomials = Vec::new();
        for d in 1..=k {
            if d <= 3 {
                monomials.push((d, 0));
                monomials.push((0, d));
                monomials.extend((1..d).rev().map(|i| (i, d - i)));
            } else {
                monomials.extend((0..=d).rev().map(|i| (i, d - i)));
            }
        }
        let n = monomials.len();
        let gamma = monomials.iter().map(|&(i, j)| i + j).sum();
        Self {
            k,
            monomials,
            n,
            gamma,
        }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn monomials(&self) -> &[Exponent] {
        &self.monomials
    }

    /// Ambient dimension `k(k+3)/2`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Sum of the degrees of all monomials, `k(k+1)(k+2)/3`.
    pub fn gamma(&self) -> u32 {
        self.gamma
    }

    pub fn moment(&self, x: i64, y: i64) -> Result<MomentVector> {
        moment_of(&self.monomials, x, y).map(MomentVector)
    }

    /// Conjectured growth exponent `max(2s, 4s - Γ(k))` of the solution count.
    pub fn predicted_exponent(&self, s: u32) -> i64 {
        let s = i64::from(s);
        (2 * s).max(4 * s - i64::from(self.gamma))
    }
}

pub fn build_system(k: u32) -> Result<MonomialSystem> {
    MonomialSystem::new(k)
}

pub fn moment_map(sys: &MonomialSystem, x: i64, y: i64) -> Result<MomentVector> {
    sys.moment(x, y)
}

pub fn predicted_exponent(sys: &MonomialSystem, s: u32) -> Result<i64> {
    if s == 0 {
        return Err(Error::invalid("s must be at least 1"));
    }
    Ok(sys.predicted_exponent(s))
}

pub(crate) fn moment_of(exponents: &[Exponent], x: i64, y: i64) -> Result<Vec<i128>> {
    exponents
        .iter()
        .map(|&(i, j)| {
            let xi = i128::from(x).checked_pow(i);
            let yj = i128::from(y).checked_pow(j);
            xi.zip(yj)
                .and_then(|(a, b)| a.checked_mul(b))
                .ok_or_else(|| Error::Overflow(format!("{x}^{i} * {y}^{j}")))
        })
        .collect()
}

/// Integer vector in `Z^n`, indexed in the system's monomial order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MomentVector(pub Vec<i128>);

impl MomentVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn components(&self) -> &[i128] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn checked_add(&self, other: &Self) -> Option<Self> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_add(*b))
            .collect::<Option<Vec<_>>>()
            .map(Self)
    }
}

impl Add for &MomentVector {
    type Output = MomentVector;

    fn add(self, rhs: Self) -> MomentVector {
        MomentVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &MomentVector {
    type Output = MomentVector;

    fn sub(self, rhs: Self) -> MomentVector {
        MomentVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}
