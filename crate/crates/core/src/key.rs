//! Bit-packed moment keys.
//!
//! A moment sum `z` of `level` points is stored component by component as
//! `z_c - level * min_c`, where `min_c` is the smallest value of component `c`
//! over a single point. With that offset the packing is additive across levels:
//! `key_a(z) + key_b(w) = key_{a+b}(z + w)`, so the convolution engine can build
//! level `j + 1` keys with a single `u128` addition. The first component sits in
//! the highest bits, which makes numeric key order equal to lexicographic order
//! of the moment vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::{moment_of, Exponent, MomentVector, MonomialSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct PackedKey(pub u128);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyLayout {
    level: u32,
    max_level: u32,
    mins: Vec<i128>,
    spans: Vec<i128>,
    widths: Vec<u32>,
    shifts: Vec<u32>,
}

fn bit_length(v: u128) -> u32 {
    128 - v.leading_zeros()
}

impl KeyLayout {
    /// Layout for sums of up to `max_level` points drawn from the product set `xs × ys`.
    pub fn new(exponents: &[Exponent], xs: &[i64], ys: &[i64], max_level: u32) -> Result<Self> {
        if xs.is_empty() || ys.is_empty() {
            return Err(Error::invalid("empty point set"));
        }
        if max_level == 0 {
            return Err(Error::invalid("key level must be at least 1"));
        }
        let mut mins = Vec::with_capacity(exponents.len());
        let mut spans = Vec::with_capacity(exponents.len());
        let mut widths = Vec::with_capacity(exponents.len());
        for &(i, j) in exponents {
            let (xlo, xhi) = power_range(xs, i)?;
            let (ylo, yhi) = power_range(ys, j)?;
            let corners = [
                xlo.checked_mul(ylo),
                xlo.checked_mul(yhi),
                xhi.checked_mul(ylo),
                xhi.checked_mul(yhi),
            ];
            let corners: Vec<i128> = corners
                .into_iter()
                .collect::<Option<_>>()
                .ok_or_else(|| Error::Overflow("moment component range".into()))?;
            let lo = *corners.iter().min().unwrap();
            let hi = *corners.iter().max().unwrap();
            let span = hi - lo;
            let top = span
                .checked_mul(i128::from(max_level))
                .ok_or_else(|| Error::Overflow("moment component range".into()))?;
            mins.push(lo);
            spans.push(span);
            widths.push(bit_length(top as u128));
        }
        let total: u32 = widths.iter().sum();
        if total > 128 {
            return Err(Error::KeyBudget { needed: total });
        }
        let mut shifts = Vec::with_capacity(widths.len());
        let mut used = 0;
        for w in &widths {
            used += w;
            shifts.push(total - used);
        }
        Ok(Self {
            level: max_level,
            max_level,
            mins,
            spans,
            widths,
            shifts,
        })
    }

    /// Layout for `s`-fold sums of points in `[1, n]²`.
    pub fn for_box(sys: &MonomialSystem, s: u32, n: u32) -> Result<Self> {
        let side: Vec<i64> = (1..=i64::from(n)).collect();
        Self::new(sys.monomials(), &side, &side, s)
    }

    /// Same field layout, interpreting keys as sums of `level` points.
    pub fn at_level(&self, level: u32) -> Result<Self> {
        if level == 0 || level > self.max_level {
            return Err(Error::invalid(format!(
                "level {level} outside 1..={}",
                self.max_level
            )));
        }
        Ok(Self {
            level,
            ..self.clone()
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn widths(&self) -> &[u32] {
        &self.widths
    }

    pub fn total_bits(&self) -> u32 {
        self.widths.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.widths.len()
    }

    pub fn pack(&self, v: &MomentVector) -> Result<PackedKey> {
        if v.len() != self.dim() {
            return Err(Error::invalid(format!(
                "vector has {} components, layout expects {}",
                v.len(),
                self.dim()
            )));
        }
        let level = i128::from(self.level);
        let mut bits = 0u128;
        for (c, &z) in v.components().iter().enumerate() {
            let r = z
                .checked_sub(level * self.mins[c])
                .filter(|r| (0..=level * self.spans[c]).contains(r))
                .ok_or_else(|| {
                    Error::invalid(format!("component {c} = {z} outside the layout range"))
                })?;
            bits |= (r as u128) << self.shifts[c];
        }
        Ok(PackedKey(bits))
    }

    pub fn unpack(&self, key: PackedKey) -> MomentVector {
        let level = i128::from(self.level);
        MomentVector(
            (0..self.dim())
                .map(|c| self.field(key, c) as i128 + level * self.mins[c])
                .collect(),
        )
    }

    /// Raw offset value of component `c`; differences between keys of equal
    /// level equal differences of the underlying moment sums.
    #[inline]
    pub fn field(&self, key: PackedKey, c: usize) -> u128 {
        let w = self.widths[c];
        if w == 0 {
            0
        } else {
            (key.0 >> self.shifts[c]) & (u128::MAX >> (128 - w))
        }
    }

    /// Key of a single point at level one.
    pub(crate) fn point_key(&self, exponents: &[Exponent], x: i64, y: i64) -> Result<PackedKey> {
        self.at_level(1)?
            .pack(&MomentVector(moment_of(exponents, x, y)?))
    }
}

fn power_range(values: &[i64], e: u32) -> Result<(i128, i128)> {
    let mut lo = i128::MAX;
    let mut hi = i128::MIN;
    for &v in values {
        let p = i128::from(v)
            .checked_pow(e)
            .ok_or_else(|| Error::Overflow(format!("{v}^{e}")))?;
        lo = lo.min(p);
        hi = hi.max(p);
    }
    Ok((lo, hi))
}

pub fn pack_key(layout: &KeyLayout, v: &MomentVector) -> Result<PackedKey> {
    layout.pack(v)
}

pub fn unpack_key(layout: &KeyLayout, key: PackedKey) -> MomentVector {
    layout.unpack(key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::build_system;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn ceil_log2(v: u128) -> u32 {
        128 - (v - 1).leading_zeros()
    }

    #[test]
    fn round_trip_example() {
        let sys = build_system(2).unwrap();
        let layout = KeyLayout::for_box(&sys, 1, 3).unwrap();
        let v = sys.moment(2, 3).unwrap();
        let key = pack_key(&layout, &v).unwrap();
        assert_eq!(unpack_key(&layout, key).0, vec![2, 3, 4, 9, 6]);
    }

    #[test]
    fn budget_accepts_k3_s3_n32() {
        // Independent width rule: ceil(log2(s * N^d)) bits per degree-d component.
        let frozen: u32 = 2 * ceil_log2(3 * 32) + 3 * ceil_log2(3 * 32 * 32) + 4 * ceil_log2(3 * 32 * 32 * 32);
        assert_eq!(frozen, 118);
        let layout = KeyLayout::for_box(&build_system(3).unwrap(), 3, 32).unwrap();
        assert!(layout.total_bits() <= frozen);
    }

    #[test]
    fn budget_rejects_k3_s8_n2pow20() {
        let err = KeyLayout::for_box(&build_system(3).unwrap(), 8, 1 << 20).unwrap_err();
        assert!(matches!(err, Error::KeyBudget { .. }));
        assert!(err.is_guard());
    }

    #[test]
    fn out_of_range_component_rejected() {
        let sys = build_system(2).unwrap();
        let layout = KeyLayout::for_box(&sys, 2, 4).unwrap();
        assert!(layout.pack(&MomentVector(vec![1, 2, 2, 2, 2])).is_err());
        assert!(layout.pack(&MomentVector(vec![2, 2, 2, 2, 33])).is_err());
        assert!(layout.pack(&MomentVector(vec![2, 2, 2, 2])).is_err());
    }

    #[test]
    fn additive_across_levels() {
        let sys = build_system(3).unwrap();
        let layout = KeyLayout::for_box(&sys, 3, 7).unwrap();
        let a = &sys.moment(2, 5).unwrap() + &sys.moment(7, 1).unwrap();
        let b = sys.moment(3, 3).unwrap();
        let ka = layout.at_level(2).unwrap().pack(&a).unwrap();
        let kb = layout.at_level(1).unwrap().pack(&b).unwrap();
        let kc = layout.at_level(3).unwrap().pack(&(&a + &b)).unwrap();
        assert_eq!(PackedKey(ka.0 + kb.0), kc);
    }

    #[test]
    fn round_trips_random_admissible_vectors() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for (k, s, n) in [(2u32, 3u32, 48u32), (3, 2, 32), (2, 4, 14)] {
            let sys = build_system(k).unwrap();
            let layout = KeyLayout::for_box(&sys, s, n).unwrap();
            for _ in 0..100_000 / 3 {
                let mut z = MomentVector::zeros(sys.n());
                for _ in 0..s {
                    let p = sys
                        .moment(rng.random_range(1..=n as i64), rng.random_range(1..=n as i64))
                        .unwrap();
                    z = &z + &p;
                }
                let key = layout.pack(&z).unwrap();
                assert_eq!(layout.unpack(key), z);
            }
        }
    }

    proptest! {
        #[test]
        fn packing_is_monotone_in_lex_order(
            a in proptest::collection::vec((1i64..=20, 1i64..=20), 2),
            b in proptest::collection::vec((1i64..=20, 1i64..=20), 2),
        ) {
            let sys = build_system(2).unwrap();
            let layout = KeyLayout::for_box(&sys, 2, 20).unwrap();
            let sum = |pts: &[(i64, i64)]| pts.iter().fold(MomentVector::zeros(5), |acc, &(x, y)| &acc + &sys.moment(x, y).unwrap());
            let (za, zb) = (sum(&a), sum(&b));
            let (ka, kb) = (layout.pack(&za).unwrap(), layout.pack(&zb).unwrap());
            prop_assert_eq!(za.cmp(&zb), ka.cmp(&kb));
        }
    }
}
