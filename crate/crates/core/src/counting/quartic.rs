//! The perturbed quartic system: four points per side with
//! `ΣX, ΣY` balanced exactly and `|ΔΣX⁴|, |ΔΣY⁴|, |ΔΣX²Y²| <= c·N²`.

use std::collections::HashMap;

use super::engine::{count_with, layout_for};
use super::{CountOptions, CountRecord, Method, PointSet};
use crate::error::{Error, Result};
use crate::key::PackedKey;
use crate::system::Exponent;

pub const QUARTIC_EXPONENTS: [Exponent; 5] = [(1, 0), (0, 1), (4, 0), (0, 4), (2, 2)];

/// Default cap on `N` (the stored table holds up to `C((N+1)² + 2, 3)` entries).
pub const QUARTIC_MAX_N: u32 = 12;

/// Count for variables in `[N, 2N]`.
pub fn quartic_count(n: u32, window_c: f64) -> Result<CountRecord> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    if n > QUARTIC_MAX_N {
        return Err(Error::MemoryBudget {
            estimated: u128::from(n + 1).pow(8),
            budget: u128::from(QUARTIC_MAX_N + 1).pow(8),
        });
    }
    let points = PointSet::interval(i64::from(n), 2 * i64::from(n));
    CountRecord::timed(4, 4, n, Method::Quartic, None, || {
        quartic_count_points(&points, window(n, window_c)?, CountOptions::default())
    })
}

/// Integer window `floor(c·N²)`; the window is closed.
fn window(n: u32, c: f64) -> Result<i128> {
    if !(c.is_finite() && c >= 0.0) {
        return Err(Error::invalid("window constant must be finite and nonnegative"));
    }
    Ok((c * f64::from(n) * f64::from(n)).floor() as i128)
}

/// Count over an arbitrary product point set with an explicit integer window.
pub fn quartic_count_points(points: &PointSet, window: i128, opts: CountOptions) -> Result<u128> {
    let layout = layout_for(&QUARTIC_EXPONENTS, points, 4)?;
    count_with(&QUARTIC_EXPONENTS, points, 4, opts, |part| {
        window_join(part, window, |key| {
            [2, 3, 4].map(|c| layout.field(key, c) as i128)
        })
    })
}

/// Ordered pairs within one partition whose three decoded components all lie
/// within `window` of each other, weighted by multiplicity.
fn window_join(part: &[(PackedKey, u128)], window: i128, decode: impl Fn(PackedKey) -> [i128; 3]) -> u128 {
    let width = window + 1;
    let decoded: Vec<([i128; 3], u128)> = part.iter().map(|&(k, m)| (decode(k), m)).collect();
    let mut buckets: HashMap<[i128; 3], Vec<usize>> = HashMap::new();
    for (idx, (z, _)) in decoded.iter().enumerate() {
        buckets.entry(z.map(|v| v.div_euclid(width))).or_default().push(idx);
    }
    let mut total = 0u128;
    for (z, m) in &decoded {
        let home = z.map(|v| v.div_euclid(width));
        for code in 0..27usize {
            let key = [
                home[0] + (code % 3) as i128 - 1,
                home[1] + (code / 3 % 3) as i128 - 1,
                home[2] + (code / 9) as i128 - 1,
            ];
            if let Some(list) = buckets.get(&key) {
                for &j in list {
                    let (w, mw) = &decoded[j];
                    if (0..3).all(|c| (z[c] - w[c]).abs() <= window) {
                        total += m * mw;
                    }
                }
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::moment_of;

    /// Enumerates every pair of 4-point tuples directly.
    fn oracle(points: &PointSet, window: i128) -> u128 {
        let single: Vec<Vec<i128>> = points
            .points()
            .map(|(x, y)| moment_of(&QUARTIC_EXPONENTS, x, y).unwrap())
            .collect();
        let mut halves: Vec<Vec<i128>> = vec![vec![0; 5]];
        for _ in 0..4 {
            halves = halves
                .iter()
                .flat_map(|h| single.iter().map(move |m| h.iter().zip(m).map(|(a, b)| a + b).collect()))
                .collect();
        }
        let mut count = 0u128;
        for a in &halves {
            for b in &halves {
                if a[0] == b[0]
                    && a[1] == b[1]
                    && (2..5).all(|c| (a[c] - b[c]).abs() <= window)
                {
                    count += 1;
                }
            }
        }
        count
    }

    fn falling(m: u128, s: u128) -> u128 {
        (0..s).map(|i| m - i).product()
    }

    #[test]
    fn n2_matches_enumeration() {
        let points = PointSet::interval(2, 4);
        let w = window(2, 1.0).unwrap();
        assert_eq!(w, 4);
        let fast = quartic_count(2, 1.0).unwrap().count;
        assert_eq!(fast, oracle(&points, w));
    }

    #[test]
    fn small_rectangles_match_enumeration() {
        let points = PointSet::new(vec![3, 4, 6], vec![2, 5]).unwrap();
        for w in [0, 3, 40] {
            assert_eq!(
                quartic_count_points(&points, w, CountOptions::default()).unwrap(),
                oracle(&points, w)
            );
        }
    }

    #[test]
    fn permutation_lower_bound() {
        for n in 1..=4u32 {
            let count = quartic_count(n, 1.0).unwrap().count;
            let m = u128::from(n + 1).pow(2);
            assert!(count >= 24 * falling(m, 4), "n = {n}");
        }
    }

    #[test]
    fn swap_invariance() {
        let points = PointSet::new(vec![4, 5, 7, 8], vec![3, 6, 7]).unwrap();
        let a = quartic_count_points(&points, 30, CountOptions::default()).unwrap();
        let b = quartic_count_points(&points.swapped(), 30, CountOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn guard_and_validation() {
        assert!(quartic_count(QUARTIC_MAX_N + 1, 1.0).unwrap_err().is_guard());
        assert!(quartic_count(3, -1.0).is_err());
        assert!(quartic_count(3, f64::NAN).is_err());
    }
}
