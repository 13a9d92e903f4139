use super::PointSet;
use crate::error::{Error, Result};
use crate::system::{moment_of, Exponent, MonomialSystem};

/// Largest number of `2s`-tuples the enumeration oracle will visit.
pub const ORACLE_LIMIT: u128 = 10_000_000_000;

/// Exact count by direct enumeration over `[1, N]`.
///
/// Every `s`-tuple's moment sum is materialized and every ordered pair of
/// tuples is compared component by component. No keys, sorting or hashing.
pub fn brute_force_count(k: u32, s: u32, n: u32) -> Result<u128> {
    let sys = MonomialSystem::new(k)?;
    brute_force_count_points(sys.monomials(), &PointSet::square(n), s)
}

pub fn brute_force_count_points(exponents: &[Exponent], points: &PointSet, s: u32) -> Result<u128> {
    if s == 0 {
        return Err(Error::invalid("s must be at least 1"));
    }
    let p = points.len() as u128;
    let tuples = p
        .checked_pow(2 * s)
        .filter(|&t| t <= ORACLE_LIMIT)
        .ok_or(Error::OracleScale {
            tuples: p.checked_pow(2 * s).unwrap_or(u128::MAX),
            limit: ORACLE_LIMIT,
        })?;
    debug_assert!(tuples <= ORACLE_LIMIT);

    let single: Vec<Vec<i128>> = points
        .points()
        .map(|(x, y)| moment_of(exponents, x, y))
        .collect::<Result<_>>()?;

    let mut halves: Vec<Vec<i128>> = vec![vec![0; exponents.len()]];
    for _ in 0..s {
        let mut next = Vec::with_capacity(halves.len() * single.len());
        for h in &halves {
            for m in &single {
                next.push(h.iter().zip(m).map(|(a, b)| a + b).collect());
            }
        }
        halves = next;
    }

    let mut count = 0u128;
    for a in &halves {
        for b in &halves {
            if a == b {
                count += 1;
            }
        }
    }
    Ok(count)
}
