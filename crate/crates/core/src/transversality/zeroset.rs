use super::poly::BivariatePolynomial;
use crate::error::{Error, Result};

/// Distance threshold, in units of the square side.
pub const NEIGHBOURHOOD: i64 = 10;

/// Subcells per side used to localize the zero set inside each square.
pub const DEFAULT_REFINE: usize = 4;

/// Squares of the `K × K` dyadic grid within distance `10/K` of `{Q = 0} ∩ [0,1]²`.
///
/// Never undercounts: a subcell is kept unless `|Q|` at its nearest corner
/// exceeds `L·h/√2`, which rules out a zero inside it.
pub fn zero_set_square_count(q: &BivariatePolynomial, k: u32) -> Result<usize> {
    zero_set_square_count_with(q, k, DEFAULT_REFINE)
}

pub fn zero_set_square_count_with(q: &BivariatePolynomial, k: u32, refine: usize) -> Result<usize> {
    if k == 0 || !k.is_power_of_two() {
        return Err(Error::invalid(format!("K must be a power of two, got {k}")));
    }
    if q.is_zero() {
        return Err(Error::invalid("the zero polynomial has no proper zero set"));
    }
    if refine == 0 {
        return Err(Error::invalid("refine must be at least 1"));
    }
    let k = k as usize;
    let cells = k * refine;
    let h = 1.0 / cells as f64;
    let values: Vec<f64> = (0..=cells)
        .flat_map(|a| (0..=cells).map(move |b| (a, b)))
        .map(|(a, b)| q.eval(a as f64 * h, b as f64 * h))
        .collect();
    let at = |a: usize, b: usize| values[a * (cells + 1) + b];
    let margin = q.lipschitz() * h / std::f64::consts::SQRT_2;

    let mut hit = vec![false; k * k];
    for a in 0..cells {
        for b in 0..cells {
            let c = [at(a, b), at(a + 1, b), at(a, b + 1), at(a + 1, b + 1)];
            let sign_change = c.iter().any(|&v| v <= 0.0) && c.iter().any(|&v| v >= 0.0);
            let near = c.iter().any(|v| v.abs() <= margin);
            if sign_change || near {
                hit[(a / refine) * k + b / refine] = true;
            }
        }
    }

    let reach = NEIGHBOURHOOD + 1;
    let mut marked = vec![false; k * k];
    for (idx, _) in hit.iter().enumerate().filter(|(_, &h)| h) {
        let (i, j) = ((idx / k) as i64, (idx % k) as i64);
        for di in -reach..=reach {
            for dj in -reach..=reach {
                let (x, y) = (i + di, j + dj);
                if x < 0 || y < 0 || x >= k as i64 || y >= k as i64 {
                    continue;
                }
                let gx = (di.abs() - 1).max(0);
                let gy = (dj.abs() - 1).max(0);
                if gx * gx + gy * gy <= NEIGHBOURHOOD * NEIGHBOURHOOD {
                    marked[x as usize * k + y as usize] = true;
                }
            }
        }
    }
    Ok(marked.into_iter().filter(|&m| m).count())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(terms: &[((usize, usize), f64)]) -> BivariatePolynomial {
        BivariatePolynomial::from_terms(2, terms).unwrap()
    }

    /// Squares whose centre lies within `r/K` of a densely sampled zero curve.
    fn centre_oracle(k: usize, r: f64, curve: &[(f64, f64)]) -> usize {
        let mut count = 0;
        for i in 0..k {
            for j in 0..k {
                let (cx, cy) = ((i as f64 + 0.5) / k as f64, (j as f64 + 0.5) / k as f64);
                if curve
                    .iter()
                    .any(|&(x, y)| ((x - cx).powi(2) + (y - cy).powi(2)).sqrt() <= r / k as f64)
                {
                    count += 1;
                }
            }
        }
        count
    }

    fn sample(f: impl Fn(f64) -> (f64, f64)) -> Vec<(f64, f64)> {
        (0..=4000).map(|i| f(i as f64 / 4000.0)).collect()
    }

    #[test]
    fn constant_has_no_squares() {
        assert_eq!(zero_set_square_count(&BivariatePolynomial::constant(1.0), 16).unwrap(), 0);
    }

    #[test]
    fn diagonal_is_bracketed_by_grid_oracle() {
        let q = poly(&[((1, 0), 1.0), ((0, 1), -1.0)]);
        let curve = sample(|u| (u, u));
        for k in [8usize, 16, 32, 64] {
            let c = zero_set_square_count(&q, k as u32).unwrap();
            assert!(c >= centre_oracle(k, 10.0, &curve), "k = {k}");
            assert!(c <= centre_oracle(k, 14.0, &curve), "k = {k}");
            assert!(c as f64 / k as f64 <= 40.0);
        }
    }

    #[test]
    fn vertical_line() {
        let q = poly(&[((1, 0), 1.0), ((0, 0), -0.5)]);
        let c = zero_set_square_count(&q, 16).unwrap();
        assert!((16..=25 * 16).contains(&c), "count = {c}");
        assert!(c >= centre_oracle(16, 10.0, &sample(|u| (0.5, u))));
    }

    #[test]
    fn hyperbola_and_parabola_ratios_stay_bounded() {
        let polys = [
            poly(&[((1, 1), 1.0), ((0, 0), -0.25)]),
            poly(&[((2, 0), 1.0), ((0, 1), -1.0)]),
        ];
        for q in &polys {
            for k in [8u32, 16, 32, 64] {
                let c = zero_set_square_count(q, k).unwrap();
                assert!(c > 0 && c as f64 / f64::from(k) <= 40.0);
            }
        }
    }

    #[test]
    fn validation() {
        let q = poly(&[((1, 0), 1.0)]);
        assert!(zero_set_square_count(&q, 12).is_err());
        assert!(zero_set_square_count(&q, 0).is_err());
        assert!(zero_set_square_count(&BivariatePolynomial::zero(2), 8).is_err());
    }
}
