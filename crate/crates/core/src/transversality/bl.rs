use nalgebra::DMatrix;
use num_traits::ToPrimitive;
use serde::Serialize;

use super::exact::{rank, rational, Rational};
use super::frame::tangent_frame;
use crate::error::{Error, Result};
use crate::system::MonomialSystem;

/// Singular values at or below this count as zero.
pub const RANK_TOLERANCE: f64 = 1e-9;

/// Row basis of a subspace of `R^n`; an empty row list is `{0}`.
#[derive(Debug, Clone, PartialEq)]
pub enum SubspaceBasis {
    Exact { n: usize, rows: Vec<Vec<Rational>> },
    Real { n: usize, rows: Vec<Vec<f64>> },
}

impl SubspaceBasis {
    pub fn exact(n: usize, rows: Vec<Vec<Rational>>) -> Result<Self> {
        check_lengths(n, rows.iter().map(Vec::len))?;
        if rank(&rows) != rows.len() {
            return Err(Error::invalid("basis rows are linearly dependent"));
        }
        Ok(Self::Exact { n, rows })
    }

    pub fn from_integers(n: usize, rows: &[Vec<i64>]) -> Result<Self> {
        Self::exact(
            n,
            rows.iter().map(|r| r.iter().map(|&x| rational(x)).collect()).collect(),
        )
    }

    pub fn real(n: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        check_lengths(n, rows.iter().map(Vec::len))?;
        if rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::invalid("basis entries must be finite"));
        }
        if real_rank(&rows, n) != rows.len() {
            return Err(Error::invalid("basis rows are linearly dependent"));
        }
        Ok(Self::Real { n, rows })
    }

    pub fn zero(n: usize) -> Self {
        Self::Exact { n, rows: Vec::new() }
    }

    pub fn whole(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| rational(i64::from(i == j))).collect())
            .collect();
        Self::Exact { n, rows }
    }

    /// `span{n1(t,s), n2(t,s)}`.
    pub fn tangent_plane(sys: &MonomialSystem, t: f64, s: f64) -> Result<Self> {
        let f = tangent_frame(sys, t, s);
        Self::real(sys.n(), vec![f.n1, f.n2])
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Exact { rows, .. } => rows.len(),
            Self::Real { rows, .. } => rows.len(),
        }
    }

    pub fn ambient(&self) -> usize {
        match self {
            Self::Exact { n, .. } | Self::Real { n, .. } => *n,
        }
    }

    pub fn to_real(&self) -> Vec<Vec<f64>> {
        match self {
            Self::Exact { rows, .. } => rows
                .iter()
                .map(|r| r.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect())
                .collect(),
            Self::Real { rows, .. } => rows.clone(),
        }
    }
}

fn check_lengths(n: usize, lens: impl Iterator<Item = usize>) -> Result<()> {
    for l in lens {
        if l != n {
            return Err(Error::invalid(format!("basis rows must have length {n}, got {l}")));
        }
    }
    Ok(())
}

fn real_rank(rows: &[Vec<f64>], n: usize) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    let sv = m.singular_values();
    let scale = sv.max().max(1.0);
    sv.iter().filter(|&&x| x > RANK_TOLERANCE * scale).count()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlCheck {
    pub holds: bool,
    /// `dim V`.
    pub lhs: f64,
    /// `(n / 2m) Σ_j dim π_j(V)`.
    pub rhs: f64,
    pub projection_dims: Vec<usize>,
    pub exact: bool,
}

/// `dim π_j(V) = rank(U_j Bᵀ)` for a row basis `U_j` of plane `j`.
fn projection_dim(plane: &SubspaceBasis, v: &SubspaceBasis) -> usize {
    match (plane, v) {
        (SubspaceBasis::Exact { rows: u, .. }, SubspaceBasis::Exact { rows: b, .. }) => {
            let m: Vec<Vec<Rational>> = u
                .iter()
                .map(|ur| b.iter().map(|br| ur.iter().zip(br).map(|(x, y)| x * y).sum()).collect())
                .collect();
            rank(&m)
        }
        _ => {
            if v.dim() == 0 {
                return 0;
            }
            let mut u = plane.to_real();
            let mut b = v.to_real();
            orthonormal(&mut u);
            orthonormal(&mut b);
            let m: Vec<Vec<f64>> = u
                .iter()
                .map(|ur| b.iter().map(|br| ur.iter().zip(br).map(|(x, y)| x * y).sum()).collect())
                .collect();
            real_rank(&m, b.len())
        }
    }
}

fn orthonormal(rows: &mut [Vec<f64>]) {
    for i in 0..rows.len() {
        for j in 0..i {
            let p: f64 = rows[i].iter().zip(&rows[j]).map(|(x, y)| x * y).sum();
            let (head, tail) = rows.split_at_mut(i);
            for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                *x -= p * y;
            }
        }
        let norm = rows[i].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            rows[i].iter_mut().for_each(|x| *x /= norm);
        }
    }
}

/// Tests `dim V <= (n / 2m) Σ_j dim π_j(V)` over `m` planes, in integers as
/// `2m · dim V <= n · Σ_j dim π_j(V)`.
pub fn bl_dimension_check(planes: &[SubspaceBasis], v: &SubspaceBasis, n: usize) -> Result<BlCheck> {
    if planes.is_empty() {
        return Err(Error::invalid("need at least one plane"));
    }
    if v.ambient() != n {
        return Err(Error::invalid(format!("V lives in R^{}, expected R^{n}", v.ambient())));
    }
    for (j, p) in planes.iter().enumerate() {
        if p.ambient() != n || p.dim() != 2 {
            return Err(Error::invalid(format!(
                "plane {j} must be a 2-dimensional subspace of R^{n}"
            )));
        }
    }
    let dims: Vec<usize> = planes.iter().map(|p| projection_dim(p, v)).collect();
    let m = planes.len();
    let sum: usize = dims.iter().sum();
    let exact = matches!(v, SubspaceBasis::Exact { .. })
        && planes.iter().all(|p| matches!(p, SubspaceBasis::Exact { .. }));
    Ok(BlCheck {
        holds: 2 * m * v.dim() <= n * sum,
        lhs: v.dim() as f64,
        rhs: n as f64 * sum as f64 / (2 * m) as f64,
        projection_dims: dims,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use proptest::prelude::*;

    /// Largest `r` with a nonzero `r × r` minor, by cofactor expansion.
    fn minor_rank(m: &[Vec<Rational>]) -> usize {
        fn det(m: &[Vec<Rational>], rows: &[usize], cols: &[usize]) -> Rational {
            if rows.is_empty() {
                return rational(1);
            }
            let mut acc = Rational::zero();
            for (idx, &c) in cols.iter().enumerate() {
                let a = &m[rows[0]][c];
                if a.is_zero() {
                    continue;
                }
                let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
                let term = a * det(m, &rows[1..], &rest);
                if idx % 2 == 0 {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
            acc
        }
        fn subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
            if r == 0 {
                return vec![vec![]];
            }
            (r - 1..n)
                .flat_map(|last| {
                    subsets(last, r - 1).into_iter().map(move |mut s| {
                        s.push(last);
                        s
                    })
                })
                .collect()
        }
        let (rows, cols) = (m.len(), m.first().map_or(0, Vec::len));
        (1..=rows.min(cols))
            .rev()
            .find(|&r| {
                subsets(rows, r)
                    .iter()
                    .any(|rs| subsets(cols, r).iter().any(|cs| !det(m, rs, cs).is_zero()))
            })
            .unwrap_or(0)
    }

    fn mat(rows: &[Vec<i64>]) -> Vec<Vec<Rational>> {
        rows.iter().map(|r| r.iter().map(|&x| rational(x)).collect()).collect()
    }

    #[test]
    fn whole_space_and_zero() {
        let planes = vec![
            SubspaceBasis::from_integers(5, &[vec![1, 0, 0, 0, 0], vec![0, 1, 0, 0, 0]]).unwrap(),
            SubspaceBasis::from_integers(5, &[vec![0, 0, 1, 0, 0], vec![0, 0, 0, 1, 1]]).unwrap(),
        ];
        let r = bl_dimension_check(&planes, &SubspaceBasis::whole(5), 5).unwrap();
        assert!(r.holds);
        assert_eq!(r.projection_dims, vec![2, 2]);
        assert_eq!((r.lhs, r.rhs), (5.0, 5.0));
        let r = bl_dimension_check(&planes, &SubspaceBasis::zero(5), 5).unwrap();
        assert!(r.holds);
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
    }

    #[test]
    fn degenerate_plane_rejected() {
        let line = SubspaceBasis::from_integers(3, &[vec![1, 0, 0]]).unwrap();
        assert!(bl_dimension_check(&[line], &SubspaceBasis::whole(3), 3).is_err());
        assert!(SubspaceBasis::from_integers(3, &[vec![1, 0, 0], vec![2, 0, 0]]).is_err());
        assert!(SubspaceBasis::real(3, vec![vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0]]).is_err());
    }

    #[test]
    fn tangent_planes_at_distinct_points() {
        let sys = MonomialSystem::new(2).unwrap();
        let pts = [(0.1, 0.2), (0.8, 0.3), (0.4, 0.9), (0.6, 0.6), (0.2, 0.7), (0.9, 0.9)];
        let planes: Vec<_> = pts
            .iter()
            .map(|&(t, s)| SubspaceBasis::tangent_plane(&sys, t, s).unwrap())
            .collect();
        let v = SubspaceBasis::tangent_plane(&sys, 0.1, 0.2).unwrap();
        let r = bl_dimension_check(&planes, &v, 5).unwrap();
        assert!(r.holds && r.lhs < r.rhs);
        assert!(!r.exact);
    }

    #[test]
    fn failing_configuration() {
        // V is orthogonal to the first plane and projects to a line in the second.
        let planes = vec![
            SubspaceBasis::from_integers(3, &[vec![1, 0, 0], vec![0, 1, 0]]).unwrap(),
            SubspaceBasis::from_integers(3, &[vec![1, 0, 0], vec![0, 1, 1]]).unwrap(),
        ];
        let v = SubspaceBasis::from_integers(3, &[vec![0, 0, 1]]).unwrap();
        let r = bl_dimension_check(&planes, &v, 3).unwrap();
        assert_eq!(r.projection_dims, vec![0, 1]);
        // 2·2·1 = 4 > 3·1
        assert!(!r.holds);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn exact_ranks_match_minor_oracle(
            n in 3usize..=9,
            m in 1usize..=6,
            dv in 0usize..=4,
            entries in proptest::collection::vec(-2i64..=2, 6 * 18 + 36),
        ) {
            let dv = dv.min(n);
            let mut it = entries.into_iter();
            let mut take = |r: usize| -> Vec<Vec<i64>> {
                (0..r).map(|_| (0..n).map(|_| it.next().unwrap_or(1)).collect()).collect()
            };
            let vrows = take(dv);
            let Ok(v) = SubspaceBasis::from_integers(n, &vrows) else { return Ok(()); };
            let mut planes = Vec::new();
            let mut oracle_dims = Vec::new();
            for _ in 0..m {
                let prow = take(2);
                if let Ok(p) = SubspaceBasis::from_integers(n, &prow) {
                    let prod: Vec<Vec<i64>> = prow
                        .iter()
                        .map(|u| vrows.iter().map(|b| u.iter().zip(b).map(|(x, y)| x * y).sum()).collect())
                        .collect();
                    oracle_dims.push(if dv == 0 { 0 } else { minor_rank(&mat(&prod)) });
                    planes.push(p);
                }
            }
            prop_assume!(!planes.is_empty());
            let r = bl_dimension_check(&planes, &v, n).unwrap();
            prop_assert_eq!(&r.projection_dims, &oracle_dims);
            let sum: usize = oracle_dims.iter().sum();
            prop_assert_eq!(r.holds, 2 * planes.len() * dv <= n * sum);
            // Real arithmetic agrees on these well-conditioned integer inputs.
            let vr = SubspaceBasis::real(n, v.to_real()).unwrap();
            let rr = bl_dimension_check(&planes, &vr, n).unwrap();
            prop_assert_eq!(rr.projection_dims, oracle_dims);
        }
    }
}
