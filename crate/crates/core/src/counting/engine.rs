//! Partitioned convolution of representation tables.
//!
//! `r_{j+1} = r_j ⋆ r_1` is computed one target partition at a time, where a
//! partition is a fixed value of the two linear components (the high bits of
//! the packed key). Every source group of `r_j` contributes a sorted run after
//! adding a point key; the runs are radix sorted on the remaining low bits and
//! merged. Partitions are independent, so they are processed in parallel and
//! reassembled in partition order, which keeps results bit-identical for any
//! worker count.

use rayon::prelude::*;

use super::{check_supported, CountRecord, Method, PointSet};
use crate::error::{Error, Result};
use crate::key::{KeyLayout, PackedKey};
use crate::system::{Exponent, MonomialSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountOptions {
    /// Largest representation table (in entries) that may be materialized.
    pub budget_entries: u128,
}

impl Default for CountOptions {
    fn default() -> Self {
        Self {
            budget_entries: 1 << 31,
        }
    }
}

/// Representation function `r_s` as a sorted list of `(key, multiplicity)`.
#[derive(Debug, Clone)]
pub struct RepTable {
    layout: KeyLayout,
    s_level: u32,
    entries: Vec<(PackedKey, u128)>,
    group_dims: (usize, usize),
    group_starts: Vec<usize>,
}

impl RepTable {
    pub fn s_level(&self) -> u32 {
        self.s_level
    }

    pub fn layout(&self) -> &KeyLayout {
        &self.layout
    }

    pub fn entries(&self) -> &[(PackedKey, u128)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_mass(&self) -> u128 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn sum_of_squares(&self) -> u128 {
        self.entries.iter().map(|e| e.1 * e.1).sum()
    }

    fn group(&self, u: usize, v: usize) -> &[(PackedKey, u128)] {
        let (gx, gy) = self.group_dims;
        if u >= gx || v >= gy {
            return &[];
        }
        let g = u * gy + v;
        &self.entries[self.group_starts[g]..self.group_starts[g + 1]]
    }
}

struct Convolver<'a> {
    layout: KeyLayout,
    spans: (usize, usize),
    point_keys: Vec<(usize, usize, PackedKey)>,
    low_bits: u32,
    budget: u128,
    points: &'a PointSet,
}

impl<'a> Convolver<'a> {
    fn new(exponents: &'a [Exponent], points: &'a PointSet, s: u32, opts: CountOptions) -> Result<Self> {
        check_supported(exponents)?;
        if s == 0 {
            return Err(Error::invalid("s must be at least 1"));
        }
        let layout = KeyLayout::new(exponents, points.xs(), points.ys(), s)?;
        let xmin = *points.xs().iter().min().unwrap();
        let ymin = *points.ys().iter().min().unwrap();
        let xmax = *points.xs().iter().max().unwrap();
        let ymax = *points.ys().iter().max().unwrap();
        let point_keys = points
            .points()
            .map(|(x, y)| {
                let key = layout.point_key(exponents, x, y)?;
                Ok(((x - xmin) as usize, (y - ymin) as usize, key))
            })
            .collect::<Result<Vec<_>>>()?;
        let low_bits = layout.total_bits() - layout.widths()[0] - layout.widths()[1];
        Ok(Self {
            spans: ((xmax - xmin) as usize, (ymax - ymin) as usize),
            point_keys,
            low_bits,
            budget: opts.budget_entries,
            layout,
            points,
        })
    }

    /// Upper bound on the support of `r_level`: multisets of points, capped by the
    /// number of cells in the component box.
    fn support_bound(&self, level: u32) -> u128 {
        let p = self.points.len() as u128;
        let mut multisets: u128 = 1;
        for i in 0..u128::from(level) {
            multisets = match multisets.checked_mul(p + i) {
                Some(v) => v / (i + 1),
                None => u128::MAX,
            };
        }
        let cells = self
            .layout
            .widths()
            .iter()
            .fold(1u128, |acc, &w| acc.saturating_mul(1u128.checked_shl(w).unwrap_or(u128::MAX)));
        multisets.min(cells)
    }

    fn check_budget(&self, level: u32) -> Result<()> {
        let estimated = self.support_bound(level);
        if estimated > self.budget {
            return Err(Error::MemoryBudget {
                estimated,
                budget: self.budget,
            });
        }
        Ok(())
    }

    fn base(&self) -> RepTable {
        let mut entries: Vec<(PackedKey, u128)> =
            self.point_keys.iter().map(|&(_, _, k)| (k, 1)).collect();
        entries.sort_unstable_by_key(|e| e.0);
        self.index(entries, 1)
    }

    fn index(&self, entries: Vec<(PackedKey, u128)>, level: u32) -> RepTable {
        let layout = self.layout.at_level(level).expect("level within layout");
        let gx = level as usize * self.spans.0 + 1;
        let gy = level as usize * self.spans.1 + 1;
        let mut counts = vec![0usize; gx * gy + 1];
        for &(key, _) in &entries {
            let u = layout.field(key, 0) as usize;
            let v = layout.field(key, 1) as usize;
            counts[u * gy + v + 1] += 1;
        }
        for g in 1..counts.len() {
            counts[g] += counts[g - 1];
        }
        RepTable {
            layout,
            s_level: level,
            entries,
            group_dims: (gx, gy),
            group_starts: counts,
        }
    }

    /// Entries of `prev ⋆ r_1` whose linear components are `(u, v)`, sorted and merged.
    fn partition(&self, prev: &RepTable, u: usize, v: usize, buf: &mut Vec<(u128, u128)>) -> Vec<(PackedKey, u128)> {
        buf.clear();
        for &(px, py, pkey) in &self.point_keys {
            if px > u || py > v {
                continue;
            }
            for &(key, count) in prev.group(u - px, v - py) {
                buf.push((key.0 + pkey.0, count));
            }
        }
        radix_sort(buf, self.low_bits);
        let mut out: Vec<(PackedKey, u128)> = Vec::new();
        for &(key, count) in buf.iter() {
            match out.last_mut() {
                Some(last) if last.0 .0 == key => last.1 += count,
                _ => out.push((PackedKey(key), count)),
            }
        }
        out
    }

    /// Maps every partition of the next level through `f`, in partition order.
    fn map_partitions<R, F>(&self, prev: &RepTable, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(&[(PackedKey, u128)]) -> R + Sync,
    {
        let level = prev.s_level + 1;
        let gx = level as usize * self.spans.0 + 1;
        let gy = level as usize * self.spans.1 + 1;
        (0..gx * gy)
            .into_par_iter()
            .map_init(Vec::new, |buf, t| {
                let part = self.partition(prev, t / gy, t % gy, buf);
                f(&part)
            })
            .collect()
    }

    fn next_level(&self, prev: &RepTable) -> RepTable {
        let parts = self.map_partitions(prev, |p| p.to_vec());
        let entries = parts.concat();
        self.index(entries, prev.s_level + 1)
    }

    /// Table for `level` (stored), with the budget checked at each level.
    fn table(&self, level: u32) -> Result<RepTable> {
        self.check_budget(level)?;
        let mut table = self.base();
        for _ in 1..level {
            table = self.next_level(&table);
        }
        Ok(table)
    }
}

/// LSD radix sort on the low `bits` bits of the key; the higher bits are equal
/// within a partition. Falls back to a comparison sort for wide or short inputs.
fn radix_sort(buf: &mut Vec<(u128, u128)>, bits: u32) {
    const DIGIT: u32 = 8;
    if buf.len() < 256 || bits > 64 {
        buf.sort_unstable_by_key(|e| e.0);
        return;
    }
    let mut tmp = vec![(0u128, 0u128); buf.len()];
    let passes = bits.div_ceil(DIGIT);
    for pass in 0..passes {
        let shift = pass * DIGIT;
        let mut counts = [0usize; 1 << DIGIT];
        for e in buf.iter() {
            counts[((e.0 >> shift) & 0xff) as usize] += 1;
        }
        let mut sum = 0;
        for c in counts.iter_mut() {
            let here = *c;
            *c = sum;
            sum += here;
        }
        for e in buf.iter() {
            let d = ((e.0 >> shift) & 0xff) as usize;
            tmp[counts[d]] = *e;
            counts[d] += 1;
        }
        std::mem::swap(buf, &mut tmp);
    }
}

/// `r_s` for `s`-tuples of points in `[1, N]²`, materialized.
pub fn build_rep_table(k: u32, s: u32, n: u32) -> Result<RepTable> {
    build_rep_table_points(MonomialSystem::new(k)?.monomials(), &PointSet::square(n), s, CountOptions::default())
}

pub(crate) fn build_rep_table_points(
    exponents: &[Exponent],
    points: &PointSet,
    s: u32,
    opts: CountOptions,
) -> Result<RepTable> {
    Convolver::new(exponents, points, s, opts)?.table(s)
}

/// Exact `J = Σ_z r_s(z)²`. Only `r_{s-1}` is stored; the last level is
/// streamed partition by partition.
pub fn count_exact(exponents: &[Exponent], points: &PointSet, s: u32, opts: CountOptions) -> Result<u128> {
    count_with(exponents, points, s, opts, |part| part.iter().map(|e| e.1 * e.1).sum())
}

/// Runs `f` over every partition of `r_s` and sums the results.
pub(crate) fn count_with<F>(exponents: &[Exponent], points: &PointSet, s: u32, opts: CountOptions, f: F) -> Result<u128>
where
    F: Fn(&[(PackedKey, u128)]) -> u128 + Sync,
{
    let conv = Convolver::new(exponents, points, s, opts)?;
    if s == 1 {
        let base = conv.base();
        return Ok(group_slices(&base).map(&f).sum());
    }
    let prev = conv.table(s - 1)?;
    Ok(conv.map_partitions(&prev, &f).into_iter().sum())
}

/// Layout of `r_s` for consumers that need to decode partition keys.
pub(crate) fn layout_for(exponents: &[Exponent], points: &PointSet, s: u32) -> Result<KeyLayout> {
    KeyLayout::new(exponents, points.xs(), points.ys(), s)
}

fn group_slices(table: &RepTable) -> impl Iterator<Item = &[(PackedKey, u128)]> {
    table
        .group_starts
        .windows(2)
        .map(move |w| &table.entries[w[0]..w[1]])
}

/// Exact count for `[1, N]²` via the convolution engine.
pub fn mitm_count(k: u32, s: u32, n: u32) -> Result<CountRecord> {
    mitm_count_with(k, s, n, CountOptions::default())
}

pub fn mitm_count_with(k: u32, s: u32, n: u32, opts: CountOptions) -> Result<CountRecord> {
    let sys = MonomialSystem::new(k)?;
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    CountRecord::timed(k, s, n, Method::Mitm, None, || {
        count_exact(sys.monomials(), &PointSet::square(n), s, opts)
    })
}
