//! Per-row sorted index of a cost matrix and the row form of a derangement.

use crate::matrix::{Cost, CostMatrix};
use crate::perm::Derangement;

/// For each row, the off-diagonal columns in ascending cost order. Ties go to
/// the smaller column index. Each row has `n - 1` entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SortedRowIndex {
    n: usize,
    order: Vec<usize>,
}

impl SortedRowIndex {
    pub fn build(m: &CostMatrix) -> Self {
        let n = m.n();
        let mut order = Vec::with_capacity(n * (n - 1));
        for i in 0..n {
            let mut cols: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            // stable sort keeps ascending column order among ties
            cols.sort_by_key(|&j| m.get(i, j));
            order.extend(cols);
        }
        SortedRowIndex { n, order }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Column of the `rank`-th cheapest arc out of `row` (`rank` is 1-based,
    /// `1..=n-1`).
    pub fn column(&self, row: usize, rank: usize) -> usize {
        assert!(rank >= 1 && rank < self.n, "rank {rank} out of 1..{}", self.n);
        self.order[row * (self.n - 1) + rank - 1]
    }

    pub fn row(&self, row: usize) -> &[usize] {
        &self.order[row * (self.n - 1)..(row + 1) * (self.n - 1)]
    }
}

/// Builds the per-row sorted index of `m`.
pub fn build_min_index(m: &CostMatrix) -> SortedRowIndex {
    SortedRowIndex::build(m)
}

/// A derangement together with `DIFF(a) = d(a, MIN(a,1)) - d(a, D(a))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowForm {
    d: Derangement,
    diff: Vec<Cost>,
}

impl RowForm {
    pub fn derangement(&self) -> &Derangement {
        &self.d
    }

    pub fn diff(&self, a: usize) -> Cost {
        self.diff[a]
    }

    pub fn diffs(&self) -> &[Cost] {
        &self.diff
    }

    /// Vertices with negative `DIFF`, most negative first, ties by index.
    pub fn improving_vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = (0..self.diff.len()).filter(|&a| self.diff[a] < 0).collect();
        v.sort_by_key(|&a| (self.diff[a], a));
        v
    }
}

pub fn build_row_form(m: &CostMatrix, idx: &SortedRowIndex, d: &Derangement) -> RowForm {
    let diff = (0..m.n())
        .map(|a| m.get(a, idx.column(a, 1)) - m.get(a, d.image(a)))
        .collect();
    RowForm { d: d.clone(), diff }
}

/// The M-arc `(a, b)` corresponds to the permutation arc `(a, D⁻¹(b))`.
/// A result equal to `a` signals that `(a, b)` is an arc of `D` itself.
#[inline]
pub fn arc_to_perm(d: &Derangement, _a: usize, b: usize) -> usize {
    d.preimage(b)
}
