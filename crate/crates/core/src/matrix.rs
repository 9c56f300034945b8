use std::fmt;

use crate::error::CoreError;
use crate::perm::{Cycle, Derangement, ValuedCycle};

/// Integer cost. Infinite costs are the sentinel [`INF`].
pub type Cost = i64;

/// Sentinel for +∞. Strictly greater than any finite sum the solver forms.
pub const INF: Cost = i64::MAX / 4;

/// Largest supported magnitude of a finite entry. Keeps `n * MAX_ENTRY` and
/// differences of such sums far below [`INF`].
pub const MAX_ENTRY: Cost = 1 << 40;

#[inline]
pub fn is_inf(c: Cost) -> bool {
    c >= INF
}

/// Saturating addition: anything involving [`INF`] stays [`INF`].
#[inline]
pub fn add(a: Cost, b: Cost) -> Cost {
    if is_inf(a) || is_inf(b) {
        INF
    } else {
        a + b
    }
}

/// `a - b` for finite `b`; an infinite `a` stays infinite.
#[inline]
pub fn sub(a: Cost, b: Cost) -> Cost {
    debug_assert!(!is_inf(b));
    if is_inf(a) {
        INF
    } else {
        a - b
    }
}

/// Square cost matrix with an infinite diagonal and finite off-diagonal entries.
#[derive(Clone, PartialEq, Eq)]
pub struct CostMatrix {
    n: usize,
    entries: Vec<Cost>,
}

impl CostMatrix {
    /// Builds a matrix from row-major entries. Diagonal entries must be [`INF`].
    pub fn new(n: usize, entries: Vec<Cost>) -> Result<Self, CoreError> {
        if n < 2 {
            return Err(CoreError::TooSmall(n));
        }
        if entries.len() != n * n {
            return Err(CoreError::BadShape {
                expected: n * n,
                got: entries.len(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                let c = entries[i * n + j];
                if i == j {
                    if !is_inf(c) {
                        return Err(CoreError::DiagonalNotInf(i));
                    }
                } else if is_inf(c) {
                    return Err(CoreError::InfiniteOffDiagonal(i, j));
                } else if c.abs() > MAX_ENTRY {
                    return Err(CoreError::EntryTooLarge(i, j, c));
                }
            }
        }
        let entries = entries
            .into_iter()
            .map(|c| if is_inf(c) { INF } else { c })
            .collect();
        Ok(CostMatrix { n, entries })
    }

    /// Builds a matrix from rows of off-diagonal costs; the diagonal values
    /// of `rows` are ignored and replaced by [`INF`].
    pub fn from_rows(rows: &[Vec<Cost>]) -> Result<Self, CoreError> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(CoreError::BadShape {
                    expected: n * n,
                    got: row.len() * n,
                });
            }
            entries.extend(row.iter().enumerate().map(|(j, &c)| if i == j { INF } else { c }));
        }
        Self::new(n, entries)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// `d(i, j)`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Cost {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[Cost] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Largest absolute off-diagonal entry.
    pub fn max_abs(&self) -> Cost {
        self.entries
            .iter()
            .filter(|c| !is_inf(**c))
            .map(|c| c.abs())
            .max()
            .unwrap_or(0)
    }

    /// Sum of the arcs `(a, D(a))`.
    pub fn derangement_value(&self, d: &Derangement) -> Cost {
        debug_assert_eq!(d.n(), self.n);
        (0..self.n).map(|a| self.get(a, d.image(a))).sum()
    }

    /// Values the cycle `s` against `d`: vertex `a` of the cycle contributes
    /// `d(a, D(s(a))) - d(a, D(a))`.
    pub fn cycle_value(&self, d: &Derangement, s: &Cycle) -> Result<ValuedCycle, CoreError> {
        let verts = s.vertices();
        let mut deltas = Vec::with_capacity(verts.len());
        for (k, &a) in verts.iter().enumerate() {
            if a >= self.n {
                return Err(CoreError::VertexOutOfRange(a));
            }
            let next = verts[(k + 1) % verts.len()];
            let target = d.image(next);
            if target == a {
                return Err(CoreError::LoopArc(a));
            }
            deltas.push(self.get(a, target) - self.get(a, d.image(a)));
        }
        Ok(ValuedCycle::new(s.clone(), deltas))
    }
}

impl fmt::Debug for CostMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CostMatrix({}x{})", self.n, self.n)?;
        for i in 0..self.n {
            for j in 0..self.n {
                let c = self.get(i, j);
                if is_inf(c) {
                    write!(f, "{:>5}", "inf")?;
                } else {
                    write!(f, "{c:>5}")?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> CostMatrix {
        CostMatrix::from_rows(&[vec![INF, 5], vec![3, INF]]).unwrap()
    }

    #[test]
    fn two_vertex_value() {
        let m = tiny();
        let d = Derangement::cyclic(2);
        assert_eq!(m.derangement_value(&d), 8);
    }

    #[test]
    fn rejects_finite_diagonal() {
        let err = CostMatrix::new(2, vec![0, 5, 3, INF]).unwrap_err();
        assert_eq!(err, CoreError::DiagonalNotInf(0));
    }

    #[test]
    fn rejects_infinite_off_diagonal() {
        let err = CostMatrix::new(2, vec![INF, INF, 3, INF]).unwrap_err();
        assert_eq!(err, CoreError::InfiniteOffDiagonal(0, 1));
    }

    #[test]
    fn rejects_single_vertex() {
        assert_eq!(CostMatrix::new(1, vec![INF]).unwrap_err(), CoreError::TooSmall(1));
    }

    #[test]
    fn saturating_arithmetic() {
        assert_eq!(add(INF, -5), INF);
        assert_eq!(add(3, 4), 7);
        assert_eq!(sub(INF, 100), INF);
        assert!(is_inf(add(INF, INF)));
    }

    #[test]
    fn two_cycle_onto_own_image_is_a_loop() {
        // D = (1 2 3); s = (1 3): D(s(3)) = D(1) = 2, D(s(1)) = D(3) = 1 -> loop at 1.
        let m = CostMatrix::from_rows(&[vec![INF, 1, 2], vec![3, INF, 4], vec![5, 6, INF]])
            .unwrap();
        let d = Derangement::cyclic(3);
        let s = Cycle::new(vec![0, 2]).unwrap();
        assert_eq!(m.cycle_value(&d, &s).unwrap_err(), CoreError::LoopArc(0));
    }
}
