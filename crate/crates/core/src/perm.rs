use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::matrix::Cost;

/// Fixed-point-free permutation with its inverse cached.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Derangement {
    image: Vec<usize>,
    inverse: Vec<usize>,
}

impl Derangement {
    /// Builds a derangement from its 0-based image table.
    pub fn new(image: Vec<usize>) -> Result<Self, CoreError> {
        let inverse = invert(&image)?;
        if let Some(a) = (0..image.len()).find(|&a| image[a] == a) {
            return Err(CoreError::NotDerangement(a));
        }
        Ok(Derangement { image, inverse })
    }

    /// Builds a derangement from a 1-based image table.
    pub fn from_one_based(image: &[usize]) -> Result<Self, CoreError> {
        Self::new(image.iter().map(|v| v.wrapping_sub(1)).collect())
    }

    /// The tour `(1 2 ... n)`.
    pub fn cyclic(n: usize) -> Self {
        assert!(n >= 2, "a derangement needs at least 2 vertices");
        let image = (0..n).map(|a| (a + 1) % n).collect();
        Derangement::new(image).expect("cyclic shift is a derangement")
    }

    /// A uniformly random tour.
    pub fn random_tour<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut image = vec![0; n];
        for k in 0..n {
            image[order[k]] = order[(k + 1) % n];
        }
        Derangement::new(image).expect("a single n-cycle is a derangement")
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.image.len()
    }

    /// `D(a)`.
    #[inline]
    pub fn image(&self, a: usize) -> usize {
        self.image[a]
    }

    /// `D⁻¹(b)`.
    #[inline]
    pub fn preimage(&self, b: usize) -> usize {
        self.inverse[b]
    }

    pub fn images(&self) -> &[usize] {
        &self.image
    }

    /// Composition `D'(a) = D(s(a))`, with `s` the identity off its cycles.
    pub fn apply(&self, s: &PermSet) -> Result<Derangement, CoreError> {
        let mut image = self.image.clone();
        for c in s.cycles() {
            let v = c.vertices();
            for k in 0..v.len() {
                let (a, next) = (v[k], v[(k + 1) % v.len()]);
                if a >= self.n() || next >= self.n() {
                    return Err(CoreError::VertexOutOfRange(a.max(next)));
                }
                image[a] = self.image[next];
            }
        }
        Derangement::new(image)
    }

    pub fn apply_cycle(&self, c: &Cycle) -> Result<Derangement, CoreError> {
        self.apply(&PermSet::single(c.clone()))
    }

    /// Cycle decomposition, each cycle starting at its smallest vertex, in
    /// order of smallest vertex.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cyc = Vec::new();
            let mut v = start;
            while !seen[v] {
                seen[v] = true;
                cyc.push(v);
                v = self.image[v];
            }
            out.push(cyc);
        }
        out
    }

    /// True when the derangement is a single n-cycle.
    pub fn is_tour(&self) -> bool {
        let mut v = self.image[0];
        let mut steps = 1;
        while v != 0 {
            v = self.image[v];
            steps += 1;
        }
        steps == self.n()
    }
}

fn invert(image: &[usize]) -> Result<Vec<usize>, CoreError> {
    let n = image.len();
    let mut inverse = vec![usize::MAX; n];
    for (a, &b) in image.iter().enumerate() {
        if b >= n {
            return Err(CoreError::VertexOutOfRange(b));
        }
        if inverse[b] != usize::MAX {
            return Err(CoreError::NotBijection(b));
        }
        inverse[b] = a;
    }
    Ok(inverse)
}

impl fmt::Display for Derangement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.cycles() {
            write_cycle(f, &c)?;
        }
        Ok(())
    }
}

impl fmt::Debug for Derangement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Derangement{self}")
    }
}

fn write_cycle(f: &mut fmt::Formatter<'_>, verts: &[usize]) -> fmt::Result {
    write!(f, "(")?;
    for (k, v) in verts.iter().enumerate() {
        if k > 0 {
            write!(f, " ")?;
        }
        write!(f, "{}", v + 1)?;
    }
    write!(f, ")")
}

/// Permutation cycle `(v0 v1 ... vk)`: `v0 -> v1 -> ... -> vk -> v0`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Cycle(Vec<usize>);

impl Cycle {
    pub fn new(vertices: Vec<usize>) -> Result<Self, CoreError> {
        if vertices.len() < 2 {
            return Err(CoreError::CycleTooShort);
        }
        let mut sorted = vertices.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(CoreError::RepeatedVertex(w[0]));
        }
        Ok(Cycle(vertices))
    }

    pub fn from_one_based(vertices: &[usize]) -> Result<Self, CoreError> {
        Self::new(vertices.iter().map(|v| v.wrapping_sub(1)).collect())
    }

    pub fn vertices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Rotation starting at the smallest vertex.
    pub fn canonical(&self) -> Cycle {
        let pos = (0..self.0.len()).min_by_key(|&k| self.0[k]).unwrap_or(0);
        let mut v = self.0.clone();
        v.rotate_left(pos);
        Cycle(v)
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|v| v + 1).collect()
    }
}

impl TryFrom<Vec<usize>> for Cycle {
    type Error = CoreError;
    fn try_from(v: Vec<usize>) -> Result<Self, CoreError> {
        Cycle::new(v)
    }
}

impl From<Cycle> for Vec<usize> {
    fn from(c: Cycle) -> Self {
        c.0
    }
}

impl fmt::Display for Cycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_cycle(f, &self.0)
    }
}

impl fmt::Debug for Cycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cycle{self}")
    }
}

/// A cycle valued against a derangement: one delta per vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValuedCycle {
    cycle: Cycle,
    deltas: Vec<Cost>,
    total: Cost,
}

impl ValuedCycle {
    pub(crate) fn new(cycle: Cycle, deltas: Vec<Cost>) -> Self {
        let total = deltas.iter().sum();
        ValuedCycle {
            cycle,
            deltas,
            total,
        }
    }

    pub fn cycle(&self) -> &Cycle {
        &self.cycle
    }

    /// Deltas aligned with `cycle().vertices()`.
    pub fn deltas(&self) -> &[Cost] {
        &self.deltas
    }

    pub fn total(&self) -> Cost {
        self.total
    }
}

impl fmt::Display for ValuedCycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, (v, d)) in self.cycle.vertices().iter().zip(&self.deltas).enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}^{}", v + 1, d)?;
        }
        write!(f, ")")
    }
}

/// Vertex-disjoint cycles applied together.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Cycle>", into = "Vec<Cycle>")]
pub struct PermSet(Vec<Cycle>);

impl PermSet {
    pub fn new(cycles: Vec<Cycle>) -> Result<Self, CoreError> {
        let mut all: Vec<usize> = cycles.iter().flat_map(|c| c.vertices().iter().copied()).collect();
        all.sort_unstable();
        if let Some(w) = all.windows(2).find(|w| w[0] == w[1]) {
            return Err(CoreError::CyclesOverlap(w[0]));
        }
        Ok(PermSet(cycles))
    }

    pub fn empty() -> Self {
        PermSet(Vec::new())
    }

    pub fn single(c: Cycle) -> Self {
        PermSet(vec![c])
    }

    pub fn cycles(&self) -> &[Cycle] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<Cycle>> for PermSet {
    type Error = CoreError;
    fn try_from(v: Vec<Cycle>) -> Result<Self, CoreError> {
        PermSet::new(v)
    }
}

impl From<PermSet> for Vec<Cycle> {
    fn from(p: PermSet) -> Self {
        p.0
    }
}

impl fmt::Display for PermSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "()");
        }
        for c in &self.0 {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_fixed_point() {
        assert_eq!(
            Derangement::new(vec![1, 0, 2]).unwrap_err(),
            CoreError::NotDerangement(2)
        );
    }

    #[test]
    fn rejects_non_bijection() {
        assert_eq!(
            Derangement::new(vec![1, 0, 0]).unwrap_err(),
            CoreError::NotBijection(0)
        );
    }

    #[test]
    fn inverse_is_cached() {
        let d = Derangement::from_one_based(&[3, 1, 4, 2]).unwrap();
        for a in 0..4 {
            assert_eq!(d.preimage(d.image(a)), a);
        }
    }

    #[test]
    fn empty_set_is_identity() {
        let d = Derangement::cyclic(5);
        assert_eq!(d.apply(&PermSet::empty()).unwrap(), d);
    }

    #[test]
    fn transposition_on_three_cycle_creates_fixed_point() {
        // D = (1 2 3), s = (1 2): D(s(2)) = D(1) = 2.
        let d = Derangement::cyclic(3);
        let s = PermSet::single(Cycle::new(vec![0, 1]).unwrap());
        assert_eq!(d.apply(&s).unwrap_err(), CoreError::NotDerangement(1));
    }

    #[test]
    fn cycle_notation_direction() {
        // (1 2 3) applied to the identity-shift: image(a) = D(s(a)).
        let d = Derangement::from_one_based(&[2, 3, 4, 1]).unwrap();
        let s = PermSet::single(Cycle::from_one_based(&[1, 3]).unwrap());
        let e = d.apply(&s).unwrap();
        assert_eq!(e.image(0), d.image(2));
        assert_eq!(e.image(2), d.image(0));
    }

    #[test]
    fn tours_and_covers() {
        assert!(Derangement::cyclic(2).is_tour());
        assert!(Derangement::cyclic(7).is_tour());
        let two = Derangement::from_one_based(&[2, 1, 4, 3]).unwrap();
        assert!(!two.is_tour());
        assert_eq!(two.cycles().len(), 2);
        assert_eq!(two.to_string(), "(1 2)(3 4)");
    }

    #[test]
    fn cycle_validation() {
        assert_eq!(Cycle::new(vec![3]).unwrap_err(), CoreError::CycleTooShort);
        assert_eq!(Cycle::new(vec![1, 2, 1]).unwrap_err(), CoreError::RepeatedVertex(1));
        let c = Cycle::new(vec![5, 2, 7]).unwrap();
        assert_eq!(c.canonical().vertices(), &[2, 7, 5]);
        assert_eq!(c.to_string(), "(6 3 8)");
    }

    #[test]
    fn permset_rejects_overlap() {
        let a = Cycle::new(vec![0, 1]).unwrap();
        let b = Cycle::new(vec![1, 2]).unwrap();
        assert_eq!(PermSet::new(vec![a, b]).unwrap_err(), CoreError::CyclesOverlap(1));
    }
}
