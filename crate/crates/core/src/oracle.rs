//! Exact reference solvers used to cross-check the solver.

use crate::error::OracleError;
use crate::matrix::{is_inf, Cost, CostMatrix};
use crate::perm::{Cycle, Derangement};
use crate::phase2::ReducedMatrix;

/// Largest instance [`held_karp_tsp`] accepts.
pub const HELD_KARP_LIMIT: usize = 22;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleReport {
    pub ap_value: Cost,
    pub ap_solution: Derangement,
    pub tsp_value: Cost,
    pub tsp_solution: Derangement,
}

pub fn oracle_report(m: &CostMatrix) -> Result<OracleReport, OracleError> {
    let (ap_value, ap_solution) = hungarian_ap(m)?;
    let (tsp_value, tsp_solution) = held_karp_tsp(m)?;
    Ok(OracleReport {
        ap_value,
        ap_solution,
        tsp_value,
        tsp_solution,
    })
}

/// Minimum-cost derangement by shortest augmenting paths with potentials.
/// Infinite entries are replaced by a cost no optimal finite assignment can
/// reach; an optimum that still uses one means no finite derangement exists.
pub fn hungarian_ap(m: &CostMatrix) -> Result<(Cost, Derangement), OracleError> {
    let n = m.n();
    let big = (m.max_abs() + 1)
        .saturating_mul(2 * n as Cost + 2)
        .min(Cost::MAX / (8 * (n as Cost + 1)));
    let cost = |i: usize, j: usize| {
        let c = m.get(i, j);
        if is_inf(c) {
            big
        } else {
            c
        }
    };
    // 1-based arrays; index 0 is the virtual column
    let mut u = vec![0 as Cost; n + 1];
    let mut v = vec![0 as Cost; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![Cost::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = Cost::MAX;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut image = vec![0; n];
    for j in 1..=n {
        image[p[j] - 1] = j - 1;
    }
    if (0..n).any(|i| is_inf(m.get(i, image[i]))) {
        return Err(OracleError::Infeasible);
    }
    let d = Derangement::new(image).map_err(|_| OracleError::Infeasible)?;
    Ok((m.derangement_value(&d), d))
}

trait Cell: Copy + Ord {
    const MAX: Self;
    fn from_cost(c: Cost) -> Self;
    fn to_cost(self) -> Cost;
}

impl Cell for i32 {
    const MAX: Self = i32::MAX;
    fn from_cost(c: Cost) -> Self {
        c as i32
    }
    fn to_cost(self) -> Cost {
        self as Cost
    }
}

impl Cell for i64 {
    const MAX: Self = i64::MAX;
    fn from_cost(c: Cost) -> Self {
        c
    }
    fn to_cost(self) -> Cost {
        self
    }
}

/// Exact minimum tour by dynamic programming over subsets, starting and
/// ending at vertex 0. Cells are 32-bit whenever the value range allows.
pub fn held_karp_tsp(m: &CostMatrix) -> Result<(Cost, Derangement), OracleError> {
    let n = m.n();
    if n > HELD_KARP_LIMIT {
        return Err(OracleError::TooLarge {
            n,
            limit: HELD_KARP_LIMIT,
        });
    }
    if n == 2 {
        let d = Derangement::cyclic(2);
        return Ok((m.derangement_value(&d), d));
    }
    let bound = m.max_abs().saturating_mul(n as Cost + 1);
    if bound < i32::MAX as Cost / 2 {
        held_karp::<i32>(m)
    } else {
        held_karp::<i64>(m)
    }
}

fn held_karp<T: Cell>(m: &CostMatrix) -> Result<(Cost, Derangement), OracleError> {
    let n = m.n();
    // vertices 1..n are bits 0..n-1 of the subset mask
    let k = n - 1;
    let full = 1usize << k;
    let mut dp = vec![T::MAX; full * k];
    let mut parent = vec![u8::MAX; full * k];
    for v in 0..k {
        dp[(1 << v) * k + v] = T::from_cost(m.get(0, v + 1));
    }
    for mask in 1..full {
        for last in 0..k {
            if mask & (1 << last) == 0 {
                continue;
            }
            let cur = dp[mask * k + last];
            if cur == T::MAX {
                continue;
            }
            let cur = cur.to_cost();
            let mut rest = !mask & (full - 1);
            while rest != 0 {
                let next = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let cand = T::from_cost(cur + m.get(last + 1, next + 1));
                let slot = (mask | (1 << next)) * k + next;
                if cand < dp[slot] {
                    dp[slot] = cand;
                    parent[slot] = last as u8;
                }
            }
        }
    }
    let mask = full - 1;
    let (best, mut last) = (0..k)
        .filter(|&v| dp[mask * k + v] != T::MAX)
        .map(|v| (dp[mask * k + v].to_cost() + m.get(v + 1, 0), v))
        .min()
        .ok_or(OracleError::Infeasible)?;
    let mut order = Vec::with_capacity(n);
    let mut mask = mask;
    loop {
        order.push(last + 1);
        let p = parent[mask * k + last];
        mask &= !(1 << last);
        if p == u8::MAX {
            break;
        }
        last = p as usize;
    }
    order.push(0);
    order.reverse();
    let mut image = vec![0; n];
    for w in 0..n {
        image[order[w]] = order[(w + 1) % n];
    }
    let d = Derangement::new(image).expect("tour order visits each vertex once");
    debug_assert_eq!(m.derangement_value(&d), best);
    Ok((best, d))
}

/// Whether `r` has a directed cycle with negative arc sum: Bellman-Ford from
/// a virtual source joined to every vertex by a zero arc.
pub fn bellman_negative_cycle(r: &ReducedMatrix) -> bool {
    let n = r.n();
    let mut dist = vec![0 as Cost; n];
    for _ in 0..n {
        let mut changed = false;
        for a in 0..n {
            for b in 0..n {
                let w = r.get(a, b);
                if a == b || is_inf(w) {
                    continue;
                }
                if dist[a] + w < dist[b] {
                    dist[b] = dist[a] + w;
                    changed = true;
                }
            }
        }
        if !changed {
            return false;
        }
    }
    true
}

/// Every simple directed cycle of `r` with at most `max_len` vertices and
/// value at most `budget`, rotated to start at its smallest vertex, sorted.
pub fn brute_cycles(
    r: &ReducedMatrix,
    budget: Cost,
    max_len: usize,
) -> Result<Vec<(Cycle, Cost)>, OracleError> {
    let n = r.n();
    if n > 10 && max_len > 6 {
        return Err(OracleError::TooLarge { n, limit: 10 });
    }
    let mut out = Vec::new();
    let mut path = Vec::with_capacity(n);
    let mut on_path = vec![false; n];
    for s in 0..n {
        path.push(s);
        on_path[s] = true;
        brute_dfs(r, s, budget, max_len, 0, &mut path, &mut on_path, &mut out);
        on_path[s] = false;
        path.pop();
    }
    out.sort();
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn brute_dfs(
    r: &ReducedMatrix,
    s: usize,
    budget: Cost,
    max_len: usize,
    sum: Cost,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    out: &mut Vec<(Cycle, Cost)>,
) {
    let u = *path.last().expect("path starts at s");
    if path.len() >= 2 {
        let w = r.get(u, s);
        if !is_inf(w) && sum + w <= budget {
            out.push((Cycle::new(path.clone()).expect("simple path"), sum + w));
        }
    }
    if path.len() == max_len {
        return;
    }
    for v in s + 1..r.n() {
        let w = r.get(u, v);
        if on_path[v] || is_inf(w) {
            continue;
        }
        path.push(v);
        on_path[v] = true;
        brute_dfs(r, s, budget, max_len, sum + w, path, on_path, out);
        on_path[v] = false;
        path.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::gen_instance;
    use crate::matrix::INF;

    fn derangements(n: usize) -> Vec<Vec<usize>> {
        fn rec(k: usize, n: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
            if k == n {
                out.push(cur.clone());
                return;
            }
            for j in 0..n {
                if j != k && !used[j] {
                    used[j] = true;
                    cur.push(j);
                    rec(k + 1, n, cur, used, out);
                    cur.pop();
                    used[j] = false;
                }
            }
        }
        let mut out = Vec::new();
        rec(0, n, &mut Vec::new(), &mut vec![false; n], &mut out);
        out
    }

    #[test]
    fn two_vertices() {
        let m = CostMatrix::from_rows(&[vec![INF, 5], vec![3, INF]]).unwrap();
        assert_eq!(hungarian_ap(&m).unwrap().0, 8);
        assert_eq!(held_karp_tsp(&m).unwrap().0, 8);
    }

    #[test]
    fn hungarian_matches_enumeration() {
        let m = gen_instance(5, 99, 7);
        let all = derangements(5);
        assert_eq!(all.len(), 44);
        let best = all
            .iter()
            .map(|img| m.derangement_value(&Derangement::new(img.clone()).unwrap()))
            .min()
            .unwrap();
        let (v, d) = hungarian_ap(&m).unwrap();
        assert_eq!(v, best);
        assert_eq!(m.derangement_value(&d), v);
    }

    #[test]
    fn held_karp_on_triangle() {
        let m = CostMatrix::from_rows(&[vec![INF, 1, 10], vec![10, INF, 1], vec![1, 10, INF]]).unwrap();
        let (v, d) = held_karp_tsp(&m).unwrap();
        assert_eq!(v, 3);
        assert!(d.is_tour());
    }

    #[test]
    fn held_karp_rejects_large() {
        let m = gen_instance(23, 9, 0);
        assert_eq!(
            held_karp_tsp(&m).unwrap_err(),
            OracleError::TooLarge { n: 23, limit: 22 }
        );
    }

    #[test]
    fn zero_matrix_has_no_negative_cycle() {
        let r = ReducedMatrix::from_entries(4, vec![0; 16]);
        assert!(!bellman_negative_cycle(&r));
        let mut e = vec![0; 9];
        e[1] = -1;
        let r = ReducedMatrix::from_entries(3, e);
        assert!(bellman_negative_cycle(&r));
    }

    #[test]
    fn brute_finds_zero_two_cycle() {
        let mut e = vec![5; 9];
        for a in 0..3 {
            e[a * 3 + a] = 0;
        }
        e[1] = 1;
        e[3] = -1;
        let r = ReducedMatrix::from_entries(3, e);
        let cycles = brute_cycles(&r, 0, 3).unwrap();
        assert_eq!(cycles, vec![(Cycle::new(vec![0, 1]).unwrap(), 0)]);
    }

    #[test]
    fn brute_guard() {
        let r = ReducedMatrix::from_entries(11, vec![0; 121]);
        assert!(brute_cycles(&r, 0, 7).is_err());
        assert!(brute_cycles(&r, 0, 6).is_ok());
    }
}
