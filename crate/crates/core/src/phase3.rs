//! From an assignment optimum to a tour.
//!
//! Any derangement `T` is `σ` with the disjoint cycles of `σ⁻¹T` applied,
//! and its value exceeds `|σ|` by the sum of their R-values. With no
//! negative cycle left in `R`, every such cycle is non-negative, so the
//! cheapest tour within `|σ| + b` uses only cycles of value at most `b`.
//! Enumerating all of them and searching disjoint subsets exactly therefore
//! certifies optimality for every budget it covers.

use serde::Serialize;

use crate::error::Phase3Error;
use crate::matrix::{add, is_inf, Cost, CostMatrix, INF};
use crate::perm::{Cycle, Derangement, PermSet};
use crate::phase2::{sweep, Acceptance, PathTable, ReducedMatrix};
use crate::trace::{set_one_based, Trace, TraceEvent};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    CertifiedOptimal,
    Heuristic,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatchResult {
    pub tour: Derangement,
    pub added_value: Cost,
    pub cycles_used: PermSet,
    pub exactness: Exactness,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Phase3Config {
    /// Largest budget tried; `None` means three times the mean entry.
    pub budget_cap: Option<Cost>,
    /// Search nodes allowed per cycle enumeration.
    pub enumeration_nodes: u64,
    /// Most cycles kept per enumeration.
    pub max_cycles: usize,
    /// Search nodes allowed per subset search.
    pub subset_nodes: u64,
}

impl Default for Phase3Config {
    fn default() -> Self {
        Phase3Config {
            budget_cap: None,
            enumeration_nodes: 20_000_000,
            max_cycles: 200_000,
            subset_nodes: 1_000_000,
        }
    }
}

/// Budgets to try in order: doubling from 0 while below `m`, then
/// multiples of `m`, ending exactly at `limit`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundSchedule {
    m: Cost,
    budgets: Vec<Cost>,
}

impl BoundSchedule {
    pub fn new(m: Cost, limit: Cost) -> Self {
        let m = m.max(1);
        let mut budgets = Vec::new();
        if limit >= 0 {
            let mut b = 0;
            while b < m && b < limit {
                budgets.push(b);
                b = if b == 0 { 1 } else { b * 2 };
            }
            let mut k = 1;
            while k * m < limit {
                budgets.push(k * m);
                k += 1;
            }
            budgets.push(limit);
            budgets.dedup();
        }
        BoundSchedule { m, budgets }
    }

    pub fn m(&self) -> Cost {
        self.m
    }

    pub fn budgets(&self) -> &[Cost] {
        &self.budgets
    }
}

/// Outcome of one bounded enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundedCycles {
    /// Canonical cycles with their values, sorted by (value, cycle).
    pub cycles: Vec<(Cycle, Cost)>,
    /// False when a cap cut the enumeration short.
    pub complete: bool,
}

/// Every simple cycle of `r` with value at most `budget`, each rotated to
/// start at its smallest vertex, sorted by (value, cycle).
pub fn collect_bounded_cycles(r: &ReducedMatrix, budget: Cost) -> Vec<(Cycle, Cost)> {
    enumerate_bounded(r, budget, &Phase3Config::default()).cycles
}

/// [`collect_bounded_cycles`] with explicit caps.
pub fn enumerate_bounded(r: &ReducedMatrix, budget: Cost, cfg: &Phase3Config) -> BoundedCycles {
    let n = r.n();
    let mut found: std::collections::BTreeSet<(Cycle, Cost)> = Default::default();
    let mut complete = true;

    // path tables with threshold `<= budget`
    let mut t = PathTable::new(r, Acceptance::AtMost(budget), false);
    for _ in 0..=n {
        let changed = sweep(r, &mut t, &mut |c, v, _| {
            found.insert((c.canonical(), v));
            false
        });
        if !changed {
            break;
        }
    }

    // exhaustive depth-first enumeration
    let dist = shortest_paths(r);
    let negative = (0..n).any(|a| dist[a * n + a] < 0);
    let mut dfs = Dfs {
        r,
        budget,
        dist: (!negative).then_some(&dist),
        order: arc_order(r),
        nodes: 0,
        node_cap: cfg.enumeration_nodes,
        out: Vec::new(),
        path: Vec::with_capacity(n),
        on_path: vec![false; n],
    };
    for s in 0..n {
        dfs.run_from(s);
        if dfs.nodes > dfs.node_cap {
            complete = false;
            break;
        }
    }
    found.extend(dfs.out.into_iter().map(|(c, v)| (c.canonical(), v)));

    let mut cycles: Vec<(Cycle, Cost)> = found.into_iter().filter(|(_, v)| *v <= budget).collect();
    cycles.sort_by(|x, y| x.1.cmp(&y.1).then_with(|| x.0.cmp(&y.0)));
    if cycles.len() > cfg.max_cycles {
        cycles.truncate(cfg.max_cycles);
        complete = false;
    }
    BoundedCycles { cycles, complete }
}

/// All-pairs shortest path values of `r`, diagonal included.
fn shortest_paths(r: &ReducedMatrix) -> Vec<Cost> {
    let n = r.n();
    let mut d: Vec<Cost> = (0..n * n)
        .map(|k| if k / n == k % n { INF } else { r.get(k / n, k % n) })
        .collect();
    for j in 0..n {
        for a in 0..n {
            let aj = d[a * n + j];
            if is_inf(aj) {
                continue;
            }
            for c in 0..n {
                let v = add(aj, d[j * n + c]);
                if v < d[a * n + c] {
                    d[a * n + c] = v;
                }
            }
        }
    }
    d
}

/// Out-neighbours of each vertex in ascending R-order.
fn arc_order(r: &ReducedMatrix) -> Vec<Vec<usize>> {
    (0..r.n())
        .map(|a| {
            let mut v: Vec<usize> = (0..r.n()).filter(|&b| b != a && !is_inf(r.get(a, b))).collect();
            v.sort_by_key(|&b| (r.get(a, b), b));
            v
        })
        .collect()
}

struct Dfs<'a> {
    r: &'a ReducedMatrix,
    budget: Cost,
    /// Lower bounds for closing a path; absent when `r` has a negative cycle.
    dist: Option<&'a Vec<Cost>>,
    order: Vec<Vec<usize>>,
    nodes: u64,
    node_cap: u64,
    out: Vec<(Cycle, Cost)>,
    path: Vec<usize>,
    on_path: Vec<bool>,
}

impl Dfs<'_> {
    fn run_from(&mut self, s: usize) {
        self.path.push(s);
        self.on_path[s] = true;
        self.descend(s, 0);
        self.on_path[s] = false;
        self.path.pop();
    }

    /// Without a negative cycle every cycle is found from its smallest vertex
    /// and a path is cut once no completion can stay within budget. With one,
    /// a cycle of value `<= budget` still has a rotation whose prefix sums
    /// all stay `<= max(0, budget)`, so every start is searched with that cut.
    fn descend(&mut self, s: usize, sum: Cost) {
        self.nodes += 1;
        if self.nodes > self.node_cap {
            return;
        }
        let n = self.r.n();
        let u = *self.path.last().expect("non-empty path");
        if self.path.len() >= 2 {
            let w = self.r.get(u, s);
            if !is_inf(w) && sum + w <= self.budget {
                self.out
                    .push((Cycle::new(self.path.clone()).expect("simple path"), sum + w));
            }
        }
        for k in 0..self.order[u].len() {
            let v = self.order[u][k];
            if self.on_path[v] {
                continue;
            }
            let next = sum + self.r.get(u, v);
            let keep = match self.dist {
                Some(dist) => v > s && add(next, dist[v * n + s]) <= self.budget,
                None => next <= self.budget.max(0),
            };
            if !keep {
                continue;
            }
            self.path.push(v);
            self.on_path[v] = true;
            self.descend(s, next);
            self.on_path[v] = false;
            self.path.pop();
        }
    }
}

/// Outcome of a subset search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsetSearch {
    pub best: Option<(Derangement, Cost, PermSet)>,
    pub complete: bool,
}

/// Cheapest set of pairwise-disjoint `cycles` with total at most `budget`
/// whose application turns `sigma` into a tour. Exact branch-and-bound over
/// the list sorted by value.
pub fn patch_search(
    sigma: &Derangement,
    cycles: &[(Cycle, Cost)],
    budget: Cost,
    node_cap: u64,
) -> SubsetSearch {
    if sigma.is_tour() {
        return SubsetSearch {
            best: Some((sigma.clone(), 0, PermSet::empty())),
            complete: true,
        };
    }
    let mut sorted: Vec<&(Cycle, Cost)> = cycles.iter().filter(|(_, v)| *v <= budget).collect();
    sorted.sort_by(|x, y| x.1.cmp(&y.1).then_with(|| x.0.cmp(&y.0)));
    let mut s = Subsets {
        sigma,
        cycles: sorted,
        best_value: add(budget, 1),
        best: None,
        nodes: 0,
        node_cap,
        chosen: Vec::new(),
        used: vec![false; sigma.n()],
    };
    s.search(0, 0);
    SubsetSearch {
        complete: s.nodes <= s.node_cap,
        best: s.best,
    }
}

struct Subsets<'a> {
    sigma: &'a Derangement,
    cycles: Vec<&'a (Cycle, Cost)>,
    best_value: Cost,
    best: Option<(Derangement, Cost, PermSet)>,
    nodes: u64,
    node_cap: u64,
    chosen: Vec<usize>,
    used: Vec<bool>,
}

impl Subsets<'_> {
    fn search(&mut self, from: usize, sum: Cost) {
        self.nodes += 1;
        if self.nodes > self.node_cap {
            return;
        }
        if !self.chosen.is_empty() {
            let set = PermSet::new(self.chosen.iter().map(|&k| self.cycles[k].0.clone()).collect())
                .expect("chosen cycles are disjoint");
            if let Ok(d) = self.sigma.apply(&set) {
                if d.is_tour() {
                    self.best_value = sum;
                    self.best = Some((d, sum, set));
                    return;
                }
            }
        }
        for k in from..self.cycles.len() {
            let (c, v) = self.cycles[k];
            if sum + v >= self.best_value {
                break;
            }
            if c.vertices().iter().any(|&x| self.used[x]) {
                continue;
            }
            for &x in c.vertices() {
                self.used[x] = true;
            }
            self.chosen.push(k);
            self.search(k + 1, sum + v);
            self.chosen.pop();
            for &x in c.vertices() {
                self.used[x] = false;
            }
        }
    }
}

/// Best patch of `sigma` within `budget`, or `None`.
pub fn patch_to_tour(sigma: &Derangement, cycles: &[(Cycle, Cost)], budget: Cost) -> Option<PatchResult> {
    let search = patch_search(sigma, cycles, budget, Phase3Config::default().subset_nodes);
    let exactness = if search.complete {
        Exactness::CertifiedOptimal
    } else {
        Exactness::Heuristic
    };
    search.best.map(|(tour, added_value, cycles_used)| PatchResult {
        tour,
        added_value,
        cycles_used,
        exactness,
    })
}

/// Disjoint cycles `s` with `sigma · s = target`.
pub fn difference_cycles(sigma: &Derangement, target: &Derangement) -> PermSet {
    let n = sigma.n();
    let s: Vec<usize> = (0..n).map(|a| sigma.preimage(target.image(a))).collect();
    let mut seen = vec![false; n];
    let mut cycles = Vec::new();
    for a in 0..n {
        if seen[a] || s[a] == a {
            continue;
        }
        let mut c = Vec::new();
        let mut x = a;
        while !seen[x] {
            seen[x] = true;
            c.push(x);
            x = s[x];
        }
        cycles.push(Cycle::new(c).expect("permutation cycles are simple"));
    }
    PermSet::new(cycles).expect("permutation cycles are disjoint")
}

/// Turns the assignment optimum `sigma` into a tour.
///
/// Budgets are searched in increasing order up to one less than the gap to
/// `best_tour_seen`, or up to the cap when no tour is known. The first patch
/// found is the cheapest tour overall; if none is found below the gap, the
/// tour already seen is optimal. Either claim holds only when every
/// enumeration and subset search ran to completion.
pub fn run_phase3(
    m: &CostMatrix,
    sigma: &Derangement,
    best_tour_seen: Option<&Derangement>,
    cfg: &Phase3Config,
    trace: &mut Trace,
) -> Result<PatchResult, Phase3Error> {
    let base = m.derangement_value(sigma);
    if sigma.is_tour() {
        return Ok(PatchResult {
            tour: sigma.clone(),
            added_value: 0,
            cycles_used: PermSet::empty(),
            exactness: Exactness::CertifiedOptimal,
        });
    }
    let r = ReducedMatrix::build(m, sigma);
    let mean = r.mean_entry();
    let cap = cfg.budget_cap.unwrap_or(3 * mean);
    let seen = best_tour_seen.map(|t| (t, m.derangement_value(t)));
    let limit = match seen {
        Some((_, v)) => (v - base - 1).min(cap),
        None => cap,
    };
    let covers_gap = seen.is_some_and(|(_, v)| v - base - 1 <= cap);
    let mut last_complete = true;
    let schedule = BoundSchedule::new(mean, limit);
    for &b in schedule.budgets() {
        let found = enumerate_bounded(&r, b, cfg);
        trace.record(|| TraceEvent::BudgetSearched {
            budget: b,
            cycles: found.cycles.len(),
            value: base,
        });
        let search = patch_search(sigma, &found.cycles, b, cfg.subset_nodes);
        let exact = found.complete && search.complete;
        last_complete = exact;
        if let Some((tour, added, set)) = search.best {
            let value = base + added;
            trace.record(|| TraceEvent::TourPatched {
                cycles: set_one_based(&set),
                added,
                value,
            });
            let better_than_seen = seen.is_none_or(|(_, v)| value < v);
            if better_than_seen {
                return Ok(PatchResult {
                    tour,
                    added_value: added,
                    cycles_used: set,
                    exactness: if exact {
                        Exactness::CertifiedOptimal
                    } else {
                        Exactness::Heuristic
                    },
                });
            }
        }
    }
    match seen {
        Some((t, v)) => {
            let set = difference_cycles(sigma, t);
            trace.record(|| TraceEvent::TourPatched {
                cycles: set_one_based(&set),
                added: v - base,
                value: v,
            });
            Ok(PatchResult {
                tour: t.clone(),
                added_value: v - base,
                cycles_used: set,
                exactness: if covers_gap && last_complete {
                    Exactness::CertifiedOptimal
                } else {
                    Exactness::Heuristic
                },
            })
        }
        None => Err(Phase3Error::NoTourFound { cap }),
    }
}
