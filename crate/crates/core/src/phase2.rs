//! Assignment optimality by negative-cycle elimination on the reduced matrix.
//!
//! For the current derangement `D`, `R(a,b) = d(a, D(b)) - d(a, D(a))`; the
//! R-sum of any cycle equals the change its application makes to the value of
//! `D`, so `D` is assignment-optimal exactly when `R` has no negative cycle.
//! The search keeps a table of negative path values with their routes and
//! extends them pass by pass, pivoting on the intermediate vertex `j` as in
//! Floyd–Warshall. Every new or improved path `a -> c` is tested for closure
//! with the arc `(c, a)`.

use serde::Serialize;

use crate::error::Phase2Error;
use crate::matrix::{add, is_inf, sub, Cost, CostMatrix, INF};
use crate::perm::{Cycle, Derangement, PermSet};
use crate::trace::{set_one_based, Trace, TraceEvent};

/// `R(a,b) = d(a, D(b)) - d(a, D(a))` with the column labels `D(b)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedMatrix {
    n: usize,
    r: Vec<Cost>,
    column_labels: Vec<usize>,
}

impl ReducedMatrix {
    pub fn build(m: &CostMatrix, d: &Derangement) -> Self {
        let n = m.n();
        let mut r = Vec::with_capacity(n * n);
        for a in 0..n {
            let base = m.get(a, d.image(a));
            for b in 0..n {
                r.push(sub(m.get(a, d.image(b)), base));
            }
        }
        ReducedMatrix {
            n,
            r,
            column_labels: d.images().to_vec(),
        }
    }

    /// Wraps an arbitrary square table, labelled by the identity. Entries at
    /// or above [`INF`] are treated as missing arcs.
    pub fn from_entries(n: usize, entries: Vec<Cost>) -> Self {
        assert_eq!(entries.len(), n * n, "expected {n}x{n} entries");
        let r = entries
            .into_iter()
            .map(|c| if is_inf(c) { INF } else { c })
            .collect();
        ReducedMatrix {
            n,
            r,
            column_labels: (0..n).collect(),
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> Cost {
        self.r[a * self.n + b]
    }

    /// `D(b)`, the matrix column that column `b` stands for.
    pub fn column_label(&self, b: usize) -> usize {
        self.column_labels[b]
    }

    /// Sum of `R` over the arcs of `c`, [`INF`] if any arc is missing.
    pub fn cycle_sum(&self, c: &Cycle) -> Cost {
        let v = c.vertices();
        (0..v.len()).fold(0, |acc, k| add(acc, self.get(v[k], v[(k + 1) % v.len()])))
    }

    /// Sum of `R` along a walk.
    pub fn walk_sum(&self, walk: &[usize]) -> Cost {
        walk.windows(2).fold(0, |acc, w| add(acc, self.get(w[0], w[1])))
    }

    /// Mean of the finite off-diagonal entries, at least 1.
    pub fn mean_entry(&self) -> Cost {
        let (sum, count) = (0..self.n)
            .flat_map(|a| (0..self.n).filter(move |&b| b != a).map(move |b| (a, b)))
            .map(|(a, b)| self.get(a, b))
            .filter(|c| !is_inf(*c))
            .fold((0i128, 0i128), |(s, k), c| (s + c as i128, k + 1));
        if count == 0 {
            1
        } else {
            ((sum / count) as Cost).max(1)
        }
    }

    /// Table in the worked-example layout: a header row of column labels
    /// `D(b)`, a row of column indices, then one row per vertex. 1-based.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("    ");
        for b in 0..self.n {
            out.push_str(&format!("{:>5}", self.column_labels[b] + 1));
        }
        out.push('\n');
        out.push_str("    ");
        for b in 0..self.n {
            out.push_str(&format!("{:>5}", b + 1));
        }
        out.push('\n');
        for a in 0..self.n {
            out.push_str(&format!("{:>4}", a + 1));
            for b in 0..self.n {
                let c = self.get(a, b);
                if is_inf(c) {
                    out.push_str(&format!("{:>5}", "inf"));
                } else {
                    out.push_str(&format!("{c:>5}"));
                }
            }
            out.push('\n');
        }
        out
    }
}

pub fn build_reduced(m: &CostMatrix, d: &Derangement) -> ReducedMatrix {
    ReducedMatrix::build(m, d)
}

/// Bookkeeping status of a recorded path. Reported in traces only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryStatus {
    /// A direct arc of `R`, never improved.
    Initial,
    /// Recorded or extended during the latest pass.
    Active,
    /// Could not be extended to a better path during the latest pass.
    Inactive,
}

#[derive(Clone, Debug)]
struct Entry {
    value: Cost,
    /// Primary route first; more only with equal-path retention.
    routes: Vec<Vec<usize>>,
    status: EntryStatus,
}

/// Which path and cycle values the table keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Acceptance {
    /// Strictly negative values.
    Negative,
    /// Values no greater than the bound.
    AtMost(Cost),
}

impl Acceptance {
    #[inline]
    fn accepts(self, v: Cost) -> bool {
        match self {
            Acceptance::Negative => v < 0,
            Acceptance::AtMost(b) => !is_inf(v) && v <= b,
        }
    }
}

const MAX_EQUAL_ROUTES: usize = 4;

/// Best-known path values `W(a,b)` with their routes.
///
/// Each entry keeps its full route, so the predecessor `P(a,b)` is the vertex
/// before `b` on it and expansion always reproduces a simple walk whose
/// R-sum is exactly `W(a,b)`.
#[derive(Clone, Debug)]
pub struct PathTable {
    n: usize,
    entries: Vec<Option<Entry>>,
    acceptance: Acceptance,
    keep_equal: bool,
    passes: usize,
}

impl PathTable {
    /// Seeds the table with the direct arcs of `r` accepted by `acceptance`.
    pub fn new(r: &ReducedMatrix, acceptance: Acceptance, keep_equal: bool) -> Self {
        let n = r.n();
        let mut entries = vec![None; n * n];
        for a in 0..n {
            for c in 0..n {
                let v = r.get(a, c);
                if a != c && acceptance.accepts(v) {
                    entries[a * n + c] = Some(Entry {
                        value: v,
                        routes: vec![vec![a, c]],
                        status: EntryStatus::Initial,
                    });
                }
            }
        }
        PathTable {
            n,
            entries,
            acceptance,
            keep_equal,
            passes: 0,
        }
    }

    /// Table for the negative-cycle search.
    pub fn negative(r: &ReducedMatrix) -> Self {
        Self::new(r, Acceptance::Negative, false)
    }

    pub fn value(&self, a: usize, b: usize) -> Option<Cost> {
        self.entry(a, b).map(|e| e.value)
    }

    /// Vertex preceding `b` on the recorded path `a -> b`; `None` for a
    /// direct arc or a missing entry.
    pub fn predecessor(&self, a: usize, b: usize) -> Option<usize> {
        let route = &self.entry(a, b)?.routes[0];
        (route.len() > 2).then(|| route[route.len() - 2])
    }

    pub fn status(&self, a: usize, b: usize) -> Option<EntryStatus> {
        self.entry(a, b).map(|e| e.status)
    }

    /// Number of alternative equal-valued routes kept for `(a, b)`.
    pub fn route_count(&self, a: usize, b: usize) -> usize {
        self.entry(a, b).map_or(0, |e| e.routes.len())
    }

    pub fn recorded(&self) -> usize {
        self.entries.iter().filter(|e| e.is_some()).count()
    }

    pub fn passes(&self) -> usize {
        self.passes
    }

    fn entry(&self, a: usize, b: usize) -> Option<&Entry> {
        self.entries[a * self.n + b].as_ref()
    }

    fn offer(&mut self, a: usize, c: usize, value: Cost, route: Vec<usize>) -> bool {
        let slot = &mut self.entries[a * self.n + c];
        match slot {
            Some(e) if value > e.value => false,
            Some(e) if value == e.value => {
                if self.keep_equal && e.routes.len() < MAX_EQUAL_ROUTES && !e.routes.contains(&route)
                {
                    e.routes.push(route);
                    true
                } else {
                    false
                }
            }
            _ => {
                *slot = Some(Entry {
                    value,
                    routes: vec![route],
                    status: EntryStatus::Active,
                });
                true
            }
        }
    }

    /// Predecessor table in the worked-example layout, 1-based, blank for
    /// direct arcs and missing entries.
    pub fn render_predecessors(&self) -> String {
        let mut out = String::from("    ");
        for b in 0..self.n {
            out.push_str(&format!("{:>4}", b + 1));
        }
        out.push('\n');
        for a in 0..self.n {
            out.push_str(&format!("{:>4}", a + 1));
            for b in 0..self.n {
                match self.predecessor(a, b) {
                    Some(p) => out.push_str(&format!("{:>4}", p + 1)),
                    None => out.push_str("    "),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// A cycle closed during a pass, with its exact R-sum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoundCycle {
    pub cycle: Cycle,
    pub value: Cost,
    /// Table entry `(a, c)` whose recorded path closes into the cycle with
    /// the arc `(c, a)`, when there is one.
    pub entry: Option<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PassOutcome {
    pub changed: bool,
    pub found: Option<FoundCycle>,
}

/// One sweep over pivots `j = 1..n`. Returns at the first cycle whose value
/// the table's acceptance admits.
///
/// A cycle closed other than through a recorded entry is written back as
/// the path of its rotation with the largest closing arc, so every reported
/// cycle can be expanded from the table.
pub fn fw_pass(r: &ReducedMatrix, t: &mut PathTable) -> PassOutcome {
    let mut found = None;
    let mut changed = sweep(r, t, &mut |cycle, value, entry| {
        found = Some(FoundCycle {
            cycle,
            value,
            entry,
        });
        true
    });
    if let Some(f) = found.as_mut().filter(|f| f.entry.is_none()) {
        let v = f.cycle.vertices();
        let k = v.len();
        let close = (0..k)
            .max_by_key(|&i| (r.get(v[i], v[(i + 1) % k]), std::cmp::Reverse(i)))
            .expect("cycles are non-empty");
        let route: Vec<usize> = (1..=k).map(|i| v[(close + i) % k]).collect();
        let (a, c) = (route[0], route[k - 1]);
        let path_value = f.value - r.get(c, a);
        if t.acceptance.accepts(path_value) {
            changed |= t.offer(a, c, path_value, route.clone());
            if t.entry(a, c).is_some_and(|e| e.routes[0] == route) {
                f.entry = Some((a, c));
            }
        }
    }
    PassOutcome { changed, found }
}

/// Runs a sweep, reporting every admitted closed cycle to `report`; stops
/// early when `report` returns true. Returns whether any entry changed.
pub(crate) fn sweep(
    r: &ReducedMatrix,
    t: &mut PathTable,
    report: &mut dyn FnMut(Cycle, Cost, Option<(usize, usize)>) -> bool,
) -> bool {
    let n = t.n;
    let acc = t.acceptance;
    let closes = |v: Cost| acc.accepts(v);
    let mut cycle_of = |route: &[usize], v: Cost, entry: Option<(usize, usize)>| -> bool {
        report(Cycle::new(route.to_vec()).expect("routes are simple"), v, entry)
    };
    let mut changed = false;

    if t.passes == 0 {
        for a in 0..n {
            for c in 0..n {
                if let Some(e) = t.entry(a, c) {
                    let v = add(e.value, r.get(c, a));
                    if closes(v) {
                        let route = e.routes[0].clone();
                        if cycle_of(&route, v, Some((a, c))) {
                            t.passes += 1;
                            return changed;
                        }
                    }
                }
            }
        }
    }
    t.passes += 1;

    for j in 0..n {
        for a in 0..n {
            if a == j {
                continue;
            }
            let Some(e) = t.entry(a, j) else { continue };
            let base = e.value;
            let routes = e.routes.clone();
            let e_primary = routes[0].clone();
            let mut extended = false;
            for route in &routes {
                // one arc of R
                for c in 0..n {
                    let rjc = r.get(j, c);
                    if c == j || is_inf(rjc) {
                        continue;
                    }
                    let cand = base + rjc;
                    if c == a {
                        if closes(cand) && cycle_of(route, cand, (route == &e_primary).then_some((a, j))) {
                            return true;
                        }
                        continue;
                    }
                    if let Some(pos) = route.iter().position(|&v| v == c) {
                        let prefix = r.walk_sum(&route[..=pos]);
                        let v = cand - prefix;
                        if closes(v) && cycle_of(&route[pos..], v, None) {
                            return true;
                        }
                        continue;
                    }
                    if !acc.accepts(cand) {
                        continue;
                    }
                    let mut next = route.clone();
                    next.push(c);
                    if t.offer(a, c, cand, next.clone()) {
                        changed = true;
                        extended = true;
                        let v = add(cand, r.get(c, a));
                        let primary = t.entry(a, c).is_some_and(|e| e.routes[0] == next);
                        if closes(v) && cycle_of(&next, v, primary.then_some((a, c))) {
                            return true;
                        }
                    }
                }
                // a recorded path j -> c
                for c in 0..n {
                    if c == j {
                        continue;
                    }
                    let Some(f) = t.entry(j, c) else { continue };
                    if f.routes[0].len() <= 2 {
                        continue;
                    }
                    let cand = base + f.value;
                    let tails: Vec<Vec<usize>> = f.routes.iter().map(|x| x[1..].to_vec()).collect();
                    for tail in tails {
                        let interior = &tail[..tail.len() - 1];
                        if interior.iter().any(|v| route.contains(v)) {
                            continue;
                        }
                        if c == a {
                            let mut walk = route.clone();
                            walk.extend_from_slice(interior);
                            if closes(cand) && cycle_of(&walk, cand, None) {
                                return true;
                            }
                            continue;
                        }
                        if route.contains(&c) || !acc.accepts(cand) {
                            continue;
                        }
                        let mut next = route.clone();
                        next.extend_from_slice(&tail);
                        if t.offer(a, c, cand, next.clone()) {
                            changed = true;
                            extended = true;
                            let v = add(cand, r.get(c, a));
                            let primary = t.entry(a, c).is_some_and(|e| e.routes[0] == next);
                        if closes(v) && cycle_of(&next, v, primary.then_some((a, c))) {
                                return true;
                            }
                        }
                    }
                }
            }
            if let Some(e) = t.entries[a * n + j].as_mut() {
                if extended {
                    e.status = EntryStatus::Active;
                } else if e.status != EntryStatus::Initial {
                    e.status = EntryStatus::Inactive;
                }
            }
        }
    }
    changed
}

/// Full vertex sequence of the recorded path `a -> b`, expanded from the
/// predecessor links right to left.
pub fn recover_path(t: &PathTable, a: usize, b: usize) -> Result<Vec<usize>, Phase2Error> {
    let e = t.entry(a, b).ok_or(Phase2Error::NoEntry(a, b))?;
    let route = &e.routes[0];
    let mut rev = vec![b];
    let mut k = route.len() - 1;
    while k > 0 {
        k -= 1;
        rev.push(route[k]);
        if rev.len() > t.n {
            return Err(Phase2Error::CorruptTable(a, b));
        }
    }
    if rev.last() != Some(&a) {
        return Err(Phase2Error::CorruptTable(a, b));
    }
    rev.reverse();
    Ok(rev)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Phase2Config {
    /// Keep up to a few equal-valued alternative routes per entry.
    pub keep_equal_paths: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Phase2Step {
    pub cycle: Cycle,
    pub total: Cost,
    pub passes: usize,
    pub value_before: Cost,
    pub value_after: Cost,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Phase2Outcome {
    pub derangement: Derangement,
    pub value: Cost,
    pub steps: Vec<Phase2Step>,
    pub passes: usize,
    /// Cheapest tour among the derangements visited, the start included.
    pub best_tour: Option<(Derangement, Cost)>,
}

/// Searches one reduced matrix for a negative cycle.
pub fn find_negative_cycle(
    r: &ReducedMatrix,
    cfg: &Phase2Config,
    value: Cost,
    trace: &mut Trace,
) -> Result<(Option<FoundCycle>, usize), Phase2Error> {
    let n = r.n();
    let mut t = PathTable::new(r, Acceptance::Negative, cfg.keep_equal_paths);
    let limit = n + 1;
    for pass in 1..=limit {
        let out = fw_pass(r, &mut t);
        trace.record(|| TraceEvent::PassCompleted {
            pass,
            changed: out.changed,
            recorded: t.recorded(),
            value,
        });
        if out.found.is_some() || !out.changed {
            return Ok((out.found, pass));
        }
    }
    Err(Phase2Error::PassLimit(limit))
}

/// Applies negative cycles of the reduced matrix until none remain.
pub fn run_phase2(
    m: &CostMatrix,
    d: &Derangement,
    cfg: &Phase2Config,
    trace: &mut Trace,
) -> Result<Phase2Outcome, Phase2Error> {
    let mut d = d.clone();
    let mut value = m.derangement_value(&d);
    let mut best_tour = d.is_tour().then(|| (d.clone(), value));
    let mut steps = Vec::new();
    let mut passes = 0;
    loop {
        let r = build_reduced(m, &d);
        let (found, used) = find_negative_cycle(&r, cfg, value, trace)?;
        passes += used;
        let Some(found) = found else {
            trace.record(|| TraceEvent::AssignmentOptimal { value });
            break;
        };
        trace.record(|| TraceEvent::CycleFound {
            cycle: found.cycle.one_based(),
            cycle_value: found.value,
            value,
        });
        let set = PermSet::single(found.cycle.clone());
        let next = d
            .apply(&set)
            .expect("finite reduced arcs never map a vertex onto itself");
        let after = m.derangement_value(&next);
        debug_assert_eq!(after, value + found.value);
        trace.record(|| TraceEvent::CycleApplied {
            phase: 2,
            cycles: set_one_based(&set),
            total: found.value,
            value_before: value,
            value: after,
        });
        steps.push(Phase2Step {
            cycle: found.cycle,
            total: found.value,
            passes: used,
            value_before: value,
            value_after: after,
        });
        d = next;
        value = after;
        if d.is_tour() && best_tour.as_ref().is_none_or(|(_, v)| value < *v) {
            best_tour = Some((d.clone(), value));
        }
    }
    Ok(Phase2Outcome {
        derangement: d,
        value,
        steps,
        passes,
        best_tour,
    })
}
