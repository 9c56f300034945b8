//! Greedy derangement improvement.
//!
//! From a start vertex with negative `DIFF`, a trial path follows the cheapest
//! admissible M-arc out of each vertex, translated into a permutation arc
//! through `D⁻¹`, until a vertex repeats. The path yields candidate cycles
//! (the full cycle, every prefix cycle, and a two-cycle split at the repeated
//! vertex); the most negative candidate over all trials of the start vertex
//! is applied.

use crate::matrix::{Cost, CostMatrix};
use crate::minm::{build_row_form, SortedRowIndex};
use crate::perm::{Cycle, Derangement, PermSet, ValuedCycle};
use crate::trace::{set_one_based, Trace, TraceEvent};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Phase1Config {
    /// Trials per start vertex; trial `k` starts on the `k`-th admissible
    /// column among the first `trials_per_vertex` columns.
    pub trials_per_vertex: usize,
    /// Consecutive unproductive start vertices before giving up.
    pub vertices_before_giving_up: usize,
}

impl Phase1Config {
    /// `⌊ln n⌋ + 1` for both limits.
    pub fn for_size(n: usize) -> Self {
        let k = (n as f64).ln().floor() as usize + 1;
        Phase1Config {
            trials_per_vertex: k,
            vertices_before_giving_up: k,
        }
    }
}

/// A grown trial path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialPath {
    vertices: Vec<usize>,
    columns: Vec<usize>,
    deltas: Vec<Cost>,
    closing: Option<usize>,
}

impl TrialPath {
    /// Path vertices; when `closing` is set the last vertex repeats an earlier one.
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    /// 1-based MIN column that supplied each arc.
    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    /// Value change contributed by each arc.
    pub fn deltas(&self) -> &[Cost] {
        &self.deltas
    }

    pub fn closing(&self) -> Option<usize> {
        self.closing
    }

    /// Distinct vertices, i.e. the path without its closing repeat.
    pub fn simple(&self) -> &[usize] {
        match self.closing {
            Some(_) => &self.vertices[..self.vertices.len() - 1],
            None => &self.vertices,
        }
    }
}

/// Why a trial produced no path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dead {
    /// No admissible column for this trial at the start vertex.
    NoColumn,
    /// The start arc does not improve on the current arc.
    NonNegativeStart,
}

#[derive(Clone, Copy, Debug)]
struct Step {
    next: usize,
    column: usize,
    delta: Cost,
}

/// Continuations of non-start vertices under a fixed derangement. The
/// successor of a vertex does not depend on the trial, so later trials of the
/// same start vertex reuse what earlier ones computed.
struct Successors<'a> {
    m: &'a CostMatrix,
    idx: &'a SortedRowIndex,
    d: &'a Derangement,
    memo: Vec<Option<Option<Step>>>,
}

impl<'a> Successors<'a> {
    fn new(m: &'a CostMatrix, idx: &'a SortedRowIndex, d: &'a Derangement) -> Self {
        Successors {
            m,
            idx,
            d,
            memo: vec![None; m.n()],
        }
    }

    fn step_at(&self, x: usize, column: usize) -> Step {
        let t = self.idx.column(x, column);
        Step {
            next: self.d.preimage(t),
            column,
            delta: self.m.get(x, t) - self.m.get(x, self.d.image(x)),
        }
    }

    /// Column 1, or the next column when column 1 is the arc of `D` itself.
    fn get(&mut self, x: usize) -> Option<Step> {
        if let Some(s) = self.memo[x] {
            return s;
        }
        let n = self.m.n();
        let s = (1..n)
            .map(|c| self.step_at(x, c))
            .find(|s| s.next != x);
        self.memo[x] = Some(s);
        s
    }

    fn start(&self, x: usize, trial: usize, cap: usize) -> Option<Step> {
        let cap = cap.min(self.m.n() - 1);
        (1..=cap)
            .map(|c| self.step_at(x, c))
            .filter(|s| s.next != x)
            .nth(trial.checked_sub(1)?)
    }
}

/// Grows the trial path for `start` on trial `trial` (1-based).
pub fn grow_trial_path(
    m: &CostMatrix,
    idx: &SortedRowIndex,
    d: &Derangement,
    start: usize,
    trial: usize,
    cfg: &Phase1Config,
) -> Result<TrialPath, Dead> {
    let mut succ = Successors::new(m, idx, d);
    grow(&mut succ, start, trial, cfg)
}

fn grow(succ: &mut Successors<'_>, start: usize, trial: usize, cfg: &Phase1Config) -> Result<TrialPath, Dead> {
    let n = succ.m.n();
    let first = succ
        .start(start, trial, cfg.trials_per_vertex)
        .ok_or(Dead::NoColumn)?;
    if first.delta >= 0 {
        return Err(Dead::NonNegativeStart);
    }
    let mut on_path = vec![false; n];
    on_path[start] = true;
    let mut path = TrialPath {
        vertices: vec![start],
        columns: Vec::new(),
        deltas: Vec::new(),
        closing: None,
    };
    let mut running: Cost = 0;
    let mut step = Some(first);
    while let Some(s) = step {
        if running + s.delta > 0 {
            break;
        }
        running += s.delta;
        path.vertices.push(s.next);
        path.columns.push(s.column);
        path.deltas.push(s.delta);
        if on_path[s.next] {
            path.closing = Some(s.next);
            break;
        }
        on_path[s.next] = true;
        step = succ.get(s.next);
    }
    Ok(path)
}

/// A candidate improvement built from a trial path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    cycles: Vec<ValuedCycle>,
    total: Cost,
}

impl Candidate {
    fn new(cycles: Vec<ValuedCycle>) -> Self {
        let total = cycles.iter().map(ValuedCycle::total).sum();
        Candidate { cycles, total }
    }

    pub fn cycles(&self) -> &[ValuedCycle] {
        &self.cycles
    }

    pub fn total(&self) -> Cost {
        self.total
    }

    pub fn perm_set(&self) -> PermSet {
        PermSet::new(self.cycles.iter().map(|c| c.cycle().clone()).collect())
            .expect("candidate cycles are disjoint")
    }
}

/// Candidate permutations of a trial path: the full cycle over its distinct
/// vertices, every shorter prefix cycle from the start, and, when the path
/// closes on an interior vertex, the split into the prefix before that vertex
/// and the loop from it. Candidates whose terminal arc lands on a loop of `D`
/// are dropped.
pub fn candidates_from_path(m: &CostMatrix, d: &Derangement, path: &TrialPath) -> Vec<Candidate> {
    let simple = path.simple();
    let k = simple.len();
    let mut out = Vec::new();
    if k < 2 {
        return out;
    }
    let value = |verts: &[usize]| -> Option<ValuedCycle> {
        let c = Cycle::new(verts.to_vec()).ok()?;
        m.cycle_value(d, &c).ok()
    };
    if let Some(c) = value(simple) {
        out.push(Candidate::new(vec![c]));
    }
    for len in 2..k {
        if let Some(c) = value(&simple[..len]) {
            out.push(Candidate::new(vec![c]));
        }
    }
    if let Some(closing) = path.closing() {
        let pos = simple
            .iter()
            .position(|&v| v == closing)
            .expect("closing vertex lies on the path");
        if pos > 0 {
            let looped = value(&simple[pos..]);
            let head = if pos >= 2 { Some(value(&simple[..pos])) } else { None };
            match (head, looped) {
                (Some(Some(h)), Some(l)) => out.push(Candidate::new(vec![h, l])),
                (None, Some(l)) => out.push(Candidate::new(vec![l])),
                _ => {}
            }
        }
    }
    out
}

/// Result of one improvement step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Improved {
        start: usize,
        derangement: Derangement,
        applied: Candidate,
    },
    Exhausted {
        vertices_tried: Vec<usize>,
    },
}

/// Tries start vertices in ascending `DIFF` order and applies the best
/// negative candidate of the first productive one.
pub fn phase1_step(
    m: &CostMatrix,
    idx: &SortedRowIndex,
    d: &Derangement,
    cfg: &Phase1Config,
    trace: &mut Trace,
) -> StepOutcome {
    let rf = build_row_form(m, idx, d);
    let value = m.derangement_value(d);
    let mut succ = Successors::new(m, idx, d);
    let mut tried = Vec::new();
    let mut failures = 0;
    for start in rf.improving_vertices() {
        if failures >= cfg.vertices_before_giving_up {
            break;
        }
        tried.push(start);
        trace.record(|| TraceEvent::StartVertex {
            vertex: start + 1,
            diff: rf.diff(start),
            value,
        });
        let mut best: Option<Candidate> = None;
        for trial in 1..=cfg.trials_per_vertex {
            let Ok(path) = grow(&mut succ, start, trial, cfg) else {
                continue;
            };
            trace.record(|| TraceEvent::TrialPath {
                start: start + 1,
                trial,
                vertices: path.vertices().iter().map(|v| v + 1).collect(),
                columns: path.columns().to_vec(),
                closing: path.closing().map(|v| v + 1),
                value,
            });
            for cand in candidates_from_path(m, d, &path) {
                trace.record(|| TraceEvent::CandidateValued {
                    cycles: set_one_based(&cand.perm_set()),
                    total: cand.total(),
                    value,
                });
                if best.as_ref().is_none_or(|b| cand.total() < b.total()) {
                    best = Some(cand);
                }
            }
        }
        match best {
            Some(cand) if cand.total() < 0 => {
                let next = d
                    .apply(&cand.perm_set())
                    .expect("loop-checked candidates keep the derangement property");
                return StepOutcome::Improved {
                    start,
                    derangement: next,
                    applied: cand,
                };
            }
            _ => failures += 1,
        }
    }
    StepOutcome::Exhausted {
        vertices_tried: tried,
    }
}

/// One applied improvement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AppliedStep {
    pub start: usize,
    pub cycles: PermSet,
    pub total: Cost,
    pub value_before: Cost,
    pub value_after: Cost,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Phase1Outcome {
    pub derangement: Derangement,
    pub value: Cost,
    pub steps: Vec<AppliedStep>,
    /// Cheapest tour among every derangement visited, the start included.
    pub best_tour: Option<(Derangement, Cost)>,
}

/// Applies [`phase1_step`] until it is exhausted.
pub fn run_phase1(
    m: &CostMatrix,
    d0: &Derangement,
    cfg: &Phase1Config,
    trace: &mut Trace,
) -> Phase1Outcome {
    let idx = SortedRowIndex::build(m);
    let mut d = d0.clone();
    let mut value = m.derangement_value(&d);
    let mut best_tour = d.is_tour().then(|| (d.clone(), value));
    let mut steps = Vec::new();
    loop {
        match phase1_step(m, &idx, &d, cfg, trace) {
            StepOutcome::Improved {
                start,
                derangement,
                applied,
            } => {
                let after = m.derangement_value(&derangement);
                debug_assert_eq!(after, value + applied.total());
                let set = applied.perm_set();
                trace.record(|| TraceEvent::CycleApplied {
                    phase: 1,
                    cycles: set_one_based(&set),
                    total: applied.total(),
                    value_before: value,
                    value: after,
                });
                steps.push(AppliedStep {
                    start,
                    cycles: set,
                    total: applied.total(),
                    value_before: value,
                    value_after: after,
                });
                d = derangement;
                value = after;
                if d.is_tour() && best_tour.as_ref().is_none_or(|(_, v)| value < *v) {
                    best_tour = Some((d.clone(), value));
                }
            }
            StepOutcome::Exhausted { vertices_tried } => {
                trace.record(|| TraceEvent::Phase1Exhausted {
                    vertices_tried: vertices_tried.iter().map(|v| v + 1).collect(),
                    value,
                });
                break;
            }
        }
    }
    Phase1Outcome {
        derangement: d,
        value,
        steps,
        best_tour,
    }
}
