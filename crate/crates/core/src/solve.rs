//! Phase orchestration and the solve report.

use std::fmt::{self, Write as _};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Phase2Error, Phase3Error};
use crate::instance::checksum;
use crate::matrix::{Cost, CostMatrix};
use crate::perm::{Derangement, PermSet};
use crate::phase1::{run_phase1, Phase1Config};
use crate::phase2::{run_phase2, Phase2Config};
use crate::phase3::{run_phase3, Exactness, Phase3Config};
use crate::trace::{set_one_based, Trace, TraceEvent};

/// Which phases to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Phases {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "12")]
    OneTwo,
    #[serde(rename = "123")]
    All,
}

impl Phases {
    pub fn phase2(self) -> bool {
        self != Phases::One
    }

    pub fn phase3(self) -> bool {
        self == Phases::All
    }
}

impl std::str::FromStr for Phases {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "1" => Ok(Phases::One),
            "12" => Ok(Phases::OneTwo),
            "123" => Ok(Phases::All),
            _ => Err(format!("phases must be 1, 12 or 123, got {s:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveConfig {
    pub phases: Phases,
    pub seed: u64,
    /// Phase 1 runs: the first from the tour `1 -> 2 -> ... -> n -> 1`, the
    /// rest from random tours drawn with `seed`.
    pub restarts: usize,
    pub keep_equal_paths: bool,
    pub budget_cap: Option<Cost>,
    pub trace: bool,
    pub timings: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            phases: Phases::All,
            seed: 0,
            restarts: 1,
            keep_equal_paths: false,
            budget_cap: None,
            trace: false,
            timings: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Phase2(#[from] Phase2Error),
    #[error(transparent)]
    Phase3(#[from] Phase3Error),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InstanceDigest {
    pub n: usize,
    pub checksum: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AppliedCycles {
    pub cycles: Vec<Vec<usize>>,
    pub total: Cost,
    pub value: Cost,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RestartReport {
    pub restart: usize,
    pub initial_value: Cost,
    pub final_value: Cost,
    pub applied: Vec<AppliedCycles>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Phase1Report {
    pub restarts: Vec<RestartReport>,
    /// Restart whose result was handed on.
    pub chosen: usize,
    pub final_value: Cost,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Phase2Report {
    pub initial_value: Cost,
    pub applied: Vec<AppliedCycles>,
    pub passes: usize,
    pub final_value: Cost,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Phase3Report {
    pub initial_value: Cost,
    pub cycles_used: Vec<Vec<usize>>,
    pub added_value: Cost,
    pub final_value: Cost,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timings {
    pub phase1_ms: f64,
    pub phase2_ms: Option<f64>,
    pub phase3_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub instance: InstanceDigest,
    pub phases: Phases,
    pub initial_value: Cost,
    pub phase1: Phase1Report,
    pub phase2: Option<Phase2Report>,
    pub phase3: Option<Phase3Report>,
    /// Assignment optimum, known once Phase 2 has run.
    pub ap_value: Option<Cost>,
    /// Final derangement in cycle notation.
    pub final_derangement: Vec<Vec<usize>>,
    /// Best tour found, as a vertex sequence starting at 1.
    pub tour: Option<Vec<usize>>,
    pub tour_value: Option<Cost>,
    pub exactness: Option<Exactness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub report: SolveReport,
    pub tour: Option<Derangement>,
    pub trace: Vec<TraceEvent>,
}

fn applied(cycles: &PermSet, total: Cost, value: Cost) -> AppliedCycles {
    AppliedCycles {
        cycles: set_one_based(cycles),
        total,
        value,
    }
}

/// Tour as a 1-based vertex sequence from vertex 1.
pub fn tour_sequence(t: &Derangement) -> Vec<usize> {
    let mut seq = vec![1];
    let mut x = t.image(0);
    while x != 0 {
        seq.push(x + 1);
        x = t.image(x);
    }
    seq
}

fn keep_better(best: &mut Option<(Derangement, Cost)>, cand: Option<(Derangement, Cost)>) {
    if let Some((d, v)) = cand {
        if best.as_ref().is_none_or(|(_, b)| v < *b) {
            *best = Some((d, v));
        }
    }
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

pub fn solve(m: &CostMatrix, cfg: &SolveConfig) -> Result<SolveOutcome, SolveError> {
    let n = m.n();
    let mut trace = if cfg.trace {
        Trace::enabled()
    } else {
        Trace::disabled()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let p1cfg = Phase1Config::for_size(n);

    let t1 = Instant::now();
    let mut restarts = Vec::new();
    let mut best_tour: Option<(Derangement, Cost)> = None;
    let mut chosen: Option<(usize, Derangement, Cost)> = None;
    for k in 0..cfg.restarts.max(1) {
        let d0 = if k == 0 {
            Derangement::cyclic(n)
        } else {
            Derangement::random_tour(n, &mut rng)
        };
        let v0 = m.derangement_value(&d0);
        trace.record(|| TraceEvent::Start {
            restart: k,
            tour: tour_sequence(&d0),
            value: v0,
        });
        let out = run_phase1(m, &d0, &p1cfg, &mut trace);
        restarts.push(RestartReport {
            restart: k,
            initial_value: v0,
            final_value: out.value,
            applied: out
                .steps
                .iter()
                .map(|s| applied(&s.cycles, s.total, s.value_after))
                .collect(),
        });
        keep_better(&mut best_tour, out.best_tour);
        if chosen.as_ref().is_none_or(|(_, _, v)| out.value < *v) {
            chosen = Some((k, out.derangement, out.value));
        }
    }
    let (chosen_k, mut d, mut value) = chosen.expect("at least one restart");
    let phase1_ms = elapsed_ms(t1);
    let initial_value = restarts[0].initial_value;
    let phase1 = Phase1Report {
        restarts,
        chosen: chosen_k,
        final_value: value,
    };

    let mut phase2 = None;
    let mut phase2_ms = None;
    let mut ap_value = None;
    if cfg.phases.phase2() {
        let t2 = Instant::now();
        let p2cfg = Phase2Config {
            keep_equal_paths: cfg.keep_equal_paths,
        };
        let out = run_phase2(m, &d, &p2cfg, &mut trace)?;
        phase2 = Some(Phase2Report {
            initial_value: value,
            applied: out
                .steps
                .iter()
                .map(|s| applied(&PermSet::single(s.cycle.clone()), s.total, s.value_after))
                .collect(),
            passes: out.passes,
            final_value: out.value,
        });
        keep_better(&mut best_tour, out.best_tour);
        d = out.derangement;
        value = out.value;
        ap_value = Some(value);
        phase2_ms = Some(elapsed_ms(t2));
    }

    let mut phase3 = None;
    let mut phase3_ms = None;
    let mut exactness = None;
    if cfg.phases.phase3() {
        let t3 = Instant::now();
        let p3cfg = Phase3Config {
            budget_cap: cfg.budget_cap,
            ..Phase3Config::default()
        };
        let seen = best_tour.as_ref().map(|(t, _)| t);
        let res = run_phase3(m, &d, seen, &p3cfg, &mut trace)?;
        let tv = value + res.added_value;
        phase3 = Some(Phase3Report {
            initial_value: value,
            cycles_used: set_one_based(&res.cycles_used),
            added_value: res.added_value,
            final_value: tv,
        });
        exactness = Some(res.exactness);
        best_tour = Some((res.tour.clone(), tv));
        d = res.tour;
        phase3_ms = Some(elapsed_ms(t3));
    } else if best_tour.is_some() {
        exactness = Some(Exactness::Heuristic);
    }

    let report = SolveReport {
        instance: InstanceDigest {
            n,
            checksum: checksum(m),
        },
        phases: cfg.phases,
        initial_value,
        phase1,
        phase2,
        phase3,
        ap_value,
        final_derangement: d.cycles().iter().map(|c| c.iter().map(|v| v + 1).collect()).collect(),
        tour: best_tour.as_ref().map(|(t, _)| tour_sequence(t)),
        tour_value: best_tour.as_ref().map(|(_, v)| *v),
        exactness,
        timings: cfg.timings.then_some(Timings {
            phase1_ms,
            phase2_ms,
            phase3_ms,
        }),
    };
    Ok(SolveOutcome {
        report,
        tour: best_tour.map(|(t, _)| t),
        trace: trace.into_events(),
    })
}

fn fmt_cycles(cycles: &[Vec<usize>]) -> String {
    if cycles.is_empty() {
        return "()".into();
    }
    cycles
        .iter()
        .map(|c| {
            let inner: Vec<String> = c.iter().map(|v| v.to_string()).collect();
            format!("({})", inner.join(" "))
        })
        .collect()
}

impl fmt::Display for SolveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        writeln!(s, "instance n={} sha256={}", self.instance.n, self.instance.checksum)?;
        writeln!(s, "initial value {}", self.initial_value)?;
        for r in &self.phase1.restarts {
            writeln!(
                s,
                "phase 1 restart {}: {} -> {} ({} steps)",
                r.restart,
                r.initial_value,
                r.final_value,
                r.applied.len()
            )?;
            for a in &r.applied {
                writeln!(s, "  {} total {} value {}", fmt_cycles(&a.cycles), a.total, a.value)?;
            }
        }
        if let Some(p) = &self.phase2 {
            writeln!(
                s,
                "phase 2: {} -> {} ({} cycles, {} passes)",
                p.initial_value,
                p.final_value,
                p.applied.len(),
                p.passes
            )?;
            for a in &p.applied {
                writeln!(s, "  {} total {} value {}", fmt_cycles(&a.cycles), a.total, a.value)?;
            }
        }
        if let Some(p) = &self.phase3 {
            writeln!(
                s,
                "phase 3: {} -> {} via {} (added {})",
                p.initial_value,
                p.final_value,
                fmt_cycles(&p.cycles_used),
                p.added_value
            )?;
        }
        if let Some(v) = self.ap_value {
            writeln!(s, "ap_value {v}")?;
        }
        writeln!(s, "final derangement {}", fmt_cycles(&self.final_derangement))?;
        match (&self.tour, self.tour_value) {
            (Some(t), Some(v)) => {
                let seq: Vec<String> = t.iter().map(|x| x.to_string()).collect();
                writeln!(s, "tour {}", seq.join(" "))?;
                writeln!(s, "tour_value {v}")?;
            }
            _ => writeln!(s, "tour none")?,
        }
        if let Some(e) = self.exactness {
            let e = match e {
                Exactness::CertifiedOptimal => "certified_optimal",
                Exactness::Heuristic => "heuristic",
            };
            writeln!(s, "exactness {e}")?;
        }
        if let Some(t) = &self.timings {
            write!(s, "timings phase1 {:.3} ms", t.phase1_ms)?;
            if let Some(x) = t.phase2_ms {
                write!(s, ", phase2 {x:.3} ms")?;
            }
            if let Some(x) = t.phase3_ms {
                write!(s, ", phase3 {x:.3} ms")?;
            }
            writeln!(s)?;
        }
        f.write_str(&s)
    }
}
