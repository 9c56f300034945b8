//! Solver trace events. Vertices are recorded 1-based; `value` is always the
//! derangement value after the event.

use std::fmt;

use serde::Serialize;

use crate::matrix::Cost;
use crate::perm::{Cycle, PermSet};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Start {
        restart: usize,
        tour: Vec<usize>,
        value: Cost,
    },
    StartVertex {
        vertex: usize,
        diff: Cost,
        value: Cost,
    },
    TrialPath {
        start: usize,
        trial: usize,
        vertices: Vec<usize>,
        columns: Vec<usize>,
        closing: Option<usize>,
        value: Cost,
    },
    CandidateValued {
        cycles: Vec<Vec<usize>>,
        total: Cost,
        value: Cost,
    },
    CycleApplied {
        phase: u8,
        cycles: Vec<Vec<usize>>,
        total: Cost,
        value_before: Cost,
        value: Cost,
    },
    Phase1Exhausted {
        vertices_tried: Vec<usize>,
        value: Cost,
    },
    PassCompleted {
        pass: usize,
        changed: bool,
        recorded: usize,
        value: Cost,
    },
    CycleFound {
        cycle: Vec<usize>,
        cycle_value: Cost,
        value: Cost,
    },
    AssignmentOptimal {
        value: Cost,
    },
    BudgetSearched {
        budget: Cost,
        cycles: usize,
        value: Cost,
    },
    TourPatched {
        cycles: Vec<Vec<usize>>,
        added: Cost,
        value: Cost,
    },
}

pub(crate) fn one_based(c: &Cycle) -> Vec<usize> {
    c.one_based()
}

pub(crate) fn set_one_based(s: &PermSet) -> Vec<Vec<usize>> {
    s.cycles().iter().map(one_based).collect()
}

fn fmt_cycles(f: &mut fmt::Formatter<'_>, cycles: &[Vec<usize>]) -> fmt::Result {
    if cycles.is_empty() {
        return write!(f, "()");
    }
    for c in cycles {
        fmt_list(f, c, "(", ")")?;
    }
    Ok(())
}

fn fmt_list(f: &mut fmt::Formatter<'_>, v: &[usize], open: &str, close: &str) -> fmt::Result {
    write!(f, "{open}")?;
    for (k, x) in v.iter().enumerate() {
        if k > 0 {
            write!(f, " ")?;
        }
        write!(f, "{x}")?;
    }
    write!(f, "{close}")
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEvent::Start {
                restart,
                tour,
                value,
            } => {
                write!(f, "start restart={restart} tour=")?;
                fmt_list(f, tour, "(", ")")?;
                write!(f, " value={value}")
            }
            TraceEvent::StartVertex { vertex, diff, value } => {
                write!(f, "start_vertex {vertex} diff={diff} value={value}")
            }
            TraceEvent::TrialPath {
                start,
                trial,
                vertices,
                columns,
                closing,
                value,
            } => {
                write!(f, "trial start={start} trial={trial} path=")?;
                fmt_list(f, vertices, "[", "]")?;
                write!(f, " columns=")?;
                fmt_list(f, columns, "[", "]")?;
                match closing {
                    Some(c) => write!(f, " closing={c}")?,
                    None => write!(f, " closing=-")?,
                }
                write!(f, " value={value}")
            }
            TraceEvent::CandidateValued {
                cycles,
                total,
                value,
            } => {
                write!(f, "candidate ")?;
                fmt_cycles(f, cycles)?;
                write!(f, " total={total} value={value}")
            }
            TraceEvent::CycleApplied {
                phase,
                cycles,
                total,
                value_before,
                value,
            } => {
                write!(f, "applied phase={phase} ")?;
                fmt_cycles(f, cycles)?;
                write!(f, " total={total} before={value_before} value={value}")
            }
            TraceEvent::Phase1Exhausted {
                vertices_tried,
                value,
            } => {
                write!(f, "phase1_exhausted tried=")?;
                fmt_list(f, vertices_tried, "[", "]")?;
                write!(f, " value={value}")
            }
            TraceEvent::PassCompleted {
                pass,
                changed,
                recorded,
                value,
            } => write!(
                f,
                "pass {pass} changed={changed} recorded={recorded} value={value}"
            ),
            TraceEvent::CycleFound {
                cycle,
                cycle_value,
                value,
            } => {
                write!(f, "cycle_found ")?;
                fmt_list(f, cycle, "(", ")")?;
                write!(f, " cycle_value={cycle_value} value={value}")
            }
            TraceEvent::AssignmentOptimal { value } => write!(f, "assignment_optimal value={value}"),
            TraceEvent::BudgetSearched {
                budget,
                cycles,
                value,
            } => write!(f, "budget {budget} cycles={cycles} value={value}"),
            TraceEvent::TourPatched {
                cycles,
                added,
                value,
            } => {
                write!(f, "tour_patched ")?;
                fmt_cycles(f, cycles)?;
                write!(f, " added={added} value={value}")
            }
        }
    }
}

/// Event collector. A disabled trace drops events without building them.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    enabled: bool,
    events: Vec<TraceEvent>,
}

impl Trace {
    pub fn enabled() -> Self {
        Trace {
            enabled: true,
            events: Vec::new(),
        }
    }

    pub fn disabled() -> Self {
        Trace::default()
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    #[inline]
    pub fn record(&mut self, event: impl FnOnce() -> TraceEvent) {
        if self.enabled {
            self.events.push(event());
        }
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn into_events(self) -> Vec<TraceEvent> {
        self.events
    }
}
