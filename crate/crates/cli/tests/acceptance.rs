//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use permcycle::instance::{gen_instance, render_matrix};
use permcycle::matrix::is_inf;
use permcycle::minm::{build_min_index, build_row_form};
use permcycle::oracle::{bellman_negative_cycle, brute_cycles, held_karp_tsp, hungarian_ap};
use permcycle::phase1::{candidates_from_path, grow_trial_path, run_phase1, Phase1Config};
use permcycle::phase2::{build_reduced, fw_pass, recover_path, run_phase2, PathTable, Phase2Config};
use permcycle::phase3::{collect_bounded_cycles, run_phase3, Exactness, Phase3Config};
use permcycle::solve::{solve, Phases, SolveConfig};
use permcycle::trace::{Trace, TraceEvent};
use permcycle::{example2, Cost, CoreError, CostMatrix, Cycle, Derangement, PermSet};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/example2.mat")
}

fn permcycle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_permcycle"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn cycle(v: &[usize]) -> Cycle {
    Cycle::from_one_based(v).unwrap()
}

fn sigma_of(m: &CostMatrix) -> Result<(Derangement, Cost, Option<Derangement>), String> {
    let n = m.n();
    let p1 = run_phase1(m, &Derangement::cyclic(n), &Phase1Config::for_size(n), &mut Trace::disabled());
    let p2 = run_phase2(m, &p1.derangement, &Phase2Config::default(), &mut Trace::disabled())
        .map_err(|e| e.to_string())?;
    let seen = [p1.best_tour, p2.best_tour]
        .into_iter()
        .flatten()
        .min_by_key(|(_, v)| *v)
        .map(|(t, _)| t);
    Ok((p2.derangement, p2.value, seen))
}

fn criterion_1() -> Check {
    let path = fixture();
    let t = Instant::now();
    let out = permcycle(&["solve", path.to_str().unwrap(), "--phases", "123", "--format", "json"]);
    let elapsed = t.elapsed();
    ensure!(out.status.success(), "solve exited with {}", out.status);
    let report: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let ap = report["ap_value"].as_i64();
    let tour = report["tour_value"].as_i64();
    let exact = report["exactness"].as_str();
    ensure!(ap == Some(212), "ap_value {ap:?}");
    ensure!(tour == Some(213), "tour_value {tour:?}");
    ensure!(exact == Some("certified_optimal"), "exactness {exact:?}");
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("ap 212, tour 213, certified_optimal in {elapsed:.2?}"))
}

fn criterion_2() -> Check {
    let m = example2();
    let (ap, _) = hungarian_ap(&m).map_err(|e| e.to_string())?;
    let t = Instant::now();
    let (tsp, _) = held_karp_tsp(&m).map_err(|e| e.to_string())?;
    let hk_time = t.elapsed();
    let report = solve(&m, &SolveConfig::default()).map_err(|e| e.to_string())?.report;
    ensure!(ap == 212, "hungarian {ap}");
    ensure!(tsp == 213, "held-karp {tsp}");
    ensure!(report.ap_value == Some(ap), "solver ap {:?}", report.ap_value);
    ensure!(report.tour_value == Some(tsp), "solver tour {:?}", report.tour_value);
    ensure!(hk_time < Duration::from_secs(60), "held-karp took {hk_time:?}");
    Ok(format!("hungarian 212, held-karp 213 ({hk_time:.2?}), solver agrees"))
}

fn criterion_3() -> Check {
    let count = 240;
    for i in 0..count {
        let n = 4 + i % 6;
        let m = gen_instance(n, 99, 1000 + i as u64);
        let (sigma, value, _) = sigma_of(&m)?;
        let (ap, _) = hungarian_ap(&m).map_err(|e| e.to_string())?;
        ensure!(value == ap, "instance {i} (n={n}): phase 2 {value}, hungarian {ap}");
        ensure!(
            !bellman_negative_cycle(&build_reduced(&m, &sigma)),
            "instance {i} (n={n}): negative cycle left"
        );
    }
    Ok(format!("{count} instances, n in 4..=9"))
}

fn random_derangement(n: usize, rng: &mut ChaCha8Rng) -> Derangement {
    loop {
        let mut img: Vec<usize> = (0..n).collect();
        img.shuffle(rng);
        if let Ok(d) = Derangement::new(img) {
            return d;
        }
    }
}

fn criterion_4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut valued, mut loops) = (0, 0);
    let mut i = 0u64;
    while valued < 1200 {
        i += 1;
        let n = rng.gen_range(3..=12);
        let m = gen_instance(n, 99, i);
        let d = random_derangement(n, &mut rng);
        let mut verts: Vec<usize> = (0..n).collect();
        verts.shuffle(&mut rng);
        verts.truncate(rng.gen_range(2..=n));
        let c = Cycle::new(verts).unwrap();
        let r = build_reduced(&m, &d);
        for a in 0..n {
            ensure!(r.get(a, a) == 0, "R({a},{a}) = {}", r.get(a, a));
            ensure!(is_inf(r.get(a, d.preimage(a))), "R(a, D^-1(a)) finite at {a}");
        }
        match m.cycle_value(&d, &c) {
            Ok(v) => {
                ensure!(r.cycle_sum(&c) == v.total(), "triple {i}: R-sum {} vs {}", r.cycle_sum(&c), v.total());
                valued += 1;
            }
            Err(CoreError::LoopArc(_)) => {
                ensure!(is_inf(r.cycle_sum(&c)), "triple {i}: loop arc with finite R-sum");
                loops += 1;
            }
            Err(e) => return Err(e.to_string()),
        }
    }
    Ok(format!("{valued} valued triples, {loops} loop-arc triples"))
}

fn set_of(cycles: &[Vec<usize>]) -> Result<PermSet, String> {
    let cs = cycles
        .iter()
        .map(|c| Cycle::from_one_based(c))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    PermSet::new(cs).map_err(|e| e.to_string())
}

/// Replays a trace against the matrix and checks each recorded value.
fn check_chain(m: &CostMatrix, events: &[TraceEvent], chosen: usize) -> Result<usize, String> {
    let mut finals: Vec<Derangement> = Vec::new();
    let mut cur: Option<Derangement> = None;
    let mut in_phase2 = false;
    let mut applied = 0;
    for e in events {
        match e {
            TraceEvent::Start { tour, value, .. } => {
                if let Some(d) = cur.take() {
                    finals.push(d);
                }
                let mut image = vec![0; tour.len()];
                for w in 0..tour.len() {
                    image[tour[w] - 1] = tour[(w + 1) % tour.len()] - 1;
                }
                let d = Derangement::new(image).map_err(|e| e.to_string())?;
                ensure!(m.derangement_value(&d) == *value, "start value {value}");
                cur = Some(d);
            }
            TraceEvent::CycleApplied {
                phase,
                cycles,
                total,
                value_before,
                value,
            } => {
                if *phase == 2 && !in_phase2 {
                    in_phase2 = true;
                    if let Some(d) = cur.take() {
                        finals.push(d);
                    }
                    cur = Some(finals[chosen].clone());
                }
                let d = cur.as_ref().ok_or("cycle before start")?;
                ensure!(*total < 0, "phase {phase} applied non-negative total {total}");
                ensure!(*value == value_before + total, "value {value} != {value_before} + {total}");
                ensure!(m.derangement_value(d) == *value_before, "value_before {value_before} off");
                let next = d.apply(&set_of(cycles)?).map_err(|e| e.to_string())?;
                ensure!(m.derangement_value(&next) == *value, "replayed value differs from {value}");
                cur = Some(next);
                applied += 1;
            }
            TraceEvent::AssignmentOptimal { value } if !in_phase2 => {
                in_phase2 = true;
                if let Some(d) = cur.take() {
                    finals.push(d);
                }
                cur = Some(finals[chosen].clone());
                ensure!(m.derangement_value(cur.as_ref().unwrap()) == *value, "phase 2 start value");
            }
            TraceEvent::TourPatched { cycles, added, value } => {
                let d = cur.as_ref().ok_or("patch before start")?;
                ensure!(m.derangement_value(d) + added == *value, "patched value {value}");
                let t = d.apply(&set_of(cycles)?).map_err(|e| e.to_string())?;
                ensure!(t.is_tour(), "patched derangement is not a tour");
                ensure!(m.derangement_value(&t) == *value, "replayed patch value");
            }
            _ => {}
        }
    }
    Ok(applied)
}

fn criterion_5() -> Check {
    let mut traces = 0;
    let mut applied = 0;
    let mut instances: Vec<(CostMatrix, usize)> = vec![(example2(), 1), (example2(), 3)];
    for i in 0..150u64 {
        instances.push((gen_instance(4 + (i as usize % 9), 99, 500 + i), 1 + (i as usize % 3)));
    }
    for (k, (m, restarts)) in instances.iter().enumerate() {
        let cfg = SolveConfig {
            phases: Phases::All,
            seed: k as u64,
            restarts: *restarts,
            trace: true,
            ..SolveConfig::default()
        };
        let out = solve(m, &cfg).map_err(|e| e.to_string())?;
        applied += check_chain(m, &out.trace, out.report.phase1.chosen).map_err(|e| format!("trace {k}: {e}"))?;
        traces += 1;
    }
    Ok(format!("{traces} traces, {applied} applied cycles replayed"))
}

fn criterion_6() -> Check {
    let m = example2();
    let idx = build_min_index(&m);
    let d0 = Derangement::cyclic(20);
    // (a)
    let diff = build_row_form(&m, &idx, &d0).diff(0);
    ensure!(diff == -86, "DIFF(1) = {diff}");
    // (b) totals are recomputed from the matrix; (4 14 12) is -142
    let d1 = d0.apply_cycle(&cycle(&[1, 6, 13, 19, 2, 14, 16])).unwrap();
    let p = grow_trial_path(&m, &idx, &d1, 3, 1, &Phase1Config::for_size(20)).map_err(|e| format!("{e:?}"))?;
    let verts: Vec<usize> = p.vertices().iter().map(|v| v + 1).collect();
    ensure!(verts == [4, 14, 12, 16, 5, 6, 16], "path {verts:?}");
    let totals: BTreeSet<Cost> = candidates_from_path(&m, &d1, &p)
        .iter()
        .filter(|c| c.cycles().len() == 1)
        .map(|c| c.total())
        .collect();
    let expected: BTreeSet<Cost> = [-191, -33, -142, -71].into_iter().collect();
    ensure!(totals == expected, "candidate totals {totals:?}");
    // (c)
    let d7 = Derangement::from_one_based(&[7, 8, 11, 17, 18, 14, 5, 1, 4, 12, 9, 20, 19, 13, 16, 6, 10, 15, 3, 2])
        .unwrap();
    let r = build_reduced(&m, &d7);
    let mut t = PathTable::negative(&r);
    let found = loop {
        let out = fw_pass(&r, &mut t);
        if let Some(f) = out.found {
            break f;
        }
        ensure!(out.changed, "no cycle found on the 213 tour");
    };
    ensure!(found.value == -1, "cycle value {}", found.value);
    ensure!(
        found.cycle.canonical() == cycle(&[11, 12, 20, 18, 6, 13]).canonical(),
        "cycle {}",
        found.cycle
    );
    let (a, c) = found.entry.ok_or("cycle not backed by a table entry")?;
    let path: Vec<usize> = recover_path(&t, a, c)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|v| v + 1)
        .collect();
    ensure!(path == [11, 12, 20, 18, 6, 13], "recovered {path:?}");
    Ok("DIFF(1) -86; path [4 14 12 16 5 6 16] totals {-191,-33,-142,-71}; (11 12 20 18 6 13) = -1 recovered".into())
}

fn criterion_7() -> Check {
    let count = 120;
    let mut certified = 0;
    for i in 0..count {
        let n = 5 + i % 4;
        let m = gen_instance(n, 99, 7000 + i as u64);
        let (sigma, _, seen) = sigma_of(&m)?;
        let r = build_reduced(&m, &sigma);
        let mean = r.mean_entry();
        for b in [0, 5, mean] {
            let got: BTreeSet<(Cycle, Cost)> = collect_bounded_cycles(&r, b).into_iter().collect();
            let want: BTreeSet<(Cycle, Cost)> = brute_cycles(&r, b, n).map_err(|e| e.to_string())?.into_iter().collect();
            ensure!(got == want, "instance {i} budget {b}: {} vs {} cycles", got.len(), want.len());
        }
        let res = run_phase3(&m, &sigma, seen.as_ref(), &Phase3Config::default(), &mut Trace::disabled())
            .map_err(|e| e.to_string())?;
        if res.exactness == Exactness::CertifiedOptimal {
            let (hk, _) = held_karp_tsp(&m).map_err(|e| e.to_string())?;
            let v = m.derangement_value(&res.tour);
            ensure!(v == hk, "instance {i}: certified {v}, held-karp {hk}");
            certified += 1;
        }
    }
    Ok(format!("{count} instances, budgets {{0, 5, m}}; {certified} certified tours match held-karp"))
}

fn criterion_8() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let gen = dir.path().join("g.mat");
    std::fs::write(&gen, render_matrix(&gen_instance(12, 99, 8))).map_err(|e| e.to_string())?;
    let mut runs = 0;
    for file in [fixture(), gen] {
        let f = file.to_str().unwrap();
        let mut outputs = Vec::new();
        for k in 0..2 {
            let report = dir.path().join(format!("r{k}.json"));
            let out = permcycle(&[
                "solve", f, "--seed", "42", "--restarts", "4", "--trace", "json", "--format", "json", "--report",
                report.to_str().unwrap(),
            ]);
            ensure!(out.status.success(), "solve exited with {}", out.status);
            let file_report = std::fs::read(&report).map_err(|e| e.to_string())?;
            outputs.push((out.stdout, out.stderr, file_report));
            runs += 1;
        }
        ensure!(outputs[0].0 == outputs[1].0, "stdout reports differ for {f}");
        ensure!(outputs[0].1 == outputs[1].1, "traces differ for {f}");
        ensure!(outputs[0].2 == outputs[1].2, "report files differ for {f}");
    }
    Ok(format!("{runs} runs, reports and traces byte-identical"))
}

type Criterion = (&'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 8] = [
        ("example end-to-end: ap 212, tour 213, certified", criterion_1),
        ("oracle agreement at n = 20", criterion_2),
        ("phase 2 exactness on random instances", criterion_3),
        ("reduced-matrix identities", criterion_4),
        ("value chain in traces", criterion_5),
        ("golden micro-traces", criterion_6),
        ("bounded-cycle completeness and certified tours", criterion_7),
        ("determinism", criterion_8),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match res {
            Ok(detail) => println!("criterion {} PASS {name}: {detail} [{:.2?}]", k + 1, t.elapsed()),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {why}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
