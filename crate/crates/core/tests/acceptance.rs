//! Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero
//! if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use fairalloc::alloc::{
    equi_depth_multibin_auto, exact_sequential_max_min, geo_binner, one_shot_exact, prefix_violations,
    swan_sequence, AllocatorConfig, BinConfig, EquiDepthConfig, SequenceConfig,
};
use fairalloc::harness::{generate_problem, merge_allocations, pop_partition, ClientSplit, TrafficModel, TrafficSpec};
use fairalloc::lp::SolveSession;
use fairalloc::metrics::{default_vartheta, q_fairness};
use fairalloc::model::{check_feasible, total_allocation};
use fairalloc::waterfill::{
    adaptive_waterfill, adaptive_waterfill_until, is_bandwidth_bottlenecked, single_path_waterfill, waterfill_with_theta, InnerWaterfill,
    SubdemandMatrix, ThetaState,
};
use fairalloc::{AllocatorReport, Demand, Path, Problem, Resource, Volume};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{progressive_filling, random_problem, swan_replay, Shape};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn session() -> SolveSession {
    SolveSession::default()
}

fn worked_example() -> Problem {
    Problem {
        resources: vec![
            Resource { id: "e1".into(), capacity: 0.5 },
            Resource { id: "e2".into(), capacity: 1.0 },
        ],
        paths: vec![
            Path { id: "p1".into(), resources: vec!["e1".into()] },
            Path { id: "p2".into(), resources: vec!["e2".into()] },
            Path { id: "p3".into(), resources: vec!["e2".into()] },
        ],
        demands: vec![
            Demand::new("d1", Volume::Unbounded, &["p1", "p2"]),
            Demand::new("d2", Volume::Unbounded, &["p3"]),
        ],
    }
}

fn max_total_gap(a: &AllocatorReport, b: &BTreeMap<String, f64>) -> f64 {
    a.totals.iter().map(|(k, v)| (v - b[k]).abs()).fold(0.0, f64::max)
}

/// Worked example traces, as exact rationals.
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let p = worked_example();
    let r = adaptive_waterfill(&p, 6, InnerWaterfill::Exact).unwrap();
    let t = r.theta_trace.unwrap();
    let theta11: Vec<f64> = (1..=6).map(|t| ((1u64 << t) - 1) as f64 / ((3u64 << (t - 1)) - 1) as f64).collect();
    let f12: Vec<f64> = (1..=6).map(|t| (1u64 << (t - 1)) as f64 / ((1u64 << (t + 1)) - 1) as f64).collect();
    let mut err: f64 = 0.0;
    for i in 0..6 {
        err = err.max((t.theta[i][0] - theta11[i]).abs());
        err = err.max((t.rates[i][1] - f12[i]).abs());
    }
    let long = adaptive_waterfill(&p, 20, InnerWaterfill::Exact).unwrap();
    let got = [
        long.allocation.get("d1", "p1"),
        long.allocation.get("d1", "p2"),
        long.allocation.get("d2", "p3"),
    ];
    let limit_err = got.iter().zip([0.5, 0.25, 0.75]).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        err <= 1e-9 && limit_err <= 1e-3 && secs < 1.0,
        format!("trace error {err:.1e}, limit error at t=20 {limit_err:.1e}, {:.0} ms", secs * 1e3),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let shape = Shape { max_demands: 6, max_edges: 6, max_paths: 3, weights: true, volumes: true };
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..100 {
        let p = random_problem(&mut rng, shape);
        let exact = exact_sequential_max_min(&p, &session()).unwrap();
        match one_shot_exact(&p, None, &session()) {
            Ok(r) => worst = worst.max(max_total_gap(&r, &exact.totals)),
            Err(e) => {
                failures += 1;
                if failures == 1 {
                    eprintln!("one-shot: {e}");
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-5 && failures == 0 && secs < 60.0,
        format!("100 instances, max per-demand gap {worst:.1e}, {failures} errors, {secs:.1} s"),
    )
}

/// The 50-instance corpus for criteria 3 to 5: random instances whose SWAN
/// stages all have a unique optimum (checked with range LPs), so "the" SWAN
/// allocation is well defined.
struct Corpus {
    problems: Vec<Problem>,
    tied_seen: usize,
}

fn corpus() -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let shape = Shape { max_demands: 5, max_edges: 5, max_paths: 3, weights: true, volumes: true };
    let mut problems = Vec::new();
    let mut tied_seen = 0;
    while problems.len() < 50 {
        let p = random_problem(&mut rng, shape);
        let (u, alpha) = swan_params(&p);
        if swan_replay(&p, u, alpha, 8).max_spread <= 1e-7 {
            problems.push(p);
        } else {
            tied_seen += 1;
        }
    }
    Corpus { problems, tied_seen }
}

fn swan_params(p: &Problem) -> (f64, f64) {
    let index = p.index().unwrap();
    (p.max_ratio_bound(&index) / 4.0, 2.0)
}

fn criterion_3(corpus: &Corpus) -> Outcome {
    let mut worst_excess: f64 = 0.0;
    let mut gb_solves_ok = true;
    let mut swan_solves_ok = true;
    let mut replay_gap: f64 = 0.0;
    for p in &corpus.problems {
        let (u, alpha) = swan_params(p);
        let sum_c: f64 = p.resources.iter().map(|r| r.capacity).sum();
        let delta = 1e-6 * sum_c;
        let cfg = BinConfig::new(u, alpha, 3, delta / sum_c).unwrap();
        let gb = geo_binner(p, &cfg, &session()).unwrap();
        let swan = swan_sequence(p, SequenceConfig::new(u, alpha), &session()).unwrap();
        let replay = swan_replay(p, u, alpha, 8);
        for (k, d) in p.demands.iter().enumerate() {
            let gap = (gb.totals[&d.id] - swan.totals[&d.id]).abs();
            worst_excess = worst_excess.max(gap - 1e-6f64.max(delta));
            replay_gap = replay_gap.max((swan.totals[&d.id] / d.weight - replay.ratios[k]).abs());
        }
        gb_solves_ok &= gb.lp_solves == 1;
        swan_solves_ok &= swan.lp_solves >= 2 && swan.lp_solves == swan.iterations;
    }
    outcome(
        worst_excess <= 0.0 && gb_solves_ok && swan_solves_ok,
        format!(
            "50 tie-free instances ({} tied ones skipped), worst gap minus bound {worst_excess:.1e}, \
             SWAN vs independent replay {replay_gap:.1e}, GB lp_solves=1: {gb_solves_ok}, SWAN lp_solves>=2: {swan_solves_ok}",
            corpus.tied_seen
        ),
    )
}

fn criterion_4(corpus: &Corpus) -> (Outcome, Vec<AllocatorReport>) {
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    let mut reports = Vec::new();
    for p in &corpus.problems {
        let exact = exact_sequential_max_min(p, &session()).unwrap();
        let ratios = exact.ratios(p);
        let u = ratios.values().copied().fold(f64::INFINITY, f64::min);
        let index = p.index().unwrap();
        let top = p.max_ratio_bound(&index);
        for alpha in [1.5, 2.0, 4.0] {
            let mut bins = 1;
            while u * f64::powi(alpha, bins as i32 - 1) < top {
                bins += 1;
            }
            let eps = if bins == 1 { 0.1 } else { 0.1f64.min(1e-12f64.powf(1.0 / (bins - 1) as f64)) };
            let cfg = BinConfig::new(u, alpha, bins, eps).unwrap();
            let gb = geo_binner(p, &cfg, &session()).unwrap();
            for d in &p.demands {
                let f = gb.totals[&d.id];
                let star = exact.totals[&d.id];
                let lo = star / alpha - 1e-6;
                let hi = alpha * star + 1e-6;
                if f < lo || f > hi {
                    violations += 1;
                    worst = worst.max((lo - f).max(f - hi));
                }
            }
            reports.push(gb);
        }
    }
    (
        outcome(
            violations == 0,
            format!("{} GB runs, {violations} rates outside [f*/α, α f*] (worst by {worst:.1e})", reports.len()),
        ),
        reports,
    )
}

fn criterion_5(corpus: &Corpus, gb_reports: &[AllocatorReport]) -> Outcome {
    let mut violations = 0;
    let mut repaired = 0;
    let mut runs = 0;
    for r in gb_reports {
        let b = r.bins.as_ref().unwrap();
        violations += prefix_violations(b, 1e-9).len();
        repaired += b.repaired;
        runs += 1;
    }
    for p in &corpus.problems {
        let r = equi_depth_multibin_auto(p, &EquiDepthConfig::for_problem(p), &session()).unwrap();
        let b = r.bins.as_ref().unwrap();
        violations += prefix_violations(b, 1e-9).len();
        repaired += b.repaired;
        runs += 1;
    }
    outcome(
        violations == 0,
        format!("{runs} binned solutions, {violations} prefix violations, {repaired} demands repaired"),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let shape = Shape { max_demands: 6, max_edges: 6, max_paths: 3, weights: true, volumes: true };
    // Convergence to a bottlenecked point holds in the limit. At the default
    // θ tolerance a path whose weight is still decaying can stop above the
    // checker's tolerance, so the gate uses a tighter one and the default is
    // reported alongside.
    let (mut converged, mut fail, mut default_converged, mut default_fail) = (0, 0, 0, 0);
    let (mut exact_fail, mut fixed_checked) = (0, 0);
    let mut fixed_drift: f64 = 0.0;
    let mut witness = String::new();
    for _ in 0..50 {
        let p = random_problem(&mut rng, shape);
        let index = p.index().unwrap();
        let tol = 1e-6 * p.max_capacity();

        let aw = adaptive_waterfill_until(&p, 20_000, InnerWaterfill::Exact, 1e-9).unwrap();
        if aw.converged == Some(true) {
            converged += 1;
            let v = is_bandwidth_bottlenecked(&p, &aw.allocation, tol).unwrap();
            if !v.bottlenecked {
                fail += 1;
                witness = format!("{:?}", v.witness);
            }
        }
        let aw = adaptive_waterfill(&p, 2000, InnerWaterfill::Exact).unwrap();
        if aw.converged == Some(true) {
            default_converged += 1;
            if !is_bandwidth_bottlenecked(&p, &aw.allocation, tol).unwrap().bottlenecked {
                default_fail += 1;
            }
        }

        let exact = exact_sequential_max_min(&p, &session()).unwrap();
        let v = is_bandwidth_bottlenecked(&p, &exact.allocation, tol).unwrap();
        if !v.bottlenecked {
            exact_fail += 1;
            witness = format!("{:?}", v.witness);
            continue;
        }
        let flows = exact.allocation.to_flows(&p, &index).unwrap();
        let theta = ThetaState::from_rates(&index, &flows, &ThetaState::uniform(&index));
        let again = waterfill_with_theta(&p, &index, &theta, InnerWaterfill::Exact).unwrap();
        let drift = flows.iter().zip(&again).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        fixed_drift = fixed_drift.max(drift);
        fixed_checked += 1;
    }
    outcome(
        fail == 0 && exact_fail == 0 && fixed_drift <= 1e-9 && converged > 0,
        format!(
            "(a) θ tolerance 1e-9: {converged}/50 AW runs converged, {fail} not bottlenecked \
             (default 1e-6: {default_converged} converged, {default_fail} not bottlenecked); \
             (b) {exact_fail}/50 exact allocations not bottlenecked; \
             (c) {fixed_checked} fixed-point checks on exact allocations, max drift {fixed_drift:.1e}{}",
            if witness.is_empty() { String::new() } else { format!("; last witness {witness}") }
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let m = rng.gen_range(1..=8);
        let n = rng.gen_range(1..=8);
        let caps: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..3.0)).collect();
        let demands: Vec<(f64, Vec<usize>)> = (0..n)
            .map(|_| {
                let len = rng.gen_range(1..=m.min(3));
                let links = rand::seq::index::sample(&mut rng, m, len).into_vec();
                (rng.gen_range(0.5..2.0), links)
            })
            .collect();
        let g = SubdemandMatrix::from_columns(m, &demands);
        let fast = single_path_waterfill(&g, &caps).unwrap();
        let slow = progressive_filling(&caps, &demands, 1e-4);
        worst = worst.max(fast.iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    outcome(worst <= 1e-3, format!("100 instances, max gap to progressive filling {worst:.1e}"))
}

/// Scales a generated problem until every link carries at least `factor`
/// times its capacity in demand volume.
fn overloaded(nodes: usize, edges: usize, model: TrafficModel, seed: u64, factor: f64) -> Problem {
    let spec = TrafficSpec { model, scale_factor: 1.0, seed };
    let base = generate_problem(nodes, edges, spec, 3).unwrap();
    let index = base.index().unwrap();
    let mut offered = vec![0.0; base.resources.len()];
    for (k, d) in base.demands.iter().enumerate() {
        let mut touched = std::collections::BTreeSet::new();
        for &p in &index.demand_paths[k] {
            touched.extend(index.path_resources[p].iter().copied());
        }
        for e in touched {
            offered[e] += d.volume.as_f64();
        }
    }
    let scale = base
        .resources
        .iter()
        .zip(&offered)
        .map(|(r, &o)| factor * r.capacity / o)
        .fold(0.0, f64::max)
        * 1.01;
    generate_problem(nodes, edges, TrafficSpec { scale_factor: scale, ..spec }, 3).unwrap()
}

fn geomean_vs(problem: &Problem, report: &AllocatorReport, oracle: &BTreeMap<String, f64>) -> f64 {
    q_fairness(&report.totals, oracle, default_vartheta(problem)).unwrap().geomean
}

fn criterion_8() -> Outcome {
    let mut sums = [0.0; 3];
    let n = 20;
    for seed in 0..n {
        let p = overloaded(6, 8, TrafficModel::Uniform, 800 + seed, 4.0);
        let oracle = exact_sequential_max_min(&p, &session()).unwrap().totals;
        for (i, name) in ["eb-elastic", "gb", "approx-waterfill"].iter().enumerate() {
            let r = AllocatorConfig::from_name(name).unwrap().run(&p, &session()).unwrap();
            sums[i] += geomean_vs(&p, &r, &oracle);
        }
    }
    let [eb, gb, aw] = sums.map(|s| s / n as f64);
    outcome(
        eb >= gb - 0.01 && gb >= aw - 0.01,
        format!(
            "mean q geomean: EB-elastic {eb:.4}, GB {gb:.4}, approx waterfill {aw:.4} \
             (EB-GB {:+.4}, GB-AW {:+.4})",
            eb - gb,
            gb - aw
        ),
    )
}

fn criterion_9() -> Outcome {
    let m = |v: &[(&str, f64)]| -> BTreeMap<String, f64> { v.iter().map(|(k, x)| (k.to_string(), *x)).collect() };
    let f = m(&[("a", 0.3), ("b", 2.0), ("c", 0.0)]);
    let identity = q_fairness(&f, &f, 1e-4).unwrap();
    let half = q_fairness(&m(&[("a", 0.5)]), &m(&[("a", 1.0)]), 1e-4).unwrap();
    let clamp = q_fairness(&m(&[("a", 0.0)]), &m(&[("a", 0.0)]), 1e-4).unwrap();
    let mut p = worked_example();
    let v1 = default_vartheta(&p);
    p.resources[1].capacity = 100.0;
    let v100 = default_vartheta(&p);
    let pass = identity.geomean == 1.0
        && identity.per_demand.values().all(|&q| q == 1.0)
        && half.per_demand["a"] == 0.5
        && clamp.per_demand["a"] == 1.0
        && v1 == 1e-4 * 1.0
        && v100 == 1e-4 * 100.0;
    outcome(
        pass,
        format!(
            "identity {}, half {}, double clamp {}, ϑ(max c=1) {v1:e}, ϑ(max c=100) {v100:e}",
            identity.geomean, half.per_demand["a"], clamp.per_demand["a"]
        ),
    )
}

fn pop_gb(p: &Problem, k: usize, seed: u64) -> BTreeMap<String, f64> {
    let parts = pop_partition(p, k, ClientSplit::default(), seed).unwrap();
    let allocs: Vec<_> = parts
        .iter()
        .filter(|q| !q.demands.is_empty())
        .map(|q| AllocatorConfig::from_name("gb").unwrap().run(q, &session()).unwrap().allocation)
        .collect();
    let merged = merge_allocations(&allocs);
    assert!(check_feasible(p, &merged, p.default_tolerance()).unwrap().feasible);
    total_allocation(p, &merged).unwrap()
}

fn criterion_10() -> Outcome {
    let gravity = overloaded(6, 9, TrafficModel::Gravity, 1000, 2.0);
    let mut concentrated = overloaded(6, 9, TrafficModel::Uniform, 1001, 2.0);
    let hot = concentrated.demands.iter().map(|d| d.volume.as_f64()).fold(0.0, f64::max);
    concentrated.demands[0].volume = Volume::Bounded(50.0 * hot);

    let mut feasible = true;
    let mut lines = Vec::new();
    let mut concentrated_drop = f64::NAN;
    for (name, p) in [("gravity", &gravity), ("concentrated", &concentrated)] {
        let oracle = exact_sequential_max_min(p, &session()).unwrap().totals;
        let whole = AllocatorConfig::from_name("gb").unwrap().run(p, &session()).unwrap();
        let q_whole = geomean_vs(p, &whole, &oracle);
        let totals = std::panic::catch_unwind(|| pop_gb(p, 4, 10));
        let Ok(totals) = totals else {
            feasible = false;
            continue;
        };
        let q_pop = q_fairness(&totals, &oracle, default_vartheta(p)).unwrap().geomean;
        if name == "concentrated" {
            concentrated_drop = q_whole - q_pop;
        }
        lines.push(format!("{name}: GB {q_whole:.4}, POP(4)+GB {q_pop:.4}"));
    }
    outcome(
        feasible && concentrated_drop > 0.0,
        format!("merged allocations feasible: {feasible}; {}", lines.join("; ")),
    )
}

fn main() {
    let mut failed = 0;
    let mut report = |n: usize, o: Outcome| {
        println!("criterion {n:>2}: {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += !o.pass as usize;
    };
    report(1, criterion_1());
    report(2, criterion_2());
    let corpus = corpus();
    report(3, criterion_3(&corpus));
    let (c4, gb_reports) = criterion_4(&corpus);
    report(4, c4);
    report(5, criterion_5(&corpus, &gb_reports));
    report(6, criterion_6());
    report(7, criterion_7());
    report(8, criterion_8());
    report(9, criterion_9());
    report(10, criterion_10());
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
