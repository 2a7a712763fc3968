//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use orthostab::oracle::brute_topk_dominance;
use orthostab::pl3d::{Pl3Options, Pl3d};
use orthostab::stab5::Stab5;
use orthostab::topk::{TopKDominance, WeightStream};
use orthostab::{ModelParams, WPoint};
use orthostab_cli::instance::{gen, gen_queries, Instance, Kind};
use orthostab_cli::verify::{verify, Report, RunOptions, Structure};

const SIZES: [usize; 9] = [1, 2, 3, 5, 17, 64, 257, 1024, 4096];
const INSTANCES: usize = 200;
const QUERIES: usize = 200;

const SUITE: [Structure; 13] = [
    Structure::Pl2,
    Structure::Stab2Count,
    Structure::Dom3,
    Structure::Pl3d,
    Structure::Slow5,
    Structure::Leaf5,
    Structure::Stab5,
    Structure::Zr4Slow,
    Structure::Zr4Fast,
    Structure::Zr6,
    Structure::Stab6,
    Structure::TopkDom,
    Structure::TopkStab,
];

struct Line {
    id: u32,
    ok: bool,
    detail: String,
}

fn log2(n: usize) -> f64 {
    (n as f64).log2()
}

fn instance(s: Structure, i: usize) -> Instance {
    let n = SIZES[i % SIZES.len()];
    let kind = match (s, i % 2) {
        (Structure::Pl3d, 1) => Kind::PlSubdivisionPruned,
        _ => s.default_kind(),
    };
    let fanout = [2, 3, 4, 8][i / SIZES.len() % 4];
    gen(kind, n, 4 * n as i64 + 4, (i as u64) << 8 | s as u64, fanout).expect("valid generator parameters")
}

fn run_options(i: usize) -> RunOptions {
    RunOptions {
        queries: QUERIES,
        seed: i as u64,
        params: ModelParams { leaf_threshold: if i % 3 == 0 { 32 } else { 4 }, ..Default::default() },
        check_dichotomy: true,
        ..Default::default()
    }
}

/// Runs every (structure, instance) cell on all cores.
fn oracle_suite() -> (Vec<Report>, Duration) {
    let start = Instant::now();
    let cells: Vec<(Structure, usize)> = SUITE.iter().flat_map(|&s| (0..INSTANCES).map(move |i| (s, i))).collect();
    let next = Mutex::new(0usize);
    let out = Mutex::new(Vec::with_capacity(cells.len()));
    let workers = thread::available_parallelism().map_or(4, |n| n.get());
    thread::scope(|sc| {
        for _ in 0..workers {
            sc.spawn(|| loop {
                let k = {
                    let mut g = next.lock().unwrap();
                    *g += 1;
                    *g - 1
                };
                let Some(&(s, i)) = cells.get(k) else { break };
                let rep = verify(s, &instance(s, i), &run_options(i)).expect("structure builds");
                out.lock().unwrap().push(rep);
            });
        }
    });
    (out.into_inner().unwrap(), start.elapsed())
}

fn criterion1(reps: &[Report], took: Duration) -> Line {
    let failed: Vec<&Report> = reps.iter().filter(|r| !r.passed()).collect();
    let queries: usize = reps.iter().map(|r| r.checked).sum();
    let mut detail = format!(
        "{} structures x {INSTANCES} instances, {queries} queries, {failed} mismatches, {:.1}s (limit 300s)",
        SUITE.len(),
        took.as_secs_f64(),
        failed = failed.len()
    );
    if let Some(r) = failed.first() {
        detail.push_str(&format!("; first:\n{r}"));
    }
    Line { id: 1, ok: failed.is_empty() && took.as_secs() < 300, detail }
}

fn criterion2() -> Line {
    let mut worst = (0usize, 0usize, 0.0f64, 0.0f64);
    let mut bad = Vec::new();
    for s in [Structure::Cut2, Structure::Cut3] {
        for n in [256, 1024, 4096] {
            let inst = gen(Kind::Dom3, n, 4 * n as i64, n as u64 + s as u64, 2).unwrap();
            let o = RunOptions { queries: QUERIES, seed: n as u64, levels: vec![4, 16, 64], ..Default::default() };
            let rep = verify(s, &inst, &o).expect("cutting builds");
            for (t, c) in &rep.extras.cuttings {
                let cells = c.cells as f64 / c.cell_bound;
                let conf = c.max_conflict as f64 / c.conflict_bound as f64;
                if cells.max(conf) > worst.2.max(worst.3) {
                    worst = (n, *t, cells, conf);
                }
            }
            if !rep.passed() {
                bad.push(format!("{s} n={n}: {rep}"));
            }
        }
    }
    Line {
        id: 2,
        ok: bad.is_empty(),
        detail: format!(
            "18 cuttings, worst cells/bound {:.2} conflict/bound {:.2} (n={} t={}){}",
            worst.2,
            worst.3,
            worst.0,
            worst.1,
            bad.first().map(|b| format!("; {b}")).unwrap_or_default()
        ),
    }
}

fn criterion3() -> Line {
    let start = Instant::now();
    let mut ratios = Vec::new();
    let mut bad = None;
    for j in 5..=10u32 {
        let n = 4usize.pow(j);
        let inst = gen(Kind::PlDisjoint, n, 4 * n as i64, j as u64, 2).unwrap();
        let rep = verify(Structure::Pl3d, &inst, &RunOptions { queries: 1000, seed: 7, ..Default::default() }).unwrap();
        if !rep.passed() {
            bad = Some(rep.to_string());
        }
        ratios.push(rep.sum.comparisons() as f64 / rep.checked as f64 / log2(n));
    }
    let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    let took = start.elapsed().as_secs_f64();
    let list: Vec<String> = ratios.iter().map(|r| format!("{r:.2}")).collect();
    Line {
        id: 3,
        ok: bad.is_none() && hi <= 2.5 * lo && took < 180.0,
        detail: format!("C/log2 n over 4^5..4^10 = [{}], max/min {:.2} (limit 2.5), {took:.1}s (limit 180s)", list.join(", "), hi / lo),
    }
}

fn criterion4() -> Line {
    let mut worst = (0.0f64, 0.0f64);
    let mut ok = true;
    for e in (10..=20).step_by(2) {
        let n = 1usize << e;
        let inst = gen(Kind::PlDisjoint, n, 4 * n as i64, e as u64, 2).unwrap();
        let pl = Pl3d::new(&inst.boxes, Pl3Options { measure_only: true, ..Default::default() }).unwrap();
        let st = pl.stats();
        let bits = st.bits_stored as f64 / (64.0 * n as f64 * log2(2 * n));
        let inc = st.piece_incidences as f64 / (8.0 * n as f64 * (log2(2 * n).log2() + 2.0));
        ok &= bits <= 1.0 && inc <= 1.0;
        worst = (worst.0.max(bits), worst.1.max(inc));
    }
    Line {
        id: 4,
        ok,
        detail: format!("n = 2^10..2^20: max bits/limit {:.3}, max incidences/limit {:.3}", worst.0, worst.1),
    }
}

fn criterion5() -> Line {
    let mut ok = true;
    let mut rows = Vec::new();
    for e in (10..=20).step_by(2) {
        let n = 1usize << e;
        let inst = gen(Kind::Stab5, n, 4 * n as i64, e as u64, 2).unwrap();
        let s = Stab5::measure(&inst.boxes, ModelParams::default()).unwrap();
        let st = s.tree_stats().build;
        let visited = gen_queries(&inst, 2000, 1, None).iter().map(|q| s.tree_nodes_visited(q.q)).max().unwrap_or(0);
        let lg = log2(n);
        let checks = [
            visited as f64 <= 4.0 * lg + 8.0,
            st.depth as f64 <= lg.log2() + 4.0,
            st.bits_stored as f64 <= 40.0 * n as f64 * lg,
            st.piece_incidences as f64 <= 12.0 * n as f64 * (lg.log2() + 1.0),
        ];
        ok &= checks.iter().all(|&c| c);
        rows.push(format!(
            "2^{e}: visited {visited}/{:.0} depth {}/{:.1} bits {:.1}/40 n lg n incidences {:.2}/{:.1} n",
            4.0 * lg + 8.0,
            st.depth,
            lg.log2() + 4.0,
            st.bits_stored as f64 / (n as f64 * lg),
            st.piece_incidences as f64 / n as f64,
            12.0 * (lg.log2() + 1.0)
        ));
    }
    Line { id: 5, ok, detail: rows.join("; ") }
}

fn criterion6(reps: &[Report]) -> Line {
    let pl: Vec<&Report> = reps.iter().filter(|r| r.structure == Structure::Pl3d).collect();
    let steps: u64 = pl.iter().map(|r| r.extras.dichotomy_steps).sum();
    let bad = pl.iter().filter(|r| r.mismatch.as_ref().is_some_and(|m| m.detail.contains("dichotomy"))).count();
    Line {
        id: 6,
        ok: bad == 0 && steps > 0 && pl.iter().all(|r| r.passed()),
        detail: format!("{} pl3d runs, {steps} split steps checked, {bad} violations", pl.len()),
    }
}

fn criterion7(reps: &[Report]) -> Line {
    let z: Vec<&Report> = reps.iter().filter(|r| r.structure == Structure::Zr4Fast).collect();
    let over = z.iter().filter(|r| r.extras.zr4_candidates.is_some_and(|(c, b)| c > b)).count();
    let worst = z
        .iter()
        .filter_map(|r| r.extras.zr4_candidates)
        .map(|(c, b)| c as f64 / b as f64)
        .fold(0.0f64, f64::max);
    let early = z.iter().filter(|r| r.mismatch.as_ref().is_some_and(|m| m.detail.contains("fallback"))).count();
    let fired: u64 = z.iter().map(|r| r.extras.zr4_fallbacks).sum();
    Line {
        id: 7,
        ok: over == 0 && early == 0 && z.iter().all(|r| r.passed()),
        detail: format!(
            "{} zr4fast runs, max candidates/bound {worst:.3}, {fired} fallbacks, {early} below t0, {over} over the bound",
            z.len()
        ),
    }
}

fn criterion8(reps: &[Report]) -> Line {
    let dup = reps.iter().filter(|r| r.mismatch.as_ref().is_some_and(|m| m.detail.contains("twice"))).count();
    let queries: usize = reps.iter().map(|r| r.checked).sum();
    Line { id: 8, ok: dup == 0, detail: format!("{queries} reporting queries, {dup} with a repeated id") }
}

fn criterion9() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut bad = 0;
    let mut trials = 0;
    while trials < 1000 {
        let n = [1, 5, 64, 300, 2000][trials / 10 % 5];
        let u = 2 * n as i64 + 2;
        let pts: Vec<WPoint> = (0..n as u32)
            .map(|id| WPoint { id, xy: [rng.gen_range(0..u), rng.gen_range(0..u)], weight: rng.gen_range(0..8) })
            .collect();
        let t = TopKDominance::new(pts.clone(), &ModelParams::default());
        for _ in 0..10 {
            let q = [rng.gen_range(-1..=u), rng.gen_range(-1..=u)];
            let full: Vec<u32> = WeightStream::new(&t, q).map(|r| r.id).collect();
            let mut got = Vec::new();
            let mut s = WeightStream::new(&t, q);
            // Pause at several random points along the way.
            loop {
                let step = rng.gen_range(0..=full.len() / 2 + 1);
                let before = got.len();
                got.extend(s.by_ref().take(step).map(|r| r.id));
                let paused = s.pause();
                s = paused.resume(&t);
                if got.len() - before < step {
                    break;
                }
            }
            if got != full || full != brute_topk_dominance(&pts, q, n) {
                bad += 1;
            }
            trials += 1;
        }
    }
    Line { id: 9, ok: bad == 0, detail: format!("{trials} pause/resume trials, {bad} diverged") }
}

fn main() {
    let (reps, took) = oracle_suite();
    let lines = vec![
        criterion1(&reps, took),
        criterion2(),
        criterion3(),
        criterion4(),
        criterion5(),
        criterion6(&reps),
        criterion7(&reps),
        criterion8(&reps),
        criterion9(),
    ];
    let mut failed = 0;
    for l in &lines {
        println!("criterion {}: {} {}", l.id, if l.ok { "PASS" } else { "FAIL" }, l.detail);
        failed += !l.ok as usize;
    }
    println!("acceptance: {} of {} criteria pass", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
