//! Builds a structure over an instance and checks every query against the
//! linear-scan oracle.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use orthostab::counters::bits_for;
use orthostab::domcut::{build_cutting2, build_cutting3, Dominance3, ShallowCutting2, ShallowCutting3};
use orthostab::oracle::{
    brute_count2, brute_dominance, brute_locate, brute_locate2, brute_stab, brute_stab2, brute_topk_dominance,
    brute_topk_stab, verify_cutting2, verify_cutting3, CuttingReport,
};
use orthostab::pl3d::{Pl3Options, Pl3d, TraceStep};
use orthostab::range2d::{Pl2, StabCount2};
use orthostab::stab5::{LeafStab5, SlowStab5, Stab5};
use orthostab::stab6::{zr4_items, IntervalTreeZ, Zr4Fast, Zr4Slow, Zr6};
use orthostab::topk::{TopKDominance, TopKStab};
use orthostab::{BuildStats, Box2, Box3, Counters, ModelParams, Point2, Point3, WPoint};

use crate::instance::{gen_queries, write_boxes, Instance, Kind, Query};
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Structure {
    Pl3d,
    Pl2,
    Stab2Count,
    Dom3,
    Leaf5,
    Slow5,
    Stab5,
    Stab6,
    Zr4Slow,
    Zr4Fast,
    Zr6,
    TopkDom,
    TopkStab,
    Cut2,
    Cut3,
}

impl Structure {
    pub const ALL: [Structure; 15] = [
        Structure::Pl3d,
        Structure::Pl2,
        Structure::Stab2Count,
        Structure::Dom3,
        Structure::Leaf5,
        Structure::Slow5,
        Structure::Stab5,
        Structure::Stab6,
        Structure::Zr4Slow,
        Structure::Zr4Fast,
        Structure::Zr6,
        Structure::TopkDom,
        Structure::TopkStab,
        Structure::Cut2,
        Structure::Cut3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Structure::Pl3d => "pl3d",
            Structure::Pl2 => "pl2",
            Structure::Stab2Count => "stab2count",
            Structure::Dom3 => "dom3",
            Structure::Leaf5 => "leaf5",
            Structure::Slow5 => "slow5",
            Structure::Stab5 => "stab5",
            Structure::Stab6 => "stab6",
            Structure::Zr4Slow => "zr4slow",
            Structure::Zr4Fast => "zr4fast",
            Structure::Zr6 => "zr6",
            Structure::TopkDom => "topkdom",
            Structure::TopkStab => "topkstab",
            Structure::Cut2 => "cut2",
            Structure::Cut3 => "cut3",
        }
    }

    /// Instance kind generated for this structure by `bench`.
    pub fn default_kind(self) -> Kind {
        match self {
            Structure::Pl3d => Kind::PlDisjoint,
            Structure::Pl2 => Kind::Pl2Disjoint,
            Structure::Stab2Count | Structure::Stab6 => Kind::Stab6,
            Structure::Dom3 | Structure::Cut2 | Structure::Cut3 => Kind::Dom3,
            Structure::Leaf5 | Structure::Slow5 | Structure::Stab5 => Kind::Stab5,
            Structure::Zr4Slow | Structure::Zr4Fast => Kind::Zr4,
            Structure::Zr6 => Kind::Zr6,
            Structure::TopkDom => Kind::TopkDom,
            Structure::TopkStab => Kind::TopkStab,
        }
    }

    pub fn accepts(self, k: Kind) -> bool {
        match self {
            Structure::Pl3d => matches!(k, Kind::PlDisjoint | Kind::PlSubdivisionPruned | Kind::Pl2Disjoint),
            Structure::Stab2Count => true,
            Structure::Cut2 => matches!(k, Kind::Dom3 | Kind::TopkDom),
            _ => k == self.default_kind(),
        }
    }

    pub fn is_top_k(self) -> bool {
        matches!(self, Structure::TopkDom | Structure::TopkStab)
    }

    pub fn is_cutting(self) -> bool {
        matches!(self, Structure::Cut2 | Structure::Cut3)
    }
}

impl FromStr for Structure {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Structure::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| HarnessError::Usage(format!("unknown structure {s:?}")))
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub queries: usize,
    pub seed: u64,
    pub params: ModelParams,
    /// Cutting levels checked by `cut2` / `cut3`.
    pub levels: Vec<usize>,
    /// Record pl3d query paths and check the short/middle dichotomy.
    pub check_dichotomy: bool,
    /// Test hook: build over a damaged copy of the input.
    pub corrupt: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            queries: 200,
            seed: 0,
            params: ModelParams::default(),
            levels: vec![4, 16, 64],
            check_dichotomy: false,
            corrupt: false,
        }
    }
}

/// One query's result in a comparable form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Answer {
    Located(Option<u32>),
    /// Ascending ids.
    Set(Vec<u32>),
    /// Ids heaviest first.
    Ranked(Vec<u32>),
    Count(usize),
    /// FIND-ANY: corner index.
    Corner(Option<u32>),
}

impl Answer {
    fn first_id(&self) -> Option<u32> {
        match self {
            Answer::Located(o) => *o,
            Answer::Set(v) | Answer::Ranked(v) => v.first().copied(),
            Answer::Count(_) | Answer::Corner(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub query: Option<Query>,
    pub expected: String,
    pub got: String,
    pub detail: String,
}

/// Side facts gathered while verifying.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Extras {
    pub dichotomy_steps: u64,
    pub zr4_fallbacks: u64,
    /// ZR4Fast candidate total and `16 max(n, Z^2 t0)`.
    pub zr4_candidates: Option<(usize, usize)>,
    pub cuttings: Vec<(usize, CuttingReport)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub structure: Structure,
    pub kind: Kind,
    pub n: usize,
    pub universe: i64,
    pub checked: usize,
    pub build_ms: f64,
    pub bits_stored: u64,
    pub build: BuildStats,
    pub sum: Counters,
    pub max: Counters,
    pub extras: Extras,
    pub mismatch: Option<Mismatch>,
    /// Boxes containing the witness query, in box-file form.
    pub witness_boxes: String,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.mismatch.is_none()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Some(m) = &self.mismatch else {
            return write!(f, "PASS {} on {} n={}: {} queries", self.structure, self.kind.name(), self.n, self.checked);
        };
        writeln!(f, "FAIL {} on {} n={} universe={}", self.structure, self.kind.name(), self.n, self.universe)?;
        if let Some(q) = &m.query {
            writeln!(f, "query: {} {} {}{}", q.q[0], q.q[1], q.q[2], q.k.map(|k| format!(" k={k}")).unwrap_or_default())?;
        }
        writeln!(f, "detail: {}", m.detail)?;
        writeln!(f, "expected: {}", m.expected)?;
        writeln!(f, "got: {}", m.got)?;
        if !self.witness_boxes.is_empty() {
            write!(f, "boxes containing the query:\n{}", self.witness_boxes)?;
        }
        Ok(())
    }
}

fn max_counters(a: &mut Counters, b: &Counters) {
    a.predecessor_steps = a.predecessor_steps.max(b.predecessor_steps);
    a.nodes_visited = a.nodes_visited.max(b.nodes_visited);
    a.dominance_queries = a.dominance_queries.max(b.dominance_queries);
    a.cells_scanned = a.cells_scanned.max(b.cells_scanned);
    a.heap_ops = a.heap_ops.max(b.heap_ops);
    a.output_size = a.output_size.max(b.output_size);
}

fn rects_of(boxes: &[Box3]) -> Vec<Box2> {
    boxes
        .iter()
        .map(|b| Box2 { id: b.id, axes: [b.axes[0], b.axes[1]], weight: b.weight })
        .collect()
}

fn upper_corners(boxes: &[Box3]) -> Vec<Point3> {
    boxes.iter().map(|b| b.corners().1).collect()
}

fn weighted_points(boxes: &[Box3]) -> Vec<WPoint> {
    boxes
        .iter()
        .map(|b| {
            let hi = b.corners().1;
            WPoint { id: b.id, xy: [hi[0], hi[1]], weight: b.weight.unwrap_or(0) }
        })
        .collect()
}

/// The `k` values exercised for top-k structures over `n` items.
pub fn top_k_values(params: &ModelParams, n: usize) -> Vec<usize> {
    vec![0, 1, 2, params.t2(n), params.t1(n), n]
}

enum Built {
    Pl3d(Pl3d),
    Pl2(Pl2),
    Stab2Count(StabCount2),
    Dom3(Dominance3),
    Leaf5(LeafStab5),
    Slow5(SlowStab5),
    Stab5(Stab5),
    Stab6(IntervalTreeZ),
    Zr4Slow(Zr4Slow),
    Zr4Fast(Zr4Fast),
    Zr6(Zr6),
    TopkDom(TopKDominance),
    TopkStab(TopKStab),
    Cut3(ShallowCutting3),
}

struct Ctx<'a> {
    s: Structure,
    boxes: &'a [Box3],
    rects: Vec<Box2>,
    points: Vec<Point3>,
    wpoints: Vec<WPoint>,
    fanout: usize,
    opts: &'a RunOptions,
}

impl<'a> Ctx<'a> {
    fn new(s: Structure, inst: &'a Instance, opts: &'a RunOptions) -> Self {
        let boxes = &inst.boxes[..];
        let (mut rects, mut points, mut wpoints) = (Vec::new(), Vec::new(), Vec::new());
        match s {
            Structure::Pl2 | Structure::Stab2Count | Structure::TopkStab => rects = rects_of(boxes),
            Structure::Dom3 | Structure::Cut2 | Structure::Cut3 => points = upper_corners(boxes),
            Structure::TopkDom => wpoints = weighted_points(boxes),
            _ => {}
        }
        Ctx { s, boxes, rects, points, wpoints, fanout: inst.fanout, opts }
    }

    fn coord_bits(&self) -> u64 {
        bits_for(2 * self.boxes.len() as u64 + 2)
    }

    fn expect(&self, q: &Query) -> Result<Answer, HarnessError> {
        let xy = [q.q[0], q.q[1]];
        let k = q.k.unwrap_or(0);
        Ok(match self.s {
            Structure::Pl3d => Answer::Located(brute_locate(self.boxes, q.q)?),
            Structure::Pl2 => Answer::Located(brute_locate2(&self.rects, xy)?),
            Structure::Stab2Count => Answer::Count(brute_count2(&self.rects, xy)),
            Structure::Dom3 => Answer::Set(brute_dominance(&self.points, q.q)),
            Structure::TopkDom => Answer::Ranked(brute_topk_dominance(&self.wpoints, xy, k)),
            Structure::TopkStab => Answer::Ranked(brute_topk_stab(&self.rects, xy, k)),
            Structure::Cut2 | Structure::Cut3 => Answer::Corner(None),
            _ => Answer::Set(brute_stab(self.boxes, q.q)),
        })
    }

    fn build(&self, victim: Option<u32>) -> Result<Built, HarnessError> {
        let p = self.opts.params;
        let drop = |id: u32| victim == Some(id);
        let boxes: Vec<Box3> = self.boxes.iter().filter(|b| !drop(b.id)).copied().collect();
        let rects: Vec<Box2> = self.rects.iter().filter(|b| !drop(b.id)).copied().collect();
        let wpoints: Vec<WPoint> = self.wpoints.iter().filter(|w| !drop(w.id)).copied().collect();
        // Point ids are positions, so a damaged point moves out of reach instead.
        let mut points = self.points.clone();
        if let Some(v) = victim.filter(|&v| (v as usize) < points.len() && self.s == Structure::Dom3) {
            points[v as usize] = [-(1 << 40); 3];
        }
        Ok(match self.s {
            Structure::Pl3d => {
                let opts = Pl3Options { leaf_threshold: p.leaf_threshold, keep_inputs: self.opts.check_dichotomy, measure_only: false };
                Built::Pl3d(Pl3d::new(&boxes, opts)?)
            }
            Structure::Pl2 => Built::Pl2(Pl2::from_boxes(&rects, p.leaf_threshold)?),
            Structure::Stab2Count => Built::Stab2Count(StabCount2::from_boxes(&rects)),
            Structure::Dom3 => Built::Dom3(Dominance3::new(points.iter().enumerate().map(|(i, &p)| (p, i as u32)).collect())),
            Structure::Leaf5 => Built::Leaf5(LeafStab5::from_boxes(&boxes, usize::MAX)?),
            Structure::Slow5 => Built::Slow5(SlowStab5::from_boxes(&boxes)?),
            Structure::Stab5 => Built::Stab5(Stab5::new(&boxes, p)?),
            Structure::Stab6 => Built::Stab6(IntervalTreeZ::new(&boxes, p)?),
            Structure::Zr4Slow => Built::Zr4Slow(Zr4Slow::new(&zr4_items(&boxes, self.fanout)?, self.fanout)),
            Structure::Zr4Fast => Built::Zr4Fast(Zr4Fast::from_boxes(&boxes, self.fanout, &p)?),
            Structure::Zr6 => Built::Zr6(Zr6::new(&boxes, self.fanout, p)?),
            Structure::TopkDom => Built::TopkDom(TopKDominance::new(wpoints, &p)),
            Structure::TopkStab => Built::TopkStab(TopKStab::new(&rects, p)?),
            Structure::Cut2 | Structure::Cut3 => unreachable!("cuttings are checked level by level"),
        })
    }

    fn bits(&self, b: &Built) -> (u64, BuildStats) {
        let cb = self.coord_bits();
        let plain = |bits| (bits, BuildStats { bits_stored: bits, ..Default::default() });
        match b {
            Built::Pl3d(s) => (s.stats().bits_stored, s.stats()),
            Built::Pl2(s) => (s.stats().bits_stored, s.stats()),
            Built::Stab2Count(s) => plain(s.bits_stored(cb)),
            Built::Dom3(s) => plain(s.bits_stored(cb, cb)),
            Built::Leaf5(s) => plain(s.len() as u64 * 6 * cb),
            Built::Slow5(s) => plain(s.bits_stored(cb)),
            Built::Stab5(s) => (s.stats().bits_stored, s.stats()),
            Built::Stab6(s) => (s.stats().bits_stored, s.stats()),
            Built::Zr4Slow(s) => plain(s.bits_stored(cb)),
            Built::Zr4Fast(s) => (s.stats(cb).bits_stored, s.stats(cb)),
            Built::Zr6(s) => (s.stats().bits_stored, s.stats()),
            Built::TopkDom(s) => (s.stats().bits_stored, s.stats()),
            Built::TopkStab(s) => (s.stats().bits_stored, s.stats()),
            Built::Cut3(s) => plain(cutting_bits(&s.conflicts, s.corners.len(), 3, cb)),
        }
    }

    fn answer(&self, b: &Built, q: &Query, c: &mut Counters, ex: &mut Extras) -> Result<(Answer, Option<String>), HarnessError> {
        let xy = [q.q[0], q.q[1]];
        let k = q.k.unwrap_or(0);
        let mut note = None;
        let a = match b {
            Built::Pl3d(s) if self.opts.check_dichotomy => {
                let (r, steps) = s.trace(q.q, c)?;
                ex.dichotomy_steps += steps.len() as u64;
                note = steps.iter().find(|st| !dichotomy_holds(st)).map(|st| format!("dichotomy fails at {st:?}"));
                Answer::Located(r)
            }
            Built::Pl3d(s) => Answer::Located(s.query(q.q, c)?),
            Built::Pl2(s) => Answer::Located(s.query(xy, c)),
            Built::Stab2Count(s) => Answer::Count(s.count(xy, c)),
            Built::Dom3(s) => Answer::Set(s.query_vec(q.q, c)),
            Built::Leaf5(s) => Answer::Set(collect(|o| s.query(q.q, c, o))),
            Built::Slow5(s) => Answer::Set(collect(|o| s.query(q.q, c, o))),
            Built::Stab5(s) => Answer::Set(s.query(q.q, c)?),
            Built::Stab6(s) => Answer::Set(s.query(q.q, c)?),
            Built::Zr4Slow(s) => Answer::Set(collect(|o| s.query(q.q, c, o))),
            Built::Zr4Fast(s) => {
                let mut out = Vec::new();
                let t = s.query(q.q, c, &mut out);
                if t.fallback {
                    ex.zr4_fallbacks += 1;
                    if brute_stab(self.boxes, q.q).len() < s.shape().t0 {
                        note = Some(format!("fallback fired below t0 = {}", s.shape().t0));
                    }
                }
                Answer::Set(out)
            }
            Built::Zr6(s) => Answer::Set(s.query(q.q, c)?),
            Built::TopkDom(s) => Answer::Ranked(s.query(xy, k, c)),
            Built::TopkStab(s) => Answer::Ranked(s.query(xy, k, c)),
            Built::Cut3(s) => Answer::Corner(s.find_any(xy[0], xy[1], c)),
        };
        Ok((a, note))
    }
}

fn collect(f: impl FnOnce(&mut Vec<u32>)) -> Vec<u32> {
    let mut v = Vec::new();
    f(&mut v);
    v
}

fn cutting_bits(conflicts: &[Vec<u32>], corners: usize, dim: u64, cb: u64) -> u64 {
    let n = conflicts.iter().map(|l| l.len() as u64).sum::<u64>();
    n * cb + corners as u64 * dim * cb
}

/// A hit among the short projections rules out the middle child, and a miss
/// rules out the short child.
pub fn dichotomy_holds(s: &TraceStep) -> bool {
    if s.short_hit {
        let mut m = s.q;
        m[s.axis] = s.slab as i64;
        s.middle_pieces.iter().all(|p| !p.contains(m))
    } else {
        let mut r = s.q;
        r[s.axis] -= s.slab as i64 * s.width;
        s.short_pieces.iter().all(|p| !p.contains(r))
    }
}

fn least_corner(cut: &ShallowCutting3, q: Point2) -> Option<u32> {
    (0..cut.corners.len() as u32)
        .filter(|&i| {
            let k = cut.corners[i as usize];
            k[0] <= q[0] && k[1] <= q[1]
        })
        .min_by_key(|&i| (cut.corners[i as usize][2], i))
}

/// Normalizes a reported set and flags repeated ids.
fn normalize(a: Answer) -> (Answer, Option<u32>) {
    match a {
        Answer::Set(mut v) => {
            v.sort_unstable();
            let dup = v.windows(2).find(|w| w[0] == w[1]).map(|w| w[0]);
            (Answer::Set(v), dup)
        }
        Answer::Ranked(v) => {
            let mut seen = HashSet::new();
            let dup = v.iter().copied().find(|&id| !seen.insert(id));
            (Answer::Ranked(v), dup)
        }
        a => (a, None),
    }
}

fn witness_boxes(boxes: &[Box3], q: &Query, inst: &Instance, s: Structure) -> String {
    let hits: Vec<Box3> = boxes
        .iter()
        .filter(|b| match s {
            Structure::Pl2 | Structure::Stab2Count | Structure::TopkStab => {
                b.axes[0].contains(q.q[0]) && b.axes[1].contains(q.q[1])
            }
            _ => b.contains(q.q),
        })
        .take(16)
        .copied()
        .collect();
    if hits.is_empty() {
        return String::new();
    }
    let sub = Instance { boxes: hits, n: 0, ..inst.clone() };
    write_boxes(&sub).lines().skip(2).map(|l| format!("{l}\n")).collect()
}

/// Verifies `s` over `inst` with generated queries.
pub fn verify(s: Structure, inst: &Instance, opts: &RunOptions) -> Result<Report, HarnessError> {
    let ks = s.is_top_k().then(|| top_k_values(&opts.params, inst.boxes.len()));
    let qs = gen_queries(inst, opts.queries, opts.seed, ks.as_deref());
    verify_with(s, inst, &qs, opts)
}

/// Verifies `s` over `inst` on the given queries.
pub fn verify_with(s: Structure, inst: &Instance, qs: &[Query], opts: &RunOptions) -> Result<Report, HarnessError> {
    if !s.accepts(inst.kind) {
        return Err(HarnessError::Usage(format!("structure {s} does not take {} instances", inst.kind.name())));
    }
    let mut rep = Report {
        structure: s,
        kind: inst.kind,
        n: inst.boxes.len(),
        universe: inst.universe,
        checked: 0,
        build_ms: 0.0,
        bits_stored: 0,
        build: BuildStats::default(),
        sum: Counters::new(),
        max: Counters::new(),
        extras: Extras::default(),
        mismatch: None,
        witness_boxes: String::new(),
    };
    let ctx = Ctx::new(s, inst, opts);
    if s.is_cutting() {
        return verify_cuttings(&ctx, qs, rep);
    }
    let expected: Vec<Answer> = qs.iter().map(|q| ctx.expect(q)).collect::<Result<_, _>>()?;
    let victim = if opts.corrupt { victim_of(&ctx, qs, &expected) } else { None };
    let t = Instant::now();
    let built = ctx.build(victim)?;
    rep.build_ms = t.elapsed().as_secs_f64() * 1e3;
    (rep.bits_stored, rep.build) = ctx.bits(&built);
    if let Built::Zr4Fast(z) = &built {
        let sh = z.shape();
        rep.extras.zr4_candidates = Some((sh.candidates, 16 * rep.n.max(sh.z * sh.z * sh.t0)));
    }
    for (q, want) in qs.iter().zip(expected) {
        let mut c = Counters::new();
        let (got, note) = ctx.answer(&built, q, &mut c, &mut rep.extras)?;
        rep.sum += c;
        max_counters(&mut rep.max, &c);
        rep.checked += 1;
        let (got, dup) = normalize(got);
        let detail = if let Some(d) = dup {
            Some(format!("id {d} reported twice"))
        } else if got != want {
            Some("answer differs from the oracle".to_string())
        } else {
            note
        };
        if let Some(detail) = detail {
            rep.witness_boxes = witness_boxes(inst.boxes.as_slice(), q, inst, s);
            rep.mismatch = Some(Mismatch { query: Some(*q), expected: format!("{want:?}"), got: format!("{got:?}"), detail });
            break;
        }
    }
    Ok(rep)
}

/// An id reported for some query, removed by the corruption hook.
fn victim_of(ctx: &Ctx<'_>, qs: &[Query], expected: &[Answer]) -> Option<u32> {
    if ctx.s == Structure::Stab2Count {
        return qs.iter().find_map(|q| brute_stab2(&ctx.rects, [q.q[0], q.q[1]]).first().copied());
    }
    expected.iter().find_map(Answer::first_id)
}

fn verify_cuttings(ctx: &Ctx<'_>, qs: &[Query], mut rep: Report) -> Result<Report, HarnessError> {
    if ctx.points.iter().flatten().any(|v| v.abs() >= orthostab::geom::POS_INF) {
        return Err(HarnessError::Usage("cuttings need boxes with finite upper corners".into()));
    }
    let cb = ctx.coord_bits();
    let t = Instant::now();
    for &level in &ctx.opts.levels {
        if level == 0 {
            return Err(HarnessError::Usage("cutting levels must be positive".into()));
        }
        let mut report = if ctx.s == Structure::Cut2 {
            let pts: Vec<Point2> = ctx.points.iter().map(|p| [p[0], p[1]]).collect();
            let mut cut: ShallowCutting2 = build_cutting2(&pts, level);
            if ctx.opts.corrupt {
                damage(&mut cut.conflicts);
            }
            rep.bits_stored += cutting_bits(&cut.conflicts, cut.corners.len(), 2, cb);
            verify_cutting2(&cut, &pts, level, 8.0, 4)
        } else {
            let mut cut = build_cutting3(&ctx.points, level);
            if ctx.opts.corrupt {
                damage(&mut cut.conflicts);
            }
            rep.bits_stored += cutting_bits(&cut.conflicts, cut.corners.len(), 3, cb);
            let r = verify_cutting3(&cut, &ctx.points, level, 8.0, 4);
            let built = Built::Cut3(cut);
            for q in qs {
                let mut c = Counters::new();
                let (got, _) = ctx.answer(&built, q, &mut c, &mut rep.extras)?;
                rep.sum += c;
                max_counters(&mut rep.max, &c);
                rep.checked += 1;
                let Built::Cut3(cut) = &built else { unreachable!() };
                let want = Answer::Corner(least_corner(cut, [q.q[0], q.q[1]]));
                if got != want && rep.mismatch.is_none() {
                    rep.mismatch = Some(Mismatch {
                        query: Some(*q),
                        expected: format!("{want:?}"),
                        got: format!("{got:?}"),
                        detail: format!("FIND-ANY at level {level}"),
                    });
                }
            }
            r
        };
        if !report.passed && rep.mismatch.is_none() {
            report.witnesses.truncate(8);
            rep.mismatch = Some(Mismatch {
                query: None,
                expected: format!("cells <= {:.1}, conflicts <= {}, full coverage", report.cell_bound, report.conflict_bound),
                got: format!("{} cells, largest conflict list {}", report.cells, report.max_conflict),
                detail: format!("level {level}: {}", report.witnesses.join("; ")),
            });
        }
        rep.extras.cuttings.push((level, report));
    }
    rep.build_ms = t.elapsed().as_secs_f64() * 1e3;
    rep.build.bits_stored = rep.bits_stored;
    Ok(rep)
}

/// Drops one entry of the longest conflict list.
fn damage(conflicts: &mut [Vec<u32>]) {
    if let Some(l) = conflicts.iter_mut().max_by_key(|l| l.len()) {
        l.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::gen;

    fn opts() -> RunOptions {
        RunOptions { queries: 150, seed: 3, levels: vec![2, 8], ..Default::default() }
    }

    #[test]
    fn every_structure_passes_on_its_kind() {
        for s in Structure::ALL {
            for n in [0, 1, 40, 300] {
                let inst = gen(s.default_kind(), n, 4 * n as i64 + 4, n as u64 + 7, 4).unwrap();
                let rep = verify(s, &inst, &opts()).unwrap();
                assert!(rep.passed(), "{rep}");
                if !s.is_cutting() {
                    assert_eq!(rep.checked, 150, "{s}");
                }
            }
        }
    }

    #[test]
    fn corruption_is_detected() {
        for s in Structure::ALL {
            let inst = gen(s.default_kind(), 300, 1200, 11, 4).unwrap();
            let rep = verify(s, &inst, &RunOptions { corrupt: true, ..opts() }).unwrap();
            assert!(!rep.passed(), "{s} missed the damaged index");
            assert!(rep.to_string().starts_with("FAIL"));
        }
    }

    #[test]
    fn incompatible_kind_is_a_usage_error() {
        let inst = gen(Kind::Stab6, 10, 40, 1, 2).unwrap();
        assert!(matches!(verify(Structure::Pl3d, &inst, &opts()), Err(HarnessError::Usage(_))));
    }

    #[test]
    fn dichotomy_is_recorded() {
        let inst = gen(Kind::PlDisjoint, 2000, 8000, 5, 2).unwrap();
        let o = RunOptions { check_dichotomy: true, params: ModelParams { leaf_threshold: 4, ..Default::default() }, ..opts() };
        let rep = verify(Structure::Pl3d, &inst, &o).unwrap();
        assert!(rep.passed(), "{rep}");
        assert!(rep.extras.dichotomy_steps > 0);
    }
}
