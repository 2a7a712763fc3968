//! 3-d point location over disjoint boxes by round-robin square-root slab
//! recursion.
//!
//! Each node cuts its widest axis into about `sqrt(U)` equal slabs. A box
//! inside one slab is short and recurses into that slab. A longer box splits
//! into a left piece (in its first slab), a right piece (in its last slab) and
//! a middle piece over the slabs in between, which recurses with the axis
//! replaced by slab indices. Left pieces of one slab all reach the slab's right
//! boundary, so their projections are disjoint and a 2-d point location finds
//! the candidate; right pieces likewise. A 2-d stabbing count over the short
//! projections then decides which child can hold the answer: a middle piece
//! spans the whole slab, so it cannot contain the query when some short box
//! projection does.

use crate::counters::{bits_for, BuildStats, Counters};
use crate::error::{Error, Result};
use crate::geom::{AxisCompress, Box3, Point3, NEG_INF, POS_INF};
use crate::range2d::{LabeledRect, Pl2, StabCount2};

/// Closed box in node-local coordinates with the id of the box it came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Piece {
    pub lo: Point3,
    pub hi: Point3,
    pub orig: u32,
}

impl Piece {
    pub fn contains(&self, q: Point3) -> bool {
        (0..3).all(|a| self.lo[a] <= q[a] && q[a] <= self.hi[a])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pl3Options {
    pub leaf_threshold: usize,
    /// Keep every node's input pieces, for [`Pl3d::trace`] checks.
    pub keep_inputs: bool,
    /// Build, meter and discard the per-node structures; queries then fail.
    pub measure_only: bool,
}

impl Default for Pl3Options {
    fn default() -> Self {
        Pl3Options { leaf_threshold: 32, keep_inputs: false, measure_only: false }
    }
}

#[derive(Debug, Clone)]
struct Slab {
    left: Pl2,
    /// Per left piece: its lower bound along the slab axis and its local id.
    left_ext: Vec<(i64, u32)>,
    right: Pl2,
    right_ext: Vec<(i64, u32)>,
    short: StabCount2,
    child: Option<Box<Node>>,
}

#[derive(Debug, Clone)]
enum Kind {
    Leaf(Vec<Piece>),
    Split {
        axis: usize,
        width: i64,
        slabs: Vec<Slab>,
        middle: Option<Box<Node>>,
        /// (local piece id, original id), sorted.
        piece_map: Vec<(u32, u32)>,
    },
}

#[derive(Debug, Clone)]
struct Node {
    kind: Kind,
    input: Vec<Piece>,
}

/// One query step at a split node, for checking the short/middle dichotomy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    /// Query in the node's local coordinates.
    pub q: Point3,
    pub axis: usize,
    pub slab: usize,
    /// Some short projection of the slab contains the query.
    pub short_hit: bool,
    /// Input pieces of the slab's short child, in its coordinates.
    pub short_pieces: Vec<Piece>,
    /// Input pieces of the middle child, in its coordinates.
    pub middle_pieces: Vec<Piece>,
    pub width: i64,
}

#[derive(Debug, Clone)]
pub struct Pl3d {
    comp: [AxisCompress; 3],
    root: Option<Node>,
    len: usize,
    stats: BuildStats,
}

struct Ctx {
    opts: Pl3Options,
    id_bits: u64,
    stats: BuildStats,
}

fn to_local(comp: &[AxisCompress; 3], b: &Box3) -> Piece {
    let (lo, hi) = b.corners();
    let mut p = Piece { lo, hi, orig: b.id };
    for a in 0..3 {
        p.lo[a] = if lo[a] == NEG_INF { 0 } else { comp[a].lo(lo[a]) };
        p.hi[a] = if hi[a] == POS_INF { comp[a].len() as i64 } else { comp[a].hi(hi[a]) };
    }
    p
}

impl Pl3d {
    /// Builds over pairwise disjoint boxes (unbounded sides allowed).
    pub fn new(boxes: &[Box3], opts: Pl3Options) -> Result<Self> {
        for b in boxes {
            b.validate()?;
        }
        if opts.leaf_threshold == 0 {
            return Err(Error::InvalidParams("leaf threshold must be positive".into()));
        }
        let comp = [0, 1, 2].map(|a| AxisCompress::from_intervals(boxes.iter().map(|b| b.axes[a].closed())));
        let pieces: Vec<Piece> = boxes.iter().map(|b| to_local(&comp, b)).collect();
        let max_id = boxes.iter().map(|b| b.id as u64).max().unwrap_or(0);
        let mut ctx = Ctx { opts, id_bits: bits_for(max_id + 1), stats: BuildStats::default() };
        let universe = [0, 1, 2].map(|a| comp[a].universe());
        let root = build(pieces, universe, 0, &mut ctx)?;
        ctx.stats.bits_stored += comp.iter().map(|c| c.len() as u64).sum::<u64>() * bits_for(2 * boxes.len() as u64);
        Ok(Pl3d { comp, root: (!opts.measure_only).then_some(root), len: boxes.len(), stats: ctx.stats })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn stats(&self) -> BuildStats {
        self.stats
    }

    /// Root universes after compression.
    pub fn universe(&self) -> [i64; 3] {
        [0, 1, 2].map(|a| self.comp[a].universe())
    }

    fn root_point(&self, q: Point3, c: &mut Counters) -> Point3 {
        [0, 1, 2].map(|a| self.comp[a].locate(q[a], c))
    }

    /// Id of the box containing `q`, if any.
    pub fn query(&self, q: Point3, c: &mut Counters) -> Result<Option<u32>> {
        let root = self.root.as_ref().ok_or_else(|| Error::InvalidParams("built in measure-only mode".into()))?;
        let p = self.root_point(q, c);
        let r = query_node(root, p, c, None);
        if r.is_some() {
            c.output_size += 1;
        }
        Ok(r)
    }

    /// Like [`Pl3d::query`], also recording every split-node step. Needs
    /// `keep_inputs`.
    pub fn trace(&self, q: Point3, c: &mut Counters) -> Result<(Option<u32>, Vec<TraceStep>)> {
        let root = self.root.as_ref().ok_or_else(|| Error::InvalidParams("built in measure-only mode".into()))?;
        let p = self.root_point(q, c);
        let mut steps = Vec::new();
        let r = query_node(root, p, c, Some(&mut steps));
        Ok((r, steps))
    }
}

fn query_node(mut node: &Node, mut p: Point3, c: &mut Counters, mut trace: Option<&mut Vec<TraceStep>>) -> Option<u32> {
    loop {
        c.nodes_visited += 1;
        match &node.kind {
            Kind::Leaf(ps) => {
                for b in ps {
                    c.cells_scanned += 1;
                    if b.contains(p) {
                        return Some(b.orig);
                    }
                }
                return None;
            }
            Kind::Split { axis, width, slabs, middle, piece_map } => {
                let a = *axis;
                let [o1, o2] = others(a);
                let i = (p[a] / width) as usize;
                let slab = &slabs[i];
                let proj = [p[o1], p[o2]];
                let decode = |local: u32, c: &mut Counters| {
                    let k = crate::counters::partition_counted(piece_map, c, |e| e.0 < local);
                    piece_map[k].1
                };
                if let Some(l) = slab.left.query(proj, c) {
                    let (lo, local) = slab.left_ext[l as usize];
                    if p[a] >= lo {
                        return Some(decode(local, c));
                    }
                }
                if let Some(r) = slab.right.query(proj, c) {
                    let (hi, local) = slab.right_ext[r as usize];
                    if p[a] <= hi {
                        return Some(decode(local, c));
                    }
                }
                let short_hit = slab.short.count(proj, c) > 0;
                if let Some(t) = trace.as_deref_mut() {
                    t.push(TraceStep {
                        q: p,
                        axis: a,
                        slab: i,
                        short_hit,
                        short_pieces: slab.child.as_ref().map(|ch| ch.input.clone()).unwrap_or_default(),
                        middle_pieces: middle.as_ref().map(|m| m.input.clone()).unwrap_or_default(),
                        width: *width,
                    });
                }
                if short_hit {
                    p[a] -= i as i64 * width;
                    node = slab.child.as_deref()?;
                } else {
                    p[a] = i as i64;
                    node = middle.as_deref()?;
                }
            }
        }
    }
}

fn others(a: usize) -> [usize; 2] {
    match a {
        0 => [1, 2],
        1 => [0, 2],
        _ => [0, 1],
    }
}

fn max_axis(u: [i64; 3]) -> usize {
    let mut best = 0;
    for a in 1..3 {
        if u[a] > u[best] {
            best = a;
        }
    }
    best
}

/// Slab count and width for an axis universe `u`.
pub fn slab_shape(u: i64) -> (usize, i64) {
    let s = (u as f64).sqrt().ceil() as i64;
    let s = if s * s < u { s + 1 } else { s };
    let width = (u + s - 1) / s;
    (((u + width - 1) / width) as usize, width)
}

fn build(pieces: Vec<Piece>, u: [i64; 3], depth: u32, ctx: &mut Ctx) -> Result<Node> {
    let m = pieces.len();
    ctx.stats.nodes += 1;
    ctx.stats.depth = ctx.stats.depth.max(depth);
    ctx.stats.piece_incidences += m as u64;
    let axis = max_axis(u);
    let input = if ctx.opts.keep_inputs { pieces.clone() } else { Vec::new() };
    if m <= ctx.opts.leaf_threshold || u[axis] <= 1 {
        check_leaf(&pieces)?;
        let coord: u64 = (0..3).map(|a| 2 * bits_for(u[a] as u64)).sum();
        ctx.stats.bits_stored += m as u64 * (coord + ctx.id_bits);
        let kind = Kind::Leaf(if ctx.opts.measure_only { Vec::new() } else { pieces });
        return Ok(Node { kind, input });
    }
    let [o1, o2] = others(axis);
    let (nslabs, width) = slab_shape(u[axis]);
    let mut left: Vec<Vec<(LabeledRect, (i64, u32))>> = vec![Vec::new(); nslabs];
    let mut right = left.clone();
    let mut short: Vec<Vec<Piece>> = vec![Vec::new(); nslabs];
    let mut middle = Vec::new();
    let mut piece_map = Vec::new();
    for (local, p) in pieces.into_iter().enumerate() {
        let (sl, sr) = ((p.lo[axis] / width) as usize, (p.hi[axis] / width) as usize);
        if sl == sr {
            let mut s = p;
            s.lo[axis] -= sl as i64 * width;
            s.hi[axis] -= sl as i64 * width;
            short[sl].push(s);
            continue;
        }
        let local = local as u32;
        piece_map.push((local, p.orig));
        let rect = LabeledRect { lo: [p.lo[o1], p.lo[o2]], hi: [p.hi[o1], p.hi[o2]], label: left[sl].len() as u32 };
        left[sl].push((rect, (p.lo[axis], local)));
        let rect = LabeledRect { label: right[sr].len() as u32, ..rect };
        right[sr].push((rect, (p.hi[axis], local)));
        if sr - sl >= 2 {
            let mut mid = p;
            mid.lo[axis] = sl as i64 + 1;
            mid.hi[axis] = sr as i64 - 1;
            middle.push(mid);
        }
    }
    let local_bits = bits_for(m as u64);
    let plane_bits = bits_for(u[o1].max(u[o2]) as u64);
    ctx.stats.bits_stored += piece_map.len() as u64 * (local_bits + ctx.id_bits);
    let mut slabs = Vec::with_capacity(nslabs);
    for (i, ((l, r), sh)) in left.into_iter().zip(right).zip(short).enumerate() {
        let ext_bits = bits_for(width as u64) + local_bits;
        let (lrects, left_ext): (Vec<LabeledRect>, Vec<(i64, u32)>) = l.into_iter().unzip();
        let (rrects, right_ext): (Vec<LabeledRect>, Vec<(i64, u32)>) = r.into_iter().unzip();
        let lpl = Pl2::new(&lrects, ctx.opts.leaf_threshold)?;
        let rpl = Pl2::new(&rrects, ctx.opts.leaf_threshold)?;
        let projections: Vec<_> = sh.iter().map(|s| ([s.lo[o1], s.lo[o2]], [s.hi[o1], s.hi[o2]])).collect();
        let count = StabCount2::new(&projections);
        ctx.stats.bits_stored += lpl.bits_with_coords(plane_bits)
            + rpl.bits_with_coords(plane_bits)
            + (left_ext.len() + right_ext.len()) as u64 * ext_bits
            + count.bits_stored(plane_bits);
        let child = if sh.is_empty() {
            None
        } else {
            let mut cu = u;
            cu[axis] = width.min(u[axis] - i as i64 * width);
            Some(Box::new(build(sh, cu, depth + 1, ctx)?))
        };
        if !ctx.opts.measure_only {
            slabs.push(Slab { left: lpl, left_ext, right: rpl, right_ext, short: count, child });
        }
    }
    let middle = if middle.is_empty() {
        None
    } else {
        let mut mu = u;
        mu[axis] = nslabs as i64;
        Some(Box::new(build(middle, mu, depth + 1, ctx)?))
    };
    if ctx.opts.measure_only {
        piece_map = Vec::new();
    }
    Ok(Node { kind: Kind::Split { axis, width, slabs, middle, piece_map }, input })
}

fn check_leaf(ps: &[Piece]) -> Result<()> {
    for i in 0..ps.len() {
        for j in i + 1..ps.len() {
            let (a, b) = (&ps[i], &ps[j]);
            if (0..3).all(|k| a.lo[k] <= b.hi[k] && b.lo[k] <= a.hi[k]) {
                return Err(Error::NotDisjoint { a: a.orig, b: b.orig });
            }
        }
    }
    Ok(())
}

/// Free-function form of [`Pl3d::new`].
pub fn build_pl3(boxes: &[Box3], opts: Pl3Options) -> Result<Pl3d> {
    Pl3d::new(boxes, opts)
}

/// Free-function form of [`Pl3d::query`].
pub fn query_pl3(pl: &Pl3d, q: Point3, c: &mut Counters) -> Result<Option<u32>> {
    pl.query(q, c)
}
