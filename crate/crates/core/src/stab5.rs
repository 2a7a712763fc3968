//! 5-sided rectangle stabbing: boxes `[x1,x2] x [y1,y2] x (-inf, z2]`.
//!
//! [`Stab5`] runs the grid recursion. Grid rectangles of a node are answered
//! through per-cell `Top` lists (the covering rectangles of largest `z2`); a
//! list read to its end with every entry still matching means the node holds
//! at least `Top`-length answers, and [`SlowStab5`] reports them instead.
//! [`OrientedStab5`] accepts any one unbounded side.

use crate::centered::{Centered, Key, Rect2};
use crate::counters::{bits_for, BuildStats, Counters};
use crate::domcut::Dominance3;
use crate::error::{Error, Result};
use crate::geom::{AxisCompress, Box3, ExtBound, Interval, Point2, Point3};
use crate::gridtree::{Encoding, GridRect, GridTree, NodeCtx, Stop, Stored, TreeStats};
use crate::params::ModelParams;

/// Canonical shape check: finite x and y, z unbounded below only.
fn check_canonical(b: &Box3) -> Result<()> {
    b.validate()?;
    let ok = b.axes[0].finite_sides() == 2
        && b.axes[1].finite_sides() == 2
        && b.axes[2].lo == ExtBound::NegInf
        && b.axes[2].hi.is_finite();
    if ok {
        Ok(())
    } else {
        Err(Error::WrongShape { id: b.id, reason: "expected [x1,x2] x [y1,y2] x (-inf, z2]".into() })
    }
}

/// Linear scan over rectangles with `z2` payload.
#[derive(Debug, Clone, Default)]
pub struct LeafStab5 {
    rects: Vec<Rect2<i64>>,
}

impl LeafStab5 {
    pub fn new(rects: Vec<Rect2<i64>>) -> Self {
        LeafStab5 { rects }
    }

    /// Whole-input leaf; refuses more than `limit` boxes.
    pub fn from_boxes(boxes: &[Box3], limit: usize) -> Result<Self> {
        if boxes.len() > limit {
            return Err(Error::TooLarge { got: boxes.len(), limit });
        }
        Ok(LeafStab5 { rects: raw_rects(boxes)? })
    }

    pub fn len(&self) -> usize {
        self.rects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    pub fn query(&self, q: Point3, c: &mut Counters, out: &mut Vec<u32>) {
        for r in &self.rects {
            c.cells_scanned += 1;
            if q[2] <= r.payload && r.contains([q[0], q[1]]) {
                out.push(r.id);
            }
        }
    }
}

fn raw_rects(boxes: &[Box3]) -> Result<Vec<Rect2<i64>>> {
    boxes
        .iter()
        .map(|b| {
            check_canonical(b)?;
            let (lo, hi) = b.corners();
            Ok(Rect2 { lo: [lo[0], lo[1]], hi: [hi[0], hi[1]], id: b.id, payload: hi[2] })
        })
        .collect()
}

/// Two-level centered tree whose node pairs hold four 3-d dominance
/// structures: O(log^2 n) dominance queries per stabbing query.
#[derive(Debug, Clone)]
pub struct SlowStab5 {
    tree: Centered<Dominance3>,
}

impl SlowStab5 {
    pub fn new(rects: Vec<Rect2<i64>>) -> Self {
        let tree = Centered::new(rects, &mut |rs: &[Rect2<i64>], k: Key| {
            Dominance3::new(rs.iter().map(|r| (lift(k.point(r), r.payload), r.id)).collect())
        });
        SlowStab5 { tree }
    }

    pub fn from_boxes(boxes: &[Box3]) -> Result<Self> {
        Ok(Self::new(raw_rects(boxes)?))
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    pub fn query(&self, q: Point3, c: &mut Counters, out: &mut Vec<u32>) {
        self.tree.visit([q[0], q[1]], c, &mut |d, k, c| {
            d.query(lift(k.query([q[0], q[1]]), q[2]), c, &mut |id| out.push(id));
        });
    }

    pub fn bits_stored(&self, coord_bits: u64) -> u64 {
        self.tree.parts().map(|d| d.bits_stored(coord_bits, coord_bits)).sum::<u64>()
            + self.tree.nodes() as u64 * 3 * coord_bits
    }
}

fn lift(p: Point2, z: i64) -> Point3 {
    [p[0], p[1], z]
}

/// Grid storage: `Top` lists in CSR form plus the slow fallback.
pub struct TopGrid {
    rows: usize,
    z2: Vec<i64>,
    ids: Vec<u32>,
    offsets: Vec<u32>,
    entries: Vec<u32>,
    top_len: usize,
    slow: SlowStab5,
}

/// Fills per-cell lists with rectangles taken in `order`, each list capped at
/// `cap`. Rows of each column skip full cells through a union-find.
pub(crate) fn fill_lists<P>(
    rects: &[GridRect<P>],
    order: &[u32],
    cols: usize,
    rows: usize,
    cap: usize,
) -> (Vec<u32>, Vec<u32>) {
    let mut lists: Vec<Vec<u32>> = vec![Vec::new(); cols * rows];
    let mut next: Vec<u32> = (0..(cols * (rows + 1)) as u32).collect();
    fn find(next: &mut [u32], mut i: usize) -> usize {
        while next[i] as usize != i {
            let up = next[next[i] as usize];
            next[i] = up;
            i = up as usize;
        }
        i
    }
    for &k in order {
        let g = &rects[k as usize];
        for col in g.cells_lo[0]..=g.cells_hi[0] {
            let base = col * (rows + 1);
            let mut r = find(&mut next, base + g.cells_lo[1]) - base;
            while r <= g.cells_hi[1] {
                let cell = &mut lists[col * rows + r];
                cell.push(k);
                if cell.len() >= cap {
                    next[base + r] = (base + r + 1) as u32;
                }
                r = find(&mut next, base + r + 1) - base;
            }
        }
    }
    let mut offsets = Vec::with_capacity(lists.len() + 1);
    let mut entries = Vec::new();
    offsets.push(0);
    for l in lists {
        entries.extend(l);
        offsets.push(entries.len() as u32);
    }
    (offsets, entries)
}

/// The [`Encoding`] of [`Stab5`]; also reused standalone for tests.
#[derive(Debug, Clone, Copy)]
pub struct Stab5Enc {
    pub params: ModelParams,
}

impl Encoding for Stab5Enc {
    type Payload = i64;
    type Leaf = LeafStab5;
    type Fat = SlowStab5;
    type Grid = TopGrid;
    type Slab = [Option<Dominance3>; 4];

    fn leaf(&self, _: &NodeCtx, pieces: Vec<Rect2<i64>>) -> LeafStab5 {
        LeafStab5::new(pieces)
    }

    fn fat(&self, _: &NodeCtx, pieces: Vec<Rect2<i64>>) -> SlowStab5 {
        SlowStab5::new(pieces)
    }

    fn grid(&self, ctx: &NodeCtx, rects: Vec<GridRect<i64>>) -> TopGrid {
        let mut order: Vec<u32> = (0..rects.len() as u32).collect();
        order.sort_unstable_by_key(|&k| {
            let r = &rects[k as usize].rect;
            (std::cmp::Reverse(r.payload), r.id)
        });
        let top_len = self.params.top_len(ctx.m);
        let (offsets, entries) = fill_lists(&rects, &order, ctx.cols, ctx.rows, top_len);
        TopGrid {
            rows: ctx.rows,
            z2: rects.iter().map(|g| g.rect.payload).collect(),
            ids: rects.iter().map(|g| g.rect.id).collect(),
            offsets,
            entries,
            top_len,
            slow: SlowStab5::new(rects.iter().map(|g| g.rect).collect()),
        }
    }

    fn slab(&self, _: &NodeCtx, pieces: Vec<(Rect2<i64>, Key)>) -> [Option<Dominance3>; 4] {
        let mut by_key: [Vec<(Point3, u32)>; 4] = Default::default();
        for (r, k) in pieces {
            by_key[k.index()].push((lift(k.point(&r), r.payload), r.id));
        }
        by_key.map(|v| (!v.is_empty()).then(|| Dominance3::new(v)))
    }

    fn payload_bits(&self, coord_bits: u64) -> u64 {
        coord_bits
    }

    fn aux_bits(&self, ctx: &NodeCtx, s: Stored<'_, Self>) -> u64 {
        let b = ctx.coord_bits;
        match s {
            Stored::Grid(g) => {
                g.entries.len() as u64 * bits_for(g.z2.len() as u64)
                    + g.offsets.len() as u64 * bits_for(g.entries.len() as u64 + 1)
                    + g.slow.bits_stored(b)
            }
            Stored::Slab(s) => s.iter().flatten().map(|d| d.bits_stored(b, b)).sum(),
            Stored::Fat(f) => f.bits_stored(b),
            Stored::Leaf(_) => 0,
        }
    }
}

impl TopGrid {
    /// Grid rectangles containing `q`; true when the slow path answered.
    fn query(&self, cell: [usize; 2], q: Point3, c: &mut Counters, out: &mut Vec<u32>) -> bool {
        let k = cell[0] * self.rows + cell[1];
        let list = &self.entries[self.offsets[k] as usize..self.offsets[k + 1] as usize];
        let start = out.len();
        for &e in list {
            c.cells_scanned += 1;
            if self.z2[e as usize] < q[2] {
                return false;
            }
            out.push(self.ids[e as usize]);
        }
        if list.len() == self.top_len {
            out.truncate(start);
            self.slow.query(q, c, out);
            return true;
        }
        false
    }
}

/// Query-side counts beyond [`Counters`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stab5Trace {
    pub slow_fallbacks: u64,
}

/// The grid-recursion structure over canonical 5-sided boxes.
pub struct Stab5 {
    axes: [AxisCompress; 3],
    tree: GridTree<Stab5Enc>,
    len: usize,
}

impl Stab5 {
    pub fn new(boxes: &[Box3], params: ModelParams) -> Result<Self> {
        Self::build(boxes, params, false)
    }

    /// Builds the recursion and its accounting without the query tables.
    pub fn measure(boxes: &[Box3], params: ModelParams) -> Result<Self> {
        Self::build(boxes, params, true)
    }

    fn build(boxes: &[Box3], params: ModelParams, measure_only: bool) -> Result<Self> {
        params.validate()?;
        let raw = raw_rects(boxes)?;
        let axes = [
            AxisCompress::from_intervals(raw.iter().map(|r| (r.lo[0], r.hi[0]))),
            AxisCompress::from_intervals(raw.iter().map(|r| (r.lo[1], r.hi[1]))),
            AxisCompress::from_intervals(raw.iter().map(|r| (crate::geom::NEG_INF, r.payload))),
        ];
        let pieces = raw
            .iter()
            .map(|r| Rect2 {
                lo: [axes[0].lo(r.lo[0]), axes[1].lo(r.lo[1])],
                hi: [axes[0].hi(r.hi[0]), axes[1].hi(r.hi[1])],
                id: r.id,
                payload: axes[2].hi(r.payload),
            })
            .collect();
        let hi = [axes[0].len() as i64, axes[1].len() as i64];
        let tree = GridTree::new(Stab5Enc { params }, params, pieces, [0, 0], hi, measure_only);
        Ok(Stab5 { axes, tree, len: boxes.len() })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn stats(&self) -> BuildStats {
        self.tree.stats().build
    }

    pub fn tree_stats(&self) -> TreeStats {
        self.tree.stats()
    }

    /// Recursion nodes a query at `q` enters, excluding work inside the
    /// per-node tables. Available in measure-only builds.
    pub fn tree_nodes_visited(&self, q: Point3) -> u64 {
        let mut c = Counters::new();
        let r = [0, 1].map(|a| self.axes[a].locate(q[a], &mut c));
        let mut t = Counters::new();
        self.tree.visit(r, &mut t, &mut |_, _| {});
        t.nodes_visited
    }

    /// Ids of the boxes containing `q`, ascending.
    pub fn query(&self, q: Point3, c: &mut Counters) -> Result<Vec<u32>> {
        Ok(self.query_traced(q, c)?.0)
    }

    pub fn query_traced(&self, q: Point3, c: &mut Counters) -> Result<(Vec<u32>, Stab5Trace)> {
        let mut out = Vec::new();
        let mut trace = Stab5Trace::default();
        let r = [0, 1, 2].map(|a| self.axes[a].locate(q[a], c));
        self.tree.visit([r[0], r[1]], c, &mut |stop, c| match stop {
            Stop::Leaf(l) => l.query(r, c, &mut out),
            Stop::Fat(f) => f.query(r, c, &mut out),
            Stop::Grid { grid, cell, col, row } => {
                if let Some(g) = grid {
                    trace.slow_fallbacks += g.query(cell, r, c, &mut out) as u64;
                }
                for s in [col, row].into_iter().flatten() {
                    for (i, d) in s.iter().enumerate() {
                        if let Some(d) = d {
                            let k = Key::ALL[i];
                            d.query(lift(k.query([r[0], r[1]]), r[2]), c, &mut |id| out.push(id));
                        }
                    }
                }
            }
        });
        out.sort_unstable();
        c.output_size += out.len() as u64;
        Ok((out, trace))
    }
}

/// Axis permutation and sign that turn one 5-sided orientation into the
/// canonical one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Frame {
    /// Axis carrying the unbounded side.
    open: usize,
    /// Unbounded above: negate that axis.
    negate: bool,
}

impl Frame {
    fn of(b: &Box3) -> Result<Self> {
        b.validate()?;
        if b.sidedness() != 5 {
            return Err(Error::WrongShape { id: b.id, reason: "expected exactly one unbounded side".into() });
        }
        let open = (0..3).find(|&a| b.axes[a].finite_sides() == 1).expect("one open axis");
        Ok(Frame { open, negate: b.axes[open].hi == ExtBound::PosInf })
    }

    fn order(self) -> [usize; 3] {
        match self.open {
            0 => [1, 2, 0],
            1 => [0, 2, 1],
            _ => [0, 1, 2],
        }
    }

    fn apply_box(self, b: &Box3) -> Box3 {
        let o = self.order();
        let mut z = b.axes[o[2]];
        if self.negate {
            z = Interval::up_to(-z.lo.finite().expect("finite lower side"));
        }
        Box3 { id: b.id, axes: [b.axes[o[0]], b.axes[o[1]], z], weight: b.weight }
    }

    fn apply_point(self, q: Point3) -> Point3 {
        let o = self.order();
        [q[o[0]], q[o[1]], if self.negate { -q[o[2]] } else { q[o[2]] }]
    }
}

/// 5-sided stabbing for any mix of orientations: one [`Stab5`] per
/// orientation present.
pub struct OrientedStab5 {
    parts: Vec<(Frame, Stab5)>,
}

impl OrientedStab5 {
    pub fn new(boxes: &[Box3], params: ModelParams) -> Result<Self> {
        let mut groups: Vec<(Frame, Vec<Box3>)> = Vec::new();
        for b in boxes {
            let f = Frame::of(b)?;
            let canon = f.apply_box(b);
            match groups.iter_mut().find(|g| g.0 == f) {
                Some(g) => g.1.push(canon),
                None => groups.push((f, vec![canon])),
            }
        }
        let parts = groups
            .into_iter()
            .map(|(f, bs)| Ok((f, Stab5::new(&bs, params)?)))
            .collect::<Result<_>>()?;
        Ok(OrientedStab5 { parts })
    }

    pub fn stats(&self) -> BuildStats {
        let mut s = BuildStats::default();
        for (_, p) in &self.parts {
            s += p.stats();
        }
        s
    }

    pub fn query(&self, q: Point3, c: &mut Counters) -> Result<Vec<u32>> {
        let mut out = Vec::new();
        for (f, p) in &self.parts {
            out.extend(p.query(f.apply_point(q), c)?);
        }
        out.sort_unstable();
        Ok(out)
    }
}

pub fn build_stab5(boxes: &[Box3], params: ModelParams) -> Result<Stab5> {
    Stab5::new(boxes, params)
}

pub fn query_stab5(s: &Stab5, q: Point3, c: &mut Counters) -> Result<Vec<u32>> {
    s.query(q, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::brute_stab;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn boxes(n: usize, u: i64, seed: u64) -> Vec<Box3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n as u32)
            .map(|id| {
                let mut iv = || {
                    let (a, b) = (rng.gen_range(0..u), rng.gen_range(0..u));
                    Interval::new(a.min(b), a.max(b))
                };
                let (x, y) = (iv(), iv());
                Box3::new(id, x, y, Interval::up_to(rng.gen_range(0..u)))
            })
            .collect()
    }

    fn queries(n: usize, u: i64, seed: u64) -> Vec<Point3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| [0; 3].map(|_| rng.gen_range(-1..=u))).collect()
    }

    #[test]
    fn grid_tree_matches_oracle() {
        for (n, seed) in [(1, 1), (5, 2), (40, 3), (300, 4), (2000, 5)] {
            let bs = boxes(n, 4 * n as i64 + 4, seed);
            for top_len in [None, Some(3)] {
                let p = ModelParams { top_len, leaf_threshold: 8, ..Default::default() };
                let s = Stab5::new(&bs, p).unwrap();
                let mut c = Counters::new();
                let mut fallbacks = 0;
                for q in queries(300, 4 * n as i64 + 4, seed + 9) {
                    let (got, t) = s.query_traced(q, &mut c).unwrap();
                    fallbacks += t.slow_fallbacks;
                    assert_eq!(got, brute_stab(&bs, q), "n={n} q={q:?}");
                }
                if top_len.is_some() && n >= 300 {
                    assert!(fallbacks > 0, "short lists must force the slow path");
                }
            }
        }
    }

    #[test]
    fn slow_and_leaf_match_oracle() {
        let bs = boxes(500, 200, 8);
        let slow = SlowStab5::from_boxes(&bs).unwrap();
        let leaf = LeafStab5::from_boxes(&bs, bs.len()).unwrap();
        assert!(LeafStab5::from_boxes(&bs, 10).is_err());
        let mut c = Counters::new();
        for q in queries(400, 200, 3) {
            let want = brute_stab(&bs, q);
            let mut a = Vec::new();
            slow.query(q, &mut c, &mut a);
            a.sort_unstable();
            assert_eq!(a, want);
            let mut b = Vec::new();
            leaf.query(q, &mut c, &mut b);
            assert_eq!(b, want);
        }
    }

    #[test]
    fn measure_only_matches_full_build() {
        for n in [100, 1000, 4096] {
            let bs = boxes(n, 4 * n as i64, n as u64);
            let p = ModelParams::default();
            let full = Stab5::new(&bs, p).unwrap();
            let skel = Stab5::measure(&bs, p).unwrap();
            assert_eq!(full.stats(), skel.stats());
            for q in queries(200, 4 * n as i64, 1) {
                assert_eq!(full.tree_nodes_visited(q), skel.tree_nodes_visited(q));
            }
        }
    }

    #[test]
    fn rejects_other_shapes() {
        let b = Box3::new(0, Interval::new(0, 1), Interval::from(3), Interval::up_to(2));
        assert!(matches!(Stab5::new(&[b], ModelParams::default()), Err(Error::WrongShape { .. })));
    }

    #[test]
    fn every_orientation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut bs = Vec::new();
        for id in 0..600u32 {
            let open = rng.gen_range(0..3);
            let up = rng.gen_bool(0.5);
            let axes = [0; 3].map(|_| {
                let (a, b) = (rng.gen_range(0..50), rng.gen_range(0..50));
                Interval::new(a.min(b), a.max(b))
            });
            let mut axes = axes;
            let (lo, hi) = axes[open].closed();
            axes[open] = if up { Interval::from(lo) } else { Interval::up_to(hi) };
            bs.push(Box3 { id, axes, weight: None });
        }
        let s = OrientedStab5::new(&bs, ModelParams { leaf_threshold: 4, ..Default::default() }).unwrap();
        let mut c = Counters::new();
        for q in queries(500, 50, 6) {
            assert_eq!(s.query(q, &mut c).unwrap(), brute_stab(&bs, q));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn prop_matches_oracle(seed in any::<u64>(), n in 1usize..200, tl in 1usize..6) {
            let bs = boxes(n, 30, seed);
            let p = ModelParams { top_len: Some(tl), leaf_threshold: 4, ..Default::default() };
            let s = Stab5::new(&bs, p).unwrap();
            let mut c = Counters::new();
            for q in queries(40, 30, seed ^ 7) {
                prop_assert_eq!(s.query(q, &mut c).unwrap(), brute_stab(&bs, q));
            }
        }
    }
}
