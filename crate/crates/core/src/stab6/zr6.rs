//! z-restricted 6-sided stabbing: boxes `[x1,x2] x [y1,y2] x [i,j]` with
//! `i, j` in `[0, f)`.
//!
//! The grid recursion with per-(cell, z) `Cover` lists of the lowest-id
//! grid rectangles that cover the cell and contain z. A full list sends the
//! query to [`SlowZr6`]. Slab pieces go to four orientation-keyed
//! [`Zr4Fast`] structures.

use crate::centered::{Key, Rect2};
use crate::counters::{bits_for, BuildStats, Counters};
use crate::error::{Error, Result};
use crate::geom::{AxisCompress, Box3, Point3};
use crate::gridtree::{Encoding, GridRect, GridTree, NodeCtx, Stop, Stored, TreeStats};
use crate::params::ModelParams;
use crate::stab5::{fill_lists, SlowStab5};

use super::zr4::{Zr4Fast, Zr4Item};

/// Rectangle with z-range `[i, j]`.
pub type ZRect = Rect2<[u32; 2]>;

fn z_ok(r: &ZRect, qz: i64) -> bool {
    r.payload[0] as i64 <= qz && qz <= r.payload[1] as i64
}

/// Checks the shape and the z-universe `[0, f)`.
pub fn zr6_rects(boxes: &[Box3], f: usize) -> Result<Vec<ZRect>> {
    boxes
        .iter()
        .map(|b| {
            b.validate()?;
            if b.sidedness() != 6 {
                return Err(Error::WrongShape { id: b.id, reason: "expected a fully bounded box".into() });
            }
            let (lo, hi) = b.corners();
            if lo[2] < 0 || hi[2] >= f as i64 {
                return Err(Error::WrongShape { id: b.id, reason: format!("z must lie in [0, {f})") });
            }
            Ok(Rect2 { lo: [lo[0], lo[1]], hi: [hi[0], hi[1]], id: b.id, payload: [lo[2] as u32, hi[2] as u32] })
        })
        .collect()
}

#[derive(Debug, Clone)]
struct SlowNode {
    mid: u32,
    /// `i <= qz` as `-i >= -qz`.
    low: SlowStab5,
    /// `qz <= j`.
    high: SlowStab5,
    kids: [Option<u32>; 2],
}

/// Binary interval tree over `[0, f)` of 5-sided slow structures.
#[derive(Debug, Clone)]
pub struct SlowZr6 {
    nodes: Vec<SlowNode>,
    root: Option<u32>,
}

impl SlowZr6 {
    pub fn new(rects: Vec<ZRect>, f: usize) -> Self {
        let mut t = SlowZr6 { nodes: Vec::new(), root: None };
        t.root = t.build(rects, 0, f.max(1) as u32 - 1);
        t
    }

    fn build(&mut self, rs: Vec<ZRect>, a: u32, b: u32) -> Option<u32> {
        if rs.is_empty() {
            return None;
        }
        let mid = a + (b - a) / 2;
        let (mut here, mut left, mut right) = (Vec::new(), Vec::new(), Vec::new());
        for r in rs {
            if r.payload[1] < mid {
                left.push(r);
            } else if r.payload[0] > mid {
                right.push(r);
            } else {
                here.push(r);
            }
        }
        let low = SlowStab5::new(here.iter().map(|r| Rect2 { lo: r.lo, hi: r.hi, id: r.id, payload: -(r.payload[0] as i64) }).collect());
        let high = SlowStab5::new(here.iter().map(|r| Rect2 { lo: r.lo, hi: r.hi, id: r.id, payload: r.payload[1] as i64 }).collect());
        let l = if mid > a { self.build(left, a, mid - 1) } else { None };
        let r = if mid < b { self.build(right, mid + 1, b) } else { None };
        self.nodes.push(SlowNode { mid, low, high, kids: [l, r] });
        Some(self.nodes.len() as u32 - 1)
    }

    pub fn query(&self, q: Point3, c: &mut Counters, out: &mut Vec<u32>) {
        let mut k = self.root;
        while let Some(i) = k {
            let n = &self.nodes[i as usize];
            c.nodes_visited += 1;
            let mid = n.mid as i64;
            if q[2] <= mid {
                n.low.query([q[0], q[1], -q[2]], c, out);
                k = if q[2] < mid { n.kids[0] } else { None };
            } else {
                n.high.query(q, c, out);
                k = n.kids[1];
            }
        }
    }

    pub fn bits_stored(&self, coord_bits: u64) -> u64 {
        self.nodes.iter().map(|n| n.low.bits_stored(coord_bits) + n.high.bits_stored(coord_bits)).sum()
    }
}

/// Grid storage: `Cover` lists for every (cell, z) in CSR form.
pub struct CoverGrid {
    rows: usize,
    ids: Vec<u32>,
    /// One CSR table per z value.
    lists: Vec<(Vec<u32>, Vec<u32>)>,
    cover_len: usize,
    slow: SlowZr6,
}

impl CoverGrid {
    fn query(&self, cell: [usize; 2], q: Point3, c: &mut Counters, out: &mut Vec<u32>) -> bool {
        let (offsets, entries) = &self.lists[q[2] as usize];
        let k = cell[0] * self.rows + cell[1];
        let list = &entries[offsets[k] as usize..offsets[k + 1] as usize];
        if list.len() == self.cover_len {
            self.slow.query(q, c, out);
            return true;
        }
        for &e in list {
            c.cells_scanned += 1;
            out.push(self.ids[e as usize]);
        }
        false
    }
}

fn zr4_of(r: &ZRect, k: Key) -> Zr4Item {
    Zr4Item { p: k.point(r), i: r.payload[0], j: r.payload[1], id: r.id }
}

#[derive(Debug, Clone, Copy)]
pub struct Zr6Enc {
    pub params: ModelParams,
    pub f: usize,
}

impl Encoding for Zr6Enc {
    type Payload = [u32; 2];
    type Leaf = Vec<ZRect>;
    type Fat = SlowZr6;
    type Grid = CoverGrid;
    type Slab = [Option<Zr4Fast>; 4];

    fn leaf(&self, _: &NodeCtx, pieces: Vec<ZRect>) -> Vec<ZRect> {
        pieces
    }

    fn fat(&self, _: &NodeCtx, pieces: Vec<ZRect>) -> SlowZr6 {
        SlowZr6::new(pieces, self.f)
    }

    fn grid(&self, ctx: &NodeCtx, rects: Vec<GridRect<[u32; 2]>>) -> CoverGrid {
        let cover_len = self.params.cover_len(ctx.m);
        let mut by_id: Vec<u32> = (0..rects.len() as u32).collect();
        by_id.sort_unstable_by_key(|&k| rects[k as usize].rect.id);
        let lists = (0..self.f as i64)
            .map(|z| {
                let order: Vec<u32> = by_id.iter().copied().filter(|&k| z_ok(&rects[k as usize].rect, z)).collect();
                fill_lists(&rects, &order, ctx.cols, ctx.rows, cover_len)
            })
            .collect();
        CoverGrid {
            rows: ctx.rows,
            ids: rects.iter().map(|g| g.rect.id).collect(),
            lists,
            cover_len,
            slow: SlowZr6::new(rects.iter().map(|g| g.rect).collect(), self.f),
        }
    }

    fn slab(&self, _: &NodeCtx, pieces: Vec<(ZRect, Key)>) -> [Option<Zr4Fast>; 4] {
        let mut by_key: [Vec<Zr4Item>; 4] = Default::default();
        for (r, k) in pieces {
            by_key[k.index()].push(zr4_of(&r, k));
        }
        by_key.map(|v| (!v.is_empty()).then(|| Zr4Fast::new(v, self.f, &self.params)))
    }

    fn payload_bits(&self, _: u64) -> u64 {
        2 * bits_for(self.f as u64)
    }

    fn aux_bits(&self, ctx: &NodeCtx, s: Stored<'_, Self>) -> u64 {
        let b = ctx.coord_bits;
        match s {
            Stored::Grid(g) => {
                let pb = bits_for(g.ids.len() as u64);
                g.lists
                    .iter()
                    .map(|(o, e)| e.len() as u64 * pb + o.len() as u64 * bits_for(e.len() as u64 + 1))
                    .sum::<u64>()
                    + g.slow.bits_stored(b)
            }
            Stored::Slab(s) => s.iter().flatten().map(|z| z.stats(b).bits_stored).sum(),
            Stored::Fat(f) => f.bits_stored(b),
            Stored::Leaf(_) => 0,
        }
    }
}

/// Counts beyond [`Counters`] for one query.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Zr6Trace {
    pub slow_fallbacks: u64,
    pub zr4_fallbacks: u64,
}

pub struct Zr6 {
    axes: [AxisCompress; 2],
    f: usize,
    tree: GridTree<Zr6Enc>,
    len: usize,
}

impl Zr6 {
    pub fn new(boxes: &[Box3], f: usize, params: ModelParams) -> Result<Self> {
        Self::from_rects(zr6_rects(boxes, f)?, f, params)
    }

    pub fn from_rects(raw: Vec<ZRect>, f: usize, params: ModelParams) -> Result<Self> {
        params.validate()?;
        if f == 0 {
            return Err(Error::InvalidParams("z-universe must be non-empty".into()));
        }
        let axes = [0, 1].map(|a| AxisCompress::from_intervals(raw.iter().map(|r| (r.lo[a], r.hi[a]))));
        let len = raw.len();
        let pieces = raw
            .into_iter()
            .map(|r| Rect2 {
                lo: [axes[0].lo(r.lo[0]), axes[1].lo(r.lo[1])],
                hi: [axes[0].hi(r.hi[0]), axes[1].hi(r.hi[1])],
                ..r
            })
            .collect();
        let hi = [axes[0].len() as i64, axes[1].len() as i64];
        let tree = GridTree::new(Zr6Enc { params, f }, params, pieces, [0, 0], hi, false);
        Ok(Zr6 { axes, f, tree, len })
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

    /// Ids of the boxes containing `q`, ascending. `q[2]` must lie in `[0, f)`.
    pub fn query(&self, q: Point3, c: &mut Counters) -> Result<Vec<u32>> {
        Ok(self.query_traced(q, c)?.0)
    }

    pub fn query_traced(&self, q: Point3, c: &mut Counters) -> Result<(Vec<u32>, Zr6Trace)> {
        if q[2] < 0 || q[2] >= self.f as i64 {
            return Err(Error::QueryOutOfRange(format!("z = {} outside [0, {})", q[2], self.f)));
        }
        let mut out = Vec::new();
        let mut trace = Zr6Trace::default();
        self.collect(q, c, &mut out, &mut trace);
        out.sort_unstable();
        c.output_size += out.len() as u64;
        Ok((out, trace))
    }

    fn collect(&self, q: Point3, c: &mut Counters, out: &mut Vec<u32>, trace: &mut Zr6Trace) {
        let r = [self.axes[0].locate(q[0], c), self.axes[1].locate(q[1], c), q[2]];
        self.tree.visit([r[0], r[1]], c, &mut |stop, c| match stop {
            Stop::Leaf(l) => {
                for p in l {
                    c.cells_scanned += 1;
                    if z_ok(p, r[2]) && p.contains([r[0], r[1]]) {
                        out.push(p.id);
                    }
                }
            }
            Stop::Fat(f) => f.query(r, c, out),
            Stop::Grid { grid, cell, col, row } => {
                if let Some(g) = grid {
                    trace.slow_fallbacks += g.query(cell, r, c, out) as u64;
                }
                for s in [col, row].into_iter().flatten() {
                    for (i, z) in s.iter().enumerate() {
                        if let Some(z) = z {
                            let kq = Key::ALL[i].query([r[0], r[1]]);
                            trace.zr4_fallbacks += z.query([kq[0], kq[1], r[2]], c, out).fallback as u64;
                        }
                    }
                }
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Interval;
    use crate::oracle::brute_stab;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn boxes(n: usize, u: i64, f: i64, seed: u64) -> Vec<Box3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n as u32)
            .map(|id| {
                let mut iv = |hi: i64| {
                    let (a, b) = (rng.gen_range(0..hi), rng.gen_range(0..hi));
                    Interval::new(a.min(b), a.max(b))
                };
                let (x, y, z) = (iv(u), iv(u), iv(f));
                Box3::new(id, x, y, z)
            })
            .collect()
    }

    #[test]
    fn matches_oracle_with_and_without_fallbacks() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (n, f) in [(1, 2), (30, 4), (400, 2), (2000, 8)] {
            let bs = boxes(n, 3 * n as i64, f, n as u64);
            for cover_len in [None, Some(2)] {
                let p = ModelParams { cover_len, leaf_threshold: 8, fanout: Some(f as usize), ..Default::default() };
                let s = Zr6::new(&bs, f as usize, p).unwrap();
                let mut c = Counters::new();
                let mut slow = 0;
                for _ in 0..300 {
                    let q = [rng.gen_range(-1..=3 * n as i64), rng.gen_range(-1..=3 * n as i64), rng.gen_range(0..f)];
                    let (got, t) = s.query_traced(q, &mut c).unwrap();
                    slow += t.slow_fallbacks;
                    assert_eq!(got, brute_stab(&bs, q), "n={n} q={q:?}");
                }
                if cover_len.is_some() && n >= 400 {
                    assert!(slow > 0);
                }
            }
        }
    }

    #[test]
    fn rejects_z_outside_universe() {
        let bs = boxes(10, 10, 4, 1);
        assert!(Zr6::new(&bs, 2, ModelParams::default()).is_err() || bs.iter().all(|b| b.corners().1[2] < 2));
        let s = Zr6::new(&bs, 4, ModelParams::default()).unwrap();
        assert!(s.query([0, 0, 4], &mut Counters::new()).is_err());
    }
}
