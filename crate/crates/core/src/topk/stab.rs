//! Top-k 2-d rectangle stabbing: the `k` heaviest rectangles containing `q`.
//!
//! The grid recursion again. Grid rectangles of a node are read from the
//! cell's `Top` list, its heaviest covering rectangles; once a full list runs
//! dry the node's slow stream takes over past the list's length. Slab pieces
//! and the slow structures are top-k dominance instances read as streams, and
//! one heap merges every stream met on the query paths.

use crate::centered::{Centered, Key, Rect2};
use crate::counters::{bits_for, BuildStats, Counters};
use crate::error::Result;
use crate::geom::{AxisCompress, Box2, Point2, Ranked, WPoint, NEG_INF, POS_INF};
use crate::gridtree::{Encoding, GridRect, GridTree, NodeCtx, Stop, Stored, TreeStats};
use crate::params::ModelParams;
use crate::stab5::fill_lists;

use super::dominance::TopKDominance;
use super::stream::{MergeStream, RankedStream, WeightStream};

fn ranked(r: &Rect2<i64>) -> Ranked {
    Ranked { weight: r.payload, id: r.id }
}

fn dominance_of(rs: &[Rect2<i64>], k: Key, params: &ModelParams) -> TopKDominance {
    TopKDominance::new(rs.iter().map(|r| WPoint { id: r.id, xy: k.point(r), weight: r.payload }).collect(), params)
}

/// Centered tree of top-k dominance structures.
pub struct SlowTopStab {
    tree: Centered<TopKDominance>,
}

impl SlowTopStab {
    pub fn new(rects: Vec<Rect2<i64>>, params: &ModelParams) -> Self {
        SlowTopStab { tree: Centered::new(rects, &mut |rs, k| dominance_of(rs, k, params)) }
    }

    pub fn stream<'a>(&'a self, q: Point2, c: &mut Counters) -> MergeStream<'a> {
        let mut parts: Vec<Box<dyn RankedStream + 'a>> = Vec::new();
        self.tree.visit(q, c, &mut |d, k, _| {
            if !d.is_empty() {
                parts.push(Box::new(WeightStream::new(d, k.query(q))));
            }
        });
        MergeStream::new(parts)
    }

    pub fn bits_stored(&self) -> u64 {
        self.tree.parts().map(|d| d.stats().bits_stored).sum()
    }
}

/// Rectangles heaviest first, filtered by containment.
struct ScanStream<'a> {
    rects: &'a [Rect2<i64>],
    q: Point2,
    pos: usize,
}

impl RankedStream for ScanStream<'_> {
    fn next_ranked(&mut self, c: &mut Counters) -> Option<Ranked> {
        while self.pos < self.rects.len() {
            let r = &self.rects[self.pos];
            self.pos += 1;
            c.cells_scanned += 1;
            if r.contains(self.q) {
                return Some(ranked(r));
            }
        }
        None
    }
}

pub struct TopCells {
    rows: usize,
    ranked: Vec<Ranked>,
    offsets: Vec<u32>,
    entries: Vec<u32>,
    top_len: usize,
    slow: SlowTopStab,
}

/// A cell's `Top` list, then the slow stream beyond it.
struct CellStream<'a> {
    grid: &'a TopCells,
    q: Point2,
    list: &'a [u32],
    pos: usize,
    slow: Option<MergeStream<'a>>,
}

impl RankedStream for CellStream<'_> {
    fn next_ranked(&mut self, c: &mut Counters) -> Option<Ranked> {
        if self.pos < self.list.len() {
            c.cells_scanned += 1;
            self.pos += 1;
            return Some(self.grid.ranked[self.list[self.pos - 1] as usize]);
        }
        if self.list.len() < self.grid.top_len {
            return None;
        }
        if self.slow.is_none() {
            let mut s = self.grid.slow.stream(self.q, c);
            for _ in 0..self.grid.top_len {
                s.next_ranked(c);
            }
            self.slow = Some(s);
        }
        self.slow.as_mut().and_then(|s| s.next_ranked(c))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TopStabEnc {
    pub params: ModelParams,
}

impl Encoding for TopStabEnc {
    type Payload = i64;
    type Leaf = Vec<Rect2<i64>>;
    type Fat = SlowTopStab;
    type Grid = TopCells;
    type Slab = [Option<TopKDominance>; 4];

    fn leaf(&self, _: &NodeCtx, mut pieces: Vec<Rect2<i64>>) -> Vec<Rect2<i64>> {
        pieces.sort_unstable_by_key(|r| std::cmp::Reverse(ranked(r)));
        pieces
    }

    fn fat(&self, _: &NodeCtx, pieces: Vec<Rect2<i64>>) -> SlowTopStab {
        SlowTopStab::new(pieces, &self.params)
    }

    fn grid(&self, ctx: &NodeCtx, rects: Vec<GridRect<i64>>) -> TopCells {
        let mut order: Vec<u32> = (0..rects.len() as u32).collect();
        order.sort_unstable_by_key(|&k| std::cmp::Reverse(ranked(&rects[k as usize].rect)));
        let top_len = self.params.top_len(ctx.m);
        let (offsets, entries) = fill_lists(&rects, &order, ctx.cols, ctx.rows, top_len);
        TopCells {
            rows: ctx.rows,
            ranked: rects.iter().map(|g| ranked(&g.rect)).collect(),
            offsets,
            entries,
            top_len,
            slow: SlowTopStab::new(rects.iter().map(|g| g.rect).collect(), &self.params),
        }
    }

    fn slab(&self, _: &NodeCtx, pieces: Vec<(Rect2<i64>, Key)>) -> [Option<TopKDominance>; 4] {
        let mut by_key: [Vec<Rect2<i64>>; 4] = Default::default();
        for (r, k) in pieces {
            by_key[k.index()].push(r);
        }
        let mut i = 0;
        by_key.map(|v| {
            let k = Key::ALL[i];
            i += 1;
            (!v.is_empty()).then(|| dominance_of(&v, k, &self.params))
        })
    }

    fn payload_bits(&self, coord_bits: u64) -> u64 {
        coord_bits
    }

    fn aux_bits(&self, _: &NodeCtx, s: Stored<'_, Self>) -> u64 {
        match s {
            Stored::Grid(g) => {
                g.entries.len() as u64 * bits_for(g.ranked.len() as u64)
                    + g.offsets.len() as u64 * bits_for(g.entries.len() as u64 + 1)
                    + g.slow.bits_stored()
            }
            Stored::Slab(s) => s.iter().flatten().map(|d| d.stats().bits_stored).sum(),
            Stored::Fat(f) => f.bits_stored(),
            Stored::Leaf(_) => 0,
        }
    }
}

pub struct TopKStab {
    axes: [AxisCompress; 2],
    tree: GridTree<TopStabEnc>,
    len: usize,
}

impl TopKStab {
    /// Rectangles may have unbounded sides; a missing weight counts as 0.
    pub fn new(rects: &[Box2], params: ModelParams) -> Result<Self> {
        params.validate()?;
        for r in rects {
            r.validate()?;
        }
        let axes = [0, 1].map(|a| AxisCompress::from_intervals(rects.iter().map(|r| r.axes[a].closed())));
        let hi = [axes[0].len() as i64, axes[1].len() as i64];
        let map = |a: usize, (lo, h): (i64, i64)| {
            let l = if lo == NEG_INF { 0 } else { axes[a].lo(lo) };
            let u = if h == POS_INF { hi[a] } else { axes[a].hi(h) };
            (l, u)
        };
        let pieces = rects
            .iter()
            .map(|r| {
                let (x0, x1) = map(0, r.axes[0].closed());
                let (y0, y1) = map(1, r.axes[1].closed());
                Rect2 { lo: [x0, y0], hi: [x1, y1], id: r.id, payload: r.weight.unwrap_or(0) }
            })
            .collect();
        let tree = GridTree::new(TopStabEnc { params }, params, pieces, [0, 0], hi, false);
        Ok(TopKStab { axes, tree, len: rects.len() })
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

    /// All containing rectangles, heaviest first, as a stream.
    pub fn stream<'a>(&'a self, q: Point2, c: &mut Counters) -> MergeStream<'a> {
        let r = [self.axes[0].locate(q[0], c), self.axes[1].locate(q[1], c)];
        let mut parts: Vec<Box<dyn RankedStream + 'a>> = Vec::new();
        self.tree.visit(r, c, &mut |stop, c| match stop {
            Stop::Leaf(l) => parts.push(Box::new(ScanStream { rects: l, q: r, pos: 0 })),
            Stop::Fat(f) => parts.push(Box::new(f.stream(r, c))),
            Stop::Grid { grid, cell, col, row } => {
                if let Some(g) = grid {
                    let k = cell[0] * g.rows + cell[1];
                    let list = &g.entries[g.offsets[k] as usize..g.offsets[k + 1] as usize];
                    if !list.is_empty() {
                        parts.push(Box::new(CellStream { grid: g, q: r, list, pos: 0, slow: None }));
                    }
                }
                for s in [col, row].into_iter().flatten() {
                    for (i, d) in s.iter().enumerate() {
                        if let Some(d) = d {
                            parts.push(Box::new(WeightStream::new(d, Key::ALL[i].query(r))));
                        }
                    }
                }
            }
        });
        MergeStream::new(parts)
    }

    /// The `k` heaviest rectangles containing `q`, heaviest first.
    pub fn query(&self, q: Point2, k: usize, c: &mut Counters) -> Vec<u32> {
        if k == 0 {
            return Vec::new();
        }
        let mut s = self.stream(q, c);
        let mut out = Vec::with_capacity(k.min(self.len));
        while out.len() < k {
            match s.next_ranked(c) {
                Some(r) => out.push(r.id),
                None => break,
            }
        }
        c.output_size += out.len() as u64;
        out
    }
}

pub fn build_topk_stab(rects: &[Box2], params: ModelParams) -> Result<TopKStab> {
    TopKStab::new(rects, params)
}

pub fn query_topk_stab(t: &TopKStab, q: Point2, k: usize, c: &mut Counters) -> Vec<u32> {
    t.query(q, k, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Interval;
    use crate::oracle::brute_topk_stab;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rects(n: usize, u: i64, w: i64, seed: u64) -> Vec<Box2> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n as u32)
            .map(|id| {
                let mut iv = || {
                    let (a, b) = (rng.gen_range(0..u), rng.gen_range(0..u));
                    Interval::new(a.min(b), a.max(b))
                };
                let (x, y) = (iv(), iv());
                Box2::new(id, x, y).with_weight(rng.gen_range(0..w))
            })
            .collect()
    }

    #[test]
    fn matches_oracle_including_top_list_switch() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in [1, 4, 60, 700, 2500] {
            let rs = rects(n, 3 * n as i64 + 3, 10, n as u64);
            for top_len in [None, Some(2)] {
                let p = ModelParams { top_len, leaf_threshold: 8, ..Default::default() };
                let t = TopKStab::new(&rs, p).unwrap();
                let mut c = Counters::new();
                for _ in 0..150 {
                    let q = [rng.gen_range(-1..=3 * n as i64 + 3), rng.gen_range(-1..=3 * n as i64 + 3)];
                    for k in [0, 1, 3, 10, n] {
                        assert_eq!(t.query(q, k, &mut c), brute_topk_stab(&rs, q, k), "n={n} k={k} q={q:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn unbounded_sides() {
        let rs = vec![
            Box2::new(0, Interval::up_to(5), Interval::ALL).with_weight(3),
            Box2::new(1, Interval::from(2), Interval::new(0, 9)).with_weight(3),
            Box2::new(2, Interval::new(1, 4), Interval::from(4)).with_weight(7),
        ];
        let t = TopKStab::new(&rs, ModelParams { leaf_threshold: 1, ..Default::default() }).unwrap();
        let mut c = Counters::new();
        for x in -2..12 {
            for y in -2..12 {
                assert_eq!(t.query([x, y], 3, &mut c), brute_topk_stab(&rs, [x, y], 3));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn prop_matches_oracle(seed in any::<u64>(), n in 1usize..150, k in 0usize..12, tl in 1usize..5) {
            let rs = rects(n, 20, 5, seed);
            let t = TopKStab::new(&rs, ModelParams { top_len: Some(tl), leaf_threshold: 4, ..Default::default() }).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
            let mut c = Counters::new();
            for _ in 0..20 {
                let q = [rng.gen_range(-1..22), rng.gen_range(-1..22)];
                prop_assert_eq!(t.query(q, k, &mut c), brute_topk_stab(&rs, q, k));
            }
        }
    }
}
