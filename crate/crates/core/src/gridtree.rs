//! Grid recursion shared by the 5-sided, z-restricted 6-sided and top-k
//! stabbing structures.
//!
//! A node owns a region and an input of disjoint-by-construction pieces. Grid
//! lines at quantiles of the piece breakpoints cut the region into columns and
//! rows. A piece inside one column (or else one row) goes to that child. Any
//! other piece breaks into the union of the grid cells it covers fully (the
//! grid rectangle), partial-column pieces spanning its whole y-range and
//! partial-row pieces spanning its full columns. A partial piece that also
//! touches the node boundary on the other axis is 3-sided in its slab and
//! stays at the node; otherwise it moves to the child. A query visits one
//! column child and one row child per node.
//!
//! What a node stores for its grid rectangles and slab pieces is left to an
//! [`Encoding`].

use crate::centered::{Key, Rect2};
use crate::counters::{bits_for, count_le, BuildStats, Counters};
use crate::geom::Point2;
use crate::params::ModelParams;

/// Facts about the node an encoder builds for.
#[derive(Debug, Clone, Copy)]
pub struct NodeCtx {
    /// Pieces handed to the node.
    pub m: usize,
    /// Rank-space width of one coordinate at this node.
    pub coord_bits: u64,
    pub cols: usize,
    pub rows: usize,
}

/// A grid rectangle with its covered cell range, inclusive.
#[derive(Debug, Clone, Copy)]
pub struct GridRect<P> {
    pub rect: Rect2<P>,
    pub cells_lo: [usize; 2],
    pub cells_hi: [usize; 2],
}

/// Per-structure storage of a grid node, fat node and leaf.
pub trait Encoding {
    type Payload: Copy + std::fmt::Debug;
    type Leaf;
    type Fat;
    type Grid;
    type Slab;

    fn leaf(&self, ctx: &NodeCtx, pieces: Vec<Rect2<Self::Payload>>) -> Self::Leaf;
    fn fat(&self, ctx: &NodeCtx, pieces: Vec<Rect2<Self::Payload>>) -> Self::Fat;
    fn grid(&self, ctx: &NodeCtx, rects: Vec<GridRect<Self::Payload>>) -> Self::Grid;
    /// Pieces of one column or row, each with the conditions left to test.
    fn slab(&self, ctx: &NodeCtx, pieces: Vec<(Rect2<Self::Payload>, Key)>) -> Self::Slab;
    /// Bits of one payload value at coordinate width `coord_bits`.
    fn payload_bits(&self, coord_bits: u64) -> u64;
    /// Bits of tables that are not stored pieces (lists, slow structures).
    fn aux_bits(&self, _ctx: &NodeCtx, _s: Stored<'_, Self>) -> u64 {
        0
    }
}

/// A built storage unit, for [`Encoding::aux_bits`].
pub enum Stored<'a, E: Encoding + ?Sized> {
    Leaf(&'a E::Leaf),
    Fat(&'a E::Fat),
    Grid(&'a E::Grid),
    Slab(&'a E::Slab),
}

/// What a query meets at one visited node.
pub enum Stop<'a, E: Encoding> {
    Leaf(&'a E::Leaf),
    Fat(&'a E::Fat),
    Grid { grid: Option<&'a E::Grid>, cell: [usize; 2], col: Option<&'a E::Slab>, row: Option<&'a E::Slab> },
}

struct GridNode<E: Encoding> {
    /// First coordinate of each column / row.
    starts: [Vec<i64>; 2],
    grid: Option<E::Grid>,
    slabs: [Vec<Option<E::Slab>>; 2],
    kids: [Vec<Option<u32>>; 2],
}

enum Kind<E: Encoding> {
    Leaf(Option<E::Leaf>),
    Fat(Option<E::Fat>),
    Grid(Box<GridNode<E>>),
}

struct Node<E: Encoding> {
    kind: Kind<E>,
}

/// Build totals. `build.bits_stored` counts stored pieces only.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TreeStats {
    pub build: BuildStats,
    pub aux_bits: u64,
    pub fat_nodes: u64,
    pub grid_pieces: u64,
    pub slab_pieces: u64,
    pub leaf_pieces: u64,
}

pub struct GridTree<E: Encoding> {
    enc: E,
    params: ModelParams,
    measure_only: bool,
    nodes: Vec<Node<E>>,
    root: Option<u32>,
    stats: TreeStats,
}

/// Grid lines: quantiles of the breakpoints `lo` and `hi + 1` that fall
/// strictly inside both the region and the pieces' joint extent.
fn grid_lines<P>(ps: &[Rect2<P>], axis: usize, lo: i64, hi: i64, g: usize) -> Vec<i64> {
    let min_lo = ps.iter().map(|r| r.lo[axis]).min().unwrap_or(lo);
    let max_hi = ps.iter().map(|r| r.hi[axis]).max().unwrap_or(hi);
    let mut b: Vec<i64> = ps
        .iter()
        .flat_map(|r| [r.lo[axis], r.hi[axis].saturating_add(1)])
        .filter(|&v| v > min_lo.max(lo) && v <= max_hi.min(hi))
        .collect();
    if b.is_empty() {
        return b;
    }
    b.sort_unstable();
    let mut out: Vec<i64> = (1..g).map(|i| b[i * b.len() / g]).collect();
    out.dedup();
    out
}

impl<E: Encoding> GridTree<E> {
    /// `pieces` must lie inside `[lo, hi]` and be pairwise disjoint.
    pub fn new(enc: E, params: ModelParams, pieces: Vec<Rect2<E::Payload>>, lo: Point2, hi: Point2, measure_only: bool) -> Self {
        let mut t = GridTree { enc, params, measure_only, nodes: Vec::new(), root: None, stats: TreeStats::default() };
        if !pieces.is_empty() {
            t.root = Some(t.build(pieces, lo, hi, 0));
        }
        t
    }

    pub fn stats(&self) -> TreeStats {
        self.stats
    }

    pub fn encoding(&self) -> &E {
        &self.enc
    }

    fn account(&mut self, ctx: &NodeCtx, count: usize, coord_bits: u64) {
        let b = ctx.coord_bits;
        let per = coord_bits + self.enc.payload_bits(b) + b;
        self.stats.build.bits_stored += count as u64 * per;
    }

    fn push(&mut self, kind: Kind<E>) -> u32 {
        self.nodes.push(Node { kind });
        self.nodes.len() as u32 - 1
    }

    fn build(&mut self, ps: Vec<Rect2<E::Payload>>, lo: Point2, hi: Point2, depth: u32) -> u32 {
        let m = ps.len();
        let st = &mut self.stats.build;
        st.nodes += 1;
        st.piece_incidences += m as u64;
        st.depth = st.depth.max(depth);
        let coord_bits = bits_for(2 * m as u64);
        if m <= self.params.leaf_threshold {
            return self.make_leaf(ps, coord_bits, false);
        }
        let g = self.params.grid_side(m);
        let lines = [grid_lines(&ps, 0, lo[0], hi[0], g), grid_lines(&ps, 1, lo[1], hi[1], g)];
        if lines[0].is_empty() || lines[1].is_empty() {
            return self.make_leaf(ps, coord_bits, true);
        }
        let starts: [Vec<i64>; 2] = [0, 1].map(|a| std::iter::once(lo[a]).chain(lines[a].iter().copied()).collect());
        let ends: [Vec<i64>; 2] = [0, 1].map(|a| {
            starts[a][1..].iter().map(|s| s - 1).chain(std::iter::once(hi[a])).collect()
        });
        let ctx = NodeCtx { m, coord_bits, cols: starts[0].len(), rows: starts[1].len() };
        let slot = |a: usize, v: i64| starts[a].partition_point(|&s| s <= v) - 1;

        let mut grid = Vec::new();
        let mut stored: [Vec<Vec<(Rect2<E::Payload>, Key)>>; 2] = [0, 1].map(|a| vec![Vec::new(); starts[a].len()]);
        let mut fwd: [Vec<Vec<Rect2<E::Payload>>>; 2] = [0, 1].map(|a| vec![Vec::new(); starts[a].len()]);
        for p in &ps {
            let (cl, cr) = (slot(0, p.lo[0]), slot(0, p.hi[0]));
            let (rl, rr) = (slot(1, p.lo[1]), slot(1, p.hi[1]));
            if cl == cr {
                fwd[0][cl].push(*p);
                continue;
            }
            if rl == rr {
                fwd[1][rl].push(*p);
                continue;
            }
            let full = |a: usize, l: usize, r: usize| {
                let fl = if p.lo[a] == starts[a][l] { l } else { l + 1 };
                let fr = if p.hi[a] == ends[a][r] { r as isize } else { r as isize - 1 };
                (fl, fr)
            };
            let (fcl, fcr) = full(0, cl, cr);
            let (frl, frr) = full(1, rl, rr);
            let has_cols = fcl as isize <= fcr;
            if has_cols && frl as isize <= frr {
                let (fcr, frr) = (fcr as usize, frr as usize);
                grid.push(GridRect {
                    rect: Rect2 { lo: [starts[0][fcl], starts[1][frl]], hi: [ends[0][fcr], ends[1][frr]], ..*p },
                    cells_lo: [fcl, frl],
                    cells_hi: [fcr, frr],
                });
            }
            // Partial columns span the whole y-range of the piece.
            let mut partial = |a: usize, s: usize, part: Rect2<E::Payload>, keep_lo: bool| {
                let o = 1 - a;
                let touch_lo = part.lo[o] == lo[o];
                let touch_hi = part.hi[o] == hi[o];
                if touch_lo || touch_hi {
                    let other_lo = !touch_lo;
                    let key = if a == 0 {
                        Key { x_lo: keep_lo, y_lo: other_lo }
                    } else {
                        Key { x_lo: other_lo, y_lo: keep_lo }
                    };
                    stored[a][s].push((part, key));
                } else {
                    fwd[a][s].push(part);
                }
            };
            if p.lo[0] > starts[0][cl] {
                partial(0, cl, Rect2 { hi: [ends[0][cl], p.hi[1]], ..*p }, true);
            }
            if p.hi[0] < ends[0][cr] {
                partial(0, cr, Rect2 { lo: [starts[0][cr], p.lo[1]], ..*p }, false);
            }
            if has_cols {
                let (x0, x1) = (starts[0][fcl], ends[0][fcr as usize]);
                if p.lo[1] > starts[1][rl] {
                    partial(1, rl, Rect2 { lo: [x0, p.lo[1]], hi: [x1, ends[1][rl]], ..*p }, true);
                }
                if p.hi[1] < ends[1][rr] {
                    partial(1, rr, Rect2 { lo: [x0, starts[1][rr]], hi: [x1, p.hi[1]], ..*p }, false);
                }
            }
        }
        if fwd.iter().flatten().any(|f| f.len() >= m) {
            return self.make_leaf(ps, coord_bits, true);
        }
        drop(ps);

        let gb = bits_for(ctx.cols.max(ctx.rows) as u64 + 1);
        self.account(&ctx, grid.len(), 4 * gb);
        self.stats.grid_pieces += grid.len() as u64;
        let grid = if self.measure_only || grid.is_empty() {
            None
        } else {
            let gs = self.enc.grid(&ctx, grid);
            self.stats.aux_bits += self.enc.aux_bits(&ctx, Stored::Grid(&gs));
            Some(gs)
        };
        let mut slabs: [Vec<Option<E::Slab>>; 2] = [Vec::new(), Vec::new()];
        for a in 0..2 {
            for s in std::mem::take(&mut stored[a]) {
                self.account(&ctx, s.len(), 2 * coord_bits);
                self.stats.slab_pieces += s.len() as u64;
                slabs[a].push(if self.measure_only || s.is_empty() {
                    None
                } else {
                    let sl = self.enc.slab(&ctx, s);
                    self.stats.aux_bits += self.enc.aux_bits(&ctx, Stored::Slab(&sl));
                    Some(sl)
                });
            }
        }
        let mut kids: [Vec<Option<u32>>; 2] = [Vec::new(), Vec::new()];
        for a in 0..2 {
            for (s, f) in std::mem::take(&mut fwd[a]).into_iter().enumerate() {
                kids[a].push(if f.is_empty() {
                    None
                } else {
                    let (mut clo, mut chi) = (lo, hi);
                    clo[a] = starts[a][s];
                    chi[a] = ends[a][s];
                    Some(self.build(f, clo, chi, depth + 1))
                });
            }
        }
        self.push(Kind::Grid(Box::new(GridNode { starts, grid, slabs, kids })))
    }

    fn make_leaf(&mut self, ps: Vec<Rect2<E::Payload>>, coord_bits: u64, fat: bool) -> u32 {
        let ctx = NodeCtx { m: ps.len(), coord_bits, cols: 1, rows: 1 };
        self.account(&ctx, ps.len(), 4 * coord_bits);
        self.stats.leaf_pieces += ps.len() as u64;
        if fat {
            self.stats.fat_nodes += 1;
            let f = (!self.measure_only).then(|| self.enc.fat(&ctx, ps));
            if let Some(f) = &f {
                self.stats.aux_bits += self.enc.aux_bits(&ctx, Stored::Fat(f));
            }
            self.push(Kind::Fat(f))
        } else {
            let l = (!self.measure_only).then(|| self.enc.leaf(&ctx, ps));
            if let Some(l) = &l {
                self.stats.aux_bits += self.enc.aux_bits(&ctx, Stored::Leaf(l));
            }
            self.push(Kind::Leaf(l))
        }
    }

    /// Visits every node whose region contains `q`, column child before row
    /// child. `q` must lie in the root region.
    pub fn visit<'a>(&'a self, q: Point2, c: &mut Counters, f: &mut dyn FnMut(Stop<'a, E>, &mut Counters)) {
        if let Some(r) = self.root {
            self.visit_node(r, q, c, f);
        }
    }

    fn visit_node<'a>(&'a self, k: u32, q: Point2, c: &mut Counters, f: &mut dyn FnMut(Stop<'a, E>, &mut Counters)) {
        c.nodes_visited += 1;
        match &self.nodes[k as usize].kind {
            Kind::Leaf(l) => {
                if let Some(l) = l {
                    f(Stop::Leaf(l), c);
                }
            }
            Kind::Fat(x) => {
                if let Some(x) = x {
                    f(Stop::Fat(x), c);
                }
            }
            Kind::Grid(g) => {
                let cell = [0, 1].map(|a| count_le(&g.starts[a], q[a], c) - 1);
                let col = g.slabs[0][cell[0]].as_ref();
                let row = g.slabs[1][cell[1]].as_ref();
                if !self.measure_only {
                    f(Stop::Grid { grid: g.grid.as_ref(), cell, col, row }, c);
                }
                for a in 0..2 {
                    if let Some(kid) = g.kids[a][cell[a]] {
                        self.visit_node(kid, q, c, f);
                    }
                }
            }
        }
    }
}
