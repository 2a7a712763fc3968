use crate::counters::{bits_for, count_le, count_lt, BuildStats, Counters};
use crate::error::{Error, Result};
use crate::geom::{AxisCompress, Box2, Point2, NEG_INF, POS_INF};

/// Closed rectangle with an integer label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledRect {
    pub lo: Point2,
    pub hi: Point2,
    pub label: u32,
}

impl LabeledRect {
    pub fn contains(&self, q: Point2) -> bool {
        (0..2).all(|a| self.lo[a] <= q[a] && q[a] <= self.hi[a])
    }
}

/// Disjoint 1-d intervals sorted by left end; each carries the bound its
/// piece has along the slab axis.
#[derive(Debug, Clone, Default)]
struct Locate1 {
    los: Vec<i64>,
    his: Vec<i64>,
    ext: Vec<i64>,
    labels: Vec<u32>,
}

impl Locate1 {
    fn new(mut items: Vec<(i64, i64, i64, u32)>) -> Result<Self> {
        items.sort_unstable();
        for w in items.windows(2) {
            if w[1].0 <= w[0].1 {
                return Err(Error::NotDisjoint { a: w[0].3, b: w[1].3 });
            }
        }
        Ok(Locate1 {
            los: items.iter().map(|t| t.0).collect(),
            his: items.iter().map(|t| t.1).collect(),
            ext: items.iter().map(|t| t.2).collect(),
            labels: items.iter().map(|t| t.3).collect(),
        })
    }

    fn find(&self, q: i64, c: &mut Counters) -> Option<(i64, u32)> {
        let k = count_le(&self.los, q, c);
        (k > 0 && q <= self.his[k - 1]).then(|| (self.ext[k - 1], self.labels[k - 1]))
    }
}

/// 1-d stabbing counter: `#(lo <= q) - #(hi < q)`.
#[derive(Debug, Clone, Default)]
struct Count1 {
    los: Vec<i64>,
    his: Vec<i64>,
}

impl Count1 {
    fn new(items: &[(i64, i64)]) -> Self {
        let mut los: Vec<i64> = items.iter().map(|t| t.0).collect();
        let mut his: Vec<i64> = items.iter().map(|t| t.1).collect();
        los.sort_unstable();
        his.sort_unstable();
        Count1 { los, his }
    }

    fn count(&self, q: i64, c: &mut Counters) -> usize {
        if self.los.is_empty() {
            return 0;
        }
        count_le(&self.los, q, c) - count_lt(&self.his, q, c)
    }
}

#[derive(Debug, Clone)]
struct Slab {
    left: Locate1,
    right: Locate1,
    short: Count1,
    short_child: Option<Box<Node>>,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(Vec<LabeledRect>),
    Split { axis: usize, width: i64, slabs: Vec<Slab>, middle: Option<Box<Node>> },
}

/// Static 2-d orthogonal point location over disjoint rectangles.
///
/// Coordinates are compressed per axis, then one axis at a time (the one with
/// the larger universe) is cut into about `sqrt(U)` equal slabs. Rectangles
/// inside a slab recurse into that slab. The others leave a left piece and a
/// right piece in their end slabs, where those pieces all touch the slab
/// boundary and so project to disjoint intervals of the other axis, and a
/// middle piece that recurses over slab indices. A 1-d stabbing count over the
/// in-slab rectangles decides between the slab child and the middle child.
#[derive(Debug, Clone)]
pub struct Pl2 {
    comp: [AxisCompress; 2],
    root: Node,
    len: usize,
    stats: BuildStats,
}

struct Ctx {
    tau: usize,
    label_bits: u64,
    stats: BuildStats,
}

impl Pl2 {
    /// Builds over closed rectangles (sentinel bounds allowed), which must be
    /// pairwise disjoint.
    pub fn new(rects: &[LabeledRect], leaf_threshold: usize) -> Result<Self> {
        let comp = [0, 1].map(|a| AxisCompress::from_intervals(rects.iter().map(|r| (r.lo[a], r.hi[a]))));
        let local: Vec<LabeledRect> = rects
            .iter()
            .map(|r| {
                let mut m = *r;
                for a in 0..2 {
                    m.lo[a] = if r.lo[a] == NEG_INF { 0 } else { comp[a].lo(r.lo[a]) };
                    m.hi[a] = if r.hi[a] == POS_INF { comp[a].len() as i64 } else { comp[a].hi(r.hi[a]) };
                }
                m
            })
            .collect();
        let max_label = rects.iter().map(|r| r.label as u64).max().unwrap_or(0);
        let mut ctx = Ctx { tau: leaf_threshold.max(1), label_bits: bits_for(max_label + 1), stats: BuildStats::default() };
        let universe = [comp[0].universe(), comp[1].universe()];
        let root = build(local, universe, 0, &mut ctx)?;
        ctx.stats.bits_stored += comp.iter().map(|c| c.len() as u64 * 64).sum::<u64>();
        Ok(Pl2 { comp, root, len: rects.len(), stats: ctx.stats })
    }

    pub fn from_boxes(rects: &[Box2], leaf_threshold: usize) -> Result<Self> {
        let mut lr = Vec::with_capacity(rects.len());
        for r in rects {
            r.validate()?;
            let (lo, hi) = r.corners();
            lr.push(LabeledRect { lo, hi, label: r.id });
        }
        Self::new(&lr, leaf_threshold)
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

    /// Bits of the structure, charging `coord_bits` per stored breakpoint
    /// instead of a full word.
    pub fn bits_with_coords(&self, coord_bits: u64) -> u64 {
        let words = self.comp.iter().map(|c| c.len() as u64).sum::<u64>();
        self.stats.bits_stored - words * 64 + words * coord_bits
    }

    pub fn query(&self, q: Point2, c: &mut Counters) -> Option<u32> {
        if self.len == 0 {
            return None;
        }
        let mut p = [self.comp[0].locate(q[0], c), self.comp[1].locate(q[1], c)];
        let mut node = &self.root;
        loop {
            c.nodes_visited += 1;
            match node {
                Node::Leaf(rs) => {
                    for r in rs {
                        c.cells_scanned += 1;
                        if r.contains(p) {
                            return Some(r.label);
                        }
                    }
                    return None;
                }
                Node::Split { axis, width, slabs, middle } => {
                    let (a, o) = (*axis, 1 - *axis);
                    let i = (p[a] / width) as usize;
                    let slab = &slabs[i];
                    if let Some((lo, lab)) = slab.left.find(p[o], c) {
                        if p[a] >= lo {
                            return Some(lab);
                        }
                    }
                    if let Some((hi, lab)) = slab.right.find(p[o], c) {
                        if p[a] <= hi {
                            return Some(lab);
                        }
                    }
                    if slab.short.count(p[o], c) > 0 {
                        p[a] -= i as i64 * width;
                        node = slab.short_child.as_deref()?;
                    } else {
                        p[a] = i as i64;
                        node = middle.as_deref()?;
                    }
                }
            }
        }
    }
}

fn check_leaf(rs: &[LabeledRect]) -> Result<()> {
    for i in 0..rs.len() {
        for j in i + 1..rs.len() {
            let (a, b) = (&rs[i], &rs[j]);
            if (0..2).all(|k| a.lo[k] <= b.hi[k] && b.lo[k] <= a.hi[k]) {
                return Err(Error::NotDisjoint { a: a.label, b: b.label });
            }
        }
    }
    Ok(())
}

fn build(rects: Vec<LabeledRect>, u: [i64; 2], depth: u32, ctx: &mut Ctx) -> Result<Node> {
    ctx.stats.nodes += 1;
    ctx.stats.depth = ctx.stats.depth.max(depth);
    ctx.stats.piece_incidences += rects.len() as u64;
    let axis = if u[1] > u[0] { 1 } else { 0 };
    let o = 1 - axis;
    if rects.len() <= ctx.tau || u[axis] <= 1 {
        check_leaf(&rects)?;
        let per = 2 * (bits_for(u[0] as u64) + bits_for(u[1] as u64)) + ctx.label_bits;
        ctx.stats.bits_stored += rects.len() as u64 * per;
        return Ok(Node::Leaf(rects));
    }
    let s = (u[axis] as f64).sqrt().ceil() as i64;
    let width = (u[axis] + s - 1) / s;
    let nslabs = ((u[axis] + width - 1) / width) as usize;
    let mut left: Vec<Vec<(i64, i64, i64, u32)>> = vec![Vec::new(); nslabs];
    let mut right = left.clone();
    let mut short: Vec<Vec<LabeledRect>> = vec![Vec::new(); nslabs];
    let mut middle = Vec::new();
    for r in rects {
        let (sl, sr) = ((r.lo[axis] / width) as usize, (r.hi[axis] / width) as usize);
        if sl == sr {
            let mut m = r;
            m.lo[axis] -= sl as i64 * width;
            m.hi[axis] -= sl as i64 * width;
            short[sl].push(m);
            continue;
        }
        left[sl].push((r.lo[o], r.hi[o], r.lo[axis], r.label));
        right[sr].push((r.lo[o], r.hi[o], r.hi[axis], r.label));
        if sr - sl >= 2 {
            let mut m = r;
            m.lo[axis] = sl as i64 + 1;
            m.hi[axis] = sr as i64 - 1;
            middle.push(m);
        }
    }
    let other_bits = bits_for(u[o] as u64);
    let plane_bits = bits_for(width as u64);
    let mut slabs = Vec::with_capacity(nslabs);
    for (i, ((l, r), sh)) in left.into_iter().zip(right).zip(short).enumerate() {
        ctx.stats.bits_stored +=
            (l.len() + r.len()) as u64 * (2 * other_bits + plane_bits + ctx.label_bits) + sh.len() as u64 * 2 * other_bits;
        let count = Count1::new(&sh.iter().map(|m| (m.lo[o], m.hi[o])).collect::<Vec<_>>());
        let child = if sh.is_empty() {
            None
        } else {
            let mut cu = u;
            cu[axis] = width.min(u[axis] - i as i64 * width);
            Some(Box::new(build(sh, cu, depth + 1, ctx)?))
        };
        slabs.push(Slab { left: Locate1::new(l)?, right: Locate1::new(r)?, short: count, short_child: child });
    }
    let middle = if middle.is_empty() {
        None
    } else {
        let mut mu = u;
        mu[axis] = nslabs as i64;
        Some(Box::new(build(middle, mu, depth + 1, ctx)?))
    };
    Ok(Node::Split { axis, width, slabs, middle })
}

/// Free-function form of [`Pl2::from_boxes`].
pub fn build_pl2(rects: &[Box2], leaf_threshold: usize) -> Result<Pl2> {
    Pl2::from_boxes(rects, leaf_threshold)
}

/// Free-function form of [`Pl2::query`].
pub fn query_pl2(pl: &Pl2, q: Point2, c: &mut Counters) -> Option<u32> {
    pl.query(q, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::brute_locate2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Random guillotine subdivision of `[0, u)^2` into `n` cells, some shrunk
    /// or dropped.
    fn disjoint_rects(n: usize, u: i64, rng: &mut ChaCha8Rng) -> Vec<Box2> {
        let mut cells = vec![([0i64, 0i64], [u - 1, u - 1])];
        while cells.len() < n {
            let i = rng.gen_range(0..cells.len());
            let (lo, hi) = cells[i];
            let a = if hi[0] - lo[0] >= hi[1] - lo[1] { 0 } else { 1 };
            if hi[a] == lo[a] {
                if cells.iter().all(|(l, h)| l == h) {
                    break;
                }
                continue;
            }
            let cut = rng.gen_range(lo[a]..hi[a]);
            let (mut h1, mut l2) = (hi, lo);
            h1[a] = cut;
            l2[a] = cut + 1;
            cells[i] = (lo, h1);
            cells.push((l2, hi));
        }
        let mut out = Vec::new();
        for (id, (lo, mut hi)) in cells.into_iter().enumerate() {
            if !rng.gen_bool(0.85) {
                continue;
            }
            if rng.gen_bool(0.3) {
                hi[0] = rng.gen_range(lo[0]..=hi[0]);
            }
            out.push(Box2::closed(id as u32, lo, hi));
        }
        out
    }

    #[test]
    fn single_rect() {
        let pl = build_pl2(&[Box2::closed(9, [0, 0], [3, 3])], 32).unwrap();
        let mut c = Counters::new();
        assert_eq!(query_pl2(&pl, [1, 1], &mut c), Some(9));
        assert_eq!(query_pl2(&pl, [5, 5], &mut c), None);
        let empty = build_pl2(&[], 32).unwrap();
        assert_eq!(empty.query([0, 0], &mut c), None);
    }

    #[test]
    fn overlap_is_rejected() {
        let rs = [Box2::closed(0, [0, 0], [4, 4]), Box2::closed(1, [4, 4], [6, 6])];
        assert!(matches!(build_pl2(&rs, 32), Err(Error::NotDisjoint { .. })));
        let many: Vec<Box2> = (0..100).map(|i| Box2::closed(i, [i as i64, 0], [i as i64 + 1, 0])).collect();
        assert!(build_pl2(&many, 4).is_err());
    }

    #[test]
    fn random_subdivisions_against_brute() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (n, tau) in [(200usize, 32usize), (200, 1), (1500, 8), (37, 2)] {
            let rs = disjoint_rects(n, 4 * n as i64, &mut rng);
            let pl = build_pl2(&rs, tau).unwrap();
            let mut c = Counters::new();
            for _ in 0..500 {
                let q = [rng.gen_range(-1..4 * n as i64 + 1), rng.gen_range(-1..4 * n as i64 + 1)];
                assert_eq!(pl.query(q, &mut c), brute_locate2(&rs, q).unwrap());
            }
        }
    }

    #[test]
    fn unbounded_sides_are_supported() {
        let rs = [
            LabeledRect { lo: [NEG_INF, 0], hi: [4, POS_INF], label: 1 },
            LabeledRect { lo: [5, NEG_INF], hi: [POS_INF, 10], label: 2 },
        ];
        let pl = Pl2::new(&rs, 1).unwrap();
        let mut c = Counters::new();
        assert_eq!(pl.query([-100, 1 << 40], &mut c), Some(1));
        assert_eq!(pl.query([1 << 40, -5], &mut c), Some(2));
        assert_eq!(pl.query([7, 11], &mut c), None);
    }
}
