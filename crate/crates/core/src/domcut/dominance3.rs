use crate::counters::{bits_for, partition_counted, Counters};
use crate::geom::Point3;

/// Canonical nodes this small are scanned instead of searched.
const SCAN_LIMIT: usize = 16;

/// Points of one canonical x-range sorted by y descending, with a max-z
/// tournament tree for reporting `y >= qy, z >= qz`.
#[derive(Debug, Clone)]
struct YzBlock {
    ys: Vec<i64>,
    zs: Vec<i64>,
    ids: Vec<u32>,
    zmax: Vec<i64>,
    leaves: usize,
}

impl YzBlock {
    fn new(mut pts: Vec<(i64, i64, u32)>) -> Self {
        pts.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.2.cmp(&b.2)));
        let leaves = pts.len().next_power_of_two();
        let mut zmax = vec![i64::MIN; 2 * leaves];
        for (i, p) in pts.iter().enumerate() {
            zmax[leaves + i] = p.1;
        }
        for k in (1..leaves).rev() {
            zmax[k] = zmax[2 * k].max(zmax[2 * k + 1]);
        }
        YzBlock {
            ys: pts.iter().map(|p| p.0).collect(),
            zs: pts.iter().map(|p| p.1).collect(),
            ids: pts.iter().map(|p| p.2).collect(),
            zmax,
            leaves,
        }
    }

    fn report(&self, qy: i64, qz: i64, c: &mut Counters, emit: &mut dyn FnMut(u32)) {
        let len = partition_counted(&self.ys, c, |&y| y >= qy);
        if len > 0 {
            self.descend(1, 0, self.leaves, len, qz, c, emit);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(&self, k: usize, l: usize, r: usize, len: usize, qz: i64, c: &mut Counters, emit: &mut dyn FnMut(u32)) {
        c.cells_scanned += 1;
        if l >= len || self.zmax[k] < qz {
            return;
        }
        if r - l == 1 {
            debug_assert!(self.zs[l] >= qz);
            emit(self.ids[l]);
            return;
        }
        let m = (l + r) / 2;
        self.descend(2 * k, l, m, len, qz, c, emit);
        self.descend(2 * k + 1, m, r, len, qz, c, emit);
    }
}

#[derive(Debug, Clone)]
struct Node {
    lo: usize,
    hi: usize,
    kids: Option<(u32, u32)>,
    block: Option<YzBlock>,
}

/// Static 3-d dominance reporting: all points `p` with `p >= q` on every axis.
///
/// Points sorted by x descending make `x >= qx` a prefix. The prefix splits into
/// O(log n) canonical ranges of a balanced tree, and each range answers the
/// remaining 2-sided `(y, z)` condition through a tournament tree over its
/// y-sorted points.
#[derive(Debug, Clone, Default)]
pub struct Dominance3 {
    flip: [bool; 3],
    xs: Vec<i64>,
    pts: Vec<(Point3, u32)>,
    nodes: Vec<Node>,
}

impl Dominance3 {
    /// Canonical orientation.
    pub fn new(points: Vec<(Point3, u32)>) -> Self {
        Self::with_flips(points, [false; 3])
    }

    /// Axes with `flip` set are negated, so the structure reports `p <= q`
    /// on those axes.
    pub fn with_flips(points: Vec<(Point3, u32)>, flip: [bool; 3]) -> Self {
        let mut pts: Vec<(Point3, u32)> =
            points.into_iter().map(|(p, id)| (apply(p, flip), id)).collect();
        pts.sort_unstable_by(|a, b| b.0[0].cmp(&a.0[0]).then(a.1.cmp(&b.1)));
        let xs = pts.iter().map(|p| p.0[0]).collect();
        let mut d = Dominance3 { flip, xs, pts, nodes: Vec::new() };
        if !d.pts.is_empty() {
            d.build(0, d.pts.len());
        }
        d
    }

    fn build(&mut self, lo: usize, hi: usize) -> u32 {
        let id = self.nodes.len() as u32;
        self.nodes.push(Node { lo, hi, kids: None, block: None });
        if hi - lo > SCAN_LIMIT {
            let block = YzBlock::new(self.pts[lo..hi].iter().map(|(p, i)| (p[1], p[2], *i)).collect());
            let m = (lo + hi) / 2;
            let l = self.build(lo, m);
            let r = self.build(m, hi);
            let n = &mut self.nodes[id as usize];
            n.block = Some(block);
            n.kids = Some((l, r));
        }
        id
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    pub fn query(&self, q: Point3, c: &mut Counters, emit: &mut dyn FnMut(u32)) {
        c.dominance_queries += 1;
        if self.pts.is_empty() {
            return;
        }
        let q = apply(q, self.flip);
        let prefix = partition_counted(&self.xs, c, |&x| x >= q[0]);
        if prefix > 0 {
            self.visit(0, prefix, q, c, emit);
        }
    }

    pub fn query_vec(&self, q: Point3, c: &mut Counters) -> Vec<u32> {
        let mut out = Vec::new();
        self.query(q, c, &mut |id| out.push(id));
        out
    }

    fn visit(&self, k: u32, prefix: usize, q: Point3, c: &mut Counters, emit: &mut dyn FnMut(u32)) {
        let n = &self.nodes[k as usize];
        if n.lo >= prefix {
            return;
        }
        c.nodes_visited += 1;
        match (&n.block, n.kids) {
            (Some(b), _) if n.hi <= prefix => b.report(q[1], q[2], c, emit),
            (_, Some((l, r))) => {
                self.visit(l, prefix, q, c, emit);
                self.visit(r, prefix, q, c, emit);
            }
            _ => {
                for (p, id) in &self.pts[n.lo..n.hi.min(prefix)] {
                    c.cells_scanned += 1;
                    if p[1] >= q[1] && p[2] >= q[2] {
                        emit(*id);
                    }
                }
            }
        }
    }

    /// Payload bits with `coord_bits` per coordinate and `id_bits` per pointer.
    pub fn bits_stored(&self, coord_bits: u64, id_bits: u64) -> u64 {
        let mut total = self.pts.len() as u64 * (3 * coord_bits + id_bits);
        for n in &self.nodes {
            if let Some(b) = &n.block {
                let m = b.ys.len() as u64;
                total += m * (2 * coord_bits + id_bits) + m * coord_bits;
            }
        }
        total + self.nodes.len() as u64 * 2 * bits_for(self.pts.len() as u64 + 1)
    }
}

fn apply(mut p: Point3, flip: [bool; 3]) -> Point3 {
    for a in 0..3 {
        if flip[a] {
            p[a] = -p[a];
        }
    }
    p
}

/// Free-function form of [`Dominance3::with_flips`].
pub fn build_dominance3(points: Vec<(Point3, u32)>, flip: [bool; 3]) -> Dominance3 {
    Dominance3::with_flips(points, flip)
}

/// Free-function form of [`Dominance3::query_vec`].
pub fn query_dominance3(d: &Dominance3, q: Point3, c: &mut Counters) -> Vec<u32> {
    d.query_vec(q, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::brute_dominance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn extremes() {
        let pts: Vec<(Point3, u32)> = (0..40).map(|i| ([i % 7, i % 5, i % 3], i as u32)).collect();
        let d = Dominance3::new(pts.clone());
        let mut c = Counters::new();
        let mut all = d.query_vec([0, 0, 0], &mut c);
        all.sort_unstable();
        assert_eq!(all, (0..40).collect::<Vec<u32>>());
        assert!(d.query_vec([7, 0, 0], &mut c).is_empty());
        assert!(Dominance3::new(vec![]).query_vec([0, 0, 0], &mut c).is_empty());
    }

    #[test]
    fn random_against_brute() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [1usize, 17, 500, 1300] {
            let raw: Vec<Point3> = (0..n).map(|_| [0, 1, 2].map(|_| rng.gen_range(0..50))).collect();
            let d = Dominance3::new(raw.iter().enumerate().map(|(i, p)| (*p, i as u32)).collect());
            let mut c = Counters::new();
            for _ in 0..500 {
                let q = [0, 1, 2].map(|_| rng.gen_range(-1..52));
                let mut got = d.query_vec(q, &mut c);
                got.sort_unstable();
                assert_eq!(got, brute_dominance(&raw, q));
            }
        }
    }

    #[test]
    fn flipped_axes_report_lower_orthants() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let raw: Vec<Point3> = (0..300).map(|_| [0, 1, 2].map(|_| rng.gen_range(0..30))).collect();
        let flip = [true, false, true];
        let d = Dominance3::with_flips(raw.iter().enumerate().map(|(i, p)| (*p, i as u32)).collect(), flip);
        let mut c = Counters::new();
        for _ in 0..200 {
            let q: Point3 = [0, 1, 2].map(|_| rng.gen_range(0..30));
            let mut got = d.query_vec(q, &mut c);
            got.sort_unstable();
            let want: Vec<u32> = (0..raw.len() as u32)
                .filter(|&i| {
                    let p = raw[i as usize];
                    p[0] <= q[0] && p[1] >= q[1] && p[2] <= q[2]
                })
                .collect();
            assert_eq!(got, want);
        }
    }
}
