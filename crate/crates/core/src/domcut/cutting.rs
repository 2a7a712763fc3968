use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::counters::Counters;
use crate::geom::{Point2, Point3, NEG_INF, POS_INF};
use crate::range2d::{LabeledRect, Pl2};

use super::dominance3::Dominance3;

/// Conflict threshold at which a 3-d sweep cell is retired, as a multiple of
/// the level. Fresh cells hold at most twice the level.
const DEATH_FACTOR: usize = 4;

/// A t-shallow cutting of 2-d points by quadrants `[a,∞) × [b,∞)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShallowCutting2 {
    pub level: usize,
    /// Lower-left corner of the covered region.
    pub domain: Point2,
    pub corners: Vec<Point2>,
    /// Indices of the input points dominating each corner.
    pub conflicts: Vec<Vec<u32>>,
}

/// A t-shallow cutting of 3-d points by octants, with the FIND-ANY planar
/// subdivision of the corner footprints.
#[derive(Debug, Clone)]
pub struct ShallowCutting3 {
    pub level: usize,
    pub domain: Point3,
    pub corners: Vec<Point3>,
    pub conflicts: Vec<Vec<u32>>,
    /// Regions labelled by the footprint-containing corner of least z, ties to
    /// the smaller index.
    pub subdivision: Pl2,
    /// The labelled rectangles behind `subdivision`.
    pub regions: Vec<LabeledRect>,
}

impl ShallowCutting2 {
    pub fn len(&self) -> usize {
        self.corners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corners.is_empty()
    }
}

impl ShallowCutting3 {
    pub fn len(&self) -> usize {
        self.corners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corners.is_empty()
    }

    /// Index of a corner whose footprint contains `(qx, qy)` and whose z is
    /// least among all such corners.
    pub fn find_any(&self, qx: i64, qy: i64, c: &mut Counters) -> Option<u32> {
        self.subdivision.query([qx, qy], c)
    }
}

fn minima<const D: usize>(points: &[[i64; D]]) -> [i64; D] {
    let mut m = [i64::MAX; D];
    for p in points {
        for a in 0..D {
            m[a] = m[a].min(p[a]);
        }
    }
    if points.is_empty() {
        [0; D]
    } else {
        m
    }
}

/// `b(a)` for each query `a`: one more than the (t+1)-th largest y among the
/// points with x >= a, or `ymin` when there are at most `t` of them.
/// `desc` is sorted by x descending.
fn levels_at(desc: &[Point2], queries: &[i64], t: usize, ymin: i64) -> Vec<i64> {
    let mut order: Vec<usize> = (0..queries.len()).collect();
    order.sort_unstable_by_key(|&i| Reverse(queries[i]));
    let mut out = vec![ymin; queries.len()];
    let mut heap: BinaryHeap<Reverse<i64>> = BinaryHeap::with_capacity(t + 2);
    let mut k = 0;
    for i in order {
        while k < desc.len() && desc[k][0] >= queries[i] {
            heap.push(Reverse(desc[k][1]));
            if heap.len() > t + 1 {
                heap.pop();
            }
            k += 1;
        }
        if heap.len() > t {
            out[i] = (heap.peek().unwrap().0 + 1).max(ymin);
        }
    }
    out
}

/// Corners whose x-intervals partition `[start, end)` and which cover every
/// point of that strip dominated by at most `t` of `desc`. Each corner is
/// dominated by at most `2t` points.
fn cover_strip(desc: &[Point2], start: i64, end: i64, t: usize, ymin: i64) -> Vec<Point2> {
    let mut closes = Vec::new();
    let mut acc = 0usize;
    let mut k = desc.len();
    while k > 0 {
        let x = desc[k - 1][0];
        if x >= end {
            break;
        }
        let mut cnt = 0;
        while k > 0 && desc[k - 1][0] == x {
            cnt += 1;
            k -= 1;
        }
        if x < start {
            continue;
        }
        acc += cnt;
        if acc > t {
            closes.push(x);
            acc = 0;
        }
    }
    let mut starts = vec![start];
    let mut probes = Vec::with_capacity(closes.len() + 1);
    for &x in &closes {
        probes.push(x);
        starts.push(x + 1);
    }
    if *starts.last().unwrap() >= end {
        starts.pop();
    } else if end != POS_INF {
        probes.push(end - 1);
    }
    let mut bs = levels_at(desc, &probes, t, ymin);
    if bs.len() < starts.len() {
        // Open final strip: nothing to its right, so at most t dominators.
        bs.push(ymin);
    }
    starts.into_iter().zip(bs).map(|(a, b)| [a, b]).collect()
}

/// Conflict lists of all corners through one dominance structure, each list
/// ascending.
fn conflict_lists(points: &[Point3], corners: &[Point3]) -> Vec<Vec<u32>> {
    let dom = Dominance3::new(points.iter().enumerate().map(|(i, &p)| (p, i as u32)).collect());
    let mut c = Counters::new();
    corners
        .iter()
        .map(|&q| {
            let mut v = dom.query_vec(q, &mut c);
            v.sort_unstable();
            v
        })
        .collect()
}

/// Shallow cutting over the domain at the point minima.
pub fn build_cutting2(points: &[Point2], t: usize) -> ShallowCutting2 {
    build_cutting2_in(points, t, minima(points))
}

/// Shallow cutting covering `[domain.x, ∞) × [domain.y, ∞)`; every point must
/// lie in the domain.
pub fn build_cutting2_in(points: &[Point2], t: usize, domain: Point2) -> ShallowCutting2 {
    let t = t.max(1);
    if points.is_empty() {
        return ShallowCutting2 { level: t, domain, corners: Vec::new(), conflicts: Vec::new() };
    }
    debug_assert!(points.iter().all(|p| p[0] >= domain[0] && p[1] >= domain[1]));
    let mut desc = points.to_vec();
    desc.sort_unstable_by(|a, b| b.cmp(a));
    let corners = cover_strip(&desc, domain[0], POS_INF, t, domain[1]);
    let lifted: Vec<Point3> = points.iter().map(|p| [p[0], p[1], 0]).collect();
    let conflicts = conflict_lists(&lifted, &corners.iter().map(|c| [c[0], c[1], 0]).collect::<Vec<_>>());
    ShallowCutting2 { level: t, domain, corners, conflicts }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    a: i64,
    b: i64,
    count: usize,
}

/// Shallow cutting over the domain at the point minima.
pub fn build_cutting3(points: &[Point3], t: usize) -> ShallowCutting3 {
    build_cutting3_in(points, t, minima(points))
}

/// 3-d shallow cutting by a descending z sweep over an incremental 2-d
/// cutting. A cell whose conflict count passes the retirement threshold is
/// emitted with its z just above the current sweep level, and its stretch of
/// the x-axis is re-covered from the active points.
pub fn build_cutting3_in(points: &[Point3], t: usize, domain: Point3) -> ShallowCutting3 {
    let t = t.max(1);
    debug_assert!(points.iter().all(|p| (0..3).all(|a| p[a] >= domain[a])));
    let mut corners: Vec<Point3> = Vec::new();
    if !points.is_empty() {
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_unstable_by_key(|&i| Reverse(points[i][2]));
        let mut cells = vec![Cell { a: domain[0], b: domain[1], count: 0 }];
        let mut desc: Vec<Point2> = Vec::with_capacity(points.len());
        let mut i = 0;
        while i < order.len() {
            let z = points[order[i]][2];
            while i < order.len() && points[order[i]][2] == z {
                let p = points[order[i]];
                let xy = [p[0], p[1]];
                let at = desc.partition_point(|q| q > &xy);
                desc.insert(at, xy);
                let reach = cells.partition_point(|c| c.a <= p[0]);
                for c in &mut cells[..reach] {
                    if c.b <= p[1] {
                        c.count += 1;
                    }
                }
                i += 1;
            }
            retire(&mut cells, &desc, t, domain[1], z, &mut corners);
        }
        corners.extend(cells.iter().map(|c| [c.a, c.b, domain[2]]));
    }
    let conflicts = conflict_lists(points, &corners);
    let regions = footprint_regions(&corners);
    let subdivision = Pl2::new(&regions, 32).expect("footprint regions are disjoint");
    ShallowCutting3 { level: t, domain, corners, conflicts, subdivision, regions }
}

fn retire(cells: &mut Vec<Cell>, desc: &[Point2], t: usize, ymin: i64, z: i64, out: &mut Vec<Point3>) {
    let limit = DEATH_FACTOR * t;
    let mut j = cells.len();
    while j > 0 {
        if cells[j - 1].count <= limit {
            j -= 1;
            continue;
        }
        let hi = j;
        while j > 0 && cells[j - 1].count > limit {
            j -= 1;
        }
        let lo = j;
        for c in &cells[lo..hi] {
            out.push([c.a, c.b, z + 1]);
        }
        let end = cells.get(hi).map_or(POS_INF, |c| c.a);
        let fresh: Vec<Cell> = cover_strip(desc, cells[lo].a, end, t, ymin)
            .into_iter()
            .map(|[a, b]| {
                let reach = desc.partition_point(|p| p[0] >= a);
                let count = desc[..reach].iter().filter(|p| p[1] >= b).count();
                Cell { a, b, count }
            })
            .collect();
        cells.splice(lo..hi, fresh);
    }
}

/// Planar subdivision of the union of footprints `[a,∞) × [b,∞)`, each region
/// labelled by the corner of least z (then least index) containing it.
/// Vertical slabs between consecutive distinct `a`; within a slab a prefix
/// minimum over corners sorted by `b`. Equal pieces of adjacent slabs merge.
pub fn footprint_regions(corners: &[Point3]) -> Vec<LabeledRect> {
    let mut by_a: Vec<u32> = (0..corners.len() as u32).collect();
    by_a.sort_unstable_by_key(|&i| corners[i as usize][0]);
    let key = |i: u32| (corners[i as usize][2], i);
    let mut active: Vec<u32> = Vec::new();
    let mut open: Vec<(i64, i64, u32, i64)> = Vec::new();
    let mut out = Vec::new();
    let mut k = 0;
    while k < by_a.len() {
        let xa = corners[by_a[k] as usize][0];
        while k < by_a.len() && corners[by_a[k] as usize][0] == xa {
            let id = by_a[k];
            let b = corners[id as usize][1];
            let at = active.partition_point(|&j| corners[j as usize][1] <= b);
            active.insert(at, id);
            k += 1;
        }
        // Pieces (ylo, yhi, label) of this slab.
        let mut pieces: Vec<(i64, i64, u32)> = Vec::new();
        let mut best: Option<u32> = None;
        let mut g = 0;
        while g < active.len() {
            let yb = corners[active[g] as usize][1];
            let mut cand = best;
            while g < active.len() && corners[active[g] as usize][1] == yb {
                let id = active[g];
                if cand.is_none_or(|c| key(id) < key(c)) {
                    cand = Some(id);
                }
                g += 1;
            }
            if cand != best {
                if let Some(last) = pieces.last_mut() {
                    last.1 = yb - 1;
                }
                pieces.push((yb, POS_INF, cand.unwrap()));
                best = cand;
            }
        }
        let mut next_open = Vec::with_capacity(pieces.len());
        let mut o = 0;
        for p in pieces {
            while o < open.len() && (open[o].0, open[o].1) < (p.0, p.1) {
                out.push(region(open[o], xa - 1));
                o += 1;
            }
            if o < open.len() && (open[o].0, open[o].1, open[o].2) == p {
                next_open.push(open[o]);
                o += 1;
            } else {
                if o < open.len() && (open[o].0, open[o].1) == (p.0, p.1) {
                    out.push(region(open[o], xa - 1));
                    o += 1;
                }
                next_open.push((p.0, p.1, p.2, xa));
            }
        }
        for r in &open[o..] {
            out.push(region(*r, xa - 1));
        }
        open = next_open;
    }
    for r in open {
        out.push(region(r, POS_INF));
    }
    out
}

fn region(r: (i64, i64, u32, i64), xhi: i64) -> LabeledRect {
    LabeledRect { lo: [r.3, r.0], hi: [xhi, r.1], label: r.2 }
}

/// The domain used by structures that must cover queries left of or below
/// every input point.
pub const UNBOUNDED2: Point2 = [NEG_INF, NEG_INF];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{verify_cutting2, verify_cutting3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pts2(rng: &mut ChaCha8Rng, n: usize, u: i64) -> Vec<Point2> {
        (0..n).map(|_| [rng.gen_range(0..u), rng.gen_range(0..u)]).collect()
    }

    fn pts3(rng: &mut ChaCha8Rng, n: usize, u: i64) -> Vec<Point3> {
        (0..n).map(|_| [0, 1, 2].map(|_| rng.gen_range(0..u))).collect()
    }

    #[test]
    fn shallow_level_gives_single_corner() {
        let p = vec![[3, 9], [5, 1], [4, 4]];
        let cut = build_cutting2(&p, 3);
        assert_eq!(cut.corners, vec![[3, 1]]);
        assert_eq!(cut.conflicts, vec![vec![0, 1, 2]]);
        let cut3 = build_cutting3(&[[1, 2, 3], [2, 1, 5]], 2);
        assert_eq!(cut3.corners, vec![[1, 1, 3]]);
        let empty = build_cutting2(&[], 4);
        assert!(empty.is_empty());
        assert!(verify_cutting2(&empty, &[], 4, 8.0, 4).passed);
        assert!(build_cutting3(&[], 4).is_empty());
    }

    #[test]
    fn levels_match_sorting() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut p = pts2(&mut rng, 200, 50);
        p.sort_unstable_by(|a, b| b.cmp(a));
        let qs: Vec<i64> = (0..60).collect();
        for t in [1, 3, 10] {
            let got = levels_at(&p, &qs, t, -5);
            for (i, &a) in qs.iter().enumerate() {
                let mut ys: Vec<i64> = p.iter().filter(|q| q[0] >= a).map(|q| q[1]).collect();
                ys.sort_unstable_by(|a, b| b.cmp(a));
                let want = if ys.len() > t { ys[t] + 1 } else { -5 };
                assert_eq!(got[i], want);
            }
        }
    }

    #[test]
    fn random_cuttings_verify() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for (n, t) in [(1000, 16), (300, 4), (64, 64), (500, 1)] {
            let p = pts2(&mut rng, n, 400);
            let r = verify_cutting2(&build_cutting2(&p, t), &p, t, 8.0, 4);
            assert!(r.passed, "2-d n={n} t={t}: {r:?}");
            let p = pts3(&mut rng, n, 400);
            let r = verify_cutting3(&build_cutting3(&p, t), &p, t, 8.0, 4);
            assert!(r.passed, "3-d n={n} t={t}: {r:?}");
        }
    }

    #[test]
    fn heavy_ties_verify() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for t in [1, 4, 16] {
            let p = pts3(&mut rng, 600, 6);
            let r = verify_cutting3(&build_cutting3(&p, t), &p, t, 8.0, 4);
            assert!(r.passed, "t={t}: {r:?}");
            let p = pts2(&mut rng, 600, 5);
            let r = verify_cutting2(&build_cutting2(&p, t), &p, t, 8.0, 4);
            assert!(r.passed, "t={t}: {r:?}");
        }
    }

    #[test]
    fn unbounded_domain_covers_everything_shallow() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let p = pts2(&mut rng, 300, 100);
        let cut = build_cutting2_in(&p, 8, UNBOUNDED2);
        for _ in 0..300 {
            let q = [rng.gen_range(-50..150), rng.gen_range(-50..150)];
            let dom = p.iter().filter(|s| s[0] >= q[0] && s[1] >= q[1]).count();
            let covered = cut.corners.iter().any(|c| c[0] <= q[0] && c[1] <= q[1]);
            assert!(dom > 8 || covered, "{q:?}");
        }
    }

    #[test]
    fn find_any_is_label_minimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let p = pts3(&mut rng, 400, 40);
        let cut = build_cutting3(&p, 8);
        let mut c = Counters::new();
        for x in -1..42 {
            for y in -1..42 {
                let best = (0..cut.corners.len() as u32)
                    .filter(|&i| {
                        let k = cut.corners[i as usize];
                        k[0] <= x && k[1] <= y
                    })
                    .min_by_key(|&i| (cut.corners[i as usize][2], i));
                assert_eq!(cut.find_any(x, y, &mut c), best, "({x},{y})");
            }
        }
    }

    #[test]
    fn find_any_single_and_miss() {
        let cut = build_cutting3(&[[0, 0, 0]], 1);
        let mut c = Counters::new();
        assert_eq!(cut.find_any(100, 100, &mut c), Some(0));
        assert_eq!(cut.find_any(-1, 100, &mut c), None);
    }
}
