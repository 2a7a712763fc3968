//! Linear-scan reference answers for every query type, and an exact checker
//! for shallow cuttings.

use std::collections::{BTreeMap, HashSet};

use crate::domcut::{ShallowCutting2, ShallowCutting3};
use crate::error::{Error, Result};
use crate::geom::{Box2, Box3, Point2, Point3, Ranked, WPoint, POS_INF};

/// The unique box containing `q`, if any. Two containing boxes is an error.
pub fn brute_locate(boxes: &[Box3], q: Point3) -> Result<Option<u32>> {
    let mut hit: Option<u32> = None;
    for b in boxes.iter().filter(|b| b.contains(q)) {
        if let Some(a) = hit {
            return Err(Error::NotDisjoint { a, b: b.id });
        }
        hit = Some(b.id);
    }
    Ok(hit)
}

pub fn brute_locate2(rects: &[Box2], q: Point2) -> Result<Option<u32>> {
    let mut hit: Option<u32> = None;
    for r in rects.iter().filter(|r| r.contains(q)) {
        if let Some(a) = hit {
            return Err(Error::NotDisjoint { a, b: r.id });
        }
        hit = Some(r.id);
    }
    Ok(hit)
}

/// Ids of all boxes containing `q`, ascending.
pub fn brute_stab(boxes: &[Box3], q: Point3) -> Vec<u32> {
    let mut v: Vec<u32> = boxes.iter().filter(|b| b.contains(q)).map(|b| b.id).collect();
    v.sort_unstable();
    v
}

pub fn brute_count(boxes: &[Box3], q: Point3) -> usize {
    boxes.iter().filter(|b| b.contains(q)).count()
}

pub fn brute_stab2(rects: &[Box2], q: Point2) -> Vec<u32> {
    let mut v: Vec<u32> = rects.iter().filter(|r| r.contains(q)).map(|r| r.id).collect();
    v.sort_unstable();
    v
}

pub fn brute_count2(rects: &[Box2], q: Point2) -> usize {
    rects.iter().filter(|r| r.contains(q)).count()
}

/// Indices of the points dominating `q` (`p >= q` on every axis), ascending.
pub fn brute_dominance<const D: usize>(points: &[[i64; D]], q: [i64; D]) -> Vec<u32> {
    (0..points.len() as u32)
        .filter(|&i| (0..D).all(|a| points[i as usize][a] >= q[a]))
        .collect()
}

fn take_ranked(mut v: Vec<Ranked>, k: usize) -> Vec<u32> {
    v.sort_unstable_by(|a, b| b.cmp(a));
    v.truncate(k);
    v.into_iter().map(|r| r.id).collect()
}

/// Ids of the `k` heaviest points dominating `q`, heaviest first, ties by id.
pub fn brute_topk_dominance(points: &[WPoint], q: Point2, k: usize) -> Vec<u32> {
    let v = points
        .iter()
        .filter(|p| p.xy[0] >= q[0] && p.xy[1] >= q[1])
        .map(|p| Ranked { weight: p.weight, id: p.id })
        .collect();
    take_ranked(v, k)
}

/// Ids of the `k` heaviest rectangles containing `q`, heaviest first, ties by
/// id. A missing weight counts as 0.
pub fn brute_topk_stab(rects: &[Box2], q: Point2, k: usize) -> Vec<u32> {
    let v = rects
        .iter()
        .filter(|r| r.contains(q))
        .map(|r| Ranked { weight: r.weight.unwrap_or(0), id: r.id })
        .collect();
    take_ranked(v, k)
}

/// Outcome of [`verify_cutting2`] / [`verify_cutting3`].
#[derive(Debug, Clone, PartialEq)]
pub struct CuttingReport {
    pub passed: bool,
    pub cells: usize,
    pub cell_bound: f64,
    pub max_conflict: usize,
    pub conflict_bound: usize,
    /// Coverage, conflict and bookkeeping failures, at most a handful.
    pub witnesses: Vec<String>,
}

const MAX_WITNESSES: usize = 8;

impl CuttingReport {
    fn new(cells: usize, n: usize, t: usize, c_cells: f64, c_conflict: usize) -> Self {
        CuttingReport {
            passed: true,
            cells,
            cell_bound: c_cells * (n as f64 / t as f64 + 1.0),
            max_conflict: 0,
            conflict_bound: c_conflict * t,
            witnesses: Vec::new(),
        }
    }

    fn fail(&mut self, w: String) {
        self.passed = false;
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(w);
        }
    }

    fn check_cells(&mut self) {
        if self.cells as f64 > self.cell_bound {
            self.fail(format!("{} cells exceed bound {:.1}", self.cells, self.cell_bound));
        }
    }

    fn check_conflict(&mut self, i: usize, stored: &[u32], expect: Vec<u32>) {
        self.max_conflict = self.max_conflict.max(stored.len());
        if stored.len() > self.conflict_bound {
            self.fail(format!("cell {i}: conflict list of {} exceeds {}", stored.len(), self.conflict_bound));
        }
        let mut s = stored.to_vec();
        s.sort_unstable();
        if s != expect {
            self.fail(format!("cell {i}: stored conflict list differs from its dominators"));
        }
    }
}

fn domain_min<const D: usize>(points: &[[i64; D]]) -> [i64; D] {
    let mut m = [i64::MAX; D];
    for p in points {
        for a in 0..D {
            m[a] = m[a].min(p[a]);
        }
    }
    m
}

fn dominators<const D: usize>(points: &[[i64; D]], q: [i64; D]) -> usize {
    points.iter().filter(|p| (0..D).all(|a| p[a] >= q[a])).count()
}

/// Maximal points of the complement of a union of quadrants `[a,∞)×[b,∞)`,
/// given by one staircase chain. `open_left` / `open_right` say whether the
/// chain is the whole staircase on that side.
fn gap_points(chain: &[Point2], open_left: bool, open_right: bool) -> Vec<Point2> {
    if chain.is_empty() {
        return vec![[POS_INF, POS_INF]];
    }
    let mut out = Vec::with_capacity(chain.len() + 1);
    if open_left {
        out.push([chain[0][0] - 1, POS_INF]);
    }
    for w in chain.windows(2) {
        out.push([w[1][0] - 1, w[0][1] - 1]);
    }
    if open_right {
        out.push([POS_INF, chain[chain.len() - 1][1] - 1]);
    }
    out
}

/// Staircase of the union of quadrants: `a` ascending, `b` strictly descending.
fn staircase(corners: impl Iterator<Item = Point2>) -> Vec<Point2> {
    let mut v: Vec<Point2> = corners.collect();
    v.sort_unstable();
    let mut out: Vec<Point2> = Vec::new();
    for c in v {
        if out.last().is_none_or(|l| c[1] < l[1]) {
            out.push(c);
        }
    }
    out
}

/// Checks cell count, exact coverage of every point with at most `t`
/// dominators in the domain `[min x, ∞) × [min y, ∞)`, conflict sizes and
/// conflict contents.
pub fn verify_cutting2(
    cut: &ShallowCutting2,
    points: &[Point2],
    t: usize,
    c_cells: f64,
    c_conflict: usize,
) -> CuttingReport {
    let mut rep = CuttingReport::new(cut.corners.len(), points.len(), t, c_cells, c_conflict);
    if points.is_empty() {
        return rep;
    }
    rep.check_cells();
    for (i, c) in cut.corners.iter().enumerate() {
        rep.check_conflict(i, &cut.conflicts[i], brute_dominance(points, *c));
    }
    let dom = domain_min(points);
    for m in gap_points(&staircase(cut.corners.iter().copied()), true, true) {
        if m[0] >= dom[0] && m[1] >= dom[1] && dominators(points, m) <= t {
            rep.fail(format!("uncovered point {m:?} with at most {t} dominators"));
        }
    }
    rep
}

/// Staircase under insertion, reporting which gap points disappear and appear.
#[derive(Default)]
struct LiveStaircase {
    m: BTreeMap<i64, i64>,
}

impl LiveStaircase {
    fn insert(&mut self, a: i64, b: i64) -> (Vec<Point2>, Vec<Point2>) {
        let pred = self.m.range(..=a).next_back().map(|(&x, &y)| [x, y]);
        if pred.is_some_and(|p| p[1] <= b) {
            return (Vec::new(), Vec::new());
        }
        let pred = self.m.range(..a).next_back().map(|(&x, &y)| [x, y]);
        let mut removed = Vec::new();
        let mut succ = None;
        for (&x, &y) in self.m.range(a..) {
            if y >= b {
                removed.push([x, y]);
            } else {
                succ = Some([x, y]);
                break;
            }
        }
        for r in &removed {
            self.m.remove(&r[0]);
        }
        self.m.insert(a, b);
        let chain = |mid: &[Point2]| {
            let mut c: Vec<Point2> = pred.into_iter().collect();
            c.extend_from_slice(mid);
            c.extend(succ);
            c
        };
        let old = gap_points(&chain(&removed), pred.is_none(), succ.is_none());
        let new = gap_points(&chain(&[[a, b]]), pred.is_none(), succ.is_none());
        let gone = old.iter().filter(|p| !new.contains(p)).copied().collect();
        let born = new.iter().filter(|p| !old.contains(p)).copied().collect();
        (gone, born)
    }

    fn gaps(&self) -> Vec<Point2> {
        let chain: Vec<Point2> = self.m.iter().map(|(&x, &y)| [x, y]).collect();
        gap_points(&chain, true, true)
    }
}

/// 3-d counterpart of [`verify_cutting2`]. Coverage is exact: every maximal
/// uncovered lattice point of the domain is examined by a sweep over box
/// z-corners.
pub fn verify_cutting3(
    cut: &ShallowCutting3,
    points: &[Point3],
    t: usize,
    c_cells: f64,
    c_conflict: usize,
) -> CuttingReport {
    let mut rep = CuttingReport::new(cut.corners.len(), points.len(), t, c_cells, c_conflict);
    if points.is_empty() {
        return rep;
    }
    rep.check_cells();
    for (i, c) in cut.corners.iter().enumerate() {
        rep.check_conflict(i, &cut.conflicts[i], brute_dominance(points, *c));
    }
    let dom = domain_min(points);
    let check = |rep: &mut CuttingReport, p: Point2, z: i64| {
        let q = [p[0], p[1], z];
        if (0..3).all(|a| q[a] >= dom[a]) && dominators(points, q) <= t {
            rep.fail(format!("uncovered point {q:?} with at most {t} dominators"));
        }
    };
    let mut order: Vec<usize> = (0..cut.corners.len()).collect();
    order.sort_unstable_by_key(|&i| cut.corners[i][2]);
    let mut st = LiveStaircase::default();
    let mut i = 0;
    while i < order.len() {
        let z = cut.corners[order[i]][2];
        let mut born: HashSet<Point2> = HashSet::new();
        while i < order.len() && cut.corners[order[i]][2] == z {
            let c = cut.corners[order[i]];
            let (gone, new) = st.insert(c[0], c[1]);
            for p in gone {
                if !born.remove(&p) {
                    check(&mut rep, p, z - 1);
                }
            }
            born.extend(new);
            i += 1;
        }
    }
    for p in st.gaps() {
        check(&mut rep, p, POS_INF);
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Interval;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn locate_examples() {
        let b = Box3::closed(4, [0, 0, 0], [1, 1, 1]);
        assert_eq!(brute_locate(&[b], [0, 0, 0]).unwrap(), Some(4));
        assert_eq!(brute_locate(&[b], [3, 0, 0]).unwrap(), None);
        let c = Box3::closed(5, [1, 1, 1], [2, 2, 2]);
        assert_eq!(brute_locate(&[b, c], [1, 1, 1]), Err(Error::NotDisjoint { a: 4, b: 5 }));
    }

    #[test]
    fn stab_examples() {
        assert!(brute_stab(&[], [0, 0, 0]).is_empty());
        assert_eq!(brute_count(&[], [0, 0, 0]), 0);
        let outer = Box3::closed(1, [0, 0, 0], [9, 9, 9]);
        let inner = Box3::closed(0, [2, 2, 2], [3, 3, 3]);
        assert_eq!(brute_stab(&[outer, inner], [2, 3, 2]), vec![0, 1]);
        assert_eq!(brute_count(&[outer, inner], [2, 3, 2]), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let boxes: Vec<Box3> = (0..100)
            .map(|id| {
                let lo = [0, 1, 2].map(|_| rng.gen_range(0..20));
                Box3::closed(id, lo, lo.map(|v| v + rng.gen_range(0..10)))
            })
            .collect();
        for _ in 0..50 {
            let q = [0, 1, 2].map(|_| rng.gen_range(0..30));
            assert_eq!(brute_count(&boxes, q), brute_stab(&boxes, q).len());
        }
    }

    #[test]
    fn dominance_examples_and_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<Point3> = (0..50).map(|_| [0, 1, 2].map(|_| rng.gen_range(0..10))).collect();
        let mn = domain_min(&pts);
        assert_eq!(brute_dominance(&pts, mn).len(), 50);
        let mx = [0, 1, 2].map(|a| pts.iter().map(|p| p[a]).max().unwrap() + 1);
        assert!(brute_dominance(&pts, mx).is_empty());
        // Independent sweep: sort by x descending, stop at the first x below q.x.
        let mut by_x: Vec<u32> = (0..50).collect();
        by_x.sort_by_key(|&i| std::cmp::Reverse(pts[i as usize][0]));
        for _ in 0..100 {
            let q = [0, 1, 2].map(|_| rng.gen_range(0..11));
            let mut sweep: Vec<u32> = by_x
                .iter()
                .copied()
                .take_while(|&i| pts[i as usize][0] >= q[0])
                .filter(|&i| pts[i as usize][1] >= q[1] && pts[i as usize][2] >= q[2])
                .collect();
            sweep.sort_unstable();
            assert_eq!(brute_dominance(&pts, q), sweep);
        }
    }

    #[test]
    fn topk_examples() {
        let pts: Vec<WPoint> =
            (0..6).map(|i| WPoint { id: i, xy: [i as i64, 5 - i as i64], weight: 3 }).collect();
        assert!(brute_topk_dominance(&pts, [0, 0], 0).is_empty());
        assert_eq!(brute_topk_dominance(&pts, [0, 0], 100), vec![0, 1, 2, 3, 4, 5]);
        let rects = vec![
            Box2::new(7, Interval::up_to(4), Interval::up_to(4)).with_weight(1),
            Box2::new(2, Interval::up_to(4), Interval::up_to(4)).with_weight(9),
            Box2::new(3, Interval::up_to(4), Interval::up_to(4)).with_weight(1),
        ];
        assert_eq!(brute_topk_stab(&rects, [0, 0], 2), vec![2, 3]);
        assert_eq!(brute_topk_stab(&rects, [0, 0], 9), vec![2, 3, 7]);
    }

    #[test]
    fn cutting2_checks() {
        let pts: Vec<Point2> = vec![[1, 5], [3, 3], [5, 1]];
        let good = ShallowCutting2 {
            level: 3,
            domain: [1, 1],
            corners: vec![[1, 1]],
            conflicts: vec![vec![0, 1, 2]],
        };
        let r = verify_cutting2(&good, &pts, 3, 8.0, 4);
        assert!(r.passed, "{r:?}");
        assert_eq!(r.cells, 1);
        let uncovered = ShallowCutting2 { corners: vec![[2, 1]], conflicts: vec![vec![1, 2]], ..good.clone() };
        assert!(!verify_cutting2(&uncovered, &pts, 3, 8.0, 4).passed);
        let wrong_list = ShallowCutting2 { conflicts: vec![vec![0, 1]], ..good.clone() };
        assert!(!verify_cutting2(&wrong_list, &pts, 3, 8.0, 4).passed);
        let empty = ShallowCutting2 { level: 1, domain: [0, 0], corners: vec![], conflicts: vec![] };
        assert!(verify_cutting2(&empty, &[], 1, 8.0, 4).passed);
    }

    #[test]
    fn live_staircase_matches_static() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let mut st = LiveStaircase::default();
            let mut all = Vec::new();
            let mut gaps: HashSet<Point2> = st.gaps().into_iter().collect();
            for _ in 0..rng.gen_range(1..12) {
                let c = [rng.gen_range(0..10), rng.gen_range(0..10)];
                all.push(c);
                let (gone, born) = st.insert(c[0], c[1]);
                for g in gone {
                    assert!(gaps.remove(&g));
                }
                gaps.extend(born);
                let expect: HashSet<Point2> =
                    gap_points(&staircase(all.iter().copied()), true, true).into_iter().collect();
                assert_eq!(gaps, expect);
            }
        }
    }
}
