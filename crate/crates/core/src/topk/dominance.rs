//! Top-k 2-d dominance: the `k` heaviest points with `p >= q`.
//!
//! Points are lifted to 3-d with their weight rank as z. For `k <= t` the
//! k-th answer sits at a 3-d point with exactly `k` dominators, so a
//! `t`-shallow cutting covers it, and the cell found by FIND-ANY at the query's
//! `(x, y)` holds every answer. Two cuttings serve `k <= t2` and `k <= t1`; the
//! lower one stores, per rank-space cell of its conflict list, the weight-
//! ordered dominators. Larger `k` goes to a threshold search over a 3-d
//! dominance structure.

use crate::counters::{bits_for, count_lt, BuildStats, Counters};
use crate::domcut::{build_cutting3_in, Dominance3, ShallowCutting3};
use crate::error::{Error, Result};
use crate::geom::{Point2, Point3, Ranked, WPoint};
use crate::params::ModelParams;

#[derive(Debug, Clone)]
struct Tier {
    cut: ShallowCutting3,
    /// Conflict lists, heaviest first.
    lists: Vec<Vec<u32>>,
}

#[derive(Debug, Clone)]
struct RankCell {
    xs: Vec<i64>,
    ys: Vec<i64>,
    offsets: Vec<u32>,
    entries: Vec<u32>,
}

#[derive(Debug, Clone)]
struct LowTier {
    cut: ShallowCutting3,
    cells: Vec<RankCell>,
}

/// Which tier answered a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopKTier {
    Empty,
    Low,
    High,
    Slow,
}

#[derive(Debug, Clone)]
pub struct TopKDominance {
    pts: Vec<WPoint>,
    /// Weight rank: larger means reported earlier.
    zr: Vec<i64>,
    rank: Vec<Point2>,
    xs: Vec<i64>,
    ys: Vec<i64>,
    t1: usize,
    t2: usize,
    high: Tier,
    low: LowTier,
    slow: Dominance3,
}

fn ranks_by<K: Ord>(n: usize, key: impl Fn(usize) -> K) -> Vec<i64> {
    let mut ord: Vec<usize> = (0..n).collect();
    ord.sort_unstable_by_key(|&i| key(i));
    let mut r = vec![0; n];
    for (pos, i) in ord.into_iter().enumerate() {
        r[i] = pos as i64;
    }
    r
}

impl TopKDominance {
    pub fn new(points: Vec<WPoint>, params: &ModelParams) -> Self {
        Self::build(points, params, None)
    }

    /// Rank-cell lists truncated to `cap` entries, which must cover `t2`.
    pub fn with_rank_cap(points: Vec<WPoint>, params: &ModelParams, cap: usize) -> Result<Self> {
        let t2 = params.t2(points.len());
        if cap < t2 {
            return Err(Error::InvalidParams(format!("rank-cell cap {cap} below t2 = {t2}")));
        }
        Ok(Self::build(points, params, Some(cap)))
    }

    fn build(pts: Vec<WPoint>, params: &ModelParams, cap: Option<usize>) -> Self {
        let n = pts.len();
        let (t1, t2) = (params.t1(n), params.t2(n));
        let zr = ranks_by(n, |i| Ranked { weight: pts[i].weight, id: pts[i].id });
        let rx = ranks_by(n, |i| (pts[i].xy[0], pts[i].id));
        let ry = ranks_by(n, |i| (pts[i].xy[1], pts[i].id));
        let rank: Vec<Point2> = (0..n).map(|i| [rx[i], ry[i]]).collect();
        let lifted: Vec<Point3> = (0..n).map(|i| [rx[i], ry[i], zr[i]]).collect();
        let mut xs: Vec<i64> = pts.iter().map(|p| p.xy[0]).collect();
        let mut ys: Vec<i64> = pts.iter().map(|p| p.xy[1]).collect();
        xs.sort_unstable();
        ys.sort_unstable();
        let heaviest_first = |mut v: Vec<u32>| {
            v.sort_unstable_by_key(|&i| std::cmp::Reverse(zr[i as usize]));
            v
        };
        let hc = build_cutting3_in(&lifted, t1, [0, 0, 0]);
        let high = Tier { lists: hc.conflicts.iter().cloned().map(&heaviest_first).collect(), cut: hc };
        let lc = build_cutting3_in(&lifted, t2, [0, 0, 0]);
        let cells = lc
            .conflicts
            .iter()
            .map(|cl| {
                let mut cx: Vec<i64> = cl.iter().map(|&i| rx[i as usize]).collect();
                let mut cy: Vec<i64> = cl.iter().map(|&i| ry[i as usize]).collect();
                cx.sort_unstable();
                cy.sort_unstable();
                let order = heaviest_first(cl.clone());
                let m = cl.len();
                let (mut offsets, mut entries) = (vec![0u32], Vec::new());
                for a in 0..=m {
                    for b in 0..=m {
                        let mut taken = 0;
                        for &i in &order {
                            if cap.is_some_and(|c| taken >= c) {
                                break;
                            }
                            let (px, py) = (rx[i as usize], ry[i as usize]);
                            if a < m && b < m && px >= cx[a] && py >= cy[b] {
                                entries.push(i);
                                taken += 1;
                            }
                        }
                        offsets.push(entries.len() as u32);
                    }
                }
                RankCell { xs: cx, ys: cy, offsets, entries }
            })
            .collect();
        let low = LowTier { cut: lc, cells };
        let slow = Dominance3::new((0..n).map(|i| (lifted[i], i as u32)).collect());
        TopKDominance { pts, zr, rank, xs, ys, t1, t2, high, low, slow }
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    pub fn levels(&self) -> (usize, usize) {
        (self.t1, self.t2)
    }

    fn ranked(&self, i: u32) -> Ranked {
        let p = &self.pts[i as usize];
        Ranked { weight: p.weight, id: p.id }
    }

    /// Tier a query with this `k` is routed to.
    pub fn tier_for(&self, k: usize) -> TopKTier {
        if k == 0 || self.pts.is_empty() {
            TopKTier::Empty
        } else if k <= self.t2 {
            TopKTier::Low
        } else if k <= self.t1 {
            TopKTier::High
        } else {
            TopKTier::Slow
        }
    }

    /// The `k` heaviest dominators of `q`, heaviest first.
    pub fn query_ranked(&self, q: Point2, k: usize, c: &mut Counters) -> Vec<Ranked> {
        let tier = self.tier_for(k);
        if tier == TopKTier::Empty {
            return Vec::new();
        }
        let qr = [count_lt(&self.xs, q[0], c) as i64, count_lt(&self.ys, q[1], c) as i64];
        let dominated = |i: u32| {
            let r = self.rank[i as usize];
            r[0] >= qr[0] && r[1] >= qr[1]
        };
        let mut out = Vec::with_capacity(k.min(self.pts.len()));
        match tier {
            TopKTier::Low => {
                let cell = self.low.cut.find_any(qr[0], qr[1], c).expect("domain covers every query");
                let rc = &self.low.cells[cell as usize];
                let m = rc.xs.len();
                let (a, b) = (count_lt(&rc.xs, qr[0], c), count_lt(&rc.ys, qr[1], c));
                let slot = a * (m + 1) + b;
                for &i in rc.entries[rc.offsets[slot] as usize..rc.offsets[slot + 1] as usize].iter().take(k) {
                    c.cells_scanned += 1;
                    out.push(self.ranked(i));
                }
            }
            TopKTier::High => {
                let cell = self.high.cut.find_any(qr[0], qr[1], c).expect("domain covers every query");
                for &i in &self.high.lists[cell as usize] {
                    c.cells_scanned += 1;
                    if dominated(i) {
                        out.push(self.ranked(i));
                        if out.len() == k {
                            break;
                        }
                    }
                }
            }
            _ => {
                // Lower the weight-rank threshold geometrically until k answers appear.
                let n = self.pts.len() as i64;
                let mut step = k as i64;
                let mut hits = Vec::new();
                loop {
                    let z = (n - step).max(0);
                    hits.clear();
                    self.slow.query([qr[0], qr[1], z], c, &mut |i| hits.push(i));
                    if hits.len() >= k || z == 0 {
                        break;
                    }
                    step *= 2;
                }
                hits.sort_unstable_by_key(|&i| std::cmp::Reverse(self.zr[i as usize]));
                out.extend(hits.into_iter().take(k).map(|i| self.ranked(i)));
            }
        }
        c.output_size += out.len() as u64;
        out
    }

    pub fn query(&self, q: Point2, k: usize, c: &mut Counters) -> Vec<u32> {
        self.query_ranked(q, k, c).into_iter().map(|r| r.id).collect()
    }

    pub fn stats(&self) -> BuildStats {
        let n = self.pts.len() as u64;
        let b = bits_for(2 * n.max(1));
        let lists: u64 = self.high.lists.iter().map(|l| l.len() as u64).sum::<u64>()
            + self.low.cells.iter().map(|c| c.entries.len() as u64 + 2 * c.xs.len() as u64).sum::<u64>();
        BuildStats {
            bits_stored: n * 4 * b + lists * b + self.slow.bits_stored(b, b),
            piece_incidences: n,
            depth: 0,
            nodes: (self.high.cut.len() + self.low.cut.len()) as u64,
        }
    }
}

pub fn build_topk_dominance(points: Vec<WPoint>, params: &ModelParams) -> TopKDominance {
    TopKDominance::new(points, params)
}

pub fn query_topk_dominance(t: &TopKDominance, q: Point2, k: usize, c: &mut Counters) -> Vec<u32> {
    t.query(q, k, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::brute_topk_dominance;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn points(n: usize, u: i64, w: i64, seed: u64) -> Vec<WPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n as u32)
            .map(|id| WPoint { id, xy: [rng.gen_range(0..u), rng.gen_range(0..u)], weight: rng.gen_range(0..w) })
            .collect()
    }

    #[test]
    fn every_tier_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [1, 2, 17, 300, 2000] {
            let pts = points(n, n as i64, 8, n as u64);
            let t = TopKDominance::new(pts.clone(), &ModelParams::default());
            let (t1, t2) = t.levels();
            let mut c = Counters::new();
            for _ in 0..200 {
                let q = [rng.gen_range(-1..=n as i64), rng.gen_range(-1..=n as i64)];
                for k in [0, 1, t2, t2 + 1, t1, t1 + 1, n] {
                    assert_eq!(t.query(q, k, &mut c), brute_topk_dominance(&pts, q, k), "n={n} k={k} q={q:?}");
                }
            }
        }
    }

    #[test]
    fn capped_rank_cells() {
        let pts = points(500, 100, 5, 3);
        let p = ModelParams::default();
        assert!(TopKDominance::with_rank_cap(pts.clone(), &p, 0).is_err());
        let t2 = p.t2(500);
        let t = TopKDominance::with_rank_cap(pts.clone(), &p, t2).unwrap();
        let mut c = Counters::new();
        for x in 0..50 {
            let q = [2 * x, 100 - 2 * x];
            for k in 1..=t2 {
                assert_eq!(t.query(q, k, &mut c), brute_topk_dominance(&pts, q, k));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn prop_matches_oracle(seed in any::<u64>(), n in 1usize..150, k in 0usize..20, t1 in 1usize..6, t2 in 1usize..4) {
            let pts = points(n, 12, 4, seed);
            let p = ModelParams { t1: Some(t1.max(t2)), t2: Some(t2), ..Default::default() };
            let t = TopKDominance::new(pts.clone(), &p);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
            let mut c = Counters::new();
            for _ in 0..20 {
                let q = [rng.gen_range(-1..13), rng.gen_range(-1..13)];
                prop_assert_eq!(t.query(q, k, &mut c), brute_topk_dominance(&pts, q, k));
            }
        }
    }
}
