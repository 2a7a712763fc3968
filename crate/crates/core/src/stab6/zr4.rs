//! z-restricted 4-sided stabbing: boxes `(-inf, x] x (-inf, y] x [i, j]` with
//! `i, j` in `[0, f)`.

use crate::counters::{count_le, count_lt, BuildStats, Counters};
use crate::domcut::{build_cutting2_in, Dominance3};
use crate::error::{Error, Result};
use crate::geom::{Box3, ExtBound, Point2, Point3};
use crate::params::ModelParams;

/// One input box: upper corner `p` and z-range `[i, j]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Zr4Item {
    pub p: Point2,
    pub i: u32,
    pub j: u32,
    pub id: u32,
}

impl Zr4Item {
    pub fn contains(&self, q: Point3) -> bool {
        self.p[0] >= q[0] && self.p[1] >= q[1] && (self.i as i64) <= q[2] && q[2] <= self.j as i64
    }
}

/// Checks the canonical shape and the z-universe `[0, f)`.
pub fn zr4_items(boxes: &[Box3], f: usize) -> Result<Vec<Zr4Item>> {
    boxes
        .iter()
        .map(|b| {
            b.validate()?;
            let wrong = |reason: &str| Error::WrongShape { id: b.id, reason: reason.into() };
            for a in 0..2 {
                if b.axes[a].lo != ExtBound::NegInf || !b.axes[a].hi.is_finite() {
                    return Err(wrong("x and y must be (-inf, v]"));
                }
            }
            let (i, j) = match (b.axes[2].lo.finite(), b.axes[2].hi.finite()) {
                (Some(i), Some(j)) if i >= 0 && (j as u64) < f as u64 => (i as u32, j as u32),
                _ => return Err(wrong("z must be [i, j] inside [0, f)")),
            };
            let (_, hi) = b.corners();
            Ok(Zr4Item { p: [hi[0], hi[1]], i, j, id: b.id })
        })
        .collect()
}

#[derive(Debug, Clone)]
struct ZNode {
    mid: u32,
    /// Reports `i <= qz` (used when `qz <= mid`).
    low: Dominance3,
    /// Reports `j >= qz` (used when `qz > mid`).
    high: Dominance3,
    kids: [Option<u32>; 2],
}

/// Binary interval tree over `[0, f)` with two 3-d dominance structures per
/// node: O(log f) dominance queries.
#[derive(Debug, Clone)]
pub struct Zr4Slow {
    nodes: Vec<ZNode>,
    root: Option<u32>,
    len: usize,
}

impl Zr4Slow {
    pub fn new(items: &[Zr4Item], f: usize) -> Self {
        let mut t = Zr4Slow { nodes: Vec::new(), root: None, len: items.len() };
        t.root = t.build(items.to_vec(), 0, f.max(1) as u32 - 1);
        t
    }

    fn build(&mut self, items: Vec<Zr4Item>, a: u32, b: u32) -> Option<u32> {
        if items.is_empty() {
            return None;
        }
        let mid = a + (b - a) / 2;
        let (mut here, mut left, mut right) = (Vec::new(), Vec::new(), Vec::new());
        for it in items {
            if it.j < mid {
                left.push(it);
            } else if it.i > mid {
                right.push(it);
            } else {
                here.push(it);
            }
        }
        let low = Dominance3::with_flips(
            here.iter().map(|it| ([it.p[0], it.p[1], it.i as i64], it.id)).collect(),
            [false, false, true],
        );
        let high = Dominance3::new(here.iter().map(|it| ([it.p[0], it.p[1], it.j as i64], it.id)).collect());
        let l = if mid > a { self.build(left, a, mid - 1) } else { None };
        let r = if mid < b { self.build(right, mid + 1, b) } else { None };
        self.nodes.push(ZNode { mid, low, high, kids: [l, r] });
        Some(self.nodes.len() as u32 - 1)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn query(&self, q: Point3, c: &mut Counters, out: &mut Vec<u32>) {
        let mut k = self.root;
        while let Some(i) = k {
            let n = &self.nodes[i as usize];
            c.nodes_visited += 1;
            let mid = n.mid as i64;
            if q[2] <= mid {
                n.low.query(q, c, &mut |id| out.push(id));
                k = if q[2] < mid { n.kids[0] } else { None };
            } else {
                n.high.query(q, c, &mut |id| out.push(id));
                k = n.kids[1];
            }
        }
    }

    pub fn bits_stored(&self, coord_bits: u64) -> u64 {
        self.nodes
            .iter()
            .map(|n| n.low.bits_stored(coord_bits, coord_bits) + n.high.bits_stored(coord_bits, coord_bits))
            .sum()
    }
}

/// What one [`Zr4Fast`] query did.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Zr4Trace {
    pub fallback: bool,
    /// Matches found in the group scan, before any fallback.
    pub scan_hits: usize,
}

/// Build-side facts of a [`Zr4Fast`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Zr4Shape {
    pub t0: usize,
    pub z: usize,
    pub corners: usize,
    pub groups: usize,
    /// Sum of the group candidate-set sizes.
    pub candidates: usize,
}

/// Shallow-cutting groups with a scan-then-fallback query.
///
/// Every class `[i, j]` gets a `t0`-shallow cutting of its corners in global
/// tie-broken rank space. The union of all cutting corners, sorted by x, is
/// cut into groups of `Z^2` corners. A group's candidate set is the union of
/// the conflict lists of its corners plus, per class, the last corner left of
/// the group. A query scans its group's candidates; `t0` or more matches mean
/// the scan may be incomplete and the slow structure answers.
#[derive(Debug, Clone)]
pub struct Zr4Fast {
    items: Vec<Zr4Item>,
    xs: Vec<i64>,
    group_x: Vec<i64>,
    offsets: Vec<u32>,
    cands: Vec<u32>,
    slow: Zr4Slow,
    shape: Zr4Shape,
    f: usize,
}

impl Zr4Fast {
    pub fn new(items: Vec<Zr4Item>, f: usize, params: &ModelParams) -> Self {
        let n = items.len();
        let t0 = params.t0(n);
        let z = params.z();
        let slow = Zr4Slow::new(&items, f);
        let mut xs: Vec<i64> = items.iter().map(|it| it.p[0]).collect();
        xs.sort_unstable();
        let mut shape = Zr4Shape { t0, z, ..Default::default() };
        if n <= z * z * t0 {
            shape.groups = 1;
            shape.candidates = n;
            return Zr4Fast {
                items,
                xs,
                group_x: vec![0],
                offsets: vec![0, n as u32],
                cands: (0..n as u32).collect(),
                slow,
                shape,
                f,
            };
        }
        let rank = |axis: usize| {
            let mut ord: Vec<u32> = (0..n as u32).collect();
            ord.sort_unstable_by_key(|&k| (items[k as usize].p[axis], items[k as usize].id));
            let mut r = vec![0i64; n];
            for (pos, k) in ord.into_iter().enumerate() {
                r[k as usize] = pos as i64;
            }
            r
        };
        let (rx, ry) = (rank(0), rank(1));
        let mut classes: std::collections::BTreeMap<(u32, u32), Vec<u32>> = Default::default();
        for (k, it) in items.iter().enumerate() {
            classes.entry((it.i, it.j)).or_default().push(k as u32);
        }
        // Per class: corners ascending by x with conflict lists in item indices.
        let mut class_corners: Vec<Vec<(i64, Vec<u32>)>> = Vec::new();
        for members in classes.values() {
            let pts: Vec<Point2> = members.iter().map(|&k| [rx[k as usize], ry[k as usize]]).collect();
            let cut = build_cutting2_in(&pts, t0, [0, 0]);
            let mut cs: Vec<(i64, Vec<u32>)> = cut
                .corners
                .iter()
                .zip(cut.conflicts)
                .map(|(c, cl)| (c[0], cl.into_iter().map(|i| members[i as usize]).collect()))
                .collect();
            cs.sort_by_key(|c| c.0);
            class_corners.push(cs);
        }
        let mut all: Vec<(i64, u32, u32)> = class_corners
            .iter()
            .enumerate()
            .flat_map(|(ci, cs)| cs.iter().enumerate().map(move |(k, c)| (c.0, ci as u32, k as u32)))
            .collect();
        all.sort_unstable();
        shape.corners = all.len();
        let per_group = z * z;
        let (mut group_x, mut offsets, mut cands) = (Vec::new(), vec![0u32], Vec::new());
        let mut s = 0;
        while s < all.len() {
            let mut e = (s + per_group).min(all.len());
            while e < all.len() && all[e].0 == all[e - 1].0 {
                e += 1;
            }
            let gx = if s == 0 { 0 } else { all[s].0 };
            let mut set: Vec<u32> = Vec::new();
            for &(_, ci, k) in &all[s..e] {
                set.extend_from_slice(&class_corners[ci as usize][k as usize].1);
            }
            for cs in &class_corners {
                let p = cs.partition_point(|c| c.0 <= gx);
                if p > 0 {
                    set.extend_from_slice(&cs[p - 1].1);
                }
            }
            set.sort_unstable();
            set.dedup();
            group_x.push(gx);
            cands.extend(set);
            offsets.push(cands.len() as u32);
            s = e;
        }
        shape.groups = group_x.len();
        shape.candidates = cands.len();
        Zr4Fast { items, xs, group_x, offsets, cands, slow, shape, f }
    }

    pub fn from_boxes(boxes: &[Box3], f: usize, params: &ModelParams) -> Result<Self> {
        Ok(Self::new(zr4_items(boxes, f)?, f, params))
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn shape(&self) -> Zr4Shape {
        self.shape
    }

    pub fn fanout(&self) -> usize {
        self.f
    }

    pub fn query(&self, q: Point3, c: &mut Counters, out: &mut Vec<u32>) -> Zr4Trace {
        let mut trace = Zr4Trace::default();
        if self.items.is_empty() {
            return trace;
        }
        let qx = count_lt(&self.xs, q[0], c) as i64;
        let g = count_le(&self.group_x, qx, c).max(1) - 1;
        let start = out.len();
        for &k in &self.cands[self.offsets[g] as usize..self.offsets[g + 1] as usize] {
            c.cells_scanned += 1;
            let it = &self.items[k as usize];
            if it.contains(q) {
                out.push(it.id);
                trace.scan_hits += 1;
            }
        }
        if trace.scan_hits >= self.shape.t0 {
            trace.fallback = true;
            out.truncate(start);
            self.slow.query(q, c, out);
        }
        trace
    }

    pub fn stats(&self, coord_bits: u64) -> BuildStats {
        let n = self.items.len() as u64;
        BuildStats {
            bits_stored: n * (2 * coord_bits + 2 * crate::counters::bits_for(self.f as u64) + coord_bits)
                + self.cands.len() as u64 * crate::counters::bits_for(n.max(1))
                + self.slow.bits_stored(coord_bits),
            piece_incidences: n,
            depth: 0,
            nodes: 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn items(n: usize, u: i64, f: u32, seed: u64) -> Vec<Zr4Item> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n as u32)
            .map(|id| {
                let (a, b) = (rng.gen_range(0..f), rng.gen_range(0..f));
                Zr4Item { p: [rng.gen_range(0..u), rng.gen_range(0..u)], i: a.min(b), j: a.max(b), id }
            })
            .collect()
    }

    fn brute(items: &[Zr4Item], q: Point3) -> Vec<u32> {
        items.iter().filter(|it| it.contains(q)).map(|it| it.id).collect()
    }

    #[test]
    fn both_match_oracle_and_fallback_is_sound() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for (n, f) in [(1, 2), (10, 2), (500, 2), (3000, 4), (3000, 8), (5000, 2)] {
            let its = items(n, 2 * n as i64, f, n as u64);
            let p = ModelParams { fanout: Some(f as usize), ..Default::default() };
            let fast = Zr4Fast::new(its.clone(), f as usize, &p);
            let slow = Zr4Slow::new(&its, f as usize);
            let sh = fast.shape();
            assert!(sh.candidates <= 16 * n.max(sh.z * sh.z * sh.t0));
            let mut c = Counters::new();
            for _ in 0..400 {
                let q = [rng.gen_range(-1..=2 * n as i64), rng.gen_range(-1..=2 * n as i64), rng.gen_range(0..f as i64)];
                let want = brute(&its, q);
                let mut a = Vec::new();
                let t = fast.query(q, &mut c, &mut a);
                a.sort_unstable();
                assert_eq!(a, want, "n={n} q={q:?}");
                assert!(!t.fallback || want.len() >= sh.t0);
                let mut b = Vec::new();
                slow.query(q, &mut c, &mut b);
                b.sort_unstable();
                assert_eq!(b, want);
            }
        }
    }

    #[test]
    fn groups_form_above_threshold() {
        let its = items(4000, 100, 2, 3);
        let fast = Zr4Fast::new(its, 2, &ModelParams::default());
        assert!(fast.shape().groups > 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn prop_fast_matches(seed in any::<u64>(), n in 1usize..400, t0 in 1usize..5) {
            let its = items(n, 20, 3, seed);
            let p = ModelParams { t0: Some(t0), fanout: Some(2), ..Default::default() };
            let fast = Zr4Fast::new(its.clone(), 3, &p);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 5);
            let mut c = Counters::new();
            for _ in 0..40 {
                let q = [rng.gen_range(-1..22), rng.gen_range(-1..22), rng.gen_range(0..3)];
                let mut a = Vec::new();
                fast.query(q, &mut c, &mut a);
                a.sort_unstable();
                prop_assert_eq!(a, brute(&its, q));
            }
        }
    }
}
