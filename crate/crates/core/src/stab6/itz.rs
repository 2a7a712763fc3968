//! General 6-sided stabbing by an interval tree of fan-out `f` over z.
//!
//! A box lives at the lowest node whose children split its z-range. The
//! children it spans completely form a z-restricted 6-sided instance over
//! child indices; the child holding its lower end stores a 5-sided piece open
//! upward, the child holding its upper end one open downward.

use crate::centered::Rect2;
use crate::counters::{BuildStats, Counters};
use crate::error::{Error, Result};
use crate::geom::{AxisCompress, Box3, Interval, Point3};
use crate::params::ModelParams;
use crate::stab5::Stab5;

use super::zr6::Zr6;

struct Part {
    x: Interval,
    y: Interval,
    id: u32,
    /// Mapped z bound carried by the piece.
    z: i64,
}

struct ZNode {
    a: i64,
    /// Width of one child range; 0 for a single-slab node.
    width: i64,
    mid: Option<Zr6>,
    /// Pieces `z <= bound`.
    down: Option<Stab5>,
    /// Pieces `z >= bound`, stored negated.
    up: Option<Stab5>,
    kids: Vec<Option<u32>>,
}

/// The fan-out-`f` z-interval tree.
pub struct IntervalTreeZ {
    zc: AxisCompress,
    f: usize,
    nodes: Vec<ZNode>,
    root: Option<u32>,
    stats: BuildStats,
    len: usize,
}

fn stab5_of(parts: &[Part], negate: bool, params: ModelParams) -> Result<Option<Stab5>> {
    if parts.is_empty() {
        return Ok(None);
    }
    let bs: Vec<Box3> = parts
        .iter()
        .map(|p| Box3::new(p.id, p.x, p.y, Interval::up_to(if negate { -p.z } else { p.z })))
        .collect();
    Ok(Some(Stab5::new(&bs, params)?))
}

impl IntervalTreeZ {
    /// Fan-out `params.z()`.
    pub fn new(boxes: &[Box3], params: ModelParams) -> Result<Self> {
        Self::with_fanout(boxes, params.z(), params)
    }

    pub fn with_fanout(boxes: &[Box3], f: usize, params: ModelParams) -> Result<Self> {
        params.validate()?;
        if f < 2 {
            return Err(Error::InvalidParams("fan-out must be at least 2".into()));
        }
        let mut items = Vec::with_capacity(boxes.len());
        for b in boxes {
            b.validate()?;
            if b.sidedness() != 6 {
                return Err(Error::WrongShape { id: b.id, reason: "expected a fully bounded box".into() });
            }
            items.push(*b);
        }
        let zc = AxisCompress::from_intervals(items.iter().map(|b| b.axes[2].closed()));
        let mut t = IntervalTreeZ { zc, f, nodes: Vec::new(), root: None, stats: BuildStats::default(), len: items.len() };
        let inside: Vec<(Box3, i64, i64)> = items
            .iter()
            .map(|b| {
                let (z1, z2) = b.axes[2].closed();
                (*b, t.zc.lo(z1), t.zc.hi(z2))
            })
            .collect();
        if !inside.is_empty() {
            let u = t.zc.universe();
            t.root = Some(t.build(0, u, inside, Vec::new(), Vec::new(), params, 0)?);
        }
        Ok(t)
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        &mut self,
        a: i64,
        b: i64,
        inside: Vec<(Box3, i64, i64)>,
        down: Vec<Part>,
        mut up: Vec<Part>,
        params: ModelParams,
        depth: u32,
    ) -> Result<u32> {
        self.stats.nodes += 1;
        self.stats.depth = self.stats.depth.max(depth);
        self.stats.piece_incidences += (inside.len() + down.len() + up.len()) as u64;
        let part = |bx: &Box3, z: i64| Part { x: bx.axes[0], y: bx.axes[1], id: bx.id, z };
        if b - a == 1 {
            up.extend(inside.iter().map(|(bx, _, _)| part(bx, a)));
            let node = ZNode {
                a,
                width: 0,
                mid: None,
                down: stab5_of(&down, false, params)?,
                up: stab5_of(&up, true, params)?,
                kids: Vec::new(),
            };
            return Ok(self.push(node));
        }
        let f = self.f as i64;
        let width = (b - a + f - 1) / f;
        let nk = ((b - a + width - 1) / width) as usize;
        let mut kin: Vec<Vec<(Box3, i64, i64)>> = (0..nk).map(|_| Vec::new()).collect();
        let mut kdown: Vec<Vec<Part>> = (0..nk).map(|_| Vec::new()).collect();
        let mut kup: Vec<Vec<Part>> = (0..nk).map(|_| Vec::new()).collect();
        let mut mid = Vec::new();
        for (bx, z1, z2) in inside {
            let (k, l) = (((z1 - a) / width) as usize, ((z2 - a) / width) as usize);
            if k == l {
                kin[k].push((bx, z1, z2));
                continue;
            }
            if k + 1 < l {
                let (lo, hi) = bx.corners();
                mid.push(Rect2 { lo: [lo[0], lo[1]], hi: [hi[0], hi[1]], id: bx.id, payload: [k as u32 + 1, l as u32 - 1] });
            }
            kup[k].push(part(&bx, z1));
            kdown[l].push(part(&bx, z2));
        }
        let mid = if mid.is_empty() { None } else { Some(Zr6::from_rects(mid, nk, params)?) };
        let node = ZNode {
            a,
            width,
            mid,
            down: stab5_of(&down, false, params)?,
            up: stab5_of(&up, true, params)?,
            kids: vec![None; nk],
        };
        let me = self.push(node);
        for (k, ((i, d), u)) in kin.into_iter().zip(kdown).zip(kup).enumerate() {
            if i.is_empty() && d.is_empty() && u.is_empty() {
                continue;
            }
            let ka = a + k as i64 * width;
            let kid = self.build(ka, (ka + width).min(b), i, d, u, params, depth + 1)?;
            self.nodes[me as usize].kids[k] = Some(kid);
        }
        Ok(me)
    }

    fn push(&mut self, n: ZNode) -> u32 {
        for s in [&n.down, &n.up].into_iter().flatten() {
            self.stats.bits_stored += s.stats().bits_stored;
        }
        if let Some(m) = &n.mid {
            self.stats.bits_stored += m.stats().bits_stored;
        }
        self.nodes.push(n);
        self.nodes.len() as u32 - 1
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn fanout(&self) -> usize {
        self.f
    }

    /// Tree shape plus the summed piece bits of all nested structures.
    pub fn stats(&self) -> BuildStats {
        self.stats
    }

    pub fn query(&self, q: Point3, c: &mut Counters) -> Result<Vec<u32>> {
        let z = self.zc.locate(q[2], c);
        let mut out = Vec::new();
        let mut k = self.root;
        while let Some(i) = k {
            let n = &self.nodes[i as usize];
            c.nodes_visited += 1;
            if let Some(s) = &n.down {
                out.extend(s.query([q[0], q[1], z], c)?);
            }
            if let Some(s) = &n.up {
                out.extend(s.query([q[0], q[1], -z], c)?);
            }
            if n.width == 0 {
                break;
            }
            let j = ((z - n.a) / n.width) as usize;
            if let Some(m) = &n.mid {
                out.extend(m.query([q[0], q[1], j as i64], c)?);
            }
            k = n.kids[j];
        }
        out.sort_unstable();
        Ok(out)
    }
}

pub fn build_stab6(boxes: &[Box3], params: ModelParams) -> Result<IntervalTreeZ> {
    IntervalTreeZ::new(boxes, params)
}

pub fn query_stab6(s: &IntervalTreeZ, q: Point3, c: &mut Counters) -> Result<Vec<u32>> {
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
                let (x, y, z) = (iv(), iv(), iv());
                Box3::new(id, x, y, z)
            })
            .collect()
    }

    #[test]
    fn matches_oracle_across_fanouts() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for f in [2, 4, 8] {
            for n in [1, 3, 50, 700] {
                let bs = boxes(n, 2 * n as i64 + 2, (n * f) as u64);
                let p = ModelParams { leaf_threshold: 8, ..Default::default() };
                let s = IntervalTreeZ::with_fanout(&bs, f, p).unwrap();
                let mut c = Counters::new();
                for _ in 0..200 {
                    let q = [0; 3].map(|_| rng.gen_range(-1..=2 * n as i64 + 2));
                    assert_eq!(s.query(q, &mut c).unwrap(), brute_stab(&bs, q), "f={f} n={n} q={q:?}");
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn prop_matches_oracle(seed in any::<u64>(), n in 1usize..120, f in 2usize..6) {
            let bs = boxes(n, 16, seed);
            let s = IntervalTreeZ::with_fanout(&bs, f, ModelParams { leaf_threshold: 4, ..Default::default() }).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
            let mut c = Counters::new();
            for _ in 0..30 {
                let q = [0; 3].map(|_| rng.gen_range(-1..18));
                prop_assert_eq!(s.query(q, &mut c).unwrap(), brute_stab(&bs, q));
            }
        }
    }
}
