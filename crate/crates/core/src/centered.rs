//! Two-level centered interval tree. A rectangle lives at the highest x-node
//! whose center its x-range crosses, then at the highest y-node of that
//! node's inner tree. At a pair of nodes each coordinate condition collapses
//! to one side, so every stored rectangle becomes a point of one of four
//! orientation-keyed structures, and a query walks two root-to-leaf paths.

use crate::counters::Counters;
use crate::geom::Point2;

/// Closed 2-d rectangle carrying a payload and the id of its source box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect2<P> {
    pub lo: Point2,
    pub hi: Point2,
    pub id: u32,
    pub payload: P,
}

impl<P> Rect2<P> {
    pub fn contains(&self, q: Point2) -> bool {
        (0..2).all(|a| self.lo[a] <= q[a] && q[a] <= self.hi[a])
    }
}

/// Which one-sided condition remains per axis: `lo <= q` when set, `q <= hi`
/// otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Key {
    pub x_lo: bool,
    pub y_lo: bool,
}

impl Key {
    pub const ALL: [Key; 4] = [
        Key { x_lo: false, y_lo: false },
        Key { x_lo: false, y_lo: true },
        Key { x_lo: true, y_lo: false },
        Key { x_lo: true, y_lo: true },
    ];

    pub fn index(self) -> usize {
        2 * self.x_lo as usize + self.y_lo as usize
    }

    /// The point that dominates `query(q)` exactly when the kept conditions
    /// hold.
    pub fn point<P>(self, r: &Rect2<P>) -> Point2 {
        [if self.x_lo { -r.lo[0] } else { r.hi[0] }, if self.y_lo { -r.lo[1] } else { r.hi[1] }]
    }

    pub fn query(self, q: Point2) -> Point2 {
        [if self.x_lo { -q[0] } else { q[0] }, if self.y_lo { -q[1] } else { q[1] }]
    }
}

#[derive(Debug, Clone)]
struct YNode<S> {
    center: i64,
    parts: [Option<S>; 4],
    kids: [Option<u32>; 2],
}

#[derive(Debug, Clone)]
struct XNode {
    center: i64,
    yroot: Option<u32>,
    kids: [Option<u32>; 2],
}

/// The tree, generic over the per-pair structure `S`.
#[derive(Debug, Clone)]
pub struct Centered<S> {
    xs: Vec<XNode>,
    ys: Vec<YNode<S>>,
    root: Option<u32>,
    len: usize,
}

fn median_center<P>(rs: &[Rect2<P>], axis: usize) -> i64 {
    let mut e: Vec<i64> = rs.iter().flat_map(|r| [r.lo[axis], r.hi[axis]]).collect();
    let mid = e.len() / 2;
    *e.select_nth_unstable(mid).1
}

impl<S> Centered<S> {
    /// `make(rects, key)` builds the structure for one pair and orientation.
    pub fn new<P: Copy>(rects: Vec<Rect2<P>>, make: &mut dyn FnMut(&[Rect2<P>], Key) -> S) -> Self {
        let mut t = Centered { xs: Vec::new(), ys: Vec::new(), root: None, len: rects.len() };
        t.root = t.build_x(rects, make);
        t
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn build_x<P: Copy>(&mut self, rs: Vec<Rect2<P>>, make: &mut dyn FnMut(&[Rect2<P>], Key) -> S) -> Option<u32> {
        if rs.is_empty() {
            return None;
        }
        let c = median_center(&rs, 0);
        let (mut here, mut left, mut right) = (Vec::new(), Vec::new(), Vec::new());
        for r in rs {
            if r.hi[0] < c {
                left.push(r);
            } else if r.lo[0] > c {
                right.push(r);
            } else {
                here.push(r);
            }
        }
        let yroot = self.build_y(here, make);
        let l = self.build_x(left, make);
        let r = self.build_x(right, make);
        self.xs.push(XNode { center: c, yroot, kids: [l, r] });
        Some(self.xs.len() as u32 - 1)
    }

    fn build_y<P: Copy>(&mut self, rs: Vec<Rect2<P>>, make: &mut dyn FnMut(&[Rect2<P>], Key) -> S) -> Option<u32> {
        if rs.is_empty() {
            return None;
        }
        let c = median_center(&rs, 1);
        let (mut here, mut left, mut right) = (Vec::new(), Vec::new(), Vec::new());
        for r in rs {
            if r.hi[1] < c {
                left.push(r);
            } else if r.lo[1] > c {
                right.push(r);
            } else {
                here.push(r);
            }
        }
        let parts = Key::ALL.map(|k| Some(make(&here, k)));
        let l = self.build_y(left, make);
        let r = self.build_y(right, make);
        self.ys.push(YNode { center: c, parts, kids: [l, r] });
        Some(self.ys.len() as u32 - 1)
    }

    /// Calls `f` once per node pair on the query paths with the structure to
    /// ask and the orientation under which to ask it.
    pub fn visit<'a>(&'a self, q: Point2, c: &mut Counters, f: &mut dyn FnMut(&'a S, Key, &mut Counters)) {
        let mut xn = self.root;
        while let Some(xi) = xn {
            let x = &self.xs[xi as usize];
            c.nodes_visited += 1;
            c.predecessor_steps += 1;
            let x_lo = q[0] <= x.center;
            let mut yn = x.yroot;
            while let Some(yi) = yn {
                let y = &self.ys[yi as usize];
                c.nodes_visited += 1;
                c.predecessor_steps += 1;
                let key = Key { x_lo, y_lo: q[1] <= y.center };
                if let Some(s) = &y.parts[key.index()] {
                    f(s, key, c);
                }
                yn = step(q[1], y.center, y.kids);
            }
            xn = step(q[0], x.center, x.kids);
        }
    }

    /// Every per-pair structure, for space accounting.
    pub fn parts(&self) -> impl Iterator<Item = &S> {
        self.ys.iter().flat_map(|y| y.parts.iter().flatten())
    }

    pub fn nodes(&self) -> usize {
        self.xs.len() + self.ys.len()
    }
}

fn step(q: i64, center: i64, kids: [Option<u32>; 2]) -> Option<u32> {
    match q.cmp(&center) {
        std::cmp::Ordering::Less => kids[0],
        std::cmp::Ordering::Greater => kids[1],
        std::cmp::Ordering::Equal => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn keyed_scan_matches_containment() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let rects: Vec<Rect2<()>> = (0..400)
            .map(|id| {
                let (a, b) = (rng.gen_range(0..100), rng.gen_range(0..100));
                let (c, d) = (rng.gen_range(0..100), rng.gen_range(0..100));
                Rect2 { lo: [a.min(b), c.min(d)], hi: [a.max(b), c.max(d)], id, payload: () }
            })
            .collect();
        // Per-pair structure: keyed points, answered by a dominance scan.
        let t: Centered<Vec<(Point2, u32)>> =
            Centered::new(rects.clone(), &mut |rs, k| rs.iter().map(|r| (k.point(r), r.id)).collect());
        let mut c = Counters::new();
        for _ in 0..300 {
            let q = [rng.gen_range(-2..103), rng.gen_range(-2..103)];
            let mut got = Vec::new();
            t.visit(q, &mut c, &mut |s, k, _| {
                let kq = k.query(q);
                got.extend(s.iter().filter(|(p, _)| p[0] >= kq[0] && p[1] >= kq[1]).map(|e| e.1));
            });
            got.sort_unstable();
            let want: Vec<u32> = rects.iter().filter(|r| r.contains(q)).map(|r| r.id).collect();
            assert_eq!(got, want, "{q:?}");
        }
    }
}
