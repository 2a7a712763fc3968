use super::domcount::DomCount2;
use crate::counters::{bits_for, count_le, count_lt, Counters};
use crate::geom::{Box2, Point2};

/// Rectangle stabbing counter by inclusion–exclusion over the four ways a
/// rectangle can miss a point.
///
/// With `A = {x1 > qx}`, `B = {x2 < qx}`, `C = {y1 > qy}`, `D = {y2 < qy}` the
/// stabbed count is `n - |A ∪ B ∪ C ∪ D|`; `A ∩ B` and `C ∩ D` are empty, so
/// four 1-d ranks and four 2-d dominance counts suffice.
#[derive(Debug, Clone, Default)]
pub struct StabCount2 {
    n: usize,
    x1s: Vec<i64>,
    x2s: Vec<i64>,
    y1s: Vec<i64>,
    y2s: Vec<i64>,
    /// Dominance counters over (x1,y1), (x1,y2), (x2,y1), (x2,y2).
    dom: [DomCount2; 4],
}

impl StabCount2 {
    /// Rectangles given as closed `(lo, hi)` corners; sentinels allowed.
    pub fn new(rects: &[(Point2, Point2)]) -> Self {
        let n = rects.len();
        if n == 0 {
            return StabCount2::default();
        }
        let sorted = |f: &dyn Fn(&(Point2, Point2)) -> i64| {
            let mut v: Vec<i64> = rects.iter().map(f).collect();
            v.sort_unstable();
            v
        };
        let pts = |f: &dyn Fn(&(Point2, Point2)) -> Point2| {
            DomCount2::new(&rects.iter().map(f).collect::<Vec<_>>())
        };
        StabCount2 {
            n,
            x1s: sorted(&|r| r.0[0]),
            x2s: sorted(&|r| r.1[0]),
            y1s: sorted(&|r| r.0[1]),
            y2s: sorted(&|r| r.1[1]),
            dom: [
                pts(&|r| [r.0[0], r.0[1]]),
                pts(&|r| [r.0[0], r.1[1]]),
                pts(&|r| [r.1[0], r.0[1]]),
                pts(&|r| [r.1[0], r.1[1]]),
            ],
        }
    }

    pub fn from_boxes(rects: &[Box2]) -> Self {
        Self::new(&rects.iter().map(Box2::corners).collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn count(&self, q: Point2, c: &mut Counters) -> usize {
        if self.n == 0 {
            return 0;
        }
        let n = self.n as i64;
        let (qx, qy) = (q[0], q[1]);
        let x1_le = count_le(&self.x1s, qx, c) as i64;
        let y1_le = count_le(&self.y1s, qy, c) as i64;
        let x2_lt = count_lt(&self.x2s, qx, c) as i64;
        let y2_lt = count_lt(&self.y2s, qy, c) as i64;
        let a = n - x1_le;
        let b = x2_lt;
        let cc = n - y1_le;
        let d = y2_lt;
        c.dominance_queries += 4;
        let ac = n - x1_le - y1_le + self.dom[0].count(qx, qy, c) as i64;
        let ad = y2_lt - self.dom[1].count(qx, qy - 1, c) as i64;
        let bc = x2_lt - self.dom[2].count(qx - 1, qy, c) as i64;
        let bd = self.dom[3].count(qx - 1, qy - 1, c) as i64;
        let missed = a + b + cc + d - ac - ad - bc - bd;
        (n - missed) as usize
    }

    pub fn is_empty_at(&self, q: Point2, c: &mut Counters) -> bool {
        self.count(q, c) == 0
    }

    pub fn bits_stored(&self, coord_bits: u64) -> u64 {
        if self.n == 0 {
            return 0;
        }
        4 * self.n as u64 * coord_bits
            + self.dom.iter().map(|d| d.bits_stored(coord_bits)).sum::<u64>()
            + bits_for(self.n as u64 + 1)
    }
}

/// Number of rectangles containing `q`.
pub fn query_stab_count(s: &StabCount2, q: Point2, c: &mut Counters) -> usize {
    s.count(q, c)
}

/// Whether no rectangle contains `q`.
pub fn query_stab_empty(s: &StabCount2, q: Point2, c: &mut Counters) -> bool {
    s.is_empty_at(q, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Interval, NEG_INF, POS_INF};
    use crate::oracle::brute_count2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn small_cases() {
        let mut c = Counters::new();
        let s = StabCount2::new(&[]);
        assert_eq!(s.count([0, 0], &mut c), 0);
        assert!(s.is_empty_at([0, 0], &mut c));
        let s = StabCount2::new(&[([0, 0], [1, 1]), ([0, 0], [1, 1])]);
        assert_eq!(s.count([0, 0], &mut c), 2);
        assert!(!s.is_empty_at([0, 0], &mut c));
        assert_eq!(s.count([2, 0], &mut c), 0);
    }

    #[test]
    fn random_against_brute_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut rects = Vec::new();
        for id in 0..300u32 {
            let mut iv = || {
                let (a, b) = (rng.gen_range(0..80), rng.gen_range(0..80));
                match rng.gen_range(0..6) {
                    0 => Interval::up_to(a.max(b)),
                    1 => Interval::from(a.min(b)),
                    _ => Interval::new(a.min(b), a.max(b)),
                }
            };
            rects.push(Box2::new(id, iv(), iv()));
        }
        let s = StabCount2::from_boxes(&rects);
        let mut c = Counters::new();
        for _ in 0..500 {
            let q = [rng.gen_range(-2..83), rng.gen_range(-2..83)];
            assert_eq!(s.count(q, &mut c), brute_count2(&rects, q));
        }
        let full = StabCount2::new(&[([NEG_INF, NEG_INF], [POS_INF, POS_INF])]);
        assert_eq!(full.count([3, -7], &mut c), 1);
    }
}
