//! Coordinates, boxes with optional sides, rank spaces and reflections.

use crate::counters::{count_le, Counters};
use crate::error::{Error, Result};

pub type Coord = i64;
pub type Point2 = [Coord; 2];
pub type Point3 = [Coord; 3];

/// Stand-in for an unbounded lower side in closed integer form.
pub const NEG_INF: Coord = i64::MIN / 4;
/// Stand-in for an unbounded upper side in closed integer form.
pub const POS_INF: Coord = i64::MAX / 4;

/// One end of an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtBound {
    NegInf,
    Finite(Coord),
    PosInf,
}

impl ExtBound {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtBound::Finite(_))
    }

    pub fn finite(self) -> Option<Coord> {
        match self {
            ExtBound::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Closed integer value with infinities replaced by the sentinels.
    pub fn closed(self) -> Coord {
        match self {
            ExtBound::NegInf => NEG_INF,
            ExtBound::Finite(v) => v,
            ExtBound::PosInf => POS_INF,
        }
    }
}

/// A closed interval whose ends may be unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: ExtBound,
    pub hi: ExtBound,
}

impl Interval {
    pub const ALL: Interval = Interval { lo: ExtBound::NegInf, hi: ExtBound::PosInf };

    pub fn new(lo: Coord, hi: Coord) -> Self {
        Interval { lo: ExtBound::Finite(lo), hi: ExtBound::Finite(hi) }
    }

    pub fn up_to(hi: Coord) -> Self {
        Interval { lo: ExtBound::NegInf, hi: ExtBound::Finite(hi) }
    }

    pub fn from(lo: Coord) -> Self {
        Interval { lo: ExtBound::Finite(lo), hi: ExtBound::PosInf }
    }

    pub fn contains(&self, q: Coord) -> bool {
        let lo_ok = match self.lo {
            ExtBound::NegInf => true,
            ExtBound::Finite(v) => v <= q,
            ExtBound::PosInf => false,
        };
        let hi_ok = match self.hi {
            ExtBound::PosInf => true,
            ExtBound::Finite(v) => q <= v,
            ExtBound::NegInf => false,
        };
        lo_ok && hi_ok
    }

    pub fn finite_sides(&self) -> u8 {
        self.lo.is_finite() as u8 + self.hi.is_finite() as u8
    }

    /// `(lo, hi)` in closed integer form.
    pub fn closed(&self) -> (Coord, Coord) {
        (self.lo.closed(), self.hi.closed())
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.lo == ExtBound::PosInf {
            return Err("+inf used as a lower bound".into());
        }
        if self.hi == ExtBound::NegInf {
            return Err("-inf used as an upper bound".into());
        }
        if let (ExtBound::Finite(a), ExtBound::Finite(b)) = (self.lo, self.hi) {
            if a > b {
                return Err(format!("lo {a} > hi {b}"));
            }
        }
        for v in [self.lo.finite(), self.hi.finite()].into_iter().flatten() {
            if v <= NEG_INF || v >= POS_INF {
                return Err(format!("coordinate {v} outside the supported range"));
            }
        }
        Ok(())
    }
}

/// Axis-aligned 3-d box with optional sides and an optional weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Box3 {
    pub id: u32,
    pub axes: [Interval; 3],
    pub weight: Option<i64>,
}

impl Box3 {
    pub fn new(id: u32, x: Interval, y: Interval, z: Interval) -> Self {
        Box3 { id, axes: [x, y, z], weight: None }
    }

    /// Fully bounded box `[lo, hi]` per axis.
    pub fn closed(id: u32, lo: Point3, hi: Point3) -> Self {
        Box3::new(
            id,
            Interval::new(lo[0], hi[0]),
            Interval::new(lo[1], hi[1]),
            Interval::new(lo[2], hi[2]),
        )
    }

    pub fn with_weight(mut self, w: i64) -> Self {
        self.weight = Some(w);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for a in &self.axes {
            a.check().map_err(|reason| Error::Malformed { id: self.id, reason })?;
        }
        Ok(())
    }

    pub fn sidedness(&self) -> u8 {
        self.axes.iter().map(Interval::finite_sides).sum()
    }

    pub fn contains(&self, q: Point3) -> bool {
        (0..3).all(|a| self.axes[a].contains(q[a]))
    }

    /// Closed integer corners with sentinels for unbounded sides.
    pub fn corners(&self) -> (Point3, Point3) {
        let mut lo = [0; 3];
        let mut hi = [0; 3];
        for a in 0..3 {
            (lo[a], hi[a]) = self.axes[a].closed();
        }
        (lo, hi)
    }
}

/// Axis-aligned 2-d rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Box2 {
    pub id: u32,
    pub axes: [Interval; 2],
    pub weight: Option<i64>,
}

impl Box2 {
    pub fn new(id: u32, x: Interval, y: Interval) -> Self {
        Box2 { id, axes: [x, y], weight: None }
    }

    pub fn closed(id: u32, lo: Point2, hi: Point2) -> Self {
        Box2::new(id, Interval::new(lo[0], hi[0]), Interval::new(lo[1], hi[1]))
    }

    pub fn with_weight(mut self, w: i64) -> Self {
        self.weight = Some(w);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for a in &self.axes {
            a.check().map_err(|reason| Error::Malformed { id: self.id, reason })?;
        }
        Ok(())
    }

    pub fn contains(&self, q: Point2) -> bool {
        self.axes[0].contains(q[0]) && self.axes[1].contains(q[1])
    }

    pub fn corners(&self) -> (Point2, Point2) {
        let (x0, x1) = self.axes[0].closed();
        let (y0, y1) = self.axes[1].closed();
        ([x0, y0], [x1, y1])
    }
}

/// A 2-d point with a weight, as used by top-k dominance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WPoint {
    pub id: u32,
    pub xy: Point2,
    pub weight: i64,
}

/// Ordering key for weighted output: heavier first, then smaller id.
/// `a > b` means `a` is reported before `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ranked {
    pub weight: i64,
    pub id: u32,
}

impl Ord for Ranked {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.weight.cmp(&o.weight).then(o.id.cmp(&self.id))
    }
}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

/// Number of finite sides, validating the box first.
pub fn classify_sides(b: &Box3) -> Result<u8> {
    b.validate()?;
    Ok(b.sidedness())
}

/// Per-axis sorted distinct finite coordinates of a box set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RankSpace {
    pub axes: [Vec<Coord>; 3],
}

/// Floor rank of a raw coordinate: index of its predecessor among the stored
/// coordinates (−1 below all of them), and whether it hit a stored value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rank {
    pub floor: i64,
    pub exact: bool,
}

impl RankSpace {
    pub fn rank_of(&self, axis: usize, v: Coord) -> Option<i64> {
        self.axes[axis].binary_search(&v).ok().map(|r| r as i64)
    }

    pub fn locate(&self, q: Point3, c: &mut Counters) -> [Rank; 3] {
        let mut out = [Rank { floor: -1, exact: false }; 3];
        for a in 0..3 {
            let s = &self.axes[a];
            let k = count_le(s, q[a], c);
            out[a] = Rank { floor: k as i64 - 1, exact: k > 0 && s[k - 1] == q[a] };
        }
        out
    }

    /// Containment of a located query in a rank-space box. Exact: agrees with
    /// the raw-space test for the box this rank box came from.
    pub fn contains(b: &Box3, r: &[Rank; 3]) -> bool {
        (0..3).all(|a| {
            let iv = &b.axes[a];
            let lo_ok = match iv.lo {
                ExtBound::Finite(l) => r[a].floor >= l,
                _ => true,
            };
            let hi_ok = match iv.hi {
                ExtBound::Finite(h) => r[a].floor < h || (r[a].floor == h && r[a].exact),
                _ => true,
            };
            lo_ok && hi_ok
        })
    }
}

/// Replace every finite coordinate by its rank among the distinct finite
/// coordinates of its axis.
pub fn rank_reduce(boxes: &[Box3]) -> (RankSpace, Vec<Box3>) {
    let mut rs = RankSpace::default();
    for a in 0..3 {
        let mut v: Vec<Coord> = boxes
            .iter()
            .flat_map(|b| [b.axes[a].lo.finite(), b.axes[a].hi.finite()])
            .flatten()
            .collect();
        v.sort_unstable();
        v.dedup();
        rs.axes[a] = v;
    }
    let map = |rs: &RankSpace, a: usize, e: ExtBound| match e {
        ExtBound::Finite(v) => ExtBound::Finite(rs.rank_of(a, v).expect("stored coordinate")),
        other => other,
    };
    let out = boxes
        .iter()
        .map(|b| {
            let mut r = *b;
            for a in 0..3 {
                r.axes[a] = Interval { lo: map(&rs, a, b.axes[a].lo), hi: map(&rs, a, b.axes[a].hi) };
            }
            r
        })
        .collect();
    (rs, out)
}

/// Order-preserving compression of one axis that keeps closed-interval
/// containment exact for arbitrary integer queries.
///
/// Breakpoints are the values `lo` and `hi + 1` of the stored intervals. A
/// query maps to the number of breakpoints `<= q`; a lower bound `lo` maps to
/// `index(lo) + 1` and an upper bound `hi` to `index(hi + 1)`. Mapped values lie
/// in `[0, breakpoints]`; sentinels stay sentinels.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AxisCompress {
    breaks: Vec<Coord>,
}

impl AxisCompress {
    pub fn from_intervals(it: impl IntoIterator<Item = (Coord, Coord)>) -> Self {
        let mut breaks = Vec::new();
        for (lo, hi) in it {
            if lo != NEG_INF {
                breaks.push(lo);
            }
            if hi != POS_INF {
                breaks.push(hi + 1);
            }
        }
        breaks.sort_unstable();
        breaks.dedup();
        AxisCompress { breaks }
    }

    /// Size of the mapped universe `[0, len]`.
    pub fn universe(&self) -> Coord {
        self.breaks.len() as Coord + 1
    }

    pub fn lo(&self, lo: Coord) -> Coord {
        if lo == NEG_INF {
            return NEG_INF;
        }
        self.breaks.binary_search(&lo).expect("registered bound") as Coord + 1
    }

    pub fn hi(&self, hi: Coord) -> Coord {
        if hi == POS_INF {
            return POS_INF;
        }
        self.breaks.binary_search(&(hi + 1)).expect("registered bound") as Coord
    }

    pub fn locate(&self, q: Coord, c: &mut Counters) -> Coord {
        count_le(&self.breaks, q, c) as Coord
    }

    pub fn len(&self) -> usize {
        self.breaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.breaks.is_empty()
    }
}

/// Per-axis reflection mask: reflected axes map `c -> U-1-c`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Orientation {
    pub reflect: [bool; 3],
}

impl Orientation {
    pub const IDENTITY: Orientation = Orientation { reflect: [false; 3] };

    /// The mask sending `b` to canonical form: every half-unbounded axis open
    /// toward −∞.
    pub fn canonicalizing(b: &Box3) -> Self {
        let mut o = Orientation::IDENTITY;
        for a in 0..3 {
            o.reflect[a] = b.axes[a].lo.is_finite() && b.axes[a].hi == ExtBound::PosInf;
        }
        o
    }
}

fn reflect_bound(e: ExtBound, u: Coord) -> ExtBound {
    match e {
        ExtBound::NegInf => ExtBound::PosInf,
        ExtBound::PosInf => ExtBound::NegInf,
        ExtBound::Finite(v) => ExtBound::Finite(u - 1 - v),
    }
}

/// Reflect `b` on the axes selected by `o` within universes `u`. Every
/// reflected axis must have exactly one unbounded side.
pub fn normalize_orientation(b: &Box3, o: Orientation, u: [Coord; 3]) -> Result<Box3> {
    b.validate()?;
    let mut r = *b;
    for a in 0..3 {
        if !o.reflect[a] {
            continue;
        }
        let iv = b.axes[a];
        if iv.finite_sides() != 1 {
            return Err(Error::WrongShape {
                id: b.id,
                reason: format!("axis {a} is reflected but is not half-unbounded"),
            });
        }
        r.axes[a] = Interval { lo: reflect_bound(iv.hi, u[a]), hi: reflect_bound(iv.lo, u[a]) };
    }
    Ok(r)
}

/// Point counterpart of [`normalize_orientation`].
pub fn normalize_point(q: Point3, o: Orientation, u: [Coord; 3]) -> Point3 {
    let mut r = q;
    for a in 0..3 {
        if o.reflect[a] {
            r[a] = u[a] - 1 - q[a];
        }
    }
    r
}
