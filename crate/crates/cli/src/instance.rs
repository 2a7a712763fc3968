//! Seeded instance generators and the box / query text formats.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use orthostab::geom::{Box3, ExtBound, Interval, Point3};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    PlDisjoint,
    PlSubdivisionPruned,
    /// Disjoint rectangles in the xy-plane, z unbounded.
    Pl2Disjoint,
    Stab5,
    Stab6,
    Zr4,
    Zr6,
    TopkDom,
    TopkStab,
    Dom3,
}

impl Kind {
    pub const ALL: [Kind; 10] = [
        Kind::PlDisjoint,
        Kind::PlSubdivisionPruned,
        Kind::Pl2Disjoint,
        Kind::Stab5,
        Kind::Stab6,
        Kind::Zr4,
        Kind::Zr6,
        Kind::TopkDom,
        Kind::TopkStab,
        Kind::Dom3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::PlDisjoint => "pl-disjoint",
            Kind::PlSubdivisionPruned => "pl-subdivision-pruned",
            Kind::Pl2Disjoint => "pl2-disjoint",
            Kind::Stab5 => "stab5",
            Kind::Stab6 => "stab6",
            Kind::Zr4 => "zr4",
            Kind::Zr6 => "zr6",
            Kind::TopkDom => "topk-dom",
            Kind::TopkStab => "topk-stab",
            Kind::Dom3 => "dom3",
        }
    }

    pub fn weighted(self) -> bool {
        matches!(self, Kind::TopkDom | Kind::TopkStab)
    }

    /// Kinds whose z coordinates live in the tiny universe `[fanout]`.
    pub fn z_restricted(self) -> bool {
        matches!(self, Kind::Zr4 | Kind::Zr6)
    }
}

impl FromStr for Kind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| HarnessError::Usage(format!("unknown instance kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub kind: Kind,
    pub n: usize,
    pub universe: i64,
    pub seed: u64,
    /// z-universe of the z-restricted kinds.
    pub fanout: usize,
    pub boxes: Vec<Box3>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Query {
    pub q: Point3,
    pub k: Option<usize>,
}

pub fn gen(kind: Kind, n: usize, universe: i64, seed: u64, fanout: usize) -> Result<Instance, HarnessError> {
    if universe < 2 * n as i64 || universe < 2 {
        return Err(HarnessError::Usage(format!("universe {universe} must be at least max(2, 2n) = {}", 2 * n)));
    }
    if kind.z_restricted() && fanout < 1 {
        return Err(HarnessError::Usage("z-restricted kinds need fanout >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = universe;
    let boxes = match kind {
        Kind::PlDisjoint => {
            let mut cells = split_cells(n, u, 3, &mut rng);
            for c in cells.iter_mut() {
                if rng.gen_bool(0.25) {
                    let a = rng.gen_range(0..3);
                    c.1[a] = rng.gen_range(c.0[a]..=c.1[a]);
                }
            }
            boxes_from_cells(cells)
        }
        Kind::PlSubdivisionPruned => {
            let mut cells = split_cells(n + n / 3, u, 3, &mut rng);
            cells.shuffle(&mut rng);
            cells.truncate(n);
            boxes_from_cells(cells)
        }
        Kind::Pl2Disjoint => {
            let mut cells = split_cells(n, u, 2, &mut rng);
            for c in cells.iter_mut() {
                if rng.gen_bool(0.25) {
                    let a = rng.gen_range(0..2);
                    c.1[a] = rng.gen_range(c.0[a]..=c.1[a]);
                }
            }
            let mut boxes = boxes_from_cells(cells);
            for b in &mut boxes {
                b.axes[2] = Interval::ALL;
            }
            boxes
        }
        _ => (0..n as u32).map(|id| sample_box(kind, id, u, fanout as i64, &mut rng)).collect(),
    };
    Ok(Instance { kind, n, universe, seed, fanout, boxes })
}

/// Random splits of `[0,u)^3` along the first `dims` axes into `n` cells.
fn split_cells(n: usize, u: i64, dims: usize, rng: &mut ChaCha8Rng) -> Vec<(Point3, Point3)> {
    let mut cells = Vec::with_capacity(n);
    if n == 0 {
        return cells;
    }
    cells.push(([0; 3], [u - 1; 3]));
    while cells.len() < n {
        let i = rng.gen_range(0..cells.len());
        let (lo, hi) = cells[i];
        let axes: Vec<usize> = (0..dims).filter(|&a| hi[a] > lo[a]).collect();
        let Some(&a) = axes.choose(rng) else { continue };
        let cut = rng.gen_range(lo[a]..hi[a]);
        let (mut h1, mut l2) = (hi, lo);
        h1[a] = cut;
        l2[a] = cut + 1;
        cells[i] = (lo, h1);
        cells.push((l2, hi));
    }
    cells
}

fn boxes_from_cells(cells: Vec<(Point3, Point3)>) -> Vec<Box3> {
    cells.into_iter().enumerate().map(|(i, (lo, hi))| Box3::closed(i as u32, lo, hi)).collect()
}

fn span(rng: &mut ChaCha8Rng, u: i64) -> (i64, i64) {
    let a = rng.gen_range(0..u);
    let b = rng.gen_range(0..u);
    (a.min(b), a.max(b))
}

fn sample_box(kind: Kind, id: u32, u: i64, f: i64, rng: &mut ChaCha8Rng) -> Box3 {
    let (x1, x2) = span(rng, u);
    let (y1, y2) = span(rng, u);
    let weight_range = (u / 2).max(4);
    match kind {
        Kind::Stab5 => Box3::new(id, Interval::new(x1, x2), Interval::new(y1, y2), Interval::up_to(rng.gen_range(0..u))),
        Kind::Stab6 => {
            let (z1, z2) = span(rng, u);
            Box3::closed(id, [x1, y1, z1], [x2, y2, z2])
        }
        Kind::Zr4 => {
            let (i, j) = span(rng, f);
            Box3::new(id, Interval::up_to(x2), Interval::up_to(y2), Interval::new(i, j))
        }
        Kind::Zr6 => {
            let (i, j) = span(rng, f);
            Box3::closed(id, [x1, y1, i], [x2, y2, j])
        }
        Kind::TopkDom => Box3::new(id, Interval::up_to(x2), Interval::up_to(y2), Interval::ALL)
            .with_weight(rng.gen_range(0..weight_range)),
        Kind::TopkStab => Box3::new(id, Interval::new(x1, x2), Interval::new(y1, y2), Interval::ALL)
            .with_weight(rng.gen_range(0..weight_range)),
        Kind::Dom3 => {
            let z = rng.gen_range(0..u);
            Box3::new(id, Interval::up_to(x2), Interval::up_to(y2), Interval::up_to(z))
        }
        Kind::PlDisjoint | Kind::PlSubdivisionPruned | Kind::Pl2Disjoint => unreachable!("cell kinds are generated by splitting"),
    }
}

/// Random queries: half uniform over the universe (one step beyond on each
/// side), half next to a box endpoint. Each carries a `k` when `ks` is given.
pub fn gen_queries(inst: &Instance, count: usize, seed: u64, ks: Option<&[usize]>) -> Vec<Query> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let u = inst.universe;
    let zu = if inst.kind.z_restricted() { inst.fanout as i64 } else { u };
    (0..count)
        .map(|_| {
            let mut q = [rng.gen_range(-1..=u), rng.gen_range(-1..=u), rng.gen_range(-1..=zu)];
            if !inst.boxes.is_empty() && rng.gen_bool(0.5) {
                let b = inst.boxes[rng.gen_range(0..inst.boxes.len())];
                for a in 0..3 {
                    let e = if rng.gen_bool(0.5) { b.axes[a].lo } else { b.axes[a].hi };
                    if let ExtBound::Finite(v) = e {
                        q[a] = v + rng.gen_range(-1..=1);
                    }
                }
            }
            if inst.kind.z_restricted() {
                q[2] = q[2].clamp(0, zu - 1);
            }
            Query { q, k: ks.map(|ks| ks[rng.gen_range(0..ks.len())]) }
        })
        .collect()
}

fn fmt_bound(e: ExtBound) -> String {
    match e {
        ExtBound::Finite(v) => v.to_string(),
        _ => "*".to_string(),
    }
}

/// Box file text. A leading `#` line carries the generator metadata.
pub fn write_boxes(inst: &Instance) -> String {
    let weighted = inst.kind.weighted();
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# kind={} universe={} seed={} fanout={}",
        inst.kind.name(),
        inst.universe,
        inst.seed,
        inst.fanout
    );
    let _ = writeln!(s, "dim=3 n={} weighted={}", inst.boxes.len(), weighted as u8);
    for b in &inst.boxes {
        let mut parts = Vec::with_capacity(7);
        for iv in &b.axes {
            parts.push(fmt_bound(iv.lo));
            parts.push(fmt_bound(iv.hi));
        }
        if weighted {
            parts.push(b.weight.unwrap_or(0).to_string());
        }
        let _ = writeln!(s, "{}", parts.join(" "));
    }
    s
}

fn parse_err(line: usize, msg: impl Into<String>) -> HarnessError {
    HarnessError::Parse { line, msg: msg.into() }
}

fn parse_bound(tok: &str, lower: bool, line: usize) -> Result<ExtBound, HarnessError> {
    if tok == "*" {
        return Ok(if lower { ExtBound::NegInf } else { ExtBound::PosInf });
    }
    tok.parse::<i64>().map(ExtBound::Finite).map_err(|e| parse_err(line, format!("{tok:?}: {e}")))
}

pub fn read_boxes(text: &str) -> Result<Instance, HarnessError> {
    let mut kind = None;
    let (mut universe, mut seed, mut fanout) = (None, 0u64, 2usize);
    let mut header: Option<(usize, bool)> = None;
    let mut boxes = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        if let Some(meta) = l.strip_prefix('#') {
            for kv in meta.split_whitespace() {
                match kv.split_once('=') {
                    Some(("kind", v)) => kind = Some(v.parse::<Kind>()?),
                    Some(("universe", v)) => universe = v.parse().ok(),
                    Some(("seed", v)) => seed = v.parse().unwrap_or(0),
                    Some(("fanout", v)) => fanout = v.parse().unwrap_or(2),
                    _ => {}
                }
            }
            continue;
        }
        let Some((n, weighted)) = header else {
            let mut n = None;
            let mut w = None;
            for kv in l.split_whitespace() {
                match kv.split_once('=') {
                    Some(("dim", "3")) => {}
                    Some(("dim", d)) => return Err(parse_err(line, format!("unsupported dim {d}"))),
                    Some(("n", v)) => n = v.parse::<usize>().ok(),
                    Some(("weighted", v)) => w = Some(v == "1"),
                    _ => return Err(parse_err(line, format!("bad header token {kv:?}"))),
                }
            }
            match (n, w) {
                (Some(n), Some(w)) => header = Some((n, w)),
                _ => return Err(parse_err(line, "header needs n= and weighted=")),
            }
            continue;
        };
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 6 + weighted as usize {
            return Err(parse_err(line, format!("expected {} fields, got {}", 6 + weighted as usize, toks.len())));
        }
        let mut axes = [Interval::ALL; 3];
        for a in 0..3 {
            axes[a] = Interval { lo: parse_bound(toks[2 * a], true, line)?, hi: parse_bound(toks[2 * a + 1], false, line)? };
        }
        let mut b = Box3::new(boxes.len() as u32, axes[0], axes[1], axes[2]);
        if weighted {
            b = b.with_weight(toks[6].parse().map_err(|e| parse_err(line, format!("weight: {e}")))?);
        }
        b.validate().map_err(|e| parse_err(line, e.to_string()))?;
        boxes.push(b);
        if boxes.len() > n {
            return Err(parse_err(line, format!("more than the {n} boxes announced")));
        }
    }
    let (n, _) = header.ok_or_else(|| parse_err(0, "missing header"))?;
    if boxes.len() != n {
        return Err(parse_err(0, format!("header announces {n} boxes, found {}", boxes.len())));
    }
    let universe = universe.unwrap_or_else(|| {
        boxes
            .iter()
            .flat_map(|b| b.axes.iter().flat_map(|iv| [iv.lo.finite(), iv.hi.finite()]))
            .flatten()
            .max()
            .map_or(2, |m| m + 1)
            .max(2)
    });
    let kind = kind.unwrap_or(if boxes.iter().any(|b| b.weight.is_some()) { Kind::TopkStab } else { Kind::Stab6 });
    Ok(Instance { kind, n, universe, seed, fanout, boxes })
}

pub fn write_queries(qs: &[Query]) -> String {
    let mut s = String::new();
    for q in qs {
        match q.k {
            Some(k) => writeln!(s, "{} {} {} {}", q.q[0], q.q[1], q.q[2], k),
            None => writeln!(s, "{} {} {}", q.q[0], q.q[1], q.q[2]),
        }
        .expect("writing to a String");
    }
    s
}

pub fn read_queries(text: &str) -> Result<Vec<Query>, HarnessError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = l.split_whitespace().collect();
        if !(3..=4).contains(&toks.len()) {
            return Err(parse_err(i + 1, "expected `x y z [k]`"));
        }
        let num = |t: &str| t.parse::<i64>().map_err(|e| parse_err(i + 1, format!("{t:?}: {e}")));
        let q = [num(toks[0])?, num(toks[1])?, num(toks[2])?];
        let k = match toks.get(3) {
            Some(t) => Some(t.parse::<usize>().map_err(|e| parse_err(i + 1, format!("{t:?}: {e}")))?),
            None => None,
        };
        out.push(Query { q, k });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn overlap(a: &Box3, b: &Box3) -> bool {
        let (alo, ahi) = a.corners();
        let (blo, bhi) = b.corners();
        (0..3).all(|k| alo[k] <= bhi[k] && blo[k] <= ahi[k])
    }

    #[test]
    fn empty_and_deterministic() {
        let e = gen(Kind::Stab5, 0, 2, 1, 2).unwrap();
        assert!(e.boxes.is_empty());
        for k in Kind::ALL {
            let a = gen(k, 50, 200, 9, 4).unwrap();
            let b = gen(k, 50, 200, 9, 4).unwrap();
            assert_eq!(write_boxes(&a), write_boxes(&b));
            assert_eq!(a.boxes.len(), 50, "{}", k.name());
        }
        assert!(gen(Kind::Stab6, 10, 5, 0, 2).is_err());
    }

    #[test]
    fn cell_kinds_are_disjoint() {
        for k in [Kind::PlDisjoint, Kind::PlSubdivisionPruned, Kind::Pl2Disjoint] {
            let inst = gen(k, 500, 1000, 3, 2).unwrap();
            for i in 0..inst.boxes.len() {
                for j in i + 1..inst.boxes.len() {
                    assert!(!overlap(&inst.boxes[i], &inst.boxes[j]));
                }
            }
        }
    }

    #[test]
    fn files_round_trip() {
        for k in Kind::ALL {
            let inst = gen(k, 30, 100, 5, 8).unwrap();
            let back = read_boxes(&write_boxes(&inst)).unwrap();
            assert_eq!(back, inst);
            let qs = gen_queries(&inst, 20, 1, k.weighted().then_some(&[0usize, 3][..]));
            assert_eq!(read_queries(&write_queries(&qs)).unwrap(), qs);
        }
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(read_boxes("dim=3 n=1 weighted=0\n1 0 0 0 0 0\n").is_err());
        assert!(read_boxes("dim=3 n=2 weighted=0\n0 1 0 1 0 1\n").is_err());
        assert!(read_boxes("dim=2 n=0 weighted=0\n").is_err());
        assert!(read_queries("1 2\n").is_err());
        let b = read_boxes("dim=3 n=1 weighted=1\n* 4 0 1 * * 7\n").unwrap();
        assert_eq!(b.boxes[0].weight, Some(7));
        assert_eq!(b.boxes[0].axes[0], Interval::up_to(4));
    }
}
