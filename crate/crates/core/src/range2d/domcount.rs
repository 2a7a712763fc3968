use crate::counters::{bits_for, count_le, Counters};
use crate::geom::Point2;

const BLOCK_WORDS: usize = 8;

/// Bit vector with constant-time rank.
#[derive(Debug, Clone, Default)]
struct RankBits {
    words: Vec<u64>,
    blocks: Vec<u32>,
}

impl RankBits {
    fn from_bits(bits: &[bool]) -> Self {
        let mut words = vec![0u64; bits.len().div_ceil(64)];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        let mut blocks = Vec::with_capacity(words.len() / BLOCK_WORDS + 1);
        let mut acc = 0u32;
        for (i, w) in words.iter().enumerate() {
            if i % BLOCK_WORDS == 0 {
                blocks.push(acc);
            }
            acc += w.count_ones();
        }
        blocks.push(acc);
        RankBits { words, blocks }
    }

    /// Ones in positions `[0, i)`.
    fn rank1(&self, i: usize) -> usize {
        let w = i / 64;
        let b = w / BLOCK_WORDS;
        let mut r = self.blocks[b] as usize;
        for k in b * BLOCK_WORDS..w {
            r += self.words[k].count_ones() as usize;
        }
        if !i.is_multiple_of(64) {
            r += (self.words[w] & ((1u64 << (i % 64)) - 1)).count_ones() as usize;
        }
        r
    }

    fn rank0(&self, i: usize) -> usize {
        i - self.rank1(i)
    }

    fn bits(&self) -> u64 {
        self.words.len() as u64 * 64 + self.blocks.len() as u64 * 32
    }
}

/// Static 2-d dominance counter: `count(a, b) = |{p : p.x <= a, p.y <= b}|`.
///
/// Points are kept in x order; their y ranks form a wavelet matrix, one rank
/// bit vector per bit of the y rank. That is the compressed range tree layout:
/// every level holds one bit per point, and a query descends one level per
/// step.
#[derive(Debug, Clone, Default)]
pub struct DomCount2 {
    xs: Vec<i64>,
    ys: Vec<i64>,
    levels: Vec<RankBits>,
    zeros: Vec<usize>,
}

impl DomCount2 {
    pub fn new(points: &[Point2]) -> Self {
        let mut pts = points.to_vec();
        pts.sort_unstable();
        let xs: Vec<i64> = pts.iter().map(|p| p[0]).collect();
        let mut ys: Vec<i64> = pts.iter().map(|p| p[1]).collect();
        ys.sort_unstable();
        ys.dedup();
        let mut vals: Vec<u64> =
            pts.iter().map(|p| ys.binary_search(&p[1]).unwrap() as u64).collect();
        let depth = bits_for(ys.len() as u64) as usize;
        let mut levels = Vec::with_capacity(depth);
        let mut zeros = Vec::with_capacity(depth);
        for l in 0..depth {
            let shift = depth - 1 - l;
            let bits: Vec<bool> = vals.iter().map(|v| (v >> shift) & 1 == 1).collect();
            let (mut lo, hi): (Vec<u64>, Vec<u64>) = vals.iter().partition(|v| (*v >> shift) & 1 == 0);
            zeros.push(lo.len());
            lo.extend(hi);
            vals = lo;
            levels.push(RankBits::from_bits(&bits));
        }
        DomCount2 { xs, ys, levels, zeros }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Number of points among the first `i` (in x order) with y rank `< v`.
    fn count_less(&self, i: usize, v: usize, c: &mut Counters) -> usize {
        if v >= self.ys.len() {
            return i;
        }
        let depth = self.levels.len();
        let (mut s, mut e, mut res) = (0usize, i, 0usize);
        for l in 0..depth {
            c.predecessor_steps += 1;
            let lv = &self.levels[l];
            let (s0, e0) = (lv.rank0(s), lv.rank0(e));
            if (v >> (depth - 1 - l)) & 1 == 1 {
                res += e0 - s0;
                s = self.zeros[l] + (s - s0);
                e = self.zeros[l] + (e - e0);
            } else {
                s = s0;
                e = e0;
            }
        }
        res
    }

    pub fn count(&self, a: i64, b: i64, c: &mut Counters) -> usize {
        if self.xs.is_empty() {
            return 0;
        }
        let i = count_le(&self.xs, a, c);
        if i == 0 {
            return 0;
        }
        let v = count_le(&self.ys, b, c);
        self.count_less(i, v, c)
    }

    /// Bits of the bit vectors and rank directories plus the two coordinate
    /// arrays at `coord_bits` bits per entry.
    pub fn bits_stored(&self, coord_bits: u64) -> u64 {
        self.levels.iter().map(RankBits::bits).sum::<u64>()
            + (self.xs.len() + self.ys.len()) as u64 * coord_bits
    }
}

/// Free-function form of [`DomCount2::count`].
pub fn dominance_count(d: &DomCount2, a: i64, b: i64, c: &mut Counters) -> usize {
    d.count(a, b, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(pts: &[Point2], a: i64, b: i64) -> usize {
        pts.iter().filter(|p| p[0] <= a && p[1] <= b).count()
    }

    #[test]
    fn extremes() {
        let pts = vec![[3, 4], [1, 9], [7, 7], [3, 4]];
        let d = DomCount2::new(&pts);
        let mut c = Counters::new();
        assert_eq!(d.count(i64::MAX / 8, i64::MAX / 8, &mut c), 4);
        assert_eq!(d.count(-1, 100, &mut c), 0);
        assert_eq!(DomCount2::new(&[]).count(5, 5, &mut c), 0);
    }

    #[test]
    fn random_against_brute_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1usize, 2, 5, 100, 777] {
            let pts: Vec<Point2> =
                (0..n).map(|_| [rng.gen_range(0..60), rng.gen_range(0..60)]).collect();
            let d = DomCount2::new(&pts);
            let mut c = Counters::new();
            for _ in 0..100 {
                let (a, b) = (rng.gen_range(-2..63), rng.gen_range(-2..63));
                assert_eq!(d.count(a, b, &mut c), brute(&pts, a, b), "n={n} a={a} b={b}");
            }
        }
    }

    #[test]
    fn bits_are_n_log_n_scale() {
        let pts: Vec<Point2> = (0..4096).map(|i| [i, (i * 7919) % 4096]).collect();
        let d = DomCount2::new(&pts);
        let b = d.bits_stored(13);
        // 12 levels of 4096 bits plus directories and coordinates.
        assert!(b >= 12 * 4096 && b <= 12 * 4096 * 2 + 2 * 4096 * 13, "{b}");
    }
}
