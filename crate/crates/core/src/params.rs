//! Model parameters and the threshold formulas derived from them.

use crate::error::{Error, Result};

/// Grid side rule of the stabbing grid trees:
/// `g = max(2, round(scale * sqrt(m / max(1, log2(m)^log_power))))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRule {
    pub scale: f64,
    pub log_power: u32,
}

impl GridRule {
    /// Asymptotic rule with the polylog divisor. At desk sizes the divisor
    /// exceeds `m` and the grid collapses to 2×2.
    pub const ASYMPTOTIC: GridRule = GridRule { scale: 2.0, log_power: 4 };
    /// Default rule: the same square-root split without the polylog divisor.
    pub const DESK: GridRule = GridRule { scale: 2.0, log_power: 0 };

    pub fn side(&self, m: usize) -> usize {
        if m < 2 {
            return 2;
        }
        let m = m as f64;
        let div = m.log2().powi(self.log_power as i32).max(1.0);
        ((self.scale * (m / div).sqrt()).round() as usize).max(2)
    }
}

/// Symbolic machine and threshold parameters shared by all structures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Symbolic word size `W`; only enters threshold formulas.
    pub word_bits: u32,
    /// Fan-out exponent: `Z = ceil(W^eps)`.
    pub eps: f64,
    /// Recursions stop once a node holds at most this many items.
    pub leaf_threshold: usize,
    /// Replaces `Z` when set (interval-tree fan-out and z-universe size).
    pub fanout: Option<usize>,
    /// Replaces the zr4 cutting level `t0` when set.
    pub t0: Option<usize>,
    /// Replaces the top-k cutting levels when set.
    pub t1: Option<usize>,
    pub t2: Option<usize>,
    pub grid: GridRule,
    /// Replaces the `Top(c)` length `ceil(log2(|S_v|)^3)` when set.
    pub top_len: Option<usize>,
    /// Replaces the `Cover(c, z)` length `ceil(log2 |S_v|)` when set.
    pub cover_len: Option<usize>,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            word_bits: 64,
            eps: 0.1,
            leaf_threshold: 32,
            fanout: None,
            t0: None,
            t1: None,
            t2: None,
            grid: GridRule::DESK,
            top_len: None,
            cover_len: None,
        }
    }
}

fn log2(n: usize) -> f64 {
    (n.max(1) as f64).log2()
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if self.word_bits < 2 {
            return bad("word size must be at least 2");
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad("eps must lie in (0, 1)");
        }
        if self.leaf_threshold == 0 {
            return bad("leaf threshold must be positive");
        }
        if self.fanout.is_some_and(|f| !(2..=64).contains(&f)) {
            return bad("fan-out must lie in [2, 64]");
        }
        for (name, v) in [
            ("t0", self.t0),
            ("t1", self.t1),
            ("t2", self.t2),
            ("top_len", self.top_len),
            ("cover_len", self.cover_len),
        ] {
            if v == Some(0) {
                return Err(Error::InvalidParams(format!("{name} must be positive")));
            }
        }
        if self.grid.scale.is_nan() || self.grid.scale <= 0.0 {
            return bad("grid scale must be positive");
        }
        Ok(())
    }

    /// Fan-out `Z = ceil(W^eps)`, at least 2.
    pub fn z(&self) -> usize {
        self.fanout
            .unwrap_or_else(|| ((self.word_bits as f64).powf(self.eps) - 1e-9).ceil() as usize)
            .max(2)
    }

    /// zr4 cutting level `ceil(log2 W * log2 log2 n)`, at least 1.
    pub fn t0(&self, n: usize) -> usize {
        self.t0.unwrap_or_else(|| {
            let ll = log2(n).max(1.0).log2();
            ((self.word_bits as f64).log2() * ll).ceil().max(1.0) as usize
        })
    }

    /// Upper top-k cutting level `ceil(log2 n)`, at least 1.
    pub fn t1(&self, n: usize) -> usize {
        self.t1.unwrap_or_else(|| (log2(n).ceil() as usize).max(1))
    }

    /// Lower top-k cutting level `ceil(log2(n)^(1/3))`, at least 1.
    pub fn t2(&self, n: usize) -> usize {
        self.t2.unwrap_or_else(|| ((log2(n).cbrt() - 1e-9).ceil() as usize).max(1))
    }

    pub fn grid_side(&self, m: usize) -> usize {
        self.grid.side(m)
    }

    /// `Top(c)` list length for a node storing `s` pieces.
    pub fn top_len(&self, s: usize) -> usize {
        self.top_len.unwrap_or_else(|| (log2(s).powi(3).ceil() as usize).max(1))
    }

    /// `Cover(c, z)` list length for a node storing `s` pieces.
    pub fn cover_len(&self, s: usize) -> usize {
        self.cover_len.unwrap_or_else(|| (log2(s).ceil() as usize).max(1))
    }
}
