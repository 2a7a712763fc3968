//! Operation counters. Queries take a caller-owned `Counters`; builds report a
//! `BuildStats`.

use std::ops::AddAssign;

/// Per-query operation counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    /// Probes made by binary searches (predecessor / rank lookups).
    pub predecessor_steps: u64,
    /// Recursion nodes entered.
    pub nodes_visited: u64,
    /// Dominance sub-queries issued.
    pub dominance_queries: u64,
    /// Stored items inspected by linear scans.
    pub cells_scanned: u64,
    /// Heap pushes and pops.
    pub heap_ops: u64,
    /// Items reported.
    pub output_size: u64,
}

impl Counters {
    pub fn new() -> Self {
        Self::default()
    }

    /// Total counted comparisons: search probes, scanned items and one unit
    /// per node entered.
    pub fn comparisons(&self) -> u64 {
        self.predecessor_steps + self.cells_scanned + self.nodes_visited
    }
}

impl AddAssign for Counters {
    fn add_assign(&mut self, o: Self) {
        self.predecessor_steps += o.predecessor_steps;
        self.nodes_visited += o.nodes_visited;
        self.dominance_queries += o.dominance_queries;
        self.cells_scanned += o.cells_scanned;
        self.heap_ops += o.heap_ops;
        self.output_size += o.output_size;
    }
}

/// Build-time space and shape metrics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    /// Bits of payload under the compact-encoding accounting of each structure.
    pub bits_stored: u64,
    /// (item, node) pairs: how many times an input item or a piece of it
    /// is handed to a recursion node.
    pub piece_incidences: u64,
    /// Deepest recursion level (root = 0).
    pub depth: u32,
    /// Number of recursion nodes.
    pub nodes: u64,
}

impl AddAssign for BuildStats {
    fn add_assign(&mut self, o: Self) {
        self.bits_stored += o.bits_stored;
        self.piece_incidences += o.piece_incidences;
        self.depth = self.depth.max(o.depth);
        self.nodes += o.nodes;
    }
}

/// Bits needed to store one value out of `n` possibilities (at least 1).
pub fn bits_for(n: u64) -> u64 {
    if n <= 2 {
        1
    } else {
        64 - (n - 1).leading_zeros() as u64
    }
}

/// Number of elements of the sorted slice that are `<= q`, counting every probe.
pub fn count_le(sorted: &[i64], q: i64, c: &mut Counters) -> usize {
    partition_counted(sorted, c, |&v| v <= q)
}

/// Number of elements of the sorted slice that are `< q`, counting every probe.
pub fn count_lt(sorted: &[i64], q: i64, c: &mut Counters) -> usize {
    partition_counted(sorted, c, |&v| v < q)
}

/// `slice::partition_point` that charges one predecessor step per probe.
pub fn partition_counted<T>(s: &[T], c: &mut Counters, pred: impl Fn(&T) -> bool) -> usize {
    let (mut lo, mut hi) = (0usize, s.len());
    while lo < hi {
        c.predecessor_steps += 1;
        let mid = lo + (hi - lo) / 2;
        if pred(&s[mid]) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_for_small_values() {
        assert_eq!(bits_for(0), 1);
        assert_eq!(bits_for(2), 1);
        assert_eq!(bits_for(3), 2);
        assert_eq!(bits_for(4), 2);
        assert_eq!(bits_for(5), 3);
        assert_eq!(bits_for(1 << 20), 20);
        assert_eq!(bits_for((1 << 20) + 1), 21);
    }

    #[test]
    fn counted_search_matches_std() {
        let v = vec![1, 3, 3, 5, 9, 9, 9, 12];
        for q in -1..14 {
            let mut c = Counters::new();
            assert_eq!(count_le(&v, q, &mut c), v.partition_point(|&x| x <= q));
            assert_eq!(count_lt(&v, q, &mut c), v.partition_point(|&x| x < q));
            assert!(c.predecessor_steps <= 8);
        }
        let mut c = Counters::new();
        assert_eq!(count_le(&[], 3, &mut c), 0);
        assert_eq!(c.predecessor_steps, 0);
    }
}
