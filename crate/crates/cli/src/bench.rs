//! Per-size build and query metrics as CSV rows.

use std::io::Write;

use orthostab::ModelParams;

use crate::instance::gen;
use crate::verify::{verify, RunOptions, Structure};
use crate::HarnessError;

pub const COLUMNS: [&str; 13] = [
    "kind",
    "n",
    "universe",
    "build_ms",
    "bits_stored",
    "pred_steps_mean",
    "nodes_visited_mean",
    "dom_queries_mean",
    "cells_scanned_mean",
    "heap_ops_mean",
    "output_mean",
    "pred_steps_max",
    "nodes_visited_max",
];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub kind: String,
    pub n: usize,
    pub universe: i64,
    pub build_ms: f64,
    pub bits_stored: u64,
    pub pred_steps_mean: f64,
    pub nodes_visited_mean: f64,
    pub dom_queries_mean: f64,
    pub cells_scanned_mean: f64,
    pub heap_ops_mean: f64,
    pub output_mean: f64,
    pub pred_steps_max: u64,
    pub nodes_visited_max: u64,
}

impl BenchRow {
    pub fn record(&self) -> [String; 13] {
        let f = |v: f64| format!("{v:.3}");
        [
            self.kind.clone(),
            self.n.to_string(),
            self.universe.to_string(),
            f(self.build_ms),
            self.bits_stored.to_string(),
            f(self.pred_steps_mean),
            f(self.nodes_visited_mean),
            f(self.dom_queries_mean),
            f(self.cells_scanned_mean),
            f(self.heap_ops_mean),
            f(self.output_mean),
            self.pred_steps_max.to_string(),
            self.nodes_visited_max.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub queries: usize,
    pub seed: u64,
    pub params: ModelParams,
    /// Universe per size; `4n` when unset.
    pub universe: Option<i64>,
    /// z-universe of the z-restricted kinds.
    pub fanout: usize,
    /// Cutting level for `cut2` / `cut3`.
    pub level: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions { queries: 1000, seed: 0, params: ModelParams::default(), universe: None, fanout: 4, level: 16 }
    }
}

/// One row per size. Every query is also checked against the oracle, and a
/// mismatch aborts the run.
pub fn bench(s: Structure, sizes: &[usize], o: &BenchOptions) -> Result<Vec<BenchRow>, HarnessError> {
    if sizes.windows(2).any(|w| w[0] > w[1]) {
        return Err(HarnessError::Usage("sizes must be ascending".into()));
    }
    let run = RunOptions { queries: o.queries, seed: o.seed, params: o.params, levels: vec![o.level], ..Default::default() };
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let u = o.universe.unwrap_or(4 * n as i64).max(2);
        let inst = gen(s.default_kind(), n, u, o.seed ^ n as u64, o.fanout)?;
        let rep = verify(s, &inst, &run)?;
        if !rep.passed() {
            return Err(HarnessError::Mismatch(rep.to_string()));
        }
        let q = rep.checked.max(1) as f64;
        rows.push(BenchRow {
            kind: s.name().to_string(),
            n,
            universe: u,
            build_ms: rep.build_ms,
            bits_stored: rep.bits_stored,
            pred_steps_mean: rep.sum.predecessor_steps as f64 / q,
            nodes_visited_mean: rep.sum.nodes_visited as f64 / q,
            dom_queries_mean: rep.sum.dominance_queries as f64 / q,
            cells_scanned_mean: rep.sum.cells_scanned as f64 / q,
            heap_ops_mean: rep.sum.heap_ops as f64 / q,
            output_mean: rep.sum.output_size as f64 / q,
            pred_steps_max: rep.max.predecessor_steps,
            nodes_visited_max: rep.max.nodes_visited,
        });
    }
    Ok(rows)
}

pub fn write_csv(rows: &[BenchRow], out: impl Write) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS).map_err(csv_err)?;
    for r in rows {
        w.write_record(r.record()).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> HarnessError {
    HarnessError::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_one_row_per_size() {
        let o = BenchOptions { queries: 50, seed: 2, ..Default::default() };
        let rows = bench(Structure::Stab5, &[64, 256], &o).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], COLUMNS.join(","));
    }

    #[test]
    fn counter_columns_repeat_under_the_same_seed() {
        let o = BenchOptions { queries: 40, seed: 9, ..Default::default() };
        for s in [Structure::Pl3d, Structure::TopkStab, Structure::Cut3] {
            let strip = |mut r: BenchRow| {
                r.build_ms = 0.0;
                r
            };
            let a: Vec<BenchRow> = bench(s, &[32, 128], &o).unwrap().into_iter().map(strip).collect();
            let b: Vec<BenchRow> = bench(s, &[32, 128], &o).unwrap().into_iter().map(strip).collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn descending_sizes_are_rejected() {
        assert!(bench(Structure::Dom3, &[10, 5], &BenchOptions::default()).is_err());
    }
}
