//! Weight-ordered output streams.

use std::collections::BinaryHeap;

use crate::counters::Counters;
use crate::geom::{Point2, Ranked};

use super::dominance::TopKDominance;

/// A source of items in non-increasing [`Ranked`] order.
pub trait RankedStream {
    fn next_ranked(&mut self, c: &mut Counters) -> Option<Ranked>;
}

/// Dominators of one query point, heaviest first, produced in batches of
/// doubling size. Pausing keeps only the query and the emitted count.
pub struct WeightStream<'a> {
    src: &'a TopKDominance,
    q: Point2,
    emitted: usize,
    asked: usize,
    buf: Vec<Ranked>,
    pos: usize,
    done: bool,
}

/// A stream detached from its source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PausedStream {
    pub q: Point2,
    pub emitted: usize,
}

impl<'a> WeightStream<'a> {
    pub fn new(src: &'a TopKDominance, q: Point2) -> Self {
        WeightStream { src, q, emitted: 0, asked: 0, buf: Vec::new(), pos: 0, done: false }
    }

    pub fn emitted(&self) -> usize {
        self.emitted
    }

    /// The next item without consuming it.
    pub fn peek(&mut self, c: &mut Counters) -> Option<Ranked> {
        if self.pos == self.buf.len() && !self.done {
            self.refill(c);
        }
        self.buf.get(self.pos).copied()
    }

    pub fn pause(self) -> PausedStream {
        PausedStream { q: self.q, emitted: self.emitted }
    }

    fn refill(&mut self, c: &mut Counters) {
        let want = (2 * self.asked).max(self.emitted + 1).max(2);
        let mut got = self.src.query_ranked(self.q, want, c);
        self.done = got.len() < want;
        self.asked = want;
        self.buf = got.split_off(self.emitted.min(got.len()));
        self.pos = 0;
    }
}

impl PausedStream {
    pub fn resume(self, src: &TopKDominance) -> WeightStream<'_> {
        WeightStream { emitted: self.emitted, ..WeightStream::new(src, self.q) }
    }
}

impl RankedStream for WeightStream<'_> {
    fn next_ranked(&mut self, c: &mut Counters) -> Option<Ranked> {
        let r = self.peek(c)?;
        self.pos += 1;
        self.emitted += 1;
        Some(r)
    }
}

impl Iterator for WeightStream<'_> {
    type Item = Ranked;

    fn next(&mut self) -> Option<Ranked> {
        self.next_ranked(&mut Counters::new())
    }
}

/// Heap merge of several streams.
pub struct MergeStream<'a> {
    parts: Vec<Box<dyn RankedStream + 'a>>,
    heap: BinaryHeap<(Ranked, usize)>,
    primed: bool,
}

impl<'a> MergeStream<'a> {
    pub fn new(parts: Vec<Box<dyn RankedStream + 'a>>) -> Self {
        MergeStream { parts, heap: BinaryHeap::new(), primed: false }
    }
}

impl RankedStream for MergeStream<'_> {
    fn next_ranked(&mut self, c: &mut Counters) -> Option<Ranked> {
        if !self.primed {
            self.primed = true;
            for i in 0..self.parts.len() {
                if let Some(r) = self.parts[i].next_ranked(c) {
                    c.heap_ops += 1;
                    self.heap.push((r, i));
                }
            }
        }
        let (r, i) = self.heap.pop()?;
        c.heap_ops += 1;
        if let Some(nx) = self.parts[i].next_ranked(c) {
            c.heap_ops += 1;
            self.heap.push((nx, i));
        }
        Some(r)
    }
}
