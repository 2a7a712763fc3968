//! 6-sided and z-restricted stabbing.

mod itz;
mod zr4;
mod zr6;

pub use itz::{build_stab6, query_stab6, IntervalTreeZ};
pub use zr4::{zr4_items, Zr4Fast, Zr4Item, Zr4Shape, Zr4Slow, Zr4Trace};
pub use zr6::{zr6_rects, CoverGrid, SlowZr6, Zr6, Zr6Enc, Zr6Trace, ZRect};
