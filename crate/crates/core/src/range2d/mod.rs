//! Planar building blocks: dominance counting, rectangle stabbing counts and
//! point location among disjoint rectangles.

mod domcount;
mod pl2;
mod stabcount;

pub use domcount::{dominance_count, DomCount2};
pub use pl2::{build_pl2, query_pl2, LabeledRect, Pl2};
pub use stabcount::{query_stab_count, query_stab_empty, StabCount2};
