//! 3-d dominance reporting and shallow cuttings.

mod cutting;
mod dominance3;

pub use cutting::{
    build_cutting2, build_cutting2_in, build_cutting3, build_cutting3_in, footprint_regions, ShallowCutting2,
    ShallowCutting3, UNBOUNDED2,
};
pub use dominance3::{build_dominance3, query_dominance3, Dominance3};
