//! Top-k dominance and top-k rectangle stabbing.

mod dominance;
mod stab;
mod stream;

pub use dominance::{build_topk_dominance, query_topk_dominance, TopKDominance, TopKTier};
pub use stab::{build_topk_stab, query_topk_stab, SlowTopStab, TopKStab, TopStabEnc};
pub use stream::{MergeStream, PausedStream, RankedStream, WeightStream};
