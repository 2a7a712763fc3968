//! Static structures for 3-d orthogonal point location over disjoint boxes and
//! for rectangle stabbing (5-sided, 6-sided, z-restricted and top-k), with
//! linear-scan oracles and operation counters.

pub mod centered;
pub mod counters;
pub mod domcut;
pub mod error;
pub mod geom;
pub mod gridtree;
pub mod oracle;
pub mod params;
pub mod pl3d;
pub mod range2d;
pub mod stab5;
pub mod stab6;
pub mod topk;

pub use counters::{BuildStats, Counters};
pub use error::{Error, Result};
pub use geom::{Box2, Box3, Interval, Point2, Point3, WPoint};
pub use params::ModelParams;
