//! Supporting functions of compact convex bodies, Minkowski algebra,
//! inclusion certificates, and exhaustions of open convex regions.

mod body;
pub mod directions;
mod inclusion;
pub mod lp;
mod region;

pub use body::{minkowski_sum, support_function, BodyKind, ConvexBody, FlatBody, MAX_DIM};
pub use inclusion::{contains, InclusionReport, InclusionVerdict, InclusionWitness, INCLUSION_TOL};
pub use lp::{lp_maximize, LpSolution};
pub use region::{exhaust, OpenConvexRegion, RegionKind};
