//! Piecewise-expanding maps: branches, compositions, hypothesis checks and
//! the transfer operator.

mod branch;
pub mod catalog;
mod map;
mod spec;
mod transfer;
mod verify;

pub use branch::{Branch, PointMap, ScalarMap};
pub use map::{ComposedBranch, MapConstants, PiecewiseMap};
pub use spec::MapSpec;
pub use transfer::{transfer_apply, RasterDensity};
pub use verify::{complexity_sweep, estimate_complexity, verify_distortion, verify_expansion, SampleReport, SweepReport};
