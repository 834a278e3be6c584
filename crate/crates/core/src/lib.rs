//! Construction of Gibbs-Markov inducing schemes for multidimensional
//! piecewise-expanding maps.
//!
//! Sets are rasterized on a uniform grid; a map is a finite list of branches
//! with explicit inverses and Jacobians; measures are pushed forward as
//! weighted families of standard pairs which are iterated, chopped and
//! stopped on the elements of a fixed partition.

pub mod error;
pub mod expr;
pub mod geometry;
pub mod dynamics;
pub mod families;
pub mod partition;
pub mod inducing;
pub mod io;
pub mod cli;

pub use error::{Error, Result};
