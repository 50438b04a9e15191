//! Characterization of domain relational calculus queries by minimal
//! conditional instances, built with a chase-style breadth-first search.

pub mod canon;
pub mod chase;
pub mod cinstance;
pub mod error;
pub mod eval;
pub mod query;
pub mod schema;
pub mod solver;
pub mod tree;
pub mod value;
pub mod worlds;

pub use error::{Error, Result};
