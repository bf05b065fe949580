//! Numerical toolkit for key distillation from bipartite states with shields:
//! operator algebra, block-structured states, private states, recurrence
//! distillation, privacy squeezing and the standard example families.

pub mod blockstate;
pub mod distill;
pub mod error;
pub mod families;
pub mod format;
pub mod opalg;
pub mod privstate;
pub mod random;
pub mod squeeze;

pub use error::{Error, Result};
