//! Goal-POMDP belief-space planning with lazily evaluated belief transitions.

// `!(x > 0.0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod belief;
pub mod bench;
pub mod domains;
pub mod estimators;
pub mod oracle;
pub mod solvers;
