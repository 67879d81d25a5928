//! Online inverse optimization: learning an agent's hidden utility
//! parameter from a stream of revealed, utility-maximizing actions.

// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bilevel;
pub mod domain;
pub mod error;
pub mod forward;
pub mod gen;
pub mod harness;
pub mod losses;
pub mod oco;
pub mod qp;
pub mod stream_io;
pub mod vecops;

pub use error::{Error, Result};
