#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod coherence;
pub mod em2d;
pub mod error;
pub mod io;
pub mod scan;
pub mod solver;
pub mod specfun;
pub mod validate;

pub use em2d::{Dir2, GreenValue, PolMode, Polarizability, Vec2};
pub use error::{Error, Result};
pub use solver::{Medium2D, Rect, Scatterer, SourceField, SystemFactorization};
