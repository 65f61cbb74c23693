//! Dead leaves models in one and two dimensions: perfect simulation,
//! forward evolution and closed-form moment formulas.
// `!(a < b)` is used on purpose so that NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closedform;
pub mod dlm1d;
pub mod dlm2d;
pub mod dlrm;
pub mod engine;
pub mod geom;
pub mod grains;
pub mod io;
pub mod noodle;
pub mod quad;
pub mod rng;
pub mod stats;
