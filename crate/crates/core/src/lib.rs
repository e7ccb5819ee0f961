#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod dirichlet;
pub mod error;
pub mod g_function;
pub mod harness;
pub mod params;
pub mod quad;
pub mod runge_mollifier;
pub mod selberg_dirichlet;
pub mod special_fn;
pub mod suites;
pub mod tanh_approx;
pub mod zeta_core;

pub use error::{Error, Result};
pub use num_complex::Complex64;
