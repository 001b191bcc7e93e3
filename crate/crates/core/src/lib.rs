//! β-shifts, symmetric β-shifts and the fat baker skew product
//! `T(x, y) = (λx, βy)` for `y < 1/β`, `(λx + 1 − λ, βy − 1)` otherwise.
//!
//! The numeric modules are generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod baker;
pub mod beta_shift;
pub mod derived;
pub mod digits;
pub mod error;
pub mod real;
pub mod transversality;

pub use digits::{Digit, EPWord};
pub use error::{Error, Result};
pub use real::Real;

pub type BetaSystem = beta_shift::BetaSystem<f64>;
pub type Point = baker::Point<f64>;
pub type PointCloud = baker::PointCloud<f64>;
pub type TwoSidedWord = baker::TwoSidedWord;
