//! Residue rings Z/NZ, 2x2 matrices over them, and exact rationals.

pub mod arith;
mod mat2;
mod rational;

pub use mat2::{crt_combine, element_order, mat_inverse, mat_mul, Mat2};
pub use rational::{cube_class, FactoredRational, Rational};
