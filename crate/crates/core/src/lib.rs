//! Exact computational machinery for the sl2 weight system on Jacobi
//! diagrams: the Riordan tree basis of invariant tensors, rank and kernel
//! analysis of the homotopy weight system, symmetric-group characters, and
//! the q-deformed graphical calculus with its Jones-Wenzl modification.
//!
//! All arithmetic is exact: arbitrary-precision rationals, Laurent
//! polynomials in `q`, and fraction-free sparse elimination.

pub mod exactmath;
pub mod tensor;
pub mod diagram;
pub mod weight;
pub mod rewrite;
pub mod riordan;
pub mod analysis;
