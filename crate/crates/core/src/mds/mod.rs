//! Linear algebra over GF(2^m) and the MDS (Reed–Solomon) codec every
//! construction encodes with.

mod matrix;
mod reed_solomon;

pub use matrix::{Matrix, Solution};
pub use reed_solomon::RsCode;
