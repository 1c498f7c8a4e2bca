//! Exact arithmetic in `Z[t, t^-1][u]`, 2×2 matrices over it, and the
//! word matrices `W`, `W*` of a 2-bridge knot.

mod eval;
mod matrix;
mod poly;

pub use eval::{eval_exact, eval_float_exact, eval_real, eval_unit_circle, eval_value, Evaluation};
pub use matrix::{base_matrices, entries, word_matrix, BaseMatrices, Mat2, WordEntries};
pub use poly::{BivarPoly, UPoly};
