//! Dense matrix numerics and a minimal reverse-mode automatic
//! differentiation engine.
//!
//! The tape is the independent gradient oracle for the hand-coded alignment
//! loss gradients in [`crate::losses`], and the training engine behind the
//! toy recognizer. Everything is `f64`: verifying gradients at 1e-6 relative
//! tolerance is not feasible in single precision.

mod matrix;
mod tape;

pub use matrix::Matrix;
pub use tape::{finite_diff_grad, Adjoints, NodeId, OpKind, Tape};

use thiserror::Error;

/// Errors from matrix and tape operations.
#[derive(Debug, Error)]
pub enum NdError {
    #[error("{op}: shape mismatch between {lhs:?} and {rhs:?}")]
    ShapeMismatch { op: &'static str, lhs: (usize, usize), rhs: (usize, usize) },
    #[error("{op}: data length {len} does not match {rows}x{cols}")]
    BadLength { op: &'static str, len: usize, rows: usize, cols: usize },
    #[error("{op}: domain violation: {detail}")]
    Domain { op: &'static str, detail: String },
    #[error("{op}: non-finite value ({detail})")]
    NonFinite { op: &'static str, detail: String },
    #[error("backward root must be a 1x1 scalar, got {rows}x{cols}")]
    NonScalarRoot { rows: usize, cols: usize },
    #[error("slice r{row0}..r{row1} c{col0}..c{col1} out of bounds for {rows}x{cols}")]
    SliceBounds { row0: usize, row1: usize, col0: usize, col1: usize, rows: usize, cols: usize },
    #[error("node {node} does not belong to this tape")]
    ForeignNode { node: usize },
}
