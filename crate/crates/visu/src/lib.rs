//! Semi-supervised glyph recognition toolkit.
//!
//! The crate implements a character-alignment training method at desk scale:
//!
//! - [`ndtape`]: dense `f64` matrices and a tape-based reverse-mode autodiff
//!   engine, used both as a gradient oracle and as the training engine.
//! - [`charfeat`]: paired student/teacher character features and the
//!   positive/negative index sets that drive the alignment losses.
//! - [`losses`]: the character unidirectional alignment (CUA) loss, the
//!   character contrastive (CC) loss, consistency regularization, and
//!   recognition cross-entropy, each with closed-form gradients.
//! - [`teacher`]: EMA parameter tracking, pseudo-labeling with word-level
//!   confidence, and weak/strong augmentation.
//! - [`urf`]: the eight text representation forms and their reduction to two
//!   primary forms via an aspect-ratio rule.
//! - [`ogs`]: procedural, background-free word-image generation with
//!   per-character random styles, plus PGM/TSV dataset I/O.
//! - [`recognizer`]: a small transformer-style encoder-decoder built on the
//!   tape.
//! - [`trainer`]: the mean-teacher training loop with AdamW, a one-cycle
//!   schedule, and bit-exact checkpointing.
//! - [`eval`]: word accuracy, embedding compactness statistics, and the
//!   embedding-dynamics simulator contrasting the two alignment losses.
//! - [`cli`]: the `visu` command-line entry point.
//!
//! The accompanying guide under `book/` walks through the concepts; its code
//! snippets are compiled as doc-tests via the [`book`] module.

pub mod charfeat;
pub mod charset;
pub mod cli;
pub mod eval;
pub mod image;
pub mod losses;
pub mod ndtape;
pub mod ogs;
pub mod recognizer;
pub mod teacher;
pub mod trainer;
pub mod urf;

mod book;

pub use charfeat::{AlignmentBatch, CharSlot, IndexSets};
pub use charset::Charset;
pub use image::GlyphImage;
pub use losses::{LossConfig, LossResult};
pub use ndtape::{Matrix, Tape};
pub use teacher::ParamSet;

