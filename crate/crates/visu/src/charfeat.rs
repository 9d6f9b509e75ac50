//! Paired student/teacher character features and alignment index sets.
//!
//! A minibatch of words yields `B x T` character slots. Each slot carries a
//! student feature (from the strongly augmented view), a teacher reference
//! feature (from the base view), a label, a confidence score, and a validity
//! flag. Padding and end-of-sequence slots are marked invalid and take no
//! part in alignment at all.
//!
//! For each valid slot `i`, the positive set `P(i)` holds every valid slot
//! with the same label, provided slot `i`'s own confidence clears the gate;
//! a gated-out anchor has an empty positive set but remains a member of the
//! universe `I` (and therefore of other slots' negative sets).

use thiserror::Error;

use crate::ndtape::Matrix;

/// Label marker for slots that carry no character (padding). Valid slots
/// must not use it.
pub const PAD_LABEL: u32 = u32::MAX;

#[derive(Debug, Error)]
pub enum CharfeatError {
    #[error("expected {expected} slots for batch {batch} x seq {seq}, got {got}")]
    SlotCount { expected: usize, got: usize, batch: usize, seq: usize },
    #[error("slot {slot}: feature dim {got} does not match batch dim {dim}")]
    DimMismatch { slot: usize, got: usize, dim: usize },
    #[error("slot {slot}: confidence {value} outside [0, 1]")]
    BadConfidence { slot: usize, value: f64 },
    #[error("slot {slot}: valid slot labeled PAD")]
    PadValid { slot: usize },
    #[error("slot {slot}: cannot normalize a zero-norm feature")]
    DegenerateFeature { slot: usize },
}

/// One character position: paired features plus label metadata.
#[derive(Debug, Clone)]
pub struct CharSlot {
    /// Student feature from the strongly augmented view.
    pub feature_a: Vec<f64>,
    /// Teacher reference feature from the base view.
    pub feature_b: Vec<f64>,
    /// Class id, or [`PAD_LABEL`] for padding slots.
    pub label: u32,
    /// Word-level confidence; exactly 1 for labeled data.
    pub confidence: f64,
    /// Whether this slot participates in the alignment universe `I`.
    pub valid: bool,
}

impl CharSlot {
    pub fn padding(dim: usize) -> Self {
        Self {
            feature_a: vec![0.0; dim],
            feature_b: vec![0.0; dim],
            label: PAD_LABEL,
            confidence: 0.0,
            valid: false,
        }
    }
}

/// `B x T` character slots with their features held as matrices
/// (`B*T` rows, `D` columns).
#[derive(Debug, Clone)]
pub struct AlignmentBatch {
    feature_a: Matrix,
    feature_b: Matrix,
    labels: Vec<u32>,
    confidence: Vec<f64>,
    valid: Vec<bool>,
    batch: usize,
    seq_len: usize,
    dim: usize,
}

impl AlignmentBatch {
    pub fn from_slots(
        slots: &[CharSlot],
        batch: usize,
        seq_len: usize,
        dim: usize,
    ) -> Result<Self, CharfeatError> {
        if slots.len() != batch * seq_len {
            return Err(CharfeatError::SlotCount {
                expected: batch * seq_len,
                got: slots.len(),
                batch,
                seq: seq_len,
            });
        }
        let mut fa = Vec::with_capacity(slots.len() * dim);
        let mut fb = Vec::with_capacity(slots.len() * dim);
        let mut labels = Vec::with_capacity(slots.len());
        let mut confidence = Vec::with_capacity(slots.len());
        let mut valid = Vec::with_capacity(slots.len());
        for (idx, slot) in slots.iter().enumerate() {
            if slot.feature_a.len() != dim || slot.feature_b.len() != dim {
                return Err(CharfeatError::DimMismatch {
                    slot: idx,
                    got: slot.feature_a.len().max(slot.feature_b.len()),
                    dim,
                });
            }
            if !(0.0..=1.0).contains(&slot.confidence) {
                return Err(CharfeatError::BadConfidence { slot: idx, value: slot.confidence });
            }
            if slot.valid && slot.label == PAD_LABEL {
                return Err(CharfeatError::PadValid { slot: idx });
            }
            fa.extend_from_slice(&slot.feature_a);
            fb.extend_from_slice(&slot.feature_b);
            labels.push(slot.label);
            confidence.push(slot.confidence);
            valid.push(slot.valid);
        }
        Ok(Self {
            feature_a: Matrix::from_raw(slots.len(), dim, fa),
            feature_b: Matrix::from_raw(slots.len(), dim, fb),
            labels,
            confidence,
            valid,
            batch,
            seq_len,
            dim,
        })
    }

    /// Builds a batch directly from feature matrices (`B*T x D` each).
    pub fn from_parts(
        feature_a: Matrix,
        feature_b: Matrix,
        labels: Vec<u32>,
        confidence: Vec<f64>,
        valid: Vec<bool>,
        batch: usize,
        seq_len: usize,
    ) -> Result<Self, CharfeatError> {
        let n = batch * seq_len;
        if feature_a.rows() != n
            || feature_b.rows() != n
            || labels.len() != n
            || confidence.len() != n
            || valid.len() != n
        {
            return Err(CharfeatError::SlotCount {
                expected: n,
                got: feature_a.rows(),
                batch,
                seq: seq_len,
            });
        }
        if feature_a.cols() != feature_b.cols() {
            return Err(CharfeatError::DimMismatch { slot: 0, got: feature_b.cols(), dim: feature_a.cols() });
        }
        for (idx, (&c, &v)) in confidence.iter().zip(valid.iter()).enumerate() {
            if !(0.0..=1.0).contains(&c) {
                return Err(CharfeatError::BadConfidence { slot: idx, value: c });
            }
            if v && labels[idx] == PAD_LABEL {
                return Err(CharfeatError::PadValid { slot: idx });
            }
        }
        let dim = feature_a.cols();
        Ok(Self { feature_a, feature_b, labels, confidence, valid, batch, seq_len, dim })
    }

    pub fn batch_size(&self) -> usize {
        self.batch
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_slots(&self) -> usize {
        self.labels.len()
    }

    pub fn feature_a(&self) -> &Matrix {
        &self.feature_a
    }

    pub fn feature_b(&self) -> &Matrix {
        &self.feature_b
    }

    pub fn label(&self, slot: usize) -> u32 {
        self.labels[slot]
    }

    pub fn confidence(&self, slot: usize) -> f64 {
        self.confidence[slot]
    }

    pub fn is_valid(&self, slot: usize) -> bool {
        self.valid[slot]
    }

    /// Slot indices forming the universe `I` (valid slots, ascending).
    pub fn universe(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.valid[i]).collect()
    }

    /// Scales every valid slot's features to unit L2 norm. Padding slots
    /// are left untouched. A valid slot with a zero-norm feature is an
    /// error: it has no direction to keep.
    pub fn normalize_features(&self) -> Result<AlignmentBatch, CharfeatError> {
        let mut out = self.clone();
        let dim = self.dim;
        for which in 0..2 {
            let m = if which == 0 { &mut out.feature_a } else { &mut out.feature_b };
            let data = m.data_mut();
            for (slot, &valid) in self.valid.iter().enumerate() {
                if !valid {
                    continue;
                }
                let row = &mut data[slot * dim..(slot + 1) * dim];
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return Err(CharfeatError::DegenerateFeature { slot });
                }
                for v in row.iter_mut() {
                    *v /= norm;
                }
            }
        }
        Ok(out)
    }
}

/// The alignment sets for every valid slot of a batch.
///
/// `p(i)` is the positive set, `p_excl(i)` the positive set without `i`
/// itself, and `n(i)` the complement of `p(i)` inside the universe. All
/// lists are ascending slot indices.
#[derive(Debug, Clone)]
pub struct IndexSets {
    universe: Vec<usize>,
    pos: Vec<Vec<usize>>,
    pos_excl: Vec<Vec<usize>>,
    neg: Vec<Vec<usize>>,
}

impl IndexSets {
    /// Slot indices in `I`.
    pub fn universe(&self) -> &[usize] {
        &self.universe
    }

    pub fn p(&self, slot: usize) -> &[usize] {
        &self.pos[slot]
    }

    pub fn p_excl(&self, slot: usize) -> &[usize] {
        &self.pos_excl[slot]
    }

    pub fn n(&self, slot: usize) -> &[usize] {
        &self.neg[slot]
    }
}

/// Builds `P(i)`, `P'(i)` and `N(i)` for every valid slot.
///
/// `P(i)` contains every slot of `I` sharing `i`'s label — but only when
/// slot `i`'s own confidence exceeds `eta_cua` (strictly); otherwise `P(i)`
/// is empty and `N(i)` is the whole universe. The gate reads the anchor's
/// confidence, not the partner's.
pub fn build_index_sets(batch: &AlignmentBatch, eta_cua: f64) -> IndexSets {
    assert!((0.0..=1.0).contains(&eta_cua), "eta_cua must lie in [0, 1]");
    let n_slots = batch.num_slots();
    let universe = batch.universe();
    let mut pos = vec![Vec::new(); n_slots];
    let mut pos_excl = vec![Vec::new(); n_slots];
    let mut neg = vec![Vec::new(); n_slots];
    for &i in &universe {
        if batch.confidence(i) > eta_cua {
            let label = batch.label(i);
            for &p in &universe {
                if batch.label(p) == label {
                    pos[i].push(p);
                    if p != i {
                        pos_excl[i].push(p);
                    }
                } else {
                    neg[i].push(p);
                }
            }
        } else {
            neg[i] = universe.clone();
        }
    }
    IndexSets { universe, pos, pos_excl, neg }
}
