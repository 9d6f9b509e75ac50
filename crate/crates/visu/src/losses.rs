//! Alignment and recognition losses with closed-form gradients.
//!
//! Two contrastive losses over character slots are implemented side by side:
//!
//! - The **unidirectional alignment loss** ([`cua_loss`]) aligns each student
//!   feature `f_i^a` with the teacher references of its positive set. Its
//!   per-pair denominator `A(i, p)` carries the partner positives with a
//!   *negated* exponent, which makes their gradient coefficient attractive.
//! - The **character contrastive loss** ([`cc_loss`]) is the earlier
//!   formulation whose denominator `B(i)` treats partner positives like
//!   negatives: their gradient coefficient is repulsive, which disperses
//!   same-class features.
//!
//! Both losses treat the partner side as a gradient-free reference: partners
//! come from the teacher ([`CcMode::Cc2`] and the alignment loss) or from a
//! frozen snapshot of the student features ([`CcMode::Cc1`]). `grad_a` is the
//! exact total derivative with respect to the anchor features under that
//! convention, which is what the finite-difference and autodiff oracles
//! check.
//!
//! Exponents are evaluated directly (no log-sum-exp shifting) so that the
//! reported denominators, the coefficient API and the gradients stay
//! mutually consistent to near machine precision; inputs must keep
//! `|f_i . f_j| / tau` below ~700, which unit-norm features satisfy by a
//! wide margin at any reasonable temperature.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::charfeat::{build_index_sets, AlignmentBatch};
use crate::ndtape::Matrix;

#[derive(Debug, Error)]
pub enum LossError {
    #[error("temperature must be positive, got {0}")]
    BadTau(f64),
    #[error("{name} must lie in [0, 1], got {value}")]
    BadGate { name: &'static str, value: f64 },
    #[error("alignment weight must be finite and non-negative, got {0}")]
    BadLambda(f64),
    #[error("slot {partner} is not in {set} of anchor {anchor}")]
    NotAPartner { anchor: usize, partner: usize, set: &'static str },
    #[error("exponent {0} overflows the denominator")]
    ExponentRange(f64),
    #[error("probability row {row} sums to {sum:.12}, expected 1 within 1e-9")]
    NotNormalized { row: usize, sum: f64 },
    #[error("student probability vanishes at row {row}, class {class}, where the teacher has mass")]
    ZeroStudentMass { row: usize, class: usize },
    #[error("label {label} at position {pos} is out of range for {classes} classes")]
    LabelRange { label: u32, pos: usize, classes: usize },
    #[error("batch metadata mismatch: {0}")]
    BatchShape(String),
    #[error("loss component {0} is not finite")]
    NonFinite(&'static str),
}

/// Temperature, weighting and confidence gates for the loss family.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LossConfig {
    /// Softmax temperature for the alignment losses.
    pub tau: f64,
    /// Weight of the alignment loss in the total objective.
    pub lambda: f64,
    /// Confidence gate for alignment positives.
    pub eta_cua: f64,
    /// Confidence gate for consistency regularization.
    pub eta_ccr: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { tau: 0.1, lambda: 0.1, eta_cua: 0.7, eta_ccr: 0.5 }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<(), LossError> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(LossError::BadTau(self.tau));
        }
        if !(0.0..=1.0).contains(&self.eta_cua) {
            return Err(LossError::BadGate { name: "eta_cua", value: self.eta_cua });
        }
        if !(0.0..=1.0).contains(&self.eta_ccr) {
            return Err(LossError::BadGate { name: "eta_ccr", value: self.eta_ccr });
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(LossError::BadLambda(self.lambda));
        }
        Ok(())
    }
}

/// One recorded denominator. The alignment loss has one per `(i, p)` pair;
/// the contrastive loss has one per anchor (`partner = None`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenomTerm {
    pub anchor: usize,
    pub partner: Option<usize>,
    pub value: f64,
}

/// Loss value with the gradient on the anchor features and the raw
/// denominators for diagnostics.
#[derive(Debug, Clone)]
pub struct LossResult {
    pub value: f64,
    /// Gradient w.r.t. `feature_a`, one row per slot (zero on slots that
    /// contribute no term).
    pub grad_a: Matrix,
    pub denominators: Vec<DenomTerm>,
}

/// Which feature set provides the partner side of the contrastive loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CcMode {
    /// Partners drawn from the student features themselves (frozen copy):
    /// clustering inside the strongly augmented view.
    Cc1,
    /// Partners drawn from the teacher's base-view features.
    Cc2,
}

fn checked_exp(exponent: f64) -> Result<f64, LossError> {
    let v = exponent.exp();
    if !v.is_finite() {
        return Err(LossError::ExponentRange(exponent));
    }
    Ok(v)
}

/// Unidirectional alignment loss and its closed-form gradient.
///
/// For each valid anchor `i` with a non-empty positive set, and each
/// positive partner `p`:
///
/// ```text
/// A(i, p) = exp(s(i,p)/tau) + sum_{p' in P'(p)} exp(-s(i,p')/tau)
///                           + sum_{n' in N(i)} exp(s(i,n')/tau)
/// ```
///
/// with `s(i, j) = f_i^a . f_j^b`, and the anchor gradient assembles the
/// coefficients of [`cua_gradient_coefficients`]. Anchors whose positive
/// set is empty (confidence gated out) contribute exactly zero. Teacher
/// features receive no gradient.
pub fn cua_loss(batch: &AlignmentBatch, cfg: &LossConfig) -> Result<LossResult, LossError> {
    cfg.validate()?;
    let sets = build_index_sets(batch, cfg.eta_cua);
    let dots = batch.feature_a().matmul_nt(batch.feature_b()).expect("dims match by construction");
    let dim = batch.dim();
    let mut value = 0.0;
    let mut grad = vec![0.0; batch.num_slots() * dim];
    let mut denominators = Vec::new();
    let fb = batch.feature_b();

    for &i in sets.universe() {
        let positives = sets.p(i);
        if positives.is_empty() {
            continue;
        }
        let inv_p = 1.0 / positives.len() as f64;
        let grad_row = &mut grad[i * dim..(i + 1) * dim];
        for &p in positives {
            let self_term = checked_exp(dots.get(i, p) / cfg.tau)?;
            let mut denom = self_term;
            for &pp in sets.p_excl(p) {
                denom += checked_exp(-dots.get(i, pp) / cfg.tau)?;
            }
            for &nn in sets.n(i) {
                denom += checked_exp(dots.get(i, nn) / cfg.tau)?;
            }
            if !denom.is_finite() {
                return Err(LossError::NonFinite("cua denominator"));
            }
            denominators.push(DenomTerm { anchor: i, partner: Some(p), value: denom });
            value -= inv_p * (dots.get(i, p) / cfg.tau - denom.ln());

            // -(1 / (tau |P(i)|)) * [M1 f_p + sum M2 f_p' + sum M3 f_n'] / A(i, p)
            let scale = -inv_p / (cfg.tau * denom);
            let m1 = denom - self_term;
            axpy_row(grad_row, scale * m1, fb.row(p));
            for &pp in sets.p_excl(p) {
                let m2 = checked_exp(-dots.get(i, pp) / cfg.tau)?;
                axpy_row(grad_row, scale * m2, fb.row(pp));
            }
            for &nn in sets.n(i) {
                let m3 = -checked_exp(dots.get(i, nn) / cfg.tau)?;
                axpy_row(grad_row, scale * m3, fb.row(nn));
            }
        }
    }
    if !value.is_finite() {
        return Err(LossError::NonFinite("cua value"));
    }
    Ok(LossResult {
        value,
        grad_a: Matrix::from_raw(batch.num_slots(), dim, grad),
        denominators,
    })
}

/// The three gradient coefficient groups of the alignment loss for one
/// `(i, p)` pair: `M1` for the aligned partner, `M2` (one per member of
/// `P'(p)`, in set order) and `M3` (one per member of `N(i)`, in set order).
#[derive(Debug, Clone)]
pub struct CuaCoefficients {
    pub m1: f64,
    pub m2: Vec<f64>,
    pub m3: Vec<f64>,
    /// The shared denominator `A(i, p)`.
    pub denom: f64,
}

pub fn cua_gradient_coefficients(
    batch: &AlignmentBatch,
    cfg: &LossConfig,
    anchor: usize,
    partner: usize,
) -> Result<CuaCoefficients, LossError> {
    cfg.validate()?;
    let sets = build_index_sets(batch, cfg.eta_cua);
    if !sets.p(anchor).contains(&partner) {
        return Err(LossError::NotAPartner { anchor, partner, set: "P(i)" });
    }
    let fa = batch.feature_a();
    let fb = batch.feature_b();
    let dot = |j: usize| fa.row_dot(anchor, fb, j);
    let self_term = checked_exp(dot(partner) / cfg.tau)?;
    let m2: Vec<f64> = sets
        .p_excl(partner)
        .iter()
        .map(|&pp| checked_exp(-dot(pp) / cfg.tau))
        .collect::<Result<_, _>>()?;
    let m3: Vec<f64> = sets
        .n(anchor)
        .iter()
        .map(|&nn| checked_exp(dot(nn) / cfg.tau).map(|e| -e))
        .collect::<Result<_, _>>()?;
    let denom = self_term + m2.iter().sum::<f64>() - m3.iter().sum::<f64>();
    Ok(CuaCoefficients { m1: denom - self_term, m2, m3, denom })
}

/// Contrastive loss over character slots and its closed-form gradient.
///
/// ```text
/// B(i) = sum_{p' in P'(i)} exp(s(i,p')/tau) + sum_{n' in N(i)} exp(s(i,n')/tau)
/// ```
///
/// In [`CcMode::Cc1`] both factors of every dot product come from
/// `feature_a` (the partner occurrences frozen); in [`CcMode::Cc2`] the
/// partners come from `feature_b`. Anchors with an empty `P'(i)` contribute
/// exactly zero.
pub fn cc_loss(
    batch: &AlignmentBatch,
    cfg: &LossConfig,
    mode: CcMode,
) -> Result<LossResult, LossError> {
    cfg.validate()?;
    let sets = build_index_sets(batch, cfg.eta_cua);
    let partners = match mode {
        CcMode::Cc1 => batch.feature_a(),
        CcMode::Cc2 => batch.feature_b(),
    };
    let dots = batch.feature_a().matmul_nt(partners).expect("dims match by construction");
    let dim = batch.dim();
    let mut value = 0.0;
    let mut grad = vec![0.0; batch.num_slots() * dim];
    let mut denominators = Vec::new();

    for &i in sets.universe() {
        let pos = sets.p_excl(i);
        if pos.is_empty() {
            continue;
        }
        let mut denom = 0.0;
        for &pp in pos {
            denom += checked_exp(dots.get(i, pp) / cfg.tau)?;
        }
        for &nn in sets.n(i) {
            denom += checked_exp(dots.get(i, nn) / cfg.tau)?;
        }
        if !denom.is_finite() || denom <= 0.0 {
            return Err(LossError::NonFinite("cc denominator"));
        }
        denominators.push(DenomTerm { anchor: i, partner: None, value: denom });
        let inv_p = 1.0 / pos.len() as f64;
        let grad_row = &mut grad[i * dim..(i + 1) * dim];
        for &p in pos {
            value -= inv_p * (dots.get(i, p) / cfg.tau - denom.ln());
            // -(1 / (tau |P'(i)|)) * [N1 f_p + sum N2 f_p' + sum N3 f_n'] / B(i)
            let scale = -inv_p / (cfg.tau * denom);
            axpy_row(grad_row, scale * denom, partners.row(p));
            for &pp in pos {
                let n2 = -checked_exp(dots.get(i, pp) / cfg.tau)?;
                axpy_row(grad_row, scale * n2, partners.row(pp));
            }
            for &nn in sets.n(i) {
                let n3 = -checked_exp(dots.get(i, nn) / cfg.tau)?;
                axpy_row(grad_row, scale * n3, partners.row(nn));
            }
        }
    }
    if !value.is_finite() {
        return Err(LossError::NonFinite("cc value"));
    }
    Ok(LossResult {
        value,
        grad_a: Matrix::from_raw(batch.num_slots(), dim, grad),
        denominators,
    })
}

/// Gradient coefficient groups of the contrastive loss for anchor `i` and
/// one partner `p` of `P'(i)`: `N1 = B(i)`, `N2` (per member of `P'(i)`)
/// and `N3` (per member of `N(i)`), both in set order.
#[derive(Debug, Clone)]
pub struct CcCoefficients {
    pub n1: f64,
    pub n2: Vec<f64>,
    pub n3: Vec<f64>,
}

pub fn cc_gradient_coefficients(
    batch: &AlignmentBatch,
    cfg: &LossConfig,
    anchor: usize,
    partner: usize,
    mode: CcMode,
) -> Result<CcCoefficients, LossError> {
    cfg.validate()?;
    let sets = build_index_sets(batch, cfg.eta_cua);
    if !sets.p_excl(anchor).contains(&partner) {
        return Err(LossError::NotAPartner { anchor, partner, set: "P'(i)" });
    }
    let fa = batch.feature_a();
    let partners = match mode {
        CcMode::Cc1 => batch.feature_a(),
        CcMode::Cc2 => batch.feature_b(),
    };
    let dot = |j: usize| fa.row_dot(anchor, partners, j);
    let n2: Vec<f64> = sets
        .p_excl(anchor)
        .iter()
        .map(|&pp| checked_exp(dot(pp) / cfg.tau).map(|e| -e))
        .collect::<Result<_, _>>()?;
    let n3: Vec<f64> = sets
        .n(anchor)
        .iter()
        .map(|&nn| checked_exp(dot(nn) / cfg.tau).map(|e| -e))
        .collect::<Result<_, _>>()?;
    let n1 = -(n2.iter().sum::<f64>() + n3.iter().sum::<f64>());
    Ok(CcCoefficients { n1, n2, n3 })
}

fn axpy_row(dst: &mut [f64], factor: f64, src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src.iter()) {
        *d += factor * s;
    }
}

/// Character-level consistency regularization: confidence-gated, per-sample
/// length-normalized KL divergence with the teacher as target.
///
/// `teacher_probs` and `student_probs` are `B*T x C`; `word_conf` and
/// `text_lens` have one entry per sample. A sample contributes
/// `(1/len) * sum_{t < len} KL(teacher_t || student_t)` when its confidence
/// strictly exceeds `eta_ccr`, else exactly zero; contributions are summed
/// over the batch. Rows beyond a sample's text length are ignored entirely.
pub fn ccr_loss(
    teacher_probs: &Matrix,
    student_probs: &Matrix,
    word_conf: &[f64],
    text_lens: &[usize],
    eta_ccr: f64,
) -> Result<f64, LossError> {
    if !(0.0..=1.0).contains(&eta_ccr) {
        return Err(LossError::BadGate { name: "eta_ccr", value: eta_ccr });
    }
    let b = word_conf.len();
    if b == 0 || text_lens.len() != b || teacher_probs.rows() % b != 0 {
        return Err(LossError::BatchShape(format!(
            "{} prob rows for {} samples / {} lengths",
            teacher_probs.rows(),
            b,
            text_lens.len()
        )));
    }
    if teacher_probs.shape() != student_probs.shape() {
        return Err(LossError::BatchShape(format!(
            "teacher {:?} vs student {:?}",
            teacher_probs.shape(),
            student_probs.shape()
        )));
    }
    let seq_len = teacher_probs.rows() / b;
    let mut total = 0.0;
    for (sample, (&conf, &len)) in word_conf.iter().zip(text_lens.iter()).enumerate() {
        if !(0.0..=1.0).contains(&conf) {
            return Err(LossError::BadGate { name: "word_conf", value: conf });
        }
        if len > seq_len {
            return Err(LossError::BatchShape(format!(
                "sample {sample} text length {len} exceeds sequence length {seq_len}"
            )));
        }
        if conf <= eta_ccr || len == 0 {
            continue;
        }
        let mut acc = 0.0;
        for t in 0..len {
            let row = sample * seq_len + t;
            acc += kl_row(teacher_probs, student_probs, row)?;
        }
        total += acc / len as f64;
    }
    Ok(total)
}

fn kl_row(p: &Matrix, q: &Matrix, row: usize) -> Result<f64, LossError> {
    for (m, name) in [(p, "teacher"), (q, "student")] {
        let sum: f64 = m.row(row).iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            let _ = name;
            return Err(LossError::NotNormalized { row, sum });
        }
    }
    let mut acc = 0.0;
    for (class, (&pv, &qv)) in p.row(row).iter().zip(q.row(row).iter()).enumerate() {
        if pv == 0.0 {
            continue;
        }
        if qv <= 0.0 {
            return Err(LossError::ZeroStudentMass { row, class });
        }
        acc += pv * (pv.ln() - qv.ln());
    }
    Ok(acc)
}

/// How the recognition loss is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LengthNorm {
    /// Mean over the non-padding positions actually present.
    RealLength,
    /// Sum over non-padding positions divided by the full `B*T` grid.
    FixedLength,
}

/// Character-level cross-entropy over non-padding positions (mean by
/// default; see [`recognition_loss_with_norm`] for the fixed-length
/// variant). Logits rows are softmax-normalized internally with max
/// subtraction.
pub fn recognition_loss(
    student_logits: &Matrix,
    labels: &[u32],
    pad_label: u32,
) -> Result<f64, LossError> {
    recognition_loss_with_norm(student_logits, labels, pad_label, LengthNorm::RealLength)
}

pub fn recognition_loss_with_norm(
    student_logits: &Matrix,
    labels: &[u32],
    pad_label: u32,
    norm: LengthNorm,
) -> Result<f64, LossError> {
    if student_logits.rows() != labels.len() {
        return Err(LossError::BatchShape(format!(
            "{} logit rows for {} labels",
            student_logits.rows(),
            labels.len()
        )));
    }
    let classes = student_logits.cols();
    let mut total = 0.0;
    let mut count = 0usize;
    for (pos, &label) in labels.iter().enumerate() {
        if label == pad_label {
            continue;
        }
        if label as usize >= classes {
            return Err(LossError::LabelRange { label, pos, classes });
        }
        let row = student_logits.row(pos);
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let mut denom = 0.0;
        for &v in row {
            denom += (v - max).exp();
        }
        total -= row[label as usize] - max - denom.ln();
        count += 1;
    }
    let divisor = match norm {
        LengthNorm::RealLength => count.max(1),
        LengthNorm::FixedLength => labels.len().max(1),
    };
    Ok(total / divisor as f64)
}

/// Total objective: recognition + consistency + weighted alignment.
pub fn total_loss(rec: f64, ccr: f64, align: f64, cfg: &LossConfig) -> Result<f64, LossError> {
    for (v, name) in [(rec, "rec"), (ccr, "ccr"), (align, "align")] {
        if !v.is_finite() {
            return Err(LossError::NonFinite(name));
        }
    }
    Ok(rec + ccr + cfg.lambda * align)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfeat::CharSlot;

    fn slot(label: u32, conf: f64, fa: &[f64], fb: &[f64]) -> CharSlot {
        CharSlot {
            feature_a: fa.to_vec(),
            feature_b: fb.to_vec(),
            label,
            confidence: conf,
            valid: true,
        }
    }

    fn cfg_tau(tau: f64) -> LossConfig {
        LossConfig { tau, ..LossConfig::default() }
    }

    #[test]
    fn singleton_self_alignment_is_exactly_zero() {
        let slots = vec![slot(0, 1.0, &[1.0, 0.0], &[1.0, 0.0])];
        let batch = AlignmentBatch::from_slots(&slots, 1, 1, 2).unwrap();
        let out = cua_loss(&batch, &LossConfig::default()).unwrap();
        assert_eq!(out.value, 0.0);
        assert_eq!(out.grad_a.max_abs(), 0.0);
    }

    #[test]
    fn two_slot_hand_value_matches() {
        // Anchor (label 0, conf 1) against one gated-out slot of another
        // class: A = e + 1, loss = ln(1 + e^-1).
        let slots = vec![
            slot(0, 1.0, &[1.0, 0.0], &[1.0, 0.0]),
            slot(1, 0.5, &[0.0, 0.0], &[0.0, 1.0]),
        ];
        let batch = AlignmentBatch::from_slots(&slots, 2, 1, 2).unwrap();
        let out = cua_loss(&batch, &cfg_tau(1.0)).unwrap();
        let expected = (1.0 + (-1.0f64).exp()).ln();
        assert!((out.value - expected).abs() < 1e-12, "{} vs {expected}", out.value);
        assert!((out.value - 0.31326168751822286).abs() < 1e-12);
        // Denominator diagnostic for the single pair.
        assert_eq!(out.denominators.len(), 1);
        assert!((out.denominators[0].value - (1.0f64.exp() + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn tau_must_be_positive() {
        let slots = vec![slot(0, 1.0, &[1.0], &[1.0])];
        let batch = AlignmentBatch::from_slots(&slots, 1, 1, 1).unwrap();
        let bad = LossConfig { tau: 0.0, ..LossConfig::default() };
        assert!(matches!(cua_loss(&batch, &bad), Err(LossError::BadTau(_))));
        assert!(matches!(cc_loss(&batch, &bad, CcMode::Cc1), Err(LossError::BadTau(_))));
    }

    #[test]
    fn cc_three_identical_slots_give_three_log_two() {
        let f = [1.0, 0.0];
        let slots = vec![
            slot(0, 1.0, &f, &f),
            slot(0, 1.0, &f, &f),
            slot(0, 1.0, &f, &f),
        ];
        let batch = AlignmentBatch::from_slots(&slots, 3, 1, 2).unwrap();
        let out = cc_loss(&batch, &cfg_tau(1.0), CcMode::Cc1).unwrap();
        let expected = 3.0 * 2.0f64.ln();
        assert!((out.value - expected).abs() < 1e-12, "{} vs {expected}", out.value);
        assert!((out.value - 2.0794415416798357).abs() < 1e-12);
    }

    #[test]
    fn cc_with_no_positive_partners_is_zero() {
        let slots = vec![
            slot(0, 1.0, &[1.0, 0.0], &[1.0, 0.0]),
            slot(1, 1.0, &[0.0, 1.0], &[0.0, 1.0]),
        ];
        let batch = AlignmentBatch::from_slots(&slots, 2, 1, 2).unwrap();
        let out = cc_loss(&batch, &cfg_tau(1.0), CcMode::Cc2).unwrap();
        assert_eq!(out.value, 0.0);
        assert_eq!(out.grad_a.max_abs(), 0.0);
    }

    #[test]
    fn cua_m1_vanishes_without_partners_or_negatives() {
        let slots = vec![slot(0, 1.0, &[0.3, 0.4], &[0.3, 0.4])];
        let batch = AlignmentBatch::from_slots(&slots, 1, 1, 2).unwrap();
        let coef = cua_gradient_coefficients(&batch, &LossConfig::default(), 0, 0).unwrap();
        assert_eq!(coef.m1, 0.0);
        assert!(coef.m2.is_empty());
        assert!(coef.m3.is_empty());
    }

    #[test]
    fn coefficient_partner_contract_is_enforced() {
        let slots = vec![
            slot(0, 1.0, &[1.0, 0.0], &[1.0, 0.0]),
            slot(1, 1.0, &[0.0, 1.0], &[0.0, 1.0]),
        ];
        let batch = AlignmentBatch::from_slots(&slots, 2, 1, 2).unwrap();
        let cfg = LossConfig::default();
        assert!(matches!(
            cua_gradient_coefficients(&batch, &cfg, 0, 1),
            Err(LossError::NotAPartner { .. })
        ));
        assert!(matches!(
            cc_gradient_coefficients(&batch, &cfg, 0, 0, CcMode::Cc1),
            Err(LossError::NotAPartner { .. })
        ));
    }

    #[test]
    fn matched_inputs_flip_the_partner_coefficient_sign() {
        // Same features through both coefficient APIs: the alignment loss
        // attracts the extra positives (M2 > 0) where the contrastive loss
        // repels them (N2 < 0).
        let slots = vec![
            slot(0, 1.0, &[0.8, 0.6], &[0.8, 0.6]),
            slot(0, 1.0, &[0.6, 0.8], &[0.6, 0.8]),
            slot(1, 1.0, &[-0.6, 0.8], &[-0.6, 0.8]),
        ];
        let batch = AlignmentBatch::from_slots(&slots, 3, 1, 2).unwrap();
        let cfg = LossConfig::default();
        let m = cua_gradient_coefficients(&batch, &cfg, 0, 1).unwrap();
        let n = cc_gradient_coefficients(&batch, &cfg, 0, 1, CcMode::Cc1).unwrap();
        assert!(m.m1 > 0.0);
        assert!(m.m2.iter().all(|&v| v > 0.0));
        assert!(m.m3.iter().all(|&v| v < 0.0));
        assert!(n.n1 > 0.0);
        assert!(n.n2.iter().all(|&v| v < 0.0));
        assert!(n.n3.iter().all(|&v| v < 0.0));
    }

    #[test]
    fn ccr_of_identical_distributions_is_zero() {
        let probs = Matrix::new(2, 2, vec![0.7, 0.3, 0.2, 0.8]).unwrap();
        let v = ccr_loss(&probs, &probs, &[1.0], &[2], 0.5).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn ccr_gate_closes_below_threshold() {
        let p = Matrix::new(1, 2, vec![1.0, 0.0]).unwrap();
        let q = Matrix::new(1, 2, vec![0.5, 0.5]).unwrap();
        let v = ccr_loss(&p, &q, &[0.4], &[1], 0.5).unwrap();
        assert_eq!(v, 0.0);
        // Exactly at the threshold the strict comparison also gates out.
        let v = ccr_loss(&p, &q, &[0.5], &[1], 0.5).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn ccr_hand_kl_is_log_two() {
        let p = Matrix::new(1, 2, vec![1.0, 0.0]).unwrap();
        let q = Matrix::new(1, 2, vec![0.5, 0.5]).unwrap();
        let v = ccr_loss(&p, &q, &[1.0], &[1], 0.5).unwrap();
        assert!((v - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn ccr_rejects_unnormalized_rows() {
        let p = Matrix::new(1, 2, vec![0.9, 0.3]).unwrap();
        let q = Matrix::new(1, 2, vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            ccr_loss(&p, &q, &[1.0], &[1], 0.5),
            Err(LossError::NotNormalized { .. })
        ));
    }

    #[test]
    fn uniform_logits_cost_log_c() {
        let logits = Matrix::zeros(3, 4);
        let labels = [0u32, 1, 2];
        let v = recognition_loss(&logits, &labels, 99).unwrap();
        assert!((v - 4.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn correct_logit_margin_drives_loss_down() {
        let mut last = f64::INFINITY;
        for margin in [1.0, 4.0, 16.0] {
            let logits = Matrix::new(1, 3, vec![margin, 0.0, 0.0]).unwrap();
            let v = recognition_loss(&logits, &[0], 99).unwrap();
            assert!(v < last);
            last = v;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn pad_positions_are_skipped() {
        let logits = Matrix::new(2, 3, vec![5.0, 0.0, 0.0, -100.0, 100.0, 0.0]).unwrap();
        let with_pad = recognition_loss(&logits, &[0, 7], 7).unwrap();
        let only_first = recognition_loss(&logits.slice(0, 1, 0, 3).unwrap(), &[0], 7).unwrap();
        assert_eq!(with_pad, only_first);
    }

    #[test]
    fn out_of_range_label_is_a_contract_error() {
        let logits = Matrix::zeros(1, 3);
        assert!(matches!(
            recognition_loss(&logits, &[3], 99),
            Err(LossError::LabelRange { .. })
        ));
    }

    #[test]
    fn total_is_weighted_sum() {
        let cfg = LossConfig { lambda: 0.1, ..LossConfig::default() };
        let v = total_loss(1.0, 0.5, 2.0, &cfg).unwrap();
        assert!((v - 1.7).abs() < 1e-15);
        let cfg0 = LossConfig { lambda: 0.0, ..LossConfig::default() };
        assert_eq!(total_loss(1.0, 0.5, 123.0, &cfg0).unwrap(), 1.5);
    }
}
