//! Mean-teacher machinery: EMA parameter tracking, pseudo-labeling with
//! word-level confidence, and the weak/strong augmentation pipelines.

use indexmap::IndexMap;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::charset::Charset;
use crate::image::GlyphImage;
use crate::ndtape::Matrix;

#[derive(Debug, Error)]
pub enum TeacherError {
    #[error("parameter sets disagree: {0}")]
    ParamMismatch(String),
    #[error("smoothing factor must lie in [0, 1], got {0}")]
    BadAlpha(f64),
}

/// Flat named collection of parameter matrices. Iteration follows insertion
/// order, which fixes the update and serialization order everywhere.
#[derive(Debug, Clone, Default)]
pub struct ParamSet {
    entries: IndexMap<String, Matrix>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Matrix) {
        self.entries.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<&Matrix> {
        self.entries.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Matrix> {
        self.entries.get_mut(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Matrix)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Matrix)> {
        self.entries.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|k| k.as_str())
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.entries.values().map(|m| m.len()) .sum()
    }

    /// Checks that `other` has the same names and shapes in the same order.
    pub fn check_compatible(&self, other: &ParamSet) -> Result<(), TeacherError> {
        if self.len() != other.len() {
            return Err(TeacherError::ParamMismatch(format!(
                "{} vs {} entries",
                self.len(),
                other.len()
            )));
        }
        for ((an, av), (bn, bv)) in self.entries.iter().zip(other.entries.iter()) {
            if an != bn {
                return Err(TeacherError::ParamMismatch(format!("name {an:?} vs {bn:?}")));
            }
            if av.shape() != bv.shape() {
                return Err(TeacherError::ParamMismatch(format!(
                    "{an}: shape {:?} vs {:?}",
                    av.shape(),
                    bv.shape()
                )));
            }
        }
        Ok(())
    }

    /// A stable fingerprint of all parameter bits, for cheap identity checks.
    pub fn fingerprint(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        let mut mix = |x: u64| {
            h ^= x;
            h = h.wrapping_mul(0x1000_0000_01b3);
        };
        for (name, m) in &self.entries {
            for b in name.bytes() {
                mix(b as u64);
            }
            mix(m.rows() as u64);
            mix(m.cols() as u64);
            for &v in m.data() {
                mix(v.to_bits());
            }
        }
        h
    }
}

/// Exponential moving average update: every teacher entry becomes
/// `alpha * teacher + (1 - alpha) * student`, elementwise. The teacher is
/// only ever written through this function, never by an optimizer.
pub fn ema_update(
    teacher: &mut ParamSet,
    student: &ParamSet,
    alpha: f64,
) -> Result<(), TeacherError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(TeacherError::BadAlpha(alpha));
    }
    teacher.check_compatible(student)?;
    for ((_, t), (_, s)) in teacher.entries.iter_mut().zip(student.entries.iter()) {
        let td = t.data_mut();
        for (tv, sv) in td.iter_mut().zip(s.data().iter()) {
            *tv = alpha * *tv + (1.0 - alpha) * sv;
        }
    }
    Ok(())
}

/// Teacher prediction for one word image: greedy decode with its per-step
/// confidences and their cumulative product.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLabel {
    /// Characters decoded before the first EOS.
    pub text: String,
    /// Class ids matching `text`.
    pub class_ids: Vec<u32>,
    /// Max softmax probability per decoded step, up to and including the
    /// EOS step (or all steps when no EOS is produced).
    pub per_step_conf: Vec<f64>,
    /// Product of `per_step_conf`: the word-level confidence.
    pub word_conf: f64,
}

/// Greedy pseudo-labeling from per-step class probabilities (`T x C` rows,
/// each normalized). Decoding stops at the first EOS; ties in the argmax
/// resolve to the lowest class index.
pub fn pseudo_label(probs: &Matrix, charset: &Charset) -> PseudoLabel {
    let eos = charset.eos_id();
    let mut text = String::new();
    let mut class_ids = Vec::new();
    let mut per_step_conf = Vec::new();
    let mut word_conf = 1.0;
    for t in 0..probs.rows() {
        let row = probs.row(t);
        let mut best = 0usize;
        let mut best_p = row[0];
        for (c, &p) in row.iter().enumerate().skip(1) {
            if p > best_p {
                best = c;
                best_p = p;
            }
        }
        per_step_conf.push(best_p);
        word_conf *= best_p;
        if best as u32 == eos {
            break;
        }
        if let Ok(ch) = charset.char_of(best as u32) {
            class_ids.push(best as u32);
            text.push(ch);
        } else {
            // PAD predicted before EOS: keep scanning, nothing to emit.
            continue;
        }
    }
    PseudoLabel { text, class_ids, per_step_conf, word_conf }
}

/// Augmentation strength selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Augment {
    /// Photometric jitter only (brightness/contrast).
    Weak,
    /// Composition of geometric and photometric distortions.
    Strong,
}

/// Applies brightness/contrast with explicit parameters. `contrast = 1,
/// brightness = 0` is the identity.
pub fn brightness_contrast(image: &GlyphImage, contrast: f64, brightness: f64) -> GlyphImage {
    let pixels = image
        .pixels()
        .iter()
        .map(|&v| {
            let unit = v as f64 / 255.0;
            let out = (unit - 0.5) * contrast + 0.5 + brightness;
            (out.clamp(0.0, 1.0) * 255.0).round() as u8
        })
        .collect();
    GlyphImage::new(image.width(), image.height(), pixels).expect("same dims")
}

/// Nearest-neighbor rotation about the image center, background fill 0.
pub fn rotate_degrees(image: &GlyphImage, degrees: f64) -> GlyphImage {
    let (w, h) = (image.width(), image.height());
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let rad = degrees.to_radians();
    let (sin, cos) = rad.sin_cos();
    let mut out = GlyphImage::blank(w, h);
    for y in 0..h {
        for x in 0..w {
            // Inverse map: rotate destination coordinates back by -angle.
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            let sx = cos * dx + sin * dy + cx;
            let sy = -sin * dx + cos * dy + cy;
            let sxr = sx.round();
            let syr = sy.round();
            if sxr >= 0.0 && syr >= 0.0 && (sxr as usize) < w && (syr as usize) < h {
                out.set(x, y, image.get(sxr as usize, syr as usize));
            }
        }
    }
    out
}

/// Box blur with clamp-at-border sampling. `radius = 0` is the identity.
pub fn box_blur(image: &GlyphImage, radius: usize) -> GlyphImage {
    if radius == 0 {
        return image.clone();
    }
    let (w, h) = (image.width(), image.height());
    let mut out = GlyphImage::blank(w, h);
    let r = radius as isize;
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0u32;
            let mut count = 0u32;
            for dy in -r..=r {
                for dx in -r..=r {
                    let sx = (x + dx).clamp(0, w as isize - 1) as usize;
                    let sy = (y + dy).clamp(0, h as isize - 1) as usize;
                    acc += image.get(sx, sy) as u32;
                    count += 1;
                }
            }
            out.set(x as usize, y as usize, (acc / count) as u8);
        }
    }
    out
}

/// Additive Gaussian noise on the unit scale, clamped back to [0, 255].
pub fn gaussian_noise(image: &GlyphImage, sigma: f64, rng: &mut impl Rng) -> GlyphImage {
    if sigma <= 0.0 {
        return image.clone();
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated");
    let pixels = image
        .pixels()
        .iter()
        .map(|&v| {
            let unit = v as f64 / 255.0 + normal.sample(rng);
            (unit.clamp(0.0, 1.0) * 255.0).round() as u8
        })
        .collect();
    GlyphImage::new(image.width(), image.height(), pixels).expect("same dims")
}

/// Blanks a random rectangle covering at most `max_area_frac` of the image.
pub fn random_erase(image: &GlyphImage, max_area_frac: f64, rng: &mut impl Rng) -> GlyphImage {
    let (w, h) = (image.width(), image.height());
    let max_area = (w as f64 * h as f64 * max_area_frac).max(1.0);
    let ew = rng.gen_range(1..=((max_area.sqrt() * 1.5) as usize).clamp(1, w));
    let max_eh = ((max_area / ew as f64) as usize).clamp(1, h);
    let eh = rng.gen_range(1..=max_eh);
    let x0 = rng.gen_range(0..=w - ew);
    let y0 = rng.gen_range(0..=h - eh);
    let mut out = image.clone();
    for y in y0..y0 + eh {
        for x in x0..x0 + ew {
            out.set(x, y, 0);
        }
    }
    out
}

/// Randomized augmentation. Weak draws brightness/contrast jitter only;
/// strong composes rotation (<= 15 degrees), box blur (<= 3 px), Gaussian
/// noise (sigma <= 0.1), random erasing (<= 20% area) and
/// brightness/contrast. Output dimensions always match the input, pixel
/// values stay in [0, 255], and the result is a pure function of
/// `(image, strength, rng state)`.
pub fn augment(image: &GlyphImage, strength: Augment, rng: &mut impl Rng) -> GlyphImage {
    match strength {
        Augment::Weak => {
            let contrast = rng.gen_range(0.8..1.25);
            let brightness = rng.gen_range(-0.1..0.1);
            brightness_contrast(image, contrast, brightness)
        }
        Augment::Strong => {
            let mut out = image.clone();
            if rng.gen_bool(0.5) {
                let angle = rng.gen_range(-15.0..15.0);
                out = rotate_degrees(&out, angle);
            }
            if rng.gen_bool(0.3) {
                let radius = rng.gen_range(1..=3usize);
                out = box_blur(&out, radius);
            }
            if rng.gen_bool(0.5) {
                let sigma = rng.gen_range(0.02..0.1);
                out = gaussian_noise(&out, sigma, rng);
            }
            if rng.gen_bool(0.3) {
                out = random_erase(&out, 0.2, rng);
            }
            if rng.gen_bool(0.8) {
                let contrast = rng.gen_range(0.6..1.4);
                let brightness = rng.gen_range(-0.2..0.2);
                out = brightness_contrast(&out, contrast, brightness);
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(values: &[(&str, f64)]) -> ParamSet {
        let mut set = ParamSet::new();
        for (name, v) in values {
            set.insert(*name, Matrix::filled(2, 2, *v));
        }
        set
    }

    #[test]
    fn midpoint_ema() {
        let mut teacher = params(&[("w", 1.0)]);
        let student = params(&[("w", 0.0)]);
        ema_update(&mut teacher, &student, 0.5).unwrap();
        assert_eq!(teacher.get("w").unwrap().get(0, 0), 0.5);
    }

    #[test]
    fn ema_endpoints() {
        let student = params(&[("w", 3.0)]);
        let mut frozen = params(&[("w", 1.0)]);
        ema_update(&mut frozen, &student, 1.0).unwrap();
        assert_eq!(frozen.get("w").unwrap().get(0, 0), 1.0);
        let mut copy = params(&[("w", 1.0)]);
        ema_update(&mut copy, &student, 0.0).unwrap();
        assert_eq!(copy.get("w").unwrap().get(0, 0), 3.0);
    }

    #[test]
    fn ema_rejects_mismatched_sets() {
        let mut teacher = params(&[("w", 1.0)]);
        let student = params(&[("v", 1.0)]);
        assert!(ema_update(&mut teacher, &student, 0.5).is_err());
        let mut teacher = params(&[("w", 1.0)]);
        let mut student = ParamSet::new();
        student.insert("w", Matrix::zeros(3, 3));
        assert!(ema_update(&mut teacher, &student, 0.5).is_err());
        assert!(ema_update(&mut teacher, &params(&[("w", 0.0)]), 1.5).is_err());
    }

    #[test]
    fn ema_decay_toward_constant_student_is_geometric() {
        let theta = 0.25;
        let mut teacher = params(&[("w", 1.25)]);
        let student = params(&[("w", theta)]);
        let alpha = 0.999f64;
        let initial_gap = 1.0;
        for n in 1..=1000usize {
            ema_update(&mut teacher, &student, alpha).unwrap();
            let gap = (teacher.get("w").unwrap().get(0, 0) - theta).abs();
            let expected = alpha.powi(n as i32) * initial_gap;
            assert!(
                (gap - expected).abs() <= 1e-12,
                "step {n}: gap {gap} vs {expected}"
            );
        }
    }

    #[test]
    fn ema_is_affine_in_the_operands() {
        let mut t1 = params(&[("w", 2.0)]);
        let s1 = params(&[("w", 0.5)]);
        ema_update(&mut t1, &s1, 0.9).unwrap();
        let mut t2 = params(&[("w", 6.0)]);
        let s2 = params(&[("w", 1.5)]);
        ema_update(&mut t2, &s2, 0.9).unwrap();
        let a = t1.get("w").unwrap().get(0, 0);
        let b = t2.get("w").unwrap().get(0, 0);
        assert!((3.0 * a - b).abs() < 1e-12);
    }

    #[test]
    fn pseudo_label_multiplies_step_confidences() {
        let cs = Charset::digits();
        // Steps: class 3 at 0.9, class 1 at 0.8, EOS at 1.0.
        let mut probs = vec![0.1 / 9.0; 12];
        probs[3] = 0.9;
        let mut row2 = vec![0.2 / 11.0; 12];
        row2[1] = 0.8;
        let mut row3 = vec![0.0; 12];
        row3[10] = 1.0;
        let m = Matrix::new(3, 12, [probs, row2, row3].concat()).unwrap();
        let label = pseudo_label(&m, &cs);
        assert_eq!(label.text, "31");
        assert!((label.word_conf - 0.72).abs() < 1e-12);
        assert_eq!(label.per_step_conf.len(), 3);
    }

    #[test]
    fn one_hot_rows_have_unit_confidence() {
        let cs = Charset::digits();
        let mut data = vec![0.0; 2 * 12];
        data[5] = 1.0; // '5'
        data[12 + 10] = 1.0; // EOS
        let m = Matrix::new(2, 12, data).unwrap();
        let label = pseudo_label(&m, &cs);
        assert_eq!(label.text, "5");
        assert_eq!(label.word_conf, 1.0);
    }

    #[test]
    fn eos_first_gives_empty_text() {
        let cs = Charset::digits();
        let mut data = vec![0.0; 12];
        data[10] = 0.6;
        data[0] = 0.4;
        let m = Matrix::new(1, 12, data).unwrap();
        let label = pseudo_label(&m, &cs);
        assert_eq!(label.text, "");
        assert!((label.word_conf - 0.6).abs() < 1e-15);
    }

    #[test]
    fn word_conf_never_exceeds_min_step_conf() {
        let cs = Charset::digits();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let m = Matrix::from_fn(4, 12, |_, _| rng.gen_range(0.0..1.0));
            // Normalize rows.
            let m = Matrix::from_fn(4, 12, |r, c| {
                let s: f64 = m.row(r).iter().sum();
                m.get(r, c) / s
            });
            let label = pseudo_label(&m, &cs);
            let min = label
                .per_step_conf
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            assert!(label.word_conf <= min + 1e-15);
            // And it equals the brute-force product over decoded steps.
            let product: f64 = label.per_step_conf.iter().product();
            assert!((label.word_conf - product).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_jitter_leaves_the_image_unchanged() {
        let img = GlyphImage::new(3, 2, vec![0, 50, 100, 150, 200, 255]).unwrap();
        assert_eq!(brightness_contrast(&img, 1.0, 0.0), img);
    }

    #[test]
    fn same_seed_replays_byte_identical_augmentation() {
        let img = GlyphImage::new(16, 8, (0..128).map(|v| (v * 2) as u8).collect()).unwrap();
        let a = augment(&img, Augment::Strong, &mut ChaCha8Rng::seed_from_u64(42));
        let b = augment(&img, Augment::Strong, &mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a, b);
        let w = augment(&img, Augment::Weak, &mut ChaCha8Rng::seed_from_u64(9));
        let w2 = augment(&img, Augment::Weak, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(w, w2);
    }

    #[test]
    fn augmented_dims_and_range_are_preserved() {
        let img = GlyphImage::new(20, 10, (0..200).map(|v| v as u8).collect()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let out = augment(&img, Augment::Strong, &mut rng);
            assert_eq!((out.width(), out.height()), (20, 10));
        }
    }
}
