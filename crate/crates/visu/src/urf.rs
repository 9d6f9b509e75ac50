//! Unified representation forms for text images.
//!
//! A text image can appear in eight forms: four reading orders, each with
//! characters either upright or lying on their side (rotated 90 degrees,
//! orientation taken mod 180). Every form is a whole-image rotation of one
//! of two primary forms — left-to-right reading with upright characters, or
//! left-to-right reading with rotated characters. Vertical inputs are made
//! horizontal by the aspect-ratio rule in [`canonicalize`]; the remaining
//! 180-degree ambiguity is resolved during training by random flips.

use serde::{Deserialize, Serialize};

use crate::image::GlyphImage;

/// Direction in which the character sequence is laid out in the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReadingOrder {
    LeftToRight,
    RightToLeft,
    TopToBottom,
    BottomToTop,
}

/// Character orientation class, taken mod 180 degrees: upright covers both
/// 0 and 180 degree glyphs, rotated covers 90 and 270.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CharOrientation {
    Upright,
    Rotated90,
}

/// One of the eight representation forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RepForm {
    pub reading_order: ReadingOrder,
    pub char_orientation: CharOrientation,
}

impl RepForm {
    pub const fn new(reading_order: ReadingOrder, char_orientation: CharOrientation) -> Self {
        Self { reading_order, char_orientation }
    }

    /// Primary form 1: left-to-right reading, upright characters.
    pub const UPRIGHT: RepForm =
        RepForm::new(ReadingOrder::LeftToRight, CharOrientation::Upright);

    /// Primary form 2: left-to-right reading, characters on their side.
    pub const ROTATED: RepForm =
        RepForm::new(ReadingOrder::LeftToRight, CharOrientation::Rotated90);

    /// All eight forms, in a fixed enumeration order.
    pub fn all() -> [RepForm; 8] {
        use CharOrientation::*;
        use ReadingOrder::*;
        [
            RepForm::new(LeftToRight, Upright),
            RepForm::new(LeftToRight, Rotated90),
            RepForm::new(RightToLeft, Upright),
            RepForm::new(RightToLeft, Rotated90),
            RepForm::new(TopToBottom, Upright),
            RepForm::new(TopToBottom, Rotated90),
            RepForm::new(BottomToTop, Upright),
            RepForm::new(BottomToTop, Rotated90),
        ]
    }

    pub fn is_primary(&self) -> bool {
        *self == RepForm::UPRIGHT || *self == RepForm::ROTATED
    }

    /// Manifest encoding of a primary form.
    pub fn manifest_tag(&self) -> &'static str {
        if *self == RepForm::ROTATED {
            "rotated90"
        } else {
            "upright"
        }
    }

    pub fn from_manifest_tag(tag: &str) -> Option<RepForm> {
        match tag {
            "upright" => Some(RepForm::UPRIGHT),
            "rotated90" => Some(RepForm::ROTATED),
            _ => None,
        }
    }
}

/// Rotates 90 degrees clockwise: the top-left pixel moves to the top-right.
pub fn rotate90_cw(image: &GlyphImage) -> GlyphImage {
    let (w, h) = (image.width(), image.height());
    let mut out = GlyphImage::blank(h, w);
    for y in 0..h {
        for x in 0..w {
            out.set(h - 1 - y, x, image.get(x, y));
        }
    }
    out
}

/// Rotates 180 degrees: pixel (x, y) maps to (w-1-x, h-1-y). An involution.
pub fn rotate180(image: &GlyphImage) -> GlyphImage {
    let (w, h) = (image.width(), image.height());
    let mut out = GlyphImage::blank(w, h);
    for y in 0..h {
        for x in 0..w {
            out.set(w - 1 - x, h - 1 - y, image.get(x, y));
        }
    }
    out
}

/// Aspect-ratio canonicalization: an image with `height/width > r` is
/// rotated 90 degrees clockwise (returning `rotated = true`), otherwise it
/// is returned unchanged. The comparison is strict, so `height/width == r`
/// stays unrotated.
pub fn canonicalize(image: &GlyphImage, r: f64) -> (GlyphImage, bool) {
    assert!(r > 0.0, "aspect-ratio threshold must be positive");
    if image.aspect_ratio() > r {
        (rotate90_cw(image), true)
    } else {
        (image.clone(), false)
    }
}

/// Maps any of the eight forms onto one of the two primary forms plus an
/// optional 180-degree rotation. Vertical forms are first brought
/// horizontal by a clockwise rotation (mirroring what [`canonicalize`] does
/// to the pixels), then expressed relative to the primaries.
pub fn reduce_form(form: RepForm) -> (RepForm, bool) {
    use ReadingOrder::*;
    // Effect of one clockwise rotation on a declared form: the leading
    // character moves left -> top -> right -> bottom, and the orientation
    // class flips.
    let horizontal = match form.reading_order {
        LeftToRight | RightToLeft => form,
        TopToBottom => RepForm::new(RightToLeft, flip(form.char_orientation)),
        BottomToTop => RepForm::new(LeftToRight, flip(form.char_orientation)),
    };
    match horizontal.reading_order {
        LeftToRight => (horizontal, false),
        // Right-to-left horizontal text is the 180-degree rotation of the
        // primary with the same orientation class.
        RightToLeft => (RepForm::new(LeftToRight, horizontal.char_orientation), true),
        _ => unreachable!("vertical orders were rotated horizontal above"),
    }
}

fn flip(o: CharOrientation) -> CharOrientation {
    match o {
        CharOrientation::Upright => CharOrientation::Rotated90,
        CharOrientation::Rotated90 => CharOrientation::Upright,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_image(w: usize, h: usize) -> GlyphImage {
        let mut img = GlyphImage::blank(w, h);
        for y in 0..h {
            for x in 0..w {
                img.set(x, y, ((x * 7 + y * 13) % 251) as u8);
            }
        }
        img
    }

    #[test]
    fn wide_image_is_left_alone() {
        // 100 wide, 32 tall: ratio 0.32 <= 1.3.
        let img = test_image(100, 32);
        let (out, rotated) = canonicalize(&img, 1.3);
        assert!(!rotated);
        assert_eq!(out, img);
    }

    #[test]
    fn tall_image_is_rotated() {
        // 32 wide, 100 tall: ratio 3.125 > 1.3.
        let img = test_image(32, 100);
        let (out, rotated) = canonicalize(&img, 1.3);
        assert!(rotated);
        assert_eq!(out.width(), 100);
        assert_eq!(out.height(), 32);
    }

    #[test]
    fn exact_threshold_stays_unrotated() {
        // 10 wide, 13 tall: ratio exactly 1.3.
        let img = test_image(10, 13);
        let (_, rotated) = canonicalize(&img, 1.3);
        assert!(!rotated);
    }

    #[test]
    fn rotate180_is_an_involution() {
        let img = test_image(9, 5);
        assert_eq!(rotate180(&rotate180(&img)), img);
    }

    #[test]
    fn rotate180_swaps_a_1x2_image() {
        let img = GlyphImage::new(2, 1, vec![10, 20]).unwrap();
        let out = rotate180(&img);
        assert_eq!(out.pixels(), &[20, 10]);
    }

    #[test]
    fn rotate180_swaps_corners() {
        let img = test_image(8, 3);
        let out = rotate180(&img);
        assert_eq!(out.get(0, 0), img.get(7, 2));
        assert_eq!(out.get(7, 0), img.get(0, 2));
        assert_eq!(out.get(0, 2), img.get(7, 0));
    }

    #[test]
    fn primary_forms_reduce_to_themselves() {
        assert_eq!(reduce_form(RepForm::UPRIGHT), (RepForm::UPRIGHT, false));
        assert_eq!(reduce_form(RepForm::ROTATED), (RepForm::ROTATED, false));
    }

    #[test]
    fn reversed_upright_needs_the_flip() {
        let form = RepForm::new(ReadingOrder::RightToLeft, CharOrientation::Upright);
        assert_eq!(reduce_form(form), (RepForm::UPRIGHT, true));
    }

    #[test]
    fn all_eight_forms_map_onto_two_primaries() {
        let mut images = std::collections::HashSet::new();
        for form in RepForm::all() {
            let (primary, _) = reduce_form(form);
            assert!(primary.is_primary());
            images.insert(primary);
        }
        assert_eq!(images.len(), 2);
    }
}
