//! Procedural glyph skeletons.
//!
//! Every charset symbol is a set of polylines on an 8 x 12 design grid
//! (x right, y down). Three variants exist per character: the base
//! skeleton, a corner-rounded derivation, and a condensed oblique
//! derivation. Variants are distinct stroke geometries, not just affine
//! tweaks of each other, so sampling them varies character morphology.

/// Number of variants available for every character.
pub const NUM_VARIANTS: usize = 3;

/// Design grid extents.
const GRID_W: f64 = 8.0;
const GRID_H: f64 = 12.0;

type Pt = (i8, i8);

/// Base skeleton polylines for one character of the 36-symbol set.
fn base_strokes(ch: char) -> &'static [&'static [Pt]] {
    match ch {
        '0' => &[&[(2, 0), (6, 0), (8, 2), (8, 10), (6, 12), (2, 12), (0, 10), (0, 2), (2, 0)]],
        '1' => &[&[(2, 2), (4, 0), (4, 12)], &[(2, 12), (6, 12)]],
        '2' => &[&[(0, 2), (2, 0), (6, 0), (8, 2), (8, 4), (0, 12), (8, 12)]],
        '3' => &[&[
            (0, 2),
            (2, 0),
            (6, 0),
            (8, 2),
            (8, 4),
            (5, 6),
            (8, 8),
            (8, 10),
            (6, 12),
            (2, 12),
            (0, 10),
        ]],
        '4' => &[&[(6, 12), (6, 0), (0, 8), (8, 8)]],
        '5' => &[&[(8, 0), (0, 0), (0, 5), (5, 5), (8, 7), (8, 10), (6, 12), (2, 12), (0, 10)]],
        '6' => &[&[
            (6, 0),
            (2, 1),
            (0, 4),
            (0, 10),
            (2, 12),
            (6, 12),
            (8, 10),
            (8, 8),
            (6, 6),
            (2, 6),
            (0, 8),
        ]],
        '7' => &[&[(0, 0), (8, 0), (3, 12)]],
        '8' => &[
            &[(2, 0), (6, 0), (8, 2), (8, 4), (6, 6), (2, 6), (0, 4), (0, 2), (2, 0)],
            &[(2, 6), (0, 8), (0, 10), (2, 12), (6, 12), (8, 10), (8, 8), (6, 6)],
        ],
        '9' => &[&[
            (2, 12),
            (6, 11),
            (8, 8),
            (8, 2),
            (6, 0),
            (2, 0),
            (0, 2),
            (0, 4),
            (2, 6),
            (8, 6),
        ]],
        'a' => &[&[(0, 12), (4, 0), (8, 12)], &[(2, 8), (6, 8)]],
        'b' => &[
            &[(0, 0), (0, 12)],
            &[(0, 0), (5, 0), (7, 2), (7, 4), (5, 6), (0, 6)],
            &[(5, 6), (8, 8), (8, 10), (6, 12), (0, 12)],
        ],
        'c' => &[&[(8, 2), (6, 0), (2, 0), (0, 2), (0, 10), (2, 12), (6, 12), (8, 10)]],
        'd' => &[&[(0, 0), (0, 12)], &[(0, 0), (5, 0), (8, 3), (8, 9), (5, 12), (0, 12)]],
        'e' => &[&[(8, 0), (0, 0), (0, 12), (8, 12)], &[(0, 6), (5, 6)]],
        'f' => &[&[(8, 0), (0, 0), (0, 12)], &[(0, 6), (5, 6)]],
        'g' => &[&[
            (8, 2),
            (6, 0),
            (2, 0),
            (0, 2),
            (0, 10),
            (2, 12),
            (6, 12),
            (8, 10),
            (8, 7),
            (4, 7),
        ]],
        'h' => &[&[(0, 0), (0, 12)], &[(8, 0), (8, 12)], &[(0, 6), (8, 6)]],
        'i' => &[&[(2, 0), (6, 0)], &[(4, 0), (4, 12)], &[(2, 12), (6, 12)]],
        'j' => &[&[(8, 0), (8, 9), (6, 12), (2, 12), (0, 10)]],
        'k' => &[&[(0, 0), (0, 12)], &[(8, 0), (0, 6), (8, 12)]],
        'l' => &[&[(0, 0), (0, 12), (8, 12)]],
        'm' => &[&[(0, 12), (0, 0), (4, 6), (8, 0), (8, 12)]],
        'n' => &[&[(0, 12), (0, 0), (8, 12), (8, 0)]],
        'o' => &[&[(2, 0), (6, 0), (8, 3), (8, 9), (6, 12), (2, 12), (0, 9), (0, 3), (2, 0)]],
        'p' => &[&[(0, 12), (0, 0), (5, 0), (8, 2), (8, 4), (5, 6), (0, 6)]],
        'q' => &[
            &[(2, 0), (6, 0), (8, 3), (8, 9), (6, 12), (2, 12), (0, 9), (0, 3), (2, 0)],
            &[(5, 8), (8, 12)],
        ],
        'r' => &[
            &[(0, 12), (0, 0), (5, 0), (8, 2), (8, 4), (5, 6), (0, 6)],
            &[(3, 6), (8, 12)],
        ],
        's' => &[&[
            (8, 1),
            (6, 0),
            (2, 0),
            (0, 2),
            (0, 4),
            (2, 6),
            (6, 6),
            (8, 8),
            (8, 10),
            (6, 12),
            (2, 12),
            (0, 11),
        ]],
        't' => &[&[(0, 0), (8, 0)], &[(4, 0), (4, 12)]],
        'u' => &[&[(0, 0), (0, 10), (2, 12), (6, 12), (8, 10), (8, 0)]],
        'v' => &[&[(0, 0), (4, 12), (8, 0)]],
        'w' => &[&[(0, 0), (2, 12), (4, 5), (6, 12), (8, 0)]],
        'x' => &[&[(0, 0), (8, 12)], &[(8, 0), (0, 12)]],
        'y' => &[&[(0, 0), (4, 5), (8, 0)], &[(4, 5), (4, 12)]],
        'z' => &[&[(0, 0), (8, 0), (0, 12), (8, 12)]],
        _ => &[],
    }
}

/// One polyline in unit glyph space ([0,1] x [0,1], y down).
pub type Stroke = Vec<(f64, f64)>;

fn to_unit(points: &[Pt]) -> Stroke {
    points
        .iter()
        .map(|&(x, y)| (x as f64 / GRID_W, y as f64 / GRID_H))
        .collect()
}

/// Chaikin corner cutting, endpoints preserved. One pass softens corners
/// while keeping the overall skeleton.
fn chaikin(stroke: &Stroke) -> Stroke {
    if stroke.len() < 3 {
        return stroke.clone();
    }
    let mut out = Vec::with_capacity(stroke.len() * 2);
    out.push(stroke[0]);
    for w in stroke.windows(2) {
        let (ax, ay) = w[0];
        let (bx, by) = w[1];
        out.push((ax + 0.25 * (bx - ax), ay + 0.25 * (by - ay)));
        out.push((ax + 0.75 * (bx - ax), ay + 0.75 * (by - ay)));
    }
    out.push(*stroke.last().unwrap());
    out
}

/// Condensed oblique derivation: narrows the body and slants it.
fn condensed_oblique(stroke: &Stroke) -> Stroke {
    stroke
        .iter()
        .map(|&(x, y)| {
            let slant = 0.22 * (1.0 - y);
            (0.5 + (x - 0.5) * 0.78 + slant - 0.11, y)
        })
        .collect()
}

/// Strokes for `(character, variant)` in unit glyph space. `variant` must
/// be below [`NUM_VARIANTS`]; characters outside the 36-symbol set yield
/// an empty set (callers validate against their charset first).
pub fn glyph_strokes(ch: char, variant: usize) -> Vec<Stroke> {
    assert!(variant < NUM_VARIANTS, "variant {variant} out of range");
    let base: Vec<Stroke> = base_strokes(ch.to_ascii_lowercase())
        .iter()
        .map(|s| to_unit(s))
        .collect();
    match variant {
        0 => base,
        1 => base.iter().map(chaikin).collect(),
        _ => base.iter().map(condensed_oblique).collect(),
    }
}
