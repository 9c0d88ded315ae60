//! A small stroke font shared by the document renderer and the template
//! recognizer.
//!
//! Glyphs are polylines on a grid whose cap height is 10 units. A text line
//! is sized by its band height, the distance from the top of the thickest
//! stroke to the bottom of the lowest one, so a glyph rendered at size 40 has
//! exactly 40 rows of ink band.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{Image, Rgb};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Typeface {
    #[default]
    Sans,
    Serif,
}

impl Typeface {
    pub const ALL: [Typeface; 2] = [Typeface::Sans, Typeface::Serif];

    fn stem(self) -> f64 {
        match self {
            Typeface::Sans => 1.5,
            Typeface::Serif => 1.3,
        }
    }
}

/// Every character the font can draw.
pub const CHARSET: &str = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 .-/<";

const CAP: f64 = 10.0;
/// Blank space between adjacent glyphs, in font units.
pub const GAP: f64 = 3.0;
/// Extra advance of a space character, in font units.
pub const SPACE: f64 = 4.0;
const FOOT: f64 = 1.0;
const FOOT_WEIGHT: f64 = 0.8;

type Path = &'static [(f64, f64)];

const O: Path = &[
    (1.5, 0.0),
    (4.5, 0.0),
    (6.0, 1.8),
    (6.0, 8.2),
    (4.5, 10.0),
    (1.5, 10.0),
    (0.0, 8.2),
    (0.0, 1.8),
    (1.5, 0.0),
];
const C: Path = &[(6.0, 1.5), (4.5, 0.0), (1.5, 0.0), (0.0, 1.8), (0.0, 8.2), (1.5, 10.0), (4.5, 10.0), (6.0, 8.5)];
const P_BOWL: Path = &[(0.0, 10.0), (0.0, 0.0), (4.5, 0.0), (6.0, 1.3), (6.0, 4.0), (4.5, 5.3), (0.0, 5.3)];

fn skeleton(ch: char) -> Option<&'static [Path]> {
    let paths: &'static [Path] = match ch {
        'A' => &[&[(0.0, 10.0), (3.0, 0.0), (6.0, 10.0)], &[(1.05, 6.5), (4.95, 6.5)]],
        'B' => &[
            &[(0.0, 0.0), (0.0, 10.0)],
            &[(0.0, 0.0), (4.0, 0.0), (5.5, 1.2), (5.5, 3.8), (4.0, 5.0), (0.0, 5.0)],
            &[(4.0, 5.0), (6.0, 6.3), (6.0, 8.7), (4.5, 10.0), (0.0, 10.0)],
        ],
        'C' => &[C],
        'D' => &[&[(0.0, 0.0), (0.0, 10.0), (3.5, 10.0), (6.0, 7.5), (6.0, 2.5), (3.5, 0.0), (0.0, 0.0)]],
        'E' => &[&[(6.0, 0.0), (0.0, 0.0), (0.0, 10.0), (6.0, 10.0)], &[(0.0, 5.0), (4.5, 5.0)]],
        'F' => &[&[(6.0, 0.0), (0.0, 0.0), (0.0, 10.0)], &[(0.0, 5.0), (4.5, 5.0)]],
        'G' => &[&[
            (6.0, 1.5),
            (4.5, 0.0),
            (1.5, 0.0),
            (0.0, 1.8),
            (0.0, 8.2),
            (1.5, 10.0),
            (4.5, 10.0),
            (6.0, 8.5),
            (6.0, 5.5),
            (3.5, 5.5),
        ]],
        'H' => &[&[(0.0, 0.0), (0.0, 10.0)], &[(6.0, 0.0), (6.0, 10.0)], &[(0.0, 5.0), (6.0, 5.0)]],
        'I' => &[&[(0.0, 0.0), (0.0, 10.0)]],
        'J' => &[&[(6.0, 0.0), (6.0, 8.0), (4.5, 10.0), (1.5, 10.0), (0.0, 8.2)]],
        'K' => &[&[(0.0, 0.0), (0.0, 10.0)], &[(6.0, 0.0), (0.0, 6.0)], &[(2.0, 4.2), (6.0, 10.0)]],
        'L' => &[&[(0.0, 0.0), (0.0, 10.0), (6.0, 10.0)]],
        'M' => &[&[(0.0, 10.0), (0.0, 0.0), (4.0, 7.0), (8.0, 0.0), (8.0, 10.0)]],
        'N' => &[&[(0.0, 10.0), (0.0, 0.0), (6.0, 10.0), (6.0, 0.0)]],
        'O' => &[O],
        'P' => &[P_BOWL],
        'Q' => &[O, &[(3.8, 7.2), (6.2, 10.0)]],
        'R' => &[P_BOWL, &[(3.0, 5.3), (6.0, 10.0)]],
        'S' => &[&[
            (6.0, 1.5),
            (4.5, 0.0),
            (1.5, 0.0),
            (0.0, 1.5),
            (0.0, 3.5),
            (1.5, 4.8),
            (4.5, 5.2),
            (6.0, 6.5),
            (6.0, 8.5),
            (4.5, 10.0),
            (1.5, 10.0),
            (0.0, 8.5),
        ]],
        'T' => &[&[(0.0, 0.0), (6.0, 0.0)], &[(3.0, 0.0), (3.0, 10.0)]],
        'U' => &[&[(0.0, 0.0), (0.0, 8.2), (1.5, 10.0), (4.5, 10.0), (6.0, 8.2), (6.0, 0.0)]],
        'V' => &[&[(0.0, 0.0), (3.0, 10.0), (6.0, 0.0)]],
        'W' => &[&[(0.0, 0.0), (2.0, 10.0), (4.0, 3.0), (6.0, 10.0), (8.0, 0.0)]],
        'X' => &[&[(0.0, 0.0), (6.0, 10.0)], &[(6.0, 0.0), (0.0, 10.0)]],
        'Y' => &[&[(0.0, 0.0), (3.0, 5.0), (6.0, 0.0)], &[(3.0, 5.0), (3.0, 10.0)]],
        'Z' => &[&[(0.0, 0.0), (6.0, 0.0), (0.0, 10.0), (6.0, 10.0)]],
        '0' => &[
            &[
                (1.2, 0.0),
                (3.8, 0.0),
                (5.0, 1.8),
                (5.0, 8.2),
                (3.8, 10.0),
                (1.2, 10.0),
                (0.0, 8.2),
                (0.0, 1.8),
                (1.2, 0.0),
            ],
            &[(4.4, 1.4), (0.6, 8.6)],
        ],
        '1' => &[&[(0.0, 2.0), (2.0, 0.0), (2.0, 10.0)]],
        '2' => &[&[(0.0, 1.8), (1.5, 0.0), (4.5, 0.0), (6.0, 1.5), (6.0, 3.5), (0.0, 10.0), (6.0, 10.0)]],
        '3' => &[
            &[(0.0, 1.0), (1.5, 0.0), (4.5, 0.0), (6.0, 1.3), (6.0, 3.5), (4.5, 4.8), (2.0, 4.8)],
            &[(4.5, 4.8), (6.0, 6.2), (6.0, 8.7), (4.5, 10.0), (1.5, 10.0), (0.0, 9.0)],
        ],
        '4' => &[&[(4.5, 10.0), (4.5, 0.0), (0.0, 7.0), (6.0, 7.0)]],
        '5' => &[&[
            (6.0, 0.0),
            (0.5, 0.0),
            (0.0, 4.5),
            (4.0, 4.0),
            (6.0, 5.7),
            (6.0, 8.3),
            (4.5, 10.0),
            (1.5, 10.0),
            (0.0, 8.8),
        ]],
        '6' => &[&[
            (5.5, 0.8),
            (4.0, 0.0),
            (2.0, 0.0),
            (0.0, 2.5),
            (0.0, 8.2),
            (1.5, 10.0),
            (4.5, 10.0),
            (6.0, 8.3),
            (6.0, 6.2),
            (4.5, 4.8),
            (1.5, 4.8),
            (0.0, 6.2),
        ]],
        '7' => &[&[(0.0, 0.0), (6.0, 0.0), (2.0, 10.0)]],
        '8' => &[
            &[
                (1.5, 0.0),
                (4.5, 0.0),
                (5.7, 1.2),
                (5.7, 3.6),
                (4.5, 4.8),
                (1.5, 4.8),
                (0.3, 3.6),
                (0.3, 1.2),
                (1.5, 0.0),
            ],
            &[(1.5, 4.8), (0.0, 6.2), (0.0, 8.6), (1.5, 10.0), (4.5, 10.0), (6.0, 8.6), (6.0, 6.2), (4.5, 4.8)],
        ],
        '9' => &[&[
            (6.0, 4.5),
            (4.5, 5.2),
            (1.5, 5.2),
            (0.0, 3.8),
            (0.0, 1.6),
            (1.5, 0.0),
            (4.5, 0.0),
            (6.0, 1.8),
            (6.0, 7.5),
            (4.0, 10.0),
            (2.0, 10.0),
            (0.5, 9.2),
        ]],
        '.' => &[&[(0.0, 9.3), (0.3, 9.3)]],
        '-' => &[&[(0.0, 5.5), (3.5, 5.5)]],
        '/' => &[&[(0.0, 10.0), (4.0, 0.0)]],
        '<' => &[&[(5.0, 0.0), (0.0, 5.0), (5.0, 10.0)]],
        _ => return None,
    };
    Some(paths)
}

#[derive(Debug, Clone)]
struct Segment {
    a: (f64, f64),
    b: (f64, f64),
    weight: f64,
}

/// A glyph as weighted segments in font units, shifted so its ink starts at
/// x = 0 and the band top is y = 0.
#[derive(Debug, Clone)]
struct Glyph {
    segments: Vec<Segment>,
    width: f64,
}

fn band_height(tf: Typeface) -> f64 {
    CAP + tf.stem()
}

/// Pixels per font unit when text is drawn at band height `size`.
pub fn unit(size: f64, tf: Typeface) -> f64 {
    size / band_height(tf)
}

fn glyph(ch: char, tf: Typeface) -> Option<Glyph> {
    let paths = skeleton(ch)?;
    let stem = tf.stem();
    let mut segments = Vec::new();
    for path in paths {
        for pair in path.windows(2) {
            segments.push(Segment { a: pair[0], b: pair[1], weight: stem });
        }
        if tf == Typeface::Serif {
            for (end, next) in [(path[0], path[1]), (path[path.len() - 1], path[path.len() - 2])] {
                let (dx, dy) = (next.0 - end.0, next.1 - end.1);
                if (end.1 == 0.0 || end.1 == CAP) && dy.abs() > 2.0 * dx.abs() {
                    segments.push(Segment {
                        a: (end.0 - FOOT, end.1),
                        b: (end.0 + FOOT, end.1),
                        weight: FOOT_WEIGHT,
                    });
                }
            }
        }
    }
    let left = segments
        .iter()
        .map(|s| s.a.0.min(s.b.0) - s.weight / 2.0)
        .fold(f64::INFINITY, f64::min);
    let right = segments
        .iter()
        .map(|s| s.a.0.max(s.b.0) + s.weight / 2.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let dy = stem / 2.0;
    for s in &mut segments {
        s.a = (s.a.0 - left, s.a.1 + dy);
        s.b = (s.b.0 - left, s.b.1 + dy);
    }
    Some(Glyph { segments, width: right - left })
}

pub fn supports(ch: char) -> bool {
    CHARSET.contains(ch)
}

fn check(text: &str) -> Result<()> {
    match text.chars().find(|&c| !supports(c)) {
        Some(c) => Err(Error::InvalidParam(format!("character {c:?} is not in the font"))),
        None => Ok(()),
    }
}

/// Horizontal layout of `text` in font units: `(char, x offset)` for every
/// drawn glyph plus the total width.
fn layout(text: &str, tf: Typeface) -> (Vec<(Glyph, f64)>, f64) {
    let mut placed = Vec::new();
    let mut x = 0.0;
    let mut first = true;
    for ch in text.chars() {
        if ch == ' ' {
            x += SPACE + GAP;
            continue;
        }
        let Some(g) = glyph(ch, tf) else { continue };
        if !first {
            x += GAP;
        }
        first = false;
        let w = g.width;
        placed.push((g, x));
        x += w;
    }
    (placed, x)
}

/// Width in pixels of `text` drawn at band height `size`.
pub fn text_width(text: &str, size: f64, tf: Typeface) -> f64 {
    layout(text, tf).1 * size / band_height(tf)
}

/// Anti-aliased ink coverage of `text` at band height `size`, as a
/// row-major grid of `ceil(width) x ceil(size)` values in [0, 1].
pub fn coverage(text: &str, size: f64, tf: Typeface) -> Result<(usize, usize, Vec<f32>)> {
    check(text)?;
    let s = size / band_height(tf);
    let (placed, width) = layout(text, tf);
    let w = ((width * s).ceil() as usize).max(1);
    let h = (size.ceil() as usize).max(1);
    let mut cov = vec![0f32; w * h];
    for (g, x0) in &placed {
        for seg in &g.segments {
            let a = ((seg.a.0 + x0) * s, seg.a.1 * s);
            let b = ((seg.b.0 + x0) * s, seg.b.1 * s);
            let r = seg.weight * s / 2.0;
            let pad = r + 1.0;
            let xa = (a.0.min(b.0) - pad).floor().max(0.0) as usize;
            let xb = ((a.0.max(b.0) + pad).ceil() as usize).min(w);
            let ya = (a.1.min(b.1) - pad).floor().max(0.0) as usize;
            let yb = ((a.1.max(b.1) + pad).ceil() as usize).min(h);
            for y in ya..yb {
                for x in xa..xb {
                    let d = segment_distance((x as f64 + 0.5, y as f64 + 0.5), a, b);
                    let c = (r + 0.5 - d).clamp(0.0, 1.0) as f32;
                    let cell = &mut cov[y * w + x];
                    if c > *cell {
                        *cell = c;
                    }
                }
            }
        }
    }
    Ok((w, h, cov))
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * vx + (p.1 - a.1) * vy) / len2).clamp(0.0, 1.0)
    };
    let (dx, dy) = (p.0 - a.0 - t * vx, p.1 - a.1 - t * vy);
    (dx * dx + dy * dy).sqrt()
}

/// Draws `text` with its band's top-left corner at pixel `(x, y)`.
pub fn draw_text(img: &mut Image, text: &str, x: i64, y: i64, size: f64, color: Rgb, tf: Typeface) -> Result<()> {
    let (w, h, cov) = coverage(text, size, tf)?;
    for row in 0..h {
        let py = y + row as i64;
        if py < 0 || py >= img.height() as i64 {
            continue;
        }
        for col in 0..w {
            let px = x + col as i64;
            let c = cov[row * w + col] as f64;
            if c <= 0.0 || px < 0 || px >= img.width() as i64 {
                continue;
            }
            img.blend(px as usize, py as usize, color, c);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charset_is_complete() {
        for tf in Typeface::ALL {
            for ch in CHARSET.chars().filter(|&c| c != ' ') {
                let g = glyph(ch, tf).unwrap();
                assert!(g.width > 0.0, "{ch}");
            }
        }
        assert!(glyph('a', Typeface::Sans).is_none());
    }

    #[test]
    fn coverage_band_has_requested_height() {
        for tf in Typeface::ALL {
            let (_, h, cov) = coverage("T", 40.0, tf).unwrap();
            assert_eq!(h, 40);
            let w = cov.len() / h;
            let rows: Vec<bool> = (0..h).map(|y| (0..w).any(|x| cov[y * w + x] > 0.5)).collect();
            assert!(rows[0] && rows[39]);
        }
    }

    #[test]
    fn width_is_additive_over_words() {
        let a = text_width("AB", 40.0, Typeface::Sans);
        let b = text_width("AB CD", 40.0, Typeface::Sans);
        let c = text_width("CD", 40.0, Typeface::Sans);
        let s = 40.0 / band_height(Typeface::Sans);
        assert!((b - (a + c + (SPACE + 2.0 * GAP) * s)).abs() < 1e-9);
    }

    #[test]
    fn serif_adds_feet() {
        let sans = glyph('I', Typeface::Sans).unwrap();
        let serif = glyph('I', Typeface::Serif).unwrap();
        assert_eq!(sans.segments.len(), 1);
        assert_eq!(serif.segments.len(), 3);
        assert!(serif.width > sans.width);
    }

    #[test]
    fn unsupported_text_is_rejected() {
        let mut img = Image::new(50, 20);
        assert!(draw_text(&mut img, "abc", 0, 0, 12.0, [0, 0, 0], Typeface::Sans).is_err());
    }

    #[test]
    fn draw_blends_toward_color() {
        let mut img = Image::filled(80, 40, [255, 255, 255]);
        draw_text(&mut img, "H", 5, 5, 20.0, [0, 0, 0], Typeface::Sans).unwrap();
        let dark = img.pixels().filter(|p| p[0] < 128).count();
        assert!(dark > 20);
        assert_eq!(img.get(79, 39), [255, 255, 255]);
    }
}
