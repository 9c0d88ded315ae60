//! Rasterizes a filled-in document from its layout.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::Rng;

use super::layout::{Decoration, DocumentLayout, NormRect};
use crate::error::{Error, Result};
use crate::font::{self, Typeface};
use crate::raster::{Image, Rgb};

const LABEL_SIZE: f64 = 14.0;

/// Padding between a field rectangle's left edge and its text.
pub fn text_padding(size: f64) -> f64 {
    0.25 * size
}

/// Pixel box `(x, y, w, h)` of a field caption.
pub fn label_box(layout: &DocumentLayout, rect: &NormRect, label: &str) -> (i64, i64, i64, i64) {
    let (w, h) = (layout.base_width, layout.base_height());
    let (x, y, _, _) = rect.to_pixels(w, h);
    let lw = font::text_width(label, LABEL_SIZE, Typeface::Sans).ceil() as i64;
    (x, y - LABEL_SIZE as i64 - 3, lw, LABEL_SIZE as i64)
}

fn mix(a: Rgb, b: Rgb, t: f64) -> Rgb {
    std::array::from_fn(|k| crate::raster::to_channel(a[k] as f64 + (b[k] as f64 - a[k] as f64) * t))
}

/// Fills the ellipse inscribed in `r`, limited to the box `clip`.
fn fill_ellipse(img: &mut Image, r: (i64, i64, i64, i64), clip: (i64, i64, i64, i64), color: Rgb) {
    let (x, y, w, h) = r;
    let (cx, cy) = (x as f64 + w as f64 / 2.0, y as f64 + h as f64 / 2.0);
    let (rx, ry) = (w as f64 / 2.0, h as f64 / 2.0);
    let (ya, yb) = (y.max(clip.1).max(0), (y + h).min(clip.1 + clip.3).min(img.height() as i64));
    let (xa, xb) = (x.max(clip.0).max(0), (x + w).min(clip.0 + clip.2).min(img.width() as i64));
    for py in ya..yb {
        for px in xa..xb {
            let dx = (px as f64 + 0.5 - cx) / rx;
            let dy = (py as f64 + 0.5 - cy) / ry;
            if dx * dx + dy * dy <= 1.0 {
                img.put(px as usize, py as usize, color);
            }
        }
    }
}

fn stroke_rect(img: &mut Image, r: (i64, i64, i64, i64), t: i64, color: Rgb) {
    let (x, y, w, h) = r;
    img.fill_rect(x, y, w, t, color);
    img.fill_rect(x, y + h - t, w, t, color);
    img.fill_rect(x, y, t, h, color);
    img.fill_rect(x + w - t, y, t, h, color);
}

fn ring(img: &mut Image, cx: f64, cy: f64, r: f64, t: f64, color: Rgb) {
    let (x0, x1) = ((cx - r - t).floor().max(0.0) as usize, ((cx + r + t).ceil() as usize).min(img.width()));
    let (y0, y1) = ((cy - r - t).floor().max(0.0) as usize, ((cy + r + t).ceil() as usize).min(img.height()));
    for y in y0..y1 {
        for x in x0..x1 {
            let d = ((x as f64 + 0.5 - cx).powi(2) + (y as f64 + 0.5 - cy).powi(2)).sqrt();
            let a = (t / 2.0 + 0.5 - (d - r).abs()).clamp(0.0, 1.0) * 0.7;
            if a > 0.0 {
                img.blend(x, y, color, a);
            }
        }
    }
}

/// Paper with a faint wavy line pattern in the accent color.
fn paper(layout: &DocumentLayout, w: usize, h: usize, rng: &mut impl Rng) -> Image {
    let s = &layout.scheme;
    let tint: f64 = rng.random_range(-6.0..6.0);
    let phase: f64 = rng.random_range(0.0..TAU);
    let f = layout.pattern;
    Image::from_fn(w, h, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let shade = tint * (yf / h as f64 - 0.5);
        let base: Rgb = std::array::from_fn(|k| crate::raster::to_channel(s.paper[k] as f64 + shade));
        let u = (TAU * f * (xf + 14.0 * (yf * 0.021 + phase).sin())).sin();
        let v = (TAU * f * 0.8 * (yf + 11.0 * (xf * 0.017 - phase).sin())).sin();
        let line = ((u.abs() - 0.93) / 0.07).max(0.0).max(((v.abs() - 0.95) / 0.05).max(0.0));
        mix(base, s.accent, 0.16 * line)
    })
}

/// Draws the document with the given field texts. Returns the raster and
/// the texts actually drawn, keyed by field name.
pub fn render_document(
    layout: &DocumentLayout,
    values: &BTreeMap<String, String>,
    rng: &mut impl Rng,
) -> Result<(Image, BTreeMap<String, String>)> {
    let (w, h) = (layout.base_width, layout.base_height());
    let s = layout.scheme;
    let mut img = paper(layout, w, h, rng);
    let header = (0.12 * h as f64).round() as i64;
    img.fill_rect(0, 0, w as i64, header, s.accent);
    let title_size = 0.5 * header as f64;
    font::draw_text(&mut img, &layout.title, (0.04 * w as f64) as i64, header / 4, title_size, s.paper, Typeface::Sans)?;
    for d in &layout.decorations {
        match *d {
            Decoration::Portrait { rect } => {
                let r = rect.to_pixels(w, h);
                img.fill_rect(r.0, r.1, r.2, r.3, mix(s.paper, [150, 155, 165], 0.5));
                let head = (r.0 + r.2 / 4, r.1 + r.3 / 8, r.2 / 2, r.3 * 2 / 5);
                fill_ellipse(&mut img, head, r, [140, 145, 158]);
                let body = (r.0 + r.2 / 10, r.1 + r.3 * 11 / 20, r.2 * 4 / 5, r.3 * 3 / 4);
                fill_ellipse(&mut img, body, r, [120, 125, 140]);
                stroke_rect(&mut img, r, 2, s.accent);
            }
            Decoration::Block { rect, color } => {
                let r = rect.to_pixels(w, h);
                img.fill_rect(r.0, r.1, r.2, r.3, color);
            }
            Decoration::Frame { rect, color } => stroke_rect(&mut img, rect.to_pixels(w, h), 3, color),
            Decoration::Stamp { cx, cy, r, color } => {
                ring(&mut img, cx * w as f64, cy * h as f64, r * h as f64, 5.0, color);
                ring(&mut img, cx * w as f64, cy * h as f64, 0.7 * r * h as f64, 3.0, color);
            }
        }
    }
    let mut truth = BTreeMap::new();
    for f in &layout.fields {
        let text = values
            .get(&f.name)
            .ok_or_else(|| Error::InvalidParam(format!("no value for field {}", f.name)))?;
        if !f.label.is_empty() {
            let (lx, ly, _, _) = label_box(layout, &f.rect, &f.label);
            font::draw_text(&mut img, &f.label, lx, ly, LABEL_SIZE, s.accent, Typeface::Sans)?;
        }
        let (rx, ry, rw, rh) = f.rect.to_pixels(w, h);
        let pad = text_padding(f.size);
        if font::text_width(text, f.size, layout.typeface) > rw as f64 - 2.0 * pad {
            return Err(Error::TextOverflow { field: f.name.clone(), text: text.clone() });
        }
        let y = ry as f64 + (rh as f64 - f.size) / 2.0;
        font::draw_text(&mut img, text, rx + pad.round() as i64, y.round() as i64, f.size, f.color, layout.typeface)?;
        truth.insert(f.name.clone(), text.clone());
    }
    Ok((img, truth))
}
