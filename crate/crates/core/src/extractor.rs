//! Field reading: rectification to the class aspect ratio, layout masks,
//! line normalization and a glyph-template text recognizer.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classifier::{classify, preprocess, DocumentClass};
use crate::error::Result;
use crate::exec::{map_slice, Exec};
use crate::font::{self, Typeface};
use crate::locator::{locate, LocatorParams};
use crate::raster::{resize_to_height, round_half_even, warp_perspective, Image, Quad};
use crate::synthgen::{DocumentLayout, LayoutRegistry};
use crate::tensornet::Network;

/// Height of every normalized field line.
pub const LINE_HEIGHT: usize = 40;

/// Default width of rectified documents.
pub const RECTIFIED_WIDTH: usize = 1000;

/// Reads the text of one normalized line.
pub trait Recognizer: Send + Sync {
    /// The text and a confidence in `[0, 1]`.
    fn recognize(&self, line: &Image) -> (String, f64);
}

/// Warps the located document to `width` pixels and the layout's aspect
/// ratio.
pub fn rectify(photo: &Image, quad: &Quad, layout: &DocumentLayout, width: usize) -> Result<Image> {
    let h = round_half_even(width as f64 / layout.aspect_ratio).max(1.0) as usize;
    warp_perspective(photo, quad, width, h)
}

/// Pixel box of every layout field on a `w x h` document, clipped to it.
pub fn field_boxes(layout: &DocumentLayout, w: usize, h: usize) -> Vec<(String, (i64, i64, i64, i64))> {
    layout
        .fields
        .iter()
        .map(|f| {
            let (x, y, bw, bh) = f.rect.to_pixels(w, h);
            let (x0, y0) = (x.clamp(0, w as i64), y.clamp(0, h as i64));
            let (x1, y1) = ((x + bw).clamp(0, w as i64), (y + bh).clamp(0, h as i64));
            (f.name.clone(), (x0, y0, (x1 - x0).max(1), (y1 - y0).max(1)))
        })
        .collect()
}

/// One line image per layout field, in layout order, each scaled to
/// [`LINE_HEIGHT`] rows.
pub fn extract_field_lines(doc: &Image, layout: &DocumentLayout) -> Vec<(String, Image)> {
    field_boxes(layout, doc.width(), doc.height())
        .into_iter()
        .map(|(name, (x, y, w, h))| {
            let crop = doc.crop(x, y, w, h).unwrap_or_else(|| Image::filled(1, 1, [255, 255, 255]));
            (name, resize_to_height(&crop, LINE_HEIGHT))
        })
        .collect()
}

/// Binary raster of one character at a fixed band height.
#[derive(Debug, Clone)]
pub struct GlyphTemplate {
    pub ch: char,
    pub typeface: Typeface,
    pub width: usize,
    pub ink: Vec<bool>,
}

impl GlyphTemplate {
    /// The raster as 0/1 values with `pad` blank columns on both sides.
    pub fn padded(&self, pad: usize) -> Vec<f32> {
        let w = self.width + 2 * pad;
        let mut out = vec![0f32; w * (self.ink.len() / self.width)];
        for (i, &b) in self.ink.iter().enumerate() {
            out[(i / self.width) * w + pad + i % self.width] = b as u8 as f32;
        }
        out
    }
}

/// Templates for every non-space character of the font in both typefaces.
#[derive(Debug, Clone)]
pub struct GlyphTemplates {
    pub height: usize,
    pub glyphs: Vec<GlyphTemplate>,
}

impl GlyphTemplates {
    pub fn new(height: usize) -> Self {
        let mut glyphs = Vec::new();
        for tf in Typeface::ALL {
            for ch in font::CHARSET.chars().filter(|&c| c != ' ') {
                let (w, _, cov) = font::coverage(&ch.to_string(), height as f64, tf).expect("charset glyph");
                glyphs.push(GlyphTemplate { ch, typeface: tf, width: w, ink: cov.iter().map(|&c| c >= 0.5).collect() });
            }
        }
        GlyphTemplates { height, glyphs }
    }

    /// Characters covered by the templates.
    pub fn charset(&self) -> String {
        let mut cs: Vec<char> = self.glyphs.iter().map(|g| g.ch).collect();
        cs.sort_unstable();
        cs.dedup();
        cs.into_iter().collect()
    }
}

impl Default for GlyphTemplates {
    fn default() -> Self {
        GlyphTemplates::new(LINE_HEIGHT)
    }
}

/// Otsu threshold of a gray-level histogram: the level `t` maximizing the
/// between-class variance of `<= t` versus `> t`.
pub fn otsu_threshold(gray: &[u8]) -> u8 {
    let mut hist = [0u64; 256];
    for &g in gray {
        hist[g as usize] += 1;
    }
    let total = gray.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let (mut best, mut best_t) = (-1.0, 0u8);
    for t in 0..256 {
        w0 += hist[t] as f64;
        sum0 += t as f64 * hist[t] as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let (m0, m1) = (sum0 / w0, (sum_all - sum0) / w1);
        let between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if between > best {
            best = between;
            best_t = t as u8;
        }
    }
    best_t
}

/// Column ranges `[start, end)` of ink, merging runs separated by fewer
/// than `min_gap` blank columns.
pub fn column_segments(ink_cols: &[bool], min_gap: usize) -> Vec<(usize, usize)> {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut x = 0;
    while x < ink_cols.len() {
        if !ink_cols[x] {
            x += 1;
            continue;
        }
        let start = x;
        while x < ink_cols.len() && ink_cols[x] {
            x += 1;
        }
        match runs.last_mut() {
            Some(last) if start - last.1 < min_gap => last.1 = x,
            _ => runs.push((start, x)),
        }
    }
    runs
}

/// Zero-mean normalized cross-correlation; 0 when either side is flat.
pub fn ncc(a: &[f32], b: &[f32]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().map(|&v| v as f64).sum::<f64>() / n, b.iter().map(|&v| v as f64).sum::<f64>() / n);
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x as f64 - ma, y as f64 - mb);
        ab += dx * dy;
        aa += dx * dx;
        bb += dy * dy;
    }
    if aa <= 0.0 || bb <= 0.0 {
        0.0
    } else {
        ab / (aa * bb).sqrt()
    }
}

/// Binarized line plus its ink level normalized between the paper and
/// ink means, both row-major.
struct InkMask {
    w: usize,
    h: usize,
    ink: Vec<bool>,
    level: Vec<f32>,
}

impl InkMask {
    fn at(&self, x: usize, y: usize) -> bool {
        self.ink[y * self.w + x]
    }

    fn level_at(&self, x: i64, y: i64) -> f64 {
        let x = x.clamp(0, self.w as i64 - 1) as usize;
        let y = y.clamp(0, self.h as i64 - 1) as usize;
        self.level[y * self.w + x] as f64
    }

    /// Bilinear resample of the ink level over `cols x rows` to `tw x th`,
    /// with `pad` blank columns added on both sides.
    fn resample(&self, cols: (usize, usize), rows: (usize, usize), tw: usize, th: usize, pad: usize) -> Vec<f32> {
        let (cw, rh) = ((cols.1 - cols.0) as f64, (rows.1 - rows.0) as f64);
        let mut out = Vec::with_capacity((tw + 2 * pad) * th);
        for ty in 0..th {
            let sy = rows.0 as f64 + (ty as f64 + 0.5) * rh / th as f64;
            let (y0, fy) = ((sy - 0.5).floor() as i64, (sy - 0.5) - (sy - 0.5).floor());
            for tx in 0..tw + 2 * pad {
                let sx = cols.0 as f64 + (tx as f64 - pad as f64 + 0.5) * cw / tw as f64;
                if sx < cols.0 as f64 || sx >= cols.1 as f64 {
                    out.push(0.0);
                    continue;
                }
                let (x0, fx) = ((sx - 0.5).floor() as i64, (sx - 0.5) - (sx - 0.5).floor());
                let top = self.level_at(x0, y0) * (1.0 - fx) + self.level_at(x0 + 1, y0) * fx;
                let bot = self.level_at(x0, y0 + 1) * (1.0 - fx) + self.level_at(x0 + 1, y0 + 1) * fx;
                out.push((top * (1.0 - fy) + bot * fy) as f32);
            }
        }
        out
    }
}

/// Keeps the connected ink components (8-neighborhood) with at least
/// `min_area` pixels.
fn drop_specks(mask: &mut InkMask, min_area: usize) {
    let (w, h) = (mask.w, mask.h);
    let mut seen = vec![false; w * h];
    let mut stack = Vec::new();
    let mut comp = Vec::new();
    for start in 0..w * h {
        if !mask.ink[start] || seen[start] {
            continue;
        }
        comp.clear();
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            comp.push(i);
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if mask.ink[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        if comp.len() < min_area {
            for &i in &comp {
                mask.ink[i] = false;
                mask.level[i] = 0.0;
            }
        }
    }
}

/// Rows `[top, bottom)` of the text band: the run of inked rows, allowing
/// single blank rows, that holds the most ink.
fn text_band(mask: &InkMask) -> Option<(usize, usize)> {
    let counts: Vec<usize> = (0..mask.h).map(|y| (0..mask.w).filter(|&x| mask.at(x, y)).count()).collect();
    let mut best: Option<(usize, usize, usize)> = None;
    let mut y = 0;
    while y < mask.h {
        if counts[y] == 0 {
            y += 1;
            continue;
        }
        let (start, mut end, mut sum) = (y, y, 0);
        while y < mask.h && (counts[y] > 0 || (y + 1 < mask.h && counts[y + 1] > 0)) {
            sum += counts[y];
            if counts[y] > 0 {
                end = y + 1;
            }
            y += 1;
        }
        if best.is_none_or(|b| sum > b.2) {
            best = Some((start, end, sum));
        }
    }
    best.map(|(a, b, _)| (a, b))
}

/// Blank template columns added around each glyph before correlation.
const PAD: usize = 3;

/// Baseline recognizer: Otsu binarization, column segmentation and
/// normalized cross-correlation against glyph templates.
#[derive(Debug, Clone)]
pub struct TemplateRecognizer {
    pub templates: GlyphTemplates,
    /// Runs closer than this many blank columns form one segment.
    pub merge_gap: usize,
    /// Smallest gray-level distance between ink and paper means for a line
    /// to count as non-blank.
    pub min_contrast: f64,
}

impl Default for TemplateRecognizer {
    fn default() -> Self {
        TemplateRecognizer { templates: GlyphTemplates::default(), merge_gap: 3, min_contrast: 40.0 }
    }
}

impl TemplateRecognizer {
    fn binarize(&self, line: &Image) -> Option<InkMask> {
        let gray = line.to_gray();
        let t = otsu_threshold(&gray);
        let (mut dark, mut nd, mut light, mut nl) = (0.0, 0usize, 0.0, 0usize);
        for &g in &gray {
            if g <= t {
                dark += g as f64;
                nd += 1;
            } else {
                light += g as f64;
                nl += 1;
            }
        }
        if nd == 0 || nl == 0 || light / nl as f64 - dark / nd as f64 <= self.min_contrast {
            return None;
        }
        let (ink_mean, paper_mean) = (dark / nd as f64, light / nl as f64);
        let level = gray.iter().map(|&g| ((paper_mean - g as f64) / (paper_mean - ink_mean)).clamp(0.0, 1.0) as f32).collect();
        let mut mask = InkMask { w: line.width(), h: line.height(), ink: gray.iter().map(|&g| g <= t).collect(), level };
        let min_area = (line.height() * line.height() / 400).max(2);
        drop_specks(&mut mask, min_area);
        Some(mask)
    }

    /// Best template for the columns `cols` of the band, with its score.
    fn best_glyph(&self, mask: &InkMask, cols: (usize, usize), band: (usize, usize)) -> (char, f64) {
        let th = self.templates.height;
        let scale = th as f64 / (band.1 - band.0) as f64;
        let seg_w = (cols.1 - cols.0) as f64 * scale;
        let mut best = (' ', f64::NEG_INFINITY);
        for g in &self.templates.glyphs {
            let ratio = seg_w / g.width as f64;
            if !(0.5..=2.0).contains(&ratio) {
                continue;
            }
            let sample = mask.resample(cols, band, g.width, th, PAD);
            let tmpl = g.padded(PAD);
            let penalty = (-(ratio.ln().powi(2)) / (2.0 * 0.3f64.powi(2))).exp();
            let score = ncc(&sample, &tmpl) * penalty;
            if score > best.1 {
                best = (g.ch, score);
            }
        }
        best
    }
}

impl Recognizer for TemplateRecognizer {
    fn recognize(&self, line: &Image) -> (String, f64) {
        if line.width() == 0 || line.height() == 0 {
            return (String::new(), 0.0);
        }
        let Some(mask) = self.binarize(line) else { return (String::new(), 0.0) };
        let Some(band) = text_band(&mask) else { return (String::new(), 0.0) };
        if band.1 - band.0 < 4 {
            return (String::new(), 0.0);
        }
        let ink_cols: Vec<bool> = (0..mask.w).map(|x| (band.0..band.1).any(|y| mask.at(x, y))).collect();
        let segments = column_segments(&ink_cols, self.merge_gap);
        let unit = font::unit((band.1 - band.0) as f64, Typeface::Sans);
        let space_gap = unit * (font::GAP + (font::SPACE + font::GAP) / 2.0);
        let (mut text, mut total, mut n) = (String::new(), 0.0, 0usize);
        for (i, &seg) in segments.iter().enumerate() {
            if i > 0 && (seg.0 - segments[i - 1].1) as f64 > space_gap {
                text.push(' ');
            }
            let (ch, score) = self.best_glyph(&mask, seg, band);
            if score == f64::NEG_INFINITY {
                continue;
            }
            text.push(ch);
            total += score.clamp(0.0, 1.0);
            n += 1;
        }
        if n == 0 {
            return (String::new(), 0.0);
        }
        (text, total / n as f64)
    }
}

/// What a field reading produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldReading {
    pub text: String,
    pub conf: f64,
}

/// Everything the pipeline produced for one photo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentReadout {
    pub class: DocumentClass,
    pub probs: Vec<f64>,
    pub quad: Quad,
    pub fields: BTreeMap<String, FieldReading>,
}

/// Rectifies, crops and recognizes every field of `layout`.
pub fn read_fields(
    photo: &Image,
    quad: &Quad,
    layout: &DocumentLayout,
    recognizer: &dyn Recognizer,
    exec: Exec,
) -> Result<BTreeMap<String, FieldReading>> {
    let doc = rectify(photo, quad, layout, RECTIFIED_WIDTH)?;
    let lines = extract_field_lines(&doc, layout);
    let read = map_slice(exec, &lines, |(name, img)| {
        let (text, conf) = recognizer.recognize(img);
        (name.clone(), FieldReading { text, conf })
    });
    Ok(read.into_iter().collect())
}

/// The whole pipeline: locate, classify, rectify, extract and recognize.
pub fn read_document(
    photo: &Image,
    model: &Network<f32>,
    layouts: &LayoutRegistry,
    recognizer: &dyn Recognizer,
    params: &LocatorParams,
    exec: Exec,
) -> Result<DocumentReadout> {
    let quad = locate(photo, params)?;
    let (class, probs) = classify(model, &preprocess(photo, &quad)?)?;
    let layout = layouts.get(class)?;
    let fields = read_fields(photo, &quad, layout, recognizer, exec)?;
    Ok(DocumentReadout { class, probs, quad, fields })
}
