//! Document vertex detection from background color statistics.
//!
//! Pixels are sampled from a frame along the image border that is assumed to
//! contain only background. Each sample selects every pixel of similar
//! color, with a per-sample threshold lowered until almost nothing inside
//! the central starting rectangle is selected. The union of the selections
//! is the background mask `a`. The document quad is then grown outward from
//! the starting rectangle while the goodness
//!
//! ```text
//! c = sum a * !b + d * sum !a * b
//! ```
//!
//! keeps increasing, where `b` is the pixel-center rasterization of the
//! candidate quad.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::raster::{color_distance_sq, quad_row_spans, round_half_even, Image, Point, Quad, Rgb};
use crate::sat::SummedAreaTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocatorParams {
    /// Number of background color samples.
    pub samples: usize,
    /// Starting color threshold for every sample.
    pub initial_threshold: u32,
    /// Weight of non-background pixels inside the quad.
    pub weight: f64,
    pub outer_frac: f64,
    pub inner_frac: f64,
    /// Largest fraction of all pixels a sample may select inside the
    /// starting rectangle.
    pub stop_frac: f64,
    /// Vertex step in pixels; `None` derives it from the image size.
    pub step_px: Option<u32>,
    /// After the outward ascent, keep moving vertices in any of the eight
    /// directions while the goodness strictly increases.
    pub refine: bool,
    pub seed: u64,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for LocatorParams {
    fn default() -> Self {
        LocatorParams {
            samples: 100,
            initial_threshold: 25,
            weight: 1.5,
            outer_frac: 0.07,
            inner_frac: 0.30,
            stop_frac: 0.0001,
            step_px: None,
            refine: true,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

impl LocatorParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.samples >= 1
            && self.initial_threshold >= 1
            && self.weight > 0.0
            && 0.0 < self.outer_frac
            && self.outer_frac < self.inner_frac
            && self.inner_frac < 0.5
            && 0.0 < self.stop_frac
            && self.stop_frac < 1.0
            && self.step_px != Some(0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParam(format!("locator parameters {self:?}")))
        }
    }

    /// Outward step for a `w x h` image.
    pub fn step_for(&self, w: usize, h: usize) -> u32 {
        self.step_px
            .unwrap_or_else(|| round_half_even(0.005 * w.min(h) as f64).max(1.0) as u32)
    }
}

/// Per-pixel background selection (the `a` field of the goodness).
#[derive(Clone, PartialEq, Eq)]
pub struct SelectionMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl std::fmt::Debug for SelectionMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SelectionMask({}x{}, {} set)", self.width, self.height, self.count())
    }
}

impl SelectionMask {
    pub fn empty(width: usize, height: usize) -> Self {
        SelectionMask {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        SelectionMask { width, height, bits }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn union_with(&mut self, other: &SelectionMask) {
        debug_assert_eq!(self.bits.len(), other.bits.len());
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= *b;
        }
    }

    pub fn is_subset_of(&self, other: &SelectionMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !a || *b)
    }
}

/// Integer pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl PixelRect {
    #[inline]
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regions {
    /// Background is sampled outside this rectangle.
    pub frame: PixelRect,
    pub start: Quad,
}

pub fn init_regions(width: usize, height: usize, params: &LocatorParams) -> Result<Regions> {
    if width < 20 || height < 20 {
        return Err(Error::ImageTooSmall { width, height });
    }
    let at = |frac: f64, n: usize| round_half_even(frac * n as f64) as usize;
    let frame = PixelRect {
        x0: at(params.outer_frac, width),
        y0: at(params.outer_frac, height),
        x1: at(1.0 - params.outer_frac, width),
        y1: at(1.0 - params.outer_frac, height),
    };
    let (sx0, sy0) = (at(params.inner_frac, width), at(params.inner_frac, height));
    let (sx1, sy1) = (at(1.0 - params.inner_frac, width), at(1.0 - params.inner_frac, height));
    if frame.x1 <= frame.x0 || frame.y1 <= frame.y0 || sx1 <= sx0 || sy1 <= sy0 {
        return Err(Error::ImageTooSmall { width, height });
    }
    let start = Quad::rect(sx0 as f64, sy0 as f64, sx1 as f64, sy1 as f64)?;
    Ok(Regions { frame, start })
}

/// Lowers the threshold for one sample color until the pixels it selects
/// inside `start` number at most `stop_frac` of the image.
///
/// Returns the final threshold and the selection `distance < threshold`.
pub fn adapt_threshold(
    img: &Image,
    sample: Rgb,
    start: &Quad,
    params: &LocatorParams,
) -> (u32, SelectionMask) {
    let (w, h) = (img.width(), img.height());
    let t0 = params.initial_threshold;
    let limit = params.stop_frac * (w * h) as f64;

    // hist[t]: start-region pixels first selected at threshold t, i.e. with
    // (t-1)^2 <= dist^2 < t^2.
    let mut hist = vec![0usize; t0 as usize + 2];
    for (row, &(s, e)) in quad_row_spans(start, w, h).iter().enumerate() {
        for col in s..e {
            let d2 = color_distance_sq(img.get(col, row), sample);
            // d2 < 195076, so the float square root is exact on perfect squares
            let t = (d2 as f64).sqrt() as usize + 1;
            hist[t.min(t0 as usize + 1)] += 1;
        }
    }
    let mut selected: usize = hist[..=t0 as usize].iter().sum();
    let mut t = t0;
    while t > 0 && selected as f64 > limit {
        selected -= hist[t as usize];
        t -= 1;
    }
    let t2 = t * t;
    let mask = SelectionMask {
        width: w,
        height: h,
        bits: img.pixels().map(|p| color_distance_sq(p, sample) < t2).collect(),
    };
    (t, mask)
}

/// Draws `samples` positions uniformly, with replacement, from outside the
/// frame rectangle.
pub fn sample_outer_pixels(w: usize, h: usize, frame: &PixelRect, n: usize, seed: u64) -> Vec<(usize, usize)> {
    let outer: Vec<(usize, usize)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| !frame.contains(x, y))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| outer[rng.random_range(0..outer.len())]).collect()
}

/// Union of the per-sample selections.
pub fn build_background_mask(img: &Image, params: &LocatorParams) -> Result<SelectionMask> {
    params.validate()?;
    let (w, h) = (img.width(), img.height());
    let regions = init_regions(w, h, params)?;
    let positions = sample_outer_pixels(w, h, &regions.frame, params.samples, params.seed);
    let mask = exec::fold_range(
        params.exec,
        positions.len(),
        || SelectionMask::empty(w, h),
        |mut acc, i| {
            let (x, y) = positions[i];
            let (_, m) = adapt_threshold(img, img.get(x, y), &regions.start, params);
            acc.union_with(&m);
            acc
        },
        |mut a, b| {
            a.union_with(&b);
            a
        },
    );
    Ok(mask)
}

/// Goodness by direct double loop over every pixel.
pub fn goodness_naive(mask: &SelectionMask, quad: &Quad, weight: f64) -> f64 {
    let mut selected_outside = 0u64;
    let mut unselected_inside = 0u64;
    for y in 0..mask.height {
        for x in 0..mask.width {
            let a = mask.get(x, y);
            let b = quad.contains(Point::new(x as f64 + 0.5, y as f64 + 0.5));
            selected_outside += (a && !b) as u64;
            unselected_inside += (!a && b) as u64;
        }
    }
    selected_outside as f64 + weight * unselected_inside as f64
}

/// Goodness evaluator backed by a summed-area table of the mask: each call
/// costs one span lookup per image row.
pub struct Goodness {
    sat: SummedAreaTable,
    weight: f64,
}

impl Goodness {
    pub fn new(mask: &SelectionMask, weight: f64) -> Self {
        Goodness {
            sat: SummedAreaTable::from_mask(mask.width, mask.height, &mask.bits),
            weight,
        }
    }

    /// Returns `(pixels inside, selected pixels inside)`.
    pub fn coverage(&self, quad: &Quad) -> (u64, u64) {
        let mut inside = 0u64;
        let mut sel_inside = 0u64;
        for (row, &(s, e)) in quad_row_spans(quad, self.sat.width(), self.sat.height()).iter().enumerate() {
            if e > s {
                inside += (e - s) as u64;
                sel_inside += self.sat.sum(s, row, e, row + 1);
            }
        }
        (inside, sel_inside)
    }

    pub fn eval(&self, quad: &Quad) -> f64 {
        let (inside, sel_inside) = self.coverage(quad);
        let total_sel = self.sat.total();
        (total_sel - sel_inside) as f64 + self.weight * (inside - sel_inside) as f64
    }
}

pub fn goodness(mask: &SelectionMask, quad: &Quad, weight: f64) -> f64 {
    Goodness::new(mask, weight).eval(quad)
}

/// Outward unit directions for each canonical vertex: diagonal, horizontal,
/// vertical.
const OUTWARD: [[(f64, f64); 3]; 4] = [
    [(-1.0, -1.0), (-1.0, 0.0), (0.0, -1.0)],
    [(1.0, -1.0), (1.0, 0.0), (0.0, -1.0)],
    [(1.0, 1.0), (1.0, 0.0), (0.0, 1.0)],
    [(-1.0, 1.0), (-1.0, 0.0), (0.0, 1.0)],
];

const ALL_MOVES: [(f64, f64); 8] = [
    (-1.0, -1.0),
    (0.0, -1.0),
    (1.0, -1.0),
    (1.0, 0.0),
    (1.0, 1.0),
    (0.0, 1.0),
    (-1.0, 1.0),
    (-1.0, 0.0),
];

/// Greedy outward coordinate ascent on the goodness.
///
/// Each sweep visits the vertices in canonical order and applies the best
/// strictly improving step among the three outward moves; the search stops
/// after a sweep without improvement. Vertices are clamped to the image
/// plane and moves that break convexity are skipped. With
/// [`LocatorParams::refine`] the same ascent is then continued with all
/// eight moves, which lets vertices that overshot come back.
pub fn optimize_vertices(mask: &SelectionMask, start: &Quad, params: &LocatorParams) -> Quad {
    let step = params.step_for(mask.width, mask.height) as f64;
    let eval = Goodness::new(mask, params.weight);
    let mut state = (*start, eval.eval(start));
    ascend(&eval, &mut state, step, |i| &OUTWARD[i][..]);
    if params.refine {
        ascend(&eval, &mut state, step, |_| &ALL_MOVES[..]);
    }
    state.0
}

fn ascend<'a>(
    eval: &Goodness,
    (quad, best): &mut (Quad, f64),
    step: f64,
    moves: impl Fn(usize) -> &'a [(f64, f64)],
) {
    let (w, h) = (eval.sat.width() as f64, eval.sat.height() as f64);
    loop {
        let mut improved = false;
        for i in 0..4 {
            let mut choice: Option<(Quad, f64)> = None;
            for &(dx, dy) in moves(i) {
                let mut v = *quad.vertices();
                let moved = Point::new(
                    (v[i].x + dx * step).clamp(0.0, w),
                    (v[i].y + dy * step).clamp(0.0, h),
                );
                if moved == v[i] {
                    continue;
                }
                v[i] = moved;
                let Ok(candidate) = Quad::new(v) else { continue };
                let c = eval.eval(&candidate);
                if c > choice.map_or(*best, |(_, c)| c) {
                    choice = Some((candidate, c));
                }
            }
            if let Some((q, c)) = choice {
                *quad = q;
                *best = c;
                improved = true;
            }
        }
        if !improved {
            return;
        }
    }
}

/// Finds the document quad in a photo.
pub fn locate(img: &Image, params: &LocatorParams) -> Result<Quad> {
    let regions = init_regions(img.width(), img.height(), params)?;
    let mask = build_background_mask(img, params)?;
    Ok(optimize_vertices(&mask, &regions.start, params))
}

/// JSON form `{"vertices": [[x, y], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocateResult {
    pub vertices: Quad,
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: Rgb = [40, 120, 60];
    const B: Rgb = [200, 190, 170];

    fn two_tone(w: usize, h: usize, doc: &Quad) -> Image {
        Image::from_fn(w, h, |x, y| {
            if doc.contains(Point::new(x as f64 + 0.5, y as f64 + 0.5)) {
                B
            } else {
                A
            }
        })
    }

    #[test]
    fn region_examples() {
        let p = LocatorParams::default();
        let r = init_regions(1000, 800, &p).unwrap();
        assert_eq!(r.frame, PixelRect { x0: 70, y0: 56, x1: 930, y1: 744 });
        assert_eq!(r.start, Quad::rect(300.0, 240.0, 700.0, 560.0).unwrap());
        let r = init_regions(100, 100, &p).unwrap();
        assert_eq!(r.start, Quad::rect(30.0, 30.0, 70.0, 70.0).unwrap());
        assert!(matches!(init_regions(10, 10, &p), Err(Error::ImageTooSmall { .. })));
    }

    #[test]
    fn threshold_two_tone() {
        let p = LocatorParams::default();
        let doc = Quad::rect(20.0, 15.0, 80.0, 65.0).unwrap();
        let img = two_tone(100, 80, &doc);
        let start = init_regions(100, 80, &p).unwrap().start;
        let (t, mask) = adapt_threshold(&img, A, &start, &p);
        assert_eq!(t, 25);
        let want = SelectionMask::from_fn(100, 80, |x, y| img.get(x, y) == A);
        assert_eq!(mask, want);
    }

    #[test]
    fn threshold_uniform_collapses() {
        let p = LocatorParams::default();
        let img = Image::filled(60, 50, A);
        let start = init_regions(60, 50, &p).unwrap().start;
        let (t, mask) = adapt_threshold(&img, A, &start, &p);
        assert_eq!(t, 0);
        assert_eq!(mask.count(), 0);
    }

    #[test]
    fn threshold_far_sample() {
        let p = LocatorParams::default();
        let img = Image::filled(60, 50, A);
        let start = init_regions(60, 50, &p).unwrap().start;
        let (t, mask) = adapt_threshold(&img, [255, 255, 255], &start, &p);
        assert_eq!(t, 25);
        assert_eq!(mask.count(), 0);
    }

    #[test]
    fn threshold_brute_force() {
        use rand::Rng;
        let p = LocatorParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let base: Rgb = [rng.random(), rng.random(), rng.random()];
            let img = Image::from_fn(40, 30, |_, _| {
                base.map(|c| (c as i32 + rng.random_range(-20..=20)).clamp(0, 255) as u8)
            });
            let start = init_regions(40, 30, &p).unwrap().start;
            let sample = img.get(1, 1);
            let (t, mask) = adapt_threshold(&img, sample, &start, &p);
            // Literal decrement loop.
            let count = |t: u32| {
                let mut n = 0;
                for y in 0..30 {
                    for x in 0..40 {
                        let c = Point::new(x as f64 + 0.5, y as f64 + 0.5);
                        if start.contains(c) && crate::raster::color_distance(img.get(x, y), sample) < t as f64 {
                            n += 1;
                        }
                    }
                }
                n
            };
            let mut want = 25;
            while want > 0 && count(want) as f64 > 0.0001 * 1200.0 {
                want -= 1;
            }
            assert_eq!(t, want);
            let (_, looser) = {
                let mut q = p.clone();
                q.initial_threshold = t + 1;
                q.stop_frac = 0.99;
                adapt_threshold(&img, sample, &start, &q)
            };
            assert!(mask.is_subset_of(&looser));
        }
    }

    #[test]
    fn background_mask_two_tone_and_uniform() {
        let p = LocatorParams::default();
        let doc = Quad::rect(20.0, 15.0, 80.0, 65.0).unwrap();
        let img = two_tone(100, 80, &doc);
        let mask = build_background_mask(&img, &p).unwrap();
        assert_eq!(mask, SelectionMask::from_fn(100, 80, |x, y| img.get(x, y) == A));
        assert_eq!(mask, build_background_mask(&img, &p).unwrap());

        let flat = Image::filled(50, 40, B);
        assert_eq!(build_background_mask(&flat, &p).unwrap().count(), 0);
    }

    #[test]
    fn goodness_examples() {
        let ones = SelectionMask::from_fn(10, 8, |_, _| true);
        assert_eq!(goodness(&ones, &Quad::frame(10, 8), 1.5), 0.0);
        let tiny = Quad::rect(0.0, 0.0, 0.2, 0.2).unwrap();
        assert_eq!(goodness(&ones, &tiny, 1.5), 80.0);

        let diag = SelectionMask::from_fn(2, 2, |x, y| x == y);
        let bottom_right = Quad::rect(1.0, 1.0, 2.0, 2.0).unwrap();
        assert_eq!(goodness(&diag, &bottom_right, 1.5), 1.0);
        assert_eq!(goodness_naive(&diag, &bottom_right, 1.5), 1.0);
    }

    #[test]
    fn recovers_rectangle() {
        let p = LocatorParams::default();
        let doc = Quad::rect(40.0, 30.0, 165.0, 125.0).unwrap();
        let img = two_tone(200, 150, &doc);
        let mask = SelectionMask::from_fn(200, 150, |x, y| img.get(x, y) == A);
        let start = init_regions(200, 150, &p).unwrap().start;
        let found = optimize_vertices(&mask, &start, &p);
        let step = p.step_for(200, 150) as f64;
        for (a, b) in found.vertices().iter().zip(doc.vertices()) {
            assert!((a.x - b.x).abs() <= step && (a.y - b.y).abs() <= step, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn empty_mask_expands_to_bounds() {
        let p = LocatorParams::default();
        let mask = SelectionMask::empty(64, 48);
        let start = init_regions(64, 48, &p).unwrap().start;
        assert_eq!(optimize_vertices(&mask, &start, &p), Quad::frame(64, 48));
        let img = Image::filled(64, 48, B);
        assert_eq!(locate(&img, &p).unwrap(), Quad::frame(64, 48));
    }

    #[test]
    fn maximum_is_fixed_point() {
        let p = LocatorParams::default();
        let doc = Quad::rect(40.0, 30.0, 160.0, 120.0).unwrap();
        let mask = SelectionMask::from_fn(200, 150, |x, y| !doc.contains(Point::new(x as f64 + 0.5, y as f64 + 0.5)));
        assert_eq!(optimize_vertices(&mask, &doc, &p), doc);
    }

    #[test]
    fn locate_two_tone_scene() {
        let p = LocatorParams::default();
        let doc = Quad::new([
            Point::new(52.3, 41.8),
            Point::new(250.1, 47.0),
            Point::new(243.6, 178.2),
            Point::new(47.9, 170.4),
        ])
        .unwrap();
        let img = two_tone(300, 220, &doc);
        let found = locate(&img, &p).unwrap();
        for (a, b) in found.vertices().iter().zip(doc.vertices()) {
            assert!(a.dist(*b) <= 0.01 * 220.0, "{a:?} vs {b:?}");
        }
        assert_eq!(found, locate(&img, &p).unwrap());
    }

    #[test]
    fn outward_only_ascent_never_retreats() {
        let p = LocatorParams { refine: false, ..Default::default() };
        let doc = Quad::new([
            Point::new(52.3, 41.8),
            Point::new(250.1, 47.0),
            Point::new(243.6, 178.2),
            Point::new(47.9, 170.4),
        ])
        .unwrap();
        let mask = SelectionMask::from_fn(300, 220, |x, y| !doc.contains(Point::new(x as f64 + 0.5, y as f64 + 0.5)));
        let start = init_regions(300, 220, &p).unwrap().start;
        let found = optimize_vertices(&mask, &start, &p);
        for (i, (a, s)) in found.vertices().iter().zip(start.vertices()).enumerate() {
            let (sx, sy) = OUTWARD[i][0];
            assert!((a.x - s.x) * sx >= 0.0 && (a.y - s.y) * sy >= 0.0);
        }
        let g = Goodness::new(&mask, p.weight);
        assert!(g.eval(&found) >= g.eval(&start));
        let refined = optimize_vertices(&mask, &start, &LocatorParams::default());
        assert!(g.eval(&refined) >= g.eval(&found));
    }

    #[test]
    fn sequential_and_parallel_masks_match() {
        let mut p = LocatorParams { samples: 30, ..Default::default() };
        let img = Image::from_fn(90, 70, |x, y| [(x * 3) as u8, (y * 3) as u8, ((x ^ y) * 2) as u8]);
        p.exec = Exec::Sequential;
        let a = build_background_mask(&img, &p).unwrap();
        p.exec = Exec::Parallel;
        assert_eq!(a, build_background_mask(&img, &p).unwrap());
    }
}
