//! Places a rendered document onto a background photo.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::locator::{init_regions, LocatorParams};
use crate::raster::{quad_row_spans, sample_bilinear, solve_homography, to_channel, Image, Point, Quad};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlacementParams {
    /// Range of the placed document width as a fraction of the photo width.
    pub min_width_frac: f64,
    pub max_width_frac: f64,
    /// Largest in-plane rotation in degrees.
    pub max_rotation_deg: f64,
    pub attempts: usize,
}

impl Default for PlacementParams {
    fn default() -> Self {
        PlacementParams { min_width_frac: 0.55, max_width_frac: 0.66, max_rotation_deg: 6.0, attempts: 200 }
    }
}

/// Whether a document quad respects the locator's assumptions for a
/// `w x h` photo: inside the outer frame, every vertex outside the starting
/// rectangle, and the starting rectangle inside the document.
pub fn placement_ok(q: &Quad, w: usize, h: usize) -> bool {
    let Ok(regions) = init_regions(w, h, &LocatorParams::default()) else { return false };
    let f = regions.frame;
    let inside_frame = q
        .vertices()
        .iter()
        .all(|v| v.x >= f.x0 as f64 && v.x <= f.x1 as f64 && v.y >= f.y0 as f64 && v.y <= f.y1 as f64);
    inside_frame && starts_inside(q, &regions.start)
}

/// Every vertex of `q` lies strictly outside `start`, and `start` lies
/// inside `q`.
pub fn starts_inside(q: &Quad, start: &Quad) -> bool {
    let (x0, y0, x1, y1) = start.bounds();
    let outside = q.vertices().iter().all(|v| v.x < x0 || v.x > x1 || v.y < y0 || v.y > y1);
    outside && start.vertices().iter().all(|&c| q.contains(c))
}

/// Draws a document position: scale, rotation and offset.
pub fn place_quad(doc_w: usize, doc_h: usize, w: usize, h: usize, p: &PlacementParams, rng: &mut impl Rng) -> Result<Quad> {
    let aspect = doc_w as f64 / doc_h as f64;
    for _ in 0..p.attempts.max(1) {
        let dw = rng.random_range(p.min_width_frac..=p.max_width_frac) * w as f64;
        let dh = dw / aspect;
        let theta = rng.random_range(-p.max_rotation_deg..=p.max_rotation_deg).to_radians();
        let c = Point::new(
            w as f64 * rng.random_range(0.45..=0.55),
            h as f64 * rng.random_range(0.45..=0.55),
        );
        let (s, co) = theta.sin_cos();
        let corner = |dx: f64, dy: f64| Point::new(c.x + dx * co - dy * s, c.y + dx * s + dy * co);
        let (hx, hy) = (dw / 2.0, dh / 2.0);
        let Ok(q) = Quad::new([corner(-hx, -hy), corner(hx, -hy), corner(hx, hy), corner(-hx, hy)]) else { continue };
        if placement_ok(&q, w, h) {
            return Ok(q);
        }
    }
    Err(Error::PlacementInfeasible(format!("{doc_w}x{doc_h} document in a {w}x{h} photo")))
}

/// Warps `doc` into `quad` over `bg`; pixels whose centers fall outside
/// the quad keep the background.
pub fn paste(doc: &Image, quad: &Quad, bg: &Image) -> Result<Image> {
    let to_doc = solve_homography(quad.vertices(), Quad::frame(doc.width(), doc.height()).vertices())?;
    let mut out = bg.clone();
    for (y, (x0, x1)) in quad_row_spans(quad, bg.width(), bg.height()).into_iter().enumerate() {
        for x in x0..x1 {
            let mut acc = [0.0; 3];
            for (sx, sy) in [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)] {
                let s = to_doc.apply(Point::new(x as f64 + sx, y as f64 + sy));
                let c = sample_bilinear(doc, s.x, s.y);
                for k in 0..3 {
                    acc[k] += c[k] / 4.0;
                }
            }
            out.put(x, y, acc.map(to_channel));
        }
    }
    Ok(out)
}

/// Places `doc` on `bg` at a random admissible position.
pub fn composite_on_background(doc: &Image, bg: &Image, p: &PlacementParams, rng: &mut impl Rng) -> Result<(Image, Quad)> {
    let (w, h) = (bg.width(), bg.height());
    if p.max_width_frac > 1.0 / 1.5 + 1e-9 || p.min_width_frac > p.max_width_frac {
        return Err(Error::InvalidParam("documents must be at most 2/3 of the background width".into()));
    }
    let quad = place_quad(doc.width(), doc.height(), w, h, p, rng)?;
    Ok((paste(doc, &quad, bg)?, quad))
}
