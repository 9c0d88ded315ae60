//! The four photo degradation stages: perspective, contrast and brightness,
//! sensor noise and JPEG compression.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{decode_jpeg, encode_jpeg, solve_homography, to_channel, warp_homography, Image, Point, Quad};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DegradationParams {
    /// Outward vertex displacement range, as fractions of the shortest
    /// document side.
    pub persp_min: f64,
    pub persp_max: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    /// Standard deviation of the additive noise in gray levels.
    pub sigma: f64,
    pub quality: u8,
}

impl Default for DegradationParams {
    fn default() -> Self {
        DegradationParams {
            persp_min: 0.05,
            persp_max: 0.15,
            alpha_min: 0.85,
            alpha_max: 1.05,
            beta_min: -30.0,
            beta_max: 20.0,
            sigma: 4.0,
            quality: 70,
        }
    }
}

impl DegradationParams {
    /// Parameters whose only effect is a JPEG round trip at quality 100.
    pub fn identity() -> Self {
        DegradationParams {
            persp_min: 0.0,
            persp_max: 0.0,
            alpha_min: 1.0,
            alpha_max: 1.0,
            beta_min: 0.0,
            beta_max: 0.0,
            sigma: 0.0,
            quality: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParam(m.into()));
        if !(0.0 <= self.persp_min && self.persp_min <= self.persp_max && self.persp_max < 0.5) {
            return bad("perspective range must satisfy 0 <= min <= max < 0.5");
        }
        if !(self.alpha_min <= self.alpha_max && self.beta_min <= self.beta_max) {
            return bad("empty contrast or brightness range");
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad("noise sigma must be non-negative");
        }
        if !(1..=100).contains(&self.quality) {
            return Err(Error::InvalidQuality(self.quality));
        }
        Ok(())
    }
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Moves every vertex outward along its centroid ray and re-warps the
/// photo so the document follows its corners.
pub fn perturb_vertices(photo: &Image, quad: &Quad, p: &DegradationParams, rng: &mut impl Rng) -> Result<(Image, Quad)> {
    let l = quad.shortest_side();
    let c = quad.centroid();
    let lengths: [f64; 4] = std::array::from_fn(|_| uniform(rng, p.persp_min * l, p.persp_max * l));
    if lengths.iter().all(|&d| d == 0.0) {
        return Ok((photo.clone(), *quad));
    }
    let old = quad.vertices();
    let moved: [Point; 4] = std::array::from_fn(|i| {
        let (dx, dy) = (old[i].x - c.x, old[i].y - c.y);
        let n = dx.hypot(dy);
        Point::new(old[i].x + dx / n * lengths[i], old[i].y + dy / n * lengths[i])
    });
    let (w, h) = (photo.width() as f64, photo.height() as f64);
    if moved.iter().any(|v| v.x < 0.0 || v.y < 0.0 || v.x > w || v.y > h) {
        return Err(Error::PlacementInfeasible("perturbed vertex leaves the photo".into()));
    }
    let new_quad = Quad::new(moved)?;
    let new_to_old = solve_homography(new_quad.vertices(), old)?;
    Ok((warp_homography(photo, &new_to_old, photo.width(), photo.height(), 2), new_quad))
}

/// `alpha * p + beta` per channel, rounded and clipped.
pub fn adjust_contrast_brightness(img: &Image, alpha: f64, beta: f64) -> Image {
    let mut out = img.clone();
    for v in out.data_mut() {
        *v = to_channel(alpha * *v as f64 + beta);
    }
    out
}

/// Adds zero-mean Gaussian noise to every channel.
pub fn add_noise(img: &Image, sigma: f64, rng: &mut impl Rng) -> Result<Image> {
    let mut out = img.clone();
    if sigma == 0.0 {
        return Ok(out);
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParam(e.to_string()))?;
    for v in out.data_mut() {
        *v = to_channel(*v as f64 + normal.sample(rng));
    }
    Ok(out)
}

pub fn jpeg_round_trip(img: &Image, quality: u8) -> Result<Image> {
    decode_jpeg(&encode_jpeg(img, quality)?)
}

/// All four stages, returning the compressed JPEG stream of the final
/// photo together with the moved quad.
pub fn degrade_to_jpeg(photo: &Image, quad: &Quad, p: &DegradationParams, rng: &mut impl Rng) -> Result<(Vec<u8>, Quad)> {
    p.validate()?;
    let (img, quad) = perturb_vertices(photo, quad, p, rng)?;
    let alpha = uniform(rng, p.alpha_min, p.alpha_max);
    let beta = uniform(rng, p.beta_min, p.beta_max);
    let img = adjust_contrast_brightness(&img, alpha, beta);
    let img = add_noise(&img, p.sigma, rng)?;
    Ok((encode_jpeg(&img, p.quality)?, quad))
}

/// All four stages in order. Output dimensions equal the input's.
pub fn degrade_pipeline(photo: &Image, quad: &Quad, p: &DegradationParams, rng: &mut impl Rng) -> Result<(Image, Quad)> {
    let (bytes, quad) = degrade_to_jpeg(photo, quad, p, rng)?;
    Ok((decode_jpeg(&bytes)?, quad))
}

/// Contrast, brightness and noise with parameters drawn from `p`, with no
/// geometric change and no compression.
pub fn photometric(img: &Image, p: &DegradationParams, rng: &mut impl Rng) -> Result<Image> {
    let alpha = uniform(rng, p.alpha_min, p.alpha_max);
    let beta = uniform(rng, p.beta_min, p.beta_max);
    add_noise(&adjust_contrast_brightness(img, alpha, beta), p.sigma, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn contrast_brightness_arithmetic() {
        let img = Image::filled(2, 1, [100, 250, 0]);
        assert_eq!(adjust_contrast_brightness(&img, 0.85, -30.0).get(0, 0), [55, 182, 0]);
        assert_eq!(adjust_contrast_brightness(&img, 1.05, 20.0).get(1, 0), [125, 255, 20]);
        assert_eq!(adjust_contrast_brightness(&img, 1.0, 0.0), img);
    }

    #[test]
    fn displacement_lengths_stay_in_range() {
        let photo = Image::filled(600, 500, [9, 9, 9]);
        let quad = Quad::rect(200.0, 150.0, 400.0, 350.0).unwrap();
        let p = DegradationParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let (_, q) = perturb_vertices(&photo, &quad, &p, &mut rng).unwrap();
            for (a, b) in quad.vertices().iter().zip(q.vertices()) {
                let d = a.dist(*b);
                assert!((10.0 - 1e-9..=30.0 + 1e-9).contains(&d), "{d}");
                let c = quad.centroid();
                let cross = (a.x - c.x) * (b.y - c.y) - (a.y - c.y) * (b.x - c.x);
                assert!(cross.abs() < 1e-6);
            }
        }
    }

    #[test]
    fn zero_perspective_is_identity_and_exits_are_errors() {
        let photo = Image::from_fn(80, 60, |x, y| [x as u8, y as u8, 3]);
        let quad = Quad::rect(20.0, 15.0, 60.0, 45.0).unwrap();
        let (img, q) = perturb_vertices(&photo, &quad, &DegradationParams::identity(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!((img, q), (photo.clone(), quad));
        let big = DegradationParams { persp_min: 0.45, persp_max: 0.49, ..Default::default() };
        let edge = Quad::rect(1.0, 1.0, 79.0, 59.0).unwrap();
        let r = perturb_vertices(&photo, &edge, &big, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(r, Err(Error::PlacementInfeasible(_))));
    }

    #[test]
    fn identity_pipeline_is_a_jpeg_round_trip() {
        let photo = Image::from_fn(64, 48, |x, y| [(x * 4) as u8, (y * 5) as u8, 128]);
        let quad = Quad::rect(16.0, 12.0, 48.0, 36.0).unwrap();
        let (img, q) = degrade_pipeline(&photo, &quad, &DegradationParams::identity(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(q, quad);
        assert_eq!(img, jpeg_round_trip(&photo, 100).unwrap());
    }

    #[test]
    fn pipeline_is_deterministic_and_keeps_size() {
        let photo = Image::from_fn(200, 150, |x, y| [(x + y) as u8, 40, 200]);
        let quad = Quad::rect(60.0, 40.0, 140.0, 110.0).unwrap();
        let p = DegradationParams::default();
        let a = degrade_pipeline(&photo, &quad, &p, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let b = degrade_pipeline(&photo, &quad, &p, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.0.width(), a.0.height()), (200, 150));
    }
}
