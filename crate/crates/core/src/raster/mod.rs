//! RGB rasters, color metric, projective geometry, resampling and codecs.
//!
//! Coordinates put the origin at the top-left corner of the image, `x` to
//! the right and `y` downward. Pixel `(col, row)` covers the unit square
//! `[col, col+1) x [row, row+1)` and its center sits at `(col+0.5, row+0.5)`.

mod codec;
mod geometry;
mod warp;

pub use codec::{decode_image, decode_jpeg, encode_jpeg, encode_png, load_image, save_jpeg, save_png};
pub use geometry::{point_in_quad, quad_row_spans, solve_homography, Homography, Point, Quad};
pub use warp::{resize, resize_to_height, sample_bilinear, warp_homography, warp_perspective};

use crate::error::{Error, Result};

pub type Rgb = [u8; 3];

/// Rounds half-way cases to the nearest even integer.
#[inline]
pub fn round_half_even(x: f64) -> f64 {
    x.round_ties_even()
}

/// Rounds and clamps a channel value into `0..=255`.
#[inline]
pub fn to_channel(v: f64) -> u8 {
    round_half_even(v).clamp(0.0, 255.0) as u8
}

/// Euclidean distance between two RGB colors.
#[inline]
pub fn color_distance(p: Rgb, q: Rgb) -> f64 {
    (color_distance_sq(p, q) as f64).sqrt()
}

/// Squared Euclidean distance, exact in integers.
#[inline]
pub fn color_distance_sq(p: Rgb, q: Rgb) -> u32 {
    let dr = p[0] as i32 - q[0] as i32;
    let dg = p[1] as i32 - q[1] as i32;
    let db = p[2] as i32 - q[2] as i32;
    (dr * dr + dg * dg + db * db) as u32
}

/// Row-major 8-bit RGB raster.
#[derive(Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for Image {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Image({}x{})", self.width, self.height)
    }
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, [0, 0, 0])
    }

    pub fn filled(width: usize, height: usize, color: Rgb) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&color);
        }
        Image { width, height, data }
    }

    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height * 3 {
            return Err(Error::ShapeMismatch(format!(
                "{} bytes for a {width}x{height} RGB image",
                data.len()
            )));
        }
        Ok(Image { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Rgb) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Image { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Rgb {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn put(&mut self, x: usize, y: usize, c: Rgb) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&c);
    }

    /// Alpha-blends `c` over pixel `(x, y)` with coverage `a` in `[0, 1]`.
    #[inline]
    pub fn blend(&mut self, x: usize, y: usize, c: Rgb, a: f64) {
        let i = (y * self.width + x) * 3;
        for k in 0..3 {
            let old = self.data[i + k] as f64;
            self.data[i + k] = to_channel(old + (c[k] as f64 - old) * a);
        }
    }

    pub fn pixels(&self) -> impl Iterator<Item = Rgb> + '_ {
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    /// Copies out the rectangle `[x, x+w) x [y, y+h)`, clipped to the image.
    /// Returns `None` when the clipped rectangle is empty.
    pub fn crop(&self, x: i64, y: i64, w: i64, h: i64) -> Option<Image> {
        let x0 = x.clamp(0, self.width as i64) as usize;
        let y0 = y.clamp(0, self.height as i64) as usize;
        let x1 = (x + w).clamp(0, self.width as i64) as usize;
        let y1 = (y + h).clamp(0, self.height as i64) as usize;
        if x1 <= x0 || y1 <= y0 {
            return None;
        }
        let mut data = Vec::with_capacity((x1 - x0) * (y1 - y0) * 3);
        for row in y0..y1 {
            let s = (row * self.width + x0) * 3;
            data.extend_from_slice(&self.data[s..s + (x1 - x0) * 3]);
        }
        Some(Image {
            width: x1 - x0,
            height: y1 - y0,
            data,
        })
    }

    /// Fills an axis-aligned rectangle, clipped to the image.
    pub fn fill_rect(&mut self, x: i64, y: i64, w: i64, h: i64, c: Rgb) {
        let x0 = x.clamp(0, self.width as i64) as usize;
        let y0 = y.clamp(0, self.height as i64) as usize;
        let x1 = (x + w).clamp(0, self.width as i64) as usize;
        let y1 = (y + h).clamp(0, self.height as i64) as usize;
        for row in y0..y1 {
            for col in x0..x1 {
                self.put(col, row, c);
            }
        }
    }

    /// Luma (BT.601) per pixel.
    pub fn to_gray(&self) -> Vec<u8> {
        self.pixels()
            .map(|[r, g, b]| to_channel(0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64))
            .collect()
    }

    /// Mean color over pixels selected by `keep(x, y)`.
    pub fn mean_color(&self, mut keep: impl FnMut(usize, usize) -> bool) -> Option<[f64; 3]> {
        let mut sum = [0.0; 3];
        let mut n = 0usize;
        for y in 0..self.height {
            for x in 0..self.width {
                if keep(x, y) {
                    let p = self.get(x, y);
                    for k in 0..3 {
                        sum[k] += p[k] as f64;
                    }
                    n += 1;
                }
            }
        }
        (n > 0).then(|| sum.map(|s| s / n as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn distance_examples() {
        assert_eq!(color_distance([0, 0, 0], [3, 4, 0]), 5.0);
        assert_eq!(color_distance([10, 20, 30], [10, 20, 30]), 0.0);
        let d = color_distance([0, 0, 0], [255, 255, 255]);
        assert!((d - 255.0 * 3f64.sqrt()).abs() < 1e-9);
        assert!((d - 441.673).abs() < 1e-3);
    }

    #[test]
    fn half_even_rounding() {
        assert_eq!(round_half_even(1.5), 2.0);
        assert_eq!(round_half_even(2.5), 2.0);
        assert_eq!(round_half_even(630.5), 630.0);
        assert_eq!(round_half_even(630.517), 631.0);
        assert_eq!(to_channel(282.5), 255);
        assert_eq!(to_channel(-3.0), 0);
    }

    #[test]
    fn raw_length_checked() {
        assert!(Image::from_raw(2, 2, vec![0; 11]).is_err());
        assert!(Image::from_raw(0, 2, vec![]).is_err());
        assert!(Image::from_raw(2, 2, vec![0; 12]).is_ok());
    }

    #[test]
    fn crop_clips() {
        let img = Image::from_fn(4, 3, |x, y| [x as u8, y as u8, 0]);
        let c = img.crop(2, 1, 5, 5).unwrap();
        assert_eq!((c.width(), c.height()), (2, 2));
        assert_eq!(c.get(0, 0), [2, 1, 0]);
        assert!(img.crop(4, 0, 2, 2).is_none());
    }

    proptest! {
        #[test]
        fn triangle_inequality(a in any::<[u8; 3]>(), b in any::<[u8; 3]>(), c in any::<[u8; 3]>()) {
            let ab = color_distance(a, b);
            let bc = color_distance(b, c);
            let ac = color_distance(a, c);
            prop_assert!(ac <= ab + bc + 1e-9);
            prop_assert_eq!(ab, color_distance(b, a));
        }
    }
}
