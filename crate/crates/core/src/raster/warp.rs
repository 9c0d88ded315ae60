use super::geometry::{solve_homography, Homography, Point, Quad};
use super::{round_half_even, to_channel, Image};
use crate::error::Result;

/// Bilinear sample at continuous position `(x, y)`, clamping to the nearest
/// edge pixel outside the image.
#[inline]
pub fn sample_bilinear(img: &Image, x: f64, y: f64) -> [f64; 3] {
    let w = img.width() as i64;
    let h = img.height() as i64;
    let u = x - 0.5;
    let v = y - 0.5;
    let x0f = u.floor();
    let y0f = v.floor();
    let fx = u - x0f;
    let fy = v - y0f;
    let x0 = (x0f as i64).clamp(0, w - 1) as usize;
    let x1 = (x0f as i64 + 1).clamp(0, w - 1) as usize;
    let y0 = (y0f as i64).clamp(0, h - 1) as usize;
    let y1 = (y0f as i64 + 1).clamp(0, h - 1) as usize;
    let p00 = img.get(x0, y0);
    let p10 = img.get(x1, y0);
    let p01 = img.get(x0, y1);
    let p11 = img.get(x1, y1);
    std::array::from_fn(|k| {
        let top = p00[k] as f64 + (p10[k] as f64 - p00[k] as f64) * fx;
        let bot = p01[k] as f64 + (p11[k] as f64 - p01[k] as f64) * fx;
        top + (bot - top) * fy
    })
}

/// Resamples `img` through `out_to_src`, which maps output coordinates to
/// source coordinates. `supersample > 1` averages a regular grid of
/// sub-pixel samples per output pixel, which suppresses aliasing when the
/// map shrinks the source.
pub fn warp_homography(
    img: &Image,
    out_to_src: &Homography,
    out_w: usize,
    out_h: usize,
    supersample: usize,
) -> Image {
    let ss = supersample.max(1);
    let inv = 1.0 / ss as f64;
    let norm = 1.0 / (ss * ss) as f64;
    let mut out = Image::new(out_w, out_h);
    let buf = out.data_mut();
    for y in 0..out_h {
        for x in 0..out_w {
            let mut acc = [0.0; 3];
            for sy in 0..ss {
                for sx in 0..ss {
                    let p = Point::new(
                        x as f64 + (sx as f64 + 0.5) * inv,
                        y as f64 + (sy as f64 + 0.5) * inv,
                    );
                    let s = out_to_src.apply(p);
                    let c = sample_bilinear(img, s.x, s.y);
                    for k in 0..3 {
                        acc[k] += c[k];
                    }
                }
            }
            let i = (y * out_w + x) * 3;
            for k in 0..3 {
                buf[i + k] = to_channel(acc[k] * norm);
            }
        }
    }
    out
}

/// Maps the quadrilateral `src` of `img` onto an `out_w x out_h` rectangle.
pub fn warp_perspective(img: &Image, src: &Quad, out_w: usize, out_h: usize) -> Result<Image> {
    let dst = Quad::frame(out_w, out_h);
    let h = solve_homography(src.vertices(), dst.vertices())?;
    Ok(warp_homography(img, &h.inverse()?, out_w, out_h, 1))
}

/// Bilinear resize to exactly `w x h`.
pub fn resize(img: &Image, w: usize, h: usize) -> Image {
    let w = w.max(1);
    let h = h.max(1);
    if w == img.width() && h == img.height() {
        return img.clone();
    }
    let sx = img.width() as f64 / w as f64;
    let sy = img.height() as f64 / h as f64;
    Image::from_fn(w, h, |x, y| {
        let c = sample_bilinear(img, (x as f64 + 0.5) * sx, (y as f64 + 0.5) * sy);
        c.map(to_channel)
    })
}

/// Resizes to `target_h` rows, keeping the aspect ratio.
pub fn resize_to_height(img: &Image, target_h: usize) -> Image {
    let target_h = target_h.max(1);
    let w = round_half_even(img.width() as f64 * target_h as f64 / img.height() as f64).max(1.0);
    resize(img, w as usize, target_h)
}
