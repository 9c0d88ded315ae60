//! Procedural backgrounds standing in for texture photographs, plus an
//! optional pool of user-supplied background images.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{load_image, resize, to_channel, Image, Rgb};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackgroundKind {
    Plain,
    Wood,
    Marble,
    Tiles,
    Fabric,
    Clutter,
}

impl BackgroundKind {
    pub const ALL: [BackgroundKind; 6] = [
        BackgroundKind::Plain,
        BackgroundKind::Wood,
        BackgroundKind::Marble,
        BackgroundKind::Tiles,
        BackgroundKind::Fabric,
        BackgroundKind::Clutter,
    ];
}

/// Relative frequency of each background kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundMix(pub Vec<(BackgroundKind, f64)>);

impl Default for BackgroundMix {
    fn default() -> Self {
        BackgroundMix(vec![
            (BackgroundKind::Plain, 1.0),
            (BackgroundKind::Wood, 1.0),
            (BackgroundKind::Marble, 1.0),
            (BackgroundKind::Tiles, 1.0),
            (BackgroundKind::Fabric, 1.0),
            (BackgroundKind::Clutter, 1.0),
        ])
    }
}

impl BackgroundMix {
    pub fn pick(&self, rng: &mut impl Rng) -> BackgroundKind {
        let total: f64 = self.0.iter().map(|(_, w)| w.max(0.0)).sum();
        let mut t = rng.random_range(0.0..total.max(f64::MIN_POSITIVE));
        for &(k, w) in &self.0 {
            if t < w.max(0.0) {
                return k;
            }
            t -= w.max(0.0);
        }
        self.0.last().map_or(BackgroundKind::Plain, |p| p.0)
    }
}

fn random_color(rng: &mut impl Rng) -> Rgb {
    std::array::from_fn(|_| rng.random_range(0..=255u8))
}

fn mix(a: Rgb, b: Rgb, t: f64) -> Rgb {
    std::array::from_fn(|k| to_channel(a[k] as f64 + (b[k] as f64 - a[k] as f64) * t))
}

fn shift(c: Rgb, d: f64) -> Rgb {
    std::array::from_fn(|k| to_channel(c[k] as f64 + d))
}

/// Smooth lattice noise in `[0, 1]` with the given cell size in pixels.
struct ValueNoise {
    cols: usize,
    values: Vec<f64>,
    cell: f64,
}

impl ValueNoise {
    fn new(w: usize, h: usize, cell: f64, rng: &mut impl Rng) -> Self {
        let cols = (w as f64 / cell).ceil() as usize + 2;
        let rows = (h as f64 / cell).ceil() as usize + 2;
        ValueNoise { cols, values: (0..cols * rows).map(|_| rng.random::<f64>()).collect(), cell }
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        let (u, v) = (x / self.cell, y / self.cell);
        let (i, j) = (u.floor() as usize, v.floor() as usize);
        let s = |t: f64| t * t * (3.0 - 2.0 * t);
        let (fx, fy) = (s(u - i as f64), s(v - j as f64));
        let g = |a: usize, b: usize| self.values[b * self.cols + a];
        let top = g(i, j) + (g(i + 1, j) - g(i, j)) * fx;
        let bot = g(i, j + 1) + (g(i + 1, j + 1) - g(i, j + 1)) * fx;
        top + (bot - top) * fy
    }
}

/// Fractal sum of value noise octaves, normalized to `[0, 1]`.
fn fbm(w: usize, h: usize, cell: f64, octaves: usize, rng: &mut impl Rng) -> impl Fn(f64, f64) -> f64 {
    let layers: Vec<ValueNoise> = (0..octaves).map(|o| ValueNoise::new(w, h, cell / (1 << o) as f64, rng)).collect();
    move |x, y| {
        let (mut sum, mut amp, mut norm) = (0.0, 1.0, 0.0);
        for l in &layers {
            sum += amp * l.at(x, y);
            norm += amp;
            amp *= 0.5;
        }
        sum / norm
    }
}

fn pixel_noise(img: &mut Image, amount: f64, rng: &mut impl Rng) {
    for v in img.data_mut() {
        *v = to_channel(*v as f64 + rng.random_range(-amount..=amount));
    }
}

/// A `w x h` background of the given kind.
pub fn gen_background(kind: BackgroundKind, w: usize, h: usize, rng: &mut impl Rng) -> Image {
    let a = random_color(rng);
    let b = random_color(rng);
    let mut img = match kind {
        BackgroundKind::Plain => {
            let (gx, gy) = (rng.random_range(-40.0..40.0), rng.random_range(-40.0..40.0));
            Image::from_fn(w, h, |x, y| shift(a, gx * (x as f64 / w as f64 - 0.5) + gy * (y as f64 / h as f64 - 0.5)))
        }
        BackgroundKind::Wood => {
            let dark = shift(a, -rng.random_range(30.0..80.0));
            let warp = fbm(w, h, 160.0, 3, rng);
            let (freq, slope) = (rng.random_range(0.02..0.06), rng.random_range(-0.3..0.3));
            Image::from_fn(w, h, |x, y| {
                let (xf, yf) = (x as f64, y as f64);
                let t = ((yf + slope * xf) * freq + 6.0 * warp(xf, yf)).sin() * 0.5 + 0.5;
                mix(a, dark, t.powf(3.0))
            })
        }
        BackgroundKind::Marble => {
            let n = fbm(w, h, rng.random_range(60.0..220.0), 4, rng);
            Image::from_fn(w, h, |x, y| mix(a, b, n(x as f64, y as f64)))
        }
        BackgroundKind::Tiles => {
            let size = rng.random_range(40..140usize);
            let grout = shift(a, rng.random_range(-90.0..90.0));
            let jitter: Vec<f64> = (0..(w / size + 2) * (h / size + 2)).map(|_| rng.random_range(-18.0..18.0)).collect();
            let cols = w / size + 2;
            Image::from_fn(w, h, |x, y| {
                if x % size < 4 || y % size < 4 {
                    grout
                } else {
                    shift(a, jitter[(y / size) * cols + x / size])
                }
            })
        }
        BackgroundKind::Fabric => {
            let period = rng.random_range(4.0..12.0);
            Image::from_fn(w, h, |x, y| {
                let u = (x as f64 * std::f64::consts::TAU / period).sin();
                let v = (y as f64 * std::f64::consts::TAU / period).sin();
                mix(a, b, 0.25 + 0.25 * (u * v) + 0.1 * u)
            })
        }
        BackgroundKind::Clutter => {
            let mut img = Image::filled(w, h, a);
            for _ in 0..rng.random_range(8..30) {
                let c = random_color(rng);
                let (rw, rh) = (rng.random_range(w / 20..w / 3) as i64, rng.random_range(h / 20..h / 3) as i64);
                let (x, y) = (rng.random_range(-rw..w as i64), rng.random_range(-rh..h as i64));
                img.fill_rect(x, y, rw, rh, c);
            }
            img
        }
    };
    pixel_noise(&mut img, 6.0, rng);
    img
}

/// Where backgrounds come from.
#[derive(Debug, Clone)]
pub enum BackgroundSource {
    Procedural(BackgroundMix),
    Images(Vec<Image>),
}

impl BackgroundSource {
    /// Every PNG or JPEG file in `dir`, in file-name order.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut paths: Vec<_> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
            })
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(Error::EmptyList("background images"));
        }
        Ok(BackgroundSource::Images(paths.iter().map(load_image).collect::<Result<_>>()?))
    }

    pub fn draw(&self, w: usize, h: usize, rng: &mut impl Rng) -> Image {
        match self {
            BackgroundSource::Procedural(mix) => gen_background(mix.pick(rng), w, h, rng),
            BackgroundSource::Images(imgs) => resize(&imgs[rng.random_range(0..imgs.len())], w, h),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn every_kind_is_deterministic() {
        for k in BackgroundKind::ALL {
            let a = gen_background(k, 64, 48, &mut ChaCha8Rng::seed_from_u64(7));
            let b = gen_background(k, 64, 48, &mut ChaCha8Rng::seed_from_u64(7));
            assert_eq!(a, b);
            assert_eq!((a.width(), a.height()), (64, 48));
        }
    }

    #[test]
    fn mix_respects_zero_weights() {
        let m = BackgroundMix(vec![(BackgroundKind::Wood, 0.0), (BackgroundKind::Tiles, 2.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..200).all(|_| m.pick(&mut rng) == BackgroundKind::Tiles));
    }
}
