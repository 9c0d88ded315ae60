use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn dist(self, o: Point) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }
}

#[inline]
fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Convex quadrilateral with vertices ordered top-left, top-right,
/// bottom-right, bottom-left (clockwise on screen, positive signed area with
/// `y` pointing down).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuadJson", into = "QuadJson")]
pub struct Quad {
    v: [Point; 4],
}

#[derive(Serialize, Deserialize)]
struct QuadJson([[f64; 2]; 4]);

impl TryFrom<QuadJson> for Quad {
    type Error = Error;
    fn try_from(q: QuadJson) -> Result<Self> {
        Quad::new(q.0.map(|[x, y]| Point::new(x, y)))
    }
}

impl From<Quad> for QuadJson {
    fn from(q: Quad) -> Self {
        QuadJson(q.v.map(|p| [p.x, p.y]))
    }
}

impl Quad {
    pub fn new(v: [Point; 4]) -> Result<Self> {
        if v.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::DegenerateQuad("non-finite vertex".into()));
        }
        for i in 0..4 {
            let turn = cross(v[i], v[(i + 1) % 4], v[(i + 2) % 4]);
            if turn <= 0.0 {
                return Err(Error::DegenerateQuad(format!(
                    "vertices {v:?} are not convex in TL/TR/BR/BL order"
                )));
            }
        }
        Ok(Quad { v })
    }

    /// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Quad::new([
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ])
    }

    /// The whole `w x h` image plane.
    pub fn frame(w: usize, h: usize) -> Self {
        Quad::rect(0.0, 0.0, w as f64, h as f64).expect("positive image dimensions")
    }

    #[inline]
    pub fn vertices(&self) -> &[Point; 4] {
        &self.v
    }

    pub fn signed_area(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..4 {
            let a = self.v[i];
            let b = self.v[(i + 1) % 4];
            s += a.x * b.y - b.x * a.y;
        }
        0.5 * s
    }

    /// Vertex mean.
    pub fn centroid(&self) -> Point {
        let sx: f64 = self.v.iter().map(|p| p.x).sum();
        let sy: f64 = self.v.iter().map(|p| p.y).sum();
        Point::new(sx / 4.0, sy / 4.0)
    }

    pub fn side_lengths(&self) -> [f64; 4] {
        std::array::from_fn(|i| self.v[i].dist(self.v[(i + 1) % 4]))
    }

    pub fn shortest_side(&self) -> f64 {
        self.side_lengths().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: Point) -> bool {
        point_in_quad(p, self)
    }

    pub fn map(&self, h: &Homography) -> Result<Quad> {
        Quad::new(self.v.map(|p| h.apply(p)))
    }

    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        let xs = self.v.map(|p| p.x);
        let ys = self.v.map(|p| p.y);
        (
            xs.into_iter().fold(f64::INFINITY, f64::min),
            ys.into_iter().fold(f64::INFINITY, f64::min),
            xs.into_iter().fold(f64::NEG_INFINITY, f64::max),
            ys.into_iter().fold(f64::NEG_INFINITY, f64::max),
        )
    }
}

/// Inside-or-on-boundary test for a canonical convex quad.
#[inline]
pub fn point_in_quad(p: Point, q: &Quad) -> bool {
    let v = &q.v;
    (0..4).all(|i| cross(v[i], v[(i + 1) % 4], p) >= 0.0)
}

/// Per-row half-open column spans `[start, end)` of the pixels whose centers
/// satisfy [`point_in_quad`], for an image `w` pixels wide and `h` tall.
///
/// The span endpoints are estimated from edge intersections and then walked
/// with the exact predicate, so membership agrees with `point_in_quad`
/// pixel for pixel while costing O(1) predicate calls per row.
pub fn quad_row_spans(q: &Quad, w: usize, h: usize) -> Vec<(usize, usize)> {
    let mut spans = vec![(0, 0); h];
    let (xmin, ymin, xmax, ymax) = q.bounds();
    if w == 0 || h == 0 {
        return spans;
    }
    let r0 = ((ymin - 0.5).ceil() as i64 - 1).clamp(0, h as i64 - 1) as usize;
    let r1 = ((ymax - 0.5).floor() as i64 + 1).clamp(0, h as i64 - 1) as usize;
    if ymax < 0.0 || ymin > h as f64 || xmax < 0.0 || xmin > w as f64 {
        return spans;
    }
    let v = q.vertices();
    let last = w as i64 - 1;
    for (row, span) in spans.iter_mut().enumerate().take(r1 + 1).skip(r0) {
        let yc = row as f64 + 0.5;
        let mut xl = f64::INFINITY;
        let mut xr = f64::NEG_INFINITY;
        for i in 0..4 {
            let a = v[i];
            let b = v[(i + 1) % 4];
            if (a.y - yc) * (b.y - yc) > 0.0 {
                continue;
            }
            if a.y == b.y {
                xl = xl.min(a.x.min(b.x));
                xr = xr.max(a.x.max(b.x));
            } else {
                let x = a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y);
                xl = xl.min(x);
                xr = xr.max(x);
            }
        }
        if !xl.is_finite() {
            continue;
        }
        let inside = |j: i64| point_in_quad(Point::new(j as f64 + 0.5, yc), q);
        let est_l = ((xl - 0.5).ceil() as i64).clamp(0, last);
        let est_r = ((xr - 0.5).floor() as i64).clamp(0, last);

        let mut l = est_l;
        if inside(l) {
            while l > 0 && inside(l - 1) {
                l -= 1;
            }
        } else {
            while l < last && l <= est_r + 2 && !inside(l) {
                l += 1;
            }
            if !inside(l) {
                continue;
            }
        }
        let mut r = est_r.max(l);
        if inside(r) {
            while r < last && inside(r + 1) {
                r += 1;
            }
        } else {
            while r > l && !inside(r) {
                r -= 1;
            }
        }
        *span = (l as usize, r as usize + 1);
    }
    spans
}

/// Projective map stored as a row-major 3x3 matrix with `m[2][2] == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    pub m: [[f64; 3]; 3],
}

impl Homography {
    pub const IDENTITY: Homography = Homography {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn new(m: [[f64; 3]; 3]) -> Result<Self> {
        if m[2][2].abs() < 1e-300 || !m.iter().flatten().all(|v| v.is_finite()) {
            return Err(Error::DegenerateQuad("unnormalizable homography".into()));
        }
        let s = m[2][2];
        let h = Homography {
            m: m.map(|row| row.map(|v| v / s)),
        };
        if h.determinant().abs() <= 1e-12 {
            return Err(Error::DegenerateQuad("singular homography".into()));
        }
        Ok(h)
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        let m = &self.m;
        let w = m[2][0] * p.x + m[2][1] * p.y + m[2][2];
        Point::new(
            (m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / w,
            (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / w,
        )
    }

    pub fn inverse(&self) -> Result<Self> {
        let m = &self.m;
        let det = self.determinant();
        if det.abs() <= 1e-12 {
            return Err(Error::DegenerateQuad("singular homography".into()));
        }
        let adj = [
            [
                m[1][1] * m[2][2] - m[1][2] * m[2][1],
                m[0][2] * m[2][1] - m[0][1] * m[2][2],
                m[0][1] * m[1][2] - m[0][2] * m[1][1],
            ],
            [
                m[1][2] * m[2][0] - m[1][0] * m[2][2],
                m[0][0] * m[2][2] - m[0][2] * m[2][0],
                m[0][2] * m[1][0] - m[0][0] * m[1][2],
            ],
            [
                m[1][0] * m[2][1] - m[1][1] * m[2][0],
                m[0][1] * m[2][0] - m[0][0] * m[2][1],
                m[0][0] * m[1][1] - m[0][1] * m[1][0],
            ],
        ];
        Homography::new(adj.map(|row| row.map(|v| v / det)))
    }

    /// `self` applied after `first`.
    pub fn after(&self, first: &Homography) -> Homography {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.m[i][k] * first.m[k][j]).sum();
            }
        }
        let s = out[2][2];
        Homography {
            m: out.map(|row| row.map(|v| v / s)),
        }
    }
}

fn check_no_three_collinear(p: &[Point; 4], what: &str) -> Result<()> {
    let scale = p
        .iter()
        .flat_map(|a| p.iter().map(move |b| a.dist(*b)))
        .fold(0.0, f64::max);
    if scale <= 0.0 {
        return Err(Error::DegenerateQuad(format!("{what} points coincide")));
    }
    for skip in 0..4 {
        let t: Vec<Point> = (0..4).filter(|&i| i != skip).map(|i| p[i]).collect();
        if cross(t[0], t[1], t[2]).abs() <= 1e-10 * scale * scale {
            return Err(Error::DegenerateQuad(format!("three {what} points are collinear")));
        }
    }
    Ok(())
}

/// Similarity that moves the centroid to the origin and sets the mean
/// distance from it to sqrt(2).
fn normalizer(p: &[Point; 4]) -> Homography {
    let cx = p.iter().map(|q| q.x).sum::<f64>() / 4.0;
    let cy = p.iter().map(|q| q.y).sum::<f64>() / 4.0;
    let mean = p.iter().map(|q| (q.x - cx).hypot(q.y - cy)).sum::<f64>() / 4.0;
    let s = std::f64::consts::SQRT_2 / mean;
    Homography {
        m: [[s, 0.0, -s * cx], [0.0, s, -s * cy], [0.0, 0.0, 1.0]],
    }
}

/// Solves `a x = b` in place by Gaussian elimination with partial pivoting.
fn solve_linear<const N: usize>(a: &mut [[f64; N]; N], b: &mut [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let piv = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..N {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let s: f64 = (row + 1..N).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Homography mapping each `src[i]` onto `dst[i]`, from the 8x8 linear
/// system with the bottom-right entry fixed at 1. Points are conditioned
/// with a similarity transform before solving.
pub fn solve_homography(src: &[Point; 4], dst: &[Point; 4]) -> Result<Homography> {
    check_no_three_collinear(src, "source")?;
    check_no_three_collinear(dst, "destination")?;
    let ts = normalizer(src);
    let td = normalizer(dst);
    let s = src.map(|p| ts.apply(p));
    let d = dst.map(|p| td.apply(p));

    let mut a = [[0.0; 8]; 8];
    let mut b = [0.0; 8];
    for i in 0..4 {
        let (x, y, u, v) = (s[i].x, s[i].y, d[i].x, d[i].y);
        a[2 * i] = [x, y, 1.0, 0.0, 0.0, 0.0, -x * u, -y * u];
        b[2 * i] = u;
        a[2 * i + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -x * v, -y * v];
        b[2 * i + 1] = v;
    }
    let h = solve_linear(&mut a, &mut b)
        .ok_or_else(|| Error::DegenerateQuad("singular correspondence system".into()))?;
    let hn = Homography::new([[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]])?;
    let full = td.inverse()?.after(&hn.after(&ts));
    Homography::new(full.m)
}
