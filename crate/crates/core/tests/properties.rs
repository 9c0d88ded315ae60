use idreader::locator::{goodness, goodness_naive, SelectionMask};
use idreader::raster::{solve_homography, Image, Point, Quad};
use idreader::sat::SummedAreaTable;
use idreader::synthgen::adjust_contrast_brightness;
use idreader::tensornet::{cross_entropy, softmax};
use proptest::prelude::*;

const SIDE: usize = 32;

fn mask_strategy() -> impl Strategy<Value = SelectionMask> {
    prop::collection::vec(any::<bool>(), SIDE * SIDE).prop_map(|bits| SelectionMask::from_fn(SIDE, SIDE, |x, y| bits[y * SIDE + x]))
}

/// One vertex per image quadrant keeps most draws convex.
fn quad_strategy() -> impl Strategy<Value = Quad> {
    let lo = 0.0..16.0f64;
    let hi = 16.0..32.0f64;
    (lo.clone(), lo.clone(), hi.clone(), lo.clone(), hi.clone(), hi.clone(), lo, hi).prop_filter_map(
        "convex",
        |(a, b, c, d, e, f, g, h)| {
            Quad::new([Point::new(a, b), Point::new(c, d), Point::new(e, f), Point::new(g, h)]).ok()
        },
    )
}

fn inside(q: &Quad, x: usize, y: usize) -> bool {
    q.contains(Point::new(x as f64 + 0.5, y as f64 + 0.5))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn fast_goodness_equals_double_loop(mask in mask_strategy(), q in quad_strategy(), d in 0.5..3.0f64) {
        prop_assert_eq!(goodness(&mask, &q, d), goodness_naive(&mask, &q, d));
    }

    #[test]
    fn expansion_changes_goodness_by_new_pixels(
        mask in mask_strategy(),
        q in quad_strategy(),
        corner in 0..4usize,
        dx in 0.0..8.0f64,
        dy in 0.0..8.0f64,
        d in 0.5..3.0f64,
    ) {
        let mut v = *q.vertices();
        let sx = if corner == 1 || corner == 2 { 1.0 } else { -1.0 };
        let sy = if corner >= 2 { 1.0 } else { -1.0 };
        v[corner] = Point::new(v[corner].x + sx * dx, v[corner].y + sy * dy);
        let Ok(grown) = Quad::new(v) else { return Ok(()) };
        let (mut new_sel, mut new_unsel) = (0.0, 0.0);
        for y in 0..SIDE {
            for x in 0..SIDE {
                let (before, after) = (inside(&q, x, y), inside(&grown, x, y));
                prop_assume!(!before || after);
                if after && !before {
                    if mask.get(x, y) { new_sel += 1.0 } else { new_unsel += 1.0 }
                }
            }
        }
        let delta = goodness_naive(&mask, &grown, d) - goodness_naive(&mask, &q, d);
        prop_assert!((delta - (d * new_unsel - new_sel)).abs() < 1e-9);
        prop_assert!((goodness(&mask, &grown, d) - goodness(&mask, &q, d) - delta).abs() < 1e-9);
    }

    #[test]
    fn summed_area_matches_brute_force(
        bits in prop::collection::vec(any::<bool>(), 20 * 13),
        x0 in 0..20usize, x1 in 0..=20usize, y0 in 0..13usize, y1 in 0..=13usize,
    ) {
        prop_assume!(x0 <= x1 && y0 <= y1);
        let sat = SummedAreaTable::from_mask(20, 13, &bits);
        let brute = (y0..y1).flat_map(|y| (x0..x1).map(move |x| (x, y))).filter(|&(x, y)| bits[y * 20 + x]).count();
        prop_assert_eq!(sat.sum(x0, y0, x1, y1), brute as u64);
    }

    #[test]
    fn softmax_is_a_distribution(logits in prop::collection::vec(-50.0..50.0f64, 9)) {
        let p = softmax(&logits);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        prop_assert!(p.iter().all(|&v| v > 0.0 && v <= 1.0));
        let shifted: Vec<f64> = logits.iter().map(|l| l + 7.0).collect();
        for (a, b) in p.iter().zip(softmax(&shifted)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_prediction_costs_ln_nine(k in 0..9usize) {
        let mut y = [0.0; 9];
        y[k] = 1.0;
        prop_assert!((cross_entropy(&[1.0 / 9.0; 9], &y).unwrap() - 9f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn homography_maps_corners(src in quad_strategy(), dst in quad_strategy()) {
        let h = solve_homography(src.vertices(), dst.vertices()).unwrap();
        for (s, d) in src.vertices().iter().zip(dst.vertices()) {
            let m = h.apply(*s);
            prop_assert!((m.x - d.x).abs() < 1e-6 && (m.y - d.y).abs() < 1e-6);
        }
    }

    #[test]
    fn contrast_brightness_is_affine_then_clipped(
        px in prop::collection::vec(any::<u8>(), 3 * 16),
        alpha in 0.85..1.05f64,
        beta in -30.0..20.0f64,
    ) {
        let img = Image::from_fn(4, 4, |x, y| {
            let i = 3 * (y * 4 + x);
            [px[i], px[i + 1], px[i + 2]]
        });
        let out = adjust_contrast_brightness(&img, alpha, beta);
        for (a, b) in img.data().iter().zip(out.data()) {
            let exact = alpha * *a as f64 + beta;
            let clipped = exact.clamp(0.0, 255.0);
            prop_assert!((*b as f64 - clipped).abs() <= 0.5 + 1e-9, "{a} -> {b}, exact {exact}");
        }
    }
}
