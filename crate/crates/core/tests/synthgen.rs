use std::collections::BTreeSet;

use idreader::classifier::DocumentClass;
use idreader::exec::{map_range, Exec};
use idreader::extractor::rectify;
use idreader::locator::{init_regions, LocatorParams};
use idreader::raster::{decode_jpeg, Image};
use idreader::synthgen::{sample_rng, starts_inside, GenConfig, Generator};

fn ncc(a: &Image, b: &Image) -> f64 {
    let (ga, gb) = (a.to_gray(), b.to_gray());
    let n = ga.len() as f64;
    let ma = ga.iter().map(|&v| v as f64).sum::<f64>() / n;
    let mb = gb.iter().map(|&v| v as f64).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in ga.iter().zip(&gb) {
        let (x, y) = (x as f64 - ma, y as f64 - mb);
        sab += x * y;
        saa += x * x;
        sbb += y * y;
    }
    sab / (saa * sbb).sqrt()
}

#[test]
fn hundred_main_samples_respect_the_locator_assumptions() {
    let g = Generator::new(GenConfig::default()).unwrap();
    let start = init_regions(1024, 768, &LocatorParams::default()).unwrap().start;
    let samples = map_range(Exec::Parallel, 100, |i| g.main_sample(21, i).unwrap());
    for (i, s) in samples.iter().enumerate() {
        assert_eq!(s.class, DocumentClass::ALL[i % 9]);
        assert!(starts_inside(&s.quad, &start), "sample {i}: {:?}", s.quad);
        for v in s.quad.vertices() {
            assert!(v.x >= 0.0 && v.x <= 1024.0 && v.y >= 0.0 && v.y <= 768.0, "sample {i}: {v:?}");
        }
        let photo = decode_jpeg(&s.jpeg).unwrap();
        assert_eq!((photo.width(), photo.height()), (1024, 768));
        let expected: BTreeSet<&str> = g.layouts.get(s.class).unwrap().field_names().into_iter().collect();
        assert_eq!(s.fields.keys().map(String::as_str).collect::<BTreeSet<_>>(), expected);
    }
}

#[test]
fn document_is_visible_at_the_labeled_quad() {
    let g = Generator::new(GenConfig::default()).unwrap();
    for i in 0..9 {
        let s = g.main_sample(4, i).unwrap();
        let (doc, _) = g.document(s.class, false, &mut sample_rng(4, i)).unwrap();
        let layout = g.layouts.get(s.class).unwrap();
        let photo = decode_jpeg(&s.jpeg).unwrap();
        let seen = rectify(&photo, &s.quad, layout, doc.width()).unwrap();
        assert_eq!((seen.width(), seen.height()), (doc.width(), doc.height()));
        let r = ncc(&seen, &doc);
        assert!(r > 0.8, "{:?}: correlation {r}", s.class);
    }
}

#[test]
fn samples_are_deterministic_per_seed_and_index() {
    let g = Generator::new(GenConfig::default()).unwrap();
    let a = g.main_sample(8, 5).unwrap();
    let b = g.main_sample(8, 5).unwrap();
    assert_eq!(a.jpeg, b.jpeg);
    assert_eq!(a.quad, b.quad);
    assert_ne!(a.jpeg, g.main_sample(9, 5).unwrap().jpeg);
    let seq = g.classifier_examples(3, 6, Exec::Sequential).unwrap();
    let par = g.classifier_examples(3, 6, Exec::Parallel).unwrap();
    assert!(seq.iter().zip(&par).all(|(x, y)| x.image == y.image && x.class == y.class));
    assert_eq!(g.ocr_sample(1, 2).unwrap().image, g.ocr_sample(1, 2).unwrap().image);
}
