use idreader::classifier::DocumentClass;
use idreader::evalharness::field_matches;
use idreader::exec::Exec;
use idreader::extractor::{extract_field_lines, read_fields, Recognizer, TemplateRecognizer};
use idreader::raster::Quad;
use idreader::synthgen::{sample_rng, GenConfig, Generator};

#[test]
fn rendered_fields_read_back() {
    let g = Generator::new(GenConfig::default()).unwrap();
    let rec = TemplateRecognizer::default();
    let (mut total, mut wrong) = (0, Vec::new());
    for i in 0..45 {
        let class = DocumentClass::ALL[i % 9];
        let layout = g.layouts.get(class).unwrap();
        let (doc, fields) = g.document(class, false, &mut sample_rng(77, i)).unwrap();
        for (name, line) in extract_field_lines(&doc, layout) {
            let (text, _) = rec.recognize(&line);
            total += 1;
            if !field_matches(&text, &fields[&name]) {
                let truth = fields[&name].clone();
                wrong.push((class, name, text, truth));
            }
        }
    }
    let acc = 1.0 - wrong.len() as f64 / total as f64;
    assert!(acc >= 0.99, "accuracy {acc} over {total} fields: {wrong:?}");
}

#[test]
fn identity_rectification_reads_the_same_fields() {
    let g = Generator::new(GenConfig::default()).unwrap();
    let rec = TemplateRecognizer::default();
    for class in [DocumentClass::ALL[0], DocumentClass::ALL[8]] {
        let layout = g.layouts.get(class).unwrap();
        let (doc, fields) = g.document(class, false, &mut sample_rng(5, 0)).unwrap();
        let read = read_fields(&doc, &Quad::frame(doc.width(), doc.height()), layout, &rec, Exec::Parallel).unwrap();
        assert_eq!(read.keys().collect::<Vec<_>>(), fields.keys().collect::<Vec<_>>());
        let ok = fields.iter().filter(|(k, v)| field_matches(&read[*k].text, v)).count();
        assert!(ok + 1 >= fields.len(), "{read:?} vs {fields:?}");
    }
}
