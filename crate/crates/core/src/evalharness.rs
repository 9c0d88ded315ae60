//! Scoring of vertex detection, classification and field reading over a
//! manifest. Classification and reading only run on located samples.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classifier::{classify, preprocess, DocumentClass};
use crate::error::{Error, Result};
use crate::exec::{map_slice, Exec};
use crate::extractor::{read_fields, Recognizer};
use crate::locator::{locate, LocatorParams};
use crate::raster::{load_image, Quad};
use crate::synthgen::{LayoutRegistry, SampleRecord};
use crate::tensornet::Network;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VertexCriterion {
    /// Largest allowed vertex error as a fraction of the shortest side of
    /// the true quad.
    pub tolerance: f64,
}

impl Default for VertexCriterion {
    fn default() -> Self {
        VertexCriterion { tolerance: 0.03 }
    }
}

/// Largest distance between corresponding vertices.
pub fn max_vertex_error(pred: &Quad, truth: &Quad) -> f64 {
    pred.vertices()
        .iter()
        .zip(truth.vertices())
        .map(|(p, t)| p.dist(*t))
        .fold(0.0, f64::max)
}

/// Whether every vertex lies strictly closer than the tolerance.
pub fn vertex_correct(pred: &Quad, truth: &Quad, c: &VertexCriterion) -> bool {
    let limit = c.tolerance * truth.shortest_side();
    pred.vertices().iter().zip(truth.vertices()).all(|(p, t)| p.dist(*t) < limit)
}

/// Field texts compare equal after trimming and uppercasing.
pub fn field_matches(read: &str, truth: &str) -> bool {
    read.trim().to_uppercase() == truth.trim().to_uppercase()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalParams {
    pub locator: LocatorParams,
    pub criterion: VertexCriterion,
    /// Record per-sample wall-clock time.
    pub timing: bool,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams { locator: LocatorParams::default(), criterion: VertexCriterion::default(), timing: false, exec: Exec::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub image: String,
    pub class: DocumentClass,
    pub located: bool,
    /// Largest vertex error over the shortest true side; absent when the
    /// locator failed outright.
    pub vertex_error: Option<f64>,
    pub predicted: Option<DocumentClass>,
    pub fields_total: usize,
    pub fields_wrong: usize,
    pub wrong_fields: Vec<String>,
    pub error: Option<String>,
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_samples: usize,
    pub n_located: usize,
    pub vertex_success_rate: f64,
    /// Over located samples; absent when none was located.
    pub classification_accuracy: Option<f64>,
    pub field_accuracy: Option<f64>,
    /// Percentage of wrongly read fields per class name.
    pub per_class_field_error: BTreeMap<String, Option<f64>>,
    pub rows: Vec<SampleRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownRow {
    pub class: DocumentClass,
    pub fields_total: usize,
    pub fields_wrong: usize,
    pub percent: Option<f64>,
}

fn evaluate_sample(
    rec: &SampleRecord,
    dir: &Path,
    model: &Network<f32>,
    layouts: &LayoutRegistry,
    recognizer: &dyn Recognizer,
    p: &EvalParams,
) -> Result<SampleRow> {
    let start = Instant::now();
    let truth = rec
        .quad
        .ok_or_else(|| Error::Format(format!("manifest entry {} has no quad", rec.image)))?;
    let photo = load_image(dir.join(&rec.image))?;
    let mut row = SampleRow {
        image: rec.image.clone(),
        class: rec.class,
        located: false,
        vertex_error: None,
        predicted: None,
        fields_total: 0,
        fields_wrong: 0,
        wrong_fields: Vec::new(),
        error: None,
        wall_ms: None,
    };
    let pred = match locate(&photo, &p.locator) {
        Ok(q) => q,
        Err(e) => {
            row.error = Some(e.to_string());
            return Ok(row);
        }
    };
    row.vertex_error = Some(max_vertex_error(&pred, &truth) / truth.shortest_side());
    row.located = vertex_correct(&pred, &truth, &p.criterion);
    if row.located {
        let (class, _) = classify(model, &preprocess(&photo, &pred)?)?;
        row.predicted = Some(class);
        let read = read_fields(&photo, &pred, layouts.get(class)?, recognizer, Exec::Sequential)?;
        row.fields_total = rec.fields.len();
        for (name, text) in &rec.fields {
            if !read.get(name).is_some_and(|r| field_matches(&r.text, text)) {
                row.wrong_fields.push(name.clone());
            }
        }
        row.fields_wrong = row.wrong_fields.len();
    }
    if p.timing {
        row.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(row)
}

/// Aggregates per-sample rows into a report.
pub fn summarize(rows: Vec<SampleRow>) -> EvalReport {
    let n = rows.len();
    let located: Vec<&SampleRow> = rows.iter().filter(|r| r.located).collect();
    let n_located = located.len();
    let correct = located.iter().filter(|r| r.predicted == Some(r.class)).count();
    let total: usize = located.iter().map(|r| r.fields_total).sum();
    let wrong: usize = located.iter().map(|r| r.fields_wrong).sum();
    let mut report = EvalReport {
        n_samples: n,
        n_located,
        vertex_success_rate: if n == 0 { 0.0 } else { n_located as f64 / n as f64 },
        classification_accuracy: (n_located > 0).then(|| correct as f64 / n_located as f64),
        field_accuracy: (total > 0).then(|| 1.0 - wrong as f64 / total as f64),
        per_class_field_error: BTreeMap::new(),
        rows,
    };
    for b in error_breakdown(&report) {
        report.per_class_field_error.insert(b.class.name().to_owned(), b.percent);
    }
    report
}

/// Runs the pipeline on every manifest sample stored under `dir`.
pub fn evaluate_pipeline(
    manifest: &[SampleRecord],
    dir: impl AsRef<Path>,
    model: &Network<f32>,
    layouts: &LayoutRegistry,
    recognizer: &dyn Recognizer,
    params: &EvalParams,
) -> Result<EvalReport> {
    if manifest.is_empty() {
        return Err(Error::EmptyManifest);
    }
    for c in DocumentClass::ALL {
        layouts.get(c)?;
    }
    let dir = dir.as_ref();
    let rows = map_slice(params.exec, manifest, |rec| evaluate_sample(rec, dir, model, layouts, recognizer, params));
    Ok(summarize(rows.into_iter().collect::<Result<_>>()?))
}

/// Field errors per class over located samples, one row per class.
pub fn error_breakdown(report: &EvalReport) -> Vec<BreakdownRow> {
    DocumentClass::ALL
        .iter()
        .map(|&class| {
            let rows = report.rows.iter().filter(|r| r.located && r.class == class);
            let (total, wrong) = rows.fold((0, 0), |(t, w), r| (t + r.fields_total, w + r.fields_wrong));
            BreakdownRow {
                class,
                fields_total: total,
                fields_wrong: wrong,
                percent: (total > 0).then(|| 100.0 * wrong as f64 / total as f64),
            }
        })
        .collect()
}

#[derive(Serialize)]
struct CsvRow<'a> {
    image: &'a str,
    class: u8,
    located: bool,
    vertex_error: Option<f64>,
    predicted: Option<u8>,
    fields_total: usize,
    fields_wrong: usize,
    wrong_fields: String,
    wall_ms: Option<f64>,
}

#[derive(Serialize)]
struct CsvBreakdown<'a> {
    class: &'a str,
    fields_total: usize,
    fields_wrong: usize,
    percent: Option<f64>,
}

fn to_csv<T: Serialize>(records: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

/// Per-sample rows as CSV.
pub fn rows_csv(report: &EvalReport) -> Result<String> {
    to_csv(report.rows.iter().map(|r| CsvRow {
        image: &r.image,
        class: r.class.code(),
        located: r.located,
        vertex_error: r.vertex_error,
        predicted: r.predicted.map(|c| c.code()),
        fields_total: r.fields_total,
        fields_wrong: r.fields_wrong,
        wrong_fields: r.wrong_fields.join(";"),
        wall_ms: r.wall_ms,
    }))
}

/// Breakdown rows as CSV; undefined percentages are left empty.
pub fn breakdown_csv(rows: &[BreakdownRow]) -> Result<String> {
    to_csv(rows.iter().map(|r| CsvBreakdown {
        class: r.class.name(),
        fields_total: r.fields_total,
        fields_wrong: r.fields_wrong,
        percent: r.percent,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Point;

    fn shifted(q: &Quad, d: [(f64, f64); 4]) -> Quad {
        let v = q.vertices();
        Quad::new(std::array::from_fn(|i| Point::new(v[i].x + d[i].0, v[i].y + d[i].1))).unwrap()
    }

    #[test]
    fn strict_vertex_boundary() {
        let truth = Quad::rect(0.0, 0.0, 600.0, 400.0).unwrap();
        let c = VertexCriterion::default();
        assert!(vertex_correct(&truth, &truth, &c));
        assert!(!vertex_correct(&shifted(&truth, [(12.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)]), &truth, &c));
        assert!(vertex_correct(&shifted(&truth, [(11.9, 0.0), (0.0, 11.9), (-11.9, 0.0), (0.0, -11.9)]), &truth, &c));
    }

    fn row(class: DocumentClass, located: bool, total: usize, wrong: usize) -> SampleRow {
        SampleRow {
            image: String::new(),
            class,
            located,
            vertex_error: Some(0.0),
            predicted: located.then_some(class),
            fields_total: total,
            fields_wrong: wrong,
            wrong_fields: vec![String::new(); wrong],
            error: None,
            wall_ms: None,
        }
    }

    #[test]
    fn failed_locations_leave_denominators() {
        let r = summarize(vec![
            row(DocumentClass::Passport, true, 20, 1),
            row(DocumentClass::Passport, false, 0, 0),
            row(DocumentClass::HealthCardBack, true, 5, 0),
        ]);
        assert_eq!(r.n_located, 2);
        assert!((r.vertex_success_rate * 3.0 - 2.0).abs() < 1e-12);
        assert_eq!(r.classification_accuracy, Some(1.0));
        assert_eq!(r.field_accuracy, Some(1.0 - 1.0 / 25.0));
        let b = error_breakdown(&r);
        assert_eq!(b[DocumentClass::Passport as usize].percent, Some(5.0));
        assert_eq!(b[DocumentClass::HealthCardBack as usize].percent, Some(0.0));
        assert_eq!(b[DocumentClass::PaperIdFront as usize].percent, None);
        let (t, w) = b.iter().fold((0, 0), |(t, w), r| (t + r.fields_total, w + r.fields_wrong));
        assert_eq!(r.field_accuracy, Some(1.0 - w as f64 / t as f64));
        let csv = breakdown_csv(&b).unwrap();
        assert!(csv.starts_with("class,fields_total,fields_wrong,percent\n"));
        assert!(csv.contains("passport,20,1,5.0\n") && csv.contains("paper-id-front,0,0,\n"));
        assert_eq!(rows_csv(&r).unwrap().lines().count(), 4);
    }

    #[test]
    fn field_comparison_normalizes_case_and_edges() {
        assert!(field_matches(" rossi ", "ROSSI"));
        assert!(!field_matches("ROSS1", "ROSSI"));
    }

    #[test]
    fn empty_manifest_is_rejected() {
        let net = Network::<f32>::zeros(crate::tensornet::Architecture::new(1, 2)).unwrap();
        let r = evaluate_pipeline(
            &[],
            ".",
            &net,
            &LayoutRegistry::builtin(),
            &crate::extractor::TemplateRecognizer::default(),
            &EvalParams::default(),
        );
        assert!(matches!(r, Err(Error::EmptyManifest)));
    }
}
