//! Synthetic identity documents: dummy people, rendered templates, photo
//! compositing, degradation and labeled datasets.

pub mod background;
pub mod composite;
pub mod degrade;
pub mod layout;
pub mod mrz;
pub mod person;
pub mod render;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use background::{gen_background, BackgroundKind, BackgroundMix, BackgroundSource};
pub use composite::{composite_on_background, placement_ok, starts_inside, PlacementParams};
pub use degrade::{adjust_contrast_brightness, degrade_pipeline, perturb_vertices, DegradationParams};
pub use layout::{DocumentLayout, FieldSpec, LayoutRegistry, NormRect};
pub use person::{fiscal_code, gen_person, Lists, ListPaths, PersonRecord};
pub use render::render_document;

use crate::classifier::{DocumentClass, Example, INPUT_SIDE};
use crate::error::{Error, Result};
use crate::exec::{map_range, Exec};
use crate::locator::{init_regions, LocatorParams};
use crate::raster::{encode_png, resize, resize_to_height, warp_perspective, Image, Point, Quad};

/// Height of every OCR line image.
pub const LINE_HEIGHT: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    /// Full degraded photos with quads and field texts.
    Main,
    /// Rectified 200x200 documents labeled by class.
    Classifier,
    /// Field-line crops labeled with their text.
    Ocr,
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetKind::Main => "main",
            DatasetKind::Classifier => "classifier",
            DatasetKind::Ocr => "ocr",
        })
    }
}

impl FromStr for DatasetKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "main" => Ok(DatasetKind::Main),
            "classifier" => Ok(DatasetKind::Classifier),
            "ocr" => Ok(DatasetKind::Ocr),
            _ => Err(Error::InvalidParam(format!("unknown dataset kind {s:?}"))),
        }
    }
}

/// One manifest line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    /// Image path relative to the manifest directory.
    pub image: String,
    pub class: DocumentClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad: Option<Quad>,
    #[serde(default)]
    pub fields: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub lists: ListPaths,
    /// Layout registry file; the built-in layouts when absent.
    pub layouts: Option<PathBuf>,
    /// Directory of background photos; procedural backgrounds when absent.
    pub backgrounds: Option<PathBuf>,
    pub background_mix: BackgroundMix,
    pub placement: PlacementParams,
    pub degradation: DegradationParams,
    pub photo_width: usize,
    pub photo_height: usize,
    /// Reference date for generated birth, release and expiry dates.
    pub today: NaiveDate,
    /// Largest corner displacement of classifier samples, as a fraction of
    /// the side length.
    pub classifier_jitter: f64,
    /// Also write the undegraded photo of every main sample as PNG.
    pub debug_png: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            lists: ListPaths::default(),
            layouts: None,
            backgrounds: None,
            background_mix: BackgroundMix::default(),
            placement: PlacementParams::default(),
            degradation: DegradationParams::default(),
            photo_width: 1024,
            photo_height: 768,
            today: NaiveDate::from_ymd_opt(2025, 1, 1).expect("valid date"),
            classifier_jitter: 0.02,
            debug_png: false,
        }
    }
}

/// A fully generated main-kind sample.
#[derive(Debug, Clone)]
pub struct MainSample {
    pub class: DocumentClass,
    /// Undegraded photo.
    pub clean: Image,
    /// Degraded photo as a JPEG stream.
    pub jpeg: Vec<u8>,
    pub quad: Quad,
    pub fields: BTreeMap<String, String>,
}

/// A field-line crop and its text.
#[derive(Debug, Clone)]
pub struct LineSample {
    pub class: DocumentClass,
    pub field: String,
    pub text: String,
    pub image: Image,
}

/// Class of the `index`-th sample: round robin over all classes.
pub fn class_for_index(index: usize) -> DocumentClass {
    DocumentClass::from_code(index % DocumentClass::COUNT).expect("code in range")
}

/// Independent random stream for one sample.
pub fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

const MAX_ATTEMPTS: usize = 50;

/// Loaded generation resources.
#[derive(Debug, Clone)]
pub struct Generator {
    pub config: GenConfig,
    pub lists: Lists,
    pub layouts: LayoutRegistry,
    pub backgrounds: BackgroundSource,
}

impl Generator {
    pub fn new(config: GenConfig) -> Result<Self> {
        config.degradation.validate()?;
        let lists = Lists::load(&config.lists)?;
        let layouts = match &config.layouts {
            Some(p) => LayoutRegistry::load(p)?,
            None => LayoutRegistry::builtin(),
        };
        for c in DocumentClass::ALL {
            layouts.get(c)?;
        }
        let backgrounds = match &config.backgrounds {
            Some(dir) => BackgroundSource::from_dir(dir)?,
            None => BackgroundSource::Procedural(config.background_mix.clone()),
        };
        Ok(Generator { config, lists, layouts, backgrounds })
    }

    /// Renders a filled-in document. With `random_text` every letter and
    /// digit is replaced by a random one; scrambles too wide for their field
    /// are redrawn, and the real values are used if none fits.
    pub fn document(
        &self,
        class: DocumentClass,
        random_text: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Image, BTreeMap<String, String>)> {
        let layout = self.layouts.get(class)?;
        let person = gen_person(rng, &self.lists, class, self.config.today)?;
        let values = layout.field_values(&person, rng);
        if random_text {
            for _ in 0..MAX_ATTEMPTS {
                let scrambled = values.iter().map(|(k, v)| (k.clone(), layout::scramble(v, rng))).collect();
                match render_document(layout, &scrambled, rng) {
                    Err(Error::TextOverflow { .. }) => continue,
                    r => return r,
                }
            }
        }
        render_document(layout, &values, rng)
    }

    pub fn main_sample(&self, seed: u64, index: usize) -> Result<MainSample> {
        let class = class_for_index(index);
        let mut rng = sample_rng(seed, index);
        let (doc, fields) = self.document(class, false, &mut rng)?;
        let (w, h) = (self.config.photo_width, self.config.photo_height);
        let start = init_regions(w, h, &LocatorParams::default())?.start;
        for _ in 0..MAX_ATTEMPTS {
            let bg = self.backgrounds.draw(w, h, &mut rng);
            let (clean, quad) = composite_on_background(&doc, &bg, &self.config.placement, &mut rng)?;
            match degrade::degrade_to_jpeg(&clean, &quad, &self.config.degradation, &mut rng) {
                Ok((jpeg, q)) if starts_inside(&q, &start) => {
                    return Ok(MainSample { class, clean, jpeg, quad: q, fields });
                }
                Ok(_) | Err(Error::PlacementInfeasible(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::PlacementInfeasible(format!("sample {index}: no admissible degraded placement")))
    }

    /// A rectified classifier input: the document on a thin background
    /// margin at photo scale, photometrically degraded, then warped from
    /// slightly jittered corners.
    pub fn classifier_sample(&self, seed: u64, index: usize) -> Result<Example> {
        let class = class_for_index(index);
        let mut rng = sample_rng(seed, index);
        let (doc, _) = self.document(class, true, &mut rng)?;
        let dw = rng.random_range(0.55..=0.66) * self.config.photo_width as f64;
        let dh = dw * doc.height() as f64 / doc.width() as f64;
        let m = (0.05 * dw).round();
        let (cw, ch) = ((dw + 2.0 * m).ceil() as usize, (dh + 2.0 * m).ceil() as usize);
        let bg = self.backgrounds.draw(cw, ch, &mut rng);
        let quad = Quad::rect(m, m, m + dw, m + dh)?;
        let photo = composite::paste(&doc, &quad, &bg)?;
        let p = &self.config.degradation;
        let photo = degrade::photometric(&photo, p, &mut rng)?;
        let photo = degrade::jpeg_round_trip(&photo, p.quality)?;
        let j = self.config.classifier_jitter;
        let v = quad.vertices();
        let jittered = Quad::new(std::array::from_fn(|i| {
            let dx = if j > 0.0 { rng.random_range(-j..=j) * dw } else { 0.0 };
            let dy = if j > 0.0 { rng.random_range(-j..=j) * dh } else { 0.0 };
            Point::new(v[i].x + dx, v[i].y + dy)
        }))?;
        let image = warp_perspective(&photo, &jittered, INPUT_SIDE, INPUT_SIDE)?;
        Ok(Example { image, class })
    }

    /// One field line cut from a freshly rendered document, lightly
    /// degraded and scaled to the line height.
    pub fn ocr_sample(&self, seed: u64, index: usize) -> Result<LineSample> {
        let class = class_for_index(index);
        let mut rng = sample_rng(seed, index);
        let (doc, fields) = self.document(class, false, &mut rng)?;
        let layout = self.layouts.get(class)?;
        let spec = layout.fields.choose(&mut rng).ok_or_else(|| Error::InvalidParam(format!("layout {class} has no fields")))?;
        let (x, y, w, h) = spec.rect.to_pixels(doc.width(), doc.height());
        let crop = doc
            .crop(x, y, w, h)
            .ok_or_else(|| Error::InvalidParam(format!("field {} outside the document", spec.name)))?;
        let p = &self.config.degradation;
        let line = degrade::photometric(&resize_to_height(&crop, LINE_HEIGHT), p, &mut rng)?;
        Ok(LineSample { class, field: spec.name.clone(), text: fields[&spec.name].clone(), image: line })
    }

    /// `count` classifier examples generated in memory.
    pub fn classifier_examples(&self, seed: u64, count: usize, exec: Exec) -> Result<Vec<Example>> {
        map_range(exec, count, |i| self.classifier_sample(seed, i)).into_iter().collect()
    }
}

pub fn manifest_path(dir: impl AsRef<Path>) -> PathBuf {
    dir.as_ref().join("manifest.jsonl")
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn mkdir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Generates `count` samples of `kind` into `out` and writes the manifest.
/// Output bytes depend only on the generator configuration, `kind`,
/// `count` and `seed`.
pub fn gen_dataset(
    generator: &Generator,
    kind: DatasetKind,
    count: usize,
    seed: u64,
    out: impl AsRef<Path>,
    exec: Exec,
) -> Result<Vec<SampleRecord>> {
    if count == 0 {
        return Err(Error::InvalidParam("count must be at least 1".into()));
    }
    let out = out.as_ref();
    let sub = if kind == DatasetKind::Ocr { "lines" } else { "images" };
    mkdir(&out.join(sub))?;
    if kind == DatasetKind::Main && generator.config.debug_png {
        mkdir(&out.join("clean"))?;
    }
    let records: Vec<SampleRecord> = map_range(exec, count, |i| -> Result<SampleRecord> {
        match kind {
            DatasetKind::Main => {
                let s = generator.main_sample(seed, i)?;
                let rel = format!("{sub}/{i:06}.jpg");
                write(&out.join(&rel), &s.jpeg)?;
                if generator.config.debug_png {
                    write(&out.join(format!("clean/{i:06}.png")), &encode_png(&s.clean)?)?;
                }
                Ok(SampleRecord { image: rel, class: s.class, quad: Some(s.quad), fields: s.fields })
            }
            DatasetKind::Classifier => {
                let ex = generator.classifier_sample(seed, i)?;
                let rel = format!("{sub}/{i:06}.png");
                write(&out.join(&rel), &encode_png(&ex.image)?)?;
                Ok(SampleRecord { image: rel, class: ex.class, quad: None, fields: BTreeMap::new() })
            }
            DatasetKind::Ocr => {
                let s = generator.ocr_sample(seed, i)?;
                let rel = format!("{sub}/{i:06}.png");
                write(&out.join(&rel), &encode_png(&s.image)?)?;
                Ok(SampleRecord { image: rel, class: s.class, quad: None, fields: BTreeMap::from([(s.field, s.text)]) })
            }
        }
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let mut text = String::new();
    for r in &records {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    write(&manifest_path(out), text.as_bytes())?;
    Ok(records)
}

/// Records of the manifest in `dir`.
pub fn read_manifest(dir: impl AsRef<Path>) -> Result<Vec<SampleRecord>> {
    let path = manifest_path(dir);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let records = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect::<Result<Vec<SampleRecord>>>()?;
    if records.is_empty() {
        return Err(Error::EmptyManifest);
    }
    Ok(records)
}

/// Loads a classifier-kind dataset.
pub fn load_examples(dir: impl AsRef<Path>) -> Result<Vec<Example>> {
    let dir = dir.as_ref();
    read_manifest(dir)?
        .into_iter()
        .map(|r| {
            let img = crate::raster::load_image(dir.join(&r.image))?;
            let img = if (img.width(), img.height()) == (INPUT_SIDE, INPUT_SIDE) {
                img
            } else {
                resize(&img, INPUT_SIDE, INPUT_SIDE)
            };
            Ok(Example { image: img, class: r.class })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_robin_class_parity() {
        let count = |n: usize| {
            let mut c = [0usize; 9];
            (0..n).for_each(|i| c[class_for_index(i).code() as usize] += 1);
            c
        };
        assert_eq!(count(9), [1; 9]);
        let c10 = count(10);
        assert!(c10.iter().max().unwrap() - c10.iter().min().unwrap() <= 1);
        assert!(count(1000).iter().all(|&k| k == 111 || k == 112));
    }

    #[test]
    fn dataset_kind_names_round_trip() {
        for k in [DatasetKind::Main, DatasetKind::Classifier, DatasetKind::Ocr] {
            assert_eq!(k.to_string().parse::<DatasetKind>().unwrap(), k);
        }
        assert!("photos".parse::<DatasetKind>().is_err());
    }

    #[test]
    fn main_samples_keep_constraints() {
        let g = Generator::new(GenConfig::default()).unwrap();
        let start = init_regions(1024, 768, &LocatorParams::default()).unwrap().start;
        for i in 0..9 {
            let s = g.main_sample(5, i).unwrap();
            assert_eq!(s.class, class_for_index(i));
            assert!(starts_inside(&s.quad, &start));
            assert_eq!(s.fields.len(), g.layouts.get(s.class).unwrap().fields.len());
        }
    }

    #[test]
    fn classifier_samples_are_input_sized_and_deterministic() {
        let g = Generator::new(GenConfig::default()).unwrap();
        let a = g.classifier_sample(1, 4).unwrap();
        let b = g.classifier_sample(1, 4).unwrap();
        assert_eq!(a.image, b.image);
        assert_eq!((a.image.width(), a.image.height()), (INPUT_SIDE, INPUT_SIDE));
        assert_eq!(a.class, class_for_index(4));
    }

    #[test]
    fn ocr_samples_have_line_height() {
        let g = Generator::new(GenConfig::default()).unwrap();
        for i in 0..9 {
            let s = g.ocr_sample(2, i).unwrap();
            assert_eq!(s.image.height(), LINE_HEIGHT);
        }
    }
}
