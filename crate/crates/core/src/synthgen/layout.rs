//! Schematic document layouts: size, colors, decorations and the field
//! rectangles that the extractor later crops.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mrz;
use super::person::PersonRecord;
use crate::classifier::DocumentClass;
use crate::error::{Error, Result};
use crate::font::Typeface;
use crate::raster::{round_half_even, Rgb};

/// Rectangle in document-relative coordinates, all in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormRect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl NormRect {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        NormRect { x, y, w, h }
    }

    pub fn in_unit_square(&self) -> bool {
        self.x >= 0.0 && self.y >= 0.0 && self.w > 0.0 && self.h > 0.0 && self.x + self.w <= 1.0 && self.y + self.h <= 1.0
    }

    pub fn overlaps(&self, o: &NormRect) -> bool {
        self.x < o.x + o.w && o.x < self.x + self.w && self.y < o.y + o.h && o.y < self.y + self.h
    }

    /// Pixel rectangle `(x, y, w, h)` in a `width x height` raster, every
    /// coordinate rounded half to even.
    pub fn to_pixels(&self, width: usize, height: usize) -> (i64, i64, i64, i64) {
        let (fw, fh) = (width as f64, height as f64);
        (
            round_half_even(self.x * fw) as i64,
            round_half_even(self.y * fh) as i64,
            round_half_even(self.w * fw) as i64,
            round_half_even(self.h * fh) as i64,
        )
    }
}

/// Where a field's text comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldSource {
    Surname,
    Name,
    Sex,
    BirthDate,
    BirthPlace,
    Address,
    FiscalCode,
    DocumentNumber,
    IssueDate,
    ExpiryDate,
    Height,
    Categories,
    Restrictions,
    Mrz1,
    Mrz2,
    Mrz3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub name: String,
    pub rect: NormRect,
    /// Text band height in pixels at the base width.
    pub size: f64,
    pub color: Rgb,
    pub source: FieldSource,
    /// Caption printed above the rectangle; empty for none.
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorScheme {
    pub paper: Rgb,
    pub accent: Rgb,
    pub ink: Rgb,
}

/// Extra artwork that helps tell document types apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Decoration {
    /// Filled ellipse standing in for a face photo.
    Portrait { rect: NormRect },
    /// Solid rectangle in the given color.
    Block { rect: NormRect, color: Rgb },
    /// Rectangle outline.
    Frame { rect: NormRect, color: Rgb },
    /// Circular stamp outline.
    Stamp { cx: f64, cy: f64, r: f64, color: Rgb },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentLayout {
    pub class: DocumentClass,
    /// Width over height.
    pub aspect_ratio: f64,
    pub base_width: usize,
    pub typeface: Typeface,
    pub scheme: ColorScheme,
    pub title: String,
    /// Separator between day, month and year.
    pub date_separator: String,
    /// Spatial frequency of the background line pattern.
    pub pattern: f64,
    pub decorations: Vec<Decoration>,
    pub fields: Vec<FieldSpec>,
}

impl DocumentLayout {
    pub fn base_height(&self) -> usize {
        round_half_even(self.base_width as f64 / self.aspect_ratio) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParam(format!("layout {}: {msg}", self.class)));
        if !(self.aspect_ratio > 0.0) || self.base_width == 0 {
            return bad("non-positive size".into());
        }
        for (i, f) in self.fields.iter().enumerate() {
            if !f.rect.in_unit_square() {
                return bad(format!("field {} outside the document", f.name));
            }
            if f.size <= 0.0 {
                return bad(format!("field {} has no font size", f.name));
            }
            for g in &self.fields[i + 1..] {
                if f.name == g.name {
                    return bad(format!("duplicate field {}", f.name));
                }
                if f.rect.overlaps(&g.rect) {
                    return bad(format!("fields {} and {} overlap", f.name, g.name));
                }
            }
        }
        Ok(())
    }

    pub fn field_names(&self) -> Vec<&str> {
        self.fields.iter().map(|f| f.name.as_str()).collect()
    }

    fn date(&self, d: NaiveDate) -> String {
        let s = &self.date_separator;
        format!("{:02}{s}{:02}{s}{}", d.day(), d.month(), d.year())
    }

    /// Text for every field, drawn from a person.
    pub fn field_values(&self, p: &PersonRecord, rng: &mut impl Rng) -> BTreeMap<String, String> {
        let td1 = mrz::td1(p);
        let td3 = mrz::td3(p);
        let passport = self.class == DocumentClass::Passport;
        self.fields
            .iter()
            .map(|f| {
                let v = match f.source {
                    FieldSource::Surname => p.surname.clone(),
                    FieldSource::Name => p.name.clone(),
                    FieldSource::Sex => p.sex.letter().to_string(),
                    FieldSource::BirthDate => self.date(p.birth_date),
                    FieldSource::BirthPlace => p.birthplace.name.clone(),
                    FieldSource::Address => p.address.clone(),
                    FieldSource::FiscalCode => p.fiscal_code.clone(),
                    FieldSource::DocumentNumber => p.document_number.clone(),
                    FieldSource::IssueDate => self.date(p.release_date),
                    FieldSource::ExpiryDate => self.date(p.expiry_date),
                    FieldSource::Height => rng.random_range(150..=199).to_string(),
                    FieldSource::Categories => {
                        const CATS: [&str; 9] = ["AM", "A1", "A2", "A", "B1", "B", "BE", "C1", "C"];
                        let n = rng.random_range(1..=4);
                        let start = rng.random_range(0..=CATS.len() - n);
                        CATS[start..start + n].join(" ")
                    }
                    FieldSource::Restrictions => {
                        const CODES: [&str; 5] = ["01", "02", "70", "78", "95"];
                        let n = rng.random_range(1..=2);
                        let mut picked: Vec<&str> = CODES.choose_multiple(rng, n).copied().collect();
                        picked.sort();
                        picked.join(" ")
                    }
                    FieldSource::Mrz1 if passport => td3[0].clone(),
                    FieldSource::Mrz2 if passport => td3[1].clone(),
                    FieldSource::Mrz1 => td1[0].clone(),
                    FieldSource::Mrz2 => td1[1].clone(),
                    FieldSource::Mrz3 => td1[2].clone(),
                };
                (f.name.clone(), v)
            })
            .collect()
    }
}

/// Replaces every letter and digit with a random one of the same kind,
/// keeping length and spacing.
pub fn scramble(text: &str, rng: &mut impl Rng) -> String {
    text.chars()
        .map(|c| match c {
            'A'..='Z' => rng.random_range(b'A'..=b'Z') as char,
            '0'..='9' => rng.random_range(b'0'..=b'9') as char,
            other => other,
        })
        .collect()
}

/// Layouts for every document class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutRegistry {
    pub layouts: Vec<DocumentLayout>,
}

impl LayoutRegistry {
    pub fn get(&self, class: DocumentClass) -> Result<&DocumentLayout> {
        self.layouts
            .iter()
            .find(|l| l.class == class)
            .ok_or_else(|| Error::MissingLayout(class.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        for l in &self.layouts {
            l.validate()?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let reg: LayoutRegistry = serde_json::from_str(&text)?;
        reg.validate()?;
        Ok(reg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// The built-in schematic layouts.
    pub fn builtin() -> Self {
        LayoutRegistry { layouts: DocumentClass::ALL.iter().map(|&c| builtin_layout(c)).collect() }
    }
}

const DARK: Rgb = [25, 25, 35];
const ID1: f64 = 85.60 / 53.98;

struct Rows {
    base_height: f64,
    ink: Rgb,
    fields: Vec<FieldSpec>,
}

impl Rows {
    fn new(aspect: f64, ink: Rgb) -> Self {
        Rows { base_height: 1000.0 / aspect, ink, fields: Vec::new() }
    }

    /// A field whose rectangle is 1.5 text bands tall.
    fn add(&mut self, name: &str, source: FieldSource, label: &str, x: f64, y: f64, w: f64, size: f64) -> &mut Self {
        self.fields.push(FieldSpec {
            name: name.into(),
            rect: NormRect::new(x, y, w, size * 1.5 / self.base_height),
            size,
            color: self.ink,
            source,
            label: label.into(),
        });
        self
    }
}

fn portrait(x: f64, y: f64, w: f64, h: f64) -> Decoration {
    Decoration::Portrait { rect: NormRect::new(x, y, w, h) }
}

fn builtin_layout(class: DocumentClass) -> DocumentLayout {
    use DocumentClass::*;
    use FieldSource::*;
    let (aspect, typeface, scheme, title, sep, pattern) = match class {
        PaperIdFront => (1.48, Typeface::Serif, ([236, 226, 200], [140, 100, 60]), "CARTA D IDENTITA", ".", 0.045),
        PaperIdBack => (1.48, Typeface::Sans, ([230, 220, 196], [120, 90, 50]), "CONNOTATI", ".", 0.07),
        ElectronicIdFront => (ID1, Typeface::Sans, ([222, 234, 246], [40, 90, 160]), "CARTA DI IDENTITA", ".", 0.05),
        ElectronicIdBack => (ID1, Typeface::Sans, ([214, 228, 242], [70, 120, 170]), "REPUBBLICA ITALIANA", ".", 0.08),
        DrivingLicenseFront => (ID1, Typeface::Sans, ([246, 222, 228], [190, 50, 90]), "PATENTE DI GUIDA", "/", 0.04),
        DrivingLicenseBack => (ID1, Typeface::Sans, ([240, 230, 232], [150, 60, 80]), "CATEGORIE", "/", 0.09),
        HealthCardFront => (ID1, Typeface::Sans, ([220, 242, 234], [0, 120, 100]), "TESSERA SANITARIA", "/", 0.06),
        HealthCardBack => (ID1, Typeface::Sans, ([236, 238, 214], [90, 110, 40]), "TESSERA EUROPEA", "/", 0.05),
        Passport => (1.42, Typeface::Sans, ([236, 226, 242], [110, 60, 130]), "PASSAPORTO", ".", 0.055),
    };
    let scheme = ColorScheme { paper: scheme.0, accent: scheme.1, ink: DARK };
    let mut r = Rows::new(aspect, DARK);
    let mut deco = Vec::new();
    match class {
        PaperIdFront => {
            deco.push(portrait(0.05, 0.20, 0.24, 0.52));
            r.add("surname", Surname, "COGNOME", 0.34, 0.19, 0.62, 36.0)
                .add("name", Name, "NOME", 0.34, 0.33, 0.62, 36.0)
                .add("birth_date", BirthDate, "NATO IL", 0.34, 0.47, 0.40, 34.0)
                .add("birth_place", BirthPlace, "A", 0.34, 0.61, 0.62, 34.0)
                .add("address", Address, "RESIDENZA", 0.34, 0.75, 0.64, 26.0)
                .add("document_number", DocumentNumber, "", 0.04, 0.82, 0.27, 26.0);
        }
        PaperIdBack => {
            deco.push(Decoration::Stamp { cx: 0.82, cy: 0.72, r: 0.12, color: [150, 60, 60] });
            deco.push(Decoration::Frame { rect: NormRect::new(0.03, 0.16, 0.94, 0.80), color: [120, 90, 50] });
            r.add("height", Height, "STATURA", 0.06, 0.22, 0.25, 36.0)
                .add("fiscal_code", FiscalCode, "CODICE FISCALE", 0.06, 0.38, 0.62, 34.0)
                .add("issue_date", IssueDate, "RILASCIATA IL", 0.06, 0.54, 0.40, 34.0)
                .add("expiry_date", ExpiryDate, "SCADENZA", 0.06, 0.70, 0.40, 34.0);
        }
        ElectronicIdFront => {
            deco.push(portrait(0.04, 0.20, 0.26, 0.58));
            deco.push(Decoration::Block { rect: NormRect::new(0.0, 0.93, 1.0, 0.07), color: [40, 90, 160] });
            r.add("surname", Surname, "COGNOME", 0.34, 0.19, 0.62, 36.0)
                .add("name", Name, "NOME", 0.34, 0.33, 0.62, 36.0)
                .add("birth_date", BirthDate, "DATA DI NASCITA", 0.34, 0.47, 0.38, 34.0)
                .add("sex", Sex, "SESSO", 0.78, 0.47, 0.10, 34.0)
                .add("birth_place", BirthPlace, "LUOGO DI NASCITA", 0.34, 0.61, 0.62, 34.0)
                .add("expiry_date", ExpiryDate, "SCADENZA", 0.34, 0.75, 0.38, 34.0)
                .add("document_number", DocumentNumber, "", 0.04, 0.81, 0.27, 26.0);
        }
        ElectronicIdBack => {
            deco.push(Decoration::Block { rect: NormRect::new(0.0, 0.50, 1.0, 0.50), color: [248, 248, 246] });
            r.add("fiscal_code", FiscalCode, "CODICE FISCALE", 0.05, 0.20, 0.62, 34.0)
                .add("address", Address, "INDIRIZZO DI RESIDENZA", 0.05, 0.35, 0.90, 28.0)
                .add("mrz1", Mrz1, "", 0.04, 0.55, 0.92, 28.0)
                .add("mrz2", Mrz2, "", 0.04, 0.69, 0.92, 28.0)
                .add("mrz3", Mrz3, "", 0.04, 0.83, 0.92, 28.0);
        }
        DrivingLicenseFront => {
            deco.push(portrait(0.04, 0.22, 0.25, 0.56));
            deco.push(Decoration::Block { rect: NormRect::new(0.0, 0.0, 0.08, 1.0), color: [40, 60, 150] });
            r.add("surname", Surname, "1", 0.34, 0.18, 0.62, 32.0)
                .add("name", Name, "2", 0.34, 0.30, 0.62, 32.0)
                .add("birth_date", BirthDate, "3", 0.34, 0.42, 0.38, 32.0)
                .add("issue_date", IssueDate, "4A", 0.34, 0.54, 0.38, 32.0)
                .add("expiry_date", ExpiryDate, "4B", 0.34, 0.66, 0.38, 32.0)
                .add("document_number", DocumentNumber, "5", 0.34, 0.78, 0.50, 32.0);
        }
        DrivingLicenseBack => {
            for i in 0..4 {
                let y = 0.18 + 0.19 * i as f64;
                deco.push(Decoration::Frame { rect: NormRect::new(0.03, y, 0.94, 0.17), color: [150, 60, 80] });
            }
            r.add("categories", Categories, "9", 0.06, 0.225, 0.60, 32.0)
                .add("restrictions", Restrictions, "12", 0.06, 0.415, 0.40, 32.0)
                .add("issue_date", IssueDate, "10", 0.06, 0.605, 0.40, 32.0)
                .add("number", DocumentNumber, "5", 0.06, 0.795, 0.50, 32.0);
        }
        HealthCardFront => {
            deco.push(Decoration::Block { rect: NormRect::new(0.06, 0.22, 0.13, 0.19), color: [212, 175, 55] });
            deco.push(Decoration::Block { rect: NormRect::new(0.0, 0.88, 1.0, 0.12), color: [0, 120, 100] });
            r.add("fiscal_code", FiscalCode, "CODICE FISCALE", 0.25, 0.18, 0.70, 38.0)
                .add("surname", Surname, "COGNOME", 0.25, 0.335, 0.62, 32.0)
                .add("name", Name, "NOME", 0.25, 0.455, 0.62, 32.0)
                .add("birth_place", BirthPlace, "LUOGO DI NASCITA", 0.25, 0.575, 0.62, 30.0)
                .add("birth_date", BirthDate, "DATA DI NASCITA", 0.25, 0.695, 0.36, 30.0)
                .add("expiry_date", ExpiryDate, "SCADENZA", 0.65, 0.695, 0.32, 30.0);
        }
        HealthCardBack => {
            deco.push(Decoration::Block { rect: NormRect::new(0.0, 0.0, 1.0, 0.13), color: [30, 30, 30] });
            deco.push(Decoration::Block { rect: NormRect::new(0.74, 0.17, 0.22, 0.26), color: [30, 60, 150] });
            r.add("surname", Surname, "3 COGNOME", 0.05, 0.22, 0.62, 32.0)
                .add("name", Name, "4 NOME", 0.05, 0.36, 0.62, 32.0)
                .add("birth_date", BirthDate, "5 DATA DI NASCITA", 0.05, 0.50, 0.36, 30.0)
                .add("fiscal_code", FiscalCode, "6 NUMERO IDENTIFICAZIONE", 0.05, 0.64, 0.62, 30.0)
                .add("card_number", DocumentNumber, "8 NUMERO TESSERA", 0.05, 0.78, 0.62, 28.0);
        }
        Passport => {
            deco.push(portrait(0.04, 0.15, 0.25, 0.50));
            deco.push(Decoration::Block { rect: NormRect::new(0.0, 0.755, 1.0, 0.245), color: [250, 248, 250] });
            r.add("document_number", DocumentNumber, "PASSAPORTO N", 0.34, 0.13, 0.40, 28.0)
                .add("surname", Surname, "COGNOME", 0.34, 0.215, 0.62, 28.0)
                .add("name", Name, "NOME", 0.34, 0.30, 0.62, 28.0)
                .add("birth_date", BirthDate, "DATA DI NASCITA", 0.34, 0.385, 0.36, 28.0)
                .add("sex", Sex, "SESSO", 0.76, 0.385, 0.10, 28.0)
                .add("birth_place", BirthPlace, "LUOGO DI NASCITA", 0.34, 0.47, 0.62, 28.0)
                .add("issue_date", IssueDate, "DATA DI RILASCIO", 0.34, 0.555, 0.36, 28.0)
                .add("expiry_date", ExpiryDate, "SCADENZA", 0.34, 0.64, 0.36, 28.0)
                .add("mrz1", Mrz1, "", 0.03, 0.78, 0.94, 24.0)
                .add("mrz2", Mrz2, "", 0.03, 0.88, 0.94, 24.0);
        }
    }
    DocumentLayout {
        class,
        aspect_ratio: aspect,
        base_width: 1000,
        typeface,
        scheme,
        title: title.into(),
        date_separator: sep.into(),
        pattern,
        decorations: deco,
        fields: r.fields,
    }
}
