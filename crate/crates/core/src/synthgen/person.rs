//! Dummy personal data and the identifiers derived from it.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Months, NaiveDate};
use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::DocumentClass;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sex {
    M,
    F,
}

impl Sex {
    pub fn letter(self) -> char {
        match self {
            Sex::M => 'M',
            Sex::F => 'F',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Place {
    pub name: String,
    /// Four-character cadastral code, e.g. `H501`.
    pub code: String,
}

/// Source lists for dummy records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lists {
    pub surnames: Vec<String>,
    pub male_names: Vec<String>,
    pub female_names: Vec<String>,
    pub places: Vec<Place>,
    pub streets: Vec<String>,
}

/// Optional replacements for the bundled lists; each file holds one entry
/// per line, places as `NAME;CODE`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ListPaths {
    pub surnames: Option<PathBuf>,
    pub male_names: Option<PathBuf>,
    pub female_names: Option<PathBuf>,
    pub places: Option<PathBuf>,
    pub streets: Option<PathBuf>,
}

fn entries(text: &str) -> Vec<String> {
    text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_owned).collect()
}

fn parse_places(text: &str) -> Result<Vec<Place>> {
    entries(text)
        .into_iter()
        .map(|line| match line.split_once(';') {
            Some((name, code)) => Ok(Place { name: name.trim().to_owned(), code: code.trim().to_owned() }),
            None => Err(Error::Format(format!("place entry {line:?} is not NAME;CODE"))),
        })
        .collect()
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

impl Lists {
    pub fn bundled() -> Self {
        Lists {
            surnames: entries(include_str!("../../data/surnames.txt")),
            male_names: entries(include_str!("../../data/male_names.txt")),
            female_names: entries(include_str!("../../data/female_names.txt")),
            places: parse_places(include_str!("../../data/places.txt")).expect("bundled places"),
            streets: entries(include_str!("../../data/streets.txt")),
        }
    }

    /// Bundled lists with any configured files swapped in.
    pub fn load(paths: &ListPaths) -> Result<Self> {
        let mut lists = Self::bundled();
        if let Some(p) = &paths.surnames {
            lists.surnames = entries(&read(p)?);
        }
        if let Some(p) = &paths.male_names {
            lists.male_names = entries(&read(p)?);
        }
        if let Some(p) = &paths.female_names {
            lists.female_names = entries(&read(p)?);
        }
        if let Some(p) = &paths.places {
            lists.places = parse_places(&read(p)?)?;
        }
        if let Some(p) = &paths.streets {
            lists.streets = entries(&read(p)?);
        }
        Ok(lists)
    }

    fn check(&self) -> Result<()> {
        let empty = [
            ("surnames", self.surnames.is_empty()),
            ("male names", self.male_names.is_empty()),
            ("female names", self.female_names.is_empty()),
            ("places", self.places.is_empty()),
            ("streets", self.streets.is_empty()),
        ];
        match empty.iter().find(|(_, e)| *e) {
            Some((name, _)) => Err(Error::EmptyList(name)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonRecord {
    pub surname: String,
    pub name: String,
    pub sex: Sex,
    pub birth_date: NaiveDate,
    pub release_date: NaiveDate,
    pub expiry_date: NaiveDate,
    pub birthplace: Place,
    pub address: String,
    pub fiscal_code: String,
    pub document_number: String,
}

/// Years of validity from release to expiry.
pub fn validity_years(class: DocumentClass) -> u32 {
    match class {
        DocumentClass::HealthCardFront | DocumentClass::HealthCardBack => 6,
        _ => 10,
    }
}

fn letters(rng: &mut impl Rng, n: usize) -> String {
    (0..n).map(|_| rng.random_range(b'A'..=b'Z') as char).collect()
}

fn digits(rng: &mut impl Rng, n: usize) -> String {
    (0..n).map(|_| rng.random_range(b'0'..=b'9') as char).collect()
}

/// Document number in the format of the given class.
pub fn document_number(class: DocumentClass, rng: &mut impl Rng) -> String {
    use DocumentClass::*;
    match class {
        PaperIdFront | PaperIdBack => format!("{} {}", letters(rng, 2), digits(rng, 7)),
        ElectronicIdFront | ElectronicIdBack => format!("C{}{}{}", letters(rng, 1), digits(rng, 5), letters(rng, 2)),
        DrivingLicenseFront | DrivingLicenseBack => format!("U1{}{}", digits(rng, 7), letters(rng, 1)),
        HealthCardFront | HealthCardBack => format!("80380{}", digits(rng, 15)),
        Passport => format!("Y{}{}", letters(rng, 1), digits(rng, 7)),
    }
}

fn date_between(rng: &mut impl Rng, from: NaiveDate, to: NaiveDate) -> NaiveDate {
    let span = (to - from).num_days();
    from + chrono::Duration::days(rng.random_range(0..=span))
}

fn years_before(d: NaiveDate, years: u32) -> NaiveDate {
    d.checked_sub_months(Months::new(12 * years)).expect("date in range")
}

/// Draws a dummy person. Dates are relative to `today`: birth 18 to 90
/// years back, release within the last 10 years, expiry after the class
/// validity period.
pub fn gen_person(rng: &mut impl Rng, lists: &Lists, class: DocumentClass, today: NaiveDate) -> Result<PersonRecord> {
    lists.check()?;
    let sex = if rng.random_bool(0.5) { Sex::M } else { Sex::F };
    let surname = lists.surnames.choose(rng).expect("non-empty").clone();
    let names = if sex == Sex::M { &lists.male_names } else { &lists.female_names };
    let name = names.choose(rng).expect("non-empty").clone();
    let birth_date = date_between(rng, years_before(today, 90), years_before(today, 18));
    let release_date = date_between(rng, years_before(today, 10), today);
    let expiry_date = release_date
        .checked_add_months(Months::new(12 * validity_years(class)))
        .expect("date in range");
    let birthplace = lists.places.choose(rng).expect("non-empty").clone();
    let street = lists.streets.choose(rng).expect("non-empty");
    let address = format!("{street} {}", rng.random_range(1..=199));
    let document_number = document_number(class, rng);
    let mut person = PersonRecord {
        surname,
        name,
        sex,
        birth_date,
        release_date,
        expiry_date,
        birthplace,
        address,
        fiscal_code: String::new(),
        document_number,
    };
    person.fiscal_code = fiscal_code(&person)?;
    Ok(person)
}

const MONTH_LETTERS: &[u8; 12] = b"ABCDEHLMPRST";
const ODD_VALUES: [u32; 26] = [1, 0, 5, 7, 9, 13, 15, 17, 19, 21, 2, 4, 18, 20, 11, 3, 6, 8, 12, 14, 16, 10, 22, 25, 24, 23];

fn name_letters(s: &str) -> Result<Vec<u8>> {
    let up = s.to_ascii_uppercase();
    if !up.bytes().all(|b| b.is_ascii_uppercase() || b == b' ') || !up.bytes().any(|b| b.is_ascii_uppercase()) {
        return Err(Error::InvalidName(s.to_owned()));
    }
    Ok(up.bytes().filter(u8::is_ascii_uppercase).collect())
}

fn is_vowel(b: &u8) -> bool {
    b"AEIOU".contains(b)
}

fn three(consonants: &[u8], vowels: &[u8]) -> String {
    consonants
        .iter()
        .chain(vowels)
        .chain(b"XXX")
        .take(3)
        .map(|&b| b as char)
        .collect()
}

/// Check character over the first 15 characters of a fiscal code.
pub fn fiscal_check_char(first15: &str) -> char {
    let sum: u32 = first15
        .bytes()
        .enumerate()
        .map(|(i, b)| {
            let v = if b.is_ascii_digit() { (b - b'0') as usize } else { (b - b'A') as usize };
            if i % 2 == 0 {
                ODD_VALUES[v]
            } else {
                v as u32
            }
        })
        .sum();
    (b'A' + (sum % 26) as u8) as char
}

/// The 16-character Italian fiscal code of a person.
pub fn fiscal_code(p: &PersonRecord) -> Result<String> {
    let surname = name_letters(&p.surname)?;
    let name = name_letters(&p.name)?;
    let code = &p.birthplace.code;
    let code_ok = code.len() == 4
        && code.as_bytes()[0].is_ascii_uppercase()
        && code.bytes().skip(1).all(|b| b.is_ascii_digit());
    if !code_ok {
        return Err(Error::InvalidParam(format!("cadastral code {code:?}")));
    }
    let (sv, sc): (Vec<u8>, Vec<u8>) = surname.iter().partition(|b| is_vowel(b));
    let (nv, mut nc): (Vec<u8>, Vec<u8>) = name.iter().partition(|b| is_vowel(b));
    if nc.len() >= 4 {
        nc = vec![nc[0], nc[2], nc[3]];
    }
    let day = p.birth_date.day() + if p.sex == Sex::F { 40 } else { 0 };
    let mut out = format!(
        "{}{}{:02}{}{:02}{}",
        three(&sc, &sv),
        three(&nc, &nv),
        p.birth_date.year().rem_euclid(100),
        MONTH_LETTERS[p.birth_date.month0() as usize] as char,
        day,
        code
    );
    out.push(fiscal_check_char(&out));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn person(surname: &str, name: &str, sex: Sex, y: i32, m: u32, d: u32, code: &str) -> PersonRecord {
        let date = NaiveDate::from_ymd_opt(y, m, d).unwrap();
        PersonRecord {
            surname: surname.into(),
            name: name.into(),
            sex,
            birth_date: date,
            release_date: date,
            expiry_date: date,
            birthplace: Place { name: "X".into(), code: code.into() },
            address: String::new(),
            fiscal_code: String::new(),
            document_number: String::new(),
        }
    }

    #[test]
    fn well_known_codes() {
        let p = person("ROSSI", "MARIO", Sex::M, 1980, 1, 1, "H501");
        assert_eq!(fiscal_code(&p).unwrap(), "RSSMRA80A01H501U");
        let p = person("ROSSI", "MARIO", Sex::M, 1980, 3, 7, "H501");
        assert!(fiscal_code(&p).unwrap().starts_with("RSSMRA80C07H501"));
    }

    #[test]
    fn name_rules() {
        // four or more consonants: first, third and fourth
        let p = person("FO", "GIANFRANCO", Sex::M, 1970, 12, 31, "F205");
        let c = fiscal_code(&p).unwrap();
        assert_eq!(&c[..6], "FOXGFR");
        assert_eq!(&c[8..11], "T31");
        let p = person("DE LUCA", "ANNA", Sex::F, 1999, 5, 7, "A944");
        let c = fiscal_code(&p).unwrap();
        assert_eq!(&c[..11], "DLCNNA99E47");
    }

    #[test]
    fn invalid_names() {
        assert!(matches!(fiscal_code(&person("", "MARIO", Sex::M, 1980, 1, 1, "H501")), Err(Error::InvalidName(_))));
        assert!(matches!(fiscal_code(&person("ROSSI", "M4RIO", Sex::M, 1980, 1, 1, "H501")), Err(Error::InvalidName(_))));
        assert!(fiscal_code(&person("ROSSI", "MARIO", Sex::M, 1980, 1, 1, "H5O1")).is_err());
    }

    #[test]
    fn generated_people_are_consistent() {
        let lists = Lists::bundled();
        let today = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..1000 {
            let class = DocumentClass::ALL[i % 9];
            let p = gen_person(&mut rng, &lists, class, today).unwrap();
            assert!(p.birth_date < p.release_date && p.release_date < p.expiry_date);
            assert!(lists.surnames.contains(&p.surname));
            assert!(p.birth_date <= years_before(today, 18) && p.birth_date >= years_before(today, 90));
            assert_eq!(p.fiscal_code.len(), 16);
        }
        let a = gen_person(&mut ChaCha8Rng::seed_from_u64(5), &lists, DocumentClass::Passport, today).unwrap();
        let b = gen_person(&mut ChaCha8Rng::seed_from_u64(5), &lists, DocumentClass::Passport, today).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_list_is_reported() {
        let mut lists = Lists::bundled();
        lists.streets.clear();
        let today = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
        let r = gen_person(&mut ChaCha8Rng::seed_from_u64(0), &lists, DocumentClass::Passport, today);
        assert!(matches!(r, Err(Error::EmptyList("streets"))));
    }
}
