//! Machine-readable zone lines for cards (three lines of 30) and passports
//! (two lines of 44).

use chrono::{Datelike, NaiveDate};

use super::person::PersonRecord;

fn char_value(c: char) -> u32 {
    match c {
        '0'..='9' => c as u32 - '0' as u32,
        'A'..='Z' => c as u32 - 'A' as u32 + 10,
        _ => 0,
    }
}

/// Check digit with repeating weights 7, 3, 1.
pub fn check_digit(s: &str) -> char {
    let sum: u32 = s.chars().zip([7, 3, 1].iter().cycle()).map(|(c, w)| char_value(c) * w).sum();
    char::from_digit(sum % 10, 10).expect("digit")
}

fn yymmdd(d: NaiveDate) -> String {
    format!("{:02}{:02}{:02}", d.year().rem_euclid(100), d.month(), d.day())
}

/// `s` with spaces as fillers, padded or cut to `n` characters.
fn field(s: &str, n: usize) -> String {
    let mut out: String = s.chars().map(|c| if c == ' ' { '<' } else { c }).take(n).collect();
    while out.chars().count() < n {
        out.push('<');
    }
    out
}

fn with_check(s: String) -> String {
    let c = check_digit(&s);
    s + &c.to_string()
}

fn names(p: &PersonRecord, n: usize) -> String {
    field(&format!("{}<<{}", p.surname, p.name), n)
}

fn compact_number(p: &PersonRecord) -> String {
    p.document_number.chars().filter(|c| *c != ' ').collect()
}

/// Three 30-character lines of a national identity card.
pub fn td1(p: &PersonRecord) -> [String; 3] {
    let number = with_check(field(&compact_number(p), 9));
    let line1 = format!("I<ITA{number}{}", field("", 15));
    let birth = with_check(yymmdd(p.birth_date));
    let expiry = with_check(yymmdd(p.expiry_date));
    let optional = field("", 11);
    let composite = format!("{}{}{}{}", &line1[5..30], birth, expiry, optional);
    let line2 = format!("{birth}{}{expiry}ITA{optional}{}", p.sex.letter(), check_digit(&composite));
    [line1, line2, names(p, 30)]
}

/// Two 44-character lines of a passport data page.
pub fn td3(p: &PersonRecord) -> [String; 2] {
    let line1 = format!("P<ITA{}", names(p, 39));
    let number = with_check(field(&compact_number(p), 9));
    let birth = with_check(yymmdd(p.birth_date));
    let expiry = with_check(yymmdd(p.expiry_date));
    let personal = with_check(field("", 14));
    let composite = check_digit(&format!("{number}{birth}{expiry}{personal}"));
    let line2 = format!("{number}ITA{birth}{}{expiry}{personal}{composite}", p.sex.letter());
    [line1, line2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_specimen_check_digits() {
        assert_eq!(check_digit("L898902C3"), '6');
        assert_eq!(check_digit("740812"), '2');
        assert_eq!(check_digit("120415"), '9');
        assert_eq!(check_digit("ZE184226B<<<<<"), '1');
        assert_eq!(check_digit("L898902C3674081221204159ZE184226B<<<<<1"), '0');
        assert_eq!(check_digit("<<<<"), '0');
    }

    #[test]
    fn filler_and_truncation() {
        assert_eq!(field("DE LUCA", 10), "DE<LUCA<<<");
        assert_eq!(field("ABCDEFGHIJK", 4), "ABCD");
    }
}
