//! Reference implementations checked against the library. Shared with the
//! acceptance run, so nothing here may call the code under test except to
//! obtain its outputs.
#![allow(dead_code)]

use idreader::tensornet::{Architecture, Network, Tensor};

const MONTHS: &str = "ABCDEHLMPRST";

/// Values of characters in odd (1-based) positions of the check-character
/// computation, listed in the order `0-9A-Z`.
const ODD: [u32; 36] = [
    1, 0, 5, 7, 9, 13, 15, 17, 19, 21, // 0-9
    1, 0, 5, 7, 9, 13, 15, 17, 19, 21, // A-J
    2, 4, 18, 20, 11, 3, 6, 8, 12, 14, // K-T
    16, 10, 22, 25, 24, 23, // U-Z
];

fn alnum_index(c: char) -> usize {
    match c {
        '0'..='9' => c as usize - '0' as usize,
        'A'..='Z' => 10 + c as usize - 'A' as usize,
        _ => panic!("not alphanumeric: {c:?}"),
    }
}

fn even_value(c: char) -> u32 {
    match c {
        '0'..='9' => c as u32 - '0' as u32,
        _ => c as u32 - 'A' as u32,
    }
}

fn split(s: &str) -> (String, String) {
    let letters: String = s.to_uppercase().chars().filter(char::is_ascii_alphabetic).collect();
    letters.chars().partition(|c| !"AEIOU".contains(*c))
}

fn pad3(s: String) -> String {
    format!("{s}XXX")[..3].to_owned()
}

/// Fiscal code from first principles.
pub fn fiscal_code(surname: &str, name: &str, female: bool, year: i32, month: u32, day: u32, place: &str) -> String {
    let (sc, sv) = split(surname);
    let (nc, nv) = split(name);
    let name_part = if nc.len() > 3 {
        let c: Vec<char> = nc.chars().collect();
        [c[0], c[2], c[3]].iter().collect()
    } else {
        pad3(nc + &nv)
    };
    let mut code = pad3(sc + &sv) + &name_part;
    code += &format!("{:02}", year % 100);
    code.push(MONTHS.chars().nth(month as usize - 1).unwrap());
    code += &format!("{:02}", if female { day + 40 } else { day });
    code += place;
    let sum: u32 = code
        .chars()
        .enumerate()
        .map(|(i, c)| if i % 2 == 0 { ODD[alnum_index(c)] } else { even_value(c) })
        .sum();
    code.push((b'A' + (sum % 26) as u8) as char);
    code
}

fn loss(net: &Network<f64>, x: &Tensor<f64>, label: usize) -> f64 {
    -net.predict(x).unwrap()[label].ln()
}

#[derive(Debug, Clone, Copy)]
pub struct GradCheck {
    /// Largest relative error over the compared coordinates.
    pub max_rel: f64,
    pub compared: usize,
    /// Coordinates whose perturbation crossed a ReLU or pooling switch.
    pub skipped: usize,
}

/// Compares backpropagated gradients of the cross-entropy against central
/// differences for every parameter of a small double-precision model.
/// Relative errors use `max(|a|, |n|, floor)` as the denominator.
pub fn gradient_check(blocks: usize, filters: usize, seed: u64, h: f64, floor: f64) -> GradCheck {
    let arch = Architecture { blocks, filters, kernel: 5, input: [12, 12, 3], classes: 9 };
    let mut net = Network::<f64>::new(arch, seed).unwrap();
    // nonzero biases so that every parameter has a visible effect
    for p in net.params_mut() {
        for (i, v) in p.data_mut().iter_mut().enumerate() {
            *v += 0.01 * ((i * 7 + 3) % 11) as f64 / 11.0;
        }
    }
    let x = Tensor::from_vec(&[12, 12, 3], (0..432).map(|i| ((i * 37 + 11) % 101) as f64 / 101.0).collect()).unwrap();
    let label = (seed % 9) as usize;
    let fwd = net.forward(&x).unwrap();
    let pattern = fwd.activation_pattern();
    let grads = net.backward(&fwd, label).unwrap();
    let mut out = GradCheck { max_rel: 0.0, compared: 0, skipped: 0 };
    for t in 0..grads.len() {
        for i in 0..grads[t].len() {
            let orig = net.params()[t].data()[i];
            net.params_mut()[t].data_mut()[i] = orig + h;
            let same_plus = net.forward(&x).unwrap().activation_pattern() == pattern;
            let lp = loss(&net, &x, label);
            net.params_mut()[t].data_mut()[i] = orig - h;
            let same_minus = net.forward(&x).unwrap().activation_pattern() == pattern;
            let lm = loss(&net, &x, label);
            net.params_mut()[t].data_mut()[i] = orig;
            if !(same_plus && same_minus) {
                out.skipped += 1;
                continue;
            }
            let numeric = (lp - lm) / (2.0 * h);
            let analytic = grads[t].data()[i];
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor);
            out.max_rel = out.max_rel.max(rel);
            out.compared += 1;
        }
    }
    out
}
