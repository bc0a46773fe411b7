//! Random two-chart graded bundles with exactly invertible frames.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use zsuper::atlas::{GradedBundleData, Nerve};
use zsuper::format;
use zsuper::parse::parse_coeff;
use zsuper::{CoeffMatrix, Rational};

/// Integer polynomial in `x`, printed with `x` replaced by `(x + shift)`.
fn poly_text(coeffs: &[i64], shift: &str) -> String {
    let terms: Vec<String> = coeffs
        .iter()
        .enumerate()
        .map(|(e, c)| format!("({c}) * (x + {shift})^{e}"))
        .collect();
    format!("({})", terms.join(" + "))
}

fn frac(n: i64, d: i64) -> String {
    format!("({})", Rational::new(n.into(), d.into()))
}

/// A random two-chart graded bundle: translation on the base and frames
/// `D U(x)` with `D` diagonal and `U` unipotent upper triangular.
pub fn random_bundle(rng: &mut ChaCha8Rng) -> GradedBundleData {
    let n = rng.gen_range(1..=2);
    let mut degrees: Vec<u32> = (1..(1u32 << n)).collect();
    degrees.retain(|_| rng.gen_bool(0.7));
    if degrees.is_empty() {
        degrees.push(1);
    }
    let mut sig_text = format!("x:{}", "0".repeat(n));
    let mut ranks = Vec::new();
    for (k, d) in degrees.iter().enumerate() {
        let rank = rng.gen_range(1..=2);
        ranks.push(rank);
        for r in 0..rank {
            let bits: String = (0..n).map(|i| if d >> (n - 1 - i) & 1 == 1 { '1' } else { '0' }).collect();
            sig_text.push_str(&format!(" a{k}_{r}:{bits}"));
        }
    }
    let sig = Arc::new(format::parse_signature(&sig_text).unwrap());
    let names = vec!["x".to_string()];
    let c = rng.gen_range(-2..=2);
    let coeff = |t: &str| parse_coeff(t, &names).unwrap();
    let scalars = [(1, 1), (-1, 1), (2, 1), (1, 3), (-3, 2)];
    let mut uv = Vec::new();
    let mut vu = Vec::new();
    for &rank in &ranks {
        let (dn, dd) = scalars[rng.gen_range(0..scalars.len())];
        let d1 = frac(dn, dd);
        let d1_inv = frac(dd, dn);
        if rank == 1 {
            uv.push(CoeffMatrix::from_rows(vec![vec![coeff(&d1)]]));
            vu.push(CoeffMatrix::from_rows(vec![vec![coeff(&d1_inv)]]));
            continue;
        }
        let (en, ed) = scalars[rng.gen_range(0..scalars.len())];
        let d2 = frac(en, ed);
        let d2_inv = frac(ed, en);
        let a: Vec<i64> = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(-2..=2)).collect();
        let zero = coeff("0");
        uv.push(CoeffMatrix::from_rows(vec![
            vec![coeff(&d1), coeff(&format!("{d1} * {}", poly_text(&a, "0")))],
            vec![zero.clone(), coeff(&d2)],
        ]));
        vu.push(CoeffMatrix::from_rows(vec![
            vec![coeff(&d1_inv), coeff(&format!("-{d2_inv} * {}", poly_text(&a, &format!("(-({c}))"))))],
            vec![zero, coeff(&d2_inv)],
        ]));
    }
    let nerve = Nerve::new(vec!["U".into(), "V".into()], &[("U".into(), "V".into())], &[]).unwrap();
    let base = BTreeMap::from([
        ((0, 1), vec![coeff(&format!("x + ({c})"))]),
        ((1, 0), vec![coeff(&format!("x - ({c})"))]),
    ]);
    let blocks = BTreeMap::from([((0, 1), uv), ((1, 0), vu)]);
    GradedBundleData::new(sig, nerve, base, blocks).unwrap()
}
