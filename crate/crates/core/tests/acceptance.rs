//! Acceptance suite. Runs every criterion, prints one line per criterion
//! and exits non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{OMorph, OSig};
use zsuper::atlas::{build_split_model, extract_bundle};
use zsuper::degree::sign_factor;
use zsuper::findim::{check_graded_commutative, clifford, quaternions, search_degree_assignments};
use zsuper::format::{self, parse_atlas_file};
use zsuper::morphism::{compose, invert, jacobian, pullback, transformation_template};
use zsuper::splitting::{build_base_embedding, split, verify_iso};
use zsuper::{Degree, GSeries, Morphism, Sign, VarRef};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn fixture(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name].iter().collect();
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn bits(n: usize, packed: u32) -> Vec<u8> {
    (0..n).map(|i| (packed >> (n - 1 - i) & 1) as u8).collect()
}

fn deg(s: &str) -> Degree {
    s.parse().expect("degree literal")
}

fn sign_rule_table() -> Outcome {
    let mut pairs = 0;
    for n in 1..=4 {
        for a in 0..1u32 << n {
            for b in 0..1u32 << n {
                let (ca, cb) = (bits(n, a), bits(n, b));
                let dot: u32 = ca.iter().zip(&cb).map(|(x, y)| u32::from(x * y)).sum();
                let direct = if dot % 2 == 0 { 1 } else { -1 };
                let da = Degree::from_bits(&ca).map_err(err)?;
                let db = Degree::from_bits(&cb).map_err(err)?;
                let got = sign_factor(da, db).map_err(err)?.value();
                ensure!(got == direct, "sign({da}, {db}) = {got}, expected {direct}");
                pairs += 1;
            }
        }
    }
    let claims = [("110", "101", Sign::Minus), ("100", "010", Sign::Plus), ("110", "110", Sign::Plus)];
    for (a, b, expected) in claims {
        let got = sign_factor(deg(a), deg(b)).map_err(err)?;
        ensure!(got == expected, "sign({a}, {b}) = {got:?}, expected {expected:?}");
    }
    Ok(format!("{pairs} pairs, 3 claims"))
}

fn eq2_morphism(order: usize) -> Result<Morphism, String> {
    format::parse_morphism_file(&fixture("eq2.morph"))
        .and_then(|m| m.truncate(order))
        .map_err(err)
}

fn taylor_reproduction() -> Outcome {
    let m = eq2_morphism(6)?;
    let f = format::parse_series_file(&fixture("F.series")).map_err(err)?;
    let got = pullback(&m, &f).map_err(err)?;
    let mut terms = Vec::new();
    let mut factorial = 1u64;
    for alpha in 0..=3u64 {
        if alpha > 0 {
            factorial *= alpha;
        }
        let coeff = if factorial == 1 { String::new() } else { format!("1/{factorial} * ") };
        let func = if alpha == 0 { "F(x)".to_string() } else { format!("F[{alpha}](x)") };
        let mono = if alpha == 0 { String::new() } else { format!(" * y^{}", 2 * alpha) };
        terms.push(format!("{coeff}{func}{mono}"));
    }
    let expected = GSeries::parse(&terms.join(" + "), m.source(), 6).map_err(err)?;
    ensure!(got == expected, "got {got}, expected {expected}");
    ensure!(got.term_count() == 4, "expected 4 terms, got {}", got.term_count());
    Ok(got.to_string())
}

fn oracle_equivalence() -> Outcome {
    let mut checked = 0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = OSig::random(&mut rng, 3, 2, 4);
        let k = rng.gen_range(1..=5);
        let words = s.words_of_degree(k, u32::MAX);
        let pick = |rng: &mut ChaCha8Rng| {
            let d = s.word_degree(&words[rng.gen_range(0..words.len())]);
            common::random_elem(rng, &s, k, d, 0.8)
        };
        let f = pick(&mut rng);
        let g = pick(&mut rng);
        let m = OMorph::random(&mut rng, &s, k);
        let product = f.to_series(&s).multiply(&g.to_series(&s)).map_err(err)?;
        ensure!(product == f.mul(&g, &s).to_series(&s), "seed {seed}: multiply disagrees");
        let pulled = pullback(&m.to_morphism(&s, k), &f.to_series(&s)).map_err(err)?;
        ensure!(pulled == m.pullback(&f, &s).to_series(&s), "seed {seed}: pullback disagrees");
        checked += 1;
    }
    Ok(format!("{checked} instances"))
}

/// Shapes `y^a xi^b eta^c` of the general coordinate change on
/// `(x, y, xi, eta)`, for `r >= 0`, as exponent triples.
fn coordinate_change_families(order: u32) -> Vec<(&'static str, BTreeSet<(u32, u32, u32)>)> {
    let mut x = BTreeSet::new();
    let mut y = BTreeSet::new();
    let mut xi = BTreeSet::new();
    let mut eta = BTreeSet::new();
    for r in 0..=order {
        x.insert((2 * r, 0, 0));
        x.insert((2 * r + 1, 1, 1));
        y.insert((2 * r + 1, 0, 0));
        y.insert((2 * r, 1, 1));
        xi.insert((2 * r, 1, 0));
        xi.insert((2 * r + 1, 0, 1));
        eta.insert((2 * r, 0, 1));
        eta.insert((2 * r + 1, 1, 0));
    }
    let cut = |s: BTreeSet<(u32, u32, u32)>| s.into_iter().filter(|(a, b, c)| a + b + c <= order).collect();
    vec![("x", cut(x)), ("y", cut(y)), ("xi", cut(xi)), ("eta", cut(eta))]
}

fn template_families() -> Outcome {
    let sig = format::parse_signature_file(&fixture("z22.sig")).map_err(err)?;
    let t = transformation_template(&sig, 7);
    let idx = |name: &str| match sig.lookup(name) {
        Some(VarRef::Formal(a)) => a,
        _ => unreachable!("fixture signature"),
    };
    let (iy, ixi, ieta) = (idx("y"), idx("xi"), idx("eta"));
    let mut total = 0;
    for (var, expected) in coordinate_change_families(7) {
        let family = t
            .families
            .iter()
            .find(|f| f.target == var)
            .ok_or_else(|| format!("no family for {var}"))?;
        let got: BTreeSet<(u32, u32, u32)> = family
            .shapes
            .iter()
            .map(|(m, _)| {
                let e = m.exponents();
                (e[iy], e[ixi], e[ieta])
            })
            .collect();
        ensure!(got.len() == family.shapes.len(), "{var}: repeated shapes");
        ensure!(got == expected, "{var}: got {got:?}, expected {expected:?}");
        total += got.len();
    }
    ensure!(t.families.len() == 4, "expected 4 families, got {}", t.families.len());
    Ok(format!("{total} shapes in 4 families"))
}

/// Degrees of the graded Jacobian on `(x, y, xi, eta)`, row by row, as
/// printed in the figure.
const JACOBIAN_FIGURE: [[&str; 4]; 4] = [
    ["00", "11", "01", "10"],
    ["11", "00", "10", "01"],
    ["10", "01", "00", "11"],
    ["01", "10", "11", "00"],
];

/// Cells where the printed figure contradicts the degree law: its
/// lower-left block repeats the upper-right one with columns exchanged.
const FIGURE_ERRATA: [(usize, usize); 4] = [(2, 0), (2, 1), (3, 0), (3, 1)];

fn jacobian_blocks() -> Outcome {
    let vars = [("x", 0b00u32), ("y", 0b11), ("xi", 0b01), ("eta", 0b10)];
    let s = OSig::new(2, vec!["x".into()], vars[1..].iter().map(|(n, d)| (n.to_string(), *d)).collect());
    let sig = &s.sig;
    let pos = |name: &str| {
        let r = sig.lookup(name).expect("variable");
        (0..sig.var_count()).find(|&i| sig.var_ref(i) == r).expect("position")
    };
    let law = |r: usize, c: usize| Degree::from_packed(2, vars[r].1 ^ vars[c].1);

    let mut disagreements = Vec::new();
    for r in 0..4 {
        for c in 0..4 {
            if deg(JACOBIAN_FIGURE[r][c]) != law(r, c) {
                disagreements.push((r, c));
            }
        }
    }
    ensure!(disagreements == FIGURE_ERRATA, "figure disagrees with the degree law at {disagreements:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut nonzero = 0;
    for trial in 0..100 {
        let k = rng.gen_range(2..=5);
        let m = OMorph::random(&mut rng, &s, k).to_morphism(&s, k);
        let j = jacobian(&m).map_err(err)?;
        for (r, (row, _)) in vars.iter().enumerate() {
            for (c, (col, _)) in vars.iter().enumerate() {
                let entry = &j.entries[pos(row)][pos(col)];
                let expected = law(r, c);
                ensure!(
                    entry.is_homogeneous_of(expected),
                    "trial {trial}: d{row}/d{col} = {entry} is not of degree {expected}"
                );
                ensure!(
                    j.expected_degree(pos(row), pos(col)) == expected,
                    "block degree of ({row}, {col}) differs from the degree law"
                );
                if !entry.is_zero() {
                    nonzero += 1;
                }
            }
        }
    }
    Ok(format!(
        "100 morphisms, {nonzero} nonzero entries; figure matches on 12 cells, {} known errata",
        FIGURE_ERRATA.len()
    ))
}

fn round_trip_inversion() -> Outcome {
    for k in 0..=6 {
        let m = eq2_morphism(k)?;
        let inv = invert(&m, None).map_err(err)?;
        let left = compose(&inv, &m).map_err(err)?;
        let right = compose(&m, &inv).map_err(err)?;
        ensure!(left.is_identity(), "K={k}: inverse after map is not the identity");
        ensure!(right.is_identity(), "K={k}: map after inverse is not the identity");
        let x = inv.image_named("x").ok_or("no image for x")?;
        let exact = GSeries::parse("x - y^2", m.source(), k).map_err(err)?;
        ensure!(*x == exact, "K={k}: inverse x image is {x}");
    }
    Ok("K = 0..6".into())
}

fn quaternion_certification() -> Outcome {
    let start = Instant::now();
    let h = quaternions();
    let found = search_degree_assignments(&h, 3).map_err(err)?;
    ensure!(!found.is_empty(), "no Z2^3 assignment for the quaternions");
    for d in &found {
        let r = check_graded_commutative(&h, d).map_err(err)?;
        ensure!(r.passed(), "returned assignment fails:\n{}", d.display(&h));
    }
    ensure!(search_degree_assignments(&h, 1).map_err(err)?.is_empty(), "Z2^1 assignment found");
    let cl = clifford(1, 1).map_err(err)?;
    let cl_found = search_degree_assignments(&cl, 3).map_err(err)?;
    ensure!(!cl_found.is_empty(), "no Z2^3 assignment for Cl(1,1)");
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "search took {elapsed:?}");
    Ok(format!("{} quaternion and {} Cl(1,1) assignments", found.len(), cl_found.len()))
}

const REQUIRED_CHECKS: [&str; 12] = [
    "epsilon-phi",
    "phi-consistency",
    "omega-derivation",
    "omega-antisymmetry",
    "omega-coboundary",
    "iso-restricts-phi",
    "iso-unital",
    "iso-degree",
    "iso-multiplicative",
    "iso-linear-part",
    "intertwining",
    "iso-invertible",
];

fn splitting_pipeline() -> Outcome {
    let mut notes = Vec::new();
    for name in ["split", "oddpair", "twist", "three"] {
        let atlas = parse_atlas_file(&fixture(&format!("{name}.atlas"))).map_err(err)?;
        let result = split(&atlas, 3).map_err(err)?;
        let report = &result.report;
        if let Some(bad) = report.failures().next() {
            return Err(format!("{name}: {bad}"));
        }
        for check in REQUIRED_CHECKS {
            ensure!(report.passed(check), "{name}: check {check} did not run");
        }
        if atlas.triples().is_empty() {
            ensure!(report.find("omega-cocycle").next().is_none(), "{name}: cocycle without triples");
        } else {
            ensure!(report.passed("omega-cocycle"), "{name}: omega-cocycle did not run");
        }
        let text = format::print_splitting_file(&result);
        let reread = format::parse_splitting_file(&text).map_err(err)?;
        ensure!(verify_iso(&atlas, &reread).all_passed(), "{name}: verify rejects the split output");
        if name == "split" {
            let mut scratch = zsuper::report::Report::new();
            let (_, trace) = build_base_embedding(&atlas, 3, &mut scratch).map_err(err)?;
            let all_zero = trace.omegas.iter().flat_map(|o| o.values()).flatten().all(GSeries::is_zero);
            ensure!(all_zero, "split model has a nonzero omega");
            ensure!(result.iso.iter().all(Morphism::is_identity), "split model iso is not the identity");
        } else {
            ensure!(result.iso.iter().any(|m| !m.is_identity()), "{name}: trivial iso");
        }
        notes.push(name);
    }

    // negative controls: drop one correction term from a result file
    let cases = [
        ("oddpair", "phi U x = ", "phi U x = x", "phi-consistency", "U,V:x"),
        ("twist", "iso U xi = ", "iso U xi = xi", "intertwining", "U,V:xi"),
    ];
    for (name, prefix, replacement, check, scope) in cases {
        let atlas = parse_atlas_file(&fixture(&format!("{name}.atlas"))).map_err(err)?;
        let text = format::print_splitting_file(&split(&atlas, 3).map_err(err)?);
        let corrupted: String = text
            .lines()
            .map(|l| if l.starts_with(prefix) { replacement.to_string() } else { l.to_string() })
            .collect::<Vec<_>>()
            .join("\n");
        ensure!(corrupted != text.trim_end(), "{name}: nothing to corrupt");
        let bad = format::parse_splitting_file(&corrupted).map_err(err)?;
        let report = verify_iso(&atlas, &bad);
        let hit = report
            .failures()
            .find(|f| f.name == check && f.scope == scope && f.residual.is_some());
        ensure!(hit.is_some(), "{name}: corruption not localized at {check} {scope}:\n{report}");
    }
    Ok(format!("{} fixtures, 2 negative controls", notes.len()))
}

fn split_model_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for i in 0..20 {
        let bundle = common::bundle::random_bundle(&mut rng);
        let k = rng.gen_range(1..=4);
        let model = build_split_model(&bundle, k).map_err(err)?;
        ensure!(extract_bundle(&model) == bundle, "fixture {i}: round trip changed the bundle");
    }
    Ok("20 bundles".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, u64); 9] = [
        ("sign-rule table", sign_rule_table, 60),
        ("Taylor expansion of F(x + y^2)", taylor_reproduction, 60),
        ("oracle equivalence", oracle_equivalence, 60),
        ("transformation template", template_families, 60),
        ("Jacobian block law", jacobian_blocks, 60),
        ("round-trip inversion", round_trip_inversion, 60),
        ("quaternion certification", quaternion_certification, 60),
        ("splitting pipeline", splitting_pipeline, 120),
        ("split-model round trip", split_model_round_trip, 60),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > Duration::from_secs(*limit) => Err(format!("exceeded {limit} s")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}; {:.2?})", i + 1, elapsed),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail}; {:.2?})", i + 1, elapsed);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
