mod common;

use std::fs;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::bundle::random_bundle;
use zsuper::atlas::{build_split_model, extract_bundle, validate_atlas};
use zsuper::format::{self, parse_atlas_file, print_atlas_file};
use zsuper::splitting::{split, verify_iso};
use zsuper::GSeries;

fn fixture(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name].iter().collect();
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn split_model_round_trip_on_random_bundles() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let bundle = random_bundle(&mut rng);
        assert!(bundle.validate().all_passed(), "{}", bundle.validate());
        let k = rng.gen_range(1..=4);
        let model = build_split_model(&bundle, k).unwrap();
        assert!(model.is_split_form());
        assert!(validate_atlas(&model).all_passed());
        assert_eq!(extract_bundle(&model), bundle);
    }
}

#[test]
fn fixtures_round_trip_and_glue() {
    for name in ["split", "oddpair", "twist", "eq2", "three", "tv"] {
        let text = fixture(&format!("{name}.atlas"));
        let atlas = parse_atlas_file(&text).unwrap();
        let printed = print_atlas_file(&atlas);
        assert_eq!(parse_atlas_file(&printed).unwrap(), atlas, "{name}");
        assert_eq!(print_atlas_file(&parse_atlas_file(&printed).unwrap()), printed, "{name}");
        let report = validate_atlas(&atlas);
        assert!(report.all_passed(), "{name}: {report}");
    }
}

#[test]
fn three_chart_fixture_splits() {
    let atlas = parse_atlas_file(&fixture("three.atlas")).unwrap();
    let result = split(&atlas, 3).unwrap();
    assert!(result.report.all_passed(), "{}", result.report);
    assert!(result.report.find("omega-cocycle").any(|e| e.scope.contains("U,V,W")));
    assert!(verify_iso(&atlas, &result).all_passed());
    let text = format::print_splitting_file(&result);
    assert_eq!(format::parse_splitting_file(&text).unwrap(), result);
}

#[test]
fn eq2_atlas_corrects_the_y_squared_twist() {
    let atlas = parse_atlas_file(&fixture("eq2.atlas")).unwrap();
    let result = split(&atlas, 3).unwrap();
    assert!(result.report.all_passed(), "{}", result.report);
    let sig = atlas.signature();
    // chart U absorbs the non-complement share of the y^2 twist
    let expected = GSeries::parse("x - y^2 + rho(x) y^2", sig, 3).unwrap();
    assert_eq!(result.embedding.values[0][0], expected);
}

#[test]
fn tangent_of_a_vector_bundle_splits() {
    let atlas = parse_atlas_file(&fixture("tv.atlas")).unwrap();
    let result = split(&atlas, 3).unwrap();
    assert!(result.report.all_passed(), "{}", result.report);
    assert!(!result.iso[0].is_identity());
    let bundle = &result.bundle;
    let d01 = bundle.sig.degree_blocks().iter().position(|(d, _)| d.to_string() == "01").unwrap();
    let d11 = bundle.sig.degree_blocks().iter().position(|(d, _)| d.to_string() == "11").unwrap();
    // v and dv carry the same frame change
    assert_eq!(bundle.blocks[&(0, 1)][d01], bundle.blocks[&(0, 1)][d11]);
}

