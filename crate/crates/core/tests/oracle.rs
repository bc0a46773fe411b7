mod common;

use common::{OElem, OMorph, OSig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zsuper::morphism::{compose, pullback};
use zsuper::{Execution, GSeries};

fn instance(seed: u64) -> (OSig, usize, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = OSig::random(&mut rng, 3, 2, 4);
    let k = rng.gen_range(2..=5);
    (s, k, rng)
}

fn random_any(rng: &mut ChaCha8Rng, s: &OSig, k: usize) -> OElem {
    let words = s.words_of_degree(k, u32::MAX);
    let d = if rng.gen_bool(0.3) { 0 } else { s.word_degree(&words[rng.gen_range(0..words.len())]) };
    common::random_elem(rng, s, k, d, 0.8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn multiply_matches_oracle(seed in any::<u64>()) {
        let (s, k, mut rng) = instance(seed);
        let f = random_any(&mut rng, &s, k);
        let g = random_any(&mut rng, &s, k);
        let expected = f.mul(&g, &s).to_series(&s);
        let (ef, eg) = (f.to_series(&s), g.to_series(&s));
        prop_assert_eq!(ef.multiply_with(&eg, Execution::Sequential).unwrap(), expected.clone());
        prop_assert_eq!(ef.multiply_with(&eg, Execution::Parallel).unwrap(), expected);
    }

    #[test]
    fn pullback_matches_oracle(seed in any::<u64>()) {
        let (s, k, mut rng) = instance(seed);
        let m = OMorph::random(&mut rng, &s, k);
        let f = random_any(&mut rng, &s, k);
        let expected = m.pullback(&f, &s).to_series(&s);
        prop_assert_eq!(pullback(&m.to_morphism(&s, k), &f.to_series(&s)).unwrap(), expected);
    }

    #[test]
    fn pullback_is_multiplicative(seed in any::<u64>()) {
        let (s, k, mut rng) = instance(seed);
        let m = OMorph::random(&mut rng, &s, k).to_morphism(&s, k);
        let f = random_any(&mut rng, &s, k).to_series(&s);
        let g = random_any(&mut rng, &s, k).to_series(&s);
        let lhs = pullback(&m, &f.multiply(&g).unwrap()).unwrap();
        let rhs = pullback(&m, &f).unwrap().multiply(&pullback(&m, &g).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn pullback_is_contravariant(seed in any::<u64>()) {
        let (s, k, mut rng) = instance(seed);
        let m1 = OMorph::random(&mut rng, &s, k).to_morphism(&s, k);
        let m2 = OMorph::random(&mut rng, &s, k).to_morphism(&s, k);
        let f = random_any(&mut rng, &s, k).to_series(&s);
        let lhs = pullback(&compose(&m2, &m1).unwrap(), &f).unwrap();
        let rhs = pullback(&m1, &pullback(&m2, &f).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn graded_chain_rule(seed in any::<u64>()) {
        let (s, k, mut rng) = instance(seed);
        let m = OMorph::random(&mut rng, &s, k).to_morphism(&s, k);
        let f = random_any(&mut rng, &s, k).to_series(&s);
        let sig = &s.sig;
        let pf = pullback(&m, &f).unwrap();
        for src in 0..sig.var_count() {
            let r = sig.var_ref(src);
            let lhs = pf.derivative(r).truncate_to(k - 1);
            let mut rhs = GSeries::zero(sig, k - 1);
            for t in 0..sig.var_count() {
                let dphi = m.images()[t].derivative(r);
                let inner = pullback(&m, &f.derivative(sig.var_ref(t))).unwrap();
                rhs = rhs.try_add(&dphi.multiply(&inner).unwrap().truncate_to(k - 1)).unwrap();
            }
            prop_assert_eq!(lhs, rhs);
        }
    }
}

#[test]
fn oracle_reproduces_the_unipotent_square() {
    let s = OSig::new(2, vec!["x".into()], vec![("y".into(), 0b11), ("xi".into(), 0b01), ("eta".into(), 0b10)]);
    let p = 1;
    let one = OElem::scalar(4, common::one_poly(p));
    let mut e = OElem::zero(4);
    e.terms.insert(vec![1, 2, 0], common::one_poly(p));
    let u = one.add(&e);
    let sq = u.mul(&u, &s).to_series(&s);
    assert_eq!(sq.to_string(), "1 + 2 * xi eta y");
}

