//! Naive reference model used as an oracle.
//!
//! Elements are sums of (polynomial in the base coordinates) times a word in
//! the formal variables. Words are brought to normal form by adjacent
//! transpositions, each contributing `(-1)^popcount(a & b)`. Nothing here
//! calls into the engine except `Signature::lookup`, which only supplies the
//! engine's ordering of formal variables so that printed words need no
//! reordering on the way back in.

#![allow(dead_code)]

pub mod bundle;

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use zsuper::{GSeries, Signature, VarRef};

pub type Poly = BTreeMap<Vec<u32>, BigRational>;

pub fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

#[derive(Clone, Debug)]
pub struct OSig {
    pub n: usize,
    pub base: Vec<String>,
    /// Name and packed degree bits.
    pub formal: Vec<(String, u32)>,
    /// Position of each formal variable in the engine's ordering.
    pub rank: Vec<usize>,
    pub sig: Arc<Signature>,
}

fn bits_text(n: usize, bits: u32) -> String {
    (0..n).map(|i| if bits >> (n - 1 - i) & 1 == 1 { '1' } else { '0' }).collect()
}

impl OSig {
    pub fn new(n: usize, base: Vec<String>, formal: Vec<(String, u32)>) -> OSig {
        let mut text = String::new();
        for b in &base {
            text.push_str(&format!("{b}:{} ", "0".repeat(n)));
        }
        for (name, d) in &formal {
            text.push_str(&format!("{name}:{} ", bits_text(n, *d)));
        }
        let sig = Arc::new(zsuper::format::parse_signature(text.trim()).expect("oracle signature"));
        let rank = formal
            .iter()
            .map(|(name, _)| match sig.lookup(name) {
                Some(VarRef::Formal(a)) => a,
                other => panic!("unexpected lookup {other:?}"),
            })
            .collect();
        OSig { n, base, formal, rank, sig }
    }

    pub fn random(rng: &mut impl Rng, max_n: usize, max_base: usize, max_formal: usize) -> OSig {
        let n = rng.gen_range(1..=max_n);
        let p = rng.gen_range(1..=max_base);
        let qn = rng.gen_range(max_formal.min(2)..=max_formal);
        let base = (0..p).map(|i| format!("x{i}")).collect();
        let formal = (0..qn)
            .map(|i| (format!("a{i}"), rng.gen_range(1..(1u32 << n))))
            .collect();
        OSig::new(n, base, formal)
    }

    pub fn degree(&self, a: usize) -> u32 {
        self.formal[a].1
    }

    fn self_odd(&self, a: usize) -> bool {
        self.degree(a).count_ones() % 2 == 1
    }

    pub fn word_degree(&self, word: &[usize]) -> u32 {
        word.iter().fold(0, |acc, &a| acc ^ self.degree(a))
    }

    /// Every sorted word of length at most `k` of the given degree, or of
    /// any degree when `degree` is `u32::MAX`.
    pub fn words_of_degree(&self, k: usize, degree: u32) -> Vec<Vec<usize>> {
        let mut order: Vec<usize> = (0..self.formal.len()).collect();
        order.sort_by_key(|&a| self.rank[a]);
        let mut out = Vec::new();
        let mut word = Vec::new();
        self.extend_words(&order, 0, k, &mut word, &mut out);
        out.retain(|w| degree == u32::MAX || self.word_degree(w) == degree);
        out
    }

    fn extend_words(&self, order: &[usize], from: usize, k: usize, word: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(word.clone());
        if word.len() == k {
            return;
        }
        for i in from..order.len() {
            let a = order[i];
            if self.self_odd(a) && word.last() == Some(&a) {
                continue;
            }
            word.push(a);
            self.extend_words(order, i, k, word, out);
            word.pop();
        }
    }
}

pub fn poly_add(a: &mut Poly, b: &Poly) {
    for (e, c) in b {
        let slot = a.entry(e.clone()).or_insert_with(BigRational::zero);
        *slot += c;
        if slot.is_zero() {
            a.remove(e);
        }
    }
}

pub fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            poly_add(&mut out, &Poly::from([(e, ca * cb)]));
        }
    }
    out
}

pub fn poly_const(p: usize, c: BigRational) -> Poly {
    if c.is_zero() {
        Poly::new()
    } else {
        Poly::from([(vec![0; p], c)])
    }
}

pub fn poly_text(p: &Poly, base: &[String]) -> String {
    if p.is_empty() {
        return "(0)".into();
    }
    let terms: Vec<String> = p
        .iter()
        .map(|(e, c)| {
            let mut t = format!("({c})");
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t.push_str(&format!(" * {}^{k}", base[i]));
                }
            }
            t
        })
        .collect();
    format!("({})", terms.join(" + "))
}

pub fn random_poly(rng: &mut impl Rng, p: usize, max_deg: u32, max_terms: usize) -> Poly {
    let mut out = Poly::new();
    for _ in 0..rng.gen_range(1..=max_terms) {
        let e: Vec<u32> = (0..p).map(|_| rng.gen_range(0..=max_deg)).collect();
        let c = BigRational::new(BigInt::from(rng.gen_range(-3..=3)), BigInt::from(rng.gen_range(1..=2)));
        poly_add(&mut out, &Poly::from([(e, c)]));
    }
    out
}

/// A truncated element: sorted word to polynomial coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct OElem {
    pub order: usize,
    pub terms: BTreeMap<Vec<usize>, Poly>,
}

impl OElem {
    pub fn zero(order: usize) -> OElem {
        OElem {
            order,
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(order: usize, c: Poly) -> OElem {
        let mut e = OElem::zero(order);
        e.add_word(&[], &c, 1, &OSigRef::None);
        e
    }

    /// Adds `sign * c * word`, normalizing the word.
    fn add_word(&mut self, word: &[usize], c: &Poly, sign: i32, s: &OSigRef) {
        if word.len() > self.order || c.is_empty() {
            return;
        }
        let (sign, word) = match s {
            OSigRef::None => (sign, word.to_vec()),
            OSigRef::Some(s) => match normalize(s, word) {
                Some((flip, w)) => (if flip { -sign } else { sign }, w),
                None => return,
            },
        };
        let mut c = c.clone();
        if sign < 0 {
            for v in c.values_mut() {
                *v = -v.clone();
            }
        }
        let slot = self.terms.entry(word.clone()).or_default();
        poly_add(slot, &c);
        if slot.is_empty() {
            self.terms.remove(&word);
        }
    }

    pub fn add(&self, other: &OElem) -> OElem {
        let mut out = self.clone();
        out.order = self.order.min(other.order);
        for (w, c) in &other.terms {
            out.add_word(w, c, 1, &OSigRef::None);
        }
        out.terms.retain(|w, _| w.len() <= out.order);
        out
    }

    pub fn mul(&self, other: &OElem, s: &OSig) -> OElem {
        let mut out = OElem::zero(self.order.min(other.order));
        for (wa, ca) in &self.terms {
            for (wb, cb) in &other.terms {
                let word: Vec<usize> = wa.iter().chain(wb).copied().collect();
                out.add_word(&word, &poly_mul(ca, cb), 1, &OSigRef::Some(s));
            }
        }
        out
    }

    pub fn text(&self, s: &OSig) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let terms: Vec<String> = self
            .terms
            .iter()
            .map(|(w, c)| {
                let mut t = poly_text(c, &s.base);
                for &a in w {
                    t.push_str(" * ");
                    t.push_str(&s.formal[a].0);
                }
                t
            })
            .collect();
        terms.join(" + ")
    }

    pub fn to_series(&self, s: &OSig) -> GSeries {
        GSeries::parse(&self.text(s), &s.sig, self.order).expect("oracle output parses")
    }
}

enum OSigRef<'a> {
    None,
    Some(&'a OSig),
}

/// Bubble sort by engine rank with Koszul signs; `None` when a self-odd
/// variable occurs twice.
pub fn normalize(s: &OSig, word: &[usize]) -> Option<(bool, Vec<usize>)> {
    let mut w = word.to_vec();
    let mut flip = false;
    for i in 0..w.len() {
        for j in 0..w.len() - 1 - i {
            let (a, b) = (w[j], w[j + 1]);
            if s.rank[a] > s.rank[b] {
                if (s.degree(a) & s.degree(b)).count_ones() % 2 == 1 {
                    flip = !flip;
                }
                w.swap(j, j + 1);
            }
        }
    }
    if w.windows(2).any(|p| p[0] == p[1] && s.self_odd(p[0])) {
        return None;
    }
    Some((flip, w))
}

/// A random element homogeneous of `degree`, optionally shuffled words.
pub fn random_elem(rng: &mut impl Rng, s: &OSig, order: usize, degree: u32, density: f64) -> OElem {
    let p = s.base.len();
    let mut out = OElem::zero(order);
    for w in s.words_of_degree(order, degree) {
        if rng.gen_bool(density) {
            let mut shuffled = w.clone();
            for i in (1..shuffled.len()).rev() {
                shuffled.swap(i, rng.gen_range(0..=i));
            }
            out.add_word(&shuffled, &random_poly(rng, p, 1, 2), 1, &OSigRef::Some(s));
        }
    }
    out
}

/// Images of the variables in declaration order: base then formal.
pub struct OMorph {
    pub base: Vec<OElem>,
    pub formal: Vec<OElem>,
}

impl OMorph {
    /// A random degree-preserving endomorphism with linear leading base part.
    pub fn random(rng: &mut impl Rng, s: &OSig, order: usize) -> OMorph {
        let p = s.base.len();
        let base = (0..p)
            .map(|i| {
                let mut e = vec![0; p];
                e[i] = 1;
                let lead = OElem::scalar(order, Poly::from([(e, q(1))]));
                let mut tail = random_elem(rng, s, order, 0, 0.4);
                tail.terms.remove(&Vec::new());
                lead.add(&tail)
            })
            .collect();
        let formal = (0..s.formal.len())
            .map(|a| {
                let mut lead = OElem::zero(order);
                lead.add_word(&[a], &one_poly(p), 1, &OSigRef::None);
                lead.add(&random_elem(rng, s, order, s.degree(a), 0.5))
            })
            .collect();
        OMorph { base, formal }
    }

    pub fn file_text(&self, s: &OSig, order: usize) -> String {
        let mut out = format!("order {order}\nsig {}\n", s.sig);
        for (i, e) in self.base.iter().enumerate() {
            out.push_str(&format!("{} = {}\n", s.base[i], e.text(s)));
        }
        for (a, e) in self.formal.iter().enumerate() {
            out.push_str(&format!("{} = {}\n", s.formal[a].0, e.text(s)));
        }
        out
    }

    pub fn to_morphism(&self, s: &OSig, order: usize) -> zsuper::Morphism {
        zsuper::format::parse_morphism_file(&self.file_text(s, order)).expect("oracle morphism parses")
    }

    /// Substitute and expand: `f(x, xi)` becomes `f(image(x), image(xi))`.
    pub fn pullback(&self, f: &OElem, s: &OSig) -> OElem {
        let order = f.order.min(self.base.first().map_or(f.order, |b| b.order));
        let p = s.base.len();
        let mut out = OElem::zero(order);
        for (word, c) in &f.terms {
            let mut coeff = OElem::zero(order);
            for (e, r) in c {
                let mut term = OElem::scalar(order, poly_const(p, r.clone()));
                for (i, &k) in e.iter().enumerate() {
                    for _ in 0..k {
                        term = term.mul(&self.base[i], s);
                    }
                }
                coeff = coeff.add(&term);
            }
            let mut prod = coeff;
            for &a in word {
                prod = prod.mul(&self.formal[a], s);
            }
            out = out.add(&prod);
        }
        out
    }
}

pub fn one_poly(p: usize) -> Poly {
    poly_const(p, BigRational::one())
}
