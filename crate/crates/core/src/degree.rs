//! The degree lattice Z2^n, the scalar-product sign rule and superdomain
//! signatures.
//!
//! A [`Degree`] is a bit vector of explicit length `n`. Component `i` (counted
//! from the left of its text form) is stored at bit position `n - 1 - i`, so
//! the numeric order of the packed bits is the lexicographic order of the
//! tuples.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest supported exponent of the grading group.
pub const MAX_N: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Degree {
    n: u8,
    bits: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

/// A factor `+1` or `-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_odd(odd: bool) -> Sign {
        if odd {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn is_minus(self) -> bool {
        self == Sign::Minus
    }

    pub fn value(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        Sign::from_odd(self.is_minus() != rhs.is_minus())
    }
}

impl Neg for Sign {
    type Output = Sign;
    fn neg(self) -> Sign {
        Sign::from_odd(!self.is_minus())
    }
}

impl Degree {
    pub fn zero(n: usize) -> Degree {
        assert!(n <= MAX_N, "Z2^{n} exceeds the supported maximum Z2^{MAX_N}");
        Degree { n: n as u8, bits: 0 }
    }

    /// Builds a degree from its components, left to right.
    pub fn from_bits(components: &[u8]) -> Result<Degree> {
        if components.len() > MAX_N {
            return Err(Error::Dimension {
                expected: MAX_N,
                found: components.len(),
            });
        }
        let n = components.len();
        let mut bits = 0u32;
        for (i, &c) in components.iter().enumerate() {
            match c {
                0 => {}
                1 => bits |= 1 << (n - 1 - i),
                _ => return Err(Error::Signature(format!("degree component {c} is not a bit"))),
            }
        }
        Ok(Degree { n: n as u8, bits })
    }

    /// Builds a degree from its packed form (component 0 is the most significant bit).
    pub fn from_packed(n: usize, bits: u32) -> Degree {
        assert!(n <= MAX_N);
        let mask = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
        Degree {
            n: n as u8,
            bits: bits & mask,
        }
    }

    pub fn n(self) -> usize {
        self.n as usize
    }

    pub fn packed(self) -> u32 {
        self.bits
    }

    pub fn component(self, i: usize) -> u8 {
        ((self.bits >> (self.n as usize - 1 - i)) & 1) as u8
    }

    pub fn components(self) -> Vec<u8> {
        (0..self.n()).map(|i| self.component(i)).collect()
    }

    pub fn is_zero(self) -> bool {
        self.bits == 0
    }

    pub fn weight(self) -> u32 {
        self.bits.count_ones()
    }

    pub fn parity(self) -> Parity {
        if self.weight() % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    fn check_same(self, other: Degree) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension {
                expected: self.n(),
                found: other.n(),
            });
        }
        Ok(())
    }

    /// Componentwise sum mod 2.
    pub fn try_add(self, other: Degree) -> Result<Degree> {
        self.check_same(other)?;
        Ok(Degree {
            n: self.n,
            bits: self.bits ^ other.bits,
        })
    }

    /// Whether `<self, other>` is odd. Lengths are assumed equal.
    pub fn pairs_odd(self, other: Degree) -> bool {
        debug_assert_eq!(self.n, other.n);
        (self.bits & other.bits).count_ones() % 2 == 1
    }
}

impl Add for Degree {
    type Output = Degree;

    /// Panics on a length mismatch; use [`Degree::try_add`] for a fallible sum.
    fn add(self, rhs: Degree) -> Degree {
        self.try_add(rhs).expect("adding degrees of different length")
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n() {
            write!(f, "{}", self.component(i))?;
        }
        Ok(())
    }
}

impl FromStr for Degree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Degree> {
        let comps = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0u8),
                '1' => Ok(1u8),
                _ => Err(Error::Signature(format!("`{s}` is not a bit string"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if comps.is_empty() {
            return Err(Error::Signature("empty degree".into()));
        }
        Degree::from_bits(&comps)
    }
}

/// `(-1)^<a,b>`.
pub fn sign_factor(a: Degree, b: Degree) -> Result<Sign> {
    a.check_same(b)?;
    Ok(Sign::from_odd(a.pairs_odd(b)))
}

pub fn parity(a: Degree) -> Parity {
    a.parity()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DegreeOrder {
    /// Pure lexicographic order; the canonical index order.
    Lexicographic,
    /// Even degrees first, then odd ones, each block lexicographic.
    ParityGrouped,
}

/// The `2^n - 1` nonzero degrees of Z2^n.
pub fn enumerate_nonzero_degrees(n: usize, order: DegreeOrder) -> Vec<Degree> {
    if n == 0 {
        return Vec::new();
    }
    let all = (1u32..(1u32 << n)).map(|b| Degree::from_packed(n, b));
    match order {
        DegreeOrder::Lexicographic => all.collect(),
        DegreeOrder::ParityGrouped => {
            let (even, odd): (Vec<_>, Vec<_>) = all.partition(|d| d.parity() == Parity::Even);
            even.into_iter().chain(odd).collect()
        }
    }
}

/// Position of a variable inside a [`Signature`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarRef {
    /// Index among the degree-0 base coordinates.
    Base(usize),
    /// Index among the formal (nonzero degree) variables, in canonical order.
    Formal(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Variable {
    pub name: String,
    pub degree: Degree,
}

/// Variables of a superdomain of dimension `p | q`.
///
/// Base coordinates keep their declaration order. Formal variables are
/// ordered by degree (lexicographic), then by declaration order.
#[derive(Clone, Debug)]
pub struct Signature {
    n: usize,
    base: Vec<String>,
    formal: Vec<Variable>,
    q_counts: Vec<usize>,
    index: HashMap<String, VarRef>,
    // odd_pair[a * q + b] = <deg a, deg b> is odd
    odd_pair: Vec<bool>,
}

impl PartialEq for Signature {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.base == other.base && self.formal == other.formal
    }
}

impl Eq for Signature {}

impl Signature {
    pub fn new(n: usize, vars: Vec<(String, Degree)>) -> Result<Signature> {
        if n > MAX_N {
            return Err(Error::Dimension {
                expected: MAX_N,
                found: n,
            });
        }
        let mut base = Vec::new();
        let mut formal = Vec::new();
        let mut seen = HashMap::new();
        for (pos, (name, degree)) in vars.into_iter().enumerate() {
            if degree.n() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: degree.n(),
                });
            }
            if !is_identifier(&name) {
                return Err(Error::Signature(format!("`{name}` is not a valid variable name")));
            }
            if seen.insert(name.clone(), ()).is_some() {
                return Err(Error::Signature(format!("duplicate variable `{name}`")));
            }
            if degree.is_zero() {
                base.push(name);
            } else {
                formal.push((degree, pos, name));
            }
        }
        formal.sort();
        let formal: Vec<Variable> = formal
            .into_iter()
            .map(|(degree, _, name)| Variable { name, degree })
            .collect();

        let mut q_counts = vec![0usize; (1usize << n).saturating_sub(1)];
        for v in &formal {
            q_counts[v.degree.packed() as usize - 1] += 1;
        }
        let mut index = HashMap::new();
        for (i, b) in base.iter().enumerate() {
            index.insert(b.clone(), VarRef::Base(i));
        }
        for (a, v) in formal.iter().enumerate() {
            index.insert(v.name.clone(), VarRef::Formal(a));
        }
        let q = formal.len();
        let mut odd_pair = vec![false; q * q];
        for a in 0..q {
            for b in 0..q {
                odd_pair[a * q + b] = formal[a].degree.pairs_odd(formal[b].degree);
            }
        }
        Ok(Signature {
            n,
            base,
            formal,
            q_counts,
            index,
            odd_pair,
        })
    }

    /// Infers `n` from the degrees; `vars` must be nonempty.
    pub fn from_vars(vars: Vec<(String, Degree)>) -> Result<Signature> {
        let n = vars
            .first()
            .map(|(_, d)| d.n())
            .ok_or_else(|| Error::Signature("a signature needs at least one variable".into()))?;
        Signature::new(n, vars)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.base.len()
    }

    pub fn q(&self) -> usize {
        self.formal.len()
    }

    /// Counts per nonzero degree, indexed by lexicographic enumeration.
    pub fn q_counts(&self) -> &[usize] {
        &self.q_counts
    }

    pub fn base_names(&self) -> &[String] {
        &self.base
    }

    pub fn formal_vars(&self) -> &[Variable] {
        &self.formal
    }

    pub fn formal_degree(&self, a: usize) -> Degree {
        self.formal[a].degree
    }

    pub fn formal_name(&self, a: usize) -> &str {
        &self.formal[a].name
    }

    /// Whether formal variable `a` squares to zero.
    pub fn self_odd(&self, a: usize) -> bool {
        self.odd_pair[a * self.q() + a]
    }

    pub(crate) fn odd_pair(&self, a: usize, b: usize) -> bool {
        self.odd_pair[a * self.q() + b]
    }

    pub fn lookup(&self, name: &str) -> Option<VarRef> {
        self.index.get(name).copied()
    }

    pub fn var_count(&self) -> usize {
        self.p() + self.q()
    }

    /// All variables, base coordinates first, in canonical order.
    pub fn all_vars(&self) -> Vec<Variable> {
        self.base
            .iter()
            .map(|b| Variable {
                name: b.clone(),
                degree: Degree::zero(self.n),
            })
            .chain(self.formal.iter().cloned())
            .collect()
    }

    pub fn var_ref(&self, i: usize) -> VarRef {
        if i < self.p() {
            VarRef::Base(i)
        } else {
            VarRef::Formal(i - self.p())
        }
    }

    pub fn var_degree(&self, r: VarRef) -> Degree {
        match r {
            VarRef::Base(_) => Degree::zero(self.n),
            VarRef::Formal(a) => self.formal[a].degree,
        }
    }

    pub fn var_name(&self, r: VarRef) -> &str {
        match r {
            VarRef::Base(i) => &self.base[i],
            VarRef::Formal(a) => &self.formal[a].name,
        }
    }

    /// Formal variable indices grouped by degree, lexicographic over degrees,
    /// skipping degrees with no variables.
    pub fn degree_blocks(&self) -> Vec<(Degree, Vec<usize>)> {
        let mut out: Vec<(Degree, Vec<usize>)> = Vec::new();
        for (a, v) in self.formal.iter().enumerate() {
            match out.last_mut() {
                Some((d, idx)) if *d == v.degree => idx.push(a),
                _ => out.push((v.degree, vec![a])),
            }
        }
        out
    }

    /// Same layout (degrees) regardless of names.
    pub fn same_shape(&self, other: &Signature) -> bool {
        self.n == other.n
            && self.p() == other.p()
            && self.q() == other.q()
            && self
                .formal
                .iter()
                .zip(&other.formal)
                .all(|(a, b)| a.degree == b.degree)
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for v in self.all_vars() {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "{}:{}", v.name, v.degree)?;
        }
        Ok(())
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> Degree {
        s.parse().unwrap()
    }

    #[test]
    fn sign_rule_examples() {
        assert_eq!(sign_factor(d("110"), d("101")).unwrap(), Sign::Minus);
        assert_eq!(sign_factor(d("100"), d("010")).unwrap(), Sign::Plus);
        assert_eq!(sign_factor(d("011"), d("010")).unwrap(), Sign::Minus);
        for b in 0..8 {
            let other = Degree::from_packed(3, b);
            assert_eq!(sign_factor(Degree::zero(3), other).unwrap(), Sign::Plus);
        }
    }

    #[test]
    fn sign_rule_rejects_length_mismatch() {
        assert!(matches!(
            sign_factor(d("11"), d("110")),
            Err(Error::Dimension { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn parity_examples() {
        assert_eq!(parity(d("110")), Parity::Even);
        assert_eq!(parity(d("000")), Parity::Even);
        assert_eq!(parity(d("010")), Parity::Odd);
    }

    #[test]
    fn enumeration() {
        assert_eq!(enumerate_nonzero_degrees(1, DegreeOrder::Lexicographic), vec![d("1")]);
        assert_eq!(
            enumerate_nonzero_degrees(2, DegreeOrder::Lexicographic),
            vec![d("01"), d("10"), d("11")]
        );
        assert_eq!(
            enumerate_nonzero_degrees(2, DegreeOrder::ParityGrouped),
            vec![d("11"), d("01"), d("10")]
        );
        let grouped: Vec<String> = enumerate_nonzero_degrees(3, DegreeOrder::ParityGrouped)
            .iter()
            .map(|x| x.to_string())
            .collect();
        assert_eq!(grouped, ["011", "101", "110", "001", "010", "100", "111"]);
        assert!(enumerate_nonzero_degrees(0, DegreeOrder::Lexicographic).is_empty());
    }

    #[test]
    fn exhaustive_sign_laws() {
        for n in 1..=4 {
            let all: Vec<Degree> = (0..1u32 << n).map(|b| Degree::from_packed(n, b)).collect();
            for &a in &all {
                assert_eq!(
                    parity(a) == Parity::Odd,
                    sign_factor(a, a).unwrap() == Sign::Minus
                );
                for &b in &all {
                    assert_eq!(sign_factor(a, b).unwrap(), sign_factor(b, a).unwrap());
                    for &c in &all {
                        assert_eq!(
                            sign_factor(a + b, c).unwrap(),
                            sign_factor(a, c).unwrap() * sign_factor(b, c).unwrap()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn signature_orders_formal_variables() {
        let sig = Signature::from_vars(vec![
            ("x".into(), d("00")),
            ("eta".into(), d("10")),
            ("y".into(), d("11")),
            ("xi".into(), d("01")),
        ])
        .unwrap();
        let names: Vec<&str> = sig.formal_vars().iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, ["xi", "eta", "y"]);
        assert_eq!(sig.q_counts(), &[1, 1, 1]);
        assert_eq!(sig.p(), 1);
        assert!(sig.self_odd(0) && sig.self_odd(1) && !sig.self_odd(2));
        assert_eq!(sig.to_string(), "x:00 xi:01 eta:10 y:11");
    }

    #[test]
    fn signature_rejects_duplicates_and_mixed_lengths() {
        assert!(Signature::from_vars(vec![("x".into(), d("0")), ("x".into(), d("1"))]).is_err());
        assert!(matches!(
            Signature::from_vars(vec![("x".into(), d("00")), ("y".into(), d("1"))]),
            Err(Error::Dimension { .. })
        ));
    }
}
