//! Truncated formal power series in the nonzero-degree variables of a
//! signature, with [`CoeffExpr`] coefficients: the local model of a
//! Z2^n-superdomain, represented exactly modulo `J^{K+1}`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::Add;
use std::sync::Arc;

use num_traits::{One, Signed};

use crate::coeff::{CoeffExpr, Rational};
use crate::degree::{Degree, Signature, VarRef};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::parse::ExprTree;

/// Exponent vector over the formal variables of a signature, in canonical
/// variable order.
///
/// Ordered by total order first, then with earlier variables first, so that
/// printed series read `1 + xi + eta + xi eta + ...`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn one(q: usize) -> Monomial {
        Monomial(vec![0; q])
    }

    pub fn var(q: usize, a: usize) -> Monomial {
        let mut e = vec![0; q];
        e[a] = 1;
        Monomial(e)
    }

    pub fn from_exponents(exps: Vec<u32>) -> Monomial {
        Monomial(exps)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn degree(&self, sig: &Signature) -> Degree {
        let mut d = Degree::zero(sig.n());
        for (a, &e) in self.0.iter().enumerate() {
            if e % 2 == 1 {
                d = d + sig.formal_degree(a);
            }
        }
        d
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> MonomialDisplay<'a> {
        MonomialDisplay { mono: self, sig }
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total()
            .cmp(&other.total())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub struct MonomialDisplay<'a> {
    mono: &'a Monomial,
    sig: &'a Signature,
}

impl fmt::Display for MonomialDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.mono.is_one() {
            return write!(f, "1");
        }
        let mut first = true;
        for (a, &e) in self.mono.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "{}", self.sig.formal_name(a))?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

/// `xi^mu * xi^nu = sign * xi^(mu + nu)`, or `None` when a self-odd variable
/// would be squared. The sign collects `(-1)^<deg a, deg b>` for every
/// variable `b` of the right factor that moves left past a variable `a > b`
/// of the left factor.
pub fn monomial_product(sig: &Signature, left: &Monomial, right: &Monomial) -> Option<(bool, Monomial)> {
    let q = sig.q();
    let mut exps = Vec::with_capacity(q);
    for a in 0..q {
        let e = left.0[a] + right.0[a];
        if e > 1 && sig.self_odd(a) {
            return None;
        }
        exps.push(e);
    }
    let mut odd = false;
    for b in 0..q {
        if right.0[b] % 2 == 0 {
            continue;
        }
        for a in (b + 1)..q {
            if left.0[a] % 2 == 1 && sig.odd_pair(a, b) {
                odd = !odd;
            }
        }
    }
    Some((odd, Monomial(exps)))
}

/// `J`-adic order of a series: the smallest total order of a nonzero term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum JOrder {
    Finite(usize),
    Infinite,
}

impl Add for JOrder {
    type Output = JOrder;
    fn add(self, rhs: JOrder) -> JOrder {
        match (self, rhs) {
            (JOrder::Finite(a), JOrder::Finite(b)) => JOrder::Finite(a + b),
            _ => JOrder::Infinite,
        }
    }
}

impl fmt::Display for JOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JOrder::Finite(k) => write!(f, "{k}"),
            JOrder::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DegreeTag {
    /// The zero series, homogeneous of every degree.
    Zero,
    Homogeneous(Degree),
    Inhomogeneous,
}

/// A factor of a word passed to [`normal_form`].
#[derive(Clone, Debug)]
pub enum Factor {
    Var(String),
    Coeff(CoeffExpr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GSeries {
    sig: Arc<Signature>,
    order: usize,
    terms: BTreeMap<Monomial, CoeffExpr>,
}

impl GSeries {
    pub fn zero(sig: &Arc<Signature>, order: usize) -> GSeries {
        GSeries {
            sig: sig.clone(),
            order,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(sig: &Arc<Signature>, order: usize, c: CoeffExpr) -> GSeries {
        let mut s = GSeries::zero(sig, order);
        s.add_term(Monomial::one(sig.q()), c);
        s
    }

    pub fn one(sig: &Arc<Signature>, order: usize) -> GSeries {
        GSeries::constant(sig, order, CoeffExpr::one())
    }

    /// The series of a single variable; base coordinates become constant
    /// coefficients.
    pub fn variable(sig: &Arc<Signature>, order: usize, r: VarRef) -> GSeries {
        match r {
            VarRef::Base(i) => GSeries::constant(sig, order, CoeffExpr::coord(i)),
            VarRef::Formal(a) => GSeries::monomial(sig, order, Monomial::var(sig.q(), a), CoeffExpr::one()),
        }
    }

    pub fn variable_named(sig: &Arc<Signature>, order: usize, name: &str) -> Result<GSeries> {
        let r = sig
            .lookup(name)
            .ok_or_else(|| Error::Signature(format!("unknown variable `{name}`")))?;
        Ok(GSeries::variable(sig, order, r))
    }

    pub fn monomial(sig: &Arc<Signature>, order: usize, mono: Monomial, c: CoeffExpr) -> GSeries {
        let mut s = GSeries::zero(sig, order);
        s.add_term(mono, c);
        s
    }

    pub fn from_terms(
        sig: &Arc<Signature>,
        order: usize,
        terms: impl IntoIterator<Item = (Monomial, CoeffExpr)>,
    ) -> GSeries {
        let mut s = GSeries::zero(sig, order);
        for (m, c) in terms {
            s.add_term(m, c);
        }
        s
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &CoeffExpr)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, mono: &Monomial) -> CoeffExpr {
        self.terms.get(mono).cloned().unwrap_or_default()
    }

    /// Adds `c * mono`, dropping it when beyond the truncation order.
    pub fn add_term(&mut self, mono: Monomial, c: CoeffExpr) {
        if c.is_zero() || mono.total() > self.order {
            return;
        }
        match self.terms.entry(mono) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = &*e.get() + &c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    fn check_compatible(&self, other: &GSeries) -> Result<()> {
        if self.sig != other.sig {
            return Err(Error::Signature(format!(
                "series over different signatures: [{}] vs [{}]",
                self.sig, other.sig
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &GSeries) -> Result<GSeries> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.order = self.order.min(other.order);
        out.terms.retain(|m, _| m.total() <= out.order);
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &GSeries) -> Result<GSeries> {
        self.try_add(&other.neg())
    }

    pub fn neg(&self) -> GSeries {
        self.map_coeffs(|c| -c)
    }

    /// Multiplies every coefficient by the degree-0 function `c`.
    pub fn scale(&self, c: &CoeffExpr) -> GSeries {
        self.map_coeffs(|x| x * c)
    }

    pub fn scale_rational(&self, r: &Rational) -> GSeries {
        self.map_coeffs(|x| x.scale(r))
    }

    pub fn map_coeffs(&self, f: impl Fn(&CoeffExpr) -> CoeffExpr) -> GSeries {
        let mut out = GSeries::zero(&self.sig, self.order);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(c));
        }
        out
    }

    pub fn try_map_coeffs(&self, f: impl Fn(&CoeffExpr) -> Result<CoeffExpr>) -> Result<GSeries> {
        let mut out = GSeries::zero(&self.sig, self.order);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(c)?);
        }
        Ok(out)
    }

    /// Product at order `min(K_a, K_b)`, using the default execution mode.
    pub fn multiply(&self, other: &GSeries) -> Result<GSeries> {
        self.multiply_with(other, Execution::default())
    }

    pub fn multiply_with(&self, other: &GSeries, exec: Execution) -> Result<GSeries> {
        self.check_compatible(other)?;
        let order = self.order.min(other.order);
        let left: Vec<(&Monomial, &CoeffExpr)> = self.terms.iter().collect();
        let sig = &self.sig;
        let partial = |chunk: &[(&Monomial, &CoeffExpr)]| {
            let mut acc = GSeries::zero(sig, order);
            for (ma, ca) in chunk {
                if ma.total() > order {
                    continue;
                }
                for (mb, cb) in &other.terms {
                    if ma.total() + mb.total() > order {
                        continue;
                    }
                    if let Some((odd, m)) = monomial_product(sig, ma, mb) {
                        let c = *ca * cb;
                        acc.add_term(m, if odd { -c } else { c });
                    }
                }
            }
            acc
        };
        let work = left.len() * other.terms.len();
        let parts = if work >= 64 {
            let chunk = left.len().div_ceil(16).max(1);
            let chunks: Vec<&[(&Monomial, &CoeffExpr)]> = left.chunks(chunk).collect();
            exec.map(&chunks, |c| partial(c))
        } else {
            vec![partial(&left)]
        };
        let mut out = GSeries::zero(sig, order);
        for part in parts {
            for (m, c) in part.terms {
                out.add_term(m, c);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Result<GSeries> {
        let mut acc = GSeries::one(&self.sig, self.order);
        for _ in 0..k {
            acc = acc.multiply(self)?;
        }
        Ok(acc)
    }

    /// The augmentation: coefficient of the empty monomial.
    pub fn epsilon(&self) -> CoeffExpr {
        self.coefficient(&Monomial::one(self.sig.q()))
    }

    pub fn j_order(&self) -> JOrder {
        self.terms
            .keys()
            .next()
            .map(|m| JOrder::Finite(m.total()))
            .unwrap_or(JOrder::Infinite)
    }

    /// Drops all terms of order above `k`.
    pub fn truncate(&self, k: usize) -> Result<GSeries> {
        if k > self.order {
            return Err(Error::Order {
                requested: k,
                available: self.order,
            });
        }
        Ok(self.truncate_to(k))
    }

    /// Like [`GSeries::truncate`] but saturating at the current order.
    pub fn truncate_to(&self, k: usize) -> GSeries {
        let order = k.min(self.order);
        GSeries {
            sig: self.sig.clone(),
            order,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.total() <= order)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Reads the same finite sum at a higher truncation order. Used where
    /// the terms are exact by construction, e.g. a list of generator images.
    pub fn reinterpret_at(&self, order: usize) -> GSeries {
        let mut out = self.truncate_to(order);
        out.order = order;
        out
    }

    /// Terms of total order exactly `k`.
    pub fn pure_order(&self, k: usize) -> GSeries {
        GSeries {
            sig: self.sig.clone(),
            order: self.order,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.total() == k)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn degree_tag(&self) -> DegreeTag {
        let mut tag = DegreeTag::Zero;
        for m in self.terms.keys() {
            let d = m.degree(&self.sig);
            match tag {
                DegreeTag::Zero => tag = DegreeTag::Homogeneous(d),
                DegreeTag::Homogeneous(e) if e != d => return DegreeTag::Inhomogeneous,
                _ => {}
            }
        }
        tag
    }

    /// The first monomial whose degree differs from `d`, with its degree.
    pub fn degree_violation(&self, d: Degree) -> Option<(Monomial, Degree)> {
        self.terms
            .keys()
            .map(|m| (m, m.degree(&self.sig)))
            .find(|(_, md)| *md != d)
            .map(|(m, md)| (m.clone(), md))
    }

    pub fn is_homogeneous_of(&self, d: Degree) -> bool {
        self.degree_violation(d).is_none()
    }

    /// Graded left derivative with respect to formal variable `a`.
    pub fn derivative_formal(&self, a: usize) -> GSeries {
        let mut out = GSeries::zero(&self.sig, self.order);
        for (m, c) in &self.terms {
            let e = m.0[a];
            if e == 0 {
                continue;
            }
            let mut odd = false;
            for b in 0..a {
                if m.0[b] % 2 == 1 && self.sig.odd_pair(b, a) {
                    odd = !odd;
                }
            }
            let mut exps = m.0.clone();
            exps[a] -= 1;
            let mut coeff = c.scale(&Rational::from_integer(e.into()));
            if odd {
                coeff = -coeff;
            }
            out.add_term(Monomial(exps), coeff);
        }
        out
    }

    /// Partial derivative with respect to base coordinate `i`.
    pub fn derivative_base(&self, i: usize) -> GSeries {
        self.map_coeffs(|c| c.differentiate(i))
    }

    /// Left derivative with respect to any variable of the signature.
    pub fn derivative(&self, r: VarRef) -> GSeries {
        match r {
            VarRef::Base(i) => self.derivative_base(i),
            VarRef::Formal(a) => self.derivative_formal(a),
        }
    }

    /// Builds a series from a raw expression tree. Products are taken in the
    /// written order, so the sign rule applies to the word as written.
    pub fn from_tree(tree: &ExprTree, sig: &Arc<Signature>, order: usize) -> Result<GSeries> {
        let base_resolve = |s: &str| match sig.lookup(s) {
            Some(VarRef::Base(i)) => Some(i),
            _ => None,
        };
        Ok(match tree {
            ExprTree::Num(r) => GSeries::constant(sig, order, CoeffExpr::constant(r.clone())),
            ExprTree::Ident { name, pos } => match sig.lookup(name) {
                Some(r) => GSeries::variable(sig, order, r),
                None => {
                    return Err(Error::parse(
                        pos.line,
                        pos.column,
                        format!("unknown variable `{name}`"),
                    ))
                }
            },
            ExprTree::Apply { .. } => GSeries::constant(sig, order, tree.to_coeff(&base_resolve)?),
            ExprTree::Add(a, b) => GSeries::from_tree(a, sig, order)?.try_add(&GSeries::from_tree(b, sig, order)?)?,
            ExprTree::Sub(a, b) => GSeries::from_tree(a, sig, order)?.try_sub(&GSeries::from_tree(b, sig, order)?)?,
            ExprTree::Neg(a) => GSeries::from_tree(a, sig, order)?.neg(),
            ExprTree::Mul(a, b) => GSeries::from_tree(a, sig, order)?.multiply(&GSeries::from_tree(b, sig, order)?)?,
            ExprTree::Pow(a, k) => GSeries::from_tree(a, sig, order)?.pow(*k)?,
        })
    }

    pub fn parse(text: &str, sig: &Arc<Signature>, order: usize) -> Result<GSeries> {
        GSeries::from_tree(&crate::parse::parse_expr(text, 1, 0)?, sig, order)
    }
}

/// Canonical form of a word of variables and coefficients.
pub fn normal_form(word: &[Factor], sig: &Arc<Signature>, order: usize) -> Result<GSeries> {
    let mut acc = GSeries::one(sig, order);
    for f in word {
        let s = match f {
            Factor::Var(name) => GSeries::variable_named(sig, order, name)?,
            Factor::Coeff(c) => GSeries::constant(sig, order, c.clone()),
        };
        acc = acc.multiply(&s)?;
    }
    Ok(acc)
}

/// All monomials with `|mu| <= max_order`, optionally of a fixed degree,
/// in monomial order. Self-odd variables get exponent at most one.
pub fn monomials_up_to(sig: &Signature, max_order: usize, degree: Option<Degree>) -> Vec<Monomial> {
    fn rec(sig: &Signature, a: usize, left: usize, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if a == sig.q() {
            out.push(Monomial(cur.clone()));
            return;
        }
        let cap = if sig.self_odd(a) { 1.min(left) } else { left };
        for e in 0..=cap {
            cur.push(e as u32);
            rec(sig, a + 1, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(sig, 0, max_order, &mut Vec::new(), &mut out);
    if let Some(d) = degree {
        out.retain(|m| m.degree(sig) == d);
    }
    out.sort();
    out
}

impl fmt::Display for GSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let names = |i: usize| self.sig.base_names()[i].clone();
        let mut first = true;
        for (m, c) in &self.terms {
            let (negative, body) = if m.is_one() {
                match c.single_term() {
                    Some((r, _)) if r.is_negative() => (true, (-c).display_with(&names).to_string()),
                    _ => (false, c.display_with(&names).to_string()),
                }
            } else {
                match c.single_term() {
                    Some((r, rest)) => {
                        let mut parts = Vec::new();
                        let mag = r.abs();
                        if !mag.is_one() {
                            parts.push(mag.to_string());
                        }
                        if !rest.is_one() {
                            parts.push(rest.display_with(&names).to_string());
                        }
                        parts.push(m.display(&self.sig).to_string());
                        (r.is_negative(), parts.join(" * "))
                    }
                    None => (
                        false,
                        format!("({}) * {}", c.display_with(&names), m.display(&self.sig)),
                    ),
                }
            };
            match (first, negative) {
                (true, true) => write!(f, "-{body}")?,
                (true, false) => write!(f, "{body}")?,
                (false, true) => write!(f, " - {body}")?,
                (false, false) => write!(f, " + {body}")?,
            }
            first = false;
        }
        Ok(())
    }
}
