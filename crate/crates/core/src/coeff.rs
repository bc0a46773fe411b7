//! Coefficient expressions: smooth functions of the base coordinates, kept
//! symbolically.
//!
//! A [`CoeffExpr`] is stored directly in canonical form, a polynomial with
//! rational coefficients over *atoms*. An atom is either a base coordinate or
//! an opaque application `f[a1,..,ak](e1,..,ek)` of a named smooth symbol,
//! differentiated `ai` times in its `i`-th slot, to coefficient expressions.
//! Two expressions are equal exactly when their canonical forms coincide.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

pub fn rational(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn integer(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub(crate) fn factorial(k: u32) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Coord(usize),
    Apply(Arc<Application>),
}

/// `symbol[derivs](args)`. `derivs` always has one entry per argument.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Application {
    pub symbol: String,
    pub derivs: Vec<u32>,
    pub args: Vec<CoeffExpr>,
}

/// Sorted by atom; every exponent is positive.
type Product = Vec<(Atom, u32)>;

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CoeffExpr {
    terms: BTreeMap<Product, Rational>,
}

fn mul_products(a: &Product, b: &Product) -> Product {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push((a[i].0.clone(), a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

impl CoeffExpr {
    pub fn zero() -> CoeffExpr {
        CoeffExpr::default()
    }

    pub fn one() -> CoeffExpr {
        CoeffExpr::constant(Rational::one())
    }

    pub fn constant(value: Rational) -> CoeffExpr {
        let mut terms = BTreeMap::new();
        if !value.is_zero() {
            terms.insert(Vec::new(), value);
        }
        CoeffExpr { terms }
    }

    pub fn int(value: i64) -> CoeffExpr {
        CoeffExpr::constant(integer(value))
    }

    pub fn coord(i: usize) -> CoeffExpr {
        CoeffExpr::atom(Atom::Coord(i))
    }

    /// An undifferentiated application `symbol(args)`.
    pub fn apply(symbol: impl Into<String>, args: Vec<CoeffExpr>) -> CoeffExpr {
        let derivs = vec![0; args.len()];
        CoeffExpr::apply_derived(symbol, derivs, args)
    }

    pub fn apply_derived(symbol: impl Into<String>, derivs: Vec<u32>, args: Vec<CoeffExpr>) -> CoeffExpr {
        assert_eq!(derivs.len(), args.len(), "one derivative order per argument");
        CoeffExpr::atom(Atom::Apply(Arc::new(Application {
            symbol: symbol.into(),
            derivs,
            args,
        })))
    }

    fn atom(atom: Atom) -> CoeffExpr {
        let mut terms = BTreeMap::new();
        terms.insert(vec![(atom, 1)], Rational::one());
        CoeffExpr { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    /// The value when the expression is a rational constant.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (p, c) = self.terms.iter().next().unwrap();
                p.is_empty().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn scale(&self, factor: &Rational) -> CoeffExpr {
        if factor.is_zero() {
            return CoeffExpr::zero();
        }
        CoeffExpr {
            terms: self
                .terms
                .iter()
                .map(|(p, c)| (p.clone(), c * factor))
                .collect(),
        }
    }

    fn add_term(&mut self, product: Product, coeff: Rational) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(product) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += coeff;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn pow(&self, k: u32) -> CoeffExpr {
        let mut acc = CoeffExpr::one();
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Formal partial derivative with respect to base coordinate `i`.
    pub fn differentiate(&self, i: usize) -> CoeffExpr {
        let mut out = CoeffExpr::zero();
        for (product, coeff) in &self.terms {
            for (pos, (atom, exp)) in product.iter().enumerate() {
                let d_atom = atom_derivative(atom, i);
                if d_atom.is_zero() {
                    continue;
                }
                let mut rest = product.clone();
                if *exp == 1 {
                    rest.remove(pos);
                } else {
                    rest[pos].1 -= 1;
                }
                let scaled = coeff * Rational::from_integer(BigInt::from(*exp));
                for (dp, dc) in &d_atom.terms {
                    out.add_term(mul_products(&rest, dp), &scaled * dc);
                }
            }
        }
        out
    }

    /// Iterated derivative `d^alpha`.
    pub fn differentiate_multi(&self, alpha: &[u32]) -> CoeffExpr {
        let mut e = self.clone();
        for (i, &k) in alpha.iter().enumerate() {
            for _ in 0..k {
                e = e.differentiate(i);
            }
        }
        e
    }

    /// Replaces coordinate `i` by `values[i]` everywhere, including inside
    /// application arguments. Coordinates beyond `values` are left alone.
    pub fn substitute(&self, values: &[CoeffExpr]) -> CoeffExpr {
        let mut out = CoeffExpr::zero();
        for (product, coeff) in &self.terms {
            let mut acc = CoeffExpr::constant(coeff.clone());
            for (atom, exp) in product {
                let value = match atom {
                    Atom::Coord(i) if *i < values.len() => values[*i].clone(),
                    Atom::Coord(_) => CoeffExpr::atom(atom.clone()),
                    Atom::Apply(app) => CoeffExpr::apply_derived(
                        app.symbol.clone(),
                        app.derivs.clone(),
                        app.args.iter().map(|a| a.substitute(values)).collect(),
                    ),
                };
                acc = &acc * &value.pow(*exp);
            }
            out += acc;
        }
        out
    }

    /// Rewrites every application of `symbol`, via `replacement(derivs, args)`.
    pub fn replace_symbol(
        &self,
        symbol: &str,
        replacement: &dyn Fn(&[u32], &[CoeffExpr]) -> CoeffExpr,
    ) -> CoeffExpr {
        let mut out = CoeffExpr::zero();
        for (product, coeff) in &self.terms {
            let mut acc = CoeffExpr::constant(coeff.clone());
            for (atom, exp) in product {
                let value = match atom {
                    Atom::Coord(_) => CoeffExpr::atom(atom.clone()),
                    Atom::Apply(app) => {
                        let args: Vec<CoeffExpr> = app
                            .args
                            .iter()
                            .map(|a| a.replace_symbol(symbol, replacement))
                            .collect();
                        if app.symbol == symbol {
                            replacement(&app.derivs, &args)
                        } else {
                            CoeffExpr::apply_derived(app.symbol.clone(), app.derivs.clone(), args)
                        }
                    }
                };
                acc = &acc * &value.pow(*exp);
            }
            out += acc;
        }
        out
    }

    /// Names of all opaque symbols, including nested ones.
    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        for product in self.terms.keys() {
            for (atom, _) in product {
                if let Atom::Apply(app) = atom {
                    out.insert(app.symbol.clone());
                    for a in &app.args {
                        a.collect_symbols(out);
                    }
                }
            }
        }
    }

    /// Largest coordinate index used, if any.
    pub fn max_coord(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for product in self.terms.keys() {
            for (atom, _) in product {
                let m = match atom {
                    Atom::Coord(i) => Some(*i),
                    Atom::Apply(app) => app.args.iter().filter_map(|a| a.max_coord()).max(),
                };
                best = best.max(m);
            }
        }
        best
    }

    /// Replaces every opaque application by its polynomial realization,
    /// differentiated as required. The result only contains coordinates.
    pub fn realize(&self, realizations: &Realizations) -> Result<CoeffExpr> {
        let mut out = CoeffExpr::zero();
        for (product, coeff) in &self.terms {
            let mut acc = CoeffExpr::constant(coeff.clone());
            for (atom, exp) in product {
                let value = match atom {
                    Atom::Coord(_) => CoeffExpr::atom(atom.clone()),
                    Atom::Apply(app) => {
                        let poly = realizations
                            .get(&app.symbol)
                            .ok_or_else(|| Error::UnboundSymbol(app.symbol.clone()))?;
                        let args = app
                            .args
                            .iter()
                            .map(|a| a.realize(realizations))
                            .collect::<Result<Vec<_>>>()?;
                        poly.differentiate_multi(&app.derivs).substitute(&args)
                    }
                };
                acc = &acc * &value.pow(*exp);
            }
            out += acc;
        }
        Ok(out)
    }

    /// Exact value at a rational point.
    pub fn evaluate(&self, point: &[Rational], realizations: &Realizations) -> Result<Rational> {
        let mut total = Rational::zero();
        for (product, coeff) in &self.terms {
            let mut acc = coeff.clone();
            for (atom, exp) in product {
                let value = match atom {
                    Atom::Coord(i) => point
                        .get(*i)
                        .cloned()
                        .ok_or_else(|| Error::UnboundSymbol(format!("x{i}")))?,
                    Atom::Apply(app) => {
                        let poly = realizations
                            .get(&app.symbol)
                            .ok_or_else(|| Error::UnboundSymbol(app.symbol.clone()))?;
                        let args = app
                            .args
                            .iter()
                            .map(|a| a.evaluate(point, realizations))
                            .collect::<Result<Vec<_>>>()?;
                        poly.differentiate_multi(&app.derivs)
                            .evaluate(&args, &Realizations::new())?
                    }
                };
                acc *= num_traits::pow(value, *exp as usize);
            }
            total += acc;
        }
        Ok(total)
    }

    pub fn display_with<'a>(&'a self, names: &'a dyn Fn(usize) -> String) -> CoeffDisplay<'a> {
        CoeffDisplay { expr: self, names }
    }

    /// The single term `(coefficient, rest)` when there is exactly one.
    pub(crate) fn single_term(&self) -> Option<(Rational, CoeffExpr)> {
        if self.terms.len() != 1 {
            return None;
        }
        let (p, c) = self.terms.iter().next().unwrap();
        let mut rest = BTreeMap::new();
        rest.insert(p.clone(), Rational::one());
        Some((c.clone(), CoeffExpr { terms: rest }))
    }
}

fn atom_derivative(atom: &Atom, i: usize) -> CoeffExpr {
    match atom {
        Atom::Coord(j) if *j == i => CoeffExpr::one(),
        Atom::Coord(_) => CoeffExpr::zero(),
        Atom::Apply(app) => {
            let mut out = CoeffExpr::zero();
            for (slot, arg) in app.args.iter().enumerate() {
                let inner = arg.differentiate(i);
                if inner.is_zero() {
                    continue;
                }
                let mut derivs = app.derivs.clone();
                derivs[slot] += 1;
                let outer = CoeffExpr::apply_derived(app.symbol.clone(), derivs, app.args.clone());
                out += &outer * &inner;
            }
            out
        }
    }
}

/// Polynomial realizations of opaque symbols, each a [`CoeffExpr`] in the
/// coordinates `0..arity` and free of applications.
pub type Realizations = HashMap<String, CoeffExpr>;

impl<'b> Add<&'b CoeffExpr> for &CoeffExpr {
    type Output = CoeffExpr;
    fn add(self, rhs: &'b CoeffExpr) -> CoeffExpr {
        let mut out = self.clone();
        for (p, c) in &rhs.terms {
            out.add_term(p.clone(), c.clone());
        }
        out
    }
}

impl Add for CoeffExpr {
    type Output = CoeffExpr;
    fn add(self, rhs: CoeffExpr) -> CoeffExpr {
        &self + &rhs
    }
}

impl AddAssign for CoeffExpr {
    fn add_assign(&mut self, rhs: CoeffExpr) {
        for (p, c) in rhs.terms {
            self.add_term(p, c);
        }
    }
}

impl<'b> Sub<&'b CoeffExpr> for &CoeffExpr {
    type Output = CoeffExpr;
    fn sub(self, rhs: &'b CoeffExpr) -> CoeffExpr {
        let mut out = self.clone();
        for (p, c) in &rhs.terms {
            out.add_term(p.clone(), -c.clone());
        }
        out
    }
}

impl Sub for CoeffExpr {
    type Output = CoeffExpr;
    fn sub(self, rhs: CoeffExpr) -> CoeffExpr {
        &self - &rhs
    }
}

impl Neg for &CoeffExpr {
    type Output = CoeffExpr;
    fn neg(self) -> CoeffExpr {
        CoeffExpr {
            terms: self.terms.iter().map(|(p, c)| (p.clone(), -c.clone())).collect(),
        }
    }
}

impl Neg for CoeffExpr {
    type Output = CoeffExpr;
    fn neg(self) -> CoeffExpr {
        -&self
    }
}

impl<'b> Mul<&'b CoeffExpr> for &CoeffExpr {
    type Output = CoeffExpr;
    fn mul(self, rhs: &'b CoeffExpr) -> CoeffExpr {
        let mut out = CoeffExpr::zero();
        for (pa, ca) in &self.terms {
            for (pb, cb) in &rhs.terms {
                out.add_term(mul_products(pa, pb), ca * cb);
            }
        }
        out
    }
}

impl Mul for CoeffExpr {
    type Output = CoeffExpr;
    fn mul(self, rhs: CoeffExpr) -> CoeffExpr {
        &self * &rhs
    }
}

impl From<Rational> for CoeffExpr {
    fn from(r: Rational) -> CoeffExpr {
        CoeffExpr::constant(r)
    }
}

pub struct CoeffDisplay<'a> {
    expr: &'a CoeffExpr,
    names: &'a dyn Fn(usize) -> String,
}

impl CoeffDisplay<'_> {
    fn write_atom(&self, f: &mut fmt::Formatter<'_>, atom: &Atom) -> fmt::Result {
        match atom {
            Atom::Coord(i) => write!(f, "{}", (self.names)(*i)),
            Atom::Apply(app) => {
                write!(f, "{}", app.symbol)?;
                if app.derivs.iter().any(|&d| d > 0) {
                    let idx: Vec<String> = app.derivs.iter().map(|d| d.to_string()).collect();
                    write!(f, "[{}]", idx.join(","))?;
                }
                write!(f, "(")?;
                for (k, a) in app.args.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", a.display_with(self.names))?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for CoeffDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.expr.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (product, coeff)) in self.expr.terms.iter().enumerate() {
            let negative = coeff.is_negative();
            match (k, negative) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let magnitude = coeff.abs();
            if product.is_empty() {
                write!(f, "{magnitude}")?;
                continue;
            }
            if !magnitude.is_one() {
                write!(f, "{magnitude} * ")?;
            }
            for (j, (atom, exp)) in product.iter().enumerate() {
                if j > 0 {
                    write!(f, " * ")?;
                }
                self.write_atom(f, atom)?;
                if *exp > 1 {
                    write!(f, "^{exp}")?;
                }
            }
        }
        Ok(())
    }
}

fn default_coord_name(i: usize) -> String {
    format!("x{i}")
}

impl fmt::Display for CoeffExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_with(&default_coord_name))
    }
}
