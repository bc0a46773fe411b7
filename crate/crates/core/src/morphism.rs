//! Degree-preserving morphisms between superdomains.
//!
//! A [`Morphism`] is stored by the images of the *target* variables as series
//! over the *source*; its pullback sends target functions to source
//! functions. Coefficients are pulled back by formal Taylor expansion around
//! the base map, which terminates because every expansion variable has
//! positive `J`-order and everything is truncated at `K`.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::One;

use crate::coeff::{factorial, CoeffExpr, Rational};
use crate::degree::{Degree, Signature, VarRef};
use crate::error::{Error, Result};
use crate::matrix::CoeffMatrix;
use crate::par::Execution;
use crate::series::{monomials_up_to, GSeries, JOrder, Monomial};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Morphism {
    source: Arc<Signature>,
    target: Arc<Signature>,
    order: usize,
    images: Vec<GSeries>,
}

/// Evaluates `c(args)`, where `c` is a function of the coordinates
/// `0..args.len()`, by Taylor expansion around `epsilon(args)`.
pub fn compose_coeff(c: &CoeffExpr, args: &[GSeries], sig: &Arc<Signature>, order: usize) -> Result<GSeries> {
    if let Some(m) = c.max_coord() {
        if m >= args.len() {
            return Err(Error::Signature(format!(
                "coefficient uses coordinate {m} but only {} arguments are given",
                args.len()
            )));
        }
    }
    let base: Vec<CoeffExpr> = args.iter().map(|a| a.epsilon()).collect();
    let nil: Vec<GSeries> = args
        .iter()
        .zip(&base)
        .map(|(a, b)| {
            let mut n = a.truncate_to(order);
            n.add_term(Monomial::one(sig.q()), -b.clone());
            n.reinterpret_at(order)
        })
        .collect();
    let mut out = GSeries::zero(sig, order);
    let mut power = GSeries::one(sig, order);
    taylor_rec(c, &base, &nil, 0, 0, &mut power, &BigInt::one(), order, &mut out)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn taylor_rec(
    deriv: &CoeffExpr,
    base: &[CoeffExpr],
    nil: &[GSeries],
    i: usize,
    used: usize,
    power: &mut GSeries,
    denom: &BigInt,
    order: usize,
    out: &mut GSeries,
) -> Result<()> {
    if deriv.is_zero() || power.is_zero() {
        return Ok(());
    }
    if i == nil.len() {
        let value = deriv.substitute(base).scale(&Rational::new(BigInt::one(), denom.clone()));
        *out = out.try_add(&power.scale(&value))?;
        return Ok(());
    }
    taylor_rec(deriv, base, nil, i + 1, used, power, denom, order, out)?;
    let step = match nil[i].j_order() {
        JOrder::Finite(s) => s,
        JOrder::Infinite => return Ok(()),
    };
    let mut d = deriv.clone();
    let mut p = power.clone();
    let mut k: u32 = 0;
    let mut used = used;
    loop {
        used += step;
        if used > order {
            break;
        }
        k += 1;
        d = d.differentiate(i);
        if d.is_zero() {
            break;
        }
        p = p.multiply(&nil[i])?;
        if p.is_zero() {
            break;
        }
        let denom_k = denom * factorial(k);
        taylor_rec(&d, base, nil, i + 1, used, &mut p.clone(), &denom_k, order, out)?;
    }
    Ok(())
}

impl Morphism {
    /// Validates and builds a morphism from images of every target variable.
    pub fn new(
        source: Arc<Signature>,
        target: Arc<Signature>,
        images: Vec<(String, GSeries)>,
        order: usize,
    ) -> Result<Morphism> {
        if source.n() != target.n() {
            return Err(Error::Dimension {
                expected: target.n(),
                found: source.n(),
            });
        }
        let mut slots: Vec<Option<GSeries>> = vec![None; target.var_count()];
        for (name, series) in images {
            let r = target
                .lookup(&name)
                .ok_or_else(|| Error::Signature(format!("`{name}` is not a target variable")))?;
            let idx = match r {
                VarRef::Base(i) => i,
                VarRef::Formal(a) => target.p() + a,
            };
            if slots[idx].is_some() {
                return Err(Error::Signature(format!("image of `{name}` given twice")));
            }
            if series.signature() != &source {
                return Err(Error::Signature(format!("image of `{name}` is not a series over the source")));
            }
            if series.order() < order {
                return Err(Error::Order {
                    requested: order,
                    available: series.order(),
                });
            }
            let series = series.truncate_to(order);
            let expected = target.var_degree(r);
            if let Some((mono, found)) = series.degree_violation(expected) {
                return Err(Error::DegreeMismatch {
                    variable: name,
                    expected: expected.to_string(),
                    monomial: mono.display(&source).to_string(),
                    found: found.to_string(),
                });
            }
            slots[idx] = Some(series);
        }
        let images = slots
            .into_iter()
            .enumerate()
            .map(|(i, s)| s.ok_or_else(|| Error::MissingImage(target.var_name(target.var_ref(i)).to_string())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Morphism {
            source,
            target,
            order,
            images,
        })
    }

    /// Images indexed like [`Signature::all_vars`] of the target; unchecked.
    pub(crate) fn from_images(source: Arc<Signature>, target: Arc<Signature>, order: usize, images: Vec<GSeries>) -> Morphism {
        debug_assert_eq!(images.len(), target.var_count());
        Morphism {
            source,
            target,
            order,
            images,
        }
    }

    pub fn identity(sig: &Arc<Signature>, order: usize) -> Morphism {
        let images = (0..sig.var_count())
            .map(|i| GSeries::variable(sig, order, sig.var_ref(i)))
            .collect();
        Morphism::from_images(sig.clone(), sig.clone(), order, images)
    }

    pub fn source(&self) -> &Arc<Signature> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Signature> {
        &self.target
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Images indexed like [`Signature::all_vars`] of the target.
    pub fn images(&self) -> &[GSeries] {
        &self.images
    }

    pub fn image(&self, r: VarRef) -> &GSeries {
        match r {
            VarRef::Base(i) => &self.images[i],
            VarRef::Formal(a) => &self.images[self.target.p() + a],
        }
    }

    pub fn image_named(&self, name: &str) -> Option<&GSeries> {
        self.target.lookup(name).map(|r| self.image(r))
    }

    /// The underlying map of base coordinates: `epsilon` of the degree-0 images.
    pub fn base_map(&self) -> Vec<CoeffExpr> {
        self.images[..self.target.p()].iter().map(|s| s.epsilon()).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.source == self.target && *self == Morphism::identity(&self.source, self.order)
    }

    pub fn truncate(&self, order: usize) -> Result<Morphism> {
        Ok(Morphism {
            source: self.source.clone(),
            target: self.target.clone(),
            order,
            images: self
                .images
                .iter()
                .map(|s| s.truncate(order))
                .collect::<Result<Vec<_>>>()?,
        })
    }

    /// Linear part of the formal images in degree block `d`: entry
    /// `(t, s)` is the coefficient of source variable `s` in the image of
    /// target variable `t`, both enumerated within the block.
    pub fn linear_block(&self, d: Degree) -> CoeffMatrix {
        let t_idx: Vec<usize> = (0..self.target.q()).filter(|&a| self.target.formal_degree(a) == d).collect();
        let s_idx: Vec<usize> = (0..self.source.q()).filter(|&a| self.source.formal_degree(a) == d).collect();
        let q = self.source.q();
        let rows = t_idx
            .iter()
            .map(|&t| {
                let img = self.image(VarRef::Formal(t));
                s_idx.iter().map(|&s| img.coefficient(&Monomial::var(q, s))).collect()
            })
            .collect();
        CoeffMatrix::from_rows(rows).with_shape(t_idx.len(), s_idx.len())
    }
}

impl CoeffMatrix {
    fn with_shape(self, rows: usize, cols: usize) -> CoeffMatrix {
        if self.rows() == rows && self.cols() == cols {
            self
        } else {
            CoeffMatrix::zeros(rows, cols)
        }
    }
}

/// Pullback of a target series through `m`.
pub fn pullback(m: &Morphism, f: &GSeries) -> Result<GSeries> {
    pullback_with(m, f, Execution::default())
}

pub fn pullback_with(m: &Morphism, f: &GSeries, exec: Execution) -> Result<GSeries> {
    if f.signature() != &m.target {
        return Err(Error::Signature(format!(
            "series over [{}] cannot be pulled back along a morphism with target [{}]",
            f.signature(),
            m.target
        )));
    }
    let order = f.order().min(m.order);
    let sig = &m.source;
    let p = m.target.p();
    let base_images: Vec<GSeries> = m.images[..p].iter().map(|s| s.truncate_to(order)).collect();
    let formal_images: Vec<GSeries> = m.images[p..].iter().map(|s| s.truncate_to(order)).collect();
    let terms: Vec<(&Monomial, &CoeffExpr)> = f.terms().collect();
    let parts = exec.map(&terms, |(mono, c)| -> Result<GSeries> {
        let mut prod = GSeries::one(sig, order);
        for (a, &e) in mono.exponents().iter().enumerate() {
            for _ in 0..e {
                prod = prod.multiply(&formal_images[a])?;
                if prod.is_zero() {
                    return Ok(prod);
                }
            }
        }
        let coeff = compose_coeff(c, &base_images, sig, order)?;
        coeff.multiply(&prod)
    });
    let mut out = GSeries::zero(sig, order);
    for part in parts {
        out = out.try_add(&part?)?;
    }
    Ok(out)
}

/// `compose(m2, m1)` has pullback `pullback(m1, pullback(m2, .))`.
pub fn compose(m2: &Morphism, m1: &Morphism) -> Result<Morphism> {
    if m1.target != m2.source {
        return Err(Error::Signature(format!(
            "cannot compose: target [{}] differs from source [{}]",
            m1.target, m2.source
        )));
    }
    let order = m1.order.min(m2.order);
    let images = m2
        .images
        .iter()
        .map(|img| pullback(m1, &img.truncate_to(order)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Morphism::from_images(m1.source.clone(), m2.target.clone(), order, images))
}

/// Formal inverse. `base_inverse` gives the source base coordinates as
/// functions of the target base coordinates; it may be omitted when the
/// base map is the identity.
pub fn invert(m: &Morphism, base_inverse: Option<&[CoeffExpr]>) -> Result<Morphism> {
    let (src, tgt) = (&m.source, &m.target);
    if !src.same_shape(tgt) {
        return Err(Error::Signature(format!(
            "source [{src}] and target [{tgt}] have different dimensions"
        )));
    }
    let order = m.order;
    let p = src.p();
    let base_map = m.base_map();
    let coords: Vec<CoeffExpr> = (0..p).map(CoeffExpr::coord).collect();
    let b: Vec<CoeffExpr> = match base_inverse {
        None if base_map == coords => coords.clone(),
        None => return Err(Error::MissingBaseInverse),
        Some(b) => {
            if b.len() != p
                || base_map.iter().map(|a| a.substitute(b)).collect::<Vec<_>>() != coords
                || b.iter().map(|e| e.substitute(&base_map)).collect::<Vec<_>>() != coords
            {
                return Err(Error::Singular {
                    block: Degree::zero(src.n()).to_string(),
                });
            }
            b.to_vec()
        }
    };

    let blocks = tgt.degree_blocks();
    let mut linv: HashMap<Degree, CoeffMatrix> = HashMap::new();
    for (d, _) in &blocks {
        // At order 0 the formal variables vanish and any block will do.
        let inv = if order == 0 {
            CoeffMatrix::identity(m.linear_block(*d).rows())
        } else {
            m.linear_block(*d).inverse().ok_or(Error::Singular { block: d.to_string() })?
        };
        linv.insert(*d, inv);
    }

    // Initial guess: base inverse and inverse linear parts.
    let mut images: Vec<GSeries> = Vec::with_capacity(src.var_count());
    for bi in &b {
        images.push(GSeries::constant(tgt, order, bi.clone()));
    }
    let lin_images = |gx: &[GSeries], xi: &[GSeries]| -> Result<Vec<GSeries>> {
        let mut out = vec![GSeries::zero(tgt, order); src.q()];
        for (d, t_idx) in &blocks {
            let s_idx: Vec<usize> = (0..src.q()).filter(|&a| src.formal_degree(a) == *d).collect();
            let inv = &linv[d];
            for (row, &s) in s_idx.iter().enumerate() {
                let mut acc = GSeries::zero(tgt, order);
                for (col, &t) in t_idx.iter().enumerate() {
                    let entry = inv.get(row, col);
                    if entry.is_zero() {
                        continue;
                    }
                    let e = compose_coeff(entry, gx, tgt, order)?;
                    acc = acc.try_add(&e.multiply(&xi[t])?)?;
                }
                out[s] = acc;
            }
        }
        Ok(out)
    };
    let xi_prime: Vec<GSeries> = (0..tgt.q()).map(|a| GSeries::variable(tgt, order, VarRef::Formal(a))).collect();
    images.extend(lin_images(&images[..p].to_vec(), &xi_prime)?);

    // Principal parts removed from the images of m.
    let nonlinear: Vec<GSeries> = (0..tgt.var_count())
        .map(|i| {
            let img = &m.images[i];
            if i < p {
                let mut n = img.clone();
                n.add_term(Monomial::one(src.q()), -img.epsilon());
                n
            } else {
                img.try_sub(&img.pure_order(1)).expect("same signature")
            }
        })
        .collect();

    for _ in 0..=order + 1 {
        let current = Morphism::from_images(tgt.clone(), src.clone(), order, images.clone());
        let residual = nonlinear
            .iter()
            .map(|n| pullback(&current, n))
            .collect::<Result<Vec<_>>>()?;
        let mut next = Vec::with_capacity(src.var_count());
        let shifted: Vec<GSeries> = (0..p)
            .map(|i| GSeries::variable(tgt, order, VarRef::Base(i)).try_sub(&residual[i]))
            .collect::<Result<_>>()?;
        for bi in &b {
            next.push(compose_coeff(bi, &shifted, tgt, order)?);
        }
        let xi_rhs: Vec<GSeries> = (0..tgt.q())
            .map(|a| xi_prime[a].try_sub(&residual[p + a]))
            .collect::<Result<_>>()?;
        let gx = next.clone();
        next.extend(lin_images(&gx, &xi_rhs)?);
        if next == images {
            break;
        }
        images = next;
    }
    let inverse = Morphism::from_images(tgt.clone(), src.clone(), order, images);
    if !compose(&inverse, m)?.is_identity() || !compose(m, &inverse)?.is_identity() {
        return Err(Error::Internal("formal inversion did not converge".into()));
    }
    Ok(inverse)
}

/// One admissible term of a general coordinate change.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemplateFamily {
    pub target: String,
    pub degree: Degree,
    pub shapes: Vec<(Monomial, CoeffExpr)>,
}

#[derive(Clone, Debug)]
pub struct Template {
    pub signature: Arc<Signature>,
    pub order: usize,
    pub families: Vec<TemplateFamily>,
}

/// The most general degree-preserving coordinate change up to order `K`:
/// every monomial of the right degree, each with a fresh opaque coefficient
/// `c_<var>_<k>` depending on all base coordinates.
pub fn transformation_template(sig: &Arc<Signature>, order: usize) -> Template {
    let args: Vec<CoeffExpr> = (0..sig.p()).map(CoeffExpr::coord).collect();
    let families = sig
        .all_vars()
        .into_iter()
        .map(|v| {
            let shapes = monomials_up_to(sig, order, Some(v.degree))
                .into_iter()
                .enumerate()
                .map(|(k, m)| (m, CoeffExpr::apply(format!("c_{}_{k}", v.name), args.clone())))
                .collect();
            TemplateFamily {
                target: v.name,
                degree: v.degree,
                shapes,
            }
        })
        .collect();
    Template {
        signature: sig.clone(),
        order,
        families,
    }
}

impl Template {
    /// The generic endomorphism carrying the fresh coefficients.
    pub fn to_morphism(&self) -> Result<Morphism> {
        let images = self
            .families
            .iter()
            .map(|f| {
                (
                    f.target.clone(),
                    GSeries::from_terms(&self.signature, self.order, f.shapes.iter().cloned()),
                )
            })
            .collect();
        Morphism::new(self.signature.clone(), self.signature.clone(), images, self.order)
    }
}

/// Graded Jacobian: rows are target variables, columns source variables,
/// entry `(b, a)` is the left derivative of the image of `b` along `a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JacobianMatrix {
    pub source: Arc<Signature>,
    pub target: Arc<Signature>,
    pub entries: Vec<Vec<GSeries>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockViolation {
    pub row: String,
    pub col: String,
    pub expected: Degree,
    pub found: Degree,
}

impl JacobianMatrix {
    pub fn expected_degree(&self, row: usize, col: usize) -> Degree {
        self.target.var_degree(self.target.var_ref(row)) + self.source.var_degree(self.source.var_ref(col))
    }

    pub fn block_violations(&self) -> Vec<BlockViolation> {
        let mut out = Vec::new();
        for (r, row) in self.entries.iter().enumerate() {
            for (c, e) in row.iter().enumerate() {
                let expected = self.expected_degree(r, c);
                if let Some((_, found)) = e.degree_violation(expected) {
                    out.push(BlockViolation {
                        row: self.target.var_name(self.target.var_ref(r)).to_string(),
                        col: self.source.var_name(self.source.var_ref(c)).to_string(),
                        expected,
                        found,
                    });
                }
            }
        }
        out
    }
}

pub fn jacobian(m: &Morphism) -> Result<JacobianMatrix> {
    let entries = m
        .images
        .iter()
        .map(|img| {
            (0..m.source.var_count())
                .map(|c| img.derivative(m.source.var_ref(c)))
                .collect()
        })
        .collect();
    let jac = JacobianMatrix {
        source: m.source.clone(),
        target: m.target.clone(),
        entries,
    };
    if let Some(v) = jac.block_violations().first() {
        return Err(Error::Internal(format!(
            "Jacobian entry ({}, {}) has degree {} instead of {}",
            v.row, v.col, v.found, v.expected
        )));
    }
    Ok(jac)
}
