//! Construction of a splitting of an atlas: an embedding of base functions,
//! a splitting of `J -> J/J^2`, and the resulting isomorphism with the split
//! model, all modulo `J^{K+1}`.
//!
//! Both the embedding and the module splitting are built order by order.
//! At each order the chartwise candidates disagree on overlaps by a
//! 1-cocycle of pure order; a partition of unity turns it into a
//! coboundary, whose primitive is added as a correction.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::atlas::{build_split_model, extract_bundle, validate_atlas, Atlas, GradedBundleData};
use crate::coeff::CoeffExpr;
use crate::degree::{Signature, VarRef};
use crate::error::{Error, Result};
use crate::morphism::{compose, compose_coeff, invert, pullback, Morphism};
use crate::par::Execution;
use crate::report::Report;
use crate::series::{GSeries, Monomial};

/// Per chart, the images of the chart's base coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmbeddingFamily {
    pub order: usize,
    pub values: Vec<Vec<GSeries>>,
}

impl EmbeddingFamily {
    /// `phi_U = id` on every chart.
    pub fn canonical(atlas: &Atlas, order: usize) -> EmbeddingFamily {
        let sig = atlas.signature();
        EmbeddingFamily {
            order,
            values: (0..atlas.charts().len())
                .map(|_| (0..sig.p()).map(|i| GSeries::variable(sig, order, VarRef::Base(i))).collect())
                .collect(),
        }
    }

    /// `phi_U(f)` for a function `f` of the chart's base coordinates.
    pub fn apply(&self, chart: usize, f: &CoeffExpr) -> Result<GSeries> {
        let sig = self.values[chart]
            .first()
            .map(|s| s.signature().clone())
            .ok_or_else(|| Error::Internal("embedding of a chart without base coordinates".into()))?;
        compose_coeff(f, &self.values[chart], &sig, self.order)
    }

    pub fn truncate(&self, order: usize) -> EmbeddingFamily {
        EmbeddingFamily {
            order: order.min(self.order),
            values: self
                .values
                .iter()
                .map(|v| v.iter().map(|s| s.truncate_to(order)).collect())
                .collect(),
        }
    }
}

/// Extends `phi_k` on one chart to order `k + 1` by reading the same
/// coordinate images at the higher order.
pub fn extend_embedding_chartwise(phi: &[GSeries], order: usize) -> Vec<GSeries> {
    phi.iter().map(|s| s.reinterpret_at(order + 1)).collect()
}

/// A Cech 1-cochain on ordered pairs, each value a list of series (values
/// of a derivation on base coordinates, or of a module map on the frame).
pub type Cochain1 = BTreeMap<(usize, usize), Vec<GSeries>>;

/// A Cech 0-cochain: one value list per chart.
pub type Cochain0 = Vec<Vec<GSeries>>;

/// What the cochain values act on, which fixes how they are transported.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CochainKind {
    /// Derivations of base functions, stored on base coordinates.
    Derivation,
    /// Module maps out of `J/J^2`, stored on the formal-variable frame.
    Module,
}

/// Coefficient of `xi_V^b` in the image of `xi_U^a` under `T_UV`.
fn frame_matrix(t: &Morphism) -> Vec<Vec<CoeffExpr>> {
    let sig = t.source();
    let q = sig.q();
    (0..q)
        .map(|a| {
            let img = t.image(VarRef::Formal(a));
            (0..q).map(|b| img.coefficient(&Monomial::var(q, b))).collect()
        })
        .collect()
}

/// `phi_V` expressed on chart `U`: the images of the `U` base coordinates
/// under `phi_V`, transported along `T_VU`.
pub fn transported_embedding(atlas: &Atlas, phi: &EmbeddingFamily, u: usize, v: usize, order: usize) -> Result<Vec<GSeries>> {
    let sig = atlas.signature();
    let a = atlas.transition(u, v)?.base_map();
    let phi_v: Vec<GSeries> = phi.values[v].iter().map(|s| s.truncate_to(order)).collect();
    let t_vu = atlas.transition(v, u)?;
    a.iter()
        .map(|ai| pullback(&t_vu, &compose_coeff(ai, &phi_v, sig, order)?))
        .collect()
}

fn first_nonzero(values: &[GSeries], name: impl Fn(usize) -> String) -> Option<(String, String)> {
    values
        .iter()
        .enumerate()
        .find(|(_, s)| !s.is_zero())
        .map(|(i, s)| (name(i), s.to_string()))
}

fn difference(a: &[GSeries], b: &[GSeries]) -> Result<Vec<GSeries>> {
    a.iter().zip(b).map(|(x, y)| x.try_sub(y)).collect()
}

fn pure(diff: Vec<GSeries>, order: usize, what: &str) -> Result<Vec<GSeries>> {
    if order > 0 && diff.iter().any(|s| !s.truncate_to(order - 1).is_zero()) {
        return Err(Error::Internal(format!(
            "{what} has terms below order {order}; the family was not consistent at the previous order"
        )));
    }
    Ok(diff)
}

/// `omega_UV = phi_U - (phi_V transported to U)` on the base coordinates of
/// `U`, for a family consistent below `order`. The result has pure order.
pub fn cocycle_mismatch(atlas: &Atlas, phi: &EmbeddingFamily, u: usize, v: usize, order: usize) -> Result<Vec<GSeries>> {
    let own: Vec<GSeries> = phi.values[u].iter().map(|s| s.truncate_to(order)).collect();
    let other = transported_embedding(atlas, phi, u, v, order)?;
    pure(difference(&own, &other)?, order, "embedding mismatch")
}

/// The values of the derivation on an arbitrary base function, by the
/// chain rule.
pub fn apply_derivation(values: &[GSeries], f: &CoeffExpr) -> Result<GSeries> {
    let mut acc: Option<GSeries> = None;
    for (i, v) in values.iter().enumerate() {
        let term = v.scale(&f.differentiate(i));
        acc = Some(match acc {
            None => term,
            Some(a) => a.try_add(&term)?,
        });
    }
    acc.ok_or_else(|| Error::Internal("derivation without values".into()))
}

/// Expresses a chart-`V` cochain value on chart `U`, keeping order `order`.
pub fn transport_cochain(atlas: &Atlas, kind: CochainKind, values: &[GSeries], u: usize, v: usize, order: usize) -> Result<Vec<GSeries>> {
    if u == v {
        return Ok(values.to_vec());
    }
    let t_vu = atlas.transition(v, u)?;
    let t_uv = atlas.transition(u, v)?;
    let sig = atlas.signature();
    let rows: Vec<Vec<CoeffExpr>> = match kind {
        CochainKind::Derivation => t_uv
            .base_map()
            .iter()
            .map(|a| (0..sig.p()).map(|j| a.differentiate(j)).collect())
            .collect(),
        CochainKind::Module => frame_matrix(&t_uv),
    };
    rows.iter()
        .map(|row| {
            let mut s = GSeries::zero(sig, order);
            for (c, val) in row.iter().zip(values) {
                if !c.is_zero() {
                    s = s.try_add(&val.scale(c))?;
                }
            }
            Ok(pullback(&t_vu, &s)?.pure_order(order))
        })
        .collect()
}

/// `eta_U = - sum_W rho_W omega_UW`.
pub fn solve_coboundary(atlas: &Atlas, omega: &Cochain1, order: usize) -> Result<Cochain0> {
    let sig = atlas.signature();
    let charts = atlas.charts().len();
    let width = omega.values().next().map_or(0, Vec::len);
    let zero = vec![vec![GSeries::zero(sig, order); width]; charts];
    let nonzero = omega.iter().find(|(_, v)| v.iter().any(|s| !s.is_zero()));
    let Some((&(u0, v0), _)) = nonzero else {
        return Ok(zero);
    };
    if atlas.partition().is_none() {
        return Err(Error::MissingPartition(format!(
            "the mismatch on ({}, {}) at order {order} is nonzero",
            atlas.charts()[u0],
            atlas.charts()[v0]
        )));
    }
    let mut eta = zero;
    for (u, eta_u) in eta.iter_mut().enumerate() {
        for w in 0..charts {
            if w == u {
                continue;
            }
            let Some(om) = omega.get(&(u, w)) else {
                return Err(Error::MissingPartition(format!(
                    "the correction on `{}` needs the mismatch with `{}`, but the charts do not overlap",
                    atlas.charts()[u],
                    atlas.charts()[w]
                )));
            };
            let rho = atlas.partition_in(w, u)?;
            for (e, o) in eta_u.iter_mut().zip(om) {
                *e = e.try_sub(&o.scale(&rho))?;
            }
        }
    }
    Ok(eta)
}

/// Records antisymmetry, triple cocycle and coboundary identities of
/// `omega` and its primitive `eta` at one order.
fn check_cochain(
    atlas: &Atlas,
    kind: CochainKind,
    omega: &Cochain1,
    eta: &Cochain0,
    order: usize,
    prefix: &str,
    report: &mut Report,
) -> Result<()> {
    let charts = atlas.charts();
    let sig = atlas.signature();
    let name = |i: usize| match kind {
        CochainKind::Derivation => sig.base_names()[i].clone(),
        CochainKind::Module => sig.formal_name(i).to_string(),
    };
    let tag = |ix: &[usize]| {
        format!(
            "k{order}:{}",
            ix.iter().map(|&i| charts[i].as_str()).collect::<Vec<_>>().join(",")
        )
    };
    let nerve = atlas.nerve();
    for (u, v) in nerve.ordered_pairs() {
        let back = transport_cochain(atlas, kind, &omega[&(v, u)], u, v, order)?;
        let sum: Vec<GSeries> = omega[&(u, v)].iter().zip(&back).map(|(a, b)| a.try_add(b)).collect::<Result<_>>()?;
        report.record(
            &format!("{prefix}-antisymmetry"),
            tag(&[u, v]),
            first_nonzero(&sum, name).map(|(v, r)| format!("{v}: {r}")),
        );
        let moved = transport_cochain(atlas, kind, &eta[v], u, v, order)?;
        let delta = difference(&difference(&moved, &eta[u])?, &omega[&(u, v)])?;
        report.record(
            &format!("{prefix}-coboundary"),
            tag(&[u, v]),
            first_nonzero(&delta, name).map(|(v, r)| format!("{v}: {r}")),
        );
    }
    for [u, v, w] in nerve.ordered_triples() {
        let moved = transport_cochain(atlas, kind, &omega[&(v, w)], u, v, order)?;
        let sum: Vec<GSeries> = omega[&(u, v)].iter().zip(&moved).map(|(a, b)| a.try_add(b)).collect::<Result<_>>()?;
        let delta = difference(&omega[&(u, w)], &sum)?;
        report.record(
            &format!("{prefix}-cocycle"),
            tag(&[u, v, w]),
            first_nonzero(&delta, name).map(|(v, r)| format!("{v}: {r}")),
        );
    }
    Ok(())
}

/// Probe functions for the derivation check.
fn probes(p: usize) -> (CoeffExpr, CoeffExpr) {
    let args: Vec<CoeffExpr> = (0..p).map(CoeffExpr::coord).collect();
    (CoeffExpr::apply("probe_f", args.clone()), CoeffExpr::apply("probe_g", args))
}

/// Checks that the direct mismatch on arbitrary functions agrees with the
/// chain rule and satisfies the Leibniz rule.
fn check_derivation(atlas: &Atlas, phi: &EmbeddingFamily, omega: &[GSeries], u: usize, v: usize, order: usize) -> Result<Option<String>> {
    let sig = atlas.signature();
    let a = atlas.transition(u, v)?.base_map();
    let t_vu = atlas.transition(v, u)?;
    let phi_u: Vec<GSeries> = phi.values[u].iter().map(|s| s.truncate_to(order)).collect();
    let phi_v: Vec<GSeries> = phi.values[v].iter().map(|s| s.truncate_to(order)).collect();
    let direct = |f: &CoeffExpr| -> Result<GSeries> {
        let own = compose_coeff(f, &phi_u, sig, order)?;
        let other = pullback(&t_vu, &compose_coeff(&f.substitute(&a), &phi_v, sig, order)?)?;
        Ok(own.try_sub(&other)?.pure_order(order))
    };
    let (f, g) = probes(sig.p());
    let fg = &f * &g;
    let (wf, wg, wfg) = (direct(&f)?, direct(&g)?, direct(&fg)?);
    if wf != apply_derivation(omega, &f)? {
        return Ok(Some(format!("chain rule: {}", wf.try_sub(&apply_derivation(omega, &f)?)?)));
    }
    let leibniz = wf.scale(&g).try_add(&wg.scale(&f))?;
    let diff = wfg.try_sub(&leibniz)?;
    Ok((!diff.is_zero()).then(|| format!("leibniz: {diff}")))
}

/// Record of the corrections made while building the embedding.
#[derive(Clone, Debug, Default)]
pub struct EmbeddingTrace {
    /// `omega` at orders `1..=K`, index `k - 1`.
    pub omegas: Vec<Cochain1>,
    pub etas: Vec<Cochain0>,
}

fn pairwise<T: Send>(atlas: &Atlas, exec: Execution, f: impl Fn(usize, usize) -> Result<T> + Sync + Send) -> Result<BTreeMap<(usize, usize), T>> {
    let pairs = atlas.nerve().ordered_pairs();
    let out = exec.map(&pairs, |&(u, v)| f(u, v));
    pairs.into_iter().zip(out).map(|(p, r)| Ok((p, r?))).collect()
}

/// Builds a consistent embedding of base functions modulo `J^{K+1}`.
pub fn build_base_embedding(atlas: &Atlas, order: usize, report: &mut Report) -> Result<(EmbeddingFamily, EmbeddingTrace)> {
    build_base_embedding_with(atlas, order, report, Execution::default())
}

pub fn build_base_embedding_with(
    atlas: &Atlas,
    order: usize,
    report: &mut Report,
    exec: Execution,
) -> Result<(EmbeddingFamily, EmbeddingTrace)> {
    let sig = atlas.signature();
    let charts = atlas.charts();
    let mut phi = EmbeddingFamily::canonical(atlas, 0);
    let mut trace = EmbeddingTrace::default();
    for k in 1..=order {
        let previous = phi.clone();
        phi = EmbeddingFamily {
            order: k,
            values: phi.values.iter().map(|v| extend_embedding_chartwise(v, k - 1)).collect(),
        };
        let omega: Cochain1 = pairwise(atlas, exec, |u, v| cocycle_mismatch(atlas, &phi, u, v, k))?;
        for (&(u, v), om) in &omega {
            let scope = format!("k{k}:{},{}", charts[u], charts[v]);
            let degree_ok = om.iter().all(|s| s.is_homogeneous_of(crate::degree::Degree::zero(sig.n())));
            report.record("omega-degree", scope.clone(), (!degree_ok).then(|| "inhomogeneous".to_string()));
            report.record("omega-derivation", scope, check_derivation(atlas, &phi, om, u, v, k)?);
        }
        let eta = solve_coboundary(atlas, &omega, k)?;
        check_cochain(atlas, CochainKind::Derivation, &omega, &eta, k, "omega", report)?;
        for (vals, e) in phi.values.iter_mut().zip(&eta) {
            for (s, c) in vals.iter_mut().zip(e) {
                *s = s.try_add(&c.reinterpret_at(s.order()))?;
            }
        }
        for (u, vals) in phi.values.iter().enumerate() {
            let back: Vec<GSeries> = vals.iter().map(|s| s.truncate_to(k - 1)).collect();
            let scope = format!("k{k}:{}", charts[u]);
            report.record(
                "phi-extension",
                scope,
                (back != previous.values[u]).then(|| "truncation differs from the previous order".to_string()),
            );
        }
        let after: Cochain1 = pairwise(atlas, exec, |u, v| {
            let own: Vec<GSeries> = phi.values[u].clone();
            difference(&own, &transported_embedding(atlas, &phi, u, v, k)?)
        })?;
        for ((u, v), d) in after {
            report.record(
                "phi-corrected",
                format!("k{k}:{},{}", charts[u], charts[v]),
                first_nonzero(&d, |i| sig.base_names()[i].clone()).map(|(v, r)| format!("{v}: {r}")),
            );
        }
        trace.omegas.push(omega);
        trace.etas.push(eta);
    }
    Ok((phi, trace))
}

/// Per chart, the lifts of the formal-variable frame of `J/J^2` into `J`.
pub fn build_module_splitting(atlas: &Atlas, phi: &EmbeddingFamily, order: usize, report: &mut Report) -> Result<Vec<Vec<GSeries>>> {
    build_module_splitting_with(atlas, phi, order, report, Execution::default())
}

pub fn build_module_splitting_with(
    atlas: &Atlas,
    phi: &EmbeddingFamily,
    order: usize,
    report: &mut Report,
    exec: Execution,
) -> Result<Vec<Vec<GSeries>>> {
    let sig = atlas.signature();
    let charts = atlas.charts();
    let mut lift: Vec<Vec<GSeries>> = (0..charts.len())
        .map(|_| (0..sig.q()).map(|a| GSeries::variable(sig, order, VarRef::Formal(a))).collect())
        .collect();
    for r in 2..=order {
        let mu: Cochain1 = pairwise(atlas, exec, |u, v| {
            pure(module_mismatch(atlas, phi, &lift, u, v, r)?, r, "frame mismatch")
        })?;
        let theta = solve_coboundary(atlas, &mu, r)?;
        check_cochain(atlas, CochainKind::Module, &mu, &theta, r, "frame", report)?;
        for (vals, t) in lift.iter_mut().zip(&theta) {
            for (s, c) in vals.iter_mut().zip(t) {
                *s = s.try_add(&c.reinterpret_at(s.order()))?;
            }
        }
        let after: Cochain1 = pairwise(atlas, exec, |u, v| module_mismatch(atlas, phi, &lift, u, v, r))?;
        for ((u, v), d) in after {
            report.record(
                "frame-corrected",
                format!("k{r}:{},{}", charts[u], charts[v]),
                first_nonzero(&d, |a| sig.formal_name(a).to_string()).map(|(v, r)| format!("{v}: {r}")),
            );
        }
    }
    Ok(lift)
}

/// `Phi1_U(xi_U^a) - (sum_b phi_V(L^a_b) Phi1_V(xi_V^b) transported to U)`.
fn module_mismatch(atlas: &Atlas, phi: &EmbeddingFamily, lift: &[Vec<GSeries>], u: usize, v: usize, order: usize) -> Result<Vec<GSeries>> {
    let sig = atlas.signature();
    let l = frame_matrix(&atlas.transition(u, v)?);
    let t_vu = atlas.transition(v, u)?;
    let phi_v: Vec<GSeries> = phi.values[v].iter().map(|s| s.truncate_to(order)).collect();
    let mut out = Vec::with_capacity(sig.q());
    for (a, row) in l.iter().enumerate() {
        let mut s = GSeries::zero(sig, order);
        for (b, c) in row.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let coeff = compose_coeff(c, &phi_v, sig, order)?;
            s = s.try_add(&coeff.multiply(&lift[v][b].truncate_to(order))?)?;
        }
        out.push(lift[u][a].truncate_to(order).try_sub(&pullback(&t_vu, &s)?)?);
    }
    Ok(out)
}

/// Per chart, the morphism from the atlas chart to the split-model chart
/// whose pullback is `Phi`: base coordinates go to `phi_U(x)`, formal
/// variables to `Phi1_U(xi)`.
pub fn assemble_iso(atlas: &Atlas, phi: &EmbeddingFamily, lift: &[Vec<GSeries>], order: usize) -> Result<Vec<Morphism>> {
    let sig = atlas.signature();
    (0..atlas.charts().len())
        .map(|u| {
            let images = phi.values[u]
                .iter()
                .chain(&lift[u])
                .enumerate()
                .map(|(i, s)| (sig.var_name(sig.var_ref(i)).to_string(), s.truncate_to(order)))
                .collect();
            Morphism::new(sig.clone(), sig.clone(), images, order)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplittingResult {
    pub signature: Arc<Signature>,
    pub order: usize,
    pub charts: Vec<String>,
    pub bundle: GradedBundleData,
    pub embedding: EmbeddingFamily,
    pub iso: Vec<Morphism>,
    pub report: Report,
}

impl SplittingResult {
    /// `Phi1` per chart: the formal images of the iso.
    pub fn module_splitting(&self) -> Vec<Vec<GSeries>> {
        let p = self.signature.p();
        self.iso.iter().map(|m| m.images()[p..].to_vec()).collect()
    }
}

/// Runs the whole construction at order `K` and verifies the outcome.
pub fn split(atlas: &Atlas, order: usize) -> Result<SplittingResult> {
    split_with(atlas, order, Execution::default())
}

pub fn split_with(atlas: &Atlas, order: usize, exec: Execution) -> Result<SplittingResult> {
    if order > atlas.order() {
        return Err(Error::Order {
            requested: order,
            available: atlas.order(),
        });
    }
    let gluing = validate_atlas(atlas);
    if let Some(bad) = gluing.failures().next() {
        return Err(Error::Atlas(format!("the atlas is not consistent: {bad}")));
    }
    let mut report = Report::new();
    let (phi, _) = build_base_embedding_with(atlas, order, &mut report, exec)?;
    let lift = build_module_splitting_with(atlas, &phi, order, &mut report, exec)?;
    let iso = assemble_iso(atlas, &phi, &lift, order)?;
    let mut result = SplittingResult {
        signature: atlas.signature().clone(),
        order,
        charts: atlas.charts().to_vec(),
        bundle: extract_bundle(atlas),
        embedding: phi,
        iso,
        report: Report::new(),
    };
    report.extend(verify_iso(atlas, &result));
    result.report = report;
    Ok(result)
}

/// Re-checks a splitting result against its atlas modulo `J^{K+1}`.
pub fn verify_iso(atlas: &Atlas, result: &SplittingResult) -> Report {
    let mut report = Report::new();
    if let Err(e) = verify_into(atlas, result, &mut report) {
        report.fail("verify", "", Some(format!("error: {e}")));
    }
    report
}

fn verify_into(atlas: &Atlas, result: &SplittingResult, report: &mut Report) -> Result<()> {
    let sig = atlas.signature();
    let order = result.order;
    let charts = atlas.charts();
    if result.signature != *sig || result.charts != charts || order > atlas.order() {
        return Err(Error::Atlas("the result does not belong to this atlas".into()));
    }
    if result.embedding.values.len() != charts.len() || result.iso.len() != charts.len() {
        return Err(Error::Atlas("the result does not cover every chart".into()));
    }
    let bundle = extract_bundle(atlas);
    report.record(
        "bundle-matches",
        "",
        (bundle != result.bundle).then(|| "extracted bundle differs".to_string()),
    );
    let split_model = build_split_model(&result.bundle, order)?;
    let model_report = validate_atlas(&split_model);
    report.record(
        "split-model-valid",
        "",
        model_report.failures().next().map(|f| f.to_string()),
    );
    report.record(
        "split-model-block-diagonal",
        "",
        (!split_model.is_split_form()).then(|| "transition not linear block-diagonal".to_string()),
    );

    let phi = &result.embedding;
    let base_name = |i: usize| sig.base_names()[i].clone();
    for (u, vals) in phi.values.iter().enumerate() {
        let eps: Vec<GSeries> = vals
            .iter()
            .enumerate()
            .map(|(i, s)| {
                GSeries::constant(sig, order, s.epsilon()).try_sub(&GSeries::variable(sig, order, VarRef::Base(i)))
            })
            .collect::<Result<_>>()?;
        report.record(
            "epsilon-phi",
            charts[u].clone(),
            first_nonzero(&eps, base_name).map(|(v, r)| format!("{v}: {r}")),
        );
    }
    for (u, v) in atlas.nerve().ordered_pairs() {
        let own: Vec<GSeries> = phi.values[u].iter().map(|s| s.truncate_to(order)).collect();
        let d = difference(&own, &transported_embedding(atlas, phi, u, v, order)?)?;
        match first_nonzero(&d, base_name) {
            None => report.pass("phi-consistency", format!("{},{}", charts[u], charts[v])),
            Some((var, r)) => report.fail("phi-consistency", format!("{},{}:{var}", charts[u], charts[v]), Some(r)),
        }
    }

    let p = sig.p();
    for (u, iso) in result.iso.iter().enumerate() {
        let c = charts[u].clone();
        let restricts = iso.images()[..p] == phi.values[u][..];
        report.record(
            "iso-restricts-phi",
            c.clone(),
            (!restricts).then(|| "base images differ from the embedding".to_string()),
        );
        let one = GSeries::one(sig, order);
        report.record(
            "iso-unital",
            c.clone(),
            (pullback(iso, &one)? != one).then(|| "Phi(1) != 1".to_string()),
        );
        let degree_ok = (0..sig.var_count()).all(|i| iso.images()[i].is_homogeneous_of(sig.var_degree(sig.var_ref(i))));
        report.record("iso-degree", c.clone(), (!degree_ok).then(|| "inhomogeneous image".to_string()));
        report.record("iso-multiplicative", c.clone(), check_multiplicative(iso, order)?);
        let linear_ok = sig
            .degree_blocks()
            .iter()
            .all(|(d, _)| iso.linear_block(*d).is_identity())
            && iso.images()[p..].iter().all(|s| s.epsilon().is_zero());
        report.record(
            "iso-linear-part",
            c.clone(),
            (!linear_ok).then(|| "Phi1 does not reduce to the identity on J/J^2".to_string()),
        );
        let invertible = match invert(iso, None) {
            Ok(inv) => compose(&inv, iso)?.is_identity() && compose(iso, &inv)?.is_identity(),
            Err(_) => false,
        };
        report.record("iso-invertible", c, (!invertible).then(|| "no formal inverse".to_string()));
    }

    for (u, v) in atlas.nerve().ordered_pairs() {
        let s_uv = split_model.transition(u, v)?;
        let t_vu = atlas.transition(v, u)?;
        let scope = format!("{},{}", charts[u], charts[v]);
        let mut clean = true;
        for i in 0..sig.var_count() {
            let r = sig.var_ref(i);
            let lhs = pullback(&t_vu, &pullback(&result.iso[v], s_uv.image(r))?)?;
            let diff = lhs.try_sub(&result.iso[u].image(r).truncate_to(order))?;
            if !diff.is_zero() {
                clean = false;
                report.fail("intertwining", format!("{scope}:{}", sig.var_name(r)), Some(diff.to_string()));
            }
        }
        if clean {
            report.pass("intertwining", scope);
        }
    }
    Ok(())
}

/// `Phi(s t) = Phi(s) Phi(t)` on all pairs of generators, and on a probe
/// coefficient times each generator.
fn check_multiplicative(iso: &Morphism, order: usize) -> Result<Option<String>> {
    let sig = iso.target();
    let gens: Vec<GSeries> = (0..sig.var_count())
        .map(|i| GSeries::variable(sig, order, sig.var_ref(i)))
        .collect();
    let images: Vec<GSeries> = gens.iter().map(|g| pullback(iso, g)).collect::<Result<_>>()?;
    let (probe, _) = probes(sig.p());
    let probe_series = GSeries::constant(sig, order, probe);
    let probe_image = pullback(iso, &probe_series)?;
    for (i, s) in gens.iter().enumerate() {
        for (j, t) in gens.iter().enumerate() {
            let lhs = pullback(iso, &s.multiply(t)?)?;
            let rhs = images[i].multiply(&images[j])?;
            if lhs != rhs {
                return Ok(Some(format!(
                    "{} * {}: {}",
                    sig.var_name(sig.var_ref(i)),
                    sig.var_name(sig.var_ref(j)),
                    lhs.try_sub(&rhs)?
                )));
            }
        }
        let lhs = pullback(iso, &probe_series.multiply(s)?)?;
        let rhs = probe_image.multiply(&images[i])?;
        if lhs != rhs {
            return Ok(Some(format!("probe * {}: {}", sig.var_name(sig.var_ref(i)), lhs.try_sub(&rhs)?)));
        }
    }
    Ok(None)
}
