//! Finite atlases of superdomain charts glued by transition morphisms, and
//! graded vector bundle data with its split model.
//!
//! All charts share one [`Signature`]; the transition for the ordered pair
//! `(U, V)` is a morphism from the chart-`V` coordinates to the chart-`U`
//! coordinates, i.e. it gives the `U` coordinates as series in the `V`
//! coordinates.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::coeff::CoeffExpr;
use crate::degree::{Signature, VarRef};
use crate::error::{Error, Result};
use crate::matrix::CoeffMatrix;
use crate::morphism::{compose, Morphism};
use crate::par::Execution;
use crate::report::Report;
use crate::series::{GSeries, Monomial};

/// A symbolic partition of unity: one explicit function per chart, in that
/// chart's base coordinates, except for one complement chart whose function
/// is `1 - (sum of the others)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub explicit: BTreeMap<usize, CoeffExpr>,
    pub complement: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atlas {
    sig: Arc<Signature>,
    order: usize,
    charts: Vec<String>,
    pairs: BTreeSet<(usize, usize)>,
    triples: BTreeSet<[usize; 3]>,
    transitions: BTreeMap<(usize, usize), Morphism>,
    partition: Option<Partition>,
}

/// Nerve of an atlas: chart names, unordered pairs and triples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nerve {
    pub charts: Vec<String>,
    pub pairs: BTreeSet<(usize, usize)>,
    pub triples: BTreeSet<[usize; 3]>,
}

impl Nerve {
    pub fn new(charts: Vec<String>, pairs: &[(String, String)], triples: &[[String; 3]]) -> Result<Nerve> {
        for (i, c) in charts.iter().enumerate() {
            if charts[..i].contains(c) {
                return Err(Error::Atlas(format!("chart `{c}` declared twice")));
            }
        }
        let idx = |name: &str| {
            charts
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::Atlas(format!("unknown chart `{name}`")))
        };
        let mut pair_set = BTreeSet::new();
        for (a, b) in pairs {
            let (i, j) = (idx(a)?, idx(b)?);
            if i == j {
                return Err(Error::Atlas(format!("pair ({a}, {b}) is not an overlap of distinct charts")));
            }
            pair_set.insert((i.min(j), i.max(j)));
        }
        let mut triple_set = BTreeSet::new();
        for t in triples {
            let mut ix = [idx(&t[0])?, idx(&t[1])?, idx(&t[2])?];
            ix.sort_unstable();
            if ix[0] == ix[1] || ix[1] == ix[2] {
                return Err(Error::Atlas(format!("triple {t:?} repeats a chart")));
            }
            for (a, b) in [(ix[0], ix[1]), (ix[0], ix[2]), (ix[1], ix[2])] {
                if !pair_set.contains(&(a, b)) {
                    return Err(Error::Atlas(format!(
                        "triple {t:?} needs the pair ({}, {}) to be declared",
                        charts[a], charts[b]
                    )));
                }
            }
            triple_set.insert(ix);
        }
        Ok(Nerve {
            charts,
            pairs: pair_set,
            triples: triple_set,
        })
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.charts.iter().position(|c| c == name)
    }

    pub fn overlaps(&self, u: usize, v: usize) -> bool {
        u == v || self.pairs.contains(&(u.min(v), u.max(v)))
    }

    /// Every declared pair in both orientations.
    pub fn ordered_pairs(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self.pairs.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect();
        out.sort_unstable();
        out
    }

    /// Every declared triple in all six orders.
    pub fn ordered_triples(&self) -> Vec<[usize; 3]> {
        let mut out = Vec::new();
        for &[a, b, c] in &self.triples {
            out.extend([[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]);
        }
        out
    }
}

fn scope(charts: &[String], ix: &[usize]) -> String {
    ix.iter().map(|&i| charts[i].as_str()).collect::<Vec<_>>().join(",")
}

/// The first image of `m` that differs from the identity, as
/// `(variable, image - variable)`.
fn identity_residual(m: &Morphism) -> Option<(String, GSeries)> {
    let sig = m.source();
    for (i, img) in m.images().iter().enumerate() {
        let r = sig.var_ref(i);
        let diff = img
            .try_sub(&GSeries::variable(sig, m.order(), r))
            .expect("same signature");
        if !diff.is_zero() {
            return Some((sig.var_name(r).to_string(), diff));
        }
    }
    None
}

fn morphism_residual(a: &Morphism, b: &Morphism) -> Option<(String, GSeries)> {
    let sig = a.target();
    for (i, (x, y)) in a.images().iter().zip(b.images()).enumerate() {
        let diff = x.try_sub(y).expect("same signature");
        if !diff.is_zero() {
            return Some((sig.var_name(sig.var_ref(i)).to_string(), diff));
        }
    }
    None
}

impl Atlas {
    /// Transitions are keyed by chart names `(U, V)` and must cover both
    /// orientations of every declared pair.
    pub fn new(
        sig: Arc<Signature>,
        order: usize,
        nerve: Nerve,
        transitions: Vec<((String, String), Morphism)>,
        partition: Option<(Vec<(String, CoeffExpr)>, String)>,
    ) -> Result<Atlas> {
        let idx = |name: &str| nerve.index(name).ok_or_else(|| Error::Atlas(format!("unknown chart `{name}`")));
        let mut map = BTreeMap::new();
        for ((u, v), m) in transitions {
            let (i, j) = (idx(&u)?, idx(&v)?);
            if i == j || !nerve.overlaps(i, j) {
                return Err(Error::Atlas(format!("transition ({u}, {v}) is not on a declared pair")));
            }
            if m.source() != &sig || m.target() != &sig {
                return Err(Error::Atlas(format!("transition ({u}, {v}) is not over the atlas signature")));
            }
            if m.order() < order {
                return Err(Error::Order {
                    requested: order,
                    available: m.order(),
                });
            }
            if map.insert((i, j), m.truncate(order)?).is_some() {
                return Err(Error::Atlas(format!("transition ({u}, {v}) given twice")));
            }
        }
        for (i, j) in nerve.ordered_pairs() {
            if !map.contains_key(&(i, j)) {
                return Err(Error::Atlas(format!(
                    "missing transition ({}, {})",
                    nerve.charts[i], nerve.charts[j]
                )));
            }
        }
        let partition = match partition {
            None => None,
            Some((explicit, complement)) => {
                let complement = idx(&complement)?;
                let mut ex = BTreeMap::new();
                for (name, rho) in explicit {
                    let i = idx(&name)?;
                    if i == complement || ex.contains_key(&i) {
                        return Err(Error::Atlas(format!("partition function of `{name}` given twice")));
                    }
                    if rho.max_coord().is_some_and(|c| c >= sig.p()) {
                        return Err(Error::Atlas(format!("partition function of `{name}` uses unknown coordinates")));
                    }
                    ex.insert(i, rho);
                }
                if ex.len() + 1 != nerve.charts.len() {
                    return Err(Error::Atlas("the partition must cover every chart".into()));
                }
                Some(Partition {
                    explicit: ex,
                    complement,
                })
            }
        };
        Ok(Atlas {
            sig,
            order,
            charts: nerve.charts,
            pairs: nerve.pairs,
            triples: nerve.triples,
            transitions: map,
            partition,
        })
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn charts(&self) -> &[String] {
        &self.charts
    }

    pub fn nerve(&self) -> Nerve {
        Nerve {
            charts: self.charts.clone(),
            pairs: self.pairs.clone(),
            triples: self.triples.clone(),
        }
    }

    pub fn pairs(&self) -> &BTreeSet<(usize, usize)> {
        &self.pairs
    }

    pub fn triples(&self) -> &BTreeSet<[usize; 3]> {
        &self.triples
    }

    pub fn partition(&self) -> Option<&Partition> {
        self.partition.as_ref()
    }

    pub fn transitions(&self) -> &BTreeMap<(usize, usize), Morphism> {
        &self.transitions
    }

    pub fn overlaps(&self, u: usize, v: usize) -> bool {
        u == v || self.pairs.contains(&(u.min(v), u.max(v)))
    }

    /// `T_UV`; the identity when `u == v`.
    pub fn transition(&self, u: usize, v: usize) -> Result<Morphism> {
        if u == v {
            return Ok(Morphism::identity(&self.sig, self.order));
        }
        self.transitions.get(&(u, v)).cloned().ok_or_else(|| {
            Error::Atlas(format!("no transition ({}, {})", self.charts[u], self.charts[v]))
        })
    }

    /// Expresses a series in chart-`v` coordinates in chart-`u` coordinates.
    pub fn transport(&self, f: &GSeries, v: usize, u: usize) -> Result<GSeries> {
        if u == v {
            return Ok(f.clone());
        }
        crate::morphism::pullback(&self.transition(v, u)?, f)
    }

    /// Partition function of chart `w` in the base coordinates of chart `u`.
    pub fn partition_in(&self, w: usize, u: usize) -> Result<CoeffExpr> {
        let p = self
            .partition
            .as_ref()
            .ok_or_else(|| Error::MissingPartition("no partition block".into()))?;
        if w == p.complement {
            let mut rho = CoeffExpr::one();
            for &o in p.explicit.keys() {
                rho = &rho - &self.partition_in(o, u)?;
            }
            return Ok(rho);
        }
        let rho = &p.explicit[&w];
        if w == u {
            return Ok(rho.clone());
        }
        if !self.overlaps(w, u) {
            return Err(Error::MissingPartition(format!(
                "partition function of `{}` is needed on `{}` but the charts have no declared overlap",
                self.charts[w], self.charts[u]
            )));
        }
        Ok(rho.substitute(&self.transition(w, u)?.base_map()))
    }
}

/// Checks the gluing conditions modulo `J^{K+1}`.
pub fn validate_atlas(atlas: &Atlas) -> Report {
    validate_atlas_with(atlas, Execution::default())
}

pub fn validate_atlas_with(atlas: &Atlas, exec: Execution) -> Report {
    let charts = &atlas.charts;
    let mut report = Report::new();
    let pairs: Vec<(usize, usize)> = atlas.nerve().ordered_pairs();
    let pair_reports = exec.map(&pairs, |&(u, v)| {
        let mut r = Report::new();
        let outcome = atlas
            .transition(u, v)
            .and_then(|tuv| Ok(compose(&tuv, &atlas.transition(v, u)?)?));
        match outcome {
            Ok(m) => {
                let s = scope(charts, &[u, v]);
                match identity_residual(&m) {
                    None => r.pass("inverse", s),
                    Some((var, res)) => r.fail("inverse", format!("{s}:{var}"), Some(res.to_string())),
                }
            }
            Err(e) => r.fail("inverse", scope(charts, &[u, v]), Some(format!("error: {e}"))),
        }
        r
    });
    let triples = atlas.nerve().ordered_triples();
    let triple_reports = exec.map(&triples, |&[u, v, w]| {
        let mut r = Report::new();
        let s = scope(charts, &[u, v, w]);
        let outcome = (|| -> Result<Option<(String, GSeries)>> {
            let lhs = compose(&atlas.transition(u, v)?, &atlas.transition(v, w)?)?;
            Ok(morphism_residual(&lhs, &atlas.transition(u, w)?))
        })();
        match outcome {
            Ok(None) => r.pass("cocycle", s),
            Ok(Some((var, res))) => r.fail("cocycle", format!("{s}:{var}"), Some(res.to_string())),
            Err(e) => r.fail("cocycle", s, Some(format!("error: {e}"))),
        }
        r
    });
    for r in pair_reports.into_iter().chain(triple_reports) {
        report.extend(r);
    }
    if report.entries.is_empty() {
        report.pass("charts", scope(charts, &(0..charts.len()).collect::<Vec<_>>()));
    }
    report
}

/// Transition data of a Z2^n \ {0}-graded vector bundle: for every ordered
/// pair `(U, V)` the base map (chart-`U` base coordinates in terms of
/// chart-`V` ones) and one matrix per nonzero degree block, whose entry
/// `(a, b)` is the coefficient of `xi_V^b` in `xi_U^a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedBundleData {
    pub sig: Arc<Signature>,
    pub nerve: Nerve,
    pub base: BTreeMap<(usize, usize), Vec<CoeffExpr>>,
    pub blocks: BTreeMap<(usize, usize), Vec<CoeffMatrix>>,
}

impl GradedBundleData {
    pub fn new(
        sig: Arc<Signature>,
        nerve: Nerve,
        base: BTreeMap<(usize, usize), Vec<CoeffExpr>>,
        blocks: BTreeMap<(usize, usize), Vec<CoeffMatrix>>,
    ) -> Result<GradedBundleData> {
        let shapes: Vec<usize> = sig.degree_blocks().iter().map(|(_, ix)| ix.len()).collect();
        for pair in nerve.ordered_pairs() {
            let name = || scope(&nerve.charts, &[pair.0, pair.1]);
            let b = base
                .get(&pair)
                .ok_or_else(|| Error::Atlas(format!("missing base map for ({})", name())))?;
            if b.len() != sig.p() {
                return Err(Error::Atlas(format!("base map for ({}) has the wrong length", name())));
            }
            let m = blocks
                .get(&pair)
                .ok_or_else(|| Error::Atlas(format!("missing blocks for ({})", name())))?;
            if m.len() != shapes.len() || m.iter().zip(&shapes).any(|(m, &q)| m.rows() != q || m.cols() != q) {
                return Err(Error::Atlas(format!("blocks for ({}) have the wrong shape", name())));
            }
        }
        if base.keys().chain(blocks.keys()).any(|&(u, v)| u == v || !nerve.overlaps(u, v)) {
            return Err(Error::Atlas("bundle data on an undeclared pair".into()));
        }
        Ok(GradedBundleData { sig, nerve, base, blocks })
    }

    fn base_map(&self, u: usize, v: usize) -> Vec<CoeffExpr> {
        if u == v {
            (0..self.sig.p()).map(CoeffExpr::coord).collect()
        } else {
            self.base[&(u, v)].clone()
        }
    }

    fn block(&self, u: usize, v: usize, k: usize) -> CoeffMatrix {
        if u == v {
            CoeffMatrix::identity(self.sig.degree_blocks()[k].1.len())
        } else {
            self.blocks[&(u, v)][k].clone()
        }
    }

    /// Matrix cocycle conditions: `g_UV(a_VW) g_VW = g_UW` and the base
    /// maps compose, on every ordered pair (with `W = U`) and declared triple.
    pub fn validate(&self) -> Report {
        let charts = &self.nerve.charts;
        let mut report = Report::new();
        let nblocks = self.sig.degree_blocks().len();
        let mut cases: Vec<[usize; 3]> = self.nerve.ordered_pairs().into_iter().map(|(u, v)| [u, v, u]).collect();
        cases.extend(self.nerve.ordered_triples());
        for [u, v, w] in cases {
            let s = if u == w { scope(charts, &[u, v]) } else { scope(charts, &[u, v, w]) };
            let avw = self.base_map(v, w);
            let composed: Vec<CoeffExpr> = self.base_map(u, v).iter().map(|e| e.substitute(&avw)).collect();
            let name = if u == w { "bundle-inverse" } else { "bundle-cocycle" };
            if composed != self.base_map(u, w) {
                report.fail(name, format!("{s}:base"), None);
                continue;
            }
            let mut ok = true;
            for k in 0..nblocks {
                let lhs = self.block(u, v, k).substitute(&avw).mul(&self.block(v, w, k));
                if lhs != self.block(u, w, k) {
                    report.fail(name, format!("{s}:{}", self.sig.degree_blocks()[k].0), None);
                    ok = false;
                }
            }
            if ok {
                report.pass(name, s);
            }
        }
        report
    }
}

/// Reduces every transition modulo `J^2`.
pub fn extract_bundle(atlas: &Atlas) -> GradedBundleData {
    let blocks = atlas.sig.degree_blocks();
    let mut base = BTreeMap::new();
    let mut mats = BTreeMap::new();
    for (&pair, m) in &atlas.transitions {
        base.insert(pair, m.base_map());
        mats.insert(pair, blocks.iter().map(|(d, _)| m.linear_block(*d)).collect());
    }
    GradedBundleData {
        sig: atlas.sig.clone(),
        nerve: atlas.nerve(),
        base,
        blocks: mats,
    }
}

/// The split model `A(Pi E)`: transitions act by the base maps on degree-0
/// coordinates and linearly, block by block, on the formal variables.
pub fn build_split_model(bundle: &GradedBundleData, order: usize) -> Result<Atlas> {
    let sig = &bundle.sig;
    let report = bundle.validate();
    if let Some(bad) = report.failures().next() {
        return Err(Error::Singular {
            block: format!("{} on {}", bad.name, bad.scope),
        });
    }
    let blocks = sig.degree_blocks();
    let mut transitions = Vec::new();
    for (u, v) in bundle.nerve.ordered_pairs() {
        let mut images: Vec<GSeries> = bundle.base[&(u, v)]
            .iter()
            .map(|a| GSeries::constant(sig, order, a.clone()))
            .collect();
        let mut formal = vec![GSeries::zero(sig, order); sig.q()];
        for (k, (_, ix)) in blocks.iter().enumerate() {
            let g = &bundle.blocks[&(u, v)][k];
            for (r, &a) in ix.iter().enumerate() {
                formal[a] = GSeries::from_terms(
                    sig,
                    order,
                    ix.iter().enumerate().map(|(c, &b)| (Monomial::var(sig.q(), b), g.get(r, c).clone())),
                );
            }
        }
        images.extend(formal);
        let names = (0..sig.var_count()).map(|i| sig.var_name(sig.var_ref(i)).to_string());
        let m = Morphism::new(sig.clone(), sig.clone(), names.zip(images).collect(), order)?;
        transitions.push(((bundle.nerve.charts[u].clone(), bundle.nerve.charts[v].clone()), m));
    }
    Atlas::new(sig.clone(), order, bundle.nerve.clone(), transitions, None)
}

impl Atlas {
    /// Copy of the atlas with another partition of unity.
    pub fn with_partition(mut self, partition: Option<Partition>) -> Atlas {
        self.partition = partition;
        self
    }

    /// Whether every transition is linear in the formal variables with
    /// block-diagonal linear part, i.e. of split-model normal form.
    pub fn is_split_form(&self) -> bool {
        let p = self.sig.p();
        self.transitions.values().all(|m| {
            m.images().iter().enumerate().all(|(i, img)| {
                img.terms().all(|(mono, _)| {
                    if i < p {
                        mono.is_one()
                    } else {
                        mono.total() == 1 && mono.degree(&self.sig) == self.sig.var_degree(VarRef::Formal(i - p))
                    }
                })
            })
        })
    }
}
