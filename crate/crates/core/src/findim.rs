//! Finite-dimensional algebras given by structure constants, and their
//! Z2^n-commutative degree assignments.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use num_traits::{One, Zero};

use crate::coeff::Rational;
use crate::degree::{sign_factor, Degree, MAX_N};
use crate::error::{Error, Result};
use crate::par::Execution;

/// A basis vector combination `sum c_k e_k`, sorted by `k`, no zero entries.
pub type Element = Vec<(usize, Rational)>;

pub const MAX_DIMENSION: usize = 64;

/// Default node budget of [`search_degree_assignments`]; overridden by the
/// `ZSUPER_SEARCH_BUDGET` environment variable.
pub const DEFAULT_SEARCH_BUDGET: u64 = 50_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinDimAlgebra {
    labels: Vec<String>,
    unit: usize,
    table: Vec<Vec<Element>>,
}

fn normalize(map: BTreeMap<usize, Rational>) -> Element {
    map.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

impl FinDimAlgebra {
    /// Builds an algebra from `(i, j, k, c)` meaning `e_i e_j` has
    /// coefficient `c` on `e_k`. Repeated quadruples add up.
    pub fn new(
        labels: Vec<String>,
        unit: usize,
        constants: impl IntoIterator<Item = (usize, usize, usize, Rational)>,
    ) -> Result<FinDimAlgebra> {
        let dim = labels.len();
        if dim == 0 || dim > MAX_DIMENSION {
            return Err(Error::Algebra(format!(
                "dimension must be between 1 and {MAX_DIMENSION}, got {dim}"
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::Algebra(format!("basis label `{l}` repeated")));
            }
        }
        if unit >= dim {
            return Err(Error::Algebra("unit index out of range".into()));
        }
        let mut raw = vec![vec![BTreeMap::<usize, Rational>::new(); dim]; dim];
        for (i, j, k, c) in constants {
            if i >= dim || j >= dim || k >= dim {
                return Err(Error::Algebra(format!("structure constant ({i},{j},{k}) out of range")));
            }
            *raw[i][j].entry(k).or_insert_with(Rational::zero) += c;
        }
        let table = raw
            .into_iter()
            .map(|row| row.into_iter().map(normalize).collect())
            .collect();
        let a = FinDimAlgebra { labels, unit, table };
        a.validate()?;
        Ok(a)
    }

    fn validate(&self) -> Result<()> {
        let dim = self.dim();
        for i in 0..dim {
            let e = vec![(i, Rational::one())];
            if self.table[self.unit][i] != e || self.table[i][self.unit] != e {
                return Err(Error::Algebra(format!(
                    "`{}` is not a two-sided unit for `{}`",
                    self.labels[self.unit], self.labels[i]
                )));
            }
        }
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let left = self.mul(&self.table[i][j], &[(k, Rational::one())]);
                    let right = self.mul(&[(i, Rational::one())], &self.table[j][k]);
                    if left != right {
                        return Err(Error::Algebra(format!(
                            "not associative: ({a}{b}){c} != {a}({b}{c})",
                            a = self.labels[i],
                            b = self.labels[j],
                            c = self.labels[k]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn unit(&self) -> usize {
        self.unit
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn product(&self, i: usize, j: usize) -> &Element {
        &self.table[i][j]
    }

    pub fn mul(&self, a: &[(usize, Rational)], b: &[(usize, Rational)]) -> Element {
        let mut acc = BTreeMap::new();
        for (i, ca) in a {
            for (j, cb) in b {
                for (k, c) in &self.table[*i][*j] {
                    *acc.entry(*k).or_insert_with(Rational::zero) += ca * cb * c;
                }
            }
        }
        normalize(acc)
    }

    /// Nonzero structure constants in `(i, j, k)` order.
    pub fn constants(&self) -> Vec<(usize, usize, usize, Rational)> {
        let mut out = Vec::new();
        for (i, row) in self.table.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                for (k, c) in e {
                    out.push((i, j, *k, c.clone()));
                }
            }
        }
        out
    }

    pub fn format_element(&self, e: &[(usize, Rational)]) -> String {
        if e.is_empty() {
            return "0".into();
        }
        let mut s = String::new();
        for (n, (k, c)) in e.iter().enumerate() {
            let neg = c < &Rational::zero();
            let mag = if neg { -c.clone() } else { c.clone() };
            match (n, neg) {
                (0, true) => s.push('-'),
                (0, false) => {}
                (_, true) => s.push_str(" - "),
                (_, false) => s.push_str(" + "),
            }
            if !mag.is_one() {
                s.push_str(&format!("{mag}*"));
            }
            s.push_str(&self.labels[*k]);
        }
        s
    }
}

/// `1, i, j, k` with `i^2 = j^2 = k^2 = ijk = -1`.
pub fn quaternions() -> FinDimAlgebra {
    let labels = ["1", "i", "j", "k"].map(String::from).to_vec();
    // Products of the imaginary units: e_a e_b = s e_c.
    let imag = [
        (1, 1, 0, -1),
        (2, 2, 0, -1),
        (3, 3, 0, -1),
        (1, 2, 3, 1),
        (2, 1, 3, -1),
        (2, 3, 1, 1),
        (3, 2, 1, -1),
        (3, 1, 2, 1),
        (1, 3, 2, -1),
    ];
    let mut constants: Vec<(usize, usize, usize, Rational)> = Vec::new();
    for a in 0..4 {
        constants.push((0, a, a, Rational::one()));
        if a != 0 {
            constants.push((a, 0, a, Rational::one()));
        }
    }
    for (i, j, k, c) in imag {
        constants.push((i, j, k, Rational::from_integer(c.into())));
    }
    FinDimAlgebra::new(labels, 0, constants).expect("quaternion table is valid")
}

/// `R[t]/(t^2)`.
pub fn dual_numbers() -> FinDimAlgebra {
    let one = Rational::one();
    FinDimAlgebra::new(
        vec!["1".into(), "t".into()],
        0,
        vec![(0, 0, 0, one.clone()), (0, 1, 1, one.clone()), (1, 0, 1, one)],
    )
    .expect("dual number table is valid")
}

/// Clifford algebra `Cl_{p,q}(R)` with `e_i^2 = +1` for `i <= p` and `-1`
/// otherwise. The basis is ordered by grade, then lexicographically, and
/// labelled `1, e1, e2, e12, ...`.
pub fn clifford(p: usize, q: usize) -> Result<FinDimAlgebra> {
    let m = p + q;
    if m > 4 {
        return Err(Error::Algebra(format!("Cl_{{{p},{q}}} exceeds the built-in limit p + q <= 4")));
    }
    let mut blades: Vec<u32> = (0..(1u32 << m)).collect();
    blades.sort_by_key(|b| {
        let idx: Vec<u32> = (0..m as u32).filter(|i| b & (1 << i) != 0).collect();
        (idx.len(), idx)
    });
    let pos = |b: u32| blades.iter().position(|&x| x == b).expect("blade");
    let labels = blades
        .iter()
        .map(|&b| {
            if b == 0 {
                "1".to_string()
            } else {
                let digits: String = (0..m).filter(|i| b & (1 << i) != 0).map(|i| (i + 1).to_string()).collect();
                format!("e{digits}")
            }
        })
        .collect();
    let mut constants = Vec::new();
    for &a in &blades {
        for &b in &blades {
            let mut swaps = 0u32;
            for j in 0..m {
                if b & (1 << j) != 0 {
                    swaps += (a >> (j + 1)).count_ones();
                }
            }
            let mut negative = swaps % 2 == 1;
            for i in 0..m {
                if a & b & (1 << i) != 0 && i >= p {
                    negative = !negative;
                }
            }
            let c = if negative { -Rational::one() } else { Rational::one() };
            constants.push((pos(a), pos(b), pos(a ^ b), c));
        }
    }
    FinDimAlgebra::new(labels, 0, constants)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DegreeAssignment(pub Vec<Degree>);

impl DegreeAssignment {
    pub fn degree(&self, i: usize) -> Degree {
        self.0[i]
    }

    /// Builds an assignment from `(label, degree)` pairs covering the basis.
    pub fn from_labeled(a: &FinDimAlgebra, pairs: &[(String, Degree)]) -> Result<DegreeAssignment> {
        let mut slots: Vec<Option<Degree>> = vec![None; a.dim()];
        let mut n = None;
        for (label, d) in pairs {
            let i = a
                .index(label)
                .ok_or_else(|| Error::Algebra(format!("unknown basis label `{label}`")))?;
            if *n.get_or_insert(d.n()) != d.n() {
                return Err(Error::Dimension {
                    expected: n.unwrap_or(0),
                    found: d.n(),
                });
            }
            if slots[i].replace(*d).is_some() {
                return Err(Error::Algebra(format!("degree of `{label}` given twice")));
            }
        }
        let degrees = slots
            .into_iter()
            .enumerate()
            .map(|(i, d)| d.ok_or_else(|| Error::Algebra(format!("no degree for `{}`", a.labels[i]))))
            .collect::<Result<Vec<_>>>()?;
        if !degrees[a.unit].is_zero() {
            return Err(Error::Algebra("the unit must have degree zero".into()));
        }
        Ok(DegreeAssignment(degrees))
    }

    pub fn display<'a>(&'a self, a: &'a FinDimAlgebra) -> AssignmentDisplay<'a> {
        AssignmentDisplay { d: self, a }
    }
}

pub struct AssignmentDisplay<'a> {
    d: &'a DegreeAssignment,
    a: &'a FinDimAlgebra,
}

impl fmt::Display for AssignmentDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (l, d) in self.a.labels.iter().zip(&self.d.0) {
            writeln!(f, "{l} {d}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignViolation {
    pub left: usize,
    pub right: usize,
    pub forward: Element,
    pub backward: Element,
    /// `sign_factor(d(left), d(right))` as `+1` or `-1`.
    pub sign: i32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CommutationReport {
    pub violations: Vec<SignViolation>,
}

impl CommutationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn negate(e: &Element) -> Element {
    e.iter().map(|(k, c)| (*k, -c.clone())).collect()
}

/// Checks `e_i e_j = (-1)^<d(i),d(j)> e_j e_i` for all basis pairs, after
/// checking that every product is homogeneous of degree `d(i) + d(j)`.
pub fn check_graded_commutative(a: &FinDimAlgebra, d: &DegreeAssignment) -> Result<CommutationReport> {
    let dim = a.dim();
    if d.0.len() != dim {
        return Err(Error::Algebra(format!("assignment has {} degrees for dimension {dim}", d.0.len())));
    }
    if !d.0[a.unit].is_zero() {
        return Err(Error::Algebra("the unit must have degree zero".into()));
    }
    for i in 0..dim {
        for j in 0..dim {
            let expected = d.0[i].try_add(d.0[j])?;
            for (k, _) in a.product(i, j) {
                if d.0[*k] != expected {
                    return Err(Error::Grading {
                        left: a.labels[i].clone(),
                        right: a.labels[j].clone(),
                        component: a.labels[*k].clone(),
                        expected: expected.to_string(),
                        found: d.0[*k].to_string(),
                    });
                }
            }
        }
    }
    let mut report = CommutationReport::default();
    for i in 0..dim {
        for j in i..dim {
            let sign = sign_factor(d.0[i], d.0[j])?;
            let forward = a.product(i, j);
            let backward = a.product(j, i);
            let expected = if sign.is_minus() { negate(backward) } else { backward.clone() };
            if *forward != expected {
                report.violations.push(SignViolation {
                    left: i,
                    right: j,
                    forward: forward.clone(),
                    backward: backward.clone(),
                    sign: sign.value(),
                });
            }
        }
    }
    Ok(report)
}

pub fn search_budget() -> u64 {
    std::env::var("ZSUPER_SEARCH_BUDGET")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_SEARCH_BUDGET)
}

struct Search<'a> {
    a: &'a FinDimAlgebra,
    n: usize,
    budget: u64,
    nodes: AtomicU64,
    exhausted: AtomicBool,
}

impl Search<'_> {
    /// Forces degrees of product components and checks signs; false on
    /// contradiction.
    fn propagate(&self, state: &mut [Option<Degree>]) -> bool {
        let dim = self.a.dim();
        loop {
            let mut changed = false;
            for i in 0..dim {
                let Some(di) = state[i] else { continue };
                for j in 0..dim {
                    let Some(dj) = state[j] else { continue };
                    let target = di + dj;
                    for (k, _) in self.a.product(i, j) {
                        match state[*k] {
                            None => {
                                state[*k] = Some(target);
                                changed = true;
                            }
                            Some(dk) if dk != target => return false,
                            _ => {}
                        }
                    }
                    if j > i {
                        let backward = self.a.product(j, i);
                        let expected = if di.pairs_odd(dj) { negate(backward) } else { backward.clone() };
                        if *self.a.product(i, j) != expected {
                            return false;
                        }
                    }
                }
            }
            if !changed {
                return true;
            }
        }
    }

    fn tick(&self) -> bool {
        let used = self.nodes.fetch_add(1, Ordering::Relaxed) + 1;
        if used > self.budget {
            self.exhausted.store(true, Ordering::Relaxed);
            return false;
        }
        !self.exhausted.load(Ordering::Relaxed)
    }

    fn children(&self, state: &[Option<Degree>]) -> Vec<Vec<Option<Degree>>> {
        let Some(free) = state.iter().position(Option::is_none) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for bits in 0..(1u32 << self.n) {
            if !self.tick() {
                break;
            }
            let mut next = state.to_vec();
            next[free] = Some(Degree::from_packed(self.n, bits));
            if self.propagate(&mut next) {
                out.push(next);
            }
        }
        out
    }

    fn dfs(&self, state: Vec<Option<Degree>>, out: &mut Vec<DegreeAssignment>) {
        if state.iter().all(Option::is_some) {
            out.push(DegreeAssignment(state.into_iter().flatten().collect()));
            return;
        }
        for child in self.children(&state) {
            self.dfs(child, out);
        }
    }
}

/// All assignments with the unit in degree zero under which `A` is
/// Z2^n-commutative, sorted.
pub fn search_degree_assignments(a: &FinDimAlgebra, n: usize) -> Result<Vec<DegreeAssignment>> {
    search_degree_assignments_with(a, n, search_budget(), Execution::default())
}

pub fn search_degree_assignments_with(
    a: &FinDimAlgebra,
    n: usize,
    budget: u64,
    exec: Execution,
) -> Result<Vec<DegreeAssignment>> {
    if n == 0 || n > MAX_N {
        return Err(Error::Dimension { expected: MAX_N, found: n });
    }
    let search = Search {
        a,
        n,
        budget,
        nodes: AtomicU64::new(0),
        exhausted: AtomicBool::new(false),
    };
    let mut root = vec![None; a.dim()];
    root[a.unit] = Some(Degree::zero(n));
    let mut found = Vec::new();
    if search.propagate(&mut root) {
        let first = search.children(&root);
        let parts = exec.map(&first, |child| {
            let mut out = Vec::new();
            search.dfs(child.clone(), &mut out);
            out
        });
        if root.iter().all(Option::is_some) {
            found.push(DegreeAssignment(root.into_iter().flatten().collect()));
        }
        found.extend(parts.into_iter().flatten());
    }
    if search.exhausted.load(Ordering::Relaxed) {
        return Err(Error::Budget { bound: budget });
    }
    found.sort();
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assign(a: &FinDimAlgebra, pairs: &[(&str, &str)]) -> DegreeAssignment {
        let pairs: Vec<(String, Degree)> = pairs.iter().map(|(l, d)| (l.to_string(), d.parse().unwrap())).collect();
        DegreeAssignment::from_labeled(a, &pairs).unwrap()
    }

    #[test]
    fn quaternion_grading_commutes() {
        let h = quaternions();
        let d = assign(&h, &[("1", "000"), ("i", "011"), ("j", "101"), ("k", "110")]);
        assert!(check_graded_commutative(&h, &d).unwrap().passed());
    }

    #[test]
    fn quaternion_odd_grading_fails_on_ij() {
        let h = quaternions();
        let d = assign(&h, &[("1", "000"), ("i", "001"), ("j", "010"), ("k", "011")]);
        let r = check_graded_commutative(&h, &d).unwrap();
        let (i, j) = (h.index("i").unwrap(), h.index("j").unwrap());
        let v = r.violations.iter().find(|v| (v.left, v.right) == (i, j)).unwrap();
        assert_eq!(h.format_element(&v.forward), "k");
        assert_eq!(h.format_element(&v.backward), "-k");
        assert_eq!(v.sign, 1);
    }

    #[test]
    fn inhomogeneous_products_are_grading_errors() {
        let h = quaternions();
        let d = assign(&h, &[("1", "000"), ("i", "001"), ("j", "010"), ("k", "100")]);
        assert!(matches!(check_graded_commutative(&h, &d), Err(Error::Grading { .. })));
    }

    #[test]
    fn dual_numbers_even() {
        let a = dual_numbers();
        let d = assign(&a, &[("1", "0"), ("t", "0")]);
        assert!(check_graded_commutative(&a, &d).unwrap().passed());
    }

    #[test]
    fn search_results() {
        let h = quaternions();
        assert!(search_degree_assignments(&h, 1).unwrap().is_empty());
        let found = search_degree_assignments(&h, 3).unwrap();
        let known = assign(&h, &[("1", "000"), ("i", "011"), ("j", "101"), ("k", "110")]);
        assert!(found.contains(&known));
        for d in &found {
            assert!(check_graded_commutative(&h, d).unwrap().passed());
        }
        let seq = search_degree_assignments_with(&h, 3, DEFAULT_SEARCH_BUDGET, Execution::Sequential).unwrap();
        assert_eq!(seq, found);
    }

    #[test]
    fn budget_is_enforced() {
        let c = clifford(2, 1).unwrap();
        assert_eq!(
            search_degree_assignments_with(&c, 4, 10, Execution::Sequential),
            Err(Error::Budget { bound: 10 })
        );
    }

    #[test]
    fn clifford_tables() {
        let c = clifford(1, 1).unwrap();
        assert_eq!(c.labels(), ["1", "e1", "e2", "e12"]);
        let e1 = c.index("e1").unwrap();
        let e2 = c.index("e2").unwrap();
        assert_eq!(c.format_element(c.product(e1, e1)), "1");
        assert_eq!(c.format_element(c.product(e2, e2)), "-1");
        assert_eq!(c.format_element(c.product(e2, e1)), "-e12");
        assert!(clifford(3, 2).is_err());
        assert_eq!(clifford(0, 2).unwrap().dim(), 4);
    }

    #[test]
    fn rejects_bad_tables() {
        let one = Rational::one();
        let labels = vec!["1".to_string(), "a".to_string()];
        assert!(FinDimAlgebra::new(labels.clone(), 0, vec![(0, 0, 0, one.clone())]).is_err());
        assert!(FinDimAlgebra::new(vec!["1".into(), "1".into()], 0, vec![]).is_err());
    }
}
