//! Plain-text file formats. Every format is line oriented, ignores blank
//! lines and `#` comments, and has a canonical printed form that parses
//! back to an equal value.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::atlas::{Atlas, GradedBundleData, Nerve, Partition};
use crate::coeff::{CoeffExpr, Rational};
use crate::degree::{Degree, Signature};
use crate::error::{Error, Result};
use crate::findim::{DegreeAssignment, FinDimAlgebra};
use crate::matrix::CoeffMatrix;
use crate::morphism::Morphism;
use crate::parse::{normalize_expr, parse_expr, Parser};
use crate::report::{CheckEntry, Report};
use crate::series::GSeries;
use crate::splitting::{EmbeddingFamily, SplittingResult};

/// A significant line: 1-based number and text without comment.
#[derive(Clone, Copy, Debug)]
struct Line<'a> {
    number: usize,
    text: &'a str,
}

impl<'a> Line<'a> {
    fn err<T>(&self, column: usize, message: impl Into<String>) -> Result<T> {
        Err(Error::parse(self.number, column, message))
    }

    /// The first word and the rest, with the rest's 0-based column.
    fn split(&self) -> (&'a str, &'a str, usize) {
        let text = self.text;
        let start = text.len() - text.trim_start().len();
        let body = &text[start..];
        match body.find(char::is_whitespace) {
            None => (body, "", text.len()),
            Some(i) => {
                let rest = &body[i..];
                let skip = rest.len() - rest.trim_start().len();
                (&body[..i], rest.trim_start(), start + i + skip)
            }
        }
    }

    fn words(&self) -> Vec<(&'a str, usize)> {
        let mut out = Vec::new();
        let mut start = None;
        for (i, c) in self.text.char_indices() {
            match (c.is_whitespace(), start) {
                (false, None) => start = Some(i),
                (true, Some(s)) => {
                    out.push((&self.text[s..i], s));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push((&self.text[s..], s));
        }
        out
    }
}

struct Lines<'a> {
    lines: Vec<Line<'a>>,
    pos: usize,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Lines<'a> {
        let mut lines = Vec::new();
        let mut last = 1;
        for (i, raw) in text.lines().enumerate() {
            last = i + 1;
            let text = raw.split('#').next().unwrap_or("").trim_end();
            if !text.trim().is_empty() {
                lines.push(Line { number: i + 1, text });
            }
        }
        Lines { lines, pos: 0, last }
    }

    fn peek(&self) -> Option<Line<'a>> {
        self.lines.get(self.pos).copied()
    }

    fn next(&mut self) -> Option<Line<'a>> {
        let l = self.peek();
        if l.is_some() {
            self.pos += 1;
        }
        l
    }

    fn peek_keyword(&self) -> Option<&'a str> {
        self.peek().map(|l| l.split().0)
    }

    fn expect(&mut self, keyword: &str) -> Result<(Line<'a>, &'a str, usize)> {
        match self.next() {
            Some(l) => {
                let (k, rest, col) = l.split();
                if k == keyword {
                    Ok((l, rest, col))
                } else {
                    l.err(1, format!("expected `{keyword}`, found `{k}`"))
                }
            }
            None => Err(Error::parse(self.last, 1, format!("expected `{keyword}`, found end of file"))),
        }
    }
}

fn parse_usize(line: &Line, text: &str, column: usize) -> Result<usize> {
    text.trim()
        .parse()
        .or_else(|_| line.err(column + 1, format!("expected a non-negative integer, found `{text}`")))
}

/// `name:bits name:bits ...`
pub fn parse_signature(text: &str) -> Result<Signature> {
    let line = Line { number: 1, text };
    signature_words(&line, 0)
}

fn signature_words(line: &Line, from: usize) -> Result<Signature> {
    let mut vars = Vec::new();
    for (w, col) in line.words().into_iter().filter(|(_, c)| *c >= from) {
        let Some((name, bits)) = w.split_once(':') else {
            return line.err(col + 1, format!("expected `name:degree`, found `{w}`"));
        };
        if !crate::degree::is_identifier(name) {
            return line.err(col + 1, format!("`{name}` is not a valid variable name"));
        }
        let degree: Degree = bits
            .parse()
            .or_else(|e: Error| line.err(col + name.len() + 2, e.to_string()))?;
        vars.push((name.to_string(), degree));
    }
    if vars.is_empty() {
        return line.err(from + 1, "empty signature");
    }
    Signature::from_vars(vars).or_else(|e| line.err(from + 1, e.to_string()))
}

fn sig_line(lines: &mut Lines, keyword: &str) -> Result<Arc<Signature>> {
    let (l, _, col) = lines.expect(keyword)?;
    Ok(Arc::new(signature_words(&l, col)?))
}

fn order_line(lines: &mut Lines) -> Result<usize> {
    let (l, rest, col) = lines.expect("order")?;
    parse_usize(&l, rest, col)
}

/// A signature file: a single `sig ...` line.
pub fn parse_signature_file(text: &str) -> Result<Arc<Signature>> {
    let mut lines = Lines::new(text);
    let sig = sig_line(&mut lines, "sig")?;
    trailing(&mut lines)?;
    Ok(sig)
}

pub fn print_signature_file(sig: &Signature) -> String {
    format!("sig {sig}\n")
}

fn trailing(lines: &mut Lines) -> Result<()> {
    match lines.next() {
        None => Ok(()),
        Some(l) => l.err(1, "unexpected trailing content"),
    }
}

fn series_at(l: &Line, text: &str, column: usize, sig: &Arc<Signature>, order: usize) -> Result<GSeries> {
    GSeries::from_tree(&parse_expr(text, l.number, column)?, sig, order)
}

/// `sig`, `order`, then expression lines that are summed.
pub fn parse_series_file(text: &str) -> Result<GSeries> {
    let mut lines = Lines::new(text);
    let sig = sig_line(&mut lines, "sig")?;
    let order = order_line(&mut lines)?;
    let mut acc = GSeries::zero(&sig, order);
    while let Some(l) = lines.next() {
        acc = acc.try_add(&series_at(&l, l.text, 0, &sig, order)?)?;
    }
    Ok(acc)
}

pub fn print_series_file(s: &GSeries) -> String {
    format!("sig {}\norder {}\n{}\n", s.signature(), s.order(), s)
}

/// `name = expr` with the name's column.
fn assignment<'a>(l: &Line<'a>) -> Result<(&'a str, &'a str, usize)> {
    let Some(eq) = l.text.find('=') else {
        return l.err(1, "expected `name = expression`");
    };
    let name = l.text[..eq].trim();
    let rest = &l.text[eq + 1..];
    Ok((name, rest, eq + 1))
}

fn parse_images<'a>(
    lines: &mut Lines<'a>,
    source: &Arc<Signature>,
    target: &Arc<Signature>,
    order: usize,
    stop: Option<&str>,
) -> Result<(Vec<(String, GSeries)>, Option<Line<'a>>)> {
    let mut images = Vec::new();
    let mut first = None;
    loop {
        if let (Some(stop), Some(k)) = (stop, lines.peek_keyword()) {
            if k == stop {
                break;
            }
        }
        let Some(l) = lines.next() else { break };
        first.get_or_insert(l);
        let (name, rest, col) = assignment(&l)?;
        if target.lookup(name).is_none() {
            return l.err(1, format!("`{name}` is not a target variable"));
        }
        images.push((name.to_string(), series_at(&l, rest, col, source, order)?));
    }
    Ok((images, first))
}

fn morphism_from(
    images: Vec<(String, GSeries)>,
    first: Option<Line>,
    source: Arc<Signature>,
    target: Arc<Signature>,
    order: usize,
    fallback_line: usize,
) -> Result<Morphism> {
    Morphism::new(source, target, images, order).map_err(|e| match e {
        Error::Parse { .. } => e,
        other => Error::parse(first.map_or(fallback_line, |l| l.number), 1, other.to_string()),
    })
}

/// `order K`, `source ...`, `target ...` (or a single `sig ...` for an
/// endomorphism), then one `var = series` line per target variable.
pub fn parse_morphism_file(text: &str) -> Result<Morphism> {
    let mut lines = Lines::new(text);
    let order = order_line(&mut lines)?;
    let (source, target) = if lines.peek_keyword() == Some("sig") {
        let s = sig_line(&mut lines, "sig")?;
        (s.clone(), s)
    } else {
        (sig_line(&mut lines, "source")?, sig_line(&mut lines, "target")?)
    };
    let (images, first) = parse_images(&mut lines, &source, &target, order, None)?;
    morphism_from(images, first, source, target, order, lines.last)
}

fn print_images(out: &mut String, m: &Morphism, prefix: &str) {
    let t = m.target();
    for (i, img) in m.images().iter().enumerate() {
        let _ = writeln!(out, "{prefix}{} = {img}", t.var_name(t.var_ref(i)));
    }
}

pub fn print_morphism_file(m: &Morphism) -> String {
    let mut out = format!("order {}\nsource {}\ntarget {}\n", m.order(), m.source(), m.target());
    print_images(&mut out, m, "");
    out
}

/// Parses `name = expr` lines giving a base map in the base coordinates of
/// `sig`, in base-coordinate order.
pub fn parse_base_map(text: &str, sig: &Signature) -> Result<Vec<CoeffExpr>> {
    let names = sig.base_names().to_vec();
    let mut slots: Vec<Option<CoeffExpr>> = vec![None; names.len()];
    for l in Lines::new(text).lines {
        let (name, rest, col) = assignment(&l)?;
        let Some(i) = names.iter().position(|n| n == name) else {
            return l.err(1, format!("`{name}` is not a base coordinate"));
        };
        slots[i] = Some(normalize_expr(&parse_expr(rest, l.number, col)?, &names)?);
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.ok_or_else(|| Error::parse(1, 1, format!("no inverse given for `{}`", names[i]))))
        .collect()
}

fn parse_rational(l: &Line, text: &str, column: usize) -> Result<Rational> {
    let t = text.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(b) => (true, b.trim()),
        None => (false, t),
    };
    let r: Rational = body
        .parse()
        .or_else(|_| l.err(column + 1, format!("expected a rational number, found `{t}`")))?;
    Ok(if neg { -r } else { r })
}

/// `basis l1 l2 ...`, `unit l`, then `(i, j, k, c)` lines meaning
/// `e_i e_j` has coefficient `c` on `e_k`.
pub fn parse_algebra_file(text: &str) -> Result<FinDimAlgebra> {
    let mut lines = Lines::new(text);
    let (bl, _, bcol) = lines.expect("basis")?;
    let labels: Vec<String> = bl
        .words()
        .into_iter()
        .filter(|(_, c)| *c >= bcol)
        .map(|(w, _)| w.to_string())
        .collect();
    let (ul, rest, ucol) = lines.expect("unit")?;
    let unit = labels
        .iter()
        .position(|l| l == rest.trim())
        .map_or_else(|| ul.err(ucol + 1, format!("unknown unit `{}`", rest.trim())), Ok)?;
    let mut constants = Vec::new();
    let mut first_line = None;
    while let Some(l) = lines.next() {
        first_line.get_or_insert(l.number);
        let t = l.text.trim();
        let start = l.text.len() - l.text.trim_start().len();
        let inner = t
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .map_or_else(|| l.err(start + 1, "expected `(i, j, k, c)`"), Ok)?;
        let parts: Vec<&str> = inner.split(',').collect();
        if parts.len() != 4 {
            return l.err(start + 1, "expected four entries `(i, j, k, c)`");
        }
        let mut ix = [0usize; 3];
        for (slot, part) in ix.iter_mut().zip(&parts) {
            let label = part.trim();
            *slot = labels
                .iter()
                .position(|x| x == label)
                .map_or_else(|| l.err(start + 1, format!("unknown basis label `{label}`")), Ok)?;
        }
        constants.push((ix[0], ix[1], ix[2], parse_rational(&l, parts[3], start)?));
    }
    FinDimAlgebra::new(labels, unit, constants)
        .map_err(|e| Error::parse(first_line.unwrap_or(1), 1, e.to_string()))
}

pub fn print_algebra_file(a: &FinDimAlgebra) -> String {
    let mut out = format!("basis {}\nunit {}\n", a.labels().join(" "), a.labels()[a.unit()]);
    for (i, j, k, c) in a.constants() {
        let _ = writeln!(out, "({}, {}, {}, {c})", a.labels()[i], a.labels()[j], a.labels()[k]);
    }
    out
}

/// `label bits` lines covering the basis.
pub fn parse_assignment_file(text: &str, a: &FinDimAlgebra) -> Result<DegreeAssignment> {
    let mut pairs = Vec::new();
    for l in Lines::new(text).lines {
        let words = l.words();
        if words.len() != 2 {
            return l.err(1, "expected `label degree`");
        }
        let d: Degree = words[1]
            .0
            .parse()
            .or_else(|e: Error| l.err(words[1].1 + 1, e.to_string()))?;
        pairs.push((words[0].0.to_string(), d));
    }
    DegreeAssignment::from_labeled(a, &pairs)
}

fn print_nerve(out: &mut String, nerve: &Nerve) {
    let _ = writeln!(out, "charts {}", nerve.charts.join(" "));
    for &(a, b) in &nerve.pairs {
        let _ = writeln!(out, "pair {} {}", nerve.charts[a], nerve.charts[b]);
    }
    for t in &nerve.triples {
        let _ = writeln!(out, "triple {} {} {}", nerve.charts[t[0]], nerve.charts[t[1]], nerve.charts[t[2]]);
    }
}

fn parse_nerve(lines: &mut Lines) -> Result<Nerve> {
    let (cl, _, ccol) = lines.expect("charts")?;
    let charts: Vec<String> = cl
        .words()
        .into_iter()
        .filter(|(_, c)| *c >= ccol)
        .map(|(w, _)| w.to_string())
        .collect();
    let mut pairs = Vec::new();
    let mut triples = Vec::new();
    let mut first = cl;
    loop {
        match lines.peek_keyword() {
            Some("pair") => {
                let l = lines.next().expect("peeked");
                let w = l.words();
                if w.len() != 3 {
                    return l.err(1, "expected `pair U V`");
                }
                pairs.push((w[1].0.to_string(), w[2].0.to_string()));
                first = l;
            }
            Some("triple") => {
                let l = lines.next().expect("peeked");
                let w = l.words();
                if w.len() != 4 {
                    return l.err(1, "expected `triple U V W`");
                }
                triples.push([w[1].0.to_string(), w[2].0.to_string(), w[3].0.to_string()]);
                first = l;
            }
            _ => break,
        }
    }
    Nerve::new(charts, &pairs, &triples).or_else(|e| first.err(1, e.to_string()))
}

fn chart_pair<'a>(l: &Line<'a>, expected: usize) -> Result<Vec<&'a str>> {
    let w: Vec<&str> = l.words().into_iter().map(|(w, _)| w).collect();
    if w.len() != expected {
        return l.err(1, format!("expected {} words", expected));
    }
    Ok(w)
}

/// ```text
/// atlas
/// order K
/// sig ...
/// charts U V
/// pair U V
/// transition U V
/// x = ...
/// end
/// partition
/// U = rho(x)
/// V = *
/// end
/// ```
pub fn parse_atlas_file(text: &str) -> Result<Atlas> {
    let mut lines = Lines::new(text);
    lines.expect("atlas")?;
    let order = order_line(&mut lines)?;
    let sig = sig_line(&mut lines, "sig")?;
    let nerve = parse_nerve(&mut lines)?;
    let mut transitions = Vec::new();
    let mut partition = None;
    let mut header = None;
    while let Some(l) = lines.next() {
        header.get_or_insert(l.number);
        match l.split().0 {
            "transition" => {
                let w = chart_pair(&l, 3)?;
                let (images, first) = parse_images(&mut lines, &sig, &sig, order, Some("end"))?;
                lines.expect("end")?;
                let m = morphism_from(images, first, sig.clone(), sig.clone(), order, l.number)?;
                transitions.push(((w[1].to_string(), w[2].to_string()), m));
            }
            "partition" => {
                let mut explicit = Vec::new();
                let mut complement = None;
                while lines.peek_keyword().is_some_and(|k| k != "end") {
                    let pl = lines.next().expect("peeked");
                    let (name, rest, col) = assignment(&pl)?;
                    if rest.trim() == "*" {
                        if complement.replace(name.to_string()).is_some() {
                            return pl.err(1, "only one chart may take the complement `*`");
                        }
                    } else {
                        let c = normalize_expr(&parse_expr(rest, pl.number, col)?, sig.base_names())?;
                        explicit.push((name.to_string(), c));
                    }
                }
                lines.expect("end")?;
                let Some(complement) = complement else {
                    return l.err(1, "the partition needs one chart with `*`");
                };
                partition = Some((explicit, complement));
            }
            other => return l.err(1, format!("unexpected `{other}`")),
        }
    }
    Atlas::new(sig, order, nerve, transitions, partition).map_err(|e| match e {
        Error::Parse { .. } => e,
        other => Error::parse(header.unwrap_or(1), 1, other.to_string()),
    })
}

fn coeff_text(c: &CoeffExpr, sig: &Signature) -> String {
    c.display_with(&|i| sig.base_names()[i].clone()).to_string()
}

pub fn print_atlas_file(a: &Atlas) -> String {
    let sig = a.signature();
    let mut out = format!("atlas\norder {}\nsig {sig}\n", a.order());
    print_nerve(&mut out, &a.nerve());
    for (&(u, v), m) in a.transitions() {
        let _ = writeln!(out, "transition {} {}", a.charts()[u], a.charts()[v]);
        print_images(&mut out, m, "");
        out.push_str("end\n");
    }
    if let Some(p) = a.partition() {
        out.push_str("partition\n");
        for (&u, rho) in &p.explicit {
            let _ = writeln!(out, "{} = {}", a.charts()[u], coeff_text(rho, sig));
        }
        let _ = writeln!(out, "{} = *", a.charts()[p.complement]);
        out.push_str("end\n");
    }
    out
}

fn print_matrix(m: &CoeffMatrix, sig: &Signature) -> String {
    m.display_with(&|i| sig.base_names()[i].clone()).to_string()
}

fn print_bundle(out: &mut String, b: &GradedBundleData) {
    let sig = &b.sig;
    let charts = &b.nerve.charts;
    let blocks = sig.degree_blocks();
    out.push_str("bundle\n");
    for (&(u, v), base) in &b.base {
        for (i, a) in base.iter().enumerate() {
            let _ = writeln!(out, "base {} {} {} = {}", charts[u], charts[v], sig.base_names()[i], coeff_text(a, sig));
        }
        for (k, m) in b.blocks[&(u, v)].iter().enumerate() {
            let _ = writeln!(out, "block {} {} {} = {}", blocks[k].0, charts[u], charts[v], print_matrix(m, sig));
        }
    }
    out.push_str("end\n");
}

fn parse_bundle(lines: &mut Lines, sig: &Arc<Signature>, nerve: &Nerve) -> Result<GradedBundleData> {
    let (header, _, _) = lines.expect("bundle")?;
    let chart = |l: &Line, name: &str| nerve.index(name).map_or_else(|| l.err(1, format!("unknown chart `{name}`")), Ok);
    let blocks = sig.degree_blocks();
    let names = sig.base_names();
    let mut base: BTreeMap<(usize, usize), Vec<Option<CoeffExpr>>> = BTreeMap::new();
    let mut mats: BTreeMap<(usize, usize), Vec<Option<CoeffMatrix>>> = BTreeMap::new();
    while lines.peek_keyword().is_some_and(|k| k != "end") {
        let l = lines.next().expect("peeked");
        let (lhs, rest, col) = assignment(&l)?;
        let w: Vec<&str> = lhs.split_whitespace().collect();
        if w.len() != 4 {
            return l.err(1, "expected `base U V x = ...` or `block d U V = [...]`");
        }
        match w[0] {
            "base" => {
                let pair = (chart(&l, w[1])?, chart(&l, w[2])?);
                let Some(i) = names.iter().position(|n| n == w[3]) else {
                    return l.err(1, format!("`{}` is not a base coordinate", w[3]));
                };
                let e = normalize_expr(&parse_expr(rest, l.number, col)?, names)?;
                base.entry(pair).or_insert_with(|| vec![None; names.len()])[i] = Some(e);
            }
            "block" => {
                let pair = (chart(&l, w[2])?, chart(&l, w[3])?);
                let Some(k) = blocks.iter().position(|(d, _)| d.to_string() == w[1]) else {
                    return l.err(1, format!("no formal variables of degree `{}`", w[1]));
                };
                let mut p = Parser::new(rest, l.number, col)?;
                let rows = p.matrix()?;
                p.expect_end()?;
                let rows = rows
                    .iter()
                    .map(|r| r.iter().map(|e| normalize_expr(e, names)).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()?;
                let size = blocks[k].1.len();
                if rows.len() != size || rows.iter().any(|r| r.len() != size) {
                    return l.err(col + 1, format!("block {} must be {size}x{size}", w[1]));
                }
                mats.entry(pair).or_insert_with(|| vec![None; blocks.len()])[k] = Some(CoeffMatrix::from_rows(rows));
            }
            other => return l.err(1, format!("unexpected `{other}`")),
        }
    }
    lines.expect("end")?;
    let incomplete = || Error::parse(header.number, 1, "incomplete bundle block");
    let base = base
        .into_iter()
        .map(|(k, v)| Ok((k, v.into_iter().collect::<Option<Vec<_>>>().ok_or_else(incomplete)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let mats = mats
        .into_iter()
        .map(|(k, v)| Ok((k, v.into_iter().collect::<Option<Vec<_>>>().ok_or_else(incomplete)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    GradedBundleData::new(sig.clone(), nerve.clone(), base, mats).map_err(|e| Error::parse(header.number, 1, e.to_string()))
}

pub fn print_report(r: &Report) -> String {
    r.to_string()
}

fn parse_check(l: &Line) -> Result<CheckEntry> {
    let w = l.words();
    if w.len() < 4 || w[0].0 != "check" {
        return l.err(1, "expected `check name scope pass|fail [residual ...]`");
    }
    let passed = match w[3].0 {
        "pass" => true,
        "fail" => false,
        other => return l.err(w[3].1 + 1, format!("expected `pass` or `fail`, found `{other}`")),
    };
    let residual = match w.get(4) {
        None => None,
        Some(("residual", col)) => Some(l.text[col + "residual".len()..].trim().to_string()),
        Some((other, col)) => return l.err(col + 1, format!("unexpected `{other}`")),
    };
    Ok(CheckEntry {
        name: w[1].0.to_string(),
        scope: if w[2].0 == "-" { String::new() } else { w[2].0.to_string() },
        passed,
        residual,
    })
}

/// Parses report lines `check name scope pass|fail [residual ...]`.
pub fn parse_report(text: &str) -> Result<Report> {
    let mut r = Report::new();
    for l in Lines::new(text).lines {
        r.entries.push(parse_check(&l)?);
    }
    Ok(r)
}

/// The output of `split`: nerve, bundle data, embedding, iso and report.
pub fn print_splitting_file(r: &SplittingResult) -> String {
    let sig = &r.signature;
    let mut out = format!("splitting\norder {}\nsig {sig}\n", r.order);
    print_nerve(&mut out, &r.bundle.nerve);
    print_bundle(&mut out, &r.bundle);
    out.push_str("embedding\n");
    for (u, vals) in r.embedding.values.iter().enumerate() {
        for (i, s) in vals.iter().enumerate() {
            let _ = writeln!(out, "phi {} {} = {s}", r.charts[u], sig.base_names()[i]);
        }
    }
    out.push_str("end\niso\n");
    for (u, m) in r.iso.iter().enumerate() {
        print_images(&mut out, m, &format!("iso {} ", r.charts[u]));
    }
    out.push_str("end\nreport\n");
    out.push_str(&r.report.to_string());
    out.push_str("end\n");
    out
}

pub fn parse_splitting_file(text: &str) -> Result<SplittingResult> {
    let mut lines = Lines::new(text);
    lines.expect("splitting")?;
    let order = order_line(&mut lines)?;
    let sig = sig_line(&mut lines, "sig")?;
    let nerve = parse_nerve(&mut lines)?;
    let bundle = parse_bundle(&mut lines, &sig, &nerve)?;
    let charts = nerve.charts.clone();
    let chart = |l: &Line, name: &str| nerve.index(name).map_or_else(|| l.err(1, format!("unknown chart `{name}`")), Ok);

    let (eh, _, _) = lines.expect("embedding")?;
    let mut phi: Vec<Vec<Option<GSeries>>> = vec![vec![None; sig.p()]; charts.len()];
    while lines.peek_keyword().is_some_and(|k| k != "end") {
        let l = lines.next().expect("peeked");
        let (lhs, rest, col) = assignment(&l)?;
        let w: Vec<&str> = lhs.split_whitespace().collect();
        if w.len() != 3 || w[0] != "phi" {
            return l.err(1, "expected `phi U x = ...`");
        }
        let u = chart(&l, w[1])?;
        let Some(i) = sig.base_names().iter().position(|n| n == w[2]) else {
            return l.err(1, format!("`{}` is not a base coordinate", w[2]));
        };
        phi[u][i] = Some(series_at(&l, rest, col, &sig, order)?);
    }
    lines.expect("end")?;
    let values = phi
        .into_iter()
        .map(|v| v.into_iter().collect::<Option<Vec<_>>>())
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::parse(eh.number, 1, "incomplete embedding block"))?;

    let (ih, _, _) = lines.expect("iso")?;
    let mut images: Vec<Vec<(String, GSeries)>> = vec![Vec::new(); charts.len()];
    while lines.peek_keyword().is_some_and(|k| k != "end") {
        let l = lines.next().expect("peeked");
        let (lhs, rest, col) = assignment(&l)?;
        let w: Vec<&str> = lhs.split_whitespace().collect();
        if w.len() != 3 || w[0] != "iso" {
            return l.err(1, "expected `iso U var = ...`");
        }
        let u = chart(&l, w[1])?;
        images[u].push((w[2].to_string(), series_at(&l, rest, col, &sig, order)?));
    }
    lines.expect("end")?;
    let iso = images
        .into_iter()
        .map(|im| Morphism::new(sig.clone(), sig.clone(), im, order))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| match e {
            Error::Parse { .. } => e,
            other => Error::parse(ih.number, 1, other.to_string()),
        })?;

    lines.expect("report")?;
    let mut report = Report::new();
    while lines.peek_keyword().is_some_and(|k| k != "end") {
        let l = lines.next().expect("peeked");
        report.entries.push(parse_check(&l)?);
    }
    lines.expect("end")?;
    trailing(&mut lines)?;
    Ok(SplittingResult {
        signature: sig,
        order,
        charts,
        bundle,
        embedding: EmbeddingFamily { order, values },
        iso,
        report,
    })
}

/// Partition helper for callers assembling atlases in code.
pub fn partition_by_name(atlas: &Atlas, explicit: &[(&str, CoeffExpr)], complement: &str) -> Result<Partition> {
    let idx = |n: &str| {
        atlas
            .charts()
            .iter()
            .position(|c| c == n)
            .ok_or_else(|| Error::Atlas(format!("unknown chart `{n}`")))
    };
    Ok(Partition {
        explicit: explicit
            .iter()
            .map(|(n, c)| Ok((idx(n)?, c.clone())))
            .collect::<Result<_>>()?,
        complement: idx(complement)?,
    })
}
