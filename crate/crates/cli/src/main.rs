use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use zsuper::atlas::validate_atlas_with;
use zsuper::findim::{self, check_graded_commutative, search_budget, search_degree_assignments_with, FinDimAlgebra};
use zsuper::format;
use zsuper::morphism::jacobian;
use zsuper::report::Report;
use zsuper::splitting::{split_with, verify_iso};
use zsuper::{compose, invert, transformation_template, Error, Execution, GSeries, Morphism};

#[derive(Parser)]
#[command(name = "zsuper", version, about = "Exact computations on Z_2^n-graded superdomains")]
struct Cli {
    /// Run every kernel on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    /// Write the result here instead of standard output.
    #[arg(short = 'o', long = "output", global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a series file in canonical form.
    Normalize { series: PathBuf },
    /// Multiply two series over the same signature.
    Mul {
        left: PathBuf,
        right: PathBuf,
        #[arg(long)]
        order: Option<usize>,
    },
    /// Pull a series back along a morphism.
    Pullback {
        #[arg(long)]
        morphism: PathBuf,
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        order: Option<usize>,
    },
    /// Compose two morphisms: `outer` after `inner`.
    Compose {
        #[arg(long)]
        outer: PathBuf,
        #[arg(long)]
        inner: PathBuf,
    },
    /// Formal inverse of a morphism.
    Invert {
        #[arg(long)]
        morphism: PathBuf,
        /// Inverse of the base map, one `x = expr` per base coordinate.
        #[arg(long = "base-inverse")]
        base_inverse: Vec<String>,
    },
    /// Graded Jacobian of a morphism.
    Jacobian {
        #[arg(long)]
        morphism: PathBuf,
        /// Also report the degree of every block.
        #[arg(long = "check-blocks")]
        check_blocks: bool,
    },
    /// The most general coordinate change on a signature.
    Template {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        sig: PathBuf,
        #[arg(long)]
        order: usize,
    },
    /// Check a degree assignment on a finite-dimensional algebra.
    CheckFindim {
        #[command(flatten)]
        algebra: AlgebraSource,
        #[arg(long)]
        assign: PathBuf,
    },
    /// Find every degree assignment making an algebra graded commutative.
    SearchDegrees {
        #[command(flatten)]
        algebra: AlgebraSource,
        #[arg(long)]
        n: usize,
    },
    /// Check inverse and cocycle identities of an atlas.
    AtlasCheck {
        #[arg(long)]
        atlas: PathBuf,
    },
    /// Construct a splitting of an atlas.
    Split {
        #[arg(long)]
        atlas: PathBuf,
        #[arg(long)]
        order: usize,
    },
    /// Re-check a splitting result against its atlas.
    Verify {
        #[arg(long)]
        atlas: PathBuf,
        #[arg(long)]
        result: PathBuf,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct AlgebraSource {
    #[arg(long)]
    algebra: Option<PathBuf>,
    /// `quaternions`, `dual` or `cl:p,q`.
    #[arg(long)]
    builtin: Option<String>,
}

/// Output text and whether every check passed.
struct Outcome {
    text: String,
    passed: bool,
}

impl Outcome {
    fn ok(text: String) -> Outcome {
        Outcome { text, passed: true }
    }

    fn report(r: &Report) -> Outcome {
        Outcome {
            text: r.to_string(),
            passed: r.all_passed(),
        }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load<T>(path: &Path, parse: impl FnOnce(&str) -> zsuper::Result<T>) -> anyhow::Result<T> {
    let text = read(path)?;
    parse(&text).map_err(|e| match e {
        Error::Parse { line, column, message } => {
            anyhow!("{}:{line}:{column}: {message}", path.display())
        }
        other => anyhow!("{}: {other}", path.display()),
    })
}

fn load_algebra(src: &AlgebraSource) -> anyhow::Result<FinDimAlgebra> {
    if let Some(path) = &src.algebra {
        return load(path, format::parse_algebra_file);
    }
    let name = src.builtin.as_deref().unwrap_or_default();
    match name {
        "quaternions" => Ok(findim::quaternions()),
        "dual" => Ok(findim::dual_numbers()),
        _ => {
            let spec = name
                .strip_prefix("cl:")
                .ok_or_else(|| anyhow!("unknown builtin algebra `{name}`"))?;
            let (p, q) = spec
                .split_once(',')
                .ok_or_else(|| anyhow!("expected `cl:p,q`, found `{name}`"))?;
            Ok(findim::clifford(p.trim().parse()?, q.trim().parse()?)?)
        }
    }
}

fn at_order(s: GSeries, order: Option<usize>) -> anyhow::Result<GSeries> {
    Ok(match order {
        Some(k) => s.truncate(k)?,
        None => s,
    })
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    Ok(match &cli.command {
        Command::Normalize { series } => {
            let s = load(series, format::parse_series_file)?;
            Outcome::ok(format::print_series_file(&s))
        }
        Command::Mul { left, right, order } => {
            let a = at_order(load(left, format::parse_series_file)?, *order)?;
            let b = at_order(load(right, format::parse_series_file)?, *order)?;
            Outcome::ok(format::print_series_file(&a.multiply_with(&b, exec)?))
        }
        Command::Pullback { morphism, series, order } => {
            let mut m = load(morphism, format::parse_morphism_file)?;
            let f = at_order(load(series, format::parse_series_file)?, *order)?;
            if let Some(k) = order {
                m = m.truncate(*k)?;
            }
            let out = zsuper::morphism::pullback_with(&m, &f, exec)?;
            Outcome::ok(format::print_series_file(&out))
        }
        Command::Compose { outer, inner } => {
            let m2 = load(outer, format::parse_morphism_file)?;
            let m1 = load(inner, format::parse_morphism_file)?;
            Outcome::ok(format::print_morphism_file(&compose(&m2, &m1)?))
        }
        Command::Invert { morphism, base_inverse } => {
            let m = load(morphism, format::parse_morphism_file)?;
            let base = if base_inverse.is_empty() {
                None
            } else {
                let text = base_inverse.join("\n");
                Some(format::parse_base_map(&text, m.target()).context("--base-inverse")?)
            };
            Outcome::ok(format::print_morphism_file(&invert(&m, base.as_deref())?))
        }
        Command::Jacobian { morphism, check_blocks } => jacobian_cmd(&load(morphism, format::parse_morphism_file)?, *check_blocks)?,
        Command::Template { n, sig, order } => {
            let sig = load(sig, format::parse_signature_file)?;
            if let Some(n) = n {
                if *n != sig.n() {
                    bail!("--n {n} does not match the signature, which has n = {}", sig.n());
                }
            }
            let t = transformation_template(&sig, *order);
            let mut text = String::new();
            for f in &t.families {
                let shapes: Vec<String> = f
                    .shapes
                    .iter()
                    .map(|(m, _)| GSeries::monomial(&sig, *order, m.clone(), zsuper::CoeffExpr::one()).to_string())
                    .collect();
                text.push_str(&format!("# family {} {}: {}\n", f.target, f.degree, shapes.join(", ")));
            }
            text.push_str(&format::print_morphism_file(&t.to_morphism()?));
            Outcome::ok(text)
        }
        Command::CheckFindim { algebra, assign } => {
            let a = load_algebra(algebra)?;
            let d = load(assign, |t| format::parse_assignment_file(t, &a))?;
            match check_graded_commutative(&a, &d) {
                Ok(r) => {
                    let mut text = String::new();
                    for v in &r.violations {
                        text.push_str(&format!(
                            "violation {} {} sign {} left {} right {}\n",
                            a.labels()[v.left],
                            a.labels()[v.right],
                            v.sign,
                            a.format_element(&v.forward),
                            a.format_element(&v.backward),
                        ));
                    }
                    let passed = r.passed();
                    text.push_str(&format!("check graded-commutative - {}\n", if passed { "pass" } else { "fail" }));
                    Outcome { text, passed }
                }
                Err(e @ Error::Grading { .. }) => Outcome {
                    text: format!("check homogeneous - fail residual {e}\n"),
                    passed: false,
                },
                Err(e) => return Err(e.into()),
            }
        }
        Command::SearchDegrees { algebra, n } => {
            let a = load_algebra(algebra)?;
            let found = search_degree_assignments_with(&a, *n, search_budget(), exec)?;
            let mut text = format!("assignments {}\n", found.len());
            for d in &found {
                text.push('\n');
                text.push_str(&d.display(&a).to_string());
            }
            Outcome::ok(text)
        }
        Command::AtlasCheck { atlas } => {
            let a = load(atlas, format::parse_atlas_file)?;
            Outcome::report(&validate_atlas_with(&a, exec))
        }
        Command::Split { atlas, order } => {
            let a = load(atlas, format::parse_atlas_file)?;
            let r = split_with(&a, *order, exec)?;
            Outcome {
                text: format::print_splitting_file(&r),
                passed: r.report.all_passed(),
            }
        }
        Command::Verify { atlas, result } => {
            let a = load(atlas, format::parse_atlas_file)?;
            let r = load(result, format::parse_splitting_file)?;
            Outcome::report(&verify_iso(&a, &r))
        }
    })
}

fn jacobian_cmd(m: &Morphism, check_blocks: bool) -> anyhow::Result<Outcome> {
    let j = jacobian(m)?;
    let (src, tgt) = (m.source(), m.target());
    let mut text = String::new();
    for (r, row) in j.entries.iter().enumerate() {
        for (c, e) in row.iter().enumerate() {
            if !e.is_zero() {
                let (rn, cn) = (tgt.var_name(tgt.var_ref(r)), src.var_name(src.var_ref(c)));
                text.push_str(&format!("J {rn} {cn} = {e}\n"));
            }
        }
    }
    let mut passed = true;
    if check_blocks {
        let violations = j.block_violations();
        for r in 0..j.entries.len() {
            for c in 0..src.var_count() {
                let (rn, cn) = (tgt.var_name(tgt.var_ref(r)), src.var_name(src.var_ref(c)));
                let bad = violations.iter().find(|v| v.row == rn && v.col == cn);
                let status = match bad {
                    None => "pass".to_string(),
                    Some(v) => format!("fail residual {}", v.found),
                };
                text.push_str(&format!("check block {rn},{cn} {} {status}\n", j.expected_degree(r, c)));
            }
        }
        passed = violations.is_empty();
    }
    Ok(Outcome { text, passed })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let written = match &cli.output {
                Some(path) => fs::write(path, &out.text).with_context(|| format!("cannot write {}", path.display())),
                None => {
                    print!("{}", out.text);
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
            if out.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
