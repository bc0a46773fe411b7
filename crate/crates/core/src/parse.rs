//! Tokenizer and recursive-descent parser for the expression mini-language
//! shared by every text format.
//!
//! ```text
//! expr    := factor (('+' | '-') factor-chain)*
//! chain   := factor (['*'] factor)*         juxtaposition multiplies
//! factor  := '-' factor | primary ['^' int]
//! primary := rational | '(' expr ')' | ident | ident '[' ints ']' '(' args ')' | ident '(' args ')'
//! ```
//!
//! An identifier directly followed (no whitespace) by `(` or `[` is an
//! opaque application.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::coeff::{CoeffExpr, Rational};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Num(Rational),
    Sym(char),
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
    pub spaced: bool,
}

/// Raw, un-normalized expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum ExprTree {
    Num(Rational),
    Ident {
        name: String,
        pos: Pos,
    },
    Apply {
        symbol: String,
        derivs: Option<Vec<u32>>,
        args: Vec<ExprTree>,
        pos: Pos,
    },
    Add(Box<ExprTree>, Box<ExprTree>),
    Sub(Box<ExprTree>, Box<ExprTree>),
    Neg(Box<ExprTree>),
    Mul(Box<ExprTree>, Box<ExprTree>),
    Pow(Box<ExprTree>, u32),
}

pub fn tokenize(text: &str, line: usize, column_offset: usize) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut spaced = true;
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos {
            line,
            column: column_offset + i + 1,
        };
        if c.is_whitespace() {
            spaced = true;
            i += 1;
            continue;
        }
        if c == '#' {
            break;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                pos,
                spaced,
            });
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let numer: BigInt = chars[start..i].iter().collect::<String>().parse().unwrap();
            let mut value = Rational::from_integer(numer.clone());
            if i + 1 < chars.len() && chars[i] == '/' && chars[i + 1].is_ascii_digit() {
                let dstart = i + 1;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let denom: BigInt = chars[dstart..i].iter().collect::<String>().parse().unwrap();
                if denom.is_zero() {
                    return Err(Error::parse(pos.line, pos.column, "zero denominator"));
                }
                value = Rational::new(numer, denom);
            }
            out.push(Token {
                tok: Tok::Num(value),
                pos,
                spaced,
            });
        } else if "+-*^()[],;=:".contains(c) {
            out.push(Token {
                tok: Tok::Sym(c),
                pos,
                spaced,
            });
            i += 1;
        } else {
            return Err(Error::parse(pos.line, pos.column, format!("unexpected character `{c}`")));
        }
        spaced = false;
    }
    Ok(out)
}

pub struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: Pos,
}

impl Parser {
    pub fn new(text: &str, line: usize, column_offset: usize) -> Result<Parser> {
        let tokens = tokenize(text, line, column_offset)?;
        let end = Pos {
            line,
            column: column_offset + text.chars().count() + 1,
        };
        Ok(Parser { tokens, pos: 0, end })
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> Pos {
        self.peek().map(|t| t.pos).unwrap_or(self.end)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        let p = self.here();
        Err(Error::parse(p.line, p.column, message))
    }

    fn peek_sym(&self, c: char) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Sym(s), .. }) if *s == c)
    }

    pub fn eat_sym(&mut self, c: char) -> bool {
        if self.peek_sym(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect_sym(&mut self, c: char) -> Result<()> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            self.error(format!("expected `{c}`"))
        }
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    pub fn expect_end(&self) -> Result<()> {
        if self.at_end() {
            Ok(())
        } else {
            self.error("unexpected trailing input")
        }
    }

    pub fn expr(&mut self) -> Result<ExprTree> {
        let mut lhs = self.chain()?;
        loop {
            if self.eat_sym('+') {
                let rhs = self.chain()?;
                lhs = ExprTree::Add(Box::new(lhs), Box::new(rhs));
            } else if self.eat_sym('-') {
                let rhs = self.chain()?;
                lhs = ExprTree::Sub(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn starts_primary(&self) -> bool {
        matches!(
            self.peek(),
            Some(Token {
                tok: Tok::Ident(_) | Tok::Num(_),
                ..
            }) | Some(Token { tok: Tok::Sym('('), .. })
        )
    }

    fn chain(&mut self) -> Result<ExprTree> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat_sym('*') {
                let rhs = self.factor()?;
                lhs = ExprTree::Mul(Box::new(lhs), Box::new(rhs));
            } else if self.starts_primary() {
                let rhs = self.factor()?;
                lhs = ExprTree::Mul(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<ExprTree> {
        if self.eat_sym('-') {
            return Ok(ExprTree::Neg(Box::new(self.factor()?)));
        }
        let base = self.primary()?;
        if self.eat_sym('^') {
            let e = self.small_int()?;
            return Ok(ExprTree::Pow(Box::new(base), e));
        }
        Ok(base)
    }

    fn small_int(&mut self) -> Result<u32> {
        match self.peek() {
            Some(Token { tok: Tok::Num(r), .. }) if r.is_integer() => {
                let v = r.to_integer().to_u32();
                match v {
                    Some(v) => {
                        self.pos += 1;
                        Ok(v)
                    }
                    None => self.error("integer out of range"),
                }
            }
            _ => self.error("expected a nonnegative integer"),
        }
    }

    fn primary(&mut self) -> Result<ExprTree> {
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => return self.error("unexpected end of expression"),
        };
        match tok.tok {
            Tok::Num(r) => {
                self.pos += 1;
                Ok(ExprTree::Num(r))
            }
            Tok::Sym('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_sym(')')?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                let glued = |p: &Parser, c: char| {
                    matches!(p.peek(), Some(Token { tok: Tok::Sym(s), spaced: false, .. }) if *s == c)
                };
                if glued(self, '[') || glued(self, '(') {
                    let derivs = if self.eat_sym('[') {
                        let mut ds = vec![self.small_int()?];
                        while self.eat_sym(',') {
                            ds.push(self.small_int()?);
                        }
                        self.expect_sym(']')?;
                        Some(ds)
                    } else {
                        None
                    };
                    self.expect_sym('(')?;
                    let mut args = Vec::new();
                    if !self.eat_sym(')') {
                        args.push(self.expr()?);
                        while self.eat_sym(',') {
                            args.push(self.expr()?);
                        }
                        self.expect_sym(')')?;
                    }
                    if let Some(ds) = &derivs {
                        if ds.len() != args.len() {
                            return Err(Error::parse(
                                tok.pos.line,
                                tok.pos.column,
                                format!(
                                    "`{name}` has {} derivative orders but {} arguments",
                                    ds.len(),
                                    args.len()
                                ),
                            ));
                        }
                    }
                    Ok(ExprTree::Apply {
                        symbol: name,
                        derivs,
                        args,
                        pos: tok.pos,
                    })
                } else {
                    Ok(ExprTree::Ident { name, pos: tok.pos })
                }
            }
            Tok::Sym(c) => self.error(format!("unexpected `{c}`")),
        }
    }

    /// `[e, e; e, e]`; rows separated by `;`. `[]` is the empty matrix.
    pub fn matrix(&mut self) -> Result<Vec<Vec<ExprTree>>> {
        self.expect_sym('[')?;
        let mut rows = Vec::new();
        if self.eat_sym(']') {
            return Ok(rows);
        }
        loop {
            let mut row = vec![self.expr()?];
            while self.eat_sym(',') {
                row.push(self.expr()?);
            }
            rows.push(row);
            if self.eat_sym(';') {
                continue;
            }
            self.expect_sym(']')?;
            break;
        }
        let width = rows[0].len();
        if rows.iter().any(|r| r.len() != width) {
            return self.error("matrix rows have different lengths");
        }
        Ok(rows)
    }
}

/// Parses a whole string as one expression.
pub fn parse_expr(text: &str, line: usize, column_offset: usize) -> Result<ExprTree> {
    let mut p = Parser::new(text, line, column_offset)?;
    let e = p.expr()?;
    p.expect_end()?;
    Ok(e)
}

impl ExprTree {
    /// Lowers the tree into the coefficient algebra; identifiers resolve to
    /// base coordinates through `resolve`.
    pub fn to_coeff(&self, resolve: &dyn Fn(&str) -> Option<usize>) -> Result<CoeffExpr> {
        Ok(match self {
            ExprTree::Num(r) => CoeffExpr::constant(r.clone()),
            ExprTree::Ident { name, pos } => match resolve(name) {
                Some(i) => CoeffExpr::coord(i),
                None => {
                    return Err(Error::parse(
                        pos.line,
                        pos.column,
                        format!("`{name}` is not a base coordinate"),
                    ))
                }
            },
            ExprTree::Apply {
                symbol,
                derivs,
                args,
                ..
            } => {
                let args = args
                    .iter()
                    .map(|a| a.to_coeff(resolve))
                    .collect::<Result<Vec<_>>>()?;
                let derivs = derivs.clone().unwrap_or_else(|| vec![0; args.len()]);
                CoeffExpr::apply_derived(symbol.clone(), derivs, args)
            }
            ExprTree::Add(a, b) => &a.to_coeff(resolve)? + &b.to_coeff(resolve)?,
            ExprTree::Sub(a, b) => &a.to_coeff(resolve)? - &b.to_coeff(resolve)?,
            ExprTree::Neg(a) => -a.to_coeff(resolve)?,
            ExprTree::Mul(a, b) => &a.to_coeff(resolve)? * &b.to_coeff(resolve)?,
            ExprTree::Pow(a, k) => a.to_coeff(resolve)?.pow(*k),
        })
    }
}

/// Canonical form of a raw expression tree over coordinates named `names`.
pub fn normalize_expr(tree: &ExprTree, names: &[String]) -> Result<CoeffExpr> {
    tree.to_coeff(&|s| names.iter().position(|n| n == s))
}

/// Parses and normalizes a coefficient expression.
pub fn parse_coeff(text: &str, names: &[String]) -> Result<CoeffExpr> {
    normalize_expr(&parse_expr(text, 1, 0)?, names)
}
