//! Small dense matrices over the coefficient algebra.

use std::fmt;

use num_traits::Zero;

use crate::coeff::{CoeffExpr, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoeffMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<CoeffExpr>,
}

impl CoeffMatrix {
    pub fn zeros(rows: usize, cols: usize) -> CoeffMatrix {
        CoeffMatrix {
            rows,
            cols,
            entries: vec![CoeffExpr::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> CoeffMatrix {
        let mut m = CoeffMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, CoeffExpr::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<CoeffExpr>>) -> CoeffMatrix {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix");
        CoeffMatrix {
            rows: r,
            cols: c,
            entries: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &CoeffExpr {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: CoeffExpr) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[CoeffExpr] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul(&self, other: &CoeffMatrix) -> CoeffMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = CoeffMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = CoeffExpr::zero();
                for k in 0..self.cols {
                    acc += self.get(i, k) * other.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(&CoeffExpr) -> CoeffExpr) -> CoeffMatrix {
        CoeffMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    /// Substitutes base coordinates in every entry.
    pub fn substitute(&self, values: &[CoeffExpr]) -> CoeffMatrix {
        self.map(|e| e.substitute(values))
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols && *self == CoeffMatrix::identity(self.rows)
    }

    /// Laplace expansion; the blocks handled here are tiny.
    pub fn determinant(&self) -> CoeffExpr {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        match n {
            0 => CoeffExpr::one(),
            1 => self.get(0, 0).clone(),
            _ => {
                let mut acc = CoeffExpr::zero();
                for j in 0..n {
                    if self.get(0, j).is_zero() {
                        continue;
                    }
                    let minor = self.minor(0, j);
                    let term = self.get(0, j) * &minor.determinant();
                    if j % 2 == 0 {
                        acc += term;
                    } else {
                        acc += -term;
                    }
                }
                acc
            }
        }
    }

    fn minor(&self, row: usize, col: usize) -> CoeffMatrix {
        let rows = (0..self.rows)
            .filter(|&i| i != row)
            .map(|i| {
                (0..self.cols)
                    .filter(|&j| j != col)
                    .map(|j| self.get(i, j).clone())
                    .collect()
            })
            .collect();
        CoeffMatrix::from_rows(rows)
    }

    /// Inverse over the coefficient ring, available when the determinant is
    /// a nonzero rational constant (adjugate formula).
    pub fn inverse(&self) -> Option<CoeffMatrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let det = self.determinant().as_constant()?;
        if det.is_zero() {
            return None;
        }
        let inv_det = Rational::from_integer(1.into()) / det;
        if n == 0 {
            return Some(CoeffMatrix::identity(0));
        }
        if n == 1 {
            return Some(CoeffMatrix::from_rows(vec![vec![CoeffExpr::constant(inv_det)]]));
        }
        let mut out = CoeffMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let cof = self.minor(j, i).determinant();
                let cof = if (i + j) % 2 == 0 { cof } else { -cof };
                out.set(i, j, cof.scale(&inv_det));
            }
        }
        Some(out)
    }

    pub fn display_with<'a>(&'a self, names: &'a dyn Fn(usize) -> String) -> MatrixDisplay<'a> {
        MatrixDisplay { m: self, names }
    }
}

pub struct MatrixDisplay<'a> {
    m: &'a CoeffMatrix,
    names: &'a dyn Fn(usize) -> String,
}

impl fmt::Display for MatrixDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.m.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.m.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.m.get(i, j).display_with(self.names))?;
            }
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::integer;

    #[test]
    fn unipotent_with_opaque_entry_inverts() {
        let f = CoeffExpr::apply("f", vec![CoeffExpr::coord(0)]);
        let m = CoeffMatrix::from_rows(vec![
            vec![CoeffExpr::one(), f.clone()],
            vec![CoeffExpr::zero(), CoeffExpr::int(2)],
        ]);
        let inv = m.inverse().unwrap();
        assert!(m.mul(&inv).is_identity());
        assert!(inv.mul(&m).is_identity());
    }

    #[test]
    fn non_constant_determinant_is_refused() {
        let m = CoeffMatrix::from_rows(vec![vec![&CoeffExpr::one() + &CoeffExpr::coord(0)]]);
        assert!(m.inverse().is_none());
        let z = CoeffMatrix::from_rows(vec![vec![CoeffExpr::zero()]]);
        assert!(z.inverse().is_none());
        let s = CoeffMatrix::from_rows(vec![vec![CoeffExpr::constant(integer(3))]]);
        assert_eq!(s.inverse().unwrap().get(0, 0).as_constant().unwrap(), crate::coeff::rational(1, 3));
    }
}
