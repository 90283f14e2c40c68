use std::fmt;

use crate::error::{Error, Result};
use crate::galois::{Field, FieldElement};

/// Dense row-major matrix over GF(2^m).
#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(|v| format!("{:02x}", v.0)).collect();
            writeln!(f, "  [{}]", row.join(" "))?;
        }
        Ok(())
    }
}

/// Outcome of [`Matrix::solve`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Solution {
    /// `x` satisfies `A x = b`; `underdetermined` is set when rank < cols,
    /// in which case free variables were fixed to zero.
    Solved { x: Vec<FieldElement>, rank: usize, underdetermined: bool },
    /// No `x` satisfies `A x = b`.
    Inconsistent { rank: usize },
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix { rows, cols, data: vec![FieldElement::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = FieldElement::ONE;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<FieldElement>>) -> Result<Matrix> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::param("ragged rows"));
        }
        Ok(Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[FieldElement] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<FieldElement> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(self.rows, cols.len());
        for r in 0..self.rows {
            for (i, &c) in cols.iter().enumerate() {
                out[(r, i)] = self[(r, c)];
            }
        }
        out
    }

    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let data = rows.iter().flat_map(|&r| self.row(r).iter().copied()).collect();
        Matrix { rows: rows.len(), cols: self.cols, data }
    }

    pub fn mul(&self, field: &Field, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::Length { expected: self.cols, got: rhs.rows });
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a.is_zero() {
                    continue;
                }
                for c in 0..rhs.cols {
                    out[(r, c)] += field.mul(a, rhs[(k, c)]);
                }
            }
        }
        Ok(out)
    }

    /// Row vector times matrix: `v · self`.
    pub fn left_mul_vec(&self, field: &Field, v: &[FieldElement]) -> Result<Vec<FieldElement>> {
        if v.len() != self.rows {
            return Err(Error::Length { expected: self.rows, got: v.len() });
        }
        let mut out = vec![FieldElement::ZERO; self.cols];
        for (r, &a) in v.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (o, &m) in out.iter_mut().zip(self.row(r)) {
                *o += field.mul(a, m);
            }
        }
        Ok(out)
    }

    /// Matrix times column vector: `self · v`.
    pub fn mul_vec(&self, field: &Field, v: &[FieldElement]) -> Result<Vec<FieldElement>> {
        if v.len() != self.cols {
            return Err(Error::Length { expected: self.cols, got: v.len() });
        }
        Ok((0..self.rows).map(|r| field.dot(self.row(r), v)).collect())
    }

    pub fn rank(&self, field: &Field) -> usize {
        let mut m = self.clone();
        m.reduce(field, None)
    }

    pub fn inverse(&self, field: &Field) -> Result<Matrix> {
        if self.rows != self.cols {
            return Err(Error::param("inverse of a non-square matrix"));
        }
        let n = self.rows;
        let mut aug = Matrix::zeros(n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                aug[(r, c)] = self[(r, c)];
            }
            aug[(r, n + r)] = FieldElement::ONE;
        }
        if aug.reduce(field, Some(n)) < n {
            return Err(Error::Singular);
        }
        let cols: Vec<usize> = (n..2 * n).collect();
        Ok(aug.select_columns(&cols))
    }

    /// Gaussian elimination for `self · x = b`.
    pub fn solve(&self, field: &Field, b: &[FieldElement]) -> Result<Solution> {
        if b.len() != self.rows {
            return Err(Error::Length { expected: self.rows, got: b.len() });
        }
        let n = self.cols;
        let mut aug = Matrix::zeros(self.rows, n + 1);
        for r in 0..self.rows {
            for c in 0..n {
                aug[(r, c)] = self[(r, c)];
            }
            aug[(r, n)] = b[r];
        }
        let rank = aug.reduce(field, Some(n));
        // A pivot-free row with a nonzero right-hand side means 0 = b_r.
        if (rank..self.rows).any(|r| !aug[(r, n)].is_zero()) {
            return Ok(Solution::Inconsistent { rank });
        }
        let mut x = vec![FieldElement::ZERO; n];
        for r in 0..rank {
            let pivot = (0..n).find(|&c| !aug[(r, c)].is_zero()).expect("pivot row");
            x[pivot] = aug[(r, n)];
        }
        Ok(Solution::Solved { x, rank, underdetermined: rank < n })
    }

    /// Reduced row echelon form in place over the first `limit` columns.
    /// Returns the rank.
    fn reduce(&mut self, field: &Field, limit: Option<usize>) -> usize {
        let limit = limit.unwrap_or(self.cols);
        let mut rank = 0;
        for c in 0..limit {
            let Some(p) = (rank..self.rows).find(|&r| !self[(r, c)].is_zero()) else {
                continue;
            };
            self.swap_rows(p, rank);
            let inv = field.inv(self[(rank, c)]).expect("nonzero pivot");
            for cc in 0..self.cols {
                self[(rank, cc)] = field.mul(self[(rank, cc)], inv);
            }
            for r in 0..self.rows {
                let factor = self[(r, c)];
                if r == rank || factor.is_zero() {
                    continue;
                }
                for cc in 0..self.cols {
                    let v = field.mul(factor, self[(rank, cc)]);
                    self[(r, cc)] += v;
                }
            }
            rank += 1;
            if rank == self.rows {
                break;
            }
        }
        rank
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// Entries as lowercase hex, one row per line, comma separated.
    pub fn to_hex_csv(&self, width: usize) -> String {
        let mut out = String::new();
        for r in 0..self.rows {
            let row: Vec<String> =
                self.row(r).iter().map(|v| format!("{:0width$x}", v.0, width = width)).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = FieldElement;

    fn index(&self, (r, c): (usize, usize)) -> &FieldElement {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut FieldElement {
        &mut self.data[r * self.cols + c]
    }
}
