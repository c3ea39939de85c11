//! Dense exact-rational matrices.
//!
//! Convention throughout the crate: columns are indexed by input points and
//! rows by output points, so a state is a column and an effect is a row and
//! sequential composition `second ∘ first` is the product `second * first`.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{OptError, Result};
use crate::rational::{self, Rational};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Rational::one();
        }
        m
    }

    pub fn scalar(value: Rational) -> Self {
        Self {
            rows: 1,
            cols: 1,
            data: vec![value],
        }
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(OptError::ShapeMismatch("ragged matrix rows".into()));
        }
        Ok(Self {
            rows: nrows,
            cols: ncols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Convenience constructor from `(numerator, denominator)` pairs.
    pub fn from_ratios(rows: &[&[(i64, i64)]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&(p, q)| rational::ratio(p, q)).collect())
                .collect(),
        )
        .expect("rectangular literal")
    }

    pub fn from_ints(rows: &[&[i64]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&p| rational::int(p)).collect())
                .collect(),
        )
        .expect("rectangular literal")
    }

    pub fn column(values: Vec<Rational>) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values,
        }
    }

    pub fn row(values: Vec<Rational>) -> Self {
        Self {
            rows: 1,
            cols: values.len(),
            data: values,
        }
    }

    pub fn ones_row(n: usize) -> Self {
        Self::row(vec![Rational::one(); n])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, r: usize, c: usize) -> &Rational {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: Rational) {
        self.data[r * self.cols + c] = value;
    }

    pub fn entries(&self) -> &[Rational] {
        &self.data
    }

    pub fn row_vec(&self, r: usize) -> Vec<Rational> {
        self.data[r * self.cols..(r + 1) * self.cols].to_vec()
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        (0..self.rows).map(|r| self.row_vec(r)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c).clone());
            }
        }
        out
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(OptError::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.get(k, j);
                    if !b.is_zero() {
                        out.data[i * rhs.cols + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Kronecker product; the left factor indexes the major coordinate.
    pub fn kron(&self, rhs: &Matrix) -> Matrix {
        let (r, c) = (self.rows * rhs.rows, self.cols * rhs.cols);
        let mut out = Self::zeros(r, c);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a.is_zero() {
                    continue;
                }
                for k in 0..rhs.rows {
                    for l in 0..rhs.cols {
                        let b = rhs.get(k, l);
                        if !b.is_zero() {
                            out.set(i * rhs.rows + k, j * rhs.cols + l, a * b);
                        }
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.shape() != rhs.shape() {
            return Err(OptError::ShapeMismatch(format!(
                "cannot add {:?} and {:?}",
                self.shape(),
                rhs.shape()
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, rhs: &Matrix) -> Result<Matrix> {
        self.add(&rhs.scale(&-Rational::one()))
    }

    pub fn scale(&self, factor: &Rational) -> Matrix {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn column_sums(&self) -> Vec<Rational> {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self.get(r, c)).sum())
            .collect()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|a| !a.is_negative())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    /// Entrywise nonnegative with every column sum at most one.
    pub fn is_substochastic(&self) -> bool {
        self.is_nonnegative() && self.column_sums().iter().all(|s| *s <= Rational::one())
    }

    /// Entrywise nonnegative with every column sum exactly one.
    pub fn is_stochastic(&self) -> bool {
        self.is_nonnegative() && self.column_sums().iter().all(One::is_one)
    }

    /// Sum of a nonempty list of equally shaped matrices.
    pub fn sum<'a>(items: impl IntoIterator<Item = &'a Matrix>) -> Result<Matrix> {
        let mut iter = items.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| OptError::ShapeMismatch("empty sum".into()))?
            .clone();
        iter.try_fold(first, |acc, m| acc.add(m))
    }

    /// Exact rank by Gaussian elimination over the rationals.
    pub fn rank(&self) -> usize {
        row_echelon(self.to_rows()).len()
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| rational::to_f64(self.get(r, c))).collect())
            .collect()
    }

    pub fn to_string_rows(&self) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|r| {
                (0..self.cols)
                    .map(|c| rational::format_rational(self.get(r, c)))
                    .collect()
            })
            .collect()
    }
}

/// Nonzero rows of the reduced row echelon form of `rows`.
pub(crate) fn row_echelon(mut rows: Vec<Vec<Rational>>) -> Vec<Vec<Rational>> {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut pivot_row = 0;
    for col in 0..ncols {
        let Some(p) = (pivot_row..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(pivot_row, p);
        let inv = rows[pivot_row][col].recip();
        for v in rows[pivot_row].iter_mut() {
            *v *= &inv;
        }
        for r in 0..rows.len() {
            if r != pivot_row && !rows[r][col].is_zero() {
                let factor = rows[r][col].clone();
                for c in 0..ncols {
                    let delta = &factor * &rows[pivot_row][c];
                    rows[r][c] -= delta;
                }
            }
        }
        pivot_row += 1;
        if pivot_row == rows.len() {
            break;
        }
    }
    rows.truncate(pivot_row);
    rows
}

/// Basis of the right null space `{v : M v = 0}` of the given rows.
pub(crate) fn null_space(rows: &[Vec<Rational>], ncols: usize) -> Vec<Vec<Rational>> {
    let rref = row_echelon(rows.to_vec());
    let mut pivots = Vec::new();
    for row in &rref {
        if let Some(c) = row.iter().position(|v| !v.is_zero()) {
            pivots.push(c);
        }
    }
    let mut basis = Vec::new();
    for free in (0..ncols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![Rational::zero(); ncols];
        v[free] = Rational::one();
        for (row, &pc) in rref.iter().zip(&pivots) {
            v[pc] = -row[free].clone();
        }
        basis.push(v);
    }
    basis
}

/// One solution of `A x = b` (free variables set to zero), if consistent.
pub(crate) fn solve_linear(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let ncols = a.first().map_or(0, Vec::len);
    let augmented: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let rref = row_echelon(augmented);
    let mut x = vec![Rational::zero(); ncols];
    for row in &rref {
        let pc = row.iter().position(|v| !v.is_zero())?;
        if pc == ncols {
            return None;
        }
        x[pc] = row[ncols].clone();
    }
    Some(x)
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = (0..self.cols)
                .map(|c| rational::format_rational(self.get(r, c)))
                .collect();
            write!(f, "{}", row.join(" "))?;
        }
        write!(f, "]")
    }
}
