//! Dense exact linear algebra over a `Coefficient` field, plus an integer
//! image test used for lattice maps.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::ring::Coefficient;

/// Row-major dense matrix. Zero rows or columns are allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Coefficient> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Build from rows. All rows must have length `cols`.
    pub fn from_rows(rows: usize, cols: usize, v: Vec<Vec<T>>) -> Self {
        assert_eq!(v.len(), rows);
        let mut data = Vec::with_capacity(rows * cols);
        for r in v {
            assert_eq!(r.len(), cols);
            data.extend(r);
        }
        Matrix { rows, cols, data }
    }

    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn from_cols(rows: usize, cols: &[Vec<T>]) -> Self {
        let mut m = Self::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows);
            for i in 0..rows {
                m[(i, j)] = c[i].clone();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows, "matrix product shape mismatch");
        let mut p = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let v = p[(i, j)].clone() + a.clone() * o[(k, j)].clone();
                    p[(i, j)] = v;
                }
            }
        }
        p
    }

    pub fn scale(&self, c: &T) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.clone() * c.clone()).collect(),
        }
    }

    /// `[self | o]`
    pub fn hcat(&self, o: &Self) -> Self {
        assert_eq!(self.rows, o.rows);
        let mut m = Self::zeros(self.rows, self.cols + o.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] = self[(i, j)].clone();
            }
            for j in 0..o.cols {
                m[(i, self.cols + j)] = o[(i, j)].clone();
            }
        }
        m
    }

    /// `[self ; o]`
    pub fn vcat(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.cols);
        let mut data = self.data.clone();
        data.extend(o.data.iter().cloned());
        Matrix { rows: self.rows + o.rows, cols: self.cols, data }
    }

    /// Block diagonal `diag(self, o)`.
    pub fn block_diag(&self, o: &Self) -> Self {
        let mut m = Self::zeros(self.rows + o.rows, self.cols + o.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] = self[(i, j)].clone();
            }
        }
        for i in 0..o.rows {
            for j in 0..o.cols {
                m[(self.rows + i, self.cols + j)] = o[(i, j)].clone();
            }
        }
        m
    }

    /// Columns `range` of the matrix.
    pub fn col_range(&self, from: usize, to: usize) -> Self {
        let cols: Vec<Vec<T>> = (from..to).map(|j| self.col(j)).collect();
        Self::from_cols(self.rows, &cols)
    }

    /// Rows `from..to` of the matrix.
    pub fn row_range(&self, from: usize, to: usize) -> Self {
        Matrix {
            rows: to - from,
            cols: self.cols,
            data: self.data[from * self.cols..to * self.cols].to_vec(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    /// Bring to reduced row echelon form in place; returns the pivot columns.
    pub fn rref_in_place(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| self[(i, c)].inv().is_some()) else {
                continue;
            };
            self.swap_rows(r, p);
            let inv = self[(r, c)].inv().unwrap();
            for j in 0..self.cols {
                let v = self[(r, j)].clone() * inv.clone();
                self[(r, j)] = v;
            }
            for i in 0..self.rows {
                if i != r && !self[(i, c)].is_zero() {
                    let f = self[(i, c)].clone();
                    for j in 0..self.cols {
                        let v = self[(i, j)].clone() - f.clone() * self[(r, j)].clone();
                        self[(i, j)] = v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.clone().rref_in_place().len()
    }

    /// Determinant by elimination. Requires a field (nonzero pivots must be units).
    pub fn det(&self) -> T {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut d = T::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !a[(i, c)].is_zero()) else {
                return T::zero();
            };
            if p != c {
                a.swap_rows(p, c);
                d = -d;
            }
            let piv = a[(c, c)].clone();
            let inv = piv.inv().expect("determinant needs invertible pivots");
            d = d * piv;
            for i in c + 1..n {
                if a[(i, c)].is_zero() {
                    continue;
                }
                let f = a[(i, c)].clone() * inv.clone();
                for j in c..n {
                    let v = a[(i, j)].clone() - f.clone() * a[(c, j)].clone();
                    a[(i, j)] = v;
                }
            }
        }
        d
    }

    /// Basis of the right kernel, as the columns of the returned matrix.
    pub fn kernel(&self) -> Self {
        let mut r = self.clone();
        let pivots = r.rref_in_place();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = Vec::new();
        for &f in &free {
            let mut v = vec![T::zero(); self.cols];
            v[f] = T::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -r[(row, f)].clone();
            }
            basis.push(v);
        }
        Self::from_cols(self.cols, &basis)
    }

    /// Some `x` with `self * x = b`, if one exists.
    pub fn solve(&self, b: &[T]) -> Option<Vec<T>> {
        assert_eq!(b.len(), self.rows);
        let rhs = Self::from_cols(self.rows, &[b.to_vec()]);
        let mut aug = self.hcat(&rhs);
        let pivots = aug.rref_in_place();
        if pivots.contains(&self.cols) {
            return None;
        }
        let mut x = vec![T::zero(); self.cols];
        for (row, &pc) in pivots.iter().enumerate() {
            x[pc] = aug[(row, self.cols)].clone();
        }
        Some(x)
    }

    /// A right inverse `s` with `self * s = I`, if `self` has full row rank.
    pub fn right_inverse(&self) -> Option<Self> {
        let mut cols = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut e = vec![T::zero(); self.rows];
            e[i] = T::one();
            cols.push(self.solve(&e)?);
        }
        Some(Self::from_cols(self.cols, &cols))
    }

    pub fn inverse(&self) -> Option<Self> {
        if self.rows != self.cols {
            return None;
        }
        let s = self.right_inverse()?;
        Some(s)
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Whether `b` lies in the integer column span of `a` (`a` is `rows x cols`,
/// given row-major).
///
/// Reduces `a` to a column echelon form by unimodular column operations,
/// then peels `b` off pivot by pivot.
pub fn in_integer_image(a: &[Vec<BigInt>], cols: usize, b: &[BigInt]) -> bool {
    let rows = a.len();
    assert_eq!(b.len(), rows);
    let mut m: Vec<Vec<BigInt>> = a.to_vec();
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, col)
    let mut next_col = 0;
    for r in 0..rows {
        if next_col == cols {
            break;
        }
        // gcd-reduce the entries of row r in columns next_col.. into next_col
        loop {
            let nz: Vec<usize> = (next_col..cols).filter(|&j| !m[r][j].is_zero()).collect();
            if nz.is_empty() {
                break;
            }
            let jmin = *nz.iter().min_by_key(|&&j| m[r][j].abs()).unwrap();
            swap_cols(&mut m, next_col, jmin);
            if nz.len() == 1 {
                break;
            }
            for j in next_col + 1..cols {
                if m[r][j].is_zero() {
                    continue;
                }
                let f = m[r][j].div_floor(&m[r][next_col]);
                for row in m.iter_mut() {
                    let v = &row[j] - &f * &row[next_col];
                    row[j] = v;
                }
            }
        }
        if !m[r][next_col].is_zero() {
            pivots.push((r, next_col));
            next_col += 1;
        }
    }
    let mut res: Vec<BigInt> = b.to_vec();
    for &(pr, pc) in &pivots {
        if res[..pr].iter().any(|x| !x.is_zero()) {
            return false;
        }
        let (y, rem) = res[pr].div_rem(&m[pr][pc]);
        if !rem.is_zero() {
            return false;
        }
        for i in 0..rows {
            let v = &res[i] - &y * &m[i][pc];
            res[i] = v;
        }
    }
    res.iter().all(|x| x.is_zero())
}

fn swap_cols(m: &mut [Vec<BigInt>], a: usize, b: usize) {
    if a != b {
        for row in m.iter_mut() {
            row.swap(a, b);
        }
    }
}
