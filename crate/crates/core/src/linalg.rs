//! Dense Gaussian elimination over an exact field (the rationals or the
//! rational-function field).

use num_traits::{One, Zero};

use crate::coeffs::{Rational, RationalFunction};

pub trait Field: Clone + PartialEq + std::fmt::Debug {
    fn is_zero(&self) -> bool;
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    /// Division by a nonzero element.
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Pivot preference: lower is simpler.
    fn weight(&self) -> usize {
        0
    }
}

impl Field for Rational {
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn zero_like(&self) -> Self {
        Rational::zero()
    }
    fn one_like(&self) -> Self {
        Rational::one()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
}

impl Field for RationalFunction {
    fn is_zero(&self) -> bool {
        RationalFunction::is_zero(self)
    }
    fn zero_like(&self) -> Self {
        RationalFunction::zero(self.nvars())
    }
    fn one_like(&self) -> Self {
        RationalFunction::one(self.nvars())
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self.checked_div(o).expect("pivot is nonzero")
    }
    fn neg(&self) -> Self {
        -self
    }
    fn weight(&self) -> usize {
        self.numer().num_terms() + self.denom().num_terms()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
    zero: T,
}

impl<T: Field> Matrix<T> {
    pub fn filled(rows: usize, cols: usize, zero: T) -> Self {
        Matrix { rows, cols, data: vec![zero.clone(); rows * cols], zero }
    }

    pub fn identity(n: usize, zero: T) -> Self {
        let mut m = Self::filled(n, n, zero.clone());
        for i in 0..n {
            m[(i, i)] = zero.one_like();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>, zero: T) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix");
            data.extend(row);
        }
        Matrix { rows: r, cols: c, data, zero }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn zero_elem(&self) -> &T {
        &self.zero
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::filled(self.cols, self.rows, self.zero.clone());
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "shape mismatch");
        let mut out = Self::filled(self.rows, other.cols, self.zero.clone());
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] = out[(i, j)].add(&a.mul(b));
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "shape mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .fold(self.zero.clone(), |acc, (a, b)| acc.add(&a.mul(b)))
            })
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    let e = &self[(i, j)];
                    if i == j {
                        *e == self.zero.one_like()
                    } else {
                        e.is_zero()
                    }
                })
            })
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).filter(|&i| !m[(i, c)].is_zero()).min_by_key(|&i| m[(i, c)].weight()) else {
                continue;
            };
            m.swap_rows(r, p);
            let inv_scale = m[(r, c)].clone();
            for j in c..m.cols {
                if !m[(r, j)].is_zero() {
                    m[(r, j)] = m[(r, j)].div(&inv_scale);
                }
            }
            for i in 0..m.rows {
                if i == r || m[(i, c)].is_zero() {
                    continue;
                }
                let f = m[(i, c)].clone();
                for j in c..m.cols {
                    if !m[(r, j)].is_zero() {
                        let t = f.mul(&m[(r, j)]);
                        m[(i, j)] = m[(i, j)].sub(&t);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of `{v : self * v = 0}`, one vector per free column, in column
    /// order.
    pub fn nullspace(&self) -> Vec<Vec<T>> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![self.zero.clone(); self.cols];
                v[f] = self.zero.one_like();
                for (row, &pc) in pivots.iter().enumerate() {
                    v[pc] = r[(row, f)].neg();
                }
                v
            })
            .collect()
    }

    pub fn determinant(&self) -> T {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let mut m = self.clone();
        let n = self.rows;
        let mut det = self.zero.one_like();
        for c in 0..n {
            let Some(p) = (c..n).filter(|&i| !m[(i, c)].is_zero()).min_by_key(|&i| m[(i, c)].weight()) else {
                return self.zero.clone();
            };
            if p != c {
                m.swap_rows(p, c);
                det = det.neg();
            }
            let piv = m[(c, c)].clone();
            det = det.mul(&piv);
            for i in c + 1..n {
                if m[(i, c)].is_zero() {
                    continue;
                }
                let f = m[(i, c)].div(&piv);
                for j in c..n {
                    if !m[(c, j)].is_zero() {
                        let t = f.mul(&m[(c, j)]);
                        m[(i, j)] = m[(i, j)].sub(&t);
                    }
                }
            }
        }
        det
    }

    /// Inverse by Gauss-Jordan; `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let n = self.rows;
        let mut aug = Self::filled(n, 2 * n, self.zero.clone());
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = self.zero.one_like();
        }
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        let mut inv = Self::filled(n, n, self.zero.clone());
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] = r[(i, n + j)].clone();
            }
        }
        Some(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
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

/// Rank of a set of rational vectors.
pub fn rank_of(vectors: &[Vec<Rational>], dim: usize) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let rows: Vec<Vec<Rational>> = vectors.iter().map(|v| {
        assert_eq!(v.len(), dim);
        v.clone()
    }).collect();
    Matrix::from_rows(rows, Rational::zero()).rank()
}

/// Basis of the annihilator `{c : c . v = 0 for all v}` of a rational span.
pub fn annihilator(vectors: &[Vec<Rational>], dim: usize) -> Vec<Vec<Rational>> {
    if vectors.is_empty() {
        return (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
            .collect();
    }
    Matrix::from_rows(vectors.to_vec(), Rational::zero()).nullspace()
}

/// Row-reduced basis of a rational span.
pub fn span_basis(vectors: &[Vec<Rational>], dim: usize) -> Vec<Vec<Rational>> {
    if vectors.is_empty() {
        return Vec::new();
    }
    let (r, pivots) = Matrix::from_rows(vectors.to_vec(), Rational::zero()).rref();
    (0..pivots.len()).map(|i| r.row(i).to_vec()).inspect(|v| debug_assert_eq!(v.len(), dim)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{int, rat};

    fn m(rows: &[&[i64]]) -> Matrix<Rational> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect(), Rational::zero())
    }

    #[test]
    fn determinant_and_inverse() {
        let a = m(&[&[2, 1], &[1, 1]]);
        assert_eq!(a.determinant(), int(1));
        let inv = a.inverse().unwrap();
        assert!(a.mul(&inv).is_identity());
        assert!(m(&[&[1, 2], &[2, 4]]).inverse().is_none());
        assert_eq!(m(&[&[0, 1], &[1, 0]]).determinant(), int(-1));
    }

    #[test]
    fn nullspace_basis_by_free_columns() {
        let a = m(&[&[0, 0, 1, 0]]);
        let ns = a.nullspace();
        assert_eq!(ns.len(), 3);
        for v in &ns {
            assert!(a.mul_vec(v).iter().all(Field::is_zero));
        }
        assert_eq!(ns[0], vec![int(1), int(0), int(0), int(0)]);
    }

    #[test]
    fn rational_function_inverse() {
        let n = 1;
        let x = RationalFunction::var(0, n);
        let one = RationalFunction::one(n);
        let a = Matrix::from_rows(vec![vec![&one + &x, x.clone()], vec![RationalFunction::zero(n), one.clone()]], RationalFunction::zero(n));
        let inv = a.inverse().unwrap();
        assert!(a.mul(&inv).is_identity());
        assert_eq!(a.determinant(), &one + &x);
        let _ = rat(1, 2);
    }
}
