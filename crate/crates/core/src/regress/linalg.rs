//! Small dense linear algebra for regression: a row-major matrix and a
//! Householder QR that detects (and optionally skips) aliased columns.

use std::ops::{Index, IndexMut};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Matrix::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged rows");
            m.row_mut(i).copy_from_slice(r);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            for (k, &j) in cols.iter().enumerate() {
                m[(i, k)] = self[(i, j)];
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    /// `v' M v`
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        dot(v, &self.mul_vec(v))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Relative residual norm below which a column counts as a linear
/// combination of the columns before it.
const ALIAS_TOL: f64 = 1e-9;

/// Thin QR factorization `X[:, kept] = Q R` by Householder reflections.
#[derive(Debug, Clone)]
pub struct Qr {
    n: usize,
    /// Reflector vectors, each of length `n - step` (stored from row `step` down).
    reflectors: Vec<Vec<f64>>,
    /// Upper-triangular `rank x rank` factor.
    r: Matrix,
    /// Indices of the input columns that were kept, in order.
    pub kept: Vec<usize>,
    /// Indices of input columns found to be linear combinations of earlier columns.
    pub aliased: Vec<usize>,
}

impl Qr {
    pub fn new(x: &Matrix) -> Qr {
        let n = x.rows();
        let mut reflectors: Vec<Vec<f64>> = Vec::new();
        let mut r_cols: Vec<Vec<f64>> = Vec::new();
        let mut kept = Vec::new();
        let mut aliased = Vec::new();
        for j in 0..x.cols() {
            let mut col = x.column(j);
            let original = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            for (step, v) in reflectors.iter().enumerate() {
                apply_reflector(v, &mut col[step..]);
            }
            let step = reflectors.len();
            if step >= n {
                aliased.push(j);
                continue;
            }
            let tail = &col[step..];
            let norm = tail.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm <= ALIAS_TOL * original.max(f64::MIN_POSITIVE) || original == 0.0 {
                aliased.push(j);
                continue;
            }
            let alpha = if tail[0] > 0.0 { -norm } else { norm };
            let mut v = tail.to_vec();
            v[0] -= alpha;
            let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= vnorm);
            let mut rc = col[..step].to_vec();
            rc.push(alpha);
            r_cols.push(rc);
            reflectors.push(v);
            kept.push(j);
        }
        let rank = kept.len();
        let mut r = Matrix::zeros(rank, rank);
        for (j, rc) in r_cols.iter().enumerate() {
            for (i, &v) in rc.iter().enumerate() {
                r[(i, j)] = v;
            }
        }
        Qr {
            n,
            reflectors,
            r,
            kept,
            aliased,
        }
    }

    pub fn rank(&self) -> usize {
        self.kept.len()
    }

    /// `Q' y`, first `rank` entries.
    pub fn qt_mul(&self, y: &[f64]) -> Vec<f64> {
        let mut y = y.to_vec();
        for (step, v) in self.reflectors.iter().enumerate() {
            apply_reflector(v, &mut y[step..]);
        }
        y.truncate(self.rank());
        y
    }

    /// Least-squares coefficients for the kept columns.
    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        let qty = self.qt_mul(y);
        self.back_substitute(&qty)
    }

    fn back_substitute(&self, b: &[f64]) -> Vec<f64> {
        let k = self.rank();
        let mut x = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = ((i + 1)..k).map(|j| self.r[(i, j)] * x[j]).sum();
            x[i] = (b[i] - s) / self.r[(i, i)];
        }
        x
    }

    /// `(X'X)^-1 = R^-1 R^-T` over the kept columns.
    pub fn xtx_inverse(&self) -> Matrix {
        let k = self.rank();
        let mut rinv = Matrix::zeros(k, k);
        for c in 0..k {
            let mut e = vec![0.0; k];
            e[c] = 1.0;
            let col = self.back_substitute(&e);
            for i in 0..k {
                rinv[(i, c)] = col[i];
            }
        }
        rinv.mul(&rinv.transpose())
    }

    /// Diagonal of the hat matrix: squared row norms of the thin `Q`.
    pub fn leverages(&self) -> Vec<f64> {
        let k = self.rank();
        let mut h = vec![0.0; self.n];
        for c in 0..k {
            let mut e = vec![0.0; self.n];
            e[c] = 1.0;
            for (step, v) in self.reflectors.iter().enumerate().rev() {
                apply_reflector(v, &mut e[step..]);
            }
            for (hi, qi) in h.iter_mut().zip(&e) {
                *hi += qi * qi;
            }
        }
        h
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix,
/// or `None` if a pivot is not positive.
pub fn cholesky(a: &Matrix) -> Option<Matrix> {
    let k = a.rows();
    let mut l = Matrix::zeros(k, k);
    for j in 0..k {
        let d = a[(j, j)] - (0..j).map(|m| l[(j, m)] * l[(j, m)]).sum::<f64>();
        if !d.is_finite() || d <= 0.0 {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..k {
            let s = a[(i, j)] - (0..j).map(|m| l[(i, m)] * l[(j, m)]).sum::<f64>();
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

/// Solves `L L' x = b`.
pub fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let k = l.rows();
    let mut y = vec![0.0; k];
    for i in 0..k {
        let s: f64 = (0..i).map(|j| l[(i, j)] * y[j]).sum();
        y[i] = (b[i] - s) / l[(i, i)];
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = ((i + 1)..k).map(|j| l[(j, i)] * x[j]).sum();
        x[i] = (y[i] - s) / l[(i, i)];
    }
    x
}

/// `(L L')^-1`
pub fn cholesky_inverse(l: &Matrix) -> Matrix {
    let k = l.rows();
    let mut inv = Matrix::zeros(k, k);
    for c in 0..k {
        let mut e = vec![0.0; k];
        e[c] = 1.0;
        let col = cholesky_solve(l, &e);
        for i in 0..k {
            inv[(i, c)] = col[i];
        }
    }
    inv
}

fn apply_reflector(v: &[f64], x: &mut [f64]) {
    let s = 2.0 * dot(v, x);
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= s * vi;
    }
}
