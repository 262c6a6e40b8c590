//! Dense complex matrices and the spectral routines everything else is built on.
//!
//! All eigen-decompositions go through a cyclic complex Jacobi solver for
//! Hermitian matrices. Normal matrices and commuting families are handled by
//! successive refinement of Hermitian eigenspaces, which keeps the whole crate
//! free of non-symmetric eigensolvers.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative off-diagonal Frobenius mass at which a Jacobi sweep loop stops.
pub const JACOBI_TOL: f64 = 1e-13;
/// Maximum number of cyclic sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Relative gap below which eigenvalues are merged into one cluster.
pub const CLUSTER_GAP: f64 = 1e-8;

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data. Panics if the length is wrong.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Self { rows, cols, data }
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        Self::from_fn(n, m, |i, j| Complex64::new(rows[i][j], 0.0))
    }

    pub fn diag(values: &[Complex64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn real_diag(values: &[f64]) -> Self {
        let v: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::diag(&v)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: Complex64, other: &Matrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Keeps the listed columns, in order.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        Matrix::from_fn(self.rows, cols.len(), |i, j| self[(i, cols[j])])
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![ZERO; self.rows];
        self.matvec_into(v, &mut out);
        out
    }

    pub fn matvec_into(&self, v: &[Complex64], out: &mut [Complex64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    pub fn hermitian_part(&self) -> Matrix {
        let mut h = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                h[(i, j)] = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
            }
        }
        h
    }

    /// `(self - self*) / 2i`, Hermitian.
    pub fn skew_part(&self) -> Matrix {
        let two_i = Complex64::new(0.0, 2.0);
        Matrix::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] - self[(j, i)].conj()) / two_i)
    }

    /// Max-abs entry of `self - self*`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                d = d.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        d
    }

    pub fn commutator(&self, other: &Matrix) -> Matrix {
        &(self * other) - &(other * self)
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        let gram = &self.adjoint() * self;
        eigh(&gram).values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
    }

    /// Singular values in descending order, computed from the Hermitian dilation
    /// so that small values keep absolute accuracy.
    pub fn singular_values(&self) -> Vec<f64> {
        let (m, n) = (self.rows, self.cols);
        let k = m.min(n);
        if k == 0 {
            return Vec::new();
        }
        let mut dil = Matrix::zeros(m + n, m + n);
        for i in 0..m {
            for j in 0..n {
                dil[(i, m + j)] = self[(i, j)];
                dil[(m + j, i)] = self[(i, j)].conj();
            }
        }
        let mut vals = eigh(&dil).values;
        vals.reverse();
        vals.truncate(k);
        vals.into_iter().map(|v| v.max(0.0)).collect()
    }

    pub fn nuclear_norm(&self) -> f64 {
        self.singular_values().iter().sum()
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::ShapeMismatch(format!("inverse of {}x{} matrix", self.rows, self.cols)));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for col in 0..n {
            let (piv, pmag) = (col..n)
                .map(|r| (r, a[(r, col)].norm()))
                .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmag <= 1e-14 * scale {
                return Err(Error::Singular);
            }
            if piv != col {
                for j in 0..n {
                    a.data.swap(piv * n + j, col * n + j);
                    inv.data.swap(piv * n + j, col * n + j);
                }
            }
            let d = ONE / a[(col, col)];
            for j in 0..n {
                a[(col, j)] *= d;
                inv[(col, j)] *= d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f == ZERO {
                    continue;
                }
                for j in 0..n {
                    let av = a[(col, j)];
                    let iv = inv[(col, j)];
                    a[(r, j)] -= f * av;
                    inv[(r, j)] -= f * iv;
                }
            }
        }
        Ok(inv)
    }

    /// Orthonormal basis (as columns) of the numerical null space: right singular
    /// vectors whose singular value is at most `tol`.
    pub fn null_space(&self, tol: f64) -> Matrix {
        let gram = &self.adjoint() * self;
        let e = eigh(&gram);
        let keep: Vec<usize> =
            e.values.iter().enumerate().filter(|(_, &v)| v.max(0.0).sqrt() <= tol).map(|(i, _)| i).collect();
        e.vectors.select_columns(&keep)
    }

    /// Repeated squaring.
    pub fn pow(&self, mut k: usize) -> Matrix {
        let mut base = self.clone();
        let mut acc = Matrix::identity(self.rows);
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let (n, m, p) = (self.rows, self.cols, rhs.cols);
        let mut out = Matrix::zeros(n, p);
        for i in 0..n {
            let orow = &mut out.data[i * p..(i + 1) * p];
            for k in 0..m {
                let a = self.data[i * m + k];
                if a == ZERO {
                    continue;
                }
                let brow = &rhs.data[k * p..(k + 1) * p];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self.scale_real(-1.0)
    }
}

impl AddAssign<&Matrix> for Matrix {
    fn add_assign(&mut self, rhs: &Matrix) {
        self.axpy(ONE, rhs);
    }
}

impl SubAssign<&Matrix> for Matrix {
    fn sub_assign(&mut self, rhs: &Matrix) {
        self.axpy(-ONE, rhs);
    }
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: Matrix,
    pub sweeps: usize,
}

/// Cyclic complex Jacobi on the Hermitian part of `a`.
pub fn eigh(a: &Matrix) -> Eigh {
    assert!(a.is_square(), "eigh needs a square matrix");
    let n = a.rows();
    let mut m = a.hermitian_part();
    let mut v = Matrix::identity(n);
    let fro = m.frobenius_norm();
    let target = JACOBI_TOL * fro;
    let mut sweeps = 0;
    if n > 1 && fro > 0.0 {
        while sweeps < JACOBI_MAX_SWEEPS {
            if off_diagonal_norm(&m) <= target {
                break;
            }
            sweeps += 1;
            for p in 0..n - 1 {
                for q in p + 1..n {
                    rotate(&mut m, &mut v, p, q);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = v.select_columns(&order);
    Eigh { values, vectors, sweeps }
}

fn off_diagonal_norm(m: &Matrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// One two-sided unitary rotation annihilating `m[p,q]`.
fn rotate(m: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let g = apq.norm();
    if g < 1e-300 {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let phase = apq / g;
    let tau = (aqq - app) / (2.0 * g);
    let t = if tau == 0.0 { 1.0 } else { tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt()) };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // W = diag(1, conj(phase)) * [[c, s], [-s, c]]
    let w00 = Complex64::new(c, 0.0);
    let w01 = Complex64::new(s, 0.0);
    let w10 = -phase.conj() * s;
    let w11 = phase.conj() * c;
    let n = m.rows();
    for k in 0..n {
        let (akp, akq) = (m[(k, p)], m[(k, q)]);
        m[(k, p)] = akp * w00 + akq * w10;
        m[(k, q)] = akp * w01 + akq * w11;
    }
    for k in 0..n {
        let (apk, aqk) = (m[(p, k)], m[(q, k)]);
        m[(p, k)] = w00.conj() * apk + w10.conj() * aqk;
        m[(q, k)] = w01.conj() * apk + w11.conj() * aqk;
    }
    m[(p, q)] = ZERO;
    m[(q, p)] = ZERO;
    m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);
    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = vkp * w00 + vkq * w10;
        v[(k, q)] = vkp * w01 + vkq * w11;
    }
}

/// Splits ascending values into runs whose consecutive gaps are at most `gap`.
pub fn cluster_sorted(values: &[f64], gap: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > gap {
            if i > start {
                out.push(start..i);
            }
            start = i;
        }
    }
    out
}

/// Single-linkage clustering of complex points at distance `gap`.
pub fn cluster_complex(points: &[Complex64], gap: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (points[i] - points[j]).norm() <= gap {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut label = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if label[r] == usize::MAX {
            label[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[label[r]].push(i);
    }
    groups
}

/// Common eigenbasis of mutually commuting Hermitian matrices.
///
/// Returns the basis as columns together with, for every column, the Rayleigh
/// quotient against each input. Eigenspaces are split one matrix at a time;
/// values closer than `rel_gap * scale` are kept together.
pub fn joint_eigenbasis(hermitians: &[Matrix], rel_gap: f64) -> (Matrix, Vec<Vec<f64>>) {
    assert!(!hermitians.is_empty());
    let n = hermitians[0].rows();
    let mut groups = vec![Matrix::identity(n)];
    for h in hermitians {
        let scale = h.frobenius_norm().max(f64::MIN_POSITIVE);
        let gap = rel_gap * scale;
        let mut next = Vec::with_capacity(groups.len());
        for g in &groups {
            let compressed = &(&g.adjoint() * h) * g;
            let e = eigh(&compressed);
            for r in cluster_sorted(&e.values, gap) {
                let cols: Vec<usize> = r.collect();
                next.push(g * &e.vectors.select_columns(&cols));
            }
        }
        groups = next;
    }
    let mut basis = Matrix::zeros(n, n);
    let mut col = 0;
    for g in &groups {
        for j in 0..g.cols() {
            for i in 0..n {
                basis[(i, col)] = g[(i, j)];
            }
            col += 1;
        }
    }
    let values = (0..n)
        .map(|j| {
            let v = basis.column(j);
            hermitians.iter().map(|h| rayleigh(h, &v).re).collect()
        })
        .collect();
    (basis, values)
}

pub(crate) fn rayleigh(h: &Matrix, v: &[Complex64]) -> Complex64 {
    let hv = h.matvec(v);
    v.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum()
}

/// Eigenvectors and complex eigenvalues of a normal matrix via the joint
/// eigenbasis of its Hermitian and skew-Hermitian parts.
pub fn eig_normal_matrix(x: &Matrix) -> (Matrix, Vec<Complex64>) {
    let re = x.hermitian_part();
    let im = x.skew_part();
    let (basis, vals) = joint_eigenbasis(&[re, im], CLUSTER_GAP);
    let eig = vals.iter().map(|v| Complex64::new(v[0], v[1])).collect();
    (basis, eig)
}

/// Outer product `sum_j v_j v_j^*` over the listed columns.
pub fn column_projector(basis: &Matrix, cols: &[usize]) -> Matrix {
    let n = basis.rows();
    Matrix::from_fn(n, n, |i, k| cols.iter().map(|&j| basis[(i, j)] * basis[(k, j)].conj()).sum())
}
