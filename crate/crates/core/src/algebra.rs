//! Finite direct sums of matrix algebras with a block-weighted trace.
//!
//! An [`Algebra`] is `M_{n_1} ⊕ … ⊕ M_{n_k}` together with strictly positive
//! weights `w_i`; its trace is `τ(x) = Σ w_i Tr(x_i)`. On a single matrix factor
//! every trace is a multiple of `Tr`, so non-uniform weights (the finite
//! analogue of a general faithful normal weight) need at least two blocks.
//!
//! In finite dimension every operator is bounded and "measurable": the space of
//! measurable operators and the measure topology both collapse to the algebra
//! itself with its norm topology, and all `L^p` spaces coincide as sets.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, CLUSTER_GAP, ONE};

/// One matrix factor `M_dim` with its trace weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub dim: usize,
    pub weight: f64,
}

#[derive(Debug)]
struct AlgebraInner {
    blocks: Vec<Block>,
    /// Start of each block in the vectorized coordinates.
    vec_offsets: Vec<usize>,
    /// Start of each block along the diagonal of the ambient `n x n` matrix.
    dim_offsets: Vec<usize>,
    total_dim: usize,
    vec_dim: usize,
}

/// Cheaply clonable handle to a block algebra.
#[derive(Clone)]
pub struct Algebra {
    inner: Arc<AlgebraInner>,
}

impl PartialEq for Algebra {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner.blocks == other.inner.blocks
    }
}

impl fmt::Debug for Algebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.blocks().iter().map(|b| format!("M{}[w={}]", b.dim, b.weight)).collect();
        write!(f, "Algebra({})", parts.join(" ⊕ "))
    }
}

impl Algebra {
    /// `make_algebra`: validates dimensions and weights.
    pub fn new(blocks: &[(usize, f64)]) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidAlgebra("no blocks".into()));
        }
        let mut bs = Vec::with_capacity(blocks.len());
        for &(dim, weight) in blocks {
            if dim == 0 {
                return Err(Error::InvalidAlgebra("block dimension must be at least 1".into()));
            }
            if !(weight > 0.0) || !weight.is_finite() {
                return Err(Error::InvalidAlgebra(format!("block weight must be positive and finite, got {weight}")));
            }
            bs.push(Block { dim, weight });
        }
        let mut vec_offsets = Vec::with_capacity(bs.len());
        let mut dim_offsets = Vec::with_capacity(bs.len());
        let (mut v, mut d) = (0, 0);
        for b in &bs {
            vec_offsets.push(v);
            dim_offsets.push(d);
            v += b.dim * b.dim;
            d += b.dim;
        }
        Ok(Self {
            inner: Arc::new(AlgebraInner { blocks: bs, vec_offsets, dim_offsets, total_dim: d, vec_dim: v }),
        })
    }

    /// Full matrix algebra `M_n` with the standard trace.
    pub fn full(n: usize) -> Result<Self> {
        Self::new(&[(n, 1.0)])
    }

    /// Commutative algebra `ℂ^n` (all blocks 1x1) with the given weights.
    pub fn diagonal(weights: &[f64]) -> Result<Self> {
        let blocks: Vec<(usize, f64)> = weights.iter().map(|&w| (1, w)).collect();
        Self::new(&blocks)
    }

    pub fn uniform_diagonal(n: usize) -> Result<Self> {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn blocks(&self) -> &[Block] {
        &self.inner.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.inner.blocks.len()
    }

    /// `n = Σ n_i`.
    pub fn total_dim(&self) -> usize {
        self.inner.total_dim
    }

    /// `N = Σ n_i²`, the length of a vectorized operator.
    pub fn vec_dim(&self) -> usize {
        self.inner.vec_dim
    }

    pub fn vec_offset(&self, block: usize) -> usize {
        self.inner.vec_offsets[block]
    }

    pub fn dim_offset(&self, block: usize) -> usize {
        self.inner.dim_offsets[block]
    }

    pub fn is_commutative(&self) -> bool {
        self.blocks().iter().all(|b| b.dim == 1)
    }

    /// `τ(I) = Σ w_i n_i`.
    pub fn trace_of_identity(&self) -> f64 {
        self.blocks().iter().map(|b| b.weight * b.dim as f64).sum()
    }

    /// Trace weight of every vectorized coordinate.
    pub fn coordinate_weights(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.vec_dim());
        for b in self.blocks() {
            w.extend(std::iter::repeat_n(b.weight, b.dim * b.dim));
        }
        w
    }

    /// Matrix units `(block, i, j)` in vectorization order.
    pub fn matrix_units(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.blocks()
            .iter()
            .enumerate()
            .flat_map(|(b, blk)| (0..blk.dim).flat_map(move |i| (0..blk.dim).map(move |j| (b, i, j))))
    }

    pub fn zero(&self) -> Operator {
        Operator {
            algebra: self.clone(),
            blocks: self.blocks().iter().map(|b| Matrix::zeros(b.dim, b.dim)).collect(),
        }
    }

    pub fn identity(&self) -> Operator {
        Operator { algebra: self.clone(), blocks: self.blocks().iter().map(|b| Matrix::identity(b.dim)).collect() }
    }

    pub fn matrix_unit(&self, block: usize, i: usize, j: usize) -> Operator {
        let mut x = self.zero();
        x.blocks[block][(i, j)] = ONE;
        x
    }

    /// Diagonal element of a commutative algebra, or the block-diagonal matrix
    /// with the given diagonal in general.
    pub fn diag(&self, values: &[f64]) -> Result<Operator> {
        if values.len() != self.total_dim() {
            return Err(Error::ShapeMismatch(format!("{} diagonal entries for total dimension {}", values.len(), self.total_dim())));
        }
        let mut x = self.zero();
        for (b, blk) in self.blocks().iter().enumerate() {
            let off = self.dim_offset(b);
            for i in 0..blk.dim {
                x.blocks[b][(i, i)] = Complex64::new(values[off + i], 0.0);
            }
        }
        Ok(x)
    }

    /// Cuts an ambient `n x n` matrix down to its block-diagonal part; also
    /// returns the Frobenius mass that was discarded.
    pub fn compress(&self, m: &Matrix) -> Result<(Operator, f64)> {
        let n = self.total_dim();
        if m.rows() != n || m.cols() != n {
            return Err(Error::ShapeMismatch(format!("{}x{} matrix for total dimension {n}", m.rows(), m.cols())));
        }
        let mut x = self.zero();
        let mut kept = 0.0;
        for (b, blk) in self.blocks().iter().enumerate() {
            let off = self.dim_offset(b);
            for i in 0..blk.dim {
                for j in 0..blk.dim {
                    let v = m[(off + i, off + j)];
                    kept += v.norm_sqr();
                    x.blocks[b][(i, j)] = v;
                }
            }
        }
        let total = m.frobenius_norm().powi(2);
        Ok((x, (total - kept).max(0.0).sqrt()))
    }

    pub fn check_member(&self, x: &Operator) -> Result<()> {
        if &x.algebra == self {
            Ok(())
        } else {
            Err(Error::AlgebraMismatch)
        }
    }
}

/// Which norm to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    /// Operator (uniform) norm: largest singular value over all blocks.
    Op,
    /// `τ(|x|)`.
    L1,
    /// `τ(x* x)^{1/2}`.
    L2,
}

/// Element of an [`Algebra`]: one square complex matrix per block.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    algebra: Algebra,
    blocks: Vec<Matrix>,
}

impl Operator {
    pub fn new(algebra: &Algebra, blocks: Vec<Matrix>) -> Result<Self> {
        if blocks.len() != algebra.num_blocks() {
            return Err(Error::ShapeMismatch(format!("{} blocks for an algebra with {}", blocks.len(), algebra.num_blocks())));
        }
        for (m, b) in blocks.iter().zip(algebra.blocks()) {
            if m.rows() != b.dim || m.cols() != b.dim {
                return Err(Error::ShapeMismatch(format!("{}x{} block where {}x{} expected", m.rows(), m.cols(), b.dim, b.dim)));
            }
        }
        Ok(Self { algebra: algebra.clone(), blocks })
    }

    /// Operator on a single-block algebra.
    pub fn from_matrix(algebra: &Algebra, m: Matrix) -> Result<Self> {
        Self::new(algebra, vec![m])
    }

    pub fn from_vec(algebra: &Algebra, v: &[Complex64]) -> Result<Self> {
        if v.len() != algebra.vec_dim() {
            return Err(Error::ShapeMismatch(format!("vector of length {} for vec_dim {}", v.len(), algebra.vec_dim())));
        }
        let blocks = algebra
            .blocks()
            .iter()
            .enumerate()
            .map(|(b, blk)| {
                let off = algebra.vec_offset(b);
                Matrix::from_vec(blk.dim, blk.dim, v[off..off + blk.dim * blk.dim].to_vec())
            })
            .collect();
        Ok(Self { algebra: algebra.clone(), blocks })
    }

    pub fn to_vec(&self) -> Vec<Complex64> {
        let mut v = Vec::with_capacity(self.algebra.vec_dim());
        for b in &self.blocks {
            v.extend_from_slice(b.as_slice());
        }
        v
    }

    /// Block-diagonal ambient matrix.
    pub fn to_dense(&self) -> Matrix {
        let n = self.algebra.total_dim();
        let mut m = Matrix::zeros(n, n);
        for (b, blk) in self.blocks.iter().enumerate() {
            let off = self.algebra.dim_offset(b);
            for i in 0..blk.rows() {
                for j in 0..blk.cols() {
                    m[(off + i, off + j)] = blk[(i, j)];
                }
            }
        }
        m
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn blocks(&self) -> &[Matrix] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &Matrix {
        &self.blocks[i]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut Matrix {
        &mut self.blocks[i]
    }

    fn map_blocks(&self, f: impl Fn(&Matrix) -> Matrix) -> Operator {
        Operator { algebra: self.algebra.clone(), blocks: self.blocks.iter().map(f).collect() }
    }

    fn zip_blocks(&self, other: &Operator, f: impl Fn(&Matrix, &Matrix) -> Matrix) -> Operator {
        assert!(self.algebra == other.algebra, "operators belong to different algebras");
        Operator {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn adjoint(&self) -> Operator {
        self.map_blocks(Matrix::adjoint)
    }

    pub fn scale(&self, s: f64) -> Operator {
        self.map_blocks(|m| m.scale_real(s))
    }

    pub fn scale_complex(&self, s: Complex64) -> Operator {
        self.map_blocks(|m| m.scale(s))
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &Operator) {
        assert!(self.algebra == other.algebra, "operators belong to different algebras");
        let s = Complex64::new(s, 0.0);
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            a.axpy(s, b);
        }
    }

    pub fn hermitian_part(&self) -> Operator {
        self.map_blocks(Matrix::hermitian_part)
    }

    /// `τ(x) = Σ w_i Tr(x_i)`.
    pub fn trace(&self) -> Complex64 {
        self.blocks.iter().zip(self.algebra.blocks()).map(|(m, b)| m.trace() * b.weight).sum()
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        let w = self.algebra.blocks();
        match kind {
            NormKind::Op => self.blocks.iter().map(Matrix::spectral_norm).fold(0.0, f64::max),
            NormKind::L1 => self
                .blocks
                .iter()
                .zip(w)
                .map(|(m, b)| {
                    let s = if m.hermitian_defect() == 0.0 {
                        linalg::eigh(m).values.iter().map(|v| v.abs()).sum()
                    } else {
                        m.nuclear_norm()
                    };
                    b.weight * s
                })
                .sum(),
            NormKind::L2 => self
                .blocks
                .iter()
                .zip(w)
                .map(|(m, b)| b.weight * m.frobenius_norm().powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Largest entry modulus over all blocks (cheap defect measure).
    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().map(Matrix::max_abs).fold(0.0, f64::max)
    }

    /// `‖x − x*‖∞`.
    pub fn hermitian_defect(&self) -> f64 {
        (self - &self.adjoint()).norm(NormKind::Op)
    }

    /// `‖x x* − x* x‖∞`.
    pub fn normal_defect(&self) -> f64 {
        let a = self.adjoint();
        (&(self * &a) - &(&a * self)).norm(NormKind::Op)
    }

    /// `‖x² − x‖∞` combined with the Hermitian defect.
    pub fn projection_defect(&self) -> f64 {
        (&(self * self) - self).norm(NormKind::Op).max(self.hermitian_defect())
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks.iter().map(|m| linalg::eigh(m).values[0]).fold(f64::INFINITY, f64::min)
    }

    /// Largest eigenvalue of the Hermitian part.
    pub fn max_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .map(|m| *linalg::eigh(m).values.last().expect("nonempty block"))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    pub fn is_positive(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && self.min_eigenvalue() >= -tol
    }

    pub fn is_projection(&self, tol: f64) -> bool {
        self.projection_defect() <= tol
    }

    /// Functional calculus `f(x)` for Hermitian `x`.
    pub fn apply_real_fn(&self, tol: f64, f: impl Fn(f64) -> f64) -> Result<Operator> {
        let defect = self.hermitian_defect();
        if defect > tol {
            return Err(Error::NotHermitian { defect });
        }
        Ok(self.map_blocks(|m| {
            let e = linalg::eigh(m);
            let fv: Vec<f64> = e.values.iter().map(|&v| f(v)).collect();
            &(&e.vectors * &Matrix::real_diag(&fv)) * &e.vectors.adjoint()
        }))
    }

    /// `|x| = (x* x)^{1/2}`.
    pub fn abs(&self) -> Operator {
        let g = &self.adjoint() * self;
        g.apply_real_fn(f64::INFINITY, |v| v.max(0.0).sqrt()).expect("Gram operator is Hermitian")
    }

    /// Maps vectorized coordinates through the ambient index: `(block, i, j)`.
    pub fn entry(&self, block: usize, i: usize, j: usize) -> Complex64 {
        self.blocks[block][(i, j)]
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.zip_blocks(rhs, |a, b| a + b)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.zip_blocks(rhs, |a, b| a - b)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.zip_blocks(rhs, |a, b| a * b)
    }
}

/// `trace(a, x)`, checking membership.
pub fn trace(a: &Algebra, x: &Operator) -> Result<Complex64> {
    a.check_member(x)?;
    Ok(x.trace())
}

/// Spectral resolution `x = Σ λ_i P_i` with mutually orthogonal `P_i` summing to `I`.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<Complex64>,
    pub projections: Vec<Operator>,
}

/// Measured defects of a [`SpectralDecomposition`] against its input.
#[derive(Clone, Copy, Debug, Default)]
pub struct SpectralDefects {
    pub completeness: f64,
    pub idempotence: f64,
    pub orthogonality: f64,
    pub reconstruction: f64,
}

impl SpectralDefects {
    pub fn max(&self) -> f64 {
        self.completeness.max(self.idempotence).max(self.orthogonality).max(self.reconstruction)
    }
}

impl SpectralDecomposition {
    pub fn reconstruct(&self) -> Operator {
        let alg = self.projections[0].algebra().clone();
        let mut acc = alg.zero();
        for (l, p) in self.eigenvalues.iter().zip(&self.projections) {
            acc = &acc + &p.scale_complex(*l);
        }
        acc
    }

    pub fn defects(&self, x: &Operator) -> SpectralDefects {
        let alg = x.algebra();
        let mut sum = alg.zero();
        let mut idem: f64 = 0.0;
        let mut orth: f64 = 0.0;
        for (i, p) in self.projections.iter().enumerate() {
            sum = &sum + p;
            idem = idem.max(p.projection_defect());
            for q in &self.projections[i + 1..] {
                orth = orth.max((p * q).norm(NormKind::Op));
            }
        }
        SpectralDefects {
            completeness: (&sum - &alg.identity()).norm(NormKind::Op),
            idempotence: idem,
            orthogonality: orth,
            reconstruction: (&self.reconstruct() - x).norm(NormKind::Op),
        }
    }

    /// Sum of the projections whose eigenvalue satisfies `pred`.
    pub fn projection_where(&self, pred: impl Fn(Complex64) -> bool) -> Operator {
        let alg = self.projections[0].algebra().clone();
        let mut acc = alg.zero();
        for (l, p) in self.eigenvalues.iter().zip(&self.projections) {
            if pred(*l) {
                acc = &acc + p;
            }
        }
        acc
    }
}

struct EigenVector {
    value: Complex64,
    block: usize,
    vector: Vec<Complex64>,
}

fn assemble(alg: &Algebra, vecs: Vec<EigenVector>, gap: f64) -> SpectralDecomposition {
    let points: Vec<Complex64> = vecs.iter().map(|e| e.value).collect();
    let mut groups = linalg::cluster_complex(&points, gap);
    groups.sort_by(|a, b| {
        let (x, y) = (points[a[0]], points[b[0]]);
        x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im))
    });
    let mut eigenvalues = Vec::with_capacity(groups.len());
    let mut projections = Vec::with_capacity(groups.len());
    for g in groups {
        let mean = g.iter().map(|&i| points[i]).sum::<Complex64>() / g.len() as f64;
        let mut p = alg.zero();
        for &i in &g {
            let e = &vecs[i];
            let m = p.block_mut(e.block);
            for r in 0..e.vector.len() {
                for c in 0..e.vector.len() {
                    m[(r, c)] += e.vector[r] * e.vector[c].conj();
                }
            }
        }
        eigenvalues.push(mean);
        projections.push(p);
    }
    SpectralDecomposition { eigenvalues, projections }
}

/// Spectral decomposition of a Hermitian operator (cyclic Jacobi per block).
pub fn eig_hermitian(x: &Operator, tol: f64) -> Result<SpectralDecomposition> {
    let defect = x.hermitian_defect();
    if defect > tol {
        return Err(Error::NotHermitian { defect });
    }
    let gap = CLUSTER_GAP * x.norm(NormKind::Op).max(f64::MIN_POSITIVE);
    let mut vecs = Vec::with_capacity(x.algebra().total_dim());
    for (b, m) in x.blocks().iter().enumerate() {
        let e = linalg::eigh(m);
        for (j, &v) in e.values.iter().enumerate() {
            vecs.push(EigenVector { value: Complex64::new(v, 0.0), block: b, vector: e.vectors.column(j) });
        }
    }
    Ok(assemble(x.algebra(), vecs, gap))
}

/// Spectral decomposition of a normal operator, from the joint eigenbasis of
/// its Hermitian and skew-Hermitian parts.
pub fn eig_normal(x: &Operator, tol: f64) -> Result<SpectralDecomposition> {
    let defect = x.normal_defect();
    if defect > tol {
        return Err(Error::NotNormal { defect });
    }
    let gap = CLUSTER_GAP * x.norm(NormKind::Op).max(f64::MIN_POSITIVE);
    let mut vecs = Vec::with_capacity(x.algebra().total_dim());
    for (b, m) in x.blocks().iter().enumerate() {
        let (basis, vals) = linalg::eig_normal_matrix(m);
        for (j, v) in vals.into_iter().enumerate() {
            vecs.push(EigenVector { value: v, block: b, vector: basis.column(j) });
        }
    }
    Ok(assemble(x.algebra(), vecs, gap))
}

/// Common eigenbasis of two commuting normal matrices.
#[derive(Clone, Debug)]
pub struct JointEigenbasis {
    /// Orthonormal eigenvectors as columns.
    pub basis: Matrix,
    /// `(λ, μ)` with `x v = λ v`, `y v = μ v` for each column `v`.
    pub pairs: Vec<(Complex64, Complex64)>,
}

impl JointEigenbasis {
    /// Orthogonal projection onto the span of the columns whose pair satisfies `pred`.
    pub fn projection_where(&self, pred: impl Fn(Complex64, Complex64) -> bool) -> Matrix {
        let cols: Vec<usize> = self.pairs.iter().enumerate().filter(|(_, (l, m))| pred(*l, *m)).map(|(i, _)| i).collect();
        linalg::column_projector(&self.basis, &cols)
    }
}

/// Simultaneous diagonalization of commuting normal matrices.
pub fn joint_diagonalize_matrices(x: &Matrix, y: &Matrix, tol: f64) -> Result<JointEigenbasis> {
    if !x.is_square() || x.rows() != y.rows() || !y.is_square() {
        return Err(Error::ShapeMismatch("joint diagonalization needs equal square matrices".into()));
    }
    for m in [x, y] {
        let defect = (&(m * &m.adjoint()) - &(&m.adjoint() * m)).spectral_norm();
        if defect > tol {
            return Err(Error::NotNormal { defect });
        }
    }
    let defect = x.commutator(y).spectral_norm();
    if defect > tol {
        return Err(Error::NotCommuting { defect });
    }
    let parts = [x.hermitian_part(), x.skew_part(), y.hermitian_part(), y.skew_part()];
    let (basis, vals) = linalg::joint_eigenbasis(&parts, CLUSTER_GAP);
    let pairs = vals.iter().map(|v| (Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3]))).collect();
    Ok(JointEigenbasis { basis, pairs })
}

/// Joint eigenbasis of two commuting normal operators, one basis per block.
pub fn joint_diagonalize(x: &Operator, y: &Operator, tol: f64) -> Result<Vec<JointEigenbasis>> {
    if x.algebra() != y.algebra() {
        return Err(Error::AlgebraMismatch);
    }
    x.blocks().iter().zip(y.blocks()).map(|(a, b)| joint_diagonalize_matrices(a, b, tol)).collect()
}

/// `B = C + D − E` with the norm and trace bounds tied to `t = τ(B²)^{1/2}`.
#[derive(Clone, Debug)]
pub struct PetzDecomposition {
    pub c: Operator,
    pub d: Operator,
    pub e: Operator,
    pub t: f64,
}

/// Slack of each decomposition bound (nonnegative when the bound holds).
#[derive(Clone, Copy, Debug)]
pub struct PetzSlacks {
    pub c_norm_vs_t: f64,
    pub trace_d_vs_t: f64,
    pub trace_e_vs_t: f64,
    pub c_norm_vs_b: f64,
    pub d_norm_vs_b: f64,
    pub e_norm_vs_b: f64,
    pub reconstruction: f64,
}

impl PetzSlacks {
    pub fn min_slack(&self) -> f64 {
        [self.c_norm_vs_t, self.trace_d_vs_t, self.trace_e_vs_t, self.c_norm_vs_b, self.d_norm_vs_b, self.e_norm_vs_b]
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }
}

impl PetzDecomposition {
    pub fn slacks(&self, b: &Operator) -> PetzSlacks {
        let bn = b.norm(NormKind::Op);
        let (cn, dn, en) = (self.c.norm(NormKind::Op), self.d.norm(NormKind::Op), self.e.norm(NormKind::Op));
        let rec = &(&self.c + &self.d) - &self.e;
        PetzSlacks {
            c_norm_vs_t: self.t - cn,
            trace_d_vs_t: self.t - self.d.trace().re,
            trace_e_vs_t: self.t - self.e.trace().re,
            c_norm_vs_b: bn - cn,
            d_norm_vs_b: bn - dn,
            e_norm_vs_b: bn - en,
            reconstruction: (&rec - b).norm(NormKind::Op),
        }
    }
}

/// Symmetric clipping at `t`: `C = clip(B, −t, t)`, `D = (B − t)₊`, `E = (−B − t)₊`.
pub fn petz_decompose(a: &Algebra, b: &Operator, tol: f64) -> Result<PetzDecomposition> {
    a.check_member(b)?;
    let defect = b.hermitian_defect();
    if defect > tol {
        return Err(Error::NotHermitian { defect });
    }
    let t = (b * b).trace().re.max(0.0).sqrt();
    if t == 0.0 {
        return Ok(PetzDecomposition { c: a.zero(), d: a.zero(), e: a.zero(), t });
    }
    let c = b.apply_real_fn(tol, |v| v.clamp(-t, t))?;
    let d = b.apply_real_fn(tol, |v| (v - t).max(0.0))?;
    let e = b.apply_real_fn(tol, |v| (-v - t).max(0.0))?;
    Ok(PetzDecomposition { c, d, e, t })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn make_algebra_examples() {
        let a = Algebra::new(&[(2, 1.0)]).unwrap();
        assert_eq!(a.total_dim(), 2);
        assert!((a.identity().trace().re - 2.0).abs() < 1e-15);

        let a = Algebra::new(&[(1, 0.01), (1, 1.0)]).unwrap();
        assert!(a.is_commutative());
        let x = a.diag(&[5.0, 1.0]).unwrap();
        assert!((trace(&a, &x).unwrap().re - 1.05).abs() < 1e-15);

        let a = Algebra::new(&[(3, 1.0), (2, 0.5)]).unwrap();
        assert_eq!(a.vec_dim(), 13);
        assert!((a.trace_of_identity() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn make_algebra_rejects_bad_blocks() {
        assert!(matches!(Algebra::new(&[(0, 1.0)]), Err(Error::InvalidAlgebra(_))));
        assert!(matches!(Algebra::new(&[(2, 0.0)]), Err(Error::InvalidAlgebra(_))));
        assert!(matches!(Algebra::new(&[(2, -1.0)]), Err(Error::InvalidAlgebra(_))));
        assert!(matches!(Algebra::new(&[]), Err(Error::InvalidAlgebra(_))));
    }

    #[test]
    fn trace_rejects_foreign_operator() {
        let a = Algebra::full(2).unwrap();
        let b = Algebra::full(3).unwrap();
        assert!(matches!(trace(&a, &b.identity()), Err(Error::AlgebraMismatch)));
    }

    #[test]
    fn norm_examples() {
        let a = Algebra::full(2).unwrap();
        let x = a.diag(&[3.0, -4.0]).unwrap();
        assert!((x.norm(NormKind::Op) - 4.0).abs() < 1e-12);
        assert!((x.norm(NormKind::L1) - 7.0).abs() < 1e-12);
        assert!((x.norm(NormKind::L2) - 5.0).abs() < 1e-12);
        let z = a.zero();
        for k in [NormKind::Op, NormKind::L1, NormKind::L2] {
            assert_eq!(z.norm(k), 0.0);
        }
    }

    #[test]
    fn eig_hermitian_examples() {
        let a = Algebra::full(3).unwrap();
        let x = a.diag(&[1.0, 2.0, 3.0]).unwrap();
        let s = eig_hermitian(&x, 1e-12).unwrap();
        let ev: Vec<f64> = s.eigenvalues.iter().map(|z| z.re).collect();
        assert_eq!(ev.len(), 3);
        for (got, want) in ev.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        for (k, p) in s.projections.iter().enumerate() {
            assert!((&*p - &a.matrix_unit(0, k, k)).max_abs() < 1e-14);
        }

        let a2 = Algebra::full(2).unwrap();
        let flip = Operator::from_matrix(&a2, Matrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]])).unwrap();
        let s = eig_hermitian(&flip, 1e-12).unwrap();
        assert!((s.eigenvalues[0].re + 1.0).abs() < 1e-14 && (s.eigenvalues[1].re - 1.0).abs() < 1e-14);
        assert!(s.defects(&flip).max() < 1e-13);
    }

    #[test]
    fn eig_hermitian_rejects_non_hermitian() {
        let a = Algebra::full(2).unwrap();
        let x = Operator::from_matrix(&a, Matrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]])).unwrap();
        assert!(matches!(eig_hermitian(&x, 1e-10), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn degenerate_eigenvalues_merge_across_blocks() {
        let a = Algebra::new(&[(2, 1.0), (1, 0.3)]).unwrap();
        let x = a.diag(&[1.0, 2.0, 1.0 + 1e-12]).unwrap();
        let s = eig_hermitian(&x, 1e-12).unwrap();
        assert_eq!(s.eigenvalues.len(), 2);
        assert!((s.projections[0].trace().re - 1.3).abs() < 1e-12);
    }

    #[test]
    fn eig_normal_unitary_diag() {
        let a = Algebra::full(2).unwrap();
        let u = Operator::from_matrix(&a, Matrix::diag(&[c(0.0, 1.0), c(0.0, -1.0)])).unwrap();
        let s = eig_normal(&u, 1e-12).unwrap();
        assert_eq!(s.eigenvalues.len(), 2);
        assert!((s.eigenvalues[0] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((s.eigenvalues[1] - c(0.0, 1.0)).norm() < 1e-14);
        assert!(s.defects(&u).max() < 1e-13);
    }

    #[test]
    fn eig_normal_rejects_jordan_block() {
        let a = Algebra::full(2).unwrap();
        let x = Operator::from_matrix(&a, Matrix::from_real_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]])).unwrap();
        assert!(matches!(eig_normal(&x, 1e-10), Err(Error::NotNormal { .. })));
    }

    #[test]
    fn joint_diagonalize_diagonal_and_equal() {
        let x = Matrix::real_diag(&[1.0, 2.0, 3.0]);
        let y = Matrix::real_diag(&[5.0, 5.0, 7.0]);
        let j = joint_diagonalize_matrices(&x, &y, 1e-12).unwrap();
        let mut pairs: Vec<(f64, f64)> = j.pairs.iter().map(|(l, m)| (l.re, m.re)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(pairs, vec![(1.0, 5.0), (2.0, 5.0), (3.0, 7.0)]);
        for j2 in 0..3 {
            let v = j.basis.column(j2);
            assert_eq!(v.iter().filter(|z| z.norm() > 1e-12).count(), 1);
        }

        let j = joint_diagonalize_matrices(&x, &x, 1e-12).unwrap();
        assert!(j.pairs.iter().all(|(l, m)| (l - m).norm() < 1e-13));
    }

    #[test]
    fn joint_diagonalize_rejects_noncommuting() {
        let x = Matrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let z = Matrix::real_diag(&[1.0, -1.0]);
        assert!(matches!(joint_diagonalize_matrices(&x, &z, 1e-10), Err(Error::NotCommuting { .. })));
    }

    #[test]
    fn petz_no_clipping_when_t_dominates() {
        let a = Algebra::uniform_diagonal(2).unwrap();
        let b = a.diag(&[1.0, -1.0]).unwrap();
        let p = petz_decompose(&a, &b, 1e-12).unwrap();
        assert!((p.t - 2f64.sqrt()).abs() < 1e-14);
        assert!((&p.c - &b).max_abs() < 1e-14);
        assert!(p.d.max_abs() < 1e-14 && p.e.max_abs() < 1e-14);
    }

    #[test]
    fn petz_weighted_clipping() {
        let a = Algebra::new(&[(1, 0.01), (1, 1.0)]).unwrap();
        let b = a.diag(&[5.0, 1.0]).unwrap();
        let p = petz_decompose(&a, &b, 1e-12).unwrap();
        let t = 1.25f64.sqrt();
        assert!((p.t - t).abs() < 1e-14);
        assert!((p.c.entry(0, 0, 0).re - t).abs() < 1e-13);
        assert!((p.c.entry(1, 0, 0).re - 1.0).abs() < 1e-13);
        assert!((p.d.entry(0, 0, 0).re - (5.0 - t)).abs() < 1e-13);
        assert!(p.d.entry(1, 0, 0).norm() < 1e-13);
        assert!(p.e.max_abs() < 1e-14);
        assert!((p.d.trace().re - 0.01 * (5.0 - t)).abs() < 1e-14);
        assert!((p.d.trace().re - 0.0388).abs() < 1e-4);
        let s = p.slacks(&b);
        assert!(s.min_slack() >= 0.0 && s.reconstruction < 1e-13);
    }

    #[test]
    fn petz_zero() {
        let a = Algebra::full(2).unwrap();
        let p = petz_decompose(&a, &a.zero(), 1e-12).unwrap();
        assert_eq!(p.t, 0.0);
        assert_eq!(p.c.max_abs() + p.d.max_abs() + p.e.max_abs(), 0.0);
    }

    #[test]
    fn compress_reports_off_block_mass() {
        let a = Algebra::uniform_diagonal(2).unwrap();
        let m = Matrix::from_real_rows(&[vec![1.0, 3.0], vec![4.0, 2.0]]);
        let (x, mass) = a.compress(&m).unwrap();
        assert!((mass - 5.0).abs() < 1e-12);
        assert_eq!(x.entry(1, 0, 0).re, 2.0);
    }
}
