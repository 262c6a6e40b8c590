//! Kernels: positive, subunital, trace non-increasing linear maps on a block
//! algebra, stored as dense superoperators on vectorized operators.
//!
//! The superoperator `S` acts on the concatenated row-major block vector of an
//! operator; column `u` of `S` is the image of the `u`-th matrix unit.
//! Adjoints are taken with respect to the bilinear pairing `(a, b) ↦ τ(ab)`
//! with the algebra's own weights, so they depend on the weights.
//!
//! Kernels in finite dimension are automatically normal, so there is no
//! separate extension step from `L¹ ∩ M` to `M`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, NormKind, Operator};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, ONE, ZERO};

/// Default bound on the total dimension `Σ n_i` of an algebra carrying kernels.
pub const DEFAULT_DIM_CAP: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Kraus,
    Unitary,
    Stochastic,
    Composite,
    Brunel,
    Custom,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Kraus => "kraus",
            Provenance::Unitary => "unitary",
            Provenance::Stochastic => "stochastic",
            Provenance::Composite => "composite",
            Provenance::Brunel => "brunel",
            Provenance::Custom => "custom",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Kernel {
    algebra: Algebra,
    superoperator: Matrix,
    provenance: Provenance,
    kraus: Option<Vec<Operator>>,
}

pub fn check_dimension(a: &Algebra, cap: usize) -> Result<()> {
    if a.total_dim() > cap {
        return Err(Error::DimensionCap(format!("total dimension {} exceeds cap {cap}", a.total_dim())));
    }
    Ok(())
}

impl Kernel {
    /// Wraps a raw superoperator without any verification.
    pub fn from_superoperator(a: &Algebra, s: Matrix, provenance: Provenance) -> Result<Self> {
        let n = a.vec_dim();
        if s.rows() != n || s.cols() != n {
            return Err(Error::ShapeMismatch(format!("superoperator is {}x{}, expected {n}x{n}", s.rows(), s.cols())));
        }
        Ok(Self { algebra: a.clone(), superoperator: s, provenance, kraus: None })
    }

    /// Superoperator of an arbitrary linear map given on matrix units.
    pub fn from_map(a: &Algebra, provenance: Provenance, f: impl Fn(&Operator) -> Operator) -> Self {
        let n = a.vec_dim();
        let mut s = Matrix::zeros(n, n);
        for (u, (b, i, j)) in a.matrix_units().enumerate() {
            let img = f(&a.matrix_unit(b, i, j)).to_vec();
            for (r, v) in img.into_iter().enumerate() {
                s[(r, u)] = v;
            }
        }
        Self { algebra: a.clone(), superoperator: s, provenance, kraus: None }
    }

    pub fn identity(a: &Algebra) -> Self {
        Self { algebra: a.clone(), superoperator: Matrix::identity(a.vec_dim()), provenance: Provenance::Custom, kraus: None }
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn superoperator(&self) -> &Matrix {
        &self.superoperator
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn kraus_terms(&self) -> Option<&[Operator]> {
        self.kraus.as_deref()
    }

    pub fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = p;
        self
    }

    pub fn apply(&self, x: &Operator) -> Operator {
        assert!(x.algebra() == &self.algebra, "operator and kernel belong to different algebras");
        Operator::from_vec(&self.algebra, &self.superoperator.matvec(&x.to_vec())).expect("shape preserved")
    }

    pub fn apply_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.superoperator.matvec(v)
    }

    /// Checked application.
    pub fn try_apply(&self, x: &Operator) -> Result<Operator> {
        self.algebra.check_member(x)?;
        Ok(self.apply(x))
    }
}

fn kraus_superoperator(a: &Algebra, terms: &[Operator], scale: f64) -> Matrix {
    let n = a.vec_dim();
    let mut s = Matrix::zeros(n, n);
    for (b, blk) in a.blocks().iter().enumerate() {
        let off = a.vec_offset(b);
        let d = blk.dim;
        for k in terms {
            let kb = k.block(b);
            // (K E_ij K*)_{rs} = K_ri conj(K_sj)
            for i in 0..d {
                for j in 0..d {
                    let col = off + i * d + j;
                    for r in 0..d {
                        let kri = kb[(r, i)];
                        if kri == ZERO {
                            continue;
                        }
                        for t in 0..d {
                            s[(off + r * d + t, col)] += kri * kb[(t, j)].conj() * scale;
                        }
                    }
                }
            }
        }
    }
    s
}

/// `x ↦ Σ K x K*`, optionally rescaled so that `Σ K*K ≤ I` and `Σ KK* ≤ I`
/// with equality in norm for the larger of the two.
pub fn kernel_from_kraus(a: &Algebra, terms: &[Operator], renormalize: bool) -> Result<Kernel> {
    if terms.is_empty() {
        return Err(Error::EmptyKraus);
    }
    for t in terms {
        a.check_member(t)?;
    }
    let mut scale = 1.0;
    if renormalize {
        let mut left = a.zero();
        let mut right = a.zero();
        for k in terms {
            left = &left + &(&k.adjoint() * k);
            right = &right + &(k * &k.adjoint());
        }
        let m = left.norm(NormKind::Op).max(right.norm(NormKind::Op));
        if m == 0.0 {
            return Err(Error::ZeroKraus);
        }
        scale = 1.0 / m;
    }
    let s = kraus_superoperator(a, terms, scale);
    let kept: Vec<Operator> = terms.iter().map(|k| k.scale(scale.sqrt())).collect();
    Ok(Kernel { algebra: a.clone(), superoperator: s, provenance: Provenance::Kraus, kraus: Some(kept) })
}

/// `x ↦ U x U*` for a unitary on the ambient space `ℂ^{Σ n_i}` that maps the
/// algebra onto itself (block-diagonal, or permuting blocks of equal size).
pub fn kernel_from_unitary(a: &Algebra, u: &Matrix, tol: f64) -> Result<Kernel> {
    let n = a.total_dim();
    if u.rows() != n || u.cols() != n {
        return Err(Error::ShapeMismatch(format!("unitary is {}x{}, algebra has total dimension {n}", u.rows(), u.cols())));
    }
    let defect = (&(&u.adjoint() * u) - &Matrix::identity(n)).spectral_norm();
    if defect > tol {
        return Err(Error::NotUnitary { defect });
    }
    let ua = u.adjoint();
    let nv = a.vec_dim();
    let mut s = Matrix::zeros(nv, nv);
    let mut mass: f64 = 0.0;
    for (col, (b, i, j)) in a.matrix_units().enumerate() {
        let off = a.dim_offset(b);
        // U E_ij U* = u_i u_j^*, with u_k the k-th column of U.
        let img = Matrix::from_fn(n, n, |r, c| u[(r, off + i)] * ua[(off + j, c)]);
        let (x, lost) = a.compress(&img)?;
        mass = mass.max(lost);
        for (r, v) in x.to_vec().into_iter().enumerate() {
            s[(r, col)] = v;
        }
    }
    if mass > tol {
        return Err(Error::BlockViolation { mass });
    }
    let k = Kernel { algebra: a.clone(), superoperator: s, provenance: Provenance::Unitary, kraus: None };
    let tr = trace_nonincrease(&k);
    if tr < -tol {
        return Err(Error::TraceIncreasing { defect: -tr });
    }
    Ok(k)
}

/// Block-diagonal unitary given as an element of the algebra.
pub fn kernel_from_unitary_operator(u: &Operator, tol: f64) -> Result<Kernel> {
    let a = u.algebra().clone();
    let mut k = kernel_from_unitary(&a, &u.to_dense(), tol)?;
    k.kraus = Some(vec![u.clone()]);
    Ok(k)
}

/// Diagonal `x ↦ diag(P x)` on a commutative algebra.
pub fn kernel_from_stochastic(a: &Algebra, p: &Matrix, tol: f64) -> Result<Kernel> {
    if !a.is_commutative() {
        return Err(Error::InvalidAlgebra("stochastic kernels need an algebra of 1x1 blocks".into()));
    }
    let n = a.total_dim();
    if p.rows() != n || p.cols() != n {
        return Err(Error::ShapeMismatch(format!("matrix is {}x{}, algebra has dimension {n}", p.rows(), p.cols())));
    }
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            let v = p[(i, j)];
            if v.im != 0.0 || v.re < -tol {
                return Err(Error::NotSubstochastic(format!("entry ({i},{j}) = {v} is not a nonnegative real")));
            }
            row += v.re;
        }
        if row > 1.0 + tol {
            return Err(Error::NotSubstochastic(format!("row {i} sums to {row}")));
        }
    }
    let w: Vec<f64> = a.blocks().iter().map(|b| b.weight).collect();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let col: f64 = (0..n).map(|i| w[i] * p[(i, j)].re).sum();
        worst = worst.max(col - w[j]);
    }
    if worst > tol * w.iter().cloned().fold(0.0, f64::max) {
        return Err(Error::TraceIncreasing { defect: worst });
    }
    Ok(Kernel { algebra: a.clone(), superoperator: p.clone(), provenance: Provenance::Stochastic, kraus: None })
}

/// Index of the transposed matrix unit: `(b,i,j) ↦ (b,j,i)`.
fn swap_index(a: &Algebra) -> Vec<usize> {
    let mut idx = Vec::with_capacity(a.vec_dim());
    for (b, blk) in a.blocks().iter().enumerate() {
        let off = a.vec_offset(b);
        for i in 0..blk.dim {
            for j in 0..blk.dim {
                idx.push(off + j * blk.dim + i);
            }
        }
    }
    idx
}

/// Trace-pairing adjoint: `τ(α(a) b) = τ(a α*(b))`.
pub fn adjoint_kernel(k: &Kernel) -> Kernel {
    let a = &k.algebra;
    let w = a.coordinate_weights();
    let sw = swap_index(a);
    let s = &k.superoperator;
    // S* = G⁻¹ Sᵀ G with G the weighted swap.
    let adj = Matrix::from_fn(s.rows(), s.cols(), |u, v| s[(sw[v], sw[u])] * (w[v] / w[u]));
    let kraus = k.kraus.as_ref().map(|ts| ts.iter().map(Operator::adjoint).collect());
    Kernel { algebra: a.clone(), superoperator: adj, provenance: k.provenance, kraus }
}

/// Measured defects of the kernel axioms. Negative eigenvalue entries mean
/// the corresponding inequality fails by that much.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelReport {
    /// Smallest eigenvalue of `I − α(I)`.
    pub subunitality: f64,
    /// Smallest eigenvalue of `I − α*(I)`.
    pub trace_nonincrease: f64,
    /// Smallest eigenvalue over the Choi blocks.
    pub choi_min_eigenvalue: f64,
    /// `‖α(I) − I‖∞`.
    pub unital_defect: f64,
    /// `‖α*(I) − I‖∞`.
    pub trace_preservation_defect: f64,
}

impl KernelReport {
    pub fn is_kernel(&self, tol: f64) -> bool {
        self.subunitality >= -tol && self.trace_nonincrease >= -tol && self.choi_min_eigenvalue >= -tol
    }

    pub fn is_unital(&self, tol: f64) -> bool {
        self.unital_defect <= tol
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.trace_preservation_defect <= tol
    }

    pub fn summary(&self) -> String {
        format!(
            "subunitality {:.3e}, trace non-increase {:.3e}, choi {:.3e}, unital defect {:.3e}, trace-preservation defect {:.3e}",
            self.subunitality, self.trace_nonincrease, self.choi_min_eigenvalue, self.unital_defect, self.trace_preservation_defect
        )
    }
}

fn trace_nonincrease(k: &Kernel) -> f64 {
    let a = &k.algebra;
    let img = adjoint_kernel(k).apply(&a.identity());
    (&a.identity() - &img).hermitian_part().min_eigenvalue()
}

fn choi_min_eigenvalue(k: &Kernel) -> f64 {
    let a = &k.algebra;
    let s = &k.superoperator;
    let mut worst = f64::INFINITY;
    for (b, bb) in a.blocks().iter().enumerate() {
        for (c, cb) in a.blocks().iter().enumerate() {
            let (nb, nc) = (bb.dim, cb.dim);
            let (ob, oc) = (a.vec_offset(b), a.vec_offset(c));
            // C[(i,r),(j,t)] = α(E^b_ij)_c[r,t]
            let choi = Matrix::from_fn(nb * nc, nb * nc, |p, q| {
                let (i, r) = (p / nc, p % nc);
                let (j, t) = (q / nc, q % nc);
                s[(oc + r * nc + t, ob + i * nb + j)]
            });
            let h = choi.hermitian_part();
            let herm = (&choi - &h).spectral_norm();
            worst = worst.min(linalg::eigh(&h).values[0] - herm);
        }
    }
    worst
}

pub fn verify_kernel(k: &Kernel, _tol: f64) -> KernelReport {
    let a = &k.algebra;
    let id = a.identity();
    let up = k.apply(&id);
    let down = adjoint_kernel(k).apply(&id);
    KernelReport {
        subunitality: (&id - &up).hermitian_part().min_eigenvalue(),
        trace_nonincrease: (&id - &down).hermitian_part().min_eigenvalue(),
        choi_min_eigenvalue: choi_min_eigenvalue(k),
        unital_defect: (&up - &id).norm(NormKind::Op),
        trace_preservation_defect: (&down - &id).norm(NormKind::Op),
    }
}

/// Operator norm of a superoperator with respect to the weighted
/// Hilbert-Schmidt inner product `⟨x, y⟩ = τ(x* y)`.
pub fn superoperator_norm(a: &Algebra, s: &Matrix) -> f64 {
    let w: Vec<f64> = a.coordinate_weights().iter().map(|v| v.sqrt()).collect();
    let m = Matrix::from_fn(s.rows(), s.cols(), |i, j| s[(i, j)] * (w[i] / w[j]));
    m.spectral_norm()
}

pub fn commutation_defect(k1: &Kernel, k2: &Kernel) -> Result<f64> {
    if k1.algebra != k2.algebra {
        return Err(Error::AlgebraMismatch);
    }
    let c = k1.superoperator.commutator(&k2.superoperator);
    if c.max_abs() == 0.0 {
        return Ok(0.0);
    }
    Ok(superoperator_norm(&k1.algebra, &c))
}

/// `k1 ∘ k2`.
pub fn compose(k1: &Kernel, k2: &Kernel) -> Result<Kernel> {
    if k1.algebra != k2.algebra {
        return Err(Error::AlgebraMismatch);
    }
    Ok(Kernel {
        algebra: k1.algebra.clone(),
        superoperator: &k1.superoperator * &k2.superoperator,
        provenance: Provenance::Composite,
        kraus: None,
    })
}

/// `α^m(x)` by repeated application.
pub fn power_apply(k: &Kernel, x: &Operator, m: usize) -> Result<Operator> {
    k.algebra.check_member(x)?;
    let mut cur = x.to_vec();
    let mut next = vec![ZERO; cur.len()];
    for _ in 0..m {
        k.superoperator.matvec_into(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Operator::from_vec(&k.algebra, &cur)
}

/// Cyclic permutation matrix `e_i ↦ e_{i+1 mod n}`.
pub fn cyclic_shift(n: usize) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        m[((i + 1) % n, i)] = ONE;
    }
    m
}

/// Truncated shift `P_ij = 1` iff `j = i − 1`.
pub fn truncated_shift(n: usize) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = ONE;
    }
    m
}
