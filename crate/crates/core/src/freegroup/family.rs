//! Two-parameter recurrence families `σ_{m,n}` and their rectangle averages.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::{commutation_defect, superoperator_norm, verify_kernel, Kernel, KernelReport, Provenance};
use crate::linalg::Matrix;

use super::recurrence::check_p;

/// Left multiplication recurrence shared by superoperators, vectors and
/// Hilbert-space operators:
///
/// `x_{0,0} = start`, `x_{1,0} = b10 x_{0,0}`,
/// `x_{m+1,0} = (b10 x_{m,0} − (1 − p1) x_{m−1,0}) / p1`,
/// `x_{m,1} = b01 x_{m,0}`,
/// `x_{m,n+1} = (b01 x_{m,n} − (1 − p2) x_{m,n−1}) / p2`.
#[derive(Clone, Copy, Debug)]
pub struct Recurrence<'a> {
    pub b10: &'a Matrix,
    pub b01: &'a Matrix,
    pub p1: f64,
    pub p2: f64,
}

fn step(b: &Matrix, p: f64, cur: &Matrix, prev: &Matrix) -> Matrix {
    let bx = b * cur;
    if p == 1.0 {
        bx
    } else {
        (&bx - &prev.scale_real(1.0 - p)).scale_real(1.0 / p)
    }
}

impl Recurrence<'_> {
    /// Column `x_{m,0}, …, x_{m,n_max}` from `x_{m,0}`.
    pub fn column(&self, xm0: &Matrix, n_max: usize) -> Vec<Matrix> {
        let mut col = Vec::with_capacity(n_max + 1);
        col.push(xm0.clone());
        if n_max >= 1 {
            col.push(self.b01 * xm0);
        }
        for n in 1..n_max {
            let next = step(self.b01, self.p2, &col[n], &col[n - 1]);
            col.push(next);
        }
        col
    }

    /// Row `x_{0,0}, …, x_{m_max,0}`.
    pub fn row(&self, start: &Matrix, m_max: usize) -> Vec<Matrix> {
        let mut row = Vec::with_capacity(m_max + 1);
        row.push(start.clone());
        if m_max >= 1 {
            row.push(self.b10 * start);
        }
        for m in 1..m_max {
            let next = step(self.b10, self.p1, &row[m], &row[m - 1]);
            row.push(next);
        }
        row
    }

    /// `(k1 k2)⁻¹ Σ_{m<k1, n<k2} x_{m,n}` for every `(k1, k2)` in `axis1 × axis2`
    /// (both strictly increasing). Only two rows of the recurrence are live at a time.
    pub fn rectangle_averages(&self, start: &Matrix, axis1: &[usize], axis2: &[usize]) -> Vec<((usize, usize), Matrix)> {
        let (Some(&k1max), Some(&k2max)) = (axis1.last(), axis2.last()) else {
            return Vec::new();
        };
        let (r, c) = (start.rows(), start.cols());
        let mut rect: Vec<Matrix> = vec![Matrix::zeros(r, c); axis2.len()];
        let mut out = Vec::with_capacity(axis1.len() * axis2.len());
        let mut prev = Matrix::zeros(r, c);
        let mut cur = start.clone();
        let mut next_k1 = 0;
        for m in 0..k1max {
            // Running column sums at the sampled n.
            let mut acc = Matrix::zeros(r, c);
            let mut s = 0;
            let mut nprev = Matrix::zeros(r, c);
            let mut ncur = cur.clone();
            for n in 0..k2max {
                acc += &ncur;
                if axis2[s] == n + 1 {
                    rect[s] += &acc;
                    s += 1;
                }
                let nnext = if n == 0 { self.b01 * &ncur } else { step(self.b01, self.p2, &ncur, &nprev) };
                nprev = std::mem::replace(&mut ncur, nnext);
            }
            if axis1[next_k1] == m + 1 {
                let k1 = m + 1;
                for (t, &k2) in axis2.iter().enumerate() {
                    out.push(((k1, k2), rect[t].scale_real(1.0 / (k1 * k2) as f64)));
                }
                next_k1 += 1;
            }
            let nxt = if m == 0 { self.b10 * &cur } else { step(self.b10, self.p1, &cur, &prev) };
            prev = std::mem::replace(&mut cur, nxt);
        }
        out
    }
}

/// `σ_{m,n}` generated by two commuting unital, trace-preserving kernels.
#[derive(Clone, Debug)]
pub struct RecurrenceFamily {
    base10: Kernel,
    base01: Kernel,
    p1: f64,
    p2: f64,
    cache: HashMap<(usize, usize), Matrix>,
}

pub fn make_family(base10: &Kernel, base01: &Kernel, p1: f64, p2: f64, tol: f64) -> Result<RecurrenceFamily> {
    check_p(p1)?;
    check_p(p2)?;
    if base10.algebra() != base01.algebra() {
        return Err(Error::AlgebraMismatch);
    }
    for k in [base10, base01] {
        let r = verify_kernel(k, tol);
        if r.unital_defect > tol {
            return Err(Error::NotUnital { defect: r.unital_defect });
        }
        if r.trace_preservation_defect > tol {
            return Err(Error::NotTracePreserving { defect: r.trace_preservation_defect });
        }
    }
    let defect = commutation_defect(base10, base01)?;
    if defect > tol {
        return Err(Error::NotCommuting { defect });
    }
    let mut cache = HashMap::new();
    cache.insert((0, 0), Matrix::identity(base10.algebra().vec_dim()));
    Ok(RecurrenceFamily { base10: base10.clone(), base01: base01.clone(), p1, p2, cache })
}

impl RecurrenceFamily {
    pub fn base10(&self) -> &Kernel {
        &self.base10
    }

    pub fn base01(&self) -> &Kernel {
        &self.base01
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    pub fn recurrence(&self) -> Recurrence<'_> {
        Recurrence { b10: self.base10.superoperator(), b01: self.base01.superoperator(), p1: self.p1, p2: self.p2 }
    }

    /// Fills the cache for `0 ≤ m ≤ m_max`, `0 ≤ n ≤ n_max`, row `n = 0` first.
    pub fn ensure(&mut self, m_max: usize, n_max: usize) {
        if self.cache.contains_key(&(m_max, n_max)) {
            return;
        }
        let id = Matrix::identity(self.base10.algebra().vec_dim());
        let rec = self.recurrence();
        let row = rec.row(&id, m_max);
        let mut fresh = Vec::with_capacity((m_max + 1) * (n_max + 1));
        for (m, xm0) in row.iter().enumerate() {
            for (n, x) in rec.column(xm0, n_max).into_iter().enumerate() {
                fresh.push(((m, n), x));
            }
        }
        self.cache.extend(fresh);
    }

    pub fn sigma_matrix(&mut self, m: usize, n: usize) -> &Matrix {
        if !self.cache.contains_key(&(m, n)) {
            let (mm, nn) = self.cache.keys().fold((m, n), |acc, &(a, b)| (acc.0.max(a), acc.1.max(b)));
            self.ensure(mm.max(m), nn.max(n));
        }
        &self.cache[&(m, n)]
    }

    pub fn sigma(&mut self, m: usize, n: usize) -> Kernel {
        let a = self.base10.algebra().clone();
        let s = self.sigma_matrix(m, n).clone();
        Kernel::from_superoperator(&a, s, Provenance::Composite).expect("cached superoperators have the algebra's shape")
    }

    /// `‖σ_{m,n} − σ_{0,n} σ_{m,0}‖` in the weighted Hilbert-Schmidt operator norm.
    pub fn factorization_defect(&mut self, m: usize, n: usize) -> f64 {
        let s = self.sigma_matrix(m, n).clone();
        let col = self.sigma_matrix(0, n).clone();
        let row = self.sigma_matrix(m, 0).clone();
        superoperator_norm(self.base10.algebra(), &(&s - &(&col * &row)))
    }

    /// Verification report of every cached `σ_{m,n}`.
    pub fn verify_cached(&self, tol: f64) -> Vec<((usize, usize), KernelReport)> {
        let a = self.base10.algebra();
        let mut keys: Vec<(usize, usize)> = self.cache.keys().copied().collect();
        keys.sort();
        keys.into_iter()
            .map(|k| {
                let kern = Kernel::from_superoperator(a, self.cache[&k].clone(), Provenance::Composite).expect("shape");
                (k, verify_kernel(&kern, tol))
            })
            .collect()
    }
}

/// `S_{k1,k2} = (k1 k2)⁻¹ Σ_{m<k1} Σ_{n<k2} σ_{m,n}`.
pub fn partial_sum(f: &mut RecurrenceFamily, k1: usize, k2: usize) -> Result<Kernel> {
    if k1 == 0 || k2 == 0 {
        return Err(Error::BadParameter("partial sums need k1, k2 ≥ 1".into()));
    }
    f.ensure(k1 - 1, k2 - 1);
    let a = f.base10.algebra().clone();
    let n = a.vec_dim();
    let mut acc = Matrix::zeros(n, n);
    for m in 0..k1 {
        for j in 0..k2 {
            acc += f.sigma_matrix(m, j);
        }
    }
    Kernel::from_superoperator(&a, acc.scale_real(1.0 / (k1 * k2) as f64), Provenance::Composite)
}

pub fn square_sum(f: &mut RecurrenceFamily, k: usize) -> Result<Kernel> {
    partial_sum(f, k, k)
}

/// Column vector of an operator's coordinates.
pub(crate) fn as_column(v: &[Complex64]) -> Matrix {
    Matrix::from_vec(v.len(), 1, v.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Algebra;
    use crate::instance;
    use crate::kernel::{compose, cyclic_shift, kernel_from_unitary};

    fn rotations(n: usize, steps: &[usize]) -> (Algebra, Vec<Kernel>) {
        let a = Algebra::uniform_diagonal(n).unwrap();
        let ks = steps.iter().map(|&s| kernel_from_unitary(&a, &cyclic_shift(n).pow(s), 1e-12).unwrap()).collect();
        (a, ks)
    }

    #[test]
    fn identity_family() {
        let a = Algebra::new(&[(2, 1.0), (1, 0.5)]).unwrap();
        let id = Kernel::identity(&a);
        let mut f = make_family(&id, &id, 0.75, 0.6, 1e-9).unwrap();
        for m in 0..5 {
            for n in 0..5 {
                assert!((f.sigma_matrix(m, n) - &Matrix::identity(a.vec_dim())).max_abs() < 1e-12);
            }
        }
        for k in 1..5 {
            assert!((square_sum(&mut f, k).unwrap().superoperator() - &Matrix::identity(a.vec_dim())).max_abs() < 1e-12);
        }
    }

    #[test]
    fn p_one_gives_powers() {
        let (_, ks) = rotations(6, &[1, 2]);
        let mut f = make_family(&ks[0], &ks[1], 1.0, 1.0, 1e-9).unwrap();
        for m in 0..4 {
            for n in 0..4 {
                let want = &ks[0].superoperator().pow(m) * &ks[1].superoperator().pow(n);
                assert!((f.sigma_matrix(m, n) - &want).max_abs() < 1e-13);
            }
        }
    }

    #[test]
    fn recurrence_relations_hold() {
        let (_, ks) = rotations(8, &[1, 3]);
        let avg1 = Kernel::from_superoperator(
            ks[0].algebra(),
            (ks[0].superoperator() + &ks[0].superoperator().adjoint()).scale_real(0.5),
            Provenance::Custom,
        )
        .unwrap();
        let avg2 = compose(&avg1, &avg1).unwrap();
        let mut f = make_family(&avg1, &avg2, 0.75, 0.6, 1e-9).unwrap();
        for m in 1..5 {
            for n in 0..5 {
                let lhs = avg1.superoperator() * &f.sigma_matrix(m, n).clone();
                let rhs = &f.sigma_matrix(m + 1, n).scale_real(0.75) + &f.sigma_matrix(m - 1, n).scale_real(0.25);
                assert!((&lhs - &rhs).max_abs() < 1e-12);
            }
        }
        for m in 0..5 {
            for n in 0..5 {
                assert!(f.factorization_defect(m, n) < 1e-10);
            }
        }
    }

    #[test]
    fn make_family_errors() {
        let a = Algebra::full(2).unwrap();
        let id = Kernel::identity(&a);
        assert!(matches!(make_family(&id, &id, 0.0, 0.5, 1e-9), Err(Error::BadParameter(_))));
        let half = Kernel::from_superoperator(&a, Matrix::identity(4).scale_real(0.5), Provenance::Custom).unwrap();
        assert!(matches!(make_family(&half, &id, 0.5, 0.5, 1e-9), Err(Error::NotUnital { .. })));
        let x = Matrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let h = Matrix::from_real_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]]).scale_real(0.5f64.sqrt());
        let kx = kernel_from_unitary(&a, &x, 1e-12).unwrap();
        let kh = kernel_from_unitary(&a, &h, 1e-12).unwrap();
        assert!(matches!(make_family(&kx, &kh, 0.5, 0.5, 1e-9), Err(Error::NotCommuting { .. })));

        let d = Algebra::uniform_diagonal(2).unwrap();
        let p = Matrix::from_real_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]);
        let k = Kernel::from_superoperator(&d, p, Provenance::Custom).unwrap();
        assert!(matches!(make_family(&k, &Kernel::identity(&d), 0.5, 0.5, 1e-9), Err(Error::NotTracePreserving { .. })));
    }

    #[test]
    fn rectangle_averages_match_partial_sums() {
        let a = Algebra::new(&[(2, 1.0), (1, 2.0)]).unwrap();
        let ks = instance::generate_instance("commuting-pair", 5, &a).unwrap().kernels().unwrap();
        let mut f = make_family(&ks[0], &ks[1], 0.8, 0.7, 1e-9).unwrap();
        let mut rng = instance::rng_from_seed(2);
        let x = instance::random_operator(&mut rng, &a);
        let col = as_column(&x.to_vec());
        let got = f.recurrence().rectangle_averages(&col, &[1, 2, 4], &[1, 3]);
        assert_eq!(got.len(), 6);
        for ((k1, k2), v) in got {
            let s = partial_sum(&mut f, k1, k2).unwrap();
            let want = s.apply_vec(&x.to_vec());
            let err = want.iter().zip(v.as_slice()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "({k1},{k2}) {err}");
        }
        assert!((partial_sum(&mut f, 1, 1).unwrap().superoperator() - &Matrix::identity(5)).max_abs() == 0.0);
    }

    #[test]
    fn scalar_recurrence_reproduces_f_sequence() {
        let z = Complex64::new(0.3, -0.2);
        let zm = Matrix::diag(&[z]);
        let one = Matrix::identity(1);
        let rec = Recurrence { b10: &zm, b01: &one, p1: 0.75, p2: 0.5 };
        let row = rec.row(&one, 30);
        let f = super::super::recurrence::f_sequence(z, 0.75, 30).unwrap();
        for (m, x) in row.iter().enumerate() {
            assert!((x[(0, 0)] - f[m]).norm() < 1e-12);
        }
    }
}
