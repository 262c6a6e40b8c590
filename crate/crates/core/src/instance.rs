//! Seeded random instances.
//!
//! All randomness comes from [`rand_chacha::ChaCha20Rng`] (a counter-based
//! stream cipher generator) seeded with a 64-bit integer via
//! `seed_from_u64`. Draws are consumed in a fixed order: blocks in algebra
//! order, entries row-major, real part before imaginary part.

use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::algebra::{Algebra, Operator};
use crate::error::{Error, Result};
use crate::kernel::{self, Kernel};
use crate::linalg::Matrix;

pub type InstanceRng = ChaCha20Rng;

pub fn rng_from_seed(seed: u64) -> InstanceRng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Smallest admissible `|1 − λ|` over the non-fixed Schur multiplier
/// eigenvalues of a `commuting-pair` draw.
pub const COMMUTING_PAIR_GAP: f64 = 0.5;

fn gaussian(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

pub fn gaussian_matrix(rng: &mut impl Rng, n: usize) -> Matrix {
    Matrix::from_fn(n, n, |_, _| gaussian(rng))
}

/// Haar unitary via Gram-Schmidt on a Gaussian matrix.
pub fn random_unitary(rng: &mut impl Rng, n: usize) -> Matrix {
    let g = gaussian_matrix(rng, n);
    let mut q = Matrix::zeros(n, n);
    for j in 0..n {
        let mut v = g.column(j);
        for _ in 0..2 {
            for k in 0..j {
                let dot: Complex64 = (0..n).map(|i| q[(i, k)].conj() * v[i]).sum();
                for (i, vi) in v.iter_mut().enumerate() {
                    *vi -= dot * q[(i, k)];
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for (i, vi) in v.iter().enumerate() {
            q[(i, j)] = vi / norm;
        }
    }
    q
}

pub fn random_block_unitary(rng: &mut impl Rng, a: &Algebra) -> Operator {
    let blocks = a.blocks().iter().map(|b| random_unitary(rng, b.dim)).collect();
    Operator::new(a, blocks).expect("block shapes")
}

/// Gaussian entries with variance `2/n` per block.
pub fn random_operator(rng: &mut impl Rng, a: &Algebra) -> Operator {
    let blocks = a.blocks().iter().map(|b| gaussian_matrix(rng, b.dim).scale_real(1.0 / (b.dim as f64).sqrt())).collect();
    Operator::new(a, blocks).expect("block shapes")
}

pub fn random_hermitian(rng: &mut impl Rng, a: &Algebra) -> Operator {
    random_operator(rng, a).hermitian_part()
}

/// `G G* / τ(G G*)`: a positive operator of unit trace.
pub fn random_positive(rng: &mut impl Rng, a: &Algebra) -> Operator {
    let g = random_operator(rng, a);
    let p = &g * &g.adjoint();
    let t = p.trace().re;
    p.scale(1.0 / t)
}

/// Mixture of three conjugations by random block unitaries: unital and trace preserving.
pub fn random_cptp(rng: &mut impl Rng, a: &Algebra) -> Result<Kernel> {
    let terms: Vec<Operator> = (0..3).map(|_| random_block_unitary(rng, a).scale(1.0 / 3f64.sqrt())).collect();
    kernel::kernel_from_kraus(a, &terms, false)
}

/// Schur multiplier `x_ij ↦ M_ij x_ij` with `M_ij = Σ_k d_ki conj(d_kj) / K`
/// for unimodular `d`, realized by diagonal Kraus terms.
fn schur_terms(rng: &mut impl Rng, a: &Algebra, terms: usize) -> (Vec<Operator>, f64) {
    let mut phases: Vec<Vec<Vec<Complex64>>> = Vec::with_capacity(terms);
    for _ in 0..terms {
        phases.push(
            a.blocks()
                .iter()
                .map(|b| (0..b.dim).map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))).collect())
                .collect(),
        );
    }
    let mut gap = f64::INFINITY;
    for (b, blk) in a.blocks().iter().enumerate() {
        for i in 0..blk.dim {
            for j in 0..blk.dim {
                if i != j {
                    let m: Complex64 = phases.iter().map(|p| p[b][i] * p[b][j].conj()).sum::<Complex64>() / terms as f64;
                    gap = gap.min((Complex64::new(1.0, 0.0) - m).norm());
                }
            }
        }
    }
    let s = 1.0 / (terms as f64).sqrt();
    let ops = phases
        .into_iter()
        .map(|p| Operator::new(a, p.iter().map(|d| Matrix::diag(d).scale_real(s)).collect()).expect("block shapes"))
        .collect();
    (ops, gap)
}

/// Two commuting unital channels: Schur multipliers in one shared random basis.
/// Draws are repeated (deterministically) until every non-fixed multiplier
/// entry stays at distance [`COMMUTING_PAIR_GAP`] from 1.
pub fn commuting_pair(rng: &mut impl Rng, a: &Algebra) -> Result<(Kernel, Kernel)> {
    let v = random_block_unitary(rng, a);
    let k1 = gapped_schur_kernel(rng, a, &v)?;
    let k2 = gapped_schur_kernel(rng, a, &v)?;
    Ok((k1, k2))
}

fn gapped_schur_kernel(rng: &mut impl Rng, a: &Algebra, v: &Operator) -> Result<Kernel> {
    let vd = v.adjoint();
    loop {
        let (terms, gap) = schur_terms(rng, a, 3);
        if gap >= COMMUTING_PAIR_GAP || a.is_commutative() {
            let conj: Vec<Operator> = terms.iter().map(|d| &(v * d) * &vd).collect();
            return kernel::kernel_from_kraus(a, &conj, false);
        }
    }
}

/// Unitaries `V D_i V*` with a shared random `V` and random diagonal phases.
pub fn commuting_unitaries(rng: &mut impl Rng, a: &Algebra, count: usize) -> Vec<Operator> {
    let v = random_block_unitary(rng, a);
    let vd = v.adjoint();
    (0..count)
        .map(|_| {
            let d: Vec<Matrix> = a
                .blocks()
                .iter()
                .map(|b| {
                    let ph: Vec<Complex64> =
                        (0..b.dim).map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))).collect();
                    Matrix::diag(&ph)
                })
                .collect();
            let d = Operator::new(a, d).expect("block shapes");
            &(&v * &d) * &vd
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InstanceKind {
    RandomCptp,
    CommutingPair,
    CommutingConjugations,
    PositiveOperator,
    Hermitian,
}

impl FromStr for InstanceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "random-cptp" => Self::RandomCptp,
            "commuting-pair" => Self::CommutingPair,
            "commuting-conjugations" => Self::CommutingConjugations,
            "positive-operator" => Self::PositiveOperator,
            "hermitian" => Self::Hermitian,
            other => return Err(Error::BadParameter(format!("unknown instance kind {other:?}"))),
        })
    }
}

#[derive(Clone, Debug)]
pub enum Instance {
    Kernels(Vec<Kernel>),
    Operators(Vec<Operator>),
}

impl Instance {
    pub fn kernels(self) -> Option<Vec<Kernel>> {
        match self {
            Instance::Kernels(k) => Some(k),
            Instance::Operators(_) => None,
        }
    }

    pub fn operators(self) -> Option<Vec<Operator>> {
        match self {
            Instance::Operators(o) => Some(o),
            Instance::Kernels(_) => None,
        }
    }
}

/// Deterministic in `(kind, seed, algebra)`.
pub fn generate_instance(kind: &str, seed: u64, a: &Algebra) -> Result<Instance> {
    let kind: InstanceKind = kind.parse()?;
    let mut rng = rng_from_seed(seed);
    Ok(match kind {
        InstanceKind::RandomCptp => Instance::Kernels(vec![random_cptp(&mut rng, a)?]),
        InstanceKind::CommutingPair => {
            let (k1, k2) = commuting_pair(&mut rng, a)?;
            Instance::Kernels(vec![k1, k2])
        }
        InstanceKind::CommutingConjugations => {
            let us = commuting_unitaries(&mut rng, a, 2);
            let ks = us.iter().map(|u| kernel::kernel_from_unitary_operator(u, 1e-9)).collect::<Result<Vec<_>>>()?;
            Instance::Kernels(ks)
        }
        InstanceKind::PositiveOperator => Instance::Operators(vec![random_positive(&mut rng, a)]),
        InstanceKind::Hermitian => Instance::Operators(vec![random_hermitian(&mut rng, a)]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::NormKind;
    use crate::kernel::{commutation_defect, verify_kernel};

    fn alg() -> Algebra {
        Algebra::new(&[(3, 1.0), (2, 0.5)]).unwrap()
    }

    #[test]
    fn same_seed_same_bits() {
        let a = alg();
        for kind in ["random-cptp", "commuting-pair", "commuting-conjugations"] {
            let x = generate_instance(kind, 42, &a).unwrap().kernels().unwrap();
            let y = generate_instance(kind, 42, &a).unwrap().kernels().unwrap();
            for (k1, k2) in x.iter().zip(&y) {
                assert_eq!(k1.superoperator(), k2.superoperator());
            }
        }
        for kind in ["positive-operator", "hermitian"] {
            let x = generate_instance(kind, 42, &a).unwrap().operators().unwrap();
            let y = generate_instance(kind, 42, &a).unwrap().operators().unwrap();
            assert_eq!(x, y);
        }
    }

    #[test]
    fn unknown_kind() {
        assert!(matches!(generate_instance("nope", 1, &alg()), Err(Error::BadParameter(_))));
    }

    #[test]
    fn commuting_pair_commutes() {
        let a = alg();
        for seed in 0..5 {
            let ks = generate_instance("commuting-pair", seed, &a).unwrap().kernels().unwrap();
            assert!(commutation_defect(&ks[0], &ks[1]).unwrap() <= 1e-12);
            for k in &ks {
                let r = verify_kernel(k, 1e-9);
                assert!(r.is_kernel(1e-9) && r.is_unital(1e-9) && r.is_trace_preserving(1e-9));
            }
        }
    }

    #[test]
    fn random_cptp_is_kernel() {
        let a = alg();
        let k = generate_instance("random-cptp", 3, &a).unwrap().kernels().unwrap().remove(0);
        let r = verify_kernel(&k, 1e-9);
        assert!(r.subunitality >= -1e-9 && r.trace_nonincrease >= -1e-9 && r.choi_min_eigenvalue >= -1e-9);
        assert!(r.unital_defect <= 1e-9 && r.trace_preservation_defect <= 1e-9);
    }

    #[test]
    fn unitary_is_unitary() {
        let mut rng = rng_from_seed(1);
        let u = random_unitary(&mut rng, 5);
        assert!((&(&u.adjoint() * &u) - &Matrix::identity(5)).max_abs() < 1e-13);
    }

    #[test]
    fn positive_has_unit_trace() {
        let mut rng = rng_from_seed(2);
        let p = random_positive(&mut rng, &alg());
        assert!((p.trace().re - 1.0).abs() < 1e-13);
        assert!(p.min_eigenvalue() > -1e-14);
        assert!((p.norm(NormKind::L1) - 1.0).abs() < 1e-12);
    }
}
