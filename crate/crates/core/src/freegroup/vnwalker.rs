//! Operator recurrence for a commuting normal pair on a Hilbert space and
//! Pringsheim convergence of its rectangle averages to the joint fixed projection.

use num_complex::Complex64;
use rand::Rng;

use crate::algebra::joint_diagonalize_matrices;
use crate::cesaro::{pringsheim_report, sample_axis, ConvergenceReport, Deviation, MultiIndex, DENSE_EDGE};
use crate::error::{Error, Result};
use crate::instance::random_unitary;
use crate::linalg::Matrix;

use super::family::Recurrence;
use super::recurrence::{check_p, dp_membership};

/// Eigenvalues this close to `±1` are treated as exactly `±1`.
pub const SNAP_TOL: f64 = 1e-9;
/// Slack of the uniform operator-norm bound on the averages.
pub const UNIFORM_BOUND_SLACK: f64 = 1e-6;

/// Matrices are compared in the Hilbert-Schmidt norm.
impl Deviation for Matrix {
    fn deviation(&self, reference: &Self) -> f64 {
        (self - reference).frobenius_norm()
    }
}

#[derive(Clone, Debug)]
pub struct VnWalkerReport {
    pub report: ConvergenceReport<Matrix>,
    /// Projection onto `{η : x01 η = x10 η = η}`.
    pub projection: Matrix,
    /// `(λ, μ)` eigenvalue pairs of `(x10, x01)`.
    pub joint_spectrum: Vec<(Complex64, Complex64)>,
    /// Smallest sampled `n` past which every average with `min(k) ≥ n` has
    /// operator norm at most `1 + 1e-6`; `None` if the last sample violates it.
    pub uniform_bound_n: Option<usize>,
    /// Largest operator norm over all sampled averages.
    pub max_average_norm: f64,
    pub rows: Vec<VnWalkerRow>,
}

/// One sampled rectangle average against the projection.
#[derive(Clone, Debug, PartialEq)]
pub struct VnWalkerRow {
    pub k1: usize,
    pub k2: usize,
    pub deviation_hs: f64,
    pub deviation_op: f64,
    pub frontier_min: f64,
}

fn snap(z: Complex64) -> Complex64 {
    for t in [1.0, -1.0] {
        if (z - t).norm() <= SNAP_TOL {
            return Complex64::new(t, 0.0);
        }
    }
    z
}

pub fn vnwalker_experiment(x01: &Matrix, x10: &Matrix, p1: f64, p2: f64, horizon: usize, tol: f64) -> Result<VnWalkerReport> {
    check_p(p1)?;
    check_p(p2)?;
    if horizon == 0 {
        return Err(Error::EmptyGrid);
    }
    let joint = joint_diagonalize_matrices(x10, x01, tol)?;
    let pairs: Vec<(Complex64, Complex64)> = joint.pairs.iter().map(|&(l, m)| (snap(l), snap(m))).collect();
    let mut offending = Vec::new();
    for &(l, m) in &pairs {
        if !dp_membership(l, p1)?.member {
            offending.push(l);
        }
        if !dp_membership(m, p2)?.member {
            offending.push(m);
        }
    }
    if !offending.is_empty() {
        return Err(Error::SpectrumOutsideRegion { offending });
    }
    let one = Complex64::new(1.0, 0.0);
    let projection = joint.projection_where(|l, m| snap(l) == one && snap(m) == one);

    let axis = sample_axis(horizon, DENSE_EDGE);
    let rec = Recurrence { b10: x10, b01: x01, p1, p2 };
    let averages = rec.rectangle_averages(&Matrix::identity(x01.rows()), &axis, &axis);
    let mut values = Vec::with_capacity(averages.len());
    let mut norms = Vec::with_capacity(averages.len());
    for ((k1, k2), m) in averages {
        let k = MultiIndex::new(vec![k1, k2])?;
        norms.push((k.min_k(), m.spectral_norm()));
        values.push((k, m));
    }
    let report = pringsheim_report(&values, &projection, tol.max(1e-12))?;
    let rows = values
        .iter()
        .map(|(k, m)| {
            let diff = m - &projection;
            VnWalkerRow {
                k1: k.components()[0],
                k2: k.components()[1],
                deviation_hs: diff.frobenius_norm(),
                deviation_op: diff.spectral_norm(),
                frontier_min: report.frontier_at(k.min_k()),
            }
        })
        .collect();
    let max_average_norm = norms.iter().map(|t| t.1).fold(0.0, f64::max);
    let uniform_bound_n = uniform_bound_start(&norms, &axis);
    Ok(VnWalkerReport { report, projection, joint_spectrum: pairs, uniform_bound_n, max_average_norm, rows })
}

fn uniform_bound_start(norms: &[(usize, f64)], axis: &[usize]) -> Option<usize> {
    let bad_min = norms.iter().filter(|t| t.1 > 1.0 + UNIFORM_BOUND_SLACK).map(|t| t.0).max();
    match bad_min {
        None => Some(1),
        Some(b) => axis.iter().copied().find(|&n| n > b),
    }
}

/// Largest characteristic-root modulus allowed for sampled eigenvalues,
/// raised to `√((1 − p)/p) + 0.1` when the root product forces it.
pub const INSTANCE_ROOT_BOUND: f64 = 0.8;
const MAX_DRAWS: usize = 1_000_000;

fn root_bound(p: f64) -> f64 {
    INSTANCE_ROOT_BOUND.max(((1.0 - p) / p).sqrt() + 0.1)
}

/// Minimum distance of sampled eigenvalues from `1`.
pub const INSTANCE_GAP: f64 = 0.5;

fn sample_eigenvalue(rng: &mut impl Rng, p: f64) -> Result<Complex64> {
    let bound = root_bound(p);
    for _ in 0..MAX_DRAWS {
        let z = Complex64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
        if (z - 1.0).norm() < INSTANCE_GAP {
            continue;
        }
        let q = dp_membership(z, p).expect("p validated by caller");
        if q.member && q.max_root_modulus() <= bound {
            return Ok(z);
        }
    }
    Err(Error::BadParameter(format!("no eigenvalue sample found for p = {p}")))
}

/// `(x01, x10) = (V D01 V*, V D10 V*)` with a random unitary `V`. The first
/// eigenpair is `(1, 1)`, the next two have one coordinate equal to `1`, the
/// rest are sampled by rejection inside the regions for `p2` and `p1`.
pub fn vnwalker_instance(rng: &mut impl Rng, dim: usize, p1: f64, p2: f64) -> Result<(Matrix, Matrix)> {
    check_p(p1)?;
    check_p(p2)?;
    for p in [p1, p2] {
        if root_bound(p) >= 1.0 {
            return Err(Error::BadParameter(format!("p = {p} leaves no interior region to sample")));
        }
    }
    let one = Complex64::new(1.0, 0.0);
    let mut d01 = Vec::with_capacity(dim);
    let mut d10 = Vec::with_capacity(dim);
    for i in 0..dim {
        let (a, b) = match i {
            0 => (one, one),
            1 => (one, sample_eigenvalue(rng, p1)?),
            2 => (sample_eigenvalue(rng, p2)?, one),
            _ => (sample_eigenvalue(rng, p2)?, sample_eigenvalue(rng, p1)?),
        };
        d01.push(a);
        d10.push(b);
    }
    let v = random_unitary(rng, dim);
    let conj = |d: &[Complex64]| &(&v * &Matrix::diag(d)) * &v.adjoint();
    Ok((conj(&d01), conj(&d10)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::rng_from_seed;

    #[test]
    fn identity_pair() {
        let id = Matrix::identity(3);
        let r = vnwalker_experiment(&id, &id, 0.75, 0.75, 40, 1e-9).unwrap();
        assert!(r.report.tail() < 1e-12);
        assert!((&r.projection - &id).max_abs() < 1e-12);
        assert_eq!(r.uniform_bound_n, Some(1));
    }

    #[test]
    fn diagonal_example() {
        let x = Matrix::real_diag(&[1.0, 0.5]);
        let r = vnwalker_experiment(&x, &x, 0.75, 0.75, 500, 1e-9).unwrap();
        assert!((&r.projection - &Matrix::real_diag(&[1.0, 0.0])).max_abs() < 1e-12);
        assert!(r.report.tail() < 1e-2);
        assert!(r.report.frontier_sup.windows(2).all(|w| w[0] >= w[1]));
        // Oracle: scalar Cesàro sums of the second eigenvalue.
        let f = super::super::recurrence::f_sequence(Complex64::new(0.5, 0.0), 0.75, 500).unwrap();
        let mean: Complex64 = f[..500].iter().sum::<Complex64>() / 500.0;
        let expect = mean * mean;
        let last = &r.report.limit_estimate;
        assert!((last[(1, 1)] - expect).norm() < 1e-12);
    }

    #[test]
    fn outside_region_rejected() {
        let x = Matrix::real_diag(&[1.0, 1.1]);
        match vnwalker_experiment(&x, &Matrix::identity(2), 0.75, 0.75, 10, 1e-9) {
            Err(Error::SpectrumOutsideRegion { offending }) => {
                assert_eq!(offending.len(), 1);
                assert!((offending[0].re - 1.1).abs() < 1e-9);
            }
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn structural_errors() {
        let n = Matrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]);
        assert!(matches!(vnwalker_experiment(&n, &Matrix::identity(2), 0.75, 0.75, 5, 1e-9), Err(Error::NotNormal { .. })));
        let x = Matrix::real_diag(&[1.0, 0.0]);
        let y = Matrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).scale_real(0.5);
        assert!(matches!(vnwalker_experiment(&x, &y, 0.75, 0.75, 5, 1e-9), Err(Error::NotCommuting { .. })));
    }

    #[test]
    fn random_instances_converge() {
        for seed in 0..3 {
            let mut rng = rng_from_seed(seed);
            let (x01, x10) = vnwalker_instance(&mut rng, 5, 0.75, 0.6).unwrap();
            let r = vnwalker_experiment(&x01, &x10, 0.75, 0.6, 300, 1e-8).unwrap();
            assert!((r.projection.trace().re - 1.0).abs() < 1e-9);
            assert!(r.report.tail() < 0.1, "seed {seed}: {}", r.report.tail());
            assert!(r.uniform_bound_n.is_some());
        }
        assert!(matches!(vnwalker_instance(&mut rng_from_seed(0), 4, 0.5, 0.75), Err(Error::BadParameter(_))));
    }
}
