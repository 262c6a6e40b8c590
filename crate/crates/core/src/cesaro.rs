//! Multiparameter Cesàro averages and Pringsheim-style convergence reports.
//!
//! For commuting kernels `α_1, …, α_d` the rectangle average
//! `s_k(x) = (k_1⋯k_d)⁻¹ Σ_{j < k} α_1^{j_1}⋯α_d^{j_d}(x)` factors into nested
//! one-parameter averages, which is how it is evaluated here. On a finite
//! horizon a convergence verdict is only ever "within tolerance up to the
//! horizon"; the report keeps the whole frontier curve for inspection.
//!
//! All `L^p` spaces coincide as sets in finite dimension, so there is a single
//! convergence statement to test rather than one per exponent.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{Algebra, NormKind, Operator};
use crate::error::{Error, Result};
use crate::kernel::{commutation_defect, superoperator_norm, Kernel};
use crate::linalg::{Matrix, ZERO};

/// Commutation defect above which kernels are rejected.
pub const COMMUTATION_TOL: f64 = 1e-9;
/// Depth of the iterative cross-check in [`mean_projection`].
pub const VALIDATION_DEPTH: usize = 2048;
/// Relative singular-value threshold for eigenvalue-1 eigenvectors.
pub const FIXED_SPACE_TOL: f64 = 1e-6;
/// Full rectangle edge of the default two-parameter grid.
pub const DENSE_EDGE: usize = 32;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(components: Vec<usize>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::BadParameter("multi-index needs at least one component".into()));
        }
        if components.contains(&0) {
            return Err(Error::BadParameter("multi-index components must be at least 1".into()));
        }
        Ok(Self(components))
    }

    pub fn diagonal(d: usize, k: usize) -> Self {
        Self(vec![k; d])
    }

    pub fn components(&self) -> &[usize] {
        &self.0
    }

    pub fn d(&self) -> usize {
        self.0.len()
    }

    pub fn min_k(&self) -> usize {
        *self.0.iter().min().expect("nonempty")
    }

    pub fn max_k(&self) -> usize {
        *self.0.iter().max().expect("nonempty")
    }

    pub fn product(&self) -> f64 {
        self.0.iter().map(|&k| k as f64).product()
    }
}

fn check_commuting(kernels: &[Kernel]) -> Result<()> {
    for (i, a) in kernels.iter().enumerate() {
        for b in &kernels[i + 1..] {
            let defect = commutation_defect(a, b)?;
            if defect > COMMUTATION_TOL {
                return Err(Error::NonCommutingKernels { defect });
            }
        }
    }
    Ok(())
}

/// `(1/k) Σ_{j<k} α^j(v)`.
fn average_1d(s: &Matrix, v: &[Complex64], k: usize) -> Vec<Complex64> {
    let mut cur = v.to_vec();
    let mut next = vec![ZERO; v.len()];
    let mut acc = v.to_vec();
    for _ in 1..k {
        s.matvec_into(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
        for (a, c) in acc.iter_mut().zip(&cur) {
            *a += c;
        }
    }
    let inv = 1.0 / k as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    acc
}

/// Running one-parameter averages of `v`, reported at each (sorted) sample point.
fn running_averages(s: &Matrix, v: &[Complex64], samples: &[usize]) -> Vec<Vec<Complex64>> {
    let mut out = Vec::with_capacity(samples.len());
    let mut cur = v.to_vec();
    let mut next = vec![ZERO; v.len()];
    let mut acc = v.to_vec();
    let mut k = 1;
    for &target in samples {
        while k < target {
            s.matvec_into(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
            for (a, c) in acc.iter_mut().zip(&cur) {
                *a += c;
            }
            k += 1;
        }
        let inv = 1.0 / k as f64;
        out.push(acc.iter().map(|a| a * inv).collect());
    }
    out
}

fn check_inputs(kernels: &[Kernel], x: &Operator) -> Result<Algebra> {
    let first = kernels.first().ok_or_else(|| Error::BadParameter("no kernels supplied".into()))?;
    let a = first.algebra().clone();
    for k in kernels {
        if k.algebra() != &a {
            return Err(Error::AlgebraMismatch);
        }
    }
    a.check_member(x)?;
    Ok(a)
}

/// Rectangle Cesàro average `s_k(x)` of commuting kernels.
pub fn cesaro_multi(kernels: &[Kernel], x: &Operator, k: &MultiIndex) -> Result<Operator> {
    let a = check_inputs(kernels, x)?;
    if k.d() != kernels.len() {
        return Err(Error::BadParameter(format!("{} kernels for a {}-index", kernels.len(), k.d())));
    }
    check_commuting(kernels)?;
    let mut v = x.to_vec();
    for (kern, &ki) in kernels.iter().zip(k.components()).rev() {
        v = average_1d(kern.superoperator(), &v, ki);
    }
    Operator::from_vec(&a, &v)
}

/// Sampling pattern for multi-index grids.
#[derive(Clone, Debug, PartialEq)]
pub enum Grid {
    /// Cartesian product of per-coordinate sample lists (each sorted, ≥ 1).
    Product(Vec<Vec<usize>>),
    /// Explicit list of multi-indices.
    Points(Vec<MultiIndex>),
}

/// `{1..min(edge,h)}` followed by roughly geometric samples up to `h`, always including `h`.
pub fn sample_axis(horizon: usize, edge: usize) -> Vec<usize> {
    let mut s: Vec<usize> = (1..=edge.min(horizon)).collect();
    let mut x = edge.min(horizon) as f64;
    while (x as usize) < horizon {
        x = (x * 1.25).ceil();
        s.push((x as usize).min(horizon));
    }
    s.dedup();
    s
}

/// Default grid: every `k` for `d = 1`; the dense `32 x 32` rectangle extended
/// geometrically to the horizon for `d = 2`; a small cube plus a sector
/// schedule for `d ≥ 3`.
pub fn default_grid(d: usize, horizon: usize) -> Grid {
    match d {
        1 => Grid::Product(vec![(1..=horizon).collect()]),
        2 => {
            let axis = sample_axis(horizon, DENSE_EDGE);
            Grid::Product(vec![axis.clone(), axis])
        }
        _ => {
            let mut pts: Vec<MultiIndex> = Vec::new();
            let edge = horizon.min(4);
            let total = edge.pow(d as u32);
            for mut code in 0..total {
                let mut c = Vec::with_capacity(d);
                for _ in 0..d {
                    c.push(code % edge + 1);
                    code /= edge;
                }
                pts.push(MultiIndex(c));
            }
            pts.extend(sector_schedule(d, 2.0, horizon));
            pts.sort();
            pts.dedup();
            Grid::Points(pts)
        }
    }
}

/// Evaluates `s_k(x)` on every grid point, reusing partial sums along each axis.
pub fn cesaro_grid(kernels: &[Kernel], x: &Operator, grid: &Grid) -> Result<Vec<(MultiIndex, Operator)>> {
    let a = check_inputs(kernels, x)?;
    check_commuting(kernels)?;
    let d = kernels.len();
    match grid {
        Grid::Product(axes) => {
            if axes.len() != d {
                return Err(Error::BadParameter(format!("{}-dimensional grid for {d} kernels", axes.len())));
            }
            if axes.iter().any(|ax| ax.is_empty()) {
                return Err(Error::EmptyGrid);
            }
            for ax in axes {
                if ax[0] == 0 || ax.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::BadParameter("grid axes must be strictly increasing and positive".into()));
                }
            }
            // Tuples hold the indices of the already-averaged trailing axes.
            let mut current: Vec<(Vec<usize>, Vec<Complex64>)> = vec![(Vec::new(), x.to_vec())];
            for i in (0..d).rev() {
                let s = kernels[i].superoperator();
                current = current
                    .par_iter()
                    .flat_map_iter(|(idx, v)| {
                        running_averages(s, v, &axes[i]).into_iter().zip(&axes[i]).map(move |(avg, &ki)| {
                            let mut j = Vec::with_capacity(idx.len() + 1);
                            j.push(ki);
                            j.extend_from_slice(idx);
                            (j, avg)
                        })
                    })
                    .collect();
            }
            let mut out: Vec<(MultiIndex, Operator)> = current
                .into_iter()
                .map(|(j, v)| Ok((MultiIndex(j), Operator::from_vec(&a, &v)?)))
                .collect::<Result<_>>()?;
            out.sort_by(|p, q| p.0.cmp(&q.0));
            Ok(out)
        }
        Grid::Points(points) => {
            if points.is_empty() {
                return Err(Error::EmptyGrid);
            }
            points
                .par_iter()
                .map(|k| {
                    if k.d() != d {
                        return Err(Error::BadParameter(format!("{}-index for {d} kernels", k.d())));
                    }
                    let mut v = x.to_vec();
                    for (kern, &ki) in kernels.iter().zip(k.components()).rev() {
                        v = average_1d(kern.superoperator(), &v, ki);
                    }
                    Ok((k.clone(), Operator::from_vec(&a, &v)?))
                })
                .collect()
        }
    }
}

/// Spectral projection of a kernel's superoperator onto its fixed space.
#[derive(Clone, Debug)]
pub struct MeanProjection {
    algebra: Algebra,
    pub superoperator: Matrix,
    /// Dimension of the eigenvalue-1 eigenspace.
    pub rank: usize,
    /// `‖C_D − Φ‖_F` against the depth-`D` Cesàro mean of powers.
    pub validation_error: f64,
    pub validation_bound: f64,
    /// `max(‖Φ² − Φ‖, ‖αΦ − Φ‖, ‖Φα − Φ‖)` in the weighted Hilbert-Schmidt operator norm.
    pub idempotence_defect: f64,
}

impl MeanProjection {
    pub fn apply(&self, x: &Operator) -> Operator {
        Operator::from_vec(&self.algebra, &self.superoperator.matvec(&x.to_vec())).expect("shape preserved")
    }
}

/// `Σ_{j<D} T^j` by binary doubling (`D` a power of two).
fn power_sum(t: &Matrix, depth: usize) -> Matrix {
    debug_assert!(depth.is_power_of_two());
    let n = t.rows();
    let mut sum = Matrix::identity(n);
    let mut pow = t.clone();
    let mut len = 1;
    while len < depth {
        sum = &sum + &(&pow * &sum);
        pow = &pow * &pow;
        len *= 2;
    }
    sum
}

/// `Φ = V (W*V)⁻¹ W*` with `V`, `W` spanning the right and left fixed spaces.
pub fn mean_projection(k: &Kernel, tol: f64) -> Result<MeanProjection> {
    let a = k.algebra().clone();
    let t = k.superoperator();
    let n = t.rows();
    let id = Matrix::identity(n);
    let scale = t.frobenius_norm().max(1.0);
    let v = (t - &id).null_space(FIXED_SPACE_TOL * scale);
    let w = (&t.adjoint() - &id).null_space(FIXED_SPACE_TOL * scale);
    if v.cols() != w.cols() {
        return Err(Error::ValidationFailed { measured: (v.cols() as f64 - w.cols() as f64).abs(), bound: 0.0 });
    }
    let rank = v.cols();
    let phi = if rank == 0 {
        Matrix::zeros(n, n)
    } else {
        let wd = w.adjoint();
        let core = (&wd * &v).inverse()?;
        &(&v * &core) * &wd
    };

    let depth = VALIDATION_DEPTH;
    let cesaro = power_sum(t, depth).scale_real(1.0 / depth as f64);
    let measured = (&cesaro - &phi).frobenius_norm();
    let z = (&(&id - t) + &phi).inverse()?;
    let t_d = t.pow(depth);
    let bound = 10.0 * tol
        + (1.0 + t_d.frobenius_norm()) * z.frobenius_norm() * (&id - &phi).frobenius_norm() / depth as f64;
    if measured > bound {
        return Err(Error::ValidationFailed { measured, bound });
    }
    let idem = [&(&phi * &phi) - &phi, &(t * &phi) - &phi, &(&phi * t) - &phi]
        .iter()
        .map(|m| superoperator_norm(&a, m))
        .fold(0.0, f64::max);
    Ok(MeanProjection { algebra: a, superoperator: phi, rank, validation_error: measured, validation_bound: bound, idempotence_defect: idem })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Converged,
    Diverged,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Converged => "converged",
            Verdict::Diverged => "diverged",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Distance used by [`pringsheim_report`].
pub trait Deviation {
    fn deviation(&self, reference: &Self) -> f64;
}

impl Deviation for f64 {
    fn deviation(&self, reference: &Self) -> f64 {
        (self - reference).abs()
    }
}

impl Deviation for Complex64 {
    fn deviation(&self, reference: &Self) -> f64 {
        (self - reference).norm()
    }
}

/// Operators are compared in `L¹`.
impl Deviation for Operator {
    fn deviation(&self, reference: &Self) -> f64 {
        (self - reference).norm(NormKind::L1)
    }
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport<T> {
    /// Largest `min(k)` over the samples.
    pub horizon: usize,
    /// Entry `n` is the sup of deviations over samples with `min(k) ≥ n`;
    /// entry 0 repeats entry 1.
    pub frontier_sup: Vec<f64>,
    pub verdict: Verdict,
    /// Value at the sample with the largest `min(k)`.
    pub limit_estimate: T,
}

impl<T> ConvergenceReport<T> {
    pub fn tail(&self) -> f64 {
        self.frontier_sup[self.horizon]
    }

    /// `frontier_sup[n]` with `n` clamped to the horizon.
    pub fn frontier_at(&self, n: usize) -> f64 {
        self.frontier_sup[n.min(self.horizon)]
    }
}

/// Nonincreasing frontier from `(min(k), deviation)` pairs.
pub fn frontier(samples: &[(usize, f64)]) -> Result<Vec<f64>> {
    let horizon = samples.iter().map(|s| s.0).max().ok_or(Error::EmptyGrid)?;
    let mut by_min = vec![0.0f64; horizon + 1];
    for &(m, dev) in samples {
        by_min[m] = by_min[m].max(dev);
    }
    let mut out = vec![0.0f64; horizon + 1];
    let mut run = 0.0f64;
    for n in (0..=horizon).rev() {
        run = run.max(by_min[n]);
        out[n] = run;
    }
    debug_assert!(out.windows(2).all(|w| w[0] >= w[1]));
    Ok(out)
}

/// Verdict rule: converged when the tail is within `tol`; diverged when the
/// tail has not dropped below 90% of the frontier at half the horizon.
pub fn verdict_for(frontier_sup: &[f64], tol: f64) -> Verdict {
    let horizon = frontier_sup.len() - 1;
    let tail = frontier_sup[horizon];
    if tail <= tol {
        Verdict::Converged
    } else if tail >= 0.9 * frontier_sup[(horizon / 2).max(1).min(horizon)] {
        Verdict::Diverged
    } else {
        Verdict::Inconclusive
    }
}

pub fn pringsheim_report<T: Deviation + Clone>(values: &[(MultiIndex, T)], reference: &T, tol: f64) -> Result<ConvergenceReport<T>> {
    let best = values.iter().max_by(|p, q| p.0.min_k().cmp(&q.0.min_k()).then(p.0.cmp(&q.0))).ok_or(Error::EmptyGrid)?;
    let samples: Vec<(usize, f64)> = values.iter().map(|(k, v)| (k.min_k(), v.deviation(reference))).collect();
    let frontier_sup = frontier(&samples)?;
    Ok(ConvergenceReport {
        horizon: frontier_sup.len() - 1,
        verdict: verdict_for(&frontier_sup, tol),
        frontier_sup,
        limit_estimate: best.1.clone(),
    })
}

/// One row of the convergence CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridRow {
    pub k: MultiIndex,
    pub deviation_l1: f64,
    pub deviation_op: f64,
    pub frontier_min: f64,
}

#[derive(Clone, Debug)]
pub struct L1Experiment {
    pub report: ConvergenceReport<Operator>,
    pub rows: Vec<GridRow>,
    /// `Φ_1(…Φ_d(x))`.
    pub limit: Operator,
}

/// `‖s_k(x) − Φ_1(…Φ_d(x))‖₁` over the default grid.
pub fn l1_convergence_experiment(kernels: &[Kernel], x: &Operator, horizon: usize, tol: f64) -> Result<L1Experiment> {
    l1_convergence_on_grid(kernels, x, &default_grid(kernels.len(), horizon), tol)
}

pub fn l1_convergence_on_grid(kernels: &[Kernel], x: &Operator, grid: &Grid, tol: f64) -> Result<L1Experiment> {
    check_inputs(kernels, x)?;
    let limit = composed_limit(kernels, x, tol)?;
    let values = cesaro_grid(kernels, x, grid)?;
    l1_experiment_from_values(&values, limit, tol)
}

/// Report and CSV rows for sampled averages against a known limit.
pub fn l1_experiment_from_values(values: &[(MultiIndex, Operator)], limit: Operator, tol: f64) -> Result<L1Experiment> {
    let report = pringsheim_report(values, &limit, tol)?;
    let rows = values
        .iter()
        .map(|(k, v)| {
            let diff = v - &limit;
            GridRow {
                k: k.clone(),
                deviation_l1: diff.norm(NormKind::L1),
                deviation_op: diff.norm(NormKind::Op),
                frontier_min: report.frontier_at(k.min_k()),
            }
        })
        .collect();
    Ok(L1Experiment { report, rows, limit })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShiftRow {
    pub n: usize,
    pub sup_entry: f64,
    pub l1_norm: f64,
}

/// Averages of the truncated shift on `ℂ^N` applied to the first basis
/// projection. The shift is applied through its index action, so `N` is not
/// limited by the dense kernel cap.
pub fn shift_counterexample(n_dim: usize, horizon: usize) -> Result<Vec<ShiftRow>> {
    if horizon > n_dim {
        return Err(Error::BadParameter(format!("horizon {horizon} exceeds dimension {n_dim}")));
    }
    if n_dim == 0 {
        return Err(Error::BadParameter("dimension must be positive".into()));
    }
    let mut cur = vec![0.0f64; n_dim];
    cur[0] = 1.0;
    let mut acc = cur.clone();
    let mut rows = Vec::with_capacity(horizon);
    for n in 1..=horizon {
        if n > 1 {
            cur.rotate_right(1);
            cur[0] = 0.0;
            for (a, c) in acc.iter_mut().zip(&cur) {
                *a += c;
            }
        }
        let inv = n as f64;
        let avg: Vec<f64> = acc.iter().map(|a| a / inv).collect();
        rows.push(ShiftRow {
            n,
            sup_entry: avg.iter().cloned().fold(0.0, f64::max),
            l1_norm: avg.iter().map(|v| v.abs()).sum(),
        });
    }
    Ok(rows)
}

/// Multi-indices with all pairwise ratios below `c`: `k_i(n) = ⌈n / r_i⌉`
/// with `r_i` evenly spaced in `[1, (1 + c)/2]`, for `n = 1..=horizon`.
pub fn sector_schedule(d: usize, c: f64, horizon: usize) -> Vec<MultiIndex> {
    assert!(d >= 1 && c > 1.0, "sector needs d ≥ 1 and C > 1");
    let rmax = (1.0 + c) / 2.0;
    let ratios: Vec<f64> =
        (0..d).map(|i| if d == 1 { 1.0 } else { 1.0 + (rmax - 1.0) * i as f64 / (d - 1) as f64 }).collect();
    let mut out: Vec<MultiIndex> = Vec::with_capacity(horizon);
    for n in 1..=horizon {
        let k: Vec<usize> = ratios.iter().map(|r| ((n as f64 / r - 1e-12).ceil() as usize).max(1)).collect();
        let k = MultiIndex(k);
        if out.last() != Some(&k) {
            out.push(k);
        }
    }
    out
}

/// Composition of mean projections `Φ_1 ∘ … ∘ Φ_d` applied to `x`.
pub fn composed_limit(kernels: &[Kernel], x: &Operator, tol: f64) -> Result<Operator> {
    let mut limit = x.clone();
    for k in kernels.iter().rev() {
        limit = mean_projection(k, tol)?.apply(&limit);
    }
    Ok(limit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance;
    use crate::kernel::{cyclic_shift, kernel_from_stochastic, kernel_from_unitary, truncated_shift};
    use proptest::prelude::*;

    fn shift4() -> Kernel {
        let a = Algebra::uniform_diagonal(4).unwrap();
        kernel_from_unitary(&a, &cyclic_shift(4), 1e-12).unwrap()
    }

    fn pair(seed: u64) -> (Algebra, Vec<Kernel>) {
        let a = Algebra::new(&[(3, 1.0), (2, 0.5)]).unwrap();
        let ks = instance::generate_instance("commuting-pair", seed, &a).unwrap().kernels().unwrap();
        (a, ks)
    }

    #[test]
    fn identity_kernels_fix_x() {
        let a = Algebra::new(&[(2, 1.0), (1, 2.0)]).unwrap();
        let id = Kernel::identity(&a);
        let mut rng = instance::rng_from_seed(1);
        let x = instance::random_operator(&mut rng, &a);
        for k in [vec![1, 1], vec![3, 7], vec![10, 2]] {
            let s = cesaro_multi(&[id.clone(), id.clone()], &x, &MultiIndex::new(k).unwrap()).unwrap();
            assert!((&s - &x).max_abs() < 1e-15);
        }
    }

    #[test]
    fn full_orbit_average() {
        let k = shift4();
        let a = k.algebra().clone();
        let x = a.diag(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        let s = cesaro_multi(&[k], &x, &MultiIndex::new(vec![4]).unwrap()).unwrap();
        for b in 0..4 {
            assert!((s.entry(b, 0, 0).re - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_noncommuting() {
        let a = Algebra::full(2).unwrap();
        let x = Matrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let h = Matrix::from_real_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]]).scale_real(0.5f64.sqrt());
        let ks = [kernel_from_unitary(&a, &x, 1e-12).unwrap(), kernel_from_unitary(&a, &h, 1e-12).unwrap()];
        let r = cesaro_multi(&ks, &a.identity(), &MultiIndex::new(vec![2, 2]).unwrap());
        assert!(matches!(r, Err(Error::NonCommutingKernels { .. })));
    }

    #[test]
    fn nested_average_oracle() {
        let (a, ks) = pair(4);
        let mut rng = instance::rng_from_seed(8);
        let x = instance::random_operator(&mut rng, &a);
        let k = MultiIndex::new(vec![5, 7]).unwrap();
        // Direct double sum of composed powers.
        let mut acc = a.zero();
        for j1 in 0..5 {
            for j2 in 0..7 {
                let mut y = x.clone();
                for _ in 0..j2 {
                    y = ks[1].apply(&y);
                }
                for _ in 0..j1 {
                    y = ks[0].apply(&y);
                }
                acc = &acc + &y;
            }
        }
        let direct = acc.scale(1.0 / 35.0);
        let s = cesaro_multi(&ks, &x, &k).unwrap();
        assert!((&s - &direct).max_abs() < 1e-10);
    }

    #[test]
    fn grid_matches_pointwise() {
        let (a, ks) = pair(2);
        let mut rng = instance::rng_from_seed(3);
        let x = instance::random_operator(&mut rng, &a);
        let grid = Grid::Product(vec![vec![1, 2, 5, 9], vec![1, 3, 4]]);
        let vals = cesaro_grid(&ks, &x, &grid).unwrap();
        assert_eq!(vals.len(), 12);
        for (k, v) in &vals {
            let s = cesaro_multi(&ks, &x, k).unwrap();
            assert!((&s - v).max_abs() < 1e-12);
        }
        assert!(vals.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn mean_projection_examples() {
        let a = Algebra::new(&[(2, 1.0), (1, 3.0)]).unwrap();
        let p = mean_projection(&Kernel::identity(&a), 1e-9).unwrap();
        assert!((&p.superoperator - &Matrix::identity(5)).max_abs() < 1e-12);

        let k = shift4();
        let p = mean_projection(&k, 1e-9).unwrap();
        assert_eq!(p.rank, 1);
        let y = p.apply(&k.algebra().diag(&[1.0, 2.0, 3.0, 6.0]).unwrap());
        for b in 0..4 {
            assert!((y.entry(b, 0, 0) - Complex64::new(3.0, 0.0)).norm() < 1e-12);
        }

        let a4 = Algebra::uniform_diagonal(4).unwrap();
        let ts = kernel_from_stochastic(&a4, &truncated_shift(4), 1e-12).unwrap();
        let p = mean_projection(&ts, 1e-9).unwrap();
        assert_eq!(p.rank, 0);
        assert_eq!(p.superoperator.max_abs(), 0.0);
    }

    #[test]
    fn mean_projection_idempotent_on_random_pair() {
        for seed in 0..3 {
            let (_, ks) = pair(seed);
            for k in &ks {
                let p = mean_projection(k, 1e-9).unwrap();
                assert!(p.idempotence_defect < 1e-9, "{}", p.idempotence_defect);
            }
        }
    }

    #[test]
    fn pringsheim_examples() {
        let idx: Vec<MultiIndex> =
            (1..=20).flat_map(|i| (1..=20).map(move |j| MultiIndex::new(vec![i, j]).unwrap())).collect();
        let constant: Vec<(MultiIndex, f64)> = idx.iter().map(|k| (k.clone(), 2.5)).collect();
        let r = pringsheim_report(&constant, &2.5, 1e-12).unwrap();
        assert_eq!(r.verdict, Verdict::Converged);
        assert!(r.frontier_sup.iter().all(|&v| v == 0.0));

        let inv: Vec<(MultiIndex, f64)> = idx.iter().map(|k| (k.clone(), 1.0 / k.min_k() as f64)).collect();
        let r = pringsheim_report(&inv, &0.0, 0.06).unwrap();
        assert_eq!(r.verdict, Verdict::Converged);
        for n in 1..=20 {
            assert_eq!(r.frontier_sup[n], 1.0 / n as f64);
        }

        let alt: Vec<(MultiIndex, f64)> =
            idx.iter().map(|k| (k.clone(), if k.components()[0] % 2 == 0 { 1.0 } else { -1.0 })).collect();
        assert_eq!(pringsheim_report(&alt, &0.0, 1e-3).unwrap().verdict, Verdict::Diverged);

        let empty: Vec<(MultiIndex, f64)> = Vec::new();
        assert!(matches!(pringsheim_report(&empty, &0.0, 1e-3), Err(Error::EmptyGrid)));
    }

    #[test]
    fn l1_identity_and_cyclic() {
        let a = Algebra::new(&[(2, 1.0)]).unwrap();
        let id = Kernel::identity(&a);
        let x = a.diag(&[1.0, 3.0]).unwrap();
        let e = l1_convergence_experiment(&[id.clone(), id], &x, 40, 1e-9).unwrap();
        assert!(e.rows.iter().all(|r| r.deviation_l1 < 1e-14));

        // Two commuting cyclic shifts on ℂ^16 = ℂ^4 ⊗ ℂ^4.
        let a16 = Algebra::uniform_diagonal(16).unwrap();
        let mut p1 = Matrix::zeros(16, 16);
        let mut p2 = Matrix::zeros(16, 16);
        for i in 0..4 {
            for j in 0..4 {
                p1[(((i + 1) % 4) * 4 + j, i * 4 + j)] = Complex64::new(1.0, 0.0);
                p2[(i * 4 + (j + 1) % 4, i * 4 + j)] = Complex64::new(1.0, 0.0);
            }
        }
        let k1 = kernel_from_unitary(&a16, &p1, 1e-12).unwrap();
        let k2 = kernel_from_unitary(&a16, &p2, 1e-12).unwrap();
        let mut d = vec![0.0; 16];
        d[0] = 1.0;
        d[5] = 2.0;
        let x = a16.diag(&d).unwrap();
        let e = l1_convergence_experiment(&[k1, k2], &x, 4000, 1e-3).unwrap();
        assert_eq!(e.report.verdict, Verdict::Converged);
        for b in 0..16 {
            assert!((e.limit.entry(b, 0, 0).re - 3.0 / 16.0).abs() < 1e-12);
        }
    }

    #[test]
    fn truncated_shift_shows_trace_loss() {
        let a = Algebra::uniform_diagonal(8).unwrap();
        let k = kernel_from_stochastic(&a, &truncated_shift(8), 1e-12).unwrap();
        let mut d = vec![0.0; 8];
        d[0] = 1.0;
        let x = a.diag(&d).unwrap();
        let small = l1_convergence_experiment(&[k.clone()], &x, 8, 1e-2).unwrap();
        assert!(small.rows.iter().all(|r| (r.deviation_l1 - 1.0).abs() < 1e-12));
        assert_eq!(small.report.verdict, Verdict::Diverged);
        let large = l1_convergence_experiment(&[k], &x, 1000, 1e-2).unwrap();
        assert!((large.report.tail() - 8.0 / 1000.0).abs() < 1e-12);
        assert_eq!(large.report.verdict, Verdict::Converged);
    }

    #[test]
    fn shift_counterexample_examples() {
        let rows = shift_counterexample(1000, 100).unwrap();
        assert_eq!(rows[99].sup_entry, 0.01);
        assert!((rows[99].l1_norm - 1.0).abs() < 1e-12);
        assert_eq!(rows[0].sup_entry, 1.0);
        assert_eq!(rows[0].l1_norm, 1.0);
        let rows = shift_counterexample(10, 10).unwrap();
        assert!((rows[9].l1_norm - 1.0).abs() < 1e-12);
        assert_eq!(rows[9].sup_entry, 0.1);
        assert!(matches!(shift_counterexample(10, 11), Err(Error::BadParameter(_))));
    }

    #[test]
    fn shift_counterexample_matches_dense_kernel() {
        let a = Algebra::uniform_diagonal(12).unwrap();
        let k = kernel_from_stochastic(&a, &truncated_shift(12), 1e-12).unwrap();
        let mut d = vec![0.0; 12];
        d[0] = 1.0;
        let x = a.diag(&d).unwrap();
        for row in shift_counterexample(12, 12).unwrap() {
            let s = cesaro_multi(&[k.clone()], &x, &MultiIndex::new(vec![row.n]).unwrap()).unwrap();
            assert!((s.norm(NormKind::L1) - row.l1_norm).abs() < 1e-13);
            assert!((s.max_abs() - row.sup_entry).abs() < 1e-15);
        }
    }

    #[test]
    fn sector_examples() {
        let s = sector_schedule(2, 2.0, 3);
        let got: Vec<Vec<usize>> = s.iter().map(|k| k.components().to_vec()).collect();
        assert_eq!(got, vec![vec![1, 1], vec![2, 2], vec![3, 2]]);
        let s = sector_schedule(1, 2.0, 3);
        let got: Vec<Vec<usize>> = s.iter().map(|k| k.components().to_vec()).collect();
        assert_eq!(got, vec![vec![1], vec![2], vec![3]]);
        let s = sector_schedule(2, 1.01, 100);
        assert!(s.iter().all(|k| k.components()[0] == k.components()[1]));
    }

    #[test]
    fn multi_index_validation() {
        assert!(MultiIndex::new(vec![]).is_err());
        assert!(MultiIndex::new(vec![1, 0]).is_err());
        let k = MultiIndex::new(vec![4, 2, 9]).unwrap();
        assert_eq!((k.min_k(), k.max_k()), (2, 9));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn averages_are_positive_and_contractive(seed in any::<u64>(), k1 in 1usize..20, k2 in 1usize..20) {
            let (a, ks) = pair(seed % 64);
            let mut rng = instance::rng_from_seed(seed);
            let x = instance::random_positive(&mut rng, &a);
            let s = cesaro_multi(&ks, &x, &MultiIndex::new(vec![k1, k2]).unwrap()).unwrap();
            prop_assert!(s.hermitian_part().min_eigenvalue() >= -1e-10);
            prop_assert!(s.norm(NormKind::Op) <= x.norm(NormKind::Op) + 1e-9);
        }

        #[test]
        fn kernel_order_does_not_matter(seed in any::<u64>(), k1 in 1usize..15, k2 in 1usize..15) {
            let (a, ks) = pair(seed % 64);
            let mut rng = instance::rng_from_seed(seed);
            let x = instance::random_operator(&mut rng, &a);
            let s = cesaro_multi(&ks, &x, &MultiIndex::new(vec![k1, k2]).unwrap()).unwrap();
            let swapped = [ks[1].clone(), ks[0].clone()];
            let t = cesaro_multi(&swapped, &x, &MultiIndex::new(vec![k2, k1]).unwrap()).unwrap();
            prop_assert!((&s - &t).max_abs() < 1e-10);
        }

        #[test]
        fn frontier_is_nonincreasing(devs in proptest::collection::vec((1usize..50, 0.0f64..10.0), 1..60)) {
            let f = frontier(&devs).unwrap();
            prop_assert!(f.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn sector_ratios_bounded(d in 1usize..5, c in 1.05f64..4.0, h in 1usize..200) {
            for k in sector_schedule(d, c, h) {
                prop_assert!((k.max_k() as f64) / (k.min_k() as f64) < c);
            }
        }
    }
}
