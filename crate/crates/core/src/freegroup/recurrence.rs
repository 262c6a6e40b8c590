//! Scalar three-term recurrence and its Cesàro convergence region.
//!
//! Convention: `p_fwd` multiplies the forward term,
//! `z f_n = p_fwd f_{n+1} + (1 − p_fwd) f_{n−1}`, with `f_0 = 1`, `f_1 = z`.
//! Writing the recurrence with the coefficient on the backward term instead
//! corresponds to `p = 1 − p_fwd`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Slack on the unit-disk test for characteristic roots.
pub const ROOT_TOL: f64 = 1e-12;
/// Growth level treated as unbounded by the empirical oracle.
pub const BLOWUP: f64 = 1e6;

pub(crate) fn check_p(p_fwd: f64) -> Result<()> {
    if p_fwd > 0.0 && p_fwd <= 1.0 {
        Ok(())
    } else {
        Err(Error::BadParameter(format!("p_fwd must lie in (0, 1], got {p_fwd}")))
    }
}

/// `f_0, …, f_N`.
pub fn f_sequence(z: Complex64, p_fwd: f64, n: usize) -> Result<Vec<Complex64>> {
    check_p(p_fwd)?;
    let mut f = Vec::with_capacity(n + 1);
    f.push(Complex64::new(1.0, 0.0));
    if n == 0 {
        return Ok(f);
    }
    f.push(z);
    for k in 1..n {
        let next = if p_fwd == 1.0 { z * f[k] } else { (z * f[k] - f[k - 1] * (1.0 - p_fwd)) / p_fwd };
        f.push(next);
    }
    Ok(f)
}

/// `(1/n) Σ_{k<n} f_k(z)`.
pub fn cesaro_scalar(z: Complex64, p_fwd: f64, n: usize) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::BadParameter("Cesàro index must be at least 1".into()));
    }
    let f = f_sequence(z, p_fwd, n - 1)?;
    Ok(f.iter().sum::<Complex64>() / n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DpQuery {
    pub z: Complex64,
    pub p_fwd: f64,
    /// Roots of `p_fwd t² − z t + (1 − p_fwd) = 0`.
    pub roots: [Complex64; 2],
    pub member: bool,
    /// Cesàro limit (meaningful only for members).
    pub limit: Complex64,
    /// Membership according to the radical inequalities, evaluated with
    /// `p = 1 − p_fwd` and principal square roots.
    pub member_printed_formula: bool,
}

impl DpQuery {
    pub fn max_root_modulus(&self) -> f64 {
        self.roots[0].norm().max(self.roots[1].norm())
    }

    pub fn formulas_agree(&self) -> bool {
        self.member == self.member_printed_formula
    }
}

/// Roots of `p t² − z t + (1 − p)` (for `p = 1`: `z` and `0`).
pub fn characteristic_roots(z: Complex64, p_fwd: f64) -> [Complex64; 2] {
    let disc = (z * z - 4.0 * p_fwd * (1.0 - p_fwd)).sqrt();
    let (a, b) = (z + disc, z - disc);
    // Take the larger-magnitude numerator and recover the other root from the
    // product to avoid cancellation.
    let big = if a.norm() >= b.norm() { a } else { b };
    if big.norm() == 0.0 {
        return [Complex64::new(0.0, 0.0); 2];
    }
    let t1 = big / (2.0 * p_fwd);
    let t2 = Complex64::new((1.0 - p_fwd) / p_fwd, 0.0) / t1;
    [t1, t2]
}

/// The two radical inequalities with `p = 1 − p_fwd`.
pub fn printed_formula_member(z: Complex64, p_fwd: f64) -> bool {
    let p = 1.0 - p_fwd;
    let bound = 2.0 * p.sqrt();
    let u = (z + 4.0 * p - 4.0 * p * p).sqrt();
    let v = (z - 4.0 * p - 4.0 * p * p).sqrt();
    (u + v).norm() <= bound && (u - v).norm() <= bound
}

pub fn dp_membership(z: Complex64, p_fwd: f64) -> Result<DpQuery> {
    check_p(p_fwd)?;
    let roots = characteristic_roots(z, p_fwd);
    let one = Complex64::new(1.0, 0.0);
    let special = z == one || z == -one;
    let inside = roots.iter().all(|t| t.norm() <= 1.0 + ROOT_TOL);
    let double_on_circle = (roots[0] - roots[1]).norm() <= 1e-9 && (roots[0].norm() - 1.0).abs() <= 1e-9;
    let member = special || (inside && !double_on_circle);
    let limit = if z == one { one } else { Complex64::new(0.0, 0.0) };
    Ok(DpQuery { z, p_fwd, roots, member, limit, member_printed_formula: printed_formula_member(z, p_fwd) })
}

/// Empirical behaviour of `f_n(z)` up to `n_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalarOracle {
    /// `sup_{n ≤ N} |f_n|`, stopping at the first value above [`BLOWUP`].
    pub sup_f: f64,
    /// `max_{9N/10 ≤ n ≤ N} |mean_n − mean_N|`.
    pub cesaro_tail: f64,
    pub bounded: bool,
}

impl ScalarOracle {
    pub fn converges(&self, cauchy_tol: f64) -> bool {
        self.bounded && self.cesaro_tail <= cauchy_tol
    }
}

pub fn scalar_oracle(z: Complex64, p_fwd: f64, n_max: usize) -> Result<ScalarOracle> {
    check_p(p_fwd)?;
    let n_max = n_max.max(2);
    let mut means = Vec::with_capacity(n_max + 1);
    let (mut prev, mut cur) = (Complex64::new(1.0, 0.0), z);
    let mut sum = prev;
    let mut sup = 1.0f64;
    means.push(Complex64::new(0.0, 0.0));
    means.push(sum);
    for n in 2..=n_max {
        sum += cur;
        means.push(sum / n as f64);
        sup = sup.max(cur.norm());
        if sup > BLOWUP || !sup.is_finite() {
            return Ok(ScalarOracle { sup_f: sup, cesaro_tail: f64::INFINITY, bounded: false });
        }
        let next = if p_fwd == 1.0 { z * cur } else { (z * cur - prev * (1.0 - p_fwd)) / p_fwd };
        prev = cur;
        cur = next;
    }
    let last = means[n_max];
    let tail = means[n_max - n_max / 10..=n_max].iter().map(|m| (m - last).norm()).fold(0.0, f64::max);
    Ok(ScalarOracle { sup_f: sup, cesaro_tail: tail, bounded: true })
}

/// One row of the region raster.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DpRow {
    pub re_z: f64,
    pub im_z: f64,
    pub p_fwd: f64,
    pub member_root_criterion: bool,
    pub member_printed_formula: bool,
    pub sup_f: f64,
    pub cesaro_tail: f64,
}

/// Square raster of `points x points` over `[−extent, extent]²`, row-major in
/// the imaginary part.
pub fn dp_raster(p_fwd: f64, points: usize, extent: f64, n_max: usize) -> Result<Vec<DpRow>> {
    check_p(p_fwd)?;
    if points < 2 {
        return Err(Error::BadParameter("raster needs at least 2 points per side".into()));
    }
    let step = 2.0 * extent / (points - 1) as f64;
    let mut rows = Vec::with_capacity(points * points);
    for i in 0..points {
        let im = -extent + step * i as f64;
        for j in 0..points {
            let re = -extent + step * j as f64;
            let z = Complex64::new(re, im);
            let q = dp_membership(z, p_fwd)?;
            let o = scalar_oracle(z, p_fwd, n_max)?;
            rows.push(DpRow {
                re_z: re,
                im_z: im,
                p_fwd,
                member_root_criterion: q.member,
                member_printed_formula: q.member_printed_formula,
                sup_f: o.sup_f,
                cesaro_tail: o.cesaro_tail,
            });
        }
    }
    Ok(rows)
}
