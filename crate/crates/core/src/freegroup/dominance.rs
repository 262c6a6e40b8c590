//! Dominance of rectangle averages by plain power averages, and decay of
//! averages applied to `S_m(A) − A`.

use crate::algebra::{NormKind, Operator};
use crate::cesaro::{sample_axis, DENSE_EDGE};
use crate::error::{Error, Result};

use super::family::{as_column, RecurrenceFamily};

/// Doubling stops here and the constant is reported as infinite.
pub const DOMINANCE_CAP: f64 = 1e12;
/// Bisection width on `C`.
pub const DOMINANCE_TOL: f64 = 1e-10;

fn rectangle_average(f: &RecurrenceFamily, x: &Operator, k1: usize, k2: usize) -> Result<Operator> {
    let rec = f.recurrence();
    let out = rec.rectangle_averages(&as_column(&x.to_vec()), &[k1], &[k2]);
    let (_, m) = out.into_iter().next().ok_or(Error::EmptyGrid)?;
    Operator::from_vec(x.algebra(), m.as_slice())
}

/// `(9mn)⁻¹ Σ_{j<3m} Σ_{l<3n} σ_{0,1}^j σ_{1,0}^l (A)`.
pub fn power_average(f: &RecurrenceFamily, a: &Operator, m: usize, n: usize) -> Operator {
    let (s10, s01) = (f.base10(), f.base01());
    let mut inner = a.algebra().zero();
    let mut cur = a.clone();
    for _ in 0..3 * n {
        inner = &inner + &cur;
        cur = s10.apply(&cur);
    }
    let mut acc = a.algebra().zero();
    let mut cur = inner;
    for _ in 0..3 * m {
        acc = &acc + &cur;
        cur = s01.apply(&cur);
    }
    acc.scale(1.0 / (9 * m * n) as f64)
}

/// Smallest `C ≥ 0` with `C·R − S_{m,n}(A) ⪰ 0` up to a slack of `1e-12` relative
/// to the operator norms involved, `R` as in [`power_average`]. Infinite when
/// no `C ≤ 1e12` works.
pub fn dominance_check(f: &RecurrenceFamily, a: &Operator, m: usize, n: usize) -> Result<f64> {
    if m == 0 || n == 0 {
        return Err(Error::BadParameter("dominance needs m, n ≥ 1".into()));
    }
    if a.algebra() != f.base10().algebra() {
        return Err(Error::AlgebraMismatch);
    }
    if !a.is_positive(1e-9) {
        return Err(Error::BadParameter("dominance needs A ≥ 0".into()));
    }
    let lhs = rectangle_average(f, a, m, n)?;
    let rhs = power_average(f, a, m, n);
    Ok(minimal_dominating_constant(&lhs, &rhs, DOMINANCE_TOL))
}

/// Smallest `C ≥ 0` with `C·rhs − lhs ⪰ −1e-12·scale`, by doubling from 1 and
/// bisecting to relative width `tol`. Infinite past [`DOMINANCE_CAP`].
pub fn minimal_dominating_constant(lhs: &Operator, rhs: &Operator, tol: f64) -> f64 {
    let (lhs, rhs) = (lhs.hermitian_part(), rhs.hermitian_part());
    let scale = lhs.norm(NormKind::Op).max(rhs.norm(NormKind::Op));
    let slack = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let ok = |c: f64| {
        let mut d = rhs.scale(c);
        d.axpy(-1.0, &lhs);
        d.min_eigenvalue() >= -slack
    };
    if ok(0.0) {
        return 0.0;
    }
    let mut hi = 1.0;
    while !ok(hi) {
        hi *= 2.0;
        if hi > DOMINANCE_CAP {
            return f64::INFINITY;
        }
    }
    let mut lo = if hi == 1.0 { 0.0 } else { hi / 2.0 };
    while hi - lo > tol * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothingRow {
    pub k: usize,
    /// `‖S_{k,k}(S_m(A) − A)‖_∞`.
    pub norm: f64,
}

/// Operator norms of `S_{k,k}(S_{m1,m2}(A) − A)` for `k` on the sampled axis up to `horizon`.
pub fn smoothing_decay(f: &RecurrenceFamily, a: &Operator, m: (usize, usize), horizon: usize) -> Result<Vec<SmoothingRow>> {
    if m.0 == 0 || m.1 == 0 || horizon == 0 {
        return Err(Error::BadParameter("smoothing needs m1, m2, horizon ≥ 1".into()));
    }
    if a.algebra() != f.base10().algebra() {
        return Err(Error::AlgebraMismatch);
    }
    let sm = rectangle_average(f, a, m.0, m.1)?;
    let b = &sm - a;
    let axis = sample_axis(horizon, DENSE_EDGE);
    let rec = f.recurrence();
    let rows = rec
        .rectangle_averages(&as_column(&b.to_vec()), &axis, &axis)
        .into_iter()
        .filter(|((k1, k2), _)| k1 == k2)
        .map(|((k, _), v)| Ok(SmoothingRow { k, norm: Operator::from_vec(a.algebra(), v.as_slice())?.norm(NormKind::Op) }))
        .collect::<Result<Vec<_>>>()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Algebra;
    use crate::freegroup::family::{make_family, partial_sum};
    use crate::freegroup::words::free_group_family;
    use crate::instance::{random_positive, rng_from_seed};
    use crate::kernel::{cyclic_shift, Kernel};

    fn z8_family() -> RecurrenceFamily {
        let a = Algebra::uniform_diagonal(8).unwrap();
        let r = |s| cyclic_shift(8).pow(s);
        free_group_family(&a, &[r(1), r(3)], &[r(2), r(5)], 1e-12).unwrap()
    }

    #[test]
    fn trivial_dominance() {
        let f = z8_family();
        let a = f.base10().algebra().clone();
        assert_eq!(dominance_check(&f, &a.zero(), 2, 3).unwrap(), 0.0);
        let c = dominance_check(&f, &a.identity(), 2, 2).unwrap();
        assert!((c - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dominance_matches_direct_sums() {
        let mut f = z8_family();
        let a = f.base10().algebra().clone();
        let x = random_positive(&mut rng_from_seed(3), &a);
        let direct = partial_sum(&mut f, 2, 3).unwrap().apply(&x);
        let rec = rectangle_average(&f, &x, 2, 3).unwrap();
        assert!((&direct - &rec).max_abs() < 1e-12);
        let c = dominance_check(&f, &x, 2, 3).unwrap();
        assert!(c.is_finite() && c > 0.0);
        let rhs = power_average(&f, &x, 2, 3);
        let mut d = rhs.scale(c * (1.0 + 1e-8));
        d.axpy(-1.0, &direct);
        assert!(d.min_eigenvalue() > -1e-12);
        let mut d = rhs.scale(c * (1.0 - 1e-6));
        d.axpy(-1.0, &direct);
        assert!(d.min_eigenvalue() < 0.0);
    }

    #[test]
    fn identity_family_smoothing_vanishes() {
        let a = Algebra::uniform_diagonal(4).unwrap();
        let id = Kernel::identity(&a);
        let f = make_family(&id, &id, 0.75, 0.75, 1e-12).unwrap();
        let x = a.diag(&[1.0, 2.0, 0.0, 0.5]).unwrap();
        assert!(smoothing_decay(&f, &x, (3, 2), 50).unwrap().iter().all(|r| r.norm == 0.0));
        let g = z8_family();
        let y = random_positive(&mut rng_from_seed(1), g.base10().algebra());
        assert!(smoothing_decay(&g, &y, (1, 1), 50).unwrap().iter().all(|r| r.norm == 0.0));
    }

    #[test]
    fn z8_smoothing_decays() {
        let f = z8_family();
        let a = f.base10().algebra().clone();
        let mut d = vec![0.0; 8];
        d[0] = 1.0;
        let x = a.diag(&d).unwrap();
        let rows = smoothing_decay(&f, &x, (2, 2), 200).unwrap();
        assert_eq!(rows.last().unwrap().k, 200);
        assert!(rows.last().unwrap().norm < 1e-2, "{:?}", rows.last());
        assert!(rows[0].norm > rows.last().unwrap().norm);
    }
}
