//! Brunel's weighted operator, the multiparameter maximal inequality as a
//! projection certificate, and bilateral almost-uniform certificates.
//!
//! The Brunel coefficients come from expanding `h(s) = 1 − √(1 − s)` in powers
//! of the product average `S = ∏ (I + α_i)/2`. Constants `χ` are measured.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::algebra::{eig_hermitian, NormKind, Operator};
use crate::cesaro::sample_axis;
use crate::error::{Error, Result};
use crate::freegroup::minimal_dominating_constant;
use crate::io::OperatorJson;
use crate::kernel::{commutation_defect, Kernel, Provenance};
use crate::linalg::Matrix;

/// Largest number of Brunel coefficients.
pub const SUPPORT_CAP: u128 = 1_000_000;
pub const CHI_TOL: f64 = 1e-6;
/// Slack in the certificate inequalities.
pub const CERT_SLACK: f64 = 1e-9;
const COMMUTE_TOL: f64 = 1e-9;

/// `c_j = binom(2j−2, j−1) / (j 2^{2j−1})`, for `j = 1..=J` (index 0 unused).
pub fn brunel_c(j_max: usize) -> Vec<f64> {
    let mut c = vec![0.0; j_max + 1];
    if j_max >= 1 {
        c[1] = 0.5;
    }
    for j in 1..j_max {
        c[j + 1] = c[j] * (2 * j - 1) as f64 / (2 * j + 2) as f64;
    }
    c
}

#[derive(Clone, Debug, PartialEq)]
pub struct BrunelWeights {
    pub d: usize,
    pub order: usize,
    /// `a(k)` keyed by the exponent multi-index.
    pub coefficients: BTreeMap<Vec<usize>, f64>,
    /// `1 − Σ_{j≤J} c_j = binom(2J, J) / 4^J`.
    pub normalization_defect: f64,
}

/// Truncated, renormalized Brunel coefficients on `{0..=J}^d`.
pub fn brunel_weights(d: usize, j_max: usize) -> Result<BrunelWeights> {
    if d == 0 || j_max == 0 {
        return Err(Error::BadParameter("Brunel weights need d, J ≥ 1".into()));
    }
    let count = (j_max as u128 + 1).checked_pow(d as u32).unwrap_or(u128::MAX);
    if count > SUPPORT_CAP {
        return Err(Error::CombinatorialExplosion { count });
    }
    let c = brunel_c(j_max);
    let mass: f64 = c.iter().sum();
    // rows[j][k] = binom(j, k) / 2^j
    let mut rows: Vec<Vec<f64>> = vec![vec![1.0]];
    for j in 1..=j_max {
        let prev = &rows[j - 1];
        let row = (0..=j)
            .map(|k| 0.5 * (if k > 0 { prev[k - 1] } else { 0.0 } + if k < j { prev[k] } else { 0.0 }))
            .collect();
        rows.push(row);
    }
    let mut coefficients = BTreeMap::new();
    let mut k = vec![0usize; d];
    loop {
        let mut a = 0.0;
        for j in 1..=j_max {
            let mut term = c[j];
            for &ki in &k {
                term *= if ki <= j { rows[j][ki] } else { 0.0 };
            }
            a += term;
        }
        coefficients.insert(k.clone(), a / mass);
        // Odometer over {0..=J}^d.
        let mut i = 0;
        while i < d {
            k[i] += 1;
            if k[i] <= j_max {
                break;
            }
            k[i] = 0;
            i += 1;
        }
        if i == d {
            break;
        }
    }
    Ok(BrunelWeights { d, order: j_max, coefficients, normalization_defect: 1.0 - mass })
}

fn check_pairwise_commuting(kernels: &[Kernel]) -> Result<()> {
    for (i, a) in kernels.iter().enumerate() {
        for b in &kernels[i + 1..] {
            let defect = commutation_defect(a, b)?;
            if defect > COMMUTE_TOL {
                return Err(Error::NonCommutingKernels { defect });
            }
        }
    }
    Ok(())
}

/// `U = Σ_k a(k) α_1^{k_1} ∘ … ∘ α_d^{k_d}`.
pub fn brunel_operator(kernels: &[Kernel], w: &BrunelWeights) -> Result<Kernel> {
    let first = kernels.first().ok_or_else(|| Error::BadParameter("no kernels supplied".into()))?;
    if kernels.len() != w.d {
        return Err(Error::BadParameter(format!("{} kernels for {}-dimensional weights", kernels.len(), w.d)));
    }
    let a = first.algebra().clone();
    if kernels.iter().any(|k| k.algebra() != &a) {
        return Err(Error::AlgebraMismatch);
    }
    check_pairwise_commuting(kernels)?;
    let n = a.vec_dim();
    let powers: Vec<Vec<Matrix>> = kernels
        .iter()
        .map(|k| {
            let mut p = vec![Matrix::identity(n)];
            for j in 0..w.order {
                let next = k.superoperator() * &p[j];
                p.push(next);
            }
            p
        })
        .collect();
    let mut u = Matrix::zeros(n, n);
    for (k, &coef) in &w.coefficients {
        if coef == 0.0 {
            continue;
        }
        let mut m = powers[0][k[0]].clone();
        for (i, &ki) in k.iter().enumerate().skip(1) {
            m = &m * &powers[i][ki];
        }
        u.axpy(num_complex::Complex64::new(coef, 0.0), &m);
    }
    Kernel::from_superoperator(&a, u, Provenance::Brunel)
}

/// Cube averages `n^{-d} Σ_{k ∈ [0,n)^d} α^k(x)` for `n = 1..=n_max`.
pub fn cube_averages(kernels: &[Kernel], x: &Operator, n_max: usize) -> Result<Vec<Operator>> {
    let a = x.algebra().clone();
    let dim = a.vec_dim();
    let mut power: Vec<Matrix> = vec![Matrix::identity(dim); kernels.len()];
    let mut partial: Vec<Matrix> = vec![Matrix::zeros(dim, dim); kernels.len()];
    let v = x.to_vec();
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        for (i, k) in kernels.iter().enumerate() {
            partial[i] += &power[i];
            power[i] = k.superoperator() * &power[i];
        }
        let mut y = v.clone();
        for p in partial.iter().rev() {
            y = p.matvec(&y);
        }
        let scale = 1.0 / (n as f64).powi(kernels.len() as i32);
        y.iter_mut().for_each(|t| *t *= scale);
        out.push(Operator::from_vec(&a, &y)?);
    }
    Ok(out)
}

/// `(1/n) Σ_{j<n} U^j(x)` for `n = 1..=n_max`.
pub fn power_averages(u: &Kernel, x: &Operator, n_max: usize) -> Vec<Operator> {
    let mut out = Vec::with_capacity(n_max);
    let mut cur = x.clone();
    let mut acc = x.algebra().zero();
    for n in 1..=n_max {
        acc = &acc + &cur;
        out.push(acc.scale(1.0 / n as f64));
        cur = u.apply(&cur);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BrunelDominance {
    pub chi: f64,
    pub n_prime: usize,
}

fn dominance_from(cube: &Operator, u_avgs: &[Operator], n: usize) -> BrunelDominance {
    let mut best = BrunelDominance { chi: f64::INFINITY, n_prime: n };
    for mult in [1, 2, 4, 8, 16] {
        let np = mult * n;
        let chi = minimal_dominating_constant(cube, &u_avgs[np - 1], CHI_TOL);
        if chi < best.chi {
            best = BrunelDominance { chi, n_prime: np };
        }
    }
    best
}

/// Smallest `χ` with `n^{-d} Σ_{[0,n)^d} α^k(x) ≤ (χ/n′) Σ_{j<n′} U^j(x)` over
/// `n′ ∈ {n, 2n, 4n, 8n, 16n}`.
pub fn brunel_dominance(kernels: &[Kernel], w: &BrunelWeights, x: &Operator, n: usize) -> Result<BrunelDominance> {
    if n == 0 {
        return Err(Error::BadParameter("dominance needs n ≥ 1".into()));
    }
    if !x.is_positive(1e-9) {
        return Err(Error::BadParameter("dominance needs x ≥ 0".into()));
    }
    let u = brunel_operator(kernels, w)?;
    let cube = cube_averages(kernels, x, n)?.pop().expect("n ≥ 1");
    Ok(dominance_from(&cube, &power_averages(&u, x, 16 * n), n))
}

/// `χ` measured for every `n = 1..=n_max`.
pub fn brunel_dominance_table(kernels: &[Kernel], w: &BrunelWeights, x: &Operator, n_max: usize) -> Result<Vec<BrunelDominance>> {
    if !x.is_positive(1e-9) {
        return Err(Error::BadParameter("dominance needs x ≥ 0".into()));
    }
    let u = brunel_operator(kernels, w)?;
    let cubes = cube_averages(kernels, x, n_max)?;
    let u_avgs = power_averages(&u, x, 16 * n_max);
    Ok(cubes.iter().enumerate().map(|(i, c)| dominance_from(c, &u_avgs, i + 1)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ChiMode {
    /// `χ = 1` for one kernel, measured Brunel constant otherwise.
    #[default]
    Measured,
    /// `χ = 1` regardless of `d`.
    Strict,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchOptions {
    pub horizon: usize,
    pub chi_mode: ChiMode,
    /// Measure `‖A^{1/2} p‖²` in place of `‖pAp‖`.
    pub kadison: bool,
    /// Truncation order of the Brunel weights.
    pub brunel_order: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { horizon: 200, chi_mode: ChiMode::Measured, kadison: false, brunel_order: 40 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchStrategy {
    Greedy,
    Envelope,
}

#[derive(Clone, Debug)]
pub struct ProjectionCertificate {
    pub p: Operator,
    pub trace_complement: f64,
    /// `2 Σ_m ε_m⁻¹ τ(x_m)`.
    pub budget: f64,
    pub chi: f64,
    /// `(n, m, ‖p A_{n,m} p‖)` with `m` 1-based.
    pub bounds: Vec<(usize, usize, f64)>,
    pub verified: bool,
    pub strategy: SearchStrategy,
    /// Trace complement after each excision, nondecreasing.
    pub excision_trace: Vec<f64>,
}

#[derive(Serialize)]
struct CertificateJson<'a> {
    p: OperatorJson,
    trace_complement: f64,
    chi: f64,
    bounds: &'a [(usize, usize, f64)],
    verified: bool,
    seed: u64,
}

impl ProjectionCertificate {
    pub fn to_json(&self, seed: u64) -> String {
        let j = CertificateJson {
            p: OperatorJson::from_operator(&self.p),
            trace_complement: self.trace_complement,
            chi: self.chi,
            bounds: &self.bounds,
            verified: self.verified,
            seed,
        };
        serde_json::to_string_pretty(&j).expect("certificate serializes")
    }
}

fn compressed_norm(p: &Operator, a: &Operator, kadison: bool) -> Result<f64> {
    let pap = &(p * a) * p;
    let direct = pap.norm(NormKind::Op);
    if !kadison {
        return Ok(direct);
    }
    let root = a.hermitian_part().apply_real_fn(1e-9, |t| t.max(0.0).sqrt())?;
    let one_sided = (&root * p).norm(NormKind::Op).powi(2);
    assert!(
        (one_sided - direct).abs() <= 1e-9 * (1.0 + direct),
        "one-sided and two-sided norms disagree: {one_sided} vs {direct}"
    );
    Ok(one_sided)
}

struct SearchState<'a> {
    averages: &'a [Vec<Operator>],
    thresholds: &'a [f64],
    kadison: bool,
}

impl SearchState<'_> {
    fn table(&self, p: &Operator) -> Result<Vec<(usize, usize, f64)>> {
        let mut out = Vec::new();
        for (m, avgs) in self.averages.iter().enumerate() {
            for (i, a) in avgs.iter().enumerate() {
                out.push((i + 1, m + 1, compressed_norm(p, a, self.kadison)?));
            }
        }
        Ok(out)
    }

    /// Greedy excision from `p` until every bound holds or the budget is passed.
    fn excise(&self, mut p: Operator, budget: f64, trail: &mut Vec<f64>) -> Result<Operator> {
        let id = p.algebra().identity();
        loop {
            let mut worst: Option<(f64, usize, usize)> = None;
            for (m, avgs) in self.averages.iter().enumerate() {
                let thr = self.thresholds[m];
                for (i, a) in avgs.iter().enumerate() {
                    let v = compressed_norm(&p, a, false)?;
                    if v > thr + CERT_SLACK && worst.is_none_or(|w| v / thr > w.0) {
                        worst = Some((v / thr, m, i));
                    }
                }
            }
            let Some((_, m, i)) = worst else {
                return Ok(p);
            };
            let pap = (&(&p * &self.averages[m][i]) * &p).hermitian_part();
            let thr = self.thresholds[m];
            let q = eig_hermitian(&pap, 1e-8)?.projection_where(|l| l.re > thr);
            p = (&p - &q).hermitian_part();
            let tc = (&id - &p).trace().re;
            trail.push(tc);
            if tc > budget + CERT_SLACK {
                return Ok(p);
            }
        }
    }
}

/// Searches for `p` with `τ(1 − p) ≤ 2 Σ ε_m⁻¹ τ(x_m)` and
/// `‖p A_{n,m} p‖ ≤ 2 χ ε_m` for all `n ≤ horizon`, where `A_{n,m}` is the
/// cube average of `x_m`. Greedy excision from `I` first, then excision from
/// the spectral projection `{y ≤ 1}` of `y = Σ ε_m⁻¹ (1/N) Σ_{j<N} U^j(x_m)`.
pub fn maximal_projection_search(kernels: &[Kernel], xs: &[Operator], eps: &[f64], opts: &SearchOptions) -> Result<ProjectionCertificate> {
    if xs.len() != eps.len() || xs.is_empty() {
        return Err(Error::BadParameter("xs and eps must be nonempty and of equal length".into()));
    }
    if eps.iter().any(|&e| !(e > 0.0)) || opts.horizon == 0 {
        return Err(Error::BadParameter("eps must be positive and horizon ≥ 1".into()));
    }
    let first = kernels.first().ok_or_else(|| Error::BadParameter("no kernels supplied".into()))?;
    let alg = first.algebra().clone();
    for x in xs {
        if x.algebra() != &alg {
            return Err(Error::AlgebraMismatch);
        }
        if !x.is_positive(1e-9) {
            return Err(Error::BadParameter("search needs every x ≥ 0".into()));
        }
    }
    check_pairwise_commuting(kernels)?;
    let d = kernels.len();
    let u = if d == 1 {
        first.clone()
    } else {
        brunel_operator(kernels, &brunel_weights(d, opts.brunel_order)?)?
    };
    let averages: Vec<Vec<Operator>> = xs.iter().map(|x| cube_averages(kernels, x, opts.horizon)).collect::<Result<_>>()?;
    let chi = if d == 1 || opts.chi_mode == ChiMode::Strict {
        1.0
    } else {
        let samples = sample_axis(opts.horizon, 8);
        let mut chi: f64 = 0.0;
        for (x, avgs) in xs.iter().zip(&averages) {
            let u_avgs = power_averages(&u, x, 16 * opts.horizon);
            for &n in &samples {
                chi = chi.max(dominance_from(&avgs[n - 1], &u_avgs, n).chi);
            }
        }
        chi
    };
    if !chi.is_finite() {
        return Err(Error::SearchFailed { trace_complement: f64::INFINITY, budget: f64::INFINITY });
    }
    let thresholds: Vec<f64> = eps.iter().map(|e| 2.0 * chi * e).collect();
    let budget = 2.0 * xs.iter().zip(eps).map(|(x, e)| x.trace().re / e).sum::<f64>();
    let state = SearchState { averages: &averages, thresholds: &thresholds, kadison: opts.kadison };
    let id = alg.identity();

    let finish = |p: Operator, strategy: SearchStrategy, trail: Vec<f64>| -> Result<ProjectionCertificate> {
        let trace_complement = (&id - &p).trace().re;
        let bounds = state.table(&p)?;
        let bounds_ok = bounds.iter().all(|&(_, m, v)| v <= thresholds[m - 1] + CERT_SLACK);
        let verified = p.projection_defect() <= 1e-10 && trace_complement <= budget + CERT_SLACK && bounds_ok;
        Ok(ProjectionCertificate { p, trace_complement, budget, chi, bounds, verified, strategy, excision_trace: trail })
    };

    let mut trail = Vec::new();
    let p = state.excise(id.clone(), budget, &mut trail)?;
    let cert = finish(p, SearchStrategy::Greedy, trail)?;
    if cert.verified {
        return Ok(cert);
    }

    let mut y = alg.zero();
    for (x, e) in xs.iter().zip(eps) {
        let avg = power_averages(&u, x, opts.horizon).pop().expect("horizon ≥ 1");
        y.axpy(1.0 / e, &avg);
    }
    let p0 = eig_hermitian(&y.hermitian_part(), 1e-8)?.projection_where(|l| l.re <= 1.0);
    let mut trail = vec![(&id - &p0).trace().re];
    let p = state.excise(p0, budget, &mut trail)?;
    let cert = finish(p, SearchStrategy::Envelope, trail)?;
    if cert.trace_complement > budget + CERT_SLACK {
        return Err(Error::SearchFailed { trace_complement: cert.trace_complement, budget });
    }
    Ok(cert)
}

#[derive(Clone, Debug)]
pub struct BauCertificate {
    pub p: Operator,
    pub trace_complement: f64,
    /// `(n, ‖p (x_n − limit) p‖)` for `n = 1..=horizon`.
    pub table: Vec<(usize, f64)>,
    /// The same table with `p = I`.
    pub identity_table: Vec<(usize, f64)>,
}

/// Spectral-cutoff search for a projection `p` with `τ(1 − p) < eps` that
/// minimizes `Σ_n ‖p (x_n − limit) p‖`; candidates are the complements of the
/// top eigenspaces of `D = Σ_n ratio^n |x_n − limit|`.
pub fn bau_certificate(
    sequence: impl Fn(usize) -> Operator,
    limit: &Operator,
    eps: f64,
    horizon: usize,
    ratio: f64,
) -> Result<BauCertificate> {
    if !(eps > 0.0) || horizon == 0 || !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::BadParameter("bau certificate needs eps > 0, horizon ≥ 1, ratio in (0, 1]".into()));
    }
    let alg = limit.algebra().clone();
    let devs: Vec<Operator> = (1..=horizon)
        .map(|n| {
            let x = sequence(n);
            if x.algebra() != &alg {
                return Err(Error::AlgebraMismatch);
            }
            Ok(&x - limit)
        })
        .collect::<Result<_>>()?;
    let mut acc = alg.zero();
    let mut w = 1.0;
    for dev in &devs {
        w *= ratio;
        acc.axpy(w, &dev.abs());
    }
    let table_for = |p: &Operator| -> Vec<(usize, f64)> {
        devs.iter().enumerate().map(|(i, dv)| (i + 1, (&(p * dv) * p).norm(NormKind::Op))).collect()
    };
    let id = alg.identity();
    let identity_table = table_for(&id);

    // Rank-one eigenprojections of D, largest eigenvalue first.
    let mut vecs: Vec<(f64, Operator)> = Vec::new();
    for (b, m) in acc.hermitian_part().blocks().iter().enumerate() {
        let e = crate::linalg::eigh(m);
        for j in 0..m.rows() {
            let mut blocks: Vec<Matrix> = alg.blocks().iter().map(|blk| Matrix::zeros(blk.dim, blk.dim)).collect();
            blocks[b] = crate::linalg::column_projector(&e.vectors, &[j]);
            vecs.push((e.values[j], Operator::new(&alg, blocks)?));
        }
    }
    vecs.sort_by(|x, y| y.0.total_cmp(&x.0));

    let score = |t: &[(usize, f64)]| t.iter().map(|r| r.1).sum::<f64>();
    let mut best = (id.clone(), 0.0, score(&identity_table), identity_table.clone());
    let mut p = id.clone();
    for (_, q) in &vecs {
        let tc = (&id - &(&p - q)).trace().re;
        if tc >= eps {
            break;
        }
        p = &p - q;
        let t = table_for(&p);
        let s = score(&t);
        if s < best.2 {
            best = (p.clone(), tc, s, t);
        }
    }
    let (p, trace_complement, _, table) = best;
    Ok(BauCertificate { p, trace_complement, table, identity_table })
}
