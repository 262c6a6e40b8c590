//! One runner per experiment kind. Runners return the artifact bytes; nothing
//! touches the filesystem here.

use ncergo_core::algebra::{Algebra, Operator};
use ncergo_core::cesaro::{l1_convergence_experiment, shift_counterexample, verdict_for, L1Experiment, Verdict};
use ncergo_core::freegroup::{dominance_check, dp_raster, free_group_experiment, free_group_family, vnwalker_experiment, vnwalker_instance};
use ncergo_core::freegroup::recurrence::BLOWUP;
use ncergo_core::instance::{commuting_unitaries, generate_instance, rng_from_seed};
use ncergo_core::kernel::{check_dimension, cyclic_shift, verify_kernel, Kernel};
use ncergo_core::linalg::Matrix;
use ncergo_core::maximal::{brunel_dominance_table, brunel_operator, brunel_weights, maximal_projection_search, ChiMode, SearchOptions};

use crate::config::{derive_seed, Config, FamilySpec, KernelSpec, OperatorSpec};
use crate::error::CliError;
use crate::output::{float, Table};

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub verdict: &'static str,
    pub success: bool,
    /// Name and value of the headline number in the summary line.
    pub key: (&'static str, f64),
    pub artifact: Vec<u8>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn pass_fail(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

pub fn run(cfg: &Config) -> Result<Outcome, CliError> {
    match cfg.experiment() {
        "dp-region" => dp_region(cfg),
        "cesaro" => cesaro(cfg),
        "mean-l1" => mean_l1(cfg),
        "vnwalker" => vnwalker(cfg),
        "freegroup" => freegroup(cfg),
        "dominance" => dominance(cfg),
        "maximal" => maximal(cfg),
        "counterexample" => counterexample(cfg),
        "brunel" => brunel(cfg),
        other => Err(config_err(format!("unknown experiment {other:?}"))),
    }
}

fn algebra(cfg: &Config, default: &[(usize, f64)]) -> Result<Algebra, CliError> {
    let blocks: Vec<(usize, f64)> = match &cfg.algebra {
        Some(bs) => bs.iter().map(|b| (b.dim, b.weight)).collect(),
        None => default.to_vec(),
    };
    let a = Algebra::new(&blocks)?;
    check_dimension(&a, cfg.dim_cap())?;
    Ok(a)
}

/// Kernels and the algebra they act on. Explicit kernel documents carry their
/// own algebra; generated ones use the configured (or default) algebra.
fn kernels(cfg: &Config, default_alg: &[(usize, f64)], default_kind: Option<&str>) -> Result<(Vec<Kernel>, Algebra), CliError> {
    let tol = cfg.tolerances.kernel;
    let generated = |kind: &str| -> Result<(Vec<Kernel>, Algebra), CliError> {
        let a = algebra(cfg, default_alg)?;
        let ks = generate_instance(kind, derive_seed(cfg.seed, 0), &a)?
            .kernels()
            .ok_or_else(|| config_err(format!("instance kind {kind:?} does not produce kernels")))?;
        Ok((ks, a))
    };
    match (&cfg.kernels, default_kind) {
        (Some(KernelSpec::Generate { generate }), _) => generated(generate),
        (Some(KernelSpec::List(docs)), _) => {
            if docs.is_empty() {
                return Err(config_err("kernel list is empty"));
            }
            let ks = docs.iter().map(|d| d.to_kernel(tol, cfg.dim_cap())).collect::<Result<Vec<_>, _>>()?;
            let a = ks[0].algebra().clone();
            Ok((ks, a))
        }
        (None, Some(kind)) => generated(kind),
        (None, None) => Err(config_err(format!("{} needs \"kernels\"", cfg.experiment()))),
    }
}

fn operators(cfg: &Config, a: &Algebra, default_count: usize) -> Result<Vec<Operator>, CliError> {
    match &cfg.operators {
        None => draw_operators(cfg, a, "positive-operator", default_count),
        Some(OperatorSpec::Generate { generate, count }) => draw_operators(cfg, a, generate, *count),
        Some(OperatorSpec::List(docs)) => Ok(docs.iter().map(|d| d.to_operator_in(a)).collect::<Result<Vec<_>, _>>()?),
    }
}

fn draw_operators(cfg: &Config, a: &Algebra, kind: &str, count: usize) -> Result<Vec<Operator>, CliError> {
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let ops = generate_instance(kind, derive_seed(cfg.seed, 1 + i as u64), a)?
            .operators()
            .ok_or_else(|| config_err(format!("instance kind {kind:?} does not produce operators")))?;
        out.extend(ops);
    }
    Ok(out)
}

fn single_operator(cfg: &Config, a: &Algebra) -> Result<Operator, CliError> {
    let mut xs = operators(cfg, a, 1)?;
    if xs.len() != 1 {
        return Err(config_err(format!("{} takes exactly one operator, got {}", cfg.experiment(), xs.len())));
    }
    Ok(xs.remove(0))
}

fn l1_table(exp: &L1Experiment, d: usize) -> Vec<u8> {
    let mut header: Vec<String> = (1..=d).map(|i| format!("k{i}")).collect();
    header.extend(["deviation_L1", "deviation_op", "frontier_min"].map(String::from));
    let mut t = Table::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for r in &exp.rows {
        let mut f: Vec<String> = r.k.components().iter().map(usize::to_string).collect();
        f.extend([float(r.deviation_l1), float(r.deviation_op), float(r.frontier_min)]);
        t.row(&f);
    }
    t.into_bytes()
}

fn verdict_outcome(v: Verdict, tail: f64, artifact: Vec<u8>) -> Outcome {
    Outcome { verdict: v.as_str(), success: v == Verdict::Converged, key: ("frontier_tail", tail), artifact }
}

fn dp_region(cfg: &Config) -> Result<Outcome, CliError> {
    let p = cfg.p_fwd.unwrap_or(0.75);
    let points = cfg.grid_points.unwrap_or(41);
    let extent = cfg.extent.unwrap_or(1.5);
    let n_max = cfg.horizon.unwrap_or(5000);
    let tol = cfg.tolerances.convergence.unwrap_or(1e-3);
    if !(extent > 0.0) {
        return Err(config_err("extent must be positive"));
    }
    let rows = dp_raster(p, points, extent, n_max)?;
    let mut t = Table::new(&["re_z", "im_z", "p_fwd", "member_root_criterion", "member_printed_formula", "sup_f", "cesaro_tail"]);
    for r in &rows {
        t.row(&[
            float(r.re_z),
            float(r.im_z),
            float(r.p_fwd),
            r.member_root_criterion.to_string(),
            r.member_printed_formula.to_string(),
            float(r.sup_f),
            float(r.cesaro_tail),
        ]);
    }
    // Points whose four grid neighbours share their root-criterion membership
    // are away from the boundary; agreement is measured there only.
    let at = |i: usize, j: usize| rows[i * points + j].member_root_criterion;
    let (mut interior, mut agree) = (0usize, 0usize);
    for i in 0..points {
        for j in 0..points {
            let m = at(i, j);
            let nbrs = [(i.wrapping_sub(1), j), (i + 1, j), (i, j.wrapping_sub(1)), (i, j + 1)];
            if nbrs.iter().any(|&(a, b)| a < points && b < points && at(a, b) != m) {
                continue;
            }
            interior += 1;
            let r = &rows[i * points + j];
            let empirical = r.sup_f < BLOWUP && r.cesaro_tail <= tol;
            agree += usize::from(empirical == m);
        }
    }
    let agreement = if interior == 0 { 1.0 } else { agree as f64 / interior as f64 };
    let ok = agreement >= cfg.min_agreement.unwrap_or(0.99);
    Ok(Outcome { verdict: pass_fail(ok), success: ok, key: ("agreement", agreement), artifact: t.into_bytes() })
}

fn cesaro(cfg: &Config) -> Result<Outcome, CliError> {
    let (ks, a) = kernels(cfg, &[(3, 1.0), (2, 1.0)], None)?;
    let x = single_operator(cfg, &a)?;
    let exp = l1_convergence_experiment(&ks, &x, cfg.horizon.unwrap_or(256), cfg.tolerances.kernel)?;
    let v = verdict_for(&exp.report.frontier_sup, cfg.tolerances.convergence.unwrap_or(1e-3));
    Ok(verdict_outcome(v, exp.report.tail(), l1_table(&exp, ks.len())))
}

/// Thresholds `(min k, bound)` on the L1 frontier.
const MEAN_L1_CHECKS: [(usize, f64); 2] = [(256, 1e-2), (2048, 1e-3)];

fn mean_l1(cfg: &Config) -> Result<Outcome, CliError> {
    let horizon = cfg.horizon.unwrap_or(2048);
    if horizon < MEAN_L1_CHECKS[0].0 {
        return Err(config_err(format!("mean-l1 needs horizon >= {}", MEAN_L1_CHECKS[0].0)));
    }
    let (ks, a) = kernels(cfg, &[(3, 1.0), (2, 1.0)], Some("commuting-pair"))?;
    let x = single_operator(cfg, &a)?;
    let exp = l1_convergence_experiment(&ks, &x, horizon, cfg.tolerances.kernel)?;
    let r = &exp.report;
    let ok = MEAN_L1_CHECKS.iter().filter(|c| c.0 <= r.horizon).all(|&(k, bound)| r.frontier_at(k) <= bound);
    Ok(Outcome { verdict: pass_fail(ok), success: ok, key: ("frontier_tail", r.tail()), artifact: l1_table(&exp, ks.len()) })
}

fn vnwalker(cfg: &Config) -> Result<Outcome, CliError> {
    let p1 = cfg.p1.unwrap_or(0.75);
    let p2 = cfg.p2.unwrap_or(0.6);
    let (x01, x10) = match (&cfg.x01, &cfg.x10) {
        (Some(a), Some(b)) => (a.to_single_matrix()?, b.to_single_matrix()?),
        (None, None) => {
            let dim = cfg.dim.unwrap_or(5);
            if dim == 0 || dim > cfg.dim_cap() {
                return Err(config_err(format!("dim must lie in 1..={}", cfg.dim_cap())));
            }
            vnwalker_instance(&mut rng_from_seed(derive_seed(cfg.seed, 0)), dim, p1, p2)?
        }
        _ => return Err(config_err("x01 and x10 must be given together")),
    };
    if x01.rows() > cfg.dim_cap() {
        return Err(ncergo_core::Error::DimensionCap(format!("dimension {} exceeds cap {}", x01.rows(), cfg.dim_cap())).into());
    }
    let r = vnwalker_experiment(&x01, &x10, p1, p2, cfg.horizon.unwrap_or(500), cfg.tolerances.kernel)?;
    let mut t = Table::new(&["k1", "k2", "deviation_HS", "deviation_op", "frontier_min"]);
    for row in &r.rows {
        t.row(&[
            row.k1.to_string(),
            row.k2.to_string(),
            float(row.deviation_hs),
            float(row.deviation_op),
            float(row.frontier_min),
        ]);
    }
    let v = verdict_for(&r.report.frontier_sup, cfg.tolerances.convergence.unwrap_or(5e-2));
    Ok(verdict_outcome(v, r.report.tail(), t.into_bytes()))
}

fn family_images(cfg: &Config) -> Result<(Algebra, Vec<Matrix>, Vec<Matrix>), CliError> {
    match cfg.family.clone().unwrap_or_default() {
        FamilySpec::Rotations { ring, steps1, steps2 } => {
            if ring < 2 || steps1.is_empty() || steps2.is_empty() {
                return Err(config_err("rotations need ring >= 2 and nonempty steps"));
            }
            let a = Algebra::uniform_diagonal(ring)?;
            check_dimension(&a, cfg.dim_cap())?;
            let shift = cyclic_shift(ring);
            let imgs = |s: &[usize]| s.iter().map(|&k| shift.pow(k)).collect::<Vec<_>>();
            Ok((a, imgs(&steps1), imgs(&steps2)))
        }
        FamilySpec::RandomUnitaries { r1, r2 } => {
            if r1 == 0 || r2 == 0 {
                return Err(config_err("r1 and r2 must be positive"));
            }
            let a = algebra(cfg, &[(2, 1.0), (1, 1.0)])?;
            let us: Vec<Matrix> =
                commuting_unitaries(&mut rng_from_seed(derive_seed(cfg.seed, 0)), &a, r1 + r2).iter().map(Operator::to_dense).collect();
            let (u1, u2) = us.split_at(r1);
            Ok((a, u1.to_vec(), u2.to_vec()))
        }
    }
}

fn freegroup(cfg: &Config) -> Result<Outcome, CliError> {
    let (a, i1, i2) = family_images(cfg)?;
    let x = single_operator(cfg, &a)?;
    let exp = free_group_experiment(&x, &i1, &i2, cfg.horizon.unwrap_or(1024), cfg.tolerances.kernel)?;
    let v = verdict_for(&exp.report.frontier_sup, cfg.tolerances.convergence.unwrap_or(1e-2));
    Ok(verdict_outcome(v, exp.report.tail(), l1_table(&exp, 2)))
}

fn dominance(cfg: &Config) -> Result<Outcome, CliError> {
    let (a, i1, i2) = family_images(cfg)?;
    let x = single_operator(cfg, &a)?;
    let f = free_group_family(&a, &i1, &i2, cfg.tolerances.kernel)?;
    let m_max = cfg.m_max.unwrap_or(4);
    if m_max == 0 {
        return Err(config_err("m_max must be at least 1"));
    }
    let mut t = Table::new(&["m", "n", "c"]);
    let mut cs = Vec::with_capacity(m_max * m_max);
    for m in 1..=m_max {
        for n in 1..=m_max {
            let c = dominance_check(&f, &x, m, n)?;
            t.row(&[m.to_string(), n.to_string(), float(c)]);
            cs.push(c);
        }
    }
    let max = cs.iter().copied().fold(0.0, f64::max);
    let min = cs.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio = if max == 0.0 { 1.0 } else { max / min };
    let ok = max.is_finite() && ratio <= cfg.max_ratio.unwrap_or(4.0);
    Ok(Outcome { verdict: pass_fail(ok), success: ok, key: ("max_c", max), artifact: t.into_bytes() })
}

fn maximal(cfg: &Config) -> Result<Outcome, CliError> {
    let (ks, a) = kernels(cfg, &[(4, 1.0)], Some("random-cptp"))?;
    let xs = operators(cfg, &a, 3)?;
    let eps = cfg.eps.clone().unwrap_or_else(|| vec![1.0; xs.len()]);
    if eps.len() != xs.len() {
        return Err(config_err(format!("{} eps values for {} operators", eps.len(), xs.len())));
    }
    let chi_mode = match cfg.chi_mode.as_deref() {
        None | Some("measured") => ChiMode::Measured,
        Some("strict") => ChiMode::Strict,
        Some(other) => return Err(config_err(format!("chi_mode must be \"measured\" or \"strict\", got {other:?}"))),
    };
    let defaults = SearchOptions::default();
    let opts = SearchOptions {
        horizon: cfg.horizon.unwrap_or(defaults.horizon),
        chi_mode,
        kadison: cfg.kadison.unwrap_or(false),
        brunel_order: cfg.brunel_order.unwrap_or(defaults.brunel_order),
    };
    let cert = maximal_projection_search(&ks, &xs, &eps, &opts)?;
    let mut json = cert.to_json(cfg.seed);
    json.push('\n');
    Ok(Outcome { verdict: pass_fail(cert.verified), success: cert.verified, key: ("chi", cert.chi), artifact: json.into_bytes() })
}

fn counterexample(cfg: &Config) -> Result<Outcome, CliError> {
    let rows = shift_counterexample(cfg.n_dim.unwrap_or(1000), cfg.horizon.unwrap_or(100))?;
    let mut t = Table::new(&["n", "sup_entry", "l1_norm"]);
    let mut worst: f64 = 0.0;
    let mut exact = true;
    for r in &rows {
        t.row(&[r.n.to_string(), float(r.sup_entry), float(r.l1_norm)]);
        worst = worst.max((r.l1_norm - 1.0).abs());
        exact &= (r.sup_entry - 1.0 / r.n as f64).abs() <= 4.0 * f64::EPSILON / r.n as f64;
    }
    let ok = worst <= 1e-12 && exact;
    Ok(Outcome { verdict: pass_fail(ok), success: ok, key: ("max_l1_defect", worst), artifact: t.into_bytes() })
}

fn brunel(cfg: &Config) -> Result<Outcome, CliError> {
    let (ks, a) = kernels(cfg, &[(2, 1.0), (2, 1.0)], Some("commuting-pair"))?;
    let x = single_operator(cfg, &a)?;
    let w = brunel_weights(ks.len(), cfg.brunel_order.unwrap_or(40))?;
    let tol = cfg.tolerances.kernel;
    let report = verify_kernel(&brunel_operator(&ks, &w)?, tol);
    let table = brunel_dominance_table(&ks, &w, &x, cfg.horizon.unwrap_or(20))?;
    let mut t = Table::new(&["n", "chi", "n_prime"]);
    for (i, b) in table.iter().enumerate() {
        t.row(&[(i + 1).to_string(), float(b.chi), b.n_prime.to_string()]);
    }
    let max_chi = table.iter().map(|b| b.chi).fold(0.0, f64::max);
    let ok = max_chi.is_finite() && report.is_kernel(tol) && report.is_unital(tol);
    Ok(Outcome { verdict: pass_fail(ok), success: ok, key: ("max_chi", max_chi), artifact: t.into_bytes() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(experiment: &str, body: &str) -> Config {
        let c = Config::from_json(body).unwrap();
        c.resolve(experiment, &crate::config::Overrides { out: Some("unused".into()), ..Default::default() }).unwrap()
    }

    #[test]
    fn operator_streams_are_distinct() {
        let c = cfg("maximal", r#"{"seed": 4}"#);
        let a = Algebra::full(2).unwrap();
        let xs = operators(&c, &a, 3).unwrap();
        assert_eq!(xs.len(), 3);
        assert!((&xs[0] - &xs[1]).max_abs() > 1e-3);
        assert_eq!(operators(&c, &a, 3).unwrap(), xs);
    }

    #[test]
    fn eps_length_is_checked() {
        let c = cfg("maximal", r#"{"seed": 4, "eps": [1.0]}"#);
        assert!(matches!(run(&c), Err(CliError::Config(_))));
        let c = cfg("maximal", r#"{"seed": 4, "chi_mode": "loose"}"#);
        assert!(matches!(run(&c), Err(CliError::Config(_))));
    }

    #[test]
    fn random_unitary_family() {
        let c = cfg("dominance", r#"{"seed": 2, "family": {"kind": "random-unitaries", "r1": 1, "r2": 2}, "m_max": 2}"#);
        let o = run(&c).unwrap();
        assert!(o.success, "{o:?}");
        let text = String::from_utf8(o.artifact).unwrap();
        assert_eq!(text.lines().count(), 5);
        let c = cfg("dominance", r#"{"family": {"kind": "random-unitaries", "r1": 0, "r2": 2}}"#);
        assert!(matches!(run(&c), Err(CliError::Config(_))));
    }

    #[test]
    fn dp_region_agreement_ignores_boundary() {
        let c = cfg("dp-region", r#"{"grid_points": 9, "horizon": 500, "min_agreement": 0.0}"#);
        let o = run(&c).unwrap();
        assert_eq!(o.key.0, "agreement");
        assert!(o.key.1 > 0.9 && o.key.1 <= 1.0);
        assert_eq!(String::from_utf8(o.artifact).unwrap().lines().count(), 82);
    }

    #[test]
    fn mean_l1_rejects_short_horizon() {
        let c = cfg("mean-l1", r#"{"horizon": 100}"#);
        assert!(matches!(run(&c), Err(CliError::Config(_))));
    }
}
