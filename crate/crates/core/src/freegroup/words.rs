//! Reduced words in free groups and the averaging operators they induce.
//!
//! A word is a sequence of signed generator indices: `+i` is generator `i`
//! (1-based) and `−i` its inverse.

use crate::algebra::{Algebra, Operator};
use crate::cesaro::{l1_experiment_from_values, pringsheim_report, sample_axis, ConvergenceReport, L1Experiment, MultiIndex, DENSE_EDGE};
use crate::error::{Error, Result};
use crate::kernel::{self, commutation_defect, Kernel, Provenance};
use crate::linalg::Matrix;

use super::family::{as_column, make_family, RecurrenceFamily};

/// Largest word count that may be enumerated.
pub const WORD_GUARD: u128 = 1_000_000;

/// `1` for `n = 0`, else `2r (2r − 1)^{n−1}`.
pub fn word_count(r: usize, n: usize) -> u128 {
    if n == 0 {
        return 1;
    }
    let r = r as u128;
    let mut c = 2 * r;
    for _ in 1..n {
        c = c.saturating_mul(2 * r - 1);
    }
    c
}

/// Lexicographic enumeration of reduced words of a fixed length.
#[derive(Clone, Debug)]
pub struct ReducedWords {
    r: usize,
    // Letters 0..2r: generator l/2, inverted when l is odd.
    letters: Vec<usize>,
    done: bool,
}

fn inverse(l: usize) -> usize {
    l ^ 1
}

impl ReducedWords {
    fn new(r: usize, n: usize) -> Self {
        let mut w = Self { r, letters: vec![0; n], done: r == 0 && n > 0 };
        if !w.done {
            w.fill_from(0);
        }
        w
    }

    fn allowed(&self, pos: usize, l: usize) -> bool {
        pos == 0 || self.letters[pos - 1] != inverse(l)
    }

    fn fill_from(&mut self, start: usize) {
        for pos in start..self.letters.len() {
            let l = (0..2 * self.r).find(|&l| self.allowed(pos, l)).expect("r ≥ 1 leaves a choice");
            self.letters[pos] = l;
        }
    }

    fn advance(&mut self) {
        for pos in (0..self.letters.len()).rev() {
            if let Some(l) = (self.letters[pos] + 1..2 * self.r).find(|&l| self.allowed(pos, l)) {
                self.letters[pos] = l;
                self.fill_from(pos + 1);
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for ReducedWords {
    type Item = Vec<i32>;

    fn next(&mut self) -> Option<Vec<i32>> {
        if self.done {
            return None;
        }
        let w = self.letters.iter().map(|&l| if l % 2 == 0 { (l / 2 + 1) as i32 } else { -((l / 2 + 1) as i32) }).collect();
        self.advance();
        Some(w)
    }
}

/// Count and lexicographic iterator of the reduced words of length `n` in `F_r`.
pub fn free_group_words(r: usize, n: usize) -> Result<(u128, ReducedWords)> {
    if r == 0 {
        return Err(Error::BadParameter("free group needs r ≥ 1".into()));
    }
    let count = word_count(r, n);
    if count > WORD_GUARD {
        return Err(Error::CombinatorialExplosion { count });
    }
    Ok((count, ReducedWords::new(r, n)))
}

/// Conjugation kernels of the generators and of their inverses, letter order.
fn letter_superoperators(a: &Algebra, images: &[Matrix], tol: f64) -> Result<Vec<Matrix>> {
    let mut out = Vec::with_capacity(2 * images.len());
    for u in images {
        out.push(kernel::kernel_from_unitary(a, u, tol)?.superoperator().clone());
        out.push(kernel::kernel_from_unitary(a, &u.adjoint(), tol)?.superoperator().clone());
    }
    Ok(out)
}

fn accumulate(letters: &[Matrix], prefix: &Matrix, last: Option<usize>, depth: usize, acc: &mut Matrix) {
    if depth == 0 {
        *acc += prefix;
        return;
    }
    for (l, g) in letters.iter().enumerate() {
        if last == Some(inverse(l)) {
            continue;
        }
        accumulate(letters, &(prefix * g), Some(l), depth - 1, acc);
    }
}

/// `|w_n|⁻¹ Σ_{|w| = n} Ad(U_w)` where `U_w` multiplies the generator images
/// (ambient unitaries mapping the algebra to itself) along the word.
pub fn word_averaging_operator(a: &Algebra, images: &[Matrix], n: usize, tol: f64) -> Result<Kernel> {
    let r = images.len();
    let (count, _) = free_group_words(r, n)?;
    let letters = letter_superoperators(a, images, tol)?;
    let dim = a.vec_dim();
    let mut acc = Matrix::zeros(dim, dim);
    accumulate(&letters, &Matrix::identity(dim), None, n, &mut acc);
    Kernel::from_superoperator(a, acc.scale_real(1.0 / count as f64), Provenance::Composite)
}

/// Forward coefficient of the free-group recurrence: `(2r − 1) / 2r`.
pub fn free_group_p(r: usize) -> f64 {
    (2 * r - 1) as f64 / (2 * r) as f64
}

fn check_actions_commute(a: &Algebra, images1: &[Matrix], images2: &[Matrix], tol: f64) -> Result<()> {
    let l1 = letter_superoperators(a, images1, tol)?;
    let l2 = letter_superoperators(a, images2, tol)?;
    let mut worst: f64 = 0.0;
    for g in &l1 {
        for h in &l2 {
            let kg = Kernel::from_superoperator(a, g.clone(), Provenance::Unitary)?;
            let kh = Kernel::from_superoperator(a, h.clone(), Provenance::Unitary)?;
            worst = worst.max(commutation_defect(&kg, &kh)?);
        }
    }
    if worst > tol {
        return Err(Error::NonCommutingActions { defect: worst });
    }
    Ok(())
}

/// Recurrence family of a pair of free-group actions: `σ_{1,0}`, `σ_{0,1}` are
/// the length-one word averages and `p_i = (2r_i − 1)/2r_i`.
pub fn free_group_family(a: &Algebra, images1: &[Matrix], images2: &[Matrix], tol: f64) -> Result<RecurrenceFamily> {
    check_actions_commute(a, images1, images2, tol)?;
    let b10 = word_averaging_operator(a, images1, 1, tol)?;
    let b01 = word_averaging_operator(a, images2, 1, tol)?;
    make_family(&b10, &b01, free_group_p(images1.len()), free_group_p(images2.len()), tol)
}

/// Outcome of [`multi_free_group_sim`].
#[derive(Clone, Debug)]
pub struct FreeGroupSim {
    /// Deviations of `S_{k1,k2}(x)` (in `L¹`) over the full rectangle.
    pub report: ConvergenceReport<Operator>,
    /// `S_n(x)` for `n = 1..=horizon`.
    pub square_sums: Vec<Operator>,
    pub limit: Operator,
}

/// Enumeration-built `σ_{j,k} = σ^{(1)}_j ∘ σ^{(2)}_k` averaged over rectangles
/// up to the horizon, against the composed mean projections of `σ^{(1)}_1`, `σ^{(2)}_1`.
pub fn multi_free_group_sim(
    x: &Operator,
    images1: &[Matrix],
    images2: &[Matrix],
    horizon: usize,
    tol: f64,
) -> Result<FreeGroupSim> {
    let a = x.algebra().clone();
    if horizon == 0 {
        return Err(Error::EmptyGrid);
    }
    check_actions_commute(&a, images1, images2, tol)?;
    let s1: Vec<Kernel> = (0..horizon).map(|j| word_averaging_operator(&a, images1, j, tol)).collect::<Result<_>>()?;
    let s2: Vec<Kernel> = (0..horizon).map(|k| word_averaging_operator(&a, images2, k, tol)).collect::<Result<_>>()?;
    let inner: Vec<Operator> = s2.iter().map(|k| k.apply(x)).collect();
    // prefix[j][k] = Σ_{j' ≤ j, k' ≤ k} σ_{j',k'}(x)
    let mut prefix: Vec<Vec<Operator>> = Vec::with_capacity(horizon);
    for (j, sj) in s1.iter().enumerate() {
        let mut row: Vec<Operator> = Vec::with_capacity(horizon);
        let mut run = a.zero();
        for (k, y) in inner.iter().enumerate() {
            run = &run + &sj.apply(y);
            let cell = if j == 0 { run.clone() } else { &run + &prefix[j - 1][k] };
            row.push(cell);
        }
        prefix.push(row);
    }
    let b1 = word_averaging_operator(&a, images1, 1, tol)?;
    let b2 = word_averaging_operator(&a, images2, 1, tol)?;
    let limit = crate::cesaro::composed_limit(&[b1, b2], x, tol)?;
    let mut values = Vec::with_capacity(horizon * horizon);
    for k1 in 1..=horizon {
        for k2 in 1..=horizon {
            values.push((MultiIndex::new(vec![k1, k2])?, prefix[k1 - 1][k2 - 1].scale(1.0 / (k1 * k2) as f64)));
        }
    }
    let report = pringsheim_report(&values, &limit, tol)?;
    let square_sums = (1..=horizon).map(|n| prefix[n - 1][n - 1].scale(1.0 / (n * n) as f64)).collect();
    Ok(FreeGroupSim { report, square_sums, limit })
}

/// Rectangle averages `S_{k1,k2}(x)` built by the three-term recurrence on the
/// sampled axis, against the composed mean projections of the length-1 averages.
pub fn free_group_experiment(
    x: &Operator,
    images1: &[Matrix],
    images2: &[Matrix],
    horizon: usize,
    tol: f64,
) -> Result<L1Experiment> {
    if horizon == 0 {
        return Err(Error::EmptyGrid);
    }
    let a = x.algebra().clone();
    let f = free_group_family(&a, images1, images2, tol)?;
    let limit = crate::cesaro::composed_limit(&[f.base10().clone(), f.base01().clone()], x, tol)?;
    let axis = sample_axis(horizon, DENSE_EDGE);
    let values = f
        .recurrence()
        .rectangle_averages(&as_column(&x.to_vec()), &axis, &axis)
        .into_iter()
        .map(|((k1, k2), v)| Ok((MultiIndex::new(vec![k1, k2])?, Operator::from_vec(&a, v.as_slice())?)))
        .collect::<Result<Vec<_>>>()?;
    l1_experiment_from_values(&values, limit, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freegroup::family::square_sum;
    use crate::kernel::{compose, cyclic_shift, superoperator_norm};

    fn rot(n: usize, s: usize) -> Matrix {
        cyclic_shift(n).pow(s)
    }

    #[test]
    fn word_counts() {
        assert_eq!(free_group_words(2, 1).unwrap().0, 4);
        assert_eq!(free_group_words(2, 2).unwrap().0, 12);
        for r in 1..4 {
            assert_eq!(free_group_words(r, 0).unwrap().0, 1);
            assert_eq!(free_group_words(r, 0).unwrap().1.count(), 1);
        }
        for n in 1..7 {
            let (c, it) = free_group_words(2, n).unwrap();
            assert_eq!(c, 4 * 3u128.pow(n as u32 - 1));
            assert_eq!(it.count() as u128, c);
        }
        assert!(matches!(free_group_words(2, 14), Err(Error::CombinatorialExplosion { .. })));
    }

    #[test]
    fn words_are_reduced_and_distinct() {
        let (_, it) = free_group_words(3, 4).unwrap();
        let words: Vec<Vec<i32>> = it.collect();
        let mut sorted = words.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), words.len());
        for w in &words {
            assert!(w.windows(2).all(|p| p[0] != -p[1]));
            assert!(w.iter().all(|&g| g != 0 && g.unsigned_abs() <= 3));
        }
        let (_, it) = free_group_words(2, 1).unwrap();
        assert_eq!(it.collect::<Vec<_>>(), vec![vec![1], vec![-1], vec![2], vec![-2]]);
    }

    #[test]
    fn zero_length_average_is_identity() {
        let a = Algebra::uniform_diagonal(5).unwrap();
        let k = word_averaging_operator(&a, &[rot(5, 1)], 0, 1e-12).unwrap();
        assert!((k.superoperator() - &Matrix::identity(5)).max_abs() == 0.0);
    }

    #[test]
    fn single_generator_recurrence() {
        let a = Algebra::uniform_diagonal(7).unwrap();
        let imgs = [rot(7, 1)];
        let s: Vec<Matrix> =
            (0..8).map(|n| word_averaging_operator(&a, &imgs, n, 1e-12).unwrap().superoperator().clone()).collect();
        let shift = kernel::kernel_from_unitary(&a, &rot(7, 1), 1e-12).unwrap();
        for n in 1..7 {
            let direct = (&shift.superoperator().pow(n) + &shift.superoperator().adjoint().pow(n)).scale_real(0.5);
            assert!((&s[n] - &direct).max_abs() < 1e-13);
            let lhs = &s[1] * &s[n];
            let rhs = (&s[n - 1] + &s[n + 1]).scale_real(0.5);
            assert!((&lhs - &rhs).max_abs() < 1e-13);
        }
    }

    #[test]
    fn two_generator_recurrence_identity() {
        let a = Algebra::uniform_diagonal(8).unwrap();
        let imgs = [rot(8, 1), rot(8, 3)];
        let s: Vec<Matrix> =
            (0..8).map(|n| word_averaging_operator(&a, &imgs, n, 1e-12).unwrap().superoperator().clone()).collect();
        for n in 1..7 {
            let lhs = &s[1] * &s[n];
            let rhs = &s[n - 1].scale_real(0.25) + &s[n + 1].scale_real(0.75);
            assert!(superoperator_norm(&a, &(&lhs - &rhs)) < 1e-12);
        }
    }

    #[test]
    fn recurrence_matches_enumeration() {
        let a = Algebra::uniform_diagonal(8).unwrap();
        let i1 = [rot(8, 1), rot(8, 3)];
        let i2 = [rot(8, 2), rot(8, 5)];
        let mut f = free_group_family(&a, &i1, &i2, 1e-12).unwrap();
        for m in 0..5 {
            let sm = word_averaging_operator(&a, &i1, m, 1e-12).unwrap();
            for n in 0..(5 - m) {
                let sn = word_averaging_operator(&a, &i2, n, 1e-12).unwrap();
                let direct = compose(&sm, &sn).unwrap();
                let rec = f.sigma(m, n);
                assert!(superoperator_norm(&a, &(rec.superoperator() - direct.superoperator())) < 1e-10);
            }
        }
    }

    #[test]
    fn noncommuting_actions_rejected() {
        let a = Algebra::full(2).unwrap();
        let x = Matrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let h = Matrix::from_real_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]]).scale_real(0.5f64.sqrt());
        assert!(matches!(
            multi_free_group_sim(&a.identity(), &[x], &[h], 3, 1e-10),
            Err(Error::NonCommutingActions { .. })
        ));
    }

    #[test]
    fn sim_examples() {
        let a = Algebra::uniform_diagonal(4).unwrap();
        let id = Matrix::identity(4);
        let x = a.diag(&[0.3, 1.0, 0.0, 2.0]).unwrap();
        let sim = multi_free_group_sim(&x, &[id.clone()], &[id], 4, 1e-9).unwrap();
        assert!(sim.square_sums.iter().all(|s| (s - &x).max_abs() < 1e-14));

        // ℤ4 × ℤ4 with one shift per factor.
        let a16 = Algebra::uniform_diagonal(16).unwrap();
        let mut p1 = Matrix::zeros(16, 16);
        let mut p2 = Matrix::zeros(16, 16);
        for i in 0..4 {
            for j in 0..4 {
                p1[(((i + 1) % 4) * 4 + j, i * 4 + j)] = crate::linalg::ONE;
                p2[(i * 4 + (j + 1) % 4, i * 4 + j)] = crate::linalg::ONE;
            }
        }
        let mut d = vec![0.0; 16];
        d[0] = 2.0;
        let x = a16.diag(&d).unwrap();
        let sim = multi_free_group_sim(&x, &[p1], &[p2], 12, 1e-9).unwrap();
        for b in 0..16 {
            assert!((sim.limit.entry(b, 0, 0).re - 2.0 / 16.0).abs() < 1e-12);
        }
        let devs: Vec<f64> = sim.square_sums.iter().map(|s| (s - &sim.limit).norm(crate::algebra::NormKind::L1)).collect();
        assert!(devs[11] < devs[0]);
    }

    #[test]
    fn sim_square_sums_match_recurrence() {
        let a = Algebra::uniform_diagonal(8).unwrap();
        let i1 = [rot(8, 1), rot(8, 3)];
        let i2 = [rot(8, 2), rot(8, 1)];
        let x = a.diag(&[1.0, 0.0, 0.5, 0.0, 0.0, 3.0, 0.0, 0.25]).unwrap();
        let sim = multi_free_group_sim(&x, &i1, &i2, 5, 1e-9).unwrap();
        let mut f = free_group_family(&a, &i1, &i2, 1e-12).unwrap();
        for n in 1..=5 {
            let s = square_sum(&mut f, n).unwrap().apply(&x);
            assert!((&s - &sim.square_sums[n - 1]).max_abs() < 1e-10);
        }
    }

    #[test]
    fn recurrence_experiment_matches_enumeration() {
        let a = Algebra::uniform_diagonal(8).unwrap();
        let x = a.diag(&[1.0, 0.0, 2.0, 0.0, 0.0, 0.5, 0.0, 0.0]).unwrap();
        let (i1, i2) = ([rot(8, 1), rot(8, 2)], [rot(8, 3), rot(8, 2)]);
        let rec = free_group_experiment(&x, &i1, &i2, 8, 1e-9).unwrap();
        let sim = multi_free_group_sim(&x, &i1, &i2, 8, 1e-9).unwrap();
        assert!((&rec.limit - &sim.limit).max_abs() < 1e-12);
        assert_eq!(rec.rows.len(), 64);
        let last = rec.rows.iter().find(|r| r.k.components() == [8, 8]).unwrap();
        let direct = (&sim.square_sums[7] - &sim.limit).norm(crate::algebra::NormKind::L1);
        assert!((last.deviation_l1 - direct).abs() < 1e-10);
        assert!((rec.report.tail() - sim.report.tail()).abs() < 1e-10);
    }
}
