//! Generalized completeness, ancillarity, the Basu independence property and
//! the UMVUE orthogonality criterion on deformed distributions.

use num_traits::Zero;
use serde::Serialize;

use crate::deformed::{statistic_pmf, FiniteDeformed, GaussianDeformed, LAMBDA_FREE_TOL};
use crate::error::{Error, Result};
use crate::exact::{coefficient_matrix, q_to_f64, RatFunc, Q};
use crate::glf::{sufficiency_check, Pairs, StatValue, Statistic};
use crate::linalg;
use crate::par::{self, Exec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Complete,
    Incomplete,
}

/// Evidence that `P̃_λ{h(T) = 0} < 1`: a tuple with `h(T(y)) ≠ 0` and positive mass.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub tuple: Vec<f64>,
    pub lambda: f64,
    pub probability: f64,
}

#[derive(Debug, Clone)]
pub struct CompletenessReport {
    pub statistic: String,
    pub verdict: Verdict,
    /// Values `t` of the statistic, in the column order of the matrix.
    pub values: Vec<StatValue>,
    /// `h(t)` as a primitive integer vector with positive leading entry.
    pub witness: Option<Vec<Q>>,
    pub kernel_dimension: usize,
    pub exact_rank: usize,
    pub float_rank: usize,
    /// Rows are powers of λ, columns are values of `T`.
    pub matrix: Vec<Vec<Q>>,
    pub certificate: Option<Certificate>,
    /// `max_λ |Ẽ_λ[h(T)]|` on the grid, a floating-point cross-check.
    pub grid_max_abs_expectation: f64,
}

impl CompletenessReport {
    /// Witness divided by its last nonzero entry (makes proportionality easy to read).
    pub fn witness_ratio_to(&self, scale: &Q) -> Option<Vec<Q>> {
        let w = self.witness.as_ref()?;
        let last = w.iter().rev().find(|c| !c.is_zero())?;
        Some(w.iter().map(|c| c / last * scale).collect())
    }
}

const SVD_THRESHOLD: f64 = 1e-10;

fn float_matrix(m: &[Vec<Q>]) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.iter().map(q_to_f64).collect()).collect()
}

/// Kernel vector chosen canonically: pivots are taken from the right-most
/// columns, and among the resulting basis the vector with the most leading
/// zeros is returned, scaled to a primitive integer vector.
fn canonical_kernel_vector(m: &[Vec<Q>], cols: usize) -> (usize, Option<Vec<Q>>) {
    let order: Vec<usize> = (0..cols).rev().collect();
    let ech = linalg::echelon(m, cols, &order);
    let basis = ech.nullspace(&order);
    let lead = |v: &Vec<Q>| v.iter().take_while(|c| c.is_zero()).count();
    let best = basis.iter().max_by_key(|v| (lead(v), std::cmp::Reverse(v.iter().filter(|c| !c.is_zero()).count())));
    let witness = best.map(|v| linalg::primitive(v).into_iter().map(Q::from_integer).collect());
    (ech.rank, witness)
}

/// Decides generalized completeness of `T` by polynomial identity.
pub fn completeness_check(dist: &FiniteDeformed, t: &Statistic) -> Result<CompletenessReport> {
    let pmf = statistic_pmf(dist, t)?;
    let funcs = pmf.exact.clone().ok_or_else(|| {
        Error::Unsupported(format!(
            "the deformed pmf of {} is not rational in λ; use completeness_grid_check for a necessary condition",
            t.name()
        ))
    })?;
    let cols = funcs.len();
    let matrix = coefficient_matrix(&funcs);
    let (exact_rank, witness) = canonical_kernel_vector(&matrix, cols);
    let float_rank = linalg::float_rank(&float_matrix(&matrix), cols, SVD_THRESHOLD);
    let kernel_dimension = cols - exact_rank;
    let values: Vec<StatValue> = pmf.sets.iter().map(|s| s.value.clone()).collect();

    let mut report = CompletenessReport {
        statistic: t.name().to_string(),
        verdict: if witness.is_some() { Verdict::Incomplete } else { Verdict::Complete },
        values,
        witness,
        kernel_dimension,
        exact_rank,
        float_rank,
        matrix,
        certificate: None,
        grid_max_abs_expectation: 0.0,
    };

    if let Some(h) = &report.witness {
        // exact re-verification: Σ_t h(t) g̃_t(λ) ≡ 0
        let terms: Vec<RatFunc> = funcs.iter().zip(h).map(|(g, c)| g.scale(c)).collect();
        if !crate::exact::sum(&terms).is_zero() {
            return Err(Error::numeric("completeness witness failed exact re-verification"));
        }
        let grid = dist.grid();
        for &l in &grid {
            let p = pmf.eval(l)?;
            let e: f64 = p.iter().zip(h).map(|(pi, c)| pi * q_to_f64(c)).sum();
            report.grid_max_abs_expectation = report.grid_max_abs_expectation.max(e.abs());
        }
        let cert = pmf.sets.iter().zip(h).find(|(_, c)| !c.is_zero()).and_then(|(set, _)| {
            let l = grid[grid.len() / 2];
            let p = dist.pmf(l).ok()?;
            set.members.iter().find(|&&i| p[i] > 0.0).map(|&i| Certificate {
                tuple: dist.tuples()[i].clone(),
                lambda: l,
                probability: p[i],
            })
        });
        if cert.is_none() {
            return Err(Error::numeric("completeness witness has no positive-mass certificate"));
        }
        report.certificate = cert;
    }
    Ok(report)
}

/// Necessary condition on a λ-grid: the grid-sampled matrix `[g̃_t(λ_k)]` has
/// full column rank. Works without rational weights.
#[derive(Debug, Clone, Serialize)]
pub struct GridCompleteness {
    pub statistic: String,
    pub values: usize,
    pub grid_rank: usize,
    pub full_rank: bool,
}

pub fn completeness_grid_check(dist: &FiniteDeformed, t: &Statistic, grid: &[f64]) -> Result<GridCompleteness> {
    let pmf = statistic_pmf(dist, t)?;
    let rows: Vec<Vec<f64>> = grid.iter().map(|&l| pmf.eval(l)).collect::<Result<_>>()?;
    let cols = pmf.sets.len();
    let rank = linalg::float_rank(&rows, cols, SVD_THRESHOLD);
    Ok(GridCompleteness { statistic: t.name().to_string(), values: cols, grid_rank: rank, full_rank: rank == cols })
}

#[derive(Debug, Clone, Serialize)]
pub struct AncillarityReport {
    pub statistic: String,
    pub ancillary: bool,
    /// Decided by rational-function constancy rather than the grid.
    pub exact: bool,
    pub max_spread: f64,
}

/// `A` is generalized ancillary when its deformed pmf does not depend on λ.
pub fn ancillarity_check(dist: &FiniteDeformed, a: &Statistic) -> Result<AncillarityReport> {
    let pmf = statistic_pmf(dist, a)?;
    let grid = dist.grid();
    let rows: Vec<Vec<f64>> = grid.iter().map(|&l| pmf.eval(l)).collect::<Result<_>>()?;
    let mid = &rows[rows.len() / 2];
    let max_spread = rows.iter().flat_map(|r| r.iter().zip(mid).map(|(x, y)| (x - y).abs())).fold(0.0, f64::max);
    let (ancillary, exact) = match &pmf.exact {
        Some(ex) => (ex.iter().all(RatFunc::is_constant), true),
        None => (max_spread <= LAMBDA_FREE_TOL, false),
    };
    Ok(AncillarityReport { statistic: a.name().to_string(), ancillary, exact, max_spread })
}

#[derive(Debug, Clone, Serialize)]
pub struct BasuReport {
    pub independent: bool,
    pub exact: bool,
    /// `max |P̃(T=t, A=a) - P̃(T=t) P̃(A=a)|` over the grid.
    pub max_gap: f64,
    pub cells: usize,
}

/// Joint factorization of `(T, A)` on a finite instance, after machine-verifying
/// that `T` is complete sufficient and `A` ancillary.
pub fn basu_independence_test(dist: &FiniteDeformed, t: &Statistic, a: &Statistic, tol: f64) -> Result<BasuReport> {
    let grid = dist.grid();
    let suff = sufficiency_check(t, dist.glf(), &grid, Pairs::Enumerate(dist.space()), LAMBDA_FREE_TOL)?;
    if !suff.passed {
        return Err(Error::Precondition(format!("{} is not generalized sufficient", t.name())));
    }
    if completeness_check(dist, t)?.verdict != Verdict::Complete {
        return Err(Error::Precondition(format!("{} is not generalized complete", t.name())));
    }
    if !ancillarity_check(dist, a)?.ancillary {
        return Err(Error::Precondition(format!("{} is not generalized ancillary", a.name())));
    }
    joint_factorization(dist, t, a, &grid, tol)
}

/// Checks `P̃(T=t, A=a) = P̃(T=t) P̃(A=a)` without verifying any precondition.
pub fn joint_factorization(
    dist: &FiniteDeformed,
    t: &Statistic,
    a: &Statistic,
    grid: &[f64],
    tol: f64,
) -> Result<BasuReport> {
    let tp = statistic_pmf(dist, t)?;
    let ap = statistic_pmf(dist, a)?;
    let mut cells = Vec::new();
    for (i, ts) in tp.sets.iter().enumerate() {
        for (j, as_) in ap.sets.iter().enumerate() {
            let both: Vec<usize> = ts.members.iter().copied().filter(|m| as_.members.contains(m)).collect();
            cells.push((i, j, both));
        }
    }
    let mut max_gap: f64 = 0.0;
    for &l in grid {
        let p = dist.pmf(l)?;
        let (pt, pa) = (tp.eval(l)?, ap.eval(l)?);
        for (i, j, both) in &cells {
            let joint: f64 = both.iter().map(|&m| p[m]).sum();
            max_gap = max_gap.max((joint - pt[*i] * pa[*j]).abs());
        }
    }
    let exact = match (dist.exact_pmf(), &tp.exact, &ap.exact) {
        (Some(pmf), Some(te), Some(ae)) => Some(cells.iter().all(|(i, j, both)| {
            let joint = crate::exact::sum(both.iter().map(|&m| &pmf[m]));
            (&joint - &(&te[*i] * &ae[*j])).is_zero()
        })),
        _ => None,
    };
    Ok(BasuReport { independent: exact.unwrap_or(max_gap <= tol), exact: exact.is_some(), max_gap, cells: cells.len() })
}

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloBasu {
    pub draws: usize,
    pub seed: u64,
    /// Correlations of (u, v), (u², v), (u, v²), (u², v²) for the bounded transforms.
    pub correlations: [f64; 4],
    /// `3/√m`.
    pub bound: f64,
    pub independent: bool,
}

/// Monte Carlo Basu check on the Gaussian deformation with `T = Ȳ` and
/// `A = Y₁ − Y₂`, via correlations of `tanh` of the standardized values.
pub fn basu_gaussian_mc(
    dist: &GaussianDeformed,
    mu: f64,
    draws: usize,
    seed: u64,
    exec: Exec,
) -> Result<MonteCarloBasu> {
    if dist.n < 2 {
        return Err(Error::domain("Y1 - Y2 needs n ≥ 2"));
    }
    if draws < 2 {
        return Err(Error::domain("need at least two draws"));
    }
    let n = dist.n;
    let t_scale = dist.sigma_star / (n as f64).sqrt();
    let a_scale = dist.sigma_star * std::f64::consts::SQRT_2;
    let pairs: Vec<Vec<(f64, f64)>> = par::mc_chunks(exec, seed, draws, |rng, count| {
        let mut buf = vec![0.0; n];
        (0..count)
            .map(|_| {
                dist.draw(mu, rng, &mut buf);
                let ybar = buf.iter().sum::<f64>() / n as f64;
                (((ybar - mu) / t_scale).tanh(), ((buf[0] - buf[1]) / a_scale).tanh())
            })
            .collect()
    });
    let flat: Vec<(f64, f64)> = pairs.into_iter().flatten().collect();
    let corr = |f: &dyn Fn(f64) -> f64, g: &dyn Fn(f64) -> f64| {
        let m = flat.len() as f64;
        let (mut sx, mut sy) = (0.0, 0.0);
        for &(u, v) in &flat {
            sx += f(u);
            sy += g(v);
        }
        let (mx, my) = (sx / m, sy / m);
        let (mut cxy, mut cxx, mut cyy) = (0.0, 0.0, 0.0);
        for &(u, v) in &flat {
            let (dx, dy) = (f(u) - mx, g(v) - my);
            cxy += dx * dy;
            cxx += dx * dx;
            cyy += dy * dy;
        }
        cxy / (cxx * cyy).sqrt()
    };
    let id = |x: f64| x;
    let sq = |x: f64| x * x;
    let correlations = [corr(&id, &id), corr(&sq, &id), corr(&id, &sq), corr(&sq, &sq)];
    let bound = 3.0 / (draws as f64).sqrt();
    Ok(MonteCarloBasu { draws, seed, correlations, bound, independent: correlations.iter().all(|c| c.abs() <= bound) })
}

#[derive(Debug, Clone)]
pub struct UmvueReport {
    pub statistic: String,
    pub umvue: bool,
    /// Dimension of `W̃₀ = {w : Ẽ_λ[w] ≡ 0}`.
    pub kernel_dimension: usize,
    /// Violating direction, over the tuples of the sample space.
    pub violating: Option<Vec<Q>>,
    /// `Ẽ_λ[w T₀]` for the violating direction.
    pub violating_expectation: Option<RatFunc>,
}

/// Basis of the zero-unbiased functions `W̃₀` on the full sample space.
pub fn zero_unbiased_basis(dist: &FiniteDeformed) -> Result<Vec<Vec<Q>>> {
    let pmf = dist.exact_pmf().ok_or_else(|| Error::Unsupported("the deformed pmf is not rational in λ".into()))?;
    let m = coefficient_matrix(pmf);
    Ok(linalg::nullspace(&m, pmf.len()))
}

fn statistic_q(t: &Statistic, y: &[f64]) -> Result<Q> {
    t.eval(y)
        .exact
        .and_then(|v| v.into_iter().next())
        .ok_or_else(|| Error::Unsupported(format!("{} has no exact values", t.name())))
}

/// `T₀` is the generalized UMVUE of its mean iff `Ẽ_λ[w T₀] ≡ 0` for every `w ∈ W̃₀`.
/// A violating direction is taken orthogonal to the part of `W̃₀` that satisfies
/// the condition.
pub fn umvue_orthogonality_check(dist: &FiniteDeformed, t0: &Statistic) -> Result<UmvueReport> {
    let basis = zero_unbiased_basis(dist)?;
    let pmf = dist.exact_pmf().expect("checked by zero_unbiased_basis");
    let tvals: Vec<Q> = dist.tuples().iter().map(|y| statistic_q(t0, y)).collect::<Result<_>>()?;
    let expect_wt = |w: &[Q]| -> RatFunc {
        let terms: Vec<RatFunc> = w
            .iter()
            .zip(&tvals)
            .zip(pmf)
            .filter(|((wi, ti), _)| !wi.is_zero() && !ti.is_zero())
            .map(|((wi, ti), p)| p.scale(&(wi * ti)))
            .collect();
        crate::exact::sum(&terms).reduced()
    };
    let images: Vec<RatFunc> = basis.iter().map(|b| expect_wt(b)).collect();
    let mut report = UmvueReport {
        statistic: t0.name().to_string(),
        umvue: images.iter().all(RatFunc::is_zero),
        kernel_dimension: basis.len(),
        violating: None,
        violating_expectation: None,
    };
    if report.umvue {
        return Ok(report);
    }
    // K0 = {Σ c_i b_i : Σ c_i image_i ≡ 0}
    let coeff = coefficient_matrix(&images);
    let k0: Vec<Vec<Q>> = linalg::nullspace(&coeff, basis.len()).iter().map(|c| combine(&basis, c)).collect();
    let ortho = gram_schmidt(&k0);
    let eta = basis
        .iter()
        .map(|b| project_out(b, &ortho))
        .find(|v| v.iter().any(|c| !c.is_zero()))
        .expect("K0 is a proper subspace when the check fails");
    let eta: Vec<Q> = linalg::primitive(&eta).into_iter().map(Q::from_integer).collect();
    let e = expect_wt(&eta);
    if e.is_zero() {
        return Err(Error::numeric("violating direction failed exact re-verification"));
    }
    report.violating_expectation = Some(e);
    report.violating = Some(eta);
    Ok(report)
}

fn combine(basis: &[Vec<Q>], c: &[Q]) -> Vec<Q> {
    let len = basis[0].len();
    (0..len).map(|k| basis.iter().zip(c).fold(Q::zero(), |acc, (b, ci)| acc + &b[k] * ci)).collect()
}

/// Orthogonal (not normalized) basis of the span, in exact arithmetic.
fn gram_schmidt(vs: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let mut out: Vec<Vec<Q>> = Vec::new();
    for v in vs {
        let r = project_out(v, &out);
        if r.iter().any(|c| !c.is_zero()) {
            out.push(r);
        }
    }
    out
}

fn project_out(v: &[Q], ortho: &[Vec<Q>]) -> Vec<Q> {
    let mut r = v.to_vec();
    for u in ortho {
        let k = linalg::dot(&r, u) / linalg::dot(u, u);
        for (ri, ui) in r.iter_mut().zip(u) {
            *ri -= &k * ui;
        }
    }
    r
}

/// True when `h` is a nonzero multiple of `target`.
pub fn proportional(h: &[Q], target: &[Q]) -> bool {
    if h.len() != target.len() {
        return false;
    }
    let Some(k) = h.iter().zip(target).find(|(_, t)| !t.is_zero()).map(|(a, b)| a / b) else {
        return false;
    };
    !k.is_zero() && h.iter().zip(target).all(|(a, b)| *a == &k * b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{q, q_frac, Poly};
    use crate::families::{bernoulli_malpha_family, ExponentialFamily, FiniteTableFamily, ParamDomain};
    use crate::glf::{GeneralizedLikelihood, GlfKind};
    use std::sync::Arc;

    fn ldpd(n: usize) -> FiniteDeformed {
        let glf = GeneralizedLikelihood::new(GlfKind::Ldpd, 2.0, Arc::new(bernoulli_malpha_family())).unwrap();
        FiniteDeformed::new(glf, n).unwrap()
    }

    fn classical(n: usize) -> FiniteDeformed {
        let glf = GeneralizedLikelihood::new(GlfKind::Log, 1.0, Arc::new(ExponentialFamily::bernoulli())).unwrap();
        FiniteDeformed::new(glf, n).unwrap()
    }

    #[test]
    fn example_three_is_incomplete() {
        let r = completeness_check(&ldpd(3), &Statistic::mean()).unwrap();
        assert_eq!(r.verdict, Verdict::Incomplete);
        let target = [q(0), q_frac(-1, 2), q(1), q_frac(-3, 2)];
        assert!(proportional(r.witness.as_ref().unwrap(), &target));
        assert_eq!(r.witness.as_ref().unwrap(), &vec![q(0), q(1), q(-2), q(3)]);
        assert_eq!(r.kernel_dimension, 2);
        assert_eq!(r.exact_rank, r.float_rank);
        assert!(r.grid_max_abs_expectation <= 1e-12);
        assert!(r.certificate.unwrap().probability > 0.0);
    }

    #[test]
    fn classical_sum_is_complete() {
        let r = completeness_check(&classical(3), &Statistic::sum()).unwrap();
        assert_eq!(r.verdict, Verdict::Complete);
        assert_eq!(r.exact_rank, 4);
        assert_eq!(r.float_rank, 4);
        assert!(r.witness.is_none());
    }

    #[test]
    fn constant_statistic_is_complete() {
        let r = completeness_check(&ldpd(3), &Statistic::constant(2.0)).unwrap();
        assert_eq!(r.verdict, Verdict::Complete);
        assert_eq!(r.values.len(), 1);
    }

    #[test]
    fn non_rational_pmf_is_unsupported() {
        let glf = GeneralizedLikelihood::new(GlfKind::DpdMean, 2.0, Arc::new(bernoulli_malpha_family())).unwrap();
        let d = FiniteDeformed::new(glf, 2).unwrap();
        assert!(matches!(completeness_check(&d, &Statistic::mean()), Err(Error::Unsupported(_))));
        let g = completeness_grid_check(&d, &Statistic::mean(), &d.grid()).unwrap();
        assert_eq!(g.values, 3);
    }

    #[test]
    fn ancillarity_examples() {
        assert!(!ancillarity_check(&ldpd(3), &Statistic::mean()).unwrap().ancillary);
        assert!(ancillarity_check(&ldpd(3), &Statistic::constant(1.0)).unwrap().ancillary);
        let r = ancillarity_check(&ldpd(2), &Statistic::unequal(1, 2)).unwrap();
        assert!(r.ancillary && r.exact);
        let pmf = statistic_pmf(&ldpd(2), &Statistic::unequal(1, 2)).unwrap();
        assert_eq!(pmf.exact.unwrap()[1].constant_value(), Some(q_frac(1, 2)));
    }

    #[test]
    fn basu_precondition_failure_is_reported_as_such() {
        let err =
            basu_independence_test(&classical(2), &Statistic::sum(), &Statistic::unequal(1, 2), 1e-12).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)), "{err}");
        let ok = basu_independence_test(&classical(2), &Statistic::sum(), &Statistic::constant(0.0), 1e-12).unwrap();
        assert!(ok.independent && ok.exact);
    }

    #[test]
    fn basu_on_a_complete_ancillary_pair() {
        // weights (1-λ)/2, (1-λ)/2, λ/2, λ/2 on {0,1,2,3}: T = 1{y ≥ 2} is complete
        // sufficient and the parity of y is ancillary
        let fam = FiniteTableFamily::parse(
            &[(0.0, "(1-l)/2"), (1.0, "(1-l)/2"), (2.0, "l/2"), (3.0, "l/2")],
            ParamDomain::interval(0.0, 1.0),
        )
        .unwrap();
        let glf = GeneralizedLikelihood::new(GlfKind::Log, 1.0, Arc::new(fam)).unwrap();
        let d = FiniteDeformed::new(glf, 1).unwrap();
        let t = Statistic::scalar("high", |y| if y[0] >= 2.0 { 1.0 } else { 0.0 })
            .with_exact(|y| vec![if y[0] >= Q::from_integer(2.into()) { q(1) } else { q(0) }]);
        let a = Statistic::scalar("parity", |y| y[0] % 2.0).with_exact(|y| vec![y[0].clone() % q(2)]);
        let r = basu_independence_test(&d, &t, &a, 1e-14).unwrap();
        assert!(r.independent && r.exact);
    }

    #[test]
    fn gaussian_basu_mc() {
        let g = GaussianDeformed { mu: 0.5, sigma_star: 0.95, n: 4 };
        let r = basu_gaussian_mc(&g, 0.5, 20_000, 11, Exec::Sequential).unwrap();
        assert!(r.independent, "{r:?}");
        let p = basu_gaussian_mc(&g, 0.5, 20_000, 11, Exec::default()).unwrap();
        assert_eq!(r.correlations, p.correlations);
    }

    #[test]
    fn example_two_is_not_umvue() {
        let r = umvue_orthogonality_check(&ldpd(2), &Statistic::mean()).unwrap();
        assert!(!r.umvue);
        assert_eq!(r.kernel_dimension, 2);
        assert_eq!(r.violating.as_ref().unwrap(), &vec![q(1), q(-1), q(-1), q(1)]);
        let expected = RatFunc::from_poly(Poly::new(vec![q_frac(-1, 4), q_frac(1, 2)]));
        assert!(r.violating_expectation.unwrap().same_as(&expected));
    }

    #[test]
    fn umvue_trivial_and_classical_cases() {
        assert!(umvue_orthogonality_check(&ldpd(2), &Statistic::constant(3.0)).unwrap().umvue);
        assert!(umvue_orthogonality_check(&classical(3), &Statistic::mean()).unwrap().umvue);
    }

    #[test]
    fn complete_sufficient_implies_minimal() {
        use crate::glf::minimal_sufficiency_check;
        let d = classical(3);
        let grid = d.grid();
        for t in [Statistic::sum(), Statistic::mean(), Statistic::identity()] {
            let suff = sufficiency_check(&t, d.glf(), &grid, Pairs::Enumerate(d.space()), 1e-10).unwrap();
            let comp = completeness_check(&d, &t).unwrap();
            if suff.passed && comp.verdict == Verdict::Complete {
                assert!(minimal_sufficiency_check(&t, d.glf(), d.space(), &grid, 1e-10).unwrap().minimal);
            }
        }
    }

    #[test]
    fn witness_scaling_preserves_conditions() {
        let d = ldpd(3);
        let r = completeness_check(&d, &Statistic::mean()).unwrap();
        let pmf = statistic_pmf(&d, &Statistic::mean()).unwrap().exact.unwrap();
        for k in [q(-3), q_frac(2, 7), q(11)] {
            let h: Vec<Q> = r.witness.as_ref().unwrap().iter().map(|c| c * &k).collect();
            let e = crate::exact::sum(&pmf.iter().zip(&h).map(|(p, c)| p.scale(c)).collect::<Vec<_>>());
            assert!(e.is_zero());
            assert!(h.iter().any(|c| !c.is_zero()));
        }
    }
}
