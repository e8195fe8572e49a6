//! Deformed distributions `f̃_λ ∝ exp[glf(y; λ)]` over the n-sample space.

use num_traits::Zero;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{RatFunc, Q};
use crate::families::{ParamDomain, StudentLocationFamily};
use crate::glf::{level_sets, GeneralizedLikelihood, LevelSet, SampleSpace, StatValue, Statistic};
use crate::quad::Quadrature;
use crate::special::norm_pdf;

/// Tolerance for λ-independence on a grid.
pub const LAMBDA_FREE_TOL: f64 = 1e-10;

/// Finite variant: a pmf over an enumerated sample space.
#[derive(Clone)]
pub struct FiniteDeformed {
    glf: GeneralizedLikelihood,
    space: SampleSpace,
    exact: Option<Vec<RatFunc>>,
}

/// Gaussian variant: n independent `N(μ, σ*²)` coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianDeformed {
    /// Location used when no parameter is supplied.
    pub mu: f64,
    pub sigma_star: f64,
    pub n: usize,
}

#[derive(Clone)]
pub enum DeformedDistribution {
    Finite(FiniteDeformed),
    Gaussian(GaussianDeformed),
}

/// Builds `f̃_λ(y) = exp[glf(y; λ)] / Σ_r exp[glf(r; λ)]` over all n-tuples.
pub fn build_deformed_finite(glf: GeneralizedLikelihood, n: usize) -> Result<DeformedDistribution> {
    Ok(DeformedDistribution::Finite(FiniteDeformed::new(glf, n)?))
}

/// Deformed distribution of the Student location family under the summed DPD likelihood.
pub fn build_deformed_student(nu: f64, mu: f64, n: usize) -> Result<DeformedDistribution> {
    let fam = StudentLocationFamily::new(nu)?;
    if n == 0 || !mu.is_finite() {
        return Err(Error::domain("need n ≥ 1 and a finite location"));
    }
    Ok(DeformedDistribution::Gaussian(GaussianDeformed { mu, sigma_star: fam.sigma_star(), n }))
}

impl FiniteDeformed {
    pub fn new(glf: GeneralizedLikelihood, n: usize) -> Result<Self> {
        if glf.family.domain().dim() != 1 {
            return Err(Error::Unsupported("finite deformed distributions take a scalar parameter".into()));
        }
        let space = SampleSpace::for_family(glf.family.as_ref(), n)?;
        let weights: Option<Vec<RatFunc>> = space.tuples.iter().map(|y| glf.exact_weight(y)).collect();
        let exact = weights.map(|w| {
            let total = crate::exact::sum(&w);
            w.iter().map(|wi| wi.div(&total).expect("positive total weight").reduced()).collect()
        });
        Ok(FiniteDeformed { glf, space, exact })
    }

    pub fn space(&self) -> &SampleSpace {
        &self.space
    }

    pub fn tuples(&self) -> &[Vec<f64>] {
        &self.space.tuples
    }

    pub fn glf(&self) -> &GeneralizedLikelihood {
        &self.glf
    }

    pub fn domain(&self) -> &ParamDomain {
        self.glf.family.domain()
    }

    /// 9-point grid over 10%..90% of the parameter interval.
    pub fn grid(&self) -> Vec<f64> {
        self.domain().grid(9)
    }

    /// Exact pmf as rational functions of λ, when the weights are rational.
    pub fn exact_pmf(&self) -> Option<&[RatFunc]> {
        self.exact.as_deref()
    }

    /// Floating-point pmf at λ (log-sum-exp normalization).
    pub fn pmf(&self, lambda: f64) -> Result<Vec<f64>> {
        let at = self.glf.at(&[lambda])?;
        let logs: Vec<f64> = self.space.tuples.iter().map(|y| at.eval(y)).collect::<Result<_>>()?;
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logs.iter().map(|v| (v - max).exp()).collect();
        let total: f64 = w.iter().sum();
        Ok(w.iter().map(|v| v / total).collect())
    }

    pub fn expectation(&self, phi: &dyn Fn(&[f64]) -> f64, lambda: f64) -> Result<f64> {
        let p = self.pmf(lambda)?;
        Ok(self.space.tuples.iter().zip(&p).map(|(y, pi)| pi * phi(y)).sum())
    }

    /// `Ẽ_λ[φ]` as a rational function of λ.
    pub fn expectation_exact(&self, phi: &dyn Fn(&[f64]) -> Q) -> Option<RatFunc> {
        let pmf = self.exact.as_ref()?;
        let terms: Vec<RatFunc> = self
            .space
            .tuples
            .iter()
            .zip(pmf)
            .filter_map(|(y, p)| {
                let v = phi(y);
                (!v.is_zero()).then(|| p.scale(&v))
            })
            .collect();
        Some(crate::exact::sum(&terms).reduced())
    }

    pub fn variance(&self, phi: &dyn Fn(&[f64]) -> f64, lambda: f64) -> Result<f64> {
        let m = self.expectation(phi, lambda)?;
        self.expectation(&|y| (phi(y) - m).powi(2), lambda)
    }

    pub fn variance_exact(&self, phi: &dyn Fn(&[f64]) -> Q) -> Option<RatFunc> {
        let m = self.expectation_exact(phi)?;
        let m2 = self.expectation_exact(&|y| {
            let v = phi(y);
            &v * &v
        })?;
        Some((&m2 - &(&m * &m)).reduced())
    }
}

impl GaussianDeformed {
    /// `Ẽ_μ[g(Ȳ)]` with `Ȳ ~ N(μ, σ*²/n)`.
    pub fn expectation_of_mean(&self, g: &dyn Fn(f64) -> f64, mu: f64) -> Result<f64> {
        let s = self.sigma_star / (self.n as f64).sqrt();
        let quad = Quadrature { abs_tol: 1e-13, rel_tol: 1e-13, ..Quadrature::default() }.with_window(0.0, 8.0);
        // standardized: z = (ȳ - μ)/s
        Ok(quad.integrate(|z| g(mu + s * z) * norm_pdf(z), f64::NEG_INFINITY, f64::INFINITY)?.value)
    }

    /// Fills `buf` with one deformed n-tuple at location `mu`.
    pub fn draw<R: Rng + ?Sized>(&self, mu: f64, rng: &mut R, buf: &mut [f64]) {
        let normal = Normal::new(mu, self.sigma_star).expect("positive scale");
        for v in buf.iter_mut() {
            *v = normal.sample(rng);
        }
    }
}

/// Function whose deformed expectation is requested.
pub enum Observable<'a> {
    Tuple(&'a dyn Fn(&[f64]) -> f64),
    /// Function of the sample mean.
    Mean(&'a dyn Fn(f64) -> f64),
}

/// `Ẽ_λ[φ]`: exact finite sum, or quadrature over the Ȳ marginal.
pub fn deformed_expectation(dist: &DeformedDistribution, phi: Observable<'_>, lambda: f64) -> Result<f64> {
    match (dist, phi) {
        (DeformedDistribution::Finite(d), Observable::Tuple(f)) => d.expectation(f, lambda),
        (DeformedDistribution::Finite(d), Observable::Mean(g)) => {
            d.expectation(&|y| g(y.iter().sum::<f64>() / y.len() as f64), lambda)
        }
        (DeformedDistribution::Gaussian(d), Observable::Mean(g)) => d.expectation_of_mean(g, lambda),
        (DeformedDistribution::Gaussian(d), Observable::Tuple(f)) if d.n == 1 => {
            d.expectation_of_mean(&|y| f(&[y]), lambda)
        }
        (DeformedDistribution::Gaussian(_), Observable::Tuple(_)) => Err(Error::Unsupported(
            "tuple functions under the Gaussian deformation need Monte Carlo; pass a function of the mean".into(),
        )),
    }
}

/// Distribution of `T` under `f̃_λ`.
#[derive(Clone)]
pub struct StatisticPmf {
    pub sets: Vec<LevelSet>,
    pub exact: Option<Vec<RatFunc>>,
    dist: FiniteDeformed,
}

impl StatisticPmf {
    pub fn values(&self) -> Vec<&StatValue> {
        self.sets.iter().map(|s| &s.value).collect()
    }

    pub fn eval(&self, lambda: f64) -> Result<Vec<f64>> {
        let p = self.dist.pmf(lambda)?;
        Ok(self.sets.iter().map(|s| s.members.iter().map(|&i| p[i]).sum()).collect())
    }

    /// Index of the level set with value `t` (scalar statistics).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.sets
            .iter()
            .position(|s| s.value.float.len() == 1 && (s.value.float[0] - t).abs() <= 1e-12 * (1.0 + t.abs()))
    }
}

pub fn statistic_pmf(dist: &FiniteDeformed, t: &Statistic) -> Result<StatisticPmf> {
    let sets = level_sets(&dist.space, t)?;
    let exact = dist
        .exact
        .as_ref()
        .map(|pmf| sets.iter().map(|s| crate::exact::sum(s.members.iter().map(|&i| &pmf[i])).reduced()).collect());
    Ok(StatisticPmf { sets, exact, dist: dist.clone() })
}

/// `f̃_λ(y | T = t)` over `C_t`.
#[derive(Debug, Clone, Serialize)]
pub struct Conditional {
    pub members: Vec<Vec<f64>>,
    /// Probabilities at the grid midpoint.
    pub probs: Vec<f64>,
    pub lambda_free: bool,
    /// Largest change of any conditional probability across the grid.
    pub max_spread: f64,
    /// Exact conditional probabilities when they are λ-free and rational.
    #[serde(skip)]
    pub exact: Option<Vec<Q>>,
}

fn conditional_of_set(dist: &FiniteDeformed, set: &LevelSet, pmfs: &[Vec<f64>]) -> Conditional {
    let members: Vec<Vec<f64>> = set.members.iter().map(|&i| dist.space.tuples[i].clone()).collect();
    let cond_at = |p: &[f64]| -> Vec<f64> {
        let total: f64 = set.members.iter().map(|&i| p[i]).sum();
        set.members.iter().map(|&i| p[i] / total).collect()
    };
    let rows: Vec<Vec<f64>> = pmfs.iter().map(|p| cond_at(p)).collect();
    let mid = rows[rows.len() / 2].clone();
    let max_spread = rows.iter().flat_map(|r| r.iter().zip(&mid).map(|(a, b)| (a - b).abs())).fold(0.0, f64::max);
    let (lambda_free, exact) = match &dist.exact {
        Some(pmf) => {
            let total = crate::exact::sum(set.members.iter().map(|&i| &pmf[i]));
            let ratios: Vec<RatFunc> =
                set.members.iter().map(|&i| pmf[i].div(&total).expect("positive mass")).collect();
            let consts: Option<Vec<Q>> = ratios.iter().map(RatFunc::constant_value).collect();
            (consts.is_some(), consts)
        }
        None => (max_spread <= LAMBDA_FREE_TOL, None),
    };
    Conditional { members, probs: mid, lambda_free, max_spread, exact }
}

fn grid_pmfs(dist: &FiniteDeformed) -> Result<Vec<Vec<f64>>> {
    dist.grid().iter().map(|&l| dist.pmf(l)).collect()
}

/// Conditional distribution given `T = t` for the level set with value `t`.
pub fn conditional_given_t(dist: &FiniteDeformed, t: &Statistic, value: &[f64]) -> Result<Conditional> {
    let sets = level_sets(&dist.space, t)?;
    let set = sets
        .iter()
        .find(|s| {
            s.value.float.len() == value.len()
                && s.value.float.iter().zip(value).all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + b.abs()))
        })
        .ok_or_else(|| Error::domain(format!("no sample has {} = {value:?}", t.name())))?;
    Ok(conditional_of_set(dist, set, &grid_pmfs(dist)?))
}

/// All conditionals, one per level set.
pub fn conditionals(dist: &FiniteDeformed, t: &Statistic) -> Result<Vec<(StatValue, Conditional)>> {
    let pmfs = grid_pmfs(dist)?;
    Ok(level_sets(&dist.space, t)?.iter().map(|s| (s.value.clone(), conditional_of_set(dist, s, &pmfs))).collect())
}

/// `φ̃(t) = Ẽ[estimator | T = t]`.
#[derive(Clone)]
pub struct RaoBlackwell {
    pub statistic: Statistic,
    pub values: Vec<(StatValue, f64)>,
    pub exact: Option<Vec<Q>>,
}

impl RaoBlackwell {
    /// `φ̃(T(y))`; `None` when `T(y)` is not a value of the enumerated space.
    pub fn apply(&self, y: &[f64]) -> Option<f64> {
        let v = self.statistic.eval(y);
        self.position(&v).map(|i| self.values[i].1)
    }

    pub fn apply_exact(&self, y: &[f64]) -> Option<Q> {
        let v = self.statistic.eval(y);
        let i = self.position(&v)?;
        self.exact.as_ref().map(|e| e[i].clone())
    }

    fn position(&self, v: &StatValue) -> Option<usize> {
        self.values.iter().position(|(t, _)| match (&t.exact, &v.exact) {
            (Some(a), Some(b)) => a == b,
            _ => t.float.iter().zip(&v.float).all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + b.abs())),
        })
    }
}

/// Exact-valued function of an n-tuple.
pub type ExactObservable<'a> = &'a dyn Fn(&[f64]) -> Q;

/// Rao–Blackwellizes `estimator` on a generalized sufficient `T`. The exact
/// variant `estimator_exact` is used when the deformed pmf is rational.
pub fn rao_blackwellize(
    dist: &FiniteDeformed,
    estimator: &dyn Fn(&[f64]) -> f64,
    estimator_exact: Option<ExactObservable<'_>>,
    t: &Statistic,
) -> Result<RaoBlackwell> {
    let conds = conditionals(dist, t)?;
    if let Some((v, _)) = conds.iter().find(|(_, c)| !c.lambda_free) {
        return Err(Error::Precondition(format!(
            "conditional distribution given {} = {v} depends on λ; {} is not generalized sufficient",
            t.name(),
            t.name()
        )));
    }
    let values = conds
        .iter()
        .map(|(v, c)| (v.clone(), c.members.iter().zip(&c.probs).map(|(y, p)| p * estimator(y)).sum()))
        .collect();
    let exact = match estimator_exact {
        Some(e) => conds
            .iter()
            .map(|(_, c)| {
                c.exact.as_ref().map(|probs| c.members.iter().zip(probs).fold(Q::zero(), |acc, (y, p)| acc + p * e(y)))
            })
            .collect(),
        None => None,
    };
    Ok(RaoBlackwell { statistic: t.clone(), values, exact })
}

impl DeformedDistribution {
    pub fn as_finite(&self) -> Result<&FiniteDeformed> {
        match self {
            DeformedDistribution::Finite(d) => Ok(d),
            DeformedDistribution::Gaussian(_) => {
                Err(Error::Usage("operation needs a finite deformed distribution".into()))
            }
        }
    }

    pub fn as_gaussian(&self) -> Result<&GaussianDeformed> {
        match self {
            DeformedDistribution::Gaussian(d) => Ok(d),
            DeformedDistribution::Finite(_) => {
                Err(Error::Usage("operation needs the Gaussian deformed distribution".into()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{q_frac, Poly};
    use crate::families::bernoulli_malpha_family;
    use crate::glf::GlfKind;
    use std::sync::Arc;

    fn example(n: usize) -> FiniteDeformed {
        let glf = GeneralizedLikelihood::new(GlfKind::Ldpd, 2.0, Arc::new(bernoulli_malpha_family())).unwrap();
        FiniteDeformed::new(glf, n).unwrap()
    }

    fn lin(c0: i64, c1: i64, d: i64) -> RatFunc {
        RatFunc::from_poly(Poly::new(vec![q_frac(c0, d), q_frac(c1, d)]))
    }

    #[test]
    fn example_three_point_mass_at_zero() {
        let d = example(3);
        let pmf = d.exact_pmf().unwrap();
        assert!(pmf[0].same_as(&lin(1, -1, 4)));
        assert!(crate::exact::sum(pmf).same_as(&RatFunc::one()));
        let p = d.pmf(0.3).unwrap();
        assert!((p[0] - 0.7 / 4.0).abs() < 1e-15);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn example_two_matches_closed_form() {
        let d = example(2);
        let pmf = d.exact_pmf().unwrap();
        // ((1-λ)/2)[1 + ȳ(2λ-1)/(1-λ)] = ((1-λ) + ȳ(2λ-1))/2
        for (y, p) in d.tuples().iter().zip(pmf) {
            let ybar = (y[0] + y[1]) / 2.0;
            let two_ybar = (2.0 * ybar) as i64;
            let expected = RatFunc::from_poly(Poly::new(vec![q_frac(2 - two_ybar, 4), q_frac(2 * two_ybar - 2, 4)]));
            assert!(p.same_as(&expected), "{y:?}: {p}");
        }
    }

    #[test]
    fn uniform_at_one_half() {
        let p = example(4).pmf(0.5).unwrap();
        assert!(p.iter().all(|v| (v - 1.0 / 16.0).abs() < 1e-15));
    }

    #[test]
    fn statistic_pmf_sums_to_one() {
        let d = example(3);
        let pmf = statistic_pmf(&d, &Statistic::mean()).unwrap();
        let ex = pmf.exact.as_ref().unwrap();
        assert!(ex[0].same_as(&lin(1, -1, 4)));
        assert!(crate::exact::sum(ex).same_as(&RatFunc::one()));
        for l in d.grid() {
            assert!((pmf.eval(l).unwrap().iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
        let id = statistic_pmf(&d, &Statistic::identity()).unwrap();
        for (a, b) in id.exact.unwrap().iter().zip(d.exact_pmf().unwrap()) {
            assert!(a.same_as(b));
        }
    }

    #[test]
    fn conditionals_given_mean() {
        let d = example(3);
        let c = conditional_given_t(&d, &Statistic::mean(), &[1.0 / 3.0]).unwrap();
        assert!(c.lambda_free);
        assert_eq!(c.exact.as_ref().unwrap(), &vec![q_frac(1, 3); 3]);
        let c0 = conditional_given_t(&d, &Statistic::mean(), &[0.0]).unwrap();
        assert_eq!(c0.members, vec![vec![0.0; 3]]);
        assert_eq!(c0.probs, vec![1.0]);
        let y1 = conditional_given_t(&d, &Statistic::coordinate(1), &[1.0]).unwrap();
        assert!(!y1.lambda_free && y1.max_spread > 1e-3);
        assert!(matches!(conditional_given_t(&d, &Statistic::mean(), &[0.5]), Err(Error::Domain(_))));
    }

    #[test]
    fn rao_blackwell_of_first_coordinate() {
        let d = example(3);
        let y1 = |y: &[f64]| y[0];
        let y1q = |y: &[f64]| Q::from_float(y[0]).unwrap();
        let rb = rao_blackwellize(&d, &y1, Some(&y1q), &Statistic::mean()).unwrap();
        for (t, v) in &rb.values {
            assert!((v - t.scalar()).abs() < 1e-15);
        }
        for (i, (t, _)) in rb.values.iter().enumerate() {
            assert_eq!(&rb.exact.as_ref().unwrap()[i], &t.exact.as_ref().unwrap()[0]);
        }
        let var_raw = d.variance(&y1, 0.3).unwrap();
        let var_rb = d.variance(&|y| rb.apply(y).unwrap(), 0.3).unwrap();
        assert!(var_rb < var_raw);
        assert!(rao_blackwellize(&d, &y1, None, &Statistic::coordinate(1)).is_err());
    }

    #[test]
    fn rao_blackwell_is_idempotent_on_functions_of_t() {
        let d = example(3);
        let f = |y: &[f64]| (y.iter().sum::<f64>() / 3.0).powi(2);
        let rb = rao_blackwellize(&d, &f, None, &Statistic::mean()).unwrap();
        for y in d.tuples() {
            assert!((rb.apply(y).unwrap() - f(y)).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_moments() {
        let dist = build_deformed_student(3.0, 0.7, 5).unwrap();
        let g = dist.as_gaussian().unwrap();
        assert!((g.sigma_star - 0.9536).abs() < 5e-4);
        let m = deformed_expectation(&dist, Observable::Mean(&|y| y), 0.7).unwrap();
        assert!((m - 0.7).abs() < 1e-12);
        let v = deformed_expectation(&dist, Observable::Mean(&|y| (y - 0.7).powi(2)), 0.7).unwrap();
        assert!((v - g.sigma_star.powi(2) / 5.0).abs() < 1e-12);
        assert!(build_deformed_student(2.0, 0.0, 3).is_err());
    }

    #[test]
    fn gaussian_shift_equivariance() {
        let one = build_deformed_student(4.0, 0.0, 1).unwrap();
        let cdf_at = |mu: f64, y: f64| {
            deformed_expectation(&one, Observable::Tuple(&|t| if t[0] <= y { 1.0 } else { 0.0 }), mu).unwrap()
        };
        assert!((cdf_at(0.0, 0.4) - cdf_at(1.5, 1.9)).abs() < 1e-10);
    }
}
