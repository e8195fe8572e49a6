//! MDPDE solving, generalized UMVUEs for B^(α)-families and deformed risks.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::Serialize;

use crate::deformed::DeformedDistribution;
use crate::divergences::dpd_estimating_residual;
use crate::error::{Error, Result};
use crate::families::{BAlphaFamily, ParametricFamily};
use crate::glf::{GeneralizedLikelihood, GlfKind};
use crate::optim::golden_max;
use crate::par::{self, Exec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Bound on `|residual|` for convergence.
    pub tol: f64,
    pub max_iter: usize,
    /// Search interval; derived from the domain and the sample when absent.
    pub bracket: Option<(f64, f64)>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: 1e-9, max_iter: 60, bracket: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorReport {
    pub estimate: Vec<f64>,
    pub objective: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Residual and objective with a per-λ cache.
struct Problem<'a> {
    sample: &'a [f64],
    glf: GeneralizedLikelihood,
    residuals: RefCell<HashMap<u64, f64>>,
}

impl Problem<'_> {
    fn residual(&self, lambda: f64) -> Result<f64> {
        if let Some(&r) = self.residuals.borrow().get(&lambda.to_bits()) {
            return Ok(r);
        }
        let r = dpd_estimating_residual(self.sample, &*self.glf.family, &[lambda], self.glf.alpha)?[0];
        self.residuals.borrow_mut().insert(lambda.to_bits(), r);
        Ok(r)
    }

    fn objective(&self, lambda: f64) -> Result<f64> {
        self.glf.at(&[lambda])?.eval(self.sample)
    }
}

fn search_interval(sample: &[f64], fam: &dyn ParametricFamily, cfg: &SolverConfig) -> (f64, f64) {
    if let Some(b) = cfg.bracket {
        return b;
    }
    let d = fam.domain();
    let (lo, hi) = (d.lo[0], d.hi[0]);
    let min = sample.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = sample.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pad = 1.0 + (max - min);
    let inset = |a: f64, b: f64| 1e-9 * (1.0 + (b - a).abs().min(1.0));
    let a = if lo.is_finite() { lo + inset(lo, hi) } else { min - pad };
    let b = if hi.is_finite() { hi - inset(lo, hi) } else { max + pad };
    (a, b)
}

/// Safeguarded Newton from `x`; returns the last iterate and iterations used.
fn newton(p: &Problem<'_>, mut x: f64, lo: f64, hi: f64, cfg: &SolverConfig) -> Result<(f64, f64, usize, bool)> {
    let mut rx = p.residual(x)?;
    for it in 0..cfg.max_iter {
        if rx.abs() <= cfg.tol {
            return Ok((x, rx, it, true));
        }
        let h = (1e-5 * (1.0 + x.abs())).min(0.5 * (x - lo)).min(0.5 * (hi - x));
        let slope = (p.residual(x + h)? - p.residual(x - h)?) / (2.0 * h);
        let mut step = -rx / slope;
        if !step.is_finite() {
            return Ok((x, rx, it, false));
        }
        let mut accepted = false;
        for _ in 0..40 {
            let cand = x + step;
            if cand > lo && cand < hi {
                let rc = p.residual(cand)?;
                if rc.abs() < rx.abs() {
                    x = cand;
                    rx = rc;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            return Ok((x, rx, it + 1, false));
        }
    }
    Ok((x, rx, cfg.max_iter, rx.abs() <= cfg.tol))
}

/// MDPDE for a one-parameter family: maximizes `ℓ_B^(α)` by Newton on the
/// estimating residual, falling back to golden-section search on the objective.
pub fn mdpde_solve(
    sample: &[f64],
    fam: Arc<dyn ParametricFamily>,
    alpha: f64,
    cfg: &SolverConfig,
) -> Result<EstimatorReport> {
    if sample.is_empty() {
        return Err(Error::domain("empty sample"));
    }
    if fam.domain().dim() != 1 {
        return Err(Error::Unsupported("mdpde_solve handles one parameter; see mdpde_solve_coordinate".into()));
    }
    if let Some(y) = sample.iter().find(|&&y| !fam.support().contains(y)) {
        return Err(Error::domain(format!("observation {y} is outside the support")));
    }
    let glf = GeneralizedLikelihood::new(GlfKind::DpdMean, alpha, Arc::clone(&fam))?;
    let p = Problem { sample, glf, residuals: RefCell::new(HashMap::new()) };
    let (lo, hi) = search_interval(sample, &*fam, cfg);
    let mean = sample.iter().sum::<f64>() / sample.len() as f64;
    let start = if mean > lo && mean < hi { mean } else { 0.5 * (lo + hi) };

    let (mut x, mut r, mut iters, mut ok) = newton(&p, start, lo, hi, cfg)?;
    if !ok {
        let (g, _, gi) =
            golden_max(|l| p.objective(l).unwrap_or(f64::NEG_INFINITY), lo, hi, 1e-10 * (1.0 + (hi - lo)), 200);
        let (x2, r2, i2, ok2) = newton(&p, g, lo, hi, cfg)?;
        iters += gi + i2;
        if ok2 || r2.abs() < r.abs() {
            (x, r, ok) = (x2, r2, ok2);
        }
    }
    Ok(EstimatorReport {
        estimate: vec![x],
        objective: p.objective(x)?,
        residual_norm: r.abs(),
        iterations: iters,
        converged: ok,
    })
}

/// Experimental: cyclic coordinate updates for k-parameter families, each a
/// one-dimensional root of the matching residual component.
pub fn mdpde_solve_coordinate(
    sample: &[f64],
    fam: Arc<dyn ParametricFamily>,
    alpha: f64,
    start: &[f64],
    cfg: &SolverConfig,
) -> Result<EstimatorReport> {
    let dom = fam.domain().clone();
    dom.check(start)?;
    let mut x = start.to_vec();
    let resid = |x: &[f64]| dpd_estimating_residual(sample, &*fam, x, alpha);
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut r = resid(&x)?;
    let mut iters = 0;
    while iters < cfg.max_iter && norm(&r) > cfg.tol {
        for i in 0..x.len() {
            let xi = x[i];
            let h = (1e-5 * (1.0 + xi.abs())).min(0.5 * (xi - dom.lo[i])).min(0.5 * (dom.hi[i] - xi));
            let mut probe = x.clone();
            probe[i] = xi + h;
            let up = resid(&probe)?[i];
            probe[i] = xi - h;
            let down = resid(&probe)?[i];
            let step = -r[i] / ((up - down) / (2.0 * h));
            let mut t = 1.0;
            while t > 1e-6 {
                probe[i] = xi + t * step;
                if dom.contains(&probe) {
                    let rc = resid(&probe)?;
                    if rc[i].abs() < r[i].abs() {
                        x = probe.clone();
                        r = rc;
                        break;
                    }
                }
                t *= 0.5;
            }
        }
        iters += 1;
    }
    let glf = GeneralizedLikelihood::new(GlfKind::DpdMean, alpha, Arc::clone(&fam))?;
    Ok(EstimatorReport {
        objective: glf.eval(sample, &x)?,
        residual_norm: norm(&r),
        converged: norm(&r) <= cfg.tol,
        estimate: x,
        iterations: iters,
    })
}

type TupleFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type MeanFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real-valued estimator on n-tuples, optionally known as a function of Ȳ.
#[derive(Clone)]
pub struct Estimator {
    pub name: String,
    tuple: TupleFn,
    mean: Option<MeanFn>,
}

impl std::fmt::Debug for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Estimator({})", self.name)
    }
}

impl Estimator {
    pub fn new(name: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Estimator { name: name.into(), tuple: Arc::new(f), mean: None }
    }

    /// `y ↦ g(ȳ)`.
    pub fn of_mean(name: impl Into<String>, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let g: MeanFn = Arc::new(g);
        let h = Arc::clone(&g);
        Estimator {
            name: name.into(),
            tuple: Arc::new(move |y| h(y.iter().sum::<f64>() / y.len() as f64)),
            mean: Some(g),
        }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        (self.tuple)(y)
    }

    pub fn eval_mean(&self, ybar: f64) -> Option<f64> {
        self.mean.as_ref().map(|g| g(ybar))
    }
}

/// `y ↦ g(f̄(y))`, the generalized UMVUE of `Ẽ_λ[g(f̄)]` when the range of
/// `w` contains a rectangle.
pub fn generalized_umvue_balpha(
    fam: Arc<BAlphaFamily>,
    name: impl Into<String>,
    g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
) -> Result<Estimator> {
    if !fam.w_range_contains_rectangle() {
        return Err(Error::Precondition(format!(
            "{} does not declare that the range of w contains a rectangle",
            fam.name()
        )));
    }
    let g: TupleFn = Arc::new(g);
    // f(y) = y makes f̄ the sample mean, which enables quadrature over Ȳ
    let identity = fam.d() == 1 && [-1.5, 0.0, 0.7, 2.0].iter().all(|&y| fam.f_vec(y)[0] == y);
    let mean: Option<MeanFn> = identity.then(|| {
        let g = Arc::clone(&g);
        Arc::new(move |t: f64| g(&[t])) as MeanFn
    });
    let f = Arc::clone(&fam);
    Ok(Estimator { name: name.into(), tuple: Arc::new(move |y| g(&f.fbar(y))), mean })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RiskMethodKind {
    ExactFinite,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RiskMethod {
    ExactFinite,
    Quadrature,
    MonteCarlo { seed: u64, reps: usize, exec: Exec },
}

impl RiskMethod {
    pub fn kind(&self) -> RiskMethodKind {
        match self {
            RiskMethod::ExactFinite => RiskMethodKind::ExactFinite,
            RiskMethod::Quadrature => RiskMethodKind::Quadrature,
            RiskMethod::MonteCarlo { .. } => RiskMethodKind::MonteCarlo,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskValue {
    pub estimator: String,
    pub lambda: f64,
    pub n: usize,
    pub risk: f64,
    pub method: RiskMethodKind,
    pub standard_error: Option<f64>,
    pub seed: Option<u64>,
}

/// `Ẽ_λ[τ̃(λ) − U]²`.
pub fn risk_evaluate(
    est: &Estimator,
    estimand: &dyn Fn(f64) -> f64,
    dist: &DeformedDistribution,
    lambda: f64,
    method: RiskMethod,
) -> Result<RiskValue> {
    let tau = estimand(lambda);
    let (n, risk, se, seed) = match (method, dist) {
        (RiskMethod::ExactFinite, DeformedDistribution::Finite(d)) => {
            let risk = d.expectation(&|y| (est.eval(y) - tau).powi(2), lambda)?;
            (d.space().n, risk, None, None)
        }
        (RiskMethod::Quadrature, DeformedDistribution::Gaussian(g)) => {
            let Some(m) = est.mean.as_ref() else {
                return Err(Error::Usage(format!(
                    "{} is not a function of the sample mean; use Monte Carlo",
                    est.name
                )));
            };
            (g.n, g.expectation_of_mean(&|t| (m(t) - tau).powi(2), lambda)?, None, None)
        }
        (RiskMethod::MonteCarlo { seed, reps, exec }, _) => {
            if reps < 2 {
                return Err(Error::Usage("Monte Carlo needs at least two replications".into()));
            }
            let (n, parts) = mc_losses(est, tau, dist, lambda, seed, reps, exec)?;
            let (s, s2) = parts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
            let m = reps as f64;
            let mean = s / m;
            let var = ((s2 - m * mean * mean) / (m - 1.0)).max(0.0);
            (n, mean, Some((var / m).sqrt()), Some(seed))
        }
        (m, _) => {
            return Err(Error::Usage(format!(
                "risk method {:?} does not apply to this deformed distribution",
                m.kind()
            )));
        }
    };
    Ok(RiskValue { estimator: est.name.clone(), lambda, n, risk, method: method.kind(), standard_error: se, seed })
}

/// Per-chunk `(Σ loss, Σ loss²)`.
fn mc_losses(
    est: &Estimator,
    tau: f64,
    dist: &DeformedDistribution,
    lambda: f64,
    seed: u64,
    reps: usize,
    exec: Exec,
) -> Result<(usize, Vec<(f64, f64)>)> {
    let acc = |losses: &mut dyn Iterator<Item = f64>| losses.fold((0.0, 0.0), |(a, b), l| (a + l, b + l * l));
    match dist {
        DeformedDistribution::Gaussian(g) => {
            let n = g.n;
            let parts = par::mc_chunks(exec, seed, reps, |rng, count| {
                let mut buf = vec![0.0; n];
                acc(&mut (0..count).map(|_| {
                    g.draw(lambda, rng, &mut buf);
                    (est.eval(&buf) - tau).powi(2)
                }))
            });
            Ok((n, parts))
        }
        DeformedDistribution::Finite(d) => {
            let p = d.pmf(lambda)?;
            let index = WeightedIndex::new(&p).map_err(|e| Error::numeric(format!("invalid pmf: {e}")))?;
            let tuples = d.tuples();
            let parts = par::mc_chunks(exec, seed, reps, |rng, count| {
                acc(&mut (0..count).map(|_| (est.eval(&tuples[index.sample(rng)]) - tau).powi(2)))
            });
            Ok((d.space().n, parts))
        }
    }
}
