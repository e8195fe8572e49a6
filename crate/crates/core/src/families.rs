//! Parametric families, the structured B^(α), M^(α) and exponential forms,
//! and the built-in Bernoulli, Student-location and custom-table instances.

use std::fmt;
use std::sync::Arc;

use crate::deriv::{self, SmoothFn};
use crate::error::{Error, Result};
use crate::exact::RatFunc;
use crate::expr::Expr;
use crate::optim;
use crate::quad::Quadrature;
use crate::special::ln_gamma;

/// Function of the observation `y`.
pub type YFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// Function of the parameter vector `λ`.
pub type LFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type WindowFn = Arc<dyn Fn(&[f64]) -> (f64, f64) + Send + Sync>;
type ScoreFn = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;

#[derive(Clone, Debug, PartialEq)]
pub enum Support {
    Finite(Vec<f64>),
    /// Closed interval; either end may be infinite.
    Interval(f64, f64),
}

impl Support {
    pub fn real_line() -> Self {
        Support::Interval(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn contains(&self, y: f64) -> bool {
        match self {
            Support::Finite(v) => v.contains(&y),
            Support::Interval(lo, hi) => *lo <= y && y <= *hi,
        }
    }

    pub fn points(&self) -> Option<&[f64]> {
        match self {
            Support::Finite(v) => Some(v),
            Support::Interval(..) => None,
        }
    }
}

/// Open box `∏ (lo_i, hi_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ParamDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::domain("parameter domain must be a nonempty open box with lo < hi"));
        }
        Ok(ParamDomain { lo, hi })
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self::new(vec![lo], vec![hi]).expect("valid interval")
    }

    pub fn real_line() -> Self {
        Self::interval(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, lambda: &[f64]) -> bool {
        lambda.len() == self.dim()
            && lambda.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| *a < *x && *x < *b)
    }

    pub fn check(&self, lambda: &[f64]) -> Result<()> {
        if self.contains(lambda) {
            Ok(())
        } else {
            Err(Error::domain(format!("parameter {lambda:?} is not in the open domain {:?} .. {:?}", self.lo, self.hi)))
        }
    }

    /// `count` equally spaced points spanning 10%..90% of a bounded first
    /// coordinate, or `[-2, 2]` around the midpoint of an unbounded one.
    pub fn grid(&self, count: usize) -> Vec<f64> {
        let (a, b) = (self.lo[0], self.hi[0]);
        let (lo, hi) = match (a.is_finite(), b.is_finite()) {
            (true, true) => (a + 0.1 * (b - a), a + 0.9 * (b - a)),
            (true, false) => (a + 0.5, a + 4.5),
            (false, true) => (b - 4.5, b - 0.5),
            (false, false) => (-2.0, 2.0),
        };
        if count == 1 {
            return vec![0.5 * (lo + hi)];
        }
        (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
    }
}

/// A family `{f_λ : λ ∈ Λ}` of densities on a subset of the real line.
pub trait ParametricFamily: Send + Sync {
    fn name(&self) -> String;
    fn support(&self) -> &Support;
    fn domain(&self) -> &ParamDomain;

    /// Density at `y` for `λ` already known to be in the domain. Must return 0
    /// outside the support.
    fn density(&self, lambda: &[f64], y: f64) -> f64;

    /// Analytic score `∇_λ log f_λ(y)`, when the family provides one.
    fn analytic_score(&self, _lambda: &[f64], _y: f64) -> Option<Vec<f64>> {
        None
    }

    /// `f_λ(y)` as an exact rational function of a scalar λ.
    fn rational_pdf(&self, _y: f64) -> Option<RatFunc> {
        None
    }

    /// Quadrature window `(center, scale)` for continuous supports.
    fn window(&self, _lambda: &[f64]) -> (f64, f64) {
        (0.0, 4.0)
    }

    /// Density with domain and support checks.
    fn pdf(&self, lambda: &[f64], y: f64) -> Result<f64> {
        self.domain().check(lambda)?;
        Ok(if self.support().contains(y) { self.density(lambda, y) } else { 0.0 })
    }

    /// `∇_λ log f_λ(y)`; falls back to fourth-order central differences.
    fn score(&self, lambda: &[f64], y: f64) -> Result<Vec<f64>> {
        self.domain().check(lambda)?;
        if let Some(s) = self.analytic_score(lambda, y) {
            return Ok(s);
        }
        let dom = self.domain();
        let mut out = Vec::with_capacity(lambda.len());
        for i in 0..lambda.len() {
            let mut h = deriv::score_step(lambda[i]);
            let inside = |h: f64| lambda[i] - 2.0 * h > dom.lo[i] && lambda[i] + 2.0 * h < dom.hi[i];
            while !inside(h) && h > 1e-12 {
                h *= 0.5;
            }
            if !inside(h) {
                return Err(Error::numeric("score stencil does not fit inside the parameter domain"));
            }
            let g = |x: f64| {
                let mut at = lambda.to_vec();
                at[i] = x;
                self.density(&at, y).ln()
            };
            let d = deriv::central4(&g, lambda[i], h);
            if !d.is_finite() {
                return Err(Error::numeric(format!("finite-difference score is not finite at y = {y}")));
            }
            out.push(d);
        }
        Ok(out)
    }

    /// Sum or integral of `g(y)` over the support (not weighted by the density).
    fn integrate_support(&self, lambda: &[f64], g: &dyn Fn(f64) -> f64) -> Result<f64> {
        match self.support() {
            Support::Finite(v) => Ok(v.iter().map(|&y| g(y)).sum()),
            Support::Interval(lo, hi) => {
                let (c, s) = self.window(lambda);
                Ok(Quadrature::default().with_window(c, s).integrate(g, *lo, *hi)?.value)
            }
        }
    }
}

/// A family together with one parameter value.
pub struct Member<F: ?Sized = dyn ParametricFamily> {
    pub family: Arc<F>,
    pub lambda: Vec<f64>,
}

impl<F: ?Sized> Clone for Member<F> {
    fn clone(&self) -> Self {
        Member { family: Arc::clone(&self.family), lambda: self.lambda.clone() }
    }
}

impl<F: ParametricFamily + ?Sized> Member<F> {
    pub fn new(family: Arc<F>, lambda: Vec<f64>) -> Result<Self> {
        family.domain().check(&lambda)?;
        Ok(Member { family, lambda })
    }

    pub fn pdf(&self, y: f64) -> f64 {
        if self.family.support().contains(y) {
            self.family.density(&self.lambda, y)
        } else {
            0.0
        }
    }

    pub fn support(&self) -> &Support {
        self.family.support()
    }

    pub fn integrate(&self, g: &dyn Fn(f64) -> f64) -> Result<f64> {
        self.family.integrate_support(&self.lambda, g)
    }
}

impl<F: ParametricFamily + 'static> Member<F> {
    pub fn erase(self) -> Member {
        Member { family: self.family as Arc<dyn ParametricFamily>, lambda: self.lambda }
    }
}

impl<F: ParametricFamily + ?Sized> fmt::Debug for Member<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{:?}", self.family.name(), self.lambda)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || alpha == 1.0 || !alpha.is_finite() {
        return Err(Error::domain(format!("alpha must be positive and different from 1, got {alpha}")));
    }
    Ok(())
}

/// `[base]_+^{1/(α-1)}`; a nonpositive base carries no mass.
fn power_density(base: f64, alpha: f64) -> f64 {
    if base > 0.0 {
        base.powf(1.0 / (alpha - 1.0))
    } else {
        0.0
    }
}

#[derive(Clone)]
pub enum Normalizer {
    Given(LFn),
    /// Solve `∫[h + Z + wᵀf]^{1/(α-1)} = 1` for `Z` at each λ.
    Solve,
}

/// `f_λ(y) = [h(y) + Z(λ) + w(λ)ᵀ f(y)]^{1/(α-1)}`.
#[derive(Clone)]
pub struct BAlphaFamily {
    name: String,
    alpha: f64,
    support: Support,
    domain: ParamDomain,
    h: YFn,
    f: Vec<YFn>,
    w: Vec<LFn>,
    z: Normalizer,
    window: Option<WindowFn>,
    rectangle: bool,
    w_curve: Option<SmoothFn>,
    rational: Option<Arc<dyn Fn(f64) -> Option<RatFunc> + Send + Sync>>,
}

impl BAlphaFamily {
    pub fn new(alpha: f64, support: Support, domain: ParamDomain, h: YFn, f: Vec<YFn>, w: Vec<LFn>) -> Result<Self> {
        check_alpha(alpha)?;
        if f.len() != w.len() || f.is_empty() {
            return Err(Error::domain("f and w must have the same positive length"));
        }
        Ok(BAlphaFamily {
            name: "b-alpha".into(),
            alpha,
            support,
            domain,
            h,
            f,
            w,
            z: Normalizer::Solve,
            window: None,
            rectangle: false,
            w_curve: None,
            rational: None,
        })
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_normalizer(mut self, z: LFn) -> Self {
        self.z = Normalizer::Given(z);
        self
    }

    /// Declares that the range of `w` contains a `d`-dimensional rectangle.
    pub fn with_rectangle(mut self, contains: bool) -> Self {
        self.rectangle = contains;
        self
    }

    /// Scalar `w` with (optionally analytic) derivatives, for one-parameter families.
    pub fn with_w_curve(mut self, w: SmoothFn) -> Self {
        self.w_curve = Some(w);
        self
    }

    pub fn with_window(mut self, window: impl Fn(&[f64]) -> (f64, f64) + Send + Sync + 'static) -> Self {
        self.window = Some(Arc::new(window));
        self
    }

    pub fn with_rational_pdf(mut self, r: impl Fn(f64) -> Option<RatFunc> + Send + Sync + 'static) -> Self {
        self.rational = Some(Arc::new(r));
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn d(&self) -> usize {
        self.f.len()
    }

    pub fn w_range_contains_rectangle(&self) -> bool {
        self.rectangle
    }

    pub fn h(&self, y: f64) -> f64 {
        (self.h)(y)
    }

    pub fn f_vec(&self, y: f64) -> Vec<f64> {
        self.f.iter().map(|fi| fi(y)).collect()
    }

    pub fn w_vec(&self, lambda: &[f64]) -> Vec<f64> {
        self.w.iter().map(|wi| wi(lambda)).collect()
    }

    /// `w*(λ) = α/(α-1) · w(λ)` as a smooth scalar curve (one-parameter, d = 1).
    pub fn natural_curve(&self) -> Option<SmoothFn> {
        if self.d() != 1 || self.domain.dim() != 1 {
            return None;
        }
        let k = self.alpha / (self.alpha - 1.0);
        Some(match &self.w_curve {
            Some(w) => w.scaled(k),
            None => {
                let w = Arc::clone(&self.w[0]);
                SmoothFn::new(move |x| k * w(&[x]))
            }
        })
    }

    fn core(&self, lambda: &[f64], y: f64) -> f64 {
        (self.h)(y) + self.f.iter().zip(&self.w).map(|(fi, wi)| fi(y) * wi(lambda)).sum::<f64>()
    }

    fn mass(&self, lambda: &[f64], z: f64) -> Result<f64> {
        let a = self.alpha;
        self.integrate_support(lambda, &|y| power_density(self.core(lambda, y) + z, a))
    }

    /// Normalizer `Z(λ)`, given or solved.
    pub fn z(&self, lambda: &[f64]) -> Result<f64> {
        match &self.z {
            Normalizer::Given(z) => Ok(z(lambda)),
            Normalizer::Solve => self.solve_z(lambda),
        }
    }

    fn solve_z(&self, lambda: &[f64]) -> Result<f64> {
        // mass(Z) is increasing for α > 1 and decreasing for α < 1;
        // s·(mass - 1) is increasing in both cases
        let s = if self.alpha > 1.0 { 1.0 } else { -1.0 };
        let phi = |z: f64| match self.mass(lambda, z) {
            Ok(m) if m.is_finite() => s * (m - 1.0),
            // divergent mass: Z too small for α < 1, too large for α > 1
            _ => 1e300,
        };
        let (mut lo, mut hi) = match self.support.points() {
            Some(pts) => {
                let cores: Vec<f64> = pts.iter().map(|&y| self.core(lambda, y)).collect();
                let min = cores.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = cores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if self.alpha > 1.0 {
                    (-max, -min + 1.0)
                } else {
                    (-min + 1e-300_f64.max(1e-12 * min.abs()), -min + 1.0)
                }
            }
            None => (-1.0, 1.0),
        };
        let mut step = (hi - lo).max(1.0);
        for _ in 0..200 {
            let (a, b) = (phi(lo), phi(hi));
            let low_ok = a < 0.0 || (self.alpha < 1.0 && a >= 1e300);
            if a < 0.0 && b > 0.0 {
                break;
            }
            if !(a < 0.0) {
                lo -= step;
                if self.alpha < 1.0 && low_ok {
                    // divergence at the low end: move the bracket up instead
                    lo += 2.0 * step;
                    lo = lo.min(hi);
                }
            }
            if !(b > 0.0) {
                hi += step;
            }
            step *= 2.0;
        }
        let (a, b) = (phi(lo), phi(hi));
        if !(a < 0.0 && b > 0.0) {
            return Err(Error::numeric(format!("could not bracket the normalizer Z at λ = {lambda:?}")));
        }
        optim::brent(phi, lo, hi, 1e-14, 300)
    }

    /// `Σ_j f(y_j) / n`, the candidate sufficient statistic.
    pub fn fbar(&self, sample: &[f64]) -> Vec<f64> {
        let n = sample.len() as f64;
        (0..self.d()).map(|i| sample.iter().map(|&y| (self.f[i])(y)).sum::<f64>() / n).collect()
    }
}

impl ParametricFamily for BAlphaFamily {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn support(&self) -> &Support {
        &self.support
    }
    fn domain(&self) -> &ParamDomain {
        &self.domain
    }
    fn density(&self, lambda: &[f64], y: f64) -> f64 {
        match self.z(lambda) {
            Ok(z) => power_density(self.core(lambda, y) + z, self.alpha),
            Err(_) => f64::NAN,
        }
    }
    fn rational_pdf(&self, y: f64) -> Option<RatFunc> {
        self.rational.as_ref().and_then(|r| r(y))
    }
    fn window(&self, lambda: &[f64]) -> (f64, f64) {
        self.window.as_ref().map_or((0.0, 4.0), |w| w(lambda))
    }
}

/// `f_λ(y) = N(λ) [h(y) + w(λ)ᵀ f(y)]^{1/(α-1)}`, with `N` computed from the support.
#[derive(Clone)]
pub struct MAlphaFamily {
    name: String,
    alpha: f64,
    support: Support,
    domain: ParamDomain,
    h: YFn,
    f: Vec<YFn>,
    w: Vec<LFn>,
    rational: Option<Arc<dyn Fn(f64) -> Option<RatFunc> + Send + Sync>>,
}

impl MAlphaFamily {
    pub fn new(alpha: f64, support: Support, domain: ParamDomain, h: YFn, f: Vec<YFn>, w: Vec<LFn>) -> Result<Self> {
        check_alpha(alpha)?;
        if f.len() != w.len() || f.is_empty() {
            return Err(Error::domain("f and w must have the same positive length"));
        }
        Ok(MAlphaFamily { name: "m-alpha".into(), alpha, support, domain, h, f, w, rational: None })
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_rational_pdf(mut self, r: impl Fn(f64) -> Option<RatFunc> + Send + Sync + 'static) -> Self {
        self.rational = Some(Arc::new(r));
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn w_vec(&self, lambda: &[f64]) -> Vec<f64> {
        self.w.iter().map(|wi| wi(lambda)).collect()
    }

    fn kernel(&self, lambda: &[f64], y: f64) -> f64 {
        let base = (self.h)(y) + self.f.iter().zip(&self.w).map(|(fi, wi)| fi(y) * wi(lambda)).sum::<f64>();
        power_density(base, self.alpha)
    }

    /// `N(λ) = 1 / ∫[h + wᵀf]^{1/(α-1)}`.
    pub fn n_factor(&self, lambda: &[f64]) -> Result<f64> {
        let total = self.integrate_support(lambda, &|y| self.kernel(lambda, y))?;
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::domain(format!("M(alpha) kernel has mass {total} at λ = {lambda:?}")));
        }
        Ok(1.0 / total)
    }

    /// `(Σ f(y_j)/n) / (Σ h(y_j)/n)`, the candidate sufficient statistic.
    pub fn ratio_statistic(&self, sample: &[f64]) -> Vec<f64> {
        let hbar: f64 = sample.iter().map(|&y| (self.h)(y)).sum();
        self.f.iter().map(|fi| sample.iter().map(|&y| fi(y)).sum::<f64>() / hbar).collect()
    }
}

impl ParametricFamily for MAlphaFamily {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn support(&self) -> &Support {
        &self.support
    }
    fn domain(&self) -> &ParamDomain {
        &self.domain
    }
    fn density(&self, lambda: &[f64], y: f64) -> f64 {
        match self.n_factor(lambda) {
            Ok(n) => n * self.kernel(lambda, y),
            Err(_) => f64::NAN,
        }
    }
    fn rational_pdf(&self, y: f64) -> Option<RatFunc> {
        self.rational.as_ref().and_then(|r| r(y))
    }
}

/// `f_λ(y) = exp(log b(y) + η(λ)ᵀ T(y) - A(λ))`.
#[derive(Clone)]
pub struct ExponentialFamily {
    name: String,
    support: Support,
    domain: ParamDomain,
    log_base: YFn,
    t: Vec<YFn>,
    eta: Vec<LFn>,
    log_partition: LFn,
    score: Option<ScoreFn>,
    rational: Option<Arc<dyn Fn(f64) -> Option<RatFunc> + Send + Sync>>,
    window: Option<WindowFn>,
}

impl ExponentialFamily {
    pub fn new(
        support: Support,
        domain: ParamDomain,
        log_base: YFn,
        t: Vec<YFn>,
        eta: Vec<LFn>,
        log_partition: LFn,
    ) -> Self {
        ExponentialFamily {
            name: "exponential".into(),
            support,
            domain,
            log_base,
            t,
            eta,
            log_partition,
            score: None,
            rational: None,
            window: None,
        }
    }

    /// Classical Bernoulli `λ^y (1-λ)^{1-y}` on {0, 1}.
    pub fn bernoulli() -> Self {
        let mut fam = ExponentialFamily::new(
            Support::Finite(vec![0.0, 1.0]),
            ParamDomain::interval(0.0, 1.0),
            Arc::new(|_| 0.0),
            vec![Arc::new(|y| y)],
            vec![Arc::new(|l: &[f64]| (l[0] / (1.0 - l[0])).ln())],
            Arc::new(|l: &[f64]| -(1.0 - l[0]).ln()),
        );
        fam.name = "bernoulli".into();
        fam.score = Some(Arc::new(|l: &[f64], y| vec![y / l[0] - (1.0 - y) / (1.0 - l[0])]));
        fam.rational = Some(Arc::new(bernoulli_rational));
        fam
    }

    /// Normal location family with unit variance.
    pub fn normal_location() -> Self {
        let c = -0.5 * (2.0 * std::f64::consts::PI).ln();
        let mut fam = ExponentialFamily::new(
            Support::real_line(),
            ParamDomain::real_line(),
            Arc::new(move |y| c - 0.5 * y * y),
            vec![Arc::new(|y| y)],
            vec![Arc::new(|l: &[f64]| l[0])],
            Arc::new(|l: &[f64]| 0.5 * l[0] * l[0]),
        );
        fam.name = "normal".into();
        fam.score = Some(Arc::new(|l: &[f64], y| vec![y - l[0]]));
        fam.window = Some(Arc::new(|l: &[f64]| (l[0], 6.0)));
        fam
    }
}

impl ParametricFamily for ExponentialFamily {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn support(&self) -> &Support {
        &self.support
    }
    fn domain(&self) -> &ParamDomain {
        &self.domain
    }
    fn density(&self, lambda: &[f64], y: f64) -> f64 {
        let lin: f64 = self.t.iter().zip(&self.eta).map(|(t, e)| t(y) * e(lambda)).sum();
        ((self.log_base)(y) + lin - (self.log_partition)(lambda)).exp()
    }
    fn analytic_score(&self, lambda: &[f64], y: f64) -> Option<Vec<f64>> {
        self.score.as_ref().map(|s| s(lambda, y))
    }
    fn rational_pdf(&self, y: f64) -> Option<RatFunc> {
        self.rational.as_ref().and_then(|r| r(y))
    }
    fn window(&self, lambda: &[f64]) -> (f64, f64) {
        self.window.as_ref().map_or((0.0, 4.0), |w| w(lambda))
    }
}

fn bernoulli_rational(y: f64) -> Option<RatFunc> {
    use crate::exact::{q, Poly};
    if y == 0.0 {
        Some(RatFunc::from_poly(Poly::new(vec![q(1), q(-1)])))
    } else if y == 1.0 {
        Some(RatFunc::x())
    } else {
        None
    }
}

/// Student location family with unit scale and fixed degrees of freedom `ν > 2`.
#[derive(Clone, Debug)]
pub struct StudentLocationFamily {
    nu: f64,
    alpha: f64,
    c: f64,
    n_nu: f64,
    support: Support,
    domain: ParamDomain,
}

impl StudentLocationFamily {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu > 2.0) || !nu.is_finite() {
            return Err(Error::domain(format!("degrees of freedom must exceed 2, got {nu}")));
        }
        let alpha = 1.0 - 2.0 / (nu + 1.0);
        let ln_c = ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0) - 0.5 * (std::f64::consts::PI * nu).ln();
        let c = ln_c.exp();
        let n_nu = ((alpha - 1.0) * ln_c).exp();
        Ok(StudentLocationFamily {
            nu,
            alpha,
            c,
            n_nu,
            support: Support::real_line(),
            domain: ParamDomain::real_line(),
        })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `α = 1 - 2/(ν+1)`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Density constant `Γ((ν+1)/2) / (Γ(ν/2) √(πν))`.
    pub fn constant(&self) -> f64 {
        self.c
    }

    /// `N_ν = c^{α-1}`.
    pub fn n_nu(&self) -> f64 {
        self.n_nu
    }

    /// Scale of the deformed Gaussian, `σ*² = ν(1-α) / (2α N_ν)`.
    pub fn sigma_star(&self) -> f64 {
        (self.nu * (1.0 - self.alpha) / (2.0 * self.alpha * self.n_nu)).sqrt()
    }

    /// B^(α) representation: `h = (N/ν) y²`, `f = y`, `w = -2μN/ν`, `Z = N(1 + μ²/ν)`.
    pub fn to_balpha(&self) -> BAlphaFamily {
        let (nu, n) = (self.nu, self.n_nu);
        let w = SmoothFn::linear(-2.0 * n / nu, 0.0);
        BAlphaFamily::new(
            self.alpha,
            Support::real_line(),
            ParamDomain::real_line(),
            Arc::new(move |y| n / nu * y * y),
            vec![Arc::new(|y| y)],
            vec![Arc::new(move |l: &[f64]| -2.0 * l[0] * n / nu)],
        )
        .expect("valid Student parameters")
        .named(format!("student(nu={nu})"))
        .with_normalizer(Arc::new(move |l: &[f64]| n * (1.0 + l[0] * l[0] / nu)))
        .with_rectangle(true)
        .with_w_curve(w)
        .with_window(|l| (l[0], 4.0))
    }
}

impl ParametricFamily for StudentLocationFamily {
    fn name(&self) -> String {
        format!("student(nu={})", self.nu)
    }
    fn support(&self) -> &Support {
        &self.support
    }
    fn domain(&self) -> &ParamDomain {
        &self.domain
    }
    fn density(&self, lambda: &[f64], y: f64) -> f64 {
        let d = y - lambda[0];
        self.c * (1.0 + d * d / self.nu).powf(-(self.nu + 1.0) / 2.0)
    }
    fn analytic_score(&self, lambda: &[f64], y: f64) -> Option<Vec<f64>> {
        let d = y - lambda[0];
        Some(vec![(self.nu + 1.0) * d / (self.nu + d * d)])
    }
    fn window(&self, lambda: &[f64]) -> (f64, f64) {
        (lambda[0], 4.0)
    }
}

/// Bernoulli written as an M^(α)-family: α = 2, h = 1, f = y, w = (2λ-1)/(1-λ).
pub fn bernoulli_malpha_family() -> MAlphaFamily {
    MAlphaFamily::new(
        2.0,
        Support::Finite(vec![0.0, 1.0]),
        ParamDomain::interval(0.0, 1.0),
        Arc::new(|_| 1.0),
        vec![Arc::new(|y| y)],
        vec![Arc::new(|l: &[f64]| (2.0 * l[0] - 1.0) / (1.0 - l[0]))],
    )
    .expect("valid alpha")
    .named("bernoulli-malpha")
    .with_rational_pdf(bernoulli_rational)
}

/// Bernoulli written as a B^(2)-family: h = 0, f = y, w = 2λ-1, Z = 1-λ.
pub fn bernoulli_balpha_family() -> BAlphaFamily {
    BAlphaFamily::new(
        2.0,
        Support::Finite(vec![0.0, 1.0]),
        ParamDomain::interval(0.0, 1.0),
        Arc::new(|_| 0.0),
        vec![Arc::new(|y| y)],
        vec![Arc::new(|l: &[f64]| 2.0 * l[0] - 1.0)],
    )
    .expect("valid alpha")
    .named("bernoulli-balpha")
    .with_normalizer(Arc::new(|l: &[f64]| 1.0 - l[0]))
    .with_rectangle(true)
    .with_w_curve(SmoothFn::linear(2.0, -1.0))
    .with_rational_pdf(bernoulli_rational)
}

/// Student location family in B^(α) form, evaluated at location `mu`.
pub fn make_student_balpha(nu: f64, mu: f64) -> Result<Member<BAlphaFamily>> {
    let fam = StudentLocationFamily::new(nu)?.to_balpha();
    Member::new(Arc::new(fam), vec![mu])
}

/// Bernoulli M^(α) family evaluated at `lambda`.
pub fn make_bernoulli_malpha(lambda: f64) -> Result<Member<MAlphaFamily>> {
    Member::new(Arc::new(bernoulli_malpha_family()), vec![lambda])
}

/// Finite family given by a table of values and weight expressions in λ.
#[derive(Clone)]
pub struct FiniteTableFamily {
    name: String,
    support: Support,
    domain: ParamDomain,
    weights: Vec<Expr>,
    exact: Option<Vec<RatFunc>>,
}

impl FiniteTableFamily {
    pub fn new(values: Vec<f64>, weights: Vec<Expr>, domain: ParamDomain) -> Result<Self> {
        if values.is_empty() || values.len() != weights.len() {
            return Err(Error::Config("table needs one weight per value".into()));
        }
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("table values must be distinct".into()));
        }
        if domain.dim() != 1 {
            return Err(Error::Config("table families take a scalar parameter".into()));
        }
        let exact = weights.iter().map(Expr::to_ratfunc).collect();
        Ok(FiniteTableFamily { name: "table".into(), support: Support::Finite(values), domain, weights, exact })
    }

    pub fn parse(rows: &[(f64, &str)], domain: ParamDomain) -> Result<Self> {
        let weights = rows.iter().map(|(_, e)| Expr::parse(e)).collect::<Result<Vec<_>>>()?;
        Self::new(rows.iter().map(|r| r.0).collect(), weights, domain)
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

impl ParametricFamily for FiniteTableFamily {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn support(&self) -> &Support {
        &self.support
    }
    fn domain(&self) -> &ParamDomain {
        &self.domain
    }
    fn density(&self, lambda: &[f64], y: f64) -> f64 {
        let pts = self.support.points().unwrap();
        pts.iter().position(|&v| v == y).map_or(0.0, |i| self.weights[i].eval(lambda[0]))
    }
    fn rational_pdf(&self, y: f64) -> Option<RatFunc> {
        let pts = self.support.points().unwrap();
        let i = pts.iter().position(|&v| v == y)?;
        self.exact.as_ref().map(|e| e[i].clone())
    }
}

/// Outcome of [`normalization_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationReport {
    pub passed: bool,
    pub max_deviation: f64,
    pub worst_lambda: Vec<f64>,
}

/// Checks `|∫ f_λ - 1| ≤ tol` at every grid point.
pub fn normalization_check(fam: &dyn ParametricFamily, grid: &[Vec<f64>], tol: f64) -> Result<NormalizationReport> {
    let mut worst = (0.0_f64, Vec::new());
    for lambda in grid {
        fam.domain().check(lambda)?;
        let total = fam.integrate_support(lambda, &|y| fam.density(lambda, y))?;
        let dev = (total - 1.0).abs();
        if !(dev <= worst.0) {
            worst = (dev, lambda.clone());
        }
    }
    Ok(NormalizationReport { passed: worst.0 <= tol, max_deviation: worst.0, worst_lambda: worst.1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn student_direct(nu: f64, mu: f64, y: f64) -> f64 {
        let c = (ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0)).exp() / (PI * nu).sqrt();
        c * (1.0 + (y - mu).powi(2) / nu).powf(-(nu + 1.0) / 2.0)
    }

    #[test]
    fn student_balpha_value_at_center() {
        let m = make_student_balpha(3.0, 0.0).unwrap();
        // Γ(2) / (Γ(1.5) √(3π)) with Γ(1.5) = √π/2
        let expected = 1.0 / ((PI.sqrt() / 2.0) * (3.0 * PI).sqrt());
        assert!((m.pdf(0.0) - expected).abs() < 1e-12);
        assert!((m.pdf(0.0) - 0.367_552_596_947_861).abs() < 1e-9);
        assert_eq!(m.family.alpha(), 0.5);
    }

    #[test]
    fn student_shift() {
        let a = make_student_balpha(3.0, 0.0).unwrap();
        let b = make_student_balpha(3.0, 5.0).unwrap();
        assert!((a.pdf(0.0) - b.pdf(5.0)).abs() < 1e-14);
    }

    #[test]
    fn student_representation_matches_direct_formula() {
        for &nu in &[3.0, 4.5, 10.0] {
            for &mu in &[-1.5, 0.0, 2.0] {
                let m = make_student_balpha(nu, mu).unwrap();
                for k in 0..=200 {
                    let y = -10.0 + 0.1 * k as f64;
                    let d = student_direct(nu, mu, y);
                    assert!((m.pdf(y) - d).abs() <= 1e-12 * d.max(1e-3), "nu={nu} mu={mu} y={y}");
                }
            }
        }
    }

    #[test]
    fn student_rejects_small_nu() {
        assert!(matches!(make_student_balpha(2.0, 0.0), Err(Error::Domain(_))));
        assert!(StudentLocationFamily::new(1.5).is_err());
    }

    #[test]
    fn bernoulli_malpha_values() {
        let m = make_bernoulli_malpha(0.3).unwrap();
        assert!((m.pdf(0.0) - 0.7).abs() < 1e-15);
        assert!((m.pdf(1.0) - 0.3).abs() < 1e-15);
        assert_eq!(m.pdf(0.5), 0.0);
        let w = m.family.w_vec(&[0.3])[0];
        assert!((w + 4.0 / 7.0).abs() < 1e-15);
        let h = make_bernoulli_malpha(0.5).unwrap();
        assert_eq!(h.pdf(0.0), h.pdf(1.0));
        for bad in [0.0, 1.0, -0.2, 1.5] {
            assert!(matches!(make_bernoulli_malpha(bad), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn solved_normalizer_matches_closed_form() {
        let given = bernoulli_balpha_family();
        let solved = BAlphaFamily::new(
            2.0,
            Support::Finite(vec![0.0, 1.0]),
            ParamDomain::interval(0.0, 1.0),
            Arc::new(|_| 0.0),
            vec![Arc::new(|y| y)],
            vec![Arc::new(|l: &[f64]| 2.0 * l[0] - 1.0)],
        )
        .unwrap();
        for &l in &[0.1, 0.3, 0.77] {
            assert!((solved.z(&[l]).unwrap() - given.z(&[l]).unwrap()).abs() < 1e-12);
        }
        let st = StudentLocationFamily::new(3.0).unwrap().to_balpha();
        let raw = BAlphaFamily::new(
            st.alpha(),
            Support::real_line(),
            ParamDomain::real_line(),
            Arc::new({
                let n = StudentLocationFamily::new(3.0).unwrap().n_nu();
                move |y| n / 3.0 * y * y
            }),
            vec![Arc::new(|y| y)],
            vec![Arc::new({
                let n = StudentLocationFamily::new(3.0).unwrap().n_nu();
                move |l: &[f64]| -2.0 * l[0] * n / 3.0
            })],
        )
        .unwrap()
        .with_window(|l| (l[0], 4.0));
        for &mu in &[0.0, 1.25] {
            let zs = raw.z(&[mu]).unwrap();
            let zc = st.z(&[mu]).unwrap();
            assert!((zs - zc).abs() < 1e-8 * zc.abs(), "{zs} vs {zc}");
        }
    }

    #[test]
    fn normalization_reports() {
        let bern = bernoulli_malpha_family();
        let grid: Vec<Vec<f64>> = (1..=9).map(|k| vec![k as f64 / 10.0]).collect();
        assert!(normalization_check(&bern, &grid, 1e-12).unwrap().passed);

        let st = StudentLocationFamily::new(3.0).unwrap();
        let r = normalization_check(&st, &[vec![0.0], vec![2.5]], 1e-8).unwrap();
        assert!(r.passed, "{r:?}");

        let doubled =
            FiniteTableFamily::parse(&[(0.0, "2*(1-l)"), (1.0, "2*l")], ParamDomain::interval(0.0, 1.0)).unwrap();
        let r = normalization_check(&doubled, &grid, 1e-12).unwrap();
        assert!(!r.passed);
        assert!((r.max_deviation - 1.0).abs() < 1e-12);

        assert!(normalization_check(&bern, &[vec![1.0]], 1e-12).is_err());
    }

    #[test]
    fn finite_difference_score_matches_analytic() {
        let st = StudentLocationFamily::new(4.0).unwrap();
        let b = st.to_balpha();
        for &y in &[-2.0, 0.3, 5.0] {
            let a = st.score(&[0.7], y).unwrap()[0];
            let fd = b.score(&[0.7], y).unwrap()[0];
            assert!((a - fd).abs() < 1e-8 * a.abs().max(1.0));
        }
        let bern = bernoulli_malpha_family();
        let s = bern.score(&[0.3], 1.0).unwrap()[0];
        assert!((s - 1.0 / 0.3).abs() < 1e-8);
    }

    #[test]
    fn natural_curve_is_scaled_w() {
        let st = StudentLocationFamily::new(3.0).unwrap();
        let curve = st.to_balpha().natural_curve().unwrap();
        let ss = st.sigma_star();
        for &mu in &[-1.0, 0.5, 2.0] {
            assert!((curve.eval(mu) - mu / (ss * ss)).abs() < 1e-12);
        }
        assert!((curve.derivative(1, 0.0) - 1.0 / (ss * ss)).abs() < 1e-12);
        assert_eq!(curve.derivative(2, 0.0), 0.0);
    }

    #[test]
    fn table_family_exact_weights() {
        let t =
            FiniteTableFamily::parse(&[(0.0, "(1-l)/2"), (1.0, "1/2"), (2.0, "l/2")], ParamDomain::interval(0.0, 1.0))
                .unwrap();
        let r = t.rational_pdf(2.0).unwrap();
        assert_eq!(r.eval(&crate::exact::q_frac(1, 2)), Some(crate::exact::q_frac(1, 4)));
        assert!(FiniteTableFamily::parse(&[(0.0, "1"), (0.0, "1")], ParamDomain::interval(0.0, 1.0)).is_err());
    }
}
