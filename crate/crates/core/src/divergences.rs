//! Kullback–Leibler, density power (DPD) and logarithmic density power (LDPD)
//! divergences, and the DPD/LDPD estimating-equation residuals.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{q, Q};
use crate::families::{Member, ParametricFamily, Support};
use crate::quad::Quadrature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DivergenceKind {
    Kl,
    Dpd,
    Ldpd,
}

#[derive(Debug, Clone, Copy)]
pub struct DivergenceSpec {
    pub kind: DivergenceKind,
    pub alpha: f64,
    pub quadrature: Quadrature,
}

impl DivergenceSpec {
    pub fn new(kind: DivergenceKind, alpha: f64) -> Result<Self> {
        if kind != DivergenceKind::Kl {
            check_alpha(alpha)?;
        }
        Ok(DivergenceSpec { kind, alpha, quadrature: Quadrature::default() })
    }

    pub fn evaluate(&self, g: &Member, f: &Member) -> Result<f64> {
        let pair = Pair::new(g, f, self.quadrature)?;
        match self.kind {
            DivergenceKind::Kl => pair.kl(),
            DivergenceKind::Dpd => pair.dpd(self.alpha),
            DivergenceKind::Ldpd => pair.ldpd(self.alpha),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || alpha == 1.0 || !alpha.is_finite() {
        return Err(Error::domain(format!("alpha must be positive and different from 1, got {alpha}")));
    }
    Ok(())
}

/// `g log(g/f) - g + f`: nonnegative pointwise, sums to the KL divergence for
/// normalized densities.
fn kl_term(g: f64, f: f64) -> f64 {
    if g == 0.0 {
        f
    } else if f == 0.0 {
        f64::INFINITY
    } else if g == f {
        0.0
    } else {
        (g * (g / f).ln() - g + f).max(0.0)
    }
}

/// Bregman term of `φ(x) = x^α/(α-1)`: `f^α - α/(α-1) g f^{α-1} + g^α/(α-1) ≥ 0`.
fn dpd_term(g: f64, f: f64, alpha: f64) -> f64 {
    if f == 0.0 {
        return if g == 0.0 {
            0.0
        } else if alpha > 1.0 {
            g.powf(alpha) / (alpha - 1.0)
        } else {
            f64::INFINITY
        };
    }
    if g == f {
        return 0.0;
    }
    let fa1 = f.powf(alpha - 1.0);
    // nonnegative pointwise; drop rounding residue below zero
    (f * fa1 - alpha / (alpha - 1.0) * g * fa1 + g.powf(alpha) / (alpha - 1.0)).max(0.0)
}

/// `g f^{α-1}` with `0 · ∞ = 0`.
fn cross_term(g: f64, f: f64, alpha: f64) -> f64 {
    if g == 0.0 {
        0.0
    } else if f == 0.0 {
        if alpha > 1.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        g * f.powf(alpha - 1.0)
    }
}

/// LDPD from `A = ∫g f^{α-1}`, `B = ∫g^α`, `C = ∫f^α`, written through the
/// Hölder ratio `A / (B^{1/α} C^{(α-1)/α})`, which is ≤ 1 for α > 1 and ≥ 1 for α < 1.
fn ldpd_from_integrals(a: f64, b: f64, c: f64, alpha: f64) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) || !(c > 0.0) {
        return Err(Error::domain(format!("LDPD integrals must be positive, got {a}, {b}, {c}")));
    }
    if a.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let log_ratio = a.ln() - b.ln() / alpha - (alpha - 1.0) / alpha * c.ln();
    // the ratio is 1 exactly when g = f; clamp rounding residue of that case
    Ok((alpha / (1.0 - alpha) * log_ratio).max(0.0))
}

pub fn kl_finite(g: &[f64], f: &[f64]) -> Result<f64> {
    same_len(g, f)?;
    Ok(g.iter().zip(f).map(|(&a, &b)| kl_term(a, b)).sum())
}

pub fn dpd_finite(g: &[f64], f: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    same_len(g, f)?;
    Ok(g.iter().zip(f).map(|(&a, &b)| dpd_term(a, b, alpha)).sum())
}

pub fn ldpd_finite(g: &[f64], f: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    same_len(g, f)?;
    let a = g.iter().zip(f).map(|(&x, &y)| cross_term(x, y, alpha)).sum();
    let b = g.iter().map(|x| x.powf(alpha)).sum();
    let c = f.iter().map(|y| y.powf(alpha)).sum();
    ldpd_from_integrals(a, b, c, alpha)
}

/// DPD in exact rational arithmetic for integer `α ≥ 2`.
pub fn dpd_exact(g: &[Q], f: &[Q], alpha: u32) -> Result<Q> {
    if alpha < 2 {
        return Err(Error::domain("exact DPD needs an integer alpha of at least 2"));
    }
    if g.len() != f.len() {
        return Err(Error::domain("pmfs have different lengths"));
    }
    let k = q(alpha as i64);
    let km1 = q(alpha as i64 - 1);
    let pow = |x: &Q, e: u32| (0..e).fold(Q::one(), |acc, _| acc * x);
    Ok(g.iter().zip(f).fold(Q::zero(), |acc, (a, b)| {
        let fa1 = pow(b, alpha - 1);
        acc + &fa1 * b - &k / &km1 * a * &fa1 + pow(a, alpha) / &km1
    }))
}

fn same_len(g: &[f64], f: &[f64]) -> Result<()> {
    if g.len() != f.len() {
        return Err(Error::domain("pmfs have different lengths"));
    }
    if g.iter().chain(f).any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::domain("pmf entries must be finite and nonnegative"));
    }
    Ok(())
}

/// Two densities on a common support.
struct Pair<'a> {
    g: &'a Member,
    f: &'a Member,
    points: Option<Vec<f64>>,
    range: (f64, f64),
    quad: Quadrature,
}

impl<'a> Pair<'a> {
    fn new(g: &'a Member, f: &'a Member, quad: Quadrature) -> Result<Self> {
        match (g.support(), f.support()) {
            (Support::Finite(a), Support::Finite(b)) => {
                let mut pts: Vec<f64> = a.iter().chain(b).copied().collect();
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                Ok(Pair { g, f, points: Some(pts), range: (0.0, 0.0), quad })
            }
            (Support::Interval(a0, a1), Support::Interval(b0, b1)) => {
                let (cg, sg) = g.family.window(&g.lambda);
                let (cf, sf) = f.family.window(&f.lambda);
                let quad = quad.with_window(0.5 * (cg + cf), sg.max(sf) + 0.5 * (cg - cf).abs());
                Ok(Pair { g, f, points: None, range: (a0.min(*b0), a1.max(*b1)), quad })
            }
            _ => Err(Error::domain("densities do not share a support type (finite vs continuous)")),
        }
    }

    fn integrate(&self, h: impl Fn(f64, f64) -> f64) -> Result<f64> {
        match &self.points {
            Some(pts) => Ok(pts.iter().map(|&y| h(self.g.pdf(y), self.f.pdf(y))).sum()),
            None => Ok(self.quad.integrate(|y| h(self.g.pdf(y), self.f.pdf(y)), self.range.0, self.range.1)?.value),
        }
    }

    fn kl(&self) -> Result<f64> {
        if let Some(pts) = &self.points {
            if pts.iter().any(|&y| self.g.pdf(y) > 0.0 && self.f.pdf(y) == 0.0) {
                return Ok(f64::INFINITY);
            }
        }
        self.integrate(kl_term)
    }

    fn dpd(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        self.integrate(|g, f| dpd_term(g, f, alpha))
    }

    fn ldpd(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        let a = self.integrate(|g, f| cross_term(g, f, alpha))?;
        let b = self.integrate(|g, _| g.powf(alpha))?;
        let c = self.integrate(|_, f| f.powf(alpha))?;
        ldpd_from_integrals(a, b, c, alpha)
    }
}

/// `∫ g log(g/f)`; `+∞` when `f = 0` on a set where `g > 0`.
pub fn kl_divergence(g: &Member, f: &Member) -> Result<f64> {
    DivergenceSpec::new(DivergenceKind::Kl, 1.0)?.evaluate(g, f)
}

pub fn dpd(g: &Member, f: &Member, alpha: f64) -> Result<f64> {
    DivergenceSpec::new(DivergenceKind::Dpd, alpha)?.evaluate(g, f)
}

pub fn ldpd(g: &Member, f: &Member, alpha: f64) -> Result<f64> {
    DivergenceSpec::new(DivergenceKind::Ldpd, alpha)?.evaluate(g, f)
}

/// `∫ f_λ^α u(·, λ)` (vector) and `∫ f_λ^α`.
pub(crate) fn power_moments(fam: &dyn ParametricFamily, lambda: &[f64], alpha: f64) -> Result<(Vec<f64>, f64)> {
    let k = lambda.len();
    let mut scores = vec![0.0; k];
    for (i, s) in scores.iter_mut().enumerate() {
        let integrand = |y: f64| {
            let f = fam.density(lambda, y);
            if f == 0.0 {
                return 0.0;
            }
            match fam.score(lambda, y) {
                Ok(u) => f.powf(alpha) * u[i],
                Err(_) => f64::NAN,
            }
        };
        *s = fam.integrate_support(lambda, &integrand)?;
        if !s.is_finite() {
            return Err(Error::numeric("score integral is not finite"));
        }
    }
    let mass = fam.integrate_support(lambda, &|y| fam.density(lambda, y).powf(alpha))?;
    Ok((scores, mass))
}

/// `(1/n) Σ f_λ^{α-1}(y_j) u(y_j, λ) − ∫ f_λ^α u`.
pub fn dpd_estimating_residual(
    sample: &[f64],
    fam: &dyn ParametricFamily,
    lambda: &[f64],
    alpha: f64,
) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    if sample.is_empty() {
        return Err(Error::domain("empty sample"));
    }
    fam.domain().check(lambda)?;
    let (integral, _) = power_moments(fam, lambda, alpha)?;
    let n = sample.len() as f64;
    let mut out = vec![0.0; lambda.len()];
    for &y in sample {
        let f = fam.pdf(lambda, y)?;
        let u = fam.score(lambda, y)?;
        let wt = f.powf(alpha - 1.0);
        for (o, ui) in out.iter_mut().zip(&u) {
            *o += wt * ui / n;
        }
    }
    Ok(out.iter().zip(&integral).map(|(a, b)| a - b).collect())
}

/// Ratio form for LDPD: `Σ f^{α-1} u / Σ f^{α-1} − ∫ f^α u / ∫ f^α`.
pub fn ldpd_estimating_residual(
    sample: &[f64],
    fam: &dyn ParametricFamily,
    lambda: &[f64],
    alpha: f64,
) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    if sample.is_empty() {
        return Err(Error::domain("empty sample"));
    }
    fam.domain().check(lambda)?;
    let (integral, mass) = power_moments(fam, lambda, alpha)?;
    let mut num = vec![0.0; lambda.len()];
    let mut den = 0.0;
    for &y in sample {
        let wt = fam.pdf(lambda, y)?.powf(alpha - 1.0);
        let u = fam.score(lambda, y)?;
        den += wt;
        for (o, ui) in num.iter_mut().zip(&u) {
            *o += wt * ui;
        }
    }
    if !(den > 0.0) || !(mass > 0.0) {
        return Err(Error::domain("LDPD residual needs positive weights"));
    }
    Ok(num.iter().zip(&integral).map(|(a, b)| a / den - b / mass).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q_frac;
    use crate::families::{make_bernoulli_malpha, ExponentialFamily, StudentLocationFamily};
    use std::sync::Arc;

    fn bern(l: f64) -> Member {
        make_bernoulli_malpha(l).unwrap().erase()
    }

    fn normal(mu: f64) -> Member {
        Member::new(Arc::new(ExponentialFamily::normal_location()), vec![mu]).unwrap().erase()
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&bern(0.3), &bern(0.3)).unwrap(), 0.0);
        let expected = 0.7 * 1.4f64.ln() + 0.3 * 0.6f64.ln();
        assert!((kl_divergence(&bern(0.3), &bern(0.5)).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.08228).abs() < 5e-6);
        let v = kl_divergence(&normal(0.0), &normal(1.0)).unwrap();
        assert!((v - 0.5).abs() < 1e-9, "{v}");
    }

    #[test]
    fn kl_infinite_on_missing_mass() {
        assert_eq!(kl_finite(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), f64::INFINITY);
        assert!(kl_divergence(&bern(0.3), &normal(0.0)).is_err());
    }

    #[test]
    fn dpd_examples() {
        assert_eq!(dpd(&bern(0.3), &bern(0.3), 2.0).unwrap(), 0.0);
        assert!((dpd(&bern(0.3), &bern(0.5), 2.0).unwrap() - 0.08).abs() < 1e-15);
        // α = 1/2, directly from the three-integral definition
        let (g, f, a) = ([0.7, 0.3], [0.5, 0.5], 0.5);
        let brute: f64 = a / (1.0 - a) * (0..2).map(|i| g[i] * f64::powf(f[i], a - 1.0)).sum::<f64>()
            - 1.0 / (1.0 - a) * (0..2).map(|i| f64::powf(g[i], a)).sum::<f64>()
            + (0..2).map(|i| f64::powf(f[i], a)).sum::<f64>();
        let v = dpd(&bern(0.3), &bern(0.5), 0.5).unwrap();
        assert!(v > 0.0 && (v - brute).abs() < 1e-14);
        assert!(dpd(&bern(0.3), &bern(0.5), 1.0).is_err());
    }

    #[test]
    fn dpd_exact_is_l2_at_two() {
        let g = [q_frac(7, 10), q_frac(3, 10)];
        let f = [q_frac(1, 2), q_frac(1, 2)];
        assert_eq!(dpd_exact(&g, &f, 2).unwrap(), q_frac(2, 25));
    }

    #[test]
    fn ldpd_examples() {
        assert_eq!(ldpd(&bern(0.3), &bern(0.3), 2.0).unwrap(), 0.0);
        // α = 2: -2 log Σgf + log Σg² + log Σf²
        let (g, f): ([f64; 2], [f64; 2]) = ([0.7, 0.3], [0.5, 0.5]);
        let brute = -2.0 * (g[0] * f[0] + g[1] * f[1]).ln() + (g[0] * g[0] + g[1] * g[1]).ln() + (0.5f64).ln();
        let v = ldpd(&bern(0.3), &bern(0.5), 2.0).unwrap();
        assert!((v - brute).abs() < 1e-14);
        // α = 2 is symmetric by Cauchy–Schwarz; α = 3 is not
        let brute3 = |g: [f64; 2], f: [f64; 2]| {
            let s = |h: &dyn Fn(usize) -> f64| h(0) + h(1);
            -1.5 * s(&|i| g[i] * f[i] * f[i]).ln() + 0.5 * s(&|i| g[i].powi(3)).ln() + s(&|i| f[i].powi(3)).ln()
        };
        let fwd = ldpd(&bern(0.3), &bern(0.5), 3.0).unwrap();
        let back = ldpd(&bern(0.5), &bern(0.3), 3.0).unwrap();
        assert!((fwd - brute3(g, f)).abs() < 1e-14);
        assert!((back - brute3(f, g)).abs() < 1e-14);
        assert!((fwd - back).abs() > 1e-3);
    }

    #[test]
    fn ldpd_rejects_zero_integrals() {
        assert!(matches!(ldpd_finite(&[0.0, 0.0], &[0.5, 0.5], 2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn continuous_dpd_between_normals() {
        // α = 2: ∫(φ(y) - φ(y-1))² = 2·(1/(2√π))·(1 - e^{-1/4})
        let v = dpd(&normal(0.0), &normal(1.0), 2.0).unwrap();
        let expected = (1.0 - (-0.25f64).exp()) / std::f64::consts::PI.sqrt();
        assert!((v - expected).abs() < 1e-9, "{v} vs {expected}");
    }

    #[test]
    fn residual_vanishes_on_symmetric_sample() {
        let st = StudentLocationFamily::new(3.0).unwrap();
        let sample = [-2.0, -0.5, 0.5, 2.0].map(|y| y + 1.3);
        let r = dpd_estimating_residual(&sample, &st, &[1.3], 0.5).unwrap();
        assert!(r[0].abs() < 1e-8, "{r:?}");
        let r = ldpd_estimating_residual(&sample, &st, &[1.3], 0.5).unwrap();
        assert!(r[0].abs() < 1e-8, "{r:?}");
    }

    #[test]
    fn residual_near_alpha_one_is_ml_score() {
        let st = StudentLocationFamily::new(5.0).unwrap();
        let sample = [0.2, 1.7, -0.4, 3.1];
        let ml: f64 = sample.iter().map(|&y| st.score(&[0.5], y).unwrap()[0]).sum::<f64>() / 4.0;
        let mut prev = f64::INFINITY;
        for eps in [1e-2, 1e-3, 1e-4] {
            let r = dpd_estimating_residual(&sample, &st, &[0.5], 1.0 + eps).unwrap()[0];
            let gap = (r - ml).abs();
            assert!(gap < 10.0 * eps, "eps {eps}: gap {gap}");
            assert!(gap < prev);
            prev = gap;
        }
    }
}
