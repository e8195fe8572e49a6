//! Stress-strength reliability `P(Y < X) = Φ(μ/(√2σ*))` under the deformed
//! Gaussian induced by the Student location family.

use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;

use crate::aed::{aed_balpha, AedReport, NaturalParamCurve, Preferred};
use crate::deriv::SmoothFn;
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::quad::Quadrature;
use crate::special::{ln_gamma, norm_cdf, norm_pdf};

/// Lower and upper reliability of the MDPDE-preferred region.
pub const RELIABILITY_BAND: (f64, f64) = (0.19, 0.81);

/// `σ* = [2α/(1−α) · ν^{−(1+α)/2} · (Γ((ν+1)/2)/(Γ(ν/2)√π))^{α−1}]^{−1/2}` with `α = 1 − 2/(ν+1)`.
pub fn sigma_star(nu: f64) -> Result<f64> {
    if !(nu > 2.0) || !nu.is_finite() {
        return Err(Error::domain(format!("degrees of freedom must exceed 2, got {nu}")));
    }
    let alpha = 1.0 - 2.0 / (nu + 1.0);
    let ln_ratio = ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0) - 0.5 * PI.ln();
    let ln_inner = (2.0 * alpha / (1.0 - alpha)).ln() - 0.5 * (1.0 + alpha) * nu.ln() + (alpha - 1.0) * ln_ratio;
    Ok((-0.5 * ln_inner).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StressStrengthModel {
    /// `None` for a synthetic model given directly by its scale.
    pub nu: Option<f64>,
    pub mu: f64,
    pub sigma_star: f64,
    pub alpha: Option<f64>,
}

impl StressStrengthModel {
    pub fn new(nu: f64, mu: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::domain("μ must be finite"));
        }
        Ok(StressStrengthModel { nu: Some(nu), mu, sigma_star: sigma_star(nu)?, alpha: Some(1.0 - 2.0 / (nu + 1.0)) })
    }

    pub fn synthetic(mu: f64, sigma_star: f64) -> Result<Self> {
        if !(sigma_star > 0.0) || !mu.is_finite() {
            return Err(Error::domain("σ* must be positive and μ finite"));
        }
        Ok(StressStrengthModel { nu: None, mu, sigma_star, alpha: None })
    }

    pub fn with_mu(self, mu: f64) -> Self {
        StressStrengthModel { mu, ..self }
    }

    pub fn reliability(&self) -> f64 {
        reliability(self.mu, self.sigma_star)
    }

    /// `√(8/(4+σ*))·σ*`.
    pub fn threshold(&self) -> f64 {
        (8.0 / (4.0 + self.sigma_star)).sqrt() * self.sigma_star
    }
}

pub fn reliability(mu: f64, sigma_star: f64) -> f64 {
    norm_cdf(mu / (SQRT_2 * sigma_star))
}

fn umvue_factor(n: f64) -> f64 {
    (n / (2.0 * n - 1.0)).sqrt()
}

/// `(Φ(ȳ/(√2σ*)), Φ(√n/√(2n−1)·ȳ/σ*))`: the MDPDE plug-in and the generalized UMVUE.
pub fn estimators(model: &StressStrengthModel, ybar: f64, n: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::domain("n must be positive"));
    }
    let s = model.sigma_star;
    Ok((norm_cdf(ybar / (SQRT_2 * s)), norm_cdf(umvue_factor(n as f64) * ybar / s)))
}

pub fn aed_closed_form(mu: f64, sigma_star: f64) -> f64 {
    ((4.0 + sigma_star) * mu * mu - 8.0 * sigma_star * sigma_star) / (16.0 * sigma_star)
}

/// `τ̃(μ) = Φ(μ/(√2σ*))` with analytic derivatives.
pub fn reliability_curve(sigma_star: f64) -> SmoothFn {
    let c = SQRT_2 * sigma_star;
    SmoothFn::with_derivatives(
        move |m| norm_cdf(m / c),
        move |m| norm_pdf(m / c) / c,
        move |m| -(m / c) * norm_pdf(m / c) / (c * c),
        move |m| ((m / c).powi(2) - 1.0) * norm_pdf(m / c) / c.powi(3),
    )
}

/// `w*(μ) = μ/σ*²`, the coefficient of `nȳ` in the deformed Gaussian exponent.
pub fn natural_curve(sigma_star: f64) -> NaturalParamCurve {
    NaturalParamCurve::new(SmoothFn::linear(1.0 / (sigma_star * sigma_star), 0.0))
}

pub fn aed_generic(model: &StressStrengthModel) -> Result<AedReport> {
    let s = model.sigma_star;
    aed_balpha(&reliability_curve(s), &natural_curve(s), model.mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AedCrossCheck {
    pub mu: f64,
    pub sigma_star: f64,
    pub closed: f64,
    pub generic: f64,
    /// `|closed − generic| / max(|closed|, |generic|)`, zero when both vanish.
    pub relative_discrepancy: f64,
    pub same_sign: bool,
    /// Agreement to 1e−9, asserted only at `σ* = 1`.
    pub agrees_at_unit_scale: Option<bool>,
}

pub fn aed_cross_check(model: &StressStrengthModel) -> Result<AedCrossCheck> {
    let closed = aed_closed_form(model.mu, model.sigma_star);
    let generic = aed_generic(model)?.aed;
    let scale = closed.abs().max(generic.abs());
    Ok(AedCrossCheck {
        mu: model.mu,
        sigma_star: model.sigma_star,
        closed,
        generic,
        relative_discrepancy: if scale == 0.0 { 0.0 } else { (closed - generic).abs() / scale },
        same_sign: closed.signum() == generic.signum() || (closed == 0.0 && generic == 0.0),
        agrees_at_unit_scale: (model.sigma_star == 1.0).then(|| (closed - generic).abs() <= 1e-9),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReliabilityDecision {
    pub nu: Option<f64>,
    pub mu: f64,
    pub sigma_star: f64,
    pub reliability: f64,
    pub aed_closed: f64,
    pub aed_generic: f64,
    pub threshold: f64,
    pub preferred: Preferred,
    /// Whether the reliability lies in the band associated with the MDPDE region.
    pub in_reliability_band: bool,
}

pub fn decide(model: &StressStrengthModel) -> Result<ReliabilityDecision> {
    let threshold = model.threshold();
    let m = model.mu.abs();
    let preferred = if m < threshold {
        Preferred::Mdpde
    } else if m > threshold {
        Preferred::Umvue
    } else {
        Preferred::Tie
    };
    let r = model.reliability();
    Ok(ReliabilityDecision {
        nu: model.nu,
        mu: model.mu,
        sigma_star: model.sigma_star,
        reliability: r,
        aed_closed: aed_closed_form(model.mu, model.sigma_star),
        aed_generic: aed_generic(model)?.aed,
        threshold,
        preferred,
        in_reliability_band: r > RELIABILITY_BAND.0 && r < RELIABILITY_BAND.1,
    })
}

/// Rows of `divgen stress-curve`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub mu: f64,
    pub reliability: f64,
    pub aed_closed: f64,
    pub aed_generic: f64,
    pub preferred: Preferred,
}

pub const CURVE_HEADER: &str = "mu,reliability,aed_closed,aed_generic,preferred";

impl CurveRow {
    pub fn csv(&self) -> String {
        format!("{},{},{},{},{}", self.mu, self.reliability, self.aed_closed, self.aed_generic, self.preferred)
    }
}

pub fn stress_curve(nu: f64, mus: &[f64], exec: Exec) -> Result<Vec<CurveRow>> {
    let base = StressStrengthModel::new(nu, 0.0)?;
    par::try_map_indexed(exec, mus.len(), |i| {
        let d = decide(&base.with_mu(mus[i]))?;
        Ok(CurveRow {
            mu: d.mu,
            reliability: d.reliability,
            aed_closed: d.aed_closed,
            aed_generic: d.aed_generic,
            preferred: d.preferred,
        })
    })
}

/// `a, a+step, …` up to `b` inclusive (within rounding).
pub fn mu_range(a: f64, b: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Usage(format!("invalid range {a}:{b}:{step}")));
    }
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    if count > 10_000_000 {
        return Err(Error::Resource(format!("range {a}:{b}:{step} has {count} points")));
    }
    Ok((0..count).map(|i| a + i as f64 * step).collect())
}

/// Risk of `g(Ȳ)` for `τ̃(μ)` with `Ȳ ~ N(μ, σ*²/n)`, `n` possibly fractional.
fn risk_of_mean(model: &StressStrengthModel, n: f64, g: &dyn Fn(f64) -> f64) -> Result<f64> {
    let s = model.sigma_star / n.sqrt();
    let tau = model.reliability();
    let q = Quadrature { abs_tol: 1e-300, rel_tol: 1e-13, ..Quadrature::default() }.with_window(0.0, 8.0);
    Ok(q.integrate(|z| (g(model.mu + s * z) - tau).powi(2) * norm_pdf(z), f64::NEG_INFINITY, f64::INFINITY)?.value)
}

pub fn mdpde_risk(model: &StressStrengthModel, n: f64) -> Result<f64> {
    let c = SQRT_2 * model.sigma_star;
    risk_of_mean(model, n, &|t| norm_cdf(t / c))
}

pub fn umvue_risk(model: &StressStrengthModel, n: f64) -> Result<f64> {
    let k = umvue_factor(n) / model.sigma_star;
    risk_of_mean(model, n, &|t| norm_cdf(k * t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeficiencyReport {
    pub n: usize,
    /// Sample size at which the MDPDE matches the UMVUE risk at `n`.
    pub k_n: f64,
    pub deficiency: f64,
    pub aed_generic: f64,
    pub relative_error: f64,
}

/// `k_n − n` from quadrature risk curves, interpolating the MDPDE risk
/// linearly between consecutive integers.
pub fn deficiency_from_risk_curves(model: &StressStrengthModel, n: usize) -> Result<DeficiencyReport> {
    if n < 2 {
        return Err(Error::domain("n must be at least 2"));
    }
    let target = umvue_risk(model, n as f64)?;
    let risk = |k: usize| mdpde_risk(model, k as f64);
    let mut k = n;
    let mut rk = risk(k)?;
    // walk until R(k) ≥ target > R(k+1)
    let limit = n.max(1000);
    let mut steps = 0;
    loop {
        if rk < target {
            if k <= 1 {
                return Err(Error::numeric("MDPDE risk never reaches the UMVUE risk"));
            }
            k -= 1;
            rk = risk(k)?;
        } else {
            let next = risk(k + 1)?;
            if next < target {
                let k_n = k as f64 + (rk - target) / (rk - next);
                let aed = aed_generic(model)?.aed;
                let deficiency = k_n - n as f64;
                return Ok(DeficiencyReport {
                    n,
                    k_n,
                    deficiency,
                    aed_generic: aed,
                    relative_error: (deficiency - aed).abs() / aed.abs(),
                });
            }
            k += 1;
            rk = next;
        }
        steps += 1;
        if steps > limit {
            return Err(Error::numeric("risk curves do not cross near n"));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::StudentLocationFamily;
    use proptest::prelude::*;

    fn sigma_oracle(nu: f64) -> f64 {
        let alpha = 1.0 - 2.0 / (nu + 1.0);
        let ratio = (libm::lgamma((nu + 1.0) / 2.0) - libm::lgamma(nu / 2.0)).exp() / PI.sqrt();
        (2.0 * alpha / (1.0 - alpha) * nu.sqrt().powf(-(1.0 + alpha)) * ratio.powf(alpha - 1.0)).powf(-0.5)
    }

    #[test]
    fn sigma_star_values() {
        let s3 = sigma_star(3.0).unwrap();
        assert!((s3 - 0.9536).abs() < 5e-4);
        // 2·3^{−3/4}·(Γ(2)/(Γ(1.5)√π))^{−1/2}
        let direct: f64 = 2.0 * 3f64.powf(-0.75) * (1.0 / (0.5 * PI.sqrt() * PI.sqrt())).powf(-0.5);
        assert!((s3 - direct.powf(-0.5)).abs() < 1e-14);
        let s30 = sigma_star(30.0).unwrap();
        assert!(s30 > 0.95 && s30 < 1.0);
        // the minimum over integer ν sits at ν = 4, below 0.95; from there on σ* rises toward 1
        let s4 = sigma_star(4.0).unwrap();
        assert!(s4 < 0.95 && s4 < s3 && s4 > 0.949);
        let trend: Vec<f64> = (4..=30).map(|v| sigma_star(v as f64).unwrap()).collect();
        assert!(trend.windows(2).all(|w| w[1] > w[0]));
        assert!(sigma_star(5.0).unwrap() < s3);
        assert!((sigma_star(1e6).unwrap() - 1.0).abs() < 1e-5);
        assert!(sigma_star(2.0).is_err());
    }

    #[test]
    fn sigma_star_agrees_with_family_and_oracle() {
        for nu in 3..=30 {
            let nu = nu as f64;
            let s = sigma_star(nu).unwrap();
            assert!((s - StudentLocationFamily::new(nu).unwrap().sigma_star()).abs() < 1e-13);
            assert!((s - sigma_oracle(nu)).abs() < 1e-12);
        }
    }

    #[test]
    fn reliability_values() {
        assert_eq!(reliability(0.0, 0.9), 0.5);
        let s = 0.93;
        assert!((reliability(SQRT_2 * s, s) - 0.841_344_746_068_542_9).abs() < 1e-15);
        let mut prev = 0.5;
        for k in 1..40 {
            let r = reliability(k as f64 * 0.25, s);
            assert!(r >= prev && r <= 1.0);
            prev = r;
        }
    }

    #[test]
    fn estimator_values() {
        let m = StressStrengthModel::new(3.0, 1.0).unwrap();
        assert_eq!(estimators(&m, 0.0, 5).unwrap(), (0.5, 0.5));
        let (a, b) = estimators(&m, 0.8, 1_000_000).unwrap();
        assert!((a - b).abs() < 1e-6);
        assert!((umvue_factor(1e12) - 1.0 / SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn umvue_is_unbiased() {
        for mu in [0.0, 1.0, 2.0] {
            for n in [5usize, 20, 100] {
                let m = StressStrengthModel::new(3.0, mu).unwrap();
                let g = crate::deformed::GaussianDeformed { mu, sigma_star: m.sigma_star, n };
                let e = g.expectation_of_mean(&|t| estimators(&m, t, n).unwrap().1, mu).unwrap();
                assert!((e - m.reliability()).abs() < 1e-8, "μ={mu} n={n}: {e}");
            }
        }
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(aed_closed_form(0.0, 1.0), -0.5);
        assert!((aed_closed_form(2.0, 1.0) - 0.75).abs() < 1e-15);
        let s = 0.97;
        let t = StressStrengthModel::synthetic(0.0, s).unwrap().threshold();
        assert!(aed_closed_form(t, s).abs() < 1e-15);
    }

    #[test]
    fn cross_check_paths() {
        for mu in [0.0, 0.5, 1.0, 2.0] {
            let c = aed_cross_check(&StressStrengthModel::synthetic(mu, 1.0).unwrap()).unwrap();
            assert_eq!(c.agrees_at_unit_scale, Some(true), "{c:?}");
        }
        let c = aed_cross_check(&StressStrengthModel::new(3.0, 1.0).unwrap()).unwrap();
        assert!(c.agrees_at_unit_scale.is_none());
        assert!(c.relative_discrepancy > 0.0);
        let s = c.sigma_star;
        assert!((c.generic - (5.0 - 8.0 * s * s) / (16.0 * s * s)).abs() < 1e-12);
        let z = aed_cross_check(&StressStrengthModel::new(3.0, 0.0).unwrap()).unwrap();
        assert!(z.closed < 0.0 && z.generic < 0.0);
    }

    #[test]
    fn decisions() {
        let d = decide(&StressStrengthModel::new(3.0, 0.0).unwrap()).unwrap();
        assert_eq!(d.preferred, Preferred::Mdpde);
        assert_eq!(d.reliability, 0.5);
        let d = decide(&StressStrengthModel::new(3.0, 3.0).unwrap()).unwrap();
        assert_eq!(d.preferred, Preferred::Umvue);
        assert!(d.reliability > 0.81);
        let m = StressStrengthModel::new(3.0, 0.0).unwrap();
        let d = decide(&m.with_mu(m.threshold())).unwrap();
        assert_eq!(d.preferred, Preferred::Tie);
    }

    #[test]
    fn band_and_sign_consistency_on_grid() {
        let mus = mu_range(-3.0, 3.0, 0.1).unwrap();
        for nu in 3..=30 {
            for row in stress_curve(nu as f64, &mus, Exec::default()).unwrap() {
                if row.preferred == Preferred::Mdpde {
                    assert!(row.reliability > 0.19 - 0.005 && row.reliability < 0.81 + 0.005, "ν={nu} {row:?}");
                }
                assert_eq!(row.aed_closed.signum(), row.aed_generic.signum(), "ν={nu} {row:?}");
            }
        }
    }

    #[test]
    fn curve_is_identical_in_both_modes() {
        let mus = mu_range(-2.0, 2.0, 0.05).unwrap();
        assert_eq!(mus.len(), 81);
        let a = stress_curve(5.0, &mus, Exec::Sequential).unwrap();
        let b = stress_curve(5.0, &mus, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].csv().split(',').count(), CURVE_HEADER.split(',').count());
    }

    #[test]
    fn range_errors() {
        assert!(mu_range(1.0, 0.0, 0.1).unwrap_err().is_usage());
        assert!(mu_range(0.0, 1.0, 0.0).unwrap_err().is_usage());
        assert_eq!(mu_range(0.0, 0.0, 1.0).unwrap(), vec![0.0]);
    }

    #[test]
    fn deficiency_matches_aed() {
        for mu in [0.0, 2.0] {
            let r = deficiency_from_risk_curves(&StressStrengthModel::new(3.0, mu).unwrap(), 10_000).unwrap();
            assert!(r.relative_error < 0.05, "{r:?}");
        }
    }

    proptest! {
        #[test]
        fn preferred_matches_threshold(nu in 3.0f64..30.0, mu in -3.0f64..3.0) {
            let m = StressStrengthModel::new(nu, mu).unwrap();
            let d = decide(&m).unwrap();
            prop_assert_eq!(d.preferred == Preferred::Mdpde, mu.abs() < d.threshold);
            prop_assert_eq!(d.aed_closed < 0.0, d.preferred == Preferred::Mdpde);
            prop_assert!(m.sigma_star > 0.9 && m.sigma_star < 1.05);
        }
    }
}
