//! Central moments of the sufficient statistic under the deformed measure,
//! the asymptotic expected deficiency (AED) of the plug-in MDPDE relative to
//! the generalized UMVUE, and the empirical fit of risk expansions.

use serde::Serialize;

use crate::deriv::SmoothFn;
use crate::error::{Error, Result};

/// `w*(λ)` with derivatives to order 3, plus an optional `log N(λ)`.
#[derive(Clone, Debug)]
pub struct NaturalParamCurve {
    pub w_star: SmoothFn,
    pub log_normalizer: Option<SmoothFn>,
}

impl NaturalParamCurve {
    pub fn new(w_star: SmoothFn) -> Self {
        NaturalParamCurve { w_star, log_normalizer: None }
    }

    pub fn with_log_normalizer(mut self, log_n: SmoothFn) -> Self {
        self.log_normalizer = Some(log_n);
        self
    }

    fn slope(&self, lambda: f64) -> Result<f64> {
        let w1 = self.w_star.derivative(1, lambda);
        if !(w1 > 0.0) {
            return Err(Error::Precondition(format!("regularity violated: dw*/dλ = {w1} at λ = {lambda}")));
        }
        Ok(w1)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub min_slope: f64,
    /// `max |d/dλ log N(λ) + nλ dw*/dλ|` when the normalizer is known.
    pub coupling_residual: Option<f64>,
    pub passed: bool,
}

/// Checks `dw*/dλ > 0` and, when `log N` is supplied, the normalizer coupling on a grid.
pub fn regularity_check(curve: &NaturalParamCurve, grid: &[f64], n: usize, tol: f64) -> RegularityReport {
    let min_slope = grid.iter().map(|&l| curve.w_star.derivative(1, l)).fold(f64::INFINITY, f64::min);
    let coupling_residual = curve.log_normalizer.as_ref().map(|ln| {
        grid.iter()
            .map(|&l| (ln.derivative(1, l) + n as f64 * l * curve.w_star.derivative(1, l)).abs())
            .fold(0.0, f64::max)
    });
    RegularityReport {
        min_slope,
        coupling_residual,
        passed: min_slope > 0.0 && coupling_residual.is_none_or(|r| r <= tol),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CentralMoments {
    pub lambda: f64,
    pub n: usize,
    /// `ũ₀ … ũ₄`.
    pub u: [f64; 5],
}

pub fn central_moments(curve: &NaturalParamCurve, lambda: f64, n: usize) -> Result<CentralMoments> {
    if n == 0 {
        return Err(Error::domain("n must be positive"));
    }
    let w1 = curve.slope(lambda)?;
    let w2 = curve.w_star.derivative(2, lambda);
    let w3 = curve.w_star.derivative(3, lambda);
    let nf = n as f64;
    let nw = nf * w1;
    let u2 = 1.0 / nw;
    let u3 = -w2 / (nf * nf * w1.powi(3));
    let u4 = 3.0 / (nw * nw) + (3.0 * (w2 / w1).powi(2) - w3 / w1) / nw.powi(3);
    Ok(CentralMoments { lambda, n, u: [1.0, 0.0, u2, u3, u4] })
}

/// Right-hand side of the moment recursion `−i ũ_{i−1} + n w*′ ũ_{i+1}` for `i ∈ 1..=3`.
pub fn recursion_rhs(curve: &NaturalParamCurve, lambda: f64, n: usize, i: usize) -> Result<f64> {
    if !(1..=3).contains(&i) {
        return Err(Error::domain("recursion index must be 1, 2 or 3"));
    }
    let m = central_moments(curve, lambda, n)?;
    let w1 = curve.slope(lambda)?;
    Ok(-(i as f64) * m.u[i - 1] + n as f64 * w1 * m.u[i + 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Preferred {
    Mdpde,
    Umvue,
    Tie,
}

impl Preferred {
    /// MDPDE when its deficiency is negative.
    pub fn from_aed(aed: f64) -> Self {
        if aed < 0.0 {
            Preferred::Mdpde
        } else if aed > 0.0 {
            Preferred::Umvue
        } else {
            Preferred::Tie
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Preferred::Mdpde => "MDPDE",
            Preferred::Umvue => "UMVUE",
            Preferred::Tie => "TIE",
        }
    }
}

impl std::fmt::Display for Preferred {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AedReport {
    pub lambda: f64,
    pub aed: f64,
    /// Leading risk coefficient shared by both estimators.
    pub a: f64,
    /// Second-order coefficient of the plug-in risk.
    pub b: f64,
    /// Second-order coefficient of the UMVUE risk.
    pub d: f64,
    pub preferred: Preferred,
}

/// AED of the plug-in `τ̃(T)` relative to the UMVUE of `τ̃(λ)`.
pub fn aed_balpha(tau: &SmoothFn, curve: &NaturalParamCurve, lambda: f64) -> Result<AedReport> {
    let t1 = tau.derivative(1, lambda);
    if t1 == 0.0 || !t1.is_finite() {
        return Err(Error::domain(format!("dτ/dλ = {t1} at λ = {lambda}; the deficiency is undefined")));
    }
    let t2 = tau.derivative(2, lambda);
    let t3 = tau.derivative(3, lambda);
    let w1 = curve.slope(lambda)?;
    let w2 = curve.w_star.derivative(2, lambda);
    let aed = (t3 / t1 + 0.25 * (t2 / t1).powi(2)) / w1 - w2 / (w1 * w1) * (t2 / t1);
    let a = t1 * t1 / w1;
    let d = 0.5 * t2 * t2 / (w1 * w1);
    let b = (t1 * t3 - t1 * t2 * w2 / w1 + 0.75 * t2 * t2) / (w1 * w1);
    Ok(AedReport { lambda, aed, a, b, d, preferred: Preferred::from_aed(aed) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskExpansion {
    pub a: f64,
    /// Coefficient of `n⁻²`.
    pub b: f64,
    /// Decay order of the risk, from the log-log slope.
    pub r: f64,
    /// Decay order of `n·risk − a`, when the second-order term is visible.
    pub s: Option<f64>,
    /// Root-mean-square relative residual of the fit.
    pub residual: f64,
    pub warning: Option<String>,
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Least-squares fit of `risk ≈ a/n + b/n²`, done as a line `n·risk = a + b/n`.
pub fn risk_expansion_fit(points: &[(f64, f64)]) -> Result<RiskExpansion> {
    let mut ns: Vec<f64> = points.iter().map(|p| p.0).collect();
    ns.sort_by(f64::total_cmp);
    ns.dedup();
    if ns.len() < 4 {
        return Err(Error::domain("the fit needs at least four distinct n"));
    }
    if let Some(p) = points.iter().find(|p| p.0 < 20.0 || !(p.1 > 0.0)) {
        return Err(Error::domain(format!("need n ≥ 20 and positive risk, got ({}, {})", p.0, p.1)));
    }
    let xs: Vec<f64> = points.iter().map(|p| 1.0 / p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.0 * p.1).collect();
    let b = slope(&xs, &ys);
    let m = xs.len() as f64;
    let a = ys.iter().sum::<f64>() / m - b * xs.iter().sum::<f64>() / m;

    let residual = (points.iter().map(|&(n, r)| ((a / n + b / (n * n) - r) / r).powi(2)).sum::<f64>() / m).sqrt();
    let logn: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let r = -slope(&logn, &points.iter().map(|p| p.1.ln()).collect::<Vec<_>>());
    let excess: Vec<f64> = ys.iter().map(|y| (y - a).abs()).collect();
    let s = (excess.iter().all(|e| *e > 1e-12 * a.abs()))
        .then(|| -slope(&logn, &excess.iter().map(|e| e.ln()).collect::<Vec<_>>()));
    let warning = (ns[ns.len() - 1] / ns[0] < 4.0)
        .then(|| format!("n spans only {}..{}; the 1/n² coefficient is poorly determined", ns[0], ns[ns.len() - 1]));
    Ok(RiskExpansion { a, b, r, s, residual, warning })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deriv::richardson;
    use crate::quad::Quadrature;
    use crate::special::{norm_cdf, norm_pdf};
    use proptest::prelude::*;

    fn gaussian_curve(sigma: f64) -> NaturalParamCurve {
        NaturalParamCurve::new(SmoothFn::linear(1.0 / (sigma * sigma), 0.0))
    }

    fn cubic_curve() -> NaturalParamCurve {
        NaturalParamCurve::new(SmoothFn::with_derivatives(
            |l| l + 0.3 * l.powi(3),
            |l| 1.0 + 0.9 * l * l,
            |l| 1.8 * l,
            |_| 1.8,
        ))
    }

    fn exp_curve() -> NaturalParamCurve {
        // only the value is supplied: derivatives come from Richardson extrapolation
        NaturalParamCurve::new(SmoothFn::new(|l: f64| l.exp() + 0.5 * l))
    }

    /// Central moments of Ȳ ~ N(μ, σ²/n) by quadrature.
    fn brute_gaussian(mu: f64, sigma: f64, n: usize) -> [f64; 5] {
        let s = sigma / (n as f64).sqrt();
        let mut out = [0.0; 5];
        for (k, o) in out.iter_mut().enumerate() {
            let q = Quadrature { abs_tol: 1e-13 * s.powi(k as i32), rel_tol: 1e-13, ..Quadrature::default() }
                .with_window(mu, 8.0 * s);
            *o = q
                .integrate(|y| (y - mu).powi(k as i32) * norm_pdf((y - mu) / s) / s, f64::NEG_INFINITY, f64::INFINITY)
                .unwrap()
                .value;
        }
        out
    }

    #[test]
    fn gaussian_moments() {
        let sigma = 0.9536;
        for n in [1, 5, 40] {
            let m = central_moments(&gaussian_curve(sigma), 0.7, n).unwrap();
            let b = brute_gaussian(0.7, sigma, n);
            assert!((m.u[2] - b[2]).abs() / b[2] < 1e-10);
            assert!(m.u[3] == 0.0 && b[3].abs() < 1e-12 * b[2].powf(1.5));
            assert!((m.u[4] - b[4]).abs() / b[4] < 1e-10);
            assert!((m.u[2] - sigma * sigma / n as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn regularity_violation() {
        let c = NaturalParamCurve::new(SmoothFn::linear(-1.0, 0.0));
        assert!(matches!(central_moments(&c, 0.0, 3), Err(Error::Precondition(_))));
        assert!(!regularity_check(&c, &[0.0, 1.0], 3, 1e-8).passed);
        assert!(regularity_check(&cubic_curve(), &[-1.0, 0.0, 1.0], 3, 1e-8).passed);
    }

    #[test]
    fn normalizer_coupling() {
        // N(λ) = exp(−λ²/(2σ²)) per observation pairs with w*(λ) = λ/σ²
        let s2: f64 = 0.8;
        let n = 4;
        let curve = gaussian_curve(s2.sqrt())
            .with_log_normalizer(SmoothFn::new(move |l: f64| -(n as f64) * l * l / (2.0 * s2)));
        let r = regularity_check(&curve, &[-1.0, 0.5, 2.0], n, 1e-6);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn linear_curve_has_no_skew() {
        for l in [-2.0, 0.0, 3.0] {
            assert_eq!(central_moments(&gaussian_curve(1.3), l, 7).unwrap().u[3], 0.0);
        }
    }

    fn check_recursion(curve: &NaturalParamCurve, n: usize) {
        for &l in &[-0.8, 0.1, 0.9] {
            for i in 1..=3 {
                let ui = |x: f64| central_moments(curve, x, n).unwrap().u[i];
                let fd = richardson(&ui, l, 1);
                let rhs = recursion_rhs(curve, l, n, i).unwrap();
                let scale = central_moments(curve, l, n).unwrap().u[2];
                let err = (fd - rhs).abs() / rhs.abs().max(scale);
                assert!(err < 1e-5, "i={i} λ={l}: {fd} vs {rhs}");
            }
        }
    }

    #[test]
    fn recursion_on_nonlinear_curves() {
        check_recursion(&cubic_curve(), 5);
        check_recursion(&exp_curve(), 3);
    }

    #[test]
    fn odd_moments_decay() {
        let c = cubic_curve();
        let vals: Vec<f64> = [10, 100, 1000, 10000]
            .iter()
            .map(|&n| {
                let m = central_moments(&c, 0.6, n).unwrap();
                (m.u[3] * (n * n) as f64).abs().max((m.u[4] * (n * n) as f64).abs())
            })
            .collect();
        assert!(vals.windows(2).all(|w| w[1] <= w[0] * 1.0001));
    }

    #[test]
    fn aed_examples() {
        let lin =
            aed_balpha(&SmoothFn::linear(2.0, 1.0), &NaturalParamCurve::new(SmoothFn::linear(1.0, 0.0)), 0.4).unwrap();
        assert_eq!(lin.aed, 0.0);
        assert_eq!(lin.preferred, Preferred::Tie);
        let sq = SmoothFn::with_derivatives(|l| l * l, |l| 2.0 * l, |_| 2.0, |_| 0.0);
        let r = aed_balpha(&sq, &NaturalParamCurve::new(SmoothFn::linear(1.0, 0.0)), 1.0).unwrap();
        assert!((r.aed - 0.25).abs() < 1e-15);
        assert_eq!(r.preferred, Preferred::Umvue);
        assert!(((r.b - r.d) / r.a - r.aed).abs() < 1e-15);
        let err = aed_balpha(&sq, &NaturalParamCurve::new(SmoothFn::linear(1.0, 0.0)), 0.0).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn stress_instance_at_unit_scale() {
        let c = std::f64::consts::SQRT_2;
        let tau = SmoothFn::with_derivatives(
            move |m| norm_cdf(m / c),
            move |m| norm_pdf(m / c) / c,
            move |m| -(m / c) * norm_pdf(m / c) / (c * c),
            move |m| ((m / c).powi(2) - 1.0) * norm_pdf(m / c) / (c * c * c),
        );
        for mu in [0.0, 0.5, 1.0, 2.0] {
            let r = aed_balpha(&tau, &gaussian_curve(1.0), mu).unwrap();
            assert!((r.aed - (5.0 * mu * mu - 8.0) / 16.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_recovers_synthetic_coefficients() {
        let pts: Vec<(f64, f64)> = [20.0, 40.0, 80.0, 160.0].iter().map(|&n| (n, 0.7 / n)).collect();
        let f = risk_expansion_fit(&pts).unwrap();
        assert!((f.a - 0.7).abs() < 1e-12 && f.b.abs() < 1e-9 && f.residual < 1e-12);
        assert!((f.r - 1.0).abs() < 1e-9 && f.s.is_none());
        let pts: Vec<(f64, f64)> = [20.0, 40.0, 80.0, 160.0].iter().map(|&n| (n, 0.7 / n + 3.0 / (n * n))).collect();
        let f = risk_expansion_fit(&pts).unwrap();
        assert!((f.b - 3.0).abs() < 1e-9 && (f.s.unwrap() - 1.0).abs() < 1e-9);
        assert!(f.warning.is_none());
    }

    #[test]
    fn fit_preconditions() {
        assert!(risk_expansion_fit(&[(20.0, 1.0), (30.0, 1.0), (40.0, 1.0)]).is_err());
        assert!(risk_expansion_fit(&[(10.0, 1.0), (30.0, 1.0), (40.0, 1.0), (50.0, 1.0)]).is_err());
        let narrow: Vec<(f64, f64)> = [20.0, 22.0, 24.0, 26.0].iter().map(|&n| (n, 1.0 / n)).collect();
        assert!(risk_expansion_fit(&narrow).unwrap().warning.is_some());
    }

    proptest! {
        #[test]
        fn sign_of_aed_drives_the_verdict(x in -10.0f64..10.0) {
            let p = Preferred::from_aed(x);
            prop_assert_eq!(p == Preferred::Mdpde, x < 0.0);
            prop_assert_eq!(p == Preferred::Umvue, x > 0.0);
            if x != 0.0 {
                prop_assert_ne!(Preferred::from_aed(-x), p);
            }
        }

        #[test]
        fn moments_are_positive(l in -2.0f64..2.0, n in 1usize..500) {
            let m = central_moments(&cubic_curve(), l, n).unwrap();
            prop_assert!(m.u[2] > 0.0 && m.u[4] > 0.0);
            prop_assert_eq!(m.u[0], 1.0);
            prop_assert_eq!(m.u[1], 0.0);
        }
    }
}
