//! Adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Infinite ranges are split into a central window `[center - scale, center + scale]`
//! (clipped to the range) and two tails. Each tail is mapped onto `(0, 1]` by
//! `y = edge ± scale / u`, so a heavy-tailed but integrable density stays a
//! bounded integrand. A tail that refuses to converge is reported as a
//! divergent integral instead of being truncated silently.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Quadrature settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
    /// Centre of the central window used for infinite ranges.
    pub center: f64,
    /// Half-width of the central window.
    pub scale: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { abs_tol: 1e-10, rel_tol: 1e-12, max_intervals: 4000, center: 0.0, scale: 4.0 }
    }
}

/// Result of a successful integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut fv = [0.0; 15];
    fv[7] = fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        fv[j] = f(center - dx);
        fv[14 - j] = f(center + dx);
    }
    if fv.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric {
            message: format!("integrand is not finite on [{a}, {b}]"),
            estimate: f64::NAN,
            error: f64::INFINITY,
            evaluations: 15,
        });
    }
    let mut resk = WGK[7] * fc;
    let mut resg = WG[3] * fc;
    let mut resabs = resk.abs();
    for j in 0..7 {
        let pair = fv[j] + fv[14 - j];
        resk += WGK[j] * pair;
        resabs += WGK[j] * (fv[j].abs() + fv[14 - j].abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * pair;
        }
    }
    let mean = resk * 0.5;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }
    let value = resk * half;
    resabs *= half.abs();
    resasc *= half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Ok((value, err))
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, q: &Quadrature) -> Result<Integral> {
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let (v0, e0) = kronrod(f, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v0, error: e0 });
    let mut total = v0;
    let mut total_err = e0;
    let mut evals = 15;
    loop {
        let tol = q.abs_tol.max(q.rel_tol * total.abs());
        if total_err <= tol {
            return Ok(Integral { value: total, error: total_err, evaluations: evals });
        }
        if heap.len() >= q.max_intervals {
            return Err(Error::Numeric {
                message: format!(
                    "adaptive quadrature on [{a}, {b}] did not converge within {} subintervals",
                    q.max_intervals
                ),
                estimate: total,
                error: total_err,
                evaluations: evals,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Numeric {
                message: "subinterval width reached machine precision".into(),
                estimate: total,
                error: total_err,
                evaluations: evals,
            });
        }
        let (v1, e1) = kronrod(f, worst.a, mid)?;
        let (v2, e2) = kronrod(f, mid, worst.b)?;
        evals += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
        // rebuild the running error now and then to shed accumulated rounding
        if evals % 3000 == 15 {
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
}

impl Quadrature {
    pub fn with_window(mut self, center: f64, scale: f64) -> Self {
        self.center = center;
        self.scale = scale;
        self
    }

    /// Integrates `f` over `[lo, hi]`; either end may be infinite.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, lo: f64, hi: f64) -> Result<Integral> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::domain(format!("invalid integration range [{lo}, {hi}]")));
        }
        if lo.is_finite() && hi.is_finite() {
            return adaptive(&f, lo, hi, self);
        }
        let scale = self.scale.max(f64::MIN_POSITIVE);
        let win_lo = if lo.is_finite() { lo } else { (self.center - scale).min(hi) };
        let win_hi = if hi.is_finite() { hi } else { (self.center + scale).max(lo) };
        // the three pieces share the tolerance budget
        let piece = Quadrature { abs_tol: self.abs_tol / 3.0, ..*self };
        let mut out = adaptive(&f, win_lo.max(lo), win_hi.min(hi), &piece)?;
        let tails = [(hi.is_infinite(), win_hi, 1.0), (lo.is_infinite(), win_lo, -1.0)];
        for (open, edge, dir) in tails {
            if !open {
                continue;
            }
            let g = |u: f64| {
                let y = edge + dir * scale * (1.0 / u - 1.0);
                let v = f(y);
                if v == 0.0 {
                    0.0
                } else {
                    v * scale / (u * u)
                }
            };
            let tail = adaptive(&g, 0.0, 1.0, &piece).map_err(|e| match e {
                Error::Numeric { estimate, error, evaluations, .. } => Error::Numeric {
                    message: format!("tail integral beyond {edge} does not converge; the integral is likely divergent"),
                    estimate,
                    error,
                    evaluations,
                },
                other => other,
            })?;
            out.value += tail.value;
            out.error += tail.error;
            out.evaluations += tail.evaluations;
        }
        Ok(out)
    }
}

/// Convenience wrapper using default settings.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Result<Integral> {
    Quadrature::default().integrate(f, lo, hi)
}
