//! Numerical derivatives: Richardson-extrapolated central differences up to
//! third order, and the fourth-order central difference used for scores.

use std::sync::Arc;

/// Step multipliers for the coarsest Richardson level, by derivative order:
/// `h0 = BASE_STEP[order - 1] * (1 + |x|)`. Higher orders divide by a higher
/// power of `h`, so they start wider to keep rounding error down.
pub const BASE_STEP: [f64; 3] = [1e-2, 2e-2, 5e-2];

fn central(f: &dyn Fn(f64) -> f64, x: f64, h: f64, order: usize) -> f64 {
    match order {
        1 => (f(x + h) - f(x - h)) / (2.0 * h),
        2 => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
        3 => (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h * h * h),
        _ => unreachable!("orders 1..=3 only"),
    }
}

/// Derivative of order 1, 2 or 3 by three-level Richardson extrapolation of
/// central differences with steps `h0, h0/2, h0/4`.
///
/// Panics if `order` is not 1, 2 or 3.
pub fn richardson(f: &dyn Fn(f64) -> f64, x: f64, order: usize) -> f64 {
    assert!((1..=3).contains(&order), "derivative order must be 1, 2 or 3");
    richardson_with_step(f, x, order, BASE_STEP[order - 1] * (1.0 + x.abs()))
}

pub fn richardson_with_step(f: &dyn Fn(f64) -> f64, x: f64, order: usize, h0: f64) -> f64 {
    assert!((1..=3).contains(&order), "derivative order must be 1, 2 or 3");
    let d0 = central(f, x, h0, order);
    let d1 = central(f, x, h0 / 2.0, order);
    let d2 = central(f, x, h0 / 4.0, order);
    // central stencils have even error expansions: eliminate h^2, then h^4
    let r0 = (4.0 * d1 - d0) / 3.0;
    let r1 = (4.0 * d2 - d1) / 3.0;
    (16.0 * r1 - r0) / 15.0
}

/// Fourth-order central difference for a first derivative.
pub fn central4(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// Default step for [`central4`] score evaluation.
pub fn score_step(x: f64) -> f64 {
    1e-5 * (1.0 + x.abs())
}

pub type Callback = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A smooth scalar function of one variable with derivatives up to order 3.
/// Analytic derivative callbacks take precedence over finite differences.
#[derive(Clone)]
pub struct SmoothFn {
    value: Callback,
    derivs: [Option<Callback>; 3],
}

impl std::fmt::Debug for SmoothFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothFn")
            .field("analytic", &self.derivs.iter().map(Option::is_some).collect::<Vec<_>>())
            .finish()
    }
}

impl SmoothFn {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        SmoothFn { value: Arc::new(f), derivs: [None, None, None] }
    }

    pub fn with_derivatives(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d3: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        SmoothFn { value: Arc::new(f), derivs: [Some(Arc::new(d1)), Some(Arc::new(d2)), Some(Arc::new(d3))] }
    }

    /// `a * x + b`, with exact derivatives.
    pub fn linear(a: f64, b: f64) -> Self {
        Self::with_derivatives(move |x| a * x + b, move |_| a, |_| 0.0, |_| 0.0)
    }

    /// `k · self`, keeping analytic derivatives analytic.
    pub fn scaled(&self, k: f64) -> Self {
        let v = Arc::clone(&self.value);
        SmoothFn {
            value: Arc::new(move |x| k * v(x)),
            derivs: self.derivs.clone().map(|d| d.map(|d| -> Callback { Arc::new(move |x| k * d(x)) })),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    pub fn has_analytic(&self, order: usize) -> bool {
        order == 0 || self.derivs.get(order - 1).is_some_and(Option::is_some)
    }

    /// Derivative of order 0..=3.
    pub fn derivative(&self, order: usize, x: f64) -> f64 {
        match order {
            0 => self.eval(x),
            1..=3 => match &self.derivs[order - 1] {
                Some(d) => d(x),
                None => richardson(&*self.value, x, order),
            },
            _ => panic!("derivative order must be at most 3"),
        }
    }
}
