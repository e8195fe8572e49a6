//! Exact polynomials and rational functions in one variable over ℚ.
//!
//! Finite deformed distributions whose weights are rational in λ are carried
//! in this form so that identities such as `Ẽ_λ[h(T)] ≡ 0` can be decided by
//! comparing coefficients instead of sampling λ.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Exact binary value of a finite float.
pub fn q_from_f64(x: f64) -> Option<Q> {
    Q::from_float(x)
}

pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Polynomial with ascending coefficients; never has trailing zeros.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Poly {
    coeffs: Vec<Q>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Q>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: Q) -> Self {
        Poly::new(vec![c])
    }

    /// The variable λ.
    pub fn x() -> Self {
        Poly::new(vec![Q::zero(), Q::one()])
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    /// Coefficient of `λ^k` (zero past the degree).
    pub fn coeff(&self, k: usize) -> Q {
        self.coeffs.get(k).cloned().unwrap_or_else(Q::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&Q> {
        self.coeffs.last()
    }

    pub fn scale(&self, c: &Q) -> Poly {
        Poly::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn eval(&self, x: &Q) -> Q {
        self.coeffs.iter().rev().fold(Q::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + q_to_f64(c))
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(self.coeffs.iter().enumerate().skip(1).map(|(k, c)| c * q(k as i64)).collect())
    }

    pub fn pow(&self, e: u32) -> Poly {
        (0..e).fold(Poly::constant(Q::one()), |acc, _| &acc * self)
    }

    /// Euclidean division: `self = quot * d + rem`.
    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        let dd = d.degree().expect("division by the zero polynomial");
        let lead = d.leading().unwrap().clone();
        let mut rem = self.coeffs.clone();
        let n = rem.len();
        if n <= dd {
            return (Poly::zero(), self.clone());
        }
        let mut quot = vec![Q::zero(); n - dd];
        for k in (0..n - dd).rev() {
            let c = &rem[k + dd] / &lead;
            if !c.is_zero() {
                for (j, dc) in d.coeffs.iter().enumerate() {
                    rem[k + j] -= &c * dc;
                }
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        (Poly::new(quot), Poly::new(rem))
    }

    pub fn monic(&self) -> Poly {
        match self.leading() {
            Some(l) => self.scale(&(Q::one() / l)),
            None => Poly::zero(),
        }
    }

    /// Monic greatest common divisor.
    pub fn gcd(a: &Poly, b: &Poly) -> Poly {
        let (mut x, mut y) = (a.clone(), b.clone());
        while !y.is_zero() {
            let (_, r) = x.div_rem(&y);
            x = y;
            y = r;
        }
        x.monic()
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Q::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

fn fmt_q(c: &Q) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            let show_coeff = k == 0 || !mag.is_one();
            if show_coeff {
                write!(f, "{}", fmt_q(&mag))?;
            }
            match k {
                0 => {}
                1 => write!(f, "{}λ", if show_coeff { "*" } else { "" })?,
                _ => write!(f, "{}λ^{k}", if show_coeff { "*" } else { "" })?,
            }
        }
        Ok(())
    }
}

/// Quotient of two polynomials; the denominator is never the zero polynomial.
#[derive(Clone, Debug)]
pub struct RatFunc {
    num: Poly,
    den: Poly,
}

impl RatFunc {
    pub fn new(num: Poly, den: Poly) -> Self {
        assert!(!den.is_zero(), "rational function with zero denominator");
        RatFunc { num, den }
    }

    pub fn from_poly(p: Poly) -> Self {
        RatFunc { num: p, den: Poly::constant(Q::one()) }
    }

    pub fn constant(c: Q) -> Self {
        Self::from_poly(Poly::constant(c))
    }

    pub fn zero() -> Self {
        Self::from_poly(Poly::zero())
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    pub fn x() -> Self {
        Self::from_poly(Poly::x())
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// True when the function does not depend on λ: `num' den - num den' ≡ 0`.
    pub fn is_constant(&self) -> bool {
        (&(&self.num.derivative() * &self.den) - &(&self.num * &self.den.derivative())).is_zero()
    }

    /// Value of a constant function; `None` when it depends on λ.
    pub fn constant_value(&self) -> Option<Q> {
        if !self.is_constant() {
            return None;
        }
        // evaluate at a point where the denominator is nonzero
        (0..=self.den.coeffs.len() as i64)
            .map(q)
            .find(|x| !self.den.eval(x).is_zero())
            .map(|x| self.num.eval(&x) / self.den.eval(&x))
    }

    pub fn eval(&self, x: &Q) -> Option<Q> {
        let d = self.den.eval(x);
        (!d.is_zero()).then(|| self.num.eval(x) / d)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.num.eval_f64(x) / self.den.eval_f64(x)
    }

    /// Cancels the common factor and makes the denominator monic.
    pub fn reduced(&self) -> RatFunc {
        if self.num.is_zero() {
            return RatFunc::zero();
        }
        let g = Poly::gcd(&self.num, &self.den);
        let (n, _) = self.num.div_rem(&g);
        let (d, _) = self.den.div_rem(&g);
        let lead = d.leading().unwrap().clone();
        RatFunc { num: n.scale(&(Q::one() / &lead)), den: d.monic() }
    }

    pub fn recip(&self) -> Option<RatFunc> {
        (!self.num.is_zero()).then(|| RatFunc::new(self.den.clone(), self.num.clone()))
    }

    pub fn scale(&self, c: &Q) -> RatFunc {
        RatFunc { num: self.num.scale(c), den: self.den.clone() }
    }

    pub fn pow(&self, e: u32) -> RatFunc {
        RatFunc { num: self.num.pow(e), den: self.den.pow(e) }
    }

    pub fn div(&self, rhs: &RatFunc) -> Option<RatFunc> {
        rhs.recip().map(|r| self * &r)
    }

    /// Exact identity check by cross-multiplication.
    pub fn same_as(&self, other: &RatFunc) -> bool {
        (&self.num * &other.den) == (&other.num * &self.den)
    }

    fn combine(&self, rhs: &RatFunc, sign: bool) -> RatFunc {
        if self.den == rhs.den {
            let num = if sign { &self.num + &rhs.num } else { &self.num - &rhs.num };
            return RatFunc { num, den: self.den.clone() };
        }
        let g = Poly::gcd(&self.den, &rhs.den);
        let (a, _) = rhs.den.div_rem(&g);
        let (b, _) = self.den.div_rem(&g);
        let left = &self.num * &a;
        let right = &rhs.num * &b;
        let num = if sign { &left + &right } else { &left - &right };
        RatFunc { num, den: &self.den * &a }
    }
}

impl PartialEq for RatFunc {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl Add for &RatFunc {
    type Output = RatFunc;
    fn add(self, rhs: &RatFunc) -> RatFunc {
        self.combine(rhs, true)
    }
}

impl Sub for &RatFunc {
    type Output = RatFunc;
    fn sub(self, rhs: &RatFunc) -> RatFunc {
        self.combine(rhs, false)
    }
}

impl Mul for &RatFunc {
    type Output = RatFunc;
    fn mul(self, rhs: &RatFunc) -> RatFunc {
        RatFunc { num: &self.num * &rhs.num, den: &self.den * &rhs.den }
    }
}

impl Neg for &RatFunc {
    type Output = RatFunc;
    fn neg(self) -> RatFunc {
        RatFunc { num: -&self.num, den: self.den.clone() }
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.reduced();
        if r.den.degree() == Some(0) && r.den.coeff(0).is_one() {
            write!(f, "{}", r.num)
        } else {
            write!(f, "({}) / ({})", r.num, r.den)
        }
    }
}

/// Sum of rational functions.
pub fn sum<'a>(items: impl IntoIterator<Item = &'a RatFunc>) -> RatFunc {
    items.into_iter().fold(RatFunc::zero(), |acc, r| &acc + r)
}

/// Clears denominators of `Σ_j x_j r_j(λ)` and returns the coefficient matrix
/// `M[k][j]` of `λ^k` in `L(λ) r_j(λ)`, where `L` is the least common multiple
/// of the denominators. `Σ_j x_j r_j ≡ 0` iff `M x = 0`.
pub fn coefficient_matrix(funcs: &[RatFunc]) -> Vec<Vec<Q>> {
    let mut lcm = Poly::constant(Q::one());
    for r in funcs {
        let red = r.reduced();
        let g = Poly::gcd(&lcm, &red.den);
        let (part, _) = red.den.div_rem(&g);
        lcm = &lcm * &part;
    }
    let polys: Vec<Poly> = funcs
        .iter()
        .map(|r| {
            let red = r.reduced();
            let (factor, rem) = lcm.div_rem(&red.den);
            debug_assert!(rem.is_zero());
            &red.num * &factor
        })
        .collect();
    let rows = polys.iter().map(|p| p.coeffs.len()).max().unwrap_or(0);
    (0..rows).map(|k| polys.iter().map(|p| p.coeff(k)).collect()).collect()
}
