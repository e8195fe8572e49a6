//! Generalized likelihood functions, statistics on n-tuples, and the
//! generalized sufficiency checks.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{q, q_from_f64, q_to_f64, RatFunc, Q};
use crate::families::{BAlphaFamily, ParametricFamily};
use crate::par::{self, Exec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GlfKind {
    /// `Σ log f_λ(y_j)`.
    Log,
    /// `(1/n) Σ (α f^{α-1}(y_j) - 1)/(α-1) - ∫ f^α`.
    DpdMean,
    /// `(1/(α-1)) log[(1/n) Σ f^{α-1}(y_j)] - (1/α) log ∫ f^α`.
    Ldpd,
    /// `Σ (α f^{α-1}(y_j) - 1)/(α-1) - n ∫ f^α`.
    DpdSum,
}

impl std::str::FromStr for GlfKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log" => Ok(GlfKind::Log),
            "dpd" | "dpd-mean" => Ok(GlfKind::DpdMean),
            "ldpd" => Ok(GlfKind::Ldpd),
            "dpd-sum" => Ok(GlfKind::DpdSum),
            _ => Err(Error::Usage(format!("unknown likelihood kind '{s}' (log, dpd, ldpd, dpd-sum)"))),
        }
    }
}

#[derive(Clone)]
pub struct GeneralizedLikelihood {
    pub kind: GlfKind,
    pub alpha: f64,
    pub family: Arc<dyn ParametricFamily>,
}

impl fmt::Debug for GeneralizedLikelihood {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}(alpha={}) on {}", self.kind, self.alpha, self.family.name())
    }
}

impl GeneralizedLikelihood {
    pub fn new(kind: GlfKind, alpha: f64, family: Arc<dyn ParametricFamily>) -> Result<Self> {
        if kind != GlfKind::Log && (!(alpha > 0.0) || alpha == 1.0 || !alpha.is_finite()) {
            return Err(Error::domain(format!("alpha must be positive and different from 1, got {alpha}")));
        }
        Ok(GeneralizedLikelihood { kind, alpha, family })
    }

    /// Binds λ, computing `∫ f_λ^α` once.
    pub fn at(&self, lambda: &[f64]) -> Result<GlfAt<'_>> {
        self.family.domain().check(lambda)?;
        let power_integral = match self.kind {
            GlfKind::Log => f64::NAN,
            _ => {
                let a = self.alpha;
                let v = self.family.integrate_support(lambda, &|y| self.family.density(lambda, y).powf(a))?;
                if !v.is_finite() {
                    return Err(Error::numeric("integral of f^alpha is not finite"));
                }
                v
            }
        };
        Ok(GlfAt { glf: self, lambda: lambda.to_vec(), power_integral })
    }

    pub fn eval(&self, sample: &[f64], lambda: &[f64]) -> Result<f64> {
        self.at(lambda)?.eval(sample)
    }

    /// `exp[glf(y; λ)]` up to a factor depending on λ only, as an exact
    /// rational function of a scalar λ. Available for `Log` and for `Ldpd`
    /// at α = 2 when the family has a rational density.
    pub fn exact_weight(&self, sample: &[f64]) -> Option<RatFunc> {
        let pdfs: Option<Vec<RatFunc>> = sample.iter().map(|&y| self.family.rational_pdf(y)).collect();
        let pdfs = pdfs?;
        match self.kind {
            GlfKind::Log => Some(pdfs.iter().fold(RatFunc::one(), |acc, p| &acc * p)),
            GlfKind::Ldpd if self.alpha == 2.0 => {
                let n = q(sample.len() as i64);
                Some(crate::exact::sum(&pdfs).scale(&(Q::from_integer(1.into()) / n)))
            }
            _ => None,
        }
    }
}

/// A generalized likelihood at a fixed λ.
pub struct GlfAt<'a> {
    glf: &'a GeneralizedLikelihood,
    lambda: Vec<f64>,
    power_integral: f64,
}

impl GlfAt<'_> {
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn power_integral(&self) -> f64 {
        self.power_integral
    }

    pub fn eval(&self, sample: &[f64]) -> Result<f64> {
        if sample.is_empty() {
            return Err(Error::domain("empty sample"));
        }
        let fam = &self.glf.family;
        let a = self.glf.alpha;
        let n = sample.len() as f64;
        let dens = |y: f64| -> Result<f64> { fam.pdf(&self.lambda, y) };
        match self.glf.kind {
            GlfKind::Log => {
                let mut s = 0.0;
                for &y in sample {
                    let f = dens(y)?;
                    if !(f > 0.0) {
                        return Err(Error::domain(format!("log of nonpositive density {f} at y = {y}")));
                    }
                    s += f.ln();
                }
                Ok(s)
            }
            GlfKind::DpdMean | GlfKind::DpdSum => {
                let mut s = 0.0;
                for &y in sample {
                    s += (a * dens(y)?.powf(a - 1.0) - 1.0) / (a - 1.0);
                }
                let mean = s / n - self.power_integral;
                Ok(if self.glf.kind == GlfKind::DpdSum { n * mean } else { mean })
            }
            GlfKind::Ldpd => {
                let mut s = 0.0;
                for &y in sample {
                    s += dens(y)?.powf(a - 1.0);
                }
                let m = s / n;
                if !(m > 0.0) || !m.is_finite() || !(self.power_integral > 0.0) {
                    return Err(Error::domain("LDPD likelihood needs positive finite averages"));
                }
                Ok(m.ln() / (a - 1.0) - self.power_integral.ln() / a)
            }
        }
    }
}

/// Value of a statistic: floating-point coordinates, plus exact ones when known.
#[derive(Debug, Clone)]
pub struct StatValue {
    pub float: Vec<f64>,
    pub exact: Option<Vec<Q>>,
}

impl StatValue {
    fn same(&self, other: &StatValue, tol: f64) -> bool {
        match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => a == b,
            _ => self.close(other, tol),
        }
    }

    fn close(&self, other: &StatValue, tol: f64) -> bool {
        self.float.len() == other.float.len()
            && self.float.iter().zip(&other.float).all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
    }

    fn order(&self, other: &StatValue) -> Ordering {
        match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => a.cmp(b),
            _ => self
                .float
                .iter()
                .zip(&other.float)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal),
        }
    }

    pub fn scalar(&self) -> f64 {
        self.float[0]
    }
}

impl fmt::Display for StatValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = match &self.exact {
            Some(e) => e
                .iter()
                .map(|c| if c.is_integer() { c.numer().to_string() } else { format!("{}/{}", c.numer(), c.denom()) })
                .collect(),
            None => self.float.iter().map(|v| format!("{v}")).collect(),
        };
        if parts.len() == 1 {
            write!(f, "{}", parts[0])
        } else {
            write!(f, "({})", parts.join(", "))
        }
    }
}

type FloatMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type ExactMap = Arc<dyn Fn(&[Q]) -> Vec<Q> + Send + Sync>;

/// A named map from n-tuples to a value space.
#[derive(Clone)]
pub struct Statistic {
    name: String,
    float: FloatMap,
    exact: Option<ExactMap>,
}

impl fmt::Debug for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Statistic({})", self.name)
    }
}

fn mean_q(y: &[Q]) -> Q {
    y.iter().fold(Q::zero(), |a, b| a + b) / q(y.len() as i64)
}

impl Statistic {
    pub fn new(name: impl Into<String>, f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Statistic { name: name.into(), float: Arc::new(f), exact: None }
    }

    pub fn with_exact(mut self, f: impl Fn(&[Q]) -> Vec<Q> + Send + Sync + 'static) -> Self {
        self.exact = Some(Arc::new(f));
        self
    }

    pub fn scalar(name: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(name, move |y| vec![f(y)])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn mean() -> Self {
        Self::scalar("mean", |y| y.iter().sum::<f64>() / y.len() as f64).with_exact(|y| vec![mean_q(y)])
    }

    pub fn sum() -> Self {
        Self::scalar("sum", |y| y.iter().sum()).with_exact(|y| vec![y.iter().fold(Q::zero(), |a, b| a + b)])
    }

    pub fn identity() -> Self {
        Self::new("identity", |y| y.to_vec()).with_exact(|y| y.to_vec())
    }

    /// `Y_i`, 1-based.
    pub fn coordinate(i: usize) -> Self {
        let k = i.saturating_sub(1);
        Self::scalar(format!("coordinate:{i}"), move |y| y[k]).with_exact(move |y| vec![y[k].clone()])
    }

    pub fn constant(c: f64) -> Self {
        let cq = q_from_f64(c).unwrap_or_else(|| q(0));
        Self::scalar("constant", move |_| c).with_exact(move |_| vec![cq.clone()])
    }

    /// `1{Y_i ≠ Y_j}`, 1-based.
    pub fn unequal(i: usize, j: usize) -> Self {
        let (a, b) = (i - 1, j - 1);
        Self::scalar(format!("unequal:{i},{j}"), move |y| if y[a] != y[b] { 1.0 } else { 0.0 })
            .with_exact(move |y| vec![if y[a] != y[b] { q(1) } else { q(0) }])
    }

    /// `(Σ_j f(y_j)/n)` for a B^(α)-family.
    pub fn fbar(fam: Arc<BAlphaFamily>) -> Self {
        Self::new("fbar", move |y| fam.fbar(y))
    }

    /// `(Σ y²/n, Σ y/n)`.
    pub fn second_moment_and_mean() -> Self {
        Self::new("moments", |y| {
            let n = y.len() as f64;
            vec![y.iter().map(|v| v * v).sum::<f64>() / n, y.iter().sum::<f64>() / n]
        })
        .with_exact(|y| {
            let sq: Vec<Q> = y.iter().map(|v| v * v).collect();
            vec![mean_q(&sq), mean_q(y)]
        })
    }

    /// Parses `mean`, `sum`, `identity`, `constant`, `coordinate:i`, `unequal:i,j`, `moments`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || Error::Usage(format!("unknown statistic '{spec}'"));
        match spec {
            "mean" => Ok(Self::mean()),
            "sum" => Ok(Self::sum()),
            "identity" => Ok(Self::identity()),
            "constant" => Ok(Self::constant(0.0)),
            "moments" => Ok(Self::second_moment_and_mean()),
            _ => {
                if let Some(i) = spec.strip_prefix("coordinate:") {
                    let i: usize = i.parse().map_err(|_| bad())?;
                    if i == 0 {
                        return Err(bad());
                    }
                    Ok(Self::coordinate(i))
                } else if let Some(rest) = spec.strip_prefix("unequal:") {
                    let (a, b) = rest.split_once(',').ok_or_else(bad)?;
                    let (a, b): (usize, usize) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                    if a == 0 || b == 0 {
                        return Err(bad());
                    }
                    Ok(Self::unequal(a, b))
                } else {
                    Err(bad())
                }
            }
        }
    }

    /// Largest coordinate index the statistic reads (for validation against n).
    fn min_len(&self) -> usize {
        let parse_idx = |s: &str| s.split(',').filter_map(|p| p.parse::<usize>().ok()).max().unwrap_or(0);
        if let Some(i) = self.name.strip_prefix("coordinate:") {
            parse_idx(i)
        } else if let Some(i) = self.name.strip_prefix("unequal:") {
            parse_idx(i)
        } else {
            1
        }
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        if n < self.min_len() {
            return Err(Error::Usage(format!(
                "statistic {} needs samples of size at least {}",
                self.name,
                self.min_len()
            )));
        }
        Ok(())
    }

    pub fn eval(&self, y: &[f64]) -> StatValue {
        let exact = self.exact.as_ref().and_then(|e| {
            let yq: Option<Vec<Q>> = y.iter().map(|&v| q_from_f64(v)).collect();
            yq.map(|yq| e(&yq))
        });
        let float = match &exact {
            Some(e) => e.iter().map(q_to_f64).collect(),
            None => (self.float)(y),
        };
        StatValue { float, exact }
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }
}

/// Default enumeration cap on `|S|^n`.
pub const MAX_TUPLES: usize = 1_000_000;

/// All n-tuples over a finite support, in lexicographic order.
#[derive(Debug, Clone)]
pub struct SampleSpace {
    pub support: Vec<f64>,
    pub n: usize,
    pub tuples: Vec<Vec<f64>>,
}

impl SampleSpace {
    pub fn new(support: &[f64], n: usize) -> Result<Self> {
        Self::with_cap(support, n, MAX_TUPLES)
    }

    pub fn with_cap(support: &[f64], n: usize, cap: usize) -> Result<Self> {
        if n == 0 || support.is_empty() {
            return Err(Error::domain("sample space needs n ≥ 1 and a nonempty support"));
        }
        let size = (support.len() as f64).powi(n as i32);
        if size > cap as f64 {
            return Err(Error::Resource(format!("|S|^n = {size} exceeds the enumeration cap {cap}")));
        }
        let k = support.len();
        let total = k.pow(n as u32);
        let tuples = (0..total)
            .map(|mut idx| {
                let mut t = vec![0.0; n];
                for slot in t.iter_mut().rev() {
                    *slot = support[idx % k];
                    idx /= k;
                }
                t
            })
            .collect();
        Ok(SampleSpace { support: support.to_vec(), n, tuples })
    }

    pub fn for_family(fam: &dyn ParametricFamily, n: usize) -> Result<Self> {
        match fam.support().points() {
            Some(p) => Self::new(p, n),
            None => Err(Error::Unsupported("enumeration needs a finite support".into())),
        }
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

/// `C_t = {y : T(y) = t}` with member indices into the sample space.
#[derive(Debug, Clone)]
pub struct LevelSet {
    pub value: StatValue,
    pub members: Vec<usize>,
}

/// Real-valued statistics are grouped with this relative tolerance.
pub const STAT_TOL: f64 = 1e-12;

/// Partitions the sample space into level sets, ordered by statistic value.
pub fn level_sets(space: &SampleSpace, t: &Statistic) -> Result<Vec<LevelSet>> {
    t.check_len(space.n)?;
    let values: Vec<StatValue> = space.tuples.iter().map(|y| t.eval(y)).collect();
    let mut sets: Vec<LevelSet> = Vec::new();
    if values.iter().all(|v| v.exact.is_some()) {
        let mut map: BTreeMap<Vec<Q>, usize> = BTreeMap::new();
        for (i, v) in values.iter().enumerate() {
            let key = v.exact.clone().unwrap();
            match map.get(&key) {
                Some(&s) => sets[s].members.push(i),
                None => {
                    map.insert(key, sets.len());
                    sets.push(LevelSet { value: v.clone(), members: vec![i] });
                }
            }
        }
    } else {
        for (i, v) in values.iter().enumerate() {
            match sets.iter_mut().find(|s| s.value.same(v, STAT_TOL)) {
                Some(s) => s.members.push(i),
                None => sets.push(LevelSet { value: v.clone(), members: vec![i] }),
            }
        }
    }
    sets.sort_by(|a, b| a.value.order(&b.value));
    Ok(sets)
}

/// Pairs to test in [`sufficiency_check`].
pub enum Pairs<'a> {
    /// Every pair within every level set of the enumerated space.
    Enumerate(&'a SampleSpace),
    Explicit(Vec<(Vec<f64>, Vec<f64>)>),
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SufficiencyReport {
    pub statistic: String,
    pub passed: bool,
    pub pairs_checked: usize,
    pub max_deviation: f64,
    pub lambda0: f64,
    pub violations: Vec<Violation>,
}

const MAX_REPORTED: usize = 10;

fn midpoint(grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::Usage("λ grid is empty".into()));
    }
    Ok(grid[grid.len() / 2])
}

/// glf values on a sample space: `table[tuple][grid index]`.
fn glf_table(glf: &GeneralizedLikelihood, tuples: &[Vec<f64>], grid: &[f64], exec: Exec) -> Result<Vec<Vec<f64>>> {
    let bound: Vec<GlfAt<'_>> = grid.iter().map(|&l| glf.at(&[l])).collect::<Result<_>>()?;
    par::try_map_indexed(exec, tuples.len(), |i| bound.iter().map(|b| b.eval(&tuples[i])).collect())
}

/// `max_λ |Δ(λ) - Δ(λ0)|` with `Δ = row_r - row_s`.
fn delta_spread(r: &[f64], s: &[f64], i0: usize) -> f64 {
    let d0 = r[i0] - s[i0];
    r.iter().zip(s).map(|(a, b)| (a - b - d0).abs()).fold(0.0, f64::max)
}

/// Generalized sufficiency: `glf(r; λ) - glf(s; λ)` is λ-free whenever `T(r) = T(s)`.
pub fn sufficiency_check(
    t: &Statistic,
    glf: &GeneralizedLikelihood,
    grid: &[f64],
    pairs: Pairs<'_>,
    tol: f64,
) -> Result<SufficiencyReport> {
    let lambda0 = midpoint(grid)?;
    let i0 = grid.len() / 2;
    let mut report = SufficiencyReport {
        statistic: t.name().to_string(),
        passed: true,
        pairs_checked: 0,
        max_deviation: 0.0,
        lambda0,
        violations: Vec::new(),
    };
    let record = |report: &mut SufficiencyReport, r: &[f64], s: &[f64], dev: f64| {
        report.pairs_checked += 1;
        report.max_deviation = report.max_deviation.max(dev);
        if !(dev <= tol) {
            report.passed = false;
            if report.violations.len() < MAX_REPORTED {
                report.violations.push(Violation { r: r.to_vec(), s: s.to_vec(), deviation: dev });
            }
        }
    };
    match pairs {
        Pairs::Enumerate(space) => {
            let table = glf_table(glf, &space.tuples, grid, Exec::default())?;
            for set in level_sets(space, t)? {
                // Δ is additive along chains, so pairs with a fixed representative suffice
                let rep = set.members[0];
                for &m in &set.members[1..] {
                    let dev = delta_spread(&table[rep], &table[m], i0);
                    record(&mut report, &space.tuples[rep], &space.tuples[m], dev);
                }
            }
        }
        Pairs::Explicit(list) => {
            for (r, s) in &list {
                if r.len() != s.len() {
                    return Err(Error::Usage("pair members must have equal length".into()));
                }
                t.check_len(r.len())?;
                // real-valued data: compare statistic values with tolerance
                if !t.eval(r).close(&t.eval(s), STAT_TOL) {
                    continue;
                }
                let rows = glf_table(glf, &[r.clone(), s.clone()], grid, Exec::Sequential)?;
                let dev = delta_spread(&rows[0], &rows[1], i0);
                record(&mut report, r, s, dev);
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorizationReport {
    pub statistic: String,
    pub passed: bool,
    pub max_residual: f64,
    pub worst_tuple: Vec<f64>,
    pub worst_lambda: f64,
}

/// Fits `glf(y; λ) = p(λ, T(y)) + q(y)` on the enumerated space.
pub fn factorization_check(
    t: &Statistic,
    glf: &GeneralizedLikelihood,
    space: &SampleSpace,
    grid: &[f64],
    tol: f64,
) -> Result<FactorizationReport> {
    midpoint(grid)?;
    let i0 = grid.len() / 2;
    let table = glf_table(glf, &space.tuples, grid, Exec::default())?;
    let mut report = FactorizationReport {
        statistic: t.name().to_string(),
        passed: true,
        max_residual: 0.0,
        worst_tuple: Vec::new(),
        worst_lambda: grid[i0],
    };
    for set in level_sets(space, t)? {
        let p = &table[set.members[0]];
        for &m in &set.members {
            let qy = table[m][i0] - p[i0];
            for (k, &l) in grid.iter().enumerate() {
                let res = (table[m][k] - p[k] - qy).abs();
                if !(res <= report.max_residual) {
                    report.max_residual = res;
                    report.worst_tuple = space.tuples[m].clone();
                    report.worst_lambda = l;
                }
            }
        }
    }
    report.passed = report.max_residual <= tol;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimalityReport {
    pub statistic: String,
    pub sufficient: bool,
    pub minimal: bool,
    /// Representatives of two distinct level sets whose Δ is λ-free.
    pub counterexample: Option<(Vec<f64>, Vec<f64>)>,
}

/// Minimal sufficiency on an enumerable space: `T` is sufficient, and tuples in
/// distinct level sets always have a λ-dependent Δ.
pub fn minimal_sufficiency_check(
    t: &Statistic,
    glf: &GeneralizedLikelihood,
    space: &SampleSpace,
    grid: &[f64],
    tol: f64,
) -> Result<MinimalityReport> {
    let suff = sufficiency_check(t, glf, grid, Pairs::Enumerate(space), tol)?;
    let i0 = grid.len() / 2;
    let sets = level_sets(space, t)?;
    let reps: Vec<usize> = sets.iter().map(|s| s.members[0]).collect();
    let table =
        glf_table(glf, &reps.iter().map(|&i| space.tuples[i].clone()).collect::<Vec<_>>(), grid, Exec::default())?;
    let mut counterexample = None;
    'outer: for a in 0..reps.len() {
        for b in a + 1..reps.len() {
            if delta_spread(&table[a], &table[b], i0) <= tol {
                counterexample = Some((space.tuples[reps[a]].clone(), space.tuples[reps[b]].clone()));
                break 'outer;
            }
        }
    }
    Ok(MinimalityReport {
        statistic: t.name().to_string(),
        sufficient: suff.passed,
        minimal: suff.passed && counterexample.is_none(),
        counterexample,
    })
}
