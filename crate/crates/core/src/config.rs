//! Family specifications: inline (`student:nu=3@0.5`) or TOML files.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::families::{
    bernoulli_balpha_family, bernoulli_malpha_family, BAlphaFamily, ExponentialFamily, FiniteTableFamily, ParamDomain,
    ParametricFamily, StudentLocationFamily,
};
use crate::glf::GlfKind;

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TableRow {
    pub value: f64,
    /// Expression in `lambda` (or `l`).
    pub weight: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct DomainConfig {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FamilyConfig {
    Student { nu: f64 },
    Bernoulli,
    BernoulliMalpha,
    BernoulliBalpha,
    Normal,
    Table { table: Vec<TableRow>, domain: Option<DomainConfig>, name: Option<String> },
}

/// A family plus the optional settings that may accompany it.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct FamilyRef {
    pub family: FamilyConfig,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub glf: Option<GlfKind>,
}

impl FamilyConfig {
    pub fn build(&self) -> Result<Arc<dyn ParametricFamily>> {
        Ok(match self {
            FamilyConfig::Student { nu } => Arc::new(StudentLocationFamily::new(*nu)?),
            FamilyConfig::Bernoulli => Arc::new(ExponentialFamily::bernoulli()),
            FamilyConfig::BernoulliMalpha => Arc::new(bernoulli_malpha_family()),
            FamilyConfig::BernoulliBalpha => Arc::new(bernoulli_balpha_family()),
            FamilyConfig::Normal => Arc::new(ExponentialFamily::normal_location()),
            FamilyConfig::Table { table, domain, name } => {
                let values = table.iter().map(|r| r.value).collect();
                let weights = table.iter().map(|r| Expr::parse(&r.weight)).collect::<Result<Vec<_>>>()?;
                let dom = match domain {
                    Some(d) => ParamDomain::new(vec![d.lo], vec![d.hi]).map_err(|e| Error::Config(e.to_string()))?,
                    None => ParamDomain::interval(0.0, 1.0),
                };
                let fam = FiniteTableFamily::new(values, weights, dom)?;
                Arc::new(match name {
                    Some(n) => fam.named(n.clone()),
                    None => fam,
                })
            }
        })
    }

    /// The B^(α) representation, when one is available.
    pub fn balpha(&self) -> Result<Option<Arc<BAlphaFamily>>> {
        Ok(match self {
            FamilyConfig::Student { nu } => Some(Arc::new(StudentLocationFamily::new(*nu)?.to_balpha())),
            FamilyConfig::BernoulliBalpha => Some(Arc::new(bernoulli_balpha_family())),
            _ => None,
        })
    }

    /// Generalized likelihood and α that the family is usually paired with.
    pub fn default_glf(&self) -> (GlfKind, f64) {
        match self {
            FamilyConfig::Student { nu } => (GlfKind::DpdMean, 1.0 - 2.0 / (nu + 1.0)),
            FamilyConfig::BernoulliMalpha => (GlfKind::Ldpd, 2.0),
            FamilyConfig::BernoulliBalpha => (GlfKind::DpdMean, 2.0),
            _ => (GlfKind::Log, 1.0),
        }
    }
}

impl FamilyRef {
    pub fn glf_kind(&self) -> GlfKind {
        self.glf.unwrap_or(self.family.default_glf().0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(self.family.default_glf().1)
    }
}

fn parse_inline(spec: &str) -> Result<FamilyRef> {
    let bad = |m: &str| Error::Usage(format!("family '{spec}': {m}"));
    let (body, lambda) = match spec.split_once('@') {
        Some((b, l)) => (b, Some(l.trim().parse::<f64>().map_err(|_| bad("λ after '@' is not a number"))?)),
        None => (spec, None),
    };
    let (name, params) = body.split_once(':').unwrap_or((body, ""));
    let mut nu = None;
    let mut alpha = None;
    for kv in params.split(',').filter(|s| !s.is_empty()) {
        let (k, v) = kv.split_once('=').ok_or_else(|| bad("parameters look like key=value"))?;
        let v: f64 = v.trim().parse().map_err(|_| bad("parameter value is not a number"))?;
        match k.trim() {
            "nu" => nu = Some(v),
            "alpha" => alpha = Some(v),
            other => return Err(bad(&format!("unknown parameter '{other}'"))),
        }
    }
    let family = match name.trim() {
        "student" => FamilyConfig::Student { nu: nu.ok_or_else(|| bad("student needs nu=<value>"))? },
        "bernoulli" => FamilyConfig::Bernoulli,
        "bernoulli-malpha" => FamilyConfig::BernoulliMalpha,
        "bernoulli-balpha" => FamilyConfig::BernoulliBalpha,
        "normal" => FamilyConfig::Normal,
        other => return Err(bad(&format!("unknown family '{other}'"))),
    };
    if nu.is_some() && !matches!(family, FamilyConfig::Student { .. }) {
        return Err(bad("nu applies to student only"));
    }
    Ok(FamilyRef { family, lambda, alpha, glf: None })
}

pub fn parse_family_toml(text: &str) -> Result<FamilyRef> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

/// Inline spec, or a path to a `.toml` file.
pub fn parse_family_spec(spec: &str) -> Result<FamilyRef> {
    if spec.ends_with(".toml") || Path::new(spec).is_file() {
        let text = std::fs::read_to_string(spec).map_err(|e| Error::Config(format!("{spec}: {e}")))?;
        return parse_family_toml(&text);
    }
    parse_inline(spec)
}
