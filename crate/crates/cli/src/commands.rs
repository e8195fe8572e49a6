use std::fmt::Write as _;
use std::sync::Arc;

use serde_json::{json, Value};

use divgen::aed::{aed_balpha, risk_expansion_fit};
use divgen::completeness::{completeness_check, Verdict};
use divgen::config::{parse_family_spec, FamilyConfig, FamilyRef};
use divgen::deformed::{statistic_pmf, DeformedDistribution, FiniteDeformed, GaussianDeformed};
use divgen::deriv::SmoothFn;
use divgen::divergences::{dpd, kl_divergence, ldpd};
use divgen::estimators::{mdpde_solve, risk_evaluate, Estimator, RiskMethod, SolverConfig};
use divgen::families::{Member, ParametricFamily};
use divgen::glf::{
    factorization_check, minimal_sufficiency_check, sufficiency_check, GeneralizedLikelihood, Pairs, Statistic,
};
use divgen::par::Exec;
use divgen::stress::{self, aed_cross_check, decide, mu_range, stress_curve, StressStrengthModel, CURVE_HEADER};
use divgen::{Error, Result};

use crate::io::{emit, emit_json, q_str, q_vec, read_risk_csv, read_samples, to_value};
use crate::{
    AedArgs, Cli, Command, CompleteArgs, DeformArgs, DivergenceArgs, Estimand, EstimatorKind, FiniteArgs, Kind,
    MdpdeArgs, Method, RiskArgs, RiskFitArgs, StressArgs, StressCurveArgs,
};

const SUFFICIENCY_TOL: f64 = 1e-10;

pub fn run(cli: &Cli) -> Result<()> {
    configure_threads(cli.threads)?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Divergence(a) => divergence(a, out),
        Command::Sufficiency(a) => sufficiency(a, out),
        Command::Deform(a) => deform(a, out),
        Command::Complete(a) => complete(a, out),
        Command::Mdpde(a) => mdpde(a, out),
        Command::Risk(a) => risk(a, out),
        Command::Aed(a) => aed(a, out),
        Command::RiskFit(a) => risk_fit(a, out),
        Command::Stress(a) => stress_decision(a, out),
        Command::StressCurve(a) => curve(a, out),
    }
}

fn configure_threads(flag: Option<usize>) -> Result<()> {
    let threads = match flag {
        Some(t) => Some(t),
        None => match std::env::var("DIVGEN_THREADS") {
            Ok(v) if !v.trim().is_empty() => Some(
                v.trim().parse().map_err(|_| Error::Usage(format!("DIVGEN_THREADS='{v}' is not a thread count")))?,
            ),
            _ => None,
        },
    };
    if threads == Some(0) {
        return Err(Error::Usage("thread count must be positive".into()));
    }
    #[cfg(feature = "parallel")]
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| Error::Resource(e.to_string()))?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn member(spec: &str) -> Result<Member> {
    let r = parse_family_spec(spec)?;
    let lambda = r.lambda.ok_or_else(|| Error::Usage(format!("'{spec}' needs a parameter value, as in family@λ")))?;
    Member::new(r.family.build()?, vec![lambda])
}

fn divergence(a: &DivergenceArgs, out: Option<&std::path::Path>) -> Result<()> {
    let (g, f) = (member(&a.g)?, member(&a.f)?);
    let (name, value) = match a.kind {
        Kind::Kl => ("kl", kl_divergence(&g, &f)?),
        Kind::Dpd => ("dpd", dpd(&g, &f, a.alpha)?),
        Kind::Ldpd => ("ldpd", ldpd(&g, &f, a.alpha)?),
    };
    let alpha = (!matches!(a.kind, Kind::Kl)).then_some(a.alpha);
    eprintln!("{name}({}, {}) = {value}", a.g, a.f);
    emit_json(out, "divergence", json!({ "kind": name, "alpha": alpha, "g": a.g, "f": a.f, "value": value }))
}

struct Finite {
    fref: FamilyRef,
    dist: FiniteDeformed,
}

fn finite(family: &str, glf: Option<&str>, alpha: Option<f64>, n: usize) -> Result<Finite> {
    let fref = parse_family_spec(family)?;
    let kind = match glf {
        Some(k) => k.parse()?,
        None => fref.glf_kind(),
    };
    let alpha = alpha.unwrap_or(fref.alpha());
    let glf = GeneralizedLikelihood::new(kind, alpha, fref.family.build()?)?;
    let dist = FiniteDeformed::new(glf, n)?;
    Ok(Finite { fref, dist })
}

fn setting(f: &Finite) -> Value {
    let glf = f.dist.glf();
    json!({
        "family": glf.family.name(),
        "glf": glf.kind,
        "alpha": glf.alpha,
        "n": f.dist.space().n,
        "lambda": f.fref.lambda,
    })
}

fn statistic(spec: &str, n: usize) -> Result<Statistic> {
    let t = Statistic::parse(spec)?;
    t.check_len(n)?;
    Ok(t)
}

fn sufficiency(a: &FiniteArgs, out: Option<&std::path::Path>) -> Result<()> {
    let f = finite(&a.family, a.glf.as_deref(), a.alpha, a.n)?;
    let t = statistic(&a.statistic, a.n)?;
    let grid = f.dist.grid();
    let glf = f.dist.glf();
    let space = f.dist.space();
    let suff = sufficiency_check(&t, glf, &grid, Pairs::Enumerate(space), SUFFICIENCY_TOL)?;
    let fact = factorization_check(&t, glf, space, &grid, SUFFICIENCY_TOL)?;
    let minimal = minimal_sufficiency_check(&t, glf, space, &grid, SUFFICIENCY_TOL)?;
    eprintln!(
        "{}: sufficient={} minimal={} ({} pairs, max deviation {:.3e})",
        t.name(),
        suff.passed,
        minimal.minimal,
        suff.pairs_checked,
        suff.max_deviation
    );
    emit_json(
        out,
        "sufficiency",
        json!({
            "setting": setting(&f),
            "grid": grid,
            "sufficiency": to_value(&suff),
            "factorization": to_value(&fact),
            "minimality": to_value(&minimal),
        }),
    )
}

fn deform(a: &DeformArgs, out: Option<&std::path::Path>) -> Result<()> {
    let f = finite(&a.family, a.glf.as_deref(), a.alpha, a.n)?;
    let grid = f.dist.grid();
    let pmf: Vec<Vec<f64>> = grid.iter().map(|&l| f.dist.pmf(l)).collect::<Result<_>>()?;
    let mut body = json!({
        "setting": setting(&f),
        "grid": grid,
        "tuples": f.dist.tuples(),
        "pmf": pmf,
    });
    if a.exact {
        body["exact"] = match f.dist.exact_pmf() {
            Some(e) => Value::from(e.iter().map(|r| r.to_string()).collect::<Vec<_>>()),
            None => Value::Null,
        };
    }
    if let Some(spec) = &a.statistic {
        let t = statistic(spec, a.n)?;
        let sp = statistic_pmf(&f.dist, &t)?;
        let rows: Vec<Vec<f64>> = grid.iter().map(|&l| sp.eval(l)).collect::<Result<_>>()?;
        body["statistic"] = json!({
            "name": t.name(),
            "values": sp.values().iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            "pmf": rows,
            "exact": sp.exact.as_ref().map(|e| e.iter().map(|r| r.to_string()).collect::<Vec<_>>()),
        });
    }
    eprintln!("deformed pmf over {} tuples on {} grid points", f.dist.tuples().len(), grid.len());
    emit_json(out, "deform", body)
}

fn complete(a: &CompleteArgs, out: Option<&std::path::Path>) -> Result<()> {
    let fa = &a.finite;
    let f = finite(&fa.family, fa.glf.as_deref(), fa.alpha, fa.n)?;
    let t = statistic(&fa.statistic, fa.n)?;
    let r = completeness_check(&f.dist, &t)?;
    if let Some(path) = &a.emit_matrix {
        let mut csv = String::from("power");
        for v in &r.values {
            let _ = write!(csv, ",{v}");
        }
        csv.push('\n');
        for (k, row) in r.matrix.iter().enumerate() {
            let _ = write!(csv, "{k}");
            for c in row {
                let _ = write!(csv, ",{}", q_str(c));
            }
            csv.push('\n');
        }
        std::fs::write(path, csv).map_err(|e| Error::Resource(format!("{}: {e}", path.display())))?;
    }
    let verdict = match r.verdict {
        Verdict::Complete => "COMPLETE",
        Verdict::Incomplete => "INCOMPLETE",
    };
    match &r.witness {
        Some(w) => {
            eprintln!("{}: {verdict}, witness ({})", r.statistic, w.iter().map(q_str).collect::<Vec<_>>().join(", "))
        }
        None => eprintln!("{}: {verdict}", r.statistic),
    }
    emit_json(
        out,
        "complete",
        json!({
            "setting": setting(&f),
            "statistic": r.statistic,
            "verdict": verdict,
            "values": r.values.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            "witness": r.witness.as_deref().map(q_vec),
            "kernel_dimension": r.kernel_dimension,
            "exact_rank": r.exact_rank,
            "float_rank": r.float_rank,
            "certificate": r.certificate.as_ref().map(to_value),
            "grid_max_abs_expectation": r.grid_max_abs_expectation,
        }),
    )
}

fn mdpde(a: &MdpdeArgs, out: Option<&std::path::Path>) -> Result<()> {
    let fref = parse_family_spec(&a.family)?;
    let alpha = a.alpha.unwrap_or(fref.alpha());
    let fam: Arc<dyn ParametricFamily> = fref.family.build()?;
    let sample = read_samples(&a.data)?;
    let cfg = SolverConfig { tol: a.tol, max_iter: a.max_iter, bracket: None };
    let r = mdpde_solve(&sample, Arc::clone(&fam), alpha, &cfg)?;
    eprintln!(
        "MDPDE {} (residual {:.2e}, {} iterations, converged={})",
        r.estimate[0], r.residual_norm, r.iterations, r.converged
    );
    emit_json(out, "mdpde", json!({ "family": fam.name(), "alpha": alpha, "n": sample.len(), "report": to_value(&r) }))
}

fn reliability_estimator(kind: EstimatorKind, model: StressStrengthModel, n: usize) -> Estimator {
    match kind {
        EstimatorKind::Mdpde => {
            Estimator::of_mean("mdpde", move |t| stress::estimators(&model, t, n).map_or(f64::NAN, |e| e.0))
        }
        EstimatorKind::Umvue => {
            Estimator::of_mean("umvue", move |t| stress::estimators(&model, t, n).map_or(f64::NAN, |e| e.1))
        }
    }
}

fn risk(a: &RiskArgs, out: Option<&std::path::Path>) -> Result<()> {
    if a.n == 0 {
        return Err(Error::Usage("n must be positive".into()));
    }
    let model = StressStrengthModel::new(a.nu, a.mu)?;
    let dist = DeformedDistribution::Gaussian(GaussianDeformed { mu: a.mu, sigma_star: model.sigma_star, n: a.n });
    let est = reliability_estimator(a.estimator, model, a.n);
    let s = model.sigma_star;
    let tau = move |m: f64| stress::reliability(m, s);
    let method = match a.method {
        Method::Quad => RiskMethod::Quadrature,
        Method::Mc => RiskMethod::MonteCarlo { seed: a.seed, reps: a.reps, exec: Exec::default() },
    };
    let r = risk_evaluate(&est, &tau, &dist, a.mu, method)?;
    match r.standard_error {
        Some(se) => eprintln!("risk of {} = {} ± {se}", r.estimator, r.risk),
        None => eprintln!("risk of {} = {}", r.estimator, r.risk),
    }
    emit_json(out, "risk", json!({ "nu": a.nu, "sigma_star": s, "risk": to_value(&r) }))
}

fn aed(a: &AedArgs, out: Option<&std::path::Path>) -> Result<()> {
    match parse_family_spec(&a.family) {
        Ok(FamilyRef { family: FamilyConfig::Student { .. }, .. }) => {}
        Err(_) if a.family == "student" => {}
        _ => return Err(Error::Unsupported(format!("aed is available for the student family, not '{}'", a.family))),
    }
    let model = StressStrengthModel::new(a.nu, a.mu)?;
    let s = model.sigma_star;
    let body = match a.estimand {
        Estimand::Reliability => {
            let report = stress::aed_generic(&model)?;
            let check = aed_cross_check(&model)?;
            eprintln!("AED = {} (closed form {}), preferred {}", report.aed, check.closed, report.preferred);
            json!({ "estimand": "reliability", "nu": a.nu, "sigma_star": s, "report": to_value(&report), "cross_check": to_value(&check) })
        }
        Estimand::Mean => {
            let report = aed_balpha(&SmoothFn::linear(1.0, 0.0), &stress::natural_curve(s), a.mu)?;
            eprintln!("AED = {}, preferred {}", report.aed, report.preferred);
            json!({ "estimand": "mean", "nu": a.nu, "sigma_star": s, "report": to_value(&report) })
        }
    };
    emit_json(out, "aed", body)
}

fn risk_fit(a: &RiskFitArgs, out: Option<&std::path::Path>) -> Result<()> {
    let pts = read_risk_csv(&a.data)?;
    let fit = risk_expansion_fit(&pts)?;
    if let Some(w) = &fit.warning {
        eprintln!("warning: {w}");
    }
    eprintln!("risk ≈ {}/n + {}/n² (relative residual {:.2e})", fit.a, fit.b, fit.residual);
    emit_json(out, "risk-fit", json!({ "points": pts.len(), "fit": to_value(&fit) }))
}

fn stress_decision(a: &StressArgs, out: Option<&std::path::Path>) -> Result<()> {
    let model = StressStrengthModel::new(a.nu, a.mu)?;
    let d = decide(&model)?;
    let mut body = json!({ "decision": to_value(&d), "cross_check": to_value(&aed_cross_check(&model)?) });
    let observed = match &a.data {
        Some(p) => {
            let ys = read_samples(p)?;
            if ys.is_empty() {
                return Err(Error::Domain(format!("{} holds no observations", p.display())));
            }
            Some((ys.iter().sum::<f64>() / ys.len() as f64, ys.len()))
        }
        None => None,
    };
    if let Some((ybar, n)) = observed {
        let (m, u) = stress::estimators(&model, ybar, n)?;
        body["estimates"] = json!({ "n": n, "ybar": ybar, "mdpde": m, "umvue": u });
    } else if let Some(n) = a.n {
        let r_m = stress::mdpde_risk(&model, n as f64)?;
        let r_u = stress::umvue_risk(&model, n as f64)?;
        body["risks"] = json!({ "n": n, "mdpde": r_m, "umvue": r_u });
    }
    eprintln!(
        "ν={} μ={}: σ*={:.6}, reliability {:.6}, threshold {:.6}, preferred {}",
        a.nu, a.mu, d.sigma_star, d.reliability, d.threshold, d.preferred
    );
    emit_json(out, "stress", body)
}

fn parse_range(spec: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Usage(format!("--mu-range '{spec}' must look like a:b:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?;
    Ok((v[0], v[1], v[2]))
}

fn curve(a: &StressCurveArgs, out: Option<&std::path::Path>) -> Result<()> {
    let (lo, hi, step) = parse_range(&a.mu_range)?;
    let rows = stress_curve(a.nu, &mu_range(lo, hi, step)?, Exec::default())?;
    let mut csv = String::from(CURVE_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&r.csv());
        csv.push('\n');
    }
    eprintln!("{} rows, σ* = {:.6}", rows.len(), stress::sigma_star(a.nu)?);
    emit(out, csv.trim_end())
}
