//! Classification of vector fields by their Lie derivatives of the metric,
//! the pointwise curvature criteria, and the conformal-change criterion.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::json;

use crate::error::{MkvError, Result};
use crate::expr::Expr;
use crate::geometry::{basis, probes, FieldAt, Geometry};
use crate::report::{max_of, Detail, Report};
use crate::sampling::{map_points, RunConfig};
use crate::spec::Spec;
use crate::tensor::relative;

/// Absolute threshold on `‖L_V g‖` below which a point counts as Killing.
pub const EPS_KILLING: f64 = 1e-8;
pub const PROJECTION_TOL: f64 = 1e-7;
pub const CONFORMAL_TOL: f64 = 1e-8;
pub const IDENTITY_TOL: f64 = 1e-8;
const NONZERO_FACTOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Classification {
    Killing,
    TwoKilling,
    MixedKilling,
    Conformal,
    None,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Killing => "KILLING",
            Classification::TwoKilling => "TWO_KILLING",
            Classification::MixedKilling => "MIXED_KILLING",
            Classification::Conformal => "CONFORMAL",
            Classification::None => "NONE",
        }
    }
}

/// How a mixed Killing field was recognised.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Subclass {
    /// `L_V g = 2λ g` with constant `λ ≠ 0`; `f = 2λ`.
    Homothetic,
    /// `L_V g = 2λ g` with `V(λ) = 0`.
    Conformal,
    /// Found by the pointwise projection fit.
    Projection,
}

impl Subclass {
    pub fn as_str(self) -> &'static str {
        match self {
            Subclass::Homothetic => "HOMOTHETIC",
            Subclass::Conformal => "CONFORMAL",
            Subclass::Projection => "PROJECTION",
        }
    }
}

/// Everything measured for one field at one point.
#[derive(Clone, Debug)]
pub struct FieldSample {
    pub lie_norm: f64,
    pub lie2_norm: f64,
    /// Projection fit `(f, residual)`; `None` at Killing-degenerate points.
    pub fit: Option<(f64, f64)>,
    pub conformal_residual: f64,
    pub lambda: f64,
    pub v_lambda: f64,
    /// Factor used in the identity residuals below.
    pub f_used: f64,
    pub factor: f64,
    pub criterion: f64,
    pub twist_term: f64,
    pub quadratic: f64,
    pub bochner: f64,
    /// `|tr(criterion operator) + 2·bochner|`.
    pub trace_consistency: f64,
    pub div: f64,
    pub ric_vv: f64,
    pub div_nabla_vv: f64,
    pub nabla_norm_sq: f64,
}

impl FieldSample {
    pub fn compute(geo: &Geometry, fa: &FieldAt, f_override: Option<f64>) -> FieldSample {
        let n = geo.n;
        let lie_norm = geo.norm02(&fa.lie);
        let fit = fa.fit_factor(geo, EPS_KILLING);
        let f_used = f_override.or(fit.map(|x| x.0)).unwrap_or(0.0);
        let conf = &fa.lie - &geo.gm * (2.0 * fa.lambda);
        let criterion = max_of(basis(n).iter().map(|y| fa.criterion_residual(geo, f_used, y)));
        let twist_term = max_of(basis(n).iter().map(|y| fa.twist_term(geo, y)));
        let quadratic = max_of(probes(n).iter().map(|y| fa.quadratic_residual(geo, f_used, y)));
        let bochner = fa.bochner_residual(geo, f_used);
        let trace = (fa.criterion_operator(f_used).trace() + 2.0 * fa.bochner_value(geo, f_used)).abs();
        FieldSample {
            lie_norm,
            lie2_norm: geo.norm02(&fa.lie2),
            fit,
            conformal_residual: relative(geo.norm02(&conf), lie_norm),
            lambda: fa.lambda,
            v_lambda: fa.v_lambda,
            f_used,
            factor: fa.factor_residual(geo, f_used),
            criterion,
            twist_term,
            quadratic,
            bochner,
            trace_consistency: trace,
            div: fa.div(),
            ric_vv: fa.ric_vv,
            div_nabla_vv: fa.d_nabla_vv.trace(),
            nabla_norm_sq: fa.nabla_norm_sq(geo),
        }
    }
}

/// Evaluate one field at a point.
pub fn field_at(spec: &Spec, comps: &[Expr], point: &[f64]) -> Result<(Geometry, FieldAt)> {
    let geo = Geometry::at(spec, point)?;
    let v = spec.eval_vector(comps, point, 3)?;
    let fa = FieldAt::new(&geo, &v)?;
    Ok((geo, fa))
}

/// Sample a field at every configured point.
pub fn sample_field(
    spec: &Spec,
    comps: &[Expr],
    f_override: Option<&Expr>,
    cfg: &RunConfig,
) -> Result<crate::sampling::PointResults<FieldSample>> {
    let points = cfg.sampling.points(spec)?;
    map_points(&points, |p| {
        let (geo, fa) = field_at(spec, comps, p)?;
        let f = match f_override {
            Some(e) => Some(spec.eval_scalar(e, p, 0)?.value()),
            None => None,
        };
        Ok(FieldSample::compute(&geo, &fa, f))
    })
}

#[derive(Clone, Debug)]
pub struct KillingReport {
    pub field: String,
    pub classification: Classification,
    pub subclass: Option<Subclass>,
    /// Constant conformal factor when homothetic.
    pub lambda: Option<f64>,
    /// Aggregate factor when the fitted `f` is constant across points.
    pub f_constant: Option<f64>,
    pub f_range: Option<(f64, f64)>,
    pub max_lie_norm: f64,
    pub max_lie2_norm: f64,
    pub max_projection_residual: f64,
    pub samples: Vec<(Vec<f64>, FieldSample)>,
    pub report: Report,
}

impl KillingReport {
    pub fn is_mixed(&self) -> bool {
        self.classification == Classification::MixedKilling
    }
}

fn spread_constant(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (hi - lo < 1e-6 * (1.0 + mean.abs())).then_some(mean)
}

/// Decide the class from per-point samples.
pub fn decide(samples: &[&FieldSample]) -> (Classification, Option<Subclass>, Option<f64>) {
    let max_lie = max_of(samples.iter().map(|s| s.lie_norm));
    if max_lie < EPS_KILLING {
        return (Classification::Killing, None, None);
    }
    let max_lie2 = max_of(samples.iter().map(|s| s.lie2_norm));
    if max_lie2 < EPS_KILLING {
        return (Classification::TwoKilling, None, None);
    }
    if samples.iter().all(|s| s.conformal_residual < CONFORMAL_TOL) {
        let lambdas: Vec<f64> = samples.iter().map(|s| s.lambda).collect();
        if let Some(l) = spread_constant(&lambdas) {
            return (Classification::MixedKilling, Some(Subclass::Homothetic), Some(l));
        }
        if samples.iter().all(|s| s.v_lambda.abs() < CONFORMAL_TOL) {
            return (Classification::MixedKilling, Some(Subclass::Conformal), None);
        }
        return (Classification::Conformal, None, None);
    }
    let consistent = samples.iter().all(|s| match s.fit {
        Some((_, res)) => res < PROJECTION_TOL,
        None => s.lie2_norm < EPS_KILLING,
    });
    if consistent {
        let nonzero = samples.iter().any(|s| s.fit.is_some_and(|(f, _)| f.abs() > NONZERO_FACTOR));
        if nonzero {
            return (Classification::MixedKilling, Some(Subclass::Projection), None);
        }
        return (Classification::TwoKilling, None, None);
    }
    (Classification::None, None, None)
}

/// Classify a named field and evaluate the curvature criteria with the
/// fitted factor (or `f_override`).
pub fn classify_field(spec: &Spec, field: &str, f_override: Option<&Expr>, cfg: &RunConfig) -> Result<KillingReport> {
    let comps = spec.field(field)?.to_vec();
    let res = sample_field(spec, &comps, f_override, cfg)?;
    let mut report = Report::new(&spec.name, "killing");
    report.add_failures(&res.failed);
    if res.ok.is_empty() {
        return Err(MkvError::NoSamples);
    }
    let samples: Vec<&FieldSample> = res.values().collect();
    let (class, subclass, lambda) = decide(&samples);

    let fits: Vec<f64> = samples.iter().filter_map(|s| s.fit.map(|x| x.0)).collect();
    let f_constant = spread_constant(&fits);
    let f_range = (!fits.is_empty()).then(|| {
        (fits.iter().cloned().fold(f64::INFINITY, f64::min), fits.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
    });
    let max_lie_norm = max_of(samples.iter().map(|s| s.lie_norm));
    let max_lie2_norm = max_of(samples.iter().map(|s| s.lie2_norm));
    let max_projection = max_of(samples.iter().filter_map(|s| s.fit.map(|x| x.1)));

    report.summary("field", field);
    report.summary("classification", class.as_str());
    report.summary("subclass", subclass.map(Subclass::as_str));
    if let Some(l) = lambda {
        report.summary_f64("lambda", l);
    }
    match (f_override, f_constant) {
        (Some(e), _) => report.summary("f", format!("{e} (supplied)")),
        (None, Some(f)) => report.summary_f64("f", f),
        (None, None) if fits.is_empty() => report.summary("f", "undefined (Killing-degenerate everywhere)"),
        (None, None) => report.summary("f", "varies across points (see details)"),
    }
    if let Some((lo, hi)) = f_range {
        report.summary_f64("f_min", lo);
        report.summary_f64("f_max", hi);
    }
    report.summary("points", res.ok.len());

    report.info("lie_derivative_norm", max_lie_norm, EPS_KILLING);
    report.info("second_lie_derivative_norm", max_lie2_norm, EPS_KILLING);
    report.info("projection_residual", max_projection, PROJECTION_TOL);
    report.info("conformal_residual", max_of(samples.iter().map(|s| s.conformal_residual)), CONFORMAL_TOL);

    // the criteria must hold whenever L_VL_Vg = f L_Vg does
    let holds = matches!(class, Classification::Killing | Classification::TwoKilling | Classification::MixedKilling)
        || f_override.is_some();
    let tol = cfg.tol_or(IDENTITY_TOL);
    let rows = [
        ("factor_equation_residual", max_of(samples.iter().map(|s| s.factor))),
        ("curvature_criterion", max_of(samples.iter().map(|s| s.criterion))),
        ("quadratic_curvature_criterion", max_of(samples.iter().map(|s| s.quadratic))),
        ("bochner_integrand", max_of(samples.iter().map(|s| s.bochner))),
    ];
    for (name, value) in rows {
        if holds {
            report.check(name, value, tol);
        } else {
            report.info(name, value, tol);
        }
    }
    report.check("criterion_trace_vs_bochner", max_of(samples.iter().map(|s| s.trace_consistency)), 1e-8);
    report.info("twist_derivative_term", max_of(samples.iter().map(|s| s.twist_term)), tol);
    report.note_last("norm of the (∇_Vφ)Y term, included in the criterion");

    for (p, s) in &res.ok {
        let mut fitted = BTreeMap::new();
        if let Some((f, _)) = s.fit {
            fitted.insert("f".to_string(), f);
        }
        fitted.insert("lambda".to_string(), s.lambda);
        fitted.insert("lie_norm".to_string(), s.lie_norm);
        report.details.push(Detail { point: p.clone(), residual: s.fit.map_or(0.0, |x| x.1), fitted });
    }

    Ok(KillingReport {
        field: field.to_string(),
        classification: class,
        subclass,
        lambda,
        f_constant,
        f_range,
        max_lie_norm,
        max_lie2_norm,
        max_projection_residual: max_projection,
        samples: res.ok,
        report,
    })
}

/// The pointwise factor fit at one point; errors at Killing-degenerate points.
pub fn estimate_factor(spec: &Spec, field: &str, point: &[f64]) -> Result<(f64, f64)> {
    let comps = spec.field(field)?;
    let (geo, fa) = field_at(spec, comps, point)?;
    fa.fit_factor(&geo, EPS_KILLING).ok_or_else(|| {
        MkvError::Invalid(format!("`{field}` is Killing-degenerate at {point:?}; the factor is undefined there"))
    })
}

/// Metric `ρ g` as a new spec.
pub fn scaled_spec(spec: &Spec, rho: &Expr) -> Spec {
    let mut s = spec.clone();
    s.name = format!("{}-scaled", spec.name);
    s.metric = spec
        .metric
        .iter()
        .map(|row| {
            row.iter()
                .map(|e| if e.is_zero_literal() { e.clone() } else { Expr::mul(rho.clone(), e.clone()) })
                .collect()
        })
        .collect();
    s
}

#[derive(Clone, Debug)]
pub struct ConformalChangeOutcome {
    /// The displayed identity holds at every sample point.
    pub identity_holds: bool,
    /// `V` satisfies `L_V L_V g̃ = f L_V g̃` on `g̃ = ρg` with the same `f`.
    pub direct_holds: bool,
    pub report: Report,
}

/// Check `2(Vρ) L_V g = [f(Vρ) − V(Vρ)] g` against a direct recomputation on
/// the scaled metric.
pub fn conformal_change_check(spec: &Spec, field: &str, rho: &Expr, cfg: &RunConfig) -> Result<ConformalChangeOutcome> {
    let comps = spec.field(field)?.to_vec();
    let base = classify_field(spec, field, None, cfg)?;
    let mut report = Report::new(&spec.name, "conformal-change");
    report.summary("field", field);
    report.summary("rho", rho.to_string());
    report.summary("classification", base.classification.as_str());
    if !base.is_mixed() {
        report.warn(format!(
            "`{field}` is {} on the original metric; the criterion presumes a mixed Killing field",
            base.classification.as_str()
        ));
    }
    let f_const = base.f_constant;
    let scaled = scaled_spec(spec, rho);
    let points = cfg.sampling.points(spec)?;
    let tol = cfg.tol_or(PROJECTION_TOL);

    struct Row {
        identity: f64,
        direct: f64,
    }
    let res = map_points(&points, |p| {
        let rho_j = spec.eval_scalar(rho, p, 2)?;
        if rho_j.value() <= 0.0 {
            return Err(MkvError::Invalid(format!("rho must be positive; rho = {} at {p:?}", rho_j.value())));
        }
        let (geo, fa) = field_at(spec, &comps, p)?;
        let f = match f_const {
            Some(f) => f,
            None => fa.fit_factor(&geo, EPS_KILLING).map_or(0.0, |x| x.0),
        };
        let v = spec.eval_vector(&comps, p, 3)?;
        let n = geo.n;
        // Vρ as a jet, then V(Vρ)
        let mut v_rho = crate::jet::Jet::zero(n);
        for i in 0..n {
            v_rho = v_rho + &v.data[i] * &rho_j.partial(i);
        }
        let vv_rho: f64 = (0..n).map(|i| v.data[i].value() * v_rho.d(i)).sum();
        let vr = v_rho.value();
        let lhs = &fa.lie * (2.0 * vr);
        let rhs = &geo.gm * (f * vr - vv_rho);
        let identity = relative(geo.norm02(&(&lhs - &rhs)), geo.norm02(&lhs).max(geo.norm02(&rhs)));

        let (sgeo, sfa) = field_at(&scaled, &comps, p)?;
        let diff = &sfa.lie2 - &sfa.lie * f;
        let direct = relative(sgeo.norm02(&diff), sgeo.norm02(&sfa.lie2));
        Ok(Row { identity, direct })
    })?;
    report.add_failures(&res.failed);
    let identity_max = max_of(res.values().map(|r| r.identity));
    let direct_max = max_of(res.values().map(|r| r.direct));
    let identity_holds = identity_max < tol;
    let direct_holds = direct_max < tol;
    report.info("identity_residual", identity_max, tol);
    report.info("direct_scaled_residual", direct_max, tol);
    report.claim(
        "verdicts_agree",
        identity_holds == direct_holds,
        format!("identity holds: {identity_holds}, mixed Killing on ρg with the same f: {direct_holds}"),
    );
    report.summary("identity_holds", identity_holds);
    report.summary("mixed_on_scaled_metric", direct_holds);
    if let Some(f) = f_const {
        report.summary_f64("f", f);
    }
    // reclassification on the scaled metric, for information only
    let scaled_class = classify_field(&scaled, field, None, cfg)?;
    report.summary("scaled_classification", scaled_class.classification.as_str());
    if let Some(f) = scaled_class.f_constant {
        report.summary_f64("scaled_f", f);
    }
    Ok(ConformalChangeOutcome { identity_holds, direct_holds, report })
}

/// Convenience: curvature criterion, quadratic criterion and Bochner residuals at one point for a probe.
pub fn identities_at(
    spec: &Spec,
    field: &str,
    f: f64,
    y: &[f64],
    point: &[f64],
) -> Result<(f64, f64, f64)> {
    let (geo, fa) = field_at(spec, spec.field(field)?, point)?;
    let y = nalgebra::DVector::from_column_slice(y);
    Ok((fa.criterion_residual(&geo, f, &y), fa.quadratic_residual(&geo, f, &y), fa.bochner_residual(&geo, f)))
}

pub fn summary_json(k: &KillingReport) -> serde_json::Value {
    json!({
        "field": k.field,
        "classification": k.classification.as_str(),
        "subclass": k.subclass.map(Subclass::as_str),
        "f": k.f_constant,
        "lambda": k.lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::Sampling;
    use crate::spec::SpecBuilder;

    fn flat(fields: &[(&str, [&str; 3])]) -> Spec {
        let mut b = SpecBuilder::new("flat", &["x", "y", "z"]).diagonal_metric(&["1", "1", "1"]).unwrap();
        for (name, comps) in fields {
            b = b.field(name, comps).unwrap();
        }
        b.build()
    }

    fn cfg() -> RunConfig {
        RunConfig { sampling: Sampling { grid: 3, random: 4, ..Sampling::default() }, tol: None }
    }

    #[test]
    fn example_field_is_homothetic_with_factor_two() {
        let s = flat(&[("V", ["x", "y - z", "y + z"])]);
        let k = classify_field(&s, "V", None, &cfg()).unwrap();
        assert_eq!(k.classification, Classification::MixedKilling);
        assert_eq!(k.subclass, Some(Subclass::Homothetic));
        assert!((k.f_constant.unwrap() - 2.0).abs() < 1e-12);
        assert!(k.report.passed(), "{}", k.report.to_text());
    }

    #[test]
    fn translations_and_rotations_are_killing() {
        let s = flat(&[("T", ["1", "0", "0"]), ("R", ["y", "-x", "0"])]);
        for f in ["T", "R"] {
            let k = classify_field(&s, f, None, &cfg()).unwrap();
            assert_eq!(k.classification, Classification::Killing);
        }
    }

    #[test]
    fn anisotropic_scaling_is_mixed_by_projection() {
        let s = flat(&[("V", ["x", "1", "0"])]);
        let k = classify_field(&s, "V", None, &cfg()).unwrap();
        assert_eq!(k.classification, Classification::MixedKilling);
        assert_eq!(k.subclass, Some(Subclass::Projection));
        assert!((k.f_constant.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn generic_field_is_none() {
        let s = flat(&[("V", ["x*y", "z^2", "x"])]);
        let k = classify_field(&s, "V", None, &cfg()).unwrap();
        assert_eq!(k.classification, Classification::None);
    }

    #[test]
    fn doubling_the_field_doubles_the_factor() {
        let s = flat(&[("V", ["x", "y - z", "y + z"]), ("W", ["2*x", "2*(y - z)", "2*(y + z)"])]);
        let a = classify_field(&s, "V", None, &cfg()).unwrap();
        let b = classify_field(&s, "W", None, &cfg()).unwrap();
        assert!((b.f_constant.unwrap() - 2.0 * a.f_constant.unwrap()).abs() < 1e-10);
    }

    #[test]
    fn killing_point_has_no_factor() {
        let s = flat(&[("T", ["1", "0", "0"])]);
        assert!(estimate_factor(&s, "T", &[0.0, 0.0, 0.0]).is_err());
    }
}
