//! Checks tying the Reeb field and fields built from it to the tensor `h`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::contact::{self, StructureAt, StructureSample, H_ZERO_TOL, IDENTITY_TOL};
use crate::error::Result;
use crate::expr::Expr;
use crate::geometry::{basis, FieldAt, Geometry};
use crate::jet::{self, Jet};
use crate::killing::{classify_field, Classification, KillingReport, EPS_KILLING};
use crate::report::{max_of, Detail, Report};
use crate::sampling::{map_points, RunConfig};
use crate::spec::Spec;
use crate::tensor::{relative, Tensor};

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

struct ReebSample {
    structure: StructureSample,
    first_lie: f64,
    second_lie: f64,
    h_norm: f64,
    lie2_norm: f64,
    lie2_max_component: f64,
    nabla_xi_h: f64,
    phi_h2: f64,
    two_killing_formula: f64,
    r_y_xi_xi: f64,
    q_xi: f64,
    xi_r: f64,
    ricci_3d: Option<f64>,
    nabla_xi_hp_formula: f64,
}

fn reeb_sample(spec: &Spec, p: &[f64], f: f64) -> Result<ReebSample> {
    let geo = Geometry::at(spec, p)?;
    let st = StructureAt::new(spec, &geo)?;
    let xi = spec.eval_vector(&spec.structure()?.xi, p, 3)?;
    let fa = FieldAt::new(&geo, &xi)?;
    let g = &geo.gm;
    let h2 = &st.h * &st.h;
    let first = (g * &st.hp * 2.0).transpose();
    let second = (g * (&h2 * 4.0 + st.nabla_xi_hp() * 2.0)).transpose();
    let nabla_xi_h = st.nabla_xi_h();
    let phi_h2 = &st.phi * &h2;
    let n = geo.n;
    let mut r_y_xi_xi: f64 = 0.0;
    for y in basis(n) {
        r_y_xi_xi = r_y_xi_xi.max(geo.vnorm(&geo.curvature(&y, &st.xi, &st.xi)));
    }
    let q = geo.ricci_operator();
    let r = geo.scalar();
    let ricci_3d = (n == 3).then(|| {
        let id = DMatrix::<f64>::identity(n, n);
        geo.norm11(&(&q - (&id - st.eta_xi()) * (0.5 * r)))
    });
    Ok(ReebSample {
        structure: StructureSample::compute(&geo, &st),
        first_lie: relative(geo.norm02(&(&fa.lie - &first)), geo.norm02(&fa.lie)),
        second_lie: relative(geo.norm02(&(&fa.lie2 - &second)), geo.norm02(&fa.lie2)),
        h_norm: geo.norm11(&st.h),
        lie2_norm: geo.norm02(&fa.lie2),
        lie2_max_component: max_abs(&fa.lie2),
        nabla_xi_h: geo.norm11(&nabla_xi_h),
        phi_h2: geo.norm11(&phi_h2),
        two_killing_formula: geo.norm11(&(&nabla_xi_h + &phi_h2 * 2.0)),
        r_y_xi_xi,
        q_xi: geo.vnorm(&(&q * &st.xi)),
        xi_r: (0..n).map(|c| geo.r.d(c) * st.xi[c]).sum::<f64>().abs(),
        ricci_3d,
        nabla_xi_hp_formula: geo.norm11(&(st.nabla_xi_hp() - &st.hp * f + &h2 * 2.0)),
    })
}

fn structure_rows(report: &mut Report, samples: &crate::sampling::PointResults<StructureSample>, cfg: &RunConfig) -> bool {
    let ok = contact::validate_rows(report, samples, cfg, true);
    contact::almost_cokahler_rows(report, samples, cfg, true) && ok
}

fn structure_samples(
    res: &crate::sampling::PointResults<ReebSample>,
) -> crate::sampling::PointResults<StructureSample> {
    crate::sampling::PointResults {
        ok: res.ok.iter().map(|(p, s)| (p.clone(), s.structure.clone())).collect(),
        failed: res.failed.clone(),
    }
}

/// Outcome of the Reeb-field analysis.
#[derive(Clone, Debug)]
pub struct ReebOutcome {
    pub classification: Classification,
    pub killing_like: bool,
    pub h_zero: bool,
    pub max_h_norm: f64,
    pub report: Report,
}

/// Lie-derivative formulas for `ξ`, the classification of `ξ` and the
/// equivalence "ξ mixed Killing ⟺ h = 0".
pub fn reeb_mixed_killing_check(spec: &Spec, cfg: &RunConfig) -> Result<ReebOutcome> {
    spec.structure()?;
    let class = classify_field(spec, "xi", None, cfg)?;
    let f = class.f_constant.unwrap_or(0.0);
    let points = cfg.sampling.points(spec)?;
    let res = map_points(&points, |p| reeb_sample(spec, p, f))?;
    let mut r = Report::new(&spec.name, "reeb");
    r.add_failures(&res.failed);
    let ss = structure_samples(&res);
    structure_rows(&mut r, &ss, cfg);
    let tol = cfg.tol_or(IDENTITY_TOL);
    r.check("lie_xi_g_formula", max_of(res.values().map(|s| s.first_lie)), tol);
    r.check("second_lie_xi_g_formula", max_of(res.values().map(|s| s.second_lie)), tol);
    let max_h = max_of(res.values().map(|s| s.h_norm));
    let h_zero = max_h < H_ZERO_TOL;
    let killing_like = class.classification == Classification::Killing
        || (class.is_mixed() && class.max_lie_norm < EPS_KILLING);
    r.info("h_norm", max_h, H_ZERO_TOL);
    r.claim(
        "mixed_killing_iff_h_zero",
        killing_like == h_zero,
        format!("ξ is {}; max ‖h‖ = {max_h:.3e}", class.classification.as_str()),
    );
    let xi_mixed = killing_like || class.is_mixed();
    if xi_mixed {
        r.check("nabla_xi_h_prime_formula", max_of(res.values().map(|s| s.nabla_xi_hp_formula)), tol);
        r.check("curvature_r_y_xi_xi", max_of(res.values().map(|s| s.r_y_xi_xi)), tol);
        r.check("ricci_of_xi_zero", max_of(res.values().map(|s| s.q_xi)), tol);
        r.check("xi_scalar_curvature_zero", max_of(res.values().map(|s| s.xi_r)), 1e-6);
        if res.values().all(|s| s.ricci_3d.is_some()) {
            r.check("ricci_operator_3d_form", max_of(res.values().map(|s| s.ricci_3d.unwrap_or(0.0))), tol);
        }
    }
    r.summary("classification", class.classification.as_str());
    r.summary_f64("max_h_norm", max_h);
    r.summary("h_zero", h_zero);
    r.summary("xi_mixed_killing", xi_mixed);
    r.summary_f64("max_second_lie_component", max_of(res.values().map(|s| s.lie2_max_component)));
    for (p, s) in &res.ok {
        let mut fitted = BTreeMap::new();
        fitted.insert("h_norm".to_string(), s.h_norm);
        fitted.insert("tr_h2".to_string(), s.structure.tr_h2);
        r.details.push(Detail { point: p.clone(), residual: s.first_lie.max(s.second_lie), fitted });
    }
    Ok(ReebOutcome { classification: class.classification, killing_like, h_zero, max_h_norm: max_h, report: r })
}

/// Outcome of the 2-Killing test for `ξ`.
#[derive(Clone, Debug)]
pub struct TwoKillingOutcome {
    pub direct: bool,
    pub formula: bool,
    pub max_nabla_xi_h: f64,
    pub max_phi_h2: f64,
    pub max_second_lie_component: f64,
    pub report: Report,
}

/// `L_ξL_ξg = 0` computed directly against `∇_ξh + 2φh² = 0`.
pub fn two_killing_reeb_check(spec: &Spec, cfg: &RunConfig) -> Result<TwoKillingOutcome> {
    spec.structure()?;
    let points = cfg.sampling.points(spec)?;
    let res = map_points(&points, |p| reeb_sample(spec, p, 0.0))?;
    let mut r = Report::new(&spec.name, "two-killing-reeb");
    r.add_failures(&res.failed);
    let ss = structure_samples(&res);
    structure_rows(&mut r, &ss, cfg);
    let lie2 = max_of(res.values().map(|s| s.lie2_norm));
    let formula_res = max_of(res.values().map(|s| s.two_killing_formula));
    let direct = lie2 < EPS_KILLING;
    let formula = formula_res < EPS_KILLING;
    r.info("second_lie_norm", lie2, EPS_KILLING);
    r.info("nabla_xi_h_plus_2_phi_h2", formula_res, EPS_KILLING);
    let max_nabla_xi_h = max_of(res.values().map(|s| s.nabla_xi_h));
    let max_phi_h2 = max_of(res.values().map(|s| s.phi_h2));
    let max_second_lie_component = max_of(res.values().map(|s| s.lie2_max_component));
    r.info("nabla_xi_h_norm", max_nabla_xi_h, EPS_KILLING);
    r.info("phi_h2_norm", max_phi_h2, EPS_KILLING);
    r.claim(
        "verdicts_agree",
        direct == formula,
        format!("L_ξL_ξg = 0: {direct}; ∇_ξh = −2φh²: {formula}"),
    );
    r.summary("two_killing", direct);
    r.summary_f64("max_second_lie_component", max_second_lie_component);
    Ok(TwoKillingOutcome { direct, formula, max_nabla_xi_h, max_phi_h2, max_second_lie_component, report: r })
}

/// `V = αξ` as a vector of expressions.
pub fn collinear_components(spec: &Spec, alpha: &Expr) -> Result<Vec<Expr>> {
    Ok(spec.structure()?.xi.iter().map(|x| Expr::mul(alpha.clone(), x.clone())).collect())
}

#[derive(Clone, Debug)]
pub struct CollinearOutcome {
    pub classification: Classification,
    pub max_o1: f64,
    pub max_o2: f64,
    /// Both necessary conditions hold at every sample point.
    pub necessary_pair_holds: bool,
    pub report: Report,
}

pub const COLLINEAR_FIELD: &str = "alpha_xi";

/// Necessary conditions for `V = αξ` to be mixed Killing.
pub fn collinear_field_check(spec: &Spec, alpha: &Expr, f: Option<&Expr>, cfg: &RunConfig) -> Result<CollinearOutcome> {
    let comps = collinear_components(spec, alpha)?;
    let mut s2 = spec.clone();
    s2.fields.insert(COLLINEAR_FIELD.to_string(), comps.clone());
    let class: KillingReport = classify_field(&s2, COLLINEAR_FIELD, f, cfg)?;
    let points = cfg.sampling.points(spec)?;
    let res = map_points(&points, |p| {
        let geo = Geometry::at(spec, p)?;
        let st = StructureAt::new(spec, &geo)?;
        let a = spec.eval_scalar(alpha, p, 2)?;
        let fv = match f {
            Some(e) => spec.eval_scalar(e, p, 0)?.value(),
            None => {
                let v = s2.eval_vector(&comps, p, 3)?;
                FieldAt::new(&geo, &v)?.fit_factor(&geo, EPS_KILLING).map_or(0.0, |x| x.0)
            }
        };
        Ok(collinear_residuals(&geo, &st, &a, fv))
    })?;
    let mut r = Report::new(&spec.name, "collinear");
    r.add_failures(&res.failed);
    let zero_alpha = res.values().all(|x| x.2.abs() < 1e-14);
    if zero_alpha {
        r.warn("α vanishes at every sample point; V = 0 is trivially Killing");
    } else if res.values().any(|x| x.2.abs() < 1e-12) {
        r.warn("α vanishes at some sample points");
    }
    let max_o1 = max_of(res.values().map(|x| x.0));
    let max_o2 = max_of(res.values().map(|x| x.1));
    let tol = cfg.tol_or(IDENTITY_TOL);
    let necessary_pair_holds = max_o1 < tol && max_o2 < tol;
    if class.is_mixed() {
        r.check("o1_residual", max_o1, tol);
        r.check("o2_residual", max_o2, tol);
    } else {
        r.info("o1_residual", max_o1, tol);
        r.info("o2_residual", max_o2, tol);
    }
    r.summary("alpha", alpha.to_string());
    r.summary("classification", class.classification.as_str());
    r.summary("necessary_pair_holds", necessary_pair_holds);
    for (p, x) in &res.ok {
        let mut fitted = BTreeMap::new();
        fitted.insert("o1".to_string(), x.0);
        fitted.insert("o2".to_string(), x.1);
        fitted.insert("alpha".to_string(), x.2);
        r.details.push(Detail { point: p.clone(), residual: x.0.max(x.1), fitted });
    }
    Ok(CollinearOutcome { classification: class.classification, max_o1, max_o2, necessary_pair_holds, report: r })
}

/// Relative residuals of the two conditions and the value of α.
fn collinear_residuals(geo: &Geometry, st: &StructureAt, a: &Jet, f: f64) -> (f64, f64, f64) {
    let n = geo.n;
    let alpha = a.value();
    let da = DVector::from_vec(a.gradient());
    let grad = &geo.ginvm * &da;
    let xi_a = da.dot(&st.xi);
    let h2 = &st.h * &st.h;
    let nxh = st.nabla_xi_h();
    let tangential = &grad - &st.xi * xi_a;
    let mut o1: f64 = 0.0;
    for x in basis(n) {
        let phix_a = da.dot(&(&st.phi * &x));
        let lhs = &nxh * &x * (alpha * alpha);
        let rhs = &tangential * phix_a + &st.phi * &h2 * &x * (alpha * alpha) + &st.h * &x * (alpha * (f + alpha - xi_a));
        let scale = geo.vnorm(&lhs).max(geo.vnorm(&rhs));
        o1 = o1.max(relative(geo.vnorm(&(lhs - rhs)), scale));
    }
    let grad_sq = geo.inner(&grad, &grad);
    let rhs2 = grad_sq + alpha * alpha * h2.trace();
    let o2 = relative((xi_a * xi_a - rhs2).abs(), rhs2.abs().max(xi_a * xi_a));
    (o1, o2, alpha)
}

#[derive(Clone, Debug)]
pub struct ContactTransformOutcome {
    /// `σ` per sample point.
    pub sigma: Vec<(Vec<f64>, f64)>,
    pub max_residual: f64,
    pub report: Report,
}

/// Fit `L_Vη = ση` and, on structures with `h = 0`, check `grad σ = (ξσ)ξ`.
pub fn contact_transformation_check(spec: &Spec, field: &str, cfg: &RunConfig) -> Result<ContactTransformOutcome> {
    let comps = spec.field(field)?.to_vec();
    spec.structure()?;
    let points = cfg.sampling.points(spec)?;
    struct Row {
        sigma: f64,
        residual: f64,
        grad_defect: f64,
        h_norm: f64,
    }
    let res = map_points(&points, |p| {
        let geo = Geometry::at(spec, p)?;
        let st = StructureAt::new(spec, &geo)?;
        let v = spec.eval_vector(&comps, p, 3)?;
        let n = geo.n;
        let xi = spec.eval_vector(&spec.structure()?.xi, p, 3)?;
        let lv_eta: Tensor<Jet> = st.eta_jets.lie(&v);
        let sigma = jet::sum(n, (0..n).map(|i| &lv_eta.data[i] * &xi.data[i]).collect::<Vec<_>>().iter());
        let lv = lv_eta.values().vector();
        let diff = &lv - &st.eta * sigma.value();
        let conorm = |w: &DVector<f64>| (w.transpose() * &geo.ginvm * w)[(0, 0)].abs().sqrt();
        let residual = relative(conorm(&diff), conorm(&lv));
        let ds = DVector::from_vec(sigma.gradient());
        let grad = &geo.ginvm * &ds;
        let xi_s = ds.dot(&st.xi);
        let grad_defect = geo.vnorm(&(grad - &st.xi * xi_s));
        Ok(Row { sigma: sigma.value(), residual, grad_defect, h_norm: geo.norm11(&st.h) })
    })?;
    let mut r = Report::new(&spec.name, "contact-transformation");
    r.add_failures(&res.failed);
    let tol = cfg.tol_or(IDENTITY_TOL);
    let max_residual = max_of(res.values().map(|x| x.residual));
    r.info("sigma_fit_residual", max_residual, tol);
    let h_zero = max_of(res.values().map(|x| x.h_norm)) < H_ZERO_TOL;
    let grad_defect = max_of(res.values().map(|x| x.grad_defect));
    if h_zero && max_residual < tol {
        r.check("grad_sigma_along_xi", grad_defect, 1e-6);
    } else {
        r.info("grad_sigma_along_xi", grad_defect, 1e-6);
    }
    r.summary("field", field);
    r.summary("contact_transformation", max_residual < tol);
    let sigmas: Vec<f64> = res.values().map(|x| x.sigma).collect();
    let lo = sigmas.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = sigmas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !sigmas.is_empty() && hi - lo < 1e-6 * (1.0 + lo.abs()) {
        r.summary_f64("sigma", sigmas[0]);
    }
    for (p, x) in &res.ok {
        let mut fitted = BTreeMap::new();
        fitted.insert("sigma".to_string(), x.sigma);
        r.details.push(Detail { point: p.clone(), residual: x.residual, fitted });
    }
    let sigma = res.ok.iter().map(|(p, x)| (p.clone(), x.sigma)).collect();
    Ok(ContactTransformOutcome { sigma, max_residual, report: r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::Sampling;
    use crate::spec::SpecBuilder;

    fn cfg() -> RunConfig {
        RunConfig { sampling: Sampling { grid: 3, random: 2, ..Sampling::default() }, tol: None }
    }

    fn flat() -> Spec {
        SpecBuilder::new("flat", &["x", "y", "z"])
            .diagonal_metric(&["1", "1", "1"])
            .unwrap()
            .field("E", &["x", "y", "z"])
            .unwrap()
            .structure(&["1", "0", "0"], None, &[
                vec!["0", "0", "0"],
                vec!["0", "0", "-1"],
                vec!["0", "1", "0"],
            ])
            .unwrap()
            .build()
    }

    #[test]
    fn flat_reeb_is_killing_with_h_zero() {
        let out = reeb_mixed_killing_check(&flat(), &cfg()).unwrap();
        assert!(out.report.passed(), "{}", out.report.to_text());
        assert_eq!(out.classification, Classification::Killing);
        assert!(out.h_zero);
    }

    #[test]
    fn euler_field_scales_eta() {
        let out = contact_transformation_check(&flat(), "E", &cfg()).unwrap();
        assert!(out.report.passed());
        assert!(out.max_residual < 1e-14);
        assert!(out.sigma.iter().all(|(_, s)| (s - 1.0).abs() < 1e-14));
    }

    #[test]
    fn collinear_linear_alpha_is_mixed_on_flat() {
        let s = flat();
        let alpha = s.parse_expr("x", "alpha").unwrap();
        let out = collinear_field_check(&s, &alpha, None, &cfg()).unwrap();
        assert_eq!(out.classification, Classification::MixedKilling);
        assert!(out.report.passed(), "{}", out.report.to_text());
    }
}
