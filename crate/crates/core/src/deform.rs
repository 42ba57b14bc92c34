//! D-homothetic deformations `φ' = φ, ξ' = ξ/u, η' = uη,
//! g' = cg + (u² − c)η⊗η`, built at the expression level.

use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::contact::{self, StructureAt};
use crate::error::{MkvError, Result};
use crate::expr::Expr;
use crate::geometry::Geometry;
use crate::report::{max_of, Detail, Report};
use crate::sampling::{map_points, RunConfig};
use crate::spec::{Spec, StructureSpec};
use crate::tensor::relative;

pub const H_SCALING_TOL: f64 = 1e-8;
const OFF_XI_TOL: f64 = 1e-8;

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 1.0)
}

fn mul(a: Expr, b: Expr) -> Expr {
    if a.is_zero_literal() || b.is_zero_literal() {
        Expr::num(0.0)
    } else if is_one(&a) {
        b
    } else if is_one(&b) {
        a
    } else {
        Expr::mul(a, b)
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    if a.is_zero_literal() {
        b
    } else if b.is_zero_literal() {
        a
    } else {
        Expr::add(a, b)
    }
}

fn div(a: Expr, b: &Expr) -> Expr {
    if a.is_zero_literal() || is_one(b) {
        a
    } else {
        Expr::div(a, b.clone())
    }
}

/// `η_i = g_ij ξ^j` as expressions (or the given `η`).
fn eta_exprs(spec: &Spec, s: &StructureSpec) -> Vec<Expr> {
    if let Some(e) = &s.eta {
        return e.clone();
    }
    let n = spec.dim();
    (0..n)
        .map(|i| (0..n).fold(Expr::num(0.0), |acc, j| add(acc, mul(spec.metric[i][j].clone(), s.xi[j].clone()))))
        .collect()
}

/// The deformed spec; no numerical checks.
pub fn deformed_spec(spec: &Spec, u: &Expr, c: f64) -> Result<Spec> {
    let s = spec.structure()?.clone();
    let n = spec.dim();
    let eta = eta_exprs(spec, &s);
    let u2_minus_c = if is_one(u) && c == 1.0 {
        Expr::num(0.0)
    } else {
        Expr::sub(Expr::pow(u.clone(), Expr::num(2.0)), Expr::num(c))
    };
    let cexpr = Expr::num(c);
    let metric = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let base = mul(cexpr.clone(), spec.metric[i][j].clone());
                    add(base, mul(u2_minus_c.clone(), mul(eta[i].clone(), eta[j].clone())))
                })
                .collect()
        })
        .collect();
    let mut out = spec.clone();
    out.name = format!("{}-deformed", spec.name);
    out.metric = metric;
    out.structure = Some(StructureSpec {
        xi: s.xi.iter().map(|x| div(x.clone(), u)).collect(),
        eta: Some(eta.iter().map(|e| mul(u.clone(), e.clone())).collect()),
        phi: s.phi.clone(),
    });
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct DeformOutcome {
    pub spec: Spec,
    pub max_h_scaling: f64,
    pub report: Report,
}

/// Deform, then check the deformed structure and `H = h/u`.
pub fn d_homothetic_deform(spec: &Spec, u: &Expr, c: f64, cfg: &RunConfig) -> Result<DeformOutcome> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(MkvError::Invalid(format!("deformation constant c must be positive, got {c}")));
    }
    let s = spec.structure()?;
    let points = cfg.sampling.points(spec)?;
    // preconditions on u: nonvanishing, varying along ξ only
    let pre = map_points(&points, |p| {
        let uj = spec.eval_scalar(u, p, 1)?;
        let phi = spec.eval_matrix(&s.phi, 1, 1, p, 0)?.values().matrix();
        let du = DVector::from_vec(uj.gradient());
        Ok((uj.value(), (phi.transpose() * du).amax()))
    })?;
    for (p, (uv, off)) in &pre.ok {
        if uv.abs() < 1e-12 {
            return Err(MkvError::Invalid(format!("u vanishes at {p:?}")));
        }
        if *off > OFF_XI_TOL {
            return Err(MkvError::Invalid(format!("u varies off the ξ direction at {p:?} (|du∘φ| = {off:e})")));
        }
    }
    let deformed = deformed_spec(spec, u, c)?;
    let res = map_points(&points, |p| {
        let geo = Geometry::at(spec, p)?;
        let st = StructureAt::new(spec, &geo)?;
        let dgeo = Geometry::at(&deformed, p)?;
        let dst = StructureAt::new(&deformed, &dgeo)?;
        let uv = spec.eval_scalar(u, p, 0)?.value();
        let expect = &st.h / uv;
        let diff = (&dst.h - &expect).amax();
        Ok((relative(diff, expect.amax()), dst.h.amax()))
    })?;
    let mut r = Report::new(&deformed.name, "deform");
    r.add_failures(&pre.failed);
    r.add_failures(&res.failed);
    let samples = contact::sample_structure(&deformed, cfg)?;
    let ok = contact::validate_rows(&mut r, &samples, cfg, true);
    contact::almost_cokahler_rows(&mut r, &samples, cfg, true);
    if !ok {
        r.warn("deformed structure fails the almost contact metric axioms");
    }
    let max_h_scaling = max_of(res.values().map(|x| x.0));
    r.check("h_scales_by_one_over_u", max_h_scaling, cfg.tol_or(H_SCALING_TOL));
    r.summary("u", u.to_string());
    r.summary_f64("c", c);
    r.summary_f64("max_deformed_h", max_of(res.values().map(|x| x.1)));
    for (p, x) in &res.ok {
        let mut fitted = BTreeMap::new();
        fitted.insert("deformed_h".to_string(), x.1);
        r.details.push(Detail { point: p.clone(), residual: x.0, fitted });
    }
    Ok(DeformOutcome { spec: deformed, max_h_scaling, report: r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{entry, EntryOptions};
    use crate::sampling::Sampling;

    fn cfg() -> RunConfig {
        RunConfig { sampling: Sampling { grid: 3, random: 3, ..Sampling::default() }, tol: None }
    }

    fn halfspace() -> Spec {
        entry("olszak-halfspace", &EntryOptions::default()).unwrap().spec
    }

    #[test]
    fn identity_deformation_keeps_metric() {
        let s = halfspace();
        let d = deformed_spec(&s, &Expr::num(1.0), 1.0).unwrap();
        for p in cfg().sampling.points(&s).unwrap() {
            let diff = s.metric_values(&p).unwrap() - d.metric_values(&p).unwrap();
            assert!(diff.amax() < 1e-15);
        }
    }

    #[test]
    fn constant_u_halves_h() {
        let s = halfspace();
        let out = d_homothetic_deform(&s, &Expr::num(2.0), 1.0, &cfg()).unwrap();
        assert!(out.report.passed(), "{}", out.report.to_text());
    }

    #[test]
    fn round_trip_restores_metric() {
        let s = halfspace();
        let u = s.parse_expr("1 + z^2", "u").unwrap();
        let d = deformed_spec(&s, &u, 3.0).unwrap();
        let back = deformed_spec(&d, &Expr::div(Expr::num(1.0), u.clone()), 1.0 / 3.0).unwrap();
        for p in cfg().sampling.points(&s).unwrap() {
            let diff = s.metric_values(&p).unwrap() - back.metric_values(&p).unwrap();
            assert!(diff.amax() < 1e-10, "{diff}");
        }
    }

    #[test]
    fn u_varying_off_xi_is_rejected() {
        let s = halfspace();
        let u = s.parse_expr("2 + x", "u").unwrap();
        assert!(matches!(d_homothetic_deform(&s, &u, 1.0, &cfg()), Err(MkvError::Invalid(_))));
    }
}
