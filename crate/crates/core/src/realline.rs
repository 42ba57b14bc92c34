//! Fields `V = r(x)∂x` on the Euclidean line: the factor equation, the
//! flow `dx/dt = r(x)` and the closed form of `r` along it.

use std::collections::BTreeMap;

use crate::error::{MkvError, Result};
use crate::expr::{parse, Expr};
use crate::jet::Jet;
use crate::killing::{classify_field, Classification};
use crate::report::{max_of, Detail, Report};
use crate::sampling::{RunConfig, Sampling};
use crate::spec::{Spec, SpecBuilder};

pub const DEFINITIONAL_TOL: f64 = 1e-8;
pub const FLOW_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct RealLineProblem {
    pub coord: String,
    pub r: Expr,
    /// The factor; fitted pointwise when absent.
    pub f: Option<Expr>,
    pub domain: (f64, f64),
    pub x0: f64,
    pub t_end: f64,
    pub step: f64,
}

impl RealLineProblem {
    /// Parse `r` (and `f`) in the single coordinate `coord`.
    pub fn parse(coord: &str, r: &str, f: Option<&str>) -> Result<RealLineProblem> {
        let p = |src: &str, path: &str| {
            parse(src, &[coord], &[]).map_err(|source| MkvError::Parse { path: path.into(), source })
        };
        Ok(RealLineProblem {
            coord: coord.to_string(),
            r: p(r, "r")?,
            f: f.map(|s| p(s, "f")).transpose()?,
            domain: (0.5, 10.0),
            x0: 1.0,
            t_end: 2.0,
            step: 1e-3,
        })
    }

    fn r_jet(&self, x: f64) -> Result<Jet> {
        self.r
            .eval_jet(&[x], &[], 2)
            .map_err(|source| MkvError::Eval { point: vec![x], source })
    }

    fn r_at(&self, x: f64) -> Result<f64> {
        Ok(self.r_jet(x)?.value())
    }

    fn f_at(&self, x: f64) -> Result<Option<f64>> {
        match &self.f {
            Some(f) => f.eval(&[x], &[]).map(Some).map_err(|source| MkvError::Eval { point: vec![x], source }),
            None => Ok(None),
        }
    }

    /// The line as a one-dimensional spec with `V = r ∂x`.
    pub fn spec(&self) -> Spec {
        let mut s = SpecBuilder::new("real-line", &[self.coord.as_str()])
            .domain(&self.coord, self.domain.0, self.domain.1)
            .diagonal_metric(&["1"])
            .expect("constant metric parses")
            .build();
        s.fields.insert("V".into(), vec![self.r.clone()]);
        s
    }
}

/// One step of classical RK4 for `dx/dt = r(x)`.
fn rk4(p: &RealLineProblem, x: f64, h: f64) -> Result<f64> {
    let k1 = p.r_at(x)?;
    let k2 = p.r_at(x + 0.5 * h * k1)?;
    let k3 = p.r_at(x + 0.5 * h * k2)?;
    let k4 = p.r_at(x + h * k3)?;
    Ok(x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
}

/// Integrated flow: `(t, x(t))`.
pub fn integrate(p: &RealLineProblem) -> Result<Vec<(f64, f64)>> {
    if !(p.step > 0.0) || !(p.t_end > 0.0) {
        return Err(MkvError::Invalid("step and end time must be positive".into()));
    }
    let steps = (p.t_end / p.step).round() as usize;
    let h = p.t_end / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let mut x = p.x0;
    out.push((0.0, x));
    for k in 1..=steps {
        x = rk4(p, x, h)?;
        if !x.is_finite() {
            return Err(MkvError::Invalid(format!("flow diverged at t = {}", k as f64 * h)));
        }
        out.push((k as f64 * h, x));
    }
    Ok(out)
}

/// Pointwise factor `f = (2rr'' + 4r'²)/(2r')`; `None` where `r' = 0`.
fn fitted_f(j: &Jet) -> Option<f64> {
    let (r, r1, r2) = (j.value(), j.d(0), j.d2(0, 0));
    (r1.abs() > 1e-12).then(|| (r * r2 + 2.0 * r1 * r1) / r1)
}

#[derive(Clone, Debug)]
pub struct RealLineOutcome {
    pub classification: Classification,
    pub f_constant: Option<f64>,
    /// `c` and `c'` of `r² = (c/f)e^{ft} + c'` when `f` is constant.
    pub constants: Option<(f64, f64)>,
    pub max_closed_form: Option<f64>,
    pub report: Report,
}

pub fn realline_analyze(p: &RealLineProblem, cfg: &RunConfig) -> Result<RealLineOutcome> {
    let (lo, hi) = p.domain;
    if !(lo < hi) || p.x0 < lo || p.x0 > hi {
        return Err(MkvError::Invalid(format!("x0 = {} must lie in the domain [{lo}, {hi}]", p.x0)));
    }
    let spec = p.spec();
    let mut r = Report::new("real-line", "line");
    r.summary("r", p.r.to_string());

    // definitional residual on a grid over the domain
    let grid = 1 + cfg.sampling.grid.max(2) * 8;
    let xs: Vec<f64> = (0..grid).map(|k| lo + (hi - lo) * k as f64 / (grid - 1) as f64).collect();
    let mut def_rows = Vec::new();
    for &x in &xs {
        let j = p.r_jet(x)?;
        if j.value().abs() < 1e-12 {
            return Err(MkvError::Invalid(format!("r vanishes at x = {x}")));
        }
        if let Some(&(px, _, _, _)) = def_rows.last() {
            if p.r_at(px)?.signum() != j.value().signum() {
                return Err(MkvError::Invalid(format!("r changes sign between x = {px} and x = {x}")));
            }
        }
        let (rv, r1, r2) = (j.value(), j.d(0), j.d2(0, 0));
        let f = match p.f_at(x)? {
            Some(f) => Some(f),
            None => fitted_f(&j),
        };
        let lhs = 2.0 * rv * r2 + 4.0 * r1 * r1;
        let def = f.map(|f| relative_res(lhs - f * 2.0 * r1, lhs));
        let display = f.map(|f| relative_res(rv * r2 + 2.0 * r1 * r1 - 2.0 * f * r1, rv * r2 + 2.0 * r1 * r1));
        def_rows.push((x, f, def, display));
    }
    let killing = def_rows.iter().all(|(x, ..)| p.r_jet(*x).map(|j| j.d(0).abs() < 1e-12).unwrap_or(false));

    // cross-check against the general engine on the 1D spec
    let line_cfg = RunConfig { sampling: Sampling { grid: cfg.sampling.grid, random: 0, ..Sampling::default() }, tol: None };
    let k = classify_field(&spec, "V", None, &line_cfg)?;
    r.summary("classification", k.classification.as_str());
    let fs: Vec<f64> = def_rows.iter().filter_map(|x| x.1).collect();
    let f_constant = match &p.f {
        Some(f) if f.is_coordinate_free() => f.eval(&[0.0], &[]).ok(),
        Some(_) => None,
        None => constant(&fs),
    };
    if killing {
        r.summary("f", "undefined (r' = 0, V is Killing)");
        r.claim("killing_on_line", k.classification == Classification::Killing, "r' = 0 gives L_Vg = 0");
        return Ok(RealLineOutcome { classification: k.classification, f_constant: None, constants: None, max_closed_form: None, report: r });
    }
    let def_max = max_of(def_rows.iter().filter_map(|x| x.2));
    if p.f.is_some() {
        r.check("definitional_residual", def_max, cfg.tol_or(DEFINITIONAL_TOL));
    } else {
        r.info("definitional_residual", def_max, DEFINITIONAL_TOL);
        r.note_last("f fitted pointwise");
    }
    if let (None, Some(fc), Some(kf)) = (&p.f, f_constant, k.f_constant) {
        r.check("engine_factor_agrees", (fc - kf).abs(), 1e-8);
    }
    r.info("display_x_form_residual", max_of(def_rows.iter().filter_map(|x| x.3)), DEFINITIONAL_TOL);
    r.note_last("alternative x-form rr'' + 2r'^2 = 2fr' (factor-2 convention), not asserted");
    if let Some(f) = f_constant {
        r.summary_f64("f", f);
    } else {
        r.summary("f", "varies (see details)");
    }

    // flow
    let traj = integrate(p)?;
    for &(t, x) in &traj {
        if x < lo || x > hi {
            return Err(MkvError::Invalid(format!("flow leaves the domain at t = {t} (x = {x})")));
        }
    }
    let rs: Vec<f64> = traj.iter().map(|&(_, x)| p.r_at(x)).collect::<Result<_>>()?;
    let h = if traj.len() > 1 { traj[1].0 } else { p.step };
    let mut tform: f64 = 0.0;
    let mut tdisplay: f64 = 0.0;
    for k in 2..rs.len().saturating_sub(2) {
        // fourth-order central differences of R(t) = r(x(t))
        let d1 = (rs[k - 2] - 8.0 * rs[k - 1] + 8.0 * rs[k + 1] - rs[k + 2]) / (12.0 * h);
        let d2 = (-rs[k - 2] + 16.0 * rs[k - 1] - 30.0 * rs[k] + 16.0 * rs[k + 1] - rs[k + 2]) / (12.0 * h * h);
        let x = traj[k].1;
        let f = match p.f_at(x)? {
            Some(f) => f,
            None => match fitted_f(&p.r_jet(x)?) {
                Some(f) => f,
                None => continue,
            },
        };
        let lhs = rs[k] * d2 + d1 * d1;
        tform = tform.max(relative_res(lhs - f * rs[k] * d1, lhs));
        tdisplay = tdisplay.max(relative_res(rs[k] * d2 + d1 - 2.0 * f * rs[k] * d1, lhs));
    }
    r.check("flow_t_form", tform, FLOW_TOL);
    r.info("display_t_form_residual", tdisplay, FLOW_TOL);
    r.note_last("alternative t-form r r_tt + r_t = 2f r r_t, not asserted");

    let mut constants = None;
    let mut max_closed_form = None;
    if let Some(f) = f_constant {
        let r0 = rs[0];
        let r1 = p.r_jet(p.x0)?.d(0);
        let c = 2.0 * r0 * r0 * r1;
        let cp = r0 * r0 - c / f;
        let closed = |t: f64| (c / f) * (f * t).exp() + cp;
        let dev = max_of(traj.iter().zip(&rs).map(|(&(t, _), &rv)| (rv - closed(t).max(0.0).sqrt() * rv.signum()).abs()));
        let display = max_of(traj.iter().zip(&rs).map(|(&(t, _), &rv)| (rv * rv - ((c / f) * (2.0 * f * t).exp() + cp)).abs()));
        r.check("closed_form", dev, FLOW_TOL);
        r.info("display_closed_form_residual", display, FLOW_TOL);
        r.note_last("alternative form r^2 = (c/f)exp(2ft) + c', not asserted");
        r.summary_f64("c", c);
        r.summary_f64("c_prime", cp);
        constants = Some((c, cp));
        max_closed_form = Some(dev);
    }
    for (x, f, def, _) in &def_rows {
        let mut fitted = BTreeMap::new();
        if let Some(f) = f {
            fitted.insert("f".to_string(), *f);
        }
        r.details.push(Detail { point: vec![*x], residual: def.unwrap_or(0.0), fitted });
    }
    r.summary("steps", traj.len() - 1);
    Ok(RealLineOutcome { classification: k.classification, f_constant, constants, max_closed_form, report: r })
}

fn relative_res(res: f64, scale: f64) -> f64 {
    res.abs() / (1.0 + scale.abs())
}

fn constant(values: &[f64]) -> Option<f64> {
    let first = *values.first()?;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let spread = values.iter().fold(0.0f64, |m, v| m.max((v - first).abs()));
    (spread < 1e-6 * (1.0 + mean.abs())).then_some(mean)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_field_has_factor_two_and_exponential_flow() {
        let p = RealLineProblem::parse("x", "x", None).unwrap();
        let out = realline_analyze(&p, &RunConfig::default()).unwrap();
        assert!(out.report.passed(), "{}", out.report.to_text());
        assert_eq!(out.f_constant, Some(2.0));
        let (c, cp) = out.constants.unwrap();
        assert!((c - 2.0).abs() < 1e-12 && cp.abs() < 1e-12);
        assert!(out.max_closed_form.unwrap() < 1e-6);
    }

    #[test]
    fn constant_r_is_killing() {
        let p = RealLineProblem::parse("x", "3", None).unwrap();
        let out = realline_analyze(&p, &RunConfig::default()).unwrap();
        assert_eq!(out.classification, Classification::Killing);
        assert!(out.f_constant.is_none());
    }

    #[test]
    fn vanishing_r_is_rejected() {
        let mut p = RealLineProblem::parse("x", "x - 1", None).unwrap();
        p.x0 = 1.5;
        assert!(realline_analyze(&p, &RunConfig::default()).is_err());
    }

    #[test]
    fn wrong_supplied_factor_fails() {
        let p = RealLineProblem::parse("x", "x", Some("3")).unwrap();
        let out = realline_analyze(&p, &RunConfig::default()).unwrap();
        assert!(!out.report.passed());
    }
}
