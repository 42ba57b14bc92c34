//! Built-in example manifolds with their reference frame tables, and the
//! claim checklists reproduced on them.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::contact::{self, StructureAt};
use crate::error::{MkvError, Result};
use crate::expr::Expr;
use crate::geometry::Geometry;
use crate::killing::{classify_field, Classification};
use crate::reeb::{collinear_field_check, reeb_mixed_killing_check, two_killing_reeb_check};
use crate::report::{max_of, Report};
use crate::sampling::{map_points, RunConfig};
use crate::spec::{Spec, SpecBuilder};
use crate::tensor::Tensor;

pub const ENTRIES: [&str; 4] = ["flat-r3", "olszak-halfspace", "group-H", "r-cross-s2"];

pub const FRAME_TOL: f64 = 1e-8;
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Orthonormal frame with tabulated brackets, connection and `h`-action,
/// all in frame components. Pairs absent from `brackets` or `connection`
/// are tabulated as zero.
#[derive(Clone, Debug)]
pub struct FrameTable {
    pub labels: Vec<String>,
    /// `frame[a]` holds the coordinate components of `e_a`.
    pub frame: Vec<Vec<Expr>>,
    /// `[e_a, e_b]` for `a < b`.
    pub brackets: BTreeMap<(usize, usize), Vec<Expr>>,
    /// `∇_{e_a} e_b`.
    pub connection: BTreeMap<(usize, usize), Vec<Expr>>,
    /// `h e_a`, when tabulated.
    pub h_action: Option<Vec<Vec<Expr>>>,
}

#[derive(Clone, Debug)]
pub struct Entry {
    pub name: String,
    pub description: String,
    pub spec: Spec,
    pub frame: Option<FrameTable>,
}

pub fn catalog_list() -> Vec<&'static str> {
    ENTRIES.to_vec()
}

/// Options for building an entry: `n` for `group-H`, parameter overrides.
#[derive(Clone, Debug, Default)]
pub struct EntryOptions {
    pub n: Option<usize>,
    pub params: Vec<(String, f64)>,
}

pub fn entry(name: &str, opts: &EntryOptions) -> Result<Entry> {
    let mut e = match name {
        "flat-r3" => flat_r3()?,
        "olszak-halfspace" => halfspace()?,
        "group-H" => group_h(opts.n.unwrap_or(1))?,
        "r-cross-s2" => r_cross_s2()?,
        other => return Err(MkvError::UnknownEntry(other.to_string())),
    };
    for (k, v) in &opts.params {
        e.spec.set_param(k, *v)?;
    }
    Ok(e)
}

/// Rebuild an entry around an imported spec whose name is a catalog entry,
/// keeping the spec's parameters and domain.
pub fn entry_for_spec(spec: &Spec) -> Result<Entry> {
    let n = (spec.name == "group-H").then(|| spec.dim().saturating_sub(1) / 2);
    let mut e = entry(&spec.name, &EntryOptions { n, params: Vec::new() })?;
    if e.spec.dim() != spec.dim() {
        return Err(MkvError::Invalid(format!("`{}` has dimension {}, the catalog entry {}", spec.name, spec.dim(), e.spec.dim())));
    }
    let table = e.frame.take().map(|t| reparse_table(&t, spec)).transpose()?;
    Ok(Entry { name: e.name, description: e.description, spec: spec.clone(), frame: table })
}

fn reparse_table(t: &FrameTable, spec: &Spec) -> Result<FrameTable> {
    let re = |e: &Expr| spec.parse_expr(&e.to_string(), "frame");
    let vecs = |v: &Vec<Expr>| v.iter().map(re).collect::<Result<Vec<_>>>();
    let map = |m: &BTreeMap<(usize, usize), Vec<Expr>>| {
        m.iter().map(|(k, v)| Ok((*k, vecs(v)?))).collect::<Result<BTreeMap<_, _>>>()
    };
    Ok(FrameTable {
        labels: t.labels.clone(),
        frame: t.frame.iter().map(vecs).collect::<Result<_>>()?,
        brackets: map(&t.brackets)?,
        connection: map(&t.connection)?,
        h_action: t.h_action.as_ref().map(|h| h.iter().map(vecs).collect::<Result<Vec<_>>>()).transpose()?,
    })
}

struct TableBuilder<'a> {
    spec: &'a Spec,
    n: usize,
    table: FrameTable,
}

impl<'a> TableBuilder<'a> {
    fn new(spec: &'a Spec, labels: &[String], frame: &[Vec<String>]) -> Result<Self> {
        let n = spec.dim();
        let frame = frame
            .iter()
            .enumerate()
            .map(|(a, comps)| {
                comps.iter().enumerate().map(|(i, s)| spec.parse_expr(s, &format!("frame[{a}][{i}]"))).collect()
            })
            .collect::<Result<Vec<Vec<Expr>>>>()?;
        Ok(TableBuilder {
            spec,
            n,
            table: FrameTable {
                labels: labels.to_vec(),
                frame,
                brackets: BTreeMap::new(),
                connection: BTreeMap::new(),
                h_action: None,
            },
        })
    }

    /// Frame components from `(index, coefficient)` terms.
    fn combo(&self, terms: &[(usize, String)], path: &str) -> Result<Vec<Expr>> {
        let mut out = vec![Expr::num(0.0); self.n];
        for (i, c) in terms {
            out[*i] = self.spec.parse_expr(c, path)?;
        }
        Ok(out)
    }

    fn bracket(&mut self, a: usize, b: usize, terms: &[(usize, String)]) -> Result<()> {
        let v = self.combo(terms, &format!("bracket[{a}][{b}]"))?;
        self.table.brackets.insert((a, b), v);
        Ok(())
    }

    fn connection(&mut self, a: usize, b: usize, terms: &[(usize, String)]) -> Result<()> {
        let v = self.combo(terms, &format!("connection[{a}][{b}]"))?;
        self.table.connection.insert((a, b), v);
        Ok(())
    }

    fn h_action(&mut self, rows: &[Vec<(usize, String)>]) -> Result<()> {
        let h = rows.iter().enumerate().map(|(a, t)| self.combo(t, &format!("h[{a}]"))).collect::<Result<_>>()?;
        self.table.h_action = Some(h);
        Ok(())
    }
}

fn t(i: usize, c: &str) -> (usize, String) {
    (i, c.to_string())
}

fn strs(rows: &[&[&str]]) -> Vec<Vec<String>> {
    rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect()
}

fn flat_r3() -> Result<Entry> {
    let spec = SpecBuilder::new("flat-r3", &["x", "y", "z"])
        .diagonal_metric(&["1", "1", "1"])?
        .field("V", &["x", "y - z", "y + z"])?
        .structure(&["1", "0", "0"], Some(&["1", "0", "0"]), &[
            vec!["0", "0", "0"],
            vec!["0", "0", "-1"],
            vec!["0", "1", "0"],
        ])?
        .build();
    let labels: Vec<String> = ["∂x", "∂y", "∂z"].iter().map(|s| s.to_string()).collect();
    let mut tb = TableBuilder::new(&spec, &labels, &strs(&[&["1", "0", "0"], &["0", "1", "0"], &["0", "0", "1"]]))?;
    tb.h_action(&[vec![], vec![], vec![]])?;
    let table = tb.table;
    Ok(Entry {
        name: "flat-r3".into(),
        description: "Euclidean 3-space with the coKähler structure ξ = ∂x, φ∂y = ∂z, φ∂z = −∂y".into(),
        spec,
        frame: Some(table),
    })
}

fn halfspace() -> Result<Entry> {
    let spec = SpecBuilder::new("olszak-halfspace", &["x", "y", "z"])
        .domain("z", 0.25, 4.0)
        .param("a", 1.0)
        .diagonal_metric(&["z^2", "exp(2*a*x)/z^2", "1"])?
        .structure(&["0", "0", "1"], Some(&["0", "0", "1"]), &[
            vec!["0", "-exp(a*x)/z^2", "0"],
            vec!["z^2*exp(-a*x)", "0", "0"],
            vec!["0", "0", "0"],
        ])?
        .build();
    let labels: Vec<String> = ["e1", "e2", "e3"].iter().map(|s| s.to_string()).collect();
    let mut tb = TableBuilder::new(&spec, &labels, &strs(&[&["1/z", "0", "0"], &["0", "z*exp(-a*x)", "0"], &["0", "0", "1"]]))?;
    tb.bracket(0, 1, &[t(1, "-a/z")])?;
    tb.bracket(0, 2, &[t(0, "1/z")])?;
    tb.bracket(1, 2, &[t(1, "-1/z")])?;
    tb.connection(0, 0, &[t(2, "-1/z")])?;
    tb.connection(1, 0, &[t(1, "a/z")])?;
    tb.connection(2, 0, &[])?;
    tb.connection(0, 1, &[])?;
    tb.connection(1, 1, &[t(0, "-a/z"), t(2, "1/z")])?;
    tb.connection(2, 1, &[])?;
    tb.connection(0, 2, &[t(0, "1/z")])?;
    tb.connection(1, 2, &[t(1, "-1/z")])?;
    tb.connection(2, 2, &[])?;
    tb.h_action(&[vec![t(1, "1/z")], vec![t(0, "1/z")], vec![]])?;
    let table = tb.table;
    Ok(Entry {
        name: "olszak-halfspace".into(),
        description: "Half-space z > 0 with g = z²dx² + e^{2ax}/z² dy² + dz², ξ = ∂z; almost coKähler, not coKähler".into(),
        spec,
        frame: Some(table),
    })
}

fn group_h(n: usize) -> Result<Entry> {
    if n == 0 {
        return Err(MkvError::Invalid("group-H needs n ≥ 1".into()));
    }
    let dim = 2 * n + 1;
    let coords: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    let coord_refs: Vec<&str> = coords.iter().map(String::as_str).collect();
    let mut b = SpecBuilder::new("group-H", &coord_refs);
    for k in 1..=n {
        // a_1 = 1 and later a_k halved, so Σ a_k² > 0 by default
        b = b.param(&format!("a{k}"), 1.0 / (1u32 << (k - 1)) as f64);
    }
    let mut diag = vec!["1".to_string()];
    for k in 1..=n {
        diag.push(format!("exp(2*a{k}*x0)"));
    }
    for k in 1..=n {
        diag.push(format!("exp(-2*a{k}*x0)"));
    }
    let diag_refs: Vec<&str> = diag.iter().map(String::as_str).collect();
    let mut phi = vec![vec!["0".to_string(); dim]; dim];
    for k in 1..=n {
        let kp = k + n;
        // φ e_k = e_k', φ e_k' = −e_k
        phi[kp][k] = format!("exp(2*a{k}*x0)");
        phi[k][kp] = format!("-exp(-2*a{k}*x0)");
    }
    let phi_refs: Vec<Vec<&str>> = phi.iter().map(|r| r.iter().map(String::as_str).collect()).collect();
    let mut xi = vec!["0"; dim];
    xi[0] = "1";
    let spec = b.diagonal_metric(&diag_refs)?.structure(&xi, Some(&xi), &phi_refs)?.build();

    let mut labels = vec!["e0".to_string()];
    labels.extend((1..=n).map(|k| format!("e{k}")));
    labels.extend((1..=n).map(|k| format!("e{k}'")));
    let frame: Vec<Vec<String>> = (0..dim)
        .map(|a| {
            let mut v = vec!["0".to_string(); dim];
            v[a] = match a {
                0 => "1".into(),
                k if k <= n => format!("exp(-a{k}*x0)"),
                kp => format!("exp(a{}*x0)", kp - n),
            };
            v
        })
        .collect();
    let mut tb = TableBuilder::new(&spec, &labels, &frame)?;
    for k in 1..=n {
        let kp = k + n;
        let a = format!("a{k}");
        tb.bracket(0, k, &[t(k, &format!("-{a}"))])?;
        tb.bracket(0, kp, &[t(kp, &a)])?;
        tb.connection(k, 0, &[t(k, &a)])?;
        tb.connection(kp, 0, &[t(kp, &format!("-{a}"))])?;
        tb.connection(k, k, &[t(0, &format!("-{a}"))])?;
        tb.connection(kp, kp, &[t(0, &a)])?;
    }
    let mut h = vec![Vec::new(); dim];
    for k in 1..=n {
        h[k] = vec![t(k + n, &format!("a{k}"))];
        h[k + n] = vec![t(k, &format!("a{k}"))];
    }
    tb.h_action(&h)?;
    let table = tb.table;
    Ok(Entry {
        name: "group-H".into(),
        description: format!(
            "Solvable group ℝ ⋉ ℝ^{} with left-invariant orthonormal frame; almost coKähler with flat Kählerian leaves",
            2 * n
        ),
        spec,
        frame: Some(table),
    })
}

fn r_cross_s2() -> Result<Entry> {
    let spec = SpecBuilder::new("r-cross-s2", &["t", "theta", "psi"])
        .domain("theta", 0.5, 2.6)
        .diagonal_metric(&["1", "1", "sin(theta)^2"])?
        .structure(&["1", "0", "0"], Some(&["1", "0", "0"]), &[
            vec!["0", "0", "0"],
            vec!["0", "0", "-sin(theta)"],
            vec!["0", "1/sin(theta)", "0"],
        ])?
        .build();
    Ok(Entry {
        name: "r-cross-s2".into(),
        description: "Product ℝ × S²(1) with ξ = ∂t and the Kähler structure of the round sphere".into(),
        spec,
        frame: None,
    })
}

/// Engine-computed frame data at one point, in frame components.
pub struct FrameData {
    pub orthonormality: f64,
    pub brackets: BTreeMap<(usize, usize), Vec<f64>>,
    pub connection: BTreeMap<(usize, usize), Vec<f64>>,
    pub h_action: Vec<Vec<f64>>,
}

pub fn frame_data(spec: &Spec, table: &FrameTable, p: &[f64]) -> Result<FrameData> {
    let geo = Geometry::at(spec, p)?;
    let n = geo.n;
    let vecs: Vec<Tensor<crate::jet::Jet>> =
        table.frame.iter().map(|v| spec.eval_vector(v, p, 2)).collect::<Result<_>>()?;
    let e = DMatrix::from_fn(n, n, |i, a| vecs[a].data[i].value());
    let ortho = e.transpose() * &geo.gm * &e - DMatrix::<f64>::identity(n, n);
    let einv = e.clone().try_inverse().ok_or_else(|| MkvError::Invalid(format!("frame is singular at {p:?}")))?;
    let to_frame = |v: nalgebra::DVector<f64>| (&einv * v).iter().cloned().collect::<Vec<f64>>();
    let deriv = |x: &Tensor<crate::jet::Jet>, y: &Tensor<crate::jet::Jet>| {
        // X(Y^l)
        nalgebra::DVector::from_fn(n, |l, _| (0..n).map(|k| x.data[k].value() * y.data[l].d(k)).sum())
    };
    let mut brackets = BTreeMap::new();
    let mut connection = BTreeMap::new();
    for a in 0..n {
        for b in 0..n {
            if a < b {
                let br = deriv(&vecs[a], &vecs[b]) - deriv(&vecs[b], &vecs[a]);
                brackets.insert((a, b), to_frame(br));
            }
            let mut cov = deriv(&vecs[a], &vecs[b]);
            for l in 0..n {
                for k in 0..n {
                    for m in 0..n {
                        cov[l] += geo.gamma.at(&[l, k, m]).value() * vecs[a].data[k].value() * vecs[b].data[m].value();
                    }
                }
            }
            connection.insert((a, b), to_frame(cov));
        }
    }
    let h_action = if spec.structure.is_some() {
        let st = StructureAt::new(spec, &geo)?;
        (0..n).map(|a| to_frame(&st.h * e.column(a))).collect()
    } else {
        Vec::new()
    };
    let orthonormality = ortho.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(FrameData { orthonormality, brackets, connection, h_action })
}

fn eval_all(spec: &Spec, v: &[Expr], p: &[f64]) -> Result<Vec<f64>> {
    v.iter().map(|e| Ok(spec.eval_scalar(e, p, 0)?.value())).collect()
}

fn diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Compare the engine's brackets, connection and `h` against the table.
pub fn verify_frame_table(entry: &Entry, cfg: &RunConfig) -> Result<Report> {
    let spec = &entry.spec;
    let mut r = Report::new(&spec.name, "frame-table");
    let Some(table) = &entry.frame else {
        r.warn("entry has no frame table");
        return Ok(r);
    };
    let n = spec.dim();
    let points = cfg.sampling.points(spec)?;
    let zero = vec![0.0; n];
    let res = map_points(&points, |p| {
        let d = frame_data(spec, table, p)?;
        let mut br: f64 = 0.0;
        for (k, v) in &d.brackets {
            let expected = match table.brackets.get(k) {
                Some(e) => eval_all(spec, e, p)?,
                None => zero.clone(),
            };
            br = br.max(diff(v, &expected));
        }
        let mut conn: f64 = 0.0;
        for (k, v) in &d.connection {
            let expected = match table.connection.get(k) {
                Some(e) => eval_all(spec, e, p)?,
                None => zero.clone(),
            };
            conn = conn.max(diff(v, &expected));
        }
        let mut h: f64 = 0.0;
        if let Some(ha) = &table.h_action {
            for (a, v) in d.h_action.iter().enumerate() {
                h = h.max(diff(v, &eval_all(spec, &ha[a], p)?));
            }
        }
        Ok((d.orthonormality, br, conn, h))
    })?;
    r.add_failures(&res.failed);
    r.check("frame_orthonormal", max_of(res.values().map(|x| x.0)), ORTHONORMAL_TOL);
    r.check("brackets", max_of(res.values().map(|x| x.1)), FRAME_TOL);
    r.check("connection", max_of(res.values().map(|x| x.2)), FRAME_TOL);
    if table.h_action.is_some() {
        r.check("h_action", max_of(res.values().map(|x| x.3)), FRAME_TOL);
    }
    r.summary("frame", table.labels.join(", "));
    r.summary("connection_entries", n * n);
    r.summary("points", res.ok.len());
    Ok(r)
}

/// Family of α used to probe fields collinear with ξ.
pub fn alpha_family() -> Vec<&'static str> {
    vec!["0", "1", "-2", "z", "z^2", "exp(z)", "1 + z"]
}

/// Run every pipeline on an entry and check the claims made about it.
pub fn reproduce_entry(entry: &Entry, cfg: &RunConfig) -> Result<Report> {
    let spec = &entry.spec;
    let mut r = Report::new(&spec.name, "reproduce");
    r.summary("entry", entry.name.as_str());
    if entry.frame.is_some() {
        r.absorb("frame", &verify_frame_table(entry, cfg)?);
    }
    let samples = contact::sample_structure(spec, cfg)?;
    let mut axioms = Report::new(&spec.name, "structure");
    contact::validate_rows(&mut axioms, &samples, cfg, true);
    contact::almost_cokahler_rows(&mut axioms, &samples, cfg, true);
    contact::identity_rows(&mut axioms, &samples, cfg, true);
    r.absorb("structure", &axioms);
    let summary = contact::summarize(&samples, cfg);
    let reeb = reeb_mixed_killing_check(spec, cfg)?;
    r.absorb("reeb", &reeb.report);
    let two = two_killing_reeb_check(spec, cfg)?;
    r.absorb("two_killing", &two.report);

    let tr_h2_vs = |oracle: &dyn Fn(&[f64]) -> f64| {
        max_of(samples.ok.iter().map(|(p, s)| (s.tr_h2 - oracle(p)).abs().max((s.ric_xi_xi + oracle(p)).abs())))
    };

    match entry.name.as_str() {
        "flat-r3" => {
            let k = classify_field(spec, "V", None, cfg)?;
            r.claim("V_mixed_killing", k.is_mixed(), format!("V classified {}", k.classification.as_str()));
            let f_dev = max_of(k.samples.iter().map(|(_, s)| s.fit.map_or(f64::INFINITY, |(f, _)| (f - 2.0).abs())));
            r.check("V_factor_is_2", f_dev, 1e-10);
            r.check("V_projection_residual", k.max_projection_residual, 1e-10);
            if let Some(f) = k.f_constant {
                r.summary_f64("f", f);
            }
            r.claim("cokahler", summary.cokahler, "∇φ = 0");
            r.claim("normal", summary.normal, "[φ,φ] + 2dη⊗ξ = 0");
            r.claim("xi_killing", reeb.classification == Classification::Killing, "ξ parallel, h = 0");
        }
        "olszak-halfspace" => {
            let zi = spec.coord_index("z").expect("z coordinate");
            r.check("tr_h2_is_2_over_z2", tr_h2_vs(&|p| 2.0 / (p[zi] * p[zi])), 1e-8);
            r.check_violated("h_nonzero", summary.max_h_norm, contact::H_ZERO_TOL);
            r.claim(
                "xi_not_killing_2killing_or_mixed",
                !matches!(
                    reeb.classification,
                    Classification::Killing | Classification::TwoKilling | Classification::MixedKilling
                ),
                format!("ξ classified {}", reeb.classification.as_str()),
            );
            r.claim("xi_not_2_killing", !two.direct && !two.formula, "both verdicts negative");
            r.claim("not_cokahler", !summary.cokahler, "∇φ ≠ 0");
            r.claim("not_normal", !summary.normal, "Nijenhuis condition fails");
            r.claim("kahlerian_leaves", summary.kahler_leaves, "dimension 3");
            let mut failing = Vec::new();
            let mut zero_passes = false;
            for src in alpha_family() {
                let alpha = spec.parse_expr(src, "alpha")?;
                let out = collinear_field_check(spec, &alpha, None, cfg)?;
                if src == "0" {
                    zero_passes = out.necessary_pair_holds;
                } else if !out.necessary_pair_holds && out.classification != Classification::MixedKilling {
                    failing.push(src);
                }
            }
            let total = alpha_family().len() - 1;
            r.claim(
                "collinear_fields_fail_necessary_pair",
                failing.len() == total && zero_passes,
                format!("{}/{total} nonzero α fail (o1)/(o2); α = 0 passes: {zero_passes}", failing.len()),
            );
        }
        "group-H" => {
            let n = (spec.dim() - 1) / 2;
            let sum_a2: f64 = (1..=n).map(|k| spec.param(&format!("a{k}")).unwrap_or(0.0).powi(2)).sum();
            r.check("tr_h2_is_2_sum_a2", tr_h2_vs(&|_| 2.0 * sum_a2), 1e-8);
            r.check_violated("h_nonzero", summary.max_h_norm, contact::H_ZERO_TOL);
            r.check("nabla_xi_h_zero", two.max_nabla_xi_h, 1e-8);
            r.check_violated("second_lie_nonzero", two.max_second_lie_component, 1.0);
            r.claim("xi_not_2_killing", !two.direct, "L_ξL_ξg ≠ 0");
            r.claim("xi_not_mixed", !reeb.killing_like && reeb.classification != Classification::MixedKilling, format!("ξ classified {}", reeb.classification.as_str()));
            r.claim("not_cokahler", !summary.cokahler, "∇φ ≠ 0");
            r.claim("kahlerian_leaves", summary.kahler_leaves, "leaves identity");
            r.claim("flat_leaves", summary.flat_leaves, "Gauss equation on ker η");
        }
        "r-cross-s2" => {
            let mut ee = Report::new(&spec.name, "eta-einstein");
            contact::eta_einstein_rows(&mut ee, spec, &samples, cfg, true);
            r.absorb("eta_einstein", &ee);
            let a_dev = max_of(samples.values().map(|s| (s.eta_einstein.a - 1.0).abs().max((s.eta_einstein.b + 1.0).abs())));
            r.check("a_is_1_b_is_minus_1", a_dev, 1e-8);
            r.claim("cokahler", summary.cokahler, "∇φ = 0");
            r.claim("xi_killing", reeb.classification == Classification::Killing, "ξ parallel");
        }
        _ => {}
    }
    Ok(r)
}

/// Reproduce one entry by name, or every entry for `all`.
pub fn reproduce(name: &str, opts: &EntryOptions, cfg: &RunConfig) -> Result<Report> {
    if name != "all" {
        return reproduce_entry(&entry(name, opts)?, cfg);
    }
    let mut r = Report::new("all", "reproduce");
    for e in ENTRIES {
        let one = reproduce_entry(&entry(e, &EntryOptions::default())?, cfg)?;
        r.summary(e, one.verdict.as_str());
        r.absorb(e, &one);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::Sampling;

    fn cfg() -> RunConfig {
        RunConfig { sampling: Sampling { grid: 3, random: 4, ..Sampling::default() }, tol: None }
    }

    #[test]
    fn lists_four_entries() {
        assert_eq!(catalog_list(), vec!["flat-r3", "olszak-halfspace", "group-H", "r-cross-s2"]);
    }

    #[test]
    fn group_h_dimension() {
        assert_eq!(entry("group-H", &EntryOptions::default()).unwrap().spec.dim(), 3);
        assert_eq!(entry("group-H", &EntryOptions { n: Some(2), ..Default::default() }).unwrap().spec.dim(), 5);
    }

    #[test]
    fn halfspace_metric_at_unit_height() {
        let e = entry("olszak-halfspace", &EntryOptions::default()).unwrap();
        let g = e.spec.metric_values(&[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(g, DMatrix::identity(3, 3));
    }

    #[test]
    fn frame_tables_match() {
        for name in ["flat-r3", "olszak-halfspace", "group-H"] {
            let e = entry(name, &EntryOptions::default()).unwrap();
            let r = verify_frame_table(&e, &cfg()).unwrap();
            assert!(r.passed(), "{}", r.to_text());
        }
    }

    #[test]
    fn halfspace_bracket_e1_e3() {
        let e = entry("olszak-halfspace", &EntryOptions::default()).unwrap();
        let d = frame_data(&e.spec, e.frame.as_ref().unwrap(), &[0.3, 0.1, 2.0]).unwrap();
        let b = &d.brackets[&(0, 2)];
        assert!((b[0] - 0.5).abs() < 1e-12 && b[1].abs() < 1e-12 && b[2].abs() < 1e-12);
    }

    #[test]
    fn group_h_connection_at_origin() {
        let e = entry("group-H", &EntryOptions::default()).unwrap();
        let d = frame_data(&e.spec, e.frame.as_ref().unwrap(), &[0.0, 0.0, 0.0]).unwrap();
        let c = &d.connection[&(1, 1)];
        assert!((c[0] + 1.0).abs() < 1e-12 && c[1].abs() < 1e-12 && c[2].abs() < 1e-12);
    }

    #[test]
    fn every_entry_reproduces() {
        for name in ENTRIES {
            let r = reproduce(name, &EntryOptions::default(), &cfg()).unwrap();
            assert!(r.passed(), "{}", r.to_text());
        }
    }
}
