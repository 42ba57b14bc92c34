//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mkv_core::catalog::{self, EntryOptions};
use mkv_core::contact::{self, StructureAt};
use mkv_core::deform;
use mkv_core::geometry::{self, Geometry};
use mkv_core::killing::{self, Classification, FieldSample};
use mkv_core::realline::{self, RealLineProblem};
use mkv_core::reeb;
use mkv_core::sampling::{map_points, RunConfig, Sampling};
use mkv_core::spec::{Spec, SpecBuilder};
use mkv_core::Result;

const SEED: u64 = 0x6d6b76;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { passed, detail: detail.into() })
}

fn full() -> RunConfig {
    RunConfig::default()
}

fn light() -> RunConfig {
    RunConfig { sampling: Sampling { grid: 3, random: 6, ..Sampling::default() }, tol: None }
}

fn entry(name: &str) -> catalog::Entry {
    catalog::entry(name, &EntryOptions { n: Some(1), params: Vec::new() }).expect("catalog entry")
}

fn row(r: &mkv_core::report::Report, name: &str) -> Option<(bool, f64)> {
    r.subcheck(name).map(|s| (s.passed, s.max_residual))
}

fn num(v: f64) -> String {
    format!("({v})")
}

/// Linear mixed Killing field `V = (f/2)P x + K x + b` on flat space, with
/// `P` a coordinate projection and `K` a rotation commuting with it.
fn mixed_linear(rng: &mut ChaCha8Rng) -> ([String; 3], f64) {
    let f: f64 = rng.random_range(0.5..3.0);
    let w: f64 = rng.random_range(-1.5..1.5);
    let b: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
    let k = f / 2.0;
    let comps = match rng.random_range(0..4) {
        // P = I, rotation about a random axis
        0 => {
            let o: [f64; 3] = [w, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            [
                format!("{}*x + {}*z - {}*y + {}", num(k), num(o[1]), num(o[2]), num(b[0])),
                format!("{}*y + {}*x - {}*z + {}", num(k), num(o[2]), num(o[0]), num(b[1])),
                format!("{}*z + {}*y - {}*x + {}", num(k), num(o[0]), num(o[1]), num(b[2])),
            ]
        }
        // P = diag(1,0,0), rotation in the yz plane
        1 => [
            format!("{}*x + {}", num(k), num(b[0])),
            format!("-{}*z + {}", num(w), num(b[1])),
            format!("{}*y + {}", num(w), num(b[2])),
        ],
        // P = diag(0,1,1)
        2 => [
            num(b[0]),
            format!("{}*y - {}*z + {}", num(k), num(w), num(b[1])),
            format!("{}*z + {}*y + {}", num(k), num(w), num(b[2])),
        ],
        // P = diag(1,1,0), rotation about the z axis
        _ => [
            format!("{}*x - {}*y + {}", num(k), num(w), num(b[0])),
            format!("{}*y + {}*x + {}", num(k), num(w), num(b[1])),
            num(b[2]),
        ],
    };
    (comps, f)
}

fn generic_quadratic(rng: &mut ChaCha8Rng) -> [String; 3] {
    let monomials = ["1", "x", "y", "z", "x^2", "y^2", "z^2", "x*y", "y*z", "x*z"];
    let comp = |rng: &mut ChaCha8Rng| {
        monomials
            .iter()
            .map(|m| format!("{}*{}", num(rng.random_range(-1.0..1.0)), m))
            .collect::<Vec<_>>()
            .join(" + ")
    };
    [comp(rng), comp(rng), comp(rng)]
}

fn flat_with(fields: &[(String, [String; 3])], lo: f64, hi: f64) -> Result<Spec> {
    let mut b = SpecBuilder::new("flat", &["x", "y", "z"])
        .domain("x", lo, hi)
        .domain("y", lo, hi)
        .domain("z", lo, hi)
        .diagonal_metric(&["1", "1", "1"])?;
    for (name, c) in fields {
        b = b.field(name, &[c[0].as_str(), c[1].as_str(), c[2].as_str()])?;
    }
    Ok(b.build())
}

fn c1_flat_mixed() -> Result<Outcome> {
    let e = entry("flat-r3");
    let k = killing::classify_field(&e.spec, "V", None, &full())?;
    let max_f_dev = k.samples.iter().map(|(_, s)| (s.f_used - 2.0).abs()).fold(0.0, f64::max);
    let ok = k.classification == Classification::MixedKilling
        && max_f_dev < 1e-10
        && k.max_projection_residual < 1e-10
        && k.samples.len() >= 125;
    outcome(
        ok,
        format!(
            "{} at {} points, max |f - 2| = {:.1e}, projection residual {:.1e}",
            k.classification.as_str(),
            k.samples.len(),
            max_f_dev,
            k.max_projection_residual
        ),
    )
}

fn c2_halfspace() -> Result<Outcome> {
    let e = entry("olszak-halfspace");
    let r = catalog::verify_frame_table(&e, &full())?;
    let points = r.summary.get("points").and_then(|v| v.as_u64()).unwrap_or(0);
    let entries = r.summary.get("connection_entries").and_then(|v| v.as_u64()).unwrap_or(0);
    let (h_ok, h_res) = row(&r, "h_action").unwrap_or((false, f64::NAN));
    let (c_ok, c_res) = row(&r, "connection").unwrap_or((false, f64::NAN));
    let k = killing::classify_field(&e.spec, "xi", None, &full())?;
    let not_killing_type = !matches!(
        k.classification,
        Classification::Killing | Classification::TwoKilling | Classification::MixedKilling
    );
    let ok = r.passed() && h_ok && c_ok && points >= 25 && entries == 9 && not_killing_type;
    outcome(
        ok,
        format!(
            "h action {h_res:.1e}, {entries} connection entries {c_res:.1e}, {points} points, xi is {}",
            k.classification.as_str()
        ),
    )
}

fn c3_group() -> Result<Outcome> {
    let e = entry("group-H");
    let cfg = full();
    let r = catalog::verify_frame_table(&e, &cfg)?;
    let (h_ok, h_res) = row(&r, "h_action").unwrap_or((false, f64::NAN));
    let points = cfg.sampling.points(&e.spec)?;
    let nabla = map_points(&points, |p| {
        let geo = Geometry::at(&e.spec, p)?;
        Ok(StructureAt::new(&e.spec, &geo)?.nabla_xi_h().amax())
    })?;
    let max_nabla = nabla.values().cloned().fold(0.0, f64::max);
    let two = reeb::two_killing_reeb_check(&e.spec, &cfg)?;
    let ok = h_ok && nabla.failed.is_empty() && max_nabla < 1e-8 && two.max_second_lie_component > 1.0;
    outcome(
        ok,
        format!(
            "h action {h_res:.1e}, max |nabla_xi h| = {max_nabla:.1e}, max L_xi L_xi g component = {:.3}",
            two.max_second_lie_component
        ),
    )
}

fn c4_identities() -> Result<Outcome> {
    let cfg = full();
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["olszak-halfspace", "group-H", "r-cross-s2"] {
        let e = entry(name);
        let r = contact::verify_structure_identities(&e.spec, &cfg)?;
        ok &= r.passed();
        parts.push(format!("{name} {:.1e}", r.max_residual));
    }
    // closed forms of tr h^2 and Ric(xi, xi) = -tr h^2
    let checks: [(&str, fn(&[f64]) -> f64); 2] =
        [("olszak-halfspace", |p| 2.0 / (p[2] * p[2])), ("group-H", |_| 2.0)];
    for (name, expected) in checks {
        let e = entry(name);
        let samples = contact::sample_structure(&e.spec, &cfg)?;
        ok &= samples.failed.is_empty();
        let mut dev: f64 = 0.0;
        let mut ric: f64 = 0.0;
        for (p, s) in &samples.ok {
            dev = dev.max((s.tr_h2 - expected(p)).abs());
            ric = ric.max((s.ric_xi_xi + s.tr_h2).abs());
        }
        ok &= dev < 1e-8 && ric < 1e-7;
        parts.push(format!("{name} tr h^2 {dev:.1e}, Ric(xi,xi) {ric:.1e}"));
    }
    outcome(ok, parts.join("; "))
}

fn c5_criteria_agree() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut fields = Vec::new();
    for i in 0..25 {
        fields.push((format!("G{i}"), generic_quadratic(&mut rng)));
        fields.push((format!("M{i}"), mixed_linear(&mut rng).0));
    }
    let spec = flat_with(&fields, -1.0, 1.0)?;
    let cfg = light();
    let points = cfg.sampling.points(&spec)?;
    let mut disagreements = 0usize;
    let mut checked = 0usize;
    let mut mixed_points = 0usize;
    let mut max_trace: f64 = 0.0;
    for (name, _) in &fields {
        let res = killing::sample_field(&spec, spec.field(name)?, None, &cfg)?;
        disagreements += res.failed.len();
        for s in res.values() {
            let a = s.factor < 1e-10;
            let b = s.quadratic < 1e-8;
            let c = s.criterion < 1e-8;
            if !(a == b && b == c) {
                disagreements += 1;
            }
            if a {
                mixed_points += 1;
            }
            max_trace = max_trace.max(relative(s.trace_consistency, s));
            checked += 1;
        }
    }
    let expected_mixed = 25 * points.len();
    let ok = disagreements == 0 && max_trace < 1e-8 && mixed_points == expected_mixed;
    outcome(
        ok,
        format!(
            "50 fields x {} points: {disagreements} disagreements, {mixed_points}/{checked} points satisfy the factor equation, trace check {max_trace:.1e}",
            points.len()
        ),
    )
}

/// Trace check relative to the Bochner terms' magnitude.
fn relative(res: f64, s: &FieldSample) -> f64 {
    res / (1.0 + s.ric_vv.abs() + s.div_nabla_vv.abs() + s.nabla_norm_sq.abs())
}

fn c6_bochner() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let fields: Vec<(String, [String; 3])> = (0..20).map(|i| (format!("M{i}"), mixed_linear(&mut rng).0)).collect();
    let spec = flat_with(&fields, -1.0, 1.0)?;
    let cfg = light();
    let mut max_b: f64 = 0.0;
    for (name, _) in &fields {
        let res = killing::sample_field(&spec, spec.field(name)?, None, &cfg)?;
        if !res.failed.is_empty() {
            return outcome(false, format!("{name}: {} evaluation failures", res.failed.len()));
        }
        max_b = max_b.max(res.values().map(|s| s.bochner).fold(0.0, f64::max));
    }
    // worked instance on flat space: Ric(V,V) - div(nabla_V V) - |nabla V|^2 + f div V
    let e = entry("flat-r3");
    let (geo, fa) = killing::field_at(&e.spec, e.spec.field("V")?, &[0.3, -0.2, 0.7])?;
    let s = FieldSample::compute(&geo, &fa, Some(2.0));
    let terms = [s.ric_vv, s.div_nabla_vv, s.nabla_norm_sq, 2.0 * s.div];
    let expected = [0.0, 1.0, 5.0, 6.0];
    let dev = terms.iter().zip(expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let total = terms[0] - terms[1] - terms[2] + terms[3];
    let ok = max_b < 1e-8 && dev < 1e-12 && total.abs() < 1e-12;
    outcome(
        ok,
        format!(
            "20 mixed fields max Bochner residual {max_b:.1e}; flat instance {:.0} - {:.0} - {:.0} + {:.0} = {:.1e}",
            terms[0], terms[1], terms[2], terms[3], total
        ),
    )
}

fn c7_h_zero_iff_killing() -> Result<Outcome> {
    let cfg = light();
    let mut mismatches = Vec::new();
    let mut count = 0;
    let mut max_scaling: f64 = 0.0;
    for name in catalog::ENTRIES {
        let e = entry(name);
        let r = reeb::reeb_mixed_killing_check(&e.spec, &cfg)?;
        count += 1;
        if (r.classification == Classification::Killing) != r.h_zero || r.killing_like != r.h_zero {
            mismatches.push(name.to_string());
        }
    }
    // (base entry, coordinate along xi)
    let bases = [("flat-r3", "x"), ("olszak-halfspace", "z"), ("group-H", "x0"), ("r-cross-s2", "t")];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    for k in 0..10 {
        let (name, coord) = bases[k % bases.len()];
        let base = entry(name).spec;
        let a: f64 = rng.random_range(0.5..2.0);
        let b: f64 = if k < 4 { 0.0 } else { rng.random_range(0.1..1.0) };
        let c: f64 = rng.random_range(0.5..3.0);
        let u = base.parse_expr(&format!("{a} + {b}*{coord}^2"), "u")?;
        let d = deform::d_homothetic_deform(&base, &u, c, &cfg)?;
        max_scaling = max_scaling.max(d.max_h_scaling);
        if !d.report.passed() {
            mismatches.push(format!("{} (deformation checks)", d.spec.name));
        }
        let r = reeb::reeb_mixed_killing_check(&d.spec, &cfg)?;
        count += 1;
        if (r.classification == Classification::Killing) != r.h_zero || r.killing_like != r.h_zero {
            mismatches.push(d.spec.name.clone());
        }
    }
    let ok = mismatches.is_empty() && max_scaling < 1e-8;
    outcome(
        ok,
        format!(
            "{count} structures, H = h/u residual {max_scaling:.1e}, mismatches: {}",
            if mismatches.is_empty() { "none".into() } else { mismatches.join(", ") }
        ),
    )
}

fn c8_realline() -> Result<Outcome> {
    let p = RealLineProblem::parse("x", "x", Some("2"))?;
    let flow = realline::integrate(&p)?;
    let err = flow.iter().map(|(t, x)| (x - t.exp()).abs()).fold(0.0, f64::max);
    let out = realline::realline_analyze(&p, &RunConfig::default())?;
    let ok = err < 1e-6 && out.report.passed() && out.f_constant.is_some_and(|f| (f - 2.0).abs() < 1e-10);
    outcome(ok, format!("max |r(t) - e^t| = {err:.1e} over {} steps, report {}", flow.len() - 1, out.report.verdict.as_str()))
}

fn c9_conformal_change() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let cfg = RunConfig { sampling: Sampling { grid: 3, random: 3, ..Sampling::default() }, tol: None };
    let mut agree = 0;
    let mut holds = 0;
    let mut failures = Vec::new();
    for i in 0..20 {
        let (v, rho) = match i % 5 {
            // Euler field with a homogeneous weight of degree -2: identity holds
            0 => (
                ["x".to_string(), "y".to_string(), "z".to_string()],
                format!("{}/(x^2 + y^2 + z^2)", rng.random_range(0.5..2.0)),
            ),
            1 => (mixed_linear(&mut rng).0, format!("{}", rng.random_range(0.5..3.0))),
            2 => (mixed_linear(&mut rng).0, format!("exp({}*x)", num(rng.random_range(-1.0..1.0)))),
            3 => (mixed_linear(&mut rng).0, format!("1 + {}*y^2", rng.random_range(0.1..1.0))),
            _ => (["x".to_string(), "y".to_string(), "z".to_string()], format!("(x^2 + y^2 + z^2)^{}", num(rng.random_range(-0.5..1.5)))),
        };
        let spec = flat_with(&[("V".to_string(), v)], 0.5, 1.5)?;
        let rho = spec.parse_expr(&rho, "rho")?;
        let out = killing::conformal_change_check(&spec, "V", &rho, &cfg)?;
        if out.identity_holds == out.direct_holds {
            agree += 1;
        } else {
            failures.push(format!("#{i} rho = {rho}"));
        }
        if out.identity_holds {
            holds += 1;
        }
    }
    outcome(
        agree == 20,
        format!("{agree}/20 verdicts agree ({holds} with the identity holding){}", if failures.is_empty() { String::new() } else { format!("; disagree: {}", failures.join(", ")) }),
    )
}

fn c10_numerics() -> Result<Outcome> {
    let cfg = full();
    let mut ok = true;
    let mut parts = Vec::new();
    for name in catalog::ENTRIES {
        let e = entry(name);
        let r = geometry::curvature_report(&e.spec, &cfg)?;
        let rows = ["christoffel_vs_finite_difference", "metric_compatibility", "contracted_bianchi"];
        let mut worst = Vec::new();
        for row_name in rows {
            match row(&r, row_name) {
                Some((passed, res)) => {
                    ok &= passed;
                    worst.push(format!("{res:.0e}"));
                }
                None => ok = false,
            }
        }
        ok &= r.passed();
        parts.push(format!("{name} [{}]", worst.join(" ")));
    }
    outcome(ok, format!("fd/compat/bianchi: {}", parts.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>); 10] = [
        ("flat field V is mixed Killing with f = 2", c1_flat_mixed),
        ("half-space frame, h action and connection table", c2_halfspace),
        ("solvable group h action, nabla_xi h = 0, L_xi L_xi g != 0", c3_group),
        ("structure identities and tr h^2 closed forms", c4_identities),
        ("factor, quadratic and curvature criteria agree pointwise", c5_criteria_agree),
        ("Bochner integrand vanishes for mixed fields", c6_bochner),
        ("h = 0 iff Reeb field Killing, deformations scale h by 1/u", c7_h_zero_iff_killing),
        ("real-line flow r(t) = e^t", c8_realline),
        ("conformal change identity agrees with reclassification", c9_conformal_change),
        ("finite differences, compatibility and Bianchi", c10_numerics),
    ];
    let mut failed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let o = run().unwrap_or_else(|e| Outcome { passed: false, detail: format!("error: {e}") });
        if !o.passed {
            failed += 1;
        }
        println!("[{}] {:>2}. {title}: {}", if o.passed { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
