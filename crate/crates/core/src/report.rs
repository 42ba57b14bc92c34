//! Structured outcomes of checks.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};
use serde_json::Value;

use crate::VERSION;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Partial,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Partial => "partial",
        }
    }
}

/// What a subcheck expects of its residual.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Expect {
    /// Identity holds: residual below tolerance.
    Below,
    /// Identity is violated: residual at or above tolerance.
    Above,
}

fn finite_or_null<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

fn map_finite_or_null<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
    let cleaned: BTreeMap<&String, Option<f64>> =
        m.iter().map(|(k, v)| (k, if v.is_finite() { Some(*v) } else { None })).collect();
    cleaned.serialize(s)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubCheck {
    pub name: String,
    #[serde(serialize_with = "finite_or_null")]
    pub max_residual: f64,
    pub tolerance: f64,
    pub expect: Expect,
    /// Informational rows never affect the verdict.
    pub asserted: bool,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Detail {
    pub point: Vec<f64>,
    #[serde(serialize_with = "finite_or_null")]
    pub residual: f64,
    #[serde(serialize_with = "map_finite_or_null")]
    pub fitted: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointFailure {
    pub point: Vec<f64>,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub tool_version: String,
    pub spec_name: String,
    pub check: String,
    pub verdict: Verdict,
    #[serde(serialize_with = "finite_or_null")]
    pub max_residual: f64,
    pub tolerance: f64,
    pub details: Vec<Detail>,
    pub subchecks: Vec<SubCheck>,
    pub summary: BTreeMap<String, Value>,
    pub failures: Vec<PointFailure>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(spec_name: &str, check: &str) -> Report {
        Report {
            tool_version: VERSION.to_string(),
            spec_name: spec_name.to_string(),
            check: check.to_string(),
            verdict: Verdict::Pass,
            max_residual: 0.0,
            tolerance: 0.0,
            details: Vec::new(),
            subchecks: Vec::new(),
            summary: BTreeMap::new(),
            failures: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn push(&mut self, name: &str, residual: f64, tolerance: f64, expect: Expect, asserted: bool) -> bool {
        let passed = match expect {
            Expect::Below => residual < tolerance,
            Expect::Above => residual >= tolerance,
        };
        self.subchecks.push(SubCheck {
            name: name.to_string(),
            max_residual: residual,
            tolerance,
            expect,
            asserted,
            passed,
            note: None,
        });
        self.refresh();
        passed
    }

    /// Asserted identity: passes when `residual < tolerance`.
    pub fn check(&mut self, name: &str, residual: f64, tolerance: f64) -> bool {
        self.push(name, residual, tolerance, Expect::Below, true)
    }

    /// Asserted violation: passes when `residual >= tolerance`.
    pub fn check_violated(&mut self, name: &str, residual: f64, tolerance: f64) -> bool {
        self.push(name, residual, tolerance, Expect::Above, true)
    }

    /// Informational row (reported, never asserted).
    pub fn info(&mut self, name: &str, residual: f64, tolerance: f64) {
        self.push(name, residual, tolerance, Expect::Below, false);
    }

    /// Boolean claim, recorded as residual 0 (holds) or 1 (does not).
    pub fn claim(&mut self, name: &str, holds: bool, note: impl Into<String>) -> bool {
        self.push(name, if holds { 0.0 } else { 1.0 }, 0.5, Expect::Below, true);
        self.subchecks.last_mut().expect("just pushed").note = Some(note.into());
        holds
    }

    pub fn note_last(&mut self, note: impl Into<String>) {
        if let Some(s) = self.subchecks.last_mut() {
            s.note = Some(note.into());
        }
    }

    pub fn summary(&mut self, key: &str, value: impl Into<Value>) {
        let v: Value = value.into();
        let v = match v {
            Value::Number(ref n) if n.as_f64().is_some_and(|x| !x.is_finite()) => Value::Null,
            other => other,
        };
        self.summary.insert(key.to_string(), v);
    }

    pub fn summary_f64(&mut self, key: &str, value: f64) {
        let v = if value.is_finite() { Value::from(value) } else { Value::Null };
        self.summary.insert(key.to_string(), v);
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        if !self.warnings.contains(&msg) {
            self.warnings.push(msg);
        }
    }

    pub fn fail_at(&mut self, point: Vec<f64>, error: String) {
        self.failures.push(PointFailure { point, error });
        self.refresh();
    }

    pub fn add_failures(&mut self, failed: &[(Vec<f64>, String)]) {
        for (p, e) in failed {
            self.failures.push(PointFailure { point: p.clone(), error: e.clone() });
        }
        self.refresh();
    }

    /// Merge another report's subchecks under a name prefix.
    pub fn absorb(&mut self, prefix: &str, other: &Report) {
        for s in &other.subchecks {
            let mut s = s.clone();
            s.name = format!("{prefix}.{}", s.name);
            self.subchecks.push(s);
        }
        for f in &other.failures {
            if !self.failures.contains(f) {
                self.failures.push(f.clone());
            }
        }
        for w in &other.warnings {
            self.warn(format!("{prefix}: {w}"));
        }
        self.refresh();
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn subcheck(&self, name: &str) -> Option<&SubCheck> {
        self.subchecks.iter().find(|s| s.name == name)
    }

    /// Recompute verdict and headline residual from the subchecks.
    fn refresh(&mut self) {
        let asserted: Vec<&SubCheck> = self.subchecks.iter().filter(|s| s.asserted).collect();
        let any_failed = asserted.iter().any(|s| !s.passed);
        self.verdict = if any_failed {
            Verdict::Fail
        } else if !self.failures.is_empty() {
            Verdict::Partial
        } else {
            Verdict::Pass
        };
        // headline: the worst asserted "below" row by residual/tolerance,
        // or the first failing "above" row when that is what failed
        let mut worst: Option<(f64, f64, f64)> = None;
        for s in &asserted {
            let ratio = match s.expect {
                Expect::Below => s.max_residual / s.tolerance,
                Expect::Above if !s.passed => f64::INFINITY,
                Expect::Above => continue,
            };
            let ratio = if ratio.is_nan() { f64::INFINITY } else { ratio };
            if worst.is_none_or(|w| ratio > w.0) {
                worst = Some((ratio, s.max_residual, s.tolerance));
            }
        }
        if let Some((_, r, t)) = worst {
            self.max_residual = r;
            self.tolerance = t;
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Human-readable rendering.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{} on {}: {}\n", self.check, self.spec_name, self.verdict.as_str().to_uppercase()));
        out.push_str(&format!("  max residual {:.3e} (tolerance {:.1e})\n", self.max_residual, self.tolerance));
        for (k, v) in &self.summary {
            out.push_str(&format!("  {k}: {v}\n"));
        }
        for s in &self.subchecks {
            let mark = match (s.asserted, s.passed) {
                (false, _) => "info",
                (true, true) => "ok",
                (true, false) => "FAIL",
            };
            let cmp = match s.expect {
                Expect::Below => "<",
                Expect::Above => ">=",
            };
            out.push_str(&format!(
                "  [{mark:>4}] {:<48} {:.3e} {cmp} {:.1e}",
                s.name, s.max_residual, s.tolerance
            ));
            if let Some(n) = &s.note {
                out.push_str(&format!("  ({n})"));
            }
            out.push('\n');
        }
        if !self.failures.is_empty() {
            out.push_str(&format!("  evaluation failed at {} point(s); first: {:?}: {}\n",
                self.failures.len(), self.failures[0].point, self.failures[0].error));
        }
        for w in &self.warnings {
            out.push_str(&format!("  warning: {w}\n"));
        }
        out
    }
}

/// Max of an iterator of residuals, treating NaN as infinite.
pub fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_tracks_asserted_rows() {
        let mut r = Report::new("s", "c");
        r.check("a", 1e-12, 1e-8);
        r.info("b", 1.0, 1e-8);
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.max_residual, 1e-12);
        r.check_violated("c", 0.5, 1e-8);
        assert_eq!(r.verdict, Verdict::Pass);
        r.check("d", 1e-3, 1e-8);
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.max_residual, 1e-3);
    }

    #[test]
    fn failures_make_partial() {
        let mut r = Report::new("s", "c");
        r.check("a", 0.0, 1e-8);
        r.fail_at(vec![0.0], "log".into());
        assert_eq!(r.verdict, Verdict::Partial);
    }

    #[test]
    fn nan_serializes_as_null() {
        let mut r = Report::new("s", "c");
        r.check("a", f64::NAN, 1e-8);
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert!(v["max_residual"].is_null());
        assert_eq!(r.verdict, Verdict::Fail);
    }
}
