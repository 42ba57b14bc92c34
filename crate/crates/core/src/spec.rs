//! Manifold specifications and their JSON document form.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::{MkvError, Result};
use crate::expr::{parse, EvalError, Expr, Func};
use crate::jet::Jet;
use crate::tensor::Tensor;

/// Almost contact structure components: `phi[i][j] = φ^i_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureSpec {
    pub xi: Vec<Expr>,
    pub eta: Option<Vec<Expr>>,
    pub phi: Vec<Vec<Expr>>,
}

/// A chart, its metric, named vector fields and an optional structure.
#[derive(Clone, Debug, PartialEq)]
pub struct Spec {
    pub name: String,
    pub coords: Vec<String>,
    pub domain: Vec<(f64, f64)>,
    /// Sorted by name; expression bindings index into this list.
    pub params: Vec<(String, f64)>,
    pub metric: Vec<Vec<Expr>>,
    pub fields: BTreeMap<String, Vec<Expr>>,
    pub structure: Option<StructureSpec>,
}

fn valid_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn eval_err(point: &[f64]) -> impl Fn(EvalError) -> MkvError + '_ {
    move |source| MkvError::Eval { point: point.to_vec(), source }
}

impl Spec {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coord_index(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c == name)
    }

    pub fn param_values(&self) -> Vec<f64> {
        self.params.iter().map(|(_, v)| *v).collect()
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// Override a declared parameter.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        match self.params.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => {
                slot.1 = value;
                Ok(())
            }
            None => Err(MkvError::Invalid(format!("spec `{}` has no parameter `{name}`", self.name))),
        }
    }

    /// Parse an expression against this chart's coordinates and parameters.
    pub fn parse_expr(&self, src: &str, path: &str) -> Result<Expr> {
        let coords: Vec<&str> = self.coords.iter().map(String::as_str).collect();
        let params: Vec<&str> = self.params.iter().map(|(n, _)| n.as_str()).collect();
        parse(src, &coords, &params).map_err(|source| MkvError::Parse { path: path.into(), source })
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.domain.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    /// Components of a named field; `xi` falls back to the structure's ξ.
    pub fn field(&self, name: &str) -> Result<&[Expr]> {
        if let Some(f) = self.fields.get(name) {
            return Ok(f);
        }
        if name == "xi" {
            if let Some(s) = &self.structure {
                return Ok(&s.xi);
            }
        }
        Err(MkvError::UnknownField(name.into()))
    }

    pub fn structure(&self) -> Result<&StructureSpec> {
        if self.dim() % 2 == 0 {
            return Err(MkvError::EvenDimension(self.dim()));
        }
        self.structure.as_ref().ok_or(MkvError::MissingStructure)
    }

    pub fn eval_scalar(&self, e: &Expr, point: &[f64], order: usize) -> Result<Jet> {
        e.eval_jet(point, &self.param_values(), order).map_err(eval_err(point))
    }

    /// Evaluate component expressions as a (1,0) jet tensor.
    pub fn eval_vector(&self, comps: &[Expr], point: &[f64], order: usize) -> Result<Tensor<Jet>> {
        let params = self.param_values();
        let data = comps
            .iter()
            .map(|e| e.eval_jet(point, &params, order))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(eval_err(point))?;
        Ok(Tensor { n: self.dim(), up: 1, down: 0, data })
    }

    pub fn eval_matrix(
        &self,
        rows: &[Vec<Expr>],
        up: usize,
        down: usize,
        point: &[f64],
        order: usize,
    ) -> Result<Tensor<Jet>> {
        let params = self.param_values();
        let mut data = Vec::with_capacity(self.dim() * self.dim());
        for row in rows {
            for e in row {
                data.push(e.eval_jet(point, &params, order).map_err(eval_err(point))?);
            }
        }
        Ok(Tensor { n: self.dim(), up, down, data })
    }

    pub fn metric_jets(&self, point: &[f64], order: usize) -> Result<Tensor<Jet>> {
        self.eval_matrix(&self.metric, 0, 2, point, order)
    }

    pub fn metric_values(&self, point: &[f64]) -> Result<nalgebra::DMatrix<f64>> {
        let params = self.param_values();
        let n = self.dim();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.metric[i][j].eval(point, &params).map_err(eval_err(point))?;
            }
        }
        Ok(m)
    }

    /// Check symmetry and nondegeneracy of the metric at `points`.
    pub fn check_metric(&self, points: &[Vec<f64>]) -> Result<Vec<String>> {
        let n = self.dim();
        let params = self.param_values();
        let mut warnings = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.metric[i][j] == self.metric[j][i] {
                    continue;
                }
                for p in points {
                    let a = self.metric[i][j].eval(p, &params);
                    let b = self.metric[j][i].eval(p, &params);
                    if let (Ok(a), Ok(b)) = (a, b) {
                        if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                            return Err(MkvError::schema(
                                format!("metric[{i}][{j}]"),
                                format!(
                                    "metric is not symmetric: metric[{i}][{j}] = {a} but metric[{j}][{i}] = {b} at {p:?}"
                                ),
                            ));
                        }
                    }
                }
            }
        }
        let mut indefinite = false;
        for p in points {
            let Ok(m) = self.metric_values(p) else { continue };
            let det = m.determinant();
            if det.abs() <= 1e-10 {
                return Err(MkvError::DegenerateMetric { point: p.clone(), det });
            }
            let sym = (&m + m.transpose()) * 0.5;
            if sym.symmetric_eigenvalues().iter().any(|&e| e <= 0.0) {
                indefinite = true;
            }
        }
        if indefinite {
            warnings.push("metric is not positive definite at some sample points".to_string());
        }
        Ok(warnings)
    }

    // ---- document form ----

    pub fn from_json_str(text: &str) -> Result<Spec> {
        let value: Value = serde_json::from_str(text)?;
        Spec::from_value(&value)
    }

    pub fn load(path: &Path) -> Result<Spec> {
        let text = std::fs::read_to_string(path)?;
        Spec::from_json_str(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    /// Canonical document text: sorted keys, two-space indentation, trailing newline.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("spec serializes");
        s.push('\n');
        s
    }

    pub fn to_value(&self) -> Value {
        let strings = |v: &[Expr]| Value::Array(v.iter().map(|e| Value::String(e.to_string())).collect());
        let matrix = |m: &[Vec<Expr>]| Value::Array(m.iter().map(|r| strings(r)).collect());
        let mut domain = Map::new();
        for (c, (lo, hi)) in self.coords.iter().zip(&self.domain) {
            domain.insert(c.clone(), json!([lo, hi]));
        }
        let mut params = Map::new();
        for (n, v) in &self.params {
            params.insert(n.clone(), json!(v));
        }
        let mut fields = Map::new();
        for (n, f) in &self.fields {
            fields.insert(n.clone(), strings(f));
        }
        let mut doc = Map::new();
        doc.insert("name".into(), json!(self.name));
        doc.insert("dimension".into(), json!(self.dim()));
        doc.insert("coordinates".into(), json!(self.coords));
        doc.insert("domain".into(), Value::Object(domain));
        doc.insert("parameters".into(), Value::Object(params));
        doc.insert("metric".into(), matrix(&self.metric));
        doc.insert("fields".into(), Value::Object(fields));
        if let Some(s) = &self.structure {
            let mut st = Map::new();
            st.insert("xi".into(), strings(&s.xi));
            if let Some(eta) = &s.eta {
                st.insert("eta".into(), strings(eta));
            }
            st.insert("phi".into(), matrix(&s.phi));
            doc.insert("structure".into(), Value::Object(st));
        }
        Value::Object(doc)
    }

    pub fn from_value(value: &Value) -> Result<Spec> {
        let obj = value.as_object().ok_or_else(|| MkvError::schema("$", "document must be a JSON object"))?;
        const KNOWN: [&str; 8] =
            ["name", "dimension", "coordinates", "domain", "parameters", "metric", "fields", "structure"];
        for key in obj.keys() {
            if !KNOWN.contains(&key.as_str()) {
                return Err(MkvError::schema(key.as_str(), "unknown key"));
            }
        }
        let name = obj
            .get("name")
            .ok_or_else(|| MkvError::schema("name", "missing required field"))?
            .as_str()
            .ok_or_else(|| MkvError::schema("name", "expected a string"))?
            .to_string();
        let dimension = obj
            .get("dimension")
            .ok_or_else(|| MkvError::schema("dimension", "missing required field"))?
            .as_u64()
            .filter(|&d| d >= 1)
            .ok_or_else(|| MkvError::schema("dimension", "expected a positive integer"))? as usize;

        let coords_v = obj
            .get("coordinates")
            .ok_or_else(|| MkvError::schema("coordinates", "missing required field"))?
            .as_array()
            .ok_or_else(|| MkvError::schema("coordinates", "expected an array of names"))?;
        if coords_v.len() != dimension {
            return Err(MkvError::schema(
                "coordinates",
                format!("expected {dimension} names, found {}", coords_v.len()),
            ));
        }
        let mut coords = Vec::with_capacity(dimension);
        for (i, c) in coords_v.iter().enumerate() {
            let path = format!("coordinates[{i}]");
            let s = c.as_str().ok_or_else(|| MkvError::schema(&path, "expected a string"))?;
            check_name(s, &path)?;
            if coords.iter().any(|x: &String| x == s) {
                return Err(MkvError::schema(&path, format!("duplicate coordinate `{s}`")));
            }
            coords.push(s.to_string());
        }

        let mut params = Vec::new();
        if let Some(p) = obj.get("parameters") {
            let map = p.as_object().ok_or_else(|| MkvError::schema("parameters", "expected an object"))?;
            for (k, v) in map {
                let path = format!("parameters.{k}");
                check_name(k, &path)?;
                if coords.contains(k) {
                    return Err(MkvError::schema(&path, "parameter name clashes with a coordinate"));
                }
                let x = v.as_f64().ok_or_else(|| MkvError::schema(&path, "expected a number"))?;
                params.push((k.clone(), x));
            }
        }
        params.sort_by(|a, b| a.0.cmp(&b.0));

        let mut domain = vec![(-1.0, 1.0); dimension];
        if let Some(d) = obj.get("domain") {
            let map = d.as_object().ok_or_else(|| MkvError::schema("domain", "expected an object"))?;
            for (k, v) in map {
                let path = format!("domain.{k}");
                let i = coords
                    .iter()
                    .position(|c| c == k)
                    .ok_or_else(|| MkvError::schema(&path, "not a declared coordinate"))?;
                let pair = v
                    .as_array()
                    .filter(|a| a.len() == 2)
                    .ok_or_else(|| MkvError::schema(&path, "expected [lo, hi]"))?;
                let lo = pair[0].as_f64().ok_or_else(|| MkvError::schema(format!("{path}[0]"), "expected a number"))?;
                let hi = pair[1].as_f64().ok_or_else(|| MkvError::schema(format!("{path}[1]"), "expected a number"))?;
                if !(lo <= hi) {
                    return Err(MkvError::schema(&path, "lower bound exceeds upper bound"));
                }
                domain[i] = (lo, hi);
            }
        }

        let mut spec = Spec {
            name,
            coords,
            domain,
            params,
            metric: Vec::new(),
            fields: BTreeMap::new(),
            structure: None,
        };

        let metric_v = obj.get("metric").ok_or_else(|| MkvError::schema("metric", "missing required field"))?;
        spec.metric = spec.expr_matrix(metric_v, "metric")?;

        if let Some(f) = obj.get("fields") {
            let map = f.as_object().ok_or_else(|| MkvError::schema("fields", "expected an object"))?;
            for (k, v) in map {
                let path = format!("fields.{k}");
                let comps = spec.expr_vector(v, &path)?;
                spec.fields.insert(k.clone(), comps);
            }
        }

        if let Some(s) = obj.get("structure") {
            let map = s.as_object().ok_or_else(|| MkvError::schema("structure", "expected an object"))?;
            for key in map.keys() {
                if !["xi", "eta", "phi"].contains(&key.as_str()) {
                    return Err(MkvError::schema(format!("structure.{key}"), "unknown key"));
                }
            }
            let xi = spec.expr_vector(
                map.get("xi").ok_or_else(|| MkvError::schema("structure.xi", "missing required field"))?,
                "structure.xi",
            )?;
            let eta = match map.get("eta") {
                Some(v) => Some(spec.expr_vector(v, "structure.eta")?),
                None => None,
            };
            let phi = spec.expr_matrix(
                map.get("phi").ok_or_else(|| MkvError::schema("structure.phi", "missing required field"))?,
                "structure.phi",
            )?;
            spec.structure = Some(StructureSpec { xi, eta, phi });
        }
        Ok(spec)
    }

    fn expr_vector(&self, v: &Value, path: &str) -> Result<Vec<Expr>> {
        let n = self.dim();
        let arr = v.as_array().ok_or_else(|| MkvError::schema(path, "expected an array of expression strings"))?;
        if arr.len() != n {
            return Err(MkvError::schema(path, format!("expected {n} components, found {}", arr.len())));
        }
        arr.iter()
            .enumerate()
            .map(|(i, e)| {
                let p = format!("{path}[{i}]");
                let s = e.as_str().ok_or_else(|| MkvError::schema(&p, "expected an expression string"))?;
                self.parse_expr(s, &p)
            })
            .collect()
    }

    fn expr_matrix(&self, v: &Value, path: &str) -> Result<Vec<Vec<Expr>>> {
        let n = self.dim();
        let rows = v.as_array().ok_or_else(|| MkvError::schema(path, "expected an n×n array"))?;
        if rows.len() != n {
            return Err(MkvError::schema(path, format!("expected {n} rows, found {}", rows.len())));
        }
        rows.iter().enumerate().map(|(i, r)| self.expr_vector(r, &format!("{path}[{i}]"))).collect()
    }
}

fn check_name(s: &str, path: &str) -> Result<()> {
    if !valid_identifier(s) {
        return Err(MkvError::schema(path, format!("`{s}` is not a valid identifier")));
    }
    if Func::from_name(s).is_some() {
        return Err(MkvError::schema(path, format!("`{s}` is a reserved function name")));
    }
    Ok(())
}

/// Convenience builder used by the catalog and tests.
pub struct SpecBuilder {
    spec: Spec,
}

impl SpecBuilder {
    pub fn new(name: &str, coords: &[&str]) -> Self {
        SpecBuilder {
            spec: Spec {
                name: name.into(),
                coords: coords.iter().map(|c| c.to_string()).collect(),
                domain: vec![(-1.0, 1.0); coords.len()],
                params: Vec::new(),
                metric: Vec::new(),
                fields: BTreeMap::new(),
                structure: None,
            },
        }
    }

    pub fn domain(mut self, coord: &str, lo: f64, hi: f64) -> Self {
        let i = self.spec.coord_index(coord).expect("declared coordinate");
        self.spec.domain[i] = (lo, hi);
        self
    }

    pub fn param(mut self, name: &str, value: f64) -> Self {
        self.spec.params.push((name.into(), value));
        self.spec.params.sort_by(|a, b| a.0.cmp(&b.0));
        self
    }

    fn row(&self, row: &[&str], path: &str) -> Result<Vec<Expr>> {
        row.iter().enumerate().map(|(j, s)| self.spec.parse_expr(s, &format!("{path}[{j}]"))).collect()
    }

    fn matrix(&self, rows: &[Vec<&str>], path: &str) -> Result<Vec<Vec<Expr>>> {
        rows.iter().enumerate().map(|(i, r)| self.row(r, &format!("{path}[{i}]"))).collect()
    }

    pub fn metric(mut self, rows: &[Vec<&str>]) -> Result<Self> {
        self.spec.metric = self.matrix(rows, "metric")?;
        Ok(self)
    }

    /// Diagonal metric from its diagonal entries.
    pub fn diagonal_metric(self, diag: &[&str]) -> Result<Self> {
        let n = diag.len();
        let rows: Vec<Vec<&str>> =
            (0..n).map(|i| (0..n).map(|j| if i == j { diag[i] } else { "0" }).collect()).collect();
        self.metric(&rows)
    }

    pub fn field(mut self, name: &str, comps: &[&str]) -> Result<Self> {
        let f = self.row(comps, &format!("fields.{name}"))?;
        self.spec.fields.insert(name.into(), f);
        Ok(self)
    }

    pub fn structure(mut self, xi: &[&str], eta: Option<&[&str]>, phi: &[Vec<&str>]) -> Result<Self> {
        let xi = self.row(xi, "structure.xi")?;
        let eta = match eta {
            Some(e) => Some(self.row(e, "structure.eta")?),
            None => None,
        };
        let phi = self.matrix(phi, "structure.phi")?;
        self.spec.structure = Some(StructureSpec { xi, eta, phi });
        Ok(self)
    }

    pub fn build(self) -> Spec {
        self.spec
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat() -> Spec {
        SpecBuilder::new("flat", &["x", "y", "z"])
            .diagonal_metric(&["1", "1", "1"])
            .unwrap()
            .field("V", &["x", "y - z", "y + z"])
            .unwrap()
            .build()
    }

    #[test]
    fn canonical_text_round_trips() {
        let s = flat();
        let text = s.to_json_string();
        let back = Spec::from_json_str(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_json_string(), text);
    }

    #[test]
    fn missing_metric_is_named() {
        let err = Spec::from_json_str(r#"{"name":"a","dimension":1,"coordinates":["x"]}"#).unwrap_err();
        assert!(matches!(err, MkvError::Schema { ref path, .. } if path == "metric"), "{err}");
    }

    #[test]
    fn wrong_arity_reports_path() {
        let err = Spec::from_json_str(
            r#"{"name":"a","dimension":2,"coordinates":["x","y"],"metric":[["1","0"],["0"]]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, MkvError::Schema { ref path, .. } if path == "metric[1]"), "{err}");
    }

    #[test]
    fn unbound_identifier_in_field() {
        let err = Spec::from_json_str(
            r#"{"name":"a","dimension":1,"coordinates":["x"],"metric":[["1"]],"fields":{"V":["q"]}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, MkvError::Parse { ref path, .. } if path == "fields.V[0]"), "{err}");
    }

    #[test]
    fn reserved_names_rejected() {
        let err = Spec::from_json_str(r#"{"name":"a","dimension":1,"coordinates":["exp"],"metric":[["1"]]}"#)
            .unwrap_err();
        assert!(matches!(err, MkvError::Schema { .. }));
    }

    #[test]
    fn asymmetric_metric_detected() {
        let s = SpecBuilder::new("a", &["x", "y"]).metric(&[vec!["1", "x"], vec!["0", "1"]]).unwrap().build();
        let err = s.check_metric(&[vec![0.5, 0.0]]).unwrap_err();
        assert!(matches!(err, MkvError::Schema { ref path, .. } if path == "metric[0][1]"));
    }

    #[test]
    fn xi_resolves_to_structure() {
        let s = SpecBuilder::new("a", &["x"])
            .diagonal_metric(&["1"])
            .unwrap()
            .structure(&["1"], None, &[vec!["0"]])
            .unwrap()
            .build();
        assert_eq!(s.field("xi").unwrap().len(), 1);
        assert!(matches!(s.field("W"), Err(MkvError::UnknownField(_))));
    }
}
