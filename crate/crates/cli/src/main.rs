//! `mkv`: verify Killing-type fields and almost coKähler structures on
//! coordinate charts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mkv_core::catalog::{self, EntryOptions};
use mkv_core::contact;
use mkv_core::deform;
use mkv_core::geometry;
use mkv_core::killing;
use mkv_core::realline::{self, RealLineProblem};
use mkv_core::reeb;
use mkv_core::report::{Report, Verdict};
use mkv_core::sampling::{RunConfig, Sampling};
use mkv_core::spec::Spec;
use mkv_core::MkvError;

#[derive(Parser, Debug)]
#[command(name = "mkv", version, about = "Mixed Killing vector fields and almost coKähler structures")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Emit a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Grid points per axis.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Override the primary tolerance of the check.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Evaluate at a single point, e.g. `x=0.5,z=1`.
    #[arg(long, global = true)]
    point: Option<String>,
    /// Set a spec parameter, e.g. `a=2` (repeatable).
    #[arg(long = "param", global = true)]
    params: Vec<String>,
    /// Half-dimension for `group-H`.
    #[arg(long, global = true)]
    n: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the metric and, if present, the structure axioms.
    Validate { spec: String },
    /// Curvature and numerical self-checks.
    Curvature { spec: String },
    /// Classify a vector field and evaluate the curvature criteria.
    Killing {
        spec: String,
        #[arg(long)]
        field: String,
        /// Use this factor instead of the fitted one.
        #[arg(long)]
        f: Option<String>,
    },
    /// Structure pipeline: axioms, h, identities and classifiers.
    Contact { spec: String },
    /// Reeb field: Lie-derivative formulas, mixed Killing and 2-Killing tests.
    Reeb { spec: String },
    /// Necessary conditions for V = αξ.
    Collinear {
        spec: String,
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        f: Option<String>,
    },
    /// Fit L_Vη = ση.
    Contacttrans {
        spec: String,
        #[arg(long)]
        field: String,
    },
    /// Mixed Killing fields under the conformal change g ↦ ρg.
    Conformal {
        spec: String,
        #[arg(long)]
        field: String,
        #[arg(long)]
        rho: String,
    },
    /// D-homothetic deformation.
    Deform {
        spec: String,
        #[arg(long)]
        u: String,
        #[arg(long)]
        c: f64,
        /// Write the deformed spec here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// V = r(x)∂x on the real line.
    Line {
        #[arg(long)]
        r: String,
        #[arg(long)]
        f: Option<String>,
        #[arg(long, default_value = "x")]
        coord: String,
        /// Interval `lo,hi`.
        #[arg(long, value_parser = parse_interval)]
        domain: Option<(f64, f64)>,
        #[arg(long)]
        x0: Option<f64>,
        #[arg(long = "t-end")]
        t_end: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
    },
    /// Reproduce the documented claims for a catalog entry (or `all`).
    Reproduce { entry: String },
    /// Write a catalog entry as a spec document.
    Export { entry: String, path: PathBuf },
}

fn parse_interval(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected lo,hi")?;
    let lo = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let hi = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((lo, hi))
}

fn parse_assignments(items: &[String], what: &str) -> Result<Vec<(String, f64)>, MkvError> {
    let mut out = Vec::new();
    for item in items.iter().flat_map(|s| s.split(',')) {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| MkvError::Invalid(format!("{what} expects name=value, got `{item}`")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| MkvError::Invalid(format!("{what}: `{}` is not a number", v.trim())))?;
        out.push((k.trim().to_string(), v));
    }
    Ok(out)
}

impl Global {
    fn config(&self) -> Result<RunConfig, MkvError> {
        let mut sampling = Sampling::default();
        if let Some(g) = self.grid {
            if g == 0 {
                return Err(MkvError::Invalid("--grid must be at least 1".into()));
            }
            sampling.grid = g;
        }
        if let Some(p) = &self.point {
            let map: BTreeMap<String, f64> = parse_assignments(std::slice::from_ref(p), "--point")?.into_iter().collect();
            sampling.point = Some(map);
        }
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(MkvError::Invalid("--tol must be positive".into()));
            }
        }
        Ok(RunConfig { sampling, tol: self.tol })
    }

    fn entry_options(&self) -> Result<EntryOptions, MkvError> {
        Ok(EntryOptions { n: self.n, params: parse_assignments(&self.params, "--param")? })
    }
}

/// A spec file, or a catalog entry by name.
fn load_spec(arg: &str, g: &Global, cfg: &RunConfig) -> Result<(Spec, Vec<String>), MkvError> {
    let path = Path::new(arg);
    let spec = if path.exists() {
        let mut s = Spec::load(path)?;
        for (k, v) in parse_assignments(&g.params, "--param")? {
            s.set_param(&k, v)?;
        }
        s
    } else if catalog::ENTRIES.contains(&arg) {
        catalog::entry(arg, &g.entry_options()?)?.spec
    } else {
        return Err(MkvError::Invalid(format!(
            "`{arg}` is neither a spec file nor a catalog entry ({})",
            catalog::ENTRIES.join(", ")
        )));
    };
    let points = cfg.sampling.points(&spec)?;
    let warnings = spec.check_metric(&points)?;
    Ok((spec, warnings))
}

fn run(cli: &Cli) -> Result<Report, MkvError> {
    let g = &cli.global;
    let cfg = g.config()?;
    let with_warnings = |mut r: Report, w: Vec<String>| {
        for x in w {
            r.warn(x);
        }
        r
    };
    match &cli.command {
        Command::Validate { spec } => {
            let (s, w) = load_spec(spec, g, &cfg)?;
            let mut r = Report::new(&s.name, "validate");
            r.summary("dimension", s.dim());
            r.summary("coordinates", s.coords.clone());
            if s.structure.is_some() {
                let samples = contact::sample_structure(&s, &cfg)?;
                r.add_failures(&samples.failed);
                contact::validate_rows(&mut r, &samples, &cfg, true);
                contact::almost_cokahler_rows(&mut r, &samples, &cfg, false);
            } else {
                let points = cfg.sampling.points(&s)?;
                r.summary("points", points.len());
            }
            Ok(with_warnings(r, w))
        }
        Command::Curvature { spec } => {
            let (s, w) = load_spec(spec, g, &cfg)?;
            Ok(with_warnings(geometry::curvature_report(&s, &cfg)?, w))
        }
        Command::Killing { spec, field, f } => {
            let (s, w) = load_spec(spec, g, &cfg)?;
            let f = f.as_deref().map(|src| s.parse_expr(src, "--f")).transpose()?;
            let k = killing::classify_field(&s, field, f.as_ref(), &cfg)?;
            Ok(with_warnings(k.report, w))
        }
        Command::Contact { spec } => {
            let (s, w) = load_spec(spec, g, &cfg)?;
            Ok(with_warnings(contact::contact_pipeline(&s, &cfg)?.0, w))
        }
        Command::Reeb { spec } => {
            let (s, w) = load_spec(spec, g, &cfg)?;
            let mut r = reeb::reeb_mixed_killing_check(&s, &cfg)?.report;
            let two = reeb::two_killing_reeb_check(&s, &cfg)?;
            r.absorb("two_killing", &two.report);
            r.summary("two_killing", two.direct);
            Ok(with_warnings(r, w))
        }
        Command::Collinear { spec, alpha, f } => {
            let (s, w) = load_spec(spec, g, &cfg)?;
            let alpha = s.parse_expr(alpha, "--alpha")?;
            let f = f.as_deref().map(|src| s.parse_expr(src, "--f")).transpose()?;
            Ok(with_warnings(reeb::collinear_field_check(&s, &alpha, f.as_ref(), &cfg)?.report, w))
        }
        Command::Contacttrans { spec, field } => {
            let (s, w) = load_spec(spec, g, &cfg)?;
            Ok(with_warnings(reeb::contact_transformation_check(&s, field, &cfg)?.report, w))
        }
        Command::Conformal { spec, field, rho } => {
            let (s, w) = load_spec(spec, g, &cfg)?;
            let rho = s.parse_expr(rho, "--rho")?;
            Ok(with_warnings(killing::conformal_change_check(&s, field, &rho, &cfg)?.report, w))
        }
        Command::Deform { spec, u, c, out } => {
            let (s, w) = load_spec(spec, g, &cfg)?;
            let u = s.parse_expr(u, "--u")?;
            let outcome = deform::d_homothetic_deform(&s, &u, *c, &cfg)?;
            let mut r = outcome.report;
            if let Some(path) = out {
                outcome.spec.save(path)?;
                r.summary("written", path.display().to_string());
            }
            Ok(with_warnings(r, w))
        }
        Command::Line { r, f, coord, domain, x0, t_end, step } => {
            let mut p = RealLineProblem::parse(coord, r, f.as_deref())?;
            if let Some(d) = domain {
                p.domain = *d;
            }
            if let Some(x) = x0 {
                p.x0 = *x;
            }
            if let Some(t) = t_end {
                p.t_end = *t;
            }
            if let Some(h) = step {
                p.step = *h;
            }
            Ok(realline::realline_analyze(&p, &cfg)?.report)
        }
        Command::Reproduce { entry } => {
            let path = Path::new(entry);
            if path.exists() {
                let s = Spec::load(path)?;
                let e = catalog::entry_for_spec(&s)?;
                return catalog::reproduce_entry(&e, &cfg);
            }
            catalog::reproduce(entry, &g.entry_options()?, &cfg)
        }
        Command::Export { entry, path } => {
            let e = catalog::entry(entry, &g.entry_options()?)?;
            e.spec.save(path)?;
            let mut r = Report::new(&e.spec.name, "export");
            r.summary("path", path.display().to_string());
            r.summary("description", e.description);
            Ok(r)
        }
    }
}

fn configure_threads() {
    if let Ok(v) = std::env::var("MKV_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    configure_threads();
    match run(&cli) {
        Ok(report) => {
            if cli.global.json {
                print!("{}", report.to_json());
            } else {
                print!("{}", report.to_text());
            }
            match report.verdict {
                Verdict::Pass => ExitCode::SUCCESS,
                Verdict::Fail | Verdict::Partial => ExitCode::from(1),
            }
        }
        Err(e) => {
            if cli.global.json {
                let doc = serde_json::json!({ "error": e.to_string(), "input_error": e.is_input_error() });
                println!("{}", serde_json::to_string_pretty(&doc).unwrap_or_default());
            }
            eprintln!("mkv: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}
