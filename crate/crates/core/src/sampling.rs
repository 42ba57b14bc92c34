//! Deterministic sample points and the parallel per-point driver.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{MkvError, Result};
use crate::spec::Spec;

pub const DEFAULT_GRID: usize = 5;
pub const DEFAULT_RANDOM: usize = 32;
pub const DEFAULT_SEED: u64 = 24029;
pub const MAX_POINTS: usize = 100_000;
const SHRINK: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct Sampling {
    pub grid: usize,
    pub random: usize,
    pub seed: u64,
    /// When set, only this point is used; missing coordinates take the
    /// domain midpoint.
    pub point: Option<BTreeMap<String, f64>>,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling { grid: DEFAULT_GRID, random: DEFAULT_RANDOM, seed: DEFAULT_SEED, point: None }
    }
}

impl Sampling {
    pub fn grid_only(grid: usize) -> Self {
        Sampling { grid, random: 0, ..Sampling::default() }
    }

    pub fn points(&self, spec: &Spec) -> Result<Vec<Vec<f64>>> {
        let n = spec.dim();
        if let Some(overrides) = &self.point {
            let mut p = spec.midpoint();
            for (name, v) in overrides {
                let i = spec
                    .coord_index(name)
                    .ok_or_else(|| MkvError::Invalid(format!("--point names unknown coordinate `{name}`")))?;
                p[i] = *v;
            }
            return Ok(vec![p]);
        }
        let shrunk: Vec<(f64, f64)> = spec
            .domain
            .iter()
            .map(|&(lo, hi)| {
                let w = hi - lo;
                (lo + SHRINK * w, hi - SHRINK * w)
            })
            .collect();
        let mut per_axis = self.grid.max(1);
        while per_axis > 1 && per_axis.saturating_pow(n as u32) > MAX_POINTS {
            per_axis -= 1;
        }
        let axis = |i: usize, k: usize| {
            let (lo, hi) = shrunk[i];
            if per_axis == 1 {
                0.5 * (lo + hi)
            } else {
                lo + (hi - lo) * k as f64 / (per_axis - 1) as f64
            }
        };
        let mut points = Vec::new();
        let total = per_axis.pow(n as u32);
        for mut k in 0..total {
            let mut p = vec![0.0; n];
            for i in (0..n).rev() {
                p[i] = axis(i, k % per_axis);
                k /= per_axis;
            }
            points.push(p);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for _ in 0..self.random {
            let p = shrunk.iter().map(|&(lo, hi)| if hi > lo { rng.random_range(lo..hi) } else { lo }).collect();
            points.push(p);
        }
        if points.is_empty() {
            return Err(MkvError::NoSamples);
        }
        Ok(points)
    }
}

/// Sampling plus an optional override of a check's primary tolerance.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub sampling: Sampling,
    pub tol: Option<f64>,
}

impl RunConfig {
    pub fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    pub fn with_grid(grid: usize) -> Self {
        RunConfig { sampling: Sampling { grid, ..Sampling::default() }, tol: None }
    }
}

/// Outcome of evaluating a per-point computation over a sample set.
#[derive(Debug)]
pub struct PointResults<T> {
    pub ok: Vec<(Vec<f64>, T)>,
    pub failed: Vec<(Vec<f64>, String)>,
}

impl<T> PointResults<T> {
    pub fn values(&self) -> impl Iterator<Item = &T> {
        self.ok.iter().map(|(_, t)| t)
    }
}

/// Evaluate `f` at every point in parallel. Results keep the input order.
/// Per-point evaluation failures are collected; internal consistency
/// faults abort the whole run.
pub fn map_points<T, F>(points: &[Vec<f64>], f: F) -> Result<PointResults<T>>
where
    T: Send,
    F: Fn(&[f64]) -> Result<T> + Sync,
{
    let raw: Vec<Result<T>> = points.par_iter().map(|p| f(p)).collect();
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (p, r) in points.iter().zip(raw) {
        match r {
            Ok(t) => ok.push((p.clone(), t)),
            Err(e @ MkvError::InternalConsistency { .. }) => return Err(e),
            Err(e) if e.is_input_error() => return Err(e),
            Err(e) => failed.push((p.clone(), e.to_string())),
        }
    }
    Ok(PointResults { ok, failed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::SpecBuilder;

    fn spec3() -> Spec {
        SpecBuilder::new("s", &["x", "y", "z"])
            .domain("z", 0.25, 4.0)
            .diagonal_metric(&["1", "1", "1"])
            .unwrap()
            .build()
    }

    #[test]
    fn default_sampling_counts_and_bounds() {
        let pts = Sampling::default().points(&spec3()).unwrap();
        assert_eq!(pts.len(), 125 + 32);
        for p in &pts {
            assert!(p[0] >= -0.9 - 1e-12 && p[0] <= 0.9 + 1e-12);
            assert!(p[2] > 0.25 && p[2] < 4.0);
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let a = Sampling::default().points(&spec3()).unwrap();
        let b = Sampling::default().points(&spec3()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grid_capped() {
        let s = SpecBuilder::new("big", &["a", "b", "c", "d", "e", "f"])
            .diagonal_metric(&["1", "1", "1", "1", "1", "1"])
            .unwrap()
            .build();
        let pts = Sampling::grid_only(20).points(&s).unwrap();
        assert!(pts.len() <= MAX_POINTS);
    }

    #[test]
    fn single_point_override() {
        let mut m = BTreeMap::new();
        m.insert("z".to_string(), 1.0);
        let pts = Sampling { point: Some(m), ..Sampling::default() }.points(&spec3()).unwrap();
        assert_eq!(pts, vec![vec![0.0, 0.0, 1.0]]);
    }
}
