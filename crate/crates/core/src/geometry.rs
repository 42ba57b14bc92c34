//! Levi-Civita geometry of a coordinate chart at a point.
//!
//! Conventions: `gamma[k][i][j] = Γ^k_ij`, `riem[l][i][j][k]` is the `∂_l`
//! component of `R(∂_i, ∂_j)∂_k` with `R(X,Y) = [∇_X, ∇_Y] − ∇_[X,Y]`,
//! `Ric_jk = Σ_i riem[i][i][j][k]`, `Q = g⁻¹ Ric` and `r = tr Q`.

use nalgebra::{DMatrix, DVector};

use crate::error::{MkvError, Result};
use crate::jet::{self, Jet};
use crate::report::{max_of, Detail, Report};
use crate::sampling::{map_points, RunConfig};
use crate::spec::Spec;
use crate::tensor::{relative, Tensor};

#[derive(Clone, Debug)]
pub struct Geometry {
    pub point: Vec<f64>,
    pub n: usize,
    pub g: Tensor<Jet>,
    pub ginv: Tensor<Jet>,
    pub gamma: Tensor<Jet>,
    pub riem: Tensor<Jet>,
    pub ric: Tensor<Jet>,
    pub q: Tensor<Jet>,
    pub r: Jet,
    pub gm: DMatrix<f64>,
    pub ginvm: DMatrix<f64>,
}

impl Geometry {
    pub fn at(spec: &Spec, point: &[f64]) -> Result<Geometry> {
        let n = spec.dim();
        let g = spec.metric_jets(point, 3)?;
        let gm = g.values().matrix();
        let det = gm.determinant();
        if !(det.abs() > 1e-10) {
            return Err(MkvError::DegenerateMetric { point: point.to_vec(), det });
        }
        let inv = jet::invert(n, &g.data, 1e-300)
            .ok_or(MkvError::DegenerateMetric { point: point.to_vec(), det })?;
        let ginv = Tensor { n, up: 2, down: 0, data: inv };
        let ginvm = ginv.values().matrix();

        let dg: Vec<Jet> = (0..n * n * n).map(|k| g.data[k / n].partial(k % n)).collect();
        // dg[(i*n + j)*n + l] = ∂_l g_ij
        let d = |i: usize, j: usize, l: usize| &dg[(i * n + j) * n + l];
        let gamma = Tensor::from_fn(n, 1, 2, |idx| {
            let (k, i, j) = (idx[0], idx[1], idx[2]);
            let mut acc = Jet::zero(n);
            for l in 0..n {
                let s = d(j, l, i) + d(i, l, j) - d(i, j, l);
                acc = acc + ginv.at(&[k, l]) * &s;
            }
            acc.scale(0.5)
        });
        let dgamma = gamma.partials(); // [k][i][j][c] = ∂_c Γ^k_ij
        let riem = Tensor::from_fn(n, 1, 3, |idx| {
            let (l, i, j, k) = (idx[0], idx[1], idx[2], idx[3]);
            let mut acc = dgamma.at(&[l, j, k, i]) - dgamma.at(&[l, i, k, j]);
            for m in 0..n {
                acc = acc + gamma.at(&[l, i, m]) * gamma.at(&[m, j, k]);
                acc = acc - gamma.at(&[l, j, m]) * gamma.at(&[m, i, k]);
            }
            acc
        });
        let ric = Tensor::from_fn(n, 0, 2, |idx| {
            jet::sum(n, (0..n).map(|i| riem.at(&[i, i, idx[0], idx[1]])))
        });
        let q = ric.raise_first(&ginv);
        let r = q.trace();
        Ok(Geometry { point: point.to_vec(), n, g, ginv, gamma, riem, ric, q, r, gm, ginvm })
    }

    pub fn norm(&self, t: &Tensor<f64>) -> f64 {
        t.norm(&self.gm, &self.ginvm)
    }

    pub fn vnorm(&self, v: &DVector<f64>) -> f64 {
        self.inner(v, v).abs().sqrt()
    }

    pub fn inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (a.transpose() * &self.gm * b)[(0, 0)]
    }

    /// g-inner product of two (0,2) tensors given as matrices.
    pub fn inner02(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (&self.ginvm * a * &self.ginvm * b.transpose()).trace()
    }

    pub fn norm02(&self, a: &DMatrix<f64>) -> f64 {
        self.inner02(a, a).abs().sqrt()
    }

    /// Norm of a (1,1) tensor given as a matrix `A^i_j`.
    pub fn norm11(&self, a: &DMatrix<f64>) -> f64 {
        (a.transpose() * &self.gm * a * &self.ginvm).trace().abs().sqrt()
    }

    pub fn riemann(&self) -> Tensor<f64> {
        self.riem.values()
    }

    /// `R(X,Y)Z`.
    pub fn curvature(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let mut out = DVector::zeros(n);
        for l in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        acc += self.riem.at(&[l, i, j, k]).value() * x[i] * y[j] * z[k];
                    }
                }
            }
            out[l] = acc;
        }
        out
    }

    pub fn ricci(&self) -> DMatrix<f64> {
        self.ric.values().matrix()
    }

    pub fn ricci_operator(&self) -> DMatrix<f64> {
        self.q.values().matrix()
    }

    pub fn scalar(&self) -> f64 {
        self.r.value()
    }

    /// `R_lijk = g_lm riem[m][i][j][k]`, i.e. `g(R(∂_i,∂_j)∂_k, ∂_l)`.
    pub fn lowered_riemann(&self) -> Tensor<f64> {
        self.riemann().transform_slot(0, &self.gm)
    }

    /// Max violation of the pair symmetries and first Bianchi identity,
    /// relative to the curvature scale.
    pub fn curvature_symmetry_residual(&self) -> f64 {
        let r = self.lowered_riemann();
        let n = self.n;
        let scale = 1.0 + r.max_abs();
        let mut worst: f64 = 0.0;
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let v = r.at(&[l, i, j, k]);
                        worst = worst.max((v + r.at(&[l, j, i, k])).abs());
                        worst = worst.max((v + r.at(&[k, i, j, l])).abs());
                        worst = worst.max((v - r.at(&[j, k, l, i])).abs());
                        // R(X,Y)Z + R(Y,Z)X + R(Z,X)Y = 0
                        let b = v + r.at(&[l, j, k, i]) + r.at(&[l, k, i, j]);
                        worst = worst.max(b.abs());
                    }
                }
            }
        }
        worst / scale
    }

    /// `max |∇g|`, which must vanish for the Levi-Civita connection.
    pub fn compatibility_residual(&self) -> f64 {
        self.g.covariant(&self.gamma).values().max_abs()
    }

    /// `max_j |(div Q)_j − ½ ∂_j r|` (contracted second Bianchi identity).
    pub fn contracted_bianchi_residual(&self) -> f64 {
        let dq = self.q.covariant(&self.gamma).values(); // [i][j][c]
        let n = self.n;
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let div: f64 = (0..n).map(|i| dq.at(&[i, j, i])).sum();
            worst = worst.max((div - 0.5 * self.r.d(j)).abs());
        }
        worst
    }

    /// The three-dimensional Weyl-type tensor
    /// `W(X,Y)Z = R(X,Y)Z − [Ric(Y,Z)X − Ric(X,Z)Y + g(Y,Z)QX − g(X,Z)QY]
    ///            + (r/2)[g(Y,Z)X − g(X,Z)Y]`, laid out like `riem`.
    pub fn weyl3(&self) -> Result<Tensor<f64>> {
        if self.n != 3 {
            return Err(MkvError::Invalid(format!("Weyl tensor display needs dimension 3, got {}", self.n)));
        }
        let riem = self.riemann();
        let ric = self.ricci();
        let q = self.ricci_operator();
        let g = &self.gm;
        let r = self.scalar();
        let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        Ok(Tensor::from_fn(3, 1, 3, |idx| {
            let (l, i, j, k) = (idx[0], idx[1], idx[2], idx[3]);
            let bracket = ric[(j, k)] * delta(l, i) - ric[(i, k)] * delta(l, j) + g[(j, k)] * q[(l, i)]
                - g[(i, k)] * q[(l, j)];
            riem.at(idx) - bracket + 0.5 * r * (g[(j, k)] * delta(l, i) - g[(i, k)] * delta(l, j))
        }))
    }

    /// Norm of the Weyl display (should vanish in dimension 3).
    pub fn weyl3_norm(&self) -> Result<f64> {
        Ok(self.norm(&self.weyl3()?))
    }
}

/// Christoffel symbols from metric values with a 4th-order central stencil.
pub fn christoffel_fd(spec: &Spec, point: &[f64], h: f64) -> Result<Tensor<f64>> {
    let n = spec.dim();
    let mut dg = vec![DMatrix::zeros(n, n); n];
    for (l, slot) in dg.iter_mut().enumerate() {
        let at = |s: f64| -> Result<DMatrix<f64>> {
            let mut p = point.to_vec();
            p[l] += s * h;
            spec.metric_values(&p)
        };
        *slot = (at(-2.0)? - at(-1.0)? * 8.0 + at(1.0)? * 8.0 - at(2.0)?) / (12.0 * h);
    }
    let g = spec.metric_values(point)?;
    let ginv = g.clone().try_inverse().ok_or(MkvError::DegenerateMetric { point: point.to_vec(), det: 0.0 })?;
    Ok(Tensor::from_fn(n, 1, 2, |idx| {
        let (k, i, j) = (idx[0], idx[1], idx[2]);
        0.5 * (0..n)
            .map(|l| ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]))
            .sum::<f64>()
    }))
}

pub const COMPATIBILITY_TOL: f64 = 1e-10;
pub const BIANCHI_TOL: f64 = 1e-7;
pub const FD_TOL: f64 = 1e-6;
pub const FD_STEP: f64 = 1e-4;

/// Curvature at the sample points plus the substrate self-checks:
/// metric compatibility, curvature symmetries, contracted Bianchi identity
/// and jets against finite-difference Christoffel symbols.
pub fn curvature_report(spec: &Spec, cfg: &RunConfig) -> Result<Report> {
    let points = cfg.sampling.points(spec)?;
    let res = map_points(&points, |p| {
        let geo = Geometry::at(spec, p)?;
        let fd = christoffel_fd(spec, p, FD_STEP)?;
        let jets = geo.gamma.values();
        let fd_diff = relative(fd.sub(&jets).max_abs(), jets.max_abs());
        let weyl = if geo.n == 3 { Some(geo.weyl3_norm()?) } else { None };
        Ok((geo, fd_diff, weyl))
    })?;
    let mut r = Report::new(&spec.name, "curvature");
    r.add_failures(&res.failed);
    r.check("metric_compatibility", max_of(res.values().map(|x| x.0.compatibility_residual())), COMPATIBILITY_TOL);
    r.check("curvature_symmetries", max_of(res.values().map(|x| x.0.curvature_symmetry_residual())), 1e-8);
    r.check("contracted_bianchi", max_of(res.values().map(|x| x.0.contracted_bianchi_residual())), BIANCHI_TOL);
    r.check("christoffel_vs_finite_difference", max_of(res.values().map(|x| x.1)), FD_TOL);
    if res.values().all(|x| x.2.is_some()) {
        r.info("weyl_3d", max_of(res.values().map(|x| x.2.unwrap_or(0.0))), 1e-8);
    }
    let scalars: Vec<f64> = res.values().map(|x| x.0.scalar()).collect();
    if !scalars.is_empty() {
        r.summary_f64("scalar_min", scalars.iter().cloned().fold(f64::INFINITY, f64::min));
        r.summary_f64("scalar_max", scalars.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    }
    if let [(_, (geo, _, _))] = res.ok.as_slice() {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> { m.row_iter().map(|row| row.iter().cloned().collect()).collect() };
        r.summary("metric", rows(&geo.gm));
        r.summary("ricci", rows(&geo.ricci()));
        r.summary("christoffel", geo.gamma.values().data);
    }
    for (p, (geo, _, _)) in &res.ok {
        let mut fitted = std::collections::BTreeMap::new();
        fitted.insert("scalar".to_string(), geo.scalar());
        r.details.push(Detail { point: p.clone(), residual: geo.contracted_bianchi_residual(), fitted });
    }
    r.summary("points", res.ok.len());
    Ok(r)
}

/// Per-point data for a vector field `V` on top of the chart geometry.
#[derive(Clone, Debug)]
pub struct FieldAt {
    pub v: DVector<f64>,
    /// `∇V` as `a[(i,j)] = ∇_j V^i`.
    pub a: DMatrix<f64>,
    /// Twist operator: `g(X, φY) = g(∇_X V, Y) − g(X, ∇_Y V)`.
    pub twist: DMatrix<f64>,
    pub lie: DMatrix<f64>,
    /// `L_V L_V g` from the coordinate Lie derivative applied twice.
    pub lie2: DMatrix<f64>,
    /// `L_V L_V g` from the curvature expansion.
    pub lie2_curvature: DMatrix<f64>,
    pub nabla_vv: DVector<f64>,
    /// `d_nabla_vv[(i,j)] = (∇_j ∇_V V)^i`.
    pub d_nabla_vv: DMatrix<f64>,
    pub nabla_v_twist: DMatrix<f64>,
    /// `Y ↦ R(V,Y)V` as a matrix.
    pub rvv: DMatrix<f64>,
    pub ric_vv: f64,
    /// Second covariant derivative `hess[i][j][c] = (∇_c ∇V)^i_j`.
    pub hess: Tensor<f64>,
    /// Conformal factor candidate `λ = tr(g⁻¹ L_V g) / 2n` and `V(λ)`.
    pub lambda: f64,
    pub v_lambda: f64,
    /// Value of the operator `E` with `(L_V L_V g)(X,Y) = g(X, E Y)`.
    pub e_op: DMatrix<f64>,
}

const LIE_ROUTE_TOL: f64 = 1e-10;
const SECOND_LIE_ROUTE_TOL: f64 = 1e-8;

impl FieldAt {
    pub fn new(geo: &Geometry, v: &Tensor<Jet>) -> Result<FieldAt> {
        let n = geo.n;
        let a_j = v.covariant(&geo.gamma);
        let lie_j = geo.g.lie(v);
        let lie2_j = lie_j.lie(v);
        let a_low = a_j.lower_first(&geo.g); // [i][j] = g_ik ∇_j V^k
        let twist_low = Tensor::from_fn(n, 0, 2, |idx| a_low.at(&[idx[1], idx[0]]) - a_low.at(&[idx[0], idx[1]]));
        let twist_j = twist_low.raise_first(&geo.ginv);
        let nvv_j = a_j.along(v);
        let d_nvv = nvv_j.covariant(&geo.gamma).values();
        let nabla_twist = twist_j.covariant(&geo.gamma);
        let nabla_v_twist = nabla_twist.along(v).values().matrix();
        let hess = a_j.covariant(&geo.gamma).values();

        let lambda_j = lie_j.raise_first(&geo.ginv).trace().scale(1.0 / (2.0 * n as f64));
        let vv: Vec<f64> = v.data.iter().map(Jet::value).collect();
        let v_lambda: f64 = (0..n).map(|i| vv[i] * lambda_j.d(i)).sum();

        let a = a_j.values().matrix();
        let lie = lie_j.values().matrix();
        let a_lowv = a_low.values().matrix();
        let lie_cov = &a_lowv + a_lowv.transpose();
        let res = relative(geo.norm02(&(&lie - &lie_cov)), geo.norm02(&lie));
        if res > LIE_ROUTE_TOL {
            return Err(MkvError::InternalConsistency { what: "Lie derivative of the metric".into(), residual: res });
        }

        let vvec = DVector::from_vec(vv);
        let mut rvv = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = DVector::zeros(n);
            e[j] = 1.0;
            rvv.set_column(j, &geo.curvature(&vvec, &e, &vvec));
        }
        let ric_vv = (vvec.transpose() * geo.ricci() * &vvec)[(0, 0)];
        let twist = twist_j.values().matrix();
        let d_nabla_vv = d_nvv.matrix();
        let e_op = &rvv * 2.0 + &d_nabla_vv * 2.0 + &a * &a * 2.0 + &twist * &a * 3.0 + &nabla_v_twist
            + &twist * &twist
            + &a * &twist;
        let lie2_curvature = &geo.gm * &e_op;
        let lie2 = lie2_j.values().matrix();
        let res = relative(geo.norm02(&(&lie2 - &lie2_curvature)), geo.norm02(&lie2));
        if res > SECOND_LIE_ROUTE_TOL {
            return Err(MkvError::InternalConsistency {
                what: "second Lie derivative of the metric (coordinate vs curvature expansion)".into(),
                residual: res,
            });
        }
        Ok(FieldAt {
            v: vvec,
            a,
            twist,
            lie,
            lie2,
            lie2_curvature,
            nabla_vv: nvv_j.values().vector(),
            d_nabla_vv,
            nabla_v_twist,
            rvv,
            ric_vv,
            hess,
            lambda: lambda_j.value(),
            v_lambda,
            e_op,
        })
    }

    pub fn div(&self) -> f64 {
        self.a.trace()
    }

    /// `∇_X ∇_Y V − ∇_{∇_X Y} V` for coordinate-constant `Y`, i.e. `(∇²V)(X, Y)`.
    pub fn hessian_apply(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let n = self.v.len();
        DVector::from_fn(n, |i, _| {
            let mut acc = 0.0;
            for j in 0..n {
                for c in 0..n {
                    acc += self.hess.at(&[i, j, c]) * x[c] * y[j];
                }
            }
            acc
        })
    }

    /// `(L_V ∇)(X,Y) = ∇_X∇_Y V − ∇_{∇_X Y} V − R(X,V)Y`.
    pub fn lie_connection(&self, geo: &Geometry, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        self.hessian_apply(x, y) - geo.curvature(x, &self.v, y)
    }

    /// Projection coefficient `⟨L_V L_V g, L_V g⟩ / ‖L_V g‖²` and its
    /// relative residual; `None` at Killing-degenerate points.
    pub fn fit_factor(&self, geo: &Geometry, eps: f64) -> Option<(f64, f64)> {
        let l2 = geo.inner02(&self.lie, &self.lie);
        if geo.norm02(&self.lie) < eps || l2 == 0.0 {
            return None;
        }
        let f = geo.inner02(&self.lie2, &self.lie) / l2;
        Some((f, self.factor_residual(geo, f)))
    }

    /// `‖L_V L_V g − f L_V g‖ / (1 + ‖L_V L_V g‖)`.
    pub fn factor_residual(&self, geo: &Geometry, f: f64) -> f64 {
        relative(geo.norm02(&(&self.lie2 - &self.lie * f)), geo.norm02(&self.lie2))
    }

    /// Matrix of `Y ↦ 2R(V,Y)V + (∇_Vφ)Y − [2f∇_YV + fφY − 2∇_Y∇_VV
    /// − 2∇_{∇_YV}V − 3φ∇_YV − φ²Y − ∇_{φY}V]`.
    pub fn criterion_operator(&self, f: f64) -> DMatrix<f64> {
        &self.e_op - (&self.a * 2.0 + &self.twist) * f
    }

    pub fn criterion_residual(&self, geo: &Geometry, f: f64, y: &DVector<f64>) -> f64 {
        let res = self.criterion_operator(f) * y;
        relative(geo.vnorm(&res), geo.vnorm(&(&self.e_op * y)))
    }

    /// Part of the residual vector coming from `(∇_V φ)Y`.
    pub fn twist_term(&self, geo: &Geometry, y: &DVector<f64>) -> f64 {
        geo.vnorm(&(&self.nabla_v_twist * y))
    }

    /// `g(R(Y,V)V,Y) − g(∇_Y∇_VV,Y) − ‖∇_YV‖² + f g(∇_YV,Y)` (signed).
    pub fn quadratic_value(&self, geo: &Geometry, f: f64, y: &DVector<f64>) -> f64 {
        let ay = &self.a * y;
        -geo.inner(&(&self.rvv * y), y) - geo.inner(&(&self.d_nabla_vv * y), y) - geo.inner(&ay, &ay)
            + f * geo.inner(&ay, y)
    }

    pub fn quadratic_residual(&self, geo: &Geometry, f: f64, y: &DVector<f64>) -> f64 {
        let reference = 0.5 * (y.transpose() * &self.lie2 * y)[(0, 0)];
        relative(self.quadratic_value(geo, f, y).abs(), reference)
    }

    /// `‖∇V‖²` contracted with the metric.
    pub fn nabla_norm_sq(&self, geo: &Geometry) -> f64 {
        (self.a.transpose() * &geo.gm * &self.a * &geo.ginvm).trace()
    }

    /// `Ric(V,V) − div(∇_VV) − ‖∇V‖² + f div V` (signed).
    pub fn bochner_value(&self, geo: &Geometry, f: f64) -> f64 {
        self.ric_vv - self.d_nabla_vv.trace() - self.nabla_norm_sq(geo) + f * self.div()
    }

    pub fn bochner_residual(&self, geo: &Geometry, f: f64) -> f64 {
        let scale = self.ric_vv.abs() + self.d_nabla_vv.trace().abs() + self.nabla_norm_sq(geo).abs();
        relative(self.bochner_value(geo, f).abs(), scale)
    }
}

/// Probe directions: basis vectors and pairwise sums.
pub fn probes(n: usize) -> Vec<DVector<f64>> {
    let mut out = Vec::new();
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        out.push(e);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let mut e = DVector::zeros(n);
            e[i] = 1.0;
            e[j] = 1.0;
            out.push(e);
        }
    }
    out
}

pub fn basis(n: usize) -> Vec<DVector<f64>> {
    (0..n)
        .map(|i| {
            let mut e = DVector::zeros(n);
            e[i] = 1.0;
            e
        })
        .collect()
}
