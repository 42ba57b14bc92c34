//! Dense coordinate tensors with valence metadata.
//!
//! Components are stored row-major with all contravariant indices first,
//! then the covariant ones. Operations that add a derivative index (partial,
//! covariant) append it as the last covariant slot, so `(∇T)(.., c)` is the
//! derivative in direction `∂_c`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::jet::Jet;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tensor<T> {
    pub n: usize,
    pub up: usize,
    pub down: usize,
    pub data: Vec<T>,
}

/// A tensor evaluated at a point (values only).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TensorValue {
    pub point: Vec<f64>,
    #[serde(flatten)]
    pub tensor: Tensor<f64>,
}

/// Iterate over every multi-index of the given rank, last index fastest.
pub fn multi_indices(n: usize, rank: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = n.pow(rank as u32);
    (0..total).map(move |mut k| {
        let mut idx = vec![0; rank];
        for slot in idx.iter_mut().rev() {
            *slot = k % n;
            k /= n;
        }
        idx
    })
}

impl<T: Clone> Tensor<T> {
    pub fn from_fn(n: usize, up: usize, down: usize, mut f: impl FnMut(&[usize]) -> T) -> Self {
        let data = multi_indices(n, up + down).map(|idx| f(&idx)).collect();
        Tensor { n, up, down, data }
    }

    pub fn rank(&self) -> usize {
        self.up + self.down
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn at(&self, idx: &[usize]) -> &T {
        &self.data[self.offset(idx)]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Tensor<U> {
        Tensor { n: self.n, up: self.up, down: self.down, data: self.data.iter().map(f).collect() }
    }
}

fn with_slot(idx: &[usize], slot: usize, value: usize) -> Vec<usize> {
    let mut v = idx.to_vec();
    v[slot] = value;
    v
}

impl Tensor<Jet> {
    /// Jet dimension (number of chart coordinates).
    fn jet_dim(&self) -> usize {
        self.data.first().map(Jet::dim).unwrap_or(self.n)
    }

    pub fn values(&self) -> Tensor<f64> {
        self.map(Jet::value)
    }

    /// Plain partial derivatives, appended as a new covariant slot.
    pub fn partials(&self) -> Tensor<Jet> {
        Tensor::from_fn(self.n, self.up, self.down + 1, |idx| {
            let (base, c) = idx.split_at(self.rank());
            self.at(base).partial(c[0])
        })
    }

    /// Levi-Civita covariant derivative; `gamma[k][i][j] = Γ^k_ij`.
    pub fn covariant(&self, gamma: &Tensor<Jet>) -> Tensor<Jet> {
        let n = self.n;
        let rank = self.rank();
        Tensor::from_fn(n, self.up, self.down + 1, |idx| {
            let (base, c) = idx.split_at(rank);
            let c = c[0];
            let mut acc = self.at(base).partial(c);
            for slot in 0..rank {
                for m in 0..n {
                    let t = self.at(&with_slot(base, slot, m));
                    if slot < self.up {
                        acc = acc + gamma.at(&[base[slot], c, m]) * t;
                    } else {
                        acc = acc - gamma.at(&[m, c, base[slot]]) * t;
                    }
                }
            }
            acc
        })
    }

    /// Coordinate Lie derivative along the vector field `v` (a (1,0) tensor).
    pub fn lie(&self, v: &Tensor<Jet>) -> Tensor<Jet> {
        assert_eq!((v.up, v.down), (1, 0), "Lie derivative needs a vector field");
        let n = self.n;
        let rank = self.rank();
        let dim = self.jet_dim();
        Tensor::from_fn(n, self.up, self.down, |idx| {
            let t = self.at(idx);
            let mut acc = Jet::zero(dim);
            for c in 0..n {
                acc = acc + &v.data[c] * &t.partial(c);
            }
            for slot in 0..rank {
                for c in 0..n {
                    let tc = self.at(&with_slot(idx, slot, c));
                    if slot < self.up {
                        acc = acc - tc * &v.data[idx[slot]].partial(c);
                    } else {
                        acc = acc + tc * &v.data[c].partial(idx[slot]);
                    }
                }
            }
            acc
        })
    }

    /// Contract the last covariant slot with a vector field.
    pub fn along(&self, v: &Tensor<Jet>) -> Tensor<Jet> {
        assert!(self.down >= 1);
        let dim = self.jet_dim();
        Tensor::from_fn(self.n, self.up, self.down - 1, |idx| {
            let mut acc = Jet::zero(dim);
            for c in 0..self.n {
                let mut full = idx.to_vec();
                full.push(c);
                acc = acc + self.at(&full) * &v.data[c];
            }
            acc
        })
    }

    /// `(A B)^i_j` for two (1,1) jet tensors.
    pub fn compose(&self, other: &Tensor<Jet>) -> Tensor<Jet> {
        let dim = self.jet_dim();
        Tensor::from_fn(self.n, 1, 1, |idx| {
            let mut acc = Jet::zero(dim);
            for m in 0..self.n {
                acc = acc + self.at(&[idx[0], m]) * other.at(&[m, idx[1]]);
            }
            acc
        })
    }

    /// Lower the first index of a (1,1) tensor: `T_ij = g_ik T^k_j`.
    pub fn lower_first(&self, g: &Tensor<Jet>) -> Tensor<Jet> {
        let dim = self.jet_dim();
        Tensor::from_fn(self.n, 0, 2, |idx| {
            let mut acc = Jet::zero(dim);
            for k in 0..self.n {
                acc = acc + g.at(&[idx[0], k]) * self.at(&[k, idx[1]]);
            }
            acc
        })
    }

    /// Raise the first index of a (0,2) tensor: `T^i_j = g^ik T_kj`.
    pub fn raise_first(&self, ginv: &Tensor<Jet>) -> Tensor<Jet> {
        let dim = self.jet_dim();
        Tensor::from_fn(self.n, 1, 1, |idx| {
            let mut acc = Jet::zero(dim);
            for k in 0..self.n {
                acc = acc + ginv.at(&[idx[0], k]) * self.at(&[k, idx[1]]);
            }
            acc
        })
    }

    /// Trace of a (1,1) tensor.
    pub fn trace(&self) -> Jet {
        let dim = self.jet_dim();
        let mut acc = Jet::zero(dim);
        for i in 0..self.n {
            acc = acc + self.at(&[i, i]);
        }
        acc
    }
}

impl Tensor<f64> {
    pub fn zeros(n: usize, up: usize, down: usize) -> Self {
        Tensor { n, up, down, data: vec![0.0; n.pow((up + down) as u32)] }
    }

    pub fn from_matrix(m: &DMatrix<f64>, up: usize, down: usize) -> Self {
        assert_eq!(up + down, 2);
        let n = m.nrows();
        Tensor::from_fn(n, up, down, |idx| m[(idx[0], idx[1])])
    }

    pub fn from_vector(v: &DVector<f64>) -> Self {
        Tensor { n: v.len(), up: 1, down: 0, data: v.iter().copied().collect() }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        assert_eq!(self.rank(), 2, "matrix view needs a rank-2 tensor");
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }

    pub fn vector(&self) -> DVector<f64> {
        assert_eq!(self.rank(), 1, "vector view needs a rank-1 tensor");
        DVector::from_column_slice(&self.data)
    }

    /// Apply `m` to one slot: `out(.., i, ..) = Σ_k m[i][k] t(.., k, ..)`.
    pub fn transform_slot(&self, slot: usize, m: &DMatrix<f64>) -> Tensor<f64> {
        Tensor::from_fn(self.n, self.up, self.down, |idx| {
            (0..self.n).map(|k| m[(idx[slot], k)] * self.at(&with_slot(idx, slot, k))).sum()
        })
    }

    /// Squared norm contracting every slot with `g` or `g⁻¹` (may be negative
    /// for indefinite metrics).
    pub fn norm_sq(&self, g: &DMatrix<f64>, ginv: &DMatrix<f64>) -> f64 {
        let mut dual = self.clone();
        for slot in 0..self.rank() {
            dual = dual.transform_slot(slot, if slot < self.up { g } else { ginv });
        }
        self.data.iter().zip(&dual.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self, g: &DMatrix<f64>, ginv: &DMatrix<f64>) -> f64 {
        self.norm_sq(g, ginv).abs().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, other: &Tensor<f64>) -> Tensor<f64> {
        assert_eq!((self.n, self.up, self.down), (other.n, other.up, other.down));
        Tensor {
            n: self.n,
            up: self.up,
            down: self.down,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Tensor<f64> {
        self.map(|v| v * s)
    }

    pub fn at_point(self, point: &[f64]) -> TensorValue {
        TensorValue { point: point.to_vec(), tensor: self }
    }
}

/// Relative residual `‖res‖ / (1 + ‖reference‖)`.
pub fn relative(res: f64, reference: f64) -> f64 {
    res / (1.0 + reference.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_index_order_is_row_major() {
        let all: Vec<_> = multi_indices(2, 2).collect();
        assert_eq!(all, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn norm_of_identity_metric_form() {
        let g = DMatrix::<f64>::identity(3, 3) * 4.0;
        let ginv = DMatrix::<f64>::identity(3, 3) * 0.25;
        let t = Tensor::from_matrix(&g, 0, 2);
        // g itself has norm sqrt(n)
        assert!((t.norm(&g, &ginv) - 3f64.sqrt()).abs() < 1e-14);
        let v = Tensor::from_vector(&DVector::from_vec(vec![1.0, 0.0, 0.0]));
        assert!((v.norm(&g, &ginv) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn lie_derivative_of_scalar_is_directional() {
        let p = [0.3, -0.2];
        let x = Jet::variable(2, 3, 0, p[0]);
        let y = Jet::variable(2, 3, 1, p[1]);
        let s = Tensor { n: 2, up: 0, down: 0, data: vec![&x * &y] };
        let v = Tensor { n: 2, up: 1, down: 0, data: vec![Jet::constant(2, 1.0), x.clone()] };
        // V(xy) = y + x·x
        let l = s.lie(&v);
        assert!((l.data[0].value() - (p[1] + p[0] * p[0])).abs() < 1e-15);
    }
}
