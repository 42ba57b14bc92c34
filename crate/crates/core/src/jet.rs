//! Truncated multivariate Taylor arithmetic up to third order.
//!
//! A [`Jet`] carries the value of a scalar field at a point together with all
//! of its partial derivatives up to a fixed order (0 to 3). Arithmetic
//! propagates derivatives exactly (to rounding) through the Leibniz rule and
//! the third-order Faà di Bruno formula, so Christoffel symbols, curvature and
//! curvature derivatives are all available without finite differences.
//!
//! Storage is dense and fully symmetric: `hess[i][j]` and `third[i][j][k]` are
//! stored for every index permutation. Slots above the jet's order are absent
//! and read back as zero.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Highest derivative order carried by a jet.
pub const MAX_ORDER: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    n: usize,
    order: usize,
    coef: Vec<f64>,
}

#[inline]
fn len_for(n: usize, order: usize) -> usize {
    match order {
        0 => 1,
        1 => 1 + n,
        2 => 1 + n + n * n,
        _ => 1 + n + n * n + n * n * n,
    }
}

impl Jet {
    /// Constant field (all derivatives zero) carried at the maximum order.
    pub fn constant(n: usize, value: f64) -> Self {
        Self::constant_with_order(n, MAX_ORDER, value)
    }

    pub fn constant_with_order(n: usize, order: usize, value: f64) -> Self {
        let order = order.min(MAX_ORDER);
        let mut coef = vec![0.0; len_for(n, order)];
        coef[0] = value;
        Jet { n, order, coef }
    }

    /// The coordinate function `x_index`, evaluated at `value`.
    pub fn variable(n: usize, order: usize, index: usize, value: f64) -> Self {
        assert!(index < n, "variable index {index} out of range for {n} coordinates");
        let mut jet = Self::constant_with_order(n, order, value);
        if jet.order >= 1 {
            jet.coef[1 + index] = 1.0;
        }
        jet
    }

    pub fn zero(n: usize) -> Self {
        Self::constant(n, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.coef[0]
    }

    /// First partial `∂_i`.
    pub fn d(&self, i: usize) -> f64 {
        if self.order >= 1 {
            self.coef[1 + i]
        } else {
            0.0
        }
    }

    /// Second partial `∂_i ∂_j`.
    pub fn d2(&self, i: usize, j: usize) -> f64 {
        if self.order >= 2 {
            self.coef[1 + self.n + i * self.n + j]
        } else {
            0.0
        }
    }

    /// Third partial `∂_i ∂_j ∂_k`.
    pub fn d3(&self, i: usize, j: usize, k: usize) -> f64 {
        if self.order >= 3 {
            let n = self.n;
            self.coef[1 + n + n * n + (i * n + j) * n + k]
        } else {
            0.0
        }
    }

    pub fn gradient(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.d(i)).collect()
    }

    /// Drop every derivative slot above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.order {
            return self.clone();
        }
        let mut coef = self.coef.clone();
        coef.truncate(len_for(self.n, order));
        Jet { n: self.n, order, coef }
    }

    /// The partial derivative `∂_i` of the field, as a jet one order lower.
    ///
    /// Panics if the jet has order 0.
    pub fn partial(&self, i: usize) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let n = self.n;
        let order = self.order - 1;
        let mut out = Jet::constant_with_order(n, order, self.d(i));
        if order >= 1 {
            for j in 0..n {
                out.coef[1 + j] = self.d2(i, j);
            }
        }
        if order >= 2 {
            for j in 0..n {
                for k in 0..n {
                    out.coef[1 + n + j * n + k] = self.d3(i, j, k);
                }
            }
        }
        out
    }

    /// Directional derivative `Σ v^i ∂_i` as a jet one order lower.
    pub fn directional(&self, v: &[f64]) -> Self {
        let mut out = Jet::constant_with_order(self.n, self.order - 1, 0.0);
        for (i, vi) in v.iter().enumerate() {
            if *vi != 0.0 {
                out = &out + &self.partial(i).scale(*vi);
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        Jet {
            n: self.n,
            order: self.order,
            coef: self.coef.iter().map(|c| c * s).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coef.iter().all(|c| c.is_finite())
    }

    fn zip_with(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        debug_assert_eq!(self.n, other.n, "jet dimension mismatch");
        let order = self.order.min(other.order);
        let len = len_for(self.n, order);
        let coef = (0..len).map(|k| f(self.coef[k], other.coef[k])).collect();
        Jet { n: self.n, order, coef }
    }

    fn product(&self, other: &Jet) -> Jet {
        debug_assert_eq!(self.n, other.n, "jet dimension mismatch");
        let n = self.n;
        let order = self.order.min(other.order);
        let (a, b) = (self, other);
        let mut out = Jet::constant_with_order(n, order, a.value() * b.value());
        let (a0, b0) = (a.value(), b.value());
        if order >= 1 {
            for i in 0..n {
                out.coef[1 + i] = a.d(i) * b0 + a0 * b.d(i);
            }
        }
        if order >= 2 {
            for i in 0..n {
                for j in 0..n {
                    out.coef[1 + n + i * n + j] =
                        a.d2(i, j) * b0 + a.d(i) * b.d(j) + a.d(j) * b.d(i) + a0 * b.d2(i, j);
                }
            }
        }
        if order >= 3 {
            let base = 1 + n + n * n;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        out.coef[base + (i * n + j) * n + k] = a.d3(i, j, k) * b0
                            + a.d2(i, j) * b.d(k)
                            + a.d2(i, k) * b.d(j)
                            + a.d2(j, k) * b.d(i)
                            + a.d(i) * b.d2(j, k)
                            + a.d(j) * b.d2(i, k)
                            + a.d(k) * b.d2(i, j)
                            + a0 * b.d3(i, j, k);
                    }
                }
            }
        }
        out
    }

    /// Compose with a univariate function given its derivatives
    /// `[g(u), g'(u), g''(u), g'''(u)]` at `u = self.value()`.
    pub fn compose(&self, d: [f64; 4]) -> Jet {
        let n = self.n;
        let order = self.order;
        let u = self;
        let mut out = Jet::constant_with_order(n, order, d[0]);
        if order >= 1 {
            for i in 0..n {
                out.coef[1 + i] = d[1] * u.d(i);
            }
        }
        if order >= 2 {
            for i in 0..n {
                for j in 0..n {
                    out.coef[1 + n + i * n + j] = d[2] * u.d(i) * u.d(j) + d[1] * u.d2(i, j);
                }
            }
        }
        if order >= 3 {
            let base = 1 + n + n * n;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        out.coef[base + (i * n + j) * n + k] = d[3] * u.d(i) * u.d(j) * u.d(k)
                            + d[2]
                                * (u.d2(i, j) * u.d(k) + u.d2(i, k) * u.d(j) + u.d2(j, k) * u.d(i))
                            + d[1] * u.d3(i, j, k);
                    }
                }
            }
        }
        out
    }

    /// `1 / self`. The caller guarantees a nonzero value.
    pub fn recip(&self) -> Jet {
        let x = self.value();
        let r = 1.0 / x;
        self.compose([r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r])
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose([e, e, e, e])
    }

    /// Natural logarithm. The caller guarantees a positive value.
    pub fn ln(&self) -> Jet {
        let x = self.value();
        let r = 1.0 / x;
        self.compose([x.ln(), r, -r * r, 2.0 * r * r * r])
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c, s])
    }

    pub fn tan(&self) -> Jet {
        let t = self.value().tan();
        let sec2 = 1.0 + t * t;
        self.compose([t, sec2, 2.0 * t * sec2, 2.0 * sec2 * (sec2 + 2.0 * t * t)])
    }

    pub fn sinh(&self) -> Jet {
        let x = self.value();
        let (s, c) = (x.sinh(), x.cosh());
        self.compose([s, c, s, c])
    }

    pub fn cosh(&self) -> Jet {
        let x = self.value();
        let (s, c) = (x.sinh(), x.cosh());
        self.compose([c, s, c, s])
    }

    pub fn tanh(&self) -> Jet {
        let t = self.value().tanh();
        let s2 = 1.0 - t * t;
        self.compose([t, s2, -2.0 * t * s2, s2 * (6.0 * t * t - 2.0)])
    }

    /// Square root. The caller guarantees a positive value (or a zero value at order 0).
    pub fn sqrt(&self) -> Jet {
        let x = self.value();
        let s = x.sqrt();
        if self.order == 0 {
            return Jet::constant_with_order(self.n, 0, s);
        }
        let d1 = 0.5 / s;
        let d2 = -0.25 / (s * x);
        let d3 = 0.375 / (s * x * x);
        self.compose([s, d1, d2, d3])
    }

    /// `self^p` for a constant real exponent.
    ///
    /// Derivative coefficients that vanish identically (integer `p` below the
    /// derivative order) are kept at exactly zero so that, for example, `x^1`
    /// has a well-defined third derivative at `x = 0`.
    pub fn powf(&self, p: f64) -> Jet {
        let x = self.value();
        let mut d = [0.0; 4];
        let mut coeff = 1.0;
        for (k, slot) in d.iter_mut().enumerate() {
            if coeff == 0.0 {
                *slot = 0.0;
            } else {
                *slot = coeff * x.powf(p - k as f64);
            }
            coeff *= p - k as f64;
        }
        self.compose(d)
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.product(rhs)
    }
}

impl Div for &Jet {
    type Output = Jet;
    fn div(self, rhs: &Jet) -> Jet {
        self.product(&rhs.recip())
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                (&self).$m(rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// Sum of jets; `n` is needed for the empty sum.
pub fn sum<'a>(n: usize, jets: impl IntoIterator<Item = &'a Jet>) -> Jet {
    jets.into_iter().fold(Jet::zero(n), |acc, j| &acc + j)
}

/// Invert a square matrix of jets by Gauss-Jordan elimination with partial
/// pivoting on the values. Returns `None` when a pivot falls below `eps`.
pub fn invert(n: usize, m: &[Jet], eps: f64) -> Option<Vec<Jet>> {
    let jet_dim = m.first().map(Jet::dim).unwrap_or(n);
    let mut a: Vec<Jet> = m.to_vec();
    let mut inv: Vec<Jet> = (0..n * n)
        .map(|k| Jet::constant(jet_dim, if k / n == k % n { 1.0 } else { 0.0 }))
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r1, &r2| {
                a[r1 * n + col]
                    .value()
                    .abs()
                    .total_cmp(&a[r2 * n + col].value().abs())
            })
            .expect("non-empty range");
        if a[pivot * n + col].value().abs() < eps {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
                inv.swap(pivot * n + k, col * n + k);
            }
        }
        let p = a[col * n + col].recip();
        for k in 0..n {
            a[col * n + k] = &a[col * n + k] * &p;
            inv[col * n + k] = &inv[col * n + k] * &p;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row * n + col].clone();
            for k in 0..n {
                let t = &factor * &a[col * n + k];
                a[row * n + k] = &a[row * n + k] - &t;
                let t = &factor * &inv[col * n + k];
                inv[row * n + k] = &inv[row * n + k] - &t;
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    #[test]
    fn exponential_taylor_coefficients() {
        // exp(2x) at x = 0: 1, 2, 4, 8
        let x = Jet::variable(1, 3, 0, 0.0);
        let e = x.scale(2.0).exp();
        assert!(close(e.value(), 1.0));
        assert!(close(e.d(0), 2.0));
        assert!(close(e.d2(0, 0), 4.0));
        assert!(close(e.d3(0, 0, 0), 8.0));
    }

    #[test]
    fn product_rule_to_third_order() {
        // f = x^2 y at (2, 3): f_x = 2xy, f_xx = 2y, f_xy = 2x, f_xxy = 2
        let x = Jet::variable(2, 3, 0, 2.0);
        let y = Jet::variable(2, 3, 1, 3.0);
        let f = &(&x * &x) * &y;
        assert!(close(f.value(), 12.0));
        assert!(close(f.d(0), 12.0));
        assert!(close(f.d(1), 4.0));
        assert!(close(f.d2(0, 0), 6.0));
        assert!(close(f.d2(0, 1), 4.0));
        assert!(close(f.d2(1, 0), 4.0));
        assert!(close(f.d3(0, 0, 1), 2.0));
        assert!(close(f.d3(1, 0, 0), 2.0));
        assert!(close(f.d3(0, 0, 0), 0.0));
    }

    #[test]
    fn partial_lowers_order() {
        let x = Jet::variable(1, 3, 0, 1.5);
        let f = x.powf(4.0);
        let df = f.partial(0);
        assert_eq!(df.order(), 2);
        assert!(close(df.value(), 4.0 * 1.5f64.powi(3)));
        assert!(close(df.d(0), 12.0 * 1.5f64.powi(2)));
        assert!(close(df.d2(0, 0), 24.0 * 1.5));
    }

    #[test]
    fn integer_power_at_zero_is_finite() {
        let x = Jet::variable(1, 3, 0, 0.0);
        let f = x.powf(1.0);
        assert!(f.is_finite());
        assert_eq!(f.d(0), 1.0);
        assert_eq!(f.d3(0, 0, 0), 0.0);
    }

    #[test]
    fn mixed_orders_truncate_to_minimum() {
        let a = Jet::variable(2, 3, 0, 1.0);
        let b = Jet::variable(2, 1, 1, 2.0);
        let c = &a * &b;
        assert_eq!(c.order(), 1);
        assert_eq!(c.d2(0, 1), 0.0);
    }

    #[test]
    fn matrix_inverse_of_jets() {
        // diag(z^2, 1/z^2) inverse = diag(1/z^2, z^2), derivatives included
        let z = Jet::variable(1, 3, 0, 2.0);
        let z2 = &z * &z;
        let m = vec![z2.clone(), Jet::zero(1), Jet::zero(1), z2.recip()];
        let inv = invert(2, &m, 1e-12).unwrap();
        assert!(close(inv[0].value(), 0.25));
        assert!(close(inv[0].d(0), -2.0 / 8.0));
        assert!(close(inv[3].value(), 4.0));
        assert!(close(inv[3].d(0), 4.0));
        assert!(close(inv[3].d2(0, 0), 2.0));
        assert!(close(inv[1].value(), 0.0));
    }
}
