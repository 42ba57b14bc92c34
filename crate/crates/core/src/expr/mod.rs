//! Scalar expressions over chart coordinates and named parameters.
//!
//! Expressions are parsed once against a fixed list of coordinate and
//! parameter names (every identifier is bound at parse time) and are then
//! immutable. Evaluation produces a [`Jet`] carrying exact partial derivatives
//! up to third order.

mod parse;

use std::fmt;

use thiserror::Error;

use crate::jet::Jet;

pub use parse::{parse, ParseError};

/// Built-in functions of the expression language.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Exp,
        Func::Log,
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Sqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// What an identifier refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Binding {
    Coord(usize),
    Param(usize),
}

/// Expression tree. Number literals are always non-negative; a negative
/// constant is `Neg(Num(..))`, which is also what the parser produces.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var { name: String, binding: Binding },
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Failure while evaluating an expression at a point.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} in `{subexpr}`")]
pub struct EvalError {
    pub kind: DomainKind,
    pub subexpr: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DomainKind {
    #[error("logarithm of a non-positive number")]
    LogNonPositive,
    #[error("square root of a negative number")]
    SqrtNegative,
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-integer power of a negative number")]
    NegativeBase,
    #[error("non-finite result")]
    NonFinite,
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        if v < 0.0 {
            Expr::Neg(Box::new(Expr::Num(-v)))
        } else {
            Expr::Num(v)
        }
    }

    pub fn coord(name: &str, index: usize) -> Expr {
        Expr::Var { name: name.to_string(), binding: Binding::Coord(index) }
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Add, a, b)
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Sub, a, b)
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Mul, a, b)
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Div, a, b)
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Pow, a, b)
    }

    pub fn neg(a: Expr) -> Expr {
        Expr::Neg(Box::new(a))
    }

    /// Literal zero, structurally (not numerically).
    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    /// True when no coordinate appears in the tree.
    pub fn is_coordinate_free(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::Var { binding, .. } => matches!(binding, Binding::Param(_)),
            Expr::Neg(a) | Expr::Call(_, a) => a.is_coordinate_free(),
            Expr::Binary(_, a, b) => a.is_coordinate_free() && b.is_coordinate_free(),
        }
    }

    /// Evaluate the value only.
    pub fn eval(&self, point: &[f64], params: &[f64]) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var { binding, .. } => match binding {
                Binding::Coord(i) => point[*i],
                Binding::Param(i) => params[*i],
            },
            Expr::Neg(a) => -a.eval(point, params)?,
            Expr::Binary(op, a, b) => {
                let x = a.eval(point, params)?;
                let y = b.eval(point, params)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(self.domain(DomainKind::DivisionByZero));
                        }
                        x / y
                    }
                    BinOp::Pow => self.check_pow(x, y, b.is_coordinate_free())?.powf(y),
                }
            }
            Expr::Call(f, a) => {
                let x = a.eval(point, params)?;
                match f {
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(self.domain(DomainKind::LogNonPositive));
                        }
                        x.ln()
                    }
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => x.tan(),
                    Func::Sinh => x.sinh(),
                    Func::Cosh => x.cosh(),
                    Func::Tanh => x.tanh(),
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(self.domain(DomainKind::SqrtNegative));
                        }
                        x.sqrt()
                    }
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.domain(DomainKind::NonFinite))
        }
    }

    /// Evaluate the value and all partial derivatives up to `order` (≤ 3).
    pub fn eval_jet(&self, point: &[f64], params: &[f64], order: usize) -> Result<Jet, EvalError> {
        let n = point.len();
        let jet = match self {
            Expr::Num(v) => Jet::constant_with_order(n, order, *v),
            Expr::Var { binding, .. } => match binding {
                Binding::Coord(i) => Jet::variable(n, order, *i, point[*i]),
                Binding::Param(i) => Jet::constant_with_order(n, order, params[*i]),
            },
            Expr::Neg(a) => -a.eval_jet(point, params, order)?,
            Expr::Binary(op, a, b) => {
                let x = a.eval_jet(point, params, order)?;
                match op {
                    BinOp::Add => x + b.eval_jet(point, params, order)?,
                    BinOp::Sub => x - b.eval_jet(point, params, order)?,
                    BinOp::Mul => x * b.eval_jet(point, params, order)?,
                    BinOp::Div => {
                        let y = b.eval_jet(point, params, order)?;
                        if y.value() == 0.0 {
                            return Err(self.domain(DomainKind::DivisionByZero));
                        }
                        x / y
                    }
                    BinOp::Pow => {
                        let constant_exponent = b.is_coordinate_free();
                        let y = b.eval_jet(point, params, order)?;
                        self.check_pow(x.value(), y.value(), constant_exponent)?;
                        if constant_exponent {
                            x.powf(y.value())
                        } else {
                            (y * x.ln()).exp()
                        }
                    }
                }
            }
            Expr::Call(f, a) => {
                let x = a.eval_jet(point, params, order)?;
                match f {
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if x.value() <= 0.0 {
                            return Err(self.domain(DomainKind::LogNonPositive));
                        }
                        x.ln()
                    }
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => x.tan(),
                    Func::Sinh => x.sinh(),
                    Func::Cosh => x.cosh(),
                    Func::Tanh => x.tanh(),
                    Func::Sqrt => {
                        let v = x.value();
                        if v < 0.0 || (v == 0.0 && order > 0) {
                            return Err(self.domain(DomainKind::SqrtNegative));
                        }
                        x.sqrt()
                    }
                }
            }
        };
        if jet.is_finite() {
            Ok(jet)
        } else {
            Err(self.domain(DomainKind::NonFinite))
        }
    }

    fn check_pow(&self, base: f64, exponent: f64, constant_exponent: bool) -> Result<f64, EvalError> {
        if constant_exponent {
            if base < 0.0 && exponent.fract() != 0.0 {
                return Err(self.domain(DomainKind::NegativeBase));
            }
            if base == 0.0 && exponent < 0.0 {
                return Err(self.domain(DomainKind::DivisionByZero));
            }
        } else if base <= 0.0 {
            return Err(self.domain(DomainKind::NegativeBase));
        }
        Ok(base)
    }

    fn domain(&self, kind: DomainKind) -> EvalError {
        EvalError { kind, subexpr: self.to_string() }
    }

    // Rendering precedence: 1 sum, 2 product, 3 unary/power, 4 atom.
    fn level(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Binary(BinOp::Pow, ..) => 3,
            Expr::Neg(_) => 3,
            Expr::Num(_) | Expr::Var { .. } | Expr::Call(..) => 4,
        }
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    /// Renders with the minimal parentheses that reparse to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var { name, .. } => f.write_str(name),
            Expr::Neg(a) => {
                f.write_str("-")?;
                // operand is a `unary`: a power would capture the minus sign
                let wrap = !matches!(**a, Expr::Neg(_)) && a.level() < 4;
                write_wrapped(f, a, wrap)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Binary(op, a, b) => {
                let (wrap_left, wrap_right) = match op {
                    BinOp::Add | BinOp::Sub => (false, b.level() <= 1),
                    BinOp::Mul | BinOp::Div => (a.level() < 2, b.level() <= 2),
                    // base is a `unary`, exponent is a `factor`
                    BinOp::Pow => (
                        !(a.level() == 4 || matches!(**a, Expr::Neg(_))),
                        b.level() < 3,
                    ),
                };
                write_wrapped(f, a, wrap_left)?;
                f.write_str(op.symbol())?;
                write_wrapped(f, b, wrap_right)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const XYZ: [&str; 3] = ["x", "y", "z"];

    fn p(src: &str) -> Expr {
        parse(src, &XYZ, &["a"]).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(p("2*x^2"), p("2*(x^2)"));
        assert_eq!(p("x^2^3"), p("x^(2^3)"));
        assert_ne!(p("x^2^3"), p("(x^2)^3"));
        assert_eq!(p("x-y-z"), p("(x-y)-z"));
        assert_eq!(p("x/y/z"), p("(x/y)/z"));
    }

    #[test]
    fn leading_minus_binds_tighter_than_power() {
        // unary := "-" unary | atom, and factor := unary ("^" factor)?
        assert_eq!(p("-x^2"), p("(-x)^2"));
        let v = p("-x^2").eval(&[3.0, 0.0, 0.0], &[0.0]).unwrap();
        assert_eq!(v, 9.0);
    }

    #[test]
    fn render_round_trips_tricky_trees() {
        for src in [
            "-(x^2)",
            "(x+y)*(y-z)",
            "x-(y-z)",
            "x/(y*z)",
            "(-x)^2",
            "2^-x",
            "--x",
            "(x^2)^3",
            "exp(2*a*x)/z^2",
            "sin(x)^2+cos(x)^2",
            "x*-y",
            "0.001*x",
        ] {
            let e = p(src);
            let rendered = e.to_string();
            assert_eq!(p(&rendered), e, "{src} -> {rendered}");
        }
    }

    #[test]
    fn jet_of_example_metric_component() {
        // exp(2 a x) / z^2 with a = 1 at (0, 0, 1)
        let e = p("exp(2*a*x)/z^2");
        let j = e.eval_jet(&[0.0, 0.0, 1.0], &[1.0], 3).unwrap();
        assert!((j.value() - 1.0).abs() < 1e-14);
        assert!((j.d(0) - 2.0).abs() < 1e-14);
        assert!((j.d(2) + 2.0).abs() < 1e-14);
        assert!((j.d2(0, 2) + 4.0).abs() < 1e-14);
        assert!((j.d2(2, 2) - 6.0).abs() < 1e-14);
        assert!((j.d3(2, 2, 2) + 24.0).abs() < 1e-13);
    }

    #[test]
    fn polynomial_jet() {
        let j = p("z^2").eval_jet(&[0.0, 0.0, 1.0], &[0.0], 3).unwrap();
        assert_eq!(j.value(), 1.0);
        assert_eq!(j.d(2), 2.0);
        assert_eq!(j.d2(2, 2), 2.0);
        assert_eq!(j.d3(2, 2, 2), 0.0);
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let err = p("1 + log(x)").eval_jet(&[-1.0, 0.0, 0.0], &[0.0], 2).unwrap_err();
        assert_eq!(err.kind, DomainKind::LogNonPositive);
        assert_eq!(err.subexpr, "log(x)");
        let err = p("y/(x-1)").eval(&[1.0, 2.0, 0.0], &[0.0]).unwrap_err();
        assert_eq!(err.kind, DomainKind::DivisionByZero);
        let err = p("sqrt(x)").eval_jet(&[-0.5, 0.0, 0.0], &[0.0], 0).unwrap_err();
        assert_eq!(err.kind, DomainKind::SqrtNegative);
        let err = p("x^0.5").eval(&[-0.5, 0.0, 0.0], &[0.0]).unwrap_err();
        assert_eq!(err.kind, DomainKind::NegativeBase);
    }

    #[test]
    fn variable_exponent_uses_exp_log() {
        // x^y at (2, 3): value 8, d/dy = 8 ln 2
        let j = p("x^y").eval_jet(&[2.0, 3.0, 0.0], &[0.0], 1).unwrap();
        assert!((j.value() - 8.0).abs() < 1e-12);
        assert!((j.d(1) - 8.0 * 2f64.ln()).abs() < 1e-12);
        assert!((j.d(0) - 12.0).abs() < 1e-12);
    }
}
