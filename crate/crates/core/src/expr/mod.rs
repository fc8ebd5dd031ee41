//! Scalar expressions over chart coordinates.
//!
//! An expression is parsed once against a chart dimension and can then be
//! evaluated either to a plain `f64` or to a [`Jet2`] carrying the exact
//! gradient and Hessian at the evaluation point.

mod parser;

use std::fmt;

use thiserror::Error;

use crate::jet::Jet2;

pub use parser::{parse, ParseError, ParseErrorKind};

/// Unary functions admitted by the grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Neg,
}

impl Func {
    pub const ALL: [Func; 6] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Neg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Neg => "neg",
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
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

/// Expression tree. Variables are 0-based indices into the chart coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarExpr {
    Var(usize),
    Num(f64),
    Binary(BinOp, Box<ScalarExpr>, Box<ScalarExpr>),
    /// Power with a constant exponent.
    Pow(Box<ScalarExpr>, f64),
    Call(Func, Box<ScalarExpr>),
}

/// Failure while evaluating an expression at a point.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("domain error in `{subexpr}`: {reason} (argument {argument})")]
    Domain {
        subexpr: String,
        reason: &'static str,
        argument: f64,
    },
    #[error("point has {got} coordinates, expression needs at least {needed}")]
    PointTooShort { got: usize, needed: usize },
}

impl ScalarExpr {
    pub fn var(index: usize) -> Self {
        ScalarExpr::Var(index)
    }

    pub fn num(value: f64) -> Self {
        ScalarExpr::Num(value)
    }

    pub fn binary(op: BinOp, lhs: ScalarExpr, rhs: ScalarExpr) -> Self {
        ScalarExpr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn call(func: Func, arg: ScalarExpr) -> Self {
        ScalarExpr::Call(func, Box::new(arg))
    }

    pub fn pow(base: ScalarExpr, exponent: f64) -> Self {
        ScalarExpr::Pow(Box::new(base), exponent)
    }

    /// Largest variable index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            ScalarExpr::Var(i) => Some(*i),
            ScalarExpr::Num(_) => None,
            ScalarExpr::Binary(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
            ScalarExpr::Pow(a, _) | ScalarExpr::Call(_, a) => a.max_var(),
        }
    }

    /// True if the expression does not depend on any coordinate.
    pub fn is_constant(&self) -> bool {
        self.max_var().is_none()
    }

    /// Node count.
    pub fn size(&self) -> usize {
        match self {
            ScalarExpr::Var(_) | ScalarExpr::Num(_) => 1,
            ScalarExpr::Binary(_, a, b) => 1 + a.size() + b.size(),
            ScalarExpr::Pow(a, _) | ScalarExpr::Call(_, a) => 1 + a.size(),
        }
    }

    fn check_point(&self, p: &[f64]) -> Result<(), EvalError> {
        match self.max_var() {
            Some(i) if i >= p.len() => Err(EvalError::PointTooShort {
                got: p.len(),
                needed: i + 1,
            }),
            _ => Ok(()),
        }
    }

    /// Plain floating-point evaluation.
    pub fn eval(&self, p: &[f64]) -> Result<f64, EvalError> {
        self.check_point(p)?;
        self.eval_unchecked(p)
    }

    fn eval_unchecked(&self, p: &[f64]) -> Result<f64, EvalError> {
        Ok(match self {
            ScalarExpr::Var(i) => p[*i],
            ScalarExpr::Num(v) => *v,
            ScalarExpr::Binary(op, a, b) => {
                let x = a.eval_unchecked(p)?;
                let y = b.eval_unchecked(p)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(self.domain("division by zero", y));
                        }
                        x / y
                    }
                }
            }
            ScalarExpr::Pow(a, c) => {
                let x = a.eval_unchecked(p)?;
                check_pow_domain(x, *c).map_err(|r| self.domain(r, x))?;
                x.powf(*c)
            }
            ScalarExpr::Call(f, a) => {
                let x = a.eval_unchecked(p)?;
                check_func_domain(*f, x).map_err(|r| self.domain(r, x))?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Log => x.ln(),
                    Func::Sqrt => x.sqrt(),
                    Func::Neg => -x,
                }
            }
        })
    }

    /// Value, gradient and Hessian at `p`. The jet has `p.len()` directions.
    pub fn eval_jet2(&self, p: &[f64]) -> Result<Jet2, EvalError> {
        self.check_point(p)?;
        self.jet_unchecked(p)
    }

    fn jet_unchecked(&self, p: &[f64]) -> Result<Jet2, EvalError> {
        let n = p.len();
        Ok(match self {
            ScalarExpr::Var(i) => Jet2::variable(p[*i], *i, n),
            ScalarExpr::Num(v) => Jet2::constant(*v, n),
            ScalarExpr::Binary(op, a, b) => {
                let x = a.jet_unchecked(p)?;
                let y = b.jet_unchecked(p)?;
                match op {
                    BinOp::Add => &x + &y,
                    BinOp::Sub => &x - &y,
                    BinOp::Mul => &x * &y,
                    BinOp::Div => {
                        if y.value == 0.0 {
                            return Err(self.domain("division by zero", y.value));
                        }
                        &x / &y
                    }
                }
            }
            ScalarExpr::Pow(a, c) => {
                let x = a.jet_unchecked(p)?;
                check_pow_domain(x.value, *c).map_err(|r| self.domain(r, x.value))?;
                x.powf(*c)
            }
            ScalarExpr::Call(f, a) => {
                let x = a.jet_unchecked(p)?;
                check_func_domain(*f, x.value).map_err(|r| self.domain(r, x.value))?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Log => x.ln(),
                    Func::Sqrt => x.sqrt(),
                    Func::Neg => -&x,
                }
            }
        })
    }

    fn domain(&self, reason: &'static str, argument: f64) -> EvalError {
        EvalError::Domain {
            subexpr: self.to_string(),
            reason,
            argument,
        }
    }
}

fn check_func_domain(f: Func, x: f64) -> Result<(), &'static str> {
    match f {
        Func::Log if x <= 0.0 => Err("log of non-positive value"),
        Func::Sqrt if x <= 0.0 => Err("sqrt of non-positive value"),
        _ if !x.is_finite() => Err("non-finite argument"),
        _ => Ok(()),
    }
}

fn check_pow_domain(x: f64, c: f64) -> Result<(), &'static str> {
    let integral = c.fract() == 0.0;
    if !integral && x <= 0.0 {
        return Err("fractional power of non-positive value");
    }
    if c < 0.0 && x == 0.0 {
        return Err("negative power of zero");
    }
    Ok(())
}

// Fully parenthesised output: every binary node carries its own parentheses,
// so the printed text re-parses to the same tree.
impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarExpr::Var(i) => write!(f, "x{}", i + 1),
            ScalarExpr::Num(v) => write!(f, "{v:?}"),
            ScalarExpr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            ScalarExpr::Pow(a, c) => {
                let needs_parens = matches!(**a, ScalarExpr::Pow(..))
                    || matches!(**a, ScalarExpr::Num(v) if v.is_sign_negative());
                if needs_parens {
                    write!(f, "({a})^{c:?}")
                } else {
                    write!(f, "{a}^{c:?}")
                }
            }
            ScalarExpr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_component_parses_to_expected_tree() {
        let e = parse("exp(x3)*cos(x5)", 6).unwrap();
        let expected = ScalarExpr::binary(
            BinOp::Mul,
            ScalarExpr::call(Func::Exp, ScalarExpr::var(2)),
            ScalarExpr::call(Func::Cos, ScalarExpr::var(4)),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn identity_expression() {
        assert_eq!(parse("x1", 1).unwrap(), ScalarExpr::Var(0));
    }

    #[test]
    fn out_of_range_variable_rejected() {
        let err = parse("x7", 6).unwrap_err();
        assert!(matches!(
            err.kind,
            ParseErrorKind::VariableOutOfRange { index: 7, dim: 6 }
        ));
        assert_eq!((err.line, err.column), (1, 1));
    }

    #[test]
    fn exp_at_ln2() {
        let e = parse("exp(x3)", 6).unwrap();
        let p = [0.0, 0.0, 2f64.ln(), 0.0, 0.0, 0.0];
        let j = e.eval_jet2(&p).unwrap();
        assert!((j.value - 2.0).abs() < 1e-15);
        let g = [0.0, 0.0, 2.0, 0.0, 0.0, 0.0];
        for (a, b) in j.gradient.iter().zip(g) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_jet() {
        let j = parse("x1", 1).unwrap().eval_jet2(&[5.0]).unwrap();
        assert_eq!(j.value, 5.0);
        assert_eq!(j.gradient, vec![1.0]);
        assert_eq!(j.hessian(0, 0), 0.0);
    }

    #[test]
    fn product_jet_matches_finite_differences() {
        let e = parse("x1*x2", 2).unwrap();
        let p = [2.0, 3.0];
        let j = e.eval_jet2(&p).unwrap();
        let h = 1e-5;
        let f = |x: f64, y: f64| e.eval(&[x, y]).unwrap();
        let fd_gx = (f(2.0 + h, 3.0) - f(2.0 - h, 3.0)) / (2.0 * h);
        let fd_gy = (f(2.0, 3.0 + h) - f(2.0, 3.0 - h)) / (2.0 * h);
        let fd_hxy = (f(2.0 + h, 3.0 + h) - f(2.0 + h, 3.0 - h) - f(2.0 - h, 3.0 + h)
            + f(2.0 - h, 3.0 - h))
            / (4.0 * h * h);
        assert_eq!(j.value, 6.0);
        assert!((j.gradient[0] - fd_gx).abs() < 1e-8);
        assert!((j.gradient[1] - fd_gy).abs() < 1e-8);
        assert!((fd_gx - 3.0).abs() < 1e-8 && (fd_gy - 2.0).abs() < 1e-8);
        assert!((j.hessian(0, 1) - fd_hxy).abs() < 1e-4);
        assert_eq!(j.hessian(0, 1), 1.0);
    }

    #[test]
    fn log_domain_error_names_subexpression() {
        let e = parse("1 + log(x1 - 2)", 1).unwrap();
        match e.eval_jet2(&[1.0]).unwrap_err() {
            EvalError::Domain { subexpr, .. } => assert_eq!(subexpr, "log((x1 - 2.0))"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(e.eval(&[1.0]).is_err());
    }

    #[test]
    fn division_by_zero_reported() {
        let e = parse("1/x1", 1).unwrap();
        assert!(matches!(e.eval_jet2(&[0.0]), Err(EvalError::Domain { .. })));
    }

    #[test]
    fn printing_is_reparsable() {
        for text in [
            "-2^2",
            "(-2)^2",
            "x1^-1",
            "neg(x1) - -3.5",
            "(x1^2)^3",
            "sqrt(x2)/x1",
        ] {
            let e = parse(text, 2).unwrap();
            let again = parse(&e.to_string(), 2).unwrap();
            assert_eq!(e, again, "{text} -> {e}");
        }
    }
}
