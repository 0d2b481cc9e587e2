//! A small expression language for user-supplied coefficients.
//!
//! Expressions range over the variables `t` and `x`, the arithmetic
//! operators `+ - * / ^`, and the functions `exp`, `log`, `sqrt`, `pow`,
//! `min` and `max`. Evaluation is forward-mode: every node yields a
//! [`DualValue`] holding the value and both first partial derivatives.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?
//! primary := number | 't' | 'x' | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x^2`
//! is `-(x^2)`.

mod dual;
mod parse;

use std::fmt;

pub use dual::DualValue;
pub use parse::parse;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    X,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Pow,
    Min,
    Max,
}

impl Func {
    pub(crate) fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "pow" => Func::Pow,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Pow => "pow",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Exp | Func::Log | Func::Sqrt => 1,
            Func::Pow | Func::Min | Func::Max => 2,
        }
    }
}

/// Expression tree. Immutable once built; evaluation is reentrant.
#[derive(Debug, Clone, PartialEq)]
pub enum ExprAst {
    Const(f64),
    Var(Var),
    Unary(UnaryOp, Box<ExprAst>),
    Binary(BinaryOp, Box<ExprAst>, Box<ExprAst>),
    Call(Func, Vec<ExprAst>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: expected one of {expected:?}")]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
    },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("domain error in `{subexpr}`: {reason}")]
    Domain { subexpr: String, reason: String },
}

impl ExprAst {
    /// Evaluates value and first partials in `x` and `t`.
    pub fn eval_dual(&self, t: f64, x: f64) -> Result<DualValue, ExprError> {
        dual::eval(self, t, x)
    }

    pub fn eval(&self, t: f64, x: f64) -> Result<f64, ExprError> {
        self.eval_dual(t, x).map(|d| d.value)
    }

    fn precedence(&self) -> u8 {
        match self {
            ExprAst::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 1,
            ExprAst::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 2,
            ExprAst::Unary(..) => 3,
            ExprAst::Binary(BinaryOp::Pow, ..) => 4,
            ExprAst::Const(_) | ExprAst::Var(_) | ExprAst::Call(..) => 5,
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &ExprAst, min_prec: u8) -> fmt::Result {
    if e.precedence() < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for ExprAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprAst::Const(c) => {
                if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                    write!(f, "({c:?})")
                } else {
                    write!(f, "{c:?}")
                }
            }
            ExprAst::Var(Var::T) => f.write_str("t"),
            ExprAst::Var(Var::X) => f.write_str("x"),
            ExprAst::Unary(UnaryOp::Neg, inner) => {
                f.write_str("-")?;
                write_operand(f, inner, 3)
            }
            ExprAst::Binary(op, lhs, rhs) => {
                let (sym, lp, rp) = match op {
                    BinaryOp::Add => ("+", 1, 2),
                    BinaryOp::Sub => ("-", 1, 2),
                    BinaryOp::Mul => ("*", 2, 3),
                    BinaryOp::Div => ("/", 2, 3),
                    // right-assoc: base must be atomic, exponent may be unary
                    BinaryOp::Pow => ("^", 5, 3),
                };
                write_operand(f, lhs, lp)?;
                write!(f, " {sym} ")?;
                write_operand(f, rhs, rp)
            }
            ExprAst::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_eval_examples() {
        let e = parse("x^2 - 1").unwrap();
        assert!(matches!(e, ExprAst::Binary(BinaryOp::Sub, ..)));
        assert_eq!(e.eval(0.0, 2.0).unwrap(), 3.0);

        let e = parse("exp(-t)*x").unwrap();
        assert_eq!(e.eval(0.0, 5.0).unwrap(), 5.0);
    }

    #[test]
    fn incomplete_expression_reports_offset() {
        match parse("x +") {
            Err(ExprError::Syntax { offset, expected }) => {
                assert_eq!(offset, 3);
                assert!(!expected.is_empty());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier() {
        assert!(matches!(
            parse("y + 1"),
            Err(ExprError::UnknownIdentifier { offset: 0, .. })
        ));
        assert!(matches!(
            parse("2*foo(x)"),
            Err(ExprError::UnknownIdentifier { offset: 2, .. })
        ));
    }

    #[test]
    fn dual_examples() {
        let d = parse("x^2").unwrap().eval_dual(0.0, 3.0).unwrap();
        assert_eq!((d.value, d.dx), (9.0, 6.0));
        let d = parse("x*x - 1").unwrap().eval_dual(0.0, 1.0).unwrap();
        assert_eq!((d.value, d.dx), (0.0, 2.0));
        let err = parse("sqrt(x)").unwrap().eval_dual(0.0, -1.0).unwrap_err();
        match err {
            ExprError::Domain { subexpr, .. } => assert_eq!(subexpr, "sqrt(x)"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse("-x^2").unwrap();
        assert_eq!(e.eval(0.0, 3.0).unwrap(), -9.0);
        let e = parse("2^3^2").unwrap();
        assert_eq!(e.eval(0.0, 0.0).unwrap(), 512.0);
        let e = parse("8 - 3 - 2").unwrap();
        assert_eq!(e.eval(0.0, 0.0).unwrap(), 3.0);
        let e = parse("8 / 4 / 2").unwrap();
        assert_eq!(e.eval(0.0, 0.0).unwrap(), 1.0);
        let e = parse("  2 *(x+ 1)\t").unwrap();
        assert_eq!(e.eval(0.0, 1.0).unwrap(), 4.0);
    }

    #[test]
    fn time_partial() {
        let d = parse("exp(-t)*x").unwrap().eval_dual(0.5, 2.0).unwrap();
        assert!((d.dt + 2.0 * (-0.5f64).exp()).abs() < 1e-15);
        assert!((d.dx - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn division_by_zero_is_domain_error() {
        assert!(matches!(
            parse("1/x").unwrap().eval_dual(0.0, 0.0),
            Err(ExprError::Domain { .. })
        ));
        assert!(matches!(
            parse("log(x - 1)").unwrap().eval_dual(0.0, 1.0),
            Err(ExprError::Domain { .. })
        ));
        assert!(matches!(
            parse("x^0.5").unwrap().eval_dual(0.0, -2.0),
            Err(ExprError::Domain { .. })
        ));
        // integer exponents accept negative bases
        assert_eq!(parse("x^3").unwrap().eval(0.0, -2.0).unwrap(), -8.0);
    }

    #[test]
    fn printer_round_trip_simple() {
        for src in ["x^2 - 1", "-(x + t)^2", "(2 - x) - (1 - t)", "min(x, 2*t) / (1 + x)", "2^-x", "-x^-2"] {
            let a = parse(src).unwrap();
            let printed = a.to_string();
            let b = parse(&printed).unwrap();
            assert_eq!(a, b, "{src} -> {printed}");
        }
    }
}
