use std::ops::{Add, Div, Mul, Neg, Sub};

use super::{BinaryOp, ExprAst, ExprError, Func, UnaryOp, Var};

/// Value together with its partial derivatives in `x` and `t`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DualValue {
    pub value: f64,
    pub dx: f64,
    pub dt: f64,
}

impl DualValue {
    pub const fn constant(value: f64) -> Self {
        DualValue { value, dx: 0.0, dt: 0.0 }
    }

    /// Applies a scalar function given its value and derivative at `self.value`.
    fn chain(self, value: f64, deriv: f64) -> Self {
        DualValue {
            value,
            dx: deriv * self.dx,
            dt: deriv * self.dt,
        }
    }

    fn is_constant(&self) -> bool {
        self.dx == 0.0 && self.dt == 0.0
    }
}

impl Add for DualValue {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        DualValue {
            value: self.value + o.value,
            dx: self.dx + o.dx,
            dt: self.dt + o.dt,
        }
    }
}

impl Sub for DualValue {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        DualValue {
            value: self.value - o.value,
            dx: self.dx - o.dx,
            dt: self.dt - o.dt,
        }
    }
}

impl Mul for DualValue {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        DualValue {
            value: self.value * o.value,
            dx: self.dx * o.value + self.value * o.dx,
            dt: self.dt * o.value + self.value * o.dt,
        }
    }
}

impl Div for DualValue {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.value;
        let q = self.value * inv;
        DualValue {
            value: q,
            dx: (self.dx - q * o.dx) * inv,
            dt: (self.dt - q * o.dt) * inv,
        }
    }
}

impl Neg for DualValue {
    type Output = Self;
    fn neg(self) -> Self {
        DualValue {
            value: -self.value,
            dx: -self.dx,
            dt: -self.dt,
        }
    }
}

fn domain(node: &ExprAst, reason: impl Into<String>) -> ExprError {
    ExprError::Domain {
        subexpr: node.to_string(),
        reason: reason.into(),
    }
}

fn pow(node: &ExprAst, base: DualValue, exp: DualValue) -> Result<DualValue, ExprError> {
    let n = exp.value;
    if exp.is_constant() && n.fract() == 0.0 && n.abs() <= i32::MAX as f64 {
        if base.value == 0.0 && n < 0.0 {
            return Err(domain(node, "zero raised to a negative power"));
        }
        let value = base.value.powi(n as i32);
        let deriv = if n == 0.0 { 0.0 } else { n * base.value.powi(n as i32 - 1) };
        return Ok(base.chain(value, deriv));
    }
    if base.value <= 0.0 {
        return Err(domain(node, "non-integer power of a non-positive base"));
    }
    let value = base.value.powf(n);
    let ln = base.value.ln();
    Ok(DualValue {
        value,
        dx: value * (exp.dx * ln + n * base.dx / base.value),
        dt: value * (exp.dt * ln + n * base.dt / base.value),
    })
}

pub(super) fn eval(node: &ExprAst, t: f64, x: f64) -> Result<DualValue, ExprError> {
    let out = match node {
        ExprAst::Const(c) => DualValue::constant(*c),
        ExprAst::Var(Var::X) => DualValue { value: x, dx: 1.0, dt: 0.0 },
        ExprAst::Var(Var::T) => DualValue { value: t, dx: 0.0, dt: 1.0 },
        ExprAst::Unary(UnaryOp::Neg, inner) => -eval(inner, t, x)?,
        ExprAst::Binary(op, l, r) => {
            let a = eval(l, t, x)?;
            let b = eval(r, t, x)?;
            match op {
                BinaryOp::Add => a + b,
                BinaryOp::Sub => a - b,
                BinaryOp::Mul => a * b,
                BinaryOp::Div => {
                    if b.value == 0.0 {
                        return Err(domain(node, "division by zero"));
                    }
                    a / b
                }
                BinaryOp::Pow => pow(node, a, b)?,
            }
        }
        ExprAst::Call(func, args) => {
            let a = eval(&args[0], t, x)?;
            match func {
                Func::Exp => {
                    let e = a.value.exp();
                    a.chain(e, e)
                }
                Func::Log => {
                    if a.value <= 0.0 {
                        return Err(domain(node, "log of a non-positive value"));
                    }
                    a.chain(a.value.ln(), 1.0 / a.value)
                }
                Func::Sqrt => {
                    if a.value < 0.0 {
                        return Err(domain(node, "sqrt of a negative value"));
                    }
                    if a.value == 0.0 {
                        if !a.is_constant() {
                            return Err(domain(node, "sqrt is not differentiable at 0"));
                        }
                        DualValue::constant(0.0)
                    } else {
                        let s = a.value.sqrt();
                        a.chain(s, 0.5 / s)
                    }
                }
                Func::Pow => pow(node, a, eval(&args[1], t, x)?)?,
                Func::Min => {
                    let b = eval(&args[1], t, x)?;
                    if b.value < a.value {
                        b
                    } else {
                        a
                    }
                }
                Func::Max => {
                    let b = eval(&args[1], t, x)?;
                    if b.value > a.value {
                        b
                    } else {
                        a
                    }
                }
            }
        }
    };
    if !out.value.is_finite() {
        return Err(domain(node, "non-finite result"));
    }
    Ok(out)
}
