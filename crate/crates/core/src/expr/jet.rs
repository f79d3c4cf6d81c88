use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

use super::ast::{BinOp, Expr, Func};

/// Value, gradient and Hessian of a scalar function of two parameters.
///
/// The Hessian is stored as `[h11, h12, h22]`, so symmetry holds by
/// construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [f64; 3],
}

impl Jet2 {
    pub fn constant(value: f64) -> Self {
        Jet2 {
            value,
            grad: [0.0; 2],
            hess: [0.0; 3],
        }
    }

    /// The coordinate function `s -> s[index]` at the given point.
    pub fn variable(index: usize, at: f64) -> Self {
        let mut grad = [0.0; 2];
        grad[index] = 1.0;
        Jet2 {
            value: at,
            grad,
            hess: [0.0; 3],
        }
    }

    /// Second partial `∂_a ∂_b`.
    pub fn second(&self, a: usize, b: usize) -> f64 {
        match (a, b) {
            (0, 0) => self.hess[0],
            (1, 1) => self.hess[2],
            _ => self.hess[1],
        }
    }

    pub fn is_constant(&self) -> bool {
        self.grad == [0.0; 2] && self.hess == [0.0; 3]
    }

    /// Composes with a scalar function given its value and first two
    /// derivatives at `self.value`.
    pub fn chain(&self, f: f64, df: f64, d2f: f64) -> Jet2 {
        let [gx, gy] = self.grad;
        let [h11, h12, h22] = self.hess;
        Jet2 {
            value: f,
            grad: [df * gx, df * gy],
            hess: [
                df * h11 + d2f * gx * gx,
                df * h12 + d2f * gx * gy,
                df * h22 + d2f * gy * gy,
            ],
        }
    }

    /// Composes with a function of two jets, given its value, gradient
    /// `(f_a, f_b)` and Hessian `(f_aa, f_ab, f_bb)`.
    pub fn chain2(a: &Jet2, b: &Jet2, f: f64, grad: [f64; 2], hess: [f64; 3]) -> Jet2 {
        let [fa, fb] = grad;
        let [faa, fab, fbb] = hess;
        let mix = |i: usize, j: usize| {
            faa * a.grad[i] * a.grad[j]
                + fab * (a.grad[i] * b.grad[j] + b.grad[i] * a.grad[j])
                + fbb * b.grad[i] * b.grad[j]
        };
        Jet2 {
            value: f,
            grad: [fa * a.grad[0] + fb * b.grad[0], fa * a.grad[1] + fb * b.grad[1]],
            hess: [
                fa * a.hess[0] + fb * b.hess[0] + mix(0, 0),
                fa * a.hess[1] + fb * b.hess[1] + mix(0, 1),
                fa * a.hess[2] + fb * b.hess[2] + mix(1, 1),
            ],
        }
    }

    fn is_finite(&self) -> bool {
        self.value.is_finite() && self.grad.iter().all(|v| v.is_finite()) && self.hess.iter().all(|v| v.is_finite())
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, rhs: Jet2) -> Jet2 {
        Jet2 {
            value: self.value + rhs.value,
            grad: [self.grad[0] + rhs.grad[0], self.grad[1] + rhs.grad[1]],
            hess: [
                self.hess[0] + rhs.hess[0],
                self.hess[1] + rhs.hess[1],
                self.hess[2] + rhs.hess[2],
            ],
        }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: Jet2) -> Jet2 {
        self + (-rhs)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        Jet2 {
            value: -self.value,
            grad: [-self.grad[0], -self.grad[1]],
            hess: [-self.hess[0], -self.hess[1], -self.hess[2]],
        }
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: Jet2) -> Jet2 {
        Jet2::chain2(
            &self,
            &rhs,
            self.value * rhs.value,
            [rhs.value, self.value],
            [0.0, 1.0, 0.0],
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error in `{node}`: {reason}")]
    Domain { node: String, reason: String },
}

fn domain_error(node: &Expr, reason: impl Into<String>) -> EvalError {
    let names = ["s1".to_string(), "s2".to_string()];
    EvalError::Domain {
        node: node.display(&names).to_string(),
        reason: reason.into(),
    }
}

fn checked(node: &Expr, jet: Jet2) -> Result<Jet2, EvalError> {
    if jet.is_finite() {
        Ok(jet)
    } else {
        Err(domain_error(node, "non-finite value or derivative"))
    }
}

/// Evaluates `expr` at `s` together with its exact first and second partial
/// derivatives, propagated by second-order forward-mode rules.
pub fn eval_jet2(expr: &Expr, s: [f64; 2]) -> Result<Jet2, EvalError> {
    let jet = match expr {
        Expr::Num(v) => Jet2::constant(*v),
        Expr::Pi => Jet2::constant(PI),
        Expr::Param(i) => Jet2::variable(*i, s[*i]),
        Expr::Neg(inner) => -eval_jet2(inner, s)?,
        Expr::Binary(op, lhs, rhs) => {
            let a = eval_jet2(lhs, s)?;
            let b = eval_jet2(rhs, s)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b.value == 0.0 {
                        return Err(domain_error(expr, "division by zero"));
                    }
                    let inv = 1.0 / b.value;
                    Jet2::chain2(
                        &a,
                        &b,
                        a.value * inv,
                        [inv, -a.value * inv * inv],
                        [0.0, -inv * inv, 2.0 * a.value * inv * inv * inv],
                    )
                }
                BinOp::Pow => pow_jet(expr, &a, &b)?,
            }
        }
        Expr::Call(func, args) => {
            let x = eval_jet2(&args[0], s)?;
            let v = x.value;
            match func {
                Func::Sin => x.chain(v.sin(), v.cos(), -v.sin()),
                Func::Cos => x.chain(v.cos(), -v.sin(), -v.cos()),
                Func::Tan => {
                    if v.cos() == 0.0 {
                        return Err(domain_error(expr, "tan pole"));
                    }
                    let t = v.tan();
                    let sec2 = 1.0 + t * t;
                    x.chain(t, sec2, 2.0 * t * sec2)
                }
                Func::Sinh => x.chain(v.sinh(), v.cosh(), v.sinh()),
                Func::Cosh => x.chain(v.cosh(), v.sinh(), v.cosh()),
                Func::Tanh => {
                    let t = v.tanh();
                    let sech2 = 1.0 - t * t;
                    x.chain(t, sech2, -2.0 * t * sech2)
                }
                Func::Exp => {
                    let e = v.exp();
                    x.chain(e, e, e)
                }
                Func::Log => {
                    if v <= 0.0 {
                        return Err(domain_error(expr, format!("log of non-positive value {v}")));
                    }
                    x.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
                }
                Func::Sqrt => {
                    if v <= 0.0 {
                        return Err(domain_error(
                            expr,
                            format!("sqrt needs a positive argument for a 2-jet, got {v}"),
                        ));
                    }
                    let r = v.sqrt();
                    x.chain(r, 0.5 / r, -0.25 / (r * v))
                }
                Func::Atan => {
                    let d = 1.0 / (1.0 + v * v);
                    x.chain(v.atan(), d, -2.0 * v * d * d)
                }
                Func::Atan2 => {
                    let y = x;
                    let xx = eval_jet2(&args[1], s)?;
                    let (yv, xv) = (y.value, xx.value);
                    let r2 = xv * xv + yv * yv;
                    if r2 == 0.0 {
                        return Err(domain_error(expr, "atan2(0, 0)"));
                    }
                    let r4 = r2 * r2;
                    // f(y, x): f_y = x/r², f_x = -y/r²
                    Jet2::chain2(
                        &y,
                        &xx,
                        yv.atan2(xv),
                        [xv / r2, -yv / r2],
                        [-2.0 * xv * yv / r4, (yv * yv - xv * xv) / r4, 2.0 * xv * yv / r4],
                    )
                }
            }
        }
    };
    checked(expr, jet)
}

fn pow_jet(node: &Expr, base: &Jet2, exponent: &Jet2) -> Result<Jet2, EvalError> {
    let (b, c) = (base.value, exponent.value);
    if exponent.is_constant() {
        let integral = c.fract() == 0.0;
        if b < 0.0 && !integral {
            return Err(domain_error(node, "negative base with non-integer exponent"));
        }
        if b == 0.0 && !(integral && c >= 0.0) {
            return Err(domain_error(node, "zero base without a non-negative integer exponent"));
        }
        let f = b.powf(c);
        let df = if c == 0.0 { 0.0 } else { c * b.powf(c - 1.0) };
        let d2f = if c == 0.0 || c == 1.0 {
            0.0
        } else {
            c * (c - 1.0) * b.powf(c - 2.0)
        };
        return Ok(base.chain(f, df, d2f));
    }
    if b <= 0.0 {
        return Err(domain_error(node, "variable exponent needs a positive base"));
    }
    // b^c = exp(c ln b)
    let ln_b = b.ln();
    let f = b.powf(c);
    Ok(Jet2::chain2(
        base,
        exponent,
        f,
        [c * f / b, f * ln_b],
        [c * (c - 1.0) * f / (b * b), f * (1.0 + c * ln_b) / b, f * ln_b * ln_b],
    ))
}

/// Plain scalar evaluation, independent of the jet rules.
pub fn eval(expr: &Expr, s: [f64; 2]) -> Result<f64, EvalError> {
    let v = match expr {
        Expr::Num(v) => *v,
        Expr::Pi => PI,
        Expr::Param(i) => s[*i],
        Expr::Neg(inner) => -eval(inner, s)?,
        Expr::Binary(op, lhs, rhs) => {
            let a = eval(lhs, s)?;
            let b = eval(rhs, s)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(domain_error(expr, "division by zero"));
                    }
                    a / b
                }
                BinOp::Pow => a.powf(b),
            }
        }
        Expr::Call(func, args) => {
            let x = eval(&args[0], s)?;
            match func {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Tan => x.tan(),
                Func::Sinh => x.sinh(),
                Func::Cosh => x.cosh(),
                Func::Tanh => x.tanh(),
                Func::Exp => x.exp(),
                Func::Log => {
                    if x <= 0.0 {
                        return Err(domain_error(expr, format!("log of non-positive value {x}")));
                    }
                    x.ln()
                }
                Func::Sqrt => {
                    if x < 0.0 {
                        return Err(domain_error(expr, format!("sqrt of negative value {x}")));
                    }
                    x.sqrt()
                }
                Func::Atan => x.atan(),
                Func::Atan2 => x.atan2(eval(&args[1], s)?),
            }
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(domain_error(expr, "non-finite value"))
    }
}
