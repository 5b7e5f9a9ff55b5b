use super::ast::{BinOp, Expr, Func};
use super::jet::Jet2;
use crate::error::{Error, Result};

/// Numbers the evaluator can run over: plain reals and second-order jets.
trait Scalar: Sized {
    fn constant(c: f64, n: usize) -> Self;
    fn variable(i: usize, x: f64, n: usize) -> Self;
    fn value(&self) -> f64;
    /// True when all derivatives vanish at this point.
    fn is_constant(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn compose(&self, f0: f64, f1: f64, f2: f64) -> Self;
}

impl Scalar for f64 {
    fn constant(c: f64, _: usize) -> Self {
        c
    }
    fn variable(_: usize, x: f64, _: usize) -> Self {
        x
    }
    fn value(&self) -> f64 {
        *self
    }
    fn is_constant(&self) -> bool {
        true
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn compose(&self, f0: f64, _: f64, _: f64) -> Self {
        f0
    }
}

impl Scalar for Jet2 {
    fn constant(c: f64, n: usize) -> Self {
        Jet2::constant(n, c)
    }
    fn variable(i: usize, x: f64, n: usize) -> Self {
        Jet2::variable(n, i, x)
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn is_constant(&self) -> bool {
        Jet2::is_constant(self)
    }
    fn add(&self, o: &Self) -> Self {
        Jet2::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        Jet2::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        Jet2::mul(self, o)
    }
    fn div(&self, o: &Self) -> Self {
        Jet2::div(self, o)
    }
    fn neg(&self) -> Self {
        Jet2::neg(self)
    }
    fn compose(&self, f0: f64, f1: f64, f2: f64) -> Self {
        Jet2::compose(self, f0, f1, f2)
    }
}

fn check_point(expr: &Expr, point: &[f64]) -> Result<()> {
    let need = expr.arity();
    if point.len() < need {
        return Err(Error::DimensionMismatch {
            expected: need,
            got: point.len(),
        });
    }
    Ok(())
}

/// Evaluates `expr` at `point` with ordinary real semantics.
pub fn eval_scalar(expr: &Expr, point: &[f64]) -> Result<f64> {
    check_point(expr, point)?;
    eval::<f64>(expr, point)
}

/// Evaluates `expr` and its exact first and second partial derivatives at `point`.
pub fn eval_jet2(expr: &Expr, point: &[f64]) -> Result<Jet2> {
    check_point(expr, point)?;
    let jet = eval::<Jet2>(expr, point)?;
    if !jet.is_finite() {
        return Err(Error::Domain(format!(
            "derivative of `{expr}` is not finite at {point:?}"
        )));
    }
    Ok(jet)
}

fn finite<T: Scalar>(v: T, what: &str) -> Result<T> {
    if v.value().is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{what} produced a non-finite value")))
    }
}

fn eval<T: Scalar>(expr: &Expr, point: &[f64]) -> Result<T> {
    let n = point.len();
    match expr {
        Expr::Const(c) => Ok(T::constant(*c, n)),
        Expr::Var(i) => Ok(T::variable(*i, point[*i], n)),
        Expr::Neg(e) => Ok(eval::<T>(e, point)?.neg()),
        Expr::Binary(op, a, b) => {
            let a = eval::<T>(a, point)?;
            let b = eval::<T>(b, point)?;
            match op {
                BinOp::Add => finite(a.add(&b), "addition"),
                BinOp::Sub => finite(a.sub(&b), "subtraction"),
                BinOp::Mul => finite(a.mul(&b), "multiplication"),
                BinOp::Div => {
                    if b.value() == 0.0 {
                        return Err(Error::Domain("division by zero".into()));
                    }
                    finite(a.div(&b), "division")
                }
                BinOp::Pow => pow(&a, &b),
            }
        }
        Expr::Call(f, e) => {
            let x = eval::<T>(e, point)?;
            call(*f, &x)
        }
    }
}

fn pow<T: Scalar>(base: &T, exponent: &T) -> Result<T> {
    let a = base.value();
    let c = exponent.value();
    if exponent.is_constant() {
        let integral = c.fract() == 0.0 && c.abs() < i32::MAX as f64;
        if a < 0.0 && !integral {
            return Err(Error::Domain(format!(
                "negative base {a} raised to non-integer power {c}"
            )));
        }
        if a == 0.0 && c < 0.0 {
            return Err(Error::Domain("zero raised to a negative power".into()));
        }
        let (f0, f1, f2) = if integral {
            let k = c as i32;
            (
                a.powi(k),
                c * a.powi(k - 1),
                c * (c - 1.0) * a.powi(k - 2),
            )
        } else {
            (a.powf(c), c * a.powf(c - 1.0), c * (c - 1.0) * a.powf(c - 2.0))
        };
        // a^0 and a^1 have exactly vanishing higher derivatives even at a = 0
        let f1 = if c == 0.0 { 0.0 } else { f1 };
        let f2 = if c == 0.0 || c == 1.0 { 0.0 } else { f2 };
        return finite(base.compose(f0, f1, f2), "power");
    }
    if a <= 0.0 {
        return Err(Error::Domain(format!(
            "variable exponent needs a positive base, got {a}"
        )));
    }
    let ln_a = base.compose(a.ln(), 1.0 / a, -1.0 / (a * a));
    let t = ln_a.mul(exponent);
    let e = t.value().exp();
    finite(t.compose(e, e, e), "power")
}

fn call<T: Scalar>(f: Func, x: &T) -> Result<T> {
    let a = x.value();
    let out = match f {
        Func::Sin => x.compose(a.sin(), a.cos(), -a.sin()),
        Func::Cos => x.compose(a.cos(), -a.sin(), -a.cos()),
        Func::Tan => {
            let c = a.cos();
            if c == 0.0 {
                return Err(Error::Domain("tan at a pole".into()));
            }
            let t = a.tan();
            let sec2 = 1.0 / (c * c);
            x.compose(t, sec2, 2.0 * sec2 * t)
        }
        Func::Exp => {
            let e = a.exp();
            x.compose(e, e, e)
        }
        Func::Ln => {
            if a <= 0.0 {
                return Err(Error::Domain(format!("ln of non-positive value {a}")));
            }
            x.compose(a.ln(), 1.0 / a, -1.0 / (a * a))
        }
        Func::Sqrt => {
            if a < 0.0 {
                return Err(Error::Domain(format!("sqrt of negative value {a}")));
            }
            let s = a.sqrt();
            x.compose(s, 0.5 / s, -0.25 / (s * a))
        }
        Func::Abs => {
            let s = if a > 0.0 {
                1.0
            } else if a < 0.0 {
                -1.0
            } else if x.is_constant() {
                0.0
            } else {
                return Err(Error::Domain("abs is not differentiable at 0".into()));
            };
            x.compose(a.abs(), s, 0.0)
        }
    };
    finite(out, f.name())
}
