//! Floating-point evaluation, used as an oracle independent of the
//! normal-form machinery.

use std::collections::BTreeMap;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::ToPrimitive;

use super::ast::{Expr, Func};
use super::ExprError;

/// Value with a forward-mode tangent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub re: f64,
    pub eps: f64,
}

impl Dual {
    pub fn new(re: f64, eps: f64) -> Self {
        Dual { re, eps }
    }
}

pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn value(&self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    fn powi(self, n: i32) -> Self;
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn value(&self) -> f64 {
        *self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sinh(self) -> Self {
        f64::sinh(self)
    }
    fn cosh(self) -> Self {
        f64::cosh(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        Dual::new(self.re / o.re, (self.eps * o.re - self.re * o.eps) / (o.re * o.re))
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.re, -self.eps)
    }
}

impl Scalar for Dual {
    fn from_f64(x: f64) -> Self {
        Dual::new(x, 0.0)
    }
    fn value(&self) -> f64 {
        self.re
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, e * self.eps)
    }
    fn ln(self) -> Self {
        Dual::new(self.re.ln(), self.eps / self.re)
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Dual::new(s, self.eps / (2.0 * s))
    }
    fn sinh(self) -> Self {
        Dual::new(self.re.sinh(), self.re.cosh() * self.eps)
    }
    fn cosh(self) -> Self {
        Dual::new(self.re.cosh(), self.re.sinh() * self.eps)
    }
    fn powi(self, n: i32) -> Self {
        Dual::new(self.re.powi(n), n as f64 * self.re.powi(n - 1) * self.eps)
    }
}

/// Concrete definition bound to an abstract function name.
#[derive(Clone, Debug)]
pub struct FunctionDef {
    pub params: Vec<String>,
    pub body: Expr,
}

pub type FunctionBindings = BTreeMap<String, FunctionDef>;

fn derivative_body(def: &FunctionDef, derivs: &[u32]) -> Result<Expr, ExprError> {
    let mut r = def.body.to_rf()?;
    for (k, d) in derivs.iter().enumerate() {
        for _ in 0..*d {
            r = r.diff(&def.params[k]);
        }
    }
    Ok(r.to_expr())
}

pub fn eval_generic<T: Scalar>(
    e: &Expr,
    env: &dyn Fn(&str) -> Option<T>,
    funcs: &FunctionBindings,
) -> Result<T, ExprError> {
    Ok(match e {
        Expr::Num(q) => T::from_f64(q.to_f64().unwrap_or(f64::NAN)),
        Expr::Sym(s) => env(s).ok_or_else(|| ExprError::Unbound(s.to_string()))?,
        Expr::Add(ts) => {
            let mut acc = T::from_f64(0.0);
            for t in ts {
                acc = acc + eval_generic(t, env, funcs)?;
            }
            acc
        }
        Expr::Mul(fs) => {
            let mut acc = T::from_f64(1.0);
            for f in fs {
                acc = acc * eval_generic(f, env, funcs)?;
            }
            acc
        }
        Expr::Pow(b, n) => {
            let v = eval_generic(b, env, funcs)?;
            if *n < 0 && v.value() == 0.0 {
                return Err(ExprError::Domain(format!("division by zero in {e}")));
            }
            v.powi(*n as i32)
        }
        Expr::Call(f, args) => {
            let a: Vec<T> = args
                .iter()
                .map(|x| eval_generic(x, env, funcs))
                .collect::<Result<_, _>>()?;
            match f {
                Func::Exp => a[0].exp(),
                Func::Ln => {
                    if a[0].value() <= 0.0 {
                        return Err(ExprError::Domain(format!("non-positive logarithm argument in {e}")));
                    }
                    a[0].ln()
                }
                Func::Sqrt => {
                    if a[0].value() < 0.0 {
                        return Err(ExprError::Domain(format!("negative square-root argument in {e}")));
                    }
                    a[0].sqrt()
                }
                Func::Sinh => a[0].sinh(),
                Func::Cosh => a[0].cosh(),
                Func::Abstract { name, derivs } => {
                    let def = funcs
                        .get(&**name)
                        .ok_or_else(|| ExprError::UnboundFunction(name.to_string()))?;
                    let body = derivative_body(def, derivs)?;
                    let local: BTreeMap<&str, T> =
                        def.params.iter().map(String::as_str).zip(a.iter().copied()).collect();
                    let inner = |s: &str| local.get(s).copied().or_else(|| env(s));
                    eval_generic(&body, &inner, funcs)?
                }
            }
        }
    })
}

/// Plain evaluation from a name -> value map.
pub fn eval(e: &Expr, values: &BTreeMap<String, f64>, funcs: &FunctionBindings) -> Result<f64, ExprError> {
    eval_generic(e, &|s| values.get(s).copied(), funcs)
}

/// Value and directional derivative along `direction`.
pub fn eval_dual(
    e: &Expr,
    values: &BTreeMap<String, f64>,
    direction: &BTreeMap<String, f64>,
    funcs: &FunctionBindings,
) -> Result<Dual, ExprError> {
    eval_generic(
        e,
        &|s| {
            values
                .get(s)
                .map(|v| Dual::new(*v, direction.get(s).copied().unwrap_or(0.0)))
        },
        funcs,
    )
}
