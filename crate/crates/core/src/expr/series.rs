//! Truncated Taylor expansion in one parameter.
//!
//! Expansion runs over Laurent series with explicit precision tracking, so
//! removable singularities such as `(1 - exp(-2 P0 eps)) / eps` expand
//! correctly. Coefficients are normal-form rational functions.

use std::collections::BTreeMap;

use super::ast::{Expr, Func};
use super::poly::{q, Q};
use super::rf::RatFunc;
use super::ExprError;

const EPS: &str = "__eps";
const T: &str = "__t";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Center {
    /// Expand in the parameter itself around 0.
    Zero,
    /// Expand in `1 / parameter` around 0.
    Infinity,
}

#[derive(Clone, Debug)]
pub struct SeriesPoly {
    pub parameter: String,
    pub center: Center,
    pub order: usize,
    /// `coeffs[k]` multiplies `eps^k`, where `eps` is the parameter (center
    /// zero) or its reciprocal (center infinity).
    pub coeffs: Vec<RatFunc>,
}

impl SeriesPoly {
    pub fn coefficient(&self, k: usize) -> RatFunc {
        self.coeffs.get(k).cloned().unwrap_or_else(RatFunc::zero)
    }

    /// Value of the truncated polynomial at expansion variable `eps`.
    pub fn eval_at(&self, eps: f64, values: &BTreeMap<String, f64>) -> Result<f64, ExprError> {
        let funcs = Default::default();
        let mut acc = 0.0;
        for (k, c) in self.coeffs.iter().enumerate() {
            acc += super::eval::eval(&c.to_expr(), values, &funcs)? * eps.powi(k as i32);
        }
        Ok(acc)
    }
}

#[derive(Clone, Debug)]
struct Laurent {
    val: i64,
    coeffs: Vec<RatFunc>,
    prec: i64,
}

#[derive(Debug)]
enum SeriesFail {
    Precision,
    Hard(ExprError),
}

impl From<ExprError> for SeriesFail {
    fn from(e: ExprError) -> Self {
        SeriesFail::Hard(e)
    }
}

type SResult<T> = Result<T, SeriesFail>;

impl Laurent {
    fn constant(c: RatFunc, prec: i64) -> Laurent {
        let mut coeffs = vec![RatFunc::zero(); prec.max(1) as usize];
        coeffs[0] = c;
        Laurent { val: 0, coeffs, prec }
    }

    fn variable(prec: i64) -> Laurent {
        let mut coeffs = vec![RatFunc::zero(); prec.max(2) as usize];
        coeffs[1] = RatFunc::one();
        Laurent { val: 0, coeffs, prec }
    }

    fn get(&self, k: i64) -> RatFunc {
        if k < self.val || k >= self.prec {
            return RatFunc::zero();
        }
        self.coeffs.get((k - self.val) as usize).cloned().unwrap_or_else(RatFunc::zero)
    }

    fn from_fn(val: i64, prec: i64, f: impl Fn(i64) -> RatFunc) -> Laurent {
        let n = (prec - val).max(0);
        Laurent {
            val,
            coeffs: (0..n).map(|i| f(val + i)).collect(),
            prec,
        }
    }

    fn strip(mut self) -> Laurent {
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        self.coeffs.drain(..lead);
        self.val += lead as i64;
        self
    }

    fn add(&self, o: &Laurent) -> Laurent {
        let val = self.val.min(o.val);
        let prec = self.prec.min(o.prec);
        Laurent::from_fn(val, prec, |k| self.get(k).add(&o.get(k)))
    }

    fn mul(&self, o: &Laurent) -> Laurent {
        let val = self.val + o.val;
        let prec = (self.prec + o.val).min(o.prec + self.val);
        Laurent::from_fn(val, prec, |k| {
            let mut acc = RatFunc::zero();
            for i in self.val..self.prec {
                let j = k - i;
                if j < o.val || j >= o.prec {
                    continue;
                }
                let a = self.get(i);
                if a.is_zero() {
                    continue;
                }
                acc = acc.add(&a.mul(&o.get(j)));
            }
            acc
        })
    }

    fn scale(&self, c: &RatFunc) -> Laurent {
        Laurent {
            val: self.val,
            coeffs: self.coeffs.iter().map(|x| x.mul(c)).collect(),
            prec: self.prec,
        }
    }

    fn inv(&self) -> SResult<Laurent> {
        let s = self.clone().strip();
        if s.coeffs.is_empty() {
            return Err(SeriesFail::Precision);
        }
        let a0 = s.coeffs[0].clone();
        let a0inv = a0.inv()?;
        let rel = s.prec - s.val;
        let mut b: Vec<RatFunc> = vec![a0inv.clone()];
        for k in 1..rel {
            let mut acc = RatFunc::zero();
            for i in 1..=k {
                let ai = s.coeffs.get(i as usize).cloned().unwrap_or_else(RatFunc::zero);
                if ai.is_zero() {
                    continue;
                }
                acc = acc.add(&ai.mul(&b[(k - i) as usize]));
            }
            b.push(acc.neg().mul(&a0inv));
        }
        Ok(Laurent {
            val: -s.val,
            coeffs: b,
            prec: -s.val + rel,
        })
    }

    fn powi(&self, n: i64) -> SResult<Laurent> {
        let base = if n < 0 { self.inv()? } else { self.clone() };
        let mut acc = Laurent::constant(RatFunc::one(), base.prec.max(1) + base.val.abs() + 64);
        for _ in 0..n.unsigned_abs() {
            acc = acc.mul(&base);
        }
        Ok(acc)
    }

    fn shift(&self, k: i64) -> Laurent {
        Laurent {
            val: self.val + k,
            coeffs: self.coeffs.clone(),
            prec: self.prec + k,
        }
    }

    /// `phi(self)` by Taylor expansion of `phi` around the constant term.
    fn compose(&self, phi: &Func) -> SResult<Laurent> {
        let s = self.clone().strip();
        // An argument that vanishes to a positive precision is still a known
        // constant term (zero); only an undetermined constant term is fatal.
        if s.coeffs.is_empty() && s.prec <= 0 {
            return Err(SeriesFail::Precision);
        }
        if s.val < 0 {
            if *phi == Func::Sqrt && s.val % 2 == 0 {
                let inner = s.shift(-s.val);
                return Ok(inner.compose(phi)?.shift(s.val / 2));
            }
            return Err(SeriesFail::Hard(ExprError::Pole(format!(
                "argument of {phi:?} diverges at the expansion center"
            ))));
        }
        let c0 = s.get(0);
        let delta = Laurent::from_fn(1, s.prec, |k| s.get(k));
        if c0.is_zero() && matches!(phi, Func::Ln | Func::Sqrt) {
            return Err(SeriesFail::Hard(ExprError::Pole(format!(
                "{phi:?} is not analytic at zero argument"
            ))));
        }
        let t = Expr::sym(T);
        let body = Expr::call(phi.clone(), vec![t]).to_rf()?;
        let mut deriv = body;
        let mut out = Laurent::constant(deriv.subst1(T, &c0)?, s.prec);
        let mut dpow = Laurent::constant(RatFunc::one(), s.prec);
        let mut fact = Q::from(num_bigint::BigInt::from(1));
        for k in 1..s.prec.max(1) {
            deriv = deriv.diff(T);
            fact *= q(k);
            dpow = dpow.mul(&delta);
            if dpow.val >= s.prec {
                break;
            }
            let coef = deriv.subst1(T, &c0)?.scale(&fact.recip());
            out = out.add(&dpow.scale(&coef));
        }
        Ok(out)
    }
}

fn expand(e: &Expr, prec: i64) -> SResult<Laurent> {
    if !e.symbols().contains(EPS) {
        return Ok(Laurent::constant(e.to_rf()?, prec));
    }
    Ok(match e {
        Expr::Sym(_) => Laurent::variable(prec),
        Expr::Num(_) => unreachable!(),
        Expr::Add(ts) => {
            let mut acc = Laurent::constant(RatFunc::zero(), prec);
            for t in ts {
                acc = acc.add(&expand(t, prec)?);
            }
            acc
        }
        Expr::Mul(fs) => {
            let mut acc = Laurent::constant(RatFunc::one(), prec + 64);
            for f in fs {
                acc = acc.mul(&expand(f, prec)?);
            }
            acc
        }
        Expr::Pow(b, n) => expand(b, prec)?.powi(*n)?,
        Expr::Call(f, args) => match f {
            Func::Abstract { name, .. } => {
                return Err(SeriesFail::Hard(ExprError::Unsupported(format!(
                    "series through abstract function {name} with parameter-dependent arguments"
                ))))
            }
            _ => expand(&args[0], prec)?.compose(f)?,
        },
    })
}

/// Taylor coefficients up to `order` of `e` in `parameter` around `center`.
pub fn series(e: &Expr, parameter: &str, center: Center, order: usize) -> Result<SeriesPoly, ExprError> {
    let eps = Expr::sym(EPS);
    let mut map = BTreeMap::new();
    map.insert(
        parameter.to_string(),
        match center {
            Center::Zero => eps,
            Center::Infinity => eps.recip(),
        },
    );
    let e = e.subst_syms(&map);
    let want = order as i64 + 1;
    let mut guard = 2;
    loop {
        match expand(&e, want + guard) {
            Ok(s) => {
                let s = s.strip();
                if s.prec < want {
                    if guard > 24 {
                        return Err(ExprError::Pole("series precision exhausted".into()));
                    }
                    guard += 4;
                    continue;
                }
                if s.val < 0 {
                    return Err(ExprError::Pole(format!(
                        "expression has a pole of order {} at the expansion center",
                        -s.val
                    )));
                }
                let coeffs = (0..want).map(|k| s.get(k)).collect();
                return Ok(SeriesPoly {
                    parameter: parameter.to_string(),
                    center,
                    order,
                    coeffs,
                });
            }
            Err(SeriesFail::Precision) => {
                if guard > 24 {
                    return Err(ExprError::Pole("leading coefficient vanishes to working precision".into()));
                }
                guard += 4;
            }
            Err(SeriesFail::Hard(err)) => return Err(err),
        }
    }
}
