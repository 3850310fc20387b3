use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::poly::{Monomial, Poly, Var, Q};
use super::rf::RatFunc;
use super::ExprError;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Ln,
    Sqrt,
    Sinh,
    Cosh,
    /// Unspecified function such as `f(p0, psq)`; `derivs` records partial
    /// derivatives per argument position.
    Abstract { name: Arc<str>, derivs: Vec<u32> },
}

impl Func {
    pub fn builtin(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            _ => return None,
        })
    }

    pub fn abstract_fn(name: &str, arity: usize) -> Func {
        Func::Abstract {
            name: Arc::from(name),
            derivs: vec![0; arity],
        }
    }
}

/// Immutable symbolic expression tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Num(Q),
    Sym(Arc<str>),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Box<Expr>, i64),
    Call(Func, Vec<Expr>),
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Num(Q::from_integer(BigInt::from(n)))
    }

    pub fn rational(n: i64, d: i64) -> Expr {
        Expr::Num(Q::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn sym(name: &str) -> Expr {
        Expr::Sym(Arc::from(name))
    }

    pub fn call(f: Func, args: Vec<Expr>) -> Expr {
        Expr::Call(f, args)
    }

    pub fn exp(self) -> Expr {
        Expr::Call(Func::Exp, vec![self])
    }

    pub fn ln(self) -> Expr {
        Expr::Call(Func::Ln, vec![self])
    }

    pub fn sqrt(self) -> Expr {
        Expr::Call(Func::Sqrt, vec![self])
    }

    pub fn pow(self, n: i64) -> Expr {
        Expr::Pow(Box::new(self), n)
    }

    pub fn recip(self) -> Expr {
        self.pow(-1)
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Expr::Num(q) if q.is_zero())
    }

    /// Normal form as a canonical rational function.
    pub fn to_rf(&self) -> Result<RatFunc, ExprError> {
        Ok(match self {
            Expr::Num(q) => RatFunc::constant(q.clone()),
            Expr::Sym(s) => RatFunc::sym(s),
            Expr::Add(ts) => {
                let mut acc = RatFunc::zero();
                for t in ts {
                    acc = acc.add(&t.to_rf()?);
                }
                acc
            }
            Expr::Mul(fs) => {
                let mut acc = RatFunc::one();
                for f in fs {
                    acc = acc.mul(&f.to_rf()?);
                    if acc.is_zero() {
                        break;
                    }
                }
                acc
            }
            Expr::Pow(b, n) => b.to_rf()?.powi(*n)?,
            Expr::Call(f, args) => {
                let mut a = Vec::with_capacity(args.len());
                for x in args {
                    a.push(x.to_rf()?);
                }
                match f {
                    Func::Exp => RatFunc::exp(&a[0])?,
                    Func::Ln => RatFunc::ln(&a[0])?,
                    Func::Sqrt => RatFunc::sqrt(&a[0])?,
                    Func::Sinh => RatFunc::sinh(&a[0])?,
                    Func::Cosh => RatFunc::cosh(&a[0])?,
                    Func::Abstract { name, derivs } => RatFunc::func(name, derivs.clone(), a),
                }
            }
        })
    }

    pub fn normalize(&self) -> Result<Expr, ExprError> {
        Ok(self.to_rf()?.to_expr())
    }

    /// Structural substitution of symbols (no normalisation).
    pub fn subst_syms(&self, map: &BTreeMap<String, Expr>) -> Expr {
        match self {
            Expr::Sym(s) => map.get(&**s).cloned().unwrap_or_else(|| self.clone()),
            Expr::Num(_) => self.clone(),
            Expr::Add(ts) => Expr::Add(ts.iter().map(|t| t.subst_syms(map)).collect()),
            Expr::Mul(ts) => Expr::Mul(ts.iter().map(|t| t.subst_syms(map)).collect()),
            Expr::Pow(b, n) => Expr::Pow(Box::new(b.subst_syms(map)), *n),
            Expr::Call(f, a) => Expr::Call(f.clone(), a.iter().map(|t| t.subst_syms(map)).collect()),
        }
    }

    pub fn symbols(&self) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        self.walk(&mut |e| {
            if let Expr::Sym(s) = e {
                out.insert(s.to_string());
            }
        });
        out
    }

    pub fn walk(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Add(ts) | Expr::Mul(ts) | Expr::Call(_, ts) => ts.iter().for_each(|t| t.walk(f)),
            Expr::Pow(b, _) => b.walk(f),
            _ => {}
        }
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(vec![self, rhs])
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Add(vec![self, Expr::Mul(vec![Expr::int(-1), rhs])])
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(vec![self, rhs])
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Mul(vec![self, rhs.recip()])
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Mul(vec![Expr::int(-1), self])
    }
}

// ----- RatFunc -> Expr ------------------------------------------------------

fn var_to_expr(v: &Var) -> Expr {
    match v {
        Var::Sym(s) => Expr::Sym(s.clone()),
        Var::Func { name, derivs, args } => Expr::Call(
            Func::Abstract {
                name: name.clone(),
                derivs: derivs.clone(),
            },
            args.iter().map(RatFunc::to_expr).collect(),
        ),
        Var::Sqrt(p) => Expr::Call(Func::Sqrt, vec![RatFunc::from_poly((**p).clone()).to_expr()]),
        Var::Exp(u) => Expr::Call(Func::Exp, vec![u.to_expr()]),
        Var::Ln(u) => Expr::Call(Func::Ln, vec![u.to_expr()]),
    }
}

fn monomial_to_expr(c: &Q, m: &Monomial) -> Expr {
    let mut fs = Vec::new();
    if !c.is_one() || m.is_one() {
        fs.push(Expr::Num(c.clone()));
    }
    for (v, e) in &m.0 {
        let b = var_to_expr(v);
        fs.push(if *e == 1 { b } else { b.pow(*e) });
    }
    if fs.len() == 1 {
        fs.pop().unwrap()
    } else {
        Expr::Mul(fs)
    }
}

pub(crate) fn poly_to_expr(p: &Poly) -> Expr {
    if p.is_zero() {
        return Expr::zero();
    }
    let mut terms: Vec<(&Monomial, &Q)> = p.terms.iter().collect();
    // Highest total degree first, then a fixed order; keeps printing stable.
    terms.sort_by(|a, b| b.0.degree().cmp(&a.0.degree()).then(a.0.cmp(b.0)));
    let ts: Vec<Expr> = terms.into_iter().map(|(m, c)| monomial_to_expr(c, m)).collect();
    if ts.len() == 1 {
        ts.into_iter().next().unwrap()
    } else {
        Expr::Add(ts)
    }
}

impl RatFunc {
    pub fn to_expr(&self) -> Expr {
        let n = poly_to_expr(self.numer());
        if self.denom_factors().is_empty() {
            return n;
        }
        let mut fs = vec![n];
        for (f, e) in self.denom_factors() {
            fs.push(poly_to_expr(f).pow(-(*e as i64)));
        }
        Expr::Mul(fs)
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

// ----- printing -------------------------------------------------------------

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;

fn fmt_q(q: &Q) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Splits a product into (sign, numerator factors, denominator factors).
fn split_product(fs: &[Expr]) -> (bool, Vec<Expr>, Vec<Expr>) {
    let mut neg = false;
    let mut num = Vec::new();
    let mut den = Vec::new();
    for f in fs {
        match f {
            Expr::Num(q) => {
                if q.is_negative() {
                    neg = !neg;
                }
                let a = q.abs();
                if !a.numer().is_one() {
                    num.push(Expr::Num(Q::from_integer(a.numer().clone())));
                }
                if !a.denom().is_one() {
                    den.push(Expr::Num(Q::from_integer(a.denom().clone())));
                }
            }
            Expr::Pow(b, n) if *n < 0 => {
                den.push(if *n == -1 { (**b).clone() } else { (**b).clone().pow(-n) })
            }
            other => num.push(other.clone()),
        }
    }
    (neg, num, den)
}

fn is_negative_term(e: &Expr) -> bool {
    match e {
        Expr::Num(q) => q.is_negative(),
        Expr::Mul(fs) => split_product(fs).0,
        _ => false,
    }
}

fn negate_term(e: &Expr) -> Expr {
    match e {
        Expr::Num(q) => Expr::Num(-q.clone()),
        Expr::Mul(fs) => {
            let mut v = fs.clone();
            if let Some(Expr::Num(q)) = v.iter_mut().find(|x| matches!(x, Expr::Num(_))) {
                let _ = q;
            }
            if let Some(pos) = v.iter().position(|x| matches!(x, Expr::Num(q) if q.is_negative())) {
                if let Expr::Num(q) = &v[pos] {
                    let nq = -q.clone();
                    if nq.is_one() {
                        v.remove(pos);
                    } else {
                        v[pos] = Expr::Num(nq);
                    }
                }
                if v.len() == 1 {
                    return v.pop().unwrap();
                }
                Expr::Mul(v)
            } else {
                Expr::Mul(vec![Expr::int(-1), e.clone()])
            }
        }
        _ => Expr::Mul(vec![Expr::int(-1), e.clone()]),
    }
}

fn write_expr(e: &Expr, parent: u8, out: &mut String) {
    match e {
        Expr::Num(q) => {
            let s = fmt_q(q);
            let needs = (q.is_negative() && parent > PREC_ADD) || (!q.is_integer() && parent > PREC_MUL);
            if needs {
                out.push('(');
                out.push_str(&s);
                out.push(')');
            } else {
                out.push_str(&s);
            }
        }
        Expr::Sym(s) => out.push_str(s),
        Expr::Add(ts) => {
            if ts.is_empty() {
                out.push('0');
                return;
            }
            let paren = parent > PREC_ADD;
            if paren {
                out.push('(');
            }
            for (i, t) in ts.iter().enumerate() {
                if i == 0 {
                    write_expr(t, PREC_ADD, out);
                } else if is_negative_term(t) {
                    out.push_str(" - ");
                    write_expr(&negate_term(t), PREC_MUL, out);
                } else {
                    out.push_str(" + ");
                    write_expr(t, PREC_ADD, out);
                }
            }
            if paren {
                out.push(')');
            }
        }
        Expr::Mul(fs) => {
            if fs.is_empty() {
                out.push('1');
                return;
            }
            let (neg, num, den) = split_product(fs);
            let prec = if neg { PREC_NEG } else { PREC_MUL };
            let paren = parent > prec || (neg && parent > PREC_ADD);
            if paren {
                out.push('(');
            }
            if neg {
                out.push('-');
            }
            if num.is_empty() {
                out.push('1');
            }
            for (i, f) in num.iter().enumerate() {
                if i > 0 {
                    out.push('*');
                }
                write_expr(f, PREC_MUL, out);
            }
            if !den.is_empty() {
                out.push('/');
                if den.len() == 1 {
                    write_expr(&den[0], PREC_POW, out);
                } else {
                    out.push('(');
                    for (i, f) in den.iter().enumerate() {
                        if i > 0 {
                            out.push('*');
                        }
                        write_expr(f, PREC_MUL, out);
                    }
                    out.push(')');
                }
            }
            if paren {
                out.push(')');
            }
        }
        Expr::Pow(b, n) => {
            if *n < 0 {
                write_expr(&Expr::Mul(vec![e.clone()]), parent, out);
                return;
            }
            write_expr(b, PREC_POW + 1, out);
            out.push('^');
            out.push_str(&n.to_string());
        }
        Expr::Call(f, args) => {
            let name = match f {
                Func::Exp => "exp".to_string(),
                Func::Ln => "ln".to_string(),
                Func::Sqrt => "sqrt".to_string(),
                Func::Sinh => "sinh".to_string(),
                Func::Cosh => "cosh".to_string(),
                Func::Abstract { name, derivs } => {
                    if derivs.iter().all(|d| *d == 0) {
                        name.to_string()
                    } else {
                        let idx: Vec<String> = derivs
                            .iter()
                            .enumerate()
                            .flat_map(|(k, d)| std::iter::repeat_n((k + 1).to_string(), *d as usize))
                            .collect();
                        format!("D[{}]{}", idx.join(","), name)
                    }
                }
            };
            out.push_str(&name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(a, 0, out);
            }
            out.push(')');
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(self, 0, &mut s);
        f.write_str(&s)
    }
}

/// Integer value of an expression that normalises to an integer constant.
pub(crate) fn as_integer(e: &Expr) -> Option<i64> {
    let r = e.to_rf().ok()?;
    let c = r.as_constant()?;
    if c.is_integer() {
        c.numer().to_i64()
    } else {
        None
    }
}
