//! Canonical rational functions: the normal form of every expression.
//!
//! A value is `num / prod(f_i^e_i)` where the numerator is a radical-reduced
//! polynomial and each denominator factor is a monic, radical-free polynomial
//! with no monomial content. An expression is identically zero iff its
//! numerator is the zero polynomial.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::poly::{q, Monomial, Poly, Var, Q};
use super::ExprError;

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RatFunc {
    num: Poly,
    den: BTreeMap<Poly, u32>,
}

type Result<T> = std::result::Result<T, ExprError>;

impl RatFunc {
    pub fn zero() -> Self {
        RatFunc::default()
    }

    pub fn one() -> Self {
        RatFunc::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        RatFunc {
            num: Poly::constant(c),
            den: BTreeMap::new(),
        }
    }

    pub fn int(n: i64) -> Self {
        RatFunc::constant(q(n))
    }

    pub fn sym(name: &str) -> Self {
        RatFunc::var(Var::sym(name))
    }

    pub fn var(v: Var) -> Self {
        RatFunc::from_poly(Poly::var(v))
    }

    pub fn from_poly(p: Poly) -> Self {
        RatFunc::finish(p, BTreeMap::new())
    }

    pub fn numer(&self) -> &Poly {
        &self.num
    }

    pub fn denom_factors(&self) -> &BTreeMap<Poly, u32> {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_empty() && self.num.is_one()
    }

    pub fn as_constant(&self) -> Option<Q> {
        if self.den.is_empty() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_empty()
    }

    /// Number of stored terms; used as a size budget.
    pub fn size(&self) -> usize {
        self.num.size() + self.den.keys().map(Poly::size).sum::<usize>()
    }

    pub fn depends_on(&self, s: &str) -> bool {
        self.num.depends_on(s) || self.den.keys().any(|f| f.depends_on(s))
    }

    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    pub fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        self.num.collect_symbols(out);
        for f in self.den.keys() {
            f.collect_symbols(out);
        }
    }

    /// All atoms (top level and nested) appearing in the value.
    pub fn atoms(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        fn walk(p: &Poly, out: &mut BTreeSet<Var>) {
            for v in p.vars() {
                match &v {
                    Var::Sym(_) => {}
                    Var::Func { args, .. } => {
                        for a in args.iter() {
                            a.atoms_into(out);
                        }
                    }
                    Var::Sqrt(r) => walk(r, out),
                    Var::Exp(u) | Var::Ln(u) => u.atoms_into(out),
                }
                if !matches!(v, Var::Sym(_)) {
                    out.insert(v);
                }
            }
        }
        walk(&self.num, &mut out);
        for f in self.den.keys() {
            walk(f, &mut out);
        }
        out
    }

    fn atoms_into(&self, out: &mut BTreeSet<Var>) {
        out.extend(self.atoms());
    }

    /// Reduces the numerator and cancels denominator factors that divide it.
    fn finish(num: Poly, mut den: BTreeMap<Poly, u32>) -> Self {
        let mut num = num.reduce();
        if num.is_zero() {
            return RatFunc::zero();
        }
        for (f, e) in den.iter_mut() {
            while *e > 0 {
                match num.div_exact(f) {
                    Some(qt) => {
                        num = qt;
                        *e -= 1;
                    }
                    None => break,
                }
            }
        }
        den.retain(|_, e| *e > 0);
        RatFunc { num, den }
    }

    /// Builds `num / prod(factors)` from arbitrary polynomial factors,
    /// canonicalising and rationalising each one.
    pub fn build(num: Poly, factors: Vec<(Poly, u32)>) -> Result<Self> {
        let mut num = num.reduce();
        let mut den: BTreeMap<Poly, u32> = BTreeMap::new();
        let mut queue = factors;
        let mut guard = 0usize;
        while let Some((f, e)) = queue.pop() {
            guard += 1;
            if guard > 10_000 {
                return Err(ExprError::Normalization("denominator canonicalisation diverged".into()));
            }
            if e == 0 {
                continue;
            }
            let f = f.reduce();
            if f.is_zero() {
                return Err(ExprError::DivisionByZero);
            }
            if let Some(c) = f.as_constant() {
                num = num.scale(&pow_q(&c, -(e as i64)));
                continue;
            }
            if let Some(s) = f.vars().into_iter().find(|v| matches!(v, Var::Sqrt(_))) {
                let Var::Sqrt(rad) = &s else { unreachable!() };
                let (a, b) = f.split_radical(&s);
                let conj = a.sub(&b.mul_monomial(&Monomial::var(s.clone(), 1)));
                num = num.mul(&conj.pow(e));
                let mut nf = a.mul(&a).sub(&b.mul(&b).mul(rad)).reduce();
                // The norm is often a multiple of the radicand or of a factor
                // already present; split those off so they can cancel.
                let mut known: Vec<Poly> = vec![(**rad).clone()];
                known.extend(den.keys().cloned());
                for k in known {
                    if k.as_constant().is_some() {
                        continue;
                    }
                    while nf.as_constant().is_none() {
                        match nf.div_exact(&k) {
                            Some(qt) => {
                                queue.push((k.clone(), e));
                                nf = qt;
                            }
                            None => break,
                        }
                    }
                }
                queue.push((nf, e));
                continue;
            }
            let mc = f.monomial_content();
            if !mc.is_one() {
                let rest = f.mul_monomial(&mc.pow(-1));
                for (v, k) in mc.0 {
                    if v.is_exp() {
                        num = num.mul_monomial(&Monomial::var(v, -k * e as i64));
                    } else {
                        *den.entry(Poly::var(v)).or_insert(0) += (k as u32) * e;
                    }
                }
                queue.push((rest, e));
                continue;
            }
            let lc = f.leading().map(|(_, c)| c.clone()).unwrap();
            let f = f.scale(&lc.recip());
            num = num.scale(&pow_q(&lc, -(e as i64)));
            *den.entry(f).or_insert(0) += e;
        }
        Ok(RatFunc::finish(num, den))
    }

    pub fn add(&self, other: &RatFunc) -> RatFunc {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.den == other.den {
            return RatFunc::finish(self.num.add(&other.num), self.den.clone());
        }
        let mut lcm = self.den.clone();
        for (f, e) in &other.den {
            let x = lcm.entry(f.clone()).or_insert(0);
            *x = (*x).max(*e);
        }
        let lift = |r: &RatFunc| -> Poly {
            let mut p = r.num.clone();
            for (f, e) in &lcm {
                let have = r.den.get(f).copied().unwrap_or(0);
                if *e > have {
                    p = p.mul(&f.pow(*e - have));
                }
            }
            p
        };
        let num = lift(self).add(&lift(other));
        RatFunc::finish(num, lcm)
    }

    pub fn neg(&self) -> RatFunc {
        RatFunc {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, other: &RatFunc) -> RatFunc {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Q) -> RatFunc {
        if c.is_zero() {
            return RatFunc::zero();
        }
        RatFunc {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &RatFunc) -> RatFunc {
        if self.is_zero() || other.is_zero() {
            return RatFunc::zero();
        }
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        let mut den = self.den.clone();
        for (f, e) in &other.den {
            *den.entry(f.clone()).or_insert(0) += e;
        }
        // Cross-cancel before multiplying numerators.
        let mut a = self.num.clone();
        let mut b = other.num.clone();
        for (f, e) in den.iter_mut() {
            for p in [&mut a, &mut b] {
                while *e > 0 {
                    match p.div_exact(f) {
                        Some(qt) => {
                            *p = qt;
                            *e -= 1;
                        }
                        None => break,
                    }
                }
            }
        }
        den.retain(|_, e| *e > 0);
        RatFunc::finish(a.mul(&b), den)
    }

    pub fn inv(&self) -> Result<RatFunc> {
        if self.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        let mut num = Poly::one();
        for (f, e) in &self.den {
            num = num.mul(&f.pow(*e));
        }
        RatFunc::build(num, vec![(self.num.clone(), 1)])
    }

    pub fn div(&self, other: &RatFunc) -> Result<RatFunc> {
        if let Some(c) = other.as_constant() {
            if c.is_zero() {
                return Err(ExprError::DivisionByZero);
            }
            return Ok(self.scale(&c.recip()));
        }
        Ok(self.mul(&other.inv()?))
    }

    pub fn powi(&self, n: i64) -> Result<RatFunc> {
        if n == 0 {
            return Ok(RatFunc::one());
        }
        let base = if n < 0 { self.inv()? } else { self.clone() };
        let mut acc = RatFunc::one();
        let mut b = base;
        let mut k = n.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&b);
            }
            k >>= 1;
            if k > 0 {
                b = b.mul(&b);
            }
        }
        Ok(acc)
    }

    // ----- atoms -----------------------------------------------------------

    pub fn exp(u: &RatFunc) -> Result<RatFunc> {
        let mut result = RatFunc::one();
        let den_part = RatFunc {
            num: Poly::one(),
            den: u.den.clone(),
        };
        for (m, c) in &u.num.terms {
            if u.den.is_empty() && m.0.len() == 1 && m.0[0].1 == 1 {
                if let Var::Ln(arg) = &m.0[0].0 {
                    if c.is_integer() {
                        result = result.mul(&arg.powi(to_i64(c.numer())?)?);
                        continue;
                    }
                    let twice = c * q(2);
                    if twice.is_integer() {
                        let root = RatFunc::sqrt(arg)?;
                        result = result.mul(&root.powi(to_i64(twice.numer())?)?);
                        continue;
                    }
                }
            }
            let (expo, scale) = if c.is_integer() {
                (to_i64(c.numer())?, Q::one())
            } else {
                (to_i64(c.numer())?, Q::from_integer(c.denom().clone()).recip())
            };
            let key = RatFunc::from_poly(Poly::term(m.clone(), scale)).mul(&den_part);
            let atom = Poly::term(Monomial::var(Var::Exp(Arc::new(key)), expo), Q::one());
            result = result.mul(&RatFunc::from_poly(atom));
        }
        Ok(result)
    }

    pub fn ln(u: &RatFunc) -> Result<RatFunc> {
        if u.is_zero() {
            return Err(ExprError::Domain("ln(0)".into()));
        }
        if u.is_one() {
            return Ok(RatFunc::zero());
        }
        if u.den.is_empty() && u.num.len() == 1 {
            let (m, c) = u.num.terms.iter().next().unwrap();
            if c.is_positive() && !m.is_one() && m.0.iter().all(|(v, _)| v.is_exp()) {
                let mut acc = if c.is_one() {
                    RatFunc::zero()
                } else {
                    RatFunc::var(Var::Ln(Arc::new(RatFunc::constant(c.clone()))))
                };
                for (v, k) in &m.0 {
                    let Var::Exp(arg) = v else { unreachable!() };
                    acc = acc.add(&arg.scale(&q(*k)));
                }
                return Ok(acc);
            }
        }
        Ok(RatFunc::var(Var::Ln(Arc::new(u.clone()))))
    }

    pub fn sqrt(u: &RatFunc) -> Result<RatFunc> {
        if u.is_zero() {
            return Ok(RatFunc::zero());
        }
        if u.den.is_empty() {
            return Ok(sqrt_poly(&u.num));
        }
        // Positive factors with even multiplicity leave the root exactly;
        // the rest is folded into the radicand (positive branch).
        let mut out_den = Poly::one();
        let mut in_den = Poly::one();
        for (f, e) in &u.den {
            if e % 2 == 0 && is_positive_poly(f) {
                out_den = out_den.mul(&f.pow(e / 2));
            } else {
                in_den = in_den.mul(&f.pow(*e));
            }
        }
        sqrt_poly(&u.num.mul(&in_den)).div(&RatFunc::from_poly(out_den.mul(&in_den)))
    }

    pub fn sinh(u: &RatFunc) -> Result<RatFunc> {
        let a = RatFunc::exp(u)?;
        let b = RatFunc::exp(&u.neg())?;
        Ok(a.sub(&b).scale(&Q::new(1.into(), 2.into())))
    }

    pub fn cosh(u: &RatFunc) -> Result<RatFunc> {
        let a = RatFunc::exp(u)?;
        let b = RatFunc::exp(&u.neg())?;
        Ok(a.add(&b).scale(&Q::new(1.into(), 2.into())))
    }

    pub fn func(name: &str, derivs: Vec<u32>, args: Vec<RatFunc>) -> RatFunc {
        RatFunc::var(Var::Func {
            name: Arc::from(name),
            derivs,
            args: Arc::new(args),
        })
    }

    // ----- calculus --------------------------------------------------------

    /// Exact partial derivative with respect to symbol `s`.
    pub fn diff(&self, s: &str) -> RatFunc {
        if !self.depends_on(s) {
            return RatFunc::zero();
        }
        let inv_den = RatFunc {
            num: Poly::one(),
            den: self.den.clone(),
        };
        let mut acc = diff_poly(&self.num, s).mul(&inv_den);
        for (f, e) in &self.den {
            if !f.depends_on(s) {
                continue;
            }
            let df = diff_poly(f, s);
            let mut fden = BTreeMap::new();
            fden.insert(f.clone(), 1);
            let term = self
                .mul(&df)
                .mul(&RatFunc::finish(Poly::one(), fden))
                .scale(&q(*e as i64));
            acc = acc.sub(&term);
        }
        acc
    }

    /// Rebuilds the value with every variable passed through `f`; `f`
    /// returns `Some(replacement)` or `None` to recurse into the atom.
    pub fn map_vars(&self, f: &dyn Fn(&Var) -> Result<Option<RatFunc>>) -> Result<RatFunc> {
        let mut cache: HashMap<Var, Option<RatFunc>> = HashMap::new();
        let num = map_poly(&self.num, f, &mut cache)?;
        let mut out = num;
        for (fac, e) in &self.den {
            let mapped = map_poly(fac, f, &mut cache)?;
            if mapped.is_zero() {
                return Err(ExprError::DivisionByZero);
            }
            out = out.div(&mapped.powi(*e as i64)?)?;
        }
        Ok(out)
    }

    /// Simultaneous substitution of symbols.
    pub fn subst(&self, map: &BTreeMap<String, RatFunc>) -> Result<RatFunc> {
        if map.is_empty() || !map.keys().any(|k| self.depends_on(k)) {
            return Ok(self.clone());
        }
        self.map_vars(&|v| match v {
            Var::Sym(s) => Ok(Some(map.get(&**s).cloned().unwrap_or_else(|| RatFunc::var(v.clone())))),
            _ => Ok(None),
        })
    }

    pub fn subst1(&self, s: &str, value: &RatFunc) -> Result<RatFunc> {
        let mut m = BTreeMap::new();
        m.insert(s.to_string(), value.clone());
        self.subst(&m)
    }
}

fn to_i64(n: &BigInt) -> Result<i64> {
    n.to_i64()
        .ok_or_else(|| ExprError::Normalization("exponent out of range".into()))
}

fn pow_q(c: &Q, n: i64) -> Q {
    if n >= 0 {
        num_traits::pow(c.clone(), n as usize)
    } else {
        num_traits::pow(c.recip(), (-n) as usize)
    }
}

/// Parameters known to be positive; their even powers leave a square root.
const POSITIVE: [&str; 3] = ["kappa", "kappabar", "m"];

fn is_positive_atom(v: &Var) -> bool {
    v.is_exp() || v.as_sym().is_some_and(|s| POSITIVE.contains(&s))
}

fn is_positive_poly(p: &Poly) -> bool {
    p.terms
        .iter()
        .all(|(m, c)| c.is_positive() && m.0.iter().all(|(v, e)| is_positive_atom(v) || e % 2 == 0))
}

/// Square root of a polynomial radicand. Rational squares and even powers of
/// positive atoms are pulled out; the rest becomes a radical atom.
fn sqrt_poly(p: &Poly) -> RatFunc {
    if p.is_one() {
        return RatFunc::one();
    }
    let c = p.content().abs();
    let (cn, cd) = (c.numer().sqrt(), c.denom().sqrt());
    let (c_out, c_in) = if &(&cn * &cn) == c.numer() && &(&cd * &cd) == c.denom() {
        (Q::new(cn, cd), c)
    } else {
        (Q::one(), Q::one())
    };
    let mono = p.monomial_content();
    let mut half = Vec::new();
    let mut full = Vec::new();
    for (v, e) in &mono.0 {
        if !is_positive_atom(v) {
            continue;
        }
        let k = e.div_euclid(2);
        if k != 0 {
            half.push((v.clone(), k));
            full.push((v.clone(), 2 * k));
        }
    }
    let pulled = Poly::term(Monomial(half), c_out);
    let rest = if pulled.is_one() {
        p.clone()
    } else {
        p.div_exact(&Poly::term(Monomial(full), c_in))
            .expect("monomial content divides")
    };
    if let Some(k) = rest.as_constant() {
        if k.is_one() {
            return RatFunc::from_poly(pulled);
        }
    }
    // A perfect square leaves the radical only when its root has a known
    // sign, so the positive branch is kept.
    if let Some(root) = rest.sqrt_exact() {
        if is_positive_poly(&root) {
            return RatFunc::from_poly(pulled.mul(&root));
        }
        if is_positive_poly(&root.neg()) {
            return RatFunc::from_poly(pulled.mul(&root.neg()));
        }
    }
    if pulled.is_one() {
        return RatFunc::var(Var::Sqrt(Arc::new(p.clone())));
    }
    RatFunc::from_poly(pulled).mul(&RatFunc::var(Var::Sqrt(Arc::new(rest))))
}

fn diff_var(v: &Var, s: &str) -> RatFunc {
    match v {
        Var::Sym(n) => {
            if &**n == s {
                RatFunc::one()
            } else {
                RatFunc::zero()
            }
        }
        Var::Func { name, derivs, args } => {
            let mut acc = RatFunc::zero();
            for (k, a) in args.iter().enumerate() {
                let da = a.diff(s);
                if da.is_zero() {
                    continue;
                }
                let mut d = derivs.clone();
                d[k] += 1;
                acc = acc.add(&RatFunc::func(name, d, (**args).clone()).mul(&da));
            }
            acc
        }
        Var::Sqrt(rad) => {
            let dr = diff_poly(rad, s);
            let r = RatFunc::from_poly((**rad).clone());
            dr.mul(&RatFunc::var(v.clone()))
                .div(&r.scale(&q(2)))
                .expect("radicand is nonzero")
        }
        Var::Exp(u) => u.diff(s).mul(&RatFunc::var(v.clone())),
        Var::Ln(u) => u.diff(s).div(u).expect("logarithm argument is nonzero"),
    }
}

fn diff_poly(p: &Poly, s: &str) -> RatFunc {
    let mut plain = Poly::zero();
    let mut by_atom: BTreeMap<Var, Poly> = BTreeMap::new();
    for (m, c) in &p.terms {
        for (v, e) in &m.0 {
            if !v.depends_on(s) {
                continue;
            }
            let rest = m.mul(&Monomial::var(v.clone(), -1));
            let t = Poly::term(rest, c * q(*e));
            match v {
                Var::Sym(_) => plain = plain.add(&t),
                _ => {
                    let slot = by_atom.entry(v.clone()).or_default();
                    *slot = slot.add(&t);
                }
            }
        }
    }
    let mut acc = RatFunc::from_poly(plain);
    for (v, coeff) in by_atom {
        acc = acc.add(&RatFunc::from_poly(coeff).mul(&diff_var(&v, s)));
    }
    acc
}

fn map_var(
    v: &Var,
    f: &dyn Fn(&Var) -> Result<Option<RatFunc>>,
    cache: &mut HashMap<Var, Option<RatFunc>>,
) -> Result<Option<RatFunc>> {
    if let Some(r) = cache.get(v) {
        return Ok(r.clone());
    }
    let out = match f(v)? {
        Some(r) => Some(r),
        None => match v {
            Var::Sym(_) => None,
            Var::Func { name, derivs, args } => {
                let mut changed = false;
                let mut new_args = Vec::with_capacity(args.len());
                for a in args.iter() {
                    let b = a.map_vars(f)?;
                    changed |= &b != a;
                    new_args.push(b);
                }
                changed.then(|| RatFunc::func(name, derivs.clone(), new_args))
            }
            Var::Sqrt(rad) => {
                let r = RatFunc::from_poly((**rad).clone());
                let m = r.map_vars(f)?;
                (m != r).then(|| RatFunc::sqrt(&m)).transpose()?
            }
            Var::Exp(u) => {
                let m = u.map_vars(f)?;
                (&m != &**u).then(|| RatFunc::exp(&m)).transpose()?
            }
            Var::Ln(u) => {
                let m = u.map_vars(f)?;
                (&m != &**u).then(|| RatFunc::ln(&m)).transpose()?
            }
        },
    };
    cache.insert(v.clone(), out.clone());
    Ok(out)
}

fn map_poly(
    p: &Poly,
    f: &dyn Fn(&Var) -> Result<Option<RatFunc>>,
    cache: &mut HashMap<Var, Option<RatFunc>>,
) -> Result<RatFunc> {
    let mut repl: HashMap<Var, RatFunc> = HashMap::new();
    for v in p.vars() {
        if let Some(r) = map_var(&v, f, cache)? {
            repl.insert(v, r);
        }
    }
    if repl.is_empty() {
        return Ok(RatFunc::from_poly(p.clone()));
    }
    // Polynomial fast path when every replacement is a polynomial and no
    // replaced variable carries a negative exponent.
    let poly_path = repl.values().all(RatFunc::is_polynomial)
        && p.terms
            .keys()
            .all(|m| m.0.iter().all(|(v, e)| *e >= 0 || !repl.contains_key(v)));
    if poly_path {
        let mut acc = Poly::zero();
        for (m, c) in &p.terms {
            let mut keep = Vec::new();
            let mut t = Poly::one();
            for (v, e) in &m.0 {
                match repl.get(v) {
                    Some(r) => t = t.mul(&r.num.pow(*e as u32)),
                    None => keep.push((v.clone(), *e)),
                }
            }
            acc = acc.add(&t.mul_monomial(&Monomial(keep)).scale(c));
        }
        return Ok(RatFunc::from_poly(acc));
    }
    let mut acc = RatFunc::zero();
    for (m, c) in &p.terms {
        let mut keep = Vec::new();
        let mut t = RatFunc::one();
        for (v, e) in &m.0 {
            match repl.get(v) {
                Some(r) => t = t.mul(&r.powi(*e)?),
                None => keep.push((v.clone(), *e)),
            }
        }
        let base = RatFunc::from_poly(Poly::term(Monomial(keep), c.clone()));
        acc = acc.add(&t.mul(&base));
    }
    Ok(acc)
}
