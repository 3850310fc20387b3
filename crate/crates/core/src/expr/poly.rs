//! Sparse multivariate polynomials over the rationals.
//!
//! Variables are either plain symbols or opaque atoms (abstract function
//! applications, square roots, exponentials, logarithms). Square-root atoms
//! carry their radicand and are reduced to degree at most one; exponential
//! atoms are units and may appear with negative exponents.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::rf::RatFunc;

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q2(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Sym(Arc<str>),
    /// Abstract function application; `derivs[k]` counts partial derivatives
    /// taken with respect to the k-th positional argument.
    Func {
        name: Arc<str>,
        derivs: Vec<u32>,
        args: Arc<Vec<RatFunc>>,
    },
    /// Positive square root of a polynomial radicand.
    Sqrt(Arc<Poly>),
    Exp(Arc<RatFunc>),
    Ln(Arc<RatFunc>),
}

impl Var {
    pub fn sym(name: &str) -> Var {
        Var::Sym(Arc::from(name))
    }

    pub fn is_exp(&self) -> bool {
        matches!(self, Var::Exp(_))
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Var::Sym(s) => Some(s),
            _ => None,
        }
    }

    /// True when the variable (or anything nested in it) mentions symbol `s`.
    pub fn depends_on(&self, s: &str) -> bool {
        match self {
            Var::Sym(n) => &**n == s,
            Var::Func { args, .. } => args.iter().any(|a| a.depends_on(s)),
            Var::Sqrt(p) => p.depends_on(s),
            Var::Exp(u) | Var::Ln(u) => u.depends_on(s),
        }
    }

    pub fn collect_symbols(&self, out: &mut std::collections::BTreeSet<String>) {
        match self {
            Var::Sym(n) => {
                out.insert(n.to_string());
            }
            Var::Func { args, .. } => args.iter().for_each(|a| a.collect_symbols(out)),
            Var::Sqrt(p) => p.collect_symbols(out),
            Var::Exp(u) | Var::Ln(u) => u.collect_symbols(out),
        }
    }
}

/// Product of variable powers, sorted by variable, no zero exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(pub Vec<(Var, i64)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: Var, e: i64) -> Self {
        if e == 0 {
            Monomial::one()
        } else {
            Monomial(vec![(v, e)])
        }
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> i64 {
        self.0.iter().map(|(_, e)| e.abs()).sum()
    }

    pub fn exponent(&self, v: &Var) -> i64 {
        self.0
            .binary_search_by(|(w, _)| w.cmp(v))
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let e = self.0[i].1 + other.0[j].1;
                    if e != 0 {
                        out.push((self.0[i].0.clone(), e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    pub fn pow(&self, n: i64) -> Monomial {
        if n == 0 {
            return Monomial::one();
        }
        Monomial(self.0.iter().map(|(v, e)| (v.clone(), e * n)).collect())
    }

    /// `self / other` if every exponent stays non-negative (exponential atoms
    /// are units and always divide).
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let q = self.mul(&other.pow(-1));
        if q.0.iter().all(|(v, e)| *e >= 0 || v.is_exp()) {
            Some(q)
        } else {
            None
        }
    }

    /// Lexicographic term order: smaller `Var` is the more significant variable.
    pub fn lex_cmp(&self, other: &Monomial) -> Ordering {
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.0.get(i), other.0.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some((_, e)), None) => return e.cmp(&0),
                (None, Some((_, e))) => return 0.cmp(e),
                (Some((v, e)), Some((w, f))) => match v.cmp(w) {
                    Ordering::Less => return e.cmp(&0),
                    Ordering::Greater => return 0.cmp(f),
                    Ordering::Equal => {
                        if e != f {
                            return e.cmp(f);
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
    }

    pub fn depends_on(&self, s: &str) -> bool {
        self.0.iter().any(|(v, _)| v.depends_on(s))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Poly {
    pub terms: BTreeMap<Monomial, Q>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        Poly { terms }
    }

    pub fn var(v: Var) -> Self {
        Poly::term(Monomial::var(v, 1), Q::one())
    }

    pub fn term(m: Monomial, c: Q) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    fn add_term(&mut self, m: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        self.scale(&-Q::one())
    }

    pub fn scale(&self, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, d)| (m.clone(), d * c)).collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(n, c)| (n.mul(m), c.clone())).collect(),
        }
    }

    /// Raw product without radical reduction.
    fn mul_raw(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        self.mul_raw(other).reduce()
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut acc = Poly::one();
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    fn needs_reduction(&self) -> bool {
        self.terms
            .keys()
            .any(|m| m.0.iter().any(|(v, e)| matches!(v, Var::Sqrt(_)) && (*e >= 2 || *e < 0)))
    }

    /// Rewrites every square-root atom power using `s^2 = radicand`.
    pub fn reduce(self) -> Poly {
        let mut p = self;
        let mut guard = 0;
        while p.needs_reduction() {
            guard += 1;
            assert!(guard < 64, "radical reduction did not terminate");
            let mut out = Poly::zero();
            for (m, c) in p.terms {
                let mut rest = Vec::new();
                let mut factor = Poly::one();
                for (v, e) in m.0 {
                    if let Var::Sqrt(rad) = &v {
                        if e >= 2 {
                            factor = factor.mul_raw(&rad.pow_raw((e / 2) as u32));
                            if e % 2 == 1 {
                                rest.push((v, 1));
                            }
                            continue;
                        }
                        assert!(e > 0, "negative power of radical atom in numerator");
                    }
                    rest.push((v, e));
                }
                let base = Poly::term(Monomial(rest), c);
                for (m2, c2) in base.mul_raw(&factor).terms {
                    out.add_term(m2, c2);
                }
            }
            p = out;
        }
        p
    }

    fn pow_raw(&self, n: u32) -> Poly {
        let mut acc = Poly::one();
        for _ in 0..n {
            acc = acc.mul_raw(self);
        }
        acc
    }

    /// Leading term in lexicographic order.
    pub fn leading(&self) -> Option<(&Monomial, &Q)> {
        self.terms.iter().max_by(|a, b| a.0.lex_cmp(b.0))
    }

    /// `q` with `q^2 = self` and positive leading coefficient, if one exists.
    pub fn sqrt_exact(&self) -> Option<Poly> {
        if self.is_zero() {
            return Some(Poly::zero());
        }
        let (lm, lc) = self.leading()?;
        if lc.is_negative() || lm.0.iter().any(|(_, e)| e % 2 != 0) {
            return None;
        }
        let (n, d) = (lc.numer().sqrt(), lc.denom().sqrt());
        if &(&n * &n) != lc.numer() || &(&d * &d) != lc.denom() {
            return None;
        }
        let t0 = Monomial(lm.0.iter().map(|(v, e)| (v.clone(), e / 2)).collect());
        let c0 = Q::new(n, d);
        let mut root = Poly::term(t0.clone(), c0.clone());
        let two_c0 = &c0 * Q::from_integer(2.into());
        for _ in 0..=self.len() {
            let rem = self.sub(&root.mul(&root));
            let Some((rm, rc)) = rem.leading() else {
                return Some(root);
            };
            let tm = rm.mul(&t0.pow(-1));
            if tm.lex_cmp(&t0) != Ordering::Less || tm.0.iter().any(|(v, e)| *e < 0 && !v.is_exp()) {
                return None;
            }
            let tc = rc / &two_c0;
            root = root.add(&Poly::term(tm, tc));
        }
        self.sub(&root.mul(&root)).is_zero().then_some(root)
    }

    /// Exact quotient `self / d`, or `None` if `d` does not divide `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if let Some(c) = d.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        // Shift exponential atoms so the division runs over ordinary
        // polynomials; they are units so the shift is undone afterwards.
        let units = |p: &Poly| Monomial(p.exp_minima().into_iter().filter(|(_, e)| *e != 0).collect());
        let (su, du) = (units(self), units(d));
        let d = &d.mul_monomial(&du.pow(-1));
        let shift = su.pow(-1);
        let num = self.mul_monomial(&shift);
        let (lm, lc) = {
            let (m, c) = d.leading()?;
            (m.clone(), c.clone())
        };
        let mut rem = num;
        let mut quot = Poly::zero();
        let mut steps = 0usize;
        while !rem.is_zero() {
            steps += 1;
            if steps > 20_000 {
                return None;
            }
            let (rm, rc) = {
                let (m, c) = rem.leading().unwrap();
                (m.clone(), c.clone())
            };
            let tm = rm.div(&lm)?;
            if tm.0.iter().any(|(_, e)| *e < 0) {
                return None;
            }
            let tc = rc / &lc;
            rem = rem.sub(&d.mul_monomial(&tm).scale(&tc));
            quot.add_term(tm, tc);
        }
        Some(quot.mul_monomial(&su.mul(&du.pow(-1))))
    }

    /// Minimum exponent of each exponential atom over all terms (absent = 0).
    fn exp_minima(&self) -> BTreeMap<Var, i64> {
        let mut mins: BTreeMap<Var, i64> = BTreeMap::new();
        for m in self.terms.keys() {
            for (v, e) in &m.0 {
                if v.is_exp() {
                    let x = mins.entry(v.clone()).or_insert(*e);
                    *x = (*x).min(*e);
                }
            }
        }
        for m in self.terms.keys() {
            for (v, x) in mins.iter_mut() {
                if m.exponent(v) == 0 {
                    *x = (*x).min(0);
                }
            }
        }
        mins
    }

    /// Greatest monomial dividing every term. Exponential atoms are units, so
    /// their exponent here is the minimum over terms and may be negative.
    pub fn monomial_content(&self) -> Monomial {
        let mut iter = self.terms.keys();
        let first = match iter.next() {
            Some(m) => m.clone(),
            None => return Monomial::one(),
        };
        let mut acc: Vec<(Var, i64)> = first.0.into_iter().filter(|(v, _)| !v.is_exp()).collect();
        for m in iter {
            acc.retain_mut(|(v, e)| {
                let f = m.exponent(v);
                *e = (*e).min(f);
                *e > 0
            });
        }
        acc.extend(self.exp_minima().into_iter().filter(|(_, e)| *e != 0));
        acc.sort_by(|a, b| a.0.cmp(&b.0));
        Monomial(acc)
    }

    /// Rational content: gcd of numerators over lcm of denominators, with
    /// the sign of the leading coefficient.
    pub fn content(&self) -> Q {
        use num_integer::Integer;
        let mut num = BigInt::zero();
        let mut den = BigInt::one();
        for c in self.terms.values() {
            num = num.gcd(c.numer());
            den = den.lcm(c.denom());
        }
        if num.is_zero() {
            return Q::one();
        }
        let mut out = Q::new(num, den);
        if let Some((_, lc)) = self.leading() {
            if lc.is_negative() {
                out = -out;
            }
        }
        out
    }

    pub fn depends_on(&self, s: &str) -> bool {
        self.terms.keys().any(|m| m.depends_on(s))
    }

    pub fn collect_symbols(&self, out: &mut std::collections::BTreeSet<String>) {
        for m in self.terms.keys() {
            for (v, _) in &m.0 {
                v.collect_symbols(out);
            }
        }
    }

    pub fn vars(&self) -> std::collections::BTreeSet<Var> {
        self.terms
            .keys()
            .flat_map(|m| m.0.iter().map(|(v, _)| v.clone()))
            .collect()
    }

    /// Splits `self = a + b*s` for a radical atom `s` (after reduction).
    pub fn split_radical(&self, s: &Var) -> (Poly, Poly) {
        let mut a = Poly::zero();
        let mut b = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(s);
            if e == 0 {
                a.add_term(m.clone(), c.clone());
            } else {
                let rest = Monomial(m.0.iter().filter(|(v, _)| v != s).cloned().collect());
                debug_assert_eq!(e, 1);
                b.add_term(rest, c.clone());
            }
        }
        (a, b)
    }

    pub fn size(&self) -> usize {
        self.terms.len()
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", super::rf::RatFunc::from_poly(self.clone()).to_expr())
    }
}
