//! Co-algebra layer: coproducts on commutative generator sectors,
//! coassociativity and homomorphism checks, twist dualization and the
//! Heisenberg-double cross relations.
//!
//! A sector is commutative as an algebra of its own generators, so its
//! n-fold tensor power is modelled as functions of n labelled copies of the
//! generators (`P0@1`, `P0@2`, ...). The coproduct is then substitution of
//! each generator by its image, which makes Δ multiplicative by
//! construction and gives `Δ(exp u) = exp(Δu)`.

use std::collections::BTreeMap;
use std::fmt;

use crate::canonical::{table_bracket, AbstractAlgebra, RelationTable};
use crate::expr::{parse_with, Expr, Poly, RatFunc, Registry, Var, Q};
use crate::{Error, Result};

pub fn leg(g: &str, k: usize) -> String {
    format!("{g}@{k}")
}

fn leg_of(sym: &str) -> Option<(&str, usize)> {
    let (g, k) = sym.rsplit_once('@')?;
    Some((g, k.parse().ok()?))
}

/// Element of the n-fold tensor power of a sector.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorExpr {
    pub legs: usize,
    pub value: RatFunc,
}

impl TensorExpr {
    /// `e` placed in leg `k` of an `n`-leg tensor.
    pub fn in_leg(e: &RatFunc, sector: &[String], k: usize, n: usize) -> Result<TensorExpr> {
        let map = sector.iter().map(|g| (g.clone(), RatFunc::sym(&leg(g, k)))).collect();
        Ok(TensorExpr {
            legs: n,
            value: e.subst(&map)?,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn sub(&self, o: &TensorExpr) -> TensorExpr {
        TensorExpr {
            legs: self.legs.max(o.legs),
            value: self.value.sub(&o.value),
        }
    }

    /// Renames legs by `f` (old index -> new index).
    pub fn relabel(&self, f: &dyn Fn(usize) -> usize, legs: usize) -> Result<TensorExpr> {
        let mut map = BTreeMap::new();
        for s in self.value.symbols() {
            if let Some((g, k)) = leg_of(&s) {
                map.insert(s.clone(), RatFunc::sym(&leg(g, f(k))));
            }
        }
        Ok(TensorExpr {
            legs,
            value: self.value.subst(&map)?,
        })
    }
}

fn atom_leg(v: &Var) -> Option<usize> {
    let mut syms = std::collections::BTreeSet::new();
    v.collect_symbols(&mut syms);
    let mut found = None;
    for s in &syms {
        if let Some((_, k)) = leg_of(s) {
            match found {
                None => found = Some(k),
                Some(j) if j == k => {}
                Some(_) => return None,
            }
        }
    }
    found.or(Some(0))
}

fn strip_legs(r: &RatFunc) -> RatFunc {
    let mut map = BTreeMap::new();
    for s in r.symbols() {
        if let Some((g, _)) = leg_of(&s) {
            map.insert(s.clone(), RatFunc::sym(g));
        }
    }
    r.subst(&map).unwrap_or_else(|_| r.clone())
}

impl fmt::Display for TensorExpr {
    /// Sum of `coefficient * (leg1)(x)(leg2)...`; atoms that mix legs stay
    /// in the coefficient with their labels.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.value.is_zero() {
            return write!(f, "0");
        }
        let den = RatFunc::build(Poly::one(), self.value.denom_factors().iter().map(|(p, e)| (p.clone(), *e)).collect())
            .unwrap_or_else(|_| RatFunc::one());
        let mut parts = Vec::new();
        for (m, c) in &self.value.numer().terms {
            let mut coef = RatFunc::constant(c.clone()).mul(&den);
            let mut legs: Vec<RatFunc> = vec![RatFunc::one(); self.legs];
            for (v, e) in &m.0 {
                let factor = RatFunc::from_poly(Poly::term(crate::expr::Monomial::var(v.clone(), *e), Q::from_integer(1.into())));
                match atom_leg(v) {
                    Some(k) if k >= 1 && k <= self.legs => legs[k - 1] = legs[k - 1].mul(&strip_legs(&factor)),
                    _ => coef = coef.mul(&factor),
                }
            }
            let body = legs.iter().map(|l| format!("({l})")).collect::<Vec<_>>().join("(x)");
            if coef.is_one() {
                parts.push(body);
            } else {
                parts.push(format!("({coef})*{body}"));
            }
        }
        write!(f, "{}", parts.join(" + "))
    }
}

/// Exponential-twist data: `Δ(Y_i) = Y_i⊗1 + exp(λ Y_0)⊗Y_i`, `Y_0` primitive.
#[derive(Clone, Debug, PartialEq)]
pub struct Twist {
    pub base: String,
    pub lambda: RatFunc,
}

#[derive(Clone, Debug)]
pub struct Coproduct {
    pub name: String,
    /// Generators of the sector; the first one is the twist base.
    pub sector: Vec<String>,
    images: BTreeMap<String, RatFunc>,
    pub twist: Option<Twist>,
}

impl Coproduct {
    pub fn primitive(name: &str, sector: &[String]) -> Coproduct {
        let images = sector
            .iter()
            .map(|g| (g.clone(), RatFunc::sym(&leg(g, 1)).add(&RatFunc::sym(&leg(g, 2)))))
            .collect();
        Coproduct {
            name: name.to_string(),
            sector: sector.to_vec(),
            images,
            twist: Some(Twist {
                base: sector[0].clone(),
                lambda: RatFunc::zero(),
            }),
        }
    }

    /// `Δ(Y_0)` primitive, `Δ(Y_i) = Y_i⊗1 + exp(λ Y_0)⊗Y_i`.
    pub fn exponential_twist(name: &str, sector: &[String], lambda: RatFunc) -> Result<Coproduct> {
        let mut c = Coproduct::primitive(name, sector);
        let base = sector[0].clone();
        let e = RatFunc::exp(&lambda.mul(&RatFunc::sym(&leg(&base, 1))))?;
        for g in &sector[1..] {
            let img = RatFunc::sym(&leg(g, 1)).add(&e.mul(&RatFunc::sym(&leg(g, 2))));
            c.images.insert(g.clone(), img);
        }
        c.twist = Some(Twist { base, lambda });
        Ok(c)
    }

    /// Arbitrary images (two-leg functions of the labelled generators).
    pub fn from_images(name: &str, sector: &[String], images: BTreeMap<String, RatFunc>) -> Result<Coproduct> {
        for g in sector {
            if !images.contains_key(g) {
                return Err(Error::MissingCoproduct(g.clone()));
            }
        }
        let mut c = Coproduct {
            name: name.to_string(),
            sector: sector.to_vec(),
            images,
            twist: None,
        };
        c.twist = c.detect_twist();
        Ok(c)
    }

    pub fn image(&self, g: &str) -> Option<&RatFunc> {
        self.images.get(g)
    }

    pub fn is_primitive(&self) -> bool {
        self.sector
            .iter()
            .all(|g| self.images[g] == RatFunc::sym(&leg(g, 1)).add(&RatFunc::sym(&leg(g, 2))))
    }

    /// Recognizes the exponential-twist shape and extracts λ.
    fn detect_twist(&self) -> Option<Twist> {
        if self.is_primitive() {
            return Some(Twist {
                base: self.sector[0].clone(),
                lambda: RatFunc::zero(),
            });
        }
        let base = &self.sector[0];
        let b1 = RatFunc::sym(&leg(base, 1));
        if self.images[base] != b1.add(&RatFunc::sym(&leg(base, 2))) {
            return None;
        }
        let g = &self.sector[1];
        let rest = self.images[g].sub(&RatFunc::sym(&leg(g, 1)));
        let e = rest.div(&RatFunc::sym(&leg(g, 2))).ok()?;
        // e = exp(λ b1): λ = d e / d b1 / e, constant in the generators.
        let lambda = e.diff(&leg(base, 1)).div(&e).ok()?;
        if lambda.symbols().iter().any(|s| leg_of(s).is_some()) {
            return None;
        }
        let candidate = Coproduct::exponential_twist(&self.name, &self.sector, lambda.clone()).ok()?;
        if self.sector.iter().all(|g| candidate.images[g] == self.images[g]) {
            Some(Twist {
                base: base.clone(),
                lambda,
            })
        } else {
            None
        }
    }

    /// Parses `coproduct` lines: `G = G(x)1 + 1(x)G` or
    /// `G = G(x)1 + exp(<coef>*G0)(x)G`.
    pub fn from_lines(name: &str, sector: &[String], lines: &[(String, String)]) -> Result<Coproduct> {
        let mut reg = Registry::default();
        for g in sector {
            reg.add_symbol(g);
        }
        let mut images = BTreeMap::new();
        for (g, rhs) in lines {
            if !sector.contains(g) {
                return Err(Error::MissingGenerator(g.clone()));
            }
            let mut img = RatFunc::zero();
            for term in split_top_level(rhs, '+') {
                let (l, r) = term
                    .split_once("(x)")
                    .ok_or_else(|| Error::NotTwist(format!("term '{term}' has no (x) separator")))?;
                let l = TensorExpr::in_leg(&parse_with(l.trim(), &reg)?.to_rf()?, sector, 1, 2)?;
                let r = TensorExpr::in_leg(&parse_with(r.trim(), &reg)?.to_rf()?, sector, 2, 2)?;
                img = img.add(&l.value.mul(&r.value));
            }
            images.insert(g.clone(), img);
        }
        Coproduct::from_images(name, sector, images)
    }
}

fn split_top_level(s: &str, sep: char) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ => {}
        }
        if c == sep && depth == 0 {
            out.push(std::mem::take(&mut cur));
        } else {
            cur.push(c);
        }
    }
    out.push(cur);
    out.into_iter().map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect()
}

/// Δ extended as an algebra map.
pub fn apply_coproduct(c: &Coproduct, e: &RatFunc) -> Result<TensorExpr> {
    let mut map = BTreeMap::new();
    for s in e.symbols() {
        if let Some(img) = c.images.get(&s) {
            map.insert(s, img.clone());
        } else if !crate::canonical::PARAMETERS.contains(&s.as_str()) {
            return Err(Error::MissingCoproduct(s));
        }
    }
    Ok(TensorExpr {
        legs: 2,
        value: e.subst(&map)?,
    })
}

/// Applies Δ to leg `k` of an n-leg tensor, producing n+1 legs.
fn delta_on_leg(c: &Coproduct, t: &TensorExpr, k: usize) -> Result<TensorExpr> {
    let shift = |j: usize| if j > k { j + 1 } else { j };
    let mut map = BTreeMap::new();
    for s in t.value.symbols() {
        let Some((g, j)) = leg_of(&s) else { continue };
        let img = if j == k {
            let d = TensorExpr {
                legs: 2,
                value: c.images.get(g).ok_or_else(|| Error::MissingCoproduct(g.to_string()))?.clone(),
            };
            d.relabel(&|i| k + i - 1, 0)?.value
        } else {
            RatFunc::sym(&leg(g, shift(j)))
        };
        map.insert(s.clone(), img);
    }
    Ok(TensorExpr {
        legs: t.legs + 1,
        value: t.value.subst(&map)?,
    })
}

/// `(Δ⊗id)Δ(g) - (id⊗Δ)Δ(g)` per generator; all zero iff coassociative.
pub fn check_coassociativity(c: &Coproduct) -> Result<Vec<(String, TensorExpr)>> {
    c.sector
        .iter()
        .map(|g| {
            let d = apply_coproduct(c, &RatFunc::sym(g))?;
            let left = delta_on_leg(c, &d, 1)?;
            let right = delta_on_leg(c, &d, 2)?;
            Ok((g.clone(), left.sub(&right)))
        })
        .collect()
}

/// Setting every generator of one leg to zero must return the generator on
/// the other leg. Residuals per generator and leg.
pub fn check_counit(c: &Coproduct) -> Result<Vec<(String, RatFunc)>> {
    let mut out = Vec::new();
    for g in &c.sector {
        let img = &c.images[g];
        for (kill, keep) in [(1, 2), (2, 1)] {
            let map = c.sector.iter().map(|h| (leg(h, kill), RatFunc::zero())).collect();
            let r = img.subst(&map)?.sub(&RatFunc::sym(&leg(g, keep)));
            out.push((format!("{g} (leg {kill} -> 0)"), r));
        }
    }
    Ok(out)
}

/// Leg-wise algebra on `n` copies of a sector table; different legs commute.
fn tensor_algebra(table: &RelationTable, sector: &[String], n: usize) -> Result<AbstractAlgebra> {
    let gens: Vec<String> = (1..=n).flat_map(|k| sector.iter().map(move |g| leg(g, k))).collect();
    let mut t = RelationTable::new(&format!("{}^{n}", table.name), &gens);
    for (i, a) in sector.iter().enumerate() {
        for b in &sector[i + 1..] {
            let rhs = table.get(a, b).ok_or_else(|| Error::MissingRelation(a.clone(), b.clone()))?;
            for k in 1..=n {
                let moved = TensorExpr::in_leg(&rhs.to_rf()?, sector, k, n)?.value.to_expr();
                t.insert(&leg(a, k), &leg(b, k), moved, "")?;
            }
            for k in 1..=n {
                for j in 1..=n {
                    if j != k {
                        t.insert(&leg(a, k), &leg(b, j), Expr::zero(), "")?;
                    }
                }
            }
        }
        for k in 1..=n {
            for j in k + 1..=n {
                t.insert(&leg(a, k), &leg(a, j), Expr::zero(), "")?;
            }
        }
    }
    AbstractAlgebra::new(t, &[])
}

/// `Δ({a,b}) - {Δa, Δb}` for every sector relation of `table`.
pub fn check_homomorphism(c: &Coproduct, table: &RelationTable) -> Result<Vec<(String, TensorExpr)>> {
    let alg = tensor_algebra(table, &c.sector, 2)?;
    let mut out = Vec::new();
    for (i, a) in c.sector.iter().enumerate() {
        for b in &c.sector[i + 1..] {
            let rhs = table.get(a, b).ok_or_else(|| Error::MissingRelation(a.clone(), b.clone()))?;
            let lhs = apply_coproduct(c, &rhs.to_rf()?)?;
            let da = apply_coproduct(c, &RatFunc::sym(a))?;
            let db = apply_coproduct(c, &RatFunc::sym(b))?;
            let br = table_bracket(&alg, &da.value, &db.value)?;
            out.push((
                format!("{{{a}, {b}}} = {rhs}"),
                lhs.sub(&TensorExpr { legs: 2, value: br }),
            ));
        }
    }
    Ok(out)
}

/// Duality pairing between a primitive sector `Y` and a twisted sector `Z`,
/// normalised to the canonical bracket: `<Y, Z> = {Y, Z}` of the SR pair.
#[derive(Clone, Debug)]
pub struct Pairing {
    pub primitive: Vec<String>,
    pub twisted: Vec<String>,
    values: BTreeMap<(String, String), Q>,
}

impl Pairing {
    /// `<Y_mu, Z_nu> = eta_mu_nu` if `Y` are coordinates, `-eta_mu_nu` if
    /// `Y` are momenta.
    pub fn canonical(primitive: &[String], twisted: &[String], primitive_is_coordinate: bool) -> Pairing {
        let sign = if primitive_is_coordinate { 1 } else { -1 };
        let eta = crate::canonical::MetricSignature::MOSTLY_PLUS;
        let mut values = BTreeMap::new();
        for (mu, y) in primitive.iter().enumerate() {
            for (nu, z) in twisted.iter().enumerate() {
                values.insert((y.clone(), z.clone()), Q::from_integer((sign * eta.eta(mu, nu)).into()));
            }
        }
        Pairing {
            primitive: primitive.to_vec(),
            twisted: twisted.to_vec(),
            values,
        }
    }

    pub fn value(&self, y: &str, z: &str) -> Q {
        self.values
            .get(&(y.to_string(), z.to_string()))
            .cloned()
            .unwrap_or_else(|| Q::from_integer(0.into()))
    }

    /// `<Y, phi> = sum_rho <Y, Z_rho> dphi/dZ_rho at Z = 0` on leg 1 of a
    /// two-leg element, leaving leg 2.
    fn contract_leg1(&self, y: &str, t: &RatFunc) -> Result<RatFunc> {
        let zero: BTreeMap<String, RatFunc> = self.twisted.iter().map(|z| (leg(z, 1), RatFunc::zero())).collect();
        let mut acc = RatFunc::zero();
        for z in &self.twisted {
            let w = self.value(y, z);
            if w == Q::from_integer(0.into()) {
                continue;
            }
            acc = acc.add(&t.diff(&leg(z, 1)).subst(&zero)?.scale(&w));
        }
        Ok(strip_legs(&acc))
    }
}

/// Cross brackets `{Y_mu, Z_nu}` of the Heisenberg double: the primitive
/// sector pairs with the first leg of `Δ(Z_nu)`.
pub fn heisenberg_cross(mom: &Coproduct, pos: &Coproduct, pairing: &Pairing) -> Result<RelationTable> {
    let (prim, tw) = if pos.is_primitive() && pos.sector == pairing.primitive {
        (pos, mom)
    } else if mom.is_primitive() && mom.sector == pairing.primitive {
        (mom, pos)
    } else {
        return Err(Error::NotTwist("neither coproduct is primitive on the pairing's primitive sector".into()));
    };
    let mut gens = prim.sector.clone();
    gens.extend(tw.sector.iter().cloned());
    let mut t = RelationTable::new("heisenberg-cross", &gens);
    for y in &prim.sector {
        for z in &tw.sector {
            let img = apply_coproduct(tw, &RatFunc::sym(z))?;
            let v = pairing.contract_leg1(y, &img.value)?;
            t.insert(y, z, v.to_expr(), "cross")?;
        }
    }
    Ok(t)
}

/// Lie-type algebra of the primitive sector induced by a twist on the other
/// sector: `{Y_0, Y_i} = -λ <Y_0, Z_0> Y_i`, `{Y_i, Y_j} = 0`.
pub fn dualize_twist(c: &Coproduct, pairing: &Pairing) -> Result<RelationTable> {
    let tw = c
        .twist
        .as_ref()
        .ok_or_else(|| Error::NotTwist(format!("coproduct '{}'", c.name)))?;
    let ys = &pairing.primitive;
    let coef = tw.lambda.scale(&-pairing.value(&ys[0], &tw.base));
    let mut t = RelationTable::new("dualized", ys);
    for (i, a) in ys.iter().enumerate() {
        for b in &ys[i + 1..] {
            let rhs = if i == 0 {
                coef.mul(&RatFunc::sym(b)).to_expr()
            } else {
                Expr::zero()
            };
            t.insert(a, b, rhs, "dual")?;
        }
    }
    Ok(t)
}

/// Inverse of [`dualize_twist`]: the twist parameter whose dual algebra has
/// `{Y_0, Y_i} = c Y_i`.
pub fn twist_from_lie(c: &RatFunc, pairing: &Pairing, base: &str) -> Result<RatFunc> {
    let w = pairing.value(&pairing.primitive[0], base);
    Ok(c.scale(&(-w.recip())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn names(prefix: &str) -> Vec<String> {
        (0..4).map(|i| format!("{prefix}{i}")).collect()
    }

    fn kappa_twist() -> Coproduct {
        let lambda = parse("-1/kappa").unwrap().to_rf().unwrap();
        Coproduct::exponential_twist("dsr1-momentum", &names("P"), lambda).unwrap()
    }

    #[test]
    fn twist_image_of_spatial_momentum() {
        let c = kappa_twist();
        let d = apply_coproduct(&c, &RatFunc::sym("P1")).unwrap();
        let e = RatFunc::exp(&RatFunc::sym("P0@1").scale(&crate::expr::q2(-1, 1)).div(&RatFunc::sym("kappa")).unwrap()).unwrap();
        let want = RatFunc::sym("P1@1").add(&e.mul(&RatFunc::sym("P1@2")));
        assert_eq!(d.value, want);
        assert!(d.to_string().contains("(x)"));
    }

    #[test]
    fn twist_is_coassociative_and_corruption_is_not() {
        for (_, r) in check_coassociativity(&kappa_twist()).unwrap() {
            assert!(r.is_zero(), "{r}");
        }
        let lines: Vec<(String, String)> = (0..4)
            .map(|i| {
                let g = format!("P{i}");
                let rhs = if i == 0 {
                    "P0(x)1 + 1(x)P0".to_string()
                } else {
                    format!("{g}(x)1 + exp(-1/kappa^2*P0^2)(x){g}")
                };
                (g, rhs)
            })
            .collect();
        let bad = Coproduct::from_lines("bad", &names("P"), &lines).unwrap();
        assert!(bad.twist.is_none());
        let res = check_coassociativity(&bad).unwrap();
        assert!(res[0].1.is_zero());
        assert!(!res[1].1.is_zero());
    }

    #[test]
    fn parsed_twist_recovers_lambda() {
        let lines: Vec<(String, String)> = (0..4)
            .map(|i| {
                let g = format!("P{i}");
                let rhs = if i == 0 {
                    "P0(x)1 + 1(x)P0".to_string()
                } else {
                    format!("{g}(x)1 + exp(-1/kappa*P0)(x){g}")
                };
                (g, rhs)
            })
            .collect();
        let c = Coproduct::from_lines("x", &names("P"), &lines).unwrap();
        assert_eq!(c.twist.unwrap().lambda, parse("-1/kappa").unwrap().to_rf().unwrap());
    }

    #[test]
    fn counit_compatibility() {
        for (_, r) in check_counit(&kappa_twist()).unwrap() {
            assert!(r.is_zero());
        }
    }
}
