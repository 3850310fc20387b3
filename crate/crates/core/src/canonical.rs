//! Bracket engines: the canonical Poisson bracket on SR phase space and a
//! structure-table bracket over abstract generators.
//!
//! All brackets are Poisson-side values; a commutator `[A, B] = i C` is
//! stored and computed as `{A, B} = C`.

use std::collections::{BTreeMap, BTreeSet};

use crate::expr::{expand_squares, parse_with, Expr, RatFunc, Registry, Var};
use crate::{Error, Result};

/// Diagonal Minkowski metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MetricSignature {
    pub diag: [i64; 4],
}

impl MetricSignature {
    pub const MOSTLY_PLUS: MetricSignature = MetricSignature { diag: [-1, 1, 1, 1] };

    pub fn eta(&self, mu: usize, nu: usize) -> i64 {
        if mu == nu {
            self.diag[mu]
        } else {
            0
        }
    }
}

impl Default for MetricSignature {
    fn default() -> Self {
        MetricSignature::MOSTLY_PLUS
    }
}

/// `sum_mu eta_mumu (da/dx_mu db/dp_mu - db/dx_mu da/dp_mu)`.
pub fn poisson(a: &RatFunc, b: &RatFunc) -> Result<RatFunc> {
    let a = expand_squares(a)?;
    let b = expand_squares(b)?;
    let eta = MetricSignature::MOSTLY_PLUS;
    let mut acc = RatFunc::zero();
    for mu in 0..4 {
        let (x, p) = (format!("x{mu}"), format!("p{mu}"));
        let (ax, ap) = (a.diff(&x), a.diff(&p));
        let (bx, bp) = (b.diff(&x), b.diff(&p));
        let term = ax.mul(&bp).sub(&bx.mul(&ap));
        if term.is_zero() {
            continue;
        }
        acc = acc.add(&term.scale(&crate::expr::q(eta.eta(mu, mu))));
    }
    Ok(acc)
}

pub fn poisson_expr(a: &Expr, b: &Expr) -> Result<Expr> {
    Ok(poisson(&a.to_rf()?, &b.to_rf()?)?.to_expr())
}

/// One claimed bracket `{left, right} = rhs`.
#[derive(Clone, Debug)]
pub struct Relation {
    pub left: String,
    pub right: String,
    pub rhs: Expr,
    pub tag: String,
}

/// Claimed brackets among named generators. Lookups are antisymmetric; each
/// unordered pair is stored once.
#[derive(Clone, Debug)]
pub struct RelationTable {
    pub name: String,
    pub generators: Vec<String>,
    pub relations: Vec<Relation>,
    /// Stored values are the commutators with the overall `i` removed.
    pub i_stripped: bool,
    index: BTreeMap<(String, String), (usize, bool)>,
    descriptions: BTreeMap<String, String>,
}

pub const PARAMETERS: [&str; 3] = ["kappa", "kappabar", "m"];

impl RelationTable {
    pub fn new(name: &str, generators: &[String]) -> Self {
        RelationTable {
            name: name.to_string(),
            generators: generators.to_vec(),
            relations: Vec::new(),
            i_stripped: true,
            index: BTreeMap::new(),
            descriptions: BTreeMap::new(),
        }
    }

    fn key(&self, a: &str, b: &str) -> ((String, String), bool) {
        let pos = |g: &str| self.generators.iter().position(|x| x == g).unwrap_or(usize::MAX);
        if (pos(a), a) <= (pos(b), b) {
            ((a.to_string(), b.to_string()), false)
        } else {
            ((b.to_string(), a.to_string()), true)
        }
    }

    /// Parser registry for right-hand sides: generators, parameters and the
    /// squared-vector shorthands of the table's sectors.
    pub fn registry(&self) -> Registry {
        let mut reg = Registry::default();
        for g in &self.generators {
            reg.add_symbol(g);
        }
        for (name, prefix, suffix) in [("Psq", "P", ""), ("Xsq", "X", ""), ("Psqbar", "P", "bar"), ("Xsqbar", "X", "bar")] {
            let comps: Vec<String> = (1..=3).map(|i| format!("{prefix}{i}{suffix}")).collect();
            if comps.iter().all(|c| self.generators.contains(c)) {
                let e = Expr::Add(comps.iter().map(|c| Expr::sym(c).pow(2)).collect());
                reg.add_sugar(name, e);
            }
        }
        reg
    }

    pub fn insert(&mut self, left: &str, right: &str, rhs: Expr, tag: &str) -> Result<()> {
        for g in [left, right] {
            if !self.generators.iter().any(|x| x == g) {
                return Err(Error::MissingGenerator(g.to_string()));
            }
        }
        for s in rhs.symbols() {
            if !self.generators.contains(&s) && !PARAMETERS.contains(&s.as_str()) {
                return Err(Error::UndeclaredSymbol(s));
            }
        }
        let (k, flipped) = self.key(left, right);
        if let Some(&(i, f)) = self.index.get(&k) {
            let old = if f == flipped {
                self.relations[i].rhs.clone()
            } else {
                -self.relations[i].rhs.clone()
            };
            if old.to_rf()?.sub(&rhs.to_rf()?).is_zero() {
                return Ok(());
            }
            return Err(Error::ConflictingRelation(left.to_string(), right.to_string()));
        }
        self.index.insert(k, (self.relations.len(), flipped));
        self.relations.push(Relation {
            left: left.to_string(),
            right: right.to_string(),
            rhs,
            tag: tag.to_string(),
        });
        Ok(())
    }

    /// Parses `rhs` against the table registry and inserts it.
    pub fn add(&mut self, left: &str, right: &str, rhs: &str, tag: &str) -> Result<()> {
        let e = parse_with(rhs, &self.registry())?;
        self.insert(left, right, e, tag)
    }

    /// `{a, b}` as declared; reversed order negates, equal names give zero.
    pub fn get(&self, a: &str, b: &str) -> Option<Expr> {
        if a == b {
            return Some(Expr::zero());
        }
        let (k, flipped) = self.key(a, b);
        let &(i, f) = self.index.get(&k)?;
        let rhs = self.relations[i].rhs.clone();
        Some(if f == flipped { rhs } else { -rhs })
    }

    /// Schematic text for all relations sharing `tag`.
    pub fn describe(&mut self, tag: &str, text: &str) {
        self.descriptions.insert(tag.to_string(), text.to_string());
    }

    /// Relations grouped by tag in first-appearance order, with the
    /// schematic description (or the single relation's text).
    pub fn families(&self) -> Vec<(String, String, Vec<&Relation>)> {
        let mut out: Vec<(String, String, Vec<&Relation>)> = Vec::new();
        for r in &self.relations {
            match out.iter_mut().find(|(t, _, _)| *t == r.tag) {
                Some(f) => f.2.push(r),
                None => out.push((r.tag.clone(), String::new(), vec![r])),
            }
        }
        for f in &mut out {
            f.1 = match self.descriptions.get(&f.0) {
                Some(d) => d.clone(),
                None => f.2.iter().map(|r| relation_text(r)).collect::<Vec<_>>().join("; "),
            };
        }
        out
    }

    /// Relations among `gens` only.
    pub fn restrict(&self, gens: &[String]) -> Result<RelationTable> {
        let mut t = RelationTable::new(&self.name, gens);
        t.descriptions = self.descriptions.clone();
        for r in &self.relations {
            if gens.contains(&r.left) && gens.contains(&r.right) {
                t.insert(&r.left, &r.right, r.rhs.clone(), &r.tag)?;
            }
        }
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    /// Appends every relation of `other`.
    pub fn extend(&mut self, other: &RelationTable) -> Result<()> {
        for g in &other.generators {
            if !self.generators.contains(g) {
                self.generators.push(g.clone());
            }
        }
        for r in &other.relations {
            self.insert(&r.left, &r.right, r.rhs.clone(), &r.tag)?;
        }
        for (k, v) in &other.descriptions {
            self.descriptions.entry(k.clone()).or_insert_with(|| v.clone());
        }
        Ok(())
    }
}

/// Generator algebra given by a structure table: the bracket follows from
/// bilinearity, Leibniz and the chain rule.
#[derive(Clone, Debug)]
pub struct AbstractAlgebra {
    pub table: RelationTable,
    /// Generators declared to commute among themselves (functions of these
    /// are differentiated by the chain rule).
    pub commuting: Vec<String>,
    rules: BTreeMap<(String, String), RatFunc>,
}

impl AbstractAlgebra {
    pub fn new(table: RelationTable, commuting: &[String]) -> Result<Self> {
        let mut rules = BTreeMap::new();
        for a in &table.generators {
            for b in &table.generators {
                if let Some(e) = table.get(a, b) {
                    rules.insert((a.clone(), b.clone()), e.to_rf()?);
                }
            }
        }
        Ok(AbstractAlgebra {
            table,
            commuting: commuting.to_vec(),
            rules,
        })
    }

    pub fn generators(&self) -> &[String] {
        &self.table.generators
    }

    fn rule(&self, a: &str, b: &str) -> Result<&RatFunc> {
        self.rules
            .get(&(a.to_string(), b.to_string()))
            .ok_or_else(|| Error::MissingRelation(a.to_string(), b.to_string()))
    }

    fn generators_in(&self, r: &RatFunc) -> Vec<String> {
        let syms = r.symbols();
        self.table.generators.iter().filter(|g| syms.contains(*g)).cloned().collect()
    }

    /// Transcendental and abstract-function atoms may only depend on
    /// mutually commuting generators.
    fn check_atoms(&self, r: &RatFunc) -> Result<()> {
        for atom in r.atoms() {
            if matches!(atom, Var::Sym(_)) {
                continue;
            }
            let mut inner = BTreeSet::new();
            atom.collect_symbols(&mut inner);
            let gens: Vec<&String> = self.table.generators.iter().filter(|g| inner.contains(*g)).collect();
            for (i, a) in gens.iter().enumerate() {
                for b in &gens[i + 1..] {
                    if !self.rule(a, b)?.is_zero() {
                        return Err(Error::NonCommuting(a.to_string(), b.to_string()));
                    }
                }
            }
        }
        Ok(())
    }
}

/// `{a, b} = sum_{g,h} da/dg db/dh {g, h}` over the table's generators.
pub fn table_bracket(alg: &AbstractAlgebra, a: &RatFunc, b: &RatFunc) -> Result<RatFunc> {
    alg.check_atoms(a)?;
    alg.check_atoms(b)?;
    let ga = alg.generators_in(a);
    let gb = alg.generators_in(b);
    let db: Vec<(String, RatFunc)> = gb.iter().map(|h| (h.clone(), b.diff(h))).collect();
    let mut acc = RatFunc::zero();
    for g in &ga {
        let da = a.diff(g);
        if da.is_zero() {
            continue;
        }
        for (h, dbh) in &db {
            if dbh.is_zero() || g == h {
                continue;
            }
            let t = alg.rule(g, h)?;
            if t.is_zero() {
                continue;
            }
            acc = acc.add(&da.mul(dbh).mul(t));
        }
    }
    Ok(acc)
}

/// Which bracket a computation uses.
#[derive(Clone, Copy)]
pub enum Engine<'a> {
    Poisson,
    Table(&'a AbstractAlgebra),
}

impl Engine<'_> {
    pub fn bracket(&self, a: &RatFunc, b: &RatFunc) -> Result<RatFunc> {
        match self {
            Engine::Poisson => poisson(a, b),
            Engine::Table(alg) => table_bracket(alg, a, b),
        }
    }
}

/// `{a,{b,c}} + {b,{c,a}} + {c,{a,b}}`.
pub fn jacobiator(engine: Engine<'_>, a: &RatFunc, b: &RatFunc, c: &RatFunc) -> Result<RatFunc> {
    let t1 = engine.bracket(a, &engine.bracket(b, c)?)?;
    let t2 = engine.bracket(b, &engine.bracket(c, a)?)?;
    let t3 = engine.bracket(c, &engine.bracket(a, b)?)?;
    Ok(t1.add(&t2).add(&t3))
}

/// Jacobiators of all distinct unordered triples, with the inner brackets
/// of each pair computed once. Returns `(names, residual)` per triple.
pub fn jacobi_all(engine: Engine<'_>, gens: &[(String, RatFunc)]) -> Result<Vec<([String; 3], RatFunc)>> {
    use rayon::prelude::*;
    let n = gens.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let inner: Vec<RatFunc> = pairs
        .par_iter()
        .map(|&(i, j)| engine.bracket(&gens[i].1, &gens[j].1))
        .collect::<Result<_>>()?;
    let pair_index: BTreeMap<(usize, usize), usize> = pairs.iter().enumerate().map(|(k, p)| (*p, k)).collect();
    let br = |i: usize, j: usize| -> RatFunc {
        if i < j {
            inner[pair_index[&(i, j)]].clone()
        } else {
            inner[pair_index[&(j, i)]].neg()
        }
    };
    let triples: Vec<(usize, usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).flat_map(move |j| (j + 1..n).map(move |k| (i, j, k))))
        .collect();
    triples
        .par_iter()
        .map(|&(i, j, k)| {
            let t1 = engine.bracket(&gens[i].1, &br(j, k))?;
            let t2 = engine.bracket(&gens[j].1, &br(k, i))?;
            let t3 = engine.bracket(&gens[k].1, &br(i, j))?;
            Ok((
                [gens[i].0.clone(), gens[j].0.clone(), gens[k].0.clone()],
                t1.add(&t2).add(&t3),
            ))
        })
        .collect()
}

/// Substitutes generator realizations into a table expression.
pub fn realize(e: &Expr, realizations: &BTreeMap<String, RatFunc>) -> Result<RatFunc> {
    let r = e.to_rf()?;
    let mut map = BTreeMap::new();
    for s in r.symbols() {
        if let Some(v) = realizations.get(&s) {
            map.insert(s, v.clone());
        }
    }
    Ok(r.subst(&map)?)
}

/// Poisson bracket of the realized generators versus the realized claimed
/// right-hand side, per table entry: `(relation, lhs, rhs)`.
pub fn realize_table(
    realizations: &BTreeMap<String, RatFunc>,
    table: &RelationTable,
) -> Result<Vec<(Relation, RatFunc, RatFunc)>> {
    use rayon::prelude::*;
    table
        .relations
        .par_iter()
        .map(|rel| {
            let a = realizations
                .get(&rel.left)
                .ok_or_else(|| Error::MissingGenerator(rel.left.clone()))?;
            let b = realizations
                .get(&rel.right)
                .ok_or_else(|| Error::MissingGenerator(rel.right.clone()))?;
            let lhs = poisson(a, b)?;
            let rhs = realize(&rel.rhs, realizations)?;
            Ok((rel.clone(), lhs, rhs))
        })
        .collect()
}

/// Human-readable `{A, B} = rhs`.
pub fn relation_text(rel: &Relation) -> String {
    format!("{{{}, {}}} = {}", rel.left, rel.right, rel.rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn rf(s: &str) -> RatFunc {
        parse(s).unwrap().to_rf().unwrap()
    }

    #[test]
    fn canonical_pairs_follow_the_metric() {
        for mu in 0..4 {
            for nu in 0..4 {
                let b = poisson(&rf(&format!("x{mu}")), &rf(&format!("p{nu}"))).unwrap();
                let want = if mu != nu { 0 } else if mu == 0 { -1 } else { 1 };
                assert_eq!(b, RatFunc::int(want), "{{x{mu}, p{nu}}}");
            }
        }
    }

    #[test]
    fn lorentz_signs() {
        assert_eq!(poisson(&rf("m1"), &rf("m2")).unwrap(), rf("m3"));
        assert_eq!(poisson(&rf("n1"), &rf("n2")).unwrap(), rf("-m3"));
        assert_eq!(poisson(&rf("n1"), &rf("x0")).unwrap(), rf("x1"));
        assert!(poisson(&rf("x1"), &rf("x2")).unwrap().is_zero());
    }

    #[test]
    fn table_lookup_is_antisymmetric_and_rejects_conflicts() {
        let gens: Vec<String> = ["A", "B"].iter().map(|s| s.to_string()).collect();
        let mut t = RelationTable::new("t", &gens);
        t.add("B", "A", "A", "x").unwrap();
        assert_eq!(t.get("A", "B").unwrap().to_rf().unwrap(), rf("-1").mul(&RatFunc::sym("A")));
        t.add("A", "B", "-A", "x").unwrap();
        assert!(matches!(t.add("A", "B", "A", "x"), Err(Error::ConflictingRelation(..))));
        assert!(matches!(t.add("A", "C", "A", "x"), Err(Error::MissingGenerator(_))));
        assert!(matches!(t.add("A", "B", "B + x0", "x"), Err(Error::UndeclaredSymbol(_))));
    }

    #[test]
    fn table_engine_rejects_mixed_transcendental_arguments() {
        let gens: Vec<String> = ["A", "B"].iter().map(|s| s.to_string()).collect();
        let mut t = RelationTable::new("t", &gens);
        t.add("A", "B", "B", "x").unwrap();
        let alg = AbstractAlgebra::new(t, &[]).unwrap();
        let e = RatFunc::ln(&rf("x0").mul(&RatFunc::sym("A")).add(&RatFunc::sym("B"))).unwrap();
        assert!(matches!(table_bracket(&alg, &e, &RatFunc::sym("A")), Err(Error::NonCommuting(..))));
        let ok = RatFunc::exp(&RatFunc::sym("A")).unwrap();
        let b = table_bracket(&alg, &ok, &RatFunc::sym("B")).unwrap();
        assert_eq!(b, ok.mul(&RatFunc::sym("B")));
    }
}
