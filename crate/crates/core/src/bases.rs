//! Basis catalog: generator realizations over SR phase space, defining
//! functions, A/B/D derivation, the deformation constraint, and the claimed
//! relation tables each basis is checked against.

use std::collections::BTreeMap;

use crate::canonical::{realize, AbstractAlgebra, RelationTable};
use crate::expr::{parse_with, q, Center, EqualityMode, Expr, RatFunc, Registry};
use crate::hopf::Coproduct;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    /// Deformation lives in the momenta: f, g of (p0, psq).
    Momentum,
    /// Deformation lives in space-time: f, g of (x0, xsq).
    Spacetime,
}

impl Kind {
    pub fn parse(s: &str) -> Option<Kind> {
        match s {
            "momentum" => Some(Kind::Momentum),
            "spacetime" => Some(Kind::Spacetime),
            _ => None,
        }
    }

    /// `(s0, ssq)` of the SR side.
    pub fn small_vars(&self) -> (&'static str, &'static str) {
        match self {
            Kind::Momentum => ("p0", "psq"),
            Kind::Spacetime => ("x0", "xsq"),
        }
    }

    /// `(b0, bsq)` of the deformed side.
    pub fn big_vars(&self) -> (&'static str, &'static str) {
        match self {
            Kind::Momentum => ("P0", "Psq"),
            Kind::Spacetime => ("X0bar", "Xsqbar"),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Kind::Momentum => "momentum",
            Kind::Spacetime => "spacetime",
        }
    }
}

/// Generator names of a basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Names {
    pub rot: [String; 3],
    pub boost: [String; 3],
    pub mom: [String; 4],
    pub coord: [String; 4],
}

impl Names {
    fn with(m: &str, n: &str, p: &str, x: &str, suffix: &str) -> Names {
        Names {
            rot: std::array::from_fn(|i| format!("{m}{}{suffix}", i + 1)),
            boost: std::array::from_fn(|i| format!("{n}{}{suffix}", i + 1)),
            mom: std::array::from_fn(|i| format!("{p}{i}{suffix}")),
            coord: std::array::from_fn(|i| format!("{x}{i}{suffix}")),
        }
    }

    pub fn sr() -> Names {
        Names::with("m", "n", "p", "x", "")
    }

    pub fn kappa() -> Names {
        Names::with("M", "N", "P", "X", "")
    }

    pub fn dual() -> Names {
        Names::with("M", "N", "P", "X", "bar")
    }

    /// Rotations, boosts, momenta, coordinates.
    pub fn all(&self) -> Vec<String> {
        let mut v: Vec<String> = self.rot.to_vec();
        v.extend(self.boost.iter().cloned());
        v.extend(self.mom.iter().cloned());
        v.extend(self.coord.iter().cloned());
        v
    }

    pub fn lorentz(&self) -> Vec<String> {
        let mut v: Vec<String> = self.rot.to_vec();
        v.extend(self.boost.iter().cloned());
        v
    }

    /// The four-vector carrying the deformation for `kind`.
    pub fn deformed(&self, kind: Kind) -> &[String; 4] {
        match kind {
            Kind::Momentum => &self.mom,
            Kind::Spacetime => &self.coord,
        }
    }

    /// The other four-vector.
    pub fn partner(&self, kind: Kind) -> &[String; 4] {
        match kind {
            Kind::Momentum => &self.coord,
            Kind::Spacetime => &self.mom,
        }
    }
}

/// Registry for expressions in the given free variables (plus parameters).
pub fn scalar_registry(vars: &[&str]) -> Registry {
    let mut reg = Registry::default();
    for v in vars {
        reg.add_symbol(v);
    }
    reg
}

fn parse_in(text: &str, vars: &[&str]) -> Result<RatFunc> {
    Ok(parse_with(text, &scalar_registry(vars))?.to_rf()?)
}

/// Rejects symbols outside `vars` and the deformation parameters.
fn check_vars(what: &str, r: &RatFunc, vars: &[&str]) -> Result<()> {
    for s in r.symbols() {
        if !vars.contains(&s.as_str()) && !crate::canonical::PARAMETERS.contains(&s.as_str()) {
            return Err(Error::Config {
                line: 0,
                msg: format!("{what} may depend only on {} and parameters, found '{s}'", vars.join(", ")),
            });
        }
    }
    Ok(())
}

/// `f, g` map SR scalars to the deformed ones, `F, G` invert them:
/// `b0 = f(s0, ssq)`, `b_i = s_i g`, `s0 = F(b0, bsq)`, `s_i = b_i G`.
#[derive(Clone, Debug)]
pub struct DefiningFunctions {
    pub kind: Kind,
    pub f: RatFunc,
    pub g: RatFunc,
    pub big_f: RatFunc,
    pub big_g: RatFunc,
}

impl DefiningFunctions {
    pub fn parse(kind: Kind, f: &str, g: &str, big_f: &str, big_g: &str) -> Result<DefiningFunctions> {
        let (s0, ssq) = kind.small_vars();
        let (b0, bsq) = kind.big_vars();
        let small = [s0, ssq];
        let big = [b0, bsq];
        let df = DefiningFunctions {
            kind,
            f: parse_in(f, &small)?,
            g: parse_in(g, &small)?,
            big_f: parse_in(big_f, &big)?,
            big_g: parse_in(big_g, &big)?,
        };
        check_vars("f", &df.f, &small)?;
        check_vars("g", &df.g, &small)?;
        check_vars("F", &df.big_f, &big)?;
        check_vars("G", &df.big_g, &big)?;
        Ok(df)
    }

    pub fn identity(kind: Kind) -> DefiningFunctions {
        let (s0, _) = kind.small_vars();
        let (b0, _) = kind.big_vars();
        DefiningFunctions {
            kind,
            f: RatFunc::sym(s0),
            g: RatFunc::one(),
            big_f: RatFunc::sym(b0),
            big_g: RatFunc::one(),
        }
    }

    /// Deformed scalars in terms of the SR ones: `b0 -> f`, `bsq -> ssq g^2`.
    pub fn pullback(&self, e: &RatFunc) -> Result<RatFunc> {
        let (_, ssq) = self.kind.small_vars();
        let (b0, bsq) = self.kind.big_vars();
        let mut map = BTreeMap::new();
        map.insert(b0.to_string(), self.f.clone());
        map.insert(bsq.to_string(), RatFunc::sym(ssq).mul(&self.g.powi(2)?));
        Ok(e.subst(&map)?)
    }

    /// SR scalars in terms of the deformed ones: `s0 -> F`, `ssq -> bsq G^2`.
    pub fn pushforward(&self, e: &RatFunc) -> Result<RatFunc> {
        let (s0, ssq) = self.kind.small_vars();
        let (_, bsq) = self.kind.big_vars();
        let mut map = BTreeMap::new();
        map.insert(s0.to_string(), self.big_f.clone());
        map.insert(ssq.to_string(), RatFunc::sym(bsq).mul(&self.big_g.powi(2)?));
        Ok(e.subst(&map)?)
    }
}

/// Coefficients of the boost action `{N_i, V0} = D V_i`,
/// `{N_i, V_j} = delta_ij A + V_i V_j B`, in the deformed scalars.
#[derive(Clone, Debug, PartialEq)]
pub struct DeformationTriple {
    pub kind: Kind,
    pub a: RatFunc,
    pub b: RatFunc,
    pub d: RatFunc,
}

impl DeformationTriple {
    pub fn parse(kind: Kind, a: &str, b: &str, d: &str) -> Result<DeformationTriple> {
        let (b0, bsq) = kind.big_vars();
        let vars = [b0, bsq];
        let t = DeformationTriple {
            kind,
            a: parse_in(a, &vars)?,
            b: parse_in(b, &vars)?,
            d: parse_in(d, &vars)?,
        };
        for (n, r) in [("A", &t.a), ("B", &t.b), ("D", &t.d)] {
            check_vars(n, r, &vars)?;
        }
        Ok(t)
    }

    /// `(b0, 0, 1)`: the undeformed action.
    pub fn poincare(kind: Kind) -> DeformationTriple {
        DeformationTriple {
            kind,
            a: RatFunc::sym(kind.big_vars().0),
            b: RatFunc::zero(),
            d: RatFunc::one(),
        }
    }

    /// `(A, B, D)` with the scalars replaced by the components of `v`.
    pub fn as_generators(&self, v: &[String; 4]) -> Result<[RatFunc; 3]> {
        let (b0, bsq) = self.kind.big_vars();
        let sq = (1..4).fold(RatFunc::zero(), |acc, i| acc.add(&RatFunc::sym(&v[i]).mul(&RatFunc::sym(&v[i]))));
        let mut map = BTreeMap::new();
        map.insert(b0.to_string(), RatFunc::sym(&v[0]));
        map.insert(bsq.to_string(), sq);
        Ok([self.a.subst(&map)?, self.b.subst(&map)?, self.d.subst(&map)?])
    }
}

/// `dA/db0 D + 2 dA/dbsq (A + bsq B) - A B`; consistency requires exactly 1.
pub fn constraint_value(t: &DeformationTriple) -> Result<RatFunc> {
    let (b0, bsq) = t.kind.big_vars();
    let term1 = t.a.diff(b0).mul(&t.d);
    let term2 = t.a.diff(bsq).scale(&q(2)).mul(&t.a.add(&RatFunc::sym(bsq).mul(&t.b)));
    Ok(term1.add(&term2).sub(&t.a.mul(&t.b)))
}

/// Verdict of the deformation constraint with the constraint value.
pub fn check_deformation_constraint(t: &DeformationTriple) -> Result<(bool, RatFunc)> {
    let v = constraint_value(t)?;
    Ok((v.is_one(), v))
}

/// A, B, D from the defining functions, expressed in the deformed scalars:
/// `A = s0 g`, `B = G^2 (dg/ds0 + 2 s0 dg/dssq)`, `D = G (df/ds0 + 2 s0 df/dssq)`
/// with `s0 -> F`, `ssq -> bsq G^2`.
pub fn derive_abd(df: &DefiningFunctions) -> Result<DeformationTriple> {
    let (a, b, d) = derive_abd_sr(df)?;
    Ok(DeformationTriple {
        kind: df.kind,
        a: df.pushforward(&a)?,
        b: df.pushforward(&b)?,
        d: df.pushforward(&d)?,
    })
}

/// The same coefficients before the change of variables, as functions of
/// the SR scalars.
pub fn derive_abd_sr(df: &DefiningFunctions) -> Result<(RatFunc, RatFunc, RatFunc)> {
    let (s0, ssq) = df.kind.small_vars();
    let two_s0 = RatFunc::sym(s0).scale(&q(2));
    let big_g = df.g.inv()?;
    let a = RatFunc::sym(s0).mul(&df.g);
    let b = big_g
        .powi(2)?
        .mul(&df.g.diff(s0).add(&two_s0.mul(&df.g.diff(ssq))));
    let d = big_g.mul(&df.f.diff(s0).add(&two_s0.mul(&df.f.diff(ssq))));
    Ok((a, b, d))
}

/// `F(f, ssq g^2) - s0` and `G(f, ssq g^2) g - 1`.
pub fn inverse_residuals(df: &DefiningFunctions) -> Result<[(RatFunc, RatFunc); 2]> {
    let (s0, _) = df.kind.small_vars();
    Ok([
        (df.pullback(&df.big_f)?, RatFunc::sym(s0)),
        (df.pullback(&df.big_g)?.mul(&df.g), RatFunc::one()),
    ])
}

/// Inverse consistency under `mode`; returns the failing residual, if any.
pub fn check_inverses(df: &DefiningFunctions, mode: EqualityMode) -> Result<Option<RatFunc>> {
    let opts = crate::expr::EqualOptions::default();
    for (lhs, rhs) in inverse_residuals(df)? {
        let v = crate::expr::equal_rf(&lhs, &rhs, mode, &opts)?;
        if !v.pass {
            return Ok(Some(v.residual.unwrap_or_else(|| lhs.sub(&rhs))));
        }
    }
    Ok(None)
}

/// Which catalog a basis comes from; selects the claimed tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Sr,
    Dsr1,
    Dual,
    Custom,
}

/// Relation blocks a basis claims.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    Lorentz,
    Rotation,
    Boost,
    PhaseSpace,
    /// The deformed sector's own algebra (commuting momenta or coordinates).
    Sector,
}

#[derive(Clone, Debug)]
pub struct Basis {
    pub name: String,
    pub family: Family,
    pub kind: Kind,
    pub names: Names,
    pub functions: DefiningFunctions,
    /// Claimed boost-action coefficients.
    pub triple: DeformationTriple,
    /// `catalog`, `derived` or `override`.
    pub triple_source: String,
    /// Generator name -> expression over SR phase space.
    pub realizations: BTreeMap<String, RatFunc>,
    /// Shell-dependent identities are compared modulo the mass shell.
    pub shell: bool,
    /// Deformation parameter and where its undeformed limit sits.
    pub parameter: Option<(String, Center)>,
    /// Coproducts of the momentum and coordinate sectors.
    pub coproducts: Option<(Coproduct, Coproduct)>,
    /// Extra claimed relations from configuration.
    pub user_relations: Vec<RelationTable>,
}

/// Parses over SR phase space with `psq`/`xsq` written out.
pub fn sr_expr(text: &str) -> Result<RatFunc> {
    rf(text)
}

fn rf(text: &str) -> Result<RatFunc> {
    Ok(crate::expr::expand_squares(&crate::expr::parse(text)?.to_rf()?)?)
}

fn sym(s: &str) -> Expr {
    Expr::sym(s)
}

/// `eps_ijk` for 1-based spatial indices: `(k, sign)`, `None` when `i == j`.
pub fn levi_civita(i: usize, j: usize) -> Option<(usize, i64)> {
    if i == j {
        return None;
    }
    let k = 6 - i - j;
    let sign = if (j + 3 - i) % 3 == 1 { 1 } else { -1 };
    Some((k, sign))
}

fn signed(sign: i64, e: Expr) -> Expr {
    if sign < 0 {
        -e
    } else {
        e
    }
}

/// `M1` -> `M_i`, `M1bar` -> `M_ibar`.
fn schematic(name: &str, idx: &str) -> String {
    match name.find(|c: char| c.is_ascii_digit()) {
        Some(p) => format!("{}_{idx}{}", &name[..p], &name[p + 1..]),
        None => name.to_string(),
    }
}

fn table(names: &Names) -> RelationTable {
    RelationTable::new("catalog", &names.all())
}

fn add_lorentz(t: &mut RelationTable, n: &Names) -> Result<()> {
    let (m, b) = (&n.rot, &n.boost);
    for i in 1..=3 {
        for j in 1..=3 {
            let e = levi_civita(i, j);
            if i < j {
                let (k, s) = e.unwrap();
                t.insert(&m[i - 1], &m[j - 1], signed(s, sym(&m[k - 1])), "Eq.1a")?;
            }
            let rhs = e.map_or(Expr::zero(), |(k, s)| signed(s, sym(&b[k - 1])));
            t.insert(&m[i - 1], &b[j - 1], rhs, "Eq.1b")?;
            if i < j {
                let (k, s) = e.unwrap();
                t.insert(&b[i - 1], &b[j - 1], signed(-s, sym(&m[k - 1])), "Eq.1c")?;
            }
        }
    }
    let (mi, mj, mk) = (schematic(&m[0], "i"), schematic(&m[0], "j"), schematic(&m[0], "k"));
    let (ni, nj, nk) = (schematic(&b[0], "i"), schematic(&b[0], "j"), schematic(&b[0], "k"));
    t.describe("Eq.1a", &format!("{{{mi}, {mj}}} = eps_ijk {mk}"));
    t.describe("Eq.1b", &format!("{{{mi}, {nj}}} = eps_ijk {nk}"));
    t.describe("Eq.1c", &format!("{{{ni}, {nj}}} = -eps_ijk {mk}"));
    Ok(())
}

/// `{M_i, V0} = 0`, `{M_i, V_j} = eps_ijk V_k`.
fn add_rotation(t: &mut RelationTable, n: &Names, v: &[String; 4], tags: (&str, &str)) -> Result<()> {
    for i in 1..=3 {
        t.insert(&n.rot[i - 1], &v[0], Expr::zero(), tags.0)?;
        for j in 1..=3 {
            let rhs = levi_civita(i, j).map_or(Expr::zero(), |(k, s)| signed(s, sym(&v[k])));
            t.insert(&n.rot[i - 1], &v[j], rhs, tags.1)?;
        }
    }
    let mi = schematic(&n.rot[0], "i");
    let (v0, vj, vk) = (&v[0], schematic(&v[1], "j"), schematic(&v[1], "k"));
    if tags.0 == tags.1 {
        t.describe(tags.0, &format!("{{{mi}, {v0}}} = 0; {{{mi}, {vj}}} = eps_ijk {vk}"));
    } else {
        t.describe(tags.0, &format!("{{{mi}, {v0}}} = 0"));
        t.describe(tags.1, &format!("{{{mi}, {vj}}} = eps_ijk {vk}"));
    }
    Ok(())
}

/// `{N_i, V0} = D V_i`, `{N_i, V_j} = delta_ij A + V_i V_j B`.
fn add_boost(t: &mut RelationTable, n: &Names, v: &[String; 4], triple: &DeformationTriple, tags: (&str, &str)) -> Result<()> {
    let [a, b, d] = triple.as_generators(v)?;
    let (a, b, d) = (a.to_expr(), b.to_expr(), d.to_expr());
    for i in 1..=3 {
        t.insert(&n.boost[i - 1], &v[0], (d.clone() * sym(&v[i])).normalize()?, tags.0)?;
        for j in 1..=3 {
            let mut rhs = sym(&v[i]) * sym(&v[j]) * b.clone();
            if i == j {
                rhs = a.clone() + rhs;
            }
            t.insert(&n.boost[i - 1], &v[j], rhs.normalize()?, tags.1)?;
        }
    }
    let ni = schematic(&n.boost[0], "i");
    let (v0, vi, vj) = (&v[0], schematic(&v[1], "i"), schematic(&v[1], "j"));
    let (s0, ssq) = triple.kind.big_vars();
    let show = |r: &RatFunc| r.to_string();
    t.describe(
        tags.0,
        &format!("{{{ni}, {v0}}} = D {vi}, D = {}  [{s0}, {ssq}]", show(&triple.d)),
    );
    t.describe(
        tags.1,
        &format!(
            "{{{ni}, {vj}}} = delta_ij A + {vi} {vj} B, A = {}, B = {}",
            show(&triple.a),
            show(&triple.b)
        ),
    );
    Ok(())
}

/// Vanishing brackets among the components of `v`.
fn add_commuting(t: &mut RelationTable, v: &[String], tag: &str) -> Result<()> {
    for (i, a) in v.iter().enumerate() {
        for b in &v[i + 1..] {
            t.insert(a, b, Expr::zero(), tag)?;
        }
    }
    t.describe(tag, &format!("{{{}, {}}} = 0", schematic(&v[0], "mu"), schematic(&v[0], "nu")));
    Ok(())
}

fn registry_for(n: &Names) -> Registry {
    table(n).registry()
}

fn gen_expr(text: &str, n: &Names) -> Result<Expr> {
    Ok(parse_with(text, &registry_for(n))?)
}

fn delta(i: usize, j: usize) -> i64 {
    i64::from(i == j)
}

/// `{x_mu, p_nu} = eta_mu_nu`, coordinates and momenta commuting.
fn add_sr_phase_space(t: &mut RelationTable, n: &Names) -> Result<()> {
    let eta = crate::canonical::MetricSignature::MOSTLY_PLUS;
    for mu in 0..4 {
        for nu in 0..4 {
            t.insert(&n.coord[mu], &n.mom[nu], Expr::int(eta.eta(mu, nu)), "Eq.2a")?;
        }
    }
    t.describe("Eq.2a", "{x_mu, p_nu} = eta_mu_nu");
    let mut xs: Vec<String> = n.coord.to_vec();
    xs.extend(n.mom.iter().cloned());
    for (i, a) in xs.iter().enumerate() {
        for b in &xs[i + 1..] {
            if n.coord.contains(a) == n.coord.contains(b) {
                t.insert(a, b, Expr::zero(), "Eq.2b")?;
            }
        }
    }
    t.describe("Eq.2b", "{x_mu, x_nu} = {p_mu, p_nu} = 0");
    Ok(())
}

fn add_dsr1_phase_space(t: &mut RelationTable, n: &Names) -> Result<()> {
    let (x, p) = (&n.coord, &n.mom);
    t.insert(&x[0], &p[0], Expr::int(-1), "Eq.14a")?;
    for i in 1..=3 {
        for j in 1..=3 {
            t.insert(&x[i], &p[j], Expr::int(delta(i, j)), "Eq.14b")?;
        }
    }
    for i in 1..=3 {
        for j in i + 1..=3 {
            t.insert(&x[i], &x[j], Expr::zero(), "Eq.14c")?;
        }
        t.insert(&p[0], &x[i], Expr::zero(), "Eq.14c")?;
    }
    for i in 1..=3 {
        t.insert(&x[0], &p[i], gen_expr(&format!("{}/kappa", p[i]), n)?, "Eq.14d")?;
    }
    for i in 1..=3 {
        t.insert(&x[0], &x[i], gen_expr(&format!("-{}/kappa", x[i]), n)?, "Eq.14e")?;
    }
    t.describe("Eq.14a", "{X0, P0} = -1");
    t.describe("Eq.14b", "{X_i, P_j} = delta_ij");
    t.describe("Eq.14c", "{X_i, X_j} = 0; {P0, X_i} = 0");
    t.describe("Eq.14d", "{X0, P_i} = P_i/kappa");
    t.describe("Eq.14e", "{X0, X_i} = -X_i/kappa");
    Ok(())
}

/// `{N_i, X0} = X_i - N_i/kappa`, `{N_i, X_j} = delta_ij X0 - eps_ijk M_k/kappa`.
fn add_dsr1_boost_coordinates(t: &mut RelationTable, n: &Names) -> Result<()> {
    for i in 1..=3 {
        let rhs = gen_expr(&format!("{} - {}/kappa", n.coord[i], n.boost[i - 1]), n)?;
        t.insert(&n.boost[i - 1], &n.coord[0], rhs, "Eq.19c")?;
        for j in 1..=3 {
            let mut rhs = format!("{}*{}", delta(i, j), n.coord[0]);
            if let Some((k, s)) = levi_civita(i, j) {
                rhs.push_str(&format!(" - ({s})*{}/kappa", n.rot[k - 1]));
            }
            t.insert(&n.boost[i - 1], &n.coord[j], gen_expr(&rhs, n)?.normalize()?, "Eq.19d")?;
        }
    }
    t.describe("Eq.19c", "{N_i, X0} = X_i - N_i/kappa");
    t.describe("Eq.19d", "{N_i, X_j} = delta_ij X0 - eps_ijk M_k/kappa");
    Ok(())
}

fn add_dual_phase_space(t: &mut RelationTable, n: &Names) -> Result<()> {
    let (x, p) = (&n.coord, &n.mom);
    t.insert(&p[0], &x[0], Expr::int(1), "Eq.30a")?;
    for i in 1..=3 {
        for j in 1..=3 {
            t.insert(&p[i], &x[j], Expr::int(-delta(i, j)), "Eq.30b")?;
        }
    }
    for i in 1..=3 {
        t.insert(&p[i], &x[0], Expr::zero(), "Eq.30c")?;
        for j in i + 1..=3 {
            t.insert(&p[i], &p[j], Expr::zero(), "Eq.30c")?;
        }
    }
    for i in 1..=3 {
        t.insert(&p[0], &x[i], gen_expr(&format!("-kappabar*{}", x[i]), n)?, "Eq.30d")?;
    }
    for i in 1..=3 {
        t.insert(&p[0], &p[i], gen_expr(&format!("kappabar*{}", p[i]), n)?, "Eq.30e")?;
    }
    t.describe("Eq.30a", "{P0bar, X0bar} = 1");
    t.describe("Eq.30b", "{P_ibar, X_jbar} = -delta_ij");
    t.describe("Eq.30c", "{P_ibar, X0bar} = 0; {P_ibar, P_jbar} = 0");
    t.describe("Eq.30d", "{P0bar, X_ibar} = -kappabar X_ibar");
    t.describe("Eq.30e", "{P0bar, P_ibar} = kappabar P_ibar");
    Ok(())
}

/// `{N_i, P0} = P_i + kappabar N_i`, `{N_i, P_j} = delta_ij P0 + kappabar eps_ijk M_k`.
fn add_dual_boost_momenta(t: &mut RelationTable, n: &Names) -> Result<()> {
    for i in 1..=3 {
        let rhs = gen_expr(&format!("{} + kappabar*{}", n.mom[i], n.boost[i - 1]), n)?;
        t.insert(&n.boost[i - 1], &n.mom[0], rhs, "Eq.37a")?;
        for j in 1..=3 {
            let mut rhs = format!("{}*{}", delta(i, j), n.mom[0]);
            if let Some((k, s)) = levi_civita(i, j) {
                rhs.push_str(&format!(" + ({s})*kappabar*{}", n.rot[k - 1]));
            }
            t.insert(&n.boost[i - 1], &n.mom[j], gen_expr(&rhs, n)?.normalize()?, "Eq.37b")?;
        }
    }
    t.describe("Eq.37a", "{N_ibar, P0bar} = P_ibar + kappabar N_ibar");
    t.describe("Eq.37b", "{N_ibar, P_jbar} = delta_ij P0bar + kappabar eps_ijk M_kbar");
    Ok(())
}

/// Boosts of the DSR1 basis in terms of its phase-space generators.
pub fn dsr1_boost_expr(n: &Names, i: usize) -> Result<Expr> {
    let (xi, pi) = (&n.coord[i], &n.mom[i]);
    gen_expr(
        &format!(
            "kappa/2*{xi}*(1 - exp(-2*{p0}/kappa)) + {xi}*Psq/(2*kappa) - {x0}*{pi}",
            p0 = n.mom[0],
            x0 = n.coord[0]
        ),
        n,
    )
}

/// `M_i = eps_ijk V_j W_k` for coordinates `v` and momenta `w`.
pub fn rotation_expr(n: &Names, i: usize) -> Result<Expr> {
    let (j, k) = (i % 3 + 1, (i + 1) % 3 + 1);
    let (x, p) = (&n.coord, &n.mom);
    gen_expr(&format!("{}*{} - {}*{}", x[j], p[k], x[k], p[j]), n)
}

pub const BUILTIN: [&str; 3] = ["sr", "dsr1", "dual"];

/// Defining functions of the DSR1 bicrossproduct basis (constant mass `m`).
pub fn dsr1_functions() -> Result<DefiningFunctions> {
    let k = "(p0/kappa + sqrt(1 + m^2/kappa^2))";
    DefiningFunctions::parse(
        Kind::Momentum,
        &format!("kappa*ln{k}"),
        &format!("1/{k}"),
        "kappa*sinh(P0/kappa) + Psq*exp(P0/kappa)/(2*kappa)",
        "exp(P0/kappa)",
    )
}

pub fn dsr1_triple() -> Result<DeformationTriple> {
    DeformationTriple::parse(Kind::Momentum, "kappa/2*(1 - exp(-2*P0/kappa)) + Psq/(2*kappa)", "-1/kappa", "1")
}

/// Defining functions of the dual basis.
pub fn dual_functions() -> Result<DefiningFunctions> {
    let v = "(kappabar*x0 + sqrt(kappabar^2*(x0^2 - xsq) + 1))";
    DefiningFunctions::parse(
        Kind::Spacetime,
        &format!("ln{v}/kappabar"),
        &format!("1/{v}"),
        "sinh(kappabar*X0bar)/kappabar + kappabar/2*Xsqbar*exp(kappabar*X0bar)",
        "exp(kappabar*X0bar)",
    )
}

pub fn dual_triple() -> Result<DeformationTriple> {
    DeformationTriple::parse(
        Kind::Spacetime,
        "1/(2*kappabar)*(1 - exp(-2*kappabar*X0bar)) + kappabar/2*Xsqbar",
        "-kappabar",
        "1",
    )
}

/// Built-in coproducts by name over the given sector.
pub fn builtin_coproduct(name: &str, sector: &[String]) -> Result<Coproduct> {
    match name {
        "primitive" => Ok(Coproduct::primitive(name, sector)),
        "dsr1-momentum" => Coproduct::exponential_twist(name, sector, rf("-1/kappa")?),
        "dual-spacetime" => Coproduct::exponential_twist(name, sector, rf("-kappabar")?),
        _ => Err(Error::Config {
            line: 0,
            msg: format!("unknown coproduct '{name}' (known: primitive, dsr1-momentum, dual-spacetime)"),
        }),
    }
}

fn sr_realizations(n: &Names) -> Result<BTreeMap<String, RatFunc>> {
    let sr = Names::sr();
    let mut out = BTreeMap::new();
    for (a, b) in n.all().iter().zip(sr.all()) {
        out.insert(a.clone(), rf(&b)?);
    }
    Ok(out)
}

pub fn builtin_basis(name: &str) -> Result<Basis> {
    match name {
        "sr" => {
            let names = Names::sr();
            let realizations = sr_realizations(&names)?;
            Ok(Basis {
                name: "sr".into(),
                family: Family::Sr,
                kind: Kind::Momentum,
                coproducts: Some((
                    Coproduct::primitive("primitive", &names.mom),
                    Coproduct::primitive("primitive", &names.coord),
                )),
                names,
                functions: DefiningFunctions::identity(Kind::Momentum),
                triple: DeformationTriple::poincare(Kind::Momentum),
                triple_source: "catalog".into(),
                realizations,
                shell: false,
                parameter: None,
                user_relations: Vec::new(),
            })
        }
        "dsr1" => {
            let names = Names::kappa();
            let k = "(p0/kappa + sqrt(1 + m^2/kappa^2))";
            let mut r = sr_realizations(&names)?;
            r.insert(names.mom[0].clone(), rf(&format!("kappa*ln{k}"))?);
            for i in 1..4 {
                r.insert(names.mom[i].clone(), rf(&format!("p{i}/{k}"))?);
            }
            for i in 0..4 {
                r.insert(names.coord[i].clone(), rf(&format!("x{i}*{k}"))?);
            }
            for i in 1..=3 {
                let n_i = realize(&dsr1_boost_expr(&names, i)?, &r)?;
                r.insert(names.boost[i - 1].clone(), n_i);
            }
            Ok(Basis {
                name: "dsr1".into(),
                family: Family::Dsr1,
                kind: Kind::Momentum,
                coproducts: Some((
                    builtin_coproduct("dsr1-momentum", &names.mom)?,
                    Coproduct::primitive("primitive", &names.coord),
                )),
                names,
                functions: dsr1_functions()?,
                triple: dsr1_triple()?,
                triple_source: "catalog".into(),
                realizations: r,
                shell: true,
                parameter: Some(("kappa".into(), Center::Infinity)),
                user_relations: Vec::new(),
            })
        }
        "dual" => {
            let names = Names::dual();
            let w = "sqrt(kappabar^2*(x0^2 - xsq) + 1)";
            let v = format!("(kappabar*x0 + {w})");
            let mut r = sr_realizations(&names)?;
            r.insert(names.coord[0].clone(), rf(&format!("ln{v}/kappabar"))?);
            for i in 1..4 {
                r.insert(names.coord[i].clone(), rf(&format!("x{i}/{v}"))?);
            }
            r.insert(names.mom[0].clone(), rf(&format!("p0*{w}"))?);
            for i in 1..4 {
                r.insert(names.mom[i].clone(), rf(&format!("p{i}*{w} - kappabar*n{i}"))?);
            }
            Ok(Basis {
                name: "dual".into(),
                family: Family::Dual,
                kind: Kind::Spacetime,
                coproducts: Some((
                    Coproduct::primitive("primitive", &names.mom),
                    builtin_coproduct("dual-spacetime", &names.coord)?,
                )),
                names,
                functions: dual_functions()?,
                triple: dual_triple()?,
                triple_source: "catalog".into(),
                realizations: r,
                shell: false,
                parameter: Some(("kappabar".into(), Center::Zero)),
                user_relations: Vec::new(),
            })
        }
        other => Err(Error::UnknownBasis(other.to_string())),
    }
}

/// Parameter whose limit undoes the deformation, guessed from the symbols.
fn guess_parameter(df: &DefiningFunctions) -> Option<(String, Center)> {
    let mut syms = df.f.symbols();
    syms.extend(df.g.symbols());
    if syms.contains("kappabar") {
        Some(("kappabar".into(), Center::Zero))
    } else if syms.contains("kappa") {
        Some(("kappa".into(), Center::Infinity))
    } else {
        None
    }
}

/// Basis whose deformed vector is `V0 = f`, `V_i = s_i g`, with rotations and
/// boosts realized by `m_i`, `n_i`. The claimed triple is the derived one.
pub fn basis_from_functions(df: DefiningFunctions, name: &str, shell: bool) -> Result<Basis> {
    let mode = if shell { EqualityMode::ModuloShell } else { EqualityMode::Exact };
    if let Some(res) = check_inverses(&df, mode)? {
        return Err(Error::Inverse(format!(
            "defining functions of '{name}' are not mutually inverse ({} mode): residual {res}",
            mode.label()
        )));
    }
    let names = match df.kind {
        Kind::Momentum => Names::kappa(),
        Kind::Spacetime => Names::dual(),
    };
    let sr = Names::sr();
    let mut r = BTreeMap::new();
    for (a, b) in names.lorentz().iter().zip(sr.lorentz()) {
        r.insert(a.clone(), rf(&b)?);
    }
    let (v, s) = match df.kind {
        Kind::Momentum => (&names.mom, &sr.mom),
        Kind::Spacetime => (&names.coord, &sr.coord),
    };
    r.insert(v[0].clone(), crate::expr::expand_squares(&df.f)?);
    let g = crate::expr::expand_squares(&df.g)?;
    for i in 1..4 {
        r.insert(v[i].clone(), RatFunc::sym(&s[i]).mul(&g));
    }
    let triple = derive_abd(&df)?;
    Ok(Basis {
        name: name.to_string(),
        family: Family::Custom,
        kind: df.kind,
        parameter: guess_parameter(&df),
        names,
        functions: df,
        triple,
        triple_source: "derived".into(),
        realizations: r,
        shell,
        coproducts: None,
        user_relations: Vec::new(),
    })
}

impl Basis {
    /// Generators with a realization, in catalog order.
    pub fn generators(&self) -> Vec<String> {
        self.names.all().into_iter().filter(|g| self.realizations.contains_key(g)).collect()
    }

    pub fn has_all(&self, gens: &[String]) -> bool {
        gens.iter().all(|g| self.realizations.contains_key(g))
    }

    fn triple_tags(&self, catalog: (&'static str, &'static str), plain: (&'static str, &'static str)) -> (&'static str, &'static str) {
        if self.triple_source == "catalog" {
            catalog
        } else {
            plain
        }
    }

    /// Claimed relations of one block.
    pub fn claims(&self, block: Block) -> Result<RelationTable> {
        let n = &self.names;
        let mut t = table(n);
        match (block, self.family) {
            (Block::Lorentz, _) => add_lorentz(&mut t, n)?,
            (Block::Rotation, Family::Sr) => {
                add_rotation(&mut t, n, &n.mom, ("Eq.1d", "Eq.1e"))?;
                add_rotation(&mut t, n, &n.coord, ("Eq.4a", "Eq.4b"))?;
            }
            (Block::Rotation, Family::Dsr1) => {
                add_rotation(&mut t, n, &n.mom, ("Eq.6a", "Eq.6b"))?;
                add_rotation(&mut t, n, &n.coord, ("Eq.19a", "Eq.19b"))?;
            }
            (Block::Rotation, Family::Dual) => {
                add_rotation(&mut t, n, &n.coord, ("Eq.21", "Eq.21"))?;
                add_rotation(&mut t, n, &n.mom, ("Eq.36", "Eq.36"))?;
            }
            (Block::Rotation, Family::Custom) => match self.kind {
                Kind::Momentum => add_rotation(&mut t, n, &n.mom, ("Eq.6a", "Eq.6b"))?,
                Kind::Spacetime => add_rotation(&mut t, n, &n.coord, ("Eq.21", "Eq.21"))?,
            },
            (Block::Boost, Family::Sr) => {
                add_boost(&mut t, n, &n.mom, &self.triple, ("Eq.1f", "Eq.1g"))?;
                add_boost(&mut t, n, &n.coord, &DeformationTriple::poincare(Kind::Spacetime), ("Eq.4c", "Eq.4d"))?;
                t.describe("Eq.1f", "{n_i, p0} = p_i");
                t.describe("Eq.1g", "{n_i, p_j} = delta_ij p0");
                t.describe("Eq.4c", "{n_i, x0} = x_i");
                t.describe("Eq.4d", "{n_i, x_j} = delta_ij x0");
            }
            (Block::Boost, Family::Dsr1) => {
                let tags = self.triple_tags(("Eq.8a+16", "Eq.8b+16"), ("Eq.8a", "Eq.8b"));
                add_boost(&mut t, n, &n.mom, &self.triple, tags)?;
                add_dsr1_boost_coordinates(&mut t, n)?;
            }
            (Block::Boost, Family::Dual) => {
                let tags = self.triple_tags(("Eq.24a+32", "Eq.24b+32"), ("Eq.24a", "Eq.24b"));
                add_boost(&mut t, n, &n.coord, &self.triple, tags)?;
                add_dual_boost_momenta(&mut t, n)?;
            }
            (Block::Boost, Family::Custom) => match self.kind {
                Kind::Momentum => add_boost(&mut t, n, &n.mom, &self.triple, ("Eq.8a", "Eq.8b"))?,
                Kind::Spacetime => add_boost(&mut t, n, &n.coord, &self.triple, ("Eq.24a", "Eq.24b"))?,
            },
            (Block::PhaseSpace, Family::Sr) => add_sr_phase_space(&mut t, n)?,
            (Block::PhaseSpace, Family::Dsr1) => add_dsr1_phase_space(&mut t, n)?,
            (Block::PhaseSpace, Family::Dual) => add_dual_phase_space(&mut t, n)?,
            (Block::PhaseSpace, Family::Custom) => {}
            (Block::Sector, Family::Sr) => {}
            (Block::Sector, Family::Dsr1) => add_commuting(&mut t, &n.mom, "Eq.7")?,
            (Block::Sector, Family::Dual) => add_commuting(&mut t, &n.coord, "Eq.27")?,
            (Block::Sector, Family::Custom) => match self.kind {
                Kind::Momentum => add_commuting(&mut t, &n.mom, "Eq.7")?,
                Kind::Spacetime => add_commuting(&mut t, &n.coord, "Eq.27")?,
            },
        }
        Ok(t)
    }

    /// Every claimed relation of the catalog (without user relations).
    pub fn full_table(&self) -> Result<RelationTable> {
        let mut t = table(&self.names);
        for b in [Block::Lorentz, Block::Rotation, Block::Boost, Block::PhaseSpace, Block::Sector] {
            t.extend(&self.claims(b)?)?;
        }
        Ok(t)
    }

    /// Structure-table algebra over `gens` (a subset of the full table) with
    /// the deformed sector as commuting subalgebra.
    pub fn algebra(&self, gens: &[String]) -> Result<AbstractAlgebra> {
        let t = self.full_table()?.restrict(gens)?;
        let commuting: Vec<String> = self
            .names
            .deformed(self.kind)
            .iter()
            .filter(|g| gens.contains(g))
            .cloned()
            .collect();
        AbstractAlgebra::new(t, &commuting)
    }

    /// Registry for expressions in this basis' generators; SR symbols and
    /// sugar stay available unless shadowed.
    pub fn registry(&self) -> Registry {
        registry_for(&self.names)
    }

    /// Display names: generators realized exactly by an SR generator are
    /// shown under the SR name.
    pub fn display_names(&self) -> BTreeMap<String, String> {
        let sr = Names::sr();
        let mut out = BTreeMap::new();
        for (g, s) in self.names.all().iter().zip(sr.all()) {
            if let (Some(r), Ok(sr_r)) = (self.realizations.get(g), rf(&s)) {
                if *r == sr_r {
                    out.insert(g.clone(), s);
                    continue;
                }
            }
            out.insert(g.clone(), g.clone());
        }
        out
    }
}

/// Realizations restricted to `gens`, as `(name, expression)` pairs.
pub fn realized(b: &Basis, gens: &[String]) -> Result<Vec<(String, RatFunc)>> {
    gens.iter()
        .map(|g| {
            b.realizations
                .get(g)
                .map(|r| (g.clone(), r.clone()))
                .ok_or_else(|| Error::MissingGenerator(g.clone()))
        })
        .collect()
}

/// Rewrites `sqrt(q^2)` as `+q` or `-q` when the sign of `q`, pulled back
/// to SR phase space, is the same at every sampled point. Used for
/// presentation of derived coefficients only.
pub fn denest(r: &RatFunc, pull: &dyn Fn(&RatFunc) -> Result<RatFunc>, on_shell: bool) -> Result<RatFunc> {
    use crate::expr::{eval, sample_values, Var};
    let f = |v: &Var| -> std::result::Result<Option<RatFunc>, crate::expr::ExprError> {
        let Var::Sqrt(p) = v else { return Ok(None) };
        let Some(root) = p.sqrt_exact() else { return Ok(None) };
        let root = RatFunc::from_poly(root);
        let Ok(back) = pull(&root) else { return Ok(None) };
        let e = back.to_expr();
        let pts = sample_values(7, 24, on_shell, &e.symbols());
        let signs: Vec<f64> = pts
            .iter()
            .filter_map(|pt| eval(&e, pt, &Default::default()).ok())
            .filter(|x| x.is_finite() && x.abs() > 1e-12)
            .map(f64::signum)
            .collect();
        if signs.len() < pts.len() / 2 {
            return Ok(None);
        }
        if signs.iter().all(|s| *s > 0.0) {
            Ok(Some(root))
        } else if signs.iter().all(|s| *s < 0.0) {
            Ok(Some(root.neg()))
        } else {
            Ok(None)
        }
    };
    Ok(r.map_vars(&f)?)
}

/// Derived triple in a presentable form: on a shell basis the constant mass
/// is first eliminated through `m^2 = s0^2 - ssq`, then perfect-square
/// radicals are denested.
pub fn derived_for_display(df: &DefiningFunctions, shell: bool) -> Result<DeformationTriple> {
    let mut t = derive_abd(df)?;
    let (s0, ssq) = df.kind.small_vars();
    let pull = |r: &RatFunc| df.pullback(r);
    for c in [&mut t.a, &mut t.b, &mut t.d] {
        let mut v = c.clone();
        if shell && v.depends_on("m") {
            let m2 = RatFunc::sym(s0).mul(&RatFunc::sym(s0)).sub(&RatFunc::sym(ssq));
            let m = RatFunc::sqrt(&df.pushforward(&m2)?)?;
            v = v.subst1("m", &m)?;
        }
        *c = denest(&v, &pull, shell)?;
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{equal_rf, EqualOptions};

    #[test]
    fn levi_civita_is_cyclic() {
        assert_eq!(levi_civita(1, 2), Some((3, 1)));
        assert_eq!(levi_civita(2, 3), Some((1, 1)));
        assert_eq!(levi_civita(3, 1), Some((2, 1)));
        assert_eq!(levi_civita(2, 1), Some((3, -1)));
        assert_eq!(levi_civita(2, 2), None);
    }

    #[test]
    fn poincare_triple_satisfies_constraint() {
        for kind in [Kind::Momentum, Kind::Spacetime] {
            let (ok, v) = check_deformation_constraint(&DeformationTriple::poincare(kind)).unwrap();
            assert!(ok, "{v}");
        }
    }

    #[test]
    fn flipped_b_residual() {
        // (P0, 1/kappa, 1): the constraint evaluates to 1 - P0/kappa.
        let t = DeformationTriple::parse(Kind::Momentum, "P0", "1/kappa", "1").unwrap();
        let (ok, v) = check_deformation_constraint(&t).unwrap();
        assert!(!ok);
        let want = RatFunc::one().sub(&RatFunc::sym("P0").div(&RatFunc::sym("kappa")).unwrap());
        assert!(v.sub(&want).is_zero(), "{v}");
    }

    #[test]
    fn identity_functions_derive_poincare() {
        for kind in [Kind::Momentum, Kind::Spacetime] {
            let t = derive_abd(&DefiningFunctions::identity(kind)).unwrap();
            let p = DeformationTriple::poincare(kind);
            assert!(t.a.sub(&p.a).is_zero() && t.b.is_zero() && t.d.sub(&RatFunc::one()).is_zero());
        }
    }

    #[test]
    fn pullback_and_pushforward_invert() {
        let df = dual_functions().unwrap();
        let e = RatFunc::sym("x0").mul(&RatFunc::sym("xsq")).add(&RatFunc::one());
        let back = df.pullback(&df.pushforward(&e).unwrap()).unwrap();
        let opts = EqualOptions::default();
        let v = equal_rf(&back, &e, EqualityMode::Exact, &opts).unwrap();
        assert!(v.pass, "{back}");
    }

    #[test]
    fn unknown_builtin_is_an_error() {
        assert!(matches!(builtin_basis("nope"), Err(Error::UnknownBasis(_))));
        assert_eq!(Kind::parse("momentum"), Some(Kind::Momentum));
        assert_eq!(Kind::parse("energy"), None);
    }
}
