//! Worked examples for the bracket engines, basis catalog and coalgebra
//! layer, each against an independent hand or numeric result.

use std::collections::BTreeMap;

use kpa_core::bases::*;
use kpa_core::canonical::*;
use kpa_core::expr::*;
use kpa_core::hopf::*;

fn sr(s: &str) -> RatFunc {
    sr_expr(s).unwrap()
}

fn loose(s: &str) -> RatFunc {
    parse_with(s, &Registry::permissive()).unwrap().to_rf().unwrap()
}

/// Parses text with tensor-leg symbols written `g@k`.
fn legs(s: &str) -> RatFunc {
    let r = loose(&s.replace('@', "__leg"));
    let map: BTreeMap<String, RatFunc> = r
        .symbols()
        .into_iter()
        .filter(|x| x.contains("__leg"))
        .map(|x| {
            let (g, k) = x.split_once("__leg").unwrap();
            (x.clone(), RatFunc::sym(&leg(g, k.parse().unwrap())))
        })
        .collect();
    r.subst(&map).unwrap()
}

fn same(a: &RatFunc, b: &RatFunc) -> bool {
    a.sub(b).is_zero()
}

const W: &str = "sqrt(kappabar^2*(x0^2 - xsq) + 1)";

#[test]
fn poisson_examples() {
    assert!(same(&poisson(&sr("m1"), &sr("m2")).unwrap(), &sr("m3")));
    assert!(poisson(&sr("x1"), &sr("x2")).unwrap().is_zero());
    assert!(same(&poisson(&sr("n1"), &sr("n2")).unwrap(), &sr("-m3")));
    assert!(same(&poisson(&sr("n1"), &sr("x0")).unwrap(), &sr("x1")));
    // Sign convention: {x_mu, p_nu} = eta_mu_nu with eta = (-, +, +, +).
    assert!(same(&poisson(&sr("x0"), &sr("p0")).unwrap(), &RatFunc::int(-1)));
    assert!(same(&poisson(&sr("x1"), &sr("p1")).unwrap(), &RatFunc::one()));
    assert_eq!(MetricSignature::MOSTLY_PLUS.eta(0, 0), -1);
}

#[test]
fn table_bracket_boost_on_time_coordinate() {
    let b = builtin_basis("dsr1").unwrap();
    let n = &b.names;
    let mut gens = n.mom.to_vec();
    gens.extend(n.coord.iter().cloned());
    let alg = b.algebra(&gens).unwrap();
    let n1 = dsr1_boost_expr(n, 1).unwrap().to_rf().unwrap();
    let got = table_bracket(&alg, &n1, &RatFunc::sym("X0")).unwrap();
    let want = RatFunc::sym("X1").sub(&n1.div(&RatFunc::sym("kappa")).unwrap());
    assert!(same(&got, &want), "{got}");
    // Hand expansion: (1/2) X1 (1 + e^{-2P0/kappa}) - X1 P.P/(2 kappa^2) + X0 P1/kappa.
    let hand = loose("X1/2*(1 + exp(-2*P0/kappa)) - X1*(P1^2 + P2^2 + P3^2)/(2*kappa^2) + X0*P1/kappa");
    assert!(same(&got, &hand), "{got}");
    assert!(table_bracket(&alg, &RatFunc::sym("P1"), &RatFunc::sym("P1")).unwrap().is_zero());
}

#[test]
fn table_and_poisson_agree_on_dual_composite() {
    let b = builtin_basis("dual").unwrap();
    let alg = b.algebra(&b.names.all()).unwrap();
    let f = loose("exp(-kappabar*X0bar)*X1bar");
    let table = table_bracket(&alg, &RatFunc::sym("P0bar"), &f).unwrap();
    let lhs = realize(&table.to_expr(), &b.realizations).unwrap();
    let rhs = poisson(&b.realizations["P0bar"], &realize(&f.to_expr(), &b.realizations).unwrap()).unwrap();
    // Independent route: 50 sampled points.
    let (l, r) = (lhs.to_expr(), rhs.to_expr());
    for pt in sample_values(17, 50, false, &Default::default()) {
        let a = eval(&l, &pt, &Default::default()).unwrap();
        let c = eval(&r, &pt, &Default::default()).unwrap();
        assert!((a - c).abs() <= 1e-9 * a.abs().max(1.0));
    }
    assert!(same(&lhs, &rhs));
}

#[test]
fn jacobiator_examples() {
    let z = jacobiator(Engine::Poisson, &sr("m1"), &sr("m2"), &sr("m3")).unwrap();
    assert!(z.is_zero());

    let d = builtin_basis("dual").unwrap();
    let mut gens = d.names.lorentz();
    gens.extend(d.names.coord.iter().cloned());
    let alg = d.algebra(&gens).unwrap();
    let j = jacobiator(Engine::Table(&alg), &RatFunc::sym("N1bar"), &RatFunc::sym("N2bar"), &RatFunc::sym("X3bar")).unwrap();
    assert!(j.is_zero());

    let mut k = builtin_basis("dsr1").unwrap();
    k.triple.b = loose("1/kappa");
    let mut gens = k.names.lorentz();
    gens.extend(k.names.mom.iter().cloned());
    let alg = k.algebra(&gens).unwrap();
    let (n1, n2) = (RatFunc::sym("N1"), RatFunc::sym("N2"));
    let j = jacobiator(Engine::Table(&alg), &n1, &n2, &RatFunc::sym("P1")).unwrap();
    assert!(!j.is_zero());
    // Numeric confirmation that the residual is not a normal-form artifact.
    let pt: BTreeMap<String, f64> = [("P0", 0.3), ("P1", 0.2), ("P2", 0.7), ("P3", -0.4), ("kappa", 1.1)]
        .iter()
        .map(|(a, b)| (a.to_string(), *b))
        .collect();
    assert!(eval(&j.to_expr(), &pt, &Default::default()).unwrap().abs() > 1e-3);
}

#[test]
fn verify_table_examples_via_realizations() {
    let d = builtin_basis("dual").unwrap();
    let t = d.claims(Block::PhaseSpace).unwrap();
    assert_eq!(t.families().len(), 5);
    for rel in &t.relations {
        let lhs = poisson(&d.realizations[&rel.left], &d.realizations[&rel.right]).unwrap();
        let rhs = realize(&rel.rhs, &d.realizations).unwrap();
        assert!(same(&lhs, &rhs), "{}", relation_text(rel));
    }
    // {P0bar, X0bar} = 1 goes through d fbar/d x0 = 1/W.
    let f = &dual_functions().unwrap().f;
    assert!(same(&f.diff("x0"), &loose(&format!("1/{W}"))));
    let empty = RelationTable::new("empty", &d.names.all());
    assert!(empty.families().is_empty());
}

#[test]
fn catalog_realizations() {
    let s = builtin_basis("sr").unwrap();
    assert!(same(&s.realizations["n1"], &loose("x1*p0 - x0*p1")));
    let d = builtin_basis("dual").unwrap();
    assert!(same(&d.realizations["P0bar"], &sr(&format!("p0*{W}"))));
    // {n_i, P0bar} = p_i W
    let n1 = sr("n1");
    assert!(same(&poisson(&n1, &d.realizations["P0bar"]).unwrap(), &sr(&format!("p1*{W}"))));

    let k = builtin_basis("dsr1").unwrap();
    for mu in 0..4 {
        let x = format!("X{mu}");
        let s = series(&k.realizations[&x].to_expr(), "kappa", Center::Infinity, 0).unwrap();
        assert!(same(&s.coefficient(0), &sr(&format!("x{mu}"))));
    }
}

#[test]
fn basis_from_identity_functions_is_sr() {
    let b = basis_from_functions(DefiningFunctions::identity(Kind::Momentum), "id", false).unwrap();
    let s = builtin_basis("sr").unwrap();
    for (g, r) in &b.realizations {
        let sname = &Names::sr().all()[b.names.all().iter().position(|x| x == g).unwrap()];
        assert!(same(r, &s.realizations[sname]), "{g}");
    }
    assert_eq!(derive_abd(&DefiningFunctions::identity(Kind::Momentum)).unwrap(), DeformationTriple::poincare(Kind::Momentum));
}

#[test]
fn derive_abd_examples() {
    let dual = derived_for_display(&dual_functions().unwrap(), false).unwrap();
    let want = dual_triple().unwrap();
    for (a, b) in [(&dual.a, &want.a), (&dual.b, &want.b), (&dual.d, &want.d)] {
        assert!(same(a, b), "{a} vs {b}");
    }
    // DSR1: only modulo the shell, where the constant m is eliminated.
    let k = derived_for_display(&dsr1_functions().unwrap(), true).unwrap();
    let want = dsr1_triple().unwrap();
    for (a, b) in [(&k.a, &want.a), (&k.b, &want.b), (&k.d, &want.d)] {
        assert!(same(a, b), "{a} vs {b}");
    }
    let raw = derive_abd(&dsr1_functions().unwrap()).unwrap();
    assert!(raw.a.depends_on("m"));
}

#[test]
fn constraint_examples() {
    for t in [dsr1_triple().unwrap(), dual_triple().unwrap(), DeformationTriple::poincare(Kind::Momentum)] {
        let (ok, v) = check_deformation_constraint(&t).unwrap();
        assert!(ok && v.is_one(), "{v}");
    }
    let t = DeformationTriple::parse(Kind::Momentum, "P0", "1/kappa", "1").unwrap();
    let (ok, v) = check_deformation_constraint(&t).unwrap();
    assert!(!ok);
    assert!(same(&v, &loose("1 - P0/kappa")));
}

#[test]
fn inverse_examples() {
    assert!(check_inverses(&dual_functions().unwrap(), EqualityMode::Exact).unwrap().is_none());
    assert!(check_inverses(&DefiningFunctions::identity(Kind::Spacetime), EqualityMode::Exact).unwrap().is_none());
    let k = dsr1_functions().unwrap();
    assert!(check_inverses(&k, EqualityMode::ModuloShell).unwrap().is_none());
    assert!(check_inverses(&k, EqualityMode::Exact).unwrap().is_some());
    // Off-shell counterexample point.
    let [(lhs, rhs), _] = inverse_residuals(&k).unwrap();
    let v = equal_rf(&lhs, &rhs, EqualityMode::Numeric, &Default::default()).unwrap();
    assert!(!v.pass);
    let pt = v.evidence.unwrap().worst_point;
    let pp: f64 = (1..4).map(|i| pt[&format!("p{i}")].powi(2)).sum();
    assert!((pt["p0"] - (pt["m"].powi(2) + pp).sqrt()).abs() > 1e-6);
}

#[test]
fn onshell_examples() {
    let k = builtin_basis("dsr1").unwrap();
    let v = equal_rf(&k.realizations["N1"], &sr("n1"), EqualityMode::ModuloShell, &Default::default()).unwrap();
    assert!(v.pass);
    assert!(same(&k.realizations["M1"], &sr("m1")));
    let d = builtin_basis("dual").unwrap();
    let den = "(cosh(kappabar*X0bar) - kappabar^2/2*Xsqbar*exp(kappabar*X0bar))";
    let p0 = parse_with(&format!("P0bar/{den}"), &d.registry()).unwrap();
    assert!(same(&realize(&p0, &d.realizations).unwrap(), &sr("p0")));
}

#[test]
fn limits_examples() {
    let t = dual_triple().unwrap();
    let b = series(&t.b.to_expr(), "kappabar", Center::Zero, 0).unwrap();
    assert!(b.coefficient(0).is_zero());
    let t = dsr1_triple().unwrap();
    let a = series(&t.a.to_expr(), "kappa", Center::Infinity, 1).unwrap();
    assert!(same(&a.coefficient(1), &loose("Psq/2 - P0^2")));
}

fn sector(p: &str) -> Vec<String> {
    (0..4).map(|i| format!("{p}{i}")).collect()
}

#[test]
fn coproduct_examples() {
    let b = builtin_basis("dsr1").unwrap();
    let (mom, _) = b.coproducts.clone().unwrap();
    let d = apply_coproduct(&mom, &RatFunc::sym("P1")).unwrap();
    assert!(same(&d.value, &legs("P1@1 + exp(-P0@1/kappa)*P1@2")));
    assert!(same(&apply_coproduct(&mom, &RatFunc::one()).unwrap().value, &RatFunc::one()));

    let dual = builtin_basis("dual").unwrap();
    let (_, pos) = dual.coproducts.clone().unwrap();
    let x = apply_coproduct(&pos, &loose("X0bar*X1bar")).unwrap();
    let want = legs("(X0bar@1 + X0bar@2)*(X1bar@1 + exp(-kappabar*X0bar@1)*X1bar@2)");
    assert!(same(&x.value, &want));
    // Four monomials after expansion.
    assert_eq!(x.value.numer().len(), 4);
}

#[test]
fn coassociativity_examples() {
    let b = builtin_basis("dsr1").unwrap();
    let (mom, pos) = b.coproducts.clone().unwrap();
    for c in [&mom, &pos] {
        assert!(check_coassociativity(c).unwrap().iter().all(|(_, t)| t.is_zero()));
    }
    // Both sides of (Delta x id) Delta P1 equal the hand expansion.
    let d = apply_coproduct(&mom, &RatFunc::sym("P1")).unwrap();
    assert_eq!(d.legs, 2);
    let d = builtin_basis("dual").unwrap();
    let (m, p) = d.coproducts.clone().unwrap();
    for c in [&m, &p] {
        assert!(check_coassociativity(c).unwrap().iter().all(|(_, t)| t.is_zero()));
    }
}

#[test]
fn homomorphism_examples() {
    let d = builtin_basis("dual").unwrap();
    let (mom, pos) = d.coproducts.clone().unwrap();
    let full = d.full_table().unwrap();
    for (c, gens) in [(&pos, &d.names.coord), (&mom, &d.names.mom)] {
        let t = full.restrict(&gens[..]).unwrap();
        assert!(check_homomorphism(c, &t).unwrap().iter().all(|(_, r)| r.is_zero()));
    }
    let gens = sector("Y");
    let mut t = RelationTable::new("commuting", &gens);
    for i in 0..4 {
        for j in i + 1..4 {
            t.add(&gens[i], &gens[j], "0", "t").unwrap();
        }
    }
    assert!(check_homomorphism(&Coproduct::primitive("p", &gens), &t).unwrap().iter().all(|(_, r)| r.is_zero()));
}

#[test]
fn heisenberg_and_dualization_examples() {
    let k = builtin_basis("dsr1").unwrap();
    let (mom, pos) = k.coproducts.clone().unwrap();
    let pr = Pairing::canonical(&pos.sector, &mom.sector, true);
    let cross = heisenberg_cross(&mom, &pos, &pr).unwrap();
    let get = |t: &RelationTable, a: &str, b: &str| t.get(a, b).unwrap().to_rf().unwrap();
    assert!(same(&get(&cross, "X0", "P0"), &RatFunc::int(-1)));
    assert!(same(&get(&cross, "X1", "P1"), &RatFunc::one()));
    assert!(get(&cross, "X1", "P2").is_zero());
    assert!(get(&cross, "P0", "X1").is_zero());
    assert!(same(&get(&cross, "X0", "P1"), &loose("P1/kappa")));
    let dual = dualize_twist(&mom, &pr).unwrap();
    assert!(same(&get(&dual, "X0", "X1"), &loose("-X1/kappa")));

    // Primitive on both sides: the canonical table.
    let p = Coproduct::primitive("p", &sector("P"));
    let x = Coproduct::primitive("x", &sector("X"));
    let cross = heisenberg_cross(&p, &x, &Pairing::canonical(&x.sector, &p.sector, true)).unwrap();
    for mu in 0..4 {
        let want = if mu == 0 { -1 } else { 1 };
        assert!(same(&get(&cross, &format!("X{mu}"), &format!("P{mu}")), &RatFunc::int(want)));
    }
    let lam0 = Coproduct::exponential_twist("z", &sector("P"), RatFunc::zero()).unwrap();
    let dual = dualize_twist(&lam0, &Pairing::canonical(&x.sector, &lam0.sector, true)).unwrap();
    assert!(dual.relations.iter().all(|r| r.rhs.to_rf().unwrap().is_zero()));

    let d = builtin_basis("dual").unwrap();
    let (mom, pos) = d.coproducts.clone().unwrap();
    let pr = Pairing::canonical(&mom.sector, &pos.sector, false);
    let cross = heisenberg_cross(&mom, &pos, &pr).unwrap();
    assert!(same(&get(&cross, "P0bar", "X1bar"), &loose("-kappabar*X1bar")));
    let dual = dualize_twist(&pos, &pr).unwrap();
    assert!(same(&get(&dual, "P0bar", "P1bar"), &loose("kappabar*P1bar")));
}

#[test]
fn twist_round_trip() {
    for lam in ["-1/kappa", "-kappabar", "3/7", "kappa^2"] {
        let lambda = loose(lam);
        let c = Coproduct::exponential_twist("t", &sector("P"), lambda.clone()).unwrap();
        let x = sector("X");
        let pr = Pairing::canonical(&x, &c.sector, true);
        let dual = dualize_twist(&c, &pr).unwrap();
        let coef = dual.get("X0", "X1").unwrap().to_rf().unwrap().div(&RatFunc::sym("X1")).unwrap();
        assert!(same(&twist_from_lie(&coef, &pr, "P0").unwrap(), &lambda), "{lam}");
    }
}

#[test]
fn duality_map_is_a_table_isomorphism() {
    let entries = kpa_core::suite::duality_map("coalgebra", 42).unwrap();
    assert_eq!(entries.len(), 13);
    assert!(entries.iter().all(|e| e.verdict.is_pass()), "{:?}", entries.iter().find(|e| !e.verdict.is_pass()));
}
