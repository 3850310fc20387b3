//! Algebraic laws of the normal form, calculus and bracket engines on
//! randomly generated expressions.

use std::collections::BTreeMap;

use kpa_core::bases::builtin_basis;
use kpa_core::canonical::{jacobiator, poisson, table_bracket, AbstractAlgebra, Engine};
use kpa_core::expr::*;
use proptest::prelude::*;

const SYMS: [&str; 6] = ["p0", "p1", "x0", "x1", "kappa", "m"];

fn leaf() -> impl Strategy<Value = String> {
    prop_oneof![
        proptest::sample::select(SYMS.to_vec()).prop_map(str::to_string),
        (-4i64..5).prop_map(|n| format!("({n})")),
        (1i64..5, 2i64..6).prop_map(|(a, b)| format!("({a}/{b})")),
    ]
}

/// Random expressions whose denominators and radicands stay positive on
/// the sampled domain.
fn expr() -> impl Strategy<Value = String> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} / (1 + ({b})^2))")),
            inner.clone().prop_map(|a| format!("exp({a}/7)")),
            inner.clone().prop_map(|a| format!("sqrt(1 + ({a})^2)")),
            inner.clone().prop_map(|a| format!("ln(2 + ({a})^2)")),
            (inner, 2i64..4).prop_map(|(a, n)| format!("({a})^{n}")),
        ]
    })
}

fn poly_expr() -> impl Strategy<Value = String> {
    let l = prop_oneof![
        proptest::sample::select(vec!["p0", "p1", "p2", "x0", "x1", "x3"]).prop_map(str::to_string),
        (-3i64..4).prop_map(|n| format!("({n})")),
    ];
    l.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            inner.prop_map(|a| format!("exp(({a})/5)")),
        ]
    })
}

fn rf(s: &str) -> RatFunc {
    parse(s).unwrap().to_rf().unwrap()
}

fn points(seed: u64, n: usize) -> Vec<BTreeMap<String, f64>> {
    sample_values(seed, n, false, &Default::default())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    #[test]
    fn normalization_is_idempotent(s in expr()) {
        let n1 = parse(&s).unwrap().normalize().unwrap();
        let n2 = n1.normalize().unwrap();
        prop_assert_eq!(n1, n2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 300, ..ProptestConfig::default() })]

    #[test]
    fn normalization_is_sound(s in expr(), seed in 0u64..1000) {
        let e = parse(&s).unwrap();
        let n = e.normalize().unwrap();
        let f = Default::default();
        for pt in points(seed, 5) {
            let (Ok(a), Ok(b)) = (eval(&e, &pt, &f), eval(&n, &pt, &f)) else { continue };
            if !a.is_finite() || a.abs() > 1e8 {
                continue;
            }
            prop_assert!(close(a, b, 1e-9), "{} vs {} for {}", a, b, s);
        }
    }

    #[test]
    fn diff_agrees_with_dual_numbers(s in expr(), v in proptest::sample::select(SYMS.to_vec())) {
        let e = parse(&s).unwrap();
        let d = diff(&e, v).unwrap();
        let f = Default::default();
        let dir: BTreeMap<String, f64> = [(v.to_string(), 1.0)].into_iter().collect();
        for pt in points(7, 20) {
            let (Ok(dual), Ok(sym)) = (eval_dual(&e, &pt, &dir, &f), eval(&d, &pt, &f)) else { continue };
            if !sym.is_finite() || sym.abs() > 1e8 {
                continue;
            }
            prop_assert!(close(dual.eps, sym, DERIVATIVE_TOL), "{} vs {} for d/d{} {}", dual.eps, sym, v, s);
        }
    }

    #[test]
    fn diff_is_linear_and_leibniz(a in expr(), b in expr(), v in proptest::sample::select(SYMS.to_vec())) {
        let (ra, rb) = (rf(&a), rf(&b));
        let sum = ra.add(&rb).diff(v).sub(&ra.diff(v).add(&rb.diff(v)));
        prop_assert!(sum.is_zero());
        let lhs = ra.mul(&rb).diff(v);
        let rhs = ra.diff(v).mul(&rb).add(&ra.mul(&rb.diff(v)));
        prop_assert!(lhs.sub(&rhs).is_zero());
    }

    #[test]
    fn arithmetic_laws(a in expr(), b in expr(), c in expr()) {
        let (a, b, c) = (rf(&a), rf(&b), rf(&c));
        prop_assert!(a.mul(&b.add(&c)).sub(&a.mul(&b).add(&a.mul(&c))).is_zero());
        prop_assert!(a.sub(&a).is_zero());
        if !b.is_zero() {
            prop_assert!(a.mul(&b).div(&b).unwrap().sub(&a).is_zero());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 60, ..ProptestConfig::default() })]

    /// Truncation error of the order-k series shrinks like eps^(k+1).
    #[test]
    fn series_ratio_test(c1 in -3i64..4, c2 in 1i64..4, k in 0usize..3) {
        let text = format!(
            "kappa*(1 - exp(-({c1})*P/kappa)) + ({c2})*Q^2/kappa + sqrt(1 + Q/kappa^2)*exp(Q/kappa)"
        );
        let e = parse_with(&text, &Registry::permissive()).unwrap();
        let s = series(&e, "kappa", Center::Infinity, k).unwrap();
        let vals = |eps: f64| -> BTreeMap<String, f64> {
            [("kappa", 1.0 / eps), ("P", 0.8), ("Q", 0.6)].iter().map(|(a, b)| (a.to_string(), *b)).collect()
        };
        let err = |eps: f64| {
            let exact = eval(&e, &vals(eps), &Default::default()).unwrap();
            (exact - s.eval_at(eps, &vals(eps)).unwrap()).abs()
        };
        let (e1, e2) = (err(1e-2), err(1e-3));
        let expected = 10f64.powi(k as i32 + 1);
        prop_assert!(e2 < 1e-10 || e1 / e2 > expected / 4.0, "k={} {} {}", k, e1, e2);
    }

    #[test]
    fn poisson_bracket_laws(a in poly_expr(), b in poly_expr(), c in poly_expr()) {
        let (a, b, c) = (rf(&a), rf(&b), rf(&c));
        let ab = poisson(&a, &b).unwrap();
        prop_assert!(ab.add(&poisson(&b, &a).unwrap()).is_zero());
        let lin = poisson(&a, &b.add(&c).scale(&q(3))).unwrap();
        prop_assert!(lin.sub(&ab.add(&poisson(&a, &c).unwrap()).scale(&q(3))).is_zero());
        let leib = poisson(&a, &b.mul(&c)).unwrap();
        let want = ab.mul(&c).add(&b.mul(&poisson(&a, &c).unwrap()));
        prop_assert!(leib.sub(&want).is_zero());
        prop_assert!(jacobiator(Engine::Poisson, &a, &b, &c).unwrap().is_zero());
    }
}

fn table_poly() -> impl Strategy<Value = String> {
    let l = prop_oneof![
        proptest::sample::select(vec!["P0", "P1", "P2", "X0", "X1", "N1", "M2"]).prop_map(str::to_string),
        (-3i64..4).prop_map(|n| format!("({n})")),
    ];
    l.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("({a} * {b})")),
        ]
    })
}

fn dsr1_algebra() -> (AbstractAlgebra, Registry) {
    let b = builtin_basis("dsr1").unwrap();
    (b.algebra(&b.names.all()).unwrap(), b.registry())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, ..ProptestConfig::default() })]

    #[test]
    fn table_bracket_laws(a in table_poly(), b in table_poly(), c in table_poly()) {
        let (alg, reg) = dsr1_algebra();
        let p = |s: &str| parse_with(s, &reg).unwrap().to_rf().unwrap();
        let (a, b, c) = (p(&a), p(&b), p(&c));
        let ab = table_bracket(&alg, &a, &b).unwrap();
        prop_assert!(ab.add(&table_bracket(&alg, &b, &a).unwrap()).is_zero());
        let lin = table_bracket(&alg, &a, &b.add(&c)).unwrap();
        prop_assert!(lin.sub(&ab.add(&table_bracket(&alg, &a, &c).unwrap())).is_zero());
        let leib = table_bracket(&alg, &a, &b.mul(&c)).unwrap();
        let want = ab.mul(&c).add(&b.mul(&table_bracket(&alg, &a, &c).unwrap()));
        prop_assert!(leib.sub(&want).is_zero());
        prop_assert!(jacobiator(Engine::Table(&alg), &a, &b, &c).unwrap().is_zero());
    }
}

/// Every generator pair: the claimed table, realized, equals the Poisson
/// bracket of the realizations.
fn engines_agree_on_all_pairs(name: &str, mode: EqualityMode) {
    let b = builtin_basis(name).unwrap();
    let alg = b.algebra(&b.names.all()).unwrap();
    let gens = b.generators();
    let opts = EqualOptions::default();
    for (i, g) in gens.iter().enumerate() {
        for h in &gens[i + 1..] {
            let t = table_bracket(&alg, &rf_sym(g), &rf_sym(h)).unwrap();
            let lhs = kpa_core::canonical::realize(&t.to_expr(), &b.realizations).unwrap();
            let rhs = poisson(&b.realizations[g], &b.realizations[h]).unwrap();
            let v = equal_rf(&lhs, &rhs, mode, &opts).unwrap();
            assert!(v.pass, "{name}: [{g}, {h}] table {lhs} vs poisson {rhs}");
        }
    }
}

fn rf_sym(s: &str) -> RatFunc {
    Expr::sym(s).to_rf().unwrap()
}

#[test]
fn engines_agree_dsr1_modulo_shell() {
    engines_agree_on_all_pairs("dsr1", EqualityMode::ModuloShell);
}

#[test]
fn engines_agree_dual_exact() {
    engines_agree_on_all_pairs("dual", EqualityMode::Exact);
}
