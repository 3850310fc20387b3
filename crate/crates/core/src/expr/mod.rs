//! Symbolic expressions over the rationals with `exp`, `ln`, `sqrt`,
//! hyperbolic functions and abstract user functions.
//!
//! Expressions are parsed into [`Expr`] trees and normalised into
//! [`RatFunc`], a canonical rational function in symbols and transcendental
//! atoms. Two expressions are equal iff their normalised difference is zero.

mod ast;
mod equal;
mod eval;
mod parse;
mod poly;
mod rf;
mod sample;
mod series;

use std::collections::{BTreeMap, BTreeSet};

pub use ast::{Expr, Func};
pub use equal::{
    apply_shell, equal, equal_rf, expand_squares, numeric_compare, EqualOptions, EqualityMode, Evidence, NumericSpec,
    Verdict, ABS_FLOOR, DEFAULT_TOL, DERIVATIVE_TOL,
};
pub use eval::{eval, eval_dual, eval_generic, Dual, FunctionBindings, FunctionDef, Scalar};
pub use parse::{parse, parse_with, sr_generators, Registry, RESERVED};
pub use poly::{q, q2, Monomial, Poly, Var, Q};
pub use rf::RatFunc;
pub use sample::{sample_point, sample_values, PhasePoint};
pub use series::{series, Center, SeriesPoly};


#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown identifier '{name}' at {line}:{col} (known: {})", known.join(", "))]
    UnknownIdentifier {
        name: String,
        line: usize,
        col: usize,
        known: Vec<String>,
    },
    #[error("division by zero")]
    DivisionByZero,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("normalization failed: {0}")]
    Normalization(String),
    #[error("unbound symbol '{0}'")]
    Unbound(String),
    #[error("unbound function '{0}'")]
    UnboundFunction(String),
    #[error("cyclic binding through '{0}'")]
    CyclicBinding(String),
    #[error("pole: {0}")]
    Pole(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// Normalised partial derivative.
pub fn diff(e: &Expr, s: &str) -> Result<Expr, ExprError> {
    Ok(e.to_rf()?.diff(s).to_expr())
}

/// Substitutes symbols by expressions. Bindings may refer to each other;
/// they are resolved transitively and cycles are rejected.
pub fn subst(e: &Expr, bindings: &BTreeMap<String, Expr>) -> Result<Expr, ExprError> {
    fn resolve(
        name: &str,
        bindings: &BTreeMap<String, Expr>,
        done: &mut BTreeMap<String, Expr>,
        stack: &mut Vec<String>,
    ) -> Result<Expr, ExprError> {
        if let Some(e) = done.get(name) {
            return Ok(e.clone());
        }
        if stack.iter().any(|s| s == name) {
            return Err(ExprError::CyclicBinding(name.to_string()));
        }
        stack.push(name.to_string());
        let body = &bindings[name];
        let mut inner = BTreeMap::new();
        for s in body.symbols() {
            if bindings.contains_key(&s) && s != name {
                inner.insert(s.clone(), resolve(&s, bindings, done, stack)?);
            } else if s == name {
                return Err(ExprError::CyclicBinding(name.to_string()));
            }
        }
        let out = body.subst_syms(&inner);
        stack.pop();
        done.insert(name.to_string(), out.clone());
        Ok(out)
    }
    let mut done = BTreeMap::new();
    let mut map = BTreeMap::new();
    let used: BTreeSet<String> = e.symbols();
    for s in used {
        if bindings.contains_key(&s) {
            let r = resolve(&s, bindings, &mut done, &mut Vec::new())?;
            map.insert(s, r);
        }
    }
    Ok(e.subst_syms(&map))
}
