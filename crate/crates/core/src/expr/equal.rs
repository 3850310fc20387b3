//! Equality verdicts: exact normal-form comparison, comparison modulo the
//! mass shell, and the sampled numeric oracle.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::ast::Expr;
use super::eval::{eval, FunctionBindings};
use super::rf::RatFunc;
use super::sample::sample_values;
use super::ExprError;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const ABS_FLOOR: f64 = 1e-12;
pub const DERIVATIVE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EqualityMode {
    Exact,
    ModuloShell,
    Numeric,
}

impl EqualityMode {
    pub fn label(&self) -> &'static str {
        match self {
            EqualityMode::Exact => "exact",
            EqualityMode::ModuloShell => "shell",
            EqualityMode::Numeric => "numeric",
        }
    }
}

#[derive(Clone, Debug)]
pub struct NumericSpec {
    pub seed: u64,
    pub points: usize,
    pub tol: f64,
}

impl Default for NumericSpec {
    fn default() -> Self {
        NumericSpec {
            seed: 42,
            points: 100,
            tol: DEFAULT_TOL,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Evidence {
    pub points: usize,
    pub skipped: usize,
    pub max_dev: f64,
    pub worst_point: BTreeMap<String, f64>,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub pass: bool,
    pub mode: EqualityMode,
    /// Normalised difference (zero on an exact pass).
    pub residual: Option<RatFunc>,
    pub numeric_only: bool,
    pub evidence: Option<Evidence>,
}

/// Replaces `psq`/`xsq` by the explicit sums of squares.
pub fn expand_squares(r: &RatFunc) -> Result<RatFunc, ExprError> {
    let mut map = BTreeMap::new();
    if r.depends_on("psq") {
        map.insert("psq".to_string(), super::parse::ex("p1^2 + p2^2 + p3^2").to_rf()?);
    }
    if r.depends_on("xsq") {
        map.insert("xsq".to_string(), super::parse::ex("x1^2 + x2^2 + x3^2").to_rf()?);
    }
    r.subst(&map)
}

/// Restricts to the positive-energy mass shell: `p0 -> sqrt(m^2 + p.p)`.
pub fn apply_shell(r: &RatFunc) -> Result<RatFunc, ExprError> {
    let r = expand_squares(r)?;
    let root = super::parse::ex("sqrt(m^2 + p1^2 + p2^2 + p3^2)").to_rf()?;
    r.subst1("p0", &root)
}

pub struct EqualOptions {
    pub numeric: NumericSpec,
    pub size_budget: usize,
    pub funcs: FunctionBindings,
}

impl Default for EqualOptions {
    fn default() -> Self {
        EqualOptions {
            numeric: NumericSpec::default(),
            size_budget: 200_000,
            funcs: FunctionBindings::new(),
        }
    }
}

/// Sampled comparison. Points where either side is outside its domain are
/// skipped and counted.
pub fn numeric_compare(
    a: &Expr,
    b: &Expr,
    spec: &NumericSpec,
    on_shell: bool,
    funcs: &FunctionBindings,
) -> Evidence {
    let mut syms: BTreeSet<String> = a.symbols();
    syms.extend(b.symbols());
    let pts = sample_values(spec.seed, spec.points, on_shell, &syms);
    let mut max_dev = 0.0f64;
    let mut worst = BTreeMap::new();
    let mut skipped = 0;
    let mut pass = true;
    for v in &pts {
        let (va, vb) = match (eval(a, v, funcs), eval(b, v, funcs)) {
            (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => (x, y),
            _ => {
                skipped += 1;
                continue;
            }
        };
        let scale = va.abs().max(vb.abs());
        let diff = (va - vb).abs();
        let dev = diff / scale.max(ABS_FLOOR / spec.tol);
        if diff > spec.tol * scale + ABS_FLOOR {
            pass = false;
        }
        if dev > max_dev || worst.is_empty() {
            max_dev = dev.max(max_dev);
            worst = v
                .iter()
                .filter(|(k, _)| syms.contains(*k) || super::parse::RESERVED.contains(&k.as_str()))
                .map(|(k, x)| (k.clone(), *x))
                .collect();
        }
    }
    if skipped == pts.len() {
        pass = false;
    }
    Evidence {
        points: pts.len(),
        skipped,
        max_dev,
        worst_point: worst,
        pass,
    }
}

/// Compares two expressions under `mode`.
pub fn equal(a: &Expr, b: &Expr, mode: EqualityMode, opts: &EqualOptions) -> Result<Verdict, ExprError> {
    if mode == EqualityMode::Numeric {
        let ev = numeric_compare(a, b, &opts.numeric, false, &opts.funcs);
        return Ok(Verdict {
            pass: ev.pass,
            mode,
            residual: None,
            numeric_only: true,
            evidence: Some(ev),
        });
    }
    let ra = a.to_rf()?;
    let rb = b.to_rf()?;
    equal_rf(&ra, &rb, mode, opts)
}

pub fn equal_rf(a: &RatFunc, b: &RatFunc, mode: EqualityMode, opts: &EqualOptions) -> Result<Verdict, ExprError> {
    let over_budget = a.size() + b.size() > opts.size_budget;
    if mode == EqualityMode::Numeric || over_budget {
        let on_shell = mode == EqualityMode::ModuloShell;
        let ev = numeric_compare(&a.to_expr(), &b.to_expr(), &opts.numeric, on_shell, &opts.funcs);
        return Ok(Verdict {
            pass: ev.pass,
            mode,
            residual: None,
            numeric_only: true,
            evidence: Some(ev),
        });
    }
    let mut diff = expand_squares(&a.sub(b))?;
    if mode == EqualityMode::ModuloShell {
        diff = apply_shell(&diff)?;
    }
    Ok(Verdict {
        pass: diff.is_zero(),
        mode,
        residual: Some(diff),
        numeric_only: false,
        evidence: None,
    })
}
