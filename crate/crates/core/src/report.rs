//! Per-relation verdicts and report serialization.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::expr::{equal_rf, numeric_compare, EqualOptions, EqualityMode, Evidence, NumericSpec, RatFunc};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    PassOnShell,
    Fail,
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::PassOnShell => "pass-on-shell",
            Status::Fail => "fail",
        }
    }

    pub fn is_pass(&self) -> bool {
        *self != Status::Fail
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Entry {
    pub suite: String,
    pub relation: String,
    pub paper_tag: String,
    pub mode: String,
    pub verdict: Status,
    pub residual: String,
    pub evidence: Option<Evidence>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Negative control: passes when the expected failure is observed.
    pub control: bool,
    pub seed: u64,
}

/// Shared settings for individual checks.
#[derive(Clone, Debug)]
pub struct CheckContext {
    pub numeric: NumericSpec,
    /// Forces every symbolic check into this mode.
    pub mode_override: Option<EqualityMode>,
    pub size_budget: usize,
}

impl Default for CheckContext {
    fn default() -> Self {
        CheckContext {
            numeric: NumericSpec::default(),
            mode_override: None,
            size_budget: 200_000,
        }
    }
}

const RESIDUAL_LIMIT: usize = 4000;

fn clip(s: String) -> String {
    if s.len() <= RESIDUAL_LIMIT {
        return s;
    }
    let mut cut = RESIDUAL_LIMIT;
    while !s.is_char_boundary(cut) {
        cut -= 1;
    }
    format!("{} ... ({} chars)", &s[..cut], s.len())
}

fn has_abstract(r: &RatFunc) -> bool {
    r.atoms().iter().any(|v| matches!(v, crate::expr::Var::Func { .. }))
}

/// One relation check: what it claims and the two sides to compare.
pub struct Claim<'a> {
    pub suite: &'a str,
    pub relation: String,
    pub tag: &'a str,
    pub lhs: RatFunc,
    pub rhs: RatFunc,
    pub mode: EqualityMode,
}

impl CheckContext {
    fn options(&self) -> EqualOptions {
        EqualOptions {
            numeric: self.numeric.clone(),
            size_budget: self.size_budget,
            funcs: Default::default(),
        }
    }

    fn effective(&self, mode: EqualityMode) -> EqualityMode {
        self.mode_override.unwrap_or(mode)
    }

    /// Symbolic verdict plus numeric spot-check. A symbolic pass that the
    /// numeric oracle contradicts is an internal error.
    pub fn check(&self, c: Claim<'_>) -> Result<Entry> {
        let mode = self.effective(c.mode);
        let v = equal_rf(&c.lhs, &c.rhs, mode, &self.options())?;
        let symbolic_only = has_abstract(&c.lhs) || has_abstract(&c.rhs);
        let mut note = None;
        let evidence = if v.numeric_only {
            if mode != EqualityMode::Numeric {
                note = Some("normal form over size budget; numeric verdict only".to_string());
            }
            v.evidence.clone()
        } else if symbolic_only {
            note = Some("abstract functions: symbolic check only".to_string());
            None
        } else {
            let ev = numeric_compare(
                &c.lhs.to_expr(),
                &c.rhs.to_expr(),
                &self.numeric,
                mode == EqualityMode::ModuloShell,
                &Default::default(),
            );
            if v.pass && !ev.pass {
                return Err(Error::Tripwire {
                    relation: c.relation,
                    detail: format!("max deviation {:.3e}, {} of {} points skipped", ev.max_dev, ev.skipped, ev.points),
                });
            }
            if !v.pass && ev.pass {
                note = Some("numeric oracle agrees; residual not reduced to zero by the normal form".to_string());
            }
            Some(ev)
        };
        let pass = v.pass;
        let verdict = match (pass, mode) {
            (false, _) => Status::Fail,
            (true, EqualityMode::ModuloShell) => Status::PassOnShell,
            (true, _) => Status::Pass,
        };
        let residual = match &v.residual {
            Some(r) => clip(r.to_string()),
            None => "-".to_string(),
        };
        Ok(Entry {
            suite: c.suite.to_string(),
            relation: c.relation,
            paper_tag: c.tag.to_string(),
            mode: mode.label().to_string(),
            verdict,
            residual,
            evidence,
            note,
            control: false,
            seed: self.numeric.seed,
        })
    }

    /// Checks every instance of a relation family and merges them into one
    /// entry: worst verdict, first failing residual, largest deviation.
    pub fn check_family(
        &self,
        suite: &str,
        text: &str,
        tag: &str,
        mode: EqualityMode,
        instances: Vec<(String, RatFunc, RatFunc)>,
    ) -> Result<Entry> {
        use rayon::prelude::*;
        let entries: Vec<Entry> = instances
            .into_par_iter()
            .map(|(label, lhs, rhs)| {
                self.check(Claim {
                    suite,
                    relation: label,
                    tag,
                    lhs,
                    rhs,
                    mode,
                })
            })
            .collect::<Result<_>>()?;
        Ok(merge(suite, text, tag, entries, self.numeric.seed))
    }

    /// Negative control: the claim must fail in `mode` (never overridden),
    /// with a numeric counterexample where the oracle applies.
    pub fn expect_failure(&self, c: Claim<'_>) -> Result<Entry> {
        let mode = c.mode;
        let v = equal_rf(&c.lhs, &c.rhs, mode, &self.options())?;
        let ev = numeric_compare(
            &c.lhs.to_expr(),
            &c.rhs.to_expr(),
            &self.numeric,
            mode == EqualityMode::ModuloShell,
            &Default::default(),
        );
        let numeric_applicable = ev.skipped < ev.points && !has_abstract(&c.lhs) && !has_abstract(&c.rhs);
        let failed = !v.pass && (!numeric_applicable || !ev.pass);
        Ok(Entry {
            suite: c.suite.to_string(),
            relation: format!("[control] {} fails", c.relation),
            paper_tag: c.tag.to_string(),
            mode: mode.label().to_string(),
            verdict: if failed { Status::Pass } else { Status::Fail },
            residual: v.residual.map(|r| clip(r.to_string())).unwrap_or_else(|| "-".into()),
            evidence: numeric_applicable.then_some(ev),
            note: Some("expected failure".to_string()),
            control: true,
            seed: self.numeric.seed,
        })
    }
}

/// Combines per-instance entries of one relation family.
pub fn merge(suite: &str, text: &str, tag: &str, entries: Vec<Entry>, seed: u64) -> Entry {
    let mode = entries.first().map(|e| e.mode.clone()).unwrap_or_else(|| "exact".into());
    let failed: Vec<&Entry> = entries.iter().filter(|e| !e.verdict.is_pass()).collect();
    let verdict = if !failed.is_empty() {
        Status::Fail
    } else if entries.iter().any(|e| e.verdict == Status::PassOnShell) {
        Status::PassOnShell
    } else {
        Status::Pass
    };
    let residual = match failed.first() {
        Some(e) => format!("{}: {}", e.relation, e.residual),
        None if entries.iter().all(|e| e.residual == "-") => "-".to_string(),
        None => "0".to_string(),
    };
    let evidence = entries
        .iter()
        .filter_map(|e| e.evidence.clone())
        .max_by(|a, b| a.max_dev.total_cmp(&b.max_dev));
    let mut notes: Vec<String> = entries.iter().filter_map(|e| e.note.clone()).collect();
    notes.dedup();
    let note = if entries.len() > 1 {
        let mut n = format!("{} instances", entries.len());
        for x in &notes {
            n.push_str("; ");
            n.push_str(x);
        }
        Some(n)
    } else {
        notes.into_iter().next()
    };
    Entry {
        suite: suite.to_string(),
        relation: text.to_string(),
        paper_tag: tag.to_string(),
        mode,
        verdict,
        residual,
        evidence,
        note,
        control: false,
        seed,
    }
}

/// Entry for a check decided outside the equality machinery.
pub fn plain_entry(suite: &str, relation: String, tag: &str, pass: bool, residual: String, seed: u64) -> Entry {
    Entry {
        suite: suite.to_string(),
        relation,
        paper_tag: tag.to_string(),
        mode: "exact".to_string(),
        verdict: if pass { Status::Pass } else { Status::Fail },
        residual: clip(residual),
        evidence: None,
        note: None,
        control: false,
        seed,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub basis: String,
    pub seed: u64,
    pub samples: usize,
    pub entries: Vec<Entry>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.verdict.is_pass())
    }

    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| !e.verdict.is_pass()).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self, color: bool) -> String {
        let paint = |s: &str, code: &str| {
            if color {
                format!("\x1b[{code}m{s}\x1b[0m")
            } else {
                s.to_string()
            }
        };
        let mut out = String::new();
        let _ = writeln!(
            out,
            "basis {}  seed {}  samples {}  (brackets are Poisson-side: [A,B] = i{{A,B}})",
            self.basis, self.seed, self.samples
        );
        let mut current = "";
        for e in &self.entries {
            if e.suite != current {
                current = &e.suite;
                let _ = writeln!(out, "\n== {current}");
            }
            let badge = match e.verdict {
                Status::Pass => paint("PASS", "32"),
                Status::PassOnShell => paint("PASS(on-shell)", "33"),
                Status::Fail => paint("FAIL", "31"),
            };
            let _ = writeln!(out, "{badge:<8} {:<10} {}  [{}]", e.paper_tag, e.relation, e.mode);
            if let Some(n) = &e.note {
                let _ = writeln!(out, "         note: {n}");
            }
            if !e.verdict.is_pass() || e.control {
                if e.residual != "0" && e.residual != "-" {
                    let _ = writeln!(out, "         residual: {}", e.residual);
                }
                if let Some(ev) = &e.evidence {
                    let pt: Vec<String> = ev.worst_point.iter().map(|(k, v)| format!("{k}={v:.6}")).collect();
                    let _ = writeln!(out, "         max deviation {:.3e} at {}", ev.max_dev, pt.join(" "));
                }
            }
        }
        let total = self.entries.len();
        let failed = self.failures();
        let _ = writeln!(out, "\n{} of {} checks passed", total - failed, total);
        out
    }
}

/// Counts per suite in declaration order.
pub fn summary(entries: &[Entry]) -> BTreeMap<String, (usize, usize)> {
    let mut m: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for e in entries {
        let s = m.entry(e.suite.clone()).or_default();
        s.1 += 1;
        if e.verdict.is_pass() {
            s.0 += 1;
        }
    }
    m
}
