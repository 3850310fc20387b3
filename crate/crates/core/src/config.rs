//! Configuration files: user bases, extra claimed relations and coproducts.
//!
//! ```text
//! [basis "mine"]
//! kind = momentum
//! f = kappa*ln(1 + p0/kappa)
//! g = 1
//! F = kappa*(exp(P0/kappa) - 1)
//! G = 1
//! shell = off
//! coproduct = primitive
//!
//! [relations "extra"]
//! bracket(M1, M2) = M3
//! ```
//!
//! A basis section may instead start from a built-in with `base = dsr1`
//! and override single pieces: `A`/`B`/`D`, `boost_i`, or any generator by
//! name (realizations are expressions over SR phase space).

use std::collections::BTreeMap;
use std::path::Path;

use crate::bases::{
    basis_from_functions, builtin_basis, builtin_coproduct, sr_expr, Basis, DefiningFunctions, DeformationTriple, Kind,
};
use crate::canonical::RelationTable;
use crate::hopf::Coproduct;
use crate::{Error, Result};

/// One `key = value` line with its 1-based line number.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    /// `basis` or `relations`.
    pub kind: String,
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    pub sections: Vec<Section>,
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { line, msg: msg.into() }
}

/// `[kind "name"]`
fn parse_header(s: &str, line: usize) -> Result<(String, String)> {
    let inner = s
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| err(line, format!("malformed section header '{s}'")))?
        .trim();
    let (kind, rest) = inner
        .split_once(char::is_whitespace)
        .ok_or_else(|| err(line, "section header needs a quoted name, e.g. [basis \"mine\"]"))?;
    let name = rest
        .trim()
        .strip_prefix('"')
        .and_then(|t| t.strip_suffix('"'))
        .ok_or_else(|| err(line, "section name must be double-quoted"))?;
    if !matches!(kind, "basis" | "relations") {
        return Err(err(line, format!("unknown section kind '{kind}' (expected basis or relations)")));
    }
    if name.is_empty() {
        return Err(err(line, "empty section name"));
    }
    Ok((kind.to_string(), name.to_string()))
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut sections: Vec<Section> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let s = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if s.is_empty() {
                continue;
            }
            if s.starts_with('[') {
                let (kind, name) = parse_header(s, line)?;
                sections.push(Section {
                    kind,
                    name,
                    line,
                    entries: Vec::new(),
                });
                continue;
            }
            let (key, value) = s
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected 'key = value', found '{s}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(err(line, "empty key or value"));
            }
            let sec = sections
                .last_mut()
                .ok_or_else(|| err(line, "entry outside of any section"))?;
            sec.entries.push(Entry {
                line,
                key: key.to_string(),
                value: value.to_string(),
            });
        }
        Ok(Config { sections })
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        Config::parse(&text)
    }

    /// Builds the basis of the section named `name`, or the first basis
    /// section when `name` is `None`. Every `[relations]` section is
    /// attached as extra claims.
    pub fn basis(&self, name: Option<&str>) -> Result<Basis> {
        let sec = self
            .sections
            .iter()
            .filter(|s| s.kind == "basis")
            .find(|s| name.is_none_or(|n| s.name == n))
            .ok_or_else(|| match name {
                Some(n) => err(0, format!("no [basis \"{n}\"] section")),
                None => err(0, "no [basis] section"),
            })?;
        let mut basis = build_basis(sec)?;
        for rs in self.sections.iter().filter(|s| s.kind == "relations") {
            basis.user_relations.push(build_relations(rs, &basis)?);
        }
        Ok(basis)
    }
}

fn take<'a>(entries: &'a [Entry], key: &str) -> Result<Option<&'a Entry>> {
    let mut found = entries.iter().filter(|e| e.key == key);
    let first = found.next();
    if let Some(dup) = found.next() {
        return Err(err(dup.line, format!("duplicate key '{key}'")));
    }
    Ok(first)
}

fn at_line<T>(line: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config { line: 0, msg } => err(line, msg),
        Error::Config { .. } => e,
        other => err(line, other.to_string()),
    })
}

fn build_basis(sec: &Section) -> Result<Basis> {
    const KNOWN: [&str; 11] = ["base", "kind", "f", "g", "F", "G", "shell", "A", "B", "D", "coproduct"];
    let get = |k: &str| take(&sec.entries, k);
    let shell = match get("shell")? {
        None => None,
        Some(e) => Some(match e.value.as_str() {
            "on" => true,
            "off" => false,
            v => return Err(err(e.line, format!("shell must be 'on' or 'off', found '{v}'"))),
        }),
    };
    let kind = match get("kind")? {
        None => None,
        Some(e) => Some(
            Kind::parse(&e.value)
                .ok_or_else(|| err(e.line, format!("kind must be 'momentum' or 'spacetime', found '{}'", e.value)))?,
        ),
    };
    let fns: Vec<Option<&Entry>> = ["f", "g", "F", "G"].iter().map(|k| get(k)).collect::<Result<_>>()?;
    let any_fn = fns.iter().any(Option::is_some);

    let mut basis = match get("base")? {
        Some(e) => {
            if any_fn {
                let l = fns.iter().flatten().next().map_or(e.line, |x| x.line);
                return Err(err(l, "f/g/F/G cannot be combined with 'base'"));
            }
            let mut b = at_line(e.line, builtin_basis(&e.value))?;
            if let Some(k) = kind {
                if k != b.kind {
                    return Err(err(sec.line, format!("kind '{}' conflicts with base '{}'", k.label(), e.value)));
                }
            }
            if let Some(s) = shell {
                b.shell = s;
            }
            b.name = sec.name.clone();
            b
        }
        None => {
            let kind = kind.ok_or_else(|| err(sec.line, "basis needs 'base' or 'kind' with f, g, F, G"))?;
            let mut vals = Vec::new();
            for (k, e) in ["f", "g", "F", "G"].iter().zip(&fns) {
                vals.push(e.ok_or_else(|| err(sec.line, format!("missing key '{k}'")))?);
            }
            for e in &vals {
                at_line(e.line, crate::expr::parse_with(&e.value, &crate::expr::Registry::permissive()).map_err(Error::from))?;
            }
            let df = DefiningFunctions::parse(kind, &vals[0].value, &vals[1].value, &vals[2].value, &vals[3].value);
            let df = at_line(vals[0].line, df)?;
            at_line(sec.line, basis_from_functions(df, &sec.name, shell.unwrap_or(false)))?
        }
    };

    let abd: Vec<Option<&Entry>> = ["A", "B", "D"].iter().map(|k| get(k)).collect::<Result<_>>()?;
    if abd.iter().any(Option::is_some) {
        let show = |r: &crate::expr::RatFunc| r.to_string();
        let t = &basis.triple;
        let a = abd[0].map_or_else(|| show(&t.a), |e| e.value.clone());
        let b = abd[1].map_or_else(|| show(&t.b), |e| e.value.clone());
        let d = abd[2].map_or_else(|| show(&t.d), |e| e.value.clone());
        let line = abd.iter().flatten().next().unwrap().line;
        basis.triple = at_line(line, DeformationTriple::parse(basis.kind, &a, &b, &d))?;
        basis.triple_source = "override".into();
    }

    // Generator realizations: `boost_i` or the generator's own name.
    let all = basis.names.all();
    for e in &sec.entries {
        if KNOWN.contains(&e.key.as_str()) || e.key.starts_with("coproduct ") {
            continue;
        }
        let target = match e.key.strip_prefix("boost_") {
            Some(i) => match i.parse::<usize>() {
                Ok(i @ 1..=3) => basis.names.boost[i - 1].clone(),
                _ => return Err(err(e.line, format!("boost index must be 1, 2 or 3 in '{}'", e.key))),
            },
            None if all.contains(&e.key) => e.key.clone(),
            None => return Err(err(e.line, format!("unknown key '{}'", e.key))),
        };
        let r = at_line(e.line, sr_expr(&e.value))?;
        for s in r.symbols() {
            let ok = crate::expr::RESERVED.contains(&s.as_str());
            if !ok {
                return Err(err(e.line, format!("realization of {target} uses '{s}', not an SR phase-space symbol")));
            }
        }
        basis.realizations.insert(target, r);
    }

    // Coproducts: a built-in name for the deformed sector, or explicit lines.
    let deformed = basis.names.deformed(basis.kind).to_vec();
    let partner = basis.names.partner(basis.kind).to_vec();
    let lines: Vec<&Entry> = sec.entries.iter().filter(|e| e.key.starts_with("coproduct ")).collect();
    let builtin = get("coproduct")?;
    if builtin.is_some() && !lines.is_empty() {
        return Err(err(lines[0].line, "use either 'coproduct = <name>' or per-generator coproduct lines"));
    }
    if let Some(e) = builtin {
        let c = at_line(e.line, builtin_coproduct(&e.value, &deformed))?;
        basis.coproducts = Some(sector_pair(&basis, c, Coproduct::primitive("primitive", &partner)));
    } else if !lines.is_empty() {
        let mut pairs = Vec::new();
        let mut sector: Option<Vec<String>> = None;
        for e in &lines {
            let g = e.key["coproduct ".len()..].trim().to_string();
            let s = if deformed.contains(&g) {
                deformed.clone()
            } else if partner.contains(&g) {
                partner.clone()
            } else {
                return Err(err(e.line, format!("coproduct of unknown generator '{g}'")));
            };
            if sector.as_ref().is_some_and(|x| *x != s) {
                return Err(err(e.line, "coproduct lines must all belong to one sector"));
            }
            sector = Some(s);
            pairs.push((g, e.value.clone()));
        }
        let s = sector.unwrap();
        let line = lines[0].line;
        let c = at_line(line, Coproduct::from_lines(&sec.name, &s, &pairs))?;
        let other = if s == deformed { &partner } else { &deformed };
        basis.coproducts = Some(sector_pair(&basis, c, Coproduct::primitive("primitive", other)));
    }
    Ok(basis)
}

/// Orders a coproduct pair as `(momenta, coordinates)`.
fn sector_pair(b: &Basis, a: Coproduct, c: Coproduct) -> (Coproduct, Coproduct) {
    if a.sector == b.names.mom {
        (a, c)
    } else {
        (c, a)
    }
}

/// `bracket(A, B) = rhs` lines; relations are tagged `cfg:L<line>`.
fn build_relations(sec: &Section, basis: &Basis) -> Result<RelationTable> {
    let mut t = RelationTable::new(&sec.name, &basis.names.all());
    for e in &sec.entries {
        let args = e
            .key
            .strip_prefix("bracket")
            .map(str::trim)
            .and_then(|k| k.strip_prefix('('))
            .and_then(|k| k.strip_suffix(')'))
            .ok_or_else(|| err(e.line, format!("expected 'bracket(A, B) = <expr>', found '{}'", e.key)))?;
        let (a, b) = args
            .split_once(',')
            .ok_or_else(|| err(e.line, "bracket needs two generators"))?;
        let (a, b) = (a.trim(), b.trim());
        at_line(e.line, t.add(a, b, &e.value, &format!("cfg:L{}", e.line)))?;
    }
    Ok(t)
}

/// `sr`, `dsr1`, `dual`, a config path, or `path:section`.
pub fn load_basis(selector: &str) -> Result<Basis> {
    if crate::bases::BUILTIN.contains(&selector) {
        return builtin_basis(selector);
    }
    let (path, name) = match selector.rsplit_once(':') {
        Some((p, n)) if !Path::new(selector).exists() && Path::new(p).exists() => (p, Some(n)),
        _ => (selector, None),
    };
    if !Path::new(path).exists() {
        return Err(Error::UnknownBasis(selector.to_string()));
    }
    Config::load(Path::new(path))?.basis(name)
}

/// Keys understood in a basis section, for help output.
pub fn basis_keys() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        ("base", "start from a built-in basis (sr, dsr1, dual)"),
        ("kind", "momentum | spacetime"),
        ("f, g", "deformed scalars from SR ones"),
        ("F, G", "inverse functions"),
        ("shell", "on | off: compare shell-dependent identities modulo the mass shell"),
        ("A, B, D", "override the claimed boost coefficients"),
        ("boost_i", "override the realization of boost i"),
        ("coproduct", "built-in coproduct of the deformed sector"),
        ("coproduct <gen>", "explicit coproduct line"),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::Family;

    #[test]
    fn mutant_override() {
        let c = Config::parse("[basis \"mut\"]\nbase = dsr1\nB = 1/kappa\n").unwrap();
        let b = c.basis(None).unwrap();
        assert_eq!(b.family, Family::Dsr1);
        assert_eq!(b.triple_source, "override");
        assert_eq!(b.triple.b, sr_expr("1/kappa").unwrap());
    }

    #[test]
    fn functions_basis_and_relations() {
        let text = "# comment\n[basis \"id\"]\nkind = momentum\nf = p0\ng = 1\nF = P0\nG = 1\ncoproduct = primitive\n\n[relations \"r\"]\nbracket(M1, M2) = M3\n";
        let b = Config::parse(text).unwrap().basis(Some("id")).unwrap();
        assert_eq!(b.triple, DeformationTriple::poincare(Kind::Momentum));
        assert_eq!(b.user_relations[0].relations[0].tag, "cfg:L11");
        assert!(b.coproducts.unwrap().0.is_primitive());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = Config::parse("[basis \"x\"]\nkind = momentum\nf = p0 +\ng = 1\nF = P0\nG = 1\n").unwrap();
        match bad.basis(None) {
            Err(Error::Config { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match Config::parse("[basis \"x\"]\nnonsense\n") {
            Err(Error::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_inverse_functions_rejected() {
        let c = Config::parse("[basis \"x\"]\nkind = momentum\nf = 2*p0\ng = 1\nF = P0\nG = 1\n").unwrap();
        assert!(c.basis(None).is_err());
    }
}
