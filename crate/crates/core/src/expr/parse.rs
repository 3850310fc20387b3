//! Precedence-climbing parser for the expression grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := integer | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```

use std::collections::{BTreeMap, BTreeSet};

use super::ast::{as_integer, Expr, Func};
use super::ExprError;

pub const RESERVED: [&str; 11] = [
    "x0", "x1", "x2", "x3", "p0", "p1", "p2", "p3", "kappa", "kappabar", "m",
];

/// Names the parser accepts: plain symbols, abstract functions with their
/// arity, and sugar names that expand to a fixed expression.
#[derive(Clone, Debug)]
pub struct Registry {
    symbols: BTreeSet<String>,
    functions: BTreeMap<String, usize>,
    sugar: BTreeMap<String, Expr>,
    permissive: bool,
}

impl Default for Registry {
    fn default() -> Self {
        let mut r = Registry {
            symbols: RESERVED.iter().map(|s| s.to_string()).collect(),
            functions: BTreeMap::new(),
            sugar: BTreeMap::new(),
            permissive: false,
        };
        r.symbols.insert("psq".into());
        r.symbols.insert("xsq".into());
        for (name, e) in sr_generators() {
            r.sugar.insert(name, e);
        }
        r
    }
}

/// `m_i = eps_ijk x_j p_k` and `n_i = x_i p0 - x0 p_i` written out.
pub fn sr_generators() -> Vec<(String, Expr)> {
    let x = |i: usize| Expr::sym(&format!("x{i}"));
    let p = |i: usize| Expr::sym(&format!("p{i}"));
    let mut out = Vec::new();
    for i in 1..=3 {
        let (j, k) = (i % 3 + 1, (i + 1) % 3 + 1);
        out.push((format!("m{i}"), x(j) * p(k) - x(k) * p(j)));
    }
    for i in 1..=3 {
        out.push((format!("n{i}"), x(i) * p(0) - x(0) * p(i)));
    }
    out
}

impl Registry {
    /// Accepts every identifier as a symbol; for internally written formulas.
    pub fn permissive() -> Self {
        Registry {
            permissive: true,
            ..Registry::default()
        }
    }

    pub fn with_symbol(mut self, name: &str) -> Self {
        self.add_symbol(name);
        self
    }

    /// Declares a plain symbol; it shadows any sugar of the same name.
    pub fn add_symbol(&mut self, name: &str) {
        self.sugar.remove(name);
        self.symbols.insert(name.to_string());
    }

    pub fn add_function(&mut self, name: &str, arity: usize) {
        self.functions.insert(name.to_string(), arity);
    }

    pub fn add_sugar(&mut self, name: &str, e: Expr) {
        self.symbols.remove(name);
        self.sugar.insert(name.to_string(), e);
    }

    pub fn function_arity(&self, name: &str) -> Option<usize> {
        self.functions.get(name).copied()
    }

    pub fn known(&self) -> Vec<String> {
        self.symbols
            .iter()
            .chain(self.sugar.keys())
            .cloned()
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(String),
    Ident(String),
    Op(char),
}

struct Lexed {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Lexed>, ExprError> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && (chars[i] == '.' || chars[i].is_ascii_alphabetic()) {
                return Err(ExprError::Syntax {
                    line,
                    col: col + (i - start),
                    msg: "only integers and ratios a/b are allowed".into(),
                });
            }
            col += i - start;
            out.push(Lexed {
                tok: Tok::Int(chars[start..i].iter().collect()),
                line: l0,
                col: c0,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Lexed {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: l0,
                col: c0,
            });
            continue;
        }
        if "+-*/^(),".contains(c) {
            out.push(Lexed {
                tok: Tok::Op(c),
                line: l0,
                col: c0,
            });
            col += 1;
            i += 1;
            continue;
        }
        return Err(ExprError::Syntax {
            line,
            col,
            msg: format!("unexpected character '{c}'"),
        });
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Lexed>,
    pos: usize,
    reg: &'a Registry,
    end: (usize, usize),
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|l| &l.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|l| (l.line, l.col))
            .unwrap_or(self.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ExprError> {
        let (line, col) = self.here();
        Err(ExprError::Syntax {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat('+') {
                terms.push(self.term()?);
            } else if self.eat('-') {
                terms.push(-self.term()?);
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Expr::Add(terms) })
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut fs = vec![self.unary()?];
        loop {
            if self.eat('*') {
                fs.push(self.unary()?);
            } else if self.eat('/') {
                fs.push(self.unary()?.recip());
            } else {
                break;
            }
        }
        Ok(if fs.len() == 1 { fs.pop().unwrap() } else { Expr::Mul(fs) })
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            let inner = self.unary()?;
            return Ok(match inner {
                Expr::Num(q) => Expr::Num(-q),
                other => -other,
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat('^') {
            let at = self.here();
            let e = self.unary()?;
            return match as_integer(&e) {
                Some(n) => Ok(base.pow(n)),
                None => Err(ExprError::Syntax {
                    line: at.0,
                    col: at.1,
                    msg: "exponent must be an integer constant".into(),
                }),
            };
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let (line, col) = self.here();
        match self.peek().cloned() {
            Some(Tok::Int(s)) => {
                self.pos += 1;
                let n: num_bigint::BigInt = s.parse().map_err(|_| ExprError::Syntax {
                    line,
                    col,
                    msg: "bad integer".into(),
                })?;
                Ok(Expr::Num(num_rational::BigRational::from_integer(n)))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::Op('(')) {
                    self.pos += 1;
                    let mut args = vec![self.expr()?];
                    while self.eat(',') {
                        args.push(self.expr()?);
                    }
                    if !self.eat(')') {
                        return self.err("expected ')'");
                    }
                    let func = if let Some(f) = Func::builtin(&name) {
                        if args.len() != 1 {
                            return Err(ExprError::Syntax {
                                line,
                                col,
                                msg: format!("{name} takes one argument"),
                            });
                        }
                        f
                    } else if let Some(&arity) = self.reg.functions.get(&name) {
                        if args.len() != arity {
                            return Err(ExprError::Syntax {
                                line,
                                col,
                                msg: format!("{name} takes {arity} arguments"),
                            });
                        }
                        Func::abstract_fn(&name, arity)
                    } else if self.reg.permissive {
                        Func::abstract_fn(&name, args.len())
                    } else {
                        return Err(ExprError::UnknownIdentifier {
                            name,
                            line,
                            col,
                            known: self.reg.known(),
                        });
                    };
                    return Ok(Expr::Call(func, args));
                }
                if let Some(e) = self.reg.sugar.get(&name) {
                    return Ok(e.clone());
                }
                if self.reg.symbols.contains(&name) || self.reg.permissive {
                    return Ok(Expr::sym(&name));
                }
                Err(ExprError::UnknownIdentifier {
                    name,
                    line,
                    col,
                    known: self.reg.known(),
                })
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return self.err("expected ')'");
                }
                Ok(e)
            }
            Some(Tok::Op(c)) => self.err(format!("unexpected '{c}'")),
            None => self.err("unexpected end of input"),
        }
    }
}

pub fn parse_with(text: &str, reg: &Registry) -> Result<Expr, ExprError> {
    let toks = lex(text)?;
    let end = {
        let lines: Vec<&str> = text.split('\n').collect();
        (lines.len(), lines.last().map(|l| l.chars().count() + 1).unwrap_or(1))
    };
    let mut p = Parser {
        toks,
        pos: 0,
        reg,
        end,
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("unexpected trailing input");
    }
    Ok(e)
}

/// Parses against the default registry (reserved symbols plus `m_i`/`n_i`).
pub fn parse(text: &str) -> Result<Expr, ExprError> {
    parse_with(text, &Registry::default())
}

/// Parses internally written formulas where every identifier is a symbol.
pub(crate) fn ex(text: &str) -> Expr {
    parse_with(text, &Registry::permissive()).unwrap_or_else(|e| panic!("bad formula {text:?}: {e}"))
}
