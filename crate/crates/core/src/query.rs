//! Domain relational calculus queries: AST, parser, normalization, safety
//! check and the difference construction.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::schema::{DomainId, DomainKind, RelId, Schema};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(Value),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Like,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Like => "LIKE",
        }
    }

    /// The operator equivalent to the negation of `self`, if one exists.
    pub fn complement(self) -> Option<CmpOp> {
        match self {
            CmpOp::Eq => Some(CmpOp::Ne),
            CmpOp::Ne => Some(CmpOp::Eq),
            CmpOp::Lt => Some(CmpOp::Ge),
            CmpOp::Le => Some(CmpOp::Gt),
            CmpOp::Gt => Some(CmpOp::Le),
            CmpOp::Ge => Some(CmpOp::Lt),
            CmpOp::Like => None,
        }
    }

    pub fn is_order(self) -> bool {
        matches!(self, CmpOp::Lt | CmpOp::Le | CmpOp::Gt | CmpOp::Ge)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Rel { rel: RelId, name: String, terms: Vec<Term>, negated: bool },
    Cmp { lhs: Term, op: CmpOp, rhs: Term, negated: bool },
}

impl Atom {
    pub fn negated(&self) -> bool {
        match self {
            Atom::Rel { negated, .. } | Atom::Cmp { negated, .. } => *negated,
        }
    }

    pub fn with_negation_flipped(&self) -> Atom {
        let mut a = self.clone();
        match &mut a {
            Atom::Rel { negated, .. } | Atom::Cmp { negated, .. } => *negated = !*negated,
        }
        a
    }

    pub fn terms(&self) -> Vec<&Term> {
        match self {
            Atom::Rel { terms, .. } => terms.iter().collect(),
            Atom::Cmp { lhs, rhs, .. } => vec![lhs, rhs],
        }
    }

    pub fn vars(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for t in self.terms() {
            if let Term::Var(v) = t {
                if !out.contains(&v.as_str()) {
                    out.push(v);
                }
            }
        }
        out
    }

    fn rename(&mut self, map: &HashMap<String, String>) {
        let fix = |t: &mut Term| {
            if let Term::Var(v) = t {
                if let Some(n) = map.get(v) {
                    *v = n.clone();
                }
            }
        };
        match self {
            Atom::Rel { terms, .. } => terms.iter_mut().for_each(fix),
            Atom::Cmp { lhs, rhs, .. } => {
                fix(lhs);
                fix(rhs);
            }
        }
    }
}

/// Symbolic rendering used in legends and trees: `¬Likes(d2, b1)`,
/// `¬(d2 LIKE 'Eve %')`, and negated order comparisons shown flipped.
impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Rel { name, terms, negated, .. } => {
                if *negated {
                    write!(f, "¬")?;
                }
                write!(f, "{name}(")?;
                for (i, t) in terms.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
            Atom::Cmp { lhs, op, rhs, negated } => match (negated, op.complement()) {
                (false, _) => write!(f, "{lhs} {} {rhs}", op.symbol()),
                (true, Some(c)) => write!(f, "{lhs} {} {rhs}", c.symbol()),
                (true, None) => write!(f, "¬({lhs} {} {rhs})", op.symbol()),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(Atom),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
}

impl Formula {
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn negate(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        fn walk<'a>(f: &'a Formula, out: &mut Vec<&'a Atom>) {
            match f {
                Formula::Atom(a) => out.push(a),
                Formula::And(l, r) | Formula::Or(l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
                Formula::Not(c) | Formula::Exists(_, c) | Formula::Forall(_, c) => walk(c, out),
            }
        }
        walk(self, &mut out);
        out
    }

    /// Variables bound by some quantifier, in pre-order.
    pub fn bound_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        fn walk(f: &Formula, out: &mut Vec<String>) {
            match f {
                Formula::Atom(_) => {}
                Formula::And(l, r) | Formula::Or(l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
                Formula::Not(c) => walk(c, out),
                Formula::Exists(v, c) | Formula::Forall(v, c) => {
                    out.push(v.clone());
                    walk(c, out);
                }
            }
        }
        walk(self, &mut out);
        out
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(a) => match a {
                Atom::Rel { name, terms, negated, .. } => {
                    if *negated {
                        write!(f, "not ")?;
                    }
                    write!(f, "{name}(")?;
                    for (i, t) in terms.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{t}")?;
                    }
                    write!(f, ")")
                }
                Atom::Cmp { lhs, op, rhs, negated } => {
                    if *negated {
                        write!(f, "not ({lhs} {} {rhs})", op.symbol())
                    } else {
                        write!(f, "{lhs} {} {rhs}", op.symbol())
                    }
                }
            },
            Formula::And(l, r) => write!(f, "({l} and {r})"),
            Formula::Or(l, r) => write!(f, "({l} or {r})"),
            Formula::Not(c) => write!(f, "not ({c})"),
            Formula::Exists(v, c) => write!(f, "(exists {v} {c})"),
            Formula::Forall(v, c) => write!(f, "(forall {v} {c})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub output_vars: Vec<String>,
    pub formula: Formula,
    pub var_domains: BTreeMap<String, DomainId>,
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{ ({}) | {} }}", self.output_vars.join(", "), self.formula)
    }
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    LBrace,
    RBrace,
    LParen,
    RParen,
    Pipe,
    Comma,
    Ident(String),
    Str(String),
    Num(String),
    Op(CmpOp),
    Exists,
    Forall,
    And,
    Or,
    Not,
    Eof,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |offset: usize, message: &str| Error::Syntax { offset, message: message.to_string() };
    while i < chars.len() {
        let (pos, c) = chars[i];
        let next = chars.get(i + 1).map(|&(_, c)| c);
        match c {
            c if c.is_whitespace() => i += 1,
            '{' => {
                out.push((Tok::LBrace, pos));
                i += 1;
            }
            '}' => {
                out.push((Tok::RBrace, pos));
                i += 1;
            }
            '(' => {
                out.push((Tok::LParen, pos));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, pos));
                i += 1;
            }
            '|' => {
                out.push((Tok::Pipe, pos));
                i += 1;
            }
            ',' => {
                out.push((Tok::Comma, pos));
                i += 1;
            }
            '∃' => {
                out.push((Tok::Exists, pos));
                i += 1;
            }
            '∀' => {
                out.push((Tok::Forall, pos));
                i += 1;
            }
            '∧' => {
                out.push((Tok::And, pos));
                i += 1;
            }
            '∨' => {
                out.push((Tok::Or, pos));
                i += 1;
            }
            '¬' => {
                out.push((Tok::Not, pos));
                i += 1;
            }
            '≠' => {
                out.push((Tok::Op(CmpOp::Ne), pos));
                i += 1;
            }
            '≤' => {
                out.push((Tok::Op(CmpOp::Le), pos));
                i += 1;
            }
            '≥' => {
                out.push((Tok::Op(CmpOp::Ge), pos));
                i += 1;
            }
            '=' => {
                out.push((Tok::Op(CmpOp::Eq), pos));
                i += if next == Some('=') { 2 } else { 1 };
            }
            '!' if next == Some('=') => {
                out.push((Tok::Op(CmpOp::Ne), pos));
                i += 2;
            }
            '<' => match next {
                Some('=') => {
                    out.push((Tok::Op(CmpOp::Le), pos));
                    i += 2;
                }
                Some('>') => {
                    out.push((Tok::Op(CmpOp::Ne), pos));
                    i += 2;
                }
                _ => {
                    out.push((Tok::Op(CmpOp::Lt), pos));
                    i += 1;
                }
            },
            '>' => {
                if next == Some('=') {
                    out.push((Tok::Op(CmpOp::Ge), pos));
                    i += 2;
                } else {
                    out.push((Tok::Op(CmpOp::Gt), pos));
                    i += 1;
                }
            }
            '\'' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(err(pos, "unterminated string literal")),
                        Some(&(_, '\'')) if chars.get(i + 1).map(|&(_, c)| c) == Some('\'') => {
                            s.push('\'');
                            i += 2;
                        }
                        Some(&(_, '\'')) => {
                            i += 1;
                            break;
                        }
                        Some(&(_, c)) => {
                            s.push(c);
                            i += 1;
                        }
                    }
                }
                out.push((Tok::Str(s), pos));
            }
            c if c.is_ascii_digit() || (c == '-' && next.is_some_and(|n| n.is_ascii_digit())) || (c == '.' && next.is_some_and(|n| n.is_ascii_digit())) => {
                let start = i;
                i += 1;
                while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                    i += 1;
                }
                let s: String = chars[start..i].iter().map(|&(_, c)| c).collect();
                out.push((Tok::Num(s), pos));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                    i += 1;
                }
                let s: String = chars[start..i].iter().map(|&(_, c)| c).collect();
                let tok = match s.to_ascii_lowercase().as_str() {
                    "exists" => Tok::Exists,
                    "forall" => Tok::Forall,
                    "and" => Tok::And,
                    "or" => Tok::Or,
                    "not" => Tok::Not,
                    "like" => Tok::Op(CmpOp::Like),
                    _ => Tok::Ident(s),
                };
                out.push((tok, pos));
            }
            _ => return Err(err(pos, &format!("unexpected character `{c}`"))),
        }
    }
    out.push((Tok::Eof, text.len()));
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser

/// Raw syntax before relation names are resolved.
#[derive(Clone, Debug)]
enum Raw {
    Rel(String, Vec<Term>),
    Cmp(Term, CmpOp, Term),
    And(Box<Raw>, Box<Raw>),
    Or(Box<Raw>, Box<Raw>),
    Not(Box<Raw>),
    Exists(String, Box<Raw>),
    Forall(String, Box<Raw>),
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax { offset: self.offset(), message: message.into() })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.fail(format!("expected {what}, found {:?}", self.peek()))
        }
    }

    fn query(&mut self) -> Result<(Vec<String>, Raw)> {
        self.expect(Tok::LBrace, "`{`")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut outs = Vec::new();
        if *self.peek() != Tok::RParen {
            outs = self.varlist()?;
        }
        self.expect(Tok::RParen, "`)`")?;
        self.expect(Tok::Pipe, "`|`")?;
        let body = self.or_expr()?;
        self.expect(Tok::RBrace, "`}`")?;
        if *self.peek() != Tok::Eof {
            return self.fail("trailing input after query");
        }
        Ok((outs, body))
    }

    fn varlist(&mut self) -> Result<Vec<String>> {
        let mut vars = Vec::new();
        loop {
            match self.bump() {
                Tok::Ident(v) => vars.push(v),
                other => return self.fail(format!("expected variable, found {other:?}")),
            }
            if *self.peek() == Tok::Comma && matches!(self.peek_at(1), Tok::Ident(_)) {
                self.bump();
            } else {
                break;
            }
        }
        Ok(vars)
    }

    fn or_expr(&mut self) -> Result<Raw> {
        let mut left = self.and_expr()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let right = self.and_expr()?;
            left = Raw::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<Raw> {
        let mut left = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            let right = self.unary()?;
            left = Raw::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Raw> {
        match self.peek() {
            Tok::Not => {
                self.bump();
                Ok(Raw::Not(Box::new(self.unary()?)))
            }
            Tok::Exists | Tok::Forall => {
                let universal = self.bump() == Tok::Forall;
                let vars = self.varlist()?;
                let body = self.or_expr()?;
                Ok(vars.into_iter().rev().fold(body, |acc, v| {
                    if universal {
                        Raw::Forall(v, Box::new(acc))
                    } else {
                        Raw::Exists(v, Box::new(acc))
                    }
                }))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.or_expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            _ => self.atom(),
        }
    }

    fn term(&mut self) -> Result<Term> {
        match self.bump() {
            Tok::Ident(v) => Ok(Term::Var(v)),
            Tok::Str(s) => Ok(Term::Const(Value::Str(s))),
            Tok::Num(n) => match Value::parse_decimal(&n) {
                Some(v) => Ok(Term::Const(v)),
                None => self.fail(format!("malformed number `{n}`")),
            },
            other => self.fail(format!("expected term, found {other:?}")),
        }
    }

    fn atom(&mut self) -> Result<Raw> {
        if let (Tok::Ident(name), Tok::LParen) = (self.peek().clone(), self.peek_at(1).clone()) {
            self.bump();
            self.bump();
            let mut terms = vec![self.term()?];
            while *self.peek() == Tok::Comma {
                self.bump();
                terms.push(self.term()?);
            }
            self.expect(Tok::RParen, "`)`")?;
            return Ok(Raw::Rel(name, terms));
        }
        let lhs = self.term()?;
        let op = match self.bump() {
            Tok::Op(op) => op,
            other => return self.fail(format!("expected comparison operator, found {other:?}")),
        };
        let rhs = self.term()?;
        Ok(Raw::Cmp(lhs, op, rhs))
    }
}

/// Picks a variant of `base` not in `used`: `p1` becomes `p2`, `p3`, ...
fn fresh_name(base: &str, used: &BTreeSet<String>) -> String {
    if !used.contains(base) {
        return base.to_string();
    }
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit());
    let mut n: u64 = base[stem.len()..].parse().unwrap_or(0);
    loop {
        n += 1;
        let cand = format!("{stem}{n}");
        if !used.contains(&cand) {
            return cand;
        }
    }
}

fn resolve(raw: Raw, schema: &Schema) -> Result<Formula> {
    Ok(match raw {
        Raw::Rel(name, terms) => {
            let rel = schema.relation_id(&name)?;
            let arity = schema.relation(rel).arity();
            if terms.len() != arity {
                return Err(Error::Arity { relation: name, expected: arity, found: terms.len() });
            }
            Formula::Atom(Atom::Rel { rel, name, terms, negated: false })
        }
        Raw::Cmp(lhs, op, rhs) => Formula::Atom(Atom::Cmp { lhs, op, rhs, negated: false }),
        Raw::And(l, r) => Formula::and(resolve(*l, schema)?, resolve(*r, schema)?),
        Raw::Or(l, r) => Formula::or(resolve(*l, schema)?, resolve(*r, schema)?),
        Raw::Not(c) => Formula::negate(resolve(*c, schema)?),
        Raw::Exists(v, c) => Formula::Exists(v, Box::new(resolve(*c, schema)?)),
        Raw::Forall(v, c) => Formula::Forall(v, Box::new(resolve(*c, schema)?)),
    })
}

/// Renames bound variables so that every quantifier binds a distinct name
/// that is also distinct from every free variable.
fn uniquify(f: &Formula, used: &mut BTreeSet<String>, scope: &HashMap<String, String>) -> Formula {
    match f {
        Formula::Atom(a) => {
            let mut a = a.clone();
            a.rename(scope);
            Formula::Atom(a)
        }
        Formula::And(l, r) => Formula::and(uniquify(l, used, scope), uniquify(r, used, scope)),
        Formula::Or(l, r) => Formula::or(uniquify(l, used, scope), uniquify(r, used, scope)),
        Formula::Not(c) => Formula::negate(uniquify(c, used, scope)),
        Formula::Exists(v, c) | Formula::Forall(v, c) => {
            let name = fresh_name(v, used);
            used.insert(name.clone());
            let mut inner = scope.clone();
            inner.insert(v.clone(), name.clone());
            let body = Box::new(uniquify(c, used, &inner));
            if matches!(f, Formula::Exists(..)) {
                Formula::Exists(name, body)
            } else {
                Formula::Forall(name, body)
            }
        }
    }
}

fn rename_apart(f: &Formula, reserved: &BTreeSet<String>) -> Formula {
    let mut used = reserved.clone();
    used.extend(free_variables(f));
    uniquify(f, &mut used, &HashMap::new())
}

/// Variables not bound by any quantifier, in first-occurrence order.
pub fn free_variables(f: &Formula) -> Vec<String> {
    fn walk(f: &Formula, bound: &mut Vec<String>, out: &mut Vec<String>) {
        match f {
            Formula::Atom(a) => {
                for v in a.vars() {
                    if !bound.iter().any(|b| b == v) && !out.iter().any(|o| o == v) {
                        out.push(v.to_string());
                    }
                }
            }
            Formula::And(l, r) | Formula::Or(l, r) => {
                walk(l, bound, out);
                walk(r, bound, out);
            }
            Formula::Not(c) => walk(c, bound, out),
            Formula::Exists(v, c) | Formula::Forall(v, c) => {
                bound.push(v.clone());
                walk(c, bound, out);
                bound.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(f, &mut Vec::new(), &mut out);
    out
}

fn check_like_pattern(p: &str) -> Result<()> {
    let body = p.strip_suffix('%').unwrap_or(p);
    if body.contains('%') {
        return Err(Error::LikePattern(p.to_string()));
    }
    Ok(())
}

fn const_fits(kind: DomainKind, v: &Value) -> bool {
    match (kind, v) {
        (DomainKind::String, Value::Str(_)) => true,
        (DomainKind::Rational, Value::Num(_)) => true,
        (DomainKind::Integer, Value::Num(n)) => n.is_integer(),
        _ => false,
    }
}

/// Infers a domain for every variable and checks typing of all atoms.
fn infer_domains(f: &Formula, schema: &Schema) -> Result<BTreeMap<String, DomainId>> {
    let mut doms: BTreeMap<String, DomainId> = BTreeMap::new();
    for atom in f.atoms() {
        if let Atom::Rel { rel, name, terms, .. } = atom {
            for (i, t) in terms.iter().enumerate() {
                let d = schema.attr_domain(*rel, i);
                match t {
                    Term::Var(v) => match doms.get(v) {
                        Some(&prev) if prev != d => {
                            return Err(Error::DomainClash(format!(
                                "`{v}` used as {} and {}",
                                schema.domain(prev).name,
                                schema.domain(d).name
                            )))
                        }
                        _ => {
                            doms.insert(v.clone(), d);
                        }
                    },
                    Term::Const(c) => {
                        if !const_fits(schema.domain(d).kind, c) {
                            return Err(Error::DomainClash(format!(
                                "constant {c} in {name} position {i} of domain {}",
                                schema.domain(d).name
                            )));
                        }
                    }
                }
            }
        }
    }
    for atom in f.atoms() {
        if let Atom::Cmp { lhs, op, rhs, .. } = atom {
            let dom = |t: &Term| -> Result<Option<DomainId>> {
                match t {
                    Term::Var(v) => doms.get(v).copied().map(Some).ok_or_else(|| Error::NoDomain(v.clone())),
                    Term::Const(_) => Ok(None),
                }
            };
            let (dl, dr) = (dom(lhs)?, dom(rhs)?);
            let d = match (dl, dr) {
                (Some(a), Some(b)) if a != b => {
                    return Err(Error::DomainClash(format!(
                        "`{lhs} {} {rhs}` compares {} with {}",
                        op.symbol(),
                        schema.domain(a).name,
                        schema.domain(b).name
                    )))
                }
                (Some(a), _) | (None, Some(a)) => a,
                (None, None) => return Err(Error::DomainClash(format!("`{lhs} {} {rhs}` compares two constants", op.symbol()))),
            };
            let kind = schema.domain(d).kind;
            for t in [lhs, rhs] {
                if let Term::Const(c) = t {
                    if !const_fits(kind, c) {
                        return Err(Error::DomainClash(format!("constant {c} compared with domain {}", schema.domain(d).name)));
                    }
                }
            }
            if op.is_order() && kind == DomainKind::String {
                return Err(Error::DomainClash(format!(
                    "ordering comparison `{lhs} {} {rhs}` on string domain {}",
                    op.symbol(),
                    schema.domain(d).name
                )));
            }
            if *op == CmpOp::Like {
                match (lhs, rhs) {
                    (Term::Var(_), Term::Const(Value::Str(p))) if kind == DomainKind::String => check_like_pattern(p)?,
                    _ => return Err(Error::LikePattern(format!("{lhs} LIKE {rhs}"))),
                }
            }
        }
    }
    Ok(doms)
}

/// Parses DRC text against `schema`, desugaring quantifier lists and
/// inferring variable domains.
pub fn parse_query(text: &str, schema: &Schema) -> Result<Query> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let (outs, raw) = p.query()?;
    let formula = resolve(raw, schema)?;
    let mut seen = BTreeSet::new();
    for o in &outs {
        if !seen.insert(o.clone()) {
            return Err(Error::Duplicate { kind: "output variable", name: o.clone() });
        }
    }
    let formula = rename_apart(&formula, &seen);
    let free = free_variables(&formula);
    for v in &free {
        if !outs.contains(v) {
            return Err(Error::Unbound(v.clone()));
        }
    }
    let var_domains = infer_domains(&formula, schema)?;
    if let Some(v) = formula.bound_vars().into_iter().find(|v| !var_domains.contains_key(v)) {
        return Err(Error::NoDomain(v));
    }
    for o in &outs {
        if !var_domains.contains_key(o) {
            if free.contains(o) {
                return Err(Error::NoDomain(o.clone()));
            }
            return Err(Error::Unbound(o.clone()));
        }
    }
    Ok(Query { output_vars: outs, formula, var_domains })
}

fn push_negation(f: &Formula, neg: bool) -> Formula {
    match f {
        Formula::Atom(a) => Formula::Atom(if neg { a.with_negation_flipped() } else { a.clone() }),
        Formula::And(l, r) => {
            let (l, r) = (push_negation(l, neg), push_negation(r, neg));
            if neg {
                Formula::or(l, r)
            } else {
                Formula::and(l, r)
            }
        }
        Formula::Or(l, r) => {
            let (l, r) = (push_negation(l, neg), push_negation(r, neg));
            if neg {
                Formula::and(l, r)
            } else {
                Formula::or(l, r)
            }
        }
        Formula::Not(c) => push_negation(c, !neg),
        Formula::Exists(v, c) => {
            let c = Box::new(push_negation(c, neg));
            if neg {
                Formula::Forall(v.clone(), c)
            } else {
                Formula::Exists(v.clone(), c)
            }
        }
        Formula::Forall(v, c) => {
            let c = Box::new(push_negation(c, neg));
            if neg {
                Formula::Exists(v.clone(), c)
            } else {
                Formula::Forall(v.clone(), c)
            }
        }
    }
}

/// Pushes negation onto atom flags and renames bound variables apart.
pub fn normalize_query(q: &Query) -> Query {
    let pushed = push_negation(&q.formula, false);
    let reserved: BTreeSet<String> = q.output_vars.iter().cloned().collect();
    let formula = rename_apart(&pushed, &reserved);
    let mut var_domains = BTreeMap::new();
    rename_domains(&q.formula, &formula, &q.var_domains, &mut var_domains);
    for o in &q.output_vars {
        if let Some(d) = q.var_domains.get(o) {
            var_domains.insert(o.clone(), *d);
        }
    }
    Query { output_vars: q.output_vars.clone(), formula, var_domains }
}

/// Carries domains across a renaming by walking both formulas in lockstep.
fn rename_domains(
    old: &Formula,
    new: &Formula,
    old_doms: &BTreeMap<String, DomainId>,
    out: &mut BTreeMap<String, DomainId>,
) {
    fn strip(f: &Formula) -> &Formula {
        match f {
            Formula::Not(c) => strip(c),
            other => other,
        }
    }
    match (strip(old), strip(new)) {
        (Formula::Atom(a), Formula::Atom(b)) => {
            for (ta, tb) in a.terms().into_iter().zip(b.terms()) {
                if let (Term::Var(va), Term::Var(vb)) = (ta, tb) {
                    if let Some(d) = old_doms.get(va) {
                        out.entry(vb.clone()).or_insert(*d);
                    }
                }
            }
        }
        (Formula::And(l1, r1) | Formula::Or(l1, r1), Formula::And(l2, r2) | Formula::Or(l2, r2)) => {
            rename_domains(l1, l2, old_doms, out);
            rename_domains(r1, r2, old_doms, out);
        }
        (Formula::Exists(_, c1) | Formula::Forall(_, c1), Formula::Exists(_, c2) | Formula::Forall(_, c2)) => {
            rename_domains(c1, c2, old_doms, out)
        }
        _ => {}
    }
}

/// Outcome of the safety check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SafetyReport {
    pub offending: Vec<String>,
}

impl SafetyReport {
    pub fn is_ok(&self) -> bool {
        self.offending.is_empty()
    }
}

/// Every variable of a negated relational atom must occur in a positive
/// one. A universally bound variable is read through `∀x φ = ¬∃x ¬φ`, so
/// for it the roles of positive and negated atoms swap.
pub fn check_safety(q: &Query) -> SafetyReport {
    fn universals(f: &Formula, out: &mut BTreeSet<String>) {
        match f {
            Formula::Atom(_) => {}
            Formula::And(l, r) | Formula::Or(l, r) => {
                universals(l, out);
                universals(r, out);
            }
            Formula::Not(c) | Formula::Exists(_, c) => universals(c, out),
            Formula::Forall(v, c) => {
                out.insert(v.clone());
                universals(c, out);
            }
        }
    }
    let q = normalize_query(q);
    let mut forall = BTreeSet::new();
    universals(&q.formula, &mut forall);
    let atoms = q.formula.atoms();
    let rel_vars = |negated: bool| -> BTreeSet<&str> {
        atoms
            .iter()
            .filter(|a| matches!(a, Atom::Rel { negated: n, .. } if *n == negated))
            .flat_map(|a| a.vars())
            .collect()
    };
    let (positive, negative) = (rel_vars(false), rel_vars(true));
    let mut offending: Vec<String> = Vec::new();
    for a in atoms.iter().filter(|a| matches!(a, Atom::Rel { .. })) {
        for v in a.vars() {
            let universal = forall.contains(v);
            let needs_guard = a.negated() != universal;
            let guarded = if universal { negative.contains(v) } else { positive.contains(v) };
            if needs_guard && !guarded && !offending.iter().any(|o| o == v) {
                offending.push(v.to_string());
            }
        }
    }
    SafetyReport { offending }
}

/// `q1 − q2`: the formula `q1 ∧ ¬q2` with q2's outputs renamed to q1's.
pub fn difference_query(q1: &Query, q2: &Query) -> Result<Query> {
    if q1.output_vars.len() != q2.output_vars.len() {
        return Err(Error::Incompatible(format!(
            "output arity {} vs {}",
            q1.output_vars.len(),
            q2.output_vars.len()
        )));
    }
    for (a, b) in q1.output_vars.iter().zip(&q2.output_vars) {
        if q1.var_domains.get(a) != q2.var_domains.get(b) {
            return Err(Error::Incompatible(format!("output `{a}` and `{b}` have different domains")));
        }
    }
    // Move q2's bound variables away from every name q1 uses, then map its
    // outputs onto q1's.
    let mut reserved: BTreeSet<String> = q1.output_vars.iter().cloned().collect();
    reserved.extend(q1.formula.bound_vars());
    reserved.extend(q2.output_vars.iter().cloned());
    let q2f = rename_apart(&q2.formula, &reserved);
    let mut q2_doms = BTreeMap::new();
    rename_domains(&q2.formula, &q2f, &q2.var_domains, &mut q2_doms);
    let out_map: HashMap<String, String> =
        q2.output_vars.iter().cloned().zip(q1.output_vars.iter().cloned()).collect();
    let q2f = substitute(&q2f, &out_map);
    let formula = Formula::and(q1.formula.clone(), Formula::negate(q2f));
    let mut var_domains = q1.var_domains.clone();
    for (v, d) in q2_doms {
        if !out_map.contains_key(&v) {
            var_domains.insert(v, d);
        }
    }
    let q = Query { output_vars: q1.output_vars.clone(), formula, var_domains };
    Ok(normalize_query(&q))
}

fn substitute(f: &Formula, map: &HashMap<String, String>) -> Formula {
    match f {
        Formula::Atom(a) => {
            let mut a = a.clone();
            a.rename(map);
            Formula::Atom(a)
        }
        Formula::And(l, r) => Formula::and(substitute(l, map), substitute(r, map)),
        Formula::Or(l, r) => Formula::or(substitute(l, map), substitute(r, map)),
        Formula::Not(c) => Formula::negate(substitute(c, map)),
        Formula::Exists(v, c) => {
            let mut inner = map.clone();
            inner.remove(v);
            Formula::Exists(v.clone(), Box::new(substitute(c, &inner)))
        }
        Formula::Forall(v, c) => {
            let mut inner = map.clone();
            inner.remove(v);
            Formula::Forall(v.clone(), Box::new(substitute(c, &inner)))
        }
    }
}
