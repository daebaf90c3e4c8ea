//! Two-variable first-order logic with counting quantifiers, evaluated over
//! graphs, and the translation of star-free path expressions into it.
//!
//! Node tests are unary predicates and edge tests binary ones:
//! `rides(x,y)` holds when some edge from `x` to `y` passes `rides`.
//!
//! ```text
//! formula := and ('|' and)*
//! and     := unary ('&' unary)*
//! unary   := '!' unary | '(' formula ')' | 'true' | 'false'
//!          | 'exists' var '(' formula ')' | 'exists>=' k var '(' formula ')'
//!          | atom '(' var [',' var] ')' | '[' test ']' '(' var [',' var] ')'
//! ```

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::graph::{Flavor, Graph, NodeIx};
use crate::query::{parse_test, ParseError, Parser, Regex, Test};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Node(Test, String),
    /// Some edge from the first variable's node to the second's passes.
    Edge(Test, String, String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    /// At least `k` witnesses.
    CountExists(usize, String, Box<Formula>),
}

impl Formula {
    pub fn node(t: Test, v: &str) -> Self {
        Formula::Node(t, v.into())
    }

    pub fn edge(t: Test, u: &str, w: &str) -> Self {
        Formula::Edge(t, u.into(), w.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn exists(v: &str, f: Formula) -> Self {
        Formula::Exists(v.into(), Box::new(f))
    }

    pub fn exists_at_least(k: usize, v: &str, f: Formula) -> Self {
        Formula::CountExists(k, v.into(), Box::new(f))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Node(_, v) => {
                out.insert(v.clone());
            }
            Formula::Edge(_, u, w) => {
                out.insert(u.clone());
                out.insert(w.clone());
            }
            Formula::Not(f) => f.collect_free(out),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect_free(out);
                b.collect_free(out);
            }
            Formula::Exists(v, f) | Formula::CountExists(_, v, f) => {
                let mut inner = BTreeSet::new();
                f.collect_free(&mut inner);
                inner.remove(v);
                out.extend(inner);
            }
        }
    }

    /// Every variable name occurring anywhere, bound or free.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| match f {
            Formula::Node(_, v) | Formula::Exists(v, _) | Formula::CountExists(_, v, _) => {
                out.insert(v.clone());
            }
            Formula::Edge(_, u, w) => {
                out.insert(u.clone());
                out.insert(w.clone());
            }
            _ => {}
        });
        out
    }

    fn visit(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::Not(a) | Formula::Exists(_, a) | Formula::CountExists(_, _, a) => a.visit(f),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }

    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }
}

fn is_atomic(t: &Test) -> bool {
    matches!(t, Test::Label(_) | Test::PropEq(..) | Test::FeatEq(..) | Test::Any)
}

struct Pred<'a>(&'a Test);

impl fmt::Display for Pred<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if is_atomic(self.0) {
            write!(f, "{}", self.0)
        } else {
            write!(f, "[{}]", self.0)
        }
    }
}

impl Formula {
    fn prec(&self) -> u8 {
        match self {
            Formula::Or(..) => 0,
            Formula::And(..) => 1,
            _ => 2,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.prec() < min {
            write!(f, "(")?;
            self.fmt_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Node(t, v) => write!(f, "{}({v})", Pred(t)),
            Formula::Edge(t, u, w) => write!(f, "{}({u},{w})", Pred(t)),
            Formula::Not(a) => {
                write!(f, "!")?;
                a.fmt_at(f, 2)
            }
            Formula::And(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " & ")?;
                b.fmt_at(f, 2)
            }
            Formula::Or(a, b) => {
                a.fmt_at(f, 0)?;
                write!(f, " | ")?;
                b.fmt_at(f, 1)
            }
            Formula::Exists(v, a) => write!(f, "exists {v} ({a})"),
            Formula::CountExists(k, v, a) => write!(f, "exists>={k} {v} ({a})"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LogicError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Variables(#[from] TwoVarViolation),
    #[error("counting quantifier needs k >= 1")]
    ZeroCount,
    #[error("Kleene star has no first-order translation")]
    StarNotSupported,
    #[error("expected one free variable, found {0:?}")]
    NotUnary(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("variable `{variable}` is not one of x, y")]
pub struct TwoVarViolation {
    pub variable: String,
}

/// Accepts exactly the formulas over the variables `x` and `y`.
pub fn validate_two_var(phi: &Formula) -> Result<(), TwoVarViolation> {
    match phi.variables().into_iter().find(|v| v != "x" && v != "y") {
        Some(variable) => Err(TwoVarViolation { variable }),
        None => Ok(()),
    }
}

pub fn parse_formula(text: &str, flavor: Flavor) -> Result<Formula, ParseError> {
    let mut p = FormulaParser(Parser::new(text, flavor));
    let f = p.or()?;
    p.0.expect_end()?;
    Ok(f)
}

struct FormulaParser<'s>(Parser<'s>);

impl FormulaParser<'_> {
    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.and()?;
        while self.0.eat("|") {
            f = Formula::or(f, self.and()?);
        }
        Ok(f)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.unary()?;
        while self.0.eat("&") {
            f = Formula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn keyword(&mut self, word: &str) -> bool {
        self.0.skip_ws();
        let rest = &self.0.src[self.0.pos..];
        let Some(after) = rest.strip_prefix(word) else {
            return false;
        };
        let ends = after.chars().next().is_none_or(|c| c.is_whitespace() || c == ')' || c == '&' || c == '|');
        if ends {
            self.0.pos += word.len();
        }
        ends
    }

    fn var(&mut self) -> Result<String, ParseError> {
        self.0.skip_ws();
        let at = self.0.pos;
        let rest = &self.0.src[at..];
        let len = rest.char_indices().find(|&(_, c)| !(c.is_alphanumeric() || c == '_')).map_or(rest.len(), |(i, _)| i);
        if len == 0 {
            return Err(self.0.unexpected("expected a variable"));
        }
        self.0.pos += len;
        Ok(rest[..len].to_string())
    }

    fn quantified(&mut self) -> Result<(String, Formula), ParseError> {
        let v = self.var()?;
        self.0.expect("(")?;
        let f = self.or()?;
        self.0.expect(")")?;
        Ok((v, f))
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if self.0.eat("!") {
            return Ok(Formula::not(self.unary()?));
        }
        if self.0.eat("(") {
            let f = self.or()?;
            self.0.expect(")")?;
            return Ok(f);
        }
        if self.0.eat("exists>=") {
            self.0.skip_ws();
            let at = self.0.pos;
            let digits = self.0.src[at..].bytes().take_while(u8::is_ascii_digit).count();
            let k: usize = self.0.src[at..at + digits].parse().map_err(|_| self.0.err(at, "expected a count"))?;
            if k == 0 {
                return Err(self.0.err(at, "counting quantifier needs k >= 1"));
            }
            self.0.pos += digits;
            let (v, f) = self.quantified()?;
            return Ok(Formula::exists_at_least(k, &v, f));
        }
        if self.keyword("exists") {
            let (v, f) = self.quantified()?;
            return Ok(Formula::exists(&v, f));
        }
        if self.keyword("true") {
            return Ok(Formula::True);
        }
        if self.keyword("false") {
            return Ok(Formula::False);
        }
        let test = if self.0.peek() == Some('[') {
            let start = self.0.pos + 1;
            let Some(len) = self.0.src[start..].find(']') else {
                return Err(self.0.err(start - 1, "unclosed '['"));
            };
            let t = parse_test(&self.0.src[start..start + len], self.0.flavor)
                .map_err(|e| ParseError { offset: e.offset + start, kind: e.kind })?;
            self.0.pos = start + len + 1;
            t
        } else {
            self.0.test_atom()?
        };
        self.0.expect("(")?;
        let u = self.var()?;
        let f = if self.0.eat(",") {
            let w = self.var()?;
            Formula::Edge(test, u, w)
        } else {
            Formula::Node(test, u)
        };
        self.0.expect(")")?;
        Ok(f)
    }
}

/// A relation over the sorted free variables of a subformula, stored as a
/// bitset over `n^arity` assignments.
#[derive(Debug, Clone)]
struct Rel {
    vars: Vec<String>,
    bits: FixedBitSet,
}

struct Evaluator<'g> {
    g: &'g Graph,
    n: usize,
    memo: HashMap<Formula, Rel>,
}

impl<'g> Evaluator<'g> {
    fn new(g: &'g Graph) -> Self {
        Evaluator { g, n: g.node_count(), memo: HashMap::new() }
    }

    fn space(&self, arity: usize) -> usize {
        self.n.pow(arity as u32)
    }

    fn constant(&self, value: bool) -> Rel {
        let mut bits = FixedBitSet::with_capacity(1);
        bits.set(0, value);
        Rel { vars: Vec::new(), bits }
    }

    /// Re-indexes `r` over `vars`, a superset of its variables.
    fn lift(&self, r: &Rel, vars: &[String]) -> FixedBitSet {
        if r.vars == vars {
            return r.bits.clone();
        }
        let n = self.n;
        let pos: Vec<usize> = r.vars.iter().map(|v| vars.iter().position(|w| w == v).expect("superset")).collect();
        let size = self.space(vars.len());
        let mut out = FixedBitSet::with_capacity(size);
        let mut values = vec![0; vars.len()];
        for ix in 0..size {
            let mut rest = ix;
            for slot in values.iter_mut().rev() {
                *slot = rest % n;
                rest /= n;
            }
            let src = pos.iter().fold(0, |acc, &p| acc * n + values[p]);
            out.set(ix, r.bits.contains(src));
        }
        out
    }

    fn combine(&self, a: &Rel, b: &Rel, and: bool) -> Rel {
        let vars: Vec<String> = a.vars.iter().chain(&b.vars).cloned().collect::<BTreeSet<_>>().into_iter().collect();
        assert!(vars.len() <= 2, "materialized relation of arity {}", vars.len());
        let mut bits = self.lift(a, &vars);
        let other = self.lift(b, &vars);
        if and {
            bits.intersect_with(&other);
        } else {
            bits.union_with(&other);
        }
        Rel { vars, bits }
    }

    fn project(&self, r: &Rel, v: &str, at_least: usize) -> Rel {
        let n = self.n;
        let Some(p) = r.vars.iter().position(|w| w == v) else {
            // the quantified variable is not free: count n identical witnesses
            let mut out = r.clone();
            if n < at_least {
                out.bits.clear();
            }
            return out;
        };
        let vars: Vec<String> = r.vars.iter().filter(|w| *w != v).cloned().collect();
        let size = self.space(vars.len());
        let mut bits = FixedBitSet::with_capacity(size);
        for rest in 0..size {
            let count = (0..n)
                .filter(|&val| {
                    let ix = match (r.vars.len(), p) {
                        (1, _) => val,
                        (_, 0) => val * n + rest,
                        _ => rest * n + val,
                    };
                    r.bits.contains(ix)
                })
                .take(at_least)
                .count();
            bits.set(rest, count >= at_least);
        }
        Rel { vars, bits }
    }

    fn eval(&mut self, phi: &Formula) -> Rel {
        if let Some(r) = self.memo.get(phi) {
            return r.clone();
        }
        let n = self.n;
        let g = self.g;
        let r = match phi {
            Formula::True => self.constant(true),
            Formula::False => self.constant(false),
            Formula::Node(t, v) => {
                let mut bits = FixedBitSet::with_capacity(n);
                for u in g.nodes() {
                    bits.set(u, t.matches(g.node(u)));
                }
                Rel { vars: vec![v.clone()], bits }
            }
            Formula::Edge(t, u, w) if u == w => {
                let mut bits = FixedBitSet::with_capacity(n);
                for e in 0..g.edge_count() {
                    let (s, d) = g.endpoints(e);
                    if s == d && t.matches(g.edge(e)) {
                        bits.insert(s);
                    }
                }
                Rel { vars: vec![u.clone()], bits }
            }
            Formula::Edge(t, u, w) => {
                let mut bits = FixedBitSet::with_capacity(n * n);
                for e in 0..g.edge_count() {
                    if t.matches(g.edge(e)) {
                        let (s, d) = g.endpoints(e);
                        bits.insert(if u < w { s * n + d } else { d * n + s });
                    }
                }
                let vars = if u < w { vec![u.clone(), w.clone()] } else { vec![w.clone(), u.clone()] };
                Rel { vars, bits }
            }
            Formula::Not(a) => {
                let mut r = self.eval(a);
                r.bits.toggle_range(..);
                r
            }
            Formula::And(a, b) => {
                let (a, b) = (self.eval(a), self.eval(b));
                self.combine(&a, &b, true)
            }
            Formula::Or(a, b) => {
                let (a, b) = (self.eval(a), self.eval(b));
                self.combine(&a, &b, false)
            }
            Formula::Exists(v, a) => {
                let a = self.eval(a);
                self.project(&a, v, 1)
            }
            Formula::CountExists(k, v, a) => {
                let a = self.eval(a);
                self.project(&a, v, *k)
            }
        };
        assert!(r.vars.len() <= 2);
        self.memo.insert(phi.clone(), r.clone());
        r
    }
}

/// Result of evaluating a formula, shaped by its free variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Evaluation {
    Sentence(bool),
    Unary(BTreeSet<NodeIx>),
    /// Pairs ordered as the free variables sorted by name.
    Binary(BTreeSet<(NodeIx, NodeIx)>),
}

fn check(phi: &Formula) -> Result<(), LogicError> {
    validate_two_var(phi)?;
    let mut zero = false;
    phi.visit(&mut |f| zero |= matches!(f, Formula::CountExists(0, ..)));
    if zero {
        return Err(LogicError::ZeroCount);
    }
    Ok(())
}

pub fn eval(g: &Graph, phi: &Formula) -> Result<Evaluation, LogicError> {
    check(phi)?;
    let r = Evaluator::new(g).eval(phi);
    let n = g.node_count();
    Ok(match r.vars.len() {
        0 => Evaluation::Sentence(r.bits.contains(0)),
        1 => Evaluation::Unary(r.bits.ones().collect()),
        _ => Evaluation::Binary(r.bits.ones().map(|ix| (ix / n, ix % n)).collect()),
    })
}

/// `{ u | g ⊨ phi[var ↦ u] }`; `phi` may have `var` as its only free
/// variable, or none.
pub fn eval_unary(g: &Graph, phi: &Formula, var: &str) -> Result<BTreeSet<NodeIx>, LogicError> {
    check(phi)?;
    let free = phi.free_vars();
    if free.iter().any(|v| v != var) {
        return Err(LogicError::NotUnary(free.into_iter().collect()));
    }
    let r = Evaluator::new(g).eval(phi);
    Ok(if r.vars.is_empty() {
        if r.bits.contains(0) {
            g.nodes().collect()
        } else {
            BTreeSet::new()
        }
    } else {
        r.bits.ones().collect()
    })
}

fn other(v: &str) -> &'static str {
    if v == "x" {
        "y"
    } else {
        "x"
    }
}

fn conjuncts(f: Formula, out: &mut Vec<Formula>) {
    match f {
        Formula::True => {}
        Formula::And(a, b) => {
            conjuncts(*a, out);
            conjuncts(*b, out);
        }
        f => out.push(f),
    }
}

/// Left-nested conjunction without `true` members.
fn conj(a: Formula, b: Formula) -> Formula {
    let mut parts = Vec::new();
    conjuncts(a, &mut parts);
    conjuncts(b, &mut parts);
    parts.into_iter().reduce(Formula::and).unwrap_or(Formula::True)
}

fn translate(r: &Regex, v: &str, k: &dyn Fn(&str) -> Formula) -> Formula {
    match r {
        Regex::Node(t) => conj(Formula::node(t.clone(), v), k(v)),
        Regex::Fwd(t) => {
            let o = other(v);
            Formula::exists(o, conj(Formula::edge(t.clone(), v, o), k(o)))
        }
        Regex::Bwd(t) => {
            let o = other(v);
            Formula::exists(o, conj(Formula::edge(t.clone(), o, v), k(o)))
        }
        Regex::Seq(a, b) => translate(a, v, &|u: &str| translate(b, u, k)),
        Regex::Alt(a, b) => Formula::or(translate(a, v, k), translate(b, v, k)),
        Regex::Star(_) => unreachable!("rejected before translation"),
    }
}

/// `ψ_r(x)` with `eval(ψ_r) = reachable_from(r)`, alternating `x` and `y`
/// along the expression.
pub fn regex_to_fo2(r: &Regex) -> Result<Formula, LogicError> {
    if r.has_star() {
        return Err(LogicError::StarNotSupported);
    }
    Ok(translate(r, "x", &|_| Formula::True))
}
