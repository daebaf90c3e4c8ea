//! Regular path expressions over node and edge tests.
//!
//! Concrete syntax (ASCII):
//!
//! ```text
//! regex   := seq ('+' seq)*
//! seq     := postfix ('/' postfix)*
//! postfix := '?' natom | '?' '(' test ')'
//!          | eatom ['^-'] | '(' test ')' ['^-'] | '(' test ')' '*'+
//!          | '(' regex ')' '*'*
//! test    := and ('|' and)*
//! and     := unary ('&' unary)*
//! unary   := '!' unary | '(' test ')' | '_' | name ['=' value]
//! ```
//!
//! `f<i>=v` is a feature test on vector graphs and a property test named
//! `f<i>` on property graphs. Atoms containing reserved characters are
//! written in double quotes with `\"` and `\\` escapes.

use std::fmt;

use thiserror::Error;

use crate::graph::{Feature, Flavor, Object, BOTTOM};

/// Boolean test on a node or an edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Test {
    Label(String),
    PropEq(String, String),
    /// 1-based feature index.
    FeatEq(usize, String),
    Any,
    Not(Box<Test>),
    Or(Box<Test>, Box<Test>),
    And(Box<Test>, Box<Test>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Regex {
    /// `?test`: length-0 paths at nodes passing the test.
    Node(Test),
    Fwd(Test),
    /// `test^-`: follow an edge against its direction.
    Bwd(Test),
    Alt(Box<Regex>, Box<Regex>),
    Seq(Box<Regex>, Box<Regex>),
    Star(Box<Regex>),
}

/// Anything a [`Test`] can be evaluated against.
pub trait Attributes {
    fn label(&self) -> Option<&str>;
    fn prop(&self, name: &str) -> Option<&str>;
    /// 1-based; `None` for BOTTOM or out of range.
    fn feature(&self, i: usize) -> Option<&str>;
}

impl Attributes for Object {
    fn label(&self) -> Option<&str> {
        self.label_atom()
    }

    fn prop(&self, name: &str) -> Option<&str> {
        Object::prop(self, name)
    }

    fn feature(&self, i: usize) -> Option<&str> {
        Object::feature(self, i)
    }
}

/// A bare feature vector; its label is the first feature.
#[derive(Debug, Clone, Copy)]
pub struct Features<'a>(pub &'a [Feature]);

impl Attributes for Features<'_> {
    fn label(&self) -> Option<&str> {
        self.feature(1)
    }

    fn prop(&self, _: &str) -> Option<&str> {
        None
    }

    fn feature(&self, i: usize) -> Option<&str> {
        i.checked_sub(1).and_then(|i| self.0.get(i)).and_then(|f| f.as_deref())
    }
}

impl Test {
    pub fn matches<A: Attributes + ?Sized>(&self, obj: &A) -> bool {
        match self {
            Test::Label(l) => obj.label() == Some(l.as_str()),
            Test::PropEq(p, v) => obj.prop(p) == Some(v.as_str()),
            Test::FeatEq(i, v) => obj.feature(*i) == Some(v.as_str()),
            Test::Any => true,
            Test::Not(t) => !t.matches(obj),
            Test::Or(a, b) => a.matches(obj) || b.matches(obj),
            Test::And(a, b) => a.matches(obj) && b.matches(obj),
        }
    }

    pub fn label(l: impl Into<String>) -> Test {
        Test::Label(l.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(t: Test) -> Test {
        Test::Not(Box::new(t))
    }

    pub fn and(a: Test, b: Test) -> Test {
        Test::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Test, b: Test) -> Test {
        Test::Or(Box::new(a), Box::new(b))
    }

    fn is_atomic(&self) -> bool {
        matches!(self, Test::Label(_) | Test::Any)
    }

    /// Checks that every atom is legal for graphs of `flavor`.
    pub fn check_flavor(&self, flavor: Flavor) -> Result<(), ParseErrorKind> {
        match self {
            Test::PropEq(..) if flavor != Flavor::Property => {
                Err(ParseErrorKind::Flavor(format!("property test on {flavor} graph")))
            }
            Test::FeatEq(i, _) => match flavor {
                Flavor::Vector(d) if (1..=d).contains(i) => Ok(()),
                Flavor::Vector(d) => Err(ParseErrorKind::FeatureIndex { index: *i, dimension: d }),
                _ => Err(ParseErrorKind::Flavor(format!("feature test on {flavor} graph"))),
            },
            Test::Not(t) => t.check_flavor(flavor),
            Test::Or(a, b) | Test::And(a, b) => {
                a.check_flavor(flavor)?;
                b.check_flavor(flavor)
            }
            _ => Ok(()),
        }
    }
}

impl Regex {
    pub fn node(t: Test) -> Regex {
        Regex::Node(t)
    }

    pub fn fwd(label: &str) -> Regex {
        Regex::Fwd(Test::label(label))
    }

    pub fn bwd(label: &str) -> Regex {
        Regex::Bwd(Test::label(label))
    }

    pub fn alt(a: Regex, b: Regex) -> Regex {
        Regex::Alt(Box::new(a), Box::new(b))
    }

    pub fn seq(a: Regex, b: Regex) -> Regex {
        Regex::Seq(Box::new(a), Box::new(b))
    }

    pub fn star(a: Regex) -> Regex {
        Regex::Star(Box::new(a))
    }

    pub fn has_star(&self) -> bool {
        match self {
            Regex::Star(_) => true,
            Regex::Alt(a, b) | Regex::Seq(a, b) => a.has_star() || b.has_star(),
            _ => false,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Regex::Node(_) | Regex::Fwd(_) | Regex::Bwd(_) => 1,
            Regex::Star(a) => 1 + a.depth(),
            Regex::Alt(a, b) | Regex::Seq(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    pub fn check_flavor(&self, flavor: Flavor) -> Result<(), ParseErrorKind> {
        match self {
            Regex::Node(t) | Regex::Fwd(t) | Regex::Bwd(t) => t.check_flavor(flavor),
            Regex::Star(a) => a.check_flavor(flavor),
            Regex::Alt(a, b) | Regex::Seq(a, b) => {
                a.check_flavor(flavor)?;
                b.check_flavor(flavor)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("{0}")]
    Syntax(String),
    #[error("{0}")]
    Flavor(String),
    #[error("feature index {index} outside dimension {dimension}")]
    FeatureIndex { index: usize, dimension: usize },
    #[error("reserved atom {BOTTOM}")]
    Reserved,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("at byte {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    fn is_semantic(&self) -> bool {
        !matches!(self.kind, ParseErrorKind::Syntax(_))
    }
}

pub fn parse_regex(text: &str, flavor: Flavor) -> Result<Regex, ParseError> {
    let mut p = Parser::new(text, flavor);
    let r = p.alt()?;
    p.expect_end()?;
    Ok(r)
}

pub fn parse_test(text: &str, flavor: Flavor) -> Result<Test, ParseError> {
    let mut p = Parser::new(text, flavor);
    let t = p.test_or()?;
    p.expect_end()?;
    Ok(t)
}

const RESERVED: &[char] = &['?', '/', '+', '*', '(', ')', '!', '&', '|', '=', '"', '^', ','];

fn is_bare_char(c: char) -> bool {
    !c.is_whitespace() && !RESERVED.contains(&c)
}

/// Lexical position over a query string; shared with the formula parser.
pub(crate) struct Parser<'s> {
    pub(crate) src: &'s str,
    pub(crate) pos: usize,
    pub(crate) flavor: Flavor,
}

pub(crate) enum Name {
    Bare(String),
    Quoted(String),
}

impl Name {
    fn text(&self) -> &str {
        match self {
            Name::Bare(s) | Name::Quoted(s) => s,
        }
    }
}

impl<'s> Parser<'s> {
    pub(crate) fn new(src: &'s str, flavor: Flavor) -> Self {
        Parser { src, pos: 0, flavor }
    }

    pub(crate) fn err(&self, at: usize, msg: impl Into<String>) -> ParseError {
        ParseError { offset: at, kind: ParseErrorKind::Syntax(msg.into()) }
    }

    pub(crate) fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    pub(crate) fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    pub(crate) fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, token: &str) -> Result<(), ParseError> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("expected '{token}'")))
        }
    }

    pub(crate) fn unexpected(&mut self, what: &str) -> ParseError {
        match self.peek() {
            Some(c) => self.err(self.pos, format!("{what}, found '{c}'")),
            None => self.err(self.pos, format!("{what}, found end of input")),
        }
    }

    pub(crate) fn expect_end(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(_) => Err(self.unexpected("expected end of input")),
        }
    }

    /// A bare or quoted atom, if one starts here.
    pub(crate) fn name(&mut self) -> Result<Option<Name>, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        if let Some(body) = rest.strip_prefix('"') {
            let mut value = String::new();
            let mut chars = body.char_indices();
            loop {
                match chars.next() {
                    Some((_, '\\')) => match chars.next() {
                        Some((_, c)) => value.push(c),
                        None => return Err(self.err(start, "unterminated string")),
                    },
                    Some((i, '"')) => {
                        self.pos = start + 1 + i + 1;
                        break;
                    }
                    Some((_, c)) => value.push(c),
                    None => return Err(self.err(start, "unterminated string")),
                }
            }
            self.check_atom(start, &value)?;
            return Ok(Some(Name::Quoted(value)));
        }
        let len = rest.char_indices().find(|&(_, c)| !is_bare_char(c)).map_or(rest.len(), |(i, _)| i);
        if len == 0 {
            return Ok(None);
        }
        let value = rest[..len].to_string();
        self.check_atom(start, &value)?;
        self.pos += len;
        Ok(Some(Name::Bare(value)))
    }

    fn check_atom(&self, at: usize, value: &str) -> Result<(), ParseError> {
        if value.is_empty() {
            return Err(self.err(at, "empty atom"));
        }
        if value == BOTTOM {
            return Err(ParseError { offset: at, kind: ParseErrorKind::Reserved });
        }
        Ok(())
    }

    fn gate(&self, at: usize, t: &Test) -> Result<(), ParseError> {
        t.check_flavor(self.flavor).map_err(|kind| ParseError { offset: at, kind })
    }

    /// A single test atom: `_`, a label, `p=v` or `f<i>=v`.
    pub(crate) fn test_atom(&mut self) -> Result<Test, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let name = match self.name()? {
            Some(n) => n,
            None => return Err(self.unexpected("expected a test")),
        };
        let is_wild = matches!(&name, Name::Bare(s) if s == "_");
        if !self.eat("=") {
            return Ok(if is_wild { Test::Any } else { Test::Label(name.text().to_string()) });
        }
        if is_wild {
            return Err(self.err(start, "wildcard cannot be compared"));
        }
        let value = match self.name()? {
            Some(v) => v.text().to_string(),
            None => return Err(self.unexpected("expected a value after '='")),
        };
        let feature_index = match &name {
            Name::Bare(s) if self.flavor != Flavor::Property => s
                .strip_prefix('f')
                .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
                .and_then(|d| d.parse::<usize>().ok()),
            _ => None,
        };
        let test = match feature_index {
            Some(0) => return Err(self.err(start, "feature indices start at 1")),
            Some(i) => Test::FeatEq(i, value),
            None => Test::PropEq(name.text().to_string(), value),
        };
        self.gate(start, &test)?;
        Ok(test)
    }

    pub(crate) fn test_or(&mut self) -> Result<Test, ParseError> {
        let mut t = self.test_and()?;
        while self.eat("|") {
            t = Test::or(t, self.test_and()?);
        }
        Ok(t)
    }

    fn test_and(&mut self) -> Result<Test, ParseError> {
        let mut t = self.test_unary()?;
        while self.eat("&") {
            t = Test::and(t, self.test_unary()?);
        }
        Ok(t)
    }

    fn test_unary(&mut self) -> Result<Test, ParseError> {
        if self.eat("!") {
            return Ok(Test::not(self.test_unary()?));
        }
        if self.eat("(") {
            let t = self.test_or()?;
            self.expect(")")?;
            return Ok(t);
        }
        self.test_atom()
    }

    fn alt(&mut self) -> Result<Regex, ParseError> {
        let mut r = self.seq()?;
        while self.eat("+") {
            r = Regex::alt(r, self.seq()?);
        }
        Ok(r)
    }

    fn seq(&mut self) -> Result<Regex, ParseError> {
        let mut r = self.postfix()?;
        while self.eat("/") {
            r = Regex::seq(r, self.postfix()?);
        }
        Ok(r)
    }

    fn postfix(&mut self) -> Result<Regex, ParseError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some('?') => {
                self.pos += 1;
                let t = if self.eat("(") {
                    let t = self.test_or()?;
                    self.expect(")")?;
                    t
                } else {
                    self.test_atom_bare()?
                };
                if self.peek_inverse() {
                    return Err(self.err(self.pos, "'^-' applies to edge tests only"));
                }
                self.no_star_here()?;
                Ok(Regex::Node(t))
            }
            Some('(') => {
                // a parenthesised test is an edge test; otherwise a group
                self.pos += 1;
                let as_test = self.test_or().and_then(|t| self.expect(")").map(|_| t));
                match as_test {
                    Ok(t) => {
                        if self.eat("^-") {
                            self.no_star_here()?;
                            return Ok(Regex::Bwd(t));
                        }
                        Ok(self.stars(Regex::Fwd(t)))
                    }
                    Err(e) if e.is_semantic() => Err(e),
                    Err(test_err) => {
                        self.pos = start + 1;
                        let inner = match self.alt() {
                            Ok(r) => r,
                            Err(e) if e.offset >= test_err.offset || e.is_semantic() => return Err(e),
                            Err(_) => return Err(test_err),
                        };
                        self.expect(")")?;
                        if self.peek_inverse() {
                            return Err(self.err(self.pos, "'^-' cannot follow a group"));
                        }
                        let r = self.stars(inner);
                        if self.peek_inverse() {
                            return Err(self.err(self.pos, "'^-' cannot follow a group"));
                        }
                        Ok(r)
                    }
                }
            }
            Some(_) => {
                let t = self.test_atom_bare()?;
                let r = if self.eat("^-") { Regex::Bwd(t) } else { Regex::Fwd(t) };
                self.no_star_here()?;
                Ok(r)
            }
            None => Err(self.unexpected("expected a path expression")),
        }
    }

    /// An atom in regex position: a label or `_`, never a comparison.
    fn test_atom_bare(&mut self) -> Result<Test, ParseError> {
        self.skip_ws();
        let name = match self.name()? {
            Some(n) => n,
            None => return Err(self.unexpected("expected a test")),
        };
        if self.peek() == Some('=') {
            return Err(self.err(self.pos, "comparisons must be parenthesised"));
        }
        Ok(match name {
            Name::Bare(s) if s == "_" => Test::Any,
            n => Test::Label(n.text().to_string()),
        })
    }

    fn peek_inverse(&mut self) -> bool {
        self.skip_ws();
        self.src[self.pos..].starts_with("^-")
    }

    fn no_star_here(&mut self) -> Result<(), ParseError> {
        if self.peek() == Some('*') {
            return Err(self.err(self.pos, "'*' applies to parenthesised groups only"));
        }
        if self.peek() == Some('^') {
            return Err(self.unexpected("expected '/', '+' or ')'"));
        }
        Ok(())
    }

    fn stars(&mut self, mut r: Regex) -> Regex {
        while self.eat("*") {
            r = Regex::star(r);
        }
        r
    }
}

fn write_atom(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    if !s.is_empty() && s != "_" && s.chars().all(is_bare_char) {
        return f.write_str(s);
    }
    f.write_str("\"")?;
    for c in s.chars() {
        if c == '"' || c == '\\' {
            f.write_str("\\")?;
        }
        write!(f, "{c}")?;
    }
    f.write_str("\"")
}

impl Test {
    fn write_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        let (own, paren) = match self {
            Test::Or(..) => (0, prec > 0),
            Test::And(..) => (1, prec > 1),
            _ => (2, false),
        };
        if paren {
            f.write_str("(")?;
        }
        match self {
            Test::Label(l) => write_atom(f, l)?,
            Test::PropEq(p, v) => {
                write_atom(f, p)?;
                f.write_str("=")?;
                write_atom(f, v)?;
            }
            Test::FeatEq(i, v) => {
                write!(f, "f{i}=")?;
                write_atom(f, v)?;
            }
            Test::Any => f.write_str("_")?,
            Test::Not(t) => {
                f.write_str("!")?;
                t.write_prec(f, 2)?;
            }
            Test::Or(a, b) => {
                a.write_prec(f, own)?;
                f.write_str("|")?;
                b.write_prec(f, own + 1)?;
            }
            Test::And(a, b) => {
                a.write_prec(f, own)?;
                f.write_str("&")?;
                b.write_prec(f, own + 1)?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }

    fn write_wrapped(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_atomic() {
            self.write_prec(f, 2)
        } else {
            f.write_str("(")?;
            self.write_prec(f, 0)?;
            f.write_str(")")
        }
    }
}

impl fmt::Display for Test {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0)
    }
}

impl Regex {
    fn write_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self {
            Regex::Node(t) => {
                f.write_str("?")?;
                t.write_wrapped(f)
            }
            Regex::Fwd(t) => t.write_wrapped(f),
            Regex::Bwd(t) => {
                t.write_wrapped(f)?;
                f.write_str("^-")
            }
            Regex::Star(a) => {
                f.write_str("(")?;
                a.write_prec(f, 0)?;
                f.write_str(")*")
            }
            Regex::Alt(a, b) => {
                if prec > 0 {
                    f.write_str("(")?;
                }
                a.write_prec(f, 0)?;
                f.write_str("+")?;
                b.write_prec(f, 1)?;
                if prec > 0 {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Regex::Seq(a, b) => {
                if prec > 1 {
                    f.write_str("(")?;
                }
                a.write_prec(f, 1)?;
                f.write_str("/")?;
                b.write_prec(f, 2)?;
                if prec > 1 {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

/// Prints with the minimal parentheses that re-parse to the same tree.
impl fmt::Display for Regex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0)
    }
}
