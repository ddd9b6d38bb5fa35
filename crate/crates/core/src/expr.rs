//! Integer expressions, guard predicates and simultaneous-assignment updates.
//!
//! The concrete syntax is C-like:
//!
//! ```text
//! pred   := or
//! or     := and ( "||" and )*
//! and    := cmp ( "&&" cmp )*
//! cmp    := sum ( ("<" | "<=" | ">" | ">=" | "==" | "!=") sum )?
//! sum    := term ( ("+" | "-") term )*
//! term   := unary ( "*" unary )*
//! unary  := "-" unary | "!" unary | atom
//! atom   := integer | "true" | "false" | ident | "(" or ")"
//! update := ( ident ":=" sum ( ";" ident ":=" sum )* ";"? )?
//! ```
//!
//! Arithmetic is carried out on `i128` with overflow checks; only the final
//! value of an assignment is checked against the variable's domain.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while evaluating an expression.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("integer overflow while evaluating expression")]
    Overflow,
    #[error("update assigns {value} to `{var}`, outside its domain")]
    OutOfDomain { var: String, value: i128 },
}

/// A syntax or typing error, with the byte offset into the source text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at offset {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl ParseError {
    fn new(offset: usize, message: impl Into<String>) -> Self {
        ParseError {
            offset,
            message: message.into(),
        }
    }
}

const KEYWORDS: &[&str] = &["true", "false"];

/// Returns true if `s` matches `[A-Za-z_][A-Za-z0-9_]*` and is not a keyword.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && !KEYWORDS.contains(&s)
}

/// A variable together with its finite inclusive domain `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarDecl {
    pub name: String,
    pub lo: i64,
    pub hi: i64,
}

impl VarDecl {
    pub fn new(name: impl Into<String>, lo: i64, hi: i64) -> Self {
        VarDecl {
            name: name.into(),
            lo,
            hi,
        }
    }

    pub fn contains(&self, value: i128) -> bool {
        i128::from(self.lo) <= value && value <= i128::from(self.hi)
    }

    /// Number of values in the domain, zero when `lo > hi`.
    pub fn size(&self) -> u128 {
        if self.lo > self.hi {
            0
        } else {
            (i128::from(self.hi) - i128::from(self.lo) + 1) as u128
        }
    }
}

/// Number of valuations in `dom(v1) × … × dom(vn)`, or `None` on overflow.
pub fn domain_size(vars: &[VarDecl]) -> Option<u128> {
    vars.iter()
        .try_fold(1u128, |acc, decl| acc.checked_mul(decl.size()))
}

/// Every in-domain valuation over `vars`, in ascending `Valuation` order.
pub fn all_valuations(vars: &[VarDecl]) -> Vec<Valuation> {
    let mut sorted: Vec<&VarDecl> = vars.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let mut out = vec![Valuation::default()];
    // Iterating the last name innermost on top of the earlier ones keeps the
    // output sorted under the map ordering.
    for decl in sorted {
        let mut next = Vec::with_capacity(out.len() * decl.size() as usize);
        for val in &out {
            for v in decl.lo..=decl.hi {
                let mut val = val.clone();
                val.set(decl.name.clone(), v);
                next.push(val);
            }
        }
        out = next;
    }
    out
}

/// An assignment of integer values to variable names.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Valuation(BTreeMap<String, i64>);

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<i64> {
        self.0.get(name).copied()
    }

    pub fn set(&mut self, name: impl Into<String>, value: i64) {
        self.0.insert(name.into(), value);
    }

    pub fn with(mut self, name: impl Into<String>, value: i64) -> Self {
        self.set(name, value);
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, i64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when the valuation covers exactly `vars` with in-domain values.
    pub fn is_legal(&self, vars: &[VarDecl]) -> bool {
        self.0.len() == vars.len()
            && vars.iter().all(|decl| match self.get(&decl.name) {
                Some(v) => decl.contains(v.into()),
                None => false,
            })
    }
}

impl FromIterator<(String, i64)> for Valuation {
    fn from_iter<T: IntoIterator<Item = (String, i64)>>(iter: T) -> Self {
        Valuation(iter.into_iter().collect())
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, (name, value)) in self.0.iter().enumerate() {
            if n > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{name}={value}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
        }
    }

    fn prec(self) -> u8 {
        match self {
            ArithOp::Add | ArithOp::Sub => PREC_SUM,
            ArithOp::Mul => PREC_TERM,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }

    fn holds(self, a: i128, b: i128) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }
}

/// Integer-valued expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum IntExpr {
    Lit(i64),
    Var(String),
    Neg(Box<IntExpr>),
    Bin(ArithOp, Box<IntExpr>, Box<IntExpr>),
}

impl IntExpr {
    pub fn var(name: impl Into<String>) -> Self {
        IntExpr::Var(name.into())
    }

    pub fn bin(op: ArithOp, lhs: IntExpr, rhs: IntExpr) -> Self {
        IntExpr::Bin(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn eval(&self, val: &Valuation) -> Result<i128, EvalError> {
        match self {
            IntExpr::Lit(n) => Ok((*n).into()),
            IntExpr::Var(name) => val
                .get(name)
                .map(i128::from)
                .ok_or_else(|| EvalError::UnknownVariable(name.clone())),
            IntExpr::Neg(e) => e.eval(val)?.checked_neg().ok_or(EvalError::Overflow),
            IntExpr::Bin(op, a, b) => {
                let (a, b) = (a.eval(val)?, b.eval(val)?);
                match op {
                    ArithOp::Add => a.checked_add(b),
                    ArithOp::Sub => a.checked_sub(b),
                    ArithOp::Mul => a.checked_mul(b),
                }
                .ok_or(EvalError::Overflow)
            }
        }
    }

    pub fn collect_vars<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            IntExpr::Lit(_) => {}
            IntExpr::Var(name) => {
                out.insert(name);
            }
            IntExpr::Neg(e) => e.collect_vars(out),
            IntExpr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    fn prec(&self) -> u8 {
        match self {
            IntExpr::Lit(n) if *n < 0 => PREC_UNARY,
            IntExpr::Lit(_) | IntExpr::Var(_) => PREC_ATOM,
            IntExpr::Neg(_) => PREC_UNARY,
            IntExpr::Bin(op, _, _) => op.prec(),
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let paren = self.prec() < min;
        if paren {
            f.write_str("(")?;
        }
        match self {
            IntExpr::Lit(n) => write!(f, "{n}")?,
            IntExpr::Var(name) => f.write_str(name)?,
            IntExpr::Neg(e) => {
                f.write_str("-")?;
                // `-(3)` rather than `-3`, which would read back as a literal.
                let min = if matches!(**e, IntExpr::Lit(_)) {
                    PREC_ATOM + 1
                } else {
                    PREC_UNARY
                };
                e.fmt_prec(f, min)?;
            }
            IntExpr::Bin(op, a, b) => {
                a.fmt_prec(f, op.prec())?;
                write!(f, " {} ", op.symbol())?;
                b.fmt_prec(f, op.prec() + 1)?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for IntExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Boolean guard over integer expressions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Pred {
    Const(bool),
    Cmp(CmpOp, IntExpr, IntExpr),
    Not(Box<Pred>),
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
}

const PREC_OR: u8 = 1;
const PREC_AND: u8 = 2;
const PREC_CMP: u8 = 3;
const PREC_SUM: u8 = 4;
const PREC_TERM: u8 = 5;
const PREC_UNARY: u8 = 6;
const PREC_ATOM: u8 = 7;

impl Pred {
    pub fn cmp(op: CmpOp, lhs: IntExpr, rhs: IntExpr) -> Self {
        Pred::Cmp(op, lhs, rhs)
    }

    pub fn negate(self) -> Self {
        Pred::Not(Box::new(self))
    }

    pub fn and(self, other: Pred) -> Self {
        Pred::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Pred) -> Self {
        Pred::Or(Box::new(self), Box::new(other))
    }

    /// True when `other` is literally `!self`.
    pub fn is_syntactic_negation_of(&self, other: &Pred) -> bool {
        matches!(other, Pred::Not(inner) if **inner == *self)
    }

    pub fn eval(&self, val: &Valuation) -> Result<bool, EvalError> {
        Ok(match self {
            Pred::Const(b) => *b,
            Pred::Cmp(op, a, b) => op.holds(a.eval(val)?, b.eval(val)?),
            Pred::Not(p) => !p.eval(val)?,
            // Both operands are evaluated so that unknown variables surface
            // regardless of short-circuiting.
            Pred::And(a, b) => {
                let (a, b) = (a.eval(val)?, b.eval(val)?);
                a && b
            }
            Pred::Or(a, b) => {
                let (a, b) = (a.eval(val)?, b.eval(val)?);
                a || b
            }
        })
    }

    pub fn vars(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Pred::Const(_) => {}
            Pred::Cmp(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Pred::Not(p) => p.collect_vars(out),
            Pred::And(a, b) | Pred::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Pred::Const(_) => PREC_ATOM,
            Pred::Cmp(..) => PREC_CMP,
            Pred::Not(_) => PREC_UNARY,
            Pred::And(..) => PREC_AND,
            Pred::Or(..) => PREC_OR,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let paren = self.prec() < min;
        if paren {
            f.write_str("(")?;
        }
        match self {
            Pred::Const(b) => write!(f, "{b}")?,
            Pred::Cmp(op, a, b) => {
                a.fmt_prec(f, PREC_SUM)?;
                write!(f, " {} ", op.symbol())?;
                b.fmt_prec(f, PREC_SUM)?;
            }
            Pred::Not(p) => {
                f.write_str("!")?;
                p.fmt_prec(f, PREC_UNARY)?;
            }
            Pred::And(a, b) => {
                a.fmt_prec(f, PREC_AND)?;
                f.write_str(" && ")?;
                b.fmt_prec(f, PREC_AND + 1)?;
            }
            Pred::Or(a, b) => {
                a.fmt_prec(f, PREC_OR)?;
                f.write_str(" || ")?;
                b.fmt_prec(f, PREC_OR + 1)?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl std::str::FromStr for Pred {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_pred(s)
    }
}

/// Simultaneous assignment: every right-hand side reads the pre-state.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Update(BTreeMap<String, IntExpr>);

impl Update {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn assign(mut self, var: impl Into<String>, expr: IntExpr) -> Self {
        self.0.insert(var.into(), expr);
        self
    }

    pub fn assignments(&self) -> impl Iterator<Item = (&str, &IntExpr)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    /// Variables read by any right-hand side.
    pub fn read_vars(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        for e in self.0.values() {
            e.collect_vars(&mut out);
        }
        out
    }

    /// Applies the update, checking every assigned value against `vars`.
    pub fn apply(&self, vars: &[VarDecl], val: &Valuation) -> Result<Valuation, EvalError> {
        let mut next = val.clone();
        for (name, expr) in &self.0 {
            let decl = vars
                .iter()
                .find(|d| &d.name == name)
                .ok_or_else(|| EvalError::UnknownVariable(name.clone()))?;
            let value = expr.eval(val)?;
            if !decl.contains(value) {
                return Err(EvalError::OutOfDomain {
                    var: name.clone(),
                    value,
                });
            }
            next.set(name.clone(), value as i64);
        }
        Ok(next)
    }
}

impl fmt::Display for Update {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, (name, expr)) in self.0.iter().enumerate() {
            if n > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{name} := {expr}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Update {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_update(s)
    }
}

pub fn parse_pred(src: &str) -> Result<Pred, ParseError> {
    let mut p = Parser::new(src)?;
    let ast = p.parse_or()?;
    p.expect_end()?;
    ast.into_pred()
}

pub fn parse_int_expr(src: &str) -> Result<IntExpr, ParseError> {
    let mut p = Parser::new(src)?;
    let ast = p.parse_or()?;
    p.expect_end()?;
    ast.into_int()
}

pub fn parse_update(src: &str) -> Result<Update, ParseError> {
    let mut p = Parser::new(src)?;
    let mut update = Update::identity();
    while !p.at_end() {
        let offset = p.offset();
        let name = match p.next() {
            Some(Tok::Ident(name)) => name,
            _ => return Err(ParseError::new(offset, "expected variable name")),
        };
        p.expect(&Tok::Assign, "`:=`")?;
        let expr = p.parse_sum()?.into_int()?;
        if update.0.insert(name.clone(), expr).is_some() {
            return Err(ParseError::new(
                offset,
                format!("`{name}` assigned twice in one update"),
            ));
        }
        if !p.at_end() {
            p.expect(&Tok::Semi, "`;`")?;
        }
    }
    Ok(update)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(i64),
    Ident(String),
    True,
    False,
    Plus,
    Minus,
    Star,
    LParen,
    RParen,
    Cmp(CmpOp),
    AndAnd,
    OrOr,
    Bang,
    Assign,
    Semi,
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let two = bytes.get(i + 1).copied();
        let tok = match (c, two) {
            (b'<', Some(b'=')) => Tok::Cmp(CmpOp::Le),
            (b'>', Some(b'=')) => Tok::Cmp(CmpOp::Ge),
            (b'=', Some(b'=')) => Tok::Cmp(CmpOp::Eq),
            (b'!', Some(b'=')) => Tok::Cmp(CmpOp::Ne),
            (b'&', Some(b'&')) => Tok::AndAnd,
            (b'|', Some(b'|')) => Tok::OrOr,
            (b':', Some(b'=')) => Tok::Assign,
            _ => {
                let tok = match c {
                    b'<' => Tok::Cmp(CmpOp::Lt),
                    b'>' => Tok::Cmp(CmpOp::Gt),
                    b'!' => Tok::Bang,
                    b'+' => Tok::Plus,
                    b'-' => Tok::Minus,
                    b'*' => Tok::Star,
                    b'(' => Tok::LParen,
                    b')' => Tok::RParen,
                    b';' => Tok::Semi,
                    b'0'..=b'9' => {
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                        let digits = &src[start..i];
                        let n = digits.parse().map_err(|_| {
                            ParseError::new(start, format!("integer literal `{digits}` too large"))
                        })?;
                        out.push((start, Tok::Int(n)));
                        continue;
                    }
                    c if c.is_ascii_alphabetic() || c == b'_' => {
                        while i < bytes.len()
                            && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                        {
                            i += 1;
                        }
                        let word = &src[start..i];
                        out.push((
                            start,
                            match word {
                                "true" => Tok::True,
                                "false" => Tok::False,
                                _ => Tok::Ident(word.to_string()),
                            },
                        ));
                        continue;
                    }
                    _ => {
                        let ch = src[start..].chars().next().unwrap_or('?');
                        return Err(ParseError::new(start, format!("unexpected character `{ch}`")));
                    }
                };
                out.push((start, tok));
                i += 1;
                continue;
            }
        };
        out.push((start, tok));
        i += 2;
    }
    Ok(out)
}

/// Untyped syntax tree, checked into `Pred` or `IntExpr` after parsing.
#[derive(Debug)]
enum Ast {
    Int(i64),
    Bool(bool),
    Var(String),
    Neg(usize, Box<Ast>),
    Not(usize, Box<Ast>),
    Arith(usize, ArithOp, Box<Ast>, Box<Ast>),
    Cmp(usize, CmpOp, Box<Ast>, Box<Ast>),
    And(usize, Box<Ast>, Box<Ast>),
    Or(usize, Box<Ast>, Box<Ast>),
    Group(Box<Ast>),
}

impl Ast {
    fn into_pred(self) -> Result<Pred, ParseError> {
        Ok(match self {
            Ast::Group(inner) => inner.into_pred()?,
            Ast::Bool(b) => Pred::Const(b),
            Ast::Cmp(_, op, a, b) => Pred::Cmp(op, a.into_int()?, b.into_int()?),
            Ast::Not(_, p) => Pred::Not(Box::new(p.into_pred()?)),
            Ast::And(_, a, b) => Pred::And(Box::new(a.into_pred()?), Box::new(b.into_pred()?)),
            Ast::Or(_, a, b) => Pred::Or(Box::new(a.into_pred()?), Box::new(b.into_pred()?)),
            Ast::Int(_) | Ast::Var(_) => {
                return Err(ParseError::new(0, "expected a boolean expression, found an integer"))
            }
            Ast::Neg(at, _) | Ast::Arith(at, ..) => {
                return Err(ParseError::new(at, "expected a boolean expression, found an integer"))
            }
        })
    }

    fn into_int(self) -> Result<IntExpr, ParseError> {
        Ok(match self {
            Ast::Int(n) => IntExpr::Lit(n),
            Ast::Var(name) => IntExpr::Var(name),
            Ast::Group(inner) => inner.into_int()?,
            // A minus sign directly on a literal is a negative literal.
            Ast::Neg(_, e) => match *e {
                Ast::Int(n) if n > 0 => IntExpr::Lit(-n),
                e => IntExpr::Neg(Box::new(e.into_int()?)),
            },
            Ast::Arith(_, op, a, b) => IntExpr::bin(op, a.into_int()?, b.into_int()?),
            Ast::Bool(_) => {
                return Err(ParseError::new(0, "expected an integer expression, found a boolean"))
            }
            Ast::Not(at, ..) | Ast::Cmp(at, ..) | Ast::And(at, ..) | Ast::Or(at, ..) => {
                return Err(ParseError::new(at, "expected an integer expression, found a boolean"))
            }
        })
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: tokenize(src)?,
            pos: 0,
            len: src.len(),
        })
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.len, |(o, _)| *o)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn next(&mut self) -> Option<Tok> {
        let tok = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        tok
    }

    fn expect(&mut self, tok: &Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ParseError::new(self.offset(), format!("expected {what}")))
        }
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(ParseError::new(self.offset(), "unexpected trailing input"))
        }
    }

    fn parse_or(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.parse_and()?;
        while self.peek() == Some(&Tok::OrOr) {
            let at = self.offset();
            self.pos += 1;
            let rhs = self.parse_and()?;
            lhs = Ast::Or(at, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.parse_cmp()?;
        while self.peek() == Some(&Tok::AndAnd) {
            let at = self.offset();
            self.pos += 1;
            let rhs = self.parse_cmp()?;
            lhs = Ast::And(at, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_cmp(&mut self) -> Result<Ast, ParseError> {
        let lhs = self.parse_sum()?;
        if let Some(&Tok::Cmp(op)) = self.peek() {
            let at = self.offset();
            self.pos += 1;
            let rhs = self.parse_sum()?;
            if let Some(Tok::Cmp(_)) = self.peek() {
                return Err(ParseError::new(self.offset(), "comparisons do not chain"));
            }
            return Ok(Ast::Cmp(at, op, Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn parse_sum(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.parse_term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => ArithOp::Add,
                Some(Tok::Minus) => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            let at = self.offset();
            self.pos += 1;
            let rhs = self.parse_term()?;
            lhs = Ast::Arith(at, op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn parse_term(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.parse_unary()?;
        while self.peek() == Some(&Tok::Star) {
            let at = self.offset();
            self.pos += 1;
            let rhs = self.parse_unary()?;
            lhs = Ast::Arith(at, ArithOp::Mul, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Ast, ParseError> {
        let at = self.offset();
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(Ast::Neg(at, Box::new(self.parse_unary()?)))
            }
            Some(Tok::Bang) => {
                self.pos += 1;
                Ok(Ast::Not(at, Box::new(self.parse_unary()?)))
            }
            _ => self.parse_atom(),
        }
    }

    fn parse_atom(&mut self) -> Result<Ast, ParseError> {
        let at = self.offset();
        match self.next() {
            Some(Tok::Int(n)) => Ok(Ast::Int(n)),
            Some(Tok::True) => Ok(Ast::Bool(true)),
            Some(Tok::False) => Ok(Ast::Bool(false)),
            Some(Tok::Ident(name)) => Ok(Ast::Var(name)),
            Some(Tok::LParen) => {
                let inner = self.parse_or()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(Ast::Group(Box::new(inner)))
            }
            Some(_) => Err(ParseError::new(at, "unexpected token")),
            None => Err(ParseError::new(at, "unexpected end of input")),
        }
    }
}
