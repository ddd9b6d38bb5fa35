//! Interpreter for the C subset produced by `emit_code`: enums, `static`
//! globals, functions, `switch` with fallthrough, `if`/`else`, blocks,
//! `int` locals, assignments, `break` and `return`.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(i64),
    Punct(&'static str),
}

const PUNCTS: [&str; 20] = [
    "&&", "||", "==", "!=", "<=", ">=", "<", ">", "+", "-", "*", "!", "=", ";", ",", ":", "(", ")", "{", "}",
];

fn lex(src: &str) -> Result<Vec<Tok>, String> {
    let mut toks = Vec::new();
    let b = src.as_bytes();
    let mut i = 0;
    'outer: while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            toks.push(Tok::Ident(src[start..i].to_string()));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            toks.push(Tok::Num(src[start..i].parse().map_err(|e| format!("{e}"))?));
            continue;
        }
        for p in PUNCTS {
            if src[i..].starts_with(p) {
                toks.push(Tok::Punct(p));
                i += p.len();
                continue 'outer;
            }
        }
        return Err(format!("unexpected character {:?} at {i}", c as char));
    }
    Ok(toks)
}

#[derive(Debug, Clone)]
enum Expr {
    Num(i64),
    Name(String),
    Unary(&'static str, Box<Expr>),
    Bin(&'static str, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone)]
enum Stmt {
    Block(Vec<Stmt>),
    Switch(Expr, Vec<(Option<String>, Vec<Stmt>)>),
    If(Expr, Box<Stmt>, Option<Box<Stmt>>),
    Decl(String, Expr),
    Assign(String, Expr),
    Break,
    Return(Option<Expr>),
}

#[derive(Debug, Clone)]
struct Function {
    params: Vec<String>,
    body: Vec<Stmt>,
}

/// A parsed program plus its global store.
#[derive(Debug, Clone)]
pub struct Program {
    enums: BTreeMap<String, Vec<String>>,
    constants: BTreeMap<String, i64>,
    globals: BTreeMap<String, i64>,
    functions: BTreeMap<String, Function>,
}

enum Flow {
    Normal,
    Break,
    Return(Option<i64>),
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Result<Tok, String> {
        let t = self.toks.get(self.pos).cloned().ok_or("unexpected end of input")?;
        self.pos += 1;
        Ok(t)
    }

    fn is(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(q)) if q == w)
    }

    fn eat(&mut self, p: &str) -> Result<(), String> {
        match self.next()? {
            Tok::Punct(q) if q == p => Ok(()),
            t => Err(format!("expected `{p}`, found {t:?} at token {}", self.pos - 1)),
        }
    }

    fn ident(&mut self) -> Result<String, String> {
        match self.next()? {
            Tok::Ident(s) => Ok(s),
            t => Err(format!("expected identifier, found {t:?}")),
        }
    }

    fn program(&mut self) -> Result<Program, String> {
        let mut prog = Program {
            enums: BTreeMap::new(),
            constants: BTreeMap::new(),
            globals: BTreeMap::new(),
            functions: BTreeMap::new(),
        };
        while self.peek().is_some() {
            let word = self.ident()?;
            match word.as_str() {
                "enum" => {
                    let name = self.ident()?;
                    self.eat("{")?;
                    let mut members = Vec::new();
                    while !self.is("}") {
                        let m = self.ident()?;
                        prog.constants.insert(m.clone(), members.len() as i64);
                        members.push(m);
                        if !self.is("}") {
                            self.eat(",")?;
                        }
                    }
                    self.eat("}")?;
                    self.eat(";")?;
                    prog.enums.insert(name, members);
                }
                "static" => {
                    let _ty = self.ident()?;
                    let name = self.ident()?;
                    self.eat(";")?;
                    prog.globals.insert(name, 0);
                }
                "void" | "int" => {
                    let name = self.ident()?;
                    self.eat("(")?;
                    let mut params = Vec::new();
                    while !self.is(")") {
                        let _ty = self.ident()?;
                        params.push(self.ident()?);
                        if !self.is(")") {
                            self.eat(",")?;
                        }
                    }
                    self.eat(")")?;
                    let body = self.block()?;
                    prog.functions.insert(name, Function { params, body });
                }
                w => return Err(format!("unexpected top-level `{w}`")),
            }
        }
        Ok(prog)
    }

    fn block(&mut self) -> Result<Vec<Stmt>, String> {
        self.eat("{")?;
        let mut out = Vec::new();
        while !self.is("}") {
            out.push(self.stmt()?);
        }
        self.eat("}")?;
        Ok(out)
    }

    fn stmt(&mut self) -> Result<Stmt, String> {
        if self.is("{") {
            return Ok(Stmt::Block(self.block()?));
        }
        let word = self.ident()?;
        match word.as_str() {
            "switch" => {
                self.eat("(")?;
                let scrutinee = self.expr()?;
                self.eat(")")?;
                self.eat("{")?;
                let mut arms = Vec::new();
                while !self.is("}") {
                    let label = if self.is_word("default") {
                        self.next()?;
                        None
                    } else {
                        let w = self.ident()?;
                        if w != "case" {
                            return Err(format!("expected `case`, found `{w}`"));
                        }
                        Some(self.ident()?)
                    };
                    self.eat(":")?;
                    let mut body = Vec::new();
                    while !self.is("}") && !self.is_word("case") && !self.is_word("default") {
                        body.push(self.stmt()?);
                    }
                    arms.push((label, body));
                }
                self.eat("}")?;
                Ok(Stmt::Switch(scrutinee, arms))
            }
            "if" => {
                self.eat("(")?;
                let cond = self.expr()?;
                self.eat(")")?;
                let then = Box::new(self.stmt()?);
                let els = if self.is_word("else") {
                    self.next()?;
                    Some(Box::new(self.stmt()?))
                } else {
                    None
                };
                Ok(Stmt::If(cond, then, els))
            }
            "break" => {
                self.eat(";")?;
                Ok(Stmt::Break)
            }
            "return" => {
                let value = if self.is(";") { None } else { Some(self.expr()?) };
                self.eat(";")?;
                Ok(Stmt::Return(value))
            }
            "int" => {
                let name = self.ident()?;
                self.eat("=")?;
                let e = self.expr()?;
                self.eat(";")?;
                Ok(Stmt::Decl(name, e))
            }
            _ => {
                self.eat("=")?;
                let e = self.expr()?;
                self.eat(";")?;
                Ok(Stmt::Assign(word, e))
            }
        }
    }

    fn expr(&mut self) -> Result<Expr, String> {
        self.binary(0)
    }

    fn binary(&mut self, level: usize) -> Result<Expr, String> {
        const LEVELS: [&[&str]; 5] = [&["||"], &["&&"], &["==", "!="], &["<", "<=", ">", ">="], &["+", "-"]];
        const MUL: &[&str] = &["*"];
        let ops = if level < LEVELS.len() { LEVELS[level] } else if level == LEVELS.len() { MUL } else { return self.unary() };
        let mut lhs = self.binary(level + 1)?;
        loop {
            let op = match self.peek() {
                Some(Tok::Punct(p)) if ops.contains(p) => *p,
                _ => return Ok(lhs),
            };
            self.next()?;
            let rhs = self.binary(level + 1)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, String> {
        match self.next()? {
            Tok::Punct("!") => Ok(Expr::Unary("!", Box::new(self.unary()?))),
            Tok::Punct("-") => Ok(Expr::Unary("-", Box::new(self.unary()?))),
            Tok::Punct("(") => {
                let e = self.expr()?;
                self.eat(")")?;
                Ok(e)
            }
            Tok::Num(n) => Ok(Expr::Num(n)),
            Tok::Ident(s) => Ok(Expr::Name(s)),
            t => Err(format!("unexpected {t:?} in expression")),
        }
    }
}

impl Program {
    pub fn parse(src: &str) -> Result<Program, String> {
        let mut p = Parser { toks: lex(src)?, pos: 0 };
        p.program()
    }

    pub fn global(&self, name: &str) -> Option<i64> {
        self.globals.get(name).copied()
    }

    /// Value of an enum constant.
    pub fn constant(&self, name: &str) -> Option<i64> {
        self.constants.get(name).copied()
    }

    /// Name of the `value`-th member of `enum ty`.
    pub fn member(&self, ty: &str, value: i64) -> Option<&str> {
        self.enums.get(ty)?.get(usize::try_from(value).ok()?).map(String::as_str)
    }

    /// Calls a function, returning its value if it returned one.
    pub fn call(&mut self, name: &str, args: &[i64]) -> Result<Option<i64>, String> {
        let f = self.functions.get(name).cloned().ok_or_else(|| format!("no function `{name}`"))?;
        if f.params.len() != args.len() {
            return Err(format!("`{name}` takes {} arguments", f.params.len()));
        }
        let mut scopes = vec![f.params.iter().cloned().zip(args.iter().copied()).collect::<BTreeMap<_, _>>()];
        match self.exec_all(&f.body, &mut scopes)? {
            Flow::Return(v) => Ok(v),
            Flow::Normal => Ok(None),
            Flow::Break => Err("`break` outside of a switch".into()),
        }
    }

    fn exec_all(&mut self, stmts: &[Stmt], scopes: &mut Vec<BTreeMap<String, i64>>) -> Result<Flow, String> {
        for s in stmts {
            match self.exec(s, scopes)? {
                Flow::Normal => {}
                flow => return Ok(flow),
            }
        }
        Ok(Flow::Normal)
    }

    fn exec(&mut self, s: &Stmt, scopes: &mut Vec<BTreeMap<String, i64>>) -> Result<Flow, String> {
        match s {
            Stmt::Block(body) => {
                scopes.push(BTreeMap::new());
                let flow = self.exec_all(body, scopes);
                scopes.pop();
                flow
            }
            Stmt::Switch(e, arms) => {
                let v = self.eval(e, scopes)?;
                let start = arms
                    .iter()
                    .position(|(label, _)| label.as_ref().is_some_and(|l| self.constants.get(l) == Some(&v)))
                    .or_else(|| arms.iter().position(|(label, _)| label.is_none()));
                let Some(start) = start else { return Ok(Flow::Normal) };
                scopes.push(BTreeMap::new());
                let mut flow = Flow::Normal;
                // Fallthrough: run every arm from the matching one on.
                for (_, body) in &arms[start..] {
                    match self.exec_all(body, scopes)? {
                        Flow::Normal => continue,
                        Flow::Break => break,
                        ret => {
                            flow = ret;
                            break;
                        }
                    }
                }
                scopes.pop();
                Ok(flow)
            }
            Stmt::If(c, then, els) => {
                if self.eval(c, scopes)? != 0 {
                    self.exec(then, scopes)
                } else if let Some(els) = els {
                    self.exec(els, scopes)
                } else {
                    Ok(Flow::Normal)
                }
            }
            Stmt::Decl(name, e) => {
                let v = self.eval(e, scopes)?;
                scopes.last_mut().unwrap().insert(name.clone(), v);
                Ok(Flow::Normal)
            }
            Stmt::Assign(name, e) => {
                let v = self.eval(e, scopes)?;
                if let Some(slot) = scopes.iter_mut().rev().find_map(|s| s.get_mut(name)) {
                    *slot = v;
                } else if let Some(slot) = self.globals.get_mut(name) {
                    *slot = v;
                } else {
                    return Err(format!("assignment to undeclared `{name}`"));
                }
                Ok(Flow::Normal)
            }
            Stmt::Break => Ok(Flow::Break),
            Stmt::Return(e) => Ok(Flow::Return(match e {
                Some(e) => Some(self.eval(e, scopes)?),
                None => None,
            })),
        }
    }

    fn eval(&self, e: &Expr, scopes: &[BTreeMap<String, i64>]) -> Result<i64, String> {
        let overflow = || "integer overflow".to_string();
        Ok(match e {
            Expr::Num(n) => *n,
            Expr::Name(n) => scopes
                .iter()
                .rev()
                .find_map(|s| s.get(n))
                .or_else(|| self.globals.get(n))
                .or_else(|| self.constants.get(n))
                .copied()
                .ok_or_else(|| format!("unknown name `{n}`"))?,
            Expr::Unary("!", a) => i64::from(self.eval(a, scopes)? == 0),
            Expr::Unary(_, a) => self.eval(a, scopes)?.checked_neg().ok_or_else(overflow)?,
            Expr::Bin(op, a, b) => {
                let a = self.eval(a, scopes)?;
                // Short-circuit like C.
                match *op {
                    "&&" if a == 0 => return Ok(0),
                    "||" if a != 0 => return Ok(1),
                    _ => {}
                }
                let b = self.eval(b, scopes)?;
                match *op {
                    "&&" | "||" => i64::from(b != 0),
                    "==" => i64::from(a == b),
                    "!=" => i64::from(a != b),
                    "<" => i64::from(a < b),
                    "<=" => i64::from(a <= b),
                    ">" => i64::from(a > b),
                    ">=" => i64::from(a >= b),
                    "+" => a.checked_add(b).ok_or_else(overflow)?,
                    "-" => a.checked_sub(b).ok_or_else(overflow)?,
                    "*" => a.checked_mul(b).ok_or_else(overflow)?,
                    op => return Err(format!("unknown operator `{op}`")),
                }
            }
        })
    }
}

/// What one call of `Transition` did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CStep {
    pub fired: bool,
    pub state: String,
    pub output: Option<String>,
    pub vars: BTreeMap<String, i64>,
    pub in_domain: bool,
}

/// Runs `Initialization` and then `Transition` once per input, stopping
/// after the first step that does not fire or leaves the domain.
pub fn run_program(src: &str, var_names: &[&str], inputs: &[&str]) -> Result<Vec<CStep>, String> {
    let mut prog = Program::parse(src)?;
    prog.call("Initialization", &[])?;
    let mut steps = Vec::new();
    for i in inputs {
        let code = prog.constant(i).ok_or_else(|| format!("no input `{i}`"))?;
        let fired = prog.call("Transition", &[code])?.ok_or("Transition returned nothing")? != 0;
        let in_domain = prog.call("InDomain", &[])?.ok_or("InDomain returned nothing")? != 0;
        let state = prog.member("State", prog.global("s").unwrap()).ok_or("bad state")?.to_string();
        let output = fired.then(|| prog.member("Output", prog.global("o").unwrap()).map(str::to_string)).flatten();
        let vars = var_names.iter().map(|v| (v.to_string(), prog.global(v).unwrap_or_default())).collect();
        steps.push(CStep {
            fired,
            state,
            output,
            vars,
            in_domain,
        });
        if !fired || !in_domain {
            break;
        }
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn switch_falls_through_until_break() {
        let src = "enum E {A, B, C}; static int x;
            void f(E e) { switch(e) { case A: x = x + 1; case B: x = x + 10; break; case C: x = 100; } }";
        let mut p = Program::parse(src).unwrap();
        p.call("f", &[0]).unwrap();
        assert_eq!(p.global("x"), Some(11));
        p.call("f", &[1]).unwrap();
        assert_eq!(p.global("x"), Some(21));
        p.call("f", &[2]).unwrap();
        assert_eq!(p.global("x"), Some(100));
    }

    #[test]
    fn expressions_follow_c_precedence() {
        let src = "static int r; void f() { r = 1+2*3 == 7 && !(2<1) || 0; int t = -(3)-2; r = r + t*10; }";
        let mut p = Program::parse(src).unwrap();
        p.call("f", &[]).unwrap();
        assert_eq!(p.global("r"), Some(1 - 50));
    }
}
