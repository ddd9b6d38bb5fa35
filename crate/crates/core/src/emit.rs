//! Switch-style C code and Graphviz DOT rendering.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use crate::efsm::{Efsm, EfsmSdl};
use crate::expr::{CmpOp, IntExpr, Pred, Update};
use crate::mealy::MealyAutomaton;
use crate::supervisor::{PlainAutomaton, Supervisor};
use crate::transform::SupervisorState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dialect {
    /// `enum` declarations, `switch(s)` / `switch(i)` / `if(pred) … else …`.
    #[default]
    C,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodegenOptions {
    pub dialect: Dialect,
    pub indent: usize,
}

impl Default for CodegenOptions {
    fn default() -> Self {
        CodegenOptions {
            dialect: Dialect::C,
            indent: 2,
        }
    }
}

/// Generates the state machine as C source.
///
/// `Transition` returns 1 when a pair fired and 0 when no pair exists for the
/// current state and input. `InDomain` reports whether every variable lies in
/// its declared domain, so a caller can detect an update that left it.
pub fn emit_code(m: &EfsmSdl, opts: &CodegenOptions) -> String {
    let Dialect::C = opts.dialect;
    let sig = m.signature();
    let pad = |level: usize| " ".repeat(level * opts.indent);
    let mut out = String::new();

    writeln!(out, "enum State {{{}}}; static State s;", sig.states.join(", ")).unwrap();
    writeln!(
        out,
        "enum Input {{{}}}; enum Output {{{}}};",
        sig.inputs.join(", "),
        sig.outputs.join(", ")
    )
    .unwrap();
    write!(out, "static Input i; static Output o;").unwrap();
    for v in &sig.vars {
        write!(out, " static int {};", v.name).unwrap();
    }
    out.push('\n');

    let mut init = format!("s={};", m.init().state);
    for v in &sig.vars {
        let value = m.init().vals.get(&v.name).unwrap_or(v.lo);
        write!(init, " {}={};", v.name, value).unwrap();
    }
    writeln!(out, "void Initialization()\n{{ {init} }}").unwrap();

    let bounds: Vec<String> = sig
        .vars
        .iter()
        .map(|v| format!("{0}>={1} && {0}<={2}", v.name, v.lo, v.hi))
        .collect();
    let bounds = if bounds.is_empty() { "1".to_string() } else { bounds.join(" && ") };
    writeln!(out, "int InDomain()\n{{ return {bounds}; }}").unwrap();

    writeln!(out, "int Transition(Input i)\n{{").unwrap();
    writeln!(out, "{}switch(s)\n{}{{", pad(1), pad(1)).unwrap();
    for y in &sig.states {
        let pairs: Vec<_> = sig.inputs.iter().filter_map(|i| m.pair(y, i)).collect();
        if pairs.is_empty() {
            continue;
        }
        writeln!(out, "{}case {y}:", pad(2)).unwrap();
        writeln!(out, "{}switch(i)\n{}{{", pad(3), pad(3)).unwrap();
        for p in pairs {
            writeln!(out, "{}case {}:", pad(4), p.input).unwrap();
            writeln!(out, "{}if({})", pad(5), CPred(&p.pred)).unwrap();
            let b = &p.then_branch;
            writeln!(out, "{}{{{}}}", pad(5), c_branch(&b.dest, &b.output, &b.update)).unwrap();
            writeln!(out, "{}else", pad(5)).unwrap();
            let b = &p.else_branch;
            writeln!(out, "{}{{{}}}", pad(5), c_branch(&b.dest, &b.output, &b.update)).unwrap();
            writeln!(out, "{}return 1;", pad(5)).unwrap();
        }
        writeln!(out, "{}}}", pad(3)).unwrap();
        writeln!(out, "{}break;", pad(3)).unwrap();
    }
    writeln!(out, "{}}}", pad(1)).unwrap();
    writeln!(out, "{}return 0;\n}}", pad(1)).unwrap();
    out
}

fn c_branch(dest: &str, output: &str, update: &Update) -> String {
    let mut out = format!("s={dest}; o={output};");
    let assigns: Vec<(&str, &IntExpr)> = update.assignments().collect();
    // Sequential C assignments only match the simultaneous update when no
    // right-hand side reads a variable assigned before it.
    let mut assigned = BTreeSet::new();
    let mut sequential_ok = true;
    for (name, expr) in &assigns {
        let mut reads = BTreeSet::new();
        expr.collect_vars(&mut reads);
        if reads.iter().any(|r| assigned.contains(r)) {
            sequential_ok = false;
        }
        assigned.insert(*name);
    }
    if sequential_ok {
        for (name, expr) in &assigns {
            write!(out, " {name}={};", CInt(expr, 0)).unwrap();
        }
    } else {
        for (n, (_, expr)) in assigns.iter().enumerate() {
            write!(out, " int __t{n}={};", CInt(expr, 0)).unwrap();
        }
        for (n, (name, _)) in assigns.iter().enumerate() {
            write!(out, " {name}=__t{n};").unwrap();
        }
    }
    out
}

// C precedence levels, loosest first.
const C_OR: u8 = 1;
const C_AND: u8 = 2;
const C_EQ: u8 = 3;
const C_REL: u8 = 4;
const C_ADD: u8 = 5;
const C_MUL: u8 = 6;
const C_UNARY: u8 = 7;

struct CInt<'a>(&'a IntExpr, u8);

impl fmt::Display for CInt<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let CInt(e, min) = *self;
        match e {
            IntExpr::Lit(n) if *n < 0 => write!(f, "({n})"),
            IntExpr::Lit(n) => write!(f, "{n}"),
            IntExpr::Var(name) => f.write_str(name),
            IntExpr::Neg(inner) => write!(f, "(-{})", CInt(inner, C_UNARY)),
            IntExpr::Bin(op, a, b) => {
                let prec = match op {
                    crate::expr::ArithOp::Mul => C_MUL,
                    _ => C_ADD,
                };
                let paren = prec < min;
                if paren {
                    f.write_str("(")?;
                }
                write!(f, "{}{}{}", CInt(a, prec), op.symbol(), CInt(b, prec + 1))?;
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

struct CPred<'a>(&'a Pred);

impl CPred<'_> {
    fn fmt_prec(p: &Pred, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let prec = match p {
            Pred::Const(_) => C_UNARY + 1,
            Pred::Cmp(CmpOp::Eq | CmpOp::Ne, ..) => C_EQ,
            Pred::Cmp(..) => C_REL,
            Pred::Not(_) => C_UNARY,
            Pred::And(..) => C_AND,
            Pred::Or(..) => C_OR,
        };
        let paren = prec < min;
        if paren {
            f.write_str("(")?;
        }
        match p {
            Pred::Const(b) => write!(f, "{}", u8::from(*b))?,
            Pred::Cmp(op, a, b) => write!(f, "{}{}{}", CInt(a, C_ADD), op.symbol(), CInt(b, C_ADD))?,
            Pred::Not(inner) => {
                f.write_str("!")?;
                Self::fmt_prec(inner, f, C_UNARY)?;
            }
            Pred::And(a, b) => {
                Self::fmt_prec(a, f, C_AND)?;
                f.write_str(" && ")?;
                Self::fmt_prec(b, f, C_AND + 1)?;
            }
            Pred::Or(a, b) => {
                Self::fmt_prec(a, f, C_OR)?;
                f.write_str(" || ")?;
                Self::fmt_prec(b, f, C_OR + 1)?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for CPred<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Self::fmt_prec(self.0, f, 0)
    }
}

/// How a state is shown in a DOT node label.
pub trait StateLabel {
    fn label(&self) -> String;
}

impl StateLabel for String {
    fn label(&self) -> String {
        self.clone()
    }
}

impl StateLabel for u32 {
    fn label(&self) -> String {
        self.to_string()
    }
}

impl StateLabel for SupervisorState {
    fn label(&self) -> String {
        self.to_string()
    }
}

impl<A: StateLabel, B: StateLabel> StateLabel for (A, B) {
    fn label(&self) -> String {
        format!("<{}, {}>", self.0.label(), self.1.label())
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n")
}

struct Dot {
    out: String,
}

impl Dot {
    fn new(name: &str) -> Self {
        Dot {
            out: format!("digraph {name} {{\n  rankdir=LR;\n  node [shape=circle];\n"),
        }
    }

    fn node(&mut self, id: usize, label: &str, initial: bool) {
        let extra = if initial { ", peripheries=2" } else { "" };
        writeln!(self.out, "  n{id} [label=\"{}\"{extra}];", escape(label)).unwrap();
    }

    fn edge(&mut self, from: usize, to: usize, label: &str) {
        writeln!(self.out, "  n{from} -> n{to} [label=\"{}\"];", escape(label)).unwrap();
    }

    fn finish(mut self) -> String {
        self.out.push_str("}\n");
        self.out
    }
}

fn index_of<T: Ord>(states: &BTreeSet<T>, q: &T) -> usize {
    states.range(..q).count()
}

/// EFSM edges read `i [pred] / o ; update`.
pub fn efsm_dot(m: &Efsm) -> String {
    let sig = m.signature();
    let mut dot = Dot::new("efsm");
    let pos = |y: &str| sig.states.iter().position(|s| s == y).expect("validated state");
    for (n, y) in sig.states.iter().enumerate() {
        dot.node(n, y, *y == m.init().state);
    }
    for t in m.transitions() {
        let mut label = format!("{} [{}] / {}", t.input, t.pred, t.output);
        if !t.update.is_identity() {
            write!(label, " ; {}", t.update).unwrap();
        }
        dot.edge(pos(&t.src), pos(&t.dest), &label);
    }
    dot.finish()
}

pub fn efsm_sdl_dot(m: &EfsmSdl) -> String {
    efsm_dot(&m.to_efsm())
}

/// Mealy edges read `<i,bin>/o`.
pub fn mealy_dot<Q: Clone + Ord + fmt::Debug + StateLabel>(g: &MealyAutomaton<Q>) -> String {
    let mut dot = Dot::new("mealy");
    for (n, q) in g.states().iter().enumerate() {
        dot.node(n, &q.label(), q == g.initial());
    }
    for (q, e, to, z) in g.transitions() {
        dot.edge(index_of(g.states(), q), index_of(g.states(), to), &format!("{e}/{z}"));
    }
    dot.finish()
}

pub fn automaton_dot<X: Clone + Ord + fmt::Debug + StateLabel>(s: &PlainAutomaton<X>) -> String {
    let mut dot = Dot::new("automaton");
    for (n, x) in s.states().iter().enumerate() {
        dot.node(n, &x.label(), x == s.initial());
    }
    for (x, e, to) in s.transitions() {
        dot.edge(index_of(s.states(), x), index_of(s.states(), to), &e.to_string());
    }
    dot.finish()
}

/// Supervisor states are annotated with their control pattern `ψ(x)`.
pub fn supervisor_dot<X: Clone + Ord + fmt::Debug + StateLabel>(phi: &Supervisor<X>) -> String {
    let s = phi.automaton();
    let mut dot = Dot::new("supervisor");
    for (n, x) in s.states().iter().enumerate() {
        let label = format!("{}\npsi={}", x.label(), phi.psi(x));
        dot.node(n, &label, x == s.initial());
    }
    for (x, e, to) in s.transitions() {
        dot.edge(index_of(s.states(), x), index_of(s.states(), to), &e.to_string());
    }
    dot.finish()
}
