//! Shared test support: random machines, brute-force oracles and a small
//! interpreter for the generated C.

use std::collections::{BTreeMap, BTreeSet};

use efsm_des::efsm::{Branch, Config, Efsm, EfsmSdl, Signature, Transition, TransitionPair};
use efsm_des::expr::{ArithOp, CmpOp, IntExpr, Pred, Update, Valuation, VarDecl};
use efsm_des::mealy::{paired_alphabet, MealyAutomaton, PairedEvent};
use efsm_des::supervisor::{ControlPattern, PlainAutomaton, Supervisor};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub mod cinterp;

pub const COUNTER_JSON: &str = include_str!("../../core/fixtures/counter.json");

pub fn counter() -> EfsmSdl {
    efsm_des::parse_machine(COUNTER_JSON).expect("fixture is valid")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const STATE_NAMES: [&str; 4] = ["P", "Q", "R", "T"];
const INPUT_NAMES: [&str; 2] = ["a", "b"];
const OUTPUT_NAMES: [&str; 2] = ["m", "n"];
const VAR_NAMES: [&str; 2] = ["v", "w"];

fn random_signature(rng: &mut impl Rng) -> Signature {
    let states = &STATE_NAMES[..rng.gen_range(1..=4)];
    let inputs = &INPUT_NAMES[..rng.gen_range(1..=2)];
    let outputs = &OUTPUT_NAMES[..rng.gen_range(1..=2)];
    let vars: Vec<VarDecl> = VAR_NAMES[..rng.gen_range(0..=2)]
        .iter()
        .map(|n| {
            let lo = rng.gen_range(0..=3);
            VarDecl::new(*n, lo, rng.gen_range(lo..=7))
        })
        .collect();
    Signature::new(
        states.iter().copied(),
        inputs.iter().copied(),
        outputs.iter().copied(),
        vars,
    )
}

fn random_init(rng: &mut impl Rng, sig: &Signature) -> Config {
    let vals = sig.vars.iter().map(|d| (d.name.clone(), rng.gen_range(d.lo..=d.hi))).collect();
    Config::new(sig.states.choose(rng).unwrap().clone(), vals)
}

fn random_atom(rng: &mut impl Rng, sig: &Signature) -> IntExpr {
    if sig.vars.is_empty() || rng.gen_bool(0.3) {
        IntExpr::Lit(rng.gen_range(-2..=8))
    } else {
        IntExpr::var(sig.vars.choose(rng).unwrap().name.clone())
    }
}

pub fn random_int_expr(rng: &mut impl Rng, sig: &Signature, depth: u32) -> IntExpr {
    if depth == 0 || rng.gen_bool(0.5) {
        return random_atom(rng, sig);
    }
    match rng.gen_range(0..4) {
        0 => IntExpr::Neg(Box::new(random_int_expr(rng, sig, depth - 1))),
        n => {
            let op = [ArithOp::Add, ArithOp::Sub, ArithOp::Mul][n - 1];
            IntExpr::bin(op, random_int_expr(rng, sig, depth - 1), random_int_expr(rng, sig, depth - 1))
        }
    }
}

pub fn random_pred(rng: &mut impl Rng, sig: &Signature, depth: u32) -> Pred {
    if depth == 0 || rng.gen_bool(0.5) {
        if rng.gen_bool(0.1) {
            return Pred::Const(rng.gen());
        }
        let ops = [CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne];
        return Pred::cmp(*ops.choose(rng).unwrap(), random_int_expr(rng, sig, 1), random_atom(rng, sig));
    }
    match rng.gen_range(0..3) {
        0 => Pred::Not(Box::new(random_pred(rng, sig, depth - 1))),
        1 => Pred::And(Box::new(random_pred(rng, sig, depth - 1)), Box::new(random_pred(rng, sig, depth - 1))),
        _ => Pred::Or(Box::new(random_pred(rng, sig, depth - 1)), Box::new(random_pred(rng, sig, depth - 1))),
    }
}

/// Updates mostly stay small steps so runs last a while, but may leave the domain.
pub fn random_update(rng: &mut impl Rng, sig: &Signature) -> Update {
    let mut a = Update::identity();
    for d in &sig.vars {
        if rng.gen_bool(0.6) {
            let e = match rng.gen_range(0..4) {
                0 => IntExpr::Lit(rng.gen_range(d.lo..=d.hi)),
                1 => IntExpr::bin(ArithOp::Add, IntExpr::var(d.name.clone()), IntExpr::Lit(1)),
                2 => IntExpr::bin(ArithOp::Sub, IntExpr::var(d.name.clone()), IntExpr::Lit(1)),
                _ => random_int_expr(rng, sig, 1),
            };
            a = a.assign(d.name.clone(), e);
        }
    }
    a
}

fn random_branch(rng: &mut impl Rng, sig: &Signature) -> Branch {
    Branch::new(
        sig.states.choose(rng).unwrap().clone(),
        sig.outputs.choose(rng).unwrap().clone(),
        random_update(rng, sig),
    )
}

/// A random SDL-form machine: up to 4 states, 2 inputs, 2 outputs and two
/// variables with domains inside `[0, 7]`.
pub fn random_sdl(rng: &mut impl Rng) -> EfsmSdl {
    let sig = random_signature(rng);
    let mut pairs = Vec::new();
    for y in &sig.states {
        for i in &sig.inputs {
            if rng.gen_bool(0.8) {
                pairs.push(TransitionPair {
                    src: y.clone(),
                    input: i.clone(),
                    pred: random_pred(rng, &sig, 2),
                    then_branch: random_branch(rng, &sig),
                    else_branch: random_branch(rng, &sig),
                });
            }
        }
    }
    let init = random_init(rng, &sig);
    EfsmSdl::new(sig, pairs, init).expect("generated machines are well formed")
}

/// A random general EFSM whose guards may overlap or leave gaps.
pub fn random_efsm(rng: &mut impl Rng) -> Efsm {
    let sig = random_signature(rng);
    let mut transitions = Vec::new();
    for _ in 0..rng.gen_range(0..=8) {
        let b = random_branch(rng, &sig);
        transitions.push(Transition {
            src: sig.states.choose(rng).unwrap().clone(),
            dest: b.dest,
            input: sig.inputs.choose(rng).unwrap().clone(),
            output: b.output,
            pred: random_pred(rng, &sig, 2),
            update: b.update,
        });
    }
    let init = random_init(rng, &sig);
    Efsm::new(sig, transitions, init).expect("generated machines are well formed")
}

pub fn small_alphabet() -> BTreeSet<PairedEvent> {
    paired_alphabet(INPUT_NAMES)
}

/// A random partial Mealy automaton over `u32` states.
pub fn random_mealy(rng: &mut impl Rng, max_states: u32) -> MealyAutomaton<u32> {
    let n = rng.gen_range(1..=max_states);
    let alphabet = small_alphabet();
    let mut g = MealyAutomaton::new(0, alphabet.clone(), OUTPUT_NAMES.iter().map(|s| s.to_string()));
    for q in 0..n {
        g.add_state(q);
        for e in &alphabet {
            if rng.gen_bool(0.7) {
                let z = OUTPUT_NAMES.choose(rng).unwrap();
                g.add_transition(q, e.clone(), rng.gen_range(0..n), *z).unwrap();
            }
        }
    }
    g
}

pub fn random_plain(rng: &mut impl Rng, max_states: u32) -> PlainAutomaton<u32> {
    let n = rng.gen_range(1..=max_states);
    let alphabet = small_alphabet();
    let mut s = PlainAutomaton::new(0, alphabet.clone());
    for x in 0..n {
        s.add_state(x);
        for e in &alphabet {
            if rng.gen_bool(0.7) {
                s.add_transition(x, e.clone(), rng.gen_range(0..n)).unwrap();
            }
        }
    }
    s
}

/// A pattern that for each base enables nothing, the true copy or the false copy.
pub fn random_pattern(rng: &mut impl Rng) -> ControlPattern {
    let mut gamma = ControlPattern::empty();
    for base in INPUT_NAMES {
        match rng.gen_range(0..3) {
            0 => {}
            n => gamma.enable(PairedEvent::new(base, n == 1)).unwrap(),
        }
    }
    gamma
}

pub fn random_supervisor(rng: &mut impl Rng, max_states: u32) -> Supervisor<u32> {
    let s = random_plain(rng, max_states);
    let psi = s.states().iter().map(|x| (*x, random_pattern(rng))).collect();
    Supervisor::new(s, psi).unwrap()
}

/// Reachable states by repeated relaxation until nothing changes.
pub fn reachable_by_fixpoint<Q: Clone + Ord + std::fmt::Debug>(g: &MealyAutomaton<Q>) -> BTreeSet<Q> {
    let mut reached = BTreeSet::from([g.initial().clone()]);
    loop {
        let before = reached.len();
        for (q, _, to, _) in g.transitions() {
            if reached.contains(q) {
                reached.insert(to.clone());
            }
        }
        if reached.len() == before {
            return reached;
        }
    }
}

/// Evaluates a guard by an independent walk, for cross-checking `Pred::eval`.
/// Returns `None` on an unbound variable or overflow.
pub fn oracle_pred(p: &Pred, vals: &BTreeMap<String, i64>) -> Option<bool> {
    Some(match p {
        Pred::Const(b) => *b,
        Pred::Cmp(op, a, b) => {
            let (a, b) = (oracle_int(a, vals)?, oracle_int(b, vals)?);
            match op {
                CmpOp::Lt => a < b,
                CmpOp::Le => a <= b,
                CmpOp::Gt => a > b,
                CmpOp::Ge => a >= b,
                CmpOp::Eq => a == b,
                CmpOp::Ne => a != b,
            }
        }
        Pred::Not(q) => !oracle_pred(q, vals)?,
        Pred::And(a, b) => {
            let (a, b) = (oracle_pred(a, vals)?, oracle_pred(b, vals)?);
            a && b
        }
        Pred::Or(a, b) => {
            let (a, b) = (oracle_pred(a, vals)?, oracle_pred(b, vals)?);
            a || b
        }
    })
}

pub fn oracle_int(e: &IntExpr, vals: &BTreeMap<String, i64>) -> Option<i64> {
    match e {
        IntExpr::Lit(n) => Some(*n),
        IntExpr::Var(v) => vals.get(v).copied(),
        IntExpr::Neg(a) => oracle_int(a, vals)?.checked_neg(),
        IntExpr::Bin(op, a, b) => {
            let (a, b) = (oracle_int(a, vals)?, oracle_int(b, vals)?);
            match op {
                ArithOp::Add => a.checked_add(b),
                ArithOp::Sub => a.checked_sub(b),
                ArithOp::Mul => a.checked_mul(b),
            }
        }
    }
}

pub fn to_map(v: &Valuation) -> BTreeMap<String, i64> {
    v.iter().map(|(k, x)| (k.to_string(), x)).collect()
}

/// One step of an SDL machine computed directly from the pair list, without
/// the machine's index or `fire`.
pub fn oracle_step(m: &EfsmSdl, c: &Config, input: &str) -> Option<(Config, String, bool)> {
    let pair = m.pairs().iter().find(|p| p.src == c.state && p.input == input)?;
    let vals = to_map(&c.vals);
    let bin = oracle_pred(&pair.pred, &vals)?;
    let b = pair.branch(bin);
    let mut next = vals.clone();
    for (name, e) in b.update.assignments() {
        next.insert(name.to_string(), oracle_int(e, &vals)?);
    }
    for d in &m.signature().vars {
        let x = next[&d.name];
        if x < d.lo || x > d.hi {
            return None;
        }
    }
    let vals: Valuation = next.into_iter().collect();
    Some((Config::new(b.dest.clone(), vals), b.output.clone(), bin))
}
