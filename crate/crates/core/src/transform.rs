//! From an SDL-form EFSM to a controlled DES `G` and a supervisor `Φ`.
//!
//! `G` keeps the branching structure and forgets guards and updates. `Φ`
//! tracks the valuation in its state (`X = dom(V) × Y`): its transitions come
//! from the updates and its feedback map from the guards.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::efsm::{Config, EfsmSdl, RunError};
use crate::expr::{all_valuations, domain_size, Valuation};
use crate::mealy::{paired_alphabet, MealyAutomaton, PairedEvent, TracePair};
use crate::supervisor::{ControlPattern, PlainAutomaton, Supervisor};

/// Default bound on `|dom(V)| · |Y|` for supervisor extraction.
pub const DEFAULT_STATE_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("supervisor would have {states} states, above the cap of {cap}")]
    DomainTooLarge { states: u128, cap: u128 },
}

/// A supervisor state `x = ⟨V, y⟩`.
///
/// Ordered by valuation first, then by EFSM state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SupervisorState {
    pub vals: Valuation,
    pub y: String,
}

impl SupervisorState {
    pub fn new(vals: Valuation, y: impl Into<String>) -> Self {
        SupervisorState { vals, y: y.into() }
    }

    /// `proj_V(x)`.
    pub fn proj_vals(&self) -> &Valuation {
        &self.vals
    }

    /// `proj_y(x)`.
    pub fn proj_state(&self) -> &str {
        &self.y
    }

    pub fn config(&self) -> Config {
        Config::new(self.y.clone(), self.vals.clone())
    }
}

impl From<&Config> for SupervisorState {
    fn from(c: &Config) -> Self {
        SupervisorState::new(c.vals.clone(), c.state.clone())
    }
}

impl fmt::Display for SupervisorState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.vals.is_empty() {
            write!(f, "({})", self.y)
        } else {
            write!(f, "({}, {})", self.y, self.vals)
        }
    }
}

/// The controlled DES: `G = (Y, I × {true, false}, O, δ, λ, y0)` with
/// `δ(y, ⟨i, bin⟩)` and `λ(y, ⟨i, bin⟩)` read off the `bin` branch of the
/// pair at `(y, i)`.
pub fn extract_controlled_des(m: &EfsmSdl) -> MealyAutomaton<String> {
    let sig = m.signature();
    let mut g = MealyAutomaton::new(
        m.init().state.clone(),
        paired_alphabet(sig.inputs.iter().map(String::as_str)),
        sig.outputs.iter().cloned(),
    );
    for y in &sig.states {
        g.add_state(y.clone());
    }
    for pair in m.pairs() {
        for bin in [true, false] {
            let b = pair.branch(bin);
            g.add_transition(
                pair.src.clone(),
                PairedEvent::new(pair.input.clone(), bin),
                b.dest.clone(),
                b.output.clone(),
            )
            .expect("at most one pair per (src, input)");
        }
    }
    g
}

/// Extracts `Φ = (S, ψ)` over the full product `X = dom(V) × Y`.
///
/// `ξ(⟨V, y⟩, ⟨i, bin⟩) = ⟨A(V), y'⟩` whenever the `bin` branch at `(y, i)`
/// exists and its update stays in the domain. `⟨i, bin⟩ ∈ ψ(x)` iff the pair
/// at `(y, i)` exists and its guard evaluates to `bin` at `proj_V(x)`.
pub fn extract_supervisor(m: &EfsmSdl, cap: u128) -> Result<Supervisor<SupervisorState>, TransformError> {
    let sig = m.signature();
    let states = domain_size(&sig.vars)
        .and_then(|d| d.checked_mul(sig.states.len() as u128))
        .unwrap_or(u128::MAX);
    if states > cap {
        return Err(TransformError::DomainTooLarge { states, cap });
    }
    let alphabet = paired_alphabet(sig.inputs.iter().map(String::as_str));
    let mut s = PlainAutomaton::new(SupervisorState::from(m.init()), alphabet);
    let mut psi = BTreeMap::new();
    for vals in all_valuations(&sig.vars) {
        for y in &sig.states {
            let x = SupervisorState::new(vals.clone(), y.clone());
            s.add_state(x.clone());
            let mut gamma = ControlPattern::empty();
            for i in &sig.inputs {
                let Some(pair) = m.pair(y, i) else { continue };
                for bin in [true, false] {
                    let b = pair.branch(bin);
                    // Overflow is treated like leaving the domain: undefined.
                    if let Ok(next) = b.update.apply(&sig.vars, &vals) {
                        s.add_transition(
                            x.clone(),
                            PairedEvent::new(i.clone(), bin),
                            SupervisorState::new(next, b.dest.clone()),
                        )
                        .expect("one transition per (x, event)");
                    }
                }
                if let Ok(bin) = pair.pred.eval(&vals) {
                    gamma
                        .enable(PairedEvent::new(i.clone(), bin))
                        .expect("a guard has exactly one truth value");
                }
            }
            psi.insert(x, gamma);
        }
    }
    Ok(Supervisor::new(s, psi).expect("ψ is defined on every state of X"))
}

/// Keeps the base event of each paired event.
pub fn project_inputs(word: &[PairedEvent]) -> Vec<String> {
    word.iter().map(|e| e.base.clone()).collect()
}

/// The unique paired word projecting to `inputs` whose bins follow the guard
/// values along the EFSM run from `start`.
#[allow(clippy::result_large_err)]
pub fn lift_inputs<S: AsRef<str>>(
    m: &EfsmSdl,
    start: &Config,
    inputs: &[S],
) -> Result<Vec<PairedEvent>, RunError> {
    let mut config = start.clone();
    let mut lifted = Vec::with_capacity(inputs.len());
    let mut partial = TracePair::empty();
    for (position, input) in inputs.iter().enumerate() {
        let input = input.as_ref();
        match m.fire(&config, input) {
            Ok(fired) => {
                lifted.push(PairedEvent::new(input, fired.bin));
                partial.push(input.to_string(), fired.output);
                config = fired.config;
            }
            Err(cause) => {
                return Err(RunError {
                    position,
                    cause,
                    partial,
                    config,
                })
            }
        }
    }
    Ok(lifted)
}
