//! Deterministic Mealy automata over paired input alphabets `I × {true, false}`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

/// An input event `⟨base, bin⟩`. Its conflicting partner is `⟨base, !bin⟩`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairedEvent {
    pub base: String,
    pub bin: bool,
}

impl PairedEvent {
    pub fn new(base: impl Into<String>, bin: bool) -> Self {
        PairedEvent {
            base: base.into(),
            bin,
        }
    }

    pub fn partner(&self) -> PairedEvent {
        PairedEvent {
            base: self.base.clone(),
            bin: !self.bin,
        }
    }
}

impl fmt::Display for PairedEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{}>", self.base, self.bin)
    }
}

/// `I × {true, false}` for the given base events.
pub fn paired_alphabet<'a>(bases: impl IntoIterator<Item = &'a str>) -> BTreeSet<PairedEvent> {
    bases
        .into_iter()
        .flat_map(|b| [PairedEvent::new(b, true), PairedEvent::new(b, false)])
        .collect()
}

/// An input sequence together with the output sequence it produces.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TracePair<E = PairedEvent> {
    pub inputs: Vec<E>,
    pub outputs: Vec<String>,
}

impl<E> TracePair<E> {
    pub fn empty() -> Self {
        TracePair {
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn push(&mut self, input: E, output: String) {
        self.inputs.push(input);
        self.outputs.push(output);
    }
}

impl<E: Clone> TracePair<E> {
    pub fn prefix(&self, n: usize) -> Self {
        TracePair {
            inputs: self.inputs[..n].to_vec(),
            outputs: self.outputs[..n].to_vec(),
        }
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.inputs.extend(other.inputs.iter().cloned());
        out.outputs.extend(other.outputs.iter().cloned());
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MealyError {
    #[error("event {0} is not in the input alphabet")]
    UnknownEvent(PairedEvent),
    #[error("output `{0}` is not in the output alphabet")]
    UnknownOutput(String),
    #[error("transition on {event} from state {state} is already defined")]
    Duplicate { state: String, event: PairedEvent },
}

/// `G = (Q, Σ, Z, δ, λ, q0)`.
///
/// `δ` and `λ` share one table, so `λ(q, σ)` is defined exactly when
/// `δ(q, σ)` is.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MealyAutomaton<Q> {
    states: BTreeSet<Q>,
    alphabet: BTreeSet<PairedEvent>,
    outputs: BTreeSet<String>,
    table: BTreeMap<Q, BTreeMap<PairedEvent, (Q, String)>>,
    initial: Q,
}

impl<Q: Clone + Ord + fmt::Debug> MealyAutomaton<Q> {
    pub fn new(
        initial: Q,
        alphabet: BTreeSet<PairedEvent>,
        outputs: impl IntoIterator<Item = String>,
    ) -> Self {
        MealyAutomaton {
            states: BTreeSet::from([initial.clone()]),
            alphabet,
            outputs: outputs.into_iter().collect(),
            table: BTreeMap::new(),
            initial,
        }
    }

    pub fn add_state(&mut self, q: Q) {
        self.states.insert(q);
    }

    /// Adds `δ(from, event) = to` and `λ(from, event) = output`.
    pub fn add_transition(
        &mut self,
        from: Q,
        event: PairedEvent,
        to: Q,
        output: impl Into<String>,
    ) -> Result<(), MealyError> {
        let output = output.into();
        if !self.alphabet.contains(&event) {
            return Err(MealyError::UnknownEvent(event));
        }
        if !self.outputs.contains(&output) {
            return Err(MealyError::UnknownOutput(output));
        }
        let row = self.table.entry(from.clone()).or_default();
        if row.contains_key(&event) {
            return Err(MealyError::Duplicate {
                state: format!("{from:?}"),
                event,
            });
        }
        row.insert(event, (to.clone(), output));
        self.states.insert(from);
        self.states.insert(to);
        Ok(())
    }

    pub fn initial(&self) -> &Q {
        &self.initial
    }

    pub fn states(&self) -> &BTreeSet<Q> {
        &self.states
    }

    pub fn alphabet(&self) -> &BTreeSet<PairedEvent> {
        &self.alphabet
    }

    pub fn outputs(&self) -> &BTreeSet<String> {
        &self.outputs
    }

    pub fn delta(&self, q: &Q, event: &PairedEvent) -> Option<&Q> {
        self.table.get(q)?.get(event).map(|(to, _)| to)
    }

    pub fn lambda(&self, q: &Q, event: &PairedEvent) -> Option<&str> {
        self.table.get(q)?.get(event).map(|(_, z)| z.as_str())
    }

    /// Defined events out of `q`, with successor and output.
    pub fn outgoing<'a>(
        &'a self,
        q: &Q,
    ) -> impl Iterator<Item = (&'a PairedEvent, &'a Q, &'a str)> + 'a {
        self.table
            .get(q)
            .into_iter()
            .flat_map(|row| row.iter().map(|(e, (to, z))| (e, to, z.as_str())))
    }

    /// All transitions as `(from, event, to, output)` in sorted order.
    pub fn transitions(&self) -> impl Iterator<Item = (&Q, &PairedEvent, &Q, &str)> {
        self.table
            .iter()
            .flat_map(|(q, row)| row.iter().map(move |(e, (to, z))| (q, e, to, z.as_str())))
    }

    pub fn transition_count(&self) -> usize {
        self.table.values().map(BTreeMap::len).sum()
    }

    /// Extended transition function; `None` once any step is undefined.
    pub fn delta_star(&self, q: &Q, word: &[PairedEvent]) -> Option<Q> {
        word.iter()
            .try_fold(q.clone(), |q, e| self.delta(&q, e).cloned())
    }

    /// Extended output function; `None` once any step is undefined.
    pub fn lambda_star(&self, q: &Q, word: &[PairedEvent]) -> Option<Vec<String>> {
        let mut q = q.clone();
        let mut out = Vec::with_capacity(word.len());
        for e in word {
            let (to, z) = self.table.get(&q)?.get(e)?;
            out.push(z.clone());
            q = to.clone();
        }
        Some(out)
    }

    /// All `s/t` pairs of the combined language with `|s| <= max_len`.
    pub fn enumerate_language(&self, max_len: usize) -> BTreeSet<TracePair> {
        let mut out = BTreeSet::new();
        let mut queue = VecDeque::from([(self.initial.clone(), TracePair::empty())]);
        while let Some((q, trace)) = queue.pop_front() {
            if trace.len() < max_len {
                for (e, to, z) in self.outgoing(&q) {
                    let mut next = trace.clone();
                    next.push(e.clone(), z.to_string());
                    queue.push_back((to.clone(), next));
                }
            }
            out.insert(trace);
        }
        out
    }

    /// States reachable from the initial state.
    pub fn reachable(&self) -> BTreeSet<Q> {
        let mut seen = BTreeSet::from([self.initial.clone()]);
        let mut queue = VecDeque::from([self.initial.clone()]);
        while let Some(q) = queue.pop_front() {
            for (_, to, _) in self.outgoing(&q) {
                if seen.insert(to.clone()) {
                    queue.push_back(to.clone());
                }
            }
        }
        seen
    }
}

/// `L_input`: the input components of a set of trace pairs.
pub fn input_language<E: Clone + Ord>(lang: &BTreeSet<TracePair<E>>) -> BTreeSet<Vec<E>> {
    lang.iter().map(|t| t.inputs.clone()).collect()
}

/// `L_output`: the output components of a set of trace pairs.
pub fn output_language<E>(lang: &BTreeSet<TracePair<E>>) -> BTreeSet<Vec<String>> {
    lang.iter().map(|t| t.outputs.clone()).collect()
}
