//! Control patterns, supervisors `Φ = (S, ψ)` and the supervised system `Φ/G`.
//!
//! Products only materialise the part reachable from the initial pair, and
//! exploration is breadth-first over sorted successor maps, so the result does
//! not depend on hashing or insertion order.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::mealy::{MealyAutomaton, PairedEvent};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SupervisorError {
    #[error("control pattern would enable both {0} and its partner")]
    ConflictingPair(PairedEvent),
    #[error("event {0} is not in the automaton's alphabet")]
    UnknownEvent(PairedEvent),
    #[error("transition on {event} from state {state} is already defined")]
    Duplicate { state: String, event: PairedEvent },
    #[error("no control pattern given for state {0}")]
    MissingPattern(String),
    #[error("control pattern given for unknown state {0}")]
    UnknownState(String),
    #[error("supervisor and plant have different alphabets")]
    AlphabetMismatch,
}

/// A set of enabled events containing no conflicting pair.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ControlPattern(BTreeSet<PairedEvent>);

impl ControlPattern {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(events: impl IntoIterator<Item = PairedEvent>) -> Result<Self, SupervisorError> {
        let mut gamma = Self::empty();
        for e in events {
            gamma.enable(e)?;
        }
        Ok(gamma)
    }

    pub fn enable(&mut self, e: PairedEvent) -> Result<(), SupervisorError> {
        if self.0.contains(&e.partner()) {
            return Err(SupervisorError::ConflictingPair(e));
        }
        self.0.insert(e);
        Ok(())
    }

    pub fn enables(&self, e: &PairedEvent) -> bool {
        self.0.contains(e)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PairedEvent> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for ControlPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (n, e) in self.0.iter().enumerate() {
            if n > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str("}")
    }
}

/// A deterministic automaton `S = (X, Σ, ξ, x0)` without outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlainAutomaton<X> {
    states: BTreeSet<X>,
    alphabet: BTreeSet<PairedEvent>,
    xi: BTreeMap<X, BTreeMap<PairedEvent, X>>,
    initial: X,
}

impl<X: Clone + Ord + fmt::Debug> PlainAutomaton<X> {
    pub fn new(initial: X, alphabet: BTreeSet<PairedEvent>) -> Self {
        PlainAutomaton {
            states: BTreeSet::from([initial.clone()]),
            alphabet,
            xi: BTreeMap::new(),
            initial,
        }
    }

    pub fn add_state(&mut self, x: X) {
        self.states.insert(x);
    }

    pub fn add_transition(&mut self, from: X, event: PairedEvent, to: X) -> Result<(), SupervisorError> {
        if !self.alphabet.contains(&event) {
            return Err(SupervisorError::UnknownEvent(event));
        }
        let row = self.xi.entry(from.clone()).or_default();
        if row.contains_key(&event) {
            return Err(SupervisorError::Duplicate {
                state: format!("{from:?}"),
                event,
            });
        }
        row.insert(event, to.clone());
        self.states.insert(from);
        self.states.insert(to);
        Ok(())
    }

    pub fn initial(&self) -> &X {
        &self.initial
    }

    pub fn states(&self) -> &BTreeSet<X> {
        &self.states
    }

    pub fn alphabet(&self) -> &BTreeSet<PairedEvent> {
        &self.alphabet
    }

    pub fn xi(&self, x: &X, event: &PairedEvent) -> Option<&X> {
        self.xi.get(x)?.get(event)
    }

    pub fn outgoing<'a>(&'a self, x: &X) -> impl Iterator<Item = (&'a PairedEvent, &'a X)> + 'a {
        self.xi.get(x).into_iter().flat_map(|row| row.iter())
    }

    pub fn transitions(&self) -> impl Iterator<Item = (&X, &PairedEvent, &X)> {
        self.xi
            .iter()
            .flat_map(|(x, row)| row.iter().map(move |(e, to)| (x, e, to)))
    }

    pub fn transition_count(&self) -> usize {
        self.xi.values().map(BTreeMap::len).sum()
    }
}

/// `Φ = (S, ψ)` with `ψ` total over the states of `S`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Supervisor<X> {
    automaton: PlainAutomaton<X>,
    psi: BTreeMap<X, ControlPattern>,
}

/// `Φ/G`: a Mealy automaton over pairs of supervisor and plant states.
pub type SupervisedSystem<X, Q> = MealyAutomaton<(X, Q)>;

impl<X: Clone + Ord + fmt::Debug> Supervisor<X> {
    pub fn new(automaton: PlainAutomaton<X>, psi: BTreeMap<X, ControlPattern>) -> Result<Self, SupervisorError> {
        if let Some(x) = automaton.states.iter().find(|x| !psi.contains_key(x)) {
            return Err(SupervisorError::MissingPattern(format!("{x:?}")));
        }
        if let Some(x) = psi.keys().find(|x| !automaton.states.contains(x)) {
            return Err(SupervisorError::UnknownState(format!("{x:?}")));
        }
        Ok(Supervisor { automaton, psi })
    }

    pub fn automaton(&self) -> &PlainAutomaton<X> {
        &self.automaton
    }

    pub fn psi(&self, x: &X) -> &ControlPattern {
        &self.psi[x]
    }

    pub fn patterns(&self) -> &BTreeMap<X, ControlPattern> {
        &self.psi
    }

    /// True iff every defined `ξ(x, σ)` has `σ ∈ ψ(x)`.
    pub fn check_completeness_condition(&self) -> bool {
        self.automaton
            .transitions()
            .all(|(x, e, _)| self.psi[x].enables(e))
    }

    /// `S_modified`: drop transitions on events `ψ` disables, then drop
    /// states no longer reachable from `x0`.
    pub fn reduce(&self) -> PlainAutomaton<X> {
        let s = &self.automaton;
        let mut out = PlainAutomaton::new(s.initial.clone(), s.alphabet.clone());
        let mut queue = VecDeque::from([s.initial.clone()]);
        let mut seen = BTreeSet::from([s.initial.clone()]);
        while let Some(x) = queue.pop_front() {
            let gamma = &self.psi[&x];
            for (e, to) in s.outgoing(&x) {
                if !gamma.enables(e) {
                    continue;
                }
                out.add_transition(x.clone(), e.clone(), to.clone())
                    .expect("source automaton is deterministic");
                if seen.insert(to.clone()) {
                    queue.push_back(to.clone());
                }
            }
        }
        out
    }

    /// `Φ/G`, with `δ̂(x, q, σ)` defined when `σ ∈ ψ(x)` and both `ξ(x, σ)`
    /// and `δ(q, σ)` are.
    pub fn couple<Q: Clone + Ord + fmt::Debug>(
        &self,
        g: &MealyAutomaton<Q>,
    ) -> Result<SupervisedSystem<X, Q>, SupervisorError> {
        product(&self.automaton, g, |x, e| self.psi[x].enables(e))
    }
}

/// `S × G`: a shared event fires iff both components define it.
pub fn sync_product<X, Q>(
    s: &PlainAutomaton<X>,
    g: &MealyAutomaton<Q>,
) -> Result<SupervisedSystem<X, Q>, SupervisorError>
where
    X: Clone + Ord + fmt::Debug,
    Q: Clone + Ord + fmt::Debug,
{
    product(s, g, |_, _| true)
}

fn product<X, Q>(
    s: &PlainAutomaton<X>,
    g: &MealyAutomaton<Q>,
    allowed: impl Fn(&X, &PairedEvent) -> bool,
) -> Result<SupervisedSystem<X, Q>, SupervisorError>
where
    X: Clone + Ord + fmt::Debug,
    Q: Clone + Ord + fmt::Debug,
{
    if s.alphabet() != g.alphabet() {
        return Err(SupervisorError::AlphabetMismatch);
    }
    let start = (s.initial().clone(), g.initial().clone());
    let mut out = MealyAutomaton::new(start.clone(), g.alphabet().clone(), g.outputs().iter().cloned());
    let mut queue = VecDeque::from([start.clone()]);
    let mut seen = BTreeSet::from([start]);
    while let Some((x, q)) = queue.pop_front() {
        for (e, x_next) in s.outgoing(&x) {
            if !allowed(&x, e) {
                continue;
            }
            let (Some(q_next), Some(z)) = (g.delta(&q, e), g.lambda(&q, e)) else {
                continue;
            };
            let to = (x_next.clone(), q_next.clone());
            out.add_transition((x.clone(), q.clone()), e.clone(), to.clone(), z)
                .expect("product of deterministic automata is deterministic");
            if seen.insert(to.clone()) {
                queue.push_back(to);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mealy::paired_alphabet;

    fn t(b: &str) -> PairedEvent {
        PairedEvent::new(b, true)
    }

    fn f(b: &str) -> PairedEvent {
        PairedEvent::new(b, false)
    }

    #[test]
    fn patterns_reject_conflicts() {
        assert_eq!(
            ControlPattern::new([t("a"), f("a")]),
            Err(SupervisorError::ConflictingPair(f("a")))
        );
        let gamma = ControlPattern::new([t("a"), f("b")]).unwrap();
        assert!(gamma.enables(&t("a")) && !gamma.enables(&f("a")));
        // Both members of a pair may be absent.
        assert!(!gamma.enables(&t("b")) && !gamma.enables(&f("c")));
    }

    fn loop_plant() -> MealyAutomaton<u32> {
        let mut g = MealyAutomaton::new(0, paired_alphabet(["a"]), ["z".to_string()]);
        g.add_transition(0, t("a"), 1, "z").unwrap();
        g.add_transition(0, f("a"), 0, "z").unwrap();
        g.add_transition(1, t("a"), 0, "z").unwrap();
        g.add_transition(1, f("a"), 1, "z").unwrap();
        g
    }

    fn empty_psi<X: Clone + Ord + fmt::Debug>(s: &PlainAutomaton<X>) -> BTreeMap<X, ControlPattern> {
        s.states().iter().map(|x| (x.clone(), ControlPattern::empty())).collect()
    }

    #[test]
    fn all_disabled_couples_to_nothing() {
        let mut s = PlainAutomaton::new(0u8, paired_alphabet(["a"]));
        s.add_transition(0, t("a"), 0).unwrap();
        s.add_transition(0, f("a"), 0).unwrap();
        let phi = Supervisor::new(s.clone(), empty_psi(&s)).unwrap();
        let sys = phi.couple(&loop_plant()).unwrap();
        assert_eq!(sys.transition_count(), 0);
        assert_eq!(phi.reduce().states().len(), 1);
        assert_eq!(phi.reduce().transition_count(), 0);
        assert!(!phi.check_completeness_condition());
    }

    #[test]
    fn neutral_self_loop_reproduces_the_plant() {
        let mut s = PlainAutomaton::new((), paired_alphabet(["a"]));
        s.add_transition((), t("a"), ()).unwrap();
        s.add_transition((), f("a"), ()).unwrap();
        let g = loop_plant();
        let prod = sync_product(&s, &g).unwrap();
        assert_eq!(prod.transition_count(), g.transition_count());
        assert_eq!(prod.enumerate_language(6), g.enumerate_language(6));
    }

    #[test]
    fn empty_supervisor_is_vacuously_complete() {
        let s = PlainAutomaton::new(0u8, paired_alphabet(["a"]));
        let phi = Supervisor::new(s.clone(), empty_psi(&s)).unwrap();
        assert!(phi.check_completeness_condition());
        assert_eq!(sync_product(&s, &loop_plant()).unwrap().transition_count(), 0);
    }

    #[test]
    fn reduction_prunes_disabled_edges_then_unreachable_states() {
        let mut s = PlainAutomaton::new(0u8, paired_alphabet(["a"]));
        s.add_transition(0, t("a"), 1).unwrap();
        s.add_transition(0, f("a"), 2).unwrap();
        s.add_transition(2, f("a"), 3).unwrap();
        s.add_state(4);
        let mut psi = empty_psi(&s);
        psi.insert(0, ControlPattern::new([f("a")]).unwrap());
        psi.insert(2, ControlPattern::new([f("a")]).unwrap());
        let phi = Supervisor::new(s, psi).unwrap();
        let reduced = phi.reduce();
        assert_eq!(reduced.states(), &BTreeSet::from([0, 2, 3]));
        assert_eq!(reduced.transition_count(), 2);
        let reduced_phi = Supervisor::new(reduced.clone(), empty_psi(&reduced)).unwrap();
        assert!(!reduced_phi.check_completeness_condition());
    }

    #[test]
    fn unrestricted_reduction_only_drops_unreachable_states() {
        let mut s = PlainAutomaton::new(0u8, paired_alphabet(["a"]));
        s.add_transition(0, t("a"), 1).unwrap();
        s.add_transition(1, t("a"), 0).unwrap();
        s.add_transition(5, t("a"), 0).unwrap();
        let psi = s
            .states()
            .iter()
            .map(|&x| (x, ControlPattern::new([t("a")]).unwrap()))
            .collect();
        let phi = Supervisor::new(s, psi).unwrap();
        assert!(phi.check_completeness_condition());
        let reduced = phi.reduce();
        assert_eq!(reduced.states(), &BTreeSet::from([0, 1]));
        assert_eq!(reduced.transition_count(), 2);
    }

    #[test]
    fn alphabet_mismatch() {
        let s = PlainAutomaton::new(0u8, paired_alphabet(["b"]));
        assert_eq!(
            sync_product(&s, &loop_plant()).unwrap_err(),
            SupervisorError::AlphabetMismatch
        );
    }

    #[test]
    fn psi_must_be_total() {
        let mut s = PlainAutomaton::new(0u8, paired_alphabet(["a"]));
        s.add_transition(0, t("a"), 1).unwrap();
        let psi = BTreeMap::from([(0, ControlPattern::empty())]);
        assert_eq!(
            Supervisor::new(s, psi).unwrap_err(),
            SupervisorError::MissingPattern("1".into())
        );
    }
}
