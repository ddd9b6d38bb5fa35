//! Bounded equivalence between an EFSM and its control model, and
//! prefix·period factorisations of single-input runs.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::efsm::{Config, EfsmSdl};
use crate::mealy::{MealyAutomaton, PairedEvent, TracePair};
use crate::transform::{
    extract_controlled_des, extract_supervisor, SupervisorState, TransformError, DEFAULT_STATE_CAP,
};

/// Word-count bound below which all words of the horizon length are checked.
pub const EXHAUSTIVE_LIMIT: u128 = 4096;

/// Anything that can be driven by paired events.
pub trait PairedSystem {
    type State: Clone;

    fn start(&self) -> Self::State;

    fn fire(&self, state: &Self::State, event: &PairedEvent) -> Option<(Self::State, String)>;
}

impl<Q: Clone + Ord + fmt::Debug> PairedSystem for MealyAutomaton<Q> {
    type State = Q;

    fn start(&self) -> Q {
        self.initial().clone()
    }

    fn fire(&self, q: &Q, event: &PairedEvent) -> Option<(Q, String)> {
        let to = self.delta(q, event)?;
        let z = self.lambda(q, event)?;
        Some((to.clone(), z.to_string()))
    }
}

impl PairedSystem for EfsmSdl {
    type State = Config;

    fn start(&self) -> Config {
        self.init().clone()
    }

    fn fire(&self, c: &Config, event: &PairedEvent) -> Option<(Config, String)> {
        self.fire_paired(c, event)
    }
}

/// What one side did with one base input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    /// Exactly one of `⟨i, true⟩` / `⟨i, false⟩` was taken.
    Fired { bin: bool, output: String },
    /// Neither event could be taken.
    Undefined,
    /// Both events of the pair were defined.
    Ambiguous,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Fired { bin, output } => write!(f, "bin={bin} output={output}"),
            Outcome::Undefined => f.write_str("undefined"),
            Outcome::Ambiguous => f.write_str("both events of the pair defined"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    /// The input word up to and including the disagreeing step.
    pub inputs: Vec<String>,
    pub position: usize,
    pub efsm: Outcome,
    pub des: Outcome,
}

impl Counterexample {
    /// Re-runs the word and confirms both sides still disagree at `position`.
    pub fn replays<P: PairedSystem>(&self, m: &EfsmSdl, sys: &P) -> bool {
        compare_word(m, sys, &self.inputs).as_ref() == Some(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Equivalent,
    Counterexample(Counterexample),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub horizon: usize,
    /// Number of input words compared.
    pub checked: u64,
    /// Length of the words enumerated exhaustively.
    pub exhaustive_len: usize,
    pub verdict: Verdict,
}

impl EquivalenceReport {
    pub fn is_equivalent(&self) -> bool {
        self.verdict == Verdict::Equivalent
    }

    pub fn counterexample(&self) -> Option<&Counterexample> {
        match &self.verdict {
            Verdict::Equivalent => None,
            Verdict::Counterexample(cx) => Some(cx),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "horizon": self.horizon,
            "checked": self.checked,
            "verdict": if self.is_equivalent() { "equivalent" } else { "counterexample" },
            "counterexample": self.counterexample(),
        })
    }
}

impl fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "horizon {}: {} input sequences checked ({} exhaustive up to length {})",
            self.horizon,
            self.checked,
            if self.exhaustive_len >= self.horizon { "all" } else { "partly" },
            self.exhaustive_len
        )?;
        match &self.verdict {
            Verdict::Equivalent => write!(f, "equivalent"),
            Verdict::Counterexample(cx) => write!(
                f,
                "counterexample at step {} of [{}]: efsm {}, des {}",
                cx.position,
                cx.inputs.join(" "),
                cx.efsm,
                cx.des
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EquivOptions {
    pub horizon: usize,
    /// Random words of length `horizon` to try beyond the exhaustive bound.
    pub budget: u64,
    pub seed: u64,
    pub state_cap: u128,
}

impl EquivOptions {
    pub fn new(horizon: usize, budget: u64) -> Self {
        EquivOptions {
            horizon,
            budget,
            seed: 0,
            state_cap: DEFAULT_STATE_CAP,
        }
    }
}

/// Compares `m` with `couple(extract_supervisor(m), extract_controlled_des(m))`.
pub fn check_equivalence(m: &EfsmSdl, opts: &EquivOptions) -> Result<EquivalenceReport, TransformError> {
    let phi = extract_supervisor(m, opts.state_cap)?;
    let g = extract_controlled_des(m);
    let sys = phi
        .couple(&g)
        .expect("supervisor and plant are built over the same alphabet");
    Ok(check_equivalence_with(m, &sys, opts))
}

/// Compares `m` with any paired-event system, step by step.
///
/// Each base input is lifted by the EFSM's own guard evaluation; the other
/// side must take exactly that paired event with the same output, and must
/// be stuck wherever the EFSM is.
pub fn check_equivalence_with<P: PairedSystem>(m: &EfsmSdl, sys: &P, opts: &EquivOptions) -> EquivalenceReport {
    let mut alphabet = m.signature().inputs.clone();
    alphabet.sort();
    let exhaustive_len = exhaustive_len(alphabet.len(), opts.horizon);
    let mut checked = 0u64;
    let finish = |checked, verdict| EquivalenceReport {
        horizon: opts.horizon,
        checked,
        exhaustive_len,
        verdict,
    };

    for word in Words::new(&alphabet, exhaustive_len) {
        checked += 1;
        if let Some(cx) = compare_word(m, sys, &word) {
            return finish(checked, Verdict::Counterexample(cx));
        }
    }
    if exhaustive_len < opts.horizon && !alphabet.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for _ in 0..opts.budget {
            let word: Vec<String> = (0..opts.horizon)
                .map(|_| alphabet[rng.gen_range(0..alphabet.len())].clone())
                .collect();
            checked += 1;
            if let Some(cx) = compare_word(m, sys, &word) {
                return finish(checked, Verdict::Counterexample(cx));
            }
        }
    }
    finish(checked, Verdict::Equivalent)
}

fn exhaustive_len(letters: usize, horizon: usize) -> usize {
    if letters <= 1 {
        return if letters == 0 { 0 } else { horizon };
    }
    let mut len = 0;
    let mut words: u128 = 1;
    while len < horizon && words * letters as u128 <= EXHAUSTIVE_LIMIT {
        words *= letters as u128;
        len += 1;
    }
    len
}

/// All words of a fixed length in lexicographic order.
struct Words<'a> {
    alphabet: &'a [String],
    digits: Option<Vec<usize>>,
}

impl<'a> Words<'a> {
    fn new(alphabet: &'a [String], len: usize) -> Self {
        let digits = (len == 0 || !alphabet.is_empty()).then(|| vec![0; len]);
        Words { alphabet, digits }
    }
}

impl Iterator for Words<'_> {
    type Item = Vec<String>;

    fn next(&mut self) -> Option<Vec<String>> {
        let digits = self.digits.as_mut()?;
        let word = digits.iter().map(|&d| self.alphabet[d].clone()).collect();
        let mut k = digits.len();
        loop {
            if k == 0 {
                self.digits = None;
                break;
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < self.alphabet.len() {
                break;
            }
            digits[k] = 0;
        }
        Some(word)
    }
}

fn compare_word<P: PairedSystem>(m: &EfsmSdl, sys: &P, word: &[String]) -> Option<Counterexample> {
    let mut config = m.init().clone();
    let mut state = sys.start();
    for (position, input) in word.iter().enumerate() {
        let (efsm, next_config) = match m.fire(&config, input) {
            Ok(f) => (
                Outcome::Fired {
                    bin: f.bin,
                    output: f.output,
                },
                Some(f.config),
            ),
            Err(_) => (Outcome::Undefined, None),
        };
        let on_true = sys.fire(&state, &PairedEvent::new(input.clone(), true));
        let on_false = sys.fire(&state, &PairedEvent::new(input.clone(), false));
        let (des, next_state) = match (on_true, on_false) {
            (Some((s, output)), None) => (Outcome::Fired { bin: true, output }, Some(s)),
            (None, Some((s, output))) => (Outcome::Fired { bin: false, output }, Some(s)),
            (None, None) => (Outcome::Undefined, None),
            (Some(_), Some(_)) => (Outcome::Ambiguous, None),
        };
        if efsm != des {
            return Some(Counterexample {
                inputs: word[..=position].to_vec(),
                position,
                efsm,
                des,
            });
        }
        match (next_config, next_state) {
            (Some(c), Some(s)) => {
                config = c;
                state = s;
            }
            _ => return None,
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PeriodicError {
    #[error("not autonomous at step {step} in {config}: {reason}")]
    NotAutonomous { step: usize, config: String, reason: String },
    #[error("run halts at step {step} in {config}: {reason}")]
    Halts { step: usize, config: String, reason: String },
    #[error("anchor {0} does not lie on the cycle")]
    AnchorNotOnCycle(String),
    #[error("no repeated configuration within {0} steps")]
    TooLong(usize),
}

/// Why an autonomous system could not take its next step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stuck {
    NotAutonomous(String),
    Halted(String),
}

/// A system with at most one possible step from each configuration.
pub trait Autonomous {
    type Config: Clone + Ord + fmt::Display;

    fn start(&self) -> Self::Config;

    /// The unique next step as `(base input, output, successor)`.
    fn advance(&self, c: &Self::Config) -> Result<(String, String, Self::Config), Stuck>;

    fn at_anchor(&self, c: &Self::Config, anchor: &Config) -> bool;
}

impl Autonomous for EfsmSdl {
    type Config = Config;

    fn start(&self) -> Config {
        self.init().clone()
    }

    fn advance(&self, c: &Config) -> Result<(String, String, Config), Stuck> {
        let offered: Vec<&String> = self
            .signature()
            .inputs
            .iter()
            .filter(|i| self.pair(&c.state, i).is_some())
            .collect();
        let [input] = offered[..] else {
            return Err(Stuck::NotAutonomous(format!(
                "{} input events processable",
                offered.len()
            )));
        };
        match self.fire(c, input) {
            Ok(f) => Ok((input.clone(), f.output, f.config)),
            Err(e) => Err(Stuck::Halted(e.to_string())),
        }
    }

    fn at_anchor(&self, c: &Config, anchor: &Config) -> bool {
        c == anchor
    }
}

/// Implemented for supervised systems whose supervisor states carry the
/// EFSM configuration. A state with no defined event halts the run.
impl<Q: Clone + Ord + fmt::Debug + fmt::Display> Autonomous for MealyAutomaton<(SupervisorState, Q)> {
    type Config = ProductState<Q>;

    fn start(&self) -> ProductState<Q> {
        ProductState(self.initial().clone())
    }

    fn advance(&self, c: &ProductState<Q>) -> Result<(String, String, ProductState<Q>), Stuck> {
        let mut steps = self.outgoing(&c.0);
        let Some((event, to, z)) = steps.next() else {
            return Err(Stuck::Halted("no event is defined".into()));
        };
        let rest = steps.count();
        if rest > 0 {
            return Err(Stuck::NotAutonomous(format!("{} events defined", rest + 1)));
        }
        Ok((event.base.clone(), z.to_string(), ProductState(to.clone())))
    }

    fn at_anchor(&self, c: &ProductState<Q>, anchor: &Config) -> bool {
        let x = &c.0 .0;
        x.y == anchor.state && x.vals == anchor.vals
    }
}

/// A supervised-system state `⟨x, q⟩`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ProductState<Q>(pub (SupervisorState, Q));

impl<Q: fmt::Display> fmt::Display for ProductState<Q> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {}>", self.0 .0, self.0 .1)
    }
}

/// A run factored as `prefix · period^ω`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UltimatelyPeriodic<C> {
    pub prefix: TracePair<String>,
    pub period: TracePair<String>,
    /// Configuration reached after the prefix and after every period.
    pub anchor: C,
}

/// Upper bound on steps explored by `derive_periodic`.
pub const DEFAULT_MAX_STEPS: usize = 1_000_000;

/// Follows the unique run until a configuration repeats.
///
/// Without an anchor the cycle starts at the first repeated configuration.
/// With one, the period is rotated to start at the anchor's first
/// occurrence on the cycle.
pub fn derive_periodic<A: Autonomous>(
    sys: &A,
    anchor: Option<&Config>,
    max_steps: usize,
) -> Result<UltimatelyPeriodic<A::Config>, PeriodicError> {
    let mut seen: BTreeMap<A::Config, usize> = BTreeMap::new();
    let mut configs = Vec::new();
    let mut steps = TracePair::empty();
    let mut c = sys.start();
    let (cycle_start, cycle_end) = loop {
        let k = configs.len();
        if let Some(&j) = seen.get(&c) {
            break (j, k);
        }
        if k >= max_steps {
            return Err(PeriodicError::TooLong(max_steps));
        }
        seen.insert(c.clone(), k);
        configs.push(c.clone());
        match sys.advance(&c) {
            Ok((input, output, next)) => {
                steps.push(input, output);
                c = next;
            }
            Err(Stuck::NotAutonomous(reason)) => {
                return Err(PeriodicError::NotAutonomous {
                    step: k,
                    config: c.to_string(),
                    reason,
                })
            }
            Err(Stuck::Halted(reason)) => {
                return Err(PeriodicError::Halts {
                    step: k,
                    config: c.to_string(),
                    reason,
                })
            }
        }
    };

    let split = match anchor {
        None => cycle_start,
        Some(a) => (cycle_start..cycle_end)
            .find(|&k| sys.at_anchor(&configs[k], a))
            .ok_or_else(|| PeriodicError::AnchorNotOnCycle(a.to_string()))?,
    };
    let prefix = steps.prefix(split);
    let mut period = TracePair::empty();
    for k in (split..cycle_end).chain(cycle_start..split) {
        period.push(steps.inputs[k].clone(), steps.outputs[k].clone());
    }
    Ok(UltimatelyPeriodic {
        prefix,
        period,
        anchor: configs[split].clone(),
    })
}

impl<C> UltimatelyPeriodic<C> {
    /// `prefix · period^k`.
    pub fn unroll(&self, k: usize) -> TracePair<String> {
        let mut out = self.prefix.clone();
        for _ in 0..k {
            out = out.concat(&self.period);
        }
        out
    }

    /// For example `a^2 (a^14)*`.
    pub fn render_input(&self) -> String {
        render(&self.prefix.inputs, &self.period.inputs, |s| s.clone())
    }

    /// For example `m^2 (m^6 n^7 m)*`.
    pub fn render_output(&self) -> String {
        render(&self.prefix.outputs, &self.period.outputs, |s| s.clone())
    }

    /// For example `(a/m)^2 ((a/m)^6 (a/n)^7 (a/m))*`.
    pub fn render_combined(&self) -> String {
        let zip = |t: &TracePair<String>| -> Vec<String> {
            t.inputs
                .iter()
                .zip(&t.outputs)
                .map(|(i, z)| format!("{i}/{z}"))
                .collect()
        };
        render(&zip(&self.prefix), &zip(&self.period), |s| format!("({s})"))
    }
}

fn render(prefix: &[String], period: &[String], atom: impl Fn(&String) -> String) -> String {
    let groups = |items: &[String]| -> String {
        let mut out: Vec<String> = Vec::new();
        let mut k = 0;
        while k < items.len() {
            let run = items[k..].iter().take_while(|s| **s == items[k]).count();
            let a = atom(&items[k]);
            out.push(if run == 1 { a } else { format!("{a}^{run}") });
            k += run;
        }
        out.join(" ")
    };
    let cycle = format!("({})*", groups(period));
    if prefix.is_empty() {
        cycle
    } else {
        format!("{} {}", groups(prefix), cycle)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(pairs: &[(&str, &str)]) -> TracePair<String> {
        let mut t = TracePair::empty();
        for (i, z) in pairs {
            t.push(i.to_string(), z.to_string());
        }
        t
    }

    #[test]
    fn rendering_contract() {
        let u = UltimatelyPeriodic {
            prefix: TracePair::empty(),
            period: trace(&[("a", "m")]),
            anchor: (),
        };
        assert_eq!(u.render_combined(), "((a/m))*");
        assert_eq!(u.render_input(), "(a)*");
        let u = UltimatelyPeriodic {
            prefix: trace(&[("a", "m")]),
            period: trace(&[("a", "n"), ("a", "n")]),
            anchor: (),
        };
        assert_eq!(u.render_combined(), "(a/m) ((a/n)^2)*");
        assert_eq!(u.render_output(), "m (n^2)*");
        assert_eq!(u.unroll(2).outputs, vec!["m", "n", "n", "n", "n"]);
    }

    #[test]
    fn word_enumeration() {
        let ab = ["a".to_string(), "b".to_string()];
        let words: Vec<String> = Words::new(&ab, 2).map(|w| w.concat()).collect();
        assert_eq!(words, ["aa", "ab", "ba", "bb"]);
        assert_eq!(Words::new(&ab, 0).count(), 1);
        assert_eq!(Words::new(&[], 0).count(), 1);
        assert_eq!(Words::new(&[], 3).count(), 0);
    }

    #[test]
    fn exhaustive_bound() {
        assert_eq!(exhaustive_len(1, 100), 100);
        assert_eq!(exhaustive_len(2, 100), 12);
        assert_eq!(exhaustive_len(2, 8), 8);
        assert_eq!(exhaustive_len(3, 100), 7);
        assert_eq!(exhaustive_len(0, 5), 0);
    }
}
