//! Extended finite state machines and their SDL transition-pair form.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::expr::{all_valuations, is_identifier, EvalError, Pred, Update, Valuation, VarDecl};
use crate::mealy::{PairedEvent, TracePair};

/// Names that would clash with identifiers in generated code.
pub const RESERVED_NAMES: &[&str] = &[
    "s", "i", "o", "State", "Input", "Output", "Initialization", "Transition", "InDomain", "auto",
    "break", "case", "char", "const", "continue", "default", "do", "double", "else", "enum",
    "extern", "float", "for", "goto", "if", "int", "long", "register", "return", "short", "signed",
    "sizeof", "static", "struct", "switch", "typedef", "union", "unsigned", "void", "volatile",
    "while",
];

/// Returns true if `name` may be used for a state, event or variable.
pub fn is_valid_name(name: &str) -> bool {
    is_identifier(name) && !name.starts_with("__") && !RESERVED_NAMES.contains(&name)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("`{0}` is not a valid name (identifiers only; reserved words and a leading `__` are not allowed)")]
    InvalidName(String),
    #[error("name `{0}` is declared more than once")]
    DuplicateName(String),
    #[error("variable `{0}` has an empty domain")]
    EmptyDomain(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown input event `{0}`")]
    UnknownInput(String),
    #[error("unknown output event `{0}`")]
    UnknownOutput(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("initial valuation must cover exactly the declared variables")]
    InitMismatch,
    #[error("initial value {value} of `{var}` is outside its domain")]
    InitOutOfDomain { var: String, value: i64 },
    #[error("more than one transition pair on input `{input}` from state `{src}`")]
    DuplicatePair { src: String, input: String },
}

/// State set, event sets and variables shared by both machine forms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub states: Vec<String>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub vars: Vec<VarDecl>,
}

impl Signature {
    pub fn new<S: Into<String>>(
        states: impl IntoIterator<Item = S>,
        inputs: impl IntoIterator<Item = S>,
        outputs: impl IntoIterator<Item = S>,
        vars: impl IntoIterator<Item = VarDecl>,
    ) -> Self {
        Signature {
            states: states.into_iter().map(Into::into).collect(),
            inputs: inputs.into_iter().map(Into::into).collect(),
            outputs: outputs.into_iter().map(Into::into).collect(),
            vars: vars.into_iter().collect(),
        }
    }

    pub fn has_state(&self, y: &str) -> bool {
        self.states.iter().any(|s| s == y)
    }

    pub fn has_input(&self, i: &str) -> bool {
        self.inputs.iter().any(|s| s == i)
    }

    pub fn has_output(&self, o: &str) -> bool {
        self.outputs.iter().any(|s| s == o)
    }

    pub fn var(&self, name: &str) -> Option<&VarDecl> {
        self.vars.iter().find(|d| d.name == name)
    }

    fn validate(&self) -> Result<(), ModelError> {
        let mut seen = BTreeSet::new();
        let names = self
            .states
            .iter()
            .chain(&self.inputs)
            .chain(&self.outputs)
            .chain(self.vars.iter().map(|d| &d.name));
        for name in names {
            if !is_valid_name(name) {
                return Err(ModelError::InvalidName(name.clone()));
            }
            if !seen.insert(name) {
                return Err(ModelError::DuplicateName(name.clone()));
            }
        }
        if let Some(d) = self.vars.iter().find(|d| d.lo > d.hi) {
            return Err(ModelError::EmptyDomain(d.name.clone()));
        }
        Ok(())
    }

    fn check_config(&self, c: &Config) -> Result<(), ModelError> {
        if !self.has_state(&c.state) {
            return Err(ModelError::UnknownState(c.state.clone()));
        }
        if c.vals.len() != self.vars.len() {
            return Err(ModelError::InitMismatch);
        }
        for decl in &self.vars {
            let value = c.vals.get(&decl.name).ok_or(ModelError::InitMismatch)?;
            if !decl.contains(value.into()) {
                return Err(ModelError::InitOutOfDomain {
                    var: decl.name.clone(),
                    value,
                });
            }
        }
        Ok(())
    }

    fn check_pred(&self, p: &Pred) -> Result<(), ModelError> {
        match p.vars().into_iter().find(|v| self.var(v).is_none()) {
            Some(v) => Err(ModelError::UnknownVariable(v.to_string())),
            None => Ok(()),
        }
    }

    fn check_update(&self, a: &Update) -> Result<(), ModelError> {
        let assigned = a.assignments().map(|(name, _)| name);
        match a.read_vars().into_iter().chain(assigned).find(|v| self.var(v).is_none()) {
            Some(v) => Err(ModelError::UnknownVariable(v.to_string())),
            None => Ok(()),
        }
    }

    fn check_branch(&self, dest: &str, output: &str, update: &Update) -> Result<(), ModelError> {
        if !self.has_state(dest) {
            return Err(ModelError::UnknownState(dest.to_string()));
        }
        if !self.has_output(output) {
            return Err(ModelError::UnknownOutput(output.to_string()));
        }
        self.check_update(update)
    }

    fn check_source(&self, src: &str, input: &str) -> Result<(), ModelError> {
        if !self.has_state(src) {
            return Err(ModelError::UnknownState(src.to_string()));
        }
        if !self.has_input(input) {
            return Err(ModelError::UnknownInput(input.to_string()));
        }
        Ok(())
    }
}

/// Current state plus variable valuation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Config {
    pub state: String,
    pub vals: Valuation,
}

impl Config {
    pub fn new(state: impl Into<String>, vals: Valuation) -> Self {
        Config {
            state: state.into(),
            vals,
        }
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.vals.is_empty() {
            write!(f, "({})", self.state)
        } else {
            write!(f, "({}, {})", self.state, self.vals)
        }
    }
}

/// `t = (y_src, y_dest, i, o, P, A)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub src: String,
    pub dest: String,
    pub input: String,
    pub output: String,
    pub pred: Pred,
    pub update: Update,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("input `{0}` is not in the input alphabet")]
    UnknownInput(String),
    #[error("no transition is enabled")]
    Disabled,
    #[error("{0} transitions are enabled at once")]
    Nondeterministic(usize),
    #[error("update assigns {value} to `{var}`, outside its domain")]
    Domain { var: String, value: i128 },
    #[error(transparent)]
    Eval(EvalError),
}

impl From<EvalError> for StepError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::OutOfDomain { var, value } => StepError::Domain { var, value },
            e => StepError::Eval(e),
        }
    }
}

/// A run that stopped before consuming all of its inputs.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("step {position} from {config}: {cause}")]
pub struct RunError {
    /// Index of the input that could not be processed.
    pub position: usize,
    pub cause: StepError,
    /// Inputs consumed and outputs produced before the failure.
    pub partial: TracePair<String>,
    /// Configuration in which the failing input arrived.
    pub config: Config,
}

/// A completed run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Execution {
    pub trace: TracePair<String>,
    pub config: Config,
}

/// The dynamic rule, shared by both machine forms.
#[allow(clippy::result_large_err)]
pub trait Machine {
    fn initial_config(&self) -> Config;

    fn step(&self, c: &Config, input: &str) -> Result<(Config, String), StepError>;

    /// Folds `step` over `inputs` starting at `start`.
    fn execute_from<S: AsRef<str>>(&self, start: Config, inputs: &[S]) -> Result<Execution, RunError> {
        let mut config = start;
        let mut trace = TracePair::empty();
        for (position, input) in inputs.iter().enumerate() {
            match self.step(&config, input.as_ref()) {
                Ok((next, output)) => {
                    trace.push(input.as_ref().to_string(), output);
                    config = next;
                }
                Err(cause) => {
                    return Err(RunError {
                        position,
                        cause,
                        partial: trace,
                        config,
                    })
                }
            }
        }
        Ok(Execution { trace, config })
    }

    fn execute<S: AsRef<str>>(&self, inputs: &[S]) -> Result<Execution, RunError> {
        self.execute_from(self.initial_config(), inputs)
    }

    /// Runs from the initial configuration and returns the input/output trace.
    fn run<S: AsRef<str>>(&self, inputs: &[S]) -> Result<TracePair<String>, RunError> {
        self.execute(inputs).map(|e| e.trace)
    }
}

/// `EFSM = (Y, I, O, V, T)` with its initial condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Efsm {
    sig: Signature,
    transitions: Vec<Transition>,
    init: Config,
}

impl Efsm {
    pub fn new(sig: Signature, transitions: Vec<Transition>, init: Config) -> Result<Self, ModelError> {
        sig.validate()?;
        sig.check_config(&init)?;
        for t in &transitions {
            sig.check_source(&t.src, &t.input)?;
            sig.check_pred(&t.pred)?;
            sig.check_branch(&t.dest, &t.output, &t.update)?;
        }
        Ok(Efsm {
            sig,
            transitions,
            init,
        })
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn init(&self) -> &Config {
        &self.init
    }

    /// Indices of transitions from `c.state` on `input` whose guard holds.
    fn enabled(&self, c: &Config, input: &str) -> Result<Vec<usize>, EvalError> {
        let mut out = Vec::new();
        for (n, t) in self.transitions.iter().enumerate() {
            if t.src == c.state && t.input == input && t.pred.eval(&c.vals)? {
                out.push(n);
            }
        }
        Ok(out)
    }

    /// Exhaustively looks for configurations enabling two or more transitions.
    pub fn check_deterministic(&self) -> Result<DeterminismReport, EvalError> {
        let mut violations = Vec::new();
        let valuations = all_valuations(&self.sig.vars);
        for y in &self.sig.states {
            for i in &self.sig.inputs {
                let candidates = self
                    .transitions
                    .iter()
                    .filter(|t| &t.src == y && &t.input == i)
                    .count();
                if candidates < 2 {
                    continue;
                }
                for vals in &valuations {
                    let c = Config::new(y.clone(), vals.clone());
                    let enabled = self.enabled(&c, i)?;
                    if enabled.len() > 1 {
                        violations.push(Violation {
                            state: y.clone(),
                            input: i.clone(),
                            vals: vals.clone(),
                            enabled,
                        });
                    }
                }
            }
        }
        Ok(DeterminismReport { violations })
    }

    /// Pairs up transitions with complementary guards.
    ///
    /// A pair is recognised when one guard is literally `!` of the other, or
    /// failing that, when the two guards disagree on every valuation.
    pub fn to_sdl_form(&self) -> Result<EfsmSdl, NotSdlShaped> {
        let mut groups: Vec<((&str, &str), Vec<usize>)> = Vec::new();
        for (n, t) in self.transitions.iter().enumerate() {
            let key = (t.src.as_str(), t.input.as_str());
            match groups.iter_mut().find(|(k, _)| *k == key) {
                Some((_, members)) => members.push(n),
                None => groups.push((key, vec![n])),
            }
        }
        let valuations = all_valuations(&self.sig.vars);
        let mut pairs = Vec::with_capacity(groups.len());
        for ((src, input), members) in groups {
            let reject = |reason: String| NotSdlShaped {
                src: src.to_string(),
                input: input.to_string(),
                transitions: members.clone(),
                reason,
            };
            let [a, b] = members[..] else {
                return Err(reject(format!(
                    "expected exactly two transitions, found {}",
                    members.len()
                )));
            };
            let (ta, tb) = (&self.transitions[a], &self.transitions[b]);
            let (then_t, else_t) = if ta.pred.is_syntactic_negation_of(&tb.pred) {
                (ta, tb)
            } else if tb.pred.is_syntactic_negation_of(&ta.pred) {
                (tb, ta)
            } else {
                let complementary = valuations.iter().all(|val| {
                    matches!((ta.pred.eval(val), tb.pred.eval(val)), (Ok(p), Ok(q)) if p != q)
                });
                if !complementary {
                    return Err(reject(format!(
                        "guards `{}` and `{}` are not complementary",
                        ta.pred, tb.pred
                    )));
                }
                (ta, tb)
            };
            pairs.push(TransitionPair {
                src: src.to_string(),
                input: input.to_string(),
                pred: then_t.pred.clone(),
                then_branch: Branch::of(then_t),
                else_branch: Branch::of(else_t),
            });
        }
        Ok(EfsmSdl::new(self.sig.clone(), pairs, self.init.clone())
            .expect("pairs come from a validated machine with unique (src, input) groups"))
    }
}

impl Machine for Efsm {
    fn initial_config(&self) -> Config {
        self.init.clone()
    }

    fn step(&self, c: &Config, input: &str) -> Result<(Config, String), StepError> {
        if !self.sig.has_input(input) {
            return Err(StepError::UnknownInput(input.to_string()));
        }
        let enabled = self.enabled(c, input)?;
        let t = match enabled[..] {
            [] => return Err(StepError::Disabled),
            [n] => &self.transitions[n],
            _ => return Err(StepError::Nondeterministic(enabled.len())),
        };
        let vals = t.update.apply(&self.sig.vars, &c.vals)?;
        Ok((Config::new(t.dest.clone(), vals), t.output.clone()))
    }
}

/// A configuration enabling more than one transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub state: String,
    pub input: String,
    pub vals: Valuation,
    pub enabled: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DeterminismReport {
    pub violations: Vec<Violation>,
}

impl DeterminismReport {
    pub fn is_deterministic(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("transitions {transitions:?} on `{input}` from `{src}` do not form a transition pair: {reason}")]
pub struct NotSdlShaped {
    pub src: String,
    pub input: String,
    pub transitions: Vec<usize>,
    pub reason: String,
}

/// One side of a transition pair: where to go, what to emit, how to update.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    pub dest: String,
    pub output: String,
    pub update: Update,
}

impl Branch {
    pub fn new(dest: impl Into<String>, output: impl Into<String>, update: Update) -> Self {
        Branch {
            dest: dest.into(),
            output: output.into(),
            update,
        }
    }

    fn of(t: &Transition) -> Self {
        Branch::new(t.dest.clone(), t.output.clone(), t.update.clone())
    }
}

/// Two conflicting transitions sharing source and input, taken when `pred`
/// is true and false respectively.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionPair {
    pub src: String,
    pub input: String,
    pub pred: Pred,
    pub then_branch: Branch,
    pub else_branch: Branch,
}

impl TransitionPair {
    pub fn branch(&self, bin: bool) -> &Branch {
        if bin {
            &self.then_branch
        } else {
            &self.else_branch
        }
    }
}

/// The outcome of processing one input on an SDL-form machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fired {
    /// Value of the pair's guard, i.e. which branch was taken.
    pub bin: bool,
    pub config: Config,
    pub output: String,
}

/// `EFSM_SDL = (Y, I, O, V, T, y0, V0)` with at most one pair per `(src, input)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EfsmSdl {
    sig: Signature,
    pairs: Vec<TransitionPair>,
    index: BTreeMap<(String, String), usize>,
    init: Config,
}

impl EfsmSdl {
    pub fn new(sig: Signature, pairs: Vec<TransitionPair>, init: Config) -> Result<Self, ModelError> {
        sig.validate()?;
        sig.check_config(&init)?;
        let mut index = BTreeMap::new();
        for (n, p) in pairs.iter().enumerate() {
            sig.check_source(&p.src, &p.input)?;
            sig.check_pred(&p.pred)?;
            for b in [&p.then_branch, &p.else_branch] {
                sig.check_branch(&b.dest, &b.output, &b.update)?;
            }
            if index.insert((p.src.clone(), p.input.clone()), n).is_some() {
                return Err(ModelError::DuplicatePair {
                    src: p.src.clone(),
                    input: p.input.clone(),
                });
            }
        }
        Ok(EfsmSdl {
            sig,
            pairs,
            index,
            init,
        })
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn pairs(&self) -> &[TransitionPair] {
        &self.pairs
    }

    pub fn init(&self) -> &Config {
        &self.init
    }

    pub fn pair(&self, y: &str, i: &str) -> Option<&TransitionPair> {
        self.index
            .get(&(y.to_string(), i.to_string()))
            .map(|&n| &self.pairs[n])
    }

    /// `T(y, i, P, bin)`: the branch of the pair at `(y, i)` selected by `bin`.
    pub fn sdl_transition(&self, y: &str, i: &str, bin: bool) -> Option<&Branch> {
        self.pair(y, i).map(|p| p.branch(bin))
    }

    /// Processes one base input: evaluates the guard and takes that branch.
    pub fn fire(&self, c: &Config, input: &str) -> Result<Fired, StepError> {
        if !self.sig.has_input(input) {
            return Err(StepError::UnknownInput(input.to_string()));
        }
        let pair = self.pair(&c.state, input).ok_or(StepError::Disabled)?;
        let bin = pair.pred.eval(&c.vals)?;
        let branch = pair.branch(bin);
        let vals = branch.update.apply(&self.sig.vars, &c.vals)?;
        Ok(Fired {
            bin,
            config: Config::new(branch.dest.clone(), vals),
            output: branch.output.clone(),
        })
    }

    /// Processes a paired event; defined only when the guard evaluates to
    /// `event.bin` and the update stays in the domain.
    pub fn fire_paired(&self, c: &Config, event: &PairedEvent) -> Option<(Config, String)> {
        match self.fire(c, &event.base) {
            Ok(f) if f.bin == event.bin => Some((f.config, f.output)),
            _ => None,
        }
    }

    /// The general form: each pair becomes `t` guarded by `P` and `t̄` by `!P`.
    pub fn to_efsm(&self) -> Efsm {
        let transitions = self
            .pairs
            .iter()
            .flat_map(|p| {
                [(true, p.pred.clone()), (false, p.pred.clone().negate())].map(|(bin, pred)| {
                    let b = p.branch(bin);
                    Transition {
                        src: p.src.clone(),
                        dest: b.dest.clone(),
                        input: p.input.clone(),
                        output: b.output.clone(),
                        pred,
                        update: b.update.clone(),
                    }
                })
            })
            .collect();
        Efsm::new(self.sig.clone(), transitions, self.init.clone())
            .expect("an SDL machine is a valid general machine")
    }
}

impl Machine for EfsmSdl {
    fn initial_config(&self) -> Config {
        self.init.clone()
    }

    fn step(&self, c: &Config, input: &str) -> Result<(Config, String), StepError> {
        self.fire(c, input).map(|f| (f.config, f.output))
    }
}
