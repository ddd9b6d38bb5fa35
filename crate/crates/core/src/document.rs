//! JSON machine documents.
//!
//! ```json
//! {
//!   "states": ["I", "II"], "inputs": ["a"], "outputs": ["m", "n"],
//!   "vars": [{"name": "v", "lo": 0, "hi": 9}],
//!   "init": {"state": "I", "vals": {"v": 0}},
//!   "pairs": [{"src": "I", "input": "a", "pred": "v > 7",
//!              "then": {"dest": "II", "output": "n", "update": "v := v + 1"},
//!              "else": {"dest": "I", "output": "m", "update": "v := v + 1"}}]
//! }
//! ```

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::efsm::{Branch, Config, EfsmSdl, ModelError, Signature, TransitionPair};
use crate::expr::{parse_pred, parse_update, VarDecl};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineDocument {
    pub states: Vec<String>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(default)]
    pub vars: Vec<VarDocument>,
    pub init: InitDocument,
    #[serde(default)]
    pub pairs: Vec<PairDocument>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarDocument {
    pub name: String,
    pub lo: i64,
    pub hi: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitDocument {
    pub state: String,
    #[serde(default)]
    pub vals: BTreeMap<String, i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairDocument {
    pub src: String,
    pub input: String,
    pub pred: String,
    #[serde(rename = "then")]
    pub then_branch: BranchDocument,
    #[serde(rename = "else")]
    pub else_branch: BranchDocument,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchDocument {
    pub dest: String,
    pub output: String,
    #[serde(default)]
    pub update: String,
}

/// A problem found in a document, located by a path such as `pairs[1].pred`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl Diagnostic {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

/// Parses and validates a machine, reporting every problem found.
pub fn parse_machine(text: &str) -> Result<EfsmSdl, Vec<Diagnostic>> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: MachineDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        // Malformed JSON has no meaningful path; point at the text instead.
        let path = if inner.is_syntax() || inner.is_eof() {
            format!("line {}, column {}", inner.line(), inner.column())
        } else {
            path
        };
        vec![Diagnostic::new(path, inner.to_string())]
    })?;
    from_document(&doc)
}

pub fn from_document(doc: &MachineDocument) -> Result<EfsmSdl, Vec<Diagnostic>> {
    let sig = Signature::new(
        doc.states.iter().cloned(),
        doc.inputs.iter().cloned(),
        doc.outputs.iter().cloned(),
        doc.vars.iter().map(|v| VarDecl::new(v.name.clone(), v.lo, v.hi)),
    );
    let init = Config::new(doc.init.state.clone(), doc.init.vals.iter().map(|(k, v)| (k.clone(), *v)).collect());

    // Signature and initial configuration first: every later check needs them.
    if let Err(e) = EfsmSdl::new(sig.clone(), vec![], init.clone()) {
        return Err(vec![Diagnostic::new(header_path(doc, &e), e.to_string())]);
    }

    let mut diags = Vec::new();
    let mut pairs = Vec::with_capacity(doc.pairs.len());
    let mut seen = BTreeMap::new();
    for (k, p) in doc.pairs.iter().enumerate() {
        let at = format!("pairs[{k}]");
        let pred = parse_pred(&p.pred).map_err(|e| Diagnostic::new(format!("{at}.pred"), e.to_string()));
        let then_update = parse_update(&p.then_branch.update)
            .map_err(|e| Diagnostic::new(format!("{at}.then.update"), e.to_string()));
        let else_update = parse_update(&p.else_branch.update)
            .map_err(|e| Diagnostic::new(format!("{at}.else.update"), e.to_string()));
        let (pred, then_update, else_update) = match (pred, then_update, else_update) {
            (Ok(p), Ok(t), Ok(e)) => (p, t, e),
            (p, t, e) => {
                diags.extend([p.err(), t.err(), e.err()].into_iter().flatten());
                continue;
            }
        };
        let pair = TransitionPair {
            src: p.src.clone(),
            input: p.input.clone(),
            pred,
            then_branch: Branch::new(p.then_branch.dest.clone(), p.then_branch.output.clone(), then_update),
            else_branch: Branch::new(p.else_branch.dest.clone(), p.else_branch.output.clone(), else_update),
        };
        if let Err(e) = EfsmSdl::new(sig.clone(), vec![pair.clone()], init.clone()) {
            diags.push(Diagnostic::new(pair_path(&at, p, &e), e.to_string()));
            continue;
        }
        if let Some(first) = seen.insert((p.src.clone(), p.input.clone()), k) {
            diags.push(Diagnostic::new(
                at,
                format!(
                    "second transition pair from `{}` on `{}` (first is pairs[{first}]); \
                     a deterministic machine has at most one pair per state and input",
                    p.src, p.input
                ),
            ));
            continue;
        }
        pairs.push(pair);
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    EfsmSdl::new(sig, pairs, init).map_err(|e| vec![Diagnostic::new("", e.to_string())])
}

fn header_path(doc: &MachineDocument, e: &ModelError) -> String {
    let locate = |name: &str| {
        let lists = [("states", &doc.states), ("inputs", &doc.inputs), ("outputs", &doc.outputs)];
        let mut hits = Vec::new();
        for (field, list) in lists {
            hits.extend(list.iter().enumerate().filter(|(_, n)| *n == name).map(|(k, _)| format!("{field}[{k}]")));
        }
        hits.extend(
            doc.vars
                .iter()
                .enumerate()
                .filter(|(_, v)| v.name == name)
                .map(|(k, _)| format!("vars[{k}].name")),
        );
        hits
    };
    match e {
        ModelError::InvalidName(n) => locate(n).into_iter().next().unwrap_or_default(),
        // Report the second declaration.
        ModelError::DuplicateName(n) => locate(n).into_iter().nth(1).unwrap_or_default(),
        ModelError::EmptyDomain(n) => doc
            .vars
            .iter()
            .position(|v| &v.name == n)
            .map(|k| format!("vars[{k}]"))
            .unwrap_or_default(),
        ModelError::UnknownState(_) => "init.state".into(),
        ModelError::InitMismatch => "init.vals".into(),
        ModelError::InitOutOfDomain { var, .. } => format!("init.vals.{var}"),
        _ => String::new(),
    }
}

fn pair_path(at: &str, p: &PairDocument, e: &ModelError) -> String {
    let field = match e {
        ModelError::UnknownState(y) if *y == p.src => "src".to_string(),
        ModelError::UnknownState(y) if *y == p.then_branch.dest => "then.dest".into(),
        ModelError::UnknownState(_) => "else.dest".into(),
        ModelError::UnknownInput(_) => "input".into(),
        ModelError::UnknownOutput(z) if *z == p.then_branch.output => "then.output".into(),
        ModelError::UnknownOutput(_) => "else.output".into(),
        _ => return at.to_string(),
    };
    format!("{at}.{field}")
}

pub fn to_document(m: &EfsmSdl) -> MachineDocument {
    let sig = m.signature();
    let branch = |b: &Branch| BranchDocument {
        dest: b.dest.clone(),
        output: b.output.clone(),
        update: b.update.to_string(),
    };
    MachineDocument {
        states: sig.states.clone(),
        inputs: sig.inputs.clone(),
        outputs: sig.outputs.clone(),
        vars: sig
            .vars
            .iter()
            .map(|d| VarDocument {
                name: d.name.clone(),
                lo: d.lo,
                hi: d.hi,
            })
            .collect(),
        init: InitDocument {
            state: m.init().state.clone(),
            vals: m.init().vals.iter().map(|(k, v)| (k.to_string(), v)).collect(),
        },
        pairs: m
            .pairs()
            .iter()
            .map(|p| PairDocument {
                src: p.src.clone(),
                input: p.input.clone(),
                pred: p.pred.to_string(),
                then_branch: branch(&p.then_branch),
                else_branch: branch(&p.else_branch),
            })
            .collect(),
    }
}

pub fn serialize_machine(m: &EfsmSdl) -> String {
    serde_json::to_string_pretty(&to_document(m)).expect("documents always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    const COUNTER: &str = include_str!("../fixtures/counter.json");

    #[test]
    fn counter_fixture_parses() {
        let m = parse_machine(COUNTER).unwrap();
        assert_eq!(m.pairs().len(), 2);
        assert_eq!(m.init().vals.get("v"), Some(0));
        let again = parse_machine(&serialize_machine(&m)).unwrap();
        assert_eq!(again, m);
    }

    fn edit(f: impl FnOnce(&mut serde_json::Value)) -> String {
        let mut v: serde_json::Value = serde_json::from_str(COUNTER).unwrap();
        f(&mut v);
        v.to_string()
    }

    fn paths(text: &str) -> Vec<String> {
        parse_machine(text).unwrap_err().into_iter().map(|d| d.path).collect()
    }

    #[test]
    fn diagnostics_carry_paths() {
        assert_eq!(paths(&edit(|v| v["init"]["vals"]["v"] = 12.into())), ["init.vals.v"]);
        assert_eq!(paths(&edit(|v| v["pairs"][1]["pred"] = "v <=".into())), ["pairs[1].pred"]);
        assert_eq!(paths(&edit(|v| v["pairs"][0]["then"]["dest"] = "III".into())), ["pairs[0].then.dest"]);
        assert_eq!(paths(&edit(|v| v["pairs"][0]["extra"] = 1.into())), ["pairs[0].extra"]);
        assert_eq!(paths(&edit(|v| v["vars"][0]["lo"] = "zero".into())), ["vars[0].lo"]);
        assert_eq!(paths(&edit(|v| v["states"][1] = "if".into())), ["states[1]"]);
    }

    #[test]
    fn duplicate_pair_mentions_determinism() {
        let text = edit(|v| {
            let first = v["pairs"][0].clone();
            v["pairs"].as_array_mut().unwrap().push(first);
        });
        let diags = parse_machine(&text).unwrap_err();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].path, "pairs[2]");
        assert!(diags[0].message.contains("deterministic"));
    }

    #[test]
    fn several_problems_at_once() {
        let text = edit(|v| {
            v["pairs"][0]["pred"] = "v >".into();
            v["pairs"][1]["else"]["output"] = "q".into();
        });
        assert_eq!(paths(&text), ["pairs[0].pred", "pairs[1].else.output"]);
    }
}
