//! Deterministic EFSMs in SDL transition-pair form, split into a controlled
//! Mealy DES and a supervisor that restores the guards.

pub mod analysis;
pub mod document;
pub mod efsm;
pub mod emit;
pub mod expr;
pub mod mealy;
pub mod supervisor;
pub mod transform;

pub use analysis::{check_equivalence, check_equivalence_with, derive_periodic, EquivOptions, EquivalenceReport};
pub use document::{parse_machine, serialize_machine, Diagnostic};
pub use efsm::{Config, Efsm, EfsmSdl, Machine, Signature};
pub use emit::{emit_code, CodegenOptions};
pub use mealy::{MealyAutomaton, PairedEvent, TracePair};
pub use supervisor::{ControlPattern, PlainAutomaton, Supervisor};
pub use transform::{extract_controlled_des, extract_supervisor, SupervisorState};
