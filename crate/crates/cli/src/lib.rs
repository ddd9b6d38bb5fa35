//! `efsmdes`: command-line access to the transformation and checks.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use efsm_des::analysis::{
    check_equivalence, derive_periodic, Autonomous, EquivOptions, UltimatelyPeriodic, DEFAULT_MAX_STEPS,
};
use efsm_des::efsm::{Config, EfsmSdl, Machine};
use efsm_des::emit::{automaton_dot, efsm_sdl_dot, emit_code, mealy_dot, supervisor_dot, CodegenOptions};
use efsm_des::expr::Valuation;
use efsm_des::transform::{extract_controlled_des, extract_supervisor, DEFAULT_STATE_CAP};
use efsm_des::{parse_machine, Supervisor, SupervisorState};

#[derive(Debug, Parser)]
#[command(name = "efsmdes", version, about = "Split SDL-form EFSMs into a controlled DES and a supervisor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate a machine file.
    Validate {
        file: PathBuf,
        /// Write the machine as a DOT graph.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Print the controlled DES `G`.
    ExtractDes {
        file: PathBuf,
        /// Write a DOT graph to this path (`-` for standard output).
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Print the supervisor `Φ = (S, ψ)` over the full state space.
    ExtractSup {
        file: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
        state_cap: u128,
    },
    /// Print the supervisor automaton with disabled edges and unreachable states removed.
    Reduce {
        file: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
        state_cap: u128,
    },
    /// Print the supervised system `Φ/G`.
    Product {
        file: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
        state_cap: u128,
    },
    /// Run the machine on an input sequence.
    Simulate {
        file: PathBuf,
        /// Input events separated by commas or spaces.
        #[arg(long)]
        inputs: String,
        /// Repeat the sequence cyclically until this many steps.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Compare the machine with its coupled control model.
    Equiv {
        file: PathBuf,
        #[arg(long)]
        horizon: usize,
        /// Random sequences to try beyond the exhaustive bound.
        #[arg(long, default_value_t = 0)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
        state_cap: u128,
    },
    /// Print the ultimately periodic expressions of a single-input run.
    Regex {
        file: PathBuf,
        /// Configuration at which the period starts, e.g. `I,v=2`.
        #[arg(long)]
        anchor: Option<String>,
        /// Which model to follow.
        #[arg(long, value_enum, default_value_t = Model::Efsm)]
        from: Model,
    },
    /// Emit switch-style C code.
    Codegen {
        file: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        indent: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    Efsm,
    Coupled,
}

/// A failure with its exit status.
struct Failure {
    code: i32,
    message: String,
}

fn fail(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        fail(e.to_string())
    }
}

type Outcome = Result<i32, Failure>;

/// Runs the CLI on `argv` (including the program name) and returns the exit status.
pub fn dispatch<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { out.write_all(rendered.as_bytes()) } else { err.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    match run(cli.command, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn load(path: &Path) -> Result<EfsmSdl, Failure> {
    let text = fs::read_to_string(path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    parse_machine(&text).map_err(|diags| {
        let lines: Vec<String> = diags.iter().map(|d| format!("{}: {d}", path.display())).collect();
        fail(lines.join("\n"))
    })
}

fn write_dot(target: Option<&Path>, dot: &str, out: &mut dyn Write) -> Result<(), Failure> {
    match target {
        None => Ok(()),
        Some(p) if p == Path::new("-") => Ok(out.write_all(dot.as_bytes())?),
        Some(p) => fs::write(p, dot).map_err(|e| fail(format!("{}: {e}", p.display()))),
    }
}

fn supervisor(m: &EfsmSdl, cap: u128) -> Result<Supervisor<SupervisorState>, Failure> {
    extract_supervisor(m, cap).map_err(|e| fail(e.to_string()))
}

fn run(command: Command, out: &mut dyn Write) -> Outcome {
    match command {
        Command::Validate { file, dot } => {
            let m = load(&file)?;
            let sig = m.signature();
            writeln!(
                out,
                "ok: {} states, {} inputs, {} outputs, {} variables, {} transition pairs",
                sig.states.len(),
                sig.inputs.len(),
                sig.outputs.len(),
                sig.vars.len(),
                m.pairs().len()
            )?;
            writeln!(out, "initial: {}", m.init())?;
            write_dot(dot.as_deref(), &efsm_sdl_dot(&m), out)?;
            Ok(0)
        }
        Command::ExtractDes { file, dot } => {
            let g = extract_controlled_des(&load(&file)?);
            writeln!(out, "states: {}", g.states().len())?;
            writeln!(out, "transitions: {}", g.transition_count())?;
            for (q, e, to, z) in g.transitions() {
                writeln!(out, "  {q} --{e}/{z}--> {to}")?;
            }
            write_dot(dot.as_deref(), &mealy_dot(&g), out)?;
            Ok(0)
        }
        Command::ExtractSup { file, dot, state_cap } => {
            let phi = supervisor(&load(&file)?, state_cap)?;
            let s = phi.automaton();
            writeln!(out, "states: {}", s.states().len())?;
            writeln!(out, "initial: {}", s.initial())?;
            writeln!(out, "transitions: {}", s.transition_count())?;
            writeln!(out, "complete: {}", phi.check_completeness_condition())?;
            for x in s.states() {
                writeln!(out, "  {x} psi={}", phi.psi(x))?;
            }
            write_dot(dot.as_deref(), &supervisor_dot(&phi), out)?;
            Ok(0)
        }
        Command::Reduce { file, dot, state_cap } => {
            let reduced = supervisor(&load(&file)?, state_cap)?.reduce();
            writeln!(out, "states: {}", reduced.states().len())?;
            writeln!(out, "transitions: {}", reduced.transition_count())?;
            for (x, e, to) in reduced.transitions() {
                writeln!(out, "  {x} --{e}--> {to}")?;
            }
            write_dot(dot.as_deref(), &automaton_dot(&reduced), out)?;
            Ok(0)
        }
        Command::Product { file, dot, state_cap } => {
            let m = load(&file)?;
            let phi = supervisor(&m, state_cap)?;
            let sys = phi
                .couple(&extract_controlled_des(&m))
                .map_err(|e| fail(e.to_string()))?;
            writeln!(out, "states: {}", sys.states().len())?;
            writeln!(out, "transitions: {}", sys.transition_count())?;
            for ((x, q), e, (x2, q2), z) in sys.transitions() {
                writeln!(out, "  <{x}, {q}> --{e}/{z}--> <{x2}, {q2}>")?;
            }
            write_dot(dot.as_deref(), &mealy_dot(&sys), out)?;
            Ok(0)
        }
        Command::Simulate { file, inputs, steps } => {
            let m = load(&file)?;
            let seq: Vec<&str> = inputs.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            if seq.is_empty() {
                return Err(Failure {
                    code: 2,
                    message: "--inputs needs at least one event".into(),
                });
            }
            let word: Vec<&str> = match steps {
                Some(n) => seq.iter().copied().cycle().take(n).collect(),
                None => seq,
            };
            match m.execute(&word) {
                Ok(exec) => {
                    writeln!(out, "outputs: {}", exec.trace.outputs.join(" "))?;
                    writeln!(out, "final: {}", exec.config)?;
                    Ok(0)
                }
                Err(e) => {
                    writeln!(out, "outputs: {}", e.partial.outputs.join(" "))?;
                    writeln!(out, "final: {}", e.config)?;
                    Err(fail(format!("halted: {e}")))
                }
            }
        }
        Command::Equiv {
            file,
            horizon,
            budget,
            seed,
            json,
            state_cap,
        } => {
            let m = load(&file)?;
            let opts = EquivOptions {
                seed,
                state_cap,
                ..EquivOptions::new(horizon, budget)
            };
            let report = check_equivalence(&m, &opts).map_err(|e| fail(e.to_string()))?;
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&report.to_json()).expect("JSON values serialize"))?;
            } else {
                writeln!(out, "{report}")?;
            }
            Ok(if report.is_equivalent() { 0 } else { 1 })
        }
        Command::Regex { file, anchor, from } => {
            let m = load(&file)?;
            let anchor = anchor.as_deref().map(parse_anchor).transpose()?;
            match from {
                Model::Efsm => print_periodic(&m, anchor.as_ref(), out),
                Model::Coupled => {
                    let sys = supervisor(&m, DEFAULT_STATE_CAP)?
                        .couple(&extract_controlled_des(&m))
                        .map_err(|e| fail(e.to_string()))?;
                    print_periodic(&sys, anchor.as_ref(), out)
                }
            }
        }
        Command::Codegen { file, output, indent } => {
            let m = load(&file)?;
            let code = emit_code(
                &m,
                &CodegenOptions {
                    indent,
                    ..CodegenOptions::default()
                },
            );
            match output {
                Some(p) if p != Path::new("-") => fs::write(&p, code).map_err(|e| fail(format!("{}: {e}", p.display())))?,
                _ => out.write_all(code.as_bytes())?,
            }
            Ok(0)
        }
    }
}

fn print_periodic<A: Autonomous>(sys: &A, anchor: Option<&Config>, out: &mut dyn Write) -> Outcome {
    let up: UltimatelyPeriodic<A::Config> =
        derive_periodic(sys, anchor, DEFAULT_MAX_STEPS).map_err(|e| fail(e.to_string()))?;
    writeln!(out, "anchor: {}", up.anchor)?;
    writeln!(out, "input: {}", up.render_input())?;
    writeln!(out, "output: {}", up.render_output())?;
    writeln!(out, "combined: {}", up.render_combined())?;
    Ok(0)
}

/// `I,v=2` or `I` for a state with no variables.
fn parse_anchor(text: &str) -> Result<Config, Failure> {
    let usage = |msg: String| Failure { code: 2, message: msg };
    let mut parts = text.split(',').map(str::trim);
    let state = parts.next().filter(|s| !s.is_empty()).ok_or_else(|| usage("empty --anchor".into()))?;
    let mut vals = Valuation::new();
    for part in parts {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| usage(format!("expected `name=value` in --anchor, found `{part}`")))?;
        let value: i64 = value
            .trim()
            .parse()
            .map_err(|_| usage(format!("`{}` is not an integer", value.trim())))?;
        vals.set(name.trim(), value);
    }
    Ok(Config::new(state, vals))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors() {
        let c = parse_anchor("I, v=2").ok().unwrap();
        assert_eq!(c, Config::new("I", Valuation::new().with("v", 2)));
        assert_eq!(parse_anchor("II").ok().unwrap().vals, Valuation::new());
        assert_eq!(parse_anchor("I,v").err().unwrap().code, 2);
        assert_eq!(parse_anchor("I,v=x").err().unwrap().code, 2);
    }
}
