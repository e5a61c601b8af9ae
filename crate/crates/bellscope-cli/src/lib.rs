//! Command-line front end over the bellscope library. Reports are JSON
//! objects with sorted keys, so repeat runs on the same input are
//! byte-identical.
//!
//! Exit codes: 0 for a positive verdict, 3 for a well-posed negative one
//! (outside a hull, inadmissible, unrepresentable, no decomposition),
//! 2 for unusable input, 1 for an internal failure.

pub mod commands;
pub mod json;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use bellscope::arith::Rational;

use commands::{CmdError, Outcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NEGATIVE: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// exact rational arithmetic (default)
    Exact,
    /// IEEE doubles with a 1e-9 comparison tolerance
    Float,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Float => "float",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Classical,
    Quantum,
    General,
    All,
}

impl FamilyArg {
    fn name(self) -> &'static str {
        match self {
            FamilyArg::Classical => "classical",
            FamilyArg::Quantum => "quantum",
            FamilyArg::General => "general",
            FamilyArg::All => "all",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RepKind {
    /// one unconditional event per experimental claim
    Kolmogorov,
    /// settings and outcomes, probabilities read conditionally
    Conditional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExplainKind {
    /// three-layer settings/cause/outcomes space
    Propensity,
    /// additionally collapse deterministic cells to an unconditional space
    Property,
}

#[derive(Debug, Parser)]
#[command(
    name = "bellscope",
    version,
    about = "correlation polytopes, probability-space representations, and common-cause structure"
)]
pub struct Cli {
    /// Arithmetic backend for polytope and representation work
    #[arg(long, global = true, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,

    /// Seed echoed into the report (also read from BELLSCOPE_SEED)
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Write the report to this file instead of stdout
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide hull membership of a correlation vector
    Classify {
        /// JSON file holding the vector
        input: PathBuf,
        /// Which vertex family to test against
        #[arg(long, value_enum, default_value_t = FamilyArg::All)]
        family: FamilyArg,
    },
    /// Build a probability-space representation of a correlation vector
    Represent {
        /// JSON file holding the vector
        input: PathBuf,
        /// Representation style
        #[arg(long, value_enum)]
        kind: RepKind,
        /// Demand a non-signaling conditional witness
        #[arg(long)]
        nonsignaling: bool,
    },
    /// Build a common-cause explanation of a correlation vector
    Explain {
        /// JSON file holding the vector
        input: PathBuf,
        /// What to extract from the explanation
        #[arg(long, value_enum, default_value_t = ExplainKind::Property)]
        kind: ExplainKind,
        /// JSON file naming the cause cells and their component vectors
        #[arg(long, value_name = "FILE")]
        components: Option<PathBuf>,
    },
    /// Evaluate the two-wing singlet experiment
    Epr {
        /// Use the directions that reach the Clauser-Horne violation -(1+sqrt 2)/2
        #[arg(long, conflicts_with = "angles")]
        canonical: bool,
        /// Twelve numbers: x,y,z for each of a1, a2, b3, b4
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_name = "X,Y,Z,...")]
        angles: Option<Vec<f64>>,
    },
    /// Evaluate the averaged two-wing operator on supplied states
    BellOperator {
        /// JSON object with matrices A1, A2, B1, B2
        #[arg(long, value_name = "FILE")]
        operators: PathBuf,
        /// JSON object {"states": [matrix, ...]}
        #[arg(long, value_name = "FILE")]
        states: PathBuf,
    },
}

fn read_input(path: &Path) -> Result<(Vec<u8>, Value), CmdError> {
    let bytes = fs::read(path)
        .map_err(|e| CmdError::Input(format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_slice(&bytes)
        .map_err(|e| CmdError::Input(format!("{} is not valid JSON: {e}", path.display())))?;
    Ok((bytes, value))
}

fn digest(parts: &[&[u8]]) -> String {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part);
    }
    let hash = hasher.finalize();
    hash.iter().map(|b| format!("{b:02x}")).collect()
}

fn dispatch_scalar<F, G>(mode: Mode, exact: F, float: G) -> Result<Outcome, CmdError>
where
    F: FnOnce() -> Result<Outcome, CmdError>,
    G: FnOnce() -> Result<Outcome, CmdError>,
{
    match mode {
        Mode::Exact => exact(),
        Mode::Float => float(),
    }
}

struct Ran {
    name: &'static str,
    input_digest: String,
    mode: Mode,
    outcome: Outcome,
}

fn run_command(cli: &Cli) -> Result<Ran, CmdError> {
    match &cli.command {
        Command::Classify { input, family } => {
            let (bytes, value) = read_input(input)?;
            let families = commands::families_named(family.name());
            let outcome = dispatch_scalar(
                cli.mode,
                || commands::classify::<Rational>(&value, &families),
                || commands::classify::<f64>(&value, &families),
            )?;
            Ok(Ran {
                name: "classify",
                input_digest: digest(&[&bytes]),
                mode: cli.mode,
                outcome,
            })
        }
        Command::Represent { input, kind, nonsignaling } => {
            let (bytes, value) = read_input(input)?;
            let outcome = match kind {
                RepKind::Kolmogorov => dispatch_scalar(
                    cli.mode,
                    || commands::represent_kolmogorov::<Rational>(&value),
                    || commands::represent_kolmogorov::<f64>(&value),
                )?,
                RepKind::Conditional => dispatch_scalar(
                    cli.mode,
                    || commands::represent_conditional::<Rational>(&value, *nonsignaling),
                    || commands::represent_conditional::<f64>(&value, *nonsignaling),
                )?,
            };
            Ok(Ran {
                name: "represent",
                input_digest: digest(&[&bytes]),
                mode: cli.mode,
                outcome,
            })
        }
        Command::Explain { input, kind, components } => {
            let (bytes, value) = read_input(input)?;
            let property = *kind == ExplainKind::Property;
            let components_input = components
                .as_deref()
                .map(read_input)
                .transpose()?;
            let mut digest_parts: Vec<&[u8]> = vec![&bytes];
            if let Some((component_bytes, _)) = &components_input {
                digest_parts.push(b"\n");
                digest_parts.push(component_bytes);
            }
            let components_value = components_input.as_ref().map(|(_, v)| v);
            let outcome = dispatch_scalar(
                cli.mode,
                || commands::explain::<Rational>(&value, property, components_value),
                || commands::explain::<f64>(&value, property, components_value),
            )?;
            Ok(Ran {
                name: "explain",
                input_digest: digest(&digest_parts),
                mode: cli.mode,
                outcome,
            })
        }
        Command::Epr { canonical, angles } => {
            let directions = match angles {
                None => {
                    if !canonical {
                        return Err(CmdError::Input(
                            "epr needs either --canonical or --angles".into(),
                        ));
                    }
                    None
                }
                Some(flat) => {
                    if flat.len() != 12 {
                        return Err(CmdError::Input(format!(
                            "--angles needs 12 numbers, got {}",
                            flat.len()
                        )));
                    }
                    let mut dirs = [[0.0; 3]; 4];
                    for (k, chunk) in flat.chunks(3).enumerate() {
                        dirs[k] = [chunk[0], chunk[1], chunk[2]];
                    }
                    Some(dirs)
                }
            };
            let digest_text = match &directions {
                None => "canonical".to_string(),
                Some(dirs) => dirs
                    .iter()
                    .flatten()
                    .map(|x| format!("{x}"))
                    .collect::<Vec<_>>()
                    .join(","),
            };
            let outcome = commands::epr(directions)?;
            Ok(Ran {
                name: "epr",
                input_digest: digest(&[digest_text.as_bytes()]),
                mode: Mode::Float,
                outcome,
            })
        }
        Command::BellOperator { operators, states } => {
            let (op_bytes, op_value) = read_input(operators)?;
            let (state_bytes, state_value) = read_input(states)?;
            let outcome = commands::bell_operator(&op_value, &state_value)?;
            Ok(Ran {
                name: "bell-operator",
                input_digest: digest(&[&op_bytes, b"\n", &state_bytes]),
                mode: Mode::Float,
                outcome,
            })
        }
    }
}

fn seed_from_env() -> Option<u64> {
    std::env::var("BELLSCOPE_SEED").ok()?.parse().ok()
}

fn report(ran: &Ran, seed: Option<u64>) -> Value {
    let mut out = Map::new();
    out.insert("command".into(), json!(ran.name));
    out.insert("input_digest".into(), json!(ran.input_digest));
    out.insert("mode".into(), json!(ran.mode.name()));
    out.insert("results".into(), ran.outcome.results.clone());
    if let Some(seed) = seed {
        out.insert("seed".into(), json!(seed));
    }
    out.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    Value::Object(out)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CmdError> {
    match out {
        None => {
            let stdout = std::io::stdout();
            let mut handle = stdout.lock();
            handle
                .write_all(text.as_bytes())
                .and_then(|_| handle.write_all(b"\n"))
                .map_err(|e| CmdError::Internal(format!("cannot write report: {e}")))
        }
        Some(path) => fs::write(path, format!("{text}\n"))
            .map_err(|e| CmdError::Input(format!("cannot write {}: {e}", path.display()))),
    }
}

/// Runs a parsed invocation and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match run_command(cli) {
        Ok(ran) => {
            let seed = cli.seed.or_else(seed_from_env);
            let value = report(&ran, seed);
            let text = serde_json::to_string_pretty(&value).expect("reports are plain JSON");
            match emit(&text, cli.out.as_deref()) {
                Ok(()) => {
                    if ran.outcome.negative {
                        EXIT_NEGATIVE
                    } else {
                        EXIT_OK
                    }
                }
                Err(CmdError::Input(msg)) => {
                    eprintln!("error: {msg}");
                    EXIT_INPUT
                }
                Err(CmdError::Internal(msg)) => {
                    eprintln!("error: {msg}");
                    EXIT_INTERNAL
                }
            }
        }
        Err(CmdError::Input(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INPUT
        }
        Err(CmdError::Internal(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INTERNAL
        }
    }
}
