//! `aqc`: run, verify, compose and encode addressable quantum circuits.
//!
//! Exit codes: 0 success, 1 input error, 2 verification failure,
//! 3 resource limit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aqc::circuits::{bell_circuit, empty_circuit, gates, pbs_circuit, phase_breaking_circuit, quantum_switch, switch_skeleton};
use aqc::composition::{connect, relabel};
use aqc::document::{circuit_to_json, load_circuit};
use aqc::evolution::{run_with, Circuit};
use aqc::exec::{configure_from_env, Exec};
use aqc::landmark::check_landmarks;
use aqc::model::{Address, SparseState};
use aqc::nameblind::{self, CheckMode, WordOrder};
use aqc::operator::check_gate_operator;
use aqc::qcgd;
use aqc::renaming::{check_nameblind_gate, reachable_probes, NameblindMode};
use aqc::AqcError;
use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::json;

const TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "aqc", version, about = "Addressable quantum circuit simulator and checker")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evolve a circuit and print state dumps.
    Run {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long, default_value_t = 0)]
        steps: usize,
        /// Print the state after the last step (or at each --at step).
        #[arg(long)]
        dump: bool,
        #[arg(long, num_args = 1..)]
        at: Vec<usize>,
        /// Evaluate the landmarks stored in the circuit file.
        #[arg(long)]
        landmarks: bool,
    },
    /// Check unitarity and nameblindness of every gate operator.
    Verify {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        nameblind: bool,
        /// Use every external renaming instead of adjacent swaps.
        #[arg(long)]
        exhaustive: bool,
        #[arg(long)]
        unitary: bool,
        #[arg(long, default_value_t = 12)]
        probe_depth: usize,
    },
    /// Nameblind matrices.
    Nameblind {
        #[command(subcommand)]
        cmd: NbCmd,
    },
    /// Connect circuits as described by a compose spec.
    Compose {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare circuit evolution with the evolution of its graph encoding.
    Qcgd {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        steps: usize,
        /// Write one DOT file per step of the graph evolution.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Write a built-in circuit as a circuit document.
    Export {
        #[arg(value_enum)]
        builtin: Builtin,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum NbCmd {
    /// Random nameblind (or partially nameblind) matrix in text form.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        pure: bool,
        /// Only commute with R_k for k > P.
        #[arg(long, default_value_t = 0)]
        partial: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that a matrix file commutes with all renamings.
    Check {
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Dimension of the commutant of the renaming action on n letters.
    CommutantDim {
        #[arg(long)]
        n: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Builtin {
    Bell,
    Switch,
    SwitchOpen,
    Pbs,
    PhaseBreaking,
    Empty,
}

enum Failure {
    Input(String),
    Verification(String),
    Resource(String),
}

impl From<AqcError> for Failure {
    fn from(e: AqcError) -> Self {
        match e {
            AqcError::ResourceLimit(m) => Failure::Resource(m),
            other => Failure::Input(other.to_string()),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_from_env() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let result = match cli.cmd {
        Cmd::Run { circuit, steps, dump, at, landmarks } => cmd_run(&circuit, steps, dump, &at, landmarks),
        Cmd::Verify { circuit, nameblind, exhaustive, unitary, probe_depth } => {
            let both = !nameblind && !unitary;
            cmd_verify(&circuit, nameblind || both, unitary || both, exhaustive, probe_depth)
        }
        Cmd::Nameblind { cmd } => cmd_nameblind(cmd),
        Cmd::Compose { spec, out } => cmd_compose(&spec, out.as_deref()),
        Cmd::Qcgd { circuit, steps, dot } => cmd_qcgd(&circuit, steps, dot.as_deref()),
        Cmd::Export { builtin, out } => cmd_export(builtin, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Verification(m)) => {
            eprintln!("failed: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Resource(m)) => {
            eprintln!("resource limit: {m}");
            ExitCode::from(3)
        }
    }
}

fn write_out(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Canonical dump: one `amp re im` line per term, then one line per sector.
fn dump(step: usize, s: &SparseState) -> String {
    let mut out = format!("step {step} terms {}\n", s.len());
    for (b, c) in s.iter() {
        let _ = writeln!(out, "amp {:?} {:?}", c.re, c.im);
        for (a, sec) in b.sectors() {
            let _ = writeln!(out, "  {a}: {sec}");
        }
    }
    out
}

fn cmd_run(path: &Path, steps: usize, do_dump: bool, at: &[usize], landmarks: bool) -> Outcome {
    let c = load_circuit(path)?;
    let mut wanted: Vec<usize> = if at.is_empty() { vec![steps] } else { at.to_vec() };
    wanted.sort();
    wanted.dedup();
    let last = wanted.last().copied().unwrap_or(0).max(steps);
    let mut state = c.initial.clone();
    let mut text = String::new();
    for k in 0..=last {
        if k > 0 {
            state = run_with(&c.skeleton, &state, 1, Exec::default())?;
        }
        if (do_dump || !landmarks) && wanted.contains(&k) {
            text.push_str(&dump(k, &state));
        }
    }
    print!("{text}");
    if landmarks {
        let results = check_landmarks(&c)?;
        let mut failed = Vec::new();
        for r in &results {
            println!("landmark {} {} error {:.3e}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.error);
            if !r.passed {
                failed.push(r.name.clone());
            }
        }
        if !failed.is_empty() {
            return Err(Failure::Verification(format!("landmarks failed: {}", failed.join(", "))));
        }
    }
    Ok(())
}

fn cmd_verify(path: &Path, nameblind: bool, unitary: bool, exhaustive: bool, depth: usize) -> Outcome {
    let c = load_circuit(path)?;
    let probes = reachable_probes(&c, depth)?;
    let mut gates_out = Vec::new();
    let mut ok = true;
    for (op, p) in c.skeleton.operators().iter().zip(&probes) {
        let mut entry = json!({ "gate": op.gate.iter().map(|a| a.0).collect::<Vec<_>>(), "name": op.name });
        if unitary {
            let r = check_gate_operator(op, p, 50_000)?;
            let pass = r.passed(TOL);
            ok &= pass;
            entry["unitary"] = json!({
                "passed": pass,
                "closure": r.closure_size,
                "truncated": r.truncated,
                "max_defect": r.max_defect,
                "address_violations": r.address_violations,
            });
        }
        if nameblind {
            // Past six external addresses the full group is too large; adjacent
            // swaps on orbit-closed probes still cover every renaming.
            let external = c.skeleton.addresses().len() - op.gate.len();
            let mode = if exhaustive && external <= 6 { NameblindMode::Full } else { NameblindMode::Generators };
            let r = check_nameblind_gate(c.skeleton.addresses(), op, p, &mode, Exec::default())?;
            let pass = r.passed(TOL);
            ok &= pass;
            entry["nameblind"] = json!({
                "passed": pass,
                "mode": if mode == NameblindMode::Full { "full" } else { "generators" },
                "probes": r.probes,
                "renamings": r.renamings,
                "max_defect": r.max_defect,
                "worst": r.worst,
            });
        }
        gates_out.push(entry);
    }
    let report = json!({ "circuit": c.name, "passed": ok, "gates": gates_out });
    println!("{}", serde_json::to_string_pretty(&report).expect("json"));
    if ok {
        Ok(())
    } else {
        Err(Failure::Verification(format!("{} has violating gates", c.name)))
    }
}

fn cmd_nameblind(cmd: NbCmd) -> Outcome {
    match cmd {
        NbCmd::Gen { n, pure, partial, seed, out } => {
            if !(1..=5).contains(&n) {
                return Err(Failure::Resource(format!("n={n} outside 1..=5")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = if pure { nameblind::random_pure_nameblind(n, &mut rng) } else { nameblind::random_partially_nameblind(n, partial, &mut rng) };
            write_out(out.as_deref(), &nameblind::write_matrix(&m, n, n, WordOrder::Lex))
        }
        NbCmd::Check { matrix } => {
            let text = std::fs::read_to_string(&matrix).map_err(|e| Failure::Input(format!("{}: {e}", matrix.display())))?;
            let (m, basis) = nameblind::read_matrix(&text)?;
            let mode = if basis.addresses.len() <= 5 { CheckMode::Full } else { CheckMode::Generators };
            let rep = nameblind::is_nameblind(&m, &basis, mode, Exec::default())?;
            println!("renamings {} max_defect {:e}", rep.renamings, rep.max_defect);
            if rep.passed() {
                Ok(())
            } else {
                Err(Failure::Verification("matrix does not commute with all renamings".into()))
            }
        }
        NbCmd::CommutantDim { n } => {
            println!("{}", nameblind::commutant_dimension(n)?);
            Ok(())
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ComposeSpec {
    circuits: Vec<Constituent>,
    /// (ingoing, outgoing) buffer pairs; empty for parallel composition.
    #[serde(default)]
    connect: Vec<(u32, u32)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Constituent {
    file: PathBuf,
    #[serde(default)]
    relabel: BTreeMap<u32, u32>,
}

fn cmd_compose(spec: &Path, out: Option<&Path>) -> Outcome {
    let text = std::fs::read_to_string(spec).map_err(|e| Failure::Input(format!("{}: {e}", spec.display())))?;
    let s: ComposeSpec = serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", spec.display())))?;
    let base = spec.parent().unwrap_or(Path::new("."));
    let mut parts = Vec::new();
    for c in &s.circuits {
        let loaded = load_circuit(&base.join(&c.file))?;
        let map = &c.relabel;
        let renamed = if map.is_empty() { loaded } else { relabel(&loaded, &|a: Address| Address(*map.get(&a.0).unwrap_or(&a.0)))? };
        parts.push(renamed);
    }
    let ins: Vec<Address> = s.connect.iter().map(|p| Address(p.0)).collect();
    let outs: Vec<Address> = s.connect.iter().map(|p| Address(p.1)).collect();
    let refs: Vec<&Circuit> = parts.iter().collect();
    let composed = connect(&ins, &outs, &refs)?;
    write_out(out, &(circuit_to_json(&composed) + "\n"))
}

fn cmd_qcgd(path: &Path, steps: usize, dot: Option<&Path>) -> Outcome {
    let c = load_circuit(path)?;
    let rep = qcgd::check_equivalence(&c, steps, Exec::default())?;
    for (j, d) in rep.distances.iter().enumerate() {
        println!("step {} distance {:e}", j + 1, d);
    }
    if let Some(dir) = dot {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
        let mut g = qcgd::encode(&c.skeleton, &c.initial);
        for j in 0..=steps {
            if j > 0 {
                g = qcgd::graph_step(&c.skeleton, &g, Exec::default())?;
            }
            let p = dir.join(format!("step_{j:02}.dot"));
            std::fs::write(&p, qcgd::to_dot(&g)).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
        }
    }
    if rep.passed(TOL) {
        println!("equivalent over {steps} steps (max distance {:e})", rep.max_distance);
        Ok(())
    } else {
        Err(Failure::Verification(format!("encoding diverges, max distance {:e}", rep.max_distance)))
    }
}

fn builtin(b: Builtin) -> aqc::Result<Circuit> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = Complex64::new(s, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    match b {
        Builtin::Bell => Ok(bell_circuit()),
        Builtin::Switch => quantum_switch(&gates::pauli_y(), &gates::pauli_z(), 1, (h, h), &[one, zero]),
        Builtin::SwitchOpen => switch_skeleton(&gates::pauli_y(), &gates::pauli_z(), 1),
        Builtin::Pbs => pbs_circuit(1, &[vec![(h, (1, 0)), (h, (0, 1))], vec![], vec![], vec![]]),
        Builtin::PhaseBreaking => Ok(phase_breaking_circuit()),
        Builtin::Empty => Ok(empty_circuit()),
    }
}

fn cmd_export(b: Builtin, out: Option<&Path>) -> Outcome {
    write_out(out, &(circuit_to_json(&builtin(b)?) + "\n"))
}
