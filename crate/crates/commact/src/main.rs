use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use commact::approx::{approximate_sequent, refute, ApproxResult};
use commact::calculus::{check, CalculusId};
use commact::cutelim::eliminate_cuts;
use commact::encoding::{
    encode, k_step_sequent, synth_circular, synth_circular_witness, synth_k_step, target_sequent,
    EncodedMachine,
};
use commact::formula::{parse_formula, parse_sequent, Sequent};
use commact::lattice::{
    eval, parse_lattice, sequent_soundness, sequent_vars, FiniteActionLattice, SoundnessResult,
    Valuation,
};
use commact::minsky::{
    can_perform_k_steps, classify, parse_machine, run, Configuration, Machine, RunResult,
    RunStatus,
};
use commact::proofio::{parse_proof, render_proof};
use commact::search::{decide, Prover, SearchOutcome};

// exit codes: 0 positive, 1 negative, 2 inconclusive, 3 usage/parse error,
// 4 budget exceeded
const POSITIVE: u8 = 0;
const NEGATIVE: u8 = 1;
const INCONCLUSIVE: u8 = 2;
const USAGE: u8 = 3;
const BUDGET: u8 = 4;

#[derive(Parser)]
#[command(name = "commact", about = "Workbench for commutative action logic")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide derivability of a sequent by exhaustive proof search
    Prove {
        /// Sequent, inline or as `@file`
        sequent: String,
        /// Write the found proof to this file
        #[arg(long)]
        emit: Option<PathBuf>,
        /// Give up after this many seconds
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Check a proof file against a calculus
    Check {
        proof: PathBuf,
        #[arg(long)]
        calculus: CalculusArg,
    },
    /// Print the n-th approximation of a sequent
    Approx {
        sequent: String,
        #[arg(short)]
        n: usize,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Scan approximations for a refutation witness
    Refute {
        sequent: String,
        #[arg(long)]
        max_n: usize,
    },
    /// Eliminate cuts from a finite proof
    Cutelim {
        proof: PathBuf,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Counter machine execution
    #[command(subcommand)]
    Minsky(MinskyCommand),
    /// Print the formula encoding of a machine
    Encode {
        machine: PathBuf,
        /// Input value for the target sequent E^*, q_S, a^x |- D
        #[arg(long)]
        input: Option<u64>,
        #[command(flatten)]
        at: ConfigArgs,
        /// Number of steps for the k-step sequent
        #[arg(short)]
        k: Option<usize>,
    },
    /// Synthesize derivations from machine runs
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Finite lattice models
    #[command(subcommand)]
    Model(ModelCommand),
    /// Empirical verification sweeps
    #[command(subcommand)]
    Verify(VerifyCommand),
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum CalculusArg {
    OmegaFin,
    Commact,
    Circ,
}

impl From<CalculusArg> for CalculusId {
    fn from(a: CalculusArg) -> Self {
        match a {
            CalculusArg::OmegaFin => CalculusId::OmegaFin,
            CalculusArg::Commact => CalculusId::CommAct,
            CalculusArg::Circ => CalculusId::Circ,
        }
    }
}

#[derive(Args)]
struct ConfigArgs {
    /// Configuration as `state,a,b,c`
    #[arg(long)]
    config: Option<String>,
}

#[derive(Subcommand)]
enum MinskyCommand {
    /// Print the execution trace
    Run {
        machine: PathBuf,
        #[arg(long)]
        input: u64,
        #[arg(long, default_value_t = 1000)]
        max_steps: usize,
    },
    /// Detect halting or a repeated configuration
    Classify {
        machine: PathBuf,
        #[arg(long)]
        input: u64,
        #[arg(long, default_value_t = 1000)]
        max_steps: usize,
    },
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Derivation of the k-step sequent in the finite calculus
    Kstep {
        machine: PathBuf,
        #[command(flatten)]
        at: ConfigArgs,
        #[arg(short)]
        k: usize,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Derivation of the target sequent for a circular run
    Circular {
        machine: PathBuf,
        #[arg(long)]
        input: u64,
        /// Emit a backlinked witness instead of the inductive derivation
        #[arg(long)]
        witness: bool,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ModelCommand {
    /// Validate the action lattice axioms and *-continuity
    Check { lattice: PathBuf },
    /// Evaluate a formula under a valuation
    Eval {
        lattice: PathBuf,
        #[arg(long)]
        formula: String,
        /// Valuation as `p=0,q=1`
        #[arg(long, default_value = "")]
        valuation: String,
    },
    /// Evaluate a proof's conclusion under all (or sampled) valuations
    Soundness {
        lattice: PathBuf,
        #[arg(long)]
        proof: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Compare search on k-step sequents against direct machine execution
    Lemma {
        machine: PathBuf,
        #[arg(long, default_value_t = 3)]
        max_k: usize,
        #[arg(long, default_value_t = 2)]
        max_counter: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // help/version are not errors
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::from(POSITIVE)
                }
                _ => ExitCode::from(USAGE),
            };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            println!("RESULT: error");
            ExitCode::from(USAGE)
        }
    }
}

fn read_to_string(path: &PathBuf) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

/// Inline sequent text, or the contents of a file named with an `@` prefix.
fn sequent_arg(arg: &str) -> Result<Sequent, String> {
    let text = if let Some(path) = arg.strip_prefix('@') {
        read_to_string(&PathBuf::from(path))?
    } else {
        arg.to_string()
    };
    parse_sequent(text.trim()).map_err(|e| e.to_string())
}

fn load_machine(path: &PathBuf) -> Result<Machine, String> {
    parse_machine(&read_to_string(path)?).map_err(|e| e.to_string())
}

fn load_lattice(path: &PathBuf) -> Result<FiniteActionLattice, String> {
    parse_lattice(&read_to_string(path)?)
}

fn parse_config(em: &EncodedMachine, text: &str) -> Result<Configuration, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        return Err("expected `state,a,b,c`".to_string());
    }
    let state = em
        .machine
        .state_index(parts[0])
        .ok_or_else(|| format!("unknown state `{}`", parts[0]))?;
    let nums: Vec<u64> = parts[1..]
        .iter()
        .map(|p| p.parse::<u64>().map_err(|_| format!("bad counter `{p}`")))
        .collect::<Result<_, _>>()?;
    Ok(Configuration {
        state,
        a: nums[0],
        b: nums[1],
        c: nums[2],
    })
}

fn parse_valuation(text: &str) -> Result<Valuation, String> {
    let mut v = Valuation::new();
    for pair in text.split(',').filter(|p| !p.trim().is_empty()) {
        let (name, value) = pair
            .split_once('=')
            .ok_or_else(|| format!("expected `name=element`, got `{pair}`"))?;
        v.insert(
            name.trim().to_string(),
            value
                .trim()
                .parse()
                .map_err(|_| format!("bad element `{value}`"))?,
        );
    }
    Ok(v)
}

fn emit_file(path: &PathBuf, content: &str) -> Result<(), String> {
    fs::write(path, content).map_err(|e| format!("{}: {e}", path.display()))
}

fn result_line(token: &str, code: u8) -> Result<u8, String> {
    println!("RESULT: {token}");
    Ok(code)
}

fn dispatch(command: Command) -> Result<u8, String> {
    match command {
        Command::Prove {
            sequent,
            emit,
            budget,
        } => {
            let s = sequent_arg(&sequent)?;
            let outcome = match budget {
                None => decide(&s, emit.is_some()),
                Some(secs) => {
                    let (tx, rx) = mpsc::channel();
                    let s2 = s.clone();
                    let want_proof = emit.is_some();
                    thread::spawn(move || {
                        let _ = tx.send(decide(&s2, want_proof));
                    });
                    match rx.recv_timeout(Duration::from_secs(secs)) {
                        Ok(o) => o,
                        Err(_) => {
                            eprintln!("search exceeded the {secs}s budget");
                            return result_line("budget-exceeded", BUDGET);
                        }
                    }
                }
            };
            match outcome {
                SearchOutcome::Derivable { proof, stats } => {
                    eprintln!(
                        "derivable; {} nodes expanded, {} memo hits",
                        stats.nodes_expanded, stats.memo_hits
                    );
                    if let Some(path) = emit {
                        let proof = proof.expect("proof emission was requested");
                        emit_file(&path, &render_proof(CalculusId::OmegaFin, &proof))?;
                    }
                    result_line("derivable", POSITIVE)
                }
                SearchOutcome::NotDerivable { stats } => {
                    eprintln!("not derivable; {} nodes expanded", stats.nodes_expanded);
                    result_line("not-derivable", NEGATIVE)
                }
                SearchOutcome::Refused { reason } => {
                    eprintln!("{reason}");
                    result_line("refused", INCONCLUSIVE)
                }
            }
        }

        Command::Check { proof, calculus } => {
            let (file_cal, d) = parse_proof(&read_to_string(&proof)?)?;
            let cal: CalculusId = calculus.into();
            if file_cal != cal {
                eprintln!("note: proof file declares calculus {file_cal}, checking under {cal}");
            }
            let report = check(&d, cal);
            if report.valid {
                result_line("valid", POSITIVE)
            } else {
                let v = report.violation.expect("invalid reports carry a violation");
                eprintln!("violation at {:?}: {}", v.path, v.reason);
                result_line("invalid", NEGATIVE)
            }
        }

        Command::Approx { sequent, n, emit } => {
            let s = sequent_arg(&sequent)?;
            let t = approximate_sequent(&s, n);
            println!("{t}");
            if let Some(path) = emit {
                emit_file(&path, &format!("{t}\n"))?;
            }
            result_line("ok", POSITIVE)
        }

        Command::Refute { sequent, max_n } => {
            let s = sequent_arg(&sequent)?;
            match refute(&s, max_n) {
                ApproxResult::Refuted {
                    witness_n,
                    refuting_sequent,
                } => {
                    eprintln!("underivable approximation: {refuting_sequent}");
                    result_line(&format!("refuted n={witness_n}"), NEGATIVE)
                }
                ApproxResult::AllDerivableUpTo(n) => {
                    eprintln!("all approximations up to n={n} are derivable");
                    result_line("inconclusive", INCONCLUSIVE)
                }
            }
        }

        Command::Cutelim { proof, emit } => {
            let (_, d) = parse_proof(&read_to_string(&proof)?)?;
            match eliminate_cuts(&d) {
                Ok(out) => {
                    if let Some(path) = emit {
                        emit_file(&path, &render_proof(CalculusId::OmegaFin, &out))?;
                    } else {
                        print!("{}", render_proof(CalculusId::OmegaFin, &out));
                    }
                    result_line("ok", POSITIVE)
                }
                Err(report) => {
                    let v = report.violation.expect("invalid reports carry a violation");
                    eprintln!("input proof invalid at {:?}: {}", v.path, v.reason);
                    result_line("invalid", NEGATIVE)
                }
            }
        }

        Command::Minsky(MinskyCommand::Run {
            machine,
            input,
            max_steps,
        }) => {
            let m = load_machine(&machine)?;
            let (trace, status) = run(&m, input, max_steps);
            for c in &trace {
                println!("{} a={} b={} c={}", m.states[c.state], c.a, c.b, c.c);
            }
            match status {
                RunStatus::Halted => result_line("halted", POSITIVE),
                RunStatus::Exceeded => result_line("exceeded", INCONCLUSIVE),
            }
        }

        Command::Minsky(MinskyCommand::Classify {
            machine,
            input,
            max_steps,
        }) => {
            let m = load_machine(&machine)?;
            match classify(&m, input, max_steps) {
                RunResult::Halted { steps, .. } => {
                    result_line(&format!("halted steps={steps}"), POSITIVE)
                }
                RunResult::Circular { prefix, period, .. } => {
                    result_line(&format!("circular prefix={prefix} period={period}"), POSITIVE)
                }
                RunResult::Exceeded(_) => result_line("exceeded", INCONCLUSIVE),
            }
        }

        Command::Encode {
            machine,
            input,
            at,
            k,
        } => {
            let m = load_machine(&machine)?;
            let em = encode(&m)?;
            println!("E = {}", em.e);
            println!("D = {}", em.d);
            if let Some(x) = input {
                println!("{}", target_sequent(&em, x));
            }
            if let Some(text) = at.config {
                let c = parse_config(&em, &text)?;
                let k = k.ok_or("--config requires -k")?;
                println!("{}", k_step_sequent(&em, &c, k));
            }
            result_line("ok", POSITIVE)
        }

        Command::Synth(SynthCommand::Kstep {
            machine,
            at,
            k,
            emit,
        }) => {
            let m = load_machine(&machine)?;
            let em = encode(&m)?;
            let text = at.config.ok_or("synth kstep requires --config")?;
            let c = parse_config(&em, &text)?;
            match synth_k_step(&em, &c, k) {
                Ok(d) => {
                    let rendered = render_proof(CalculusId::OmegaFin, &d);
                    match emit {
                        Some(path) => emit_file(&path, &rendered)?,
                        None => print!("{rendered}"),
                    }
                    result_line("ok", POSITIVE)
                }
                Err(msg) => {
                    eprintln!("{msg}");
                    result_line("not-applicable", NEGATIVE)
                }
            }
        }

        Command::Synth(SynthCommand::Circular {
            machine,
            input,
            witness,
            emit,
        }) => {
            let m = load_machine(&machine)?;
            let em = encode(&m)?;
            let synthesized = if witness {
                synth_circular_witness(&em, input).map(|d| (CalculusId::Circ, d))
            } else {
                synth_circular(&em, input).map(|d| (CalculusId::CommAct, d))
            };
            match synthesized {
                Ok((cal, d)) => {
                    let rendered = render_proof(cal, &d);
                    match emit {
                        Some(path) => emit_file(&path, &rendered)?,
                        None => print!("{rendered}"),
                    }
                    result_line("ok", POSITIVE)
                }
                Err(msg) => {
                    eprintln!("{msg}");
                    result_line("not-applicable", NEGATIVE)
                }
            }
        }

        Command::Model(ModelCommand::Check { lattice }) => {
            let l = load_lattice(&lattice)?;
            let violations = l.validate();
            if violations.is_empty() {
                result_line("valid", POSITIVE)
            } else {
                for v in &violations {
                    eprintln!("{v}");
                }
                result_line("invalid", NEGATIVE)
            }
        }

        Command::Model(ModelCommand::Eval {
            lattice,
            formula,
            valuation,
        }) => {
            let l = load_lattice(&lattice)?;
            let f = parse_formula(&formula).map_err(|e| e.to_string())?;
            let v = parse_valuation(&valuation)?;
            let value = eval(&f, &l, &v)?;
            println!("{value}");
            result_line("ok", POSITIVE)
        }

        Command::Model(ModelCommand::Soundness {
            lattice,
            proof,
            seed,
        }) => {
            let l = load_lattice(&lattice)?;
            let violations = l.validate();
            if !violations.is_empty() {
                return Err(format!("lattice is invalid: {}", violations[0]));
            }
            let (_, d) = parse_proof(&read_to_string(&proof)?)?;
            let conclusion = d.conclusion().ok_or("proof has no root conclusion")?;
            match sequent_soundness(conclusion, &l, seed)? {
                SoundnessResult::Ok { exhaustive } => {
                    eprintln!(
                        "{} over {} variables",
                        if exhaustive { "exhaustive" } else { "sampled" },
                        sequent_vars(conclusion).len()
                    );
                    result_line("ok", POSITIVE)
                }
                SoundnessResult::Counterexample(v) => {
                    let mut pairs: Vec<String> =
                        v.iter().map(|(k, e)| format!("{k}={e}")).collect();
                    pairs.sort();
                    eprintln!("falsified under {}", pairs.join(","));
                    result_line("counterexample", NEGATIVE)
                }
            }
        }

        Command::Verify(VerifyCommand::Lemma {
            machine,
            max_k,
            max_counter,
        }) => {
            let m = load_machine(&machine)?;
            let em = encode(&m)?;
            let mut checked = 0usize;
            let mut disagreements = 0usize;
            let mut prover = Prover::new();
            for state in 0..m.states.len() {
                for a in 0..=max_counter {
                    for b in 0..=max_counter {
                        for c in 0..=max_counter {
                            let cfg = Configuration { state, a, b, c };
                            for k in 0..=max_k {
                                let oracle = can_perform_k_steps(&m, cfg, k);
                                let s = k_step_sequent(&em, &cfg, k);
                                let searched = prover
                                    .decide_bool(&s)
                                    .expect("k-step sequents have no negative star");
                                checked += 1;
                                if oracle != searched {
                                    disagreements += 1;
                                    eprintln!(
                                        "disagree: state={} a={a} b={b} c={c} k={k}: \
                                         machine={oracle} search={searched}",
                                        m.states[state]
                                    );
                                }
                            }
                        }
                    }
                }
            }
            eprintln!("{checked} cases checked");
            if disagreements == 0 {
                result_line("agree", POSITIVE)
            } else {
                result_line(&format!("disagree count={disagreements}"), NEGATIVE)
            }
        }
    }
}
