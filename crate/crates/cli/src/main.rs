//! `ssmverify`: compile, evaluate and check state space models.
//!
//! Every command prints one JSON report on stdout. Exit status: 0 for
//! satisfiable/true, 1 for unsatisfiable/false, 2 for usage or input
//! errors, 3 when a resource limit stopped the search.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use ssmverify_core::arithmetic::{ArithMode, FixedPointFormat};
use ssmverify_core::compilers::{
    compile_ilp, compile_ltl, compile_ltl_over, compile_minsky, ilp_min_bits, ilp_oracle, minsky_min_bits,
    minsky_oracle, run_encode, IlpInstance, MinskyMachine, LTL_MIN_BITS,
};
use ssmverify_core::formats::{format_word, load_model, parse_word, save_model, Metadata};
use ssmverify_core::ltl::{holds, parse as parse_formula, small_model_bound, Trace};
use ssmverify_core::solvers::{
    pump_down, sat_bounded, sat_fixed, BoundedOptions, FixedOptions, LengthBound, Limits, SatResult, Verdict,
};
use ssmverify_core::ssm::{classify_gates, state_count_bound, SsmModel};

#[derive(Parser)]
#[command(name = "ssmverify", version, about = "Compile, evaluate and check state space models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a formula, machine or integer program into a model file.
    #[command(subcommand)]
    Compile(CompileCmd),
    /// Evaluate a model on one word.
    Eval {
        model: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        word: String,
        #[arg(long, default_value = "exact")]
        arith: String,
    },
    /// Search for an accepted word.
    #[command(subcommand)]
    Sat(SatCmd),
    /// Shorten an accepted word by removing loops between equal states.
    Pump {
        model: PathBuf,
        #[arg(long)]
        word: String,
        #[arg(long)]
        arith: String,
    },
    /// Brute-force reference answers on the source languages.
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Gate classes and length bounds of a model.
    Classify {
        model: PathBuf,
        /// Bit width for the state-count bound; defaults to the model's
        /// recorded minimum width.
        #[arg(long)]
        bits: Option<u64>,
    },
}

#[derive(Subcommand)]
enum CompileCmd {
    /// LTL_f formula, given inline or as a file containing it.
    Ltl {
        input: String,
        #[arg(short, long)]
        output: PathBuf,
        /// Comma-separated propositions (default: the formula's atoms).
        #[arg(long, value_delimiter = ',')]
        props: Option<Vec<String>>,
    },
    /// Minsky machine file.
    Minsky {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Word length the recorded minimum width is computed for.
        #[arg(long, default_value_t = 16)]
        max_len: u64,
    },
    /// 0-1 integer program file.
    Ilp {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Subcommand)]
enum SatCmd {
    /// Enumerate words up to a length bound.
    Bounded {
        model: PathBuf,
        #[arg(long)]
        max_len: u64,
        /// Interpret the bound as `2^max_len`.
        #[arg(long)]
        binary: bool,
        #[arg(long, default_value = "exact")]
        arith: String,
        /// Skip states already reached at the same or smaller depth.
        #[arg(long)]
        memo: bool,
    },
    /// Reachability over the finite state space of a fixed-point format.
    Fixed {
        model: PathBuf,
        #[arg(long)]
        arith: String,
        #[arg(long)]
        length_cap: Option<u64>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Does the trace satisfy the formula at position 1?
    Ltl {
        formula: String,
        #[arg(long)]
        trace: String,
    },
    /// Exhaustive search for a 0-1 solution.
    Ilp { input: PathBuf },
    /// Simulate the machine until it reaches its final state.
    Minsky {
        input: PathBuf,
        #[arg(long)]
        max_steps: usize,
    },
}

/// Failure before a result exists; always exit status 2.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<(u8, Value), Failure>;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let started = Instant::now();
    let outcome = run(cli.command);
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    let command = argv.get(1..).unwrap_or_default().join(" ");
    match outcome {
        Ok((code, result)) => {
            emit(&json!({ "command": command, "result": result, "wall_ms": wall_ms }));
            ExitCode::from(code)
        }
        Err(Failure(msg)) => {
            emit(&json!({ "command": command, "error": msg }));
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn emit(report: &Value) {
    let text = serde_json::to_string_pretty(report).expect("report serialises");
    // A closed pipe on stdout is not an error worth reporting.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Compile(c) => compile(c),
        Command::Eval { model, word, arith } => eval(&model, &word, &arith),
        Command::Sat(SatCmd::Bounded { model, max_len, binary, arith, memo }) => {
            let (model, _) = load_model(&model)?;
            let mode: ArithMode = arith.parse()?;
            let bound = if binary { LengthBound::binary(max_len) } else { LengthBound::unary(max_len) };
            let options = BoundedOptions { memo, limits: Limits::default().with_env() };
            let result = sat_bounded(&model, &bound, mode, &options)?;
            Ok(sat_report(&model, result, mode, json!({ "max_len": max_len, "binary": binary, "limit": bound.limit().to_string() })))
        }
        Command::Sat(SatCmd::Fixed { model, arith, length_cap, threads }) => {
            let (model, _) = load_model(&model)?;
            let fmt: FixedPointFormat = arith.parse()?;
            let options = FixedOptions { length_cap, threads: threads.max(1), limits: Limits::default().with_env() };
            let result = sat_fixed(&model, fmt, &options)?;
            Ok(sat_report(&model, result, ArithMode::Fixed(fmt), json!({ "length_cap": length_cap })))
        }
        Command::Pump { model, word, arith } => {
            let (model, _) = load_model(&model)?;
            let fmt: FixedPointFormat = arith.parse()?;
            let word = parse_word(&word)?;
            let pumped = pump_down(&model, &word, fmt)?;
            Ok((0, json!({
                "arith": fmt.to_string(),
                "input_length": word.len(),
                "word": format_word(&pumped),
                "length": pumped.len(),
            })))
        }
        Command::Oracle(o) => oracle(o),
        Command::Classify { model, bits } => {
            let (model, meta) = load_model(&model)?;
            let bits = bits.or(meta.min_bits.map(u64::from)).unwrap_or(u64::from(LTL_MIN_BITS));
            let mut result = json!({
                "gate_classes": classify_gates(&model),
                "layers": model.num_layers(),
                "dimension": model.dim(),
                "alphabet_size": model.alphabet().len(),
                "bits": bits,
                "state_count_bound": format!("2^{}", 2 * model.num_layers() as u64 * model.dim() as u64 * bits),
            });
            if bits <= 8 {
                result["state_count_bound_value"] = json!(state_count_bound(&model, bits).to_string());
            }
            if let Some(f) = meta.formula.as_deref() {
                let f = parse_formula(f)?;
                result["small_model_bound"] = json!(small_model_bound(&f).to_string());
            }
            result["source"] = json!(meta.source);
            Ok((0, result))
        }
    }
}

fn compile(cmd: CompileCmd) -> Outcome {
    let (model, meta, output) = match cmd {
        CompileCmd::Ltl { input, output, props } => {
            let text = if Path::new(&input).is_file() { read(Path::new(&input))? } else { input };
            let formula = parse_formula(text.trim())?;
            let model = match &props {
                Some(props) => compile_ltl_over(&formula, props)?,
                None => compile_ltl(&formula)?,
            };
            let mut meta = Metadata::for_model(&model, "ltl");
            meta.min_bits = Some(LTL_MIN_BITS);
            meta.frac_bits = Some(3);
            meta.formula = Some(formula.to_string());
            (model, meta, output)
        }
        CompileCmd::Minsky { input, output, max_len } => {
            let machine = MinskyMachine::parse(&read(&input)?)?;
            let model = compile_minsky(&machine)?;
            let mut meta = Metadata::for_model(&model, "minsky");
            meta.min_bits = Some(minsky_min_bits(max_len));
            meta.frac_bits = Some(3);
            (model, meta, output)
        }
        CompileCmd::Ilp { input, output } => {
            let inst = IlpInstance::parse(&read(&input)?)?;
            let model = compile_ilp(&inst)?;
            let mut meta = Metadata::for_model(&model, "ilp");
            meta.min_bits = Some(ilp_min_bits(&inst));
            meta.frac_bits = Some(0);
            (model, meta, output)
        }
    };
    save_model(&output, &model, &meta)?;
    Ok((0, json!({
        "output": output.display().to_string(),
        "source": meta.source,
        "dimension": model.dim(),
        "layers": model.num_layers(),
        "alphabet_size": model.alphabet().len(),
        "gate_classes": meta.gate_classes,
        "min_bits": meta.min_bits,
        "frac_bits": meta.frac_bits,
    })))
}

fn eval(path: &Path, word: &str, arith: &str) -> Outcome {
    let (model, _) = load_model(path)?;
    let mode: ArithMode = arith.parse()?;
    let word = parse_word(word)?;
    let indices = model.word_indices(&word)?;
    let evaluator = model.evaluator(mode);
    let output = evaluator.run(&indices)?;
    let accepted = output.is_one();
    Ok((u8::from(!accepted), json!({
        "arith": mode.to_string(),
        "word": format_word(&word),
        "output": output.to_string(),
        "accepted": accepted,
        "quantised_constants": evaluator.quantised_constants(),
    })))
}

fn sat_report(model: &SsmModel, result: SatResult, mode: ArithMode, extra: Value) -> (u8, Value) {
    let code = match result.verdict {
        Verdict::Satisfiable => 0,
        Verdict::UnsatisfiableWithinBound | Verdict::Unsatisfiable => 1,
        Verdict::ResourceLimitExceeded => 3,
    };
    let mut report = json!({
        "arith": mode.to_string(),
        "verdict": result.verdict,
        "stats": result.stats,
        "alphabet_size": model.alphabet().len(),
        "search": extra,
    });
    if let Some(w) = &result.witness {
        report["witness"] = json!(format_word(w));
        report["witness_length"] = json!(w.len());
    }
    (code, report)
}

fn oracle(cmd: OracleCmd) -> Outcome {
    match cmd {
        OracleCmd::Ltl { formula, trace } => {
            let f = parse_formula(&formula)?;
            let t = Trace::parse(&trace)?;
            let value = if t.is_empty() { false } else { holds(&f, &t, 1)? };
            Ok((u8::from(!value), json!({ "formula": f.to_string(), "trace": t.to_string(), "holds": value })))
        }
        OracleCmd::Ilp { input } => {
            let inst = IlpInstance::parse(&read(&input)?)?;
            match ilp_oracle(&inst) {
                Some(v) => {
                    let word: Vec<String> = (1..=v.len()).filter(|&i| v[i - 1]).map(|i| i.to_string()).collect();
                    Ok((0, json!({
                        "solvable": true,
                        "solution": v.iter().map(|&b| u8::from(b)).collect::<Vec<_>>(),
                        "word": format_word(&word),
                    })))
                }
                None => Ok((1, json!({ "solvable": false }))),
            }
        }
        OracleCmd::Minsky { input, max_steps } => {
            let machine = MinskyMachine::parse(&read(&input)?)?;
            match minsky_oracle(&machine, max_steps) {
                Some(run) => Ok((0, json!({
                    "halts": true,
                    "steps": run.len(),
                    "word": format_word(&run_encode(&machine, &run)),
                    "counters": run.counters,
                }))),
                None => Ok((1, json!({ "halts": false, "max_steps": max_steps }))),
            }
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}
