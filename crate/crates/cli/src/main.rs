//! `slice`: check, run, emit, bench and count paths of Slice protocols.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use slice_core::ast::{allocation_pieces, fmt_rational, Protocol};
use slice_core::interp::evaluate;
use slice_core::logic::dag_size;
use slice_core::parser::{parse, parse_protocol};
use slice_core::smt::{self, AxiomMode, Model, SolverConfig, SolverKind, Verdict};
use slice_core::testkit::envy_matrix;
use slice_core::translate::{count_paths, goal, IteMode, Property};
use slice_core::typecheck::check_protocol;
use slice_core::valuation::{parse_profile, MarkPolicy};

const EXIT_SAT: u8 = 1;
const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

#[derive(Parser)]
#[command(name = "slice", version, about = "Verify and run cake-cutting protocols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PropertyArg {
    Envy,
    Progress,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Z3,
    Cvc5,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum IteArg {
    Core,
    Impl,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxiomArg {
    Quantified,
    Ground,
}

#[derive(clap::Args, Clone)]
struct EncodingArgs {
    #[arg(long, value_enum, default_value = "envy")]
    property: PropertyArg,
    #[arg(long, value_enum, default_value = "core")]
    ite: IteArg,
    #[arg(long, value_enum, default_value = "ground")]
    axioms: AxiomArg,
    /// Allow valuations with zero-density stretches (weak instead of strict monotonicity).
    #[arg(long)]
    no_endpoint_axioms: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Verify a property with one or both solvers.
    Check {
        file: PathBuf,
        #[command(flatten)]
        enc: EncodingArgs,
        #[arg(long, value_enum, default_value = "z3")]
        solver: SolverArg,
        /// Seconds per solver call.
        #[arg(long, default_value_t = 300)]
        timeout: u64,
        /// Write the reports as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Execute a protocol on a valuation profile.
    Run {
        file: PathBuf,
        valuations: PathBuf,
        /// Mark policy per agent (`leftmost`, `rightmost`, `offset:θ`); one value applies to all.
        #[arg(long, value_delimiter = ',', default_value = "leftmost")]
        policy: Vec<String>,
    },
    /// Print the SMT-LIB script `check` would send.
    Emit {
        file: PathBuf,
        #[command(flatten)]
        enc: EncodingArgs,
    },
    /// Verify every protocol in a directory and print a timing table.
    Bench {
        dir: PathBuf,
        #[arg(long, default_value_t = 5)]
        runs: u32,
        #[arg(long, value_enum, default_value = "both")]
        solver: SolverArg,
        #[arg(long, default_value_t = 300)]
        timeout: u64,
        #[command(flatten)]
        enc: EncodingArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count execution paths.
    Paths { file: PathBuf },
}

#[derive(Serialize, Clone)]
struct Report {
    protocol: String,
    property: String,
    solver: String,
    verdict: String,
    wall_time_s: f64,
    script_path: Option<String>,
    paths: String,
    constraint_size: usize,
    script_lines: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<String>,
}

struct Failure {
    code: u8,
    message: String,
}

fn input_error(path: &Path, msg: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: format!("{}: {msg}", path.display()),
    }
}

fn load(path: &Path) -> Result<(String, Protocol), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| input_error(path, e))?;
    let protocol = parse_protocol(&text).map_err(|e| input_error(path, e))?;
    check_protocol(&protocol).map_err(|e| input_error(path, e))?;
    Ok((text, protocol))
}

fn config(enc: &EncodingArgs, solver: SolverKind, timeout: u64) -> SolverConfig {
    SolverConfig {
        solver,
        timeout: Duration::from_secs(timeout.max(1)),
        axioms: match enc.axioms {
            AxiomArg::Quantified => AxiomMode::Quantified,
            AxiomArg::Ground => AxiomMode::Ground,
        },
        endpoint_axioms: !enc.no_endpoint_axioms,
        ..SolverConfig::default()
    }
}

fn property(enc: &EncodingArgs) -> Property {
    match enc.property {
        PropertyArg::Envy => Property::Envy,
        PropertyArg::Progress => Property::Progress,
    }
}

fn ite(enc: &EncodingArgs) -> IteMode {
    match enc.ite {
        IteArg::Core => IteMode::Core,
        IteArg::Impl => IteMode::Impl,
    }
}

fn solvers(arg: SolverArg) -> Vec<SolverKind> {
    match arg {
        SolverArg::Z3 => vec![SolverKind::Z3],
        SolverArg::Cvc5 => vec![SolverKind::Cvc5],
        SolverArg::Both => vec![SolverKind::Z3, SolverKind::Cvc5],
    }
}

struct Encoded {
    script: String,
    size: usize,
    paths: u128,
    compile: Duration,
}

fn encode(path: &Path, protocol: &Protocol, enc: &EncodingArgs, cfg: &SolverConfig) -> Result<Encoded, Failure> {
    let start = Instant::now();
    let g = goal(protocol, property(enc), ite(enc)).map_err(|e| input_error(path, e))?;
    let script = smt::script(&g, protocol.agent_count, cfg).map_err(|e| input_error(path, e))?;
    Ok(Encoded {
        size: dag_size(&g),
        paths: count_paths(&protocol.expr),
        script,
        compile: start.elapsed(),
    })
}

fn protocol_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Exit code for a set of verdicts on one goal: any counterexample wins,
/// then any proof, otherwise inconclusive.
fn exit_code(verdicts: &[&Verdict]) -> u8 {
    if verdicts.iter().any(|v| v.is_sat()) {
        EXIT_SAT
    } else if verdicts.iter().any(|v| v.is_unsat()) {
        0
    } else {
        EXIT_INCONCLUSIVE
    }
}

fn write_reports(out: Option<&PathBuf>, reports: &[Report]) -> Result<(), Failure> {
    if let Some(path) = out {
        let json = serde_json::to_string_pretty(reports).expect("reports serialize");
        std::fs::write(path, json).map_err(|e| Failure {
            code: EXIT_INCONCLUSIVE,
            message: format!("{}: {e}", path.display()),
        })?;
    }
    Ok(())
}

fn save_script(name: &str, prop: Property, script: &str) -> Option<String> {
    let dir = std::env::temp_dir().join("slice-scripts");
    std::fs::create_dir_all(&dir).ok()?;
    let path = dir.join(format!("{name}.{}.smt2", prop.name()));
    std::fs::write(&path, script).ok()?;
    Some(path.display().to_string())
}

fn describe(v: &Verdict, prop: Property) -> String {
    match (v, prop) {
        (Verdict::Unsat, Property::Envy) => "verified: envy-free on every run".into(),
        (Verdict::Unsat, Property::Progress) => "verified: never gets stuck".into(),
        (Verdict::Sat(_), Property::Envy) => "counterexample: some run ends in envy".into(),
        (Verdict::Sat(_), Property::Progress) => "counterexample: some run gets stuck".into(),
        (other, _) => format!("inconclusive: {other}"),
    }
}

/// Names the emitter gives to shared subterms rather than to variables.
fn is_definition(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some('t' | 'f')) && chars.next().is_some_and(|c| c.is_ascii_digit())
}

fn check(
    file: &Path,
    enc: &EncodingArgs,
    solver: SolverArg,
    timeout: u64,
    out: Option<&PathBuf>,
) -> Result<u8, Failure> {
    let (_, protocol) = load(file)?;
    let name = protocol_name(file);
    let prop = property(enc);
    let mut reports = Vec::new();
    let mut verdicts = Vec::new();
    for kind in solvers(solver) {
        let cfg = config(enc, kind, timeout);
        let encoded = encode(file, &protocol, enc, &cfg)?;
        let start = Instant::now();
        let verdict = smt::run(&encoded.script, &cfg);
        let elapsed = start.elapsed();
        println!(
            "{name} [{}] {kind}: {} ({:.3}s)",
            prop.name(),
            describe(&verdict, prop),
            elapsed.as_secs_f64()
        );
        if let Verdict::Sat(model) = &verdict {
            let m = Model::parse(model);
            for (k, v) in m.values.iter().filter(|(k, _)| !is_definition(k)) {
                println!("  {k} = {v}");
            }
        }
        reports.push(Report {
            protocol: name.clone(),
            property: prop.name().into(),
            solver: kind.to_string(),
            verdict: verdict.to_string(),
            wall_time_s: elapsed.as_secs_f64(),
            script_path: save_script(&name, prop, &encoded.script),
            paths: encoded.paths.to_string(),
            constraint_size: encoded.size,
            script_lines: encoded.script.lines().count(),
            model: match &verdict {
                Verdict::Sat(m) => Some(m.clone()),
                _ => None,
            },
        });
        verdicts.push(verdict);
    }
    write_reports(out, &reports)?;
    Ok(exit_code(&verdicts.iter().collect::<Vec<_>>()))
}

fn run_cmd(file: &Path, valuations: &Path, policy: &[String]) -> Result<u8, Failure> {
    let (_, protocol) = load(file)?;
    let text = std::fs::read_to_string(valuations).map_err(|e| input_error(valuations, e))?;
    let profile = parse_profile(&text).map_err(|e| input_error(valuations, e))?;
    let mut policies = Vec::new();
    for p in policy {
        policies.push(MarkPolicy::parse(p).ok_or_else(|| input_error(file, format!("unknown mark policy `{p}`")))?);
    }
    if policies.len() == 1 {
        policies = vec![policies[0].clone(); profile.len()];
    }
    let (value, trace) = evaluate(&protocol, &profile, &policies).map_err(|e| Failure {
        code: EXIT_RUNTIME,
        message: format!("{}: {e}", file.display()),
    })?;
    let n = protocol.agent_count;
    let Some(shares) = allocation_pieces(&value, n) else {
        println!("result: {value}");
        return Ok(0);
    };
    for (a, pieces) in shares.iter().enumerate() {
        let list: Vec<String> = pieces.iter().map(|p| p.to_string()).collect();
        println!("agent{}: {}", a + 1, list.join(" "));
    }
    if !trace.marks.is_empty() {
        let marks: Vec<String> = trace.values().iter().map(fmt_rational).collect();
        println!("marks: {}", marks.join(" "));
    }
    let matrix = envy_matrix(&shares, &profile);
    println!("values (row: agent, column: share):");
    for line in matrix.to_string().lines() {
        println!("  {line}");
    }
    let envious: Vec<String> = matrix.envious().iter().map(|a| format!("agent{}", a + 1)).collect();
    if envious.is_empty() {
        println!("envy-free: yes");
    } else {
        println!("envy-free: no ({} envious)", envious.join(", "));
    }
    Ok(0)
}

fn emit_cmd(file: &Path, enc: &EncodingArgs) -> Result<u8, Failure> {
    let (_, protocol) = load(file)?;
    let cfg = config(enc, SolverKind::Z3, 300);
    let encoded = encode(file, &protocol, enc, &cfg)?;
    print!("{}", encoded.script);
    Ok(0)
}

fn program_lines(text: &str) -> usize {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with("//"))
        .count()
}

struct Row {
    name: String,
    lines: usize,
    size: usize,
    script_lines: usize,
    compile: Duration,
    cells: Vec<(SolverKind, Option<Verdict>, Duration)>,
}

fn bench_one(path: &Path, runs: u32, kinds: &[SolverKind], timeout: u64, enc: &EncodingArgs) -> Result<Row, Failure> {
    let (text, protocol) = load(path)?;
    let mut compile = Duration::ZERO;
    let mut encoded = None;
    for _ in 0..runs.max(1) {
        let e = encode(path, &protocol, enc, &config(enc, SolverKind::Z3, timeout))?;
        compile += e.compile;
        encoded = Some(e);
    }
    let encoded = encoded.expect("at least one run");
    let cell = |kind: SolverKind| {
        if smt::find_solver(kind).is_none() {
            return (kind, None, Duration::ZERO);
        }
        let cfg = config(enc, kind, timeout);
        let mut total = Duration::ZERO;
        let mut last = Verdict::Unknown(String::new());
        for _ in 0..runs.max(1) {
            let start = Instant::now();
            last = smt::run(&encoded.script, &cfg);
            total += start.elapsed();
            if !last.is_unsat() {
                break;
            }
        }
        (kind, Some(last), total / runs.max(1))
    };
    #[cfg(feature = "parallel")]
    let cells = {
        use rayon::prelude::*;
        kinds.par_iter().map(|&k| cell(k)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let cells = kinds.iter().map(|&k| cell(k)).collect();
    Ok(Row {
        name: protocol_name(path),
        lines: program_lines(&text),
        size: encoded.size,
        script_lines: encoded.script.lines().count(),
        compile: compile / runs.max(1),
        cells,
    })
}

fn bench(
    dir: &Path,
    runs: u32,
    solver: SolverArg,
    timeout: u64,
    enc: &EncodingArgs,
    out: Option<&PathBuf>,
) -> Result<u8, Failure> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| input_error(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "slice"))
        .collect();
    files.sort();
    let kinds = solvers(solver);
    let mut header = format!(
        "{:<28} {:>6} {:>10} {:>8} {:>10}",
        "protocol", "lines", "size", "script", "compile"
    );
    for k in &kinds {
        header.push_str(&format!(" {:>22}", k.to_string()));
    }
    println!("{header}");
    let mut reports = Vec::new();
    for f in &files {
        let row = bench_one(f, runs, &kinds, timeout, enc)?;
        let mut line = format!(
            "{:<28} {:>6} {:>10} {:>8} {:>9.3}s",
            row.name,
            row.lines,
            row.size,
            row.script_lines,
            row.compile.as_secs_f64()
        );
        for (kind, verdict, time) in &row.cells {
            let cell = match verdict {
                None => "unavailable".to_string(),
                Some(v) if v.is_unsat() => format!("verified {:.3}s", time.as_secs_f64()),
                Some(v) => format!("{} {:.3}s", v.label(), time.as_secs_f64()),
            };
            line.push_str(&format!(" {cell:>22}"));
            reports.push(Report {
                protocol: row.name.clone(),
                property: property(enc).name().into(),
                solver: kind.to_string(),
                verdict: verdict.as_ref().map_or("unavailable".into(), |v| v.to_string()),
                wall_time_s: time.as_secs_f64(),
                script_path: None,
                paths: "-".into(),
                constraint_size: row.size,
                script_lines: row.script_lines,
                model: None,
            });
        }
        println!("{line}");
    }
    write_reports(out, &reports)?;
    Ok(0)
}

fn paths(file: &Path) -> Result<u8, Failure> {
    let text = std::fs::read_to_string(file).map_err(|e| input_error(file, e))?;
    parse(&text).map_err(|e| input_error(file, e))?;
    let protocol = parse_protocol(&text).map_err(|e| input_error(file, e))?;
    println!("{}", count_paths(&protocol.expr));
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check {
            file,
            enc,
            solver,
            timeout,
            out,
        } => check(file, enc, *solver, *timeout, out.as_ref()),
        Command::Run {
            file,
            valuations,
            policy,
        } => run_cmd(file, valuations, policy),
        Command::Emit { file, enc } => emit_cmd(file, enc),
        Command::Bench {
            dir,
            runs,
            solver,
            timeout,
            enc,
            out,
        } => bench(dir, *runs, *solver, *timeout, enc, out.as_ref()),
        Command::Paths { file } => paths(file),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
