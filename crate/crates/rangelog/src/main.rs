use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use rangelog::engine::{
    compile_program, execute_all, load_inputs, optimize_indexes, write_outputs, Database, Mode,
};
use rangelog::parser::{parse_program, ParseError, Program};
use rangelog::report::{
    run_report, select_report, BenchReport, ModeBench, Phase, SuiteReport,
};
use rangelog::verify;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(name = "rangelog", version, about = "Datalog engine with minimal index selection")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Show which indexes the optimizer selects for a program
    Select {
        program: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Evaluate a program and write its output relations
    Run {
        program: PathBuf,
        /// Index strategy: auto (minimal), naive (one per search), scan (none)
        #[arg(long, default_value = "auto")]
        mode: Mode,
        /// Directory holding input fact files (default: the program's directory)
        #[arg(long)]
        facts_dir: Option<PathBuf>,
        /// Directory for output files (default: the facts directory)
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Worker threads for the outermost join loop
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
        threads: u16,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Replay randomized oracle suites; nonzero exit on any failure
    Verify {
        #[arg(long, default_value_t = 0xD1CE)]
        seed: u64,
        /// Trials per suite (the end-to-end suite runs a tenth of this)
        #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Evaluate one program under every index strategy and compare
    Bench {
        program: PathBuf,
        #[arg(long)]
        facts_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
        threads: u16,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
}

enum Failure {
    Parse(ParseError),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Parse(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Parse(e) => format!("parse error: {e}"),
            Failure::Runtime(msg) => msg.clone(),
        }
    }
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.cmd {
        Cmd::Select { program, format } => cmd_select(&program, format),
        Cmd::Run {
            program,
            mode,
            facts_dir,
            out_dir,
            threads,
            format,
        } => cmd_run(&program, mode, facts_dir, out_dir, threads as usize, format),
        Cmd::Verify {
            seed,
            trials,
            format,
        } => cmd_verify(seed, trials, format),
        Cmd::Bench {
            program,
            facts_dir,
            threads,
            format,
        } => cmd_bench(&program, facts_dir, threads as usize, format),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

fn load_program(path: &Path) -> Result<Program, Failure> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| Failure::Runtime(format!("cannot read {}: {e}", path.display())))?;
    parse_program(&src).map_err(Failure::Parse)
}

fn emit<T: Serialize + std::fmt::Display>(value: &T, format: Format) {
    match format {
        Format::Text => print!("{value}"),
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(value).expect("reports serialize")
        ),
    }
}

fn cmd_select(path: &Path, format: Format) -> Result<i32, Failure> {
    let prog = load_program(path)?;
    let report = select_report(&prog, &optimize_indexes(&prog));
    emit(&report, format);
    Ok(0)
}

fn cmd_run(
    path: &Path,
    mode: Mode,
    facts_dir: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    threads: usize,
    format: Format,
) -> Result<i32, Failure> {
    let mut phases = Vec::new();
    let mut timed = |name: &str, start: Instant| {
        phases.push(Phase {
            name: name.into(),
            nanos: start.elapsed().as_nanos() as u64,
        });
    };

    let t = Instant::now();
    let prog = load_program(path)?;
    timed("parse", t);

    let t = Instant::now();
    let compiled = compile_program(&prog, mode);
    let mut db = Database::for_program(&prog, &compiled);
    timed("compile", t);

    let facts_dir = facts_dir.unwrap_or_else(|| parent_dir(path));
    let out_dir = out_dir.unwrap_or_else(|| facts_dir.clone());

    let t = Instant::now();
    let loaded = load_inputs(&prog, &mut db, &facts_dir)
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    timed("load", t);

    let t = Instant::now();
    let derived =
        execute_all(&compiled, &mut db, threads).map_err(|e| Failure::Runtime(e.to_string()))?;
    timed("execute", t);

    let t = Instant::now();
    write_outputs(&prog, &db, &out_dir).map_err(|e| Failure::Runtime(e.to_string()))?;
    timed("write", t);

    let report = run_report(&prog, &compiled, &db, loaded, derived, phases);
    emit(&report, format);
    Ok(0)
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if p.as_os_str().is_empty() => PathBuf::from("."),
        Some(p) => p.to_path_buf(),
        None => PathBuf::from("."),
    }
}

fn cmd_verify(seed: u64, trials: u64, format: Format) -> Result<i32, Failure> {
    let e2e = (trials / 10).clamp(3, 100);
    let suites = vec![
        verify::dilworth_suite(seed, trials),
        verify::mosp_suite(seed.wrapping_add(1), trials),
        verify::range_suite(seed.wrapping_add(2), trials, 2000),
        verify::end_to_end_suite(seed.wrapping_add(3), e2e),
    ];
    match format {
        Format::Text => {
            for s in &suites {
                println!("{s}");
            }
        }
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&suites).expect("reports serialize")
        ),
    }
    Ok(if suites.iter().all(SuiteReport::ok) { 0 } else { 4 })
}

fn cmd_bench(
    path: &Path,
    facts_dir: Option<PathBuf>,
    threads: usize,
    format: Format,
) -> Result<i32, Failure> {
    let prog = load_program(path)?;
    let facts_dir = facts_dir.unwrap_or_else(|| parent_dir(path));

    let mut modes = Vec::new();
    for mode in Mode::ALL {
        let compiled = compile_program(&prog, mode);
        // Warm-up pass so the measured one runs on a hot file cache.
        let mut scratch = Database::for_program(&prog, &compiled);
        load_inputs(&prog, &mut scratch, &facts_dir)
            .map_err(|e| Failure::Runtime(e.to_string()))?;
        execute_all(&compiled, &mut scratch, threads)
            .map_err(|e| Failure::Runtime(e.to_string()))?;
        drop(scratch);

        let mut db = Database::for_program(&prog, &compiled);
        let t = Instant::now();
        load_inputs(&prog, &mut db, &facts_dir).map_err(|e| Failure::Runtime(e.to_string()))?;
        let load_nanos = t.elapsed().as_nanos() as u64;
        let t = Instant::now();
        let derived =
            execute_all(&compiled, &mut db, threads).map_err(|e| Failure::Runtime(e.to_string()))?;
        let execute_nanos = t.elapsed().as_nanos() as u64;
        modes.push(ModeBench {
            mode: mode.to_string(),
            load_nanos,
            execute_nanos,
            tuples_derived: derived,
            index_inserts: db.index_inserts(),
        });
    }

    let auto = modes[0].index_inserts;
    let naive = modes[1].index_inserts;
    let report = BenchReport {
        modes,
        insert_ratio: if auto == 0 {
            1.0
        } else {
            naive as f64 / auto as f64
        },
    };
    emit(&report, format);
    Ok(0)
}
