//! Program orchestration: database construction, rule scheduling, fact IO.

pub mod compile;
pub mod exec;
pub mod nest;

use crate::mosp::MospSolution;
use crate::parser::{Program, RelId};
use crate::storage::{
    read_facts_tsv, write_facts_tsv, Relation, StorageError, SymbolTable,
};
use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub use compile::{
    collect_searches, compile, naive_indexes, optimize_indexes, CompiledJoin,
};
pub use exec::execute;
pub use nest::{rewrite_searches, translate, LoopNest, SearchedNest};

/// Index strategy for a run.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    /// Minimal index sets via chain covers; loops run as range searches.
    Auto,
    /// One index per distinct search; loops run as range searches.
    Naive,
    /// No index selection; every access is a linear filter. The oracle mode.
    Scan,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Auto, Mode::Naive, Mode::Scan];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Auto => "auto",
            Mode::Naive => "naive",
            Mode::Scan => "scan",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Mode, String> {
        match s {
            "auto" => Ok(Mode::Auto),
            "naive" => Ok(Mode::Naive),
            "scan" => Ok(Mode::Scan),
            other => Err(format!("unknown mode '{other}' (expected auto, naive, or scan)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A program compiled for one mode: per-relation index choices plus one
/// executable join per rule, and the order to run them in.
#[derive(Debug, Clone)]
pub struct CompiledProgram {
    pub mode: Mode,
    pub solutions: BTreeMap<RelId, MospSolution>,
    pub joins: Vec<CompiledJoin>,
    pub schedule: Vec<usize>,
}

/// Rule execution order: rules sorted by the dependency depth of their head
/// relation (stable, so declaration order breaks ties). Every rule defining a
/// relation runs before any rule reading it — the dependency graph is a DAG.
pub fn schedule_rules(prog: &Program) -> Vec<usize> {
    let n = prog.decls.len();
    let mut rank = vec![0usize; n];
    // Longest-path relaxation; terminates because validation rejected cycles.
    for _ in 0..n {
        let mut changed = false;
        for rule in &prog.rules {
            let head = rule.head.rel.0;
            for lit in &rule.body {
                let want = rank[lit.atom.rel.0] + 1;
                if rank[head] < want {
                    rank[head] = want;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut order: Vec<usize> = (0..prog.rules.len()).collect();
    order.sort_by_key(|&i| rank[prog.rules[i].head.rel.0]);
    order
}

pub fn compile_program(prog: &Program, mode: Mode) -> CompiledProgram {
    let solutions = match mode {
        Mode::Auto => optimize_indexes(prog),
        Mode::Naive => naive_indexes(prog),
        Mode::Scan => BTreeMap::new(),
    };
    let joins = prog
        .rules
        .iter()
        .map(|r| compile(&rewrite_searches(&translate(r)), &solutions, mode == Mode::Scan))
        .collect();
    CompiledProgram {
        mode,
        solutions,
        joins,
        schedule: schedule_rules(prog),
    }
}

/// The relations of a run plus the shared symbol table.
#[derive(Debug)]
pub struct Database {
    pub symbols: SymbolTable,
    relations: Vec<Relation>,
}

impl Database {
    /// Builds every declared relation with the containers its compiled mode
    /// maintains: the chosen orders, or just the identity order when the
    /// relation is never searched (or in scan mode).
    pub fn for_program(prog: &Program, compiled: &CompiledProgram) -> Database {
        let relations = prog
            .decls
            .iter()
            .enumerate()
            .map(|(i, d)| match compiled.solutions.get(&RelId(i)) {
                Some(sol) => Relation::with_orders(
                    d.name.clone(),
                    d.arity(),
                    sol.indexes.iter().cloned(),
                ),
                None => Relation::new(d.name.clone(), d.arity()),
            })
            .collect();
        Database {
            symbols: SymbolTable::new(),
            relations,
        }
    }

    pub fn rel(&self, id: RelId) -> &Relation {
        &self.relations[id.0]
    }

    pub fn rel_mut(&mut self, id: RelId) -> &mut Relation {
        &mut self.relations[id.0]
    }

    /// Detaches a relation (for exclusive writes while the rest stays
    /// readable). Must be restored with [`Database::put_rel`].
    pub(crate) fn take_rel(&mut self, id: RelId) -> Relation {
        std::mem::replace(&mut self.relations[id.0], Relation::new("<detached>", 1))
    }

    pub(crate) fn put_rel(&mut self, id: RelId, rel: Relation) {
        self.relations[id.0] = rel;
    }

    /// Total index inserts across all relations.
    pub fn index_inserts(&self) -> u64 {
        self.relations.iter().map(Relation::index_inserts).sum()
    }
}

/// Loads every `.input` file (paths resolved against `dir`). Returns the
/// number of fresh tuples.
pub fn load_inputs(prog: &Program, db: &mut Database, dir: &Path) -> Result<u64, EngineError> {
    let mut loaded = 0u64;
    for io in &prog.inputs {
        let path = dir.join(&io.path);
        let file = File::open(&path).map_err(|source| EngineError::Io {
            path: path.clone(),
            source,
        })?;
        let mut rel = db.take_rel(io.rel);
        let result = read_facts_tsv(BufReader::new(file), &mut db.symbols, &mut rel);
        db.put_rel(io.rel, rel);
        loaded += result?;
    }
    Ok(loaded)
}

/// Runs every rule in dependency order. Returns the number of derived tuples.
pub fn execute_all(
    compiled: &CompiledProgram,
    db: &mut Database,
    threads: usize,
) -> Result<u64, EngineError> {
    let mut derived = 0u64;
    for &rule_idx in &compiled.schedule {
        derived += execute(&compiled.joins[rule_idx], db, threads)?;
    }
    Ok(derived)
}

/// Writes every `.output` relation as TSV under `dir`, rows in primary order.
pub fn write_outputs(prog: &Program, db: &Database, dir: &Path) -> Result<(), EngineError> {
    for io in &prog.outputs {
        let path = dir.join(&io.path);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|source| EngineError::Io {
                path: path.clone(),
                source,
            })?;
        }
        let file = File::create(&path).map_err(|source| EngineError::Io {
            path: path.clone(),
            source,
        })?;
        let mut writer = BufWriter::new(file);
        write_facts_tsv(&mut writer, &db.symbols, db.rel(io.rel)).map_err(|source| {
            EngineError::Io {
                path: path.clone(),
                source,
            }
        })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;
    use crate::storage::Tuple;

    const MOTIVATING: &str = r#"
.decl A(x, y, z)
.decl B(x, y, z)
B(r, p, q) :- A(r, p, q), A(q, _, _), A(p, q, _), A(p, _, q), A(q, p, r).
"#;

    fn load(db: &mut Database, rel: RelId, rows: &[&[&str]]) {
        for row in rows {
            let t = Tuple::new(row.iter().map(|s| db.symbols.intern(s)).collect());
            let mut r = db.take_rel(rel);
            r.insert(t).unwrap();
            db.put_rel(rel, r);
        }
    }

    fn rows(db: &Database, rel: RelId) -> Vec<Vec<String>> {
        db.rel(rel)
            .iter()
            .map(|t| {
                t.values()
                    .iter()
                    .map(|&v| db.symbols.resolve(v).to_string())
                    .collect()
            })
            .collect()
    }

    fn run_motivating(mode: Mode, facts: &[&[&str]]) -> (Database, u64) {
        let prog = parse_program(MOTIVATING).unwrap();
        let compiled = compile_program(&prog, mode);
        let mut db = Database::for_program(&prog, &compiled);
        load(&mut db, RelId(0), facts);
        let derived = execute_all(&compiled, &mut db, 1).unwrap();
        (db, derived)
    }

    #[test]
    fn singleton_fact_joins_with_itself() {
        // A = {⟨1,1,1⟩} satisfies every body literal, so B = {⟨1,1,1⟩}.
        for mode in Mode::ALL {
            let (db, derived) = run_motivating(mode, &[&["1", "1", "1"]]);
            assert_eq!(derived, 1, "{mode}");
            assert_eq!(rows(&db, RelId(1)), vec![vec!["1", "1", "1"]], "{mode}");
        }
    }

    #[test]
    fn insert_counters_four_vs_two() {
        // 10 fresh tuples through 4 naive indexes vs 2 auto indexes.
        let facts: Vec<Vec<String>> = (0..10)
            .map(|i| vec![format!("{i}"), format!("{}", i + 1), format!("{}", i + 2)])
            .collect();
        let fact_refs: Vec<Vec<&str>> = facts
            .iter()
            .map(|r| r.iter().map(String::as_str).collect())
            .collect();
        let borrowed: Vec<&[&str]> = fact_refs.iter().map(Vec::as_slice).collect();

        let (auto_db, _) = run_motivating(Mode::Auto, &borrowed);
        let (naive_db, _) = run_motivating(Mode::Naive, &borrowed);
        assert_eq!(auto_db.rel(RelId(0)).index_count(), 2);
        assert_eq!(naive_db.rel(RelId(0)).index_count(), 4);
        assert_eq!(auto_db.rel(RelId(0)).index_inserts(), 20);
        assert_eq!(naive_db.rel(RelId(0)).index_inserts(), 40);
    }

    #[test]
    fn modes_agree_on_motivating_outputs() {
        let facts: &[&[&str]] = &[
            &["1", "2", "3"],
            &["3", "1", "2"],
            &["2", "3", "1"],
            &["1", "1", "1"],
            &["2", "1", "3"],
            &["3", "2", "1"],
        ];
        let (scan_db, scan_derived) = run_motivating(Mode::Scan, facts);
        for mode in [Mode::Auto, Mode::Naive] {
            let (db, derived) = run_motivating(mode, facts);
            assert_eq!(derived, scan_derived, "{mode}");
            assert_eq!(rows(&db, RelId(1)), rows(&scan_db, RelId(1)), "{mode}");
        }
    }

    #[test]
    fn negation_checks_emptiness() {
        let prog = parse_program(
            r#"
.decl E(a, b)
.decl V(a)
.decl Sink(a)
Sink(v) :- V(v), !E(v, _).
"#,
        )
        .unwrap();
        for mode in Mode::ALL {
            let compiled = compile_program(&prog, mode);
            let mut db = Database::for_program(&prog, &compiled);
            load(&mut db, RelId(0), &[&["a", "b"], &["b", "c"]]);
            load(&mut db, RelId(1), &[&["a"], &["b"], &["c"]]);
            execute_all(&compiled, &mut db, 1).unwrap();
            assert_eq!(rows(&db, RelId(2)), vec![vec!["c"]], "{mode}");
        }
    }

    #[test]
    fn rules_run_in_dependency_order() {
        // The rule for Mid is declared after the rule that reads it.
        let prog = parse_program(
            r#"
.decl E(a, b)
.decl Mid(a)
.decl Out(a)
Out(v) :- Mid(v).
Mid(v) :- E(v, _).
"#,
        )
        .unwrap();
        assert_eq!(schedule_rules(&prog), vec![1, 0]);
        let compiled = compile_program(&prog, Mode::Auto);
        let mut db = Database::for_program(&prog, &compiled);
        load(&mut db, RelId(0), &[&["x", "y"]]);
        let derived = execute_all(&compiled, &mut db, 1).unwrap();
        assert_eq!(derived, 2);
        assert_eq!(rows(&db, RelId(2)), vec![vec!["x"]]);
    }

    #[test]
    fn constants_in_head_and_body() {
        let prog = parse_program(
            r#"
.decl E(a, b)
.decl Out(a, b)
Out("tagged", x) :- E(x, 7).
"#,
        )
        .unwrap();
        for mode in Mode::ALL {
            let compiled = compile_program(&prog, mode);
            let mut db = Database::for_program(&prog, &compiled);
            load(&mut db, RelId(0), &[&["u", "7"], &["v", "8"]]);
            execute_all(&compiled, &mut db, 1).unwrap();
            assert_eq!(rows(&db, RelId(1)), vec![vec!["tagged", "u"]], "{mode}");
        }
    }

    #[test]
    fn parallel_matches_serial() {
        let facts: Vec<Vec<String>> = (0..30)
            .map(|i| vec![format!("{}", i % 5), format!("{}", i % 7), format!("{}", i % 3)])
            .collect();
        let fact_refs: Vec<Vec<&str>> = facts
            .iter()
            .map(|r| r.iter().map(String::as_str).collect())
            .collect();
        let borrowed: Vec<&[&str]> = fact_refs.iter().map(Vec::as_slice).collect();

        let prog = parse_program(MOTIVATING).unwrap();
        let compiled = compile_program(&prog, Mode::Auto);

        let mut serial = Database::for_program(&prog, &compiled);
        load(&mut serial, RelId(0), &borrowed);
        let n1 = execute_all(&compiled, &mut serial, 1).unwrap();

        let mut parallel = Database::for_program(&prog, &compiled);
        load(&mut parallel, RelId(0), &borrowed);
        let n4 = execute_all(&compiled, &mut parallel, 4).unwrap();

        assert_eq!(n1, n4);
        assert_eq!(rows(&serial, RelId(1)), rows(&parallel, RelId(1)));
        assert_eq!(
            serial.rel(RelId(1)).index_inserts(),
            parallel.rel(RelId(1)).index_inserts()
        );
    }
}
