//! Human- and machine-readable reports for the CLI: index selections, run
//! statistics, bench comparisons, verification summaries.

use crate::engine::{collect_searches, CompiledProgram, Database, Mode};
use crate::mosp::MospSolution;
use crate::parser::{Program, RelId};
use crate::search::{Chain, LexOrder, Search};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};

pub fn render_search(s: Search, names: &[String]) -> String {
    let inner = s
        .iter_ids()
        .map(|id| names[id as usize].as_str())
        .collect::<Vec<_>>()
        .join(",");
    format!("{{{inner}}}")
}

pub fn render_order(ell: &LexOrder, names: &[String]) -> String {
    ell.iter()
        .map(|id| names[id as usize].as_str())
        .collect::<Vec<_>>()
        .join(" ≺ ")
}

pub fn render_chain(chain: &Chain, names: &[String]) -> String {
    chain
        .iter()
        .map(|s| render_search(s, names))
        .collect::<Vec<_>>()
        .join(" ⊂ ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignEntry {
    pub search: String,
    pub index: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationSelection {
    pub relation: String,
    pub searches: Vec<String>,
    pub chains: Vec<String>,
    /// Orders the engine will maintain; the identity order when unsearched.
    pub indexes: Vec<String>,
    pub assignment: Vec<AssignEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectReport {
    pub relations: Vec<RelationSelection>,
}

pub fn select_report(
    prog: &Program,
    solutions: &BTreeMap<RelId, MospSolution>,
) -> SelectReport {
    let relations = prog
        .decls
        .iter()
        .enumerate()
        .map(|(i, decl)| {
            let names = &decl.attrs;
            match solutions.get(&RelId(i)) {
                Some(sol) => RelationSelection {
                    relation: decl.name.clone(),
                    searches: sol.searches.iter().map(|s| render_search(s, names)).collect(),
                    chains: sol.cover.iter().map(|c| render_chain(c, names)).collect(),
                    indexes: sol.indexes.iter().map(|o| render_order(o, names)).collect(),
                    assignment: sol
                        .assignment
                        .iter()
                        .map(|(&s, &pos)| AssignEntry {
                            search: render_search(s, names),
                            index: render_order(sol.indexes.get(pos), names),
                        })
                        .collect(),
                },
                None => RelationSelection {
                    relation: decl.name.clone(),
                    searches: Vec::new(),
                    chains: Vec::new(),
                    indexes: vec![render_order(
                        &LexOrder::identity(decl.arity() as u32),
                        names,
                    )],
                    assignment: Vec::new(),
                },
            }
        })
        .collect();
    SelectReport { relations }
}

impl fmt::Display for SelectReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rel in &self.relations {
            writeln!(f, "{}:", rel.relation)?;
            if rel.searches.is_empty() {
                writeln!(f, "  searches: (none)")?;
                writeln!(f, "  indexes:  {} (primary only)", rel.indexes.join(";  "))?;
                continue;
            }
            writeln!(f, "  searches: {}", rel.searches.join(", "))?;
            writeln!(f, "  chains:   {}", rel.chains.join(";  "))?;
            writeln!(f, "  indexes:  {}", rel.indexes.join(";  "))?;
            writeln!(
                f,
                "  counts:   {} searches, {} chains, {} indexes",
                rel.searches.len(),
                rel.chains.len(),
                rel.indexes.len()
            )?;
            for entry in &rel.assignment {
                writeln!(f, "    {} → {}", entry.search, entry.index)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationStats {
    pub relation: String,
    pub tuples: u64,
    pub searches: Vec<String>,
    /// Rendered chain cover behind the selection; empty in scan mode.
    pub chains: Vec<String>,
    pub index_count: usize,
    /// Index count the naive strategy would maintain (one per search).
    pub naive_index_count: usize,
    pub index_inserts: u64,
    pub indexes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub tuples_loaded: u64,
    pub tuples_derived: u64,
    pub index_inserts: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phase {
    pub name: String,
    pub nanos: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: String,
    pub relations: Vec<RelationStats>,
    pub totals: Totals,
    /// Stable digest of everything except wall-clock phases.
    pub fingerprint: String,
    pub phases: Vec<Phase>,
}

pub fn run_report(
    prog: &Program,
    compiled: &CompiledProgram,
    db: &Database,
    loaded: u64,
    derived: u64,
    phases: Vec<Phase>,
) -> RunReport {
    let searched = collect_searches(prog);
    let relations: Vec<RelationStats> = prog
        .decls
        .iter()
        .enumerate()
        .map(|(i, decl)| {
            let rel = db.rel(RelId(i));
            let names = &decl.attrs;
            RelationStats {
                relation: decl.name.clone(),
                tuples: rel.len() as u64,
                searches: searched
                    .get(&RelId(i))
                    .map(|q| q.iter().map(|s| render_search(s, names)).collect())
                    .unwrap_or_default(),
                chains: compiled
                    .solutions
                    .get(&RelId(i))
                    .map(|sol| sol.cover.iter().map(|c| render_chain(c, names)).collect())
                    .unwrap_or_default(),
                index_count: rel.index_count(),
                naive_index_count: searched
                    .get(&RelId(i))
                    .map(|q| q.len())
                    .filter(|&n| n > 0)
                    .unwrap_or(1),
                index_inserts: rel.index_inserts(),
                indexes: rel.orders().map(|o| render_order(o, names)).collect(),
            }
        })
        .collect();
    let totals = Totals {
        tuples_loaded: loaded,
        tuples_derived: derived,
        index_inserts: db.index_inserts(),
    };
    let fingerprint = fingerprint(compiled.mode, &relations, &totals);
    RunReport {
        mode: compiled.mode.to_string(),
        relations,
        totals,
        fingerprint,
        phases,
    }
}

fn fingerprint(mode: Mode, relations: &[RelationStats], totals: &Totals) -> String {
    let mut h = DefaultHasher::new();
    mode.as_str().hash(&mut h);
    for r in relations {
        r.relation.hash(&mut h);
        r.tuples.hash(&mut h);
        r.searches.hash(&mut h);
        r.chains.hash(&mut h);
        r.index_count.hash(&mut h);
        r.naive_index_count.hash(&mut h);
        r.index_inserts.hash(&mut h);
        r.indexes.hash(&mut h);
    }
    totals.tuples_loaded.hash(&mut h);
    totals.tuples_derived.hash(&mut h);
    totals.index_inserts.hash(&mut h);
    format!("{:016x}", h.finish())
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mode: {}", self.mode)?;
        for r in &self.relations {
            writeln!(
                f,
                "{}: {} tuples, {} indexes ({} naive), {} index inserts [{}]",
                r.relation,
                r.tuples,
                r.index_count,
                r.naive_index_count,
                r.index_inserts,
                r.indexes.join(";  ")
            )?;
            if !r.searches.is_empty() {
                writeln!(f, "  searches: {}", r.searches.join(", "))?;
            }
            if !r.chains.is_empty() {
                writeln!(f, "  chains:   {}", r.chains.join(";  "))?;
            }
        }
        writeln!(
            f,
            "totals: {} loaded, {} derived, {} index inserts",
            self.totals.tuples_loaded, self.totals.tuples_derived, self.totals.index_inserts
        )?;
        for p in &self.phases {
            writeln!(f, "  {:<10} {:>12.3} ms", p.name, p.nanos as f64 / 1e6)?;
        }
        writeln!(f, "fingerprint: {}", self.fingerprint)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeBench {
    pub mode: String,
    pub load_nanos: u64,
    pub execute_nanos: u64,
    pub tuples_derived: u64,
    pub index_inserts: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub modes: Vec<ModeBench>,
    /// Total index-insert ratio naive/auto.
    pub insert_ratio: f64,
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<6} {:>12} {:>12} {:>10} {:>14}",
            "mode", "load ms", "execute ms", "derived", "index inserts"
        )?;
        for m in &self.modes {
            writeln!(
                f,
                "{:<6} {:>12.3} {:>12.3} {:>10} {:>14}",
                m.mode,
                m.load_nanos as f64 / 1e6,
                m.execute_nanos as f64 / 1e6,
                m.tuples_derived,
                m.index_inserts
            )?;
        }
        writeln!(f, "naive/auto index-insert ratio: {:.3}", self.insert_ratio)
    }
}

/// Result of one randomized verification suite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub trials: u64,
    pub failures: u64,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.failures == 0
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<22} {:>6} trials, {:>3} failures  {}",
            self.suite,
            self.trials,
            self.failures,
            if self.ok() { "ok" } else { "FAILED" }
        )
    }
}
