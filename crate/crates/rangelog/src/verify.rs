//! Randomized self-checks: every polynomial-time component is replayed against
//! a brute-force oracle on instances small enough to enumerate, and whole
//! generated programs are evaluated under all index strategies and compared.
//!
//! Suites are seeded (ChaCha) so a reported failure reproduces exactly.

use crate::engine::{compile_program, execute_all, Database, Mode};
use crate::matching::{max_antichain_bruteforce, min_chain_cover};
use crate::mosp::{brute_force_min_cover_size, min_index};
use crate::parser::parse_program;
use crate::report::SuiteReport;
use crate::search::{AttrId, Chain, ChainCover, LexOrder, Search, SearchSet};
use crate::storage::{make_bounds, primitive_search_scan, read_facts_tsv, Relation, Tuple, Value};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

/// Random set of distinct nonempty searches over at most `max_attrs` attributes.
pub fn gen_search_set(rng: &mut impl Rng, max_attrs: u32, max_searches: usize) -> SearchSet {
    let m = rng.gen_range(1..=max_attrs);
    let count = rng.gen_range(1..=max_searches);
    let mut q = SearchSet::new();
    for _ in 0..count {
        q.insert(Search::from_bits(rng.gen_range(1..1u64 << m)));
    }
    q
}

fn dilworth_check(
    name: &str,
    seed: u64,
    trials: u64,
    cover_fn: impl Fn(&SearchSet) -> ChainCover,
) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..trials {
        let q = gen_search_set(&mut rng, 8, 14);
        let cover = cover_fn(&q);
        let want = max_antichain_bruteforce(&q).expect("instance within oracle gate");
        if cover.chains().len() != want || !cover.is_partition_of(&q) {
            failures += 1;
        }
    }
    SuiteReport {
        suite: name.into(),
        trials,
        failures,
    }
}

/// Chain cover size must equal the brute-forced maximum antichain.
pub fn dilworth_suite(seed: u64, trials: u64) -> SuiteReport {
    dilworth_suite_with("dilworth", min_chain_cover, seed, trials)
}

/// Same trials against an arbitrary cover routine — lets tests prove the check
/// rejects a non-minimal cover.
pub fn dilworth_suite_with(
    name: &str,
    cover_fn: impl Fn(&SearchSet) -> ChainCover,
    seed: u64,
    trials: u64,
) -> SuiteReport {
    dilworth_check(name, seed, trials, cover_fn)
}

/// A deliberately wasteful cover: one chain per search.
pub fn singleton_cover(q: &SearchSet) -> ChainCover {
    ChainCover::new(q.iter().map(|s| Chain::new(vec![s])).collect())
}

/// Selected index count must equal the brute-forced minimum over all order
/// subsets, and the assignment must actually cover each search.
pub fn mosp_suite(seed: u64, trials: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..trials {
        let q = gen_search_set(&mut rng, 4, 8);
        let sol = min_index(&q);
        let best = brute_force_min_cover_size(&q).expect("instance within oracle gate");
        let assigned_ok = q
            .iter()
            .all(|s| sol.order_for(s).is_some_and(|ell| ell.covers(s)));
        if sol.index_count() != best || !sol.cover.is_partition_of(&q) || !assigned_ok {
            failures += 1;
        }
    }
    SuiteReport {
        suite: "mosp".into(),
        trials,
        failures,
    }
}

/// Range searches must return exactly what a full scan filters out, for every
/// covering container order — including orders extended past the prefix.
pub fn range_suite(seed: u64, trials: u64, max_rows: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for trial in 0..trials {
        if !range_trial(&mut rng, trial, max_rows) {
            failures += 1;
        }
    }
    SuiteReport {
        suite: "range-oracle".into(),
        trials,
        failures,
    }
}

fn range_trial(rng: &mut impl Rng, trial: u64, max_rows: usize) -> bool {
    let arity = rng.gen_range(1..=5usize);
    let rows = rng.gen_range(0..=max_rows);
    let domain = rng.gen_range(1..=16u32);

    let mut attrs: Vec<AttrId> = (0..arity as u32).collect();
    attrs.shuffle(rng);
    let k = rng.gen_range(0..=arity);
    // Values range past the domain so some predicates match nothing.
    let pred: Vec<(AttrId, Value)> = attrs[..k]
        .iter()
        .map(|&a| (a, Value(rng.gen_range(0..domain + 2))))
        .collect();

    // Two containers covering the same prefix set in different permutations;
    // the first gets an explicit extension past the prefix on even trials.
    let mut prefix1: Vec<AttrId> = pred.iter().map(|p| p.0).collect();
    prefix1.shuffle(rng);
    let mut prefix2: Vec<AttrId> = pred.iter().map(|p| p.0).collect();
    prefix2.shuffle(rng);
    let mut order1 = prefix1.clone();
    let mut ext: Vec<AttrId> = attrs[k..].to_vec();
    ext.shuffle(rng);
    let take = if trial.is_multiple_of(2) {
        ext.len()
    } else {
        rng.gen_range(0..=ext.len())
    };
    order1.extend(ext.into_iter().take(take));

    let mut r = if k == 0 {
        Relation::new("R", arity)
    } else {
        let orders = if order1 == prefix2 {
            vec![LexOrder::new(order1)]
        } else {
            vec![LexOrder::new(order1), LexOrder::new(prefix2.clone())]
        };
        Relation::with_orders("R", arity, orders)
    };
    for _ in 0..rows {
        let t = Tuple::new((0..arity).map(|_| Value(rng.gen_range(0..domain))).collect());
        r.insert(t).expect("arity matches");
    }

    let expected: BTreeSet<Tuple> = primitive_search_scan(&r, &pred).collect();
    if k == 0 {
        return expected == r.iter().collect();
    }

    // The predicate slice in a shuffled order must produce the same bounds.
    let ell1 = LexOrder::new(prefix1);
    let ell2 = LexOrder::new(prefix2);
    let mut pred_shuffled = pred.clone();
    pred_shuffled.shuffle(rng);
    let (a1, b1) = make_bounds(arity, &pred, &ell1).expect("prefix covers pred");
    let (a1s, b1s) = make_bounds(arity, &pred_shuffled, &ell1).expect("prefix covers pred");
    let (a2, b2) = make_bounds(arity, &pred, &ell2).expect("prefix covers pred");
    if (a1s, b1s) != (a1.clone(), b1.clone()) {
        return false;
    }

    let via = |ell: &LexOrder, a: &_, b: &_| -> BTreeSet<Tuple> {
        r.range_search(ell, a, b)
            .expect("covering index exists")
            .collect()
    };
    via(&ell1, &a1, &b1) == expected && via(&ell2, &a2, &b2) == expected
}

/// A self-contained random program: source text plus the fact files its
/// `.input` directives name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedProgram {
    pub src: String,
    pub facts: BTreeMap<String, String>,
}

struct GenRel {
    name: String,
    arity: usize,
    layer: usize,
}

const ATTR_NAMES: [&str; 3] = ["x", "y", "z"];

/// Random non-recursive program: layered joins with shared variables,
/// constants, wildcards, repeated variables, and negation, plus fact files for
/// every base relation.
pub fn gen_program(rng: &mut impl Rng) -> GeneratedProgram {
    let domain = rng.gen_range(3..=12u32);
    let n_base = rng.gen_range(1..=3usize);
    let mut rels: Vec<GenRel> = (0..n_base)
        .map(|i| GenRel {
            name: format!("B{i}"),
            arity: rng.gen_range(1..=3),
            layer: 0,
        })
        .collect();

    let mut rules = Vec::new();
    let n_rules = rng.gen_range(1..=4usize);
    let mut n_derived = 0usize;
    for _ in 0..n_rules {
        // Reusing a derived head keeps the program a DAG as long as the new
        // rule's body stays in strictly lower layers.
        let reusable: Vec<usize> = (0..rels.len()).filter(|&i| rels[i].layer > 0).collect();
        let (head, max_body_layer) = if !reusable.is_empty() && rng.gen_bool(0.25) {
            let h = reusable[rng.gen_range(0..reusable.len())];
            (h, rels[h].layer - 1)
        } else {
            rels.push(GenRel {
                name: format!("D{n_derived}"),
                arity: rng.gen_range(1..=3),
                layer: 0,
            });
            n_derived += 1;
            (rels.len() - 1, usize::MAX)
        };
        let candidates: Vec<usize> = (0..rels.len())
            .filter(|&i| i != head && rels[i].layer <= max_body_layer)
            .collect();

        let mut bound: Vec<String> = Vec::new();
        let mut next_var = 0usize;
        let mut parts: Vec<String> = Vec::new();
        let n_pos = rng.gen_range(1..=3usize);
        for li in 0..n_pos {
            let b = candidates[rng.gen_range(0..candidates.len())];
            let args = gen_pos_args(rng, rels[b].arity, li == 0, &mut bound, &mut next_var, domain);
            parts.push(format!("{}({})", rels[b].name, args.join(", ")));
            rels[head].layer = rels[head].layer.max(rels[b].layer + 1);
        }
        if rng.gen_bool(0.3) {
            let b = candidates[rng.gen_range(0..candidates.len())];
            rels[head].layer = rels[head].layer.max(rels[b].layer + 1);
            let args: Vec<String> = (0..rels[b].arity)
                .map(|_| {
                    let roll: f64 = rng.gen();
                    if roll < 0.6 && !bound.is_empty() {
                        bound[rng.gen_range(0..bound.len())].clone()
                    } else if roll < 0.8 {
                        rng.gen_range(0..domain).to_string()
                    } else {
                        "_".into()
                    }
                })
                .collect();
            parts.push(format!("!{}({})", rels[b].name, args.join(", ")));
        }

        let head_args: Vec<String> = (0..rels[head].arity)
            .map(|_| {
                if rng.gen_bool(0.85) {
                    bound[rng.gen_range(0..bound.len())].clone()
                } else {
                    rng.gen_range(0..domain).to_string()
                }
            })
            .collect();
        rules.push(format!(
            "{}({}) :- {}.",
            rels[head].name,
            head_args.join(", "),
            parts.join(", ")
        ));
    }

    let mut src = String::new();
    for r in &rels {
        src.push_str(&format!(
            ".decl {}({})\n",
            r.name,
            ATTR_NAMES[..r.arity].join(", ")
        ));
    }
    for r in &rels[..n_base] {
        src.push_str(&format!(".input {} \"{}.tsv\"\n", r.name, r.name));
    }
    for r in &rels[n_base..] {
        src.push_str(&format!(".output {} \"{}.out.tsv\"\n", r.name, r.name));
    }
    if rng.gen_bool(0.3) {
        let r = &rels[rng.gen_range(0..n_base)];
        src.push_str(&format!(".output {} \"{}.out.tsv\"\n", r.name, r.name));
    }
    src.push('\n');
    for rule in &rules {
        src.push_str(rule);
        src.push('\n');
    }

    let mut facts = BTreeMap::new();
    for r in &rels[..n_base] {
        let rows = if rng.gen_bool(0.1) {
            0
        } else {
            rng.gen_range(5..=60)
        };
        let mut content = String::new();
        for _ in 0..rows {
            let line: Vec<String> = (0..r.arity)
                .map(|_| rng.gen_range(0..domain).to_string())
                .collect();
            content.push_str(&line.join("\t"));
            content.push('\n');
        }
        facts.insert(format!("{}.tsv", r.name), content);
    }

    GeneratedProgram { src, facts }
}

fn gen_pos_args(
    rng: &mut impl Rng,
    arity: usize,
    first_literal: bool,
    bound: &mut Vec<String>,
    next_var: &mut usize,
    domain: u32,
) -> Vec<String> {
    let outer = bound.clone();
    let mut local: Vec<String> = Vec::new();
    let fresh = |local: &mut Vec<String>, next_var: &mut usize| {
        let v = format!("v{next_var}");
        *next_var += 1;
        local.push(v.clone());
        v
    };
    let mut args: Vec<String> = (0..arity)
        .map(|pos| {
            if first_literal && pos == 0 {
                return fresh(&mut local, next_var);
            }
            let roll: f64 = rng.gen();
            if roll < 0.40 && !outer.is_empty() {
                outer[rng.gen_range(0..outer.len())].clone()
            } else if roll < 0.55 {
                rng.gen_range(0..domain).to_string()
            } else if roll < 0.70 {
                "_".into()
            } else if roll < 0.80 && !local.is_empty() {
                local[rng.gen_range(0..local.len())].clone()
            } else {
                fresh(&mut local, next_var)
            }
        })
        .collect();
    // Every literal after the first joins on at least one already-bound
    // variable, which keeps intermediate results from exploding.
    if !first_literal && !outer.is_empty() && !args.iter().any(|a| outer.contains(a)) {
        let pos = rng.gen_range(0..arity);
        args[pos] = outer[rng.gen_range(0..outer.len())].clone();
    }
    // Only variables that survived into the final argument list are bound;
    // the overwrite above may have erased a fresh variable's sole occurrence.
    for a in &args {
        if local.contains(a) && !bound.contains(a) {
            bound.push(a.clone());
        }
    }
    args
}

/// Output relations of one evaluation, resolved back to symbol text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedRun {
    pub outputs: BTreeMap<String, BTreeSet<Vec<String>>>,
    pub loaded: u64,
    pub derived: u64,
    pub index_inserts: u64,
}

/// Evaluates a generated program fully in memory.
pub fn run_generated(gp: &GeneratedProgram, mode: Mode, threads: usize) -> GeneratedRun {
    let prog = parse_program(&gp.src).expect("generated programs parse");
    let compiled = compile_program(&prog, mode);
    let mut db = Database::for_program(&prog, &compiled);
    let mut loaded = 0;
    for io in &prog.inputs {
        let content = gp.facts.get(&io.path).expect("generated fact file exists");
        let mut rel = db.take_rel(io.rel);
        let n = read_facts_tsv(content.as_bytes(), &mut db.symbols, &mut rel)
            .expect("generated facts are well-formed");
        db.put_rel(io.rel, rel);
        loaded += n;
    }
    let derived = execute_all(&compiled, &mut db, threads).expect("execution succeeds");
    let outputs = prog
        .outputs
        .iter()
        .map(|io| {
            let rows: BTreeSet<Vec<String>> = db
                .rel(io.rel)
                .iter()
                .map(|t| {
                    t.values()
                        .iter()
                        .map(|&v| db.symbols.resolve(v).to_string())
                        .collect()
                })
                .collect();
            (prog.decl(io.rel).name.clone(), rows)
        })
        .collect();
    GeneratedRun {
        outputs,
        loaded,
        derived,
        index_inserts: db.index_inserts(),
    }
}

/// All strategies must derive identical output relations; parallel execution
/// must match serial; naive indexing must never insert less than auto.
pub fn modes_agree(gp: &GeneratedProgram) -> bool {
    let scan = run_generated(gp, Mode::Scan, 1);
    let auto = run_generated(gp, Mode::Auto, 1);
    let naive = run_generated(gp, Mode::Naive, 1);
    let par = run_generated(gp, Mode::Auto, 4);
    auto.outputs == scan.outputs
        && naive.outputs == scan.outputs
        && par.outputs == auto.outputs
        && par.derived == auto.derived
        && par.index_inserts == auto.index_inserts
        && naive.index_inserts >= auto.index_inserts
}

pub fn end_to_end_suite(seed: u64, trials: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..trials {
        if !modes_agree(&gen_program(&mut rng)) {
            failures += 1;
        }
    }
    SuiteReport {
        suite: "end-to-end".into(),
        trials,
        failures,
    }
}
