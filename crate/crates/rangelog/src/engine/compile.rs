//! Index planning and join compilation.
//!
//! Planning gathers every primitive search a program performs (loop lookups
//! and negated emptiness checks alike), groups them by relation, and picks the
//! relation's index set — minimal via chain covers in auto mode, one index per
//! search in naive mode. Compilation then pins each search to its assigned
//! order and container position, producing a join ready to execute.

use crate::engine::nest::{rewrite_searches, translate, Equality, ProjSource, SearchedNest};
use crate::mosp::{min_index, naive_index, MospSolution};
use crate::parser::{Program, RelId};
use crate::search::{LexOrder, SearchSet};
use std::collections::BTreeMap;

/// Every nonempty search each relation receives, across all rules.
pub fn collect_searches(prog: &Program) -> BTreeMap<RelId, SearchSet> {
    let mut by_rel: BTreeMap<RelId, SearchSet> = BTreeMap::new();
    for rule in &prog.rules {
        let nest = rewrite_searches(&translate(rule));
        for (rel, search) in nest
            .loops
            .iter()
            .map(|l| (l.rel, l.search()))
            .chain(nest.checks.iter().map(|c| (c.rel, c.search())))
        {
            if !search.is_empty() {
                by_rel.entry(rel).or_default().insert(search);
            }
        }
    }
    by_rel
}

/// Minimal index selection for every searched relation.
pub fn optimize_indexes(prog: &Program) -> BTreeMap<RelId, MospSolution> {
    collect_searches(prog)
        .into_iter()
        .map(|(rel, q)| (rel, min_index(&q)))
        .collect()
}

/// Baseline selection: one index per distinct search.
pub fn naive_indexes(prog: &Program) -> BTreeMap<RelId, MospSolution> {
    collect_searches(prog)
        .into_iter()
        .map(|(rel, q)| (rel, naive_index(&q)))
        .collect()
}

/// How a loop or check locates its matching tuples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Access {
    /// Linear filter over the relation's primary container (scan mode, and
    /// loops whose search is empty).
    Filter,
    /// Range navigation on the container at `index_pos`, whose order extends
    /// the assigned `order`.
    Range { index_pos: usize, order: LexOrder },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledLoop {
    pub rel: RelId,
    pub pred: Vec<Equality>,
    pub residual: Vec<(u32, u32)>,
    pub access: Access,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledCheck {
    pub rel: RelId,
    pub pred: Vec<Equality>,
    pub access: Access,
}

/// An executable join: loops outermost-first, negated checks grouped by the
/// level after which they run (`checks_at[j]` needs the first `j` loops bound).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledJoin {
    pub head: RelId,
    pub loops: Vec<CompiledLoop>,
    pub checks_at: Vec<Vec<CompiledCheck>>,
    pub projection: Vec<ProjSource>,
}

fn pick_access(
    rel: RelId,
    search: crate::search::Search,
    solutions: &BTreeMap<RelId, MospSolution>,
    scan_mode: bool,
) -> Access {
    if scan_mode || search.is_empty() {
        return Access::Filter;
    }
    let sol = solutions
        .get(&rel)
        .expect("planning covered every searched relation");
    let index_pos = *sol
        .assignment
        .get(&search)
        .expect("planning assigned every search an order");
    Access::Range {
        index_pos,
        order: sol.indexes.get(index_pos).clone(),
    }
}

/// Compiles one rewritten rule against the chosen index sets. With `scan_mode`
/// every access degrades to a linear filter.
pub fn compile(
    nest: &SearchedNest,
    solutions: &BTreeMap<RelId, MospSolution>,
    scan_mode: bool,
) -> CompiledJoin {
    let loops: Vec<CompiledLoop> = nest
        .loops
        .iter()
        .map(|l| CompiledLoop {
            rel: l.rel,
            pred: l.search_pred.clone(),
            residual: l.residual.clone(),
            access: pick_access(l.rel, l.search(), solutions, scan_mode),
        })
        .collect();

    let mut checks_at: Vec<Vec<CompiledCheck>> = vec![Vec::new(); loops.len() + 1];
    for check in &nest.checks {
        checks_at[check.attach_after].push(CompiledCheck {
            rel: check.rel,
            pred: check.pred.clone(),
            access: pick_access(check.rel, check.search(), solutions, scan_mode),
        });
    }

    CompiledJoin {
        head: nest.head,
        loops,
        checks_at,
        projection: nest.projection.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;
    use crate::search::Search;

    const MOTIVATING: &str = r#"
.decl A(x, y, z)
.decl B(x, y, z)
B(r, p, q) :- A(r, p, q), A(q, _, _), A(p, q, _), A(p, _, q), A(q, p, r).
"#;

    fn s(ids: &[u32]) -> Search {
        Search::from_ids(ids.iter().copied())
    }

    #[test]
    fn collects_motivating_searches() {
        let prog = parse_program(MOTIVATING).unwrap();
        let by_rel = collect_searches(&prog);
        assert_eq!(by_rel.len(), 1);
        let q = &by_rel[&RelId(0)];
        // The empty search of the first loop is stripped.
        assert_eq!(
            q.as_slice(),
            &[s(&[0]), s(&[0, 1]), s(&[0, 2]), s(&[0, 1, 2])]
        );
    }

    #[test]
    fn optimizes_motivating_to_two_indexes() {
        let prog = parse_program(MOTIVATING).unwrap();
        let solutions = optimize_indexes(&prog);
        assert_eq!(solutions[&RelId(0)].index_count(), 2);
        assert_eq!(naive_indexes(&prog)[&RelId(0)].index_count(), 4);
        // B is never searched, so it gets no entry at all.
        assert!(!solutions.contains_key(&RelId(1)));
    }

    #[test]
    fn compiles_motivating_loops_to_assigned_orders() {
        let prog = parse_program(MOTIVATING).unwrap();
        let solutions = optimize_indexes(&prog);
        let nest = rewrite_searches(&translate(&prog.rules[0]));
        let join = compile(&nest, &solutions, false);

        let xyz = LexOrder::new(vec![0, 1, 2]);
        let xz = LexOrder::new(vec![0, 2]);
        let orders: Vec<Option<&LexOrder>> = join
            .loops
            .iter()
            .map(|l| match &l.access {
                Access::Filter => None,
                Access::Range { order, .. } => Some(order),
            })
            .collect();
        assert_eq!(
            orders,
            vec![None, Some(&xyz), Some(&xyz), Some(&xz), Some(&xyz)]
        );

        // Scan mode keeps the same structure with filter access everywhere.
        let scan = compile(&nest, &BTreeMap::new(), true);
        assert!(scan.loops.iter().all(|l| l.access == Access::Filter));
        assert_eq!(scan.projection, join.projection);
    }

    #[test]
    fn negated_atoms_share_index_planning() {
        let prog = parse_program(
            r#"
.decl A(x, y)
.decl C(x, y)
.decl Out(x)
Out(v) :- A(v, w), !C(w, v).
"#,
        )
        .unwrap();
        let by_rel = collect_searches(&prog);
        assert_eq!(by_rel[&RelId(1)].as_slice(), &[s(&[0, 1])]);

        let solutions = optimize_indexes(&prog);
        let nest = rewrite_searches(&translate(&prog.rules[0]));
        let join = compile(&nest, &solutions, false);
        assert_eq!(join.checks_at[1].len(), 1);
        assert!(matches!(join.checks_at[1][0].access, Access::Range { .. }));
    }
}
