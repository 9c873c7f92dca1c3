//! Join execution: runs a compiled join against the database, inserting fresh
//! head tuples.
//!
//! Constants are interned up front, then the nest runs as pure reads over the
//! body relations — the output relation is detached for the duration, which
//! is sound because rules never read their own head (recursion is rejected).
//! With `threads > 1` the outermost loop's tuples are split into contiguous
//! chunks processed by scoped workers; candidate tuples are merged in chunk
//! order, so the insert sequence — and hence every result and counter — is
//! identical to the serial run.

use crate::engine::compile::{Access, CompiledJoin};
use crate::engine::nest::{ProjSource, Rhs};
use crate::engine::{Database, EngineError};
use crate::search::AttrId;
use crate::storage::{make_bounds, primitive_search_scan, Relation, SymbolTable, Tuple, Value};
use crate::parser::RelId;

#[derive(Clone, Copy)]
enum RRhs {
    Const(Value),
    Outer { loop_idx: usize, attr: AttrId },
}

struct REq {
    attr: AttrId,
    rhs: RRhs,
}

struct RLoop {
    rel: RelId,
    pred: Vec<REq>,
    residual: Vec<(AttrId, AttrId)>,
    access: Access,
}

struct RCheck {
    rel: RelId,
    pred: Vec<REq>,
    access: Access,
}

enum RProj {
    Const(Value),
    Outer { loop_idx: usize, attr: AttrId },
}

struct RJoin {
    loops: Vec<RLoop>,
    checks_at: Vec<Vec<RCheck>>,
    projection: Vec<RProj>,
}

/// Interns every constant in the join. Done once per execution, before the
/// read-only phase, in a fixed traversal order.
fn resolve(join: &CompiledJoin, symbols: &mut SymbolTable) -> RJoin {
    let mut eq = |attr: AttrId, rhs: &Rhs| REq {
        attr,
        rhs: match rhs {
            Rhs::Const(c) => RRhs::Const(symbols.intern(c)),
            Rhs::Outer { loop_idx, attr } => RRhs::Outer {
                loop_idx: *loop_idx,
                attr: *attr,
            },
        },
    };
    let loops = join
        .loops
        .iter()
        .map(|l| RLoop {
            rel: l.rel,
            pred: l.pred.iter().map(|e| eq(e.attr, &e.rhs)).collect(),
            residual: l.residual.clone(),
            access: l.access.clone(),
        })
        .collect();
    let checks_at = join
        .checks_at
        .iter()
        .map(|checks| {
            checks
                .iter()
                .map(|c| RCheck {
                    rel: c.rel,
                    pred: c.pred.iter().map(|e| eq(e.attr, &e.rhs)).collect(),
                    access: c.access.clone(),
                })
                .collect()
        })
        .collect();
    let projection = join
        .projection
        .iter()
        .map(|p| match p {
            ProjSource::Const(c) => RProj::Const(symbols.intern(c)),
            ProjSource::Outer { loop_idx, attr } => RProj::Outer {
                loop_idx: *loop_idx,
                attr: *attr,
            },
        })
        .collect();
    RJoin {
        loops,
        checks_at,
        projection,
    }
}

fn resolve_pred(pred: &[REq], stack: &[Tuple]) -> Vec<(AttrId, Value)> {
    pred.iter()
        .map(|e| {
            let v = match e.rhs {
                RRhs::Const(v) => v,
                RRhs::Outer { loop_idx, attr } => stack[loop_idx].get(attr),
            };
            (e.attr, v)
        })
        .collect()
}

fn residual_holds(residual: &[(AttrId, AttrId)], t: &Tuple) -> bool {
    residual.iter().all(|&(a, b)| t.get(a) == t.get(b))
}

/// True iff all emptiness checks at this level pass (their regions are empty).
fn checks_pass(rj: &RJoin, level: usize, db: &Database, stack: &[Tuple]) -> Result<bool, EngineError> {
    for chk in &rj.checks_at[level] {
        let rel = db.rel(chk.rel);
        let pred = resolve_pred(&chk.pred, stack);
        let nonempty = match &chk.access {
            Access::Filter => primitive_search_scan(rel, &pred).next().is_some(),
            Access::Range { index_pos, order } => {
                let (a, b) = make_bounds(rel.arity(), &pred, order)?;
                rel.range_nonempty(*index_pos, &a, &b)
            }
        };
        if nonempty {
            return Ok(false);
        }
    }
    Ok(true)
}

fn project(rj: &RJoin, stack: &[Tuple]) -> Tuple {
    Tuple::new(
        rj.projection
            .iter()
            .map(|p| match p {
                RProj::Const(v) => *v,
                RProj::Outer { loop_idx, attr } => stack[*loop_idx].get(*attr),
            })
            .collect(),
    )
}

fn descend<F>(
    rj: &RJoin,
    level: usize,
    db: &Database,
    stack: &mut Vec<Tuple>,
    emit: &mut F,
) -> Result<(), EngineError>
where
    F: FnMut(Tuple) -> Result<(), EngineError>,
{
    if !checks_pass(rj, level, db, stack)? {
        return Ok(());
    }
    if level == rj.loops.len() {
        return emit(project(rj, stack));
    }
    let lp = &rj.loops[level];
    let rel = db.rel(lp.rel);
    let pred = resolve_pred(&lp.pred, stack);
    match &lp.access {
        Access::Filter => {
            for t in primitive_search_scan(rel, &pred) {
                if residual_holds(&lp.residual, &t) {
                    stack.push(t);
                    descend(rj, level + 1, db, stack, emit)?;
                    stack.pop();
                }
            }
        }
        Access::Range { index_pos, order } => {
            let (a, b) = make_bounds(rel.arity(), &pred, order)?;
            for t in rel.range_search_at(*index_pos, &a, &b) {
                if residual_holds(&lp.residual, &t) {
                    stack.push(t);
                    descend(rj, level + 1, db, stack, emit)?;
                    stack.pop();
                }
            }
        }
    }
    Ok(())
}

fn run_parallel(
    rj: &RJoin,
    db: &Database,
    out: &mut Relation,
    threads: usize,
) -> Result<u64, EngineError> {
    if !checks_pass(rj, 0, db, &[])? {
        return Ok(0);
    }
    // Materialize the outermost loop's bindings, then fan out.
    let mut outer: Vec<Tuple> = Vec::new();
    {
        let lp = &rj.loops[0];
        let rel = db.rel(lp.rel);
        let pred = resolve_pred(&lp.pred, &[]);
        let keep = |t: &Tuple| residual_holds(&lp.residual, t);
        match &lp.access {
            Access::Filter => outer.extend(primitive_search_scan(rel, &pred).filter(keep)),
            Access::Range { index_pos, order } => {
                let (a, b) = make_bounds(rel.arity(), &pred, order)?;
                outer.extend(rel.range_search_at(*index_pos, &a, &b).filter(keep));
            }
        }
    }

    let chunk_size = outer.len().div_ceil(threads).max(1);
    let mut fresh = 0u64;
    std::thread::scope(|scope| -> Result<(), EngineError> {
        let handles: Vec<_> = outer
            .chunks(chunk_size)
            .map(|chunk| {
                scope.spawn(move || -> Result<Vec<Tuple>, EngineError> {
                    let mut local = Vec::new();
                    let mut stack = Vec::with_capacity(rj.loops.len());
                    for t in chunk {
                        stack.push(t.clone());
                        descend(rj, 1, db, &mut stack, &mut |t| {
                            local.push(t);
                            Ok(())
                        })?;
                        stack.pop();
                    }
                    Ok(local)
                })
            })
            .collect();
        for handle in handles {
            for t in handle.join().expect("worker panicked")? {
                if out.insert(t)? {
                    fresh += 1;
                }
            }
        }
        Ok(())
    })?;
    Ok(fresh)
}

/// Runs the join, returning the number of fresh head tuples.
pub fn execute(join: &CompiledJoin, db: &mut Database, threads: usize) -> Result<u64, EngineError> {
    let mut out = db.take_rel(join.head);
    let rj = resolve(join, &mut db.symbols);
    let result = (|| {
        if threads > 1 && rj.loops.len() > 1 {
            run_parallel(&rj, db, &mut out, threads)
        } else {
            let mut fresh = 0u64;
            let mut stack = Vec::with_capacity(rj.loops.len());
            descend(&rj, 0, db, &mut stack, &mut |t| {
                if out.insert(t)? {
                    fresh += 1;
                }
                Ok(())
            })?;
            Ok(fresh)
        }
    })();
    db.put_rel(join.head, out);
    result
}
