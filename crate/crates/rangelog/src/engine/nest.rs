//! Rule → nested-loop translation, and the rewrite that splits each loop's
//! predicate into a primitive search plus a residual filter.
//!
//! Join order is the declared body order: loop j scans the j-th positive
//! literal. A variable is bound by its first positive occurrence; every later
//! occurrence becomes an equality on the current loop's tuple. Equalities
//! whose right-hand side lives in an outer tuple (or is a constant) form the
//! loop's primitive search — negated literals become emptiness checks, hoisted
//! to the outermost level at which all their variables are bound.

use crate::parser::{Rule, RelId, Term};
use crate::search::{AttrId, Search};

/// Right-hand side of an equality predicate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rhs {
    /// A literal constant (the token to intern).
    Const(String),
    /// Element `attr` of the tuple bound by outer loop `loop_idx` (0-based).
    Outer { loop_idx: usize, attr: AttrId },
}

/// `t(attr) = rhs`, constraining the current loop's tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equality {
    pub attr: AttrId,
    pub rhs: Rhs,
}

/// A predicate on one loop, before search extraction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoopPred {
    Eq(Equality),
    /// `t(a) = t(b)` from a variable repeated within one atom; never part of a
    /// primitive search, since its right-hand side is the current tuple itself.
    SameTuple(AttrId, AttrId),
}

/// One positive literal as a loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NestedLoop {
    pub rel: RelId,
    pub preds: Vec<LoopPred>,
}

/// A negated literal as an emptiness check: `σ_pred(rel)` must be empty.
/// `attach_after` is the number of loops that must be bound first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegCheck {
    pub rel: RelId,
    pub pred: Vec<Equality>,
    pub attach_after: usize,
}

/// Source of one head attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProjSource {
    Const(String),
    Outer { loop_idx: usize, attr: AttrId },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopNest {
    pub head: RelId,
    pub loops: Vec<NestedLoop>,
    pub checks: Vec<NegCheck>,
    pub projection: Vec<ProjSource>,
}

/// Translates a validated rule into a loop nest.
pub fn translate(rule: &Rule) -> LoopNest {
    // Variable → (loop index, attribute) of its first positive occurrence.
    let mut bound: Vec<(&str, (usize, AttrId))> = Vec::new();
    let lookup = |bound: &[(&str, (usize, AttrId))], v: &str| {
        bound.iter().find(|(name, _)| *name == v).map(|&(_, at)| at)
    };

    let mut loops = Vec::new();
    for lit in rule.positive() {
        let loop_idx = loops.len();
        let mut preds = Vec::new();
        for (p, term) in lit.atom.args.iter().enumerate() {
            let attr = p as AttrId;
            match term {
                Term::Wildcard => {}
                Term::Const(c) => preds.push(LoopPred::Eq(Equality {
                    attr,
                    rhs: Rhs::Const(c.clone()),
                })),
                Term::Var(v) => match lookup(&bound, v) {
                    None => bound.push((v, (loop_idx, attr))),
                    Some((j, a)) if j == loop_idx => preds.push(LoopPred::SameTuple(attr, a)),
                    Some((j, a)) => preds.push(LoopPred::Eq(Equality {
                        attr,
                        rhs: Rhs::Outer { loop_idx: j, attr: a },
                    })),
                },
            }
        }
        loops.push(NestedLoop {
            rel: lit.atom.rel,
            preds,
        });
    }

    let mut checks = Vec::new();
    for lit in rule.negated() {
        let mut pred = Vec::new();
        let mut attach_after = 0usize;
        for (p, term) in lit.atom.args.iter().enumerate() {
            let attr = p as AttrId;
            match term {
                Term::Wildcard => {}
                Term::Const(c) => pred.push(Equality {
                    attr,
                    rhs: Rhs::Const(c.clone()),
                }),
                Term::Var(v) => {
                    let (j, a) = lookup(&bound, v)
                        .expect("validation grounds every variable under negation");
                    attach_after = attach_after.max(j + 1);
                    pred.push(Equality {
                        attr,
                        rhs: Rhs::Outer { loop_idx: j, attr: a },
                    });
                }
            }
        }
        checks.push(NegCheck {
            rel: lit.atom.rel,
            pred,
            attach_after,
        });
    }

    let projection = rule
        .head
        .args
        .iter()
        .map(|term| match term {
            Term::Const(c) => ProjSource::Const(c.clone()),
            Term::Var(v) => {
                let (loop_idx, attr) =
                    lookup(&bound, v).expect("validation grounds every head variable");
                ProjSource::Outer { loop_idx, attr }
            }
            Term::Wildcard => unreachable!("validation rejects head wildcards"),
        })
        .collect();

    LoopNest {
        head: rule.head.rel,
        loops,
        checks,
        projection,
    }
}

/// One loop after search extraction: φ as primitive search + residual.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchedLoop {
    pub rel: RelId,
    /// φ′ — equalities against constants and outer tuples; exactly the part a
    /// lexicographic index can answer.
    pub search_pred: Vec<Equality>,
    /// φ″ — same-tuple equalities, applied as a filter per scanned tuple.
    pub residual: Vec<(AttrId, AttrId)>,
}

impl SearchedLoop {
    /// The search this loop performs: the set of constrained attributes.
    pub fn search(&self) -> Search {
        Search::from_ids(self.search_pred.iter().map(|eq| eq.attr))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchedNest {
    pub head: RelId,
    pub loops: Vec<SearchedLoop>,
    pub checks: Vec<NegCheck>,
    pub projection: Vec<ProjSource>,
}

/// Splits every loop's predicate into its primitive search φ′ and residual φ″.
pub fn rewrite_searches(nest: &LoopNest) -> SearchedNest {
    let loops = nest
        .loops
        .iter()
        .map(|l| {
            let mut search_pred = Vec::new();
            let mut residual = Vec::new();
            for pred in &l.preds {
                match pred {
                    LoopPred::Eq(eq) => search_pred.push(eq.clone()),
                    LoopPred::SameTuple(a, b) => residual.push((*a, *b)),
                }
            }
            SearchedLoop {
                rel: l.rel,
                search_pred,
                residual,
            }
        })
        .collect();
    SearchedNest {
        head: nest.head,
        loops,
        checks: nest.checks.clone(),
        projection: nest.projection.clone(),
    }
}

impl NegCheck {
    /// The search the emptiness check performs.
    pub fn search(&self) -> Search {
        Search::from_ids(self.pred.iter().map(|eq| eq.attr))
    }
}
