//! Tuple storage: relations kept as one ordered container per maintained lex
//! order, plus the range-search primitive the joins run on.
//!
//! Each container stores tuples with their elements permuted into its order's
//! attribute sequence, so plain element-wise comparison of the stored keys *is*
//! the lexicographic order — equality lookups on a covered search become one
//! contiguous key range. Every container holds every tuple (they mirror each
//! other); duplicate suppression goes through the first one.

use crate::search::{AttrId, LexOrder, Search};
use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::path::PathBuf;
use thiserror::Error;

/// An interned value: ordinal into the symbol table.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Value(pub u32);

/// A relation row. Comparison is element-wise lexicographic over the stored
/// sequence, which containers exploit by storing permuted rows.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Tuple(Vec<Value>);

impl Tuple {
    pub fn new(values: Vec<Value>) -> Tuple {
        Tuple(values)
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, attr: AttrId) -> Value {
        self.0[attr as usize]
    }

    pub fn values(&self) -> &[Value] {
        &self.0
    }
}

impl From<Vec<u32>> for Tuple {
    fn from(raw: Vec<u32>) -> Tuple {
        Tuple(raw.into_iter().map(Value).collect())
    }
}

/// One element of a range bound. `NegInf`/`PosInf` (⊥/⊤) compare below/above
/// every concrete value — sentinels of the comparator, not reserved ordinals.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum BoundValue {
    NegInf,
    Concrete(Value),
    PosInf,
}

/// A bound over full-arity tuples, in schema position space.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BoundTuple(Vec<BoundValue>);

impl BoundTuple {
    pub fn new(values: Vec<BoundValue>) -> BoundTuple {
        BoundTuple(values)
    }

    pub fn from_tuple(t: &Tuple) -> BoundTuple {
        BoundTuple(t.values().iter().map(|&v| BoundValue::Concrete(v)).collect())
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, attr: AttrId) -> BoundValue {
        self.0[attr as usize]
    }

    pub fn values(&self) -> &[BoundValue] {
        &self.0
    }
}

/// Compares `a` and `b` position by position along `ell`.
pub fn lex_compare(ell: &LexOrder, a: &BoundTuple, b: &BoundTuple) -> Ordering {
    for attr in ell.iter() {
        match a.get(attr).cmp(&b.get(attr)) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Whether tuple `t` lies in `[a, b]` under `ell`.
pub fn within_bounds(ell: &LexOrder, t: &Tuple, a: &BoundTuple, b: &BoundTuple) -> bool {
    let bt = BoundTuple::from_tuple(t);
    lex_compare(ell, a, &bt) != Ordering::Greater && lex_compare(ell, &bt, b) != Ordering::Greater
}

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("{relation}: expected arity {expected}, got {got}")]
    ArityMismatch {
        relation: String,
        expected: usize,
        got: usize,
    },
    #[error("predicate attributes {pred:?} are not a prefix of order {order:?}")]
    CoverViolation { pred: Search, order: LexOrder },
    #[error("{relation}: no maintained index has {order:?} as a prefix")]
    MissingIndex { relation: String, order: LexOrder },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Builds the `[lb, ub]` pair for the equality predicate `pred` under `ell`:
/// concrete at the predicate's attributes, ⊥/⊤ padding everywhere else. Fails
/// unless the predicate's attributes are exactly a prefix of `ell` — the
/// covering property that makes the matching tuples contiguous.
pub fn make_bounds(
    arity: usize,
    pred: &[(AttrId, Value)],
    ell: &LexOrder,
) -> Result<(BoundTuple, BoundTuple), StorageError> {
    let pred_attrs = Search::from_ids(pred.iter().map(|&(a, _)| a));
    let covered = pred.len() <= ell.len()
        && pred_attrs.card() == pred.len()
        && ell.prefix_set(pred.len()) == pred_attrs;
    if !covered {
        return Err(StorageError::CoverViolation {
            pred: pred_attrs,
            order: ell.clone(),
        });
    }
    let mut lo = vec![BoundValue::NegInf; arity];
    let mut hi = vec![BoundValue::PosInf; arity];
    for &(attr, v) in pred {
        lo[attr as usize] = BoundValue::Concrete(v);
        hi[attr as usize] = BoundValue::Concrete(v);
    }
    Ok((BoundTuple(lo), BoundTuple(hi)))
}

/// One ordered container: tuples permuted into `order`'s attribute sequence.
#[derive(Debug, Clone)]
struct IndexStorage {
    order: LexOrder,
    set: BTreeSet<Tuple>,
    inserts: u64,
}

impl IndexStorage {
    fn new(order: LexOrder) -> IndexStorage {
        IndexStorage {
            order,
            set: BTreeSet::new(),
            inserts: 0,
        }
    }

    fn permute(&self, t: &Tuple) -> Tuple {
        Tuple(self.order.iter().map(|a| t.get(a)).collect())
    }

    fn unpermute(&self, key: &Tuple) -> Tuple {
        let mut out = vec![Value(0); key.arity()];
        for (slot, attr) in self.order.iter().enumerate() {
            out[attr as usize] = key.values()[slot];
        }
        Tuple(out)
    }
}

/// A relation instance. `indexes[0]` is the primary order; all containers hold
/// the same tuples.
#[derive(Debug, Clone)]
pub struct Relation {
    name: String,
    arity: usize,
    indexes: Vec<IndexStorage>,
}

impl Relation {
    /// Relation with just the identity (schema-order) index.
    pub fn new(name: impl Into<String>, arity: usize) -> Relation {
        Relation::with_orders(name, arity, std::iter::empty())
    }

    /// Relation maintaining the given orders (each extended to full width).
    /// With no orders given, falls back to the identity order.
    pub fn with_orders<I>(name: impl Into<String>, arity: usize, orders: I) -> Relation
    where
        I: IntoIterator<Item = LexOrder>,
    {
        assert!(arity >= 1, "relations must have at least one attribute");
        let mut indexes: Vec<IndexStorage> = orders
            .into_iter()
            .map(|o| IndexStorage::new(o.extended(arity as u32)))
            .collect();
        if indexes.is_empty() {
            indexes.push(IndexStorage::new(LexOrder::identity(arity as u32)));
        }
        Relation {
            name: name.into(),
            arity,
            indexes,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.indexes[0].set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indexes[0].set.is_empty()
    }

    pub fn index_count(&self) -> usize {
        self.indexes.len()
    }

    /// Maintained orders, primary first.
    pub fn orders(&self) -> impl Iterator<Item = &LexOrder> {
        self.indexes.iter().map(|ix| &ix.order)
    }

    /// Total inserts across all containers (each fresh tuple counts once per
    /// maintained index).
    pub fn index_inserts(&self) -> u64 {
        self.indexes.iter().map(|ix| ix.inserts).sum()
    }

    /// Inserts a tuple into every container; `false` if it was already present.
    pub fn insert(&mut self, t: Tuple) -> Result<bool, StorageError> {
        if t.arity() != self.arity {
            return Err(StorageError::ArityMismatch {
                relation: self.name.clone(),
                expected: self.arity,
                got: t.arity(),
            });
        }
        let primary_key = self.indexes[0].permute(&t);
        if self.indexes[0].set.contains(&primary_key) {
            return Ok(false);
        }
        for ix in &mut self.indexes[1..] {
            let key = ix.permute(&t);
            ix.set.insert(key);
            ix.inserts += 1;
        }
        self.indexes[0].set.insert(primary_key);
        self.indexes[0].inserts += 1;
        Ok(true)
    }

    pub fn contains(&self, t: &Tuple) -> bool {
        let key = self.indexes[0].permute(t);
        self.indexes[0].set.contains(&key)
    }

    /// All tuples in primary order.
    pub fn iter(&self) -> impl Iterator<Item = Tuple> + '_ {
        let ix = &self.indexes[0];
        ix.set.iter().map(move |k| ix.unpermute(k))
    }

    /// Position of a maintained index whose order starts with `ell`.
    pub fn index_for(&self, ell: &LexOrder) -> Option<usize> {
        self.indexes.iter().position(|ix| ix.order.has_prefix(ell))
    }

    /// The tuples in `[a, b]` under `ell`, streamed in index order. Resolved
    /// via an ordered container covering `ell`, navigating straight to the
    /// range. `a` must be a lower bound (no ⊤) and `b` an upper bound (no ⊥).
    pub fn range_search(
        &self,
        ell: &LexOrder,
        a: &BoundTuple,
        b: &BoundTuple,
    ) -> Result<impl Iterator<Item = Tuple> + '_, StorageError> {
        let pos = self
            .index_for(ell)
            .ok_or_else(|| StorageError::MissingIndex {
                relation: self.name.clone(),
                order: ell.clone(),
            })?;
        Ok(self.range_search_at(pos, a, b))
    }

    /// Same as [`Relation::range_search`] with the container position already
    /// resolved (the compiler pins it per loop).
    pub fn range_search_at(
        &self,
        index_pos: usize,
        a: &BoundTuple,
        b: &BoundTuple,
    ) -> impl Iterator<Item = Tuple> + '_ {
        let ix = &self.indexes[index_pos];
        debug_assert!(!a.values().contains(&BoundValue::PosInf), "⊤ in lower bound");
        debug_assert!(!b.values().contains(&BoundValue::NegInf), "⊥ in upper bound");
        // In permuted key space the interval is contiguous. ⊥/⊤ tighten to the
        // domain extrema: equivalent over stored tuples, since every element
        // lies within them, and no ordinal is reserved.
        let lo = Tuple(
            ix.order
                .iter()
                .map(|at| match a.get(at) {
                    BoundValue::Concrete(v) => v,
                    _ => Value(u32::MIN),
                })
                .collect(),
        );
        let hi = Tuple(
            ix.order
                .iter()
                .map(|at| match b.get(at) {
                    BoundValue::Concrete(v) => v,
                    _ => Value(u32::MAX),
                })
                .collect(),
        );
        ix.set.range(lo..=hi).map(move |k| ix.unpermute(k))
    }

    /// Whether `[a, b]` under `ell` contains any tuple.
    pub fn range_nonempty(
        &self,
        index_pos: usize,
        a: &BoundTuple,
        b: &BoundTuple,
    ) -> bool {
        self.range_search_at(index_pos, a, b).next().is_some()
    }
}

/// Oracle for [`Relation::range_search`]: linear filter over the primary order,
/// no ordered navigation. Also the execution primitive of scan mode.
pub fn primitive_search_scan<'r>(
    r: &'r Relation,
    pred: &[(AttrId, Value)],
) -> impl Iterator<Item = Tuple> + 'r {
    let pred = pred.to_vec();
    r.iter()
        .filter(move |t| pred.iter().all(|&(attr, v)| t.get(attr) == v))
}

/// Interns strings to dense ordinals in first-seen order.
#[derive(Debug, Default, Clone)]
pub struct SymbolTable {
    map: HashMap<String, Value>,
    syms: Vec<String>,
}

impl SymbolTable {
    pub fn new() -> SymbolTable {
        SymbolTable::default()
    }

    pub fn intern(&mut self, s: &str) -> Value {
        if let Some(&v) = self.map.get(s) {
            return v;
        }
        let v = Value(self.syms.len() as u32);
        self.syms.push(s.to_string());
        self.map.insert(s.to_string(), v);
        v
    }

    pub fn lookup(&self, s: &str) -> Option<Value> {
        self.map.get(s).copied()
    }

    pub fn resolve(&self, v: Value) -> &str {
        &self.syms[v.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.syms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.syms.is_empty()
    }
}

/// Loads tab-separated facts, interning every field. Returns the number of
/// fresh tuples.
pub fn read_facts_tsv<R: BufRead>(
    reader: R,
    symbols: &mut SymbolTable,
    rel: &mut Relation,
) -> Result<u64, StorageError> {
    let mut fresh = 0u64;
    for line in reader.lines() {
        let line = line.map_err(|source| StorageError::Io {
            path: PathBuf::from(format!("<{}>", rel.name())),
            source,
        })?;
        if line.is_empty() {
            continue;
        }
        let values: Vec<Value> = line.split('\t').map(|f| symbols.intern(f)).collect();
        if values.len() != rel.arity() {
            return Err(StorageError::ArityMismatch {
                relation: rel.name().to_string(),
                expected: rel.arity(),
                got: values.len(),
            });
        }
        if rel.insert(Tuple::new(values))? {
            fresh += 1;
        }
    }
    Ok(fresh)
}

/// Writes the relation as TSV, rows in primary order.
pub fn write_facts_tsv<W: Write>(
    mut writer: W,
    symbols: &SymbolTable,
    rel: &Relation,
) -> std::io::Result<()> {
    for t in rel.iter() {
        let row = t
            .values()
            .iter()
            .map(|&v| symbols.resolve(v))
            .collect::<Vec<_>>()
            .join("\t");
        writeln!(writer, "{row}")?;
    }
    Ok(())
}
