//! Core vocabulary for index selection: searches (attribute sets), lexicographic
//! orders, chains, and chain covers.
//!
//! A *search* abstracts an equality lookup pattern: the set of attribute ids that
//! are fixed to values. A lex order `x ≺ y ≺ z` answers a search `s` iff the first
//! `|s|` attributes of the order are exactly `s` — the tuples matching the lookup
//! then form one contiguous run of the order.

use std::fmt;

/// Attribute ids are dense per-relation positions `0..arity`.
pub type AttrId = u32;

/// Hard cap on relation arity; attribute sets are machine-word bitsets.
pub const MAX_ATTRS: u32 = 64;

/// A set of attribute ids, stored as a bitset (bit `i` ⇔ attribute `i`).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Search(u64);

impl Search {
    pub const EMPTY: Search = Search(0);

    pub fn from_bits(bits: u64) -> Search {
        Search(bits)
    }

    pub fn from_ids<I: IntoIterator<Item = AttrId>>(ids: I) -> Search {
        let mut bits = 0u64;
        for id in ids {
            assert!(id < MAX_ATTRS, "attribute id {id} out of range");
            bits |= 1 << id;
        }
        Search(bits)
    }

    pub fn single(id: AttrId) -> Search {
        Search::from_ids([id])
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// Number of attributes in the set.
    pub fn card(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, id: AttrId) -> bool {
        id < MAX_ATTRS && self.0 & (1 << id) != 0
    }

    pub fn is_subset_of(self, other: Search) -> bool {
        self.0 & !other.0 == 0
    }

    /// Proper subset: `self ⊂ other`.
    pub fn is_strict_subset_of(self, other: Search) -> bool {
        self.0 != other.0 && self.is_subset_of(other)
    }

    pub fn union(self, other: Search) -> Search {
        Search(self.0 | other.0)
    }

    /// Set difference `self − other`.
    pub fn minus(self, other: Search) -> Search {
        Search(self.0 & !other.0)
    }

    /// Attribute ids in ascending order.
    pub fn iter_ids(self) -> impl Iterator<Item = AttrId> {
        let bits = self.0;
        (0..MAX_ATTRS).filter(move |id| bits & (1 << id) != 0)
    }
}

/// Canonical order: by cardinality, then by bitset value. Every deterministic
/// tie-break in the selection pipeline reduces to this.
impl Ord for Search {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.card(), self.0).cmp(&(other.card(), other.0))
    }
}

impl PartialOrd for Search {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Search {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, id) in self.iter_ids().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{id}")?;
        }
        write!(f, "}}")
    }
}

/// A deduplicated set of searches, kept in canonical order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchSet {
    searches: Vec<Search>,
}

impl SearchSet {
    pub fn new() -> SearchSet {
        SearchSet::default()
    }

    pub fn insert(&mut self, s: Search) {
        if let Err(pos) = self.searches.binary_search(&s) {
            self.searches.insert(pos, s);
        }
    }

    pub fn contains(&self, s: Search) -> bool {
        self.searches.binary_search(&s).is_ok()
    }

    pub fn len(&self) -> usize {
        self.searches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.searches.is_empty()
    }

    /// Searches in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = Search> + '_ {
        self.searches.iter().copied()
    }

    pub fn as_slice(&self) -> &[Search] {
        &self.searches
    }

    /// Union of all attribute ids mentioned by any search.
    pub fn attr_universe(&self) -> Search {
        self.searches
            .iter()
            .fold(Search::EMPTY, |acc, s| acc.union(*s))
    }
}

impl FromIterator<Search> for SearchSet {
    fn from_iter<I: IntoIterator<Item = Search>>(iter: I) -> SearchSet {
        let mut set = SearchSet::new();
        for s in iter {
            set.insert(s);
        }
        set
    }
}

/// A lexicographic order: a sequence of distinct attribute ids. May be partial
/// (shorter than the relation arity). Never empty, hence no `is_empty`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[allow(clippy::len_without_is_empty)]
pub struct LexOrder {
    attrs: Vec<AttrId>,
}

impl LexOrder {
    pub fn new(attrs: Vec<AttrId>) -> LexOrder {
        let mut seen = Search::EMPTY;
        for &a in &attrs {
            assert!(a < MAX_ATTRS, "attribute id {a} out of range");
            assert!(!seen.contains(a), "duplicate attribute {a} in lex order");
            seen = seen.union(Search::single(a));
        }
        assert!(!attrs.is_empty(), "lex order must be nonempty");
        LexOrder { attrs }
    }

    /// The identity order `0 ≺ 1 ≺ … ≺ arity−1`.
    pub fn identity(arity: u32) -> LexOrder {
        LexOrder::new((0..arity).collect())
    }

    pub fn len(&self) -> usize {
        self.attrs.len()
    }

    pub fn attrs(&self) -> &[AttrId] {
        &self.attrs
    }

    pub fn iter(&self) -> impl Iterator<Item = AttrId> + '_ {
        self.attrs.iter().copied()
    }

    /// The set of the first `k` attributes (`k` may be 0 or the full length).
    pub fn prefix_set(&self, k: usize) -> Search {
        assert!(k <= self.attrs.len(), "prefix length {k} exceeds order");
        Search::from_ids(self.attrs[..k].iter().copied())
    }

    pub fn attr_set(&self) -> Search {
        self.prefix_set(self.attrs.len())
    }

    /// Whether this order answers `s`: its `|s|`-prefix is exactly `s`.
    pub fn covers(&self, s: Search) -> bool {
        s.card() <= self.attrs.len() && self.prefix_set(s.card()) == s
    }

    /// Whether `prefix` is a sequence prefix of this order.
    pub fn has_prefix(&self, prefix: &LexOrder) -> bool {
        self.attrs.len() >= prefix.attrs.len()
            && self.attrs[..prefix.attrs.len()] == prefix.attrs[..]
    }

    /// Extend to full width `arity` by appending the missing attributes in
    /// ascending id order. Tuple comparison under the extension refines this
    /// order, so any search answered here is still answered.
    pub fn extended(&self, arity: u32) -> LexOrder {
        let have = self.attr_set();
        let mut attrs = self.attrs.clone();
        attrs.extend((0..arity).filter(|&a| !have.contains(a)));
        LexOrder::new(attrs)
    }
}

impl fmt::Debug for LexOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, a) in self.attrs.iter().enumerate() {
            if n > 0 {
                write!(f, "≺")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// A deduplicated collection of lex orders (insertion order preserved).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IndexSet {
    orders: Vec<LexOrder>,
}

impl IndexSet {
    pub fn new() -> IndexSet {
        IndexSet::default()
    }

    pub fn insert(&mut self, ell: LexOrder) {
        if !self.orders.contains(&ell) {
            self.orders.push(ell);
        }
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &LexOrder> {
        self.orders.iter()
    }

    pub fn get(&self, i: usize) -> &LexOrder {
        &self.orders[i]
    }

    pub fn position(&self, ell: &LexOrder) -> Option<usize> {
        self.orders.iter().position(|o| o == ell)
    }

    /// l-cover: every search in `q` is answered by some order.
    pub fn covers(&self, q: &SearchSet) -> bool {
        q.iter().all(|s| self.orders.iter().any(|o| o.covers(s)))
    }
}

impl FromIterator<LexOrder> for IndexSet {
    fn from_iter<I: IntoIterator<Item = LexOrder>>(iter: I) -> IndexSet {
        let mut set = IndexSet::new();
        for ell in iter {
            set.insert(ell);
        }
        set
    }
}

/// A chain: searches strictly increasing under ⊂. Never empty.
#[derive(Clone, Debug, PartialEq, Eq)]
#[allow(clippy::len_without_is_empty)]
pub struct Chain {
    links: Vec<Search>,
}

impl Chain {
    pub fn new(links: Vec<Search>) -> Chain {
        assert!(!links.is_empty(), "chain must be nonempty");
        for w in links.windows(2) {
            assert!(
                w[0].is_strict_subset_of(w[1]),
                "chain links must be strictly increasing: {:?} ⊄ {:?}",
                w[0],
                w[1]
            );
        }
        Chain { links }
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn links(&self) -> &[Search] {
        &self.links
    }

    pub fn iter(&self) -> impl Iterator<Item = Search> + '_ {
        self.links.iter().copied()
    }

    /// The largest (last) search of the chain.
    pub fn top(&self) -> Search {
        *self.links.last().unwrap()
    }

    pub fn contains(&self, s: Search) -> bool {
        self.links.contains(&s)
    }
}

/// A set of chains; produced by chain-cover construction, where it partitions
/// the covered search set.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChainCover {
    chains: Vec<Chain>,
}

impl ChainCover {
    pub fn new(chains: Vec<Chain>) -> ChainCover {
        ChainCover { chains }
    }

    pub fn len(&self) -> usize {
        self.chains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }

    pub fn chains(&self) -> &[Chain] {
        &self.chains
    }

    pub fn iter(&self) -> impl Iterator<Item = &Chain> {
        self.chains.iter()
    }

    /// c-cover: every search in `q` lies on some chain.
    pub fn covers(&self, q: &SearchSet) -> bool {
        q.iter()
            .all(|s| self.chains.iter().any(|c| c.contains(s)))
    }

    /// Whether the chains partition `q` exactly: disjoint, and their union is `q`.
    pub fn is_partition_of(&self, q: &SearchSet) -> bool {
        let mut seen = SearchSet::new();
        let mut total = 0usize;
        for chain in &self.chains {
            for s in chain.iter() {
                seen.insert(s);
                total += 1;
            }
        }
        total == seen.len() && seen == q.clone()
    }
}
