//! Minimum order selection: the smallest set of lex orders answering every
//! search of a relation.
//!
//! The connection to chains: the searches answered by one order ℓ are exactly
//! the prefix sets of ℓ present in the search set — a chain under ⊂. Conversely
//! any chain `s₁ ⊂ s₂ ⊂ … ⊂ sₖ` yields an order answering all of it, by
//! concatenating the blocks `s₁, s₂−s₁, …, sₖ−sₖ₋₁` (γ below). So a minimum
//! chain cover of the search set gives a minimum index set, and chain covers
//! are polynomial via matching ([`crate::matching`]).

use crate::matching::min_chain_cover;
use crate::search::{Chain, ChainCover, IndexSet, LexOrder, Search, SearchSet};
use itertools::Itertools;
use std::collections::BTreeMap;
use thiserror::Error;

/// Maps a chain to an order answering every link: the attributes of `s₁`
/// ascending, then `s₂ − s₁` ascending, and so on. Ascending id order within a
/// block is the canonical choice among the equally valid permutations.
pub fn gamma0(chain: &Chain) -> LexOrder {
    let mut attrs = Vec::with_capacity(chain.top().card());
    let mut prev = Search::EMPTY;
    for link in chain.iter() {
        attrs.extend(link.minus(prev).iter_ids());
        prev = link;
    }
    LexOrder::new(attrs)
}

/// Maps a chain cover to its index set, one order per chain. For a cover that
/// partitions the search set the orders are pairwise distinct, so the index
/// set has exactly as many orders as the cover has chains.
pub fn gamma1(cover: &ChainCover) -> IndexSet {
    cover.iter().map(gamma0).collect()
}

/// The searches of `q` answered by `ell`, as a chain (they are nested prefix
/// sets). `None` when `ell` answers nothing in `q`.
pub fn alpha0(ell: &LexOrder, q: &SearchSet) -> Option<Chain> {
    let mut links: Vec<Search> = q.iter().filter(|&s| ell.covers(s)).collect();
    links.sort();
    if links.is_empty() {
        None
    } else {
        Some(Chain::new(links))
    }
}

/// The chains answered by each order of `l`. Chains may share searches; this is
/// a cover in the membership sense, not necessarily a partition.
pub fn alpha1(l: &IndexSet, q: &SearchSet) -> ChainCover {
    ChainCover::new(l.iter().filter_map(|ell| alpha0(ell, q)).collect())
}

/// Result of index selection for one search set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MospSolution {
    pub searches: SearchSet,
    pub cover: ChainCover,
    pub indexes: IndexSet,
    /// For each search, the position in `indexes` of the order answering it.
    pub assignment: BTreeMap<Search, usize>,
}

impl MospSolution {
    pub fn index_count(&self) -> usize {
        self.indexes.len()
    }

    pub fn order_for(&self, s: Search) -> Option<&LexOrder> {
        self.assignment.get(&s).map(|&i| self.indexes.get(i))
    }

    fn from_cover(searches: SearchSet, cover: ChainCover) -> MospSolution {
        let indexes = gamma1(&cover);
        let mut assignment = BTreeMap::new();
        for chain in cover.iter() {
            let pos = indexes
                .position(&gamma0(chain))
                .expect("gamma1 contains the image of every chain");
            for s in chain.iter() {
                assignment.insert(s, pos);
            }
        }
        MospSolution {
            searches,
            cover,
            indexes,
            assignment,
        }
    }
}

/// Minimum index selection: a smallest index set answering every search in `q`,
/// with the search→order assignment. Expects empty searches to have been
/// stripped (they need no index).
pub fn min_index(q: &SearchSet) -> MospSolution {
    debug_assert!(q.iter().all(|s| !s.is_empty()), "empty search in MOSP input");
    MospSolution::from_cover(q.clone(), min_chain_cover(q))
}

/// Baseline selection: one order per search (the search's attributes in
/// ascending id order), i.e. the cover by singleton chains.
pub fn naive_index(q: &SearchSet) -> MospSolution {
    debug_assert!(q.iter().all(|s| !s.is_empty()), "empty search in MOSP input");
    let cover = ChainCover::new(q.iter().map(|s| Chain::new(vec![s])).collect());
    MospSolution::from_cover(q.clone(), cover)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MospError {
    #[error("attribute count {count} outside supported range 1..={limit}")]
    AttrCountOutOfRange { count: usize, limit: usize },
    #[error("too many searches for brute force: {count} (limit {limit})")]
    TooManySearches { count: usize, limit: usize },
}

/// Number of distinct lex orders over `m` attributes (all nonempty prefix
/// lengths): Σᵢ₌₁..ₘ C(m,i)·i! = Σⱼ₌₀..ₘ₋₁ m!/j!. Exact for 1 ≤ m ≤ 20, which
/// stays within u128.
pub fn enumerate_lex_count(m: u32) -> Result<u128, MospError> {
    if m == 0 || m > 20 {
        return Err(MospError::AttrCountOutOfRange {
            count: m as usize,
            limit: 20,
        });
    }
    let fact: u128 = (1..=m as u128).product();
    let mut denom: u128 = 1;
    let mut total: u128 = 0;
    for j in 0..m as u128 {
        if j > 0 {
            denom *= j;
        }
        total += fact / denom;
    }
    Ok(total)
}

const BF_MAX_ATTRS: usize = 4;
const BF_MAX_SEARCHES: usize = 8;

/// Brute-force minimum index set size: enumerates every lex order over the
/// attributes of `q`, then tries k-combinations of orders in increasing k until
/// one answers all of `q`. Exponential; gated to tiny instances. Serves as the
/// optimality oracle for [`min_index`].
pub fn brute_force_min_cover_size(q: &SearchSet) -> Result<usize, MospError> {
    let universe: Vec<u32> = q.attr_universe().iter_ids().collect();
    if universe.len() > BF_MAX_ATTRS {
        return Err(MospError::AttrCountOutOfRange {
            count: universe.len(),
            limit: BF_MAX_ATTRS,
        });
    }
    if q.len() > BF_MAX_SEARCHES {
        return Err(MospError::TooManySearches {
            count: q.len(),
            limit: BF_MAX_SEARCHES,
        });
    }
    if q.is_empty() {
        return Ok(0);
    }

    let searches: Vec<Search> = q.iter().collect();
    let full: u32 = (1 << searches.len()) - 1;

    // Coverage bitmask (over q) of every order; an order is interchangeable
    // with its mask, so dedup and keep only the maximal ones.
    let mut masks: Vec<u32> = Vec::new();
    for k in 1..=universe.len() {
        for perm in universe.iter().copied().permutations(k) {
            let ell = LexOrder::new(perm);
            let mask = searches
                .iter()
                .enumerate()
                .filter(|&(_, &s)| ell.covers(s))
                .fold(0u32, |m, (i, _)| m | 1 << i);
            if mask != 0 && !masks.contains(&mask) {
                masks.push(mask);
            }
        }
    }
    let all = masks.clone();
    masks.retain(|&m| !all.iter().any(|&other| other != m && m & other == m));

    for k in 1..=masks.len() {
        let covered = masks
            .iter()
            .combinations(k)
            .any(|combo| combo.into_iter().fold(0u32, |acc, &m| acc | m) == full);
        if covered {
            return Ok(k);
        }
    }
    // Every search is answered by at least one order (its own attributes in
    // any sequence), so the loop above always returns.
    unreachable!("search set not coverable by its own attribute orders")
}
