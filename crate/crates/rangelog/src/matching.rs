//! Minimum chain cover of a search set, via maximum bipartite matching.
//!
//! Searches ordered by ⊂ form a poset. By Dilworth's theorem the minimum number
//! of chains covering the poset equals the maximum antichain, and the minimum
//! cover is obtained from a maximum matching in the bipartite graph that has one
//! vertex per search on each side and an edge (u, v) whenever u ⊂ v: matched
//! edges are the consecutive links of the chains, so the cover has
//! `|q| − |matching|` chains.

use crate::search::{Chain, ChainCover, Search, SearchSet};
use thiserror::Error;

/// Inputs past this size make subset enumeration intractable.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("instance too large for brute force: {size} searches (limit {limit})")]
pub struct InstanceTooLarge {
    pub size: usize,
    pub limit: usize,
}

/// Bipartite subset graph over a search set. Both sides share the same vertex
/// list (the searches in canonical order); `adj[u]` lists the right vertices `v`
/// with `verts[u] ⊂ verts[v]`, ascending.
#[derive(Debug, Clone)]
pub struct BipartiteGraph {
    verts: Vec<Search>,
    adj: Vec<Vec<usize>>,
}

impl BipartiteGraph {
    pub fn size(&self) -> usize {
        self.verts.len()
    }

    pub fn verts(&self) -> &[Search] {
        &self.verts
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    /// All edges as (left, right) index pairs, lexicographically ascending.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, vs)| vs.iter().map(move |&v| (u, v)))
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }
}

pub fn build_subset_graph(q: &SearchSet) -> BipartiteGraph {
    let verts: Vec<Search> = q.iter().collect();
    let adj = verts
        .iter()
        .map(|&u| {
            verts
                .iter()
                .enumerate()
                .filter(|&(_, &v)| u.is_strict_subset_of(v))
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    BipartiteGraph { verts, adj }
}

/// A matching in a [`BipartiteGraph`]; `pair_left[u]` is the right endpoint
/// matched with left vertex `u`, and symmetrically for `pair_right`.
#[derive(Debug, Clone)]
pub struct Matching {
    pair_left: Vec<Option<usize>>,
    pair_right: Vec<Option<usize>>,
}

impl Matching {
    pub fn len(&self) -> usize {
        self.pair_left.iter().flatten().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn right_of(&self, u: usize) -> Option<usize> {
        self.pair_left[u]
    }

    pub fn left_of(&self, v: usize) -> Option<usize> {
        self.pair_right[v]
    }

    /// Matched (left, right) pairs, ascending by left index.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.pair_left
            .iter()
            .enumerate()
            .filter_map(|(u, v)| v.map(|v| (u, v)))
            .collect()
    }
}

const INF: usize = usize::MAX;

/// Hopcroft–Karp maximum matching. Deterministic: vertices and adjacency are
/// scanned in ascending index order, so equal-size matchings always come out
/// the same way.
pub fn max_matching(g: &BipartiteGraph) -> Matching {
    let n = g.size();
    let mut pair_left = vec![None; n];
    let mut pair_right = vec![None; n];
    let mut dist = vec![INF; n];

    // Layered BFS from free left vertices; true if a free right vertex is
    // reachable (i.e. an augmenting path exists).
    fn bfs(
        g: &BipartiteGraph,
        pair_left: &[Option<usize>],
        pair_right: &[Option<usize>],
        dist: &mut [usize],
    ) -> bool {
        let mut queue = std::collections::VecDeque::new();
        for u in 0..g.size() {
            if pair_left[u].is_none() {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = INF;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbors(u) {
                match pair_right[v] {
                    None => found = true,
                    Some(w) if dist[w] == INF => {
                        dist[w] = dist[u] + 1;
                        queue.push_back(w);
                    }
                    Some(_) => {}
                }
            }
        }
        found
    }

    fn dfs(
        g: &BipartiteGraph,
        u: usize,
        pair_left: &mut [Option<usize>],
        pair_right: &mut [Option<usize>],
        dist: &mut [usize],
    ) -> bool {
        for &v in g.neighbors(u) {
            let advance = match pair_right[v] {
                None => true,
                Some(w) => {
                    dist[w] == dist[u] + 1 && dfs(g, w, pair_left, pair_right, dist)
                }
            };
            if advance {
                pair_left[u] = Some(v);
                pair_right[v] = Some(u);
                return true;
            }
        }
        dist[u] = INF;
        false
    }

    while bfs(g, &pair_left, &pair_right, &mut dist) {
        for u in 0..n {
            if pair_left[u].is_none() {
                dfs(g, u, &mut pair_left, &mut pair_right, &mut dist);
            }
        }
    }

    Matching {
        pair_left,
        pair_right,
    }
}

/// Minimum chain cover of `q` under ⊂. Chain heads are the searches with no
/// matched edge pointing into them; each chain then follows matched edges as
/// far as they go. The result partitions `q` into `|q| − |matching|` chains.
pub fn min_chain_cover(q: &SearchSet) -> ChainCover {
    let g = build_subset_graph(q);
    let m = max_matching(&g);
    let mut chains = Vec::new();
    for head in 0..g.size() {
        if m.left_of(head).is_some() {
            continue;
        }
        let mut links = vec![g.verts[head]];
        let mut cur = head;
        while let Some(next) = m.right_of(cur) {
            links.push(g.verts[next]);
            cur = next;
        }
        chains.push(Chain::new(links));
    }
    ChainCover::new(chains)
}

/// Brute-force width of the subset poset: the size of the largest antichain,
/// found by checking every subset of `q`. Independent of the matching machinery;
/// used as the oracle for Dilworth equality.
pub fn max_antichain_bruteforce(q: &SearchSet) -> Result<usize, InstanceTooLarge> {
    const LIMIT: usize = 20;
    let n = q.len();
    if n > LIMIT {
        return Err(InstanceTooLarge {
            size: n,
            limit: LIMIT,
        });
    }
    let verts: Vec<Search> = q.iter().collect();
    // comp[i]: bitmask of the vertices comparable to i (excluding i itself).
    let comp: Vec<u32> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| {
                    j != i
                        && (verts[i].is_subset_of(verts[j]) || verts[j].is_subset_of(verts[i]))
                })
                .fold(0u32, |m, j| m | 1 << j)
        })
        .collect();

    // is_anti[mask] via DP on the lowest set bit.
    let mut best = 0usize;
    let mut is_anti = vec![false; 1 << n];
    if n > 0 {
        is_anti[0] = true;
    }
    for mask in 1usize..(1 << n) {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        if is_anti[rest] && comp[low] as usize & rest == 0 {
            is_anti[mask] = true;
            best = best.max(mask.count_ones() as usize);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::AttrId;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn s(ids: &[AttrId]) -> Search {
        Search::from_ids(ids.iter().copied())
    }

    fn motivating() -> SearchSet {
        // {x}, {x,y}, {x,z}, {x,y,z} with x=0, y=1, z=2.
        [s(&[0]), s(&[0, 1]), s(&[0, 2]), s(&[0, 1, 2])]
            .into_iter()
            .collect()
    }

    #[test]
    fn subset_graph_of_motivating_searches() {
        let g = build_subset_graph(&motivating());
        // Canonical vertex order: {x}, {x,y}, {x,z}, {x,y,z}.
        assert_eq!(g.verts(), &[s(&[0]), s(&[0, 1]), s(&[0, 2]), s(&[0, 1, 2])]);
        let edges: Vec<_> = g.edges().collect();
        assert_eq!(edges, vec![(0, 1), (0, 2), (0, 3), (1, 3), (2, 3)]);
    }

    #[test]
    fn no_edges_between_incomparable_searches() {
        let q: SearchSet = [s(&[0]), s(&[1])].into_iter().collect();
        let g = build_subset_graph(&q);
        assert_eq!(g.edge_count(), 0);
        assert!(max_matching(&g).is_empty());
    }

    #[test]
    fn matching_on_motivating_searches() {
        let g = build_subset_graph(&motivating());
        let m = max_matching(&g);
        assert_eq!(m.len(), 2);
        // {x}–{x,y} and {x,y}–{x,y,z}.
        assert_eq!(m.pairs(), vec![(0, 1), (1, 3)]);
    }

    #[test]
    fn chain_cover_of_motivating_searches() {
        let cover = min_chain_cover(&motivating());
        assert_eq!(cover.len(), 2);
        assert_eq!(
            cover.chains()[0],
            Chain::new(vec![s(&[0]), s(&[0, 1]), s(&[0, 1, 2])])
        );
        assert_eq!(cover.chains()[1], Chain::new(vec![s(&[0, 2])]));
        assert!(cover.is_partition_of(&motivating()));
    }

    #[test]
    fn chain_cover_small_cases() {
        let empty = SearchSet::new();
        assert_eq!(min_chain_cover(&empty).len(), 0);

        let single: SearchSet = [s(&[0, 1])].into_iter().collect();
        let cover = min_chain_cover(&single);
        assert_eq!(cover.len(), 1);
        assert_eq!(cover.chains()[0], Chain::new(vec![s(&[0, 1])]));

        // {x}, {y}, {x,y} needs two chains.
        let q: SearchSet = [s(&[0]), s(&[1]), s(&[0, 1])].into_iter().collect();
        let cover = min_chain_cover(&q);
        assert_eq!(cover.len(), 2);
        assert!(cover.is_partition_of(&q));
    }

    #[test]
    fn antichain_bruteforce_basics() {
        assert_eq!(max_antichain_bruteforce(&SearchSet::new()), Ok(0));
        assert_eq!(max_antichain_bruteforce(&motivating()), Ok(2));

        // All six 2-subsets of four attributes are pairwise incomparable.
        let mut q = SearchSet::new();
        for a in 0..4u32 {
            for b in (a + 1)..4 {
                q.insert(s(&[a, b]));
            }
        }
        assert_eq!(max_antichain_bruteforce(&q), Ok(6));
    }

    #[test]
    fn antichain_bruteforce_gate() {
        let q: SearchSet = (0..21u64).map(|i| Search::from_bits(1 << i)).collect();
        assert_eq!(
            max_antichain_bruteforce(&q),
            Err(InstanceTooLarge {
                size: 21,
                limit: 20
            })
        );
    }

    #[test]
    fn dilworth_equality_random() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..300 {
            let m = rng.gen_range(1..=5u32);
            let count = rng.gen_range(0..=10usize);
            let q: SearchSet = (0..count)
                .map(|_| Search::from_bits(rng.gen_range(1..(1u64 << m))))
                .collect();
            let cover = min_chain_cover(&q);
            assert!(cover.is_partition_of(&q));
            assert_eq!(cover.len(), max_antichain_bruteforce(&q).unwrap());
        }
    }
}
