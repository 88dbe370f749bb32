//! Rewirers: alternate graphs interleaved with the base graph during message
//! passing, plus the greedy alignment that places a Cayley expander over the
//! salient pairs of a base graph.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cayley::trimmed_cayley;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodePair};

/// Which graph a message-passing layer propagates over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LayerGraph {
    Base,
    Rewired,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RewirePlan {
    pub base: Graph,
    pub rewired: Graph,
    pub schedule: Vec<LayerGraph>,
}

impl RewirePlan {
    fn interleaved(base: &Graph, rewired: Graph, layers: usize) -> Self {
        debug_assert_eq!(base.num_nodes(), rewired.num_nodes());
        RewirePlan {
            base: base.clone(),
            rewired,
            schedule: interleave_schedule(layers),
        }
    }

    pub fn layers(&self) -> usize {
        self.schedule.len()
    }

    pub fn graph_for_layer(&self, layer: usize) -> &Graph {
        match self.schedule[layer] {
            LayerGraph::Base => &self.base,
            LayerGraph::Rewired => &self.rewired,
        }
    }
}

/// `Base, Rewired, Base, ...` of the given length.
pub fn interleave_schedule(layers: usize) -> Vec<LayerGraph> {
    (0..layers)
        .map(|l| {
            if l % 2 == 0 {
                LayerGraph::Base
            } else {
                LayerGraph::Rewired
            }
        })
        .collect()
}

/// Injective map from nodes of one graph onto nodes of another.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alignment {
    pub mapping: Vec<usize>,
}

impl Alignment {
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.mapping.len()];
        for (i, &j) in self.mapping.iter().enumerate() {
            inv[j] = i;
        }
        inv
    }

    /// Edges of `g1` whose images are edges of `g2`.
    pub fn common_edges(&self, g1: &Graph, g2: &Graph) -> usize {
        g1.edges()
            .iter()
            .filter(|&&(u, v)| g2.has_edge(self.mapping[u], self.mapping[v]))
            .count()
    }
}

pub fn rewirer_base_only(g: &Graph, layers: usize) -> RewirePlan {
    RewirePlan {
        base: g.clone(),
        rewired: g.clone(),
        schedule: vec![LayerGraph::Base; layers],
    }
}

/// Trimmed Cayley expander placed on the nodes by a seeded uniform permutation.
pub fn rewirer_cayley(g: &Graph, layers: usize, seed: u64) -> Result<RewirePlan> {
    let rewired = random_cayley_placement(g.num_nodes(), seed)?;
    Ok(RewirePlan::interleaved(g, rewired, layers))
}

pub fn random_cayley_placement(num_nodes: usize, seed: u64) -> Result<Graph> {
    let cayley = trimmed_cayley(num_nodes)?;
    let mut perm: Vec<usize> = (0..num_nodes).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    cayley.graph.relabel(&perm)
}

/// Greedy common-edge alignment of `g1` onto `g2`.
///
/// Outer picks take the first unassigned `g1` node in descending-degree order
/// (ties by index) and the first unassigned `g2` node by index. Each outer pick
/// then walks the unassigned neighbours of the `g1` node in index order, pairing
/// each with the lowest unassigned neighbour of the `g2` node; when none is left
/// the `g1` neighbour stays unassigned for a later outer pick.
pub fn greedy_align(g1: &Graph, g2: &Graph) -> Result<Alignment> {
    let n = g1.num_nodes();
    if g2.num_nodes() != n {
        return Err(Error::SizeMismatch(format!(
            "cannot align graphs with {n} and {} nodes",
            g2.num_nodes()
        )));
    }
    let mut outer_order: Vec<usize> = (0..n).collect();
    outer_order.sort_by_key(|&u| (std::cmp::Reverse(g1.degree(u)), u));

    let mut mapping = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    let mut next_free = 0;
    for &n1 in &outer_order {
        if mapping[n1] != usize::MAX {
            continue;
        }
        while taken[next_free] {
            next_free += 1;
        }
        let n2 = next_free;
        mapping[n1] = n2;
        taken[n2] = true;

        let targets = g2.neighbours(n2);
        let mut cursor = 0;
        for &m1 in g1.neighbours(n1) {
            if mapping[m1] != usize::MAX {
                continue;
            }
            while cursor < targets.len() && taken[targets[cursor]] {
                cursor += 1;
            }
            let Some(&m2) = targets.get(cursor) else {
                break;
            };
            mapping[m1] = m2;
            taken[m2] = true;
        }
    }
    Ok(Alignment { mapping })
}

/// Cayley expander aligned over the distance-`d` pairs of `g`.
pub fn rewirer_aligned_cayley(g: &Graph, d: usize, layers: usize) -> Result<RewirePlan> {
    let rewired = aligned_cayley_placement(g, d)?;
    Ok(RewirePlan::interleaved(g, rewired, layers))
}

pub fn aligned_cayley_placement(g: &Graph, d: usize) -> Result<Graph> {
    if !g.is_connected() {
        return Err(Error::Disconnected(
            "aligned Cayley rewiring needs a connected base graph".into(),
        ));
    }
    let n = g.num_nodes();
    let salient = Graph::new(n, g.pairs_at_distance(d)?)?;
    let cayley = trimmed_cayley(n)?;
    let alignment = greedy_align(&salient, &cayley.graph)?;
    // Cayley node `alignment.mapping[i]` sits on base node `i`.
    cayley.graph.relabel(&alignment.inverse())
}

pub fn rewirer_distance_d_pairs(g: &Graph, d: usize, layers: usize) -> Result<RewirePlan> {
    let rewired = Graph::new(g.num_nodes(), g.pairs_at_distance(d)?)?;
    Ok(RewirePlan::interleaved(g, rewired, layers))
}

pub fn rewirer_fully_connected(g: &Graph, layers: usize) -> RewirePlan {
    RewirePlan::interleaved(g, Graph::complete(g.num_nodes()), layers)
}

/// Node sets per colour (ascending colour id, members ascending), with the
/// uncoloured nodes appended as a final cluster when requested.
pub fn colour_clusters(g: &Graph, include_uncoloured: bool) -> Result<Vec<Vec<usize>>> {
    let colours = g.colours().ok_or(Error::MissingColours)?;
    let mut ids: Vec<u32> = colours.iter().flatten().copied().collect();
    ids.sort_unstable();
    ids.dedup();
    let mut clusters: Vec<Vec<usize>> = ids
        .iter()
        .map(|&c| (0..g.num_nodes()).filter(|&u| colours[u] == Some(c)).collect())
        .collect();
    if include_uncoloured {
        let rest: Vec<usize> = (0..g.num_nodes()).filter(|&u| colours[u].is_none()).collect();
        if !rest.is_empty() {
            clusters.push(rest);
        }
    }
    Ok(clusters)
}

pub fn cayley_clusters_graph(g: &Graph, include_uncoloured: bool) -> Result<Graph> {
    let mut edges = Vec::new();
    for cluster in colour_clusters(g, include_uncoloured)? {
        let cayley = trimmed_cayley(cluster.len())?;
        edges.extend(
            cayley
                .graph
                .edges()
                .iter()
                .map(|&(a, b)| (cluster[a], cluster[b])),
        );
    }
    Graph::new(g.num_nodes(), edges)
}

pub fn rewirer_cayley_clusters(
    g: &Graph,
    layers: usize,
    include_uncoloured: bool,
) -> Result<RewirePlan> {
    let rewired = cayley_clusters_graph(g, include_uncoloured)?;
    Ok(RewirePlan::interleaved(g, rewired, layers))
}

pub fn fully_connected_clusters_graph(g: &Graph, include_uncoloured: bool) -> Result<Graph> {
    let mut edges = Vec::new();
    for cluster in colour_clusters(g, include_uncoloured)? {
        for (i, &u) in cluster.iter().enumerate() {
            edges.extend(cluster[i + 1..].iter().map(|&v| (u, v)));
        }
    }
    Graph::new(g.num_nodes(), edges)
}

pub fn rewirer_fully_connected_clusters(
    g: &Graph,
    layers: usize,
    include_uncoloured: bool,
) -> Result<RewirePlan> {
    let rewired = fully_connected_clusters_graph(g, include_uncoloured)?;
    Ok(RewirePlan::interleaved(g, rewired, layers))
}

/// How many of `target_pairs` are edges of `rewired`.
pub fn captured_pairs(rewired: &Graph, target_pairs: &[NodePair]) -> usize {
    target_pairs
        .iter()
        .filter(|&&(u, v)| rewired.has_edge(u, v))
        .count()
}

/// Named rewirer with its parameters, as selected from configs and the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rewirer {
    BaseGraphOnly,
    Cayley,
    AlignedCayley,
    DistanceDPairs,
    FullyConnected,
    CayleyClusters,
    FullyConnectedClusters,
}

impl Rewirer {
    pub const ALL: [Rewirer; 7] = [
        Rewirer::BaseGraphOnly,
        Rewirer::Cayley,
        Rewirer::AlignedCayley,
        Rewirer::DistanceDPairs,
        Rewirer::FullyConnected,
        Rewirer::CayleyClusters,
        Rewirer::FullyConnectedClusters,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rewirer::BaseGraphOnly => "base-graph-only",
            Rewirer::Cayley => "cayley",
            Rewirer::AlignedCayley => "aligned-cayley",
            Rewirer::DistanceDPairs => "distance-d-pairs",
            Rewirer::FullyConnected => "fully-connected",
            Rewirer::CayleyClusters => "cayley-clusters",
            Rewirer::FullyConnectedClusters => "fully-connected-clusters",
        }
    }

    pub fn needs_colours(self) -> bool {
        matches!(self, Rewirer::CayleyClusters | Rewirer::FullyConnectedClusters)
    }

    pub fn needs_distance(self) -> bool {
        matches!(self, Rewirer::AlignedCayley | Rewirer::DistanceDPairs)
    }

    /// Builds the plan. `d` is used by distance-based rewirers, `seed` by the
    /// random Cayley placement; cluster rewirers use their default uncoloured
    /// handling.
    pub fn plan(self, g: &Graph, layers: usize, d: usize, seed: u64) -> Result<RewirePlan> {
        match self {
            Rewirer::BaseGraphOnly => Ok(rewirer_base_only(g, layers)),
            Rewirer::Cayley => rewirer_cayley(g, layers, seed),
            Rewirer::AlignedCayley => rewirer_aligned_cayley(g, d, layers),
            Rewirer::DistanceDPairs => rewirer_distance_d_pairs(g, d, layers),
            Rewirer::FullyConnected => Ok(rewirer_fully_connected(g, layers)),
            Rewirer::CayleyClusters => rewirer_cayley_clusters(g, layers, false),
            Rewirer::FullyConnectedClusters => rewirer_fully_connected_clusters(g, layers, true),
        }
    }
}

impl fmt::Display for Rewirer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rewirer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Rewirer::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown rewirer {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Colour;

    fn coloured(n: usize, edges: &[(usize, usize)], colours: Vec<Option<Colour>>) -> Graph {
        Graph::new(n, edges.iter().copied())
            .unwrap()
            .with_colours(colours)
            .unwrap()
    }

    #[test]
    fn base_only_plans() {
        let p = rewirer_base_only(&Graph::path(4), 5);
        assert_eq!(p.schedule, vec![LayerGraph::Base; 5]);
        assert_eq!(rewirer_base_only(&Graph::empty(0), 2).layers(), 2);
        assert_eq!(rewirer_base_only(&Graph::complete(3), 1).schedule, vec![LayerGraph::Base]);
    }

    #[test]
    fn schedule_alternates_from_base() {
        use LayerGraph::*;
        assert_eq!(interleave_schedule(5), vec![Base, Rewired, Base, Rewired, Base]);
    }

    #[test]
    fn cayley_rewirer() {
        let g = Graph::path(6);
        let p = rewirer_cayley(&g, 5, 7).unwrap();
        assert_eq!(p.rewired.num_nodes(), 6);
        assert!(p.rewired.is_connected());
        assert_eq!(p.rewired, rewirer_cayley(&g, 5, 7).unwrap().rewired);
        assert_eq!(rewirer_cayley(&Graph::empty(1), 5, 0).unwrap().rewired.num_nodes(), 1);
    }

    #[test]
    fn align_examples() {
        let tri = Graph::complete(3);
        let a = greedy_align(&tri, &tri).unwrap();
        assert_eq!(a.common_edges(&tri, &tri), 3);

        let a = greedy_align(&Graph::path(3), &Graph::empty(3)).unwrap();
        let mut m = a.mapping.clone();
        m.sort();
        assert_eq!(m, vec![0, 1, 2]);
        assert_eq!(a.common_edges(&Graph::path(3), &Graph::empty(3)), 0);

        let c6 = Graph::cycle(6);
        assert!(greedy_align(&c6, &c6).unwrap().common_edges(&c6, &c6) >= 5);

        assert!(greedy_align(&tri, &Graph::path(4)).is_err());
    }

    #[test]
    fn align_skips_when_target_has_no_free_neighbour() {
        // Star centre maps onto a path endpoint with a single neighbour.
        let star = Graph::new(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let a = greedy_align(&star, &Graph::path(4)).unwrap();
        assert_eq!(a.mapping, vec![0, 1, 2, 3]);
    }

    #[test]
    fn aligned_cayley_examples() {
        let path = Graph::path(6);
        let p = rewirer_aligned_cayley(&path, 5, 5).unwrap();
        assert!(captured_pairs(&p.rewired, &[(0, 5)]) <= 1);
        assert_eq!(p.rewired.num_edges(), trimmed_cayley(6).unwrap().graph.num_edges());

        // No distance-7 pairs: the Cayley graph is placed in some relabelled form.
        let p = rewirer_aligned_cayley(&path, 7, 5).unwrap();
        assert_eq!(p.rewired.num_edges(), trimmed_cayley(6).unwrap().graph.num_edges());

        assert!(rewirer_aligned_cayley(&Graph::empty(3), 2, 5).is_err());
    }

    #[test]
    fn distance_and_clique_rewirers() {
        let p = rewirer_distance_d_pairs(&Graph::cycle(4), 2, 5).unwrap();
        assert_eq!(p.rewired.edges(), &[(0, 2), (1, 3)]);
        assert_eq!(rewirer_distance_d_pairs(&Graph::complete(3), 2, 5).unwrap().rewired.num_edges(), 0);
        assert_eq!(rewirer_distance_d_pairs(&Graph::path(6), 5, 5).unwrap().rewired.edges(), &[(0, 5)]);

        assert_eq!(rewirer_fully_connected(&Graph::path(3), 5).rewired.num_edges(), 3);
        assert_eq!(rewirer_fully_connected(&Graph::empty(1), 5).rewired.num_edges(), 0);
        assert_eq!(rewirer_fully_connected(&Graph::path(10), 5).rewired.num_edges(), 45);
    }

    #[test]
    fn cayley_clusters_examples() {
        let g = coloured(6, &[(0, 1)], vec![Some(2); 6]);
        let p = rewirer_cayley_clusters(&g, 5, false).unwrap();
        assert_eq!(p.rewired.edges(), trimmed_cayley(6).unwrap().graph.edges());

        let g = coloured(3, &[], vec![Some(0), Some(1), Some(1)]);
        let r = cayley_clusters_graph(&g, false).unwrap();
        assert_eq!(r.edges(), &[(1, 2)]);

        let colours = vec![Some(0), Some(1), Some(0), Some(1), Some(0), Some(1), Some(1), None, None];
        let g = coloured(9, &[(0, 1), (1, 2)], colours.clone());
        let r = cayley_clusters_graph(&g, false).unwrap();
        for &(u, v) in r.edges() {
            assert_eq!(colours[u], colours[v]);
            assert!(colours[u].is_some());
        }
        let comps: Vec<_> = r
            .connected_components()
            .into_iter()
            .filter(|c| colours[c[0]].is_some())
            .collect();
        assert_eq!(comps.len(), 2);

        assert!(matches!(
            rewirer_cayley_clusters(&Graph::path(3), 5, false),
            Err(Error::MissingColours)
        ));
    }

    #[test]
    fn fully_connected_clusters_examples() {
        let colours = vec![Some(0), Some(0), Some(0), Some(1), Some(1), Some(1), Some(1), None, None];
        let g = coloured(9, &[], colours);
        assert_eq!(fully_connected_clusters_graph(&g, true).unwrap().num_edges(), 10);

        let g = coloured(5, &[], vec![None; 5]);
        assert_eq!(fully_connected_clusters_graph(&g, true).unwrap(), Graph::complete(5));
        assert_eq!(fully_connected_clusters_graph(&g, false).unwrap().num_edges(), 0);
        assert!(rewirer_fully_connected_clusters(&Graph::path(2), 5, true).is_err());
    }

    #[test]
    fn captured_pairs_examples() {
        let target = vec![(0, 2), (1, 3)];
        let g = Graph::new(4, target.iter().copied()).unwrap();
        assert_eq!(captured_pairs(&g, &target), 2);
        assert_eq!(captured_pairs(&Graph::path(4), &target), 0);
    }

    #[test]
    fn rewirer_names_roundtrip() {
        for r in Rewirer::ALL {
            assert_eq!(r.name().parse::<Rewirer>().unwrap(), r);
        }
        assert!("nope".parse::<Rewirer>().is_err());
    }
}
