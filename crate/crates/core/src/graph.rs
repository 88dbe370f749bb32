//! Simple undirected graphs with optional node colours.
//!
//! Graphs are immutable once built. Self-loops and repeated edges passed to
//! the constructors are dropped, so every construction yields a simple graph.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Unordered node pair stored as `(low, high)`.
pub type NodePair = (usize, usize);

/// Colour label attached to a node.
pub type Colour = u32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    num_nodes: usize,
    /// Sorted, `u < v`, no duplicates.
    edges: Vec<NodePair>,
    /// Sorted neighbour lists.
    adj: Vec<Vec<usize>>,
    colours: Option<Vec<Option<Colour>>>,
}

impl Graph {
    /// Builds a graph from an edge iterator. Endpoints must be `< num_nodes`.
    pub fn new<I>(num_nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut list = Vec::new();
        for (u, v) in edges {
            for node in [u, v] {
                if node >= num_nodes {
                    return Err(Error::NodeOutOfRange { node, num_nodes });
                }
            }
            if u != v {
                list.push(ordered(u, v));
            }
        }
        list.sort_unstable();
        list.dedup();
        let mut adj = vec![Vec::new(); num_nodes];
        for &(u, v) in &list {
            adj[u].push(v);
            adj[v].push(u);
        }
        for nbrs in &mut adj {
            nbrs.sort_unstable();
        }
        Ok(Graph {
            num_nodes,
            edges: list,
            adj,
            colours: None,
        })
    }

    pub fn empty(num_nodes: usize) -> Self {
        Graph {
            num_nodes,
            edges: Vec::new(),
            adj: vec![Vec::new(); num_nodes],
            colours: None,
        }
    }

    pub fn complete(num_nodes: usize) -> Self {
        let edges = (0..num_nodes).flat_map(|u| (u + 1..num_nodes).map(move |v| (u, v)));
        Graph::new(num_nodes, edges).expect("complete graph endpoints are in range")
    }

    pub fn path(num_nodes: usize) -> Self {
        let edges = (1..num_nodes).map(|v| (v - 1, v));
        Graph::new(num_nodes, edges).expect("path endpoints are in range")
    }

    pub fn cycle(num_nodes: usize) -> Self {
        let edges = (0..num_nodes).map(|v| (v, (v + 1) % num_nodes));
        Graph::new(num_nodes, edges).expect("cycle endpoints are in range")
    }

    /// Attaches a colour map with one entry per node (`None` = uncoloured).
    pub fn with_colours(mut self, colours: Vec<Option<Colour>>) -> Result<Self> {
        if colours.len() != self.num_nodes {
            return Err(Error::SizeMismatch(format!(
                "colour map has {} entries, graph has {} nodes",
                colours.len(),
                self.num_nodes
            )));
        }
        self.colours = Some(colours);
        Ok(self)
    }

    pub fn without_colours(mut self) -> Self {
        self.colours = None;
        self
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[NodePair] {
        &self.edges
    }

    pub fn neighbours(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.num_nodes && self.adj[u].binary_search(&v).is_ok()
    }

    pub fn colours(&self) -> Option<&[Option<Colour>]> {
        self.colours.as_deref()
    }

    pub fn colour(&self, u: usize) -> Option<Colour> {
        self.colours.as_ref().and_then(|c| c[u])
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.num_nodes {
            Err(Error::NodeOutOfRange {
                node,
                num_nodes: self.num_nodes,
            })
        } else {
            Ok(())
        }
    }

    /// Breadth-first visit order from `start`, equal-depth ties by ascending index.
    pub fn bfs_order(&self, start: usize) -> Result<Vec<usize>> {
        self.check_node(start)?;
        let mut seen = vec![false; self.num_nodes];
        let mut order = Vec::with_capacity(self.num_nodes);
        let mut queue = VecDeque::new();
        seen[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &v in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        Ok(order)
    }

    /// Hop distances from `start`; `None` marks unreachable nodes.
    pub fn bfs_distances(&self, start: usize) -> Result<Vec<Option<usize>>> {
        self.check_node(start)?;
        let mut dist = vec![None; self.num_nodes];
        let mut queue = VecDeque::new();
        dist[start] = Some(0);
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for &v in &self.adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        Ok(dist)
    }

    pub fn all_pairs_distances(&self) -> DistanceMatrix {
        let n = self.num_nodes;
        let mut dist = vec![DistanceMatrix::UNREACHABLE; n * n];
        for s in 0..n {
            let row = self.bfs_distances(s).expect("source in range");
            for (t, d) in row.into_iter().enumerate() {
                if let Some(d) = d {
                    dist[s * n + t] = d as u32;
                }
            }
        }
        DistanceMatrix { n, dist }
    }

    /// Unordered pairs at hop distance exactly `d`, sorted.
    pub fn pairs_at_distance(&self, d: usize) -> Result<Vec<NodePair>> {
        if d == 0 {
            return Err(Error::InvalidArgument("distance must be >= 1".into()));
        }
        Ok(self.all_pairs_distances().pairs_at(d))
    }

    /// Connected components ordered by their smallest member; members ascending.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut comp_of = vec![usize::MAX; self.num_nodes];
        let mut comps = Vec::new();
        for s in 0..self.num_nodes {
            if comp_of[s] != usize::MAX {
                continue;
            }
            let mut members = self.bfs_order(s).expect("source in range");
            for &m in &members {
                comp_of[m] = comps.len();
            }
            members.sort_unstable();
            comps.push(members);
        }
        comps
    }

    pub fn is_connected(&self) -> bool {
        self.num_nodes <= 1 || self.bfs_order(0).is_ok_and(|o| o.len() == self.num_nodes)
    }

    /// Induced subgraph on `nodes`, with node `nodes[i]` relabelled to `i`.
    /// Colours are carried over.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<Graph> {
        let mut new_index = vec![usize::MAX; self.num_nodes];
        for (i, &u) in nodes.iter().enumerate() {
            self.check_node(u)?;
            if new_index[u] != usize::MAX {
                return Err(Error::InvalidArgument(format!("node {u} listed twice")));
            }
            new_index[u] = i;
        }
        let edges = self.edges.iter().filter_map(|&(u, v)| {
            let (a, b) = (new_index[u], new_index[v]);
            (a != usize::MAX && b != usize::MAX).then_some((a, b))
        });
        let g = Graph::new(nodes.len(), edges)?;
        match &self.colours {
            Some(c) => g.with_colours(nodes.iter().map(|&u| c[u]).collect()),
            None => Ok(g),
        }
    }

    /// Moves node `u` to position `perm[u]`. `perm` must be a permutation.
    pub fn relabel(&self, perm: &[usize]) -> Result<Graph> {
        check_permutation(perm, self.num_nodes)?;
        let g = Graph::new(
            self.num_nodes,
            self.edges.iter().map(|&(u, v)| (perm[u], perm[v])),
        )?;
        match &self.colours {
            Some(c) => {
                let mut moved = vec![None; self.num_nodes];
                for (u, &col) in c.iter().enumerate() {
                    moved[perm[u]] = col;
                }
                g.with_colours(moved)
            }
            None => Ok(g),
        }
    }

    /// Number of edges shared with `other` under the identity node mapping.
    pub fn common_edges(&self, other: &Graph) -> usize {
        self.edges
            .iter()
            .filter(|&&(u, v)| other.has_edge(u, v))
            .count()
    }

    pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_edge_list(&text)
    }

    pub fn write_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_edge_list()).map_err(|e| Error::io(path, e))
    }

    /// Serialises as `N M`, then `u v` per edge, then an optional colour block.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} {}", self.num_nodes, self.edges.len()).unwrap();
        for &(u, v) in &self.edges {
            writeln!(out, "{u} {v}").unwrap();
        }
        if let Some(colours) = &self.colours {
            let coloured: Vec<_> = colours
                .iter()
                .enumerate()
                .filter_map(|(u, c)| c.map(|c| (u, c)))
                .collect();
            writeln!(out, "{}", coloured.len()).unwrap();
            for (u, c) in coloured {
                writeln!(out, "{u} {c}").unwrap();
            }
        }
        out
    }
}

pub(crate) fn ordered(u: usize, v: usize) -> NodePair {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::SizeMismatch(format!(
            "permutation has {} entries, expected {n}",
            perm.len()
        )));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidArgument("not a permutation".into()));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Dense hop-distance matrix with an explicit unreachable marker.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    dist: Vec<u32>,
}

impl DistanceMatrix {
    const UNREACHABLE: u32 = u32::MAX;

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    /// `None` when `v` cannot be reached from `u`.
    pub fn get(&self, u: usize, v: usize) -> Option<usize> {
        match self.dist[u * self.n + v] {
            Self::UNREACHABLE => None,
            d => Some(d as usize),
        }
    }

    pub fn pairs_at(&self, d: usize) -> Vec<NodePair> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.get(i, j) == Some(d) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Largest finite distance, or `None` if any pair is unreachable.
    pub fn max_finite(&self) -> Option<usize> {
        let mut best = 0;
        for &d in &self.dist {
            if d == Self::UNREACHABLE {
                return None;
            }
            best = best.max(d as usize);
        }
        Some(best)
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_ints<const K: usize>(line: usize, text: &str) -> Result<[usize; K]> {
    let mut out = [0usize; K];
    let mut fields = text.split_whitespace();
    for slot in out.iter_mut() {
        let field = fields.next().ok_or_else(|| Error::Parse {
            line,
            msg: format!("expected {K} integers"),
        })?;
        *slot = field.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("not a non-negative integer: {field:?}"),
        })?;
    }
    if fields.next().is_some() {
        return Err(Error::Parse {
            line,
            msg: format!("expected exactly {K} integers"),
        });
    }
    Ok(out)
}

/// Parses the edge-list text format, including an optional colour block.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut lines = data_lines(text);
    let (line, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing `N M` header".into(),
    })?;
    let [n, m] = parse_ints::<2>(line, header)?;
    let mut edges = Vec::with_capacity(m);
    for k in 0..m {
        let (line, text) = lines.next().ok_or_else(|| Error::Parse {
            line,
            msg: format!("expected {m} edges, found {k}"),
        })?;
        let [u, v] = parse_ints::<2>(line, text)?;
        if u >= n || v >= n {
            return Err(Error::Parse {
                line,
                msg: format!("edge ({u}, {v}) out of range for {n} nodes"),
            });
        }
        edges.push((u, v));
    }
    let graph = Graph::new(n, edges)?;
    match lines.next() {
        None => Ok(graph),
        Some((line, text)) => {
            let [count] = parse_ints::<1>(line, text)?;
            let colours = parse_colour_lines(&mut lines, n, Some(count))?;
            if let Some((line, _)) = lines.next() {
                return Err(Error::Parse {
                    line,
                    msg: "trailing data after colour block".into(),
                });
            }
            graph.with_colours(colours)
        }
    }
}

/// Parses a standalone `node colour` file for a graph with `num_nodes` nodes.
pub fn parse_colour_file(text: &str, num_nodes: usize) -> Result<Vec<Option<Colour>>> {
    parse_colour_lines(&mut data_lines(text), num_nodes, None)
}

fn parse_colour_lines<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    num_nodes: usize,
    count: Option<usize>,
) -> Result<Vec<Option<Colour>>> {
    let mut colours = vec![None; num_nodes];
    let mut read = 0;
    while count.is_none_or(|c| read < c) {
        let Some((line, text)) = lines.next() else {
            if let Some(c) = count {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("expected {c} colour lines, found {read}"),
                });
            }
            break;
        };
        let [node, colour] = parse_ints::<2>(line, text)?;
        if node >= num_nodes {
            return Err(Error::Parse {
                line,
                msg: format!("node {node} out of range"),
            });
        }
        if colours[node].is_some() {
            return Err(Error::Parse {
                line,
                msg: format!("node {node} has more than one colour"),
            });
        }
        colours[node] = Some(Colour::try_from(colour).map_err(|_| Error::Parse {
            line,
            msg: "colour id too large".into(),
        })?);
        read += 1;
    }
    Ok(colours)
}
