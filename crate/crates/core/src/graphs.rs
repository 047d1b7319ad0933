//! Graph representations and the structural constructions used throughout:
//! moral graph, kins, perturbed graph, separation and maximal cliques.
//!
//! Nodes are dense 0-based indices. External labels (e.g. the 1-based names
//! used in configs) are mapped to indices at the I/O boundary.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Undirected edge stored with the smaller endpoint first.
pub type Edge = (usize, usize);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("node {node} out of range for a graph with {n} nodes")]
    OutOfRange { node: usize, n: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("node sets overlap on node {0}")]
    Overlap(usize),
    #[error("node count mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Normalize an unordered pair.
#[inline]
pub fn edge(i: usize, j: usize) -> Edge {
    if i <= j {
        (i, j)
    } else {
        (j, i)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSet(BTreeSet<usize>);

impl NodeSet {
    pub fn new() -> Self {
        Self(BTreeSet::new())
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.contains(&i)
    }

    pub fn insert(&mut self, i: usize) -> bool {
        self.0.insert(i)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset(&self, other: &NodeSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn check_range(&self, n: usize) -> Result<(), GraphError> {
        match self.0.iter().next_back() {
            Some(&node) if node >= n => Err(GraphError::OutOfRange { node, n }),
            _ => Ok(()),
        }
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.0.iter().copied().collect()
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl<const K: usize> From<[usize; K]> for NodeSet {
    fn from(v: [usize; K]) -> Self {
        v.into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectedGraph {
    n: usize,
    arcs: BTreeSet<(usize, usize)>,
}

impl DirectedGraph {
    pub fn new(n: usize) -> Self {
        Self { n, arcs: BTreeSet::new() }
    }

    pub fn from_arcs<I>(n: usize, arcs: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Self::new(n);
        for (i, j) in arcs {
            g.add_arc(i, j)?;
        }
        Ok(g)
    }

    /// Adds the arc `from -> to`.
    pub fn add_arc(&mut self, from: usize, to: usize) -> Result<(), GraphError> {
        check_node(from, self.n)?;
        check_node(to, self.n)?;
        if from == to {
            return Err(GraphError::SelfLoop(from));
        }
        self.arcs.insert((from, to));
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.arcs.iter().copied()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn has_arc(&self, from: usize, to: usize) -> bool {
        self.arcs.contains(&(from, to))
    }

    pub fn children(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        self.arcs.iter().filter(move |a| a.0 == j).map(|a| a.1)
    }

    pub fn parents(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        self.arcs.iter().filter(move |a| a.1 == j).map(|a| a.0)
    }

    /// Undirected graph obtained by forgetting arc orientation.
    pub fn skeleton(&self) -> UndirectedGraph {
        let mut g = UndirectedGraph::new(self.n);
        for &(i, j) in &self.arcs {
            g.edges.insert(edge(i, j));
        }
        g
    }

    pub fn is_acyclic(&self) -> bool {
        let mut indeg = vec![0usize; self.n];
        for &(_, j) in &self.arcs {
            indeg[j] += 1;
        }
        let mut queue: VecDeque<usize> = (0..self.n).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0;
        while let Some(i) = queue.pop_front() {
            seen += 1;
            for c in self.children(i).collect::<Vec<_>>() {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        seen == self.n
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UndirectedGraph {
    n: usize,
    edges: BTreeSet<Edge>,
}

impl UndirectedGraph {
    pub fn new(n: usize) -> Self {
        Self { n, edges: BTreeSet::new() }
    }

    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Self::new(n);
        for (i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::new(n);
        for i in 0..n {
            for j in i + 1..n {
                g.edges.insert((i, j));
            }
        }
        g
    }

    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<(), GraphError> {
        check_node(i, self.n)?;
        check_node(j, self.n)?;
        if i == j {
            return Err(GraphError::SelfLoop(i));
        }
        self.edges.insert(edge(i, j));
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&edge(i, j))
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_set(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == i {
                    Some(b)
                } else if b == i {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn is_subgraph_of(&self, other: &UndirectedGraph) -> bool {
        self.n == other.n && self.edges.is_subset(&other.edges)
    }

    /// Induced subgraph on `keep`, relabelled to `0..keep.len()` in ascending order.
    pub fn induced(&self, keep: &[usize]) -> UndirectedGraph {
        let mut g = UndirectedGraph::new(keep.len());
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate().skip(a + 1) {
                if self.has_edge(i, j) {
                    g.edges.insert((a, b));
                }
            }
        }
        g
    }
}

fn check_node(i: usize, n: usize) -> Result<(), GraphError> {
    if i >= n {
        Err(GraphError::OutOfRange { node: i, n })
    } else {
        Ok(())
    }
}

/// Parents, children and spouses of `j`.
pub fn kins(g: &DirectedGraph, j: usize) -> Result<NodeSet, GraphError> {
    check_node(j, g.n())?;
    let mut out = NodeSet::new();
    for c in g.children(j) {
        out.insert(c);
        for s in g.parents(c) {
            out.insert(s);
        }
    }
    for p in g.parents(j) {
        out.insert(p);
    }
    out.0.remove(&j);
    Ok(out)
}

/// Moral graph: `i - j` iff `i` is a kin of `j`.
pub fn moral_graph(g: &DirectedGraph) -> UndirectedGraph {
    let mut m = g.skeleton();
    for c in 0..g.n() {
        let parents: Vec<usize> = g.parents(c).collect();
        for (a, &p) in parents.iter().enumerate() {
            for &q in &parents[a + 1..] {
                m.edges.insert(edge(p, q));
            }
        }
    }
    m
}

/// Adds `i - j` whenever `g` has a path from `i` to `j` whose intermediate
/// nodes all lie in `z`.
pub fn perturbed_graph(g: &UndirectedGraph, z: &NodeSet) -> Result<UndirectedGraph, GraphError> {
    z.check_range(g.n())?;
    let adj = g.adjacency();
    let mut out = g.clone();
    let mut seen = vec![false; g.n()];
    for i in 0..g.n() {
        seen.iter_mut().for_each(|s| *s = false);
        seen[i] = true;
        let mut queue = VecDeque::new();
        for &k in &adj[i] {
            seen[k] = true;
            queue.push_back(k);
        }
        while let Some(k) = queue.pop_front() {
            out.edges.insert(edge(i, k));
            if !z.contains(k) {
                continue;
            }
            for &m in &adj[k] {
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
    }
    Ok(out)
}

/// True iff every path from `a` to `b` passes through `c`.
pub fn is_separated(
    g: &UndirectedGraph,
    a: &NodeSet,
    b: &NodeSet,
    c: &NodeSet,
) -> Result<bool, GraphError> {
    for s in [a, b, c] {
        s.check_range(g.n())?;
    }
    for i in a.iter() {
        if b.contains(i) || c.contains(i) {
            return Err(GraphError::Overlap(i));
        }
    }
    if let Some(i) = b.iter().find(|&i| c.contains(i)) {
        return Err(GraphError::Overlap(i));
    }
    let adj = g.adjacency();
    let mut seen = vec![false; g.n()];
    let mut queue: VecDeque<usize> = a.iter().collect();
    for i in a.iter() {
        seen[i] = true;
    }
    while let Some(k) = queue.pop_front() {
        if b.contains(k) {
            return Ok(false);
        }
        for &m in &adj[k] {
            if !seen[m] && !c.contains(m) {
                seen[m] = true;
                queue.push_back(m);
            }
        }
    }
    Ok(true)
}

/// All maximal cliques, each sorted, in lexicographic order.
pub fn maximal_cliques(g: &UndirectedGraph) -> Vec<NodeSet> {
    let adj: Vec<BTreeSet<usize>> = g
        .adjacency()
        .into_iter()
        .map(|v| v.into_iter().collect())
        .collect();
    let mut out = Vec::new();
    bron_kerbosch(
        &adj,
        &mut Vec::new(),
        (0..g.n()).collect(),
        BTreeSet::new(),
        &mut out,
    );
    out.sort_by_key(|s| s.to_vec());
    out
}

fn bron_kerbosch(
    adj: &[BTreeSet<usize>],
    r: &mut Vec<usize>,
    mut p: BTreeSet<usize>,
    mut x: BTreeSet<usize>,
    out: &mut Vec<NodeSet>,
) {
    if p.is_empty() && x.is_empty() {
        out.push(r.iter().copied().collect());
        return;
    }
    // pivot on the vertex with the most neighbours in p
    let pivot = p
        .iter()
        .chain(x.iter())
        .copied()
        .max_by_key(|&u| adj[u].intersection(&p).count())
        .expect("p or x nonempty");
    let candidates: Vec<usize> = p.difference(&adj[pivot]).copied().collect();
    for v in candidates {
        r.push(v);
        let np = p.intersection(&adj[v]).copied().collect();
        let nx = x.intersection(&adj[v]).copied().collect();
        bron_kerbosch(adj, r, np, nx, out);
        r.pop();
        p.remove(&v);
        x.insert(v);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDiff {
    pub spurious: BTreeSet<Edge>,
    pub missing: BTreeSet<Edge>,
}

pub fn diff_graphs(
    reference: &UndirectedGraph,
    candidate: &UndirectedGraph,
) -> Result<GraphDiff, GraphError> {
    if reference.n() != candidate.n() {
        return Err(GraphError::SizeMismatch(reference.n(), candidate.n()));
    }
    Ok(GraphDiff {
        spurious: candidate.edges.difference(&reference.edges).copied().collect(),
        missing: reference.edges.difference(&candidate.edges).copied().collect(),
    })
}

/// Edge style used by [`to_dot`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeStyle {
    Solid,
    Dashed,
    Bold,
}

/// Renders an undirected graph as DOT. `style` picks the look of each edge.
pub fn to_dot<F>(g: &UndirectedGraph, labels: &[String], name: &str, style: F) -> String
where
    F: Fn(Edge) -> EdgeStyle,
{
    let mut s = String::new();
    let _ = writeln!(s, "graph \"{name}\" {{");
    for i in 0..g.n() {
        let _ = writeln!(s, "  n{i} [label=\"{}\"];", label_of(labels, i));
    }
    for e in g.edges() {
        let attr = match style(e) {
            EdgeStyle::Solid => "",
            EdgeStyle::Dashed => " [style=dashed, color=red]",
            EdgeStyle::Bold => " [style=bold, color=black, penwidth=3]",
        };
        let _ = writeln!(s, "  n{} -- n{}{attr};", e.0, e.1);
    }
    s.push_str("}\n");
    s
}

fn label_of(labels: &[String], i: usize) -> String {
    labels.get(i).cloned().unwrap_or_else(|| (i + 1).to_string())
}

/// Edge-list text format:
///
/// ```text
/// # comment
/// nodes 1 2 3 4
/// 1 2
/// 2 3
/// ```
///
/// The `nodes` line lists labels in index order; each further line is one
/// edge given by two labels.
pub fn write_edge_list(g: &UndirectedGraph, labels: &[String]) -> String {
    let mut s = String::new();
    s.push_str("nodes");
    for i in 0..g.n() {
        s.push(' ');
        s.push_str(&label_of(labels, i));
    }
    s.push('\n');
    for (a, b) in g.edges() {
        let _ = writeln!(s, "{} {}", label_of(labels, a), label_of(labels, b));
    }
    s
}

pub fn parse_edge_list(text: &str) -> Result<(UndirectedGraph, Vec<String>), GraphError> {
    let mut labels: Option<Vec<String>> = None;
    let mut g = UndirectedGraph::new(0);
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let err = |msg: &str| GraphError::Parse { line: lineno + 1, msg: msg.to_string() };
        match &labels {
            None => {
                if toks[0] != "nodes" {
                    return Err(err("expected `nodes` header"));
                }
                let l: Vec<String> = toks[1..].iter().map(|t| t.to_string()).collect();
                let uniq: BTreeSet<&String> = l.iter().collect();
                if uniq.len() != l.len() {
                    return Err(err("duplicate node label"));
                }
                g = UndirectedGraph::new(l.len());
                labels = Some(l);
            }
            Some(l) => {
                if toks.len() != 2 {
                    return Err(err("edge lines hold exactly two labels"));
                }
                let find = |t: &str| {
                    l.iter()
                        .position(|x| x == t)
                        .ok_or_else(|| err(&format!("unknown node `{t}`")))
                };
                let (a, b) = (find(toks[0])?, find(toks[1])?);
                g.add_edge(a, b).map_err(|e| err(&e.to_string()))?;
            }
        }
    }
    let labels = labels.ok_or(GraphError::Parse { line: 0, msg: "missing `nodes` header".into() })?;
    Ok((g, labels))
}
