//! Signed graphs: loading, sign views, balance-theory sign inference and
//! train/test edge splits.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::ops::Mul;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Domain};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Positive, Sign::Negative];

    pub fn from_weight(w: f64) -> Option<Sign> {
        if w > 0.0 {
            Some(Sign::Positive)
        } else if w < 0.0 {
            Some(Sign::Negative)
        } else {
            None
        }
    }

    pub fn value(self) -> i8 {
        match self {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }

    pub fn from_value(v: i64) -> Option<Sign> {
        match v {
            1 => Some(Sign::Positive),
            -1 => Some(Sign::Negative),
            _ => None,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Positive => '+',
            Sign::Negative => '-',
        }
    }
}

impl Mul for Sign {
    type Output = Sign;

    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Sign of the multi-hop relation along a path: the product of its edge signs.
pub fn infer_path_sign(signs: &[Sign]) -> Result<Sign> {
    let (first, rest) = signs.split_first().ok_or_else(|| Error::domain("cannot infer the sign of an empty path"))?;
    Ok(rest.iter().fold(*first, |acc, &s| acc * s))
}

/// Undirected signed graph over dense node ids `0..num_nodes`.
///
/// Neighbor lists are sorted and duplicate-free; a pair is never both
/// positive and negative, and there are no self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedGraph {
    num_nodes: usize,
    pos: Vec<Vec<NodeId>>,
    neg: Vec<Vec<NodeId>>,
}

/// Outcome of inserting edges with the first-seen-sign policy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeStats {
    /// Repeated pair with the same sign (including the reverse direction).
    pub duplicates: usize,
    /// Repeated pair with the opposite sign; the first sign was kept.
    pub conflicts: usize,
    pub self_loops: usize,
}

impl SignedGraph {
    pub fn empty(num_nodes: usize) -> Self {
        SignedGraph { num_nodes, pos: vec![Vec::new(); num_nodes], neg: vec![Vec::new(); num_nodes] }
    }

    /// Builds a graph, keeping the first-seen sign for repeated pairs.
    pub fn from_edges<I>(num_nodes: usize, edges: I) -> Result<(Self, MergeStats)>
    where
        I: IntoIterator<Item = (NodeId, NodeId, Sign)>,
    {
        let mut seen: HashMap<(NodeId, NodeId), Sign> = HashMap::new();
        let mut order = Vec::new();
        let mut stats = MergeStats::default();
        for (u, v, s) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::domain(format!("edge ({u}, {v}) out of range for {num_nodes} nodes")));
            }
            if u == v {
                stats.self_loops += 1;
                continue;
            }
            let key = (u.min(v), u.max(v));
            match seen.entry(key) {
                Entry::Occupied(e) => {
                    if *e.get() == s {
                        stats.duplicates += 1;
                    } else {
                        stats.conflicts += 1;
                    }
                }
                Entry::Vacant(e) => {
                    e.insert(s);
                    order.push(key);
                }
            }
        }
        let mut g = SignedGraph::empty(num_nodes);
        for key in order {
            let s = seen[&key];
            let adj = g.adj_mut(s);
            adj[key.0].push(key.1);
            adj[key.1].push(key.0);
        }
        for list in g.pos.iter_mut().chain(g.neg.iter_mut()) {
            list.sort_unstable();
        }
        Ok((g, stats))
    }

    fn adj_mut(&mut self, sign: Sign) -> &mut Vec<Vec<NodeId>> {
        match sign {
            Sign::Positive => &mut self.pos,
            Sign::Negative => &mut self.neg,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn neighbors(&self, v: NodeId, sign: Sign) -> &[NodeId] {
        match sign {
            Sign::Positive => &self.pos[v],
            Sign::Negative => &self.neg[v],
        }
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.pos[v].len() + self.neg[v].len()
    }

    pub fn sign_of(&self, u: NodeId, v: NodeId) -> Option<Sign> {
        if self.pos[u].binary_search(&v).is_ok() {
            Some(Sign::Positive)
        } else if self.neg[u].binary_search(&v).is_ok() {
            Some(Sign::Negative)
        } else {
            None
        }
    }

    pub fn is_neighbor(&self, u: NodeId, v: NodeId) -> bool {
        self.sign_of(u, v).is_some()
    }

    pub fn num_edges(&self, sign: Sign) -> usize {
        let adj = match sign {
            Sign::Positive => &self.pos,
            Sign::Negative => &self.neg,
        };
        adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn total_edges(&self) -> usize {
        self.num_edges(Sign::Positive) + self.num_edges(Sign::Negative)
    }

    /// Edges of one sign as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self, sign: Sign) -> Vec<(NodeId, NodeId)> {
        let adj = match sign {
            Sign::Positive => &self.pos,
            Sign::Negative => &self.neg,
        };
        let mut out = Vec::with_capacity(self.num_edges(sign));
        for (u, list) in adj.iter().enumerate() {
            out.extend(list.iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        out
    }

    /// All edges as `(u, v, sign)` with `u < v`, sorted by `(u, v)`.
    pub fn signed_edges(&self) -> Vec<(NodeId, NodeId, Sign)> {
        let mut out: Vec<_> =
            Sign::BOTH.iter().flat_map(|&s| self.edges(s).into_iter().map(move |(u, v)| (u, v, s))).collect();
        out.sort_unstable();
        out
    }

    pub fn view(&self, sign: Sign) -> SignView<'_> {
        SignView { graph: self, sign }
    }

    /// Copy of the graph with every edge incident to `v` removed. The node id
    /// is kept (isolated) so embedding rows stay aligned.
    pub fn without_node(&self, v: NodeId) -> SignedGraph {
        let mut g = self.clone();
        for adj in [&mut g.pos, &mut g.neg] {
            let removed = std::mem::take(&mut adj[v]);
            for u in removed {
                adj[u].retain(|&w| w != v);
            }
        }
        g
    }

    /// Copy of the graph keeping only edges of `sign`.
    pub fn restricted_to(&self, sign: Sign) -> SignedGraph {
        let mut g = SignedGraph::empty(self.num_nodes);
        *g.adj_mut(sign) = match sign {
            Sign::Positive => self.pos.clone(),
            Sign::Negative => self.neg.clone(),
        };
        g
    }

    /// Canonical edge list `u v s`, one edge per line, `u < v`.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        for (u, v, s) in self.signed_edges() {
            writeln!(out, "{u} {v} {s}")?;
        }
        Ok(())
    }
}

/// Single-sign adjacency view over the shared node id space.
#[derive(Debug, Clone, Copy)]
pub struct SignView<'a> {
    graph: &'a SignedGraph,
    sign: Sign,
}

impl<'a> SignView<'a> {
    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes
    }

    pub fn neighbors(&self, v: NodeId) -> &'a [NodeId] {
        self.graph.neighbors(v, self.sign)
    }

    pub fn num_edges(&self) -> usize {
        self.graph.num_edges(self.sign)
    }

    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.graph.edges(self.sign)
    }
}

/// Positive and negative views of `g`.
pub fn decompose(g: &SignedGraph) -> (SignView<'_>, SignView<'_>) {
    (g.view(Sign::Positive), g.view(Sign::Negative))
}

/// How raw weights map to signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum WeightRule {
    /// `sign(w)`; a zero weight is an error.
    #[default]
    Sign,
    /// `sign(w)`; zero-weight lines are counted and skipped.
    SignSkipZero,
}

/// Map between original (file) ids and dense ids. Dense ids follow the
/// ascending order of original ids, so re-loading a canonical file is the
/// identity.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    original: Vec<i64>,
}

impl IdMap {
    pub fn original(&self, compact: NodeId) -> i64 {
        self.original[compact]
    }

    pub fn compact(&self, original: i64) -> Option<NodeId> {
        self.original.binary_search(&original).ok()
    }

    pub fn len(&self) -> usize {
        self.original.len()
    }

    pub fn is_empty(&self) -> bool {
        self.original.is_empty()
    }

    /// `original_id compact_id` per line.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for (c, o) in self.original.iter().enumerate() {
            writeln!(out, "{o} {c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: SignedGraph,
    pub ids: IdMap,
    pub stats: MergeStats,
    pub skipped_zero: usize,
    pub records: usize,
}

/// Reads `u v w [extra...]` records separated by whitespace or commas.
/// Blank lines and lines starting with `#` are ignored. Directed records are
/// symmetrized.
pub fn load_edge_list<R: BufRead>(reader: R, rule: WeightRule) -> Result<LoadedGraph> {
    let mut raw: Vec<(i64, i64, Sign)> = Vec::new();
    let mut skipped_zero = 0;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> =
            trimmed.split(|c: char| c.is_whitespace() || c == ',').filter(|f| !f.is_empty()).collect();
        if fields.len() < 3 {
            return Err(Error::Parse { line: lineno, msg: format!("expected `u v w`, got {:?}", trimmed) });
        }
        let parse_id = |f: &str| {
            f.parse::<i64>().map_err(|_| Error::Parse { line: lineno, msg: format!("node id {f:?} is not an integer") })
        };
        let u = parse_id(fields[0])?;
        let v = parse_id(fields[1])?;
        let w: f64 = fields[2]
            .parse()
            .map_err(|_| Error::Parse { line: lineno, msg: format!("weight {:?} is not a number", fields[2]) })?;
        if !w.is_finite() {
            return Err(Error::Parse { line: lineno, msg: format!("weight {:?} is not finite", fields[2]) });
        }
        match Sign::from_weight(w) {
            Some(s) => raw.push((u, v, s)),
            None => match rule {
                WeightRule::Sign => {
                    return Err(Error::ZeroWeight { line: lineno, u: fields[0].to_string(), v: fields[1].to_string() })
                }
                WeightRule::SignSkipZero => skipped_zero += 1,
            },
        }
    }
    let mut original: Vec<i64> = raw.iter().filter(|(u, v, _)| u != v).flat_map(|&(u, v, _)| [u, v]).collect();
    original.sort_unstable();
    original.dedup();
    let ids = IdMap { original };
    let records = raw.len();
    let self_loops = raw.iter().filter(|(u, v, _)| u == v).count();
    let edges = raw
        .into_iter()
        .filter(|(u, v, _)| u != v)
        .map(|(u, v, s)| (ids.compact(u).unwrap_or(0), ids.compact(v).unwrap_or(0), s))
        .collect::<Vec<_>>();
    let (graph, mut stats) = SignedGraph::from_edges(ids.len(), edges)?;
    stats.self_loops += self_loops;
    if stats.conflicts > 0 {
        log::warn!("{} conflicting duplicate edges resolved to their first-seen sign", stats.conflicts);
    }
    Ok(LoadedGraph { graph, ids, stats, skipped_zero, records })
}

/// Writes `u v s` lines with ids as given.
pub fn write_signed_edges<W: Write>(edges: &[(NodeId, NodeId, Sign)], mut out: W) -> Result<()> {
    for &(u, v, s) in edges {
        writeln!(out, "{u} {v} {s}")?;
    }
    Ok(())
}

/// Reads `u v s` lines without remapping ids; `s` must be `1` or `-1`.
pub fn read_signed_edges<R: BufRead>(reader: R) -> Result<Vec<(NodeId, NodeId, Sign)>> {
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let bad = |msg: &str| Error::Parse { line: idx + 1, msg: msg.to_string() };
        let f: Vec<&str> = t.split_whitespace().collect();
        if f.len() != 3 {
            return Err(bad("expected `u v s`"));
        }
        let u = f[0].parse().map_err(|_| bad("bad node id"))?;
        let v = f[1].parse().map_err(|_| bad("bad node id"))?;
        let s = f[2].parse::<i64>().ok().and_then(Sign::from_value).ok_or_else(|| bad("sign must be 1 or -1"))?;
        edges.push((u, v, s));
    }
    Ok(edges)
}

/// Held-out edges plus the graph with those edges removed.
#[derive(Debug, Clone)]
pub struct EdgeSplit {
    pub train_graph: SignedGraph,
    pub test_edges: Vec<(NodeId, NodeId, Sign)>,
}

/// Number of test edges drawn from a class of `n` edges.
pub fn test_count(n: usize, test_fraction: f64) -> usize {
    ((n as f64 * test_fraction).round() as usize).clamp(1, n.saturating_sub(1))
}

/// Stratified-by-sign random edge split. Each sign contributes
/// `round(n_sign * test_fraction)` test edges (at least one, and at least one
/// edge stays in training).
pub fn split_edges(g: &SignedGraph, test_fraction: f64, seed: u64) -> Result<EdgeSplit> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Split(format!("test fraction {test_fraction} must lie in (0, 1)")));
    }
    let mut train = Vec::new();
    let mut test_edges = Vec::new();
    for sign in Sign::BOTH {
        let mut edges = g.edges(sign);
        if edges.len() < 2 {
            return Err(Error::Split(format!("sign {sign} has {} edges; at least 2 are needed", edges.len())));
        }
        let mut rng = rng::stream(seed, Domain::Split, sign.value() as u64);
        edges.shuffle(&mut rng);
        let k = test_count(edges.len(), test_fraction);
        test_edges.extend(edges[..k].iter().map(|&(u, v)| (u, v, sign)));
        train.extend(edges[k..].iter().map(|&(u, v)| (u, v, sign)));
    }
    test_edges.sort_unstable();
    let (train_graph, _) = SignedGraph::from_edges(g.num_nodes(), train)?;
    Ok(EdgeSplit { train_graph, test_edges })
}
