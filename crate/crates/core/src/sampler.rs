//! Constrained BFS-tree sampling of fake node pairs.
//!
//! For every root and sign a BFS tree is grown on the single-sign view, up to
//! `N` distinct walks of at most `L` hops are drawn from it with
//! embedding-guided transition probabilities, and the walks are turned into
//! fake positive or negative pairs anchored at the root.
//!
//! A node may belong to at most `R_{N,L} = Σ_{l=0}^{L} N^l` stored subgraphs
//! per sign. Roots are processed in ascending id order and a node that has
//! reached the cap is no longer offered to later walks; this is what bounds
//! the discriminator's sensitivity.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{NodeId, Sign, SignView, SignedGraph};
use crate::model::EmbeddingTable;
use crate::rng::{self, Domain};
use crate::scalar::Scalar;

/// `Σ_{l=0}^{L} N^l`, saturating at `usize::MAX`.
pub fn receptive_field(n: usize, l: usize) -> usize {
    let mut total: usize = 0;
    let mut term: usize = 1;
    for _ in 0..=l {
        total = total.saturating_add(term);
        term = term.saturating_mul(n);
    }
    total
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BfsTree {
    root: NodeId,
    order: Vec<NodeId>,
    parent: HashMap<NodeId, NodeId>,
    depth: HashMap<NodeId, usize>,
    children: HashMap<NodeId, Vec<NodeId>>,
}

impl BfsTree {
    pub fn root(&self) -> NodeId {
        self.root
    }

    /// Nodes in BFS visiting order, root first.
    pub fn nodes(&self) -> &[NodeId] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent.get(&v).copied()
    }

    pub fn depth(&self, v: NodeId) -> Option<usize> {
        self.depth.get(&v).copied()
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        self.children.get(&v).map_or(&[], Vec::as_slice)
    }

    pub fn max_depth(&self) -> usize {
        self.depth.values().copied().max().unwrap_or(0)
    }

    /// Removes the edge `parent(v) → v`, detaching the subtree under `v`
    /// from walks.
    pub fn cut(&mut self, v: NodeId) {
        if let Some(p) = self.parent.get(&v) {
            if let Some(list) = self.children.get_mut(p) {
                list.retain(|&c| c != v);
            }
        }
    }
}

/// Full BFS tree of `root` in `view`; children are in ascending id order.
pub fn build_bfs_tree(view: SignView<'_>, root: NodeId) -> Result<BfsTree> {
    build_bfs_tree_limited(view, root, usize::MAX)
}

/// BFS tree truncated at `max_depth` hops.
pub fn build_bfs_tree_limited(view: SignView<'_>, root: NodeId, max_depth: usize) -> Result<BfsTree> {
    if root >= view.num_nodes() {
        return Err(Error::domain(format!("root {root} not in graph")));
    }
    let mut tree = BfsTree {
        root,
        order: vec![root],
        parent: HashMap::new(),
        depth: HashMap::from([(root, 0)]),
        children: HashMap::new(),
    };
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        let d = tree.depth[&u];
        if d >= max_depth {
            continue;
        }
        // neighbor lists are sorted, so children come out ascending
        for &w in view.neighbors(u) {
            if tree.depth.contains_key(&w) {
                continue;
            }
            tree.depth.insert(w, d + 1);
            tree.parent.insert(w, u);
            tree.children.entry(u).or_default().push(w);
            tree.order.push(w);
            queue.push_back(w);
        }
    }
    Ok(tree)
}

/// Softmax of `g_c·g_at` over `candidates`. `None` when there are none.
pub fn positive_probs_over<T: Scalar>(
    candidates: &[NodeId],
    at: NodeId,
    theta_g: &EmbeddingTable<T>,
) -> Option<Vec<T>> {
    if candidates.is_empty() {
        return None;
    }
    let scores: Vec<T> = candidates.iter().map(|&c| theta_g.inner(c, at)).collect();
    let max = scores.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = scores.iter().map(|&s| (s - max).exp()).collect();
    let z: T = exps.iter().copied().sum();
    Some(exps.into_iter().map(|e| e / z).collect())
}

/// `max(0, 1 − exp(g_c·g_at))` renormalized over `candidates`; uniform when
/// every weight vanishes.
pub fn negative_probs_over<T: Scalar>(
    candidates: &[NodeId],
    at: NodeId,
    theta_g: &EmbeddingTable<T>,
) -> Option<Vec<T>> {
    if candidates.is_empty() {
        return None;
    }
    let weights: Vec<T> = candidates.iter().map(|&c| (-theta_g.inner(c, at).exp_m1()).max(T::zero())).collect();
    let z: T = weights.iter().copied().sum();
    if z > T::zero() && z.is_finite() {
        Some(weights.into_iter().map(|w| w / z).collect())
    } else {
        let u = T::one() / T::from_f64_lossy(candidates.len() as f64);
        Some(vec![u; candidates.len()])
    }
}

/// Transition distribution over the children of `at` in a positive tree.
pub fn positive_transition_probs<T: Scalar>(tree: &BfsTree, at: NodeId, theta_g: &EmbeddingTable<T>) -> Option<Vec<T>> {
    positive_probs_over(tree.children(at), at, theta_g)
}

/// Transition distribution over the children of `at` in a negative tree.
pub fn negative_transition_probs<T: Scalar>(tree: &BfsTree, at: NodeId, theta_g: &EmbeddingTable<T>) -> Option<Vec<T>> {
    negative_probs_over(tree.children(at), at, theta_g)
}

/// A root-anchored walk down a BFS tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WalkPath {
    pub nodes: Vec<NodeId>,
    pub context: Sign,
}

impl WalkPath {
    pub fn root(&self) -> NodeId {
        self.nodes[0]
    }

    /// Number of hops.
    pub fn len(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn pick<T: Scalar, R: Rng + ?Sized>(probs: &[T], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p.as_f64();
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Walk of at most `max_hops` from the root, stopping early at a leaf.
pub fn random_walk<T: Scalar, R: Rng + ?Sized>(
    tree: &BfsTree,
    context: Sign,
    max_hops: usize,
    theta_g: &EmbeddingTable<T>,
    rng: &mut R,
) -> WalkPath {
    random_walk_filtered(tree, context, max_hops, theta_g, rng, |_| true)
}

/// [`random_walk`] over the children accepted by `allow`.
pub fn random_walk_filtered<T, R, F>(
    tree: &BfsTree,
    context: Sign,
    max_hops: usize,
    theta_g: &EmbeddingTable<T>,
    rng: &mut R,
    allow: F,
) -> WalkPath
where
    T: Scalar,
    R: Rng + ?Sized,
    F: Fn(NodeId) -> bool,
{
    let mut nodes = vec![tree.root()];
    let mut at = tree.root();
    for _ in 0..max_hops {
        let candidates: Vec<NodeId> = tree.children(at).iter().copied().filter(|&c| allow(c)).collect();
        let probs = match context {
            Sign::Positive => positive_probs_over(&candidates, at, theta_g),
            Sign::Negative => negative_probs_over(&candidates, at, theta_g),
        };
        let Some(probs) = probs else { break };
        at = candidates[pick(&probs, rng)];
        nodes.push(at);
    }
    WalkPath { nodes, context }
}

/// Fake pairs `(root, v)` derived from a walk.
///
/// Positive walks pair the root with every node past the first hop. Negative
/// walks yield one pair: the last node when the walk has odd length, the
/// second-to-last when even (the sign of an all-negative path alternates with
/// its length). Nodes for which `is_real_neighbor` holds are skipped.
pub fn extract_fake_pairs<F>(path: &WalkPath, is_real_neighbor: F) -> Vec<(NodeId, NodeId)>
where
    F: Fn(NodeId) -> bool,
{
    let root = path.root();
    match path.context {
        Sign::Positive => path.nodes.iter().skip(2).filter(|&&v| !is_real_neighbor(v)).map(|&v| (root, v)).collect(),
        Sign::Negative => {
            let hops = path.len();
            if hops == 0 {
                return Vec::new();
            }
            let target = if hops % 2 == 1 { path.nodes[hops] } else { path.nodes[hops - 1] };
            if target == root || is_real_neighbor(target) {
                Vec::new()
            } else {
                vec![(root, target)]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerConfig {
    pub paths_n: usize,
    pub path_len_l: usize,
}

impl SamplerConfig {
    pub fn receptive_field(&self) -> usize {
        receptive_field(self.paths_n, self.path_len_l)
    }
}

/// Stored subgraphs of one sign.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SignedSubgraphs {
    /// `(root, node)` fake pairs, grouped by ascending root.
    pub fake_edges: Vec<(NodeId, NodeId)>,
    /// Walks per root; only roots with at least one walk appear.
    pub paths: BTreeMap<NodeId, Vec<WalkPath>>,
}

impl SignedSubgraphs {
    /// Number of stored subgraphs (one per root with walks).
    pub fn num_subgraphs(&self) -> usize {
        self.paths.len()
    }

    /// Nodes of the subgraph rooted at `root`, root included.
    pub fn members(&self, root: NodeId) -> HashSet<NodeId> {
        let mut set = HashSet::new();
        if let Some(paths) = self.paths.get(&root) {
            set.insert(root);
            for p in paths {
                set.extend(p.nodes.iter().copied());
            }
        }
        set
    }

    /// For every node, the number of stored subgraphs containing it.
    pub fn occurrence_counts(&self, num_nodes: usize) -> Vec<usize> {
        let mut counts = vec![0; num_nodes];
        for &root in self.paths.keys() {
            for v in self.members(root) {
                counts[v] += 1;
            }
        }
        counts
    }
}

/// Training set of subgraphs for both signs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SubgraphSet {
    pub positive: SignedSubgraphs,
    pub negative: SignedSubgraphs,
}

impl SubgraphSet {
    pub fn get(&self, sign: Sign) -> &SignedSubgraphs {
        match sign {
            Sign::Positive => &self.positive,
            Sign::Negative => &self.negative,
        }
    }

    fn get_mut(&mut self, sign: Sign) -> &mut SignedSubgraphs {
        match sign {
            Sign::Positive => &mut self.positive,
            Sign::Negative => &mut self.negative,
        }
    }

    pub fn fake_edges(&self, sign: Sign) -> &[(NodeId, NodeId)] {
        &self.get(sign).fake_edges
    }

    /// Text form: `root node sign fake` lines, then `root: n1,n2,...` walk
    /// lines under a `# paths <sign>` header (root omitted from the list).
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        for sign in Sign::BOTH {
            for &(r, v) in self.fake_edges(sign) {
                writeln!(out, "{r} {v} {sign} fake")?;
            }
        }
        for sign in Sign::BOTH {
            writeln!(out, "# paths {sign}")?;
            for (root, paths) in &self.get(sign).paths {
                for p in paths {
                    let rest: Vec<String> = p.nodes[1..].iter().map(|v| v.to_string()).collect();
                    writeln!(out, "{root}: {}", rest.join(","))?;
                }
            }
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut set = SubgraphSet::default();
        let mut section: Option<Sign> = None;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let bad = |msg: &str| Error::Parse { line: lineno, msg: msg.to_string() };
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(rest) = t.strip_prefix("# paths ") {
                let v: i64 = rest.trim().parse().map_err(|_| bad("bad sign in header"))?;
                section = Some(Sign::from_value(v).ok_or_else(|| bad("bad sign in header"))?);
                continue;
            }
            if t.starts_with('#') {
                continue;
            }
            if let Some((root, rest)) = t.split_once(':') {
                let sign = section.ok_or_else(|| bad("path line outside a paths section"))?;
                let root: NodeId = root.trim().parse().map_err(|_| bad("bad root"))?;
                let mut nodes = vec![root];
                for f in rest.split(',').map(str::trim).filter(|f| !f.is_empty()) {
                    nodes.push(f.parse().map_err(|_| bad("bad path node"))?);
                }
                set.get_mut(sign).paths.entry(root).or_default().push(WalkPath { nodes, context: sign });
                continue;
            }
            let f: Vec<&str> = t.split_whitespace().collect();
            if f.len() != 4 || f[3] != "fake" {
                return Err(bad("expected `root node sign fake`"));
            }
            let r: NodeId = f[0].parse().map_err(|_| bad("bad root"))?;
            let v: NodeId = f[1].parse().map_err(|_| bad("bad node"))?;
            let s: i64 = f[2].parse().map_err(|_| bad("bad sign"))?;
            let sign = Sign::from_value(s).ok_or_else(|| bad("bad sign"))?;
            set.get_mut(sign).fake_edges.push((r, v));
        }
        Ok(set)
    }
}

/// Samples the training subgraphs for every root in `train_nodes`.
///
/// Walk randomness for root `r` comes from its own stream keyed by
/// `(seed, sign, r)`.
pub fn sample_subgraphs<T: Scalar>(
    g: &SignedGraph,
    train_nodes: &[NodeId],
    config: SamplerConfig,
    theta_g: &EmbeddingTable<T>,
    seed: u64,
) -> Result<SubgraphSet> {
    sample_subgraphs_for(g, train_nodes, config, theta_g, seed, &Sign::BOTH)
}

/// [`sample_subgraphs`] restricted to the listed signs.
pub fn sample_subgraphs_for<T: Scalar>(
    g: &SignedGraph,
    train_nodes: &[NodeId],
    config: SamplerConfig,
    theta_g: &EmbeddingTable<T>,
    seed: u64,
    signs: &[Sign],
) -> Result<SubgraphSet> {
    if config.paths_n == 0 || config.path_len_l == 0 {
        return Err(Error::domain("path count N and path length L must be at least 1"));
    }
    if theta_g.num_rows() != g.num_nodes() {
        return Err(Error::domain("generator table does not match the graph"));
    }
    let mut roots: Vec<NodeId> = train_nodes.to_vec();
    roots.sort_unstable();
    roots.dedup();
    if let Some(&bad) = roots.iter().find(|&&r| r >= g.num_nodes()) {
        return Err(Error::domain(format!("training node {bad} not in graph")));
    }
    let cap = config.receptive_field();
    let mut out = SubgraphSet::default();
    for &sign in signs {
        let view = g.view(sign);
        let domain = match sign {
            Sign::Positive => Domain::SamplePositive,
            Sign::Negative => Domain::SampleNegative,
        };
        let mut occurrences = vec![0usize; g.num_nodes()];
        let target = out.get_mut(sign);
        for &root in &roots {
            if occurrences[root] >= cap || view.neighbors(root).is_empty() {
                continue;
            }
            let mut tree = build_bfs_tree_limited(view, root, config.path_len_l)?;
            let mut rng = rng::stream(seed, domain, root as u64);
            let mut paths = Vec::new();
            for _ in 0..config.paths_n {
                let path =
                    random_walk_filtered(&tree, sign, config.path_len_l, theta_g, &mut rng, |c| occurrences[c] < cap);
                if path.is_empty() {
                    break;
                }
                // the first hop is cut, so the next walk takes a different branch
                tree.cut(path.nodes[1]);
                paths.push(path);
            }
            if paths.is_empty() {
                continue;
            }
            let mut members: Vec<NodeId> = paths.iter().flat_map(|p| p.nodes.iter().copied()).collect();
            members.sort_unstable();
            members.dedup();
            for &v in &members {
                occurrences[v] += 1;
            }
            let mut fakes: Vec<(NodeId, NodeId)> =
                paths.iter().flat_map(|p| extract_fake_pairs(p, |v| g.is_neighbor(root, v))).collect();
            fakes.sort_unstable();
            fakes.dedup();
            target.fake_edges.extend(fakes);
            target.paths.insert(root, paths);
        }
    }
    Ok(out)
}
