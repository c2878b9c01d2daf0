//! Downstream metrics: edge-sign prediction AUC, SSI and the link-stealing
//! audit.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{split_edges, EdgeSplit, NodeId, Sign, SignedGraph};
use crate::model::EmbeddingTable;
use crate::rng::{self, Domain};
use crate::scalar::Scalar;
use crate::trainer::{train, SignMode, TrainConfig, TrainReport};

pub const LOGISTIC_L2: f64 = 1e-4;
pub const LOGISTIC_ITERS: usize = 500;

/// `[z_a ; z_b]` with `a = min(u, v)`.
pub fn pair_features<T: Scalar>(theta: &EmbeddingTable<T>, u: NodeId, v: NodeId) -> Vec<f64> {
    let (a, b) = if u <= v { (u, v) } else { (v, u) };
    theta.row(a).iter().chain(theta.row(b)).map(|x| x.as_f64()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPairSet {
    pub pairs: Vec<(NodeId, NodeId)>,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
}

impl LabeledPairSet {
    pub fn new<T: Scalar>(theta: &EmbeddingTable<T>, pairs: Vec<(NodeId, NodeId)>, labels: Vec<bool>) -> Result<Self> {
        if pairs.len() != labels.len() {
            return Err(Error::domain("pairs and labels differ in length"));
        }
        if let Some(&(u, v)) = pairs.iter().find(|&&(u, v)| u.max(v) >= theta.num_rows()) {
            return Err(Error::domain(format!("pair ({u}, {v}) outside the embedding table")));
        }
        let features: Vec<Vec<f64>> = pairs.iter().map(|&(u, v)| pair_features(theta, u, v)).collect();
        if features.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("pair features".into()));
        }
        Ok(LabeledPairSet { pairs, features, labels })
    }

    /// Pairs labelled by sign, positive as the true class.
    pub fn from_signed<T: Scalar>(theta: &EmbeddingTable<T>, edges: &[(NodeId, NodeId, Sign)]) -> Result<Self> {
        let pairs = edges.iter().map(|&(u, v, _)| (u, v)).collect();
        let labels = edges.iter().map(|&(_, _, s)| s == Sign::Positive).collect();
        Self::new(theta, pairs, labels)
    }
}

fn check_classes(labels: &[bool]) -> Result<()> {
    let pos = labels.iter().filter(|&&y| y).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::domain("labels must contain both classes"));
    }
    Ok(())
}

/// Per-dimension standardization; constant columns are left centered only.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(features: &[Vec<f64>]) -> Self {
        let d = features.first().map_or(0, Vec::len);
        let n = features.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for x in features {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; d];
        for x in features {
            for ((s, v), m) in var.iter_mut().zip(x).zip(&mean) {
                *s += (v - m).powi(2) / n;
            }
        }
        let scale = var.into_iter().map(|v| if v > 1e-24 { v.sqrt() } else { 1.0 }).collect();
        Standardizer { mean, scale }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub standardizer: Standardizer,
}

impl LogisticModel {
    /// Decision value `w·x + b` on standardized features.
    pub fn score(&self, x: &[f64]) -> f64 {
        let z = self.standardizer.apply(x);
        self.weights.iter().zip(&z).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        self.score(x).sigmoid()
    }
}

/// Mean log-loss plus `λ/2 ‖w‖²` and its gradient `(∂w, ∂b)`; the bias is
/// not regularized.
pub fn logistic_loss_and_grad(
    weights: &[f64],
    bias: f64,
    x: &[Vec<f64>],
    y: &[bool],
    reg: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0; weights.len()];
    let mut gb = 0.0;
    for (xi, &yi) in x.iter().zip(y) {
        let z: f64 = weights.iter().zip(xi).map(|(w, v)| w * v).sum::<f64>() + bias;
        let t = if yi { 1.0 } else { 0.0 };
        // -[t ln σ(z) + (1 - t) ln σ(-z)]
        loss -= t * z.ln_sigmoid() + (1.0 - t) * (-z).ln_sigmoid();
        let r = z.sigmoid() - t;
        for (g, v) in gw.iter_mut().zip(xi) {
            *g += r * v / n;
        }
        gb += r / n;
    }
    loss /= n;
    loss += 0.5 * reg * weights.iter().map(|w| w * w).sum::<f64>();
    for (g, w) in gw.iter_mut().zip(weights) {
        *g += reg * w;
    }
    (loss, gw, gb)
}

/// Largest eigenvalue of `[X 1]ᵀ[X 1] / n` by power iteration.
fn curvature_bound(x: &[Vec<f64>]) -> f64 {
    let d = x.first().map_or(0, Vec::len) + 1;
    let n = x.len() as f64;
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut lambda = 1.0;
    for _ in 0..50 {
        let mut out = vec![0.0; d];
        for xi in x {
            let dotp: f64 = xi.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() + v[d - 1];
            for (o, a) in out.iter_mut().zip(xi) {
                *o += dotp * a / n;
            }
            out[d - 1] += dotp / n;
        }
        let norm = out.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm <= 0.0 {
            break;
        }
        lambda = norm;
        v = out.into_iter().map(|a| a / norm).collect();
    }
    lambda
}

/// L2-regularized logistic regression by full-batch gradient descent on
/// standardized features, step `1 / (λ_max/4 + reg)`.
pub fn fit_logistic(features: &[Vec<f64>], labels: &[bool], reg: f64, max_iters: usize) -> Result<LogisticModel> {
    if features.len() != labels.len() || features.is_empty() {
        return Err(Error::domain("features and labels must be nonempty and of equal length"));
    }
    check_classes(labels)?;
    let standardizer = Standardizer::fit(features);
    let x: Vec<Vec<f64>> = features.iter().map(|f| standardizer.apply(f)).collect();
    let lr = 1.0 / (0.25 * curvature_bound(&x) + reg);
    let mut w = vec![0.0; x[0].len()];
    let mut b = 0.0;
    for _ in 0..max_iters {
        let (_, gw, gb) = logistic_loss_and_grad(&w, b, &x, labels, reg);
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= lr * g;
        }
        b -= lr * gb;
    }
    if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
        return Err(Error::NonFinite("logistic regression diverged".into()));
    }
    Ok(LogisticModel { weights: w, bias: b, standardizer })
}

/// Rank-based AUC; ties count one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::domain("scores and labels differ in length"));
    }
    check_classes(labels)?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("scores".into()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    let n_pos = labels.iter().filter(|&&y| y).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &y)| y).map(|(r, _)| r).sum();
    Ok((rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg))
}

/// Fits on `train` and returns the AUC on `test`.
pub fn train_and_score(train: &LabeledPairSet, test: &LabeledPairSet) -> Result<f64> {
    let model = fit_logistic(&train.features, &train.labels, LOGISTIC_L2, LOGISTIC_ITERS)?;
    let scores: Vec<f64> = test.features.iter().map(|x| model.score(x)).collect();
    auc(&scores, &test.labels)
}

/// Sign-prediction AUC: classifier fit on the training edges, scored on the
/// held-out ones.
pub fn eval_sign_prediction<T: Scalar>(theta_g: &EmbeddingTable<T>, split: &EdgeSplit) -> Result<f64> {
    let train = LabeledPairSet::from_signed(theta_g, &split.train_graph.signed_edges())?;
    let test = LabeledPairSet::from_signed(theta_g, &split.test_edges)?;
    train_and_score(&train, &test)
}

fn cosine<T: Scalar>(theta: &EmbeddingTable<T>, u: NodeId, v: NodeId) -> f64 {
    let (a, b) = (theta.row(u), theta.row(v));
    let dotp: f64 = a.iter().zip(b).map(|(x, y)| x.as_f64() * y.as_f64()).sum();
    let na = a.iter().map(|x| x.as_f64().powi(2)).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x.as_f64().powi(2)).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dotp / (na * nb)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsiReport {
    pub cd_pos: f64,
    pub cd_neg: f64,
    pub ssi: f64,
}

/// `1 / (|CD⁺ − 1| + |CD⁻ + 1|)` from precomputed mean cosine similarities.
pub fn ssi_from_means(cd_pos: f64, cd_neg: f64) -> f64 {
    1.0 / ((cd_pos - 1.0).abs() + (cd_neg + 1.0).abs()).max(1e-12)
}

pub fn ssi<T: Scalar>(theta_g: &EmbeddingTable<T>, test_edges: &[(NodeId, NodeId, Sign)]) -> Result<SsiReport> {
    let mut sums = [0.0f64; 2];
    let mut counts = [0usize; 2];
    for &(u, v, s) in test_edges {
        if u.max(v) >= theta_g.num_rows() {
            return Err(Error::domain(format!("edge ({u}, {v}) outside the embedding table")));
        }
        let slot = usize::from(s == Sign::Negative);
        sums[slot] += cosine(theta_g, u, v);
        counts[slot] += 1;
    }
    if counts.contains(&0) {
        return Err(Error::domain("similarity index needs test edges of both signs"));
    }
    let cd_pos = sums[0] / counts[0] as f64;
    let cd_neg = sums[1] / counts[1] as f64;
    Ok(SsiReport { cd_pos, cd_neg, ssi: ssi_from_means(cd_pos, cd_neg) })
}

/// Edges split 5:2:2:1 into target-train, aux-train, target-test, aux-test.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackPartition {
    pub target_train: Vec<(NodeId, NodeId, Sign)>,
    pub aux_train: Vec<(NodeId, NodeId, Sign)>,
    pub target_test: Vec<(NodeId, NodeId, Sign)>,
    pub aux_test: Vec<(NodeId, NodeId, Sign)>,
}

impl AttackPartition {
    /// The graph the target model is trained on: both member parts.
    pub fn member_graph(&self, num_nodes: usize) -> Result<SignedGraph> {
        let edges = self.target_train.iter().chain(&self.aux_train).copied();
        Ok(SignedGraph::from_edges(num_nodes, edges)?.0)
    }
}

pub fn attack_partition(g: &SignedGraph, seed: u64) -> Result<AttackPartition> {
    let mut edges = g.signed_edges();
    let n = edges.len();
    if n < 10 {
        return Err(Error::domain(format!("{n} edges cannot be split 5:2:2:1")));
    }
    edges.shuffle(&mut rng::stream(seed, Domain::Attack, 0));
    let a = (n as f64 * 0.5).round() as usize;
    let b = (n as f64 * 0.2).round() as usize;
    let c = (n as f64 * 0.2).round() as usize;
    let (a, b, c) = (a, b, c.min(n - a - b - 1));
    let aux_test = edges.split_off(a + b + c);
    let target_test = edges.split_off(a + b);
    let aux_train = edges.split_off(a);
    Ok(AttackPartition { target_train: edges, aux_train, target_test, aux_test })
}

fn membership_set<T: Scalar>(
    theta: &EmbeddingTable<T>,
    members: &[(NodeId, NodeId, Sign)],
    others: &[(NodeId, NodeId, Sign)],
) -> Result<LabeledPairSet> {
    let pairs = members.iter().chain(others).map(|&(u, v, _)| (u, v)).collect();
    let labels = std::iter::repeat_n(true, members.len()).chain(std::iter::repeat_n(false, others.len())).collect();
    LabeledPairSet::new(theta, pairs, labels)
}

/// Link-stealing audit. `target_train_fn` receives the member graph and
/// returns the published embeddings; the attacker learns membership from the
/// auxiliary parts and is scored on the target parts.
pub fn link_stealing_attack<T, F>(g: &SignedGraph, seed: u64, target_train_fn: F) -> Result<f64>
where
    T: Scalar,
    F: FnOnce(&SignedGraph) -> Result<EmbeddingTable<T>>,
{
    let part = attack_partition(g, seed)?;
    let members = part.member_graph(g.num_nodes())?;
    let theta = target_train_fn(&members)?;
    let train = membership_set(&theta, &part.aux_train, &part.aux_test)?;
    let test = membership_set(&theta, &part.target_train, &part.target_test)?;
    train_and_score(&train, &test)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auc: Option<f64>,
    pub ssi: Option<f64>,
    pub attack_auc: Option<f64>,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Debug, Clone)]
pub struct VariantResult {
    pub mode: SignMode,
    pub auc: f64,
    pub report: TrainReport,
}

/// Trains and evaluates the single-sign variants on the training graph of
/// `split`.
pub fn ablation_variants(split: &EdgeSplit, config: &TrainConfig) -> Result<Vec<VariantResult>> {
    [SignMode::Positive, SignMode::Negative]
        .into_iter()
        .map(|mode| {
            let cfg = TrainConfig { signs: mode, ..config.clone() };
            let out = train::<f64>(&split.train_graph, &cfg)?;
            let auc = eval_sign_prediction(&out.theta_g, split)?;
            Ok(VariantResult { mode, auc, report: out.report })
        })
        .collect()
}

/// Train, split and score in one go: the pipeline behind a single sign
/// prediction result.
pub fn run_sign_prediction(
    g: &SignedGraph,
    config: &TrainConfig,
    test_fraction: f64,
    split_seed: u64,
) -> Result<(f64, TrainReport)> {
    let split = split_edges(g, test_fraction, split_seed)?;
    let out = train::<f64>(&split.train_graph, config)?;
    Ok((eval_sign_prediction(&out.theta_g, &split)?, out.report))
}

/// Random signed graph with planted factions. Each node joins faction 0 with
/// probability `majority` and one of two minority factions otherwise; `m`
/// distinct pairs are drawn with endpoints biased towards low ids (a skewed
/// degree profile), and an edge is positive between equal factions and
/// negative otherwise, flipped with probability `noise`.
pub fn planted_signed_graph(n: usize, m: usize, majority: f64, noise: f64, seed: u64) -> Result<SignedGraph> {
    if n < 2 || m > n * (n - 1) / 2 {
        return Err(Error::domain("cannot place that many edges"));
    }
    let mut rng = rng::stream(seed, Domain::Synthetic, 0);
    let faction: Vec<u8> =
        (0..n).map(|_| if rng.random::<f64>() < majority { 0 } else { 1 + rng.random_range(0..2u8) }).collect();
    let mut seen = std::collections::HashSet::new();
    let mut edges = Vec::with_capacity(m);
    let skewed = |rng: &mut rng::StreamRng| ((rng.random::<f64>().powi(2)) * n as f64) as usize % n;
    while edges.len() < m {
        let u = skewed(&mut rng);
        let v = rng.random_range(0..n);
        if u == v || !seen.insert((u.min(v), u.max(v))) {
            continue;
        }
        let mut sign = if faction[u] == faction[v] { Sign::Positive } else { Sign::Negative };
        if rng.random::<f64>() < noise {
            sign = sign.flip();
        }
        edges.push((u, v, sign));
    }
    Ok(SignedGraph::from_edges(n, edges)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.9, 0.1], &[true, false]).unwrap(), 1.0);
        assert_eq!(auc(&[0.3, 0.3, 0.3], &[true, false, true]).unwrap(), 0.5);
        assert_eq!(auc(&[0.8, 0.6, 0.4], &[true, false, true]).unwrap(), 0.5);
        assert!(auc(&[0.1, 0.2], &[true, true]).is_err());
    }

    fn brute_auc(s: &[f64], y: &[bool]) -> f64 {
        let mut total = 0.0;
        let mut pairs = 0.0;
        for i in 0..s.len() {
            for j in 0..s.len() {
                if y[i] && !y[j] {
                    pairs += 1.0;
                    total += if s[i] > s[j] {
                        1.0
                    } else if s[i] == s[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        total / pairs
    }

    proptest! {
        #[test]
        fn auc_matches_pair_count(v in prop::collection::vec((0u8..6, any::<bool>()), 2..40)) {
            let s: Vec<f64> = v.iter().map(|&(x, _)| x as f64).collect();
            let y: Vec<bool> = v.iter().map(|&(_, b)| b).collect();
            prop_assume!(y.iter().any(|&b| b) && y.iter().any(|&b| !b));
            let a = auc(&s, &y).unwrap();
            prop_assert!((a - brute_auc(&s, &y)).abs() < 1e-12);
            let t: Vec<f64> = s.iter().map(|x| (x * 0.7).exp()).collect();
            prop_assert!((auc(&t, &y).unwrap() - a).abs() < 1e-12);
        }
    }

    #[test]
    fn separable_points_are_fit() {
        let x = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let y = vec![true, false];
        let m = fit_logistic(&x, &y, LOGISTIC_L2, LOGISTIC_ITERS).unwrap();
        assert!(m.predict_proba(&x[0]) > 0.5 && m.predict_proba(&x[1]) < 0.5);
        assert!(fit_logistic(&x, &[true, true], LOGISTIC_L2, 10).is_err());
    }

    #[test]
    fn logistic_gradient_matches_finite_differences() {
        let mut rng = rng::stream(3, Domain::Eval, 0);
        let x: Vec<Vec<f64>> = (0..20).map(|_| (0..4).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let y: Vec<bool> = (0..20).map(|_| rng.random()).collect();
        let w: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = 0.3;
        let (_, gw, gb) = logistic_loss_and_grad(&w, b, &x, &y, 0.1);
        let h = 1e-6;
        for j in 0..4 {
            let (mut wp, mut wm) = (w.clone(), w.clone());
            wp[j] += h;
            wm[j] -= h;
            let fd = (logistic_loss_and_grad(&wp, b, &x, &y, 0.1).0 - logistic_loss_and_grad(&wm, b, &x, &y, 0.1).0)
                / (2.0 * h);
            assert!((fd - gw[j]).abs() <= 1e-6 * gw[j].abs().max(1e-3));
        }
        let fd = (logistic_loss_and_grad(&w, b + h, &x, &y, 0.1).0 - logistic_loss_and_grad(&w, b - h, &x, &y, 0.1).0)
            / (2.0 * h);
        assert!((fd - gb).abs() <= 1e-6 * gb.abs().max(1e-3));
    }

    #[test]
    fn random_labels_give_chance_auc() {
        let mut means = Vec::new();
        for seed in 0..5 {
            let mut rng = rng::stream(seed, Domain::Eval, 1);
            let mk = |rng: &mut rng::StreamRng, n: usize| {
                let x: Vec<Vec<f64>> = (0..n).map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
                let y: Vec<bool> = (0..n).map(|_| rng.random()).collect();
                (x, y)
            };
            let (xt, yt) = mk(&mut rng, 400);
            let (xs, ys) = mk(&mut rng, 400);
            let m = fit_logistic(&xt, &yt, LOGISTIC_L2, LOGISTIC_ITERS).unwrap();
            let s: Vec<f64> = xs.iter().map(|x| m.score(x)).collect();
            means.push(auc(&s, &ys).unwrap());
        }
        let mean = means.iter().sum::<f64>() / means.len() as f64;
        assert!((mean - 0.5).abs() < 0.05, "{means:?}");
    }

    #[test]
    fn ssi_examples() {
        assert_relative_eq!(ssi_from_means(0.5, -0.5), 1.0);
        assert_eq!(ssi_from_means(1.0, -1.0), 1e12);
        let same = EmbeddingTable::from_rows(vec![vec![1.0, 2.0]; 4]).unwrap();
        let edges = [(0, 1, Sign::Positive), (2, 3, Sign::Negative)];
        let r = ssi(&same, &edges).unwrap();
        assert_relative_eq!(r.ssi, 0.5, epsilon = 1e-12);
        assert!(ssi(&same, &edges[..1]).is_err());

        let t =
            EmbeddingTable::from_rows(vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![-1.0, 0.2], vec![0.0, 0.0]]).unwrap();
        let e = [(0, 1, Sign::Positive), (0, 2, Sign::Negative), (1, 3, Sign::Negative)];
        let a = ssi(&t, &e).unwrap();
        let scaled =
            EmbeddingTable::from_rows(t.rows().map(|r| r.iter().map(|x| 3.0 * x).collect()).collect()).unwrap();
        assert_relative_eq!(ssi(&scaled, &e).unwrap().ssi, a.ssi, epsilon = 1e-12);
    }

    #[test]
    fn partition_ratios() {
        let g = planted_signed_graph(60, 200, 0.8, 0.05, 1).unwrap();
        let p = attack_partition(&g, 4).unwrap();
        assert_eq!((p.target_train.len(), p.aux_train.len(), p.target_test.len(), p.aux_test.len()), (100, 40, 40, 20));
        let tiny = planted_signed_graph(6, 5, 0.8, 0.0, 1).unwrap();
        assert!(attack_partition(&tiny, 0).is_err());
    }

    #[test]
    fn attack_on_random_embeddings_is_chance() {
        let g = planted_signed_graph(300, 2000, 0.8, 0.05, 2).unwrap();
        let mut total = 0.0;
        for seed in 0..5 {
            let a = link_stealing_attack(&g, seed, |m| {
                EmbeddingTable::<f64>::init_uniform(m.num_nodes(), 8, &mut rng::stream(seed, Domain::InitGenerator, 9))
            })
            .unwrap();
            total += a;
        }
        assert!((total / 5.0 - 0.5).abs() < 0.05);
    }

    #[test]
    fn planted_graph_is_deterministic() {
        let a = planted_signed_graph(100, 400, 0.8, 0.05, 7).unwrap();
        let b = planted_signed_graph(100, 400, 0.8, 0.05, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total_edges(), 400);
        assert!(a.num_edges(Sign::Positive) > a.num_edges(Sign::Negative));
    }
}
