//! Alternating noisy discriminator ascent and generator descent.

use std::io::Write;

use log::{debug, info, warn};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::accountant::{default_orders, PrivacyLedger, SubsampledGaussian};
use crate::dp::{clip_rows, noisy_table_gradient, DpConfig, DEFAULT_SIGMA};
use crate::error::{Error, Result};
use crate::graph::{NodeId, Sign, SignedGraph};
use crate::model::{
    apply_dense, apply_update, disc_batch_grad, gen_grad, gen_surrogate, Direction, EdgeCase, EmbeddingTable,
    SparseGrad, TaggedEdge,
};
use crate::rng::{self, Domain};
use crate::sampler::{sample_subgraphs_for, SubgraphSet};
use crate::scalar::Scalar;

/// Which signs take part in training.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignMode {
    #[default]
    Both,
    Positive,
    Negative,
}

impl SignMode {
    pub fn signs(self) -> &'static [Sign] {
        match self {
            SignMode::Both => &Sign::BOTH,
            SignMode::Positive => &[Sign::Positive],
            SignMode::Negative => &[Sign::Negative],
        }
    }
}

/// Training hyperparameters. Flat so that it maps one-to-one onto a
/// key-value config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub sigma: f64,
    pub clip: f64,
    pub paths_n: usize,
    pub path_len_l: usize,
    pub dim: usize,
    pub n_epoch: usize,
    pub n_iter: usize,
    pub batch_d: usize,
    pub batch_g: usize,
    pub lr_d: f64,
    pub lr_g: f64,
    pub seed: u64,
    /// When false, discriminator gradients are clipped but not perturbed and
    /// the budget is ignored.
    pub private: bool,
    pub signs: SignMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epsilon: 3.0,
            delta: 1e-5,
            sigma: DEFAULT_SIGMA,
            clip: 1.0,
            paths_n: 3,
            path_len_l: 4,
            dim: 128,
            n_epoch: 1000,
            n_iter: 10,
            batch_d: 256,
            batch_g: 256,
            lr_d: 0.002,
            lr_g: 0.1,
            seed: 0,
            private: true,
            signs: SignMode::Both,
        }
    }
}

impl TrainConfig {
    pub fn dp(&self) -> DpConfig {
        DpConfig {
            epsilon_target: self.epsilon,
            delta: self.delta,
            sigma: self.sigma,
            clip_c: self.clip,
            path_count_n: self.paths_n,
            path_len_l: self.path_len_l,
            batch_size_d: self.batch_d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dp().validate()?;
        if self.dim == 0 || self.n_iter == 0 || self.batch_g == 0 {
            return Err(Error::Config("dim, n_iter and batch_g must be positive".into()));
        }
        if !(self.lr_d > 0.0 && self.lr_d.is_finite()) || !(self.lr_g > 0.0 && self.lr_g.is_finite()) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        Ok(())
    }
}

/// The four training edge sets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeSets {
    pub disc_pos: Vec<TaggedEdge>,
    pub gen_pos: Vec<TaggedEdge>,
    pub disc_neg: Vec<TaggedEdge>,
    pub gen_neg: Vec<TaggedEdge>,
}

impl EdgeSets {
    pub fn disc(&self, sign: Sign) -> &[TaggedEdge] {
        match sign {
            Sign::Positive => &self.disc_pos,
            Sign::Negative => &self.disc_neg,
        }
    }

    pub fn gen(&self, sign: Sign) -> &[TaggedEdge] {
        match sign {
            Sign::Positive => &self.gen_pos,
            Sign::Negative => &self.gen_neg,
        }
    }
}

/// `E_D±` holds every real edge of the sign once plus every fake pair; `E_G±`
/// holds the fake pairs only.
pub fn build_edge_sets(g: &SignedGraph, s_tr: &SubgraphSet) -> EdgeSets {
    let mut sets = EdgeSets::default();
    for sign in Sign::BOTH {
        let real = g.edges(sign);
        if real.is_empty() {
            warn!("no real {sign} edges; that discriminator has nothing to learn from");
        }
        let fakes: Vec<TaggedEdge> =
            s_tr.fake_edges(sign).iter().map(|&(r, t)| TaggedEdge::new(r, t, EdgeCase::fake(sign))).collect();
        let mut disc: Vec<TaggedEdge> =
            real.into_iter().map(|(u, v)| TaggedEdge::new(u, v, EdgeCase::real(sign))).collect();
        disc.extend(fakes.iter().copied());
        match sign {
            Sign::Positive => {
                sets.disc_pos = disc;
                sets.gen_pos = fakes;
            }
            Sign::Negative => {
                sets.disc_neg = disc;
                sets.gen_neg = fakes;
            }
        }
    }
    sets
}

/// Counts kept per sign, positive first.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerSign<T> {
    pub positive: T,
    pub negative: T,
}

impl<T> PerSign<T> {
    pub fn get(&self, sign: Sign) -> &T {
        match sign {
            Sign::Positive => &self.positive,
            Sign::Negative => &self.negative,
        }
    }

    pub fn get_mut(&mut self, sign: Sign) -> &mut T {
        match sign {
            Sign::Positive => &mut self.positive,
            Sign::Negative => &mut self.negative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub ledger: PrivacyLedger,
    pub private: bool,
    /// `None` for non-private runs.
    pub epsilon_spent: Option<f64>,
    pub best_alpha: Option<f64>,
    pub spent_delta: Option<f64>,
    pub epochs_completed: usize,
    pub disc_steps: PerSign<u64>,
    pub gen_steps: PerSign<u64>,
    pub stopped_early: bool,
    /// Frobenius norm of each noisy discriminator gradient.
    pub disc_trace: PerSign<Vec<f64>>,
    /// Generator surrogate objective of each batch.
    pub gen_trace: PerSign<Vec<f64>>,
    /// Edge-set entries drawn into batches, by edge sign.
    pub consumed: PerSign<u64>,
    pub num_subgraphs: PerSign<usize>,
}

#[derive(Debug, Clone)]
pub struct TrainOutput<T> {
    pub theta_g: EmbeddingTable<T>,
    pub theta_d: EmbeddingTable<T>,
    pub subgraphs: SubgraphSet,
    pub report: TrainReport,
}

fn draw_batch(set: &[TaggedEdge], size: usize, seed: u64, domain: Domain, step: u64) -> Vec<TaggedEdge> {
    let mut rng = rng::stream(seed, domain, step);
    let amount = size.min(set.len());
    let mut idx = index::sample(&mut rng, set.len(), amount).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| set[i]).collect()
}

fn frobenius<T: Scalar>(t: &EmbeddingTable<T>) -> f64 {
    t.as_slice().iter().map(|x| x.as_f64().powi(2)).sum::<f64>().sqrt()
}

fn sparse_frobenius<T: Scalar>(g: &SparseGrad<T>) -> f64 {
    g.iter().flat_map(|(_, r)| r.iter()).map(|x| x.as_f64().powi(2)).sum::<f64>().sqrt()
}

/// Trains on every node of `g` with the given configuration.
pub fn train<T: Scalar>(g: &SignedGraph, config: &TrainConfig) -> Result<TrainOutput<T>> {
    let nodes: Vec<NodeId> = (0..g.num_nodes()).collect();
    train_on(g, &nodes, config)
}

/// Trains with `train_nodes` as the sampling roots.
pub fn train_on<T: Scalar>(g: &SignedGraph, train_nodes: &[NodeId], config: &TrainConfig) -> Result<TrainOutput<T>> {
    config.validate()?;
    if g.num_nodes() == 0 || g.total_edges() == 0 {
        return Err(Error::domain("graph has no edges"));
    }
    let signs = config.signs.signs();
    for &s in signs {
        if g.num_edges(s) == 0 && config.signs != SignMode::Both {
            return Err(Error::domain(format!("no {s} edges to train on")));
        }
    }
    let dp = config.dp();
    let seed = config.seed;
    let (n, k) = (g.num_nodes(), config.dim);
    let mut theta_g = EmbeddingTable::<T>::init_uniform(n, k, &mut rng::stream(seed, Domain::InitGenerator, 0))?;
    let mut theta_d = EmbeddingTable::<T>::init_uniform(n, k, &mut rng::stream(seed, Domain::InitDiscriminator, 0))?;

    let s_tr = sample_subgraphs_for(g, train_nodes, dp.sampler(), &theta_g, seed, signs)?;
    let sets = build_edge_sets(g, &s_tr);
    let num_subgraphs = PerSign { positive: s_tr.positive.num_subgraphs(), negative: s_tr.negative.num_subgraphs() };
    let r_nl = dp.receptive_field() as u64;
    // a discriminator with no subgraphs still reads real edges, so it is
    // charged as if every step touched the whole (single-element) set
    let mech = |sign: Sign| {
        let n_tr = (*num_subgraphs.get(sign)).max(1) as u64;
        SubsampledGaussian::new(dp.sigma, n_tr, r_nl, dp.batch_size_d as u64)
    };
    let mut ledger = PrivacyLedger::new(mech(Sign::Positive)?, mech(Sign::Negative)?, default_orders())?;
    let active: Vec<Sign> = signs.iter().copied().filter(|&s| !sets.disc(s).is_empty()).collect();
    if config.private && config.n_epoch > 0 {
        if let Some(&first) = active.first() {
            let eps = ledger.epsilon_after(first, dp.delta)?;
            if eps > dp.epsilon_target {
                return Err(Error::BudgetInfeasible(format!(
                    "a single discriminator step already costs epsilon {eps:.4} > target {}",
                    dp.epsilon_target
                )));
            }
        }
    }
    info!(
        "training: {} nodes, |E_D+|={} |E_D-|={} |E_G+|={} |E_G-|={}, subgraphs +{} -{}",
        n,
        sets.disc_pos.len(),
        sets.disc_neg.len(),
        sets.gen_pos.len(),
        sets.gen_neg.len(),
        num_subgraphs.positive,
        num_subgraphs.negative
    );

    let delta_g = dp.sensitivity();
    let lr_d = T::from_f64_lossy(config.lr_d);
    let lr_g = T::from_f64_lossy(config.lr_g);
    let clip_c = T::from_f64_lossy(dp.clip_c);
    let mut disc_steps = PerSign::<u64>::default();
    let mut gen_steps = PerSign::<u64>::default();
    let mut disc_trace = PerSign::<Vec<f64>>::default();
    let mut gen_trace = PerSign::<Vec<f64>>::default();
    let mut consumed = PerSign::<u64>::default();
    let mut d_step: u64 = 0;
    let mut g_step: u64 = 0;
    let mut stopped_early = false;
    let mut epochs_completed = 0;

    'epochs: for epoch in 0..config.n_epoch {
        for &sign in &active {
            for _ in 0..config.n_iter {
                if config.private {
                    let eps = ledger.epsilon_after(sign, dp.delta)?;
                    if eps > dp.epsilon_target {
                        debug!("budget reached before discriminator step {d_step} (epoch {epoch})");
                        stopped_early = true;
                        break 'epochs;
                    }
                }
                let batch = draw_batch(sets.disc(sign), dp.batch_size_d, seed, Domain::BatchDiscriminator, d_step);
                let mut grad = disc_batch_grad(&batch, &theta_d);
                clip_rows(&mut grad, clip_c);
                if config.private {
                    let mut noise_rng = rng::stream(seed, Domain::Noise, d_step);
                    let noisy = noisy_table_gradient(&grad, n, delta_g, dp.sigma, batch.len(), &mut noise_rng)?;
                    disc_trace.get_mut(sign).push(frobenius(&noisy));
                    apply_dense(&mut theta_d, &noisy, lr_d, Direction::Ascend)?;
                    ledger.record(sign);
                } else {
                    let inv_b = T::one() / T::from_f64_lossy(batch.len() as f64);
                    for (_, row) in grad.iter_mut() {
                        row.iter_mut().for_each(|x| *x = *x * inv_b);
                    }
                    disc_trace.get_mut(sign).push(sparse_frobenius(&grad));
                    apply_update(&mut theta_d, &grad, lr_d, Direction::Ascend)?;
                }
                *consumed.get_mut(sign) += batch.len() as u64;
                *disc_steps.get_mut(sign) += 1;
                d_step += 1;
            }
            let gen_set = sets.gen(sign);
            for _ in 0..config.n_iter {
                if gen_set.is_empty() {
                    break;
                }
                let batch = draw_batch(gen_set, config.batch_g, seed, Domain::BatchGenerator, g_step);
                let objective = gen_surrogate(&batch, &theta_g, &theta_d).as_f64();
                if !objective.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "generator objective at step {g_step} (epoch {epoch}, sign {sign}); theta_g finite: {}, theta_d finite: {}",
                        theta_g.is_finite(),
                        theta_d.is_finite()
                    )));
                }
                let grad = gen_grad(&batch, &theta_g, &theta_d)?;
                apply_update(&mut theta_g, &grad, lr_g, Direction::Descend)?;
                gen_trace.get_mut(sign).push(objective);
                *consumed.get_mut(sign) += batch.len() as u64;
                *gen_steps.get_mut(sign) += 1;
                g_step += 1;
            }
        }
        epochs_completed = epoch + 1;
    }

    let (epsilon_spent, best_alpha, spent_delta) = if config.private {
        let (eps, alpha) = ledger.to_dp(dp.delta)?;
        info!("epsilon {eps:.4} at alpha {alpha}");
        (Some(eps), Some(alpha), Some(ledger.spent_delta(dp.epsilon_target)))
    } else {
        (None, None, None)
    };
    info!(
        "done: {epochs_completed} epochs, D steps +{} -{}, stopped early: {stopped_early}",
        disc_steps.positive, disc_steps.negative
    );
    Ok(TrainOutput {
        theta_g,
        theta_d,
        subgraphs: s_tr,
        report: TrainReport {
            ledger,
            private: config.private,
            epsilon_spent,
            best_alpha,
            spent_delta,
            epochs_completed,
            disc_steps,
            gen_steps,
            stopped_early,
            disc_trace,
            gen_trace,
            consumed,
            num_subgraphs,
        },
    })
}

/// Writes `θ_G` in the embedding text format.
pub fn export<T: Scalar, W: Write>(theta_g: &EmbeddingTable<T>, out: W) -> Result<()> {
    theta_g.write_text(out)
}
