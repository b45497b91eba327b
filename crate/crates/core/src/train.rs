//! Mini-batch Adam training of box embeddings.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::embedding::{BoxEmbedding, EmbeddingMeta, RelationMode};
use crate::loss::{pairwise_sum, regularizer_gradient, regularizer_loss, AxiomTerm, CompiledTBox, Gradient, LossConfig, LossError};
use crate::normalize::{is_normal_conditional, is_normal_form, is_safe};
use crate::ontology::{Signature, TBox};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("the TBox is not in normal form")]
    NotNormalized,
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error("could not build thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Learning rate of the last epoch as a fraction of `learning_rate`;
    /// intermediate epochs interpolate geometrically. 1 keeps it constant.
    pub lr_final_ratio: f64,
    pub seed: u64,
    pub beta: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub use_loc: bool,
    pub use_vol: bool,
    pub relation_mode: RelationMode,
    /// Probabilistic losses on volume ratios; see [`LossConfig::relative`].
    pub relative_loss: bool,
    /// Accept probabilistic conditionals over complex concepts as they are,
    /// instead of requiring the renamed normal form. GCIs must still be normal.
    pub complex_conditionals: bool,
    /// Initial side lengths are drawn log-uniformly from
    /// `[init_side_min·β, init_side_max·β]`.
    pub init_side_min: f64,
    pub init_side_max: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 16,
            epochs: 30,
            batch_size: 256,
            learning_rate: 0.05,
            lr_final_ratio: 1.0,
            seed: 0,
            beta: 10.0,
            t_start: 1.0,
            t_end: 1e-3,
            use_loc: true,
            use_vol: true,
            relation_mode: RelationMode::Affine,
            relative_loss: false,
            complex_conditionals: false,
            init_side_min: 0.1,
            init_side_max: 0.5,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl TrainConfig {
    // Negated comparisons so that NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: &str| Err(TrainError::Config(msg.to_string()));
        if self.dim == 0 {
            return bad("dimension must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if !(self.lr_final_ratio > 0.0 && self.lr_final_ratio <= 1.0) {
            return bad("final learning-rate ratio must lie in (0, 1]");
        }
        if !(self.beta > 0.0) {
            return bad("beta must be positive");
        }
        if !(self.init_side_min > 0.0 && self.init_side_min <= self.init_side_max && self.init_side_max <= 1.0) {
            return bad("initial side fractions must satisfy 0 < min <= max <= 1");
        }
        if !(self.t_end > 0.0 && self.t_start >= self.t_end) {
            return bad("temperatures must satisfy t_start >= t_end > 0");
        }
        Ok(())
    }

    /// Softplus temperature used in epoch `k` (0-based).
    pub fn temperature(&self, k: usize) -> f64 {
        if self.epochs <= 1 {
            return self.t_start;
        }
        let frac = k as f64 / (self.epochs - 1) as f64;
        self.t_start * (self.t_end / self.t_start).powf(frac)
    }

    /// Learning rate used in epoch `k` (0-based).
    pub fn learning_rate_at(&self, k: usize) -> f64 {
        if self.epochs <= 1 {
            return self.learning_rate;
        }
        self.learning_rate * self.lr_final_ratio.powf(k as f64 / (self.epochs - 1) as f64)
    }

    /// Loss configuration at temperature `t`.
    pub fn loss_config(&self, t: f64) -> LossConfig {
        LossConfig {
            beta: self.beta,
            use_loc: self.use_loc,
            use_vol: self.use_vol,
            relation_mode: self.relation_mode,
            relative: self.relative_loss,
            ..LossConfig::default()
        }
        .with_temperature(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub seed: u64,
    /// Summed softplus axiom loss at the end of each epoch, at that epoch's temperature.
    pub epoch_loss: Vec<f64>,
    /// Regularizer value at the end of each epoch.
    pub epoch_regularizer: Vec<f64>,
    pub initial_hard_loss: f64,
    pub final_hard_loss: f64,
    pub seconds_per_epoch: Vec<f64>,
}

impl TrainReport {
    pub fn mean_seconds_per_epoch(&self) -> f64 {
        if self.seconds_per_epoch.is_empty() {
            0.0
        } else {
            self.seconds_per_epoch.iter().sum::<f64>() / self.seconds_per_epoch.len() as f64
        }
    }
}

/// Random initial boxes inside `[0, β]^n` and near-identity role maps.
pub fn init_embedding(signature: &Signature, cfg: &TrainConfig, seed: u64) -> BoxEmbedding {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    init_with(signature, cfg, seed, &mut rng)
}

fn init_with(signature: &Signature, cfg: &TrainConfig, seed: u64, rng: &mut ChaCha8Rng) -> BoxEmbedding {
    let meta = EmbeddingMeta {
        seed,
        epochs: cfg.epochs,
        beta: cfg.beta,
        relation_mode: cfg.relation_mode,
    };
    let mut e = BoxEmbedding::zeros(signature, cfg.dim, meta);
    let (lo, hi) = ((cfg.init_side_min * cfg.beta).ln(), (cfg.init_side_max * cfg.beta).ln());
    for id in 0..e.concept_names().len() {
        let log_side: Vec<f64> = (0..cfg.dim).map(|_| rng.gen_range(lo..=hi)).collect();
        let lower: Vec<f64> = log_side
            .iter()
            .map(|d| rng.gen_range(0.0..=(cfg.beta - d.exp()).max(0.0)))
            .collect();
        e.set_concept(id, &lower, &log_side);
    }
    for id in 0..e.role_names().len() {
        let log_diag: Vec<f64> = (0..cfg.dim)
            .map(|_| match cfg.relation_mode {
                RelationMode::Affine => rng.gen_range(-0.1..=0.1),
                RelationMode::Translation => 0.0,
            })
            .collect();
        let offset: Vec<f64> = (0..cfg.dim)
            .map(|_| rng.gen_range(-0.1 * cfg.beta..=0.1 * cfg.beta))
            .collect();
        e.set_role(id, &log_diag, &offset);
    }
    e
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    fn update(&mut self, e: &mut BoxEmbedding, grad: &Gradient, cfg: &TrainConfig, lr: f64) {
        self.step += 1;
        let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
        let c1 = 1.0 - b1.powi(self.step);
        let c2 = 1.0 - b2.powi(self.step);
        for (((w, g), m), v) in e.parameters_mut().zip(grad.iter()).zip(&mut self.m).zip(&mut self.v) {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *w -= lr * (*m / c1) / ((*v / c2).sqrt() + cfg.adam_eps);
        }
    }
}

fn axiom_sum(axioms: &[AxiomTerm], e: &BoxEmbedding, cfg: &LossConfig) -> f64 {
    let losses: Vec<f64> = axioms.iter().map(|a| a.value(e, cfg)).collect();
    pairwise_sum(&losses)
}

/// Trains an embedding of `t` over its own signature.
pub fn train(t: &TBox, cfg: &TrainConfig) -> Result<(BoxEmbedding, TrainReport), TrainError> {
    train_with_signature(t, t.signature(), cfg)
}

/// Trains an embedding of `t` that also has boxes for every name of
/// `signature` (names outside `t` only feel the regularizers).
pub fn train_with_signature(
    t: &TBox,
    signature: &Signature,
    cfg: &TrainConfig,
) -> Result<(BoxEmbedding, TrainReport), TrainError> {
    cfg.validate()?;
    let normal = if cfg.complex_conditionals {
        t.iter().all(|c| !c.is_deterministic() || is_normal_conditional(c))
    } else {
        is_normal_form(t)
    };
    if !normal {
        return Err(TrainError::NotNormalized);
    }
    if !matches!(is_safe(t), Ok(true)) {
        log::warn!("training on a TBox that is not safe");
    }
    let mut sig = signature.clone();
    sig.concepts.extend(t.signature().concepts.iter().cloned());
    sig.roles.extend(t.signature().roles.iter().cloned());

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut e = init_with(&sig, cfg, cfg.seed, &mut rng);
    let compiled = CompiledTBox::new(t, &e)?;
    let axioms = &compiled.axioms;
    let hard = cfg.loss_config(1.0).hard();

    let mut report = TrainReport {
        seed: cfg.seed,
        epoch_loss: Vec::with_capacity(cfg.epochs),
        epoch_regularizer: Vec::with_capacity(cfg.epochs),
        initial_hard_loss: axiom_sum(axioms, &e, &hard),
        final_hard_loss: 0.0,
        seconds_per_epoch: Vec::with_capacity(cfg.epochs),
    };

    let mut order: Vec<usize> = (0..axioms.len()).collect();
    let num_batches = axioms.len().div_ceil(cfg.batch_size).max(1);
    let mut adam = Adam::new(e.parameter_count());
    let mut grad = Gradient::zeros_like(&e);

    for epoch in 0..cfg.epochs {
        let start = Instant::now();
        let loss_cfg = cfg.loss_config(cfg.temperature(epoch));
        let lr = cfg.learning_rate_at(epoch);
        order.shuffle(&mut rng);
        for b in 0..num_batches {
            let batch = &order[(b * cfg.batch_size).min(order.len())..((b + 1) * cfg.batch_size).min(order.len())];
            grad.scale(0.0);
            if !batch.is_empty() {
                let w = 1.0 / batch.len() as f64;
                for &i in batch {
                    axioms[i].accumulate_gradient(&e, &loss_cfg, w, &mut grad);
                }
            }
            regularizer_gradient(&e, &loss_cfg, 1.0 / num_batches as f64, &mut grad);
            adam.update(&mut e, &grad, cfg, lr);
        }
        report.seconds_per_epoch.push(start.elapsed().as_secs_f64());
        report.epoch_loss.push(axiom_sum(axioms, &e, &loss_cfg));
        report.epoch_regularizer.push(regularizer_loss(&e, &loss_cfg));
        log::debug!(
            "seed {} epoch {} loss {:.6} regularizer {:.6}",
            cfg.seed,
            epoch + 1,
            report.epoch_loss[epoch],
            report.epoch_regularizer[epoch]
        );
    }
    report.final_hard_loss = axiom_sum(axioms, &e, &hard);
    Ok((e, report))
}

/// Trains `count` embeddings with seeds `seed, seed + 1, …` on `threads`
/// worker threads (0 picks the default).
pub fn train_ensemble(
    t: &TBox,
    signature: &Signature,
    cfg: &TrainConfig,
    count: usize,
    threads: usize,
) -> Result<Vec<(BoxEmbedding, TrainReport)>, TrainError> {
    if count == 0 {
        return Err(TrainError::Config("ensemble size must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| TrainError::ThreadPool(e.to_string()))?;
    pool.install(|| {
        (0..count as u64)
            .into_par_iter()
            .map(|i| {
                let member = TrainConfig {
                    seed: cfg.seed.wrapping_add(i),
                    ..cfg.clone()
                };
                train_with_signature(t, signature, &member)
            })
            .collect()
    })
}
