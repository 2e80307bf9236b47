//! Training loop: per-epoch seeded shuffle, per-scenario
//! forward/backward/Adam update, full validation pass, best-epoch
//! selection by validation loss.

use super::backward::backward;
use super::forward::{bce_loss, forward_cached, model_forward};
use super::optimizer::{adam_step, AdamParams, AdamState};
use super::{AttentionGraph, MgatConfig, MgatError, MgatModel};
use crate::dataset::scenario_seed;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub arch: MgatConfig,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Maximum epochs T.
    pub epochs: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(arch: MgatConfig, seed: u64) -> Self {
        TrainConfig { arch, lr: 0.01, beta1: 0.9, beta2: 0.999, eps: 1e-8, epochs: 200, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    /// Epoch whose parameters were returned (minimum validation loss).
    pub best_epoch: usize,
    pub config: TrainConfig,
}

impl TrainReport {
    /// Plot-ready curves: epoch,train_loss,val_loss,val_acc.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss,val_acc\n");
        for e in &self.epochs {
            out.push_str(&format!("{},{},{},{}\n", e.epoch, e.train_loss, e.val_loss, e.val_acc));
        }
        out
    }
}

/// Mean validation loss and per-node accuracy, dropout off.
fn validate(model: &MgatModel, graphs: &[AttentionGraph]) -> Result<(f64, f64), MgatError> {
    let mut loss = 0.0;
    let mut correct = 0usize;
    let mut total = 0usize;
    for g in graphs {
        let probs = model_forward(model, g)?;
        let crit: Vec<f64> = probs.iter().map(|p| p[1]).collect();
        loss += bce_loss(&crit, &g.labels);
        for (p, &y) in crit.iter().zip(&g.labels) {
            let label = u8::from(*p > 0.5);
            correct += usize::from(label == y);
            total += 1;
        }
    }
    Ok((loss / graphs.len() as f64, correct as f64 / total as f64))
}

/// Train a model on pre-normalized graphs. Returns the parameters of the
/// best-validation-loss epoch together with the full learning curves.
pub fn train(
    train_graphs: &[AttentionGraph],
    val_graphs: &[AttentionGraph],
    config: &TrainConfig,
) -> Result<(MgatModel, TrainReport), MgatError> {
    if train_graphs.is_empty() {
        return Err(MgatError::EmptySplit("train"));
    }
    if val_graphs.is_empty() {
        return Err(MgatError::EmptySplit("validation"));
    }

    let mut model = MgatModel::init(config.arch.clone(), scenario_seed(config.seed, 0));
    let mut state = AdamState::new(&model);
    let adam = AdamParams {
        lr: config.lr,
        beta1: config.beta1,
        beta2: config.beta2,
        eps: config.eps,
    };
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(scenario_seed(config.seed, 1));
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(scenario_seed(config.seed, 2));

    let mut stats = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, MgatModel)> = None;
    let mut order: Vec<usize> = (0..train_graphs.len()).collect();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for &idx in &order {
            let graph = &train_graphs[idx];
            let cache = forward_cached(&model, graph, Some(&mut dropout_rng))?;
            let crit: Vec<f64> = cache.probs.iter().map(|p| p[1]).collect();
            let loss = bce_loss(&crit, &graph.labels);
            if !loss.is_finite() {
                return Err(MgatError::Diverged { epoch, scenario: idx });
            }
            let grads = backward(&model, graph, &cache, &graph.labels);
            adam_step(&mut model, &grads, &mut state, &adam);
            epoch_loss += loss;
        }
        let train_loss = epoch_loss / train_graphs.len() as f64;
        let (val_loss, val_acc) = validate(&model, val_graphs)?;
        if !val_loss.is_finite() {
            return Err(MgatError::Diverged { epoch, scenario: usize::MAX });
        }
        stats.push(EpochStats { epoch, train_loss, val_loss, val_acc });
        if best.as_ref().is_none_or(|(b, _, _)| val_loss < *b) {
            best = Some((val_loss, epoch, model.clone()));
        }
    }

    let (_, best_epoch, best_model) = best.expect("at least one epoch ran");
    Ok((
        best_model,
        TrainReport { epochs: stats, best_epoch, config: config.clone() },
    ))
}

/// Predicted labels and critical-class probabilities, dropout off. A node
/// is critical when its critical-class probability exceeds 0.5; an exact
/// tie stays non-critical.
pub fn identify(model: &MgatModel, graph: &AttentionGraph) -> Result<(Vec<u8>, Vec<f64>), MgatError> {
    let probs = model_forward(model, graph)?;
    let crit: Vec<f64> = probs.iter().map(|p| p[1]).collect();
    let labels = crit.iter().map(|&p| u8::from(p > 0.5)).collect();
    Ok((labels, crit))
}
