//! Multi-head dynamic-attention graph network for binary node and branch
//! classification: forward pass, analytic backward pass, Adam training and
//! inference. Everything is plain `f64` linear algebra — no autograd.
//!
//! One network architecture serves both targets: the node classifier runs
//! on the bus graph with 5-dim inputs, the branch classifier on the line
//! graph with 6-dim inputs. Two independent models are trained.

mod attention;
mod backward;
mod forward;
mod optimizer;
mod train;

pub use attention::{attention_coeffs, softmax, AttentionMode};
pub use backward::{backward, Gradients};
pub use forward::{bce_loss, kink_signature, model_forward, ForwardCache};
pub use optimizer::{adam_step, AdamParams, AdamState};
pub use train::{identify, train, EpochStats, TrainConfig, TrainReport};

use crate::dataset::{FeatureGraph, FeatureScaler};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which population a model classifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Nodes,
    Branches,
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgatConfig {
    /// Feature width of the input graph.
    pub input_dim: usize,
    /// Hidden layer widths (per head; heads are averaged, not concatenated).
    pub hidden: Vec<usize>,
    pub heads: usize,
    pub dropout: f64,
    /// LeakyReLU negative slope, shared by activations and scoring.
    pub slope: f64,
    pub mode: AttentionMode,
    /// Drop input features during training.
    pub dropout_inputs: bool,
    /// Drop attention coefficients during training.
    pub dropout_attention: bool,
}

impl MgatConfig {
    /// Defaults: two layers (one hidden of width 8, then the 2-class
    /// output), two heads, dropout 0.5, slope 0.2, dynamic attention.
    pub fn with_input(input_dim: usize) -> Self {
        MgatConfig {
            input_dim,
            hidden: vec![8],
            heads: 2,
            dropout: 0.5,
            slope: 0.2,
            mode: AttentionMode::Dynamic,
            dropout_inputs: true,
            dropout_attention: true,
        }
    }

    /// Layer widths from input to the 2-class output.
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden);
        dims.push(2);
        dims
    }
}

/// One attention head: the feature transform and the scoring vector.
///
/// In `Static`/`Dynamic` mode `w` is out×in and `a` has length 2·out; in
/// `DynamicConcat` mode `w` is out×2in and `a` has length out.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    pub w: DMatrix<f64>,
    pub a: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub heads: Vec<HeadParams>,
}

/// All learnable parameters plus the architecture that shapes them.
#[derive(Debug, Clone, PartialEq)]
pub struct MgatModel {
    pub config: MgatConfig,
    pub layers: Vec<LayerParams>,
    pub seed: u64,
}

impl MgatModel {
    /// Seeded uniform initialization in ±sqrt(6/(fan_in + fan_out)).
    pub fn init(config: MgatConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = config.dims();
        let layers = dims
            .windows(2)
            .map(|io| {
                let (fan_in, fan_out) = (io[0], io[1]);
                let w_cols = match config.mode {
                    AttentionMode::DynamicConcat => 2 * fan_in,
                    _ => fan_in,
                };
                let a_len = match config.mode {
                    AttentionMode::DynamicConcat => fan_out,
                    _ => 2 * fan_out,
                };
                let heads = (0..config.heads)
                    .map(|_| {
                        let sw = (6.0 / (fan_in + fan_out) as f64).sqrt();
                        let w = DMatrix::from_fn(fan_out, w_cols, |_, _| {
                            rng.random_range(-sw..=sw)
                        });
                        let sa = (6.0 / (a_len + 1) as f64).sqrt();
                        let a = DVector::from_fn(a_len, |_, _| rng.random_range(-sa..=sa));
                        HeadParams { w, a }
                    })
                    .collect();
                LayerParams { heads }
            })
            .collect();
        MgatModel { config, layers, seed }
    }

    /// Visit every parameter tensor as a mutable flat slice, paired with the
    /// matching slice of another structurally identical parameter set.
    pub(crate) fn zip_params_mut<'a>(
        &'a mut self,
        other: &'a Gradients,
    ) -> impl Iterator<Item = (&'a mut [f64], &'a [f64])> {
        self.layers.iter_mut().zip(&other.layers).flat_map(|(lp, lg)| {
            lp.heads.iter_mut().zip(&lg.heads).flat_map(|(hp, hg)| {
                [
                    (hp.w.as_mut_slice(), hg.w.as_slice()),
                    (hp.a.as_mut_slice(), hg.a.as_slice()),
                ]
            })
        })
    }
}

/// A graph instance ready for the network: per-node feature vectors,
/// neighborhoods with the node itself prepended (self-attention), and the
/// target labels.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionGraph {
    pub x: Vec<DVector<f64>>,
    /// neighbors[i][0] == i, then the adjacent nodes in ascending order.
    pub neighbors: Vec<Vec<usize>>,
    pub labels: Vec<u8>,
}

impl AttentionGraph {
    pub fn n(&self) -> usize {
        self.x.len()
    }

    fn assemble(
        rows: Vec<DVector<f64>>,
        adjacency: &[Vec<usize>],
        labels: &[u8],
    ) -> AttentionGraph {
        let neighbors = adjacency
            .iter()
            .enumerate()
            .map(|(i, adj)| {
                let mut nb = Vec::with_capacity(adj.len() + 1);
                nb.push(i);
                nb.extend(adj.iter().copied());
                nb
            })
            .collect();
        AttentionGraph { x: rows, neighbors, labels: labels.to_vec() }
    }

    /// Bus-classification view of a scenario.
    pub fn nodes_of(fg: &FeatureGraph) -> AttentionGraph {
        let rows = fg
            .node_features
            .iter()
            .map(|r| DVector::from_row_slice(r))
            .collect();
        Self::assemble(rows, &fg.node_adjacency, &fg.node_labels)
    }

    /// Branch-classification view (the line graph) of a scenario.
    pub fn branches_of(fg: &FeatureGraph) -> AttentionGraph {
        let rows = fg
            .branch_features
            .iter()
            .map(|r| DVector::from_row_slice(r))
            .collect();
        Self::assemble(rows, &fg.branch_adjacency, &fg.branch_labels)
    }

    pub fn of(fg: &FeatureGraph, target: Target) -> AttentionGraph {
        match target {
            Target::Nodes => Self::nodes_of(fg),
            Target::Branches => Self::branches_of(fg),
        }
    }
}

#[derive(Debug, Error)]
pub enum MgatError {
    #[error("feature width {got} does not match model input width {want}")]
    WidthMismatch { want: usize, got: usize },
    #[error("training diverged at epoch {epoch}, scenario {scenario}: non-finite loss")]
    Diverged { epoch: usize, scenario: usize },
    #[error("{0} split is empty")]
    EmptySplit(&'static str),
}

/// Serialized model: parameters as nested decimal arrays plus everything
/// inference needs (architecture, feature scaler, target, schema version).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub schema_version: u32,
    pub target: Target,
    pub config: MgatConfig,
    pub seed: u64,
    /// layers → heads → { w: rows, a }.
    pub layers: Vec<Vec<SavedHead>>,
    pub scaler: FeatureScaler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedHead {
    pub w: Vec<Vec<f64>>,
    pub a: Vec<f64>,
}

impl SavedModel {
    pub fn new(model: &MgatModel, target: Target, scaler: FeatureScaler) -> Self {
        let layers = model
            .layers
            .iter()
            .map(|lp| {
                lp.heads
                    .iter()
                    .map(|h| SavedHead {
                        w: h.w.row_iter().map(|r| r.iter().copied().collect()).collect(),
                        a: h.a.iter().copied().collect(),
                    })
                    .collect()
            })
            .collect();
        SavedModel {
            schema_version: crate::SCHEMA_VERSION,
            target,
            config: model.config.clone(),
            seed: model.seed,
            layers,
            scaler,
        }
    }

    pub fn into_parts(self) -> (MgatModel, Target, FeatureScaler) {
        let layers = self
            .layers
            .into_iter()
            .map(|heads| LayerParams {
                heads: heads
                    .into_iter()
                    .map(|h| {
                        let rows = h.w.len();
                        let cols = h.w.first().map_or(0, Vec::len);
                        let w = DMatrix::from_fn(rows, cols, |r, c| h.w[r][c]);
                        HeadParams { w, a: DVector::from_vec(h.a) }
                    })
                    .collect(),
            })
            .collect();
        (
            MgatModel { config: self.config, layers, seed: self.seed },
            self.target,
            self.scaler,
        )
    }
}
