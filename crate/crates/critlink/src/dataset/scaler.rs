//! Min–max feature normalization fitted on the training split only.

use super::features::{FeatureGraph, BRANCH_FEATURES, NODE_FEATURES};
use serde::{Deserialize, Serialize};

/// Per-feature (min, max) pooled over every node/branch of the training
/// scenarios. Applying the scaler maps x → (x − min)/(max − min), sends
/// constant features to 0, and clips to [0, 1] so unseen data can never
/// produce out-of-range or non-finite inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub node_min: [f64; NODE_FEATURES],
    pub node_max: [f64; NODE_FEATURES],
    pub branch_min: [f64; BRANCH_FEATURES],
    pub branch_max: [f64; BRANCH_FEATURES],
}

fn scale(value: f64, min: f64, max: f64) -> f64 {
    if max > min {
        ((value - min) / (max - min)).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Fit a scaler over the pooled features of the given (training) graphs.
pub fn fit_normalizer<'a>(graphs: impl IntoIterator<Item = &'a FeatureGraph>) -> FeatureScaler {
    let mut scaler = FeatureScaler {
        node_min: [f64::INFINITY; NODE_FEATURES],
        node_max: [f64::NEG_INFINITY; NODE_FEATURES],
        branch_min: [f64::INFINITY; BRANCH_FEATURES],
        branch_max: [f64::NEG_INFINITY; BRANCH_FEATURES],
    };
    let mut any = false;
    for g in graphs {
        any = true;
        for row in &g.node_features {
            for (k, &v) in row.iter().enumerate() {
                scaler.node_min[k] = scaler.node_min[k].min(v);
                scaler.node_max[k] = scaler.node_max[k].max(v);
            }
        }
        for row in &g.branch_features {
            for (k, &v) in row.iter().enumerate() {
                scaler.branch_min[k] = scaler.branch_min[k].min(v);
                scaler.branch_max[k] = scaler.branch_max[k].max(v);
            }
        }
    }
    assert!(any, "cannot fit a scaler on an empty training split");
    scaler
}

/// Normalized copy of a graph.
pub fn apply_normalizer(scaler: &FeatureScaler, graph: &FeatureGraph) -> FeatureGraph {
    let mut out = graph.clone();
    for row in &mut out.node_features {
        for k in 0..NODE_FEATURES {
            row[k] = scale(row[k], scaler.node_min[k], scaler.node_max[k]);
        }
    }
    for row in &mut out.branch_features {
        for k in 0..BRANCH_FEATURES {
            row[k] = scale(row[k], scaler.branch_min[k], scaler.branch_max[k]);
        }
    }
    out
}
