//! The criticality oracle: index clusters, scores and binary labels for one
//! solved operating scenario. Its output is both the ground truth for
//! training and the baseline the learned identifier is benchmarked against.

mod indices;
mod paths;

pub use indices::{branch_betweenness_cluster, node_betweenness_cluster, node_degree_cluster};
pub use paths::{k_shortest_paths, TransmissionPath, MIN_PATH_WEIGHT};

use crate::flow::{electrical_distance, FlowError, PowerFlowSolution};
use crate::grid::{signed_adjacency, AdjacencyError, BranchId, BusId, GridCase};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Everything the oracle needs besides the case and its flow solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    /// Paths enumerated per generator→load pair.
    pub k_paths: usize,
    /// Node score weights: connectivity, capacity, path share,
    /// distance-weighted share, capability-weighted share. Nonnegative with
    /// a positive sum; normalized internally.
    pub node_weights: [f64; 5],
    /// Branch score weights: path share, distance-weighted share,
    /// capability-weighted share.
    pub branch_weights: [f64; 3],
    /// Fraction of each population labelled critical.
    pub top_fraction: f64,
    /// Explicit critical-node count, overriding the fraction.
    pub node_count: Option<usize>,
    /// Explicit critical-branch count, overriding the fraction.
    pub branch_count: Option<usize>,
    /// Whether path endpoints count as lying on the path.
    pub include_endpoints: bool,
    /// Divide each connectivity-degree term by the electrical distance to
    /// the neighbor.
    pub degree_over_distance: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            k_paths: 5,
            node_weights: [0.2; 5],
            branch_weights: [1.0 / 3.0; 3],
            top_fraction: 0.2,
            node_count: None,
            branch_count: None,
            include_endpoints: true,
            degree_over_distance: false,
        }
    }
}

/// A raw index vector with its min–max normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexCluster {
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
}

impl IndexCluster {
    fn new(raw: Vec<f64>) -> Self {
        let normalized = minmax_normalize(&raw);
        IndexCluster { raw, normalized }
    }
}

/// The five per-node indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeIndices {
    pub connectivity: IndexCluster,
    pub capacity: IndexCluster,
    pub path_share: IndexCluster,
    pub distance_share: IndexCluster,
    pub capability_share: IndexCluster,
}

/// The three per-branch indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchIndices {
    pub path_share: IndexCluster,
    pub distance_share: IndexCluster,
    pub capability_share: IndexCluster,
}

/// Full oracle output for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalityReport {
    pub schema_version: u32,
    pub bus_ids: Vec<BusId>,
    pub branch_ids: Vec<BranchId>,
    pub node_indices: NodeIndices,
    pub branch_indices: BranchIndices,
    /// Weighted sums of the normalized node indices, each in [0, 1].
    pub node_scores: Vec<f64>,
    pub branch_scores: Vec<f64>,
    /// 1 = critical, 0 = not.
    pub node_labels: Vec<u8>,
    pub branch_labels: Vec<u8>,
    pub total_paths: usize,
    pub config: OracleConfig,
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("flow solution did not converge")]
    NotConverged,
    #[error(transparent)]
    Adjacency(#[from] AdjacencyError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("invalid score weights: {0}")]
    InvalidWeights(String),
}

/// Min–max normalize one index over its population. A constant index maps
/// to all zeros.
pub fn minmax_normalize(raw: &[f64]) -> Vec<f64> {
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.0; raw.len()];
    }
    raw.iter().map(|&v| (v - lo) / (hi - lo)).collect()
}

/// Weighted sum of min–max-normalized indices. Weights must be nonnegative
/// with a positive sum; they are normalized so scores land in [0, 1].
pub fn criticality_scores(indices: &[&[f64]], weights: &[f64]) -> Result<Vec<f64>, OracleError> {
    if indices.len() != weights.len() {
        return Err(OracleError::InvalidWeights(format!(
            "{} weights for {} indices",
            weights.len(),
            indices.len()
        )));
    }
    if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(OracleError::InvalidWeights("negative or non-finite weight".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(OracleError::InvalidWeights("weights sum to zero".into()));
    }
    let n = indices.first().map_or(0, |ix| ix.len());
    let mut scores = vec![0.0; n];
    for (ix, &w) in indices.iter().zip(weights) {
        for (s, v) in scores.iter_mut().zip(minmax_normalize(ix)) {
            *s += w / total * v;
        }
    }
    Ok(scores)
}

/// Label the top ceil(fraction·N) scorers with 1; ties break toward the
/// smaller position so the outcome is independent of input ordering.
pub fn label_top_fraction(scores: &[f64], fraction: f64) -> Vec<u8> {
    label_top_count(scores, fraction_count_ceil(fraction, scores.len()))
}

/// Label exactly `count` top scorers with 1, ties toward smaller position.
pub fn label_top_count(scores: &[f64], count: usize) -> Vec<u8> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut labels = vec![0u8; scores.len()];
    for &i in order.iter().take(count) {
        labels[i] = 1;
    }
    labels
}

/// ceil(fraction·n) with a guard against rounding a product that is an
/// integer mathematically (0.2·30) but not in floating point.
pub fn fraction_count_ceil(fraction: f64, n: usize) -> usize {
    let t = fraction * n as f64;
    let count = if (t - t.round()).abs() < 1e-9 { t.round() } else { t.ceil() };
    (count as usize).min(n)
}

/// Default per-report count: fractional populations round down (never below
/// one). floor(0.2·30) = 6 nodes and floor(0.2·41) = 8 branches on the
/// bundled 30-bus case.
pub fn fraction_count_floor(fraction: f64, n: usize) -> usize {
    let t = fraction * n as f64;
    let count = if (t - t.round()).abs() < 1e-9 { t.round() } else { t.floor() };
    (count as usize).clamp(1, n)
}

/// Run the full labeling pipeline on one solved scenario.
pub fn evaluate_case(
    case: &GridCase,
    flow: &PowerFlowSolution,
    config: &OracleConfig,
) -> Result<CriticalityReport, OracleError> {
    if !flow.converged {
        return Err(OracleError::NotConverged);
    }
    let adj = signed_adjacency(case, flow)?;
    let dist = electrical_distance(case)?;

    let mut all_paths: Vec<TransmissionPath> = Vec::new();
    for &g in &case.generator_indices() {
        for &l in &case.load_indices() {
            if g == l {
                continue;
            }
            all_paths.extend(k_shortest_paths(case, &dist, flow, g, l, config.k_paths));
        }
    }

    let scaling = config.degree_over_distance.then_some(&dist);
    let (conn, cap) = node_degree_cluster(case, &adj, scaling);
    let (n_share, n_dshare, n_cshare) =
        node_betweenness_cluster(case.n_buses(), &all_paths, config.include_endpoints);
    let (b_share, b_dshare, b_cshare) =
        branch_betweenness_cluster(case.n_branches(), &all_paths);

    let node_scores = criticality_scores(
        &[&conn, &cap, &n_share, &n_dshare, &n_cshare],
        &config.node_weights,
    )?;
    let branch_scores =
        criticality_scores(&[&b_share, &b_dshare, &b_cshare], &config.branch_weights)?;

    let node_count = config
        .node_count
        .unwrap_or_else(|| fraction_count_floor(config.top_fraction, case.n_buses()));
    let branch_count = config
        .branch_count
        .unwrap_or_else(|| fraction_count_floor(config.top_fraction, case.n_branches()));
    let node_labels = label_top_count(&node_scores, node_count);
    let branch_labels = label_top_count(&branch_scores, branch_count);

    Ok(CriticalityReport {
        schema_version: crate::SCHEMA_VERSION,
        bus_ids: case.buses().iter().map(|b| b.id).collect(),
        branch_ids: case.branches().iter().map(|b| b.id).collect(),
        node_indices: NodeIndices {
            connectivity: IndexCluster::new(conn),
            capacity: IndexCluster::new(cap),
            path_share: IndexCluster::new(n_share),
            distance_share: IndexCluster::new(n_dshare),
            capability_share: IndexCluster::new(n_cshare),
        },
        branch_indices: BranchIndices {
            path_share: IndexCluster::new(b_share),
            distance_share: IndexCluster::new(b_dshare),
            capability_share: IndexCluster::new(b_cshare),
        },
        node_scores,
        branch_scores,
        node_labels,
        branch_labels,
        total_paths: all_paths.len(),
        config: config.clone(),
    })
}
