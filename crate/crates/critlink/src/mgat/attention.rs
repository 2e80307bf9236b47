//! Attention scoring.
//!
//! Three scoring rules share the softmax. `Static` applies the attention
//! vector before the nonlinearity; because LeakyReLU is monotone, every
//! query node then ranks its neighbors identically. `Dynamic` moves the
//! nonlinearity inside — the score becomes aᵀ LeakyReLU(Wxᵢ ‖ Wxⱼ) — which
//! is the default scoring rule here. `DynamicConcat` instead applies the
//! weight matrix to the concatenated raw pair, aᵀ LeakyReLU(W(xᵢ ‖ xⱼ)),
//! mixing query and neighbor before the kink; only this variant can rank
//! the same two neighbors differently for different query nodes.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AttentionMode {
    Static,
    #[default]
    Dynamic,
    DynamicConcat,
}

pub(crate) fn lrelu(v: f64, slope: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        slope * v
    }
}

pub(crate) fn lrelu_grad(v: f64, slope: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else {
        slope
    }
}

/// Raw attention score of one (query, neighbor) pair from their transformed
/// features. For `Static` and `Dynamic` the inputs are z = Wx of each node;
/// for `DynamicConcat` they are the query's left transform W_l·x_i and the
/// neighbor's right transform W_r·x_j.
pub(crate) fn pair_score(
    mode: AttentionMode,
    z_query: &DVector<f64>,
    z_neighbor: &DVector<f64>,
    a: &DVector<f64>,
    slope: f64,
) -> f64 {
    match mode {
        AttentionMode::Static => {
            let out = z_query.len();
            let lin = a.rows(0, out).dot(z_query) + a.rows(out, out).dot(z_neighbor);
            lrelu(lin, slope)
        }
        AttentionMode::Dynamic => {
            let out = z_query.len();
            let mut s = 0.0;
            for t in 0..out {
                s += a[t] * lrelu(z_query[t], slope);
                s += a[out + t] * lrelu(z_neighbor[t], slope);
            }
            s
        }
        AttentionMode::DynamicConcat => {
            let mut s = 0.0;
            for t in 0..z_query.len() {
                s += a[t] * lrelu(z_query[t] + z_neighbor[t], slope);
            }
            s
        }
    }
}

/// Numerically stable softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

/// Attention coefficients of one query node over an explicit neighbor set
/// (include the node itself in `neighbors` for self-attention). `w` maps
/// features to the head width; for `DynamicConcat` it spans the
/// concatenated pair, so it must have twice the input width.
pub fn attention_coeffs(
    x_query: &DVector<f64>,
    neighbors: &[DVector<f64>],
    w: &nalgebra::DMatrix<f64>,
    a: &DVector<f64>,
    slope: f64,
    mode: AttentionMode,
) -> Vec<f64> {
    assert!(!neighbors.is_empty(), "neighbor set must not be empty");
    let scores: Vec<f64> = match mode {
        AttentionMode::Static | AttentionMode::Dynamic => {
            assert_eq!(w.ncols(), x_query.len(), "weight/input width mismatch");
            assert_eq!(a.len(), 2 * w.nrows(), "attention vector spans the pair");
            let zq = w * x_query;
            neighbors.iter().map(|xj| pair_score(mode, &zq, &(w * xj), a, slope)).collect()
        }
        AttentionMode::DynamicConcat => {
            assert_eq!(w.ncols(), 2 * x_query.len(), "weight spans the concatenated pair");
            assert_eq!(a.len(), w.nrows());
            let d = x_query.len();
            let w_query = w.columns(0, d);
            let w_neighbor = w.columns(d, d);
            let zq = &w_query * x_query;
            neighbors
                .iter()
                .map(|xj| pair_score(mode, &zq, &(&w_neighbor * xj), a, slope))
                .collect()
        }
    };
    softmax(&scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn singleton_neighborhood_gets_full_weight() {
        let x = DVector::from_vec(vec![0.7]);
        let w = DMatrix::from_vec(1, 1, vec![2.0]);
        let a = DVector::from_vec(vec![0.3, -0.4]);
        let coeffs = attention_coeffs(&x, &[x.clone()], &w, &a, 0.2, AttentionMode::Dynamic);
        assert_eq!(coeffs, vec![1.0]);
    }

    #[test]
    fn identical_neighbors_share_uniformly() {
        let x = DVector::from_vec(vec![1.0, -0.5]);
        let nb = vec![x.clone(), x.clone(), x.clone()];
        let w = DMatrix::from_vec(2, 2, vec![0.4, -0.1, 0.2, 0.9]);
        let a = DVector::from_vec(vec![0.3, -0.4, 0.1, 0.2]);
        for mode in [AttentionMode::Static, AttentionMode::Dynamic] {
            let coeffs = attention_coeffs(&x, &nb, &w, &a, 0.2, mode);
            for c in &coeffs {
                assert_relative_eq!(*c, 1.0 / 3.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn scalar_dynamic_example() {
        // x_i = 1, neighbors {1, 2}, W = [1], a = (1, 1), slope 0.2:
        // scores are 2 and 3, so the coefficients are softmax(2, 3).
        let x = DVector::from_vec(vec![1.0]);
        let nb = vec![DVector::from_vec(vec![1.0]), DVector::from_vec(vec![2.0])];
        let w = DMatrix::from_vec(1, 1, vec![1.0]);
        let a = DVector::from_vec(vec![1.0, 1.0]);
        let coeffs = attention_coeffs(&x, &nb, &w, &a, 0.2, AttentionMode::Dynamic);
        assert_relative_eq!(coeffs[0], 0.2689414213699951, epsilon = 1e-12);
        assert_relative_eq!(coeffs[1], 0.7310585786300049, epsilon = 1e-12);
    }

    #[test]
    fn coefficients_sum_to_one() {
        let x = DVector::from_vec(vec![0.2, -1.3]);
        let nb = vec![
            DVector::from_vec(vec![0.5, 0.1]),
            DVector::from_vec(vec![-0.7, 2.0]),
            DVector::from_vec(vec![1.5, -0.2]),
        ];
        let w = DMatrix::from_vec(2, 2, vec![0.4, -0.1, 0.2, 0.9]);
        let a = DVector::from_vec(vec![0.3, -0.4, 0.1, 0.2]);
        for mode in [AttentionMode::Static, AttentionMode::Dynamic] {
            let coeffs = attention_coeffs(&x, &nb, &w, &a, 0.2, mode);
            let total: f64 = coeffs.iter().sum();
            assert_relative_eq!(total, 1.0, epsilon = 1e-12);
            assert!(coeffs.iter().all(|&c| c > 0.0 && c <= 1.0));
        }
    }

    /// With scoring separable across the pair — both the `Static` rule and
    /// the `Dynamic` rule as implemented — every query node ranks a common
    /// neighbor set identically.
    #[test]
    fn separable_scores_share_one_ranking() {
        let queries = [
            DVector::from_vec(vec![2.0, 0.3]),
            DVector::from_vec(vec![-1.0, 0.8]),
            DVector::from_vec(vec![0.1, -2.0]),
        ];
        let nb = vec![
            DVector::from_vec(vec![0.5, 0.1]),
            DVector::from_vec(vec![-0.7, 2.0]),
            DVector::from_vec(vec![1.5, -0.2]),
        ];
        let w = DMatrix::from_vec(2, 2, vec![0.4, -0.1, 0.2, 0.9]);
        let a = DVector::from_vec(vec![0.3, -0.4, 0.1, 0.2]);
        for mode in [AttentionMode::Static, AttentionMode::Dynamic] {
            let rank = |q: &DVector<f64>| -> Vec<usize> {
                let c = attention_coeffs(q, &nb, &w, &a, 0.2, mode);
                let mut order: Vec<usize> = (0..c.len()).collect();
                order.sort_by(|&i, &j| c[j].total_cmp(&c[i]));
                order
            };
            let first = rank(&queries[0]);
            for q in &queries[1..] {
                assert_eq!(rank(q), first, "{mode:?} ranking must be query-independent");
            }
        }
    }

    /// The concatenation variant mixes query and neighbor before the kink,
    /// so a parameter setting exists where two query nodes order the same
    /// two neighbors oppositely.
    #[test]
    fn concat_variant_ranks_per_query() {
        // W rows (1, 1) and (1, 2), a = (1, −1): the score is
        // lrelu(x_i + x_j) − lrelu(x_i + 2 x_j), whose slope in x_j changes
        // sign between the all-positive and mixed-sign regimes.
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 2.0]);
        let a = DVector::from_vec(vec![1.0, -1.0]);
        let nb = vec![DVector::from_vec(vec![-1.8]), DVector::from_vec(vec![-1.2])];
        let near = DVector::from_vec(vec![2.0]);
        let far = DVector::from_vec(vec![10.0]);
        let c_near = attention_coeffs(&near, &nb, &w, &a, 0.2, AttentionMode::DynamicConcat);
        let c_far = attention_coeffs(&far, &nb, &w, &a, 0.2, AttentionMode::DynamicConcat);
        assert!(c_near[1] > c_near[0], "query 2.0 prefers the second neighbor");
        assert!(c_far[0] > c_far[1], "query 10.0 prefers the first neighbor");
    }
}
