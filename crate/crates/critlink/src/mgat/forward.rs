//! Forward pass with the caches the analytic backward pass needs.

use super::attention::{lrelu, pair_score, softmax, AttentionMode};
use super::{AttentionGraph, MgatError, MgatModel};
use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Probability clamp for the cross-entropy loss.
pub const PROB_EPS: f64 = 1e-12;

pub(crate) struct HeadCache {
    /// Message transform per node: W·x, or the right half W_r·x in concat
    /// mode. Doubles as the scoring argument.
    pub z: Vec<DVector<f64>>,
    /// Query transform W_l·x in concat mode.
    pub zq: Option<Vec<DVector<f64>>>,
    /// Softmax coefficients per node over its neighbor list, pre-dropout.
    pub alphas: Vec<Vec<f64>>,
    /// Dropout multipliers on the coefficients (0 or 1/keep).
    pub alpha_mults: Option<Vec<Vec<f64>>>,
}

pub(crate) struct LayerCache {
    /// Layer input after input dropout.
    pub input: Vec<DVector<f64>>,
    /// Multipliers that produced `input` from the raw input.
    pub input_mults: Option<Vec<DVector<f64>>>,
    pub heads: Vec<HeadCache>,
    /// Head-averaged aggregation, before the activation.
    pub pre: Vec<DVector<f64>>,
    /// Activated output.
    pub out: Vec<DVector<f64>>,
}

/// Everything one forward pass produced.
pub struct ForwardCache {
    pub(crate) layers: Vec<LayerCache>,
    /// Two-class probabilities per node.
    pub probs: Vec<[f64; 2]>,
}

impl ForwardCache {
    /// Probability of the critical class per node.
    pub fn critical_probs(&self) -> Vec<f64> {
        self.probs.iter().map(|p| p[1]).collect()
    }
}

fn dropout_mults(rng: &mut ChaCha8Rng, len: usize, rate: f64) -> DVector<f64> {
    let keep = 1.0 - rate;
    DVector::from_fn(len, |_, _| if rng.random::<f64>() < rate { 0.0 } else { 1.0 / keep })
}

/// Run the network over a graph. `dropout_rng` enables training-time
/// dropout on layer inputs and attention coefficients; pass `None` for
/// inference.
pub(crate) fn forward_cached(
    model: &MgatModel,
    graph: &AttentionGraph,
    mut dropout_rng: Option<&mut ChaCha8Rng>,
) -> Result<ForwardCache, MgatError> {
    let cfg = &model.config;
    let got = graph.x.first().map_or(cfg.input_dim, DVector::len);
    if got != cfg.input_dim {
        return Err(MgatError::WidthMismatch { want: cfg.input_dim, got });
    }
    let n = graph.n();
    let n_layers = model.layers.len();
    let head_scale = 1.0 / cfg.heads as f64;

    let mut current: Vec<DVector<f64>> = graph.x.clone();
    let mut layers = Vec::with_capacity(n_layers);

    for (l, layer) in model.layers.iter().enumerate() {
        let is_output = l + 1 == n_layers;

        let input_mults = match (&mut dropout_rng, cfg.dropout_inputs && cfg.dropout > 0.0) {
            (Some(rng), true) => Some(
                (0..n).map(|i| dropout_mults(rng, current[i].len(), cfg.dropout)).collect::<Vec<_>>(),
            ),
            _ => None,
        };
        let input: Vec<DVector<f64>> = match &input_mults {
            Some(mults) => {
                current.iter().zip(mults).map(|(x, m)| x.component_mul(m)).collect()
            }
            None => current,
        };

        let out_dim = layer.heads[0].w.nrows();
        let mut pre: Vec<DVector<f64>> = vec![DVector::zeros(out_dim); n];
        let mut heads = Vec::with_capacity(layer.heads.len());

        for head in &layer.heads {
            let (z, zq): (Vec<DVector<f64>>, Option<Vec<DVector<f64>>>) = match cfg.mode {
                AttentionMode::Static | AttentionMode::Dynamic => {
                    (input.iter().map(|x| &head.w * x).collect(), None)
                }
                AttentionMode::DynamicConcat => {
                    let d = cfg_dim_at(model, l);
                    let w_query = head.w.columns(0, d);
                    let w_msg = head.w.columns(d, d);
                    (
                        input.iter().map(|x| &w_msg * x).collect(),
                        Some(input.iter().map(|x| &w_query * x).collect()),
                    )
                }
            };

            let mut alphas = Vec::with_capacity(n);
            for i in 0..n {
                let query = zq.as_ref().map_or(&z[i], |q| &q[i]);
                let scores: Vec<f64> = graph.neighbors[i]
                    .iter()
                    .map(|&j| pair_score(cfg.mode, query, &z[j], &head.a, cfg.slope))
                    .collect();
                alphas.push(softmax(&scores));
            }

            let alpha_mults = match (&mut dropout_rng, cfg.dropout_attention && cfg.dropout > 0.0)
            {
                (Some(rng), true) => {
                    let keep = 1.0 - cfg.dropout;
                    Some(
                        (0..n)
                            .map(|i| {
                                (0..graph.neighbors[i].len())
                                    .map(|_| {
                                        if rng.random::<f64>() < cfg.dropout {
                                            0.0
                                        } else {
                                            1.0 / keep
                                        }
                                    })
                                    .collect::<Vec<f64>>()
                            })
                            .collect::<Vec<_>>(),
                    )
                }
                _ => None,
            };

            for i in 0..n {
                for (t, &j) in graph.neighbors[i].iter().enumerate() {
                    let mult = alpha_mults.as_ref().map_or(1.0, |m| m[i][t]);
                    let coeff = alphas[i][t] * mult * head_scale;
                    if coeff != 0.0 {
                        pre[i].axpy(coeff, &z[j], 1.0);
                    }
                }
            }

            heads.push(HeadCache { z, zq, alphas, alpha_mults });
        }

        let out: Vec<DVector<f64>> = if is_output {
            pre.clone()
        } else {
            pre.iter().map(|v| v.map(|e| lrelu(e, cfg.slope))).collect()
        };
        current = out.clone();
        layers.push(LayerCache { input, input_mults, heads, pre, out });
    }

    let probs = current
        .iter()
        .map(|logits| {
            let p = softmax(logits.as_slice());
            [p[0], p[1]]
        })
        .collect();
    Ok(ForwardCache { layers, probs })
}

/// Input width of layer `l`.
fn cfg_dim_at(model: &MgatModel, l: usize) -> usize {
    model.config.dims()[l]
}

/// Two-class probabilities per node, dropout off.
pub fn model_forward(
    model: &MgatModel,
    graph: &AttentionGraph,
) -> Result<Vec<[f64; 2]>, MgatError> {
    Ok(forward_cached(model, graph, None)?.probs)
}

/// Binary cross-entropy over positive-class probabilities, clamped to
/// [PROB_EPS, 1 − PROB_EPS]. Always nonnegative.
pub fn bce_loss(probs_critical: &[f64], labels: &[u8]) -> f64 {
    assert_eq!(probs_critical.len(), labels.len());
    let n = labels.len() as f64;
    -probs_critical
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
            if y == 1 {
                p.ln()
            } else {
                (1.0 - p).ln()
            }
        })
        .sum::<f64>()
        / n
}

/// Sign pattern of every LeakyReLU argument the forward pass evaluates,
/// in a fixed order. Finite differencing is only a valid derivative oracle
/// where this pattern is locally constant, so gradient checks compare the
/// signatures at the two perturbed points and skip parameters that
/// straddle a kink.
pub fn kink_signature(model: &MgatModel, graph: &AttentionGraph) -> Result<Vec<bool>, MgatError> {
    let cache = forward_cached(model, graph, None)?;
    let cfg = &model.config;
    let n_layers = model.layers.len();
    let mut signs = Vec::new();
    for (l, lc) in cache.layers.iter().enumerate() {
        for (head, hc) in model.layers[l].heads.iter().zip(&lc.heads) {
            match cfg.mode {
                AttentionMode::Dynamic => {
                    for z in &hc.z {
                        signs.extend(z.iter().map(|&v| v > 0.0));
                    }
                }
                AttentionMode::Static => {
                    let out = hc.z[0].len();
                    for i in 0..graph.n() {
                        for &j in &graph.neighbors[i] {
                            let lin = head.a.rows(0, out).dot(&hc.z[i])
                                + head.a.rows(out, out).dot(&hc.z[j]);
                            signs.push(lin > 0.0);
                        }
                    }
                }
                AttentionMode::DynamicConcat => {
                    let zq = hc.zq.as_ref().expect("concat mode caches the query transform");
                    for i in 0..graph.n() {
                        for &j in &graph.neighbors[i] {
                            for t in 0..hc.z[j].len() {
                                signs.push(zq[i][t] + hc.z[j][t] > 0.0);
                            }
                        }
                    }
                }
            }
        }
        if l + 1 != n_layers {
            for v in &lc.pre {
                signs.extend(v.iter().map(|&e| e > 0.0));
            }
        }
    }
    Ok(signs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mgat::{AttentionMode, MgatConfig};
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};

    fn tiny_model(mode: AttentionMode) -> MgatModel {
        let config = MgatConfig {
            hidden: vec![3],
            dropout: 0.0,
            mode,
            ..MgatConfig::with_input(2)
        };
        MgatModel::init(config, 99)
    }

    fn path_graph(n: usize, dim: usize) -> AttentionGraph {
        let x = (0..n)
            .map(|i| DVector::from_fn(dim, |k, _| ((i * dim + k) as f64 * 0.37).sin()))
            .collect();
        let neighbors = (0..n)
            .map(|i| {
                let mut nb = vec![i];
                if i > 0 {
                    nb.push(i - 1);
                }
                if i + 1 < n {
                    nb.push(i + 1);
                }
                nb
            })
            .collect();
        AttentionGraph { x, neighbors, labels: vec![0; n] }
    }

    #[test]
    fn probabilities_form_a_distribution() {
        for mode in
            [AttentionMode::Static, AttentionMode::Dynamic, AttentionMode::DynamicConcat]
        {
            let model = tiny_model(mode);
            let graph = path_graph(5, 2);
            let probs = model_forward(&model, &graph).unwrap();
            for p in probs {
                assert_relative_eq!(p[0] + p[1], 1.0, epsilon = 1e-12);
                assert!(p[0] > 0.0 && p[1] > 0.0);
            }
        }
    }

    #[test]
    fn isolated_node_is_pure_self_attention() {
        // Single node, single head, one layer: output = W x exactly.
        let config = MgatConfig {
            hidden: vec![],
            heads: 1,
            dropout: 0.0,
            ..MgatConfig::with_input(2)
        };
        let model = MgatModel::init(config, 5);
        let x = DVector::from_vec(vec![0.3, -0.7]);
        let graph =
            AttentionGraph { x: vec![x.clone()], neighbors: vec![vec![0]], labels: vec![0] };
        let cache = forward_cached(&model, &graph, None).unwrap();
        let expect = &model.layers[0].heads[0].w * &x;
        assert_relative_eq!(cache.layers[0].pre[0][0], expect[0], epsilon = 1e-12);
        assert_relative_eq!(cache.layers[0].pre[0][1], expect[1], epsilon = 1e-12);
    }

    /// Independent scalar walk of a 3-node path with fixed small parameters,
    /// single head, dynamic mode.
    #[test]
    fn three_node_forward_matches_hand_rolled() {
        let mut model = tiny_model(AttentionMode::Dynamic);
        model.config.heads = 1;
        model.config.hidden = vec![1];
        // dims: 2 -> 1 -> 2
        let w0 = DMatrix::from_row_slice(1, 2, &[0.5, -1.0]);
        let a0 = DVector::from_vec(vec![1.0, 0.5]);
        let w1 = DMatrix::from_row_slice(2, 1, &[1.0, -2.0]);
        let a1 = DVector::from_vec(vec![0.3, -0.2, 0.1, 0.4]);
        model.layers = vec![
            super::super::LayerParams {
                heads: vec![super::super::HeadParams { w: w0.clone(), a: a0.clone() }],
            },
            super::super::LayerParams {
                heads: vec![super::super::HeadParams { w: w1.clone(), a: a1.clone() }],
            },
        ];
        let graph = path_graph(3, 2);
        let probs = model_forward(&model, &graph).unwrap();

        // Scalar recomputation.
        let slope = model.config.slope;
        let lr = |v: f64| if v > 0.0 { v } else { slope * v };
        let z: Vec<f64> = graph.x.iter().map(|x| 0.5 * x[0] - 1.0 * x[1]).collect();
        let score = |i: usize, j: usize| 1.0 * lr(z[i]) + 0.5 * lr(z[j]);
        let mut h = vec![0.0; 3];
        for i in 0..3 {
            let nbr = &graph.neighbors[i];
            let scores: Vec<f64> = nbr.iter().map(|&j| score(i, j)).collect();
            let alphas = crate::mgat::softmax(&scores);
            let agg: f64 = nbr.iter().zip(&alphas).map(|(&j, &al)| al * z[j]).sum();
            h[i] = lr(agg);
        }
        let z2: Vec<[f64; 2]> = h.iter().map(|&v| [v, -2.0 * v]).collect();
        let score2 = |i: usize, j: usize| {
            0.3 * lr(z2[i][0]) - 0.2 * lr(z2[i][1]) + 0.1 * lr(z2[j][0]) + 0.4 * lr(z2[j][1])
        };
        for i in 0..3 {
            let nbr = &graph.neighbors[i];
            let scores: Vec<f64> = nbr.iter().map(|&j| score2(i, j)).collect();
            let alphas = crate::mgat::softmax(&scores);
            let mut logits = [0.0, 0.0];
            for (&j, &al) in nbr.iter().zip(&alphas) {
                logits[0] += al * z2[j][0];
                logits[1] += al * z2[j][1];
            }
            let p = crate::mgat::softmax(&logits);
            assert_relative_eq!(probs[i][0], p[0], epsilon = 1e-12);
            assert_relative_eq!(probs[i][1], p[1], epsilon = 1e-12);
        }
    }

    #[test]
    fn symmetric_softmax_and_analytic_logits() {
        assert_eq!(softmax(&[0.0, 0.0]), vec![0.5, 0.5]);
        let p = softmax(&[3.0_f64.ln(), 0.0]);
        assert_relative_eq!(p[0], 0.75, epsilon = 1e-12);
        assert_relative_eq!(p[1], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn bce_values() {
        assert!(bce_loss(&[1.0 - 1e-12], &[1]) < 1e-9);
        assert_relative_eq!(bce_loss(&[0.5], &[1]), std::f64::consts::LN_2, epsilon = 1e-12);
        // batch {(1, 0.9), (0, 0.2)} → −(ln 0.9 + ln 0.8)/2
        let expect = -(0.9f64.ln() + 0.8f64.ln()) / 2.0;
        assert_relative_eq!(bce_loss(&[0.9, 0.2], &[1, 0]), expect, epsilon = 1e-12);
        assert_relative_eq!(expect, 0.164_252_033_486_018, epsilon = 1e-12);
    }

    #[test]
    fn width_mismatch_rejected() {
        let model = tiny_model(AttentionMode::Dynamic);
        let graph = path_graph(4, 3);
        assert!(matches!(
            model_forward(&model, &graph),
            Err(MgatError::WidthMismatch { want: 2, got: 3 })
        ));
    }
}
