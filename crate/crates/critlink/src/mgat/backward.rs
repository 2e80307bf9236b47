//! Analytic gradients of the cross-entropy loss with respect to every
//! parameter, with dropout masks held fixed at their forward-pass values.

use super::attention::{lrelu, lrelu_grad, AttentionMode};
use super::forward::{ForwardCache, HeadCache};
use super::{AttentionGraph, HeadParams, LayerParams, MgatModel};
use nalgebra::{DMatrix, DVector};

/// Parameter gradients, shaped exactly like the model's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerParams>,
}

impl Gradients {
    pub fn zeros_like(model: &MgatModel) -> Self {
        Gradients {
            layers: model
                .layers
                .iter()
                .map(|lp| LayerParams {
                    heads: lp
                        .heads
                        .iter()
                        .map(|h| HeadParams {
                            w: DMatrix::zeros(h.w.nrows(), h.w.ncols()),
                            a: DVector::zeros(h.a.len()),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

/// Backpropagate through a cached forward pass.
pub fn backward(
    model: &MgatModel,
    graph: &AttentionGraph,
    cache: &ForwardCache,
    labels: &[u8],
) -> Gradients {
    let cfg = &model.config;
    let n = graph.n();
    let n_layers = model.layers.len();
    let head_scale = 1.0 / cfg.heads as f64;
    let mut grads = Gradients::zeros_like(model);

    // Softmax + cross-entropy: d logits = (p − onehot)/n.
    let inv_n = 1.0 / n as f64;
    let mut dout: Vec<DVector<f64>> = (0..n)
        .map(|i| {
            let p = cache.probs[i];
            let y = labels[i] as f64;
            DVector::from_vec(vec![(p[0] - (1.0 - y)) * inv_n, (p[1] - y) * inv_n])
        })
        .collect();

    for l in (0..n_layers).rev() {
        let lc = &cache.layers[l];
        let is_output = l + 1 == n_layers;

        // Through the layer activation.
        let dpre: Vec<DVector<f64>> = if is_output {
            dout
        } else {
            lc.pre
                .iter()
                .zip(&dout)
                .map(|(pre, d)| {
                    DVector::from_fn(d.len(), |t, _| d[t] * lrelu_grad(pre[t], cfg.slope))
                })
                .collect()
        };

        let in_dim = lc.input[0].len();
        let mut dinput: Vec<DVector<f64>> = vec![DVector::zeros(in_dim); n];

        for (h_idx, (head, hc)) in model.layers[l].heads.iter().zip(&lc.heads).enumerate() {
            let out = hc.z[0].len();
            let gh = &mut grads.layers[l].heads[h_idx];
            let mut dz: Vec<DVector<f64>> = vec![DVector::zeros(out); n];
            let mut dzq: Vec<DVector<f64>> = match cfg.mode {
                AttentionMode::DynamicConcat => vec![DVector::zeros(out); n],
                _ => Vec::new(),
            };

            for i in 0..n {
                let nbr = &graph.neighbors[i];
                let alphas = &hc.alphas[i];

                // Aggregation: pre_i = (1/H) Σ_t α̃_it z_j.
                let mut dalpha = vec![0.0; nbr.len()];
                for (t, &j) in nbr.iter().enumerate() {
                    let mult = hc.alpha_mults.as_ref().map_or(1.0, |m| m[i][t]);
                    let atilde = alphas[t] * mult;
                    if atilde != 0.0 {
                        dz[j].axpy(atilde * head_scale, &dpre[i], 1.0);
                    }
                    dalpha[t] = dpre[i].dot(&hc.z[j]) * mult * head_scale;
                }

                // Softmax.
                let inner: f64 = alphas.iter().zip(&dalpha).map(|(a, d)| a * d).sum();
                for (t, &j) in nbr.iter().enumerate() {
                    let ds = alphas[t] * (dalpha[t] - inner);
                    if ds != 0.0 {
                        score_backward(cfg.mode, cfg.slope, head, hc, i, j, ds, gh, &mut dz, &mut dzq);
                    }
                }
            }

            match cfg.mode {
                AttentionMode::Static | AttentionMode::Dynamic => {
                    for j in 0..n {
                        gh.w.ger(1.0, &dz[j], &lc.input[j], 1.0);
                        dinput[j] += head.w.tr_mul(&dz[j]);
                    }
                }
                AttentionMode::DynamicConcat => {
                    let d = in_dim;
                    let w_query = head.w.columns(0, d);
                    let w_msg = head.w.columns(d, d);
                    for j in 0..n {
                        gh.w.columns_mut(0, d).ger(1.0, &dzq[j], &lc.input[j], 1.0);
                        gh.w.columns_mut(d, d).ger(1.0, &dz[j], &lc.input[j], 1.0);
                        dinput[j] += w_query.tr_mul(&dzq[j]) + w_msg.tr_mul(&dz[j]);
                    }
                }
            }
        }

        if let Some(mults) = &lc.input_mults {
            for (d, m) in dinput.iter_mut().zip(mults) {
                *d = d.component_mul(m);
            }
        }
        dout = dinput;
    }

    grads
}

/// Gradient of one pair score through the mode-specific scoring rule,
/// accumulated into the attention-vector gradient and the z gradients.
#[allow(clippy::too_many_arguments)]
fn score_backward(
    mode: AttentionMode,
    slope: f64,
    head: &HeadParams,
    hc: &HeadCache,
    i: usize,
    j: usize,
    ds: f64,
    gh: &mut HeadParams,
    dz: &mut [DVector<f64>],
    dzq: &mut [DVector<f64>],
) {
    let out = hc.z[0].len();
    match mode {
        AttentionMode::Static => {
            let a_l = head.a.rows(0, out);
            let a_r = head.a.rows(out, out);
            let lin = a_l.dot(&hc.z[i]) + a_r.dot(&hc.z[j]);
            let g = ds * lrelu_grad(lin, slope);
            for t in 0..out {
                gh.a[t] += g * hc.z[i][t];
                gh.a[out + t] += g * hc.z[j][t];
                dz[i][t] += g * head.a[t];
                dz[j][t] += g * head.a[out + t];
            }
        }
        AttentionMode::Dynamic => {
            for t in 0..out {
                gh.a[t] += ds * lrelu(hc.z[i][t], slope);
                gh.a[out + t] += ds * lrelu(hc.z[j][t], slope);
                dz[i][t] += ds * head.a[t] * lrelu_grad(hc.z[i][t], slope);
                dz[j][t] += ds * head.a[out + t] * lrelu_grad(hc.z[j][t], slope);
            }
        }
        AttentionMode::DynamicConcat => {
            let zq = hc.zq.as_ref().expect("concat mode caches the query transform");
            for t in 0..out {
                let u = zq[i][t] + hc.z[j][t];
                gh.a[t] += ds * lrelu(u, slope);
                let du = ds * head.a[t] * lrelu_grad(u, slope);
                dzq[i][t] += du;
                dz[j][t] += du;
            }
        }
    }
}
