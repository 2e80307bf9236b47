//! Scenario perturbation: scale generator outputs, branch reactances and bus
//! loads by independent uniform factors.

use crate::grid::{Branch, Bus, GridCase};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

/// Derive a perturbed copy of `base`. Each generator active output, each
/// branch reactance and each bus load gets its own factor drawn uniformly
/// from [lo, hi]; a bus's P and Q load share one factor so the power factor
/// is preserved. Topology, ratings, resistances and line charging are
/// untouched. The result is a pure function of (base, seed, lo, hi).
///
/// Draw order is fixed — one generation factor per bus, one load factor per
/// bus, one reactance factor per branch, all in case order — so the stream
/// layout never depends on data values.
pub fn perturb_case(base: &GridCase, seed: u64, lo: f64, hi: f64) -> GridCase {
    assert!(lo <= hi && lo > 0.0, "need 0 < lo <= hi");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gen_factors: Vec<f64> =
        (0..base.n_buses()).map(|_| rng.random_range(lo..=hi)).collect();
    let load_factors: Vec<f64> =
        (0..base.n_buses()).map(|_| rng.random_range(lo..=hi)).collect();
    let x_factors: Vec<f64> =
        (0..base.n_branches()).map(|_| rng.random_range(lo..=hi)).collect();

    let buses: Vec<Bus> = base
        .buses()
        .iter()
        .enumerate()
        .map(|(i, b)| Bus {
            p_gen: b.p_gen * gen_factors[i],
            p_load: b.p_load * load_factors[i],
            q_load: b.q_load * load_factors[i],
            ..b.clone()
        })
        .collect();
    let branches: Vec<Branch> = base
        .branches()
        .iter()
        .enumerate()
        .map(|(e, br)| Branch { x: br.x * x_factors[e], ..br.clone() })
        .collect();

    GridCase::new(base.base_mva(), buses, branches)
        .expect("scaling by positive factors preserves case validity")
}
