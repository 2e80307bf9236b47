//! Scenario dataset generation and persistence.
//!
//! A dataset directory holds `meta.json` (config, seed, counts, split),
//! `scaler.json` (the normalizer fitted on the training split) and
//! `scenarios.jsonl` (one raw [`FeatureGraph`] per line). Features are
//! stored raw; consumers normalize against the scaler. Generation is a pure
//! function of (base case, seed, config), so re-runs are byte-identical.

mod features;
mod perturb;
mod scaler;

pub use features::{extract_features, FeatureGraph, BRANCH_FEATURES, NODE_FEATURES};
pub use perturb::perturb_case;
pub use scaler::{apply_normalizer, fit_normalizer, FeatureScaler};

use crate::flow::{solve_ac, FlowError};
use crate::grid::{AdjacencyError, GridCase, ParseError};
use crate::oracle::{evaluate_case, OracleConfig, OracleError};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use thiserror::Error;

/// Scenario generation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    /// Perturbation range for generation, reactance and load scaling.
    pub lo: f64,
    pub hi: f64,
    /// Power-flow settings used per scenario.
    pub tol: f64,
    pub max_iter: usize,
    /// Oracle settings used to label each scenario.
    pub oracle: OracleConfig,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            lo: 0.8,
            hi: 1.2,
            tol: crate::flow::DEFAULT_TOL,
            max_iter: crate::flow::DEFAULT_MAX_ITER,
            oracle: OracleConfig::default(),
        }
    }
}

/// Which split a scenario landed in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub schema_version: u32,
    pub seed: u64,
    pub n_target: usize,
    pub converged: usize,
    pub discarded: usize,
    pub config: GenConfig,
    /// The source case, embedded so a dataset is self-contained.
    pub case_text: String,
    /// Indices into the stored scenario list.
    pub split: SplitAssignment,
}

/// An in-memory dataset: raw feature graphs plus the training-split scaler.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub graphs: Vec<FeatureGraph>,
    pub scaler: FeatureScaler,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("base case power flow did not converge")]
    BaseCaseDiverged,
    #[error("flow solution did not converge")]
    NotConverged,
    #[error("empty split: {0}")]
    EmptySplit(&'static str),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Adjacency(#[from] AdjacencyError),
    #[error(transparent)]
    Case(#[from] ParseError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// SplitMix64 — cheap, well-mixed derivation of per-scenario seeds from the
/// dataset seed so scenarios are independent streams and order-insensitive.
pub fn scenario_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const SPLIT_STREAM: u64 = u64::MAX;

/// Generate, solve, label and split scenarios.
///
/// `n_target` perturbation attempts are made; scenarios whose power flow
/// does not converge are discarded and counted. The 80/10/10 split is a
/// seeded shuffle of the converged scenarios. `jobs` bounds the worker pool
/// (`None` = rayon default); the output is ordered by scenario index, so it
/// does not depend on the worker count.
pub fn generate_dataset(
    base: &GridCase,
    n_target: usize,
    seed: u64,
    config: &GenConfig,
    jobs: Option<usize>,
) -> Result<Dataset, DatasetError> {
    let base_flow = solve_ac(base, config.tol, config.max_iter)?;
    if !base_flow.converged {
        return Err(DatasetError::BaseCaseDiverged);
    }

    let one_scenario = |i: usize| -> Result<Option<FeatureGraph>, DatasetError> {
        let case = perturb_case(base, scenario_seed(seed, i as u64), config.lo, config.hi);
        let flow = match solve_ac(&case, config.tol, config.max_iter) {
            Ok(flow) if flow.converged => flow,
            Ok(_) => return Ok(None),
            // A singular Jacobian is just as much a discard as divergence.
            Err(FlowError::SingularJacobian { .. }) => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let report = evaluate_case(&case, &flow, &config.oracle)?;
        Ok(Some(extract_features(&case, &flow, &report, i as u64)?))
    };

    let results: Vec<Result<Option<FeatureGraph>, DatasetError>> = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("worker pool")
            .install(|| (0..n_target).into_par_iter().map(one_scenario).collect()),
        None => (0..n_target).into_par_iter().map(one_scenario).collect(),
    };

    let mut graphs = Vec::with_capacity(n_target);
    for r in results {
        if let Some(g) = r? {
            graphs.push(g);
        }
    }
    let converged = graphs.len();
    let discarded = n_target - converged;

    let mut order: Vec<usize> = (0..converged).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(scenario_seed(seed, SPLIT_STREAM));
    order.shuffle(&mut rng);
    let n_train = converged * 8 / 10;
    let n_val = converged / 10;
    let mut split = SplitAssignment {
        train: order[..n_train].to_vec(),
        val: order[n_train..n_train + n_val].to_vec(),
        test: order[n_train + n_val..].to_vec(),
    };
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    if split.train.is_empty() {
        return Err(DatasetError::EmptySplit("train"));
    }

    let scaler = fit_normalizer(split.train.iter().map(|&i| &graphs[i]));

    Ok(Dataset {
        meta: DatasetMeta {
            schema_version: crate::SCHEMA_VERSION,
            seed,
            n_target,
            converged,
            discarded,
            config: config.clone(),
            case_text: base.serialize(),
            split,
        },
        graphs,
        scaler,
    })
}

impl Dataset {
    /// Normalized graphs of one split.
    pub fn normalized_split(&self, indices: &[usize]) -> Vec<FeatureGraph> {
        indices.iter().map(|&i| apply_normalizer(&self.scaler, &self.graphs[i])).collect()
    }

    pub fn save(&self, dir: &Path) -> Result<(), DatasetError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&self.meta)?)?;
        fs::write(dir.join("scaler.json"), serde_json::to_string_pretty(&self.scaler)?)?;
        let mut jsonl = fs::File::create(dir.join("scenarios.jsonl"))?;
        for g in &self.graphs {
            serde_json::to_writer(&mut jsonl, g)?;
            jsonl.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Dataset, DatasetError> {
        let meta: DatasetMeta = serde_json::from_str(&fs::read_to_string(dir.join("meta.json"))?)?;
        let scaler: FeatureScaler =
            serde_json::from_str(&fs::read_to_string(dir.join("scaler.json"))?)?;
        let mut graphs = Vec::new();
        for line in BufReader::new(fs::File::open(dir.join("scenarios.jsonl"))?).lines() {
            let line = line?;
            if !line.trim().is_empty() {
                graphs.push(serde_json::from_str(&line)?);
            }
        }
        Ok(Dataset { meta, graphs, scaler })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn bookkeeping_on_small_run() {
        let base = fixtures::four_bus();
        let ds = generate_dataset(&base, 10, 11, &GenConfig::default(), None).unwrap();
        assert_eq!(ds.meta.n_target, 10);
        assert_eq!(ds.meta.converged + ds.meta.discarded, 10);
        assert_eq!(ds.graphs.len(), ds.meta.converged);
        for g in &ds.graphs {
            assert_eq!(g.node_labels.iter().filter(|&&l| l == 1).count(), 1);
        }
    }

    #[test]
    fn splits_are_disjoint_and_exhaustive() {
        let base = fixtures::four_bus();
        let ds = generate_dataset(&base, 20, 3, &GenConfig::default(), None).unwrap();
        let s = &ds.meta.split;
        let mut all: Vec<usize> =
            s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        let expect: Vec<usize> = (0..ds.meta.converged).collect();
        assert_eq!(all, expect);
        let n = ds.meta.converged;
        assert!(s.train.len() >= n * 8 / 10);
        assert!((s.train.len() as i64 - (n as i64 * 8) / 10).abs() <= 1);
    }

    #[test]
    fn training_features_normalized_to_unit_interval() {
        let base = fixtures::four_bus();
        let ds = generate_dataset(&base, 15, 5, &GenConfig::default(), None).unwrap();
        for g in ds.normalized_split(&ds.meta.split.train) {
            for row in &g.node_features {
                assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
            }
            for row in &g.branch_features {
                assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let base = fixtures::four_bus();
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        generate_dataset(&base, 12, 9, &GenConfig::default(), Some(1))
            .unwrap()
            .save(dir1.path())
            .unwrap();
        generate_dataset(&base, 12, 9, &GenConfig::default(), Some(3))
            .unwrap()
            .save(dir2.path())
            .unwrap();
        for f in ["meta.json", "scaler.json", "scenarios.jsonl"] {
            assert_eq!(
                std::fs::read(dir1.path().join(f)).unwrap(),
                std::fs::read(dir2.path().join(f)).unwrap(),
                "{f} differs"
            );
        }
    }

    #[test]
    fn save_load_round_trip() {
        let base = fixtures::four_bus();
        let ds = generate_dataset(&base, 8, 2, &GenConfig::default(), None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        ds.save(dir.path()).unwrap();
        let back = Dataset::load(dir.path()).unwrap();
        assert_eq!(ds, back);
    }
}
