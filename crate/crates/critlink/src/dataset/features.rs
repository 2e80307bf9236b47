//! Per-scenario feature extraction.
//!
//! Node rows carry (degree, p_load, q_load, v_mag, v_angle); branch rows
//! carry (line-graph degree, reactance, |p_flow|, |q_flow|, loading rate,
//! active loss). Flow magnitudes are absolute — direction already lives in
//! the signed adjacency the oracle used.

use super::DatasetError;
use crate::flow::PowerFlowSolution;
use crate::grid::{line_graph, signed_adjacency, GridCase};
use crate::oracle::CriticalityReport;
use serde::{Deserialize, Serialize};

pub const NODE_FEATURES: usize = 5;
pub const BRANCH_FEATURES: usize = 6;

/// Learning-ready view of one labelled scenario. Features are raw here;
/// normalization happens against a fitted [`super::FeatureScaler`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureGraph {
    /// Scenario index within its dataset.
    pub scenario: u64,
    pub node_features: Vec<[f64; NODE_FEATURES]>,
    pub branch_features: Vec<[f64; BRANCH_FEATURES]>,
    /// Adjacent bus indices per bus (undirected, no self-loops).
    pub node_adjacency: Vec<Vec<usize>>,
    /// Adjacent branch indices per branch (the line graph).
    pub branch_adjacency: Vec<Vec<usize>>,
    pub node_labels: Vec<u8>,
    pub branch_labels: Vec<u8>,
}

/// Build the feature graph of one solved, oracle-labelled scenario.
pub fn extract_features(
    case: &GridCase,
    flow: &PowerFlowSolution,
    report: &CriticalityReport,
    scenario: u64,
) -> Result<FeatureGraph, DatasetError> {
    if !flow.converged {
        return Err(DatasetError::NotConverged);
    }
    let adj = signed_adjacency(case, flow)?;
    let lg = line_graph(case);

    let node_features = (0..case.n_buses())
        .map(|i| {
            let bus = &case.buses()[i];
            [adj.degree(i) as f64, bus.p_load, bus.q_load, flow.v_mag[i], flow.v_ang[i]]
        })
        .collect();
    let branch_features = (0..case.n_branches())
        .map(|e| {
            let bf = &flow.branches[e];
            [
                lg.degree(e) as f64,
                case.branches()[e].x,
                bf.p_from.abs(),
                bf.q_from.abs(),
                bf.loading,
                bf.p_loss,
            ]
        })
        .collect();

    let node_adjacency = (0..case.n_buses())
        .map(|i| {
            let mut nb: Vec<usize> = case.neighbors(i).iter().map(|&(j, _)| j).collect();
            nb.sort_unstable();
            nb.dedup();
            nb
        })
        .collect();

    Ok(FeatureGraph {
        scenario,
        node_features,
        branch_features,
        node_adjacency,
        branch_adjacency: lg.adjacency_lists().to_vec(),
        node_labels: report.node_labels.clone(),
        branch_labels: report.branch_labels.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::flow::solve_ac;
    use crate::oracle::{evaluate_case, OracleConfig};
    use approx::assert_relative_eq;

    #[test]
    fn flat_two_bus_features() {
        let case = fixtures::two_bus(0.0, 0.0);
        let flow = solve_ac(&case, 1e-10, 20).unwrap();
        let report = evaluate_case(&case, &flow, &OracleConfig::default()).unwrap();
        let fg = extract_features(&case, &flow, &report, 0).unwrap();
        for row in &fg.node_features {
            assert_eq!(row, &[1.0, 0.0, 0.0, 1.0, 0.0]);
        }
    }

    #[test]
    fn degree_column_matches_adjacency_row_sums() {
        let case = crate::grid::GridCase::parse(crate::IEEE30_CASE).unwrap();
        let flow = solve_ac(&case, 1e-8, 20).unwrap();
        let report = evaluate_case(&case, &flow, &OracleConfig::default()).unwrap();
        let fg = extract_features(&case, &flow, &report, 0).unwrap();
        let adj = signed_adjacency(&case, &flow).unwrap();
        for i in 0..case.n_buses() {
            assert_eq!(fg.node_features[i][0], adj.degree(i) as f64);
        }
    }

    #[test]
    fn loss_column_matches_series_current_route() {
        // Independent loss route: r·|I|² through the series element.
        let case = crate::grid::GridCase::parse(crate::IEEE30_CASE).unwrap();
        let flow = solve_ac(&case, 1e-8, 20).unwrap();
        let report = evaluate_case(&case, &flow, &OracleConfig::default()).unwrap();
        let fg = extract_features(&case, &flow, &report, 0).unwrap();
        for (e, br) in case.branches().iter().enumerate() {
            let (f, t) = case.branch_endpoints(e);
            let vf = num_complex::Complex64::from_polar(flow.v_mag[f], flow.v_ang[f]);
            let vt = num_complex::Complex64::from_polar(flow.v_mag[t], flow.v_ang[t]);
            let i_series = (vf - vt) / num_complex::Complex64::new(br.r, br.x);
            let loss = br.r * i_series.norm_sqr();
            assert_relative_eq!(fg.branch_features[e][5], loss, epsilon = 1e-9);
        }
    }

    #[test]
    fn non_converged_rejected() {
        let case = fixtures::two_bus(0.1, 0.0);
        let mut flow = solve_ac(&case, 1e-8, 20).unwrap();
        let report = evaluate_case(&case, &flow, &OracleConfig::default()).unwrap();
        flow.converged = false;
        assert!(matches!(
            extract_features(&case, &flow, &report, 0),
            Err(DatasetError::NotConverged)
        ));
    }
}
