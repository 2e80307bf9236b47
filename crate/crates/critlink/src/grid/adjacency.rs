//! Flow-direction signed adjacency.
//!
//! The grid is treated as a directed graph whose orientation follows the
//! active power flow of the current scenario: the entry for (i, j) is +1
//! when net active power moves from bus i to bus j, −1 for the reverse and
//! 0 when the buses are not connected. The matrix is rebuilt per solved
//! scenario because the orientation is a property of the operating point,
//! not of the topology.

use super::GridCase;
use crate::flow::PowerFlowSolution;
use thiserror::Error;

/// Antisymmetric direction matrix over bus pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedAdjacency {
    n: usize,
    entries: Vec<i8>,
}

#[derive(Debug, Error, PartialEq)]
pub enum AdjacencyError {
    #[error("flow solution has {got} branches, case has {want}")]
    TopologyMismatch { got: usize, want: usize },
}

impl SignedAdjacency {
    pub fn n(&self) -> usize {
        self.n
    }

    /// +1, −1 or 0 for the ordered pair (i, j) of dense bus indices.
    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.entries[i * self.n + j]
    }

    /// Σ_j |α_ij|: the number of buses adjacent to i.
    pub fn degree(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| self.get(i, j) != 0).count()
    }
}

/// Build the signed adjacency of a solved scenario.
///
/// For parallel branches the sign follows the net active flow between the
/// pair. An exactly-zero net flow falls back to the declared from→to
/// orientation of the lowest-indexed connecting branch, which keeps the
/// result deterministic and case-independent.
pub fn signed_adjacency(
    case: &GridCase,
    flow: &PowerFlowSolution,
) -> Result<SignedAdjacency, AdjacencyError> {
    if flow.branches.len() != case.n_branches() || flow.v_mag.len() != case.n_buses() {
        return Err(AdjacencyError::TopologyMismatch {
            got: flow.branches.len(),
            want: case.n_branches(),
        });
    }
    let n = case.n_buses();
    let mut net = vec![0.0f64; n * n];
    let mut first_orientation = vec![0i8; n * n];
    for (e, _) in case.branches().iter().enumerate() {
        let (f, t) = case.branch_endpoints(e);
        net[f * n + t] += flow.branches[e].p_from;
        net[t * n + f] += flow.branches[e].p_to;
        if first_orientation[f * n + t] == 0 {
            first_orientation[f * n + t] = 1;
            first_orientation[t * n + f] = -1;
        }
    }
    let mut entries = vec![0i8; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            if first_orientation[i * n + j] == 0 {
                continue;
            }
            // Sending-end powers of opposite directions differ by the line
            // loss, so compare the two directed sums.
            let forward = net[i * n + j] - net[j * n + i];
            let sign = if forward > 0.0 {
                1
            } else if forward < 0.0 {
                -1
            } else {
                first_orientation[i * n + j]
            };
            entries[i * n + j] = sign;
            entries[j * n + i] = -sign;
        }
    }
    Ok(SignedAdjacency { n, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::solve_ac;
    use crate::grid::GridCase;

    fn two_bus(p_load: f64) -> GridCase {
        let text = format!(
            "base_mva = 100\n[BUS]\nid,kind,p_load,q_load,v_setpoint\n\
             1,slack,0,0,1.0\n2,pq,{p_load},0,1.0\n\
             [BRANCH]\nid,from,to,r,x,b_shunt,rating\n1,1,2,0.0,0.1,0.0,1.0\n\
             [GEN]\nbus_id,p_gen,q_gen\n1,{p_load},0\n"
        );
        GridCase::parse(&text).unwrap()
    }

    #[test]
    fn flow_direction_sets_sign() {
        let case = two_bus(0.4);
        let flow = solve_ac(&case, 1e-10, 20).unwrap();
        let adj = signed_adjacency(&case, &flow).unwrap();
        assert_eq!(adj.get(0, 1), 1);
        assert_eq!(adj.get(1, 0), -1);
        assert_eq!(adj.degree(0), 1);
    }

    #[test]
    fn zero_flow_uses_declared_orientation() {
        let case = two_bus(0.0);
        let flow = solve_ac(&case, 1e-10, 20).unwrap();
        let adj = signed_adjacency(&case, &flow).unwrap();
        assert_eq!(adj.get(0, 1), 1, "from→to tie-break");
        assert_eq!(adj.get(1, 0), -1);
    }

    #[test]
    fn antisymmetry_on_ieee30() {
        let case = GridCase::parse(crate::IEEE30_CASE).unwrap();
        let flow = solve_ac(&case, 1e-8, 20).unwrap();
        let adj = signed_adjacency(&case, &flow).unwrap();
        for i in 0..adj.n() {
            assert_eq!(adj.get(i, i), 0);
            for j in 0..adj.n() {
                assert_eq!(adj.get(i, j), -adj.get(j, i));
            }
        }
    }
}
