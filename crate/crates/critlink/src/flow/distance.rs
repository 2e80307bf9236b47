//! Impedance-matrix electrical distance.
//!
//! The nodal admittance matrix is singular, so it is regularized by
//! grounding the slack bus: its row and column are removed, the remainder is
//! inverted to the impedance matrix Z, and the slack's Z entries are defined
//! as zero. The distance between buses i and j is |z_ii + z_jj − 2·z_ij|.

use super::build_admittance;
use super::FlowError;
use crate::grid::GridCase;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Symmetric electrical-distance matrix with zero diagonal (pu impedance
/// magnitude).
#[derive(Debug, Clone, PartialEq)]
pub struct ElectricalDistanceMatrix {
    n: usize,
    vals: Vec<f64>,
}

impl ElectricalDistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.vals[i * self.n + j]
    }

    /// Distance between the endpoints of branch `e`, used as the path
    /// weight in transmission-path enumeration.
    pub fn branch_weight(&self, case: &GridCase, e: usize) -> f64 {
        let (f, t) = case.branch_endpoints(e);
        self.get(f, t)
    }
}

/// Electrical distance of every bus pair. Fails when the slack-grounded
/// admittance matrix is singular, which happens exactly when some island
/// has no path to the slack bus.
pub fn electrical_distance(case: &GridCase) -> Result<ElectricalDistanceMatrix, FlowError> {
    let n = case.n_buses();
    let slack = case.slack_index();
    if !connected_to_slack(case) {
        return Err(FlowError::Disconnected);
    }
    let y = build_admittance(case);

    let keep: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
    let m = keep.len();
    let mut reduced = DMatrix::<Complex64>::zeros(m, m);
    for (a, &i) in keep.iter().enumerate() {
        for (b, &j) in keep.iter().enumerate() {
            reduced[(a, b)] = y[(i, j)];
        }
    }
    let z_red = reduced.lu().try_inverse().ok_or(FlowError::Disconnected)?;

    // Map back with z = 0 on the slack row/column.
    let mut z = vec![Complex64::new(0.0, 0.0); n * n];
    for (a, &i) in keep.iter().enumerate() {
        for (b, &j) in keep.iter().enumerate() {
            z[i * n + j] = z_red[(a, b)];
        }
    }

    let mut vals = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let l = (z[i * n + i] + z[j * n + j] - z[i * n + j] - z[i * n + j]).norm();
            vals[i * n + j] = if i == j { 0.0 } else { l };
        }
    }
    Ok(ElectricalDistanceMatrix { n, vals })
}

/// Every bus must reach the slack; rounding can otherwise turn the exactly
/// singular reduced matrix into an invertible near-singular one.
fn connected_to_slack(case: &GridCase) -> bool {
    let n = case.n_buses();
    let mut seen = vec![false; n];
    let mut stack = vec![case.slack_index()];
    seen[case.slack_index()] = true;
    let mut count = 1;
    while let Some(i) = stack.pop() {
        for &(j, _) in case.neighbors(i) {
            if !seen[j] {
                seen[j] = true;
                count += 1;
                stack.push(j);
            }
        }
    }
    count == n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Branch, BranchId, Bus, BusId, BusKind};
    use approx::assert_relative_eq;

    fn bus(id: usize, kind: BusKind) -> Bus {
        Bus {
            id: BusId(id),
            kind,
            p_gen: 0.0,
            q_gen: 0.0,
            p_load: 0.0,
            q_load: 0.0,
            v_setpoint: 1.0,
        }
    }

    fn branch(id: usize, from: usize, to: usize, x: f64) -> Branch {
        Branch {
            id: BranchId(id),
            from: BusId(from),
            to: BusId(to),
            r: 0.0,
            x,
            b_shunt: 0.0,
            rating: 1.0,
        }
    }

    #[test]
    fn two_bus_distance_is_branch_reactance() {
        let case = GridCase::new(
            100.0,
            vec![bus(1, BusKind::Slack), bus(2, BusKind::Pq)],
            vec![branch(1, 1, 2, 0.1)],
        )
        .unwrap();
        let d = electrical_distance(&case).unwrap();
        assert_relative_eq!(d.get(0, 1), 0.1, epsilon = 1e-12);
        assert_eq!(d.get(0, 0), 0.0);
        assert_eq!(d.get(1, 1), 0.0);
    }

    #[test]
    fn symmetric_triangle_has_equal_distances() {
        let case = GridCase::new(
            100.0,
            vec![bus(1, BusKind::Slack), bus(2, BusKind::Pq), bus(3, BusKind::Pq)],
            vec![branch(1, 1, 2, 0.2), branch(2, 2, 3, 0.2), branch(3, 3, 1, 0.2)],
        )
        .unwrap();
        let d = electrical_distance(&case).unwrap();
        assert_relative_eq!(d.get(0, 1), d.get(1, 2), epsilon = 1e-12);
        assert_relative_eq!(d.get(1, 2), d.get(0, 2), epsilon = 1e-12);
        assert_relative_eq!(d.get(0, 1), d.get(1, 0), epsilon = 1e-15);
    }

    #[test]
    fn disconnected_island_detected() {
        let case = GridCase::new(
            100.0,
            vec![
                bus(1, BusKind::Slack),
                bus(2, BusKind::Pq),
                bus(3, BusKind::Pq),
                bus(4, BusKind::Pq),
            ],
            vec![branch(1, 1, 2, 0.1), branch(2, 3, 4, 0.1)],
        )
        .unwrap();
        assert_eq!(electrical_distance(&case).unwrap_err(), FlowError::Disconnected);
    }

    #[test]
    fn doubling_reactance_doubles_distance() {
        let case = GridCase::parse(crate::IEEE30_CASE).unwrap();
        // Pure-reactance copy so Z scales linearly in x.
        let buses = case.buses().to_vec();
        let lossless: Vec<Branch> = case
            .branches()
            .iter()
            .map(|b| Branch { r: 0.0, b_shunt: 0.0, ..b.clone() })
            .collect();
        let doubled: Vec<Branch> =
            lossless.iter().map(|b| Branch { x: 2.0 * b.x, ..b.clone() }).collect();
        let base = GridCase::new(100.0, buses.clone(), lossless).unwrap();
        let twice = GridCase::new(100.0, buses, doubled).unwrap();
        let d1 = electrical_distance(&base).unwrap();
        let d2 = electrical_distance(&twice).unwrap();
        for i in 0..d1.n() {
            for j in 0..d1.n() {
                assert_relative_eq!(d2.get(i, j), 2.0 * d1.get(i, j), epsilon = 1e-9);
            }
        }
    }
}
