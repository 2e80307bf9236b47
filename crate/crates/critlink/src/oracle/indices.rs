//! Optimized degree and betweenness index clusters.
//!
//! The degree cluster looks at a bus's direct connections under the current
//! flow direction; the betweenness clusters measure how much of the
//! generator→load transmission-path population crosses a bus or branch,
//! weighted by path power, electrical distance and capability.

use super::paths::TransmissionPath;
use crate::flow::ElectricalDistanceMatrix;
use crate::grid::{GridCase, SignedAdjacency};

/// Per-node connectivity degree (count of adjacent buses) and capacity
/// degree (the larger of total outgoing and total incoming direct branch
/// rating under the signed adjacency).
///
/// With `distance_scaling`, each connectivity term is divided by the
/// electrical distance to the neighbor instead of counting 1.
pub fn node_degree_cluster(
    case: &GridCase,
    adj: &SignedAdjacency,
    distance_scaling: Option<&ElectricalDistanceMatrix>,
) -> (Vec<f64>, Vec<f64>) {
    let n = case.n_buses();
    // Total rating of the branches directly connecting each pair; parallel
    // circuits add up.
    let mut pair_rating = vec![0.0f64; n * n];
    for (e, br) in case.branches().iter().enumerate() {
        let (f, t) = case.branch_endpoints(e);
        pair_rating[f * n + t] += br.rating;
        pair_rating[t * n + f] += br.rating;
    }

    let mut connectivity = vec![0.0; n];
    let mut capacity = vec![0.0; n];
    for i in 0..n {
        let mut conn = 0.0;
        let mut out = 0.0;
        let mut inc = 0.0;
        for j in 0..n {
            match adj.get(i, j) {
                0 => continue,
                1 => out += pair_rating[i * n + j],
                _ => inc += pair_rating[i * n + j],
            }
            conn += match distance_scaling {
                Some(d) => 1.0 / d.get(i, j),
                None => 1.0,
            };
        }
        connectivity[i] = conn;
        capacity[i] = out.max(inc);
    }
    (connectivity, capacity)
}

/// Shared shape of the three betweenness ratios.
fn betweenness(
    population: usize,
    paths: &[TransmissionPath],
    members: impl Fn(&TransmissionPath) -> Vec<usize>,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut share = vec![0.0; population];
    let mut dist_share = vec![0.0; population];
    let mut cap_share = vec![0.0; population];
    let mut total_wd = 0.0;
    let mut total_wc = 0.0;
    for path in paths {
        let wd = path.weight * path.distance;
        let wc = path.weight * path.capability;
        total_wd += wd;
        total_wc += wc;
        for idx in members(path) {
            share[idx] += 1.0;
            dist_share[idx] += wd;
            cap_share[idx] += wc;
        }
    }
    let total = paths.len() as f64;
    if paths.is_empty() || total_wd == 0.0 || total_wc == 0.0 {
        log::warn!("betweenness over an empty or zero-weight path population; indices are zero");
        return (vec![0.0; population], vec![0.0; population], vec![0.0; population]);
    }
    for i in 0..population {
        share[i] /= total;
        dist_share[i] /= total_wd;
        cap_share[i] /= total_wc;
    }
    (share, dist_share, cap_share)
}

/// Per-node path share, distance-weighted share and capability-weighted
/// share over the full generator→load path population.
pub fn node_betweenness_cluster(
    n_buses: usize,
    paths: &[TransmissionPath],
    include_endpoints: bool,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    betweenness(n_buses, paths, |p| {
        if include_endpoints {
            p.buses.clone()
        } else if p.buses.len() > 2 {
            p.buses[1..p.buses.len() - 1].to_vec()
        } else {
            Vec::new()
        }
    })
}

/// Per-branch counterparts of [`node_betweenness_cluster`].
pub fn branch_betweenness_cluster(
    n_branches: usize,
    paths: &[TransmissionPath],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    betweenness(n_branches, paths, |p| p.branches.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::flow::{electrical_distance, solve_ac};
    use crate::grid::{signed_adjacency, Branch, BranchId, Bus, BusId, BusKind};
    use crate::oracle::paths::k_shortest_paths;
    use approx::assert_relative_eq;

    fn star_case() -> GridCase {
        // Center bus 1 feeding three leaves, all ratings 1.0.
        let mut center = Bus {
            id: BusId(1),
            kind: BusKind::Slack,
            p_gen: 0.3,
            q_gen: 0.0,
            p_load: 0.0,
            q_load: 0.0,
            v_setpoint: 1.0,
        };
        center.p_gen = 0.3;
        let leaf = |id: usize| Bus {
            id: BusId(id),
            kind: BusKind::Pq,
            p_gen: 0.0,
            q_gen: 0.0,
            p_load: 0.1,
            q_load: 0.0,
            v_setpoint: 1.0,
        };
        let spoke = |id: usize, to: usize| Branch {
            id: BranchId(id),
            from: BusId(1),
            to: BusId(to),
            r: 0.0,
            x: 0.1,
            b_shunt: 0.0,
            rating: 1.0,
        };
        GridCase::new(
            100.0,
            vec![center, leaf(2), leaf(3), leaf(4)],
            vec![spoke(1, 2), spoke(2, 3), spoke(3, 4)],
        )
        .unwrap()
    }

    #[test]
    fn star_degrees() {
        let case = star_case();
        let flow = solve_ac(&case, 1e-8, 20).unwrap();
        let adj = signed_adjacency(&case, &flow).unwrap();
        let (conn, cap) = node_degree_cluster(&case, &adj, None);
        assert_eq!(conn, vec![3.0, 1.0, 1.0, 1.0]);
        // All flow leaves the center: outgoing sum 3, leaves see 1 incoming.
        assert_eq!(cap, vec![3.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn chain_path_share_covers_every_bus() {
        let case = fixtures::chain3();
        let flow = solve_ac(&case, 1e-8, 20).unwrap();
        let dist = electrical_distance(&case).unwrap();
        let paths = k_shortest_paths(&case, &dist, &flow, 0, 2, 5);
        let (share, dshare, cshare) = node_betweenness_cluster(3, &paths, true);
        assert_eq!(share, vec![1.0, 1.0, 1.0]);
        assert_eq!(dshare, vec![1.0, 1.0, 1.0]);
        assert_eq!(cshare, vec![1.0, 1.0, 1.0]);
        let (bshare, _, _) = branch_betweenness_cluster(2, &paths);
        assert_eq!(bshare, vec![1.0, 1.0]);
    }

    #[test]
    fn excluding_endpoints_zeroes_terminals() {
        let case = fixtures::chain3();
        let flow = solve_ac(&case, 1e-8, 20).unwrap();
        let dist = electrical_distance(&case).unwrap();
        let paths = k_shortest_paths(&case, &dist, &flow, 0, 2, 5);
        let (share, _, _) = node_betweenness_cluster(3, &paths, false);
        assert_eq!(share, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn bus_off_every_path_scores_zero() {
        // Diamond: enumerate only the single shortest 1→4 path; the bypass
        // bus never appears.
        let case = fixtures::diamond();
        let flow = solve_ac(&case, 1e-8, 20).unwrap();
        let dist = electrical_distance(&case).unwrap();
        let paths = k_shortest_paths(&case, &dist, &flow, 0, 3, 1);
        let (share, dshare, cshare) = node_betweenness_cluster(4, &paths, true);
        let bypass = [1usize, 2]
            .into_iter()
            .find(|&i| !paths[0].buses.contains(&i))
            .unwrap();
        assert_eq!(share[bypass], 0.0);
        assert_eq!(dshare[bypass], 0.0);
        assert_eq!(cshare[bypass], 0.0);
    }

    #[test]
    fn empty_population_yields_zeros() {
        let (a, b, c) = node_betweenness_cluster(3, &[], true);
        assert_eq!(a, vec![0.0; 3]);
        assert_eq!(b, vec![0.0; 3]);
        assert_eq!(c, vec![0.0; 3]);
    }

    #[test]
    fn diamond_branch_shares_split_evenly() {
        let case = fixtures::diamond();
        let flow = solve_ac(&case, 1e-8, 20).unwrap();
        let dist = electrical_distance(&case).unwrap();
        let paths = k_shortest_paths(&case, &dist, &flow, 0, 3, 5);
        assert_eq!(paths.len(), 2);
        let (share, _, _) = branch_betweenness_cluster(4, &paths);
        for e in 0..4 {
            assert_relative_eq!(share[e], 0.5, epsilon = 1e-12);
        }
    }
}
