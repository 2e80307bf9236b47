//! K-shortest transmission paths between a generator and a load bus.
//!
//! Paths are loop-free branch sequences enumerated in nondecreasing
//! electrical-distance order with a Yen-style spur search over Dijkstra.
//! Enumeration works on branches rather than buses so parallel circuits are
//! distinct paths. Ties are broken by path length and then by the branch
//! index sequence, which makes truncation at K deterministic.

use crate::flow::{ElectricalDistanceMatrix, PowerFlowSolution};
use crate::grid::GridCase;
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

/// Weight floor so a path through an unloaded corridor still counts.
pub const MIN_PATH_WEIGHT: f64 = 1e-6;

/// One generator→load transmission path with its aggregated quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionPath {
    /// Dense bus indices from generator to load, no repeats.
    pub buses: Vec<usize>,
    /// Dense branch indices, one per hop.
    pub branches: Vec<usize>,
    /// w: smallest |active flow| over the path's branches (pu), floored at
    /// [`MIN_PATH_WEIGHT`].
    pub weight: f64,
    /// d: summed electrical distance over the path's branches.
    pub distance: f64,
    /// c: smallest branch rating along the path (pu MVA).
    pub capability: f64,
}

#[derive(Clone, Debug)]
struct Route {
    branches: Vec<usize>,
    buses: Vec<usize>,
    cost: f64,
}

impl Route {
    fn key(&self) -> (f64, usize, &[usize]) {
        (self.cost, self.branches.len(), &self.branches)
    }
}

impl PartialEq for Route {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Route {}
impl PartialOrd for Route {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Route {
    fn cmp(&self, other: &Self) -> Ordering {
        let (c0, l0, b0) = self.key();
        let (c1, l1, b1) = other.key();
        c0.total_cmp(&c1).then(l0.cmp(&l1)).then(b0.cmp(b1))
    }
}

#[derive(PartialEq)]
struct HeapEntry {
    dist: f64,
    bus: usize,
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed for a min-heap; bus index breaks distance ties.
        other.dist.total_cmp(&self.dist).then(other.bus.cmp(&self.bus))
    }
}

/// Dijkstra over buses with branch weights, honoring blocked buses and
/// branches. Returns the branch sequence and its cost.
fn dijkstra(
    case: &GridCase,
    weights: &[f64],
    source: usize,
    target: usize,
    blocked_bus: &[bool],
    blocked_branch: &[bool],
) -> Option<(Vec<usize>, f64)> {
    let n = case.n_buses();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry { dist: 0.0, bus: source });

    while let Some(HeapEntry { dist: d, bus }) = heap.pop() {
        if done[bus] {
            continue;
        }
        done[bus] = true;
        if bus == target {
            break;
        }
        for &(next, e) in case.neighbors(bus) {
            if blocked_branch[e] || blocked_bus[next] || done[next] {
                continue;
            }
            let nd = d + weights[e];
            if nd < dist[next] {
                dist[next] = nd;
                prev[next] = Some((bus, e));
                heap.push(HeapEntry { dist: nd, bus: next });
            }
        }
    }

    if !done[target] {
        return None;
    }
    let mut branches = Vec::new();
    let mut at = target;
    while at != source {
        let (p, e) = prev[at].expect("reached bus has a predecessor");
        branches.push(e);
        at = p;
    }
    branches.reverse();
    Some((branches, dist[target]))
}

fn walk_buses(case: &GridCase, source: usize, branches: &[usize]) -> Vec<usize> {
    let mut buses = vec![source];
    let mut at = source;
    for &e in branches {
        let (f, t) = case.branch_endpoints(e);
        at = if f == at { t } else { f };
        buses.push(at);
    }
    buses
}

fn canonical_cost(weights: &[f64], branches: &[usize]) -> f64 {
    branches.iter().map(|&e| weights[e]).sum()
}

/// Enumerate up to `k` loop-free transmission paths from generator bus
/// `source` to load bus `target` (dense indices), cheapest electrical
/// distance first. A disconnected pair yields an empty list.
pub fn k_shortest_paths(
    case: &GridCase,
    dist: &ElectricalDistanceMatrix,
    flow: &PowerFlowSolution,
    source: usize,
    target: usize,
    k: usize,
) -> Vec<TransmissionPath> {
    assert_ne!(source, target, "path endpoints must differ");
    if k == 0 {
        return Vec::new();
    }
    let weights: Vec<f64> =
        (0..case.n_branches()).map(|e| dist.branch_weight(case, e)).collect();
    let m = case.n_branches();
    let n = case.n_buses();

    let open_bus = vec![false; n];
    let open_branch = vec![false; m];
    let Some((first, _)) = dijkstra(case, &weights, source, target, &open_bus, &open_branch)
    else {
        return Vec::new();
    };
    let cost = canonical_cost(&weights, &first);
    let buses = walk_buses(case, source, &first);
    let mut routes = vec![Route { branches: first, buses, cost }];

    let mut candidates: BinaryHeap<std::cmp::Reverse<Route>> = BinaryHeap::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    seen.insert(routes[0].branches.clone());

    let mut ki = 0;
    while routes.len() < k && ki < routes.len() {
        let prev_route = routes[ki].clone();
        for spur_pos in 0..prev_route.branches.len() {
            let spur_bus = prev_route.buses[spur_pos];
            let root = &prev_route.branches[..spur_pos];

            let mut blocked_branch = vec![false; m];
            for r in &routes {
                if r.branches.len() > spur_pos && r.branches[..spur_pos] == *root {
                    blocked_branch[r.branches[spur_pos]] = true;
                }
            }
            let mut blocked_bus = vec![false; n];
            for &b in &prev_route.buses[..spur_pos] {
                blocked_bus[b] = true;
            }

            if let Some((spur, _)) =
                dijkstra(case, &weights, spur_bus, target, &blocked_bus, &blocked_branch)
            {
                let mut branches = root.to_vec();
                branches.extend(spur);
                if seen.insert(branches.clone()) {
                    let cost = canonical_cost(&weights, &branches);
                    let buses = walk_buses(case, source, &branches);
                    candidates.push(std::cmp::Reverse(Route { branches, buses, cost }));
                }
            }
        }
        match candidates.pop() {
            Some(std::cmp::Reverse(best)) => routes.push(best),
            None => {
                if ki + 1 >= routes.len() {
                    break;
                }
            }
        }
        ki += 1;
    }

    routes.sort();
    routes.truncate(k);
    routes
        .into_iter()
        .map(|r| {
            let weight = r
                .branches
                .iter()
                .map(|&e| flow.branches[e].p_from.abs())
                .fold(f64::INFINITY, f64::min)
                .max(MIN_PATH_WEIGHT);
            let capability = r
                .branches
                .iter()
                .map(|&e| case.branches()[e].rating)
                .fold(f64::INFINITY, f64::min);
            TransmissionPath {
                buses: r.buses,
                branches: r.branches,
                weight,
                distance: r.cost,
                capability,
            }
        })
        .collect()
}
