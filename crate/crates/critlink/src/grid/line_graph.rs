//! Branch line graph: branches become vertices, adjacent when they share a
//! bus. Carries the branch classifier and the branch degree feature.

use super::GridCase;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineGraph {
    neighbors: Vec<Vec<usize>>,
}

impl LineGraph {
    pub fn m(&self) -> usize {
        self.neighbors.len()
    }

    /// Branch indices adjacent to branch `e`, ascending.
    pub fn neighbors(&self, e: usize) -> &[usize] {
        &self.neighbors[e]
    }

    pub fn degree(&self, e: usize) -> usize {
        self.neighbors[e].len()
    }

    pub fn adjacency_lists(&self) -> &[Vec<usize>] {
        &self.neighbors
    }
}

pub fn line_graph(case: &GridCase) -> LineGraph {
    let m = case.n_branches();
    let mut neighbors = vec![Vec::new(); m];
    for bus in 0..case.n_buses() {
        let incident: Vec<usize> = case.neighbors(bus).iter().map(|&(_, e)| e).collect();
        for (a, &e) in incident.iter().enumerate() {
            for &f in &incident[a + 1..] {
                if e != f {
                    neighbors[e].push(f);
                    neighbors[f].push(e);
                }
            }
        }
    }
    for list in &mut neighbors {
        list.sort_unstable();
        // Parallel branches share both endpoints and would otherwise be
        // recorded twice.
        list.dedup();
    }
    LineGraph { neighbors }
}
