//! Small hand-computable grids used by the tests and the book.

use crate::grid::{Branch, BranchId, Bus, BusId, BusKind, GridCase};

fn bus(id: usize, kind: BusKind, p_load: f64, q_load: f64, v: f64) -> Bus {
    Bus { id: BusId(id), kind, p_gen: 0.0, q_gen: 0.0, p_load, q_load, v_setpoint: v }
}

fn branch(id: usize, from: usize, to: usize, x: f64, rating: f64) -> Branch {
    Branch { id: BranchId(id), from: BusId(from), to: BusId(to), r: 0.0, x, b_shunt: 0.0, rating }
}

/// Slack–PQ pair joined by one pure reactance, with the given demand at
/// bus 2 covered by the slack.
pub fn two_bus(p_load: f64, q_load: f64) -> GridCase {
    let mut b1 = bus(1, BusKind::Slack, 0.0, 0.0, 1.0);
    b1.p_gen = p_load;
    GridCase::new(
        100.0,
        vec![b1, bus(2, BusKind::Pq, p_load, q_load, 1.0)],
        vec![branch(1, 1, 2, 0.1, 1.0)],
    )
    .unwrap()
}

/// Three buses in a row: generator 1 — junction 2 — load 3. Exactly one
/// transmission path exists.
pub fn chain3() -> GridCase {
    let mut b1 = bus(1, BusKind::Slack, 0.0, 0.0, 1.0);
    b1.p_gen = 0.3;
    GridCase::new(
        100.0,
        vec![b1, bus(2, BusKind::Pq, 0.0, 0.0, 1.0), bus(3, BusKind::Pq, 0.3, 0.1, 1.0)],
        vec![branch(1, 1, 2, 0.1, 1.0), branch(2, 2, 3, 0.1, 0.8)],
    )
    .unwrap()
}

/// Symmetric diamond: generator 1 feeds load 4 over 1–2–4 and 1–3–4 with
/// equal reactances, so both transmission paths tie on distance.
pub fn diamond() -> GridCase {
    let mut b1 = bus(1, BusKind::Slack, 0.0, 0.0, 1.0);
    b1.p_gen = 0.4;
    GridCase::new(
        100.0,
        vec![
            b1,
            bus(2, BusKind::Pq, 0.0, 0.0, 1.0),
            bus(3, BusKind::Pq, 0.0, 0.0, 1.0),
            bus(4, BusKind::Pq, 0.4, 0.1, 1.0),
        ],
        vec![
            branch(1, 1, 2, 0.1, 1.0),
            branch(2, 2, 4, 0.1, 0.9),
            branch(3, 1, 3, 0.1, 0.8),
            branch(4, 3, 4, 0.1, 0.7),
        ],
    )
    .unwrap()
}

/// The shared hand-computable grid: generator 1, junction 2, loads 3 and 4,
/// branches 1–2, 2–3, 1–4, 2–4 with distinct reactances and ratings.
pub fn four_bus() -> GridCase {
    let mut b1 = bus(1, BusKind::Slack, 0.0, 0.0, 1.0);
    b1.p_gen = 0.5;
    GridCase::new(
        100.0,
        vec![
            b1,
            bus(2, BusKind::Pq, 0.0, 0.0, 1.0),
            bus(3, BusKind::Pq, 0.3, 0.1, 1.0),
            bus(4, BusKind::Pq, 0.2, 0.05, 1.0),
        ],
        vec![
            branch(1, 1, 2, 0.10, 1.0),
            branch(2, 2, 3, 0.20, 0.8),
            branch(3, 1, 4, 0.25, 0.6),
            branch(4, 2, 4, 0.15, 0.7),
        ],
    )
    .unwrap()
}
