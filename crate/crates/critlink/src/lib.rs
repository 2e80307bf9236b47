//! Critical-link identification for power grids.
//!
//! The crate has two halves that mirror how the toolkit is used:
//!
//! * a **criticality oracle** — AC power flow ([`flow`]), impedance-matrix
//!   electrical distances, K-shortest transmission paths and the optimized
//!   degree/betweenness index clusters ([`oracle`]) that label the top
//!   fraction of buses and branches as critical for one operating scenario;
//! * a **learned identifier** — a multi-head dynamic-attention graph network
//!   ([`mgat`]) trained on oracle-labelled perturbed scenarios ([`dataset`])
//!   to reproduce those labels from per-scenario features in a fraction of
//!   the oracle's time, scored with confusion-matrix metrics ([`metrics`]).
//!
//! The [`grid`] module holds the shared case model: a plain-text case format,
//! per-unit bus/branch data, the flow-direction signed adjacency and the
//! branch line graph.
//!
//! A narrative guide with runnable snippets lives in `book/`; the snippets
//! are compiled as doctests through [`book`].
//!
//! # Quick start
//!
//! ```
//! use critlink::grid::GridCase;
//! use critlink::flow::solve_ac;
//! use critlink::oracle::{evaluate_case, OracleConfig};
//!
//! let case = GridCase::parse(critlink::IEEE30_CASE)?;
//! let flow = solve_ac(&case, 1e-8, 20)?;
//! assert!(flow.converged);
//!
//! let report = evaluate_case(&case, &flow, &OracleConfig::default())?;
//! assert_eq!(report.node_labels.iter().filter(|&&l| l == 1).count(), 6);
//! assert_eq!(report.branch_labels.iter().filter(|&&l| l == 1).count(), 8);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod book;
pub mod fixtures;
pub mod dataset;
pub mod flow;
pub mod grid;
pub mod metrics;
pub mod mgat;
pub mod oracle;

/// Bundled IEEE 30-bus case (30 buses, 41 branches, six machines).
pub const IEEE30_CASE: &str = include_str!("../../../cases/ieee30.case");

/// Version tag written into every serialized artifact (case solutions,
/// datasets, models, reports). Bumped on breaking schema changes.
pub const SCHEMA_VERSION: u32 = 1;
