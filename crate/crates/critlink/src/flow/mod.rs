//! AC power flow: Newton–Raphson solver on the polar mismatch equations,
//! branch flow extraction, and the impedance-matrix electrical distance.
//!
//! Non-convergence is data, not a fault: scenario generation discards
//! divergent operating points, so [`solve_ac`] reports it through the
//! `converged` flag and reserves `Err` for structural problems (a singular
//! Jacobian, invalid arguments).

mod admittance;
mod distance;

pub use admittance::build_admittance;
pub use distance::{electrical_distance, ElectricalDistanceMatrix};

use crate::grid::{BusKind, GridCase};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default mismatch tolerance (pu).
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default Newton iteration cap.
pub const DEFAULT_MAX_ITER: usize = 20;

/// Flows and loss of one branch at the solved operating point (pu).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchFlow {
    pub p_from: f64,
    pub q_from: f64,
    pub p_to: f64,
    pub q_to: f64,
    /// Active loss, `p_from + p_to`.
    pub p_loss: f64,
    /// max(|S_from|, |S_to|) / rating.
    pub loading: f64,
}

/// Converged (or abandoned) AC state for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFlowSolution {
    /// Per-bus voltage magnitude (pu), case bus order.
    pub v_mag: Vec<f64>,
    /// Per-bus voltage angle (rad).
    pub v_ang: Vec<f64>,
    /// Per-branch flows, case branch order.
    pub branches: Vec<BranchFlow>,
    pub converged: bool,
    pub iterations: usize,
    pub max_mismatch: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum FlowError {
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("max_iter must be at least 1")]
    InvalidMaxIter,
    #[error("singular Jacobian at iteration {iteration}")]
    SingularJacobian { iteration: usize },
    #[error("network is disconnected: reduced admittance matrix is singular")]
    Disconnected,
}

/// Active/reactive injection at every bus computed from a voltage state.
/// Shared by the solver and by mismatch re-checks.
pub fn bus_power(
    y: &DMatrix<Complex64>,
    v_mag: &[f64],
    v_ang: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let n = v_mag.len();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for i in 0..n {
        let mut pi = 0.0;
        let mut qi = 0.0;
        for j in 0..n {
            let g = y[(i, j)].re;
            let b = y[(i, j)].im;
            if g == 0.0 && b == 0.0 {
                continue;
            }
            let th = v_ang[i] - v_ang[j];
            let (s, c) = th.sin_cos();
            pi += v_mag[j] * (g * c + b * s);
            qi += v_mag[j] * (g * s - b * c);
        }
        p[i] = v_mag[i] * pi;
        q[i] = v_mag[i] * qi;
    }
    (p, q)
}

/// Solve the AC power flow with Newton–Raphson from a flat start.
///
/// Returns `converged = false` when the mismatch is still above `tol` after
/// `max_iter` updates. A singular Jacobian is reported as an error, distinct
/// from non-convergence.
pub fn solve_ac(case: &GridCase, tol: f64, max_iter: usize) -> Result<PowerFlowSolution, FlowError> {
    if !(tol > 0.0) {
        return Err(FlowError::InvalidTolerance(tol));
    }
    if max_iter == 0 {
        return Err(FlowError::InvalidMaxIter);
    }

    let n = case.n_buses();
    let y = build_admittance(case);

    // Flat start; PV and slack magnitudes pinned to their setpoints.
    let mut v_mag = vec![1.0; n];
    let mut v_ang = vec![0.0; n];
    for (i, bus) in case.buses().iter().enumerate() {
        if bus.is_generator() {
            v_mag[i] = bus.v_setpoint;
        }
    }

    // Unknown layout: angles at every non-slack bus, then magnitudes at PQ
    // buses, both in dense bus order.
    let ang_vars: Vec<usize> =
        (0..n).filter(|&i| case.buses()[i].kind != BusKind::Slack).collect();
    let mag_vars: Vec<usize> =
        (0..n).filter(|&i| case.buses()[i].kind == BusKind::Pq).collect();
    let n_ang = ang_vars.len();
    let n_var = n_ang + mag_vars.len();

    let p_spec: Vec<f64> = (0..n).map(|i| case.injection(i).0).collect();
    let q_spec: Vec<f64> = (0..n).map(|i| case.injection(i).1).collect();

    let mismatch = |p: &[f64], q: &[f64]| -> DVector<f64> {
        let mut f = DVector::zeros(n_var);
        for (r, &i) in ang_vars.iter().enumerate() {
            f[r] = p_spec[i] - p[i];
        }
        for (r, &i) in mag_vars.iter().enumerate() {
            f[n_ang + r] = q_spec[i] - q[i];
        }
        f
    };

    let mut iterations = 0;
    let (mut p, mut q) = bus_power(&y, &v_mag, &v_ang);
    let mut f = mismatch(&p, &q);
    let mut max_mismatch = f.amax();

    while max_mismatch > tol && iterations < max_iter {
        let jac = jacobian(&y, &v_mag, &v_ang, &p, &q, &ang_vars, &mag_vars);
        let step = jac
            .lu()
            .solve(&f)
            .ok_or(FlowError::SingularJacobian { iteration: iterations })?;
        for (r, &i) in ang_vars.iter().enumerate() {
            v_ang[i] += step[r];
        }
        for (r, &i) in mag_vars.iter().enumerate() {
            v_mag[i] += step[n_ang + r];
        }
        iterations += 1;
        (p, q) = bus_power(&y, &v_mag, &v_ang);
        f = mismatch(&p, &q);
        max_mismatch = f.amax();
        if !max_mismatch.is_finite() {
            break;
        }
    }

    let converged = max_mismatch.is_finite() && max_mismatch <= tol;
    let branches = branch_flows(case, &v_mag, &v_ang);
    Ok(PowerFlowSolution { v_mag, v_ang, branches, converged, iterations, max_mismatch })
}

fn jacobian(
    y: &DMatrix<Complex64>,
    v_mag: &[f64],
    v_ang: &[f64],
    p: &[f64],
    q: &[f64],
    ang_vars: &[usize],
    mag_vars: &[usize],
) -> DMatrix<f64> {
    let n_ang = ang_vars.len();
    let n_var = n_ang + mag_vars.len();
    let mut jac = DMatrix::zeros(n_var, n_var);

    // ∂(P,Q)/∂(θ,V), standard polar expressions. With mismatch spec − calc
    // and update x += Δ, Newton solves ∂calc/∂x · Δ = mismatch.
    let term = |i: usize, j: usize| -> (f64, f64) {
        let g = y[(i, j)].re;
        let b = y[(i, j)].im;
        let th = v_ang[i] - v_ang[j];
        let (s, c) = th.sin_cos();
        (g * c + b * s, g * s - b * c)
    };

    for (r, &i) in ang_vars.iter().enumerate() {
        for (cidx, &j) in ang_vars.iter().enumerate() {
            let d = if i == j {
                -q[i] - y[(i, i)].im * v_mag[i] * v_mag[i]
            } else {
                let (_, gs_bc) = term(i, j);
                v_mag[i] * v_mag[j] * gs_bc
            };
            jac[(r, cidx)] = d;
        }
        for (cidx, &j) in mag_vars.iter().enumerate() {
            let d = if i == j {
                p[i] / v_mag[i] + y[(i, i)].re * v_mag[i]
            } else {
                let (gc_bs, _) = term(i, j);
                v_mag[i] * gc_bs
            };
            jac[(r, n_ang + cidx)] = d;
        }
    }
    for (r, &i) in mag_vars.iter().enumerate() {
        for (cidx, &j) in ang_vars.iter().enumerate() {
            let d = if i == j {
                p[i] - y[(i, i)].re * v_mag[i] * v_mag[i]
            } else {
                let (gc_bs, _) = term(i, j);
                -v_mag[i] * v_mag[j] * gc_bs
            };
            jac[(n_ang + r, cidx)] = d;
        }
        for (cidx, &j) in mag_vars.iter().enumerate() {
            let d = if i == j {
                q[i] / v_mag[i] - y[(i, i)].im * v_mag[i]
            } else {
                let (_, gs_bc) = term(i, j);
                v_mag[i] * gs_bc
            };
            jac[(n_ang + r, n_ang + cidx)] = d;
        }
    }
    jac
}

fn branch_flows(case: &GridCase, v_mag: &[f64], v_ang: &[f64]) -> Vec<BranchFlow> {
    case.branches()
        .iter()
        .enumerate()
        .map(|(e, br)| {
            let (f, t) = case.branch_endpoints(e);
            let vf = Complex64::from_polar(v_mag[f], v_ang[f]);
            let vt = Complex64::from_polar(v_mag[t], v_ang[t]);
            let series = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
            let shunt = Complex64::new(0.0, br.b_shunt / 2.0);
            let i_from = series * (vf - vt) + shunt * vf;
            let i_to = series * (vt - vf) + shunt * vt;
            let s_from = vf * i_from.conj();
            let s_to = vt * i_to.conj();
            BranchFlow {
                p_from: s_from.re,
                q_from: s_from.im,
                p_to: s_to.re,
                q_to: s_to.im,
                p_loss: s_from.re + s_to.re,
                loading: s_from.norm().max(s_to.norm()) / br.rating,
            }
        })
        .collect()
}
