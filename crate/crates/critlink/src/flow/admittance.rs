//! Nodal admittance matrix assembled from branch π-models.

use crate::grid::GridCase;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Dense n×n complex admittance matrix. Each branch contributes its series
/// admittance 1/(r + jx) plus half of the line charging at each terminal.
pub fn build_admittance(case: &GridCase) -> DMatrix<Complex64> {
    let n = case.n_buses();
    let mut y = DMatrix::<Complex64>::zeros(n, n);
    for (e, br) in case.branches().iter().enumerate() {
        let (f, t) = case.branch_endpoints(e);
        let series = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
        let shunt = Complex64::new(0.0, br.b_shunt / 2.0);
        y[(f, f)] += series + shunt;
        y[(t, t)] += series + shunt;
        y[(f, t)] -= series;
        y[(t, f)] -= series;
    }
    y
}
