//! Matrix Beltrami equations `∂̄P = AP`: strip partitions, local Neumann
//! solves, a global solve, transition matrices, gluing data, the
//! subharmonic majorant and the bound sweep.

pub mod global;
pub mod gluing;
pub mod majorant;
pub mod matrix;
pub mod neumann;
pub mod partition;
pub mod sweep;

pub use global::{global_solve, BeltramiSolution, GlobalConfig};
pub use gluing::{derive_gluing, solve_on_partition, transition_matrices, verify_gluing_bounds};
pub use majorant::{majorant, MajorantSchedule};
pub use matrix::{Mat2, MatrixField};
pub use neumann::{local_neumann_solve, NeumannConfig};
pub use partition::{choose_delta, make_partition, StripPartition};
pub use sweep::{bound_sweep, RandomMatrix};

use crate::field::Margin;
use crate::Result;

/// Interior `sup|∂̄P − AP| / sup|P|` in the pointwise operator norm.
pub fn beltrami_residual(p: &MatrixField, a: &MatrixField, margin: Margin) -> Result<f64> {
    let scale = p.sup_opnorm();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let defect = p.dbar().sub(&a.mul(p)?)?;
    Ok(defect.interior_sup_opnorm(margin) / scale)
}
