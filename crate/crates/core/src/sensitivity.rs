//! Adjoint derivatives of compliance with respect to the physical densities,
//! including the load sensitivities that come from the flow model, and the
//! volume constraint.
//!
//! The displacement adjoint equals `-2u` and is eliminated analytically; only
//! the flow adjoint `lam1` is solved for.

use crate::element::{ElementMatrices, MaterialParams};
use crate::error::{Error, Result};
use crate::linalg::{CscMatrix, Partition, SpdFactor};
use crate::mesh::Mesh;
use crate::structure::element_energies;

/// `lam1_f = A_ff^-1 (2 T^T u)_f`, zero at prescribed pressure DOFs.
///
/// `flow_factor` is the factorization of `A_ff` from the pressure solve and
/// `partition` the matching free/fixed split of the pressure DOFs.
pub fn solve_adjoint(flow_factor: &SpdFactor, partition: &Partition, t: &CscMatrix, u: &[f64]) -> Result<Vec<f64>> {
    if u.len() != t.nrows || partition.len() != t.ncols {
        return Err(Error::invalid("adjoint inputs have inconsistent dimensions"));
    }
    let w = t.mul_transpose_vec(u);
    let rhs: Vec<f64> = partition.free.iter().map(|&i| 2.0 * w[i]).collect();
    let lf = flow_factor.solve(&rhs)?;
    Ok(partition.scatter_free(&lf, &vec![0.0; t.ncols]))
}

/// State fields the compliance gradient is evaluated at.
pub struct AdjointState<'a> {
    pub u: &'a [f64],
    pub p: &'a [f64],
    pub lam1: &'a [f64],
}

/// `dC/dxphys` per element: the stiffness term plus, when `lst` is set, the
/// load term through the flow and drainage coefficients.
pub fn compliance_sensitivities(
    mesh: &Mesh,
    em: &ElementMatrices,
    params: &MaterialParams,
    xphys: &[f64],
    state: &AdjointState<'_>,
    lst: bool,
) -> Vec<f64> {
    let energies = element_energies(mesh, em, state.u);
    let mut out: Vec<f64> = xphys
        .iter()
        .zip(&energies)
        .map(|(&x, &w)| -params.simp_modulus_derivative(x) * w)
        .collect();
    if lst {
        for (e, dofs) in mesh.pdofs.iter().enumerate() {
            let pe: [f64; 4] = dofs.map(|d| state.p[d]);
            let le: [f64; 4] = dofs.map(|d| state.lam1[d]);
            let (mut lkp, mut lkdp) = (0.0, 0.0);
            for a in 0..4 {
                for b in 0..4 {
                    lkp += le[a] * em.kp[a][b] * pe[b];
                    lkdp += le[a] * em.kdp[a][b] * pe[b];
                }
            }
            let x = xphys[e];
            out[e] += params.flow_coefficient_derivative(x) * lkp + params.drainage_coefficient_derivative(x) * lkdp;
        }
    }
    out
}

/// `sum(x) / (nel volfrac) - 1` and its constant per-element gradient.
pub fn volume_constraint(xphys: &[f64], volfrac: f64) -> Result<(f64, Vec<f64>)> {
    if !(volfrac > 0.0 && volfrac <= 1.0) {
        return Err(Error::invalid(format!("volume fraction {volfrac} outside (0, 1]")));
    }
    let scale = 1.0 / (xphys.len() as f64 * volfrac);
    let value = xphys.iter().sum::<f64>() * scale - 1.0;
    Ok((value, vec![scale; xphys.len()]))
}
