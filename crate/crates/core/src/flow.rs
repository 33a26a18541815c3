//! Darcy flow with a drainage sink: global flow matrix and the pressure
//! solve under prescribed nodal pressures.

use serde::{Deserialize, Serialize};

use crate::element::{ElementMatrices, MaterialParams};
use crate::error::{Error, Result};
use crate::linalg::{AssemblyPattern, BlockMap, CscMatrix, Partition, SpdFactor, SpdSolver};
use crate::mesh::Mesh;

/// Prescribed nodal pressures. Nodes not listed are free; on the boundary
/// that means zero normal flux.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureBC {
    pub fixed_dofs: Vec<usize>,
    pub fixed_values: Vec<f64>,
    /// Input pressure magnitude.
    pub pin: f64,
}

impl PressureBC {
    pub fn new(fixed: impl IntoIterator<Item = (usize, f64)>, pin: f64) -> Self {
        let (fixed_dofs, fixed_values) = fixed.into_iter().unzip();
        PressureBC {
            fixed_dofs,
            fixed_values,
            pin,
        }
    }

    pub fn validate(&self, nno: usize) -> Result<()> {
        if self.fixed_dofs.is_empty() {
            return Err(Error::invalid("at least one pressure DOF must be prescribed"));
        }
        if self.fixed_dofs.len() != self.fixed_values.len() {
            return Err(Error::invalid("pressure DOFs and values differ in length"));
        }
        if let Some(v) = self.fixed_values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("prescribed pressure {v} is not finite")));
        }
        Partition::new(nno, &self.fixed_dofs).map(|_| ())
    }

    /// Full-length vector holding the prescribed values, zero elsewhere.
    pub fn prescribed(&self, nno: usize) -> Vec<f64> {
        let mut p = vec![0.0; nno];
        for (&d, &v) in self.fixed_dofs.iter().zip(&self.fixed_values) {
            p[d] = v;
        }
        p
    }
}

/// Per-problem flow machinery: assembly pattern, free/fixed split and the
/// symbolic factorization of `A_ff`.
#[derive(Debug, Clone)]
pub struct FlowSolver {
    pub partition: Partition,
    pattern: AssemblyPattern,
    ff: BlockMap,
    fc: BlockMap,
    solver: SpdSolver,
    /// Prescribed values in `partition.fixed` order.
    fixed_values: Vec<f64>,
    prescribed: Vec<f64>,
    pdofs: Vec<[usize; 4]>,
}

impl FlowSolver {
    pub fn new(mesh: &Mesh, bc: &PressureBC) -> Result<Self> {
        bc.validate(mesh.nno)?;
        let partition = Partition::new(mesh.nno, &bc.fixed_dofs)?;
        let pattern = flow_pattern(mesh);
        let template = pattern.assemble(&vec![1.0; pattern.len()]);
        let ff = BlockMap::new(&template, &partition.free, &partition.free);
        let fc = BlockMap::new(&template, &partition.free, &partition.fixed);
        let solver = SpdSolver::new(&ff.extract(&template), "flow matrix A_ff")?;
        let prescribed = bc.prescribed(mesh.nno);
        let fixed_values = partition.fixed.iter().map(|&d| prescribed[d]).collect();
        Ok(FlowSolver {
            partition,
            pattern,
            ff,
            fc,
            solver,
            fixed_values,
            prescribed,
            pdofs: mesh.pdofs.clone(),
        })
    }

    /// `A = sum_e K(x_e) kp + D(x_e) kdp`, symmetrized.
    pub fn assemble(&self, em: &ElementMatrices, xphys: &[f64], params: &MaterialParams) -> Result<CscMatrix> {
        if xphys.len() != self.pdofs.len() {
            return Err(Error::invalid(format!(
                "density field has {} entries, mesh has {} elements",
                xphys.len(),
                self.pdofs.len()
            )));
        }
        let mut vals = Vec::with_capacity(self.pattern.len());
        for &x in xphys {
            let kc = params.flow_coefficient(x);
            let dc = params.drainage_coefficient(x);
            for a in 0..4 {
                for b in 0..4 {
                    vals.push(kc * em.kp[a][b] + dc * em.kdp[a][b]);
                }
            }
        }
        Ok(self.pattern.assemble_symmetric(&vals))
    }

    /// Solves `A_ff p_f = -A_fc p_c`; returns the full pressure vector and
    /// the factorization of `A_ff` (reused by the adjoint solve).
    pub fn solve(&self, a: &CscMatrix) -> Result<(Vec<f64>, SpdFactor)> {
        let aff = self.ff.extract(a);
        let afc = self.fc.extract(a);
        let factor = self.solver.factor(&aff)?;
        let rhs: Vec<f64> = afc.mul_vec(&self.fixed_values).iter().map(|v| -v).collect();
        let pf = factor.solve(&rhs)?;
        Ok((self.partition.scatter_free(&pf, &self.prescribed), factor))
    }

    /// Relative residual `||A_ff p_f + A_fc p_c|| / ||A_fc p_c||` on the
    /// free DOFs (absolute when the load term vanishes).
    pub fn residual(&self, a: &CscMatrix, p: &[f64]) -> f64 {
        let aff = self.ff.extract(a);
        let afc = self.fc.extract(a);
        let load = afc.mul_vec(&self.fixed_values);
        let r = aff.mul_vec(&self.partition.gather_free(p));
        let num = r.iter().zip(&load).map(|(a, b)| (a + b) * (a + b)).sum::<f64>().sqrt();
        let den = load.iter().map(|v| v * v).sum::<f64>().sqrt();
        if den > 0.0 {
            num / den
        } else {
            num
        }
    }
}

fn flow_pattern(mesh: &Mesh) -> AssemblyPattern {
    let mut entries = Vec::with_capacity(16 * mesh.nel);
    for dofs in &mesh.pdofs {
        for &i in dofs {
            for &j in dofs {
                entries.push((i, j));
            }
        }
    }
    AssemblyPattern::new(mesh.nno, mesh.nno, &entries)
}

/// One-off assembly of the global flow matrix.
pub fn assemble_flow(mesh: &Mesh, xphys: &[f64], params: &MaterialParams) -> Result<CscMatrix> {
    if xphys.len() != mesh.nel {
        return Err(Error::invalid(format!(
            "density field has {} entries, mesh has {} elements",
            xphys.len(),
            mesh.nel
        )));
    }
    let em = ElementMatrices::reference(params.nu);
    let pattern = flow_pattern(mesh);
    let mut vals = Vec::with_capacity(pattern.len());
    for &x in xphys {
        let (kc, dc) = (params.flow_coefficient(x), params.drainage_coefficient(x));
        for a in 0..4 {
            for b in 0..4 {
                vals.push(kc * em.kp[a][b] + dc * em.kdp[a][b]);
            }
        }
    }
    Ok(pattern.assemble_symmetric(&vals))
}

/// One-off pressure solve for an already assembled `A`.
pub fn solve_pressure(a: &CscMatrix, bc: &PressureBC) -> Result<Vec<f64>> {
    let n = a.nrows;
    bc.validate(n)?;
    let partition = Partition::new(n, &bc.fixed_dofs)?;
    let ff = BlockMap::new(a, &partition.free, &partition.free).extract(a);
    let fc = BlockMap::new(a, &partition.free, &partition.fixed).extract(a);
    let prescribed = bc.prescribed(n);
    let pc: Vec<f64> = partition.fixed.iter().map(|&d| prescribed[d]).collect();
    let rhs: Vec<f64> = fc.mul_vec(&pc).iter().map(|v| -v).collect();
    let factor = SpdSolver::new(&ff, "flow matrix A_ff")?.factor(&ff)?;
    let pf = factor.solve(&rhs)?;
    Ok(partition.scatter_free(&pf, &prescribed))
}
