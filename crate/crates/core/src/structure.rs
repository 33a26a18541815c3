//! Pressure-to-force transformation and SIMP plane-stress elasticity.

use serde::{Deserialize, Serialize};

use crate::element::ElementMatrices;
use crate::error::{Error, Result};
use crate::linalg::{AssemblyPattern, BlockMap, CscMatrix, Partition, SpdFactor, SpdSolver};
use crate::mesh::Mesh;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralBC {
    pub fixed_udofs: Vec<usize>,
}

impl StructuralBC {
    /// Sorts and removes duplicates.
    pub fn new(mut fixed_udofs: Vec<usize>) -> Self {
        fixed_udofs.sort_unstable();
        fixed_udofs.dedup();
        StructuralBC { fixed_udofs }
    }
}

/// Global `T` (`2 nno x nno`) with `F = -T p`. Design independent.
pub fn assemble_transformation(mesh: &Mesh, em: &ElementMatrices) -> CscMatrix {
    let mut entries = Vec::with_capacity(32 * mesh.nel);
    let mut vals = Vec::with_capacity(32 * mesh.nel);
    for (u, p) in mesh.udofs.iter().zip(&mesh.pdofs) {
        for a in 0..8 {
            for b in 0..4 {
                entries.push((u[a], p[b]));
                vals.push(em.te[a][b]);
            }
        }
    }
    AssemblyPattern::new(mesh.ndof_u(), mesh.nno, &entries).assemble(&vals)
}

/// Consistent nodal forces `F = -T p`.
pub fn pressure_forces(t: &CscMatrix, p: &[f64]) -> Vec<f64> {
    t.mul_vec(p).into_iter().map(|v| -v).collect()
}

/// Net force `(sum F_x, sum F_y)`.
pub fn net_force(f: &[f64]) -> (f64, f64) {
    let fx = f.iter().step_by(2).sum();
    let fy = f.iter().skip(1).step_by(2).sum();
    (fx, fy)
}

fn stiffness_pattern(mesh: &Mesh) -> AssemblyPattern {
    let mut entries = Vec::with_capacity(64 * mesh.nel);
    for dofs in &mesh.udofs {
        for &i in dofs {
            for &j in dofs {
                entries.push((i, j));
            }
        }
    }
    AssemblyPattern::new(mesh.ndof_u(), mesh.ndof_u(), &entries)
}

fn stiffness_values(em: &ElementMatrices, moduli: &[f64]) -> Vec<f64> {
    let mut vals = Vec::with_capacity(64 * moduli.len());
    for &e in moduli {
        for row in &em.ke {
            vals.extend(row.iter().map(|k| e * k));
        }
    }
    vals
}

/// One-off `K = sum_e E_e ke`, symmetrized.
pub fn assemble_stiffness(mesh: &Mesh, em: &ElementMatrices, moduli: &[f64]) -> Result<CscMatrix> {
    check_moduli(mesh.nel, moduli)?;
    Ok(stiffness_pattern(mesh).assemble_symmetric(&stiffness_values(em, moduli)))
}

fn check_moduli(nel: usize, moduli: &[f64]) -> Result<()> {
    if moduli.len() != nel {
        return Err(Error::invalid(format!(
            "{} moduli given for {nel} elements",
            moduli.len()
        )));
    }
    if let Some(e) = moduli.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
        return Err(Error::invalid(format!("element modulus {e} must be positive")));
    }
    Ok(())
}

/// Per-problem elasticity machinery with cached pattern and analysis.
#[derive(Debug, Clone)]
pub struct ElasticSolver {
    pub partition: Partition,
    nel: usize,
    pattern: AssemblyPattern,
    ff: BlockMap,
    solver: SpdSolver,
}

impl ElasticSolver {
    pub fn new(mesh: &Mesh, bc: &StructuralBC) -> Result<Self> {
        let partition = Partition::new(mesh.ndof_u(), &bc.fixed_udofs)?;
        let pattern = stiffness_pattern(mesh);
        let template = pattern.assemble(&vec![1.0; pattern.len()]);
        let ff = BlockMap::new(&template, &partition.free, &partition.free);
        let solver = SpdSolver::new(&ff.extract(&template), "stiffness matrix K_ff")?;
        Ok(ElasticSolver {
            partition,
            nel: mesh.nel,
            pattern,
            ff,
            solver,
        })
    }

    pub fn assemble(&self, em: &ElementMatrices, moduli: &[f64]) -> Result<CscMatrix> {
        check_moduli(self.nel, moduli)?;
        Ok(self.pattern.assemble_symmetric(&stiffness_values(em, moduli)))
    }

    /// `u_f = K_ff^-1 f_f`, zero on fixed DOFs.
    pub fn solve(&self, k: &CscMatrix, f: &[f64]) -> Result<Vec<f64>> {
        let factor: SpdFactor = self.solver.factor(&self.ff.extract(k))?;
        let uf = factor.solve(&self.partition.gather_free(f))?;
        Ok(self.partition.scatter_free(&uf, &vec![0.0; f.len()]))
    }
}

/// One-off displacement solve.
pub fn solve_displacement(k: &CscMatrix, f: &[f64], bc: &StructuralBC) -> Result<Vec<f64>> {
    if f.len() != k.nrows {
        return Err(Error::invalid("force vector does not match the stiffness matrix"));
    }
    let partition = Partition::new(k.nrows, &bc.fixed_udofs)?;
    let kff = BlockMap::new(k, &partition.free, &partition.free).extract(k);
    let factor = SpdSolver::new(&kff, "stiffness matrix K_ff")?.factor(&kff)?;
    let uf = factor.solve(&partition.gather_free(f))?;
    Ok(partition.scatter_free(&uf, &vec![0.0; f.len()]))
}

/// `u^T K u`.
pub fn compliance(u: &[f64], k: &CscMatrix) -> f64 {
    k.mul_vec(u).iter().zip(u).map(|(a, b)| a * b).sum()
}

/// Element strain energies `u_e^T ke u_e` at unit modulus.
pub fn element_energies(mesh: &Mesh, em: &ElementMatrices, u: &[f64]) -> Vec<f64> {
    mesh.udofs
        .iter()
        .map(|dofs| {
            let ue: Vec<f64> = dofs.iter().map(|&d| u[d]).collect();
            let mut s = 0.0;
            for a in 0..8 {
                let row: f64 = (0..8).map(|b| em.ke[a][b] * ue[b]).sum();
                s += ue[a] * row;
            }
            s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_element_transformation_is_te() {
        let mesh = Mesh::new(1, 1).unwrap();
        let em = ElementMatrices::reference(0.3);
        let t = assemble_transformation(&mesh, &em);
        for a in 0..8 {
            for b in 0..4 {
                assert_eq!(t.get(mesh.udofs[0][a], mesh.pdofs[0][b]), em.te[a][b]);
            }
        }
    }

    #[test]
    fn uniform_pressure_is_self_equilibrated() {
        let mesh = Mesh::new(7, 4).unwrap();
        let em = ElementMatrices::reference(0.3);
        let t = assemble_transformation(&mesh, &em);
        let f = pressure_forces(&t, &vec![2.5; mesh.nno]);
        let (fx, fy) = net_force(&f);
        assert!(fx.abs() < 1e-12 && fy.abs() < 1e-12);
    }

    #[test]
    fn rigid_translation_in_null_space() {
        let mesh = Mesh::new(3, 2).unwrap();
        let em = ElementMatrices::reference(0.3);
        let moduli: Vec<f64> = (0..mesh.nel).map(|e| 1.0 + e as f64).collect();
        let k = assemble_stiffness(&mesh, &em, &moduli).unwrap();
        let tx: Vec<f64> = (0..mesh.ndof_u()).map(|d| ((d + 1) % 2) as f64).collect();
        let r = k.mul_vec(&tx);
        assert!(r.iter().all(|v| v.abs() < 1e-12 * k.norm1()));
    }

    #[test]
    fn zero_force_zero_displacement() {
        let mesh = Mesh::new(4, 2).unwrap();
        let em = ElementMatrices::reference(0.3);
        let bc = StructuralBC::new(vec![0, 1, 2 * mesh.bnode[4], 2 * mesh.bnode[4] + 1]);
        let s = ElasticSolver::new(&mesh, &bc).unwrap();
        let k = s.assemble(&em, &vec![1.0; mesh.nel]).unwrap();
        let u = s.solve(&k, &vec![0.0; mesh.ndof_u()]).unwrap();
        assert!(u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn insufficient_supports_fail() {
        let mesh = Mesh::new(2, 2).unwrap();
        let em = ElementMatrices::reference(0.3);
        let k = assemble_stiffness(&mesh, &em, &vec![1.0; mesh.nel]).unwrap();
        // one pinned node leaves the rotation free
        let bc = StructuralBC::new(vec![0, 1]);
        let f = vec![0.0; mesh.ndof_u()];
        assert!(matches!(
            solve_displacement(&k, &f, &bc),
            Err(Error::SolverFailure { .. })
        ));
    }

    #[test]
    fn rejects_nonpositive_moduli() {
        let mesh = Mesh::new(2, 1).unwrap();
        let em = ElementMatrices::reference(0.3);
        assert!(assemble_stiffness(&mesh, &em, &[1.0, 0.0]).is_err());
        assert!(assemble_stiffness(&mesh, &em, &[1.0]).is_err());
    }
}
