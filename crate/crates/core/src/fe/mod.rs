//! Displacement-driven Newton solution of the uniaxial extension test,
//! producing Gauss-point stress fields.
//!
//! Total Lagrangian formulation: internal forces from the second
//! Piola-Kirchhoff stress, consistent stiffness from the finite-difference
//! material tangent plus geometric stiffness, dense LU on the reduced
//! system (the default problem has 726 dofs).

pub mod mesh;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use thiserror::Error;

use crate::constitutive::{ConstitutiveError, DeformationState, TissueModel};
use crate::field::DegradationField;
pub use mesh::{build_unit_cube_mesh, HexMesh};

#[derive(Debug, Error)]
pub enum FeError {
    #[error("element {elem} inverted at a Gauss point (det F = {det})")]
    ElementInversion { elem: usize, det: f64 },
    #[error("Newton did not converge (smallest load step {min_step} reached)")]
    NonConvergence { min_step: f64 },
    #[error("degradation field shape {got:?} does not match the mesh Gauss grid {expected:?}")]
    MeshFieldMismatch { expected: [usize; 2], got: [usize; 2] },
    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),
    #[error("material-point root finding failed: {0}")]
    MaterialPoint(&'static str),
}

/// Boundary conditions of the extension test: top face displaced along E3,
/// bottom face fixed in E3, frictionless otherwise, with three pins removing
/// the in-plane rigid modes.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct BoundaryConditions {
    /// Prescribed top-face displacement (mm).
    pub extension: f64,
}

impl Default for BoundaryConditions {
    fn default() -> Self {
        Self { extension: 0.4 }
    }
}

/// Newton/load-stepping controls.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct SolverConfig {
    pub load_steps: usize,
    /// Relative residual drop per step.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub line_search: bool,
    /// Smallest admissible load increment as a fraction of full load.
    pub min_step_fraction: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            load_steps: 10,
            newton_tol: 1e-8,
            max_newton_iters: 25,
            line_search: true,
            min_step_fraction: 1.0 / 64.0,
        }
    }
}

/// Cauchy stress component sigma_33 on the in-plane Gauss grid, with the
/// convergence flag and per-step Newton iteration counts.
#[derive(Debug, Clone)]
pub struct StressField {
    pub sigma33: Option<Vec<f64>>,
    pub shape: [usize; 2],
    pub converged: bool,
    pub newton_iters: Vec<usize>,
}

/// Dirichlet constraints: `dof -> scale`, applied as `u[dof] = scale * load`.
fn constraints(mesh: &HexMesh, bc: &BoundaryConditions) -> Vec<(usize, f64)> {
    let mut list = Vec::new();
    let ext3 = mesh.extent[2];
    let tol = 1e-12;
    for (n, x) in mesh.nodes.iter().enumerate() {
        if x[2].abs() < tol {
            list.push((3 * n + 2, 0.0));
        } else if (x[2] - ext3).abs() < tol {
            list.push((3 * n + 2, bc.extension));
        }
    }
    // pins: node at the origin in E1 and E2, plus one node separated along
    // E2 in E1 (kills rotation about E3) — all compatible with homogeneous
    // lateral contraction about the origin
    let origin = mesh
        .nodes
        .iter()
        .position(|x| x[0].abs() < tol && x[1].abs() < tol && x[2].abs() < tol)
        .expect("mesh has an origin node");
    let e2_node = mesh
        .nodes
        .iter()
        .position(|x| x[0].abs() < tol && (x[1] - mesh.extent[1]).abs() < tol && x[2].abs() < tol)
        .expect("mesh has an E2 corner node");
    list.push((3 * origin, 0.0));
    list.push((3 * origin + 1, 0.0));
    list.push((3 * e2_node, 0.0));
    list
}

/// Internal force vector and (optionally) consistent stiffness at nodal
/// displacements `u`. `xi_at` maps (element, gauss point) to the local
/// degradation value.
pub fn assemble_residual_and_stiffness(
    mesh: &HexMesh,
    model: &TissueModel,
    xi_at: &dyn Fn(usize, usize) -> f64,
    u: &DVector<f64>,
    tangent_step: f64,
    want_stiffness: bool,
) -> Result<(DVector<f64>, Option<DMatrix<f64>>), FeError> {
    let ndof = mesh.n_dofs();
    let mut residual = DVector::zeros(ndof);
    let mut stiffness = if want_stiffness {
        Some(DMatrix::zeros(ndof, ndof))
    } else {
        None
    };

    for (e, conn) in mesh.elems.iter().enumerate() {
        let mut fe = [0.0f64; 24];
        let mut ke = [[0.0f64; 24]; 24];
        for (gp, xi_loc) in mesh::gauss_points().enumerate() {
            let (dndx, detj) = mesh.jacobian(e, xi_loc);
            // F = I + sum_a u_a (x) grad N_a
            let mut f = Matrix3::identity();
            for (a, &node) in conn.iter().enumerate() {
                for i in 0..3 {
                    let ui = u[3 * node + i];
                    for j in 0..3 {
                        f[(i, j)] += ui * dndx[a][j];
                    }
                }
            }
            let det_f = f.determinant();
            if det_f <= 0.0 {
                return Err(FeError::ElementInversion { elem: e, det: det_f });
            }
            let state = DeformationState::new(f)?;
            let xi_val = xi_at(e, gp);
            let s = model.second_pk_from_c(&state.c, xi_val)?;
            let p = f * s; // first Piola-Kirchhoff

            for a in 0..8 {
                let g = Vector3::new(dndx[a][0], dndx[a][1], dndx[a][2]);
                let fa = p * g * detj;
                for i in 0..3 {
                    fe[3 * a + i] += fa[i];
                }
            }

            if want_stiffness {
                let d = model.material_tangent(&state, xi_val, tangent_step)?;
                // strain-displacement matrix handling engineering shears
                let mut b = [[0.0f64; 24]; 6];
                for a in 0..8 {
                    let g = dndx[a];
                    for j in 0..3 {
                        let col = 3 * a + j;
                        b[0][col] = f[(j, 0)] * g[0];
                        b[1][col] = f[(j, 1)] * g[1];
                        b[2][col] = f[(j, 2)] * g[2];
                        b[3][col] = f[(j, 1)] * g[2] + f[(j, 2)] * g[1];
                        b[4][col] = f[(j, 0)] * g[2] + f[(j, 2)] * g[0];
                        b[5][col] = f[(j, 0)] * g[1] + f[(j, 1)] * g[0];
                    }
                }
                // material part: B^T D B
                let mut db = [[0.0f64; 24]; 6];
                for r in 0..6 {
                    for c in 0..24 {
                        let mut acc = 0.0;
                        for k in 0..6 {
                            acc += d[(r, k)] * b[k][c];
                        }
                        db[r][c] = acc;
                    }
                }
                for r in 0..24 {
                    for c in 0..24 {
                        let mut acc = 0.0;
                        for k in 0..6 {
                            acc += b[k][r] * db[k][c];
                        }
                        ke[r][c] += acc * detj;
                    }
                }
                // geometric part: (grad N_a . S grad N_b) delta_ij
                for a in 0..8 {
                    let ga = Vector3::new(dndx[a][0], dndx[a][1], dndx[a][2]);
                    let sga = s * ga;
                    for bnode in 0..8 {
                        let gb = Vector3::new(dndx[bnode][0], dndx[bnode][1], dndx[bnode][2]);
                        let v = sga.dot(&gb) * detj;
                        for i in 0..3 {
                            ke[3 * a + i][3 * bnode + i] += v;
                        }
                    }
                }
            }
        }
        for (a, &na) in conn.iter().enumerate() {
            for i in 0..3 {
                residual[3 * na + i] += fe[3 * a + i];
            }
        }
        if let Some(k) = stiffness.as_mut() {
            for (a, &na) in conn.iter().enumerate() {
                for (bnode, &nb) in conn.iter().enumerate() {
                    for i in 0..3 {
                        for j in 0..3 {
                            k[(3 * na + i, 3 * nb + j)] += ke[3 * a + i][3 * bnode + j];
                        }
                    }
                }
            }
        }
    }
    Ok((residual, stiffness))
}

/// Total strain energy at nodal displacements (test oracle for the residual).
pub fn total_energy(
    mesh: &HexMesh,
    model: &TissueModel,
    xi_at: &dyn Fn(usize, usize) -> f64,
    u: &DVector<f64>,
) -> Result<f64, FeError> {
    let mut total = 0.0;
    for (e, conn) in mesh.elems.iter().enumerate() {
        for (gp, xi_loc) in mesh::gauss_points().enumerate() {
            let (dndx, detj) = mesh.jacobian(e, xi_loc);
            let mut f = Matrix3::identity();
            for (a, &node) in conn.iter().enumerate() {
                for i in 0..3 {
                    for j in 0..3 {
                        f[(i, j)] += u[3 * node + i] * dndx[a][j];
                    }
                }
            }
            let state = DeformationState::new(f)?;
            total += model.strain_energy(&state, xi_at(e, gp))? * detj;
        }
    }
    Ok(total)
}

struct ReducedSystem {
    free: Vec<usize>,
    fixed: Vec<(usize, f64)>,
}

impl ReducedSystem {
    fn new(ndof: usize, fixed: Vec<(usize, f64)>) -> Self {
        let mut is_fixed = vec![false; ndof];
        for &(d, _) in &fixed {
            is_fixed[d] = true;
        }
        let free = (0..ndof).filter(|&d| !is_fixed[d]).collect();
        Self { free, fixed }
    }

    fn apply(&self, u: &mut DVector<f64>, load: f64) {
        for &(d, scale) in &self.fixed {
            u[d] = scale * load;
        }
    }

    fn reduce_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.free.len(), self.free.iter().map(|&d| v[d]))
    }

    fn reduce_mat(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.free.len();
        DMatrix::from_fn(n, n, |r, c| m[(self.free[r], self.free[c])])
    }

    fn scatter_add(&self, u: &mut DVector<f64>, delta: &DVector<f64>, scale: f64) {
        for (r, &d) in self.free.iter().enumerate() {
            u[d] += scale * delta[r];
        }
    }
}

const TANGENT_FD_STEP: f64 = 1e-6;

fn xi_lookup<'a>(
    mesh: &'a HexMesh,
    field: &'a DegradationField,
) -> impl Fn(usize, usize) -> f64 + 'a {
    move |e, gp| field.values()[mesh.inplane_gauss_index(e, mesh::gauss_bits(gp))]
}

/// Newton solve of one load level starting from `u`; returns the residual
/// norm history (one entry per assembled iterate, including the converged
/// one).
fn newton_at_load(
    mesh: &HexMesh,
    model: &TissueModel,
    xi_at: &dyn Fn(usize, usize) -> f64,
    sys: &ReducedSystem,
    u: &mut DVector<f64>,
    cfg: &SolverConfig,
) -> Result<Vec<f64>, FeError> {
    let mut history = Vec::new();
    let mut r_norm0 = None;
    for _ in 0..cfg.max_newton_iters {
        let (r, k) =
            assemble_residual_and_stiffness(mesh, model, xi_at, u, TANGENT_FD_STEP, true)?;
        let rf = sys.reduce_vec(&r);
        let norm = rf.norm();
        history.push(norm);
        let r0 = *r_norm0.get_or_insert(norm);
        if norm <= (cfg.newton_tol * r0).max(1e-12) {
            return Ok(history);
        }
        let kf = sys.reduce_mat(&k.expect("stiffness requested"));
        let delta = kf
            .lu()
            .solve(&rf)
            .ok_or(FeError::NonConvergence { min_step: 0.0 })?;
        if cfg.line_search {
            // backtrack if the full step increases the residual
            let mut scale = 1.0;
            let mut best = f64::INFINITY;
            for _ in 0..5 {
                let mut trial = u.clone();
                sys.scatter_add(&mut trial, &delta, -scale);
                let ok = assemble_residual_and_stiffness(
                    mesh, model, xi_at, &trial, TANGENT_FD_STEP, false,
                );
                if let Ok((rt, _)) = ok {
                    best = sys.reduce_vec(&rt).norm();
                    if best < norm || best <= (cfg.newton_tol * r0).max(1e-12) {
                        break;
                    }
                }
                scale *= 0.5;
            }
            let _ = best;
            sys.scatter_add(u, &delta, -scale);
        } else {
            sys.scatter_add(u, &delta, -1.0);
        }
    }
    // final residual check after the last update
    let (r, _) = assemble_residual_and_stiffness(mesh, model, xi_at, u, TANGENT_FD_STEP, false)?;
    let norm = sys.reduce_vec(&r).norm();
    if let Some(r0) = r_norm0 {
        if norm <= (cfg.newton_tol * r0).max(1e-12) {
            history.push(norm);
            return Ok(history);
        }
    }
    Err(FeError::NonConvergence { min_step: 0.0 })
}

/// Converged nodal displacements of the extension test, or an error if load
/// stepping with halving fails. Also returns the Newton residual-norm
/// history of each converged load step.
pub fn solve_displacements(
    mesh: &HexMesh,
    bc: &BoundaryConditions,
    model: &TissueModel,
    field: &DegradationField,
    cfg: &SolverConfig,
) -> Result<(DVector<f64>, Vec<Vec<f64>>), FeError> {
    if field.shape() != mesh.inplane_shape() {
        return Err(FeError::MeshFieldMismatch {
            expected: mesh.inplane_shape(),
            got: field.shape(),
        });
    }
    let xi_at = xi_lookup(mesh, field);
    let sys = ReducedSystem::new(mesh.n_dofs(), constraints(mesh, bc));
    let mut u = DVector::zeros(mesh.n_dofs());
    let mut histories = Vec::new();

    let mut load = 0.0f64;
    let mut step = 1.0 / cfg.load_steps as f64;
    let mut u_last = u.clone();
    while load < 1.0 - 1e-12 {
        let target = (load + step).min(1.0);
        sys.apply(&mut u, target);
        match newton_at_load(mesh, model, &xi_at, &sys, &mut u, cfg) {
            Ok(h) => {
                histories.push(h);
                load = target;
                u_last = u.clone();
            }
            Err(FeError::MeshFieldMismatch { .. }) => unreachable!(),
            Err(_) => {
                step *= 0.5;
                if step < cfg.min_step_fraction / cfg.load_steps as f64 {
                    return Err(FeError::NonConvergence { min_step: step });
                }
                u = u_last.clone();
            }
        }
    }
    Ok((u, histories))
}

/// Cauchy sigma_33 at every in-plane Gauss site (the two E1 layers are
/// averaged), for converged displacements.
pub fn stress_field_from_displacements(
    mesh: &HexMesh,
    model: &TissueModel,
    field: &DegradationField,
    u: &DVector<f64>,
) -> Result<Vec<f64>, FeError> {
    let shape = mesh.inplane_shape();
    let mut sums = vec![0.0f64; shape[0] * shape[1]];
    let mut counts = vec![0usize; shape[0] * shape[1]];
    let xi_at = xi_lookup(mesh, field);
    for (e, conn) in mesh.elems.iter().enumerate() {
        for (gp, xi_loc) in mesh::gauss_points().enumerate() {
            let (dndx, _) = mesh.jacobian(e, xi_loc);
            let mut f = Matrix3::identity();
            for (a, &node) in conn.iter().enumerate() {
                for i in 0..3 {
                    for j in 0..3 {
                        f[(i, j)] += u[3 * node + i] * dndx[a][j];
                    }
                }
            }
            let state = DeformationState::new(f)?;
            let sigma = model.cauchy_stress(&state, xi_at(e, gp))?;
            let p = mesh.inplane_gauss_index(e, mesh::gauss_bits(gp));
            sums[p] += sigma[(2, 2)];
            counts[p] += 1;
        }
    }
    Ok(sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect())
}

/// Full displacement-driven solve. Non-convergence is reported in the flag,
/// not as an error; dataset generation records and skips such samples.
pub fn solve_uniaxial(
    mesh: &HexMesh,
    bc: &BoundaryConditions,
    model: &TissueModel,
    field: &DegradationField,
    cfg: &SolverConfig,
) -> Result<StressField, FeError> {
    match solve_displacements(mesh, bc, model, field, cfg) {
        Ok((u, histories)) => {
            let sigma33 = stress_field_from_displacements(mesh, model, field, &u)?;
            Ok(StressField {
                sigma33: Some(sigma33),
                shape: mesh.inplane_shape(),
                converged: true,
                newton_iters: histories.iter().map(|h| h.len().saturating_sub(1)).collect(),
            })
        }
        Err(FeError::MeshFieldMismatch { expected, got }) => {
            Err(FeError::MeshFieldMismatch { expected, got })
        }
        Err(_) => Ok(StressField {
            sigma33: None,
            shape: mesh.inplane_shape(),
            converged: false,
            newton_iters: Vec::new(),
        }),
    }
}

/// Maximum |J - 1| over all Gauss points of a converged solution.
pub fn check_incompressibility(
    mesh: &HexMesh,
    u: &DVector<f64>,
) -> Result<f64, FeError> {
    let mut worst = 0.0f64;
    for (e, conn) in mesh.elems.iter().enumerate() {
        for xi_loc in mesh::gauss_points() {
            let (dndx, _) = mesh.jacobian(e, xi_loc);
            let mut f = Matrix3::identity();
            for (a, &node) in conn.iter().enumerate() {
                for i in 0..3 {
                    for j in 0..3 {
                        f[(i, j)] += u[3 * node + i] * dndx[a][j];
                    }
                }
            }
            let det = f.determinant();
            if det <= 0.0 {
                return Err(FeError::ElementInversion { elem: e, det });
            }
            worst = worst.max((det - 1.0).abs());
        }
    }
    Ok(worst)
}

/// Semi-analytic homogeneous uniaxial state: the deformation gradient
/// `F = [[l1, a12, a13], [0, l2, a23], [0, 0, stretch]]` (upper-triangular
/// rotation gauge) with `sigma_11 = sigma_22 = sigma_12 = sigma_13 =
/// sigma_23 = 0`, found by damped Newton with a finite-difference Jacobian.
/// Returns `(F, sigma_33)`.
pub fn homogeneous_uniaxial_state(
    model: &TissueModel,
    xi: f64,
    stretch: f64,
) -> Result<(Matrix3<f64>, f64), FeError> {
    let build_f = |v: &[f64; 5]| {
        Matrix3::new(v[0], v[2], v[3], 0.0, v[1], v[4], 0.0, 0.0, stretch)
    };
    // residual: off-axis stress components
    let eval = |v: &[f64; 5]| -> Result<[f64; 5], FeError> {
        let f = build_f(v);
        let state = DeformationState::new(f).map_err(FeError::from)?;
        let s = model.cauchy_stress(&state, xi)?;
        Ok([s[(0, 0)], s[(1, 1)], s[(0, 1)], s[(0, 2)], s[(1, 2)]])
    };
    let mut v = [1.0 / stretch.sqrt(), 1.0 / stretch.sqrt(), 0.0, 0.0, 0.0];
    for _ in 0..60 {
        let r = eval(&v)?;
        let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-10 * model.params.mu_ground {
            let f = build_f(&v);
            let state = DeformationState::new(f).map_err(FeError::from)?;
            let s33 = model.cauchy_stress(&state, xi)?[(2, 2)];
            return Ok((f, s33));
        }
        // FD Jacobian
        let mut jac = [[0.0f64; 5]; 5];
        for c in 0..5 {
            let h = 1e-7 * v[c].abs().max(1.0);
            let mut vp = v;
            let mut vm = v;
            vp[c] += h;
            vm[c] -= h;
            let rp = eval(&vp)?;
            let rm = eval(&vm)?;
            for rrow in 0..5 {
                jac[rrow][c] = (rp[rrow] - rm[rrow]) / (2.0 * h);
            }
        }
        let jm = nalgebra::SMatrix::<f64, 5, 5>::from_fn(|i, j| jac[i][j]);
        let rv = nalgebra::SVector::<f64, 5>::from_row_slice(&r);
        let delta = jm
            .lu()
            .solve(&rv)
            .ok_or(FeError::MaterialPoint("singular material-point Jacobian"))?;
        // damped update, keeping lateral stretches positive
        let mut scale = 1.0;
        loop {
            let mut trial = v;
            for i in 0..5 {
                trial[i] -= scale * delta[i];
            }
            if trial[0] > 0.05 && trial[1] > 0.05 {
                v = trial;
                break;
            }
            scale *= 0.5;
            if scale < 1e-4 {
                return Err(FeError::MaterialPoint("step collapse"));
            }
        }
    }
    Err(FeError::MaterialPoint("no convergence in 60 iterations"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::MaterialParams;
    use crate::field::DegradationField;
    use approx::assert_relative_eq;

    fn toy_model() -> TissueModel {
        TissueModel::new(MaterialParams::default(), 40).unwrap()
    }

    fn toy_mesh() -> HexMesh {
        HexMesh::structured([1, 2, 2], [1.0, 1.0, 1.0])
    }

    fn constant_field(shape: [usize; 2], v: f64) -> DegradationField {
        DegradationField::new(vec![v; shape[0] * shape[1]], shape, vec![]).unwrap()
    }

    #[test]
    fn zero_displacement_zero_residual() {
        let mesh = toy_mesh();
        let model = toy_model();
        let u = DVector::zeros(mesh.n_dofs());
        let (r, _) =
            assemble_residual_and_stiffness(&mesh, &model, &|_, _| 0.2, &u, 1e-6, false).unwrap();
        assert!(r.norm() < 1e-12);
    }

    #[test]
    fn residual_matches_energy_gradient() {
        let mesh = toy_mesh();
        let model = toy_model();
        let xi = |_: usize, _: usize| 0.3;
        let n = mesh.n_dofs();
        let mut rng = crate::rng::stream_from_seed(23);
        use rand::Rng;
        let u = DVector::from_fn(n, |_, _| 0.02 * (rng.random::<f64>() - 0.5));
        let (r, _) = assemble_residual_and_stiffness(&mesh, &model, &xi, &u, 1e-6, false).unwrap();
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        // probe a subset of dofs
        for d in (0..n).step_by(7) {
            let mut up = u.clone();
            let mut um = u.clone();
            up[d] += h;
            um[d] -= h;
            let ep = total_energy(&mesh, &model, &xi, &up).unwrap();
            let em = total_energy(&mesh, &model, &xi, &um).unwrap();
            let fd = (ep - em) / (2.0 * h);
            let scale = r.norm().max(1e-10);
            worst = worst.max((r[d] - fd).abs() / scale);
        }
        assert!(worst < 1e-4, "residual vs energy gradient: {worst}");
    }

    #[test]
    fn stiffness_is_symmetric_and_positive_definite_at_small_load() {
        let mesh = toy_mesh();
        let model = toy_model();
        let bc = BoundaryConditions { extension: 0.01 };
        let sys = ReducedSystem::new(mesh.n_dofs(), constraints(&mesh, &bc));
        let mut u = DVector::zeros(mesh.n_dofs());
        sys.apply(&mut u, 1.0);
        let xi = |_: usize, _: usize| 0.2;
        newton_at_load(&mesh, &model, &xi, &sys, &mut u, &SolverConfig::default()).unwrap();
        let (_, k) = assemble_residual_and_stiffness(&mesh, &model, &xi, &u, 1e-6, true).unwrap();
        let kf = sys.reduce_mat(&k.unwrap());
        let asym = (&kf - kf.transpose()).norm() / kf.norm();
        assert!(asym < 1e-6, "stiffness asymmetry {asym}");
        let eig = kf.symmetric_eigen();
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min > 0.0, "stiffness not PD: min eigenvalue {min}");
    }

    #[test]
    fn homogeneous_solve_on_toy_mesh_matches_material_point() {
        let mesh = toy_mesh();
        let model = toy_model();
        let bc = BoundaryConditions::default();
        let cfg = SolverConfig::default();
        let field = constant_field(mesh.inplane_shape(), 0.25);
        let result = solve_uniaxial(&mesh, &bc, &model, &field, &cfg).unwrap();
        assert!(result.converged);
        let sigma = result.sigma33.unwrap();
        let mean: f64 = sigma.iter().sum::<f64>() / sigma.len() as f64;
        let spread = sigma
            .iter()
            .map(|s| (s - mean).abs())
            .fold(0.0f64, f64::max)
            / mean.abs();
        assert!(spread < 1e-6, "spatial spread {spread}");
        let (_, s33) = homogeneous_uniaxial_state(&model, 0.25, 1.4).unwrap();
        assert_relative_eq!(mean, s33, max_relative = 1e-2);
    }

    #[test]
    fn soft_inclusion_lowers_local_stress() {
        let mesh = toy_mesh();
        let model = toy_model();
        let bc = BoundaryConditions::default();
        let cfg = SolverConfig::default();
        // one strongly degraded quadrant
        let shape = mesh.inplane_shape();
        let mut vals = vec![0.05; shape[0] * shape[1]];
        for i2 in 0..2 {
            for i3 in 0..2 {
                vals[i2 * shape[1] + i3] = 0.95;
            }
        }
        let field = DegradationField::new(vals, shape, vec![]).unwrap();
        let result = solve_uniaxial(&mesh, &bc, &model, &field, &cfg).unwrap();
        assert!(result.converged);
        let sigma = result.sigma33.unwrap();
        let mut inclusion_min = f64::INFINITY;
        for i2 in 0..2 {
            for i3 in 0..2 {
                inclusion_min = inclusion_min.min(sigma[i2 * shape[1] + i3]);
            }
        }
        let mut far = Vec::new();
        for i2 in 2..shape[0] {
            for i3 in 2..shape[1] {
                far.push(sigma[i2 * shape[1] + i3]);
            }
        }
        let far_mean: f64 = far.iter().sum::<f64>() / far.len() as f64;
        assert!(
            inclusion_min < far_mean,
            "inclusion {inclusion_min} vs far field {far_mean}"
        );
    }

    #[test]
    fn mesh_field_mismatch_detected() {
        let mesh = toy_mesh();
        let model = toy_model();
        let field = constant_field([20, 20], 0.1);
        match solve_uniaxial(
            &mesh,
            &BoundaryConditions::default(),
            &model,
            &field,
            &SolverConfig::default(),
        ) {
            Err(FeError::MeshFieldMismatch { .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn undeformed_incompressibility_is_exact() {
        let mesh = toy_mesh();
        let u = DVector::zeros(mesh.n_dofs());
        assert_eq!(check_incompressibility(&mesh, &u).unwrap(), 0.0);
    }

    #[test]
    fn reproducible_solution() {
        let mesh = toy_mesh();
        let model = toy_model();
        let field = constant_field(mesh.inplane_shape(), 0.4);
        let run = || {
            solve_uniaxial(
                &mesh,
                &BoundaryConditions::default(),
                &model,
                &field,
                &SolverConfig::default(),
            )
            .unwrap()
            .sigma33
            .unwrap()
        };
        let a = run();
        let b = run();
        let bits_a: Vec<u64> = a.iter().map(|v| v.to_bits()).collect();
        let bits_b: Vec<u64> = b.iter().map(|v| v.to_bits()).collect();
        assert_eq!(bits_a, bits_b);
    }
}
