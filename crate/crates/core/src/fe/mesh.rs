//! Structured hexahedral meshes of a box domain, with 8-node trilinear
//! elements and a 2x2x2 Gauss rule.

use crate::gauss::GAUSS2_ABSCISSA;

/// Structured hexahedral mesh. Axes are ordered (E1, E2, E3); the extension
/// test loads along E3 and the degradation field varies in the (E2, E3)
/// plane.
#[derive(Debug, Clone)]
pub struct HexMesh {
    pub nodes: Vec<[f64; 3]>,
    pub elems: Vec<[usize; 8]>,
    pub n_elems: [usize; 3],
    pub extent: [f64; 3],
}

/// Local corner coordinates of the trilinear hexahedron (VTK ordering).
pub const HEX_CORNERS: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

impl HexMesh {
    /// Structured box mesh with `n[i]` elements along each axis.
    pub fn structured(n: [usize; 3], extent: [f64; 3]) -> Self {
        let nn = [n[0] + 1, n[1] + 1, n[2] + 1];
        let mut nodes = Vec::with_capacity(nn[0] * nn[1] * nn[2]);
        for i1 in 0..nn[0] {
            for i2 in 0..nn[1] {
                for i3 in 0..nn[2] {
                    nodes.push([
                        extent[0] * i1 as f64 / n[0] as f64,
                        extent[1] * i2 as f64 / n[1] as f64,
                        extent[2] * i3 as f64 / n[2] as f64,
                    ]);
                }
            }
        }
        let node_id = |i1: usize, i2: usize, i3: usize| (i1 * nn[1] + i2) * nn[2] + i3;
        let mut elems = Vec::with_capacity(n[0] * n[1] * n[2]);
        for e1 in 0..n[0] {
            for e2 in 0..n[1] {
                for e3 in 0..n[2] {
                    // VTK corner order with local axes (x, y, z) = (E1, E2, E3)
                    elems.push([
                        node_id(e1, e2, e3),
                        node_id(e1 + 1, e2, e3),
                        node_id(e1 + 1, e2 + 1, e3),
                        node_id(e1, e2 + 1, e3),
                        node_id(e1, e2, e3 + 1),
                        node_id(e1 + 1, e2, e3 + 1),
                        node_id(e1 + 1, e2 + 1, e3 + 1),
                        node_id(e1, e2 + 1, e3 + 1),
                    ]);
                }
            }
        }
        Self {
            nodes,
            elems,
            n_elems: n,
            extent,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_dofs(&self) -> usize {
        3 * self.nodes.len()
    }

    /// Element index from its grid position.
    pub fn elem_id(&self, e1: usize, e2: usize, e3: usize) -> usize {
        (e1 * self.n_elems[1] + e2) * self.n_elems[2] + e3
    }

    /// Grid position of an element.
    pub fn elem_pos(&self, e: usize) -> [usize; 3] {
        let n23 = self.n_elems[1] * self.n_elems[2];
        [e / n23, (e / self.n_elems[2]) % self.n_elems[1], e % self.n_elems[2]]
    }

    /// In-plane Gauss index `(i2, i3) = (2 e2 + g2, 2 e3 + g3)` flattened as
    /// `i2 * (2 n3) + i3`; both E1 Gauss layers of an element share it.
    pub fn inplane_gauss_index(&self, e: usize, g: [usize; 3]) -> usize {
        let pos = self.elem_pos(e);
        let i2 = 2 * pos[1] + g[1];
        let i3 = 2 * pos[2] + g[2];
        i2 * (2 * self.n_elems[2]) + i3
    }

    /// Shape of the in-plane Gauss grid.
    pub fn inplane_shape(&self) -> [usize; 2] {
        [2 * self.n_elems[1], 2 * self.n_elems[2]]
    }

    /// Total volume by Gauss quadrature of the undeformed mesh.
    pub fn volume_by_quadrature(&self) -> f64 {
        let mut total = 0.0;
        for e in 0..self.elems.len() {
            for gp in gauss_points() {
                let (_, detj) = self.jacobian(e, gp);
                total += detj;
            }
        }
        total
    }

    /// Jacobian inverse-transpose columns (dN/dX per node) and det J at a
    /// local Gauss coordinate.
    pub fn jacobian(&self, e: usize, xi: [f64; 3]) -> ([[f64; 3]; 8], f64) {
        let mut jac = [[0.0f64; 3]; 3];
        let grads = shape_gradients(xi);
        for a in 0..8 {
            let x = self.nodes[self.elems[e][a]];
            for i in 0..3 {
                for j in 0..3 {
                    jac[i][j] += x[i] * grads[a][j];
                }
            }
        }
        let det = jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1])
            - jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0])
            + jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]);
        let inv = invert3(&jac, det);
        let mut dndx = [[0.0f64; 3]; 8];
        for a in 0..8 {
            for i in 0..3 {
                // dN/dX_i = J^{-T}_{ij} dN/dxi_j = inv[j][i] * grads[a][j]
                dndx[a][i] =
                    inv[0][i] * grads[a][0] + inv[1][i] * grads[a][1] + inv[2][i] * grads[a][2];
            }
        }
        (dndx, det)
    }
}

fn invert3(m: &[[f64; 3]; 3], det: f64) -> [[f64; 3]; 3] {
    let inv_det = 1.0 / det;
    let mut inv = [[0.0f64; 3]; 3];
    inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv_det;
    inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv_det;
    inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv_det;
    inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv_det;
    inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv_det;
    inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv_det;
    inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv_det;
    inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv_det;
    inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv_det;
    inv
}

/// Shape function values at a local coordinate.
pub fn shape_values(xi: [f64; 3]) -> [f64; 8] {
    let mut n = [0.0f64; 8];
    for (a, c) in HEX_CORNERS.iter().enumerate() {
        n[a] = 0.125 * (1.0 + c[0] * xi[0]) * (1.0 + c[1] * xi[1]) * (1.0 + c[2] * xi[2]);
    }
    n
}

/// Shape function gradients w.r.t. local coordinates.
pub fn shape_gradients(xi: [f64; 3]) -> [[f64; 3]; 8] {
    let mut g = [[0.0f64; 3]; 8];
    for (a, c) in HEX_CORNERS.iter().enumerate() {
        g[a][0] = 0.125 * c[0] * (1.0 + c[1] * xi[1]) * (1.0 + c[2] * xi[2]);
        g[a][1] = 0.125 * (1.0 + c[0] * xi[0]) * c[1] * (1.0 + c[2] * xi[2]);
        g[a][2] = 0.125 * (1.0 + c[0] * xi[0]) * (1.0 + c[1] * xi[1]) * c[2];
    }
    g
}

/// The eight Gauss points of the 2x2x2 rule, ordered by local index bits
/// `(g1, g2, g3)`; all weights are 1.
pub fn gauss_points() -> impl Iterator<Item = [f64; 3]> {
    (0..8).map(|gp| {
        let g = [(gp >> 2) & 1, (gp >> 1) & 1, gp & 1];
        let c = |b: usize| if b == 0 { -GAUSS2_ABSCISSA } else { GAUSS2_ABSCISSA };
        [c(g[0]), c(g[1]), c(g[2])]
    })
}

/// Local Gauss index bits of gauss point `gp`.
pub fn gauss_bits(gp: usize) -> [usize; 3] {
    [(gp >> 2) & 1, (gp >> 1) & 1, gp & 1]
}

/// The 10x10x1-element unit cube of the extension test: one element through
/// the thickness (E1), ten along E2 and E3.
pub fn build_unit_cube_mesh() -> HexMesh {
    HexMesh::structured([1, 10, 10], [1.0, 1.0, 1.0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::GaussGrid;
    use approx::assert_relative_eq;

    #[test]
    fn unit_cube_mesh_counts() {
        let mesh = build_unit_cube_mesh();
        assert_eq!(mesh.elems.len(), 100);
        assert_eq!(mesh.n_nodes(), 2 * 11 * 11);
        assert_eq!(mesh.n_dofs(), 726);
        assert_eq!(mesh.inplane_shape(), [20, 20]);
    }

    #[test]
    fn volume_by_quadrature_is_exact() {
        let mesh = build_unit_cube_mesh();
        assert_relative_eq!(mesh.volume_by_quadrature(), 1.0, max_relative = 1e-12);
        let toy = HexMesh::structured([1, 2, 2], [0.5, 2.0, 1.0]);
        assert_relative_eq!(toy.volume_by_quadrature(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn inplane_gauss_indices_cover_grid_once_per_layer() {
        let mesh = build_unit_cube_mesh();
        let mut counts = vec![0usize; 400];
        for e in 0..mesh.elems.len() {
            for gp in 0..8 {
                counts[mesh.inplane_gauss_index(e, gauss_bits(gp))] += 1;
            }
        }
        assert!(counts.iter().all(|&c| c == 2), "two E1 layers per site");
    }

    #[test]
    fn solver_gauss_coordinates_match_shared_grid_bitwise() {
        // the field pipeline and the solver must agree on Gauss coordinates
        // through the shared constructor
        let mesh = build_unit_cube_mesh();
        let grid = GaussGrid::standard();
        for e in 0..mesh.elems.len() {
            let pos = mesh.elem_pos(e);
            for gp in 0..8 {
                let g = gauss_bits(gp);
                let x2 = crate::gauss::gauss_coord_1d(pos[1], g[1], mesh.n_elems[1], 1.0);
                let x3 = crate::gauss::gauss_coord_1d(pos[2], g[2], mesh.n_elems[2], 1.0);
                let p = mesh.inplane_gauss_index(e, g);
                let c = grid.points().coords()[p];
                assert_eq!(c[0].to_bits(), x2.to_bits());
                assert_eq!(c[1].to_bits(), x3.to_bits());
            }
        }
    }

    #[test]
    fn shape_functions_partition_unity() {
        let n = shape_values([0.3, -0.7, 0.1]);
        assert_relative_eq!(n.iter().sum::<f64>(), 1.0, max_relative = 1e-14);
    }
}
