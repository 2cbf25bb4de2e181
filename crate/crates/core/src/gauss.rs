//! The in-plane Gauss-point grid shared by the field pipeline and the FE
//! solver. Both sides must evaluate fields at bit-identical coordinates, so
//! the coordinate formula lives here and nowhere else.

use crate::grf::PointSet;

/// Local abscissa magnitude of the 2-point Gauss rule.
pub const GAUSS2_ABSCISSA: f64 = 0.577_350_269_189_625_8; // 1/sqrt(3)

/// Coordinate of Gauss point `g` (0 or 1) in element `e` of `n` equal
/// elements spanning `[0, extent]`.
pub fn gauss_coord_1d(e: usize, g: usize, n: usize, extent: f64) -> f64 {
    let sign = if g == 0 { -1.0 } else { 1.0 };
    (e as f64 + 0.5 + sign * 0.5 * GAUSS2_ABSCISSA) * extent / n as f64
}

/// Tensor-product grid of 2-point Gauss coordinates over an `n0 x n1`
/// element grid. Point `p = i0 * shape[1] + i1` with `i = 2 e + g` per axis.
#[derive(Debug, Clone)]
pub struct GaussGrid {
    pub shape: [usize; 2],
    axis0: Vec<f64>,
    axis1: Vec<f64>,
    pts: PointSet,
}

impl GaussGrid {
    pub fn new(n_elems: [usize; 2], extent: [f64; 2]) -> Self {
        let axis = |n: usize, ext: f64| -> Vec<f64> {
            (0..2 * n).map(|i| gauss_coord_1d(i / 2, i % 2, n, ext)).collect()
        };
        let axis0 = axis(n_elems[0], extent[0]);
        let axis1 = axis(n_elems[1], extent[1]);
        let mut coords = Vec::with_capacity(axis0.len() * axis1.len());
        for &a in &axis0 {
            for &b in &axis1 {
                coords.push([a, b]);
            }
        }
        Self {
            shape: [axis0.len(), axis1.len()],
            axis0,
            axis1,
            pts: PointSet::new(coords).expect("gauss grid points are distinct"),
        }
    }

    /// The 20x20 grid of the 10x10-element unit square.
    pub fn standard() -> Self {
        Self::new([10, 10], [1.0, 1.0])
    }

    pub fn points(&self) -> &PointSet {
        &self.pts
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    pub fn axis0(&self) -> &[f64] {
        &self.axis0
    }

    pub fn axis1(&self) -> &[f64] {
        &self.axis1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn standard_grid_is_20_by_20_inside_unit_square() {
        let g = GaussGrid::standard();
        assert_eq!(g.shape, [20, 20]);
        assert_eq!(g.len(), 400);
        for c in g.points().coords() {
            assert!(c[0] > 0.0 && c[0] < 1.0 && c[1] > 0.0 && c[1] < 1.0);
        }
    }

    #[test]
    fn first_element_abscissae() {
        // element [0, 0.1], midpoint 0.05, offset 0.05/sqrt(3)
        let lo = gauss_coord_1d(0, 0, 10, 1.0);
        let hi = gauss_coord_1d(0, 1, 10, 1.0);
        assert_relative_eq!(lo, 0.05 - 0.05 / 3f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(hi, 0.05 + 0.05 / 3f64.sqrt(), max_relative = 1e-15);
    }
}
