//! Discretization of the unit half-sphere of fiber directions into
//! spherical triangles, and quadrature of dispersion densities over them.
//!
//! Fibers are unsigned directions, so the integration domain is one
//! representative per antipodal pair: ten faces of a subdivided icosahedron,
//! refined 4-way per level (10, 40, 160, 640, ... triangles). The total
//! solid angle is exactly half the sphere, 2*pi.

use super::ConstitutiveError;

type Vec3 = [f64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(a: Vec3) -> Vec3 {
    let n = dot(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

fn midpoint(a: Vec3, b: Vec3) -> Vec3 {
    normalize([a[0] + b[0], a[1] + b[1], a[2] + b[2]])
}

/// Solid angle of the spherical triangle spanned by unit vectors.
fn spherical_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let num = dot(a, cross(b, c)).abs();
    let den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    2.0 * num.atan2(den)
}

/// One spherical triangle of the tiling.
#[derive(Debug, Clone)]
pub struct SphericalTriangle {
    pub vertices: [Vec3; 3],
    /// Unit centroid direction, canonicalized to the half-space with
    /// non-negative second component (azimuth in [0, pi]).
    pub direction: Vec3,
    /// Solid angle (steradians).
    pub area: f64,
    /// Polar angle of the direction (from E3).
    pub theta: f64,
    /// Azimuth angle of the direction, in [0, pi].
    pub phi: f64,
}

/// Triangulated half-sphere of fiber directions.
#[derive(Debug, Clone)]
pub struct HemisphereMesh {
    pub triangles: Vec<SphericalTriangle>,
    pub level: u32,
}

/// Direction vector from polar and azimuth angles.
pub fn direction_from_angles(theta: f64, phi: f64) -> Vec3 {
    [
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    ]
}

fn canonical(mut n: Vec3) -> Vec3 {
    // antipodal representative with n[1] >= 0 (azimuth in [0, pi])
    if n[1] < 0.0 || (n[1] == 0.0 && n[2] < 0.0) || (n[1] == 0.0 && n[2] == 0.0 && n[0] < 0.0) {
        n = [-n[0], -n[1], -n[2]];
    }
    n
}

fn make_triangle(v: [Vec3; 3]) -> SphericalTriangle {
    let direction = canonical(normalize([
        v[0][0] + v[1][0] + v[2][0],
        v[0][1] + v[1][1] + v[2][1],
        v[0][2] + v[1][2] + v[2][2],
    ]));
    let area = spherical_area(v[0], v[1], v[2]);
    let theta = direction[2].clamp(-1.0, 1.0).acos();
    let phi = direction[1].atan2(direction[0]).rem_euclid(std::f64::consts::PI * 2.0);
    let phi = if phi > std::f64::consts::PI {
        phi - std::f64::consts::PI
    } else {
        phi
    };
    SphericalTriangle {
        vertices: v,
        direction,
        area,
        theta,
        phi,
    }
}

/// Ten base faces: one representative per antipodal face pair of a unit
/// icosahedron in its standard orientation.
///
/// The standard vertex set is invariant under each coordinate reflection, so
/// mirror-image direction pairs carry bitwise-equal densities and the
/// discrete fiber sums inherit the exact orthotropy of the continuous
/// dispersions; an orientation without this symmetry leaves percent-level
/// spurious shear stresses under diagonal stretches.
fn base_faces() -> Vec<[Vec3; 3]> {
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let raw: [[f64; 3]; 12] = [
        [-1.0, p, 0.0],
        [1.0, p, 0.0],
        [-1.0, -p, 0.0],
        [1.0, -p, 0.0],
        [0.0, -1.0, p],
        [0.0, 1.0, p],
        [0.0, -1.0, -p],
        [0.0, 1.0, -p],
        [p, 0.0, -1.0],
        [p, 0.0, 1.0],
        [-p, 0.0, -1.0],
        [-p, 0.0, 1.0],
    ];
    let verts: Vec<Vec3> = raw.iter().map(|v| normalize(*v)).collect();
    let faces: [[usize; 3]; 20] = [
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    // keep one face of each antipodal pair (deterministic representative)
    let mut kept: Vec<[Vec3; 3]> = Vec::with_capacity(10);
    let mut used = vec![false; 20];
    for i in 0..20 {
        if used[i] {
            continue;
        }
        let ci = normalize([
            verts[faces[i][0]][0] + verts[faces[i][1]][0] + verts[faces[i][2]][0],
            verts[faces[i][0]][1] + verts[faces[i][1]][1] + verts[faces[i][2]][1],
            verts[faces[i][0]][2] + verts[faces[i][1]][2] + verts[faces[i][2]][2],
        ]);
        for j in (i + 1)..20 {
            if used[j] {
                continue;
            }
            let cj = normalize([
                verts[faces[j][0]][0] + verts[faces[j][1]][0] + verts[faces[j][2]][0],
                verts[faces[j][0]][1] + verts[faces[j][1]][1] + verts[faces[j][2]][1],
                verts[faces[j][0]][2] + verts[faces[j][1]][2] + verts[faces[j][2]][2],
            ]);
            if dot(ci, cj) < -0.999 {
                used[j] = true;
                break;
            }
        }
        used[i] = true;
        kept.push([verts[faces[i][0]], verts[faces[i][1]], verts[faces[i][2]]]);
    }
    assert_eq!(kept.len(), 10, "antipodal pairing must leave 10 faces");
    kept
}

fn subdivide(tri: [Vec3; 3]) -> [[Vec3; 3]; 4] {
    let [a, b, c] = tri;
    let ab = midpoint(a, b);
    let bc = midpoint(b, c);
    let ca = midpoint(c, a);
    [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
}

/// Tile the half-sphere with `m_target` spherical triangles;
/// `m_target` must be `10 * 4^k`.
pub fn discretize_hemisphere(m_target: usize) -> Result<HemisphereMesh, ConstitutiveError> {
    let mut level = 0u32;
    let mut m = 10usize;
    while m < m_target {
        m *= 4;
        level += 1;
        if level > 12 {
            return Err(ConstitutiveError::UnreachableResolution(m_target));
        }
    }
    if m != m_target {
        return Err(ConstitutiveError::UnreachableResolution(m_target));
    }
    let mut faces = base_faces();
    for _ in 0..level {
        faces = faces.into_iter().flat_map(subdivide).collect();
    }
    Ok(HemisphereMesh {
        triangles: faces.into_iter().map(make_triangle).collect(),
        level,
    })
}

impl HemisphereMesh {
    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        self.triangles.iter().map(|t| t.area).sum()
    }
}

/// Discrete fiber densities: `rho_n = (1/2pi) integral_n rho sin(theta)
/// dtheta dphi` by two-level centroid quadrature per triangle, renormalized
/// to sum exactly to one.
pub fn compute_densities<F: Fn(f64, f64) -> f64>(
    mesh: &HemisphereMesh,
    dispersion: F,
) -> Result<Vec<f64>, ConstitutiveError> {
    let quad_depth = 2;
    let mut rho = Vec::with_capacity(mesh.len());
    for tri in &mesh.triangles {
        let mut stack = vec![(tri.vertices, quad_depth)];
        let mut acc = 0.0;
        while let Some((t, depth)) = stack.pop() {
            if depth == 0 {
                let sub = make_triangle(t);
                let v = dispersion(sub.theta, sub.phi);
                if v < 0.0 {
                    return Err(ConstitutiveError::NegativeDensity);
                }
                acc += v * sub.area;
            } else {
                for child in subdivide(t) {
                    stack.push((child, depth - 1));
                }
            }
        }
        rho.push(acc / (2.0 * std::f64::consts::PI));
    }
    let total: f64 = rho.iter().sum();
    if total <= 0.0 {
        return Err(ConstitutiveError::NegativeDensity);
    }
    for r in &mut rho {
        *r /= total;
    }
    Ok(rho)
}

/// pi-periodic von Mises dispersion about a mean direction:
/// `rho(N) ~ exp(b cos 2 angle(N, mean))`, scaled by its peak value so large
/// concentrations cannot overflow (densities are renormalized discretely).
pub fn pi_periodic_von_mises(mean: Vec3, concentration: f64) -> impl Fn(f64, f64) -> f64 {
    let m = normalize(mean);
    move |theta, phi| {
        let n = direction_from_angles(theta, phi);
        let c = dot(n, m).clamp(-1.0, 1.0);
        (2.0 * concentration * (c * c - 1.0)).exp()
    }
}
