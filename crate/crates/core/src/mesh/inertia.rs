//! Uniform-density mass properties by exact signed-tetrahedron integration.

use nalgebra::{Matrix3, Point3, Vector3};

use super::{validate_mesh, TriangleMesh};
use crate::error::{Error, Result};

/// Mass, volume centroid and inertia moments about the center of mass.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InertiaTensor {
    pub mass: f64,
    pub center_of_mass: Point3<f64>,
    /// Symmetric 3×3 inertia matrix (kg·m²), expressed at the center of
    /// mass in the mesh frame.
    pub moments: Matrix3<f64>,
}

/// Integrate uniform-density inertia over the enclosed volume.
///
/// The mesh must be watertight with outward orientation (positive enclosed
/// volume); each face contributes the signed tetrahedron it spans with the
/// origin.
pub fn compute_inertia(mesh: &TriangleMesh, mass: f64) -> Result<InertiaTensor> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "mass must be positive, got {mass}"
        )));
    }
    if !validate_mesh(mesh).watertight {
        return Err(Error::NotWatertight);
    }

    // Pass 1: volume and centroid.
    let mut vol6 = 0.0;
    let mut first = Vector3::zeros();
    for i in 0..mesh.face_count() {
        let [a, b, c] = mesh.face_points(i);
        let det = a.coords.dot(&b.coords.cross(&c.coords));
        vol6 += det;
        first += det * (a.coords + b.coords + c.coords);
    }
    let volume = vol6 / 6.0;
    if volume <= 0.0 {
        return Err(Error::InvalidMesh(format!(
            "non-positive enclosed volume ({volume}); check face orientation"
        )));
    }
    let center = Point3::from(first / 24.0 / volume);

    // Pass 2: second moments about the centroid (shift first for accuracy).
    let mut diag = Vector3::zeros(); // ∫x², ∫y², ∫z²
    let mut mixed = Vector3::zeros(); // ∫xy, ∫yz, ∫zx
    for i in 0..mesh.face_count() {
        let [pa, pb, pc] = mesh.face_points(i);
        let a = pa - center;
        let b = pb - center;
        let c = pc - center;
        let det = a.dot(&b.cross(&c));
        for axis in 0..3 {
            let (x, y, z) = (a[axis], b[axis], c[axis]);
            diag[axis] += det * (x * x + y * y + z * z + x * y + x * z + y * z);
        }
        for (slot, (i0, i1)) in [(0, 1), (1, 2), (2, 0)].iter().enumerate() {
            let (x0, y0) = (a[*i0], a[*i1]);
            let (x1, y1) = (b[*i0], b[*i1]);
            let (x2, y2) = (c[*i0], c[*i1]);
            mixed[slot] += det
                * (2.0 * (x0 * y0 + x1 * y1 + x2 * y2)
                    + x0 * y1
                    + y0 * x1
                    + x0 * y2
                    + y0 * x2
                    + x1 * y2
                    + y1 * x2);
        }
    }
    let density = mass / volume;
    diag *= density / 60.0;
    mixed *= density / 120.0;

    let moments = Matrix3::new(
        diag.y + diag.z,
        -mixed.x,
        -mixed.z,
        -mixed.x,
        diag.x + diag.z,
        -mixed.y,
        -mixed.z,
        -mixed.y,
        diag.x + diag.y,
    );

    Ok(InertiaTensor {
        mass,
        center_of_mass: center,
        moments,
    })
}
