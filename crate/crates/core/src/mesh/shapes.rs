//! Procedural fixture meshes used by tests, checks and demos.

use nalgebra::{Point3, Vector2, Vector3};

use super::TriangleMesh;

/// Axis-aligned unit cube centered at the origin, CCW winding, outward
/// orientation, spherical-projection UVs and radial vertex normals.
pub fn unit_cube() -> TriangleMesh {
    box_mesh(1.0, 1.0, 1.0)
}

/// Axis-aligned box with the given extents, centered at the origin.
pub fn box_mesh(ex: f64, ey: f64, ez: f64) -> TriangleMesh {
    let mut vertices = Vec::with_capacity(8);
    for i in 0..8usize {
        let x = if i & 1 == 0 { -0.5 * ex } else { 0.5 * ex };
        let y = if i & 2 == 0 { -0.5 * ey } else { 0.5 * ey };
        let z = if i & 4 == 0 { -0.5 * ez } else { 0.5 * ez };
        vertices.push(Point3::new(x, y, z));
    }
    let faces = vec![
        [0, 2, 3],
        [0, 3, 1], // -Z
        [4, 5, 7],
        [4, 7, 6], // +Z
        [0, 1, 5],
        [0, 5, 4], // -Y
        [2, 6, 7],
        [2, 7, 3], // +Y
        [0, 4, 6],
        [0, 6, 2], // -X
        [1, 3, 7],
        [1, 7, 5], // +X
    ];
    let uvs = vertices.iter().map(|v| spherical_uv(v)).collect();
    let normals = vertices
        .iter()
        .map(|v| v.coords.normalize())
        .collect();
    TriangleMesh::new(vertices, faces, Some(uvs), Some(normals)).expect("valid box")
}

/// Regular octahedron with vertices on the axes.
pub fn octahedron(radius: f64) -> TriangleMesh {
    let vertices = vec![
        Point3::new(radius, 0.0, 0.0),
        Point3::new(-radius, 0.0, 0.0),
        Point3::new(0.0, radius, 0.0),
        Point3::new(0.0, -radius, 0.0),
        Point3::new(0.0, 0.0, radius),
        Point3::new(0.0, 0.0, -radius),
    ];
    let mut faces = Vec::with_capacity(8);
    for (sx, xv) in [(1.0, 0usize), (-1.0, 1usize)] {
        for (sy, yv) in [(1.0, 2usize), (-1.0, 3usize)] {
            for (sz, zv) in [(1.0, 4usize), (-1.0, 5usize)] {
                if sx * sy * sz > 0.0 {
                    faces.push([xv, yv, zv]);
                } else {
                    faces.push([xv, zv, yv]);
                }
            }
        }
    }
    TriangleMesh::new(vertices, faces, None, None).expect("valid octahedron")
}

/// Regular icosahedron.
pub fn icosahedron(radius: f64) -> TriangleMesh {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ];
    let vertices: Vec<Point3<f64>> = raw
        .iter()
        .map(|&(x, y, z)| {
            let v = Vector3::new(x, y, z).normalize() * radius;
            Point3::from(v)
        })
        .collect();
    let faces = vec![
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
    TriangleMesh::new(vertices, faces, None, None).expect("valid icosahedron")
}

/// Latitude/longitude sphere with a duplicated seam column and per-ring pole
/// vertices so every vertex carries one UV. Not index-watertight by design.
pub fn uv_sphere(radius: f64, rings: usize, segments: usize) -> TriangleMesh {
    assert!(rings >= 2 && segments >= 3);
    let mut vertices = Vec::new();
    let mut uvs = Vec::new();
    let mut normals = Vec::new();
    for i in 0..=rings {
        let theta = std::f64::consts::PI * i as f64 / rings as f64;
        for j in 0..=segments {
            let phi = std::f64::consts::TAU * j as f64 / segments as f64;
            let n = Vector3::new(
                theta.sin() * phi.cos(),
                theta.sin() * phi.sin(),
                theta.cos(),
            );
            vertices.push(Point3::from(n * radius));
            normals.push(if n.norm() > 0.5 { n.normalize() } else { Vector3::z() });
            uvs.push(Vector2::new(
                j as f64 / segments as f64,
                i as f64 / rings as f64,
            ));
        }
    }
    let idx = |i: usize, j: usize| i * (segments + 1) + j;
    let mut faces = Vec::new();
    for i in 0..rings {
        for j in 0..segments {
            let a = idx(i, j);
            let b = idx(i + 1, j);
            let c = idx(i + 1, j + 1);
            let d = idx(i, j + 1);
            if i != rings - 1 {
                faces.push([a, b, c]);
            }
            if i != 0 {
                faces.push([a, c, d]);
            }
        }
    }
    TriangleMesh::new(vertices, faces, Some(uvs), Some(normals)).expect("valid sphere")
}

/// Square quad in the YZ plane at x = 0, facing +X, UVs spanning `[0, 1]²`.
/// u runs along +Y, v along -Z (texture top faces up when viewed from +X).
pub fn quad_facing_x(half: f64) -> TriangleMesh {
    let vertices = vec![
        Point3::new(0.0, -half, -half),
        Point3::new(0.0, half, -half),
        Point3::new(0.0, half, half),
        Point3::new(0.0, -half, half),
    ];
    let uvs = vertices
        .iter()
        .map(|v| {
            Vector2::new(
                (v.y + half) / (2.0 * half),
                (half - v.z) / (2.0 * half),
            )
        })
        .collect();
    let normals = vec![Vector3::x(); 4];
    TriangleMesh::new(
        vertices,
        vec![[0, 1, 2], [0, 2, 3]],
        Some(uvs),
        Some(normals),
    )
    .expect("valid quad")
}

fn spherical_uv(p: &Point3<f64>) -> Vector2<f64> {
    let r = p.coords.norm();
    if r == 0.0 {
        return Vector2::new(0.5, 0.5);
    }
    let u = p.y.atan2(p.x) / std::f64::consts::TAU + 0.5;
    let v = (p.z / r).asin() / std::f64::consts::PI + 0.5;
    Vector2::new(u.clamp(0.0, 1.0), v.clamp(0.0, 1.0))
}
