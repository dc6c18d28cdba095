//! Triangle mesh representation, validation and measurement.
//!
//! Meshes are indexed triangle soups with optional per-vertex UVs and unit
//! normals. Faces wind counter-clockwise when seen from outside; normals
//! point outward. Nothing here repairs geometry — validation reports, the
//! caller decides.

mod inertia;
pub mod obj;
pub mod shapes;

pub use inertia::{compute_inertia, InertiaTensor};

use nalgebra::{Point3, Vector2, Vector3};
use std::collections::HashMap;

use crate::error::{Error, Result};

/// Faces with area below this (m²) count as degenerate.
pub const DEGENERATE_AREA: f64 = 1e-12;

/// Indexed triangle mesh with optional per-vertex attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Point3<f64>>,
    pub faces: Vec<[usize; 3]>,
    /// One UV per vertex, components in `[0, 1]`.
    pub uvs: Option<Vec<Vector2<f64>>>,
    /// One unit normal per vertex.
    pub vertex_normals: Option<Vec<Vector3<f64>>>,
}

impl TriangleMesh {
    /// Build a mesh, checking the type invariants: in-range face indices,
    /// finite coordinates, per-vertex UVs in `[0, 1]²`, unit normals.
    pub fn new(
        vertices: Vec<Point3<f64>>,
        faces: Vec<[usize; 3]>,
        uvs: Option<Vec<Vector2<f64>>>,
        vertex_normals: Option<Vec<Vector3<f64>>>,
    ) -> Result<Self> {
        for v in &vertices {
            if !v.coords.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidMesh("non-finite vertex coordinate".into()));
            }
        }
        for (i, f) in faces.iter().enumerate() {
            for &idx in f {
                if idx >= vertices.len() {
                    return Err(Error::InvalidMesh(format!(
                        "face {i} references vertex {idx} but mesh has {} vertices",
                        vertices.len()
                    )));
                }
            }
        }
        if let Some(uvs) = &uvs {
            if uvs.len() != vertices.len() {
                return Err(Error::InvalidMesh(format!(
                    "{} UVs for {} vertices (one per vertex required)",
                    uvs.len(),
                    vertices.len()
                )));
            }
            for uv in uvs {
                if !uv.iter().all(|c| c.is_finite() && (0.0..=1.0).contains(c)) {
                    return Err(Error::InvalidMesh(format!(
                        "UV ({}, {}) outside [0, 1]",
                        uv.x, uv.y
                    )));
                }
            }
        }
        if let Some(normals) = &vertex_normals {
            if normals.len() != vertices.len() {
                return Err(Error::InvalidMesh(format!(
                    "{} normals for {} vertices (one per vertex required)",
                    normals.len(),
                    vertices.len()
                )));
            }
            for n in normals {
                if !n.iter().all(|c| c.is_finite()) || (n.norm() - 1.0).abs() > 1e-6 {
                    return Err(Error::InvalidMesh(format!(
                        "vertex normal ({}, {}, {}) is not unit length",
                        n.x, n.y, n.z
                    )));
                }
            }
        }
        Ok(Self {
            vertices,
            faces,
            uvs,
            vertex_normals,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    #[inline]
    pub fn face_points(&self, face: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn translated(&self, offset: Vector3<f64>) -> TriangleMesh {
        let mut out = self.clone();
        for v in &mut out.vertices {
            *v += offset;
        }
        out
    }
}

/// Topology and quality summary produced by [`validate_mesh`].
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ValidationReport {
    pub watertight: bool,
    pub manifold: bool,
    pub connected_components: usize,
    pub degenerate_face_fraction: f64,
    pub boundary_edge_count: usize,
}

/// Classify mesh topology: watertightness (every edge shared by exactly two
/// faces with opposite orientation), manifoldness (additionally no split
/// vertex links), component count, degenerate faces and boundary edges.
///
/// Report-only; never fails.
pub fn validate_mesh(mesh: &TriangleMesh) -> ValidationReport {
    // Directed edge census. Key: undirected edge; value: (a<b count, b<a count).
    let mut edges: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    for f in &mesh.faces {
        for k in 0..3 {
            let a = f[k];
            let b = f[(k + 1) % 3];
            let key = (a.min(b), a.max(b));
            let entry = edges.entry(key).or_insert((0, 0));
            if a < b {
                entry.0 += 1;
            } else {
                entry.1 += 1;
            }
        }
    }

    let mut boundary_edge_count = 0;
    let mut watertight = !mesh.faces.is_empty();
    for (&(a, b), &(fwd, rev)) in &edges {
        let total = fwd + rev;
        if total == 1 {
            boundary_edge_count += 1;
        }
        // Exactly two incident faces, opposite orientation. Degenerate
        // self-edges (a == b) can never satisfy this.
        if !(fwd == 1 && rev == 1) || a == b {
            watertight = false;
        }
    }

    let manifold = watertight && vertex_links_unsplit(mesh);

    let degenerate = mesh
        .faces
        .iter()
        .enumerate()
        .filter(|(i, _)| face_area(mesh, *i) < DEGENERATE_AREA)
        .count();
    let degenerate_face_fraction = if mesh.faces.is_empty() {
        0.0
    } else {
        degenerate as f64 / mesh.faces.len() as f64
    };

    ValidationReport {
        watertight,
        manifold,
        connected_components: count_components(mesh),
        degenerate_face_fraction,
        boundary_edge_count,
    }
}

pub fn face_area(mesh: &TriangleMesh, face: usize) -> f64 {
    let [a, b, c] = mesh.face_points(face);
    0.5 * (b - a).cross(&(c - a)).norm()
}

fn count_components(mesh: &TriangleMesh) -> usize {
    let mut uf = UnionFind::new(mesh.vertex_count());
    let mut used = vec![false; mesh.vertex_count()];
    for f in &mesh.faces {
        uf.union(f[0], f[1]);
        uf.union(f[1], f[2]);
        for &v in f {
            used[v] = true;
        }
    }
    let mut roots = std::collections::HashSet::new();
    for v in 0..mesh.vertex_count() {
        if used[v] {
            roots.insert(uf.find(v));
        }
    }
    roots.len()
}

/// True when every vertex's incident faces form a single edge-connected fan.
fn vertex_links_unsplit(mesh: &TriangleMesh) -> bool {
    // vertex -> list of (face index, other two vertices)
    let mut incident: HashMap<usize, Vec<(usize, usize, usize)>> = HashMap::new();
    for (fi, f) in mesh.faces.iter().enumerate() {
        for k in 0..3 {
            incident
                .entry(f[k])
                .or_default()
                .push((fi, f[(k + 1) % 3], f[(k + 2) % 3]));
        }
    }
    for faces in incident.values() {
        if faces.len() <= 1 {
            continue;
        }
        // Union incident faces that share an edge through this vertex.
        let mut uf = UnionFind::new(faces.len());
        let mut by_neighbor: HashMap<usize, Vec<usize>> = HashMap::new();
        for (slot, &(_, u, w)) in faces.iter().enumerate() {
            by_neighbor.entry(u).or_default().push(slot);
            by_neighbor.entry(w).or_default().push(slot);
        }
        for slots in by_neighbor.values() {
            for pair in slots.windows(2) {
                uf.union(pair[0], pair[1]);
            }
        }
        let root = uf.find(0);
        if (1..faces.len()).any(|s| uf.find(s) != root) {
            return false;
        }
    }
    true
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// Componentwise min/max over all vertices.
pub fn bounding_box(mesh: &TriangleMesh) -> Result<(Point3<f64>, Point3<f64>)> {
    if mesh.vertices.is_empty() {
        return Err(Error::EmptyGeometry);
    }
    let mut min = mesh.vertices[0];
    let mut max = mesh.vertices[0];
    for v in &mesh.vertices[1..] {
        for i in 0..3 {
            min[i] = min[i].min(v[i]);
            max[i] = max[i].max(v[i]);
        }
    }
    Ok((min, max))
}

/// Scale all vertices about the origin. Faces, UVs and normals are untouched.
pub fn scale_uniform(mesh: &TriangleMesh, factor: f64) -> Result<TriangleMesh> {
    if !factor.is_finite() || factor <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "scale factor must be positive and finite, got {factor}"
        )));
    }
    let mut out = mesh.clone();
    for v in &mut out.vertices {
        v.coords *= factor;
    }
    Ok(out)
}
