//! Software rasterizer producing per-view geometry buffers and color
//! renders.
//!
//! Z-buffered perspective rasterization with perspective-correct barycentric
//! interpolation. Pixel coverage is the center-inside-triangle test at
//! centers (x + 0.5, y + 0.5); faces whose view-space geometric normal has
//! z <= 0 are culled; no antialiasing, no lighting. Output is bit-identical
//! across runs.

use nalgebra::Vector3;

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::img::ColorImage;
use crate::mesh::TriangleMesh;

/// Per-view rasterizer output: visibility mask, min-max normalized depth,
/// view-space unit normals and per-pixel UV. Off-mask entries are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryBuffers {
    width: usize,
    height: usize,
    pub mask: Vec<bool>,
    /// Normalized to [0, 1] over visible pixels (min -> 0, max -> 1).
    pub depth: Vec<f64>,
    pub normals: Vec<[f64; 3]>,
    pub uv: Vec<[f64; 2]>,
    /// Camera-space depth range over visible pixels, kept so external
    /// points can be tested against the normalized buffer.
    pub depth_range: Option<(f64, f64)>,
}

impl GeometryBuffers {
    /// Assemble buffers from raw planes (synthetic fixtures, tests).
    pub fn from_parts(
        width: usize,
        height: usize,
        mask: Vec<bool>,
        depth: Vec<f64>,
        normals: Vec<[f64; 3]>,
        uv: Vec<[f64; 2]>,
        depth_range: Option<(f64, f64)>,
    ) -> Result<Self> {
        let n = width * height;
        if mask.len() != n || depth.len() != n || normals.len() != n || uv.len() != n {
            return Err(Error::DimensionMismatch(
                "geometry buffer planes must all be width*height".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            mask,
            depth,
            normals,
            uv,
            depth_range,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    /// Normalize a camera-space depth with this buffer's range.
    pub fn normalize_depth(&self, camera_depth: f64) -> Option<f64> {
        let (min, max) = self.depth_range?;
        let span = max - min;
        if span < 1e-15 {
            ((camera_depth - min).abs() < 1e-9).then_some(0.0)
        } else {
            Some((camera_depth - min) / span)
        }
    }
}

struct RasterCore {
    width: usize,
    height: usize,
    mask: Vec<bool>,
    depth_cam: Vec<f64>,
    uv: Vec<[f64; 2]>,
    normals: Vec<[f64; 3]>,
}

fn rasterize(mesh: &TriangleMesh, camera: &Camera, with_normals: bool) -> RasterCore {
    let (width, height) = camera.resolution;
    let mut core = RasterCore {
        width,
        height,
        mask: vec![false; width * height],
        depth_cam: vec![f64::INFINITY; width * height],
        uv: vec![[0.0; 2]; width * height],
        normals: vec![[0.0; 3]; width * height],
    };

    let view: Vec<Vector3<f64>> = mesh.vertices.iter().map(|p| camera.to_view(p)).collect();
    let view_normals: Option<Vec<Vector3<f64>>> = if with_normals {
        mesh.vertex_normals
            .as_ref()
            .map(|ns| ns.iter().map(|n| camera.dir_to_view(n)).collect())
    } else {
        None
    };
    let uvs = mesh.uvs.as_ref();

    for face in &mesh.faces {
        let [i0, i1, i2] = *face;
        let (v0, v1, v2) = (view[i0], view[i1], view[i2]);
        // No near-plane clipping: triangles not strictly in front are skipped
        // whole. Scenes are expected to sit inside the view sphere.
        if v0.z >= -1e-9 || v1.z >= -1e-9 || v2.z >= -1e-9 {
            continue;
        }
        // Back-face culling on the view-space geometric normal.
        let face_normal = (v1 - v0).cross(&(v2 - v0));
        if face_normal.z <= 0.0 {
            continue;
        }

        let project = |v: &Vector3<f64>| -> (f64, f64, f64) {
            let depth = -v.z;
            let (w, h) = (width as f64, height as f64);
            let tan_half = (camera.fov_y_deg.to_radians() * 0.5).tan();
            let aspect = w / h;
            let px = (v.x / (depth * tan_half * aspect) + 1.0) * 0.5 * w;
            let py = (1.0 - v.y / (depth * tan_half)) * 0.5 * h;
            (px, py, 1.0 / depth)
        };
        let (x0, y0, iw0) = project(&v0);
        let (x1, y1, iw1) = project(&v1);
        let (x2, y2, iw2) = project(&v2);

        let area2 = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0);
        if area2.abs() < 1e-12 {
            continue;
        }

        let min_x = x0.min(x1).min(x2).floor().max(0.0) as usize;
        let max_x = (x0.max(x1).max(x2).ceil() as isize).min(width as isize - 1);
        let min_y = y0.min(y1).min(y2).floor().max(0.0) as usize;
        let max_y = (y0.max(y1).max(y2).ceil() as isize).min(height as isize - 1);
        if max_x < min_x as isize || max_y < min_y as isize {
            continue;
        }

        for y in min_y..=(max_y as usize) {
            let py = y as f64 + 0.5;
            for x in min_x..=(max_x as usize) {
                let px = x as f64 + 0.5;
                let l0 = ((x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)) / area2;
                let l1 = ((x0 - x2) * (py - y2) - (y0 - y2) * (px - x2)) / area2;
                let l2 = ((x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)) / area2;
                if l0 < 0.0 || l1 < 0.0 || l2 < 0.0 {
                    continue;
                }
                // Perspective-correct interpolation weights.
                let sw = l0 * iw0 + l1 * iw1 + l2 * iw2;
                let depth = 1.0 / sw;
                let idx = y * width + x;
                if depth >= core.depth_cam[idx] {
                    continue;
                }
                core.depth_cam[idx] = depth;
                core.mask[idx] = true;
                if let Some(uvs) = uvs {
                    let (a, b, c) = (uvs[i0], uvs[i1], uvs[i2]);
                    let u = (l0 * iw0 * a.x + l1 * iw1 * b.x + l2 * iw2 * c.x) / sw;
                    let v = (l0 * iw0 * a.y + l1 * iw1 * b.y + l2 * iw2 * c.y) / sw;
                    core.uv[idx] = [u.clamp(0.0, 1.0), v.clamp(0.0, 1.0)];
                }
                if let Some(ns) = &view_normals {
                    let (a, b, c) = (ns[i0], ns[i1], ns[i2]);
                    let n = a * (l0 * iw0) + b * (l1 * iw1) + c * (l2 * iw2);
                    let len = n.norm();
                    core.normals[idx] = if len > 1e-12 {
                        [n.x / len, n.y / len, n.z / len]
                    } else {
                        [0.0, 0.0, 0.0]
                    };
                }
            }
        }
    }
    core
}

/// Rasterize visibility mask, normalized depth, view-space normals and UV.
///
/// The mesh must carry UVs and vertex normals; the error names whichever
/// attributes are missing.
pub fn render_geometry_buffers(mesh: &TriangleMesh, camera: &Camera) -> Result<GeometryBuffers> {
    let mut missing = Vec::new();
    if mesh.uvs.is_none() {
        missing.push("uvs");
    }
    if mesh.vertex_normals.is_none() {
        missing.push("vertex_normals");
    }
    if !missing.is_empty() {
        return Err(Error::MissingAttribute(missing.join(", ")));
    }

    let core = rasterize(mesh, camera, true);

    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for (i, &m) in core.mask.iter().enumerate() {
        if m {
            min = min.min(core.depth_cam[i]);
            max = max.max(core.depth_cam[i]);
        }
    }
    let depth_range = (min.is_finite()).then_some((min, max));
    let span = max - min;
    let depth = core
        .mask
        .iter()
        .zip(core.depth_cam.iter())
        .map(|(&m, &d)| {
            if !m || span < 1e-15 {
                0.0
            } else {
                (d - min) / span
            }
        })
        .collect();

    Ok(GeometryBuffers {
        width: core.width,
        height: core.height,
        mask: core.mask,
        depth,
        normals: core.normals,
        uv: core.uv,
        depth_range,
    })
}

/// Render the mesh through its UVs with nearest-texel lookup; background is
/// black.
pub fn render_color(mesh: &TriangleMesh, camera: &Camera, texture: &ColorImage) -> Result<ColorImage> {
    if mesh.uvs.is_none() {
        return Err(Error::MissingAttribute("uvs".into()));
    }
    let core = rasterize(mesh, camera, false);
    let mut out = ColorImage::new(core.width, core.height);
    for y in 0..core.height {
        for x in 0..core.width {
            let idx = y * core.width + x;
            if core.mask[idx] {
                let [u, v] = core.uv[idx];
                out.set(x, y, sample_nearest(texture, u, v));
            }
        }
    }
    Ok(out)
}

/// Nearest-texel lookup: uv (0,0) addresses the top-left texel.
#[inline]
pub fn sample_nearest(texture: &ColorImage, u: f64, v: f64) -> [f64; 3] {
    let tx = ((u * texture.width() as f64).floor() as isize)
        .clamp(0, texture.width() as isize - 1) as usize;
    let ty = ((v * texture.height() as f64).floor() as isize)
        .clamp(0, texture.height() as isize - 1) as usize;
    texture.get(tx, ty)
}
