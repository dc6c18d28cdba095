//! Perspective cameras on a view sphere around the origin.
//!
//! A camera sits at `radius * (cos el * cos az, cos el * sin az, sin el)`
//! and looks at the origin with up = +Z (+X at the poles). View space is
//! right-handed with the camera at the origin looking down -Z, so a surface
//! facing the camera has view-space normal (0, 0, 1).

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_RADIUS: f64 = 2.0;
pub const DEFAULT_FOV_Y_DEG: f64 = 40.0;
pub const DEFAULT_RESOLUTION: (usize, usize) = (512, 512);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
    pub radius: f64,
    pub fov_y_deg: f64,
    /// (width, height) in pixels.
    pub resolution: (usize, usize),
}

impl Camera {
    pub fn new(
        elevation_deg: f64,
        azimuth_deg: f64,
        radius: f64,
        fov_y_deg: f64,
        resolution: (usize, usize),
    ) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "camera radius must be positive, got {radius}"
            )));
        }
        if !(fov_y_deg.is_finite() && fov_y_deg > 0.0 && fov_y_deg < 180.0) {
            return Err(Error::InvalidParameter(format!(
                "fov_y must be in (0, 180) degrees, got {fov_y_deg}"
            )));
        }
        if resolution.0 < 1 || resolution.1 < 1 {
            return Err(Error::InvalidParameter(
                "resolution components must be >= 1".into(),
            ));
        }
        if !(elevation_deg.is_finite() && (-90.0..=90.0).contains(&elevation_deg)) {
            return Err(Error::InvalidParameter(format!(
                "elevation must be in [-90, 90] degrees, got {elevation_deg}"
            )));
        }
        if !azimuth_deg.is_finite() {
            return Err(Error::InvalidParameter("azimuth must be finite".into()));
        }
        Ok(Self {
            elevation_deg,
            azimuth_deg,
            radius,
            fov_y_deg,
            resolution,
        })
    }

    pub fn with_resolution(&self, width: usize, height: usize) -> Camera {
        Camera {
            resolution: (width, height),
            ..self.clone()
        }
    }

    pub fn position(&self) -> Point3<f64> {
        let el = self.elevation_deg.to_radians();
        let az = self.azimuth_deg.to_radians();
        Point3::new(
            self.radius * el.cos() * az.cos(),
            self.radius * el.cos() * az.sin(),
            self.radius * el.sin(),
        )
    }

    /// Orthonormal view basis (right, up, backward) in world space.
    pub fn basis(&self) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
        let eye = self.position();
        let backward = eye.coords.normalize(); // from origin toward the eye
        let up_hint = if self.elevation_deg.abs() >= 90.0 - 1e-12 {
            Vector3::x()
        } else {
            Vector3::z()
        };
        let right = up_hint.cross(&backward).normalize();
        let up = backward.cross(&right);
        (right, up, backward)
    }

    /// World point to view space (camera at origin, looking down -Z).
    pub fn to_view(&self, p: &Point3<f64>) -> Vector3<f64> {
        let (right, up, backward) = self.basis();
        let d = p - self.position();
        Vector3::new(d.dot(&right), d.dot(&up), d.dot(&backward))
    }

    /// World direction to view space (rotation only).
    pub fn dir_to_view(&self, n: &Vector3<f64>) -> Vector3<f64> {
        let (right, up, backward) = self.basis();
        Vector3::new(n.dot(&right), n.dot(&up), n.dot(&backward))
    }

    /// Project a world point to continuous pixel coordinates (top-left
    /// origin, pixel centers at +0.5). Returns `(px, py, camera_depth)`;
    /// `None` when the point is not strictly in front of the camera.
    pub fn project(&self, p: &Point3<f64>) -> Option<(f64, f64, f64)> {
        let v = self.to_view(p);
        if v.z >= -1e-12 {
            return None;
        }
        let depth = -v.z;
        let (w, h) = (self.resolution.0 as f64, self.resolution.1 as f64);
        let tan_half = (self.fov_y_deg.to_radians() * 0.5).tan();
        let aspect = w / h;
        let ndc_x = v.x / (depth * tan_half * aspect);
        let ndc_y = v.y / (depth * tan_half);
        let px = (ndc_x + 1.0) * 0.5 * w;
        let py = (1.0 - ndc_y) * 0.5 * h;
        Some((px, py, depth))
    }
}

/// The six standard views: azimuths 0..300 in 60° steps, elevations
/// alternating between 20° and -10°.
pub fn default_view_set() -> Vec<Camera> {
    view_set(DEFAULT_RADIUS, DEFAULT_FOV_Y_DEG, DEFAULT_RESOLUTION)
}

pub fn view_set(radius: f64, fov_y_deg: f64, resolution: (usize, usize)) -> Vec<Camera> {
    (0..6)
        .map(|k| {
            let azimuth = 60.0 * k as f64;
            let elevation = if k % 2 == 0 { 20.0 } else { -10.0 };
            Camera::new(elevation, azimuth, radius, fov_y_deg, resolution)
                .expect("default view parameters are valid")
        })
        .collect()
}

/// Four orthogonal equatorial views (azimuths 0/90/180/270, elevation 0).
pub fn orthogonal_view_set(radius: f64, fov_y_deg: f64, resolution: (usize, usize)) -> Vec<Camera> {
    [0.0, 90.0, 180.0, 270.0]
        .iter()
        .map(|&az| {
            Camera::new(0.0, az, radius, fov_y_deg, resolution)
                .expect("orthogonal view parameters are valid")
        })
        .collect()
}

/// Single frontal view (azimuth 0, elevation 0).
pub fn frontal_view(radius: f64, fov_y_deg: f64, resolution: (usize, usize)) -> Camera {
    Camera::new(0.0, 0.0, radius, fov_y_deg, resolution).expect("frontal view parameters are valid")
}
