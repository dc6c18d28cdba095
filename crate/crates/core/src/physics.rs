//! Real-world scale restoration and physical property estimation.
//!
//! Estimators are pluggable: a config override returning fixed values, an
//! offline bounding-box heuristic so the pipeline runs with no network, or
//! an HTTP client talking to a multimodal service (see `services`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::img::ColorImage;
use crate::mesh::{bounding_box, scale_uniform, TriangleMesh};

/// Sanity band for static friction coefficients.
pub const FRICTION_RANGE: (f64, f64) = (0.0, 2.0);

/// Physical metadata attached to an asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalProperties {
    pub height_m: f64,
    pub mass_kg: f64,
    pub friction: f64,
    pub category: String,
    pub description: String,
}

impl PhysicalProperties {
    pub fn validate(&self) -> Result<()> {
        if !(self.height_m.is_finite() && self.height_m > 0.0) {
            return Err(Error::service(
                "estimator",
                format!("implausible height {}", self.height_m),
            ));
        }
        if !(self.mass_kg.is_finite() && self.mass_kg > 0.0) {
            return Err(Error::service(
                "estimator",
                format!("implausible mass {}", self.mass_kg),
            ));
        }
        if !(self.friction.is_finite()
            && (FRICTION_RANGE.0..=FRICTION_RANGE.1).contains(&self.friction))
        {
            return Err(Error::service(
                "estimator",
                format!("implausible friction {}", self.friction),
            ));
        }
        if self.category.trim().is_empty() {
            return Err(Error::service("estimator", "empty category".to_string()));
        }
        Ok(())
    }
}

/// What gets sent to an estimator: one frontal render for height, four
/// orthographic renders for full properties, plus an optional text hint.
#[derive(Debug, Clone)]
pub struct EstimatorRequest {
    pub renders: Vec<ColorImage>,
    pub user_context: Option<String>,
}

impl EstimatorRequest {
    pub fn new(renders: Vec<ColorImage>, user_context: Option<String>) -> Result<Self> {
        if renders.len() != 1 && renders.len() != 4 {
            return Err(Error::InvalidParameter(format!(
                "estimator requests carry 1 or 4 renders, got {}",
                renders.len()
            )));
        }
        Ok(Self {
            renders,
            user_context,
        })
    }
}

/// Structured estimator response; fields are present when requested.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResponse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_kg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub friction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

pub trait PropertyEstimator: Send + Sync {
    /// Estimate the requested fields for the rendered asset.
    fn estimate(&self, request: &EstimatorRequest, fields: &[&str]) -> Result<EstimatorResponse>;
}

/// Returns a configured response verbatim, ignoring the renders.
pub struct OverrideEstimator(pub EstimatorResponse);

impl PropertyEstimator for OverrideEstimator {
    fn estimate(&self, _request: &EstimatorRequest, _fields: &[&str]) -> Result<EstimatorResponse> {
        Ok(self.0.clone())
    }
}

/// Offline fallback: height is the current bounding-box Z extent (scale
/// factor 1), mass is a fixed density times the bounding-box volume. The
/// values are placeholders that keep the pipeline running with no network;
/// they are never claimed accurate.
pub struct OfflineHeuristicEstimator {
    pub extents: [f64; 3],
    pub density_kg_m3: f64,
    pub friction: f64,
}

impl OfflineHeuristicEstimator {
    pub const DEFAULT_DENSITY: f64 = 300.0;
    pub const DEFAULT_FRICTION: f64 = 0.5;

    pub fn for_mesh(mesh: &TriangleMesh, density_kg_m3: f64, friction: f64) -> Result<Self> {
        let (min, max) = bounding_box(mesh)?;
        Ok(Self {
            extents: [max.x - min.x, max.y - min.y, max.z - min.z],
            density_kg_m3,
            friction,
        })
    }
}

impl PropertyEstimator for OfflineHeuristicEstimator {
    fn estimate(&self, _request: &EstimatorRequest, fields: &[&str]) -> Result<EstimatorResponse> {
        let [ex, ey, ez] = self.extents;
        let mut response = EstimatorResponse::default();
        for field in fields {
            match *field {
                "height_m" => response.height_m = Some(ez),
                "mass_kg" => response.mass_kg = Some(self.density_kg_m3 * ex * ey * ez),
                "friction" => response.friction = Some(self.friction),
                "category" => response.category = Some("unknown".to_string()),
                "description" => {
                    response.description = Some(format!(
                        "offline heuristic: {} kg/m^3 over a {:.3}x{:.3}x{:.3} m bounding box",
                        self.density_kg_m3, ex, ey, ez
                    ))
                }
                other => {
                    return Err(Error::service(
                        "estimator",
                        format!("unknown field '{other}'"),
                    ))
                }
            }
        }
        Ok(response)
    }
}

/// Estimate the asset's real-world height from a single frontal render.
pub fn estimate_height(
    request: &EstimatorRequest,
    estimator: &dyn PropertyEstimator,
) -> Result<f64> {
    if request.renders.len() != 1 {
        return Err(Error::InvalidParameter(format!(
            "height estimation takes 1 frontal render, got {}",
            request.renders.len()
        )));
    }
    let response = estimator.estimate(request, &["height_m"])?;
    let height = response
        .height_m
        .ok_or_else(|| Error::service("estimator", "missing fields: height_m"))?;
    if !(height.is_finite() && height > 0.0) {
        return Err(Error::service(
            "estimator",
            format!("implausible height {height}"),
        ));
    }
    Ok(height)
}

/// Uniformly rescale the mesh so its bounding-box Z extent equals `height`.
/// Returns the scaled mesh and the factor applied.
pub fn restore_scale(mesh: &TriangleMesh, height: f64) -> Result<(TriangleMesh, f64)> {
    if !(height.is_finite() && height > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "target height must be positive, got {height}"
        )));
    }
    let (min, max) = bounding_box(mesh)?;
    let z_extent = max.z - min.z;
    if z_extent < 1e-12 {
        return Err(Error::InvalidMesh(
            "mesh has zero Z extent; cannot restore scale from height".into(),
        ));
    }
    let factor = height / z_extent;
    Ok((scale_uniform(mesh, factor)?, factor))
}

/// Estimate the full property record from four orthographic renders.
pub fn estimate_properties(
    request: &EstimatorRequest,
    estimator: &dyn PropertyEstimator,
) -> Result<PhysicalProperties> {
    if request.renders.len() != 4 {
        return Err(Error::InvalidParameter(format!(
            "property estimation takes 4 orthographic renders, got {}",
            request.renders.len()
        )));
    }
    let fields = ["height_m", "mass_kg", "friction", "category", "description"];
    let response = estimator.estimate(request, &fields)?;

    let mut missing = Vec::new();
    if response.height_m.is_none() {
        missing.push("height_m");
    }
    if response.mass_kg.is_none() {
        missing.push("mass_kg");
    }
    if response.friction.is_none() {
        missing.push("friction");
    }
    if response.category.is_none() {
        missing.push("category");
    }
    if response.description.is_none() {
        missing.push("description");
    }
    if !missing.is_empty() {
        return Err(Error::service(
            "estimator",
            format!("missing fields: {}", missing.join(", ")),
        ));
    }

    let properties = PhysicalProperties {
        height_m: response.height_m.unwrap(),
        mass_kg: response.mass_kg.unwrap(),
        friction: response.friction.unwrap(),
        category: response.category.unwrap(),
        description: response.description.unwrap(),
    };
    properties.validate()?;
    Ok(properties)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes::{box_mesh, quad_facing_x, unit_cube};
    use approx::assert_relative_eq;

    fn frontal_request() -> EstimatorRequest {
        EstimatorRequest::new(vec![ColorImage::new(4, 4)], None).unwrap()
    }

    fn quad_request() -> EstimatorRequest {
        EstimatorRequest::new(vec![ColorImage::new(4, 4); 4], Some("a box".into())).unwrap()
    }

    #[test]
    fn request_render_count_enforced() {
        assert!(EstimatorRequest::new(vec![], None).is_err());
        assert!(EstimatorRequest::new(vec![ColorImage::new(2, 2); 2], None).is_err());
        assert!(EstimatorRequest::new(vec![ColorImage::new(2, 2); 4], None).is_ok());
    }

    #[test]
    fn override_estimator_passes_height_through() {
        let estimator = OverrideEstimator(EstimatorResponse {
            height_m: Some(0.32),
            ..Default::default()
        });
        assert_eq!(estimate_height(&frontal_request(), &estimator).unwrap(), 0.32);
    }

    #[test]
    fn negative_height_from_estimator_rejected() {
        let estimator = OverrideEstimator(EstimatorResponse {
            height_m: Some(-1.0),
            ..Default::default()
        });
        let err = estimate_height(&frontal_request(), &estimator).unwrap_err();
        assert!(err.to_string().contains("implausible height"));
    }

    #[test]
    fn restore_scale_cases() {
        // Extents (1, 1, 2), target 0.5 -> factor 0.25.
        let tall = box_mesh(1.0, 1.0, 2.0);
        let (scaled, factor) = restore_scale(&tall, 0.5).unwrap();
        assert_relative_eq!(factor, 0.25, epsilon = 1e-12);
        let (min, max) = bounding_box(&scaled).unwrap();
        assert_relative_eq!(max.z - min.z, 0.5, epsilon = 1e-9);
        assert_relative_eq!(max.x - min.x, 0.25, epsilon = 1e-9);
        assert_relative_eq!(max.y - min.y, 0.25, epsilon = 1e-9);

        // Target equals current height -> identity.
        let (_, factor) = restore_scale(&unit_cube(), 1.0).unwrap();
        assert_relative_eq!(factor, 1.0, epsilon = 1e-12);

        // Extents (0.1, 0.2, 0.4), target 1.2 -> factor 3.
        let small = box_mesh(0.1, 0.2, 0.4);
        let (_, factor) = restore_scale(&small, 1.2).unwrap();
        assert_relative_eq!(factor, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn restore_scale_is_idempotent_at_target() {
        let (scaled, _) = restore_scale(&box_mesh(0.3, 0.7, 1.9), 0.42).unwrap();
        let (_, second_factor) = restore_scale(&scaled, 0.42).unwrap();
        assert!((second_factor - 1.0).abs() < 1e-9);
    }

    #[test]
    fn restore_scale_preserves_extent_ratios() {
        let mesh = box_mesh(0.2, 0.5, 1.3);
        let (before_min, before_max) = bounding_box(&mesh).unwrap();
        let before = before_max - before_min;
        let (scaled, _) = restore_scale(&mesh, 2.6).unwrap();
        let (after_min, after_max) = bounding_box(&scaled).unwrap();
        let after = after_max - after_min;
        assert!((after.x / after.y - before.x / before.y).abs() < 1e-9);
        assert!((after.y / after.z - before.y / before.z).abs() < 1e-9);
    }

    #[test]
    fn flat_mesh_refused() {
        // A quad in the XY plane has zero Z extent.
        let mut flat = quad_facing_x(0.5);
        for v in &mut flat.vertices {
            v.z = 0.0;
        }
        assert!(restore_scale(&flat, 1.0).is_err());
    }

    #[test]
    fn offline_heuristic_mass_from_bounding_box() {
        let estimator = OfflineHeuristicEstimator::for_mesh(
            &box_mesh(0.1, 0.1, 0.1),
            OfflineHeuristicEstimator::DEFAULT_DENSITY,
            OfflineHeuristicEstimator::DEFAULT_FRICTION,
        )
        .unwrap();
        let props = estimate_properties(&quad_request(), &estimator).unwrap();
        assert_relative_eq!(props.mass_kg, 0.3, epsilon = 1e-9);
        assert_eq!(props.friction, 0.5);
        assert_eq!(props.category, "unknown");
        assert!(!props.description.is_empty());
    }

    #[test]
    fn override_full_record_returned_verbatim() {
        let record = EstimatorResponse {
            height_m: Some(0.3),
            mass_kg: Some(1.0),
            friction: Some(0.6),
            category: Some("box".into()),
            description: Some("a cardboard box".into()),
        };
        let props =
            estimate_properties(&quad_request(), &OverrideEstimator(record)).unwrap();
        assert_eq!(props.height_m, 0.3);
        assert_eq!(props.mass_kg, 1.0);
        assert_eq!(props.friction, 0.6);
        assert_eq!(props.category, "box");
    }

    #[test]
    fn implausible_friction_rejected() {
        let record = EstimatorResponse {
            height_m: Some(0.3),
            mass_kg: Some(1.0),
            friction: Some(5.0),
            category: Some("box".into()),
            description: Some("x".into()),
        };
        let err = estimate_properties(&quad_request(), &OverrideEstimator(record)).unwrap_err();
        assert!(err.to_string().contains("implausible friction"));
    }

    #[test]
    fn missing_fields_are_listed() {
        let record = EstimatorResponse {
            height_m: Some(0.3),
            ..Default::default()
        };
        let err = estimate_properties(&quad_request(), &OverrideEstimator(record)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("mass_kg"));
        assert!(msg.contains("friction"));
        assert!(msg.contains("category"));
        assert!(msg.contains("description"));
        assert!(!msg.contains("height_m"));
    }
}
