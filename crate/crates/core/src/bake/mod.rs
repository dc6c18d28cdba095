//! Multi-view texture baking: delight and super-resolution hooks,
//! per-view confidence, scatter back-projection, confidence-weighted
//! fusion and hole inpainting.
//!
//! The accumulators are fixed-point integers (2⁻⁴⁰ quanta) so scatter order
//! never changes the result: permuting views or splitting work across
//! atlases is bit-identical by construction.

mod canny;
mod inpaint;

pub use canny::detect_depth_edges;
pub use inpaint::inpaint_holes;

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::img::ColorImage;
use crate::mesh::TriangleMesh;
use crate::raster::{render_geometry_buffers, GeometryBuffers};

/// Pluggable image-to-image transform: identity by default, deterministic
/// local stubs in tests, HTTP clients in service deployments.
///
/// The wire contract is PNG bytes plus a transform name and JSON
/// parameters; in-process implementations work on decoded images directly.
pub trait ImageTransformService: Send + Sync {
    fn transform(
        &self,
        transform: &str,
        params: &serde_json::Value,
        image: &ColorImage,
    ) -> Result<ColorImage>;
}

/// Returns inputs unchanged. The default for both hooks.
pub struct IdentityTransform;

impl ImageTransformService for IdentityTransform {
    fn transform(
        &self,
        _transform: &str,
        _params: &serde_json::Value,
        image: &ColorImage,
    ) -> Result<ColorImage> {
        Ok(image.clone())
    }
}

/// Wrap a closure as a transform service (deterministic local stubs).
pub struct FnTransform<F>(pub F);

impl<F> ImageTransformService for FnTransform<F>
where
    F: Fn(&str, &serde_json::Value, &ColorImage) -> Result<ColorImage> + Send + Sync,
{
    fn transform(
        &self,
        transform: &str,
        params: &serde_json::Value,
        image: &ColorImage,
    ) -> Result<ColorImage> {
        (self.0)(transform, params, image)
    }
}

/// Baking knobs. Defaults follow the algorithm's stated values; Canny
/// parameters are exposed because the algorithm names the detector without
/// fixing them.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BakeParams {
    /// Confidence angle threshold in degrees; dot products below
    /// cos(threshold) are zeroed (strictly below — equality survives).
    pub angle_threshold_deg: f64,
    /// (width, height) of the output texture.
    pub texture_size: (usize, usize),
    /// Per-view non-negative weights; empty means all 1.0.
    pub view_weights: Vec<f64>,
    /// Fusion regularizer in T / (C + ε).
    pub epsilon: f64,
    /// (horizontal, vertical) super-resolution factors.
    pub upscale: (usize, usize),
    pub canny_sigma: f64,
    pub canny_low: f64,
    pub canny_high: f64,
}

impl Default for BakeParams {
    fn default() -> Self {
        Self {
            angle_threshold_deg: 70.0,
            texture_size: (2048, 2048),
            view_weights: Vec::new(),
            epsilon: 1e-8,
            upscale: (1, 1),
            canny_sigma: 1.0,
            canny_low: 0.05,
            canny_high: 0.15,
        }
    }
}

impl BakeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.angle_threshold_deg > 0.0 && self.angle_threshold_deg < 90.0) {
            return Err(Error::InvalidParameter(format!(
                "angle threshold must be in (0, 90) degrees, got {}",
                self.angle_threshold_deg
            )));
        }
        if self.texture_size.0 < 1 || self.texture_size.1 < 1 {
            return Err(Error::InvalidParameter(
                "texture dimensions must be >= 1".into(),
            ));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.view_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter(
                "view weights must be finite and >= 0".into(),
            ));
        }
        if self.upscale.0 < 1 || self.upscale.1 < 1 {
            return Err(Error::InvalidParameter(
                "upscale factors must be >= 1".into(),
            ));
        }
        if !(self.canny_sigma > 0.0) || self.canny_low < 0.0 || self.canny_high < self.canny_low {
            return Err(Error::InvalidParameter(
                "canny parameters must satisfy sigma > 0, 0 <= low <= high".into(),
            ));
        }
        Ok(())
    }

    /// Per-view weights resolved against the actual view count.
    pub fn resolved_weights(&self, views: usize) -> Result<Vec<f64>> {
        if self.view_weights.is_empty() {
            Ok(vec![1.0; views])
        } else if self.view_weights.len() == views {
            Ok(self.view_weights.clone())
        } else {
            Err(Error::InvalidParameter(format!(
                "{} view weights for {} views",
                self.view_weights.len(),
                views
            )))
        }
    }

    pub fn cos_threshold(&self) -> f64 {
        self.angle_threshold_deg.to_radians().cos()
    }
}

/// Fixed-point quantum: 2⁻⁴⁰ ≈ 9.1e-13 of accumulated color/confidence.
const FIXED_SCALE: f64 = (1u64 << 40) as f64;

#[inline]
fn to_fixed(x: f64) -> i128 {
    (x * FIXED_SCALE).round() as i128
}

#[inline]
fn from_fixed(v: i128) -> f64 {
    v as f64 / FIXED_SCALE
}

/// Accumulating color and confidence maps (T and C).
///
/// Accumulation is exact integer addition, so scatter order is irrelevant
/// and concurrent per-view atlases merge to the same bits.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureAtlas {
    width: usize,
    height: usize,
    color: Vec<[i128; 3]>,
    confidence: Vec<i128>,
}

impl TextureAtlas {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            color: vec![[0; 3]; width * height],
            confidence: vec![0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn color_accum(&self, x: usize, y: usize) -> [f64; 3] {
        let c = self.color[y * self.width + x];
        [from_fixed(c[0]), from_fixed(c[1]), from_fixed(c[2])]
    }

    pub fn confidence_accum(&self, x: usize, y: usize) -> f64 {
        from_fixed(self.confidence[y * self.width + x])
    }

    /// Merge another atlas of the same dimensions (exact, order-free).
    pub fn merge(&mut self, other: &TextureAtlas) -> Result<()> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::DimensionMismatch(
                "atlas dimensions differ".into(),
            ));
        }
        for i in 0..self.color.len() {
            for k in 0..3 {
                self.color[i][k] += other.color[i][k];
            }
            self.confidence[i] += other.confidence[i];
        }
        Ok(())
    }
}

/// Tile images into one vertical (N·H)×W grid, transform in a single
/// service call, split back. Identity services return inputs unchanged.
pub fn delight_images(
    images: &[ColorImage],
    service: &dyn ImageTransformService,
) -> Result<Vec<ColorImage>> {
    if images.is_empty() {
        return Err(Error::InvalidParameter("no images to delight".into()));
    }
    let (w, h) = images[0].dimensions();
    for (i, img) in images.iter().enumerate() {
        if img.dimensions() != (w, h) {
            return Err(Error::DimensionMismatch(format!(
                "image {i} is {}x{}, expected {w}x{h}",
                img.width(),
                img.height()
            )));
        }
    }

    let grid = ColorImage::from_fn(w, h * images.len(), |x, y| {
        images[y / h].get(x, y % h)
    });
    let out_grid = service.transform("delight", &serde_json::json!({}), &grid)?;
    if out_grid.dimensions() != grid.dimensions() {
        return Err(Error::service(
            "delight",
            format!(
                "returned {}x{}, expected {}x{}",
                out_grid.width(),
                out_grid.height(),
                grid.width(),
                grid.height()
            ),
        ));
    }

    Ok((0..images.len())
        .map(|i| ColorImage::from_fn(w, h, |x, y| out_grid.get(x, i * h + y)))
        .collect())
}

/// Transform each view independently; output dimensions must equal input
/// dimensions times the upscale factors.
pub fn superres_images(
    images: &[ColorImage],
    service: &dyn ImageTransformService,
    upscale: (usize, usize),
) -> Result<Vec<ColorImage>> {
    if upscale.0 < 1 || upscale.1 < 1 {
        return Err(Error::InvalidParameter(
            "upscale factors must be >= 1".into(),
        ));
    }
    let params = serde_json::json!({ "upscale_w": upscale.0, "upscale_h": upscale.1 });
    let mut out = Vec::with_capacity(images.len());
    for (i, img) in images.iter().enumerate() {
        let result = service.transform("superres", &params, img)?;
        let expected = (img.width() * upscale.0, img.height() * upscale.1);
        if result.dimensions() != expected {
            return Err(Error::service(
                "superres",
                format!(
                    "image {i}: returned {}x{}, contract requires {}x{}",
                    result.width(),
                    result.height(),
                    expected.0,
                    expected.1
                ),
            ));
        }
        out.push(result);
    }
    Ok(out)
}

/// Per-pixel confidence: max(0, n_z), zeroed strictly below cos(threshold),
/// zeroed off-mask and on depth edges, scaled by the view weight.
pub fn compute_view_confidence(
    buffers: &GeometryBuffers,
    params: &BakeParams,
    view_weight: f64,
) -> Vec<f64> {
    let edges = detect_depth_edges(
        &buffers.depth,
        &buffers.mask,
        buffers.width(),
        buffers.height(),
        params.canny_sigma,
        params.canny_low,
        params.canny_high,
    );
    let cos_threshold = params.cos_threshold();
    buffers
        .mask
        .iter()
        .zip(buffers.normals.iter())
        .zip(edges.iter())
        .map(|((&mask, normal), &edge)| {
            if !mask || edge {
                return 0.0;
            }
            let c = normal[2].max(0.0);
            if c < cos_threshold {
                0.0
            } else {
                c * view_weight
            }
        })
        .collect()
}

/// Scatter view pixels into the atlas: each pixel with positive confidence
/// adds color × confidence and confidence to the nearest texel of its UV.
pub fn back_project_view(
    image: &ColorImage,
    buffers: &GeometryBuffers,
    confidence: &[f64],
    atlas: &mut TextureAtlas,
) -> Result<()> {
    let (w, h) = image.dimensions();
    if (w, h) != (buffers.width(), buffers.height()) {
        return Err(Error::DimensionMismatch(format!(
            "image is {w}x{h} but buffers are {}x{}",
            buffers.width(),
            buffers.height()
        )));
    }
    if confidence.len() != w * h {
        return Err(Error::DimensionMismatch(
            "confidence map length does not match image".into(),
        ));
    }
    let (tw, th) = (atlas.width, atlas.height);
    for y in 0..h {
        for x in 0..w {
            let idx = y * w + x;
            let conf = confidence[idx];
            if conf <= 0.0 {
                continue;
            }
            let conf_fixed = to_fixed(conf);
            if conf_fixed == 0 {
                continue;
            }
            let [u, v] = buffers.uv[idx];
            let tx = ((u * tw as f64).floor() as isize).clamp(0, tw as isize - 1) as usize;
            let ty = ((v * th as f64).floor() as isize).clamp(0, th as isize - 1) as usize;
            let color = image.get(x, y);
            let t = ty * tw + tx;
            for k in 0..3 {
                atlas.color[t][k] += to_fixed(color[k] * conf);
            }
            atlas.confidence[t] += conf_fixed;
        }
    }
    Ok(())
}

/// Fused texture plus the hole mask (texels no view reached).
#[derive(Debug, Clone, PartialEq)]
pub struct BakedTexture {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[f64; 3]>,
    pub hole_mask: Vec<bool>,
}

impl BakedTexture {
    pub fn to_color_image(&self) -> ColorImage {
        ColorImage::from_fn(self.width, self.height, |x, y| {
            self.pixels[y * self.width + x]
        })
    }

    pub fn hole_fraction(&self) -> f64 {
        if self.hole_mask.is_empty() {
            return 0.0;
        }
        self.hole_mask.iter().filter(|&&h| h).count() as f64 / self.hole_mask.len() as f64
    }
}

/// T / (C + ε), clamped to [0, 1]. Texels with zero confidence become
/// holes (black until [`inpaint_holes`] fills them).
pub fn fuse_texture(atlas: &TextureAtlas, epsilon: f64) -> BakedTexture {
    let mut pixels = Vec::with_capacity(atlas.color.len());
    let mut hole_mask = Vec::with_capacity(atlas.color.len());
    for i in 0..atlas.color.len() {
        let conf = atlas.confidence[i];
        if conf == 0 {
            pixels.push([0.0; 3]);
            hole_mask.push(true);
        } else {
            let denom = from_fixed(conf) + epsilon;
            let c = atlas.color[i];
            pixels.push([
                (from_fixed(c[0]) / denom).clamp(0.0, 1.0),
                (from_fixed(c[1]) / denom).clamp(0.0, 1.0),
                (from_fixed(c[2]) / denom).clamp(0.0, 1.0),
            ]);
            hole_mask.push(false);
        }
    }
    BakedTexture {
        width: atlas.width,
        height: atlas.height,
        pixels,
        hole_mask,
    }
}

/// Run the whole back-projection pipeline: delight, super-resolve,
/// rasterize geometry buffers per view, scatter with confidence weighting,
/// fuse and inpaint.
///
/// Geometry buffers are rendered at each view's post-super-resolution image
/// size; the cameras' own resolution fields are ignored for baking.
pub fn bake_texture(
    mesh: &TriangleMesh,
    images: &[ColorImage],
    cameras: &[Camera],
    params: &BakeParams,
    delight: &dyn ImageTransformService,
    superres: &dyn ImageTransformService,
) -> Result<BakedTexture> {
    params.validate()?;
    if images.len() != cameras.len() {
        return Err(Error::InvalidParameter(format!(
            "{} images for {} cameras",
            images.len(),
            cameras.len()
        )));
    }
    let weights = params.resolved_weights(images.len())?;
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

    let delighted = delight_images(images, delight).map_err(|e| e.in_stage("delight"))?;
    let upscaled = superres_images(&delighted, superres, params.upscale)
        .map_err(|e| e.in_stage("superres"))?;

    let (tw, th) = params.texture_size;
    let mut atlas = TextureAtlas::new(tw, th);
    for (i, image) in upscaled.iter().enumerate() {
        if weights[i] == 0.0 {
            continue;
        }
        let camera = cameras[i].with_resolution(image.width(), image.height());
        let buffers =
            render_geometry_buffers(mesh, &camera).map_err(|e| e.in_stage("rasterize"))?;
        let confidence = compute_view_confidence(&buffers, params, weights[i]);
        back_project_view(image, &buffers, &confidence, &mut atlas)
            .map_err(|e| e.in_stage("backproject"))?;
    }

    Ok(inpaint_holes(&fuse_texture(&atlas, params.epsilon)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{default_view_set, Camera};
    use crate::mesh::shapes::quad_facing_x;
    use crate::raster::GeometryBuffers;
    use std::sync::Mutex;

    fn solid(w: usize, h: usize, c: [f64; 3]) -> ColorImage {
        ColorImage::filled(w, h, c)
    }

    #[test]
    fn delight_identity_returns_inputs_unchanged() {
        let images = vec![solid(8, 8, [0.2, 0.5, 0.9]), solid(8, 8, [0.1, 0.1, 0.1])];
        let out = delight_images(&images, &IdentityTransform).unwrap();
        assert_eq!(out, images);
    }

    #[test]
    fn delight_tiles_views_into_vertical_grid() {
        let seen = Mutex::new(None);
        let service = FnTransform(|_: &str, _: &serde_json::Value, img: &ColorImage| {
            *seen.lock().unwrap() = Some(img.dimensions());
            Ok(img.clone())
        });
        let images = vec![solid(64, 64, [0.5; 3]); 3];
        delight_images(&images, &service).unwrap();
        assert_eq!(*seen.lock().unwrap(), Some((64, 192)));
    }

    #[test]
    fn delight_grid_splits_back_per_view() {
        // Service paints row bands so we can verify the split.
        let service = FnTransform(|_: &str, _: &serde_json::Value, img: &ColorImage| {
            Ok(ColorImage::from_fn(img.width(), img.height(), |_, y| {
                let band = y / 4;
                [band as f64 / 3.0, 0.0, 0.0]
            }))
        });
        let images = vec![solid(4, 4, [0.0; 3]); 3];
        let out = delight_images(&images, &service).unwrap();
        assert_eq!(out.len(), 3);
        for (i, img) in out.iter().enumerate() {
            assert_eq!(img.get(0, 0)[0], i as f64 / 3.0);
        }
    }

    #[test]
    fn delight_darken_stub_halves_pixels() {
        let service = FnTransform(|_: &str, _: &serde_json::Value, img: &ColorImage| {
            Ok(ColorImage::from_fn(img.width(), img.height(), |x, y| {
                let c = img.get(x, y);
                [c[0] * 0.5, c[1] * 0.5, c[2] * 0.5]
            }))
        });
        let images = vec![solid(4, 4, [0.8, 0.4, 0.2])];
        let out = delight_images(&images, &service).unwrap();
        assert_eq!(out[0].get(2, 2), [0.4, 0.2, 0.1]);
    }

    #[test]
    fn delight_rejects_mixed_dimensions() {
        let images = vec![solid(4, 4, [0.0; 3]), solid(8, 4, [0.0; 3])];
        assert!(matches!(
            delight_images(&images, &IdentityTransform),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn superres_identity_at_unit_scale() {
        let images = vec![solid(8, 8, [0.3; 3])];
        let out = superres_images(&images, &IdentityTransform, (1, 1)).unwrap();
        assert_eq!(out, images);
    }

    #[test]
    fn superres_four_x_hits_2048() {
        let nearest = FnTransform(|_: &str, p: &serde_json::Value, img: &ColorImage| {
            let fx = p["upscale_w"].as_u64().unwrap() as usize;
            let fy = p["upscale_h"].as_u64().unwrap() as usize;
            Ok(ColorImage::from_fn(
                img.width() * fx,
                img.height() * fy,
                |x, y| img.get(x / fx, y / fy),
            ))
        });
        let images = vec![solid(512, 512, [0.6; 3])];
        let out = superres_images(&images, &nearest, (4, 4)).unwrap();
        assert_eq!(out[0].dimensions(), (2048, 2048));
    }

    #[test]
    fn superres_nearest_stub_expands_checker() {
        let mut checker = ColorImage::new(2, 2);
        checker.set(0, 0, [1.0; 3]);
        checker.set(1, 1, [1.0; 3]);
        let nearest = FnTransform(|_: &str, p: &serde_json::Value, img: &ColorImage| {
            let fx = p["upscale_w"].as_u64().unwrap() as usize;
            let fy = p["upscale_h"].as_u64().unwrap() as usize;
            Ok(ColorImage::from_fn(
                img.width() * fx,
                img.height() * fy,
                |x, y| img.get(x / fx, y / fy),
            ))
        });
        let out = superres_images(&[checker], &nearest, (2, 2)).unwrap();
        let img = &out[0];
        assert_eq!(img.dimensions(), (4, 4));
        assert_eq!(img.get(0, 0), [1.0; 3]);
        assert_eq!(img.get(1, 1), [1.0; 3]);
        assert_eq!(img.get(2, 0), [0.0; 3]);
        assert_eq!(img.get(3, 3), [1.0; 3]);
    }

    #[test]
    fn superres_dimension_contract_enforced() {
        let broken = FnTransform(|_: &str, _: &serde_json::Value, img: &ColorImage| {
            Ok(img.clone())
        });
        let images = vec![solid(8, 8, [0.0; 3])];
        let err = superres_images(&images, &broken, (2, 2)).unwrap_err();
        assert!(matches!(err, Error::Service { .. }));
    }

    /// Synthetic single-pixel buffers for confidence/scatter arithmetic.
    fn buffers_1px(normal: [f64; 3], uv: [f64; 2]) -> GeometryBuffers {
        GeometryBuffers::from_parts(
            1,
            1,
            vec![true],
            vec![0.0],
            vec![normal],
            vec![uv],
            Some((2.0, 2.0)),
        )
        .unwrap()
    }

    #[test]
    fn confidence_facing_pixel_is_one() {
        let buffers = buffers_1px([0.0, 0.0, 1.0], [0.5, 0.5]);
        let conf = compute_view_confidence(&buffers, &BakeParams::default(), 1.0);
        assert_eq!(conf, vec![1.0]);
    }

    #[test]
    fn confidence_at_exact_threshold_survives() {
        let cos70 = 70.0f64.to_radians().cos();
        let sin70 = 70.0f64.to_radians().sin();
        let buffers = buffers_1px([sin70, 0.0, cos70], [0.5, 0.5]);
        let conf = compute_view_confidence(&buffers, &BakeParams::default(), 1.0);
        assert!((conf[0] - cos70).abs() < 1e-12, "kept at {}", conf[0]);
        assert!((conf[0] - 0.342).abs() < 1e-3);
    }

    #[test]
    fn confidence_beyond_threshold_zeroed() {
        let cos75 = 75.0f64.to_radians().cos();
        let sin75 = 75.0f64.to_radians().sin();
        let buffers = buffers_1px([sin75, 0.0, cos75], [0.5, 0.5]);
        let conf = compute_view_confidence(&buffers, &BakeParams::default(), 1.0);
        assert_eq!(conf, vec![0.0]);
    }

    #[test]
    fn confidence_scaled_by_view_weight_and_masked() {
        let buffers = buffers_1px([0.0, 0.0, 1.0], [0.5, 0.5]);
        let conf = compute_view_confidence(&buffers, &BakeParams::default(), 2.5);
        assert_eq!(conf, vec![2.5]);

        let off = GeometryBuffers::from_parts(
            1,
            1,
            vec![false],
            vec![0.0],
            vec![[0.0; 3]],
            vec![[0.0; 2]],
            None,
        )
        .unwrap();
        let conf = compute_view_confidence(&off, &BakeParams::default(), 1.0);
        assert_eq!(conf, vec![0.0]);
    }

    #[test]
    fn back_project_zero_confidence_leaves_atlas_unchanged() {
        let mut atlas = TextureAtlas::new(4, 4);
        let buffers = buffers_1px([0.0, 0.0, 1.0], [0.5, 0.5]);
        let img = solid(1, 1, [1.0, 1.0, 1.0]);
        back_project_view(&img, &buffers, &[0.0], &mut atlas).unwrap();
        assert_eq!(atlas, TextureAtlas::new(4, 4));
    }

    #[test]
    fn back_project_single_pixel_arithmetic() {
        let mut atlas = TextureAtlas::new(4, 4);
        let buffers = buffers_1px([0.0, 0.0, 1.0], [0.6, 0.3]);
        let img = solid(1, 1, [0.4, 0.4, 0.4]);
        back_project_view(&img, &buffers, &[0.5], &mut atlas).unwrap();
        // uv (0.6, 0.3) on a 4x4 atlas lands on texel (2, 1).
        let c = atlas.color_accum(2, 1);
        for k in 0..3 {
            assert!((c[k] - 0.2).abs() < 1e-9);
        }
        assert!((atlas.confidence_accum(2, 1) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn back_project_accumulates_additively() {
        let mut atlas = TextureAtlas::new(2, 2);
        let buffers = buffers_1px([0.0, 0.0, 1.0], [0.1, 0.1]);
        back_project_view(&solid(1, 1, [0.2; 3]), &buffers, &[1.0], &mut atlas).unwrap();
        back_project_view(&solid(1, 1, [0.8; 3]), &buffers, &[3.0], &mut atlas).unwrap();
        let c = atlas.color_accum(0, 0);
        for k in 0..3 {
            assert!((c[k] - 2.6).abs() < 1e-9, "got {}", c[k]);
        }
        assert!((atlas.confidence_accum(0, 0) - 4.0).abs() < 1e-9);

        let fused = fuse_texture(&atlas, 1e-8);
        for k in 0..3 {
            assert!((fused.pixels[0][k] - 0.65).abs() < 1e-6);
        }
        assert!(!fused.hole_mask[0]);
    }

    #[test]
    fn back_project_dimension_mismatch() {
        let mut atlas = TextureAtlas::new(2, 2);
        let buffers = buffers_1px([0.0, 0.0, 1.0], [0.1, 0.1]);
        let img = solid(2, 2, [0.0; 3]);
        assert!(back_project_view(&img, &buffers, &[1.0; 4], &mut atlas).is_err());
    }

    #[test]
    fn fuse_marks_holes_and_preserves_single_contribution() {
        let mut atlas = TextureAtlas::new(2, 1);
        let buffers = buffers_1px([0.0, 0.0, 1.0], [0.0, 0.0]);
        let c = [0.25, 0.5, 0.75];
        back_project_view(&solid(1, 1, c), &buffers, &[1.0], &mut atlas).unwrap();
        let fused = fuse_texture(&atlas, 1e-8);
        assert!(!fused.hole_mask[0]);
        assert!(fused.hole_mask[1]);
        assert_eq!(fused.pixels[1], [0.0; 3]);
        for k in 0..3 {
            assert!((fused.pixels[0][k] - c[k]).abs() < 1e-7);
        }
    }

    #[test]
    fn merged_per_view_atlases_match_serial_accumulation() {
        let buffers = buffers_1px([0.0, 0.0, 1.0], [0.7, 0.7]);
        let views = [([0.9, 0.1, 0.3], 0.8), ([0.2, 0.6, 0.4], 1.7)];

        let mut serial = TextureAtlas::new(4, 4);
        for (color, weight) in views {
            back_project_view(&solid(1, 1, color), &buffers, &[weight], &mut serial).unwrap();
        }

        let mut merged = TextureAtlas::new(4, 4);
        for (color, weight) in views {
            let mut private = TextureAtlas::new(4, 4);
            back_project_view(&solid(1, 1, color), &buffers, &[weight], &mut private).unwrap();
            merged.merge(&private).unwrap();
        }
        assert_eq!(serial, merged);
    }

    fn bake_quad(
        images: &[ColorImage],
        cameras: &[Camera],
        params: &BakeParams,
    ) -> BakedTexture {
        bake_texture(
            &quad_facing_x(0.5),
            images,
            cameras,
            params,
            &IdentityTransform,
            &IdentityTransform,
        )
        .unwrap()
    }

    #[test]
    fn solid_green_six_views_bakes_green() {
        let cameras = default_view_set();
        let green = [0.0, 1.0, 0.0];
        let images: Vec<ColorImage> = cameras.iter().map(|_| solid(128, 128, green)).collect();
        let params = BakeParams {
            texture_size: (64, 64),
            ..BakeParams::default()
        };
        let baked = bake_quad(&images, &cameras, &params);
        let mut covered = 0;
        for (px, &hole) in baked.pixels.iter().zip(baked.hole_mask.iter()) {
            if !hole {
                covered += 1;
                for k in 0..3 {
                    assert!(
                        (px[k] - green[k]).abs() <= 1.0 / 255.0,
                        "channel {k} = {}",
                        px[k]
                    );
                }
            }
        }
        assert!(covered > 0, "some texels must receive contributions");
    }

    #[test]
    fn view_permutation_is_bit_identical() {
        let cameras = default_view_set();
        let images: Vec<ColorImage> = (0..6)
            .map(|i| solid(96, 96, [i as f64 / 6.0, 0.5, 1.0 - i as f64 / 6.0]))
            .collect();
        let params = BakeParams {
            texture_size: (64, 64),
            ..BakeParams::default()
        };
        let forward = bake_quad(&images, &cameras, &params);

        let rev_images: Vec<ColorImage> = images.iter().rev().cloned().collect();
        let rev_cameras: Vec<Camera> = cameras.iter().rev().cloned().collect();
        let reversed = bake_quad(&rev_images, &rev_cameras, &params);

        assert_eq!(forward.hole_mask, reversed.hole_mask);
        for (a, b) in forward.pixels.iter().zip(reversed.pixels.iter()) {
            for k in 0..3 {
                assert_eq!(a[k].to_bits(), b[k].to_bits());
            }
        }
    }

    #[test]
    fn zero_weight_view_elimination_is_exact() {
        let cameras = default_view_set();
        let images: Vec<ColorImage> = (0..6)
            .map(|i| solid(96, 96, [1.0 - i as f64 / 8.0, 0.3, 0.9]))
            .collect();
        let mut with_zero = BakeParams {
            texture_size: (64, 64),
            ..BakeParams::default()
        };
        with_zero.view_weights = vec![1.0, 1.0, 0.0, 1.0, 1.0, 1.0];
        let six = bake_quad(&images, &cameras, &with_zero);

        let five_images: Vec<ColorImage> = images
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != 2)
            .map(|(_, im)| im.clone())
            .collect();
        let five_cameras: Vec<Camera> = cameras
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != 2)
            .map(|(_, c)| c.clone())
            .collect();
        let params = BakeParams {
            texture_size: (64, 64),
            ..BakeParams::default()
        };
        let five = bake_quad(&five_images, &five_cameras, &params);

        assert_eq!(six.hole_mask, five.hole_mask);
        for (a, b) in six.pixels.iter().zip(five.pixels.iter()) {
            for k in 0..3 {
                assert_eq!(a[k].to_bits(), b[k].to_bits());
            }
        }
    }

    #[test]
    fn fused_color_stays_in_convex_hull_of_contributions() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let mut atlas = TextureAtlas::new(1, 1);
            let n = rng.gen_range(1..6);
            let mut lo = [1.0f64; 3];
            let mut hi = [0.0f64; 3];
            for _ in 0..n {
                let color = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
                let weight = rng.gen_range(0.05..3.0);
                for k in 0..3 {
                    lo[k] = lo[k].min(color[k]);
                    hi[k] = hi[k].max(color[k]);
                }
                let buffers = buffers_1px([0.0, 0.0, 1.0], [0.0, 0.0]);
                back_project_view(&solid(1, 1, color), &buffers, &[weight], &mut atlas).unwrap();
            }
            let fused = fuse_texture(&atlas, 1e-8);
            for k in 0..3 {
                assert!(fused.pixels[0][k] >= lo[k] - 1e-6);
                assert!(fused.pixels[0][k] <= hi[k] + 1e-6);
            }
        }
    }

    #[test]
    fn weights_length_mismatch_rejected() {
        let params = BakeParams {
            view_weights: vec![1.0, 1.0],
            ..BakeParams::default()
        };
        assert!(params.resolved_weights(3).is_err());
        assert_eq!(params.resolved_weights(2).unwrap(), vec![1.0, 1.0]);
        assert_eq!(
            BakeParams::default().resolved_weights(3).unwrap(),
            vec![1.0; 3]
        );
    }

    #[test]
    fn invalid_params_rejected() {
        for params in [
            BakeParams {
                angle_threshold_deg: 0.0,
                ..BakeParams::default()
            },
            BakeParams {
                angle_threshold_deg: 90.0,
                ..BakeParams::default()
            },
            BakeParams {
                texture_size: (0, 4),
                ..BakeParams::default()
            },
            BakeParams {
                epsilon: 0.0,
                ..BakeParams::default()
            },
            BakeParams {
                view_weights: vec![-1.0],
                ..BakeParams::default()
            },
            BakeParams {
                upscale: (0, 1),
                ..BakeParams::default()
            },
            BakeParams {
                canny_high: 0.01,
                ..BakeParams::default()
            },
        ] {
            assert!(params.validate().is_err(), "{params:?}");
        }
        assert!(BakeParams::default().validate().is_ok());
    }

    #[test]
    fn stage_errors_are_labeled() {
        let failing = FnTransform(|_: &str, _: &serde_json::Value, _: &ColorImage| {
            Err(Error::service("delight", "boom"))
        });
        let cameras = default_view_set();
        let images: Vec<ColorImage> = cameras.iter().map(|_| solid(16, 16, [0.5; 3])).collect();
        let err = bake_texture(
            &quad_facing_x(0.5),
            &images,
            &cameras,
            &BakeParams::default(),
            &failing,
            &IdentityTransform,
        )
        .unwrap_err();
        assert!(err.to_string().contains("stage 'delight'"));
        assert_eq!(err.category(), crate::error::ErrorCategory::Service);
    }
}
