//! Cross-view consistency losses over latent feature maps.
//!
//! Correspondences pair pixel coordinates of the same 3D surface point seen
//! in two views; the spatial loss pulls the gathered feature columns
//! together with an element-wise smooth-L1, the LDM loss is plain MSE over
//! noise residuals, and the total is their weighted sum. Analytic gradients
//! are provided for finite-difference verification.

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::raster::GeometryBuffers;

/// Default depth agreement tolerance (normalized units) for visibility.
pub const DEPTH_CONSISTENCY_TOL: f64 = 1e-3;

/// Paired reference/search pixel coordinates, one entry per matched point.
/// Coordinates are (x, y) in latent-map pixels.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorrespondenceSet {
    pub reference: Vec<[f64; 2]>,
    pub search: Vec<[f64; 2]>,
}

impl CorrespondenceSet {
    pub fn new(reference: Vec<[f64; 2]>, search: Vec<[f64; 2]>) -> Result<Self> {
        if reference.len() != search.len() {
            return Err(Error::InvalidParameter(format!(
                "{} reference coords paired with {} search coords",
                reference.len(),
                search.len()
            )));
        }
        Ok(Self { reference, search })
    }

    pub fn len(&self) -> usize {
        self.reference.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reference.is_empty()
    }

    /// Swap reference and search roles.
    pub fn swapped(&self) -> CorrespondenceSet {
        CorrespondenceSet {
            reference: self.search.clone(),
            search: self.reference.clone(),
        }
    }
}

/// C×H×W feature tensor, row-major within each channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::DimensionMismatch(format!(
                "feature map data length {} != {channels}x{height}x{width}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "feature map contains non-finite values".into(),
            ));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, x, y));
                }
            }
        }
        Self {
            channels,
            height,
            width,
            data,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn index(&self, c: usize, x: usize, y: usize) -> usize {
        (c * self.height + y) * self.width + x
    }

    #[inline]
    pub fn get(&self, c: usize, x: usize, y: usize) -> f64 {
        self.data[self.index(c, x, y)]
    }
}

/// C×N matrix of gathered feature columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub channels: usize,
    pub cols: usize,
    /// Column-major: entry (c, k) at `k * channels + c`.
    pub data: Vec<f64>,
}

impl FeatureMatrix {
    #[inline]
    pub fn get(&self, c: usize, k: usize) -> f64 {
        self.data[k * self.channels + c]
    }
}

fn nearest_pixel(map: &FeatureMap, coord: [f64; 2]) -> Result<(usize, usize)> {
    let x = coord[0].round();
    let y = coord[1].round();
    if x < 0.0 || y < 0.0 || x >= map.width as f64 || y >= map.height as f64 {
        return Err(Error::InvalidParameter(format!(
            "coordinate ({}, {}) outside {}x{} feature map",
            coord[0], coord[1], map.width, map.height
        )));
    }
    Ok((x as usize, y as usize))
}

/// Nearest-pixel gather (no interpolation): column k holds the feature
/// vector at `coords[k]`.
pub fn gather_features(map: &FeatureMap, coords: &[[f64; 2]]) -> Result<FeatureMatrix> {
    let mut data = Vec::with_capacity(coords.len() * map.channels);
    for &coord in coords {
        let (x, y) = nearest_pixel(map, coord)?;
        for c in 0..map.channels {
            data.push(map.get(c, x, y));
        }
    }
    Ok(FeatureMatrix {
        channels: map.channels,
        cols: coords.len(),
        data,
    })
}

/// Target and predicted noise vectors for one diffusion step batch.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePair {
    pub target: Vec<f64>,
    pub predicted: Vec<f64>,
}

impl NoisePair {
    pub fn new(target: Vec<f64>, predicted: Vec<f64>) -> Result<Self> {
        if target.len() != predicted.len() {
            return Err(Error::InvalidParameter(format!(
                "noise arrays differ in length: {} vs {}",
                target.len(),
                predicted.len()
            )));
        }
        if target
            .iter()
            .chain(predicted.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidParameter(
                "noise arrays contain non-finite values".into(),
            ));
        }
        Ok(Self { target, predicted })
    }
}

/// Weights of the total objective. Defaults are 1 and 0.02.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda_ldm: f64,
    pub lambda_spatial: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_ldm: 1.0,
            lambda_spatial: 0.02,
        }
    }
}

impl LossWeights {
    pub fn new(lambda_ldm: f64, lambda_spatial: f64) -> Result<Self> {
        if lambda_ldm < 0.0 || lambda_spatial < 0.0 {
            return Err(Error::InvalidParameter(
                "loss weights must be >= 0".into(),
            ));
        }
        Ok(Self {
            lambda_ldm,
            lambda_spatial,
        })
    }
}

#[inline]
fn smooth_l1(d: f64) -> f64 {
    if d.abs() < 1.0 {
        0.5 * d * d
    } else {
        d.abs() - 0.5
    }
}

#[inline]
fn smooth_l1_grad(d: f64) -> f64 {
    if d.abs() < 1.0 {
        d
    } else {
        d.signum()
    }
}

/// Batch spatial loss: per sample, the mean element-wise smooth-L1 between
/// gathered reference and search features; samples with empty
/// correspondence sets contribute zero. Result is the mean over the batch.
pub fn spatial_loss(batch: &[(FeatureMap, CorrespondenceSet)]) -> Result<f64> {
    Ok(spatial_loss_with_grad_impl(batch, false)?.0)
}

/// Spatial loss plus its gradient with respect to every feature map value
/// (one gradient buffer per sample, laid out like `FeatureMap::values`).
pub fn spatial_loss_with_grad(
    batch: &[(FeatureMap, CorrespondenceSet)],
) -> Result<(f64, Vec<Vec<f64>>)> {
    let (loss, grads) = spatial_loss_with_grad_impl(batch, true)?;
    Ok((loss, grads.expect("gradients requested")))
}

fn spatial_loss_with_grad_impl(
    batch: &[(FeatureMap, CorrespondenceSet)],
    with_grad: bool,
) -> Result<(f64, Option<Vec<Vec<f64>>>)> {
    if batch.is_empty() {
        return Err(Error::InvalidParameter("empty loss batch".into()));
    }
    let b = batch.len() as f64;
    let mut total = 0.0;
    let mut grads: Option<Vec<Vec<f64>>> =
        with_grad.then(|| batch.iter().map(|(m, _)| vec![0.0; m.values().len()]).collect());

    for (sample_idx, (map, set)) in batch.iter().enumerate() {
        if set.is_empty() {
            continue;
        }
        let reference = gather_features(map, &set.reference)?;
        let search = gather_features(map, &set.search)?;
        let elems = (map.channels() * set.len()) as f64;
        let mut sample_loss = 0.0;
        for k in 0..set.len() {
            for c in 0..map.channels() {
                let d = reference.get(c, k) - search.get(c, k);
                sample_loss += smooth_l1(d);
                if let Some(grads) = grads.as_mut() {
                    let g = smooth_l1_grad(d) / (elems * b);
                    let (rx, ry) = nearest_pixel(map, set.reference[k])?;
                    let (sx, sy) = nearest_pixel(map, set.search[k])?;
                    grads[sample_idx][map.index(c, rx, ry)] += g;
                    grads[sample_idx][map.index(c, sx, sy)] -= g;
                }
            }
        }
        total += sample_loss / elems;
    }
    Ok((total / b, grads))
}

/// Mean squared difference between target and predicted noise.
pub fn ldm_loss(pair: &NoisePair) -> f64 {
    if pair.target.is_empty() {
        return 0.0;
    }
    let n = pair.target.len() as f64;
    pair.target
        .iter()
        .zip(pair.predicted.iter())
        .map(|(t, p)| (t - p) * (t - p))
        .sum::<f64>()
        / n
}

/// LDM loss plus gradients with respect to (predicted, target).
pub fn ldm_loss_with_grad(pair: &NoisePair) -> (f64, Vec<f64>, Vec<f64>) {
    let loss = ldm_loss(pair);
    let n = pair.target.len().max(1) as f64;
    let grad_pred: Vec<f64> = pair
        .target
        .iter()
        .zip(pair.predicted.iter())
        .map(|(t, p)| 2.0 * (p - t) / n)
        .collect();
    let grad_target: Vec<f64> = grad_pred.iter().map(|g| -g).collect();
    (loss, grad_pred, grad_target)
}

/// λ_LDM · ldm + λ_spatial · spatial.
pub fn total_loss(ldm: f64, spatial: f64, weights: &LossWeights) -> f64 {
    weights.lambda_ldm * ldm + weights.lambda_spatial * spatial
}

/// Project 3D surface points into two views, keeping pairs visible in both
/// (inside the image, masked, and depth-consistent with the rasterized
/// buffer within [`DEPTH_CONSISTENCY_TOL`]). Output coordinates are divided
/// by `downsample` and floored into latent pixels.
pub fn project_correspondences(
    points: &[Point3<f64>],
    camera_a: &Camera,
    camera_b: &Camera,
    buffers_a: &GeometryBuffers,
    buffers_b: &GeometryBuffers,
    downsample: usize,
) -> Result<CorrespondenceSet> {
    if downsample < 1 {
        return Err(Error::InvalidParameter("downsample must be >= 1".into()));
    }
    let mut reference = Vec::new();
    let mut search = Vec::new();
    for p in points {
        let Some(a) = visible_pixel(p, camera_a, buffers_a) else {
            continue;
        };
        let Some(b) = visible_pixel(p, camera_b, buffers_b) else {
            continue;
        };
        let d = downsample as f64;
        reference.push([(a.0 / d).floor(), (a.1 / d).floor()]);
        search.push([(b.0 / d).floor(), (b.1 / d).floor()]);
    }
    CorrespondenceSet::new(reference, search)
}

fn visible_pixel(
    p: &Point3<f64>,
    camera: &Camera,
    buffers: &GeometryBuffers,
) -> Option<(f64, f64)> {
    let (px, py, depth_cam) = camera.project(p)?;
    if px < 0.0 || py < 0.0 || px >= buffers.width() as f64 || py >= buffers.height() as f64 {
        return None;
    }
    let (x, y) = (px as usize, py as usize);
    let idx = buffers.index(x, y);
    if !buffers.mask[idx] {
        return None;
    }
    let normalized = buffers.normalize_depth(depth_cam)?;
    if (normalized - buffers.depth[idx]).abs() > DEPTH_CONSISTENCY_TOL {
        return None;
    }
    Some((px, py))
}
