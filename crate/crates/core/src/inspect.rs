//! Automated quality inspection: aesthetic, segmentation and geometry
//! checkers behind a common report type, the retry-orchestrating pipeline
//! state machine, and the precision/recall evaluation harness.

use serde::{Deserialize, Serialize};

use crate::camera::{orthogonal_view_set, Camera, DEFAULT_FOV_Y_DEG, DEFAULT_RADIUS};
use crate::error::{Error, Result};
use crate::img::{ColorImage, ImageWithAlpha};
use crate::mesh::{validate_mesh, TriangleMesh};
use crate::raster::render_geometry_buffers;

/// Verdict of one checker over one asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub checker: String,
    pub passed: bool,
    pub score: Option<f64>,
    pub reasons: Vec<String>,
}

impl CheckReport {
    pub fn pass(checker: &str) -> Self {
        Self {
            checker: checker.to_string(),
            passed: true,
            score: None,
            reasons: Vec::new(),
        }
    }

    /// Failed reports always carry at least one reason.
    pub fn fail(checker: &str, reasons: Vec<String>) -> Self {
        let reasons = if reasons.is_empty() {
            vec!["unspecified failure".to_string()]
        } else {
            reasons
        };
        Self {
            checker: checker.to_string(),
            passed: false,
            score: None,
            reasons,
        }
    }

    pub fn with_score(mut self, score: f64) -> Self {
        self.score = Some(score);
        self
    }
}

/// Scalar image scoring service (aesthetic quality).
pub trait ScoreService: Send + Sync {
    fn score(&self, image: &ColorImage) -> Result<f64>;
}

/// Structured pass/fail verdict from a vision-language service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VlmVerdict {
    pub passed: bool,
    #[serde(default)]
    pub reasons: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

pub trait VlmService: Send + Sync {
    fn assess(&self, images: &[ColorImage], context: &str) -> Result<VlmVerdict>;
}

/// Offline aesthetic scorer: mean local gradient-magnitude energy mapped to
/// [0, 10]. Zero for solid colors, higher for richer texture detail.
pub struct OfflineAestheticScorer;

impl OfflineAestheticScorer {
    fn raw_score(image: &ColorImage) -> f64 {
        let (w, h) = image.dimensions();
        if w < 2 || h < 2 {
            return 0.0;
        }
        let lum = |x: usize, y: usize| {
            let [r, g, b] = image.get(x, y);
            0.299 * r + 0.587 * g + 0.114 * b
        };
        let mut sum = 0.0;
        for y in 0..h - 1 {
            for x in 0..w - 1 {
                let dx = lum(x + 1, y) - lum(x, y);
                let dy = lum(x, y + 1) - lum(x, y);
                sum += dx.hypot(dy);
            }
        }
        let mean = sum / ((w - 1) * (h - 1)) as f64;
        // Max forward-difference magnitude on a [0,1] image is sqrt(2).
        10.0 * mean / std::f64::consts::SQRT_2
    }
}

impl ScoreService for OfflineAestheticScorer {
    fn score(&self, image: &ColorImage) -> Result<f64> {
        Ok(Self::raw_score(image))
    }
}

/// Score texture richness and compare against the threshold.
pub fn aesthetic_check(
    image: &ColorImage,
    threshold: f64,
    scorer: &dyn ScoreService,
) -> Result<CheckReport> {
    let score = scorer.score(image)?;
    if score >= threshold {
        Ok(CheckReport::pass("aesthetic").with_score(score))
    } else {
        Ok(CheckReport::fail(
            "aesthetic",
            vec![format!("score {score:.4} below threshold {threshold}")],
        )
        .with_score(score))
    }
}

/// Foreground-extraction quality. With no service, an offline heuristic
/// fails on empty/tiny/overflowing foregrounds and on masks touching two or
/// more image borders (truncation).
pub fn seg_check(
    image: &ImageWithAlpha,
    service: Option<&dyn VlmService>,
) -> Result<CheckReport> {
    if let Some(service) = service {
        let verdict = service.assess(
            std::slice::from_ref(&image.color),
            "Assess foreground segmentation quality: is the subject fully \
             and cleanly extracted?",
        )?;
        return Ok(if verdict.passed {
            CheckReport::pass("imageseg")
        } else {
            CheckReport::fail("imageseg", verdict.reasons)
        });
    }

    let (w, h) = image.color.dimensions();
    let mut foreground = 0usize;
    let mut touched = [false; 4]; // left, right, top, bottom
    for y in 0..h {
        for x in 0..w {
            if image.alpha_at(x, y) > 0.5 {
                foreground += 1;
                if x == 0 {
                    touched[0] = true;
                }
                if x == w - 1 {
                    touched[1] = true;
                }
                if y == 0 {
                    touched[2] = true;
                }
                if y == h - 1 {
                    touched[3] = true;
                }
            }
        }
    }
    let coverage = foreground as f64 / (w * h) as f64;
    let borders = touched.iter().filter(|&&t| t).count();

    let mut reasons = Vec::new();
    if foreground == 0 {
        reasons.push("empty foreground".to_string());
    } else if coverage < 0.05 {
        reasons.push(format!("foreground covers only {:.1}%", coverage * 100.0));
    }
    if coverage > 0.98 {
        reasons.push("foreground covers nearly the entire image".to_string());
    }
    if borders >= 2 {
        reasons.push(format!("border truncation ({borders} borders touched)"));
    }

    Ok(if reasons.is_empty() {
        CheckReport::pass("imageseg").with_score(coverage)
    } else {
        CheckReport::fail("imageseg", reasons).with_score(coverage)
    })
}

/// Limits used by the offline geometry verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoCheckLimits {
    pub max_components: usize,
    pub max_degenerate_fraction: f64,
}

impl Default for GeoCheckLimits {
    fn default() -> Self {
        Self {
            max_components: 3,
            max_degenerate_fraction: 0.01,
        }
    }
}

/// Render shaded normal maps from four orthogonal equatorial views.
pub fn render_orthogonal_normal_views(
    mesh: &TriangleMesh,
    resolution: (usize, usize),
) -> Result<Vec<ColorImage>> {
    let cameras: Vec<Camera> = orthogonal_view_set(DEFAULT_RADIUS, DEFAULT_FOV_Y_DEG, resolution);
    let mut out = Vec::with_capacity(cameras.len());
    for camera in &cameras {
        let buffers = render_geometry_buffers(mesh, camera)?;
        let mut img = ColorImage::new(buffers.width(), buffers.height());
        for y in 0..buffers.height() {
            for x in 0..buffers.width() {
                let idx = buffers.index(x, y);
                if buffers.mask[idx] {
                    let [nx, ny, nz] = buffers.normals[idx];
                    img.set(
                        x,
                        y,
                        [
                            (nx * 0.5 + 0.5).clamp(0.0, 1.0),
                            (ny * 0.5 + 0.5).clamp(0.0, 1.0),
                            (nz * 0.5 + 0.5).clamp(0.0, 1.0),
                        ],
                    );
                }
            }
        }
        out.push(img);
    }
    Ok(out)
}

/// Geometry soundness. Offline verdict from mesh validation statistics;
/// service mode additionally sends four orthogonal renders for assessment.
pub fn geo_check(
    mesh: &TriangleMesh,
    service: Option<&dyn VlmService>,
    limits: &GeoCheckLimits,
) -> Result<CheckReport> {
    if let Some(service) = service {
        let renders = render_orthogonal_normal_views(mesh, (256, 256))?;
        let verdict = service.assess(
            &renders,
            "Assess geometric completeness and plausibility of this asset \
             from four orthogonal views.",
        )?;
        return Ok(if verdict.passed {
            CheckReport::pass("meshgeo")
        } else {
            CheckReport::fail("meshgeo", verdict.reasons)
        });
    }

    let report = validate_mesh(mesh);
    let mut reasons = Vec::new();
    if !report.watertight {
        reasons.push("not watertight".to_string());
    }
    if report.connected_components > limits.max_components {
        reasons.push(format!(
            "too many components ({} > {})",
            report.connected_components, limits.max_components
        ));
    }
    if report.degenerate_face_fraction > limits.max_degenerate_fraction {
        reasons.push(format!(
            "degenerate face fraction {:.4} exceeds {:.4}",
            report.degenerate_face_fraction, limits.max_degenerate_fraction
        ));
    }
    Ok(if reasons.is_empty() {
        CheckReport::pass("meshgeo")
    } else {
        CheckReport::fail("meshgeo", reasons)
    })
}

/// Deterministic seed sequence for retries: base + attempt index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedPolicy {
    pub base_seed: u64,
}

impl SeedPolicy {
    pub fn new(base_seed: u64) -> Self {
        Self { base_seed }
    }

    pub fn seed_for(&self, attempt: usize) -> u64 {
        self.base_seed.wrapping_add(attempt as u64)
    }
}

/// What one stage execution produced.
pub enum StageResult {
    /// Generation ran and the stage's checkers produced these reports.
    Checked(Vec<CheckReport>),
    /// The generator itself failed; recorded as a failed attempt and
    /// retried (unlike checker/service errors, which abort the run).
    Failed(String),
}

/// A named generation step plus its checkers, run once per attempt seed.
pub struct PipelineStage<'a> {
    pub name: String,
    pub run: Box<dyn FnMut(u64) -> Result<StageResult> + 'a>,
}

impl<'a> PipelineStage<'a> {
    pub fn new(name: &str, run: impl FnMut(u64) -> Result<StageResult> + 'a) -> Self {
        Self {
            name: name.to_string(),
            run: Box::new(run),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub seed: u64,
    pub settings: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub reports: Vec<CheckReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageAttempts {
    pub stage: String,
    pub attempts: Vec<AttemptRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Accepted,
    Rejected,
    InProgress,
}

/// Full retry history of one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRun {
    pub stages: Vec<String>,
    pub attempts: Vec<StageAttempts>,
    pub status: RunStatus,
    pub max_retries: u32,
    pub base_seed: u64,
}

/// Run stages in order. A failed check re-runs the same stage with the next
/// seed; exhausting `max_retries` rejects the run with full history.
/// Generator failures are recorded as failed attempts; checker/service
/// errors abort with an error (an outage must never pass an asset).
pub fn run_pipeline(
    mut stages: Vec<PipelineStage>,
    max_retries: u32,
    policy: &SeedPolicy,
) -> Result<PipelineRun> {
    if stages.is_empty() {
        return Err(Error::InvalidParameter("pipeline has no stages".into()));
    }
    let mut run = PipelineRun {
        stages: stages.iter().map(|s| s.name.clone()).collect(),
        attempts: stages
            .iter()
            .map(|s| StageAttempts {
                stage: s.name.clone(),
                attempts: Vec::new(),
            })
            .collect(),
        status: RunStatus::InProgress,
        max_retries,
        base_seed: policy.base_seed,
    };

    for (stage_idx, stage) in stages.iter_mut().enumerate() {
        let mut stage_passed = false;
        for attempt in 0..=(max_retries as usize) {
            let seed = policy.seed_for(attempt);
            let settings = if attempt == 0 {
                "default".to_string()
            } else {
                format!("retry {attempt}")
            };
            match (stage.run)(seed) {
                Err(service_error) => return Err(service_error),
                Ok(StageResult::Failed(message)) => {
                    run.attempts[stage_idx].attempts.push(AttemptRecord {
                        seed,
                        settings,
                        passed: false,
                        error: Some(message),
                        reports: Vec::new(),
                    });
                }
                Ok(StageResult::Checked(reports)) => {
                    let passed = reports.iter().all(|r| r.passed);
                    run.attempts[stage_idx].attempts.push(AttemptRecord {
                        seed,
                        settings,
                        passed,
                        error: None,
                        reports,
                    });
                    if passed {
                        stage_passed = true;
                        break;
                    }
                }
            }
        }
        if !stage_passed {
            run.status = RunStatus::Rejected;
            return Ok(run);
        }
    }
    run.status = RunStatus::Accepted;
    Ok(run)
}

/// Confusion counts and derived rates with "unusable" as the positive
/// class. When a rate is undefined (zero denominator) it is reported as 0
/// with the corresponding `*_defined` flag cleared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub precision_defined: bool,
    pub recall_defined: bool,
}

/// Score unusable-flag predictions against ground-truth labels.
pub fn evaluate_checkers(predictions: &[bool], labels: &[bool]) -> Result<EvalResult> {
    if predictions.is_empty() {
        return Err(Error::InvalidInput("no assets to evaluate".into()));
    }
    if predictions.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let mut tp = 0;
    let mut fp = 0;
    let mut fn_ = 0;
    let mut tn = 0;
    for (&pred, &label) in predictions.iter().zip(labels.iter()) {
        match (pred, label) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let precision_defined = tp + fp > 0;
    let recall_defined = tp + fn_ > 0;
    Ok(EvalResult {
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        true_negatives: tn,
        precision: if precision_defined {
            tp as f64 / (tp + fp) as f64
        } else {
            0.0
        },
        recall: if recall_defined {
            tp as f64 / (tp + fn_) as f64
        } else {
            0.0
        },
        precision_defined,
        recall_defined,
    })
}

/// One line of the evaluation JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub asset_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_unusable: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_unusable: Option<bool>,
}

pub fn parse_eval_jsonl(text: &str) -> Result<Vec<EvalRecord>> {
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let record: EvalRecord = serde_json::from_str(line).map_err(|e| {
            Error::InvalidInput(format!("line {}: malformed JSONL: {e}", lineno + 1))
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Merge records (possibly from separate prediction and label files) by
/// asset id into aligned prediction/label vectors.
pub fn merge_eval_records(records: &[EvalRecord]) -> Result<(Vec<bool>, Vec<bool>)> {
    use std::collections::BTreeMap;
    let mut by_id: BTreeMap<&str, (Option<bool>, Option<bool>)> = BTreeMap::new();
    for r in records {
        let entry = by_id.entry(&r.asset_id).or_insert((None, None));
        if let Some(p) = r.predicted_unusable {
            if entry.0.is_some_and(|prev| prev != p) {
                return Err(Error::InvalidInput(format!(
                    "asset '{}' has conflicting predictions",
                    r.asset_id
                )));
            }
            entry.0 = Some(p);
        }
        if let Some(l) = r.label_unusable {
            if entry.1.is_some_and(|prev| prev != l) {
                return Err(Error::InvalidInput(format!(
                    "asset '{}' has conflicting labels",
                    r.asset_id
                )));
            }
            entry.1 = Some(l);
        }
    }
    let mut predictions = Vec::with_capacity(by_id.len());
    let mut labels = Vec::with_capacity(by_id.len());
    for (id, (p, l)) in by_id {
        let p = p.ok_or_else(|| {
            Error::InvalidInput(format!("asset '{id}' is missing predicted_unusable"))
        })?;
        let l = l.ok_or_else(|| {
            Error::InvalidInput(format!("asset '{id}' is missing label_unusable"))
        })?;
        predictions.push(p);
        labels.push(l);
    }
    if predictions.is_empty() {
        return Err(Error::InvalidInput("no assets to evaluate".into()));
    }
    Ok((predictions, labels))
}
