//! HTTP clients for the external service hooks.
//!
//! All services share one wire shape: POST a JSON body with base64 PNG
//! images plus request metadata, receive structured JSON back. Clients
//! apply a request timeout and retry once on transport failures or 5xx
//! responses; 4xx responses fail immediately.

use std::time::Duration;

use base64::Engine as _;

use crate::bake::ImageTransformService;
use crate::error::{Error, Result};
use crate::img::ColorImage;
use crate::inspect::{ScoreService, VlmService, VlmVerdict};
use crate::physics::{EstimatorRequest, EstimatorResponse, PropertyEstimator};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Endpoint, optional bearer key and timeout for one service.
#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

impl ServiceConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            api_key: None,
            timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key;
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

/// Blocking JSON-over-HTTP client with one retry.
pub struct JsonClient {
    config: ServiceConfig,
    agent: ureq::Agent,
}

impl JsonClient {
    pub fn new(config: ServiceConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(true)
            .build()
            .into();
        Self { config, agent }
    }

    pub fn post_json(&self, service: &str, body: &serde_json::Value) -> Result<serde_json::Value> {
        match self.attempt(body) {
            Ok(value) => Ok(value),
            Err(first) => {
                if retryable(&first) {
                    self.attempt(body)
                        .map_err(|second| Error::service(service, second.to_string()))
                } else {
                    Err(Error::service(service, first.to_string()))
                }
            }
        }
    }

    fn attempt(&self, body: &serde_json::Value) -> std::result::Result<serde_json::Value, ureq::Error> {
        let mut request = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.config.api_key {
            request = request.header("authorization", &format!("Bearer {key}"));
        }
        let mut response = request.send_json(body)?;
        response.body_mut().read_json()
    }
}

fn retryable(err: &ureq::Error) -> bool {
    match err {
        // Client errors will not improve on retry; everything else might.
        ureq::Error::StatusCode(code) => !(400..500).contains(code),
        _ => true,
    }
}

fn png_base64(image: &ColorImage) -> Result<String> {
    Ok(base64::engine::general_purpose::STANDARD.encode(image.to_png_bytes()?))
}

fn image_from_base64(service: &str, encoded: &str) -> Result<ColorImage> {
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(encoded)
        .map_err(|e| Error::service(service, format!("bad base64 image: {e}")))?;
    ColorImage::from_png_bytes(&bytes)
        .map_err(|e| Error::service(service, format!("bad PNG payload: {e}")))
}

/// Image-to-image transform over HTTP. Request: PNG bytes (base64), the
/// transform name and its parameters; response: PNG bytes (base64).
pub struct HttpImageTransform {
    client: JsonClient,
}

impl HttpImageTransform {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            client: JsonClient::new(config),
        }
    }
}

impl ImageTransformService for HttpImageTransform {
    fn transform(
        &self,
        transform: &str,
        params: &serde_json::Value,
        image: &ColorImage,
    ) -> Result<ColorImage> {
        let body = serde_json::json!({
            "transform": transform,
            "params": params,
            "image_png": png_base64(image)?,
        });
        let response = self.client.post_json(transform, &body)?;
        let encoded = response
            .get("image_png")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::service(transform, "response is missing image_png"))?;
        image_from_base64(transform, encoded)
    }
}

/// Physical property estimation over HTTP. Request: base64 PNG renders,
/// the user context and the requested field names; response: the subset of
/// {height_m, mass_kg, friction, category, description}.
pub struct HttpPropertyEstimator {
    client: JsonClient,
}

impl HttpPropertyEstimator {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            client: JsonClient::new(config),
        }
    }
}

impl PropertyEstimator for HttpPropertyEstimator {
    fn estimate(&self, request: &EstimatorRequest, fields: &[&str]) -> Result<EstimatorResponse> {
        let images: Result<Vec<String>> = request.renders.iter().map(png_base64).collect();
        let body = serde_json::json!({
            "images": images?,
            "context": request.user_context.clone().unwrap_or_default(),
            "fields": fields,
        });
        let response = self.client.post_json("estimator", &body)?;
        serde_json::from_value(response)
            .map_err(|e| Error::service("estimator", format!("unparseable response: {e}")))
    }
}

/// Vision-language pass/fail assessment over HTTP.
pub struct HttpVlmChecker {
    name: String,
    client: JsonClient,
}

impl HttpVlmChecker {
    pub fn new(name: &str, config: ServiceConfig) -> Self {
        Self {
            name: name.to_string(),
            client: JsonClient::new(config),
        }
    }
}

impl VlmService for HttpVlmChecker {
    fn assess(&self, images: &[ColorImage], context: &str) -> Result<VlmVerdict> {
        let encoded: Result<Vec<String>> = images.iter().map(png_base64).collect();
        let body = serde_json::json!({
            "images": encoded?,
            "context": context,
        });
        let response = self.client.post_json(&self.name, &body)?;
        serde_json::from_value(response)
            .map_err(|e| Error::service(&self.name, format!("unparseable verdict: {e}")))
    }
}

/// Scalar scoring over HTTP (aesthetic quality).
pub struct HttpScorer {
    client: JsonClient,
}

impl HttpScorer {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            client: JsonClient::new(config),
        }
    }
}

impl ScoreService for HttpScorer {
    fn score(&self, image: &ColorImage) -> Result<f64> {
        let body = serde_json::json!({
            "images": [png_base64(image)?],
            "context": "aesthetic-score",
        });
        let response = self.client.post_json("aesthetic", &body)?;
        response
            .get("score")
            .and_then(|v| v.as_f64())
            .ok_or_else(|| Error::service("aesthetic", "response is missing numeric score"))
    }
}
