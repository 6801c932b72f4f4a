//! HTTP inference service for a trained ensemble bundle.
//!
//! Routes:
//!
//! * `GET  /healthz` liveness plus model readiness
//! * `GET  /api/v1/model` bundle metadata and voting weights
//! * `POST /api/v1/predict` JSON `{"features": [32 numbers]}`
//! * `POST /api/v1/predict-audio` multipart WAV upload in field `audio`
//! * `POST /api/v1/admin/reload` re-read the bundle from disk (also on SIGHUP)
//!
//! Uploads are processed in memory and never stored.

use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::multipart::MultipartRejection;
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, Multipart, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use pdadsv_core::eval::{load_model, EvalError, FORMAT_VERSION};
use pdadsv_core::features::{decode_wav, extract_features, FeatureError};
use pdadsv_core::{ClassifierKind, DspConfig, EnsembleModel, Prediction, N_FEATURES};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;
use tower_http::cors::CorsLayer;

pub const DEFAULT_BIND: &str = "127.0.0.1:8080";
pub const DEFAULT_MAX_UPLOAD_MB: usize = 50;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub bind: String,
    pub model_path: Option<PathBuf>,
    pub max_upload_mb: usize,
    pub dsp: DspConfig,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            bind: DEFAULT_BIND.into(),
            model_path: None,
            max_upload_mb: DEFAULT_MAX_UPLOAD_MB,
            dsp: DspConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        source: std::io::Error,
    },
    #[error("cannot load model {path}: {source}")]
    Model { path: PathBuf, source: EvalError },
    #[error("server I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// A bundle together with its content-derived version string.
#[derive(Debug)]
pub struct LoadedModel {
    pub model: EnsembleModel,
    pub version: String,
}

impl LoadedModel {
    pub fn new(model: EnsembleModel) -> Self {
        let version = model.model_version();
        Self { model, version }
    }
}

/// Shared service state. The model is immutable once loaded; a reload
/// swaps the `Arc` so in-flight requests finish on the bundle they started
/// with.
pub struct AppState {
    model: RwLock<Option<Arc<LoadedModel>>>,
    model_path: Option<PathBuf>,
    dsp: DspConfig,
}

fn read_bundle(path: &PathBuf) -> Result<EnsembleModel, ServerError> {
    let file = std::fs::File::open(path).map_err(|e| ServerError::Model {
        path: path.clone(),
        source: e.into(),
    })?;
    load_model(std::io::BufReader::new(file)).map_err(|source| ServerError::Model {
        path: path.clone(),
        source,
    })
}

impl AppState {
    pub fn new(model: Option<EnsembleModel>, model_path: Option<PathBuf>, dsp: DspConfig) -> Self {
        Self {
            model: RwLock::new(model.map(|m| Arc::new(LoadedModel::new(m)))),
            model_path,
            dsp,
        }
    }

    /// Loads the configured bundle, if any. Without a path the service
    /// starts unready.
    pub fn from_config(cfg: &ServerConfig) -> Result<Self, ServerError> {
        let model = cfg.model_path.as_ref().map(read_bundle).transpose()?;
        Ok(Self::new(model, cfg.model_path.clone(), cfg.dsp.clone()))
    }

    pub fn current(&self) -> Option<Arc<LoadedModel>> {
        self.model.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// Installs `model` and returns its version.
    pub fn replace(&self, model: EnsembleModel) -> String {
        let loaded = Arc::new(LoadedModel::new(model));
        let version = loaded.version.clone();
        *self.model.write().unwrap_or_else(|e| e.into_inner()) = Some(loaded);
        version
    }

    /// Re-reads the bundle from the configured path. On failure the
    /// current model stays in place.
    pub fn reload(&self) -> Result<String, ServerError> {
        let path = self.model_path.as_ref().ok_or_else(|| ServerError::Model {
            path: PathBuf::new(),
            source: EvalError::Io("no model path configured".into()),
        })?;
        let model = read_bundle(path)?;
        Ok(self.replace(model))
    }
}

/// Error body: `{"error": {"code", "message"}}`.
#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn not_loaded() -> Self {
        Self::new(
            StatusCode::SERVICE_UNAVAILABLE,
            "model_not_loaded",
            "no model is loaded",
        )
    }

    fn malformed(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "malformed_body", message)
    }

    fn from_status(status: StatusCode, message: String) -> Self {
        if status == StatusCode::PAYLOAD_TOO_LARGE {
            Self::new(status, "payload_too_large", message)
        } else {
            Self::malformed(message)
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"code": self.code, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

impl From<EvalError> for ApiError {
    fn from(e: EvalError) -> Self {
        let unprocessable = StatusCode::UNPROCESSABLE_ENTITY;
        match e {
            EvalError::FeatureCount { .. } => {
                Self::new(unprocessable, "wrong_feature_count", e.to_string())
            }
            EvalError::NonFiniteFeature { .. } => {
                Self::new(unprocessable, "non_finite_feature", e.to_string())
            }
            other => Self::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "internal",
                other.to_string(),
            ),
        }
    }
}

impl From<FeatureError> for ApiError {
    fn from(e: FeatureError) -> Self {
        let unprocessable = StatusCode::UNPROCESSABLE_ENTITY;
        let msg = e.to_string();
        match e {
            FeatureError::ClipTooShort { .. } | FeatureError::ClipTooShortForFrame { .. } => {
                Self::new(unprocessable, "clip_too_short", msg)
            }
            FeatureError::SilentSignal { .. } => Self::new(unprocessable, "silent_signal", msg),
            FeatureError::MalformedContainer(_)
            | FeatureError::EmptyAudio
            | FeatureError::SampleOutOfRange { .. }
            | FeatureError::ZeroSampleRate => {
                Self::new(StatusCode::BAD_REQUEST, "malformed_audio", msg)
            }
            FeatureError::UnsupportedEncoding(_) => {
                Self::new(StatusCode::BAD_REQUEST, "unsupported_audio_encoding", msg)
            }
            FeatureError::NonPowerOfTwoLength(_)
            | FeatureError::InvalidFrequencyRange { .. }
            | FeatureError::InvalidConfig(_) => Self::new(unprocessable, "unsupported_audio", msg),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteEntry {
    pub classifier: String,
    pub name: String,
    pub vote: u8,
    pub weight: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub positive: f64,
    pub negative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub final_label: u8,
    pub final_text: String,
    pub votes: Vec<VoteEntry>,
    pub weights: [f64; 4],
    pub weighted_tally: Tally,
    pub probabilities: [f64; 4],
    pub latency_ms: f64,
    pub model_version: String,
}

pub fn final_text(label: u8) -> &'static str {
    if label == 1 {
        "PD signs detected"
    } else {
        "No PD signs detected"
    }
}

fn response(loaded: &LoadedModel, p: Prediction, started: Instant) -> PredictResponse {
    let weights = loaded.model.weights.as_array();
    let probabilities = p.probabilities.unwrap_or([f64::NAN; 4]);
    let votes = ClassifierKind::ALL
        .iter()
        .enumerate()
        .map(|(i, k)| VoteEntry {
            classifier: k.as_str().into(),
            name: k.display_name().into(),
            vote: p.votes[i],
            weight: weights[i],
            probability: probabilities[i],
        })
        .collect();
    PredictResponse {
        final_label: p.final_label,
        final_text: final_text(p.final_label).into(),
        votes,
        weights,
        weighted_tally: Tally {
            positive: p.tally_pos,
            negative: p.tally_neg,
        },
        probabilities,
        latency_ms: started.elapsed().as_secs_f64() * 1e3,
        model_version: loaded.version.clone(),
    }
}

async fn healthz(State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({"status": "ok", "ready": state.current().is_some()}))
}

async fn model_info(State(state): State<Arc<AppState>>) -> Result<Json<Value>, ApiError> {
    let loaded = state.current().ok_or_else(ApiError::not_loaded)?;
    let m = &loaded.model;
    let weights = m.weights.as_array();
    let classifiers: Vec<Value> = ClassifierKind::ALL
        .iter()
        .zip(weights)
        .map(|(k, w)| json!({"id": k.as_str(), "name": k.display_name(), "weight": w}))
        .collect();
    Ok(Json(json!({
        "model_version": loaded.version,
        "format_version": FORMAT_VERSION,
        "feature_names": m.feature_names,
        "classifiers": classifiers,
        "classifier_names": EnsembleModel::classifier_names(),
        "weights": weights,
        "metadata": m.metadata,
    })))
}

fn parse_features(body: &[u8]) -> Result<Vec<f64>, ApiError> {
    let value: Value = serde_json::from_slice(body)
        .map_err(|e| ApiError::malformed(format!("invalid JSON: {e}")))?;
    let items = value
        .get("features")
        .ok_or_else(|| ApiError::malformed("body must be an object with a `features` array"))?
        .as_array()
        .ok_or_else(|| ApiError::malformed("`features` must be an array"))?;
    if items.len() != N_FEATURES {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "wrong_feature_count",
            format!("expected {N_FEATURES} features, got {}", items.len()),
        ));
    }
    items
        .iter()
        .enumerate()
        .map(|(i, v)| {
            v.as_f64().filter(|x| x.is_finite()).ok_or_else(|| {
                ApiError::new(
                    StatusCode::UNPROCESSABLE_ENTITY,
                    "non_finite_feature",
                    format!("feature {i} is not a finite number: {v}"),
                )
            })
        })
        .collect()
}

async fn predict(
    State(state): State<Arc<AppState>>,
    body: Result<Bytes, BytesRejection>,
) -> Result<Json<PredictResponse>, ApiError> {
    let started = Instant::now();
    let body = body.map_err(|e| ApiError::from_status(e.status(), e.body_text()))?;
    let loaded = state.current().ok_or_else(ApiError::not_loaded)?;
    let features = parse_features(&body)?;
    let p = loaded.model.predict(&features)?;
    Ok(Json(response(&loaded, p, started)))
}

async fn predict_audio(
    State(state): State<Arc<AppState>>,
    multipart: Result<Multipart, MultipartRejection>,
) -> Result<Json<PredictResponse>, ApiError> {
    let started = Instant::now();
    let mut multipart = multipart.map_err(|e| ApiError::from_status(e.status(), e.body_text()))?;
    let loaded = state.current().ok_or_else(ApiError::not_loaded)?;
    let mut audio = None;
    loop {
        let field = multipart
            .next_field()
            .await
            .map_err(|e| ApiError::from_status(e.status(), e.body_text()))?;
        let Some(field) = field else { break };
        if field.name() == Some("audio") {
            let bytes = field
                .bytes()
                .await
                .map_err(|e| ApiError::from_status(e.status(), e.body_text()))?;
            audio = Some(bytes);
        }
    }
    let audio = audio.ok_or_else(|| ApiError::malformed("multipart field `audio` is missing"))?;
    let dsp = state.dsp.clone();
    let model = Arc::clone(&loaded);
    let p = tokio::task::spawn_blocking(move || -> Result<Prediction, ApiError> {
        let clip = decode_wav(&audio)?;
        let features = extract_features(&clip, &dsp)?;
        Ok(model.model.predict(features.as_array())?)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(Json(response(&loaded, p, started)))
}

async fn admin_reload(State(state): State<Arc<AppState>>) -> Result<Json<Value>, ApiError> {
    let reloaded = tokio::task::spawn_blocking(move || state.reload())
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    match reloaded {
        Ok(version) => {
            log::info!("model reloaded: {version}");
            Ok(Json(json!({"model_version": version})))
        }
        Err(e) => Err(ApiError::new(
            StatusCode::CONFLICT,
            "reload_failed",
            e.to_string(),
        )),
    }
}

pub fn router(state: Arc<AppState>, max_upload_mb: usize) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/api/v1/model", get(model_info))
        .route("/api/v1/predict", post(predict))
        .route("/api/v1/predict-audio", post(predict_audio))
        .route("/api/v1/admin/reload", post(admin_reload))
        .layer(DefaultBodyLimit::max(
            max_upload_mb.saturating_mul(1024 * 1024),
        ))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

#[cfg(unix)]
fn reload_on_sighup(state: Arc<AppState>) -> Result<(), ServerError> {
    use tokio::signal::unix::{signal, SignalKind};
    let mut hup = signal(SignalKind::hangup())?;
    tokio::spawn(async move {
        while hup.recv().await.is_some() {
            let st = Arc::clone(&state);
            match tokio::task::spawn_blocking(move || st.reload()).await {
                Ok(Ok(v)) => log::info!("SIGHUP: model reloaded ({v})"),
                Ok(Err(e)) => log::error!("SIGHUP: reload failed, keeping current model: {e}"),
                Err(e) => log::error!("SIGHUP: reload task failed: {e}"),
            }
        }
    });
    Ok(())
}

/// Serves on an already-bound listener until Ctrl-C.
pub async fn serve_on(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    max_upload_mb: usize,
) -> Result<(), ServerError> {
    #[cfg(unix)]
    reload_on_sighup(Arc::clone(&state))?;
    let app = router(state, max_upload_mb);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

pub async fn serve(cfg: ServerConfig) -> Result<(), ServerError> {
    let state = Arc::new(AppState::from_config(&cfg)?);
    let listener = tokio::net::TcpListener::bind(&cfg.bind)
        .await
        .map_err(|source| ServerError::Bind {
            addr: cfg.bind.clone(),
            source,
        })?;
    log::info!(
        "listening on {} (model {})",
        listener.local_addr()?,
        state
            .current()
            .map_or("not loaded".to_string(), |m| m.version.clone())
    );
    serve_on(listener, state, cfg.max_upload_mb).await
}
