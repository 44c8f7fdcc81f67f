//! HTTP inference service over an immutable generator snapshot.

use std::path::Path;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use beziergan::geometry::{Point, SymmetrySpec};
use beziergan::networks::{Constraint, GeneratorModel, OutputKind};
use beziergan::training::load_checkpoint;
use serde::{Deserialize, Serialize};

use crate::design::{clamp_latent, generate_designs, noise_from_seed};

/// `GET /model` body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ModelInfo {
    pub latent_dim: usize,
    pub noise_dim: usize,
    pub degree: usize,
    pub points: usize,
    pub symmetry: SymmetrySpec,
    pub constraint: Constraint,
    pub output: OutputKind,
}

/// `POST /generate` body. Noise comes from `noise` when given, otherwise
/// from `noise-seed` (default 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct GenerateRequest {
    pub latent: Vec<f64>,
    #[serde(default)]
    pub noise_seed: Option<u64>,
    #[serde(default)]
    pub noise: Option<Vec<f64>>,
    #[serde(default)]
    pub include_control_points: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GenerateResponse {
    pub points: Vec<Point>,
    /// Prim control points; `null` unless requested or without a Bézier layer.
    pub control_points: Option<Vec<Point>>,
    pub weights: Option<Vec<f64>>,
    /// Whether any latent value was moved into `[0, 1]`.
    pub clamped: bool,
}

struct Snapshot {
    model: GeneratorModel,
    info: ModelInfo,
}

/// Shared service state; `None` until a model is loaded.
#[derive(Clone, Default)]
pub struct AppState {
    current: Arc<RwLock<Option<Arc<Snapshot>>>>,
}

impl AppState {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_model(model: GeneratorModel) -> Self {
        let state = Self::empty();
        state.swap(model);
        state
    }

    /// Replaces the served model; requests in flight keep the old snapshot.
    pub fn swap(&self, model: GeneratorModel) {
        let cfg = model.config();
        let info = ModelInfo {
            latent_dim: cfg.latent_dim,
            noise_dim: cfg.noise_dim,
            degree: cfg.degree,
            points: cfg.points,
            symmetry: cfg.symmetry,
            constraint: cfg.constraint.clone(),
            output: cfg.output,
        };
        let snap = Arc::new(Snapshot { model, info });
        *self.current.write().unwrap_or_else(|e| e.into_inner()) = Some(snap);
    }

    pub fn load_checkpoint(&self, path: &Path) -> anyhow::Result<()> {
        let ckpt = load_checkpoint(path)?;
        self.swap(ckpt.generator);
        Ok(())
    }

    pub fn is_loaded(&self) -> bool {
        self.snapshot().is_some()
    }

    fn snapshot(&self) -> Option<Arc<Snapshot>> {
        self.current.read().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/model", get(model))
        .route("/generate", post(generate))
        .with_state(state)
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(serde_json::json!({ "error": message.into() }))).into_response()
}

fn not_loaded() -> Response {
    error(StatusCode::SERVICE_UNAVAILABLE, "model not loaded yet")
}

async fn health(State(state): State<AppState>) -> Response {
    if state.is_loaded() {
        "ok".into_response()
    } else {
        (StatusCode::SERVICE_UNAVAILABLE, "loading").into_response()
    }
}

async fn model(State(state): State<AppState>) -> Response {
    match state.snapshot() {
        Some(s) => Json(s.info.clone()).into_response(),
        None => not_loaded(),
    }
}

async fn generate(State(state): State<AppState>, body: Bytes) -> Response {
    let Some(snap) = state.snapshot() else {
        return not_loaded();
    };
    let req: GenerateRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed request: {e}")),
    };
    let info = &snap.info;
    if req.latent.len() != info.latent_dim {
        return error(
            StatusCode::BAD_REQUEST,
            format!(
                "latent has {} values, model expects latent dim {}",
                req.latent.len(),
                info.latent_dim
            ),
        );
    }
    let noise = match req.noise {
        Some(n) if n.len() != info.noise_dim => {
            return error(
                StatusCode::BAD_REQUEST,
                format!(
                    "noise has {} values, model expects noise dim {}",
                    n.len(),
                    info.noise_dim
                ),
            )
        }
        Some(n) => n,
        None => noise_from_seed(req.noise_seed.unwrap_or(0), info.noise_dim),
    };
    let (latent, clamped) = clamp_latent(&req.latent);
    let include = req.include_control_points;
    let result = tokio::task::spawn_blocking(move || generate_designs(&snap.model, &[latent], &noise)).await;
    let design = match result {
        Ok(Ok(mut d)) => d.remove(0),
        Ok(Err(e)) => return error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        Err(e) => return error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    };
    let prim = design.prim.as_ref().filter(|_| include);
    Json(GenerateResponse {
        points: design.curve.points().to_vec(),
        control_points: prim.map(|p| p.control_points().to_vec()),
        weights: prim.map(|p| p.weights().to_vec()),
        clamped,
    })
    .into_response()
}

/// Binds, loads the checkpoint in the background (answering 503 until it is
/// ready) and serves until interrupted. On Unix, SIGHUP reloads the
/// checkpoint file.
pub async fn serve(checkpoint: &Path, host: &str, port: u16) -> anyhow::Result<()> {
    let state = AppState::empty();
    let listener = tokio::net::TcpListener::bind((host, port)).await?;
    log::info!("listening on {}", listener.local_addr()?);
    let path = checkpoint.to_path_buf();
    let loader = state.clone();
    let load = tokio::task::spawn_blocking(move || loader.load_checkpoint(&path));
    let app = router(state.clone());
    let server = tokio::spawn(async move { axum::serve(listener, app).await });
    load.await??;
    log::info!("model loaded from {}", checkpoint.display());
    #[cfg(unix)]
    {
        let path = checkpoint.to_path_buf();
        let reloader = state.clone();
        let mut hup = tokio::signal::unix::signal(tokio::signal::unix::SignalKind::hangup())?;
        tokio::spawn(async move {
            while hup.recv().await.is_some() {
                let (s, p) = (reloader.clone(), path.clone());
                match tokio::task::spawn_blocking(move || s.load_checkpoint(&p)).await {
                    Ok(Ok(())) => log::info!("reloaded {}", path.display()),
                    Ok(Err(e)) => log::error!("reload failed, keeping the current model: {e}"),
                    Err(e) => log::error!("reload task failed: {e}"),
                }
            }
        });
    }
    tokio::select! {
        r = server => r??,
        _ = tokio::signal::ctrl_c() => log::info!("shutting down"),
    }
    Ok(())
}
