//! HTTP API.
//!
//! All writes go through one `Platform` behind a mutex, and every accepted
//! write has been appended (and fsynced, unless disabled) to the event log
//! before the response is sent.

use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::{FromRequestParts, Path, Query, State};
use axum::http::header::{AUTHORIZATION, CONTENT_TYPE};
use axum::http::request::Parts;
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use fstlab_core::event::read_jsonl;
use fstlab_core::export::{annotations_csv, consensus_csv};
use fstlab_core::model::ImageId;
use fstlab_core::routing::{next_task, TaskAssignment};
use fstlab_core::{
    FailureReport, FlagKind, FstLabel, ImageStatus, IngestSummary, JsonlStore, Platform, Principal,
    ReviewItem, Role, SubmissionOutcome, Tally,
};
use fstlab_stats::{CrowdCurveConfig, IrrReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ServiceConfig;
use crate::error::ApiError;
use crate::labels::{read_wide_file, LabelTable};
use crate::manifest::{missing_files, parse_manifest, ManifestError};
use crate::reports::{self, ConfusionReport, CrowdCurveReport, ItaRow, WithinKReport};

pub struct AppState {
    config: ServiceConfig,
    platform: Mutex<Platform<JsonlStore>>,
    probe_rng: Mutex<ChaCha8Rng>,
    extra_labels: LabelTable,
}

pub type SharedState = Arc<AppState>;

#[derive(Debug, thiserror::Error)]
pub enum StartupError {
    #[error("cannot create data dir: {0}")]
    DataDir(std::io::Error),
    #[error(transparent)]
    Log(#[from] fstlab_core::LogError),
    #[error(transparent)]
    Replay(#[from] fstlab_core::ReplayError),
    #[error(transparent)]
    Labels(#[from] crate::labels::LabelsError),
}

/// Replay `data_dir/events.jsonl` and keep appending to it.
pub fn open_platform(config: &ServiceConfig) -> Result<Platform<JsonlStore>, StartupError> {
    std::fs::create_dir_all(&config.data_dir).map_err(StartupError::DataDir)?;
    let path = config.events_path();
    let events = read_jsonl(&path)?;
    let mut store = JsonlStore::open(&path).map_err(fstlab_core::LogError::Io)?;
    if !config.fsync {
        store = store.without_fsync();
    }
    Ok(Platform::open(config.protocol.clone(), store, &events)?)
}

impl AppState {
    pub fn open(config: ServiceConfig) -> Result<SharedState, StartupError> {
        let platform = open_platform(&config)?;
        let extra_labels = match &config.labels_csv {
            Some(p) => read_wide_file(p)?,
            None => LabelTable::default(),
        };
        Ok(Arc::new(AppState {
            probe_rng: Mutex::new(ChaCha8Rng::seed_from_u64(config.seed)),
            platform: Mutex::new(platform),
            extra_labels,
            config,
        }))
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    fn platform(&self) -> Result<MutexGuard<'_, Platform<JsonlStore>>, ApiError> {
        self.platform
            .lock()
            .map_err(|_| ApiError::internal("platform lock poisoned"))
    }

    fn label_table(&self) -> Result<LabelTable, ApiError> {
        let mut t = reports::platform_methods(self.platform()?.state());
        t.merge(self.extra_labels.clone());
        Ok(t)
    }
}

pub fn router(state: SharedState) -> Router {
    Router::new()
        .route("/health", get(|| async { Json(serde_json::json!({ "ok": true })) }))
        .route("/datasets", post(post_dataset))
        .route("/tasks/next", get(get_next_task))
        .route("/annotations", post(post_annotation))
        .route("/flags", post(post_flag))
        .route("/images/{id}", get(get_image))
        .route("/review/queue", get(get_review_queue))
        .route("/review/{id}/adjudicate", post(post_adjudicate))
        .route("/reports/irr", get(get_irr))
        .route("/reports/confusion", get(get_confusion))
        .route("/reports/within-k", get(get_within_k))
        .route("/reports/crowd-curve", get(get_crowd_curve))
        .route("/reports/ita", get(get_ita))
        .route("/exports/consensus.csv", get(export_consensus))
        .route("/exports/annotations.csv", get(export_annotations))
        .route("/exports/thresholds.json", get(export_thresholds))
        .with_state(state)
}

/// Authenticated caller, from `Authorization: Bearer <token>`.
pub struct Caller(pub Principal);

impl FromRequestParts<SharedState> for Caller {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &SharedState) -> Result<Self, Self::Rejection> {
        let token = parts
            .headers
            .get(AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .ok_or_else(ApiError::unauthorized)?;
        state
            .config
            .principal(token.trim())
            .map(Caller)
            .ok_or_else(ApiError::unauthorized)
    }
}

impl Caller {
    fn require(&self, roles: &[Role]) -> Result<(), ApiError> {
        if roles.contains(&self.0.role) {
            Ok(())
        } else {
            Err(ApiError::forbidden(&self.0.principal_id))
        }
    }

    /// Annotators act as themselves; admins may act for anyone.
    fn acting_annotator(&self, requested: Option<&str>) -> Result<String, ApiError> {
        self.require(&[Role::Annotator, Role::Admin])?;
        match (self.0.role, requested) {
            (_, None) => Ok(self.0.principal_id.clone()),
            (Role::Admin, Some(a)) => Ok(a.to_string()),
            (_, Some(a)) if a == self.0.principal_id => Ok(a.to_string()),
            _ => Err(ApiError::forbidden(&self.0.principal_id)),
        }
    }
}

#[derive(Debug, Deserialize)]
pub struct DatasetRequest {
    pub manifest_csv: String,
    #[serde(default = "yes")]
    pub check_files: bool,
}

fn yes() -> bool {
    true
}

async fn post_dataset(
    State(app): State<SharedState>,
    caller: Caller,
    Json(req): Json<DatasetRequest>,
) -> Result<Json<IngestSummary>, ApiError> {
    caller.require(&[Role::Admin])?;
    let records = parse_manifest(req.manifest_csv.as_bytes())?;
    if req.check_files {
        let missing = missing_files(&records, app.config.image_root.as_deref());
        if !missing.is_empty() {
            return Err(ManifestError::MissingImageFiles(missing).into());
        }
    }
    Ok(Json(app.platform()?.ingest(records)?))
}

#[derive(Debug, Deserialize)]
pub struct TaskQuery {
    pub annotator: Option<String>,
}

async fn get_next_task(
    State(app): State<SharedState>,
    caller: Caller,
    Query(q): Query<TaskQuery>,
) -> Result<Json<TaskAssignment>, ApiError> {
    let annotator = caller.acting_annotator(q.annotator.as_deref())?;
    let probe = {
        let mut rng = app
            .probe_rng
            .lock()
            .map_err(|_| ApiError::internal("rng lock poisoned"))?;
        rng.random_bool(app.config.gold_probe_rate)
    };
    let platform = app.platform()?;
    next_task(platform.state(), &annotator, probe).map(Json).ok_or_else(|| {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "no_work",
            format!("no open image left for {annotator}"),
        )
    })
}

#[derive(Debug, Deserialize)]
pub struct AnnotationRequest {
    pub image_id: ImageId,
    pub label: FstLabel,
    pub annotator_id: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct AnnotationResponse {
    #[serde(flatten)]
    pub outcome: SubmissionOutcome,
    pub windowed_agreement: Option<f64>,
}

async fn post_annotation(
    State(app): State<SharedState>,
    caller: Caller,
    Json(req): Json<AnnotationRequest>,
) -> Result<Json<AnnotationResponse>, ApiError> {
    let annotator = caller.acting_annotator(req.annotator_id.as_deref())?;
    let mut platform = app.platform()?;
    let outcome = platform.submit_annotation(&annotator, &req.image_id, req.label)?;
    let windowed_agreement = platform
        .state()
        .profile(&annotator)
        .and_then(|p| p.windowed_agreement());
    Ok(Json(AnnotationResponse {
        outcome,
        windowed_agreement,
    }))
}

#[derive(Debug, Deserialize)]
pub struct FlagRequest {
    pub image_id: ImageId,
    pub kind: FlagKind,
    #[serde(default)]
    pub text: String,
    pub annotator_id: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct StatusResponse {
    pub image_id: ImageId,
    pub status: ImageStatus,
}

async fn post_flag(
    State(app): State<SharedState>,
    caller: Caller,
    Json(req): Json<FlagRequest>,
) -> Result<Json<StatusResponse>, ApiError> {
    let annotator = caller.acting_annotator(req.annotator_id.as_deref())?;
    let status = app.platform()?.file_failure_report(FailureReport {
        image_id: req.image_id.clone(),
        annotator_id: annotator,
        kind: req.kind,
        text: req.text,
    })?;
    Ok(Json(StatusResponse {
        image_id: req.image_id,
        status,
    }))
}

/// What annotators and experts see of an image: no tallies, no crowd label.
#[derive(Debug, Serialize)]
pub struct ImageView {
    pub image_id: ImageId,
    pub file_url: String,
    pub status: ImageStatus,
}

/// Administrative view with the full consensus state.
#[derive(Debug, Serialize)]
pub struct ImageDetail {
    pub image_id: ImageId,
    pub file_url: String,
    pub source: String,
    pub status: ImageStatus,
    pub settled_label: Option<FstLabel>,
    pub tally: Tally,
    pub agreement: Option<f64>,
    pub difficulty: Option<f64>,
    pub incorrect_flags: u32,
    pub inappropriate_flags: u32,
}

async fn get_image(
    State(app): State<SharedState>,
    caller: Caller,
    Path(id): Path<String>,
) -> Result<axum::response::Response, ApiError> {
    let platform = app.platform()?;
    let state = platform.state();
    let img = state
        .image(&id)
        .ok_or_else(|| ApiError::from(fstlab_core::ProtocolError::UnknownImage(id.clone())))?;
    if caller.0.role != Role::Admin {
        return Ok(Json(ImageView {
            image_id: id,
            file_url: img.record.file_path.clone(),
            status: img.status,
        })
        .into_response());
    }
    let cs = state.consensus_state(&id).expect("image exists");
    Ok(Json(ImageDetail {
        image_id: id,
        file_url: img.record.file_path.clone(),
        source: img.record.source.clone(),
        status: cs.status,
        settled_label: cs.settled_label,
        tally: cs.tally,
        agreement: cs.agreement,
        difficulty: cs.difficulty,
        incorrect_flags: cs.incorrect_flags,
        inappropriate_flags: cs.inappropriate_flags,
    })
    .into_response())
}

#[derive(Debug, Serialize)]
pub struct ReviewQueue {
    pub items: Vec<ReviewItem>,
}

async fn get_review_queue(State(app): State<SharedState>, caller: Caller) -> Result<Json<ReviewQueue>, ApiError> {
    caller.require(&[Role::Expert, Role::Admin])?;
    Ok(Json(ReviewQueue {
        items: app.platform()?.review_queue(),
    }))
}

#[derive(Debug, Deserialize)]
pub struct AdjudicateRequest {
    pub label: FstLabel,
}

#[derive(Debug, Serialize)]
pub struct AdjudicateResponse {
    pub image_id: ImageId,
    pub status: ImageStatus,
    pub label: FstLabel,
    pub expert_id: String,
}

async fn post_adjudicate(
    State(app): State<SharedState>,
    caller: Caller,
    Path(id): Path<String>,
    Json(req): Json<AdjudicateRequest>,
) -> Result<Json<AdjudicateResponse>, ApiError> {
    // The core re-checks the role; checking here keeps the error uniform.
    caller.require(&[Role::Expert])?;
    let cs = app.platform()?.adjudicate(&caller.0, &id, req.label)?;
    Ok(Json(AdjudicateResponse {
        image_id: id,
        status: cs.status,
        label: req.label,
        expert_id: caller.0.principal_id,
    }))
}

fn split_list(s: Option<&str>) -> Vec<String> {
    s.map(|s| {
        s.split(',')
            .map(str::trim)
            .filter(|x| !x.is_empty())
            .map(String::from)
            .collect()
    })
    .unwrap_or_default()
}

#[derive(Debug, Deserialize)]
pub struct IrrQuery {
    pub methods: Option<String>,
    pub experts: Option<String>,
}

async fn get_irr(
    State(app): State<SharedState>,
    caller: Caller,
    Query(q): Query<IrrQuery>,
) -> Result<Json<IrrReport>, ApiError> {
    caller.require(&[Role::Admin, Role::Expert])?;
    let table = app.label_table()?;
    let mut experts = split_list(q.experts.as_deref());
    if experts.is_empty() {
        experts = if app.config.experts.is_empty() {
            reports::expert_names(app.platform()?.state())
        } else {
            app.config.experts.clone()
        };
    }
    Ok(Json(reports::irr(&table, &split_list(q.methods.as_deref()), &experts)?))
}

#[derive(Debug, Deserialize)]
pub struct PairQuery {
    pub a: String,
    pub b: String,
    pub k: Option<u8>,
}

async fn get_confusion(
    State(app): State<SharedState>,
    caller: Caller,
    Query(q): Query<PairQuery>,
) -> Result<Json<ConfusionReport>, ApiError> {
    caller.require(&[Role::Admin, Role::Expert])?;
    Ok(Json(reports::confusion(&app.label_table()?, &q.a, &q.b)?))
}

async fn get_within_k(
    State(app): State<SharedState>,
    caller: Caller,
    Query(q): Query<PairQuery>,
) -> Result<Json<WithinKReport>, ApiError> {
    caller.require(&[Role::Admin, Role::Expert])?;
    Ok(Json(reports::within_k(&app.label_table()?, &q.a, &q.b, q.k.unwrap_or(1))?))
}

#[derive(Debug, Deserialize)]
pub struct CurveQuery {
    pub sizes: Option<String>,
    pub draws: Option<usize>,
    pub seed: Option<u64>,
    pub with_replacement: Option<bool>,
}

async fn get_crowd_curve(
    State(app): State<SharedState>,
    caller: Caller,
    Query(q): Query<CurveQuery>,
) -> Result<Json<CrowdCurveReport>, ApiError> {
    caller.require(&[Role::Admin, Role::Expert])?;
    let mut cfg: CrowdCurveConfig = app.config.crowd_curve.clone();
    if let Some(s) = q.sizes.as_deref() {
        cfg.sizes = split_list(Some(s))
            .iter()
            .map(|x| x.parse().map_err(|_| ApiError::bad_request(format!("bad size {x}"))))
            .collect::<Result<_, _>>()?;
    }
    cfg.draws = q.draws.unwrap_or(cfg.draws);
    cfg.seed = q.seed.unwrap_or(cfg.seed);
    if let Some(w) = q.with_replacement {
        cfg.sampling = if w {
            fstlab_stats::Sampling::WithReplacement
        } else {
            fstlab_stats::Sampling::WithoutReplacement
        };
    }
    let (pool, reference) = reports::platform_pool(app.platform()?.state());
    Ok(Json(reports::crowd_curve(&pool, &reference, &cfg)?))
}

#[derive(Debug, Serialize)]
pub struct ItaReport {
    pub thresholds: fstlab_ita::ItaThresholds,
    pub images: Vec<ItaRow>,
}

async fn get_ita(State(app): State<SharedState>, caller: Caller) -> Result<Json<ItaReport>, ApiError> {
    caller.require(&[Role::Admin, Role::Expert])?;
    let records: Vec<_> = {
        let platform = app.platform()?;
        platform.state().images.values().map(|i| i.record.clone()).collect()
    };
    let cfg = app.config.ita.clone();
    let root = app.config.image_root.clone();
    let images = tokio::task::spawn_blocking(move || reports::ita_rows(&records, root.as_deref(), &cfg))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(ItaReport {
        thresholds: app.config.ita.thresholds,
        images,
    }))
}

fn csv_response(body: String) -> impl IntoResponse {
    ([(CONTENT_TYPE, "text/csv; charset=utf-8")], body)
}

async fn export_consensus(State(app): State<SharedState>, caller: Caller) -> Result<impl IntoResponse, ApiError> {
    caller.require(&[Role::Admin])?;
    Ok(csv_response(consensus_csv(app.platform()?.state())))
}

async fn export_annotations(State(app): State<SharedState>, caller: Caller) -> Result<impl IntoResponse, ApiError> {
    caller.require(&[Role::Admin])?;
    Ok(csv_response(annotations_csv(app.platform()?.state())))
}

async fn export_thresholds(
    State(app): State<SharedState>,
    caller: Caller,
) -> Result<Json<fstlab_ita::ItaThresholds>, ApiError> {
    caller.require(&[Role::Admin, Role::Expert])?;
    Ok(Json(app.config.ita.thresholds))
}

pub async fn serve(state: SharedState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(&state.config.listen).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
