//! HTTP session service for interactive derivation.
//!
//! Each session holds a current design plus undo/redo stacks. Mutations of
//! one session are serialized by its own mutex; the session table lock is
//! held only long enough to look a session up.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use radiogram::catalog::{
    build_catalog, canonical_key, mirror_twin, Catalog, CatalogEntryDoc, CatalogOptions,
    EquivalenceLevel, GrammarSpec,
};
use radiogram::frame::{
    extract_frame, frame_stats, rooted_fcc_residency, round_significant, FrameDoc, FrameStats,
};
use radiogram::grammar::{
    apply_move, candidate_moves, initial_design, replay, ApplyMode, CandidateMove, Design,
    FaceLabel, GrammarId, Move,
};
use radiogram::polyhedra::{canonical_shape, ShapeKind};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: String,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: impl Into<String>, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.into(),
            message: message.into(),
        }
    }

    fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    fn conflict(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, code, message)
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    message: &'a str,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: &self.code,
            message: &self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

pub struct Session {
    pub id: String,
    pub created_at: u64,
    pub current: Design,
    pub undo: Vec<Design>,
    pub redo: Vec<Design>,
}

/// On-disk form of a session. Designs are stored as traces and rebuilt by
/// replay on load.
#[derive(Serialize, Deserialize)]
struct Snapshot {
    session_id: String,
    created_at: u64,
    grammar: GrammarId,
    initial_kind: ShapeKind,
    alternate: bool,
    trace: Vec<Move>,
    undo: Vec<Vec<Move>>,
    redo: Vec<Vec<Move>>,
}

impl Session {
    fn snapshot(&self) -> Snapshot {
        let d = &self.current;
        Snapshot {
            session_id: self.id.clone(),
            created_at: self.created_at,
            grammar: d.grammar,
            initial_kind: d.initial_kind,
            alternate: d.alternate,
            trace: d.trace.clone(),
            undo: self.undo.iter().map(|d| d.trace.clone()).collect(),
            redo: self.redo.iter().map(|d| d.trace.clone()).collect(),
        }
    }

    fn restore(s: Snapshot) -> Result<Session, String> {
        let build = |trace: &[Move]| {
            replay(
                s.grammar,
                s.initial_kind,
                s.alternate,
                trace,
                ApplyMode::Strict,
            )
            .map_err(|e| e.to_string())
        };
        Ok(Session {
            current: build(&s.trace)?,
            undo: s.undo.iter().map(|t| build(t)).collect::<Result<_, _>>()?,
            redo: s.redo.iter().map(|t| build(t)).collect::<Result<_, _>>()?,
            id: s.session_id,
            created_at: s.created_at,
        })
    }
}

type CatalogKey = (GrammarId, bool, usize);

pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    catalogs: Mutex<HashMap<CatalogKey, Arc<Catalog>>>,
    persist: Option<PathBuf>,
    catalog_max_depth: usize,
}

impl AppState {
    pub fn new(persist: Option<PathBuf>, catalog_max_depth: usize) -> Self {
        AppState {
            sessions: RwLock::new(HashMap::new()),
            catalogs: Mutex::new(HashMap::new()),
            persist,
            catalog_max_depth,
        }
    }

    /// Loads every snapshot in the persist directory; unreadable ones are
    /// skipped with a warning.
    pub fn load_snapshots(&self) -> std::io::Result<usize> {
        let Some(dir) = &self.persist else {
            return Ok(0);
        };
        fs::create_dir_all(dir)?;
        let mut loaded = 0;
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().is_none_or(|e| e != "json") {
                continue;
            }
            let session = fs::read_to_string(&path)
                .map_err(|e| e.to_string())
                .and_then(|t| serde_json::from_str::<Snapshot>(&t).map_err(|e| e.to_string()))
                .and_then(Session::restore);
            match session {
                Ok(s) => {
                    let id = s.id.clone();
                    self.sessions
                        .write()
                        .unwrap()
                        .insert(id, Arc::new(Mutex::new(s)));
                    loaded += 1;
                }
                Err(e) => log::warn!("skipping snapshot {}: {e}", path.display()),
            }
        }
        Ok(loaded)
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().unwrap().len()
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| {
                ApiError::new(
                    StatusCode::NOT_FOUND,
                    "UnknownSession",
                    format!("no session {id}"),
                )
            })
    }

    fn persist(&self, s: &Session) {
        let Some(dir) = &self.persist else {
            return;
        };
        if let Err(e) = write_snapshot(dir, s) {
            log::warn!("cannot snapshot session {}: {e}", s.id);
        }
    }
}

fn write_snapshot(dir: &Path, s: &Session) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(&s.snapshot())?;
    let tmp = dir.join(format!(".{}.json.tmp", s.id));
    fs::write(&tmp, text)?;
    fs::rename(tmp, dir.join(format!("{}.json", s.id)))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/design", get(get_design))
        .route("/sessions/{id}/moves", get(get_moves))
        .route("/sessions/{id}/apply", post(apply))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/redo", post(redo))
        .route("/sessions/{id}/frame", get(get_frame))
        .route("/sessions/{id}/twin", get(get_twin))
        .route("/catalog", get(get_catalog))
        .with_state(state)
}

pub async fn serve(
    host: &str,
    port: u16,
    persist: Option<PathBuf>,
    catalog_max_depth: usize,
) -> Result<(), CliError> {
    let state = Arc::new(AppState::new(persist, catalog_max_depth));
    let loaded = state
        .load_snapshots()
        .map_err(|e| CliError::Server(format!("cannot use persist directory: {e}")))?;
    if loaded > 0 {
        log::info!("restored {loaded} sessions");
    }
    let listener = tokio::net::TcpListener::bind((host, port))
        .await
        .map_err(|e| CliError::Server(format!("cannot bind {host}:{port}: {e}")))?;
    let addr = listener
        .local_addr()
        .map_err(|e| CliError::Server(e.to_string()))?;
    println!("listening on http://{addr}");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| CliError::Server(e.to_string()))
}

/// Float geometry for rendering. Every face carries its `shape.face` id so
/// clients pick faces without matching geometry themselves.
#[derive(Serialize)]
pub struct RenderMesh {
    pub approximate: bool,
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<RenderFace>,
}

#[derive(Serialize)]
pub struct RenderFace {
    pub face_id: String,
    pub shape: usize,
    pub face: usize,
    pub kind: ShapeKind,
    pub label: FaceLabel,
    pub vertices: [usize; 3],
}

#[derive(Serialize)]
pub struct DesignView {
    pub design: Design,
    pub l1_key: String,
    pub fcc_residency: bool,
    pub mesh: RenderMesh,
}

fn render_mesh(d: &Design) -> RenderMesh {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (si, s) in d.shapes.iter().enumerate() {
        let base = vertices.len();
        vertices.extend(s.vertices.iter().map(|v| v.to_f64().map(round_significant)));
        for (fi, f) in canonical_shape(s.kind).faces.iter().enumerate() {
            faces.push(RenderFace {
                face_id: format!("{si}.{fi}"),
                shape: si,
                face: fi,
                kind: s.kind,
                label: s.face_labels[fi],
                vertices: f.map(|i| base + i),
            });
        }
    }
    RenderMesh {
        approximate: true,
        vertices,
        faces,
    }
}

pub fn design_view(d: &Design) -> DesignView {
    DesignView {
        design: d.clone(),
        l1_key: canonical_key(d, EquivalenceLevel::L1Geometry).digest_hex(),
        fcc_residency: rooted_fcc_residency(d),
        mesh: render_mesh(d),
    }
}

#[derive(Deserialize)]
struct CreateSession {
    grammar: String,
    initial_kind: Option<String>,
    #[serde(default)]
    alternate: bool,
}

#[derive(Serialize)]
struct Created {
    session_id: String,
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> Result<(StatusCode, Json<Created>), ApiError> {
    let req: CreateSession = serde_json::from_slice(&body)
        .map_err(|e| ApiError::bad_request("MalformedRequest", e.to_string()))?;
    let grammar: GrammarId = req
        .grammar
        .parse()
        .map_err(|e: String| ApiError::bad_request("UnknownGrammar", e))?;
    let kind = match &req.initial_kind {
        Some(k) => k
            .parse::<ShapeKind>()
            .map_err(|e| ApiError::bad_request("UnknownKind", e.to_string()))?,
        None => grammar.initial_kinds()[0],
    };
    if req.alternate && grammar != GrammarId::TetOct {
        return Err(ApiError::bad_request(
            "MalformedRequest",
            "alternate only applies to TET_OCT",
        ));
    }
    let design = initial_design(grammar, kind, req.alternate)
        .map_err(|e| ApiError::bad_request(e.code(), e.to_string()))?;
    let session = Session {
        id: uuid::Uuid::new_v4().simple().to_string(),
        created_at: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        current: design,
        undo: Vec::new(),
        redo: Vec::new(),
    };
    let id = session.id.clone();
    state.persist(&session);
    state
        .sessions
        .write()
        .unwrap()
        .insert(id.clone(), Arc::new(Mutex::new(session)));
    log::info!("created session {id} ({grammar}, {kind})");
    Ok((StatusCode::CREATED, Json(Created { session_id: id })))
}

async fn get_design(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<DesignView> {
    let s = state.session(&id)?;
    let s = s.lock().unwrap();
    Ok(Json(design_view(&s.current)))
}

#[derive(Serialize)]
struct MovesView {
    count: usize,
    moves: Vec<CandidateMove>,
}

async fn get_moves(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<MovesView> {
    let s = state.session(&id)?;
    let moves = candidate_moves(&s.lock().unwrap().current);
    Ok(Json(MovesView {
        count: moves.len(),
        moves,
    }))
}

/// Accepts `{"move": {...}}` or a bare move object.
fn parse_move(body: &[u8]) -> Result<Move, ApiError> {
    let value: serde_json::Value = serde_json::from_slice(body)
        .map_err(|e| ApiError::bad_request("MalformedMove", e.to_string()))?;
    let inner = match value.get("move") {
        Some(m) => m.clone(),
        None => value,
    };
    serde_json::from_value(inner).map_err(|e| ApiError::bad_request("MalformedMove", e.to_string()))
}

async fn apply(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<DesignView> {
    let s = state.session(&id)?;
    let mv = parse_move(&body)?;
    let mut s = s.lock().unwrap();
    let next = apply_move(&s.current, &mv, ApplyMode::Strict)
        .map_err(|e| ApiError::conflict(e.code(), e.to_string()))?;
    let prev = std::mem::replace(&mut s.current, next);
    s.undo.push(prev);
    s.redo.clear();
    state.persist(&s);
    log::info!("session {id}: applied {mv}");
    Ok(Json(design_view(&s.current)))
}

async fn undo(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<DesignView> {
    step_history(&state, &id, true)
}

async fn redo(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<DesignView> {
    step_history(&state, &id, false)
}

fn step_history(state: &AppState, id: &str, backwards: bool) -> ApiResult<DesignView> {
    let s = state.session(id)?;
    let mut guard = s.lock().unwrap();
    let s = &mut *guard;
    let (from, to) = if backwards {
        (&mut s.undo, &mut s.redo)
    } else {
        (&mut s.redo, &mut s.undo)
    };
    let Some(d) = from.pop() else {
        let (code, what) = if backwards {
            ("NothingToUndo", "undo")
        } else {
            ("NothingToRedo", "redo")
        };
        return Err(ApiError::conflict(code, format!("nothing to {what}")));
    };
    to.push(std::mem::replace(&mut s.current, d));
    state.persist(s);
    Ok(Json(design_view(&s.current)))
}

#[derive(Serialize)]
struct FrameView {
    #[serde(flatten)]
    frame: FrameDoc,
    stats: FrameStats,
    fcc_residency: bool,
}

async fn get_frame(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<FrameView> {
    let s = state.session(&id)?;
    let d = s.lock().unwrap().current.clone();
    let internal = |e: radiogram::frame::FrameError| {
        ApiError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "InvalidDesign",
            e.to_string(),
        )
    };
    let frame = extract_frame(&d).map_err(internal)?;
    let stats = frame_stats(&frame).map_err(internal)?;
    Ok(Json(FrameView {
        frame: frame.to_doc(),
        stats,
        fcc_residency: rooted_fcc_residency(&d),
    }))
}

#[derive(Serialize)]
struct TwinView {
    is_chiral: bool,
    twin: DesignView,
}

async fn get_twin(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<TwinView> {
    let s = state.session(&id)?;
    let d = s.lock().unwrap().current.clone();
    let (twin, is_chiral) = mirror_twin(&d);
    Ok(Json(TwinView {
        is_chiral,
        twin: design_view(&twin),
    }))
}

#[derive(Deserialize)]
struct CatalogQuery {
    grammar: String,
    depth: usize,
    #[serde(default = "default_level")]
    level: String,
    #[serde(default)]
    alternate: bool,
    #[serde(default)]
    offset: usize,
    #[serde(default = "default_limit")]
    limit: usize,
}

fn default_level() -> String {
    "l1".into()
}

fn default_limit() -> usize {
    50
}

const MAX_PAGE: usize = 500;

#[derive(Serialize)]
struct CatalogPage {
    grammar: GrammarId,
    alternate: bool,
    depth: usize,
    level: EquivalenceLevel,
    total: usize,
    offset: usize,
    limit: usize,
    items: Vec<CatalogEntryDoc>,
}

async fn get_catalog(
    State(state): State<Arc<AppState>>,
    query: Result<Query<CatalogQuery>, QueryRejection>,
) -> ApiResult<CatalogPage> {
    let Query(q) = query.map_err(|e| ApiError::bad_request("MalformedQuery", e.body_text()))?;
    let grammar: GrammarId = q
        .grammar
        .parse()
        .map_err(|e: String| ApiError::bad_request("UnknownGrammar", e))?;
    let level: EquivalenceLevel = q
        .level
        .parse()
        .map_err(|e: String| ApiError::bad_request("UnknownLevel", e))?;
    if q.depth > state.catalog_max_depth {
        return Err(ApiError::bad_request(
            "DepthTooLarge",
            format!(
                "depth {} exceeds the service limit of {}",
                q.depth, state.catalog_max_depth
            ),
        ));
    }
    if q.alternate && grammar != GrammarId::TetOct {
        return Err(ApiError::bad_request(
            "MalformedQuery",
            "alternate only applies to TET_OCT",
        ));
    }
    let limit = q.limit.min(MAX_PAGE);
    let catalog = catalog_for(&state, (grammar, q.alternate, q.depth)).await?;
    let reps = catalog.representatives(level);
    let items = reps
        .iter()
        .skip(q.offset)
        .take(limit)
        .map(|e| CatalogEntryDoc::from(*e))
        .collect();
    Ok(Json(CatalogPage {
        grammar,
        alternate: q.alternate,
        depth: q.depth,
        level,
        total: reps.len(),
        offset: q.offset,
        limit,
        items,
    }))
}

async fn catalog_for(state: &AppState, key: CatalogKey) -> Result<Arc<Catalog>, ApiError> {
    if let Some(c) = state.catalogs.lock().unwrap().get(&key) {
        return Ok(c.clone());
    }
    let (id, alternate, depth) = key;
    let built = tokio::task::spawn_blocking(move || {
        build_catalog(
            GrammarSpec { id, alternate },
            depth,
            CatalogOptions {
                label_sensitive: false,
                parallel: true,
            },
        )
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))?;
    let built = Arc::new(built);
    Ok(state
        .catalogs
        .lock()
        .unwrap()
        .entry(key)
        .or_insert(built)
        .clone())
}
