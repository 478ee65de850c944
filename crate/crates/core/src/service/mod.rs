//! Authenticated JSON HTTP API over a [`Store`].
//!
//! Every route except `POST /api/login` requires `Authorization: Bearer
//! <token>`. Node paths in URLs use `~` between segments, e.g.
//! `KV~1.1.1~Ny`. Errors are `{code, message, detail?}` documents.
//!
//! | method | route | action |
//! |---|---|---|
//! | POST | `/api/login` | issue a session token |
//! | GET | `/api/config` | server limits |
//! | GET | `/api/taxonomy` | evidence taxonomy |
//! | GET, POST | `/api/works` | list / create works |
//! | GET | `/api/works/{id}` | full work document |
//! | POST | `/api/works/{id}/units` | add a functional unit |
//! | POST | `/api/nodes/{path}/layers` | add a commentary under a unit or layer |
//! | GET, PUT | `/api/layers/{path}` | read / edit a layer |
//! | GET, POST | `/api/layers/{path}/evidence` | list / add annotations |
//! | DELETE | `/api/layers/{path}/evidence/{id}` | remove an annotation |
//! | GET, POST | `/api/witnesses` | list / add witnesses |
//! | POST | `/api/units/{id}/readings` | record a reading |
//! | GET | `/api/works/{id}/reports/support` | `?units=a,b&layer=L` |
//! | GET | `/api/works/{id}/reports/transmission` | `?unit=U` |
//! | POST | `/api/works/{id}/trees` | distance matrix and tree |

pub mod auth;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{FromRequest, FromRequestParts, Path, Query, Request, State};
use axum::http::request::Parts;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::corpus::{Corpus, CorpusError, NodePath, NodeRef, UnitId, UnitKind, Witness};
use crate::evidence::{self, EvidenceKind, NewAnnotation};
use crate::phylogeny::{self, PhyloError, TreeRequest};
use crate::store::{Applied, Command, Outcome, Store, StoreError, USERS_FILE};

pub use auth::{AuthError, Role, TokenSigner, UserAccount, UserStore, DEFAULT_TOKEN_TTL};

pub const DEFAULT_PORT: u16 = 8077;

/// Shared state behind the router. The store mutex is the single writer;
/// reads work on snapshots taken under it.
pub struct AppState {
    store: Mutex<Store>,
    users: RwLock<UserStore>,
    users_path: Option<PathBuf>,
    signer: TokenSigner,
}

impl AppState {
    /// Users are read from `<data_dir>/users.json` when the store has a
    /// directory, and re-read on every login so `tht user add` takes effect
    /// without a restart.
    pub fn new(store: Store, secret: impl Into<Vec<u8>>, ttl: Duration) -> Result<Self, AuthError> {
        let users_path = store.dir().map(|d| d.join(USERS_FILE));
        let users = match &users_path {
            Some(p) => UserStore::load(p)?,
            None => UserStore::default(),
        };
        Ok(AppState { store: Mutex::new(store), users: RwLock::new(users), users_path, signer: TokenSigner::new(secret, ttl) })
    }

    /// In-memory user table, for stores without a directory.
    pub fn with_users(store: Store, users: UserStore, secret: impl Into<Vec<u8>>, ttl: Duration) -> Self {
        AppState { store: Mutex::new(store), users: RwLock::new(users), users_path: None, signer: TokenSigner::new(secret, ttl) }
    }

    pub fn snapshot(&self) -> Arc<Corpus> {
        self.store.lock().expect("store lock").snapshot()
    }

    /// Runs `f` with exclusive access to the store.
    pub fn with_store<T>(&self, f: impl FnOnce(&mut Store) -> T) -> T {
        f(&mut self.store.lock().expect("store lock"))
    }

    fn execute(&self, actor: &str, command: Command) -> Result<(Applied, Arc<Corpus>), ApiError> {
        let mut store = self.store.lock().expect("store lock");
        match store.execute(actor, command) {
            Ok(applied) => Ok((applied, store.snapshot())),
            Err(e) => Err(ApiError::from_store(e, &store.snapshot())),
        }
    }

    fn login(&self, username: &str, password: &str) -> Result<(String, u64, Role), AuthError> {
        if let Some(path) = &self.users_path {
            let fresh = UserStore::load(path)?;
            *self.users.write().expect("users lock") = fresh;
        }
        let users = self.users.read().expect("users lock");
        let account = users.verify(username, password)?;
        let (token, expires_at) = self.signer.issue(&account.username);
        Ok((token, expires_at, account.role))
    }
}

/// Error document returned by every failing route.
#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { status, code: code.to_owned(), message: message.into(), detail: None }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }

    fn with_detail(mut self, detail: Value) -> Self {
        self.detail = Some(detail);
        self
    }

    /// Like `From<CorpusError>`, but a revision conflict also carries the
    /// server's current text so the client can merge.
    fn from_corpus(e: CorpusError, corpus: &Corpus) -> Self {
        let err = ApiError::from(e.clone());
        match e {
            CorpusError::RevisionConflict { path, expected, current } => {
                let text = path.parse::<NodePath>().ok().and_then(|p| corpus.layer(&p).ok()).map(|l| l.text.clone());
                err.with_detail(json!({ "path": path, "expected_revision": expected, "current_revision": current, "text": text }))
            }
            _ => err,
        }
    }

    fn from_store(e: StoreError, corpus: &Corpus) -> Self {
        match e {
            StoreError::ValidationFailed(c) => ApiError::from_corpus(c, corpus),
            other => ApiError::from(other),
        }
    }
}

impl From<CorpusError> for ApiError {
    fn from(e: CorpusError) -> Self {
        let status = if e.is_not_found() {
            StatusCode::NOT_FOUND
        } else if matches!(e, CorpusError::RevisionConflict { .. }) {
            StatusCode::CONFLICT
        } else {
            StatusCode::UNPROCESSABLE_ENTITY
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::ValidationFailed(c) => c.into(),
            StoreError::IntegrityViolation(_) | StoreError::MalformedDocument(_) | StoreError::UnsupportedVersion { .. } => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string())
            }
            other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, other.code(), other.to_string()),
        }
    }
}

impl From<PhyloError> for ApiError {
    fn from(e: PhyloError) -> Self {
        match e {
            PhyloError::Corpus(c) => c.into(),
            PhyloError::InsufficientOverlap { ref a, ref b } => {
                let detail = json!({ "a": a, "b": b });
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string()).with_detail(detail)
            }
            other => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, other.code(), other.to_string()),
        }
    }
}

impl From<AuthError> for ApiError {
    fn from(e: AuthError) -> Self {
        let status = match e {
            AuthError::Io(_) | AuthError::MalformedUserTable(_) => StatusCode::INTERNAL_SERVER_ERROR,
            AuthError::DuplicateUser(_) | AuthError::MalformedUsername(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::UNAUTHORIZED,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status;
        let mut response = (status, Json(self)).into_response();
        if status == StatusCode::UNAUTHORIZED {
            response.headers_mut().insert(header::WWW_AUTHENTICATE, header::HeaderValue::from_static("Bearer"));
        }
        response
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Authenticated username, extracted from the bearer token.
pub struct Actor(pub String);

impl FromRequestParts<Arc<AppState>> for Actor {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &Arc<AppState>) -> Result<Self, Self::Rejection> {
        let header = parts.headers.get(header::AUTHORIZATION).and_then(|v| v.to_str().ok()).ok_or(AuthError::MissingToken)?;
        let token = header.strip_prefix("Bearer ").ok_or(AuthError::MissingToken)?.trim();
        Ok(Actor(state.signer.verify(token)?))
    }
}

/// JSON body whose rejections use the API error document.
pub struct Body<T>(pub T);

impl<T, S> FromRequest<S> for Body<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(rejection) => Err(json_rejection(rejection)),
        }
    }
}

fn json_rejection(rejection: JsonRejection) -> ApiError {
    ApiError::bad_request(rejection.body_text())
}

/// Query string whose rejections use the API error document.
pub struct Params<T>(pub T);

impl<T, S> FromRequestParts<S> for Params<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, Self::Rejection> {
        Query::<T>::from_request_parts(parts, state)
            .await
            .map(|Query(v)| Params(v))
            .map_err(|r: QueryRejection| ApiError::bad_request(r.body_text()))
    }
}

fn node_path(segment: &str) -> ApiResult<NodePath> {
    NodePath::from_url_segment(segment).map_err(ApiError::from)
}

fn layer_path(segment: &str) -> ApiResult<NodePath> {
    let path = node_path(segment)?;
    if !path.is_layer() {
        return Err(CorpusError::UnknownPath(path.to_string()).into());
    }
    Ok(path)
}

fn created(body: Value) -> Response {
    (StatusCode::CREATED, Json(body)).into_response()
}

/// Builds the API router.
pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/login", post(login))
        .route("/api/config", get(config))
        .route("/api/taxonomy", get(taxonomy))
        .route("/api/works", get(list_works).post(create_work))
        .route("/api/works/{id}", get(get_work))
        .route("/api/works/{id}/units", post(add_unit))
        .route("/api/works/{id}/reports/support", get(support_report))
        .route("/api/works/{id}/reports/transmission", get(transmission_report))
        .route("/api/works/{id}/trees", post(build_tree))
        .route("/api/nodes/{path}", get(get_node))
        .route("/api/nodes/{path}/layers", post(add_layer))
        .route("/api/layers/{path}", get(get_layer).put(edit_layer))
        .route("/api/layers/{path}/evidence", get(list_evidence).post(annotate))
        .route("/api/layers/{path}/evidence/{id}", delete(delete_evidence))
        .route("/api/witnesses", get(list_witnesses).post(add_witness))
        .route("/api/units/{id}/readings", post(record_reading))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "UnknownRoute", "no such route") })
        .with_state(state)
}

/// Serves the API until `shutdown` resolves.
pub async fn serve<F>(listener: tokio::net::TcpListener, state: Arc<AppState>, shutdown: F) -> std::io::Result<()>
where
    F: std::future::Future<Output = ()> + Send + 'static,
{
    axum::serve(listener, router(state).into_make_service_with_connect_info::<SocketAddr>())
        .with_graceful_shutdown(shutdown)
        .await
}

#[derive(Deserialize)]
struct LoginBody {
    username: String,
    password: String,
}

async fn login(State(state): State<Arc<AppState>>, Body(body): Body<LoginBody>) -> ApiResult<Json<Value>> {
    let (token, expires_at, role) = state.login(&body.username, &body.password)?;
    Ok(Json(json!({ "token": token, "expires_at": expires_at, "username": body.username, "role": role })))
}

async fn config(_: Actor, State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({ "sibling_limit": state.snapshot().sibling_limit() }))
}

async fn taxonomy(_: Actor, State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(json!(state.snapshot().taxonomy()))
}

async fn list_works(_: Actor, State(state): State<Arc<AppState>>) -> Json<Value> {
    let corpus = state.snapshot();
    let works: Vec<Value> = corpus
        .works()
        .map(|w| json!({ "id": w.id, "title": w.title, "script": w.script, "unit_count": w.units.len() }))
        .collect();
    Json(Value::Array(works))
}

async fn get_work(_: Actor, State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let corpus = state.snapshot();
    Ok(Json(json!(corpus.work(&id)?)))
}

#[derive(Deserialize)]
struct NewWork {
    id: String,
    title: String,
    #[serde(default = "default_script")]
    script: String,
}

fn default_script() -> String {
    "Devanagari".to_owned()
}

async fn create_work(Actor(actor): Actor, State(state): State<Arc<AppState>>, Body(body): Body<NewWork>) -> ApiResult<Response> {
    let (applied, _) = state.execute(&actor, Command::CreateWork { id: body.id, title: body.title, script: body.script })?;
    let Outcome::Work(work) = applied.outcome else { unreachable!("CreateWork yields a work") };
    Ok(created(json!({ "seq": applied.seq, "work": work })))
}

#[derive(Deserialize)]
struct NewUnit {
    #[serde(alias = "unit_id")]
    id: String,
    kind: UnitKind,
    base_text: String,
}

async fn add_unit(
    Actor(actor): Actor,
    State(state): State<Arc<AppState>>,
    Path(work): Path<String>,
    Body(body): Body<NewUnit>,
) -> ApiResult<Response> {
    let command = Command::AddUnit { work, unit: body.id, kind: body.kind, base_text: body.base_text };
    let (applied, _) = state.execute(&actor, command)?;
    let Outcome::Unit(unit) = applied.outcome else { unreachable!("AddUnit yields a unit") };
    Ok(created(json!({ "seq": applied.seq, "unit": unit })))
}

async fn get_node(_: Actor, State(state): State<Arc<AppState>>, Path(segment): Path<String>) -> ApiResult<Json<Value>> {
    let path = node_path(&segment)?;
    let corpus = state.snapshot();
    let body = match corpus.resolve(&path)? {
        NodeRef::Work(w) => json!({ "type": "work", "path": path, "node": w }),
        NodeRef::Unit(u) => json!({ "type": "unit", "path": path, "node": u }),
        NodeRef::Layer(l) => json!({ "type": "layer", "path": path, "node": l }),
    };
    Ok(Json(body))
}

#[derive(Deserialize)]
struct NewLayer {
    label: String,
    #[serde(default)]
    text: String,
}

async fn add_layer(
    Actor(actor): Actor,
    State(state): State<Arc<AppState>>,
    Path(segment): Path<String>,
    Body(body): Body<NewLayer>,
) -> ApiResult<Response> {
    let parent = node_path(&segment)?;
    let path = parent.child(&body.label);
    let (applied, _) = state.execute(&actor, Command::AddLayer { parent, label: body.label, text: body.text })?;
    let revision = applied.outcome.revision();
    let Outcome::Layer(layer) = applied.outcome else { unreachable!("AddLayer yields a layer") };
    Ok(created(json!({
        "seq": applied.seq,
        "path": path,
        "url_path": path.to_url_segment(),
        "revision": revision,
        "depth": layer.depth,
        "layer": layer,
    })))
}

async fn get_layer(_: Actor, State(state): State<Arc<AppState>>, Path(segment): Path<String>) -> ApiResult<Json<Value>> {
    let path = layer_path(&segment)?;
    let corpus = state.snapshot();
    Ok(Json(json!({ "path": path, "layer": corpus.layer(&path)? })))
}

#[derive(Deserialize)]
struct LayerEdit {
    text: String,
    expected_revision: u64,
}

async fn edit_layer(
    Actor(actor): Actor,
    State(state): State<Arc<AppState>>,
    Path(segment): Path<String>,
    Body(body): Body<LayerEdit>,
) -> ApiResult<Json<Value>> {
    let path = layer_path(&segment)?;
    let command = Command::EditLayer { path: path.clone(), text: body.text, expected_revision: body.expected_revision };
    let (applied, _) = state.execute(&actor, command)?;
    let revision = applied.outcome.revision();
    let Outcome::Layer(layer) = applied.outcome else { unreachable!("EditLayer yields a layer") };
    Ok(Json(json!({ "seq": applied.seq, "path": path, "revision": revision, "layer": layer })))
}

async fn list_evidence(_: Actor, State(state): State<Arc<AppState>>, Path(segment): Path<String>) -> ApiResult<Json<Value>> {
    let path = layer_path(&segment)?;
    let corpus = state.snapshot();
    Ok(Json(json!(corpus.layer(&path)?.annotations)))
}

#[derive(Deserialize)]
struct EvidenceBody {
    target_unit: UnitId,
    start: usize,
    end: usize,
    kind: EvidenceKind,
    #[serde(default)]
    subtype: Option<String>,
    #[serde(default)]
    quoted_form: Option<String>,
    #[serde(default)]
    note: Option<String>,
}

async fn annotate(
    Actor(actor): Actor,
    State(state): State<Arc<AppState>>,
    Path(segment): Path<String>,
    Body(body): Body<EvidenceBody>,
) -> ApiResult<Response> {
    let source = layer_path(&segment)?;
    let new = NewAnnotation {
        source,
        target_unit: body.target_unit,
        start: body.start,
        end: body.end,
        kind: body.kind,
        subtype: body.subtype,
        quoted_form: body.quoted_form,
        note: body.note,
    };
    let (applied, _) = state.execute(&actor, Command::Annotate(new))?;
    let Outcome::Annotation(annotation) = applied.outcome else { unreachable!("Annotate yields an annotation") };
    Ok(created(json!({ "seq": applied.seq, "annotation": annotation })))
}

async fn delete_evidence(
    Actor(actor): Actor,
    State(state): State<Arc<AppState>>,
    Path((segment, id)): Path<(String, String)>,
) -> ApiResult<Json<Value>> {
    let source = layer_path(&segment)?;
    let (applied, _) = state.execute(&actor, Command::DeleteAnnotation { source, id })?;
    let Outcome::AnnotationDeleted(annotation) = applied.outcome else { unreachable!("DeleteAnnotation yields an annotation") };
    Ok(Json(json!({ "seq": applied.seq, "deleted": annotation })))
}

async fn list_witnesses(_: Actor, State(state): State<Arc<AppState>>) -> Json<Value> {
    let corpus = state.snapshot();
    Json(json!(corpus.witnesses().collect::<Vec<_>>()))
}

async fn add_witness(Actor(actor): Actor, State(state): State<Arc<AppState>>, Body(body): Body<Witness>) -> ApiResult<Response> {
    let (applied, _) = state.execute(&actor, Command::AddWitness(body))?;
    let Outcome::Witness(witness) = applied.outcome else { unreachable!("AddWitness yields a witness") };
    Ok(created(json!({ "seq": applied.seq, "witness": witness })))
}

#[derive(Deserialize)]
struct ReadingBody {
    #[serde(alias = "witness")]
    witness_id: String,
    text: String,
    #[serde(default)]
    work: Option<String>,
}

/// `{id}` is `WORK~UNIT` or a bare unit id that is unique across works.
async fn record_reading(
    Actor(actor): Actor,
    State(state): State<Arc<AppState>>,
    Path(segment): Path<String>,
    Body(body): Body<ReadingBody>,
) -> ApiResult<Response> {
    let (work, unit) = match segment.split_once('~') {
        Some((work, unit)) => (Some(work.to_owned()), unit.parse::<UnitId>()?),
        None => (body.work.clone(), segment.parse::<UnitId>()?),
    };
    let work = match work {
        Some(w) => w,
        None => state.snapshot().find_unit(&unit)?.id.clone(),
    };
    let command = Command::RecordReading { work, unit, witness: body.witness_id, text: body.text };
    let (applied, _) = state.execute(&actor, command)?;
    let Outcome::Reading(reading) = applied.outcome else { unreachable!("RecordReading yields a reading") };
    Ok(created(json!({ "seq": applied.seq, "reading": reading })))
}

#[derive(Deserialize)]
struct SupportQuery {
    units: String,
    layer: String,
}

async fn support_report(
    _: Actor,
    State(state): State<Arc<AppState>>,
    Path(work): Path<String>,
    Params(q): Params<SupportQuery>,
) -> ApiResult<Json<Value>> {
    let units = q
        .units
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse::<UnitId>)
        .collect::<Result<Vec<_>, _>>()?;
    if units.is_empty() {
        return Err(ApiError::bad_request("`units` lists no unit ids"));
    }
    let corpus = state.snapshot();
    let stats = evidence::support_report(&corpus, &work, &units, &q.layer)?;
    let mut body = json!(stats);
    body["percentage"] = json!(stats.percentage());
    body["summary"] = json!(stats.to_string());
    Ok(Json(body))
}

#[derive(Deserialize)]
struct TransmissionQuery {
    unit: UnitId,
}

async fn transmission_report(
    _: Actor,
    State(state): State<Arc<AppState>>,
    Path(work): Path<String>,
    Params(q): Params<TransmissionQuery>,
) -> ApiResult<Json<Value>> {
    let corpus = state.snapshot();
    Ok(Json(json!(evidence::transmission_report(&corpus, &work, &q.unit)?)))
}

async fn build_tree(
    _: Actor,
    State(state): State<Arc<AppState>>,
    Path(work): Path<String>,
    Body(request): Body<TreeRequest>,
) -> ApiResult<Json<Value>> {
    let corpus = state.snapshot();
    let result = phylogeny::build_tree(&corpus, &work, &request)?;
    Ok(Json(json!({
        "request": request,
        "newick": result.newick,
        "matrix": result.matrix,
        "warnings": result.warnings,
    })))
}
