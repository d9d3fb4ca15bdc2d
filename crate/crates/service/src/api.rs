//! HTTP routes.

use std::collections::HashMap;
use std::convert::Infallible;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::header;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures_util::stream::{self, Stream, StreamExt};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;
use tokio_stream::wrappers::BroadcastStream;

use fpnav_core::dataset::{template_text, TEMPLATE_COUNT};
use fpnav_core::eval::TableFormat;
use fpnav_core::geometry::FloorPlan;
use fpnav_core::render::{encode_png, render_floorplan, PlanRaster, RasterConfig};
use fpnav_core::simulator::World;

use crate::session::{CreateSession, Session, SessionEvent, SessionSnapshot, SessionView, StepRequest};
use crate::store::Store;
use crate::ServiceError;

/// Environment variable naming the store root.
pub const STORE_ENV: &str = "FPNAV_STORE";

const EVENT_BUFFER: usize = 64;

struct SessionSlot {
    session: tokio::sync::Mutex<Session>,
    events: broadcast::Sender<SessionEvent>,
}

type PlanAssets = (Arc<World>, Arc<PlanRaster>);

/// Shared server state.
pub struct AppState {
    store: Store,
    raster: RasterConfig,
    sessions: RwLock<HashMap<String, Arc<SessionSlot>>>,
    plans: Mutex<HashMap<String, PlanAssets>>,
}

impl AppState {
    pub fn new(store: Store) -> Self {
        Self {
            store,
            raster: RasterConfig::default(),
            sessions: RwLock::new(HashMap::new()),
            plans: Mutex::new(HashMap::new()),
        }
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    fn assets(&self, floorplan_id: &str) -> Result<PlanAssets, ServiceError> {
        if let Some(a) = self.plans.lock().expect("plan cache").get(floorplan_id) {
            return Ok(a.clone());
        }
        let fp = self.store.get_floorplan(floorplan_id)?;
        let raster = Arc::new(render_floorplan(&fp, &self.raster)?);
        let assets = (Arc::new(World::new(fp)), raster);
        self.plans
            .lock()
            .expect("plan cache")
            .insert(floorplan_id.to_string(), assets.clone());
        Ok(assets)
    }

    fn insert(&self, session: Session) -> Arc<SessionSlot> {
        let id = session.id().to_string();
        let (events, _) = broadcast::channel(EVENT_BUFFER);
        let slot = Arc::new(SessionSlot {
            session: tokio::sync::Mutex::new(session),
            events,
        });
        self.sessions
            .write()
            .expect("session map")
            .entry(id)
            .or_insert(slot)
            .clone()
    }

    /// Live session, restored from its snapshot when not in memory.
    fn slot(&self, id: &str) -> Result<Arc<SessionSlot>, ServiceError> {
        if let Some(s) = self.sessions.read().expect("session map").get(id) {
            return Ok(Arc::clone(s));
        }
        let path = self.store.session_path(id)?;
        let text = std::fs::read_to_string(&path).map_err(|_| ServiceError::UnknownSession(id.to_string()))?;
        let snapshot: SessionSnapshot = serde_json::from_str(&text)?;
        let (world, raster) = self.assets(&snapshot.floorplan_id)?;
        Ok(self.insert(Session::restore(&snapshot, world, raster)?))
    }
}

type Shared = Arc<AppState>;

#[derive(Serialize)]
struct IdBody {
    id: String,
}

#[derive(Serialize)]
struct RasterInfo {
    url: String,
    width: u32,
    height: u32,
    pixels_per_meter: f64,
    margin: f64,
    min_x: f64,
    max_y: f64,
}

#[derive(Serialize)]
struct TemplateInfo {
    template_id: usize,
    with_stop: &'static str,
    without_stop: &'static str,
}

#[derive(Serialize)]
struct SavedEpisode {
    id: String,
    episode_id: String,
}

#[derive(Deserialize)]
struct TableQuery {
    #[serde(default)]
    format: Option<String>,
}

fn json_text(text: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], text).into_response()
}

fn png(bytes: Vec<u8>) -> Response {
    (
        [
            (header::CONTENT_TYPE, "image/png"),
            (header::CACHE_CONTROL, "no-store"),
        ],
        bytes,
    )
        .into_response()
}

async fn upload_floorplan(State(app): State<Shared>, body: Bytes) -> Result<Json<IdBody>, ServiceError> {
    let text = std::str::from_utf8(&body).map_err(|e| ServiceError::InvalidDocument(e.to_string()))?;
    let fp = FloorPlan::parse(text).map_err(|e| ServiceError::InvalidDocument(e.to_string()))?;
    Ok(Json(IdBody {
        id: app.store.put_floorplan(&fp)?,
    }))
}

async fn list_floorplans(State(app): State<Shared>) -> Result<Json<Vec<String>>, ServiceError> {
    Ok(Json(app.store.list_floorplans()?))
}

async fn get_floorplan(State(app): State<Shared>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    Ok(json_text(app.store.floorplan_text(&id)?))
}

async fn get_raster(State(app): State<Shared>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let (_, raster) = app.assets(&id)?;
    Ok(png(encode_png(&raster.image)?))
}

async fn get_raster_info(
    State(app): State<Shared>,
    Path(id): Path<String>,
) -> Result<Json<RasterInfo>, ServiceError> {
    let (_, raster) = app.assets(&id)?;
    let t = raster.transform;
    Ok(Json(RasterInfo {
        url: format!("/floorplans/{id}/raster.png"),
        width: raster.image.width(),
        height: raster.image.height(),
        pixels_per_meter: t.pixels_per_meter,
        margin: t.margin,
        min_x: t.min_x,
        max_y: t.max_y,
    }))
}

async fn templates() -> Json<Vec<TemplateInfo>> {
    Json(
        (0..TEMPLATE_COUNT)
            .filter_map(|i| {
                template_text(i).map(|(with_stop, without_stop)| TemplateInfo {
                    template_id: i,
                    with_stop,
                    without_stop,
                })
            })
            .collect(),
    )
}

async fn create_session(
    State(app): State<Shared>,
    Json(req): Json<CreateSession>,
) -> Result<Json<SessionView>, ServiceError> {
    let (world, raster) = app.assets(&req.floorplan_id)?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = Session::create(id, &req, world, raster)?;
    app.store.put_session_snapshot(session.id(), &session.snapshot())?;
    let view = session.view();
    app.insert(session);
    Ok(Json(view))
}

async fn get_session(State(app): State<Shared>, Path(id): Path<String>) -> Result<Json<SessionView>, ServiceError> {
    let slot = app.slot(&id)?;
    let view = slot.session.lock().await.view();
    Ok(Json(view))
}

async fn step_session(
    State(app): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<StepRequest>,
) -> Result<Json<SessionView>, ServiceError> {
    let action = req.to_action()?;
    let slot = app.slot(&id)?;
    let mut session = slot.session.lock().await;
    let view = session.step(action)?;
    app.store.put_session_snapshot(&id, &session.snapshot())?;
    let _ = slot.events.send(session.event());
    Ok(Json(view))
}

async fn session_frame(State(app): State<Shared>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let slot = app.slot(&id)?;
    let bytes = slot.session.lock().await.frame_png().to_vec();
    Ok(png(bytes))
}

async fn save_session(State(app): State<Shared>, Path(id): Path<String>) -> Result<Json<SavedEpisode>, ServiceError> {
    let slot = app.slot(&id)?;
    let episode = slot.session.lock().await.to_episode()?;
    Ok(Json(SavedEpisode {
        id: app.store.put_episode(&episode)?,
        episode_id: episode.episode_id,
    }))
}

async fn session_events(
    State(app): State<Shared>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ServiceError> {
    let slot = app.slot(&id)?;
    let (current, rx) = {
        let session = slot.session.lock().await;
        (session.event(), slot.events.subscribe())
    };
    let to_event = |e: SessionEvent| Ok(Event::default().event("step").json_data(e).expect("event serializes"));
    let live = BroadcastStream::new(rx).filter_map(move |e| async move { e.ok().map(to_event) });
    Ok(Sse::new(stream::once(async move { to_event(current) }).chain(live)).keep_alive(KeepAlive::default()))
}

async fn list_episodes(State(app): State<Shared>) -> Result<Response, ServiceError> {
    Ok(json_text(serde_json::to_string(&app.store.list_episodes()?)?))
}

async fn get_episode(State(app): State<Shared>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    Ok(json_text(app.store.get_episode(&id)?.to_json()))
}

async fn list_runs(State(app): State<Shared>) -> Result<Json<Vec<String>>, ServiceError> {
    Ok(Json(app.store.list_runs()?))
}

async fn get_run(State(app): State<Shared>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    Ok(json_text(serde_json::to_string(&app.store.get_run(&id)?)?))
}

async fn run_table(
    State(app): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<TableQuery>,
) -> Result<Response, ServiceError> {
    let format: TableFormat = q
        .format
        .as_deref()
        .unwrap_or("md")
        .parse()
        .map_err(|e: String| ServiceError::InvalidDocument(e))?;
    let report = app.store.get_run(&id)?;
    let mime = match format {
        TableFormat::Md => "text/markdown; charset=utf-8",
        TableFormat::Csv => "text/csv; charset=utf-8",
    };
    Ok(([(header::CONTENT_TYPE, mime)], report.table(format)).into_response())
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/floorplans", post(upload_floorplan).get(list_floorplans))
        .route("/floorplans/{id}", get(get_floorplan))
        .route("/floorplans/{id}/raster.png", get(get_raster))
        .route("/floorplans/{id}/raster.json", get(get_raster_info))
        .route("/templates", get(templates))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/step", post(step_session))
        .route("/sessions/{id}/frame.png", get(session_frame))
        .route("/sessions/{id}/save", post(save_session))
        .route("/sessions/{id}/events", get(session_events))
        .route("/episodes", get(list_episodes))
        .route("/episodes/{id}", get(get_episode))
        .route("/runs", get(list_runs))
        .route("/runs/{id}", get(get_run))
        .route("/runs/{id}/table", get(run_table))
        .with_state(state)
}

#[derive(Clone, Debug)]
pub struct ServeConfig {
    pub host: String,
    pub port: u16,
    pub store_root: PathBuf,
}

/// Binds and serves until the process is stopped.
pub async fn serve(config: ServeConfig) -> Result<(), ServiceError> {
    let store = Store::open(&config.store_root)?;
    let app = router(Arc::new(AppState::new(store)));
    let addr: SocketAddr = format!("{}:{}", config.host, config.port)
        .parse()
        .map_err(|e| ServiceError::InvalidDocument(format!("bad address: {e}")))?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await?;
    Ok(())
}
