//! REST API over the store.
//!
//! Every list endpoint also answers with CSV when given `format=csv`; the CSV
//! has one column per JSON field, arrays joined with spaces. Story
//! endpoints return metadata only, never text.

use crate::fetch::Fetcher;
use crate::store::{SpiderStatus, Store, StoreError, Story, TopicSpec, TopicState};
use crate::textproc::TextProcessor;
use crate::topics::export::{TopicDataset, DATETIME_FORMAT};
use crate::topics::{ingest_platform_posts, run_spider, subtopic, zip_topic, ShareProvider, SpiderOptions};
use axum::body::{Body, Bytes};
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, NaiveDate, Utc};
use mediacloud_core::query::{attention_over_time, parse_query, word_counts, ParseError, Query as Ast, Stopwords};
use mediacloud_core::Bucket;
use serde::Deserialize;
use serde_json::{json, Map, Value};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex, PoisonError, RwLock};

pub const DEFAULT_ROWS: usize = 20;
pub const MAX_ROWS: usize = 1000;
pub const DEFAULT_NUM_WORDS: usize = 100;

type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<RwLock<Store>>,
    pub fetcher: Arc<dyn Fetcher>,
    pub text: Arc<TextProcessor>,
    pub shares: Option<Arc<dyn ShareProvider>>,
    pub workers: usize,
    /// Accepted values of the `key` parameter. Empty disables the check.
    pub api_keys: Arc<Vec<String>>,
    pub clock: Clock,
    runs: Arc<Mutex<Runs>>,
}

#[derive(Default)]
struct Runs {
    running: BTreeSet<u64>,
    last_error: BTreeMap<u64, String>,
}

impl AppState {
    pub fn new(store: Store, fetcher: Arc<dyn Fetcher>) -> Self {
        AppState {
            store: Arc::new(RwLock::new(store)),
            fetcher,
            text: Arc::new(TextProcessor::default()),
            shares: None,
            workers: 4,
            api_keys: Arc::new(Vec::new()),
            clock: Arc::new(Utc::now),
            runs: Arc::default(),
        }
    }

    pub fn with_clock(mut self, clock: impl Fn() -> DateTime<Utc> + Send + Sync + 'static) -> Self {
        self.clock = Arc::new(clock);
        self
    }

    pub fn with_keys(mut self, keys: Vec<String>) -> Self {
        self.api_keys = Arc::new(keys);
        self
    }

    pub fn with_shares(mut self, shares: Arc<dyn ShareProvider>) -> Self {
        self.shares = Some(shares);
        self
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Store> {
        self.store.read().unwrap_or_else(PoisonError::into_inner)
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, Store> {
        self.store.write().unwrap_or_else(PoisonError::into_inner)
    }

    fn runs(&self) -> std::sync::MutexGuard<'_, Runs> {
        self.runs.lock().unwrap_or_else(PoisonError::into_inner)
    }

    /// Whether a spider run is in progress for the topic.
    pub fn is_running(&self, topics_id: u64) -> bool {
        self.runs().running.contains(&topics_id)
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    position: Option<usize>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into(), position: None }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, what)
    }
}

impl From<ParseError> for ApiError {
    fn from(e: ParseError) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, message: e.to_string(), position: Some(e.position) }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Query(p) => p.into(),
            StoreError::UnknownTopic(_) | StoreError::UnknownStory(_) => ApiError::not_found(e.to_string()),
            StoreError::Io(_) | StoreError::Journal { .. } => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
            }
            other => ApiError::bad_request(other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message });
        if let Some(p) = self.position {
            body["position"] = p.into();
        }
        (self.status, Json(body)).into_response()
    }
}

type Params = Query<HashMap<String, String>>;
type ApiResult = Result<Response, ApiError>;

fn param_usize(p: &HashMap<String, String>, name: &str, default: usize) -> Result<usize, ApiError> {
    match p.get(name).map(|s| s.trim()).filter(|s| !s.is_empty()) {
        None => Ok(default),
        Some(s) => s.parse().map_err(|_| ApiError::bad_request(format!("{name} must be a non-negative integer"))),
    }
}

fn param_u64(p: &HashMap<String, String>, name: &str) -> Result<Option<u64>, ApiError> {
    match p.get(name).map(|s| s.trim()).filter(|s| !s.is_empty()) {
        None => Ok(None),
        Some(s) => s.parse().map(Some).map_err(|_| ApiError::bad_request(format!("{name} must be an integer id"))),
    }
}

fn query_param(p: &HashMap<String, String>) -> Result<Ast, ApiError> {
    let q = p.get("q").ok_or_else(|| ApiError::bad_request("missing q"))?;
    Ok(parse_query(q)?)
}

fn rows_param(p: &HashMap<String, String>) -> Result<usize, ApiError> {
    Ok(param_usize(p, "rows", DEFAULT_ROWS)?.min(MAX_ROWS))
}

fn wants_csv(p: &HashMap<String, String>) -> bool {
    p.get("format").is_some_and(|f| f.eq_ignore_ascii_case("csv"))
}

/// Rows with a fixed column order, rendered as a JSON array or CSV.
struct Table {
    columns: &'static [&'static str],
    rows: Vec<Map<String, Value>>,
}

impl Table {
    fn new(columns: &'static [&'static str]) -> Self {
        Table { columns, rows: Vec::new() }
    }

    fn push(&mut self, row: Value) {
        if let Value::Object(m) = row {
            self.rows.push(m);
        }
    }

    fn from_serialized<T: serde::Serialize>(columns: &'static [&'static str], rows: &[T]) -> Self {
        let mut t = Table::new(columns);
        for r in rows {
            t.push(serde_json::to_value(r).expect("row serializes"));
        }
        t
    }

    fn respond(self, csv: bool) -> ApiResult {
        if !csv {
            return Ok(Json(Value::Array(self.rows.into_iter().map(Value::Object).collect())).into_response());
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string());
        w.write_record(self.columns).map_err(io)?;
        for row in &self.rows {
            let cells: Vec<String> = self.columns.iter().map(|c| cell(row.get(*c).unwrap_or(&Value::Null))).collect();
            w.write_record(cells).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
        Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], bytes).into_response())
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(a) => a.iter().map(cell).collect::<Vec<_>>().join(" "),
        other => other.to_string(),
    }
}

const STORY_COLUMNS: &[&str] =
    &["stories_id", "media_id", "media_name", "title", "publish_date", "collect_date", "url", "guid", "language", "tags"];

fn story_json(store: &Store, s: &Story) -> Value {
    json!({
        "stories_id": s.stories_id,
        "media_id": s.media_id,
        "media_name": store.media(s.media_id).map(|m| m.name.as_str()).unwrap_or(""),
        "title": s.title,
        "publish_date": s.publish_date.format(DATETIME_FORMAT).to_string(),
        "collect_date": s.collect_date.format(DATETIME_FORMAT).to_string(),
        "url": s.url,
        "guid": s.guid,
        "language": s.language,
        "tags": s.tags.iter().collect::<Vec<_>>(),
    })
}

async fn stories_list(State(st): State<AppState>, Query(p): Params) -> ApiResult {
    let query = query_param(&p)?;
    let rows = rows_param(&p)?;
    let cursor = param_u64(&p, "last_processed_stories_id")?.unwrap_or(0);
    let store = st.read();
    let mut t = Table::new(STORY_COLUMNS);
    for id in store.search(&query).into_iter().filter(|id| *id > cursor).take(rows) {
        t.push(story_json(&store, store.story(id).expect("indexed story")));
    }
    t.respond(wants_csv(&p))
}

async fn stories_count(State(st): State<AppState>, Query(p): Params) -> ApiResult {
    let query = query_param(&p)?;
    let store = st.read();
    let total = store.search(&query).len();
    let Some(split) = p.get("split").filter(|s| !s.is_empty()) else {
        if wants_csv(&p) {
            let mut t = Table::new(&["count"]);
            t.push(json!({ "count": total }));
            return t.respond(true);
        }
        return Ok(Json(json!({ "count": total })).into_response());
    };
    let bucket: Bucket = split.parse().map_err(|_| ApiError::bad_request("split must be day, week or month"))?;
    let series = attention_over_time(store.index(), &query, bucket);
    let mut t = Table::new(&["date", "count"]);
    for (date, count) in &series {
        t.push(json!({ "date": date.to_string(), "count": count }));
    }
    if wants_csv(&p) {
        return t.respond(true);
    }
    let counts: Vec<Value> = t.rows.into_iter().map(Value::Object).collect();
    Ok(Json(json!({ "count": total, "split": bucket.as_str(), "counts": counts })).into_response())
}

async fn word_list(State(st): State<AppState>, Query(p): Params) -> ApiResult {
    let query = query_param(&p)?;
    let n = param_usize(&p, "num_words", DEFAULT_NUM_WORDS)?;
    if n == 0 {
        return Err(ApiError::bad_request("num_words must be at least 1"));
    }
    let languages: Vec<&str> = p
        .get("languages")
        .map(|l| l.split([',', ' ']).filter(|s| !s.is_empty()).collect())
        .unwrap_or_else(|| vec!["en"]);
    let stopwords = Stopwords::for_languages(&languages);
    let store = st.read();
    let mut t = Table::new(&["term", "count"]);
    for (term, count) in word_counts(store.index(), &query, n, &stopwords) {
        t.push(json!({ "term": term, "count": count }));
    }
    t.respond(wants_csv(&p))
}

const MEDIA_COLUMNS: &[&str] = &["media_id", "name", "url", "start_date", "tags"];

fn media_json(m: &crate::store::MediaSource) -> Value {
    json!({
        "media_id": m.media_id,
        "name": m.name,
        "url": m.url,
        "start_date": m.start_date.to_string(),
        "tags": m.tags.iter().collect::<Vec<_>>(),
    })
}

async fn media_list(State(st): State<AppState>, Query(p): Params) -> ApiResult {
    let rows = rows_param(&p)?;
    let cursor = param_u64(&p, "last_media_id")?.unwrap_or(0);
    let tag = param_u64(&p, "tags_id")?;
    let store = st.read();
    let mut t = Table::new(MEDIA_COLUMNS);
    store
        .media_list()
        .filter(|m| m.media_id > cursor && tag.is_none_or(|tag| m.tags.contains(&tag)))
        .take(rows)
        .for_each(|m| t.push(media_json(m)));
    t.respond(wants_csv(&p))
}

async fn media_single(State(st): State<AppState>, Path(id): Path<u64>) -> ApiResult {
    let store = st.read();
    let m = store.media(id).ok_or_else(|| ApiError::not_found(format!("unknown media id {id}")))?;
    Ok(Json(media_json(m)).into_response())
}

const FEED_COLUMNS: &[&str] = &["feeds_id", "media_id", "url", "active", "type", "poll_interval", "next_poll_at"];

async fn feeds_list(State(st): State<AppState>, Query(p): Params) -> ApiResult {
    let media = param_u64(&p, "media_id")?;
    let store = st.read();
    if let Some(m) = media {
        if store.media(m).is_none() {
            return Err(ApiError::not_found(format!("unknown media id {m}")));
        }
    }
    let mut t = Table::new(FEED_COLUMNS);
    for f in store.feeds().filter(|f| media.is_none_or(|m| f.media_id == m)) {
        t.push(json!({
            "feeds_id": f.feeds_id,
            "media_id": f.media_id,
            "url": f.url,
            "active": f.active,
            "type": f.feed_type.as_str(),
            "poll_interval": f.poll_interval,
            "next_poll_at": f.next_poll_at.format(DATETIME_FORMAT).to_string(),
        }));
    }
    t.respond(wants_csv(&p))
}

async fn tags_list(State(st): State<AppState>, Query(p): Params) -> ApiResult {
    let set = param_u64(&p, "tag_sets_id")?;
    let store = st.read();
    let mut t = Table::new(&["tags_id", "tag_sets_id", "tag", "label", "description"]);
    for tag in store.tags().filter(|t| set.is_none_or(|s| t.tag_sets_id == s)) {
        t.push(serde_json::to_value(tag).expect("tag serializes"));
    }
    t.respond(wants_csv(&p))
}

async fn tag_sets_list(State(st): State<AppState>, Query(p): Params) -> ApiResult {
    let store = st.read();
    let mut t = Table::new(&["tag_sets_id", "name", "label", "description"]);
    for ts in store.tag_sets() {
        t.push(serde_json::to_value(ts).expect("tag set serializes"));
    }
    t.respond(wants_csv(&p))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateTopic {
    name: String,
    #[serde(alias = "seed_query")]
    query: String,
    start_date: NaiveDate,
    end_date: NaiveDate,
    #[serde(default)]
    media_ids: BTreeSet<u64>,
    #[serde(default)]
    collection_ids: BTreeSet<u64>,
    #[serde(default)]
    seed_urls: Vec<String>,
    max_rounds: Option<u32>,
    fetch_budget: Option<usize>,
}

fn status_str(s: SpiderStatus) -> &'static str {
    match s {
        SpiderStatus::Created => "created",
        SpiderStatus::Running => "running",
        SpiderStatus::Completed => "completed",
    }
}

fn topic_json(st: &AppState, t: &TopicState) -> Value {
    let id = t.topic.topics_id;
    let runs = st.runs();
    json!({
        "topics_id": id,
        "name": t.topic.name,
        "seed_query": t.topic.seed_query,
        "start_date": t.topic.start_date.to_string(),
        "end_date": t.topic.end_date.to_string(),
        "media_ids": t.topic.seed_media,
        "collection_ids": t.topic.seed_collections,
        "seed_urls": t.topic.seed_urls,
        "max_rounds": t.topic.max_rounds,
        "fetch_budget": t.topic.fetch_budget,
        "status": status_str(t.status),
        "spider_running": runs.running.contains(&id),
        "rounds_completed": t.rounds_completed,
        "story_count": t.members.len(),
        "link_count": t.links.len(),
        "fetches": t.fetches,
        "failure_count": t.failures.len(),
        "last_error": runs.last_error.get(&id),
    })
}

async fn topic_create(State(st): State<AppState>, body: Bytes) -> ApiResult {
    let req: CreateTopic =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("topic body: {e}")))?;
    let mut spec = TopicSpec::new(&req.name, &req.query, req.start_date, req.end_date);
    spec.seed_media = req.media_ids;
    spec.seed_collections = req.collection_ids;
    spec.seed_urls = req.seed_urls;
    if let Some(r) = req.max_rounds {
        spec.max_rounds = r;
    }
    if let Some(b) = req.fetch_budget {
        spec.fetch_budget = b;
    }
    let id = {
        let mut store = st.write();
        let id = store.create_topic(spec)?;
        store.sync()?;
        id
    };
    let store = st.read();
    let body = topic_json(&st, store.topic(id).expect("created topic"));
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn topics_list(State(st): State<AppState>) -> ApiResult {
    let store = st.read();
    let all: Vec<Value> = store.topics().map(|t| topic_json(&st, t)).collect();
    Ok(Json(Value::Array(all)).into_response())
}

fn with_topic<T>(st: &AppState, id: u64, f: impl FnOnce(&Store, &TopicState) -> Result<T, ApiError>) -> Result<T, ApiError> {
    let store = st.read();
    let t = store.topic(id).ok_or_else(|| ApiError::not_found(format!("unknown topic id {id}")))?;
    f(&store, t)
}

async fn topic_single(State(st): State<AppState>, Path(id): Path<u64>) -> ApiResult {
    with_topic(&st, id, |_, t| Ok(Json(topic_json(&st, t)).into_response()))
}

async fn topic_spider(State(st): State<AppState>, Path(id): Path<u64>) -> ApiResult {
    with_topic(&st, id, |_, _| Ok(()))?;
    if !st.runs().running.insert(id) {
        return Err(ApiError::new(StatusCode::CONFLICT, format!("topic {id} spider is already running")));
    }
    st.runs().last_error.remove(&id);
    let run = st.clone();
    tokio::task::spawn_blocking(move || {
        let shares = run.shares.clone();
        let opts = SpiderOptions {
            fetcher: &*run.fetcher,
            text: &run.text,
            workers: run.workers,
            now: (run.clock)(),
            shares: shares.as_deref(),
        };
        let result = run_spider(&run.store, id, &opts, |_| {});
        let mut runs = run.runs();
        if let Err(e) = result {
            runs.last_error.insert(id, e.to_string());
        }
        runs.running.remove(&id);
    });
    Ok((StatusCode::ACCEPTED, Json(json!({ "topics_id": id, "status": "running" }))).into_response())
}

const TOPIC_STORY_COLUMNS: &[&str] = &crate::topics::export::STORIES_HEADER;

async fn topic_stories(State(st): State<AppState>, Path(id): Path<u64>, Query(p): Params) -> ApiResult {
    with_topic(&st, id, |store, t| {
        let mut rows = TopicDataset::build(store, t).stories;
        if let Some(q) = p.get("q").filter(|q| !q.trim().is_empty()) {
            let keep = subtopic(store, t, q)?;
            rows.retain(|r| keep.contains(&r.stories_id));
        }
        Table::from_serialized(TOPIC_STORY_COLUMNS, &rows).respond(wants_csv(&p))
    })
}

async fn topic_links(State(st): State<AppState>, Path(id): Path<u64>, Query(p): Params) -> ApiResult {
    with_topic(&st, id, |store, t| {
        let rows = TopicDataset::build(store, t).story_links;
        Table::from_serialized(&crate::topics::export::STORY_LINKS_HEADER, &rows).respond(wants_csv(&p))
    })
}

async fn topic_media(State(st): State<AppState>, Path(id): Path<u64>, Query(p): Params) -> ApiResult {
    with_topic(&st, id, |store, t| {
        let rows = TopicDataset::build(store, t).media;
        Table::from_serialized(&crate::topics::export::MEDIA_HEADER, &rows).respond(wants_csv(&p))
    })
}

async fn topic_timespans(State(st): State<AppState>, Path(id): Path<u64>, Query(p): Params) -> ApiResult {
    with_topic(&st, id, |store, t| {
        let rows = TopicDataset::build(store, t).timespans;
        Table::from_serialized(&crate::topics::export::TIMESPANS_HEADER, &rows).respond(wants_csv(&p))
    })
}

async fn topic_download(State(st): State<AppState>, Path(id): Path<u64>) -> ApiResult {
    let bytes = with_topic(&st, id, |store, _| Ok(zip_topic(store, id)?))?;
    let disposition = format!("attachment; filename=\"topic-{id}.zip\"");
    Ok(([(header::CONTENT_TYPE, "application/zip".to_string()), (header::CONTENT_DISPOSITION, disposition)], bytes)
        .into_response())
}

async fn topic_posts(State(st): State<AppState>, Path(id): Path<u64>, body: Bytes) -> ApiResult {
    with_topic(&st, id, |_, _| Ok(()))?;
    if st.is_running(id) {
        return Err(ApiError::new(StatusCode::CONFLICT, format!("topic {id} spider is running")));
    }
    let now = (st.clock)();
    let summary = ingest_platform_posts(&mut st.write(), id, body.as_ref(), now)?;
    Ok(Json(json!({
        "posts": summary.posts,
        "urls_added": summary.urls_added,
        "skipped": summary.skipped,
    }))
    .into_response())
}

async fn require_key(State(st): State<AppState>, Query(p): Params, req: Request, next: Next) -> Response {
    if st.api_keys.is_empty() || p.get("key").is_some_and(|k| st.api_keys.contains(k)) {
        return next.run(req).await;
    }
    ApiError::new(StatusCode::UNAUTHORIZED, "missing or invalid key").into_response()
}

async fn not_found() -> ApiError {
    ApiError::not_found("no such endpoint")
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/v2/stories_public/list", get(stories_list))
        .route("/api/v2/stories_public/count", get(stories_count))
        .route("/api/v2/wc/list", get(word_list))
        .route("/api/v2/media/list", get(media_list))
        .route("/api/v2/media/single/{id}", get(media_single))
        .route("/api/v2/feeds/list", get(feeds_list))
        .route("/api/v2/tags/list", get(tags_list))
        .route("/api/v2/tag_sets/list", get(tag_sets_list))
        .route("/api/v2/topics", post(topic_create))
        .route("/api/v2/topics/list", get(topics_list))
        .route("/api/v2/topics/{id}", get(topic_single))
        .route("/api/v2/topics/{id}/spider", post(topic_spider))
        .route("/api/v2/topics/{id}/stories", get(topic_stories))
        .route("/api/v2/topics/{id}/links", get(topic_links))
        .route("/api/v2/topics/{id}/media", get(topic_media))
        .route("/api/v2/topics/{id}/timespans", get(topic_timespans))
        .route("/api/v2/topics/{id}/download", get(topic_download))
        .route("/api/v2/topics/{id}/posts", post(topic_posts))
        .fallback(not_found)
        .layer(middleware::from_fn_with_state(state.clone(), require_key))
        .with_state(state)
}

/// Serves until the process is stopped.
pub async fn serve(state: AppState, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}

/// Body bytes of a response, for callers that drive the router directly.
pub async fn body_bytes(body: Body) -> Result<Bytes, axum::Error> {
    axum::body::to_bytes(body, usize::MAX).await
}
