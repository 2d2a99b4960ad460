mod support;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use chrono::{DateTime, Utc};
use mediacloud::api::{body_bytes, router, AppState};
use mediacloud::fetch::{FetchRecord, Fetcher, FixtureFetcher};
use mediacloud::store::{FeedItem, Store, TagTarget};
use mediacloud::textproc::{TextProcessor, TextSource};
use serde_json::{json, Value};
use std::io::Read;
use std::sync::{mpsc, Arc, Mutex};
use std::time::Duration;
use support::{article, at, day, Corpus};
use tower::ServiceExt;

async fn call(app: &Router, method: Method, uri: &str, body: Option<&str>) -> (StatusCode, Vec<u8>, String) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header(header::CONTENT_TYPE, "application/json")
        .body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let ctype = resp.headers().get(header::CONTENT_TYPE).map(|v| v.to_str().unwrap().to_string()).unwrap_or_default();
    let bytes = body_bytes(resp.into_body()).await.unwrap().to_vec();
    (status, bytes, ctype)
}

async fn get_json(app: &Router, uri: &str) -> (StatusCode, Value) {
    let (status, body, _) = call(app, Method::GET, uri, None).await;
    (status, serde_json::from_slice(&body).unwrap_or_else(|_| panic!("{uri}: {}", String::from_utf8_lossy(&body))))
}

fn fixed_now() -> DateTime<Utc> {
    at("2021-01-15T00:00:00Z")
}

fn state(store: Store, fetcher: Arc<dyn Fetcher>) -> AppState {
    AppState::new(store, fetcher).with_clock(fixed_now)
}

fn empty_app() -> Router {
    router(state(Store::in_memory(), Arc::new(FixtureFetcher::new())))
}

/// Nine stories over three days; the 3rd, 7th and 9th mention a needle.
fn story_store() -> (Store, Vec<u64>) {
    let mut s = Store::in_memory();
    let m = s.add_media("Daily", "https://daily.com/", day("2020-01-01")).unwrap();
    let mut ids = Vec::new();
    for i in 1..=9 {
        let item = FeedItem {
            url: Some(format!("https://daily.com/{i}")),
            title: Some(format!("Story number {i}")),
            pub_date: Some(at(&format!("2020-11-0{}T10:00:00Z", 1 + i % 3))),
            ..FeedItem::default()
        };
        let id = s.match_or_insert_story(&item, m, fixed_now()).unwrap().0;
        let text = if [3, 7, 9].contains(&i) {
            format!("Item {i} mentions the needle and the haystack together.")
        } else {
            format!("Item {i} describes the haystack, the barn, and the field.")
        };
        TextProcessor::default().process_story(&mut s, id, TextSource::Fragment(&text)).unwrap();
        ids.push(id);
    }
    (s, ids)
}

fn story_app() -> (Router, Vec<u64>) {
    let (s, ids) = story_store();
    (router(state(s, Arc::new(FixtureFetcher::new()))), ids)
}

fn ids_of(v: &Value) -> Vec<u64> {
    v.as_array().unwrap().iter().map(|r| r["stories_id"].as_u64().unwrap()).collect()
}

#[tokio::test]
async fn story_pagination_by_cursor() {
    let (app, ids) = story_app();
    let (a, b, c) = (ids[2], ids[6], ids[8]);
    let (status, page) = get_json(&app, "/api/v2/stories_public/list?q=needle&rows=2").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ids_of(&page), vec![a, b]);
    let (_, page) = get_json(&app, &format!("/api/v2/stories_public/list?q=needle&rows=2&last_processed_stories_id={b}")).await;
    assert_eq!(ids_of(&page), vec![c]);
    let (_, page) = get_json(&app, &format!("/api/v2/stories_public/list?q=needle&last_processed_stories_id={c}")).await;
    assert_eq!(ids_of(&page), Vec::<u64>::new());
    let first = &get_json(&app, "/api/v2/stories_public/list?q=needle&rows=1").await.1[0];
    assert_eq!(first["media_name"], "Daily");
    assert_eq!(first["url"], format!("https://daily.com/{}", 3));
    assert_eq!(first["language"], "en");
}

#[tokio::test]
async fn pages_partition_the_result_set() {
    let (app, ids) = story_app();
    for q in ["haystack", "needle", "barn or needle", "haystack and not needle"] {
        let (_, all) = get_json(&app, &format!("/api/v2/stories_public/list?q={}&rows=1000", q.replace(' ', "+"))).await;
        let all = ids_of(&all);
        assert!(all.iter().all(|id| ids.contains(id)));
        for rows in 1..=4 {
            let mut seen = Vec::new();
            let mut cursor = 0;
            loop {
                let uri = format!(
                    "/api/v2/stories_public/list?q={}&rows={rows}&last_processed_stories_id={cursor}",
                    q.replace(' ', "+")
                );
                let page = ids_of(&get_json(&app, &uri).await.1);
                assert!(page.len() <= rows);
                let Some(&last) = page.last() else { break };
                seen.extend(page);
                cursor = last;
            }
            assert_eq!(seen, all, "{q} rows={rows}");
        }
    }
}

#[tokio::test]
async fn malformed_query_reports_position() {
    let (app, _) = story_app();
    for uri in ["/api/v2/stories_public/list?q=(", "/api/v2/stories_public/count?q=(", "/api/v2/wc/list?q=("] {
        let (status, body) = get_json(&app, uri).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{uri}");
        assert!(body["error"].is_string());
        assert_eq!(body["position"], 1);
    }
    let (status, _) = get_json(&app, "/api/v2/stories_public/list?q=needle&rows=abc").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = get_json(&app, "/api/v2/stories_public/count?q=needle&split=year").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn counts_and_daily_split() {
    let (app, _) = story_app();
    let (_, body) = get_json(&app, "/api/v2/stories_public/count?q=haystack").await;
    assert_eq!(body, json!({ "count": 9 }));
    let (_, body) = get_json(&app, "/api/v2/stories_public/count?q=needle&split=day").await;
    // Needle stories 3, 7 and 9 fall on days 1 + i % 3: the 1st, 2nd and 1st.
    assert_eq!(
        body,
        json!({ "count": 3, "split": "day", "counts": [
            { "date": "2020-11-01", "count": 2 },
            { "date": "2020-11-02", "count": 1 },
        ]})
    );
}

#[tokio::test]
async fn word_counts_skip_stopwords() {
    let (app, _) = story_app();
    let (status, body) = get_json(&app, "/api/v2/wc/list?q=needle&num_words=5").await;
    assert_eq!(status, StatusCode::OK);
    let rows = body.as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r["count"] == 3));
    let terms: Vec<&str> = rows.iter().map(|r| r["term"].as_str().unwrap()).collect();
    assert!(terms.contains(&"needle") && terms.contains(&"haystack"), "{terms:?}");
    assert!(!terms.contains(&"the"));
    let (status, _) = get_json(&app, "/api/v2/wc/list?q=needle&num_words=0").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn csv_rows_match_json_rows() {
    let (app, _) = story_app();
    for path in [
        "/api/v2/stories_public/list?q=haystack&rows=5",
        "/api/v2/wc/list?q=haystack&num_words=4",
        "/api/v2/stories_public/count?q=haystack&split=day",
        "/api/v2/media/list?rows=20",
    ] {
        let (_, json_body) = get_json(&app, path).await;
        let rows = json_body.get("counts").cloned().unwrap_or(json_body);
        let (status, csv_body, ctype) = call(&app, Method::GET, &format!("{path}&format=csv"), None).await;
        assert_eq!(status, StatusCode::OK);
        assert!(ctype.starts_with("text/csv"), "{ctype}");
        let mut r = csv::Reader::from_reader(csv_body.as_slice());
        let headers: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
        let records: Vec<Vec<String>> = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
        let rows = rows.as_array().unwrap();
        assert_eq!(records.len(), rows.len(), "{path}");
        for (rec, row) in records.iter().zip(rows) {
            assert_eq!(row.as_object().unwrap().len(), headers.len());
            for (h, cell) in headers.iter().zip(rec) {
                let want = match &row[h] {
                    Value::String(s) => s.clone(),
                    Value::Null => String::new(),
                    Value::Array(a) => a.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
                    other => other.to_string(),
                };
                assert_eq!(cell, &want, "{path} {h}");
            }
        }
    }
}

#[tokio::test]
async fn media_feeds_and_tags() {
    let app = empty_app();
    assert_eq!(get_json(&app, "/api/v2/media/list").await.1, json!([]));
    assert_eq!(get_json(&app, "/api/v2/media/single/1").await.0, StatusCode::NOT_FOUND);
    assert_eq!(get_json(&app, "/api/v2/feeds/list?media_id=1").await.0, StatusCode::NOT_FOUND);
    assert_eq!(get_json(&app, "/api/v2/no/such/route").await.0, StatusCode::NOT_FOUND);

    let mut s = Store::in_memory();
    let a = s.add_media("Alpha", "https://alpha.com/", day("2020-01-01")).unwrap();
    let b = s.add_media("Beta", "https://beta.org/", day("2020-02-01")).unwrap();
    s.add_feed(a, "https://alpha.com/rss", mediacloud::store::FeedType::Syndicated, fixed_now()).unwrap();
    let tag = s.upsert_tag("collection", "national", "National", "").unwrap();
    s.attach_tag(TagTarget::Media(b), tag).unwrap();
    let app = router(state(s, Arc::new(FixtureFetcher::new())));
    let (_, list) = get_json(&app, "/api/v2/media/list").await;
    assert_eq!(list.as_array().unwrap().len(), 2);
    let (status, single) = get_json(&app, &format!("/api/v2/media/single/{a}")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(single["name"], "Alpha");
    assert_eq!(single["url"], "https://alpha.com/");
    assert_eq!(single["start_date"], "2020-01-01");
    assert_eq!(single, list[0]);
    let (_, page) = get_json(&app, &format!("/api/v2/media/list?rows=1&last_media_id={a}")).await;
    assert_eq!(page.as_array().unwrap()[0]["media_id"], b);
    let (_, tagged) = get_json(&app, &format!("/api/v2/media/list?tags_id={tag}")).await;
    assert_eq!(tagged.as_array().unwrap().len(), 1);
    assert_eq!(tagged[0]["media_id"], b);
    let (_, feeds) = get_json(&app, &format!("/api/v2/feeds/list?media_id={a}")).await;
    assert_eq!(feeds[0]["url"], "https://alpha.com/rss");
    assert_eq!(feeds[0]["type"], "syndicated");
    let (_, sets) = get_json(&app, "/api/v2/tag_sets/list").await;
    let set_id = sets[0]["tag_sets_id"].as_u64().unwrap();
    let (_, tags) = get_json(&app, &format!("/api/v2/tags/list?tag_sets_id={set_id}")).await;
    assert_eq!(tags[0]["tag"], "national");
}

#[tokio::test]
async fn keys_are_enforced_when_configured() {
    let (s, _) = story_store();
    let app = router(state(s, Arc::new(FixtureFetcher::new())).with_keys(vec!["sekrit".into()]));
    let (status, body) = get_json(&app, "/api/v2/stories_public/count?q=needle").await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
    assert!(body["error"].is_string());
    assert_eq!(get_json(&app, "/api/v2/stories_public/count?q=needle&key=wrong").await.0, StatusCode::UNAUTHORIZED);
    let (status, body) = get_json(&app, "/api/v2/stories_public/count?q=needle&key=sekrit").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["count"], 3);
}

fn five_page_corpus() -> Corpus {
    let mut c = Corpus::new();
    let claim = |t: &str| format!("The {t} report examined claims of ballot fraud that spread online after the vote.");
    let urls = ["https://one.com/a", "https://two.org/b", "https://three.net/c", "https://four.com/d", "https://five.org/e"];
    for (i, u) in urls.iter().enumerate() {
        let next: Vec<&str> = urls.get(i + 1).into_iter().copied().collect();
        c.page(u, &article(&format!("Page {i}"), Some("2020-11-04T00:00:00Z"), &[&claim(&i.to_string())], &next));
    }
    c
}

async fn wait_idle(app: &Router, id: u64) -> Value {
    for _ in 0..500 {
        let (_, t) = get_json(app, &format!("/api/v2/topics/{id}")).await;
        if t["spider_running"] == false {
            return t;
        }
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
    panic!("spider for topic {id} never finished");
}

const TOPIC: &str = r#"{"name":"fraud","query":"ballot and fraud","start_date":"2020-10-01","end_date":"2020-11-30","seed_urls":["https://one.com/a"]}"#;

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn topic_lifecycle_produces_a_download() {
    let app = router(state(Store::in_memory(), Arc::new(five_page_corpus().fetcher())));
    let (status, body, _) = call(&app, Method::POST, "/api/v2/topics", Some(TOPIC)).await;
    assert_eq!(status, StatusCode::CREATED);
    let created: Value = serde_json::from_slice(&body).unwrap();
    let id = created["topics_id"].as_u64().unwrap();
    assert_eq!(created["status"], "created");
    assert_eq!(created["seed_query"], "ballot and fraud");
    assert_eq!(created["max_rounds"], 15);

    let (status, body, _) = call(&app, Method::POST, &format!("/api/v2/topics/{id}/spider"), None).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    assert_eq!(serde_json::from_slice::<Value>(&body).unwrap(), json!({ "topics_id": id, "status": "running" }));
    let done = wait_idle(&app, id).await;
    assert_eq!(done["status"], "completed");
    assert_eq!(done["story_count"], 5);
    assert_eq!(done["link_count"], 4);
    assert_eq!(done["last_error"], Value::Null);

    let (_, stories) = get_json(&app, &format!("/api/v2/topics/{id}/stories")).await;
    assert_eq!(stories.as_array().unwrap().len(), 5);
    let (_, links) = get_json(&app, &format!("/api/v2/topics/{id}/links")).await;
    assert_eq!(links.as_array().unwrap().len(), 4);
    let (_, media) = get_json(&app, &format!("/api/v2/topics/{id}/media")).await;
    assert_eq!(media.as_array().unwrap().len(), 5);
    let (_, spans) = get_json(&app, &format!("/api/v2/topics/{id}/timespans")).await;
    assert_eq!(spans[0]["period"], "overall");
    assert_eq!(spans[0]["story_count"], 5);
    let (_, sub) = get_json(&app, &format!("/api/v2/topics/{id}/stories?q=online")).await;
    assert_eq!(sub.as_array().unwrap().len(), 5);
    let (_, none) = get_json(&app, &format!("/api/v2/topics/{id}/stories?q=zebra")).await;
    assert_eq!(none, json!([]));

    let (status, zip_bytes, ctype) = call(&app, Method::GET, &format!("/api/v2/topics/{id}/download"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ctype, "application/zip");
    let mut z = zip::ZipArchive::new(std::io::Cursor::new(zip_bytes)).unwrap();
    assert_eq!(z.len(), 5);
    let mut stories_csv = String::new();
    z.by_name("stories.csv").unwrap().read_to_string(&mut stories_csv).unwrap();
    assert_eq!(stories_csv.lines().count(), 6);

    let (_, all) = get_json(&app, "/api/v2/topics/list").await;
    assert_eq!(all.as_array().unwrap().len(), 1);
    let (status, body, _) = call(&app, Method::POST, "/api/v2/topics", Some(TOPIC)).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_ne!(serde_json::from_slice::<Value>(&body).unwrap()["topics_id"], id);
}

#[tokio::test]
async fn topic_requests_are_validated() {
    let app = empty_app();
    let (status, _, _) = call(&app, Method::POST, "/api/v2/topics/7/spider", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(get_json(&app, "/api/v2/topics/7").await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, Method::GET, "/api/v2/topics/7/download", None).await.0, StatusCode::NOT_FOUND);
    for bad in [
        r#"{"name":"x","query":"(","start_date":"2020-10-01","end_date":"2020-11-30"}"#,
        r#"{"name":"x","query":"a","start_date":"2020-12-01","end_date":"2020-11-30"}"#,
        r#"{"name":"x","query":"a","start_date":"2020-10-01"}"#,
        r#"{"name":"x","query":"a","start_date":"2020-10-01","end_date":"2020-11-30","colour":"red"}"#,
        "not json",
    ] {
        let (status, body, _) = call(&app, Method::POST, "/api/v2/topics", Some(bad)).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{bad}");
        assert!(serde_json::from_slice::<Value>(&body).unwrap()["error"].is_string());
    }
    assert_eq!(get_json(&app, "/api/v2/topics/list").await.1, json!([]));
}

/// Serves the five-page corpus, but each fetch waits for a permit.
struct Gated {
    inner: FixtureFetcher,
    permits: Mutex<mpsc::Receiver<()>>,
}

impl Fetcher for Gated {
    fn fetch(&self, url: &str, now: DateTime<Utc>) -> FetchRecord {
        if self.permits.lock().unwrap().recv_timeout(Duration::from_secs(30)).is_err() {
            return FetchRecord::failure(url, now, "gate closed");
        }
        self.inner.fetch(url, now)
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn concurrent_spider_requests_conflict() {
    let (tx, rx) = mpsc::channel();
    let fetcher = Gated { inner: five_page_corpus().fetcher(), permits: Mutex::new(rx) };
    let app = router(state(Store::in_memory(), Arc::new(fetcher)));
    let (_, body, _) = call(&app, Method::POST, "/api/v2/topics", Some(TOPIC)).await;
    let id = serde_json::from_slice::<Value>(&body).unwrap()["topics_id"].as_u64().unwrap();
    assert_eq!(call(&app, Method::POST, &format!("/api/v2/topics/{id}/spider"), None).await.0, StatusCode::ACCEPTED);
    let (status, body, _) = call(&app, Method::POST, &format!("/api/v2/topics/{id}/spider"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert!(serde_json::from_slice::<Value>(&body).unwrap()["error"].is_string());
    let posts = "post_id,author,channel,content,urls\np1,a,c,x,https://one.com/a\n";
    assert_eq!(call(&app, Method::POST, &format!("/api/v2/topics/{id}/posts"), Some(posts)).await.0, StatusCode::CONFLICT);
    let (_, during) = get_json(&app, &format!("/api/v2/topics/{id}")).await;
    assert_eq!(during["spider_running"], true);
    for _ in 0..100 {
        tx.send(()).unwrap();
    }
    let done = wait_idle(&app, id).await;
    assert_eq!(done["story_count"], 5);

    let (status, body, _) = call(&app, Method::POST, &format!("/api/v2/topics/{id}/posts"), Some(posts)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(serde_json::from_slice::<Value>(&body).unwrap()["posts"], 1);
    let (status, _, _) = call(&app, Method::POST, &format!("/api/v2/topics/{id}/posts"), Some("a,b\n1,2\n")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}
