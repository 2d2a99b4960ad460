//! An offline corpus driven through the binary: feeds, then a topic.

use super::{article, rss, Corpus, RssItem};
use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::{Path, PathBuf};
use std::process::Command;

pub const QUERY: &str = super::web::QUERY;
pub const NOW: &str = "2020-11-08T00:00:00Z";
/// Pages hanging off the first feed story, one hop apart.
pub const CHAIN: usize = 20;
pub const SITES: usize = 3;
pub const ITEMS: usize = 6;

fn claim(tag: &str) -> String {
    format!("Reporters at {tag} traced claims of vote fraud to a single post and checked them against county ballot records.")
}

fn filler(tag: &str) -> String {
    format!("Reporters at {tag} described the weekend market, the weather and a local bakery that turned fifty.")
}

pub fn chain_url(i: usize) -> String {
    format!("https://chain{}.org/hop/{i}", i % 4)
}

pub fn item_url(site: usize, i: usize) -> String {
    format!("https://site{site}.com/2020/11/0{}/item-{i}.html", 1 + i % 5)
}

pub fn corpus() -> Corpus {
    let mut c = Corpus::new();
    for site in 0..SITES {
        let mut items = Vec::new();
        let urls: Vec<String> = (0..ITEMS).map(|i| item_url(site, i)).collect();
        let titles: Vec<String> = (0..ITEMS).map(|i| format!("Site {site} report {i}")).collect();
        let dates: Vec<String> = (0..ITEMS)
            .map(|i| {
                let d = chrono::NaiveDate::from_ymd_opt(2020, 11, 1 + (i % 5) as u32).unwrap();
                format!("{} 09:00:00 GMT", d.format("%a, %d %b %Y"))
            })
            .collect();
        for i in 0..ITEMS {
            let tag = format!("site {site} item {i}");
            let text = if i % 2 == 0 { claim(&tag) } else { filler(&tag) };
            let mut links = vec![item_url((site + 1) % SITES, (i + 1) % ITEMS)];
            if site == 0 && i == 0 {
                links.push(chain_url(0));
            }
            if i == 4 {
                links.push(format!("https://missing{site}.net/gone"));
            }
            let refs: Vec<&str> = links.iter().map(String::as_str).collect();
            c.page(&urls[i], &article(&titles[i], None, &[&text], &refs));
            items.push(RssItem { link: &urls[i], title: &titles[i], pub_date: Some(&dates[i]), description: "" });
        }
        c.page(&format!("https://site{site}.com/feed.xml"), &rss(&items));
    }
    for i in 0..CHAIN {
        let next = chain_url(i + 1);
        let links: Vec<&str> = if i + 1 < CHAIN { vec![next.as_str()] } else { vec![] };
        let html = article(&format!("Hop {i}"), Some("2020-11-05T08:00:00Z"), &[&claim(&format!("hop {i}"))], &links);
        c.page(&chain_url(i), &html);
    }
    c.add("https://missing0.net/gone", 404, "not here");
    c.add("https://missing1.net/gone", 500, "broken");
    c
}

pub fn media_csv() -> String {
    let mut s = String::from("media_id,name,url,start_date\n");
    for site in 0..SITES {
        let _ = writeln!(s, "{},site{site}.com,https://site{site}.com/,2020-01-01", site + 1);
    }
    s
}

pub fn feeds_csv() -> String {
    let mut s = String::from("feeds_id,media_id,url,active,type\n");
    for site in 0..SITES {
        let _ = writeln!(s, "{},{},https://site{site}.com/feed.xml,true,syndicated", site + 1, site + 1);
    }
    s
}

pub const POSTS: &str = "post_id,author,channel,content,urls\n\
    1,ann,forum,see this,https://site0.com/2020/11/01/item-0.html https://site1.com/2020/11/02/item-1.html\n\
    2,ben,forum,and this,https://site1.com/2020/11/02/item-1.html\n\
    3,ann,chat,again,https://site2.com/2020/11/03/item-2.html\n";

pub struct Output {
    pub status: std::process::ExitStatus,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the binary against `data` with a fixed clock and a clean environment.
pub fn cli(data: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_mediacloud"))
        .arg("--data-dir")
        .arg(data)
        .args(["--now", NOW])
        .args(args)
        .env_remove("DATA_DIR")
        .env_remove("FETCH_MODE")
        .env_remove("LISTEN_ADDR")
        .output()
        .expect("binary runs");
    Output {
        status: out.status,
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn ok(data: &Path, args: &[&str]) -> String {
    let out = cli(data, args);
    assert!(out.status.success(), "{args:?} failed: {}", out.stderr);
    out.stdout
}

pub struct Run {
    pub stdout: Vec<String>,
    pub export: PathBuf,
    pub files: BTreeMap<String, Vec<u8>>,
}

/// Ingest, topic create, spider and export, all under `root`.
pub fn pipeline(root: &Path) -> Run {
    let corpus_dir = root.join("corpus");
    corpus().write(&corpus_dir);
    let data = root.join("data");
    std::fs::write(root.join("media.csv"), media_csv()).unwrap();
    std::fs::write(root.join("feeds.csv"), feeds_csv()).unwrap();
    std::fs::write(root.join("posts.csv"), POSTS).unwrap();
    let corpus = corpus_dir.to_str().unwrap();
    let mut stdout = Vec::new();
    stdout.push(ok(&data, &["media", "import", root.join("media.csv").to_str().unwrap()]));
    stdout.push(ok(&data, &["feeds", "import", root.join("feeds.csv").to_str().unwrap()]));
    stdout.push(ok(&data, &["ingest", "run", "--until", "2h", "--mode", "fixture", "--corpus", corpus]));
    let id = ok(
        &data,
        &["topic", "create", "--name", "vote fraud", "--query", QUERY, "--start", "2020-11-01", "--end", "2020-11-07"],
    );
    let id = id.trim().to_string();
    stdout.push(id.clone());
    stdout.push(ok(&data, &["topic", "seed-posts", "--id", &id, "--csv", root.join("posts.csv").to_str().unwrap()]));
    stdout.push(ok(&data, &["topic", "spider", "--id", &id, "--mode", "fixture", "--corpus", corpus, "--workers", "3"]));
    let export = root.join("export");
    ok(&data, &["topic", "export", "--id", &id, "--out", export.to_str().unwrap()]);
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(&export).unwrap() {
        let p = entry.unwrap().path();
        files.insert(p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap());
    }
    Run { stdout, export, files }
}
