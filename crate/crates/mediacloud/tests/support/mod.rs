//! Fixture builders shared by the integration tests.

#![allow(dead_code)]

pub mod e2e;
pub mod web;

use chrono::{DateTime, NaiveDate, Utc};
use mediacloud::fetch::{FixtureFetcher, MANIFEST_FILE};
use mediacloud::urlnorm::normalize_url;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

pub fn at(s: &str) -> DateTime<Utc> {
    DateTime::parse_from_rfc3339(s).expect("rfc3339").with_timezone(&Utc)
}

pub fn day(s: &str) -> NaiveDate {
    s.parse().expect("yyyy-mm-dd")
}

pub fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// An article page: navigation boilerplate, the paragraphs inside
/// `<article>`, then a list of links.
pub fn article(title: &str, published: Option<&str>, paragraphs: &[&str], links: &[&str]) -> String {
    let mut html = String::new();
    let _ = write!(html, "<!doctype html><html><head><title>{}</title>", escape(title));
    if let Some(p) = published {
        let _ = write!(html, "<meta property=\"article:published_time\" content=\"{p}\">");
    }
    html.push_str("</head><body><nav class=\"menu\"><a href=\"/\">Home</a> <a href=\"/about\">About</a></nav><article>");
    let _ = write!(html, "<h1>{}</h1>", escape(title));
    for p in paragraphs {
        let _ = write!(html, "<p>{}</p>", escape(p));
    }
    html.push_str("</article><ul class=\"related\">");
    for (i, l) in links.iter().enumerate() {
        let _ = write!(html, "<li><a href=\"{}\">related {i}</a></li>", escape(l));
    }
    html.push_str("</ul><footer>Copyright the publisher.</footer></body></html>");
    html
}

pub struct RssItem<'a> {
    pub link: &'a str,
    pub title: &'a str,
    pub pub_date: Option<&'a str>,
    pub description: &'a str,
}

pub fn rss(items: &[RssItem]) -> String {
    let mut xml = String::from("<?xml version=\"1.0\"?><rss version=\"2.0\"><channel><title>Fixture</title>");
    for it in items {
        let _ = write!(xml, "<item><link>{}</link><title>{}</title>", escape(it.link), escape(it.title));
        if let Some(d) = it.pub_date {
            let _ = write!(xml, "<pubDate>{d}</pubDate>");
        }
        let _ = write!(xml, "<description>{}</description></item>", escape(it.description));
    }
    xml.push_str("</channel></rss>");
    xml
}

/// A fixture web: normalized URL to (status, body).
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub entries: BTreeMap<String, (u16, Vec<u8>)>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, url: &str, status: u16, body: impl Into<Vec<u8>>) -> &mut Self {
        self.entries.insert(normalize_url(url).expect("fixture url"), (status, body.into()));
        self
    }

    pub fn page(&mut self, url: &str, html: &str) -> &mut Self {
        self.add(url, 200, html.as_bytes())
    }

    pub fn fetcher(&self) -> FixtureFetcher {
        let mut f = FixtureFetcher::new();
        for (url, (status, body)) in &self.entries {
            f.insert(url, *status, body.clone());
        }
        f
    }

    /// Writes bodies as numbered files plus the manifest.
    pub fn write(&self, dir: &Path) {
        std::fs::create_dir_all(dir.join("pages")).unwrap();
        let mut manifest = String::from("# url\tstatus\tpath\n");
        for (i, (url, (status, body))) in self.entries.iter().enumerate() {
            let rel = format!("pages/{i:05}.html");
            std::fs::write(dir.join(&rel), body).unwrap();
            let _ = writeln!(manifest, "{url}\t{status}\t{rel}");
        }
        std::fs::write(dir.join(MANIFEST_FILE), manifest).unwrap();
    }
}
