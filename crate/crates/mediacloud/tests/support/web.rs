//! Randomized fixture webs for the spider, with a breadth-first reference
//! model that works on the abstract link graph and never touches HTML.

use super::{article, Corpus};
use chrono::{Datelike, Duration, NaiveDate, TimeZone, Utc};
use mediacloud::fetch::Fetcher;
use mediacloud::store::{FeedItem, Store, TopicSpec, TopicState};
use mediacloud::textproc::{TextProcessor, TextSource};
use mediacloud::topics::{build_timespans, inlink_counts, run_spider, SpiderOptions};
use mediacloud::urlnorm::normalize_url;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::RwLock;

pub const QUERY: &str = "(ballot or vote*) and fraud";
pub const SPINE: usize = 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    ServerError,
    Missing,
}

#[derive(Debug, Clone)]
pub struct WebPage {
    pub url: String,
    pub domain: String,
    pub matches: bool,
    pub date: NaiveDate,
    /// The date is only in the URL path, not in the markup.
    pub date_in_url: bool,
    pub status: Status,
    pub links: Vec<usize>,
    /// Links to URLs that are not pages of the web.
    pub dangling: Vec<String>,
    /// Stored (and indexed) before spidering starts.
    pub preloaded: bool,
}

#[derive(Debug, Clone)]
pub struct Web {
    pub pages: Vec<WebPage>,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub max_rounds: u32,
    pub seed_urls: Vec<usize>,
    /// Domains that have a medium before spidering.
    pub known_domains: Vec<String>,
}

impl Web {
    pub fn in_range(&self, i: usize) -> bool {
        (self.start..=self.end).contains(&self.pages[i].date)
    }

    pub fn seeds(&self) -> Vec<usize> {
        (0..self.pages.len())
            .filter(|&i| self.pages[i].preloaded && self.pages[i].matches && self.in_range(i))
            .collect()
    }

    pub fn html(&self, i: usize) -> String {
        let p = &self.pages[i];
        let lead = if p.matches {
            format!("Correspondent {i} reviewed claims of ballot fraud in district {i}, interviewing officials and voters over several days.")
        } else if i % 2 == 0 {
            format!("Correspondent {i} reviewed a tax fraud case in district {i}, interviewing accountants and lawyers over several days.")
        } else {
            format!("Correspondent {i} reviewed the harvest festival in district {i}, interviewing farmers and visitors over several days.")
        };
        let follow =
            format!("The report numbered {i} continued with records, statements and further interviews across the region.");
        let links: Vec<String> =
            p.links.iter().map(|&j| self.pages[j].url.clone()).chain(p.dangling.iter().cloned()).collect();
        let links: Vec<&str> = links.iter().map(String::as_str).collect();
        let published = (!p.date_in_url).then(|| format!("{}T12:00:00Z", p.date));
        article(&format!("Report {i} from {}", p.domain), published.as_deref(), &[&lead, &follow], &links)
    }

    pub fn corpus(&self) -> Corpus {
        let mut c = Corpus::new();
        for (i, p) in self.pages.iter().enumerate() {
            match p.status {
                Status::Ok => c.page(&p.url, &self.html(i)),
                Status::ServerError => c.add(&p.url, 500, "upstream error"),
                Status::Missing => continue,
            };
        }
        c
    }
}

fn day_offset(base: NaiveDate, days: i64) -> NaiveDate {
    base + Duration::days(days)
}

/// A web of `n` pages (at least [`SPINE`] + 4) on a handful of sites.
///
/// Pages `0..SPINE` form a chain of matching, in-range pages starting at a
/// preloaded seed and reachable only along the chain, so the page at hop
/// `SPINE - 1` lies beyond 15 rounds.
pub fn random_web(seed: u64, n: usize) -> Web {
    assert!(n >= SPINE + 4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = NaiveDate::from_ymd_opt(2020, 10, 1).unwrap();
    let end = NaiveDate::from_ymd_opt(2020, 11, 30).unwrap();
    let known: Vec<String> = (0..5).map(|k| format!("site{k}.com")).collect();
    let others: Vec<String> = (0..3).map(|k| format!("other{k}.net")).collect();
    let mut pages = Vec::with_capacity(n);
    for i in 0..n {
        let spine = i < SPINE;
        let on_known = spine || rng.gen_bool(0.75);
        let domain = if on_known {
            known[rng.gen_range(0..known.len())].clone()
        } else {
            others[rng.gen_range(0..others.len())].clone()
        };
        let host = match rng.gen_range(0..3) {
            0 => domain.clone(),
            1 => format!("www.{domain}"),
            _ => format!("news.{domain}"),
        };
        let date = if spine {
            day_offset(start, rng.gen_range(0..61))
        } else {
            day_offset(start, rng.gen_range(-30..92))
        };
        let date_in_url = !spine && rng.gen_bool(0.15);
        let path = if date_in_url {
            format!("/{:04}/{:02}/{:02}/story-{i}", date.year(), date.month(), date.day())
        } else {
            format!("/story-{i}.html")
        };
        let status = if spine {
            Status::Ok
        } else {
            match rng.gen_range(0..100) {
                0..=3 => Status::ServerError,
                4..=7 => Status::Missing,
                _ => Status::Ok,
            }
        };
        let matches = spine || rng.gen_bool(0.6);
        let preloaded = i == 0 || (!spine && on_known && status == Status::Ok && rng.gen_bool(0.12));
        pages.push(WebPage {
            url: format!("https://{host}{path}"),
            domain,
            matches,
            date,
            date_in_url,
            status,
            links: Vec::new(),
            dangling: Vec::new(),
            preloaded,
        });
    }
    for i in 0..n {
        let mut links = BTreeSet::new();
        if i + 1 < SPINE {
            links.insert(i + 1);
        }
        if i + 1 >= SPINE && i + 1 < n && rng.gen_bool(0.5) {
            links.insert(i + 1);
        }
        for _ in 0..rng.gen_range(0..4) {
            links.insert(rng.gen_range(SPINE..n));
        }
        if rng.gen_bool(0.1) {
            links.insert(i);
        }
        let page = &mut pages[i];
        page.links = links.into_iter().collect();
        if rng.gen_bool(0.2) {
            page.dangling.push(format!("https://{}/missing-{i}", page.domain));
        }
    }
    // Spine pages also reach into the rest of the web.
    pages[2].links.push(SPINE);
    let seed_urls = (0..rng.gen_range(0..3)).map(|_| rng.gen_range(SPINE..n)).collect();
    Web { pages, start, end, max_rounds: 15, seed_urls, known_domains: known }
}

/// A straight chain `0 → 1 → … → len-1`, every page matching and in range.
pub fn chain_web(len: usize, max_rounds: u32) -> Web {
    let start = NaiveDate::from_ymd_opt(2020, 10, 1).unwrap();
    let pages = (0..len)
        .map(|i| WebPage {
            url: format!("https://chain.com/hop-{i}"),
            domain: "chain.com".into(),
            matches: true,
            date: day_offset(start, (i % 30) as i64),
            date_in_url: false,
            status: Status::Ok,
            links: if i + 1 < len { vec![i + 1] } else { vec![] },
            dangling: vec![],
            preloaded: i == 0,
        })
        .collect();
    Web {
        pages,
        start,
        end: day_offset(start, 60),
        max_rounds,
        seed_urls: vec![],
        known_domains: vec!["chain.com".into()],
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Expected {
    /// Page → discovery round.
    pub members: BTreeMap<usize, u32>,
    pub edges: BTreeSet<(usize, usize)>,
    /// Page → distinct other domains linking in (non-zero entries only).
    pub story_inlinks: BTreeMap<usize, u64>,
    pub domain_inlinks: BTreeMap<String, u64>,
}

/// Round-by-round breadth-first expansion. A page is judged once, in the
/// first round it is queued; it joins when it is fetchable, matches, and is
/// either dated in range or linked from an in-range member.
pub fn oracle(web: &Web) -> Expected {
    let mut members: BTreeMap<usize, u32> = BTreeMap::new();
    let mut attempted: BTreeSet<usize> = BTreeSet::new();
    let mut frontier: BTreeMap<usize, bool> = BTreeMap::new();
    for s in web.seeds() {
        members.insert(s, 0);
        attempted.insert(s);
    }
    for &u in &web.seed_urls {
        if !attempted.contains(&u) {
            frontier.entry(u).or_insert(false);
        }
    }
    for s in web.seeds() {
        for &t in &web.pages[s].links {
            if !attempted.contains(&t) {
                *frontier.entry(t).or_insert(false) |= web.in_range(s);
            }
        }
    }
    for round in 1..=web.max_rounds {
        if frontier.is_empty() {
            break;
        }
        let mut added = Vec::new();
        for (&p, &linked_in_range) in &frontier {
            attempted.insert(p);
            let page = &web.pages[p];
            if page.status == Status::Ok && page.matches && (linked_in_range || web.in_range(p)) {
                members.insert(p, round);
                added.push(p);
            }
        }
        let mut next = BTreeMap::new();
        for a in added {
            for &t in &web.pages[a].links {
                if !attempted.contains(&t) {
                    *next.entry(t).or_insert(false) |= web.in_range(a);
                }
            }
        }
        frontier = next;
    }
    let mut edges = BTreeSet::new();
    for &s in members.keys() {
        for &t in &web.pages[s].links {
            if t != s && members.contains_key(&t) {
                edges.insert((s, t));
            }
        }
    }
    let mut story_sources: BTreeMap<usize, BTreeSet<&str>> = BTreeMap::new();
    let mut domain_sources: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for &(s, t) in &edges {
        let (ds, dt) = (web.pages[s].domain.as_str(), web.pages[t].domain.as_str());
        if ds != dt {
            story_sources.entry(t).or_default().insert(ds);
            domain_sources.entry(dt).or_default().insert(ds);
        }
    }
    Expected {
        members,
        edges,
        story_inlinks: story_sources.into_iter().map(|(k, v)| (k, v.len() as u64)).collect(),
        domain_inlinks: domain_sources.into_iter().map(|(k, v)| (k.to_string(), v.len() as u64)).collect(),
    }
}

pub fn now() -> chrono::DateTime<Utc> {
    Utc.with_ymd_and_hms(2021, 1, 15, 0, 0, 0).unwrap()
}

/// Store with the web's media and preloaded pages, plus an unspidered topic.
pub fn prepare(web: &Web) -> (Store, u64) {
    let mut store = Store::in_memory();
    let text = TextProcessor::default();
    let mut media = BTreeMap::new();
    for d in &web.known_domains {
        let id = store.add_media(d, &format!("http://{d}/"), web.start).unwrap();
        media.insert(d.clone(), id);
    }
    for (i, p) in web.pages.iter().enumerate().filter(|(_, p)| p.preloaded) {
        let item = FeedItem {
            url: Some(p.url.clone()),
            guid: None,
            title: Some(format!("Report {i} from {}", p.domain)),
            pub_date: Some(Utc.from_utc_datetime(&p.date.and_hms_opt(12, 0, 0).unwrap())),
            description: None,
        };
        let (id, created) = store.match_or_insert_story(&item, media[&p.domain], now()).unwrap();
        assert!(created, "preloaded page {i} collided");
        text.process_story(&mut store, id, TextSource::Html(web.html(i).as_bytes())).unwrap();
    }
    let mut spec = TopicSpec::new("web", QUERY, web.start, web.end);
    spec.max_rounds = web.max_rounds;
    spec.seed_urls = web.seed_urls.iter().map(|&i| web.pages[i].url.clone()).collect();
    let id = store.create_topic(spec).unwrap();
    (store, id)
}

pub fn spider(web: &Web, fetcher: &dyn Fetcher, workers: usize) -> (Store, u64) {
    let (store, id) = prepare(web);
    let lock = RwLock::new(store);
    let text = TextProcessor::default();
    let opts = SpiderOptions { fetcher, text: &text, workers, now: now(), shares: None };
    run_spider(&lock, id, &opts, |_| {}).unwrap();
    (lock.into_inner().unwrap(), id)
}

/// Page index of every stored story that is a page of the web.
pub fn page_of(store: &Store, web: &Web) -> BTreeMap<u64, usize> {
    web.pages
        .iter()
        .enumerate()
        .filter_map(|(i, p)| store.story_by_normalized_url(&normalize_url(&p.url).unwrap()).map(|id| (id, i)))
        .collect()
}

/// Differences between the spider's result and the oracle, empty when equal.
pub fn compare(store: &Store, state: &TopicState, web: &Web) -> Vec<String> {
    let want = oracle(web);
    let pages = page_of(store, web);
    let mut problems = Vec::new();
    let got_members: BTreeMap<usize, u32> =
        state.members.values().map(|m| (pages[&m.stories_id], m.discovered_round)).collect();
    if got_members != want.members {
        problems.push(format!("members/rounds differ: got {got_members:?}, want {:?}", want.members));
    }
    let got_edges: BTreeSet<(usize, usize)> = state.links.iter().map(|(s, t)| (pages[s], pages[t])).collect();
    if got_edges != want.edges {
        problems.push(format!("edges differ: got {got_edges:?}, want {:?}", want.edges));
    }
    let counts = inlink_counts(store, state);
    let got_story: BTreeMap<usize, u64> =
        counts.stories.iter().filter(|(_, &c)| c > 0).map(|(id, &c)| (pages[id], c)).collect();
    if got_story != want.story_inlinks {
        problems.push(format!("story inlinks differ: got {got_story:?}, want {:?}", want.story_inlinks));
    }
    let got_media: BTreeMap<String, u64> = counts
        .media
        .iter()
        .filter(|(_, &c)| c > 0)
        .map(|(id, &c)| (store.media(*id).unwrap().name.clone(), c))
        .collect();
    if got_media != want.domain_inlinks {
        problems.push(format!("media inlinks differ: got {got_media:?}, want {:?}", want.domain_inlinks));
    }
    problems
}

/// Expected timespan members computed from dates and edges by day scan.
pub fn timespan_problems(store: &Store, state: &TopicState) -> Vec<String> {
    let date = |id: u64| store.story(id).unwrap().publish_date.date_naive();
    let (start, end) = (state.topic.start_date, state.topic.end_date);
    let mut expected: Vec<(String, NaiveDate, NaiveDate)> = vec![("overall".into(), start, end)];
    let mut d = start;
    while d.weekday().num_days_from_sunday() != 0 {
        d -= Duration::days(1);
    }
    while d <= end {
        expected.push(("weekly".into(), d, d + Duration::days(6)));
        d += Duration::days(7);
    }
    let mut m = NaiveDate::from_ymd_opt(start.year(), start.month(), 1).unwrap();
    while m <= end {
        let next = if m.month() == 12 {
            NaiveDate::from_ymd_opt(m.year() + 1, 1, 1).unwrap()
        } else {
            NaiveDate::from_ymd_opt(m.year(), m.month() + 1, 1).unwrap()
        };
        expected.push(("monthly".into(), m, next - Duration::days(1)));
        m = next;
    }
    let got = build_timespans(store, state);
    let mut problems = Vec::new();
    if got.len() != expected.len() {
        problems.push(format!("{} spans, expected {}", got.len(), expected.len()));
    }
    for (span, (period, s, e)) in got.iter().zip(&expected) {
        if span.period.as_str() != period || span.start != *s || span.end != *e {
            problems.push(format!("span {:?} {}..{} expected {period} {s}..{e}", span.period, span.start, span.end));
            continue;
        }
        let inside = |id: u64| (*s..=*e).contains(&date(id));
        let mut want: BTreeSet<u64> = state.members.keys().copied().filter(|&id| inside(id)).collect();
        for &(src, dst) in &state.links {
            if inside(src) {
                want.insert(dst);
            }
        }
        if span.story_ids != want {
            problems.push(format!("{period} {s}: got {:?}, want {want:?}", span.story_ids));
        }
    }
    problems
}

/// Normalized URLs fetched more than once.
pub fn refetched(log: &[String]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut dup = Vec::new();
    for u in log {
        let key = normalize_url(u).unwrap_or_else(|_| u.clone());
        if !seen.insert(key.clone()) {
            dup.push(key);
        }
    }
    dup
}
