//! HTML to story text: main-content extraction, sentence splitting,
//! per-medium per-day sentence dedup and language detection.

use crate::store::{Store, StoreError, StoryText};
use crate::urlnorm::{absolutize, parse_lenient};
use chrono::NaiveDate;
use ego_tree::NodeId;
use mediacloud_core::text::{collapse_whitespace, DetectorConfig, LanguageDetector, SentenceSplitter};
use regex::Regex;
use scraper::{ElementRef, Html, Node, Selector};
use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;
use url::Url;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExtractionResult {
    /// Main-content text, one paragraph per `\n\n`-separated block.
    pub text: String,
    pub title_guess: String,
    /// Absolute outlinks of the whole document, fragments removed, first occurrence order.
    pub links: Vec<String>,
}

const SKIP_TAGS: [&str; 7] = ["script", "style", "noscript", "template", "svg", "iframe", "head"];
const BOILERPLATE_TAGS: [&str; 5] = ["nav", "footer", "aside", "form", "header"];
const SCORED_TAGS: [&str; 4] = ["p", "pre", "blockquote", "td"];
const UNIT_TAGS: [&str; 14] =
    ["p", "pre", "blockquote", "td", "li", "h1", "h2", "h3", "h4", "h5", "h6", "dd", "dt", "figcaption"];
const BLOCK_TAGS: [&str; 16] = [
    "p", "div", "pre", "blockquote", "table", "ul", "ol", "dl", "section", "article", "h1", "h2", "h3", "h4",
    "figure", "form",
];

fn negative_hint() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    R.get_or_init(|| {
        Regex::new(
            r"(?i)comment|footer|footnote|nav|menu|sidebar|sponsor|shoutbox|share|social|promo|related|breadcrumb|masthead|widget|popup|cookie|subscribe|newsletter|banner|advert|\bads?\b",
        )
        .expect("negative hint regex")
    })
}

fn positive_hint() -> &'static Regex {
    static R: OnceLock<Regex> = OnceLock::new();
    R.get_or_init(|| {
        Regex::new(r"(?i)article|body|content|entry|hentry|main|page|post|text|blog|story").expect("positive hint regex")
    })
}

fn hints(el: &ElementRef) -> String {
    let v = el.value();
    format!("{} {}", v.attr("class").unwrap_or(""), v.attr("id").unwrap_or(""))
}

fn class_weight(el: &ElementRef) -> f64 {
    let h = hints(el);
    let mut w = 0.0;
    if negative_hint().is_match(&h) {
        w -= 25.0;
    }
    if positive_hint().is_match(&h) {
        w += 25.0;
    }
    w
}

fn tag_weight(tag: &str) -> f64 {
    match tag {
        "div" | "article" | "section" | "main" => 5.0,
        "pre" | "td" | "blockquote" => 3.0,
        "address" | "ol" | "ul" | "dl" | "dd" | "dt" | "li" | "form" => -3.0,
        "h1" | "h2" | "h3" | "h4" | "h5" | "h6" | "th" => -5.0,
        _ => 0.0,
    }
}

fn tag<'a>(el: &ElementRef<'a>) -> &'a str {
    el.value().name()
}

/// Boilerplate by tag, or by class/id hint without a content hint.
fn is_boilerplate(el: &ElementRef) -> bool {
    if BOILERPLATE_TAGS.contains(&tag(el)) {
        return true;
    }
    let h = hints(el);
    negative_hint().is_match(&h) && !positive_hint().is_match(&h) && !matches!(tag(el), "body" | "html")
}

fn skipped(el: &ElementRef) -> bool {
    SKIP_TAGS.contains(&tag(el))
}

fn in_boilerplate(el: &ElementRef) -> bool {
    std::iter::once(*el)
        .chain(el.ancestors().filter_map(ElementRef::wrap))
        .any(|a| skipped(&a) || is_boilerplate(&a))
}

/// Visible text of a subtree and the part of it inside links, both in chars.
fn text_and_link_len(el: &ElementRef) -> (String, usize) {
    fn walk(node: ego_tree::NodeRef<Node>, in_link: bool, out: &mut String, link: &mut usize) {
        for child in node.children() {
            match child.value() {
                Node::Text(t) => {
                    out.push_str(t);
                    if in_link {
                        *link += t.chars().filter(|c| !c.is_whitespace()).count();
                    }
                }
                Node::Element(e) if SKIP_TAGS.contains(&e.name()) => {}
                Node::Element(e) => {
                    if e.name() == "br" {
                        out.push(' ');
                    }
                    walk(child, in_link || e.name() == "a", out, link);
                    if BLOCK_TAGS.contains(&e.name()) || UNIT_TAGS.contains(&e.name()) {
                        out.push(' ');
                    }
                }
                _ => {}
            }
        }
    }
    let mut raw = String::new();
    let mut link = 0;
    walk(**el, tag(el) == "a", &mut raw, &mut link);
    (collapse_whitespace(&raw), link)
}

fn link_density(el: &ElementRef) -> f64 {
    let (text, link) = text_and_link_len(el);
    let len = text.chars().filter(|c| !c.is_whitespace()).count();
    if len == 0 {
        0.0
    } else {
        link as f64 / len as f64
    }
}

fn has_block_child(el: &ElementRef) -> bool {
    el.descendants()
        .skip(1)
        .filter_map(ElementRef::wrap)
        .any(|d| BLOCK_TAGS.contains(&tag(&d)))
}

/// Paragraph-like elements: the scored tags, and divs used as paragraphs.
fn is_paragraph(el: &ElementRef) -> bool {
    SCORED_TAGS.contains(&tag(el)) || (tag(el) == "div" && !has_block_child(el))
}

fn first_text(doc: &Html, selector: &str, attr: Option<&str>) -> Option<String> {
    let sel = Selector::parse(selector).expect("static selector");
    doc.select(&sel)
        .filter_map(|el| match attr {
            Some(a) => el.value().attr(a).map(str::to_string),
            None => Some(el.text().collect()),
        })
        .map(|s| collapse_whitespace(&s))
        .find(|s| !s.is_empty())
}

/// The text-density main-content heuristic.
///
/// Each paragraph-like block with at least 25 characters of non-link text
/// scores `1 + commas + min(chars / 100, 3)`. Its parent gets the full score
/// and its grandparent half, on top of a base from tag and class/id hints.
/// The winner is the candidate with the highest score scaled by
/// `1 - link density`; siblings scoring at least a fifth of it come along.
pub fn extract_text(html: &[u8], base_url: &str) -> ExtractionResult {
    let source = String::from_utf8_lossy(html);
    if source.trim().is_empty() {
        return ExtractionResult::default();
    }
    let doc = Html::parse_document(&source);
    let title_guess = first_text(&doc, r#"meta[property="og:title"]"#, Some("content"))
        .or_else(|| first_text(&doc, "title", None))
        .unwrap_or_default();

    let base = parse_lenient(base_url).ok();
    let base = first_text(&doc, "base[href]", Some("href"))
        .and_then(|href| match &base {
            Some(b) => b.join(&href).ok(),
            None => Url::parse(&href).ok(),
        })
        .or(base);
    let mut links = Vec::new();
    let mut seen = HashSet::new();
    let anchors = Selector::parse("a[href]").expect("static selector");
    for a in doc.select(&anchors) {
        let href = a.value().attr("href").unwrap_or("");
        let abs = match &base {
            Some(b) => absolutize(b, href),
            None => Url::parse(href.trim()).ok().and_then(|u| absolutize(&u, href)),
        };
        if let Some(u) = abs {
            if seen.insert(u.to_string()) {
                links.push(u.to_string());
            }
        }
    }

    let body_sel = Selector::parse("body").expect("static selector");
    let Some(body) = doc.select(&body_sel).next() else {
        return ExtractionResult { text: String::new(), title_guess, links };
    };

    let mut scores: HashMap<NodeId, f64> = HashMap::new();
    let mut order: Vec<NodeId> = Vec::new();
    let mut add = |el: ElementRef, s: f64, scores: &mut HashMap<NodeId, f64>| {
        let entry = scores.entry(el.id()).or_insert_with(|| {
            order.push(el.id());
            tag_weight(tag(&el)) + class_weight(&el)
        });
        *entry += s;
    };
    for el in body.descendants().filter_map(ElementRef::wrap) {
        if !is_paragraph(&el) || in_boilerplate(&el) {
            continue;
        }
        let (text, link) = text_and_link_len(&el);
        let dense = text.chars().count().saturating_sub(link);
        if dense < 25 {
            continue;
        }
        let score = 1.0 + text.matches([',', '，', '、']).count() as f64 + (dense as f64 / 100.0).min(3.0);
        let mut up = el.ancestors().filter_map(ElementRef::wrap);
        if let Some(parent) = up.next() {
            add(parent, score, &mut scores);
            if let Some(grand) = up.next() {
                add(grand, score / 2.0, &mut scores);
            }
        }
    }
    let final_score = |id: NodeId| -> f64 {
        let el = ElementRef::wrap(doc.tree.get(id).expect("scored node")).expect("element");
        scores[&id] * (1.0 - link_density(&el))
    };
    let mut top: Option<(NodeId, f64)> = None;
    for &id in &order {
        let s = final_score(id);
        if top.is_none_or(|(_, best)| s > best) {
            top = Some((id, s));
        }
    }

    let mut included: Vec<ElementRef> = Vec::new();
    match top {
        None => included.push(body),
        Some((id, best)) => {
            let top_el = ElementRef::wrap(doc.tree.get(id).expect("top node")).expect("element");
            let threshold = (best * 0.2).max(10.0);
            match top_el.parent().and_then(ElementRef::wrap).filter(|_| tag(&top_el) != "body") {
                None => included.push(top_el),
                Some(parent) => {
                    for sib in parent.children().filter_map(ElementRef::wrap) {
                        let keep = sib.id() == id
                            || (scores.contains_key(&sib.id()) && final_score(sib.id()) >= threshold)
                            || (tag(&sib) == "p" && !in_boilerplate(&sib) && {
                                let (t, _) = text_and_link_len(&sib);
                                t.chars().count() > 80 && link_density(&sib) < 0.25
                            });
                        if keep {
                            included.push(sib);
                        }
                    }
                }
            }
        }
    }

    let mut blocks = Vec::new();
    for el in included {
        collect_units(el, &mut blocks);
    }
    ExtractionResult { text: blocks.join("\n\n"), title_guess, links }
}

/// Text blocks of a subtree in document order, skipping boilerplate and
/// link-heavy blocks.
fn collect_units(root: ElementRef, out: &mut Vec<String>) {
    fn flush(inline: &mut String, out: &mut Vec<String>) {
        let t = collapse_whitespace(inline);
        if !t.is_empty() {
            out.push(t);
        }
        inline.clear();
    }
    fn walk(el: ElementRef, inline: &mut String, out: &mut Vec<String>) {
        for child in el.children() {
            match child.value() {
                Node::Text(t) => inline.push_str(t),
                Node::Element(_) => {
                    let c = ElementRef::wrap(child).expect("element");
                    if skipped(&c) || is_boilerplate(&c) {
                        continue;
                    }
                    let name = tag(&c);
                    if UNIT_TAGS.contains(&name) || is_paragraph(&c) {
                        flush(inline, out);
                        let (text, _) = text_and_link_len(&c);
                        if !text.is_empty() && link_density(&c) < 0.5 {
                            out.push(text);
                        }
                    } else if BLOCK_TAGS.contains(&name) || name == "br" {
                        flush(inline, out);
                        walk(c, inline, out);
                        flush(inline, out);
                    } else if name == "a" {
                        inline.push_str(&text_and_link_len(&c).0);
                    } else {
                        walk(c, inline, out);
                    }
                }
                _ => {}
            }
        }
    }
    if skipped(&root) || (is_boilerplate(&root) && tag(&root) != "body") {
        return;
    }
    let mut inline = String::new();
    if UNIT_TAGS.contains(&tag(&root)) {
        let (text, _) = text_and_link_len(&root);
        if !text.is_empty() {
            out.push(text);
        }
        return;
    }
    walk(root, &mut inline, out);
    flush(&mut inline, out);
}

/// Visible text of an HTML fragment such as a feed description.
pub fn strip_tags(fragment: &str) -> String {
    let doc = Html::parse_fragment(fragment);
    collapse_whitespace(&doc.root_element().text().collect::<Vec<_>>().join(" "))
}

/// Where story text comes from.
#[derive(Debug, Clone, Copy)]
pub enum TextSource<'a> {
    /// A fetched page.
    Html(&'a [u8]),
    /// Plain or lightly marked-up text, such as a feed description.
    Fragment(&'a str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Processed {
    pub language: String,
    pub kept: usize,
    pub dropped: usize,
    pub title_guess: String,
}

/// Sentence splitting, dedup and language detection with one detector configuration.
#[derive(Debug, Clone)]
pub struct TextProcessor {
    detector: LanguageDetector,
}

impl Default for TextProcessor {
    fn default() -> Self {
        TextProcessor::new(DetectorConfig::default())
    }
}

impl TextProcessor {
    pub fn new(config: DetectorConfig) -> Self {
        TextProcessor { detector: LanguageDetector::builtin_with(config) }
    }

    /// A shared processor with the default configuration.
    pub fn shared() -> &'static TextProcessor {
        static P: OnceLock<TextProcessor> = OnceLock::new();
        P.get_or_init(TextProcessor::default)
    }

    pub fn detect_language(&self, text: &str) -> String {
        self.detector.detect(text).to_string()
    }

    /// Sentences of `text`, splitting paragraphs separately.
    pub fn split(&self, text: &str, language: &str) -> Vec<String> {
        let splitter = SentenceSplitter::for_language(language);
        text.split("\n\n")
            .flat_map(|para| splitter.split(para))
            .map(|s| collapse_whitespace(&s))
            .filter(|s| !s.is_empty())
            .collect()
    }

    /// Extracts, splits, dedups and stores the text of a story.
    pub fn process_story(&self, store: &mut Store, stories_id: u64, source: TextSource) -> Result<Processed, StoreError> {
        let story = store.story(stories_id).ok_or(StoreError::UnknownStory(stories_id))?.clone();
        let (text, links, title_guess) = match source {
            TextSource::Html(html) => {
                let r = extract_text(html, &story.url);
                (r.text, r.links, r.title_guess)
            }
            TextSource::Fragment(f) => (strip_tags(f), Vec::new(), String::new()),
        };
        let language = self.detect_language(&text);
        let sentences = self.split(&text, &language);
        let total = sentences.len();
        let kept = dedup_sentences(store, stories_id, story.media_id, story.publish_date.date_naive(), sentences);
        let processed = Processed { language: language.clone(), kept: kept.len(), dropped: total - kept.len(), title_guess };
        store.set_story_text(
            StoryText { stories_id, extracted_text: kept.join(" "), sentences: kept, links },
            &language,
        )?;
        Ok(processed)
    }
}

/// Drops sentences already stored by another story of the same medium and
/// day, and repeats within the story itself. The store is not modified;
/// storing the result registers the kept sentences.
pub fn dedup_sentences(
    store: &Store,
    stories_id: u64,
    media_id: u64,
    day: NaiveDate,
    sentences: Vec<String>,
) -> Vec<String> {
    let mut seen = HashSet::new();
    sentences
        .into_iter()
        .map(|s| collapse_whitespace(&s))
        .filter(|s| {
            let owner = store.sentence_owner(media_id, day, s);
            owner.is_none_or(|o| o == stories_id) && seen.insert(s.clone())
        })
        .collect()
}
