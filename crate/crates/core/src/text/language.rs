//! Character-trigram language identification.
//!
//! Each language profile holds the most frequent trigrams of a reference
//! text shipped under `data/lang/`. A document is compared with each profile
//! by cosine similarity inside that profile's trigram space, and assigned the
//! best one, or `"und"` when the text is too short or no profile is similar
//! enough. Han ideographs count as one-character words, so Chinese profiles
//! effectively hold character frequencies.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

/// Language code returned when no decision can be made.
pub const UNDETERMINED: &str = "und";

const PROFILE_SOURCES: [(&str, &str); 10] = [
    ("en", include_str!("../../data/lang/en.txt")),
    ("es", include_str!("../../data/lang/es.txt")),
    ("fr", include_str!("../../data/lang/fr.txt")),
    ("de", include_str!("../../data/lang/de.txt")),
    ("pt", include_str!("../../data/lang/pt.txt")),
    ("it", include_str!("../../data/lang/it.txt")),
    ("hi", include_str!("../../data/lang/hi.txt")),
    ("ar", include_str!("../../data/lang/ar.txt")),
    ("ru", include_str!("../../data/lang/ru.txt")),
    ("zh", include_str!("../../data/lang/zh.txt")),
];

/// Tunables for [`LanguageDetector`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Texts with fewer non-whitespace characters than this are undetermined.
    pub min_chars: usize,
    /// Best cosine similarity must reach this value.
    pub min_similarity: f64,
    /// Number of trigrams kept per profile.
    pub profile_size: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            min_chars: 40,
            min_similarity: 0.5,
            profile_size: 100,
        }
    }
}

type Trigram = [char; 3];

#[derive(Debug, Clone)]
struct Profile {
    code: String,
    weights: BTreeMap<Trigram, f64>,
    norm: f64,
}

/// A set of trigram profiles.
#[derive(Debug, Clone)]
pub struct LanguageDetector {
    profiles: Vec<Profile>,
    config: DetectorConfig,
}

impl LanguageDetector {
    /// Detector over the built-in profiles for en, es, fr, de, pt, it, hi, ar, ru and zh.
    pub fn builtin() -> Self {
        Self::builtin_with(DetectorConfig::default())
    }

    pub fn builtin_with(config: DetectorConfig) -> Self {
        let mut d = LanguageDetector { profiles: Vec::new(), config };
        for (code, text) in PROFILE_SOURCES {
            d.add_profile(code, text);
        }
        d
    }

    /// Empty detector; add profiles with [`add_profile`](Self::add_profile).
    pub fn new(config: DetectorConfig) -> Self {
        LanguageDetector { profiles: Vec::new(), config }
    }

    /// Adds (or replaces) the profile for `code`, built from reference text.
    pub fn add_profile(&mut self, code: &str, reference_text: &str) {
        let mut ranked: Vec<(Trigram, u32)> = trigram_counts(reference_text).into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(self.config.profile_size);
        let weights: BTreeMap<Trigram, f64> =
            ranked.into_iter().map(|(t, n)| (t, f64::from(n))).collect();
        let norm = l2(weights.values().copied());
        self.profiles.retain(|p| p.code != code);
        self.profiles.push(Profile { code: code.into(), weights, norm });
    }

    pub fn config(&self) -> DetectorConfig {
        self.config
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.profiles.iter().map(|p| p.code.as_str())
    }

    /// Per-language cosine similarity, best first.
    pub fn scores(&self, text: &str) -> Vec<(&str, f64)> {
        let doc = trigram_counts(text);
        let mut scores: Vec<(&str, f64)> = self
            .profiles
            .iter()
            .map(|p| {
                let mut dot = 0.0;
                let mut doc_sq = 0.0;
                for (t, &n) in &doc {
                    if let Some(w) = p.weights.get(t) {
                        let n = f64::from(n);
                        dot += w * n;
                        doc_sq += n * n;
                    }
                }
                if doc_sq == 0.0 || p.norm == 0.0 {
                    return (p.code.as_str(), 0.0);
                }
                (p.code.as_str(), dot / (libm::sqrt(doc_sq) * p.norm))
            })
            .collect();
        scores.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        scores
    }

    /// ISO-639-1 code of the most similar profile, or `"und"`.
    pub fn detect(&self, text: &str) -> &str {
        let signal = text.chars().filter(|c| !c.is_whitespace()).count();
        if signal < self.config.min_chars {
            return UNDETERMINED;
        }
        match self.scores(text).first() {
            Some(&(code, score)) if score >= self.config.min_similarity => code,
            _ => UNDETERMINED,
        }
    }
}

fn l2(values: impl Iterator<Item = f64>) -> f64 {
    libm::sqrt(values.map(|v| v * v).sum())
}

/// Trigram counts over letters only, each word padded with a space on both
/// sides. Digits and punctuation act as word breaks.
fn trigram_counts(text: &str) -> BTreeMap<Trigram, u32> {
    let mut counts = BTreeMap::new();
    let mut word: Vec<char> = Vec::new();
    let flush = |word: &mut Vec<char>, counts: &mut BTreeMap<Trigram, u32>| {
        if word.is_empty() {
            return;
        }
        let mut padded = Vec::with_capacity(word.len() + 2);
        padded.push(' ');
        padded.append(word);
        padded.push(' ');
        for w in padded.windows(3) {
            *counts.entry([w[0], w[1], w[2]]).or_insert(0) += 1;
        }
    };
    for c in text.chars() {
        if is_han(c) {
            flush(&mut word, &mut counts);
            word.push(c);
            flush(&mut word, &mut counts);
        } else if c.is_alphabetic() || is_combining_mark(c) {
            word.extend(c.to_lowercase());
        } else {
            flush(&mut word, &mut counts);
        }
    }
    flush(&mut word, &mut counts);
    counts
}

fn is_han(c: char) -> bool {
    matches!(c as u32, 0x3400..=0x4DBF | 0x4E00..=0x9FFF | 0xF900..=0xFAFF)
}

/// Devanagari and Arabic vowel signs are not `alphabetic` in every range but
/// belong inside words.
fn is_combining_mark(c: char) -> bool {
    matches!(c as u32, 0x0900..=0x097F | 0x0610..=0x061A | 0x064B..=0x065F | 0x0670)
}

/// Detects with the built-in profiles and default thresholds.
pub fn detect_language(text: &str) -> String {
    String::from(LanguageDetector::builtin().detect(text))
}
