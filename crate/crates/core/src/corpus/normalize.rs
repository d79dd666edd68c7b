use std::collections::{BTreeMap, HashSet};
use std::io::{self, BufRead};

use regex::Regex;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::NewsRecord;

/// Inclusive code point range of a script whose characters survive tokenization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptRange {
    pub start: u32,
    pub end: u32,
}

impl ScriptRange {
    pub const BENGALI: ScriptRange = ScriptRange { start: 0x0980, end: 0x09FF };

    fn contains(&self, c: char) -> bool {
        (self.start..=self.end).contains(&(c as u32))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenizerConfig {
    pub scripts: Vec<ScriptRange>,
    pub fold_ascii_case: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            scripts: vec![ScriptRange::BENGALI],
            fold_ascii_case: true,
        }
    }
}

/// Zero-width joiners and friends sit inside Bengali words; they are deleted
/// rather than turned into separators.
fn is_zero_width(c: char) -> bool {
    matches!(c, '\u{200B}'..='\u{200D}' | '\u{2060}' | '\u{FEFF}')
}

/// Text normalizer: NFC, URL removal, script filtering, whitespace split.
#[derive(Debug, Clone)]
pub struct Normalizer {
    config: TokenizerConfig,
    url: Regex,
}

impl Default for Normalizer {
    fn default() -> Self {
        Self::new(TokenizerConfig::default())
    }
}

impl Normalizer {
    pub fn new(config: TokenizerConfig) -> Self {
        Normalizer {
            config,
            url: Regex::new(r"(?i)\b(?:https?|ftp)://\S*|\bwww\.\S*").expect("static regex"),
        }
    }

    pub fn config(&self) -> &TokenizerConfig {
        &self.config
    }

    fn keep(&self, c: char) -> bool {
        c.is_ascii_alphanumeric() || self.config.scripts.iter().any(|s| s.contains(c))
    }

    /// Tokens of `text` before stopword removal.
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let composed: String = text.nfc().collect();
        let without_urls = self.url.replace_all(&composed, " ");
        let filtered: String = without_urls
            .chars()
            .filter(|c| !is_zero_width(*c))
            .map(|c| if self.keep(c) { c } else { ' ' })
            .collect();
        // Deleting joiners can leave decomposed sequences behind; compose again.
        let mut cleaned: String = filtered.nfc().collect();
        if self.config.fold_ascii_case {
            cleaned.make_ascii_lowercase();
        }
        cleaned.split_whitespace().map(str::to_owned).collect()
    }

    pub fn tokens(&self, text: &str, stopwords: &Stopwords) -> Vec<String> {
        self.tokenize(text)
            .into_iter()
            .filter(|t| !stopwords.contains(t))
            .collect()
    }

    /// Title and body are tokenized together, title first.
    pub fn normalize(&self, record: &NewsRecord, stopwords: &Stopwords) -> TokenizedDoc {
        let mut tokens = self.tokens(&record.title, stopwords);
        tokens.extend(self.tokens(&record.body, stopwords));
        TokenizedDoc::new(record.id.clone(), tokens)
    }
}

/// Stopword list, stored in normalized form so it matches normalized tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stopwords {
    words: HashSet<String>,
}

impl Stopwords {
    pub fn empty() -> Self {
        Self::default()
    }

    /// One token per line; blank lines and `#` comments are skipped.
    pub fn from_reader(reader: impl BufRead, normalizer: &Normalizer) -> io::Result<Self> {
        let mut words = HashSet::new();
        for line in reader.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            words.extend(normalizer.tokenize(line));
        }
        Ok(Stopwords { words })
    }

    pub fn from_words<I, S>(words: I, normalizer: &Normalizer) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Stopwords {
            words: words
                .into_iter()
                .flat_map(|w| normalizer.tokenize(w.as_ref()))
                .collect(),
        }
    }

    /// The bundled Bengali stopword list.
    pub fn standard(normalizer: &Normalizer) -> Self {
        Self::from_reader(crate::defaults::STOPWORDS.as_bytes(), normalizer).expect("in-memory read")
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// A normalized article: ordered tokens plus their multiset counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "RawTokenizedDoc")]
pub struct TokenizedDoc {
    pub doc_id: String,
    pub tokens: Vec<String>,
    pub token_counts: BTreeMap<String, u32>,
}

#[derive(Deserialize)]
struct RawTokenizedDoc {
    doc_id: String,
    tokens: Vec<String>,
}

impl From<RawTokenizedDoc> for TokenizedDoc {
    fn from(raw: RawTokenizedDoc) -> Self {
        TokenizedDoc::new(raw.doc_id, raw.tokens)
    }
}

impl TokenizedDoc {
    pub fn new(doc_id: impl Into<String>, tokens: Vec<String>) -> Self {
        let mut token_counts = BTreeMap::new();
        for t in &tokens {
            *token_counts.entry(t.clone()).or_insert(0) += 1;
        }
        TokenizedDoc {
            doc_id: doc_id.into(),
            tokens,
            token_counts,
        }
    }

    pub fn from_strs(doc_id: impl Into<String>, tokens: &[&str]) -> Self {
        Self::new(doc_id, tokens.iter().map(|t| t.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Distinct tokens, sorted.
    pub fn token_set(&self) -> impl Iterator<Item = &str> {
        self.token_counts.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn record(title: &str, body: &str) -> NewsRecord {
        NewsRecord {
            id: "r1".into(),
            url: String::new(),
            source_domain: String::new(),
            published_on: NaiveDate::from_ymd_opt(2019, 8, 1).unwrap(),
            title: title.into(),
            body: body.into(),
            region: None,
        }
    }

    #[test]
    fn stopword_only_body_is_empty() {
        let n = Normalizer::default();
        let sw = Stopwords::from_words(["এবং"], &n);
        let doc = n.normalize(&record("", "এবং"), &sw);
        assert!(doc.tokens.is_empty());
    }

    #[test]
    fn urls_are_removed() {
        let n = Normalizer::default();
        let doc = n.normalize(&record("", "http://x.y z"), &Stopwords::empty());
        assert_eq!(doc.tokens, vec!["z"]);
        let doc = n.normalize(&record("", "see www.dghs.gov.bd/dengue মশা"), &Stopwords::empty());
        assert_eq!(doc.tokens, vec!["see", "মশা"]);
    }

    #[test]
    fn decomposed_and_precomposed_agree() {
        // U+09CB (BENGALI VOWEL SIGN O) decomposes canonically to U+09C7 U+09BE.
        let n = Normalizer::default();
        let precomposed = "ক\u{09CB}লকাতা";
        let decomposed = "ক\u{09C7}\u{09BE}লকাতা";
        assert_ne!(precomposed, decomposed);
        assert_eq!(n.tokenize(precomposed), n.tokenize(decomposed));
        assert_eq!(n.tokenize(decomposed), vec!["কোলকাতা".nfc().collect::<String>()]);
    }

    #[test]
    fn punctuation_digits_and_foreign_script() {
        let n = Normalizer::default();
        assert_eq!(
            n.tokenize("ডেঙ্গু, ১২৩ জন; 45 Patients — нет।"),
            vec!["ডেঙ্গু", "১২৩", "জন", "45", "patients"]
        );
    }

    #[test]
    fn zero_width_joiner_does_not_split_words() {
        let n = Normalizer::default();
        assert_eq!(n.tokenize("র\u{200D}্যাব").len(), 1);
    }

    #[test]
    fn counts_match_tokens() {
        let doc = TokenizedDoc::from_strs("d", &["a", "b", "a"]);
        assert_eq!(doc.token_counts.values().sum::<u32>() as usize, doc.len());
        assert_eq!(doc.token_counts["a"], 2);
        let json = serde_json::to_string(&doc).unwrap();
        let back: TokenizedDoc = serde_json::from_str(&json).unwrap();
        assert_eq!(back, doc);
    }

    fn text_strategy() -> impl Strategy<Value = String> {
        let pieces = prop::sample::select(vec![
            "ডেঙ্গু", "মশা", "ক\u{09C7}\u{09BE}", "\u{200D}", " ", ".", "http://a.b/c", "www.x.y",
            "Dhaka", "১২", "42", "é", "e\u{0301}", "\u{09BC}", "ড়", "এবং", "\n", "—", "a\u{09CD}",
        ]);
        prop::collection::vec(pieces, 0..24).prop_map(|v| v.concat())
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(text in text_strategy()) {
            let n = Normalizer::default();
            let sw = Stopwords::from_words(["এবং", "the"], &n);
            let once = n.tokens(&text, &sw);
            let twice = n.tokens(&once.join(" "), &sw);
            prop_assert_eq!(&once, &twice);
            for t in &once {
                prop_assert!(!t.chars().any(char::is_whitespace));
                prop_assert!(!sw.contains(t));
            }
        }

        #[test]
        fn tokens_stay_in_allow_list(text in "\\PC{0,40}") {
            let n = Normalizer::default();
            for t in n.tokenize(&text) {
                prop_assert!(t.chars().all(|c| c.is_ascii_alphanumeric() || ScriptRange::BENGALI.contains(c)));
            }
        }
    }
}
