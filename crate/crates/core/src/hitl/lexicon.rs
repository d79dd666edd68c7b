use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::labels::{CoiLink, Label};
use crate::topics::SeedSet;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LexiconError {
    #[error("seed set {0} given twice")]
    DuplicateSet(CoiLink),
    #[error("empty keyword in set {0}")]
    EmptyToken(CoiLink),
    #[error("`{token}` already belongs to the {existing} class")]
    OppositeClass { token: String, existing: Label },
    #[error("`{0}` is already in the lexicon")]
    AlreadyPresent(String),
    #[error("lexicon row for `{token}`: {message}")]
    BadRow { token: String, message: String },
}

/// Where a keyword came from: the initial seed list or an accepted topic-model
/// candidate, tagged with the lexicon version that introduced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Provenance {
    Seed,
    LdaAccepted(u32),
}

impl Provenance {
    pub fn version(self) -> u32 {
        match self {
            Provenance::Seed => 0,
            Provenance::LdaAccepted(v) => v,
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Seed => f.write_str("seed"),
            Provenance::LdaAccepted(v) => write!(f, "lda-accepted@{v}"),
        }
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "seed" {
            return Ok(Provenance::Seed);
        }
        s.strip_prefix("lda-accepted@")
            .and_then(|v| v.parse().ok())
            .filter(|v| *v > 0)
            .map(Provenance::LdaAccepted)
            .ok_or_else(|| format!("bad provenance `{s}`"))
    }
}

impl TryFrom<String> for Provenance {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Provenance> for String {
    fn from(p: Provenance) -> String {
        p.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub token: String,
    pub link: CoiLink,
    pub provenance: Provenance,
}

impl LexiconEntry {
    pub fn class(&self) -> Label {
        self.link.class()
    }
}

/// One line of the lexicon file. `version` is the version that introduced the token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconRow {
    pub version: u32,
    pub class: Label,
    pub set: CoiLink,
    pub token: String,
    pub provenance: Provenance,
}

/// Disease and intervention keyword sets, grown append-only across review
/// iterations. Version 0 holds exactly the seed words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordLexicon {
    version: u32,
    entries: Vec<LexiconEntry>,
    index: HashMap<String, usize>,
}

impl KeywordLexicon {
    pub fn from_seeds(seeds: &[SeedSet]) -> Result<Self, LexiconError> {
        let mut seen_sets = BTreeSet::new();
        let mut lex = KeywordLexicon { version: 0, entries: Vec::new(), index: HashMap::new() };
        for set in seeds {
            if !seen_sets.insert(set.set_id) {
                return Err(LexiconError::DuplicateSet(set.set_id));
            }
            for word in &set.words {
                lex.push(word, set.set_id, Provenance::Seed)?;
            }
        }
        Ok(lex)
    }

    /// Lexicon built from the bundled chain-of-infection seeds.
    pub fn standard() -> Self {
        Self::from_seeds(&crate::defaults::seed_sets()).expect("bundled seeds are consistent")
    }

    fn push(&mut self, token: &str, link: CoiLink, provenance: Provenance) -> Result<(), LexiconError> {
        if token.trim().is_empty() {
            return Err(LexiconError::EmptyToken(link));
        }
        if let Some(&i) = self.index.get(token) {
            let existing = self.entries[i].class();
            return Err(if existing == link.class() {
                LexiconError::AlreadyPresent(token.to_string())
            } else {
                LexiconError::OppositeClass { token: token.to_string(), existing }
            });
        }
        self.index.insert(token.to_string(), self.entries.len());
        self.entries.push(LexiconEntry { token: token.to_string(), link, provenance });
        Ok(())
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn entry(&self, token: &str) -> Option<&LexiconEntry> {
        self.index.get(token).map(|&i| &self.entries[i])
    }

    pub fn class_of(&self, token: &str) -> Option<Label> {
        self.entry(token).map(LexiconEntry::class)
    }

    pub fn keywords(&self, class: Label) -> BTreeSet<String> {
        self.entries
            .iter()
            .filter(|e| e.class() == class)
            .map(|e| e.token.clone())
            .collect()
    }

    pub fn disease_keywords(&self) -> BTreeSet<String> {
        self.keywords(Label::Disease)
    }

    pub fn intervention_keywords(&self) -> BTreeSet<String> {
        self.keywords(Label::Intervention)
    }

    pub fn union(&self) -> BTreeSet<String> {
        self.entries.iter().map(|e| e.token.clone()).collect()
    }

    /// Current words of every non-empty link, in chain order. These seed the
    /// next topic-model fit.
    pub fn seed_sets(&self) -> Vec<SeedSet> {
        CoiLink::ALL
            .into_iter()
            .map(|link| SeedSet {
                set_id: link,
                words: self.entries.iter().filter(|e| e.link == link).map(|e| e.token.clone()).collect(),
            })
            .filter(|s| !s.words.is_empty())
            .collect()
    }

    /// Lexicon content as of `version` (clamped to the current version).
    pub fn snapshot(&self, version: u32) -> KeywordLexicon {
        let version = version.min(self.version);
        let mut lex = KeywordLexicon { version, entries: Vec::new(), index: HashMap::new() };
        for e in self.entries.iter().filter(|e| e.provenance.version() <= version) {
            lex.push(&e.token, e.link, e.provenance).expect("snapshot of a consistent lexicon");
        }
        lex
    }

    /// The next version: this content plus `additions`, all tagged with the
    /// new version. An empty addition list still bumps the version.
    pub fn next_version(&self, additions: &[(String, CoiLink)]) -> Result<KeywordLexicon, LexiconError> {
        let mut next = self.clone();
        next.version += 1;
        for (token, link) in additions {
            next.push(token, *link, Provenance::LdaAccepted(next.version))?;
        }
        Ok(next)
    }

    pub fn rows(&self) -> Vec<LexiconRow> {
        self.entries
            .iter()
            .map(|e| LexiconRow {
                version: e.provenance.version(),
                class: e.class(),
                set: e.link,
                token: e.token.clone(),
                provenance: e.provenance,
            })
            .collect()
    }

    /// Rebuilds a lexicon from file rows. `version` may exceed every row's
    /// version when the last iterations accepted nothing.
    pub fn from_rows(rows: &[LexiconRow], version: u32) -> Result<Self, LexiconError> {
        let mut lex = KeywordLexicon { version: 0, entries: Vec::new(), index: HashMap::new() };
        let mut sorted: Vec<&LexiconRow> = rows.iter().collect();
        sorted.sort_by_key(|r| r.version);
        for r in sorted {
            let bad = |message: &str| LexiconError::BadRow { token: r.token.clone(), message: message.into() };
            if r.class != r.set.class() {
                return Err(bad("class does not match its set"));
            }
            if r.version != r.provenance.version() {
                return Err(bad("version does not match provenance"));
            }
            lex.push(&r.token, r.set, r.provenance)?;
            lex.version = lex.version.max(r.version);
        }
        lex.version = lex.version.max(version);
        Ok(lex)
    }
}
