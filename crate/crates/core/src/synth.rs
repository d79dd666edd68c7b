//! Seeded synthetic corpora used by the tests, the benchmarks and the demo
//! workspace. Every generator is a pure function of its spec.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytics::{CaseRecord, CaseSource, ClassifiedDoc};
use crate::classify::{featurize, ClassifierModel, LabeledVector, ModelKind};
use crate::corpus::{geotag, CorpusStore, Gazetteer, NewsRecord, TokenizedDoc};
use crate::hitl::KeywordLexicon;
use crate::labels::{CoiLink, Label};
use crate::region::{Division, RegionRef, DISTRICTS};
use crate::topics::SeedSet;
use crate::workspace::{GeotagRow, Prediction, Workspace};

/// Two planted topics over disjoint vocabularies.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    pub docs: usize,
    pub vocab_per_topic: usize,
    /// Words per topic, besides the seed, that co-occur with it at a high rate.
    pub correlates: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub seed_rate: f64,
    pub correlate_rate: f64,
    pub rng_seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            docs: 200,
            vocab_per_topic: 50,
            correlates: 3,
            min_len: 8,
            max_len: 40,
            seed_rate: 0.15,
            correlate_rate: 0.10,
            rng_seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub docs: Vec<TokenizedDoc>,
    /// Planted topic of each document, parallel to `docs`.
    pub doc_topic: Vec<usize>,
    /// `vocab[t]` is topic t's vocabulary; index 0 is the seed word and
    /// indices `1..=correlates` are the correlates.
    pub vocab: Vec<Vec<String>>,
    correlate_count: usize,
}

impl PlantedCorpus {
    pub fn seed(&self, topic: usize) -> &str {
        &self.vocab[topic][0]
    }

    pub fn correlates(&self, topic: usize) -> &[String] {
        let n = self.correlate_count;
        &self.vocab[topic][1..=n]
    }

    /// Which planted topic a word belongs to.
    pub fn topic_of_word(&self, word: &str) -> Option<usize> {
        self.vocab.iter().position(|v| v.iter().any(|w| w == word))
    }

    /// Seed sets binding topic 0 to the infectious-agent link and topic 1 to
    /// the reservoir link, so the two sides land in opposite classes.
    pub fn seed_sets(&self) -> Vec<SeedSet> {
        PLANTED_LINKS
            .iter()
            .enumerate()
            .map(|(t, link)| SeedSet { set_id: *link, words: vec![self.seed(t).to_string()] })
            .collect()
    }
}

pub const PLANTED_LINKS: [CoiLink; 2] = [CoiLink::InfectiousAgent, CoiLink::Reservoir];

pub fn planted_corpus(spec: &PlantedSpec) -> PlantedCorpus {
    assert!(spec.vocab_per_topic > spec.correlates + 1, "vocabulary too small");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let vocab: Vec<Vec<String>> = (0..2)
        .map(|t| (0..spec.vocab_per_topic).map(|i| format!("t{t}w{i:02}")).collect())
        .collect();
    let mut docs = Vec::with_capacity(spec.docs);
    let mut doc_topic = Vec::with_capacity(spec.docs);
    for d in 0..spec.docs {
        let topic = d % 2;
        let words = &vocab[topic];
        let len = rng.random_range(spec.min_len..=spec.max_len);
        let tokens = (0..len)
            .map(|_| {
                let u: f64 = rng.random();
                let idx = if u < spec.seed_rate {
                    0
                } else if u < spec.seed_rate + spec.correlate_rate * spec.correlates as f64 {
                    1 + rng.random_range(0..spec.correlates)
                } else {
                    rng.random_range(spec.correlates + 1..spec.vocab_per_topic)
                };
                words[idx].clone()
            })
            .collect();
        docs.push(TokenizedDoc::new(format!("p{d:04}"), tokens));
        doc_topic.push(topic);
    }
    PlantedCorpus { docs, doc_topic, vocab, correlate_count: spec.correlates }
}

/// Keyword-sampled two-class corpus for classifier calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct KeywordCorpusSpec {
    pub disease_docs: usize,
    pub intervention_docs: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Probability that a token is drawn from the other class's keywords.
    pub noise: f64,
    pub rng_seed: u64,
}

impl Default for KeywordCorpusSpec {
    fn default() -> Self {
        KeywordCorpusSpec {
            disease_docs: 1045,
            intervention_docs: 505,
            min_len: 5,
            max_len: 30,
            noise: 0.2,
            rng_seed: 42,
        }
    }
}

/// Draws every document's tokens from its class's keyword list under a
/// Zipf-like weighting (weight 1/(rank+1) in lexicon order), swapping in the
/// other class's keywords with probability `noise`. Document ids are shuffled
/// against class so id order carries no label signal.
pub fn keyword_corpus(spec: &KeywordCorpusSpec, lexicon: &KeywordLexicon) -> Vec<(TokenizedDoc, Label)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let pools: Vec<(Vec<&str>, Vec<f64>)> = Label::ALL
        .iter()
        .map(|&label| {
            let words: Vec<&str> = lexicon.entries().iter().filter(|e| e.class() == label).map(|e| e.token.as_str()).collect();
            let cumulative = words
                .iter()
                .enumerate()
                .scan(0.0, |acc, (i, _)| {
                    *acc += 1.0 / (i + 1) as f64;
                    Some(*acc)
                })
                .collect();
            (words, cumulative)
        })
        .collect();
    assert!(pools.iter().all(|(w, _)| !w.is_empty()), "both classes need keywords");
    let draw = |rng: &mut ChaCha8Rng, label: Label| {
        let (words, cum) = &pools[label.index()];
        let u = rng.random::<f64>() * cum[cum.len() - 1];
        let i = cum.partition_point(|c| *c <= u).min(words.len() - 1);
        words[i].to_string()
    };

    let mut labels: Vec<Label> = std::iter::repeat_n(Label::Disease, spec.disease_docs)
        .chain(std::iter::repeat_n(Label::Intervention, spec.intervention_docs))
        .collect();
    rand::seq::SliceRandom::shuffle(labels.as_mut_slice(), &mut rng);
    labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            let len = rng.random_range(spec.min_len..=spec.max_len);
            let tokens = (0..len)
                .map(|_| {
                    let side = if rng.random::<f64>() < spec.noise { label.other() } else { label };
                    draw(&mut rng, side)
                })
                .collect();
            (TokenizedDoc::new(format!("k{i:05}"), tokens), label)
        })
        .collect()
}

/// The bundled seeds plus `extra` synthetic accepted terms spread round-robin
/// over the six links, all accepted in a single review iteration.
pub fn expanded_lexicon(extra: usize) -> KeywordLexicon {
    let base = KeywordLexicon::standard();
    let additions: Vec<(String, CoiLink)> =
        (0..extra).map(|i| (format!("kw{i:02}"), CoiLink::ALL[i % CoiLink::ALL.len()])).collect();
    base.next_version(&additions).expect("synthetic terms are fresh")
}

/// Randomized classified documents spread over all districts, the Dhaka and
/// Chattogram thanas, and 2017-2019. Roughly one in ten is left ungeotagged.
pub fn regional_docs(n: usize, thanas: &BTreeMap<String, Vec<String>>, rng_seed: u64) -> Vec<ClassifiedDoc> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    (0..n)
        .map(|i| {
            let (district, division) = DISTRICTS[rng.random_range(0..DISTRICTS.len())];
            let region = if rng.random_range(0..10) == 0 {
                None
            } else {
                let thana = thanas
                    .get(district)
                    .filter(|_| division.has_thanas() && rng.random_bool(0.6))
                    .and_then(|ts| ts.choose(&mut rng).cloned());
                Some(RegionRef { division, district: district.to_string(), thana })
            };
            let month = rng.random_range(1..=12);
            let day = rng.random_range(1..=28);
            ClassifiedDoc {
                doc_id: format!("r{i:05}"),
                published_on: NaiveDate::from_ymd_opt(rng.random_range(2017..=2019), month, day).unwrap(),
                region,
                label: if rng.random_bool(0.65) { Label::Disease } else { Label::Intervention },
            }
        })
        .collect()
}

/// Random daily case rows per district for the given year-month span.
pub fn regional_cases(districts: &[&str], year: i32, months: std::ops::RangeInclusive<u32>, rng_seed: u64) -> Vec<CaseRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut out = Vec::new();
    for month in months {
        for &district in districts {
            let division = crate::region::division_of(district).unwrap_or(Division::Dhaka);
            for day in [1, 15] {
                out.push(CaseRecord {
                    date: NaiveDate::from_ymd_opt(year, month, day).unwrap(),
                    region: RegionRef { division, district: district.to_string(), thana: None },
                    cases: rng.random_range(0..200),
                    source: CaseSource::Fixture,
                });
            }
        }
    }
    out
}

/// Districts the gap fixture gives many cases and almost no intervention news.
pub const GAP_DISTRICTS: [&str; 10] = [
    "Bagerhat",
    "Bandarban",
    "Chapainawabganj",
    "Feni",
    "Joypurhat",
    "Lakshmipur",
    "Munshiganj",
    "Natore",
    "Netrokona",
    "Rangamati",
];

const HUB_DISTRICTS: [&str; 6] = ["Dhaka", "Chattogram", "Sylhet", "Rajshahi", "Khulna", "Barishal"];

fn doc_run(out: &mut Vec<ClassifiedDoc>, region: &RegionRef, date: NaiveDate, label: Label, n: u64) {
    for _ in 0..n {
        let id = format!("f{:06}", out.len());
        out.push(ClassifiedDoc { doc_id: id, published_on: date, region: Some(region.clone()), label });
    }
}

/// District-level month (August 2019) in which every district reports news
/// in proportion to its cases except [`GAP_DISTRICTS`], which have heavy
/// case loads and a single intervention report each.
pub fn gap_fixture() -> (Vec<ClassifiedDoc>, Vec<CaseRecord>) {
    let date = NaiveDate::from_ymd_opt(2019, 8, 10).unwrap();
    let (mut docs, mut cases) = (Vec::new(), Vec::new());
    for (district, division) in DISTRICTS {
        let region = RegionRef { division, district: district.to_string(), thana: None };
        let (c, d, i) = if GAP_DISTRICTS.contains(&district) {
            (300, 12, 1)
        } else if HUB_DISTRICTS.contains(&district) {
            (2000, 500, 400)
        } else {
            (50, 12, 10)
        };
        doc_run(&mut docs, &region, date, Label::Disease, d);
        doc_run(&mut docs, &region, date, Label::Intervention, i);
        cases.push(CaseRecord { date, region, cases: c, source: CaseSource::Fixture });
    }
    (docs, cases)
}

/// Thana-level Dhaka month where the listed north-corporation thanas carry
/// twice the intervention news and the south-corporation thanas twice the
/// cases of their counterparts.
pub fn citycorp_fixture(north: &[&str], south: &[&str]) -> (Vec<ClassifiedDoc>, Vec<CaseRecord>) {
    let date = NaiveDate::from_ymd_opt(2019, 8, 10).unwrap();
    let (mut docs, mut cases) = (Vec::new(), Vec::new());
    for (thanas, (d, i, c)) in [(north, (6, 4, 20)), (south, (3, 2, 40))] {
        for &t in thanas {
            let region = RegionRef { division: Division::Dhaka, district: "Dhaka".into(), thana: Some(t.to_string()) };
            doc_run(&mut docs, &region, date, Label::Disease, d);
            doc_run(&mut docs, &region, date, Label::Intervention, i);
            cases.push(CaseRecord { date, region, cases: c, source: CaseSource::Fixture });
        }
    }
    (docs, cases)
}

const FILLER: [&str; 8] = ["খবর", "শহর", "এলাকা", "সরকার", "বাসিন্দা", "সপ্তাহ", "বৃষ্টি", "রাস্তা"];

/// Raw news records for a demo data directory: each names one gazetteer
/// place in its title and draws its body from one class's lexicon keywords
/// plus filler. Returns the records with the class each was written for.
pub fn demo_records(n: usize, rng_seed: u64) -> Vec<(NewsRecord, Label)> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let gazetteer = Gazetteer::standard();
    let places: Vec<String> = gazetteer.entries().iter().map(|e| e.aliases[0].join(" ")).collect();
    let lex = KeywordLexicon::standard();
    let words: [Vec<String>; 2] = [
        lex.disease_keywords().into_iter().collect(),
        lex.intervention_keywords().into_iter().collect(),
    ];
    (0..n)
        .map(|i| {
            let label = if rng.random_bool(0.65) { Label::Disease } else { Label::Intervention };
            let own = &words[label.index()];
            let place = places.choose(&mut rng).unwrap();
            let mut body = Vec::new();
            for _ in 0..rng.random_range(6..=16) {
                let w = if rng.random_bool(0.6) { own.choose(&mut rng).unwrap().as_str() } else { FILLER.choose(&mut rng).unwrap() };
                body.push(w);
            }
            let date = NaiveDate::from_ymd_opt(rng.random_range(2018..=2019), rng.random_range(1..=12), rng.random_range(1..=28)).unwrap();
            let record = NewsRecord {
                id: format!("n{i:05}"),
                url: format!("https://news.example/{i}"),
                source_domain: "news.example".into(),
                published_on: date,
                title: format!("{place} {}", own.choose(&mut rng).unwrap()),
                body: body.join(" "),
                region: None,
            };
            (record, label)
        })
        .collect()
}

/// Builds a populated data directory at `root` by running the pipeline on
/// [`demo_records`]: ingest, normalize and geotag, queue by baseline score,
/// label up to `labeled` of the queued documents with scripted votes, train a
/// naive Bayes model on them and predict the rest, and load random cases.
pub fn demo_workspace(root: &std::path::Path, n: usize, labeled: usize, rng_seed: u64) -> crate::Result<Workspace> {
    let ws = Workspace::init(root)?;
    let config = ws.config()?;
    let gazetteer = ws.gazetteer()?;
    let stopwords = ws.stopwords()?;
    let normalizer = config.normalizer();

    let records = demo_records(n, rng_seed);
    let truth: BTreeMap<String, Label> = records.iter().map(|(r, l)| (r.id.clone(), *l)).collect();
    let mut store = CorpusStore::new();
    for (r, _) in records {
        store.insert(r, &config.corpus.range(), Some(&gazetteer)).map_err(|e| crate::Error::Invalid(e.to_string()))?;
    }
    let tokens: Vec<TokenizedDoc> = store.records().map(|r| normalizer.normalize(r, &stopwords)).collect();
    let geotags: Vec<GeotagRow> =
        store.records().map(|r| GeotagRow { doc_id: r.id.clone(), region: geotag(r, &gazetteer) }).collect();
    ws.save_corpus(&store)?;
    ws.save_tokens(&tokens)?;
    ws.save_geotags(&geotags)?;

    let mut session = ws.session()?;
    session.enqueue_for_review(&tokens)?;
    // alternate between the classes so the training set has both
    let mut by_class: [Vec<String>; 2] = Default::default();
    for q in session.pending_docs() {
        by_class[truth[&q.doc_id].index()].push(q.doc_id.clone());
    }
    let [mut d, mut iv] = by_class.map(|c| c.into_iter());
    let mut queued = Vec::new();
    while queued.len() < labeled {
        let before = queued.len();
        queued.extend(d.next());
        if queued.len() < labeled {
            queued.extend(iv.next());
        }
        if queued.len() == before {
            break;
        }
    }
    for (k, id) in queued.iter().enumerate() {
        let t = truth[id];
        let votes = if k % 4 == 0 { [t, t.other(), t] } else { [t; 3] };
        session.record_votes(id, &votes)?;
    }
    ws.save_session(&session)?;

    let feats = featurize(&tokens, session.lexicon())?;
    let train: Vec<LabeledVector> = feats
        .vectors
        .iter()
        .filter_map(|x| session.labeled_doc(&x.doc_id).map(|d| LabeledVector { x: x.clone(), y: d.label }))
        .collect();
    let spec = config.classify.spec(ModelKind::Mnb);
    let model = ClassifierModel::new(&feats.space, spec.train(&train, feats.space.len())?);
    ws.save_model(&spec.name(), &model)?;
    let predictions: Vec<Prediction> = feats
        .vectors
        .iter()
        .filter(|x| session.labeled_doc(&x.doc_id).is_none())
        .map(|x| Prediction { doc_id: x.doc_id.clone(), label: model.predict(x), model: spec.name() })
        .collect();
    ws.save_predictions(&predictions)?;

    let districts: Vec<&str> = DISTRICTS.iter().map(|(d, _)| *d).collect();
    let mut cases = regional_cases(&districts, 2018, 1..=12, rng_seed + 1);
    cases.extend(regional_cases(&districts, 2019, 1..=12, rng_seed + 2));
    ws.save_cases(&cases)?;
    Ok(ws)
}
