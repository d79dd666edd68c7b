use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, Write};

use anyhow::{bail, Context, Result};
use dengue_core::analytics::{ingest_cases, PeriodRange, YearMonth};
use dengue_core::classify::{evaluate, featurize, repeated_splits, LabeledVector, ModelSpec};
use dengue_core::corpus::{geotag, Stopwords};
use dengue_core::hitl::CandidateDecision;
use dengue_core::reports::{self, AggregateParams, CityCorpParams, CorrelationParams, GapParams, Snapshot};
use dengue_core::topics::{self, LdaConfigFile};
use dengue_core::workspace::{GeotagRow, Prediction};
use dengue_core::{ClassifierModel, CoiLink, Label, ModelKind, TokenizedDoc, Workspace};
use dengue_service::ApiConfig;
use serde::Serialize;

use crate::{AnalyticsCmd, ClassifyCmd, Cli, Command, HitlCmd, TopicsCmd};

struct Ctx {
    ws: Workspace,
    pretty: bool,
}

impl Ctx {
    fn print<T: Serialize>(&self, value: &T) -> Result<()> {
        let text = if self.pretty { serde_json::to_string_pretty(value)? } else { serde_json::to_string(value)? };
        emit(&text)
    }

    fn snapshot(&self) -> Result<Snapshot> {
        Ok(Snapshot::load(&self.ws)?)
    }

    /// Stored tokens, failing when `normalize` has not run yet.
    fn tokens(&self) -> Result<Vec<TokenizedDoc>> {
        let tokens = self.ws.tokens()?;
        if tokens.is_empty() {
            bail!("no normalized documents; run `normalize` first");
        }
        Ok(tokens)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if let Command::Init = cli.command {
        let ws = Workspace::init(&cli.data)?;
        eprintln!("initialized {}", ws.root().display());
        return Ok(());
    }
    if let Command::Serve(args) = cli.command {
        let mut config = match &args.config {
            Some(path) => ApiConfig::from_file(path)?.with_env(),
            None => ApiConfig { data_dir: cli.data.clone(), ..ApiConfig::default() },
        };
        if let Some(bind) = args.bind {
            config.bind = bind;
        }
        config.read_only |= args.read_only;
        let rt = tokio::runtime::Runtime::new()?;
        return Ok(rt.block_on(dengue_service::serve(config, dengue_service::shutdown_signal()))?);
    }

    let ctx = Ctx { ws: Workspace::open(&cli.data)?, pretty: cli.pretty };
    match cli.command {
        Command::Init | Command::Serve(_) => unreachable!("handled above"),
        Command::Ingest { file } => ingest(&ctx, &file),
        Command::Normalize { stopwords } => normalize(&ctx, stopwords.as_deref()),
        Command::Stats { year, json } => {
            let rows = reports::stats_report(&ctx.snapshot()?, year);
            if json {
                return ctx.print(&rows);
            }
            let mut table = format!("{:<6} {:>12} {:>10} {:>8}", "year", "crawled", "dengue", "share");
            for r in rows {
                table += &format!("\n{:<6} {:>12} {:>10} {:>8}", r.year, r.total_crawled, r.dengue_related, r.rendered);
            }
            emit(&table)
        }
        Command::Status => ctx.print(&reports::health(&ctx.snapshot()?)),
        Command::Topics(cmd) => topics_cmd(&ctx, cmd),
        Command::Hitl(cmd) => hitl_cmd(&ctx, cmd),
        Command::Classify(cmd) => classify_cmd(&ctx, cmd),
        Command::Analytics(cmd) => analytics_cmd(&ctx, cmd),
    }
}

fn ingest(ctx: &Ctx, file: &std::path::Path) -> Result<()> {
    let config = ctx.ws.config()?;
    let gazetteer = ctx.ws.gazetteer()?;
    let mut store = ctx.ws.corpus()?;
    let reader = BufReader::new(fs::File::open(file).with_context(|| format!("opening {}", file.display()))?);
    let report = store.ingest_reader(reader, &config.corpus.range(), Some(&gazetteer))?;
    ctx.ws.save_corpus(&store)?;
    eprintln!("accepted {}, rejected {}, corpus now {}", report.accepted, report.rejects.len(), store.len());
    ctx.print(&report)
}

#[derive(Serialize)]
struct NormalizeSummary {
    documents: usize,
    tokens: usize,
    geotagged: usize,
    ungeotagged: usize,
}

fn normalize(ctx: &Ctx, stopwords: Option<&std::path::Path>) -> Result<()> {
    if let Some(path) = stopwords {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        // validate before replacing the stored list
        Stopwords::from_reader(text.as_bytes(), &ctx.ws.config()?.normalizer())?;
        fs::write(ctx.ws.path(Workspace::STOPWORDS), text)?;
    }
    let normalizer = ctx.ws.config()?.normalizer();
    let stop = ctx.ws.stopwords()?;
    let gazetteer = ctx.ws.gazetteer()?;
    let store = ctx.ws.corpus()?;
    let tokens: Vec<TokenizedDoc> = store.records().map(|r| normalizer.normalize(r, &stop)).collect();
    let geotags: Vec<GeotagRow> =
        store.records().map(|r| GeotagRow { doc_id: r.id.clone(), region: geotag(r, &gazetteer) }).collect();
    ctx.ws.save_tokens(&tokens)?;
    ctx.ws.save_geotags(&geotags)?;
    let geotagged = geotags.iter().filter(|g| g.region.is_some()).count();
    ctx.print(&NormalizeSummary {
        documents: tokens.len(),
        tokens: tokens.iter().map(|t| t.len()).sum(),
        geotagged,
        ungeotagged: geotags.len() - geotagged,
    })
}

#[derive(Serialize)]
struct FitSummary {
    topics: usize,
    documents: usize,
    vocabulary: usize,
    tokens: u64,
    log_likelihood: f64,
    warnings: Vec<String>,
}

fn topics_cmd(ctx: &Ctx, cmd: TopicsCmd) -> Result<()> {
    match cmd {
        TopicsCmd::Fit { config } => {
            let lda = match config {
                Some(path) => {
                    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    toml::from_str::<LdaConfigFile>(&text).with_context(|| format!("parsing {}", path.display()))?.resolve()
                }
                None => ctx.ws.config()?.lda(),
            };
            let session = ctx.ws.session()?;
            let seeds = session.lexicon().seed_sets();
            let model = topics::fit(&ctx.tokens()?, &seeds, &lda)?;
            ctx.ws.save_topic_model(&model)?;
            ctx.print(&FitSummary {
                topics: model.num_topics(),
                documents: model.doc_ids().len(),
                vocabulary: model.vocab().len(),
                tokens: model.total_tokens(),
                log_likelihood: model.log_likelihood(),
                warnings: model.warnings().to_vec(),
            })
        }
        TopicsCmd::TopWords { topic, n } => {
            let model = ctx.ws.topic_model()?;
            ctx.print(&topics::top_words(&model, topic, n)?)
        }
        TopicsCmd::Propose { n } => {
            let model = ctx.ws.topic_model()?;
            let mut session = ctx.ws.session()?;
            let candidates = topics::propose_candidates(&model, session.lexicon(), n);
            session.set_candidates(candidates.clone())?;
            ctx.ws.save_session(&session)?;
            ctx.print(&candidates)
        }
    }
}

#[derive(Serialize)]
struct ScoreSummary {
    scored: usize,
    triggered: usize,
    queued: usize,
    pending: usize,
}

fn hitl_cmd(ctx: &Ctx, cmd: HitlCmd) -> Result<()> {
    match cmd {
        HitlCmd::Score => {
            let tokens = ctx.tokens()?;
            let mut session = ctx.ws.session()?;
            let scores: Vec<_> = {
                let scorer = session.scorer()?;
                tokens.iter().map(|d| scorer.score(d)).collect()
            };
            let triggered = scores.iter().filter(|s| !s.triggered.is_empty()).count();
            let queued = session.enqueue_scores(&scores);
            ctx.ws.save_session(&session)?;
            ctx.print(&ScoreSummary { scored: scores.len(), triggered, queued, pending: session.pending_docs().len() })
        }
        HitlCmd::Queue { limit, offset } => ctx.print(&reports::queue_report(&ctx.snapshot()?, limit, offset)),
        HitlCmd::Vote { doc_id, votes } => {
            let votes = votes.iter().map(|v| v.parse::<Label>()).collect::<Result<Vec<_>, _>>()?;
            let mut session = ctx.ws.session()?;
            let doc = session.record_votes(&doc_id, &votes)?;
            ctx.ws.save_session(&session)?;
            ctx.print(&doc)
        }
        HitlCmd::Review { accept, reject, decisions } => {
            let mut session = ctx.ws.session()?;
            let decisions: BTreeMap<String, CandidateDecision> = match decisions {
                Some(path) => serde_json::from_str(&fs::read_to_string(&path)?)
                    .with_context(|| format!("parsing {}", path.display()))?,
                None if accept.is_empty() && reject.is_empty() => {
                    return ctx.print(&session.pending_candidates());
                }
                None => {
                    let mut d = BTreeMap::new();
                    for a in accept {
                        let (word, set) = match a.split_once('=') {
                            Some((w, s)) => (w.to_string(), Some(parse_link(s)?)),
                            None => (a, None),
                        };
                        d.insert(word, CandidateDecision::Accept { set });
                    }
                    for r in reject {
                        d.insert(r, CandidateDecision::Reject);
                    }
                    d
                }
            };
            let outcome = session.review_candidates(&decisions)?;
            ctx.ws.save_session(&session)?;
            if outcome.terminated {
                eprintln!("no candidates accepted; keyword expansion has terminated");
            }
            ctx.print(&outcome)
        }
        HitlCmd::Lexicon { version } => ctx.print(&reports::lexicon_report(&ctx.snapshot()?, version)?),
        HitlCmd::Export { out } => {
            let export = ctx.ws.session()?.export_labeled()?;
            let mut lines = String::new();
            for r in &export.records {
                lines.push_str(&serde_json::to_string(r)?);
                lines.push('\n');
            }
            match out {
                Some(path) => {
                    fs::write(&path, lines).with_context(|| format!("writing {}", path.display()))?;
                    ctx.print(&export.counts)
                }
                None if lines.is_empty() => Ok(()),
                None => emit(lines.trim_end()),
            }
        }
    }
}

fn parse_link(s: &str) -> Result<CoiLink> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .with_context(|| format!("unknown seed set `{s}`"))
}

/// Feature vectors of every human-labeled document.
fn labeled_vectors(ctx: &Ctx) -> Result<(dengue_core::FeatureSpace, Vec<LabeledVector>)> {
    let session = ctx.ws.session()?;
    let tokens = ctx.tokens()?;
    let feats = featurize(&tokens, session.lexicon())?;
    let data: Vec<LabeledVector> = feats
        .vectors
        .into_iter()
        .filter_map(|x| session.labeled_doc(&x.doc_id).map(|d| LabeledVector { y: d.label, x }))
        .collect();
    if data.is_empty() {
        bail!("no labeled documents; vote on the queue first");
    }
    Ok((feats.space, data))
}

#[derive(Serialize)]
struct FeaturizeSummary {
    dimension: usize,
    feature_space_hash: String,
    documents: usize,
    zero_vectors: usize,
}

#[derive(Serialize)]
struct PredictSummary {
    model: String,
    predicted: usize,
    counts: BTreeMap<Label, usize>,
}

fn classify_cmd(ctx: &Ctx, cmd: ClassifyCmd) -> Result<()> {
    let config = ctx.ws.config()?;
    match cmd {
        ClassifyCmd::Featurize => {
            let feats = featurize(&ctx.tokens()?, ctx.ws.session()?.lexicon())?;
            ctx.print(&FeaturizeSummary {
                dimension: feats.space.len(),
                feature_space_hash: feats.space.hash(),
                documents: feats.vectors.len(),
                zero_vectors: feats.zero_docs.len(),
            })
        }
        ClassifyCmd::Train { kind } => {
            let (space, data) = labeled_vectors(ctx)?;
            let spec = config.classify.spec(kind);
            let model = ClassifierModel::new(&space, spec.train(&data, space.len())?);
            ctx.ws.save_model(&spec.name(), &model)?;
            eprintln!("saved {} trained on {} documents", spec.name(), data.len());
            Ok(())
        }
        ClassifyCmd::Eval { split_seed, seeds } => {
            let (space, data) = labeled_vectors(ctx)?;
            let specs: Vec<ModelSpec> = ModelKind::ALL.iter().map(|k| config.classify.spec(*k)).collect();
            if !seeds.is_empty() {
                return ctx.print(&repeated_splits(&data, space.len(), &specs, config.classify.train_ratio, &seeds)?);
            }
            let mut split = config.classify.split();
            if let Some(s) = split_seed {
                split.split_seed = s;
            }
            ctx.print(&evaluate(&data, space.len(), &specs, split)?)
        }
        ClassifyCmd::Predict { slice, model } => {
            let range = parse_slice(&slice)?;
            let clf = ctx.ws.model(&model)?;
            let session = ctx.ws.session()?;
            let space = dengue_core::FeatureSpace::from_lexicon(session.lexicon())?;
            clf.ensure_space(&space)?;
            let store = ctx.ws.corpus()?;
            let mut predictions: BTreeMap<String, Prediction> =
                ctx.ws.predictions()?.into_iter().map(|p| (p.doc_id.clone(), p)).collect();
            let mut counts = BTreeMap::from([(Label::Disease, 0), (Label::Intervention, 0)]);
            let mut predicted = 0;
            for doc in ctx.tokens()? {
                let Some(record) = store.get(&doc.doc_id) else { continue };
                if session.labeled_doc(&doc.doc_id).is_some() || !range.contains(YearMonth::of(record.published_on)) {
                    continue;
                }
                let label = clf.predict(&space.featurize(&doc));
                *counts.entry(label).or_default() += 1;
                predicted += 1;
                predictions.insert(doc.doc_id.clone(), Prediction { doc_id: doc.doc_id, label, model: model.clone() });
            }
            let rows: Vec<Prediction> = predictions.into_values().collect();
            ctx.ws.save_predictions(&rows)?;
            ctx.print(&PredictSummary { model, predicted, counts })
        }
    }
}

fn parse_slice(s: &str) -> Result<PeriodRange> {
    if s == "all" {
        return Ok(PeriodRange::default());
    }
    let Some((from, to)) = s.split_once("..") else { bail!("slice must be `all` or FROM..TO, got `{s}`") };
    let parse = |p: &str| -> Result<Option<YearMonth>> { Ok(if p.is_empty() { None } else { Some(p.parse()?) }) };
    Ok(PeriodRange::new(parse(from)?, parse(to)?)?)
}

fn analytics_cmd(ctx: &Ctx, cmd: AnalyticsCmd) -> Result<()> {
    match cmd {
        AnalyticsCmd::Aggregate(a) => {
            let p = AggregateParams {
                level: Some(a.level),
                region: a.region,
                from: a.from,
                to: a.to,
                period: a.period,
                limit: a.limit,
                offset: a.offset,
            };
            ctx.print(&reports::aggregate_report(&ctx.snapshot()?, &p)?)
        }
        AnalyticsCmd::Correlate { region, lag, kind, from, to } => {
            let p = CorrelationParams { region, lag: Some(lag), kind, from, to };
            ctx.print(&reports::correlation_report(&ctx.snapshot()?, &p)?)
        }
        AnalyticsCmd::Gaps { from, to, threshold } => {
            ctx.print(&reports::gap_report(&ctx.snapshot()?, &GapParams { from, to, threshold })?)
        }
        AnalyticsCmd::Citycorp { from, to } => {
            ctx.print(&reports::citycorp_report(&ctx.snapshot()?, &CityCorpParams { from, to })?)
        }
        AnalyticsCmd::IngestCases { file } => {
            let existing = ctx.ws.cases()?;
            let reader = fs::File::open(&file).with_context(|| format!("opening {}", file.display()))?;
            let report = ingest_cases(reader, &ctx.ws.gazetteer()?, &existing)?;
            let mut all = existing;
            all.extend(report.accepted.iter().cloned());
            ctx.ws.save_cases(&all)?;
            eprintln!("accepted {}, rejected {}", report.accepted.len(), report.rejects.len());
            ctx.print(&report.rejects)
        }
    }
}

/// Writes a line to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}
