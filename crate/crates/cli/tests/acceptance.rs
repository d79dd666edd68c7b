//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` are expected to fail for reasons
//! recorded in the project's decision notes; the run fails if any other
//! criterion fails, or if a known failure starts passing.

use std::collections::{BTreeMap, BTreeSet};
use std::process::Command;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::Request;
use dengue_core::analytics::{
    aggregate, compare_city_corporations, correlate, gap_rank, AggregateQuery, CityCorpMapping, Corporation, Level,
    PeriodRange, YearMonth, DEFAULT_GAP_THRESHOLD,
};
use dengue_core::classify::{
    evaluate, featurize, objective, subgradient, train_knn, train_mnb, ConfusionMatrix, FeatureVector, LabeledVector,
    LinearScorer, ModelEval, ModelSpec, SplitConfig, SvmHyper, SvmMode,
};
use dengue_core::corpus::CorpusStats;
use dengue_core::hitl::{cosine, jaccard, BaselineScore, BaselineScorer, CandidateDecision, Combiner, HitlConfig, HitlSession, DEFAULT_THRESHOLD};
use dengue_core::synth::{self, PlantedSpec, PLANTED_LINKS};
use dengue_core::topics::{self, top_words};
use dengue_core::{defaults, Gazetteer, KeywordLexicon, Label, LdaConfig, TokenizedDoc};
use dengue_service::{router, ApiConfig, AppState};
use http_body_util::BodyExt;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

/// Criteria that fail by design; see the decision notes for each.
const KNOWN_FAILURES: &[&str] = &["corpus-stats-table"];

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

// ---------------------------------------------------------------------------

fn corpus_stats_table() -> Check {
    let start = Instant::now();
    let rows = [(2017, 48_780u64, 950u64, "0.19%"), (2018, 1_114_701, 2_262, "0.20%"), (2019, 1_754_361, 35_796, "2.04%")];
    let mut bad = Vec::new();
    let mut seen = Vec::new();
    for (year, total, dengue, want) in rows {
        let s = CorpusStats::from_counts(year, total, dengue);
        seen.push(format!("{year}={}", s.rendered));
        if s.rendered != want {
            bad.push(format!("{year}: {dengue}/{total} renders {} but the reference table says {want}", s.rendered));
        }
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    if bad.is_empty() {
        Ok(seen.join(" "))
    } else {
        Err(format!("{} (others: {})", bad.join("; "), seen.join(" ")))
    }
}

// ---------------------------------------------------------------------------

const ALPHABET: [&str; 12] = ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "l"];

fn members(mask: u32) -> BTreeSet<&'static str> {
    ALPHABET.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, t)| *t).collect()
}

/// (cosine, jaccard, mean > 1/2) from 0/1 vectors over the union vocabulary.
fn set_oracle(a: u32, b: u32) -> (f64, f64, bool) {
    let union: Vec<usize> = (0..12).filter(|i| (a | b) >> i & 1 == 1).collect();
    let va: Vec<u64> = union.iter().map(|i| (a >> i & 1) as u64).collect();
    let vb: Vec<u64> = union.iter().map(|i| (b >> i & 1) as u64).collect();
    let dot: u64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
    let (na, nb): (u64, u64) = (va.iter().sum(), vb.iter().sum());
    let u = union.len() as u64;
    let cos = if na == 0 || nb == 0 { 0.0 } else { dot as f64 / ((na * nb) as f64).sqrt() };
    let jac = if u == 0 { 0.0 } else { dot as f64 / u as f64 };
    let over = na > 0 && nb > 0 && (dot as u128 * u as u128).pow(2) > ((u - dot) as u128).pow(2) * (na * nb) as u128;
    (cos, jac, over)
}

fn similarity_oracle() -> Check {
    let start = Instant::now();
    let full: u32 = (1 << 12) - 1;
    let docs: Vec<BTreeSet<&str>> = (0..=full).map(members).collect();
    let mut checked = 0u64;
    for b in 1..full {
        let keys = &docs[b as usize];
        let to_strings = |s: &BTreeSet<&str>| s.iter().map(|t| t.to_string()).collect::<BTreeSet<String>>();
        let scorer =
            BaselineScorer::from_sets(to_strings(keys), to_strings(&docs[(full & !b) as usize]), Combiner::Mean, DEFAULT_THRESHOLD)
                .map_err(|e| e.to_string())?;
        for a in 0..=full {
            if (a | b).count_ones() > 10 {
                continue;
            }
            checked += 1;
            let (c, j, over) = set_oracle(a, b);
            let doc = &docs[a as usize];
            let s = scorer.score_set("x", doc);
            let ok = jaccard(doc, keys) == j
                && (cosine(doc, keys) - c).abs() <= 1e-12
                && s.jaccard_disease == j
                && (s.cosine_disease - c).abs() <= 1e-12
                && s.triggered.contains(&Label::Disease) == over;
            ensure(ok, || format!("mismatch at a={a:#x} b={b:#x}"))?;
        }
    }
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!("{checked} pairs in {:.1?}", start.elapsed()))
}

fn threshold_semantics() -> Check {
    let lexicon = KeywordLexicon::standard();
    let mut session = HitlSession::new(lexicon, HitlConfig::default()).map_err(|e| e.to_string())?;
    let at = BaselineScore::from_components("at", (0.5, 0.5), (0.0, 0.0), Combiner::Mean, DEFAULT_THRESHOLD);
    ensure(at.ensemble_disease == 0.5, || "constructed score is not exactly 0.5".into())?;
    ensure(session.enqueue_scores(&[at]) == 0, || "ensemble of exactly 0.5 was queued".into())?;
    let over = BaselineScore::from_components("over", (0.5 + 1e-9, 0.5 + 1e-9), (0.0, 0.0), Combiner::Mean, DEFAULT_THRESHOLD);
    ensure(session.enqueue_scores(&[over]) == 1, || "ensemble of 0.5 + 1e-9 was not queued".into())?;
    Ok("0.5 not queued, 0.5+1e-9 queued".into())
}

// ---------------------------------------------------------------------------

fn planted_lda() -> LdaConfig {
    LdaConfig { boost: 100.0, rng_seed: 42, ..LdaConfig::with_topics(2) }
}

fn lda_recovery() -> Check {
    let start = Instant::now();
    let c = synth::planted_corpus(&PlantedSpec::default());
    ensure(c.docs.len() == 200 && c.vocab.iter().all(|v| v.len() == 50), || "planted corpus has the wrong shape".into())?;
    let m = topics::fit(&c.docs, &c.seed_sets(), &planted_lda()).map_err(|e| e.to_string())?;
    let by_id: BTreeMap<&str, &TokenizedDoc> = c.docs.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    let (mut hit, mut all) = (0usize, 0usize);
    for (d, id) in m.doc_ids().iter().enumerate() {
        for (tok, &z) in by_id[id.as_str()].tokens.iter().zip(&m.assignments()[d]) {
            all += 1;
            hit += (c.topic_of_word(tok) == Some(z as usize)) as usize;
        }
    }
    let purity = hit as f64 / all as f64;
    ensure(purity >= 0.95, || format!("purity {purity:.4} < 0.95"))?;
    for t in 0..2 {
        let top: Vec<String> = top_words(&m, t, 10).map_err(|e| e.to_string())?.into_iter().map(|(w, _)| w).collect();
        for w in c.correlates(t) {
            ensure(top.contains(w), || format!("{w} missing from top-10 of topic {t}"))?;
        }
    }
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("purity {purity:.4}, correlates in top-10, {:.1?}", start.elapsed()))
}

fn hitl_end_to_end() -> Check {
    let c = synth::planted_corpus(&PlantedSpec::default());
    let lexicon = KeywordLexicon::from_seeds(&c.seed_sets()).map_err(|e| e.to_string())?;
    let mut session = HitlSession::new(lexicon, HitlConfig::default()).map_err(|e| e.to_string())?;
    let mut rounds = 0;
    while !session.is_terminated() {
        rounds += 1;
        ensure(rounds <= 3, || "no termination within 3 iterations".into())?;
        session
            .expansion_round(&c.docs, &planted_lda(), 10, |cands| {
                let mut d = BTreeMap::new();
                for (link, words) in cands {
                    let t = PLANTED_LINKS.iter().position(|l| l == link).unwrap();
                    for w in words {
                        let accept = c.correlates(t).contains(w);
                        d.insert(w.clone(), if accept { CandidateDecision::Accept { set: None } } else { CandidateDecision::Reject });
                    }
                }
                d
            })
            .map_err(|e| e.to_string())?;
    }
    let expected: BTreeSet<String> =
        (0..2).flat_map(|t| std::iter::once(c.seed(t).to_string()).chain(c.correlates(t).iter().cloned())).collect();
    ensure(session.lexicon().union() == expected, || format!("final lexicon {:?}", session.lexicon().union()))?;

    session.enqueue_for_review(&c.docs).map_err(|e| e.to_string())?;
    let pending: Vec<String> = session.pending_docs().iter().map(|q| q.doc_id.clone()).collect();
    let mut scripted = BTreeMap::from([(Label::Disease, 0usize), (Label::Intervention, 0)]);
    for (n, id) in pending.iter().enumerate() {
        let d: usize = id[1..].parse().map_err(|_| format!("unexpected doc id {id}"))?;
        let truth = if c.doc_topic[d] == 0 { Label::Disease } else { Label::Intervention };
        let votes = if n % 3 == 0 { [truth, truth.other(), truth] } else { [truth; 3] };
        session.record_votes(id, &votes).map_err(|e| e.to_string())?;
        *scripted.get_mut(&truth).unwrap() += 1;
    }
    let export = session.export_labeled().map_err(|e| e.to_string())?;
    ensure(export.counts == scripted, || format!("exported {:?}, scripted {scripted:?}", export.counts))?;
    Ok(format!("{rounds} iterations, lexicon {} words, exported {:?}", expected.len(), export.counts))
}

// ---------------------------------------------------------------------------

fn exact_mnb_posterior(train: &[(Vec<u32>, Label)], x: &[u32], alpha: &BigRational) -> [f64; 2] {
    let dim = x.len();
    let joint: Vec<BigRational> = Label::ALL
        .iter()
        .map(|&label| {
            let rows: Vec<&Vec<u32>> = train.iter().filter(|(_, y)| *y == label).map(|(v, _)| v).collect();
            let mut p = BigRational::new(BigInt::from(rows.len()), BigInt::from(train.len()));
            let col = |j: usize| rows.iter().map(|r| r[j] as i64).sum::<i64>();
            let denom = BigRational::from_integer(BigInt::from((0..dim).map(col).sum::<i64>())) + alpha * BigInt::from(dim);
            for j in 0..dim {
                let theta = (BigRational::from_integer(BigInt::from(col(j))) + alpha) / &denom;
                for _ in 0..x[j] {
                    p *= &theta;
                }
            }
            p
        })
        .collect();
    let z = joint.iter().fold(BigRational::zero(), |a, b| a + b);
    [(&joint[0] / &z).to_f64().unwrap(), (&joint[1] / &z).to_f64().unwrap()]
}

fn lv(id: String, dense: &[u32], y: Label) -> LabeledVector {
    LabeledVector { x: FeatureVector::from_dense(id, dense), y }
}

fn mnb_oracle() -> Result<usize, String> {
    use Label::{Disease as D, Intervention as I};
    let train = vec![(vec![2, 1, 0], D), (vec![1, 0, 1], D), (vec![0, 1, 3], I), (vec![0, 2, 1], I)];
    let exs: Vec<LabeledVector> = train.iter().enumerate().map(|(i, (v, y))| lv(format!("d{i}"), v, *y)).collect();
    let mut n = 0;
    for (num, den) in [(1, 1), (1, 2), (3, 10)] {
        let m = train_mnb(&exs, 3, num as f64 / den as f64).map_err(|e| e.to_string())?;
        let alpha = BigRational::new(BigInt::from(num), BigInt::from(den));
        for probe in [[1u32, 0, 0], [0, 1, 1], [2, 2, 2], [0, 0, 0], [3, 0, 1]] {
            let got = m.posterior(&FeatureVector::from_dense("p", &probe));
            let want = exact_mnb_posterior(&train, &probe, &alpha);
            ensure((0..2).all(|c| (got[c] - want[c]).abs() <= 1e-12), || format!("MNB {probe:?}: {got:?} vs {want:?}"))?;
            n += 1;
        }
    }
    Ok(n)
}

/// Brute-force KNN with exact integer ranking: cos(q, a) > cos(q, b) iff
/// (q.a)^2 |b|^2 > (q.b)^2 |a|^2 for count vectors.
fn brute_knn(train: &[(String, Vec<u32>, Label)], q: &[u32], k: usize) -> Label {
    let dot = |a: &[u32], b: &[u32]| a.iter().zip(b).map(|(x, y)| (*x as u128) * (*y as u128)).sum::<u128>();
    let disease = train.iter().filter(|t| t.2 == Label::Disease).count();
    let majority = if train.len() - disease > disease { Label::Intervention } else { Label::Disease };
    if q.iter().all(|v| *v == 0) {
        return majority;
    }
    let mut order: Vec<&(String, Vec<u32>, Label)> = train.iter().collect();
    order.sort_by(|a, b| {
        let (da, na) = (dot(q, &a.1), dot(&a.1, &a.1));
        let (db, nb) = (dot(q, &b.1), dot(&b.1, &b.1));
        // zero training vectors sit at distance 1, the same as orthogonal ones
        let key = |d: u128, n: u128, other_n: u128| if n == 0 { 0 } else { d * d * other_n.max(1) };
        let (ka, kb) = (key(da, na, nb), key(db, nb, na));
        let closer = match (na == 0, nb == 0) {
            (false, false) => kb.cmp(&ka),
            (true, true) => std::cmp::Ordering::Equal,
            (true, false) => if db == 0 { std::cmp::Ordering::Equal } else { std::cmp::Ordering::Greater },
            (false, true) => if da == 0 { std::cmp::Ordering::Equal } else { std::cmp::Ordering::Less },
        };
        closer.then_with(|| a.0.cmp(&b.0))
    });
    let d = order.iter().take(k).filter(|t| t.2 == Label::Disease).count();
    if 2 * d > k {
        Label::Disease
    } else {
        Label::Intervention
    }
}

fn knn_oracle() -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut n = 0;
    for size in [5usize, 20, 60, 200] {
        let dim = 6;
        let train: Vec<(String, Vec<u32>, Label)> = (0..size)
            .map(|i| {
                let y = if i % 3 == 0 { Label::Intervention } else { Label::Disease };
                let v: Vec<u32> = (0..dim).map(|j| if (j < 3) == (y == Label::Disease) { rng.random_range(0..4) } else { rng.random_range(0..2) }).collect();
                (format!("t{i:03}"), v, y)
            })
            .collect();
        let exs: Vec<LabeledVector> = train.iter().map(|(id, v, y)| lv(id.clone(), v, *y)).collect();
        for k in [1usize, 3, 5, 7].into_iter().filter(|k| *k <= size) {
            let m = train_knn(&exs, dim, k).map_err(|e| e.to_string())?;
            for _ in 0..50 {
                let q: Vec<u32> = (0..dim).map(|_| rng.random_range(0..3)).collect();
                let got = m.predict(&FeatureVector::from_dense("q", &q));
                let want = brute_knn(&train, &q, k);
                ensure(got == want, || format!("KNN n={size} k={k} q={q:?}: {got} vs {want}"))?;
                n += 1;
            }
        }
    }
    Ok(n)
}

fn svm_finite_differences() -> Result<usize, String> {
    use Label::{Disease as D, Intervention as I};
    let train = vec![
        lv("a".into(), &[2, 0, 1], D),
        lv("b".into(), &[1, 1, 0], D),
        lv("c".into(), &[0, 2, 1], I),
        lv("d".into(), &[0, 1, 3], I),
        lv("e".into(), &[3, 1, 0], D),
    ];
    let lambda = 0.05;
    let probes = [
        LinearScorer { weights: vec![0.13, -0.21, 0.07], bias: 0.03 },
        LinearScorer { weights: vec![0.41, -0.38, 0.02], bias: -0.11 },
        LinearScorer { weights: vec![-0.05, 0.02, 0.3], bias: 0.2 },
    ];
    let mut n = 0;
    for s in probes {
        let sign = |y: Label| if y == D { 1.0 } else { -1.0 };
        ensure(train.iter().all(|e| (sign(e.y) * s.score(&e.x) - 1.0).abs() > 1e-3), || "probe sits on a margin".into())?;
        let (gw, gb) = subgradient(&train, D, lambda, &s);
        for j in 0..=s.weights.len() {
            let bump = |delta: f64| {
                let mut p = s.clone();
                if j < p.weights.len() {
                    p.weights[j] += delta;
                } else {
                    p.bias += delta;
                }
                objective(&train, D, lambda, &p)
            };
            let h = 1e-6;
            let fd = (bump(h) - bump(-h)) / (2.0 * h);
            let an = if j < gw.len() { gw[j] } else { gb };
            let rel = (fd - an).abs() / an.abs().max(fd.abs()).max(1e-3);
            ensure(rel < 1e-4, || format!("SVM coordinate {j}: analytic {an} vs numeric {fd}"))?;
            n += 1;
        }
    }
    Ok(n)
}

fn confusion_example() -> Result<(), String> {
    let m = ModelEval::from_confusion("x", ConfusionMatrix([[50, 10], [5, 35]]));
    let (pd, rd) = (50.0 / 55.0, 50.0 / 60.0);
    let (pi, ri) = (35.0 / 45.0, 35.0 / 40.0);
    let (fd, fi) = (2.0 * pd * rd / (pd + rd), 2.0 * pi * ri / (pi + ri));
    let d = m.per_class[&Label::Disease];
    let i = m.per_class[&Label::Intervention];
    let ok = m.accuracy == 0.85
        && (d.precision, d.recall, d.f1) == (pd, rd, fd)
        && (i.precision, i.recall, i.f1) == (pi, ri, fi)
        && m.macro_f1 == (fd + fi) / 2.0;
    ensure(ok, || format!("confusion metrics differ: {m:?}"))
}

fn classifier_oracles() -> Check {
    let mnb = mnb_oracle()?;
    let knn = knn_oracle()?;
    let svm = svm_finite_differences()?;
    confusion_example()?;
    Ok(format!("MNB {mnb} probes, KNN {knn} queries, SVM {svm} coordinates, confusion exact"))
}

fn calibration() -> Check {
    let start = Instant::now();
    let lexicon = synth::expanded_lexicon(60);
    let spec = synth::KeywordCorpusSpec::default();
    let corpus = synth::keyword_corpus(&spec, &lexicon);
    let n_d = corpus.iter().filter(|(_, l)| *l == Label::Disease).count();
    ensure(corpus.len() == 1550 && n_d == 1045, || format!("corpus {} docs, {n_d} disease", corpus.len()))?;
    let docs: Vec<TokenizedDoc> = corpus.iter().map(|(d, _)| d.clone()).collect();
    let feats = featurize(&docs, &lexicon).map_err(|e| e.to_string())?;
    let data: Vec<LabeledVector> = feats.vectors.into_iter().zip(&corpus).map(|(x, (_, y))| LabeledVector { x, y: *y }).collect();
    let specs = [ModelSpec::Mnb { smoothing: 1.0 }, ModelSpec::Svm { hyper: SvmHyper::default(), mode: SvmMode::Ovr }];
    let report = evaluate(&data, feats.space.len(), &specs, SplitConfig { train_ratio: 0.7, split_seed: 42 }).map_err(|e| e.to_string())?;
    let f1 = |name: &str| report.model(name).map(|m| m.macro_f1).ok_or(format!("no {name} in report"));
    let (svm, mnb) = (f1("svm-ovr")?, f1("mnb")?);
    ensure(svm >= 0.85, || format!("SVM macro-F1 {svm:.4} < 0.85"))?;
    ensure(svm >= mnb - 0.05, || format!("SVM {svm:.4} < MNB {mnb:.4} - 0.05"))?;
    within(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!("SVM-OVR macro-F1 {svm:.4}, MNB {mnb:.4}, {:.1?}", start.elapsed()))
}

// ---------------------------------------------------------------------------

fn analytics_conservation() -> Check {
    let g = Gazetteer::standard();
    let mut thanas: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for e in g.entries() {
        if let Some(t) = &e.region.thana {
            thanas.entry(e.region.district.clone()).or_default().push(t.clone());
        }
    }
    let docs = synth::regional_docs(500, &thanas, 21);
    let districts: Vec<&str> = dengue_core::region::DISTRICTS.iter().map(|(d, _)| *d).collect();
    let mut cases = synth::regional_cases(&districts, 2018, 1..=12, 22);
    cases.extend(synth::regional_cases(&districts, 2019, 1..=12, 23));
    let all = AggregateQuery { region: None, range: PeriodRange::default() };
    let agg = |level| aggregate(&docs, &cases, level, &all).map_err(|e| e.to_string());
    let (district, division, country) = (agg(Level::District)?, agg(Level::Division)?, agg(Level::Country)?);

    let mut summed: BTreeMap<(String, YearMonth), [u64; 3]> = BTreeMap::new();
    for r in &district.rows {
        let e = summed.entry((r.region.division.unwrap().to_string(), r.period)).or_default();
        *e = [e[0] + r.disease_news, e[1] + r.intervention_news, e[2] + r.official_cases];
    }
    let div: BTreeMap<(String, YearMonth), [u64; 3]> = division
        .rows
        .iter()
        .map(|r| ((r.region.division.unwrap().to_string(), r.period), [r.disease_news, r.intervention_news, r.official_cases]))
        .collect();
    ensure(summed == div, || "division != sum of districts".into())?;
    let mut by_month: BTreeMap<YearMonth, [u64; 3]> = BTreeMap::new();
    for r in &division.rows {
        let e = by_month.entry(r.period).or_default();
        *e = [e[0] + r.disease_news, e[1] + r.intervention_news, e[2] + r.official_cases];
    }
    for u in &division.unattributed {
        let e = by_month.entry(u.period).or_default();
        *e = [e[0] + u.disease_news, e[1] + u.intervention_news, e[2]];
    }
    let ctry: BTreeMap<YearMonth, [u64; 3]> =
        country.rows.iter().map(|r| (r.period, [r.disease_news, r.intervention_news, r.official_cases])).collect();
    ensure(ctry == by_month, || "country != sum of divisions + unattributed".into())?;
    let doc_total: u64 = ctry.values().map(|v| v[0] + v[1]).sum();
    ensure(doc_total == docs.len() as u64, || format!("country holds {doc_total} of {} docs", docs.len()))?;

    // Pearson on affine series
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x: BTreeMap<YearMonth, f64> =
        (1..=24).map(|i| (YearMonth::new(2018 + (i - 1) / 12, ((i - 1) % 12 + 1) as u32).unwrap(), rng.random_range(0.0..500.0))).collect();
    let y: BTreeMap<YearMonth, f64> = x.iter().map(|(k, v)| (*k, 3.7 * v + 12.0)).collect();
    let r = correlate(&x, &y, 0).map_err(|e| e.to_string())?.r.ok_or("r undefined")?;
    ensure((r - 1.0).abs() <= 1e-12, || format!("affine r = {r}"))?;

    // gap fixture
    let (gdocs, gcases) = synth::gap_fixture();
    let grows = aggregate(&gdocs, &gcases, Level::District, &all).map_err(|e| e.to_string())?.rows;
    let gaps = gap_rank(&grows, PeriodRange::default(), DEFAULT_GAP_THRESHOLD).map_err(|e| e.to_string())?;
    let share_sums = [
        gaps.rows.iter().map(|r| r.case_share).sum::<f64>(),
        gaps.rows.iter().map(|r| r.disease_share).sum::<f64>(),
        gaps.rows.iter().map(|r| r.intervention_share).sum::<f64>(),
    ];
    ensure(share_sums.iter().all(|s| (s - 1.0).abs() <= 1e-9), || format!("share sums {share_sums:?}"))?;
    let mut flagged: Vec<&str> = gaps.flagged().map(|r| r.district.as_str()).collect();
    flagged.sort();
    ensure(flagged == synth::GAP_DISTRICTS, || format!("flagged {flagged:?}"))?;

    // city corporation fixture
    let mapping = CityCorpMapping::from_reader(defaults::CITY_CORPORATIONS.as_bytes()).map_err(|e| e.to_string())?;
    let of = |c: Corporation| mapping.thanas.iter().filter(|(_, v)| **v == c).map(|(k, _)| k.as_str()).collect::<Vec<_>>();
    let (cdocs, ccases) = synth::citycorp_fixture(&of(Corporation::Dncc), &of(Corporation::Dscc));
    let crows = aggregate(&cdocs, &ccases, Level::Thana, &all).map_err(|e| e.to_string())?.rows;
    let cmp = compare_city_corporations(&crows, &mapping);
    let (n, s) = (&cmp.totals[&Corporation::Dncc], &cmp.totals[&Corporation::Dscc]);
    ensure(
        n.intervention_news > s.intervention_news && s.official_cases > n.official_cases,
        || format!("no inversion: DNCC {n:?} DSCC {s:?}"),
    )?;
    Ok(format!(
        "{} district rows roll up; r-1 = {:.1e}; flagged {} gap districts; DNCC interventions {} > DSCC {} while DSCC cases {} > DNCC {}",
        district.rows.len(),
        r - 1.0,
        flagged.len(),
        n.intervention_news,
        s.intervention_news,
        s.official_cases,
        n.official_cases
    ))
}

// ---------------------------------------------------------------------------

fn cli(data: &std::path::Path, args: &[&str]) -> Result<Value, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_dengue"))
        .arg("--data")
        .arg(data)
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("`{}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)))?;
    serde_json::from_slice(&out.stdout).map_err(|e| format!("`{}` printed non-JSON: {e}", args.join(" ")))
}

async fn api(app: &axum::Router, method: &str, uri: &str, body: Option<Value>) -> Result<(u16, Value), String> {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map(|b| Body::from(b.to_string())).unwrap_or_default()).map_err(|e| e.to_string())?;
    let resp = app.clone().oneshot(req).await.map_err(|e| e.to_string())?;
    let status = resp.status().as_u16();
    let bytes = resp.into_body().collect().await.map_err(|e| e.to_string())?.to_bytes();
    Ok((status, serde_json::from_slice(&bytes).map_err(|e| e.to_string())?))
}

fn canonical(v: &Value) -> String {
    // serde_json maps are key-sorted, so this is a canonical form
    serde_json::to_string(v).unwrap()
}

async fn service_checks(dir: &std::path::Path) -> Check {
    let config = ApiConfig { data_dir: dir.to_path_buf(), ..ApiConfig::default() };
    let state = AppState::load(&config).map_err(|e| e.to_string())?;
    let app = router(state.clone(), &config);

    let pairs: Vec<(&str, Vec<&str>)> = vec![
        ("/api/health", vec!["status"]),
        ("/api/stats", vec!["stats", "--json"]),
        ("/api/stats?year=2019", vec!["stats", "--json", "--year", "2019"]),
        ("/api/aggregate?level=district&period=2019-08", vec!["analytics", "aggregate", "--level", "district", "--period", "2019-08", "--limit", "50"]),
        ("/api/aggregate?level=division&region=Dhaka&from=2018-03&to=2019-02&limit=500", vec![
            "analytics", "aggregate", "--level", "division", "--region", "Dhaka", "--from", "2018-03", "--to", "2019-02", "--limit", "500",
        ]),
        ("/api/correlation?region=Dhaka&lag=1", vec!["analytics", "correlate", "--region", "Dhaka", "--lag", "1"]),
        ("/api/correlation", vec!["analytics", "correlate"]),
        ("/api/gaps?from=2019-01&to=2019-12", vec!["analytics", "gaps", "--from", "2019-01", "--to", "2019-12"]),
        ("/api/citycorp", vec!["analytics", "citycorp"]),
        ("/api/lexicon", vec!["hitl", "lexicon"]),
        ("/api/lexicon?version=0", vec!["hitl", "lexicon", "--version", "0"]),
        ("/api/annotation/queue", vec!["hitl", "queue", "--limit", "50"]),
        ("/api/annotation/queue?limit=5", vec!["hitl", "queue", "--limit", "5"]),
    ];
    for (uri, args) in &pairs {
        let (status, env) = api(&app, "GET", uri, None).await?;
        ensure(status == 200 && env["status"] == "ok", || format!("{uri}: {status} {env}"))?;
        let from_cli = cli(dir, args)?;
        ensure(canonical(&env["data"]) == canonical(&from_cli), || format!("{uri} differs from `{}`", args.join(" ")))?;
    }

    let queue = state.snapshot().session.pending_docs().to_vec();
    let (a, b) = (queue[0].doc_id.clone(), queue[1].doc_id.clone());
    let (s, v) = api(&app, "POST", "/api/annotation/vote", Some(json!({"doc_id": a, "votes": ["D", "D"]}))).await?;
    ensure(s == 422 && v["error"]["code"] == "VOTE_COUNT", || format!("two votes gave {s} {v}"))?;
    let body = json!({"doc_id": a, "votes": ["D", "I", "D"], "request_id": "acc-1"});
    let first = api(&app, "POST", "/api/annotation/vote", Some(body.clone())).await?;
    let labeled = state.snapshot().session.labeled().count();
    let retry = api(&app, "POST", "/api/annotation/vote", Some(body)).await?;
    ensure(first.0 == 200 && first == retry, || format!("retry differs: {first:?} vs {retry:?}"))?;
    ensure(state.snapshot().session.labeled().count() == labeled, || "retry voted twice".into())?;
    let (s, v) = api(&app, "POST", "/api/annotation/vote", Some(json!({"doc_id": a, "votes": ["I", "I", "I"]}))).await?;
    ensure(s == 409 && v["error"]["code"] == "ALREADY_LABELED", || format!("re-vote gave {s} {v}"))?;

    // the CLI sees the API's vote, and the API sees a CLI vote after reload
    let q = cli(dir, &["hitl", "queue", "--limit", "100000"])?;
    ensure(q["items"].as_array().unwrap().iter().all(|i| i["doc_id"] != a.as_str()), || "voted doc still queued for the CLI".into())?;
    cli(dir, &["hitl", "vote", &b, "I", "I", "D"])?;
    let app2 = router(AppState::load(&config).map_err(|e| e.to_string())?, &config);
    let (s, v) = api(&app2, "POST", "/api/annotation/vote", Some(json!({"doc_id": b, "votes": ["D", "D", "D"]}))).await?;
    ensure(s == 409 && v["error"]["code"] == "ALREADY_LABELED", || format!("CLI vote not visible: {s} {v}"))?;
    Ok(format!("{} read endpoints equal the CLI; VOTE_COUNT, ALREADY_LABELED and retry verified", pairs.len()))
}

fn service_equivalence() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    synth::demo_workspace(dir.path(), 600, 12, 31).map_err(|e| e.to_string())?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(service_checks(dir.path()))
}

// ---------------------------------------------------------------------------

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("corpus-stats-table", corpus_stats_table),
        ("similarity-oracle", similarity_oracle),
        ("threshold-semantics", threshold_semantics),
        ("lda-planted-recovery", lda_recovery),
        ("hitl-end-to-end", hitl_end_to_end),
        ("classifier-oracles", classifier_oracles),
        ("synthetic-calibration", calibration),
        ("analytics-conservation", analytics_conservation),
        ("service-equivalence", service_equivalence),
    ];
    let mut unexpected = Vec::new();
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let known = KNOWN_FAILURES.contains(&name);
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d.clone()),
            Err(d) if known => ("FAIL", format!("{d} [known deviation]")),
            Err(d) => ("FAIL", d.clone()),
        };
        println!("{tag} {name:<24} {detail} ({:.2?})", start.elapsed());
        match (outcome.is_ok(), known) {
            (false, false) => unexpected.push(format!("{name} failed")),
            (true, true) => unexpected.push(format!("{name} passes; remove it from KNOWN_FAILURES")),
            _ => {}
        }
    }
    if !unexpected.is_empty() {
        eprintln!("acceptance: {}", unexpected.join(", "));
        std::process::exit(1);
    }
}
