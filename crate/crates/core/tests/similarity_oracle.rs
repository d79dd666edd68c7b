//! Exhaustive check of baseline scoring against plain set arithmetic over a
//! 12-token alphabet.

use std::collections::BTreeSet;

use dengue_core::hitl::{cosine, BaselineScore, jaccard, BaselineScorer, Combiner, HitlConfig, HitlSession, DEFAULT_THRESHOLD};
use dengue_core::{KeywordLexicon, Label, TokenizedDoc};

const ALPHABET: [&str; 12] = ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "l"];

fn members(mask: u32) -> impl Iterator<Item = &'static str> {
    ALPHABET.iter().enumerate().filter(move |(i, _)| mask >> i & 1 == 1).map(|(_, t)| *t)
}

/// Scores from explicit 0/1 vectors over the union vocabulary.
struct Oracle {
    cosine: f64,
    jaccard: f64,
    /// Whether the mean of the two exceeds one half, decided in integers.
    mean_over_half: bool,
}

fn oracle(a: u32, b: u32) -> Oracle {
    // presence vectors over the union vocabulary, padded with zeros
    let (mut va, mut vb) = ([0u64; 12], [0u64; 12]);
    for (slot, i) in (0..ALPHABET.len()).filter(|i| (a | b) >> i & 1 == 1).enumerate() {
        va[slot] = (a >> i & 1) as u64;
        vb[slot] = (b >> i & 1) as u64;
    }
    let dot: u64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
    let na: u64 = va.iter().map(|x| x * x).sum();
    let nb: u64 = vb.iter().map(|x| x * x).sum();
    let both = va.iter().zip(&vb).filter(|(x, y)| **x == 1 && **y == 1).count() as u64;
    let either = va.iter().zip(&vb).filter(|(x, y)| **x == 1 || **y == 1).count() as u64;
    let cosine = if na == 0 || nb == 0 { 0.0 } else { dot as f64 / ((na as f64).sqrt() * (nb as f64).sqrt()) };
    let jaccard = if either == 0 { 0.0 } else { both as f64 / either as f64 };
    // (i/sqrt(na·nb) + i/u) / 2 > 1/2  <=>  (i·u)^2 > (u - i)^2 · na · nb
    let mean_over_half = na > 0 && nb > 0 && {
        let (i, u) = (both as u128, either as u128);
        (i * u).pow(2) > (u - i).pow(2) * na as u128 * nb as u128
    };
    Oracle { cosine, jaccard, mean_over_half }
}

#[test]
fn exhaustive_pairs_with_small_union() {
    let full: u32 = (1 << ALPHABET.len()) - 1;
    let docs: Vec<BTreeSet<&str>> = (0..=full).map(|m| members(m).collect()).collect();
    let mut checked = 0u64;
    for b in 0..=full {
        let keys: BTreeSet<String> = members(b).map(str::to_string).collect();
        let complement = full & !b;
        let scorer = (b != 0 && complement != 0).then(|| {
            let other: BTreeSet<String> = members(complement).map(str::to_string).collect();
            BaselineScorer::from_sets(keys.clone(), other, Combiner::Mean, DEFAULT_THRESHOLD).unwrap()
        });
        let key_refs: BTreeSet<&str> = members(b).collect();
        for a in 0..=full {
            if (a | b).count_ones() > 10 {
                continue;
            }
            checked += 1;
            let o = oracle(a, b);
            assert_eq!(jaccard(&docs[a as usize], &key_refs), o.jaccard, "jaccard a={a:#x} b={b:#x}");
            assert!((cosine(&docs[a as usize], &key_refs) - o.cosine).abs() < 1e-12, "cosine a={a:#x} b={b:#x}");
            let Some(scorer) = &scorer else { continue };
            let s = scorer.score_set("x", &docs[a as usize]);
            assert_eq!(s.jaccard_disease, o.jaccard);
            assert!((s.cosine_disease - o.cosine).abs() < 1e-12);
            assert!((s.ensemble_disease - (o.cosine + o.jaccard) / 2.0).abs() < 1e-12);
            assert_eq!(s.triggered.contains(&Label::Disease), o.mean_over_half, "trigger a={a:#x} b={b:#x}");
            let oc = oracle(a, complement);
            assert_eq!(s.jaccard_intervention, oc.jaccard);
            assert!((s.cosine_intervention - oc.cosine).abs() < 1e-12);
            assert_eq!(s.triggered.contains(&Label::Intervention), oc.mean_over_half);
            for v in [s.cosine_disease, s.jaccard_disease, s.cosine_intervention, s.jaccard_intervention] {
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }
    // sum over union sizes k <= 10 of C(12, k) * 3^k
    let expected: u64 = (0..=10u32).map(|k| binom(12, k) * 3u64.pow(k)).sum();
    assert_eq!(checked, expected);
}

fn binom(n: u64, k: u32) -> u64 {
    (0..k as u64).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn strict_threshold_on_the_queue() {
    // doc {a, b}, keys {a, c}: cosine 1/2, jaccard 1/3, so the Max combiner
    // gives exactly 0.5 against a threshold of 0.5.
    let lexicon = KeywordLexicon::standard();
    let d = lexicon.disease_keywords();
    let mut keys = d.iter();
    let (k1, k2) = (keys.next().unwrap().clone(), keys.next().unwrap().clone());
    let disease: BTreeSet<String> = [k1.clone(), k2].into();
    let intervention = lexicon.intervention_keywords();
    let doc = TokenizedDoc::new("edge", vec![k1, "zzz".into()]);

    let at = BaselineScorer::from_sets(disease.clone(), intervention.clone(), Combiner::Max, 0.5).unwrap();
    let s = at.score(&doc);
    assert_eq!(s.ensemble_disease, 0.5);
    assert!(s.triggered.is_empty());

    let mut session = HitlSession::new(lexicon.clone(), HitlConfig { combiner: Combiner::Max, threshold: 0.5, annotators: 3 }).unwrap();
    assert_eq!(session.enqueue_scores(std::slice::from_ref(&s)), 0);

    // a threshold 1e-9 lower turns the same score into a trigger
    let below = BaselineScorer::from_sets(disease, intervention, Combiner::Max, 0.5 - 1e-9).unwrap();
    let s2 = below.score(&doc);
    assert_eq!(s2.triggered, vec![Label::Disease]);
    assert_eq!(session.enqueue_scores(&[s2]), 1);

    // and an ensemble of exactly 0.5 + 1e-9 against the default threshold
    let just_over = BaselineScore::from_components("over", (0.5 + 1e-9, 0.5 + 1e-9), (0.0, 0.0), Combiner::Mean, DEFAULT_THRESHOLD);
    assert_eq!(session.enqueue_scores(&[just_over]), 1);
}
