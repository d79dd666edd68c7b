//! The full expansion-and-labeling loop on the planted corpus, driven by a
//! scripted annotator that knows the planted structure.

use std::collections::{BTreeMap, BTreeSet};

use dengue_core::hitl::{CandidateDecision, HitlConfig, HitlError, HitlSession};
use dengue_core::synth::{planted_corpus, PlantedSpec, PLANTED_LINKS};
use dengue_core::{CoiLink, KeywordLexicon, Label, LdaConfig};

fn lda() -> LdaConfig {
    let mut c = LdaConfig::with_topics(2);
    c.boost = 100.0;
    c.iterations = 200;
    c.rng_seed = 42;
    c
}

#[test]
fn scripted_annotator_reaches_the_planted_lexicon() {
    let planted = planted_corpus(&PlantedSpec::default());
    let lexicon = KeywordLexicon::from_seeds(&planted.seed_sets()).unwrap();
    let mut session = HitlSession::new(lexicon, HitlConfig::default()).unwrap();

    let topic_of_link = |link: CoiLink| PLANTED_LINKS.iter().position(|l| *l == link).unwrap();
    let mut rounds = 0;
    while !session.is_terminated() {
        rounds += 1;
        assert!(rounds <= 3, "loop did not terminate");
        let outcome = session
            .expansion_round(&planted.docs, &lda(), 10, |candidates| {
                let mut decisions = BTreeMap::new();
                for (link, words) in candidates {
                    let t = topic_of_link(*link);
                    for w in words {
                        let accept = planted.correlates(t).contains(w);
                        decisions.insert(
                            w.clone(),
                            if accept { CandidateDecision::Accept { set: None } } else { CandidateDecision::Reject },
                        );
                    }
                }
                decisions
            })
            .unwrap();
        assert_eq!(outcome.terminated, outcome.accepted.is_empty());
    }
    assert!(rounds <= 3);

    let expected: BTreeSet<String> = (0..2)
        .flat_map(|t| std::iter::once(planted.seed(t).to_string()).chain(planted.correlates(t).iter().cloned()))
        .collect();
    assert_eq!(session.lexicon().union(), expected);
    for t in 0..2 {
        for w in planted.correlates(t) {
            assert_eq!(session.lexicon().entry(w).unwrap().link, PLANTED_LINKS[t]);
        }
    }

    // label whatever the baseline queued; one annotator dissents on every
    // third document, which never changes the majority
    let queued = session.enqueue_for_review(&planted.docs).unwrap();
    assert!(queued > 0);
    let pending: Vec<String> = session.pending_docs().iter().map(|q| q.doc_id.clone()).collect();
    let mut expected_counts = BTreeMap::from([(Label::Disease, 0usize), (Label::Intervention, 0)]);
    for (n, id) in pending.iter().enumerate() {
        let d: usize = id[1..].parse().unwrap();
        let truth = if planted.doc_topic[d] == 0 { Label::Disease } else { Label::Intervention };
        let votes = if n % 3 == 0 { [truth, truth.other(), truth] } else { [truth; 3] };
        let doc = session.record_votes(id, &votes).unwrap();
        assert_eq!(doc.label, truth);
        *expected_counts.get_mut(&truth).unwrap() += 1;
    }
    let export = session.export_labeled().unwrap();
    assert_eq!(export.counts, expected_counts);
    assert_eq!(export.records.len(), queued);
    assert!(session.pending_docs().is_empty());

    // the session is closed for further expansion
    let err = session.expansion_round(&planted.docs, &lda(), 10, |_| BTreeMap::new()).unwrap_err();
    assert!(matches!(err, dengue_core::Error::Hitl(HitlError::Terminated)));
}
