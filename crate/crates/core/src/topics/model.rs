use serde::{Deserialize, Serialize};

use super::{count_matrices, seed_prior, LdaConfig, SeedSet, TopicError, TopicModel};

pub const MODEL_FORMAT: &str = "dengue-seeded-lda";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocAssignments {
    pub id: String,
    pub words: Vec<u32>,
    pub topics: Vec<u32>,
}

/// On-disk form of a fitted model. Only assignments are stored; the count
/// matrices are rebuilt on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub config: LdaConfig,
    pub seeds: Vec<SeedSet>,
    pub vocab: Vec<String>,
    pub docs: Vec<DocAssignments>,
    #[serde(default)]
    pub log_likelihood: Vec<(usize, f64)>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl TopicModel {
    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            config: self.config.clone(),
            seeds: self.seeds.clone(),
            vocab: self.vocab.clone(),
            docs: self
                .doc_ids
                .iter()
                .zip(&self.words)
                .zip(&self.assignments)
                .map(|((id, w), z)| DocAssignments { id: id.clone(), words: w.clone(), topics: z.clone() })
                .collect(),
            log_likelihood: self.log_likelihood.clone(),
            warnings: self.warnings.clone(),
        }
    }

    pub fn from_file(file: ModelFile) -> Result<TopicModel, TopicError> {
        if file.format != MODEL_FORMAT {
            return Err(TopicError::Format(format!("unexpected format tag `{}`", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(TopicError::Format(format!("unsupported version {}", file.version)));
        }
        file.config.validate(file.seeds.len())?;
        if file.vocab.windows(2).any(|w| w[0] >= w[1]) {
            return Err(TopicError::Format("vocabulary is not strictly sorted".into()));
        }
        let (doc_ids, (words, assignments)): (Vec<_>, (Vec<_>, Vec<_>)) =
            file.docs.into_iter().map(|d| (d.id, (d.words, d.topics))).unzip();
        let (word_topic, topic_totals, doc_topic) =
            count_matrices(file.config.topics, file.vocab.len(), &words, &assignments)?;
        let (prior, prior_sums) = seed_prior(&file.config, &file.vocab, &file.seeds);
        Ok(TopicModel {
            config: file.config,
            seeds: file.seeds,
            vocab: file.vocab,
            doc_ids,
            words,
            assignments,
            word_topic,
            topic_totals,
            doc_topic,
            prior,
            prior_sums,
            log_likelihood: file.log_likelihood,
            warnings: file.warnings,
        })
    }
}
