//! End-to-end wiring: scoring, paragraph pre-pass, CRF decode, training data.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{AlignmentLabelKind, AnnotationRecord, Document, DocumentPair, LabelSource};
use crate::crf::{decode_pair, AlignmentSequence, CrfModel, TrainConfig, TrainingInstance};
use crate::error::{Error, Result};
use crate::eval::{GoldStandard, Task};
use crate::para_align::{
    align_paragraphs, merge_blocks, Block, ParagraphAlignment, ThresholdSet,
};
use crate::similarity::{
    build_idf, load_external_matrix, score_pair, IdfTable, MatrixScorer, Scorer, SimilarityMatrix,
    DEFAULT_NGRAM_ORDERS,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScorerConfig {
    Jaccard,
    /// IDF weights are estimated from the corpus being processed.
    Tfidf,
    CharNgram {
        #[serde(default = "default_orders")]
        orders: Vec<usize>,
    },
    /// Precomputed matrices, one `<pair_id>.json` file per pair.
    External { dir: PathBuf },
}

fn default_orders() -> Vec<usize> {
    DEFAULT_NGRAM_ORDERS.to_vec()
}

/// Either a named published set or explicit thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThresholdChoice {
    Named(String),
    Explicit(ThresholdSet),
}

impl ThresholdChoice {
    pub fn resolve(&self) -> Result<ThresholdSet> {
        let th = match self {
            ThresholdChoice::Named(name) => ThresholdSet::named(name)?,
            ThresholdChoice::Explicit(th) => *th,
        };
        th.validate()?;
        Ok(th)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prepass {
    /// One block spanning both documents.
    None,
    /// Paragraph alignment computed from the sentence similarities.
    Predicted,
    /// Paragraph alignments read from a JSON-lines file.
    GoldFromFile { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub scorer: ScorerConfig,
    pub thresholds: ThresholdChoice,
    pub prepass: Prepass,
    pub model: Option<PathBuf>,
    pub seed: u64,
    pub train: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            scorer: ScorerConfig::Jaccard,
            thresholds: ThresholdChoice::Named("newsela".into()),
            prepass: Prepass::None,
            model: None,
            seed: 0,
            train: TrainConfig::default(),
        }
    }
}

fn require_exists(path: &Path) -> Result<()> {
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "referenced file does not exist"),
        ));
    }
    Ok(())
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            context: "pipeline config".into(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Checks thresholds and that every referenced file exists.
    pub fn validate(&self) -> Result<()> {
        self.thresholds.resolve()?;
        if let ScorerConfig::External { dir } = &self.scorer {
            require_exists(dir)?;
        }
        if let Prepass::GoldFromFile { path } = &self.prepass {
            require_exists(path)?;
        }
        if let Some(model) = &self.model {
            require_exists(model)?;
        }
        Ok(())
    }
}

/// File name under which a pair's matrix is stored: characters outside
/// `[A-Za-z0-9._-]` become `_`.
pub fn matrix_file_name(pair_id: &str) -> String {
    let safe: String = pair_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect();
    format!("{safe}.json")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParagraphGold {
    pair_id: String,
    alignments: Vec<(usize, usize)>,
}

/// Reads `{"pair_id": ..., "alignments": [[simple_para, complex_para], ...]}`
/// lines (0-based paragraph indices).
pub fn load_paragraph_alignments(path: impl AsRef<Path>) -> Result<HashMap<String, Vec<(usize, usize)>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = HashMap::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let malformed = |message: String| Error::MalformedLine { line: idx + 1, message };
        let line = line.map_err(|e| malformed(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawParagraphGold = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        if out.insert(raw.pair_id.clone(), raw.alignments).is_some() {
            return Err(Error::DuplicatePair(raw.pair_id));
        }
    }
    Ok(out)
}

enum ResolvedScorer {
    Builtin(Scorer),
    External(PathBuf),
}

enum ResolvedPrepass {
    None,
    Predicted,
    Gold(HashMap<String, Vec<(usize, usize)>>),
}

/// A configuration bound to a corpus (IDF statistics, paragraph gold).
pub struct Pipeline {
    scorer: ResolvedScorer,
    thresholds: ThresholdSet,
    prepass: ResolvedPrepass,
}

/// Predicted aligned sentence pairs for one document pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairPrediction {
    pub pair_id: String,
    pub pairs: Vec<(usize, usize)>,
}

impl Pipeline {
    pub fn new(config: &PipelineConfig, corpus: &[DocumentPair]) -> Result<Self> {
        config.validate()?;
        let scorer = match &config.scorer {
            ScorerConfig::Jaccard => ResolvedScorer::Builtin(Scorer::Jaccard),
            ScorerConfig::Tfidf => ResolvedScorer::Builtin(Scorer::Tfidf { idf: corpus_idf(corpus)? }),
            ScorerConfig::CharNgram { orders } => ResolvedScorer::Builtin(Scorer::CharNgram { orders: orders.clone() }),
            ScorerConfig::External { dir } => ResolvedScorer::External(dir.clone()),
        };
        let prepass = match &config.prepass {
            Prepass::None => ResolvedPrepass::None,
            Prepass::Predicted => ResolvedPrepass::Predicted,
            Prepass::GoldFromFile { path } => ResolvedPrepass::Gold(load_paragraph_alignments(path)?),
        };
        Ok(Pipeline {
            scorer,
            thresholds: config.thresholds.resolve()?,
            prepass,
        })
    }

    pub fn similarity(&self, pair: &DocumentPair) -> Result<SimilarityMatrix> {
        match &self.scorer {
            ResolvedScorer::Builtin(s) => score_pair(pair, s),
            ResolvedScorer::External(dir) => load_external_matrix(dir.join(matrix_file_name(&pair.pair_id)), pair),
        }
    }

    pub fn paragraph_alignment(&self, pair: &DocumentPair, sim: &SimilarityMatrix) -> Result<Option<ParagraphAlignment>> {
        let (k, l) = (pair.simple.paragraphs.len(), pair.complex.paragraphs.len());
        match &self.prepass {
            ResolvedPrepass::None => Ok(None),
            ResolvedPrepass::Predicted => align_paragraphs(pair, &MatrixScorer(sim), &self.thresholds).map(Some),
            ResolvedPrepass::Gold(gold) => {
                let cells = gold.get(&pair.pair_id).map(Vec::as_slice).unwrap_or(&[]);
                ParagraphAlignment::from_pairs(k, l, cells).map(Some)
            }
        }
    }

    pub fn blocks(&self, pair: &DocumentPair, sim: &SimilarityMatrix) -> Result<Vec<Block>> {
        match self.paragraph_alignment(pair, sim)? {
            None => Ok(vec![Block::whole(pair)]),
            Some(align) => merge_blocks(&align, pair),
        }
    }

    pub fn align_pair(&self, model: &CrfModel, pair: &DocumentPair) -> Result<PairPrediction> {
        let sim = self.similarity(pair)?;
        let blocks = self.blocks(pair, &sim)?;
        Ok(PairPrediction {
            pair_id: pair.pair_id.clone(),
            pairs: decode_pair(model, pair, &sim, Some(&blocks))?,
        })
    }

    /// Aligns every pair in parallel; output order follows `corpus`.
    pub fn align_corpus(&self, model: &CrfModel, corpus: &[DocumentPair]) -> Result<Vec<PairPrediction>> {
        corpus.par_iter().map(|p| self.align_pair(model, p)).collect()
    }

    /// One CRF training instance per block of `pair`.
    pub fn training_instances(&self, pair: &DocumentPair, gold: &GoldStandard) -> Result<Vec<TrainingInstance>> {
        let sim = self.similarity(pair)?;
        let blocks = self.blocks(pair, &sim)?;
        Ok(blocks
            .iter()
            .filter(|b| !b.simple.is_empty())
            .map(|b| TrainingInstance {
                sim: sim.submatrix(&b.simple, &b.complex),
                gold: AlignmentSequence {
                    pair_id: pair.pair_id.clone(),
                    labels: gold_labels(b, gold),
                },
            })
            .collect())
    }

    /// Training instances for a corpus, gold taken from `records`.
    pub fn training_set(&self, corpus: &[DocumentPair], records: &[AnnotationRecord]) -> Result<Vec<TrainingInstance>> {
        let mut by_pair: HashMap<&str, Vec<&AnnotationRecord>> = HashMap::new();
        for rec in records {
            by_pair.entry(rec.pair_id.as_str()).or_default().push(rec);
        }
        let per_pair: Vec<Vec<TrainingInstance>> = corpus
            .par_iter()
            .map(|pair| {
                let recs = by_pair.get(pair.pair_id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
                let gold = GoldStandard::from_records(pair, recs.iter().copied())?;
                self.training_instances(pair, &gold)
            })
            .collect::<Result<_>>()?;
        Ok(per_pair.into_iter().flatten().collect())
    }
}

fn corpus_idf(corpus: &[DocumentPair]) -> Result<IdfTable> {
    let docs: Vec<Document> = corpus
        .iter()
        .flat_map(|p| [p.simple.clone(), p.complex.clone()])
        .collect();
    build_idf(&docs)
}

/// Block-local CRF labels: each simple sentence takes its lowest-index
/// Task 1 positive partner inside the block, or 0.
pub fn gold_labels(block: &Block, gold: &GoldStandard) -> Vec<usize> {
    block
        .simple
        .iter()
        .map(|&s| {
            block
                .complex
                .iter()
                .position(|&c| Task::Task1.is_positive(gold.label(s, c)))
                .map_or(0, |p| p + 1)
        })
        .collect()
}

/// Predictions as annotation records. Timestamps are fixed at the UNIX
/// epoch so reruns produce identical files.
pub fn prediction_records(predictions: &[PairPrediction]) -> Vec<AnnotationRecord> {
    let epoch = DateTime::<Utc>::UNIX_EPOCH;
    predictions
        .iter()
        .flat_map(|p| {
            p.pairs.iter().map(move |&(s, c)| AnnotationRecord {
                pair_id: p.pair_id.clone(),
                simple_sent: s,
                complex_sent: c,
                label: AlignmentLabelKind::Aligned,
                source: LabelSource::Predicted,
                timestamp: epoch,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::crf::{viterbi, CrfModel};
    use crate::similarity::save_matrix;

    fn pair() -> DocumentPair {
        DocumentPair {
            pair_id: "p/1".into(),
            simple: Document::from_texts("s", None, &[vec!["The cat sat.", "It was big."], vec!["Dogs bark loud."]]).unwrap(),
            complex: Document::from_texts(
                "c",
                None,
                &[vec!["The cat sat on the mat.", "It was very big."], vec!["Dogs bark loudly at night."]],
            )
            .unwrap(),
        }
    }

    #[test]
    fn config_defaults_and_json() {
        let cfg = PipelineConfig::from_json(r#"{"scorer":{"kind":"char_ngram"},"thresholds":"wiki","prepass":{"kind":"predicted"}}"#).unwrap();
        assert_eq!(cfg.scorer, ScorerConfig::CharNgram { orders: vec![2, 3, 4] });
        assert_eq!(cfg.thresholds.resolve().unwrap(), ThresholdSet::wiki());
        assert_eq!(cfg.prepass, Prepass::Predicted);
        let explicit = PipelineConfig::from_json(
            r#"{"thresholds":{"variant":"newsela","tau1":0.2,"tau2":0.3,"tau3":0.9,"tau4":0.8,"tau5":0.4}}"#,
        )
        .unwrap();
        assert_eq!(explicit.thresholds.resolve().unwrap().tau1, 0.2);
        assert!(PipelineConfig::from_json(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn missing_files_fail_validation() {
        let cfg = PipelineConfig {
            model: Some("/nonexistent/model.json".into()),
            ..PipelineConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Io { .. })));
    }

    #[test]
    fn no_prepass_is_whole_document_decode() {
        let p = pair();
        let pipe = Pipeline::new(&PipelineConfig::default(), std::slice::from_ref(&p)).unwrap();
        let model = CrfModel::init(8, 3);
        let sim = pipe.similarity(&p).unwrap();
        let (seq, _) = viterbi(&model, &sim).unwrap();
        let mut expected: Vec<(usize, usize)> = seq
            .labels
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0)
            .map(|(i, &a)| (i, a - 1))
            .collect();
        expected.sort();
        assert_eq!(pipe.align_pair(&model, &p).unwrap().pairs, expected);
    }

    #[test]
    fn single_paragraph_prepass_matches_none() {
        let p = DocumentPair {
            pair_id: "one".into(),
            simple: Document::from_texts("s", None, &[vec!["A b c d.", "E f g h."]]).unwrap(),
            complex: Document::from_texts("c", None, &[vec!["A b c d e.", "E f g h i.", "Z z z."]]).unwrap(),
        };
        let dir = tempfile::tempdir().unwrap();
        let gold = dir.path().join("para.jsonl");
        std::fs::write(&gold, "{\"pair_id\":\"one\",\"alignments\":[[0,0]]}\n").unwrap();
        let model = CrfModel::init(8, 1);
        let none = Pipeline::new(&PipelineConfig::default(), &[]).unwrap();
        let given = Pipeline::new(
            &PipelineConfig {
                prepass: Prepass::GoldFromFile { path: gold },
                ..PipelineConfig::default()
            },
            &[],
        )
        .unwrap();
        assert_eq!(none.align_pair(&model, &p).unwrap(), given.align_pair(&model, &p).unwrap());
    }

    #[test]
    fn gold_prepass_blocks_come_from_file() {
        let p = pair();
        let dir = tempfile::tempdir().unwrap();
        let gold = dir.path().join("para.jsonl");
        std::fs::write(&gold, "{\"pair_id\":\"p/1\",\"alignments\":[[1,1]]}\n").unwrap();
        let pipe = Pipeline::new(
            &PipelineConfig {
                prepass: Prepass::GoldFromFile { path: gold },
                ..PipelineConfig::default()
            },
            &[],
        )
        .unwrap();
        let sim = pipe.similarity(&p).unwrap();
        let blocks = pipe.blocks(&p, &sim).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!((blocks[0].simple.clone(), blocks[0].complex.clone()), (vec![2], vec![2]));
    }

    #[test]
    fn external_matrices_by_file_name() {
        let p = pair();
        let dir = tempfile::tempdir().unwrap();
        let sim = score_pair(&p, &Scorer::Jaccard).unwrap();
        save_matrix(dir.path().join(matrix_file_name(&p.pair_id)), &sim).unwrap();
        assert_eq!(matrix_file_name("p/1"), "p_1.json");
        let pipe = Pipeline::new(
            &PipelineConfig {
                scorer: ScorerConfig::External { dir: dir.path().into() },
                ..PipelineConfig::default()
            },
            &[],
        )
        .unwrap();
        assert_eq!(pipe.similarity(&p).unwrap(), sim);
    }

    #[test]
    fn gold_labels_take_lowest_partner() {
        let block = Block {
            simple_para: 0,
            simple: vec![0, 1, 2],
            complex_paras: 0..1,
            complex: vec![3, 4, 5],
        };
        let labels: BTreeMap<(usize, usize), AlignmentLabelKind> = [
            ((0, 5), AlignmentLabelKind::Aligned),
            ((0, 4), AlignmentLabelKind::PartiallyAligned),
            ((1, 1), AlignmentLabelKind::Aligned),
            ((2, 3), AlignmentLabelKind::NotAligned),
        ]
        .into_iter()
        .collect();
        assert_eq!(gold_labels(&block, &GoldStandard::new(labels)), vec![2, 0, 0]);
    }

    #[test]
    fn empty_labels_give_null_sequences() {
        let p = pair();
        let pipe = Pipeline::new(&PipelineConfig::default(), &[]).unwrap();
        let set = pipe.training_set(std::slice::from_ref(&p), &[]).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set[0].gold.labels, vec![0, 0, 0]);
    }

    #[test]
    fn unknown_sentence_in_gold_is_an_error() {
        let p = pair();
        let pipe = Pipeline::new(&PipelineConfig::default(), &[]).unwrap();
        let bad = AnnotationRecord {
            pair_id: "p/1".into(),
            simple_sent: 9,
            complex_sent: 0,
            label: AlignmentLabelKind::Aligned,
            source: LabelSource::Human,
            timestamp: DateTime::<Utc>::UNIX_EPOCH,
        };
        assert!(pipe.training_set(std::slice::from_ref(&p), &[bad]).is_err());
    }
}
