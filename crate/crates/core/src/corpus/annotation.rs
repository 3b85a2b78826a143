use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::DocumentPair;
use crate::error::{Error, Result};

/// Three-way sentence-pair label. Variant order gives
/// `NotAligned < PartiallyAligned < Aligned`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AlignmentLabelKind {
    #[serde(rename = "not_aligned")]
    NotAligned,
    #[serde(rename = "partial")]
    PartiallyAligned,
    #[serde(rename = "aligned")]
    Aligned,
}

impl AlignmentLabelKind {
    pub const ALL: [AlignmentLabelKind; 3] = [
        AlignmentLabelKind::NotAligned,
        AlignmentLabelKind::PartiallyAligned,
        AlignmentLabelKind::Aligned,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AlignmentLabelKind::NotAligned => "not_aligned",
            AlignmentLabelKind::PartiallyAligned => "partial",
            AlignmentLabelKind::Aligned => "aligned",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    Predicted,
    Human,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub pair_id: String,
    pub simple_sent: usize,
    pub complex_sent: usize,
    pub label: AlignmentLabelKind,
    pub source: LabelSource,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnnotationKey {
    pub pair_id: String,
    pub simple_sent: usize,
    pub complex_sent: usize,
}

impl AnnotationRecord {
    pub fn key(&self) -> AnnotationKey {
        AnnotationKey {
            pair_id: self.pair_id.clone(),
            simple_sent: self.simple_sent,
            complex_sent: self.complex_sent,
        }
    }
}

pub fn parse_annotations(reader: impl BufRead) -> Result<Vec<AnnotationRecord>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let malformed = |message: String| Error::MalformedLine {
            line: idx + 1,
            message,
        };
        let line = line.map_err(|e| malformed(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?);
    }
    Ok(out)
}

pub fn load_annotations(path: impl AsRef<Path>) -> Result<Vec<AnnotationRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_annotations(BufReader::new(file))
}

pub fn write_annotations(mut writer: impl Write, records: &[AnnotationRecord]) -> std::io::Result<()> {
    for rec in records {
        serde_json::to_writer(&mut writer, rec)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

/// Last record for a key wins. Output is ordered by key.
pub fn merge_annotations(
    records: impl IntoIterator<Item = AnnotationRecord>,
) -> Vec<AnnotationRecord> {
    let mut merged = BTreeMap::new();
    for rec in records {
        merged.insert(rec.key(), rec);
    }
    merged.into_values().collect()
}

/// Checks that every line parses, that keys are unique, and (when a corpus is
/// given) that every record points at an existing pair and sentence.
/// Returns the number of records.
pub fn validate_annotation_file(
    path: impl AsRef<Path>,
    corpus: Option<&[DocumentPair]>,
) -> Result<usize> {
    let records = load_annotations(&path)?;
    let mut seen = HashMap::new();
    for (idx, rec) in records.iter().enumerate() {
        if let Some(prev) = seen.insert(rec.key(), idx) {
            return Err(Error::InvalidArgument(format!(
                "records {} and {} share key ({:?}, {}, {})",
                prev + 1,
                idx + 1,
                rec.pair_id,
                rec.simple_sent,
                rec.complex_sent
            )));
        }
    }
    if let Some(pairs) = corpus {
        let by_id: HashMap<&str, &DocumentPair> =
            pairs.iter().map(|p| (p.pair_id.as_str(), p)).collect();
        for rec in &records {
            let pair = by_id
                .get(rec.pair_id.as_str())
                .ok_or_else(|| Error::UnknownPair(rec.pair_id.clone()))?;
            check_indices(pair, rec.simple_sent, rec.complex_sent)?;
        }
    }
    Ok(records.len())
}

pub(crate) fn check_indices(pair: &DocumentPair, simple: usize, complex: usize) -> Result<()> {
    let m = pair.simple.sentence_count();
    let n = pair.complex.sentence_count();
    if simple >= m || complex >= n {
        return Err(Error::Index(format!(
            "pair {:?}: ({simple}, {complex}) outside {m}x{n}",
            pair.pair_id
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(s: usize, c: usize, label: AlignmentLabelKind, source: LabelSource) -> AnnotationRecord {
        AnnotationRecord {
            pair_id: "p".into(),
            simple_sent: s,
            complex_sent: c,
            label,
            source,
            timestamp: DateTime::<Utc>::UNIX_EPOCH,
        }
    }

    #[test]
    fn label_order() {
        use AlignmentLabelKind::*;
        assert!(Aligned > PartiallyAligned && PartiallyAligned > NotAligned);
    }

    #[test]
    fn wire_format() {
        let r = rec(1, 2, AlignmentLabelKind::PartiallyAligned, LabelSource::Human);
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(
            json,
            r#"{"pair_id":"p","simple_sent":1,"complex_sent":2,"label":"partial","source":"human","timestamp":"1970-01-01T00:00:00Z"}"#
        );
        let back: AnnotationRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn last_write_wins() {
        let merged = merge_annotations(vec![
            rec(0, 0, AlignmentLabelKind::Aligned, LabelSource::Predicted),
            rec(1, 1, AlignmentLabelKind::Aligned, LabelSource::Predicted),
            rec(0, 0, AlignmentLabelKind::NotAligned, LabelSource::Human),
        ]);
        assert_eq!(merged.len(), 2);
        assert_eq!(merged[0].label, AlignmentLabelKind::NotAligned);
        assert_eq!(merged[0].source, LabelSource::Human);
    }

    #[test]
    fn malformed_annotation_line() {
        let text = "{\"pair_id\":\"p\"}\n";
        assert!(matches!(
            parse_annotations(text.as_bytes()),
            Err(Error::MalformedLine { line: 1, .. })
        ));
    }
}
