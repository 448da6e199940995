//! Append-only, line-delimited run log: one schema-versioned header line,
//! then one JSON record per case result, per-case error, or annotation.
//! A crashed run loses at most the in-flight case.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::client::Phase;
use crate::harness::{Annotation, CaseResult, MetricVector};
use crate::matching::embedding::EmbeddingSpec;

pub const RUNLOG_SCHEMA: &str = "runlog/v1";

#[derive(Debug, Error)]
pub enum LogError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {message}")]
    Schema {
        path: String,
        line: usize,
        message: String,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> LogError {
    LogError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// First line of every run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub schema: String,
    pub model: String,
    pub endpoint_kind: String,
    pub cases: String,
    pub repetitions: u32,
    pub seed: u64,
    pub threshold: f64,
    pub embedding: EmbeddingSpec,
    pub created_unix: u64,
}

/// One scored gold/injected pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub rep: u32,
    pub case: crate::dataset::InjectionCase,
    pub gold: crate::client::ModelOutput,
    pub injected: crate::client::ModelOutput,
    pub token_metrics: MetricVector,
    pub sequence_metrics: MetricVector,
}

/// A case that failed without aborting the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub rep: u32,
    pub case_id: String,
    pub phase: Option<Phase>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Record {
    Result(ResultRecord),
    Error(ErrorRecord),
    Annotation(Annotation),
}

/// Serializing writer. Every record is flushed as soon as it is appended.
pub struct RunLogWriter {
    writer: BufWriter<File>,
    path: String,
}

impl RunLogWriter {
    /// Creates the log and writes the header line.
    pub fn create(path: &Path, header: &RunHeader) -> Result<Self, LogError> {
        let file = File::create(path).map_err(|e| io_err(path, e))?;
        let mut writer = Self {
            writer: BufWriter::new(file),
            path: path.display().to_string(),
        };
        writer.write_line(&serde_json::to_string(header).expect("header serializes"))?;
        Ok(writer)
    }

    /// Opens an existing log for appending (annotations).
    pub fn append(path: &Path) -> Result<Self, LogError> {
        let file = OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|e| io_err(path, e))?;
        Ok(Self {
            writer: BufWriter::new(file),
            path: path.display().to_string(),
        })
    }

    fn write_line(&mut self, line: &str) -> Result<(), LogError> {
        let io = |e| LogError::Io {
            path: self.path.clone(),
            source: e,
        };
        writeln!(self.writer, "{line}").map_err(io)?;
        self.writer.flush().map_err(io)
    }

    pub fn append_record(&mut self, record: &Record) -> Result<(), LogError> {
        self.write_line(&serde_json::to_string(record).expect("record serializes"))
    }
}

/// A parsed run log.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub header: RunHeader,
    pub results: Vec<ResultRecord>,
    pub errors: Vec<ErrorRecord>,
    pub annotations: Vec<Annotation>,
}

impl RunLog {
    pub fn load(path: &Path) -> Result<Self, LogError> {
        let content = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let schema = |line: usize, message: String| LogError::Schema {
            path: path.display().to_string(),
            line,
            message,
        };
        let mut lines = content.lines().enumerate();
        let (_, header_line) = lines
            .next()
            .ok_or_else(|| schema(1, "empty run log".to_string()))?;
        let header: RunHeader = serde_json::from_str(header_line)
            .map_err(|e| schema(1, format!("bad header: {e}")))?;
        if header.schema != RUNLOG_SCHEMA {
            return Err(schema(
                1,
                format!("unsupported schema '{}', expected '{RUNLOG_SCHEMA}'", header.schema),
            ));
        }
        let mut log = Self {
            header,
            results: Vec::new(),
            errors: Vec::new(),
            annotations: Vec::new(),
        };
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let record: Record =
                serde_json::from_str(line).map_err(|e| schema(idx + 1, e.to_string()))?;
            match record {
                Record::Result(r) => log.results.push(r),
                Record::Error(e) => log.errors.push(e),
                Record::Annotation(a) => log.annotations.push(a),
            }
        }
        Ok(log)
    }

    /// The latest annotation per case id, in file (append) order.
    pub fn latest_annotations(&self) -> std::collections::BTreeMap<String, Annotation> {
        let mut latest = std::collections::BTreeMap::new();
        for a in &self.annotations {
            latest.insert(a.case_id.clone(), a.clone());
        }
        latest
    }

    /// Joins results with their latest annotation.
    pub fn case_results(&self) -> Vec<CaseResult> {
        let annotations = self.latest_annotations();
        self.results
            .iter()
            .map(|r| CaseResult {
                case: r.case.clone(),
                gold: r.gold.clone(),
                injected: r.injected.clone(),
                token_metrics: r.token_metrics.clone(),
                sequence_metrics: r.sequence_metrics.clone(),
                annotation: annotations.get(&r.case.id).cloned(),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::client::{classify, mock_model, MockResponse};
    use crate::dataset::render_case;
    use crate::harness::score_pair;
    use crate::matching::embedding::mock_embedder;
    use std::collections::BTreeMap;
    use tempfile::tempdir;

    fn sample_header() -> RunHeader {
        RunHeader {
            schema: RUNLOG_SCHEMA.to_string(),
            model: "mock".to_string(),
            endpoint_kind: "mock".to_string(),
            cases: "test".to_string(),
            repetitions: 1,
            seed: 42,
            threshold: 0.5,
            embedding: EmbeddingSpec::Mock { dimension: 8, seed: 42 },
            created_unix: 0,
        }
    }

    fn sample_result() -> ResultRecord {
        let case = render_case("Classify this.", "X", "Y", "c1").unwrap();
        let mut fixtures = BTreeMap::new();
        fixtures.insert("Classify this.".to_string(), MockResponse::from("gold"));
        let config = mock_model(fixtures);
        let gold = classify(&case.base_prompt, &config).unwrap();
        let injected = classify(&case.injected_prompt, &config).unwrap();
        let embedder = mock_embedder(8, 42);
        let (token_metrics, sequence_metrics) = score_pair(&gold, &injected, &embedder).unwrap();
        ResultRecord {
            rep: 0,
            case,
            gold,
            injected,
            token_metrics,
            sequence_metrics,
        }
    }

    #[test]
    fn round_trips_records() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("run.jsonl");
        let header = sample_header();
        let result = sample_result();
        let annotation = Annotation {
            case_id: "c1".to_string(),
            changed: true,
            annotator: "tester".to_string(),
            note: Some("clear flip".to_string()),
            timestamp_unix: 12345,
        };
        {
            let mut writer = RunLogWriter::create(&path, &header).unwrap();
            writer.append_record(&Record::Result(result.clone())).unwrap();
            writer
                .append_record(&Record::Error(ErrorRecord {
                    rep: 0,
                    case_id: "c2".to_string(),
                    phase: Some(Phase::Gold),
                    message: "endpoint down".to_string(),
                }))
                .unwrap();
        }
        {
            let mut appender = RunLogWriter::append(&path).unwrap();
            appender
                .append_record(&Record::Annotation(annotation.clone()))
                .unwrap();
        }
        let log = RunLog::load(&path).unwrap();
        assert_eq!(log.header, header);
        assert_eq!(log.results, vec![result]);
        assert_eq!(log.errors.len(), 1);
        assert_eq!(log.annotations, vec![annotation.clone()]);
        let joined = log.case_results();
        assert_eq!(joined.len(), 1);
        assert_eq!(joined[0].annotation, Some(annotation));
    }

    #[test]
    fn latest_annotation_wins() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("run.jsonl");
        let mut writer = RunLogWriter::create(&path, &sample_header()).unwrap();
        writer.append_record(&Record::Result(sample_result())).unwrap();
        for (changed, ts) in [(true, 1), (false, 2)] {
            writer
                .append_record(&Record::Annotation(Annotation {
                    case_id: "c1".to_string(),
                    changed,
                    annotator: "tester".to_string(),
                    note: None,
                    timestamp_unix: ts,
                }))
                .unwrap();
        }
        drop(writer);
        let log = RunLog::load(&path).unwrap();
        let latest = log.latest_annotations();
        assert!(!latest.get("c1").unwrap().changed);
    }

    #[test]
    fn rejects_malformed_lines_with_line_numbers() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("run.jsonl");
        let header = serde_json::to_string(&sample_header()).unwrap();
        std::fs::write(&path, format!("{header}\n{{\"type\":\"bogus\"}}\n")).unwrap();
        match RunLog::load(&path).unwrap_err() {
            LogError::Schema { line, .. } => assert_eq!(line, 2),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_wrong_schema_version() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("run.jsonl");
        let mut header = sample_header();
        header.schema = "runlog/v999".to_string();
        std::fs::write(&path, serde_json::to_string(&header).unwrap()).unwrap();
        assert!(matches!(
            RunLog::load(&path).unwrap_err(),
            LogError::Schema { line: 1, .. }
        ));
    }
}
