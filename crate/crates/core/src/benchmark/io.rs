use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use super::{Benchmark, BenchmarkError, Metadata, QuestionAnswerTuple, TextPrompt};

/// Records read from one or more line-delimited JSON files, each tagged with
/// the line it came from.
///
/// A line is a prompt if it has a `text` key, a tuple if it has a `question`
/// key, and a metadata block if its only key is `metadata`.
#[derive(Debug, Clone, Default)]
pub struct RecordSet {
    pub prompts: Vec<(usize, TextPrompt)>,
    pub tuples: Vec<(usize, QuestionAnswerTuple)>,
    pub metadata: Metadata,
}

impl RecordSet {
    pub fn read(path: &Path) -> Result<Self, BenchmarkError> {
        let text = fs::read_to_string(path).map_err(|source| BenchmarkError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, BenchmarkError> {
        let mut set = RecordSet::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let malformed = |reason: String| BenchmarkError::MalformedRecord { line, reason };
            let value: Value = serde_json::from_str(raw).map_err(|e| malformed(e.to_string()))?;
            let Value::Object(obj) = &value else {
                return Err(malformed("record is not a JSON object".into()));
            };
            if obj.len() == 1 && obj.contains_key("metadata") {
                let Some(Value::Object(meta)) = obj.get("metadata") else {
                    return Err(malformed("metadata must be an object".into()));
                };
                set.metadata.extend(meta.iter().map(|(k, v)| (k.clone(), v.clone())));
            } else if obj.contains_key("question") {
                let t: QuestionAnswerTuple = serde_json::from_value(value).map_err(|e| malformed(e.to_string()))?;
                t.validate().map_err(malformed)?;
                set.tuples.push((line, t));
            } else if obj.contains_key("text") {
                let p: TextPrompt = serde_json::from_value(value).map_err(|e| malformed(e.to_string()))?;
                p.validate().map_err(malformed)?;
                set.prompts.push((line, p));
            } else {
                return Err(malformed("record is neither a prompt nor a question".into()));
            }
        }
        Ok(set)
    }

    pub fn extend(&mut self, other: RecordSet) {
        self.prompts.extend(other.prompts);
        self.tuples.extend(other.tuples);
        self.metadata.extend(other.metadata);
    }

    /// Checks id uniqueness and prompt references. `require_questions` also
    /// rejects prompts that own no tuple.
    pub fn check(&self, require_questions: bool) -> Result<(), BenchmarkError> {
        let mut prompt_ids = HashSet::new();
        for (line, p) in &self.prompts {
            if !prompt_ids.insert(p.id.as_str()) {
                return Err(BenchmarkError::DuplicateId {
                    line: *line,
                    id: p.id.clone(),
                });
            }
        }
        let mut tuple_ids = HashSet::new();
        let mut owned = HashSet::new();
        for (line, t) in &self.tuples {
            if !tuple_ids.insert(t.id.as_str()) {
                return Err(BenchmarkError::DuplicateId {
                    line: *line,
                    id: t.id.clone(),
                });
            }
            if !prompt_ids.contains(t.prompt_id.as_str()) {
                return Err(BenchmarkError::DanglingPromptRef {
                    line: *line,
                    tuple_id: t.id.clone(),
                    prompt_id: t.prompt_id.clone(),
                });
            }
            owned.insert(t.prompt_id.as_str());
        }
        if require_questions {
            if let Some((_, p)) = self.prompts.iter().find(|(_, p)| !owned.contains(p.id.as_str())) {
                return Err(BenchmarkError::PromptWithoutQuestions(p.id.clone()));
            }
        }
        Ok(())
    }

    pub fn into_benchmark(self) -> Result<Benchmark, BenchmarkError> {
        self.check(true)?;
        Ok(self.into_parts())
    }

    /// Drops line numbers without validating.
    pub fn into_parts(self) -> Benchmark {
        Benchmark {
            prompts: self.prompts.into_iter().map(|(_, p)| p).collect(),
            tuples: self.tuples.into_iter().map(|(_, t)| t).collect(),
            metadata: self.metadata,
        }
    }
}

/// Reads and validates any number of record files as a single benchmark.
pub fn load_records<P: AsRef<Path>>(paths: &[P]) -> Result<RecordSet, BenchmarkError> {
    let mut set = RecordSet::default();
    for path in paths {
        set.extend(RecordSet::read(path.as_ref())?);
    }
    Ok(set)
}

pub fn load_benchmark(path: &Path) -> Result<Benchmark, BenchmarkError> {
    RecordSet::read(path)?.into_benchmark()
}

/// Canonical layout: an optional metadata line, then prompts, then tuples.
pub fn save_benchmark(benchmark: &Benchmark, path: &Path) -> Result<(), BenchmarkError> {
    let mut out = Vec::new();
    if !benchmark.metadata.is_empty() {
        let line = serde_json::json!({ "metadata": benchmark.metadata });
        push_line(&mut out, &line);
    }
    for p in &benchmark.prompts {
        push_line(&mut out, p);
    }
    for t in &benchmark.tuples {
        push_line(&mut out, t);
    }
    write_bytes(path, &out)
}

/// Reads one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, BenchmarkError> {
    let text = fs::read_to_string(path).map_err(|source| BenchmarkError::Io {
        path: path.display().to_string(),
        source,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(idx, l)| {
            serde_json::from_str(l).map_err(|e| BenchmarkError::MalformedRecord {
                line: idx + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

/// Writes one compact JSON object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, records: impl IntoIterator<Item = T>) -> Result<(), BenchmarkError> {
    let mut out = Vec::new();
    for r in records {
        push_line(&mut out, &r);
    }
    write_bytes(path, &out)
}

fn push_line<T: Serialize + ?Sized>(out: &mut Vec<u8>, value: &T) {
    serde_json::to_writer(&mut *out, value).expect("in-memory serialization cannot fail");
    out.push(b'\n');
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), BenchmarkError> {
    let io_err = |source| BenchmarkError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut f = fs::File::create(path).map_err(io_err)?;
    f.write_all(bytes).map_err(io_err)
}

impl Benchmark {
    pub(super) fn check_parts(&self) -> Result<(), BenchmarkError> {
        // Line numbers are positions in a canonical save.
        let offset = usize::from(!self.metadata.is_empty());
        let set = RecordSet {
            prompts: self
                .prompts
                .iter()
                .enumerate()
                .map(|(i, p)| (offset + i + 1, p.clone()))
                .collect(),
            tuples: self
                .tuples
                .iter()
                .enumerate()
                .map(|(i, t)| (offset + self.prompts.len() + i + 1, t.clone()))
                .collect(),
            metadata: Metadata::new(),
        };
        for (line, p) in &set.prompts {
            p.validate()
                .map_err(|reason| BenchmarkError::MalformedRecord { line: *line, reason })?;
        }
        for (line, t) in &set.tuples {
            t.validate()
                .map_err(|reason| BenchmarkError::MalformedRecord { line: *line, reason })?;
        }
        set.check(true)
    }
}
