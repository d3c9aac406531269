//! Importer for the published TIFA v1.0 files.
//!
//! The distribution ships a question file (a JSON array, one object per
//! question, each carrying its caption) and optionally a separate text-input
//! file. Both JSON arrays and line-delimited JSON are accepted. All field names
//! the importer understands live in [`FIELDS`]; anything else is kept under the
//! `unmapped` metadata key.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde_json::{Map, Value};

use super::{
    Benchmark, BenchmarkError, ElementCategory, Metadata, PromptSource, QuestionAnswerTuple, QuestionType, RecordSet,
    TextPrompt,
};

/// Accepted source keys for each canonical field, in priority order.
struct FieldMap {
    prompt_id: &'static [&'static str],
    text: &'static [&'static str],
    source: &'static [&'static str],
    question: &'static [&'static str],
    choices: &'static [&'static str],
    answer: &'static [&'static str],
    element: &'static [&'static str],
    category: &'static [&'static str],
    // Carried by the distribution but recomputed from the choices.
    ignored: &'static [&'static str],
}

const FIELDS: FieldMap = FieldMap {
    prompt_id: &["id", "text_id", "prompt_id"],
    text: &["caption", "text", "prompt"],
    source: &["source"],
    question: &["question"],
    choices: &["choices"],
    answer: &["answer"],
    element: &["element"],
    category: &["element_type", "category"],
    ignored: &["question_type", "answer_type"],
};

#[derive(Debug)]
pub struct ImportOutcome {
    pub benchmark: Benchmark,
    pub warnings: Vec<String>,
}

/// Imports a single question file; prompts are taken from the captions it carries.
pub fn import_released_tifa(path: &Path) -> Result<ImportOutcome, BenchmarkError> {
    import_released_tifa_files(None, path)
}

pub fn import_released_tifa_files(
    text_inputs: Option<&Path>,
    question_answers: &Path,
) -> Result<ImportOutcome, BenchmarkError> {
    let mut importer = Importer::default();
    if let Some(p) = text_inputs {
        for (line, obj) in read_objects(p)? {
            importer.add_prompt(line, &obj)?;
        }
    }
    for (line, obj) in read_objects(question_answers)? {
        importer.add_question(line, &obj)?;
    }
    importer.finish()
}

/// JSON objects with their 1-based line numbers.
type Objects = Vec<(usize, Map<String, Value>)>;

fn read_objects(path: &Path) -> Result<Objects, BenchmarkError> {
    let text = fs::read_to_string(path).map_err(|source| BenchmarkError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let as_object = |line: usize, v: Value| match v {
        Value::Object(m) => Ok((line, m)),
        _ => Err(BenchmarkError::MalformedRecord {
            line,
            reason: "record is not a JSON object".into(),
        }),
    };
    if text.trim_start().starts_with('[') {
        let items: Vec<Value> = serde_json::from_str(&text).map_err(|e| BenchmarkError::MalformedRecord {
            line: e.line(),
            reason: e.to_string(),
        })?;
        // Array inputs report the 1-based record index in place of a line.
        items
            .into_iter()
            .enumerate()
            .map(|(i, v)| as_object(i + 1, v))
            .collect()
    } else {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                let v = serde_json::from_str(l).map_err(|e| BenchmarkError::MalformedRecord {
                    line: i + 1,
                    reason: e.to_string(),
                })?;
                as_object(i + 1, v)
            })
            .collect()
    }
}

fn lookup<'a>(obj: &'a Map<String, Value>, keys: &[&str]) -> Option<(&'a str, &'a Value)> {
    keys.iter()
        .find_map(|k| obj.get_key_value(*k))
        .map(|(k, v)| (k.as_str(), v))
}

fn is_mapped(key: &str) -> bool {
    [
        FIELDS.prompt_id,
        FIELDS.text,
        FIELDS.source,
        FIELDS.question,
        FIELDS.choices,
        FIELDS.answer,
        FIELDS.element,
        FIELDS.category,
        FIELDS.ignored,
    ]
    .iter()
    .any(|keys| keys.contains(&key))
}

fn string_field(
    obj: &Map<String, Value>,
    keys: &[&str],
    line: usize,
    what: &str,
) -> Result<Option<String>, BenchmarkError> {
    match lookup(obj, keys) {
        None | Some((_, Value::Null)) => Ok(None),
        Some((_, Value::String(s))) => Ok(Some(s.clone())),
        Some((_, Value::Number(n))) => Ok(Some(n.to_string())),
        Some((k, _)) => Err(BenchmarkError::MalformedRecord {
            line,
            reason: format!("{what} field `{k}` is not a string"),
        }),
    }
}

fn infer_source(explicit: Option<&str>, id: Option<&str>) -> Option<PromptSource> {
    if let Some(s) = explicit {
        return s.parse().ok();
    }
    let prefix = id?.split(['_', ':', '-']).next()?;
    prefix.parse().ok()
}

#[derive(Default)]
struct Importer {
    prompts: Vec<(usize, TextPrompt)>,
    prompt_index: HashMap<String, usize>,
    tuples: Vec<(usize, QuestionAnswerTuple)>,
    per_prompt_count: HashMap<String, usize>,
    unmapped: BTreeMap<String, Value>,
    warnings: Vec<String>,
}

impl Importer {
    fn note_unmapped(&mut self, record_id: &str, line: usize, obj: &Map<String, Value>) {
        let extra: Map<String, Value> = obj
            .iter()
            .filter(|(k, _)| !is_mapped(k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        if extra.is_empty() {
            return;
        }
        for k in extra.keys() {
            self.warnings
                .push(format!("record {line}: unknown field `{k}` kept in metadata"));
        }
        let slot = self
            .unmapped
            .entry(record_id.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
        if let Value::Object(m) = slot {
            m.extend(extra);
        }
    }

    /// Returns the prompt id, registering a new prompt if needed.
    fn add_prompt(&mut self, line: usize, obj: &Map<String, Value>) -> Result<String, BenchmarkError> {
        let raw_id = string_field(obj, FIELDS.prompt_id, line, "id")?;
        let text = string_field(obj, FIELDS.text, line, "text")?.ok_or_else(|| BenchmarkError::MalformedRecord {
            line,
            reason: "record has no caption".into(),
        })?;
        if let Some(&idx) = raw_id.as_ref().and_then(|id| self.prompt_index.get(id)) {
            let existing = &self.prompts[idx].1;
            if existing.text != text {
                return Err(BenchmarkError::MalformedRecord {
                    line,
                    reason: format!("prompt `{}` appears with two different captions", existing.id),
                });
            }
            return Ok(existing.id.clone());
        }
        let explicit_source = string_field(obj, FIELDS.source, line, "source")?;
        let source = infer_source(explicit_source.as_deref(), raw_id.as_deref()).unwrap_or_else(|| {
            self.warnings
                .push(format!("record {line}: cannot infer prompt source, using custom"));
            PromptSource::Custom
        });
        let id = raw_id.unwrap_or_else(|| format!("{}:{}", source, self.prompts.len()));
        let prompt = TextPrompt {
            id: id.clone(),
            text,
            source,
        };
        prompt
            .validate()
            .map_err(|reason| BenchmarkError::MalformedRecord { line, reason })?;
        self.prompt_index.insert(id.clone(), self.prompts.len());
        self.prompts.push((line, prompt));
        Ok(id)
    }

    fn add_question(&mut self, line: usize, obj: &Map<String, Value>) -> Result<(), BenchmarkError> {
        let malformed = |reason: String| BenchmarkError::MalformedRecord { line, reason };
        let prompt_id = match string_field(obj, FIELDS.text, line, "text")? {
            Some(_) => self.add_prompt(line, obj)?,
            None => string_field(obj, FIELDS.prompt_id, line, "id")?
                .filter(|id| self.prompt_index.contains_key(id))
                .ok_or_else(|| malformed("question has neither a caption nor a known prompt id".into()))?,
        };
        let question = string_field(obj, FIELDS.question, line, "question")?
            .ok_or_else(|| malformed("missing question".into()))?;
        let choices = match lookup(obj, FIELDS.choices) {
            Some((_, Value::Array(items))) => items
                .iter()
                .map(|v| match v {
                    Value::String(s) => Ok(s.clone()),
                    Value::Number(n) => Ok(n.to_string()),
                    other => Err(malformed(format!("choice {other} is not a string"))),
                })
                .collect::<Result<Vec<_>, _>>()?,
            Some(_) => return Err(malformed("choices is not a list".into())),
            None => return Err(malformed("missing choices list".into())),
        };
        let answer =
            string_field(obj, FIELDS.answer, line, "answer")?.ok_or_else(|| malformed("missing answer".into()))?;
        let element = string_field(obj, FIELDS.element, line, "element")?.unwrap_or_default();
        let category = match string_field(obj, FIELDS.category, line, "category")? {
            None => {
                self.warnings
                    .push(format!("record {line}: no element category, using other"));
                ElementCategory::Other
            }
            Some(raw) => parse_released_category(&raw).unwrap_or_else(|| {
                self.warnings
                    .push(format!("record {line}: unknown category `{raw}`, using other"));
                ElementCategory::Other
            }),
        };

        let k = self.per_prompt_count.entry(prompt_id.clone()).or_insert(0);
        let id = format!("{prompt_id}_q{k}");
        *k += 1;
        let tuple = QuestionAnswerTuple {
            id: id.clone(),
            prompt_id,
            element,
            category,
            question,
            question_type: QuestionType::infer(&choices),
            choices,
            answer,
        };
        tuple.validate().map_err(malformed)?;
        self.note_unmapped(&id, line, obj);
        self.tuples.push((line, tuple));
        Ok(())
    }

    fn finish(self) -> Result<ImportOutcome, BenchmarkError> {
        let mut metadata = Metadata::new();
        metadata.insert("format".into(), Value::String("tifa-v1.0".into()));
        if !self.unmapped.is_empty() {
            metadata.insert("unmapped".into(), Value::Object(self.unmapped.into_iter().collect()));
        }
        let set = RecordSet {
            prompts: self.prompts,
            tuples: self.tuples,
            metadata,
        };
        Ok(ImportOutcome {
            benchmark: set.into_benchmark()?,
            warnings: self.warnings,
        })
    }
}

/// The distribution labels people and animals with one combined tag; it is
/// stored as `animal`, which reports under the same bucket.
fn parse_released_category(raw: &str) -> Option<ElementCategory> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "animal/human" | "human/animal" => Some(ElementCategory::Animal),
        other => other.parse().ok(),
    }
}
