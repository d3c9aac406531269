//! Prompts, question-answer tuples and the benchmark that groups them.

mod category;
mod import;
mod io;
mod stats;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use category::{ElementCategory, ReportCategory, UnknownCategory};
pub use import::{import_released_tifa, import_released_tifa_files, ImportOutcome};
pub use io::{load_benchmark, load_records, read_jsonl, save_benchmark, write_jsonl, RecordSet};
pub use stats::{benchmark_stats, StatsSummary};

use crate::text::normalize_answer;

#[derive(Debug, thiserror::Error)]
pub enum BenchmarkError {
    #[error("line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("line {line}: tuple `{tuple_id}` references unknown prompt `{prompt_id}`")]
    DanglingPromptRef {
        line: usize,
        tuple_id: String,
        prompt_id: String,
    },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("prompt `{0}` has no questions")]
    PromptWithoutQuestions(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptSource {
    Coco,
    Drawbench,
    Partiprompt,
    Paintskill,
    Custom,
}

impl PromptSource {
    pub const ALL: [PromptSource; 5] = [
        PromptSource::Coco,
        PromptSource::Drawbench,
        PromptSource::Partiprompt,
        PromptSource::Paintskill,
        PromptSource::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptSource::Coco => "coco",
            PromptSource::Drawbench => "drawbench",
            PromptSource::Partiprompt => "partiprompt",
            PromptSource::Paintskill => "paintskill",
            PromptSource::Custom => "custom",
        }
    }
}

impl FromStr for PromptSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase();
        PromptSource::ALL
            .into_iter()
            .find(|p| p.as_str() == key)
            .ok_or_else(|| format!("unknown prompt source `{s}`"))
    }
}

impl fmt::Display for PromptSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextPrompt {
    pub id: String,
    pub text: String,
    pub source: PromptSource,
}

impl TextPrompt {
    pub const MIN_WORDS: usize = 3;

    pub fn new(id: impl Into<String>, text: impl Into<String>, source: PromptSource) -> Result<Self, String> {
        let prompt = TextPrompt {
            id: id.into(),
            text: text.into(),
            source,
        };
        prompt.validate()?;
        Ok(prompt)
    }

    pub fn word_count(&self) -> usize {
        self.text.split_whitespace().count()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("prompt id is empty".into());
        }
        if self.text.trim().is_empty() {
            return Err(format!("prompt `{}` has empty text", self.id));
        }
        if self.word_count() < Self::MIN_WORDS {
            return Err(format!(
                "prompt `{}` has {} words, need at least {}",
                self.id,
                self.word_count(),
                Self::MIN_WORDS
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionType {
    Binary,
    MultipleChoice,
}

impl QuestionType {
    /// Binary iff the normalized choices are exactly `{yes, no}`.
    pub fn infer(choices: &[String]) -> QuestionType {
        let mut norm: Vec<String> = choices.iter().map(|c| normalize_answer(c)).collect();
        norm.sort();
        if norm == ["no", "yes"] {
            QuestionType::Binary
        } else {
            QuestionType::MultipleChoice
        }
    }
}

/// One generated question with its choices and gold answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionAnswerTuple {
    pub id: String,
    pub prompt_id: String,
    pub element: String,
    pub category: ElementCategory,
    pub question: String,
    pub choices: Vec<String>,
    pub answer: String,
    pub question_type: QuestionType,
}

impl QuestionAnswerTuple {
    /// Builds a tuple, inferring `question_type` from the choices.
    pub fn new(
        id: impl Into<String>,
        prompt_id: impl Into<String>,
        element: impl Into<String>,
        category: ElementCategory,
        question: impl Into<String>,
        choices: Vec<String>,
        answer: impl Into<String>,
    ) -> Result<Self, String> {
        let question_type = QuestionType::infer(&choices);
        let t = QuestionAnswerTuple {
            id: id.into(),
            prompt_id: prompt_id.into(),
            element: element.into(),
            category,
            question: question.into(),
            choices,
            answer: answer.into(),
            question_type,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("tuple id is empty".into());
        }
        if self.question.trim().is_empty() {
            return Err(format!("tuple `{}` has an empty question", self.id));
        }
        validate_choices(&self.choices, &self.answer).map_err(|e| format!("tuple `{}`: {e}", self.id))?;
        if QuestionType::infer(&self.choices) != self.question_type {
            return Err(format!(
                "tuple `{}`: question_type {:?} disagrees with choices {:?}",
                self.id, self.question_type, self.choices
            ));
        }
        Ok(())
    }

    /// Index of the choice matching `answer` after normalization.
    pub fn choice_index(&self, answer: &str) -> Option<usize> {
        let target = normalize_answer(answer);
        self.choices.iter().position(|c| normalize_answer(c) == target)
    }

    pub fn is_correct(&self, answer: &str) -> bool {
        normalize_answer(answer) == normalize_answer(&self.answer)
    }
}

/// Choice-list rules shared by loading and parsing: at least two entries,
/// no duplicates after normalization, gold answer among them.
pub fn validate_choices(choices: &[String], answer: &str) -> Result<(), String> {
    if choices.len() < 2 {
        return Err(format!("need at least 2 choices, got {}", choices.len()));
    }
    let mut seen = HashSet::new();
    for c in choices {
        if !seen.insert(normalize_answer(c)) {
            return Err(format!("duplicate choice `{c}`"));
        }
    }
    if !seen.contains(&normalize_answer(answer)) {
        return Err(format!("answer `{answer}` is not among the choices"));
    }
    Ok(())
}

pub type Metadata = BTreeMap<String, serde_json::Value>;

/// Prompts and their filtered tuples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Benchmark {
    pub prompts: Vec<TextPrompt>,
    pub tuples: Vec<QuestionAnswerTuple>,
    pub metadata: Metadata,
}

impl Benchmark {
    /// Validates every cross-record invariant. Every prompt must own at least
    /// one tuple.
    pub fn new(
        prompts: Vec<TextPrompt>,
        tuples: Vec<QuestionAnswerTuple>,
        metadata: Metadata,
    ) -> Result<Self, BenchmarkError> {
        let b = Benchmark {
            prompts,
            tuples,
            metadata,
        };
        b.check_parts()?;
        Ok(b)
    }

    pub fn prompt(&self, id: &str) -> Option<&TextPrompt> {
        self.prompts.iter().find(|p| p.id == id)
    }

    /// Tuples grouped by prompt id, preserving tuple order.
    pub fn tuples_by_prompt(&self) -> HashMap<&str, Vec<&QuestionAnswerTuple>> {
        group_by_prompt(&self.tuples)
    }
}

pub fn group_by_prompt(tuples: &[QuestionAnswerTuple]) -> HashMap<&str, Vec<&QuestionAnswerTuple>> {
    let mut map: HashMap<&str, Vec<&QuestionAnswerTuple>> = HashMap::new();
    for t in tuples {
        map.entry(t.prompt_id.as_str()).or_default().push(t);
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;

    fn yes_no() -> Vec<String> {
        vec!["yes".into(), "no".into()]
    }

    #[test]
    fn binary_inference_ignores_order_and_case() {
        assert_eq!(QuestionType::infer(&["No".into(), "Yes".into()]), QuestionType::Binary);
        assert_eq!(
            QuestionType::infer(&["yes".into(), "no".into(), "maybe".into()]),
            QuestionType::MultipleChoice
        );
    }

    #[test]
    fn tuple_rejects_answer_outside_choices() {
        let err = QuestionAnswerTuple::new(
            "t",
            "p",
            "dog",
            ElementCategory::Animal,
            "is this a dog?",
            yes_no(),
            "maybe",
        )
        .unwrap_err();
        assert!(err.contains("not among"), "{err}");
    }

    #[test]
    fn tuple_rejects_duplicate_choices_after_normalization() {
        let choices = vec!["The dog".into(), "dog".into(), "cat".into()];
        assert!(QuestionAnswerTuple::new("t", "p", "dog", ElementCategory::Animal, "what?", choices, "cat").is_err());
    }

    #[test]
    fn prompt_needs_three_words() {
        assert!(TextPrompt::new("p", "two words", PromptSource::Custom).is_err());
        assert!(TextPrompt::new("p", "three whole words", PromptSource::Custom).is_ok());
    }

    #[test]
    fn benchmark_rejects_dangling_and_orphans() {
        let p = TextPrompt::new("p1", "A red colored dog.", PromptSource::Custom).unwrap();
        let t = QuestionAnswerTuple::new(
            "t1",
            "p2",
            "dog",
            ElementCategory::Animal,
            "is this a dog?",
            yes_no(),
            "yes",
        )
        .unwrap();
        assert!(matches!(
            Benchmark::new(vec![p.clone()], vec![t], Metadata::new()),
            Err(BenchmarkError::DanglingPromptRef { line: 2, .. })
        ));
        assert!(matches!(
            Benchmark::new(vec![p], vec![], Metadata::new()),
            Err(BenchmarkError::PromptWithoutQuestions(_))
        ));
    }
}
