//! Answers each question against a generated image and turns the answers
//! into per-image faithfulness scores and aggregate reports.

mod answer;
mod report;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backend::BackendError;
use crate::benchmark::{read_jsonl, BenchmarkError};

pub use answer::{
    answer_question, encode_image, score_image, score_images, select_choice, AnswerOutcome, ChoiceSelection,
    ImageScore, ScoringRun,
};
pub use report::{
    aggregate_by_model, aggregate_report, attribute_errors, render_markdown, report_table, ErrorAttribution,
    FaithfulnessReport, ModelReports, ReportCounts,
};

/// An image produced by a text-to-image system for one prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRef {
    pub image_id: String,
    pub prompt_id: String,
    pub path: PathBuf,
    pub model_tag: String,
}

/// One question answered against one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqaAnswerRecord {
    pub tuple_id: String,
    pub image_id: String,
    /// Raw answer of a free-form backend; empty when the backend chose directly.
    pub freeform: String,
    pub chosen: String,
    pub correct: bool,
    /// Similarity of the free-form answer to each choice, when computed.
    /// Kept in memory only; the records file omits it.
    #[serde(skip)]
    pub similarity_scores: Option<Vec<f64>>,
}

/// Exact tally of correct answers out of a total.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Score {
    pub correct: u32,
    pub total: u32,
}

impl Score {
    pub fn new(correct: u32, total: u32) -> Self {
        debug_assert!(correct <= total);
        Score { correct, total }
    }

    pub fn push(&mut self, correct: bool) {
        self.total += 1;
        self.correct += u32::from(correct);
    }

    pub fn merge(&mut self, other: Score) {
        self.correct += other.correct;
        self.total += other.total;
    }

    /// `correct / total`, or 0 for an empty tally.
    pub fn ratio(self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            f64::from(self.correct) / f64::from(self.total)
        }
    }
}

impl FromIterator<bool> for Score {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut s = Score::default();
        for c in iter {
            s.push(c);
        }
        s
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScoringError {
    #[error("prompt `{0}` has no questions")]
    NoQuestionsForPrompt(String),
    #[error("cannot decode image {path}: {reason}")]
    ImageDecode { path: String, reason: String },
    #[error("record ({tuple_id}, {image_id}) does not join to a known tuple and image")]
    DanglingRecord { tuple_id: String, image_id: String },
    #[error("duplicate record for ({tuple_id}, {image_id})")]
    DuplicateRecord { tuple_id: String, image_id: String },
    #[error("duplicate image id `{0}`")]
    DuplicateImage(String),
    #[error("image `{image_id}` references unknown prompt `{prompt_id}`")]
    UnknownPrompt { image_id: String, prompt_id: String },
    #[error("choice list is empty")]
    EmptyChoices,
    #[error("free-form answers need a similarity backend")]
    NoSimilarityBackend,
    #[error(transparent)]
    Data(#[from] BenchmarkError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Reads an image manifest. Relative image paths are resolved against the
/// manifest's directory.
pub fn load_manifest(path: &Path) -> Result<Vec<ImageRef>, ScoringError> {
    let mut images: Vec<ImageRef> = read_jsonl(path)?;
    let base = path.parent().unwrap_or(Path::new(""));
    for img in &mut images {
        if img.path.is_relative() {
            img.path = base.join(&img.path);
        }
    }
    Ok(images)
}

pub fn load_answer_records(path: &Path) -> Result<Vec<VqaAnswerRecord>, ScoringError> {
    Ok(read_jsonl(path)?)
}
