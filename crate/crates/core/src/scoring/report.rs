use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{ImageRef, Score, ScoringError, VqaAnswerRecord};
use crate::benchmark::{PromptSource, QuestionAnswerTuple, ReportCategory, TextPrompt};
use crate::table::Table;

/// Exact tallies behind a report's decimal values.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportCounts {
    pub per_image: BTreeMap<String, Score>,
    pub per_category: BTreeMap<ReportCategory, Score>,
}

/// Scores for one set of images. Categories and sources without questions
/// are absent rather than zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaithfulnessReport {
    pub per_image: BTreeMap<String, f64>,
    /// Question-level accuracy pooled over all images.
    pub per_category: BTreeMap<ReportCategory, f64>,
    /// Mean prompt score per prompt source.
    pub per_source: BTreeMap<PromptSource, f64>,
    /// Mean prompt score, where a prompt's score is the mean of its images.
    pub overall: f64,
    pub n_questions: usize,
    pub n_images: usize,
    pub counts: ReportCounts,
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

pub fn aggregate_report(
    records: &[VqaAnswerRecord],
    tuples: &[QuestionAnswerTuple],
    prompts: &[TextPrompt],
    images: &[ImageRef],
) -> Result<FaithfulnessReport, ScoringError> {
    let tuple_by_id: HashMap<&str, &QuestionAnswerTuple> = tuples.iter().map(|t| (t.id.as_str(), t)).collect();
    let image_by_id: HashMap<&str, &ImageRef> = images.iter().map(|i| (i.image_id.as_str(), i)).collect();
    let source_by_prompt: HashMap<&str, PromptSource> = prompts.iter().map(|p| (p.id.as_str(), p.source)).collect();

    let mut counts = ReportCounts::default();
    let mut seen = std::collections::HashSet::new();
    for r in records {
        let dangling = || ScoringError::DanglingRecord {
            tuple_id: r.tuple_id.clone(),
            image_id: r.image_id.clone(),
        };
        let t = tuple_by_id.get(r.tuple_id.as_str()).ok_or_else(dangling)?;
        let img = image_by_id.get(r.image_id.as_str()).ok_or_else(dangling)?;
        if t.prompt_id != img.prompt_id {
            return Err(dangling());
        }
        if !seen.insert((r.tuple_id.as_str(), r.image_id.as_str())) {
            return Err(ScoringError::DuplicateRecord {
                tuple_id: r.tuple_id.clone(),
                image_id: r.image_id.clone(),
            });
        }
        counts.per_image.entry(r.image_id.clone()).or_default().push(r.correct);
        counts
            .per_category
            .entry(t.category.reporting())
            .or_default()
            .push(r.correct);
    }

    // Image scores grouped by prompt, then prompt scores grouped by source.
    // BTreeMaps keep the floating-point summation order fixed.
    let mut by_prompt: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (image_id, score) in &counts.per_image {
        let prompt_id = image_by_id[image_id.as_str()].prompt_id.as_str();
        by_prompt.entry(prompt_id).or_default().push(score.ratio());
    }
    let mut by_source: BTreeMap<PromptSource, Vec<f64>> = BTreeMap::new();
    let mut prompt_scores = Vec::with_capacity(by_prompt.len());
    for (prompt_id, scores) in &by_prompt {
        let source = *source_by_prompt.get(prompt_id).ok_or_else(|| {
            let image_id = images
                .iter()
                .find(|i| i.prompt_id == *prompt_id)
                .map(|i| i.image_id.clone());
            ScoringError::UnknownPrompt {
                image_id: image_id.unwrap_or_default(),
                prompt_id: prompt_id.to_string(),
            }
        })?;
        let s = mean(scores);
        prompt_scores.push(s);
        by_source.entry(source).or_default().push(s);
    }

    Ok(FaithfulnessReport {
        per_image: counts.per_image.iter().map(|(k, s)| (k.clone(), s.ratio())).collect(),
        per_category: counts.per_category.iter().map(|(k, s)| (*k, s.ratio())).collect(),
        per_source: by_source.iter().map(|(k, v)| (*k, mean(v))).collect(),
        overall: mean(&prompt_scores),
        n_questions: records.len(),
        n_images: counts.per_image.len(),
        counts,
    })
}

/// Reports keyed by the model tag of the images.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelReports {
    pub models: BTreeMap<String, FaithfulnessReport>,
}

/// Splits images by `model_tag` and aggregates each group separately.
pub fn aggregate_by_model(
    records: &[VqaAnswerRecord],
    tuples: &[QuestionAnswerTuple],
    prompts: &[TextPrompt],
    images: &[ImageRef],
) -> Result<ModelReports, ScoringError> {
    let tag_by_image: HashMap<&str, &str> = images
        .iter()
        .map(|i| (i.image_id.as_str(), i.model_tag.as_str()))
        .collect();
    let mut groups: BTreeMap<&str, (Vec<ImageRef>, Vec<VqaAnswerRecord>)> = BTreeMap::new();
    for img in images {
        groups.entry(img.model_tag.as_str()).or_default().0.push(img.clone());
    }
    for r in records {
        let tag = tag_by_image
            .get(r.image_id.as_str())
            .ok_or_else(|| ScoringError::DanglingRecord {
                tuple_id: r.tuple_id.clone(),
                image_id: r.image_id.clone(),
            })?;
        groups.get_mut(tag).expect("tag comes from images").1.push(r.clone());
    }
    let mut out = ModelReports::default();
    for (tag, (imgs, recs)) in groups {
        out.models
            .insert(tag.to_string(), aggregate_report(&recs, tuples, prompts, &imgs)?);
    }
    Ok(out)
}

fn percent(v: Option<f64>) -> String {
    v.map(|v| format!("{:.1}", v * 100.0)).unwrap_or_default()
}

/// Categories, then prompt sources, then the overall score as rows; one
/// column per model tag. Values are percentages; rows with no data in any
/// model are dropped and missing cells are left empty.
pub fn report_table(reports: &ModelReports) -> Table {
    let tags: Vec<&String> = reports.models.keys().collect();
    let mut table = Table::new(std::iter::once("category".to_string()).chain(tags.iter().map(|t| t.to_string())));
    for cat in ReportCategory::ALL {
        let cells: Vec<Option<f64>> = reports
            .models
            .values()
            .map(|r| r.per_category.get(&cat).copied())
            .collect();
        if cells.iter().any(Option::is_some) {
            table.push(std::iter::once(cat.as_str().to_string()).chain(cells.into_iter().map(percent)));
        }
    }
    for src in PromptSource::ALL {
        let cells: Vec<Option<f64>> = reports
            .models
            .values()
            .map(|r| r.per_source.get(&src).copied())
            .collect();
        if cells.iter().any(Option::is_some) {
            table.push(std::iter::once(format!("source: {src}")).chain(cells.into_iter().map(percent)));
        }
    }
    table.push(
        std::iter::once("overall".to_string()).chain(
            reports
                .models
                .values()
                .map(|r| percent((r.n_images > 0).then_some(r.overall))),
        ),
    );
    table
}

pub fn render_markdown(reports: &ModelReports) -> String {
    report_table(reports).to_markdown()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorAttribution {
    pub t2i_errors: usize,
    pub vqa_errors: usize,
    pub unjudged: usize,
}

/// Splits wrong answers by whether a human, looking at the same image, got
/// the question right. A human who also misses it points at the image; a
/// human who answers correctly points at the VQA model.
pub fn attribute_errors(
    records: &[VqaAnswerRecord],
    tuples: &[QuestionAnswerTuple],
    human_answers: &HashMap<(String, String), String>,
) -> Result<ErrorAttribution, ScoringError> {
    let tuple_by_id: HashMap<&str, &QuestionAnswerTuple> = tuples.iter().map(|t| (t.id.as_str(), t)).collect();
    let mut out = ErrorAttribution::default();
    for r in records.iter().filter(|r| !r.correct) {
        let t = tuple_by_id
            .get(r.tuple_id.as_str())
            .ok_or_else(|| ScoringError::DanglingRecord {
                tuple_id: r.tuple_id.clone(),
                image_id: r.image_id.clone(),
            })?;
        match human_answers.get(&(r.tuple_id.clone(), r.image_id.clone())) {
            None => out.unjudged += 1,
            Some(h) if t.is_correct(h) => out.vqa_errors += 1,
            Some(_) => out.t2i_errors += 1,
        }
    }
    Ok(out)
}
