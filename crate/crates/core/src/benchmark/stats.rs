use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::{Benchmark, PromptSource, QuestionType, ReportCategory};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsSummary {
    pub prompts: usize,
    pub questions: usize,
    pub binary: usize,
    pub multiple_choice: usize,
    pub by_category: BTreeMap<ReportCategory, usize>,
    pub prompts_by_source: BTreeMap<PromptSource, usize>,
    pub questions_by_source: BTreeMap<PromptSource, usize>,
    pub avg_questions_per_prompt: f64,
    pub avg_words_per_prompt: f64,
}

pub fn benchmark_stats(b: &Benchmark) -> StatsSummary {
    let mut binary = 0;
    let mut multiple_choice = 0;
    let mut by_category = BTreeMap::new();
    let mut prompts_by_source = BTreeMap::new();
    let mut questions_by_source = BTreeMap::new();

    let source_of: HashMap<&str, PromptSource> = b.prompts.iter().map(|p| (p.id.as_str(), p.source)).collect();
    for p in &b.prompts {
        *prompts_by_source.entry(p.source).or_insert(0) += 1;
    }
    for t in &b.tuples {
        match t.question_type {
            QuestionType::Binary => binary += 1,
            QuestionType::MultipleChoice => multiple_choice += 1,
        }
        *by_category.entry(t.category.reporting()).or_insert(0) += 1;
        if let Some(src) = source_of.get(t.prompt_id.as_str()) {
            *questions_by_source.entry(*src).or_insert(0) += 1;
        }
    }

    let n = b.prompts.len();
    let total_words: usize = b.prompts.iter().map(|p| p.word_count()).sum();
    let avg = |total: usize| if n == 0 { 0.0 } else { total as f64 / n as f64 };
    StatsSummary {
        prompts: n,
        questions: b.tuples.len(),
        binary,
        multiple_choice,
        by_category,
        prompts_by_source,
        questions_by_source,
        avg_questions_per_prompt: avg(b.tuples.len()),
        avg_words_per_prompt: avg(total_words),
    }
}
