//! Keeps a generated question only when a text QA model, reading the prompt,
//! agrees with the generator's gold answer.
//!
//! For each tuple the QA backend answers twice: once free-form and once given
//! the choices. The tuple survives when the multiple-choice answer equals gold
//! and the free-form answer's word-level F1 against gold is strictly above the
//! threshold.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::backend::{map_bounded, BackendClient, BackendEndpoint, BackendError, Capability, QaRequest, QaResponse};
use crate::benchmark::{QuestionAnswerTuple, TextPrompt};
use crate::text::{answers_match, token_f1};

pub const DEFAULT_F1_THRESHOLD: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub tuple_id: String,
    pub freeform_answer: String,
    pub mc_answer: String,
    pub f1: f64,
    pub kept: bool,
}

impl FilterVerdict {
    pub fn decide(tuple: &QuestionAnswerTuple, freeform: String, mc: String, threshold: f64) -> Self {
        let f1 = token_f1(&freeform, &tuple.answer);
        let kept = answers_match(&mc, &tuple.answer) && f1 > threshold;
        FilterVerdict {
            tuple_id: tuple.id.clone(),
            freeform_answer: freeform,
            mc_answer: mc,
            f1,
            kept,
        }
    }

    fn failed(tuple: &QuestionAnswerTuple) -> Self {
        FilterVerdict {
            tuple_id: tuple.id.clone(),
            freeform_answer: String::new(),
            mc_answer: String::new(),
            f1: 0.0,
            kept: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TupleVerdict {
    pub verdict: FilterVerdict,
    /// Set when the multiple-choice answer was not one of the choices.
    pub warning: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum FilterError {
    #[error("tuple `{tuple_id}` references unknown prompt `{prompt_id}`")]
    UnknownPrompt { tuple_id: String, prompt_id: String },
    #[error("every QA request failed: {0}")]
    TotalBackendFailure(BackendError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

pub fn filter_tuple(
    tuple: &QuestionAnswerTuple,
    prompt_text: &str,
    client: &BackendClient,
    qa: &BackendEndpoint,
    threshold: f64,
) -> Result<TupleVerdict, BackendError> {
    qa.require(Capability::Qa)?;
    let free: QaResponse = client.call(
        qa,
        Capability::Qa,
        &QaRequest {
            context: prompt_text.to_string(),
            question: tuple.question.clone(),
            choices: None,
        },
    )?;
    let mc: QaResponse = client.call(
        qa,
        Capability::Qa,
        &QaRequest {
            context: prompt_text.to_string(),
            question: tuple.question.clone(),
            choices: Some(tuple.choices.clone()),
        },
    )?;
    let warning = tuple.choice_index(&mc.answer).is_none().then(|| {
        format!(
            "tuple `{}`: multiple-choice answer `{}` is not among the choices",
            tuple.id, mc.answer
        )
    });
    Ok(TupleVerdict {
        verdict: FilterVerdict::decide(tuple, free.answer, mc.answer, threshold),
        warning,
    })
}

#[derive(Debug, Clone, Default)]
pub struct FilterReport {
    pub kept: Vec<QuestionAnswerTuple>,
    /// One verdict per input tuple, in input order.
    pub verdicts: Vec<FilterVerdict>,
    pub warnings: Vec<String>,
    pub failures: Vec<(String, BackendError)>,
}

/// Filters `tuples` in order. Individual backend failures are recorded and
/// the tuple is rejected; the run aborts only when every request fails.
pub fn filter_benchmark(
    tuples: &[QuestionAnswerTuple],
    prompts: &[TextPrompt],
    client: &BackendClient,
    qa: &BackendEndpoint,
    threshold: f64,
) -> Result<FilterReport, FilterError> {
    qa.require(Capability::Qa)?;
    let texts: HashMap<&str, &str> = prompts.iter().map(|p| (p.id.as_str(), p.text.as_str())).collect();
    let contexts = tuples
        .iter()
        .map(|t| {
            texts
                .get(t.prompt_id.as_str())
                .copied()
                .ok_or_else(|| FilterError::UnknownPrompt {
                    tuple_id: t.id.clone(),
                    prompt_id: t.prompt_id.clone(),
                })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let results = map_bounded(tuples, client.workers(), |i, t| {
        filter_tuple(t, contexts[i], client, qa, threshold)
    });

    let mut report = FilterReport::default();
    for (t, r) in tuples.iter().zip(results) {
        match r {
            Ok(tv) => {
                if tv.verdict.kept {
                    report.kept.push(t.clone());
                }
                report.warnings.extend(tv.warning);
                report.verdicts.push(tv.verdict);
            }
            Err(e) => {
                report.verdicts.push(FilterVerdict::failed(t));
                report.failures.push((t.id.clone(), e));
            }
        }
    }
    if !tuples.is_empty() && report.failures.len() == tuples.len() {
        let (_, first) = report.failures.swap_remove(0);
        return Err(FilterError::TotalBackendFailure(first));
    }
    Ok(report)
}
