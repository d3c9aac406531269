use serde::Serialize;

use super::StatsError;
use crate::text::normalize_answer;

/// Outcome of resolving two or three annotator answers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "answer", rename_all = "snake_case")]
pub enum Vote {
    Resolved(String),
    /// Two annotators disagree and no third answer exists yet.
    NeedsThird,
    /// Three answers without a strict majority.
    Unresolved,
}

/// Two agreeing answers resolve; two disagreeing need a third; three answers
/// resolve by strict majority. Answers are compared after normalization and
/// the first annotator's spelling of the winner is returned.
pub fn majority_vote<S: AsRef<str>>(answers: &[S]) -> Result<Vote, StatsError> {
    if !(2..=3).contains(&answers.len()) {
        return Err(StatsError::OutOfRange(format!(
            "expected 2 or 3 answers, got {}",
            answers.len()
        )));
    }
    let norm: Vec<String> = answers.iter().map(|a| normalize_answer(a.as_ref())).collect();
    for (i, a) in norm.iter().enumerate() {
        if 2 * norm.iter().filter(|b| *b == a).count() > norm.len() {
            return Ok(Vote::Resolved(answers[i].as_ref().to_string()));
        }
    }
    Ok(if answers.len() == 2 {
        Vote::NeedsThird
    } else {
        Vote::Unresolved
    })
}

/// Likert faithfulness rating from `n` elements with `x` missed, where `x`
/// may count half elements. `none_correct` marks images in which none of the
/// major objects appear.
pub fn likert_rubric(n: u32, x: f64, none_correct: bool) -> Result<u8, StatsError> {
    let half = x * 2.0;
    if !half.is_finite() || half.fract() != 0.0 || half < 0.0 || half > f64::from(u32::MAX) {
        return Err(StatsError::OutOfRange(format!(
            "x = {x} is not a non-negative multiple of 0.5"
        )));
    }
    likert_rubric_half_units(n, half as u32, none_correct)
}

/// [`likert_rubric`] with `x` given in half elements, so every threshold is
/// an exact integer comparison.
pub fn likert_rubric_half_units(n: u32, x_half: u32, none_correct: bool) -> Result<u8, StatsError> {
    if n == 0 {
        return Err(StatsError::OutOfRange("n must be at least 1".into()));
    }
    let (n, h) = (u64::from(n), u64::from(x_half));
    if h > 2 * n {
        return Err(StatsError::OutOfRange(format!(
            "x = {} exceeds n = {n}",
            h as f64 / 2.0
        )));
    }
    Ok(if none_correct {
        1
    } else if h == 0 {
        5
    } else if h <= 4 && 3 * h <= 2 * n {
        // x <= 2 and x <= n/3
        4
    } else if h <= n {
        // x <= n/2
        3
    } else {
        2
    })
}
