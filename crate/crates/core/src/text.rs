//! Answer normalization and word-level F1.
//!
//! Normalization follows the usual extractive-QA convention: lowercase, drop
//! ASCII punctuation, drop the articles `a`, `an`, `the` as whole tokens, and
//! collapse whitespace. Every equality test between answers in this crate goes
//! through [`normalize_answer`].

use std::collections::HashMap;

const ARTICLES: [&str; 3] = ["a", "an", "the"];

pub fn normalize_answer(text: &str) -> String {
    let lowered = text.to_lowercase();
    let stripped: String = lowered.chars().filter(|c| !c.is_ascii_punctuation()).collect();
    stripped
        .split_whitespace()
        .filter(|tok| !ARTICLES.contains(tok))
        .collect::<Vec<_>>()
        .join(" ")
}

/// `true` when both strings normalize to the same text.
pub fn answers_match(a: &str, b: &str) -> bool {
    normalize_answer(a) == normalize_answer(b)
}

/// Token counts behind a word-level F1 computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenOverlap {
    pub common: usize,
    pub pred_tokens: usize,
    pub gold_tokens: usize,
}

impl TokenOverlap {
    pub fn between(prediction: &str, gold: &str) -> Self {
        let pred = normalize_answer(prediction);
        let gold = normalize_answer(gold);
        let mut gold_counts: HashMap<&str, usize> = HashMap::new();
        for tok in gold.split_whitespace() {
            *gold_counts.entry(tok).or_default() += 1;
        }
        let mut common = 0;
        let mut pred_tokens = 0;
        for tok in pred.split_whitespace() {
            pred_tokens += 1;
            if let Some(n) = gold_counts.get_mut(tok) {
                if *n > 0 {
                    *n -= 1;
                    common += 1;
                }
            }
        }
        TokenOverlap {
            common,
            pred_tokens,
            gold_tokens: gold.split_whitespace().count(),
        }
    }

    /// Harmonic mean of precision and recall.
    ///
    /// Evaluated as `2c / (|pred| + |gold|)`, which is algebraically equal to
    /// `2PR / (P + R)` and rounds once, so exact fractions like 7/10 land on
    /// the same double as the literal threshold.
    pub fn f1(&self) -> f64 {
        if self.common == 0 || self.pred_tokens == 0 || self.gold_tokens == 0 {
            return 0.0;
        }
        (2 * self.common) as f64 / (self.pred_tokens + self.gold_tokens) as f64
    }
}

pub fn token_f1(prediction: &str, gold: &str) -> f64 {
    TokenOverlap::between(prediction, gold).f1()
}
