//! Parser for the block format the question generator emits:
//!
//! ```text
//! Entities: dog
//! Activities:
//! Colors: red
//! Counting:
//! Other attributes:
//! Questions and answers are below:
//! About dog (animal):
//! Q: is this a dog?
//! Choices: yes, no
//! A: yes
//! ```
//!
//! Parsing never fails. Anything that does not fit the grammar is skipped and
//! reported as a [`ParseWarning`].

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::benchmark::{validate_choices, ElementCategory, QuestionAnswerTuple, QuestionType};

pub const MAX_QUESTIONS_PER_ELEMENT: usize = 2;
pub const MAX_CHOICES: usize = 6;

const HEADERS: [&str; 5] = ["Entities:", "Activities:", "Colors:", "Counting:", "Other attributes:"];
const QA_MARKER: &str = "Questions and answers are below:";

/// Inclusive 1-based line range within the completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LineSpan {
    pub start: usize,
    pub end: usize,
}

impl LineSpan {
    fn line(n: usize) -> Self {
        LineSpan { start: n, end: n }
    }
}

impl fmt::Display for LineSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.start == self.end {
            write!(f, "line {}", self.start)
        } else {
            write!(f, "lines {}-{}", self.start, self.end)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseWarning {
    pub span: LineSpan,
    pub reason: String,
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.reason)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedElement {
    pub text: String,
    pub category: ElementCategory,
}

/// Elements in order of their first `About` block, and their tuples in the
/// same order. Tuples carry ids `q0, q1, ...` and an empty `prompt_id`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParsedGeneration {
    pub elements: Vec<ParsedElement>,
    pub tuples: Vec<QuestionAnswerTuple>,
    pub warnings: Vec<ParseWarning>,
}

struct Triple {
    question: String,
    choices: Vec<String>,
    answer: String,
    span: LineSpan,
}

#[derive(Default)]
struct Partial {
    question: Option<(String, usize)>,
    choices: Option<String>,
}

struct Block {
    element: String,
    category: ElementCategory,
    start: usize,
    triples: Vec<Triple>,
    partial: Partial,
}

struct ElementEntry {
    element: ParsedElement,
    triples: Vec<Triple>,
}

#[derive(Default)]
struct Parser {
    warnings: Vec<ParseWarning>,
    header_elements: Vec<(String, usize)>,
    entries: Vec<ElementEntry>,
    index: HashMap<String, usize>,
    block: Option<Block>,
}

impl Parser {
    fn warn(&mut self, span: LineSpan, reason: impl Into<String>) {
        self.warnings.push(ParseWarning {
            span,
            reason: reason.into(),
        });
    }

    fn line(&mut self, n: usize, raw: &str) {
        let line = raw.trim();
        if line.is_empty() || line == QA_MARKER {
            return;
        }
        if let Some(header) = HEADERS.iter().find(|h| line.starts_with(**h)) {
            self.finish_block(n.saturating_sub(1));
            for item in line[header.len()..].split(',') {
                let item = item.trim();
                if !item.is_empty() {
                    self.header_elements.push((item.to_string(), n));
                }
            }
            return;
        }
        if line.starts_with("About ") {
            self.finish_block(n.saturating_sub(1));
            self.start_block(n, line);
            return;
        }
        for (prefix, kind) in [("Q:", 0), ("Choices:", 1), ("A:", 2)] {
            if let Some(rest) = line.strip_prefix(prefix) {
                self.qa_line(n, kind, rest.trim());
                return;
            }
        }
        self.warn(LineSpan::line(n), format!("unrecognized line `{}`", abbreviate(line)));
    }

    fn start_block(&mut self, n: usize, line: &str) {
        let parsed = line
            .strip_prefix("About ")
            .and_then(|rest| rest.strip_suffix(':'))
            .and_then(|rest| {
                let open = rest.rfind(" (")?;
                let cat = rest[open + 2..].strip_suffix(')')?;
                Some((rest[..open].trim(), cat.trim()))
            });
        let Some((element, raw_category)) = parsed.filter(|(e, _)| !e.is_empty()) else {
            self.warn(
                LineSpan::line(n),
                format!("malformed block header `{}`", abbreviate(line)),
            );
            return;
        };
        let category = raw_category.parse().unwrap_or_else(|_| {
            self.warn(
                LineSpan::line(n),
                format!("unknown category `{raw_category}` for `{element}`, using other"),
            );
            ElementCategory::Other
        });
        self.block = Some(Block {
            element: element.to_string(),
            category,
            start: n,
            triples: Vec::new(),
            partial: Partial::default(),
        });
    }

    fn qa_line(&mut self, n: usize, kind: u8, value: &str) {
        let Some(block) = self.block.as_mut() else {
            self.warn(LineSpan::line(n), "question text outside an About block");
            return;
        };
        let mut pending = Vec::new();
        match kind {
            0 => {
                if let Some((_, start)) = block.partial.question.take() {
                    pending.push((LineSpan { start, end: n - 1 }, "question without an answer"));
                }
                block.partial = Partial {
                    question: Some((value.to_string(), n)),
                    choices: None,
                };
            }
            1 => {
                if block.partial.question.is_none() {
                    pending.push((LineSpan::line(n), "choices without a question"));
                } else if block.partial.choices.is_some() {
                    pending.push((LineSpan::line(n), "second choices line for one question"));
                } else {
                    block.partial.choices = Some(value.to_string());
                }
            }
            _ => match (block.partial.question.take(), block.partial.choices.take()) {
                (Some((question, start)), Some(choices)) => {
                    let choices: Vec<String> = choices
                        .split(',')
                        .map(|c| c.trim().to_string())
                        .filter(|c| !c.is_empty())
                        .collect();
                    block.triples.push(Triple {
                        question,
                        choices,
                        answer: value.to_string(),
                        span: LineSpan { start, end: n },
                    });
                }
                (Some((_, start)), None) => pending.push((LineSpan { start, end: n }, "answer without choices")),
                (None, _) => pending.push((LineSpan::line(n), "answer without a question")),
            },
        }
        for (span, reason) in pending {
            self.warn(span, reason);
        }
    }

    fn finish_block(&mut self, last_line: usize) {
        let Some(mut block) = self.block.take() else { return };
        if let Some((_, start)) = block.partial.question.take() {
            self.warn(
                LineSpan {
                    start,
                    end: last_line.max(start),
                },
                "question without an answer",
            );
        }

        let mut valid = Vec::new();
        for mut t in std::mem::take(&mut block.triples) {
            if t.question.is_empty() {
                self.warn(t.span, "empty question");
                continue;
            }
            if t.choices.len() > MAX_CHOICES {
                self.warn(
                    t.span,
                    format!("{} choices truncated to {MAX_CHOICES}", t.choices.len()),
                );
                t.choices.truncate(MAX_CHOICES);
            }
            if let Err(reason) = validate_choices(&t.choices, &t.answer) {
                self.warn(t.span, reason);
                continue;
            }
            valid.push(t);
        }

        let key = block.element.to_lowercase();
        let span = LineSpan {
            start: block.start,
            end: last_line.max(block.start),
        };
        match self.index.get(&key) {
            Some(&i) => {
                self.warn(
                    span,
                    format!("repeated block for `{}` merged into the first", block.element),
                );
                let entry = &mut self.entries[i];
                let room = MAX_QUESTIONS_PER_ELEMENT - entry.triples.len();
                if valid.len() > room {
                    self.warnings.push(ParseWarning {
                        span,
                        reason: format!(
                            "`{}` exceeds {MAX_QUESTIONS_PER_ELEMENT} questions, extra dropped",
                            block.element
                        ),
                    });
                }
                self.entries[i].triples.extend(valid.into_iter().take(room));
            }
            None => {
                if valid.is_empty() {
                    self.warn(span, format!("no valid questions for `{}`", block.element));
                    return;
                }
                if valid.len() > MAX_QUESTIONS_PER_ELEMENT {
                    self.warn(
                        span,
                        format!(
                            "`{}` exceeds {MAX_QUESTIONS_PER_ELEMENT} questions, extra dropped",
                            block.element
                        ),
                    );
                    valid.truncate(MAX_QUESTIONS_PER_ELEMENT);
                }
                self.index.insert(key, self.entries.len());
                self.entries.push(ElementEntry {
                    element: ParsedElement {
                        text: block.element,
                        category: block.category,
                    },
                    triples: valid,
                });
            }
        }
    }

    fn finish(mut self, last_line: usize) -> ParsedGeneration {
        self.finish_block(last_line);
        let headers = std::mem::take(&mut self.header_elements);
        for (text, line) in headers {
            if !self.index.contains_key(&text.to_lowercase()) {
                self.warn(LineSpan::line(line), format!("element `{text}` has no questions"));
            }
        }

        let mut out = ParsedGeneration {
            warnings: self.warnings,
            ..Default::default()
        };
        for entry in self.entries {
            for t in entry.triples {
                let question_type = QuestionType::infer(&t.choices);
                out.tuples.push(QuestionAnswerTuple {
                    id: format!("q{}", out.tuples.len()),
                    prompt_id: String::new(),
                    element: entry.element.text.clone(),
                    category: entry.element.category,
                    question: t.question,
                    choices: t.choices,
                    answer: t.answer,
                    question_type,
                });
            }
            out.elements.push(entry.element);
        }
        if out.tuples.is_empty() && out.warnings.is_empty() {
            out.warnings.push(ParseWarning {
                span: LineSpan::line(last_line.max(1)),
                reason: "completion contains no questions".into(),
            });
        }
        out
    }
}

fn abbreviate(s: &str) -> String {
    match s.char_indices().nth(60) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s.to_string(),
    }
}

/// Parses one completion. A leading `Description:` line is skipped; a later
/// one ends the parse.
pub fn parse_generation_output(completion: &str) -> ParsedGeneration {
    let mut parser = Parser::default();
    let mut seen_content = false;
    let mut last = 0;
    for (i, raw) in completion.lines().enumerate() {
        let n = i + 1;
        let trimmed = raw.trim();
        if trimmed.starts_with("Description:") {
            if seen_content {
                break;
            }
            seen_content = true;
            last = n;
            continue;
        }
        if !trimmed.is_empty() {
            seen_content = true;
        }
        parser.line(n, raw);
        last = n;
    }
    parser.finish(last)
}

fn header_for(category: ElementCategory) -> usize {
    match category {
        ElementCategory::Object
        | ElementCategory::Human
        | ElementCategory::Animal
        | ElementCategory::Food
        | ElementCategory::Location => 0,
        ElementCategory::Activity => 1,
        ElementCategory::Color => 2,
        ElementCategory::Counting => 3,
        ElementCategory::Attribute
        | ElementCategory::Material
        | ElementCategory::Spatial
        | ElementCategory::Shape
        | ElementCategory::Other => 4,
    }
}

/// Writes a parsed generation back into the block format.
pub fn render_generation(parsed: &ParsedGeneration) -> String {
    let mut headers: [Vec<&str>; 5] = Default::default();
    for e in &parsed.elements {
        headers[header_for(e.category)].push(&e.text);
    }
    let mut out = String::new();
    for (name, items) in HEADERS.iter().zip(&headers) {
        out.push_str(name);
        if !items.is_empty() {
            out.push(' ');
            out.push_str(&items.join(", "));
        }
        out.push('\n');
    }
    out.push_str(QA_MARKER);
    out.push('\n');
    for e in &parsed.elements {
        out.push_str(&format!("About {} ({}):\n", e.text, e.category));
        for t in parsed.tuples.iter().filter(|t| t.element == e.text) {
            out.push_str(&format!(
                "Q: {}\nChoices: {}\nA: {}\n",
                t.question,
                t.choices.join(", "),
                t.answer
            ));
        }
    }
    out
}
