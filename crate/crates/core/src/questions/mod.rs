//! Question generation: prompt assembly, completion calls and output parsing.

mod generate;
mod parser;
mod prompt;

pub use generate::{generate_questions, GenerationConfig, GenerationOutput, PromptWarnings, STOP_SEQUENCE};
pub use parser::{
    parse_generation_output, render_generation, LineSpan, ParseWarning, ParsedElement, ParsedGeneration, MAX_CHOICES,
    MAX_QUESTIONS_PER_ELEMENT,
};
pub use prompt::{build_generation_prompt, ExampleSet, GenerationPrompt};

#[derive(Debug, thiserror::Error)]
pub enum QuestionGenError {
    #[error("caption is empty")]
    EmptyCaption,
    #[error("example set: {0}")]
    ExampleSet(String),
    #[error("generation config: {0}")]
    Config(String),
    #[error(transparent)]
    Backend(#[from] crate::backend::BackendError),
}
