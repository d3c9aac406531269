use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{build_generation_prompt, parse_generation_output, ExampleSet, ParseWarning, QuestionGenError};
use crate::backend::{map_bounded, BackendClient, BackendEndpoint, Capability, CompleteRequest, CompleteResponse};
use crate::benchmark::{QuestionAnswerTuple, TextPrompt};

pub const STOP_SEQUENCE: &str = "\nDescription:";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub temperature: f64,
    pub max_tokens: u32,
    pub stop: Vec<String>,
    pub example_set: Option<PathBuf>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            temperature: 0.0,
            max_tokens: 1024,
            stop: vec![STOP_SEQUENCE.to_string()],
            example_set: None,
        }
    }
}

impl GenerationConfig {
    /// Reads a JSON config. A relative `example_set` path is resolved against
    /// the config file's directory.
    pub fn load(path: &Path) -> Result<Self, QuestionGenError> {
        let text =
            fs::read_to_string(path).map_err(|e| QuestionGenError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: GenerationConfig =
            serde_json::from_str(&text).map_err(|e| QuestionGenError::Config(format!("{}: {e}", path.display())))?;
        if let (Some(set), Some(dir)) = (&cfg.example_set, path.parent()) {
            if set.is_relative() {
                cfg.example_set = Some(dir.join(set));
            }
        }
        Ok(cfg)
    }

    pub fn examples(&self) -> Result<ExampleSet, QuestionGenError> {
        match &self.example_set {
            Some(p) => ExampleSet::load(p),
            None => Ok(ExampleSet::builtin()),
        }
    }

    /// Stop sequences sent to the model; the description header is always included.
    pub fn stop_sequences(&self) -> Vec<String> {
        let mut stop = self.stop.clone();
        if !stop.iter().any(|s| s == STOP_SEQUENCE) {
            stop.push(STOP_SEQUENCE.to_string());
        }
        stop
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptWarnings {
    pub prompt_id: String,
    pub warnings: Vec<ParseWarning>,
}

#[derive(Debug, Clone, Default)]
pub struct GenerationOutput {
    pub tuples: Vec<QuestionAnswerTuple>,
    /// One entry per prompt that produced warnings, in prompt order.
    pub warnings: Vec<PromptWarnings>,
}

/// Issues one completion per prompt and parses the results. Tuple ids are
/// `{prompt_id}_q{n}`; output order follows prompt order.
pub fn generate_questions(
    prompts: &[TextPrompt],
    client: &BackendClient,
    lm: &BackendEndpoint,
    cfg: &GenerationConfig,
) -> Result<GenerationOutput, QuestionGenError> {
    lm.require(Capability::Complete)?;
    let examples = cfg.examples()?;
    let stop = cfg.stop_sequences();
    let results = map_bounded(prompts, client.workers(), |_, p| {
        let rendered = build_generation_prompt(&p.text, &examples)?.render();
        let request = CompleteRequest {
            prompt: rendered,
            temperature: cfg.temperature,
            max_tokens: cfg.max_tokens,
            stop: stop.clone(),
        };
        let resp: CompleteResponse = client.call(lm, Capability::Complete, &request)?;
        Ok::<_, QuestionGenError>(parse_generation_output(&resp.text))
    });

    let mut out = GenerationOutput::default();
    for (p, parsed) in prompts.iter().zip(results) {
        let parsed = parsed?;
        for (n, mut t) in parsed.tuples.into_iter().enumerate() {
            t.id = format!("{}_q{n}", p.id);
            t.prompt_id = p.id.clone();
            out.tuples.push(t);
        }
        if !parsed.warnings.is_empty() {
            out.warnings.push(PromptWarnings {
                prompt_id: p.id.clone(),
                warnings: parsed.warnings,
            });
        }
    }
    Ok(out)
}
