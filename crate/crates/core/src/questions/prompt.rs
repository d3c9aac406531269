use std::fs;
use std::path::Path;

use super::QuestionGenError;

const BUILTIN_EXAMPLES: &str = include_str!("../../assets/generation_examples.txt");

/// Instruction text plus the fixed in-context examples shown before every caption.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExampleSet {
    pub instruction: String,
    pub examples: Vec<String>,
}

impl ExampleSet {
    /// The shipped fifteen-example set.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_EXAMPLES).expect("bundled example set is well formed")
    }

    pub fn load(path: &Path) -> Result<Self, QuestionGenError> {
        let text =
            fs::read_to_string(path).map_err(|e| QuestionGenError::ExampleSet(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Lines starting with `#` are dropped. The instruction is everything
    /// before the first `Description:` line; each example starts at a
    /// `Description:` line and runs until the next one.
    pub fn parse(text: &str) -> Result<Self, QuestionGenError> {
        let mut instruction = Vec::new();
        let mut examples: Vec<Vec<&str>> = Vec::new();
        for line in text.lines().filter(|l| !l.starts_with('#')) {
            if line.starts_with("Description:") {
                examples.push(vec![line]);
            } else if let Some(current) = examples.last_mut() {
                current.push(line);
            } else {
                instruction.push(line);
            }
        }
        let join = |lines: &[&str]| lines.join("\n").trim_matches('\n').to_string();
        let set = ExampleSet {
            instruction: join(&instruction),
            examples: examples.iter().map(|e| join(e)).collect(),
        };
        if set.examples.is_empty() {
            return Err(QuestionGenError::ExampleSet("no `Description:` examples found".into()));
        }
        if set.instruction.is_empty() {
            return Err(QuestionGenError::ExampleSet("missing instruction text".into()));
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationPrompt {
    pub instruction: String,
    pub examples: Vec<String>,
    pub target_caption: String,
}

impl GenerationPrompt {
    /// Instruction, examples and the target header, separated by blank lines.
    /// The model continues after the final newline.
    pub fn render(&self) -> String {
        let mut out = String::with_capacity(
            self.instruction.len()
                + self.examples.iter().map(|e| e.len() + 2).sum::<usize>()
                + self.target_caption.len()
                + 32,
        );
        out.push_str(&self.instruction);
        out.push_str("\n\n");
        for ex in &self.examples {
            out.push_str(ex);
            out.push_str("\n\n");
        }
        out.push_str("Description: ");
        out.push_str(&self.target_caption);
        out.push('\n');
        out
    }
}

pub fn build_generation_prompt(caption: &str, examples: &ExampleSet) -> Result<GenerationPrompt, QuestionGenError> {
    let caption = caption.trim();
    if caption.is_empty() {
        return Err(QuestionGenError::EmptyCaption);
    }
    if examples.examples.is_empty() {
        return Err(QuestionGenError::ExampleSet("example set is empty".into()));
    }
    Ok(GenerationPrompt {
        instruction: examples.instruction.clone(),
        examples: examples.examples.clone(),
        target_caption: caption.to_string(),
    })
}
