#![allow(dead_code)]

use std::path::Path;
use std::time::Duration;

use tifa_core::backend::{BackendClient, ClientOptions, RetryPolicy};
use tifa_core::benchmark::{ElementCategory, PromptSource, QuestionAnswerTuple, TextPrompt};

pub fn options(cache: Option<&Path>) -> ClientOptions {
    ClientOptions {
        retry: RetryPolicy {
            base_delay: Duration::from_millis(1),
            max_delay: Duration::from_millis(4),
        },
        timeout: Duration::from_secs(10),
        cache_dir: cache.map(Path::to_path_buf),
        ..ClientOptions::default()
    }
}

pub fn client(cache: Option<&Path>) -> BackendClient {
    BackendClient::new(options(cache)).unwrap()
}

pub fn offline_client(cache: &Path) -> BackendClient {
    BackendClient::new(ClientOptions {
        offline: true,
        ..options(Some(cache))
    })
    .unwrap()
}

/// Writes a small solid-colour image; the format follows the extension.
pub fn write_image(path: &Path, rgb: [u8; 3]) {
    image::RgbImage::from_pixel(4, 3, image::Rgb(rgb)).save(path).unwrap();
}

pub fn prompt(id: &str, text: &str, source: PromptSource) -> TextPrompt {
    TextPrompt::new(id, text, source).unwrap()
}

pub fn binary(id: &str, prompt_id: &str, category: ElementCategory, question: &str) -> QuestionAnswerTuple {
    QuestionAnswerTuple::new(
        id,
        prompt_id,
        "x",
        category,
        question,
        vec!["yes".into(), "no".into()],
        "yes",
    )
    .unwrap()
}

pub fn choice(
    id: &str,
    prompt_id: &str,
    category: ElementCategory,
    question: &str,
    choices: &[&str],
    answer: &str,
) -> QuestionAnswerTuple {
    QuestionAnswerTuple::new(
        id,
        prompt_id,
        "x",
        category,
        question,
        choices.iter().map(|c| c.to_string()).collect(),
        answer,
    )
    .unwrap()
}
