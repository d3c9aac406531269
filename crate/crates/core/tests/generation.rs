mod common;

use std::collections::HashMap;
use std::time::Duration;

use serde_json::json;
use tifa_core::backend::mock::{MockBackend, MockServer};
use tifa_core::backend::{Capability, CompleteRequest, CompleteResponse};
use tifa_core::benchmark::{ElementCategory, PromptSource, QuestionType, TextPrompt};
use tifa_core::questions::{
    build_generation_prompt, generate_questions, parse_generation_output, ExampleSet, GenerationConfig,
    QuestionGenError, STOP_SEQUENCE,
};

const RED_DOG: &str = include_str!("fixtures/published_example_3.txt");

/// The model's continuation: everything after the description line.
fn continuation(example: &str) -> String {
    example.split_once('\n').unwrap().1.to_string()
}

fn caption_of(prompt: &str) -> String {
    prompt.trim_end().rsplit_once("Description: ").unwrap().1.to_string()
}

#[test]
fn red_dog_replay_yields_four_tuples() {
    let rendered = build_generation_prompt("A red colored dog.", &ExampleSet::builtin())
        .unwrap()
        .render();
    let server = MockServer::replay(
        "lm-replay",
        &[Capability::Complete],
        vec![(
            "/v1/complete".into(),
            json!({"prompt": rendered, "temperature": 0.0, "max_tokens": 1024, "stop": [STOP_SEQUENCE]}),
            json!({"text": continuation(RED_DOG)}),
        )],
    )
    .unwrap();
    let client = common::client(None);
    let lm = client.health_check(&server.url(), &[Capability::Complete]).unwrap();
    let prompts = [common::prompt("coco_1", "A red colored dog.", PromptSource::Coco)];
    let out = generate_questions(&prompts, &client, &lm, &GenerationConfig::default()).unwrap();

    let ids: Vec<&str> = out.tuples.iter().map(|t| t.id.as_str()).collect();
    assert_eq!(ids, ["coco_1_q0", "coco_1_q1", "coco_1_q2", "coco_1_q3"]);
    assert!(out.tuples.iter().all(|t| t.prompt_id == "coco_1"));
    let cats: Vec<ElementCategory> = out.tuples.iter().map(|t| t.category).collect();
    assert_eq!(
        cats,
        [
            ElementCategory::Animal,
            ElementCategory::Animal,
            ElementCategory::Color,
            ElementCategory::Color
        ]
    );
    let types: Vec<QuestionType> = out.tuples.iter().map(|t| t.question_type).collect();
    assert_eq!(
        types,
        [
            QuestionType::Binary,
            QuestionType::MultipleChoice,
            QuestionType::Binary,
            QuestionType::MultipleChoice
        ]
    );
    assert!(out.warnings.is_empty());
    assert_eq!(server.inference_requests(), 1);
}

#[test]
fn three_prompts_union_in_prompt_order() {
    let completions: HashMap<String, String> = [
        ("A red colored dog.", continuation(RED_DOG)),
        (
            "a man posing for a selfie in a jacket and bow tie.",
            continuation(include_str!("fixtures/published_example_1.txt")),
        ),
        (
            "A horse and several cows feed on hay.",
            continuation(include_str!("fixtures/published_example_2.txt")),
        ),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let table = completions.clone();
    // Later prompts answer faster so completion order differs from input order.
    let server = MockBackend::new("lm")
        .on_complete(move |r: &CompleteRequest| {
            let caption = caption_of(&r.prompt);
            std::thread::sleep(Duration::from_millis(if caption.starts_with("A red") { 60 } else { 5 }));
            CompleteResponse {
                text: table[&caption].clone(),
            }
        })
        .start()
        .unwrap();
    let client = common::client(None);
    let lm = client.health_check(&server.url(), &[Capability::Complete]).unwrap();
    let prompts = [
        common::prompt("p0", "A red colored dog.", PromptSource::Coco),
        common::prompt(
            "p1",
            "a man posing for a selfie in a jacket and bow tie.",
            PromptSource::Coco,
        ),
        common::prompt("p2", "A horse and several cows feed on hay.", PromptSource::Coco),
    ];
    let out = generate_questions(&prompts, &client, &lm, &GenerationConfig::default()).unwrap();

    let mut expected = Vec::new();
    for p in &prompts {
        for (n, mut t) in parse_generation_output(&completions[&p.text])
            .tuples
            .into_iter()
            .enumerate()
        {
            t.id = format!("{}_q{n}", p.id);
            t.prompt_id = p.id.clone();
            expected.push(t);
        }
    }
    assert_eq!(out.tuples, expected);
    assert_eq!(out.tuples.len(), 4 + 10 + 6);
}

#[test]
fn empty_caption_is_rejected_before_any_request() {
    let server = MockBackend::new("lm")
        .on_complete(|_| CompleteResponse { text: String::new() })
        .start()
        .unwrap();
    let client = common::client(None);
    let lm = client.health_check(&server.url(), &[Capability::Complete]).unwrap();
    let prompts = [TextPrompt {
        id: "empty".into(),
        text: "   ".into(),
        source: PromptSource::Custom,
    }];
    let err = generate_questions(&prompts, &client, &lm, &GenerationConfig::default()).unwrap_err();
    assert!(matches!(err, QuestionGenError::EmptyCaption));
    assert_eq!(server.inference_requests(), 0);
}

#[test]
fn unparseable_output_warns_without_failing() {
    let server = MockBackend::new("lm")
        .on_complete(|_| CompleteResponse {
            text: "I cannot help with that.".into(),
        })
        .start()
        .unwrap();
    let client = common::client(None);
    let lm = client.health_check(&server.url(), &[Capability::Complete]).unwrap();
    let prompts = [common::prompt("p", "three dogs on a beach", PromptSource::Custom)];
    let out = generate_questions(&prompts, &client, &lm, &GenerationConfig::default()).unwrap();
    assert!(out.tuples.is_empty());
    assert_eq!(out.warnings.len(), 1);
    assert_eq!(out.warnings[0].prompt_id, "p");
}

#[test]
fn request_carries_config_and_stop_sequence() {
    let server = MockBackend::new("lm")
        .on_complete(|r: &CompleteRequest| {
            assert_eq!(r.max_tokens, 256);
            assert_eq!(r.temperature, 0.0);
            assert!(r.stop.iter().any(|s| s == STOP_SEQUENCE));
            assert!(r.prompt.ends_with("Description: three dogs on a beach\n"));
            CompleteResponse { text: String::new() }
        })
        .start()
        .unwrap();
    let client = common::client(None);
    let lm = client.health_check(&server.url(), &[Capability::Complete]).unwrap();
    let cfg = GenerationConfig {
        max_tokens: 256,
        stop: vec![],
        ..GenerationConfig::default()
    };
    let prompts = [common::prompt("p", "three dogs on a beach", PromptSource::Custom)];
    generate_questions(&prompts, &client, &lm, &cfg).unwrap();
    assert_eq!(server.inference_requests(), 1);
}

#[test]
fn lm_without_complete_capability_is_refused() {
    let server = MockBackend::new("qa").on_qa(|_| unreachable!()).start().unwrap();
    let client = common::client(None);
    let ep = client.health_check(&server.url(), &[]).unwrap();
    let prompts = [common::prompt("p", "three dogs on a beach", PromptSource::Custom)];
    let err = generate_questions(&prompts, &client, &ep, &GenerationConfig::default()).unwrap_err();
    assert!(matches!(err, QuestionGenError::Backend(_)));
}
