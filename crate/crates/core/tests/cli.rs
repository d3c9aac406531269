mod common;

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tifa_core::backend::mock::{MockBackend, MockServer};
use tifa_core::backend::{
    Capability, CompleteRequest, CompleteResponse, QaRequest, QaResponse, SimilarityResponse, VqaMode, VqaRequest,
    VqaResponse,
};
use tifa_core::benchmark::{
    load_benchmark, save_benchmark, Benchmark, ElementCategory as C, PromptSource, QuestionAnswerTuple, RecordSet,
};
use tifa_core::filter::{filter_benchmark, DEFAULT_F1_THRESHOLD};
use tifa_core::questions::{generate_questions, GenerationConfig};
use tifa_core::scoring::{aggregate_by_model, score_images, ImageRef, VqaAnswerRecord};

const ENV_VARS: [&str; 10] = [
    "TIFA_CONFIG",
    "TIFA_CACHE_DIR",
    "TIFA_OFFLINE",
    "TIFA_MAX_IN_FLIGHT",
    "TIFA_API_TOKEN",
    "TIFA_LM_URL",
    "TIFA_QA_URL",
    "TIFA_VQA_URL",
    "TIFA_SIM_URL",
    "RUST_LOG",
];

fn tifa_with_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tifa"));
    for v in ENV_VARS {
        cmd.env_remove(v);
    }
    cmd.envs(env.iter().copied()).args(args).output().unwrap()
}

fn tifa(args: &[&str]) -> Output {
    tifa_with_env(args, &[])
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_jsonl(path: &Path, values: &[Value]) {
    let text: String = values.iter().map(|v| format!("{v}\n")).collect();
    fs::write(path, text).unwrap();
}

/// A small benchmark: two prompts, five questions.
fn benchmark() -> Benchmark {
    Benchmark {
        prompts: vec![
            common::prompt("p1", "two brown dogs on a red sofa", PromptSource::Coco),
            common::prompt("p2", "a blue vase full of sunflowers", PromptSource::Drawbench),
        ],
        tuples: vec![
            common::binary("p1_q0", "p1", C::Animal, "are there dogs?"),
            common::choice(
                "p1_q1",
                "p1",
                C::Counting,
                "how many dogs are there?",
                &["1", "2", "3"],
                "2",
            ),
            common::choice(
                "p1_q2",
                "p1",
                C::Color,
                "what color is the sofa?",
                &["red", "green"],
                "red",
            ),
            common::binary("p2_q0", "p2", C::Object, "is there a vase?"),
            common::choice(
                "p2_q1",
                "p2",
                C::Color,
                "what color is the vase?",
                &["blue", "white"],
                "blue",
            ),
        ],
        metadata: Default::default(),
    }
}

/// Writes the benchmark, three images (two for p1) and the manifest.
fn score_fixture(dir: &Path) -> (PathBuf, PathBuf, Vec<ImageRef>) {
    let questions = dir.join("questions.jsonl");
    save_benchmark(&benchmark(), &questions).unwrap();
    let images: Vec<ImageRef> = [("a", "p1", [9, 0, 0]), ("b", "p1", [0, 9, 0]), ("c", "p2", [0, 0, 9])]
        .into_iter()
        .map(|(id, pid, rgb)| {
            let path = dir.join(format!("{id}.png"));
            common::write_image(&path, rgb);
            ImageRef {
                image_id: id.into(),
                prompt_id: pid.into(),
                path,
                model_tag: "sd".into(),
            }
        })
        .collect();
    let manifest = dir.join("images.jsonl");
    // Relative paths resolve against the manifest's directory.
    let lines: Vec<Value> = images
        .iter()
        .map(|i| json!({"image_id": i.image_id, "prompt_id": i.prompt_id, "path": format!("{}.png", i.image_id), "model_tag": "sd"}))
        .collect();
    write_jsonl(&manifest, &lines);
    (questions, manifest, images)
}

/// Free-form VQA backend answering gold except for questions in `wrong`.
fn vqa_backend(wrong: &[&str]) -> MockServer {
    let wrong: HashSet<String> = wrong.iter().map(|s| s.to_string()).collect();
    let by_question: HashMap<String, QuestionAnswerTuple> = benchmark()
        .tuples
        .into_iter()
        .map(|t| (t.question.clone(), t))
        .collect();
    MockBackend::new("vqa")
        .on_vqa(move |r: &VqaRequest| {
            let t = &by_question[&r.question];
            let answer = if wrong.contains(&t.id) {
                t.choices.iter().find(|c| **c != t.answer).unwrap().clone()
            } else {
                t.answer.clone()
            };
            VqaResponse {
                answer,
                mode: VqaMode::Freeform,
            }
        })
        .start()
        .unwrap()
}

fn sim_backend() -> MockServer {
    MockBackend::new("sim")
        .on_similarity(|r| SimilarityResponse {
            scores: vec![0.0; r.candidates.len()],
        })
        .start()
        .unwrap()
}

/// Filtering may leave prompts without questions, which the strict loader refuses.
fn load_filtered(path: &Path) -> Benchmark {
    RecordSet::read(path).unwrap().into_parts()
}

fn report_json(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn help_exits_zero_and_bad_usage_exits_one() {
    assert_eq!(code(&tifa(&["--help"])), 0);
    assert_eq!(code(&tifa(&["frobnicate"])), 1);
    assert_eq!(code(&tifa(&["filter"])), 1);
}

#[test]
fn generate_one_prompt_from_recorded_backend() {
    let dir = tempfile::tempdir().unwrap();
    let prompts = dir.path().join("prompts.jsonl");
    write_jsonl(
        &prompts,
        &[json!({"id": "coco_1", "text": "A red colored dog.", "source": "coco"})],
    );
    let completion = include_str!("fixtures/published_example_3.txt")
        .split_once('\n')
        .unwrap()
        .1
        .to_string();
    let lm = MockBackend::new("lm")
        .on_complete(move |_| CompleteResponse {
            text: completion.clone(),
        })
        .start()
        .unwrap();
    let out_path = dir.path().join("generated.jsonl");
    let out = tifa(&[
        "generate",
        "--prompts",
        p(&prompts),
        "--lm",
        &lm.url(),
        "--out",
        p(&out_path),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let b = load_benchmark(&out_path).unwrap();
    assert_eq!(b.prompts.len(), 1);
    let ids: Vec<&str> = b.tuples.iter().map(|t| t.id.as_str()).collect();
    assert_eq!(ids, ["coco_1_q0", "coco_1_q1", "coco_1_q2", "coco_1_q3"]);
}

#[test]
fn generate_without_backend_or_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let prompts = dir.path().join("prompts.jsonl");
    write_jsonl(
        &prompts,
        &[json!({"id": "p", "text": "three dogs on a beach", "source": "custom"})],
    );
    let out_path = dir.path().join("out.jsonl");
    let out = tifa(&["generate", "--prompts", p(&prompts), "--out", p(&out_path)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("lm"));
    let missing = dir.path().join("nope.jsonl");
    let out = tifa(&[
        "generate",
        "--prompts",
        p(&missing),
        "--lm",
        "http://127.0.0.1:9",
        "--out",
        p(&out_path),
    ]);
    assert_eq!(code(&out), 1);
    assert!(!out_path.exists());
}

#[test]
fn generate_three_prompts_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let lm = MockBackend::new("lm")
        .on_complete(|r: &CompleteRequest| {
            let caption = r.prompt.trim_end().rsplit_once("Description: ").unwrap().1.to_string();
            let noun = caption.split_whitespace().last().unwrap().to_string();
            CompleteResponse {
                text: format!(
                    "Entities: {noun}\nActivities:\nColors:\nCounting:\nOther attributes:\nQuestions and answers are below:\n\
                     About {noun} (object):\nQ: is there a {noun}?\nChoices: yes, no\nA: yes\n"
                ),
            }
        })
        .start()
        .unwrap();
    let prompts = vec![
        common::prompt("a", "a lamp next to a sofa", PromptSource::Custom),
        common::prompt("b", "a bowl of ripe cherries", PromptSource::Custom),
        common::prompt("c", "a kite above the dunes", PromptSource::Custom),
    ];
    let input = dir.path().join("prompts.jsonl");
    save_benchmark(
        &Benchmark {
            prompts: prompts.clone(),
            tuples: vec![],
            metadata: Default::default(),
        },
        &input,
    )
    .unwrap();
    let out_path = dir.path().join("generated.jsonl");
    let out = tifa(&[
        "generate",
        "--prompts",
        p(&input),
        "--lm",
        &lm.url(),
        "--out",
        p(&out_path),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let client = common::client(None);
    let ep = client.health_check(&lm.url(), &[Capability::Complete]).unwrap();
    let lib = generate_questions(&prompts, &client, &ep, &GenerationConfig::default()).unwrap();
    assert_eq!(lib.tuples.len(), 3);
    let expected = dir.path().join("expected.jsonl");
    save_benchmark(
        &Benchmark {
            prompts,
            tuples: lib.tuples,
            metadata: Default::default(),
        },
        &expected,
    )
    .unwrap();
    assert_eq!(fs::read(&out_path).unwrap(), fs::read(&expected).unwrap());
}

fn gold_qa() -> MockServer {
    let gold: HashMap<String, String> = benchmark()
        .tuples
        .into_iter()
        .map(|t| (t.question.clone(), t.answer.clone()))
        .collect();
    MockBackend::new("qa")
        .on_qa(move |r: &QaRequest| QaResponse {
            answer: gold[&r.question].clone(),
        })
        .start()
        .unwrap()
}

#[test]
fn filter_keeps_gold_and_logs_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let questions = dir.path().join("questions.jsonl");
    save_benchmark(&benchmark(), &questions).unwrap();
    let qa = gold_qa();
    let out_path = dir.path().join("filtered.jsonl");
    let out = tifa(&[
        "filter",
        "--questions",
        p(&questions),
        "--qa",
        &qa.url(),
        "--out",
        p(&out_path),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(load_benchmark(&out_path).unwrap().tuples, benchmark().tuples);
    let verdicts = fs::read_to_string(dir.path().join("filtered.verdicts.jsonl")).unwrap();
    assert_eq!(verdicts.lines().count(), 5);

    let strict = dir.path().join("strict.jsonl");
    let out = tifa(&[
        "filter",
        "--questions",
        p(&questions),
        "--qa",
        &qa.url(),
        "--threshold",
        "1.1",
        "--out",
        p(&strict),
    ]);
    assert_eq!(code(&out), 0);
    assert!(load_filtered(&strict).tuples.is_empty());
}

#[test]
fn filter_mixed_fixture_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let questions = dir.path().join("questions.jsonl");
    save_benchmark(&benchmark(), &questions).unwrap();
    let qa = MockBackend::new("qa")
        .on_qa(|r: &QaRequest| QaResponse {
            answer: match (r.question.as_str(), r.choices.is_some()) {
                ("how many dogs are there?", _) => "3".into(),
                ("what color is the sofa?", false) => "dark red".into(),
                ("what color is the sofa?", true) => "red".into(),
                _ => "yes".into(),
            },
        })
        .start()
        .unwrap();
    let out_path = dir.path().join("filtered.jsonl");
    let out = tifa(&[
        "filter",
        "--questions",
        p(&questions),
        "--qa",
        &qa.url(),
        "--out",
        p(&out_path),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let b = benchmark();
    let client = common::client(None);
    let ep = client.health_check(&qa.url(), &[Capability::Qa]).unwrap();
    let lib = filter_benchmark(&b.tuples, &b.prompts, &client, &ep, DEFAULT_F1_THRESHOLD).unwrap();
    let got = load_filtered(&out_path);
    assert_eq!(got.tuples, lib.kept);
    let kept: Vec<&str> = got.tuples.iter().map(|t| t.id.as_str()).collect();
    // "dark red" against "red" has F1 2/3 and falls under the threshold.
    assert_eq!(kept, ["p1_q0", "p2_q0"]);
}

#[test]
fn score_oracle_and_adversarial_backends() {
    let dir = tempfile::tempdir().unwrap();
    let (questions, manifest, _) = score_fixture(dir.path());
    let sim = sim_backend();

    let oracle = vqa_backend(&[]);
    let out_dir = dir.path().join("oracle");
    let out = tifa(&[
        "score",
        "--questions",
        p(&questions),
        "--images",
        p(&manifest),
        "--vqa",
        &oracle.url(),
        "--sim",
        &sim.url(),
        "--out-dir",
        p(&out_dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report_json(&out_dir)["models"]["sd"]["overall"], 1.0);
    assert!(stdout(&out).contains("| overall | 100.0 |"));

    let all: Vec<&str> = vec!["p1_q0", "p1_q1", "p1_q2", "p2_q0", "p2_q1"];
    let adversarial = vqa_backend(&all);
    let out_dir = dir.path().join("adversarial");
    let out = tifa(&[
        "score",
        "--questions",
        p(&questions),
        "--images",
        p(&manifest),
        "--vqa",
        &adversarial.url(),
        "--sim",
        &sim.url(),
        "--out-dir",
        p(&out_dir),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(report_json(&out_dir)["models"]["sd"]["overall"], 0.0);
}

#[test]
fn score_mixed_matches_library_and_report_rebuilds_it() {
    let dir = tempfile::tempdir().unwrap();
    let (questions, manifest, images) = score_fixture(dir.path());
    let vqa = vqa_backend(&["p1_q1", "p2_q1"]);
    let sim = sim_backend();
    let out_dir = dir.path().join("out");
    let out = tifa(&[
        "--format",
        "json",
        "score",
        "--questions",
        p(&questions),
        "--images",
        p(&manifest),
        "--vqa",
        &vqa.url(),
        "--sim",
        &sim.url(),
        "--out-dir",
        p(&out_dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let b = benchmark();
    let client = common::client(None);
    let v = client.health_check(&vqa.url(), &[Capability::Vqa]).unwrap();
    let s = client.health_check(&sim.url(), &[Capability::Similarity]).unwrap();
    let run = score_images(&images, &b.tuples, &client, &v, Some(&s)).unwrap();
    let records: Vec<VqaAnswerRecord> = run.records().cloned().collect();
    let lib = aggregate_by_model(&records, &b.tuples, &b.prompts, &images).unwrap();
    let expected = format!("{}\n", serde_json::to_string_pretty(&lib).unwrap());
    assert_eq!(fs::read_to_string(out_dir.join("report.json")).unwrap(), expected);
    assert_eq!(stdout(&out), expected);
    // Images a and b score 2/3, c scores 1/2: prompt means 2/3 and 1/2.
    let overall = lib.models["sd"].overall;
    assert!((overall - 7.0 / 12.0).abs() < 1e-12);

    let rebuilt = dir.path().join("rebuilt");
    let out = tifa(&[
        "report",
        "--questions",
        p(&questions),
        "--images",
        p(&manifest),
        "--records",
        p(&out_dir.join("records.jsonl")),
        "--out-dir",
        p(&rebuilt),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["records.jsonl", "report.json", "report.md"] {
        assert_eq!(
            fs::read(out_dir.join(f)).unwrap(),
            fs::read(rebuilt.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn score_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (questions, _, _) = score_fixture(dir.path());
    let dangling = dir.path().join("dangling.jsonl");
    write_jsonl(
        &dangling,
        &[json!({"image_id": "x", "prompt_id": "nope", "path": "a.png", "model_tag": "sd"})],
    );
    let vqa = vqa_backend(&[]);
    let out_dir = dir.path().join("out");
    let args = |images: &Path, vqa_url: &str| {
        tifa(&[
            "score",
            "--questions",
            p(&questions),
            "--images",
            p(images),
            "--vqa",
            vqa_url,
            "--out-dir",
            p(&out_dir),
        ])
    };
    assert_eq!(code(&args(&dangling, &vqa.url())), 3);
    assert_eq!(vqa.requests(), 0);

    let (_, manifest, _) = score_fixture(dir.path());
    // Free-form backend and no similarity backend.
    assert_eq!(code(&args(&manifest, &vqa.url())), 1);
    // Nothing is listening.
    let dead = {
        let s = vqa_backend(&[]);
        s.url()
    };
    assert_eq!(code(&args(&manifest, &dead)), 2);
    assert!(!out_dir.join("report.json").exists());
}

#[test]
fn correlate_agreement_and_attribute() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("records.jsonl");
    let rec =
        |t: &str, i: &str, ok: bool| json!({"tuple_id": t, "image_id": i, "freeform": "", "chosen": "", "correct": ok});
    write_jsonl(
        &records,
        &[
            rec("p1_q0", "a", true),
            rec("p1_q1", "a", true),
            rec("p1_q0", "b", true),
            rec("p1_q1", "b", false),
            rec("p2_q0", "c", false),
            rec("p2_q1", "c", false),
        ],
    );
    let human = dir.path().join("human.jsonl");
    let rating = |i: &str, a: &str, s: u8| json!({"image_id": i, "annotator": a, "score": s});
    write_jsonl(
        &human,
        &[
            rating("a", "h1", 5),
            rating("a", "h2", 5),
            rating("b", "h1", 3),
            rating("b", "h2", 4),
            rating("c", "h1", 1),
            rating("c", "h2", 2),
        ],
    );
    let out = tifa(&[
        "--format",
        "json",
        "correlate",
        "--human",
        p(&human),
        "--records",
        p(&records),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows: Value = serde_json::from_str(&stdout(&out)).unwrap();
    // Both orderings agree exactly: 1.0 > 0.5 > 0.0 against 5 > 3.5 > 1.5.
    assert_eq!(rows[0]["metric"], "tifa");
    assert_eq!(rows[0]["n"], 3);
    assert_eq!(rows[0]["rho"], 1.0);
    assert_eq!(rows[0]["tau"], 1.0);

    let out = tifa(&["agreement", "--annotations", p(&human), "--scale", "ordinal"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("| scale | items | annotators | alpha |"));

    let same = dir.path().join("same.jsonl");
    write_jsonl(
        &same,
        &[
            rating("a", "h1", 5),
            rating("a", "h2", 5),
            rating("b", "h1", 2),
            rating("b", "h2", 2),
        ],
    );
    let out = tifa(&["--format", "json", "agreement", "--annotations", p(&same)]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["alpha"], 1.0);

    let disjoint = dir.path().join("disjoint.jsonl");
    write_jsonl(&disjoint, &[rating("a", "h1", 5), rating("b", "h2", 2)]);
    assert_eq!(code(&tifa(&["agreement", "--annotations", p(&disjoint)])), 3);

    let questions = dir.path().join("questions.jsonl");
    save_benchmark(&benchmark(), &questions).unwrap();
    let answers = dir.path().join("answers.jsonl");
    let ans = |t: &str, i: &str, a: &str, x: &str| json!({"tuple_id": t, "image_id": i, "annotator": a, "answer": x});
    write_jsonl(
        &answers,
        &[
            // Humans right where the model was wrong: a VQA error.
            ans("p1_q1", "b", "h1", "2"),
            ans("p1_q1", "b", "h2", "2"),
            // Humans also wrong: the image is at fault.
            ans("p2_q0", "c", "h1", "no"),
            // p2_q1 on c has no human answer.
        ],
    );
    let out = tifa(&[
        "--format",
        "json",
        "attribute",
        "--records",
        p(&records),
        "--questions",
        p(&questions),
        "--human",
        p(&answers),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v, json!({"t2i_errors": 1, "vqa_errors": 1, "unjudged": 1}));
}

#[test]
fn stats_and_import() {
    let dir = tempfile::tempdir().unwrap();
    let questions = dir.path().join("questions.jsonl");
    save_benchmark(&benchmark(), &questions).unwrap();
    let out = tifa(&["--format", "json", "stats", "--benchmark", p(&questions)]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!((v["prompts"].as_u64(), v["questions"].as_u64()), (Some(2), Some(5)));
    assert_eq!(
        (v["binary"].as_u64(), v["multiple_choice"].as_u64()),
        (Some(2), Some(3))
    );
    let out = tifa(&["--format", "csv", "stats", "--benchmark", p(&questions)]);
    assert!(stdout(&out).starts_with("statistic,value\nprompts,2\nquestions,5\n"));

    let released = dir.path().join("released.json");
    fs::write(
        &released,
        json!([
            {"id": "coco_1", "caption": "A red colored dog.", "question": "is this a dog?", "choices": ["yes", "no"], "answer": "yes", "element": "dog", "element_type": "animal/human"},
            {"id": "coco_1", "caption": "A red colored dog.", "question": "what color is the dog?", "choices": ["red", "black"], "answer": "red", "element": "red", "element_type": "color"}
        ])
        .to_string(),
    )
    .unwrap();
    let imported = dir.path().join("imported.jsonl");
    let out = tifa(&["import", "--qa", p(&released), "--out", p(&imported)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let b = load_benchmark(&imported).unwrap();
    assert_eq!((b.prompts.len(), b.tuples.len()), (1, 2));

    fs::write(&released, "[{\"id\": 1}]").unwrap();
    assert_eq!(code(&tifa(&["import", "--qa", p(&released), "--out", p(&imported)])), 3);
}

#[test]
fn flags_beat_environment_beats_config() {
    let dir = tempfile::tempdir().unwrap();
    let questions = dir.path().join("questions.jsonl");
    save_benchmark(&benchmark(), &questions).unwrap();
    let live = gold_qa();
    let dead = {
        let s = gold_qa();
        s.url()
    };
    let config = dir.path().join("tifa.json");
    let out_path = dir.path().join("out.jsonl");
    let run = |config_qa: &str, env: &[(&str, &str)], flag: Option<&str>| {
        fs::write(
            &config,
            json!({"backends": {"qa": config_qa}, "max_retries": 0}).to_string(),
        )
        .unwrap();
        let mut args = vec![
            "--config",
            p(&config),
            "filter",
            "--questions",
            p(&questions),
            "--out",
            p(&out_path),
        ];
        if let Some(f) = flag {
            args.extend(["--qa", f]);
        }
        code(&tifa_with_env(&args, env))
    };
    let live_url = live.url();
    assert_eq!(run(&live_url, &[], None), 0);
    assert_eq!(run(&dead, &[], None), 2);
    assert_eq!(run(&dead, &[("TIFA_QA_URL", &live_url)], None), 0);
    assert_eq!(run(&live_url, &[("TIFA_QA_URL", &dead)], None), 2);
    assert_eq!(run(&dead, &[("TIFA_QA_URL", &dead)], Some(&live_url)), 0);

    // Configuration through the environment alone.
    let out = tifa_with_env(
        &["filter", "--questions", p(&questions), "--out", p(&out_path)],
        &[("TIFA_QA_URL", &live_url), ("TIFA_MAX_IN_FLIGHT", "2")],
    );
    assert_eq!(code(&out), 0);
    let bad = tifa_with_env(
        &[
            "filter",
            "--questions",
            p(&questions),
            "--qa",
            &live_url,
            "--out",
            p(&out_path),
        ],
        &[("TIFA_MAX_IN_FLIGHT", "0")],
    );
    assert_eq!(code(&bad), 1);
}

#[test]
fn warm_cache_replays_offline() {
    let dir = tempfile::tempdir().unwrap();
    let questions = dir.path().join("questions.jsonl");
    save_benchmark(&benchmark(), &questions).unwrap();
    let cache = dir.path().join("cache");
    let qa = gold_qa();
    let first = dir.path().join("first.jsonl");
    let second = dir.path().join("second.jsonl");
    let out = tifa(&[
        "--cache-dir",
        p(&cache),
        "filter",
        "--questions",
        p(&questions),
        "--qa",
        &qa.url(),
        "--out",
        p(&first),
    ]);
    assert_eq!(code(&out), 0);
    let calls = qa.requests();
    let out = tifa_with_env(
        &[
            "--cache-dir",
            p(&cache),
            "filter",
            "--questions",
            p(&questions),
            "--qa",
            &qa.url(),
            "--out",
            p(&second),
        ],
        &[("TIFA_OFFLINE", "true")],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(qa.requests(), calls);
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
}
