use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    AgreementArgs, AttributeArgs, Cli, CliError, Command, CorrelateArgs, FilterArgs, GenerateArgs, GlobalArgs,
    ImportArgs, ReportArgs, RunConfig, ScoreArgs, StatsArgs,
};
use crate::backend::Capability;
use crate::benchmark::{
    benchmark_stats, import_released_tifa_files, read_jsonl, save_benchmark, write_jsonl, Benchmark, RecordSet,
    StatsSummary,
};
use crate::filter::{filter_benchmark, DEFAULT_F1_THRESHOLD};
use crate::questions::{generate_questions, GenerationConfig};
use crate::scoring::{
    aggregate_by_model, attribute_errors, load_answer_records, load_manifest, render_markdown, report_table,
    score_images, ImageRef, ModelReports, Score, ScoringError, VqaAnswerRecord,
};
use crate::stats::{
    correlate_metrics, correlation_table, krippendorff_alpha, majority_vote, AnnotationMatrix, Scale, Vote,
};
use crate::table::{Table, TableFormat};
use crate::text::normalize_answer;

pub(super) fn dispatch(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    match cli.command {
        Command::Generate(a) => generate(g, a),
        Command::Filter(a) => filter(g, a),
        Command::Score(a) => score(g, a),
        Command::Report(a) => report(g, a),
        Command::Correlate(a) => correlate(g, a),
        Command::Agreement(a) => agreement(g, a),
        Command::Attribute(a) => attribute(g, a),
        Command::Stats(a) => stats(g, a),
        Command::Import(a) => import(g, a),
    }
}

/// Fails before any backend call if an input file is missing.
fn require_files<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<(), CliError> {
    for p in paths {
        if !p.is_file() {
            return Err(CliError::Usage(format!("input file not found: {}", p.display())));
        }
    }
    Ok(())
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| io_error(path, e))
}

fn pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn print(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Data(format!("stdout: {e}")))
}

/// JSON prints the library value itself; other formats print its table.
fn emit<T: Serialize>(format: TableFormat, value: &T, table: impl FnOnce() -> Table) -> Result<(), CliError> {
    match format {
        TableFormat::Json => print(&pretty_json(value)),
        other => print(&table().render(other)),
    }
}

/// Loads a benchmark file, allowing prompts that have no questions.
fn load_questions(path: &Path) -> Result<Benchmark, CliError> {
    let set = RecordSet::read(path)?;
    set.check(false)?;
    Ok(set.into_parts())
}

fn generate(g: &GlobalArgs, a: GenerateArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(g)?;
    let lm_url = cfg.backend("lm", a.lm.as_deref())?;
    require_files([a.prompts.as_path()].into_iter().chain(a.gen_config.as_deref()))?;
    let gen_cfg = match &a.gen_config {
        Some(p) => GenerationConfig::load(p)?,
        None => GenerationConfig::default(),
    };
    gen_cfg.examples()?;
    let input = load_questions(&a.prompts)?;

    let client = cfg.client()?;
    let lm = client.health_check(&lm_url, &[Capability::Complete])?;
    let out = generate_questions(&input.prompts, &client, &lm, &gen_cfg)?;
    for pw in &out.warnings {
        for w in &pw.warnings {
            eprintln!("warning: prompt {}: {w}", pw.prompt_id);
        }
    }
    eprintln!(
        "generated {} questions for {} prompts",
        out.tuples.len(),
        input.prompts.len()
    );
    let result = Benchmark {
        prompts: input.prompts,
        tuples: out.tuples,
        metadata: input.metadata,
    };
    save_benchmark(&result, &a.out)?;
    Ok(())
}

fn default_verdicts_path(out: &Path) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(".verdicts.jsonl");
    out.with_file_name(name)
}

fn filter(g: &GlobalArgs, a: FilterArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(g)?;
    let qa_url = cfg.backend("qa", a.qa.as_deref())?;
    let threshold = a.threshold.or(cfg.threshold).unwrap_or(DEFAULT_F1_THRESHOLD);
    if !threshold.is_finite() {
        return Err(CliError::Usage(format!(
            "threshold must be a finite number, got {threshold}"
        )));
    }
    require_files([a.questions.as_path()])?;
    let input = load_questions(&a.questions)?;

    let client = cfg.client()?;
    let qa = client.health_check(&qa_url, &[Capability::Qa])?;
    let report = filter_benchmark(&input.tuples, &input.prompts, &client, &qa, threshold)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for (id, e) in &report.failures {
        eprintln!("warning: tuple `{id}` rejected after backend error: {e}");
    }
    eprintln!("kept {} of {} questions", report.kept.len(), input.tuples.len());

    let verdicts = a.verdicts.unwrap_or_else(|| default_verdicts_path(&a.out));
    write_jsonl(&verdicts, &report.verdicts)?;
    let result = Benchmark {
        prompts: input.prompts,
        tuples: report.kept,
        metadata: input.metadata,
    };
    save_benchmark(&result, &a.out)?;
    Ok(())
}

/// Checks that every image names a known prompt and exists on disk.
fn check_manifest(images: &[ImageRef], b: &Benchmark) -> Result<(), CliError> {
    for img in images {
        if b.prompt(&img.prompt_id).is_none() {
            return Err(ScoringError::UnknownPrompt {
                image_id: img.image_id.clone(),
                prompt_id: img.prompt_id.clone(),
            }
            .into());
        }
        if !img.path.is_file() {
            return Err(CliError::Data(format!(
                "image `{}` not found at {}",
                img.image_id,
                img.path.display()
            )));
        }
    }
    Ok(())
}

fn write_reports(
    g: &GlobalArgs,
    out_dir: &Path,
    records: &[VqaAnswerRecord],
    b: &Benchmark,
    images: &[ImageRef],
) -> Result<(), CliError> {
    let reports = aggregate_by_model(records, &b.tuples, &b.prompts, images)?;
    create_dir(out_dir)?;
    write_jsonl(&out_dir.join("records.jsonl"), records)?;
    write_file(&out_dir.join("report.json"), &pretty_json(&reports))?;
    write_file(&out_dir.join("report.md"), &render_markdown(&reports))?;
    emit(g.format, &reports, || report_table(&reports))
}

fn score(g: &GlobalArgs, a: ScoreArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(g)?;
    let vqa_url = cfg.backend("vqa", a.vqa.as_deref())?;
    let sim_url = cfg.optional_backend("sim", a.sim.as_deref());
    require_files([a.questions.as_path(), a.images.as_path()])?;
    let b = load_questions(&a.questions)?;
    let images = load_manifest(&a.images)?;
    check_manifest(&images, &b)?;

    let client = cfg.client()?;
    let vqa = client.health_check(&vqa_url, &[Capability::Vqa])?;
    let sim = match &sim_url {
        Some(u) => Some(client.health_check(u, &[Capability::Similarity])?),
        None => None,
    };
    let run = score_images(&images, &b.tuples, &client, &vqa, sim.as_ref())?;
    for w in run.warnings() {
        eprintln!("warning: {w}");
    }
    let records: Vec<VqaAnswerRecord> = run.records().cloned().collect();
    write_reports(g, &a.out_dir, &records, &b, &images)
}

fn report(g: &GlobalArgs, a: ReportArgs) -> Result<(), CliError> {
    require_files([a.questions.as_path(), a.images.as_path(), a.records.as_path()])?;
    let b = load_questions(&a.questions)?;
    let images = load_manifest(&a.images)?;
    let records = load_answer_records(&a.records)?;
    write_reports(g, &a.out_dir, &records, &b, &images)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LikertRating {
    image_id: String,
    annotator: String,
    score: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricScore {
    image_id: String,
    score: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HumanVqaAnswer {
    tuple_id: String,
    image_id: String,
    annotator: String,
    answer: String,
}

/// Mean rating per image.
fn human_means(path: &Path) -> Result<BTreeMap<String, f64>, CliError> {
    let ratings: Vec<LikertRating> = read_jsonl(path)?;
    let mut sums: BTreeMap<String, (f64, u32)> = BTreeMap::new();
    for r in ratings {
        if !(1.0..=5.0).contains(&r.score) {
            return Err(CliError::Data(format!(
                "{}: rating {} by `{}` for `{}` is outside 1-5",
                path.display(),
                r.score,
                r.annotator,
                r.image_id
            )));
        }
        let e = sums.entry(r.image_id).or_default();
        e.0 += r.score;
        e.1 += 1;
    }
    Ok(sums.into_iter().map(|(k, (s, n))| (k, s / f64::from(n))).collect())
}

fn tifa_scores_from_report(path: &Path) -> Result<BTreeMap<String, f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let reports: ModelReports =
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(reports
        .models
        .values()
        .flat_map(|r| r.per_image.iter().map(|(k, v)| (k.clone(), *v)))
        .collect())
}

fn tifa_scores_from_records(path: &Path) -> Result<BTreeMap<String, f64>, CliError> {
    let mut tallies: BTreeMap<String, Score> = BTreeMap::new();
    for r in load_answer_records(path)? {
        tallies.entry(r.image_id).or_default().push(r.correct);
    }
    Ok(tallies.into_iter().map(|(k, s)| (k, s.ratio())).collect())
}

fn correlate(g: &GlobalArgs, a: CorrelateArgs) -> Result<(), CliError> {
    let mut extra = Vec::with_capacity(a.metrics.len());
    for m in &a.metrics {
        let (name, file) = m
            .split_once('=')
            .filter(|(n, f)| !n.is_empty() && !f.is_empty())
            .ok_or_else(|| CliError::Usage(format!("--metric expects NAME=FILE, got `{m}`")))?;
        extra.push((name.to_string(), PathBuf::from(file)));
    }
    if a.report.is_none() && a.records.is_none() && extra.is_empty() {
        return Err(CliError::Usage(
            "nothing to correlate: pass --report, --records or --metric".into(),
        ));
    }
    require_files(
        [a.human.as_path()]
            .into_iter()
            .chain(a.report.as_deref())
            .chain(a.records.as_deref())
            .chain(extra.iter().map(|(_, p)| p.as_path())),
    )?;

    let human = human_means(&a.human)?;
    let mut metrics = Vec::new();
    if let Some(p) = &a.report {
        metrics.push(("tifa".to_string(), tifa_scores_from_report(p)?));
    }
    if let Some(p) = &a.records {
        metrics.push(("tifa".to_string(), tifa_scores_from_records(p)?));
    }
    for (name, path) in extra {
        let scores: Vec<MetricScore> = read_jsonl(&path)?;
        metrics.push((name, scores.into_iter().map(|s| (s.image_id, s.score)).collect()));
    }
    let rows = correlate_metrics(&metrics, &human);
    emit(g.format, &rows, || correlation_table(&rows))
}

#[derive(Debug, Serialize)]
struct AgreementResult {
    scale: &'static str,
    items: usize,
    annotators: usize,
    alpha: f64,
}

fn annotation_triples(path: &Path, scale: Scale) -> Result<Vec<(String, String, String)>, CliError> {
    let values: Vec<serde_json::Value> = read_jsonl(path)?;
    let bad = |line: usize, why: &str| CliError::Data(format!("{}: record {line}: {why}", path.display()));
    let mut out = Vec::with_capacity(values.len());
    for (i, v) in values.iter().enumerate() {
        let field = |k: &str| v.get(k).and_then(|x| x.as_str());
        let annotator = field("annotator").ok_or_else(|| bad(i + 1, "missing `annotator`"))?;
        let image = field("image_id").ok_or_else(|| bad(i + 1, "missing `image_id`"))?;
        let (item, value) = match (field("tuple_id"), v.get("answer"), v.get("score")) {
            (Some(t), Some(serde_json::Value::String(ans)), _) => {
                let value = if scale == Scale::Nominal {
                    normalize_answer(ans)
                } else {
                    ans.clone()
                };
                (format!("{t}@{image}"), value)
            }
            (None, _, Some(serde_json::Value::Number(n))) => (image.to_string(), n.to_string()),
            _ => return Err(bad(i + 1, "expected a `score` rating or a `tuple_id` with an `answer`")),
        };
        out.push((item, annotator.to_string(), value));
    }
    Ok(out)
}

fn agreement(g: &GlobalArgs, a: AgreementArgs) -> Result<(), CliError> {
    require_files([a.annotations.as_path()])?;
    let triples = annotation_triples(&a.annotations, a.scale)?;
    let m = AnnotationMatrix::from_triples(triples, a.scale)?;
    let result = AgreementResult {
        scale: match a.scale {
            Scale::Nominal => "nominal",
            Scale::Ordinal => "ordinal",
        },
        items: m.rows().len(),
        annotators: m.rows()[0].len(),
        alpha: krippendorff_alpha(&m)?,
    };
    emit(g.format, &result, || {
        let mut t = Table::new(["scale", "items", "annotators", "alpha"]);
        t.push([
            result.scale.to_string(),
            result.items.to_string(),
            result.annotators.to_string(),
            format!("{:.4}", result.alpha),
        ]);
        t
    })
}

/// One answer per (tuple, image): a lone answer stands, two or three go to a
/// majority vote, and unresolved votes are left out.
fn resolve_human_answers(path: &Path) -> Result<HashMap<(String, String), String>, CliError> {
    let answers: Vec<HumanVqaAnswer> = read_jsonl(path)?;
    let mut grouped: BTreeMap<(String, String), BTreeMap<String, String>> = BTreeMap::new();
    for h in answers {
        grouped
            .entry((h.tuple_id, h.image_id))
            .or_default()
            .insert(h.annotator, h.answer);
    }
    let mut out = HashMap::new();
    for (key, by_annotator) in grouped {
        let answers: Vec<&String> = by_annotator.values().collect();
        let resolved = match answers.len() {
            1 => Some(answers[0].clone()),
            _ => match majority_vote(&answers)? {
                Vote::Resolved(a) => Some(a),
                Vote::NeedsThird | Vote::Unresolved => None,
            },
        };
        if let Some(r) = resolved {
            out.insert(key, r);
        }
    }
    Ok(out)
}

fn attribute(g: &GlobalArgs, a: AttributeArgs) -> Result<(), CliError> {
    require_files([a.records.as_path(), a.questions.as_path(), a.human.as_path()])?;
    let b = load_questions(&a.questions)?;
    let records = load_answer_records(&a.records)?;
    let human = resolve_human_answers(&a.human)?;
    let split = attribute_errors(&records, &b.tuples, &human)?;
    emit(g.format, &split, || {
        let mut t = Table::new(["t2i_errors", "vqa_errors", "unjudged"]);
        t.push([
            split.t2i_errors.to_string(),
            split.vqa_errors.to_string(),
            split.unjudged.to_string(),
        ]);
        t
    })
}

fn stats_table(s: &StatsSummary) -> Table {
    let mut t = Table::new(["statistic", "value"]);
    t.push(["prompts".to_string(), s.prompts.to_string()]);
    t.push(["questions".to_string(), s.questions.to_string()]);
    t.push(["binary".to_string(), s.binary.to_string()]);
    t.push(["multiple_choice".to_string(), s.multiple_choice.to_string()]);
    t.push([
        "avg_questions_per_prompt".to_string(),
        format!("{:.2}", s.avg_questions_per_prompt),
    ]);
    t.push([
        "avg_words_per_prompt".to_string(),
        format!("{:.2}", s.avg_words_per_prompt),
    ]);
    for (c, n) in &s.by_category {
        t.push([format!("category: {c}"), n.to_string()]);
    }
    for (src, n) in &s.prompts_by_source {
        t.push([format!("prompts: {src}"), n.to_string()]);
    }
    for (src, n) in &s.questions_by_source {
        t.push([format!("questions: {src}"), n.to_string()]);
    }
    t
}

fn stats(g: &GlobalArgs, a: StatsArgs) -> Result<(), CliError> {
    require_files([a.benchmark.as_path()])?;
    let s = benchmark_stats(&load_questions(&a.benchmark)?);
    emit(g.format, &s, || stats_table(&s))
}

fn import(g: &GlobalArgs, a: ImportArgs) -> Result<(), CliError> {
    require_files([a.qa.as_path()].into_iter().chain(a.text_inputs.as_deref()))?;
    let outcome = import_released_tifa_files(a.text_inputs.as_deref(), &a.qa)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    save_benchmark(&outcome.benchmark, &a.out)?;
    let s = benchmark_stats(&outcome.benchmark);
    emit(g.format, &s, || stats_table(&s))
}
