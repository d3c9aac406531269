use std::collections::HashSet;
use std::io::Cursor;
use std::path::Path;

use base64::Engine;

use super::{ImageRef, Score, ScoringError, VqaAnswerRecord};
use crate::backend::{
    map_bounded, BackendClient, BackendEndpoint, BackendError, Capability, SimilarityRequest, SimilarityResponse,
    VqaRequest, VqaResponse,
};
use crate::benchmark::{group_by_prompt, QuestionAnswerTuple};
use crate::text::normalize_answer;

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceSelection {
    pub chosen: String,
    /// Present when a similarity call was made.
    pub scores: Option<Vec<f64>>,
}

/// Maps a free-form answer onto one of `choices`. An exact match after
/// normalization needs no backend call; otherwise the most similar choice
/// wins, earliest on ties.
pub fn select_choice(
    freeform: &str,
    choices: &[String],
    client: &BackendClient,
    sim: Option<&BackendEndpoint>,
) -> Result<ChoiceSelection, ScoringError> {
    if choices.is_empty() {
        return Err(ScoringError::EmptyChoices);
    }
    let target = normalize_answer(freeform);
    if let Some(c) = choices.iter().find(|c| normalize_answer(c) == target) {
        return Ok(ChoiceSelection {
            chosen: c.clone(),
            scores: None,
        });
    }
    let sim = sim.ok_or(ScoringError::NoSimilarityBackend)?;
    let resp: SimilarityResponse = client.call(
        sim,
        Capability::Similarity,
        &SimilarityRequest {
            query: freeform.to_string(),
            candidates: choices.to_vec(),
        },
    )?;
    if resp.scores.len() != choices.len() {
        return Err(BackendError::Protocol {
            url: sim.url(Capability::Similarity.path()),
            reason: format!("{} scores for {} candidates", resp.scores.len(), choices.len()),
        }
        .into());
    }
    let best = argmax_first(&resp.scores);
    Ok(ChoiceSelection {
        chosen: choices[best].clone(),
        scores: Some(resp.scores),
    })
}

/// Index of the largest score, earliest among ties; NaN never wins.
fn argmax_first(scores: &[f64]) -> usize {
    let key = |s: f64| if s.is_nan() { f64::NEG_INFINITY } else { s };
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if key(s) > key(scores[best]) {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnswerOutcome {
    pub record: VqaAnswerRecord,
    /// Set when a choice-capable backend answered outside the choice list.
    pub warning: Option<String>,
}

/// Answers `tuple` against an already encoded image.
///
/// Backends advertising `vqa_mc` get the choices and pick one directly;
/// others answer free-form and the answer is mapped by [`select_choice`].
pub fn answer_question(
    image_id: &str,
    image_b64: &str,
    tuple: &QuestionAnswerTuple,
    client: &BackendClient,
    vqa: &BackendEndpoint,
    sim: Option<&BackendEndpoint>,
) -> Result<AnswerOutcome, ScoringError> {
    if tuple.choices.is_empty() {
        return Err(ScoringError::EmptyChoices);
    }
    let multiple_choice = vqa.has(Capability::VqaMc);
    let resp: VqaResponse = client.call(
        vqa,
        if multiple_choice {
            Capability::VqaMc
        } else {
            Capability::Vqa
        },
        &VqaRequest {
            image_b64: image_b64.to_string(),
            question: tuple.question.clone(),
            choices: multiple_choice.then(|| tuple.choices.clone()),
        },
    )?;

    let mut warning = None;
    let (freeform, selection) = match multiple_choice.then(|| tuple.choice_index(&resp.answer)).flatten() {
        Some(i) => (
            String::new(),
            ChoiceSelection {
                chosen: tuple.choices[i].clone(),
                scores: None,
            },
        ),
        None => {
            if multiple_choice {
                warning = Some(format!(
                    "tuple `{}` on image `{image_id}`: answer `{}` is not among the choices",
                    tuple.id, resp.answer
                ));
            }
            let sel = select_choice(&resp.answer, &tuple.choices, client, sim)?;
            (resp.answer, sel)
        }
    };
    Ok(AnswerOutcome {
        record: VqaAnswerRecord {
            tuple_id: tuple.id.clone(),
            image_id: image_id.to_string(),
            freeform,
            correct: tuple.is_correct(&selection.chosen),
            chosen: selection.chosen,
            similarity_scores: selection.scores,
        },
        warning,
    })
}

/// Decodes a PNG or JPEG and re-encodes it as base64 PNG.
pub fn encode_image(path: &Path) -> Result<String, ScoringError> {
    let decode_err = |reason: String| ScoringError::ImageDecode {
        path: path.display().to_string(),
        reason,
    };
    let img = image::ImageReader::open(path)
        .map_err(|e| decode_err(e.to_string()))?
        .with_guessed_format()
        .map_err(|e| decode_err(e.to_string()))?
        .decode()
        .map_err(|e| decode_err(e.to_string()))?;
    let mut png = Vec::new();
    img.write_to(&mut Cursor::new(&mut png), image::ImageFormat::Png)
        .map_err(|e| decode_err(e.to_string()))?;
    Ok(base64::engine::general_purpose::STANDARD.encode(png))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageScore {
    pub image_id: String,
    pub score: Score,
    /// One record per tuple, in tuple order.
    pub records: Vec<VqaAnswerRecord>,
    pub warnings: Vec<String>,
}

impl ImageScore {
    fn from_outcomes(image_id: &str, outcomes: Vec<AnswerOutcome>) -> Self {
        let mut s = ImageScore {
            image_id: image_id.to_string(),
            score: Score::default(),
            records: Vec::with_capacity(outcomes.len()),
            warnings: Vec::new(),
        };
        for o in outcomes {
            s.score.push(o.record.correct);
            s.warnings.extend(o.warning);
            s.records.push(o.record);
        }
        s
    }
}

fn check_backends(vqa: &BackendEndpoint, sim: Option<&BackendEndpoint>) -> Result<(), ScoringError> {
    vqa.require(Capability::Vqa)?;
    match sim {
        Some(s) => s.require(Capability::Similarity)?,
        None if !vqa.has(Capability::VqaMc) => return Err(ScoringError::NoSimilarityBackend),
        None => {}
    }
    Ok(())
}

/// Scores one image against the tuples of its prompt.
pub fn score_image(
    img: &ImageRef,
    tuples: &[&QuestionAnswerTuple],
    client: &BackendClient,
    vqa: &BackendEndpoint,
    sim: Option<&BackendEndpoint>,
) -> Result<ImageScore, ScoringError> {
    if tuples.is_empty() {
        return Err(ScoringError::NoQuestionsForPrompt(img.prompt_id.clone()));
    }
    check_backends(vqa, sim)?;
    let b64 = encode_image(&img.path)?;
    let outcomes = map_bounded(tuples, client.workers(), |_, t| {
        answer_question(&img.image_id, &b64, t, client, vqa, sim)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    Ok(ImageScore::from_outcomes(&img.image_id, outcomes))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoringRun {
    /// One entry per manifest image, in manifest order.
    pub images: Vec<ImageScore>,
}

impl ScoringRun {
    pub fn records(&self) -> impl Iterator<Item = &VqaAnswerRecord> {
        self.images.iter().flat_map(|i| i.records.iter())
    }

    pub fn warnings(&self) -> impl Iterator<Item = &String> {
        self.images.iter().flat_map(|i| i.warnings.iter())
    }
}

/// Scores every image in the manifest. All question calls share one bounded
/// pool; results are assembled in manifest and tuple order.
pub fn score_images(
    images: &[ImageRef],
    tuples: &[QuestionAnswerTuple],
    client: &BackendClient,
    vqa: &BackendEndpoint,
    sim: Option<&BackendEndpoint>,
) -> Result<ScoringRun, ScoringError> {
    let by_prompt = group_by_prompt(tuples);
    let mut seen = HashSet::new();
    for img in images {
        if !seen.insert(img.image_id.as_str()) {
            return Err(ScoringError::DuplicateImage(img.image_id.clone()));
        }
        if !by_prompt.contains_key(img.prompt_id.as_str()) {
            return Err(ScoringError::NoQuestionsForPrompt(img.prompt_id.clone()));
        }
    }
    check_backends(vqa, sim)?;

    let encoded = map_bounded(images, client.workers(), |_, img| encode_image(&img.path))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let jobs: Vec<(usize, &QuestionAnswerTuple)> = images
        .iter()
        .enumerate()
        .flat_map(|(i, img)| by_prompt[img.prompt_id.as_str()].iter().map(move |t| (i, *t)))
        .collect();
    let mut outcomes = map_bounded(&jobs, client.workers(), |_, (i, t)| {
        answer_question(&images[*i].image_id, &encoded[*i], t, client, vqa, sim)
    })
    .into_iter();

    let mut run = ScoringRun::default();
    for img in images {
        let n = by_prompt[img.prompt_id.as_str()].len();
        let chunk = outcomes.by_ref().take(n).collect::<Result<Vec<_>, _>>()?;
        run.images.push(ImageScore::from_outcomes(&img.image_id, chunk));
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_earliest_tie() {
        assert_eq!(argmax_first(&[0.2, 0.9, 0.9, 0.1]), 1);
        assert_eq!(argmax_first(&[0.5]), 0);
        assert_eq!(argmax_first(&[f64::NAN, 0.1, 0.1]), 1);
        assert_eq!(argmax_first(&[0.3, f64::NAN, 0.3]), 0);
    }
}
