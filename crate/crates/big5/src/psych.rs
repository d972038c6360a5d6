//! Questionnaire loading, administration, answer parsing, and scoring.
//!
//! Item banks are UTF-8 tab-separated tables with a header row and columns
//! `id`, `text`, `trait`, `facet` (optional), `reverse` (0/1). Items are
//! administered one request each: the persona rides along as the system
//! message and the item is wrapped in a fixed instruction with numbered
//! Likert options. Unparseable replies are retried with fresh sampling,
//! then marked missing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{ChatMessage, Gateway, GenerationParams};
use crate::persona::{Facet, TraitDim};
use crate::prompt::PersonaPrompt;

#[derive(Debug, Error, PartialEq)]
pub enum PsychError {
    #[error("line {line}: {message}")]
    Load { line: usize, message: String },
    #[error("no rating found in reply")]
    NoRating,
    #[error("ambiguous rating: found {0:?}")]
    AmbiguousRating(Vec<i64>),
    #[error("rating {0} is outside [{1}, {2}]")]
    RatingOutOfRange(i64, i64, i64),
    #[error("likert range [{0}, {1}] is invalid")]
    BadLikertRange(i64, i64),
    #[error("response references unknown item id {0}")]
    UnknownItem(String),
}

/// One questionnaire statement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    pub text: String,
    pub trait_dim: TraitDim,
    pub facet: Option<Facet>,
    pub reverse_keyed: bool,
}

/// An ordered item bank with its Likert range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Questionnaire {
    pub name: String,
    pub likert_min: i64,
    pub likert_max: i64,
    pub items: Vec<Item>,
}

impl Questionnaire {
    /// Replaces the default 1..5 rating range.
    pub fn with_likert_range(mut self, min: i64, max: i64) -> Result<Questionnaire, PsychError> {
        if min >= max {
            return Err(PsychError::BadLikertRange(min, max));
        }
        self.likert_min = min;
        self.likert_max = max;
        Ok(self)
    }

    pub fn traits_covered(&self) -> BTreeSet<TraitDim> {
        self.items.iter().map(|i| i.trait_dim).collect()
    }
}

/// Loads a tab-separated item bank. Duplicate ids are rejected and trait
/// and facet names are validated against the registry; facets must belong
/// to the item's trait.
pub fn load_questionnaire(path: &Path) -> Result<Questionnaire, PsychError> {
    let content = std::fs::read_to_string(path)
        .map_err(|e| PsychError::Load { line: 0, message: format!("{}: {e}", path.display()) })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "questionnaire".to_string());
    parse_questionnaire(&content, name)
}

pub fn parse_questionnaire(content: &str, name: String) -> Result<Questionnaire, PsychError> {
    let mut lines = content.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or(PsychError::Load { line: 0, message: "empty file".into() })?;
    let columns: Vec<&str> = header.split('\t').map(str::trim).collect();
    let col = |want: &str| columns.iter().position(|c| *c == want);
    let (id_col, text_col, trait_col, reverse_col) =
        match (col("id"), col("text"), col("trait"), col("reverse")) {
            (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
            _ => {
                return Err(PsychError::Load {
                    line: 1,
                    message: "header must contain columns id, text, trait, reverse".into(),
                })
            }
        };
    let facet_col = col("facet");

    let mut items = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let field = |c: usize| fields.get(c).map(|s| s.trim()).unwrap_or("");
        let id = field(id_col);
        if id.is_empty() {
            return Err(PsychError::Load { line: line_no, message: "missing id".into() });
        }
        if !seen.insert(id.to_string()) {
            return Err(PsychError::Load {
                line: line_no,
                message: format!("duplicate item id {id}"),
            });
        }
        let text = field(text_col);
        if text.is_empty() {
            return Err(PsychError::Load { line: line_no, message: "missing text".into() });
        }
        let trait_dim = TraitDim::from_name(field(trait_col)).map_err(|e| PsychError::Load {
            line: line_no,
            message: e.to_string(),
        })?;
        let facet = match facet_col.map(field).filter(|f| !f.is_empty()) {
            Some(raw) => {
                let facet = Facet::from_name(raw).map_err(|e| PsychError::Load {
                    line: line_no,
                    message: e.to_string(),
                })?;
                if facet.parent() != trait_dim {
                    return Err(PsychError::Load {
                        line: line_no,
                        message: format!(
                            "facet {facet} belongs to {} but item is keyed to {trait_dim}",
                            facet.parent()
                        ),
                    });
                }
                Some(facet)
            }
            None => None,
        };
        let reverse_keyed = match field(reverse_col) {
            "0" => false,
            "1" => true,
            other => {
                return Err(PsychError::Load {
                    line: line_no,
                    message: format!("reverse must be 0 or 1, got {other:?}"),
                })
            }
        };
        items.push(Item {
            id: id.to_string(),
            text: text.to_string(),
            trait_dim,
            facet,
            reverse_keyed,
        });
    }
    if items.is_empty() {
        return Err(PsychError::Load { line: 0, message: "bank has no items".into() });
    }
    Ok(Questionnaire { name, likert_min: 1, likert_max: 5, items })
}

const LIKERT_INSTRUCTION: &str = include_str!("../assets/instructions/likert.txt");

const ANCHORS_5: [&str; 5] = [
    "Very Inaccurate",
    "Moderately Inaccurate",
    "Neither Accurate Nor Inaccurate",
    "Moderately Accurate",
    "Very Accurate",
];

const ANCHORS_7: [&str; 7] = [
    "Strongly Disagree",
    "Disagree",
    "Slightly Disagree",
    "Neutral",
    "Slightly Agree",
    "Agree",
    "Strongly Agree",
];

fn likert_options(min: i64, max: i64) -> String {
    let span = (max - min + 1) as usize;
    let mut out = String::new();
    for (i, value) in (min..=max).enumerate() {
        let label = match span {
            5 => ANCHORS_5[i].to_string(),
            7 => ANCHORS_7[i].to_string(),
            _ => format!("Level {value}"),
        };
        if i > 0 {
            out.push('\n');
        }
        let _ = write!(out, "{value}. {label}");
    }
    out
}

/// The message list sent for one item: persona as system message (omitted
/// when the persona is empty) plus the rendered instruction.
pub fn item_request(persona: &PersonaPrompt, item: &Item, q: &Questionnaire) -> Vec<ChatMessage> {
    let instruction = LIKERT_INSTRUCTION
        .replace("{statement}", &item.text)
        .replace("{options}", &likert_options(q.likert_min, q.likert_max));
    let mut messages = Vec::with_capacity(2);
    if !persona.is_empty() {
        messages.push(ChatMessage::system(persona.text()));
    }
    messages.push(ChatMessage::user(instruction));
    messages
}

/// Extracts a unique, in-range integer rating from a model reply.
///
/// Accepts a bare integer, "(k)", "option k", or a unique leading integer
/// within the first line; rejects ambiguous or out-of-range replies.
pub fn parse_likert(text: &str, likert_min: i64, likert_max: i64) -> Result<i64, PsychError> {
    let first_line = text.trim().lines().next().unwrap_or("");
    let mut found: Vec<i64> = Vec::new();
    let mut digits = String::new();
    for c in first_line.chars().chain(std::iter::once(' ')) {
        if c.is_ascii_digit() {
            digits.push(c);
        } else if !digits.is_empty() {
            if let Ok(v) = digits.parse::<i64>() {
                if !found.contains(&v) {
                    found.push(v);
                }
            }
            digits.clear();
        }
    }
    match found.as_slice() {
        [] => Err(PsychError::NoRating),
        [v] => {
            if *v < likert_min || *v > likert_max {
                Err(PsychError::RatingOutOfRange(*v, likert_min, likert_max))
            } else {
                Ok(*v)
            }
        }
        _ => Err(PsychError::AmbiguousRating(found)),
    }
}

/// Outcome of administering one item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemResponse {
    pub item_id: String,
    pub raw_text: String,
    pub rating: Option<i64>,
    pub attempts: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Responses to a full administration, in administered order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseSet {
    pub questionnaire: String,
    pub responses: Vec<ItemResponse>,
    /// Set when more than `missing_threshold` of items went unanswered.
    pub unreliable: bool,
}

impl ResponseSet {
    pub fn answered(&self) -> usize {
        self.responses.iter().filter(|r| r.rating.is_some()).count()
    }

    pub fn missing(&self) -> usize {
        self.responses.len() - self.answered()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdministerOptions {
    /// Retries after the first attempt; an item is missing after
    /// `1 + retries` failed attempts.
    pub retries: u32,
    /// Shuffles item order when set; canonical file order otherwise.
    pub shuffle_seed: Option<u64>,
    /// Missing fraction above which the administration is flagged
    /// unreliable.
    pub missing_threshold: f64,
    /// Worker threads; actual concurrency is still capped by the gateway.
    pub parallelism: usize,
}

impl Default for AdministerOptions {
    fn default() -> Self {
        AdministerOptions {
            retries: 2,
            shuffle_seed: None,
            missing_threshold: 0.1,
            parallelism: 8,
        }
    }
}

/// Administers every item of `q` to the persona, one request per item.
pub fn administer(
    persona: &PersonaPrompt,
    q: &Questionnaire,
    gateway: &Gateway,
    params: &GenerationParams,
    options: &AdministerOptions,
) -> ResponseSet {
    let mut order: Vec<usize> = (0..q.items.len()).collect();
    if let Some(seed) = options.shuffle_seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
    }

    let responses = crate::gateway::parallel_map(order, options.parallelism, |idx| {
        let item = &q.items[idx];
        let messages = item_request(persona, item, q);
        let mut raw_text = String::new();
        let mut last_error = None;
        let mut attempts = 0;
        for _ in 0..=options.retries {
            attempts += 1;
            match gateway.complete(&messages, params) {
                Ok(reply) => {
                    raw_text = reply;
                    match parse_likert(&raw_text, q.likert_min, q.likert_max) {
                        Ok(rating) => {
                            return ItemResponse {
                                item_id: item.id.clone(),
                                raw_text,
                                rating: Some(rating),
                                attempts,
                                error: None,
                            }
                        }
                        Err(e) => last_error = Some(e.to_string()),
                    }
                }
                Err(e) => last_error = Some(e.to_string()),
            }
        }
        ItemResponse {
            item_id: item.id.clone(),
            raw_text,
            rating: None,
            attempts,
            error: last_error,
        }
    });

    let missing = responses.iter().filter(|r| r.rating.is_none()).count();
    let unreliable = !responses.is_empty()
        && (missing as f64) > options.missing_threshold * responses.len() as f64;
    ResponseSet { questionnaire: q.name.clone(), responses, unreliable }
}

/// Whether variance divides by n (descriptive) or n-1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceMode {
    #[default]
    Population,
    Sample,
}

/// Per-trait mean and variance on the instrument's Likert scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraitScores {
    pub mean: f64,
    pub variance: f64,
    pub answered: usize,
    pub missing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitReport {
    pub questionnaire: String,
    pub likert_min: i64,
    pub likert_max: i64,
    pub traits: BTreeMap<TraitDim, TraitScores>,
    /// Traits with zero answered items, omitted from `traits`.
    pub omitted: Vec<TraitDim>,
    pub unreliable: bool,
}

impl TraitReport {
    pub fn mean(&self, dim: TraitDim) -> Option<f64> {
        self.traits.get(&dim).map(|s| s.mean)
    }
}

pub fn score(responses: &ResponseSet, q: &Questionnaire) -> Result<TraitReport, PsychError> {
    score_with_mode(responses, q, VarianceMode::Population)
}

/// Reverse-keyed ratings are mirrored (`x -> min + max - x`) before
/// aggregation; missing items are excluded from both mean and variance.
pub fn score_with_mode(
    responses: &ResponseSet,
    q: &Questionnaire,
    mode: VarianceMode,
) -> Result<TraitReport, PsychError> {
    let by_id: BTreeMap<&str, &Item> = q.items.iter().map(|i| (i.id.as_str(), i)).collect();
    let mut ratings: BTreeMap<TraitDim, Vec<f64>> = BTreeMap::new();
    let mut missing: BTreeMap<TraitDim, usize> = BTreeMap::new();
    for t in q.traits_covered() {
        ratings.entry(t).or_default();
        missing.entry(t).or_default();
    }
    for response in &responses.responses {
        let item = by_id
            .get(response.item_id.as_str())
            .ok_or_else(|| PsychError::UnknownItem(response.item_id.clone()))?;
        match response.rating {
            Some(r) => {
                let value =
                    if item.reverse_keyed { q.likert_min + q.likert_max - r } else { r };
                ratings.entry(item.trait_dim).or_default().push(value as f64);
            }
            None => *missing.entry(item.trait_dim).or_default() += 1,
        }
    }

    let mut traits = BTreeMap::new();
    let mut omitted = Vec::new();
    for (dim, values) in &ratings {
        if values.is_empty() {
            omitted.push(*dim);
            continue;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        let variance = match mode {
            VarianceMode::Population => ss / n,
            VarianceMode::Sample if values.len() > 1 => ss / (n - 1.0),
            VarianceMode::Sample => 0.0,
        };
        traits.insert(
            *dim,
            TraitScores {
                mean,
                variance,
                answered: values.len(),
                missing: missing.get(dim).copied().unwrap_or(0),
            },
        );
    }
    Ok(TraitReport {
        questionnaire: q.name.clone(),
        likert_min: q.likert_min,
        likert_max: q.likert_max,
        traits,
        omitted,
        unreliable: responses.unreliable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{BackendSpec, ScriptedBehavior};
    use crate::persona::{expand_profile, BigFiveProfile, TraitScale};
    use crate::prompt::{build_prompt, PromptKind};
    use proptest::prelude::*;

    fn toy_bank(rows: &str) -> Questionnaire {
        parse_questionnaire(&format!("id\ttext\ttrait\tfacet\treverse\n{rows}"), "toy".into())
            .unwrap()
    }

    fn answered(id: &str, rating: i64) -> ItemResponse {
        ItemResponse {
            item_id: id.into(),
            raw_text: rating.to_string(),
            rating: Some(rating),
            attempts: 1,
            error: None,
        }
    }

    fn response_set(responses: Vec<ItemResponse>) -> ResponseSet {
        ResponseSet { questionnaire: "toy".into(), responses, unreliable: false }
    }

    #[test]
    fn loads_four_item_bank() {
        let q = toy_bank(
            "o1\tOpen statement.\topenness\t\t0\n\
             c1\tConscientious statement.\tconscientiousness\t\t0\n\
             e1\tExtraverted statement.\textraversion\t\t0\n\
             a1\tAgreeable statement.\tagreeableness\t\t1",
        );
        assert_eq!(q.items.len(), 4);
        assert_eq!(q.likert_min, 1);
        assert_eq!(q.likert_max, 5);
        assert!(q.items[3].reverse_keyed);
        assert!(!q.traits_covered().contains(&TraitDim::Neuroticism));
    }

    #[test]
    fn rejects_facet_under_wrong_trait() {
        let err = parse_questionnaire(
            "id\ttext\ttrait\tfacet\treverse\nx1\tText.\tconscientiousness\tfantasy\t0",
            "bad".into(),
        )
        .unwrap_err();
        match err {
            PsychError::Load { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("fantasy"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_duplicate_ids_and_unknown_traits() {
        let dup = parse_questionnaire(
            "id\ttext\ttrait\tfacet\treverse\na\tOne.\topenness\t\t0\na\tTwo.\topenness\t\t0",
            "dup".into(),
        )
        .unwrap_err();
        assert!(matches!(dup, PsychError::Load { line: 3, .. }));

        let unknown = parse_questionnaire(
            "id\ttext\ttrait\tfacet\treverse\na\tOne.\tcourage\t\t0",
            "unknown".into(),
        )
        .unwrap_err();
        assert!(unknown.to_string().contains("courage"));
    }

    #[test]
    fn rejects_missing_columns() {
        let err =
            parse_questionnaire("id\ttext\ttrait\na\tOne.\topenness", "short".into()).unwrap_err();
        assert!(matches!(err, PsychError::Load { line: 1, .. }));
    }

    #[test]
    fn accepts_custom_likert_range() {
        let q = toy_bank("o1\tOpen statement.\topenness\t\t0")
            .with_likert_range(1, 7)
            .unwrap();
        assert_eq!((q.likert_min, q.likert_max), (1, 7));
        assert!(parse_likert("7", q.likert_min, q.likert_max).is_ok());
        assert!(toy_bank("o1\tX.\topenness\t\t0").with_likert_range(3, 3).is_err());
    }

    #[test]
    fn parse_likert_accepts_common_shapes() {
        assert_eq!(parse_likert("3", 1, 5).unwrap(), 3);
        assert_eq!(parse_likert(" (4) ", 1, 5).unwrap(), 4);
        assert_eq!(parse_likert("option 2", 1, 5).unwrap(), 2);
        assert_eq!(parse_likert("I choose option 4 because it fits me.", 1, 5).unwrap(), 4);
        assert_eq!(parse_likert("5.\nBecause I am outgoing: 1", 1, 5).unwrap(), 5);
    }

    #[test]
    fn parse_likert_rejects_bad_replies() {
        assert_eq!(parse_likert("2 or maybe 4", 1, 5), Err(PsychError::AmbiguousRating(vec![2, 4])));
        assert_eq!(parse_likert("no idea", 1, 5), Err(PsychError::NoRating));
        assert_eq!(parse_likert("9", 1, 5), Err(PsychError::RatingOutOfRange(9, 1, 5)));
    }

    #[test]
    fn score_means_and_population_variance() {
        let q = toy_bank(
            "e1\tFirst extraversion item.\textraversion\t\t0\n\
             e2\tSecond extraversion item.\textraversion\t\t0",
        );
        let report =
            score(&response_set(vec![answered("e1", 5), answered("e2", 3)]), &q).unwrap();
        let scores = report.traits[&TraitDim::Extraversion];
        assert_eq!(scores.mean, 4.0);
        assert_eq!(scores.variance, 1.0);
        assert_eq!(scores.answered, 2);
    }

    #[test]
    fn reverse_keyed_rating_contributes_mirrored_value() {
        let q = toy_bank("e1\tReversed extraversion item.\textraversion\t\t1");
        let report = score(&response_set(vec![answered("e1", 2)]), &q).unwrap();
        assert_eq!(report.traits[&TraitDim::Extraversion].mean, 4.0);
    }

    #[test]
    fn constant_ratings_have_zero_variance() {
        let q = toy_bank(
            "o1\tOne.\topenness\t\t0\no2\tTwo.\topenness\t\t0\no3\tThree.\topenness\t\t0",
        );
        let responses =
            response_set(vec![answered("o1", 5), answered("o2", 5), answered("o3", 5)]);
        let report = score(&responses, &q).unwrap();
        assert_eq!(report.traits[&TraitDim::Openness].mean, 5.0);
        assert_eq!(report.traits[&TraitDim::Openness].variance, 0.0);
    }

    #[test]
    fn trait_with_no_answers_is_omitted_and_flagged() {
        let q = toy_bank(
            "o1\tOpen item.\topenness\t\t0\ne1\tExtraverted item.\textraversion\t\t0",
        );
        let mut responses = response_set(vec![answered("o1", 4)]);
        responses.responses.push(ItemResponse {
            item_id: "e1".into(),
            raw_text: "???".into(),
            rating: None,
            attempts: 3,
            error: Some("no rating found in reply".into()),
        });
        let report = score(&responses, &q).unwrap();
        assert!(report.traits.contains_key(&TraitDim::Openness));
        assert_eq!(report.omitted, vec![TraitDim::Extraversion]);
    }

    #[test]
    fn sample_variance_mode_uses_n_minus_one() {
        let q = toy_bank("e1\tOne.\textraversion\t\t0\ne2\tTwo.\textraversion\t\t0");
        let responses = response_set(vec![answered("e1", 5), answered("e2", 3)]);
        let report = score_with_mode(&responses, &q, VarianceMode::Sample).unwrap();
        assert_eq!(report.traits[&TraitDim::Extraversion].variance, 2.0);
    }

    fn persona(values: [u32; 5]) -> PersonaPrompt {
        let scale = TraitScale::new(100).unwrap();
        let profile = BigFiveProfile::new(scale, values).unwrap();
        let facets = expand_profile(&profile, &Default::default()).unwrap();
        build_prompt(PromptKind::Simple, &facets, scale).unwrap()
    }

    #[test]
    fn administer_against_linear_oracle() {
        let q = toy_bank(
            "e1\tMy extraversion is plain to see.\textraversion\t\t0\n\
             e2\tOthers notice my low extraversion.\textraversion\t\t1",
        );
        let gateway = BackendSpec::scripted(ScriptedBehavior::PersonaLinear).build().unwrap();
        let responses = administer(
            &persona([50, 50, 80, 50, 50]),
            &q,
            &gateway,
            &GenerationParams::default(),
            &AdministerOptions::default(),
        );
        assert_eq!(responses.responses[0].rating, Some(5));
        // reverse-keyed item: oracle mirrors 5 to (1 + 5) - 5 = 1
        assert_eq!(responses.responses[1].rating, Some(1));
        // scoring re-mirrors, so the trait mean lands back on the oracle value
        let report = score(&responses, &q).unwrap();
        assert_eq!(report.traits[&TraitDim::Extraversion].mean, 5.0);
    }

    #[test]
    fn administer_marks_items_missing_after_retry_exhaustion() {
        // echo backend returns the item prompt itself, which never parses
        let q = toy_bank("e1\tNo digits here.\textraversion\t\t0");
        let gateway = BackendSpec::scripted(ScriptedBehavior::EchoLast).build().unwrap();
        let responses = administer(
            &persona([50; 5]),
            &q,
            &gateway,
            &GenerationParams::default(),
            &AdministerOptions { retries: 2, ..Default::default() },
        );
        let r = &responses.responses[0];
        assert_eq!(r.rating, None);
        assert_eq!(r.attempts, 3);
        assert!(r.error.is_some());
        assert!(responses.unreliable);
    }

    #[test]
    fn end_to_end_means_match_clamp_formula_for_every_level() {
        let q = toy_bank(
            "e1\tMy extraversion is plain to see.\textraversion\t\t0\n\
             e2\tOthers notice my low extraversion.\textraversion\t\t1\n\
             e3\tExtraversion defines my days.\textraversion\t\t0",
        );
        let gateway = BackendSpec::scripted(ScriptedBehavior::PersonaLinear).build().unwrap();
        for s in (0..=100).step_by(10) {
            let responses = administer(
                &persona([50, 50, s, 50, 50]),
                &q,
                &gateway,
                &GenerationParams::default(),
                &AdministerOptions::default(),
            );
            let report = score(&responses, &q).unwrap();
            let expected = (1 + (s as i64) * 5 / 100).clamp(1, 5) as f64;
            assert_eq!(report.traits[&TraitDim::Extraversion].mean, expected, "s = {s}");
        }
    }

    #[test]
    fn shuffled_administration_scores_identically() {
        let q = toy_bank(
            "e1\tMy extraversion is plain to see.\textraversion\t\t0\n\
             o1\tOpenness guides me.\topenness\t\t0\n\
             a1\tAgreeableness guides me.\tagreeableness\t\t0",
        );
        let gateway = BackendSpec::scripted(ScriptedBehavior::PersonaLinear).build().unwrap();
        let params = GenerationParams::default();
        let canonical = administer(
            &persona([60, 50, 80, 40, 50]),
            &q,
            &gateway,
            &params,
            &AdministerOptions::default(),
        );
        let shuffled = administer(
            &persona([60, 50, 80, 40, 50]),
            &q,
            &gateway,
            &params,
            &AdministerOptions { shuffle_seed: Some(3), ..Default::default() },
        );
        assert_eq!(
            score(&canonical, &q).unwrap().traits,
            score(&shuffled, &q).unwrap().traits
        );
    }

    proptest! {
        #[test]
        fn reversal_is_an_involution(r in 1i64..=5) {
            let mirror = |x: i64| 1 + 5 - x;
            prop_assert_eq!(mirror(mirror(r)), r);
        }

        #[test]
        fn scoring_is_permutation_invariant(seed in 0u64..200) {
            let q = toy_bank(
                "e1\tOne.\textraversion\t\t0\n\
                 e2\tTwo.\textraversion\t\t1\n\
                 o1\tThree.\topenness\t\t0\n\
                 o2\tFour.\topenness\t\t0",
            );
            let mut responses = vec![
                answered("e1", 4), answered("e2", 2), answered("o1", 1), answered("o2", 5),
            ];
            let baseline = score(&response_set(responses.clone()), &q).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            responses.shuffle(&mut rng);
            let shuffled = score(&response_set(responses), &q).unwrap();
            prop_assert_eq!(baseline.traits, shuffled.traits);
        }

        #[test]
        fn means_stay_on_the_likert_scale(ratings in proptest::collection::vec(1i64..=5, 1..12)) {
            let rows: String = ratings
                .iter()
                .enumerate()
                .map(|(i, _)| format!("e{i}\tItem {i}.\textraversion\t\t{}\n", i % 2))
                .collect();
            let q = toy_bank(rows.trim_end());
            let responses = response_set(
                ratings
                    .iter()
                    .enumerate()
                    .map(|(i, &r)| answered(&format!("e{i}"), r))
                    .collect(),
            );
            let report = score(&responses, &q).unwrap();
            let scores = report.traits[&TraitDim::Extraversion];
            prop_assert!(scores.mean >= 1.0 && scores.mean <= 5.0);
            prop_assert!(scores.variance >= 0.0);
        }
    }
}
