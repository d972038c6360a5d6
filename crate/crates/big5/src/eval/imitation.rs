//! Human imitation: map real questionnaire trait scores onto profiles,
//! condition agents with them, re-administer the same questionnaire, and
//! measure the per-person RMSE on the instrument's native scale.

use std::path::Path;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::stats::rmse;
use super::EvalError;
use crate::gateway::{Gateway, GenerationParams};
use crate::persona::{expand_profile, rescale_likert, BigFiveProfile, TraitDim, TraitScale};
use crate::prompt::{build_prompt_with, PromptKind, TemplateSet};
use crate::psych::{administer, score, AdministerOptions, Questionnaire};

/// One participant's five trait scores on the questionnaire scale.
#[derive(Debug, Clone, PartialEq)]
pub struct HumanScores {
    pub person_id: String,
    pub scores: [Ratio<i64>; 5],
}

fn ratio_to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Parses a decimal string into an exact rational ("3.4" -> 34/10).
pub fn parse_decimal(s: &str) -> Option<Ratio<i64>> {
    let s = s.trim();
    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if frac_part.len() > 12 {
        return None;
    }
    let negative = int_part.starts_with('-');
    let int_digits = int_part.trim_start_matches(['-', '+']);
    if int_digits.is_empty() && frac_part.is_empty() {
        return None;
    }
    let mut numer: i64 = if int_digits.is_empty() { 0 } else { int_digits.parse().ok()? };
    let mut denom: i64 = 1;
    for c in frac_part.chars() {
        let d = c.to_digit(10)? as i64;
        numer = numer.checked_mul(10)?.checked_add(d)?;
        denom = denom.checked_mul(10)?;
    }
    if negative {
        numer = -numer;
    }
    Some(Ratio::new(numer, denom))
}

/// Loads a tab-separated table with columns `person_id`, `openness`,
/// `conscientiousness`, `extraversion`, `agreeableness`, `neuroticism`.
/// Scores outside `[lo, hi]` are rejected naming the person.
pub fn load_human_scores(
    path: &Path,
    lo: Ratio<i64>,
    hi: Ratio<i64>,
) -> Result<Vec<HumanScores>, EvalError> {
    let content = std::fs::read_to_string(path)?;
    parse_human_scores(&content, lo, hi)
}

pub fn parse_human_scores(
    content: &str,
    lo: Ratio<i64>,
    hi: Ratio<i64>,
) -> Result<Vec<HumanScores>, EvalError> {
    let mut lines = content.lines();
    let header = lines.next().ok_or_else(|| EvalError::Input("empty human-scores file".into()))?;
    let columns: Vec<&str> = header.split('\t').map(str::trim).collect();
    let col = |name: &str| {
        columns
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| EvalError::Input(format!("missing column {name}")))
    };
    let id_col = col("person_id")?;
    let trait_cols: Vec<usize> =
        TraitDim::ALL.iter().map(|t| col(t.name())).collect::<Result<_, _>>()?;

    let mut out = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let person_id = fields
            .get(id_col)
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .ok_or_else(|| EvalError::Input("row without person_id".into()))?;
        let mut scores = [Ratio::from_integer(0); 5];
        for (slot, &c) in scores.iter_mut().zip(&trait_cols) {
            let raw = fields.get(c).map(|s| s.trim()).unwrap_or("");
            let value = parse_decimal(raw).ok_or_else(|| {
                EvalError::Input(format!("person {person_id}: bad score {raw:?}"))
            })?;
            if value < lo || value > hi {
                return Err(EvalError::Input(format!(
                    "person {person_id}: score {} is outside [{lo}, {hi}]",
                    ratio_to_f64(value)
                )));
            }
            *slot = value;
        }
        out.push(HumanScores { person_id, scores });
    }
    if out.is_empty() {
        return Err(EvalError::Input("human-scores file has no rows".into()));
    }
    Ok(out)
}

/// Maps a human trait score onto the nearest integer profile intensity.
pub fn score_to_intensity(
    score: Ratio<i64>,
    lo: Ratio<i64>,
    hi: Ratio<i64>,
    scale: TraitScale,
) -> Result<u32, EvalError> {
    let exact = rescale_likert(score, lo, hi, scale)?;
    let rounded = exact.round().to_integer();
    Ok(rounded.clamp(0, i64::from(scale.max())) as u32)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImitationConfig {
    pub prompt_kind: PromptKind,
    pub scale: u32,
    #[serde(default)]
    pub template_set: TemplateSet,
}

impl Default for ImitationConfig {
    fn default() -> Self {
        ImitationConfig {
            prompt_kind: PromptKind::Simple,
            scale: 100,
            template_set: TemplateSet::Faithful,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonResult {
    pub person_id: String,
    pub human: [f64; 5],
    pub assigned: [u32; 5],
    pub agent: [Option<f64>; 5],
    /// None when any trait went unmeasured; excluded from the aggregate.
    pub rmse: Option<f64>,
    pub unreliable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImitationReport {
    pub backend: String,
    pub questionnaire: String,
    pub prompt_kind: PromptKind,
    pub scale: u32,
    pub persons: Vec<PersonResult>,
    /// Mean RMSE over persons with complete measurements.
    pub aggregate_rmse: Option<f64>,
}

/// Builds one agent per person from their rescaled trait scores and
/// measures how closely the agent's questionnaire scores match.
pub fn imitation_rmse(
    humans: &[HumanScores],
    q: &Questionnaire,
    cfg: &ImitationConfig,
    gateway: &Gateway,
    params: &GenerationParams,
    administer_options: &AdministerOptions,
) -> Result<ImitationReport, EvalError> {
    let scale = TraitScale::new(cfg.scale)?;
    let lo = Ratio::from_integer(q.likert_min);
    let hi = Ratio::from_integer(q.likert_max);

    let mut persons = Vec::with_capacity(humans.len());
    for human in humans {
        let mut assigned = [0u32; 5];
        for (slot, &score_value) in assigned.iter_mut().zip(&human.scores) {
            if score_value < lo || score_value > hi {
                return Err(EvalError::Input(format!(
                    "person {}: score {} is outside [{}, {}]",
                    human.person_id,
                    ratio_to_f64(score_value),
                    q.likert_min,
                    q.likert_max
                )));
            }
            *slot = score_to_intensity(score_value, lo, hi, scale)?;
        }
        let profile = BigFiveProfile::new(scale, assigned)?;
        let facets = expand_profile(&profile, &Default::default())?;
        let persona = build_prompt_with(cfg.prompt_kind, &facets, scale, cfg.template_set)?;
        let responses = administer(&persona, q, gateway, params, administer_options);
        let report = score(&responses, q)?;

        let human_f: Vec<f64> = human.scores.iter().map(|&s| ratio_to_f64(s)).collect();
        let mut agent = [None; 5];
        for (slot, dim) in agent.iter_mut().zip(TraitDim::ALL) {
            *slot = report.mean(dim);
        }
        let person_rmse = if agent.iter().all(Option::is_some) {
            let agent_f: Vec<f64> = agent.iter().map(|m| m.expect("checked")).collect();
            Some(rmse(&human_f, &agent_f)?)
        } else {
            None
        };
        persons.push(PersonResult {
            person_id: human.person_id.clone(),
            human: [human_f[0], human_f[1], human_f[2], human_f[3], human_f[4]],
            assigned,
            agent,
            rmse: person_rmse,
            unreliable: responses.unreliable,
        });
    }

    let complete: Vec<f64> = persons.iter().filter_map(|p| p.rmse).collect();
    let aggregate_rmse = if complete.is_empty() {
        None
    } else {
        Some(complete.iter().sum::<f64>() / complete.len() as f64)
    };
    Ok(ImitationReport {
        backend: gateway.describe(),
        questionnaire: q.name.clone(),
        prompt_kind: cfg.prompt_kind,
        scale: cfg.scale,
        persons,
        aggregate_rmse,
    })
}
