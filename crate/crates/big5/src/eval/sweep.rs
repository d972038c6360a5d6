//! Proportional trait scaling: vary one trait over fixed levels, hold the
//! others at a neutral value, and correlate assigned levels with measured
//! questionnaire scores.

use serde::{Deserialize, Serialize};

use super::stats::{pearson, CorrelationResult};
use super::EvalError;
use crate::gateway::{Gateway, GenerationParams};
use crate::persona::{expand_profile, BigFiveProfile, TraitDim, TraitScale};
use crate::prompt::{build_prompt_with, PromptKind, TemplateSet};
use crate::psych::{administer, score, AdministerOptions, Questionnaire};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub prompt_kind: PromptKind,
    pub scale: u32,
    /// Assigned intensities for the target trait.
    pub levels: Vec<u32>,
    /// Intensity held by the four non-target traits.
    pub neutral_value: u32,
    #[serde(default)]
    pub template_set: TemplateSet,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            prompt_kind: PromptKind::Simple,
            scale: 100,
            levels: (0..10).map(|i| i * 10).collect(),
            neutral_value: 50,
            template_set: TemplateSet::Faithful,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub level: u32,
    /// Measured target-trait score; None when the administration failed.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitSweepRow {
    pub trait_dim: TraitDim,
    pub points: Vec<SweepPoint>,
    /// Omitted when any point failed or the series is degenerate.
    pub correlation: Option<CorrelationResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub backend: String,
    pub prompt_kind: PromptKind,
    pub scale: u32,
    pub questionnaire: String,
    pub seed: u64,
    pub rows: Vec<TraitSweepRow>,
}

impl SweepReport {
    pub fn administrations(&self) -> usize {
        self.rows.iter().map(|r| r.points.len()).sum()
    }
}

/// Runs the full sweep: every trait crossed with every level, one
/// administration each.
pub fn trait_sweep(
    gateway: &Gateway,
    q: &Questionnaire,
    cfg: &SweepConfig,
    params: &GenerationParams,
    administer_options: &AdministerOptions,
    seed: u64,
) -> Result<SweepReport, EvalError> {
    let covered = q.traits_covered();
    if let Some(missing) = TraitDim::ALL.iter().find(|t| !covered.contains(t)) {
        return Err(EvalError::Input(format!(
            "questionnaire {} has no {missing} items, sweep needs all five traits",
            q.name
        )));
    }
    if cfg.levels.len() < 3 {
        return Err(EvalError::Input("sweep needs at least 3 levels".into()));
    }
    let scale = TraitScale::new(cfg.scale)?;

    let mut rows = Vec::with_capacity(5);
    for dim in TraitDim::ALL {
        let mut points = Vec::with_capacity(cfg.levels.len());
        let mut flag: Option<String> = None;
        for &level in &cfg.levels {
            let profile = BigFiveProfile::uniform(scale, cfg.neutral_value)?
                .with_value(dim, level)?;
            let facets = expand_profile(&profile, &Default::default())?;
            let persona = build_prompt_with(cfg.prompt_kind, &facets, scale, cfg.template_set)?;
            let responses = administer(&persona, q, gateway, params, administer_options);
            let report = score(&responses, q)?;
            let measured = report.mean(dim);
            if responses.unreliable {
                flag = Some(format!("unreliable administration at level {level}"));
            } else if measured.is_none() {
                flag = Some(format!("no answered {dim} items at level {level}"));
            }
            points.push(SweepPoint { level, score: measured });
        }

        let correlation = if flag.is_none() {
            let xs: Vec<f64> = points.iter().map(|p| f64::from(p.level)).collect();
            let ys: Vec<f64> =
                points.iter().map(|p| p.score.expect("unflagged points are scored")).collect();
            match pearson(&xs, &ys) {
                Ok(c) => Some(c),
                Err(e) => {
                    flag = Some(e.to_string());
                    None
                }
            }
        } else {
            None
        };
        rows.push(TraitSweepRow { trait_dim: dim, points, correlation, flag });
    }

    Ok(SweepReport {
        backend: gateway.describe(),
        prompt_kind: cfg.prompt_kind,
        scale: cfg.scale,
        questionnaire: q.name.clone(),
        seed,
        rows,
    })
}
