//! Single-trait induction: condition each method on one maxed-out trait at
//! a time and report the measured mean and variance per target trait.

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::gateway::{Gateway, GenerationParams};
use crate::persona::{TraitDim, TraitScale};
use crate::prompt::{
    build_naive_prompt, build_neutral_prompt, build_single_trait_prompt_with, PersonaPrompt,
    PromptKind, TemplateSet,
};
use crate::psych::{administer, score, AdministerOptions, Questionnaire};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InductionCell {
    pub method: PromptKind,
    pub target: TraitDim,
    pub mean: f64,
    pub variance: f64,
    pub answered: usize,
    pub missing: usize,
    pub unreliable: bool,
}

/// One row per method, one (mean, variance) pair per trait.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InductionReport {
    pub backend: String,
    pub questionnaire: String,
    pub scale: u32,
    pub cells: Vec<InductionCell>,
}

impl InductionReport {
    pub fn cell(&self, method: PromptKind, target: TraitDim) -> Option<&InductionCell> {
        self.cells.iter().find(|c| c.method == method && c.target == target)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InductionConfig {
    pub kinds: Vec<PromptKind>,
    /// Intensity assigned to the target trait (scaler kinds only).
    pub value: u32,
    pub scale: u32,
    #[serde(default)]
    pub template_set: TemplateSet,
}

impl Default for InductionConfig {
    fn default() -> Self {
        InductionConfig {
            kinds: PromptKind::ALL.to_vec(),
            value: 100,
            scale: 100,
            template_set: TemplateSet::Faithful,
        }
    }
}

fn method_prompt(
    kind: PromptKind,
    target: TraitDim,
    cfg: &InductionConfig,
) -> Result<PersonaPrompt, EvalError> {
    let prompt = match kind {
        PromptKind::Neutral => build_neutral_prompt(),
        PromptKind::Naive => build_naive_prompt(target),
        scaler => build_single_trait_prompt_with(
            scaler,
            target,
            cfg.value,
            TraitScale::new(cfg.scale)?,
            cfg.template_set,
        )?,
    };
    Ok(prompt)
}

/// Administers the questionnaire once per (method, target trait) condition
/// and reads off the target trait's score. The neutral baseline has no
/// target, so it is administered once and read for all five traits.
pub fn single_trait_induction(
    gateway: &Gateway,
    q: &Questionnaire,
    cfg: &InductionConfig,
    params: &GenerationParams,
    administer_options: &AdministerOptions,
) -> Result<InductionReport, EvalError> {
    let mut cells = Vec::with_capacity(cfg.kinds.len() * 5);
    for &kind in &cfg.kinds {
        if kind == PromptKind::Neutral {
            let responses =
                administer(&build_neutral_prompt(), q, gateway, params, administer_options);
            let report = score(&responses, q)?;
            for target in TraitDim::ALL {
                if let Some(s) = report.traits.get(&target) {
                    cells.push(InductionCell {
                        method: kind,
                        target,
                        mean: s.mean,
                        variance: s.variance,
                        answered: s.answered,
                        missing: s.missing,
                        unreliable: report.unreliable,
                    });
                }
            }
            continue;
        }
        for target in TraitDim::ALL {
            let persona = method_prompt(kind, target, cfg)?;
            let responses = administer(&persona, q, gateway, params, administer_options);
            let report = score(&responses, q)?;
            if let Some(s) = report.traits.get(&target) {
                cells.push(InductionCell {
                    method: kind,
                    target,
                    mean: s.mean,
                    variance: s.variance,
                    answered: s.answered,
                    missing: s.missing,
                    unreliable: report.unreliable,
                });
            }
        }
    }
    Ok(InductionReport {
        backend: gateway.describe(),
        questionnaire: q.name.clone(),
        scale: cfg.scale,
        cells,
    })
}
