//! Experiment configuration: one TOML file per experiment, no implicit
//! entropy (seeds are mandatory) and no implicit backend identity.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use big5::gateway::{BackendSpec, GenerationParams};
use big5::persona::TraitScale;
use big5::prompt::{PromptKind, TemplateSet};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdministerConfig {
    #[serde(default = "default_retries")]
    pub retries: u32,
    /// Shuffle item order (seeded from the experiment seed) when true.
    #[serde(default)]
    pub shuffle: bool,
    #[serde(default = "default_missing_threshold")]
    pub missing_threshold: f64,
    #[serde(default = "default_admin_parallelism")]
    pub parallelism: usize,
}

fn default_retries() -> u32 {
    2
}

fn default_missing_threshold() -> f64 {
    0.1
}

fn default_admin_parallelism() -> usize {
    8
}

impl Default for AdministerConfig {
    fn default() -> Self {
        AdministerConfig {
            retries: default_retries(),
            shuffle: false,
            missing_threshold: default_missing_threshold(),
            parallelism: default_admin_parallelism(),
        }
    }
}

impl AdministerConfig {
    pub fn options(&self, seed: u64) -> big5::psych::AdministerOptions {
        big5::psych::AdministerOptions {
            retries: self.retries,
            shuffle_seed: self.shuffle.then_some(seed),
            missing_threshold: self.missing_threshold,
            parallelism: self.parallelism,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerConfig {
    TfCosine,
    External { command: String, #[serde(default)] args: Vec<String> },
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig::TfCosine
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepExperiment {
    pub questionnaire: PathBuf,
    pub prompt_kind: PromptKind,
    #[serde(default = "default_scale")]
    pub scale: u32,
    #[serde(default = "default_levels")]
    pub levels: Vec<u32>,
    #[serde(default = "default_neutral")]
    pub neutral_value: u32,
    #[serde(default)]
    pub template_set: TemplateSet,
    #[serde(default)]
    pub likert: Option<(i64, i64)>,
}

fn default_scale() -> u32 {
    100
}

fn default_levels() -> Vec<u32> {
    (0..10).map(|i| i * 10).collect()
}

fn default_neutral() -> u32 {
    50
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InduceExperiment {
    pub questionnaire: PathBuf,
    #[serde(default = "all_kinds")]
    pub kinds: Vec<PromptKind>,
    #[serde(default = "default_scale")]
    pub value: u32,
    #[serde(default = "default_scale")]
    pub scale: u32,
    #[serde(default)]
    pub template_set: TemplateSet,
    #[serde(default)]
    pub likert: Option<(i64, i64)>,
}

fn all_kinds() -> Vec<PromptKind> {
    PromptKind::ALL.to_vec()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DialogueExperiment {
    /// Number of dialogues; each pairs two freshly drawn random profiles.
    pub count: usize,
    #[serde(default = "default_turns")]
    pub total_turns: u32,
    pub prompt_kind: PromptKind,
    #[serde(default = "default_scale")]
    pub scale: u32,
    #[serde(default)]
    pub template_set: TemplateSet,
    /// Overrides the built-in ten-topic list.
    #[serde(default)]
    pub topics: Option<Vec<String>>,
}

fn default_turns() -> u32 {
    20
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgeExperiment {
    /// Transcript file produced by a dialogue run.
    pub transcripts: PathBuf,
    #[serde(default)]
    pub tau: u32,
    #[serde(default = "default_retries")]
    pub retries: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsistencyExperiment {
    pub transcripts: PathBuf,
    #[serde(default)]
    pub scorer: ScorerConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImitateExperiment {
    pub questionnaire: PathBuf,
    pub human_scores: PathBuf,
    pub prompt_kind: PromptKind,
    #[serde(default = "default_scale")]
    pub scale: u32,
    #[serde(default)]
    pub template_set: TemplateSet,
    #[serde(default)]
    pub likert: Option<(i64, i64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridExperiment {
    pub questionnaires: Vec<PathBuf>,
    #[serde(default = "default_grid_scales")]
    pub scales: Vec<u32>,
    #[serde(default = "scaler_kinds")]
    pub kinds: Vec<PromptKind>,
    #[serde(default = "default_agents_per_cell")]
    pub agents_per_cell: usize,
    #[serde(default = "default_missing_threshold")]
    pub unreliable_threshold: f64,
    #[serde(default)]
    pub template_set: TemplateSet,
}

fn default_grid_scales() -> Vec<u32> {
    TraitScale::GRID.to_vec()
}

fn scaler_kinds() -> Vec<PromptKind> {
    PromptKind::SCALER.to_vec()
}

fn default_agents_per_cell() -> usize {
    50
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreExperiment {
    pub questionnaire: PathBuf,
    pub prompt_kind: PromptKind,
    #[serde(default = "default_scale")]
    pub scale: u32,
    /// Trait intensities; keys are the five full trait names.
    pub profile: BTreeMap<String, u32>,
    /// Facet-level overrides applied before rendering.
    #[serde(default)]
    pub overrides: BTreeMap<String, u32>,
    #[serde(default)]
    pub template_set: TemplateSet,
    #[serde(default)]
    pub likert: Option<(i64, i64)>,
}

/// The per-kind payload of an experiment file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentKind {
    Sweep(SweepExperiment),
    Induce(InduceExperiment),
    Dialogue(DialogueExperiment),
    Judge(JudgeExperiment),
    Consistency(ConsistencyExperiment),
    Imitate(ImitateExperiment),
    Grid(GridExperiment),
    Score(ScoreExperiment),
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Sweep(_) => "sweep",
            ExperimentKind::Induce(_) => "induce",
            ExperimentKind::Dialogue(_) => "dialogue",
            ExperimentKind::Judge(_) => "judge",
            ExperimentKind::Consistency(_) => "consistency",
            ExperimentKind::Imitate(_) => "imitate",
            ExperimentKind::Grid(_) => "grid",
            ExperimentKind::Score(_) => "score",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub kind: ExperimentKind,
    /// Every random choice in the run flows from this seed.
    pub seed: u64,
    pub backend: BackendSpec,
    #[serde(default)]
    pub params: Option<GenerationParams>,
    #[serde(default)]
    pub administer: AdministerConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Persist a request log alongside the reports.
    #[serde(default = "default_trace")]
    pub trace: bool,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

fn default_trace() -> bool {
    true
}

impl ExperimentConfig {
    pub fn params(&self) -> GenerationParams {
        self.params.unwrap_or_default()
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let config: ExperimentConfig =
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    Ok(config)
}

fn check_file(violations: &mut Vec<String>, what: &str, base: &Path, path: &Path) {
    let resolved = resolve(base, path);
    if !resolved.is_file() {
        violations.push(format!("{what} does not exist: {}", resolved.display()));
    }
}

/// Paths inside a config resolve relative to the config file's directory.
pub fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

fn check_likert(violations: &mut Vec<String>, likert: Option<(i64, i64)>) {
    if let Some((lo, hi)) = likert {
        if lo >= hi {
            violations.push(format!("likert range [{lo}, {hi}] is invalid"));
        }
    }
}

fn check_scale(violations: &mut Vec<String>, scale: u32) {
    if scale == 0 {
        violations.push("scale must be at least 1".into());
    }
}

/// Semantic validation. Returns every violation found, so a bad config is
/// reported in one pass; never touches the network.
pub fn validate(config: &ExperimentConfig, config_dir: &Path) -> Vec<String> {
    let mut violations = Vec::new();

    if let BackendSpec::HttpChat { credential_env, endpoint, model, .. } = &config.backend {
        if endpoint.is_empty() {
            violations.push("backend endpoint is empty".into());
        }
        if model.is_empty() {
            violations.push("backend model is empty".into());
        }
        if let Some(var) = credential_env {
            if std::env::var(var).is_err() {
                violations.push(format!("credential environment variable {var} is not set"));
            }
        }
    }
    if let Some(params) = &config.params {
        if let Err(e) = params.validate() {
            violations.push(e.to_string());
        }
    }

    match &config.kind {
        ExperimentKind::Sweep(e) => {
            check_file(&mut violations, "questionnaire", config_dir, &e.questionnaire);
            check_scale(&mut violations, e.scale);
            check_likert(&mut violations, e.likert);
            if e.levels.len() < 3 {
                violations.push("sweep needs at least 3 levels".into());
            }
            if !e.prompt_kind.is_scaler() {
                violations.push(format!("prompt_kind {} cannot render a sweep", e.prompt_kind));
            }
            for &level in &e.levels {
                if level > e.scale {
                    violations.push(format!("level {level} exceeds scale {}", e.scale));
                }
            }
            if e.neutral_value > e.scale {
                violations
                    .push(format!("neutral_value {} exceeds scale {}", e.neutral_value, e.scale));
            }
        }
        ExperimentKind::Induce(e) => {
            check_file(&mut violations, "questionnaire", config_dir, &e.questionnaire);
            check_scale(&mut violations, e.scale);
            check_likert(&mut violations, e.likert);
            if e.value > e.scale {
                violations.push(format!("value {} exceeds scale {}", e.value, e.scale));
            }
            if e.kinds.is_empty() {
                violations.push("kinds must not be empty".into());
            }
        }
        ExperimentKind::Dialogue(e) => {
            check_scale(&mut violations, e.scale);
            if e.count == 0 {
                violations.push("count must be at least 1".into());
            }
            if e.total_turns < 2 || e.total_turns % 2 != 0 {
                violations.push(format!(
                    "total_turns must be even and at least 2, got {}",
                    e.total_turns
                ));
            }
            if !e.prompt_kind.is_scaler() {
                violations
                    .push(format!("prompt_kind {} cannot render profiles", e.prompt_kind));
            }
            if let Some(topics) = &e.topics {
                if topics.is_empty() {
                    violations.push("topics override must not be empty".into());
                }
            }
        }
        ExperimentKind::Judge(e) => {
            check_file(&mut violations, "transcripts", config_dir, &e.transcripts);
        }
        ExperimentKind::Consistency(e) => {
            check_file(&mut violations, "transcripts", config_dir, &e.transcripts);
            if let ScorerConfig::External { command, .. } = &e.scorer {
                if command.is_empty() {
                    violations.push("external scorer command is empty".into());
                }
            }
        }
        ExperimentKind::Imitate(e) => {
            check_file(&mut violations, "questionnaire", config_dir, &e.questionnaire);
            check_file(&mut violations, "human_scores", config_dir, &e.human_scores);
            check_scale(&mut violations, e.scale);
            check_likert(&mut violations, e.likert);
            if !e.prompt_kind.is_scaler() {
                violations
                    .push(format!("prompt_kind {} cannot render profiles", e.prompt_kind));
            }
        }
        ExperimentKind::Grid(e) => {
            if e.questionnaires.is_empty() {
                violations.push("grid needs at least one questionnaire".into());
            }
            for q in &e.questionnaires {
                check_file(&mut violations, "questionnaire", config_dir, q);
            }
            if e.scales.is_empty() {
                violations.push("grid needs at least one scale".into());
            }
            for &scale in &e.scales {
                check_scale(&mut violations, scale);
            }
            if e.agents_per_cell == 0 {
                violations.push("agents_per_cell must be at least 1".into());
            }
            if e.kinds.iter().any(|k| !k.is_scaler()) {
                violations.push("grid kinds must be scaler prompt kinds".into());
            }
        }
        ExperimentKind::Score(e) => {
            check_file(&mut violations, "questionnaire", config_dir, &e.questionnaire);
            check_scale(&mut violations, e.scale);
            check_likert(&mut violations, e.likert);
            let mut probe = e.profile.clone();
            probe.insert("scale".into(), e.scale);
            if let Err(err) = big5::persona::BigFiveProfile::from_map(&probe) {
                violations.push(format!("profile: {err}"));
            }
        }
    }
    violations
}

/// Loads and validates in one step, bailing with the full violation list.
pub fn load_validated(path: &Path) -> Result<(ExperimentConfig, PathBuf)> {
    let config = load_config(path)?;
    let config_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let violations = validate(&config, &config_dir);
    if !violations.is_empty() {
        bail!("invalid config {}:\n  - {}", path.display(), violations.join("\n  - "));
    }
    Ok((config, config_dir))
}
