//! Experiment execution: builds the gateway, dispatches to the matching
//! evaluation procedure, and persists reports, transcripts, logs, and the
//! run manifest.
//!
//! Output files are written atomically (temp file + rename) and contain no
//! wall-clock data, so scripted-backend runs with equal config and seed
//! are byte-identical; timestamps live in the manifest, which is written
//! last.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use big5::dialogue::{
    pick_topic, read_transcripts_file, run_dialogue, spawn_agent, write_transcripts_file,
    Transcript, DEFAULT_TOPICS,
};
use big5::eval::{
    consistency, fidelity_grid, imitation_rmse, judge_dialogue, load_human_scores,
    single_trait_induction, trait_sweep, ExternalProcessScorer, GridConfig, GridReport,
    ImitationConfig, ImitationReport, InductionConfig, InductionReport, JudgeOptions,
    JudgeReport, SimilarityScorer, SweepConfig, SweepReport, TfCosineScorer,
};
use big5::gateway::{BackendSpec, Gateway};
use big5::persona::{expand_profile, sample_profile, BigFiveProfile, TraitScale};
use big5::prompt::{build_neutral_prompt, build_prompt_with, PromptKind};
use big5::psych::{administer, load_questionnaire, score, Questionnaire, TraitReport};
use big5::report as tables;
use num_rational::Ratio;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::config::{
    resolve, ConsistencyExperiment, DialogueExperiment, ExperimentConfig, ExperimentKind,
    GridExperiment, ImitateExperiment, InduceExperiment, JudgeExperiment, ScoreExperiment,
    ScorerConfig, SweepExperiment,
};

/// Typed payload of a `report.json` file.
#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PersistedReport {
    Sweep(SweepReport),
    Induce(InductionReport),
    Judge(JudgeReport),
    Grid(GridReport),
    Imitate(ImitationReport),
    Score(TraitReport),
    Consistency(ConsistencyReport),
    Dialogue(DialogueSummary),
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub scorer: String,
    pub rows: Vec<(String, BTreeMap<String, f64>)>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DialogueSummary {
    pub backend: String,
    pub prompt_kind: PromptKind,
    pub scale: u32,
    pub requested: usize,
    pub completed: usize,
    pub failed: usize,
    pub total_turns: u32,
    pub transcript_file: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskRecord {
    pub name: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TaskRecord {
    fn ok(name: impl Into<String>) -> TaskRecord {
        TaskRecord { name: name.into(), status: "ok".into(), error: None }
    }

    fn failed(name: impl Into<String>, error: impl ToString) -> TaskRecord {
        TaskRecord {
            name: name.into(),
            status: "failed".into(),
            error: Some(error.to_string()),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub kind: String,
    pub run_id: String,
    pub seed: u64,
    pub backend: String,
    pub started_at: String,
    pub finished_at: String,
    pub config: ExperimentConfig,
    pub tasks: Vec<TaskRecord>,
    /// Every file this run emitted, relative to the run directory.
    pub files: Vec<String>,
    pub requests: u64,
}

pub struct RunOutcome {
    pub run_dir: PathBuf,
    pub manifest: Manifest,
}

impl RunOutcome {
    pub fn any_failed(&self) -> bool {
        self.manifest.tasks.iter().any(|t| t.status == "failed")
    }
}

fn write_atomic(path: &Path, content: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .context("output path has no file name")?;
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    std::fs::write(&tmp, content).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

struct Emitter {
    run_dir: PathBuf,
    files: Vec<String>,
}

impl Emitter {
    fn emit(&mut self, name: &str, content: &[u8]) -> Result<()> {
        write_atomic(&self.run_dir.join(name), content)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn emit_report(&mut self, report: &PersistedReport) -> Result<()> {
        let mut json = serde_json::to_vec_pretty(report)?;
        json.push(b'\n');
        self.emit("report.json", &json)
    }
}

fn load_bank(base: &Path, path: &Path, likert: Option<(i64, i64)>) -> Result<Questionnaire> {
    let q = load_questionnaire(&resolve(base, path))?;
    Ok(match likert {
        Some((lo, hi)) => q.with_likert_range(lo, hi)?,
        None => q,
    })
}

/// Runs one experiment end to end and writes the manifest last.
pub fn run(
    config: ExperimentConfig,
    config_dir: &Path,
    out_override: Option<PathBuf>,
    run_id: Option<String>,
    verbose: bool,
) -> Result<RunOutcome> {
    let started_at = chrono::Utc::now();
    let run_id = run_id.unwrap_or_else(|| started_at.format("%Y%m%dT%H%M%S%.3fZ").to_string());
    let output_dir = out_override.unwrap_or_else(|| config.output_dir.clone());
    let output_dir = resolve(config_dir, &output_dir);
    let run_dir = output_dir.join(config.kind.name()).join(&run_id);
    std::fs::create_dir_all(&run_dir)
        .with_context(|| format!("creating {}", run_dir.display()))?;

    let mut gateway = config.backend.build()?;
    let mut files = Vec::new();
    if config.trace {
        let log_name = "requests.jsonl";
        gateway = gateway.with_request_log(&run_dir.join(log_name))?;
        files.push(log_name.to_string());
    }

    if verbose {
        eprintln!(
            "running {} (seed {}) against {} -> {}",
            config.kind.name(),
            config.seed,
            config.backend.id(),
            run_dir.display()
        );
    }

    let mut emitter = Emitter { run_dir: run_dir.clone(), files };
    let tasks = match &config.kind {
        ExperimentKind::Sweep(e) => run_sweep(e, &config, config_dir, &gateway, &mut emitter)?,
        ExperimentKind::Induce(e) => run_induce(e, &config, config_dir, &gateway, &mut emitter)?,
        ExperimentKind::Dialogue(e) => run_dialogues(e, &config, &gateway, &mut emitter)?,
        ExperimentKind::Judge(e) => run_judge(e, &config, config_dir, &gateway, &mut emitter)?,
        ExperimentKind::Consistency(e) => run_consistency(e, config_dir, &mut emitter)?,
        ExperimentKind::Imitate(e) => run_imitate(e, &config, config_dir, &gateway, &mut emitter)?,
        ExperimentKind::Grid(e) => run_grid(e, &config, config_dir, &gateway, &mut emitter)?,
        ExperimentKind::Score(e) => run_score(e, &config, config_dir, &gateway, &mut emitter)?,
    };

    let mut manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        kind: config.kind.name().to_string(),
        run_id: run_id.clone(),
        seed: config.seed,
        backend: config.backend.id(),
        started_at: started_at.to_rfc3339(),
        finished_at: chrono::Utc::now().to_rfc3339(),
        config,
        tasks,
        files: emitter.files.clone(),
        requests: gateway.requests_made(),
    };
    manifest.files.push("manifest.json".to_string());
    let mut manifest_json = serde_json::to_vec_pretty(&manifest)?;
    manifest_json.push(b'\n');
    write_atomic(&run_dir.join("manifest.json"), &manifest_json)?;

    Ok(RunOutcome { run_dir, manifest })
}

fn run_sweep(
    e: &SweepExperiment,
    config: &ExperimentConfig,
    config_dir: &Path,
    gateway: &Gateway,
    emitter: &mut Emitter,
) -> Result<Vec<TaskRecord>> {
    let q = load_bank(config_dir, &e.questionnaire, e.likert)?;
    let cfg = SweepConfig {
        prompt_kind: e.prompt_kind,
        scale: e.scale,
        levels: e.levels.clone(),
        neutral_value: e.neutral_value,
        template_set: e.template_set,
    };
    let report = trait_sweep(
        gateway,
        &q,
        &cfg,
        &config.params(),
        &config.administer.options(config.seed),
        config.seed,
    )?;
    emitter.emit("sweep.tsv", tables::render_sweep_tsv(&report).as_bytes())?;
    let tasks = report
        .rows
        .iter()
        .map(|row| match &row.flag {
            None => TaskRecord::ok(format!("sweep-{}", row.trait_dim)),
            Some(flag) => TaskRecord::failed(format!("sweep-{}", row.trait_dim), flag),
        })
        .collect();
    emitter.emit_report(&PersistedReport::Sweep(report))?;
    Ok(tasks)
}

fn run_induce(
    e: &InduceExperiment,
    config: &ExperimentConfig,
    config_dir: &Path,
    gateway: &Gateway,
    emitter: &mut Emitter,
) -> Result<Vec<TaskRecord>> {
    let q = load_bank(config_dir, &e.questionnaire, e.likert)?;
    let cfg = InductionConfig {
        kinds: e.kinds.clone(),
        value: e.value,
        scale: e.scale,
        template_set: e.template_set,
    };
    let report = single_trait_induction(
        gateway,
        &q,
        &cfg,
        &config.params(),
        &config.administer.options(config.seed),
    )?;
    emitter.emit("induce.tsv", tables::render_induction_tsv(&report).as_bytes())?;
    let tasks = report
        .cells
        .iter()
        .map(|cell| {
            let name = format!("induce-{}-{}", cell.method, cell.target);
            if cell.unreliable {
                TaskRecord::failed(name, "unreliable administration")
            } else {
                TaskRecord::ok(name)
            }
        })
        .collect();
    emitter.emit_report(&PersistedReport::Induce(report))?;
    Ok(tasks)
}

fn run_dialogues(
    e: &DialogueExperiment,
    config: &ExperimentConfig,
    gateway: &Gateway,
    emitter: &mut Emitter,
) -> Result<Vec<TaskRecord>> {
    let scale = TraitScale::new(e.scale)?;
    let topics: Vec<String> = e
        .topics
        .clone()
        .unwrap_or_else(|| DEFAULT_TOPICS.iter().map(|s| s.to_string()).collect());
    let live = matches!(config.backend, BackendSpec::HttpChat { .. });

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
    let mut tasks = Vec::with_capacity(e.count);
    let mut transcripts: Vec<Transcript> = Vec::with_capacity(e.count);
    let mut completed = 0usize;
    for i in 0..e.count {
        let dialogue_seed = config.seed.wrapping_add(i as u64);
        let name = format!("dialogue-{i}");
        let make_agent = |id: &str, rng: &mut rand_chacha::ChaCha8Rng| -> Result<_> {
            let profile = sample_profile(rng, scale);
            let facets = expand_profile(&profile, &BTreeMap::new())?;
            let persona = build_prompt_with(e.prompt_kind, &facets, scale, e.template_set)?;
            Ok(spawn_agent(id, persona, profile))
        };
        let mut a = make_agent("a", &mut rng)?;
        let mut b = make_agent("b", &mut rng)?;
        let topic = pick_topic(&topics, dialogue_seed).expect("validated non-empty");
        match run_dialogue(
            &mut a,
            &mut b,
            topic,
            e.total_turns,
            gateway,
            &config.params(),
            dialogue_seed,
        ) {
            Ok(mut t) => {
                if live {
                    t.started_at = Some(chrono::Utc::now().to_rfc3339());
                }
                transcripts.push(t);
                completed += 1;
                tasks.push(TaskRecord::ok(name));
            }
            Err(err) => {
                if let Some(partial) = err.partial_transcript() {
                    transcripts.push(partial.clone());
                }
                tasks.push(TaskRecord::failed(name, &err));
            }
        }
    }

    let transcript_file = "transcripts.jsonl";
    let mut buffer = Vec::new();
    for t in &transcripts {
        big5::dialogue::write_transcript(&mut buffer, t)?;
    }
    emitter.emit(transcript_file, &buffer)?;
    emitter.emit_report(&PersistedReport::Dialogue(DialogueSummary {
        backend: config.backend.id(),
        prompt_kind: e.prompt_kind,
        scale: e.scale,
        requested: e.count,
        completed,
        failed: e.count - completed,
        total_turns: e.total_turns,
        transcript_file: transcript_file.to_string(),
    }))?;
    Ok(tasks)
}

fn run_judge(
    e: &JudgeExperiment,
    config: &ExperimentConfig,
    config_dir: &Path,
    gateway: &Gateway,
    emitter: &mut Emitter,
) -> Result<Vec<TaskRecord>> {
    let transcripts = read_transcripts_file(&resolve(config_dir, &e.transcripts))?;
    if transcripts.is_empty() {
        bail!("transcript file has no dialogues");
    }
    let options = JudgeOptions { retries: e.retries, tau: e.tau };
    let mut tasks = Vec::new();
    let mut pooled = Vec::new();
    for t in &transcripts {
        let name = format!("judge-{}", t.dialogue_id);
        match judge_dialogue(t, gateway, &config.params(), &options) {
            Ok(report) => {
                pooled.extend(report.verdicts);
                tasks.push(TaskRecord::ok(name));
            }
            Err(err) => tasks.push(TaskRecord::failed(name, &err)),
        }
    }
    let correct = pooled.iter().filter(|v| v.correct).count();
    let invalid = pooled.iter().filter(|v| v.verdict.is_none()).count();
    let aggregate =
        if pooled.is_empty() { 0.0 } else { 100.0 * correct as f64 / pooled.len() as f64 };
    let report = JudgeReport {
        judge_backend: config.backend.id(),
        verdicts: pooled,
        invalid,
        tau: e.tau,
        aggregate,
    };
    emitter.emit("judge.tsv", tables::render_judge_tsv(&report).as_bytes())?;
    emitter.emit_report(&PersistedReport::Judge(report))?;
    Ok(tasks)
}

fn run_consistency(
    e: &ConsistencyExperiment,
    config_dir: &Path,
    emitter: &mut Emitter,
) -> Result<Vec<TaskRecord>> {
    let transcripts = read_transcripts_file(&resolve(config_dir, &e.transcripts))?;
    let scorer: Box<dyn SimilarityScorer> = match &e.scorer {
        ScorerConfig::TfCosine => Box::new(TfCosineScorer),
        ScorerConfig::External { command, args } => {
            Box::new(ExternalProcessScorer::spawn(command.clone(), command, args)?)
        }
    };
    let mut tasks = Vec::new();
    let mut rows = Vec::new();
    for t in &transcripts {
        let name = format!("consistency-{}", t.dialogue_id);
        match consistency(t, scorer.as_ref()) {
            Ok(scores) => {
                rows.push((t.dialogue_id.clone(), scores));
                tasks.push(TaskRecord::ok(name));
            }
            Err(err) => tasks.push(TaskRecord::failed(name, &err)),
        }
    }
    emitter.emit(
        "consistency.tsv",
        tables::render_consistency_tsv(scorer.name(), &rows).as_bytes(),
    )?;
    emitter.emit_report(&PersistedReport::Consistency(ConsistencyReport {
        scorer: scorer.name().to_string(),
        rows,
    }))?;
    Ok(tasks)
}

fn run_imitate(
    e: &ImitateExperiment,
    config: &ExperimentConfig,
    config_dir: &Path,
    gateway: &Gateway,
    emitter: &mut Emitter,
) -> Result<Vec<TaskRecord>> {
    let q = load_bank(config_dir, &e.questionnaire, e.likert)?;
    let humans = load_human_scores(
        &resolve(config_dir, &e.human_scores),
        Ratio::from_integer(q.likert_min),
        Ratio::from_integer(q.likert_max),
    )?;
    let cfg = ImitationConfig {
        prompt_kind: e.prompt_kind,
        scale: e.scale,
        template_set: e.template_set,
    };
    let report = imitation_rmse(
        &humans,
        &q,
        &cfg,
        gateway,
        &config.params(),
        &config.administer.options(config.seed),
    )?;
    emitter.emit("imitate.tsv", tables::render_imitation_tsv(&report).as_bytes())?;
    let tasks = report
        .persons
        .iter()
        .map(|p| {
            let name = format!("imitate-{}", p.person_id);
            if p.rmse.is_some() {
                TaskRecord::ok(name)
            } else {
                TaskRecord::failed(name, "incomplete measurement")
            }
        })
        .collect();
    emitter.emit_report(&PersistedReport::Imitate(report))?;
    Ok(tasks)
}

fn run_grid(
    e: &GridExperiment,
    config: &ExperimentConfig,
    config_dir: &Path,
    gateway: &Gateway,
    emitter: &mut Emitter,
) -> Result<Vec<TaskRecord>> {
    let questionnaires: Vec<Questionnaire> = e
        .questionnaires
        .iter()
        .map(|p| load_bank(config_dir, p, None))
        .collect::<Result<_>>()?;
    let cfg = GridConfig {
        scales: e.scales.clone(),
        kinds: e.kinds.clone(),
        agents_per_cell: e.agents_per_cell,
        template_set: e.template_set,
        unreliable_threshold: e.unreliable_threshold,
    };
    let backends = [(config.backend.id(), gateway)];
    let report = fidelity_grid(
        &backends,
        &questionnaires,
        &cfg,
        &config.params(),
        &config.administer.options(config.seed),
        config.seed,
    )?;
    emitter.emit("grid.tsv", tables::render_grid_tsv(&report).as_bytes())?;
    let tasks = report
        .cells
        .iter()
        .map(|c| {
            let name =
                format!("grid-{}-n{}-{}-{}", c.backend, c.scale, c.prompt_kind, c.questionnaire);
            if c.flagged {
                TaskRecord::failed(name, "cell flagged unreliable")
            } else {
                TaskRecord::ok(name)
            }
        })
        .collect();
    emitter.emit_report(&PersistedReport::Grid(report))?;
    Ok(tasks)
}

fn run_score(
    e: &ScoreExperiment,
    config: &ExperimentConfig,
    config_dir: &Path,
    gateway: &Gateway,
    emitter: &mut Emitter,
) -> Result<Vec<TaskRecord>> {
    let q = load_bank(config_dir, &e.questionnaire, e.likert)?;
    let mut map = e.profile.clone();
    map.insert("scale".into(), e.scale);
    let profile = BigFiveProfile::from_map(&map)?;
    let persona = if e.prompt_kind == PromptKind::Neutral {
        build_neutral_prompt()
    } else {
        let facets = expand_profile(&profile, &e.overrides)?;
        build_prompt_with(e.prompt_kind, &facets, profile.scale(), e.template_set)?
    };
    let responses = administer(
        &persona,
        &q,
        gateway,
        &config.params(),
        &config.administer.options(config.seed),
    );
    let report = score(&responses, &q)?;
    emitter.emit("score.tsv", tables::render_trait_report_tsv(&report).as_bytes())?;
    let task = if report.unreliable {
        TaskRecord::failed("score", "unreliable administration")
    } else {
        TaskRecord::ok("score")
    };
    emitter.emit_report(&PersistedReport::Score(report))?;
    Ok(vec![task])
}

/// Reads a persisted sweep report and writes the plot-ready per-trait
/// (level, score) series.
pub fn emit_plot_series(report_path: &Path, out_path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(report_path)
        .with_context(|| format!("reading {}", report_path.display()))?;
    let report: PersistedReport = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", report_path.display()))?;
    let PersistedReport::Sweep(sweep) = report else {
        bail!("{} is not a sweep report", report_path.display());
    };
    write_atomic(out_path, tables::render_sweep_series_tsv(&sweep).as_bytes())
}
