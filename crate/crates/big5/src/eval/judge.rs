//! LLM-judge trait identification over dialogue transcripts.
//!
//! For each of the five traits the judge sees the full labeled transcript
//! and makes a 3-way forced choice: agent A higher, agent B higher, or
//! similar. Ground truth comes from the assigned profiles; a configurable
//! threshold `tau` widens the "similar" band (default 0: strict equality).

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::dialogue::Transcript;
use crate::gateway::{ChatMessage, Gateway, GenerationParams};
use crate::persona::TraitDim;

const JUDGE_INSTRUCTION: &str = include_str!("../../assets/instructions/judge.txt");

/// A 3-way trait comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AHigher,
    BHigher,
    Similar,
}

impl Comparison {
    pub fn label(self) -> &'static str {
        match self {
            Comparison::AHigher => "A",
            Comparison::BHigher => "B",
            Comparison::Similar => "similar",
        }
    }
}

/// Extracts a unique label out of a judge reply: exactly one of "a", "b",
/// or "similar" must appear as a word.
pub fn parse_verdict(reply: &str) -> Result<Comparison, EvalError> {
    let words = super::text::tokenize(reply);
    let mut found = Vec::new();
    for (token, verdict) in [
        ("a", Comparison::AHigher),
        ("b", Comparison::BHigher),
        ("similar", Comparison::Similar),
    ] {
        if words.iter().any(|w| w == token) {
            found.push(verdict);
        }
    }
    match found.as_slice() {
        [one] => Ok(*one),
        [] => Err(EvalError::Input(format!("no verdict label in {reply:?}"))),
        _ => Err(EvalError::Input(format!("ambiguous verdict in {reply:?}"))),
    }
}

/// One judged (dialogue, trait) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgedTrait {
    pub dialogue_id: String,
    pub trait_dim: TraitDim,
    pub truth: Comparison,
    /// None when the judge reply stayed unparseable after retries; counted
    /// incorrect.
    pub verdict: Option<Comparison>,
    pub correct: bool,
}

/// Pooled verdicts with the aggregate identification score in [0, 100].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeReport {
    pub judge_backend: String,
    /// Label A in the prompt refers to the first-listed agent of each
    /// transcript, label B to the second.
    pub verdicts: Vec<JudgedTrait>,
    pub invalid: usize,
    pub tau: u32,
    pub aggregate: f64,
}

impl JudgeReport {
    fn from_verdicts(
        judge_backend: String,
        verdicts: Vec<JudgedTrait>,
        tau: u32,
    ) -> JudgeReport {
        let correct = verdicts.iter().filter(|v| v.correct).count();
        let invalid = verdicts.iter().filter(|v| v.verdict.is_none()).count();
        let aggregate = if verdicts.is_empty() {
            0.0
        } else {
            100.0 * correct as f64 / verdicts.len() as f64
        };
        JudgeReport { judge_backend, verdicts, invalid, tau, aggregate }
    }
}

fn labeled_transcript(t: &Transcript) -> String {
    let id_a = &t.agents[0].id;
    t.utterances
        .iter()
        .map(|u| {
            let label = if &u.speaker == id_a { "A" } else { "B" };
            format!("{label}: {}", u.text)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// The ground truth for one trait under threshold `tau`:
/// `|a - b| <= tau` reads as similar.
pub fn ground_truth(a: u32, b: u32, tau: u32) -> Comparison {
    if a.abs_diff(b) <= tau {
        Comparison::Similar
    } else if a > b {
        Comparison::AHigher
    } else {
        Comparison::BHigher
    }
}

#[derive(Debug, Clone, Copy)]
pub struct JudgeOptions {
    /// Extra attempts when a reply fails to parse.
    pub retries: u32,
    /// Assigned-value difference at or below which the truth is "similar".
    pub tau: u32,
}

impl Default for JudgeOptions {
    fn default() -> Self {
        JudgeOptions { retries: 2, tau: 0 }
    }
}

/// Judges one transcript on all five traits.
pub fn judge_dialogue(
    transcript: &Transcript,
    judge: &Gateway,
    params: &GenerationParams,
    options: &JudgeOptions,
) -> Result<JudgeReport, EvalError> {
    let verdicts = judge_one(transcript, judge, params, options)?;
    Ok(JudgeReport::from_verdicts(judge.describe(), verdicts, options.tau))
}

/// Judges a batch of transcripts, pooling all verdicts into one aggregate.
pub fn judge_dialogues(
    transcripts: &[Transcript],
    judge: &Gateway,
    params: &GenerationParams,
    options: &JudgeOptions,
) -> Result<JudgeReport, EvalError> {
    let mut verdicts = Vec::with_capacity(transcripts.len() * 5);
    for t in transcripts {
        verdicts.extend(judge_one(t, judge, params, options)?);
    }
    Ok(JudgeReport::from_verdicts(judge.describe(), verdicts, options.tau))
}

fn judge_one(
    transcript: &Transcript,
    judge: &Gateway,
    params: &GenerationParams,
    options: &JudgeOptions,
) -> Result<Vec<JudgedTrait>, EvalError> {
    if transcript.agents.len() != 2 {
        return Err(EvalError::Input(format!(
            "judging needs exactly 2 agents, transcript {} has {}",
            transcript.dialogue_id,
            transcript.agents.len()
        )));
    }
    if transcript.utterances.is_empty() || transcript.failure.is_some() {
        return Err(EvalError::Input(format!(
            "transcript {} is incomplete",
            transcript.dialogue_id
        )));
    }
    let (profile_a, profile_b) = (&transcript.agents[0].profile, &transcript.agents[1].profile);
    if profile_a.scale() != profile_b.scale() {
        return Err(EvalError::Input("agent profiles are on different scales".into()));
    }

    let rendered = labeled_transcript(transcript);
    let mut verdicts = Vec::with_capacity(5);
    for dim in TraitDim::ALL {
        let prompt = JUDGE_INSTRUCTION
            .replace("{transcript}", &rendered)
            .replace("{trait}", dim.name());
        let messages = [ChatMessage::user(prompt)];
        let mut verdict = None;
        for _ in 0..=options.retries {
            match judge.complete(&messages, params) {
                Ok(reply) => match parse_verdict(&reply) {
                    Ok(v) => {
                        verdict = Some(v);
                        break;
                    }
                    Err(_) => continue,
                },
                Err(_) => continue,
            }
        }
        let truth = ground_truth(profile_a.get(dim), profile_b.get(dim), options.tau);
        verdicts.push(JudgedTrait {
            dialogue_id: transcript.dialogue_id.clone(),
            trait_dim: dim,
            truth,
            verdict,
            correct: verdict == Some(truth),
        });
    }
    Ok(verdicts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialogue::{run_dialogue, spawn_agent};
    use crate::gateway::{BackendSpec, ScriptedBehavior};
    use crate::persona::{expand_profile, BigFiveProfile, TraitScale};
    use crate::prompt::{build_prompt, PromptKind};

    fn transcript(values_a: [u32; 5], values_b: [u32; 5], seed: u64) -> Transcript {
        let scale = TraitScale::new(100).unwrap();
        let make = |id: &str, values| {
            let profile = BigFiveProfile::new(scale, values).unwrap();
            let facets = expand_profile(&profile, &Default::default()).unwrap();
            let persona = build_prompt(PromptKind::Simple, &facets, scale).unwrap();
            spawn_agent(id, persona, profile)
        };
        let mut a = make("a", values_a);
        let mut b = make("b", values_b);
        let gw = BackendSpec::scripted(ScriptedBehavior::PersonaLinear).build().unwrap();
        run_dialogue(&mut a, &mut b, "travel", 4, &gw, &GenerationParams::default(), seed)
            .unwrap()
    }

    #[test]
    fn verdict_parsing_accepts_labels_and_rejects_ambiguity() {
        assert_eq!(parse_verdict("A").unwrap(), Comparison::AHigher);
        assert_eq!(parse_verdict("b.").unwrap(), Comparison::BHigher);
        assert_eq!(parse_verdict("I think they are similar").unwrap(), Comparison::Similar);
        assert!(parse_verdict("either A or B").is_err());
        assert!(parse_verdict("no idea").is_err());
    }

    #[test]
    fn ground_truth_uses_the_tau_band() {
        assert_eq!(ground_truth(80, 20, 0), Comparison::AHigher);
        assert_eq!(ground_truth(20, 80, 0), Comparison::BHigher);
        assert_eq!(ground_truth(50, 50, 0), Comparison::Similar);
        assert_eq!(ground_truth(52, 50, 5), Comparison::Similar);
        assert_eq!(ground_truth(60, 50, 5), Comparison::AHigher);
    }

    #[test]
    fn degenerate_judge_on_a_higher_truth_scores_100() {
        let t = transcript([90, 80, 70, 60, 50], [10, 20, 30, 40, 45], 1);
        let judge = BackendSpec::scripted(ScriptedBehavior::Fixed { reply: "A".into() })
            .build()
            .unwrap();
        let report =
            judge_dialogue(&t, &judge, &GenerationParams::default(), &JudgeOptions::default())
                .unwrap();
        assert_eq!(report.aggregate, 100.0);
        assert_eq!(report.verdicts.len(), 5);
    }

    #[test]
    fn equal_profiles_judged_similar_score_100() {
        let t = transcript([50; 5], [50; 5], 2);
        let judge = BackendSpec::scripted(ScriptedBehavior::Fixed { reply: "similar".into() })
            .build()
            .unwrap();
        let report =
            judge_dialogue(&t, &judge, &GenerationParams::default(), &JudgeOptions::default())
                .unwrap();
        assert_eq!(report.aggregate, 100.0);
    }

    #[test]
    fn perfect_judge_scores_100_on_random_profiles() {
        let judge = BackendSpec::scripted(ScriptedBehavior::PerfectJudge).build().unwrap();
        let mut transcripts = Vec::new();
        for seed in 0..10u64 {
            let a = crate::persona::random_profile(seed * 2, TraitScale::new(100).unwrap());
            let b = crate::persona::random_profile(seed * 2 + 1, TraitScale::new(100).unwrap());
            let values = |p: &BigFiveProfile| {
                [
                    p.get(TraitDim::Openness),
                    p.get(TraitDim::Conscientiousness),
                    p.get(TraitDim::Extraversion),
                    p.get(TraitDim::Agreeableness),
                    p.get(TraitDim::Neuroticism),
                ]
            };
            transcripts.push(transcript(values(&a), values(&b), seed));
        }
        let report = judge_dialogues(
            &transcripts,
            &judge,
            &GenerationParams::default(),
            &JudgeOptions::default(),
        )
        .unwrap();
        assert_eq!(report.aggregate, 100.0, "invalid: {}", report.invalid);
        assert_eq!(report.verdicts.len(), 50);
    }

    #[test]
    fn unparseable_judge_counts_incorrect_and_invalid() {
        let t = transcript([90; 5], [10; 5], 3);
        let judge = BackendSpec::scripted(ScriptedBehavior::Fixed { reply: "hmm".into() })
            .build()
            .unwrap();
        let report =
            judge_dialogue(&t, &judge, &GenerationParams::default(), &JudgeOptions::default())
                .unwrap();
        assert_eq!(report.aggregate, 0.0);
        assert_eq!(report.invalid, 5);
        assert!(report.verdicts.iter().all(|v| v.verdict.is_none() && !v.correct));
    }
}
