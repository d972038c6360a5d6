//! Agents and the turn-based dialogue loop.
//!
//! An agent's memory starts with its persona prompt and grows append-only:
//! the topic seed first, then every utterance of the dialogue, broadcast to
//! all participants so each agent conditions on the full shared history.
//! When a turn is generated, the speaker sees its own prior utterances as
//! assistant messages and the partner's as user messages.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{ChatMessage, Gateway, GatewayError, GenerationParams};
use crate::persona::BigFiveProfile;
use crate::prompt::{PersonaPrompt, PromptKind};

/// The ten default dialogue topics.
pub const DEFAULT_TOPICS: [&str; 10] = [
    "travel",
    "music",
    "habits",
    "goals",
    "friends",
    "social events",
    "animals",
    "volunteering",
    "self-esteem",
    "anxiety",
];

/// Deterministically picks a topic from a list.
pub fn pick_topic<'a>(topics: &'a [String], seed: u64) -> Option<&'a str> {
    if topics.is_empty() {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Some(topics[rng.random_range(0..topics.len())].as_str())
}

#[derive(Debug, Error)]
pub enum DialogueError {
    #[error("total_turns must be even and at least 2, got {0}")]
    BadTurnCount(u32),
    #[error("agents must have distinct ids, both are {0:?}")]
    DuplicateAgentId(String),
    #[error("turn {turn} produced an empty generation")]
    EmptyGeneration { turn: u32, partial: Box<Transcript> },
    #[error("backend failed at turn {turn}: {source}")]
    Backend {
        turn: u32,
        source: GatewayError,
        partial: Box<Transcript>,
    },
    #[error("transcript io: {0}")]
    Io(#[from] std::io::Error),
    #[error("transcript line {line}: {message}")]
    Malformed { line: usize, message: String },
}

impl DialogueError {
    /// The partially completed transcript, when the dialogue died mid-run.
    /// It carries a failure marker and is meant to be persisted as-is.
    pub fn partial_transcript(&self) -> Option<&Transcript> {
        match self {
            DialogueError::EmptyGeneration { partial, .. }
            | DialogueError::Backend { partial, .. } => Some(partial),
            _ => None,
        }
    }
}

/// One element of an agent's memory buffer.
#[derive(Debug, Clone, PartialEq)]
pub enum MemoryEntry {
    /// The persona prompt; always the first element when present.
    Persona(String),
    /// The topic seed injected before turn 1, seen as a user message by
    /// both agents.
    Topic(String),
    /// A dialogue turn, broadcast to every participant.
    Utterance(Utterance),
}

/// Append-only ordered message history.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MemoryBuffer {
    entries: Vec<MemoryEntry>,
}

impl MemoryBuffer {
    pub fn entries(&self) -> &[MemoryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn push(&mut self, entry: MemoryEntry) {
        self.entries.push(entry);
    }

    /// The memory without its persona head: topic seed plus utterances.
    /// After a completed dialogue this tail is element-wise identical
    /// across participants.
    pub fn shared_tail(&self) -> &[MemoryEntry] {
        let skip = self
            .entries
            .iter()
            .take_while(|e| matches!(e, MemoryEntry::Persona(_)))
            .count();
        &self.entries[skip..]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    /// 1-based global turn index.
    pub turn_index: u32,
    pub speaker: String,
    pub text: String,
}

/// A conversational participant: identity, persona, and memory.
#[derive(Debug, Clone)]
pub struct Agent {
    id: String,
    persona: PersonaPrompt,
    profile: BigFiveProfile,
    memory: MemoryBuffer,
}

impl Agent {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn persona(&self) -> &PersonaPrompt {
        &self.persona
    }

    pub fn profile(&self) -> &BigFiveProfile {
        &self.profile
    }

    pub fn memory(&self) -> &MemoryBuffer {
        &self.memory
    }
}

/// Creates an agent whose memory holds exactly its persona prompt (nothing
/// at all for the empty neutral persona).
pub fn spawn_agent(id: impl Into<String>, persona: PersonaPrompt, profile: BigFiveProfile) -> Agent {
    let mut memory = MemoryBuffer::default();
    if !persona.is_empty() {
        memory.push(MemoryEntry::Persona(persona.text().to_string()));
    }
    Agent { id: id.into(), persona, profile, memory }
}

/// Maps an agent's memory onto chat messages from its own point of view:
/// it is the assistant, the partner is the user.
fn messages_for(agent: &Agent) -> Vec<ChatMessage> {
    agent
        .memory
        .entries()
        .iter()
        .map(|entry| match entry {
            MemoryEntry::Persona(text) => ChatMessage::system(text.clone()),
            MemoryEntry::Topic(text) => ChatMessage::user(text.clone()),
            MemoryEntry::Utterance(u) => {
                if u.speaker == agent.id {
                    ChatMessage::assistant(u.text.clone())
                } else {
                    ChatMessage::user(u.text.clone())
                }
            }
        })
        .collect()
}

/// Generates the speaker's next utterance from its current memory. Does not
/// mutate any memory; pair with [`broadcast`].
pub fn take_turn(
    speaker: &Agent,
    gateway: &Gateway,
    params: &GenerationParams,
) -> Result<Utterance, GatewayError> {
    let messages = messages_for(speaker);
    let text = gateway.complete(&messages, params)?.trim().to_string();
    let turn_index = 1 + speaker
        .memory
        .entries()
        .iter()
        .filter(|e| matches!(e, MemoryEntry::Utterance(_)))
        .count() as u32;
    Ok(Utterance { turn_index, speaker: speaker.id.clone(), text })
}

/// Appends an utterance to every agent's memory exactly once, preserving
/// global order.
pub fn broadcast<'a>(u: &Utterance, agents: impl IntoIterator<Item = &'a mut Agent>) {
    for agent in agents {
        agent.memory.push(MemoryEntry::Utterance(u.clone()));
    }
}

fn seed_topic<'a>(topic_message: &str, agents: impl IntoIterator<Item = &'a mut Agent>) {
    for agent in agents {
        agent.memory.push(MemoryEntry::Topic(topic_message.to_string()));
    }
}

/// Transcript metadata for one participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentMeta {
    pub id: String,
    pub profile: BigFiveProfile,
    pub prompt_kind: PromptKind,
}

/// A persisted dialogue: metadata plus ordered utterances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub dialogue_id: String,
    pub topic: String,
    pub agents: Vec<AgentMeta>,
    pub utterances: Vec<Utterance>,
    pub params: GenerationParams,
    pub backend: String,
    pub seed: u64,
    pub total_turns: u32,
    /// Wall-clock start, set by the orchestrator for live backends only, so
    /// scripted runs stay byte-reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_at: Option<String>,
    /// Present when the dialogue died mid-run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl Transcript {
    /// Utterances of one speaker, in turn order.
    pub fn utterances_by(&self, speaker: &str) -> Vec<&Utterance> {
        self.utterances.iter().filter(|u| u.speaker == speaker).collect()
    }
}

/// Runs a complete two-agent dialogue: injects the topic seed into both
/// memories, then alternates [`take_turn`]/[`broadcast`] starting with `a`.
///
/// On a mid-dialogue failure the error carries the partial transcript with
/// a failure marker so the caller can persist it.
pub fn run_dialogue(
    a: &mut Agent,
    b: &mut Agent,
    topic: &str,
    total_turns: u32,
    gateway: &Gateway,
    params: &GenerationParams,
    seed: u64,
) -> Result<Transcript, DialogueError> {
    if total_turns < 2 || total_turns % 2 != 0 {
        return Err(DialogueError::BadTurnCount(total_turns));
    }
    if a.id == b.id {
        return Err(DialogueError::DuplicateAgentId(a.id.clone()));
    }

    let mut transcript = Transcript {
        dialogue_id: format!("dlg-{seed}"),
        topic: topic.to_string(),
        agents: vec![
            AgentMeta {
                id: a.id.clone(),
                profile: *a.profile(),
                prompt_kind: a.persona().kind(),
            },
            AgentMeta {
                id: b.id.clone(),
                profile: *b.profile(),
                prompt_kind: b.persona().kind(),
            },
        ],
        utterances: Vec::with_capacity(total_turns as usize),
        params: *params,
        backend: gateway.describe(),
        seed,
        total_turns,
        started_at: None,
        failure: None,
    };

    let topic_message = format!("Let's talk about {topic}.");
    seed_topic(&topic_message, [&mut *a, &mut *b]);

    for turn in 1..=total_turns {
        let speaker_is_a = turn % 2 == 1;
        let utterance = {
            let speaker = if speaker_is_a { &*a } else { &*b };
            take_turn(speaker, gateway, params)
        };
        let utterance = match utterance {
            Ok(u) => u,
            Err(source) => {
                transcript.failure = Some(format!("turn {turn}: {source}"));
                return Err(DialogueError::Backend {
                    turn,
                    source,
                    partial: Box::new(transcript),
                });
            }
        };
        if utterance.text.is_empty() {
            transcript.failure = Some(format!("turn {turn}: empty generation"));
            return Err(DialogueError::EmptyGeneration {
                turn,
                partial: Box::new(transcript),
            });
        }
        broadcast(&utterance, [&mut *a, &mut *b]);
        transcript.utterances.push(utterance);
    }

    Ok(transcript)
}

/// One line of the transcript file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum TranscriptRecord {
    Header {
        dialogue_id: String,
        topic: String,
        agents: Vec<AgentMeta>,
        params: GenerationParams,
        backend: String,
        seed: u64,
        total_turns: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        started_at: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        failure: Option<String>,
    },
    Utterance {
        dialogue_id: String,
        turn_index: u32,
        speaker: String,
        text: String,
    },
}

/// Appends one transcript (header record, then one record per utterance)
/// to a line-delimited file.
pub fn write_transcript<W: Write>(out: &mut W, t: &Transcript) -> std::io::Result<()> {
    let header = TranscriptRecord::Header {
        dialogue_id: t.dialogue_id.clone(),
        topic: t.topic.clone(),
        agents: t.agents.clone(),
        params: t.params,
        backend: t.backend.clone(),
        seed: t.seed,
        total_turns: t.total_turns,
        started_at: t.started_at.clone(),
        failure: t.failure.clone(),
    };
    serde_json::to_writer(&mut *out, &header)?;
    out.write_all(b"\n")?;
    for u in &t.utterances {
        let record = TranscriptRecord::Utterance {
            dialogue_id: t.dialogue_id.clone(),
            turn_index: u.turn_index,
            speaker: u.speaker.clone(),
            text: u.text.clone(),
        };
        serde_json::to_writer(&mut *out, &record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_transcripts_file(path: &Path, transcripts: &[Transcript]) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for t in transcripts {
        write_transcript(&mut out, t)?;
    }
    out.flush()
}

pub fn read_transcripts_file(path: &Path) -> Result<Vec<Transcript>, DialogueError> {
    let reader = BufReader::new(File::open(path)?);
    let mut transcripts: Vec<Transcript> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TranscriptRecord =
            serde_json::from_str(&line).map_err(|e| DialogueError::Malformed {
                line: i + 1,
                message: e.to_string(),
            })?;
        match record {
            TranscriptRecord::Header {
                dialogue_id,
                topic,
                agents,
                params,
                backend,
                seed,
                total_turns,
                started_at,
                failure,
            } => {
                index.insert(dialogue_id.clone(), transcripts.len());
                transcripts.push(Transcript {
                    dialogue_id,
                    topic,
                    agents,
                    utterances: Vec::new(),
                    params,
                    backend,
                    seed,
                    total_turns,
                    started_at,
                    failure,
                });
            }
            TranscriptRecord::Utterance { dialogue_id, turn_index, speaker, text } => {
                let at = *index.get(&dialogue_id).ok_or_else(|| DialogueError::Malformed {
                    line: i + 1,
                    message: format!("utterance before header for {dialogue_id}"),
                })?;
                transcripts[at].utterances.push(Utterance { turn_index, speaker, text });
            }
        }
    }
    Ok(transcripts)
}
