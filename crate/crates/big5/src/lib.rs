//! Big Five persona conditioning and evaluation for chat-completion LLMs.
//!
//! The crate turns numeric trait profiles into conditioning prompts, runs
//! multi-agent dialogues and questionnaire administrations against a
//! uniform chat backend interface, and computes the evaluation battery:
//! trait sweeps with Pearson correlation, judge identification, dialogue
//! consistency, human imitation RMSE, and the scale/prompt fidelity grid.
//! A deterministic scripted backend stands in for remote models so every
//! pipeline is testable offline.

pub mod dialogue;
pub mod eval;
pub mod gateway;
pub mod persona;
pub mod prompt;
pub mod psych;
pub mod report;
