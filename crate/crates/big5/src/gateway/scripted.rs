//! Deterministic scripted backends: pure functions of the request, used as
//! offline test oracles.
//!
//! The `persona-linear` behavior is the workhorse: it reads the numeric
//! scores out of the system prompt and answers questionnaire items with
//! `clamp(min + floor(s * span / n), min, max)`, mirrored for reverse-keyed
//! statements, which makes every downstream statistic analytically
//! predictable. For dialogue turns it emits a fixed-shape sentence carrying
//! its trait values and the turn index.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ChatBackend, ChatMessage, GatewayError, GenerationParams, Role};
use crate::persona::{Facet, TraitDim};

/// Behavior profile of a scripted backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case")]
pub enum ScriptedBehavior {
    /// Replies with the content of the last user message.
    EchoLast,
    /// The analytic oracle described in the module docs.
    PersonaLinear,
    /// Always replies with the same text.
    Fixed { reply: String },
    /// Picks one of `options` by a seeded hash of the request, so the
    /// choice is uniform across distinct requests yet replayable.
    RandomChoice { options: Vec<String>, seed: u64 },
    /// Answers trait-comparison questions correctly by reading the values
    /// embedded in persona-linear dialogue transcripts. Test oracle only.
    PerfectJudge,
}

impl ScriptedBehavior {
    pub fn name(&self) -> &'static str {
        match self {
            ScriptedBehavior::EchoLast => "echo-last",
            ScriptedBehavior::PersonaLinear => "persona-linear",
            ScriptedBehavior::Fixed { .. } => "fixed",
            ScriptedBehavior::RandomChoice { .. } => "random-choice",
            ScriptedBehavior::PerfectJudge => "perfect-judge",
        }
    }
}

pub struct ScriptedBackend {
    behavior: ScriptedBehavior,
}

impl ScriptedBackend {
    pub fn new(behavior: ScriptedBehavior) -> ScriptedBackend {
        ScriptedBackend { behavior }
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete_once(
        &self,
        messages: &[ChatMessage],
        _params: &GenerationParams,
    ) -> Result<String, GatewayError> {
        match &self.behavior {
            ScriptedBehavior::EchoLast => messages
                .iter()
                .rev()
                .find(|m| m.role == Role::User)
                .map(|m| m.content.clone())
                .ok_or_else(|| GatewayError::Scripted("no user message to echo".into())),
            ScriptedBehavior::Fixed { reply } => Ok(reply.clone()),
            ScriptedBehavior::PersonaLinear => Ok(persona_linear(messages)),
            ScriptedBehavior::RandomChoice { options, seed } => {
                if options.is_empty() {
                    return Err(GatewayError::Scripted("random-choice has no options".into()));
                }
                let idx = (fnv1a(messages, *seed) % options.len() as u64) as usize;
                Ok(options[idx].clone())
            }
            ScriptedBehavior::PerfectJudge => Ok(perfect_judge(messages)),
        }
    }

    fn describe(&self) -> String {
        format!("scripted:{}", self.behavior.name())
    }
}

fn fnv1a(messages: &[ChatMessage], seed: u64) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            hash ^= u64::from(b);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    for m in messages {
        eat(&[m.role as u8 + 1]);
        eat(m.content.as_bytes());
    }
    hash
}

/// One parsed "Your X score is S out of N." sentence.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Score {
    value: i64,
    scale: i64,
}

/// Canonicalizes a score-sentence name, accepting the template spellings.
fn canonical_name(raw: &str) -> String {
    let key = raw.trim().to_ascii_lowercase().replace(['-', ' '], "_");
    match key.as_str() {
        "self_disciplinel" => "self_discipline".to_string(),
        "compilance" => "compliance".to_string(),
        other => other.to_string(),
    }
}

/// Extracts every "Your X score is S out of N." sentence from a prompt.
fn parse_scores(text: &str) -> BTreeMap<String, Score> {
    let mut scores = BTreeMap::new();
    let mut rest = text;
    while let Some(start) = rest.find("Your ") {
        rest = &rest[start + 5..];
        let Some(mid) = rest.find(" score is ") else { continue };
        let name = canonical_name(&rest[..mid]);
        let tail = &rest[mid + 10..];
        let Some(sep) = tail.find(" out of ") else { continue };
        let Ok(value) = tail[..sep].trim().parse::<i64>() else { continue };
        let after = &tail[sep + 8..];
        let digits: String = after.chars().take_while(|c| c.is_ascii_digit()).collect();
        let Ok(scale) = digits.parse::<i64>() else { continue };
        if name.contains('\n') {
            continue;
        }
        scores.insert(name, Score { value, scale });
        rest = after;
    }
    scores
}

/// A trait's intensity as an exact fraction `sum/count` of scale `n`:
/// the trait's own sentence if present, otherwise the mean of its parsed
/// facet sentences.
fn trait_fraction(scores: &BTreeMap<String, Score>, dim: TraitDim) -> Option<(i64, i64, i64)> {
    if let Some(s) = scores.get(dim.name()) {
        return Some((s.value, 1, s.scale));
    }
    let mut sum = 0i64;
    let mut count = 0i64;
    let mut scale = 0i64;
    for f in dim.facets() {
        if let Some(s) = scores.get(f.name()) {
            sum += s.value;
            count += 1;
            scale = s.scale;
        }
    }
    (count > 0).then_some((sum, count, scale))
}

fn lowercase_words(text: &str) -> Vec<String> {
    text.to_ascii_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

fn contains_word_seq(words: &[String], needle: &str) -> bool {
    let parts: Vec<&str> = needle.split('_').collect();
    words.windows(parts.len()).any(|w| w.iter().map(String::as_str).eq(parts.iter().copied()))
}

/// The trait a questionnaire statement is about: first facet named by a
/// whole-word match (underscores matched as word sequences), else the
/// first trait named.
fn statement_target(statement: &str) -> Option<(TraitDim, Option<Facet>)> {
    let words = lowercase_words(statement);
    for f in Facet::ALL {
        if contains_word_seq(&words, f.name()) {
            return Some((f.parent(), Some(f)));
        }
    }
    TraitDim::ALL
        .into_iter()
        .find(|t| contains_word_seq(&words, t.name()))
        .map(|t| (t, None))
}

struct LikertRequest {
    statement: String,
    min: i64,
    max: i64,
}

fn parse_likert_request(content: &str) -> Option<LikertRequest> {
    let statement = content
        .lines()
        .find_map(|l| l.trim().strip_prefix("Statement:"))?
        .trim()
        .to_string();
    let mut options = Vec::new();
    let mut in_options = false;
    for line in content.lines() {
        let line = line.trim();
        if line == "Options:" {
            in_options = true;
            continue;
        }
        if in_options {
            let digits: String = line.chars().take_while(|c| c.is_ascii_digit()).collect();
            match digits.parse::<i64>() {
                Ok(v) if line[digits.len()..].starts_with('.') => options.push(v),
                _ => break,
            }
        }
    }
    if options.len() < 2 {
        return None;
    }
    Some(LikertRequest {
        statement,
        min: *options.iter().min().expect("non-empty"),
        max: *options.iter().max().expect("non-empty"),
    })
}

fn answer_likert(scores: &BTreeMap<String, Score>, req: &LikertRequest) -> i64 {
    let middle = (req.min + req.max) / 2;
    let Some((dim, facet)) = statement_target(&req.statement) else {
        return middle;
    };
    let fraction = match facet.and_then(|f| scores.get(f.name())) {
        Some(s) => Some((s.value, 1, s.scale)),
        None => trait_fraction(scores, dim),
    };
    let Some((num, den, scale)) = fraction else {
        return middle;
    };
    let span = req.max - req.min + 1;
    let base = (req.min + num * span / (den * scale)).clamp(req.min, req.max);
    let reversed = lowercase_words(&req.statement).iter().any(|w| w == "low");
    if reversed {
        req.min + req.max - base
    } else {
        base
    }
}

fn persona_linear(messages: &[ChatMessage]) -> String {
    let scores = messages
        .first()
        .filter(|m| m.role == Role::System)
        .map(|m| parse_scores(&m.content))
        .unwrap_or_default();

    let last_user = messages.iter().rev().find(|m| m.role == Role::User);
    if let Some(req) = last_user.and_then(|m| parse_likert_request(&m.content)) {
        return answer_likert(&scores, &req).to_string();
    }

    // dialogue turn: fixed-shape sentence carrying trait values + turn index
    let turn = messages.iter().filter(|m| m.role != Role::System).count();
    if scores.is_empty() {
        return format!("Turn {turn}: I speak with no persona.");
    }
    let value = |dim: TraitDim| {
        trait_fraction(&scores, dim).map_or(0, |(num, den, _)| num / den)
    };
    format!(
        "Turn {turn}: I speak with openness {}, conscientiousness {}, extraversion {}, \
         agreeableness {}, neuroticism {}.",
        value(TraitDim::Openness),
        value(TraitDim::Conscientiousness),
        value(TraitDim::Extraversion),
        value(TraitDim::Agreeableness),
        value(TraitDim::Neuroticism),
    )
}

/// Reads the trait value a persona-linear utterance embeds, e.g.
/// "extraversion 40" -> 40.
fn embedded_value(line: &str, dim: TraitDim) -> Option<i64> {
    let words = lowercase_words(line);
    words
        .iter()
        .position(|w| w == dim.name())
        .and_then(|i| words.get(i + 1))
        .and_then(|w| w.parse().ok())
}

fn perfect_judge(messages: &[ChatMessage]) -> String {
    let Some(content) = messages.iter().rev().find(|m| m.role == Role::User).map(|m| &m.content)
    else {
        return "similar".to_string();
    };
    let dim = content
        .find("higher level of ")
        .map(|i| &content[i + 16..])
        .and_then(|rest| {
            let word: String =
                rest.chars().take_while(|c| c.is_alphanumeric()).collect();
            TraitDim::from_name(&word).ok()
        });
    let Some(dim) = dim else {
        return "similar".to_string();
    };
    let mut value_a = None;
    let mut value_b = None;
    for line in content.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("A: ") {
            value_a = value_a.or_else(|| embedded_value(rest, dim));
        } else if let Some(rest) = line.strip_prefix("B: ") {
            value_b = value_b.or_else(|| embedded_value(rest, dim));
        }
    }
    match (value_a, value_b) {
        (Some(a), Some(b)) if a > b => "A".to_string(),
        (Some(a), Some(b)) if b > a => "B".to_string(),
        _ => "similar".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(behavior: ScriptedBehavior, messages: &[ChatMessage]) -> String {
        ScriptedBackend::new(behavior)
            .complete_once(messages, &GenerationParams::default())
            .unwrap()
    }

    fn likert_item(statement: &str) -> ChatMessage {
        ChatMessage::user(format!(
            "You will be shown a statement.\n\nStatement: {statement}\n\nOptions:\n\
             1. Very Inaccurate\n2. Moderately Inaccurate\n3. Neither\n\
             4. Moderately Accurate\n5. Very Accurate\n\nRespond with only the number."
        ))
    }

    #[test]
    fn echo_last_returns_last_user_message() {
        let out = complete(
            ScriptedBehavior::EchoLast,
            &[ChatMessage::user("first"), ChatMessage::assistant("mid"), ChatMessage::user("hello")],
        );
        assert_eq!(out, "hello");
    }

    #[test]
    fn persona_linear_matches_hand_computed_clamp_table() {
        // clamp(1 + floor(s * 5 / 100), 1, 5) evaluated by hand for
        // s = 0, 10, ..., 100
        let expected = [1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 5];
        for (i, s) in (0..=100).step_by(10).enumerate() {
            let messages = [
                ChatMessage::system(format!("Your extraversion score is {s} out of 100.")),
                likert_item("I show extraversion every day."),
            ];
            let out = complete(ScriptedBehavior::PersonaLinear, &messages);
            assert_eq!(out, expected[i].to_string(), "s = {s}");
        }
    }

    #[test]
    fn persona_linear_mirrors_reverse_keyed_statements() {
        let messages = [
            ChatMessage::system("Your extraversion score is 80 out of 100."),
            likert_item("I show low extraversion in groups."),
        ];
        // base 5, mirrored to (1 + 5) - 5 = 1
        assert_eq!(complete(ScriptedBehavior::PersonaLinear, &messages), "1");
    }

    #[test]
    fn persona_linear_uses_facet_mean_when_trait_sentence_is_missing() {
        let system = "Your fantasy score is 60 out of 100.\n\
                      Your aesthetics score is 60 out of 100.\n\
                      Your ideas score is 60 out of 100.";
        let messages =
            [ChatMessage::system(system), likert_item("I radiate openness.")];
        // mean 60/100 -> clamp(1 + floor(0.6 * 5)) = 4
        assert_eq!(complete(ScriptedBehavior::PersonaLinear, &messages), "4");
    }

    #[test]
    fn persona_linear_prefers_exact_facet_match() {
        let system = "Your fantasy score is 100 out of 100.\n\
                      Your openness score is 0 out of 100.";
        let messages = [
            ChatMessage::system(system),
            likert_item("I have a strong fantasy life."),
        ];
        assert_eq!(complete(ScriptedBehavior::PersonaLinear, &messages), "5");
    }

    #[test]
    fn persona_linear_defaults_to_middle_without_scores() {
        let messages = [likert_item("I show extraversion every day.")];
        assert_eq!(complete(ScriptedBehavior::PersonaLinear, &messages), "3");
        let unrelated = [
            ChatMessage::system("Your extraversion score is 90 out of 100."),
            likert_item("I enjoy gardening."),
        ];
        assert_eq!(complete(ScriptedBehavior::PersonaLinear, &unrelated), "3");
    }

    #[test]
    fn persona_linear_understands_template_spellings() {
        let system = "People with high compilance score seek to avoid conflict and pursue \
                      cooperation. Your compilance score is 100 out of 100.\n\
                      Your self-disciplinel score is 40 out of 100.";
        let messages = [
            ChatMessage::system(system),
            likert_item("My compliance is obvious to everyone."),
        ];
        assert_eq!(complete(ScriptedBehavior::PersonaLinear, &messages), "5");
    }

    #[test]
    fn persona_linear_dialogue_sentence_embeds_values_and_turn() {
        let system = "Your openness score is 80 out of 100.\n\
                      Your conscientiousness score is 60 out of 100.\n\
                      Your extraversion score is 40 out of 100.\n\
                      Your agreeableness score is 22 out of 100.\n\
                      Your neuroticism score is 12 out of 100.";
        let messages = [
            ChatMessage::system(system),
            ChatMessage::user("Let's talk about travel."),
        ];
        let out = complete(ScriptedBehavior::PersonaLinear, &messages);
        assert_eq!(
            out,
            "Turn 1: I speak with openness 80, conscientiousness 60, extraversion 40, \
             agreeableness 22, neuroticism 12."
        );
    }

    #[test]
    fn persona_linear_is_deterministic() {
        let messages = [
            ChatMessage::system("Your openness score is 33 out of 100."),
            likert_item("I value openness."),
        ];
        let a = complete(ScriptedBehavior::PersonaLinear, &messages);
        let b = complete(ScriptedBehavior::PersonaLinear, &messages);
        assert_eq!(a, b);
    }

    #[test]
    fn random_choice_is_pure_and_roughly_uniform() {
        let behavior = ScriptedBehavior::RandomChoice {
            options: vec!["A".into(), "B".into(), "similar".into()],
            seed: 99,
        };
        let mut counts = BTreeMap::new();
        for i in 0..3000 {
            let messages = [ChatMessage::user(format!("verdict request {i}"))];
            let one = complete(behavior.clone(), &messages);
            let two = complete(behavior.clone(), &messages);
            assert_eq!(one, two);
            *counts.entry(one).or_insert(0u32) += 1;
        }
        for (_, count) in counts {
            assert!((800..1200).contains(&count), "skewed count {count}");
        }
    }

    #[test]
    fn perfect_judge_reads_transcript_values() {
        let prompt = "You will read a dialogue between two agents labeled A and B.\n\n\
            Dialogue:\n\
            A: Turn 1: I speak with openness 80, conscientiousness 60, extraversion 40, \
            agreeableness 20, neuroticism 10.\n\
            B: Turn 2: I speak with openness 10, conscientiousness 60, extraversion 90, \
            agreeableness 20, neuroticism 10.\n\n\
            Question: Which agent exhibits a higher level of extraversion?\n\
            Respond with only one label: A, B, or similar.";
        let messages = [ChatMessage::user(prompt)];
        assert_eq!(complete(ScriptedBehavior::PerfectJudge, &messages), "B");

        let openness = messages[0].content.replace("of extraversion", "of openness");
        assert_eq!(
            complete(ScriptedBehavior::PerfectJudge, &[ChatMessage::user(openness)]),
            "A"
        );
        let agreeable = messages[0].content.replace("of extraversion", "of agreeableness");
        assert_eq!(
            complete(ScriptedBehavior::PerfectJudge, &[ChatMessage::user(agreeable)]),
            "similar"
        );
    }
}
