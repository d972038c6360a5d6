//! Text similarity: the built-in term-frequency cosine plus a pluggable
//! scorer interface for external embedding models.
//!
//! External scorers run as child processes speaking a one-request-per-line
//! protocol: the client writes `<len_a> <len_b>\n` followed by exactly that
//! many raw bytes of each text, and reads back a single line holding a
//! decimal score. This keeps embedding stacks out of this crate entirely.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::Mutex;

use super::EvalError;
use crate::dialogue::Transcript;

/// Lowercases, strips punctuation, and splits on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

fn term_frequencies(tokens: &[String]) -> BTreeMap<&str, f64> {
    let mut tf: BTreeMap<&str, f64> = BTreeMap::new();
    for t in tokens {
        *tf.entry(t.as_str()).or_insert(0.0) += 1.0;
    }
    tf
}

/// Cosine similarity of the two texts' term-frequency vectors, in [0, 1].
pub fn tf_cosine(a: &str, b: &str) -> Result<f64, EvalError> {
    let tokens_a = tokenize(a);
    let tokens_b = tokenize(b);
    if tokens_a.is_empty() || tokens_b.is_empty() {
        return Err(EvalError::Input("text tokenizes to nothing".into()));
    }
    let tf_a = term_frequencies(&tokens_a);
    let tf_b = term_frequencies(&tokens_b);
    let dot: f64 = tf_a
        .iter()
        .filter_map(|(term, &count)| tf_b.get(term).map(|other| count * other))
        .sum();
    let norm = |tf: &BTreeMap<&str, f64>| tf.values().map(|c| c * c).sum::<f64>().sqrt();
    Ok(dot / (norm(&tf_a) * norm(&tf_b)))
}

/// Scores how similar two texts are, in [0, 1].
pub trait SimilarityScorer: Send + Sync {
    fn name(&self) -> &str;
    fn score(&self, a: &str, b: &str) -> Result<f64, EvalError>;
}

/// The built-in vector-space scorer.
pub struct TfCosineScorer;

impl SimilarityScorer for TfCosineScorer {
    fn name(&self) -> &str {
        "tf-cosine"
    }

    fn score(&self, a: &str, b: &str) -> Result<f64, EvalError> {
        tf_cosine(a, b)
    }
}

/// A similarity scorer running in a child process.
pub struct ExternalProcessScorer {
    name: String,
    child: Mutex<Child>,
}

impl ExternalProcessScorer {
    pub fn spawn(name: impl Into<String>, command: &str, args: &[String]) -> Result<Self, EvalError> {
        let child = Command::new(command)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| EvalError::Scorer(format!("spawning {command}: {e}")))?;
        Ok(ExternalProcessScorer { name: name.into(), child: Mutex::new(child) })
    }
}

impl SimilarityScorer for ExternalProcessScorer {
    fn name(&self) -> &str {
        &self.name
    }

    fn score(&self, a: &str, b: &str) -> Result<f64, EvalError> {
        let mut child = self.child.lock().expect("scorer poisoned");
        let stdin = child
            .stdin
            .as_mut()
            .ok_or_else(|| EvalError::Scorer("scorer stdin closed".into()))?;
        stdin
            .write_all(format!("{} {}\n", a.len(), b.len()).as_bytes())
            .and_then(|_| stdin.write_all(a.as_bytes()))
            .and_then(|_| stdin.write_all(b.as_bytes()))
            .and_then(|_| stdin.flush())
            .map_err(|e| EvalError::Scorer(format!("writing request: {e}")))?;
        let stdout = child
            .stdout
            .as_mut()
            .ok_or_else(|| EvalError::Scorer("scorer stdout closed".into()))?;
        let mut line = String::new();
        BufReader::new(stdout)
            .read_line(&mut line)
            .map_err(|e| EvalError::Scorer(format!("reading score: {e}")))?;
        line.trim()
            .parse::<f64>()
            .map_err(|e| EvalError::Scorer(format!("bad score {line:?}: {e}")))
    }
}

impl Drop for ExternalProcessScorer {
    fn drop(&mut self) {
        if let Ok(mut child) = self.child.lock() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// Per-agent intra-dialogue consistency: each agent's utterances 1..k-1
/// joined with single spaces, scored against utterance k.
pub fn consistency(
    transcript: &Transcript,
    scorer: &dyn SimilarityScorer,
) -> Result<BTreeMap<String, f64>, EvalError> {
    let mut out = BTreeMap::new();
    for agent in &transcript.agents {
        let utterances = transcript.utterances_by(&agent.id);
        if utterances.len() < 2 {
            return Err(EvalError::Input(format!(
                "agent {} has {} utterances, need at least 2",
                agent.id,
                utterances.len()
            )));
        }
        let (last, head) = utterances.split_last().expect("len >= 2");
        let joined =
            head.iter().map(|u| u.text.as_str()).collect::<Vec<_>>().join(" ");
        out.insert(agent.id.clone(), scorer.score(&joined, &last.text)?);
    }
    Ok(out)
}
