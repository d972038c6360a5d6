//! Persona prompt rendering.
//!
//! The three scaler prompt kinds (`simple`, `specific`, `simspec`) are
//! rendered from template assets with `{placeholder}` tokens. Templates are
//! stored verbatim, spelling quirks included ("compilance",
//! "self-disciplinel"), so that rendered prompts are byte-comparable against
//! the source material; a corrected template set is available as an opt-in
//! variant. `naive` and `neutral` are baseline kinds: a one-line adjective
//! prompt and the empty prompt.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::persona::{Facet, FacetProfile, PersonaError, TraitDim, TraitScale};

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("prompt kind {0} takes no profile template")]
    NotAScalerKind(PromptKind),
    #[error("facet profile is on scale {profile} but scale {requested} was requested")]
    ScaleMismatch { profile: u32, requested: u32 },
    #[error("template references unknown placeholder {{{0}}}")]
    UnknownPlaceholder(String),
    #[error("unterminated placeholder in template")]
    UnterminatedPlaceholder,
    #[error(transparent)]
    Persona(#[from] PersonaError),
}

/// The five prompt kinds: three scaler templates plus two baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptKind {
    Simple,
    Specific,
    Simspec,
    Naive,
    Neutral,
}

impl PromptKind {
    pub const ALL: [PromptKind; 5] = [
        PromptKind::Simple,
        PromptKind::Specific,
        PromptKind::Simspec,
        PromptKind::Naive,
        PromptKind::Neutral,
    ];

    /// The template-driven kinds that consume numeric profiles.
    pub const SCALER: [PromptKind; 3] =
        [PromptKind::Simple, PromptKind::Specific, PromptKind::Simspec];

    pub fn name(self) -> &'static str {
        match self {
            PromptKind::Simple => "simple",
            PromptKind::Specific => "specific",
            PromptKind::Simspec => "simspec",
            PromptKind::Naive => "naive",
            PromptKind::Neutral => "neutral",
        }
    }

    pub fn is_scaler(self) -> bool {
        matches!(self, PromptKind::Simple | PromptKind::Specific | PromptKind::Simspec)
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PromptKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PromptKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| format!("unknown prompt kind: {s}"))
    }
}

/// Which transcription of the templates to render from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateSet {
    /// Verbatim transcription, spelling quirks included. The default.
    #[default]
    Faithful,
    /// Same sentences with the spelling quirks fixed.
    Corrected,
}

fn template(kind: PromptKind, set: TemplateSet) -> &'static str {
    match (set, kind) {
        (TemplateSet::Faithful, PromptKind::Simple) => {
            include_str!("../assets/templates/simple.txt")
        }
        (TemplateSet::Faithful, PromptKind::Specific) => {
            include_str!("../assets/templates/specific.txt")
        }
        (TemplateSet::Faithful, PromptKind::Simspec) => {
            include_str!("../assets/templates/simspec.txt")
        }
        (TemplateSet::Corrected, PromptKind::Simple) => {
            include_str!("../assets/templates/corrected/simple.txt")
        }
        (TemplateSet::Corrected, PromptKind::Specific) => {
            include_str!("../assets/templates/corrected/specific.txt")
        }
        (TemplateSet::Corrected, PromptKind::Simspec) => {
            include_str!("../assets/templates/corrected/simspec.txt")
        }
        _ => unreachable!("only scaler kinds have templates"),
    }
}

/// Where a prompt's numbers came from.
#[derive(Debug, Clone, PartialEq)]
pub enum PromptSource {
    Facets(Box<FacetProfile>),
    SingleTrait { dim: TraitDim, value: u32 },
    TraitOnly(TraitDim),
    None,
}

/// A rendered conditioning prompt plus its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonaPrompt {
    text: String,
    kind: PromptKind,
    scale: Option<TraitScale>,
    source: PromptSource,
}

impl PersonaPrompt {
    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn kind(&self) -> PromptKind {
        self.kind
    }

    pub fn scale(&self) -> Option<TraitScale> {
        self.scale
    }

    pub fn source(&self) -> &PromptSource {
        &self.source
    }

    pub fn single_trait(&self) -> Option<TraitDim> {
        match self.source {
            PromptSource::SingleTrait { dim, .. } | PromptSource::TraitOnly(dim) => Some(dim),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }
}

/// Maps a placeholder name to the facet it stands for, accepting the
/// faithful template's "compilance" alias.
fn facet_for_placeholder(name: &str) -> Option<Facet> {
    if name == "compilance" {
        return Some(Facet::Compliance);
    }
    Facet::from_name(name).ok()
}

fn render_with(
    template: &str,
    resolve: impl Fn(&str) -> Option<u32>,
) -> Result<String, PromptError> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after.find('}').ok_or(PromptError::UnterminatedPlaceholder)?;
        let name = &after[..close];
        match resolve(name) {
            Some(value) => out.push_str(&value.to_string()),
            None => return Err(PromptError::UnknownPlaceholder(name.to_string())),
        }
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    debug_assert!(!out.contains('{'), "unresolved placeholder survived rendering");
    Ok(out)
}

/// Renders a full scaler prompt for a facet profile.
///
/// `simple` consumes the 5 trait values, `specific` the 30 facet values,
/// `simspec` all 35. Rendering is pure: identical inputs give byte-identical
/// text.
pub fn build_prompt(
    kind: PromptKind,
    facets: &FacetProfile,
    scale: TraitScale,
) -> Result<PersonaPrompt, PromptError> {
    build_prompt_with(kind, facets, scale, TemplateSet::Faithful)
}

pub fn build_prompt_with(
    kind: PromptKind,
    facets: &FacetProfile,
    scale: TraitScale,
    set: TemplateSet,
) -> Result<PersonaPrompt, PromptError> {
    if !kind.is_scaler() {
        return Err(PromptError::NotAScalerKind(kind));
    }
    if facets.scale() != scale {
        return Err(PromptError::ScaleMismatch {
            profile: facets.scale().max(),
            requested: scale.max(),
        });
    }
    let text = render_with(template(kind, set), |name| {
        if name == "n" {
            return Some(scale.max());
        }
        if let Ok(dim) = TraitDim::from_name(name) {
            return Some(facets.parent().get(dim));
        }
        facet_for_placeholder(name).map(|f| facets.get(f))
    })?;
    Ok(PersonaPrompt {
        text,
        kind,
        scale: Some(scale),
        source: PromptSource::Facets(Box::new(facets.clone())),
    })
}

/// Renders only the sentences belonging to one trait, followed by the
/// closing instruction: 1 sentence for `simple`, 6 for `specific`, 7 for
/// `simspec`.
pub fn build_single_trait_prompt(
    kind: PromptKind,
    dim: TraitDim,
    value: u32,
    scale: TraitScale,
) -> Result<PersonaPrompt, PromptError> {
    build_single_trait_prompt_with(kind, dim, value, scale, TemplateSet::Faithful)
}

pub fn build_single_trait_prompt_with(
    kind: PromptKind,
    dim: TraitDim,
    value: u32,
    scale: TraitScale,
    set: TemplateSet,
) -> Result<PersonaPrompt, PromptError> {
    if !kind.is_scaler() {
        return Err(PromptError::NotAScalerKind(kind));
    }
    if value > scale.max() {
        return Err(PersonaError::ValueOutOfRange {
            name: dim.name().to_string(),
            value,
            max: scale.max(),
        }
        .into());
    }
    let full = template(kind, set);
    let blocks: Vec<&str> = full.split("\n\n").collect();
    let closing = *blocks.last().expect("template has a closing block");
    let body = match kind {
        // the simple template is one block of five lines, one per trait
        PromptKind::Simple => blocks[0]
            .lines()
            .nth(dim as usize)
            .expect("five trait lines")
            .to_string(),
        // specific and simspec templates carry one block per trait
        _ => blocks[dim as usize].to_string(),
    };
    let text = render_with(&format!("{body}\n\n{closing}"), |name| {
        if name == "n" {
            Some(scale.max())
        } else {
            Some(value)
        }
    })?;
    Ok(PersonaPrompt {
        text,
        kind,
        scale: Some(scale),
        source: PromptSource::SingleTrait { dim, value },
    })
}

/// The one-line baseline prompt "You are a/an X person.", with the article
/// chosen by the adjective's leading sound.
pub fn build_naive_prompt(dim: TraitDim) -> PersonaPrompt {
    let adjective = dim.adjective();
    let article = match adjective.chars().next() {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    };
    PersonaPrompt {
        text: format!("You are {article} {adjective} person."),
        kind: PromptKind::Naive,
        scale: None,
        source: PromptSource::TraitOnly(dim),
    }
}

/// The no-personality baseline: an empty prompt, delivered as no system
/// message at all.
pub fn build_neutral_prompt() -> PersonaPrompt {
    PersonaPrompt {
        text: String::new(),
        kind: PromptKind::Neutral,
        scale: None,
        source: PromptSource::None,
    }
}
