//! Trait and facet vocabulary, numeric profiles, rescaling, and random
//! profile generation.
//!
//! A profile assigns an integer intensity in `[0, n]` to each Big Five
//! dimension, where `n` is the profile's [`TraitScale`]. Facet profiles
//! extend this to the 30 facets (6 per trait); a facet inherits its parent
//! trait's value unless explicitly overridden.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::Error as _;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Errors from profile construction, rescaling, and facet expansion.
#[derive(Debug, Error, PartialEq)]
pub enum PersonaError {
    #[error("trait scale must be at least 1")]
    InvalidScale,
    #[error("{name} value {value} is out of range [0, {max}]")]
    ValueOutOfRange { name: String, value: u32, max: u32 },
    #[error("unknown facet name: {0}")]
    UnknownFacet(String),
    #[error("unknown trait name: {0}")]
    UnknownTrait(String),
    #[error("degenerate likert range: lo = hi = {0}")]
    DegenerateRange(String),
    #[error("score {score} is out of range [{lo}, {hi}]")]
    ScoreOutOfRange { score: String, lo: String, hi: String },
    #[error("missing key in profile map: {0}")]
    MissingKey(String),
    #[error("unexpected key in profile map: {0}")]
    UnexpectedKey(String),
}

/// The five Big Five dimensions, in canonical O-C-E-A-N order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TraitDim {
    Openness,
    Conscientiousness,
    Extraversion,
    Agreeableness,
    Neuroticism,
}

impl TraitDim {
    pub const ALL: [TraitDim; 5] = [
        TraitDim::Openness,
        TraitDim::Conscientiousness,
        TraitDim::Extraversion,
        TraitDim::Agreeableness,
        TraitDim::Neuroticism,
    ];

    /// Full lowercase trait name, used as the key in prompts and files.
    pub fn name(self) -> &'static str {
        match self {
            TraitDim::Openness => "openness",
            TraitDim::Conscientiousness => "conscientiousness",
            TraitDim::Extraversion => "extraversion",
            TraitDim::Agreeableness => "agreeableness",
            TraitDim::Neuroticism => "neuroticism",
        }
    }

    /// The dimension adjective ("open", "conscientious", ...).
    pub fn adjective(self) -> &'static str {
        match self {
            TraitDim::Openness => "open",
            TraitDim::Conscientiousness => "conscientious",
            TraitDim::Extraversion => "extraverted",
            TraitDim::Agreeableness => "agreeable",
            TraitDim::Neuroticism => "neurotic",
        }
    }

    pub fn from_name(name: &str) -> Result<TraitDim, PersonaError> {
        TraitDim::ALL
            .into_iter()
            .find(|t| t.name() == name.trim().to_ascii_lowercase())
            .ok_or_else(|| PersonaError::UnknownTrait(name.to_string()))
    }

    /// The six facets of this trait, in registry order.
    pub fn facets(self) -> &'static [Facet; 6] {
        match self {
            TraitDim::Openness => &[
                Facet::Fantasy,
                Facet::Aesthetics,
                Facet::Feelings,
                Facet::Actions,
                Facet::Ideas,
                Facet::Values,
            ],
            TraitDim::Conscientiousness => &[
                Facet::Competence,
                Facet::Order,
                Facet::Dutifulness,
                Facet::AchievementStriving,
                Facet::SelfDiscipline,
                Facet::Deliberation,
            ],
            TraitDim::Extraversion => &[
                Facet::Warmth,
                Facet::Gregariousness,
                Facet::Assertiveness,
                Facet::Activity,
                Facet::ExcitementSeeking,
                Facet::PositiveEmotions,
            ],
            TraitDim::Agreeableness => &[
                Facet::Trust,
                Facet::Straightforwardness,
                Facet::Altruism,
                Facet::Compliance,
                Facet::Modesty,
                Facet::TenderMindedness,
            ],
            TraitDim::Neuroticism => &[
                Facet::Anxiety,
                Facet::AngryHostility,
                Facet::Depression,
                Facet::SelfConsciousness,
                Facet::Impulsiveness,
                Facet::Vulnerability,
            ],
        }
    }
}

impl fmt::Display for TraitDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for TraitDim {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for TraitDim {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        TraitDim::from_name(&name).map_err(D::Error::custom)
    }
}

/// The 30 facets (6 per trait), in registry order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Facet {
    // Openness
    Fantasy,
    Aesthetics,
    Feelings,
    Actions,
    Ideas,
    Values,
    // Conscientiousness
    Competence,
    Order,
    Dutifulness,
    AchievementStriving,
    SelfDiscipline,
    Deliberation,
    // Extraversion
    Warmth,
    Gregariousness,
    Assertiveness,
    Activity,
    ExcitementSeeking,
    PositiveEmotions,
    // Agreeableness
    Trust,
    Straightforwardness,
    Altruism,
    Compliance,
    Modesty,
    TenderMindedness,
    // Neuroticism
    Anxiety,
    AngryHostility,
    Depression,
    SelfConsciousness,
    Impulsiveness,
    Vulnerability,
}

impl Facet {
    pub const ALL: [Facet; 30] = [
        Facet::Fantasy,
        Facet::Aesthetics,
        Facet::Feelings,
        Facet::Actions,
        Facet::Ideas,
        Facet::Values,
        Facet::Competence,
        Facet::Order,
        Facet::Dutifulness,
        Facet::AchievementStriving,
        Facet::SelfDiscipline,
        Facet::Deliberation,
        Facet::Warmth,
        Facet::Gregariousness,
        Facet::Assertiveness,
        Facet::Activity,
        Facet::ExcitementSeeking,
        Facet::PositiveEmotions,
        Facet::Trust,
        Facet::Straightforwardness,
        Facet::Altruism,
        Facet::Compliance,
        Facet::Modesty,
        Facet::TenderMindedness,
        Facet::Anxiety,
        Facet::AngryHostility,
        Facet::Depression,
        Facet::SelfConsciousness,
        Facet::Impulsiveness,
        Facet::Vulnerability,
    ];

    /// The snake_case facet key used in files, overrides, and placeholders.
    pub fn name(self) -> &'static str {
        match self {
            Facet::Fantasy => "fantasy",
            Facet::Aesthetics => "aesthetics",
            Facet::Feelings => "feelings",
            Facet::Actions => "actions",
            Facet::Ideas => "ideas",
            Facet::Values => "values",
            Facet::Competence => "competence",
            Facet::Order => "order",
            Facet::Dutifulness => "dutifulness",
            Facet::AchievementStriving => "achievement_striving",
            Facet::SelfDiscipline => "self_discipline",
            Facet::Deliberation => "deliberation",
            Facet::Warmth => "warmth",
            Facet::Gregariousness => "gregariousness",
            Facet::Assertiveness => "assertiveness",
            Facet::Activity => "activity",
            Facet::ExcitementSeeking => "excitement_seeking",
            Facet::PositiveEmotions => "positive_emotions",
            Facet::Trust => "trust",
            Facet::Straightforwardness => "straightforwardness",
            Facet::Altruism => "altruism",
            Facet::Compliance => "compliance",
            Facet::Modesty => "modesty",
            Facet::TenderMindedness => "tender_mindedness",
            Facet::Anxiety => "anxiety",
            Facet::AngryHostility => "angry_hostility",
            Facet::Depression => "depression",
            Facet::SelfConsciousness => "self_consciousness",
            Facet::Impulsiveness => "impulsiveness",
            Facet::Vulnerability => "vulnerability",
        }
    }

    /// Short behavioral description of the facet.
    pub fn description(self) -> &'static str {
        match self {
            Facet::Fantasy => "Active imagination and creativity",
            Facet::Aesthetics => "Appreciation for art and beauty",
            Facet::Feelings => "Awareness and acceptance of emotions",
            Facet::Actions => "Willingness to try new activities",
            Facet::Ideas => "Intellectual curiosity and open-mindedness",
            Facet::Values => {
                "Openness to re-evaluating social, political, or religious values"
            }
            Facet::Competence => "Confidence in one's ability to accomplish tasks",
            Facet::Order => "Preference for organization and tidiness",
            Facet::Dutifulness => "Sense of moral obligation and responsibility",
            Facet::AchievementStriving => "High aspiration and goal orientation",
            Facet::SelfDiscipline => {
                "Ability to begin and complete tasks despite distractions"
            }
            Facet::Deliberation => "Tendency to think carefully before acting",
            Facet::Warmth => "Friendly and affectionate toward others",
            Facet::Gregariousness => "Enjoyment of social interaction",
            Facet::Assertiveness => "Confidence and dominance in social situations",
            Facet::Activity => "High energy and fast-paced lifestyle",
            Facet::ExcitementSeeking => "Desire for novelty and stimulation",
            Facet::PositiveEmotions => "Tendency to experience joy and happiness",
            Facet::Trust => "Belief in the sincerity and goodness of others",
            Facet::Straightforwardness => "Direct and honest in communication",
            Facet::Altruism => "Concern for others' welfare and willingness to help",
            Facet::Compliance => "Tendency to cooperate rather than compete",
            Facet::Modesty => "Humility and lack of arrogance",
            Facet::TenderMindedness => "Sympathy and compassion toward others",
            Facet::Anxiety => "Susceptibility to worry and fear",
            Facet::AngryHostility => "Tendency to experience anger and frustration",
            Facet::Depression => "Feelings of sadness and hopelessness",
            Facet::SelfConsciousness => {
                "Sensitivity to social judgment and embarrassment"
            }
            Facet::Impulsiveness => "Difficulty in controlling urges and desires",
            Facet::Vulnerability => "Difficulty coping with stress and pressure",
        }
    }

    pub fn parent(self) -> TraitDim {
        match self {
            Facet::Fantasy
            | Facet::Aesthetics
            | Facet::Feelings
            | Facet::Actions
            | Facet::Ideas
            | Facet::Values => TraitDim::Openness,

            Facet::Competence
            | Facet::Order
            | Facet::Dutifulness
            | Facet::AchievementStriving
            | Facet::SelfDiscipline
            | Facet::Deliberation => TraitDim::Conscientiousness,

            Facet::Warmth
            | Facet::Gregariousness
            | Facet::Assertiveness
            | Facet::Activity
            | Facet::ExcitementSeeking
            | Facet::PositiveEmotions => TraitDim::Extraversion,

            Facet::Trust
            | Facet::Straightforwardness
            | Facet::Altruism
            | Facet::Compliance
            | Facet::Modesty
            | Facet::TenderMindedness => TraitDim::Agreeableness,

            Facet::Anxiety
            | Facet::AngryHostility
            | Facet::Depression
            | Facet::SelfConsciousness
            | Facet::Impulsiveness
            | Facet::Vulnerability => TraitDim::Neuroticism,
        }
    }

    pub fn from_name(name: &str) -> Result<Facet, PersonaError> {
        let key = name.trim().to_ascii_lowercase();
        Facet::ALL
            .into_iter()
            .find(|f| f.name() == key)
            .ok_or_else(|| PersonaError::UnknownFacet(name.to_string()))
    }
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Facet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Facet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        Facet::from_name(&name).map_err(D::Error::custom)
    }
}

/// Maximum intensity of the integer trait range embedded in prompts
/// ("score is s out of n").
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TraitScale(u32);

impl TraitScale {
    /// The four discrete levels used when mirroring the reference grid.
    pub const GRID: [u32; 4] = [10, 25, 50, 100];

    pub fn new(n: u32) -> Result<TraitScale, PersonaError> {
        if n == 0 {
            return Err(PersonaError::InvalidScale);
        }
        Ok(TraitScale(n))
    }

    pub fn max(self) -> u32 {
        self.0
    }
}

impl fmt::Display for TraitScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn check_range(name: &str, value: u32, scale: TraitScale) -> Result<(), PersonaError> {
    if value > scale.max() {
        return Err(PersonaError::ValueOutOfRange {
            name: name.to_string(),
            value,
            max: scale.max(),
        });
    }
    Ok(())
}

/// Integer intensities for the five traits on a shared scale.
///
/// Immutable after construction; every value lies in `[0, n]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BigFiveProfile {
    scale: TraitScale,
    values: [u32; 5],
}

impl BigFiveProfile {
    pub fn new(scale: TraitScale, values: [u32; 5]) -> Result<BigFiveProfile, PersonaError> {
        for (t, &v) in TraitDim::ALL.iter().zip(values.iter()) {
            check_range(t.name(), v, scale)?;
        }
        Ok(BigFiveProfile { scale, values })
    }

    /// All five traits at the same intensity.
    pub fn uniform(scale: TraitScale, value: u32) -> Result<BigFiveProfile, PersonaError> {
        BigFiveProfile::new(scale, [value; 5])
    }

    pub fn get(&self, dim: TraitDim) -> u32 {
        self.values[dim as usize]
    }

    pub fn with_value(&self, dim: TraitDim, value: u32) -> Result<BigFiveProfile, PersonaError> {
        check_range(dim.name(), value, self.scale)?;
        let mut values = self.values;
        values[dim as usize] = value;
        Ok(BigFiveProfile {
            scale: self.scale,
            values,
        })
    }

    pub fn scale(&self) -> TraitScale {
        self.scale
    }

    pub fn to_map(&self) -> BTreeMap<String, u32> {
        let mut map = BTreeMap::new();
        map.insert("scale".to_string(), self.scale.max());
        for t in TraitDim::ALL {
            map.insert(t.name().to_string(), self.get(t));
        }
        map
    }

    pub fn from_map(map: &BTreeMap<String, u32>) -> Result<BigFiveProfile, PersonaError> {
        let n = *map
            .get("scale")
            .ok_or_else(|| PersonaError::MissingKey("scale".into()))?;
        let scale = TraitScale::new(n)?;
        let mut values = [0u32; 5];
        for t in TraitDim::ALL {
            values[t as usize] = *map
                .get(t.name())
                .ok_or_else(|| PersonaError::MissingKey(t.name().into()))?;
        }
        for key in map.keys() {
            if key != "scale" && TraitDim::from_name(key).is_err() {
                return Err(PersonaError::UnexpectedKey(key.clone()));
            }
        }
        BigFiveProfile::new(scale, values)
    }
}

impl Serialize for BigFiveProfile {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let map = self.to_map();
        let mut m = s.serialize_map(Some(map.len()))?;
        for (k, v) in &map {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for BigFiveProfile {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let map = BTreeMap::<String, u32>::deserialize(d)?;
        BigFiveProfile::from_map(&map).map_err(D::Error::custom)
    }
}

/// Integer intensities for all 30 facets, plus the parent trait profile
/// they derive from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FacetProfile {
    parent: BigFiveProfile,
    values: [u32; 30],
}

impl FacetProfile {
    pub fn get(&self, facet: Facet) -> u32 {
        self.values[facet as usize]
    }

    pub fn parent(&self) -> &BigFiveProfile {
        &self.parent
    }

    pub fn scale(&self) -> TraitScale {
        self.parent.scale()
    }

    pub fn to_map(&self) -> BTreeMap<String, u32> {
        let mut map = BTreeMap::new();
        map.insert("scale".to_string(), self.scale().max());
        for f in Facet::ALL {
            map.insert(f.name().to_string(), self.get(f));
        }
        map
    }
}

/// Derives a facet profile from a trait profile: each facet inherits its
/// parent trait's value unless an override names it explicitly.
pub fn expand_profile(
    profile: &BigFiveProfile,
    overrides: &BTreeMap<String, u32>,
) -> Result<FacetProfile, PersonaError> {
    let scale = profile.scale();
    let mut values = [0u32; 30];
    for f in Facet::ALL {
        values[f as usize] = profile.get(f.parent());
    }
    for (name, &value) in overrides {
        let facet = Facet::from_name(name)?;
        check_range(facet.name(), value, scale)?;
        values[facet as usize] = value;
    }
    Ok(FacetProfile {
        parent: *profile,
        values,
    })
}

/// Linearly maps an integer intensity from one scale onto another,
/// exactly: `value * to / from`.
pub fn rescale(
    value: u32,
    from: TraitScale,
    to: TraitScale,
) -> Result<Ratio<i64>, PersonaError> {
    check_range("value", value, from)?;
    Ok(Ratio::new(
        i64::from(value) * i64::from(to.max()),
        i64::from(from.max()),
    ))
}

/// Affinely maps a score from `[lo, hi]` onto `[0, n]`:
/// `(score - lo) / (hi - lo) * n`.
pub fn rescale_likert(
    score: Ratio<i64>,
    lo: Ratio<i64>,
    hi: Ratio<i64>,
    target: TraitScale,
) -> Result<Ratio<i64>, PersonaError> {
    if lo >= hi {
        return Err(PersonaError::DegenerateRange(lo.to_string()));
    }
    if score < lo || score > hi {
        return Err(PersonaError::ScoreOutOfRange {
            score: score.to_string(),
            lo: lo.to_string(),
            hi: hi.to_string(),
        });
    }
    Ok((score - lo) / (hi - lo) * Ratio::from_integer(i64::from(target.max())))
}

/// Draws a profile with five independent uniform values over `[0, n]`.
/// The same seed always yields the same profile.
pub fn random_profile(rng_seed: u64, scale: TraitScale) -> BigFiveProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    sample_profile(&mut rng, scale)
}

/// Draws a profile from an existing RNG stream (one draw per trait, in
/// O-C-E-A-N order).
pub fn sample_profile<R: Rng>(rng: &mut R, scale: TraitScale) -> BigFiveProfile {
    let mut values = [0u32; 5];
    for v in &mut values {
        *v = rng.random_range(0..=scale.max());
    }
    BigFiveProfile { scale, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scale(n: u32) -> TraitScale {
        TraitScale::new(n).unwrap()
    }

    #[test]
    fn registry_partitions_into_five_groups_of_six() {
        assert_eq!(Facet::ALL.len(), 30);
        for t in TraitDim::ALL {
            let facets = t.facets();
            assert_eq!(facets.len(), 6);
            for f in facets {
                assert_eq!(f.parent(), t);
            }
        }
        // every facet appears in exactly one group
        let mut seen = std::collections::BTreeSet::new();
        for t in TraitDim::ALL {
            for f in t.facets() {
                assert!(seen.insert(*f), "{f} appears twice");
            }
        }
        assert_eq!(seen.len(), 30);
    }

    #[test]
    fn facet_names_round_trip() {
        for f in Facet::ALL {
            assert_eq!(Facet::from_name(f.name()).unwrap(), f);
            assert!(!f.description().is_empty());
        }
        assert_eq!(
            Facet::from_name("telepathy"),
            Err(PersonaError::UnknownFacet("telepathy".into()))
        );
    }

    #[test]
    fn expand_replicates_parent_values() {
        let p = BigFiveProfile::uniform(scale(100), 50).unwrap();
        let f = expand_profile(&p, &BTreeMap::new()).unwrap();
        for facet in Facet::ALL {
            assert_eq!(f.get(facet), 50);
        }
    }

    #[test]
    fn expand_scopes_values_to_parent_trait() {
        let p = BigFiveProfile::new(scale(100), [80, 0, 0, 0, 0]).unwrap();
        let f = expand_profile(&p, &BTreeMap::new()).unwrap();
        for facet in Facet::ALL {
            let expected = if facet.parent() == TraitDim::Openness { 80 } else { 0 };
            assert_eq!(f.get(facet), expected, "{facet}");
        }
    }

    #[test]
    fn expand_override_takes_precedence() {
        let p = BigFiveProfile::new(scale(100), [80, 0, 0, 0, 0]).unwrap();
        let overrides = BTreeMap::from([("fantasy".to_string(), 10u32)]);
        let f = expand_profile(&p, &overrides).unwrap();
        assert_eq!(f.get(Facet::Fantasy), 10);
        assert_eq!(f.get(Facet::Aesthetics), 80);
        assert_eq!(f.get(Facet::Ideas), 80);
    }

    #[test]
    fn expand_rejects_unknown_facet_by_name() {
        let p = BigFiveProfile::uniform(scale(100), 50).unwrap();
        let overrides = BTreeMap::from([("charisma".to_string(), 10u32)]);
        let err = expand_profile(&p, &overrides).unwrap_err();
        assert_eq!(err, PersonaError::UnknownFacet("charisma".into()));
    }

    #[test]
    fn expand_rejects_out_of_range_override() {
        let p = BigFiveProfile::uniform(scale(100), 50).unwrap();
        let overrides = BTreeMap::from([("fantasy".to_string(), 101u32)]);
        assert!(matches!(
            expand_profile(&p, &overrides),
            Err(PersonaError::ValueOutOfRange { .. })
        ));
    }

    #[test]
    fn expand_is_idempotent_without_overrides() {
        let p = BigFiveProfile::new(scale(25), [1, 2, 3, 4, 5]).unwrap();
        let a = expand_profile(&p, &BTreeMap::new()).unwrap();
        let b = expand_profile(&p, &BTreeMap::new()).unwrap();
        assert_eq!(a.to_map(), b.to_map());
    }

    #[test]
    fn rescale_examples() {
        let r = rescale(5, scale(10), scale(100)).unwrap();
        assert_eq!(r, Ratio::from_integer(50));
        assert_eq!(rescale(0, scale(25), scale(100)).unwrap(), Ratio::from_integer(0));
        assert_eq!(rescale(25, scale(25), scale(100)).unwrap(), Ratio::from_integer(100));
    }

    #[test]
    fn rescale_rejects_out_of_range() {
        assert!(matches!(
            rescale(11, scale(10), scale(100)),
            Err(PersonaError::ValueOutOfRange { .. })
        ));
    }

    #[test]
    fn rescale_likert_examples() {
        let lo = Ratio::from_integer(1);
        let hi = Ratio::from_integer(5);
        let n = scale(100);
        assert_eq!(rescale_likert(lo, lo, hi, n).unwrap(), Ratio::from_integer(0));
        assert_eq!(rescale_likert(hi, lo, hi, n).unwrap(), Ratio::from_integer(100));
        assert_eq!(
            rescale_likert(Ratio::from_integer(3), lo, hi, n).unwrap(),
            Ratio::from_integer(50)
        );
    }

    #[test]
    fn rescale_likert_rejects_degenerate_range() {
        let x = Ratio::from_integer(3);
        assert!(matches!(
            rescale_likert(x, x, x, scale(100)),
            Err(PersonaError::DegenerateRange(_))
        ));
    }

    #[test]
    fn random_profile_is_deterministic_per_seed() {
        let s = scale(100);
        assert_eq!(random_profile(7, s), random_profile(7, s));
        assert_ne!(random_profile(7, s), random_profile(8, s));
    }

    #[test]
    fn random_profile_matches_uniform_oracle() {
        // law-of-large-numbers check: 10k draws per trait, mean within 50 +/- 2
        let s = scale(100);
        let mut sums = [0u64; 5];
        for seed in 0..10_000u64 {
            let p = random_profile(seed, s);
            for t in TraitDim::ALL {
                let v = p.get(t);
                assert!(v <= 100);
                sums[t as usize] += u64::from(v);
            }
        }
        for sum in sums {
            let mean = sum as f64 / 10_000.0;
            assert!((mean - 50.0).abs() < 2.0, "mean {mean}");
        }
    }

    #[test]
    fn profile_map_round_trip() {
        let p = BigFiveProfile::new(scale(50), [0, 10, 20, 30, 50]).unwrap();
        let map = p.to_map();
        assert_eq!(map["scale"], 50);
        assert_eq!(map["openness"], 0);
        assert_eq!(map["neuroticism"], 50);
        assert_eq!(BigFiveProfile::from_map(&map).unwrap(), p);

        let mut bad = map.clone();
        bad.insert("grit".into(), 1);
        assert_eq!(
            BigFiveProfile::from_map(&bad),
            Err(PersonaError::UnexpectedKey("grit".into()))
        );
    }

    proptest! {
        #[test]
        fn rescale_round_trips_exactly(v in 0u32..=200, a in 1u32..=200, b in 1u32..=200) {
            let v = v.min(a);
            let (sa, sb) = (scale(a), scale(b));
            let forward = rescale(v, sa, sb).unwrap();
            // feed the exact rational back through the affine map by hand
            let back = forward * Ratio::new(i64::from(a), i64::from(b));
            prop_assert_eq!(back, Ratio::from_integer(i64::from(v)));
        }

        #[test]
        fn sampled_values_stay_in_range(seed in 0u64..1000, n in 1u32..=100) {
            let p = random_profile(seed, scale(n));
            for t in TraitDim::ALL {
                prop_assert!(p.get(t) <= n);
            }
        }
    }
}
