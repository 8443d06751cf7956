//! System-generated avatar profiles and the entropy of their answer spaces.
//!
//! A schema lists the security-question fields of a fictitious person. Every
//! field has a pool of candidate answers; a profile picks one answer per field
//! uniformly at random from a per-field stream (see [`crate::rng`]), so the
//! entropy of each field is exactly `log2(|pool|)`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normalize::normalize_answer;
use crate::num::Real;
use crate::rng::SeededStream;

/// Number of images (and verbal cues) attached to every field and bank entry.
pub const IMAGES_PER_CHALLENGE: usize = 4;

/// Smallest schema accepted: a question set plus spares.
pub const MIN_SCHEMA_FIELDS: usize = 6;

const DEFAULT_SCHEMA_TOML: &str = include_str!("../data/default_schema.toml");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AvatarError {
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("field `{0}` listed more than once")]
    DuplicateField(String),
    #[error("failed to read schema: {0}")]
    Io(String),
}

pub type Result<T, E = AvatarError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSchema {
    pub field_id: String,
    pub question_text: String,
    pub answer_pool: Vec<String>,
    pub image_set: Vec<String>,
    pub verbal_cues: Vec<String>,
}

impl FieldSchema {
    fn validate(&self) -> Result<()> {
        let id = &self.field_id;
        if id.trim().is_empty() {
            return Err(AvatarError::InvalidSchema("empty field id".into()));
        }
        if self.answer_pool.len() < 2 {
            return Err(AvatarError::InvalidSchema(format!(
                "field `{id}` needs at least 2 answers, has {}",
                self.answer_pool.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for answer in &self.answer_pool {
            let norm = normalize_answer(answer);
            if norm.is_empty() {
                return Err(AvatarError::InvalidSchema(format!("field `{id}` has a blank answer")));
            }
            if !seen.insert(norm) {
                return Err(AvatarError::InvalidSchema(format!(
                    "field `{id}` repeats answer `{answer}` after normalization"
                )));
            }
        }
        if self.image_set.len() != IMAGES_PER_CHALLENGE {
            return Err(AvatarError::InvalidSchema(format!(
                "field `{id}` has {} images, expected {IMAGES_PER_CHALLENGE}",
                self.image_set.len()
            )));
        }
        if self.verbal_cues.len() != IMAGES_PER_CHALLENGE {
            return Err(AvatarError::InvalidSchema(format!(
                "field `{id}` has {} verbal cues, expected {IMAGES_PER_CHALLENGE}",
                self.verbal_cues.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AvatarSchema {
    pub schema_id: String,
    pub fields: Vec<FieldSchema>,
}

impl AvatarSchema {
    /// Build and validate.
    pub fn new(schema_id: impl Into<String>, fields: Vec<FieldSchema>) -> Result<Self> {
        let schema = AvatarSchema { schema_id: schema_id.into(), fields };
        schema.validate()?;
        Ok(schema)
    }

    /// The schema shipped with the crate: ten classic security-question fields.
    pub fn default_schema() -> Self {
        Self::from_toml_str(DEFAULT_SCHEMA_TOML).expect("bundled schema is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let schema: AvatarSchema =
            toml::from_str(text).map_err(|e| AvatarError::InvalidSchema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| AvatarError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("schema serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_id.trim().is_empty() {
            return Err(AvatarError::InvalidSchema("empty schema id".into()));
        }
        if self.fields.len() < MIN_SCHEMA_FIELDS {
            return Err(AvatarError::InvalidSchema(format!(
                "schema has {} fields, needs at least {MIN_SCHEMA_FIELDS}",
                self.fields.len()
            )));
        }
        let mut ids = BTreeSet::new();
        for field in &self.fields {
            field.validate()?;
            if !ids.insert(field.field_id.as_str()) {
                return Err(AvatarError::InvalidSchema(format!(
                    "duplicate field id `{}`",
                    field.field_id
                )));
            }
        }
        Ok(())
    }

    pub fn field(&self, field_id: &str) -> Result<&FieldSchema> {
        self.fields
            .iter()
            .find(|f| f.field_id == field_id)
            .ok_or_else(|| AvatarError::UnknownField(field_id.to_string()))
    }

    pub fn field_position(&self, field_id: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.field_id == field_id)
    }

    pub fn field_ids(&self) -> impl Iterator<Item = &str> {
        self.fields.iter().map(|f| f.field_id.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AvatarProfile {
    pub profile_id: String,
    pub schema_id: String,
    pub seed: u64,
    pub assignments: BTreeMap<String, String>,
}

/// Draw a profile. Field `f` uses the stream labelled `avatar-field/<f>`.
pub fn generate_profile(schema: &AvatarSchema, seed: u64) -> Result<AvatarProfile> {
    schema.validate()?;
    let assignments = schema
        .fields
        .iter()
        .map(|field| {
            let mut stream = SeededStream::new(seed, &format!("avatar-field/{}", field.field_id));
            let pick = stream.index(field.answer_pool.len());
            (field.field_id.clone(), field.answer_pool[pick].clone())
        })
        .collect();
    Ok(AvatarProfile {
        profile_id: format!("{}-{seed:016x}", schema.schema_id),
        schema_id: schema.schema_id.clone(),
        seed,
        assignments,
    })
}

/// The stored answer for `field_id`, verbatim.
pub fn answer_for<'a>(profile: &'a AvatarProfile, field_id: &str) -> Result<&'a str> {
    profile
        .assignments
        .get(field_id)
        .map(String::as_str)
        .ok_or_else(|| AvatarError::UnknownField(field_id.to_string()))
}

/// Shannon entropy of a uniformly drawn field, in bits.
pub fn field_entropy<T: Real>(schema: &AvatarSchema, field_id: &str) -> Result<T> {
    let field = schema.field(field_id)?;
    Ok(T::from_count(field.answer_pool.len()).log2())
}

/// Entropy of independently drawn fields: the sum of their entropies.
pub fn question_set_entropy<T: Real, S: AsRef<str>>(schema: &AvatarSchema, field_ids: &[S]) -> Result<T> {
    let mut seen = BTreeSet::new();
    let mut total = T::zero();
    for id in field_ids {
        let id = id.as_ref();
        if !seen.insert(id) {
            return Err(AvatarError::DuplicateField(id.to_string()));
        }
        total = total + field_entropy::<T>(schema, id)?;
    }
    Ok(total)
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn default_schema_loads() {
        let s = AvatarSchema::default_schema();
        assert_eq!(s.fields.len(), 10);
        assert!(s.field("birth_city").is_ok());
        assert_eq!(s.field("birth_city").unwrap().answer_pool.len(), 64);
    }

    #[test]
    fn single_answer_pool_rejected() {
        let mut s = schema_with_pools(&[4]);
        s.fields[0] = field("color", vec!["blue".into()]);
        assert!(matches!(s.validate(), Err(AvatarError::InvalidSchema(_))));
        assert!(matches!(generate_profile(&s, 1), Err(AvatarError::InvalidSchema(_))));
    }

    #[test]
    fn duplicate_after_normalization_rejected() {
        let mut s = schema_with_pools(&[]);
        s.fields[0] = field("city", vec!["New York".into(), " new   york".into()]);
        assert!(s.validate().is_err());
    }

    #[test]
    fn duplicate_field_ids_rejected() {
        let mut s = schema_with_pools(&[]);
        s.fields[1].field_id = s.fields[0].field_id.clone();
        assert!(s.validate().is_err());
    }

    #[test]
    fn wrong_image_count_rejected() {
        let mut s = schema_with_pools(&[]);
        s.fields[0].image_set.pop();
        assert!(s.validate().is_err());
        let mut s = schema_with_pools(&[]);
        s.fields[0].verbal_cues.push("extra".into());
        assert!(s.validate().is_err());
    }

    #[test]
    fn loader_rejects_unknown_keys() {
        let text = AvatarSchema::default_schema().to_toml_string();
        assert!(AvatarSchema::from_toml_str(&text).is_ok());
        let bad = text.replacen("[[fields]]\n", "[[fields]]\nweight = 3\n", 1);
        assert!(matches!(AvatarSchema::from_toml_str(&bad), Err(AvatarError::InvalidSchema(_))));
        let bad_top = format!("owner = \"x\"\n{text}");
        assert!(AvatarSchema::from_toml_str(&bad_top).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let s = AvatarSchema::default_schema();
        assert_eq!(generate_profile(&s, 42).unwrap(), generate_profile(&s, 42).unwrap());
        assert_ne!(generate_profile(&s, 42).unwrap(), generate_profile(&s, 43).unwrap());
    }

    #[test]
    fn adding_a_field_keeps_other_draws() {
        let s = AvatarSchema::default_schema();
        let mut bigger = s.clone();
        bigger.fields.insert(0, sized_field("zodiac", 12));
        for seed in 0..50 {
            let a = generate_profile(&s, seed).unwrap();
            let b = generate_profile(&bigger, seed).unwrap();
            for (k, v) in &a.assignments {
                assert_eq!(b.assignments.get(k), Some(v));
            }
        }
    }

    #[test]
    fn answer_lookup() {
        let s = AvatarSchema::default_schema();
        let mut p = generate_profile(&s, 9).unwrap();
        p.assignments.insert("birth_city".into(), "Berlin".into());
        assert_eq!(answer_for(&p, "birth_city").unwrap(), "Berlin");
        assert_eq!(answer_for(&p, "zodiac"), Err(AvatarError::UnknownField("zodiac".into())));
    }

    #[test]
    fn entropy_examples() {
        let s = schema_with_pools(&[32, 2, 10, 16, 16, 16, 64, 8]);
        assert_eq!(field_entropy::<f64>(&s, "f0").unwrap(), 5.0);
        assert_eq!(field_entropy::<f64>(&s, "f1").unwrap(), 1.0);
        // log2(10) from ln(10)/ln(2), an independent route
        let log2_10 = 10f64.ln() / 2f64.ln();
        assert!((field_entropy::<f64>(&s, "f2").unwrap() - log2_10).abs() < 1e-9);
        assert!((field_entropy::<f64>(&s, "f2").unwrap() - std::f64::consts::LOG2_10).abs() < 1e-9);
        assert_eq!(question_set_entropy::<f64, _>(&s, &["f3", "f4", "f5"]).unwrap(), 12.0);
        assert_eq!(question_set_entropy::<f64, &str>(&s, &[]).unwrap(), 0.0);
        let mixed = question_set_entropy::<f64, _>(&s, &["f6", "f2", "f7"]).unwrap();
        assert!((mixed - 12.321_928_094_887_362).abs() < 1e-9);
        assert!((field_entropy::<f32>(&s, "f0").unwrap() - 5.0).abs() < 1e-6);
    }

    #[test]
    fn entropy_errors() {
        let s = schema_with_pools(&[8]);
        assert_eq!(field_entropy::<f64>(&s, "nope"), Err(AvatarError::UnknownField("nope".into())));
        assert_eq!(
            question_set_entropy::<f64, _>(&s, &["f0", "f0"]),
            Err(AvatarError::DuplicateField("f0".into()))
        );
    }
}
