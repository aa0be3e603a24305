//! Attribute schema: the tracked physical attributes and their label spaces.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_err, CoreError, Result};

/// Label at index 0 of every label space.
pub const IRRELEVANT: &str = "irrelevant";

const TRIP_SCHEMA: &str = include_str!("../schemas/trip.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub precondition: Vec<String>,
    pub effect: Vec<String>,
}

/// Which half of an attribute a label belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateSlot {
    Precondition,
    Effect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSchema", into = "RawSchema")]
pub struct AttributeSchema {
    attributes: Vec<AttributeSpec>,
}

#[derive(Serialize, Deserialize)]
struct RawSchema {
    attributes: Vec<AttributeSpec>,
}

impl TryFrom<RawSchema> for AttributeSchema {
    type Error = CoreError;

    fn try_from(raw: RawSchema) -> Result<Self> {
        AttributeSchema::new(raw.attributes)
    }
}

impl From<AttributeSchema> for RawSchema {
    fn from(schema: AttributeSchema) -> Self {
        RawSchema {
            attributes: schema.attributes,
        }
    }
}

impl AttributeSchema {
    pub fn new(attributes: Vec<AttributeSpec>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(CoreError::Schema("at least one attribute is required".into()));
        }
        let mut seen = HashSet::new();
        for spec in &attributes {
            if !seen.insert(spec.name.as_str()) {
                return Err(CoreError::Schema(format!("duplicate attribute name {:?}", spec.name)));
            }
            for (slot, space) in [("precondition", &spec.precondition), ("effect", &spec.effect)] {
                if space.first().map(String::as_str) != Some(IRRELEVANT) {
                    return Err(CoreError::Schema(format!(
                        "attribute {:?}: {slot} label space must start with {IRRELEVANT:?}",
                        spec.name
                    )));
                }
                let unique: HashSet<_> = space.iter().collect();
                if unique.len() != space.len() {
                    return Err(CoreError::Schema(format!(
                        "attribute {:?}: duplicate {slot} labels",
                        spec.name
                    )));
                }
            }
        }
        Ok(Self { attributes })
    }

    /// The 20-attribute schema used for the tiered reasoning source task.
    pub fn trip_default() -> Self {
        serde_json::from_str(TRIP_SCHEMA).expect("bundled schema is valid")
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|source| CoreError::Parse {
            path: path.to_path_buf(),
            line: source.line(),
            source,
        })
    }

    pub fn attributes(&self) -> &[AttributeSpec] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&AttributeSpec> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn labels(&self, attribute: usize, slot: StateSlot) -> &[String] {
        let spec = &self.attributes[attribute];
        match slot {
            StateSlot::Precondition => &spec.precondition,
            StateSlot::Effect => &spec.effect,
        }
    }

    pub fn label_index(&self, attribute: &str, slot: StateSlot, label: &str) -> Option<usize> {
        let idx = self.attribute_index(attribute)?;
        self.labels(idx, slot).iter().position(|l| l == label)
    }

    /// Hex SHA-256 over the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("schema serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
