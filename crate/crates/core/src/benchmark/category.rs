use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Element category as emitted by the question generator.
///
/// Thirteen parse-level tags. `Human` and `Animal` collapse into a single
/// reporting bucket, see [`ElementCategory::reporting`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ElementCategory {
    Object,
    Human,
    Animal,
    Food,
    Activity,
    Attribute,
    Counting,
    Color,
    Material,
    Spatial,
    Location,
    Shape,
    Other,
}

impl ElementCategory {
    pub const ALL: [ElementCategory; 13] = [
        ElementCategory::Object,
        ElementCategory::Human,
        ElementCategory::Animal,
        ElementCategory::Food,
        ElementCategory::Activity,
        ElementCategory::Attribute,
        ElementCategory::Counting,
        ElementCategory::Color,
        ElementCategory::Material,
        ElementCategory::Spatial,
        ElementCategory::Location,
        ElementCategory::Shape,
        ElementCategory::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ElementCategory::Object => "object",
            ElementCategory::Human => "human",
            ElementCategory::Animal => "animal",
            ElementCategory::Food => "food",
            ElementCategory::Activity => "activity",
            ElementCategory::Attribute => "attribute",
            ElementCategory::Counting => "counting",
            ElementCategory::Color => "color",
            ElementCategory::Material => "material",
            ElementCategory::Spatial => "spatial",
            ElementCategory::Location => "location",
            ElementCategory::Shape => "shape",
            ElementCategory::Other => "other",
        }
    }

    pub fn reporting(self) -> ReportCategory {
        match self {
            ElementCategory::Object => ReportCategory::Object,
            ElementCategory::Human | ElementCategory::Animal => ReportCategory::AnimalHuman,
            ElementCategory::Food => ReportCategory::Food,
            ElementCategory::Activity => ReportCategory::Activity,
            ElementCategory::Attribute => ReportCategory::Attribute,
            ElementCategory::Counting => ReportCategory::Counting,
            ElementCategory::Color => ReportCategory::Color,
            ElementCategory::Material => ReportCategory::Material,
            ElementCategory::Spatial => ReportCategory::Spatial,
            ElementCategory::Location => ReportCategory::Location,
            ElementCategory::Shape => ReportCategory::Shape,
            ElementCategory::Other => ReportCategory::Other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown element category `{0}`")]
pub struct UnknownCategory(pub String);

impl FromStr for ElementCategory {
    type Err = UnknownCategory;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase();
        ElementCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == key)
            .ok_or(UnknownCategory(s.to_string()))
    }
}

impl fmt::Display for ElementCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for ElementCategory {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ElementCategory {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The twelve buckets used in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReportCategory {
    Object,
    AnimalHuman,
    Food,
    Activity,
    Attribute,
    Counting,
    Color,
    Material,
    Spatial,
    Location,
    Shape,
    Other,
}

impl ReportCategory {
    pub const ALL: [ReportCategory; 12] = [
        ReportCategory::Object,
        ReportCategory::AnimalHuman,
        ReportCategory::Food,
        ReportCategory::Activity,
        ReportCategory::Attribute,
        ReportCategory::Counting,
        ReportCategory::Color,
        ReportCategory::Material,
        ReportCategory::Spatial,
        ReportCategory::Location,
        ReportCategory::Shape,
        ReportCategory::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReportCategory::Object => "object",
            ReportCategory::AnimalHuman => "animal/human",
            ReportCategory::Food => "food",
            ReportCategory::Activity => "activity",
            ReportCategory::Attribute => "attribute",
            ReportCategory::Counting => "counting",
            ReportCategory::Color => "color",
            ReportCategory::Material => "material",
            ReportCategory::Spatial => "spatial",
            ReportCategory::Location => "location",
            ReportCategory::Shape => "shape",
            ReportCategory::Other => "other",
        }
    }
}

impl fmt::Display for ReportCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for ReportCategory {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ReportCategory {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        ReportCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown report category `{s}`")))
    }
}
