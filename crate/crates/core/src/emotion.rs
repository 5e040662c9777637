//! The closed set of ten emotion dimensions and a compact label-set type.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EmotionDimension {
    Anger,
    Anticipation,
    Disgust,
    Fear,
    Joy,
    Negative,
    Positive,
    Sadness,
    Surprise,
    Trust,
}

impl EmotionDimension {
    /// Canonical (alphabetical) order.
    pub const ALL: [EmotionDimension; 10] = [
        EmotionDimension::Anger,
        EmotionDimension::Anticipation,
        EmotionDimension::Disgust,
        EmotionDimension::Fear,
        EmotionDimension::Joy,
        EmotionDimension::Negative,
        EmotionDimension::Positive,
        EmotionDimension::Sadness,
        EmotionDimension::Surprise,
        EmotionDimension::Trust,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EmotionDimension::Anger => "anger",
            EmotionDimension::Anticipation => "anticipation",
            EmotionDimension::Disgust => "disgust",
            EmotionDimension::Fear => "fear",
            EmotionDimension::Joy => "joy",
            EmotionDimension::Negative => "negative",
            EmotionDimension::Positive => "positive",
            EmotionDimension::Sadness => "sadness",
            EmotionDimension::Surprise => "surprise",
            EmotionDimension::Trust => "trust",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for EmotionDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown emotion dimension `{0}`")]
pub struct UnknownDimension(pub String);

impl FromStr for EmotionDimension {
    type Err = UnknownDimension;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EmotionDimension::ALL
            .iter()
            .copied()
            .find(|d| d.name() == s)
            .ok_or_else(|| UnknownDimension(s.to_string()))
    }
}

impl Serialize for EmotionDimension {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for EmotionDimension {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A set of emotion dimensions stored as a 10-bit mask.
///
/// Iteration and serialization always follow the canonical dimension order,
/// so two equal sets render identically.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct EmotionSet(u16);

impl EmotionSet {
    pub const fn empty() -> Self {
        EmotionSet(0)
    }

    pub fn all() -> Self {
        EmotionSet((1 << 10) - 1)
    }

    pub fn contains(self, dim: EmotionDimension) -> bool {
        self.0 & (1 << dim.index()) != 0
    }

    pub fn insert(&mut self, dim: EmotionDimension) -> bool {
        let had = self.contains(dim);
        self.0 |= 1 << dim.index();
        !had
    }

    pub fn remove(&mut self, dim: EmotionDimension) -> bool {
        let had = self.contains(dim);
        self.0 &= !(1 << dim.index());
        had
    }

    pub fn union(self, other: EmotionSet) -> EmotionSet {
        EmotionSet(self.0 | other.0)
    }

    pub fn is_subset(self, other: EmotionSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = EmotionDimension> {
        EmotionDimension::ALL
            .into_iter()
            .filter(move |d| self.contains(*d))
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn from_bits(bits: u16) -> Self {
        EmotionSet(bits & ((1 << 10) - 1))
    }
}

impl FromIterator<EmotionDimension> for EmotionSet {
    fn from_iter<I: IntoIterator<Item = EmotionDimension>>(iter: I) -> Self {
        let mut set = EmotionSet::empty();
        for d in iter {
            set.insert(d);
        }
        set
    }
}

impl<const N: usize> From<[EmotionDimension; N]> for EmotionSet {
    fn from(dims: [EmotionDimension; N]) -> Self {
        dims.into_iter().collect()
    }
}

impl fmt::Debug for EmotionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|d| d.name())).finish()
    }
}

impl Serialize for EmotionSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for EmotionSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let dims = Vec::<EmotionDimension>::deserialize(deserializer)?;
        Ok(dims.into_iter().collect())
    }
}
