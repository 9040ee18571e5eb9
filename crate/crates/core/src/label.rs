//! The seven-way annotation alphabet: Fitzpatrick types I..VI plus "not applicable".

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Estimated Fitzpatrick skin type, or `NotApplicable` when the image shows
/// no usable skin.
///
/// The derived ordering places `I` (lightest) first and `NotApplicable` last;
/// it is only used for deterministic map ordering, not as a skin-tone scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FstLabel {
    I,
    II,
    III,
    IV,
    V,
    VI,
    NotApplicable,
}

impl FstLabel {
    /// All seven labels, types first.
    pub const ALL: [FstLabel; 7] = [
        FstLabel::I,
        FstLabel::II,
        FstLabel::III,
        FstLabel::IV,
        FstLabel::V,
        FstLabel::VI,
        FstLabel::NotApplicable,
    ];

    /// The six skin types, lightest first.
    pub const TYPES: [FstLabel; 6] = [
        FstLabel::I,
        FstLabel::II,
        FstLabel::III,
        FstLabel::IV,
        FstLabel::V,
        FstLabel::VI,
    ];

    /// Numeric projection 1..6; `None` for `NotApplicable`.
    pub fn numeric(self) -> Option<u8> {
        match self {
            FstLabel::I => Some(1),
            FstLabel::II => Some(2),
            FstLabel::III => Some(3),
            FstLabel::IV => Some(4),
            FstLabel::V => Some(5),
            FstLabel::VI => Some(6),
            FstLabel::NotApplicable => None,
        }
    }

    pub fn from_numeric(n: u8) -> Option<FstLabel> {
        match n {
            1..=6 => Some(FstLabel::TYPES[usize::from(n - 1)]),
            _ => None,
        }
    }

    pub fn is_applicable(self) -> bool {
        self != FstLabel::NotApplicable
    }

    /// Dense index used for 7-way tables: `NotApplicable` is 0, types are 1..6.
    pub fn index(self) -> usize {
        self.numeric().map_or(0, usize::from)
    }

    pub fn from_index(i: usize) -> Option<FstLabel> {
        match i {
            0 => Some(FstLabel::NotApplicable),
            1..=6 => Some(FstLabel::TYPES[i - 1]),
            _ => None,
        }
    }

    /// Absolute distance in type units, `None` if either side is not applicable.
    pub fn distance(self, other: FstLabel) -> Option<u8> {
        Some(self.numeric()?.abs_diff(other.numeric()?))
    }

    pub fn roman(self) -> &'static str {
        match self {
            FstLabel::I => "I",
            FstLabel::II => "II",
            FstLabel::III => "III",
            FstLabel::IV => "IV",
            FstLabel::V => "V",
            FstLabel::VI => "VI",
            FstLabel::NotApplicable => "N/A",
        }
    }
}

/// Canonical text form: `1`..`6` or `NA`, the same form used in manifests and exports.
impl fmt::Display for FstLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.numeric() {
            Some(n) => write!(f, "{n}"),
            None => f.write_str("NA"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid skin type label {0:?} (expected 1..6, I..VI or NA)")]
pub struct ParseLabelError(pub String);

impl FromStr for FstLabel {
    type Err = ParseLabelError;

    /// Accepts `1`..`6`, roman numerals `I`..`VI`, and `NA` / `N/A`
    /// (case-insensitive, surrounding whitespace ignored).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let label = match t.to_ascii_uppercase().as_str() {
            "1" | "I" => FstLabel::I,
            "2" | "II" => FstLabel::II,
            "3" | "III" => FstLabel::III,
            "4" | "IV" => FstLabel::IV,
            "5" | "V" => FstLabel::V,
            "6" | "VI" => FstLabel::VI,
            "NA" | "N/A" => FstLabel::NotApplicable,
            _ => return Err(ParseLabelError(t.to_string())),
        };
        Ok(label)
    }
}

impl Serialize for FstLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FstLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
