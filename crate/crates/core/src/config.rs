use serde::{Deserialize, Serialize};

/// Tunable parameters of the consensus protocol.
///
/// Defaults are the deployed values: settle on a lead of 3, settle by
/// majority (or escalate a tie) at 20 qualified annotations, qualify at
/// 40% agreement after 25 scored images over a 50-image window, halt after
/// 2 "incorrect" flags or 1 "inappropriate" flag.
///
/// Qualification compares inclusively (`agreement >= qual_min_agreement`);
/// disqualification is strict (`agreement < qual_min_agreement`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolConfig {
    pub lead_margin: u32,
    pub max_annotations: u32,
    pub qual_min_agreement: f64,
    pub qual_min_scored: u32,
    pub qual_window: u32,
    pub incorrect_halt: u32,
    pub inappropriate_halt: u32,
    /// Count annotations from non-qualified annotators in tallies.
    pub raw_mode: bool,
    /// Let disqualified annotators keep being scored and qualify again.
    pub allow_requalification: bool,
    /// Compute agreement weights from gold-scored window entries only.
    pub weights_from_gold_only: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            lead_margin: 3,
            max_annotations: 20,
            qual_min_agreement: 0.40,
            qual_min_scored: 25,
            qual_window: 50,
            incorrect_halt: 2,
            inappropriate_halt: 1,
            raw_mode: false,
            allow_requalification: false,
            weights_from_gold_only: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid protocol config: {0}")]
pub struct ConfigError(pub String);

impl ProtocolConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let counts = [
            ("lead_margin", self.lead_margin),
            ("max_annotations", self.max_annotations),
            ("qual_min_scored", self.qual_min_scored),
            ("qual_window", self.qual_window),
            ("incorrect_halt", self.incorrect_halt),
            ("inappropriate_halt", self.inappropriate_halt),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(ConfigError(format!("{name} must be positive")));
            }
        }
        if !(0.0..=1.0).contains(&self.qual_min_agreement) {
            return Err(ConfigError(format!(
                "qual_min_agreement {} outside [0, 1]",
                self.qual_min_agreement
            )));
        }
        if self.qual_window < self.qual_min_scored {
            return Err(ConfigError(
                "qual_window must be at least qual_min_scored".into(),
            ));
        }
        Ok(())
    }
}
