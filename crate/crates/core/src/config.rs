//! Global JSON experiment configuration: operation times, coherence
//! fit, swap policy, seed, and named bivariate-bicycle presets.

use std::collections::BTreeMap;
use std::fmt::{self, Display, Formatter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codes::BbPreset;
use crate::compiler::SwapPolicy;
use crate::hardware::OpTimes;
use crate::noise::CoherenceFit;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub op_times: OpTimes,
    pub coherence_fit: CoherenceFit,
    pub swap_policy: SwapPolicy,
    pub seed: u64,
    /// Named BB polynomial sets, e.g. `"144"` for the shipped preset.
    pub bb_presets: BTreeMap<String, BbPreset>,
}

impl Default for Config {
    fn default() -> Self {
        let mut bb_presets = BTreeMap::new();
        bb_presets.insert("144".to_string(), crate::codes::presets::bb_144_preset());
        Self {
            op_times: OpTimes::default(),
            coherence_fit: CoherenceFit::default(),
            swap_policy: SwapPolicy::default(),
            seed: 0,
            bb_presets,
        }
    }
}

#[derive(Debug)]
pub enum ConfigError {
    Io(std::io::Error),
    Parse(serde_json::Error),
}

impl Display for ConfigError {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io(e) => write!(f, "cannot read config: {e}"),
            Self::Parse(e) => write!(f, "cannot parse config: {e}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl Config {
    /// Load from a JSON file; missing keys fall back to defaults, and
    /// the shipped BB presets stay available unless overridden.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(ConfigError::Io)?;
        let mut config: Config = serde_json::from_str(&text).map_err(ConfigError::Parse)?;
        for (name, preset) in Config::default().bb_presets {
            config.bb_presets.entry(name).or_insert(preset);
        }
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_has_shipped_preset() {
        let config = Config::default();
        let preset = &config.bb_presets["144"];
        assert_eq!((preset.l, preset.m), (12, 6));
        assert_eq!(preset.a, vec![(3, 0), (0, 1), (0, 2)]);
        assert_eq!(preset.b, vec![(0, 3), (1, 0), (2, 0)]);
    }

    #[test]
    fn partial_json_takes_defaults() {
        let config: Config =
            serde_json::from_str(r#"{"op_times": {"gate_base": 50.0}, "seed": 7}"#).unwrap();
        assert_eq!(config.op_times.gate_base, 50.0);
        assert_eq!(config.op_times.split, 80.0);
        assert_eq!(config.seed, 7);
        assert_eq!(config.coherence_fit, CoherenceFit::LogLog);
        assert_eq!(config.swap_policy, SwapPolicy::GateSwap);
    }

    #[test]
    fn bb_preset_wire_format() {
        let json = r#"{"l":12,"m":6,"a":[[3,0],[0,1],[0,2]],"b":[[0,3],[1,0],[2,0]]}"#;
        let preset: BbPreset = serde_json::from_str(json).unwrap();
        assert_eq!(preset, crate::codes::presets::bb_144_preset());
    }
}
