use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PlanError;

/// Per-tile machine parameters used by the cost model.
///
/// Defaults: 1472 tiles, 6 workers, 4-byte data and index elements, 8 bytes
/// per cycle of load/store/accumulate, 4 exchange bytes per cycle and 625 KiB
/// of SRAM per tile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HardwareProfile {
    pub num_tiles: usize,
    /// Worker threads per tile, `W`.
    pub workers: usize,
    pub b_data: usize,
    pub b_index: usize,
    pub b_vwidth: usize,
    pub exchange_bytes_per_cycle: f64,
    pub sram_bytes_per_tile: usize,
}

impl Default for HardwareProfile {
    fn default() -> Self {
        HardwareProfile {
            num_tiles: 1472,
            workers: 6,
            b_data: 4,
            b_index: 4,
            b_vwidth: 8,
            exchange_bytes_per_cycle: 4.0,
            sram_bytes_per_tile: 625 * 1024,
        }
    }
}

impl HardwareProfile {
    pub fn with_tiles(num_tiles: usize) -> Self {
        HardwareProfile {
            num_tiles,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        let ints = [
            ("num_tiles", self.num_tiles),
            ("workers", self.workers),
            ("b_data", self.b_data),
            ("b_index", self.b_index),
            ("b_vwidth", self.b_vwidth),
            ("sram_bytes_per_tile", self.sram_bytes_per_tile),
        ];
        if let Some((name, _)) = ints.iter().find(|(_, v)| *v == 0) {
            return Err(PlanError::Profile(format!("{name} must be positive")));
        }
        if !(self.exchange_bytes_per_cycle > 0.0 && self.exchange_bytes_per_cycle.is_finite()) {
            return Err(PlanError::Profile(
                "exchange_bytes_per_cycle must be positive and finite".into(),
            ));
        }
        Ok(())
    }

    /// Parses TOML, or JSON when the text starts with `{`. Missing fields
    /// take their defaults.
    pub fn from_str_any(text: &str) -> Result<Self, PlanError> {
        let profile: HardwareProfile = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| PlanError::Profile(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| PlanError::Profile(e.to_string()))?
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PlanError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| PlanError::Profile(format!("{}: {e}", path.display())))?;
        Self::from_str_any(&text)
    }
}
