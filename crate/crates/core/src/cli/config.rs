use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CliError;
use crate::kernels::ModelConfig;
use crate::moldata::{DEFAULT_K, DEFAULT_R_CUT};
use crate::packing::EdgeCapacityRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    #[default]
    Radius,
    Knn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Graph count of the smallest instance; each step doubles it.
    pub base: usize,
    pub steps: usize,
    pub repeats: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            base: 16_384,
            steps: 6,
            repeats: 5,
        }
    }
}

/// Everything a run depends on. Loaded from TOML or JSON; command-line
/// flags override file values, which override these defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Multi-frame XYZ file.
    pub dataset: Option<PathBuf>,
    /// `size,count` CSV; used by `pack` when no dataset is given.
    pub histogram: Option<PathBuf>,
    pub graph: GraphKind,
    pub r_cut: f64,
    pub k: usize,
    /// Pack capacities to sweep. Empty means every value from the largest
    /// observed graph size up to four times it.
    pub s_max: Vec<usize>,
    /// Capacity used for the manifest and the forward pass; defaults to the
    /// swept capacity with the least padding for `pack`, and to the first
    /// swept capacity (or the largest graph) for `forward`.
    pub pack_s_m: Option<usize>,
    pub edge_capacity: EdgeCapacityRule,
    /// Hardware profile file for `plan`; built-in defaults when absent.
    pub profile: Option<PathBuf>,
    pub model: ModelConfig,
    /// Weights stem (`<stem>.bin` + `<stem>.json`) for `forward`.
    pub weights: Option<PathBuf>,
    pub precision: Precision,
    pub seed: Option<u64>,
    pub workers: usize,
    pub out: PathBuf,
    pub bench: BenchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: None,
            histogram: None,
            graph: GraphKind::Radius,
            r_cut: DEFAULT_R_CUT,
            k: DEFAULT_K,
            s_max: Vec::new(),
            pack_s_m: None,
            edge_capacity: EdgeCapacityRule::default(),
            profile: None,
            model: ModelConfig::default(),
            weights: None,
            precision: Precision::F32,
            seed: None,
            workers: 1,
            out: PathBuf::from("out"),
            bench: BenchConfig::default(),
        }
    }
}

/// Flag values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub dataset: Option<PathBuf>,
    pub histogram: Option<PathBuf>,
    pub seed: Option<u64>,
    pub s_max: Vec<usize>,
    pub profile: Option<PathBuf>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_str_any(text: &str) -> Result<Self, CliError> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CliError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_str_any(&text)
    }

    /// Defaults, then `file`, then `flags`; the result is validated.
    pub fn resolve(file: Option<&Path>, flags: Overrides) -> Result<Self, CliError> {
        let mut cfg = match file {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        cfg.apply(flags);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, flags: Overrides) {
        if flags.dataset.is_some() {
            self.dataset = flags.dataset;
        }
        if flags.histogram.is_some() {
            self.histogram = flags.histogram;
        }
        if flags.seed.is_some() {
            self.seed = flags.seed;
        }
        if !flags.s_max.is_empty() {
            self.s_max = flags.s_max;
        }
        if flags.profile.is_some() {
            self.profile = flags.profile;
        }
        if let Some(w) = flags.workers {
            self.workers = w;
        }
        if let Some(o) = flags.out {
            self.out = o;
        }
        if let Some(seed) = self.seed {
            self.model.seed = seed;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for (name, path) in [
            ("dataset", &self.dataset),
            ("histogram", &self.histogram),
            ("profile", &self.profile),
        ] {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(CliError::Config(format!("{name} path {} does not exist", p.display())));
                }
            }
        }
        if let Some(stem) = &self.weights {
            let bin = stem.with_extension("bin");
            if !bin.exists() {
                return Err(CliError::Config(format!("weights file {} does not exist", bin.display())));
            }
        }
        if !(self.r_cut > 0.0) || self.k == 0 {
            return Err(CliError::Config("r_cut and k must be positive".into()));
        }
        if self.workers == 0 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        if self.s_max.contains(&0) {
            return Err(CliError::Config("s_max values must be positive".into()));
        }
        self.model.validate()?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded. The output
    /// directory and worker count do not affect results and are left out.
    pub fn hash(&self) -> String {
        let canonical = RunConfig {
            out: PathBuf::new(),
            workers: 1,
            ..self.clone()
        };
        let json = serde_json::to_string(&canonical).expect("config serialises");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_is_flags_then_file_then_defaults() {
        let file = r#"
            s_max = [29, 58]
            workers = 2
            seed = 5
            [model]
            hidden = 16
        "#;
        let mut cfg = RunConfig::from_str_any(file).unwrap();
        assert_eq!(cfg.r_cut, DEFAULT_R_CUT);
        assert_eq!(cfg.model.hidden, 16);
        assert_eq!(cfg.model.n_blocks, 4);
        cfg.apply(Overrides {
            seed: Some(9),
            workers: Some(4),
            ..Overrides::default()
        });
        assert_eq!((cfg.seed, cfg.model.seed, cfg.workers), (Some(9), 9, 4));
        assert_eq!(cfg.s_max, vec![29, 58]);
    }

    #[test]
    fn json_and_toml_agree() {
        let a = RunConfig::from_str_any("r_cut = 5.0\n[edge_capacity]\nrule = \"fixed\"\ncapacity = 64\n").unwrap();
        let b = RunConfig::from_str_any(r#"{"r_cut": 5.0, "edge_capacity": {"rule": "fixed", "capacity": 64}}"#).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.edge_capacity, EdgeCapacityRule::Fixed { capacity: 64 });
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), RunConfig::default().hash());
        let moved = RunConfig {
            out: "elsewhere".into(),
            workers: 8,
            ..a.clone()
        };
        assert_eq!(moved.hash(), a.hash());
    }

    #[test]
    fn rejects_unknown_keys_and_missing_paths() {
        assert!(RunConfig::from_str_any("rcut = 5.0").is_err());
        let cfg = RunConfig {
            dataset: Some("/definitely/not/here.xyz".into()),
            ..RunConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
    }
}
