//! Molecular structures, graph construction, dataset statistics and storage.

mod elements;
mod graph;
mod stats;
mod store;
mod synthetic;
mod xyz;

pub use elements::{atomic_number, element_symbol};
pub use graph::{build_knn_graph, build_radius_graph, MolecularGraph, DEFAULT_K, DEFAULT_R_CUT};
pub use stats::{dataset_stats, sparsity, DatasetStats};
pub use store::{decode_record, encode_record, GraphStore, StoreCounters, RECORD_MAGIC};
pub use synthetic::{qm9_like_size_weights, random_molecule, sample_sizes, synthetic_dataset};
pub use xyz::{format_xyz, parse_xyz};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Atomic number reserved for padding atoms in packed batches.
pub const PADDING_ATOMIC_NUMBER: u8 = 0;

#[derive(Debug, Error)]
pub enum MolError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid molecule {id}: {message}")]
    InvalidMolecule { id: String, message: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("graph `{0}` not found in store")]
    NotFound(String),
    #[error("record for `{id}` failed integrity check: {message}")]
    Integrity { id: String, message: String },
    #[error("{0} exceeds the binary record limits")]
    TooLarge(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl MolError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        MolError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

/// A single molecule: atomic numbers and Cartesian positions in Ångström.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Molecule {
    pub id: String,
    pub atomic_numbers: Vec<u8>,
    pub positions: Vec<[f64; 3]>,
    pub label: Option<f64>,
}

impl Molecule {
    /// Builds a molecule after checking its invariants.
    pub fn new(
        id: impl Into<String>,
        atomic_numbers: Vec<u8>,
        positions: Vec<[f64; 3]>,
        label: Option<f64>,
    ) -> Result<Self, MolError> {
        let mol = Molecule {
            id: id.into(),
            atomic_numbers,
            positions,
            label,
        };
        mol.validate()?;
        Ok(mol)
    }

    pub fn validate(&self) -> Result<(), MolError> {
        let invalid = |message: String| MolError::InvalidMolecule {
            id: self.id.clone(),
            message,
        };
        if self.atomic_numbers.is_empty() {
            return Err(invalid("molecule has no atoms".into()));
        }
        if self.atomic_numbers.len() != self.positions.len() {
            return Err(invalid(format!(
                "{} atomic numbers but {} positions",
                self.atomic_numbers.len(),
                self.positions.len()
            )));
        }
        if let Some(k) = self.atomic_numbers.iter().position(|&z| z == 0) {
            return Err(invalid(format!("atom {k} has atomic number 0")));
        }
        if let Some(k) = self
            .positions
            .iter()
            .position(|p| p.iter().any(|c| !c.is_finite()))
        {
            return Err(invalid(format!("atom {k} has a non-finite coordinate")));
        }
        Ok(())
    }

    pub fn num_atoms(&self) -> usize {
        self.atomic_numbers.len()
    }
}

/// Euclidean distance in double precision.
pub fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}
