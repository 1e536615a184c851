//! Model hyperparameters, weights and their on-disk form.
//!
//! Weights are saved as a flat little-endian `f32` blob plus a JSON sidecar
//! listing every tensor in blob order with its shape and element offset:
//!
//! ```text
//! embedding                [n_species, hidden]
//! block{b}.filter1.weight  [hidden, n_rbf]    block{b}.filter1.bias  [hidden]
//! block{b}.filter2.weight  [hidden, hidden]   block{b}.filter2.bias  [hidden]
//! block{b}.pre.weight      [hidden, hidden]
//! block{b}.post1.weight    [hidden, hidden]   block{b}.post1.bias    [hidden]
//! block{b}.post2.weight    [hidden, hidden]   block{b}.post2.bias    [hidden]
//! readout1.weight          [hidden/2, hidden] readout1.bias          [hidden/2]
//! readout2.weight          [1, hidden/2]      readout2.bias          [1]
//! ```
//!
//! Weight matrices are `[out, in]`, row-major.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{KernelError, RadialBasis};

pub const WEIGHTS_FORMAT: &str = "molpack-weights-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Node feature width.
    pub hidden: usize,
    pub n_blocks: usize,
    pub r_cut: f64,
    /// Gaussian spacing; the basis has `round(r_cut / delta_mu)` centres.
    pub delta_mu: f64,
    /// Gaussian width; `1 / (2 delta_mu^2)` when absent.
    pub gamma: Option<f64>,
    pub beta: f64,
    pub tau: f64,
    /// Embedding rows; atomic numbers `0..n_species` are accepted.
    pub n_species: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden: 100,
            n_blocks: 4,
            r_cut: 6.0,
            delta_mu: 0.24,
            gamma: None,
            beta: 1.0,
            tau: 20.0,
            n_species: 100,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn basis(&self) -> RadialBasis {
        RadialBasis::new(self.r_cut, self.delta_mu, self.gamma)
    }

    pub fn n_rbf(&self) -> usize {
        self.basis().n_rbf
    }

    pub fn readout_hidden(&self) -> usize {
        (self.hidden / 2).max(1)
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        let bad = |m: &str| Err(KernelError::Params(m.to_string()));
        if self.hidden == 0 {
            return bad("hidden must be positive");
        }
        if !(self.r_cut > 0.0 && self.delta_mu > 0.0) {
            return bad("r_cut and delta_mu must be positive");
        }
        if self.n_rbf() == 0 {
            return bad("radial basis is empty");
        }
        if !(self.beta > 0.0) {
            return bad("beta must be positive");
        }
        if self.n_species == 0 || self.n_species > 256 {
            return bad("n_species must be in 1..=256");
        }
        Ok(())
    }
}

/// Fully connected layer, `y = W x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: Vec<f32>,
    pub bias: Option<Vec<f32>>,
}

impl DenseParams {
    fn zeros(in_dim: usize, out_dim: usize, bias: bool) -> Self {
        DenseParams {
            in_dim,
            out_dim,
            weight: vec![0.0; in_dim * out_dim],
            bias: bias.then(|| vec![0.0; out_dim]),
        }
    }

    fn init(in_dim: usize, out_dim: usize, bias: bool, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (in_dim as f32).sqrt();
        let mut layer = Self::zeros(in_dim, out_dim, bias);
        for w in &mut layer.weight {
            *w = rng.gen_range(-bound..=bound);
        }
        if let Some(b) = &mut layer.bias {
            for x in b {
                *x = rng.gen_range(-bound..=bound);
            }
        }
        layer
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams {
    /// Radial basis to filter, `n_rbf -> hidden -> hidden`.
    pub filter1: DenseParams,
    pub filter2: DenseParams,
    /// Bias-free node projection applied before message passing.
    pub pre: DenseParams,
    /// Update MLP on aggregated messages, `hidden -> hidden -> hidden`.
    pub post1: DenseParams,
    pub post2: DenseParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    /// `n_species x hidden`; row 0 belongs to padding atoms and stays zero.
    pub embedding: Vec<f32>,
    pub blocks: Vec<BlockParams>,
    pub readout1: DenseParams,
    pub readout2: DenseParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Offset into the blob, in elements.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsSidecar {
    pub format: String,
    pub dtype: String,
    pub byte_order: String,
    pub config: ModelConfig,
    pub tensors: Vec<TensorEntry>,
}

impl ModelParams {
    /// All-zero weights with the shapes implied by `config`.
    pub fn zeros(config: ModelConfig) -> Result<Self, KernelError> {
        config.validate()?;
        let (f, r) = (config.hidden, config.n_rbf());
        let blocks = (0..config.n_blocks)
            .map(|_| BlockParams {
                filter1: DenseParams::zeros(r, f, true),
                filter2: DenseParams::zeros(f, f, true),
                pre: DenseParams::zeros(f, f, false),
                post1: DenseParams::zeros(f, f, true),
                post2: DenseParams::zeros(f, f, true),
            })
            .collect();
        let h2 = config.readout_hidden();
        Ok(ModelParams {
            embedding: vec![0.0; config.n_species * f],
            blocks,
            readout1: DenseParams::zeros(f, h2, true),
            readout2: DenseParams::zeros(h2, 1, true),
            config,
        })
    }

    /// Seeded initialisation: every weight and bias uniform in
    /// `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, embeddings uniform in `[-1, 1]`.
    pub fn init(config: ModelConfig) -> Result<Self, KernelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let (f, r) = (config.hidden, config.n_rbf());
        let mut embedding: Vec<f32> = (0..config.n_species * f)
            .map(|_| rng.gen_range(-1.0..=1.0))
            .collect();
        embedding[..f].fill(0.0);
        let blocks = (0..config.n_blocks)
            .map(|_| BlockParams {
                filter1: DenseParams::init(r, f, true, &mut rng),
                filter2: DenseParams::init(f, f, true, &mut rng),
                pre: DenseParams::init(f, f, false, &mut rng),
                post1: DenseParams::init(f, f, true, &mut rng),
                post2: DenseParams::init(f, f, true, &mut rng),
            })
            .collect();
        let h2 = config.readout_hidden();
        Ok(ModelParams {
            embedding,
            blocks,
            readout1: DenseParams::init(f, h2, true, &mut rng),
            readout2: DenseParams::init(h2, 1, true, &mut rng),
            config,
        })
    }

    fn tensors_mut(&mut self) -> Vec<(String, Vec<usize>, &mut Vec<f32>)> {
        let mut out = Vec::new();
        let (n_species, hidden) = (self.config.n_species, self.config.hidden);
        out.push(("embedding".to_string(), vec![n_species, hidden], &mut self.embedding));
        fn dense<'a>(out: &mut Vec<(String, Vec<usize>, &'a mut Vec<f32>)>, name: String, d: &'a mut DenseParams) {
            out.push((format!("{name}.weight"), vec![d.out_dim, d.in_dim], &mut d.weight));
            if let Some(b) = &mut d.bias {
                out.push((format!("{name}.bias"), vec![d.out_dim], b));
            }
        }
        for (k, b) in self.blocks.iter_mut().enumerate() {
            dense(&mut out, format!("block{k}.filter1"), &mut b.filter1);
            dense(&mut out, format!("block{k}.filter2"), &mut b.filter2);
            dense(&mut out, format!("block{k}.pre"), &mut b.pre);
            dense(&mut out, format!("block{k}.post1"), &mut b.post1);
            dense(&mut out, format!("block{k}.post2"), &mut b.post2);
        }
        dense(&mut out, "readout1".into(), &mut self.readout1);
        dense(&mut out, "readout2".into(), &mut self.readout2);
        out
    }

    /// Flat blob and the sidecar describing it.
    pub fn to_flat(&self) -> (Vec<f32>, WeightsSidecar) {
        let mut copy = self.clone();
        let mut blob = Vec::new();
        let mut tensors = Vec::new();
        for (name, shape, data) in copy.tensors_mut() {
            tensors.push(TensorEntry {
                name,
                shape,
                offset: blob.len(),
            });
            blob.extend_from_slice(data);
        }
        let sidecar = WeightsSidecar {
            format: WEIGHTS_FORMAT.into(),
            dtype: "f32".into(),
            byte_order: "little".into(),
            config: self.config.clone(),
            tensors,
        };
        (blob, sidecar)
    }

    pub fn from_flat(blob: &[f32], sidecar: &WeightsSidecar) -> Result<Self, KernelError> {
        if sidecar.format != WEIGHTS_FORMAT || sidecar.dtype != "f32" || sidecar.byte_order != "little" {
            return Err(KernelError::Params(format!(
                "unsupported weights format {}/{}/{}",
                sidecar.format, sidecar.dtype, sidecar.byte_order
            )));
        }
        let mut params = ModelParams::zeros(sidecar.config.clone())?;
        let expected = params.tensors_mut();
        if expected.len() != sidecar.tensors.len() {
            return Err(KernelError::Params(format!(
                "sidecar lists {} tensors, config implies {}",
                sidecar.tensors.len(),
                expected.len()
            )));
        }
        for ((name, shape, data), entry) in expected.into_iter().zip(&sidecar.tensors) {
            if name != entry.name || shape != entry.shape {
                return Err(KernelError::Params(format!(
                    "tensor {} {:?} does not match expected {name} {shape:?}",
                    entry.name, entry.shape
                )));
            }
            let src = blob
                .get(entry.offset..entry.offset + data.len())
                .ok_or_else(|| KernelError::Params(format!("blob too short for {name}")))?;
            data.copy_from_slice(src);
        }
        if params.embedding[..params.config.hidden].iter().any(|&x| x != 0.0) {
            return Err(KernelError::Params(
                "embedding row 0 is reserved for padding and must be zero".into(),
            ));
        }
        Ok(params)
    }

    /// Writes `<stem>.bin` and `<stem>.json`.
    pub fn save(&self, stem: impl AsRef<Path>) -> Result<(), KernelError> {
        let stem = stem.as_ref();
        let (blob, sidecar) = self.to_flat();
        let bytes: Vec<u8> = blob.iter().flat_map(|x| x.to_le_bytes()).collect();
        let bin = stem.with_extension("bin");
        let json = stem.with_extension("json");
        fs::write(&bin, bytes).map_err(|e| io_err(&bin, e))?;
        let text = serde_json::to_string_pretty(&sidecar).expect("sidecar serialises");
        fs::write(&json, text).map_err(|e| io_err(&json, e))
    }

    pub fn load(stem: impl AsRef<Path>) -> Result<Self, KernelError> {
        let stem = stem.as_ref();
        let bin = stem.with_extension("bin");
        let json = stem.with_extension("json");
        let text = fs::read_to_string(&json).map_err(|e| io_err(&json, e))?;
        let sidecar: WeightsSidecar =
            serde_json::from_str(&text).map_err(|e| KernelError::Params(e.to_string()))?;
        let bytes = fs::read(&bin).map_err(|e| io_err(&bin, e))?;
        if bytes.len() % 4 != 0 {
            return Err(KernelError::Params("blob length is not a multiple of 4".into()));
        }
        let blob: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_flat(&blob, &sidecar)
    }
}

fn io_err(path: &Path, source: std::io::Error) -> KernelError {
    KernelError::Io {
        path: path.display().to_string(),
        source,
    }
}
