use crate::moldata::distance;
use crate::packing::PackedBatch;

use super::{
    cosine_cutoff, gather, rbf_expand, scatter_add, shifted_softplus, DenseParams, ExactSum,
    KernelError, Matrix, ModelConfig, ModelParams, RadialBasis, Real,
};

/// `y = x W^T + b`, one row at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    /// `out x in`.
    pub weight: Matrix<T>,
    pub bias: Option<Vec<T>>,
}

impl<T: Real> Dense<T> {
    pub fn from_params(p: &DenseParams) -> Self {
        let w: Vec<T> = p.weight.iter().map(|&x| T::of(x as f64)).collect();
        Dense {
            weight: Matrix::from_vec(p.out_dim, p.in_dim, w).expect("weight shape checked on load"),
            bias: p
                .bias
                .as_ref()
                .map(|b| b.iter().map(|&x| T::of(x as f64)).collect()),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn forward(&self, x: &Matrix<T>) -> Result<Matrix<T>, KernelError> {
        if x.cols() != self.in_dim() {
            return Err(KernelError::Shape(format!(
                "dense layer expects {} inputs, got {:?}",
                self.in_dim(),
                x.shape()
            )));
        }
        let mut out = Matrix::zeros(x.rows(), self.out_dim());
        for r in 0..x.rows() {
            let xr = x.row(r);
            for o in 0..self.out_dim() {
                let mut acc = self.bias.as_ref().map_or(T::zero(), |b| b[o]);
                for (&w, &v) in self.weight.row(o).iter().zip(xr) {
                    acc = acc + w * v;
                }
                out.set(r, o, acc);
            }
        }
        Ok(out)
    }
}

fn mlp2<T: Real>(a: &Dense<T>, b: &Dense<T>, x: &Matrix<T>) -> Result<Matrix<T>, KernelError> {
    b.forward(&a.forward(x)?.map(shifted_softplus))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionBlock<T> {
    pub filter1: Dense<T>,
    pub filter2: Dense<T>,
    pub pre: Dense<T>,
    pub post1: Dense<T>,
    pub post2: Dense<T>,
}

/// Per-edge inputs shared by every interaction block.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFeatures<T> {
    pub sources: Vec<u32>,
    pub targets: Vec<u32>,
    /// `E x n_rbf` radial basis expansion of each distance.
    pub rbf: Matrix<T>,
    /// Cosine cutoff weight per edge; zero on masked edges.
    pub weight: Vec<T>,
}

impl<T: Real> EdgeFeatures<T> {
    /// Edges with `mask[e] == false` get weight zero whatever their distance.
    pub fn new(
        sources: &[u32],
        targets: &[u32],
        distances: &[T],
        mask: Option<&[bool]>,
        basis: &RadialBasis,
        r_cut: T,
    ) -> Result<Self, KernelError> {
        let e = sources.len();
        if targets.len() != e || distances.len() != e || mask.is_some_and(|m| m.len() != e) {
            return Err(KernelError::Shape(format!(
                "edge arrays disagree: {} sources, {} targets, {} distances",
                e,
                targets.len(),
                distances.len()
            )));
        }
        let mut rbf = Matrix::zeros(e, basis.n_rbf);
        let mut weight = Vec::with_capacity(e);
        for (k, &d) in distances.iter().enumerate() {
            rbf.row_mut(k).copy_from_slice(&rbf_expand(d, basis));
            let live = mask.is_none_or(|m| m[k]);
            weight.push(if live { cosine_cutoff(d, r_cut) } else { T::zero() });
        }
        Ok(EdgeFeatures {
            sources: sources.to_vec(),
            targets: targets.to_vec(),
            rbf,
            weight,
        })
    }

    pub fn num_edges(&self) -> usize {
        self.sources.len()
    }
}

/// One continuous-filter message-passing step with a residual update:
///
/// ```text
/// W_e  = filter2(ssp(filter1(rbf_e))) * cutoff_e
/// m_e  = pre(h)[src_e] * W_e
/// h'   = h + post2(ssp(post1(scatter_add(0, tgt, m))))
/// ```
pub fn interaction_block<T: Real>(
    h: &Matrix<T>,
    edges: &EdgeFeatures<T>,
    block: &InteractionBlock<T>,
) -> Result<Matrix<T>, KernelError> {
    let mut filter = mlp2(&block.filter1, &block.filter2, &edges.rbf)?;
    filter.scale_rows(&edges.weight);
    let x = block.pre.forward(h)?;
    let messages = gather(&x, &edges.sources)?.hadamard(&filter)?;
    let aggregate = scatter_add(&Matrix::zeros(h.rows(), x.cols()), &edges.targets, &messages)?;
    h.add(&mlp2(&block.post1, &block.post2, &aggregate)?)
}

/// SchNet weights in working precision.
#[derive(Debug, Clone, PartialEq)]
pub struct SchNet<T> {
    pub config: ModelConfig,
    pub basis: RadialBasis,
    /// `n_species x hidden`; row 0 is zero.
    pub embedding: Matrix<T>,
    pub blocks: Vec<InteractionBlock<T>>,
    pub readout1: Dense<T>,
    pub readout2: Dense<T>,
}

impl<T: Real> SchNet<T> {
    pub fn new(params: &ModelParams) -> Self {
        let c = &params.config;
        let emb: Vec<T> = params.embedding.iter().map(|&x| T::of(x as f64)).collect();
        SchNet {
            config: c.clone(),
            basis: c.basis(),
            embedding: Matrix::from_vec(c.n_species, c.hidden, emb).expect("embedding shape"),
            blocks: params
                .blocks
                .iter()
                .map(|b| InteractionBlock {
                    filter1: Dense::from_params(&b.filter1),
                    filter2: Dense::from_params(&b.filter2),
                    pre: Dense::from_params(&b.pre),
                    post1: Dense::from_params(&b.post1),
                    post2: Dense::from_params(&b.post2),
                })
                .collect(),
            readout1: Dense::from_params(&params.readout1),
            readout2: Dense::from_params(&params.readout2),
        }
    }

    pub fn embed(&self, atomic_numbers: &[u8]) -> Result<Matrix<T>, KernelError> {
        let rows = self.embedding.rows();
        let mut h = Matrix::zeros(atomic_numbers.len(), self.embedding.cols());
        for (i, &z) in atomic_numbers.iter().enumerate() {
            if z as usize >= rows {
                return Err(KernelError::UnknownSpecies { z, rows });
            }
            h.row_mut(i).copy_from_slice(self.embedding.row(z as usize));
        }
        Ok(h)
    }

    /// Per-atom scalar contributions.
    pub fn atom_contributions(&self, h: &Matrix<T>) -> Result<Vec<T>, KernelError> {
        Ok(mlp2(&self.readout1, &self.readout2, h)?.as_slice().to_vec())
    }
}

/// One prediction per real graph in `batch`, in pack order.
///
/// Distances come from the batch positions. Padding edges are given the
/// cutoff distance and a zero weight, padding atoms the zero embedding, and
/// slots with graph id -1 are dropped from the readout sum.
pub fn schnet_forward<T: Real>(batch: &PackedBatch, model: &SchNet<T>) -> Result<Vec<T>, KernelError> {
    let r_cut = model.config.r_cut;
    let [sources, targets] = &batch.edge_index;
    let slots = batch.num_slots();
    let distances: Vec<T> = sources
        .iter()
        .zip(targets)
        .zip(&batch.edge_mask)
        .map(|((&s, &t), &live)| {
            if !live {
                return Ok(T::of(r_cut));
            }
            let (s, t) = (s as usize, t as usize);
            if s >= slots || t >= slots {
                return Err(KernelError::OutOfBounds {
                    position: 0,
                    value: s.max(t),
                    rows: slots,
                });
            }
            Ok(T::of(distance(&batch.positions[s], &batch.positions[t])))
        })
        .collect::<Result<_, _>>()?;
    let edges = EdgeFeatures::new(
        sources,
        targets,
        &distances,
        Some(&batch.edge_mask),
        &model.basis,
        T::of(r_cut),
    )?;

    let mut h = model.embed(&batch.atomic_numbers)?;
    for block in &model.blocks {
        h = interaction_block(&h, &edges, block)?;
    }
    let contributions = model.atom_contributions(&h)?;

    let mut sums = vec![ExactSum::new(); batch.num_graphs()];
    for (&g, &c) in batch.graph_id_per_node.iter().zip(&contributions) {
        if g >= 0 {
            sums[g as usize].add(c);
        }
    }
    Ok(sums.iter().map(ExactSum::value).collect())
}
