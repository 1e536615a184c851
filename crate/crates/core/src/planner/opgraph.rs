//! A small tensor op graph and the broadcast-scatter fusion rewrite.
//!
//! Frameworks often express a row scatter in elementwise form: the row index
//! vector is broadcast to an `I x N` index matrix and every element is
//! scattered on its own. When the index matrix comes straight from a
//! broadcast every column carries the same row index, so the scatter can use
//! the vector directly and the broadcast node disappears.

use std::collections::BTreeMap;

use super::PlanError;
use crate::kernels::{gather, scatter_add, ExactSum, Matrix};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScatterForm {
    /// Index is an `I x N` matrix; element `(r, c)` goes to `(index[r][c], c)`.
    Elementwise,
    /// Index is a length-`I` vector; row `r` goes to row `index[r]`.
    Vectorized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementOp {
    Add,
    Mul,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OpNode {
    Input { name: String, rows: usize, cols: usize },
    /// Index vector whose entries are `< bound`.
    IndexInput { name: String, len: usize, bound: usize },
    /// Repeats each index across `cols` columns.
    Broadcast { index: NodeId, cols: usize },
    Gather { data: NodeId, index: NodeId },
    ScatterAdd { base: NodeId, index: NodeId, values: NodeId, form: ScatterForm },
    ElementWise { op: ElementOp, lhs: NodeId, rhs: NodeId },
}

impl OpNode {
    pub fn operands(&self) -> Vec<NodeId> {
        match *self {
            OpNode::Input { .. } | OpNode::IndexInput { .. } => vec![],
            OpNode::Broadcast { index, .. } => vec![index],
            OpNode::Gather { data, index } => vec![data, index],
            OpNode::ScatterAdd { base, index, values, .. } => vec![base, index, values],
            OpNode::ElementWise { lhs, rhs, .. } => vec![lhs, rhs],
        }
    }

    fn remap(&self, f: impl Fn(NodeId) -> NodeId) -> OpNode {
        match self.clone() {
            n @ (OpNode::Input { .. } | OpNode::IndexInput { .. }) => n,
            OpNode::Broadcast { index, cols } => OpNode::Broadcast { index: f(index), cols },
            OpNode::Gather { data, index } => OpNode::Gather { data: f(data), index: f(index) },
            OpNode::ScatterAdd { base, index, values, form } => OpNode::ScatterAdd {
                base: f(base),
                index: f(index),
                values: f(values),
                form,
            },
            OpNode::ElementWise { op, lhs, rhs } => OpNode::ElementWise { op, lhs: f(lhs), rhs: f(rhs) },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorShape {
    Matrix { rows: usize, cols: usize },
    Index { len: usize, bound: usize },
    IndexMatrix { rows: usize, cols: usize, bound: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Matrix(Matrix<f64>),
    Index(Vec<u32>),
    IndexMatrix { rows: usize, cols: usize, data: Vec<u32> },
}

/// Nodes are stored in topological order: operands always precede users.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OpGraph {
    nodes: Vec<OpNode>,
    shapes: Vec<TensorShape>,
    outputs: Vec<NodeId>,
}

fn graph_err(msg: impl Into<String>) -> PlanError {
    PlanError::Graph(msg.into())
}

impl OpGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn nodes(&self) -> &[OpNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn shape(&self, id: NodeId) -> TensorShape {
        self.shapes[id]
    }

    pub fn outputs(&self) -> &[NodeId] {
        &self.outputs
    }

    /// Data-flow edges `(operand, user)`.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.nodes
            .iter()
            .enumerate()
            .flat_map(|(user, n)| n.operands().into_iter().map(move |op| (op, user)))
            .collect()
    }

    pub fn input(&mut self, name: &str, rows: usize, cols: usize) -> NodeId {
        self.push(
            OpNode::Input { name: name.into(), rows, cols },
            TensorShape::Matrix { rows, cols },
        )
    }

    pub fn index_input(&mut self, name: &str, len: usize, bound: usize) -> NodeId {
        self.push(
            OpNode::IndexInput { name: name.into(), len, bound },
            TensorShape::Index { len, bound },
        )
    }

    pub fn broadcast(&mut self, index: NodeId, cols: usize) -> Result<NodeId, PlanError> {
        match self.get_shape(index)? {
            TensorShape::Index { len, bound } => Ok(self.push(
                OpNode::Broadcast { index, cols },
                TensorShape::IndexMatrix { rows: len, cols, bound },
            )),
            s => Err(graph_err(format!("broadcast needs an index vector, got {s:?}"))),
        }
    }

    pub fn gather(&mut self, data: NodeId, index: NodeId) -> Result<NodeId, PlanError> {
        match (self.get_shape(data)?, self.get_shape(index)?) {
            (TensorShape::Matrix { rows, cols }, TensorShape::Index { len, bound }) if bound <= rows => {
                Ok(self.push(OpNode::Gather { data, index }, TensorShape::Matrix { rows: len, cols }))
            }
            (d, i) => Err(graph_err(format!("gather of {d:?} by {i:?}"))),
        }
    }

    /// The form follows the index operand: a vector gives a row scatter, an
    /// index matrix an elementwise one.
    pub fn scatter_add(&mut self, base: NodeId, index: NodeId, values: NodeId) -> Result<NodeId, PlanError> {
        let (b, i, v) = (self.get_shape(base)?, self.get_shape(index)?, self.get_shape(values)?);
        let TensorShape::Matrix { rows, cols } = b else {
            return Err(graph_err(format!("scatter base must be a matrix, got {b:?}")));
        };
        let form = match (i, v) {
            (TensorShape::Index { len, bound }, TensorShape::Matrix { rows: vr, cols: vc })
                if len == vr && vc == cols && bound <= rows =>
            {
                ScatterForm::Vectorized
            }
            (
                TensorShape::IndexMatrix { rows: ir, cols: ic, bound },
                TensorShape::Matrix { rows: vr, cols: vc },
            ) if ir == vr && ic == vc && vc == cols && bound <= rows => ScatterForm::Elementwise,
            _ => return Err(graph_err(format!("scatter of {v:?} by {i:?} into {b:?}"))),
        };
        Ok(self.push(OpNode::ScatterAdd { base, index, values, form }, b))
    }

    pub fn elementwise(&mut self, op: ElementOp, lhs: NodeId, rhs: NodeId) -> Result<NodeId, PlanError> {
        let (l, r) = (self.get_shape(lhs)?, self.get_shape(rhs)?);
        match l {
            TensorShape::Matrix { .. } if l == r => Ok(self.push(OpNode::ElementWise { op, lhs, rhs }, l)),
            _ => Err(graph_err(format!("elementwise on {l:?} and {r:?}"))),
        }
    }

    pub fn mark_output(&mut self, id: NodeId) -> Result<(), PlanError> {
        self.get_shape(id)?;
        self.outputs.push(id);
        Ok(())
    }

    fn get_shape(&self, id: NodeId) -> Result<TensorShape, PlanError> {
        self.shapes
            .get(id)
            .copied()
            .ok_or_else(|| graph_err(format!("no node {id}")))
    }

    fn push(&mut self, node: OpNode, shape: TensorShape) -> NodeId {
        self.nodes.push(node);
        self.shapes.push(shape);
        self.nodes.len() - 1
    }

    /// Evaluates every node and returns the marked outputs.
    pub fn evaluate(&self, inputs: &BTreeMap<String, Value>) -> Result<Vec<Value>, PlanError> {
        let mut values: Vec<Value> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let v = match node {
                OpNode::Input { name, rows, cols } => match inputs.get(name) {
                    Some(Value::Matrix(m)) if m.shape() == (*rows, *cols) => Value::Matrix(m.clone()),
                    other => return Err(graph_err(format!("input {name}: expected {rows}x{cols} matrix, got {other:?}"))),
                },
                OpNode::IndexInput { name, len, bound } => match inputs.get(name) {
                    Some(Value::Index(ix)) if ix.len() == *len && ix.iter().all(|&i| (i as usize) < *bound) => {
                        Value::Index(ix.clone())
                    }
                    other => return Err(graph_err(format!("input {name}: expected {len} indices below {bound}, got {other:?}"))),
                },
                OpNode::Broadcast { index, cols } => {
                    let Value::Index(ix) = &values[*index] else { unreachable!("shape checked") };
                    Value::IndexMatrix {
                        rows: ix.len(),
                        cols: *cols,
                        data: ix.iter().flat_map(|&i| std::iter::repeat_n(i, *cols)).collect(),
                    }
                }
                OpNode::Gather { data, index } => {
                    let (Value::Matrix(a), Value::Index(ix)) = (&values[*data], &values[*index]) else {
                        unreachable!("shape checked")
                    };
                    Value::Matrix(gather(a, ix)?)
                }
                OpNode::ScatterAdd { base, index, values: v, form } => {
                    let (Value::Matrix(a), Value::Matrix(vals)) = (&values[*base], &values[*v]) else {
                        unreachable!("shape checked")
                    };
                    match (form, &values[*index]) {
                        (ScatterForm::Vectorized, Value::Index(ix)) => Value::Matrix(scatter_add(a, ix, vals)?),
                        (ScatterForm::Elementwise, Value::IndexMatrix { data, .. }) => {
                            Value::Matrix(scatter_elementwise(a, data, vals))
                        }
                        _ => unreachable!("shape checked"),
                    }
                }
                OpNode::ElementWise { op, lhs, rhs } => {
                    let (Value::Matrix(l), Value::Matrix(r)) = (&values[*lhs], &values[*rhs]) else {
                        unreachable!("shape checked")
                    };
                    Value::Matrix(match op {
                        ElementOp::Add => l.add(r)?,
                        ElementOp::Mul => l.hadamard(r)?,
                    })
                }
            };
            values.push(v);
        }
        Ok(self.outputs.iter().map(|&o| values[o].clone()).collect())
    }
}

/// Element `(r, c)` of `values` added into `(index[r * cols + c], c)`, each
/// output element summed exactly like the row scatter.
fn scatter_elementwise(a: &Matrix<f64>, index: &[u32], values: &Matrix<f64>) -> Matrix<f64> {
    let cols = a.cols();
    let mut acc: Vec<Option<ExactSum<f64>>> = vec![None; a.rows() * cols];
    for r in 0..values.rows() {
        for c in 0..cols {
            let m = index[r * cols + c] as usize;
            acc[m * cols + c]
                .get_or_insert_with(|| [a.get(m, c)].into_iter().collect())
                .add(values.get(r, c));
        }
    }
    Matrix::from_fn(a.rows(), cols, |m, c| {
        acc[m * cols + c].as_ref().map_or(a.get(m, c), ExactSum::value)
    })
}

/// Rewrites every broadcast whose only users are elementwise scatters
/// (and which is not itself an output) into vectorised scatters on the
/// original index vector, dropping the broadcast. Other nodes are copied
/// unchanged.
pub fn fuse_broadcast_scatter(g: &OpGraph) -> OpGraph {
    let mut users: Vec<Vec<NodeId>> = vec![Vec::new(); g.len()];
    for (op, user) in g.edges() {
        users[op].push(user);
    }
    let fusible: Vec<bool> = (0..g.len())
        .map(|id| {
            matches!(g.nodes[id], OpNode::Broadcast { .. })
                && !g.outputs.contains(&id)
                && !users[id].is_empty()
                && users[id].iter().all(|&u| {
                    matches!(g.nodes[u], OpNode::ScatterAdd { index, form: ScatterForm::Elementwise, .. } if index == id)
                })
        })
        .collect();
    if !fusible.contains(&true) {
        return g.clone();
    }

    let mut out = OpGraph::new();
    let mut map: Vec<NodeId> = vec![usize::MAX; g.len()];
    for (id, node) in g.nodes.iter().enumerate() {
        if fusible[id] {
            continue;
        }
        let rewritten = match node {
            OpNode::ScatterAdd { base, index, values, form: ScatterForm::Elementwise } if fusible[*index] => {
                let OpNode::Broadcast { index: vector, .. } = g.nodes[*index] else { unreachable!() };
                OpNode::ScatterAdd {
                    base: map[*base],
                    index: map[vector],
                    values: map[*values],
                    form: ScatterForm::Vectorized,
                }
            }
            other => other.remap(|x| map[x]),
        };
        map[id] = out.push(rewritten, g.shapes[id]);
    }
    out.outputs = g.outputs.iter().map(|&o| map[o]).collect();
    out
}
