//! Tape-based reverse-mode automatic differentiation over [`Matrix`] values.
//!
//! Values are computed eagerly when an op is recorded, so graph construction
//! may inspect intermediate values (used e.g. for max-shifted log-sum-exp
//! where the shift is a constant). `backward` replays the tape in reverse,
//! accumulating adjoints in a single fixed order.

use super::matrix::Matrix;
use super::NdError;

/// Handle to a node on a [`Tape`]. Only valid for the tape that created it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub(crate) usize);

/// Operation recorded for one node.
#[derive(Debug, Clone)]
pub enum OpKind {
    Input,
    Add(NodeId, NodeId),
    /// Elementwise product.
    Mul(NodeId, NodeId),
    MatMul(NodeId, NodeId),
    Exp(NodeId),
    Log(NodeId),
    Neg(NodeId),
    /// Full reduction to a 1x1 scalar.
    Sum(NodeId),
    Scale(NodeId, f64),
    SoftmaxRow(NodeId),
    Relu(NodeId),
    Transpose(NodeId),
    Slice { src: NodeId, row0: usize, rows: usize, col0: usize, cols: usize },
}

struct Node {
    op: OpKind,
    value: Matrix,
}

/// Adjoints produced by a backward pass, indexed by [`NodeId`].
#[derive(Debug)]
pub struct Adjoints {
    grads: Vec<Matrix>,
}

impl Adjoints {
    /// Adjoint of `id`: the derivative of the seeded objective with respect
    /// to that node's value.
    pub fn get(&self, id: NodeId) -> &Matrix {
        &self.grads[id.0]
    }
}

/// Recording tape. Nodes are appended in construction order, so every
/// node's parents precede it and reverse iteration is a valid topological
/// order for backpropagation.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Value of a node (populated at construction).
    pub fn value(&self, id: NodeId) -> &Matrix {
        &self.nodes[id.0].value
    }

    /// Returns the root's value. All node values are populated eagerly at
    /// recording time, so this is a lookup; it exists as the explicit
    /// "evaluate the graph" entry point.
    pub fn forward_eval(&self, root: NodeId) -> &Matrix {
        self.value(root)
    }

    fn push(&mut self, op: OpKind, value: Matrix) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node { op, value });
        id
    }

    fn check(&self, id: NodeId) -> Result<(), NdError> {
        if id.0 >= self.nodes.len() {
            return Err(NdError::ForeignNode { node: id.0 });
        }
        Ok(())
    }

    /// Leaf node holding a concrete value. Inputs are the only nodes that
    /// receive meaningful adjoints for gradient consumers.
    pub fn input(&mut self, value: Matrix) -> NodeId {
        self.push(OpKind::Input, value)
    }

    /// Constant leaf; identical to `input` on the tape, named for intent at
    /// call sites that never read its adjoint.
    pub fn constant(&mut self, value: Matrix) -> NodeId {
        self.push(OpKind::Input, value)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NdError> {
        self.check(a)?;
        self.check(b)?;
        let value = self.value(a).add(self.value(b))?;
        Ok(self.push(OpKind::Add(a, b), value))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NdError> {
        self.check(a)?;
        self.check(b)?;
        let value = self.value(a).elem_mul(self.value(b))?;
        Ok(self.push(OpKind::Mul(a, b), value))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NdError> {
        self.check(a)?;
        self.check(b)?;
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.push(OpKind::MatMul(a, b), value))
    }

    pub fn exp(&mut self, a: NodeId) -> Result<NodeId, NdError> {
        self.check(a)?;
        let value = self.value(a).map(f64::exp);
        if value.data().iter().any(|v| !v.is_finite()) {
            return Err(NdError::NonFinite { op: "exp", detail: "overflow".into() });
        }
        Ok(self.push(OpKind::Exp(a), value))
    }

    /// Natural log. Requires strictly positive entries; a violation is an
    /// error, never a NaN in the value stream.
    pub fn log(&mut self, a: NodeId) -> Result<NodeId, NdError> {
        self.check(a)?;
        if let Some(idx) = self.value(a).data().iter().position(|&v| v <= 0.0) {
            return Err(NdError::Domain {
                op: "log",
                detail: format!("entry {idx} is not strictly positive"),
            });
        }
        let value = self.value(a).map(f64::ln);
        Ok(self.push(OpKind::Log(a), value))
    }

    pub fn neg(&mut self, a: NodeId) -> Result<NodeId, NdError> {
        self.check(a)?;
        let value = self.value(a).neg();
        Ok(self.push(OpKind::Neg(a), value))
    }

    pub fn sum(&mut self, a: NodeId) -> Result<NodeId, NdError> {
        self.check(a)?;
        let value = Matrix::scalar(self.value(a).sum());
        Ok(self.push(OpKind::Sum(a), value))
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> Result<NodeId, NdError> {
        self.check(a)?;
        if !factor.is_finite() {
            return Err(NdError::NonFinite { op: "scale", detail: "factor".into() });
        }
        let value = self.value(a).scale(factor);
        Ok(self.push(OpKind::Scale(a, factor), value))
    }

    pub fn softmax_row(&mut self, a: NodeId) -> Result<NodeId, NdError> {
        self.check(a)?;
        let value = self.value(a).softmax_rows();
        Ok(self.push(OpKind::SoftmaxRow(a), value))
    }

    pub fn relu(&mut self, a: NodeId) -> Result<NodeId, NdError> {
        self.check(a)?;
        let value = self.value(a).map(|v| v.max(0.0));
        Ok(self.push(OpKind::Relu(a), value))
    }

    pub fn transpose(&mut self, a: NodeId) -> Result<NodeId, NdError> {
        self.check(a)?;
        let value = self.value(a).transpose();
        Ok(self.push(OpKind::Transpose(a), value))
    }

    pub fn slice(
        &mut self,
        src: NodeId,
        row0: usize,
        rows: usize,
        col0: usize,
        cols: usize,
    ) -> Result<NodeId, NdError> {
        self.check(src)?;
        let value = self.value(src).slice(row0, rows, col0, cols)?;
        Ok(self.push(OpKind::Slice { src, row0, rows, col0, cols }, value))
    }

    /// Reverse pass from a scalar root: adjoints equal the total derivative
    /// of the root with respect to each node.
    pub fn backward(&self, root: NodeId) -> Result<Adjoints, NdError> {
        self.check(root)?;
        let shape = self.value(root).shape();
        if shape != (1, 1) {
            return Err(NdError::NonScalarRoot { rows: shape.0, cols: shape.1 });
        }
        self.backward_seeded(&[(root, Matrix::scalar(1.0))])
    }

    /// Reverse pass from explicit seed adjoints. Computes the vector-Jacobian
    /// product `sum_k seed_k . d(node_k)/d(input)` for every input, which lets
    /// callers inject externally computed upstream gradients (e.g. a
    /// closed-form loss gradient seeded at a feature node).
    pub fn backward_seeded(&self, seeds: &[(NodeId, Matrix)]) -> Result<Adjoints, NdError> {
        let mut grads: Vec<Matrix> = self
            .nodes
            .iter()
            .map(|n| Matrix::zeros(n.value.rows(), n.value.cols()))
            .collect();
        for (id, seed) in seeds {
            self.check(*id)?;
            if seed.shape() != self.value(*id).shape() {
                return Err(NdError::ShapeMismatch {
                    op: "backward_seeded",
                    lhs: seed.shape(),
                    rhs: self.value(*id).shape(),
                });
            }
            grads[id.0].axpy(1.0, seed);
        }

        for idx in (0..self.nodes.len()).rev() {
            if grads[idx].max_abs() == 0.0 {
                continue;
            }
            let adj = grads[idx].clone();
            match self.nodes[idx].op {
                OpKind::Input => {}
                OpKind::Add(a, b) => {
                    grads[a.0].axpy(1.0, &adj);
                    grads[b.0].axpy(1.0, &adj);
                }
                OpKind::Mul(a, b) => {
                    let da = adj.elem_mul(self.value(b))?;
                    let db = adj.elem_mul(self.value(a))?;
                    grads[a.0].axpy(1.0, &da);
                    grads[b.0].axpy(1.0, &db);
                }
                OpKind::MatMul(a, b) => {
                    let da = adj.matmul_nt(self.value(b))?;
                    let db = self.value(a).matmul_tn(&adj)?;
                    grads[a.0].axpy(1.0, &da);
                    grads[b.0].axpy(1.0, &db);
                }
                OpKind::Exp(a) => {
                    let da = adj.elem_mul(&self.nodes[idx].value)?;
                    grads[a.0].axpy(1.0, &da);
                }
                OpKind::Log(a) => {
                    let inv = self.value(a).map(|v| 1.0 / v);
                    let da = adj.elem_mul(&inv)?;
                    grads[a.0].axpy(1.0, &da);
                }
                OpKind::Neg(a) => {
                    grads[a.0].axpy(-1.0, &adj);
                }
                OpKind::Sum(a) => {
                    let v = adj.item();
                    let shape = self.value(a).shape();
                    grads[a.0].axpy(1.0, &Matrix::filled(shape.0, shape.1, v));
                }
                OpKind::Scale(a, factor) => {
                    grads[a.0].axpy(factor, &adj);
                }
                OpKind::SoftmaxRow(a) => {
                    // d/dx softmax(x): s .* (adj - <adj, s>) per row.
                    let s = &self.nodes[idx].value;
                    let mut out = Vec::with_capacity(s.len());
                    for r in 0..s.rows() {
                        let srow = s.row(r);
                        let arow = adj.row(r);
                        let mut dot = 0.0;
                        for (sv, av) in srow.iter().zip(arow.iter()) {
                            dot += sv * av;
                        }
                        for (sv, av) in srow.iter().zip(arow.iter()) {
                            out.push(sv * (av - dot));
                        }
                    }
                    let da = Matrix::from_raw(s.rows(), s.cols(), out);
                    grads[a.0].axpy(1.0, &da);
                }
                OpKind::Relu(a) => {
                    let mask: Vec<f64> = self
                        .value(a)
                        .data()
                        .iter()
                        .zip(adj.data().iter())
                        .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
                        .collect();
                    let da = Matrix::from_raw(adj.rows(), adj.cols(), mask);
                    grads[a.0].axpy(1.0, &da);
                }
                OpKind::Transpose(a) => {
                    let da = adj.transpose();
                    grads[a.0].axpy(1.0, &da);
                }
                OpKind::Slice { src, row0, rows, col0, cols } => {
                    let target = &mut grads[src.0];
                    let stride = target.cols();
                    let dst = target.data_mut();
                    for r in 0..rows {
                        for c in 0..cols {
                            dst[(row0 + r) * stride + col0 + c] += adj.get(r, c);
                        }
                    }
                }
            }
        }
        Ok(Adjoints { grads })
    }
}

/// Central finite differences of a scalar function at `x`:
/// `(f(x + eps*e_ij) - f(x - eps*e_ij)) / (2 eps)` per entry.
///
/// This is the independent gradient oracle used to check both the tape's
/// backward pass and the hand-coded loss gradients.
pub fn finite_diff_grad<F>(mut f: F, x: &Matrix, eps: f64) -> Result<Matrix, NdError>
where
    F: FnMut(&Matrix) -> Result<f64, NdError>,
{
    if !(eps > 0.0) {
        return Err(NdError::Domain { op: "finite_diff_grad", detail: "eps must be > 0".into() });
    }
    let mut grad = Vec::with_capacity(x.len());
    for r in 0..x.rows() {
        for c in 0..x.cols() {
            let mut bump = |delta: f64| -> Result<f64, NdError> {
                let mut xp = x.clone();
                xp.data_mut()[r * x.cols() + c] += delta;
                let v = f(&xp)?;
                if !v.is_finite() {
                    return Err(NdError::NonFinite {
                        op: "finite_diff_grad",
                        detail: format!("f at perturbed entry ({r},{c})"),
                    });
                }
                Ok(v)
            };
            let plus = bump(eps)?;
            let minus = bump(-eps)?;
            grad.push((plus - minus) / (2.0 * eps));
        }
    }
    Ok(Matrix::from_raw(x.rows(), x.cols(), grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_is_elementwise() {
        let mut t = Tape::new();
        let a = t.input(Matrix::new(1, 2, vec![1.0, 2.0]).unwrap());
        let b = t.input(Matrix::new(1, 2, vec![3.0, 4.0]).unwrap());
        let c = t.add(a, b).unwrap();
        assert_eq!(t.forward_eval(c).data(), &[4.0, 6.0]);
    }

    #[test]
    fn backward_of_sum_is_all_ones() {
        let mut t = Tape::new();
        let x = t.input(Matrix::from_fn(2, 3, |r, c| (r + c) as f64));
        let s = t.sum(x).unwrap();
        let adj = t.backward(s).unwrap();
        assert_eq!(adj.get(x), &Matrix::ones(2, 3));
    }

    #[test]
    fn backward_of_sum_exp_at_zero_is_one() {
        let mut t = Tape::new();
        let x = t.input(Matrix::scalar(0.0));
        let e = t.exp(x).unwrap();
        let s = t.sum(e).unwrap();
        let adj = t.backward(s).unwrap();
        assert!((adj.get(x).item() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn backward_requires_scalar_root() {
        let mut t = Tape::new();
        let x = t.input(Matrix::zeros(2, 2));
        let err = t.backward(x).unwrap_err();
        assert!(matches!(err, NdError::NonScalarRoot { rows: 2, cols: 2 }));
    }

    #[test]
    fn log_rejects_nonpositive_input() {
        let mut t = Tape::new();
        let x = t.input(Matrix::new(1, 2, vec![1.0, 0.0]).unwrap());
        assert!(matches!(t.log(x), Err(NdError::Domain { .. })));
    }

    #[test]
    fn finite_diff_of_sum_of_squares() {
        let x = Matrix::scalar(3.0);
        let g = finite_diff_grad(
            |m| Ok(m.data().iter().map(|v| v * v).sum()),
            &x,
            1e-6,
        )
        .unwrap();
        assert!((g.item() - 6.0).abs() < 1e-7);
    }

    #[test]
    fn finite_diff_of_constant_is_zero() {
        let x = Matrix::from_fn(2, 2, |r, c| (r * 2 + c) as f64);
        let g = finite_diff_grad(|_| Ok(42.0), &x, 1e-6).unwrap();
        assert!(g.approx_eq(&Matrix::zeros(2, 2), 1e-12));
    }

    #[test]
    fn slice_backward_scatters_into_source() {
        let mut t = Tape::new();
        let x = t.input(Matrix::from_fn(3, 3, |r, c| (r * 3 + c) as f64));
        let s = t.slice(x, 1, 2, 0, 2).unwrap();
        let total = t.sum(s).unwrap();
        let adj = t.backward(total).unwrap();
        let expected = Matrix::new(
            3,
            3,
            vec![0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0],
        )
        .unwrap();
        assert_eq!(adj.get(x), &expected);
    }

    #[test]
    fn forward_eval_is_bit_deterministic() {
        let build = || {
            let mut t = Tape::new();
            let x = t.input(Matrix::from_fn(4, 4, |r, c| ((r * 13 + c * 7) % 11) as f64 * 0.17));
            let y = t.softmax_row(x).unwrap();
            let z = t.exp(y).unwrap();
            let s = t.sum(z).unwrap();
            t.forward_eval(s).item()
        };
        assert_eq!(build().to_bits(), build().to_bits());
    }
}
