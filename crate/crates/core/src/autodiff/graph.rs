use std::collections::{BTreeMap, HashMap};

use super::kernels::{self, ConvDims};
use super::AutodiffError;
use crate::geometry::kernels as geo;
use crate::tensor::Tensor;

/// Lower clamp applied to `log` arguments and division denominators.
pub const STABILITY_EPS: f64 = 1e-12;

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Input(String),
    Constant(Tensor),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    Neg(Var),
    Scale(Var, f64),
    Offset(Var, f64),
    Pow(Var, f64),
    Exp(Var),
    Log(Var),
    Abs(Var),
    Sigmoid(Var),
    Tanh(Var),
    Softplus(Var),
    LeakyRelu(Var, f64),
    Clamp(Var, f64, f64),
    Softmax(Var),
    Sum(Var, Option<usize>),
    Mean(Var, Option<usize>),
    Max(Var, Option<usize>),
    Concat(Vec<Var>, usize),
    Reshape(Var, Vec<isize>),
    Slice {
        x: Var,
        axis: usize,
        start: usize,
        end: usize,
    },
    Reverse(Var, usize),
    Conv1d {
        x: Var,
        kernel: Var,
        stride: usize,
    },
    ConvTranspose1d {
        x: Var,
        kernel: Var,
        stride: usize,
    },
    RationalBezier {
        p: Var,
        w: Var,
        u: Var,
    },
    Kumaraswamy {
        a: Var,
        b: Var,
        c: Var,
        grid: Vec<f64>,
    },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Input(_) => "input",
            Op::Constant(_) => "constant",
            Op::MatMul(..) => "matmul",
            Op::Add(..) => "add",
            Op::Sub(..) => "subtract",
            Op::Mul(..) => "multiply",
            Op::Div(..) => "divide",
            Op::Neg(_) => "negate",
            Op::Scale(..) => "scale",
            Op::Offset(..) => "offset",
            Op::Pow(..) => "power",
            Op::Exp(_) => "exp",
            Op::Log(_) => "log",
            Op::Abs(_) => "abs",
            Op::Sigmoid(_) => "sigmoid",
            Op::Tanh(_) => "tanh",
            Op::Softplus(_) => "softplus",
            Op::LeakyRelu(..) => "leaky_relu",
            Op::Clamp(..) => "clamp",
            Op::Softmax(_) => "softmax",
            Op::Sum(..) => "sum",
            Op::Mean(..) => "mean",
            Op::Max(..) => "max",
            Op::Concat(..) => "concat",
            Op::Reshape(..) => "reshape",
            Op::Slice { .. } => "slice",
            Op::Reverse(..) => "reverse",
            Op::Conv1d { .. } => "conv1d",
            Op::ConvTranspose1d { .. } => "conv_transpose1d",
            Op::RationalBezier { .. } => "rational_bezier",
            Op::Kumaraswamy { .. } => "kumaraswamy",
        }
    }

    fn inputs(&self) -> Vec<Var> {
        match self {
            Op::Input(_) | Op::Constant(_) => Vec::new(),
            Op::MatMul(a, b) | Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::Div(a, b) => vec![*a, *b],
            Op::Neg(x)
            | Op::Scale(x, _)
            | Op::Offset(x, _)
            | Op::Pow(x, _)
            | Op::Exp(x)
            | Op::Log(x)
            | Op::Abs(x)
            | Op::Sigmoid(x)
            | Op::Tanh(x)
            | Op::Softplus(x)
            | Op::LeakyRelu(x, _)
            | Op::Clamp(x, _, _)
            | Op::Softmax(x)
            | Op::Sum(x, _)
            | Op::Mean(x, _)
            | Op::Max(x, _)
            | Op::Reshape(x, _)
            | Op::Reverse(x, _)
            | Op::Slice { x, .. } => vec![*x],
            Op::Concat(xs, _) => xs.clone(),
            Op::Conv1d { x, kernel, .. } | Op::ConvTranspose1d { x, kernel, .. } => vec![*x, *kernel],
            Op::RationalBezier { p, w, u } => vec![*p, *w, *u],
            Op::Kumaraswamy { a, b, c, .. } => vec![*a, *b, *c],
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    label: Option<String>,
}

/// Named input tensors for one evaluation.
#[derive(Debug, Default, Clone)]
pub struct Bindings<'a> {
    map: HashMap<String, &'a Tensor>,
}

impl<'a> Bindings<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, name: impl Into<String>, value: &'a Tensor) -> &mut Self {
        self.map.insert(name.into(), value);
        self
    }

    pub fn with(mut self, name: impl Into<String>, value: &'a Tensor) -> Self {
        self.bind(name, value);
        self
    }

    pub fn get(&self, name: &str) -> Option<&'a Tensor> {
        self.map.get(name).copied()
    }
}

impl<'a, S: Into<String>> FromIterator<(S, &'a Tensor)> for Bindings<'a> {
    fn from_iter<I: IntoIterator<Item = (S, &'a Tensor)>>(iter: I) -> Self {
        Self {
            map: iter.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }
}

/// Forward values cached for a backward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    values: Vec<Option<Tensor>>,
}

impl Trace {
    pub fn get(&self, var: Var) -> Option<&Tensor> {
        self.values.get(var.0).and_then(Option::as_ref)
    }

    /// Value of an evaluated node.
    ///
    /// Panics if `var` was not among the requested outputs or their ancestors.
    pub fn value(&self, var: Var) -> &Tensor {
        self.get(var).expect("node was not evaluated in this trace")
    }
}

/// Gradients keyed by input name.
pub type Gradients = BTreeMap<String, Tensor>;

/// A static computation graph over named inputs.
///
/// Nodes are appended in topological order; inputs are bound by name at
/// evaluation time, so one graph serves every batch and parameter snapshot.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    inputs: HashMap<String, Var>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op) -> Var {
        self.nodes.push(Node { op, label: None });
        Var(self.nodes.len() - 1)
    }

    /// Attaches a human-readable label used in error messages.
    pub fn label(&mut self, var: Var, label: impl Into<String>) -> Var {
        self.nodes[var.0].label = Some(label.into());
        var
    }

    /// A free input; requesting the same name twice returns the same node.
    pub fn input(&mut self, name: &str) -> Var {
        if let Some(&v) = self.inputs.get(name) {
            return v;
        }
        let v = self.push(Op::Input(name.to_string()));
        self.inputs.insert(name.to_string(), v);
        v
    }

    pub fn input_var(&self, name: &str) -> Option<Var> {
        self.inputs.get(name).copied()
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(Op::Constant(value))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        self.push(Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.push(Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.push(Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.push(Op::Mul(a, b))
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        self.push(Op::Div(a, b))
    }

    pub fn neg(&mut self, x: Var) -> Var {
        self.push(Op::Neg(x))
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Var {
        self.push(Op::Scale(x, factor))
    }

    pub fn offset(&mut self, x: Var, shift: f64) -> Var {
        self.push(Op::Offset(x, shift))
    }

    pub fn pow(&mut self, x: Var, exponent: f64) -> Var {
        self.push(Op::Pow(x, exponent))
    }

    pub fn exp(&mut self, x: Var) -> Var {
        self.push(Op::Exp(x))
    }

    pub fn log(&mut self, x: Var) -> Var {
        self.push(Op::Log(x))
    }

    pub fn abs(&mut self, x: Var) -> Var {
        self.push(Op::Abs(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.push(Op::Sigmoid(x))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.push(Op::Tanh(x))
    }

    pub fn softplus(&mut self, x: Var) -> Var {
        self.push(Op::Softplus(x))
    }

    pub fn leaky_relu(&mut self, x: Var, alpha: f64) -> Var {
        self.push(Op::LeakyRelu(x, alpha))
    }

    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Var {
        self.push(Op::Clamp(x, lo, hi))
    }

    /// Softmax over the last axis.
    pub fn softmax(&mut self, x: Var) -> Var {
        self.push(Op::Softmax(x))
    }

    /// Sum of all elements.
    pub fn sum(&mut self, x: Var) -> Var {
        self.push(Op::Sum(x, None))
    }

    /// Sum along `axis`, which is removed from the shape.
    pub fn sum_axis(&mut self, x: Var, axis: usize) -> Var {
        self.push(Op::Sum(x, Some(axis)))
    }

    pub fn mean(&mut self, x: Var) -> Var {
        self.push(Op::Mean(x, None))
    }

    pub fn mean_axis(&mut self, x: Var, axis: usize) -> Var {
        self.push(Op::Mean(x, Some(axis)))
    }

    pub fn max(&mut self, x: Var) -> Var {
        self.push(Op::Max(x, None))
    }

    pub fn max_axis(&mut self, x: Var, axis: usize) -> Var {
        self.push(Op::Max(x, Some(axis)))
    }

    pub fn concat(&mut self, xs: &[Var], axis: usize) -> Var {
        self.push(Op::Concat(xs.to_vec(), axis))
    }

    /// Reshape; at most one dimension may be `-1` and is inferred.
    pub fn reshape(&mut self, x: Var, shape: &[isize]) -> Var {
        self.push(Op::Reshape(x, shape.to_vec()))
    }

    /// Elements `start..end` along `axis`.
    pub fn slice(&mut self, x: Var, axis: usize, start: usize, end: usize) -> Var {
        self.push(Op::Slice { x, axis, start, end })
    }

    pub fn reverse(&mut self, x: Var, axis: usize) -> Var {
        self.push(Op::Reverse(x, axis))
    }

    /// Strided 1-D cross-correlation. `x` is `[batch, length, in]` (or
    /// `[length, in]`), `kernel` is `[taps, in, out]`; zero padding keeps the
    /// output length at `ceil(length / stride)`.
    pub fn conv1d(&mut self, x: Var, kernel: Var, stride: usize) -> Var {
        self.push(Op::Conv1d { x, kernel, stride })
    }

    /// Transposed 1-D convolution producing `length * stride` positions.
    pub fn conv_transpose1d(&mut self, x: Var, kernel: Var, stride: usize) -> Var {
        self.push(Op::ConvTranspose1d { x, kernel, stride })
    }

    /// Rational Bézier sampling: `p [B, n+1, 2]`, `w [B, n+1]`, `u [B, m+1]`
    /// → `[B, m+1, 2]`.
    pub fn rational_bezier(&mut self, p: Var, w: Var, u: Var) -> Var {
        self.push(Op::RationalBezier { p, w, u })
    }

    /// Kumaraswamy mixture warp of the fixed `grid`: `a, b, c [B, K]` → `[B, grid.len()]`.
    pub fn kumaraswamy(&mut self, a: Var, b: Var, c: Var, grid: Vec<f64>) -> Var {
        self.push(Op::Kumaraswamy { a, b, c, grid })
    }

    fn describe(&self, var: Var) -> String {
        let node = &self.nodes[var.0];
        match &node.label {
            Some(l) => format!("#{} {} ({l})", var.0, node.op.name()),
            None => format!("#{} {}", var.0, node.op.name()),
        }
    }

    fn shape_error(&self, var: Var, detail: impl Into<String>) -> AutodiffError {
        AutodiffError::ShapeMismatch {
            node: self.describe(var),
            detail: detail.into(),
        }
    }

    /// Evaluates `outputs` and every node they depend on.
    pub fn forward(&self, bindings: &Bindings<'_>, outputs: &[Var]) -> Result<Trace, AutodiffError> {
        let mut needed = vec![false; self.nodes.len()];
        for &o in outputs {
            needed[o.0] = true;
        }
        for i in (0..self.nodes.len()).rev() {
            if needed[i] {
                for v in self.nodes[i].op.inputs() {
                    needed[v.0] = true;
                }
            }
        }
        let mut values: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        for i in 0..self.nodes.len() {
            let node = &self.nodes[i];
            if let Op::Input(name) = &node.op {
                match bindings.get(name) {
                    Some(t) => values[i] = Some(t.clone()),
                    None if needed[i] => return Err(AutodiffError::Unbound(name.clone())),
                    None => {}
                }
                continue;
            }
            if !needed[i] {
                continue;
            }
            let out = self.eval_node(Var(i), &values)?;
            values[i] = Some(out);
        }
        Ok(Trace { values })
    }

    /// Forward value of a single output.
    pub fn evaluate(&self, output: Var, bindings: &Bindings<'_>) -> Result<Tensor, AutodiffError> {
        let mut trace = self.forward(bindings, &[output])?;
        Ok(trace.values[output.0].take().expect("output evaluated"))
    }

    /// Gradient of the scalar `output` with respect to the named inputs.
    pub fn gradient(&self, output: Var, bindings: &Bindings<'_>, wrt: &[&str]) -> Result<Gradients, AutodiffError> {
        let trace = self.forward(bindings, &[output])?;
        self.backward(&trace, output, wrt)
    }

    /// Reverse pass over a trace produced by [`Graph::forward`].
    pub fn backward(&self, trace: &Trace, output: Var, wrt: &[&str]) -> Result<Gradients, AutodiffError> {
        let out_value = trace
            .get(output)
            .ok_or_else(|| AutodiffError::NotEvaluated(self.describe(output)))?;
        if out_value.numel() != 1 {
            return Err(AutodiffError::NonScalarOutput(out_value.shape().to_vec()));
        }
        let mut targets = Vec::with_capacity(wrt.len());
        for name in wrt {
            let var = self
                .input_var(name)
                .ok_or_else(|| AutodiffError::UnknownInput(name.to_string()))?;
            if trace.get(var).is_none() {
                return Err(AutodiffError::Unbound(name.to_string()));
            }
            targets.push((name.to_string(), var));
        }

        let mut requires = vec![false; self.nodes.len()];
        for (_, v) in &targets {
            requires[v.0] = true;
        }
        for i in 0..=output.0 {
            if !requires[i] && self.nodes[i].op.inputs().iter().any(|v| requires[v.0]) {
                requires[i] = true;
            }
        }

        let mut adjoints: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        adjoints[output.0] = Some(vec![1.0]);
        for i in (0..=output.0).rev() {
            if !requires[i] || matches!(self.nodes[i].op, Op::Input(_) | Op::Constant(_)) {
                continue;
            }
            let Some(g) = adjoints[i].take() else { continue };
            let contributions = self.adjoint(Var(i), &g, trace, &requires);
            for (v, grad) in contributions {
                match &mut adjoints[v.0] {
                    Some(acc) => acc.iter_mut().zip(&grad).for_each(|(a, b)| *a += b),
                    slot @ None => *slot = Some(grad),
                }
            }
        }

        let mut grads = Gradients::new();
        for (name, var) in targets {
            let shape = trace.value(var).shape().to_vec();
            let data = adjoints[var.0]
                .take()
                .unwrap_or_else(|| vec![0.0; shape.iter().product()]);
            grads.insert(name, Tensor::from_parts(shape, data));
        }
        Ok(grads)
    }

    fn eval_node(&self, var: Var, values: &[Option<Tensor>]) -> Result<Tensor, AutodiffError> {
        let val = |v: &Var| values[v.0].as_ref().expect("inputs evaluated before use");
        let op = &self.nodes[var.0].op;
        let out = match op {
            Op::Input(_) => unreachable!("inputs are bound, not evaluated"),
            Op::Constant(t) => t.clone(),
            Op::MatMul(a, b) => {
                let (a, b) = (val(a), val(b));
                if a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0] {
                    return Err(self.shape_error(var, format!("cannot multiply {:?} by {:?}", a.shape(), b.shape())));
                }
                let (m, k, n) = (a.shape()[0], a.shape()[1], b.shape()[1]);
                Tensor::from_parts(vec![m, n], kernels::matmul(a.data(), b.data(), m, k, n))
            }
            Op::Add(a, b) => self.binary(var, val(a), val(b), |x, y| x + y)?,
            Op::Sub(a, b) => self.binary(var, val(a), val(b), |x, y| x - y)?,
            Op::Mul(a, b) => self.binary(var, val(a), val(b), |x, y| x * y)?,
            Op::Div(a, b) => self.binary(var, val(a), val(b), |x, y| x / clamp_denominator(y))?,
            Op::Neg(x) => val(x).map(|v| -v),
            Op::Scale(x, s) => val(x).map(|v| v * s),
            Op::Offset(x, s) => val(x).map(|v| v + s),
            Op::Pow(x, p) => val(x).map(|v| v.powf(*p)),
            Op::Exp(x) => val(x).map(f64::exp),
            Op::Log(x) => val(x).map(|v| v.max(STABILITY_EPS).ln()),
            Op::Abs(x) => val(x).map(f64::abs),
            Op::Sigmoid(x) => val(x).map(kernels::sigmoid),
            Op::Tanh(x) => val(x).map(f64::tanh),
            Op::Softplus(x) => val(x).map(kernels::softplus),
            Op::LeakyRelu(x, alpha) => val(x).map(|v| if v > 0.0 { v } else { alpha * v }),
            Op::Clamp(x, lo, hi) => val(x).map(|v| v.clamp(*lo, *hi)),
            Op::Softmax(x) => {
                let x = val(x);
                let n = *x.shape().last().unwrap_or(&1);
                let mut data = x.data().to_vec();
                for row in data.chunks_exact_mut(n) {
                    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let mut total = 0.0;
                    for v in row.iter_mut() {
                        *v = (*v - m).exp();
                        total += *v;
                    }
                    row.iter_mut().for_each(|v| *v /= total);
                }
                Tensor::from_parts(x.shape().to_vec(), data)
            }
            Op::Sum(x, axis) | Op::Mean(x, axis) => {
                let x = val(x);
                let mean = matches!(op, Op::Mean(..));
                match axis {
                    None => {
                        let s: f64 = x.data().iter().sum();
                        Tensor::scalar(if mean { s / x.numel() as f64 } else { s })
                    }
                    Some(ax) => {
                        self.check_axis(var, x, *ax)?;
                        let (outer, len, inner) = kernels::split_axis(x.shape(), *ax);
                        let mut data = vec![0.0; outer * inner];
                        for o in 0..outer {
                            for l in 0..len {
                                for i in 0..inner {
                                    data[o * inner + i] += x.data()[(o * len + l) * inner + i];
                                }
                            }
                        }
                        if mean {
                            data.iter_mut().for_each(|v| *v /= len as f64);
                        }
                        Tensor::from_parts(reduced_shape(x.shape(), *ax), data)
                    }
                }
            }
            Op::Max(x, axis) => {
                let x = val(x);
                match axis {
                    None => Tensor::scalar(x.data().iter().copied().fold(f64::NEG_INFINITY, f64::max)),
                    Some(ax) => {
                        self.check_axis(var, x, *ax)?;
                        let (outer, len, inner) = kernels::split_axis(x.shape(), *ax);
                        let mut data = vec![f64::NEG_INFINITY; outer * inner];
                        for o in 0..outer {
                            for l in 0..len {
                                for i in 0..inner {
                                    let v = x.data()[(o * len + l) * inner + i];
                                    let slot = &mut data[o * inner + i];
                                    if v > *slot {
                                        *slot = v;
                                    }
                                }
                            }
                        }
                        Tensor::from_parts(reduced_shape(x.shape(), *ax), data)
                    }
                }
            }
            Op::Concat(xs, axis) => {
                let parts: Vec<&Tensor> = xs.iter().map(val).collect();
                let first = parts[0];
                self.check_axis(var, first, *axis)?;
                let mut total = 0;
                for p in &parts {
                    let compatible = p.rank() == first.rank()
                        && p.shape()
                            .iter()
                            .zip(first.shape())
                            .enumerate()
                            .all(|(d, (a, b))| d == *axis || a == b);
                    if !compatible {
                        return Err(self.shape_error(
                            var,
                            format!("cannot concatenate {:?} with {:?}", first.shape(), p.shape()),
                        ));
                    }
                    total += p.shape()[*axis];
                }
                let (outer, _, inner) = kernels::split_axis(first.shape(), *axis);
                let mut data = Vec::with_capacity(outer * total * inner);
                for o in 0..outer {
                    for p in &parts {
                        let chunk = p.shape()[*axis] * inner;
                        data.extend_from_slice(&p.data()[o * chunk..(o + 1) * chunk]);
                    }
                }
                let mut shape = first.shape().to_vec();
                shape[*axis] = total;
                Tensor::from_parts(shape, data)
            }
            Op::Reshape(x, spec) => {
                let x = val(x);
                let shape = resolve_shape(spec, x.numel())
                    .ok_or_else(|| self.shape_error(var, format!("cannot reshape {:?} into {:?}", x.shape(), spec)))?;
                Tensor::from_parts(shape, x.data().to_vec())
            }
            Op::Slice { x, axis, start, end } => {
                let x = val(x);
                self.check_axis(var, x, *axis)?;
                if start >= end || *end > x.shape()[*axis] {
                    return Err(self.shape_error(var, format!("slice {start}..{end} out of range for {:?}", x.shape())));
                }
                let (outer, len, inner) = kernels::split_axis(x.shape(), *axis);
                let mut data = Vec::with_capacity(outer * (end - start) * inner);
                for o in 0..outer {
                    data.extend_from_slice(&x.data()[(o * len + start) * inner..(o * len + end) * inner]);
                }
                let mut shape = x.shape().to_vec();
                shape[*axis] = end - start;
                Tensor::from_parts(shape, data)
            }
            Op::Reverse(x, axis) => {
                let x = val(x);
                self.check_axis(var, x, *axis)?;
                let (outer, len, inner) = kernels::split_axis(x.shape(), *axis);
                let mut data = Vec::with_capacity(x.numel());
                for o in 0..outer {
                    for l in (0..len).rev() {
                        data.extend_from_slice(&x.data()[(o * len + l) * inner..(o * len + l + 1) * inner]);
                    }
                }
                Tensor::from_parts(x.shape().to_vec(), data)
            }
            Op::Conv1d { x, kernel, stride } => {
                let (x, k) = (val(x), val(kernel));
                let (d, ci, co) = self.conv_dims(var, x, k, *stride, false)?;
                let data = kernels::conv1d(x.data(), k.data(), d, ci, co);
                Tensor::from_parts(conv_out_shape(x, d.short_len, co), data)
            }
            Op::ConvTranspose1d { x, kernel, stride } => {
                let (x, k) = (val(x), val(kernel));
                let (d, ci, co) = self.conv_dims(var, x, k, *stride, true)?;
                let data = kernels::conv_transpose1d(x.data(), k.data(), d, ci, co);
                Tensor::from_parts(conv_out_shape(x, d.long_len, co), data)
            }
            Op::RationalBezier { p, w, u } => {
                let (p, w, u) = (val(p), val(w), val(u));
                let (batch, ncp, npts) = self.bezier_dims(var, p, w, u)?;
                let data = geo::bezier_forward(p.data(), w.data(), u.data(), batch, ncp, npts).map_err(|source| {
                    AutodiffError::Geometry {
                        node: self.describe(var),
                        source,
                    }
                })?;
                Tensor::from_parts(vec![batch, npts, 2], data)
            }
            Op::Kumaraswamy { a, b, c, grid } => {
                let (a, b, c) = (val(a), val(b), val(c));
                if a.rank() != 2 || a.shape() != b.shape() || a.shape() != c.shape() {
                    return Err(self.shape_error(
                        var,
                        format!(
                            "mixture parameters {:?}, {:?}, {:?} must share one [batch, k] shape",
                            a.shape(),
                            b.shape(),
                            c.shape()
                        ),
                    ));
                }
                let (batch, k) = (a.shape()[0], a.shape()[1]);
                let data = geo::kumaraswamy_forward(grid, a.data(), b.data(), c.data(), batch, k);
                Tensor::from_parts(vec![batch, grid.len()], data)
            }
        };
        Ok(out)
    }

    fn check_axis(&self, var: Var, x: &Tensor, axis: usize) -> Result<(), AutodiffError> {
        if axis >= x.rank() {
            return Err(self.shape_error(var, format!("axis {axis} out of range for {:?}", x.shape())));
        }
        Ok(())
    }

    fn binary(&self, var: Var, a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Result<Tensor, AutodiffError> {
        let shape = broadcast_shape(a.shape(), a.numel(), b.shape(), b.numel())
            .ok_or_else(|| self.shape_error(var, format!("cannot broadcast {:?} with {:?}", a.shape(), b.shape())))?;
        let n: usize = shape.iter().product();
        let (ad, bd) = (a.data(), b.data());
        let (na, nb) = (ad.len(), bd.len());
        let data = if na == n && nb == n {
            ad.iter().zip(bd).map(|(x, y)| f(*x, *y)).collect()
        } else {
            (0..n).map(|i| f(ad[i % na], bd[i % nb])).collect()
        };
        Ok(Tensor::from_parts(shape, data))
    }

    fn conv_dims(
        &self,
        var: Var,
        x: &Tensor,
        k: &Tensor,
        stride: usize,
        transposed: bool,
    ) -> Result<(ConvDims, usize, usize), AutodiffError> {
        let (batch, len, ci) = match x.shape() {
            [l, c] => (1, *l, *c),
            [b, l, c] => (*b, *l, *c),
            s => return Err(self.shape_error(var, format!("expected [batch, length, channels], got {s:?}"))),
        };
        let [taps, kin, co] = k.shape() else {
            return Err(self.shape_error(var, format!("kernel must be [taps, in, out], got {:?}", k.shape())));
        };
        if *kin != ci {
            return Err(self.shape_error(var, format!("kernel expects {kin} input channels, input has {ci}")));
        }
        if taps % 2 == 0 {
            return Err(self.shape_error(var, format!("kernel size {taps} must be odd")));
        }
        if stride == 0 {
            return Err(self.shape_error(var, "stride must be positive"));
        }
        let d = if transposed {
            ConvDims {
                batch,
                short_len: len,
                long_len: len * stride,
                taps: *taps,
                stride,
            }
        } else {
            if len < *taps {
                return Err(self.shape_error(var, format!("input length {len} shorter than kernel size {taps}")));
            }
            ConvDims {
                batch,
                short_len: len.div_ceil(stride),
                long_len: len,
                taps: *taps,
                stride,
            }
        };
        Ok((d, ci, *co))
    }

    fn bezier_dims(
        &self,
        var: Var,
        p: &Tensor,
        w: &Tensor,
        u: &Tensor,
    ) -> Result<(usize, usize, usize), AutodiffError> {
        match (p.shape(), w.shape(), u.shape()) {
            ([b, n, 2], [bw, nw], [bu, m]) if b == bw && b == bu && n == nw => Ok((*b, *n, *m)),
            _ => Err(self.shape_error(
                var,
                format!(
                    "expected p [B, n+1, 2], w [B, n+1], u [B, m+1]; got {:?}, {:?}, {:?}",
                    p.shape(),
                    w.shape(),
                    u.shape()
                ),
            )),
        }
    }

    /// Upstream gradient `g` of node `var` pushed to each input that needs one.
    fn adjoint(&self, var: Var, g: &[f64], trace: &Trace, requires: &[bool]) -> Vec<(Var, Vec<f64>)> {
        let val = |v: &Var| trace.value(*v);
        let need = |v: &Var| requires[v.0];
        let out = trace.value(var);
        let mut res = Vec::new();
        let unary = |x: &Var, f: &dyn Fn(f64, f64, f64) -> f64| -> Vec<(Var, Vec<f64>)> {
            let xd = trace.value(*x).data();
            let od = out.data();
            vec![(*x, (0..g.len()).map(|i| f(xd[i], od[i], g[i])).collect())]
        };
        match &self.nodes[var.0].op {
            Op::Input(_) | Op::Constant(_) => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (val(a), val(b));
                let (m, k, n) = (av.shape()[0], av.shape()[1], bv.shape()[1]);
                if need(a) {
                    res.push((*a, kernels::matmul_grad_left(g, bv.data(), m, k, n)));
                }
                if need(b) {
                    res.push((*b, kernels::matmul_grad_right(av.data(), g, m, k, n)));
                }
            }
            Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::Div(a, b) => {
                let (ad, bd) = (val(a).data(), val(b).data());
                let (na, nb) = (ad.len(), bd.len());
                let op = &self.nodes[var.0].op;
                let mut ga = if need(a) { Some(vec![0.0; na]) } else { None };
                let mut gb = if need(b) { Some(vec![0.0; nb]) } else { None };
                for (i, gi) in g.iter().enumerate() {
                    let (x, y) = (ad[i % na], bd[i % nb]);
                    let (dx, dy) = match op {
                        Op::Add(..) => (1.0, 1.0),
                        Op::Sub(..) => (1.0, -1.0),
                        Op::Mul(..) => (y, x),
                        _ => {
                            let d = clamp_denominator(y);
                            let dy = if d == y { -x / (d * d) } else { 0.0 };
                            (1.0 / d, dy)
                        }
                    };
                    if let Some(ga) = &mut ga {
                        ga[i % na] += gi * dx;
                    }
                    if let Some(gb) = &mut gb {
                        gb[i % nb] += gi * dy;
                    }
                }
                res.extend(ga.map(|v| (*a, v)));
                res.extend(gb.map(|v| (*b, v)));
            }
            Op::Neg(x) => res.push((*x, g.iter().map(|v| -v).collect())),
            Op::Scale(x, s) => res.push((*x, g.iter().map(|v| v * s).collect())),
            Op::Offset(x, _) => res.push((*x, g.to_vec())),
            Op::Pow(x, p) => res.extend(unary(x, &|xv, _, gv| gv * p * xv.powf(p - 1.0))),
            Op::Exp(x) => res.extend(unary(x, &|_, o, gv| gv * o)),
            Op::Log(x) => res.extend(unary(x, &|xv, _, gv| if xv > STABILITY_EPS { gv / xv } else { 0.0 })),
            Op::Abs(x) => res.extend(unary(x, &|xv, _, gv| gv * xv.signum() * f64::from(u8::from(xv != 0.0)))),
            Op::Sigmoid(x) => res.extend(unary(x, &|_, o, gv| gv * o * (1.0 - o))),
            Op::Tanh(x) => res.extend(unary(x, &|_, o, gv| gv * (1.0 - o * o))),
            Op::Softplus(x) => res.extend(unary(x, &|xv, _, gv| gv * kernels::sigmoid(xv))),
            Op::LeakyRelu(x, alpha) => res.extend(unary(x, &|xv, _, gv| if xv > 0.0 { gv } else { gv * alpha })),
            Op::Clamp(x, lo, hi) => res.extend(unary(x, &|xv, _, gv| if xv >= *lo && xv <= *hi { gv } else { 0.0 })),
            Op::Softmax(x) => {
                let n = *out.shape().last().unwrap_or(&1);
                let mut gx = vec![0.0; g.len()];
                for ((grow, orow), xrow) in g
                    .chunks_exact(n)
                    .zip(out.data().chunks_exact(n))
                    .zip(gx.chunks_exact_mut(n))
                {
                    let dot: f64 = grow.iter().zip(orow).map(|(a, b)| a * b).sum();
                    for i in 0..n {
                        xrow[i] = orow[i] * (grow[i] - dot);
                    }
                }
                res.push((*x, gx));
            }
            Op::Sum(x, axis) | Op::Mean(x, axis) => {
                let xv = val(x);
                let mean = matches!(self.nodes[var.0].op, Op::Mean(..));
                let gx = match axis {
                    None => {
                        let s = if mean { g[0] / xv.numel() as f64 } else { g[0] };
                        vec![s; xv.numel()]
                    }
                    Some(ax) => {
                        let (outer, len, inner) = kernels::split_axis(xv.shape(), *ax);
                        let div = if mean { len as f64 } else { 1.0 };
                        let mut gx = vec![0.0; xv.numel()];
                        for o in 0..outer {
                            for l in 0..len {
                                for i in 0..inner {
                                    gx[(o * len + l) * inner + i] = g[o * inner + i] / div;
                                }
                            }
                        }
                        gx
                    }
                };
                res.push((*x, gx));
            }
            Op::Max(x, axis) => {
                let xv = val(x);
                let mut gx = vec![0.0; xv.numel()];
                match axis {
                    None => {
                        let idx = xv.data().iter().position(|v| *v == out.data()[0]).unwrap_or(0);
                        gx[idx] = g[0];
                    }
                    Some(ax) => {
                        let (outer, len, inner) = kernels::split_axis(xv.shape(), *ax);
                        for o in 0..outer {
                            for i in 0..inner {
                                let target = out.data()[o * inner + i];
                                let l = (0..len)
                                    .find(|l| xv.data()[(o * len + l) * inner + i] == target)
                                    .unwrap_or(0);
                                gx[(o * len + l) * inner + i] = g[o * inner + i];
                            }
                        }
                    }
                }
                res.push((*x, gx));
            }
            Op::Concat(xs, axis) => {
                let (outer, total, inner) = kernels::split_axis(out.shape(), *axis);
                let mut offset = 0;
                for x in xs {
                    let len = val(x).shape()[*axis];
                    if need(x) {
                        let mut gx = Vec::with_capacity(outer * len * inner);
                        for o in 0..outer {
                            let start = (o * total + offset) * inner;
                            gx.extend_from_slice(&g[start..start + len * inner]);
                        }
                        res.push((*x, gx));
                    }
                    offset += len;
                }
            }
            Op::Reshape(x, _) => res.push((*x, g.to_vec())),
            Op::Slice { x, axis, start, end } => {
                let xv = val(x);
                let (outer, len, inner) = kernels::split_axis(xv.shape(), *axis);
                let width = (end - start) * inner;
                let mut gx = vec![0.0; xv.numel()];
                for o in 0..outer {
                    let dst = (o * len + start) * inner;
                    gx[dst..dst + width].copy_from_slice(&g[o * width..(o + 1) * width]);
                }
                res.push((*x, gx));
            }
            Op::Reverse(x, axis) => {
                let (outer, len, inner) = kernels::split_axis(out.shape(), *axis);
                let mut gx = Vec::with_capacity(g.len());
                for o in 0..outer {
                    for l in (0..len).rev() {
                        gx.extend_from_slice(&g[(o * len + l) * inner..(o * len + l + 1) * inner]);
                    }
                }
                res.push((*x, gx));
            }
            Op::Conv1d { x, kernel, stride } | Op::ConvTranspose1d { x, kernel, stride } => {
                let (xv, kv) = (val(x), val(kernel));
                let transposed = matches!(self.nodes[var.0].op, Op::ConvTranspose1d { .. });
                let (d, ci, co) = self
                    .conv_dims(var, xv, kv, *stride, transposed)
                    .expect("shapes validated in forward pass");
                let backward = if transposed {
                    kernels::conv_transpose1d_backward
                } else {
                    kernels::conv1d_backward
                };
                let (gx, gk) = backward(xv.data(), kv.data(), g, d, ci, co, need(x), need(kernel));
                if need(x) {
                    res.push((*x, gx));
                }
                if need(kernel) {
                    res.push((*kernel, gk));
                }
            }
            Op::RationalBezier { p, w, u } => {
                let (pv, wv, uv) = (val(p), val(w), val(u));
                let (batch, ncp, npts) = (pv.shape()[0], pv.shape()[1], uv.shape()[1]);
                let (gp, gw, gu) =
                    geo::bezier_backward(pv.data(), wv.data(), uv.data(), out.data(), g, batch, ncp, npts);
                for (v, gv) in [(p, gp), (w, gw), (u, gu)] {
                    if need(v) {
                        res.push((*v, gv));
                    }
                }
            }
            Op::Kumaraswamy { a, b, c, grid } => {
                let (av, bv, cv) = (val(a), val(b), val(c));
                let (batch, k) = (av.shape()[0], av.shape()[1]);
                let (ga, gb, gc) =
                    geo::kumaraswamy_backward(grid, av.data(), bv.data(), cv.data(), out.data(), g, batch, k);
                for (v, gv) in [(a, ga), (b, gb), (c, gc)] {
                    if need(v) {
                        res.push((*v, gv));
                    }
                }
            }
        }
        res
    }
}

fn clamp_denominator(y: f64) -> f64 {
    if y.abs() >= STABILITY_EPS {
        y
    } else if y < 0.0 {
        -STABILITY_EPS
    } else {
        STABILITY_EPS
    }
}

/// Shape of a broadcast binary op: operands must match, or the smaller one
/// must be a single element or a trailing suffix of the larger.
fn broadcast_shape(a: &[usize], na: usize, b: &[usize], nb: usize) -> Option<Vec<usize>> {
    if a == b {
        return Some(a.to_vec());
    }
    let (big, small, nsmall) = if (na, a.len()) >= (nb, b.len()) {
        (a, b, nb)
    } else {
        (b, a, na)
    };
    (nsmall == 1 || big.ends_with(small)).then(|| big.to_vec())
}

fn reduced_shape(shape: &[usize], axis: usize) -> Vec<usize> {
    let mut s = shape.to_vec();
    s.remove(axis);
    s
}

fn resolve_shape(spec: &[isize], numel: usize) -> Option<Vec<usize>> {
    let known: usize = spec.iter().filter(|&&d| d > 0).map(|&d| d as usize).product();
    let inferred = spec.iter().filter(|&&d| d < 0).count();
    if spec.iter().any(|&d| d == 0 || d < -1) || inferred > 1 || known == 0 {
        return None;
    }
    let fill = if inferred == 1 {
        if numel % known != 0 {
            return None;
        }
        numel / known
    } else {
        if known != numel {
            return None;
        }
        1
    };
    Some(spec.iter().map(|&d| if d < 0 { fill } else { d as usize }).collect())
}

fn conv_out_shape(x: &Tensor, len: usize, channels: usize) -> Vec<usize> {
    if x.rank() == 2 {
        vec![len, channels]
    } else {
        vec![x.shape()[0], len, channels]
    }
}
