use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::autodiff::{Bindings, Graph, Var};
use crate::tensor::Tensor;

/// Named parameter tensors of one network, iterated in name order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    tensors: BTreeMap<String, Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) {
        self.tensors.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.get_mut(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.tensors.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Tensor)> {
        self.tensors.iter_mut()
    }

    pub fn names(&self) -> Vec<&str> {
        self.tensors.keys().map(String::as_str).collect()
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn numel(&self) -> usize {
        self.tensors.values().map(Tensor::numel).sum()
    }

    pub fn bind_into<'a>(&'a self, bindings: &mut Bindings<'a>) {
        for (name, t) in &self.tensors {
            bindings.bind(name.as_str(), t);
        }
    }

    pub(crate) fn init_dense(&mut self, rng: &mut impl Rng, prefix: &str, fan_in: usize, fan_out: usize) {
        let std = (2.0 / fan_in as f64).sqrt();
        self.insert(format!("{prefix}.w"), gaussian(rng, &[fan_in, fan_out], std));
        self.insert(format!("{prefix}.b"), Tensor::zeros(&[fan_out]));
    }

    pub(crate) fn init_conv(
        &mut self,
        rng: &mut impl Rng,
        prefix: &str,
        taps: usize,
        cin: usize,
        cout: usize,
        fan_in: usize,
    ) {
        let std = (2.0 / fan_in as f64).sqrt();
        self.insert(format!("{prefix}.k"), gaussian(rng, &[taps, cin, cout], std));
        self.insert(format!("{prefix}.b"), Tensor::zeros(&[cout]));
    }
}

fn gaussian(rng: &mut impl Rng, shape: &[usize], std: f64) -> Tensor {
    Tensor::from_fn(shape, |_| {
        let v: f64 = StandardNormal.sample(rng);
        v * std
    })
}

/// `x @ W + b` with parameters `{prefix}.w`, `{prefix}.b`.
pub(crate) fn dense(g: &mut Graph, x: Var, prefix: &str) -> Var {
    let w = g.input(&format!("{prefix}.w"));
    let b = g.input(&format!("{prefix}.b"));
    let y = g.matmul(x, w);
    let y = g.add(y, b);
    g.label(y, prefix)
}

pub(crate) fn conv(g: &mut Graph, x: Var, prefix: &str, stride: usize, transposed: bool) -> Var {
    let k = g.input(&format!("{prefix}.k"));
    let b = g.input(&format!("{prefix}.b"));
    let y = if transposed {
        g.conv_transpose1d(x, k, stride)
    } else {
        g.conv1d(x, k, stride)
    };
    let y = g.add(y, b);
    g.label(y, prefix)
}
