//! Shared builders for gradient-check instances.

#![allow(dead_code)]

use std::collections::HashMap;

use beziergan::autodiff::gradcheck::{check_gradients, GradCheckReport, Tolerance};
use beziergan::autodiff::{Bindings, Graph, Var};
use beziergan::geometry::uniform_grid;
use beziergan::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    Tensor::from_fn(shape, |_| rng.random_range(lo..hi))
}

/// Uniform values whose magnitude stays at least `gap` away from zero.
pub fn away_from_zero(rng: &mut ChaCha8Rng, shape: &[usize], gap: f64, hi: f64) -> Tensor {
    Tensor::from_fn(shape, |_| {
        let m = rng.random_range(gap..hi);
        if rng.random_bool(0.5) {
            m
        } else {
            -m
        }
    })
}

/// One gradient-check instance: a graph whose scalar output is a random
/// weighting of the primitive's output.
pub struct Case {
    pub graph: Graph,
    pub output: Var,
    pub values: HashMap<String, Tensor>,
    pub wrt: Vec<String>,
}

impl Case {
    pub fn check(&self) -> GradCheckReport {
        let wrt: Vec<&str> = self.wrt.iter().map(String::as_str).collect();
        check_gradients(&self.graph, self.output, &self.values, &wrt, Tolerance::default())
            .expect("gradient check runs")
    }
}

/// Wraps `build` so the checked scalar is `sum(y * r)` for a random `r`.
pub fn weighted_case(
    rng: &mut ChaCha8Rng,
    inputs: Vec<(&str, Tensor)>,
    build: impl FnOnce(&mut Graph, &[Var]) -> Var,
) -> Case {
    let mut graph = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|(n, _)| graph.input(n)).collect();
    let y = build(&mut graph, &vars);
    let r = graph.input("__weights");
    let prod = graph.mul(y, r);
    let output = graph.sum(prod);

    let mut values: HashMap<String, Tensor> = inputs.iter().map(|(n, t)| (n.to_string(), t.clone())).collect();
    let bindings: Bindings<'_> = values.iter().map(|(k, v)| (k.as_str(), v)).collect();
    let shape = graph
        .evaluate(y, &bindings)
        .expect("primitive evaluates")
        .shape()
        .to_vec();
    values.insert("__weights".into(), uniform(rng, &shape, -1.0, 1.0));
    Case {
        graph,
        output,
        values,
        wrt: inputs.iter().map(|(n, _)| n.to_string()).collect(),
    }
}

pub type CaseBuilder = fn(&mut ChaCha8Rng) -> Case;

fn sorted_interior(rng: &mut ChaCha8Rng, batch: usize, n: usize) -> Tensor {
    let mut data = Vec::with_capacity(batch * n);
    for _ in 0..batch {
        let mut row: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..0.99)).collect();
        row.sort_by(f64::total_cmp);
        data.extend(row);
    }
    Tensor::new(vec![batch, n], data).unwrap()
}

/// Every primitive of the graph with a random instance builder.
pub fn primitive_cases() -> Vec<(&'static str, CaseBuilder)> {
    vec![
        ("matmul", |r| {
            let (a, b) = (uniform(r, &[3, 4], -1.0, 1.0), uniform(r, &[4, 2], -1.0, 1.0));
            weighted_case(r, vec![("a", a), ("b", b)], |g, v| g.matmul(v[0], v[1]))
        }),
        ("add", |r| {
            let (a, b) = (uniform(r, &[2, 3], -1.0, 1.0), uniform(r, &[3], -1.0, 1.0));
            weighted_case(r, vec![("a", a), ("b", b)], |g, v| g.add(v[0], v[1]))
        }),
        ("subtract", |r| {
            let (a, b) = (uniform(r, &[4], -1.0, 1.0), uniform(r, &[2, 4], -1.0, 1.0));
            weighted_case(r, vec![("a", a), ("b", b)], |g, v| g.sub(v[0], v[1]))
        }),
        ("multiply", |r| {
            let (a, b) = (uniform(r, &[2, 3], -2.0, 2.0), uniform(r, &[2, 3], -2.0, 2.0));
            weighted_case(r, vec![("a", a), ("b", b)], |g, v| g.mul(v[0], v[1]))
        }),
        ("divide", |r| {
            let (a, b) = (uniform(r, &[2, 3], -2.0, 2.0), away_from_zero(r, &[2, 3], 0.5, 2.0));
            weighted_case(r, vec![("a", a), ("b", b)], |g, v| g.div(v[0], v[1]))
        }),
        ("power", |r| {
            let x = uniform(r, &[5], 0.2, 2.0);
            let p = r.random_range(0.5..3.0);
            weighted_case(r, vec![("x", x)], move |g, v| g.pow(v[0], p))
        }),
        ("exp", |r| {
            let x = uniform(r, &[5], -2.0, 2.0);
            weighted_case(r, vec![("x", x)], |g, v| g.exp(v[0]))
        }),
        ("log", |r| {
            let x = uniform(r, &[5], 0.1, 3.0);
            weighted_case(r, vec![("x", x)], |g, v| g.log(v[0]))
        }),
        ("sum", |r| {
            let x = uniform(r, &[3, 4], -1.0, 1.0);
            weighted_case(r, vec![("x", x)], |g, v| g.sum_axis(v[0], 1))
        }),
        ("mean", |r| {
            let x = uniform(r, &[3, 4, 2], -1.0, 1.0);
            weighted_case(r, vec![("x", x)], |g, v| g.mean_axis(v[0], 1))
        }),
        ("max-reduce", |r| {
            // Distinct values spaced far beyond the finite-difference step.
            let mut vals: Vec<f64> = (0..12).map(|i| i as f64 * 0.1).collect();
            for i in (1..vals.len()).rev() {
                let j = r.random_range(0..=i);
                vals.swap(i, j);
            }
            let x = Tensor::new(vec![3, 4], vals).unwrap();
            weighted_case(r, vec![("x", x)], |g, v| g.max_axis(v[0], 1))
        }),
        ("concatenate", |r| {
            let (a, b) = (uniform(r, &[2, 3], -1.0, 1.0), uniform(r, &[2, 2], -1.0, 1.0));
            weighted_case(r, vec![("a", a), ("b", b)], |g, v| g.concat(&[v[0], v[1]], 1))
        }),
        ("reshape", |r| {
            let x = uniform(r, &[2, 6], -1.0, 1.0);
            weighted_case(r, vec![("x", x)], |g, v| {
                let y = g.reshape(v[0], &[3, -1]);
                g.pow(y, 2.0)
            })
        }),
        ("sigmoid", |r| {
            let x = uniform(r, &[6], -4.0, 4.0);
            weighted_case(r, vec![("x", x)], |g, v| g.sigmoid(v[0]))
        }),
        ("tanh", |r| {
            let x = uniform(r, &[6], -3.0, 3.0);
            weighted_case(r, vec![("x", x)], |g, v| g.tanh(v[0]))
        }),
        ("softplus", |r| {
            let x = uniform(r, &[6], -5.0, 5.0);
            weighted_case(r, vec![("x", x)], |g, v| g.softplus(v[0]))
        }),
        ("softmax", |r| {
            let x = uniform(r, &[3, 4], -2.0, 2.0);
            weighted_case(r, vec![("x", x)], |g, v| g.softmax(v[0]))
        }),
        ("leaky_relu", |r| {
            let x = away_from_zero(r, &[8], 0.01, 2.0);
            weighted_case(r, vec![("x", x)], |g, v| g.leaky_relu(v[0], 0.2))
        }),
        ("abs", |r| {
            let x = away_from_zero(r, &[8], 0.01, 2.0);
            weighted_case(r, vec![("x", x)], |g, v| g.abs(v[0]))
        }),
        ("clamp", |r| {
            let x = Tensor::from_fn(&[8], |i| {
                if i % 2 == 0 {
                    r.random_range(-0.9..0.9)
                } else {
                    r.random_range(1.1..2.0)
                }
            });
            weighted_case(r, vec![("x", x)], |g, v| g.clamp(v[0], -1.0, 1.0))
        }),
        ("slice", |r| {
            let x = uniform(r, &[2, 5, 3], -1.0, 1.0);
            weighted_case(r, vec![("x", x)], |g, v| g.slice(v[0], 1, 1, 4))
        }),
        ("reverse", |r| {
            let x = uniform(r, &[2, 5, 3], -1.0, 1.0);
            weighted_case(r, vec![("x", x)], |g, v| g.reverse(v[0], 1))
        }),
        ("negate-scale-offset", |r| {
            let x = uniform(r, &[4], -1.0, 1.0);
            weighted_case(r, vec![("x", x)], |g, v| {
                let a = g.neg(v[0]);
                let b = g.scale(a, 1.7);
                let c = g.offset(b, 0.3);
                g.pow(c, 2.0)
            })
        }),
        ("conv1d", |r| {
            let x = uniform(r, &[2, 9, 3], -1.0, 1.0);
            let k = uniform(r, &[5, 3, 4], -1.0, 1.0);
            weighted_case(r, vec![("x", x), ("k", k)], |g, v| g.conv1d(v[0], v[1], 2))
        }),
        ("transposed-conv1d", |r| {
            let x = uniform(r, &[2, 4, 3], -1.0, 1.0);
            let k = uniform(r, &[5, 3, 2], -1.0, 1.0);
            weighted_case(r, vec![("x", x), ("k", k)], |g, v| g.conv_transpose1d(v[0], v[1], 2))
        }),
        ("bernstein-assembly", |r| {
            let (batch, ncp, npts) = (2, r.random_range(2..8), 6);
            let p = uniform(r, &[batch, ncp, 2], -1.0, 1.0);
            let w = uniform(r, &[batch, ncp], 0.5, 2.0);
            let u = sorted_interior(r, batch, npts);
            weighted_case(r, vec![("p", p), ("w", w), ("u", u)], |g, v| {
                g.rational_bezier(v[0], v[1], v[2])
            })
        }),
        ("kumaraswamy", |r| kumaraswamy_case(r)),
    ]
}

pub fn kumaraswamy_case(r: &mut ChaCha8Rng) -> Case {
    let k = r.random_range(1..5);
    let a = uniform(r, &[2, k], 0.5, 3.0);
    let b = uniform(r, &[2, k], 0.5, 3.0);
    let raw = uniform(r, &[2, k], 0.1, 1.0);
    let c = {
        let mut data = raw.into_data();
        for row in data.chunks_exact_mut(k) {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
        }
        Tensor::new(vec![2, k], data).unwrap()
    };
    weighted_case(r, vec![("a", a), ("b", b), ("c", c)], |g, v| {
        g.kumaraswamy(v[0], v[1], v[2], uniform_grid(12))
    })
}
