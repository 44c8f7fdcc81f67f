mod common;

use std::collections::HashMap;

use beziergan::autodiff::gradcheck::{check_gradients, Tolerance};
use beziergan::autodiff::{AutodiffError, Bindings, Graph};
use beziergan::Tensor;
use common::{primitive_cases, rng, uniform};
use proptest::prelude::*;

#[test]
fn square_evaluates_and_differentiates() {
    let mut g = Graph::new();
    let x = g.input("x");
    let y = g.mul(x, x);
    let three = Tensor::scalar(3.0);
    let b = Bindings::new().with("x", &three);
    assert_eq!(g.evaluate(y, &b).unwrap().item(), 9.0);
    let grads = g.gradient(y, &b, &["x"]).unwrap();
    assert_eq!(grads["x"].item(), 6.0);
}

#[test]
fn identity_matmul() {
    let mut g = Graph::new();
    let i = g.constant(Tensor::new(vec![3, 3], vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap());
    let a = g.input("a");
    let y = g.matmul(i, a);
    let mut r = rng(3);
    let av = uniform(&mut r, &[3, 5], -1.0, 1.0);
    assert_eq!(g.evaluate(y, &Bindings::new().with("a", &av)).unwrap(), av);
}

#[test]
fn softmax_of_zeros_is_uniform() {
    let mut g = Graph::new();
    let x = g.input("x");
    let y = g.softmax(x);
    let z = Tensor::zeros(&[3]);
    let out = g.evaluate(y, &Bindings::new().with("x", &z)).unwrap();
    for v in out.data() {
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }
}

#[test]
fn leaky_relu_slopes() {
    let mut g = Graph::new();
    let x = g.input("x");
    let y = g.leaky_relu(x, 0.2);
    let s = g.sum(y);
    let xv = Tensor::vector(vec![-1.0, 2.0]);
    let grads = g.gradient(s, &Bindings::new().with("x", &xv), &["x"]).unwrap();
    assert_eq!(grads["x"].data(), &[0.2, 1.0]);
}

#[test]
fn conv1d_hand_cases() {
    let mut g = Graph::new();
    let x = g.input("x");
    let k = g.input("k");
    let s1 = g.conv1d(x, k, 1);
    let s2 = g.conv1d(x, k, 2);

    let xv = Tensor::new(vec![4, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let kv = Tensor::new(vec![3, 1, 1], vec![0.0, 1.0, 0.0]).unwrap();
    let out = g.evaluate(s1, &Bindings::new().with("x", &xv).with("k", &kv)).unwrap();
    assert_eq!(out.data(), &[1.0, 2.0, 3.0, 4.0]);

    let ones = Tensor::filled(&[4, 1], 1.0);
    let kv = Tensor::filled(&[3, 1, 1], 1.0);
    let out = g
        .evaluate(s2, &Bindings::new().with("x", &ones).with("k", &kv))
        .unwrap();
    assert_eq!(out.shape(), &[2, 1]);
    assert_eq!(out.data(), &[2.0, 3.0]);
}

/// Direct nested-loop cross-correlation with centred taps and zero padding.
fn naive_conv1d(x: &[Vec<Vec<f64>>], k: &[Vec<Vec<f64>>], stride: usize) -> Vec<Vec<Vec<f64>>> {
    let taps = k.len();
    let half = (taps as isize - 1) / 2;
    x.iter()
        .map(|seq| {
            let len = seq.len();
            let out_len = len.div_ceil(stride);
            (0..out_len)
                .map(|o| {
                    let co = k[0][0].len();
                    (0..co)
                        .map(|c_out| {
                            let mut acc = 0.0;
                            for (j, tap) in k.iter().enumerate() {
                                let pos = (o * stride) as isize + j as isize - half;
                                if pos < 0 || pos >= len as isize {
                                    continue;
                                }
                                for (c_in, row) in tap.iter().enumerate() {
                                    acc += seq[pos as usize][c_in] * row[c_out];
                                }
                            }
                            acc
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

#[test]
fn conv1d_matches_naive_oracle() {
    let mut r = rng(11);
    for trial in 0..20 {
        let (batch, len, ci, co, taps, stride) = (2, 7 + trial % 6, 3, 4, [3, 5][trial % 2], 1 + trial % 3);
        let xv = uniform(&mut r, &[batch, len, ci], -1.0, 1.0);
        let kv = uniform(&mut r, &[taps, ci, co], -1.0, 1.0);
        let mut g = Graph::new();
        let (x, k) = (g.input("x"), g.input("k"));
        let y = g.conv1d(x, k, stride);
        let out = g.evaluate(y, &Bindings::new().with("x", &xv).with("k", &kv)).unwrap();

        let xn: Vec<Vec<Vec<f64>>> = (0..batch)
            .map(|b| {
                (0..len)
                    .map(|l| (0..ci).map(|c| xv.data()[(b * len + l) * ci + c]).collect())
                    .collect()
            })
            .collect();
        let kn: Vec<Vec<Vec<f64>>> = (0..taps)
            .map(|j| {
                (0..ci)
                    .map(|c| (0..co).map(|o| kv.data()[(j * ci + c) * co + o]).collect())
                    .collect()
            })
            .collect();
        let expected: Vec<f64> = naive_conv1d(&xn, &kn, stride).into_iter().flatten().flatten().collect();
        assert_eq!(out.data(), expected.as_slice(), "trial {trial}");
    }
}

#[test]
fn transposed_conv_is_adjoint_of_conv() {
    // <conv(x), y> == <x, conv_t(y)> for the same kernel.
    let mut r = rng(5);
    let xv = uniform(&mut r, &[2, 8, 3], -1.0, 1.0);
    let yv = uniform(&mut r, &[2, 4, 2], -1.0, 1.0);
    let kv = uniform(&mut r, &[5, 3, 2], -1.0, 1.0);
    let kt = {
        let mut data = vec![0.0; kv.numel()];
        for j in 0..5 {
            for a in 0..3 {
                for b in 0..2 {
                    data[(j * 2 + b) * 3 + a] = kv.data()[(j * 3 + a) * 2 + b];
                }
            }
        }
        Tensor::new(vec![5, 2, 3], data).unwrap()
    };
    let mut g = Graph::new();
    let (x, y, k, ktv) = (g.input("x"), g.input("y"), g.input("k"), g.input("kt"));
    let cx = g.conv1d(x, k, 2);
    let ty = g.conv_transpose1d(y, ktv, 2);
    let b = Bindings::new()
        .with("x", &xv)
        .with("y", &yv)
        .with("k", &kv)
        .with("kt", &kt);
    let cxv = g.evaluate(cx, &b).unwrap();
    let tyv = g.evaluate(ty, &b).unwrap();
    let lhs: f64 = cxv.data().iter().zip(yv.data()).map(|(a, b)| a * b).sum();
    let rhs: f64 = xv.data().iter().zip(tyv.data()).map(|(a, b)| a * b).sum();
    assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
}

#[test]
fn every_primitive_passes_gradient_check() {
    for (name, build) in primitive_cases() {
        let mut r = rng(1000);
        for instance in 0..50 {
            let report = build(&mut r).check();
            assert!(report.passed(), "{name} instance {instance}: {report:?}");
        }
    }
}

#[test]
fn mlp_gradient_matches_finite_differences() {
    let mut r = rng(42);
    let mut g = Graph::new();
    let mut h = g.input("x");
    let mut values = HashMap::new();
    values.insert("x".to_string(), uniform(&mut r, &[4, 5], -1.0, 1.0));
    let widths = [5, 7, 6, 1];
    let mut wrt = Vec::new();
    for layer in 0..3 {
        let (wn, bn) = (format!("w{layer}"), format!("b{layer}"));
        let w = g.input(&wn);
        let b = g.input(&bn);
        values.insert(
            wn.clone(),
            uniform(&mut r, &[widths[layer], widths[layer + 1]], -1.0, 1.0),
        );
        values.insert(bn.clone(), uniform(&mut r, &[widths[layer + 1]], -0.5, 0.5));
        let z = g.matmul(h, w);
        let z = g.add(z, b);
        h = if layer < 2 { g.tanh(z) } else { z };
        wrt.push(wn);
        wrt.push(bn);
    }
    let loss = g.mean(h);
    let wrt: Vec<&str> = wrt.iter().map(String::as_str).collect();
    let report = check_gradients(&g, loss, &values, &wrt, Tolerance::default()).unwrap();
    assert!(report.passed(), "{report:?}");
}

#[test]
fn errors_name_the_problem() {
    let mut g = Graph::new();
    let a = g.input("a");
    let b = g.input("b");
    let y = g.matmul(a, b);
    let g = {
        let mut g = g;
        g.label(y, "projection");
        g
    };
    let av = Tensor::zeros(&[2, 3]);
    let bv = Tensor::zeros(&[2, 3]);
    match g.evaluate(y, &Bindings::new().with("a", &av).with("b", &bv)) {
        Err(AutodiffError::ShapeMismatch { node, .. }) => {
            assert!(node.contains("matmul") && node.contains("projection"))
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(
        g.evaluate(y, &Bindings::new().with("a", &av)).unwrap_err(),
        AutodiffError::Unbound("b".into())
    );

    let mut g = Graph::new();
    let x = g.input("x");
    let y = g.exp(x);
    let xv = Tensor::zeros(&[2]);
    let bind = Bindings::new().with("x", &xv);
    assert!(matches!(
        g.gradient(y, &bind, &["x"]),
        Err(AutodiffError::NonScalarOutput(_))
    ));
    let s = g.sum(y);
    assert!(matches!(
        g.gradient(s, &bind, &["nope"]),
        Err(AutodiffError::UnknownInput(_))
    ));
}

#[test]
fn evaluation_is_deterministic() {
    let build = primitive_cases()
        .into_iter()
        .find(|(n, _)| *n == "bernstein-assembly")
        .unwrap()
        .1;
    let case = build(&mut rng(9));
    let bindings: Bindings<'_> = case.values.iter().map(|(k, v)| (k.as_str(), v)).collect();
    let a = case.graph.evaluate(case.output, &bindings).unwrap();
    let b = case.graph.evaluate(case.output, &bindings).unwrap();
    assert_eq!(a.item().to_bits(), b.item().to_bits());
}

#[test]
fn log_and_divide_clamp_tiny_arguments() {
    let mut g = Graph::new();
    let x = g.input("x");
    let l = g.log(x);
    let one = g.constant(Tensor::scalar(1.0));
    let d = g.div(one, x);
    let zero = Tensor::vector(vec![0.0]);
    let b = Bindings::new().with("x", &zero);
    assert_eq!(g.evaluate(l, &b).unwrap().item(), 1e-12f64.ln());
    assert_eq!(g.evaluate(d, &b).unwrap().item(), 1e12);
}

proptest! {
    #[test]
    fn softmax_rows_are_distributions(rows in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 5), 1..6)) {
        let n = rows.len();
        let xv = Tensor::new(vec![n, 5], rows.into_iter().flatten().collect()).unwrap();
        let mut g = Graph::new();
        let x = g.input("x");
        let y = g.softmax(x);
        let out = g.evaluate(y, &Bindings::new().with("x", &xv)).unwrap();
        for row in out.data().chunks(5) {
            prop_assert!(row.iter().all(|v| *v >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
