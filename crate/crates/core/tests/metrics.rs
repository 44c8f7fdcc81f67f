mod common;

use std::collections::hash_map::DefaultHasher;
use std::f64::consts::PI;
use std::hash::{Hash, Hasher};

use beziergan::datasets::{generate_superformula_dataset, SuperformulaSpec};
use beziergan::geometry::Curve;
use beziergan::metrics::{
    bandwidth_grid, evaluate, lsc_proxy, mll, mll_grid, rvod, select_bandwidth, uniform_noise_curves, vod, EvalConfig,
    MetricError, MetricReport, Summary, TABLE_HEADER,
};
use beziergan::networks::{CurveGenerator, NetworkError};
use beziergan::Tensor;
use common::rng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_curves(r: &mut ChaCha8Rng, n: usize, points: usize) -> Vec<Curve> {
    (0..n)
        .map(|_| Curve::new((0..points).map(|_| [r.random::<f64>(), r.random::<f64>()]).collect()))
        .collect()
}

#[test]
fn kde_at_the_centre() {
    let mut r = rng(1);
    let v = random_curves(&mut r, 1, 64);
    for sigma in [0.05, 0.3, 2.0] {
        let expected = -64.0 * (2.0 * PI * sigma * sigma).ln();
        assert!((mll(&v, &v, sigma).unwrap() - expected).abs() < 1e-9);
        // Move one coordinate by d.
        let mut moved = v[0].clone().into_points();
        moved[10][1] += 0.7;
        let got = mll(&v, &[Curve::new(moved)], sigma).unwrap();
        assert!((got - (expected - 0.49 / (2.0 * sigma * sigma))).abs() < 1e-9 * expected.abs().max(1.0));
    }
}

#[test]
fn kde_matches_naive_double_loop() {
    let mut r = rng(2);
    let gen = random_curves(&mut r, 100, 64);
    let test = random_curves(&mut r, 50, 64);
    let sigma = 0.8;
    let d = 128.0;
    let mut total = 0.0;
    for t in &test {
        let mut density = 0.0;
        for g in &gen {
            let d2: f64 = t.flatten().iter().zip(g.flatten()).map(|(a, b)| (a - b).powi(2)).sum();
            density += (2.0 * PI * sigma * sigma).powf(-d / 2.0) * (-d2 / (2.0 * sigma * sigma)).exp();
        }
        total += (density / gen.len() as f64).ln();
    }
    let naive = total / test.len() as f64;
    assert!((mll(&gen, &test, sigma).unwrap() - naive).abs() < 1e-9);
    let grid = mll_grid(&gen, &test, &[sigma, 0.1]).unwrap();
    assert!((grid[0] - naive).abs() < 1e-9);
    // Far below underflow of the naive sum, log-sum-exp stays finite.
    assert!(mll(&gen, &test, 0.01).unwrap().is_finite());
}

#[test]
fn kde_errors() {
    let mut r = rng(3);
    let a = random_curves(&mut r, 3, 64);
    assert_eq!(mll(&a, &a, 0.0), Err(MetricError::InvalidBandwidth(0.0)));
    assert!(mll(&a, &a, -1.0).is_err());
    assert!(mll(&[], &a, 0.1).is_err());
    assert!(mll(&a, &random_curves(&mut r, 2, 32), 0.1).is_err());
}

#[test]
fn kde_is_monotone_in_distance() {
    let mut r = rng(4);
    let gen = random_curves(&mut r, 20, 64);
    for _ in 0..20 {
        let base = random_curves(&mut r, 1, 64).remove(0);
        // Start well outside the unit box so each step moves away from
        // every generated sample.
        let dir: Vec<f64> = (0..128).map(|_| r.random::<f64>() - 0.5).collect();
        let at = |s: f64| {
            Curve::from_flat(
                &base
                    .flatten()
                    .iter()
                    .zip(&dir)
                    .map(|(b, d)| b + 10.0 * d + s * d)
                    .collect::<Vec<_>>(),
            )
        };
        let mut prev = f64::INFINITY;
        for step in 0..10 {
            let v = mll(&gen, &[at(step as f64)], 0.5).unwrap();
            assert!(v <= prev);
            prev = v;
        }
    }
}

#[test]
fn bandwidth_selection_uses_the_grid() {
    let grid = bandwidth_grid(13);
    assert_eq!(grid.len(), 13);
    assert!((grid[0] - 0.01).abs() < 1e-15 && (grid[12] - 1.0).abs() < 1e-12);
    let mut r = rng(5);
    let gen = random_curves(&mut r, 50, 64);
    let val = random_curves(&mut r, 20, 64);
    let chosen = select_bandwidth(&gen, &val, &grid).unwrap();
    let scores = mll_grid(&gen, &val, &grid).unwrap();
    let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(scores[grid.iter().position(|g| *g == chosen).unwrap()], best);
}

#[test]
fn vod_examples() {
    let tri = Curve::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]);
    assert!((vod(&tri).unwrap() - 0.25).abs() < 1e-15);
    let diag = Curve::new((0..64).map(|i| [i as f64 * 0.1, i as f64 * 0.1]).collect());
    assert!(vod(&diag).unwrap().abs() < 1e-15);
    assert!(vod(&Curve::new(vec![[0.0, 0.0]])).is_err());
    let mut r = rng(6);
    for c in random_curves(&mut r, 20, 64) {
        let p = c.points();
        let mut sum = 0.0;
        for i in 0..63 {
            let d = [p[i + 1][0] - p[i][0], p[i + 1][1] - p[i][1]];
            let mean = (d[0] + d[1]) / 2.0;
            sum += ((d[0] - mean).powi(2) + (d[1] - mean).powi(2)) / 2.0;
        }
        assert!((vod(&c).unwrap() - sum / 63.0).abs() < 1e-12);
    }
}

#[test]
fn rvod_examples() {
    let mut r = rng(7);
    let data = random_curves(&mut r, 30, 64);
    assert_eq!(rvod(&data, &data).unwrap(), 1.0);
    // Scaling coordinates by √2 doubles VOD.
    let jagged: Vec<Curve> = data.iter().map(|c| c.scaled(2f64.sqrt())).collect();
    assert!((rvod(&data, &jagged).unwrap() - 0.5).abs() < 1e-12);
    let flat = vec![Curve::new(vec![[0.3, 0.3]; 64])];
    assert!(matches!(rvod(&data, &flat), Err(MetricError::DegenerateGenerated(_))));
    assert!(rvod(&[], &data).is_err());
}

/// Control points move linearly with the latent code.
struct LinearStub;

impl CurveGenerator for LinearStub {
    fn latent_dim(&self) -> usize {
        2
    }
    fn noise_dim(&self) -> usize {
        3
    }
    fn generate(&self, c: &Tensor, z: &Tensor) -> Result<Vec<Curve>, NetworkError> {
        Ok((0..c.shape()[0])
            .map(|b| {
                let (c0, c1, z0) = (c.row(b)[0], c.row(b)[1], z.row(b)[0]);
                Curve::new(
                    (0..64)
                        .map(|k| {
                            let t = k as f64 / 63.0;
                            [t + 0.3 * c0 * t + 0.1 * z0, (PI * t).sin() * (0.5 + c1) - 0.2 * c0]
                        })
                        .collect(),
                )
            })
            .collect())
    }
}

struct ConstantStub;

impl CurveGenerator for ConstantStub {
    fn latent_dim(&self) -> usize {
        2
    }
    fn noise_dim(&self) -> usize {
        3
    }
    fn generate(&self, c: &Tensor, _z: &Tensor) -> Result<Vec<Curve>, NetworkError> {
        Ok(vec![
            Curve::new((0..64).map(|k| [k as f64, 0.0]).collect());
            c.shape()[0]
        ])
    }
}

fn hash_of(values: &[f64]) -> u64 {
    let mut h = DefaultHasher::new();
    for v in values {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Output chosen by hashing the latent code: no structure at all.
struct HashStub;

impl CurveGenerator for HashStub {
    fn latent_dim(&self) -> usize {
        2
    }
    fn noise_dim(&self) -> usize {
        3
    }
    fn generate(&self, c: &Tensor, _z: &Tensor) -> Result<Vec<Curve>, NetworkError> {
        Ok((0..c.shape()[0])
            .map(|b| random_curves(&mut ChaCha8Rng::seed_from_u64(hash_of(c.row(b))), 1, 64).remove(0))
            .collect())
    }
}

/// Returns dataset members picked by hashing the inputs.
struct SamplerStub(Vec<Curve>);

impl CurveGenerator for SamplerStub {
    fn latent_dim(&self) -> usize {
        2
    }
    fn noise_dim(&self) -> usize {
        3
    }
    fn generate(&self, c: &Tensor, z: &Tensor) -> Result<Vec<Curve>, NetworkError> {
        Ok((0..c.shape()[0])
            .map(|b| {
                let key = [c.row(b), z.row(b)].concat();
                self.0[(hash_of(&key) % self.0.len() as u64) as usize].clone()
            })
            .collect())
    }
}

struct Scaled<G>(G, f64);

impl<G: CurveGenerator> CurveGenerator for Scaled<G> {
    fn latent_dim(&self) -> usize {
        self.0.latent_dim()
    }
    fn noise_dim(&self) -> usize {
        self.0.noise_dim()
    }
    fn generate(&self, c: &Tensor, z: &Tensor) -> Result<Vec<Curve>, NetworkError> {
        Ok(self.0.generate(c, z)?.iter().map(|c| c.scaled(self.1)).collect())
    }
}

#[test]
fn lsc_linear_stub_is_perfect() {
    let r = lsc_proxy(&LinearStub, 20, 15, 1).unwrap();
    assert!((r.value - 1.0).abs() < 1e-6, "{r:?}");
    assert_eq!((r.lines_used, r.lines_skipped), (20, 0));
}

#[test]
fn lsc_constant_stub_is_degenerate() {
    assert_eq!(
        lsc_proxy(&ConstantStub, 12, 10, 1),
        Err(MetricError::AllLinesDegenerate { lines: 12 })
    );
}

#[test]
fn lsc_hashed_stub_is_low() {
    let r = lsc_proxy(&HashStub, 50, 20, 2).unwrap();
    assert!(r.value < 0.3, "{r:?}");
    assert!((0.0..=1.0).contains(&r.value));
}

#[test]
fn lsc_is_scale_invariant_and_validates() {
    let a = lsc_proxy(&HashStub, 10, 8, 3).unwrap().value;
    let b = lsc_proxy(&Scaled(HashStub, 7.5), 10, 8, 3).unwrap().value;
    assert!((a - b).abs() < 1e-9);
    assert!(lsc_proxy(&LinearStub, 9, 10, 0).is_err());
    assert!(lsc_proxy(&LinearStub, 10, 2, 0).is_err());
}

fn small_eval(runs: usize) -> EvalConfig {
    EvalConfig {
        runs,
        lsc_lines: 10,
        lsc_points: 8,
        ..EvalConfig::default()
    }
}

#[test]
fn evaluate_self_comparison() {
    let (ds, _) = generate_superformula_dataset(&SuperformulaSpec {
        count: 300,
        seed: 3,
        ..Default::default()
    })
    .unwrap();
    let stub = SamplerStub(ds.samples.clone());
    let report = evaluate(&stub, &ds.samples, &ds.samples[..50], &small_eval(3)).unwrap();
    assert!((report.rvod.mean - 1.0).abs() < 0.1, "{report:?}");
    assert_eq!(report.seeds, vec![0, 1, 2]);
    assert!(report.mll.mean.is_finite() && report.lsc.mean >= 0.0 && report.lsc.mean <= 1.0);
    let again = evaluate(&stub, &ds.samples, &ds.samples[..50], &small_eval(3)).unwrap();
    assert_eq!(report, again);

    let one = evaluate(&stub, &ds.samples, &ds.samples[..50], &small_eval(1)).unwrap();
    assert_eq!((one.mll.std, one.rvod.std, one.lsc.std), (0.0, 0.0, 0.0));

    // Memorized samples beat uniform noise by a wide margin.
    let noise = uniform_noise_curves(&ds.samples, 200, &mut rng(9)).unwrap();
    let noise_mll = mll(&noise, &ds.samples[..50], report.bandwidth).unwrap();
    assert!(report.mll.mean > noise_mll + 50.0);
}

#[test]
fn evaluate_propagates_errors() {
    let data = random_curves(&mut rng(10), 10, 64);
    assert!(evaluate(&ConstantStub, &data, &data, &small_eval(1)).is_err());
    assert!(evaluate(&LinearStub, &data, &data, &small_eval(0)).is_err());
    assert!(evaluate(&LinearStub, &[], &data, &small_eval(1)).is_err());
}

#[test]
fn report_exports() {
    let report = MetricReport {
        mll: Summary::of(&[10.0, 12.0]),
        rvod: Summary::of(&[0.9, 1.1]),
        lsc: Summary::of(&[0.95, 0.95]),
        runs: 2,
        seeds: vec![4, 5],
        bandwidth: 0.1,
        samples_per_run: 1000,
        lsc_skipped_lines: 0,
    };
    assert!((report.mll.std - 2f64.sqrt()).abs() < 1e-12);
    let kv = report.to_key_values();
    assert!(kv.lines().all(|l| l.contains('=')));
    assert!(kv.contains("rvod=1\n") && kv.contains("seeds=4 5\n"));
    assert_eq!(TABLE_HEADER.split(',').count(), 6);
    let row = report.table_row("superformula-m3", "bezier", Some(3.25));
    assert_eq!(
        row,
        "superformula-m3,bezier,11.000 ± 1.414,1.000 ± 0.141,0.950 ± 0.000,3.25"
    );
}
