mod common;

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fs;

use beziergan::datasets::{
    coordinate_rms, generate_superformula_dataset, generate_waterline_dataset, load_point_sequences,
    parse_point_sequence, read_dataset, resample_curve, superformula_curve, write_dataset, DatasetError, FileFormat,
    LoadOptions, Provenance, SuperformulaParams, SuperformulaSpec, WaterlineSpec,
};
use beziergan::geometry::{Curve, Point};
use common::rng;
use rand::Rng;

#[test]
fn superformula_hand_cases() {
    let mut r = rng(1);
    for _ in 0..50 {
        let p = SuperformulaParams::new(r.random_range(1.0..=10.0), r.random_range(1.0..=10.0), 3).unwrap();
        assert_eq!(superformula_curve(&p, 64).points()[0], [1.0, 0.0]);
    }
    let p = SuperformulaParams::new(4.0, 7.0, 4).unwrap();
    assert!((p.radius(FRAC_PI_2) - 1.0).abs() < 1e-15);
    let c = superformula_curve(&p, 64);
    assert!(c.points()[16][0].abs() < 1e-15 && (c.points()[16][1] - 1.0).abs() < 1e-15);
    assert!(SuperformulaParams::new(0.5, 2.0, 3).is_err());
}

#[test]
fn superformula_matches_exact_value() {
    // s1 = 2, s2 = 3, m = 3 at θ = π/3: both terms are (2^-1/2)^5, so
    // r = (2^-3/2)^(-1/2) = 2^(3/4).
    let p = SuperformulaParams::new(2.0, 3.0, 3).unwrap();
    assert!((p.radius(PI / 3.0) - 2f64.powf(0.75)).abs() < 1e-12);
}

#[test]
fn superformula_periodicity_and_fourfold_symmetry() {
    let mut r = rng(2);
    for _ in 0..20 {
        let p = SuperformulaParams::new(r.random_range(1.0..=10.0), r.random_range(1.0..=10.0), 3).unwrap();
        assert!((p.radius(TAU) - p.radius(0.0)).abs() < 1e-9);
        let q = SuperformulaParams { m: 4, ..p };
        let c = superformula_curve(&q, 64);
        let pts = c.points();
        for (k, pt) in pts.iter().enumerate() {
            // Rotating by π/2 maps point k onto point k + 16.
            let rotated = [-pt[1], pt[0]];
            let target = pts[(k + 16) % 64];
            assert!((rotated[0] - target[0]).abs() < 1e-9 && (rotated[1] - target[1]).abs() < 1e-9);
        }
    }
}

#[test]
fn superformula_dataset_properties() {
    let spec = SuperformulaSpec {
        count: 1000,
        seed: 9,
        ..SuperformulaSpec::default()
    };
    let (ds, params) = generate_superformula_dataset(&spec).unwrap();
    assert_eq!(ds.len(), 1000);
    assert_eq!(ds.points(), Some(64));
    assert_eq!(ds.provenance, Provenance::SyntheticSuperformula);
    assert!(ds.samples.iter().all(|c| c.points()[0] == [1.0, 0.0]));
    assert!(params
        .iter()
        .all(|p| (1.0..=10.0).contains(&p.s1) && (1.0..=10.0).contains(&p.s2)));
    let one = SuperformulaSpec {
        count: 1,
        seed: 4,
        ..SuperformulaSpec::default()
    };
    assert_eq!(
        generate_superformula_dataset(&one).unwrap().0,
        generate_superformula_dataset(&one).unwrap().0
    );
    let narrow = SuperformulaSpec {
        count: 200,
        s1_range: (2.0, 3.0),
        s2_range: (5.0, 5.0),
        ..SuperformulaSpec::default()
    };
    let (_, params) = generate_superformula_dataset(&narrow).unwrap();
    assert!(params.iter().all(|p| (2.0..=3.0).contains(&p.s1) && p.s2 == 5.0));
    let bad = SuperformulaSpec {
        s1_range: (0.0, 3.0),
        ..SuperformulaSpec::default()
    };
    assert!(generate_superformula_dataset(&bad).is_err());
}

#[test]
fn straight_segment_resamples_evenly() {
    let pts: Vec<Point> = (0..10).map(|i| [i as f64 / 9.0, 0.0]).collect();
    for weight in [0.0, 1.0, 25.0] {
        let c = resample_curve(&pts, 64, weight).unwrap();
        assert_eq!(c.len(), 64);
        for (j, p) in c.points().iter().enumerate() {
            assert!(
                (p[0] - j as f64 / 63.0).abs() < 1e-6 && p[1].abs() < 1e-6,
                "{weight} {j} {p:?}"
            );
        }
    }
}

fn circle(n: usize) -> Vec<Point> {
    (0..n)
        .map(|k| [(TAU * k as f64 / n as f64).cos(), (TAU * k as f64 / n as f64).sin()])
        .collect()
}

#[test]
fn circle_resampling_stays_on_circle() {
    let c = resample_curve(&circle(32), 64, 0.0).unwrap();
    for p in c.points() {
        assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-3);
    }
}

#[test]
fn constant_curvature_gives_uniform_spacing() {
    let mut closed = circle(32);
    closed.push(closed[0]);
    for input in [circle(32), closed] {
        for weight in [0.0, 0.5, 5.0] {
            let c = resample_curve(&input, 64, weight).unwrap();
            let gaps: Vec<f64> = c
                .points()
                .windows(2)
                .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
                .collect();
            let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
            assert!(gaps.iter().all(|g| (g / mean - 1.0).abs() < 0.05), "weight {weight}");
        }
    }
}

#[test]
fn curvature_weight_concentrates_points() {
    // An ellipse is most curved at the ends of its long axis.
    let pts: Vec<Point> = (0..=80)
        .map(|k| {
            let t = TAU * k as f64 / 80.0;
            [2.0 * t.cos(), 0.5 * t.sin()]
        })
        .collect();
    let gap_at_tip = |c: &Curve| {
        let p = c.points();
        (p[1][0] - p[0][0]).hypot(p[1][1] - p[0][1])
    };
    let uniform = resample_curve(&pts, 64, 0.0).unwrap();
    let weighted = resample_curve(&pts, 64, 2.0).unwrap();
    assert!(gap_at_tip(&weighted) < 0.7 * gap_at_tip(&uniform));
    assert_eq!(weighted.first(), pts[0]);
    assert_eq!(weighted.last(), pts[80]);
}

fn hausdorff(a: &[Point], b: &[Point]) -> f64 {
    let one_way = |a: &[Point], b: &[Point]| {
        a.iter()
            .map(|p| {
                b.iter()
                    .map(|q| (p[0] - q[0]).hypot(p[1] - q[1]))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

#[test]
fn resampling_is_idempotent() {
    let mut r = rng(3);
    for _ in 0..10 {
        let p = SuperformulaParams::new(r.random_range(1.0..4.0), r.random_range(1.0..4.0), 3).unwrap();
        let mut raw = superformula_curve(&p, 200).into_points();
        raw.push(raw[0]);
        for weight in [0.0, 1.0] {
            let once = resample_curve(&raw, 64, weight).unwrap();
            let twice = resample_curve(once.points(), 64, weight).unwrap();
            let d = hausdorff(once.points(), twice.points());
            assert!(d < 1e-4, "weight {weight}: {d}");
        }
    }
}

#[test]
fn resampling_rejects_bad_input() {
    assert!(matches!(
        resample_curve(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], 64, 0.0),
        Err(DatasetError::TooFewPoints { .. })
    ));
    let dup = [[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
    assert!(matches!(
        resample_curve(&dup, 64, 0.0),
        Err(DatasetError::Degenerate(_))
    ));
    assert!(resample_curve(&circle(8), 64, -1.0).is_err());
}

#[test]
fn dat_parsing_rules() {
    let pts = parse_point_sequence("1.0 0.0\n0.0 0.0\n1.0 0.0\n", FileFormat::Dat, "t").unwrap();
    assert_eq!(pts, vec![[1.0, 0.0], [0.0, 0.0], [1.0, 0.0]]);
    let pts = parse_point_sequence("NACA 0012 AIRFOIL\n1.0 0.0\n  0.5\t0.05\n", FileFormat::Dat, "t").unwrap();
    assert_eq!(pts, vec![[1.0, 0.0], [0.5, 0.05]]);
    let text = "name\n1 0\n0.9 0.01\n0.8 0.02\n0.7 0.03\n0.6 0.04\n0.5 O.05\n";
    match parse_point_sequence(text, FileFormat::Dat, "wing.dat") {
        Err(DatasetError::Parse { line, file, .. }) => assert_eq!((line, file.as_str()), (7, "wing.dat")),
        other => panic!("unexpected {other:?}"),
    }
    let err = parse_point_sequence("1 2 3\n", FileFormat::Dat, "t").unwrap_err();
    assert!(err.to_string().contains("line 1"));
}

#[test]
fn csv_parsing_skips_header() {
    let pts = parse_point_sequence("x,y\n0.0, 1.0\n2,3\n", FileFormat::Csv, "t").unwrap();
    assert_eq!(pts, vec![[0.0, 1.0], [2.0, 3.0]]);
    assert!(matches!(
        parse_point_sequence("x,y\n0,1\n2;3\n", FileFormat::Csv, "t"),
        Err(DatasetError::Parse { line: 3, .. })
    ));
}

fn airfoil_text(thickness: f64) -> String {
    // Symmetric section: upper surface from the trailing edge forward, then
    // the lower surface back, scaled by 2 and shifted to test normalization.
    let mut out = String::from("TEST SECTION\n");
    let n = 40;
    let surface = |x: f64| {
        5.0 * thickness * (0.2969 * x.sqrt() - 0.126 * x - 0.3516 * x * x + 0.2843 * x.powi(3) - 0.1036 * x.powi(4))
    };
    for k in 0..=n {
        let x = 0.5 * (1.0 + (PI * k as f64 / n as f64).cos());
        out.push_str(&format!("{} {}\n", 2.0 * x + 3.0, 2.0 * surface(x)));
    }
    for k in 1..=n {
        let x = 0.5 * (1.0 - (PI * k as f64 / n as f64).cos());
        out.push_str(&format!("{} {}\n", 2.0 * x + 3.0, -2.0 * surface(x)));
    }
    out
}

#[test]
fn directory_load_resamples_and_normalizes() {
    let dir = tempfile::tempdir().unwrap();
    for (i, t) in [0.08, 0.12, 0.15].iter().enumerate() {
        fs::write(dir.path().join(format!("foil{i}.dat")), airfoil_text(*t)).unwrap();
    }
    fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let ds = load_point_sequences(dir.path(), &LoadOptions::new(FileFormat::Dat)).unwrap();
    assert_eq!(ds.len(), 3);
    assert_eq!(ds.points(), Some(64));
    assert_eq!(ds.provenance, Provenance::FileLoaded);
    for c in &ds.samples {
        let (lo, hi) = c.points().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| {
            (l.min(p[0]), h.max(p[0]))
        });
        // The leading edge falls between output points.
        assert!((0.0..1e-3).contains(&lo) && (hi - 1.0).abs() < 1e-12, "{lo} {hi}");
        assert!((c.first()[1] - c.last()[1]).abs() < 1e-12 && c.first()[0] == c.last()[0]);
    }

    fs::write(dir.path().join("zbroken.dat"), "1 0\n0.5 0.1\nx y\n").unwrap();
    let err = load_point_sequences(dir.path(), &LoadOptions::new(FileFormat::Dat)).unwrap_err();
    assert!(matches!(err, DatasetError::Parse { line: 3, .. }), "{err}");
    fs::write(dir.path().join("zbroken.dat"), "1 0\n0.5 0.1\n0 0\n").unwrap();
    let err = load_point_sequences(dir.path(), &LoadOptions::new(FileFormat::Dat)).unwrap_err();
    assert!(matches!(err, DatasetError::SequenceTooShort { .. }), "{err}");
}

#[test]
fn waterlines_are_pinned_at_the_bow() {
    let ds = generate_waterline_dataset(&WaterlineSpec {
        count: 20,
        seed: 3,
        ..WaterlineSpec::default()
    })
    .unwrap();
    assert_eq!(ds.points(), Some(64));
    for c in &ds.samples {
        assert_eq!(c.last(), [1.0, 0.0]);
        assert_eq!(c.first()[0], 0.0);
        assert!(c.points().iter().all(|p| p[1] >= -1e-9 && p[1] <= 0.16 + 1e-6));
    }
}

#[test]
fn dataset_directory_round_trip() {
    let (ds, params) = generate_superformula_dataset(&SuperformulaSpec {
        count: 5,
        seed: 1,
        ..SuperformulaSpec::default()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_dataset(&ds, dir.path(), serde_json::to_value(&params).unwrap()).unwrap();
    assert_eq!(manifest.count, 5);
    assert_eq!(manifest.points, 64);
    assert_eq!(read_dataset(dir.path()).unwrap(), ds);
    fs::remove_file(dir.path().join("samples/000003.dat")).unwrap();
    assert!(read_dataset(dir.path()).is_err());
}

#[test]
fn rms_of_unit_points() {
    let c = Curve::new(vec![[1.0, 0.0], [0.0, -1.0]]);
    assert!((coordinate_rms(&[c]) - (0.5f64).sqrt()).abs() < 1e-15);
}
