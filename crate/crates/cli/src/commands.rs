//! Implementations of the subcommands.

use std::fs;
use std::path::Path;

use anyhow::Context;
use beziergan::datasets::{
    coordinate_rms, generate_superformula_dataset, generate_waterline_dataset, load_point_sequences, read_dataset,
    write_dataset, CurveDataset, DatasetError, FileFormat, LoadOptions, SuperformulaSpec, WaterlineSpec,
};
use beziergan::geometry::{Axis, SymmetrySpec};
use beziergan::metrics::{evaluate, EvalConfig, MetricError, TABLE_HEADER};
use beziergan::networks::{
    Constraint, DiscriminatorConfig, DiscriminatorModel, GeneratorConfig, GeneratorModel, NetworkError, OutputKind,
};
use beziergan::training::{load_checkpoint, Lambdas, TrainConfig, TrainError, Trainer};
use serde::Serialize;

use crate::args::{
    ConstraintArg, DatasetCommand, EvaluateArgs, FormatArg, GenerateArgs, LoadArgs, OutputArg, SuperformulaArgs,
    TrainArgs, WaterlineArgs,
};
use crate::design::{clamp_latent, generate_designs, noise_from_seed};
use crate::export::{dat_text, svg_sheet, Panel};
use crate::usage;

pub const CONFIG_ECHO: &str = "config.json";

/// Writes `dir/config.json` with the command name, its arguments and any
/// resolved settings.
pub fn write_echo<A: Serialize>(
    dir: &Path,
    command: &str,
    args: &A,
    resolved: serde_json::Value,
) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let echo = serde_json::json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "args": args,
        "resolved": resolved,
    });
    let path = dir.join(CONFIG_ECHO);
    fs::write(&path, serde_json::to_string_pretty(&echo)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn dataset_error(e: DatasetError) -> anyhow::Error {
    match e {
        DatasetError::InvalidParameters(m) => usage(m),
        other => other.into(),
    }
}

fn summarize(ds: &CurveDataset) {
    let points = ds.points().map_or_else(|| "mixed".to_string(), |p| p.to_string());
    println!(
        "count={} points={} provenance={}",
        ds.len(),
        points,
        serde_json::to_string(&ds.provenance).unwrap_or_default()
    );
}

pub fn dataset(cmd: &DatasetCommand) -> anyhow::Result<()> {
    match cmd {
        DatasetCommand::Superformula(a) => superformula(a),
        DatasetCommand::Load(a) => load(a),
        DatasetCommand::Waterline(a) => waterline(a),
    }
}

fn superformula(a: &SuperformulaArgs) -> anyhow::Result<()> {
    let spec = SuperformulaSpec {
        count: a.count,
        s1_range: (a.s1_min, a.s1_max),
        s2_range: (a.s2_min, a.s2_max),
        m: a.m,
        points: a.points,
        seed: a.seed,
    };
    let (ds, params) = generate_superformula_dataset(&spec).map_err(dataset_error)?;
    let source = serde_json::json!({ "spec": spec, "params": params });
    write_dataset(&ds, &a.out, source)?;
    write_echo(&a.out, "dataset superformula", a, serde_json::to_value(&spec)?)?;
    summarize(&ds);
    Ok(())
}

fn load(a: &LoadArgs) -> anyhow::Result<()> {
    let format = match a.format {
        FormatArg::Dat => FileFormat::Dat,
        FormatArg::Csv => FileFormat::Csv,
    };
    let opts = LoadOptions {
        format,
        points: a.points,
        curvature_weight: a.curvature_weight,
        normalize: !a.no_normalize,
    };
    let ds = load_point_sequences(&a.dir, &opts).map_err(dataset_error)?;
    let source = serde_json::json!({ "path": a.dir, "curvature_weight": a.curvature_weight });
    write_dataset(&ds, &a.out, source)?;
    write_echo(&a.out, "dataset load", a, serde_json::Value::Null)?;
    summarize(&ds);
    Ok(())
}

fn waterline(a: &WaterlineArgs) -> anyhow::Result<()> {
    let spec = WaterlineSpec {
        count: a.count,
        points: a.points,
        curvature_weight: a.curvature_weight,
        seed: a.seed,
        ..WaterlineSpec::default()
    };
    let ds = generate_waterline_dataset(&spec).map_err(dataset_error)?;
    write_dataset(&ds, &a.out, serde_json::to_value(&spec)?)?;
    write_echo(&a.out, "dataset waterline", a, serde_json::to_value(&spec)?)?;
    summarize(&ds);
    Ok(())
}

/// Parses `none`, `axis-x`, `axis-y` or `rotational:N`.
pub fn parse_symmetry(text: &str) -> anyhow::Result<SymmetrySpec> {
    match text {
        "none" => Ok(SymmetrySpec::None),
        "axis-x" => Ok(SymmetrySpec::Axis { axis: Axis::X }),
        "axis-y" => Ok(SymmetrySpec::Axis { axis: Axis::Y }),
        other => {
            let parts = other
                .strip_prefix("rotational:")
                .and_then(|n| n.parse::<usize>().ok())
                .ok_or_else(|| {
                    usage(format!(
                        "unknown symmetry {other:?} (none, axis-x, axis-y, rotational:N)"
                    ))
                })?;
            SymmetrySpec::rotational(parts).map_err(|e| usage(e.to_string()))
        }
    }
}

fn train_error(e: TrainError) -> anyhow::Error {
    match e {
        TrainError::Config(m) | TrainError::Network(NetworkError::Config(m)) => usage(m),
        other => other.into(),
    }
}

pub fn train(a: &TrainArgs) -> anyhow::Result<()> {
    let ds = read_dataset(&a.data).with_context(|| format!("reading dataset {}", a.data.display()))?;
    let points = ds
        .points()
        .ok_or_else(|| anyhow::anyhow!("dataset samples have differing point counts"))?;
    let mut trainer = match &a.resume {
        Some(path) => {
            let ckpt = load_checkpoint(path).with_context(|| format!("loading {}", path.display()))?;
            log::info!("resuming from step {}", ckpt.step);
            Trainer::resume(&ds.samples, ckpt).map_err(train_error)?
        }
        None => {
            let scale = coordinate_rms(&ds.samples);
            let gen_cfg = GeneratorConfig {
                latent_dim: a.latent_dim,
                noise_dim: a.noise_dim,
                degree: a.degree,
                kumaraswamy_m: a.kumaraswamy_m,
                symmetry: parse_symmetry(&a.symmetry)?,
                constraint: match a.constraint {
                    ConstraintArg::Open => Constraint::Open,
                    ConstraintArg::Closed => Constraint::Closed,
                    ConstraintArg::PinnedLast => Constraint::PinnedLast { point: [1.0, 0.0] },
                },
                output: match a.output {
                    OutputArg::Bezier => OutputKind::Bezier,
                    OutputArg::Direct => OutputKind::DirectPoints,
                },
                points,
                coord_scale: scale,
                ..GeneratorConfig::default()
            };
            let disc_cfg = DiscriminatorConfig {
                latent_dim: a.latent_dim,
                points,
                input_scale: scale,
                ..DiscriminatorConfig::default()
            };
            let cfg = TrainConfig {
                lr_d: a.lr_d,
                lr_g: a.lr_g,
                batch_size: a.batch_size,
                steps: a.steps,
                lambdas: Lambdas {
                    info: a.lambda_info,
                    r1: a.lambda_r1,
                    r2: a.lambda_r2,
                    r3: a.lambda_r3,
                    r4: a.lambda_r4,
                },
                seed: a.seed,
                eval_every: a.eval_every,
                checkpoint_every: a.checkpoint_every,
                record_wall_time: a.record_wall_time,
                ..TrainConfig::default()
            };
            let gen = GeneratorModel::new(gen_cfg, a.seed).map_err(|e| usage(e.to_string()))?;
            let disc = DiscriminatorModel::new(disc_cfg, a.seed.wrapping_add(1)).map_err(|e| usage(e.to_string()))?;
            Trainer::new(&ds.samples, gen, disc, cfg).map_err(train_error)?
        }
    };
    let resolved = serde_json::json!({
        "train": trainer.config(),
        "generator": trainer.generator().config(),
        "discriminator": trainer.discriminator().config(),
    });
    write_echo(&a.out, "train", a, resolved)?;
    let written = trainer.run_with_checkpoints(a.steps, Some(&a.out))?;
    fs::write(a.out.join("history.csv"), trainer.history().to_csv())?;
    if let Some(last) = trainer.history().records.last() {
        println!("step={} L_D={} L_G={} L_I={}", last.step, last.l_d, last.l_g, last.l_i);
    }
    for path in written {
        println!("checkpoint={}", path.display());
    }
    Ok(())
}

fn parse_latent(text: &str, dim: usize) -> anyhow::Result<Vec<f64>> {
    let values: Vec<f64> = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("invalid latent value {t:?}")))
        })
        .collect::<anyhow::Result<_>>()?;
    if values.len() != dim {
        return Err(usage(format!(
            "latent has {} values, checkpoint expects latent dim {dim}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(usage("latent values must be finite"));
    }
    Ok(values)
}

/// Latent grid of `k` evenly spaced values per dimension, first dimension
/// slowest.
pub fn latent_grid(k: usize, dim: usize) -> Vec<Vec<f64>> {
    let value = |i: usize| if k == 1 { 0.5 } else { i as f64 / (k - 1) as f64 };
    let total = k.pow(dim as u32);
    (0..total)
        .map(|mut n| {
            let mut v = vec![0.0; dim];
            for d in (0..dim).rev() {
                v[d] = value(n % k);
                n /= k;
            }
            v
        })
        .collect()
}

pub fn generate(a: &GenerateArgs) -> anyhow::Result<()> {
    let ckpt = load_checkpoint(&a.checkpoint).with_context(|| format!("loading {}", a.checkpoint.display()))?;
    let model = ckpt.generator;
    let dim = model.config().latent_dim;
    let noise = noise_from_seed(a.noise_seed, model.config().noise_dim);
    let (latents, names, cells): (Vec<Vec<f64>>, Vec<String>, Vec<(usize, usize)>) = match (&a.latent, a.grid) {
        (Some(text), _) => {
            let (latent, clamped) = clamp_latent(&parse_latent(text, dim)?);
            if clamped {
                log::warn!("latent clamped to [0, 1]: {latent:?}");
            }
            (vec![latent], vec!["curve".into()], vec![(0, 0)])
        }
        (None, Some(k)) => {
            if k == 0 || !(1..=3).contains(&dim) {
                return Err(usage(format!(
                    "--grid needs k >= 1 and latent dim 1 to 3 (checkpoint has {dim})"
                )));
            }
            let grid = latent_grid(k, dim);
            let mut names = Vec::new();
            let mut cells = Vec::new();
            for n in 0..grid.len() {
                let idx: Vec<usize> = (0..dim).rev().map(|d| (n / k.pow(d as u32)) % k).collect();
                let label: Vec<String> = idx.iter().map(usize::to_string).collect();
                names.push(format!("grid-{}", label.join("-")));
                // First free dimension runs along x, the next up the page; 3-D
                // slices stack vertically with a blank row between them.
                cells.push(match dim {
                    1 => (0, idx[0]),
                    2 => (k - 1 - idx[1], idx[0]),
                    _ => (idx[0] * (k + 1) + k - 1 - idx[2], idx[1]),
                });
            }
            (grid, names, cells)
        }
        (None, None) => return Err(usage("give --latent or --grid")),
    };
    let designs = generate_designs(&model, &latents, &noise)?;
    fs::create_dir_all(&a.out)?;
    let mut panels = Vec::new();
    for ((design, name), (row, col)) in designs.iter().zip(&names).zip(&cells) {
        fs::write(a.out.join(format!("{name}.dat")), dat_text(design.curve.points()))?;
        panels.push(Panel {
            row: *row,
            col: *col,
            label: name.clone(),
            points: design.curve.points().to_vec(),
        });
    }
    if let (1, Some(prim)) = (designs.len(), designs.first().and_then(|d| d.prim.as_ref())) {
        let mut text = String::new();
        for (p, w) in prim.control_points().iter().zip(prim.weights()) {
            text.push_str(&format!("{:.6} {:.6} {:.6}\n", p[0], p[1], w));
        }
        fs::write(a.out.join("control-points.dat"), text)?;
    }
    fs::write(a.out.join("sheet.svg"), svg_sheet(&panels))?;
    let resolved = serde_json::json!({ "latents": latents, "noise": noise });
    write_echo(&a.out, "generate", a, resolved)?;
    println!("curves={} out={}", designs.len(), a.out.display());
    Ok(())
}

pub fn evaluate_cmd(a: &EvaluateArgs) -> anyhow::Result<()> {
    if !(0.0..1.0).contains(&a.test_fraction) || a.test_fraction == 0.0 {
        return Err(usage("--test-fraction must lie in (0, 1)"));
    }
    let ckpt = load_checkpoint(&a.checkpoint).with_context(|| format!("loading {}", a.checkpoint.display()))?;
    let ds = read_dataset(&a.data).with_context(|| format!("reading dataset {}", a.data.display()))?;
    let (reference, test) = ds.split(a.test_fraction);
    if reference.is_empty() || test.is_empty() {
        return Err(usage(format!("dataset of {} curves is too small to split", ds.len())));
    }
    let cfg = EvalConfig {
        runs: a.runs,
        samples: a.samples,
        seed: a.seed,
        bandwidth: a.bandwidth,
        lsc_lines: a.lsc_lines,
        lsc_points: a.lsc_points,
        ..EvalConfig::default()
    };
    let report = evaluate(&ckpt.generator, &reference, &test, &cfg).map_err(|e| match e {
        MetricError::Config(m) => usage(m),
        MetricError::InvalidBandwidth(_) => usage(e.to_string()),
        other => other.into(),
    })?;
    let minutes = ckpt
        .history
        .records
        .last()
        .map(|r| r.seconds / 60.0)
        .filter(|m| *m > 0.0);
    fs::create_dir_all(&a.out)?;
    let kv = report.to_key_values();
    fs::write(a.out.join("report.txt"), &kv)?;
    let table = format!("{TABLE_HEADER}\n{}\n", report.table_row(&a.example, &a.model, minutes));
    fs::write(a.out.join("report.csv"), &table)?;
    write_echo(&a.out, "evaluate", a, serde_json::to_value(&cfg)?)?;
    print!("{kv}");
    Ok(())
}
