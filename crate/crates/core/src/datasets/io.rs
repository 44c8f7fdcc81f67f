//! Point-sequence file formats and the on-disk dataset layout.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{resample_curve, CurveDataset, DatasetError, Normalization, Provenance};
use crate::geometry::{Curve, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    /// Whitespace-separated `x y` per line, optional header line.
    Dat,
    /// Two comma-separated columns after a mandatory header line.
    Csv,
}

impl FileFormat {
    pub fn extension(self) -> &'static str {
        match self {
            FileFormat::Dat => "dat",
            FileFormat::Csv => "csv",
        }
    }
}

impl FromStr for FileFormat {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dat" => Ok(FileFormat::Dat),
            "csv" => Ok(FileFormat::Csv),
            other => Err(DatasetError::InvalidParameters(format!(
                "unknown format {other:?} (expected dat or csv)"
            ))),
        }
    }
}

/// Parses one point sequence. Line numbers in errors are 1-based.
pub fn parse_point_sequence(text: &str, format: FileFormat, source: &str) -> Result<Vec<Point>, DatasetError> {
    let mut points = Vec::new();
    let mut seen_first = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let first = !seen_first;
        seen_first = true;
        if first && format == FileFormat::Csv {
            continue;
        }
        let tokens: Vec<&str> = match format {
            FileFormat::Dat => line.split_whitespace().collect(),
            FileFormat::Csv => line.split(',').map(str::trim).collect(),
        };
        let parsed: Result<Vec<f64>, _> = tokens.iter().map(|t| t.parse::<f64>()).collect();
        match parsed {
            Ok(v) if v.len() == 2 && v.iter().all(|x| x.is_finite()) => points.push([v[0], v[1]]),
            // A .dat file may open with a name line.
            Err(_) if first => continue,
            Ok(v) => {
                return Err(DatasetError::Parse {
                    file: source.to_string(),
                    line: idx + 1,
                    message: format!("expected 2 finite numbers, found {}", v.len()),
                })
            }
            Err(e) => {
                let bad = tokens.iter().find(|t| t.parse::<f64>().is_err()).copied().unwrap_or("");
                return Err(DatasetError::Parse {
                    file: source.to_string(),
                    line: idx + 1,
                    message: format!("invalid number {bad:?}: {e}"),
                });
            }
        }
    }
    Ok(points)
}

/// Scales and translates so the x extent is exactly `[0, 1]`; y is scaled by
/// the same factor.
pub fn normalize_chord(points: &[Point]) -> Result<Vec<Point>, DatasetError> {
    let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p[0]), hi.max(p[0]))
    });
    let span = hi - lo;
    if !(span > 0.0) {
        return Err(DatasetError::Degenerate("zero chord length".into()));
    }
    Ok(points.iter().map(|p| [(p[0] - lo) / span, p[1] / span]).collect())
}

/// Options for [`load_point_sequences`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadOptions {
    pub format: FileFormat,
    pub points: usize,
    pub curvature_weight: f64,
    pub normalize: bool,
}

impl LoadOptions {
    pub fn new(format: FileFormat) -> Self {
        Self {
            format,
            points: crate::CURVE_POINTS,
            curvature_weight: 1.0,
            normalize: true,
        }
    }
}

/// Loads one file, or every file with the format's extension in a directory
/// (sorted by name), and resamples each sequence.
pub fn load_point_sequences(path: &Path, opts: &LoadOptions) -> Result<CurveDataset, DatasetError> {
    let files = if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| io_error(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.is_file()
                    && p.extension()
                        .is_some_and(|x| x.eq_ignore_ascii_case(opts.format.extension()))
            })
            .collect();
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    if files.is_empty() {
        return Err(DatasetError::InvalidParameters(format!(
            "no .{} files in {}",
            opts.format.extension(),
            path.display()
        )));
    }
    let mut samples = Vec::with_capacity(files.len());
    for file in &files {
        let text = fs::read_to_string(file).map_err(|e| io_error(file, e))?;
        let source = file.display().to_string();
        let mut raw = parse_point_sequence(&text, opts.format, &source)?;
        if opts.normalize {
            raw = normalize_chord(&raw)?;
        }
        let curve = resample_curve(&raw, opts.points, opts.curvature_weight).map_err(|e| match e {
            DatasetError::TooFewPoints { needed, got } => DatasetError::SequenceTooShort {
                file: source.clone(),
                needed,
                got,
            },
            other => other,
        })?;
        samples.push(curve);
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "loaded".into());
    Ok(CurveDataset {
        name,
        provenance: Provenance::FileLoaded,
        normalization: opts.normalize.then_some(Normalization::UnitChord),
        samples,
    })
}

fn io_error(path: &Path, e: std::io::Error) -> DatasetError {
    DatasetError::Io(format!("{}: {e}", path.display()))
}

/// Contents of `manifest.json` in a dataset directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub provenance: Provenance,
    pub normalization: Option<Normalization>,
    pub count: usize,
    pub points: usize,
    /// Sample files relative to the manifest.
    pub samples: Vec<String>,
    /// Free-form generation settings.
    #[serde(default)]
    pub source: serde_json::Value,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes `dir/manifest.json` and `dir/samples/NNNNNN.dat` with
/// round-trip-exact coordinates.
pub fn write_dataset(dataset: &CurveDataset, dir: &Path, source: serde_json::Value) -> Result<Manifest, DatasetError> {
    let sample_dir = dir.join("samples");
    fs::create_dir_all(&sample_dir).map_err(|e| io_error(&sample_dir, e))?;
    let mut names = Vec::with_capacity(dataset.samples.len());
    for (i, curve) in dataset.samples.iter().enumerate() {
        let rel = format!("samples/{i:06}.dat");
        let mut text = String::new();
        for p in curve.points() {
            let _ = writeln!(text, "{:?} {:?}", p[0], p[1]);
        }
        let file = dir.join(&rel);
        fs::write(&file, text).map_err(|e| io_error(&file, e))?;
        names.push(rel);
    }
    let manifest = Manifest {
        name: dataset.name.clone(),
        provenance: dataset.provenance,
        normalization: dataset.normalization,
        count: dataset.samples.len(),
        points: dataset.samples.first().map_or(0, Curve::len),
        samples: names,
        source,
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(|e| io_error(&path, e))?;
    Ok(manifest)
}

/// Reads a dataset written by [`write_dataset`]; samples are used as stored.
pub fn read_dataset(dir: &Path) -> Result<CurveDataset, DatasetError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| io_error(&path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| DatasetError::Manifest(format!("{}: {e}", path.display())))?;
    if manifest.samples.len() != manifest.count {
        return Err(DatasetError::Manifest(format!(
            "manifest lists {} files but declares {} samples",
            manifest.samples.len(),
            manifest.count
        )));
    }
    let mut samples = Vec::with_capacity(manifest.count);
    for rel in &manifest.samples {
        let file = dir.join(rel);
        let text = fs::read_to_string(&file).map_err(|e| io_error(&file, e))?;
        let points = parse_point_sequence(&text, FileFormat::Dat, &file.display().to_string())?;
        if points.len() != manifest.points {
            return Err(DatasetError::Manifest(format!(
                "{} has {} points, manifest declares {}",
                file.display(),
                points.len(),
                manifest.points
            )));
        }
        samples.push(Curve::new(points));
    }
    Ok(CurveDataset {
        name: manifest.name,
        provenance: manifest.provenance,
        normalization: manifest.normalization,
        samples,
    })
}
