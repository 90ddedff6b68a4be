//! On-disk artifacts: dataset and sample CSVs, model and report JSON, and
//! JSON-lines trial logs.
//!
//! Floats are written in Rust's shortest round-trip decimal form, so every
//! reader recovers the exact `f64` that was written. Output bytes depend only
//! on the values written.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::calib::{CalibrationDataset, CalibrationReport, CalibrationSample, ModelKind, ModelState, Provenance, RegressionModel};
use crate::calib::tree::Node;
use crate::signal::SpectrumFeatures;
use crate::trial::{CampaignReport, StrawberrySample, TickRecord, TrialLog};
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

const DATASET_PREFIX: [&str; 3] = ["subsection", "depth_mm", "force_n"];
const SAMPLES_HEADER: [&str; 3] = ["id", "weight_n", "peduncle_diameter_mm"];

pub fn feature_column(i: usize) -> String {
    format!("f_{i:03}")
}

pub fn dataset_header(bands: usize) -> Vec<String> {
    DATASET_PREFIX
        .iter()
        .map(|s| s.to_string())
        .chain((0..bands).map(feature_column))
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => parse_err(path, line, format!("{kind:?}")),
    }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Parses a JSON document and checks its `format_version` before the caller
/// deserializes the rest.
fn read_versioned(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| parse_err(path, e.line(), e.to_string()))?;
    match value.get("format_version").and_then(Value::as_u64) {
        Some(v) if v == u64::from(FORMAT_VERSION) => Ok(value),
        Some(v) => Err(Error::Format(format!(
            "{}: unsupported format_version {v} (this build reads version {FORMAT_VERSION})",
            path.display()
        ))),
        None => Err(Error::Format(format!("{}: missing format_version", path.display()))),
    }
}

pub fn write_dataset(ds: &CalibrationDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(dataset_header(ds.dim())).map_err(|e| csv_err(path, e))?;
    let mut row = Vec::with_capacity(3 + ds.dim());
    for s in &ds.samples {
        row.clear();
        row.push(s.subsection.to_string());
        row.push(s.depth.to_string());
        row.push(s.force.to_string());
        row.extend(s.features.as_slice().iter().map(f64::to_string));
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    rec[i]
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("column {name}: cannot parse {:?}", &rec[i])))
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(open(path)?))
}

/// Reads a calibration CSV. The header must be exactly
/// `subsection,depth_mm,force_n,f_000,...` with consecutive feature columns.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<CalibrationDataset> {
    let path = path.as_ref();
    let mut records = reader(path)?.into_records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| csv_err(path, e))?,
        None => return Err(parse_err(path, 1, "missing header")),
    };
    let bands = header.len().saturating_sub(DATASET_PREFIX.len());
    if bands == 0 || header.iter().ne(dataset_header(bands).iter().map(String::as_str)) {
        return Err(parse_err(
            path,
            1,
            format!(
                "header must be {},f_000,... ; got {:?}",
                DATASET_PREFIX.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut samples = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(parse_err(
                path,
                line,
                format!("expected {} columns, found {}", header.len(), rec.len()),
            ));
        }
        let bands = (0..bands)
            .map(|i| field::<f64>(path, line, &rec, 3 + i, &feature_column(i)))
            .collect::<Result<Vec<_>>>()?;
        samples.push(CalibrationSample {
            subsection: field(path, line, &rec, 0, "subsection")?,
            depth: field(path, line, &rec, 1, "depth_mm")?,
            force: field(path, line, &rec, 2, "force_n")?,
            features: SpectrumFeatures::new(bands),
        });
    }
    CalibrationDataset::new(
        samples,
        Provenance::External {
            source: path.display().to_string(),
        },
    )
}

pub fn write_samples(samples: &[StrawberrySample], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(SAMPLES_HEADER).map_err(|e| csv_err(path, e))?;
    for s in samples {
        w.write_record([s.id.to_string(), s.weight.to_string(), s.peduncle_diameter.to_string()])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a strawberry sample table with header `id,weight_n,peduncle_diameter_mm`.
pub fn read_samples(path: impl AsRef<Path>) -> Result<Vec<StrawberrySample>> {
    let path = path.as_ref();
    let mut records = reader(path)?.into_records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| csv_err(path, e))?,
        None => return Err(parse_err(path, 1, "missing header")),
    };
    if header.iter().ne(SAMPLES_HEADER) {
        return Err(parse_err(path, 1, format!("header must be {}", SAMPLES_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != SAMPLES_HEADER.len() {
            return Err(parse_err(path, line, format!("expected 3 columns, found {}", rec.len())));
        }
        let s = StrawberrySample {
            id: field(path, line, &rec, 0, "id")?,
            weight: field(path, line, &rec, 1, "weight_n")?,
            peduncle_diameter: field(path, line, &rec, 2, "peduncle_diameter_mm")?,
        };
        s.validate().map_err(|e| parse_err(path, line, e.to_string()))?;
        out.push(s);
    }
    if out.is_empty() {
        return Err(Error::Dataset(format!("{}: no samples", path.display())));
    }
    Ok(out)
}

#[derive(Serialize)]
struct ModelFileRef<'a> {
    format_version: u32,
    #[serde(flatten)]
    model: &'a RegressionModel,
}

#[derive(Deserialize)]
struct ModelFile {
    #[allow(dead_code)]
    format_version: u32,
    #[serde(flatten)]
    model: RegressionModel,
}

pub fn save_model(model: &RegressionModel, path: impl AsRef<Path>) -> Result<()> {
    write_json(
        &ModelFileRef {
            format_version: FORMAT_VERSION,
            model,
        },
        path.as_ref(),
    )
}

pub fn load_model(path: impl AsRef<Path>) -> Result<RegressionModel> {
    let path = path.as_ref();
    let value = read_versioned(path)?;
    for key in ["spec", "standardization", "state"] {
        if value.get(key).is_none() {
            return Err(Error::Format(format!("{}: missing `{key}`", path.display())));
        }
    }
    let file: ModelFile =
        serde_json::from_value(value).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    check_model(&file.model).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    Ok(file.model)
}

/// Structural consistency of a deserialized model.
pub fn check_model(m: &RegressionModel) -> Result<()> {
    m.spec.validate()?;
    let d = m.standardization.mean.len();
    let bad = |msg: String| Err(Error::Format(msg));
    if d == 0 || m.standardization.scale.len() != d {
        return bad("standardization mean/scale lengths differ or are empty".into());
    }
    if m.standardization.scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return bad("standardization scales must be finite and > 0".into());
    }
    match (&m.state, m.spec.kind) {
        (ModelState::Linear(s), ModelKind::Linear) if s.weights.len() == d => Ok(()),
        (ModelState::Tree(s), ModelKind::Tree)
            if s.is_well_formed()
                && s.nodes
                    .iter()
                    .all(|n| !matches!(n, Node::Split { feature, .. } if *feature >= d)) =>
        {
            Ok(())
        }
        (ModelState::Gp(s), kind) if kind.kernel().is_some() => {
            if m.spec.gp.is_none() {
                bad("GP model without resolved hyperparameters".into())
            } else if s.alpha.len() != s.inputs.len() || s.inputs.iter().any(|x| x.len() != d) {
                bad("GP state dimensions are inconsistent".into())
            } else {
                Ok(())
            }
        }
        (_, kind) => bad(format!("state does not match model kind {kind}")),
    }
}

/// One JSON object per tick; an empty log gives an empty file.
pub fn write_trial_log(log: &TrialLog, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    for r in &log.records {
        serde_json::to_writer(&mut w, r).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_trial_records(path: impl AsRef<Path>) -> Result<Vec<TickRecord>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for (i, line) in BufReader::new(open(path)?).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| parse_err(path, i + 1, e.to_string()))?);
    }
    Ok(out)
}

pub fn write_report(report: &CampaignReport, path: impl AsRef<Path>) -> Result<()> {
    write_json(report, path.as_ref())
}

pub fn read_report(path: impl AsRef<Path>) -> Result<CampaignReport> {
    let path = path.as_ref();
    serde_json::from_value(read_versioned(path)?).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn write_calibration_report(report: &CalibrationReport, path: impl AsRef<Path>) -> Result<()> {
    write_json(report, path.as_ref())
}

pub fn read_calibration_report(path: impl AsRef<Path>) -> Result<CalibrationReport> {
    let path = path.as_ref();
    serde_json::from_value(read_versioned(path)?).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// File name for one trial's log inside a campaign directory. `trial` is the
/// zero-based index; names count trials from 1.
pub fn trial_log_name(sample_id: u32, trial: usize) -> PathBuf {
    PathBuf::from(format!("trial_s{sample_id}_t{}.jsonl", trial + 1))
}
