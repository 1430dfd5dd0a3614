//! On-disk formats: dataset CSV, model JSON and grid JSON.
//!
//! Floats are written with Rust's shortest round-trip formatting and parsed
//! exactly, so writing and re-reading a file never perturbs a value.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use shapereg::refmodels::GprModel;
use shapereg::shapeops::GridFunction;
use shapereg::{Dataset, PolynomialModel, ShapeConstraintSpec};

use crate::error::CliError;

pub const MODEL_FORMAT: &str = "shapereg-model";
pub const GRID_FORMAT: &str = "shapereg-grid";
pub const FORMAT_VERSION: u32 = 1;

/// Rows of `x1..xd[,target]` with a header line.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_table(path: &Path) -> Result<Table, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::malformed(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(CliError::malformed(path, "missing header row"));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::malformed(path, e))?;
        if record.len() != header.len() {
            return Err(CliError::malformed(
                path,
                format!("row {} has {} fields, header has {}", line + 1, record.len(), header.len()),
            ));
        }
        let row = record
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        CliError::malformed(path, format!("row {}: bad number {field:?}", line + 1))
                    })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// CSV text with a header row; floats in shortest round-trip form.
pub fn table_bytes(header: &[String], rows: &[Vec<f64>]) -> Vec<u8> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

pub fn write_table(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<(), CliError> {
    fs::write(path, table_bytes(header, rows)).map_err(|e| CliError::io(path, e))
}

pub fn dataset_header(dim: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=dim).map(|j| format!("x{j}")).collect();
    h.push("target".into());
    h
}

/// A dataset file: the last column is the target.
pub fn read_dataset(path: &Path) -> Result<Dataset, CliError> {
    let table = read_table(path)?;
    if table.header.len() < 2 {
        return Err(CliError::malformed(path, "need at least one input column and a target column"));
    }
    let d = table.header.len() - 1;
    let (inputs, targets) = table
        .rows
        .into_iter()
        .map(|mut r| {
            let t = r.pop().expect("nonempty row");
            (r, t)
        })
        .unzip();
    Dataset::new(inputs, targets).map_err(|e| CliError::malformed(path, format!("{e} ({d} inputs)")))
}

pub fn write_dataset(path: &Path, data: &Dataset) -> Result<(), CliError> {
    let rows: Vec<Vec<f64>> = data
        .inputs()
        .iter()
        .zip(data.targets())
        .map(|(x, &t)| {
            let mut r = x.clone();
            r.push(t);
            r
        })
        .collect();
    write_table(path, &dataset_header(data.dim()), &rows)
}

/// Input points for prediction: `dim` input columns, optionally followed by a
/// `target` column which is ignored.
pub fn read_points(path: &Path, dim: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let table = read_table(path)?;
    let cols = table.header.len();
    let with_target = cols == dim + 1 && table.header[dim] == "target";
    if cols != dim && !with_target {
        return Err(CliError::validation(format!(
            "{}: {cols} columns but the model expects {dim} inputs",
            path.display()
        )));
    }
    Ok(table
        .rows
        .into_iter()
        .map(|mut r| {
            r.truncate(dim);
            r
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Predictor {
    Polynomial(PolynomialModel),
    Gpr(GprModel),
}

impl Predictor {
    pub fn dim(&self) -> usize {
        match self {
            Predictor::Polynomial(m) => m.dim(),
            Predictor::Gpr(m) => m.dim(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, CliError> {
        match self {
            Predictor::Polynomial(m) => m.predict(x).map_err(CliError::validation),
            Predictor::Gpr(m) => m.predict(x).map_err(CliError::validation),
        }
    }

    /// Raw input box spanned by the training data.
    pub fn raw_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let scaling = match self {
            Predictor::Polynomial(m) => m.input_scaling(),
            Predictor::Gpr(m) => m.input_scaling(),
        };
        let b = scaling.raw_box();
        (b.lower().to_vec(), b.upper().to_vec())
    }
}

/// Human-oriented summary stored next to the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub method: String,
    pub status: String,
    pub iterations: usize,
    pub total_constraints: usize,
    pub added_points: Vec<usize>,
    pub rmse: f64,
    /// Raw-unit violation tolerance per constraint entry.
    pub tolerances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub model: Predictor,
    pub constraints: ShapeConstraintSpec,
    pub report: ReportSummary,
}

impl ModelFile {
    pub fn new(model: Predictor, constraints: ShapeConstraintSpec, report: ReportSummary) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: FORMAT_VERSION,
            model,
            constraints,
            report,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFile {
    pub format: String,
    pub version: u32,
    pub grid: GridFunction,
}

impl GridFile {
    pub fn new(grid: GridFunction) -> Self {
        Self {
            format: GRID_FORMAT.into(),
            version: FORMAT_VERSION,
            grid,
        }
    }
}

/// Header fields shared by every JSON document.
#[derive(Deserialize)]
struct Envelope {
    format: String,
    version: u32,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, format: &str) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let env: Envelope = serde_json::from_str(&text).map_err(|e| CliError::malformed(path, e))?;
    if env.format != format {
        return Err(CliError::malformed(
            path,
            format!("expected a {format} document, found {}", env.format),
        ));
    }
    if env.version != FORMAT_VERSION {
        return Err(CliError::malformed(
            path,
            format!("unsupported {format} version {} (expected {FORMAT_VERSION})", env.version),
        ));
    }
    serde_json::from_str(&text).map_err(|e| CliError::malformed(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::malformed(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_model(path: &Path) -> Result<ModelFile, CliError> {
    read_json(path, MODEL_FORMAT)
}

pub fn write_model(path: &Path, model: &ModelFile) -> Result<(), CliError> {
    write_json(path, model)
}

pub fn read_grid(path: &Path) -> Result<GridFile, CliError> {
    read_json(path, GRID_FORMAT)
}

pub fn write_grid(path: &Path, grid: &GridFile) -> Result<(), CliError> {
    write_json(path, grid)
}

/// Reads either document kind, telling them apart by the `format` field.
pub enum Source {
    Model(ModelFile),
    Grid(GridFunction),
}

pub fn read_source(path: &Path) -> Result<Source, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let env: Envelope = serde_json::from_str(&text).map_err(|e| CliError::malformed(path, e))?;
    match env.format.as_str() {
        MODEL_FORMAT => read_model(path).map(Source::Model),
        GRID_FORMAT => read_grid(path).map(|g| Source::Grid(g.grid)),
        other => Err(CliError::malformed(path, format!("unknown document format {other:?}"))),
    }
}
