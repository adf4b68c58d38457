use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Relative slack allowed outside the configured bounds before ingestion
/// rejects a value.
pub const BOUND_TOLERANCE: f64 = 1e-9;

/// Physical range of one input, mapped affinely onto `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::Config(format!("invalid bounds [{lower}, {upper}]")));
        }
        Ok(Bounds { lower, upper })
    }

    pub fn to_canonical(&self, x: f64) -> f64 {
        2.0 * (x - self.lower) / (self.upper - self.lower) - 1.0
    }

    pub fn from_canonical(&self, t: f64) -> f64 {
        self.lower + 0.5 * (t + 1.0) * (self.upper - self.lower)
    }
}

/// Input-output pairs. Inputs are stored in the reference coordinates of
/// the basis (after any affine mapping).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: DMatrix<f64>,
    pub outputs: DVector<f64>,
    /// Input column names followed by the output name.
    pub columns: Vec<String>,
    pub source: Option<PathBuf>,
}

impl Dataset {
    pub fn new(inputs: DMatrix<f64>, outputs: DVector<f64>, columns: Vec<String>) -> Result<Self> {
        if inputs.nrows() != outputs.len() {
            return Err(Error::Data(format!(
                "{} input rows but {} outputs",
                inputs.nrows(),
                outputs.len()
            )));
        }
        if outputs.is_empty() {
            return Err(Error::Data("dataset has no rows".into()));
        }
        if columns.len() != inputs.ncols() + 1 {
            return Err(Error::Data("need one name per input plus the output".into()));
        }
        if inputs.iter().chain(outputs.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Data("dataset contains non-finite values".into()));
        }
        Ok(Dataset {
            inputs,
            outputs,
            columns,
            source: None,
        })
    }

    /// Default column names `x1..xd, y`.
    pub fn unnamed(inputs: DMatrix<f64>, outputs: DVector<f64>) -> Result<Self> {
        let mut cols: Vec<String> = (1..=inputs.ncols()).map(|i| format!("x{i}")).collect();
        cols.push("y".into());
        Dataset::new(inputs, outputs, cols)
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn output_name(&self) -> &str {
        self.columns.last().map(String::as_str).unwrap_or("y")
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let inputs = self.inputs.select_rows(rows.iter());
        let outputs = DVector::from_iterator(rows.len(), rows.iter().map(|&r| self.outputs[r]));
        Dataset {
            inputs,
            outputs,
            columns: self.columns.clone(),
            source: self.source.clone(),
        }
    }

    /// Sample standard deviation of the outputs (zero for a single row).
    pub fn output_sd(&self) -> f64 {
        let n = self.len() as f64;
        if self.len() < 2 {
            return 0.0;
        }
        let mean = self.outputs.mean();
        (self.outputs.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    }
}

fn parse_cell(s: &str, row: usize, col: usize) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Data(format!("non-numeric value {s:?} at row {row}, column {col}")))?;
    if !v.is_finite() {
        return Err(Error::Data(format!("non-finite value at row {row}, column {col}")));
    }
    Ok(v)
}

/// Reads a numeric CSV with a header row. Rows and columns in errors are
/// 1-based file positions, so the first data row is row 2.
fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Data(format!("{}: missing header row", path.display())));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::Data(format!("{}: row {row}: {e}", path.display())))?;
        if rec.len() != header.len() {
            return Err(Error::Data(format!(
                "{}: row {row} has {} fields, header has {}",
                path.display(),
                rec.len(),
                header.len()
            )));
        }
        let vals = rec
            .iter()
            .enumerate()
            .map(|(c, s)| parse_cell(s, row, c + 1))
            .collect::<Result<Vec<f64>>>()
            .map_err(|e| match e {
                Error::Data(m) => Error::Data(format!("{}: {m}", path.display())),
                other => other,
            })?;
        rows.push(vals);
    }
    Ok((header, rows))
}

/// Reads a dataset whose last column is the output. With `bounds`, each
/// input column is mapped from its physical range onto `[-1, 1]`; values
/// outside the range by more than [`BOUND_TOLERANCE`] (relative to its
/// width) are rejected.
pub fn ingest_csv(path: &Path, bounds: Option<&[Bounds]>) -> Result<Dataset> {
    let (header, rows) = read_table(path)?;
    if header.len() < 2 {
        return Err(Error::Data(format!(
            "{}: need at least one input column and the output column",
            path.display()
        )));
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    let d = header.len() - 1;
    if let Some(b) = bounds {
        if b.len() != d {
            return Err(Error::Config(format!(
                "{} bounds given for {d} input columns in {}",
                b.len(),
                path.display()
            )));
        }
    }
    let mut inputs = DMatrix::zeros(rows.len(), d);
    let mut outputs = DVector::zeros(rows.len());
    for (r, vals) in rows.iter().enumerate() {
        for c in 0..d {
            let mut v = vals[c];
            if let Some(b) = bounds {
                let t = b[c].to_canonical(v);
                if t.abs() > 1.0 + 2.0 * BOUND_TOLERANCE {
                    return Err(Error::Data(format!(
                        "{}: value {v} at row {}, column {} lies outside [{}, {}]",
                        path.display(),
                        r + 2,
                        c + 1,
                        b[c].lower,
                        b[c].upper
                    )));
                }
                v = t.clamp(-1.0, 1.0);
            }
            inputs[(r, c)] = v;
        }
        outputs[r] = vals[d];
    }
    let mut ds = Dataset::new(inputs, outputs, header)?;
    ds.source = Some(path.to_path_buf());
    Ok(ds)
}

/// Reads an inputs-only table (every column an input), mapped like
/// [`ingest_csv`]. A table with one extra trailing column is read as a
/// dataset instead and its outputs returned alongside.
pub fn ingest_inputs(path: &Path, dim: usize, bounds: Option<&[Bounds]>) -> Result<(DMatrix<f64>, Option<DVector<f64>>)> {
    let (header, rows) = read_table(path)?;
    if header.len() == dim + 1 {
        let ds = ingest_csv(path, bounds)?;
        return Ok((ds.inputs, Some(ds.outputs)));
    }
    if header.len() != dim {
        return Err(Error::Data(format!(
            "{}: expected {dim} input columns, found {}",
            path.display(),
            header.len()
        )));
    }
    let mut inputs = DMatrix::zeros(rows.len(), dim);
    for (r, vals) in rows.iter().enumerate() {
        for c in 0..dim {
            inputs[(r, c)] = match bounds {
                Some(b) => {
                    let t = b[c].to_canonical(vals[c]);
                    if t.abs() > 1.0 + 2.0 * BOUND_TOLERANCE {
                        return Err(Error::Data(format!(
                            "{}: value {} at row {}, column {} lies outside the bounds",
                            path.display(),
                            vals[c],
                            r + 2,
                            c + 1
                        )));
                    }
                    t.clamp(-1.0, 1.0)
                }
                None => vals[c],
            };
        }
    }
    Ok((inputs, None))
}

/// Writes a dataset as CSV, mapping inputs back to physical units when
/// `bounds` are given.
pub fn write_csv(ds: &Dataset, path: &Path, bounds: Option<&[Bounds]>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Data(e.to_string()))?;
    w.write_record(&ds.columns).map_err(|e| Error::Data(e.to_string()))?;
    for r in 0..ds.len() {
        let mut rec: Vec<String> = (0..ds.dim())
            .map(|c| {
                let t = ds.inputs[(r, c)];
                let v = bounds.map_or(t, |b| b[c].from_canonical(t));
                format!("{v:e}")
            })
            .collect();
        rec.push(format!("{:e}", ds.outputs[r]));
        w.write_record(&rec).map_err(|e| Error::Data(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Disjoint train/test row indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Random split of `m` rows with `n_train` training rows; both index lists
/// are sorted.
pub fn random_split(m: usize, n_train: usize, seed: u64) -> Result<Split> {
    if n_train == 0 || n_train > m {
        return Err(Error::InvalidArgument(format!(
            "cannot take {n_train} training rows from {m}"
        )));
    }
    let mut rows: Vec<usize> = (0..m).collect();
    rows.shuffle(&mut rng::stream(seed, 0));
    let mut train = rows[..n_train].to_vec();
    let mut test = rows[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}
