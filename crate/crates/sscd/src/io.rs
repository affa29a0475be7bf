//! File formats: CSV data matrices, label files, score JSON, report files
//! and the compact binary matrix format with its JSON sidecar.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::baselines::ScoreTable;
use crate::benchgen::InterventionRow;
use crate::error::{Error, Result};
use crate::evalx::ExperimentReport;
use crate::histfeat::{FeatureKind, PairFeatureMatrix};
use crate::laprls::FitResult;
use crate::pairspace::{DataMatrix, LabelAssignment, LabelState, PairIndex};

/// Reads a data matrix: first row variable names, remaining rows samples.
pub fn read_data_csv(path: impl AsRef<Path>) -> Result<DataMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));

    let names: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Csv {
            path: path.into(),
            source: e,
        })?
        .iter()
        .map(|s| s.to_string())
        .collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ri, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv {
            path: path.into(),
            source: e,
        })?;
        let mut row = Vec::with_capacity(names.len());
        for (ci, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                Error::Format(format!(
                    "{}: row {}, column '{}': '{}' is not a number",
                    path.display(),
                    ri + 2,
                    names.get(ci).map(String::as_str).unwrap_or("?"),
                    field
                ))
            })?;
            row.push(value);
        }
        rows.push(row);
    }
    DataMatrix::from_rows(&rows, names)
}

pub fn write_data_csv(path: impl AsRef<Path>, data: &DataMatrix) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    writer
        .write_record(data.variable_names())
        .and_then(|_| {
            for r in 0..data.n() {
                let row: Vec<String> = (0..data.p())
                    .map(|c| format_float(data.values()[(r, c)]))
                    .collect();
                writer.write_record(&row)?;
            }
            writer.flush().map_err(csv::Error::from)
        })
        .map_err(|e| Error::Csv {
            path: path.into(),
            source: e,
        })
}

/// Shortest round-trip decimal, the same convention as the JSON output.
fn format_float(v: f64) -> String {
    let mut buf = ryu_format(v);
    if !buf.contains('.') && !buf.contains('e') && !buf.contains("inf") && !buf.contains("NaN") {
        buf.push_str(".0");
    }
    buf
}

fn ryu_format(v: f64) -> String {
    // `{}` on f64 already prints the shortest representation that
    // round-trips; keep it in one place in case the policy changes.
    format!("{v}")
}

/// Reads a label file with columns `from,to,label`, label in {0,1}, names
/// resolved against the data matrix.
pub fn read_label_csv(path: impl AsRef<Path>, data: &DataMatrix) -> Result<LabelAssignment> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));

    let headers = reader
        .headers()
        .map_err(|e| Error::Csv {
            path: path.into(),
            source: e,
        })?
        .clone();
    let expect = ["from", "to", "label"];
    if headers.iter().collect::<Vec<_>>() != expect {
        return Err(Error::Format(format!(
            "{}: label file header must be 'from,to,label'",
            path.display()
        )));
    }

    let pairs = PairIndex::new(data.p());
    let mut states = vec![LabelState::Unlabelled; pairs.count()];
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv {
            path: path.into(),
            source: e,
        })?;
        if record.len() != 3 {
            return Err(Error::Format(format!(
                "{}: label rows need exactly 3 fields",
                path.display()
            )));
        }
        let from = data
            .variable_id(&record[0])
            .ok_or_else(|| Error::UnknownVariable {
                name: record[0].to_string(),
            })?;
        let to = data
            .variable_id(&record[1])
            .ok_or_else(|| Error::UnknownVariable {
                name: record[1].to_string(),
            })?;
        let state = match &record[2] {
            "0" => LabelState::NonCausal,
            "1" => LabelState::Causal,
            other => {
                return Err(Error::Format(format!(
                    "{}: label must be 0 or 1, got '{other}'",
                    path.display()
                )))
            }
        };
        states[pairs.index(from, to)?] = state;
    }
    Ok(LabelAssignment::new(states))
}

/// Writes the labelled subset of an assignment as a `from,to,label` file.
pub fn write_label_csv(
    path: impl AsRef<Path>,
    labels: &LabelAssignment,
    data: &DataMatrix,
) -> Result<()> {
    let path = path.as_ref();
    let pairs = PairIndex::new(data.p());
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    writer
        .write_record(["from", "to", "label"])
        .and_then(|_| {
            for k in labels.labelled_indices() {
                let (i, j) = pairs.unindex(k).expect("k in range");
                let value = match labels.state(k) {
                    LabelState::Causal => "1",
                    LabelState::NonCausal => "0",
                    LabelState::Unlabelled => unreachable!(),
                };
                writer.write_record([
                    data.variable_names()[i].as_str(),
                    data.variable_names()[j].as_str(),
                    value,
                ])?;
            }
            writer.flush().map_err(csv::Error::from)
        })
        .map_err(|e| Error::Csv {
            path: path.into(),
            source: e,
        })
}

/// Interventional samples: header `target,<variable names>`, one row per
/// intervention.
pub fn write_interventions_csv(
    path: impl AsRef<Path>,
    rows: &[InterventionRow],
    variable_names: &[String],
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    let mut header = vec!["target".to_string()];
    header.extend_from_slice(variable_names);
    writer
        .write_record(&header)
        .and_then(|_| {
            for row in rows {
                let mut record = vec![variable_names[row.target].clone()];
                record.extend(row.values.iter().map(|&v| format_float(v)));
                writer.write_record(&record)?;
            }
            writer.flush().map_err(csv::Error::from)
        })
        .map_err(|e| Error::Csv {
            path: path.into(),
            source: e,
        })
}

pub fn read_interventions_csv(
    path: impl AsRef<Path>,
    variable_names: &[String],
) -> Result<Vec<InterventionRow>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv {
            path: path.into(),
            source: e,
        })?;
        if record.len() != variable_names.len() + 1 {
            return Err(Error::Format(format!(
                "{}: intervention rows need target plus {} values",
                path.display(),
                variable_names.len()
            )));
        }
        let target = variable_names
            .iter()
            .position(|n| n == &record[0])
            .ok_or_else(|| Error::UnknownVariable {
                name: record[0].to_string(),
            })?;
        let values = record
            .iter()
            .skip(1)
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Format(format!("'{f}' is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(InterventionRow { target, values });
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let json = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.into(),
        source: e,
    })?;
    std::fs::write(path, json.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.into(),
        source: e,
    })
}

/// Sidecar describing a binary matrix file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub rows: usize,
    pub cols: usize,
    /// What the matrix holds, e.g. "features:raw_bins" or "distance".
    pub kind: String,
    pub bin_width: Option<f64>,
    pub domain: Option<(f64, f64)>,
}

/// Writes a matrix as little-endian f64 rows to `path` and the sidecar to
/// `path` + ".json".
pub fn write_matrix_binary(
    path: impl AsRef<Path>,
    matrix: &DMatrix<f64>,
    sidecar: &MatrixSidecar,
) -> Result<()> {
    let path = path.as_ref();
    if sidecar.rows != matrix.nrows() || sidecar.cols != matrix.ncols() {
        return Err(Error::Param("sidecar dims do not match the matrix".into()));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    for r in 0..matrix.nrows() {
        for c in 0..matrix.ncols() {
            writer
                .write_all(&matrix[(r, c)].to_le_bytes())
                .map_err(|e| Error::io(path, e))?;
        }
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    write_json(sidecar_path(path), sidecar)
}

pub fn read_matrix_binary(path: impl AsRef<Path>) -> Result<(DMatrix<f64>, MatrixSidecar)> {
    let path = path.as_ref();
    let sidecar: MatrixSidecar = read_json(sidecar_path(path))?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    let expect = sidecar.rows * sidecar.cols * 8;
    if bytes.len() != expect {
        return Err(Error::Format(format!(
            "{}: expected {expect} bytes for a {}x{} matrix, found {}",
            path.display(),
            sidecar.rows,
            sidecar.cols,
            bytes.len()
        )));
    }
    let mut values = Vec::with_capacity(sidecar.rows * sidecar.cols);
    for chunk in bytes.chunks_exact(8) {
        values.push(f64::from_le_bytes(chunk.try_into().unwrap()));
    }
    Ok((
        DMatrix::from_row_slice(sidecar.rows, sidecar.cols, &values),
        sidecar,
    ))
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".json");
    s.into()
}

/// Human-readable pair id, e.g. `x0→x3`.
pub fn pair_id(names: &[String], i: usize, j: usize) -> String {
    format!("{}→{}", names[i], names[j])
}

/// Feature matrix as CSV: first column the pair id, then one column per
/// feature dimension.
pub fn write_features_csv(
    path: impl AsRef<Path>,
    features: &PairFeatureMatrix,
    variable_names: &[String],
) -> Result<()> {
    let path = path.as_ref();
    let pairs = PairIndex::new(features.p());
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    let mut header = vec!["pair".to_string()];
    header.extend((0..features.dim()).map(|c| format!("f{c}")));
    writer
        .write_record(&header)
        .and_then(|_| {
            for (k, (i, j)) in pairs.pairs().enumerate() {
                let mut record = vec![pair_id(variable_names, i, j)];
                record.extend(
                    features
                        .features()
                        .row(k)
                        .iter()
                        .map(|&v| format_float(v)),
                );
                writer.write_record(&record)?;
            }
            writer.flush().map_err(csv::Error::from)
        })
        .map_err(|e| Error::Csv {
            path: path.into(),
            source: e,
        })
}

pub fn feature_sidecar(features: &PairFeatureMatrix) -> MatrixSidecar {
    MatrixSidecar {
        rows: features.num_pairs(),
        cols: features.dim(),
        kind: match features.kind() {
            FeatureKind::RawBins => "features:raw_bins".to_string(),
            FeatureKind::PcaReduced => "features:pca_reduced".to_string(),
        },
        bin_width: Some(features.grid().bin_width()),
        domain: Some((features.grid().lo(), features.grid().hi())),
    }
}

/// One scored pair in a score file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScoreEntry {
    pub from: String,
    pub to: String,
    pub score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prediction: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub was_labelled: Option<bool>,
}

/// Scores for all pairs plus the settings that produced them. Both the
/// semi-supervised fit and the baselines serialize to this shape; `method`
/// distinguishes them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreFile {
    pub method: String,
    pub use_absolute: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bin_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_target: Option<usize>,
    pub pairs: Vec<PairScoreEntry>,
}

impl ScoreFile {
    pub fn from_fit(
        fit: &FitResult,
        labels: &LabelAssignment,
        data: &DataMatrix,
        params: &crate::pipeline::SscdParams,
    ) -> Self {
        let pairs = PairIndex::new(data.p());
        let entries = pairs
            .pairs()
            .enumerate()
            .map(|(k, (i, j))| PairScoreEntry {
                from: data.variable_names()[i].clone(),
                to: data.variable_names()[j].clone(),
                score: fit.scores()[k],
                prediction: Some(fit.predictions()[k]),
                was_labelled: Some(labels.state(k).is_labelled()),
            })
            .collect();
        ScoreFile {
            method: "sscd".to_string(),
            use_absolute: false,
            lambda: Some(fit.lambda()),
            sigma: fit.sigma(),
            bin_width: Some(params.bin_width),
            bound: Some(params.bound),
            d_target: Some(params.d_target),
            pairs: entries,
        }
    }

    pub fn from_table(table: &ScoreTable, data: &DataMatrix) -> Self {
        let pairs = PairIndex::new(data.p());
        let entries = pairs
            .pairs()
            .enumerate()
            .map(|(k, (i, j))| PairScoreEntry {
                from: data.variable_names()[i].clone(),
                to: data.variable_names()[j].clone(),
                score: table.scores()[k],
                prediction: None,
                was_labelled: None,
            })
            .collect();
        ScoreFile {
            method: table.method().to_string(),
            use_absolute: table.use_absolute(),
            lambda: None,
            sigma: None,
            bin_width: None,
            bound: None,
            d_target: None,
            pairs: entries,
        }
    }
}

/// Flat CSV report: method, rho, n_train, replicate, auc.
pub fn write_report_csv(path: impl AsRef<Path>, report: &ExperimentReport) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    writer
        .write_record(["method", "rho", "n_train", "replicate", "auc"])
        .and_then(|_| {
            for (method, rho, n_train, replicate, auc) in report.csv_rows() {
                writer.write_record([
                    method,
                    format_float(rho),
                    n_train.to_string(),
                    replicate.to_string(),
                    format_float(auc),
                ])?;
            }
            writer.flush().map_err(csv::Error::from)
        })
        .map_err(|e| Error::Csv {
            path: path.into(),
            source: e,
        })
}
