//! CSV loading, imputation, normalization and stratified splitting.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{
    Dataset, FeatureKind, FeatureSchema, Label, Sample, CLINICAL_COLUMNS, CLINICAL_DIM,
};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumericImpute {
    #[default]
    Median,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinaryImpute {
    #[default]
    Zero,
    Mode,
}

/// How missing cells are filled before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ImputePolicy {
    pub numeric: NumericImpute,
    pub binary: BinaryImpute,
}

/// Load a clinical CSV with min-max normalization of the numeric feature.
pub fn load_csv(path: impl AsRef<Path>, policy: ImputePolicy) -> Result<Dataset> {
    load_csv_with(path, policy, true)
}

pub fn load_csv_with(
    path: impl AsRef<Path>,
    policy: ImputePolicy,
    normalize: bool,
) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, policy, normalize)
}

pub fn read_csv<R: Read>(reader: R, policy: ImputePolicy, normalize: bool) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    check_header(&header)?;

    let schema = FeatureSchema::clinical();
    let mut cells: Vec<Vec<Option<f64>>> = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        if record.len() != CLINICAL_COLUMNS.len() {
            return Err(Error::Parse {
                row,
                column: String::new(),
                message: format!(
                    "expected {} cells, found {}",
                    CLINICAL_COLUMNS.len(),
                    record.len()
                ),
            });
        }
        let mut values = Vec::with_capacity(CLINICAL_DIM);
        for (j, feature) in schema.features().iter().enumerate() {
            let cell = parse_cell(&record[j], row, &feature.name)?;
            if let Some(v) = cell {
                if feature.kind == FeatureKind::Binary && v != 0.0 && v != 1.0 {
                    return Err(parse_err(row, &feature.name, "binary feature must be 0 or 1"));
                }
            }
            values.push(cell);
        }
        let label_col = CLINICAL_COLUMNS[CLINICAL_DIM];
        let label = match parse_cell(&record[CLINICAL_DIM], row, label_col)? {
            Some(v) if v == 1.0 => Label::Pos,
            Some(v) if v == 0.0 => Label::Neg,
            Some(_) => return Err(parse_err(row, label_col, "label must be 1 or 0")),
            None => return Err(parse_err(row, label_col, "missing label")),
        };
        cells.push(values);
        labels.push(label);
    }
    if cells.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let fills: Vec<f64> = schema
        .features()
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let observed: Vec<f64> = cells.iter().filter_map(|r| r[j]).collect();
            match f.kind {
                FeatureKind::Numeric => match policy.numeric {
                    NumericImpute::Median => median(&observed),
                    NumericImpute::Zero => 0.0,
                },
                FeatureKind::Binary => match policy.binary {
                    BinaryImpute::Zero => 0.0,
                    BinaryImpute::Mode => {
                        let ones = observed.iter().filter(|&&v| v == 1.0).count();
                        // ties resolve to 0
                        if 2 * ones > observed.len() {
                            1.0
                        } else {
                            0.0
                        }
                    }
                },
            }
        })
        .collect();

    let mut rows: Vec<Vec<f64>> = cells
        .into_iter()
        .map(|r| {
            r.into_iter()
                .zip(&fills)
                .map(|(c, fill)| c.unwrap_or(*fill))
                .collect()
        })
        .collect();

    if normalize {
        for (j, f) in schema.features().iter().enumerate() {
            if f.kind == FeatureKind::Numeric {
                min_max_column(&mut rows, j);
            }
        }
    }

    let samples = rows
        .into_iter()
        .zip(labels)
        .map(|(x, y)| Sample::new(x, y))
        .collect();
    Dataset::new(schema, samples)
}

fn check_header(header: &csv::StringRecord) -> Result<()> {
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    for name in &got {
        if !CLINICAL_COLUMNS.contains(name) {
            return Err(Error::Schema(format!("unknown column `{name}`")));
        }
    }
    for expected in CLINICAL_COLUMNS {
        if !got.contains(&expected) {
            return Err(Error::Schema(format!("missing column `{expected}`")));
        }
    }
    for (i, expected) in CLINICAL_COLUMNS.iter().enumerate() {
        if got.get(i) != Some(expected) {
            return Err(Error::Schema(format!(
                "column `{expected}` expected at position {}",
                i + 1
            )));
        }
    }
    if got.len() != CLINICAL_COLUMNS.len() {
        return Err(Error::Schema("duplicate columns in header".into()));
    }
    Ok(())
}

fn parse_err(row: usize, column: &str, message: &str) -> Error {
    Error::Parse {
        row,
        column: column.to_string(),
        message: message.to_string(),
    }
}

fn parse_cell(raw: &str, row: usize, column: &str) -> Result<Option<f64>> {
    let s = raw.trim();
    if s.is_empty() {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(parse_err(row, column, &format!("not a number: `{s}`"))),
    }
}

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Scale column `j` to [0, 1]. A constant column maps to 0.
fn min_max_column(rows: &mut [Vec<f64>], j: usize) {
    let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
        (lo.min(r[j]), hi.max(r[j]))
    });
    let span = hi - lo;
    for r in rows.iter_mut() {
        r[j] = if span > 0.0 { (r[j] - lo) / span } else { 0.0 };
    }
}

/// Write a dataset in the clinical CSV layout.
pub fn write_csv<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    if !data.schema().is_clinical() {
        return Err(Error::Schema(
            "only the clinical schema has a CSV layout".into(),
        ));
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CLINICAL_COLUMNS)?;
    for s in data.samples() {
        let mut record: Vec<String> = s.x.iter().map(|v| format!("{v}")).collect();
        record.push(if s.y == Label::Pos { "1" } else { "0" }.to_string());
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn save_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv(data, std::io::BufWriter::new(file))
}

/// Per-class split: `floor(fraction * class_count)` samples of each class go
/// to train, the rest to test.
pub fn stratified_split(data: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    if data.n_pos() == 0 {
        return Err(Error::EmptyClass("+1"));
    }
    if data.n_neg() == 0 {
        return Err(Error::EmptyClass("-1"));
    }
    let mut rng = stream_rng(seed, 0);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for label in [Label::Pos, Label::Neg] {
        let mut idx: Vec<usize> = data
            .samples()
            .iter()
            .enumerate()
            .filter(|(_, s)| s.y == label)
            .map(|(i, _)| i)
            .collect();
        idx.shuffle(&mut rng);
        // small epsilon absorbs products like 0.29 * 100 = 28.999...
        let n_train = (train_fraction * idx.len() as f64 + 1e-9).floor() as usize;
        if n_train == 0 {
            return Err(Error::Config(format!(
                "train fraction {train_fraction} leaves class {label} without training samples"
            )));
        }
        train.extend(idx[..n_train].iter().map(|&i| data.samples()[i].clone()));
        test.extend(idx[n_train..].iter().map(|&i| data.samples()[i].clone()));
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    Ok((data.with_samples(train)?, data.with_samples(test)?))
}
