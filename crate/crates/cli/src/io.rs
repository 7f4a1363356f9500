//! Delimited-text ingestion and dataset writing.
//!
//! Two layouts are read:
//!
//! * observations as rows: one column holds the 0/1 treatment, every other
//!   column is an outcome; the optional header supplies outcome names.
//! * transposed (`transpose = true`): each row is one outcome, its first
//!   field the outcome name and the remaining fields one value per
//!   observation. An optional header row (sample ids) is skipped. The
//!   treatment vector comes from a separate file with one 0/1 per line.
//!
//! Line and column numbers in errors are 1-based file positions.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use damt_core::{validate_dataset, Dataset, DatasetError, OutcomeMatrix};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreatmentColumn {
    Name(String),
    Index(usize),
}

impl TreatmentColumn {
    /// Digits are read as a 0-based index unless the header has a column of
    /// that exact name.
    fn resolve(&self, header: Option<&[String]>) -> Option<usize> {
        match self {
            TreatmentColumn::Index(i) => Some(*i),
            TreatmentColumn::Name(name) => {
                if let Some(pos) = header.and_then(|h| h.iter().position(|c| c == name)) {
                    return Some(pos);
                }
                name.parse().ok()
            }
        }
    }
}

impl std::str::FromStr for TreatmentColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(TreatmentColumn::Name(s.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct InputSpec {
    pub path: PathBuf,
    pub delimiter: u8,
    pub treatment_column: TreatmentColumn,
    pub transpose: bool,
    /// Required when `transpose` is set.
    pub treatment_file: Option<PathBuf>,
    pub has_header: bool,
}

impl InputSpec {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            delimiter: b',',
            treatment_column: TreatmentColumn::Index(0),
            transpose: false,
            treatment_file: None,
            has_header: true,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        column: usize,
        message: String,
    },
    #[error("treatment column {0:?} not found")]
    MissingTreatmentColumn(String),
    #[error("transposed input needs a treatment file")]
    MissingTreatmentFile,
    #[error("{}: no data rows", .0.display())]
    Empty(PathBuf),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

fn open(path: &Path) -> Result<File, LoadError> {
    File::open(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_error(path: &Path, line: u64, column: usize, message: impl Into<String>) -> LoadError {
    LoadError::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

fn parse_value(path: &Path, line: u64, column: usize, field: &str) -> Result<f64, LoadError> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_error(path, line, column, format!("not a number: {field:?}")))?;
    if !v.is_finite() {
        return Err(parse_error(path, line, column, format!("non-finite value: {field:?}")));
    }
    Ok(v)
}

fn parse_treatment(path: &Path, line: u64, column: usize, field: &str) -> Result<u8, LoadError> {
    match field.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(parse_error(
            path,
            line,
            column,
            format!("treatment must be 0 or 1, found {other:?}"),
        )),
    }
}

fn reader<R: Read>(spec: &InputSpec, source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(spec.delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(source)
}

fn line_of(record: &csv::StringRecord, fallback: u64) -> u64 {
    record.position().map_or(fallback, |p| p.line())
}

fn csv_error(path: &Path, err: csv::Error) -> LoadError {
    let line = err.position().map_or(0, |p| p.line());
    parse_error(path, line, 0, err.to_string())
}

pub fn load_dataset(spec: &InputSpec) -> Result<Dataset, LoadError> {
    if spec.transpose {
        load_transposed(spec)
    } else {
        load_by_rows(spec)
    }
}

fn load_by_rows(spec: &InputSpec) -> Result<Dataset, LoadError> {
    let path = spec.path.as_path();
    let mut rdr = reader(spec, BufReader::new(open(path)?));
    let mut records = rdr.records();

    let mut header: Option<Vec<String>> = None;
    if spec.has_header {
        match records.next() {
            Some(r) => {
                let r = r.map_err(|e| csv_error(path, e))?;
                header = Some(r.iter().map(|s| s.trim().to_string()).collect());
            }
            None => return Err(LoadError::Empty(path.to_path_buf())),
        }
    }

    let mut width = header.as_ref().map(Vec::len);
    let mut t_col = None;
    let mut treatment = Vec::new();
    let mut values = Vec::new();
    for (k, record) in records.enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = line_of(&record, k as u64 + 1);
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(parse_error(
                path,
                line,
                record.len().min(w) + 1,
                format!("expected {w} fields, found {}", record.len()),
            ));
        }
        let tc = match t_col {
            Some(tc) => tc,
            None => {
                let tc = spec
                    .treatment_column
                    .resolve(header.as_deref())
                    .filter(|&c| c < w)
                    .ok_or_else(|| LoadError::MissingTreatmentColumn(describe(&spec.treatment_column)))?;
                *t_col.insert(tc)
            }
        };
        for (c, field) in record.iter().enumerate() {
            if c == tc {
                treatment.push(parse_treatment(path, line, c + 1, field)?);
            } else {
                values.push(parse_value(path, line, c + 1, field)?);
            }
        }
    }
    let (Some(w), Some(tc)) = (width, t_col) else {
        return Err(LoadError::Empty(path.to_path_buf()));
    };

    let n = treatment.len();
    let p = w - 1;
    let names = match header {
        Some(h) => h.into_iter().enumerate().filter(|&(c, _)| c != tc).map(|(_, s)| s).collect(),
        None => default_names(p),
    };
    let matrix = OutcomeMatrix::from_row_major(n, p, &values)?;
    Ok(validate_dataset(matrix, treatment, names)?)
}

fn load_transposed(spec: &InputSpec) -> Result<Dataset, LoadError> {
    let t_path = spec.treatment_file.as_deref().ok_or(LoadError::MissingTreatmentFile)?;
    let treatment = load_treatment_file(t_path)?;
    let n = treatment.len();

    let path = spec.path.as_path();
    let mut rdr = reader(spec, BufReader::new(open(path)?));
    let mut names = Vec::new();
    let mut values = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        if k == 0 && spec.has_header {
            continue;
        }
        let line = line_of(&record, k as u64 + 1);
        if record.len() != n + 1 {
            return Err(parse_error(
                path,
                line,
                record.len().min(n + 1) + 1,
                format!("expected a name and {n} values, found {} fields", record.len()),
            ));
        }
        names.push(record[0].trim().to_string());
        for (c, field) in record.iter().enumerate().skip(1) {
            values.push(parse_value(path, line, c + 1, field)?);
        }
    }
    if names.is_empty() {
        return Err(LoadError::Empty(path.to_path_buf()));
    }
    let matrix = OutcomeMatrix::from_column_major(n, names.len(), values)?;
    Ok(validate_dataset(matrix, treatment, names)?)
}

/// One 0/1 value per line; trailing blank lines are ignored.
pub fn load_treatment_file(path: &Path) -> Result<Vec<u8>, LoadError> {
    let io_err = |source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut lines: Vec<String> = BufReader::new(open(path)?)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(io_err)?;
    while lines.last().is_some_and(|l| l.trim().is_empty()) {
        lines.pop();
    }
    if lines.is_empty() {
        return Err(LoadError::Empty(path.to_path_buf()));
    }
    lines
        .iter()
        .enumerate()
        .map(|(k, l)| parse_treatment(path, k as u64 + 1, 1, l))
        .collect()
}

fn describe(col: &TreatmentColumn) -> String {
    match col {
        TreatmentColumn::Name(s) => s.clone(),
        TreatmentColumn::Index(i) => i.to_string(),
    }
}

fn default_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("y{j}")).collect()
}

/// Writes `dataset` in the observations-as-rows layout with a header and the
/// treatment in a leading column named `A`. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_dataset<W: Write>(dataset: &Dataset, delimiter: u8, out: W) -> csv::Result<()> {
    let mut w = writer(delimiter, out);
    let mut header = vec!["A"];
    header.extend(dataset.names().iter().map(String::as_str));
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(dataset.p() + 1);
    for i in 0..dataset.n() {
        record.clear();
        record.push(dataset.treatment()[i].to_string());
        record.extend((0..dataset.p()).map(|j| dataset.value(i, j).to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Transposed layout: a header `name,s1..sn`, then one row per outcome; the
/// treatment vector goes to `treatment_out`, one value per line.
pub fn write_dataset_transposed<W: Write, T: Write>(
    dataset: &Dataset,
    delimiter: u8,
    out: W,
    mut treatment_out: T,
) -> csv::Result<()> {
    let mut w = writer(delimiter, out);
    let mut header = vec!["name".to_string()];
    header.extend((1..=dataset.n()).map(|i| format!("s{i}")));
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(dataset.n() + 1);
    for j in 0..dataset.p() {
        record.clear();
        record.push(dataset.name(j).to_string());
        record.extend(dataset.column(j).iter().map(f64::to_string));
        w.write_record(&record)?;
    }
    w.flush()?;
    for a in dataset.treatment() {
        writeln!(treatment_out, "{a}")?;
    }
    treatment_out.flush()?;
    Ok(())
}

pub(crate) fn writer<W: Write>(delimiter: u8, out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .delimiter(delimiter)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}
