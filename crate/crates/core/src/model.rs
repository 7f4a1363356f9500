//! Shared data structures: the validated [`Dataset`], the analysis
//! configuration and the per-outcome result records.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

/// Errors raised while assembling a [`Dataset`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DatasetError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("at least 2 observations are required, found {n}")]
    TooFewObservations { n: usize },
    #[error("treatment at row {row} is {value}; only 0 and 1 are allowed")]
    InvalidTreatment { row: usize, value: u8 },
    #[error("treatment has a single arm ({treated} treated, {control} control)")]
    DegenerateTreatment { treated: usize, control: usize },
    #[error("non-finite outcome value {value} at row {row}, column {column}")]
    NonFiniteValue { row: usize, column: usize, value: f64 },
    #[error("outcome name {name:?} appears at columns {first} and {second}")]
    DuplicateName {
        name: String,
        first: usize,
        second: usize,
    },
}

/// A dense `n x p` matrix of outcome values stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeMatrix {
    nrows: usize,
    ncols: usize,
    values: Vec<f64>,
}

impl OutcomeMatrix {
    pub fn from_column_major(
        nrows: usize,
        ncols: usize,
        values: Vec<f64>,
    ) -> Result<Self, DatasetError> {
        check_len(nrows, ncols, values.len())?;
        Ok(Self {
            nrows,
            ncols,
            values,
        })
    }

    /// Builds the matrix from row-major values, transposing once.
    pub fn from_row_major(nrows: usize, ncols: usize, values: &[f64]) -> Result<Self, DatasetError> {
        check_len(nrows, ncols, values.len())?;
        let mut out = Vec::with_capacity(values.len());
        for j in 0..ncols {
            out.extend((0..nrows).map(|i| values[i * ncols + j]));
        }
        Ok(Self {
            nrows,
            ncols,
            values: out,
        })
    }

    /// Builds the matrix from one vector per outcome column.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self, DatasetError> {
        let nrows = columns.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(nrows * columns.len());
        for col in columns {
            if col.len() != nrows {
                return Err(DatasetError::DimensionMismatch {
                    what: "column length",
                    expected: nrows,
                    found: col.len(),
                });
            }
            values.extend_from_slice(col);
        }
        Ok(Self {
            nrows,
            ncols: columns.len(),
            values,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }
}

fn check_len(nrows: usize, ncols: usize, len: usize) -> Result<(), DatasetError> {
    let expected = nrows.saturating_mul(ncols);
    if expected != len {
        return Err(DatasetError::DimensionMismatch {
            what: "matrix storage",
            expected,
            found: len,
        });
    }
    Ok(())
}

/// Immutable observed data: outcomes, binary treatment and outcome names.
///
/// Outcomes are kept column-major so that every per-outcome scan reads one
/// contiguous slice. Treated and control row indices are precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    p: usize,
    values: Vec<f64>,
    treatment: Vec<u8>,
    names: Vec<String>,
    treated: Vec<usize>,
    control: Vec<usize>,
}

/// Validates raw arrays and assembles a [`Dataset`].
pub fn validate_dataset(
    outcomes: OutcomeMatrix,
    treatment: Vec<u8>,
    names: Vec<String>,
) -> Result<Dataset, DatasetError> {
    let OutcomeMatrix {
        nrows: n,
        ncols: p,
        values,
    } = outcomes;
    if treatment.len() != n {
        return Err(DatasetError::DimensionMismatch {
            what: "treatment length",
            expected: n,
            found: treatment.len(),
        });
    }
    if names.len() != p {
        return Err(DatasetError::DimensionMismatch {
            what: "outcome names",
            expected: p,
            found: names.len(),
        });
    }
    if n < 2 {
        return Err(DatasetError::TooFewObservations { n });
    }

    let mut treated = Vec::new();
    let mut control = Vec::new();
    for (row, &a) in treatment.iter().enumerate() {
        match a {
            0 => control.push(row),
            1 => treated.push(row),
            value => return Err(DatasetError::InvalidTreatment { row, value }),
        }
    }
    if treated.is_empty() || control.is_empty() {
        return Err(DatasetError::DegenerateTreatment {
            treated: treated.len(),
            control: control.len(),
        });
    }

    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(DatasetError::NonFiniteValue {
            row: pos % n,
            column: pos / n,
            value: values[pos],
        });
    }

    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for (j, name) in names.iter().enumerate() {
        if let Some(&first) = seen.get(name.as_str()) {
            return Err(DatasetError::DuplicateName {
                name: name.clone(),
                first,
                second: j,
            });
        }
        seen.insert(name, j);
    }

    Ok(Dataset {
        n,
        p,
        values,
        treatment,
        names,
        treated,
        control,
    })
}

impl Dataset {
    /// Number of observations.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of outcome variables.
    pub fn p(&self) -> usize {
        self.p
    }

    /// All observations of outcome `j`.
    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.values[j * self.n..(j + 1) * self.n]
    }

    pub fn value(&self, row: usize, column: usize) -> f64 {
        self.values[column * self.n + row]
    }

    /// Column-major outcome storage.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn treatment(&self) -> &[u8] {
        &self.treatment
    }

    #[inline]
    pub fn is_treated(&self, row: usize) -> bool {
        self.treatment[row] == 1
    }

    /// Rows with `A = 1`, ascending.
    pub fn treated(&self) -> &[usize] {
        &self.treated
    }

    /// Rows with `A = 0`, ascending.
    pub fn control(&self) -> &[usize] {
        &self.control
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, j: usize) -> &str {
        &self.names[j]
    }
}

/// Which end of the effect-size distribution screening favours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Direction {
    /// Largest signed effect first.
    Up,
    /// Smallest (most negative) signed effect first.
    Down,
    /// Largest absolute effect first.
    #[default]
    Absolute,
}

impl Direction {
    /// Screening score; a larger score ranks better.
    #[inline]
    pub fn score(self, effect: f64) -> f64 {
        match self {
            Direction::Up => effect,
            Direction::Down => -effect,
            Direction::Absolute => libm::fabs(effect),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::Absolute => "absolute",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown direction {0:?} (expected up, down or absolute)")]
pub struct ParseDirectionError(pub String);

impl FromStr for Direction {
    type Err = ParseDirectionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "up" => Ok(Direction::Up),
            "down" => Ok(Direction::Down),
            "absolute" | "abs" => Ok(Direction::Absolute),
            other => Err(ParseDirectionError(other.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("fold count must be at least 2, got {folds}")]
    TooFewFolds { folds: usize },
    #[error("{folds} folds exceed the smallest treatment arm ({arm_size} observations)")]
    TooManyFolds { folds: usize, arm_size: usize },
    #[error("reduced-set size must lie in 1..={p}, got {p_star}")]
    InvalidTop { p_star: usize, p: usize },
    #[error("FDR level must lie in (0, 1), got {alpha}")]
    InvalidAlpha { alpha: f64 },
}

/// Parameters of one data-adaptive analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    /// Number of cross-validation folds `V`.
    pub folds: usize,
    /// Size of the reduced hypothesis set.
    pub p_star: usize,
    pub direction: Direction,
    /// FDR level used for the rejection summary.
    pub alpha: f64,
    /// Seed for the fold assignment.
    pub seed: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            folds: 10,
            p_star: 30,
            direction: Direction::Absolute,
            alpha: 0.05,
            seed: 0,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self, dataset: &Dataset) -> Result<(), ConfigError> {
        if self.folds < 2 {
            return Err(ConfigError::TooFewFolds { folds: self.folds });
        }
        let arm_size = dataset.treated().len().min(dataset.control().len());
        if self.folds > arm_size {
            return Err(ConfigError::TooManyFolds {
                folds: self.folds,
                arm_size,
            });
        }
        if self.p_star == 0 || self.p_star > dataset.p() {
            return Err(ConfigError::InvalidTop {
                p_star: self.p_star,
                p: dataset.p(),
            });
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ConfigError::InvalidAlpha { alpha: self.alpha });
        }
        Ok(())
    }
}

/// Cross-fitted (or whole-sample) estimate for one outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectEstimate {
    pub outcome: usize,
    pub ate: f64,
    /// Mean of squared influence-curve values.
    pub eic_variance: f64,
    /// Number of pooled influence values.
    pub n: usize,
    pub z_stat: f64,
    /// Two-sided normal p-value.
    pub p_value: f64,
    /// Set when the influence-curve variance is zero but the effect is not.
    pub degenerate: bool,
}

/// One line of the final report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub outcome: usize,
    pub name: String,
    pub ate: f64,
    pub raw_p: f64,
    pub adjusted_p: f64,
    pub mean_cv_rank: f64,
    pub pct_top: f64,
    pub z_stat: f64,
    pub eic_variance: f64,
    pub degenerate: bool,
}
