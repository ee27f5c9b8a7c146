//! CSV ingestion and the returns → demean → square transform chain.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::series::Series;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    /// Values are analysed as they are.
    #[default]
    Levels,
    /// Values are positive prices, usually turned into returns first.
    Prices,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    /// `100 ln(p_t / p_{t-1})`.
    LogReturnsPct,
    /// `100 (p_t / p_{t-1} - 1)`.
    SimpleReturnsPct,
    Demean,
    Square,
}

impl Transform {
    pub fn name(self) -> &'static str {
        match self {
            Transform::LogReturnsPct => "log_returns_pct",
            Transform::SimpleReturnsPct => "simple_returns_pct",
            Transform::Demean => "demean",
            Transform::Square => "square",
        }
    }

    fn is_returns(self) -> bool {
        matches!(self, Transform::LogReturnsPct | Transform::SimpleReturnsPct)
    }
}

impl FromStr for Transform {
    type Err = InputError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "log_returns_pct" => Ok(Transform::LogReturnsPct),
            "simple_returns_pct" => Ok(Transform::SimpleReturnsPct),
            "demean" => Ok(Transform::Demean),
            "square" => Ok(Transform::Square),
            other => Err(InputError::Pipeline(format!("unknown transform `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnSelector {
    Index(usize),
    Name(String),
}

impl Default for ColumnSelector {
    fn default() -> Self {
        ColumnSelector::Index(0)
    }
}

impl FromStr for ColumnSelector {
    type Err = std::convert::Infallible;

    /// Digits select by zero-based index, anything else by header name.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnSelector::Index(i),
            Err(_) => ColumnSelector::Name(s.to_string()),
        })
    }
}

impl fmt::Display for ColumnSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnSelector::Index(i) => write!(f, "{i}"),
            ColumnSelector::Name(n) => f.write_str(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeaderMode {
    /// A first row whose selected field is not a number is a header.
    #[default]
    Auto,
    Present,
    Absent,
}

/// How a file becomes a series, written as e.g.
/// `prices:log_returns_pct,demean,square`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Pipeline {
    pub input_kind: InputKind,
    pub transforms: Vec<Transform>,
    #[serde(default)]
    pub column: ColumnSelector,
    #[serde(default)]
    pub header: HeaderMode,
}

impl Pipeline {
    /// Squared demeaned percent log returns of a price series.
    pub fn squared_returns() -> Self {
        Pipeline {
            input_kind: InputKind::Prices,
            transforms: vec![Transform::LogReturnsPct, Transform::Demean, Transform::Square],
            ..Default::default()
        }
    }

    pub fn with_column(mut self, column: ColumnSelector) -> Self {
        self.column = column;
        self
    }

    pub fn validate(&self) -> Result<(), InputError> {
        if self.input_kind == InputKind::Prices {
            for (i, t) in self.transforms.iter().enumerate() {
                if *t == Transform::Square && !self.transforms[..i].iter().any(|p| p.is_returns() || *p == Transform::Demean) {
                    return Err(InputError::Pipeline(
                        "`square` on prices needs a preceding returns or demean step".into(),
                    ));
                }
            }
        }
        if let ColumnSelector::Name(_) = self.column {
            if self.header == HeaderMode::Absent {
                return Err(InputError::Pipeline("selecting a column by name needs a header".into()));
            }
        }
        Ok(())
    }

    /// Applies the chain; `lines` are source line numbers for error messages.
    pub fn apply(&self, values: Vec<f64>, lines: &[u64]) -> Result<Vec<f64>, InputError> {
        self.validate()?;
        let mut x = values;
        let mut lines = lines.to_vec();
        if x.is_empty() {
            return Err(InputError::Empty);
        }
        for t in &self.transforms {
            x = match t {
                Transform::LogReturnsPct | Transform::SimpleReturnsPct => {
                    if x.len() < 2 {
                        return Err(InputError::TooFewRows {
                            needed: 2,
                            got: x.len(),
                            step: t.name(),
                        });
                    }
                    if let Some(i) = x.iter().position(|p| *p <= 0.0 || p.is_nan()) {
                        return Err(InputError::NonPositivePrice {
                            line: lines.get(i).copied().unwrap_or(0),
                            value: x[i],
                        });
                    }
                    lines.remove(0);
                    x.windows(2)
                        .map(|w| match t {
                            Transform::LogReturnsPct => 100.0 * (w[1] / w[0]).ln(),
                            _ => 100.0 * (w[1] / w[0] - 1.0),
                        })
                        .collect()
                }
                Transform::Demean => {
                    let m = crate::sum::mean(&x);
                    x.iter().map(|v| v - m).collect()
                }
                Transform::Square => x.iter().map(|v| v * v).collect(),
            };
        }
        Ok(x)
    }
}

impl FromStr for Pipeline {
    type Err = InputError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, chain) = match s.split_once(':') {
            Some((k, c)) => (k.trim(), c.trim()),
            None => (s.trim(), ""),
        };
        let input_kind = match kind {
            "levels" | "" => InputKind::Levels,
            "prices" => InputKind::Prices,
            other => {
                return Err(InputError::Pipeline(format!(
                    "unknown input kind `{other}`, expected `levels` or `prices`"
                )))
            }
        };
        let transforms = if chain.is_empty() {
            Vec::new()
        } else {
            chain.split(',').map(Transform::from_str).collect::<Result<_, _>>()?
        };
        let p = Pipeline {
            input_kind,
            transforms,
            ..Default::default()
        };
        p.validate()?;
        Ok(p)
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.input_kind {
            InputKind::Levels => "levels",
            InputKind::Prices => "prices",
        };
        f.write_str(kind)?;
        if !self.transforms.is_empty() {
            let names: Vec<&str> = self.transforms.iter().map(|t| t.name()).collect();
            write!(f, ":{}", names.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("line {line}: cannot parse `{value}` as a number")]
    Parse { line: u64, value: String },

    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },

    #[error("column `{column}` not found")]
    MissingColumn { column: String },

    #[error("input contains no observations")]
    Empty,

    #[error("`{step}` needs at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize, step: &'static str },

    #[error("line {line}: price {value} is not positive")]
    NonPositivePrice { line: u64, value: f64 },

    #[error("invalid pipeline: {0}")]
    Pipeline(String),

    #[error(transparent)]
    Series(#[from] Error),
}

/// Raw values of the selected column with their source line numbers.
pub fn read_column<R: Read>(reader: R, pipeline: &Pipeline) -> Result<(Vec<f64>, Vec<u64>), InputError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut values = Vec::new();
    let mut lines = Vec::new();
    let mut index = match &pipeline.column {
        ColumnSelector::Index(i) => Some(*i),
        ColumnSelector::Name(_) => None,
    };
    let mut first = true;
    for record in rdr.records() {
        let record = record.map_err(|e| InputError::Malformed {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            reason: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if first {
            first = false;
            if let ColumnSelector::Name(name) = &pipeline.column {
                let pos = record
                    .iter()
                    .position(|f| f == name)
                    .ok_or_else(|| InputError::MissingColumn { column: name.clone() })?;
                index = Some(pos);
                continue;
            }
            let field = record.get(index.unwrap_or(0)).unwrap_or("");
            let header = match pipeline.header {
                HeaderMode::Present => true,
                HeaderMode::Absent => false,
                HeaderMode::Auto => field.parse::<f64>().is_err(),
            };
            if header {
                continue;
            }
        }
        let i = index.unwrap_or(0);
        let field = record.get(i).ok_or_else(|| InputError::Malformed {
            line,
            reason: format!("row has no column {i}"),
        })?;
        let v: f64 = field.parse().map_err(|_| InputError::Parse {
            line,
            value: field.to_string(),
        })?;
        if !v.is_finite() {
            return Err(InputError::Parse {
                line,
                value: field.to_string(),
            });
        }
        values.push(v);
        lines.push(line);
    }
    Ok((values, lines))
}

/// Reads `path` and applies the pipeline.
pub fn load_series(path: impl AsRef<Path>, pipeline: &Pipeline) -> Result<Series, InputError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| InputError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_series_from(file, pipeline)
}

pub fn load_series_from<R: Read>(reader: R, pipeline: &Pipeline) -> Result<Series, InputError> {
    pipeline.validate()?;
    let (values, lines) = read_column(reader, pipeline)?;
    let x = pipeline.apply(values, &lines)?;
    Ok(Series::new(x)?)
}

/// One value per line in scientific notation with 17 significant digits,
/// which reads back bit-identically.
pub fn write_values<W: Write>(out: W, values: &[f64]) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    for v in values {
        writeln!(out, "{v:.16e}")?;
    }
    out.flush()
}

pub fn write_series(path: impl AsRef<Path>, values: &[f64]) -> io::Result<()> {
    write_values(File::create(path)?, values)
}
