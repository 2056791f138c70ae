//! Year-indexed series, CSV ingestion and the transforms applied before testing.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum number of shared index points for a bivariate analysis.
pub const MIN_OVERLAP: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("{path}: cannot read file: {reason}")]
    Io { path: String, reason: String },
    #[error("{path}: line 1: expected header `year,value`, found `{found}`")]
    Header { path: String, found: String },
    #[error("{path}: line {line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{path}: line {line}: gap at {missing}")]
    Gap {
        path: String,
        line: usize,
        missing: i64,
    },
    #[error("{path}: no observations")]
    Empty { path: String },
    #[error("series `{label}`: non-finite value at index {index}")]
    NonFinite { label: String, index: usize },
    #[error("series `{label}`: value {value} at index {index} ({year}) is not strictly positive")]
    NonPositive {
        label: String,
        index: usize,
        year: i64,
        value: f64,
    },
    #[error("series `{label}`: zero denominator at index {index} ({year})")]
    ZeroDenominator {
        label: String,
        index: usize,
        year: i64,
    },
    #[error("series `{label}`: need at least {needed} observations, have {have}")]
    TooShort {
        label: String,
        needed: usize,
        have: usize,
    },
    #[error("series `{label}`: window {from}-{to} does not intersect {start}-{end}")]
    EmptyWindow {
        label: String,
        from: i64,
        to: i64,
        start: i64,
        end: i64,
    },
    #[error("series `{a}` and `{b}` overlap in {overlap} points, need at least {MIN_OVERLAP}")]
    InsufficientOverlap { a: String, b: String, overlap: usize },
    #[error("dataset `{label}` not found in registry {dir}")]
    UnknownDataset { label: String, dir: String },
}

/// A transform recorded on a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformTag {
    Level,
    Log,
    FirstDifference,
    GrowthRate,
}

impl TransformTag {
    fn suffix(self) -> &'static str {
        match self {
            TransformTag::Level => "",
            TransformTag::Log => "ln",
            TransformTag::FirstDifference => "Δ",
            TransformTag::GrowthRate => "growth",
        }
    }
}

impl fmt::Display for TransformTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TransformTag::Level => "level",
            TransformTag::Log => "log",
            TransformTag::FirstDifference => "diff",
            TransformTag::GrowthRate => "growth",
        };
        f.write_str(name)
    }
}

/// Annual (or pseudo-annual) observations indexed by consecutive integers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    label: String,
    start: i64,
    values: Vec<f64>,
    unit: String,
    provenance: String,
    transforms: Vec<TransformTag>,
}

impl TimeSeries {
    /// Builds a level series. Fails on an empty or non-finite sample.
    pub fn new(
        label: impl Into<String>,
        start: i64,
        values: Vec<f64>,
    ) -> Result<Self, SeriesError> {
        let label = label.into();
        if values.is_empty() {
            return Err(SeriesError::TooShort {
                label,
                needed: 1,
                have: 0,
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(SeriesError::NonFinite { label, index });
        }
        Ok(Self {
            label,
            start,
            values,
            unit: String::new(),
            provenance: String::from("constructed"),
            transforms: vec![TransformTag::Level],
        })
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = unit.into();
        self
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Relabels the index so the first observation sits at `start`.
    pub fn with_start(mut self, start: i64) -> Self {
        self.start = start;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    /// Index of the last observation (inclusive).
    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64 - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn transforms(&self) -> &[TransformTag] {
        &self.transforms
    }

    /// `(index, value)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.start + i as i64, v))
    }

    fn derive(&self, tag: TransformTag, start: i64, values: Vec<f64>) -> Self {
        let mut transforms = self.transforms.clone();
        transforms.push(tag);
        let suffix = tag.suffix();
        let unit = if self.unit.is_empty() {
            suffix.to_string()
        } else {
            format!("{} [{}]", self.unit, suffix)
        };
        Self {
            label: self.label.clone(),
            start,
            values,
            unit,
            provenance: format!("{} | {}", self.provenance, tag),
            transforms,
        }
    }

    fn require_len(&self, needed: usize) -> Result<(), SeriesError> {
        if self.len() < needed {
            return Err(SeriesError::TooShort {
                label: self.label.clone(),
                needed,
                have: self.len(),
            });
        }
        Ok(())
    }
}

/// Reads a `year,value` CSV. Years must be consecutive and values finite.
pub fn ingest_csv(path: impl AsRef<Path>) -> Result<TimeSeries, SeriesError> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| SeriesError::Io {
        path: shown.clone(),
        reason: e.to_string(),
    })?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| shown.clone());
    parse_csv(&text, &shown).map(|(start, values)| {
        TimeSeries {
            label,
            start,
            values,
            unit: String::new(),
            provenance: shown,
            transforms: vec![TransformTag::Level],
        }
    })
}

fn parse_csv(text: &str, path: &str) -> Result<(i64, Vec<f64>), SeriesError> {
    let mut lines = text.split('\n').enumerate();
    let header = lines
        .next()
        .map(|(_, l)| l.trim_end_matches('\r'))
        .unwrap_or("");
    if header.trim_start_matches('\u{feff}') != "year,value" {
        return Err(SeriesError::Header {
            path: path.to_string(),
            found: header.to_string(),
        });
    }
    let mut start = None;
    let mut previous: Option<i64> = None;
    let mut values = Vec::new();
    for (i, raw) in lines {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let parse_err = |reason: String| SeriesError::Parse {
            path: path.to_string(),
            line: line_no,
            reason,
        };
        let (year, value) = line
            .split_once(',')
            .ok_or_else(|| parse_err(format!("expected `<year>,<value>`, found `{line}`")))?;
        let year: i64 = year
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("unparseable year `{year}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("unparseable value `{value}`")))?;
        if !value.is_finite() {
            return Err(parse_err(format!("non-finite value `{value}`")));
        }
        if let Some(prev) = previous {
            if year <= prev {
                return Err(parse_err(format!(
                    "year {year} is not after previous year {prev}"
                )));
            }
            if year != prev + 1 {
                return Err(SeriesError::Gap {
                    path: path.to_string(),
                    line: line_no,
                    missing: prev + 1,
                });
            }
        }
        start.get_or_insert(year);
        previous = Some(year);
        values.push(value);
    }
    match start {
        Some(start) => Ok((start, values)),
        None => Err(SeriesError::Empty {
            path: path.to_string(),
        }),
    }
}

impl std::str::FromStr for TransformTag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "level" | "none" => Ok(TransformTag::Level),
            "log" | "ln" => Ok(TransformTag::Log),
            "diff" | "difference" | "first_difference" => Ok(TransformTag::FirstDifference),
            "growth" | "growth_rate" => Ok(TransformTag::GrowthRate),
            other => Err(format!("unknown transform `{other}`")),
        }
    }
}

/// Applies one transform; `Level` returns the series unchanged.
pub fn apply_transform(s: &TimeSeries, tag: TransformTag) -> Result<TimeSeries, SeriesError> {
    match tag {
        TransformTag::Level => Ok(s.clone()),
        TransformTag::Log => log_transform(s),
        TransformTag::FirstDifference => first_difference(s),
        TransformTag::GrowthRate => growth_rate(s),
    }
}

/// Elementwise natural log; every value must be strictly positive.
pub fn log_transform(s: &TimeSeries) -> Result<TimeSeries, SeriesError> {
    if let Some(index) = s.values.iter().position(|&v| v <= 0.0) {
        return Err(SeriesError::NonPositive {
            label: s.label.clone(),
            index,
            year: s.start + index as i64,
            value: s.values[index],
        });
    }
    let values = s.values.iter().map(|v| v.ln()).collect();
    Ok(s.derive(TransformTag::Log, s.start, values))
}

pub fn first_difference(s: &TimeSeries) -> Result<TimeSeries, SeriesError> {
    s.require_len(2)?;
    let values = s.values.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(s.derive(TransformTag::FirstDifference, s.start + 1, values))
}

/// `(x_t - x_{t-1}) / x_{t-1}`.
pub fn growth_rate(s: &TimeSeries) -> Result<TimeSeries, SeriesError> {
    s.require_len(2)?;
    if let Some(index) = s.values[..s.len() - 1].iter().position(|&v| v == 0.0) {
        return Err(SeriesError::ZeroDenominator {
            label: s.label.clone(),
            index,
            year: s.start + index as i64,
        });
    }
    let values = s
        .values
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0])
        .collect();
    Ok(s.derive(TransformTag::GrowthRate, s.start + 1, values))
}

/// Keeps the part of `s` that falls inside `[from, to]`.
pub fn restrict_window(s: &TimeSeries, from: i64, to: i64) -> Result<TimeSeries, SeriesError> {
    let lo = from.max(s.start);
    let hi = to.min(s.end());
    if from > to || lo > hi {
        return Err(SeriesError::EmptyWindow {
            label: s.label.clone(),
            from,
            to,
            start: s.start,
            end: s.end(),
        });
    }
    let first = (lo - s.start) as usize;
    let last = (hi - s.start) as usize;
    let mut out = s.clone();
    out.start = lo;
    out.values = s.values[first..=last].to_vec();
    Ok(out)
}

/// Restricts both series to their common index range.
pub fn align_pair(
    a: &TimeSeries,
    b: &TimeSeries,
) -> Result<(TimeSeries, TimeSeries), SeriesError> {
    let lo = a.start.max(b.start);
    let hi = a.end().min(b.end());
    let overlap = if hi >= lo { (hi - lo + 1) as usize } else { 0 };
    if overlap < MIN_OVERLAP {
        return Err(SeriesError::InsufficientOverlap {
            a: a.label.clone(),
            b: b.label.clone(),
            overlap,
        });
    }
    Ok((restrict_window(a, lo, hi)?, restrict_window(b, lo, hi)?))
}

/// Aligns any number of series on their common range.
pub fn align_all(series: &[TimeSeries]) -> Result<Vec<TimeSeries>, SeriesError> {
    let Some(first) = series.first() else {
        return Ok(Vec::new());
    };
    let lo = series.iter().map(|s| s.start).max().unwrap_or(first.start);
    let hi = series.iter().map(|s| s.end()).min().unwrap_or(first.end());
    let overlap = if hi >= lo { (hi - lo + 1) as usize } else { 0 };
    if series.len() > 1 && overlap < MIN_OVERLAP {
        let a = first.label.clone();
        let b = series[series.len() - 1].label.clone();
        return Err(SeriesError::InsufficientOverlap { a, b, overlap });
    }
    series.iter().map(|s| restrict_window(s, lo, hi)).collect()
}

/// Relabels observation `k` as pseudo-year `start_year + k`. Values are untouched.
pub fn fake_annualize(s: &TimeSeries, start_year: i64) -> TimeSeries {
    let mut out = s.clone();
    out.start = start_year;
    if !out.provenance.ends_with("| fake-annualized") {
        out.provenance = format!("{} | fake-annualized", out.provenance);
    }
    out
}

/// Directory of `<stem>.csv` files addressed by stem.
#[derive(Debug, Clone)]
pub struct DatasetRegistry {
    dir: PathBuf,
}

impl DatasetRegistry {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_of(&self, label: &str) -> PathBuf {
        self.dir.join(format!("{label}.csv"))
    }

    pub fn contains(&self, label: &str) -> bool {
        !label.is_empty() && self.path_of(label).is_file()
    }

    pub fn load(&self, label: &str) -> Result<TimeSeries, SeriesError> {
        if !self.contains(label) {
            return Err(SeriesError::UnknownDataset {
                label: label.to_string(),
                dir: self.dir.display().to_string(),
            });
        }
        ingest_csv(self.path_of(label))
    }

    /// Sorted stems of every CSV in the directory.
    pub fn labels(&self) -> Vec<String> {
        let mut out: Vec<String> = fs::read_dir(&self.dir)
            .into_iter()
            .flatten()
            .flatten()
            .filter_map(|e| {
                let p = e.path();
                (p.extension().and_then(|x| x.to_str()) == Some("csv"))
                    .then(|| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
                    .flatten()
            })
            .collect();
        out.sort();
        out
    }
}
