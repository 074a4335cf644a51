//! CSV ingestion, preprocessing and construction of spectral statistics.
//!
//! One CSV file holds one replicate: a header row of series names, then one
//! row per timepoint. Empty, `NA` or `NaN` cells are missing and take the
//! previous timepoint's value.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use tsgraph::spectral::{
    aggregate_periodogram, aggregate_periodogram_keep_dc, bartlett_split, daniell_smooth, piecewise_bin,
};
use tsgraph::{Series, SpectralStatistics, TimeSeriesPanel};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub names: Vec<String>,
    pub panel: TimeSeriesPanel,
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan")
}

fn read_one(path: &Path) -> Result<(Vec<String>, Series)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::parse(path, e.to_string()))?;
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::parse(path, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if names.is_empty() || names.iter().all(String::is_empty) {
        return Err(CliError::parse(path, "missing header row"));
    }
    let p = names.len();
    let mut data: Vec<f64> = Vec::new();
    let mut t = 0;
    for record in reader.records() {
        let record = record.map_err(|e| CliError::parse(path, e.to_string()))?;
        let line = record.position().map_or(t + 2, |pos| pos.line() as usize);
        for (d, cell) in record.iter().enumerate() {
            let v = if is_missing(cell) {
                if t == 0 {
                    return Err(CliError::parse(
                        path,
                        format!("line {line}, column '{}': leading value is missing", names[d]),
                    ));
                }
                data[(t - 1) * p + d]
            } else {
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        CliError::parse(path, format!("line {line}, column '{}': '{cell}' is not a number", names[d]))
                    })?
            };
            data.push(v);
        }
        t += 1;
    }
    if t == 0 {
        return Err(CliError::parse(path, "no data rows"));
    }
    Ok((names, Series::new(t, p, data)?))
}

/// Read one replicate per file. All files must share the header and length.
pub fn ingest_csv(paths: &[PathBuf]) -> Result<Dataset> {
    let first = paths
        .first()
        .ok_or_else(|| CliError::Input("no data files given".into()))?;
    let (names, series) = read_one(first)?;
    let mut replicates = vec![series];
    for path in &paths[1..] {
        let (other, series) = read_one(path)?;
        if other != names {
            return Err(CliError::parse(
                path,
                format!("header {:?} differs from {:?} in {}", other, names, first.display()),
            ));
        }
        if series.len() != replicates[0].len() {
            return Err(CliError::parse(
                path,
                format!("{} rows but {} has {}", series.len(), first.display(), replicates[0].len()),
            ));
        }
        replicates.push(series);
    }
    Ok(Dataset {
        names,
        panel: TimeSeriesPanel::new(replicates)?,
    })
}

/// `r_t = 100 · ln(x_t / x_{t−1})` per dimension; one row shorter.
pub fn log_return_transform(panel: &TimeSeriesPanel) -> Result<TimeSeriesPanel> {
    let mut out = Vec::with_capacity(panel.num_replicates());
    for (n, s) in panel.replicates().iter().enumerate() {
        if s.len() < 2 {
            return Err(CliError::Input(format!("log returns need at least 2 rows, replicate {n} has {}", s.len())));
        }
        let p = s.dim();
        if let Some((t, d)) = (0..s.len())
            .flat_map(|t| (0..p).map(move |d| (t, d)))
            .find(|&(t, d)| s.get(t, d) <= 0.0)
        {
            return Err(CliError::Input(format!(
                "log returns need positive prices; replicate {n}, row {t}, column {d} is {}",
                s.get(t, d)
            )));
        }
        let data = (1..s.len())
            .flat_map(|t| (0..p).map(move |d| 100.0 * (s.get(t, d) / s.get(t - 1, d)).ln()))
            .collect();
        out.push(Series::new(s.len() - 1, p, data)?);
    }
    Ok(TimeSeriesPanel::new(out)?)
}

/// How periodograms are pooled before scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothing {
    None,
    Daniell(usize),
    Bartlett(usize),
    Piecewise(usize),
}

impl Smoothing {
    /// Piecewise with `⌊√T⌋` bins for a single series, none otherwise.
    pub fn default_for(t: usize, n: usize) -> Smoothing {
        if n == 1 {
            Smoothing::Piecewise(isqrt(t).max(1))
        } else {
            Smoothing::None
        }
    }
}

pub fn isqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

impl fmt::Display for Smoothing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothing::None => write!(f, "none"),
            Smoothing::Daniell(m) => write!(f, "daniell:{m}"),
            Smoothing::Bartlett(m) => write!(f, "bartlett:{m}"),
            Smoothing::Piecewise(m) => write!(f, "piecewise:{m}"),
        }
    }
}

impl FromStr for Smoothing {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let num = || -> std::result::Result<usize, String> {
            arg.ok_or_else(|| format!("'{kind}' needs a parameter, e.g. {kind}:10"))?
                .parse()
                .map_err(|_| format!("bad parameter in '{s}'"))
        };
        match kind {
            "none" if arg.is_none() => Ok(Smoothing::None),
            "daniell" => Ok(Smoothing::Daniell(num()?)),
            "bartlett" => Ok(Smoothing::Bartlett(num()?)),
            "piecewise" => Ok(Smoothing::Piecewise(num()?)),
            _ => Err(format!("unknown smoothing '{s}'; use none, daniell:m, bartlett:M or piecewise:M")),
        }
    }
}

impl Serialize for Smoothing {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Smoothing {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preprocess {
    pub center: bool,
    pub log_returns: bool,
    /// Allow uncentred data, keeping the zero frequency.
    pub keep_dc_unsafe: bool,
}

impl Default for Preprocess {
    fn default() -> Self {
        Preprocess {
            center: true,
            log_returns: false,
            keep_dc_unsafe: false,
        }
    }
}

impl Preprocess {
    pub fn validate(&self) -> Result<()> {
        if !self.center && !self.keep_dc_unsafe {
            return Err(CliError::Config(
                "--no-center leaves the sample mean in the zero frequency, which the likelihood does not model; \
                 pass --keep-dc-unsafe to proceed anyway"
                    .into(),
            ));
        }
        Ok(())
    }

    /// Zero frequency is dropped whenever data are centred.
    pub fn drop_dc(&self) -> bool {
        self.center
    }

    /// Log returns (if requested); centring is left to [`statistics`].
    pub fn transform(&self, panel: &TimeSeriesPanel) -> Result<TimeSeriesPanel> {
        self.validate()?;
        if self.log_returns {
            log_return_transform(panel)
        } else {
            Ok(panel.clone())
        }
    }
}

fn periodogram(panel: &TimeSeriesPanel, pre: &Preprocess) -> Result<SpectralStatistics> {
    Ok(if pre.center {
        aggregate_periodogram(&panel.centered())?
    } else {
        aggregate_periodogram_keep_dc(panel)?
    })
}

/// Spectral statistics of an already transformed panel.
pub fn statistics(panel: &TimeSeriesPanel, smoothing: Smoothing, pre: &Preprocess) -> Result<SpectralStatistics> {
    pre.validate()?;
    match smoothing {
        Smoothing::None => periodogram(panel, pre),
        Smoothing::Daniell(m) => Ok(daniell_smooth(&periodogram(panel, pre)?, m)?),
        Smoothing::Piecewise(m) => Ok(piecewise_bin(&periodogram(panel, pre)?, m)?),
        Smoothing::Bartlett(m) => {
            let mut segments = Vec::new();
            for s in panel.replicates() {
                segments.extend_from_slice(bartlett_split(s, m)?.replicates());
            }
            periodogram(&TimeSeriesPanel::new(segments)?, pre)
        }
    }
}
