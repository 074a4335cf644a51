//! From raw multivariate series to per-frequency Hermitian sufficient
//! statistics.
//!
//! Fourier coefficients use the `1/T` normalization
//! `d_k = (1/T) Σ_t x_t e^{-2πikt/T}`. Periodogram matrices are summed over
//! replicates (`P_k = Σ_n d_nk d_nk*`) and each [`SpectralEntry`] records how
//! many periodogram terms went into it as its degrees of freedom.
//!
//! Frequency `k = 0` is dropped whenever the panel is mean-centred: after
//! centring `d_0 = 0` exactly and its statistic carries no information.

use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

const MODULE: &str = "spectral";

/// One real-valued series, `T` rows by `p` columns, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    len: usize,
    dim: usize,
    data: Vec<f64>,
}

impl Series {
    pub fn new(len: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != len * dim {
            return Err(Error::mismatch(
                MODULE,
                format!("series buffer has {} values, expected {len}x{dim}", data.len()),
            ));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(
                MODULE,
                format!("non-finite value at t={}, dim={}", pos / dim.max(1), pos % dim.max(1)),
            ));
        }
        Ok(Series { len, dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::input(MODULE, "ragged rows"));
        }
        Series::new(rows.len(), dim, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, t: usize, d: usize) -> f64 {
        self.data[t * self.dim + d]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn column(&self, d: usize) -> Vec<f64> {
        (0..self.len).map(|t| self.get(t, d)).collect()
    }

    /// Rows `start..end` as a new series.
    pub fn slice(&self, start: usize, end: usize) -> Series {
        Series {
            len: end - start,
            dim: self.dim,
            data: self.data[start * self.dim..end * self.dim].to_vec(),
        }
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.dim];
        for t in 0..self.len {
            for (m, v) in means.iter_mut().zip(self.row(t)) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= self.len as f64);
        means
    }

    pub fn centered(&self) -> Series {
        let means = self.column_means();
        let mut data = self.data.clone();
        for row in data.chunks_mut(self.dim.max(1)) {
            for (v, m) in row.iter_mut().zip(&means) {
                *v -= m;
            }
        }
        Series {
            len: self.len,
            dim: self.dim,
            data,
        }
    }
}

/// `N` replicate series sharing `T` and `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    replicates: Vec<Series>,
    mean_centered: bool,
}

impl TimeSeriesPanel {
    pub fn new(replicates: Vec<Series>) -> Result<Self> {
        if let Some(first) = replicates.first() {
            for (n, r) in replicates.iter().enumerate() {
                if r.len() != first.len() || r.dim() != first.dim() {
                    return Err(Error::mismatch(
                        MODULE,
                        format!(
                            "replicate {n} is {}x{}, replicate 0 is {}x{}",
                            r.len(),
                            r.dim(),
                            first.len(),
                            first.dim()
                        ),
                    ));
                }
            }
        }
        Ok(TimeSeriesPanel {
            replicates,
            mean_centered: false,
        })
    }

    pub fn replicates(&self) -> &[Series] {
        &self.replicates
    }

    pub fn num_replicates(&self) -> usize {
        self.replicates.len()
    }

    pub fn len(&self) -> usize {
        self.replicates.first().map_or(0, Series::len)
    }

    pub fn is_empty(&self) -> bool {
        self.replicates.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.replicates.first().map_or(0, Series::dim)
    }

    pub fn is_mean_centered(&self) -> bool {
        self.mean_centered
    }

    /// Subtract each replicate's per-dimension sample mean.
    pub fn centered(&self) -> TimeSeriesPanel {
        TimeSeriesPanel {
            replicates: self.replicates.iter().map(Series::centered).collect(),
            mean_centered: true,
        }
    }

    /// Apply `f` to every replicate, keeping the centring flag off.
    pub fn try_map(&self, f: impl Fn(&Series) -> Result<Series>) -> Result<TimeSeriesPanel> {
        TimeSeriesPanel::new(self.replicates.iter().map(f).collect::<Result<_>>()?)
    }
}

/// `T x p` Fourier coefficients (row `k`, column = dimension) using a fast
/// transform.
pub fn dft_coefficients(series: &Series) -> Result<Vec<Vec<Complex64>>> {
    let t = series.len();
    if t < 2 {
        return Err(Error::input(MODULE, format!("series length {t} < 2")));
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(t);
    let scale = 1.0 / t as f64;
    let mut out = vec![vec![Complex64::new(0.0, 0.0); series.dim()]; t];
    let mut buf = vec![Complex64::new(0.0, 0.0); t];
    for d in 0..series.dim() {
        for (k, b) in buf.iter_mut().enumerate() {
            *b = Complex64::new(series.get(k, d), 0.0);
        }
        fft.process(&mut buf);
        for (row, v) in out.iter_mut().zip(&buf) {
            row[d] = v * scale;
        }
    }
    Ok(out)
}

/// Direct `O(T²)` evaluation of the same coefficients; a reference for tests.
pub fn dft_reference(series: &Series) -> Vec<Vec<Complex64>> {
    let t = series.len();
    let tf = t as f64;
    (0..t)
        .map(|k| {
            (0..series.dim())
                .map(|d| {
                    (0..t).fold(Complex64::new(0.0, 0.0), |acc, s| {
                        let angle = -2.0 * std::f64::consts::PI * ((k * s) % t) as f64 / tf;
                        acc + Complex64::from_polar(series.get(s, d), angle)
                    }) / tf
                })
                .collect()
        })
        .collect()
}

/// How the entries of a [`SpectralStatistics`] were formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StatLayout {
    /// One entry per retained Fourier frequency.
    PerFrequency,
    /// Daniell window sums of half-width `m`, one entry per frequency.
    Daniell { m: usize },
    /// Sums over `bins` equal-width frequency intervals.
    Piecewise { bins: usize },
}

/// A block of Fourier frequencies `freq_start..=freq_end` and the summed
/// periodogram over them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralEntry {
    pub freq_start: usize,
    pub freq_end: usize,
    pub stat: CMatrix,
    pub dof: f64,
}

/// Per-frequency (or per-bin) Hermitian sufficient statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralStatistics {
    pub dim: usize,
    pub series_len: usize,
    pub num_replicates: usize,
    pub layout: StatLayout,
    pub excluded_frequencies: Vec<usize>,
    pub entries: Vec<SpectralEntry>,
}

impl SpectralStatistics {
    pub fn total_dof(&self) -> f64 {
        self.entries.iter().map(|e| e.dof).sum()
    }

    pub fn min_dof(&self) -> Option<f64> {
        self.entries.iter().map(|e| e.dof).reduce(f64::min)
    }

    pub fn total_trace(&self) -> f64 {
        self.entries.iter().map(|e| e.stat.trace()).sum()
    }

    /// Checks shape, Hermitian symmetry, positive semidefiniteness and
    /// disjointness of the frequency ranges.
    pub fn validate(&self) -> Result<()> {
        let mut last_end: Option<usize> = None;
        for (n, e) in self.entries.iter().enumerate() {
            if e.stat.dim() != self.dim {
                return Err(Error::mismatch(
                    MODULE,
                    format!("entry {n} is {0}x{0}, expected p={1}", e.stat.dim(), self.dim),
                ));
            }
            if !(e.dof >= 0.0 && e.dof.is_finite()) || e.freq_end < e.freq_start {
                return Err(Error::input(MODULE, format!("entry {n} has invalid dof or range")));
            }
            if !e.stat.is_hermitian(1e-10) || !e.stat.is_psd(1e-10) {
                return Err(Error::input(MODULE, format!("entry {n} is not Hermitian PSD")));
            }
            if last_end.is_some_and(|end| e.freq_start <= end) {
                return Err(Error::input(MODULE, format!("entry {n} overlaps its predecessor")));
            }
            last_end = Some(e.freq_end);
        }
        Ok(())
    }

    /// Scoring weights that exploit conjugate symmetry: per-frequency
    /// statistics at `k` and `T-k` are conjugates, so only the lower half is
    /// visited with weight 2 (the Nyquist and DC terms once).
    ///
    /// Returns `None` when the entries do not pair up exactly.
    pub fn conjugate_half_plan(&self) -> Option<Vec<(usize, f64)>> {
        if matches!(self.layout, StatLayout::Piecewise { .. }) {
            return None;
        }
        let t = self.series_len;
        let mut by_freq = std::collections::HashMap::with_capacity(self.entries.len());
        for (n, e) in self.entries.iter().enumerate() {
            if e.freq_start != e.freq_end || e.freq_start >= t {
                return None;
            }
            by_freq.insert(e.freq_start, n);
        }
        let mut plan = Vec::with_capacity(self.entries.len() / 2 + 1);
        for (n, e) in self.entries.iter().enumerate() {
            let k = e.freq_start;
            let partner = (t - k) % t;
            if partner == k {
                plan.push((n, 1.0));
                continue;
            }
            let &m = by_freq.get(&partner)?;
            let other = &self.entries[m];
            let tol = 1e-10 * e.stat.max_abs().max(f64::MIN_POSITIVE);
            if other.dof != e.dof || other.stat.conj().max_abs_diff(&e.stat) > tol {
                return None;
            }
            if k < partner {
                plan.push((n, 2.0));
            }
        }
        Some(plan)
    }

    /// Compact binary cache: 16-byte magic, version byte, then little-endian
    /// fields with matrices row-major and `re, im` interleaved.
    pub fn write_cache<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e: std::io::Error| Error::input(MODULE, format!("cache write failed: {e}"));
        let mut buf = Vec::new();
        buf.extend_from_slice(CACHE_MAGIC);
        buf.push(CACHE_VERSION);
        let (tag, param) = match self.layout {
            StatLayout::PerFrequency => (0u8, 0u64),
            StatLayout::Daniell { m } => (1, m as u64),
            StatLayout::Piecewise { bins } => (2, bins as u64),
        };
        buf.push(tag);
        for v in [
            param,
            self.dim as u64,
            self.series_len as u64,
            self.num_replicates as u64,
            self.excluded_frequencies.len() as u64,
            self.entries.len() as u64,
        ] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for &k in &self.excluded_frequencies {
            buf.extend_from_slice(&(k as u64).to_le_bytes());
        }
        for e in &self.entries {
            buf.extend_from_slice(&(e.freq_start as u64).to_le_bytes());
            buf.extend_from_slice(&(e.freq_end as u64).to_le_bytes());
            buf.extend_from_slice(&e.dof.to_le_bytes());
            for v in e.stat.as_slice() {
                buf.extend_from_slice(&v.re.to_le_bytes());
                buf.extend_from_slice(&v.im.to_le_bytes());
            }
        }
        w.write_all(&buf).map_err(io)
    }

    pub fn read_cache<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)
            .map_err(|e| Error::input(MODULE, format!("cache read failed: {e}")))?;
        let mut cur = CacheCursor { bytes: &bytes, pos: 0 };
        if cur.take(16)? != CACHE_MAGIC {
            return Err(Error::input(MODULE, "not a spectral statistics cache (bad magic)"));
        }
        let version = cur.take(1)?[0];
        if version != CACHE_VERSION {
            return Err(Error::input(MODULE, format!("unsupported cache version {version}")));
        }
        let tag = cur.take(1)?[0];
        let param = cur.u64()? as usize;
        let layout = match tag {
            0 => StatLayout::PerFrequency,
            1 => StatLayout::Daniell { m: param },
            2 => StatLayout::Piecewise { bins: param },
            other => return Err(Error::input(MODULE, format!("unknown layout tag {other}"))),
        };
        let dim = cur.u64()? as usize;
        let series_len = cur.u64()? as usize;
        let num_replicates = cur.u64()? as usize;
        let n_excluded = cur.u64()? as usize;
        let n_entries = cur.u64()? as usize;
        let excluded_frequencies = (0..n_excluded)
            .map(|_| cur.u64().map(|v| v as usize))
            .collect::<Result<_>>()?;
        let mut entries = Vec::with_capacity(n_entries.min(1 << 20));
        for _ in 0..n_entries {
            let freq_start = cur.u64()? as usize;
            let freq_end = cur.u64()? as usize;
            let dof = cur.f64()?;
            let mut stat = CMatrix::zeros(dim);
            for i in 0..dim {
                for j in 0..dim {
                    let re = cur.f64()?;
                    let im = cur.f64()?;
                    stat.set(i, j, Complex64::new(re, im));
                }
            }
            entries.push(SpectralEntry {
                freq_start,
                freq_end,
                stat,
                dof,
            });
        }
        if cur.pos != bytes.len() {
            return Err(Error::input(MODULE, "trailing bytes in cache"));
        }
        Ok(SpectralStatistics {
            dim,
            series_len,
            num_replicates,
            layout,
            excluded_frequencies,
            entries,
        })
    }
}

pub const CACHE_MAGIC: &[u8; 16] = b"TSGRAPH-SPECTRA\0";
pub const CACHE_VERSION: u8 = 1;

struct CacheCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl CacheCursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::input(MODULE, "truncated cache"));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

fn periodogram(panel: &TimeSeriesPanel, keep_dc: bool) -> Result<SpectralStatistics> {
    let n = panel.num_replicates();
    let t = panel.len();
    if n == 0 {
        return Err(Error::input(MODULE, "panel has no replicates"));
    }
    if t < 2 {
        return Err(Error::input(MODULE, format!("series length {t} < 2")));
    }
    let p = panel.dim();
    let coeffs: Vec<Vec<Vec<Complex64>>> = panel
        .replicates()
        .par_iter()
        .map(dft_coefficients)
        .collect::<Result<_>>()?;
    let first = if keep_dc { 0 } else { 1 };
    let entries = (first..t)
        .map(|k| {
            let mut stat = CMatrix::zeros(p);
            for c in &coeffs {
                stat.add_outer(&c[k]);
            }
            SpectralEntry {
                freq_start: k,
                freq_end: k,
                stat,
                dof: n as f64,
            }
        })
        .collect();
    Ok(SpectralStatistics {
        dim: p,
        series_len: t,
        num_replicates: n,
        layout: StatLayout::PerFrequency,
        excluded_frequencies: if keep_dc { vec![] } else { vec![0] },
        entries,
    })
}

/// Replicate-summed periodogram at every Fourier frequency except `k = 0`.
///
/// The panel must be mean-centred; see [`TimeSeriesPanel::centered`].
pub fn aggregate_periodogram(panel: &TimeSeriesPanel) -> Result<SpectralStatistics> {
    if !panel.is_mean_centered() {
        return Err(Error::input(
            MODULE,
            "panel must be mean-centred before computing periodograms",
        ));
    }
    periodogram(panel, false)
}

/// Like [`aggregate_periodogram`] but for uncentred data, keeping `k = 0`.
/// The zero-frequency term then reflects the sample mean, which the Whittle
/// model does not account for.
pub fn aggregate_periodogram_keep_dc(panel: &TimeSeriesPanel) -> Result<SpectralStatistics> {
    periodogram(panel, true)
}

/// Daniell smoothing: each entry becomes the sum of the `2m+1` neighbouring
/// periodograms, wrapping around the circle of retained frequencies.
pub fn daniell_smooth(stats: &SpectralStatistics, m: usize) -> Result<SpectralStatistics> {
    if stats.layout != StatLayout::PerFrequency {
        return Err(Error::input(MODULE, "Daniell smoothing needs unsmoothed per-frequency statistics"));
    }
    let r = stats.entries.len();
    let window = 2 * m + 1;
    if window > r {
        return Err(Error::config(
            MODULE,
            format!("Daniell window 2m+1={window} exceeds the {r} retained frequencies"),
        ));
    }
    let entries = (0..r)
        .map(|c| {
            let mut stat = CMatrix::zeros(stats.dim);
            let mut dof = 0.0;
            for off in 0..window {
                let src = &stats.entries[(c + r + off - m) % r];
                stat.add_assign(&src.stat);
                dof += src.dof;
            }
            SpectralEntry {
                freq_start: stats.entries[c].freq_start,
                freq_end: stats.entries[c].freq_end,
                stat,
                dof,
            }
        })
        .collect();
    Ok(SpectralStatistics {
        layout: StatLayout::Daniell { m },
        entries,
        ..stats.clone_header()
    })
}

/// Split one series into `segments` consecutive pieces of length
/// `⌊T/segments⌋`; trailing samples are dropped.
pub fn bartlett_split(series: &Series, segments: usize) -> Result<TimeSeriesPanel> {
    let t = series.len();
    if segments == 0 || segments > t / 2 {
        return Err(Error::config(
            MODULE,
            format!("Bartlett split needs 1 <= M <= T/2, got M={segments} with T={t}"),
        ));
    }
    let len = t / segments;
    TimeSeriesPanel::new((0..segments).map(|s| series.slice(s * len, (s + 1) * len)).collect())
}

/// Sum per-frequency statistics over `bins` equal intervals of `[0, 2π)`.
/// Frequency `k` falls in bin `⌊kM/T⌋`; empty bins are dropped.
pub fn piecewise_bin(stats: &SpectralStatistics, bins: usize) -> Result<SpectralStatistics> {
    if bins < 1 {
        return Err(Error::config(MODULE, "piecewise binning needs M >= 1"));
    }
    if stats.layout != StatLayout::PerFrequency {
        return Err(Error::input(MODULE, "piecewise binning needs unbinned per-frequency statistics"));
    }
    let t = stats.series_len;
    let mut entries: Vec<(usize, SpectralEntry)> = Vec::new();
    for e in &stats.entries {
        let bin = e.freq_start * bins / t;
        match entries.last_mut() {
            Some((b, acc)) if *b == bin => {
                acc.stat.add_assign(&e.stat);
                acc.dof += e.dof;
                acc.freq_end = e.freq_end;
            }
            _ => entries.push((bin, e.clone())),
        }
    }
    Ok(SpectralStatistics {
        layout: StatLayout::Piecewise { bins },
        entries: entries.into_iter().map(|(_, e)| e).collect(),
        ..stats.clone_header()
    })
}

impl SpectralStatistics {
    fn clone_header(&self) -> SpectralStatistics {
        SpectralStatistics {
            dim: self.dim,
            series_len: self.series_len,
            num_replicates: self.num_replicates,
            layout: self.layout,
            excluded_frequencies: self.excluded_frequencies.clone(),
            entries: Vec::new(),
        }
    }
}
