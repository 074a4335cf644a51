//! Small dense complex matrices and Hermitian Cholesky log-determinants.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default ridge coefficient used when a Cholesky factorization fails.
pub const DEFAULT_JITTER: f64 = 1e-8;

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::mismatch("likelihood", "matrix rows must form a square"));
        }
        Ok(CMatrix {
            n,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// Real part of the trace.
    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * self.n + i].re).sum()
    }

    /// `self += d d*`.
    pub fn add_outer(&mut self, d: &[Complex64]) {
        debug_assert_eq!(d.len(), self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                self.data[i * self.n + j] += d[i] * d[j].conj();
            }
        }
    }

    pub fn add_assign(&mut self, other: &CMatrix) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }

    pub fn scaled(&self, c: f64) -> CMatrix {
        CMatrix {
            n: self.n,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn conj(&self) -> CMatrix {
        CMatrix {
            n: self.n,
            data: self.data.iter().map(|v| v.conj()).collect(),
        }
    }

    /// Principal submatrix on the given (ordered) index set.
    pub fn principal(&self, idx: &[usize]) -> CMatrix {
        CMatrix::from_fn(idx.len(), |a, b| self.get(idx[a], idx[b]))
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Hermitian within `rel_tol` relative to the largest entry.
    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        (0..self.n).all(|i| {
            (0..self.n).all(|j| (self.get(i, j) - self.get(j, i).conj()).norm() <= rel_tol * scale)
        })
    }

    /// Positive semidefinite in the sense that every eigenvalue is at least
    /// `-rel_tol * trace / n`: the shifted matrix must admit a Cholesky factor.
    pub fn is_psd(&self, rel_tol: f64) -> bool {
        if self.n == 0 {
            return true;
        }
        let shift = (rel_tol * self.trace().abs() / self.n as f64).max(f64::MIN_POSITIVE);
        let mut buf = self.data.clone();
        for i in 0..self.n {
            buf[i * self.n + i] += shift;
        }
        cholesky_logdet_in_place(&mut buf, self.n).is_some()
    }
}

/// In-place lower Cholesky factorization `A = L L*`; returns `log|A|` or
/// `None` when a pivot is not strictly positive.
fn cholesky_logdet_in_place(a: &mut [Complex64], n: usize) -> Option<f64> {
    let mut logdet = 0.0;
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for k in 0..j {
            d -= a[j * n + k].norm_sqr();
        }
        if !(d > 0.0 && d.is_finite()) {
            return None;
        }
        let l = d.sqrt();
        a[j * n + j] = Complex64::new(l, 0.0);
        logdet += d.ln();
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k].conj();
            }
            a[i * n + j] = s / l;
        }
    }
    Some(logdet)
}

/// `log|W_A|` for the principal submatrix of `w` on `idx`, with one jittered
/// retry. `buf` is scratch space reused across calls.
pub(crate) fn principal_logdet(
    w: &CMatrix,
    idx: &[usize],
    jitter: f64,
    buf: &mut Vec<Complex64>,
    context: impl FnOnce() -> String,
) -> Result<f64> {
    let q = idx.len();
    if q == 0 {
        return Ok(0.0);
    }
    let fill = |buf: &mut Vec<Complex64>| {
        buf.clear();
        for &i in idx {
            for &j in idx {
                buf.push(w.get(i, j));
            }
        }
    };
    fill(buf);
    if let Some(ld) = cholesky_logdet_in_place(buf, q) {
        return Ok(ld);
    }
    fill(buf);
    let trace: f64 = (0..q).map(|a| buf[a * q + a].re).sum();
    let ridge = jitter * trace.abs() / q as f64;
    for a in 0..q {
        buf[a * q + a] += ridge;
    }
    cholesky_logdet_in_place(buf, q).ok_or_else(|| Error::Singular { context: context() })
}

/// `log|W|` of a Hermitian positive definite matrix via complex Cholesky.
///
/// On failure a ridge `jitter · trace/p · I` is added and the factorization
/// retried once.
pub fn hermitian_chol_logdet(w: &CMatrix, jitter: f64) -> Result<f64> {
    let idx: Vec<usize> = (0..w.dim()).collect();
    let mut buf = Vec::with_capacity(w.dim() * w.dim());
    principal_logdet(w, &idx, jitter, &mut buf, || format!("{}x{} matrix", w.dim(), w.dim()))
}

impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.n)
            .map(|i| (0..self.n).map(|j| [self.get(i, j).re, self.get(i, j).im]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(deserializer)?;
        let rows: Vec<Vec<Complex64>> = rows
            .into_iter()
            .map(|r| r.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
            .collect();
        CMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}
