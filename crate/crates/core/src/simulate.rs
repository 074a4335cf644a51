//! VAR(1) benchmark data with ground-truth graphs, and recovery metrics.

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::is_decomposable;
use crate::spectral::{Series, TimeSeriesPanel};

const MODULE: &str = "simulate";

pub const DEFAULT_BURN_IN: usize = 500;
pub const DEFAULT_MAX_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub p: usize,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub rho: f64,
    pub diag_value: f64,
    pub offdiag_value: f64,
    pub seed: u64,
    pub require_decomposable: bool,
    pub burn_in: usize,
    pub max_attempts: usize,
}

impl SimConfig {
    pub fn new(p: usize, t: usize, n: usize) -> Self {
        SimConfig {
            p,
            t,
            n,
            rho: 0.2,
            diag_value: 0.5,
            offdiag_value: 0.5,
            seed: 0,
            require_decomposable: true,
            burn_in: DEFAULT_BURN_IN,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.t == 0 || self.n == 0 {
            return Err(Error::config(MODULE, "p, T and N must be positive"));
        }
        if !(self.rho >= 0.0 && self.rho <= 1.0) {
            return Err(Error::config(MODULE, "rho must lie in [0, 1]"));
        }
        if self.diag_value.is_nan() || self.diag_value.abs() >= 1.0 {
            return Err(Error::config(MODULE, "|diag_value| must be below 1 for stationarity"));
        }
        if !self.offdiag_value.is_finite() {
            return Err(Error::config(MODULE, "offdiag_value must be finite"));
        }
        if self.max_attempts == 0 {
            return Err(Error::config(MODULE, "max_attempts must be positive"));
        }
        Ok(())
    }
}

/// `x(t) = A x(t−1) + ε(t)` with identity noise covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarModel {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub true_edges: Vec<[usize; 2]>,
    pub seed: u64,
    /// Samples discarded from the start of each replicate, which begins at
    /// `x(0) = 0`.
    pub burn_in: usize,
}

impl VarModel {
    /// Build from a coefficient matrix, deriving the true graph.
    pub fn from_matrix(a: Vec<Vec<f64>>, seed: u64, burn_in: usize) -> Result<Self> {
        let p = a.len();
        if a.iter().any(|r| r.len() != p) {
            return Err(Error::mismatch(MODULE, "A must be square"));
        }
        if a.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::input(MODULE, "A has non-finite entries"));
        }
        let true_edges = var1_true_graph(&a).into_iter().map(|(i, j)| [i, j]).collect();
        Ok(VarModel {
            a,
            true_edges,
            seed,
            burn_in,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.true_edges.iter().map(|e| (e[0], e[1])).collect()
    }

    /// Spectral radius when `A` is triangular (its diagonal holds the
    /// eigenvalues).
    pub fn triangular_spectral_radius(&self) -> Option<f64> {
        let p = self.dim();
        let upper = (0..p).all(|i| (0..i).all(|j| self.a[i][j] == 0.0));
        let lower = (0..p).all(|i| (i + 1..p).all(|j| self.a[i][j] == 0.0));
        (upper || lower).then(|| (0..p).map(|i| self.a[i][i].abs()).fold(0.0, f64::max))
    }
}

/// Pairs `(i,j)`, `i<j`, whose entry of `I + AᵀA + e^{−iλ}A + e^{iλ}Aᵀ` is not
/// identically zero. Decided on the sparsity pattern alone.
pub fn var1_true_graph(a: &[Vec<f64>]) -> BTreeSet<(usize, usize)> {
    let p = a.len();
    let nz = |i: usize, j: usize| a[i][j] != 0.0;
    let mut edges = BTreeSet::new();
    for i in 0..p {
        for j in i + 1..p {
            let ata = (0..p).any(|k| nz(k, i) && nz(k, j));
            if nz(i, j) || nz(j, i) || ata {
                edges.insert((i, j));
            }
        }
    }
    edges
}

/// Rejection-sample an upper-triangular `A` with constant diagonal and
/// Bernoulli-masked off-diagonal entries.
pub fn sample_var_model<R: Rng>(config: &SimConfig, rng: &mut R) -> Result<VarModel> {
    config.validate()?;
    let p = config.p;
    for _ in 0..config.max_attempts {
        let mut a = vec![vec![0.0; p]; p];
        for (i, row) in a.iter_mut().enumerate() {
            row[i] = config.diag_value;
            for v in row.iter_mut().skip(i + 1) {
                if rng.random_bool(config.rho) {
                    *v = config.offdiag_value;
                }
            }
        }
        let model = VarModel::from_matrix(a, config.seed, config.burn_in)?;
        let stationary = model.triangular_spectral_radius().is_some_and(|r| r < 1.0);
        if stationary && (!config.require_decomposable || is_decomposable(p, &model.edges())?) {
            return Ok(model);
        }
    }
    Err(Error::Generation {
        attempts: config.max_attempts,
    })
}

/// Simulate `n` independent replicates of length `t` after discarding the
/// model's burn-in.
pub fn generate_panel<R: Rng>(model: &VarModel, t: usize, n: usize, rng: &mut R) -> Result<TimeSeriesPanel> {
    if t == 0 || n == 0 {
        return Err(Error::input(MODULE, "T and N must be positive"));
    }
    let p = model.dim();
    let mut replicates = Vec::with_capacity(n);
    for _ in 0..n {
        let mut x = vec![0.0; p];
        let mut next = vec![0.0; p];
        let mut data = Vec::with_capacity(t * p);
        for step in 0..model.burn_in + t {
            for (i, out) in next.iter_mut().enumerate() {
                let ar: f64 = model.a[i].iter().zip(&x).map(|(a, v)| a * v).sum();
                *out = ar + rng.sample::<f64, _>(StandardNormal);
            }
            std::mem::swap(&mut x, &mut next);
            if step >= model.burn_in {
                data.extend_from_slice(&x);
            }
        }
        replicates.push(Series::new(t, p, data)?);
    }
    TimeSeriesPanel::new(replicates)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryMetrics {
    pub tpr: f64,
    pub fpr: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

/// Confusion counts over the `p(p−1)/2` unordered pairs. Edge order within a
/// pair is ignored.
pub fn recovery_metrics(
    estimated: &[(usize, usize)],
    truth: &[(usize, usize)],
    p: usize,
) -> Result<RecoveryMetrics> {
    let norm = |edges: &[(usize, usize)]| -> Result<BTreeSet<(usize, usize)>> {
        edges
            .iter()
            .map(|&(i, j)| {
                if i >= p || j >= p {
                    Err(Error::InvalidNode { index: i.max(j), p })
                } else if i == j {
                    Err(Error::SelfLoop(i))
                } else {
                    Ok((i.min(j), i.max(j)))
                }
            })
            .collect()
    };
    let est = norm(estimated)?;
    let tru = norm(truth)?;
    let m = p * p.saturating_sub(1) / 2;
    let tp = est.intersection(&tru).count();
    let fp = est.len() - tp;
    let fn_ = tru.len() - tp;
    let tn = m - tp - fp - fn_;
    Ok(RecoveryMetrics {
        tpr: if tp + fn_ == 0 { 1.0 } else { tp as f64 / (tp + fn_) as f64 },
        fpr: if fp + tn == 0 { 0.0 } else { fp as f64 / (fp + tn) as f64 },
        tp,
        fp,
        fn_,
        tn,
    })
}
