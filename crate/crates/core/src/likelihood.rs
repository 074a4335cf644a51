//! Closed-form graph scores under a hyper complex inverse Wishart prior.
//!
//! For a decomposable graph the marginal likelihood of the spectral
//! statistics factorizes over cliques and separators:
//!
//! ```text
//! log p(X | G) = Σ_entries [ log h(W_k, δ_k, G) − log h(W_k + P_k, δ_k + ν_k, G) ] − (Σ ν_k) p log π
//! log h(W, δ, G) = Σ_C log B(W_C, δ) − Σ_S log B(W_S, δ)
//! log B(W, δ)   = (δ + q) log|W| − q(q−1)/2 log π − Σ_{j=1..q} log Γ(δ + q − j + 1)
//! ```
//!
//! where `ν_k` is the entry's degrees of freedom. The fractional variant uses
//! `W_k = g P_k`, `δ_k = g ν_k` as prior and `P_k`, `ν_k` as posterior.
//! Factorials are generalized to `Γ(n + 1)` since `g ν_k` is rarely an
//! integer.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::graphs::{log_graph_prior, CliqueDecomposition, DecomposableGraph, GraphPriorConfig};
use crate::linalg::{principal_logdet, CMatrix, DEFAULT_JITTER};
use crate::spectral::SpectralStatistics;

const MODULE: &str = "likelihood";

/// How the prior scale matrices and degrees of freedom are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorMode {
    /// One `(δ_k, W_k)` per statistics entry.
    Explicit { dof: Vec<f64>, scale: Vec<CMatrix> },
    /// Fractional prior `(g ν_k, g P_k)` with `0 < g < 1`.
    Fractional { g: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiwPrior {
    pub mode: PriorMode,
    /// Ridge coefficient applied (relative to `trace/q`) when a Cholesky
    /// factorization fails.
    pub jitter: f64,
}

impl HiwPrior {
    pub fn fractional(g: f64) -> Result<Self> {
        if !(g > 0.0 && g < 1.0) {
            return Err(Error::config(MODULE, format!("fractional prior needs 0 < g < 1, got {g}")));
        }
        Ok(HiwPrior {
            mode: PriorMode::Fractional { g },
            jitter: DEFAULT_JITTER,
        })
    }

    pub fn explicit(dof: Vec<f64>, scale: Vec<CMatrix>) -> Result<Self> {
        if dof.len() != scale.len() {
            return Err(Error::mismatch(MODULE, "prior dof and scale lists differ in length"));
        }
        if let Some(n) = dof.iter().position(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::config(MODULE, format!("prior entry {n} needs δ > 0")));
        }
        if let Some(n) = scale.iter().position(|w| !w.is_hermitian(1e-10) || !w.is_psd(1e-10)) {
            return Err(Error::config(MODULE, format!("prior scale {n} is not Hermitian PSD")));
        }
        Ok(HiwPrior {
            mode: PriorMode::Explicit { dof, scale },
            jitter: DEFAULT_JITTER,
        })
    }

    pub fn with_jitter(mut self, jitter: f64) -> Self {
        self.jitter = jitter;
        self
    }
}

/// A graph with its unnormalized log posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredGraph {
    pub graph: DecomposableGraph,
    pub log_marginal: f64,
    pub log_prior: f64,
    pub log_posterior: f64,
}

impl ScoredGraph {
    pub fn new(graph: DecomposableGraph, log_marginal: f64, prior: &GraphPriorConfig) -> Self {
        let log_prior = log_graph_prior(&graph, prior);
        ScoredGraph {
            graph,
            log_marginal,
            log_prior,
            log_posterior: log_marginal + log_prior,
        }
    }
}

fn sum_log_gamma(delta: f64, q: usize) -> f64 {
    (1..=q).map(|j| ln_gamma(delta + (q - j) as f64 + 1.0)).sum()
}

fn log_b_from_logdet(logdet: f64, q: usize, delta: f64) -> f64 {
    if q == 0 {
        return 0.0;
    }
    let qf = q as f64;
    (delta + qf) * logdet - qf * (qf - 1.0) / 2.0 * PI.ln() - sum_log_gamma(delta, q)
}

/// `log B(W, δ)` for the complex inverse Wishart normalizer.
pub fn log_complex_iw_normalizer(w: &CMatrix, delta: f64, jitter: f64) -> Result<f64> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::config(MODULE, format!("degrees of freedom must be positive, got {delta}")));
    }
    let idx: Vec<usize> = (0..w.dim()).collect();
    let mut buf = Vec::new();
    let ld = principal_logdet(w, &idx, jitter, &mut buf, || format!("{0}x{0} scale matrix", w.dim()))?;
    Ok(log_b_from_logdet(ld, w.dim(), delta))
}

/// `log h(W, δ, G) = Σ_C log B(W_C, δ) − Σ_S log B(W_S, δ)`.
pub fn log_h(w: &CMatrix, delta: f64, decomposition: &CliqueDecomposition, jitter: f64) -> Result<f64> {
    let mut buf = Vec::new();
    let mut term = |set: &[usize]| -> Result<f64> {
        let ld = principal_logdet(w, set, jitter, &mut buf, || format!("clique {set:?}"))?;
        Ok(log_b_from_logdet(ld, set.len(), delta))
    };
    let mut total = 0.0;
    for c in &decomposition.cliques {
        total += term(c)?;
    }
    for s in &decomposition.separators {
        total -= term(s)?;
    }
    Ok(total)
}

fn check_dims(stats: &SpectralStatistics, graph: &DecomposableGraph) -> Result<()> {
    if stats.dim != graph.num_nodes() {
        return Err(Error::mismatch(
            MODULE,
            format!("statistics have p={} but graph has p={}", stats.dim, graph.num_nodes()),
        ));
    }
    Ok(())
}

fn pi_constant(total_dof: f64, p: usize) -> f64 {
    -total_dof * p as f64 * PI.ln()
}

fn rank_guard(stats: &SpectralStatistics, clique_size: usize) -> Result<()> {
    let required = clique_size + 1;
    for (entry, e) in stats.entries.iter().enumerate() {
        if e.dof < required as f64 {
            return Err(Error::RankDeficient {
                entry,
                dof: e.dof,
                clique_size,
                required,
            });
        }
    }
    Ok(())
}

/// Full log marginal likelihood computed entry by entry from `log h`.
///
/// Fractional priors dispatch to [`log_fractional_marginal`].
pub fn log_marginal_likelihood(
    stats: &SpectralStatistics,
    graph: &DecomposableGraph,
    prior: &HiwPrior,
) -> Result<f64> {
    check_dims(stats, graph)?;
    let (dof, scale) = match &prior.mode {
        PriorMode::Fractional { g } => return fractional_with_jitter(stats, graph, *g, prior.jitter),
        PriorMode::Explicit { dof, scale } => (dof, scale),
    };
    if dof.len() != stats.entries.len() {
        return Err(Error::mismatch(MODULE, "prior has a different number of entries than the statistics"));
    }
    let decomposition = graph.decomposition();
    let mut total = 0.0;
    for ((e, &delta), w) in stats.entries.iter().zip(dof).zip(scale) {
        let mut post = w.clone();
        post.add_assign(&e.stat);
        total += log_h(w, delta, decomposition, prior.jitter)?
            - log_h(&post, delta + e.dof, decomposition, prior.jitter)?;
    }
    Ok(total + pi_constant(stats.total_dof(), stats.dim))
}

/// Fractional log marginal likelihood with fraction `g` of the data as prior.
pub fn log_fractional_marginal(stats: &SpectralStatistics, graph: &DecomposableGraph, g: f64) -> Result<f64> {
    check_dims(stats, graph)?;
    fractional_with_jitter(stats, graph, g, DEFAULT_JITTER)
}

fn fractional_with_jitter(
    stats: &SpectralStatistics,
    graph: &DecomposableGraph,
    g: f64,
    jitter: f64,
) -> Result<f64> {
    HiwPrior::fractional(g)?;
    let decomposition = graph.decomposition();
    rank_guard(stats, decomposition.max_clique_size())?;
    let mut total = 0.0;
    for e in &stats.entries {
        total += log_h(&e.stat.scaled(g), g * e.dof, decomposition, jitter)?
            - log_h(&e.stat, e.dof, decomposition, jitter)?;
    }
    Ok(total + pi_constant(stats.total_dof(), stats.dim))
}

/// Additive contribution of one node set (clique or separator), summed over
/// entries. Excludes the `π` constant.
pub fn clique_log_marginal(clique: &[usize], stats: &SpectralStatistics, prior: &HiwPrior) -> Result<f64> {
    Scorer::new(stats, prior)?.clique_term(clique)
}

/// Predictive score of `test` under a prior centred on `train`:
/// `W_k = train stat`, `δ_k = train dof`.
pub fn predictive_log_likelihood(
    train: &SpectralStatistics,
    test: &SpectralStatistics,
    graph: &DecomposableGraph,
) -> Result<f64> {
    aligned(train, test)?;
    let prior = HiwPrior::explicit(
        train.entries.iter().map(|e| e.dof).collect(),
        train.entries.iter().map(|e| e.stat.clone()).collect(),
    )?;
    log_marginal_likelihood(test, graph, &prior)
}

fn aligned(train: &SpectralStatistics, test: &SpectralStatistics) -> Result<()> {
    let same = train.dim == test.dim
        && train.series_len == test.series_len
        && train.entries.len() == test.entries.len()
        && train
            .entries
            .iter()
            .zip(&test.entries)
            .all(|(a, b)| a.freq_start == b.freq_start && a.freq_end == b.freq_end);
    if same {
        Ok(())
    } else {
        Err(Error::mismatch(
            MODULE,
            format!(
                "train (p={}, T={}, {} entries) and test (p={}, T={}, {} entries) are not aligned",
                train.dim,
                train.series_len,
                train.entries.len(),
                test.dim,
                test.series_len,
                test.entries.len()
            ),
        ))
    }
}

/// How per-entry terms are combined. Both modes add the terms in entry order
/// and give bitwise identical results; `Parallel` evaluates them on the
/// rayon pool first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    #[default]
    Sequential,
    Parallel,
}

/// Clique-level scoring engine over a fixed set of statistics and prior.
#[derive(Debug, Clone)]
pub struct Scorer<'a> {
    stats: &'a SpectralStatistics,
    prior: &'a HiwPrior,
    posterior: Vec<CMatrix>,
    plan: Vec<(usize, f64)>,
    reduction: Reduction,
    min_dof: (usize, f64),
}

impl<'a> Scorer<'a> {
    pub fn new(stats: &'a SpectralStatistics, prior: &'a HiwPrior) -> Result<Self> {
        let posterior = match &prior.mode {
            PriorMode::Fractional { g } => {
                HiwPrior::fractional(*g)?;
                Vec::new()
            }
            PriorMode::Explicit { dof, scale } => {
                if dof.len() != stats.entries.len() {
                    return Err(Error::mismatch(
                        MODULE,
                        "prior has a different number of entries than the statistics",
                    ));
                }
                if let Some(n) = scale.iter().position(|w| w.dim() != stats.dim) {
                    return Err(Error::mismatch(MODULE, format!("prior scale {n} has wrong dimension")));
                }
                scale
                    .iter()
                    .zip(&stats.entries)
                    .map(|(w, e)| {
                        let mut post = w.clone();
                        post.add_assign(&e.stat);
                        post
                    })
                    .collect()
            }
        };
        let min_dof = stats
            .entries
            .iter()
            .enumerate()
            .map(|(n, e)| (n, e.dof))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        Ok(Scorer {
            stats,
            prior,
            posterior,
            plan: (0..stats.entries.len()).map(|n| (n, 1.0)).collect(),
            reduction: Reduction::Sequential,
            min_dof,
        })
    }

    /// Visit only one of each conjugate frequency pair, when the statistics
    /// (and explicit prior, if any) allow it. Otherwise unchanged.
    pub fn half_spectrum(mut self) -> Self {
        if let Some(plan) = self.stats.conjugate_half_plan() {
            let prior_ok = match &self.prior.mode {
                PriorMode::Fractional { .. } => true,
                PriorMode::Explicit { dof, scale } => self.stats.entries.iter().enumerate().all(|(n, e)| {
                    let t = self.stats.series_len;
                    let partner = (t - e.freq_start) % t;
                    self.stats
                        .entries
                        .iter()
                        .position(|o| o.freq_start == partner)
                        .is_some_and(|m| {
                            dof[m] == dof[n]
                                && scale[m].conj().max_abs_diff(&scale[n])
                                    <= 1e-10 * scale[n].max_abs().max(f64::MIN_POSITIVE)
                        })
                }),
            };
            if prior_ok {
                self.plan = plan;
            }
        }
        self
    }

    pub fn with_reduction(mut self, reduction: Reduction) -> Self {
        self.reduction = reduction;
        self
    }

    pub fn is_half_spectrum(&self) -> bool {
        self.plan.len() < self.stats.entries.len()
    }

    pub fn stats(&self) -> &SpectralStatistics {
        self.stats
    }

    /// `-(Σ ν_k) p log π`.
    pub fn pi_constant(&self) -> f64 {
        pi_constant(self.stats.total_dof(), self.stats.dim)
    }

    fn entry_term(&self, n: usize, set: &[usize], buf: &mut Vec<num_complex::Complex64>) -> Result<f64> {
        let e = &self.stats.entries[n];
        let q = set.len();
        let context = || format!("entry {n} (frequencies {}..={}), clique {set:?}", e.freq_start, e.freq_end);
        match &self.prior.mode {
            PriorMode::Fractional { g } => {
                let ld = principal_logdet(&e.stat, set, self.prior.jitter, buf, context)?;
                let prior_ld = q as f64 * g.ln() + ld;
                Ok(log_b_from_logdet(prior_ld, q, g * e.dof) - log_b_from_logdet(ld, q, e.dof))
            }
            PriorMode::Explicit { dof, scale } => {
                let ld_prior = principal_logdet(&scale[n], set, self.prior.jitter, buf, context)?;
                let ld_post = principal_logdet(&self.posterior[n], set, self.prior.jitter, buf, context)?;
                Ok(log_b_from_logdet(ld_prior, q, dof[n]) - log_b_from_logdet(ld_post, q, dof[n] + e.dof))
            }
        }
    }

    /// Sum over entries of `log B(W_C, δ) − log B(W*_C, δ*)` for node set `set`.
    pub fn clique_term(&self, set: &[usize]) -> Result<f64> {
        if let Some(&bad) = set.iter().find(|&&v| v >= self.stats.dim) {
            return Err(Error::InvalidNode {
                index: bad,
                p: self.stats.dim,
            });
        }
        if set.is_empty() {
            return Ok(0.0);
        }
        if matches!(self.prior.mode, PriorMode::Fractional { .. }) && self.min_dof.1 < (set.len() + 1) as f64 {
            return Err(Error::RankDeficient {
                entry: self.min_dof.0,
                dof: self.min_dof.1,
                clique_size: set.len(),
                required: set.len() + 1,
            });
        }
        match self.reduction {
            Reduction::Sequential => {
                let mut buf = Vec::with_capacity(set.len() * set.len());
                let mut total = 0.0;
                for &(n, w) in &self.plan {
                    total += w * self.entry_term(n, set, &mut buf)?;
                }
                Ok(total)
            }
            Reduction::Parallel => {
                let terms: Vec<f64> = self
                    .plan
                    .par_iter()
                    .map_init(Vec::new, |buf, &(n, w)| Ok(w * self.entry_term(n, set, buf)?))
                    .collect::<Result<_>>()?;
                Ok(terms.iter().fold(0.0, |acc, t| acc + t))
            }
        }
    }

    /// Log marginal likelihood assembled from clique and separator terms.
    pub fn log_marginal(&self, decomposition: &CliqueDecomposition) -> Result<f64> {
        let mut total = 0.0;
        for c in &decomposition.cliques {
            total += self.clique_term(c)?;
        }
        for s in &decomposition.separators {
            total -= self.clique_term(s)?;
        }
        Ok(total + self.pi_constant())
    }

    pub fn score(&self, graph: &DecomposableGraph, graph_prior: &GraphPriorConfig) -> Result<ScoredGraph> {
        check_dims(self.stats, graph)?;
        let lm = self.log_marginal(graph.decomposition())?;
        Ok(ScoredGraph::new(graph.clone(), lm, graph_prior))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{aggregate_periodogram, SpectralEntry, StatLayout, Series, TimeSeriesPanel};
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn scalar(v: f64) -> CMatrix {
        CMatrix::from_rows(&[vec![Complex64::new(v, 0.0)]]).unwrap()
    }

    fn one_entry(stat: CMatrix, dof: f64) -> SpectralStatistics {
        SpectralStatistics {
            dim: stat.dim(),
            series_len: 2,
            num_replicates: 1,
            layout: StatLayout::PerFrequency,
            excluded_frequencies: vec![0],
            entries: vec![SpectralEntry {
                freq_start: 1,
                freq_end: 1,
                stat,
                dof,
            }],
        }
    }

    fn small_stats(p: usize, n: usize, t: usize) -> SpectralStatistics {
        let reps = (0..n)
            .map(|r| {
                let rows: Vec<Vec<f64>> = (0..t)
                    .map(|s| {
                        (0..p)
                            .map(|d| ((s * 7 + d * 13 + r * 29) as f64 * 0.731).sin() + 0.3 * (((s + d) * (r + 1)) as f64 * 0.17).cos())
                            .collect()
                    })
                    .collect();
                Series::from_rows(&rows).unwrap()
            })
            .collect();
        aggregate_periodogram(&TimeSeriesPanel::new(reps).unwrap().centered()).unwrap()
    }

    #[test]
    fn normalizer_examples() {
        assert_relative_eq!(log_complex_iw_normalizer(&scalar(1.0), 1.0, 0.0).unwrap(), 0.0, epsilon = 1e-14);
        let (w, d) = (3.7, 2.4);
        assert_relative_eq!(
            log_complex_iw_normalizer(&scalar(w), d, 0.0).unwrap(),
            (d + 1.0) * w.ln() - ln_gamma(d + 1.0),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            log_complex_iw_normalizer(&CMatrix::identity(2), 1.0, 0.0).unwrap(),
            -PI.ln() - 2f64.ln(),
            epsilon = 1e-12
        );
        assert!(log_complex_iw_normalizer(&scalar(1.0), 0.0, 0.0).is_err());
    }

    #[test]
    fn log_h_examples() {
        let stats = small_stats(3, 4, 8);
        let w = &stats.entries[2].stat;
        let delta = 1.5;
        let full = DecomposableGraph::complete(3);
        assert_relative_eq!(
            log_h(w, delta, full.decomposition(), 0.0).unwrap(),
            log_complex_iw_normalizer(w, delta, 0.0).unwrap(),
            epsilon = 1e-12
        );
        let empty = DecomposableGraph::empty(3);
        let singles: f64 = (0..3)
            .map(|i| log_complex_iw_normalizer(&w.principal(&[i]), delta, 0.0).unwrap())
            .sum();
        assert_relative_eq!(log_h(w, delta, empty.decomposition(), 0.0).unwrap(), singles, epsilon = 1e-12);
        let path = DecomposableGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let want = log_complex_iw_normalizer(&w.principal(&[0, 1]), delta, 0.0).unwrap()
            + log_complex_iw_normalizer(&w.principal(&[1, 2]), delta, 0.0).unwrap()
            - log_complex_iw_normalizer(&w.principal(&[1]), delta, 0.0).unwrap();
        assert_relative_eq!(log_h(w, delta, path.decomposition(), 0.0).unwrap(), want, epsilon = 1e-12);
    }

    #[test]
    fn scalar_marginal_by_hand() {
        let s = 2.3;
        let stats = one_entry(scalar(s), 1.0);
        let prior = HiwPrior::explicit(vec![1.0], vec![scalar(1.0)]).unwrap();
        let got = log_marginal_likelihood(&stats, &DecomposableGraph::empty(1), &prior).unwrap();
        assert_relative_eq!(got, -PI.ln() - 3.0 * (1.0 + s).ln() + 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn scalar_fractional_by_hand() {
        let (s, n, g) = (4.2, 6.0, 0.3);
        let stats = one_entry(scalar(s), n);
        let want = (g * n + 1.0) * (g * s).ln() - ln_gamma(g * n + 1.0) - (n + 1.0) * s.ln()
            + ln_gamma(n + 1.0)
            - n * PI.ln();
        let got = log_fractional_marginal(&stats, &DecomposableGraph::empty(1), g).unwrap();
        assert_relative_eq!(got, want, epsilon = 1e-12);

        let near_one = log_fractional_marginal(&stats, &DecomposableGraph::empty(1), 1.0 - 1e-12).unwrap();
        assert_relative_eq!(near_one, -n * PI.ln(), epsilon = 1e-9);
    }

    #[test]
    fn fractional_rank_guard() {
        let stats = small_stats(3, 2, 8);
        let err = log_fractional_marginal(&stats, &DecomposableGraph::complete(3), 0.5).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { clique_size: 3, required: 4, .. }));
        assert!(log_fractional_marginal(&stats, &DecomposableGraph::empty(3), 0.5).is_ok());
        assert!(log_fractional_marginal(&stats, &DecomposableGraph::empty(3), 1.5).is_err());
    }

    #[test]
    fn empty_graph_sums_scalar_scores() {
        let stats = small_stats(3, 5, 10);
        let g = 0.4;
        let total = log_fractional_marginal(&stats, &DecomposableGraph::empty(3), g).unwrap();
        let per_dim: f64 = (0..3)
            .map(|i| {
                let mut s = stats.clone();
                s.dim = 1;
                for e in &mut s.entries {
                    e.stat = e.stat.principal(&[i]);
                }
                log_fractional_marginal(&s, &DecomposableGraph::empty(1), g).unwrap()
            })
            .sum();
        assert_relative_eq!(total, per_dim, max_relative = 1e-12);
    }

    #[test]
    fn scale_invariance_of_graph_differences() {
        let stats = small_stats(3, 6, 9);
        let g = 0.5;
        let diff = |st: &SpectralStatistics| {
            log_fractional_marginal(st, &DecomposableGraph::complete(3), g).unwrap()
                - log_fractional_marginal(st, &DecomposableGraph::empty(3), g).unwrap()
        };
        let mut scaled = stats.clone();
        for e in &mut scaled.entries {
            e.stat = e.stat.scaled(17.5);
        }
        assert_relative_eq!(diff(&stats), diff(&scaled), epsilon = 1e-9);
    }

    #[test]
    fn clique_reassembly_matches_monolithic() {
        let stats = small_stats(4, 6, 11);
        let prior = HiwPrior::fractional(0.5).unwrap();
        let g = DecomposableGraph::new(4, &[(0, 1), (1, 2), (0, 2), (2, 3)]).unwrap();
        let mono = log_marginal_likelihood(&stats, &g, &prior).unwrap();
        let scorer = Scorer::new(&stats, &prior).unwrap();
        assert_relative_eq!(scorer.log_marginal(g.decomposition()).unwrap(), mono, epsilon = 1e-9);
        let par = scorer.clone().with_reduction(Reduction::Parallel);
        assert_eq!(
            par.log_marginal(g.decomposition()).unwrap().to_bits(),
            scorer.log_marginal(g.decomposition()).unwrap().to_bits()
        );
        let half = scorer.clone().half_spectrum();
        assert!(half.is_half_spectrum());
        assert_relative_eq!(half.log_marginal(g.decomposition()).unwrap(), mono, epsilon = 1e-9);

        let single = clique_log_marginal(&[2], &stats, &prior).unwrap();
        let mut s1 = stats.clone();
        s1.dim = 1;
        for e in &mut s1.entries {
            e.stat = e.stat.principal(&[2]);
        }
        assert_relative_eq!(
            single + pi_constant(s1.total_dof(), 1),
            log_marginal_likelihood(&s1, &DecomposableGraph::empty(1), &prior).unwrap(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn predictive_examples() {
        let train = small_stats(2, 4, 8);
        let mut empty_test = train.clone();
        for e in &mut empty_test.entries {
            e.stat = CMatrix::zeros(2);
            e.dof = 0.0;
        }
        let g = DecomposableGraph::complete(2);
        assert_relative_eq!(predictive_log_likelihood(&train, &empty_test, &g).unwrap(), 0.0, epsilon = 1e-12);

        let short = small_stats(2, 4, 6);
        assert!(predictive_log_likelihood(&train, &short, &g).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let stats = small_stats(3, 5, 8);
        let prior = HiwPrior::fractional(0.5).unwrap();
        assert!(matches!(
            log_marginal_likelihood(&stats, &DecomposableGraph::empty(2), &prior),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
