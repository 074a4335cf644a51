//! Stochastic search over decomposable graphs.
//!
//! [`fincs_run`] interleaves three moves: local single-edge toggles biased by
//! running edge-inclusion estimates, global proposals drawn edge-by-edge from
//! those estimates and then triangulated, and resampling of a previously
//! visited graph in proportion to its posterior. Proposals are accepted with
//! probability `min(1, exp(Δ log posterior))`; the best graph ever scored is
//! reported. [`mh_sampler`] is the plain Metropolis-Hastings edge-flip chain.
//!
//! Graph scores are assembled from memoized clique terms, so a local move only
//! evaluates the cliques and separators it creates.

use std::collections::HashMap;

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{triangulate, DecomposableGraph, GraphKey, GraphPriorConfig};
use crate::likelihood::{HiwPrior, PriorMode, ScoredGraph, Scorer};
use crate::spectral::SpectralStatistics;

const MODULE: &str = "search";

/// Name of the generator behind every seeded run.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9)";

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub iterations: usize,
    pub global_move_period: usize,
    pub resample_period: usize,
    /// Pseudo-count mass `ε` used when turning accumulators into edge
    /// probabilities.
    pub edge_prob_smoothing: f64,
    pub seed: u64,
    pub prior: GraphPriorConfig,
    pub scoring: HiwPrior,
    /// Starting graph; the empty graph when `None`.
    pub initial: Option<DecomposableGraph>,
    /// Score only one frequency of each conjugate pair when possible.
    pub half_spectrum: bool,
    /// Fraction of MH iterations discarded before tallying.
    pub burn_in_fraction: f64,
}

impl SearchConfig {
    pub fn new(scoring: HiwPrior) -> Self {
        SearchConfig {
            iterations: 10_000,
            global_move_period: 50,
            resample_period: 100,
            edge_prob_smoothing: 1.0,
            seed: 0,
            prior: GraphPriorConfig::default(),
            scoring,
            initial: None,
            half_spectrum: true,
            burn_in_fraction: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.global_move_period == 0 || self.resample_period == 0 {
            return Err(Error::config(MODULE, "move periods must be at least 1"));
        }
        if !(self.edge_prob_smoothing > 0.0 && self.edge_prob_smoothing.is_finite()) {
            return Err(Error::config(MODULE, "edge probability smoothing must be positive"));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(Error::config(MODULE, "burn-in fraction must lie in [0, 1)"));
        }
        self.prior.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveKind {
    Local,
    Global,
    Resample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    #[serde(rename = "move")]
    pub kind: MoveKind,
    pub accepted: bool,
    pub log_posterior: f64,
    pub best_log_posterior: f64,
}

/// Settings that determine a run, written at the top of every trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub rng: String,
    pub seed: u64,
    pub iterations: usize,
    pub global_move_period: usize,
    pub resample_period: usize,
    pub edge_prob_smoothing: f64,
    pub initial_edges: usize,
    pub half_spectrum: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub header: TraceHeader,
    pub map_graph: ScoredGraph,
    pub edge_probabilities: Vec<Vec<f64>>,
    pub trace: Vec<TraceRecord>,
}

/// Scores graphs from memoized clique terms.
pub struct CachedScorer<'a> {
    scorer: Scorer<'a>,
    prior: GraphPriorConfig,
    cache: HashMap<Vec<usize>, f64>,
}

impl<'a> CachedScorer<'a> {
    pub fn new(scorer: Scorer<'a>, prior: GraphPriorConfig) -> Self {
        CachedScorer {
            scorer,
            prior,
            cache: HashMap::new(),
        }
    }

    fn term(&mut self, set: &[usize]) -> Result<f64> {
        if let Some(&v) = self.cache.get(set) {
            return Ok(v);
        }
        let v = self.scorer.clique_term(set)?;
        self.cache.insert(set.to_vec(), v);
        Ok(v)
    }

    pub fn score(&mut self, graph: &DecomposableGraph) -> Result<ScoredGraph> {
        let d = graph.decomposition();
        let mut lm = 0.0;
        for c in &d.cliques {
            lm += self.term(c)?;
        }
        for s in &d.separators {
            lm -= self.term(s)?;
        }
        lm += self.scorer.pi_constant();
        Ok(ScoredGraph::new(graph.clone(), lm, &self.prior))
    }

    /// Rescore without the cache.
    pub fn score_uncached(&self, graph: &DecomposableGraph) -> Result<ScoredGraph> {
        self.scorer.score(graph, &self.prior)
    }

    pub fn cached_sets(&self) -> usize {
        self.cache.len()
    }
}

fn pair_count(p: usize) -> usize {
    p * p.saturating_sub(1) / 2
}

fn pairs(p: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..p).flat_map(move |i| (i + 1..p).map(move |j| (i, j)))
}

/// Current graph, best graph, weighted edge-inclusion accumulators and the
/// ledger of every graph scored so far.
#[derive(Debug, Clone)]
pub struct SearchState {
    pub current: ScoredGraph,
    pub best: ScoredGraph,
    /// Per pair (row-major over `i<j`), `Σ_t 1{(i,j) ∈ E_t} w_t`.
    pub edge_num: Vec<f64>,
    /// `Σ_t w_t`.
    pub edge_den: f64,
    /// Weights are stored as `exp(log_posterior − log_scale)`.
    pub log_scale: f64,
    pub ledger: IndexMap<GraphKey, ScoredGraph>,
}

impl SearchState {
    pub fn new(initial: ScoredGraph) -> Self {
        let p = initial.graph.num_nodes();
        let mut state = SearchState {
            current: initial.clone(),
            best: initial.clone(),
            edge_num: vec![0.0; pair_count(p)],
            edge_den: 0.0,
            log_scale: f64::NEG_INFINITY,
            ledger: IndexMap::new(),
        };
        state.record(&initial);
        state
    }

    fn p(&self) -> usize {
        self.current.graph.num_nodes()
    }

    /// Add a scored graph to the ledger and update the best-so-far.
    pub fn record(&mut self, scored: &ScoredGraph) {
        if scored.log_posterior > self.best.log_posterior {
            self.best = scored.clone();
        }
        self.ledger
            .entry(scored.graph.key())
            .or_insert_with(|| scored.clone());
    }

    /// Fold the current graph into the edge-inclusion accumulators.
    pub fn accumulate(&mut self) {
        let lp = self.current.log_posterior;
        if lp > self.log_scale {
            let shrink = (self.log_scale - lp).exp();
            self.edge_num.iter_mut().for_each(|v| *v *= shrink);
            self.edge_den *= shrink;
            self.log_scale = lp;
        }
        let w = (lp - self.log_scale).exp();
        let g = &self.current.graph;
        for (slot, (i, j)) in self.edge_num.iter_mut().zip(pairs(g.num_nodes())) {
            if g.has_edge(i, j) {
                *slot += w;
            }
        }
        self.edge_den += w;
    }

    /// Smoothed estimate `(num + ε/m) / (den + ε)` for every pair.
    pub fn pair_probabilities(&self, smoothing: f64) -> Vec<f64> {
        let m = self.edge_num.len().max(1) as f64;
        self.edge_num
            .iter()
            .map(|n| (n + smoothing / m) / (self.edge_den + smoothing))
            .collect()
    }

    /// Symmetric `p x p` matrix of edge probabilities with zero diagonal.
    pub fn edge_probabilities(&self, smoothing: f64) -> Vec<Vec<f64>> {
        let p = self.p();
        let mut out = vec![vec![0.0; p]; p];
        for (q, (i, j)) in self.pair_probabilities(smoothing).into_iter().zip(pairs(p)) {
            out[i][j] = q;
            out[j][i] = q;
        }
        out
    }
}

fn accept<R: Rng>(rng: &mut R, current: f64, proposed: f64) -> bool {
    let u: f64 = rng.random();
    u < (proposed - current).exp()
}

fn weighted_pick<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (n, w) in weights.iter().enumerate() {
        if u < *w {
            return n;
        }
        u -= w;
    }
    weights.len() - 1
}

/// One local move. Returns `None` when no legal toggle exists in either
/// direction, otherwise whether the proposal was accepted.
pub fn local_move<R: Rng>(
    state: &mut SearchState,
    scorer: &mut CachedScorer<'_>,
    config: &SearchConfig,
    rng: &mut R,
) -> Result<Option<bool>> {
    let p = state.p();
    let q = state.pair_probabilities(config.edge_prob_smoothing);
    let add_first = rng.random_bool(0.5);
    for adding in [add_first, !add_first] {
        let mut cands = Vec::new();
        let mut weights = Vec::new();
        for (n, (i, j)) in pairs(p).enumerate() {
            let g = &state.current.graph;
            if g.has_edge(i, j) != adding && g.can_toggle(i, j)? {
                cands.push((i, j));
                weights.push(if adding { q[n] } else { 1.0 / q[n] });
            }
        }
        if cands.is_empty() {
            continue;
        }
        let (i, j) = cands[weighted_pick(rng, &weights)];
        let proposal = state
            .current
            .graph
            .try_toggle_edge(i, j)?
            .expect("toggle was checked to keep decomposability");
        let scored = scorer.score(&proposal)?;
        state.record(&scored);
        let accepted = accept(rng, state.current.log_posterior, scored.log_posterior);
        if accepted {
            state.current = scored;
        }
        return Ok(Some(accepted));
    }
    Ok(None)
}

/// Draw each edge independently with its estimated inclusion probability,
/// triangulate, and accept by posterior ratio.
pub fn global_move<R: Rng>(
    state: &mut SearchState,
    scorer: &mut CachedScorer<'_>,
    config: &SearchConfig,
    rng: &mut R,
) -> Result<bool> {
    let p = state.p();
    let q = state.pair_probabilities(config.edge_prob_smoothing);
    let edges: Vec<(usize, usize)> = pairs(p)
        .zip(&q)
        .filter(|(_, &prob)| rng.random::<f64>() < prob)
        .map(|(e, _)| e)
        .collect();
    let proposal = triangulate(p, &edges)?;
    let scored = scorer.score(&proposal)?;
    state.record(&scored);
    let accepted = accept(rng, state.current.log_posterior, scored.log_posterior);
    if accepted {
        state.current = scored;
    }
    Ok(accepted)
}

/// Jump to a ledger entry drawn with probability proportional to its
/// posterior.
pub fn resample_move<R: Rng>(state: &mut SearchState, rng: &mut R) {
    if state.ledger.len() <= 1 {
        if let Some((_, only)) = state.ledger.first() {
            state.current = only.clone();
        }
        return;
    }
    let max = state
        .ledger
        .values()
        .map(|s| s.log_posterior)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = state
        .ledger
        .values()
        .map(|s| (s.log_posterior - max).exp())
        .collect();
    let pick = weighted_pick(rng, &weights);
    state.current = state.ledger[pick].clone();
}

fn make_scorer<'a>(stats: &'a SpectralStatistics, config: &'a SearchConfig) -> Result<Scorer<'a>> {
    config.validate()?;
    let p = stats.dim;
    if let Some(init) = &config.initial {
        if init.num_nodes() != p {
            return Err(Error::mismatch(MODULE, "initial graph size differs from statistics"));
        }
    }
    if matches!(config.scoring.mode, PriorMode::Fractional { .. }) {
        if let Some((entry, e)) = stats
            .entries
            .iter()
            .enumerate()
            .find(|(_, e)| e.dof < (p + 1) as f64)
        {
            return Err(Error::RankDeficient {
                entry,
                dof: e.dof,
                clique_size: p,
                required: p + 1,
            });
        }
    }
    let scorer = Scorer::new(stats, &config.scoring)?;
    Ok(if config.half_spectrum {
        scorer.half_spectrum()
    } else {
        scorer
    })
}

/// Run the feature-inclusion stochastic search.
///
/// Iteration `t` (1-based) is a resampling move when `t` is a multiple of the
/// resample period, else a global move when it is a multiple of the global
/// period, else a local move.
pub fn fincs_run(stats: &SpectralStatistics, config: &SearchConfig) -> Result<SearchResult> {
    let scorer = make_scorer(stats, config)?;
    let p = stats.dim;
    let mut cached = CachedScorer::new(scorer, config.prior);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let initial = config
        .initial
        .clone()
        .unwrap_or_else(|| DecomposableGraph::empty(p));
    let header = TraceHeader {
        rng: RNG_ALGORITHM.to_string(),
        seed: config.seed,
        iterations: config.iterations,
        global_move_period: config.global_move_period,
        resample_period: config.resample_period,
        edge_prob_smoothing: config.edge_prob_smoothing,
        initial_edges: initial.num_edges(),
        half_spectrum: config.half_spectrum,
    };
    let mut state = SearchState::new(cached.score(&initial)?);
    let mut trace = Vec::with_capacity(config.iterations);
    for iter in 1..=config.iterations {
        let (kind, accepted) = if iter % config.resample_period == 0 {
            resample_move(&mut state, &mut rng);
            (MoveKind::Resample, true)
        } else if iter % config.global_move_period == 0 {
            (MoveKind::Global, global_move(&mut state, &mut cached, config, &mut rng)?)
        } else {
            let moved = local_move(&mut state, &mut cached, config, &mut rng)?;
            (MoveKind::Local, moved.unwrap_or(false))
        };
        state.accumulate();
        if cfg!(debug_assertions) && iter % 1000 == 0 {
            let full = cached.score_uncached(&state.current.graph)?.log_marginal;
            let inc = state.current.log_marginal;
            debug_assert!(
                (full - inc).abs() <= 1e-9 * full.abs().max(1.0),
                "incremental score {inc} drifted from full rescoring {full}"
            );
        }
        trace.push(TraceRecord {
            iter,
            kind,
            accepted,
            log_posterior: state.current.log_posterior,
            best_log_posterior: state.best.log_posterior,
        });
    }
    Ok(SearchResult {
        header,
        edge_probabilities: state.edge_probabilities(config.edge_prob_smoothing),
        map_graph: state.best,
        trace,
    })
}

/// Independent searches with seeds `seed, seed+1, …` run in parallel; the
/// run with the highest best score wins (earliest seed on ties). Also
/// returns each run's best log posterior.
pub fn fincs_restarts(
    stats: &SpectralStatistics,
    config: &SearchConfig,
    restarts: usize,
) -> Result<(SearchResult, Vec<f64>)> {
    let runs: Vec<SearchResult> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut cfg = config.clone();
            cfg.seed = config.seed.wrapping_add(r as u64);
            fincs_run(stats, &cfg)
        })
        .collect::<Result<_>>()?;
    let scores: Vec<f64> = runs.iter().map(|r| r.map_graph.log_posterior).collect();
    let best = scores
        .iter()
        .enumerate()
        .fold(0, |b, (n, &s)| if s > scores[b] { n } else { b });
    Ok((runs.into_iter().nth(best).expect("at least one run"), scores))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisitedGraph {
    pub graph: DecomposableGraph,
    pub log_posterior: f64,
    /// Post-burn-in iterations spent in this graph.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MhSummary {
    pub rng: String,
    pub iterations: usize,
    pub burn_in: usize,
    /// Number of post-burn-in states tallied.
    pub samples: usize,
    pub accepted: usize,
    /// Monte Carlo edge-inclusion frequencies.
    pub edge_frequencies: Vec<Vec<f64>>,
    /// Graphs seen after burn-in, in order of first visit.
    pub visited: Vec<VisitedGraph>,
}

/// Metropolis-Hastings over decomposable graphs with uniform single-pair
/// proposals. Toggles that break decomposability count as rejections, which
/// keeps the proposal symmetric.
pub fn mh_sampler(stats: &SpectralStatistics, config: &SearchConfig) -> Result<MhSummary> {
    let scorer = make_scorer(stats, config)?;
    let p = stats.dim;
    let mut cached = CachedScorer::new(scorer, config.prior);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let all_pairs: Vec<(usize, usize)> = pairs(p).collect();
    let burn_in = (config.iterations as f64 * config.burn_in_fraction).floor() as usize;
    let initial = config
        .initial
        .clone()
        .unwrap_or_else(|| DecomposableGraph::empty(p));
    let mut current = cached.score(&initial)?;
    let mut counts = vec![0usize; all_pairs.len()];
    let mut visited: IndexMap<GraphKey, VisitedGraph> = IndexMap::new();
    let mut accepted = 0;
    let mut samples = 0;
    for iter in 1..=config.iterations {
        if !all_pairs.is_empty() {
            let (i, j) = all_pairs[rng.random_range(0..all_pairs.len())];
            if current.graph.can_toggle(i, j)? {
                let proposal = current
                    .graph
                    .try_toggle_edge(i, j)?
                    .expect("toggle was checked to keep decomposability");
                let scored = cached.score(&proposal)?;
                if accept(&mut rng, current.log_posterior, scored.log_posterior) {
                    current = scored;
                    accepted += 1;
                }
            }
        }
        if iter > burn_in {
            samples += 1;
            for (c, &(i, j)) in counts.iter_mut().zip(&all_pairs) {
                if current.graph.has_edge(i, j) {
                    *c += 1;
                }
            }
            visited
                .entry(current.graph.key())
                .or_insert_with(|| VisitedGraph {
                    graph: current.graph.clone(),
                    log_posterior: current.log_posterior,
                    count: 0,
                })
                .count += 1;
        }
    }
    let mut edge_frequencies = vec![vec![0.0; p]; p];
    if samples > 0 {
        for (&c, &(i, j)) in counts.iter().zip(&all_pairs) {
            let f = c as f64 / samples as f64;
            edge_frequencies[i][j] = f;
            edge_frequencies[j][i] = f;
        }
    }
    Ok(MhSummary {
        rng: RNG_ALGORITHM.to_string(),
        iterations: config.iterations,
        burn_in,
        samples,
        accepted,
        edge_frequencies,
        visited: visited.into_values().collect(),
    })
}
