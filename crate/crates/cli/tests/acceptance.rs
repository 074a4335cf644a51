//! End-to-end acceptance checks. Run with `-- --nocapture` to see one
//! PASS/FAIL line per criterion.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::time::Instant;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestCaseError, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use tsgraph::graphs::{log_graph_prior, GraphPriorConfig};
use tsgraph::likelihood::{log_marginal_likelihood, predictive_log_likelihood, HiwPrior, Scorer};
use tsgraph::linalg::CMatrix;
use tsgraph::search::{fincs_run, mh_sampler, SearchConfig};
use tsgraph::simulate::{generate_panel, recovery_metrics, sample_var_model, var1_true_graph, SimConfig};
use tsgraph::spectral::{
    aggregate_periodogram, aggregate_periodogram_keep_dc, bartlett_split, daniell_smooth, dft_coefficients,
    piecewise_bin, SpectralEntry, SpectralStatistics, StatLayout, TimeSeriesPanel,
};
use tsgraph::DecomposableGraph;
use tsgraph_cli::{cmd_learn, cmd_simulate, LearnConfig};

fn report(n: u32, name: &str, pass: bool, detail: &str, start: Instant) {
    println!(
        "[{}] criterion {n}: {name}: {detail} ({:.1}s)",
        if pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
}

fn scalar_stats(s: f64, nu: f64) -> SpectralStatistics {
    SpectralStatistics {
        dim: 1,
        series_len: 2,
        num_replicates: 1,
        layout: StatLayout::PerFrequency,
        excluded_frequencies: vec![0],
        entries: vec![SpectralEntry {
            freq_start: 1,
            freq_end: 1,
            stat: CMatrix::identity(1).scaled(s),
            dof: nu,
        }],
    }
}

#[test]
fn criterion_1_quadrature_oracle() {
    use rand::Rng;
    let start = Instant::now();
    let mut r = rng(101);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let delta = r.random_range(0.5..5.0);
        let w = r.random_range(0.1..10.0);
        let s = r.random_range(0.1..10.0);
        let prior = HiwPrior::explicit(vec![delta], vec![CMatrix::identity(1).scaled(w)]).unwrap();
        let closed = log_marginal_likelihood(&scalar_stats(s, 1.0), &DecomposableGraph::empty(1), &prior).unwrap();
        let numeric = scalar_marginal_by_quadrature(w, delta, s, 1.0);
        worst = worst.max((closed - numeric).abs() / numeric.abs());
    }
    let pass = worst <= 1e-6;
    report(1, "closed form vs quadrature", pass, &format!("20 cases, worst relative error {worst:.2e}"), start);
    assert!(pass);
}

#[test]
fn criterion_2_decomposition_identity() {
    use rand::Rng;
    let start = Instant::now();
    let mut r = rng(202);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = r.random_range(1..=12);
        let graph = random_decomposable(p, r.random_range(0.1..0.6), &mut r);
        let stats = random_stats(p, 6, p + 2, &mut r);
        let prior = if r.random_bool(0.5) {
            HiwPrior::fractional(r.random_range(0.05..0.95)).unwrap()
        } else {
            let scale = (0..6).map(|_| random_psd(p, p + 1, &mut r)).collect();
            HiwPrior::explicit(vec![r.random_range(0.5..5.0); 6], scale).unwrap()
        };
        let mono = log_marginal_likelihood(&stats, &graph, &prior).unwrap();
        let scorer = Scorer::new(&stats, &prior).unwrap();
        let d = graph.decomposition();
        let mut pieces = scorer.pi_constant();
        for c in &d.cliques {
            pieces += scorer.clique_term(c).unwrap();
        }
        for s in &d.separators {
            pieces -= scorer.clique_term(s).unwrap();
        }
        worst = worst.max((pieces - mono).abs());
    }
    let pass = worst <= 1e-9;
    report(2, "clique reassembly vs monolithic", pass, &format!("100 graphs, worst |diff| {worst:.2e}"), start);
    assert!(pass);
}

#[test]
fn criterion_3_half_spectrum_equivalence() {
    use rand::Rng;
    let start = Instant::now();
    let mut r = rng(303);
    let mut worst = 0.0f64;
    let mut halved = 0;
    for _ in 0..20 {
        let p = r.random_range(2..=6);
        let t = r.random_range(16..=256);
        let n = r.random_range((p + 1).max(5)..=p + 5);
        let stats = aggregate_periodogram(&random_panel(t, p, n, &mut r).centered()).unwrap();
        let graph = random_decomposable(p, 0.5, &mut r);
        let prior = HiwPrior::fractional(4.0 / n as f64).unwrap();
        let full = Scorer::new(&stats, &prior).unwrap();
        let half = Scorer::new(&stats, &prior).unwrap().half_spectrum();
        halved += half.is_half_spectrum() as usize;
        let a = full.log_marginal(graph.decomposition()).unwrap();
        let b = half.log_marginal(graph.decomposition()).unwrap();
        worst = worst.max((a - b).abs());
    }
    let pass = worst <= 1e-9 && halved == 20;
    report(3, "half-spectrum vs full range", pass, &format!("20 panels, worst |diff| {worst:.2e}"), start);
    assert!(pass);
}

fn enumerated_posterior(stats: &SpectralStatistics, prior: &HiwPrior) -> Vec<(DecomposableGraph, f64)> {
    let cfg = GraphPriorConfig::default();
    let scored: Vec<_> = enumerate_decomposable(stats.dim)
        .into_iter()
        .map(|g| {
            let lp = log_marginal_likelihood(stats, &g, prior).unwrap() + log_graph_prior(&g, &cfg);
            (g, lp)
        })
        .collect();
    let max = scored.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = scored.iter().map(|s| (s.1 - max).exp()).sum();
    scored.into_iter().map(|(g, lp)| (g, (lp - max).exp() / z)).collect()
}

#[test]
fn criterion_4_exhaustive_map_agreement() {
    let start = Instant::now();
    let prior = HiwPrior::fractional(0.3).unwrap();
    let cases: Vec<(usize, u64)> = [3usize, 4].iter().flat_map(|&p| (0..25u64).map(move |s| (p, s))).collect();
    let results: Vec<(bool, f64)> = cases
        .par_iter()
        .map(|&(p, trial)| {
            let stats = random_stats(p, 4, p + 3, &mut rng(4000 + 100 * p as u64 + trial));
            let post = enumerated_posterior(&stats, &prior);
            let (map, _) = post.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
            let mut cfg = SearchConfig::new(prior.clone());
            cfg.iterations = 10_000;
            cfg.seed = trial;
            let found = &fincs_run(&stats, &cfg).unwrap().map_graph.graph == map;
            cfg.iterations = 200_000;
            let mh = mh_sampler(&stats, &cfg).unwrap();
            let err = pairs(p)
                .into_iter()
                .map(|(i, j)| {
                    let exact: f64 = post.iter().filter(|(g, _)| g.has_edge(i, j)).map(|(_, w)| w).sum();
                    (mh.edge_frequencies[i][j] - exact).abs()
                })
                .fold(0.0, f64::max);
            (found, err)
        })
        .collect();
    let agree = results.iter().filter(|r| r.0).count();
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let pass = agree == results.len() && worst <= 0.02;
    report(
        4,
        "exhaustive MAP agreement",
        pass,
        &format!("FINCS MAP {agree}/{} trials, worst MH edge error {worst:.4}", results.len()),
        start,
    );
    assert!(pass);
}

struct Recovery {
    tpr: f64,
    fpr: f64,
}

fn learn_and_score(stats: &SpectralStatistics, g: f64, truth: &[(usize, usize)], seed: u64) -> Recovery {
    let mut cfg = SearchConfig::new(HiwPrior::fractional(g).unwrap());
    cfg.iterations = 10_000;
    cfg.seed = seed;
    let res = fincs_run(stats, &cfg).unwrap();
    let m = recovery_metrics(&res.map_graph.graph.edges(), truth, stats.dim).unwrap();
    Recovery { tpr: m.tpr, fpr: m.fpr }
}

fn simulate_panel(p: usize, t: usize, n: usize, seed: u64) -> (Vec<(usize, usize)>, TimeSeriesPanel) {
    let mut sim = SimConfig::new(p, t, n);
    sim.seed = seed;
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let model = sample_var_model(&sim, &mut r).unwrap();
    let panel = generate_panel(&model, t, n, &mut r).unwrap();
    (model.edges(), panel)
}

#[test]
fn criterion_5_multi_replicate_recovery() {
    let start = Instant::now();
    let n = 150;
    let runs: Vec<Recovery> = (0..10u64)
        .into_par_iter()
        .map(|e| {
            let (truth, panel) = simulate_panel(10, 500, n, 5000 + e);
            let stats = aggregate_periodogram(&panel.centered()).unwrap();
            learn_and_score(&stats, 4.0 / n as f64, &truth, e)
        })
        .collect();
    let mean_tpr = runs.iter().map(|r| r.tpr).sum::<f64>() / 10.0;
    let mut fprs: Vec<f64> = runs.iter().map(|r| r.fpr).collect();
    fprs.sort_by(f64::total_cmp);
    let median_fpr = 0.5 * (fprs[4] + fprs[5]);
    let pass = mean_tpr >= 0.90 && median_fpr <= 0.05;
    report(
        5,
        "recovery with N=150",
        pass,
        &format!("mean TPR {mean_tpr:.3}, median FPR {median_fpr:.3}"),
        start,
    );
    assert!(pass);
}

#[test]
fn criterion_6_single_series_piecewise() {
    let start = Instant::now();
    let t = 10_000;
    let m = isqrt(t);
    let runs: Vec<(Recovery, Recovery)> = (0..10u64)
        .into_par_iter()
        .map(|e| {
            let (truth, panel) = simulate_panel(10, t, 1, 6000 + e);
            let raw = aggregate_periodogram(&panel.centered()).unwrap();
            let piece = piecewise_bin(&raw, m).unwrap();
            let g = 4.0 / piece.min_dof().unwrap();
            let a = learn_and_score(&piece, g, &truth, e);
            let split = bartlett_split(&panel.replicates()[0], m).unwrap().centered();
            let bart = aggregate_periodogram(&split).unwrap();
            let b = learn_and_score(&bart, 4.0 / m as f64, &truth, e);
            (a, b)
        })
        .collect();
    let mean = |f: &dyn Fn(&(Recovery, Recovery)) -> f64| runs.iter().map(f).sum::<f64>() / runs.len() as f64;
    let (pt, pf) = (mean(&|r| r.0.tpr), mean(&|r| r.0.fpr));
    let (bt, bf) = (mean(&|r| r.1.tpr), mean(&|r| r.1.fpr));
    let pass = pt >= 0.75 && pf <= 0.05 && pt >= bt;
    report(
        6,
        "single series, piecewise vs Bartlett",
        pass,
        &format!("piecewise TPR {pt:.3} FPR {pf:.3}; Bartlett TPR {bt:.3} FPR {bf:.3}"),
        start,
    );
    assert!(pass);
}

fn isqrt(n: usize) -> usize {
    (1..=n).take_while(|r| r * r <= n).last().unwrap_or(0)
}

#[test]
fn criterion_7_predictive_ordering() {
    let start = Instant::now();
    let wins: Vec<bool> = (0..10u64)
        .into_par_iter()
        .map(|e| {
            let (truth, panel) = simulate_panel(10, 2500, 1, 7000 + e);
            let s = &panel.replicates()[0];
            let train = TimeSeriesPanel::new(vec![s.slice(0, 1250)]).unwrap().centered();
            let test = TimeSeriesPanel::new(vec![s.slice(1250, 2500)]).unwrap().centered();
            let prior = daniell_smooth(&aggregate_periodogram(&train).unwrap(), isqrt(1250) / 2).unwrap();
            let data = aggregate_periodogram(&test).unwrap();
            let score = |g: &DecomposableGraph| predictive_log_likelihood(&prior, &data, g).unwrap();
            let true_graph = DecomposableGraph::new(10, &truth).unwrap();
            let t = score(&true_graph);
            t > score(&DecomposableGraph::empty(10)) && t > score(&DecomposableGraph::complete(10))
        })
        .collect();
    let count = wins.iter().filter(|w| **w).count();
    let pass = count >= 9;
    report(7, "predictive ordering", pass, &format!("true graph best in {count}/10 runs"), start);
    assert!(pass);
}

fn property<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> bool {
    let mut runner = TestRunner::new(PropConfig {
        cases: 256,
        failure_persistence: None,
        ..PropConfig::default()
    });
    match runner.run(&strategy, test) {
        Ok(()) => true,
        Err(e) => {
            println!("    property '{name}' failed: {e}");
            false
        }
    }
}

fn panel_strategy() -> impl Strategy<Value = TimeSeriesPanel> {
    (3usize..=48, 1usize..=4, 1usize..=3, any::<u64>()).prop_map(|(t, p, n, seed)| random_panel(t, p, n, &mut rng(seed)))
}

#[test]
fn criterion_8_property_suites() {
    let start = Instant::now();
    let mut results = Vec::new();

    results.push(property("hermitian psd statistics", (panel_strategy(), 0usize..3, 1usize..8), |(panel, m, bins)| {
        let raw = aggregate_periodogram(&panel.centered()).unwrap();
        let mut all = vec![raw.clone(), piecewise_bin(&raw, bins).unwrap()];
        if 2 * m < raw.entries.len() {
            all.push(daniell_smooth(&raw, m).unwrap());
        }
        for s in &all {
            for e in &s.entries {
                prop_assert!(e.stat.is_hermitian(1e-12) && e.stat.is_psd(1e-10));
            }
        }
        Ok(())
    }));

    results.push(property("parseval", panel_strategy(), |panel| {
        let x = &panel.centered().replicates()[0].clone();
        let t = x.len() as f64;
        let lhs: f64 = dft_coefficients(x).unwrap().iter().flatten().map(Complex64::norm_sqr).sum();
        let rhs: f64 = (0..x.len()).flat_map(|s| x.row(s).to_vec()).map(|v| v * v).sum::<f64>() / t;
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(1e-300));
        Ok(())
    }));

    results.push(property("conjugate symmetry", panel_strategy(), |panel| {
        let stats = aggregate_periodogram_keep_dc(&panel).unwrap();
        let t = panel.len();
        for e in &stats.entries {
            let partner = &stats.entries[(t - e.freq_start) % t];
            prop_assert!(partner.stat.conj().max_abs_diff(&e.stat) <= 1e-12 * e.stat.max_abs().max(1e-300));
        }
        Ok(())
    }));

    let perm_input = (1usize..=7, any::<u64>())
        .prop_flat_map(|(p, seed)| (Just(p), Just(seed), Just((0..p).collect::<Vec<_>>()).prop_shuffle()));
    results.push(property("permutation invariance", perm_input, |(p, seed, perm)| {
        let mut r = rng(seed);
        let stats = random_stats(p, 3, p + 2, &mut r);
        let graph = random_decomposable(p, 0.5, &mut r);
        let mut permuted = stats.clone();
        for (dst, src) in permuted.entries.iter_mut().zip(&stats.entries) {
            let mut m = CMatrix::zeros(p);
            for i in 0..p {
                for j in 0..p {
                    m.set(perm[i], perm[j], src.stat.get(i, j));
                }
            }
            dst.stat = m;
        }
        let prior = HiwPrior::fractional(0.25).unwrap();
        let a = log_marginal_likelihood(&stats, &graph, &prior).unwrap();
        let b = log_marginal_likelihood(&permuted, &graph.permuted(&perm).unwrap(), &prior).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        Ok(())
    }));

    results.push(property("toggle round trip", (2usize..=10, any::<u64>(), any::<prop::sample::Index>()), |(p, seed, pick)| {
        let g = random_decomposable(p, 0.4, &mut rng(seed));
        let all = pairs(p);
        let (i, j) = all[pick.index(all.len())];
        if let Some(h) = g.try_toggle_edge(i, j).unwrap() {
            prop_assert!(chordal_oracle(p, &h.edges()));
            let back = h.try_toggle_edge(i, j).unwrap().unwrap();
            prop_assert_eq!(back.edge_set(), g.edge_set());
        }
        Ok(())
    }));

    results.push(property("best score monotone", (2usize..=5, any::<u64>()), |(p, seed)| {
        let stats = random_stats(p, 3, p + 3, &mut rng(seed));
        let mut cfg = SearchConfig::new(HiwPrior::fractional(0.3).unwrap());
        cfg.iterations = 250;
        cfg.seed = seed;
        let res = fincs_run(&stats, &cfg).unwrap();
        for w in res.trace.windows(2) {
            prop_assert!(w[1].best_log_posterior >= w[0].best_log_posterior);
        }
        Ok(())
    }));

    results.push(property("structural vs numeric true graph", (2usize..=8, 0.0f64..0.6, any::<u64>()), |(p, rho, seed)| {
        let mut cfg = SimConfig::new(p, 10, 1);
        cfg.rho = rho;
        cfg.require_decomposable = false;
        let a = sample_var_model(&cfg, &mut rng(seed)).unwrap().a;
        let edges = var1_true_graph(&a);
        for (i, j) in pairs(p) {
            let ata: f64 = (0..p).map(|s| a[s][i] * a[s][j]).sum();
            let peak = (0..64)
                .map(|k| {
                    let e = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * k as f64 / 64.0);
                    (Complex64::new(ata, 0.0) + e * a[i][j] + e.conj() * a[j][i]).norm()
                })
                .fold(0.0, f64::max);
            if edges.contains(&(i, j)) {
                prop_assert!(peak > 1e-3);
            } else {
                prop_assert!(peak < 1e-12);
            }
        }
        Ok(())
    }));

    let passed = results.iter().filter(|r| **r).count();
    let pass = passed == results.len();
    report(
        8,
        "property suites",
        pass,
        &format!("{passed}/{} properties held over 256 cases each", results.len()),
        start,
    );
    assert!(pass);
}

#[test]
fn criterion_9_deterministic_learning() {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let mut sim = SimConfig::new(5, 128, 12);
    sim.seed = 9;
    cmd_simulate(&sim, &tmp.path().join("data")).unwrap();
    let mut data: Vec<_> = std::fs::read_dir(tmp.path().join("data"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    data.sort();
    let cfg = LearnConfig {
        iterations: 2000,
        seed: 42,
        restarts: 2,
        ..LearnConfig::new(data)
    };
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    cmd_learn(&cfg, &a).unwrap();
    cmd_learn(&cfg, &b).unwrap();
    let x = std::fs::read(a.join("graph.json")).unwrap();
    let y = std::fs::read(b.join("graph.json")).unwrap();
    let pass = x == y;
    report(9, "byte-identical graph.json", pass, &format!("{} bytes compared", x.len()), start);
    assert!(pass);
}
