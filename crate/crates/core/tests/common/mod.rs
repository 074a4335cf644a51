#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tsgraph::graphs::DecomposableGraph;
use tsgraph::linalg::CMatrix;
use tsgraph::spectral::{Series, SpectralEntry, SpectralStatistics, StatLayout, TimeSeriesPanel};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn pairs(p: usize) -> Vec<(usize, usize)> {
    (0..p).flat_map(|i| (i + 1..p).map(move |j| (i, j))).collect()
}

/// Chordality by repeated removal of simplicial vertices.
pub fn chordal_oracle(p: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![vec![false; p]; p];
    for &(i, j) in edges {
        adj[i][j] = true;
        adj[j][i] = true;
    }
    let mut alive = vec![true; p];
    for _ in 0..p {
        let simplicial = (0..p).find(|&v| {
            alive[v] && {
                let nb: Vec<usize> = (0..p).filter(|&u| alive[u] && adj[v][u]).collect();
                nb.iter().all(|&a| nb.iter().all(|&b| a == b || adj[a][b]))
            }
        });
        match simplicial {
            Some(v) => alive[v] = false,
            None => return false,
        }
    }
    true
}

/// Every decomposable graph on `p` nodes, by filtering all edge subsets.
pub fn enumerate_decomposable(p: usize) -> Vec<DecomposableGraph> {
    let all = pairs(p);
    (0u64..1 << all.len())
        .filter_map(|mask| {
            let edges: Vec<_> = all
                .iter()
                .enumerate()
                .filter(|(n, _)| mask >> n & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            chordal_oracle(p, &edges).then(|| DecomposableGraph::new(p, &edges).unwrap())
        })
        .collect()
}

pub fn connected_components(p: usize, edges: &[(usize, usize)]) -> usize {
    let mut parent: Vec<usize> = (0..p).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        if parent[x] != x {
            let r = find(parent, parent[x]);
            parent[x] = r;
        }
        parent[x]
    }
    for &(i, j) in edges {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        parent[a] = b;
    }
    (0..p).filter(|&x| find(&mut parent, x) == x).count()
}

pub fn complex_normal<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Sum of `dof` outer products of random complex vectors.
pub fn random_psd<R: Rng>(p: usize, dof: usize, rng: &mut R) -> CMatrix {
    let mut m = CMatrix::zeros(p);
    for _ in 0..dof {
        let v: Vec<Complex64> = (0..p).map(|_| complex_normal(rng)).collect();
        m.add_outer(&v);
    }
    m
}

/// Per-frequency statistics on frequencies `1..=entries` with Wishart-like
/// random matrices of the given degrees of freedom.
pub fn random_stats<R: Rng>(p: usize, entries: usize, dof: usize, rng: &mut R) -> SpectralStatistics {
    SpectralStatistics {
        dim: p,
        series_len: entries + 1,
        num_replicates: dof,
        layout: StatLayout::PerFrequency,
        excluded_frequencies: vec![0],
        entries: (1..=entries)
            .map(|k| SpectralEntry {
                freq_start: k,
                freq_end: k,
                stat: random_psd(p, dof, rng),
                dof: dof as f64,
            })
            .collect(),
    }
}

pub fn random_series<R: Rng>(t: usize, p: usize, rng: &mut R) -> Series {
    Series::new(t, p, (0..t * p).map(|_| rng.sample(StandardNormal)).collect()).unwrap()
}

pub fn random_panel<R: Rng>(t: usize, p: usize, n: usize, rng: &mut R) -> TimeSeriesPanel {
    TimeSeriesPanel::new((0..n).map(|_| random_series(t, p, rng)).collect()).unwrap()
}

/// A random decomposable graph: random edges, then a chordal completion
/// found by the oracle's elimination game on a random order.
pub fn random_decomposable<R: Rng>(p: usize, density: f64, rng: &mut R) -> DecomposableGraph {
    let mut adj = vec![vec![false; p]; p];
    for (i, j) in pairs(p) {
        if rng.random_bool(density) {
            adj[i][j] = true;
            adj[j][i] = true;
        }
    }
    let mut order: Vec<usize> = (0..p).collect();
    for i in (1..p).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut eliminated = vec![false; p];
    for &v in &order {
        let nb: Vec<usize> = (0..p).filter(|&u| !eliminated[u] && u != v && adj[v][u]).collect();
        for &a in &nb {
            for &b in &nb {
                if a != b {
                    adj[a][b] = true;
                }
            }
        }
        eliminated[v] = true;
    }
    let edges: Vec<_> = pairs(p).into_iter().filter(|&(i, j)| adj[i][j]).collect();
    DecomposableGraph::new(p, &edges).unwrap()
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `log ∫ Π_{n<ν} CN(d_n; 0, x) · IW(x; δ, w) dx` for scalar data with
/// `Σ|d_n|² = s`, integrated numerically. The inverse Wishart density on the
/// positive reals is `w^{δ+1}/Γ(δ+1) · x^{−(δ+2)} e^{−w/x}`.
pub fn scalar_marginal_by_quadrature(w: f64, delta: f64, s: f64, nu: f64) -> f64 {
    let ln_gamma = |x: f64| statrs::function::gamma::ln_gamma(x);
    // substitute x = e^t; the integrand becomes exp(-(δ+1+ν) t − (w+s) e^{−t})
    let a = delta + 1.0 + nu;
    let log_f = |t: f64| -a * t - (w + s) * (-t).exp();
    let t_star = ((w + s) / a).ln();
    let peak = log_f(t_star);
    let f = |t: f64| (log_f(t) - peak).exp();
    // unit panels, so the refinement cannot miss the narrow peak
    let integral: f64 = (-12..80)
        .map(|k| adaptive_simpson(&f, t_star + k as f64, t_star + k as f64 + 1.0, 1e-15))
        .sum();
    (delta + 1.0) * w.ln() - ln_gamma(delta + 1.0) - nu * std::f64::consts::PI.ln() + peak + integral.ln()
}
