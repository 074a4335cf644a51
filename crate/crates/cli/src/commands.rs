//! The pipeline commands. Each writes its artifacts plus `run_meta.json`,
//! which holds the fully resolved configuration and can be replayed.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::json;
use tsgraph::graphs::{DecomposableGraph, GraphJson, GraphPriorConfig};
use tsgraph::likelihood::{predictive_log_likelihood, HiwPrior, ScoredGraph};
use tsgraph::search::{fincs_restarts, SearchConfig, RNG_ALGORITHM};
use tsgraph::simulate::{generate_panel, recovery_metrics, sample_var_model, SimConfig, VarModel};
use tsgraph::SpectralStatistics;

use crate::data::{ingest_csv, isqrt, statistics, Dataset, Preprocess, Smoothing};
use crate::error::{CliError, Result};

pub const RUN_META: &str = "run_meta.json";

fn create_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::File::create(path)
        .and_then(|mut f| f.write_all(bytes))
        .map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("artifacts serialize");
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::parse(path, e.to_string()))
}

fn canonical(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    paths
        .iter()
        .map(|p| fs::canonicalize(p).map_err(|e| CliError::io(p, e)))
        .collect()
}

/// Contents of `run_meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub version: String,
    #[serde(flatten)]
    pub command: Command,
    /// Facts computed during the run; informational, ignored on replay.
    pub derived: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "config", rename_all = "lowercase")]
pub enum Command {
    Learn(LearnConfig),
    Simulate(SimConfig),
    Evaluate(EvaluateConfig),
    Predict(PredictConfig),
    Spectra(SpectraConfig),
}

fn write_meta(out: &Path, command: Command, derived: serde_json::Value) -> Result<()> {
    let meta = RunMeta {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command,
        derived,
    };
    write_json(&out.join(RUN_META), &meta)
}

/// Rerun the command recorded in a `run_meta.json`, writing to `out` (the
/// file's own directory by default).
pub fn replay(meta_path: &Path, out: Option<&Path>) -> Result<Command> {
    let meta: RunMeta = read_json(meta_path)?;
    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => meta_path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf),
    };
    match &meta.command {
        Command::Learn(c) => cmd_learn(c, &dir).map(|_| ()),
        Command::Simulate(c) => cmd_simulate(c, &dir).map(|_| ()),
        Command::Evaluate(c) => cmd_evaluate(c, &dir).map(|_| ()),
        Command::Predict(c) => cmd_predict(c, &dir).map(|_| ()),
        Command::Spectra(c) => cmd_spectra(c, &dir).map(|_| ()),
    }?;
    Ok(meta.command)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnConfig {
    pub data: Vec<PathBuf>,
    pub seed: u64,
    pub iterations: usize,
    pub global_move_period: usize,
    pub resample_period: usize,
    pub edge_prob_smoothing: f64,
    pub restarts: usize,
    /// Fractional prior exponent; `4 / (smallest entry dof)` when unset,
    /// which is `4/N` for unsmoothed replicates.
    pub g: Option<f64>,
    pub prior_a: f64,
    pub prior_b: f64,
    /// Unset means piecewise with `⌊√T⌋` bins for one series, none otherwise.
    pub smoothing: Option<Smoothing>,
    pub preprocess: Preprocess,
    pub half_spectrum: bool,
}

impl LearnConfig {
    pub fn new(data: Vec<PathBuf>) -> Self {
        LearnConfig {
            data,
            seed: 0,
            iterations: 10_000,
            global_move_period: 50,
            resample_period: 100,
            edge_prob_smoothing: 1.0,
            restarts: 1,
            g: None,
            prior_a: 1.0,
            prior_b: 1.0,
            smoothing: None,
            preprocess: Preprocess::default(),
            half_spectrum: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LearnOutcome {
    pub config: LearnConfig,
    pub graph: ScoredGraph,
    pub edge_probabilities: Vec<Vec<f64>>,
}

/// Ingest, transform and summarise data under the given smoothing.
fn prepare(data: &[PathBuf], smoothing: Option<Smoothing>, pre: &Preprocess) -> Result<(Dataset, Smoothing, SpectralStatistics)> {
    let ds = ingest_csv(data)?;
    let panel = pre.transform(&ds.panel)?;
    let smoothing = smoothing.unwrap_or_else(|| Smoothing::default_for(panel.len(), panel.num_replicates()));
    let stats = statistics(&panel, smoothing, pre)?;
    Ok((ds, smoothing, stats))
}

pub fn cmd_learn(config: &LearnConfig, out: &Path) -> Result<LearnOutcome> {
    let (ds, smoothing, stats) = prepare(&config.data, config.smoothing, &config.preprocess)?;
    let p = stats.dim;
    let (min_entry, min_dof) = stats
        .entries
        .iter()
        .enumerate()
        .map(|(n, e)| (n, e.dof))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    if stats.entries.is_empty() {
        return Err(CliError::Input("no frequencies left to score".into()));
    }
    if min_dof < (p + 1) as f64 {
        return Err(tsgraph::Error::RankDeficient {
            entry: min_entry,
            dof: min_dof,
            clique_size: p,
            required: p + 1,
        }
        .into());
    }
    let g = config.g.unwrap_or(4.0 / min_dof);
    if !(g > 0.0 && g < 1.0) {
        return Err(CliError::Config(format!(
            "fractional exponent g={g} must lie in (0, 1); the default 4/{min_dof} needs more than 4 degrees \
             of freedom per entry, so add smoothing or pass --g"
        )));
    }
    let resolved = LearnConfig {
        data: canonical(&config.data)?,
        g: Some(g),
        smoothing: Some(smoothing),
        ..config.clone()
    };

    let mut search = SearchConfig::new(HiwPrior::fractional(g)?);
    search.iterations = config.iterations;
    search.global_move_period = config.global_move_period;
    search.resample_period = config.resample_period;
    search.edge_prob_smoothing = config.edge_prob_smoothing;
    search.seed = config.seed;
    search.prior = GraphPriorConfig::new(config.prior_a, config.prior_b)?;
    search.half_spectrum = config.half_spectrum;
    let (result, restart_scores) = fincs_restarts(&stats, &search, config.restarts)?;

    create_dir(out)?;
    write_json(&out.join("graph.json"), &result.map_graph)?;
    write_bytes(&out.join("graph.dot"), result.map_graph.graph.to_dot(Some(&ds.names)).as_bytes())?;

    let mut probs = String::from("i,j,name_i,name_j,probability\n");
    for i in 0..p {
        for j in i + 1..p {
            probs.push_str(&format!(
                "{i},{j},{},{},{}\n",
                ds.names[i], ds.names[j], result.edge_probabilities[i][j]
            ));
        }
    }
    write_bytes(&out.join("edge_probs.csv"), probs.as_bytes())?;

    let mut trace = serde_json::to_string(&result.header).expect("trace header serializes");
    trace.push('\n');
    for rec in &result.trace {
        trace.push_str(&serde_json::to_string(rec).expect("trace record serializes"));
        trace.push('\n');
    }
    write_bytes(&out.join("trace.ndjson"), trace.as_bytes())?;

    write_meta(
        out,
        Command::Learn(resolved.clone()),
        json!({
            "names": ds.names,
            "series_len": stats.series_len,
            "replicates": stats.num_replicates,
            "dim": p,
            "drop_dc": config.preprocess.drop_dc(),
            "excluded_frequencies": stats.excluded_frequencies,
            "entries": stats.entries.len(),
            "min_entry_dof": min_dof,
            "rng": RNG_ALGORITHM,
            "restart_seeds": (0..config.restarts.max(1) as u64).map(|r| config.seed.wrapping_add(r)).collect::<Vec<_>>(),
            "restart_best_log_posterior": restart_scores,
        }),
    )?;
    Ok(LearnOutcome {
        config: resolved,
        graph: result.map_graph,
        edge_probabilities: result.edge_probabilities,
    })
}

/// Simulate a VAR(1) model and panel; returns the model.
pub fn cmd_simulate(config: &SimConfig, out: &Path) -> Result<VarModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let model = sample_var_model(config, &mut rng)?;
    let panel = generate_panel(&model, config.t, config.n, &mut rng)?;
    create_dir(out)?;
    let header: Vec<String> = (0..config.p).map(|d| format!("x{d}")).collect();
    let mut files = Vec::new();
    for (n, s) in panel.replicates().iter().enumerate() {
        let name = format!("replicate_{n:03}.csv");
        let mut text = header.join(",");
        text.push('\n');
        for t in 0..s.len() {
            let row: Vec<String> = s.row(t).iter().map(|v| v.to_string()).collect();
            text.push_str(&row.join(","));
            text.push('\n');
        }
        write_bytes(&out.join(&name), text.as_bytes())?;
        files.push(name);
    }
    write_json(&out.join("model.json"), &model)?;
    write_meta(
        out,
        Command::Simulate(config.clone()),
        json!({ "files": files, "rng": RNG_ALGORITHM, "initial_state": "zero" }),
    )?;
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateConfig {
    pub graph: PathBuf,
    pub model: PathBuf,
}

/// Accepts a bare `{"p", "edges"}` graph or a scored graph wrapping one.
fn read_graph(path: &Path) -> Result<GraphJson> {
    let value: serde_json::Value = read_json(path)?;
    let inner = value.get("graph").cloned().unwrap_or(value);
    serde_json::from_value(inner).map_err(|e| CliError::parse(path, e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub p: usize,
    pub tpr: f64,
    pub fpr: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

pub fn cmd_evaluate(config: &EvaluateConfig, out: &Path) -> Result<Metrics> {
    let estimated = read_graph(&config.graph)?;
    let model: VarModel = read_json(&config.model)?;
    if estimated.p != model.dim() {
        return Err(CliError::Input(format!(
            "graph has p={} but the model has p={}",
            estimated.p,
            model.dim()
        )));
    }
    let est: Vec<(usize, usize)> = estimated.edges.iter().map(|e| (e[0], e[1])).collect();
    let m = recovery_metrics(&est, &model.edges(), estimated.p)?;
    let metrics = Metrics {
        p: estimated.p,
        tpr: m.tpr,
        fpr: m.fpr,
        tp: m.tp,
        fp: m.fp,
        fn_: m.fn_,
        tn: m.tn,
    };
    create_dir(out)?;
    write_json(&out.join("metrics.json"), &metrics)?;
    let resolved = EvaluateConfig {
        graph: fs::canonicalize(&config.graph).map_err(|e| CliError::io(&config.graph, e))?,
        model: fs::canonicalize(&config.model).map_err(|e| CliError::io(&config.model, e))?,
    };
    write_meta(out, Command::Evaluate(resolved), json!({}))?;
    Ok(metrics)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictConfig {
    pub train: Vec<PathBuf>,
    pub test: Vec<PathBuf>,
    pub graph: PathBuf,
    /// Daniell half-width for the training prior; `⌊√T/2⌋` when unset.
    pub daniell_m: Option<usize>,
    pub preprocess: Preprocess,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictive {
    pub graph: f64,
    pub empty: f64,
    pub complete: f64,
}

pub fn cmd_predict(config: &PredictConfig, out: &Path) -> Result<Predictive> {
    let train = ingest_csv(&config.train)?;
    let test = ingest_csv(&config.test)?;
    if train.names != test.names {
        return Err(CliError::Input(format!(
            "train columns {:?} differ from test columns {:?}",
            train.names, test.names
        )));
    }
    let train_panel = config.preprocess.transform(&train.panel)?;
    let test_panel = config.preprocess.transform(&test.panel)?;
    if train_panel.len() != test_panel.len() {
        return Err(CliError::Input(format!(
            "train series have T={} but test series have T={}; frequencies must align",
            train_panel.len(),
            test_panel.len()
        )));
    }
    let m = config.daniell_m.unwrap_or(isqrt(train_panel.len()) / 2);
    let prior = statistics(&train_panel, Smoothing::Daniell(m), &config.preprocess)?;
    let data = statistics(&test_panel, Smoothing::None, &config.preprocess)?;
    let given = DecomposableGraph::try_from(read_graph(&config.graph)?)?;
    let p = data.dim;
    let score = |g: &DecomposableGraph| predictive_log_likelihood(&prior, &data, g);
    let result = Predictive {
        graph: score(&given)?,
        empty: score(&DecomposableGraph::empty(p))?,
        complete: score(&DecomposableGraph::complete(p))?,
    };
    create_dir(out)?;
    write_json(&out.join("predictive.json"), &result)?;
    let resolved = PredictConfig {
        train: canonical(&config.train)?,
        test: canonical(&config.test)?,
        graph: fs::canonicalize(&config.graph).map_err(|e| CliError::io(&config.graph, e))?,
        daniell_m: Some(m),
        preprocess: config.preprocess,
    };
    write_meta(
        out,
        Command::Predict(resolved),
        json!({ "series_len": data.series_len, "excluded_frequencies": data.excluded_frequencies }),
    )?;
    Ok(result)
}

/// Which `(i, j)` spectra to emit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairSelection {
    /// Everything for up to 8 series, auto-spectra only beyond that.
    Auto,
    All,
    Diagonal,
    None,
    List(Vec<(usize, usize)>),
}

impl PairSelection {
    pub fn resolve(&self, p: usize) -> Result<Vec<(usize, usize)>> {
        let all = || (0..p).flat_map(|i| (i..p).map(move |j| (i, j))).collect();
        let diag = || (0..p).map(|i| (i, i)).collect();
        Ok(match self {
            PairSelection::Auto if p <= 8 => all(),
            PairSelection::Auto | PairSelection::Diagonal => diag(),
            PairSelection::All => all(),
            PairSelection::None => Vec::new(),
            PairSelection::List(l) => {
                if let Some(&(i, j)) = l.iter().find(|&&(i, j)| i >= p || j >= p) {
                    return Err(CliError::Input(format!("pair {i}-{j} is out of range for {p} series")));
                }
                l.clone()
            }
        })
    }
}

impl fmt::Display for PairSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairSelection::Auto => write!(f, "auto"),
            PairSelection::All => write!(f, "all"),
            PairSelection::Diagonal => write!(f, "diag"),
            PairSelection::None => write!(f, "none"),
            PairSelection::List(l) => {
                let parts: Vec<String> = l.iter().map(|(i, j)| format!("{i}-{j}")).collect();
                write!(f, "{}", parts.join(","))
            }
        }
    }
}

impl FromStr for PairSelection {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(PairSelection::Auto),
            "all" => Ok(PairSelection::All),
            "diag" => Ok(PairSelection::Diagonal),
            "none" => Ok(PairSelection::None),
            _ => s
                .split(',')
                .map(|part| {
                    let (i, j) = part
                        .split_once('-')
                        .ok_or_else(|| format!("pair '{part}' should look like 0-1"))?;
                    let idx = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("bad index in '{part}'"));
                    Ok((idx(i)?, idx(j)?))
                })
                .collect::<std::result::Result<_, _>>()
                .map(PairSelection::List),
        }
    }
}

impl Serialize for PairSelection {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PairSelection {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectraConfig {
    pub data: Vec<PathBuf>,
    pub smoothing: Option<Smoothing>,
    pub pairs: PairSelection,
    pub preprocess: Preprocess,
}

/// Spectral density estimates `T · stat / dof` for frequencies up to one
/// half cycle per sample; `freq` is the block midpoint in cycles per sample.
pub fn cmd_spectra(config: &SpectraConfig, out: &Path) -> Result<usize> {
    let (_, smoothing, stats) = prepare(&config.data, config.smoothing, &config.preprocess)?;
    let pairs = config.pairs.resolve(stats.dim)?;
    let t = stats.series_len as f64;
    let mut text = String::from("freq,i,j,re,im\n");
    let mut rows = 0;
    for e in &stats.entries {
        let freq = (e.freq_start + e.freq_end) as f64 / 2.0 / t;
        if freq > 0.5 || e.dof <= 0.0 {
            continue;
        }
        for &(i, j) in &pairs {
            let v = e.stat.get(i, j) * (t / e.dof);
            text.push_str(&format!("{freq},{i},{j},{},{}\n", v.re, v.im));
            rows += 1;
        }
    }
    create_dir(out)?;
    write_bytes(&out.join("spectra.csv"), text.as_bytes())?;
    let resolved = SpectraConfig {
        data: canonical(&config.data)?,
        smoothing: Some(smoothing),
        ..config.clone()
    };
    write_meta(
        out,
        Command::Spectra(resolved),
        json!({ "rows": rows, "excluded_frequencies": stats.excluded_frequencies }),
    )?;
    Ok(rows)
}
