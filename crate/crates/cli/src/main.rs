use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tsgraph::simulate::{SimConfig, DEFAULT_BURN_IN, DEFAULT_MAX_ATTEMPTS};
use tsgraph_cli::{
    cmd_evaluate, cmd_learn, cmd_predict, cmd_simulate, cmd_spectra, replay, EvaluateConfig, LearnConfig,
    PairSelection, PredictConfig, Preprocess, Smoothing, SpectraConfig,
};

/// Learn conditional-independence graphs of multivariate time series.
#[derive(Parser)]
#[command(name = "tsgraph", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct PreprocessArgs {
    /// Convert prices to log returns, 100·ln(p_t/p_{t-1}).
    #[arg(long)]
    log_returns: bool,
    /// Skip mean removal (requires --keep-dc-unsafe).
    #[arg(long)]
    no_center: bool,
    /// Keep the zero frequency of uncentred data.
    #[arg(long)]
    keep_dc_unsafe: bool,
}

impl PreprocessArgs {
    fn resolve(&self) -> Preprocess {
        Preprocess {
            center: !self.no_center,
            log_returns: self.log_returns,
            keep_dc_unsafe: self.keep_dc_unsafe,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Learn a graph from CSV replicates.
    Learn {
        /// One CSV per replicate (rows = time, columns = series).
        #[arg(long, required = true, num_args = 1..)]
        data: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        iterations: usize,
        /// Fractional prior exponent (default 4 / smallest entry dof).
        #[arg(long)]
        g: Option<f64>,
        /// none, daniell:m, bartlett:M or piecewise:M.
        #[arg(long)]
        smoothing: Option<Smoothing>,
        #[arg(long, default_value_t = 1.0)]
        prior_a: f64,
        #[arg(long, default_value_t = 1.0)]
        prior_b: f64,
        /// Independent searches from seeds seed, seed+1, ...
        #[arg(long, default_value_t = 1)]
        restarts: usize,
        #[arg(long, default_value_t = 50)]
        global_period: usize,
        #[arg(long, default_value_t = 100)]
        resample_period: usize,
        #[arg(long, default_value_t = 1.0)]
        edge_smoothing: f64,
        /// Score every frequency instead of one per conjugate pair.
        #[arg(long)]
        full_spectrum: bool,
        #[command(flatten)]
        pre: PreprocessArgs,
    },
    /// Simulate VAR(1) replicates with a known graph.
    Simulate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        p: usize,
        #[arg(long = "T")]
        t: usize,
        #[arg(long = "N", default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 0.2)]
        rho: f64,
        #[arg(long, default_value_t = 0.5)]
        diag: f64,
        #[arg(long, default_value_t = 0.5)]
        offdiag: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BURN_IN)]
        burn_in: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_ATTEMPTS)]
        max_attempts: usize,
        /// Accept models whose true graph is not decomposable.
        #[arg(long)]
        allow_nondecomposable: bool,
    },
    /// Compare a learned graph with a simulated model's true graph.
    Evaluate {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predictive scores of test data under a graph, the empty and the complete graph.
    Predict {
        #[arg(long, required = true, num_args = 1..)]
        train: Vec<PathBuf>,
        #[arg(long, required = true, num_args = 1..)]
        test: Vec<PathBuf>,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Daniell half-width for the training prior (default ⌊√T/2⌋).
        #[arg(long)]
        daniell_m: Option<usize>,
        #[command(flatten)]
        pre: PreprocessArgs,
    },
    /// Write estimated spectra as CSV.
    Spectra {
        #[arg(long, required = true, num_args = 1..)]
        data: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        smoothing: Option<Smoothing>,
        /// auto, all, diag, none or a list like 0-0,0-1.
        #[arg(long, default_value = "auto")]
        pairs: PairSelection,
        #[command(flatten)]
        pre: PreprocessArgs,
    },
    /// Rerun a command from its run_meta.json.
    Replay {
        meta: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cmd: Cmd) -> tsgraph_cli::Result<()> {
    match cmd {
        Cmd::Learn {
            data,
            out,
            seed,
            iterations,
            g,
            smoothing,
            prior_a,
            prior_b,
            restarts,
            global_period,
            resample_period,
            edge_smoothing,
            full_spectrum,
            pre,
        } => {
            let config = LearnConfig {
                seed,
                iterations,
                global_move_period: global_period,
                resample_period,
                edge_prob_smoothing: edge_smoothing,
                restarts,
                g,
                prior_a,
                prior_b,
                smoothing,
                preprocess: pre.resolve(),
                half_spectrum: !full_spectrum,
                ..LearnConfig::new(data)
            };
            let outcome = cmd_learn(&config, &out)?;
            println!(
                "{} edges, log posterior {:.4}; wrote {}",
                outcome.graph.graph.num_edges(),
                outcome.graph.log_posterior,
                out.display()
            );
        }
        Cmd::Simulate {
            out,
            p,
            t,
            n,
            rho,
            diag,
            offdiag,
            seed,
            burn_in,
            max_attempts,
            allow_nondecomposable,
        } => {
            let config = SimConfig {
                rho,
                diag_value: diag,
                offdiag_value: offdiag,
                seed,
                require_decomposable: !allow_nondecomposable,
                burn_in,
                max_attempts,
                ..SimConfig::new(p, t, n)
            };
            let model = cmd_simulate(&config, &out)?;
            println!("{} true edges; wrote {}", model.true_edges.len(), out.display());
        }
        Cmd::Evaluate { graph, model, out } => {
            let m = cmd_evaluate(&EvaluateConfig { graph, model }, &out)?;
            println!("tpr {:.4} fpr {:.4}", m.tpr, m.fpr);
        }
        Cmd::Predict {
            train,
            test,
            graph,
            out,
            daniell_m,
            pre,
        } => {
            let r = cmd_predict(
                &PredictConfig {
                    train,
                    test,
                    graph,
                    daniell_m,
                    preprocess: pre.resolve(),
                },
                &out,
            )?;
            println!("graph {:.4} empty {:.4} complete {:.4}", r.graph, r.empty, r.complete);
        }
        Cmd::Spectra {
            data,
            out,
            smoothing,
            pairs,
            pre,
        } => {
            let rows = cmd_spectra(
                &SpectraConfig {
                    data,
                    smoothing,
                    pairs,
                    preprocess: pre.resolve(),
                },
                &out,
            )?;
            println!("{rows} rows; wrote {}", out.display());
        }
        Cmd::Replay { meta, out } => {
            replay(&meta, out.as_deref())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
