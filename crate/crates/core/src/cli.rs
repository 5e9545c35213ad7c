//! The `hgx` command line. [`dispatch`] parses arguments and returns the
//! output instead of printing it, so the front end can be driven from tests.
//!
//! Machine-readable output (JSON or CSV) goes to stdout, diagnostics to
//! stderr. Exit codes: 0 success, 1 validation error, 2 numerical failure,
//! 3 I/O or parse error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::edvw::{self, FeatureTable, ProteinChain};
use crate::equiv;
use crate::error::{HgxError, Result};
use crate::hypergraph::{Hypergraph, RhoSpec};
use crate::io::{self, MatrixFormat};
use crate::models::{self, Hyperparameters, TrainConfig, Variant};
use crate::partition::{self, VolumeSource};
use crate::sparse::CsrMatrix;
use crate::spectral;
use crate::walk::{self, PowerOptions, StationaryMode};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandResult {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CommandResult {
    fn ok(stdout: String) -> Self {
        Self {
            exit_code: 0,
            stdout,
            stderr: String::new(),
        }
    }

    fn failure(err: &HgxError) -> Self {
        Self {
            exit_code: err.exit_code(),
            stdout: String::new(),
            stderr: format!("error: {err}\n"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hgx", version, about = "Random walks, Laplacians and spectral convolutions on hypergraphs with edge-dependent vertex weights")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Auto,
    Closed,
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Dense,
    Coo,
}

impl From<FormatArg> for MatrixFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Dense => MatrixFormat::Dense,
            FormatArg::Coo => MatrixFormat::Coo,
        }
    }
}

#[derive(Debug, Args)]
struct CutArgs {
    /// Hypergraph JSON file.
    file: PathBuf,
    /// Take vertex volumes from power iteration instead of the closed form.
    /// Allowed when neither equivalence condition holds, without guarantees.
    #[arg(long)]
    power: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build hypergraph JSON from an incidence CSV (vertex,edge,q1,q2).
    Build {
        incidence: PathBuf,
        /// Edge-weight CSV (edge,w); unlisted edges default to weight 1.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Degree-shaping function as JSON, e.g. '{"kind":"power","sigma":-1}'.
        #[arg(long)]
        rho: Option<String>,
        /// Fail if an edge has no row in the weight table.
        #[arg(long)]
        require_weights: bool,
    },
    /// Structural report (connectivity, edge independence, isolated vertices) and degrees.
    Validate { file: PathBuf },
    /// Stationary distribution of the lazy walk.
    Stationary {
        file: PathBuf,
        /// closed: d_hat / vol (needs an equivalence condition); power: power iteration.
        #[arg(long, value_enum, default_value = "auto")]
        mode: ModeArg,
        /// Power-iteration tolerance on ||pi P - pi||_1.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iters: usize,
    },
    /// Which sufficient conditions for walk/graph equivalence hold.
    CheckEquiv {
        file: PathBuf,
        /// Relative tolerance of the equality tests.
        #[arg(long, default_value_t = equiv::DEFAULT_TOL)]
        tol: f64,
    },
    /// Equivalent weighted clique graph as a JSON weight matrix.
    Clique {
        file: PathBuf,
        #[arg(long)]
        no_self_loops: bool,
        #[arg(long, value_enum, default_value = "dense")]
        format: FormatArg,
    },
    /// Unified Laplacian: I - D^-1/2 K D^-1/2 (off) or I - D~^-1/2 (K+I) D~^-1/2 (on).
    Laplacian {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "off")]
        renorm: Switch,
        #[arg(long, value_enum, default_value = "dense")]
        format: FormatArg,
    },
    /// Eigenvalues of the unified Laplacian, lambda_H and the bottom eigenvector.
    Spectrum {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "off")]
        renorm: Switch,
    },
    /// Lazy-walk diffusion from one vertex against the mixing bound (CSV).
    Diffuse {
        file: PathBuf,
        /// Source vertex id.
        #[arg(long)]
        source: String,
        #[arg(long, default_value_t = 50)]
        steps: usize,
    },
    /// k-nearest-neighbour hypergraph with Gaussian-kernel vertex weights.
    /// Several feature files are concatenated as modalities.
    KnnBuild {
        #[arg(required = true)]
        features: Vec<PathBuf>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
    },
    /// Residue hypergraph of a protein chain CSV (index,aa,x,y,z[,features]).
    ProteinBuild {
        chain: PathBuf,
        /// Sequence window length.
        #[arg(long, default_value_t = edvw::DEFAULT_TAU)]
        tau: usize,
        /// Spatial radius.
        #[arg(long, default_value_t = edvw::DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
    },
    /// Train a node classifier; prints metrics JSON.
    Train(TrainArgs),
    /// Normalized-cut objective of a vertex subset.
    Cut {
        #[command(flatten)]
        args: CutArgs,
        /// Comma-separated vertex ids.
        #[arg(long, value_delimiter = ',', required = true)]
        subset: Vec<String>,
    },
    /// Heuristic bipartition by sweeping the second Laplacian eigenvector.
    CutSweep {
        #[command(flatten)]
        args: CutArgs,
    },
    /// Max abs difference between the transition matrix and a brute-force two-step walk.
    OracleCompare { file: PathBuf },
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Hypergraph JSON file.
    file: PathBuf,
    /// Feature CSV (id,f1..fd) or HGXF binary with rows in vertex order.
    #[arg(long)]
    features: PathBuf,
    /// Label CSV (id,label,split) with split in {train,val,test} or empty.
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value = "h_gcn", value_parser = parse_variant)]
    variant: Variant,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    /// Diffusion steps or polynomial order.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
    /// Self-loop renormalization; defaults to on except for hgnn_baseline.
    #[arg(long, value_enum)]
    renorm: Option<Switch>,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 5e-4)]
    wd: f64,
    #[arg(long, default_value_t = 300)]
    epochs: usize,
    /// Early-stopping patience on validation loss.
    #[arg(long, default_value_t = 100)]
    patience: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the per-epoch loss curve CSV here.
    #[arg(long)]
    loss_curve: Option<PathBuf>,
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    s.parse().map_err(|e: HgxError| e.to_string())
}

/// Parses `argv` (program name first) and runs the command.
pub fn dispatch<I, T>(argv: I) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CommandResult {
                    exit_code: 1,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                CommandResult::ok(text)
            };
        }
    };
    match run(cli.command) {
        Ok(out) => CommandResult::ok(out),
        Err(e) => CommandResult::failure(&e),
    }
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string(value)?;
    s.push('\n');
    Ok(s)
}

fn load(path: &Path) -> Result<Hypergraph> {
    io::read_hypergraph(path)
}

fn matrix(h: &Hypergraph, m: &nalgebra::DMatrix<f64>, format: FormatArg) -> Result<String> {
    let mut s = io::matrix_json(h.vertex_ids(), &CsrMatrix::from_dense(m), format.into())?;
    s.push('\n');
    Ok(s)
}

fn laplacian_of(h: &Hypergraph, renorm: Switch) -> Result<nalgebra::DMatrix<f64>> {
    let bundle = spectral::unified_laplacian(h)?;
    Ok(match renorm {
        Switch::Off => bundle.laplacian,
        Switch::On => {
            let n = h.n_vertices();
            nalgebra::DMatrix::identity(n, n) - bundle.t_tilde
        }
    })
}

#[derive(Serialize)]
struct StationaryOutput<'a> {
    pi: &'a [f64],
    method: walk::StationaryMethod,
    residual: f64,
    vertices: &'a [String],
    isolated: Vec<&'a str>,
}

#[derive(Serialize)]
struct ValidateOutput<'a> {
    #[serde(flatten)]
    structure: crate::hypergraph::StructureReport,
    degrees: crate::hypergraph::DegreeProfile,
    vertices: &'a [String],
    edges: &'a [String],
}

#[derive(Serialize)]
struct TrainOutput {
    variant: Variant,
    n_parameters: usize,
    #[serde(flatten)]
    metrics: models::Metrics,
}

fn run(cmd: Command) -> Result<String> {
    match cmd {
        Command::Build {
            incidence,
            weights,
            rho,
            require_weights,
        } => {
            let rho = match rho {
                Some(s) => serde_json::from_str::<RhoSpec>(&s)?,
                None => RhoSpec::default(),
            };
            let h = io::build_from_csv(&incidence, weights.as_deref(), rho, !require_weights)?;
            let mut s = h.to_json_pretty()?;
            s.push('\n');
            Ok(s)
        }
        Command::Validate { file } => {
            let h = load(&file)?;
            json(&ValidateOutput {
                structure: h.validate(),
                degrees: h.degree_profile()?,
                vertices: h.vertex_ids(),
                edges: h.edge_ids(),
            })
        }
        Command::Stationary {
            file,
            mode,
            tol,
            max_iters,
        } => {
            let h = load(&file)?;
            let mode = match mode {
                ModeArg::Auto => StationaryMode::Auto,
                ModeArg::Closed => StationaryMode::ClosedForm,
                ModeArg::Power => StationaryMode::PowerIteration,
            };
            let opts = PowerOptions {
                tol,
                max_iters,
                ..PowerOptions::default()
            };
            let st = walk::stationary_distribution(&h, mode, opts)?;
            json(&StationaryOutput {
                pi: &st.pi,
                method: st.method,
                residual: st.residual,
                vertices: h.vertex_ids(),
                isolated: st.isolated.iter().map(|&v| h.vertex_ids()[v].as_str()).collect(),
            })
        }
        Command::CheckEquiv { file, tol } => json(&equiv::check_equivalence_conditions(&load(&file)?, tol)),
        Command::Clique {
            file,
            no_self_loops,
            format,
        } => {
            let g = equiv::clique_graph(&load(&file)?)?;
            let g = if no_self_loops { g.without_self_loops() } else { g };
            let mut s = io::matrix_json(&g.vertices, &g.weights, format.into())?;
            s.push('\n');
            Ok(s)
        }
        Command::Laplacian { file, renorm, format } => {
            let h = load(&file)?;
            matrix(&h, &laplacian_of(&h, renorm)?, format)
        }
        Command::Spectrum { file, renorm } => {
            let h = load(&file)?;
            json(&spectral::spectrum(&laplacian_of(&h, renorm)?)?)
        }
        Command::Diffuse { file, source, steps } => {
            let h = load(&file)?;
            let s = h.vertex_index(&source)?;
            Ok(spectral::convergence_bound_check(&h, s, steps)?.to_csv())
        }
        Command::KnnBuild { features, k, gamma } => {
            let hs = features
                .iter()
                .map(|p| Ok(edvw::knn_gaussian_hypergraph(&FeatureTable::read_file(p)?, k, gamma)?.hypergraph))
                .collect::<Result<Vec<_>>>()?;
            let mut s = edvw::concat_modalities(&hs)?.to_json_pretty()?;
            s.push('\n');
            Ok(s)
        }
        Command::ProteinBuild {
            chain,
            tau,
            epsilon,
            gamma,
        } => {
            let chain = ProteinChain::read_csv_file(&chain)?;
            let mut s = edvw::protein_hypergraph(&chain, tau, epsilon, gamma)?.to_json_pretty()?;
            s.push('\n');
            Ok(s)
        }
        Command::Train(args) => train(args),
        Command::Cut { args, subset } => {
            let h = load(&args.file)?;
            let ids: Vec<&str> = subset.iter().map(String::as_str).collect();
            json(&partition::cut_objective_by_ids(&h, &ids, volume_source(args.power))?)
        }
        Command::CutSweep { args } => {
            let h = load(&args.file)?;
            json(&partition::cut_sweep(&h, volume_source(args.power))?)
        }
        Command::OracleCompare { file } => {
            #[derive(Serialize)]
            struct Out {
                max_abs_diff: f64,
            }
            json(&Out {
                max_abs_diff: walk::oracle_max_abs_diff(&load(&file)?)?,
            })
        }
    }
}

fn volume_source(power: bool) -> VolumeSource {
    if power {
        VolumeSource::PowerIteration
    } else {
        VolumeSource::ClosedForm
    }
}

fn train(a: TrainArgs) -> Result<String> {
    let h = load(&a.file)?;
    let x = io::features_for(&FeatureTable::read_file(&a.features)?, &h)?;
    let labels = io::read_labels(&a.labels, &h)?;
    let mut hyper = Hyperparameters::for_variant(a.variant);
    if let Some(v) = a.layers {
        hyper.layers = v;
    }
    if let Some(v) = a.hidden {
        hyper.hidden = v;
    }
    if let Some(v) = a.k {
        hyper.k = v;
    }
    if let Some(v) = a.alpha {
        hyper.alpha = v;
    }
    if let Some(v) = a.beta {
        hyper.beta = v;
    }
    if let Some(v) = a.dropout {
        hyper.dropout = v;
    }
    if let Some(r) = a.renorm {
        hyper.use_renormalization = r == Switch::On;
    }
    let config = TrainConfig {
        learning_rate: a.lr,
        weight_decay: a.wd,
        max_epochs: a.epochs,
        patience: a.patience.min(a.epochs),
        seed: a.seed,
        ..TrainConfig::default()
    };
    let (params, metrics) = models::train(a.variant, hyper, &h, &x, &labels.labels, &labels.split, &config)?;
    if let Some(path) = &a.loss_curve {
        std::fs::write(path, metrics.loss_curve_csv())?;
    }
    json(&TrainOutput {
        variant: a.variant,
        n_parameters: params.n_parameters(),
        metrics,
    })
}
