//! Command-line driver: `gen`, `fuse`, `eval` and `cds`.
//!
//! Exit codes: 0 success, 2 usage or configuration, 3 inconsistent data,
//! 4 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::affinity::prepare;
use crate::error::Error;
use crate::evalmetrics::{evaluate, Metric};
use crate::fusion::{feature_cluster, retrieve_batch};
use crate::matrixio::{
    load_matrix, load_results, save_matrix_binary, save_results, FeatureMatrix, FusionConfig, GroundTruth,
};
use crate::synth::{generate, SynthConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "mfcds", about = "Multi-feature rank fusion with constrained dominant sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus: one FSM1 matrix per feature plus ground truth.
    Gen { config: PathBuf, out_dir: PathBuf },
    /// Fuse feature matrices for a set of queries.
    Fuse {
        #[arg(required = true)]
        matrices: Vec<PathBuf>,
        #[arg(long, conflicts_with = "all_queries", required_unless_present = "all_queries")]
        queries: Option<PathBuf>,
        #[arg(long)]
        all_queries: bool,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: ConfigArgs,
    },
    /// Score a results file against ground truth.
    Eval {
        results: PathBuf,
        truth: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(Metric))]
        metric: Metric,
        /// Machine-readable report; defaults to `<results>.<metric>.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Show the constrained cluster of one query under one feature.
    Cds {
        matrix: PathBuf,
        query: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: ConfigArgs,
    },
}

impl clap::ValueEnum for Metric {
    fn value_variants<'a>() -> &'a [Self] {
        &[Metric::Map, Metric::Ns]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.name()))
    }
}

/// Per-field overrides, applied after the config file.
#[derive(Debug, Args, Default)]
struct ConfigArgs {
    #[arg(long)]
    npc: Option<String>,
    #[arg(long)]
    k_max: Option<String>,
    #[arg(long)]
    lambda_scale: Option<String>,
    #[arg(long)]
    lambda_mix: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    iota: Option<String>,
    #[arg(long)]
    mu_epsilon: Option<String>,
    #[arg(long)]
    rd_tol: Option<String>,
    #[arg(long)]
    rd_max_iter: Option<String>,
    #[arg(long)]
    support_eps: Option<String>,
    #[arg(long)]
    fixed_k: Option<String>,
    #[arg(long)]
    full_ranking: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

impl ConfigArgs {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        [
            ("npc", &self.npc),
            ("k_max", &self.k_max),
            ("lambda_scale", &self.lambda_scale),
            ("lambda_mix", &self.lambda_mix),
            ("eta", &self.eta),
            ("theta", &self.theta),
            ("iota", &self.iota),
            ("mu_epsilon", &self.mu_epsilon),
            ("rd_tol", &self.rd_tol),
            ("rd_max_iter", &self.rd_max_iter),
            ("support_eps", &self.support_eps),
            ("fixed_k", &self.fixed_k),
            ("full_ranking", &self.full_ranking),
            ("seed", &self.seed),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }
}

struct Failure {
    code: i32,
    msg: String,
}

type CmdResult = std::result::Result<(), Failure>;

fn fail(code: i32) -> impl Fn(Error) -> Failure {
    move |e| Failure {
        code,
        msg: e.to_string(),
    }
}

/// Exit code for an error raised while reading or processing data.
fn data_code(e: &Error) -> i32 {
    match e {
        Error::DegenerateDistances | Error::NegativeDistance { .. } => EXIT_NUMERIC,
        Error::UnknownKey(_) | Error::InvalidConfig(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn data_failure(e: Error) -> Failure {
    Failure {
        code: data_code(&e),
        msg: e.to_string(),
    }
}

fn load_config(path: Option<&Path>, overrides: &ConfigArgs) -> std::result::Result<FusionConfig, Failure> {
    let mut cfg = FusionConfig::default();
    if let Some(path) = path {
        let text = fs::read_to_string(path).map_err(|e| fail(EXIT_USAGE)(Error::io(path, e)))?;
        cfg.apply_text(&text).map_err(fail(EXIT_USAGE))?;
    }
    for (key, value) in overrides.pairs() {
        cfg.set(key, value).map_err(fail(EXIT_USAGE))?;
    }
    cfg.validate().map_err(fail(EXIT_USAGE))?;
    Ok(cfg)
}

fn load_prepared(paths: &[PathBuf]) -> std::result::Result<Vec<FeatureMatrix<f64>>, Failure> {
    paths
        .iter()
        .map(|p| {
            let m: FeatureMatrix<f64> = load_matrix(p).map_err(data_failure)?;
            prepare(&m).map_err(data_failure)
        })
        .collect()
}

fn cmd_gen(config: &Path, out_dir: &Path, out: &mut dyn Write) -> CmdResult {
    let cfg = SynthConfig::load(config).map_err(fail(EXIT_USAGE))?;
    let data = generate(&cfg).map_err(fail(EXIT_USAGE))?;
    let io = |e: std::io::Error| fail(EXIT_DATA)(Error::io(out_dir, e));
    fs::create_dir_all(out_dir).map_err(io)?;
    for (f, m) in data.distances.iter().enumerate() {
        let path = out_dir.join(format!("feature_{f}.fsm"));
        save_matrix_binary(m, &path).map_err(fail(EXIT_DATA))?;
        let _ = writeln!(out, "{}", path.display());
    }
    data.truth.save(out_dir.join("truth.tsv")).map_err(fail(EXIT_DATA))?;
    fs::write(out_dir.join("synth.conf"), cfg.to_text()).map_err(io)?;
    let _ = writeln!(out, "{}", out_dir.join("truth.tsv").display());
    Ok(())
}

fn read_queries(path: &Path, n: usize) -> std::result::Result<Vec<usize>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| fail(EXIT_USAGE)(Error::io(path, e)))?;
    let mut queries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let q: usize = line.parse().map_err(|e| Failure {
            code: EXIT_USAGE,
            msg: format!("{}:{}: {e}", path.display(), idx + 1),
        })?;
        if q >= n {
            return Err(fail(EXIT_DATA)(Error::OutOfRange { id: q, n }));
        }
        queries.push(q);
    }
    Ok(queries)
}

fn cmd_fuse(
    matrices: &[PathBuf],
    queries: Option<&Path>,
    config: Option<&Path>,
    overrides: &ConfigArgs,
    out_path: &Path,
    out: &mut dyn Write,
) -> CmdResult {
    let cfg = load_config(config, overrides)?;
    let features = load_prepared(matrices)?;
    let n = features[0].n();
    if let Some(bad) = features.iter().position(|f| f.n() != n) {
        return Err(Failure {
            code: EXIT_DATA,
            msg: format!(
                "dimension mismatch: {} has n = {n}, {} has n = {}",
                matrices[0].display(),
                matrices[bad].display(),
                features[bad].n()
            ),
        });
    }
    let queries = match queries {
        Some(path) => read_queries(path, n)?,
        None => (0..n).collect(),
    };
    let results = retrieve_batch(&queries, &features, &cfg).map_err(data_failure)?;
    save_results(&results, out_path).map_err(fail(EXIT_DATA))?;
    let _ = writeln!(out, "wrote {} results to {}", results.len(), out_path.display());
    Ok(())
}

fn cmd_eval(results: &Path, truth: &Path, metric: Metric, report: &Path, out: &mut dyn Write) -> CmdResult {
    let results = load_results::<f64>(results).map_err(fail(EXIT_DATA))?;
    let gt = GroundTruth::load(truth).map_err(fail(EXIT_DATA))?;
    let report_data = evaluate(&results, &gt, metric).map_err(fail(EXIT_DATA))?;
    let _ = writeln!(
        out,
        "metric={} queries={} mean={}",
        report_data.metric, report_data.queries, report_data.mean
    );
    let json = serde_json::to_string_pretty(&report_data).map_err(|e| Failure {
        code: EXIT_DATA,
        msg: e.to_string(),
    })?;
    fs::write(report, json + "\n").map_err(|e| fail(EXIT_DATA)(Error::io(report, e)))?;
    Ok(())
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn cmd_cds(
    matrix: &Path,
    query: usize,
    config: Option<&Path>,
    overrides: &ConfigArgs,
    out: &mut dyn Write,
) -> CmdResult {
    let cfg = load_config(config, overrides)?;
    let features = load_prepared(std::slice::from_ref(&matrix.to_path_buf()))?;
    let s = &features[0];
    if query >= s.n() {
        return Err(Failure {
            code: EXIT_USAGE,
            msg: format!("query {query} out of range for n = {}", s.n()),
        });
    }
    let (nn, c) = feature_cluster(s, query, &cfg).map_err(data_failure)?;
    let _ = writeln!(out, "feature={} query={query}", s.name());
    let _ = writeln!(out, "neighbors={}", join(&nn.members));
    let _ = writeln!(out, "mu={}", c.mu);
    let _ = writeln!(out, "iterations={}", c.iterations);
    let _ = writeln!(out, "converged={}", c.converged);
    let _ = writeln!(out, "x={}", join(c.membership.as_slice()));
    let _ = writeln!(out, "zeta={}", c.zeta);
    let _ = writeln!(out, "support={}", join(&c.support));
    let _ = writeln!(out, "inliers={}", join(&c.inliers));
    let _ = writeln!(out, "outliers={}", join(&c.outliers));
    if c.is_singleton() {
        let _ = writeln!(out, "singleton cluster");
    }
    Ok(())
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Regular output goes to `out`, diagnostics
/// to stderr.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Gen { config, out_dir } => cmd_gen(config, out_dir, out),
        Command::Fuse {
            matrices,
            queries,
            all_queries: _,
            config,
            out: out_path,
            overrides,
        } => cmd_fuse(
            matrices,
            queries.as_deref(),
            config.as_deref(),
            overrides,
            out_path,
            out,
        ),
        Command::Eval {
            results,
            truth,
            metric,
            out: report,
        } => {
            let default = PathBuf::from(format!("{}.{}.json", results.display(), metric.name()));
            cmd_eval(results, truth, *metric, report.as_deref().unwrap_or(&default), out)
        }
        Command::Cds {
            matrix,
            query,
            config,
            overrides,
        } => cmd_cds(matrix, *query, config.as_deref(), overrides, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            f.code
        }
    }
}
