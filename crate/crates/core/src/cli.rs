//! Command-line front end. See `polyntk --help`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 bad arguments or config, 3 numerical failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::error::{Error, Result};
use crate::experiments::{self, Artifact, RunConfig, Target};
use crate::kernels::{Family, KernelModel, McConfig};
use crate::regression::{assemble_gram, fit, Dataset, RegressionModel};
use crate::util::parse_vector;

/// Environment variable consulted for the worker count when `--threads` is absent.
pub const THREADS_ENV: &str = "POLYNTK_THREADS";

#[derive(Debug, Parser)]
#[command(name = "polyntk", version, about = "Neural tangent kernels of polynomial networks")]
struct Cli {
    /// Master seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (overrides POLYNTK_THREADS and the config file).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory for CSV/JSON files.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// TOML config file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct KernelArgs {
    /// pnn, mlp, mfn or polynl.
    #[arg(long)]
    family: Family,
    /// Degree (PNN, MFN) or depth (MLP).
    #[arg(long, default_value_t = 2)]
    degree: usize,
    /// Monte-Carlo samples (Poly-NL only).
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// First-layer width (Poly-NL only).
    #[arg(long, default_value_t = 64)]
    width: usize,
}

impl KernelArgs {
    fn model(&self, dim: usize, seed: u64) -> Result<KernelModel> {
        match self.family {
            Family::PolyNl => KernelModel::poly_nl(
                dim,
                McConfig {
                    width: self.width,
                    block_seed: seed,
                    samples: self.samples,
                    seed: seed.wrapping_add(1),
                },
            ),
            f => KernelModel::new(f, self.degree, dim),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate K(x, x').
    Kernel {
        #[command(flatten)]
        kernel: KernelArgs,
        /// Comma-separated vector, e.g. "1,0".
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, allow_hyphen_values = true)]
        xp: String,
    },
    /// Gram matrix of a dataset's inputs (CSV to stdout, or gram.csv under --out).
    Gram {
        #[command(flatten)]
        kernel: KernelArgs,
        /// CSV with header x1,...,xd,y.
        #[arg(long)]
        data: PathBuf,
    },
    /// Fit min-norm kernel regression and save the model as JSON.
    Fit {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        jitter: f64,
        /// Model file (default: <out>/model.json).
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Predict with a saved model at one point or at every row of a CSV.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, allow_hyphen_values = true, conflicts_with = "data")]
        x: Option<String>,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Empirical NTK at initialization versus the closed form over a width sweep.
    ConvergeInit {
        #[arg(long, value_delimiter = ',')]
        widths: Option<Vec<usize>>,
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Gradient-descent traces and NTK stability report.
    Stability {
        #[arg(long)]
        width: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        sweep_widths: Option<Vec<usize>>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Kernel-regression extrapolation along a ray (PNN versus MLP).
    Extrapolate {
        /// poly3, cos2x or quad2d.
        #[arg(long)]
        target: Option<Target>,
        #[arg(long)]
        degree: Option<usize>,
    },
    /// Quadratic-target extrapolation from axis-containing training sets.
    ExactExtrapolate {
        #[arg(long)]
        directions: Option<usize>,
    },
    /// Mercer eigenvalues and decay slopes.
    Spectrum {
        #[arg(long)]
        kmax: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
    },
    /// SGD on a spherical-harmonic mixture with residual projections.
    SpectralBias {
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        orders: Option<Vec<usize>>,
        #[arg(long)]
        seeds: Option<usize>,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } | Error::Csv(_) | Error::Json(_) => 1,
        e if e.is_numerical() => 3,
        _ => 2,
    }
}

/// Runs the command line `argv` (including the program name) and returns the exit code.
pub fn cli_main<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn resolve_threads(flag: Option<usize>, file: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n = v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("{THREADS_ENV}={v:?} is not a thread count")))?;
        return Ok(Some(n));
    }
    Ok(file)
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let explicit_out = cli.out.is_some();
    let out_dir = cli
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("polyntk-out"));
    let threads = resolve_threads(cli.threads, cfg.threads)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("thread count must be >= 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
    pool.install(|| dispatch(cli.command, cfg, &out_dir, explicit_out))
}

fn print_line(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
}

fn finish<C: serde::Serialize>(
    out_dir: &Path,
    experiment: &str,
    artifacts: &[Artifact],
    config: &C,
    seed: u64,
    summary: serde_json::Value,
    started: Instant,
) -> Result<()> {
    let paths = experiments::write_outputs(out_dir, experiment, artifacts, config, seed, summary, started.elapsed())?;
    for p in paths {
        print_line(&p.display().to_string())?;
    }
    Ok(())
}

fn dispatch(command: Command, mut cfg: RunConfig, out_dir: &Path, explicit_out: bool) -> Result<()> {
    let seed = cfg.seed;
    let started = Instant::now();
    match command {
        Command::Kernel { kernel, x, xp } => {
            let x = parse_vector(&x)?;
            let xp = parse_vector(&xp)?;
            let k = kernel.model(x.len(), seed)?;
            print_line(&k.eval(&x, &xp)?.to_string())
        }
        Command::Gram { kernel, data } => {
            let ds = Dataset::read_csv(&data)?;
            let k = kernel.model(ds.dim(), seed)?;
            let g = assemble_gram(&k, &ds.x)?;
            let n = g.dim();
            let header: Vec<String> = (0..n).map(|j| format!("k{j}")).collect();
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let csv = experiments::csv_string(
                &header,
                (0..n).map(|i| (0..n).map(|j| g.entries[(i, j)].to_string()).collect::<Vec<_>>()),
            );
            if !explicit_out {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(csv.as_bytes()).map_err(|e| Error::io("<stdout>", e))
            } else {
                let summary = json!({ "family": kernel.family, "degree": kernel.degree, "n": n });
                finish(
                    out_dir,
                    "gram",
                    &[Artifact::new("gram.csv", csv)],
                    &summary,
                    seed,
                    summary.clone(),
                    started,
                )
            }
        }
        Command::Fit {
            kernel,
            data,
            jitter,
            model,
        } => {
            let ds = Dataset::read_csv(&data)?;
            let k = kernel.model(ds.dim(), seed)?;
            let m = fit(&k, &ds, jitter)?;
            let path = model.unwrap_or_else(|| out_dir.join("model.json"));
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            let text = serde_json::to_string_pretty(&m)?;
            std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
            print_line(&format!("{} (jitter {})", path.display(), m.jitter))
        }
        Command::Predict { model, x, data } => {
            let text = std::fs::read_to_string(&model).map_err(|e| Error::io(&model, e))?;
            let m: RegressionModel = serde_json::from_str(&text)?;
            match (x, data) {
                (Some(x), None) => print_line(&m.predict(&parse_vector(&x)?)?.to_string()),
                (None, Some(d)) => {
                    let ds = Dataset::read_csv(&d)?;
                    let preds = ds.x.iter().map(|xi| m.predict(xi)).collect::<Result<Vec<_>>>()?;
                    let csv = experiments::csv_string(
                        &["index", "prediction"],
                        preds
                            .iter()
                            .enumerate()
                            .map(|(i, p)| vec![i.to_string(), p.to_string()]),
                    );
                    let mut stdout = std::io::stdout().lock();
                    stdout.write_all(csv.as_bytes()).map_err(|e| Error::io("<stdout>", e))
                }
                _ => Err(Error::Argument("predict needs exactly one of --x or --data".into())),
            }
        }
        Command::ConvergeInit { widths, seeds } => {
            let c = &mut cfg.converge_init;
            if let Some(w) = widths {
                c.widths = w;
            }
            if let Some(s) = seeds {
                c.seeds = s;
            }
            let r = experiments::run_converge_init(c, seed)?;
            let summary = json!({
                "reduction_factors": r.reduction_factors(),
                "all_below_bound": r.all_below_bound(),
            });
            finish(out_dir, "converge_init", &r.artifacts, c, seed, summary, started)
        }
        Command::Stability {
            width,
            sweep_widths,
            steps,
            seeds,
        } => {
            let c = &mut cfg.stability;
            if let Some(w) = width {
                c.width = w;
            }
            if let Some(w) = sweep_widths {
                c.sweep_widths = w;
            }
            if let Some(s) = steps {
                c.steps = s;
            }
            if let Some(s) = seeds {
                c.seeds = s;
            }
            let r = experiments::run_stability(c, seed)?;
            let drifts: Vec<_> = c
                .sweep_widths
                .iter()
                .map(|w| json!({ "width": w, "median_sup_ntk_drift": r.median_sup_drift(*w) }))
                .collect();
            let summary = json!({
                "eta0": r.eta0,
                "envelope_holds": r.envelope_holds_at(c.width),
                "drift": drifts,
            });
            finish(out_dir, "stability", &r.artifacts, c, seed, summary, started)
        }
        Command::Extrapolate { target, degree } => {
            let c = &mut cfg.extrapolation;
            if let Some(t) = target {
                c.target = t;
            }
            if let Some(d) = degree {
                c.degree = d;
            }
            let r = experiments::run_extrapolation(c, seed)?;
            let summary = json!({
                "pnn_degree": r.pnn_fit.best_degree,
                "mlp_degree": r.mlp_fit.best_degree,
                "pnn_r_squared": r.pnn_fit.r_squared,
                "mlp_max_second_diff": r.mlp_max_second_diff,
                "mlp_scale": r.mlp_scale,
                "jitter": [r.pnn_jitter, r.mlp_jitter],
            });
            finish(out_dir, "extrapolation", &r.artifacts, c, seed, summary, started)
        }
        Command::ExactExtrapolate { directions } => {
            let c = &mut cfg.exact_extrapolation;
            if let Some(d) = directions {
                c.directions = d;
            }
            let r = experiments::run_exact_extrapolation(c, seed)?;
            let summary = json!({
                "median_rel_err": r.median_rel_err,
                "ablation_median_rel_err": r.ablation_median_rel_err,
            });
            finish(out_dir, "exact_extrapolation", &r.artifacts, c, seed, summary, started)
        }
        Command::Spectrum { kmax, dims } => {
            let c = &mut cfg.spectrum;
            if let Some(k) = kmax {
                c.kmax = k;
                c.fit_hi = c.fit_hi.min(k);
                c.fit_lo = c.fit_lo.min(c.fit_hi);
            }
            if let Some(d) = dims {
                c.ambient_dims = d;
            }
            let r = experiments::run_spectrum(c)?;
            let slopes: Vec<_> = r
                .entries
                .iter()
                .map(|e| json!({ "family": e.family, "n": e.n, "ambient_dim": e.ambient_dim, "slope": e.estimate.fitted_slope }))
                .collect();
            let summary = json!({
                "slopes": slopes,
                "nodes": c.nodes(),
                "fit_range": [c.fit_lo, c.fit_hi],
                "even_only": c.even_only,
            });
            finish(out_dir, "spectrum", &r.artifacts, c, seed, summary, started)
        }
        Command::SpectralBias {
            iterations,
            width,
            orders,
            seeds,
        } => {
            let c = &mut cfg.spectral_bias;
            if let Some(i) = iterations {
                c.iterations = i;
            }
            if let Some(w) = width {
                c.width = w;
            }
            if let Some(o) = orders {
                c.orders = o;
            }
            if let Some(s) = seeds {
                c.seeds = s;
            }
            let r = experiments::run_spectral_bias(c, seed)?;
            let per_order: Vec<_> = c
                .orders
                .iter()
                .map(|n| {
                    json!({
                        "order": n,
                        "mean_decay_ratios": r.mean_decay_ratios(*n),
                        "mean_normalized_areas": r.mean_normalized_areas(*n),
                    })
                })
                .collect();
            let summary = json!({ "harmonics": c.harmonics, "orders": per_order });
            finish(out_dir, "spectral_bias", &r.artifacts, c, seed, summary, started)
        }
    }
}
