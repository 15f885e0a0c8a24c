use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use ogp_core::design::linspace;
use ogp_core::estimate::{fit_fixed, fit_mle, Covariance, Dataset, FitResult};
use ogp_core::experiments::{
    effects_check, study_1d, study_borehole, study_multifidelity, synthetic_multifidelity, BoreholeConfig,
    EffectsCheckConfig, MultiFidelityConfig, Study1dConfig, SyntheticConfig, Tabular, SCHEMA_VERSION,
};
use ogp_core::spectra::{eigenfunction_table, nystrom_eigensystem};
use ogp_core::Family;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::io::{num, read_table, write_csv, write_json};
use crate::CliError;

const GRID_LIMIT: usize = 1_000_000;

#[derive(Debug, Parser)]
#[command(name = "ogp", version, about = "Orthogonal Gaussian process fitting and benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model to `x1..xd,y` data.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "fit.json")]
        out: PathBuf,
    },
    /// Predict at `x1..xd` points from a saved fit.
    Predict {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        points: PathBuf,
        #[arg(long, default_value = "predictions.csv")]
        out: PathBuf,
    },
    /// Leading eigenfunctions of the configured covariance on a grid.
    Eigen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 64)]
        order: usize,
        /// Grid points per dimension.
        #[arg(long, default_value_t = 101)]
        grid_points: usize,
        /// Eigenfunction CSV; eigenvalues go to `<stem>.eigenvalues.json` beside it.
        #[arg(long, default_value = "eigen.csv")]
        out: PathBuf,
    },
    /// Closed-form kernel effects against quadrature.
    EffectsCheck {
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run a study and write `<study>.json` and `<study>.csv`.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Study {
    Table1,
    Borehole,
    Multifidelity,
    EffectsCheck,
}

#[derive(Debug, Clone, clap::Args, Serialize)]
pub struct BenchArgs {
    #[arg(value_enum)]
    pub study: Study,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    #[serde(skip)]
    pub out_dir: PathBuf,
    /// Full-scale borehole study.
    #[arg(long)]
    pub full: bool,
    /// Borehole sample sizes (repeatable).
    #[arg(long)]
    pub n: Vec<usize>,
    /// Borehole replicates.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Multi-fidelity: orthogonalize by quadrature even for the affine surrogate.
    #[arg(long)]
    pub quadrature: bool,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit { data, config, out } => cmd_fit(&data, &config, &out),
        Command::Predict { fit, points, out } => cmd_predict(&fit, &points, &out),
        Command::Eigen {
            config,
            k,
            order,
            grid_points,
            out,
        } => cmd_eigen(&config, k, order, grid_points, &out),
        Command::EffectsCheck { out_dir } => {
            let report = effects_check(&EffectsCheckConfig::default());
            print_effects(&report);
            match out_dir {
                Some(dir) => {
                    let args = BenchArgs {
                        study: Study::EffectsCheck,
                        seed: 0,
                        out_dir: dir,
                        full: false,
                        n: vec![],
                        reps: None,
                        quadrature: false,
                    };
                    write_report(&args, &report)
                }
                None => Ok(()),
            }
        }
        Command::Bench(args) => cmd_bench(&args),
    }
}

fn read_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(RunConfig::parse(&text)?.resolved()?)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingData {
    /// Original coordinates.
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitFile {
    pub schema_version: u32,
    pub fingerprint: String,
    pub config: RunConfig,
    pub data: TrainingData,
    pub fit: FitResult,
}

fn canonical_rows(cfg: &RunConfig, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, CliError> {
    x.iter()
        .enumerate()
        .map(|(i, r)| {
            cfg.domain
                .to_canonical(r)
                .map_err(|e| CliError::Input(format!("row {}: {e}", i + 1)))
        })
        .collect()
}

fn cmd_fit(data: &Path, config: &Path, out: &Path) -> Result<(), CliError> {
    let cfg = read_config(config)?;
    let table = read_table(data, true, Some(cfg.dim()))?;
    let y = table.y.expect("training table has y");
    let design = canonical_rows(&cfg, &table.x)?;
    let dataset = Dataset::new(design, y.clone())?;
    let basis = cfg.basis()?;
    let ortho = &cfg.orthogonalization;
    let mut fit = match (&cfg.mle, cfg.bounds()?) {
        (Some(m), Some(bounds)) => fit_mle(
            &dataset,
            cfg.method,
            &basis,
            cfg.kernel.family,
            &bounds,
            &m.options(),
            ortho,
        )?,
        _ => fit_fixed(&dataset, cfg.method, &basis, &cfg.kernel()?, ortho)?,
    };
    fit.beta_hat_original = basis.coefficients_to_original(&cfg.domain, &fit.beta_hat);
    for w in &fit.diagnostics.warnings {
        log::warn!("{w}");
    }
    let file = FitFile {
        schema_version: SCHEMA_VERSION,
        fingerprint: cfg.fingerprint(),
        config: cfg,
        data: TrainingData { x: table.x, y },
        fit,
    };
    write_json(out, &file)?;
    println!(
        "{} beta_hat={:?} psi_hat={:?} sigma2_hat={} fingerprint={}",
        file.fit.method, file.fit.beta_hat, file.fit.psi_hat, file.fit.sigma2_hat, file.fingerprint
    );
    Ok(())
}

fn read_fit(path: &Path) -> Result<FitFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let file: FitFile =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(CliError::Input(format!(
            "{}: schema_version {} not supported (expected {SCHEMA_VERSION})",
            path.display(),
            file.schema_version
        )));
    }
    Ok(file)
}

fn cmd_predict(fit: &Path, points: &Path, out: &Path) -> Result<(), CliError> {
    let file = read_fit(fit)?;
    let cfg = &file.config;
    let d = cfg.dim();
    let table = read_table(points, false, Some(d))?;
    let basis = cfg.basis()?;
    let data = Dataset::new(canonical_rows(cfg, &file.data.x)?, file.data.y.clone())?;
    let predictor = file
        .fit
        .predictor(&data, &basis, cfg.kernel.family, &cfg.orthogonalization)?;
    let mut header: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    header.extend(["mean", "variance", "trend", "stochastic"].map(String::from));
    let canon = canonical_rows(cfg, &table.x)?;
    let mut rows = Vec::with_capacity(canon.len());
    for (x, u) in table.x.iter().zip(&canon) {
        let p = predictor.predict(u)?;
        let v = predictor.variance(u)?;
        let mut row: Vec<String> = x.iter().map(|v| num(*v)).collect();
        row.extend([num(p.mean), num(v), num(p.trend), num(p.stochastic)]);
        rows.push(row);
    }
    write_csv(out, &header, &rows)?;
    println!("{} predictions fingerprint={}", rows.len(), file.fingerprint);
    Ok(())
}

#[derive(Debug, Serialize)]
struct EigenSidecar<'a> {
    schema_version: u32,
    fingerprint: String,
    config: &'a RunConfig,
    quad_order: usize,
    /// Eigenfunctions have unit norm under the quadrature on the canonical cube.
    normalization: &'static str,
    eigenvalues: Vec<f64>,
}

fn cmd_eigen(config: &Path, k: usize, order: usize, grid_points: usize, out: &Path) -> Result<(), CliError> {
    let cfg = read_config(config)?;
    let d = cfg.dim();
    if grid_points < 2 {
        return Err(CliError::Input("grid needs at least 2 points per dimension".into()));
    }
    if (grid_points as f64).powi(d as i32) > GRID_LIMIT as f64 {
        return Err(CliError::Input(format!(
            "{grid_points}^{d} grid points exceed the limit of {GRID_LIMIT}"
        )));
    }
    let cov = Covariance::for_method(cfg.method, &cfg.kernel()?, &cfg.basis()?, &cfg.orthogonalization)?;
    let es = nystrom_eigensystem(cov.evaluator(), d, order, k)?;

    let axis = linspace(-1.0, 1.0, grid_points);
    let mut grid: Vec<Vec<f64>> = vec![vec![]];
    for _ in 0..d {
        grid = grid
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&a| {
                    let mut q = p.clone();
                    q.push(a);
                    q
                })
            })
            .collect();
    }
    let table = eigenfunction_table(&es, &grid);
    let mut header: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    header.extend((1..=k).map(|j| format!("f{j}")));
    let mut rows = Vec::with_capacity(grid.len());
    for (r, u) in grid.iter().enumerate() {
        let mut row: Vec<String> = cfg.domain.from_canonical(u)?.into_iter().map(num).collect();
        row.extend((0..k).map(|c| num(table[(r, c)])));
        rows.push(row);
    }
    write_csv(out, &header, &rows)?;
    let sidecar = out.with_extension("eigenvalues.json");
    write_json(
        &sidecar,
        &EigenSidecar {
            schema_version: SCHEMA_VERSION,
            fingerprint: cfg.fingerprint(),
            config: &cfg,
            quad_order: order,
            normalization: "unit quadrature norm on the canonical cube",
            eigenvalues: es.eigenvalues.clone(),
        },
    )?;
    println!("eigenvalues {:?}", es.eigenvalues);
    Ok(())
}

#[derive(Serialize)]
struct BenchOutput<'a, R: Serialize> {
    schema_version: u32,
    fingerprint: String,
    bench: &'a BenchArgs,
    report: &'a R,
}

fn bench_fingerprint(args: &BenchArgs, report: &impl Serialize) -> String {
    let text = serde_json::to_string(&(args, report_config(report))).expect("serializes");
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn report_config(report: &impl Serialize) -> serde_json::Value {
    serde_json::to_value(report).expect("serializes")["config"].clone()
}

fn study_name(s: Study) -> &'static str {
    match s {
        Study::Table1 => "table1",
        Study::Borehole => "borehole",
        Study::Multifidelity => "multifidelity",
        Study::EffectsCheck => "effects-check",
    }
}

fn write_report<R: Serialize + Tabular>(args: &BenchArgs, report: &R) -> Result<(), CliError> {
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Output(format!("{}: {e}", args.out_dir.display())))?;
    let fingerprint = bench_fingerprint(args, report);
    let name = study_name(args.study);
    write_json(
        &args.out_dir.join(format!("{name}.json")),
        &BenchOutput {
            schema_version: SCHEMA_VERSION,
            fingerprint: fingerprint.clone(),
            bench: args,
            report,
        },
    )?;
    let mut header = report.csv_header();
    header.push("fingerprint".into());
    let rows: Vec<Vec<String>> = report
        .csv_rows()
        .into_iter()
        .map(|mut r| {
            r.push(fingerprint.clone());
            r
        })
        .collect();
    write_csv(&args.out_dir.join(format!("{name}.csv")), &header, &rows)?;
    println!("wrote {name}.json and {name}.csv to {} fingerprint={fingerprint}", args.out_dir.display());
    Ok(())
}

fn print_effects(report: &ogp_core::experiments::EffectsCheckReport) {
    for f in Family::ALL {
        println!("{:<20} max relative error {:.3e}", f.name(), report.max_relative(f));
    }
    println!("{:<20} max |IL| {:.3e}", "all", report.max_il());
}

fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    match args.study {
        Study::Table1 => {
            let report = study_1d(&Study1dConfig::default())?;
            for r in &report.rows {
                println!(
                    "{:<3} {:<20} scheme1 rmspe={:.4e} beta={:?}  scheme2 rmspe={:.4e} beta={:?}",
                    r.method.name(),
                    r.family.name(),
                    r.scheme1.rmspe,
                    r.scheme1.beta_hat,
                    r.scheme2.rmspe,
                    r.scheme2.beta_hat
                );
            }
            write_report(args, &report)
        }
        Study::Borehole => {
            let mut cfg = if args.full {
                BoreholeConfig::full()
            } else {
                BoreholeConfig::desk()
            };
            cfg.seed = args.seed;
            if !args.n.is_empty() {
                cfg.sizes = args.n.clone();
            }
            if let Some(r) = args.reps {
                cfg.replicates = r;
            }
            if cfg.replicates < 2 {
                return Err(CliError::Input("borehole study needs at least 2 replicates".into()));
            }
            let report = study_borehole(&cfg)?;
            for s in &report.summary {
                println!(
                    "n={:<4} {:<3} runs={} excluded={} beta2 mean={:.4} std={:.4} rmspe mean={:.4}",
                    s.n,
                    s.method.name(),
                    s.runs,
                    s.excluded,
                    s.beta[1].mean,
                    s.beta[1].std,
                    s.rmspe.mean
                );
            }
            write_report(args, &report)
        }
        Study::Multifidelity => {
            let data = synthetic_multifidelity(&SyntheticConfig {
                seed: args.seed,
                ..Default::default()
            })?;
            let cfg = MultiFidelityConfig {
                force_quadrature: args.quadrature,
                ..Default::default()
            };
            let report = study_multifidelity(&data.x, &data.y, &data.domain, &data.surrogate, &cfg)?;
            for r in &report.rows {
                println!("{:<3} beta={:?}", r.method.name(), r.beta_hat);
            }
            write_report(args, &report)
        }
        Study::EffectsCheck => {
            let report = effects_check(&EffectsCheckConfig::default());
            print_effects(&report);
            write_report(args, &report)
        }
    }
}
