mod config;
mod experiments;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use affine_atlas::atlas::catalog_entries;
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{load_manifold, ConnectionChoice, ExperimentKind, ExperimentManifest, MetricChoice};
use report::Report;

#[derive(Parser)]
#[command(
    name = "affine-atlas",
    version,
    about = "Numerical experiments on affine manifolds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the built-in manifold catalog.
    List {
        /// Keep rows whose key contains this text.
        #[arg(long, default_value = "")]
        filter: String,
        /// Values of n for the hopf_manifold(n) rows.
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3])]
        hopf_dims: Vec<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Run one experiment and write its JSON report.
    Run(Box<RunArgs>),
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct RunArgs {
    /// Experiment kind; may come from the config file instead.
    experiment: Option<ExperimentKind>,
    /// JSON experiment manifest; command-line flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Catalog key or path to a JSON manifold manifest.
    #[arg(long)]
    manifold: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional CSV side output.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Ambient dimension for parametrized catalog entries.
    #[arg(long)]
    dimension: Option<usize>,
    #[arg(long)]
    deck_scalar: Option<f64>,
    /// Quadrature cells per axis, applied to every cover piece.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    /// Tolerance of the experiment's assertions.
    #[arg(long)]
    tol: Option<f64>,
    /// Relative tolerance of the ODE integrators.
    #[arg(long)]
    ode_tol: Option<f64>,
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    t_grid: Option<Vec<f64>>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Expected value asserted by the experiment.
    #[arg(long)]
    expect: Option<f64>,
    #[arg(long)]
    metric: Option<MetricChoice>,
    #[arg(long)]
    connection: Option<ConnectionChoice>,
    #[arg(long)]
    loops: Option<usize>,
    #[arg(long)]
    loop_size: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    base: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    start: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    velocity: Option<Vec<f64>>,
    /// Colatitude of the latitude loop on a sphere.
    #[arg(long)]
    theta: Option<f64>,
    /// Sample count (Euler CSV) or trajectory stride (geodesic CSV).
    #[arg(long)]
    samples: Option<usize>,
}

impl RunArgs {
    fn manifest(self) -> Result<ExperimentManifest> {
        let base = match &self.config {
            Some(path) => ExperimentManifest::from_file(path)?,
            None => ExperimentManifest::default(),
        };
        Ok(base.overlay(ExperimentManifest {
            experiment: self.experiment,
            manifold: self.manifold,
            dimension: self.dimension,
            deck_scalar: self.deck_scalar,
            grid: self.grid,
            tol: self.tol,
            ode_tol: self.ode_tol,
            t_grid: self.t_grid,
            t: self.t,
            seed: self.seed,
            horizon: self.horizon,
            expect: self.expect,
            metric: self.metric,
            connection: self.connection,
            loops: self.loops,
            loop_size: self.loop_size,
            base: self.base,
            start: self.start,
            velocity: self.velocity,
            theta: self.theta,
            samples: self.samples,
            csv: self.csv,
            out: self.out,
        }))
    }
}

fn list(filter: &str, hopf_dims: &[usize], as_json: bool) -> Result<()> {
    let rows: Vec<_> = catalog_entries(hopf_dims)
        .into_iter()
        .filter(|e| e.key.contains(filter))
        .collect();
    if as_json {
        println!("{}", serde_json::to_string_pretty(&rows)?);
        return Ok(());
    }
    let yes_no = |b: bool| if b { "yes" } else { "no" };
    let width = rows.iter().map(|e| e.key.len()).max().unwrap_or(0).max(3);
    println!("{:width$}  dim  affine  metric  note", "key");
    for e in &rows {
        println!(
            "{:width$}  {:>3}  {:6}  {:6}  {}",
            e.key,
            e.dimension,
            yes_no(e.affine),
            yes_no(e.metric),
            e.note
        );
    }
    Ok(())
}

/// Returns whether every assertion passed.
fn run(args: RunArgs) -> Result<bool> {
    let manifest = args.manifest()?;
    manifest.validate()?;
    let kind = manifest.experiment.expect("validated");
    let key = manifest.manifold.as_deref().expect("validated");
    let out = manifest.out.as_deref().expect("validated");
    for path in [Some(out), manifest.csv.as_deref()].into_iter().flatten() {
        let dir = path
            .parent()
            .filter(|d| !d.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        if !dir.is_dir() {
            bail!("output directory {} does not exist", dir.display());
        }
    }
    let m = load_manifold(key, &manifest).with_context(|| format!("loading manifold {key}"))?;
    let mut outcome = experiments::run(kind, &m, &manifest)?;
    if let Some(obj) = outcome.config.as_object_mut() {
        obj.insert("manifold_source".into(), json!(key));
        obj.insert("dimension".into(), json!(m.dim()));
        if let Some(deck) = &m.deck {
            obj.insert("deck_scalar".into(), json!(deck.scalar()));
        }
        obj.insert("csv".into(), json!(manifest.csv));
        obj.insert("out".into(), json!(out));
    }
    Report::new(kind, &m.name, &outcome).write(out)?;
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::List {
            filter,
            hopf_dims,
            json,
        } => list(&filter, &hopf_dims, json).map(|_| true),
        Command::Run(args) => run(*args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
