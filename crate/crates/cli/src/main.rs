//! `nlbal`: compute, store and evaluate polynomial energy functions.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nlbal_core::models::{build_burgers, build_example1, build_example2, build_ks, Example1Params};
use nlbal_core::report::{energy_grid, run_table_with, sci, write_table_csv, GridModel, GridRange, DEFAULT_MAX_N};
use nlbal_core::{
    approx_energy, feedback_control, hjb_residual, load_coefficients, poly_eval, save_coefficients, DMatrix, EnergyKind,
    FemModelConfig, PolySystem, TableName,
};

#[derive(Parser)]
#[command(name = "nlbal", version, about = "Polynomial H-infinity energy functions for quadratic-bilinear systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute energy coefficients and print the energy at the model's initial state.
    Energy {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0.5)]
        eta: f64,
        #[arg(long, default_value_t = 3)]
        degree: usize,
        #[arg(long, value_enum, default_value_t = KindArg::Both)]
        kind: KindArg,
        /// Coefficient file; with `--kind both` the kind is inserted before the extension.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a stored energy function.
    Eval {
        coeffs: PathBuf,
        /// Comma-separated state, e.g. `0.1,-0.2`.
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// HJB residual of a stored energy function for a model.
    Residual {
        coeffs: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// State feedback `u = -B^T grad E(x)` from a stored future energy.
    Control {
        coeffs: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// Run a benchmark sweep and write it as CSV.
    Table {
        #[arg(value_parser = parse_table)]
        name: TableName,
        /// Largest state dimension in the degree-3 sweeps.
        #[arg(long, default_value_t = DEFAULT_MAX_N)]
        max_n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate past and future energies of the planar examples on a grid.
    Grid {
        #[arg(long, value_enum)]
        model: GridModelArg,
        #[arg(long, default_value_t = 0.5)]
        eta: f64,
        #[arg(long, default_value_t = 6)]
        degree: usize,
        /// `lo:hi`, applied to every coordinate.
        #[arg(long, allow_hyphen_values = true, default_value = "-1:1")]
        range: String,
        #[arg(long, default_value_t = 51)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_enum)]
    model: ModelName,
    /// State dimension of the finite-element models.
    #[arg(long)]
    n: Option<usize>,
    /// Scalar example coefficients.
    #[arg(long, allow_hyphen_values = true, default_value_t = -2.0)]
    a: f64,
    #[arg(long = "nc", allow_hyphen_values = true, default_value_t = 1.0)]
    n_coef: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 2.0)]
    b: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 2.0)]
    c: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelName {
    Example1,
    Example2,
    Burgers,
    Ks,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum KindArg {
    Past,
    Future,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridModelArg {
    Example1,
    Example2,
}

fn parse_table(s: &str) -> Result<TableName, String> {
    s.parse().map_err(|e: nlbal_core::Error| e.to_string())
}

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

/// A system and the state its energy is reported at.
fn build_model(args: &ModelArgs) -> CliResult<(PolySystem, Vec<f64>)> {
    Ok(match args.model {
        ModelName::Example1 => (build_example1(args.a, args.n_coef, args.b, args.c)?, vec![1.0]),
        ModelName::Example2 => (build_example2()?, vec![0.5, 0.5]),
        ModelName::Burgers => {
            let m = build_burgers(&FemModelConfig::burgers(args.n.unwrap_or(8)))?;
            (m.system, m.x0)
        }
        ModelName::Ks => {
            let m = build_ks(&FemModelConfig::ks(args.n.unwrap_or(16)))?;
            (m.system, m.x0)
        }
    })
}

fn parse_state(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad state component '{t}'").into()))
        .collect()
}

fn with_kind(path: &Path, kind: EnergyKind) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{kind}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{kind}"),
    };
    path.with_file_name(name)
}

fn output(out: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.cmd {
        Command::Energy { model, eta, degree, kind, out } => {
            let (sys, x0) = build_model(&model)?;
            let kinds = match kind {
                KindArg::Past => vec![EnergyKind::Past],
                KindArg::Future => vec![EnergyKind::Future],
                KindArg::Both => vec![EnergyKind::Past, EnergyKind::Future],
            };
            for k in kinds {
                let start = Instant::now();
                let ec = approx_energy(&sys, eta, degree, k)?;
                let secs = start.elapsed().as_secs_f64();
                println!("{k} energy {} ({secs:.3} s)", sci(poly_eval(&ec, &x0)?));
                if let Some(path) = &out {
                    let path = if kind == KindArg::Both { with_kind(path, k) } else { path.clone() };
                    save_coefficients(&path, &ec)?;
                }
            }
        }
        Command::Eval { coeffs, x } => {
            let ec = load_coefficients(&coeffs)?;
            println!("{}", sci(poly_eval(&ec, &parse_state(&x)?)?));
        }
        Command::Residual { coeffs, model, x } => {
            let ec = load_coefficients(&coeffs)?;
            let (sys, _) = build_model(&model)?;
            println!("{}", sci(hjb_residual(&sys, &ec, &parse_state(&x)?)?));
        }
        Command::Control { coeffs, model, x } => {
            let ec = load_coefficients(&coeffs)?;
            let (sys, _) = build_model(&model)?;
            let r = DMatrix::identity(sys.m(), sys.m());
            let u = feedback_control(&sys, &ec, &parse_state(&x)?, &r)?;
            println!("{}", u.iter().map(|v| sci(*v)).collect::<Vec<_>>().join(","));
        }
        Command::Table { name, max_n, out } => {
            let rows = run_table_with(name, max_n, |r| {
                if let Some(e) = &r.error {
                    eprintln!("{name}: n = {}, d = {}: {e}", r.n, r.d);
                }
            });
            write_table_csv(output(&out)?, name, &rows)?;
        }
        Command::Grid { model, eta, degree, range, steps, out } => {
            let model = match model {
                GridModelArg::Example1 => GridModel::Example1,
                GridModelArg::Example2 => GridModel::Example2,
            };
            let range = GridRange::parse(&range, steps)?;
            let grid = energy_grid(model, &Example1Params::default(), eta, degree, &range)?;
            grid.write_csv(output(&out)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
