use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crumb_slice::harness::{
    emit_plot_script, format_float, read_csv, read_spec, run_cell, run_experiment, summarize,
    write_csv, Cell, ExperimentSpec, ResultRow,
};
use crumb_slice::samplers::{run_chain, Method};
use crumb_slice::targets::Target;
use crumb_slice::Error;

#[derive(Parser)]
#[command(
    name = "crumb-slice",
    version,
    about = "Adaptive Gaussian-crumb slice samplers and their benchmark harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single chain and write its result row.
    Run {
        /// n4-pos, n4-neg, eight-schools or mixture10.
        #[arg(long)]
        target: String,
        /// covariance-matching, shrinking-rank, nonadaptive-crumb or metropolis-trials.
        #[arg(long)]
        method: String,
        #[arg(long = "sigma-c", allow_hyphen_values = true)]
        sigma_c: f64,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        #[arg(long, default_value_t = 0.9)]
        shrink: f64,
        #[arg(long = "approx-u")]
        approx_u: bool,
        #[arg(long, default_value_t = 150_000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Starting point as comma-separated floats.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the sample matrix here.
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// Run an experiment grid described by a key = value spec file.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
    },
    /// Turn a results CSV into a plot script.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        plot: PathBuf,
    },
}

fn main() -> ExitCode {
    // Usage errors are configuration errors; exit code 2 is kept for failed chains.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(rows) if rows.iter().any(|r| r.error_flag) => {
            eprintln!(
                "{} of {} chains failed",
                rows.iter().filter(|r| r.error_flag).count(),
                rows.len()
            );
            ExitCode::from(2)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<Vec<ResultRow>, Error> {
    match command {
        Command::Run {
            target,
            method,
            sigma_c,
            theta,
            shrink,
            approx_u,
            n,
            seed,
            x0,
            out,
            samples,
        } => {
            let method: Method = method.parse()?;
            let spec = ExperimentSpec {
                targets: vec![target.clone()],
                methods: vec![method],
                tunings: vec![sigma_c],
                chain_length: n,
                master_seed: seed,
                theta,
                shrink_factor: shrink,
                approximate_u: approx_u,
                parallelism: 1,
                ..ExperimentSpec::default()
            };
            spec.validate()?;
            let cell = Cell {
                index: 0,
                target,
                method,
                tuning: sigma_c,
                replicate: 0,
                seed,
            };
            let row = match (x0, &samples) {
                (None, None) => run_cell(&spec, &cell),
                (x0, _) => run_single_with_samples(&spec, &cell, x0, samples.as_deref())?,
            };
            write_csv(std::slice::from_ref(&row), &out)?;
            print_rows(std::slice::from_ref(&row));
            Ok(vec![row])
        }
        Command::Sweep { spec, out_dir } => {
            let spec = read_spec(&spec)?;
            std::fs::create_dir_all(&out_dir)?;
            let rows = run_experiment(&spec)?;
            write_csv(&rows, out_dir.join("results.csv"))?;
            emit_plot_script(&rows, out_dir.join("plot.py"))?;
            print_rows(&rows);
            Ok(rows)
        }
        Command::Report { input, plot } => {
            let rows = read_csv(std::fs::File::open(&input)?)?;
            emit_plot_script(&rows, &plot)?;
            print_rows(&rows);
            Ok(rows)
        }
    }
}

/// Single chain with an explicit start point and/or a sample dump.
fn run_single_with_samples(
    spec: &ExperimentSpec,
    cell: &Cell,
    x0: Option<Vec<f64>>,
    samples_path: Option<&std::path::Path>,
) -> Result<ResultRow, Error> {
    let mut config = spec.sampler_config(cell.method, cell.tuning);
    config.x0 = x0;
    let mut target = Target::by_name(&cell.target)?;
    let chain = run_chain(&config, &mut target, spec.chain_length, cell.seed)?;
    if let Some(path) = samples_path {
        let mut w = csv::Writer::from_path(path)?;
        for row in chain.samples.rows() {
            w.write_record(row.iter().map(|v| format!("{v:?}")))?;
        }
        w.flush()?;
    }
    Ok(summarize(cell, &chain, spec.record_timing))
}

fn print_rows(rows: &[ResultRow]) {
    let opt = |v: Option<f64>| v.map(format_float).unwrap_or_else(|| "-".into());
    println!(
        "{:<14} {:<20} {:>10} {:>10} {:>12} {:>14}  flag",
        "target", "method", "tuning", "tau", "ess", "evals/indep"
    );
    for r in rows {
        let flag = if r.error_flag {
            "error"
        } else if r.reliable == Some(false) {
            "?"
        } else {
            ""
        };
        println!(
            "{:<14} {:<20} {:>10} {:>10} {:>12} {:>14}  {flag}",
            r.target,
            r.method,
            format_float(r.tuning),
            opt(r.tau),
            opt(r.ess),
            opt(r.evals_per_indep),
        );
    }
}
