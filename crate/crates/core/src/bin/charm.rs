//! Command-line driver: scenario generation, sweep execution, reporting.

use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};

use charm_core::config::{ResolvedConfig, RunConfig};
use charm_core::files;
use charm_core::harness::{aggregate, generate_location, run_sweep_on, Method, SweepAxis};
use charm_core::presets::preset;
use charm_core::{CharmError, Result, Scenario, TrialRecord};

/// Radio-map-aided channel estimation benchmark.
#[derive(Parser)]
#[command(name = "charm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate scenario files (one per receiver location) plus a manifest.
    Gen(GenArgs),
    /// Run an experiment sweep and write a results CSV.
    Run(RunArgs),
    /// Summarize a results CSV into tables and plot-data files.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Output directory for scenario files (default: $CHARM_OUT_DIR/scenarios).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config file (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of locations override.
    #[arg(long)]
    locations: Option<usize>,
    /// Snap all path parameters to the dictionary grids.
    #[arg(long)]
    on_grid: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Config file (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named experiment preset overriding the sweep and method roster.
    #[arg(long)]
    preset: Option<String>,
    /// Results CSV path (default: $CHARM_OUT_DIR/results.csv or config value).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Load scenarios from this directory instead of generating them.
    #[arg(long)]
    scenarios: Option<PathBuf>,
    /// Comma-separated method list override.
    #[arg(long)]
    methods: Option<String>,
    /// Snap all path parameters to the dictionary grids.
    #[arg(long)]
    on_grid: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Results CSV produced by `charm run`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Emit the plot-data file for one figure (fig2|fig3|fig4|fig5).
    #[arg(long)]
    figure: Option<String>,
    /// Print the summary table (NMSE, runtime, speedup vs omp3d).
    #[arg(long)]
    table: bool,
    /// Directory for plot-data files (default: $CHARM_OUT_DIR).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn out_root() -> PathBuf {
    std::env::var_os("CHARM_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("charm-out"))
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn cmd_gen(args: &GenArgs) -> Result<()> {
    let mut rc = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        rc.scenario.master_seed = seed;
    }
    if let Some(n) = args.locations {
        rc.scenario.n_locations = n;
    }
    if args.on_grid {
        rc.scenario.on_grid = true;
    }
    let resolved = rc.resolve()?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| out_root().join("scenarios"));

    let scenarios: Vec<Scenario> = (0..resolved.ctx.scfg.n_locations)
        .map(|loc| generate_location(&resolved.ctx.cfg, &resolved.ctx.scfg, loc))
        .collect();
    let names = files::write_scenarios(&out, resolved.ctx.scfg.master_seed, &scenarios)?;

    println!(
        "wrote {} scenario files + manifest to {} (seed {})",
        names.len(),
        out.display(),
        resolved.ctx.scfg.master_seed
    );
    for s in &scenarios {
        println!("  location {:3}: {} paths", s.location, s.ground_truth.len());
    }
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let mut rc = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        rc.scenario.master_seed = seed;
    }
    if args.on_grid {
        rc.scenario.on_grid = true;
    }
    let mut resolved: ResolvedConfig = rc.resolve()?;

    if let Some(name) = &args.preset {
        let (sweep, methods) = preset(name)?;
        resolved.sweep = sweep;
        resolved.methods = methods;
        resolved.sweep.validate(&resolved.ctx.cfg)?;
    }
    if let Some(list) = &args.methods {
        resolved.methods = list
            .split(',')
            .map(|m| Method::parse(m.trim()))
            .collect::<Result<_>>()?;
    }
    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| CharmError::Config(format!("worker pool: {e}")))?;
    }

    let scenarios: Vec<Scenario> = match &args.scenarios {
        Some(dir) => {
            let loaded = files::load_scenarios(dir)?;
            println!("loaded {} scenarios from {}", loaded.len(), dir.display());
            loaded
        }
        None => (0..resolved.ctx.scfg.n_locations)
            .map(|loc| generate_location(&resolved.ctx.cfg, &resolved.ctx.scfg, loc))
            .collect(),
    };

    let records = run_sweep_on(&resolved.ctx, &resolved.sweep, &resolved.methods, &scenarios)?;

    let out = args.out.clone().unwrap_or_else(|| {
        if resolved.results_path == "results.csv" {
            out_root().join("results.csv")
        } else {
            PathBuf::from(&resolved.results_path)
        }
    });
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    files::write_records(&out, &records)?;
    println!("{} records -> {}", records.len(), out.display());

    print_summary(&records, resolved.sweep.axis);
    Ok(())
}

fn print_summary(records: &[TrialRecord], axis: SweepAxis) {
    let summaries = aggregate(records, axis);
    let axis_name = match axis {
        SweepAxis::T => "T",
        SweepAxis::Snr => "snr_db",
        SweepAxis::Bias => "bias_std",
    };
    println!(
        "\n{:>8}  {:>14}  {:>10}  {:>10}  {:>12}  {:>6}",
        axis_name, "method", "nmse_db", "mean_db", "runtime_ms", "failed"
    );
    for s in &summaries {
        println!(
            "{:>8.3}  {:>14}  {:>10.2}  {:>10.2}  {:>12.2}  {:>6}",
            s.value, s.method, s.mean_nmse_db, s.mean_of_db, s.median_runtime_ms, s.n_failed
        );
    }
    println!("(nmse_db = dB of mean linear NMSE; mean_db = mean of per-trial dB; runtime is the median)");
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let records = files::load_records(&args.input)?;
    if records.is_empty() {
        return Err(CharmError::Config(format!(
            "no records in {}",
            args.input.display()
        )));
    }
    let out_dir = args.out_dir.clone().unwrap_or_else(out_root);

    if args.table {
        print_table(&records);
    }
    if let Some(fig) = &args.figure {
        let (axis, y_runtime, log_scale) = match fig.as_str() {
            "fig2" => (SweepAxis::T, false, false),
            "fig3" => (SweepAxis::Snr, false, false),
            "fig4" => (SweepAxis::Bias, false, false),
            "fig5" => (SweepAxis::T, true, true),
            other => {
                return Err(CharmError::Config(format!(
                    "unknown figure '{other}'; valid figures: fig2, fig3, fig4, fig5"
                )))
            }
        };
        std::fs::create_dir_all(&out_dir)?;
        let path = out_dir.join(format!("{fig}.dat"));
        write_plot_data(&path, &records, axis, y_runtime, log_scale)?;
        println!("wrote {}", path.display());
        let stub = out_dir.join("plot_stub.py");
        if !stub.exists() {
            std::fs::write(&stub, PLOT_STUB)?;
            println!("wrote {}", stub.display());
        }
    }
    if !args.table && args.figure.is_none() {
        print_table(&records);
    }
    Ok(())
}

fn print_table(records: &[TrialRecord]) {
    // single-condition comparison table with speedup relative to omp3d
    let summaries = aggregate(records, SweepAxis::T);
    let omp_rt = summaries
        .iter()
        .find(|s| s.method == "omp3d")
        .map(|s| s.median_runtime_ms);
    println!(
        "{:>14}  {:>6}  {:>10}  {:>12}  {:>8}",
        "method", "T", "nmse_db", "runtime_ms", "speedup"
    );
    for s in &summaries {
        let speedup = match omp_rt {
            Some(base) if s.median_runtime_ms > 0.0 => {
                format!("{:.1}x", base / s.median_runtime_ms)
            }
            _ => "-".into(),
        };
        println!(
            "{:>14}  {:>6}  {:>10.2}  {:>12.2}  {:>8}",
            s.method, s.value, s.mean_nmse_db, s.median_runtime_ms, speedup
        );
    }
}

fn write_plot_data(
    path: &Path,
    records: &[TrialRecord],
    axis: SweepAxis,
    y_runtime: bool,
    log_scale: bool,
) -> Result<()> {
    let summaries = aggregate(records, axis);
    // distinct axis values and methods in first-appearance order
    let mut values: Vec<f64> = Vec::new();
    let mut methods: Vec<String> = Vec::new();
    for s in &summaries {
        if !values.iter().any(|v| v.to_bits() == s.value.to_bits()) {
            values.push(s.value);
        }
        if !methods.contains(&s.method) {
            methods.push(s.method.clone());
        }
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let axis_name = match axis {
        SweepAxis::T => "T",
        SweepAxis::Snr => "snr_db",
        SweepAxis::Bias => "bias_std",
    };
    let mut out = String::new();
    out.push_str(&format!(
        "# charm-plot/1 x={} y={} yscale={}\n",
        axis_name,
        if y_runtime { "median_runtime_ms" } else { "mean_nmse_db" },
        if log_scale { "log" } else { "linear" }
    ));
    out.push_str(&format!("# columns: {} {}\n", axis_name, methods.join(" ")));
    for v in &values {
        out.push_str(&format!("{v}"));
        for m in &methods {
            let cell = summaries
                .iter()
                .find(|s| s.method == *m && s.value.to_bits() == v.to_bits())
                .map(|s| {
                    if y_runtime {
                        s.median_runtime_ms
                    } else {
                        s.mean_nmse_db
                    }
                })
                .unwrap_or(f64::NAN);
            out.push_str(&format!(" {cell:.6}"));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

const PLOT_STUB: &str = r#"#!/usr/bin/env python3
"""Render charm plot-data files (*.dat) with matplotlib.

Usage: python3 plot_stub.py fig2.dat [fig3.dat ...]
"""
import sys
import matplotlib.pyplot as plt

for path in sys.argv[1:]:
    with open(path) as f:
        meta = f.readline().split()
        cols = f.readline().split()[2:]
        rows = [[float(v) for v in line.split()] for line in f if line.strip()]
    x = [r[0] for r in rows]
    plt.figure()
    for i, name in enumerate(cols[1:], start=1):
        plt.plot(x, [r[i] for r in rows], marker="o", label=name)
    opts = dict(kv.split("=") for kv in meta[1:])
    if opts.get("yscale") == "log":
        plt.yscale("log")
    plt.xlabel(opts.get("x", "x"))
    plt.ylabel(opts.get("y", "y"))
    plt.legend()
    plt.grid(True, alpha=0.4)
    plt.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
    print("saved", path.rsplit(".", 1)[0] + ".png")
"#;

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Run(args) => cmd_run(args),
        Command::Report(args) => cmd_report(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
