//! morreylab: configure, run, and report the square-function experiments.
//!
//! Subcommands: `check` (run one experiment and write its report),
//! `search` (adversarial worst-ratio search), `converge` (drift along a
//! discretization axis), `validate-bank` (kernel admissibility table),
//! `weights-report` (doubling/subset/tail constants). All randomness
//! flows from the seeds in the config, so identical configs give
//! byte-identical reports. MORREYLAB_THREADS caps the worker pool; it
//! affects speed only, never results.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};

use morreylab_core::lab::{self, Axis, ExperimentId, ReportFormat, SearchFamily};
use morreylab_core::{admissibility_report, weight_lemma_report};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "morreylab",
    version,
    about = "Intrinsic square functions on weighted Morrey spaces: a desk-scale numerical laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment over the default corpus and write its report.
    Check {
        /// Experiment id (T1.1, T1.2, C1.3, T3.1, T4.2, L4.1, INEQ6, TAIL, CZ).
        #[arg(long)]
        experiment: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output file (default from config output.path, else report_<id>.<fmt>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hill-climb instance parameters to maximize an experiment's ratio.
    Search {
        #[arg(long)]
        experiment: String,
        /// Number of ratio evaluations.
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rerun an experiment along one discretization axis and report drift.
    Converge {
        #[arg(long)]
        experiment: String,
        /// grid_n | bank_size | scales_per_octave | t_range | shells | family_stride
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values (defaults per axis).
        #[arg(long)]
        values: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the admissibility table of the configured kernel bank.
    ValidateBank {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print doubling/subset/tail constants for the corpus weights.
    WeightsReport {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::from_file(p),
        None => Ok(RunConfig::default()),
    }
}

fn parse_experiment(name: &str) -> Result<ExperimentId> {
    name.parse::<ExperimentId>().map_err(|e| anyhow!("{e}"))
}

fn default_out(id: ExperimentId, format: ReportFormat) -> PathBuf {
    let ext = match format {
        ReportFormat::Csv => "csv",
        ReportFormat::Json => "json",
    };
    PathBuf::from(format!(
        "report_{}.{ext}",
        id.name().replace('.', "_").to_lowercase()
    ))
}

fn run() -> Result<()> {
    if let Ok(threads) = std::env::var("MORREYLAB_THREADS") {
        let n: usize = threads
            .parse()
            .context("MORREYLAB_THREADS must be a positive integer")?;
        if n > 0 {
            // Ignore the error if a pool already exists (tests, repeat calls).
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }

    let cli = Cli::parse();
    match cli.command {
        Command::Check {
            experiment,
            config,
            out,
        } => {
            let cfg = load_config(&config)?;
            let ids: Vec<ExperimentId> = match experiment {
                Some(name) => vec![parse_experiment(&name)?],
                None => cfg
                    .experiments
                    .iter()
                    .map(|n| parse_experiment(n))
                    .collect::<Result<_>>()?,
            };
            let grid = cfg.lab.grid().map_err(|e| anyhow!("{e}"))?;
            let corpus =
                lab::default_corpus(&grid, cfg.lab.corpus_seed).map_err(|e| anyhow!("{e}"))?;
            for id in ids {
                let report =
                    lab::run_experiment(id, &corpus, &cfg.lab).map_err(|e| anyhow!("{e}"))?;
                let path = out
                    .clone()
                    .or_else(|| cfg.output_path.clone())
                    .unwrap_or_else(|| default_out(id, cfg.output_format));
                lab::write_report(&report, &path, cfg.output_format).map_err(|e| anyhow!("{e}"))?;
                println!(
                    "{id}: {} instances, max ratio {}, {} skipped, {} violations -> {}",
                    report.instances.len(),
                    report
                        .max_ratio
                        .map(|r| format!("{r:.6}"))
                        .unwrap_or_else(|| "n/a".to_string()),
                    report.skipped,
                    report.violations,
                    path.display()
                );
            }
        }
        Command::Search {
            experiment,
            budget,
            seed,
            config,
            out,
        } => {
            let cfg = load_config(&config)?;
            let id = parse_experiment(&experiment)?;
            let budget = budget.unwrap_or(cfg.search_budget);
            let seed = seed.unwrap_or(cfg.search_seed);
            let report =
                lab::adversarial_search(id, SearchFamily::BumpPair, budget, seed, &cfg.lab)
                    .map_err(|e| anyhow!("{e}"))?;
            let path = out
                .or_else(|| cfg.output_path.clone())
                .unwrap_or_else(|| default_out(id, cfg.output_format));
            lab::write_report(&report, &path, cfg.output_format).map_err(|e| anyhow!("{e}"))?;
            println!(
                "{id}: best ratio {} after {budget} evaluations -> {}",
                report
                    .max_ratio
                    .map(|r| format!("{r:.6}"))
                    .unwrap_or_else(|| "n/a".to_string()),
                path.display()
            );
        }
        Command::Converge {
            experiment,
            axis,
            values,
            config,
            out,
        } => {
            let cfg = load_config(&config)?;
            let id = parse_experiment(&experiment)?;
            let axis: Axis = axis.parse().map_err(|e| anyhow!("{e}"))?;
            let values: Vec<usize> = match values {
                Some(v) => v
                    .split(',')
                    .map(|s| s.trim().parse().context("axis values must be integers"))
                    .collect::<Result<_>>()?,
                None if !cfg.converge_values.is_empty() => cfg.converge_values.clone(),
                None => default_axis_values(axis, &cfg),
            };
            let report =
                lab::convergence_study(id, &cfg.lab, axis, &values).map_err(|e| anyhow!("{e}"))?;
            let path = out
                .or_else(|| cfg.output_path.clone())
                .unwrap_or_else(|| default_out(id, cfg.output_format));
            lab::write_report(&report, &path, cfg.output_format).map_err(|e| anyhow!("{e}"))?;
            let section = report.convergence.as_ref().expect("convergence section");
            for pt in &section.points {
                println!(
                    "{id} {}={}: max ratio {:.6}{}",
                    section.axis,
                    pt.value,
                    pt.max_ratio,
                    pt.drift
                        .map(|d| format!(", drift {:.3}%", 100.0 * d))
                        .unwrap_or_default()
                );
            }
            println!("-> {}", path.display());
        }
        Command::ValidateBank { config } => {
            let cfg = load_config(&config)?;
            let grid = cfg.lab.grid().map_err(|e| anyhow!("{e}"))?;
            let bank = cfg.lab.bank(&grid).map_err(|e| anyhow!("{e}"))?;
            println!("kernel  support  mean_zero  holder  |mean|      holder_quotient");
            let mut all_ok = true;
            for (i, kernel) in bank.members().iter().enumerate() {
                let r = admissibility_report(kernel, &grid);
                all_ok &= r.all_pass();
                println!(
                    "{i:>6}  {:>7}  {:>9}  {:>6}  {:.3e}  {:.6}",
                    r.support_ok,
                    r.mean_ok,
                    r.holder_ok,
                    r.discrete_mean.abs(),
                    r.holder_quotient
                );
            }
            if !all_ok {
                return Err(anyhow!("bank admissibility failed"));
            }
        }
        Command::WeightsReport { config } => {
            let cfg = load_config(&config)?;
            let grid = cfg.lab.grid().map_err(|e| anyhow!("{e}"))?;
            let corpus =
                lab::default_corpus(&grid, cfg.lab.corpus_seed).map_err(|e| anyhow!("{e}"))?;
            let family = cfg.lab.family(&grid).map_err(|e| anyhow!("{e}"))?;
            println!(
                "weight      A_p(p={})  RH(r={})  subset  doubling  tail(q={})  skipped  divergent",
                cfg.weights_p, cfg.weights_r, cfg.weights_q
            );
            for cw in &corpus.weights {
                let report = weight_lemma_report(
                    &cw.weight,
                    cfg.weights_p,
                    cfg.weights_r,
                    cfg.weights_q,
                    &family,
                    cfg.weights_seed,
                )
                .map_err(|e| anyhow!("{e}"))?;
                println!(
                    "{:>10}  {:>9.4}  {:>8.4}  {:>6.4}  {:>8.4}  {:>10.4}  {:>7}  {}",
                    cw.descriptor,
                    report.ap_characteristic,
                    report.rh_constant,
                    report.subset_ratio,
                    report.doubling_constant,
                    report.tail_ratio,
                    report.skipped_geometries,
                    report.divergent
                );
            }
        }
    }
    Ok(())
}

fn default_axis_values(axis: Axis, cfg: &RunConfig) -> Vec<usize> {
    let mut values = match axis {
        Axis::GridN => {
            let n = cfg.lab.grid_points;
            vec![(n / 4).max(8), (n / 2).max(8), n]
        }
        Axis::BankSize => {
            let s = cfg.lab.bank_size.max(1);
            vec![s.div_ceil(2), s, 2 * s]
        }
        Axis::ScalesPerOctave => {
            let m = (cfg.lab.cone_scales_per_octave as usize).max(2);
            vec![m, 2 * m]
        }
        Axis::TRange => vec![3, 4, 5],
        Axis::Shells => vec![2, 4, 8],
        Axis::FamilyStride => {
            let s = if cfg.lab.family_stride > 0 {
                cfg.lab.family_stride
            } else {
                cfg.lab.grid_points / 16
            };
            // Decreasing stride enlarges the family.
            let mut v = vec![s.max(2), (s / 2).max(1)];
            v.sort_unstable();
            v.dedup();
            v.reverse();
            return v;
        }
    };
    values.sort_unstable();
    values.dedup();
    values
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
