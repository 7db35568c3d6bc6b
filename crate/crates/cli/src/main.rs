use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use mlcv_core::estimators::{adaptive_run, Method};
use mlcv_core::harness::{
    allocation_csv, allocation_report, benchmark_correlations, build_surrogate_suite, expectation_plan, level_table,
    level_table_csv, run_campaign, CampaignConfig, RunSummary, SurrogateSuite,
};
use mlcv_core::heatbench::HeatBenchmark;
use mlcv_core::sampling::seed_from_label;

#[derive(Parser)]
#[command(name = "mlcv", version, about = "Multilevel Monte Carlo with surrogate control variates")]
struct Cli {
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true, env = "MLCV_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Campaign configuration (TOML or JSON).
    config: PathBuf,
    /// Surrogate suite file; built and written there when missing.
    #[arg(long)]
    suite: Option<PathBuf>,
    /// 500 replicates and a 10^6 subset pool instead of the desk-scale defaults.
    #[arg(long)]
    full_profile: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train the surrogate suite and report its test-sample Q^2.
    BuildSurrogates {
        config: PathBuf,
        #[arg(long, default_value = "surrogates.json")]
        out: PathBuf,
        #[arg(long)]
        full_profile: bool,
    },
    /// One adaptive run of a method under a budget, as JSON.
    Estimate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        method: Method,
        #[arg(long)]
        budget: f64,
        #[arg(long, default_value_t = 0)]
        replicate: u64,
    },
    /// Every configured method and budget over independent replicates.
    Campaign {
        #[command(flatten)]
        common: Common,
        /// Output directory for the CSV, JSON and text reports.
        #[arg(long, default_value = "campaign-out")]
        out: PathBuf,
    },
    /// Correlation tables and per-level variance, R^2 and allocation table.
    Tables {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-level sample-size quartiles and cost shares from a runs.json file.
    Allocation { traces: PathBuf },
}

fn load_config(path: &Path, full: bool) -> Result<CampaignConfig> {
    let cfg = CampaignConfig::load(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(if full { cfg.full_profile() } else { cfg })
}

fn suite_for(common: &Common, cfg: &CampaignConfig, bench: &HeatBenchmark) -> Result<SurrogateSuite> {
    if let Some(path) = &common.suite {
        if path.exists() {
            return Ok(SurrogateSuite::load(path)?);
        }
    }
    let suite = build_surrogate_suite(bench, &cfg.surrogates, cfg.seed)?;
    if let Some(path) = &common.suite {
        suite.save(path)?;
    }
    Ok(suite)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::BuildSurrogates {
            config,
            out,
            full_profile,
        } => {
            let cfg = load_config(&config, full_profile)?;
            let bench = HeatBenchmark::new(cfg.benchmark.clone())?;
            let suite = build_surrogate_suite(&bench, &cfg.surrogates, cfg.seed)?;
            suite.save(&out)?;
            emit(&suite.quality_csv());
            for m in &cfg.methods {
                emit(&format!("construction cost {m}: {}\n", suite.construction_cost(*m)));
            }
        }
        Command::Estimate {
            common,
            method,
            budget,
            replicate,
        } => {
            let cfg = load_config(&common.config, common.full_profile)?;
            let bench = HeatBenchmark::new(cfg.benchmark.clone())?;
            let suite = suite_for(&common, &cfg, &bench)?;
            let plan = expectation_plan(method, &bench, &suite.controls(), cfg.exact_covariance)?;
            let seed = seed_from_label(cfg.seed, &format!("{method}@{budget}"));
            let report = adaptive_run(&plan, &bench, budget, &cfg.driver, seed, replicate)?;
            emit(&format!("{}\n", serde_json::to_string_pretty(&report)?));
        }
        Command::Campaign { common, out } => {
            let cfg = load_config(&common.config, common.full_profile)?;
            let bench = HeatBenchmark::new(cfg.benchmark.clone())?;
            let suite = suite_for(&common, &cfg, &bench)?;
            let report = run_campaign(&cfg, &bench, &suite);
            report.write(&out)?;
            emit(&report.summary_text());
        }
        Command::Tables { common, out } => {
            let cfg = load_config(&common.config, common.full_profile)?;
            let bench = HeatBenchmark::new(cfg.benchmark.clone())?;
            let suite = suite_for(&common, &cfg, &bench)?;
            let tables = benchmark_correlations(&bench, &suite, cfg.tables.correlation_samples, cfg.seed)?;
            let rows = level_table(&bench, &suite, &cfg.methods, cfg.tables.level_samples, cfg.seed, cfg.exact_covariance)?;
            let mut correlations = String::new();
            for t in &tables {
                correlations.push_str(&format!("# {}\n{}", t.title, t.to_csv()));
            }
            let levels = level_table_csv(&rows);
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("correlations.csv"), &correlations)?;
                std::fs::write(dir.join("levels.csv"), &levels)?;
            }
            emit(&format!("{correlations}\n{levels}"));
        }
        Command::Allocation { traces } => {
            let text = std::fs::read_to_string(&traces).with_context(|| format!("reading {}", traces.display()))?;
            let runs: Vec<RunSummary> = serde_json::from_str(&text)?;
            emit(&allocation_csv(&allocation_report(&runs)));
        }
    }
    Ok(())
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn fail(kind: &str, message: String) -> ExitCode {
    eprintln!("{}", serde_json::json!({ "error": kind, "message": message }));
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim_end().to_string()),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e
                .chain()
                .find_map(|c| c.downcast_ref::<mlcv_core::Error>())
                .map_or("cli", |c| c.kind());
            fail(kind, format!("{e:#}"))
        }
    }
}
