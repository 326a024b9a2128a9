//! Command line front end: grid runs, rank tables, report files, external
//! method checks, and demo data generation.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use impbench_core::amputation::Mechanism;
use impbench_core::imputers::{Hyperparams, ImputerKind};
use impbench_core::metrics::Metric;
use impbench_core::orchestrator::{
    greedy_top1_order, rank, run_benchmark, validate_method, write_report, BenchmarkConfig,
    DatasetConfig, DatasetKind, MethodConfig, RankTable, ScenarioRecord, Store,
};
use impbench_core::synth;

#[derive(Parser)]
#[command(
    name = "impbench",
    version,
    about = "Benchmark missing-value imputation methods as distributional predictors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario grid described by a TOML config.
    Run {
        /// Benchmark config; paths inside it resolve relative to its directory.
        #[arg(long)]
        config: PathBuf,
        /// Record store to append to (JSON lines).
        #[arg(long, default_value = "records.jsonl")]
        store: PathBuf,
        /// Worker threads; overrides the config, 0 = one per core.
        #[arg(long)]
        jobs: Option<usize>,
        /// Continue an interrupted run instead of refusing an existing store.
        #[arg(long)]
        resume: bool,
    },
    /// Print the method rank table from a finished store.
    Rank {
        #[arg(long)]
        store: PathBuf,
        /// energy | nrmse | iscore (mpe is reported but never ranked).
        #[arg(long, default_value = "energy")]
        metric: String,
        /// Restrict to datasets of one kind: numeric | mixed | all.
        #[arg(long, default_value = "all")]
        scope: String,
    },
    /// Write rank, coverage, error and runtime tables to a directory.
    Report {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Probe an external command against the subprocess protocol.
    ValidateMethod {
        /// Program plus leading arguments, whitespace-separated.
        #[arg(long)]
        cmd: String,
        /// Also run the categorical round-trip and one-hot block checks.
        #[arg(long)]
        categorical: bool,
        #[arg(long, default_value_t = 60)]
        timeout_secs: u64,
    },
    /// Generate the bundled demo datasets plus a ready-to-run config.
    GenData {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run { config, store, jobs, resume } => run(&config, &store, jobs, resume),
        Command::Rank { store, metric, scope } => print_rank(&store, &metric, &scope),
        Command::Report { store, out } => report(&store, &out),
        Command::ValidateMethod { cmd, categorical, timeout_secs } => {
            probe_method(&cmd, categorical, timeout_secs)
        }
        Command::GenData { out, seed } => gen_data(&out, seed),
    }
}

fn run(config_path: &Path, store_path: &Path, jobs: Option<usize>, resume: bool) -> Result<()> {
    let mut config = BenchmarkConfig::from_path(config_path)
        .with_context(|| format!("loading {}", config_path.display()))?;
    if let Ok(raw) = std::env::var("IMPBENCH_SEED") {
        config.seed = raw
            .parse()
            .with_context(|| format!("IMPBENCH_SEED must be an unsigned integer, got '{raw}'"))?;
        log::info!("seed overridden to {} by IMPBENCH_SEED", config.seed);
    }
    if let Some(j) = jobs {
        config.jobs = j;
    }
    if config.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build_global()
            .context("building the worker pool")?;
    }
    let store = Store::new(store_path);
    let summary = run_benchmark(&config, &store, resume)?;
    println!(
        "ran {} work units ({} resumed from the store), {} records -> {}",
        summary.scenarios_run,
        summary.scenarios_skipped,
        summary.records_written,
        store_path.display()
    );
    Ok(())
}

fn load_records(store_path: &Path) -> Result<Vec<ScenarioRecord>> {
    let records = Store::new(store_path).load()?;
    if records.is_empty() {
        bail!("store {} holds no records", store_path.display());
    }
    Ok(records)
}

fn print_rank(store_path: &Path, metric: &str, scope: &str) -> Result<()> {
    let metric = Metric::from_str(metric).map_err(anyhow::Error::msg)?;
    if !metric.rankable() {
        bail!("{} is reported per scenario but never ranked", metric.name());
    }
    let mut records = load_records(store_path)?;
    match scope {
        "all" => {}
        "numeric" => records.retain(|r| r.dataset_kind == DatasetKind::Numeric),
        "mixed" => records.retain(|r| r.dataset_kind == DatasetKind::Mixed),
        other => bail!("unknown scope '{other}', expected numeric, mixed or all"),
    }
    let table = rank(&records, metric);
    if table.scenarios.is_empty() {
        bail!("no {} records in scope '{scope}'", metric.name());
    }
    print_table(&table, scope);
    Ok(())
}

fn print_table(table: &RankTable, scope: &str) {
    println!(
        "{} ranks, scope {scope}: {} scenarios, {} degenerate",
        table.metric.name(),
        table.scenarios.len(),
        table.degenerate_scenarios
    );
    let width = table.methods.iter().map(|m| m.len()).max().unwrap_or(6).max(6);
    println!("  {:<width$}  {:>9}  {:>11}  {:>9}", "method", "mean rank", "median rank", "scenarios");
    for i in table.order_by_mean() {
        println!(
            "  {:<width$}  {:>9.3}  {:>11.3}  {:>9}",
            table.methods[i], table.mean_rank[i], table.median_rank[i], table.n_scenarios[i]
        );
    }
    let cover: Vec<String> = greedy_top1_order(table)
        .into_iter()
        .take(3)
        .map(|(m, c)| format!("{} ({:.0}%)", table.methods[m], 100.0 * c))
        .collect();
    println!("  greedy top-1 cover: {}", cover.join(" -> "));
}

fn report(store_path: &Path, out: &Path) -> Result<()> {
    let records = load_records(store_path)?;
    let summary = write_report(&records, out)?;
    println!(
        "{} records over {} work units -> {} files:",
        summary.n_records,
        summary.n_work_units,
        summary.files.len()
    );
    for file in &summary.files {
        println!("  {}", file.display());
    }
    Ok(())
}

fn probe_method(cmd: &str, categorical: bool, timeout_secs: u64) -> Result<()> {
    let report = validate_method(cmd, categorical, timeout_secs);
    for check in &report.checks {
        let tag = if check.passed { "PASS" } else { "FAIL" };
        println!("{tag} {:<18} {}", check.name, check.detail);
    }
    if !report.all_passed() {
        std::process::exit(1);
    }
    println!("command satisfies the protocol");
    Ok(())
}

fn gen_data(out: &Path, seed: u64) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let bundle = synth::write_bundle(out, seed)?;
    let kinds = [
        ImputerKind::Mean,
        ImputerKind::Median,
        ImputerKind::Zero,
        ImputerKind::Random,
        ImputerKind::Knn,
        ImputerKind::Norm,
        ImputerKind::NormNob,
        ImputerKind::NormPredict,
        ImputerKind::Pmm,
        ImputerKind::CartFcs,
    ];
    let config = BenchmarkConfig {
        seed,
        replicates: 2,
        proportions: vec![0.1, 0.2, 0.3],
        mechanisms: vec![Mechanism::Mcar, Mechanism::Mar],
        metric: Default::default(),
        iscore_imputations: 20,
        jobs: 0,
        datasets: bundle
            .iter()
            .map(|b| DatasetConfig {
                id: b.id.clone(),
                // File names only: config paths resolve relative to the
                // config's own directory.
                csv: PathBuf::from(b.csv.file_name().expect("bundle file name")),
                schema: Some(PathBuf::from(b.schema.file_name().expect("bundle file name"))),
            })
            .collect(),
        methods: kinds
            .iter()
            .map(|&kind| MethodConfig {
                name: kind_name(kind).to_string(),
                kind,
                params: Hyperparams::default(),
            })
            .collect(),
    };
    let path = out.join("benchmark.toml");
    std::fs::write(&path, config.to_toml_string())?;
    for b in &bundle {
        println!("wrote {}", b.csv.display());
    }
    println!("wrote {}", path.display());
    println!("next: impbench run --config {}", path.display());
    Ok(())
}

fn kind_name(kind: ImputerKind) -> &'static str {
    match kind {
        ImputerKind::Mean => "mean",
        ImputerKind::Median => "median",
        ImputerKind::Zero => "zero",
        ImputerKind::Random => "random",
        ImputerKind::Knn => "knn",
        ImputerKind::Norm => "norm",
        ImputerKind::NormNob => "norm_nob",
        ImputerKind::NormPredict => "norm_predict",
        ImputerKind::Pmm => "pmm",
        ImputerKind::CartFcs => "cart_fcs",
        ImputerKind::External => "external",
    }
}
