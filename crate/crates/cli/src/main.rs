use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use hodgeflow::hodge::Mode;
use hodgeflow::ingest::RegionScope;
use hodgeflow::metrics::DEFAULT_BIN_WIDTH;
use hodgeflow::synth::DatasetConfig;
use hodgeflow_cli::{
    cmd_ami, cmd_cluster, cmd_decompose, cmd_metrics, cmd_regress, cmd_synth, error_report, RegressSpec, RunConfig,
    CACHE_ENV,
};

#[derive(Parser)]
#[command(name = "hodgeflow", version, about = "Hodge decomposition of provider referral networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build complexes, decompose flows and write per-region metrics.
    Decompose(Common),
    /// Harmonic, geographic and system-pair edge clusterings with AMI.
    Cluster(Common),
    /// Region metrics with grouped summaries and histograms.
    Metrics {
        #[command(flatten)]
        common: Common,
        /// CSV with `region,group` columns.
        #[arg(long)]
        groups: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
        bin_width: f64,
    },
    /// Year fixed-effect regressions of panel outcomes on flow measures.
    Regress {
        #[command(flatten)]
        common: Common,
        /// Outcome column; repeatable. Defaults to every non-flow, non-control column.
        #[arg(long = "outcome")]
        outcomes: Vec<String>,
        /// Control column; repeatable.
        #[arg(long = "control")]
        controls: Vec<String>,
    },
    /// Write a synthetic provider table and edge list.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        regions: usize,
        #[arg(long, default_value_t = 24)]
        providers_per_region: usize,
        #[arg(long, default_value_t = 0.18)]
        edge_probability: f64,
        #[arg(long, value_delimiter = ',', default_value = "2017")]
        years: Vec<i32>,
        #[arg(long, default_value_t = 3)]
        systems_per_region: usize,
    },
    /// Adjusted mutual information between two cluster tables.
    Ami {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        method_a: Option<String>,
        #[arg(long)]
        method_b: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    edges: Option<PathBuf>,
    #[arg(long)]
    providers: Option<PathBuf>,
    #[arg(long)]
    crosswalk: Option<PathBuf>,
    #[arg(long)]
    panel: Option<PathBuf>,
    #[arg(long, default_value = "hsa")]
    scope: RegionScope,
    #[arg(long, default_value = "normalized")]
    mode: Mode,
    #[arg(long, default_value_t = hodgeflow::cluster::DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    tol_eigen: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol_solve: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Taxonomy codes to keep; repeatable.
    #[arg(long = "taxonomy-allow")]
    taxonomy_allow: Vec<String>,
    /// Taxonomy codes to drop; repeatable.
    #[arg(long = "taxonomy-deny")]
    taxonomy_deny: Vec<String>,
}

impl Common {
    fn config(self) -> RunConfig {
        let mut cfg = RunConfig::new(self.out);
        cfg.edges = self.edges;
        cfg.providers = self.providers;
        cfg.crosswalk = self.crosswalk;
        cfg.panel = self.panel;
        cfg.scope = self.scope;
        cfg.mode = self.mode;
        cfg.k = self.k;
        cfg.seed = self.seed;
        cfg.tol_eigen = self.tol_eigen;
        cfg.tol_solve = self.tol_solve;
        cfg.jobs = self.jobs;
        cfg.cache = std::env::var_os(CACHE_ENV).map(PathBuf::from);
        cfg.taxonomy_allow = self.taxonomy_allow;
        cfg.taxonomy_deny = self.taxonomy_deny;
        cfg
    }
}

fn run(command: Command) -> Result<hodgeflow_cli::CommandReport> {
    match command {
        Command::Decompose(c) => cmd_decompose(&c.config()),
        Command::Cluster(c) => cmd_cluster(&c.config()),
        Command::Metrics { common, groups, bin_width } => cmd_metrics(&common.config(), groups.as_deref(), bin_width),
        Command::Regress { common, outcomes, controls } => {
            cmd_regress(&common.config(), &RegressSpec { outcomes, controls })
        }
        Command::Synth {
            common,
            regions,
            providers_per_region,
            edge_probability,
            years,
            systems_per_region,
        } => {
            let cfg = common.config();
            let dataset = DatasetConfig {
                regions,
                providers_per_region,
                edge_probability,
                years,
                systems_per_region,
                seed: cfg.seed,
            };
            cmd_synth(&cfg, &dataset)
        }
        Command::Ami {
            common,
            a,
            b,
            method_a,
            method_b,
        } => cmd_ami(&common.config(), &a, method_a.as_deref(), &b, method_b.as_deref()),
    }
}

fn name(command: &Command) -> &'static str {
    match command {
        Command::Decompose(_) => "decompose",
        Command::Cluster(_) => "cluster",
        Command::Metrics { .. } => "metrics",
        Command::Regress { .. } => "regress",
        Command::Synth { .. } => "synth",
        Command::Ami { .. } => "ami",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let label = name(&cli.command);
    match run(cli.command) {
        Ok(report) => {
            for w in &report.manifest.warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_report(label, &e));
            ExitCode::FAILURE
        }
    }
}
