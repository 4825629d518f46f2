use std::path::PathBuf;
use std::process::ExitCode;

use adaparse::cli::{
    cmd_bench, cmd_eval, cmd_run, cmd_stage, cmd_train, eval_table, load_config, synthesize, CampaignConfig, WorkerCounts,
};
use adaparse::scheduler::Strategy;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "adaparse", version, about = "Budget-aware adaptive document parsing")]
struct Cli {
    #[arg(long, global = true, env = "ADAPARSE_CONFIG", default_value = "adaparse.yaml")]
    config: PathBuf,
    /// single:<parser_id>, adaparse_ft or adaparse_llm
    #[arg(long, global = true)]
    strategy: Option<Strategy>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Workers per pool; `bench` takes a comma-separated sweep.
    #[arg(long, global = true, value_delimiter = ',')]
    workers: Vec<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stage zipped documents from pdf_dir into out_dir/staged.
    Stage {
        /// Write this many synthetic documents into pdf_dir first.
        #[arg(long)]
        synthesize: Option<usize>,
    },
    /// Train the accuracy predictor and metadata classifier.
    Train,
    /// Run a parsing campaign.
    Run,
    /// Score manifests against groundtruth.
    Eval {
        #[arg(long)]
        manifest: Vec<PathBuf>,
        /// JSON-lines preference records for the win-rate column.
        #[arg(long)]
        preferences: Option<PathBuf>,
    },
    /// Measure throughput across worker counts.
    Bench {
        #[arg(long, default_value_t = 200)]
        docs: usize,
        /// CPU seconds burned per modeled second of parser cost.
        #[arg(long, default_value_t = 0.005)]
        spin_scale: f64,
        #[arg(long)]
        no_svg: bool,
    },
}

fn apply_flags(cli: &Cli, cfg: &mut CampaignConfig) -> adaparse::Result<()> {
    if let Some(s) = &cli.strategy {
        cfg.strategy = Some(s.clone());
    }
    if let Some(a) = cli.alpha {
        cfg.alpha = a;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let (Some(&w), false) = (cli.workers.first(), matches!(cli.command, Command::Bench { .. })) {
        cfg.workers = WorkerCounts::All(w);
    }
    cfg.validate()
}

fn run(cli: Cli) -> adaparse::Result<()> {
    let mut cfg = load_config(&cli.config)?;
    apply_flags(&cli, &mut cfg)?;
    match &cli.command {
        Command::Stage { synthesize: n } => {
            if let Some(n) = n {
                std::fs::create_dir_all(&cfg.pdf_dir)?;
                let written = synthesize(&cfg, *n)?;
                println!("wrote {n} documents in {} archives to {}", written.len(), cfg.pdf_dir.display());
            }
            let staged = cmd_stage(&cfg)?;
            println!("staged {} documents ({} skipped) into {}", staged.len(), staged.skipped(), staged.dir().display());
        }
        Command::Train => {
            let s = cmd_train(&cfg)?;
            println!(
                "trained on {} docs; held-out R² by step: {:.3} {:.3} {:.3}",
                s.train_docs, s.r_squared[0], s.r_squared[1], s.r_squared[2]
            );
            println!("weights: {}", s.weights_path.display());
        }
        Command::Run => print!("{}", cmd_run(&cfg)?.to_table()),
        Command::Eval { manifest, preferences } => {
            print!("{}", eval_table(&cmd_eval(&cfg, manifest, preferences.as_deref())?))
        }
        Command::Bench { docs, spin_scale, no_svg } => {
            let counts = if cli.workers.is_empty() { vec![1, 2, 4, 8] } else { cli.workers.clone() };
            println!("workers,docs_per_second,efficiency");
            for r in cmd_bench(&cfg, &counts, *docs, *spin_scale, !no_svg)? {
                println!("{},{:.2},{:.3}", r.workers, r.throughput, r.efficiency);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
