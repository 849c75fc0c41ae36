use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use iagf_core::scenario::{episode_metrics, read_jsonl, run_episode, run_suite, write_jsonl, MetricParams, Method};
use iagf_core::Config;
use iagf_teleop::ServeConfig;

#[derive(Parser)]
#[command(name = "iagf", version, about = "Shared-autonomy teleoperation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scripted episode and write its log.
    Run {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        method: Method,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the scenario × method × seed grid from the config.
    Suite {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute metrics from a JSONL log.
    Replay {
        #[arg(long)]
        log: PathBuf,
        /// Supplies the grasp and alignment parameters.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Serve live sessions over WebSocket.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "logs")]
        log_dir: PathBuf,
        /// Directory served at `/`.
        #[arg(long, default_value = "web")]
        static_dir: PathBuf,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

fn load(config: Option<&Path>) -> Result<Config> {
    match config {
        Some(p) => Config::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(Config::default()),
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenario, method, seed, config, out } => {
            let cfg = load(config.as_deref())?;
            let sc = cfg.scenario(&scenario)?;
            let result = run_episode(&cfg, &sc, method, seed)?;
            std::fs::create_dir_all(&out)?;
            let stem = format!("{scenario}_{}_{seed}", method.key());
            write_jsonl(out.join(format!("{stem}.jsonl")), &result.log)?;
            let summary = serde_json::to_string_pretty(&result)?;
            std::fs::write(out.join(format!("{stem}.json")), &summary)?;
            println!("{summary}");
        }
        Command::Suite { config, out } => {
            let cfg = load(config.as_deref())?;
            let results = run_suite(&cfg, &cfg.suite);
            results.write_to_dir(&out)?;
            println!("scenario method   n  success  time(s)  disagreement  align(s)  min m");
            for c in &results.cells {
                println!(
                    "{:8} {:7} {:3}  {:7.2}  {:7.2}  {:12.4}  {:8.2}  {:.4}",
                    c.scenario,
                    c.method.key(),
                    c.episodes,
                    c.success_rate,
                    c.completion_time_mean,
                    c.disagreement_mean,
                    c.alignment_time_mean,
                    c.min_manipulability_mean
                );
            }
            let errors: usize = results.cells.iter().map(|c| c.errors).sum();
            if errors > 0 {
                eprintln!("{errors} episodes failed; see episodes.csv");
            }
        }
        Command::Replay { log, config } => {
            let cfg = load(config.as_deref())?;
            let records = read_jsonl(&log).with_context(|| format!("reading {}", log.display()))?;
            let metrics = episode_metrics(&records, &MetricParams::from_config(&cfg))?;
            println!("{}", serde_json::to_string_pretty(&metrics)?);
        }
        Command::Serve { port, config, log_dir, static_dir, host } => {
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
                )
                .init();
            let cfg = load(config.as_deref())?;
            let mut serve = ServeConfig::new(cfg, log_dir);
            serve.static_dir = Some(static_dir);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind((host.as_str(), port)).await?;
                tracing::info!(addr = %listener.local_addr()?, "listening");
                iagf_teleop::serve(listener, serve).await
            })?;
        }
    }
    Ok(())
}
