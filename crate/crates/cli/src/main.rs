use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use gossip_sim::output::{load_config, write_run};
use gossip_sim::sweep::run_sweep;
use gossip_sim::units::parse_size;
use gossip_sim_core::scenario::{self, PublisherCounts};
use gossip_sim_core::{analytical_estimate, run_scenario};

#[derive(Parser)]
#[command(name = "gossip-sim", version, about = "Deterministic GossipSub large-message simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario from a JSON config (or an emitted summary.json).
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Field override, `key=value`; repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Also write the mesh edge list.
        #[arg(long)]
        edges: bool,
    },
    /// Run a built-in preset sweep.
    Sweep {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Use publisher counts 20..100 instead of 22..102 for the publisher sweep.
        #[arg(long)]
        round_publisher_counts: bool,
    },
    /// Print the closed-form latency estimate.
    Estimate {
        #[arg(long, value_parser = parse_size_arg)]
        size: u64,
        /// Link rate in Mbps.
        #[arg(long)]
        rate: f64,
        /// Link latency in ms.
        #[arg(long)]
        latency: f64,
        #[arg(long)]
        nodes: u64,
        #[arg(long)]
        degree: u64,
        #[arg(long, default_value_t = 1)]
        fragments: u32,
    },
    /// List preset names.
    Presets,
}

fn parse_size_arg(s: &str) -> Result<u64, String> {
    parse_size(s).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            overrides,
            edges,
        } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut file = load_config(&text)?.apply_overrides(&overrides)?;
            if let Some(s) = seed {
                file.seed = s;
            }
            let scenario = file.to_scenario()?;
            let output = run_scenario(&scenario)?;
            let summary = write_run(&out, &scenario, &output, edges)?;
            let m = &summary.metrics;
            println!(
                "messages={} complete={} mean_l100_ms={} b_n={} iwant={} -> {}",
                m.messages,
                summary.complete,
                m.mean_l100_ms.map_or("-".into(), |v| format!("{v:.1}")),
                m.b_n,
                m.iwant_requests,
                out.display()
            );
            if !summary.complete {
                eprintln!("run incomplete: horizon reached before every message was delivered");
                return Ok(ExitCode::from(2));
            }
        }
        Command::Sweep {
            preset,
            out,
            jobs,
            seed,
            round_publisher_counts,
        } => {
            let counts = if round_publisher_counts {
                PublisherCounts::RowLabels
            } else {
                PublisherCounts::Header
            };
            let Some(cells) = scenario::preset(&preset, counts, seed) else {
                bail!("unknown preset {preset:?}; known: {}", scenario::PRESETS.join(", "));
            };
            let outcomes = run_sweep(&cells, &out, jobs)?;
            let mut ok = true;
            for o in &outcomes {
                match &o.result {
                    Ok(s) => {
                        ok &= s.complete;
                        println!(
                            "{:<24} {} mean_l100_ms={}",
                            o.name,
                            if s.complete { "complete  " } else { "incomplete" },
                            s.metrics.mean_l100_ms.map_or("-".into(), |v| format!("{v:.1}"))
                        );
                    }
                    Err(e) => {
                        ok = false;
                        println!("{:<24} error      {e}", o.name);
                    }
                }
            }
            println!("combined table: {}", out.join("combined.csv").display());
            if !ok {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Estimate {
            size,
            rate,
            latency,
            nodes,
            degree,
            fragments,
        } => {
            let e = analytical_estimate(size, rate, latency, nodes, degree, fragments);
            println!("H={}", e.hops);
            println!("hop transmission: {} ms", e.hop_transmission_ms);
            println!("baseline latency: {} ms", e.baseline_ms);
            println!("fragmented latency (n={fragments}): {} ms", e.fragmented_ms);
            let rounds: Vec<String> = e.stagger_new.iter().map(u64::to_string).collect();
            println!("staggered new peers per round: {}", rounds.join(" "));
        }
        Command::Presets => {
            for p in scenario::PRESETS {
                println!("{p}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
