//! Command-line front end: run experiments, inspect replays and skill libraries.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use skirmish::harness::{read_replay, run_ablation, run_experiment, BackendKind, ExperimentConfig};
use skirmish::skills::{bootstrap_library, SkillLibrary};
use skirmish::world::RewardMode;

#[derive(Parser)]
#[command(name = "skirmish", version, about = "Decentralized squad micromanagement experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded episodes and report per-seed win rates.
    Run(RunArgs),
    /// Run the full loop and each single-phase ablation.
    Ablation(RunArgs),
    /// Pretty-print a JSONL replay.
    Replay {
        path: PathBuf,
        /// Print every agent's planner record too.
        #[arg(long)]
        verbose: bool,
    },
    /// Inspect or move skill libraries.
    Skills {
        /// Load from this directory instead of the bootstrapped library.
        #[arg(long, global = true)]
        from: Option<PathBuf>,
        #[command(subcommand)]
        action: SkillsCmd,
    },
}

#[derive(Subcommand)]
enum SkillsCmd {
    List,
    Show { id: String },
    Dump { dir: PathBuf },
    Load { dir: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<String>,
    /// Number of seeds, 0..n.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long, value_enum)]
    backend: Option<BackendKind>,
    #[arg(long)]
    max_hops: Option<u32>,
    #[arg(long)]
    no_comm: bool,
    #[arg(long)]
    no_reflection: bool,
    #[arg(long)]
    no_synthesis: bool,
    #[arg(long, value_parser = parse_reward)]
    reward: Option<RewardMode>,
    #[arg(long)]
    skills: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_reward(s: &str) -> Result<RewardMode, String> {
    match s {
        "dense" => Ok(RewardMode::Dense),
        "sparse" => Ok(RewardMode::Sparse),
        _ => Err(format!("expected dense or sparse, got `{s}`")),
    }
}

impl RunArgs {
    fn into_config(self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.scenario {
            cfg.scenario = s;
        }
        if let Some(n) = self.seeds {
            cfg.seeds = (0..n).collect();
        }
        if let Some(n) = self.episodes {
            cfg.episodes_per_seed = n;
        }
        if let Some(b) = self.backend {
            cfg.backend = b;
        }
        if let Some(h) = self.max_hops {
            cfg.max_hops = h;
        }
        cfg.comm_enabled &= !self.no_comm;
        cfg.reflection_enabled &= !self.no_reflection;
        cfg.synthesis_enabled &= !self.no_synthesis;
        if self.reward.is_some() {
            cfg.reward_mode = self.reward;
        }
        if self.skills.is_some() {
            cfg.skills_dir = self.skills;
        }
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        if self.out.is_some() {
            cfg.out_dir = self.out;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load_library(from: Option<&Path>) -> Result<SkillLibrary> {
    match from {
        Some(dir) => SkillLibrary::load_dir(dir).with_context(|| format!("loading skills from {}", dir.display())),
        None => Ok(bootstrap_library()),
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run(args) => {
            let cfg = args.into_config()?;
            let report = run_experiment(&cfg)?;
            let s = &report.summary;
            for seed in &s.per_seed {
                println!(
                    "seed {:>3}  win {:.3}  return {:>7.3}  length {:>6.1}",
                    seed.seed, seed.win_rate, seed.mean_return, seed.mean_length
                );
            }
            println!("median win rate {:.3} (std {:.3}) over {} seeds", s.median_win_rate, s.std_win_rate, s.per_seed.len());
            if s.backend_failures > 0 {
                println!("backend failures (mock fallback used): {}", s.backend_failures);
            }
        }
        Command::Ablation(args) => {
            let cfg = args.into_config()?;
            let report = run_ablation(&cfg)?;
            println!("{:<14} {:>7} {:>7}  per-seed", "condition", "median", "std");
            for row in &report.rows {
                let seeds: Vec<String> = row.per_seed_win_rates.iter().map(|r| format!("{r:.3}")).collect();
                println!("{:<14} {:>7.3} {:>7.3}  {}", row.condition, row.median_win_rate, row.std_win_rate, seeds.join(" "));
            }
        }
        Command::Replay { path, verbose } => {
            let records = read_replay(&path)?;
            for r in &records {
                let allies = r.state.allies.iter().filter(|u| u.alive).count();
                let enemies = r.state.enemies.iter().filter(|u| u.alive).count();
                let actions: Vec<String> = r.ally_actions.iter().map(|a| a.to_string()).collect();
                println!(
                    "t={:>3} allies={} enemies={} reward={:.4} actions=[{}]{}",
                    r.timestep,
                    allies,
                    enemies,
                    r.reward,
                    actions.join(","),
                    if r.win { " WIN" } else { "" }
                );
                if verbose {
                    for (i, a) in r.agents.iter().enumerate() {
                        let known: Vec<String> = a.knowledge.iter().map(|(k, h)| format!("{:?}#{}@{h}", k.team, k.id)).collect();
                        println!(
                            "    agent {i}: skill={} roi={} known=[{}]",
                            a.skill_id.as_deref().unwrap_or("-"),
                            a.region_of_interest.map_or("-".into(), |r| r.to_string()),
                            known.join(" ")
                        );
                    }
                }
            }
            println!("{} records", records.len());
        }
        Command::Skills { from, action } => {
            let lib = load_library(from.as_deref())?;
            match action {
                SkillsCmd::List => {
                    for s in lib.iter() {
                        let first = s.doc.lines().next().unwrap_or("");
                        println!("{:<32} {:<16} {first}", s.skill_id, s.control_template.name());
                    }
                }
                SkillsCmd::Show { id } => {
                    let Some(skill) = lib.get(&id) else { bail!("no skill `{id}`") };
                    println!("{}", serde_json::to_string_pretty(&skill.to_file())?);
                }
                SkillsCmd::Dump { dir } => {
                    let n = lib.dump_dir(&dir)?;
                    println!("wrote {n} skills to {}", dir.display());
                }
                SkillsCmd::Load { dir } => {
                    let loaded = load_library(Some(&dir))?;
                    println!("loaded {} skills from {}", loaded.len(), dir.display());
                    for s in loaded.iter() {
                        println!("  {}", s.skill_id);
                    }
                }
            }
        }
    }
    Ok(())
}
