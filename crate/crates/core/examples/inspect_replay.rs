//! Run one seed with replays enabled, then read a replay back and print how
//! each agent's knowledge and skill choice changed over the episode.
//!
//! `cargo run --release --example inspect_replay`

use skirmish::harness::{read_replay, run_experiment, ExperimentConfig};

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let config = ExperimentConfig {
        scenario: "zerg_5v5".into(),
        seeds: vec![0],
        episodes_per_seed: 2,
        out_dir: Some(dir.path().to_path_buf()),
        ..Default::default()
    };
    let report = run_experiment(&config)?;
    let episode = &report.episodes[0][0];
    let rel = episode.replay_path.as_deref().expect("replays are written when out_dir is set");
    let records = read_replay(&dir.path().join(rel))?;
    println!("{rel}: {} records, win {}, return {:.3}", records.len(), episode.win, episode.episode_return);
    let mut last: Vec<Option<String>> = vec![None; records[0].agents.len()];
    for r in &records[1..] {
        for (i, a) in r.agents.iter().enumerate() {
            if a.skill_id != last[i] {
                let far = a.knowledge.iter().filter(|(_, hops)| *hops > 0).count();
                println!(
                    "t={:>3} agent {i} -> {} (knows {} entities, {far} relayed)",
                    r.timestep,
                    a.skill_id.as_deref().unwrap_or("-"),
                    a.knowledge.len()
                );
                last[i] = a.skill_id.clone();
            }
            if let Some(task) = &a.subtask {
                println!("t={:>3} agent {i} directive: {}", r.timestep, task.text);
            }
        }
    }
    Ok(())
}
