//! Win-rate aggregation across seeds.

use serde::{Deserialize, Serialize};

use super::{EpisodeResult, HarnessError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub per_seed_win_rates: Vec<f64>,
    pub median_win_rate: f64,
    /// Population standard deviation of the per-seed win rates.
    pub std_win_rate: f64,
    pub mean_return: f64,
    pub mean_length: f64,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

pub fn population_std(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Some((values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt())
}

/// Reduce per-seed episode lists (outer index = seed) to summary statistics.
pub fn aggregate(per_seed: &[Vec<EpisodeResult>]) -> Result<Aggregate, HarnessError> {
    if per_seed.is_empty() || per_seed.iter().any(Vec::is_empty) {
        return Err(HarnessError::EmptyResults);
    }
    let rates: Vec<f64> =
        per_seed.iter().map(|eps| eps.iter().filter(|e| e.win).count() as f64 / eps.len() as f64).collect();
    let all: Vec<&EpisodeResult> = per_seed.iter().flatten().collect();
    let n = all.len() as f64;
    Ok(Aggregate {
        median_win_rate: median(&rates).expect("non-empty"),
        std_win_rate: population_std(&rates).expect("non-empty"),
        per_seed_win_rates: rates,
        mean_return: all.iter().map(|e| e.episode_return).sum::<f64>() / n,
        mean_length: all.iter().map(|e| e.length as f64).sum::<f64>() / n,
    })
}
