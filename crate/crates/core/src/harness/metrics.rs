//! Per-episode records and the summary statistics computed from them.

use serde::{Deserialize, Serialize};

/// One CSV row: `episode,reward,steps,deaths,overrides,ms`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub episode: usize,
    pub reward: f64,
    pub steps: usize,
    pub deaths: usize,
    pub overrides: usize,
    pub ms: u64,
}

pub const CSV_HEADER: &str = "episode,reward,steps,deaths,overrides,ms";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("base perfectly safe: the base agent has no deaths to compare against")]
    BaseHasNoDeaths,
    #[error("runs cover different episode counts ({base} vs {other})")]
    EpisodeCountMismatch { base: usize, other: usize },
}

pub fn total_deaths(run: &[EpisodeMetrics]) -> usize {
    run.iter().map(|m| m.deaths).sum()
}

pub fn rewards(run: &[EpisodeMetrics]) -> Vec<f64> {
    run.iter().map(|m| m.reward).collect()
}

/// Deaths of each run divided by the base run's deaths.
pub fn relative_deaths(
    base: &[EpisodeMetrics],
    others: &[&[EpisodeMetrics]],
) -> Result<Vec<f64>, MetricsError> {
    let b = total_deaths(base);
    for o in others {
        if o.len() != base.len() {
            return Err(MetricsError::EpisodeCountMismatch {
                base: base.len(),
                other: o.len(),
            });
        }
    }
    if b == 0 {
        return Err(MetricsError::BaseHasNoDeaths);
    }
    Ok(others
        .iter()
        .map(|o| total_deaths(o) as f64 / b as f64)
        .collect())
}

/// Means of every full trailing window; entry `j` ends at episode
/// `j + window - 1`. Series shorter than the window yield nothing.
pub fn smoothed(values: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must be at least 1");
    if values.len() < window {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(values.len() + 1 - window);
    let mut sum: f64 = values[..window].iter().sum();
    out.push(sum / window as f64);
    for i in window..values.len() {
        sum += values[i] - values[i - window];
        out.push(sum / window as f64);
    }
    out
}

/// Trailing means where the first `window - 1` points average whatever
/// history exists.
pub fn trailing_mean(values: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must be at least 1");
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for i in 0..values.len() {
        sum += values[i];
        if i >= window {
            sum -= values[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

const TIE: f64 = 1e-9;

/// Highest full-window smoothed reward; the plain mean when the series is
/// shorter than the window.
pub fn max_smoothed(values: &[f64], window: usize) -> f64 {
    let s = smoothed(values, window);
    if s.is_empty() {
        return values.iter().sum::<f64>() / values.len().max(1) as f64;
    }
    s.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Mean of the last `window` values.
pub fn final_smoothed(values: &[f64], window: usize) -> f64 {
    let tail = &values[values.len().saturating_sub(window)..];
    tail.iter().sum::<f64>() / tail.len().max(1) as f64
}

/// Episode at which the full-window smoothed series first reaches `level`.
pub fn first_reaching(values: &[f64], window: usize, level: f64) -> Option<usize> {
    smoothed(values, window)
        .iter()
        .position(|&v| v >= level - TIE)
        .map(|j| j + window - 1)
}

/// Episode at which a run first attains its own maximum smoothed reward.
pub fn episode_of_max(values: &[f64], window: usize) -> Option<usize> {
    first_reaching(values, window, max_smoothed(values, window))
}

/// First episode at which `agent`'s smoothed reward reaches the maximum
/// smoothed reward `base` attains over its whole run; `None` if never.
pub fn episodes_to_baseline(base: &[f64], agent: &[f64], window: usize) -> Option<usize> {
    assert!(window >= 1, "window must be at least 1");
    if base.len() < window {
        return None;
    }
    first_reaching(agent, window, max_smoothed(base, window))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub episode: usize,
    pub mean: f64,
    /// Number of runs contributing to this point.
    pub count: usize,
}

/// Trailing-window reward curve averaged across runs.
pub fn learning_curve(runs: &[Vec<f64>], window: usize) -> Vec<CurvePoint> {
    let per_run: Vec<Vec<f64>> = runs.iter().map(|r| trailing_mean(r, window)).collect();
    let len = per_run.iter().map(Vec::len).max().unwrap_or(0);
    (0..len)
        .map(|i| {
            let vals: Vec<f64> = per_run.iter().filter_map(|r| r.get(i).copied()).collect();
            CurvePoint {
                episode: i,
                mean: vals.iter().sum::<f64>() / vals.len() as f64,
                count: vals.len(),
            }
        })
        .collect()
}

/// Outcome of the reward-shaping comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapingVerdict {
    /// Final smoothed reward of the penalised agent, per seed.
    pub shaped: Vec<f64>,
    /// Minimum final smoothed reward over the safe agents, per seed.
    pub safe_min: Vec<f64>,
    /// Per seed: shaped < safe_min.
    pub per_seed: Vec<bool>,
    /// The same comparison on the across-seed means.
    pub aggregate: bool,
}

impl ShapingVerdict {
    pub fn wins(&self) -> usize {
        self.per_seed.iter().filter(|&&b| b).count()
    }
}

/// Compares the penalised agent's final smoothed reward with the weakest of
/// the safe agents, seed by seed. `safe[k][s]` is safe agent `k` on seed `s`.
pub fn reward_shaping_compare(shaped: &[Vec<f64>], safe: &[Vec<Vec<f64>>], window: usize) -> ShapingVerdict {
    let shaped_final: Vec<f64> = shaped.iter().map(|r| final_smoothed(r, window)).collect();
    let safe_min: Vec<f64> = (0..shaped.len())
        .map(|s| {
            safe.iter()
                .map(|agent| final_smoothed(&agent[s], window))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let per_seed = shaped_final
        .iter()
        .zip(&safe_min)
        .map(|(a, b)| a < b)
        .collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let safe_means = safe
        .iter()
        .map(|agent| mean(&agent.iter().map(|r| final_smoothed(r, window)).collect::<Vec<_>>()))
        .fold(f64::INFINITY, f64::min);
    ShapingVerdict {
        aggregate: mean(&shaped_final) < safe_means,
        shaped: shaped_final,
        safe_min,
        per_seed,
    }
}
