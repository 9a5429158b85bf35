//! Turns a directory of run CSVs into a summary table and an SVG plot.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::metrics::{self, learning_curve, EpisodeMetrics};
use super::registry::AgentKind;
use super::run::read_csv;
use super::HarnessError;

/// Runs found in a directory, keyed by agent then seed.
pub type RunSet = BTreeMap<String, BTreeMap<u64, Vec<EpisodeMetrics>>>;

/// Reads every `<agent>_<seed>.csv` in `dir`.
pub fn load_runs(dir: &Path) -> Result<RunSet, HarnessError> {
    let mut runs = RunSet::new();
    let entries = fs::read_dir(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    for path in paths {
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        let Some((agent, seed)) = stem.rsplit_once('_') else {
            continue;
        };
        let (Ok(seed), Ok(_)) = (seed.parse::<u64>(), AgentKind::parse(agent)) else {
            continue;
        };
        runs.entry(agent.to_string())
            .or_default()
            .insert(seed, read_csv(&path)?);
    }
    Ok(runs)
}

/// Plain-text table, one line per agent, averaged over seeds.
pub fn summary_table(runs: &RunSet, window: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<16} {:>5} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "agent", "seeds", "max_rew", "final_rew", "deaths", "rel_death", "overrides"
    );
    for (agent, seeds) in runs {
        let n = seeds.len() as f64;
        let mean = |f: &dyn Fn(&[EpisodeMetrics]) -> f64| seeds.values().map(|r| f(r)).sum::<f64>() / n;
        let max_rew = mean(&|r| metrics::max_smoothed(&metrics::rewards(r), window));
        let final_rew = mean(&|r| metrics::final_smoothed(&metrics::rewards(r), window));
        let deaths = mean(&|r| metrics::total_deaths(r) as f64);
        let overrides = mean(&|r| r.iter().map(|m| m.overrides).sum::<usize>() as f64);
        let base_name = AgentKind::parse(agent).map(|k| k.vanilla().to_string()).ok();
        let rel = base_name
            .and_then(|b| runs.get(&b))
            .map(|base| {
                let b: usize = base.values().map(|r| metrics::total_deaths(r)).sum();
                let a: usize = seeds.values().map(|r| metrics::total_deaths(r)).sum();
                if b == 0 {
                    "base safe".to_string()
                } else {
                    format!("{:.3}", a as f64 / b as f64)
                }
            })
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{agent:<16} {:>5} {max_rew:>10.3} {final_rew:>10.3} {deaths:>10.1} {rel:>10} {overrides:>10.1}",
            seeds.len()
        );
    }
    out
}

const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Learning curves (trailing mean, averaged over seeds) as a standalone SVG.
pub fn learning_curve_svg(runs: &RunSet, window: usize) -> String {
    let (w, h, pad) = (800.0, 480.0, 50.0);
    let curves: Vec<(&String, Vec<f64>)> = runs
        .iter()
        .map(|(agent, seeds)| {
            let series: Vec<Vec<f64>> = seeds.values().map(|r| metrics::rewards(r)).collect();
            (agent, learning_curve(&series, window).iter().map(|p| p.mean).collect())
        })
        .collect();
    let len = curves.iter().map(|(_, c)| c.len()).max().unwrap_or(1).max(2);
    let all = curves.iter().flat_map(|(_, c)| c.iter().copied());
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (lo, hi) = if lo.is_finite() && hi > lo { (lo, hi) } else { (-1.0, 1.0) };
    let sx = |i: usize| pad + (w - 2.0 * pad) * i as f64 / (len - 1) as f64;
    let sy = |v: f64| h - pad - (h - 2.0 * pad) * (v - lo) / (hi - lo);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<polyline points="{pad},{pad} {pad},{b} {r},{b}" fill="none" stroke="black"/>"#,
        b = h - pad,
        r = w - pad
    );
    for (v, y) in [(lo, sy(lo)), (hi, sy(hi))] {
        let _ = writeln!(svg, r#"<text x="5" y="{y:.1}">{v:.2}</text>"#);
    }
    let _ = writeln!(
        svg,
        r#"<text x="{x:.1}" y="{y:.1}">episode ({len})</text>"#,
        x = w / 2.0 - 30.0,
        y = h - 15.0
    );
    for (k, (agent, c)) in curves.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let step = (c.len() / 1000).max(1);
        let pts: Vec<String> = c
            .iter()
            .enumerate()
            .step_by(step)
            .map(|(i, &v)| format!("{:.1},{:.1}", sx(i), sy(v)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{y}" fill="{color}">{agent}</text>"#,
            x = w - pad - 110.0,
            y = pad + 16.0 * (k as f64 + 1.0)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ep(i: usize, reward: f64, deaths: usize) -> EpisodeMetrics {
        EpisodeMetrics {
            episode: i,
            reward,
            steps: 3,
            deaths,
            overrides: 0,
            ms: 0,
        }
    }

    #[test]
    fn table_lists_agents_with_relative_deaths() {
        let mut runs = RunSet::new();
        runs.entry("q".into()).or_default().insert(1, vec![ep(0, -1.0, 1), ep(1, 1.0, 0)]);
        runs.entry("q+fg".into()).or_default().insert(1, vec![ep(0, 1.0, 0), ep(1, 1.0, 0)]);
        let t = summary_table(&runs, 1);
        assert!(t.lines().any(|l| l.starts_with("q+fg") && l.contains("0.000")));
        assert!(t.lines().any(|l| l.starts_with("q ") && l.contains("1.000")));
        let svg = learning_curve_svg(&runs, 1);
        assert!(svg.starts_with("<svg") && svg.contains("q+fg"));
    }
}
