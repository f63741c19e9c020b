use serde::{Deserialize, Serialize};

use super::{OracleKind, RunRow};

/// Column order of `results.csv`.
pub const RESULTS_HEADER: &str =
    "episodes,seed,status,planner,transition_error,observation_error,reward_error,\
initial_belief_error,max_param_error,max_entry_error,policy_value,oracle_value,oracle,regret,\
shared_observation_actions,message";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn results_csv(rows: &[RunRow]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        let c = r.comparison.as_ref();
        let fields = [
            r.episodes.to_string(),
            r.seed.to_string(),
            if r.failure.is_some() { "failed" } else { "ok" }.to_string(),
            r.planner.clone().unwrap_or_default(),
            opt(c.map(|c| c.errors.transition)),
            opt(c.map(|c| c.errors.observation)),
            opt(c.map(|c| c.errors.reward)),
            opt(c.map(|c| c.errors.initial_belief)),
            opt(c.map(|c| c.errors.largest())),
            opt(c.map(|c| c.max_entry_error)),
            opt(r.policy_value),
            opt(r.oracle.map(|o| o.value)),
            match r.oracle.map(|o| o.kind) {
                Some(OracleKind::BruteForce) => "brute_force".into(),
                Some(OracleKind::Search) => "search".into(),
                None => String::new(),
            },
            opt(r.regret),
            r.shared_observation_actions.to_string(),
            quote(r.failure.as_deref().unwrap_or("")),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn timings_csv(rows: &[RunRow]) -> String {
    let mut out = String::from("episodes,seed,explore_ms,estimate_ms,plan_ms,evaluate_ms\n");
    for r in rows {
        let t = &r.timings;
        out.push_str(&format!(
            "{},{},{:.3},{:.3},{:.3},{:.3}\n",
            r.episodes, r.seed, t.explore_ms, t.estimate_ms, t.plan_ms, t.evaluate_ms
        ));
    }
    out
}

/// Median of the finite values; `None` when there are none.
pub fn median(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Per-N aggregate over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NSummary {
    pub episodes: u64,
    pub cells: usize,
    pub failures: usize,
    pub median_max_param_error: Option<f64>,
    pub median_max_entry_error: Option<f64>,
    pub median_regret: Option<f64>,
}

pub(super) fn summarize(rows: &[RunRow]) -> Vec<NSummary> {
    let mut out: Vec<NSummary> = Vec::new();
    for chunk in rows.chunk_by(|a, b| a.episodes == b.episodes) {
        let ok: Vec<&RunRow> = chunk.iter().filter(|r| r.failure.is_none()).collect();
        out.push(NSummary {
            episodes: chunk[0].episodes,
            cells: chunk.len(),
            failures: chunk.len() - ok.len(),
            median_max_param_error: median(
                ok.iter()
                    .filter_map(|r| r.comparison.as_ref().map(|c| c.errors.largest())),
            ),
            median_max_entry_error: median(
                ok.iter()
                    .filter_map(|r| r.comparison.as_ref().map(|c| c.max_entry_error)),
            ),
            median_regret: median(ok.iter().filter_map(|r| r.regret)),
        });
    }
    out
}
