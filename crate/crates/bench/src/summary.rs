//! Cost-versus-time statistics over trials.

use grrt::Cost;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, Normal};

use crate::error::{BenchError, Result};
use crate::suite::TrialRecord;

pub const SUMMARY_FORMAT_VERSION: u32 = 1;

/// Default number of grid points.
pub const GRID_POINTS: usize = 200;

/// Earliest grid time in seconds.
pub const GRID_START: f64 = 1e-3;

/// Confidence level of the median intervals.
pub const MEDIAN_CONFIDENCE: f64 = 0.99;

/// `points` log-spaced times from `start` to `end` inclusive.
pub fn log_grid(start: f64, end: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![end],
        _ => {
            let (a, b) = (start.ln(), end.ln());
            (0..points)
                .map(|k| {
                    if k + 1 == points {
                        end
                    } else {
                        (a + (b - a) * k as f64 / (points - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// Lower median with infinite costs ordered above every finite one.
pub fn median(values: &[Cost]) -> Option<Cost> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort();
    Some(sorted[(sorted.len() - 1) / 2])
}

/// Zero-based order-statistic indices bounding the median with at least
/// `confidence` coverage, symmetric in rank. `None` when even the sample
/// extremes fall short.
pub fn median_ci_ranks(n: usize, confidence: f64) -> Option<(usize, usize)> {
    if n == 0 {
        return None;
    }
    let binomial = Binomial::new(0.5, n as u64).expect("valid binomial");
    let alpha = 1.0 - confidence;
    // Coverage of [X_(k), X_(n-k+1)] is 1 - 2 P(B <= k - 1).
    let mut best = None;
    for k in 1..=n.div_ceil(2) {
        if 2.0 * binomial.cdf(k as u64 - 1) <= alpha {
            best = Some(k);
        } else {
            break;
        }
    }
    best.map(|k| (k - 1, n - k))
}

/// Two-sided Mann-Whitney U test with tie-corrected normal approximation.
/// Returns `(U of a, p-value)`.
pub fn mann_whitney(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let mut pooled: Vec<(f64, usize)> = a
        .iter()
        .map(|&v| (v, 0))
        .chain(b.iter().map(|&v| (v, 1)))
        .collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut rank_sum_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j + 1 < pooled.len() && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        for item in &pooled[i..=j] {
            if item.1 == 0 {
                rank_sum_a += rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_a - n1 * (n1 + 1.0) / 2.0;
    let n = n1 + n2;
    let mean = n1 * n2 / 2.0;
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return (u, 1.0);
    }
    let z = (u - mean).abs() / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (u, (2.0 * (1.0 - normal.cdf(z))).min(1.0))
}

/// Statistics of one (planner, problem, dimension) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryCell {
    pub planner: String,
    pub problem: String,
    pub dim: usize,
    pub trials: usize,
    /// Fraction of trials solved at each grid time.
    pub success: Vec<f64>,
    pub median: Vec<Cost>,
    /// Median confidence bounds; `null` when the trial count is too small.
    pub ci_lower: Vec<Option<Cost>>,
    pub ci_upper: Vec<Option<Cost>>,
    pub initial_cost_median: Cost,
    pub final_cost_median: Cost,
    pub simplified_initial_median: Cost,
    pub simplified_final_median: Cost,
    /// Median time to the first solution, `null` if most trials never solved.
    pub initial_time_median: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub format: u32,
    pub confidence: f64,
    pub grid: Vec<f64>,
    pub cells: Vec<SummaryCell>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl SummaryTable {
    pub fn cell(&self, planner: &str, problem: &str, dim: usize) -> Option<&SummaryCell> {
        self.cells
            .iter()
            .find(|c| c.planner == planner && c.problem == problem && c.dim == dim)
    }
}

/// Latest final-event time over all records.
pub fn recorded_horizon(records: &[TrialRecord]) -> f64 {
    records
        .iter()
        .filter_map(|r| r.last().map(|e| e.elapsed))
        .fold(0.0, f64::max)
}

/// Step-interpolates every trial onto `grid` and aggregates per cell.
/// Grid times past the recorded horizon are clamped to it with a warning.
pub fn summarize(records: &[TrialRecord], grid: &[f64]) -> Result<SummaryTable> {
    let mut warnings = Vec::new();
    let horizon = recorded_horizon(records);
    let mut clamped = grid.to_vec();
    if grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(BenchError::Config("grid times must be finite and non-negative".into()));
    }
    if !records.is_empty() && grid.iter().any(|&t| t > horizon) {
        let msg = format!("grid times beyond the recorded horizon {horizon} s were clamped");
        log::warn!("{msg}");
        warnings.push(msg);
        for t in &mut clamped {
            *t = t.min(horizon);
        }
    }
    let mut keys: Vec<(String, String, usize)> = Vec::new();
    for r in records {
        let key = (r.planner.clone(), r.problem.clone(), r.dim);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut cells = Vec::with_capacity(keys.len());
    for (planner, problem, dim) in keys {
        let trials: Vec<&TrialRecord> = records
            .iter()
            .filter(|r| r.planner == planner && r.problem == problem && r.dim == dim)
            .collect();
        let n = trials.len();
        let ranks = median_ci_ranks(n, MEDIAN_CONFIDENCE);
        let mut success = Vec::with_capacity(grid.len());
        let mut med = Vec::with_capacity(grid.len());
        let mut lower = Vec::with_capacity(grid.len());
        let mut upper = Vec::with_capacity(grid.len());
        for &t in &clamped {
            let mut costs: Vec<Cost> = trials.iter().map(|r| r.cost_at(t)).collect();
            costs.sort();
            success.push(costs.iter().filter(|c| c.is_finite()).count() as f64 / n as f64);
            med.push(costs[(n - 1) / 2]);
            lower.push(ranks.map(|(l, _)| costs[l]));
            upper.push(ranks.map(|(_, u)| costs[u]));
        }
        let collect = |f: &dyn Fn(&TrialRecord) -> Cost| -> Cost {
            median(&trials.iter().map(|r| f(r)).collect::<Vec<_>>()).expect("non-empty cell")
        };
        let initial_time = median(
            &trials
                .iter()
                .map(|r| {
                    r.initial()
                        .map_or(Cost::INFINITE, |e| Cost::new(e.elapsed).unwrap_or(Cost::INFINITE))
                })
                .collect::<Vec<_>>(),
        )
        .filter(|c| c.is_finite())
        .map(Cost::value);
        cells.push(SummaryCell {
            planner,
            problem,
            dim,
            trials: n,
            success,
            median: med,
            ci_lower: lower,
            ci_upper: upper,
            initial_cost_median: collect(&|r| r.initial_cost()),
            final_cost_median: collect(&|r| r.final_cost()),
            simplified_initial_median: collect(&|r| r.simplified_initial),
            simplified_final_median: collect(&|r| r.simplified_final),
            initial_time_median: initial_time,
        });
    }
    Ok(SummaryTable {
        format: SUMMARY_FORMAT_VERSION,
        confidence: MEDIAN_CONFIDENCE,
        grid: grid.to_vec(),
        cells,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use grrt::{EventTag, PlannerEvent};

    fn c(v: f64) -> Cost {
        Cost::new(v).unwrap()
    }

    /// Binomial(n, 1/2) lower tail by direct summation of the mass function.
    fn tail(n: u64, k: u64) -> f64 {
        let mut total = 0.0;
        let mut coeff = 1.0f64;
        for i in 0..=k {
            if i > 0 {
                coeff *= (n - i + 1) as f64 / i as f64;
            }
            total += coeff;
        }
        total / 2f64.powi(n as i32)
    }

    fn ranks_oracle(n: usize, confidence: f64) -> Option<(usize, usize)> {
        (1..=n.div_ceil(2))
            .rev()
            .find(|&k| 1.0 - 2.0 * tail(n as u64, k as u64 - 1) >= confidence)
            .map(|k| (k - 1, n - k))
    }

    #[test]
    fn median_orders_infinity_last() {
        assert_eq!(median(&[c(1.0), c(2.0), Cost::INFINITE]), Some(c(2.0)));
        assert_eq!(median(&[Cost::INFINITE, Cost::INFINITE, c(3.0)]), Some(Cost::INFINITE));
        assert_eq!(median(&[c(4.0), c(1.0), c(3.0), c(2.0)]), Some(c(2.0)));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn ci_ranks_match_direct_binomial_sums() {
        // 1-based ranks 37 and 64 for 100 trials at 99%.
        assert_eq!(median_ci_ranks(100, 0.99), Some((36, 63)));
        for n in 1..=120 {
            assert_eq!(median_ci_ranks(n, 0.99), ranks_oracle(n, 0.99), "n = {n}");
            assert_eq!(median_ci_ranks(n, 0.95), ranks_oracle(n, 0.95), "n = {n}");
        }
        assert_eq!(median_ci_ranks(5, 0.99), None);
    }

    #[test]
    fn grid_is_log_spaced_and_inclusive() {
        let g = log_grid(1e-3, 10.0, 200);
        assert_eq!(g.len(), 200);
        assert!((g[0] - 1e-3).abs() < 1e-15);
        assert_eq!(g[199], 10.0);
        let ratio = g[1] / g[0];
        for w in g.windows(2) {
            assert!((w[1] / w[0] - ratio).abs() < 1e-9);
        }
    }

    #[test]
    fn mann_whitney_reference_values() {
        // Hand count: every b exceeds every a, so U = 0; the normal
        // approximation with n1 = n2 = 5 gives z = 2.611, p = 0.00902.
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [6.0, 7.0, 8.0, 9.0, 10.0];
        let (u, p) = mann_whitney(&a, &b);
        assert_eq!(u, 0.0);
        assert!((p - 0.009023).abs() < 1e-5, "{p}");
        let (_, p_same) = mann_whitney(&a, &a);
        assert!((p_same - 1.0).abs() < 1e-12);
    }

    fn record(planner: &str, events: &[(f64, f64, EventTag)]) -> TrialRecord {
        TrialRecord {
            planner: planner.into(),
            problem: "narrow_passage".into(),
            dim: 2,
            seed: 0,
            events: events
                .iter()
                .map(|&(t, v, tag)| PlannerEvent {
                    elapsed: t,
                    cost: if v.is_finite() { c(v) } else { Cost::INFINITE },
                    tag,
                })
                .collect(),
            simplified_initial: Cost::INFINITE,
            simplified_final: Cost::INFINITE,
        }
    }

    #[test]
    fn summary_of_three_trials() {
        use EventTag::*;
        let records = vec![
            record("a", &[(0.1, 1.0, Initial), (1.0, 1.0, Final)]),
            record("a", &[(0.2, 3.0, Initial), (0.5, 2.0, Improvement), (1.0, 2.0, Final)]),
            record("a", &[(1.0, f64::INFINITY, Final)]),
        ];
        let t = summarize(&records, &[0.05, 0.15, 0.3, 0.6, 1.0]).unwrap();
        let cell = t.cell("a", "narrow_passage", 2).unwrap();
        assert_eq!(cell.success, vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0]);
        assert_eq!(cell.median[0], Cost::INFINITE);
        assert_eq!(cell.median[2], c(3.0));
        assert_eq!(cell.median[4], c(2.0));
        assert_eq!(cell.final_cost_median, c(2.0));
        assert_eq!(cell.initial_time_median, Some(0.2));
        assert!(cell.ci_lower.iter().all(Option::is_none));
        assert!(t.warnings.is_empty());
    }

    #[test]
    fn grid_past_the_horizon_is_clamped() {
        let records = vec![record("a", &[(0.1, 1.0, EventTag::Initial), (1.0, 1.0, EventTag::Final)])];
        let t = summarize(&records, &[0.5, 2.0]).unwrap();
        assert_eq!(t.warnings.len(), 1);
        assert_eq!(t.grid, vec![0.5, 2.0]);
        assert_eq!(t.cells[0].median[1], c(1.0));
    }

    #[test]
    fn ci_brackets_the_median() {
        let records: Vec<TrialRecord> = (0..30)
            .map(|k| {
                let v = 1.0 + (k * 7 % 30) as f64 / 10.0;
                record("a", &[(0.1, v, EventTag::Initial), (1.0, v, EventTag::Final)])
            })
            .collect();
        let t = summarize(&records, &log_grid(1e-3, 1.0, 20)).unwrap();
        let cell = &t.cells[0];
        for k in 0..20 {
            if let (Some(lo), Some(hi)) = (cell.ci_lower[k], cell.ci_upper[k]) {
                assert!(lo <= cell.median[k] && cell.median[k] <= hi);
            }
        }
        for w in cell.success.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }
}
