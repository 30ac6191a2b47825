//! Trial execution.

use grrt::{make_problem, shortcut, simplify, Cost, EventTag, Path, Planner, PlannerEvent, Problem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{PlannerEntry, SuiteConfig};
use crate::error::Result;

/// Random stream reserved for post-processing, distinct from the planner's.
const SHORTCUT_STREAM: u64 = 3;

/// Everything recorded about one planner run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub planner: String,
    pub problem: String,
    pub dim: usize,
    pub seed: u64,
    /// Cost trace ending in exactly one `final` event.
    pub events: Vec<PlannerEvent>,
    pub simplified_initial: Cost,
    pub simplified_final: Cost,
}

impl TrialRecord {
    pub fn initial(&self) -> Option<&PlannerEvent> {
        self.events.iter().find(|e| e.tag == EventTag::Initial)
    }

    pub fn last(&self) -> Option<&PlannerEvent> {
        self.events.iter().rev().find(|e| e.tag == EventTag::Final)
    }

    pub fn final_cost(&self) -> Cost {
        self.last().map_or(Cost::INFINITE, |e| e.cost)
    }

    pub fn initial_cost(&self) -> Cost {
        self.initial().map_or(Cost::INFINITE, |e| e.cost)
    }

    /// Best cost known at time `t`; infinite before the first solution.
    pub fn cost_at(&self, t: f64) -> Cost {
        let mut best = Cost::INFINITE;
        for e in &self.events {
            if e.elapsed > t {
                break;
            }
            best = best.min(e.cost);
        }
        best
    }

    /// Checks ordering, monotonicity and tag counts of the trace.
    pub fn check(&self) -> std::result::Result<(), String> {
        let initial = self.events.iter().filter(|e| e.tag == EventTag::Initial).count();
        let last = self.events.iter().filter(|e| e.tag == EventTag::Final).count();
        if initial > 1 || last != 1 {
            return Err(format!("{initial} initial and {last} final events"));
        }
        if self.events.last().map(|e| e.tag) != Some(EventTag::Final) {
            return Err("final event is not last".into());
        }
        for w in self.events.windows(2) {
            if w[1].elapsed < w[0].elapsed {
                return Err("events are not time-sorted".into());
            }
            if w[1].cost > w[0].cost {
                return Err("cost increased".into());
            }
        }
        Ok(())
    }
}

/// One cell of the suite matrix.
#[derive(Clone, Debug)]
pub struct TrialSpec {
    pub planner: PlannerEntry,
    pub problem_id: String,
    pub problem: Problem,
    pub seed: u64,
}

/// Expands the matrix in planner, problem, dimension, seed order.
pub fn expand(config: &SuiteConfig) -> Result<Vec<TrialSpec>> {
    config.validate()?;
    let mut specs = Vec::new();
    for planner in &config.planners {
        for entry in &config.problems {
            let kind = entry.kind()?;
            for &dim in &entry.dims {
                let problem = make_problem(kind, dim, &entry.params)?;
                for k in 0..config.trials {
                    specs.push(TrialSpec {
                        planner: planner.clone(),
                        problem_id: kind.as_str().to_string(),
                        problem: problem.clone(),
                        seed: config.seed_base.wrapping_add(k as u64),
                    });
                }
            }
        }
    }
    Ok(specs)
}

fn simplified(
    path: Option<&Path>,
    problem: &Problem,
    budget: Option<usize>,
    rng: &mut ChaCha8Rng,
) -> Result<Cost> {
    match path {
        None => Ok(Cost::INFINITE),
        Some(p) => {
            let iterations = budget.unwrap_or_else(|| simplify::default_budget(p));
            Ok(shortcut(p, problem, iterations, rng)?.cost())
        }
    }
}

/// Runs one trial. Shortcutting is applied to the initial and the final
/// solution after planning ends, so it never influences the search.
pub fn run_trial(config: &SuiteConfig, spec: &TrialSpec) -> Result<TrialRecord> {
    let planner_config = config.trial_config(&spec.planner, spec.seed)?;
    let mut planner = Planner::new(&spec.problem, planner_config)?;
    let mut initial_path = None;
    let outcome = planner.run_inspect(|event, p| {
        if event.tag == EventTag::Initial {
            initial_path = p.best_path();
        }
    });
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(SHORTCUT_STREAM);
    let simplified_initial =
        simplified(initial_path.as_ref(), &spec.problem, config.shortcut_budget, &mut rng)?;
    let simplified_final =
        simplified(outcome.path.as_ref(), &spec.problem, config.shortcut_budget, &mut rng)?;
    Ok(TrialRecord {
        planner: spec.planner.name().to_string(),
        problem: spec.problem_id.clone(),
        dim: spec.problem.dim(),
        seed: spec.seed,
        events: outcome.events,
        simplified_initial,
        simplified_final,
    })
}

/// Runs every trial of the matrix on `config.threads` workers. Records come
/// back in matrix order regardless of scheduling.
pub fn run_suite(config: &SuiteConfig) -> Result<Vec<TrialRecord>> {
    let specs = expand(config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()?;
    pool.install(|| specs.par_iter().map(|s| run_trial(config, s)).collect())
}
