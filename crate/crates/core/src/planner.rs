//! Greedy bidirectional RRT* and an RRT-Connect baseline.
//!
//! Each iteration computes the current sampling bound, draws a sample from
//! the matching spheroid (or the whole domain before the first solution),
//! extends the active tree toward it, greedily connects the other tree to
//! the new vertex and swaps the tree roles. With probability `epsilon` the
//! bound is the greedy transverse diameter of the current solution instead of
//! its cost; `epsilon = 0` gives the purely informed variant.

use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::VertexId;
use crate::space::{
    self, sample_uniform_box, sample_uniform_phs, spheroid_measure, Cost, Path,
    ProlateHyperspheroid, State,
};
use crate::tree::{bridge_cost, extract_path, rewire_radius, SolutionBridge, Tree};
use crate::world::Problem;

const START: usize = 0;
const GOAL: usize = 1;

/// Steering range as a fraction of the domain diagonal when not configured.
pub const DEFAULT_MAX_EDGE_FRACTION: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    GreedyRrtStar,
    RrtConnect,
}

/// Which solutions feed the greedy transverse diameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreedyScope {
    /// Maximum heuristic over the ancestry of every recorded bridge.
    AllBridges,
    /// Maximum heuristic along the current best solution only.
    BestBridge,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ClockMode {
    Wall,
    /// Elapsed time advances by a fixed amount per iteration, making event
    /// timestamps reproducible.
    Virtual { seconds_per_iteration: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub algorithm: Algorithm,
    /// Probability of sampling the greedy informed set once a solution exists.
    pub epsilon: f64,
    /// Steering range; defaults to a fifth of the domain diagonal.
    pub max_edge: Option<f64>,
    /// Rewiring-radius constant.
    pub eta: f64,
    /// Use nearest-only parenting and no rewiring until a first solution exists.
    pub delay_rewiring: bool,
    pub prune: bool,
    /// Let the smaller tree extend when sizes differ by more than 2x.
    pub balanced: bool,
    pub greedy_scope: GreedyScope,
    pub seed: u64,
    pub time_limit: Option<f64>,
    pub iteration_limit: Option<u64>,
    pub clock: ClockMode,
    pub stop_at_first_solution: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            algorithm: Algorithm::GreedyRrtStar,
            epsilon: 0.9,
            max_edge: None,
            eta: 1.001,
            delay_rewiring: true,
            prune: true,
            balanced: true,
            greedy_scope: GreedyScope::BestBridge,
            seed: 0,
            time_limit: Some(1.0),
            iteration_limit: None,
            clock: ClockMode::Wall,
            stop_at_first_solution: false,
        }
    }
}

impl PlannerConfig {
    pub fn rrt_connect() -> Self {
        PlannerConfig {
            algorithm: Algorithm::RrtConnect,
            epsilon: 0.0,
            delay_rewiring: false,
            prune: false,
            stop_at_first_solution: true,
            ..PlannerConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in [0, 1], got {}",
                self.epsilon
            )));
        }
        if let Some(m) = self.max_edge {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::InvalidArgument(format!("max_edge must be positive, got {m}")));
            }
        }
        if !(self.eta > 0.0) {
            return Err(Error::InvalidArgument("eta must be positive".into()));
        }
        if self.time_limit.is_none() && self.iteration_limit.is_none() {
            return Err(Error::InvalidArgument(
                "a time limit or an iteration limit is required".into(),
            ));
        }
        if let Some(t) = self.time_limit {
            if !(t >= 0.0) {
                return Err(Error::InvalidArgument("time_limit must be non-negative".into()));
            }
        }
        if let ClockMode::Virtual {
            seconds_per_iteration,
        } = self.clock
        {
            if !(seconds_per_iteration > 0.0) {
                return Err(Error::InvalidArgument(
                    "virtual clock needs a positive tick".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventTag {
    Initial,
    Improvement,
    Final,
}

impl EventTag {
    pub fn as_str(self) -> &'static str {
        match self {
            EventTag::Initial => "initial",
            EventTag::Improvement => "improvement",
            EventTag::Final => "final",
        }
    }
}

impl fmt::Display for EventTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A point of the anytime cost trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerEvent {
    pub elapsed: f64,
    pub cost: Cost,
    pub tag: EventTag,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtendStatus {
    Reached(VertexId),
    Advanced(VertexId),
    Trapped,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PlannerStats {
    pub iterations: u64,
    pub greedy_draws: u64,
    pub informed_draws: u64,
    pub latch_updates: u64,
    pub pruned_vertices: u64,
    pub bridges_recorded: u64,
    pub sample_fallbacks: u64,
    pub swaps: u64,
}

#[derive(Clone, Copy, Debug)]
struct Bridge {
    link: SolutionBridge,
    /// Straight-line bound on any cost this bridge can reach through rewiring.
    lower_bound: f64,
}

/// Moves from `from` toward `to` by at most `max_edge`.
pub fn steer(from: &State, to: &State, max_edge: f64) -> State {
    State::from_vec_unchecked(steer_coords(from.coords(), to.coords(), max_edge))
}

fn steer_coords(from: &[f64], to: &[f64], max_edge: f64) -> Vec<f64> {
    let d = space::distance(from, to);
    if d <= max_edge {
        to.to_vec()
    } else {
        space::lerp(from, to, max_edge / d)
    }
}

/// Planner state: both trees, the solution bridges and the cost latches.
pub struct Planner<'p> {
    problem: &'p Problem,
    config: PlannerConfig,
    max_edge: f64,
    free_measure: f64,
    connect_cap: usize,
    trees: [Tree; 2],
    extender: usize,
    bridges: Vec<Bridge>,
    c_best_latch: Cost,
    c_max_latch: Cost,
    best: Option<SolutionBridge>,
    reported: Cost,
    solved: bool,
    sample_rng: ChaCha8Rng,
    coin_rng: ChaCha8Rng,
    phs: Option<ProlateHyperspheroid>,
    events: Vec<PlannerEvent>,
    stats: PlannerStats,
    started: Option<Instant>,
}

impl<'p> Planner<'p> {
    pub fn new(problem: &'p Problem, config: PlannerConfig) -> Result<Self> {
        config.validate()?;
        let diagonal = problem.bounds().diagonal();
        let max_edge = config
            .max_edge
            .unwrap_or(DEFAULT_MAX_EDGE_FRACTION * diagonal);
        let mut sample_rng = ChaCha8Rng::seed_from_u64(config.seed);
        sample_rng.set_stream(1);
        let mut coin_rng = ChaCha8Rng::seed_from_u64(config.seed);
        coin_rng.set_stream(2);
        Ok(Planner {
            problem,
            max_edge,
            free_measure: problem.bounds().measure(),
            connect_cap: ((diagonal / max_edge) * 4.0).ceil().max(1.0) as usize,
            trees: [
                Tree::new(problem.start().clone()),
                Tree::new(problem.goal().clone()),
            ],
            extender: START,
            bridges: Vec::new(),
            c_best_latch: Cost::INFINITE,
            c_max_latch: Cost::INFINITE,
            best: None,
            reported: Cost::INFINITE,
            solved: false,
            sample_rng,
            coin_rng,
            phs: None,
            events: Vec::new(),
            stats: PlannerStats::default(),
            started: None,
            config,
        })
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    pub fn max_edge(&self) -> f64 {
        self.max_edge
    }

    pub fn start_tree(&self) -> &Tree {
        &self.trees[START]
    }

    pub fn goal_tree(&self) -> &Tree {
        &self.trees[GOAL]
    }

    /// True when the start tree extends next.
    pub fn start_tree_extends(&self) -> bool {
        self.extender == START
    }

    pub fn bridges(&self) -> Vec<SolutionBridge> {
        self.bridges.iter().map(|b| b.link).collect()
    }

    pub fn c_best_latch(&self) -> Cost {
        self.c_best_latch
    }

    pub fn c_max_latch(&self) -> Cost {
        self.c_max_latch
    }

    /// Current cost of the best recorded solution, reflecting any rewiring
    /// since it was selected.
    pub fn best_cost(&self) -> Cost {
        self.best.map_or(Cost::INFINITE, |link| {
            bridge_cost(link, &self.trees[START], &self.trees[GOAL]).unwrap_or(Cost::INFINITE)
        })
    }

    pub fn best_path(&self) -> Option<Path> {
        let link = self.best?;
        extract_path(link, &self.trees[START], &self.trees[GOAL]).ok()
    }

    pub fn events(&self) -> &[PlannerEvent] {
        &self.events
    }

    pub fn stats(&self) -> &PlannerStats {
        &self.stats
    }

    pub fn elapsed(&self) -> f64 {
        match self.config.clock {
            ClockMode::Wall => self.started.map_or(0.0, |t| t.elapsed().as_secs_f64()),
            ClockMode::Virtual {
                seconds_per_iteration,
            } => self.stats.iterations as f64 * seconds_per_iteration,
        }
    }

    fn budget_exhausted(&self) -> bool {
        if let Some(limit) = self.config.iteration_limit {
            if self.stats.iterations >= limit {
                return true;
            }
        }
        if let Some(limit) = self.config.time_limit {
            if self.elapsed() >= limit {
                return true;
            }
        }
        false
    }

    /// Runs until the budget is spent, reporting every cost event to `observer`.
    pub fn run(&mut self, mut observer: impl FnMut(&PlannerEvent)) -> PlanOutcome {
        self.run_inspect(|event, _| observer(event))
    }

    /// Like [`Planner::run`], but the observer also sees the planner, e.g. to
    /// copy the solution path at the moment it is reported.
    pub fn run_inspect(&mut self, mut observer: impl FnMut(&PlannerEvent, &Planner<'p>)) -> PlanOutcome {
        if self.started.is_none() {
            self.started = Some(Instant::now());
        }
        let stop_early = self.config.stop_at_first_solution
            || self.config.algorithm == Algorithm::RrtConnect;
        let mut forwarded = self.events.len();
        while !self.budget_exhausted() && !(stop_early && self.solved) {
            self.step();
            for e in &self.events[forwarded..] {
                observer(e, self);
            }
            forwarded = self.events.len();
        }
        let last = PlannerEvent {
            elapsed: self.elapsed(),
            cost: self.best_cost(),
            tag: EventTag::Final,
        };
        self.events.push(last);
        observer(&last, self);
        PlanOutcome {
            path: self.best_path(),
            cost: self.best_cost(),
            events: self.events.clone(),
            stats: self.stats.clone(),
        }
    }

    /// One iteration of the main loop.
    pub fn step(&mut self) {
        if self.started.is_none() {
            self.started = Some(Instant::now());
        }
        self.stats.iterations += 1;
        let bound = match self.config.algorithm {
            Algorithm::GreedyRrtStar => self.compute_best_cost(),
            Algorithm::RrtConnect => Cost::INFINITE,
        };
        let target = self.draw_sample(bound);
        let a = self.extender;
        let b = 1 - a;
        match self.extend(a, target.coords(), bound) {
            ExtendStatus::Trapped => {}
            ExtendStatus::Reached(id) | ExtendStatus::Advanced(id) => {
                let reached = self.trees[a].coords_of(id).to_vec();
                if let ExtendStatus::Reached(other) = self.connect(b, &reached, bound) {
                    let link = if a == START {
                        SolutionBridge {
                            start_vertex: id,
                            goal_vertex: other,
                        }
                    } else {
                        SolutionBridge {
                            start_vertex: other,
                            goal_vertex: id,
                        }
                    };
                    self.record_bridge(link);
                }
            }
        }
        self.swap();
    }

    fn swap(&mut self) {
        self.extender = 1 - self.extender;
        self.stats.swaps += 1;
        if self.config.balanced {
            let (s, g) = (self.trees[START].len(), self.trees[GOAL].len());
            if s > 2 * g {
                self.extender = GOAL;
            } else if g > 2 * s {
                self.extender = START;
            }
        }
    }

    fn record_bridge(&mut self, link: SolutionBridge) {
        let start = self.problem.start().coords();
        let goal = self.problem.goal().coords();
        let a = self.trees[START].coords_of(link.start_vertex);
        let b = self.trees[GOAL].coords_of(link.goal_vertex);
        let lower_bound = space::distance(start, a) + space::distance(a, b) + space::distance(b, goal);
        self.bridges.push(Bridge { link, lower_bound });
        self.stats.bridges_recorded += 1;
        self.solved = true;
        let cost = bridge_cost(link, &self.trees[START], &self.trees[GOAL])
            .expect("fresh bridge endpoints are live");
        if cost < self.best_cost() {
            self.best = Some(link);
        }
        self.report();
    }

    fn report(&mut self) {
        let cost = self.best_cost();
        if cost < self.reported {
            let tag = if self.reported.is_finite() {
                EventTag::Improvement
            } else {
                EventTag::Initial
            };
            self.reported = cost;
            let elapsed = self.elapsed();
            self.events.push(PlannerEvent { elapsed, cost, tag });
        }
    }

    /// Refreshes bridge costs, drops stale bridges and returns the cheapest.
    fn refresh_bridges(&mut self) -> Option<(SolutionBridge, Cost)> {
        let (ts, tg) = (&self.trees[START], &self.trees[GOAL]);
        self.bridges
            .retain(|b| ts.is_live(b.link.start_vertex) && tg.is_live(b.link.goal_vertex));
        let mut best: Option<(usize, Cost)> = None;
        for (i, b) in self.bridges.iter().enumerate() {
            let c = bridge_cost(b.link, ts, tg).expect("live bridge");
            if best.is_none_or(|(_, bc)| c < bc) {
                best = Some((i, c));
            }
        }
        let (best_index, best_cost) = best?;
        let best_link = self.bridges[best_index].link;
        if self.config.greedy_scope == GreedyScope::BestBridge {
            // A bridge whose straight-line bound already reaches the best cost
            // can never become strictly cheaper.
            let mut i = 0;
            self.bridges.retain(|b| {
                let keep = i == best_index || b.lower_bound < best_cost.value();
                i += 1;
                keep
            });
        }
        Some((best_link, best_cost))
    }

    /// Sampling bound for this iteration.
    ///
    /// Returns `∞` before any solution exists. Otherwise finds the cheapest
    /// bridge cost `c_i` and flips an `epsilon` coin: on the greedy side, a
    /// cost below the latched best refreshes the latch and the greedy
    /// transverse diameter, which is returned; on the informed side the latch
    /// is set to `c_i` and `c_i` is returned.
    pub fn compute_best_cost(&mut self) -> Cost {
        if self.bridges.is_empty() {
            return Cost::INFINITE;
        }
        let Some((link, c_i)) = self.refresh_bridges() else {
            return Cost::INFINITE;
        };
        self.best = Some(link);
        self.report();
        let u: f64 = self.coin_rng.random();
        if self.config.epsilon > u {
            self.stats.greedy_draws += 1;
            if c_i < self.c_best_latch {
                self.c_best_latch = c_i;
                self.c_max_latch = self.greedy_diameter(link);
                debug_assert!(
                    self.config.greedy_scope == GreedyScope::AllBridges
                        || self.c_max_latch.value() <= c_i.value() + 1e-9
                );
                self.stats.latch_updates += 1;
                if self.config.prune {
                    let (start, goal) = (self.problem.start(), self.problem.goal());
                    let removed = self.trees[START].prune(self.c_max_latch, start, goal)
                        + self.trees[GOAL].prune(self.c_max_latch, start, goal);
                    self.stats.pruned_vertices += removed as u64;
                }
            }
            self.c_max_latch
        } else {
            self.stats.informed_draws += 1;
            self.c_best_latch = c_i;
            c_i
        }
    }

    fn greedy_diameter(&self, best: SolutionBridge) -> Cost {
        let start = self.problem.start().coords();
        let goal = self.problem.goal().coords();
        let links: Vec<SolutionBridge> = match self.config.greedy_scope {
            GreedyScope::BestBridge => vec![best],
            GreedyScope::AllBridges => self.bridges.iter().map(|b| b.link).collect(),
        };
        let mut max = 0.0f64;
        for link in links {
            for (tree, id) in [
                (&self.trees[START], link.start_vertex),
                (&self.trees[GOAL], link.goal_vertex),
            ] {
                for v in tree.ancestry(id) {
                    max = max.max(space::heuristic(tree.coords_of(v), start, goal));
                }
            }
        }
        Cost::from_f64_unchecked(max)
    }

    fn spheroid(&mut self, bound: Cost) -> Result<&ProlateHyperspheroid> {
        let stale = self
            .phs
            .as_ref()
            .is_none_or(|p| p.d_transverse() != bound);
        if stale {
            let transverse = Cost::from_f64_unchecked(bound.value().max(self.problem.focal_distance()));
            self.phs = Some(ProlateHyperspheroid::new(
                self.problem.start().clone(),
                self.problem.goal().clone(),
                transverse,
            )?);
        }
        Ok(self.phs.as_ref().expect("spheroid cached"))
    }

    /// Draws from the spheroid of transverse diameter `bound` until a sample
    /// lands inside the bounds; uniform over the domain when `bound` is infinite.
    pub fn sample(&mut self, bound: Cost) -> Result<State> {
        if !bound.is_finite() {
            return Ok(sample_uniform_box(self.problem.bounds(), &mut self.sample_rng));
        }
        let attempts = self.retry_budget();
        let phs = self.spheroid(bound)?.clone();
        for _ in 0..attempts {
            let x = sample_uniform_phs(&phs, &mut self.sample_rng);
            if self.problem.bounds().contains(x.coords()) {
                return Ok(x);
            }
        }
        Err(Error::SampleBudgetExhausted { attempts })
    }

    fn retry_budget(&self) -> usize {
        100 * self.problem.dim()
    }

    /// Uniform draw from the domain restricted to the spheroid.
    fn sample_box_restricted(&mut self, bound: Cost) -> Result<State> {
        let attempts = self.retry_budget();
        let start = self.problem.start().coords();
        let goal = self.problem.goal().coords();
        for _ in 0..attempts {
            let x = sample_uniform_box(self.problem.bounds(), &mut self.sample_rng);
            if space::heuristic(x.coords(), start, goal) <= bound.value() {
                return Ok(x);
            }
        }
        Err(Error::SampleBudgetExhausted { attempts })
    }

    /// Planner-side sampling: rejection from whichever of the spheroid and
    /// the domain is smaller, falling back to the other and finally to a
    /// plain domain sample.
    fn draw_sample(&mut self, bound: Cost) -> State {
        if !bound.is_finite() {
            return sample_uniform_box(self.problem.bounds(), &mut self.sample_rng);
        }
        let n = self.problem.dim();
        let phs_measure = spheroid_measure(
            bound.value().max(self.problem.focal_distance()),
            self.problem.focal_distance(),
            n,
        )
        .unwrap_or(f64::INFINITY);
        let phs_first = phs_measure <= self.free_measure;
        let first = if phs_first {
            self.sample(bound)
        } else {
            self.sample_box_restricted(bound)
        };
        if let Ok(x) = first {
            return x;
        }
        self.stats.sample_fallbacks += 1;
        let second = if phs_first {
            self.sample_box_restricted(bound)
        } else {
            self.sample(bound)
        };
        second.unwrap_or_else(|_| sample_uniform_box(self.problem.bounds(), &mut self.sample_rng))
    }

    fn rewiring_active(&self) -> bool {
        self.config.algorithm == Algorithm::GreedyRrtStar
            && (!self.config.delay_rewiring || self.solved)
    }

    /// Extends tree `t` (0 = start, 1 = goal) one step toward `target`.
    ///
    /// The new vertex is admitted only if `g(nearest) + ‖nearest − new‖ +
    /// ‖new − other root‖ < bound` and the edge is collision free. Once
    /// rewiring is active, the parent is chosen among the vertices within the
    /// rewiring radius and those neighbours are rewired through the new vertex.
    pub fn extend(&mut self, t: usize, target: &[f64], bound: Cost) -> ExtendStatus {
        let other_root = self.trees[1 - t].root().coords().to_vec();
        let tree = &self.trees[t];
        let nearest = tree.nearest(target).expect("trees keep their root");
        let from = tree.coords_of(nearest);
        let new = steer_coords(from, target, self.max_edge);
        let edge = space::distance(from, &new);
        let g_nearest = tree.cost_of(nearest);
        if self.config.algorithm == Algorithm::GreedyRrtStar
            && !(g_nearest + edge + space::distance(&new, &other_root) < bound.value())
        {
            return ExtendStatus::Trapped;
        }
        if !self.problem.segment_free_coords(from, &new) {
            return ExtendStatus::Trapped;
        }
        let reached = new.as_slice() == target;
        let id = if self.rewiring_active() {
            self.add_with_rewiring(t, nearest, new, g_nearest + edge)
        } else {
            self.trees[t]
                .add_child(nearest, State::from_vec_unchecked(new))
                .expect("nearest vertex is live")
        };
        debug_assert!(
            self.config.algorithm == Algorithm::RrtConnect
                || self.trees[t].cost_of(id)
                    + space::distance(self.trees[t].coords_of(id), &other_root)
                    < bound.value()
        );
        if reached {
            ExtendStatus::Reached(id)
        } else {
            ExtendStatus::Advanced(id)
        }
    }

    fn add_with_rewiring(&mut self, t: usize, nearest: VertexId, new: Vec<f64>, via_nearest: f64) -> VertexId {
        let n = self.problem.dim();
        let tree = &self.trees[t];
        let radius = rewire_radius(tree.len() + 1, n, self.free_measure, self.config.eta, self.max_edge);
        let neighbours = tree.near(&new, radius);
        let mut parent = nearest;
        let mut best = via_nearest;
        for &v in &neighbours {
            if v == nearest {
                continue;
            }
            let c = tree.cost_of(v) + space::distance(tree.coords_of(v), &new);
            if c < best && self.problem.segment_free_coords(tree.coords_of(v), &new) {
                parent = v;
                best = c;
            }
        }
        let id = self.trees[t]
            .add_child(parent, State::from_vec_unchecked(new))
            .expect("parent is live");
        let tree = &mut self.trees[t];
        for v in neighbours {
            if v == parent {
                continue;
            }
            let g_new = tree.cost_of(id);
            let through = g_new + space::distance(tree.coords_of(id), tree.coords_of(v));
            if through < tree.cost_of(v)
                && self
                    .problem
                    .segment_free_coords(tree.coords_of(id), tree.coords_of(v))
            {
                // Cannot cycle: `id` is a fresh leaf whose ancestors are cheaper than `v`.
                let _ = tree.rewire_parent(v, id);
            }
        }
        id
    }

    /// Extends tree `t` toward `target` until it is reached or trapped.
    pub fn connect(&mut self, t: usize, target: &[f64], bound: Cost) -> ExtendStatus {
        for _ in 0..self.connect_cap {
            match self.extend(t, target, bound) {
                ExtendStatus::Advanced(_) => continue,
                status => return status,
            }
        }
        ExtendStatus::Trapped
    }

    /// Checks tree, latch and bridge invariants; intended for tests.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        for (k, tree) in self.trees.iter().enumerate() {
            for id in tree.live_ids() {
                let mut walk = 0.0;
                let mut v = id;
                let mut steps = 0;
                while let Some(p) = tree.parent_of(v) {
                    if !tree.is_live(p) {
                        return Err(format!("tree {k}: vertex {id} has dead ancestor {p}"));
                    }
                    walk += space::distance(tree.coords_of(v), tree.coords_of(p));
                    v = p;
                    steps += 1;
                    if steps > tree.capacity() {
                        return Err(format!("tree {k}: cycle through {id}"));
                    }
                }
                if v != Tree::ROOT {
                    return Err(format!("tree {k}: vertex {id} does not reach the root"));
                }
                if (walk - tree.cost_of(id)).abs() > 1e-9 {
                    return Err(format!("tree {k}: vertex {id} cost drift"));
                }
            }
            if tree.index().len() != tree.len() {
                return Err(format!("tree {k}: index size mismatch"));
            }
        }
        if self.c_max_latch.is_finite()
            && self.c_max_latch.value() + 1e-12 < self.problem.focal_distance()
        {
            return Err("greedy latch below the focal distance".into());
        }
        if let Some(path) = self.best_path() {
            if (path.cost().value() - self.best_cost().value()).abs() > 1e-9 {
                return Err("best path cost disagrees with bridge cost".into());
            }
        }
        Ok(())
    }
}

/// Result of a planning run.
#[derive(Clone, Debug)]
pub struct PlanOutcome {
    pub path: Option<Path>,
    pub cost: Cost,
    pub events: Vec<PlannerEvent>,
    pub stats: PlannerStats,
}

/// Runs greedy bidirectional RRT* (or the configured algorithm) to its budget.
pub fn grrt_star_plan(
    problem: &Problem,
    config: PlannerConfig,
    observer: impl FnMut(&PlannerEvent),
) -> Result<PlanOutcome> {
    let mut planner = Planner::new(problem, config)?;
    Ok(planner.run(observer))
}

/// RRT-Connect: uniform sampling, no gating or rewiring, stops at the first solution.
pub fn rrt_connect_plan(
    problem: &Problem,
    config: PlannerConfig,
    observer: impl FnMut(&PlannerEvent),
) -> Result<PlanOutcome> {
    let config = PlannerConfig {
        algorithm: Algorithm::RrtConnect,
        ..config
    };
    let mut planner = Planner::new(problem, config)?;
    Ok(planner.run(observer))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{make_problem, ProblemKind, ProblemParams};
    use crate::HyperRect;

    fn empty_world(n: usize) -> Problem {
        let bounds = HyperRect::centered_cube(n, 0.5).unwrap();
        let start = State::on_first_axis(-0.3, n).unwrap();
        let goal = State::on_first_axis(0.3, n).unwrap();
        Problem::new(bounds, vec![], start, goal, 1e-3).unwrap()
    }

    fn iterations(k: u64, seed: u64) -> PlannerConfig {
        PlannerConfig {
            seed,
            time_limit: None,
            iteration_limit: Some(k),
            ..PlannerConfig::default()
        }
    }

    #[test]
    fn steer_clips_to_max_edge() {
        let a = State::new(vec![0.0, 0.0]).unwrap();
        let b = State::new(vec![3.0, 4.0]).unwrap();
        assert_eq!(steer(&a, &b, 10.0), b);
        let s = steer(&a, &b, 1.0);
        assert!((s.coords()[0] - 0.6).abs() < 1e-12);
        assert!((s.coords()[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(PlannerConfig::default().validate().is_ok());
        let bad = PlannerConfig {
            epsilon: 1.5,
            ..PlannerConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = PlannerConfig {
            max_edge: Some(0.0),
            ..PlannerConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = PlannerConfig {
            time_limit: None,
            iteration_limit: None,
            ..PlannerConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn best_cost_is_infinite_without_bridges() {
        let p = empty_world(2);
        let mut planner = Planner::new(&p, iterations(1, 0)).unwrap();
        assert_eq!(planner.compute_best_cost(), Cost::INFINITE);
        assert_eq!(planner.stats().greedy_draws + planner.stats().informed_draws, 0);
    }

    #[test]
    fn empty_world_converges_toward_straight_line() {
        let p = empty_world(2);
        let out = grrt_star_plan(&p, iterations(3000, 7), |_| {}).unwrap();
        let path = out.path.expect("solved");
        assert!(p.path_free(&path));
        assert!(path.cost().value() >= 0.6 - 1e-12);
        assert!(path.cost().value() < 0.63, "cost {}", path.cost());
    }

    #[test]
    fn invariants_hold_every_iteration() {
        let p = make_problem(ProblemKind::NarrowPassage, 2, &ProblemParams::default()).unwrap();
        for seed in 0..3 {
            let mut planner = Planner::new(&p, iterations(1500, seed)).unwrap();
            let mut last_latch = Cost::INFINITE;
            for _ in 0..1500 {
                planner.step();
                planner.check_invariants().unwrap();
                if planner.stats().latch_updates > 0 {
                    assert!(planner.c_max_latch().value() >= p.focal_distance() - 1e-12);
                }
                assert!(planner.best_cost() <= last_latch || !last_latch.is_finite());
                last_latch = planner.best_cost();
            }
        }
    }

    #[test]
    fn roles_swap_every_iteration_without_balancing() {
        let p = empty_world(3);
        let config = PlannerConfig {
            balanced: false,
            ..iterations(200, 3)
        };
        let mut planner = Planner::new(&p, config).unwrap();
        let mut extends_start = planner.start_tree_extends();
        for k in 1..=200u64 {
            planner.step();
            assert_ne!(planner.start_tree_extends(), extends_start);
            extends_start = planner.start_tree_extends();
            assert_eq!(planner.stats().swaps, k);
        }
    }

    #[test]
    fn identical_seeds_give_identical_event_logs() {
        let p = make_problem(ProblemKind::ManyHomotopy, 3, &ProblemParams::default()).unwrap();
        let config = PlannerConfig {
            clock: ClockMode::Virtual {
                seconds_per_iteration: 1e-4,
            },
            ..iterations(1500, 11)
        };
        let a = grrt_star_plan(&p, config.clone(), |_| {}).unwrap();
        let b = grrt_star_plan(&p, config, |_| {}).unwrap();
        assert_eq!(a.events, b.events);
        assert_eq!(a.path, b.path);
    }

    #[test]
    fn zero_epsilon_never_takes_the_greedy_branch() {
        let p = empty_world(2);
        let config = PlannerConfig {
            epsilon: 0.0,
            ..iterations(800, 5)
        };
        let out = grrt_star_plan(&p, config, |_| {}).unwrap();
        assert_eq!(out.stats.greedy_draws, 0);
        assert!(out.stats.informed_draws > 0);
        assert!(out.cost.is_finite());
    }

    #[test]
    fn full_epsilon_always_takes_the_greedy_branch() {
        let p = empty_world(2);
        let config = PlannerConfig {
            epsilon: 1.0,
            ..iterations(800, 5)
        };
        let out = grrt_star_plan(&p, config, |_| {}).unwrap();
        assert_eq!(out.stats.informed_draws, 0);
        assert!(out.stats.greedy_draws > 0);
    }

    #[test]
    fn event_stream_is_monotone_and_terminated() {
        let p = make_problem(ProblemKind::NarrowPassage, 2, &ProblemParams::default()).unwrap();
        let mut seen = Vec::new();
        let out = grrt_star_plan(&p, iterations(2000, 2), |e| seen.push(*e)).unwrap();
        assert_eq!(seen, out.events);
        let initial = seen.iter().filter(|e| e.tag == EventTag::Initial).count();
        assert!(initial <= 1);
        assert_eq!(seen.last().unwrap().tag, EventTag::Final);
        assert_eq!(seen.iter().filter(|e| e.tag == EventTag::Final).count(), 1);
        for w in seen.windows(2) {
            assert!(w[1].cost <= w[0].cost);
            assert!(w[1].elapsed >= w[0].elapsed);
        }
    }

    #[test]
    fn rrt_connect_stops_at_first_solution() {
        let p = make_problem(ProblemKind::ManyHomotopy, 2, &ProblemParams::default()).unwrap();
        let out = rrt_connect_plan(&p, iterations(10_000, 1), |_| {}).unwrap();
        assert!(out.cost.is_finite());
        assert!(out.stats.iterations < 10_000);
        assert_eq!(out.stats.greedy_draws + out.stats.informed_draws, 0);
        let path = out.path.unwrap();
        assert!(p.path_free(&path));
    }

    #[test]
    fn all_bridges_scope_runs() {
        let p = make_problem(ProblemKind::ManyHomotopy, 2, &ProblemParams::default()).unwrap();
        let config = PlannerConfig {
            greedy_scope: GreedyScope::AllBridges,
            ..iterations(1500, 4)
        };
        let mut planner = Planner::new(&p, config).unwrap();
        planner.run(|_| {});
        planner.check_invariants().unwrap();
        assert!(planner.best_cost().is_finite());
    }

    #[test]
    fn sample_respects_bound_and_domain() {
        let p = empty_world(4);
        let mut planner = Planner::new(&p, iterations(1, 0)).unwrap();
        let bound = Cost::new(0.9).unwrap();
        for _ in 0..2000 {
            let x = planner.sample(bound).unwrap();
            assert!(p.bounds().contains(x.coords()));
            let h = space::heuristic(x.coords(), p.start().coords(), p.goal().coords());
            assert!(h <= 0.9 + 1e-9);
        }
    }
}
