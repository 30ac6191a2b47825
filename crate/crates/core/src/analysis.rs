//! Measure algebra of the greedy informed set and Monte-Carlo checks of the
//! sampling analysis, including a grid-search oracle for planar problems.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planner::{ClockMode, Planner, PlannerConfig};
use crate::simplify::shortcut;
use crate::space::{
    self, greedy_transverse_diameter, sample_uniform_box, sample_uniform_phs, spheroid_measure,
    Cost, HyperRect, Path, ProlateHyperspheroid, State,
};
use crate::world::{make_problem, Problem, ProblemKind, ProblemParams, DEFAULT_RESOLUTION};

/// Lattice size per axis of the planar grid oracle.
pub const ORACLE_GRID_CELLS: usize = 512;

/// Narrowest clearance, in cells, the grid oracle accepts.
pub const MIN_PASSAGE_CELLS: f64 = 3.0;

/// Format tag of [`VerificationReport`] documents.
pub const VERIFICATION_FORMAT_VERSION: u32 = 1;

/// Ratio of the greedy spheroid measure to the informed spheroid measure:
/// `(f/c)·((f² − m²)/(c² − m²))^{(n−1)/2}` for greedy diameter `f`, bound `c`
/// and focal distance `m`.
pub fn rho_closed_form(f_max: Cost, c_i: Cost, c_min: Cost, n: usize) -> Result<f64> {
    let (f, c, m) = (f_max.value(), c_i.value(), c_min.value());
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    if !c.is_finite() || c <= m {
        return Err(Error::InvalidArgument(format!(
            "informed set is degenerate: bound {c} vs focal distance {m}"
        )));
    }
    if f < m || f > c {
        return Err(Error::InvalidArgument(format!(
            "greedy diameter {f} must lie in [{m}, {c}]"
        )));
    }
    let ratio = ((f - m) * (f + m)) / ((c - m) * (c + m));
    Ok(f / c * ratio.powf((n as f64 - 1.0) / 2.0))
}

/// Expected ratio of samples needed to hit the improvement set with
/// greedy biasing `epsilon`, recall `gamma` and measure ratio `rho`,
/// relative to purely informed sampling: `1/((1−ε) + ε·γ/ρ)`.
pub fn expected_sample_factor(epsilon: f64, gamma: f64, rho: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&epsilon) || !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(
            "epsilon and gamma must lie in [0, 1]".into(),
        ));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidArgument(format!("rho must lie in (0, 1], got {rho}")));
    }
    let denominator = (1.0 - epsilon) + epsilon * gamma / rho;
    if denominator == 0.0 {
        return Err(Error::InvalidArgument(
            "the greedy set never hits the improvement set and is always sampled".into(),
        ));
    }
    Ok(1.0 / denominator)
}

/// Simulates the two-region sampling model draw by draw and returns the
/// ratio of mean waiting times (mixed sampling over informed-only sampling).
///
/// Each draw samples the greedy set with probability `epsilon`, hitting the
/// improvement set with probability `p_greedy`, and the informed set
/// otherwise, hitting with probability `p_informed`.
pub fn simulate_sample_factor<R: Rng + ?Sized>(
    epsilon: f64,
    p_informed: f64,
    p_greedy: f64,
    rho: f64,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    for (name, v) in [("epsilon", epsilon), ("p_informed", p_informed), ("p_greedy", p_greedy)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1], got {v}")));
        }
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidArgument(format!("rho must lie in (0, 1], got {rho}")));
    }
    if p_greedy * rho > p_informed + 1e-12 {
        return Err(Error::InvalidArgument(
            "greedy hit probability exceeds what the measure ratio allows".into(),
        ));
    }
    if trials < 1000 {
        return Err(Error::InvalidArgument("at least 1000 trials are required".into()));
    }
    if p_informed == 0.0 || (1.0 - epsilon) * p_informed + epsilon * p_greedy == 0.0 {
        return Err(Error::InvalidArgument("the improvement set is never hit".into()));
    }
    let wait = |mixed: bool, rng: &mut R| -> u64 {
        let mut draws = 0u64;
        loop {
            draws += 1;
            let p = if mixed && rng.random::<f64>() < epsilon {
                p_greedy
            } else {
                p_informed
            };
            if rng.random::<f64>() < p {
                return draws;
            }
        }
    };
    let mut base = 0u64;
    for _ in 0..trials {
        base += wait(false, rng);
    }
    let mut mixed = 0u64;
    for _ in 0..trials {
        mixed += wait(true, rng);
    }
    Ok(mixed as f64 / base as f64)
}

/// Greedy-set statistics against an oracle improvement set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetEstimate {
    /// Greedy-to-informed measure ratio from the closed form.
    pub rho: f64,
    /// Fraction of the improvement set inside the greedy set.
    pub gamma: f64,
    pub sample_count: usize,
    pub improvement_hits: usize,
    /// 95% normal-approximation half-width on `gamma`.
    pub half_width: f64,
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier {
    cost: f64,
    cell: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest-path fields on an 8-connected lattice over a planar problem.
///
/// A cell is free when its closed square misses every obstacle, so any
/// straight move between free neighbours is collision free.
#[derive(Clone, Debug)]
pub struct GridOracle {
    cells: usize,
    low: [f64; 2],
    size: [f64; 2],
    free: Vec<bool>,
    from_start: Vec<f64>,
    to_goal: Vec<f64>,
    predecessor: Vec<usize>,
    start: [f64; 2],
    goal: [f64; 2],
    start_cell: usize,
    goal_cell: usize,
}

impl GridOracle {
    pub fn new(problem: &Problem, cells: usize) -> Result<Self> {
        if problem.dim() != 2 {
            return Err(Error::InvalidArgument(format!(
                "the grid oracle needs a planar problem, got dimension {}",
                problem.dim()
            )));
        }
        if cells < 4 {
            return Err(Error::InvalidArgument("grid needs at least 4 cells per axis".into()));
        }
        let b = problem.bounds();
        let low = [b.low().coords()[0], b.low().coords()[1]];
        let size = [
            (b.high().coords()[0] - low[0]) / cells as f64,
            (b.high().coords()[1] - low[1]) / cells as f64,
        ];
        let cell = size[0].max(size[1]);
        let passage = narrowest_clearance(problem);
        if passage < MIN_PASSAGE_CELLS * cell {
            return Err(Error::GridTooCoarse { passage, cell });
        }
        let mut free = vec![true; cells * cells];
        for (k, slot) in free.iter_mut().enumerate() {
            let (i, j) = (k % cells, k / cells);
            let lo = [low[0] + i as f64 * size[0], low[1] + j as f64 * size[1]];
            let hi = [lo[0] + size[0], lo[1] + size[1]];
            *slot = !problem.obstacles().iter().any(|o| {
                (0..2).all(|a| lo[a] <= o.high().coords()[a] && hi[a] >= o.low().coords()[a])
            });
        }
        let s = problem.start().coords();
        let g = problem.goal().coords();
        let start = [s[0], s[1]];
        let goal = [g[0], g[1]];
        let mut oracle = GridOracle {
            cells,
            low,
            size,
            free,
            from_start: Vec::new(),
            to_goal: Vec::new(),
            predecessor: Vec::new(),
            start,
            goal,
            start_cell: 0,
            goal_cell: 0,
        };
        oracle.start_cell = oracle
            .cell_of(&start)
            .filter(|&c| oracle.free[c])
            .ok_or(Error::NoOraclePath)?;
        oracle.goal_cell = oracle
            .cell_of(&goal)
            .filter(|&c| oracle.free[c])
            .ok_or(Error::NoOraclePath)?;
        let (from_start, predecessor) = oracle.dijkstra(oracle.start_cell, &start);
        let (to_goal, _) = oracle.dijkstra(oracle.goal_cell, &goal);
        if !from_start[oracle.goal_cell].is_finite() {
            return Err(Error::NoOraclePath);
        }
        oracle.from_start = from_start;
        oracle.to_goal = to_goal;
        oracle.predecessor = predecessor;
        Ok(oracle)
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Largest cell edge.
    pub fn cell_size(&self) -> f64 {
        self.size[0].max(self.size[1])
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.size[0].hypot(self.size[1])
    }

    pub fn cell_of(&self, x: &[f64]) -> Option<usize> {
        let mut idx = [0usize; 2];
        for a in 0..2 {
            let t = (x[a] - self.low[a]) / self.size[a];
            if !(t >= 0.0 && t <= self.cells as f64) {
                return None;
            }
            idx[a] = (t as usize).min(self.cells - 1);
        }
        Some(idx[1] * self.cells + idx[0])
    }

    pub fn is_cell_free(&self, cell: usize) -> bool {
        self.free[cell]
    }

    fn center(&self, cell: usize) -> [f64; 2] {
        let (i, j) = (cell % self.cells, cell / self.cells);
        [
            self.low[0] + (i as f64 + 0.5) * self.size[0],
            self.low[1] + (j as f64 + 0.5) * self.size[1],
        ]
    }

    fn dijkstra(&self, source: usize, origin: &[f64; 2]) -> (Vec<f64>, Vec<usize>) {
        let n = self.cells;
        let mut dist = vec![f64::INFINITY; n * n];
        let mut pred = vec![usize::MAX; n * n];
        let mut heap = BinaryHeap::new();
        let c = self.center(source);
        dist[source] = (c[0] - origin[0]).hypot(c[1] - origin[1]);
        heap.push(Frontier {
            cost: dist[source],
            cell: source,
        });
        while let Some(Frontier { cost, cell }) = heap.pop() {
            if cost > dist[cell] {
                continue;
            }
            let (i, j) = ((cell % n) as isize, (cell / n) as isize);
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)] {
                let (ni, nj) = (i + di, j + dj);
                if ni < 0 || nj < 0 || ni >= n as isize || nj >= n as isize {
                    continue;
                }
                let next = nj as usize * n + ni as usize;
                if !self.free[next] {
                    continue;
                }
                if di != 0 && dj != 0 {
                    let side_a = j as usize * n + ni as usize;
                    let side_b = nj as usize * n + i as usize;
                    if !self.free[side_a] || !self.free[side_b] {
                        continue;
                    }
                }
                let step = (di as f64 * self.size[0]).hypot(dj as f64 * self.size[1]);
                let candidate = cost + step;
                if candidate < dist[next] {
                    dist[next] = candidate;
                    pred[next] = cell;
                    heap.push(Frontier {
                        cost: candidate,
                        cell: next,
                    });
                }
            }
        }
        (dist, pred)
    }

    /// Length of the lattice solution, including the legs to the exact endpoints.
    pub fn grid_cost(&self) -> f64 {
        let c = self.center(self.goal_cell);
        self.from_start[self.goal_cell] + (c[0] - self.goal[0]).hypot(c[1] - self.goal[1])
    }

    /// Lattice estimate of the cheapest solution cost constrained through `x`.
    pub fn cost_through(&self, x: &[f64]) -> f64 {
        match self.cell_of(x) {
            Some(c) if self.free[c] => self.from_start[c] + self.to_goal[c],
            _ => f64::INFINITY,
        }
    }

    /// The lattice solution as a polyline from start to goal.
    pub fn grid_path(&self) -> Path {
        let mut cells = vec![self.goal_cell];
        let mut c = self.goal_cell;
        while c != self.start_cell {
            c = self.predecessor[c];
            cells.push(c);
        }
        cells.reverse();
        let mut states = vec![State::from_vec_unchecked(self.start.to_vec())];
        states.extend(
            cells
                .into_iter()
                .map(|c| State::from_vec_unchecked(self.center(c).to_vec())),
        );
        states.push(State::from_vec_unchecked(self.goal.to_vec()));
        Path::new(states).expect("lattice path has at least two states")
    }

    /// Lattice solution pulled taut by line-of-sight and randomized shortcutting.
    pub fn optimal_path<R: Rng + ?Sized>(&self, problem: &Problem, rng: &mut R) -> Result<Path> {
        let raw = self.grid_path();
        let pts = raw.states();
        let mut pulled = vec![pts[0].clone()];
        let mut anchor = 0;
        let last = pts.len() - 1;
        while anchor < last {
            let mut j = anchor + 1;
            while j < last && problem.segment_free(&pts[anchor], &pts[j + 1]) {
                j += 1;
            }
            pulled.push(pts[j].clone());
            anchor = j;
        }
        let pulled = Path::new(pulled)?;
        let budget = 10 * pulled.states().len() + 2000;
        shortcut(&pulled, problem, budget, rng)
    }
}

/// Smallest positive gap between two obstacles or between an obstacle and
/// the domain boundary, measured in the first two axes.
fn narrowest_clearance(problem: &Problem) -> f64 {
    let b = problem.bounds();
    let obstacles = problem.obstacles();
    let mut best = f64::INFINITY;
    for (k, o) in obstacles.iter().enumerate() {
        for a in 0..2 {
            for gap in [
                o.low().coords()[a] - b.low().coords()[a],
                b.high().coords()[a] - o.high().coords()[a],
            ] {
                if gap > 0.0 {
                    best = best.min(gap);
                }
            }
        }
        for other in &obstacles[k + 1..] {
            let gap = (0..2)
                .map(|a| {
                    (other.low().coords()[a] - o.high().coords()[a])
                        .max(o.low().coords()[a] - other.high().coords()[a])
                        .max(0.0)
                })
                .fold(0.0, f64::max);
            if gap > 0.0 {
                best = best.min(gap);
            }
        }
    }
    best
}

/// Crossing signature of a path against upward rays cast, in the first two
/// axes, from every obstacle cluster that does not touch the domain boundary.
///
/// Clusters are maximal sets of touching obstacles. Each entry counts signed
/// crossings of one ray, so paths with different signatures are not
/// homotopic.
pub fn homotopy_signature(problem: &Problem, path: &Path) -> Vec<i64> {
    signature_of(problem, path.states().iter().map(|s| [s.coords()[0], s.coords()[1]]))
}

fn signature_of(problem: &Problem, points: impl Iterator<Item = [f64; 2]>) -> Vec<i64> {
    let points: Vec<[f64; 2]> = points.collect();
    ray_anchors(problem)
        .into_iter()
        .map(|[rx, ry]| {
            let mut winding = 0i64;
            for w in points.windows(2) {
                let (p, q) = (w[0], w[1]);
                if (p[0] < rx) == (q[0] < rx) {
                    continue;
                }
                let t = (rx - p[0]) / (q[0] - p[0]);
                if p[1] + t * (q[1] - p[1]) > ry {
                    winding += if q[0] > p[0] { 1 } else { -1 };
                }
            }
            winding
        })
        .collect()
}

fn ray_anchors(problem: &Problem) -> Vec<[f64; 2]> {
    let obstacles = problem.obstacles();
    let mut parent: Vec<usize> = (0..obstacles.len()).collect();
    fn find(parent: &mut [usize], mut k: usize) -> usize {
        while parent[k] != k {
            parent[k] = parent[parent[k]];
            k = parent[k];
        }
        k
    }
    for a in 0..obstacles.len() {
        for b in a + 1..obstacles.len() {
            if obstacles[a].separation(&obstacles[b]) == 0.0 {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let bounds = problem.bounds();
    let touches = |o: &HyperRect| {
        (0..2).any(|a| {
            o.low().coords()[a] <= bounds.low().coords()[a]
                || o.high().coords()[a] >= bounds.high().coords()[a]
        })
    };
    let mut anchored = vec![false; obstacles.len()];
    for (k, o) in obstacles.iter().enumerate() {
        if touches(o) {
            let r = find(&mut parent, k);
            anchored[r] = true;
        }
    }
    let mut anchors = Vec::new();
    for k in 0..obstacles.len() {
        if find(&mut parent, k) == k && !anchored[k] {
            let o = &obstacles[k];
            anchors.push([
                0.5 * (o.low().coords()[0] + o.high().coords()[0]),
                0.5 * (o.low().coords()[1] + o.high().coords()[1]),
            ]);
        }
    }
    anchors
}

/// Estimates how much of the oracle improvement set `{x : g*(x) + h*(x) < c_i}`
/// lies in the greedy set of `solution`.
///
/// A sample counts as greedy when its heuristic is within one cell diagonal
/// of the greedy diameter, i.e. when its lattice cell meets the greedy set.
pub fn estimate_gamma<R: Rng + ?Sized>(
    problem: &Problem,
    solution: &Path,
    c_i: Cost,
    samples: usize,
    rng: &mut R,
) -> Result<SetEstimate> {
    problem.validate_path(solution)?;
    let oracle = GridOracle::new(problem, ORACLE_GRID_CELLS)?;
    let f_max = greedy_transverse_diameter(solution, problem.start(), problem.goal())?;
    let focal = Cost::from_f64_unchecked(problem.focal_distance());
    let rho = rho_closed_form(f_max, c_i, focal, problem.dim())?;
    let margin = oracle.cell_diagonal();
    let (start, goal) = (problem.start().coords(), problem.goal().coords());
    let mut hits = 0usize;
    let mut inside = 0usize;
    for _ in 0..samples {
        let x = sample_uniform_box(problem.bounds(), rng);
        if oracle.cost_through(x.coords()) < c_i.value() {
            hits += 1;
            if space::heuristic(x.coords(), start, goal) <= f_max.value() + margin {
                inside += 1;
            }
        }
    }
    if hits == 0 {
        return Err(Error::InvalidArgument(
            "no sample landed in the improvement set".into(),
        ));
    }
    let gamma = inside as f64 / hits as f64;
    Ok(SetEstimate {
        rho,
        gamma,
        sample_count: samples,
        improvement_hits: hits,
        half_width: 1.96 * (gamma * (1.0 - gamma) / hits as f64).sqrt(),
    })
}

/// Checks that every state of the oracle-optimal path has heuristic value at
/// most the greedy diameter of `solution`, up to `tolerance_cells` lattice
/// cells. Fails with [`Error::HomotopyMismatch`] when the solution and the
/// oracle path are in different homotopy classes.
pub fn check_theorem1_containment<R: Rng + ?Sized>(
    problem: &Problem,
    solution: &Path,
    tolerance_cells: f64,
    rng: &mut R,
) -> Result<bool> {
    problem.validate_path(solution)?;
    let oracle = GridOracle::new(problem, ORACLE_GRID_CELLS)?;
    let optimal = oracle.optimal_path(problem, rng)?;
    let ours = homotopy_signature(problem, solution);
    let theirs = homotopy_signature(problem, &optimal);
    if ours != theirs {
        return Err(Error::HomotopyMismatch(format!(
            "solution signature {ours:?} differs from oracle signature {theirs:?}"
        )));
    }
    let f_max = greedy_transverse_diameter(solution, problem.start(), problem.goal())?.value();
    // The heuristic is 2-Lipschitz, so a positional tolerance doubles.
    let margin = 2.0 * tolerance_cells * oracle.cell_size();
    let (start, goal) = (problem.start().coords(), problem.goal().coords());
    Ok(optimal
        .states()
        .iter()
        .all(|x| space::heuristic(x.coords(), start, goal) <= f_max + margin))
}

/// Planar maze whose optimal path circles a block while a longer solution
/// snakes through a baffled corridor inside it.
///
/// The corridor solution keeps close to the start-goal axis, so its greedy
/// set excludes the optimal path.
pub fn maze_problem() -> Problem {
    let rect = |lx: f64, ly: f64, hx: f64, hy: f64| {
        HyperRect::from_coords(vec![lx, ly], vec![hx, hy]).expect("valid fixture box")
    };
    let obstacles = vec![
        rect(-0.2, 0.1, 0.2, 0.2),
        rect(-0.2, -0.2, 0.2, -0.1),
        rect(-0.16, -0.1, -0.14, 0.06),
        rect(-0.06, -0.06, -0.04, 0.1),
        rect(0.04, -0.1, 0.06, 0.06),
        rect(0.14, -0.06, 0.16, 0.1),
    ];
    Problem::new(
        HyperRect::centered_cube(2, 0.5).expect("unit domain"),
        obstacles,
        State::on_first_axis(-0.4, 2).expect("start"),
        State::on_first_axis(0.4, 2).expect("goal"),
        DEFAULT_RESOLUTION,
    )
    .expect("maze fixture is valid")
}

/// A feasible solution of [`maze_problem`] through the baffled corridor.
pub fn maze_corridor_path() -> Path {
    let waypoints = [
        [-0.4, 0.0],
        [-0.17, 0.08],
        [-0.13, 0.08],
        [-0.07, -0.08],
        [-0.03, -0.08],
        [0.03, 0.08],
        [0.07, 0.08],
        [0.13, -0.08],
        [0.17, -0.08],
        [0.4, 0.0],
    ];
    Path::new(
        waypoints
            .iter()
            .map(|p| State::from_vec_unchecked(p.to_vec()))
            .collect(),
    )
    .expect("fixture path")
}

/// Outcome of one verification check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Observed statistic, compared against `threshold`.
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub format: u32,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Sample counts for [`run_verification`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerificationOptions {
    pub seed: u64,
    pub geometry_samples: usize,
    pub measure_samples: usize,
    pub algebra_triples: usize,
    pub worst_case_trials: usize,
    pub expected_case_trials: usize,
    pub containment_solutions: usize,
    pub gamma_samples: usize,
}

impl Default for VerificationOptions {
    fn default() -> Self {
        VerificationOptions {
            seed: 0,
            geometry_samples: 100_000,
            measure_samples: 1_000_000,
            algebra_triples: 1000,
            worst_case_trials: 100_000,
            expected_case_trials: 100_000,
            containment_solutions: 20,
            gamma_samples: 200_000,
        }
    }
}

impl VerificationOptions {
    /// Reduced sample counts for smoke runs; tolerances stay the same.
    pub fn quick() -> Self {
        VerificationOptions {
            geometry_samples: 10_000,
            measure_samples: 1_000_000,
            algebra_triples: 200,
            worst_case_trials: 20_000,
            expected_case_trials: 20_000,
            containment_solutions: 3,
            gamma_samples: 50_000,
            ..VerificationOptions::default()
        }
    }
}

fn check_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn timed(name: &str, body: impl FnOnce() -> (bool, f64, f64, String)) -> CheckResult {
    let started = Instant::now();
    let (passed, value, threshold, detail) = body();
    CheckResult {
        name: name.to_string(),
        passed,
        value,
        threshold,
        detail,
        seconds: started.elapsed().as_secs_f64(),
    }
}

/// Random spheroid with foci in the unit cube and a transverse diameter
/// between 1.05 and 2 times the focal distance.
pub fn random_spheroid<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ProlateHyperspheroid {
    loop {
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
        let focal = space::distance(&a, &b);
        if focal < 0.1 {
            continue;
        }
        let transverse = focal * rng.random_range(1.05..2.0);
        return ProlateHyperspheroid::new(
            State::from_vec_unchecked(a),
            State::from_vec_unchecked(b),
            Cost::from_f64_unchecked(transverse),
        )
        .expect("transverse exceeds focal distance");
    }
}

/// Uniform draw from the box spanned by the spheroid's principal axes,
/// returned with that box's measure `2^n · a · b^{n−1}`.
pub fn sample_principal_box<R: Rng + ?Sized>(
    phs: &ProlateHyperspheroid,
    rng: &mut R,
) -> (State, f64) {
    let n = phs.dim();
    let (major, minor) = phs.semi_axes();
    let local: Vec<f64> = (0..n)
        .map(|i| rng.random_range(-1.0..1.0) * if i == 0 { major } else { minor })
        .collect();
    let rotation = phs.rotation();
    let x = (0..n)
        .map(|r| phs.center()[r] + (0..n).map(|c| rotation[r * n + c] * local[c]).sum::<f64>())
        .collect();
    let measure = 2f64.powi(n as i32) * major * minor.powi(n as i32 - 1);
    (State::from_vec_unchecked(x), measure)
}

pub fn verify_geometry(options: &VerificationOptions) -> CheckResult {
    timed("geometry", || {
        let mut rng = check_rng(options.seed, 10);
        let mut violations = 0usize;
        let mut worst = 0.0f64;
        for n in [2usize, 4, 8] {
            let phs = random_spheroid(n, &mut rng);
            let c = phs.d_transverse().value();
            for _ in 0..options.geometry_samples {
                let x = sample_uniform_phs(&phs, &mut rng);
                let h = space::heuristic(x.coords(), phs.focus_a().coords(), phs.focus_b().coords());
                if h > c + space::GEOMETRIC_TOLERANCE {
                    violations += 1;
                }
            }
            let mut hits = 0usize;
            let mut box_measure = 0.0;
            for _ in 0..options.measure_samples {
                let (x, m) = sample_principal_box(&phs, &mut rng);
                box_measure = m;
                if phs.contains(&x) {
                    hits += 1;
                }
            }
            let estimate = box_measure * hits as f64 / options.measure_samples as f64;
            let exact = spheroid_measure(c, phs.d_min().value(), n).expect("valid spheroid");
            worst = worst.max((estimate - exact).abs() / exact);
        }
        (
            violations == 0 && worst <= 0.02,
            worst,
            0.02,
            format!("{violations} heuristic violations; worst relative measure error {worst:.4}"),
        )
    })
}

pub fn verify_measure_algebra(options: &VerificationOptions) -> CheckResult {
    timed("measure_algebra", || {
        let mut rng = check_rng(options.seed, 11);
        let mut worst = 0.0f64;
        for _ in 0..options.algebra_triples {
            let n = rng.random_range(2..=8usize);
            let m = rng.random_range(0.1..1.0);
            let c = m * rng.random_range(1.001..3.0);
            let f = rng.random_range(m..=c);
            let rho = rho_closed_form(
                Cost::from_f64_unchecked(f),
                Cost::from_f64_unchecked(c),
                Cost::from_f64_unchecked(m),
                n,
            )
            .expect("valid triple");
            let ratio = spheroid_measure(f, m, n).unwrap() / spheroid_measure(c, m, n).unwrap();
            if ratio > 0.0 {
                worst = worst.max((rho - ratio).abs() / ratio);
            }
        }
        let boundary = [0.0, 0.5, 0.9].iter().all(|&eps| {
            expected_sample_factor(eps, 0.0, 0.4).unwrap() == 1.0 / (1.0 - eps)
                && expected_sample_factor(0.0, 0.3, 0.7).unwrap() == 1.0
                && expected_sample_factor(eps, 0.4, 0.4).unwrap() == 1.0
        });
        (
            worst <= 1e-12 && boundary,
            worst,
            1e-12,
            format!("worst relative identity error {worst:e}; boundary cases exact: {boundary}"),
        )
    })
}

pub fn verify_worst_case_factor(options: &VerificationOptions) -> CheckResult {
    timed("worst_case_sample_factor", || {
        let mut rng = check_rng(options.seed, 12);
        let mut worst = 0.0f64;
        let mut detail = Vec::new();
        for eps in [0.5, 0.9] {
            let simulated =
                simulate_sample_factor(eps, 0.05, 0.0, 0.5, options.worst_case_trials, &mut rng)
                    .expect("valid model");
            let expected = 1.0 / (1.0 - eps);
            worst = worst.max((simulated - expected).abs() / expected);
            detail.push(format!("eps {eps}: {simulated:.3} vs {expected:.3}"));
        }
        (worst <= 0.10, worst, 0.10, detail.join("; "))
    })
}

pub fn verify_expected_factor(options: &VerificationOptions) -> CheckResult {
    timed("expected_sample_factor", || {
        let mut rng = check_rng(options.seed, 13);
        let eps = 0.9;
        let p_informed = 0.05;
        let mut worst = 0.0f64;
        for gamma in [0.25, 0.5, 0.9] {
            for rho in [0.3, 0.6, 0.9] {
                let p_greedy = p_informed * gamma / rho;
                let simulated = simulate_sample_factor(
                    eps,
                    p_informed,
                    p_greedy,
                    rho,
                    options.expected_case_trials,
                    &mut rng,
                )
                .expect("valid model");
                let expected = expected_sample_factor(eps, gamma, rho).unwrap();
                worst = worst.max((simulated - expected).abs() / expected);
            }
        }
        (
            worst <= 0.05,
            worst,
            0.05,
            format!("worst relative deviation over a 3x3 (gamma, rho) grid: {worst:.4}"),
        )
    })
}

/// First solutions of the planar narrow-passage world that share the oracle
/// path's homotopy class, from consecutive seeds.
pub fn same_class_solutions(problem: &Problem, count: usize, seed: u64) -> Result<Vec<Path>> {
    let oracle = GridOracle::new(problem, ORACLE_GRID_CELLS)?;
    let reference = homotopy_signature(problem, &oracle.grid_path());
    let mut found = Vec::new();
    for k in 0..(20 * count as u64).max(20) {
        if found.len() == count {
            break;
        }
        let config = PlannerConfig {
            seed: seed.wrapping_add(k),
            time_limit: None,
            iteration_limit: Some(50_000),
            clock: ClockMode::Virtual {
                seconds_per_iteration: 1e-4,
            },
            stop_at_first_solution: true,
            ..PlannerConfig::default()
        };
        let mut planner = Planner::new(problem, config)?;
        planner.run(|_| {});
        if let Some(path) = planner.best_path() {
            if homotopy_signature(problem, &path) == reference {
                found.push(path);
            }
        }
    }
    Ok(found)
}

pub fn verify_containment(options: &VerificationOptions) -> CheckResult {
    timed("greedy_containment", || {
        let problem = make_problem(ProblemKind::NarrowPassage, 2, &ProblemParams::default())
            .expect("default narrow passage");
        let wanted = options.containment_solutions;
        let solutions = match same_class_solutions(&problem, wanted, options.seed) {
            Ok(s) => s,
            Err(e) => return (false, 0.0, wanted as f64, e.to_string()),
        };
        let mut rng = check_rng(options.seed, 14);
        let mut contained = 0usize;
        for path in &solutions {
            if let Ok(true) = check_theorem1_containment(&problem, path, 2.0, &mut rng) {
                contained += 1;
            }
        }
        (
            solutions.len() == wanted && contained == wanted,
            contained as f64,
            wanted as f64,
            format!("{contained} of {} same-class solutions contain the oracle path", solutions.len()),
        )
    })
}

pub fn verify_recall(options: &VerificationOptions) -> CheckResult {
    timed("greedy_recall", || {
        let mut rng = check_rng(options.seed, 15);
        let empty = Problem::new(
            HyperRect::centered_cube(2, 0.5).expect("unit domain"),
            vec![],
            State::on_first_axis(-0.3, 2).expect("start"),
            State::on_first_axis(0.3, 2).expect("goal"),
            DEFAULT_RESOLUTION,
        )
        .expect("empty world");
        let straight = Path::new(vec![empty.start().clone(), empty.goal().clone()]).expect("segment");
        let open = estimate_gamma(
            &empty,
            &straight,
            Cost::from_f64_unchecked(0.605),
            options.gamma_samples,
            &mut rng,
        );
        let maze = maze_problem();
        let corridor = maze_corridor_path();
        let tangled = estimate_gamma(&maze, &corridor, corridor.cost(), options.gamma_samples, &mut rng);
        match (open, tangled) {
            (Ok(open), Ok(tangled)) => (
                open.gamma >= 0.95 && tangled.gamma < 0.95,
                tangled.gamma,
                0.95,
                format!(
                    "empty world gamma {:.3} (+/- {:.3}); maze gamma {:.3} (+/- {:.3})",
                    open.gamma, open.half_width, tangled.gamma, tangled.half_width
                ),
            ),
            (a, b) => (false, f64::NAN, 0.95, format!("{:?} / {:?}", a.err(), b.err())),
        }
    })
}

/// Runs the full verification suite.
pub fn run_verification(options: &VerificationOptions) -> VerificationReport {
    VerificationReport {
        format: VERIFICATION_FORMAT_VERSION,
        seed: options.seed,
        checks: vec![
            verify_geometry(options),
            verify_measure_algebra(options),
            verify_worst_case_factor(options),
            verify_expected_factor(options),
            verify_containment(options),
            verify_recall(options),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cost(v: f64) -> Cost {
        Cost::new(v).unwrap()
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho_closed_form(cost(1.2), cost(1.2), cost(0.6), 3).unwrap(), 1.0);
        assert_eq!(rho_closed_form(cost(0.6), cost(1.2), cost(0.6), 2).unwrap(), 0.0);
        let hand = (1.0 / 1.2) * (0.64f64 / 1.08).sqrt();
        assert_relative_eq!(
            rho_closed_form(cost(1.0), cost(1.2), cost(0.6), 2).unwrap(),
            hand,
            max_relative = 1e-14
        );
        assert!(rho_closed_form(cost(0.6), cost(0.6), cost(0.6), 2).is_err());
        assert!(rho_closed_form(cost(1.3), cost(1.2), cost(0.6), 2).is_err());
    }

    #[test]
    fn sample_factor_examples() {
        assert_eq!(expected_sample_factor(0.9, 0.0, 0.3).unwrap(), 1.0 / (1.0 - 0.9));
        assert_eq!(expected_sample_factor(0.0, 0.7, 0.2).unwrap(), 1.0);
        assert_relative_eq!(expected_sample_factor(1.0, 1.0, 0.25).unwrap(), 0.25);
        assert!(expected_sample_factor(1.0, 0.0, 0.5).is_err());
        assert!(expected_sample_factor(0.5, 0.5, 0.0).is_err());
    }

    #[test]
    fn sample_factor_monotonicity_follows_recall_versus_rho() {
        let grid: Vec<f64> = (0..=9).map(|k| k as f64 / 10.0).collect();
        for w in grid.windows(2) {
            let below = |e| expected_sample_factor(e, 0.2, 0.5).unwrap();
            let above = |e| expected_sample_factor(e, 0.8, 0.5).unwrap();
            assert!(below(w[1]) > below(w[0]));
            assert!(above(w[1]) < above(w[0]));
            assert_eq!(expected_sample_factor(w[1], 0.5, 0.5).unwrap(), 1.0);
        }
    }

    #[test]
    fn simulated_factor_matches_geometric_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = simulate_sample_factor(0.5, 0.1, 0.0, 0.5, 20_000, &mut rng).unwrap();
        assert!((r - 2.0).abs() < 0.1, "{r}");
        let r = simulate_sample_factor(0.0, 0.1, 0.0, 0.5, 20_000, &mut rng).unwrap();
        assert!((r - 1.0).abs() < 0.05, "{r}");
        assert!(simulate_sample_factor(0.5, 0.1, 0.0, 0.5, 10, &mut rng).is_err());
        assert!(simulate_sample_factor(1.0, 0.1, 0.0, 0.5, 1000, &mut rng).is_err());
        assert!(simulate_sample_factor(0.5, 0.1, 0.9, 0.5, 1000, &mut rng).is_err());
    }

    #[test]
    fn oracle_recovers_straight_line_through_the_gap() {
        let p = make_problem(ProblemKind::NarrowPassage, 2, &ProblemParams::default()).unwrap();
        let oracle = GridOracle::new(&p, ORACLE_GRID_CELLS).unwrap();
        assert!(oracle.grid_cost() >= 0.6);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let path = oracle.optimal_path(&p, &mut rng).unwrap();
        assert!(p.path_free(&path));
        assert!(path.cost().value() < 0.6 * 1.001, "{}", path.cost());
    }

    #[test]
    fn oracle_on_a_detour_matches_hand_geometry() {
        // A wall from the bottom edge to y = 0.2 forces the path over its top corners.
        let wall = HyperRect::from_coords(vec![-0.05, -0.5], vec![0.05, 0.2]).unwrap();
        let p = Problem::new(
            HyperRect::centered_cube(2, 0.5).unwrap(),
            vec![wall],
            State::on_first_axis(-0.3, 2).unwrap(),
            State::on_first_axis(0.3, 2).unwrap(),
            1e-3,
        )
        .unwrap();
        let oracle = GridOracle::new(&p, ORACLE_GRID_CELLS).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let path = oracle.optimal_path(&p, &mut rng).unwrap();
        let exact = 2.0 * (0.25f64 * 0.25 + 0.2 * 0.2).sqrt() + 0.1;
        assert!(path.cost().value() >= exact - 1e-3);
        assert!(path.cost().value() <= exact * 1.01, "{} vs {exact}", path.cost());
        assert!(oracle.grid_cost() <= exact * 1.09);
    }

    #[test]
    fn oracle_rejects_coarse_grids_and_bad_problems() {
        let p = make_problem(ProblemKind::NarrowPassage, 2, &ProblemParams::default()).unwrap();
        assert!(matches!(GridOracle::new(&p, 32), Err(Error::GridTooCoarse { .. })));
        let p3 = make_problem(ProblemKind::NarrowPassage, 3, &ProblemParams::default()).unwrap();
        assert!(GridOracle::new(&p3, ORACLE_GRID_CELLS).is_err());
    }

    #[test]
    fn signature_separates_gap_and_bypass() {
        let p = make_problem(ProblemKind::NarrowPassage, 2, &ProblemParams::default()).unwrap();
        let gap = Path::new(vec![p.start().clone(), p.goal().clone()]).unwrap();
        let bypass = Path::new(
            [[-0.3, 0.0], [-0.1, 0.45], [0.1, 0.45], [0.3, 0.0]]
                .iter()
                .map(|c| State::new(c.to_vec()).unwrap())
                .collect(),
        )
        .unwrap();
        assert_ne!(homotopy_signature(&p, &gap), homotopy_signature(&p, &bypass));
        assert_eq!(homotopy_signature(&p, &gap).len(), 1);
    }

    #[test]
    fn maze_fixture_has_three_distinct_classes() {
        let p = maze_problem();
        let corridor = maze_corridor_path();
        assert!(p.path_free(&corridor));
        let around = |y: f64| {
            Path::new(
                [[-0.4, 0.0], [-0.21, y], [0.21, y], [0.4, 0.0]]
                    .iter()
                    .map(|c| State::new(c.to_vec()).unwrap())
                    .collect(),
            )
            .unwrap()
        };
        let (top, bottom) = (around(0.21), around(-0.21));
        assert!(p.path_free(&top) && p.path_free(&bottom));
        let sigs = [
            homotopy_signature(&p, &corridor),
            homotopy_signature(&p, &top),
            homotopy_signature(&p, &bottom),
        ];
        assert_ne!(sigs[0], sigs[1]);
        assert_ne!(sigs[0], sigs[2]);
        assert_ne!(sigs[1], sigs[2]);
        assert!(top.cost() < corridor.cost());
    }

    #[test]
    fn maze_corridor_solution_fails_the_containment_precondition() {
        let p = maze_problem();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let result = check_theorem1_containment(&p, &maze_corridor_path(), 2.0, &mut rng);
        assert!(matches!(result, Err(Error::HomotopyMismatch(_))));
    }

    #[test]
    fn optimal_path_contains_itself() {
        let p = maze_problem();
        let oracle = GridOracle::new(&p, ORACLE_GRID_CELLS).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let optimal = oracle.optimal_path(&p, &mut rng).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert!(check_theorem1_containment(&p, &optimal, 2.0, &mut rng).unwrap());
    }

    #[test]
    fn recall_is_high_for_a_straight_solution_and_low_in_the_maze() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let options = VerificationOptions {
            gamma_samples: 60_000,
            ..VerificationOptions::quick()
        };
        let check = verify_recall(&options);
        assert!(check.passed, "{}", check.detail);
        let p = maze_problem();
        let est = estimate_gamma(&p, &maze_corridor_path(), maze_corridor_path().cost(), 20_000, &mut rng)
            .unwrap();
        assert!((0.0..=1.0).contains(&est.gamma));
        assert!(est.rho > 0.0 && est.rho <= 1.0);
    }

    #[test]
    fn quick_suite_passes() {
        let report = run_verification(&VerificationOptions::quick());
        for c in &report.checks {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
