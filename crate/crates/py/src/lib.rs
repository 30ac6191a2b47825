//! Python bindings: problems, planner runs, greedy-set sampling, path
//! shortcutting and the verification suite.
//!
//! Build with `cargo build --release -p grrt-py --features extension-module`
//! and copy `libgrrt_py.so` to `grrt_py.so` somewhere on `sys.path`.

use grrt::analysis::{self, VerificationOptions};
use grrt::{ClockMode, Cost, Path, ProblemKind, ProblemParams, ProlateHyperspheroid, State};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn state(coords: Vec<f64>) -> PyResult<State> {
    State::new(coords).map_err(err)
}

fn path(points: Vec<Vec<f64>>) -> PyResult<Path> {
    Path::new(points.into_iter().map(state).collect::<PyResult<_>>()?).map_err(err)
}

fn to_points(path: &Path) -> Vec<Vec<f64>> {
    path.states().iter().map(|s| s.coords().to_vec()).collect()
}

fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A box world with start and goal.
#[pyclass(frozen, module = "grrt_py")]
struct Problem {
    inner: grrt::Problem,
}

#[pymethods]
impl Problem {
    /// Generates a benchmark world: `many_homotopy`, `narrow_passage` or `double_enclosure`.
    #[staticmethod]
    #[pyo3(signature = (kind, dim, params_json=None))]
    fn make(kind: &str, dim: usize, params_json: Option<&str>) -> PyResult<Self> {
        let kind: ProblemKind = kind.parse().map_err(err)?;
        let params: ProblemParams = match params_json {
            Some(text) => serde_json::from_str(text).map_err(err)?,
            None => ProblemParams::default(),
        };
        Ok(Problem {
            inner: grrt::make_problem(kind, dim, &params).map_err(err)?,
        })
    }

    /// Builds a world from explicit boxes given as `(low, high)` pairs.
    #[new]
    #[pyo3(signature = (low, high, obstacles, start, goal, resolution=1e-3))]
    fn new(
        low: Vec<f64>,
        high: Vec<f64>,
        obstacles: Vec<(Vec<f64>, Vec<f64>)>,
        start: Vec<f64>,
        goal: Vec<f64>,
        resolution: f64,
    ) -> PyResult<Self> {
        let bounds = grrt::HyperRect::from_coords(low, high).map_err(err)?;
        let boxes = obstacles
            .into_iter()
            .map(|(l, h)| grrt::HyperRect::from_coords(l, h).map_err(err))
            .collect::<PyResult<_>>()?;
        let inner = grrt::Problem::new(bounds, boxes, state(start)?, state(goal)?, resolution).map_err(err)?;
        Ok(Problem { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Problem {
            inner: grrt::load_problem(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        grrt::save_problem(&self.inner)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn start(&self) -> Vec<f64> {
        self.inner.start().coords().to_vec()
    }

    #[getter]
    fn goal(&self) -> Vec<f64> {
        self.inner.goal().coords().to_vec()
    }

    #[getter]
    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let b = self.inner.bounds();
        (b.low().coords().to_vec(), b.high().coords().to_vec())
    }

    #[getter]
    fn obstacles(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        self.inner
            .obstacles()
            .iter()
            .map(|o| (o.low().coords().to_vec(), o.high().coords().to_vec()))
            .collect()
    }

    fn is_free(&self, x: Vec<f64>) -> PyResult<bool> {
        self.inner.is_free(&state(x)?).map_err(err)
    }

    fn segment_free(&self, a: Vec<f64>, b: Vec<f64>) -> PyResult<bool> {
        let (a, b) = (state(a)?, state(b)?);
        if a.dim() != self.inner.dim() || b.dim() != self.inner.dim() {
            return Err(err("segment endpoints do not match the problem dimension"));
        }
        Ok(self.inner.segment_free(&a, &b))
    }

    fn path_free(&self, points: Vec<Vec<f64>>) -> PyResult<bool> {
        Ok(self.inner.validate_path(&path(points)?).is_ok())
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(dim={}, obstacles={})",
            self.inner.dim(),
            self.inner.obstacles().len()
        )
    }
}

/// Planner settings; mirrors the JSON planner configuration.
#[pyclass(frozen, module = "grrt_py")]
struct PlannerConfig {
    inner: grrt::PlannerConfig,
}

#[pymethods]
impl PlannerConfig {
    /// `virtual_tick` switches to the deterministic clock with that many seconds per iteration.
    #[new]
    #[pyo3(signature = (
        algorithm="grrt_star", seed=0, epsilon=None, time_limit=Some(1.0),
        iteration_limit=None, virtual_tick=None, stop_at_first_solution=false, max_edge=None
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        algorithm: &str,
        seed: u64,
        epsilon: Option<f64>,
        time_limit: Option<f64>,
        iteration_limit: Option<u64>,
        virtual_tick: Option<f64>,
        stop_at_first_solution: bool,
        max_edge: Option<f64>,
    ) -> PyResult<Self> {
        let mut inner = match algorithm {
            "grrt_star" => grrt::PlannerConfig::default(),
            "grrt_star_informed" => grrt::PlannerConfig {
                epsilon: 0.0,
                ..grrt::PlannerConfig::default()
            },
            "rrt_connect" => grrt::PlannerConfig::rrt_connect(),
            other => return Err(err(format!("unknown algorithm '{other}'"))),
        };
        if let Some(e) = epsilon {
            inner.epsilon = e;
        }
        inner.seed = seed;
        inner.time_limit = time_limit;
        inner.iteration_limit = iteration_limit;
        inner.stop_at_first_solution |= stop_at_first_solution;
        inner.max_edge = max_edge.or(inner.max_edge);
        if let Some(t) = virtual_tick {
            inner.clock = ClockMode::Virtual {
                seconds_per_iteration: t,
            };
        }
        inner.validate().map_err(err)?;
        Ok(PlannerConfig { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: grrt::PlannerConfig = serde_json::from_str(text).map_err(err)?;
        inner.validate().map_err(err)?;
        Ok(PlannerConfig { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("config serializes")
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }
}

/// Result of one planner run.
#[pyclass(frozen, get_all, module = "grrt_py")]
struct PlanResult {
    /// Solution waypoints, or `None` when no solution was found.
    path: Option<Vec<Vec<f64>>>,
    /// Final cost; `inf` when unsolved.
    cost: f64,
    /// Anytime trace as `(elapsed_s, cost, tag)` tuples.
    events: Vec<(f64, f64, String)>,
    iterations: u64,
    greedy_draws: u64,
    informed_draws: u64,
    pruned_vertices: u64,
}

/// Runs the configured planner to its limit.
#[pyfunction]
fn plan(py: Python<'_>, problem: &Problem, config: &PlannerConfig) -> PyResult<PlanResult> {
    let (problem, config) = (problem.inner.clone(), config.inner.clone());
    let out = py
        .detach(move || grrt::grrt_star_plan(&problem, config, |_| {}))
        .map_err(err)?;
    Ok(PlanResult {
        path: out.path.as_ref().map(to_points),
        cost: out.cost.value(),
        events: out
            .events
            .iter()
            .map(|e| (e.elapsed, e.cost.value(), e.tag.as_str().to_string()))
            .collect(),
        iterations: out.stats.iterations,
        greedy_draws: out.stats.greedy_draws,
        informed_draws: out.stats.informed_draws,
        pruned_vertices: out.stats.pruned_vertices,
    })
}

/// Random shortcutting; the result never costs more than the input.
#[pyfunction]
#[pyo3(signature = (problem, points, iterations=None, seed=0))]
fn shortcut(
    problem: &Problem,
    points: Vec<Vec<f64>>,
    iterations: Option<usize>,
    seed: u64,
) -> PyResult<Vec<Vec<f64>>> {
    let p = path(points)?;
    let budget = iterations.unwrap_or_else(|| grrt::simplify::default_budget(&p));
    let out = grrt::shortcut(&p, &problem.inner, budget, &mut seeded(seed)).map_err(err)?;
    Ok(to_points(&out))
}

/// Largest start-plus-goal distance sum over the path's waypoints.
#[pyfunction]
fn greedy_transverse_diameter(points: Vec<Vec<f64>>, start: Vec<f64>, goal: Vec<f64>) -> PyResult<f64> {
    let d = grrt::greedy_transverse_diameter(&path(points)?, &state(start)?, &state(goal)?).map_err(err)?;
    Ok(d.value())
}

/// Uniform samples from the prolate hyperspheroid with the given foci and transverse diameter.
#[pyfunction]
#[pyo3(signature = (focus_a, focus_b, transverse, count, seed=0))]
fn sample_phs(
    focus_a: Vec<f64>,
    focus_b: Vec<f64>,
    transverse: f64,
    count: usize,
    seed: u64,
) -> PyResult<Vec<Vec<f64>>> {
    let phs = ProlateHyperspheroid::new(state(focus_a)?, state(focus_b)?, Cost::new(transverse).map_err(err)?)
        .map_err(err)?;
    let mut rng = seeded(seed);
    Ok((0..count)
        .map(|_| grrt::sample_uniform_phs(&phs, &mut rng).into_coords())
        .collect())
}

/// Lebesgue measure of the spheroid with transverse diameter `transverse` and focal distance `focal`.
#[pyfunction]
fn spheroid_measure(transverse: f64, focal: f64, dim: usize) -> PyResult<f64> {
    grrt::spheroid_measure(transverse, focal, dim).map_err(err)
}

/// Measure ratio of the greedy set (`greedy`) to the informed set (`current`).
#[pyfunction]
fn measure_ratio(greedy: f64, current: f64, focal: f64, dim: usize) -> PyResult<f64> {
    let c = |v: f64| Cost::new(v).map_err(err);
    analysis::rho_closed_form(c(greedy)?, c(current)?, c(focal)?, dim).map_err(err)
}

/// Expected-draw ratio of informed to greedy sampling.
#[pyfunction]
fn expected_sample_factor(epsilon: f64, gamma: f64, rho: f64) -> PyResult<f64> {
    analysis::expected_sample_factor(epsilon, gamma, rho).map_err(err)
}

/// Per-crossing signature of the path around obstacle clusters in the first two axes.
#[pyfunction]
fn homotopy_signature(problem: &Problem, points: Vec<Vec<f64>>) -> PyResult<Vec<i64>> {
    Ok(analysis::homotopy_signature(&problem.inner, &path(points)?))
}

/// Runs the Monte-Carlo verification suite; returns the report as JSON text.
#[pyfunction]
#[pyo3(signature = (quick=true, seed=0))]
fn run_verification(py: Python<'_>, quick: bool, seed: u64) -> String {
    let base = if quick {
        VerificationOptions::quick()
    } else {
        VerificationOptions::default()
    };
    let report = py.detach(move || analysis::run_verification(&VerificationOptions { seed, ..base }));
    serde_json::to_string(&report).expect("report serializes")
}

#[pymodule]
fn grrt_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Problem>()?;
    m.add_class::<PlannerConfig>()?;
    m.add_class::<PlanResult>()?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(shortcut, m)?)?;
    m.add_function(wrap_pyfunction!(greedy_transverse_diameter, m)?)?;
    m.add_function(wrap_pyfunction!(sample_phs, m)?)?;
    m.add_function(wrap_pyfunction!(spheroid_measure, m)?)?;
    m.add_function(wrap_pyfunction!(measure_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(expected_sample_factor, m)?)?;
    m.add_function(wrap_pyfunction!(homotopy_signature, m)?)?;
    m.add_function(wrap_pyfunction!(run_verification, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_presets_match_the_planner_ids() {
        let greedy = PlannerConfig::new("grrt_star", 3, None, Some(1.0), None, None, false, None).unwrap();
        assert_eq!(greedy.inner.epsilon, 0.9);
        assert_eq!(greedy.inner.seed, 3);
        let informed = PlannerConfig::new("grrt_star_informed", 0, None, Some(1.0), None, None, false, None).unwrap();
        assert_eq!(informed.inner.epsilon, 0.0);
        let baseline = PlannerConfig::new("rrt_connect", 0, None, None, Some(10), Some(1e-4), false, None).unwrap();
        assert_eq!(baseline.inner.algorithm, grrt::Algorithm::RrtConnect);
        assert!(PlannerConfig::new("rrt", 0, None, Some(1.0), None, None, false, None).is_err());
        assert!(PlannerConfig::new("grrt_star", 0, Some(1.5), Some(1.0), None, None, false, None).is_err());
    }

    #[test]
    fn config_json_round_trips() {
        let c = PlannerConfig::new("grrt_star", 7, Some(0.5), None, Some(100), Some(1e-5), true, Some(0.1)).unwrap();
        let back = PlannerConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back.to_json(), c.to_json());
    }

    #[test]
    fn problems_convert_both_ways() {
        let p = Problem::make("narrow_passage", 3, None).unwrap();
        assert_eq!(p.dim(), 3);
        let q = Problem::from_json(&p.to_json()).unwrap();
        assert_eq!(q.inner, p.inner);
        let built = Problem::new(p.bounds().0, p.bounds().1, p.obstacles(), p.start(), p.goal(), 1e-3).unwrap();
        assert_eq!(built.inner, p.inner);
        assert!(Problem::make("maze", 2, None).is_err());
        assert!(!p.is_free(vec![0.0, 0.3, 0.0]).unwrap());
    }

    #[test]
    fn path_helpers_reject_ragged_input() {
        assert!(path(vec![vec![0.0, 0.0], vec![1.0]]).is_err());
        let p = path(vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(to_points(&p), vec![vec![0.0, 0.0], vec![1.0, 0.0]]);
    }
}
