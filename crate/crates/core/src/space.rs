//! States, costs, the L2 informed heuristic and prolate hyperspheroids.
//!
//! Under a path-length objective in R^n the set of states whose heuristic
//! value `‖x − start‖ + ‖x − goal‖` is at most some cost `c` is a prolate
//! hyperspheroid with foci at the start and goal and transverse diameter `c`.
//! Both the informed set and the greedy informed set are spheroids of this
//! kind, so everything the planner and the analysis need about them lives here.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for geometric identities on unit-width domains.
pub const GEOMETRIC_TOLERANCE: f64 = 1e-9;

/// Below this slack the spheroid is treated as the focal segment.
const DEGENERATE_SLACK: f64 = 1e-12;

/// A point in R^n with finite coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct State(Vec<f64>);

impl State {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidState("zero-dimensional state".into()));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidState(format!("non-finite coordinate {bad}")));
        }
        Ok(State(coords))
    }

    /// Origin-valued state with `x[0] = first` and zeros elsewhere.
    pub fn on_first_axis(first: f64, dim: usize) -> Result<Self> {
        let mut coords = vec![0.0; dim];
        if let Some(c) = coords.first_mut() {
            *c = first;
        }
        State::new(coords)
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        State(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn distance(&self, other: &State) -> f64 {
        distance(&self.0, &other.0)
    }

    /// Point at parameter `t` on the segment from `self` to `other`.
    pub fn lerp(&self, other: &State, t: f64) -> State {
        State(lerp(&self.0, &other.0, t))
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() == dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: dim,
                got: self.dim(),
            })
        }
    }
}

impl TryFrom<Vec<f64>> for State {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        State::new(v)
    }
}

impl From<State> for Vec<f64> {
    fn from(s: State) -> Self {
        s.0
    }
}

impl AsRef<[f64]> for State {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[inline]
pub(crate) fn distance_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    distance_sq(a, b).sqrt()
}

#[inline]
pub(crate) fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + (y - x) * t).collect()
}

#[inline]
pub(crate) fn heuristic(x: &[f64], start: &[f64], goal: &[f64]) -> f64 {
    distance(x, start) + distance(x, goal)
}

/// A non-negative path cost, with `+∞` meaning "no solution".
///
/// Serializes as a number, or as the string `"inf"` when infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CostRepr", into = "CostRepr")]
pub struct Cost(f64);

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CostRepr {
    Number(f64),
    Token(String),
}

impl TryFrom<CostRepr> for Cost {
    type Error = Error;

    fn try_from(r: CostRepr) -> Result<Self> {
        match r {
            CostRepr::Number(v) => Cost::new(v),
            CostRepr::Token(t) if t == "inf" => Ok(Cost::INFINITE),
            CostRepr::Token(t) => Err(Error::Document(format!("invalid cost token {t:?}"))),
        }
    }
}

impl From<Cost> for CostRepr {
    fn from(c: Cost) -> Self {
        if c.0.is_infinite() {
            CostRepr::Token("inf".into())
        } else {
            CostRepr::Number(c.0)
        }
    }
}

impl Cost {
    pub const ZERO: Cost = Cost(0.0);
    pub const INFINITE: Cost = Cost(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            Err(Error::InvalidCost(value))
        } else {
            // Adding zero folds -0.0 into 0.0 so equality and ordering agree.
            Ok(Cost(value + 0.0))
        }
    }

    pub(crate) fn from_f64_unchecked(value: f64) -> Self {
        debug_assert!(!value.is_nan() && value >= 0.0, "bad cost {value}");
        Cost(value + 0.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl Eq for Cost {}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl TryFrom<f64> for Cost {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Cost::new(v)
    }
}

impl From<Cost> for f64 {
    fn from(c: Cost) -> f64 {
        c.0
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Closed axis-aligned hyperrectangle `[low, high]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperRect {
    low: State,
    high: State,
}

impl HyperRect {
    pub fn new(low: State, high: State) -> Result<Self> {
        low.check_dim(high.dim())?;
        if let Some(i) = (0..low.dim()).find(|&i| low.0[i] > high.0[i]) {
            return Err(Error::InvalidArgument(format!(
                "hyperrectangle has low > high on axis {i} ({} > {})",
                low.0[i], high.0[i]
            )));
        }
        Ok(HyperRect { low, high })
    }

    pub fn from_coords(low: Vec<f64>, high: Vec<f64>) -> Result<Self> {
        HyperRect::new(State::new(low)?, State::new(high)?)
    }

    /// The cube `[-half, half]^dim`.
    pub fn centered_cube(dim: usize, half: f64) -> Result<Self> {
        HyperRect::from_coords(vec![-half; dim], vec![half; dim])
    }

    pub fn low(&self) -> &State {
        &self.low
    }

    pub fn high(&self) -> &State {
        &self.high
    }

    pub fn dim(&self) -> usize {
        self.low.dim()
    }

    /// Closed containment: the boundary counts as inside.
    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.low.0.iter().zip(&self.high.0))
            .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    pub fn measure(&self) -> f64 {
        self.low
            .0
            .iter()
            .zip(&self.high.0)
            .map(|(lo, hi)| hi - lo)
            .product()
    }

    pub fn diagonal(&self) -> f64 {
        self.low.distance(&self.high)
    }

    /// Chebyshev gap between two boxes; zero when they touch or overlap.
    pub fn separation(&self, other: &HyperRect) -> f64 {
        (0..self.dim())
            .map(|i| {
                let a = other.low.0[i] - self.high.0[i];
                let b = self.low.0[i] - other.high.0[i];
                a.max(b).max(0.0)
            })
            .fold(0.0, f64::max)
    }
}

/// A polyline path and its Euclidean length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    states: Vec<State>,
    cost: Cost,
}

impl Path {
    pub fn new(states: Vec<State>) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::InvalidArgument(
                "a path needs at least two states".into(),
            ));
        }
        let dim = states[0].dim();
        for s in &states {
            s.check_dim(dim)?;
        }
        let cost = polyline_length(&states);
        Ok(Path {
            states,
            cost: Cost::from_f64_unchecked(cost),
        })
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn cost(&self) -> Cost {
        self.cost
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn start(&self) -> &State {
        &self.states[0]
    }

    pub fn end(&self) -> &State {
        self.states.last().expect("path has at least two states")
    }

    pub fn into_states(self) -> Vec<State> {
        self.states
    }
}

pub(crate) fn polyline_length(states: &[State]) -> f64 {
    states.windows(2).map(|w| w[0].distance(&w[1])).sum()
}

/// The L2 informed heuristic `‖x − start‖ + ‖x − goal‖`.
pub fn l2_heuristic(x: &State, start: &State, goal: &State) -> Result<Cost> {
    start.check_dim(x.dim())?;
    goal.check_dim(x.dim())?;
    Ok(Cost::from_f64_unchecked(heuristic(&x.0, &start.0, &goal.0)))
}

/// Largest heuristic value over the states of `path`: the transverse
/// diameter of the greedy informed set built from it.
pub fn greedy_transverse_diameter(path: &Path, start: &State, goal: &State) -> Result<Cost> {
    let mut best = Cost::ZERO;
    for x in path.states() {
        // First maximum wins; only the value is consumed downstream.
        let h = l2_heuristic(x, start, goal)?;
        if h > best {
            best = h;
        }
    }
    Ok(best)
}

/// Lebesgue measure of the unit n-ball, `π^{n/2} / Γ(n/2 + 1)`.
///
/// Evaluated through the recurrence `ζ_n = (2π / n) ζ_{n−2}` from `ζ_0 = 1`,
/// `ζ_1 = 2`, which is exact in the number of multiplications it performs.
pub fn unit_ball_measure(n: i64) -> Result<f64> {
    if n <= 0 {
        return Err(Error::InvalidArgument(format!(
            "unit ball dimension must be positive, got {n}"
        )));
    }
    let mut value = if n % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if n % 2 == 0 { 2 } else { 3 };
    while k <= n {
        value *= 2.0 * PI / k as f64;
        k += 2;
    }
    Ok(value)
}

/// Closed-form measure of the spheroid with transverse diameter `c` and
/// focal distance `c_min`: `(ζ_n / 2^n) · c · (c² − c_min²)^{(n−1)/2}`.
pub fn spheroid_measure(transverse: f64, focal: f64, n: usize) -> Result<f64> {
    if transverse < focal {
        return Err(Error::EmptyHyperspheroid {
            transverse,
            focal,
        });
    }
    let zeta = unit_ball_measure(n as i64)?;
    let conj = ((transverse - focal) * (transverse + focal)).max(0.0);
    Ok(zeta / 2f64.powi(n as i32) * transverse * conj.powf((n as f64 - 1.0) / 2.0))
}

/// Measure of `phs` in its own dimension.
pub fn phs_measure(phs: &ProlateHyperspheroid, n: usize) -> Result<f64> {
    spheroid_measure(phs.d_transverse.value(), phs.d_min.value(), n)
}

/// Prolate hyperspheroid with foci at the planning start and goal.
#[derive(Clone, Debug, PartialEq)]
pub struct ProlateHyperspheroid {
    focus_a: State,
    focus_b: State,
    center: Vec<f64>,
    d_transverse: Cost,
    d_min: Cost,
    /// Row-major `n×n` orthonormal matrix whose first column is the unit focal vector.
    rotation: Vec<f64>,
}

impl ProlateHyperspheroid {
    pub fn new(focus_a: State, focus_b: State, d_transverse: Cost) -> Result<Self> {
        focus_b.check_dim(focus_a.dim())?;
        let d_min = focus_a.distance(&focus_b);
        if d_transverse.value() < d_min {
            return Err(Error::EmptyHyperspheroid {
                transverse: d_transverse.value(),
                focal: d_min,
            });
        }
        let n = focus_a.dim();
        let center = lerp(&focus_a.0, &focus_b.0, 0.5);
        let rotation = if d_min > 0.0 {
            let unit: Vec<f64> = focus_b
                .0
                .iter()
                .zip(&focus_a.0)
                .map(|(b, a)| (b - a) / d_min)
                .collect();
            rotation_to(&unit)
        } else {
            identity(n)
        };
        Ok(ProlateHyperspheroid {
            focus_a,
            focus_b,
            center,
            d_transverse,
            d_min: Cost::from_f64_unchecked(d_min),
            rotation,
        })
    }

    pub fn dim(&self) -> usize {
        self.focus_a.dim()
    }

    pub fn focus_a(&self) -> &State {
        &self.focus_a
    }

    pub fn focus_b(&self) -> &State {
        &self.focus_b
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn d_transverse(&self) -> Cost {
        self.d_transverse
    }

    pub fn d_min(&self) -> Cost {
        self.d_min
    }

    /// Row-major rotation matrix.
    pub fn rotation(&self) -> &[f64] {
        &self.rotation
    }

    pub fn is_degenerate(&self) -> bool {
        self.d_transverse.value() - self.d_min.value() < DEGENERATE_SLACK
    }

    pub fn contains(&self, x: &State) -> bool {
        heuristic(&x.0, &self.focus_a.0, &self.focus_b.0)
            <= self.d_transverse.value() + GEOMETRIC_TOLERANCE
    }

    /// Semi-axis lengths: `c/2` along the focal axis, `√(c² − c_min²)/2` across it.
    pub fn semi_axes(&self) -> (f64, f64) {
        let c = self.d_transverse.value();
        let d = self.d_min.value();
        (c / 2.0, (c * c - d * d).max(0.0).sqrt() / 2.0)
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

/// Orthonormal matrix whose first column is `unit`, from a Householder reflection.
fn rotation_to(unit: &[f64]) -> Vec<f64> {
    let n = unit.len();
    // Reflect e1 onto ∓unit, picking the sign that keeps vᵀv away from zero.
    let flip = unit[0] > 0.0;
    let mut v: Vec<f64> = unit.iter().map(|u| if flip { *u } else { -*u }).collect();
    v[0] += 1.0;
    let vv: f64 = v.iter().map(|x| x * x).sum();
    let mut m = identity(n);
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] -= 2.0 * v[i] * v[j] / vv;
        }
    }
    // With v = e1 + unit the reflection sends e1 to -unit; negate that column.
    if flip {
        for i in 0..n {
            m[i * n] = -m[i * n];
        }
    }
    m
}

/// Uniform sample from the unit n-ball.
pub fn sample_unit_ball<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let dir: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dir.iter().map(|d: &f64| d * d).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            continue;
        }
        let radius = rng.random::<f64>().powf(1.0 / n as f64);
        return dir.into_iter().map(|d| d / norm * radius).collect();
    }
}

/// Uniform sample from the spheroid.
///
/// A unit-ball sample is stretched by the semi-axes, rotated onto the focal
/// axis and translated to the center. A degenerate spheroid is sampled
/// uniformly along the focal segment.
pub fn sample_uniform_phs<R: Rng + ?Sized>(phs: &ProlateHyperspheroid, rng: &mut R) -> State {
    if phs.is_degenerate() {
        let t = rng.random::<f64>();
        return phs.focus_a.lerp(&phs.focus_b, t);
    }
    let n = phs.dim();
    let (major, minor) = phs.semi_axes();
    let mut ball = sample_unit_ball(n, rng);
    ball[0] *= major;
    for b in ball.iter_mut().skip(1) {
        *b *= minor;
    }
    let coords = (0..n)
        .map(|i| {
            phs.center[i]
                + (0..n)
                    .map(|j| phs.rotation[i * n + j] * ball[j])
                    .sum::<f64>()
        })
        .collect();
    State::from_vec_unchecked(coords)
}

/// Uniform sample from a box.
pub fn sample_uniform_box<R: Rng + ?Sized>(bounds: &HyperRect, rng: &mut R) -> State {
    let coords = bounds
        .low
        .0
        .iter()
        .zip(&bounds.high.0)
        .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
        .collect();
    State::from_vec_unchecked(coords)
}
