//! Hyperrectangle obstacle worlds and the three abstract benchmark problems.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{self, HyperRect, Path, State};

pub const PROBLEM_FORMAT_VERSION: u32 = 1;

/// Default edge-checking resolution as a fraction of the domain diagonal.
pub const DEFAULT_RESOLUTION: f64 = 1e-3;

/// One planning instance: a bounded box, closed box obstacles, start and goal.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    bounds: HyperRect,
    obstacles: Vec<HyperRect>,
    start: State,
    goal: State,
    resolution: f64,
    step: f64,
}

impl Problem {
    pub fn new(
        bounds: HyperRect,
        obstacles: Vec<HyperRect>,
        start: State,
        goal: State,
        resolution: f64,
    ) -> Result<Self> {
        let dim = bounds.dim();
        for o in &obstacles {
            if o.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: o.dim(),
                });
            }
        }
        start.check_dim(dim)?;
        goal.check_dim(dim)?;
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "collision resolution must be positive, got {resolution}"
            )));
        }
        let step = resolution * bounds.diagonal();
        let p = Problem {
            bounds,
            obstacles,
            start,
            goal,
            resolution,
            step,
        };
        if !p.is_free_coords(p.start.coords()) {
            return Err(Error::InvalidProblem("start state is in collision".into()));
        }
        if !p.is_free_coords(p.goal.coords()) {
            return Err(Error::InvalidProblem("goal state is in collision".into()));
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn bounds(&self) -> &HyperRect {
        &self.bounds
    }

    pub fn obstacles(&self) -> &[HyperRect] {
        &self.obstacles
    }

    pub fn start(&self) -> &State {
        &self.start
    }

    pub fn goal(&self) -> &State {
        &self.goal
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Copy of this problem with a different edge-checking resolution.
    pub fn with_resolution(&self, resolution: f64) -> Result<Problem> {
        Problem::new(
            self.bounds.clone(),
            self.obstacles.clone(),
            self.start.clone(),
            self.goal.clone(),
            resolution,
        )
    }

    /// Largest spacing between checked states along an edge.
    pub fn check_spacing(&self) -> f64 {
        self.step
    }

    /// Distance between start and goal, the lower bound on every solution cost.
    pub fn focal_distance(&self) -> f64 {
        self.start.distance(&self.goal)
    }

    pub fn is_free(&self, x: &State) -> Result<bool> {
        x.check_dim(self.dim())?;
        Ok(self.is_free_coords(x.coords()))
    }

    #[inline]
    pub(crate) fn is_free_coords(&self, x: &[f64]) -> bool {
        self.bounds.contains(x) && !self.obstacles.iter().any(|o| o.contains(x))
    }

    /// Discrete edge check at spacing `resolution · diagonal`.
    ///
    /// The edge is subdivided into a power-of-two number of intervals and
    /// checked coarse to fine, so halving the resolution checks a superset of
    /// the states checked before. Endpoints are put in a canonical order first,
    /// which makes the answer independent of edge direction.
    pub fn segment_free(&self, a: &State, b: &State) -> bool {
        assert_eq!(a.dim(), b.dim(), "segment endpoints differ in dimension");
        self.segment_free_coords(a.coords(), b.coords())
    }

    pub(crate) fn segment_free_coords(&self, a: &[f64], b: &[f64]) -> bool {
        let (a, b) = if lexicographic_le(a, b) { (a, b) } else { (b, a) };
        if !self.is_free_coords(a) || !self.is_free_coords(b) {
            return false;
        }
        let levels = self.subdivision_levels(space::distance(a, b));
        let mut point = vec![0.0; a.len()];
        for level in 1..=levels {
            let denom = (1u64 << level) as f64;
            for j in (1..(1u64 << level)).step_by(2) {
                let t = j as f64 / denom;
                for (p, (x, y)) in point.iter_mut().zip(a.iter().zip(b)) {
                    *p = x + (y - x) * t;
                }
                if !self.is_free_coords(&point) {
                    return false;
                }
            }
        }
        true
    }

    /// Parameters `t ∈ [0, 1]` of every state [`Problem::segment_free`] checks on an edge of this length.
    pub fn segment_check_parameters(&self, length: f64) -> Vec<f64> {
        let levels = self.subdivision_levels(length);
        let k = 1u64 << levels;
        (0..=k).map(|i| i as f64 / k as f64).collect()
    }

    fn subdivision_levels(&self, length: f64) -> u32 {
        if length <= self.step {
            return 0;
        }
        let ratio = length / self.step;
        let mut levels = ratio.log2().ceil().max(0.0) as u32;
        // Guard against log2 rounding down at exact powers of two.
        while ((1u64 << levels) as f64) * self.step < length {
            levels += 1;
        }
        levels.min(40)
    }

    /// Every consecutive edge of `path` is collision free.
    pub fn path_free(&self, path: &Path) -> bool {
        path.states()
            .windows(2)
            .all(|w| self.segment_free(&w[0], &w[1]))
    }

    /// Checks that `path` runs from this problem's start to its goal without collision.
    pub fn validate_path(&self, path: &Path) -> Result<()> {
        if path.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: path.dim(),
            });
        }
        if path.start().distance(&self.start) > space::GEOMETRIC_TOLERANCE
            || path.end().distance(&self.goal) > space::GEOMETRIC_TOLERANCE
        {
            return Err(Error::InfeasiblePath(
                "path does not join start to goal".into(),
            ));
        }
        for (i, w) in path.states().windows(2).enumerate() {
            if !self.segment_free(&w[0], &w[1]) {
                return Err(Error::InfeasiblePath(format!("segment {i} collides")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ProblemDocument::from(self)).expect("problem serializes")
    }

    pub fn from_json(text: &str) -> Result<Problem> {
        let doc: ProblemDocument =
            serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
        doc.into_problem()
    }
}

fn lexicographic_le(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    true
}

/// Serialize a problem to its JSON document.
pub fn save_problem(problem: &Problem) -> String {
    problem.to_json()
}

/// Parse a problem from its JSON document.
pub fn load_problem(text: &str) -> Result<Problem> {
    Problem::from_json(text)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemDocument {
    format: u32,
    dim: usize,
    bounds: BoxDocument,
    obstacles: Vec<BoxDocument>,
    start: Vec<f64>,
    goal: Vec<f64>,
    resolution: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxDocument {
    low: Vec<f64>,
    high: Vec<f64>,
}

impl From<&HyperRect> for BoxDocument {
    fn from(r: &HyperRect) -> Self {
        BoxDocument {
            low: r.low().coords().to_vec(),
            high: r.high().coords().to_vec(),
        }
    }
}

impl BoxDocument {
    fn into_rect(self, dim: usize, what: &str) -> Result<HyperRect> {
        if self.low.len() != dim || self.high.len() != dim {
            return Err(Error::Document(format!(
                "{what} has dimension {}/{} but the document declares {dim}",
                self.low.len(),
                self.high.len()
            )));
        }
        HyperRect::from_coords(self.low, self.high)
            .map_err(|e| Error::Document(format!("{what}: {e}")))
    }
}

impl From<&Problem> for ProblemDocument {
    fn from(p: &Problem) -> Self {
        ProblemDocument {
            format: PROBLEM_FORMAT_VERSION,
            dim: p.dim(),
            bounds: BoxDocument::from(&p.bounds),
            obstacles: p.obstacles.iter().map(BoxDocument::from).collect(),
            start: p.start.coords().to_vec(),
            goal: p.goal.coords().to_vec(),
            resolution: p.resolution,
        }
    }
}

impl ProblemDocument {
    fn into_problem(self) -> Result<Problem> {
        if self.format != PROBLEM_FORMAT_VERSION {
            return Err(Error::Document(format!(
                "unsupported problem format {} (expected {PROBLEM_FORMAT_VERSION})",
                self.format
            )));
        }
        let dim = self.dim;
        let bounds = self.bounds.into_rect(dim, "bounds")?;
        let obstacles = self
            .obstacles
            .into_iter()
            .enumerate()
            .map(|(i, o)| o.into_rect(dim, &format!("obstacle {i}")))
            .collect::<Result<Vec<_>>>()?;
        if self.start.len() != dim || self.goal.len() != dim {
            return Err(Error::Document("start/goal dimension mismatch".into()));
        }
        Problem::new(
            bounds,
            obstacles,
            State::new(self.start)?,
            State::new(self.goal)?,
            self.resolution,
        )
    }
}

/// The abstract benchmark worlds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    ManyHomotopy,
    NarrowPassage,
    DoubleEnclosure,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 3] = [
        ProblemKind::ManyHomotopy,
        ProblemKind::NarrowPassage,
        ProblemKind::DoubleEnclosure,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::ManyHomotopy => "many_homotopy",
            ProblemKind::NarrowPassage => "narrow_passage",
            ProblemKind::DoubleEnclosure => "double_enclosure",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown problem kind '{s}'")))
    }
}

/// Obstacle layout parameters. Lengths are in units of the domain width.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProblemParams {
    pub resolution: f64,
    /// Narrow passage: thickness of the wall along the first axis.
    pub wall_thickness: f64,
    /// Narrow passage: width of the gap, centered on the start–goal axis.
    pub gap_width: f64,
    /// Narrow passage: width of the opening between the wall's far end and the domain boundary.
    pub bypass_width: f64,
    /// Many homotopy: number of obstacles per row and column.
    pub grid_count: usize,
    pub cube_edge: f64,
    pub grid_pitch: f64,
    /// Double enclosure: outer edge of each hollow box.
    pub enclosure_edge: f64,
    pub enclosure_wall: f64,
    pub enclosure_opening: f64,
}

impl Default for ProblemParams {
    fn default() -> Self {
        ProblemParams {
            resolution: DEFAULT_RESOLUTION,
            wall_thickness: 0.1,
            gap_width: 0.04,
            bypass_width: 0.1,
            grid_count: 4,
            cube_edge: 0.1,
            grid_pitch: 0.25,
            enclosure_edge: 0.3,
            enclosure_wall: 0.02,
            enclosure_opening: 0.1,
        }
    }
}

const HALF_WIDTH: f64 = 0.5;

/// A box given by its extent in the first two axes, spanning the whole
/// domain along every further axis.
fn extruded(n: usize, x: (f64, f64), y: (f64, f64)) -> Result<HyperRect> {
    let mut low = vec![-HALF_WIDTH; n];
    let mut high = vec![HALF_WIDTH; n];
    low[0] = x.0;
    high[0] = x.1;
    low[1] = y.0;
    high[1] = y.1;
    HyperRect::from_coords(low, high)
}

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidArgument(msg.to_string()))
    }
}

/// Builds one of the abstract benchmark problems in R^n on the domain `[-0.5, 0.5]^n`.
///
/// The layouts are defined in the first two axes and extruded across every
/// further axis.
pub fn make_problem(kind: ProblemKind, n: usize, params: &ProblemParams) -> Result<Problem> {
    require(n >= 2, "benchmark problems need at least two dimensions")?;
    let bounds = HyperRect::centered_cube(n, HALF_WIDTH)?;
    let (start_x, goal_x, obstacles) = match kind {
        ProblemKind::ManyHomotopy => (-0.25, 0.25, many_homotopy(n, params)?),
        ProblemKind::NarrowPassage => (-0.3, 0.3, narrow_passage(n, params)?),
        ProblemKind::DoubleEnclosure => (-0.3, 0.3, double_enclosure(n, params)?),
    };
    Problem::new(
        bounds,
        obstacles,
        State::on_first_axis(start_x, n)?,
        State::on_first_axis(goal_x, n)?,
        params.resolution,
    )
}

fn many_homotopy(n: usize, p: &ProblemParams) -> Result<Vec<HyperRect>> {
    require(p.grid_count >= 1, "grid_count must be at least 1")?;
    require(p.cube_edge > 0.0, "cube_edge must be positive")?;
    require(p.grid_pitch >= p.cube_edge, "grid_pitch must be at least cube_edge")?;
    require(
        p.grid_pitch * (p.grid_count as f64 - 1.0) + p.cube_edge <= 2.0 * HALF_WIDTH,
        "obstacle grid does not fit in the domain",
    )?;
    let offset = -p.grid_pitch * (p.grid_count as f64 - 1.0) / 2.0;
    let h = p.cube_edge / 2.0;
    let mut out = Vec::with_capacity(p.grid_count * p.grid_count);
    for i in 0..p.grid_count {
        for j in 0..p.grid_count {
            let cx = offset + p.grid_pitch * i as f64;
            let cy = offset + p.grid_pitch * j as f64;
            out.push(extruded(n, (cx - h, cx + h), (cy - h, cy + h))?);
        }
    }
    Ok(out)
}

fn narrow_passage(n: usize, p: &ProblemParams) -> Result<Vec<HyperRect>> {
    require(p.gap_width > 0.0, "gap_width must be positive")?;
    require(p.wall_thickness > 0.0, "wall_thickness must be positive")?;
    require(p.wall_thickness < 0.6, "wall would swallow the start or goal")?;
    require(p.bypass_width > 0.0, "bypass_width must be positive")?;
    require(
        p.gap_width / 2.0 < HALF_WIDTH - p.bypass_width,
        "gap and bypass overlap",
    )?;
    let t = p.wall_thickness / 2.0;
    let g = p.gap_width / 2.0;
    Ok(vec![
        // Anchored to the lower boundary.
        extruded(n, (-t, t), (-HALF_WIDTH, -g))?,
        // Free-standing upper part; the bypass runs between it and the boundary.
        extruded(n, (-t, t), (g, HALF_WIDTH - p.bypass_width))?,
    ])
}

fn double_enclosure(n: usize, p: &ProblemParams) -> Result<Vec<HyperRect>> {
    let e = p.enclosure_edge;
    let w = p.enclosure_wall;
    let o = p.enclosure_opening;
    require(w > 0.0 && o > 0.0 && e > 0.0, "enclosure sizes must be positive")?;
    require(2.0 * w < e, "enclosure walls leave no interior")?;
    require(o < e - 2.0 * w, "opening wider than the enclosure face")?;
    require(e / 2.0 < 0.3, "enclosures would overlap")?;
    require(0.3 + e / 2.0 < HALF_WIDTH, "enclosures exceed the domain")?;
    let h = e / 2.0;
    let mut out = Vec::new();
    for (cx, outward) in [(-0.3, -1.0), (0.3, 1.0)] {
        let (x0, x1) = (cx - h, cx + h);
        // Top and bottom faces.
        out.push(extruded(n, (x0, x1), (h - w, h))?);
        out.push(extruded(n, (x0, x1), (-h, -h + w))?);
        // Solid face toward the other enclosure.
        let inner = if outward < 0.0 { (x1 - w, x1) } else { (x0, x0 + w) };
        out.push(extruded(n, inner, (-h, h))?);
        // Outward face split around the opening.
        let outer = if outward < 0.0 { (x0, x0 + w) } else { (x1 - w, x1) };
        out.push(extruded(n, outer, (-h, -o / 2.0))?);
        out.push(extruded(n, outer, (o / 2.0, h))?);
    }
    Ok(out)
}
