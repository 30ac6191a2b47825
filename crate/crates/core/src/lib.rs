//! Greedy bidirectional RRT* for geometric path planning in box worlds.
//!
//! The crate provides the planner, abstract benchmark worlds, a path
//! shortcutting pass and the Monte-Carlo checks used to verify the sampling
//! analysis.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod nn;
pub mod planner;
pub mod simplify;
pub mod space;
pub mod tree;
pub mod world;

pub use analysis::{
    check_theorem1_containment, estimate_gamma, expected_sample_factor, homotopy_signature,
    rho_closed_form, run_verification, simulate_sample_factor, GridOracle, SetEstimate,
    VerificationOptions, VerificationReport,
};
pub use error::{Error, Result};
pub use nn::{NearestIndex, VertexId};
pub use planner::{
    grrt_star_plan, rrt_connect_plan, steer, Algorithm, ClockMode, EventTag, ExtendStatus,
    GreedyScope, PlanOutcome, Planner, PlannerConfig, PlannerEvent, PlannerStats,
};
pub use space::{
    greedy_transverse_diameter, l2_heuristic, phs_measure, sample_uniform_box,
    sample_uniform_phs, sample_unit_ball, spheroid_measure, unit_ball_measure, Cost, HyperRect,
    Path, ProlateHyperspheroid, State,
};
pub use simplify::shortcut;
pub use tree::{bridge_cost, extract_path, rewire_radius, SolutionBridge, Tree};
pub use world::{make_problem, load_problem, save_problem, Problem, ProblemKind, ProblemParams};
