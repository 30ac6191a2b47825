//! Randomized arc-length shortcutting of feasible paths.

use rand::Rng;

use crate::error::Result;
use crate::space::{self, Path, State};
use crate::world::Problem;

/// Default shortcut budget for a path: ten attempts per state.
pub fn default_budget(path: &Path) -> usize {
    10 * path.states().len()
}

/// Shortens `path` by repeatedly replacing the stretch between two random
/// arc-length positions with a straight segment whenever that segment is
/// collision free. Endpoints are kept and the cost never increases.
pub fn shortcut<R: Rng + ?Sized>(
    path: &Path,
    problem: &Problem,
    iterations: usize,
    rng: &mut R,
) -> Result<Path> {
    problem.validate_path(path)?;
    let mut pts: Vec<Vec<f64>> = path.states().iter().map(|s| s.coords().to_vec()).collect();
    let mut cumulative = arc_lengths(&pts);
    for _ in 0..iterations {
        let total = *cumulative.last().expect("non-empty");
        if pts.len() < 3 || total <= 0.0 {
            break;
        }
        let mut s1 = rng.random::<f64>() * total;
        let mut s2 = rng.random::<f64>() * total;
        if s1 > s2 {
            std::mem::swap(&mut s1, &mut s2);
        }
        let i = segment_at(&cumulative, s1);
        let j = segment_at(&cumulative, s2);
        if i == j {
            continue;
        }
        let p1 = point_at(&pts, &cumulative, i, s1);
        let p2 = point_at(&pts, &cumulative, j, s2);
        let replacement = space::distance(&p1, &p2);
        if !(replacement < s2 - s1 - 1e-12) {
            continue;
        }
        if !problem.segment_free_coords(&p1, &p2)
            || !problem.segment_free_coords(&pts[i], &p1)
            || !problem.segment_free_coords(&p2, &pts[j + 1])
        {
            continue;
        }
        let mut next = Vec::with_capacity(pts.len());
        next.extend_from_slice(&pts[..=i]);
        if p1 != pts[i] {
            next.push(p1);
        }
        if p2 != pts[j + 1] {
            next.push(p2);
        }
        next.extend_from_slice(&pts[j + 1..]);
        pts = next;
        cumulative = arc_lengths(&pts);
    }
    Path::new(pts.into_iter().map(State::from_vec_unchecked).collect())
}

fn arc_lengths(pts: &[Vec<f64>]) -> Vec<f64> {
    let mut out = Vec::with_capacity(pts.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in pts.windows(2) {
        acc += space::distance(&w[0], &w[1]);
        out.push(acc);
    }
    out
}

/// Index of the segment containing arc length `s`.
fn segment_at(cumulative: &[f64], s: f64) -> usize {
    let k = cumulative.partition_point(|&c| c <= s);
    k.saturating_sub(1).min(cumulative.len() - 2)
}

fn point_at(pts: &[Vec<f64>], cumulative: &[f64], seg: usize, s: f64) -> Vec<f64> {
    let len = cumulative[seg + 1] - cumulative[seg];
    if len <= 0.0 {
        return pts[seg].clone();
    }
    let t = ((s - cumulative[seg]) / len).clamp(0.0, 1.0);
    space::lerp(&pts[seg], &pts[seg + 1], t)
}
