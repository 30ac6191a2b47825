//! Rooted search trees with cost-to-come bookkeeping, rewiring and pruning.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::nn::{NearestIndex, VertexId};
use crate::space::{self, unit_ball_measure, Cost, Path, State};

#[derive(Clone, Debug)]
struct Vertex {
    state: State,
    parent: Option<VertexId>,
    children: Vec<VertexId>,
    cost: f64,
    alive: bool,
}

/// A tree rooted at the start or the goal.
///
/// Vertex ids are assigned sequentially and never reused; pruned vertices
/// are tombstoned.
#[derive(Clone, Debug)]
pub struct Tree {
    vertices: Vec<Vertex>,
    index: NearestIndex,
    live: usize,
}

/// An edge joining a start-tree vertex to a goal-tree vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SolutionBridge {
    pub start_vertex: VertexId,
    pub goal_vertex: VertexId,
}

impl Tree {
    pub const ROOT: VertexId = VertexId(0);

    pub fn new(root: State) -> Self {
        let mut index = NearestIndex::new(root.dim());
        index
            .insert(Self::ROOT, root.coords())
            .expect("fresh index accepts its root");
        Tree {
            vertices: vec![Vertex {
                state: root,
                parent: None,
                children: Vec::new(),
                cost: 0.0,
                alive: true,
            }],
            index,
            live: 1,
        }
    }

    pub fn root(&self) -> &State {
        &self.vertices[0].state
    }

    pub fn dim(&self) -> usize {
        self.root().dim()
    }

    /// Number of live vertices.
    pub fn len(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    /// Number of ids ever handed out, live or pruned.
    pub fn capacity(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_live(&self, id: VertexId) -> bool {
        self.vertices.get(id.0).is_some_and(|v| v.alive)
    }

    fn live_vertex(&self, id: VertexId) -> Result<&Vertex> {
        match self.vertices.get(id.0) {
            Some(v) if v.alive => Ok(v),
            _ => Err(Error::UnknownVertex(id.0)),
        }
    }

    pub fn state(&self, id: VertexId) -> Result<&State> {
        Ok(&self.live_vertex(id)?.state)
    }

    /// Cost-to-come from the root.
    pub fn cost(&self, id: VertexId) -> Result<Cost> {
        Ok(Cost::from_f64_unchecked(self.live_vertex(id)?.cost))
    }

    pub fn parent(&self, id: VertexId) -> Result<Option<VertexId>> {
        Ok(self.live_vertex(id)?.parent)
    }

    pub fn children(&self, id: VertexId) -> Result<&[VertexId]> {
        Ok(&self.live_vertex(id)?.children)
    }

    // Unchecked accessors for the planner's inner loop; ids come from this tree's index.
    #[inline]
    pub(crate) fn coords_of(&self, id: VertexId) -> &[f64] {
        self.vertices[id.0].state.coords()
    }

    #[inline]
    pub(crate) fn cost_of(&self, id: VertexId) -> f64 {
        self.vertices[id.0].cost
    }

    #[inline]
    pub(crate) fn parent_of(&self, id: VertexId) -> Option<VertexId> {
        self.vertices[id.0].parent
    }

    pub fn live_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| v.alive)
            .map(|(i, _)| VertexId(i))
    }

    pub fn nearest(&self, x: &[f64]) -> Result<VertexId> {
        self.index.nearest(x)
    }

    pub fn near(&self, x: &[f64], r: f64) -> Vec<VertexId> {
        self.index.near(x, r)
    }

    pub fn index(&self) -> &NearestIndex {
        &self.index
    }

    /// Adds `x` as a child of `parent`.
    pub fn add_child(&mut self, parent: VertexId, x: State) -> Result<VertexId> {
        x.check_dim(self.dim())?;
        let parent_cost = self.live_vertex(parent)?.cost;
        let id = VertexId(self.vertices.len());
        let cost = parent_cost + space::distance(self.coords_of(parent), x.coords());
        self.index.insert(id, x.coords())?;
        self.vertices.push(Vertex {
            state: x,
            parent: Some(parent),
            children: Vec::new(),
            cost,
            alive: true,
        });
        self.vertices[parent.0].children.push(id);
        self.live += 1;
        Ok(id)
    }

    /// Moves `child` under `new_parent` and refreshes costs in its subtree.
    pub fn rewire_parent(&mut self, child: VertexId, new_parent: VertexId) -> Result<()> {
        let old_parent = self.live_vertex(child)?.parent;
        self.live_vertex(new_parent)?;
        let Some(old_parent) = old_parent else {
            return Err(Error::Cycle {
                child: child.0,
                new_parent: new_parent.0,
            });
        };
        // new_parent must not lie in child's subtree.
        let mut cursor = Some(new_parent);
        while let Some(v) = cursor {
            if v == child {
                return Err(Error::Cycle {
                    child: child.0,
                    new_parent: new_parent.0,
                });
            }
            cursor = self.vertices[v.0].parent;
        }
        let siblings = &mut self.vertices[old_parent.0].children;
        if let Some(pos) = siblings.iter().position(|&c| c == child) {
            siblings.swap_remove(pos);
        }
        self.vertices[new_parent.0].children.push(child);
        self.vertices[child.0].parent = Some(new_parent);
        self.propagate_cost(child);
        Ok(())
    }

    fn propagate_cost(&mut self, from: VertexId) {
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            let parent = self.vertices[v.0].parent.expect("non-root vertex");
            let cost = self.vertices[parent.0].cost
                + space::distance(self.coords_of(parent), self.coords_of(v));
            self.vertices[v.0].cost = cost;
            stack.extend_from_slice(&self.vertices[v.0].children);
        }
    }

    /// Removes every vertex whose heuristic value exceeds `threshold`, along
    /// with its descendants. Returns the number of vertices removed.
    pub fn prune(&mut self, threshold: Cost, start: &State, goal: &State) -> usize {
        let limit = threshold.value();
        if !threshold.is_finite() {
            return 0;
        }
        // Pre-order walk from the root; a failing vertex takes its whole subtree.
        let mut removed = 0;
        let mut stack = vec![Self::ROOT];
        let mut doomed = Vec::new();
        while let Some(v) = stack.pop() {
            let h = space::heuristic(self.coords_of(v), start.coords(), goal.coords());
            if h > limit && v != Self::ROOT {
                doomed.push(v);
            } else {
                stack.extend_from_slice(&self.vertices[v.0].children);
            }
        }
        for top in doomed {
            if let Some(parent) = self.vertices[top.0].parent {
                let siblings = &mut self.vertices[parent.0].children;
                if let Some(pos) = siblings.iter().position(|&c| c == top) {
                    siblings.swap_remove(pos);
                }
            }
            let mut stack = vec![top];
            while let Some(v) = stack.pop() {
                let vertex = &mut self.vertices[v.0];
                vertex.alive = false;
                stack.append(&mut vertex.children);
                self.index.remove(v).expect("live vertex is indexed");
                self.live -= 1;
                removed += 1;
            }
        }
        removed
    }

    /// States from the root down to `id`.
    pub fn branch(&self, id: VertexId) -> Result<Vec<State>> {
        self.live_vertex(id)?;
        let mut out = Vec::new();
        let mut cursor = Some(id);
        while let Some(v) = cursor {
            out.push(self.vertices[v.0].state.clone());
            cursor = self.vertices[v.0].parent;
        }
        out.reverse();
        Ok(out)
    }

    /// Ids on the walk from `id` up to the root, `id` first.
    pub fn ancestry(&self, id: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        std::iter::successors(Some(id), move |v| self.vertices[v.0].parent)
    }

    /// Plain-data snapshot for debugging.
    pub fn dump(&self) -> TreeDump {
        TreeDump {
            vertices: self
                .live_ids()
                .map(|id| {
                    let v = &self.vertices[id.0];
                    DumpVertex {
                        id: id.0,
                        parent: v.parent.map(|p| p.0),
                        cost: v.cost,
                        state: v.state.coords().to_vec(),
                    }
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TreeDump {
    pub vertices: Vec<DumpVertex>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DumpVertex {
    pub id: usize,
    pub parent: Option<usize>,
    pub cost: f64,
    pub state: Vec<f64>,
}

/// Cost of the solution through `bridge`: `g_start(a) + ‖a − b‖ + g_goal(b)`.
pub fn bridge_cost(bridge: SolutionBridge, start_tree: &Tree, goal_tree: &Tree) -> Result<Cost> {
    let a = start_tree.live_vertex(bridge.start_vertex)?;
    let b = goal_tree.live_vertex(bridge.goal_vertex)?;
    Ok(Cost::from_f64_unchecked(
        a.cost + a.state.distance(&b.state) + b.cost,
    ))
}

/// Joins the start tree's branch to `bridge.start_vertex` with the reversed
/// goal tree's branch to `bridge.goal_vertex`.
pub fn extract_path(bridge: SolutionBridge, start_tree: &Tree, goal_tree: &Tree) -> Result<Path> {
    let mut states = start_tree.branch(bridge.start_vertex)?;
    let mut back = goal_tree.branch(bridge.goal_vertex)?;
    back.reverse();
    let mut back = back.into_iter();
    // A connect step that reached its target duplicates the bridge state.
    if let (Some(last), Some(first)) = (states.last(), back.as_slice().first()) {
        if last == first && back.len() > 1 {
            back.next();
        }
    }
    states.extend(back);
    if states.len() < 2 {
        // Start and goal coincide.
        states.push(states[0].clone());
    }
    Path::new(states)
}

/// Radius of the rewiring ball:
/// `min(max_edge, η · (2(1 + 1/n) · (λ / ζ_n) · (log m / m))^{1/n})`.
pub fn rewire_radius(m: usize, n: usize, free_measure_bound: f64, eta: f64, max_edge: f64) -> f64 {
    if m == 0 || n == 0 {
        return 0.0;
    }
    let zeta = unit_ball_measure(n as i64).expect("positive dimension");
    let mf = m as f64;
    let nf = n as f64;
    let gamma = 2.0 * (1.0 + 1.0 / nf) * (free_measure_bound / zeta);
    let r = eta * (gamma * mf.ln() / mf).powf(1.0 / nf);
    r.min(max_edge)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s(v: &[f64]) -> State {
        State::new(v.to_vec()).unwrap()
    }

    /// Cost by walking parent links, independent of the cached values.
    fn walk_cost(t: &Tree, id: VertexId) -> f64 {
        let mut total = 0.0;
        let mut v = id;
        while let Some(p) = t.parent(v).unwrap() {
            total += t.state(v).unwrap().distance(t.state(p).unwrap());
            v = p;
        }
        total
    }

    fn random_tree(rng: &mut ChaCha8Rng, size: usize) -> Tree {
        let mut t = Tree::new(s(&[0.0, 0.0]));
        for _ in 0..size {
            let ids: Vec<_> = t.live_ids().collect();
            let parent = ids[rng.random_range(0..ids.len())];
            let x = s(&[rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)]);
            t.add_child(parent, x).unwrap();
        }
        t
    }

    fn assert_consistent(t: &Tree) {
        let mut count = 0;
        for id in t.live_ids() {
            count += 1;
            assert!((t.cost(id).unwrap().value() - walk_cost(t, id)).abs() < 1e-9);
            assert!(t.ancestry(id).last() == Some(Tree::ROOT));
            assert!(t.index().contains(id));
            if let Some(p) = t.parent(id).unwrap() {
                assert!(t.is_live(p));
                assert!(t.children(p).unwrap().contains(&id));
            }
        }
        assert_eq!(count, t.len());
        assert_eq!(t.index().len(), t.len());
    }

    #[test]
    fn add_child_costs() {
        let mut t = Tree::new(s(&[0.0, 0.0]));
        let a = t.add_child(Tree::ROOT, s(&[0.3, 0.4])).unwrap();
        assert_relative_eq!(t.cost(a).unwrap().value(), 0.5);

        let mut chain = Tree::new(s(&[0.0]));
        let mut last = Tree::ROOT;
        for k in 1..=3 {
            last = chain.add_child(last, s(&[k as f64])).unwrap();
        }
        assert_relative_eq!(chain.cost(last).unwrap().value(), 3.0);
        assert!(t.add_child(VertexId(99), s(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn random_trees_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let t = random_tree(&mut rng, 500);
        assert_consistent(&t);
    }

    #[test]
    fn rewiring_updates_subtree() {
        let mut t = Tree::new(s(&[0.0, 0.0]));
        let far = t.add_child(Tree::ROOT, s(&[0.0, 0.5])).unwrap();
        let detour = t.add_child(far, s(&[0.5, 0.5])).unwrap();
        let leaf = t.add_child(detour, s(&[0.5, 0.0])).unwrap();
        let tail = t.add_child(leaf, s(&[0.6, 0.0])).unwrap();
        let before = t.cost(leaf).unwrap();
        t.rewire_parent(leaf, Tree::ROOT).unwrap();
        assert!(t.cost(leaf).unwrap() < before);
        assert_relative_eq!(t.cost(tail).unwrap().value(), 0.6, epsilon = 1e-12);
        assert!(matches!(t.rewire_parent(Tree::ROOT, far), Err(Error::Cycle { .. })));
        assert!(matches!(t.rewire_parent(far, detour), Err(Error::Cycle { .. })));
        assert_consistent(&t);
    }

    #[test]
    fn random_rewiring_matches_walk_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut t = random_tree(&mut rng, 300);
        for _ in 0..500 {
            let ids: Vec<_> = t.live_ids().collect();
            let child = ids[rng.random_range(0..ids.len())];
            let parent = ids[rng.random_range(0..ids.len())];
            let creates_cycle = t.ancestry(parent).any(|v| v == child);
            let result = t.rewire_parent(child, parent);
            assert_eq!(result.is_err(), creates_cycle || child == Tree::ROOT);
        }
        assert_consistent(&t);
    }

    #[test]
    fn radius_values() {
        assert_eq!(rewire_radius(1, 2, 1.0, 1.001, f64::INFINITY), 0.0);
        let mut prev = rewire_radius(3, 2, 1.0, 1.001, f64::INFINITY);
        for m in 4..2000 {
            let r = rewire_radius(m, 2, 1.0, 1.001, f64::INFINITY);
            assert!(r <= prev);
            prev = r;
        }
        // 1.001 · (2 · 1.5 · (1/π) · ln(100)/100)^{1/2}
        let by_hand = 1.001 * (3.0 / std::f64::consts::PI * 100f64.ln() / 100.0).sqrt();
        assert_relative_eq!(
            rewire_radius(100, 2, 1.0, 1.001, f64::INFINITY),
            by_hand,
            epsilon = 1e-14
        );
        assert_eq!(rewire_radius(100, 2, 1.0, 1.001, 0.05), 0.05);
    }

    #[test]
    fn prune_examples() {
        let start = s(&[-0.3, 0.0]);
        let goal = s(&[0.3, 0.0]);
        let mut t = Tree::new(start.clone());
        let on = t.add_child(Tree::ROOT, s(&[0.0, 0.0])).unwrap();
        let off = t.add_child(on, s(&[0.0, 0.2])).unwrap();
        t.add_child(off, s(&[0.1, 0.0])).unwrap();
        assert_eq!(t.prune(Cost::INFINITE, &start, &goal), 0);
        assert_eq!(t.prune(Cost::new(0.6).unwrap(), &start, &goal), 2);
        assert!(t.is_live(on) && !t.is_live(off));
        assert_consistent(&t);
    }

    #[test]
    fn prune_matches_filter_closure_oracle() {
        let start = s(&[-0.3, 0.0]);
        let goal = s(&[0.3, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let mut t = random_tree(&mut rng, 400);
            let threshold = rng.random_range(0.6..1.4);
            // Survivors: every vertex on the walk to the root passes the filter.
            let expected: Vec<VertexId> = t
                .live_ids()
                .filter(|&id| {
                    t.ancestry(id).all(|v| {
                        v == Tree::ROOT
                            || l2(t.state(v).unwrap(), &start, &goal) <= threshold
                    })
                })
                .collect();
            let before = t.len();
            let removed = t.prune(Cost::new(threshold).unwrap(), &start, &goal);
            let after: Vec<VertexId> = t.live_ids().collect();
            assert_eq!(after, expected);
            assert_eq!(before - removed, after.len());
            assert_consistent(&t);
        }
    }

    fn l2(x: &State, a: &State, b: &State) -> f64 {
        x.distance(a) + x.distance(b)
    }

    #[test]
    fn path_extraction() {
        let start = s(&[-0.3, 0.0]);
        let goal = s(&[0.3, 0.0]);
        let mut ta = Tree::new(start.clone());
        let mut tb = Tree::new(goal.clone());
        let a = ta.add_child(Tree::ROOT, s(&[-0.1, 0.1])).unwrap();
        let b = tb.add_child(Tree::ROOT, s(&[0.1, 0.1])).unwrap();
        let bridge = SolutionBridge {
            start_vertex: a,
            goal_vertex: b,
        };
        let p = extract_path(bridge, &ta, &tb).unwrap();
        assert_eq!(p.states().len(), 4);
        assert_eq!(p.start(), &start);
        assert_eq!(p.end(), &goal);
        let formula = bridge_cost(bridge, &ta, &tb).unwrap();
        assert_relative_eq!(p.cost().value(), formula.value(), epsilon = 1e-12);

        ta.prune(Cost::new(0.6).unwrap(), &start, &goal);
        assert!(extract_path(bridge, &ta, &tb).is_err());
    }

    #[test]
    fn random_bridge_paths_run_start_to_goal() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let ta = random_tree(&mut rng, 60);
            let mut tb = Tree::new(s(&[0.4, 0.4]));
            for _ in 0..60 {
                let ids: Vec<_> = tb.live_ids().collect();
                let p = ids[rng.random_range(0..ids.len())];
                tb.add_child(p, s(&[rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)]))
                    .unwrap();
            }
            let a = VertexId(rng.random_range(0..ta.capacity()));
            let b = VertexId(rng.random_range(0..tb.capacity()));
            let bridge = SolutionBridge {
                start_vertex: a,
                goal_vertex: b,
            };
            let p = extract_path(bridge, &ta, &tb).unwrap();
            assert_eq!(p.start(), ta.root());
            assert_eq!(p.end(), tb.root());
            assert_eq!(p.states().len(), ta.branch(a).unwrap().len() + tb.branch(b).unwrap().len());
            let formula = bridge_cost(bridge, &ta, &tb).unwrap().value();
            assert!((p.cost().value() - formula).abs() < 1e-9);
            // The goal branch appears reversed: the state after the bridge is b's parent.
            let i = ta.branch(a).unwrap().len();
            assert_eq!(&p.states()[i], tb.state(b).unwrap());
        }
    }
}
