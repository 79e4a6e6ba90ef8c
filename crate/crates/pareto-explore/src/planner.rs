//! Pareto Monte Carlo tree search: multi-objective MCTS over motion
//! primitives, collision-filtered, used in a receding-horizon loop (only
//! the first action of the best trajectory is executed).
//!
//! Each iteration runs the classic four steps — select (Pareto-UCB over
//! the children's reward vectors), expand (first untried action that
//! passes the collision filter), rollout (keep driving straight), and
//! backpropagate (running mean per objective). Dominance and front
//! extraction are K-generic even though the engine runs with K = 2.

use std::collections::VecDeque;

use rand::Rng;

use crate::error::{Error, Result};
use crate::reward::{OccupancyField, RewardVec, N_OBJECTIVES};
use crate::sim::{apply_action, MotionPrimitive, RobotPose};

/// True iff `a` is at least `b` in every objective and better in one.
/// Both slices must have the same length.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    assert_eq!(a.len(), b.len(), "reward vectors of different lengths");
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        if x > y {
            strict = true;
        }
    }
    strict
}

/// Indices of the non-dominated vectors, ascending. Duplicates of a front
/// member are all kept (equal vectors never dominate each other).
/// Panics on empty input.
pub fn pareto_front<V: AsRef<[f64]>>(vectors: &[V]) -> Vec<usize> {
    assert!(!vectors.is_empty(), "pareto_front needs at least one vector");
    // Incremental front maintenance; correctness rests on transitivity of
    // dominance, so membership only needs checking against current members.
    let mut front: Vec<usize> = Vec::new();
    for i in 0..vectors.len() {
        let v = vectors[i].as_ref();
        if front.iter().any(|&j| dominates(vectors[j].as_ref(), v)) {
            continue;
        }
        front.retain(|&j| !dominates(v, vectors[j].as_ref()));
        front.push(i);
    }
    front.sort_unstable();
    front
}

/// Per-child UCB vectors: normalized exploitation plus exploration bonus,
/// `U_i = mean_i / max_sibling_mean + c * sqrt(2 ln N / n_i)` per
/// objective. Objectives whose sibling maximum is zero stay raw (all
/// zeros). Every child must have been visited at least once.
pub fn pareto_ucb_vectors(
    children: &[(u64, RewardVec)],
    parent_visits: u64,
    c: f64,
) -> Vec<RewardVec> {
    debug_assert!(children.iter().all(|&(n, _)| n > 0));
    let mut denom = [1.0; N_OBJECTIVES];
    for k in 0..N_OBJECTIVES {
        let max = children.iter().map(|(_, m)| m[k]).fold(0.0, f64::max);
        if max > 0.0 {
            denom[k] = max;
        }
    }
    let ln_n = (parent_visits as f64).ln();
    children
        .iter()
        .map(|&(n, mean)| {
            let bonus = c * (2.0 * ln_n / n as f64).sqrt();
            std::array::from_fn(|k| mean[k] / denom[k] + bonus)
        })
        .collect()
}

/// Uniformly random member of the UCB Pareto front.
pub fn pareto_ucb_select(
    children: &[(u64, RewardVec)],
    parent_visits: u64,
    c: f64,
    rng: &mut impl Rng,
) -> usize {
    let front = pareto_front(&pareto_ucb_vectors(children, parent_visits, c));
    front[rng.gen_range(0..front.len())]
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub pose: RobotPose,
    /// Action that led here; `None` at the root.
    pub action: Option<MotionPrimitive>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Actions not yet expanded, in fixed action-set order. Depth-capped
    /// nodes start empty and act as permanent rollout leaves.
    pub untried: VecDeque<MotionPrimitive>,
    pub visits: u64,
    pub mean: RewardVec,
    /// Rollouts launched from this node itself (as opposed to descendants);
    /// 1 right after expansion, more if the node turns into a dead end.
    pub self_rollouts: u64,
    /// Dead end: no collision-free action leads anywhere new.
    pub terminal: bool,
    pub depth: usize,
}

/// Arena-allocated search tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchTree {
    nodes: Vec<TreeNode>,
}

impl SearchTree {
    fn new(root_pose: RobotPose, actions: &[MotionPrimitive]) -> Self {
        Self {
            nodes: vec![TreeNode {
                pose: root_pose,
                action: None,
                parent: None,
                children: Vec::new(),
                untried: actions.iter().copied().collect(),
                visits: 0,
                mean: [0.0; N_OBJECTIVES],
                self_rollouts: 0,
                terminal: false,
                depth: 0,
            }],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    /// CSV dump for offline visualization: one row per node,
    /// `id,parent_id,x,y,theta,visits,mean_h,mean_d` with -1 as the root's
    /// parent id.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,parent_id,x,y,theta,visits,mean_h,mean_d\n");
        for (id, n) in self.nodes.iter().enumerate() {
            let parent = n.parent.map_or(-1, |p| p as i64);
            out.push_str(&format!(
                "{id},{parent},{},{},{},{},{},{}\n",
                n.pose.x, n.pose.y, n.pose.theta, n.visits, n.mean[0], n.mean[1]
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchParams {
    /// Number of select-expand-rollout-backpropagate iterations.
    pub budget: usize,
    /// Exploration weight; exploitation is normalized to [0,1], so this is
    /// comparable across objectives.
    pub exploration_c: f64,
    /// Maximum number of actions from root to any tree node.
    pub tree_depth: usize,
    /// Maximum actions per rollout.
    pub rollout_depth: usize,
    /// Motion primitives in expansion order.
    pub actions: Vec<MotionPrimitive>,
}

impl SearchParams {
    /// Default rollout policy: keep moving forward.
    fn forward(&self) -> MotionPrimitive {
        self.actions
            .iter()
            .copied()
            .find(|a| a.dtheta == 0.0)
            .unwrap_or(MotionPrimitive { arc_length: self.actions[0].arc_length, dtheta: 0.0 })
    }

    fn validate(&self) -> Result<()> {
        if self.budget < 1 {
            return Err(Error::NonPositive { what: "search budget", value: self.budget as f64 });
        }
        if self.tree_depth < 1 {
            return Err(Error::NonPositive { what: "tree depth", value: self.tree_depth as f64 });
        }
        if self.rollout_depth < 1 {
            return Err(Error::NonPositive {
                what: "rollout depth",
                value: self.rollout_depth as f64,
            });
        }
        if self.actions.is_empty() {
            return Err(Error::NonPositive { what: "action set size", value: 0.0 });
        }
        Ok(())
    }
}

/// Per-root-child summary returned with the search result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChildStat {
    pub action: MotionPrimitive,
    pub visits: u64,
    pub mean: RewardVec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    /// Actions along the max-visits path from the root.
    pub best_trajectory: Vec<MotionPrimitive>,
    /// `best_trajectory[0]`; the receding-horizon loop executes only this.
    pub first_action: MotionPrimitive,
    pub root_stats: Vec<ChildStat>,
}

/// Collision filter: may the robot follow `action` starting at this pose?
pub type CollisionFilter<'a> = &'a dyn Fn(RobotPose, MotionPrimitive) -> bool;

/// Mean reward over a straight-driving rollout: apply the forward
/// primitive up to `depth` times, stopping when the next arc fails the
/// filter or leaves the grid, and average `reward_at` over the post-action
/// poses. A rollout that cannot move at all evaluates the start pose.
fn rollout(
    pose: RobotPose,
    field: &OccupancyField,
    filter: CollisionFilter,
    forward: MotionPrimitive,
    depth: usize,
) -> RewardVec {
    let mut cur = pose;
    let mut sum = [0.0; N_OBJECTIVES];
    let mut steps = 0u32;
    for _ in 0..depth {
        if !filter(cur, forward) {
            break;
        }
        let next = apply_action(cur, forward);
        let (r, in_bounds) = field.reward_at(next.pos());
        if !in_bounds {
            break;
        }
        for k in 0..N_OBJECTIVES {
            sum[k] += r[k];
        }
        steps += 1;
        cur = next;
    }
    if steps == 0 {
        return field.reward_at(pose.pos()).0;
    }
    std::array::from_fn(|k| sum[k] / steps as f64)
}

fn backpropagate(nodes: &mut [TreeNode], leaf: usize, r: RewardVec) {
    let mut id = Some(leaf);
    while let Some(i) = id {
        let n = &mut nodes[i];
        n.visits += 1;
        for (m, &rv) in n.mean.iter_mut().zip(&r) {
            *m += (rv - *m) / n.visits as f64;
        }
        id = n.parent;
    }
}

/// Scalarized mean for tie-breaking: sum of objectives, each normalized by
/// the sibling maximum (zero maxima left raw).
fn scalarized_means(nodes: &[TreeNode], children: &[usize]) -> Vec<f64> {
    let mut denom = [1.0; N_OBJECTIVES];
    for (k, d) in denom.iter_mut().enumerate() {
        let max = children.iter().map(|&c| nodes[c].mean[k]).fold(0.0, f64::max);
        if max > 0.0 {
            *d = max;
        }
    }
    children
        .iter()
        .map(|&c| (0..N_OBJECTIVES).map(|k| nodes[c].mean[k] / denom[k]).sum())
        .collect()
}

/// Runs a full Pareto MCTS from `root_pose` and returns the best
/// trajectory plus the final tree. Fails with [`Error::Trapped`] when no
/// root action passes the collision filter; the caller is expected to
/// recover (the explorer rotates in place).
pub fn search(
    root_pose: RobotPose,
    field: &OccupancyField,
    filter: CollisionFilter,
    params: &SearchParams,
    rng: &mut impl Rng,
) -> Result<(SearchResult, SearchTree)> {
    params.validate()?;
    let forward = params.forward();
    let mut tree = SearchTree::new(root_pose, &params.actions);

    for _ in 0..params.budget {
        let mut id = 0usize;
        // Walk down until something launches a rollout.
        let leaf = loop {
            // Expansion has absolute priority over selection.
            if !tree.nodes[id].untried.is_empty() {
                let mut expanded = None;
                while let Some(action) = tree.nodes[id].untried.pop_front() {
                    if filter(tree.nodes[id].pose, action) {
                        expanded = Some(action);
                        break;
                    }
                    // Colliding actions are discarded permanently.
                }
                if let Some(action) = expanded {
                    let depth = tree.nodes[id].depth + 1;
                    let pose = apply_action(tree.nodes[id].pose, action);
                    let untried = if depth < params.tree_depth {
                        params.actions.iter().copied().collect()
                    } else {
                        VecDeque::new()
                    };
                    let child = tree.nodes.len();
                    tree.nodes.push(TreeNode {
                        pose,
                        action: Some(action),
                        parent: Some(id),
                        children: Vec::new(),
                        untried,
                        visits: 0,
                        mean: [0.0; N_OBJECTIVES],
                        self_rollouts: 0,
                        terminal: false,
                        depth,
                    });
                    tree.nodes[id].children.push(child);
                    break child;
                }
                if tree.nodes[id].children.is_empty() {
                    // Nothing was ever reachable from here.
                    if id == 0 {
                        return Err(Error::Trapped);
                    }
                    tree.nodes[id].terminal = true;
                    break id;
                }
                // Fall through to selection among existing children.
            }
            let live: Vec<usize> = tree.nodes[id]
                .children
                .iter()
                .copied()
                .filter(|&c| !tree.nodes[c].terminal)
                .collect();
            if live.is_empty() {
                if !tree.nodes[id].children.is_empty() && id != 0 {
                    // Whole subtree is a dead end; let ancestors skip it.
                    tree.nodes[id].terminal = true;
                }
                break id; // depth-capped or dead-end leaf: rollout from here
            }
            let stats: Vec<(u64, RewardVec)> =
                live.iter().map(|&c| (tree.nodes[c].visits, tree.nodes[c].mean)).collect();
            let pick = pareto_ucb_select(&stats, tree.nodes[id].visits, params.exploration_c, rng);
            id = live[pick];
        };

        tree.nodes[leaf].self_rollouts += 1;
        let r = rollout(tree.nodes[leaf].pose, field, filter, forward, params.rollout_depth);
        backpropagate(&mut tree.nodes, leaf, r);
    }

    // Best trajectory: repeatedly take the most-visited child, breaking
    // ties by scalarized mean, then by action order (first created wins).
    let mut best_trajectory = Vec::new();
    let mut id = 0usize;
    while !tree.nodes[id].children.is_empty() {
        let children = tree.nodes[id].children.clone();
        let scalar = scalarized_means(&tree.nodes, &children);
        let mut best = 0usize;
        for i in 1..children.len() {
            let (v_b, v_i) = (tree.nodes[children[best]].visits, tree.nodes[children[i]].visits);
            if v_i > v_b || (v_i == v_b && scalar[i] > scalar[best]) {
                best = i;
            }
        }
        id = children[best];
        best_trajectory.push(tree.nodes[id].action.expect("non-root node has an action"));
    }
    debug_assert!(!best_trajectory.is_empty());

    let root_stats = tree
        .root()
        .children
        .iter()
        .map(|&c| ChildStat {
            action: tree.nodes[c].action.unwrap(),
            visits: tree.nodes[c].visits,
            mean: tree.nodes[c].mean,
        })
        .collect();

    let first_action = best_trajectory[0];
    Ok((SearchResult { best_trajectory, first_action, root_stats }, tree))
}

/// The default five-arc action set used across the engine:
/// 0.5 m arcs turning {-60, -30, 0, +30, +60} degrees.
pub fn default_actions(arc_length: f64, dthetas: &[f64]) -> Vec<MotionPrimitive> {
    dthetas.iter().map(|&dt| MotionPrimitive::new(arc_length, dt)).collect()
}
