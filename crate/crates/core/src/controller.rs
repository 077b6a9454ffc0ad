//! Scenario-tree stochastic MPC for a single vehicle.
//!
//! The expected horizon cost is evaluated on a prefix-shared tree: scenarios
//! that agree on their first `t` error states share the first `t` stage
//! evaluations, and each tree node is weighted by the total (renormalized)
//! probability of the scenarios passing through it. Nodes are stored level by
//! level so a change to the control at step `j` only invalidates levels
//! `j..M`.

use serde::{Deserialize, Serialize};

use crate::driver::ScenarioSet;
use crate::dynamics::{fuel_rate_unchecked, predict_step, FuelParams, VehicleParams, VehicleState};
use crate::error::{Error, Result};
use crate::solver::{coordinate_descent, SolverSettings};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostWeights {
    /// Fuel-per-distance weight.
    pub c1: f64,
    /// Target-speed tracking weight.
    pub c3: f64,
    /// Control-effort weight at the first horizon step.
    pub c4: f64,
    /// Discount rate of the effort weight along the horizon.
    pub alpha: f64,
    /// Gain of the distance-dependent spacing weight `k2 / max(d, d_floor)²`.
    pub k2: f64,
    /// m
    pub d_floor: f64,
    /// Critical distance (m).
    pub s0: f64,
    /// Headway time (s).
    pub t_hd: f64,
    /// Guard added to the speed in the fuel-per-distance denominator (m/s).
    pub v_eps: f64,
    /// Weight of the squared predicted overshoot past a red stop line.
    pub red_penalty: f64,
    /// Distance before the stop line where the red-light penalty starts (m).
    pub stop_margin: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            c1: 10.0,
            c3: 1.0,
            c4: 0.5,
            alpha: 0.4,
            k2: 10.0,
            d_floor: 1.0,
            s0: 5.0,
            t_hd: 1.0,
            v_eps: 0.1,
            red_penalty: 1e3,
            stop_margin: 1.0,
        }
    }
}

impl CostWeights {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for (name, value) in [
            ("c1", self.c1),
            ("c3", self.c3),
            ("c4", self.c4),
            ("alpha", self.alpha),
            ("k2", self.k2),
            ("s0", self.s0),
            ("t_hd", self.t_hd),
            ("red_penalty", self.red_penalty),
            ("stop_margin", self.stop_margin),
        ] {
            if !(value >= 0.0) || !value.is_finite() {
                problems.push(format!("weights.{name} must be finite and >= 0 (got {value})"));
            }
        }
        if !(self.d_floor > 0.0) {
            problems.push(format!("weights.d_floor must be > 0 (got {})", self.d_floor));
        }
        if !(self.v_eps > 0.0) {
            problems.push(format!("weights.v_eps must be > 0 (got {})", self.v_eps));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    /// Spacing weight for a gap of `gap` metres to the predecessor.
    #[inline]
    pub fn spacing_gain(&self, gap: f64) -> f64 {
        let d = gap.max(self.d_floor);
        self.k2 / (d * d)
    }

    /// Discounted effort weight `t_offset` steps into the horizon.
    #[inline]
    pub fn effort_weight(&self, t_offset: usize) -> f64 {
        self.c4 / (1.0 + self.alpha * t_offset as f64)
    }
}

/// Predicted predecessor trajectory over the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborInfo {
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    /// False for the lead vehicle, which has no predecessor.
    pub present: bool,
}

impl NeighborInfo {
    pub fn absent(horizon: usize) -> Self {
        Self {
            positions: vec![0.0; horizon],
            velocities: vec![0.0; horizon],
            present: false,
        }
    }

    pub fn horizon(&self) -> usize {
        self.positions.len()
    }

    #[inline]
    pub fn at(&self, t: usize) -> Option<(f64, f64)> {
        if self.present {
            Some((self.positions[t], self.velocities[t]))
        } else {
            None
        }
    }
}

/// Constant-velocity extrapolation of the predecessor's broadcast state.
pub fn predict_neighbor(observed: Option<VehicleState>, horizon: usize, dt: f64) -> NeighborInfo {
    match observed {
        None => NeighborInfo::absent(horizon),
        Some(st) => NeighborInfo {
            positions: (0..horizon).map(|t| st.s + dt * st.v * t as f64).collect(),
            velocities: vec![st.v; horizon],
            present: true,
        },
    }
}

/// Commanded acceleration sequence returned by a solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPlan {
    pub controls: Vec<f64>,
    pub objective: f64,
    pub scenario_count: usize,
    pub iterations: usize,
    pub evaluations: usize,
    /// False when the iteration cap was hit before the step shrank to its floor.
    pub converged: bool,
}

impl ControlPlan {
    /// First control of the plan, the one that gets applied.
    pub fn first(&self) -> f64 {
        self.controls.first().copied().unwrap_or(0.0)
    }

    /// Drops the applied control and repeats the last one, for warm starts.
    pub fn shifted(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.controls.iter().skip(1).copied().collect();
        if let Some(&last) = self.controls.last() {
            out.push(last);
        }
        out
    }
}

/// Red phases of the next stop line as seen from the start of a horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopLine {
    /// m
    pub position: f64,
    /// Red intervals `[start, end)` in seconds from the start of the horizon.
    pub red: Vec<(f64, f64)>,
}

impl StopLine {
    #[inline]
    pub fn red_at(&self, t: f64) -> bool {
        self.red.iter().any(|&(a, b)| a <= t && t < b)
    }
}

/// Everything a single horizon solve depends on apart from the scenarios.
#[derive(Debug, Clone, Copy)]
pub struct HorizonProblem<'a> {
    pub state: VehicleState,
    pub neighbor: &'a NeighborInfo,
    pub v_target: f64,
    pub weights: &'a CostWeights,
    pub params: &'a VehicleParams,
    pub fuel: &'a FuelParams,
    pub dt: f64,
    /// Quadratic penalty weight on predicted speeds outside `[v_min, v_max]`.
    pub speed_penalty: f64,
    pub stop_line: Option<&'a StopLine>,
}

impl HorizonProblem<'_> {
    pub fn horizon(&self) -> usize {
        self.neighbor.horizon()
    }

    #[inline]
    fn speed_violation_cost(&self, v: f64) -> f64 {
        let excess = (v - self.params.v_max).max(0.0) + (self.params.v_min - v).max(0.0);
        self.speed_penalty * excess * excess
    }

    /// Penalty for step `t` (from `before` to `after`) and whether the line
    /// has been crossed legally by the end of it.
    ///
    /// Any step touching a red phase penalizes the overshoot past
    /// `position - stop_margin` until the line has been crossed in green.
    #[inline]
    fn stop_line_cost(&self, t: usize, before: VehicleState, after: VehicleState, cleared: bool) -> (f64, bool) {
        let Some(line) = self.stop_line else {
            return (0.0, cleared);
        };
        if cleared {
            return (0.0, true);
        }
        let t0 = t as f64 * self.dt;
        let t1 = t0 + self.dt;
        let crossed_green = before.s <= line.position && after.s > line.position && {
            let frac = (line.position - before.s) / (after.s - before.s);
            !line.red_at(t0 + frac * self.dt)
        };
        let mut cost = 0.0;
        if line.red_at(t0) || line.red_at(t1) {
            let over = after.s - (line.position - self.weights.stop_margin);
            if over > 0.0 && !crossed_green {
                cost = self.weights.red_penalty * over * over;
            }
        }
        (cost, crossed_green)
    }
}

/// Cost of one horizon step entered in `state` with effective control `u_f`.
///
/// Fuel per distance, spacing error to the predecessor (if any), squared
/// deviation from the target speed and discounted squared effort. Predicted
/// states may carry negative speeds; those count as standing still for the
/// fuel term.
#[allow(clippy::too_many_arguments)]
#[inline]
pub fn stage_cost(
    state: VehicleState,
    u_f: f64,
    neighbor: &NeighborInfo,
    v_target: f64,
    weights: &CostWeights,
    t_offset: usize,
    fuel: &FuelParams,
    params: &VehicleParams,
) -> f64 {
    let v = state.v.max(0.0);
    let mut cost = weights.c1 * fuel_rate_unchecked(v, u_f, params, fuel) / (v + weights.v_eps);
    if let Some((s_j, v_j)) = neighbor.at(t_offset) {
        let gap = s_j - state.s;
        let r = weights.s0 + weights.t_hd * (state.v - v_j) - gap;
        cost += weights.spacing_gain(gap) * r * r;
    }
    let dv = state.v - v_target;
    cost += weights.c3 * dv * dv;
    cost += weights.effort_weight(t_offset) * u_f * u_f;
    cost
}

#[derive(Debug, Clone, Copy)]
struct TreeNode {
    /// Index of the parent node, or `None` for first-step nodes.
    parent: Option<u32>,
    error: f64,
    weight: f64,
}

/// Prefix-shared scenario tree, stored level by level.
#[derive(Debug, Clone)]
pub struct ScenarioTree {
    nodes: Vec<TreeNode>,
    /// `levels[t]..levels[t + 1]` are the nodes of horizon step `t`.
    levels: Vec<usize>,
    scenario_count: usize,
}

impl ScenarioTree {
    /// Builds the tree from sampled error-state paths, mapping states through
    /// `support` and renormalizing probabilities over the set.
    pub fn from_scenarios(set: &ScenarioSet, support: &[f64]) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::invalid("scenario set is empty"));
        }
        let horizon = set.horizon();
        if horizon == 0 || set.scenarios.iter().any(|s| s.horizon() != horizon) {
            return Err(Error::invalid("scenarios must share a positive horizon"));
        }
        if set.scenarios.iter().flat_map(|s| &s.path).any(|&i| i >= support.len()) {
            return Err(Error::invalid("scenario refers to an error state outside the support"));
        }

        // Sorting makes equal prefixes contiguous and the result independent
        // of the input order.
        let mut order: Vec<usize> = (0..set.len()).collect();
        order.sort_by(|&a, &b| set.scenarios[a].path.cmp(&set.scenarios[b].path));
        let total: f64 = order.iter().map(|&l| set.scenarios[l].probability).sum();
        if !(total > 0.0) {
            return Err(Error::invalid("scenario probabilities sum to zero"));
        }

        let mut nodes: Vec<TreeNode> = Vec::new();
        let mut levels = Vec::with_capacity(horizon + 1);
        let mut at_node: Vec<Option<u32>> = vec![None; set.len()];
        for t in 1..=horizon {
            levels.push(nodes.len());
            let mut next_node = vec![None; set.len()];
            let mut prev: Option<usize> = None;
            for &l in &order {
                let path = &set.scenarios[l].path;
                let weight = set.scenarios[l].probability / total;
                let shared = prev.filter(|&p| at_node[p] == at_node[l] && set.scenarios[p].path[t] == path[t]);
                let id = match shared {
                    Some(p) => {
                        let id = next_node[p].expect("previous scenario placed");
                        nodes[id as usize].weight += weight;
                        id
                    }
                    None => {
                        nodes.push(TreeNode {
                            parent: at_node[l],
                            error: support[path[t]],
                            weight,
                        });
                        (nodes.len() - 1) as u32
                    }
                };
                next_node[l] = Some(id);
                prev = Some(l);
            }
            at_node = next_node;
        }
        levels.push(nodes.len());
        Ok(Self {
            nodes,
            levels,
            scenario_count: set.len(),
        })
    }

    /// A single deterministic error sequence with probability one.
    pub fn from_errors(errors: &[f64]) -> Result<Self> {
        if errors.is_empty() {
            return Err(Error::invalid("error sequence must cover at least one step"));
        }
        if errors.iter().any(|e| !e.is_finite()) {
            return Err(Error::invalid("error sequence must be finite"));
        }
        let nodes = errors
            .iter()
            .enumerate()
            .map(|(t, &error)| TreeNode {
                parent: t.checked_sub(1).map(|p| p as u32),
                error,
                weight: 1.0,
            })
            .collect();
        Ok(Self {
            nodes,
            levels: (0..=errors.len()).collect(),
            scenario_count: 1,
        })
    }

    pub fn horizon(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn scenario_count(&self) -> usize {
        self.scenario_count
    }
}

/// Expected-cost evaluator that caches per-level results between calls.
pub struct TreeObjective<'a> {
    tree: &'a ScenarioTree,
    problem: HorizonProblem<'a>,
    states: Vec<VehicleState>,
    cleared: Vec<bool>,
    level_sums: Vec<f64>,
    cached: Vec<f64>,
}

impl<'a> TreeObjective<'a> {
    pub fn new(tree: &'a ScenarioTree, problem: HorizonProblem<'a>) -> Result<Self> {
        if problem.horizon() != tree.horizon() {
            return Err(Error::invalid(format!(
                "neighbor prediction covers {} steps but the scenario tree has {}",
                problem.horizon(),
                tree.horizon()
            )));
        }
        Ok(Self {
            tree,
            problem,
            states: vec![problem.state; tree.nodes.len()],
            cleared: vec![false; tree.nodes.len()],
            level_sums: vec![0.0; tree.horizon()],
            cached: vec![f64::NAN; tree.horizon()],
        })
    }

    pub fn evaluate(&mut self, controls: &[f64]) -> f64 {
        let horizon = self.tree.horizon();
        debug_assert_eq!(controls.len(), horizon);
        let first_dirty = (0..horizon)
            .find(|&t| controls[t].to_bits() != self.cached[t].to_bits())
            .unwrap_or(horizon);
        let p = &self.problem;
        #[allow(clippy::needless_range_loop)]
        for t in first_dirty..horizon {
            let mut level_sum = 0.0;
            for i in self.tree.levels[t]..self.tree.levels[t + 1] {
                let node = self.tree.nodes[i];
                let (before, was_cleared) = match node.parent {
                    Some(parent) => (self.states[parent as usize], self.cleared[parent as usize]),
                    None => (p.state, false),
                };
                let u_f = p.params.saturate(controls[t] + node.error);
                let after = predict_step(before, u_f, p.params, p.dt);
                let (line_cost, cleared) = p.stop_line_cost(t, before, after, was_cleared);
                let cost = stage_cost(before, u_f, p.neighbor, p.v_target, p.weights, t, p.fuel, p.params)
                    + p.speed_violation_cost(after.v)
                    + line_cost;
                self.states[i] = after;
                self.cleared[i] = cleared;
                level_sum += node.weight * cost;
            }
            self.level_sums[t] = level_sum;
            self.cached[t] = controls[t];
        }
        self.level_sums.iter().sum()
    }
}

/// Probability-weighted horizon cost of `controls` over the scenario set.
///
/// Each scenario rolls the model forward with `u(t) + W[path(t + 1)]`
/// saturated to the actuator box; `path(0)` is the last observed error state.
pub fn scenario_objective(
    controls: &[f64],
    scenarios: &ScenarioSet,
    support: &[f64],
    problem: HorizonProblem<'_>,
) -> Result<f64> {
    let tree = ScenarioTree::from_scenarios(scenarios, support)?;
    if controls.len() != tree.horizon() {
        return Err(Error::invalid(format!(
            "plan has {} controls, horizon is {}",
            controls.len(),
            tree.horizon()
        )));
    }
    Ok(TreeObjective::new(&tree, problem)?.evaluate(controls))
}

/// Minimizes the expected horizon cost over one commanded sequence shared by
/// all scenarios. `warm_start` is the previous plan; it is shifted by one step.
pub fn solve_tree(
    problem: HorizonProblem<'_>,
    tree: &ScenarioTree,
    settings: &SolverSettings,
    warm_start: Option<&ControlPlan>,
) -> Result<ControlPlan> {
    let horizon = tree.horizon();
    let mut objective = TreeObjective::new(tree, problem)?;
    let (x0, step) = match warm_start {
        Some(plan) if plan.controls.len() == horizon => (plan.shifted(), settings.warm_step),
        _ => (vec![0.0; horizon], settings.initial_step),
    };
    let min = coordinate_descent(
        |u| objective.evaluate(u),
        &x0,
        problem.params.u_min,
        problem.params.u_max,
        step,
        settings,
    );
    Ok(ControlPlan {
        controls: min.x,
        objective: min.value,
        scenario_count: tree.scenario_count(),
        iterations: min.iterations,
        evaluations: min.evaluations,
        converged: min.converged,
    })
}

/// Scenario-tree stochastic MPC solve.
pub fn solve_smpc(
    problem: HorizonProblem<'_>,
    scenarios: &ScenarioSet,
    support: &[f64],
    settings: &SolverSettings,
    warm_start: Option<&ControlPlan>,
) -> Result<ControlPlan> {
    let tree = ScenarioTree::from_scenarios(scenarios, support)?;
    solve_tree(problem, &tree, settings, warm_start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::{build_scenario_set, DriverErrorModel, Scenario};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Fixture {
        neighbor: NeighborInfo,
        weights: CostWeights,
        params: VehicleParams,
        fuel: FuelParams,
    }

    impl Fixture {
        fn new(horizon: usize) -> Self {
            Self {
                neighbor: NeighborInfo::absent(horizon),
                weights: CostWeights::default(),
                params: VehicleParams::default(),
                fuel: FuelParams::default(),
            }
        }

        fn problem(&self, state: VehicleState, v_target: f64) -> HorizonProblem<'_> {
            HorizonProblem {
                state,
                neighbor: &self.neighbor,
                v_target,
                weights: &self.weights,
                params: &self.params,
                fuel: &self.fuel,
                dt: 0.5,
                speed_penalty: 1e3,
                stop_line: None,
            }
        }
    }

    #[test]
    fn cruising_on_target_costs_only_fuel() {
        let f = Fixture::new(1);
        let v = 12.0;
        let c = stage_cost(
            VehicleState::new(0.0, v),
            0.0,
            &f.neighbor,
            v,
            &f.weights,
            0,
            &f.fuel,
            &f.params,
        );
        let expect = f.weights.c1 * fuel_rate_unchecked(v, 0.0, &f.params, &f.fuel) / (v + f.weights.v_eps);
        assert_eq!(c, expect);
    }

    #[test]
    fn effort_discount_is_monotone() {
        let f = Fixture::new(10);
        let st = VehicleState::new(0.0, 10.0);
        let early = stage_cost(st, -1.0, &f.neighbor, 10.0, &f.weights, 0, &f.fuel, &f.params);
        let late = stage_cost(st, -1.0, &f.neighbor, 10.0, &f.weights, 9, &f.fuel, &f.params);
        assert!(early > late);
        for t in 0..9 {
            assert!(f.weights.effort_weight(t) > f.weights.effort_weight(t + 1));
        }
    }

    #[test]
    fn stage_cost_matches_straight_line_evaluation() {
        let mut f = Fixture::new(3);
        f.neighbor = predict_neighbor(Some(VehicleState::new(30.0, 9.0)), 3, 0.5);
        let st = VehicleState::new(12.0, 11.0);
        let (u_f, vt, t) = (0.7, 14.0, 2);
        let c = stage_cost(st, u_f, &f.neighbor, vt, &f.weights, t, &f.fuel, &f.params);

        // Independent evaluation with every term written out.
        let (m, a, cd, rho, mu, g) = (1200.0, 2.5, 0.32, 1.184, 0.015, 9.8);
        let v: f64 = 11.0;
        let a_hat = -cd * rho * a * v * v / (2.0 * m) - mu * g + u_f;
        let fuel = 0.1569 + 2.450e-2 * v - 7.415e-4 * v * v
            + 5.975e-5 * v * v * v
            + a_hat * (0.07224 + 9.681e-2 * v + 1.075e-3 * v * v);
        let s_j = 30.0 + 0.5 * 9.0 * 2.0;
        let gap = s_j - 12.0;
        let r = 5.0 + 1.0 * (11.0 - 9.0) + (12.0 - s_j);
        let expect = 10.0 * fuel / (v + 0.1)
            + (10.0 / (gap * gap)) * r * r
            + 1.0 * (v - vt) * (v - vt)
            + (0.5 / (1.0 + 0.4 * 2.0)) * u_f * u_f;
        assert!((c - expect).abs() < 1e-12, "{c} vs {expect}");
    }

    #[test]
    fn neighbor_prediction() {
        let n = predict_neighbor(Some(VehicleState::new(100.0, 0.0)), 4, 0.5);
        assert_eq!(n.positions, vec![100.0; 4]);
        let n = predict_neighbor(Some(VehicleState::new(0.0, 10.0)), 4, 0.5);
        assert_eq!(n.positions, vec![0.0, 5.0, 10.0, 15.0]);
        assert_eq!(n.velocities, vec![10.0; 4]);
        let lead = predict_neighbor(None, 4, 0.5);
        assert!(!lead.present);
        assert_eq!(lead.at(0), None);
    }

    #[test]
    fn single_zero_scenario_one_step_equals_stage_cost() {
        let f = Fixture::new(1);
        let set = ScenarioSet::single(vec![0, 0]);
        let st = VehicleState::new(0.0, 8.0);
        let obj = scenario_objective(&[0.4], &set, &[0.0], f.problem(st, 10.0)).unwrap();
        let stage = stage_cost(st, 0.4, &f.neighbor, 10.0, &f.weights, 0, &f.fuel, &f.params);
        assert_eq!(obj, stage);
    }

    #[test]
    fn two_equiprobable_scenarios_average() {
        let f = Fixture::new(3);
        let support = [-0.3, 0.0, 0.3];
        let st = VehicleState::new(0.0, 10.0);
        let controls = [0.5, -0.2, 0.1];
        let a = Scenario {
            path: vec![1, 0, 0, 2],
            probability: 0.2,
        };
        let b = Scenario {
            path: vec![1, 2, 1, 1],
            probability: 0.2,
        };
        let both = ScenarioSet {
            scenarios: vec![a.clone(), b.clone()],
            threshold: 0.0,
            max_samples: 2,
            full_count: None,
            fallback: false,
        };
        let only = |s: Scenario| ScenarioSet {
            scenarios: vec![s],
            ..both.clone()
        };
        let ja = scenario_objective(&controls, &only(a), &support, f.problem(st, 12.0)).unwrap();
        let jb = scenario_objective(&controls, &only(b), &support, f.problem(st, 12.0)).unwrap();
        let jab = scenario_objective(&controls, &both, &support, f.problem(st, 12.0)).unwrap();
        assert!((jab - 0.5 * (ja + jb)).abs() < 1e-12);
    }

    #[test]
    fn objective_invariant_under_scenario_order() {
        let f = Fixture::new(10);
        let model = DriverErrorModel::scenario1();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let set = build_scenario_set(&model, 2, 10, 200, 1e-4, &mut rng).unwrap();
        let mut reversed = set.clone();
        reversed.scenarios.reverse();
        let controls: Vec<f64> = (0..10).map(|i| 0.3 * (i as f64).sin()).collect();
        let st = VehicleState::new(0.0, 12.0);
        let a = scenario_objective(&controls, &set, model.support(), f.problem(st, 15.0)).unwrap();
        let b = scenario_objective(&controls, &reversed, model.support(), f.problem(st, 15.0)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn incremental_evaluation_matches_fresh_evaluation() {
        let f = Fixture::new(10);
        let model = DriverErrorModel::scenario1();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let set = build_scenario_set(&model, 2, 10, 200, 1e-4, &mut rng).unwrap();
        let tree = ScenarioTree::from_scenarios(&set, model.support()).unwrap();
        let st = VehicleState::new(0.0, 12.0);
        let mut cached = TreeObjective::new(&tree, f.problem(st, 15.0)).unwrap();
        let mut u = vec![0.1; 10];
        cached.evaluate(&u);
        for j in [7, 2, 9, 0, 4] {
            u[j] -= 0.37;
            let inc = cached.evaluate(&u);
            let fresh = TreeObjective::new(&tree, f.problem(st, 15.0)).unwrap().evaluate(&u);
            assert_eq!(inc.to_bits(), fresh.to_bits());
        }
    }

    #[test]
    fn tree_shares_prefixes() {
        let set = ScenarioSet {
            scenarios: vec![
                Scenario {
                    path: vec![0, 1, 1],
                    probability: 0.25,
                },
                Scenario {
                    path: vec![0, 1, 0],
                    probability: 0.25,
                },
                Scenario {
                    path: vec![0, 0, 1],
                    probability: 0.5,
                },
            ],
            threshold: 0.0,
            max_samples: 3,
            full_count: None,
            fallback: false,
        };
        let tree = ScenarioTree::from_scenarios(&set, &[-1.0, 1.0]).unwrap();
        assert_eq!(tree.horizon(), 2);
        assert_eq!(tree.node_count(), 2 + 3);
    }

    #[test]
    fn stationary_tracking_keeps_controls_near_zero() {
        let mut f = Fixture::new(10);
        f.weights.c1 = 0.0;
        f.params.drag_coeff = 0.0;
        f.params.rolling_coeff = 0.0;
        let tree = ScenarioTree::from_errors(&[0.0; 10]).unwrap();
        let plan = solve_tree(
            f.problem(VehicleState::new(0.0, 10.0), 10.0),
            &tree,
            &SolverSettings::default(),
            None,
        )
        .unwrap();
        assert!(plan.controls.iter().all(|u| u.abs() <= 1e-3), "{:?}", plan.controls);
        assert!(plan.converged);
    }

    #[test]
    fn plans_respect_actuator_box() {
        let f = Fixture::new(10);
        let tree = ScenarioTree::from_errors(&[0.0; 10]).unwrap();
        for (v, vt) in [(0.0, 20.0), (20.0, 0.0), (10.0, 10.0)] {
            let plan = solve_tree(
                f.problem(VehicleState::new(0.0, v), vt),
                &tree,
                &SolverSettings::default(),
                None,
            )
            .unwrap();
            assert!(plan
                .controls
                .iter()
                .all(|u| (f.params.u_min..=f.params.u_max).contains(u)));
        }
    }

    #[test]
    fn solves_are_deterministic() {
        let f = Fixture::new(10);
        let model = DriverErrorModel::scenario1();
        let set = build_scenario_set(&model, 3, 10, 200, 1e-4, &mut ChaCha8Rng::seed_from_u64(12)).unwrap();
        let st = VehicleState::new(0.0, 9.0);
        let a = solve_smpc(
            f.problem(st, 14.0),
            &set,
            model.support(),
            &SolverSettings::default(),
            None,
        )
        .unwrap();
        let b = solve_smpc(
            f.problem(st, 14.0),
            &set,
            model.support(),
            &SolverSettings::default(),
            None,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mismatched_horizons_rejected() {
        let f = Fixture::new(4);
        let tree = ScenarioTree::from_errors(&[0.0; 3]).unwrap();
        assert!(solve_tree(
            f.problem(VehicleState::new(0.0, 1.0), 1.0),
            &tree,
            &SolverSettings::default(),
            None
        )
        .is_err());
    }
}
