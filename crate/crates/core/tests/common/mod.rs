//! Brute-force oracles shared by the integration tests.

#![allow(dead_code)]

use ecodrive_core::dynamics::predict_step;
use ecodrive_core::{stage_cost, DriverErrorModel, HorizonProblem};

/// Every length-`horizon` path from `root` with its probability, in
/// lexicographic order. Zero-probability paths are included.
pub fn enumerate_paths(model: &DriverErrorModel, root: usize, horizon: usize) -> Vec<(Vec<usize>, f64)> {
    let n = model.len();
    let total = n.pow(horizon as u32);
    (0..total)
        .map(|mut code| {
            let mut tail = vec![0; horizon];
            for slot in tail.iter_mut().rev() {
                *slot = code % n;
                code /= n;
            }
            let mut path = vec![root];
            path.extend(tail);
            let p = path.windows(2).map(|e| model.transition()[e[0]][e[1]]).product();
            (path, p)
        })
        .collect()
}

/// Horizon cost of `controls` along one error path, rolled out step by step.
/// The problem must not carry a stop line.
pub fn path_cost(controls: &[f64], path: &[usize], support: &[f64], problem: &HorizonProblem<'_>) -> f64 {
    assert!(problem.stop_line.is_none());
    let mut state = problem.state;
    let mut total = 0.0;
    for (t, &u) in controls.iter().enumerate() {
        let u_f = (u + support[path[t + 1]]).clamp(problem.params.u_min, problem.params.u_max);
        let next = predict_step(state, u_f, problem.params, problem.dt);
        total += stage_cost(
            state,
            u_f,
            problem.neighbor,
            problem.v_target,
            problem.weights,
            t,
            problem.fuel,
            problem.params,
        );
        let over = (next.v - problem.params.v_max).max(0.0) + (problem.params.v_min - next.v).max(0.0);
        total += problem.speed_penalty * over * over;
        state = next;
    }
    total
}

/// Expected horizon cost over the full, unpruned tree.
pub fn full_tree_expectation(
    controls: &[f64],
    model: &DriverErrorModel,
    root: usize,
    problem: &HorizonProblem<'_>,
) -> f64 {
    enumerate_paths(model, root, controls.len())
        .iter()
        .map(|(path, p)| p * path_cost(controls, path, model.support(), problem))
        .sum()
}

/// A three-state chain with every transition possible.
pub fn dense_three_state() -> DriverErrorModel {
    DriverErrorModel::new(
        vec![-0.3, 0.0, 0.25],
        vec![vec![0.5, 0.3, 0.2], vec![0.15, 0.7, 0.15], vec![0.1, 0.3, 0.6]],
        0.1,
    )
    .unwrap()
}
