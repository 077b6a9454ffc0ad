//! Markov-chain model of the driver's deviation from commanded acceleration,
//! and sampling-based construction of pruned scenario trees.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Transition matrix used for both bundled scenarios.
pub const DEFAULT_TRANSITION: [[f64; 5]; 5] = [
    [0.10, 0.30, 0.45, 0.10, 0.05],
    [0.05, 0.25, 0.45, 0.20, 0.05],
    [0.01, 0.10, 0.78, 0.10, 0.01],
    [0.05, 0.15, 0.45, 0.25, 0.10],
    [0.05, 0.15, 0.45, 0.30, 0.05],
];

pub const SCENARIO1_SUPPORT: [f64; 5] = [-0.3, -0.15, 0.0, 0.15, 0.3];
pub const SCENARIO2_SUPPORT: [f64; 5] = [-0.5, -0.2, 0.0, 0.2, 0.5];

/// Discrete error support with a row-stochastic transition matrix.
///
/// Plant-side draws add uniform jitter of `±jitter_halfwidth` around the
/// sampled support point so realized errors cover the continuous range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriverErrorModel {
    support: Vec<f64>,
    transition: Vec<Vec<f64>>,
    jitter_halfwidth: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MatrixRepr {
    Nested(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRepr {
    support: Vec<f64>,
    transition: MatrixRepr,
    #[serde(default)]
    jitter_halfwidth: Option<f64>,
}

impl<'de> Deserialize<'de> for DriverErrorModel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = ModelRepr::deserialize(deserializer)?;
        let n = repr.support.len();
        let transition = match repr.transition {
            MatrixRepr::Nested(rows) => rows,
            MatrixRepr::Flat(flat) => {
                if flat.len() != n * n {
                    return Err(serde::de::Error::custom(format!(
                        "row-major transition matrix needs {} entries for {n} support points, got {}",
                        n * n,
                        flat.len()
                    )));
                }
                flat.chunks(n.max(1)).map(<[f64]>::to_vec).collect()
            }
        };
        let jitter = repr.jitter_halfwidth.unwrap_or_else(|| default_jitter(&repr.support));
        DriverErrorModel::new(repr.support, transition, jitter).map_err(serde::de::Error::custom)
    }
}

/// Half the smallest spacing between neighbouring support points.
fn default_jitter(support: &[f64]) -> f64 {
    if support.len() < 2 {
        return 0.0;
    }
    support.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min) * 0.5
}

impl DriverErrorModel {
    pub fn new(support: Vec<f64>, transition: Vec<Vec<f64>>, jitter_halfwidth: f64) -> Result<Self> {
        let n = support.len();
        if n == 0 {
            return Err(Error::InvalidModel("error support is empty".into()));
        }
        if support.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidModel("error support must be finite".into()));
        }
        if support.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidModel("error support must be strictly increasing".into()));
        }
        if transition.len() != n || transition.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidModel(format!("transition matrix must be {n}x{n}")));
        }
        for (a, row) in transition.iter().enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidModel(format!("row {a} has an entry outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidModel(format!("row {a} sums to {sum}, not 1")));
            }
        }
        if !(jitter_halfwidth >= 0.0) || !jitter_halfwidth.is_finite() {
            return Err(Error::InvalidModel(format!(
                "jitter_halfwidth must be >= 0, got {jitter_halfwidth}"
            )));
        }
        Ok(Self {
            support,
            transition,
            jitter_halfwidth,
        })
    }

    /// Scenario-1 support (±0.3 m/s²) with the bundled transition matrix.
    pub fn scenario1() -> Self {
        Self::with_default_transition(&SCENARIO1_SUPPORT)
    }

    /// Scenario-2 support (±0.5 m/s²) with the bundled transition matrix.
    pub fn scenario2() -> Self {
        Self::with_default_transition(&SCENARIO2_SUPPORT)
    }

    fn with_default_transition(support: &[f64; 5]) -> Self {
        let transition = DEFAULT_TRANSITION.iter().map(|r| r.to_vec()).collect();
        Self::new(support.to_vec(), transition, default_jitter(support)).expect("bundled model is valid")
    }

    /// Single-state chain that always yields zero error.
    pub fn zero() -> Self {
        Self::new(vec![0.0], vec![vec![1.0]], 0.0).expect("trivial model is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn jitter_halfwidth(&self) -> f64 {
        self.jitter_halfwidth
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn probability(&self, from: usize, to: usize) -> f64 {
        self.transition[from][to]
    }

    /// Support index nearest to `error`; ties go to the lower index.
    pub fn quantize(&self, error: f64) -> usize {
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (i, &w) in self.support.iter().enumerate() {
            let d = (w - error).abs();
            if d < best_dist {
                best = i;
                best_dist = d;
            }
        }
        best
    }

    /// Index of the support point closest to zero.
    pub fn neutral_state(&self) -> usize {
        self.quantize(0.0)
    }

    fn check_state(&self, state: usize) -> Result<()> {
        if state < self.len() {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "error state {state} out of range for {} support points",
                self.len()
            )))
        }
    }

    /// Draws a successor of `state` from its transition row.
    pub fn sample_transition<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> Result<usize> {
        self.check_state(state)?;
        let row = &self.transition[state];
        let total: f64 = row.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidModel(format!("row {state} has no probability mass")));
        }
        let r = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut last_nonzero = 0;
        for (b, &p) in row.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last_nonzero = b;
                if r < acc {
                    return Ok(b);
                }
            }
        }
        Ok(last_nonzero)
    }

    /// Plant-side draw: next state plus the realized continuous error.
    ///
    /// Always consumes exactly two uniforms so that streams stay aligned
    /// regardless of the jitter setting.
    pub fn sample_next_error<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> Result<(usize, f64)> {
        let next = self.sample_transition(state, rng)?;
        let jitter = (2.0 * rng.random::<f64>() - 1.0) * self.jitter_halfwidth;
        let lo = self.support[0];
        let hi = self.support[self.len() - 1];
        let realized = (self.support[next] + jitter).clamp(lo, hi);
        Ok((next, realized))
    }

    /// Distribution over states after `steps` transitions from `state`.
    pub fn propagate(&self, state: usize, steps: usize) -> Result<Vec<f64>> {
        self.check_state(state)?;
        let n = self.len();
        let mut dist = vec![0.0; n];
        dist[state] = 1.0;
        for _ in 0..steps {
            let mut next = vec![0.0; n];
            for (a, &pa) in dist.iter().enumerate() {
                if pa == 0.0 {
                    continue;
                }
                for (b, &q) in self.transition[a].iter().enumerate() {
                    next[b] += pa * q;
                }
            }
            dist = next;
        }
        Ok(dist)
    }

    /// Conditional mean error `steps` transitions after `state`.
    pub fn expected_error(&self, state: usize, steps: usize) -> Result<f64> {
        let dist = self.propagate(state, steps)?;
        Ok(dist.iter().zip(&self.support).map(|(p, w)| p * w).sum())
    }
}

/// One error-state path through the tree with its probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Root state followed by `M` successor states.
    pub path: Vec<usize>,
    /// Product of the transition probabilities along `path`.
    pub probability: f64,
}

impl Scenario {
    pub fn horizon(&self) -> usize {
        self.path.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub scenarios: Vec<Scenario>,
    pub threshold: f64,
    pub max_samples: usize,
    /// Size of the unpruned tree `|W|^M`, if it fits in a `u64`.
    pub full_count: Option<u64>,
    /// Set when no sample met the threshold and the most likely sample was kept instead.
    pub fallback: bool,
}

impl ScenarioSet {
    /// A single path with probability one.
    pub fn single(path: Vec<usize>) -> Self {
        Self {
            scenarios: vec![Scenario { path, probability: 1.0 }],
            threshold: 0.0,
            max_samples: 1,
            full_count: None,
            fallback: false,
        }
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.scenarios.first().map_or(0, Scenario::horizon)
    }

    pub fn total_probability(&self) -> f64 {
        self.scenarios.iter().map(|s| s.probability).sum()
    }
}

/// Samples `max_samples` error paths of length `horizon` from `root`,
/// keeps each distinct path whose probability reaches `threshold`.
///
/// Duplicate samples are merged into one entry carrying the single-path
/// probability. If nothing survives the threshold, the most probable sampled
/// path is returned and the set is flagged as a fallback.
pub fn build_scenario_set<R: Rng + ?Sized>(
    model: &DriverErrorModel,
    root: usize,
    horizon: usize,
    max_samples: usize,
    threshold: f64,
    rng: &mut R,
) -> Result<ScenarioSet> {
    model.check_state(root)?;
    if horizon == 0 {
        return Err(Error::invalid("scenario horizon must be >= 1"));
    }
    if max_samples == 0 {
        return Err(Error::invalid("max_samples must be >= 1"));
    }
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::invalid(format!("threshold must lie in [0, 1), got {threshold}")));
    }

    let mut kept: Vec<Scenario> = Vec::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut best: Option<Scenario> = None;
    let mut path = Vec::with_capacity(horizon + 1);

    for _ in 0..max_samples {
        path.clear();
        path.push(root);
        let mut prob = 1.0;
        let mut state = root;
        for _ in 0..horizon {
            let next = model.sample_transition(state, rng)?;
            prob *= model.probability(state, next);
            path.push(next);
            state = next;
        }
        if prob >= threshold {
            if seen.insert(path.clone()) {
                kept.push(Scenario {
                    path: path.clone(),
                    probability: prob,
                });
            }
        } else if kept.is_empty() && best.as_ref().is_none_or(|b| prob > b.probability) {
            best = Some(Scenario {
                path: path.clone(),
                probability: prob,
            });
        }
    }

    let full_count = u32::try_from(horizon)
        .ok()
        .and_then(|m| (model.len() as u64).checked_pow(m));
    let fallback = kept.is_empty();
    if fallback {
        kept.extend(best);
    }
    Ok(ScenarioSet {
        scenarios: kept,
        threshold,
        max_samples,
        full_count,
        fallback,
    })
}
