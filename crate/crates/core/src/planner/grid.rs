//! Value iteration on a regular belief-simplex lattice with nearest-point
//! interpolation. Approximate; used when the exact planner's cross-sums are
//! too large.

use std::collections::HashMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::BeliefPolicy;
use crate::error::{Error, Result};
use crate::pomdp::TabularPomdp;

const GRID_CAP: u128 = 2_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPolicy {
    pub resolution: usize,
    /// Lattice points as integer counts summing to `resolution`.
    pub points: Vec<Vec<u32>>,
    /// `actions[t][g]`: action at lattice point `g` with `H - t` steps to go.
    pub actions: Vec<Vec<usize>>,
    pub values: Vec<Vec<f64>>,
    #[serde(skip)]
    index: HashMap<Vec<u32>, usize>,
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

fn compositions(total: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if parts == 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first);
        compositions(total - first, parts - 1, prefix, out);
        prefix.pop();
    }
}

/// Largest-remainder rounding of `b · resolution` onto the lattice; ties
/// favor lower state indices.
fn round_to_lattice(b: &DVector<f64>, resolution: usize) -> Vec<u32> {
    let scaled: Vec<f64> = b.iter().map(|x| x.max(0.0) * resolution as f64).collect();
    let mut counts: Vec<u32> = scaled.iter().map(|x| x.floor() as u32).collect();
    let assigned: u32 = counts.iter().sum();
    let mut order: Vec<usize> = (0..b.len()).collect();
    order.sort_by(|&i, &j| {
        (scaled[j] - scaled[j].floor())
            .total_cmp(&(scaled[i] - scaled[i].floor()))
            .then(i.cmp(&j))
    });
    let mut deficit = resolution as i64 - assigned as i64;
    let mut k = 0;
    while deficit > 0 {
        counts[order[k % order.len()]] += 1;
        deficit -= 1;
        k += 1;
    }
    // floating error can overshoot when b does not sum exactly to one
    while deficit < 0 {
        let i = (0..counts.len())
            .rev()
            .max_by_key(|&i| counts[i])
            .expect("nonempty");
        counts[i] -= 1;
        deficit += 1;
    }
    counts
}

impl GridPolicy {
    fn rebuild_index(&mut self) {
        self.index = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
    }

    pub fn nearest(&self, belief: &DVector<f64>) -> usize {
        self.index[&round_to_lattice(belief, self.resolution)]
    }

    /// Grid estimate of the value with `H - step` steps to go.
    pub fn value(&self, step: usize, belief: &DVector<f64>) -> f64 {
        self.values[step][self.nearest(belief)]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut p: Self = serde_json::from_str(text)?;
        p.rebuild_index();
        Ok(p)
    }
}

impl BeliefPolicy for GridPolicy {
    fn horizon(&self) -> usize {
        self.actions.len()
    }

    fn action(&self, step: usize, belief: &DVector<f64>) -> usize {
        self.actions[step][self.nearest(belief)]
    }
}

pub fn solve_belief_grid(model: &TabularPomdp, resolution: usize) -> Result<GridPolicy> {
    if resolution < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid resolution {resolution} is below 2"
        )));
    }
    let n = model.num_states();
    let count = binomial((resolution + n - 1) as u128, (n - 1) as u128);
    if count > GRID_CAP {
        return Err(Error::SizeLimit {
            what: "belief grid points".into(),
            size: count,
            cap: GRID_CAP,
        });
    }
    let mut points = Vec::with_capacity(count as usize);
    compositions(
        resolution as u32,
        n,
        &mut Vec::with_capacity(n),
        &mut points,
    );
    let mut policy = GridPolicy {
        resolution,
        points,
        actions: Vec::new(),
        values: Vec::new(),
        index: HashMap::new(),
    };
    policy.rebuild_index();
    let beliefs: Vec<DVector<f64>> = policy
        .points
        .iter()
        .map(|p| DVector::from_iterator(n, p.iter().map(|&c| c as f64 / resolution as f64)))
        .collect();
    // successors[g][a] = [(P(z), nearest lattice point of the posterior)]
    let successors: Vec<Vec<Vec<(f64, usize)>>> = beliefs
        .iter()
        .map(|b| {
            (0..model.num_actions())
                .map(|a| {
                    (0..model.num_observations())
                        .filter_map(|z| {
                            let joint = model.predict_joint(b, a, z);
                            let mass = joint.sum();
                            (mass > 0.0).then(|| (mass, policy.nearest(&(joint / mass))))
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut next_values: Option<Vec<f64>> = None;
    let mut actions = Vec::with_capacity(model.horizon());
    let mut values = Vec::with_capacity(model.horizon());
    for _ in 0..model.horizon() {
        let mut step_actions = Vec::with_capacity(beliefs.len());
        let mut step_values = Vec::with_capacity(beliefs.len());
        for (g, b) in beliefs.iter().enumerate() {
            let mut best = (0, f64::NEG_INFINITY);
            for (a, succ) in successors[g].iter().enumerate() {
                let mut v = model.reward(a).dot(b);
                if let Some(next) = &next_values {
                    v += succ.iter().map(|&(p, j)| p * next[j]).sum::<f64>();
                }
                if v > best.1 + super::TIE {
                    best = (a, v);
                }
            }
            step_actions.push(best.0);
            step_values.push(best.1);
        }
        next_values = Some(step_values.clone());
        actions.push(step_actions);
        values.push(step_values);
    }
    actions.reverse();
    values.reverse();
    policy.actions = actions;
    policy.values = values;
    Ok(policy)
}
