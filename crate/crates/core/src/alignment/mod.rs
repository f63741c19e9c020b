//! Latent-state alignment across actions.
//!
//! Each action's decomposition labels latent states arbitrarily. Since the
//! observation matrix is shared by all actions, every action's observation
//! columns are matched to a reference action's columns by a minimum-cost
//! assignment under L1 column distance.

mod hungarian;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::column_l1;
use crate::spectral::ActionEstimate;

pub use hungarian::min_cost_assignment;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentConfig {
    /// Reference columns closer than this are considered indistinguishable.
    pub distance_floor: f64,
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        Self {
            distance_floor: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    /// Position of the reference among the aligned inputs.
    pub reference: usize,
    /// `permutations[m][j]` is the reference label of input `m`'s label `j`.
    pub permutations: Vec<Vec<usize>>,
    pub matching_cost: Vec<f64>,
    /// Extra cost of the cheapest assignment that moves any single state off
    /// its chosen partner; `None` with a single latent state.
    pub margin: Vec<Option<f64>>,
}

fn cost_matrix(reference: &DMatrix<f64>, other: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let k = reference.ncols();
    (0..k)
        .map(|i| (0..k).map(|j| column_l1(reference, i, other, j)).collect())
        .collect()
}

fn margin(cost: &[Vec<f64>], assignment: &[usize], optimum: f64) -> Option<f64> {
    let k = cost.len();
    if k < 2 {
        return None;
    }
    let big = cost.iter().flatten().fold(0.0_f64, |a, &b| a.max(b)) * (k as f64 + 1.0) + 1.0;
    let mut best = f64::INFINITY;
    for (i, &j) in assignment.iter().enumerate() {
        let mut c = cost.to_vec();
        c[i][j] = big;
        let (_, alt) = min_cost_assignment(&c);
        best = best.min(alt - optimum);
    }
    Some(best.max(0.0))
}

/// Matches every observation estimate to `o_hats[reference]`.
pub fn align(
    o_hats: &[&DMatrix<f64>],
    reference: usize,
    config: AlignmentConfig,
) -> Result<AlignmentResult> {
    let refm = *o_hats
        .get(reference)
        .ok_or_else(|| Error::InvalidArgument(format!("reference {reference} out of range")))?;
    if o_hats.iter().any(|m| m.shape() != refm.shape()) {
        return Err(Error::InvalidArgument(
            "observation estimates differ in shape".into(),
        ));
    }
    let k = refm.ncols();
    for i in 0..k {
        for j in i + 1..k {
            let d = column_l1(refm, i, refm, j);
            if d < config.distance_floor {
                return Err(Error::AmbiguousAlignment {
                    first: i,
                    second: j,
                    distance: d,
                });
            }
        }
    }
    let mut out = AlignmentResult {
        reference,
        permutations: Vec::with_capacity(o_hats.len()),
        matching_cost: Vec::with_capacity(o_hats.len()),
        margin: Vec::with_capacity(o_hats.len()),
    };
    for (m, other) in o_hats.iter().enumerate() {
        let cost = cost_matrix(refm, other);
        let (assignment, total) = if m == reference {
            ((0..k).collect::<Vec<_>>(), 0.0)
        } else {
            min_cost_assignment(&cost)
        };
        let mut perm = vec![0; k];
        for (i, &j) in assignment.iter().enumerate() {
            perm[j] = i;
        }
        out.margin.push(margin(&cost, &assignment, total));
        out.permutations.push(perm);
        out.matching_cost.push(total);
    }
    Ok(out)
}

/// Action estimates relabeled into the reference labeling, with the shared
/// observation estimate averaged across them.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedEstimates {
    pub o_hat: DMatrix<f64>,
    pub actions: Vec<ActionEstimate>,
}

pub fn apply_alignment(
    estimates: &[ActionEstimate],
    result: &AlignmentResult,
) -> Result<AlignedEstimates> {
    if estimates.len() != result.permutations.len() || estimates.is_empty() {
        return Err(Error::InvalidArgument(
            "alignment does not cover the estimates".into(),
        ));
    }
    let actions: Vec<ActionEstimate> = estimates
        .iter()
        .zip(&result.permutations)
        .map(|(e, p)| e.permuted(p))
        .collect();
    let total: f64 = actions.iter().map(|a| a.weight).sum();
    let (z, k) = actions[0].o_hat.shape();
    let o_hat = actions.iter().fold(DMatrix::zeros(z, k), |acc, a| {
        acc + &a.o_hat * (a.weight / total)
    });
    Ok(AlignedEstimates { o_hat, actions })
}

#[cfg(test)]
mod tests {
    use nalgebra::DVector;

    use super::*;

    fn sample_o() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[0.7, 0.1, 0.2, 0.2, 0.8, 0.1, 0.1, 0.1, 0.7])
    }

    fn permute_columns(m: &DMatrix<f64>, perm: &[usize]) -> DMatrix<f64> {
        // column j of the result is column perm[j] of m
        DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, perm[j])])
    }

    #[test]
    fn permuted_copies_recover_inverse_permutation() {
        let o = sample_o();
        let shuffled = permute_columns(&o, &[2, 0, 1]);
        let r = align(&[&o, &shuffled], 0, AlignmentConfig::default()).unwrap();
        assert_eq!(r.permutations[0], vec![0, 1, 2]);
        assert_eq!(r.permutations[1], vec![2, 0, 1]);
        assert_eq!(r.matching_cost[1], 0.0);
        assert!(r.margin[1].unwrap() > 0.0);
    }

    #[test]
    fn duplicate_reference_columns_are_ambiguous() {
        let mut o = sample_o();
        let c0 = o.column(0).into_owned();
        o.set_column(2, &c0);
        let err = align(&[&o, &sample_o()], 0, AlignmentConfig::default()).unwrap_err();
        assert!(matches!(
            err,
            Error::AmbiguousAlignment {
                first: 0,
                second: 2,
                ..
            }
        ));
    }

    fn estimate(o: DMatrix<f64>) -> ActionEstimate {
        let k = o.ncols();
        ActionEstimate {
            action: 0,
            weight: 1.0,
            o_hat: o,
            t_hat: DMatrix::from_fn(k, k, |i, j| {
                if i == (j + 1) % k {
                    0.75
                } else {
                    0.25 / (k - 1) as f64
                }
            }),
            r_hat: DVector::from_fn(k, |i, _| i as f64 / k as f64),
            w_hat: DVector::from_fn(k, |i, _| (i + 1) as f64),
            q_hat: DVector::from_element(k, 1.0 / k as f64),
            diagnostics: None,
        }
    }

    #[test]
    fn identity_alignment_averages_identical_copies() {
        let e = estimate(sample_o());
        let r = align(&[&e.o_hat, &e.o_hat], 0, AlignmentConfig::default()).unwrap();
        let merged = apply_alignment(&[e.clone(), e.clone()], &r).unwrap();
        assert!(crate::linalg::max_abs_diff(&merged.o_hat, &e.o_hat) < 1e-15);
        assert_eq!(merged.actions[1], e);
    }

    #[test]
    fn permutation_then_inverse_is_identity() {
        let e = estimate(sample_o());
        let perm = [1, 2, 0];
        let mut inv = [0; 3];
        for (j, &p) in perm.iter().enumerate() {
            inv[p] = j;
        }
        assert_eq!(e.permuted(&perm).permuted(&inv), e);
    }

    #[test]
    fn alignment_preserves_column_stochasticity() {
        let e = estimate(sample_o());
        let shuffled = e.permuted(&[2, 0, 1]);
        let r = align(&[&e.o_hat, &shuffled.o_hat], 0, AlignmentConfig::default()).unwrap();
        let merged = apply_alignment(&[e.clone(), shuffled], &r).unwrap();
        for a in &merged.actions {
            for c in a.t_hat.column_iter() {
                assert!((c.sum() - 1.0).abs() < 1e-15);
            }
        }
        assert_eq!(merged.actions[1], e);
    }
}
