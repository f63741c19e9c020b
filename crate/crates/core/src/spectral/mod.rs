//! Recovery of observation, transition and reward parameters from
//! three-view moments: symmetrization, whitening, tensor power method and
//! un-whitening.
//!
//! With the hidden variable `h = s_{t+1}` the view conditionals are
//! `C1 = P(z_{t-1} | h)`, `C2 = O` and `C3 = O · T̄` where `T̄` is the
//! exploration-averaged transition. Symmetrizing views 1 and 3 into view 2
//! gives `M2 = O diag(w) Oᵀ` and `M3 = Σ_h w_h O_h ⊗ O_h ⊗ O_h`. Once `O` is
//! known, the view-1/view-2 cross moment `M12 = O diag(q) T_aᵀ Oᵀ` yields
//! `T_a` and the pre-transition occupancy `q`, and the reward cross moment
//! `O (q ∘ R_a)` yields `R_a`.

mod power;
mod simplex;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{pinv_checked, sorted_svd, top_eigen, Tensor3};
use crate::moments::ViewMoments;

pub use power::{tensor_power, ComponentDiagnostics, TensorDecomposition};
pub use simplex::project_simplex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub restarts: usize,
    pub iterations: usize,
    pub polish: usize,
    pub tolerance: f64,
    /// Floor on whitening eigenvalues and on weights before inversion.
    pub eigen_floor: f64,
    /// Relative singular-value cutoff for pseudoinverses.
    pub pinv_cutoff: f64,
    /// Relative floor on the k-th singular value of the view-1/view-3 cross
    /// moment.
    pub rank_floor: f64,
    /// For finite samples the k-th singular value must also exceed
    /// `rank_noise_scale / sqrt(count)`, the sampling-noise level of the
    /// cross moment.
    pub rank_noise_scale: f64,
    pub symmetry_tolerance: f64,
    pub seed: u64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            restarts: 50,
            iterations: 100,
            polish: 20,
            tolerance: 1e-10,
            eigen_floor: 1e-10,
            pinv_cutoff: 1e-10,
            rank_floor: 1e-10,
            rank_noise_scale: 2.0,
            symmetry_tolerance: 1e-8,
            seed: 0,
        }
    }
}

/// Symmetrized second- and third-order moments in view-2 coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMoments {
    pub pair: DMatrix<f64>,
    pub triple: Tensor3,
    /// k-th singular value of the view-1/view-3 cross moment.
    pub sigma_k: f64,
}

pub fn symmetrize(
    moments: &ViewMoments,
    k: usize,
    config: &SpectralConfig,
) -> Result<SymmetricMoments> {
    let z = moments.num_observations();
    if k == 0 || k > z {
        return Err(Error::InvalidArgument(format!(
            "latent dimension {k} with {z} observations"
        )));
    }
    let svd = sorted_svd(&moments.m13);
    let s1 = svd.s.first().copied().unwrap_or(0.0);
    let sigma_k = svd.s.get(k - 1).copied().unwrap_or(0.0);
    let mut floor = config.rank_floor * s1;
    if let Some(n) = moments.count.finite() {
        floor = floor.max(config.rank_noise_scale / (n.max(1) as f64).sqrt());
    }
    if !(sigma_k > floor) {
        return Err(Error::RankDeficient {
            action: moments.action,
            index: k,
            value: sigma_k,
            floor,
        });
    }
    let pinv13 = svd.pinv(k, config.pinv_cutoff);
    // view 1 -> view 2 and view 3 -> view 2
    let a = &moments.m23 * &pinv13;
    let b = moments.m12.transpose() * pinv13.transpose();
    let pair = &a * &moments.m13 * b.transpose();
    let pair = (&pair + pair.transpose()) * 0.5;
    let id = DMatrix::identity(z, z);
    let triple = moments
        .m123
        .multilinear(&a.transpose(), &id, &b.transpose())
        .symmetrized();
    Ok(SymmetricMoments {
        pair,
        triple,
        sigma_k,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Whitening {
    /// `W` with `Wᵀ M W = I_k`.
    pub map: DMatrix<f64>,
    /// `U diag(sqrt(λ))`, the pseudoinverse of `Wᵀ`.
    pub unmap: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
}

pub fn whiten(pair: &DMatrix<f64>, k: usize, floor: f64) -> Result<Whitening> {
    if k == 0 || k > pair.nrows() {
        return Err(Error::InvalidArgument(format!(
            "cannot whiten to {k} dimensions"
        )));
    }
    let (vals, vecs) = top_eigen(pair, k);
    let smallest = vals[k - 1];
    if !(smallest >= floor) {
        return Err(Error::IllConditioned {
            what: format!("eigenvalue {k} of the symmetrized pair moment"),
            value: smallest,
            floor,
        });
    }
    let map = DMatrix::from_fn(pair.nrows(), k, |i, j| vecs[(i, j)] / vals[j].sqrt());
    let unmap = DMatrix::from_fn(pair.nrows(), k, |i, j| vecs[(i, j)] * vals[j].sqrt());
    Ok(Whitening {
        map,
        unmap,
        eigenvalues: vals,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionDiagnostics {
    pub action: usize,
    pub sigma_k_m13: f64,
    pub whitening_eigenvalues: Vec<f64>,
    pub tensor_eigenvalues: Vec<f64>,
    pub components: Vec<ComponentDiagnostics>,
    /// Smallest gap between consecutive tensor eigenvalues.
    pub eigenvalue_gap: f64,
}

/// Parameters recovered for one action, in that action's own latent
/// labeling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionEstimate {
    pub action: usize,
    /// Weight used when averaging observation estimates across actions.
    pub weight: f64,
    pub o_hat: DMatrix<f64>,
    pub t_hat: DMatrix<f64>,
    pub r_hat: DVector<f64>,
    /// Middle-state (post-transition) weights, `λ_i^{-2}`.
    pub w_hat: DVector<f64>,
    /// Pre-transition occupancy implied by the cross moment.
    pub q_hat: DVector<f64>,
    pub diagnostics: Option<ActionDiagnostics>,
}

impl ActionEstimate {
    /// Relabels latent states: internal label `j` becomes `perm[j]`.
    pub fn permuted(&self, perm: &[usize]) -> ActionEstimate {
        let k = perm.len();
        let mut o_hat = DMatrix::zeros(self.o_hat.nrows(), k);
        let mut t_hat = DMatrix::zeros(k, k);
        let mut r_hat = DVector::zeros(k);
        let mut w_hat = DVector::zeros(k);
        let mut q_hat = DVector::zeros(k);
        for j in 0..k {
            o_hat.set_column(perm[j], &self.o_hat.column(j));
            r_hat[perm[j]] = self.r_hat[j];
            w_hat[perm[j]] = self.w_hat[j];
            q_hat[perm[j]] = self.q_hat[j];
            for i in 0..k {
                t_hat[(perm[i], perm[j])] = self.t_hat[(i, j)];
            }
        }
        ActionEstimate {
            o_hat,
            t_hat,
            r_hat,
            w_hat,
            q_hat,
            ..self.clone()
        }
    }
}

/// Given an observation estimate, recovers `T_a`, `R_a` and the
/// pre-transition occupancy from the action's cross moments.
pub fn transitions_given_observation(
    moments: &ViewMoments,
    o_hat: &DMatrix<f64>,
    reward_max: f64,
    config: &SpectralConfig,
) -> Result<(DMatrix<f64>, DVector<f64>, DVector<f64>)> {
    let k = o_hat.ncols();
    let p = pinv_checked(o_hat, k, config.pinv_cutoff, "observation estimate")?;
    // X = diag(q) T_aᵀ
    let x = &p * &moments.m12 * p.transpose();
    let q = DVector::from_fn(k, |s, _| x.row(s).sum());
    let weighted_reward = &p * &moments.reward_cross;
    let mut t_hat = DMatrix::zeros(k, k);
    let mut r_hat = DVector::zeros(k);
    for s in 0..k {
        if !(q[s] > config.eigen_floor) {
            return Err(Error::IllConditioned {
                what: format!(
                    "pre-transition occupancy of latent state {s} under action {}",
                    moments.action
                ),
                value: q[s],
                floor: config.eigen_floor,
            });
        }
        let col = x.row(s).transpose() / q[s];
        t_hat.set_column(s, &project_simplex(&col));
        r_hat[s] = (weighted_reward[s] / q[s]).clamp(0.0, reward_max);
    }
    Ok((t_hat, r_hat, project_simplex(&q)))
}

/// Un-whitens the eigenpairs into observation columns and recovers the
/// action's transitions and rewards.
pub fn recover_model(
    moments: &ViewMoments,
    decomposition: &TensorDecomposition,
    whitening: &Whitening,
    reward_max: f64,
    config: &SpectralConfig,
) -> Result<ActionEstimate> {
    let k = decomposition.eigenvalues.len();
    let z = moments.num_observations();
    let mut o_hat = DMatrix::zeros(z, k);
    let mut w_hat = DVector::zeros(k);
    for (i, (&lambda, v)) in decomposition
        .eigenvalues
        .iter()
        .zip(&decomposition.eigenvectors)
        .enumerate()
    {
        if !(lambda > config.eigen_floor) {
            return Err(Error::IllConditioned {
                what: format!("tensor eigenvalue {i} for action {}", moments.action),
                value: lambda,
                floor: config.eigen_floor,
            });
        }
        let mut col = &whitening.unmap * v * lambda;
        if col.sum() < 0.0 {
            col = -col;
        }
        o_hat.set_column(i, &project_simplex(&col));
        w_hat[i] = lambda.powi(-2);
    }
    let (t_hat, r_hat, q_hat) = transitions_given_observation(moments, &o_hat, reward_max, config)?;
    let mut sorted = decomposition.eigenvalues.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let eigenvalue_gap = sorted
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::INFINITY, f64::min);
    Ok(ActionEstimate {
        action: moments.action,
        weight: moments.count.weight(),
        o_hat,
        t_hat,
        r_hat,
        w_hat,
        q_hat,
        diagnostics: Some(ActionDiagnostics {
            action: moments.action,
            sigma_k_m13: f64::NAN,
            whitening_eigenvalues: whitening.eigenvalues.clone(),
            tensor_eigenvalues: decomposition.eigenvalues.clone(),
            components: decomposition.diagnostics.clone(),
            eigenvalue_gap: if eigenvalue_gap.is_finite() {
                eigenvalue_gap
            } else {
                0.0
            },
        }),
    })
}

/// Full per-action decomposition: symmetrize, whiten, tensor power,
/// recover.
pub fn decompose_action(
    moments: &ViewMoments,
    k: usize,
    reward_max: f64,
    config: &SpectralConfig,
) -> Result<ActionEstimate> {
    use rand::SeedableRng;
    let sym = symmetrize(moments, k, config)?;
    let whitening = whiten(&sym.pair, k, config.eigen_floor)?;
    let whitened = sym
        .triple
        .multilinear(&whitening.map, &whitening.map, &whitening.map)
        .symmetrized();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(moments.action as u64);
    let decomposition = tensor_power(&whitened, k, config, &mut rng)?;
    let mut est = recover_model(moments, &decomposition, &whitening, reward_max, config)?;
    if let Some(d) = est.diagnostics.as_mut() {
        d.sigma_k_m13 = sym.sigma_k;
    }
    Ok(est)
}

/// Initial belief from first-step observations: solves
/// `Ô T̂_a b = P(z_1 | a_1 = a)` jointly over actions, weighted by how many
/// episodes started with each action, then projects onto the simplex.
pub fn recover_initial_belief(
    o_hat: &DMatrix<f64>,
    t_hat: &[DMatrix<f64>],
    moments: &[ViewMoments],
    config: &SpectralConfig,
) -> Result<DVector<f64>> {
    let k = o_hat.ncols();
    let z = o_hat.nrows();
    let rows: Vec<(f64, DMatrix<f64>, &DVector<f64>)> = moments
        .iter()
        .filter(|m| m.first_count.weight() > 0.0)
        .map(|m| {
            (
                m.first_count.weight().sqrt(),
                o_hat * &t_hat[m.action],
                &m.first_observation,
            )
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::InsufficientData { action: 0 });
    }
    let total: f64 = rows.iter().map(|r| r.0 * r.0).sum();
    let mut a = DMatrix::zeros(z * rows.len(), k);
    let mut y = DVector::zeros(z * rows.len());
    for (i, (w, m, p)) in rows.iter().enumerate() {
        let w = w / total.sqrt();
        a.view_mut((i * z, 0), (z, k)).copy_from(&(m * w));
        y.rows_mut(i * z, z).copy_from(&(*p * w));
    }
    let pa = pinv_checked(&a, k, config.pinv_cutoff, "initial-belief system")?;
    Ok(project_simplex(&(pa * y)))
}
