//! Robust tensor power method with deflation.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::SpectralConfig;
use crate::error::{Error, Result};
use crate::linalg::Tensor3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDiagnostics {
    /// Last polish step moved the iterate by at most the tolerance.
    pub converged: bool,
    pub final_movement: f64,
    /// `‖T(I, v, v) - λ v‖` on the tensor the component was extracted from.
    pub eigen_residual: f64,
    pub best_restart: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<DVector<f64>>,
    pub diagnostics: Vec<ComponentDiagnostics>,
}

fn random_unit<R: Rng + ?Sized>(k: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// One power step `θ ← T(I, θ, θ) / ‖T(I, θ, θ)‖`; returns the movement.
fn power_step(t: &Tensor3, theta: &mut DVector<f64>) -> f64 {
    let next = t.contract_vv(theta);
    let norm = next.norm();
    if norm == 0.0 {
        return 0.0;
    }
    let next = next / norm;
    let moved = (&next - &*theta).norm();
    *theta = next;
    moved
}

/// Extracts `k` eigenpairs of a (whitened, supersymmetric) tensor.
pub fn tensor_power<R: Rng + ?Sized>(
    tensor: &Tensor3,
    k: usize,
    config: &SpectralConfig,
    rng: &mut R,
) -> Result<TensorDecomposition> {
    let dim = tensor.dim();
    if k == 0 || k > dim {
        return Err(Error::InvalidArgument(format!(
            "cannot extract {k} components from a {dim}-dimensional tensor"
        )));
    }
    let asym = tensor.max_asymmetry();
    if asym > config.symmetry_tolerance {
        return Err(Error::InvalidArgument(format!(
            "tensor is not supersymmetric (deviation {asym:e})"
        )));
    }
    let mut t = tensor.clone();
    let mut out = TensorDecomposition {
        eigenvalues: Vec::with_capacity(k),
        eigenvectors: Vec::with_capacity(k),
        diagnostics: Vec::with_capacity(k),
    };
    for _ in 0..k {
        let mut best: Option<(f64, DVector<f64>, usize)> = None;
        for restart in 0..config.restarts.max(1) {
            let mut theta = random_unit(dim, rng);
            for _ in 0..config.iterations {
                if power_step(&t, &mut theta) <= config.tolerance * 1e-2 {
                    break;
                }
            }
            let value = t.contract_vvv(&theta);
            if best.as_ref().is_none_or(|b| value > b.0) {
                best = Some((value, theta, restart));
            }
        }
        let (_, mut theta, best_restart) = best.expect("at least one restart");
        let mut movement = 0.0;
        for _ in 0..config.polish {
            movement = power_step(&t, &mut theta);
        }
        let lambda = t.contract_vvv(&theta);
        let eigen_residual = (t.contract_vv(&theta) - &theta * lambda).norm();
        out.diagnostics.push(ComponentDiagnostics {
            converged: movement <= config.tolerance,
            final_movement: movement,
            eigen_residual,
            best_restart,
        });
        t.add_rank_one(-lambda, &theta);
        out.eigenvalues.push(lambda);
        out.eigenvectors.push(theta);
    }
    if out.eigenvalues.iter().all(|&l| l <= config.eigen_floor) {
        return Err(Error::DecompositionFailed(format!(
            "all eigenvalues below floor {:e}: {:?}",
            config.eigen_floor, out.eigenvalues
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn recovers_orthogonal_components() {
        // oracle: build Σ λ_i v_i⊗3 from known orthonormal factors
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let v1 = DVector::from_vec(vec![c, c]);
        let v2 = DVector::from_vec(vec![c, -c]);
        let mut t = Tensor3::zeros(2);
        t.add_rank_one(3.0, &v1);
        t.add_rank_one(1.0, &v2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = tensor_power(&t, 2, &SpectralConfig::default(), &mut rng).unwrap();
        assert!((d.eigenvalues[0] - 3.0).abs() < 1e-8);
        assert!((d.eigenvalues[1] - 1.0).abs() < 1e-8);
        assert!((&d.eigenvectors[0] - &v1).norm() < 1e-8);
        assert!((&d.eigenvectors[1] - &v2).norm() < 1e-8);
        assert!(d.diagnostics.iter().all(|x| x.converged));
    }

    #[test]
    fn rank_one_fixed_point_in_one_step() {
        let v = DVector::from_vec(vec![0.6, 0.8, 0.0]);
        let mut t = Tensor3::zeros(3);
        t.add_rank_one(2.5, &v);
        let mut theta = DVector::from_vec(vec![0.1, 0.3, 0.9]).normalize();
        power_step(&t, &mut theta);
        assert!((&theta - &v).norm() < 1e-15);
    }

    #[test]
    fn eigenvalue_matches_deflated_rayleigh_value() {
        let q = DMatrix::from_row_slice(3, 3, &[0.0, 0.6, 0.8, 1.0, 0.0, 0.0, 0.0, 0.8, -0.6]);
        let mut t = Tensor3::zeros(3);
        for (i, l) in [5.0, 2.0, 1.5].iter().enumerate() {
            t.add_rank_one(*l, &q.column(i).into_owned());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = tensor_power(&t, 3, &SpectralConfig::default(), &mut rng).unwrap();
        let mut deflated = t.clone();
        for (l, v) in d.eigenvalues.iter().zip(&d.eigenvectors) {
            assert!((deflated.contract_vvv(v) - l).abs() <= 1e-8);
            deflated.add_rank_one(-l, v);
        }
    }

    #[test]
    fn zero_tensor_fails() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err =
            tensor_power(&Tensor3::zeros(2), 2, &SpectralConfig::default(), &mut rng).unwrap_err();
        assert!(matches!(err, Error::DecompositionFailed(_)));
    }
}
