//! Dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Smallest singular value counted against `rank` columns: zero if the
/// matrix has fewer than `rank` singular values.
pub fn sigma_min(m: &DMatrix<f64>, rank: usize) -> f64 {
    let s = singular_values(m);
    if s.len() < rank || rank == 0 {
        return 0.0;
    }
    s[rank - 1].max(0.0)
}

/// Thin SVD with singular triplets sorted by decreasing singular value.
pub struct SortedSvd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v_t: DMatrix<f64>,
}

pub fn sorted_svd(m: &DMatrix<f64>) -> SortedSvd {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    SortedSvd {
        u: DMatrix::from_fn(u.nrows(), order.len(), |i, j| u[(i, order[j])]),
        s: order.iter().map(|&i| svd.singular_values[i]).collect(),
        v_t: DMatrix::from_fn(order.len(), v_t.ncols(), |i, j| v_t[(order[i], j)]),
    }
}

impl SortedSvd {
    /// Pseudoinverse keeping at most `rank` triplets, and only those above
    /// `rel_cutoff * s_max`.
    pub fn pinv(&self, rank: usize, rel_cutoff: f64) -> DMatrix<f64> {
        let n = self.v_t.ncols();
        let m = self.u.nrows();
        let mut out = DMatrix::zeros(n, m);
        let smax = self.s.first().copied().unwrap_or(0.0);
        for i in 0..rank.min(self.s.len()) {
            let si = self.s[i];
            if si <= rel_cutoff * smax || si <= 0.0 {
                break;
            }
            let v = self.v_t.row(i).transpose();
            let u = self.u.column(i);
            out += (v / si) * u.transpose();
        }
        out
    }
}

/// Moore-Penrose pseudoinverse with relative cutoff `rel_cutoff`.
pub fn pinv(m: &DMatrix<f64>, rel_cutoff: f64) -> DMatrix<f64> {
    let svd = sorted_svd(m);
    let r = svd.s.len();
    svd.pinv(r, rel_cutoff)
}

/// Pseudoinverse that refuses when the `rank`-th singular value falls below
/// `floor` relative to the largest one.
pub fn pinv_checked(m: &DMatrix<f64>, rank: usize, floor: f64, what: &str) -> Result<DMatrix<f64>> {
    let svd = sorted_svd(m);
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let sk = if rank == 0 {
        smax
    } else {
        svd.s.get(rank - 1).copied().unwrap_or(0.0)
    };
    if smax <= 0.0 || sk < floor * smax {
        return Err(Error::IllConditioned {
            what: what.to_string(),
            value: if smax > 0.0 { sk / smax } else { 0.0 },
            floor,
        });
    }
    Ok(svd.pinv(rank, 0.0))
}

/// Top-`k` eigenpairs of a symmetric matrix, eigenvalues descending.
pub fn top_eigen(m: &DMatrix<f64>, k: usize) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    order.truncate(k);
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m.nrows(), order.len(), |i, j| {
        eig.eigenvectors[(i, order[j])]
    });
    (vals, vecs)
}

pub fn l1(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum()
}

pub fn column_l1(a: &DMatrix<f64>, i: usize, b: &DMatrix<f64>, j: usize) -> f64 {
    a.column(i)
        .iter()
        .zip(b.column(j).iter())
        .map(|(x, y)| (x - y).abs())
        .sum()
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Dense cubic tensor with row-major layout `[i][j][l]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor3 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                for l in 0..dim {
                    t.data[(i * dim + j) * dim + l] = f(i, j, l);
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, l: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + l]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize, j: usize, l: usize) -> &mut f64 {
        &mut self.data[(i * self.dim + j) * self.dim + l]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Adds `weight * v ⊗ v ⊗ v`.
    pub fn add_rank_one(&mut self, weight: f64, v: &DVector<f64>) {
        let n = self.dim;
        for i in 0..n {
            for j in 0..n {
                let vij = weight * v[i] * v[j];
                for l in 0..n {
                    self.data[(i * n + j) * n + l] += vij * v[l];
                }
            }
        }
    }

    /// Multilinear map `T(A, B, C)` with every factor of shape `dim × k`.
    pub fn multilinear(&self, a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Tensor3 {
        let n = self.dim;
        let k = a.ncols();
        // contract the last index first, then the middle, then the first
        let mut t1 = vec![0.0; n * n * k];
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let x = self.get(i, j, l);
                    if x == 0.0 {
                        continue;
                    }
                    for r in 0..k {
                        t1[(i * n + j) * k + r] += x * c[(l, r)];
                    }
                }
            }
        }
        let mut t2 = vec![0.0; n * k * k];
        for i in 0..n {
            for j in 0..n {
                for q in 0..k {
                    let x = t1[(i * n + j) * k + q];
                    for p in 0..k {
                        t2[(i * k + p) * k + q] += x * b[(j, p)];
                    }
                }
            }
        }
        let mut out = Tensor3::zeros(k);
        for i in 0..n {
            for p in 0..k {
                for q in 0..k {
                    let x = t2[(i * k + p) * k + q];
                    for o in 0..k {
                        *out.get_mut(o, p, q) += x * a[(i, o)];
                    }
                }
            }
        }
        out
    }

    /// `T(I, v, v)`.
    pub fn contract_vv(&self, v: &DVector<f64>) -> DVector<f64> {
        let n = self.dim;
        DVector::from_fn(n, |i, _| {
            let mut acc = 0.0;
            for j in 0..n {
                let mut row = 0.0;
                for l in 0..n {
                    row += self.get(i, j, l) * v[l];
                }
                acc += row * v[j];
            }
            acc
        })
    }

    /// `T(v, v, v)`.
    pub fn contract_vvv(&self, v: &DVector<f64>) -> f64 {
        self.contract_vv(v).dot(v)
    }

    /// Average over all six index permutations.
    pub fn symmetrized(&self) -> Tensor3 {
        Tensor3::from_fn(self.dim, |i, j, l| {
            (self.get(i, j, l)
                + self.get(i, l, j)
                + self.get(j, i, l)
                + self.get(j, l, i)
                + self.get(l, i, j)
                + self.get(l, j, i))
                / 6.0
        })
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let s = self.symmetrized();
        self.data
            .iter()
            .zip(s.data.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
