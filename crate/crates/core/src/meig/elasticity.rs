//! Fourth-order elasticity tensors on ℝ³.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{solve_form, MeigSolution, SolveOptions};
use crate::tensor::Tensor4;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ElasticityTensor {
    e: Tensor4,
}

/// An eigenpair of `E_ijkl zᵏˡ = ζ z_ij` over symmetric `z` with `‖z‖_F = 1`.
#[derive(Debug, Clone)]
pub struct SymmetricEigenpair {
    pub zeta: f64,
    pub z: DMatrix<f64>,
}

// Mandel ordering of symmetric index pairs.
const MANDEL: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)];

impl ElasticityTensor {
    /// Rejects tensors that lack the minor or major symmetries.
    pub fn new(e: Tensor4) -> Result<Self> {
        if e.dim() != 3 {
            return Err(Error::WrongDimension {
                expected: 3,
                got: e.dim(),
            });
        }
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let x = e[[i, j, k, l]];
                        if x != e[[j, i, k, l]] || x != e[[i, j, l, k]] || x != e[[k, l, i, j]] {
                            return Err(Error::BadParams(format!(
                                "elasticity tensor lacks symmetry at ({i},{j},{k},{l})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(ElasticityTensor { e })
    }

    /// `E_ijkl = a δ_ij δ_kl + b (δ_ik δ_jl + δ_il δ_jk)`
    pub fn isotropic(a: f64, b: f64) -> Self {
        let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
        let e = Tensor4::from_fn(3, |i, j, k, l| a * d(i, j) * d(k, l) + b * (d(i, k) * d(j, l) + d(i, l) * d(j, k)));
        ElasticityTensor { e }
    }

    pub fn zero() -> Self {
        ElasticityTensor { e: Tensor4::zeros(3) }
    }

    pub fn tensor(&self) -> &Tensor4 {
        &self.e
    }

    /// `E_ijkl zᵏˡ`
    pub fn apply(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(3, 3, |i, j| {
            let mut s = 0.0;
            for k in 0..3 {
                for l in 0..3 {
                    s += self.e[[i, j, k, l]] * z[(k, l)];
                }
            }
            s
        })
    }

    /// The symmetric 6×6 Mandel matrix, whose eigenvalues are the ζ.
    pub fn mandel(&self) -> DMatrix<f64> {
        let w = |(i, j): (usize, usize)| if i == j { 1.0 } else { std::f64::consts::SQRT_2 };
        DMatrix::from_fn(6, 6, |a, b| {
            let (p, q) = (MANDEL[a], MANDEL[b]);
            w(p) * w(q) * self.e[[p.0, p.1, q.0, q.1]]
        })
    }

    /// Eigenpairs of `E z = ζ z` in ascending ζ.
    pub fn classical_eigen(&self) -> Vec<SymmetricEigenpair> {
        let eig = SymmetricEigen::new(self.mandel());
        let mut order: Vec<usize> = (0..6).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        order
            .into_iter()
            .map(|k| {
                let y: DVector<f64> = eig.eigenvectors.column(k).into_owned();
                let mut z = DMatrix::zeros(3, 3);
                for (a, &(i, j)) in MANDEL.iter().enumerate() {
                    if i == j {
                        z[(i, i)] = y[a];
                    } else {
                        z[(i, j)] = y[a] / std::f64::consts::SQRT_2;
                        z[(j, i)] = z[(i, j)];
                    }
                }
                SymmetricEigenpair {
                    zeta: eig.eigenvalues[k],
                    z,
                }
            })
            .collect()
    }

    /// `E_ijkl xⁱ yʲ xᵏ yˡ`
    pub fn quartic(&self, x: &[f64], y: &[f64]) -> f64 {
        self.e.contract4(x, y, x, y)
    }

    /// M-eigenpairs under unit Euclidean constraints; `opts.sigma_*` must be +1.
    pub fn meig(&self, opts: &SolveOptions) -> Result<MeigSolution> {
        if opts.sigma_u != 1.0 || opts.sigma_v != 1.0 {
            return Err(Error::Options("elasticity M-eigenpairs use unit Euclidean norms".into()));
        }
        solve_form(&self.e, &DMatrix::identity(3, 3), opts)
    }

    /// `‖E z − ζ z‖` for `z = x yᵀ + y xᵀ`.
    pub fn bridge_residual(&self, x: &[f64], y: &[f64], zeta: f64) -> f64 {
        let z = DMatrix::from_fn(3, 3, |i, j| x[i] * y[j] + y[i] * x[j]);
        (self.apply(&z) - z * zeta).norm()
    }
}

pub fn elasticity_meig(e: &ElasticityTensor, opts: &SolveOptions) -> Result<MeigSolution> {
    e.meig(opts)
}
