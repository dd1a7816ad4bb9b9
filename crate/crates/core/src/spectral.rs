//! Spectral decomposition `A = sum_a lambda_a r_a l_a` of diagonalizable
//! maps and the spectral generalized inverse.

use nalgebra::{DMatrix, DVector, Schur};
use serde::{Deserialize, Serialize};

use crate::basis::HermitianBasis;
use crate::error::{Error, Result};
use crate::linalg::{c64, frobenius, to_complex, ComplexMatrix, C64};
use crate::transfer::TransferMatrix;

pub const DEFAULT_COND_MAX: f64 = 1e8;
/// Eigenvalues with `|lambda| <= ZERO_EIGENVALUE_TOL * max |lambda|` count as zero.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-9;
const CLUSTER_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDecomposition {
    /// Operator dimension `d`, so vectors have length `d^2`.
    pub dim: usize,
    pub eigenvalues: Vec<C64>,
    /// Right eigenvectors as columns.
    #[serde(with = "crate::io::serde_matrix")]
    pub right: ComplexMatrix,
    /// Left eigenvectors as rows; `left = right^-1`.
    #[serde(with = "crate::io::serde_matrix")]
    pub left: ComplexMatrix,
    pub condition_number: f64,
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `P_a = r_a l_a`.
    pub fn projector(&self, alpha: usize) -> ComplexMatrix {
        self.right.column(alpha) * self.left.row(alpha)
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.len();
        let lambda = DMatrix::from_fn(n, n, |i, j| if i == j { self.eigenvalues[i] } else { C64::default() });
        &self.right * lambda * &self.left
    }

    /// `|| L R - 1 ||_F`, the failure of `(G_a, F_b) = delta_ab`.
    pub fn biorthogonality_residual(&self) -> f64 {
        let n = self.len();
        frobenius(&(&self.left * &self.right - ComplexMatrix::identity(n, n)))
    }

    /// Right eigen-operator `F_a`, assuming vectors are coordinates in the
    /// orthonormal Hermitian basis.
    pub fn right_operator(&self, alpha: usize) -> ComplexMatrix {
        let basis = HermitianBasis::any(self.dim);
        basis.operator(&self.right.column(alpha).into_owned())
    }

    /// Left eigen-operator `G_a`, defined through `l_a . x = Tr(G_a^dagger X)`.
    pub fn left_operator(&self, alpha: usize) -> ComplexMatrix {
        let basis = HermitianBasis::any(self.dim);
        let coords: DVector<C64> = self.left.row(alpha).transpose().map(|z| z.conj());
        basis.operator(&coords)
    }

    /// `C_ab = (G_a(self), F_b(other))`.
    pub fn correlations(&self, other: &SpectralDecomposition) -> ComplexMatrix {
        &self.left * &other.right
    }
}

fn sort_key(z: &C64) -> (f64, f64, f64) {
    (-z.norm(), -z.re, -z.im)
}

/// Eigen-decomposition of a square matrix, rejecting defective or badly
/// conditioned cases.
pub fn spectral_decompose(a: &ComplexMatrix, dim: usize, cond_max: f64) -> Result<SpectralDecomposition> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch(format!("spectral decomposition needs a square matrix, got {:?}", a.shape())));
    }
    if n == 0 {
        return Err(Error::InvalidDimension("empty matrix".into()));
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NotDiagonalizable("eigenvalue iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    let mut values: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    values.sort_by(|x, y| sort_key(x).partial_cmp(&sort_key(y)).unwrap_or(std::cmp::Ordering::Equal));

    let scale = values.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let cluster_tol = CLUSTER_TOL * scale;
    let mut clusters: Vec<Vec<C64>> = Vec::new();
    for v in values {
        match clusters.iter_mut().find(|c| (c[0] - v).norm() <= cluster_tol) {
            Some(c) => c.push(v),
            None => clusters.push(vec![v]),
        }
    }

    let mut columns: Vec<DVector<C64>> = Vec::with_capacity(n);
    for cluster in &clusters {
        let m = cluster.len();
        let mu = cluster.iter().sum::<C64>() / c64(m as f64, 0.0);
        let shifted = a - ComplexMatrix::identity(n, n) * mu;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.expect("requested");
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| svd.singular_values[i].partial_cmp(&svd.singular_values[j]).unwrap());
        let null_dim = order.iter().take_while(|&&i| svd.singular_values[i] <= cluster_tol).count();
        if null_dim < m {
            return Err(Error::NotDiagonalizable(format!(
                "eigenvalue {mu} has algebraic multiplicity {m} but only {null_dim} eigenvectors"
            )));
        }
        for &i in order.iter().take(m) {
            columns.push(v_t.row(i).adjoint());
        }
    }
    let right = ComplexMatrix::from_columns(&columns);
    let sv = right.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition_number = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition_number > cond_max {
        return Err(Error::NotDiagonalizable(format!(
            "eigenvector matrix condition number {condition_number:e} exceeds {cond_max:e}"
        )));
    }
    let left = right
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotDiagonalizable("eigenvector matrix is singular".into()))?;
    let diag = &left * a * &right;
    let eigenvalues = (0..n).map(|i| diag[(i, i)]).collect();
    Ok(SpectralDecomposition { dim, eigenvalues, right, left, condition_number })
}

/// Decomposes a square transfer matrix. For trace-preserving maps the
/// eigenvalue-1 pair is scaled so that `G_0` is the identity operator.
pub fn spectral_decompose_transfer(t: &TransferMatrix, cond_max: f64) -> Result<SpectralDecomposition> {
    if !t.is_square() {
        return Err(Error::DimensionMismatch("spectral decomposition needs a square map".into()));
    }
    let mut s = spectral_decompose(&to_complex(t.matrix()), t.dim(), cond_max)?;
    let sqrt_d = (t.dim() as f64).sqrt();
    let n = s.len();
    for alpha in 0..n {
        if (s.eigenvalues[alpha] - c64(1.0, 0.0)).norm() > 1e-9 {
            continue;
        }
        let l0 = s.left[(alpha, 0)];
        let rest: f64 = (1..n).map(|j| s.left[(alpha, j)].norm()).fold(0.0, f64::max);
        if l0.norm() > 0.0 && rest <= 1e-9 * l0.norm() {
            let c = l0 / c64(sqrt_d, 0.0);
            for j in 0..n {
                s.left[(alpha, j)] /= c;
                s.right[(j, alpha)] *= c;
            }
            break;
        }
    }
    Ok(s)
}

/// `sum over nonzero lambda_a of lambda_a^-1 P_a`.
pub fn spectral_ginverse(s: &SpectralDecomposition, zero_tol: f64) -> ComplexMatrix {
    let n = s.len();
    let max = s.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut g = ComplexMatrix::zeros(n, n);
    for (alpha, lambda) in s.eigenvalues.iter().enumerate() {
        if lambda.norm() > zero_tol * max {
            g += s.projector(alpha) / *lambda;
        }
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JordanCheck {
    pub k: usize,
    /// Largest entry of `|J J^T J - J|`.
    pub forward_residual: i64,
    /// Largest entry of `|J^T J J^T - J^T|`.
    pub reflexive_residual: i64,
    pub holds: bool,
}

fn int_mul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|l| a[i][l] * b[l][j]).sum()).collect())
        .collect()
}

fn int_residual(a: &[Vec<i64>], b: &[Vec<i64>]) -> i64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .max()
        .unwrap_or(0)
}

/// Verifies in exact integer arithmetic that `J_k(0)^T` is a reflexive
/// generalized inverse of the nilpotent Jordan block `J_k(0)`.
pub fn jordan_block_check(k: usize) -> Result<JordanCheck> {
    if !(1..=16).contains(&k) {
        return Err(Error::InvalidDimension(format!("Jordan block size must be in 1..=16, got {k}")));
    }
    let j: Vec<Vec<i64>> = (0..k).map(|r| (0..k).map(|c| i64::from(c == r + 1)).collect()).collect();
    let jt: Vec<Vec<i64>> = (0..k).map(|r| (0..k).map(|c| j[c][r]).collect()).collect();
    let forward_residual = int_residual(&int_mul(&int_mul(&j, &jt), &j), &j);
    let reflexive_residual = int_residual(&int_mul(&int_mul(&jt, &j), &jt), &jt);
    Ok(JordanCheck {
        k,
        forward_residual,
        reflexive_residual,
        holds: forward_residual == 0 && reflexive_residual == 0,
    })
}
