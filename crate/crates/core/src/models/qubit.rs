//! Qubit special form and the projector classification.

use nalgebra::{Matrix3, Vector3, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::serde_transfer;
use crate::linalg::{ComplexMatrix, RealMatrix};
use crate::propagator::AffineFamily;
use crate::tol::Tolerances;
use crate::transfer::TransferMatrix;

/// `T = diag(1, R1) [[1, 0], [x, diag(lambda)]] diag(1, R2^T)` with proper
/// rotations `R1`, `R2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecialForm {
    pub r1: Matrix3<f64>,
    pub lambda: [f64; 3],
    pub r2: Matrix3<f64>,
    /// Shift of the canonical map, `R1^T x`.
    pub x: [f64; 3],
}

impl SpecialForm {
    pub fn canonical(&self) -> TransferMatrix {
        let mut m = RealMatrix::zeros(4, 4);
        m[(0, 0)] = 1.0;
        for i in 0..3 {
            m[(i + 1, 0)] = self.x[i];
            m[(i + 1, i + 1)] = self.lambda[i];
        }
        TransferMatrix::new(2, m).expect("4x4")
    }

    pub fn recompose(&self) -> TransferMatrix {
        let x = self.r1 * Vector3::from(self.x);
        let delta = self.r1 * Matrix3::from_diagonal(&Vector3::from(self.lambda)) * self.r2.transpose();
        let mut m = RealMatrix::zeros(4, 4);
        m[(0, 0)] = 1.0;
        for i in 0..3 {
            m[(i + 1, 0)] = x[i];
            for j in 0..3 {
                m[(i + 1, j + 1)] = delta[(i, j)];
            }
        }
        TransferMatrix::new(2, m).expect("4x4")
    }
}

pub fn special_form_decompose(t: &TransferMatrix) -> Result<SpecialForm> {
    if t.dim_in() != 2 || t.dim_out() != 2 {
        return Err(Error::InvalidDimension("special form needs a qubit map".into()));
    }
    let m = t.matrix();
    let delta = Matrix3::from_fn(|i, j| m[(i + 1, j + 1)]);
    let x = Vector3::new(m[(1, 0)], m[(2, 0)], m[(3, 0)]);
    let off = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).filter(|(i, j)| i != j);
    if off.map(|(i, j)| delta[(i, j)].abs()).fold(0.0, f64::max) == 0.0 {
        return Ok(SpecialForm {
            r1: Matrix3::identity(),
            lambda: [delta[(0, 0)], delta[(1, 1)], delta[(2, 2)]],
            r2: Matrix3::identity(),
            x: [x[0], x[1], x[2]],
        });
    }
    let svd = SVD::new(delta, true, true);
    let mut u = svd.u.expect("requested");
    let mut v = svd.v_t.expect("requested").transpose();
    let mut lambda = [svd.singular_values[0], svd.singular_values[1], svd.singular_values[2]];
    if u.determinant() < 0.0 {
        u.column_mut(2).neg_mut();
        lambda[2] = -lambda[2];
    }
    if v.determinant() < 0.0 {
        v.column_mut(2).neg_mut();
        lambda[2] = -lambda[2];
    }
    let xc = u.transpose() * x;
    Ok(SpecialForm { r1: u, lambda, r2: v, x: [xc[0], xc[1], xc[2]] })
}

/// `T T^-` of a qubit projector of the given rank, parameterized by its free
/// coefficients: `(beta_1, beta_2, x_3)` for rank 3, `(gamma_2, gamma_3, x_2,
/// x_3)` for rank 2 and the Bloch vector `x` for rank 1.
pub fn projector_matrix(rank: usize, params: &[f64]) -> Result<TransferMatrix> {
    let expected = match rank {
        1 | 3 => 3,
        2 => 4,
        r => return Err(Error::InvalidRank(r)),
    };
    if params.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "rank-{rank} projector takes {expected} parameters, got {}",
            params.len()
        )));
    }
    let mut m = RealMatrix::zeros(4, 4);
    m[(0, 0)] = 1.0;
    match rank {
        3 => {
            let (b1, b2, x3) = (params[0], params[1], params[2]);
            m[(1, 0)] = -b1 * x3;
            m[(2, 0)] = -b2 * x3;
            m[(3, 0)] = x3;
            m[(1, 1)] = 1.0;
            m[(2, 2)] = 1.0;
            m[(1, 3)] = b1;
            m[(2, 3)] = b2;
        }
        2 => {
            let (g2, g3, x2, x3) = (params[0], params[1], params[2], params[3]);
            m[(1, 0)] = -(g2 * x2 + g3 * x3);
            m[(2, 0)] = x2;
            m[(3, 0)] = x3;
            m[(1, 1)] = 1.0;
            m[(1, 2)] = g2;
            m[(1, 3)] = g3;
        }
        _ => {
            for i in 0..3 {
                m[(i + 1, 0)] = params[i];
            }
        }
    }
    TransferMatrix::new(2, m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectorClassification {
    pub rank: usize,
    pub params: Vec<f64>,
    #[serde(with = "serde_transfer")]
    pub matrix: TransferMatrix,
    pub idempotency_residual: f64,
    /// Ascending spectrum of `d * C`.
    pub unscaled_choi_eigenvalues: Vec<f64>,
    pub completely_positive: bool,
    #[serde(skip)]
    pub kraus: Option<Vec<ComplexMatrix>>,
}

pub fn classify_qubit_projector(rank: usize, params: &[f64], tol: &Tolerances) -> Result<ProjectorClassification> {
    let matrix = projector_matrix(rank, params)?;
    let p = matrix.matrix();
    let idempotency_residual = crate::linalg::frobenius(&(p * p - p));
    let choi = matrix.choi();
    let unscaled = choi.unscaled_eigenvalues();
    let completely_positive = choi.is_completely_positive(tol.tol_psd);
    let kraus = if completely_positive { Some(choi.to_kraus(tol)?.operators) } else { None };
    Ok(ProjectorClassification {
        rank,
        params: params.to_vec(),
        matrix,
        idempotency_residual,
        unscaled_choi_eigenvalues: unscaled,
        completely_positive,
        kraus,
    })
}

fn unit(r: usize, c: usize) -> RealMatrix {
    let mut m = RealMatrix::zeros(4, 4);
    m[(r, c)] = 1.0;
    m
}

/// Affine family containing all projectors of the given rank. The bilinear
/// shift entries of the rank-3 and rank-2 displays are replaced by free
/// parameters, so the family is a relaxation: a verdict of no CPTP member or of
/// a unique member at the origin carries over to the projectors.
pub fn projector_family(rank: usize) -> Result<AffineFamily> {
    let base = projector_matrix(rank, &vec![0.0; if rank == 2 { 4 } else { 3 }])?.into_matrix();
    let (entries, labels): (Vec<(usize, usize)>, Vec<&str>) = match rank {
        3 => (
            vec![(1, 3), (2, 3), (3, 0), (1, 0), (2, 0)],
            vec!["beta_1", "beta_2", "x_3", "u_1", "u_2"],
        ),
        2 => (
            vec![(1, 2), (1, 3), (2, 0), (3, 0), (1, 0)],
            vec!["gamma_2", "gamma_3", "x_2", "x_3", "u"],
        ),
        1 => (vec![(1, 0), (2, 0), (3, 0)], vec!["x_1", "x_2", "x_3"]),
        r => return Err(Error::InvalidRank(r)),
    };
    AffineFamily::new(
        2,
        2,
        base,
        entries.iter().map(|&(r, c)| unit(r, c)).collect(),
        labels.into_iter().map(String::from).collect(),
    )
}
