//! Representations of linear maps on operator spaces: transfer (Bloch)
//! matrices, superoperators acting on vectorized operators, Choi matrices and
//! Kraus sets, with conversions between them.

use nalgebra::DVector;

use crate::basis::HermitianBasis;
use crate::error::{Error, Result};
use crate::linalg::{
    eig_herm, real_part, to_complex, unvec_row_major, vec_row_major, ComplexMatrix, RealMatrix,
    C64,
};
use crate::tol::Tolerances;

/// Real matrix `T[a, b] = Tr(tau_a Phi(tau_b))` of a Hermiticity-preserving
/// map `Phi: L(C^dim_in) -> L(C^dim_out)` in the orthonormal Hermitian bases.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    dim_in: usize,
    dim_out: usize,
    matrix: RealMatrix,
}

impl TransferMatrix {
    pub fn new(dim: usize, matrix: RealMatrix) -> Result<Self> {
        Self::rectangular(dim, dim, matrix)
    }

    pub fn rectangular(dim_in: usize, dim_out: usize, matrix: RealMatrix) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 {
            return Err(Error::InvalidDimension("zero Hilbert-space dimension".into()));
        }
        let expected = (dim_out * dim_out, dim_in * dim_in);
        if matrix.shape() != expected {
            return Err(Error::DimensionMismatch(format!(
                "transfer matrix for {dim_in} -> {dim_out} must be {}x{}, got {}x{}",
                expected.0,
                expected.1,
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            dim_in,
            dim_out,
            matrix,
        })
    }

    pub fn from_rows(dim: usize, rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        let data: Vec<f64> = rows.iter().flat_map(|r| r.iter().cloned()).collect();
        Self::new(dim, RealMatrix::from_row_slice(n, m, &data))
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim_in: dim,
            dim_out: dim,
            matrix: RealMatrix::identity(dim * dim, dim * dim),
        }
    }

    /// Builds the transfer matrix of `apply`, rejecting maps whose
    /// coefficients carry an imaginary part above `tol`.
    pub fn from_action<F>(dim_in: usize, dim_out: usize, apply: F, tol: f64) -> Result<Self>
    where
        F: Fn(&ComplexMatrix) -> ComplexMatrix,
    {
        let bin = HermitianBasis::any(dim_in);
        let bout = HermitianBasis::any(dim_out);
        let n_in = dim_in * dim_in;
        let n_out = dim_out * dim_out;
        let mut t = ComplexMatrix::zeros(n_out, n_in);
        for (b, tau) in bin.elements().iter().enumerate().take(n_in) {
            let image = apply(tau);
            if image.shape() != (dim_out, dim_out) {
                return Err(Error::DimensionMismatch(format!(
                    "map output has shape {:?}, expected {dim_out}x{dim_out}",
                    image.shape()
                )));
            }
            let coords = bout.coordinates(&image);
            t.column_mut(b).copy_from(&coords.rows(0, n_out));
        }
        let matrix = real_part(&t, tol)?;
        Self::rectangular(dim_in, dim_out, matrix)
    }

    /// Rebuilds a square transfer matrix from the affine pair `(x, Delta)`:
    /// first row `(1, 0, ..., 0)`, first column `(1, x)`, lower block `Delta`.
    pub fn from_affine(x: &DVector<f64>, delta: &RealMatrix) -> Result<Self> {
        let m = delta.nrows();
        if delta.ncols() != m || x.len() != m {
            return Err(Error::DimensionMismatch("affine block sizes disagree".into()));
        }
        let n = m + 1;
        let dim = (n as f64).sqrt().round() as usize;
        let mut t = RealMatrix::zeros(n, n);
        t[(0, 0)] = 1.0;
        t.view_mut((1, 0), (m, 1)).copy_from(x);
        t.view_mut((1, 1), (m, m)).copy_from(delta);
        Self::new(dim, t)
    }

    pub fn dim(&self) -> usize {
        self.dim_in
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn is_square(&self) -> bool {
        self.dim_in == self.dim_out
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> RealMatrix {
        self.matrix
    }

    /// `self` after `other`, i.e. the matrix product `self * other`.
    pub fn compose(&self, other: &TransferMatrix) -> Result<TransferMatrix> {
        if other.dim_out != self.dim_in {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose {} -> {} after {} -> {}",
                self.dim_in, self.dim_out, other.dim_in, other.dim_out
            )));
        }
        Self::rectangular(other.dim_in, self.dim_out, &self.matrix * &other.matrix)
    }

    /// Largest deviation of the first row from the trace-preserving pattern
    /// `(sqrt(d_in / d_out), 0, ..., 0)`.
    pub fn trace_preservation_residual(&self) -> f64 {
        let lead = (self.dim_in as f64 / self.dim_out as f64).sqrt();
        self.matrix
            .row(0)
            .iter()
            .enumerate()
            .map(|(b, &v)| if b == 0 { (v - lead).abs() } else { v.abs() })
            .fold(0.0, f64::max)
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.trace_preservation_residual() <= tol
    }

    /// The shift `x` (first column below the corner) and the lower-right block `Delta`.
    pub fn affine_parts(&self) -> (DVector<f64>, RealMatrix) {
        let (n, m) = self.matrix.shape();
        let x = self.matrix.view((1, 0), (n - 1, 1)).column(0).into_owned();
        let delta = self.matrix.view((1, 1), (n - 1, m - 1)).into_owned();
        (x, delta)
    }

    pub fn superoperator(&self) -> Superoperator {
        let bin = HermitianBasis::any(self.dim_in);
        let bout = HermitianBasis::any(self.dim_out);
        let n_in = self.dim_in * self.dim_in;
        let n_out = self.dim_out * self.dim_out;
        let fin = bin.frame().columns(0, n_in).into_owned();
        let fout = bout.frame().columns(0, n_out).into_owned();
        let matrix = &fout * to_complex(&self.matrix) * fin.adjoint();
        Superoperator {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            matrix,
        }
    }

    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.superoperator().apply(x)
    }

    pub fn choi(&self) -> ChoiMatrix {
        self.superoperator().choi()
    }
}

/// Matrix of a map acting on row-major vectorized operators.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    pub dim_in: usize,
    pub dim_out: usize,
    pub matrix: ComplexMatrix,
}

impl Superoperator {
    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let v = &self.matrix * vec_row_major(x);
        unvec_row_major(&v, self.dim_out, self.dim_out)
    }

    /// `(id_k (x) Phi)(X)` for `X` acting on `C^k (x) C^dim_in`.
    pub fn apply_with_ancilla(&self, ancilla: usize, x: &ComplexMatrix) -> ComplexMatrix {
        let (di, dout) = (self.dim_in, self.dim_out);
        assert_eq!(x.shape(), (ancilla * di, ancilla * di), "operator shape");
        let mut out = ComplexMatrix::zeros(ancilla * dout, ancilla * dout);
        for a in 0..ancilla {
            for b in 0..ancilla {
                let block = x.view((a * di, b * di), (di, di)).into_owned();
                let image = self.apply(&block);
                out.view_mut((a * dout, b * dout), (dout, dout))
                    .copy_from(&image);
            }
        }
        out
    }

    pub fn to_transfer(&self, tol: f64) -> Result<TransferMatrix> {
        let bin = HermitianBasis::any(self.dim_in);
        let bout = HermitianBasis::any(self.dim_out);
        let n_in = self.dim_in * self.dim_in;
        let n_out = self.dim_out * self.dim_out;
        let fin = bin.frame().columns(0, n_in).into_owned();
        let fout = bout.frame().columns(0, n_out).into_owned();
        let t = fout.adjoint() * &self.matrix * fin;
        TransferMatrix::rectangular(self.dim_in, self.dim_out, real_part(&t, tol)?)
    }

    /// `C = sum_ij E_ij (x) Phi(E_ij)`.
    pub fn choi(&self) -> ChoiMatrix {
        let (di, dout) = (self.dim_in, self.dim_out);
        let mut c = ComplexMatrix::zeros(di * dout, di * dout);
        for i in 0..di {
            for j in 0..di {
                for k in 0..dout {
                    for l in 0..dout {
                        c[(i * dout + k, j * dout + l)] = self.matrix[(k * dout + l, i * di + j)];
                    }
                }
            }
        }
        ChoiMatrix {
            dim_in: di,
            dim_out: dout,
            matrix: c,
        }
    }
}

/// Choi matrix `C = sum_ij E_ij (x) Phi(E_ij)`, normalized so `Tr C = d_in`
/// for trace-preserving maps.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    pub dim_in: usize,
    pub dim_out: usize,
    pub matrix: ComplexMatrix,
}

impl ChoiMatrix {
    pub fn new(dim_in: usize, dim_out: usize, matrix: ComplexMatrix) -> Result<Self> {
        let n = dim_in * dim_out;
        if matrix.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix must be {n}x{n}, got {:?}",
                matrix.shape()
            )));
        }
        Ok(Self {
            dim_in,
            dim_out,
            matrix,
        })
    }

    pub fn superoperator(&self) -> Superoperator {
        let (di, dout) = (self.dim_in, self.dim_out);
        let mut s = ComplexMatrix::zeros(dout * dout, di * di);
        for i in 0..di {
            for j in 0..di {
                for k in 0..dout {
                    for l in 0..dout {
                        s[(k * dout + l, i * di + j)] = self.matrix[(i * dout + k, j * dout + l)];
                    }
                }
            }
        }
        Superoperator {
            dim_in: di,
            dim_out: dout,
            matrix: s,
        }
    }

    pub fn to_transfer(&self, tol: f64) -> Result<TransferMatrix> {
        self.superoperator().to_transfer(tol)
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Ascending spectrum of `C`.
    pub fn eigenvalues(&self) -> Vec<f64> {
        eig_herm(&self.matrix, f64::INFINITY)
            .map(|(v, _)| v)
            .expect("square matrix")
    }

    /// Ascending spectrum of `d_in * C`, the normalization in which a
    /// trace-preserving map has `Tr = d_in^2`. For qubits the rank-two
    /// projector family then reads `1 +- sqrt(1 + ...)`.
    pub fn unscaled_eigenvalues(&self) -> Vec<f64> {
        let s = self.dim_in as f64;
        self.eigenvalues().into_iter().map(|x| s * x).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().cloned().unwrap_or(0.0)
    }

    pub fn is_completely_positive(&self, tol_psd: f64) -> bool {
        self.min_eigenvalue() >= -tol_psd
    }

    /// Kraus operators from the eigenpairs of a positive semidefinite Choi
    /// matrix; eigenvalues at or below `tol_rank * lambda_max` are dropped.
    pub fn to_kraus(&self, tol: &Tolerances) -> Result<KrausSet> {
        let (values, vectors) = eig_herm(&self.matrix, tol.tol_herm.max(1e-12) * 10.0)?;
        let min = values.first().cloned().unwrap_or(0.0);
        if min < -tol.tol_psd {
            return Err(Error::NotCompletelyPositive { min_eigenvalue: min });
        }
        let max = values.last().cloned().unwrap_or(0.0);
        let (di, dout) = (self.dim_in, self.dim_out);
        let mut operators = Vec::new();
        for (idx, &lambda) in values.iter().enumerate().rev() {
            if lambda <= tol.tol_rank * max || lambda <= 0.0 {
                continue;
            }
            let v = vectors.column(idx);
            let scale = lambda.sqrt();
            let k = ComplexMatrix::from_fn(dout, di, |row, col| v[col * dout + row] * scale);
            operators.push(k);
        }
        Ok(KrausSet { operators })
    }
}

/// Kraus representation `Phi(X) = sum_i K_i X K_i^dagger`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    pub operators: Vec<ComplexMatrix>,
}

impl KrausSet {
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let shape = operators
            .first()
            .map(|k| k.shape())
            .ok_or_else(|| Error::DimensionMismatch("empty Kraus set".into()))?;
        if operators.iter().any(|k| k.shape() != shape) {
            return Err(Error::DimensionMismatch("Kraus operators differ in shape".into()));
        }
        Ok(Self { operators })
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let (rows, _) = self.operators[0].shape();
        self.operators
            .iter()
            .fold(ComplexMatrix::zeros(rows, rows), |acc, k| {
                acc + k * x * k.adjoint()
            })
    }

    /// `|| sum_i K_i^dagger K_i - 1 ||_F`.
    pub fn completeness_residual(&self) -> f64 {
        let (_, cols) = self.operators[0].shape();
        let sum = self
            .operators
            .iter()
            .fold(ComplexMatrix::zeros(cols, cols), |acc, k| acc + k.adjoint() * k);
        crate::linalg::frobenius(&(sum - ComplexMatrix::identity(cols, cols)))
    }

    pub fn to_transfer(&self, tol: f64) -> Result<TransferMatrix> {
        let (rows, cols) = self.operators[0].shape();
        TransferMatrix::from_action(cols, rows, |x| self.apply(x), tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, frobenius, pauli};

    fn psi() -> TransferMatrix {
        TransferMatrix::from_rows(
            2,
            &[
                &[1.0, 0.0, 0.0, 0.0],
                &[0.0, 0.0, 0.0, 1.0],
                &[0.0, 0.0, 0.0, 0.0],
                &[0.0, 0.0, 0.0, 0.0],
            ],
        )
        .unwrap()
    }

    // The listed operators act as X -> sum K^dagger X K; their adjoints realize psi.
    fn psi_kraus() -> KrausSet {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let k1 = ComplexMatrix::from_row_slice(
            2,
            2,
            &[c64(0.0, 0.0), c64(0.0, 0.0), c64(-r, 0.0), c64(r, 0.0)],
        )
        .adjoint();
        let k2 = ComplexMatrix::from_row_slice(
            2,
            2,
            &[c64(r, 0.0), c64(r, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)],
        )
        .adjoint();
        KrausSet::new(vec![k1, k2]).unwrap()
    }

    #[test]
    fn identity_action_gives_identity_transfer() {
        let t = TransferMatrix::from_action(2, 2, |x| x.clone(), 1e-12).unwrap();
        assert!(frobenius(&(t.matrix() - TransferMatrix::identity(2).matrix())) < 1e-14);
    }

    #[test]
    fn listed_kraus_operators_realize_psi() {
        let k = psi_kraus();
        assert!(k.completeness_residual() < 1e-14);
        let t = k.to_transfer(1e-12).unwrap();
        assert!(frobenius(&(t.matrix() - psi().matrix())) < 1e-14);
    }

    #[test]
    fn attractor_at_saturation_has_single_column() {
        let omega = crate::basis::bloch_state([0.1, -0.2, 0.3]);
        let t = TransferMatrix::from_action(2, 2, |x| omega.clone() * x.trace(), 1e-12).unwrap();
        let expected = [1.0, 0.1, -0.2, 0.3];
        for (a, e) in expected.iter().enumerate() {
            assert!((t.matrix()[(a, 0)] - e).abs() < 1e-15);
            for b in 1..4 {
                assert_eq!(t.matrix()[(a, b)], 0.0);
            }
        }
    }

    #[test]
    fn non_hermiticity_preserving_map_is_rejected() {
        let err = TransferMatrix::from_action(2, 2, |x| x * c64(0.0, 1.0), 1e-12).unwrap_err();
        assert!(matches!(err, Error::NotHermiticityPreserving { .. }));
    }

    #[test]
    fn choi_of_identity_is_rank_one_with_eigenvalue_two() {
        let c = TransferMatrix::identity(2).choi();
        let ev = c.eigenvalues();
        assert!((ev[3] - 2.0).abs() < 1e-14);
        assert!(ev[..3].iter().all(|x| x.abs() < 1e-14));
        assert!((c.trace() - c64(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn choi_of_psi_yields_two_kraus_operators_with_same_action() {
        let c = psi().choi();
        let tol = Tolerances::default();
        let kraus = c.to_kraus(&tol).unwrap();
        assert_eq!(kraus.len(), 2);
        let reference = psi_kraus();
        for a in 0..4 {
            let x = pauli(a);
            assert!(frobenius(&(kraus.apply(&x) - reference.apply(&x))) < 1e-12);
        }
        // Same Kraus span: every listed operator is a combination of the computed ones.
        let span = ComplexMatrix::from_columns(
            &kraus.operators.iter().map(vec_row_major).collect::<Vec<_>>(),
        );
        for k in &reference.operators {
            let mut stacked = span.clone().insert_column(2, c64(0.0, 0.0));
            stacked.column_mut(2).copy_from(&vec_row_major(k));
            assert_eq!(crate::linalg::rank(&stacked, 1e-10), 2);
        }
    }

    #[test]
    fn identity_choi_gives_identity_kraus_up_to_phase() {
        let kraus = TransferMatrix::identity(2)
            .choi()
            .to_kraus(&Tolerances::default())
            .unwrap();
        assert_eq!(kraus.len(), 1);
        let k = &kraus.operators[0];
        let phase = k[(0, 0)];
        assert!((phase.norm() - 1.0).abs() < 1e-14);
        assert!(frobenius(&(k - ComplexMatrix::identity(2, 2) * phase)) < 1e-14);
    }

    #[test]
    fn pinching_projector_kraus_matches_sigma_x_average() {
        let t = TransferMatrix::from_rows(
            2,
            &[
                &[1.0, 0.0, 0.0, 0.0],
                &[0.0, 1.0, 0.0, 0.0],
                &[0.0, 0.0, 0.0, 0.0],
                &[0.0, 0.0, 0.0, 0.0],
            ],
        )
        .unwrap();
        let kraus = t.choi().to_kraus(&Tolerances::default()).unwrap();
        assert_eq!(kraus.len(), 2);
        let x = ComplexMatrix::from_fn(2, 2, |i, j| c64(1.0 + i as f64, j as f64 - 0.3));
        let expected = (&x + pauli(1) * &x * pauli(1)).scale(0.5);
        assert!(frobenius(&(kraus.apply(&x) - expected)) < 1e-14);
    }

    #[test]
    fn non_cp_choi_refuses_kraus() {
        let transpose = TransferMatrix::from_action(2, 2, |x| x.transpose(), 1e-12).unwrap();
        let err = transpose.choi().to_kraus(&Tolerances::default()).unwrap_err();
        assert!(matches!(err, Error::NotCompletelyPositive { .. }));
    }

    #[test]
    fn ancilla_application_acts_blockwise() {
        let s = psi().superoperator();
        let x = ComplexMatrix::from_fn(4, 4, |i, j| c64((i + j) as f64, i as f64 - j as f64));
        let out = s.apply_with_ancilla(2, &x);
        let block = x.view((0, 2), (2, 2)).into_owned();
        assert!(frobenius(&(out.view((0, 2), (2, 2)).into_owned() - s.apply(&block))) < 1e-14);
    }
}
