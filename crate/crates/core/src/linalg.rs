//! Dense linear algebra helpers shared by every other module.
//!
//! Most routines are generic over [`Scalar`], which covers both `f64` (transfer
//! matrices) and `Complex64` (operators, superoperators, Choi matrices), so
//! that real inputs stay real through factorizations.

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type RealMatrix = DMatrix<f64>;

/// Field scalars with an `f64` modulus.
pub trait Scalar: ComplexField<RealField = f64> + Copy {}
impl<T: ComplexField<RealField = f64> + Copy> Scalar for T {}

pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Pauli matrix `sigma_k`, with `sigma_0` the identity.
pub fn pauli(k: usize) -> ComplexMatrix {
    let (o, z, i) = (c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 1.0));
    match k {
        0 => ComplexMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        1 => ComplexMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        2 => ComplexMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        3 => ComplexMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => panic!("pauli index {k} out of range"),
    }
}

/// Matrix unit `|i><j|` of size `d`.
pub fn matrix_unit(d: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    m[(i, j)] = c64(1.0, 0.0);
    m
}

pub fn to_complex(m: &RealMatrix) -> ComplexMatrix {
    m.map(|x| c64(x, 0.0))
}

/// Real part of `m`, failing if any imaginary component exceeds `tol`.
pub fn real_part(m: &ComplexMatrix, tol: f64) -> Result<RealMatrix> {
    let residual = m.iter().fold(0.0_f64, |acc, z| acc.max(z.im.abs()));
    if residual > tol {
        return Err(Error::NotHermiticityPreserving { residual });
    }
    Ok(m.map(|z| z.re))
}

pub fn frobenius<T: Scalar>(m: &DMatrix<T>) -> f64 {
    m.iter().map(|z| z.modulus_squared()).sum::<f64>().sqrt()
}

/// `max |M - M^dagger|` entrywise.
pub fn hermiticity_residual(m: &ComplexMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().sum()
}

/// Full singular value decomposition `M = U Sigma V^dagger` with square
/// unitary `U`, `V` and singular values in descending order.
#[derive(Debug, Clone)]
pub struct Svd<T: Scalar> {
    pub u: DMatrix<T>,
    pub singular_values: Vec<f64>,
    pub v: DMatrix<T>,
    pub rank: usize,
}

impl<T: Scalar> Svd<T> {
    pub fn rows(&self) -> usize {
        self.u.nrows()
    }

    pub fn cols(&self) -> usize {
        self.v.nrows()
    }

    /// Rectangular `Sigma` (rows x cols) holding all singular values.
    pub fn sigma(&self) -> DMatrix<T> {
        let mut s = DMatrix::zeros(self.rows(), self.cols());
        for (i, &x) in self.singular_values.iter().enumerate() {
            s[(i, i)] = T::from_real(x);
        }
        s
    }

    pub fn reconstruct(&self) -> DMatrix<T> {
        &self.u * self.sigma() * self.v.adjoint()
    }

    /// Positive singular values retained at the numerical rank.
    pub fn retained(&self) -> &[f64] {
        &self.singular_values[..self.rank]
    }

    /// Orthonormal basis (columns) of the image.
    pub fn image(&self) -> DMatrix<T> {
        self.u.columns(0, self.rank).into_owned()
    }

    /// Orthonormal basis (columns) of the orthogonal complement of the image.
    pub fn cokernel(&self) -> DMatrix<T> {
        self.u.columns(self.rank, self.rows() - self.rank).into_owned()
    }

    /// Orthonormal basis (columns) of the kernel.
    pub fn kernel(&self) -> DMatrix<T> {
        self.v.columns(self.rank, self.cols() - self.rank).into_owned()
    }

    /// Orthonormal basis (columns) of the image of the adjoint.
    pub fn coimage(&self) -> DMatrix<T> {
        self.v.columns(0, self.rank).into_owned()
    }
}

/// Numerical rank cut: `s_i > tol_rank * s_max`.
pub fn rank_from_singular_values(values: &[f64], tol_rank: f64) -> usize {
    let smax = values.iter().cloned().fold(0.0_f64, f64::max);
    if smax <= f64::MIN_POSITIVE {
        return 0;
    }
    values.iter().filter(|&&s| s > tol_rank * smax).count()
}

pub fn svd<T: Scalar>(m: &DMatrix<T>, tol_rank: f64) -> Svd<T> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Svd {
            u: DMatrix::identity(rows, rows),
            singular_values: Vec::new(),
            v: DMatrix::identity(cols, cols),
            rank: 0,
        };
    }
    let (u_thin, values, v_thin) = checked_svd(m);
    let rank = rank_from_singular_values(&values, tol_rank);
    let u = complete_basis(&u_thin.columns(0, rank).into_owned());
    let v = complete_basis(&v_thin.columns(0, rank).into_owned());
    Svd {
        u,
        singular_values: values,
        v,
        rank,
    }
}

type ThinSvd<T> = (DMatrix<T>, Vec<f64>, DMatrix<T>);

fn raw_svd<T: Scalar>(m: &DMatrix<T>) -> ThinSvd<T> {
    let dec = nalgebra::SVD::new(m.clone(), true, true);
    let u = dec.u.expect("left singular vectors requested");
    let v = dec.v_t.expect("right singular vectors requested").adjoint();
    (u, dec.singular_values.iter().cloned().collect(), v)
}

fn svd_error<T: Scalar>(m: &DMatrix<T>, (u, s, v): &ThinSvd<T>) -> f64 {
    let k = s.len();
    let sigma = DMatrix::from_fn(k, k, |i, j| if i == j { T::from_real(s[i]) } else { T::zero() });
    let rec = frobenius(&(u * sigma * v.adjoint() - m));
    let ortho = frobenius(&(u.adjoint() * u - DMatrix::identity(k, k)))
        + frobenius(&(v.adjoint() * v - DMatrix::identity(k, k)));
    rec / frobenius(m).max(f64::MIN_POSITIVE) + ortho
}

/// Fixed unitary used to rotate inputs on which the bidiagonal SVD misconverges.
fn scrambler<T: Scalar>(n: usize, salt: usize) -> DMatrix<T> {
    let g = DMatrix::from_fn(n, n, |i, j| {
        let x = ((i * 7 + j * 13 + salt * 29) as f64 * 0.7548776662).sin();
        T::from_real(x + if i == j { 2.0 } else { 0.0 })
    });
    g.qr().q()
}

/// Thin SVD whose factorization is verified; `nalgebra::SVD` occasionally
/// returns wrong singular vectors for rank-deficient input, so failures are
/// retried on the adjoint and on unitarily rotated copies.
fn checked_svd<T: Scalar>(m: &DMatrix<T>) -> ThinSvd<T> {
    const OK: f64 = 1e-11;
    let first = raw_svd(m);
    let mut best_err = svd_error(m, &first);
    if best_err <= OK {
        return first;
    }
    let mut best = first;
    let (a, b, c) = raw_svd(&m.adjoint());
    let flipped = (c, b, a);
    let e = svd_error(m, &flipped);
    if e <= OK {
        return flipped;
    }
    if e < best_err {
        best_err = e;
        best = flipped;
    }
    let (rows, cols) = m.shape();
    for salt in 0..8 {
        let (p, q) = (scrambler::<T>(rows, salt), scrambler::<T>(cols, salt + 100));
        let (u, s, v) = raw_svd(&(p.adjoint() * m * &q));
        let cand = (p * u, s, q * v);
        let e = svd_error(m, &cand);
        if e <= OK {
            return cand;
        }
        if e < best_err {
            best_err = e;
            best = cand;
        }
    }
    best
}

fn orthogonalize<T: Scalar>(mut v: DVector<T>, basis: &[DVector<T>]) -> DVector<T> {
    for _ in 0..2 {
        for b in basis {
            let p = b.dotc(&v);
            v -= b * p;
        }
    }
    v
}

/// Extends orthonormal columns to a square unitary by greedy Gram-Schmidt
/// over the standard basis.
pub fn complete_basis<T: Scalar>(partial: &DMatrix<T>) -> DMatrix<T> {
    let n = partial.nrows();
    let mut cols: Vec<DVector<T>> = partial.column_iter().map(|c| c.into_owned()).collect();
    while cols.len() < n {
        let mut best: Option<(f64, DVector<T>)> = None;
        for i in 0..n {
            let mut e = DVector::zeros(n);
            e[i] = T::one();
            let r = orthogonalize(e, &cols);
            let norm = r.norm();
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                best = Some((norm, r));
            }
        }
        let (norm, r) = best.expect("n > 0");
        cols.push(r.unscale(norm));
    }
    if cols.is_empty() {
        return DMatrix::zeros(0, 0);
    }
    DMatrix::from_columns(&cols)
}

pub fn rank<T: Scalar>(m: &DMatrix<T>, tol_rank: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let values: Vec<f64> = m.clone().singular_values().iter().cloned().collect();
    rank_from_singular_values(&values, tol_rank)
}

/// True when the column spaces of `a` and `b` coincide at `tol_rank`.
pub fn same_column_space<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>, tol_rank: f64) -> bool {
    if a.nrows() != b.nrows() {
        return false;
    }
    let ra = rank(a, tol_rank);
    let rb = rank(b, tol_rank);
    if ra != rb {
        return false;
    }
    let mut stacked = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    stacked.columns_mut(0, a.ncols()).copy_from(a);
    stacked.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    rank(&stacked, tol_rank) == ra
}

/// Spectrum of a Hermitian matrix, eigenvalues ascending with matching
/// eigenvector columns.
pub fn eig_herm(m: &ComplexMatrix, tol_herm: f64) -> Result<(Vec<f64>, ComplexMatrix)> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "eigensolver needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.iter().fold(1.0_f64, |acc, z| acc.max(z.norm()));
    let residual = hermiticity_residual(m);
    if residual > tol_herm * scale {
        return Err(Error::HermiticityViolation { residual });
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let dec = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| dec.eigenvalues[a].total_cmp(&dec.eigenvalues[b]));
    let values = order.iter().map(|&i| dec.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_columns(
        &order
            .iter()
            .map(|&i| dec.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    Ok((values, vectors))
}

/// Minimum eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &ComplexMatrix, tol_herm: f64) -> Result<f64> {
    Ok(eig_herm(m, tol_herm)?.0.first().cloned().unwrap_or(0.0))
}

/// Row-major vectorization: `v[i * cols + j] = M[i, j]`.
pub fn vec_row_major(m: &ComplexMatrix) -> DVector<C64> {
    DVector::from_iterator(m.len(), m.transpose().iter().cloned())
}

pub fn unvec_row_major(v: &DVector<C64>, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_row_slice(rows, cols, v.as_slice())
}
