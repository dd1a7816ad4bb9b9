//! Generalized inverses `G` of a linear map `A` (`A G A = A`).
//!
//! Every generalized inverse of `A = U Sigma V^dagger` has the form
//! `G = V [[D^-1, X], [Y, Z]] U^dagger` for free blocks `X`, `Y`, `Z`.
//! Conditions on the blocks select the classical sub-families:
//!
//! | property                    | block condition |
//! |-----------------------------|-----------------|
//! | reflexive, `GAG = G`        | `Z = Y D X`     |
//! | `(GA)^dagger = GA`          | `Y = 0`         |
//! | `(AG)^dagger = AG`          | `X = 0`         |
//! | Moore-Penrose               | all blocks zero |

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius, svd, Scalar, Svd};
use crate::tol::Tolerances;

/// SVD factors `A = U Sigma V^dagger` at the numerical rank.
pub type SvdFactors<T> = Svd<T>;

/// Smallest singular value (relative to the largest) accepted for a stacked
/// subspace basis before the split is declared degenerate.
pub const TRANSVERSAL_MIN_SINGULAR: f64 = 1e-8;

/// Free blocks of the generalized-inverse family.
#[derive(Debug, Clone, PartialEq)]
pub struct GInverseParams<T: Scalar> {
    /// `r x (d2 - r)`
    pub x: DMatrix<T>,
    /// `(d1 - r) x r`
    pub y: DMatrix<T>,
    /// `(d1 - r) x (d2 - r)`
    pub z: DMatrix<T>,
}

impl<T: Scalar> GInverseParams<T> {
    pub fn zeros(svd: &SvdFactors<T>) -> Self {
        let (d2, d1, r) = (svd.rows(), svd.cols(), svd.rank);
        Self {
            x: DMatrix::zeros(r, d2 - r),
            y: DMatrix::zeros(d1 - r, r),
            z: DMatrix::zeros(d1 - r, d2 - r),
        }
    }

    /// Blocks with `Z = Y D X`, which always yields a reflexive inverse.
    pub fn reflexive(svd: &SvdFactors<T>, x: DMatrix<T>, y: DMatrix<T>) -> Self {
        let d = diag_retained(svd);
        let z = &y * d * &x;
        Self { x, y, z }
    }

    fn check(&self, svd: &SvdFactors<T>) -> Result<()> {
        let (d2, d1, r) = (svd.rows(), svd.cols(), svd.rank);
        let ok = self.x.shape() == (r, d2 - r)
            && self.y.shape() == (d1 - r, r)
            && self.z.shape() == (d1 - r, d2 - r);
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "blocks X {:?}, Y {:?}, Z {:?} do not fit rank {r} of a {d2}x{d1} map",
                self.x.shape(),
                self.y.shape(),
                self.z.shape()
            )))
        }
    }
}

fn diag_retained<T: Scalar>(svd: &SvdFactors<T>) -> DMatrix<T> {
    let r = svd.rank;
    DMatrix::from_fn(r, r, |i, j| {
        if i == j {
            T::from_real(svd.singular_values[i])
        } else {
            T::zero()
        }
    })
}

/// `G = V Sigma^- U^dagger` with `Sigma^- = [[D^-1, X], [Y, Z]]`.
pub fn build_ginverse<T: Scalar>(svd: &SvdFactors<T>, params: &GInverseParams<T>) -> Result<DMatrix<T>> {
    params.check(svd)?;
    let (d2, d1, r) = (svd.rows(), svd.cols(), svd.rank);
    let mut sigma = DMatrix::zeros(d1, d2);
    for i in 0..r {
        sigma[(i, i)] = T::from_real(1.0 / svd.singular_values[i]);
    }
    sigma.view_mut((0, r), (r, d2 - r)).copy_from(&params.x);
    sigma.view_mut((r, 0), (d1 - r, r)).copy_from(&params.y);
    sigma.view_mut((r, r), (d1 - r, d2 - r)).copy_from(&params.z);
    Ok(&svd.v * sigma * svd.u.adjoint())
}

pub fn moore_penrose<T: Scalar>(a: &DMatrix<T>, tol_rank: f64) -> DMatrix<T> {
    let s = svd(a, tol_rank);
    build_ginverse(&s, &GInverseParams::zeros(&s)).expect("zero blocks always fit")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GInverseClassification {
    pub is_ginverse: bool,
    pub reflexive: bool,
    /// `(GA)^dagger = GA`
    pub left_symmetric: bool,
    /// `(AG)^dagger = AG`
    pub right_symmetric: bool,
    pub moore_penrose: bool,
    /// Residuals of `AGA = A`, `GAG = G`, `(GA)^dagger = GA`, `(AG)^dagger = AG`.
    pub residuals: [f64; 4],
}

fn scaled(residual: f64, reference: f64) -> f64 {
    residual / reference.max(1.0)
}

fn check_shapes<T: Scalar>(a: &DMatrix<T>, g: &DMatrix<T>) -> Result<()> {
    if g.shape() != (a.ncols(), a.nrows()) {
        return Err(Error::DimensionMismatch(format!(
            "candidate inverse is {:?}, expected {}x{}",
            g.shape(),
            a.ncols(),
            a.nrows()
        )));
    }
    Ok(())
}

/// `|| A G A - A ||_F`.
pub fn ginverse_residual<T: Scalar>(a: &DMatrix<T>, g: &DMatrix<T>) -> f64 {
    frobenius(&(a * g * a - a))
}

/// Decides each defining identity by `residual <= tol_identity * max(1, ||rhs||_F)`.
pub fn classify<T: Scalar>(a: &DMatrix<T>, g: &DMatrix<T>, tol: &Tolerances) -> Result<GInverseClassification> {
    check_shapes(a, g)?;
    let ga = g * a;
    let ag = a * g;
    let residuals = [
        scaled(frobenius(&(&ag * a - a)), frobenius(a)),
        scaled(frobenius(&(&ga * g - g)), frobenius(g)),
        scaled(frobenius(&(ga.adjoint() - &ga)), frobenius(&ga)),
        scaled(frobenius(&(ag.adjoint() - &ag)), frobenius(&ag)),
    ];
    let pass = |i: usize| residuals[i] <= tol.tol_identity;
    let is_ginverse = pass(0);
    let reflexive = is_ginverse && pass(1);
    let left_symmetric = is_ginverse && pass(2);
    let right_symmetric = is_ginverse && pass(3);
    Ok(GInverseClassification {
        is_ginverse,
        reflexive,
        left_symmetric,
        right_symmetric,
        moore_penrose: reflexive && left_symmetric && right_symmetric,
        residuals,
    })
}

/// The idempotents `AG` (onto `Im A`) and `GA` (along `Ker A`).
pub fn projectors_of<T: Scalar>(a: &DMatrix<T>, g: &DMatrix<T>, tol: &Tolerances) -> Result<(DMatrix<T>, DMatrix<T>)> {
    check_shapes(a, g)?;
    let residual = scaled(ginverse_residual(a, g), frobenius(a));
    if residual > tol.tol_identity {
        return Err(Error::NotGeneralizedInverse { residual });
    }
    Ok((a * g, g * a))
}

/// A generalized inverse with `A G = P` for a prescribed projector `P` onto `Im A`.
pub fn ginverse_with_projector<T: Scalar>(a: &DMatrix<T>, p: &DMatrix<T>, tol: &Tolerances) -> Result<DMatrix<T>> {
    let d2 = a.nrows();
    if p.shape() != (d2, d2) {
        return Err(Error::DimensionMismatch(format!(
            "projector must be {d2}x{d2}, got {:?}",
            p.shape()
        )));
    }
    let idem = scaled(frobenius(&(p * p - p)), frobenius(p));
    if idem > tol.tol_identity {
        return Err(Error::NotAProjector { residual: idem });
    }
    if !crate::linalg::same_column_space(a, p, tol.tol_rank) {
        return Err(Error::ImageMismatch);
    }
    let s = svd(a, tol.tol_rank);
    let r = s.rank;
    // P0 = U^dagger P U = [[1, X], [0, 0]] because Im P = span of the first r columns of U.
    let p0 = s.u.adjoint() * p * &s.u;
    let x = p0.view((0, r), (r, d2 - r)).into_owned();
    let dinv = DMatrix::from_fn(r, r, |i, j| {
        if i == j {
            T::from_real(1.0 / s.singular_values[i])
        } else {
            T::zero()
        }
    });
    let params = GInverseParams {
        x: &dinv * x,
        y: DMatrix::zeros(a.ncols() - r, r),
        z: DMatrix::zeros(a.ncols() - r, d2 - r),
    };
    build_ginverse(&s, &params)
}

fn normalize_columns<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    let mut out = m.clone();
    for mut c in out.column_iter_mut() {
        let n = c.norm();
        if n > 0.0 {
            c.unscale_mut(n);
        }
    }
    out
}

fn hstack<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let mut m = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    m.columns_mut(0, a.ncols()).copy_from(a);
    m.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    m
}

/// Checks that the columns of `a` and `b` together form a basis of the whole
/// space with a non-degenerate split.
fn check_direct_sum<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>, what: &str) -> Result<DMatrix<T>> {
    let n = a.nrows();
    if a.ncols() + b.ncols() != n {
        return Err(Error::NotAComplement(format!(
            "{what}: dimensions {} + {} do not add up to {n}",
            a.ncols(),
            b.ncols()
        )));
    }
    let m = hstack(&normalize_columns(a), &normalize_columns(b));
    if n == 0 {
        return Ok(m);
    }
    let values: Vec<f64> = m.clone().singular_values().iter().cloned().collect();
    let smax = values.iter().cloned().fold(0.0, f64::max);
    let smin = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin < TRANSVERSAL_MIN_SINGULAR * smax.max(1.0) {
        return Err(Error::NotAComplement(format!(
            "{what}: smallest singular value of the stacked basis is {smin:e}"
        )));
    }
    Ok(m)
}

/// Generalized inverse attached to a splitting of both spaces.
///
/// * `complement` (columns): a basis of a subspace `W` with `W (+) Im A` the
///   whole codomain. Every `y` splits as `y = y1 + y0` with `y1` in `Im A`.
/// * `domain_complement` (columns): a basis of a subspace `V` with
///   `Ker A (+) V` the whole domain; `G y1` is the unique preimage of `y1`
///   in `V`. Defaults to `Im A^dagger`, the orthogonal complement of the kernel.
/// * `b`: the map `W -> Ker A`, as a matrix acting on the coordinates of
///   `y0` in the `complement` basis. Defaults to zero.
///
/// The result is `G y = x1 + B(y0)`.
pub fn transversal_ginverse<T: Scalar>(
    a: &DMatrix<T>,
    complement: &DMatrix<T>,
    domain_complement: Option<&DMatrix<T>>,
    b: Option<&DMatrix<T>>,
    tol: &Tolerances,
) -> Result<DMatrix<T>> {
    let (d2, d1) = a.shape();
    if complement.nrows() != d2 {
        return Err(Error::DimensionMismatch(format!(
            "complement vectors have length {}, expected {d2}",
            complement.nrows()
        )));
    }
    let s = svd(a, tol.tol_rank);
    let r = s.rank;
    let image = s.image();
    let frame = check_direct_sum(&image, complement, "codomain complement")?;
    let frame_inv = frame
        .try_inverse()
        .ok_or_else(|| Error::NotAComplement("stacked codomain basis is singular".into()))?;
    // Rows of frame_inv were computed for normalized complement columns; undo
    // the normalization so coordinates refer to the caller's basis vectors.
    let mut coords_map = frame_inv;
    for (j, c) in complement.column_iter().enumerate() {
        let n = c.norm();
        if n > 0.0 {
            coords_map.row_mut(r + j).unscale_mut(n);
        }
    }

    let vb = match domain_complement {
        Some(v) => {
            if v.nrows() != d1 {
                return Err(Error::DimensionMismatch(format!(
                    "domain complement vectors have length {}, expected {d1}",
                    v.nrows()
                )));
            }
            check_direct_sum(v, &s.kernel(), "domain complement")?;
            v.clone()
        }
        None => s.coimage(),
    };
    let av = a * &vb;
    let av_pinv = moore_penrose(&av, tol.tol_rank);

    let k = complement.ncols();
    let b = match b {
        Some(b) => {
            if b.shape() != (d1, k) {
                return Err(Error::DimensionMismatch(format!(
                    "B must be {d1}x{k}, got {:?}",
                    b.shape()
                )));
            }
            let residual = scaled(frobenius(&(a * b)), frobenius(a) * frobenius(b));
            if residual > tol.tol_identity {
                return Err(Error::InvalidB { residual });
            }
            b.clone()
        }
        None => DMatrix::zeros(d1, k),
    };
    let lift = &vb * av_pinv * &image;
    Ok(hstack(&lift, &b) * coords_map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, ComplexMatrix, RealMatrix};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn invertible_matrix_gives_its_inverse() {
        let a = RealMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0]);
        let s = svd(&a, 1e-10);
        assert_eq!(s.rank, 3);
        let g = build_ginverse(&s, &GInverseParams::zeros(&s)).unwrap();
        let inv = a.clone().try_inverse().unwrap();
        assert!(frobenius(&(g - inv)) < 1e-12);
    }

    #[test]
    fn moore_penrose_of_diagonal_and_jordan_block() {
        let a = RealMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let g = moore_penrose(&a, 1e-10);
        assert!(frobenius(&(g - RealMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0]))) < 1e-15);
        let j = RealMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let g = moore_penrose(&j, 1e-10);
        assert!(frobenius(&(g - j.transpose())) < 1e-15);
    }

    #[test]
    fn block_conditions_drive_flags() {
        let left = ComplexMatrix::from_fn(4, 2, |i, j| c64((i + 2 * j) as f64 - 1.5, (i * j) as f64 * 0.5));
        let right = ComplexMatrix::from_fn(2, 3, |i, j| c64(if i == j { 1.0 } else { 0.3 }, (i + j) as f64 * 0.7));
        let a = left * right;
        let s = svd(&a, 1e-10);
        let r = s.rank;
        assert_eq!(r, 2);
        let x = ComplexMatrix::from_element(r, 4 - r, c64(0.3, -0.2));
        let y = ComplexMatrix::from_element(3 - r, r, c64(-0.5, 0.1));

        let g = build_ginverse(&s, &GInverseParams::reflexive(&s, x.clone(), y.clone())).unwrap();
        let c = classify(&a, &g, &tol()).unwrap();
        assert!(c.is_ginverse && c.reflexive && !c.left_symmetric && !c.right_symmetric);

        let params = GInverseParams {
            x: x.clone(),
            y: ComplexMatrix::zeros(3 - r, r),
            z: ComplexMatrix::zeros(3 - r, 4 - r),
        };
        let g = build_ginverse(&s, &params).unwrap();
        let c = classify(&a, &g, &tol()).unwrap();
        assert!(c.left_symmetric && !c.right_symmetric);

        let g = moore_penrose(&a, 1e-10);
        let c = classify(&a, &g, &tol()).unwrap();
        assert!(c.moore_penrose);
    }

    #[test]
    fn classify_rejects_wrong_shape() {
        let a = RealMatrix::zeros(2, 3);
        assert!(classify(&a, &RealMatrix::zeros(2, 3), &tol()).is_err());
    }

    #[test]
    fn projectors_of_invertible_are_identity() {
        let a = RealMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let g = a.clone().try_inverse().unwrap();
        let (ag, ga) = projectors_of(&a, &g, &tol()).unwrap();
        assert!(frobenius(&(ag - RealMatrix::identity(2, 2))) < 1e-14);
        assert!(frobenius(&(ga - RealMatrix::identity(2, 2))) < 1e-14);
        let bad = RealMatrix::zeros(2, 2);
        assert!(matches!(
            projectors_of(&a, &bad, &tol()),
            Err(Error::NotGeneralizedInverse { .. })
        ));
    }

    #[test]
    fn projector_matching_rejects_bad_inputs() {
        let a = RealMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let not_idempotent = RealMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            ginverse_with_projector(&a, &not_idempotent, &tol()),
            Err(Error::NotAProjector { .. })
        ));
        let wrong_image = RealMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            ginverse_with_projector(&a, &wrong_image, &tol()),
            Err(Error::ImageMismatch)
        ));
        let oblique = RealMatrix::from_row_slice(2, 2, &[1.0, 5.0, 0.0, 0.0]);
        let g = ginverse_with_projector(&a, &oblique, &tol()).unwrap();
        assert!(frobenius(&(&a * &g - oblique)) < 1e-14);
        assert!(ginverse_residual(&a, &g) < 1e-14);
    }

    #[test]
    fn transversal_rejects_non_complement_and_bad_b() {
        let a = RealMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let inside_image = RealMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        assert!(matches!(
            transversal_ginverse(&a, &inside_image, None, None, &tol()),
            Err(Error::NotAComplement(_))
        ));
        let comp = RealMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let b_bad = RealMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        assert!(matches!(
            transversal_ginverse(&a, &comp, None, Some(&b_bad), &tol()),
            Err(Error::InvalidB { .. })
        ));
        let b_ok = RealMatrix::from_row_slice(2, 1, &[0.0, 2.0]);
        let g = transversal_ginverse(&a, &comp, None, Some(&b_ok), &tol()).unwrap();
        assert!(ginverse_residual(&a, &g) < 1e-14);
        // y = (1, 1) lies in the complement: G y = B(1) = (0, 2).
        let y = nalgebra::DVector::from_vec(vec![1.0, 1.0]);
        assert!(((&g * y) - nalgebra::DVector::from_vec(vec![0.0, 2.0])).norm() < 1e-14);
    }

    #[test]
    fn transversal_of_invertible_is_inverse() {
        let a = RealMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let g = transversal_ginverse(&a, &RealMatrix::zeros(2, 0), None, None, &tol()).unwrap();
        assert!(frobenius(&(g - a.try_inverse().unwrap())) < 1e-13);
    }
}
