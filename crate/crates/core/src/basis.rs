//! Orthonormal Hermitian operator bases.
//!
//! The basis always starts with the scaled identity `1/sqrt(d)`. For `d = 2`
//! the remaining elements are `sigma_k / sqrt(2)`, so the transfer matrix
//! `Tr(tau_a Phi(tau_b))` coincides entrywise with the Pauli convention
//! `1/2 Tr(sigma_a Phi(sigma_b))`. For `d > 2` the traceless elements follow
//! the generalized Gell-Mann construction in a fixed order: symmetric,
//! antisymmetric, then diagonal.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{c64, vec_row_major, ComplexMatrix, C64};

#[derive(Debug, Clone)]
pub struct HermitianBasis {
    dim: usize,
    elements: Vec<ComplexMatrix>,
    /// Columns are the row-major vectorizations of the elements.
    frame: ComplexMatrix,
}

impl HermitianBasis {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(format!(
                "Hermitian basis needs d >= 2, got {dim}"
            )));
        }
        Ok(Self::build(dim))
    }

    /// Like [`HermitianBasis::new`] but also accepts `d = 1` (the trivial
    /// space), which rectangular maps onto scalars need.
    pub(crate) fn any(dim: usize) -> Self {
        Self::build(dim.max(1))
    }

    fn build(dim: usize) -> Self {
        let d = dim;
        let mut elements = Vec::with_capacity(d * d);
        elements.push(ComplexMatrix::identity(d, d).unscale((d as f64).sqrt()));
        let r2 = std::f64::consts::FRAC_1_SQRT_2;
        for j in 0..d {
            for k in (j + 1)..d {
                let mut m = ComplexMatrix::zeros(d, d);
                m[(j, k)] = c64(r2, 0.0);
                m[(k, j)] = c64(r2, 0.0);
                elements.push(m);
            }
        }
        for j in 0..d {
            for k in (j + 1)..d {
                let mut m = ComplexMatrix::zeros(d, d);
                m[(j, k)] = c64(0.0, -r2);
                m[(k, j)] = c64(0.0, r2);
                elements.push(m);
            }
        }
        for l in 1..d {
            let norm = ((l * (l + 1)) as f64).sqrt();
            let mut m = ComplexMatrix::zeros(d, d);
            for i in 0..l {
                m[(i, i)] = c64(1.0 / norm, 0.0);
            }
            m[(l, l)] = c64(-(l as f64) / norm, 0.0);
            elements.push(m);
        }
        let cols: Vec<DVector<C64>> = elements.iter().map(vec_row_major).collect();
        let frame = ComplexMatrix::from_columns(&cols);
        Self {
            dim,
            elements,
            frame,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn element(&self, alpha: usize) -> &ComplexMatrix {
        &self.elements[alpha]
    }

    /// Unitary whose columns are `vec(tau_alpha)`.
    pub fn frame(&self) -> &ComplexMatrix {
        &self.frame
    }

    /// Coordinates `Tr(tau_alpha X)`.
    pub fn coordinates(&self, x: &ComplexMatrix) -> DVector<C64> {
        self.frame.adjoint() * vec_row_major(x)
    }

    /// Operator `sum_alpha c_alpha tau_alpha`.
    pub fn operator(&self, coords: &DVector<C64>) -> ComplexMatrix {
        let v = &self.frame * coords;
        ComplexMatrix::from_row_slice(self.dim, self.dim, v.as_slice())
    }

    pub fn operator_real(&self, coords: &[f64]) -> ComplexMatrix {
        let c = DVector::from_iterator(coords.len(), coords.iter().map(|&x| c64(x, 0.0)));
        self.operator(&c)
    }

    /// Hilbert-Schmidt Gram matrix `Tr(tau_a tau_b)`.
    pub fn gram(&self) -> ComplexMatrix {
        self.frame.adjoint() * &self.frame
    }
}

/// Density matrix `(1 + r . sigma) / 2` from a Bloch vector.
pub fn bloch_state(r: [f64; 3]) -> ComplexMatrix {
    let mut rho = crate::linalg::pauli(0);
    for (k, &rk) in r.iter().enumerate() {
        rho += crate::linalg::pauli(k + 1).scale(rk);
    }
    rho.scale(0.5)
}
