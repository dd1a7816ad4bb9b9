//! Time-dependent GKLS generators and their time-ordered integration.

use crate::error::{Error, Result};
use crate::linalg::{c64, hermiticity_residual, pauli, ComplexMatrix};
use crate::models::ode::solve_linear;
use crate::models::scalar::ScalarFn;
use crate::transfer::TransferMatrix;

pub const DEFAULT_INTEGRATION_TOL: f64 = 1e-9;

/// `L(rho) = -i[H, rho] + sum_a gamma_a(t) (L_a rho L_a^dagger - 1/2 {L_a^dagger L_a, rho})`.
#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    pub hamiltonian: ComplexMatrix,
    pub dissipators: Vec<(ComplexMatrix, ScalarFn)>,
}

/// `|0><1|`, raising in the convention where `|0>` is the vacuum.
pub fn sigma_plus() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)])
}

pub fn sigma_minus() -> ComplexMatrix {
    sigma_plus().adjoint()
}

fn half(f: &ScalarFn) -> ScalarFn {
    match f {
        ScalarFn::Constant(c) => ScalarFn::Constant(0.5 * c),
        other => {
            let g = other.clone();
            ScalarFn::custom(move |t| 0.5 * g.eval(t))
        }
    }
}

impl GeneratorSpec {
    pub fn new(hamiltonian: ComplexMatrix, dissipators: Vec<(ComplexMatrix, ScalarFn)>) -> Result<Self> {
        let d = hamiltonian.nrows();
        if hamiltonian.ncols() != d || d == 0 {
            return Err(Error::InvalidDimension(format!("Hamiltonian must be square, got {:?}", hamiltonian.shape())));
        }
        let residual = hermiticity_residual(&hamiltonian);
        if residual > 1e-12 * hamiltonian.iter().fold(1.0_f64, |a, z| a.max(z.norm())) {
            return Err(Error::InvalidHamiltonian { residual });
        }
        if dissipators.iter().any(|(l, _)| l.shape() != (d, d)) {
            return Err(Error::DimensionMismatch("jump operators must match the Hamiltonian".into()));
        }
        Ok(Self { hamiltonian, dissipators })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    /// `gamma_1 L_1 + gamma_2 L_2 + gamma_3 L_3` with `L_k(rho) = (sigma_k rho sigma_k - rho) / 2`.
    pub fn pauli(rates: [ScalarFn; 3]) -> Self {
        let dissipators = rates
            .iter()
            .enumerate()
            .map(|(k, g)| (pauli(k + 1), half(g)))
            .collect();
        Self { hamiltonian: ComplexMatrix::zeros(2, 2), dissipators }
    }

    /// `gamma_+ L_+ + gamma_- L_- + gamma_3 L_3` with
    /// `L_+-(rho) = (sigma_+- rho sigma_-+ - {sigma_-+ sigma_+-, rho} / 2) / 2`
    /// and `L_3(rho) = (sigma_z rho sigma_z - rho) / 2`.
    pub fn phase_covariant(gamma_plus: ScalarFn, gamma_minus: ScalarFn, gamma_3: ScalarFn) -> Self {
        Self {
            hamiltonian: ComplexMatrix::zeros(2, 2),
            dissipators: vec![
                (sigma_plus(), half(&gamma_plus)),
                (sigma_minus(), half(&gamma_minus)),
                (pauli(3), half(&gamma_3)),
            ],
        }
    }

    pub fn apply(&self, t: f64, rho: &ComplexMatrix) -> ComplexMatrix {
        let i = c64(0.0, 1.0);
        let mut out = (&self.hamiltonian * rho - rho * &self.hamiltonian) * (-i);
        for (l, rate) in &self.dissipators {
            let g = rate.eval(t);
            if g == 0.0 {
                continue;
            }
            let ld = l.adjoint();
            let ldl = &ld * l;
            let term = l * rho * &ld - (&ldl * rho + rho * &ldl) * c64(0.5, 0.0);
            out += term * c64(g, 0.0);
        }
        out
    }
}

/// Transfer representation of the generator at time `t`.
pub fn gkls_transfer(gen: &GeneratorSpec, t: f64) -> Result<TransferMatrix> {
    let d = gen.dim();
    TransferMatrix::from_action(d, d, |x| gen.apply(t, x), 1e-10)
}

/// Time-ordered solution of `dT/dt = L(t) T`, `T(0) = 1`.
pub fn integrate_map(gen: &GeneratorSpec, t: f64, tol: f64) -> Result<TransferMatrix> {
    if t < 0.0 {
        return Err(Error::OrderingViolated(format!("negative time {t}")));
    }
    let d = gen.dim();
    let n = d * d;
    let y = solve_linear(
        |s| Ok(gkls_transfer(gen, s)?.into_matrix()),
        crate::linalg::RealMatrix::identity(n, n),
        0.0,
        t,
        tol,
    )?;
    TransferMatrix::new(d, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, RealMatrix};

    #[test]
    fn dephasing_generator_is_diagonal() {
        let gen = GeneratorSpec::phase_covariant(ScalarFn::constant(0.0), ScalarFn::constant(0.0), ScalarFn::constant(1.0));
        let l = gkls_transfer(&gen, 0.0).unwrap();
        let expected = RealMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, -1.0, -1.0, 0.0]));
        assert!(frobenius(&(l.matrix() - expected)) < 1e-14);
    }

    #[test]
    fn empty_generator_is_zero_and_integrates_to_identity() {
        let gen = GeneratorSpec::new(ComplexMatrix::zeros(2, 2), vec![]).unwrap();
        assert_eq!(frobenius(gkls_transfer(&gen, 0.3).unwrap().matrix()), 0.0);
        let t = integrate_map(&gen, 2.0, 1e-9).unwrap();
        assert!(frobenius(&(t.matrix() - RealMatrix::identity(4, 4))) < 1e-14);
    }

    #[test]
    fn generators_annihilate_the_trace() {
        let h = ComplexMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.3, -0.2), c64(0.3, 0.2), c64(-0.5, 0.0)]);
        let gen = GeneratorSpec::new(h, vec![(sigma_plus(), ScalarFn::constant(0.7)), (pauli(1), ScalarFn::constant(0.2))]).unwrap();
        let l = gkls_transfer(&gen, 0.0).unwrap();
        assert!(l.matrix().row(0).iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn balanced_phase_covariant_commutes_with_z_rotations() {
        let gen = GeneratorSpec::phase_covariant(ScalarFn::constant(0.8), ScalarFn::constant(0.8), ScalarFn::constant(0.0));
        let l = gkls_transfer(&gen, 0.0).unwrap();
        let (c, s) = (0.4f64.cos(), 0.4f64.sin());
        let rot = RealMatrix::from_row_slice(4, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, c, -s, 0.0, 0.0, s, c, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(frobenius(&(l.matrix() * &rot - &rot * l.matrix())) < 1e-12);
    }

    #[test]
    fn non_hermitian_hamiltonian_is_rejected() {
        let h = ComplexMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
        assert!(matches!(GeneratorSpec::new(h, vec![]), Err(Error::InvalidHamiltonian { .. })));
    }
}
