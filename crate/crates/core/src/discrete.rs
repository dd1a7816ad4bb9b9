//! Time-discrete dynamical maps `Lambda_n: L(H_S) -> L(H_n)`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{kernel_inclusion, random_hermitian, sample_rng, trace_norm_herm};
use crate::error::{Error, Result};
use crate::ginverse::moore_penrose;
use crate::io::{serde_matrix, TransferJson};
use crate::linalg::{eig_herm, frobenius, svd, ComplexMatrix, RealMatrix};
use crate::tol::Tolerances;
use crate::transfer::TransferMatrix;

/// `Lambda_0 = id, Lambda_1, ..., Lambda_N`, all acting on `L(H_S)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFamily {
    steps: Vec<TransferMatrix>,
}

impl DiscreteFamily {
    /// Prepends `Lambda_0 = id` to the given maps.
    pub fn new(dim_s: usize, maps: Vec<TransferMatrix>) -> Result<Self> {
        if let Some(m) = maps.iter().find(|m| m.dim_in() != dim_s) {
            return Err(Error::DimensionMismatch(format!(
                "every step must act on dimension {dim_s}, got {}",
                m.dim_in()
            )));
        }
        let mut steps = vec![TransferMatrix::identity(dim_s)];
        steps.extend(maps);
        Ok(Self { steps })
    }

    pub fn dim_s(&self) -> usize {
        self.steps[0].dim_in()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self, n: usize) -> Result<&TransferMatrix> {
        self.steps
            .get(n)
            .ok_or_else(|| Error::OrderingViolated(format!("step {n} out of range 0..{}", self.steps.len())))
    }

    pub fn steps(&self) -> &[TransferMatrix] {
        &self.steps
    }

    /// Whether `Ker Lambda_i` is contained in `Ker Lambda_j` for all `i < j`.
    pub fn is_divisible(&self, tol: &Tolerances) -> Result<bool> {
        for i in 0..self.steps.len() {
            for j in i + 1..self.steps.len() {
                if !kernel_inclusion(&self.steps[i], &self.steps[j], tol)?.holds {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteFamilyJson {
    pub dim_s: usize,
    pub steps: Vec<TransferJson>,
}

pub fn parse_discrete(text: &str) -> Result<DiscreteFamily> {
    let j: DiscreteFamilyJson = serde_json::from_str(text).map_err(|e| Error::Parse(format!("discrete family: {e}")))?;
    let maps = j.steps.into_iter().map(TransferMatrix::try_from).collect::<Result<Vec<_>>>()?;
    DiscreteFamily::new(j.dim_s, maps)
}

/// Right inverses `R = Lambda^+ + sum_k theta_k D_k` of a map with full image,
/// where the `D_k` map into the kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct RightInverseFamily {
    pub base: RealMatrix,
    pub directions: Vec<RealMatrix>,
}

impl RightInverseFamily {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn at(&self, theta: &[f64]) -> Result<RealMatrix> {
        if theta.len() != self.len() {
            return Err(Error::DimensionMismatch(format!("{} parameters expected, got {}", self.len(), theta.len())));
        }
        Ok(self.directions.iter().zip(theta).fold(self.base.clone(), |acc, (d, &x)| acc + d * x))
    }
}

pub fn right_inverse(map: &TransferMatrix, tol: &Tolerances) -> Result<RightInverseFamily> {
    let m = map.matrix();
    let required = m.nrows();
    let s = svd(m, tol.tol_rank);
    if s.rank < required {
        return Err(Error::NoRightInverse { rank: s.rank, required });
    }
    let base = moore_penrose(m, tol.tol_rank);
    let kernel = s.kernel();
    let mut directions = Vec::with_capacity(kernel.ncols() * required);
    for k in 0..kernel.ncols() {
        for j in 0..required {
            let mut d = RealMatrix::zeros(m.ncols(), required);
            d.column_mut(j).copy_from(&kernel.column(k));
            directions.push(d);
        }
    }
    Ok(RightInverseFamily { base, directions })
}

/// Generalized inverse of `Lambda_i` used for a discrete propagator.
#[derive(Debug, Clone, PartialEq)]
pub enum DiscreteInverse {
    MoorePenrose,
    /// Member of the right-inverse family at the given parameters.
    Right(Vec<f64>),
    Custom(RealMatrix),
}

/// `V_{j,i} = Lambda_j Lambda_i^-`.
pub fn discrete_propagator(
    family: &DiscreteFamily,
    i: usize,
    j: usize,
    inverse: &DiscreteInverse,
    tol: &Tolerances,
) -> Result<TransferMatrix> {
    if j < i {
        return Err(Error::OrderingViolated(format!("propagator from step {i} to earlier step {j}")));
    }
    let (li, lj) = (family.step(i)?, family.step(j)?);
    let ki = kernel_inclusion(li, lj, tol)?;
    if !ki.holds {
        return Err(Error::NotDivisible { residual: ki.residual });
    }
    let g = match inverse {
        DiscreteInverse::MoorePenrose => moore_penrose(li.matrix(), tol.tol_rank),
        DiscreteInverse::Right(theta) => right_inverse(li, tol)?.at(theta)?,
        DiscreteInverse::Custom(g) => {
            let a = li.matrix();
            if g.shape() != (a.ncols(), a.nrows()) {
                return Err(Error::DimensionMismatch("inverse has the wrong shape".into()));
            }
            let r = frobenius(&(a * g * a - a));
            if r > tol.tol_identity * frobenius(a).max(1.0) {
                return Err(Error::NotGeneralizedInverse { residual: r });
            }
            g.clone()
        }
    };
    let v = lj.matrix() * g;
    let residual = frobenius(&(&v * li.matrix() - lj.matrix()));
    if residual > 1e-9 * frobenius(lj.matrix()).max(1.0) {
        return Err(Error::NotDivisible { residual });
    }
    TransferMatrix::rectangular(li.dim_out(), lj.dim_out(), v)
}

/// Two weighted states `(p_1, rho_1), (p_2, rho_2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble2 {
    pub priors: [f64; 2],
    #[serde(with = "serde_matrix")]
    pub rho1: ComplexMatrix,
    #[serde(with = "serde_matrix")]
    pub rho2: ComplexMatrix,
}

const ENSEMBLE_TOL: f64 = 1e-9;

fn check_state(rho: &ComplexMatrix) -> Result<()> {
    if !rho.is_square() {
        return Err(Error::InvalidEnsemble("state is not square".into()));
    }
    let (values, _) = eig_herm(rho, ENSEMBLE_TOL).map_err(|e| Error::InvalidEnsemble(e.to_string()))?;
    if values.first().is_some_and(|&v| v < -ENSEMBLE_TOL) {
        return Err(Error::InvalidEnsemble("state is not positive semidefinite".into()));
    }
    if (rho.trace().re - 1.0).abs() > ENSEMBLE_TOL {
        return Err(Error::InvalidEnsemble("state does not have unit trace".into()));
    }
    Ok(())
}

impl Ensemble2 {
    pub fn new(p1: f64, rho1: ComplexMatrix, rho2: ComplexMatrix) -> Result<Self> {
        if !(0.0..=1.0).contains(&p1) {
            return Err(Error::InvalidEnsemble(format!("prior {p1} outside [0, 1]")));
        }
        if rho1.shape() != rho2.shape() {
            return Err(Error::InvalidEnsemble("states act on different spaces".into()));
        }
        check_state(&rho1)?;
        check_state(&rho2)?;
        Ok(Self { priors: [p1, 1.0 - p1], rho1, rho2 })
    }

    pub fn from_members(members: Vec<(f64, ComplexMatrix)>) -> Result<Self> {
        match members.len() {
            2 => {
                let mut it = members.into_iter();
                let (p1, r1) = it.next().expect("two");
                let (p2, r2) = it.next().expect("two");
                if (p1 + p2 - 1.0).abs() > ENSEMBLE_TOL {
                    return Err(Error::InvalidEnsemble(format!("priors sum to {}", p1 + p2)));
                }
                Self::new(p1, r1, r2)
            }
            n if n > 2 => Err(Error::MultiStateUnsupported(n)),
            n => Err(Error::InvalidEnsemble(format!("{n} members"))),
        }
    }

    pub fn map(&self, channel: &TransferMatrix) -> Self {
        let s = channel.superoperator();
        Self { priors: self.priors, rho1: s.apply(&self.rho1), rho2: s.apply(&self.rho2) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Helstrom {
    /// `1/2 || p_1 rho_1 - p_2 rho_2 ||_1`.
    pub trace_norm_term: f64,
    /// Optimal success probability `1/2 (1 + || p_1 rho_1 - p_2 rho_2 ||_1)`.
    pub success_probability: f64,
}

pub fn helstrom(e: &Ensemble2) -> Helstrom {
    let x = &e.rho1 * crate::linalg::c64(e.priors[0], 0.0) - &e.rho2 * crate::linalg::c64(e.priors[1], 0.0);
    let n = trace_norm_herm(&x);
    Helstrom { trace_norm_term: 0.5 * n, success_probability: 0.5 * (1.0 + n) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainViolation {
    pub sample: usize,
    /// The norm grows from step `step - 1` to `step`.
    pub step: usize,
    pub increase: f64,
    #[serde(with = "serde_matrix")]
    pub x: ComplexMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoDecreasingReport {
    pub ancilla: usize,
    pub samples: usize,
    /// `norms[i][n] = ||(id (x) Lambda_n)(X_i)||_1`.
    pub norms: Vec<Vec<f64>>,
    pub violations: Vec<ChainViolation>,
}

impl InfoDecreasingReport {
    pub fn information_decreasing(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Samples unit-trace-norm Hermitian `X` on `C^ancilla (x) H_S` and checks that
/// `||(id (x) Lambda_n)(X)||_1` never increases along the steps.
pub fn info_decreasing_check(
    family: &DiscreteFamily,
    ancilla: usize,
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<InfoDecreasingReport> {
    if ancilla == 0 {
        return Err(Error::InvalidAncilla(0));
    }
    if samples == 0 {
        return Err(Error::NoSamples);
    }
    let sups: Vec<_> = family.steps.iter().map(|s| s.superoperator()).collect();
    let n = ancilla * family.dim_s();
    let per_sample: Vec<(ComplexMatrix, Vec<f64>)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let mut x = random_hermitian(n, false, &mut rng);
            let norm = trace_norm_herm(&x);
            if norm > 0.0 {
                x.unscale_mut(norm);
            }
            let norms = sups.iter().map(|s| trace_norm_herm(&s.apply_with_ancilla(ancilla, &x))).collect();
            (x, norms)
        })
        .collect();
    let mut violations = Vec::new();
    for (i, (x, norms)) in per_sample.iter().enumerate() {
        for k in 1..norms.len() {
            let inc = norms[k] - norms[k - 1];
            if inc > tol.tol_mono {
                violations.push(ChainViolation { sample: i, step: k, increase: inc, x: x.clone() });
            }
        }
    }
    Ok(InfoDecreasingReport {
        ancilla,
        samples,
        norms: per_sample.into_iter().map(|(_, n)| n).collect(),
        violations,
    })
}

/// Channel with `kraus_rank` Kraus operators cut from a Haar-like random
/// isometry `C^d -> C^d (x) C^kraus_rank`.
pub fn random_channel<R: Rng>(d: usize, kraus_rank: usize, rng: &mut R) -> TransferMatrix {
    let normal = StandardNormal;
    let g = ComplexMatrix::from_fn(d * kraus_rank, d, |_, _| {
        crate::linalg::c64(normal.sample(rng), normal.sample(rng))
    });
    let q = g.qr().q();
    let kraus: Vec<ComplexMatrix> = (0..kraus_rank).map(|k| q.rows(k * d, d).into_owned()).collect();
    TransferMatrix::from_action(
        d,
        d,
        |x| kraus.iter().fold(ComplexMatrix::zeros(d, d), |s, k| s + k * x * k.adjoint()),
        1e-10,
    )
    .expect("Hermiticity preserving")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, pauli};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn partial_trace_second() -> TransferMatrix {
        TransferMatrix::from_action(
            4,
            2,
            |x| ComplexMatrix::from_fn(2, 2, |i, j| x[(2 * i, 2 * j)] + x[(2 * i + 1, 2 * j + 1)]),
            1e-12,
        )
        .unwrap()
    }

    fn pure(k: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(k, k)] = c64(1.0, 0.0);
        m
    }

    #[test]
    fn partial_trace_right_inverse() {
        let tol = Tolerances::default();
        let tr = partial_trace_second();
        let fam = right_inverse(&tr, &tol).unwrap();
        assert_eq!(fam.len(), 12 * 4);
        let theta: Vec<f64> = (0..fam.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let r = fam.at(&theta).unwrap();
        assert!(frobenius(&(tr.matrix() * r - RealMatrix::identity(4, 4))) < 1e-10);
        // Tensoring with a fixed state is one of them.
        let tensor = TransferMatrix::from_action(
            2,
            4,
            |x| x.kronecker(&(ComplexMatrix::identity(2, 2) * c64(0.5, 0.0))),
            1e-12,
        )
        .unwrap();
        assert!(frobenius(&(tr.matrix() * tensor.matrix() - RealMatrix::identity(4, 4))) < 1e-12);
    }

    #[test]
    fn invertible_right_inverse_is_the_inverse() {
        let t = TransferMatrix::from_rows(2, &[&[1.0, 0.0, 0.0, 0.0], &[0.1, 0.5, 0.0, 0.0], &[0.0, 0.0, 0.5, 0.0], &[0.2, 0.0, 0.3, 0.4]]).unwrap();
        let fam = right_inverse(&t, &Tolerances::default()).unwrap();
        assert!(fam.is_empty());
        let inv = t.matrix().clone().try_inverse().unwrap();
        assert!(frobenius(&(fam.base - inv)) < 1e-12);
    }

    #[test]
    fn deficient_image_has_no_right_inverse() {
        let mut m = RealMatrix::identity(4, 4);
        m[(3, 3)] = 0.0;
        let t = TransferMatrix::new(2, m).unwrap();
        assert!(matches!(
            right_inverse(&t, &Tolerances::default()),
            Err(Error::NoRightInverse { rank: 3, required: 4 })
        ));
    }

    #[test]
    fn propagator_independent_of_right_inverse() {
        let tol = Tolerances::default();
        let tr = partial_trace_second();
        let dephase = TransferMatrix::from_action(2, 2, |x| (x + pauli(3) * x * pauli(3)) * c64(0.5, 0.0), 1e-12).unwrap();
        let family = DiscreteFamily::new(4, vec![tr.clone(), dephase.compose(&tr).unwrap()]).unwrap();
        assert!(family.is_divisible(&tol).unwrap());
        let n = right_inverse(&tr, &tol).unwrap().len();
        let reference = discrete_propagator(&family, 1, 2, &DiscreteInverse::MoorePenrose, &tol).unwrap();
        assert!(frobenius(&(reference.matrix() - dephase.matrix())) < 1e-12);
        for k in 0..5 {
            let theta: Vec<f64> = (0..n).map(|i| ((i + 7 * k) as f64).cos()).collect();
            let v = discrete_propagator(&family, 1, 2, &DiscreteInverse::Right(theta), &tol).unwrap();
            assert!(frobenius(&(v.matrix() - reference.matrix())) < 1e-12);
        }
        // Lambda_1 has a kernel, so V_{1,0} = Lambda_1 and V_{0,0} = id.
        let v00 = discrete_propagator(&family, 0, 0, &DiscreteInverse::MoorePenrose, &tol).unwrap();
        assert!(frobenius(&(v00.matrix() - RealMatrix::identity(16, 16))) < 1e-12);
        assert!(matches!(
            discrete_propagator(&family, 2, 1, &DiscreteInverse::MoorePenrose, &tol),
            Err(Error::OrderingViolated(_))
        ));
    }

    #[test]
    fn non_divisible_family_is_rejected() {
        let tol = Tolerances::default();
        let mut a = RealMatrix::identity(4, 4);
        a[(3, 3)] = 0.0;
        let mut b = RealMatrix::identity(4, 4);
        b[(2, 2)] = 0.0;
        let family = DiscreteFamily::new(2, vec![TransferMatrix::new(2, a).unwrap(), TransferMatrix::new(2, b).unwrap()]).unwrap();
        assert!(!family.is_divisible(&tol).unwrap());
        assert!(matches!(
            discrete_propagator(&family, 1, 2, &DiscreteInverse::MoorePenrose, &tol),
            Err(Error::NotDivisible { .. })
        ));
    }

    #[test]
    fn helstrom_values() {
        let same = helstrom(&Ensemble2::new(0.5, pure(0), pure(0)).unwrap());
        assert_eq!((same.trace_norm_term, same.success_probability), (0.0, 0.5));
        let orth = helstrom(&Ensemble2::new(0.5, pure(0), pure(1)).unwrap());
        assert!((orth.trace_norm_term - 0.5).abs() < 1e-15 && (orth.success_probability - 1.0).abs() < 1e-15);
        let sure = helstrom(&Ensemble2::new(1.0, pure(0), pure(1)).unwrap());
        assert!((sure.trace_norm_term - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ensemble_validation() {
        assert!(matches!(Ensemble2::new(1.5, pure(0), pure(1)), Err(Error::InvalidEnsemble(_))));
        assert!(matches!(Ensemble2::new(0.5, pure(0) * c64(2.0, 0.0), pure(1)), Err(Error::InvalidEnsemble(_))));
        let three = vec![(0.3, pure(0)), (0.3, pure(1)), (0.4, pure(0))];
        assert!(matches!(Ensemble2::from_members(three), Err(Error::MultiStateUnsupported(3))));
    }

    #[test]
    fn cumulative_channels_decrease_information() {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut maps: Vec<TransferMatrix> = Vec::new();
        let mut acc = TransferMatrix::identity(2);
        for _ in 0..4 {
            let step = random_channel(2, 2, &mut rng);
            acc = step.compose(&acc).unwrap();
            maps.push(acc.clone());
        }
        let family = DiscreteFamily::new(2, maps.clone()).unwrap();
        let report = info_decreasing_check(&family, 2, 200, 7, &tol).unwrap();
        assert!(report.information_decreasing());

        // Insert a transpose between two steps.
        let transpose = TransferMatrix::from_action(2, 2, |x| x.transpose(), 1e-12).unwrap();
        let mut bad = maps[..2].to_vec();
        bad.push(transpose.compose(&maps[1]).unwrap());
        let report = info_decreasing_check(&DiscreteFamily::new(2, bad).unwrap(), 2, 200, 7, &tol).unwrap();
        assert!(!report.information_decreasing());

        let constant = DiscreteFamily::new(2, vec![TransferMatrix::identity(2); 3]).unwrap();
        let report = info_decreasing_check(&constant, 2, 20, 1, &tol).unwrap();
        for norms in report.norms {
            assert!(norms.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-12));
        }
    }

    proptest::proptest! {
        #[test]
        fn helstrom_contracts_under_channels(seed in 0u64..1000, p in 0.0..1.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = crate::analysis::random_pure_state(2, &mut rng);
            let b = crate::analysis::random_pure_state(2, &mut rng);
            let e = Ensemble2::new(p, a, b).unwrap();
            let channel = random_channel(2, 1 + (seed as usize % 4), &mut rng);
            let before = helstrom(&e);
            let after = helstrom(&e.map(&channel));
            proptest::prop_assert!(after.trace_norm_term <= before.trace_norm_term + 1e-12);
        }
    }
}
