//! Certification of single maps and of map families.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::HermitianBasis;
use crate::error::{Error, Result};
use crate::family::MapFamily;
use crate::linalg::{c64, frobenius, svd, ComplexMatrix, RealMatrix};
use crate::tol::Tolerances;
use crate::transfer::{Superoperator, TransferMatrix};

pub const POSITIVITY_SAMPLES: usize = 1000;
pub const WITNESS_BUDGET: usize = 10_000;
const POSITIVITY_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapCertificate {
    pub dim_in: usize,
    pub dim_out: usize,
    pub trace_preserving: bool,
    pub trace_residual: f64,
    pub completely_positive: bool,
    pub min_choi_eigenvalue: f64,
    /// Ascending spectrum of the Choi matrix `sum_ij E_ij (x) Phi(E_ij)`.
    pub choi_eigenvalues: Vec<f64>,
    pub positivity_sampled: bool,
    pub positivity_samples: usize,
    pub min_sampled_output_eigenvalue: f64,
    pub rank: usize,
    #[serde(with = "crate::io::serde_matrices")]
    pub kernel_basis: Vec<ComplexMatrix>,
    #[serde(with = "crate::io::serde_matrices")]
    pub image_basis: Vec<ComplexMatrix>,
}

/// Haar-random pure state `|psi><psi|` in dimension `d`.
pub fn random_pure_state<R: Rng>(d: usize, rng: &mut R) -> ComplexMatrix {
    let v = DVector::from_fn(d, |_, _| c64(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let v = v.normalize();
    &v * v.adjoint()
}

/// Hermitian matrix with i.i.d. Gaussian entries (GUE), optionally traceless.
pub fn random_hermitian<R: Rng>(n: usize, traceless: bool, rng: &mut R) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(n, n, |_, _| c64(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let mut h = (&a + a.adjoint()).scale(0.5);
    if traceless {
        let tr = h.trace() / c64(n as f64, 0.0);
        for i in 0..n {
            h[(i, i)] -= tr;
        }
    }
    h
}

/// Trace norm of a Hermitian matrix from its spectrum.
pub fn trace_norm_herm(m: &ComplexMatrix) -> f64 {
    let sym = (m + m.adjoint()).scale(0.5);
    sym.symmetric_eigenvalues().iter().map(|x| x.abs()).sum()
}

fn basis_operators(basis: &HermitianBasis, vectors: &RealMatrix) -> Vec<ComplexMatrix> {
    vectors
        .column_iter()
        .map(|c| basis.operator_real(c.as_slice()))
        .collect()
}

pub fn certify(t: &TransferMatrix, tol: &Tolerances) -> MapCertificate {
    certify_with(t, tol, POSITIVITY_SAMPLES, POSITIVITY_SEED)
}

/// Full certificate; positivity is probed on `samples` Haar-random pure inputs.
pub fn certify_with(t: &TransferMatrix, tol: &Tolerances, samples: usize, seed: u64) -> MapCertificate {
    let choi = t.choi();
    let choi_eigenvalues = choi.eigenvalues();
    let min_choi_eigenvalue = choi_eigenvalues.first().cloned().unwrap_or(0.0);
    let completely_positive = min_choi_eigenvalue >= -tol.tol_psd;

    let sup = t.superoperator();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_out = f64::INFINITY;
    for _ in 0..samples {
        let rho = random_pure_state(t.dim_in(), &mut rng);
        let out = sup.apply(&rho);
        let sym = (&out + out.adjoint()).scale(0.5);
        let m = sym.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        min_out = min_out.min(m);
    }
    let positivity_sampled = completely_positive || min_out >= -tol.tol_psd;

    let s = svd(t.matrix(), tol.tol_rank);
    let bin = HermitianBasis::any(t.dim_in());
    let bout = HermitianBasis::any(t.dim_out());
    let trace_residual = t.trace_preservation_residual();
    MapCertificate {
        dim_in: t.dim_in(),
        dim_out: t.dim_out(),
        trace_preserving: trace_residual <= tol.tol_identity,
        trace_residual,
        completely_positive,
        min_choi_eigenvalue,
        choi_eigenvalues,
        positivity_sampled,
        positivity_samples: samples,
        min_sampled_output_eigenvalue: if samples == 0 { f64::NAN } else { min_out },
        rank: s.rank,
        kernel_basis: basis_operators(&bin, &s.kernel()),
        image_basis: basis_operators(&bout, &s.image()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelInclusion {
    pub holds: bool,
    /// `|| T_t N_s ||_F` for an orthonormal kernel basis `N_s` of `T_s`.
    pub residual: f64,
}

/// Whether `Ker T_s` is contained in `Ker T_t`, the divisibility criterion.
pub fn kernel_inclusion(ts: &TransferMatrix, tt: &TransferMatrix, tol: &Tolerances) -> Result<KernelInclusion> {
    if ts.dim_in() != tt.dim_in() {
        return Err(Error::DimensionMismatch(format!(
            "maps act on dimensions {} and {}",
            ts.dim_in(),
            tt.dim_in()
        )));
    }
    let kernel = svd(ts.matrix(), tol.tol_rank).kernel();
    let residual = frobenius(&(tt.matrix() * kernel));
    let scale = frobenius(tt.matrix()).max(1.0);
    Ok(KernelInclusion {
        holds: residual <= tol.tol_identity * scale,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub sample: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub increase: f64,
    #[serde(with = "crate::io::serde_matrix")]
    pub x: ComplexMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub ancilla: usize,
    pub times: Vec<f64>,
    pub samples: usize,
    /// `norms[i][n]`: trace norm for sample `i` at `times[n]`.
    pub norms: Vec<Vec<f64>>,
    pub violations: Vec<Violation>,
    /// Result of the local search started from the most increasing interval.
    pub refined: Option<Violation>,
    pub evaluations: usize,
}

impl MonotonicityReport {
    pub fn violated(&self) -> bool {
        !self.violations.is_empty() || self.refined.is_some()
    }

    pub fn best_increase(&self) -> f64 {
        self.violations
            .iter()
            .chain(self.refined.iter())
            .map(|v| v.increase)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

/// Samples Hermitian `X` on `C^k (x) H` and looks for grid intervals on which
/// `||(id_k (x) Lambda_t)(X)||_1` grows by more than `tol_mono`. The most
/// increasing interval is then refined by coordinate search.
pub fn monotonicity_check<F: MapFamily + ?Sized>(
    family: &F,
    ancilla: usize,
    samples: usize,
    grid: &[f64],
    seed: u64,
    tol: &Tolerances,
) -> Result<MonotonicityReport> {
    let d = family.dim();
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if samples == 0 {
        return Err(Error::NoSamples);
    }
    if ancilla != 1 && ancilla != d && ancilla != d + 1 {
        return Err(Error::InvalidAncilla(ancilla));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::OrderingViolated("grid times must be nondecreasing".into()));
    }
    let traceless = ancilla == d + 1;
    let sups: Vec<Superoperator> = grid
        .iter()
        .map(|&t| family.transfer_at(t).map(|m| m.superoperator()))
        .collect::<Result<_>>()?;
    let n = ancilla * d;

    let per_sample: Vec<(ComplexMatrix, Vec<f64>)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let mut x = random_hermitian(n, traceless, &mut rng);
            let norm = trace_norm_herm(&x);
            if norm > 0.0 {
                x.unscale_mut(norm);
            }
            let norms = sups
                .iter()
                .map(|s| trace_norm_herm(&s.apply_with_ancilla(ancilla, &x)))
                .collect();
            (x, norms)
        })
        .collect();

    let mut violations = Vec::new();
    let mut best: Option<(usize, usize, f64)> = None;
    for (i, (x, norms)) in per_sample.iter().enumerate() {
        for k in 1..norms.len() {
            let inc = norms[k] - norms[k - 1];
            if inc > tol.tol_mono {
                violations.push(Violation {
                    sample: i,
                    t_start: grid[k - 1],
                    t_end: grid[k],
                    increase: inc,
                    x: x.clone(),
                });
            }
            if best.is_none_or(|(_, _, b)| inc > b) {
                best = Some((i, k, inc));
            }
        }
    }
    let mut evaluations = samples * grid.len();

    let mut refined = None;
    if let Some((i, k, _)) = best {
        let basis = HermitianBasis::any(n);
        let (a, b) = (&sups[k - 1], &sups[k]);
        let first = usize::from(traceless);
        let mut coords: Vec<f64> = basis
            .coordinates(&per_sample[i].0)
            .iter()
            .map(|z| z.re)
            .collect();
        let objective = |c: &[f64]| -> f64 {
            let x = basis.operator_real(c);
            let norm = trace_norm_herm(&x);
            if norm == 0.0 {
                return f64::NEG_INFINITY;
            }
            (trace_norm_herm(&b.apply_with_ancilla(ancilla, &x)) - trace_norm_herm(&a.apply_with_ancilla(ancilla, &x)))
                / norm
        };
        let (value, used) = coordinate_ascent(&mut coords, first, objective, WITNESS_BUDGET, 0.25, 1e-8);
        evaluations += used;
        if value > tol.tol_mono {
            let mut x = basis.operator_real(&coords);
            let norm = trace_norm_herm(&x);
            x.unscale_mut(norm);
            refined = Some(Violation {
                sample: i,
                t_start: grid[k - 1],
                t_end: grid[k],
                increase: value,
                x,
            });
        }
    }

    Ok(MonotonicityReport {
        ancilla,
        times: grid.to_vec(),
        samples,
        norms: per_sample.into_iter().map(|(_, n)| n).collect(),
        violations,
        refined,
        evaluations,
    })
}

/// Maximizes `f` by coordinate steps of shrinking size over `coords[first..]`.
/// Returns the final value and the number of evaluations.
pub(crate) fn coordinate_ascent<F: Fn(&[f64]) -> f64>(
    coords: &mut [f64],
    first: usize,
    f: F,
    budget: usize,
    initial_step: f64,
    min_step: f64,
) -> (f64, usize) {
    let mut value = f(coords);
    let mut used = 1;
    let mut step = initial_step;
    while step > min_step && used < budget {
        let mut improved = false;
        for j in first..coords.len() {
            for dir in [1.0, -1.0] {
                if used >= budget {
                    break;
                }
                let old = coords[j];
                coords[j] = old + dir * step;
                let v = f(coords);
                used += 1;
                if v > value {
                    value = v;
                    improved = true;
                    break;
                }
                coords[j] = old;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (value, used)
}

/// Largest increase of `||(id_k (x) Phi)(X)||_1 - ||X||_1` over sampled `X`,
/// a quick contraction probe for a single map.
pub fn max_norm_increase(t: &TransferMatrix, ancilla: usize, samples: usize, seed: u64) -> f64 {
    let sup = t.superoperator();
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let x = random_hermitian(ancilla * t.dim_in(), false, &mut rng);
            trace_norm_herm(&sup.apply_with_ancilla(ancilla, &x)) - trace_norm_herm(&x)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}
