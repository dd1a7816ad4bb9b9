//! Search of an affine family of maps for completely positive members.
//!
//! The minimum Choi eigenvalue `f(theta)` of an affine family is concave, so
//! a grid-seeded local ascent finds its maximum. Uniqueness is judged from
//! how the feasible set `{f >= -tau}` shrinks as `tau` is tightened: a
//! single feasible point gives an extent that collapses with `tau`, a set
//! with positive extent does not.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::coordinate_ascent;
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::propagator::AffineFamily;
use crate::transfer::TransferMatrix;

pub const MAX_PARAMETERS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Uniqueness {
    NotSearched,
    UniqueCptp {
        theta: Vec<f64>,
        min_choi_eigenvalue: f64,
    },
    MultiCptp {
        witnesses: Vec<Vec<f64>>,
        min_choi_eigenvalue: f64,
    },
    NoneCptp {
        best_theta: Vec<f64>,
        min_choi_eigenvalue: f64,
    },
}

impl Uniqueness {
    pub fn label(&self) -> &'static str {
        match self {
            Uniqueness::NotSearched => "not-searched",
            Uniqueness::UniqueCptp { .. } => "unique-cptp",
            Uniqueness::MultiCptp { .. } => "multi-cptp",
            Uniqueness::NoneCptp { .. } => "none-cptp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub grid_points: usize,
    pub bound: f64,
    pub max_grid: usize,
    pub random_seeds: usize,
    pub directions: usize,
    pub seed: u64,
    pub tol_psd: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            grid_points: 11,
            bound: 5.0,
            max_grid: 20_000,
            random_seeds: 4096,
            directions: 32,
            seed: 42,
            tol_psd: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub uniqueness: Uniqueness,
    pub theta_star: Vec<f64>,
    pub best_min_eigenvalue: f64,
    /// Feasible extent around `theta_star` at `tol_psd` and at `tol_psd * 1e-4`.
    pub extent: [f64; 2],
    pub evaluations: usize,
}

/// Minimum eigenvalue of the Choi matrix along an affine family.
struct ChoiObjective {
    base: ComplexMatrix,
    directions: Vec<ComplexMatrix>,
}

impl ChoiObjective {
    fn new(family: &AffineFamily) -> Result<Self> {
        let choi = |m: &crate::linalg::RealMatrix| -> Result<ComplexMatrix> {
            Ok(TransferMatrix::rectangular(family.dim_in, family.dim_out, m.clone())?.choi().matrix)
        };
        Ok(Self {
            base: choi(&family.base)?,
            directions: family.directions.iter().map(choi).collect::<Result<_>>()?,
        })
    }

    fn eval(&self, theta: &[f64]) -> f64 {
        let c = self
            .directions
            .iter()
            .zip(theta)
            .fold(self.base.clone(), |acc, (d, &x)| acc + d.scale(x));
        let sym = (&c + c.adjoint()).scale(0.5);
        sym.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

fn seeds(p: usize, cfg: &SearchConfig) -> Vec<Vec<f64>> {
    let g = cfg.grid_points.max(1);
    let full = (g as f64).powi(p as i32);
    let axis: Vec<f64> = if g == 1 {
        vec![0.0]
    } else {
        (0..g).map(|i| -cfg.bound + 2.0 * cfg.bound * i as f64 / (g - 1) as f64).collect()
    };
    if full <= cfg.max_grid as f64 {
        let total = g.pow(p as u32);
        (0..total)
            .map(|mut k| {
                (0..p)
                    .map(|_| {
                        let v = axis[k % g];
                        k /= g;
                        v
                    })
                    .collect()
            })
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        (0..cfg.random_seeds)
            .map(|_| (0..p).map(|_| rng.random_range(-cfg.bound..=cfg.bound)).collect())
            .collect()
    }
}

/// Maximizes `f` with the Nelder-Mead simplex method.
fn nelder_mead<F: Fn(&[f64]) -> f64>(f: &F, start: &[f64], step: f64, max_iter: usize) -> (Vec<f64>, f64, usize) {
    let p = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(p + 1);
    simplex.push((start.to_vec(), f(start)));
    for i in 0..p {
        let mut v = start.to_vec();
        v[i] += step;
        let fv = f(&v);
        simplex.push((v, fv));
    }
    let mut evals = p + 1;
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let spread = (simplex[0].1 - simplex[p].1).abs();
        let size = simplex[1..]
            .iter()
            .map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread < 1e-15 && size < 1e-12 {
            break;
        }
        let centroid: Vec<f64> = (0..p).map(|j| simplex[..p].iter().map(|(v, _)| v[j]).sum::<f64>() / p as f64).collect();
        let worst = simplex[p].clone();
        let along = |c: f64| -> Vec<f64> { (0..p).map(|j| centroid[j] + c * (worst.0[j] - centroid[j])).collect() };
        let xr = along(-1.0);
        let fr = f(&xr);
        evals += 1;
        if fr > simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            evals += 1;
            simplex[p] = if fe > fr { (xe, fe) } else { (xr, fr) };
        } else if fr > simplex[p - 1].1 {
            simplex[p] = (xr, fr);
        } else {
            let outside = fr > worst.1;
            let xc = if outside { along(-0.5) } else { along(0.5) };
            let fc = f(&xc);
            evals += 1;
            if (outside && fc >= fr) || (!outside && fc > worst.1) {
                simplex[p] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let v: Vec<f64> = (0..p).map(|j| best[j] + 0.5 * (entry.0[j] - best[j])).collect();
                    let fv = f(&v);
                    *entry = (v, fv);
                }
                evals += p;
            }
        }
    }
    simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
    let (x, fx) = simplex.swap_remove(0);
    (x, fx, evals)
}

/// Largest `r` in `[0, r_max]` with `f(theta + r u) >= -tau`, by bisection.
fn feasible_radius<F: Fn(&[f64]) -> f64>(f: &F, theta: &[f64], u: &[f64], tau: f64, r_max: f64) -> (f64, usize) {
    let point = |r: f64| -> Vec<f64> { theta.iter().zip(u).map(|(a, b)| a + r * b).collect() };
    if f(&point(r_max)) >= -tau {
        return (r_max, 1);
    }
    let (mut lo, mut hi) = (0.0, r_max);
    let mut evals = 1;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if f(&point(mid)) >= -tau {
            lo = mid;
        } else {
            hi = mid;
        }
        evals += 1;
        if hi - lo < 1e-14 {
            break;
        }
    }
    (lo, evals)
}

/// Searches for CPTP members of an affine family of maps, scoring each
/// member by its minimum Choi eigenvalue.
pub fn cptp_search(family: &AffineFamily, cfg: &SearchConfig) -> Result<SearchOutcome> {
    let p = family.len();
    if p > MAX_PARAMETERS {
        return Err(Error::FamilyTooLarge(p));
    }
    let objective = ChoiObjective::new(family)?;
    let f = |theta: &[f64]| objective.eval(theta);

    let starts = seeds(p, cfg);
    let scores: Vec<f64> = starts.par_iter().map(|t| f(t)).collect();
    let mut evaluations = starts.len();
    let best = (0..starts.len())
        .max_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(b.cmp(&a)))
        .expect("at least one seed");
    let mut theta = starts[best].clone();
    let mut value = scores[best];
    if p > 0 {
        let step = if cfg.grid_points > 1 { 2.0 * cfg.bound / (cfg.grid_points - 1) as f64 } else { 1.0 };
        let (x, fx, used) = nelder_mead(&f, &theta, step, 5000);
        evaluations += used;
        if fx > value {
            theta = x;
            value = fx;
        }
        let (v, used) = coordinate_ascent(&mut theta, 0, f, 20_000, step * 0.1, 1e-13);
        evaluations += used;
        value = value.max(v);
    }

    if value < -cfg.tol_psd {
        return Ok(SearchOutcome {
            uniqueness: Uniqueness::NoneCptp {
                best_theta: theta.clone(),
                min_choi_eigenvalue: value,
            },
            theta_star: theta,
            best_min_eigenvalue: value,
            extent: [0.0, 0.0],
            evaluations,
        });
    }
    if p == 0 {
        return Ok(SearchOutcome {
            uniqueness: Uniqueness::UniqueCptp {
                theta: Vec::new(),
                min_choi_eigenvalue: value,
            },
            theta_star: theta,
            best_min_eigenvalue: value,
            extent: [0.0, 0.0],
            evaluations,
        });
    }

    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..p {
        for s in [1.0, -1.0] {
            let mut u = vec![0.0; p];
            u[i] = s;
            dirs.push(u);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    for _ in 0..cfg.directions {
        let u = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal)).normalize();
        dirs.push(u.iter().cloned().collect());
    }
    let r_max = 10.0 * cfg.bound.max(1.0);
    let taus = [cfg.tol_psd, cfg.tol_psd * 1e-4];
    let mut extent = [0.0; 2];
    let mut far_dir = dirs[0].clone();
    for (k, &tau) in taus.iter().enumerate() {
        let radii: Vec<(f64, usize)> = dirs.par_iter().map(|u| feasible_radius(&f, &theta, u, tau, r_max)).collect();
        for (u, &(r, used)) in dirs.iter().zip(&radii) {
            evaluations += used;
            if r > extent[k] {
                extent[k] = r;
                if k == 1 {
                    far_dir = u.clone();
                }
            }
        }
    }

    let unique = value < -taus[1] || extent[1] <= 1e-6 || extent[1] <= 0.05 * extent[0];
    let uniqueness = if unique {
        Uniqueness::UniqueCptp {
            theta: theta.clone(),
            min_choi_eigenvalue: value,
        }
    } else {
        let other: Vec<f64> = theta.iter().zip(&far_dir).map(|(a, b)| a + extent[1] * b).collect();
        Uniqueness::MultiCptp {
            witnesses: vec![theta.clone(), other],
            min_choi_eigenvalue: value,
        }
    };
    Ok(SearchOutcome {
        uniqueness,
        theta_star: theta,
        best_min_eigenvalue: value,
        extent,
        evaluations,
    })
}
