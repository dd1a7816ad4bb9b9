//! Closed-form qubit dynamical maps.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::MapFamily;
use crate::linalg::RealMatrix;
use crate::models::quad::integrate;
use crate::models::scalar::{ScalarFn, ScalarFnJson};
use crate::transfer::TransferMatrix;

const QUAD_TOL: f64 = 1e-10;

/// A rate `gamma(t)` with optional closed-form integral and divergence time
/// (from which on the integral is `+inf`).
#[derive(Debug, Clone)]
pub struct RateFn {
    pub rate: ScalarFn,
    pub integral: Option<ScalarFn>,
    pub diverges_at: Option<f64>,
}

impl RateFn {
    pub fn new(rate: ScalarFn) -> Self {
        Self { rate, integral: None, diverges_at: None }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            rate: ScalarFn::Constant(c),
            integral: Some(ScalarFn::custom(move |t| c * t)),
            diverges_at: None,
        }
    }

    pub fn with_integral(mut self, integral: ScalarFn) -> Self {
        self.integral = Some(integral);
        self
    }

    pub fn diverging_at(mut self, t: f64) -> Self {
        self.diverges_at = Some(t);
        self
    }

    pub fn is_divergent(&self, t: f64) -> bool {
        self.diverges_at.is_some_and(|d| t >= d)
    }

    /// `int_0^t gamma`.
    pub fn integral_at(&self, t: f64) -> Result<f64> {
        if self.is_divergent(t) {
            return Ok(f64::INFINITY);
        }
        let v = match &self.integral {
            Some(g) => g.eval(t) - g.eval(0.0),
            None => integrate(|s| self.rate.eval(s), 0.0, t, QUAD_TOL)?,
        };
        if !v.is_finite() {
            return Err(Error::ModelInconsistency(format!(
                "rate integral is {v} at t = {t}, before any declared divergence"
            )));
        }
        Ok(v)
    }
}

/// Fixed point of the attractor model, fixed or time dependent (Bloch vector).
#[derive(Clone)]
pub enum Omega {
    Fixed([f64; 3]),
    Varying(Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>),
}

impl fmt::Debug for Omega {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Omega::Fixed(r) => write!(f, "Fixed({r:?})"),
            Omega::Varying(_) => write!(f, "Varying"),
        }
    }
}

impl Omega {
    pub fn at(&self, t: f64) -> [f64; 3] {
        match self {
            Omega::Fixed(r) => *r,
            Omega::Varying(f) => f(t),
        }
    }
}

#[derive(Debug, Clone)]
pub enum ModelSpec {
    /// `Lambda_t(X) = (1 - f) X + f omega_t Tr X`, `f = 1` from `t_star` on.
    GlobalAttractor { f: ScalarFn, omega: Omega, t_star: f64 },
    /// Diagonal `(1, lambda_1, lambda_2, lambda_3)` with `lambda_i = exp(-Gamma_j - Gamma_k)`.
    PauliChannel { gammas: [RateFn; 3] },
    /// `Lambda_t = (1 - f) id + f Psi`, `f = 1` from `t_star` on.
    NonDiagonal { f: ScalarFn, t_star: f64 },
    PhaseCovariant {
        gamma_plus: RateFn,
        gamma_minus: RateFn,
        gamma_3: RateFn,
        /// Closed form of `G(t) = 1/2 int_0^t exp(Gamma) gamma_-`.
        g_integral: Option<ScalarFn>,
    },
}

/// The rank-two channel with a single off-diagonal entry, `sigma_3 -> sigma_1`.
pub fn psi() -> TransferMatrix {
    let mut m = RealMatrix::zeros(4, 4);
    m[(0, 0)] = 1.0;
    m[(1, 3)] = 1.0;
    TransferMatrix::new(2, m).expect("4x4")
}

fn saturating(f: &ScalarFn, t_star: f64, t: f64) -> f64 {
    if t >= t_star {
        1.0
    } else {
        f.eval(t)
    }
}

/// Integrals entering the phase-covariant closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseCovariantIntegrals {
    pub gamma: f64,
    pub gamma_3: f64,
    pub g: f64,
}

impl ModelSpec {
    pub fn global_attractor(f: ScalarFn, omega: [f64; 3], t_star: f64) -> Result<Self> {
        let spec = ModelSpec::GlobalAttractor { f, omega: Omega::Fixed(omega), t_star };
        spec.validate()?;
        Ok(spec)
    }

    pub fn non_diagonal(f: ScalarFn, t_star: f64) -> Result<Self> {
        let spec = ModelSpec::NonDiagonal { f, t_star };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::GlobalAttractor { f, omega, t_star } => {
                check_profile(f, *t_star)?;
                if let Omega::Fixed(r) = omega {
                    let n = r.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if n > 1.0 + 1e-12 {
                        return Err(Error::ModelInconsistency(format!("omega Bloch vector has length {n} > 1")));
                    }
                }
                Ok(())
            }
            ModelSpec::NonDiagonal { f, t_star } => check_profile(f, *t_star),
            _ => Ok(()),
        }
    }

    /// First divergence of `Gamma_3` and of `Gamma`, if declared.
    pub fn divergence_times(&self) -> (Option<f64>, Option<f64>) {
        match self {
            ModelSpec::PhaseCovariant { gamma_plus, gamma_minus, gamma_3, .. } => {
                let t2 = match (gamma_plus.diverges_at, gamma_minus.diverges_at) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                };
                (gamma_3.diverges_at, t2)
            }
            ModelSpec::PauliChannel { gammas } => {
                let first = gammas.iter().filter_map(|g| g.diverges_at).fold(None, |acc: Option<f64>, x| {
                    Some(acc.map_or(x, |a| a.min(x)))
                });
                (first, None)
            }
            ModelSpec::GlobalAttractor { t_star, .. } | ModelSpec::NonDiagonal { t_star, .. } => (Some(*t_star), None),
        }
    }

    /// `Gamma(t)`, `Gamma_3(t)` and `G(t)` of the phase-covariant model.
    pub fn phase_covariant_integrals(&self, t: f64) -> Result<PhaseCovariantIntegrals> {
        let ModelSpec::PhaseCovariant { gamma_plus, gamma_minus, gamma_3, g_integral } = self else {
            return Err(Error::ModelInconsistency("not a phase-covariant model".into()));
        };
        let big_gamma = |s: f64| -> Result<f64> { Ok(0.5 * (gamma_plus.integral_at(s)? + gamma_minus.integral_at(s)?)) };
        let gamma = big_gamma(t)?;
        let gamma_3v = gamma_3.integral_at(t)?;
        let g = if !gamma.is_finite() {
            f64::INFINITY
        } else if let Some(gf) = g_integral {
            gf.eval(t) - gf.eval(0.0)
        } else {
            let err = std::cell::Cell::new(None);
            let v = integrate(
                |s| match big_gamma(s) {
                    Ok(x) => 0.5 * x.exp() * gamma_minus.rate.eval(s),
                    Err(e) => {
                        err.set(Some(e));
                        f64::NAN
                    }
                },
                0.0,
                t,
                QUAD_TOL,
            );
            if let Some(e) = err.take() {
                return Err(e);
            }
            v?
        };
        Ok(PhaseCovariantIntegrals { gamma, gamma_3: gamma_3v, g })
    }

    pub fn transfer_at(&self, t: f64) -> Result<TransferMatrix> {
        if t < 0.0 || !t.is_finite() {
            return Err(Error::OrderingViolated(format!("model time must be finite and nonnegative, got {t}")));
        }
        match self {
            ModelSpec::GlobalAttractor { f, omega, t_star } => {
                let fv = saturating(f, *t_star, t);
                let w = omega.at(t);
                let mut m = RealMatrix::identity(4, 4) * (1.0 - fv);
                m[(0, 0)] = 1.0;
                for i in 0..3 {
                    m[(i + 1, 0)] = fv * w[i];
                }
                TransferMatrix::new(2, m)
            }
            ModelSpec::PauliChannel { gammas } => {
                let g = [gammas[0].integral_at(t)?, gammas[1].integral_at(t)?, gammas[2].integral_at(t)?];
                let mut m = RealMatrix::zeros(4, 4);
                m[(0, 0)] = 1.0;
                for i in 0..3 {
                    // exp(-inf) = 0 covers the saturated regime.
                    m[(i + 1, i + 1)] = (-(g[(i + 1) % 3] + g[(i + 2) % 3])).exp();
                }
                TransferMatrix::new(2, m)
            }
            ModelSpec::NonDiagonal { f, t_star } => {
                let fv = saturating(f, *t_star, t);
                let m = RealMatrix::identity(4, 4) * (1.0 - fv) + psi().into_matrix() * fv;
                TransferMatrix::new(2, m)
            }
            ModelSpec::PhaseCovariant { gamma_plus, gamma_minus, .. } => {
                let mut m = RealMatrix::zeros(4, 4);
                m[(0, 0)] = 1.0;
                if gamma_plus.is_divergent(t) || gamma_minus.is_divergent(t) {
                    m[(3, 0)] = 1.0;
                    return TransferMatrix::new(2, m);
                }
                let PhaseCovariantIntegrals { gamma, gamma_3, g } = self.phase_covariant_integrals(t)?;
                let coherence = (-(0.5 * gamma + gamma_3)).exp();
                let e = (-gamma).exp();
                m[(1, 1)] = coherence;
                m[(2, 2)] = coherence;
                m[(3, 0)] = 1.0 - e * (2.0 * g + 1.0);
                m[(3, 3)] = e;
                TransferMatrix::new(2, m)
            }
        }
    }
}

fn check_profile(f: &ScalarFn, t_star: f64) -> Result<()> {
    let f0 = f.eval(0.0);
    if f0.abs() > 1e-12 {
        return Err(Error::ModelInconsistency(format!("profile must vanish at t = 0, got f(0) = {f0}")));
    }
    if t_star.is_nan() || t_star < 0.0 {
        return Err(Error::ModelInconsistency(format!("saturation time {t_star} is invalid")));
    }
    Ok(())
}

impl MapFamily for ModelSpec {
    fn dim(&self) -> usize {
        2
    }
    fn transfer_at(&self, t: f64) -> Result<TransferMatrix> {
        ModelSpec::transfer_at(self, t)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RateJson {
    Full {
        rate: ScalarFnJson,
        #[serde(default)]
        integral: Option<ScalarFnJson>,
        #[serde(default)]
        diverges_at: Option<f64>,
    },
    Simple(ScalarFnJson),
}

impl TryFrom<RateJson> for RateFn {
    type Error = Error;

    fn try_from(j: RateJson) -> Result<Self> {
        match j {
            RateJson::Simple(ScalarFnJson::Number(c)) => Ok(RateFn::constant(c)),
            RateJson::Simple(f) => Ok(RateFn::new(f.try_into()?)),
            RateJson::Full { rate, integral, diverges_at } => Ok(RateFn {
                rate: rate.try_into()?,
                integral: integral.map(ScalarFn::try_from).transpose()?,
                diverges_at,
            }),
        }
    }
}

/// JSON model description, tagged by `"model"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelJson {
    GlobalAttractor { f: ScalarFnJson, omega: [f64; 3], t_star: f64 },
    Pauli { gammas: [RateJson; 3] },
    NonDiagonal { f: ScalarFnJson, t_star: f64 },
    PhaseCovariant {
        gamma_plus: RateJson,
        gamma_minus: RateJson,
        gamma_3: RateJson,
        #[serde(default)]
        g_integral: Option<ScalarFnJson>,
    },
}

impl TryFrom<ModelJson> for ModelSpec {
    type Error = Error;

    fn try_from(j: ModelJson) -> Result<Self> {
        let spec = match j {
            ModelJson::GlobalAttractor { f, omega, t_star } => ModelSpec::GlobalAttractor {
                f: f.try_into()?,
                omega: Omega::Fixed(omega),
                t_star,
            },
            ModelJson::Pauli { gammas } => {
                let [a, b, c] = gammas;
                ModelSpec::PauliChannel { gammas: [a.try_into()?, b.try_into()?, c.try_into()?] }
            }
            ModelJson::NonDiagonal { f, t_star } => ModelSpec::NonDiagonal { f: f.try_into()?, t_star },
            ModelJson::PhaseCovariant { gamma_plus, gamma_minus, gamma_3, g_integral } => ModelSpec::PhaseCovariant {
                gamma_plus: gamma_plus.try_into()?,
                gamma_minus: gamma_minus.try_into()?,
                gamma_3: gamma_3.try_into()?,
                g_integral: g_integral.map(ScalarFn::try_from).transpose()?,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

pub fn parse_model(text: &str) -> Result<ModelSpec> {
    let j: ModelJson = serde_json::from_str(text).map_err(|e| Error::Parse(format!("model: {e}")))?;
    j.try_into()
}
